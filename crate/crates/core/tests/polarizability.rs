//! Polarizability spectra, sign structure and magic-wavelength crossings.

use nanotrap::atom::AtomDatabase;
use nanotrap::polarizability::{
    find_magic_wavelength, polarizabilities, scalar_light_shift_spectrum, Sublevel, DEFAULT_SPECTRUM_INTENSITY,
};
use nanotrap::trap::{excited_manifold, ground_manifold};
use nanotrap::units::wavelength_to_angular_frequency;
use nanotrap::Error;

fn sign_changes(db: &AtomDatabase, lo_nm: f64, hi_nm: f64, step_nm: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    let mut l = lo_nm;
    while l <= hi_nm {
        match polarizabilities(db, ground_manifold(4.0), wavelength_to_angular_frequency(l * 1e-9)) {
            Ok(p) => {
                if let Some(v) = prev {
                    if v.signum() != p.scalar_au.signum() {
                        out.push(l);
                    }
                }
                prev = Some(p.scalar_au);
            }
            Err(Error::OnResonance { .. }) => prev = None,
            Err(e) => panic!("{e}"),
        }
        l += step_nm;
    }
    out
}

#[test]
fn ground_scalar_sign_structure() {
    let db = AtomDatabase::bundled();
    // repulsive from the blue magic bracket up to the D2 line
    assert!(sign_changes(&db, 680.0, 851.0, 0.01).is_empty());
    let p = polarizabilities(&db, ground_manifold(4.0), wavelength_to_angular_frequency(700e-9)).unwrap();
    assert!(p.scalar_au < 0.0);
    // exactly one zero crossing between the D2 and D1 lines, away from the
    // resonances themselves
    let between = sign_changes(&db, 852.5, 894.0, 0.01);
    assert_eq!(between.len(), 1, "{between:?}");
    assert!(between[0] > 860.0 && between[0] < 890.0);
}

#[test]
fn spectrum_curves_cross_at_the_red_magic_wavelength() {
    let db = AtomDatabase::bundled();
    let g = Sublevel {
        manifold: ground_manifold(4.0),
        m: 0.0,
    };
    let e = Sublevel {
        manifold: excited_manifold(4.0),
        m: 0.0,
    };
    let magic = find_magic_wavelength(&db, (930e-9, 945e-9), g, e, DEFAULT_SPECTRUM_INTENSITY).unwrap();
    let lambdas = [magic.wavelength - 1e-9, magic.wavelength, magic.wavelength + 1e-9];
    let spec = scalar_light_shift_spectrum(&db, &[g, e], &lambdas, DEFAULT_SPECTRUM_INTENSITY).unwrap();
    let diff: Vec<f64> = spec.shifts_hz.iter().map(|row| row[0] - row[1]).collect();
    assert!(diff[1].abs() < 1e-3 * spec.shifts_hz[1][0].abs());
    assert!(diff[0].signum() != diff[2].signum());
    assert!(spec.shifts_hz[1][0] < 0.0, "red magic light attracts");
}

#[test]
fn spectrum_shapes() {
    let db = AtomDatabase::bundled();
    let sublevels: Vec<Sublevel> = [3.0, 4.0]
        .iter()
        .map(|&f| Sublevel {
            manifold: ground_manifold(f),
            m: 0.0,
        })
        .chain((-4..=4).map(|m| Sublevel {
            manifold: excited_manifold(4.0),
            m: m as f64,
        }))
        .collect();
    let lambdas: Vec<f64> = (0..40).map(|i| (960.0 + 5.0 * i as f64) * 1e-9).collect();
    let spec = scalar_light_shift_spectrum(&db, &sublevels, &lambdas, DEFAULT_SPECTRUM_INTENSITY).unwrap();
    for row in &spec.shifts_hz {
        assert!(((row[0] - row[1]) / row[1]).abs() < 0.01);
        let ex = &row[2..];
        let d2: Vec<f64> = ex.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
        for w in d2.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-9 * d2[0].abs().max(1e-3));
        }
        for k in 0..4 {
            assert!((ex[k] - ex[8 - k]).abs() < 1e-9 * ex[k].abs());
        }
    }
}

#[test]
fn magic_search_rejects_inverted_or_crossing_free_brackets() {
    let db = AtomDatabase::bundled();
    let g = Sublevel {
        manifold: ground_manifold(4.0),
        m: 0.0,
    };
    let e = Sublevel {
        manifold: excited_manifold(4.0),
        m: 0.0,
    };
    for bracket in [(1000e-9, 1050e-9), (945e-9, 930e-9), (930e-9, 930e-9)] {
        let r = find_magic_wavelength(&db, bracket, g, e, DEFAULT_SPECTRUM_INTENSITY);
        assert!(matches!(r, Err(Error::NoSignChange { .. })), "{bracket:?}");
    }
}

#[test]
fn vector_polarizability_flips_with_hyperfine_level() {
    let db = AtomDatabase::bundled();
    let w = wavelength_to_angular_frequency(687e-9);
    let f3 = polarizabilities(&db, ground_manifold(3.0), w).unwrap();
    let f4 = polarizabilities(&db, ground_manifold(4.0), w).unwrap();
    // g_F has opposite signs in the two ground hyperfine levels
    assert!(f3.vector_au * f4.vector_au < 0.0);
    // equal magnitude per unit angular momentum
    let r = (f3.vector_au / 3.0) / (f4.vector_au / 4.0);
    assert!((r + 1.0).abs() < 0.01, "{r}");
}
