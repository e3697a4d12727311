//! Structural invariant checks shared by the property tests and the
//! acceptance run. Each returns a description of the first violation.

use nalgebra::{DMatrix, Vector3};
use nanotrap::angular::angular_momentum_matrices;
use nanotrap::atom::AtomDatabase;
use nanotrap::light_shift::{ellipticity_vector, stark_hamiltonian, Manifold};
use nanotrap::polarizability::polarizabilities;
use nanotrap::trap::{excited_manifold, ground_manifold, hermitian_eigen, scan_potential, ScanGrid, TrapModel};
use nanotrap::units::wavelength_to_angular_frequency;
use nanotrap::waveguide::{
    fused_silica_index, BeamSpec, ComplexField, CylindricalPoint, Direction, FiberSpec, PreparedBeam,
};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub type Check = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn all_manifolds() -> Vec<Manifold> {
    let mut v = vec![ground_manifold(3.0), ground_manifold(4.0)];
    v.extend((2..=5).map(|f| excited_manifold(f as f64)));
    v
}

/// Rank-0, rank-1 and rank-2 parts of an operator on a manifold.
pub fn rank_parts(h: &DMatrix<Complex64>, m: Manifold) -> [DMatrix<Complex64>; 3] {
    let n = h.nrows();
    let scalar = DMatrix::<Complex64>::identity(n, n) * (h.trace() / n as f64);
    let f = m.f.value();
    let mut vector = DMatrix::<Complex64>::zeros(n, n);
    if f > 0.0 {
        let norm = f * (f + 1.0) * (2.0 * f + 1.0) / 3.0;
        for op in angular_momentum_matrices(m.f).iter() {
            vector += op * ((h * op).trace() / norm);
        }
    }
    let tensor = h - &scalar - &vector;
    [scalar, vector, tensor]
}

pub fn single_beam(direction: Direction, lambda: f64, phi0: f64) -> PreparedBeam {
    let fiber = FiberSpec::new(250e-9, fused_silica_index(lambda), 1.0).unwrap();
    PreparedBeam::new(BeamSpec::new(lambda, 5e-3, direction, phi0), &fiber).unwrap()
}

/// Hermiticity, eigen-decomposition residual and eigenvalue ordering.
pub fn hermitian(model: &TrapModel, p: CylindricalPoint, m: Manifold) -> Check {
    let h = model.hamiltonian(p, m).map_err(|e| e.to_string())?;
    ensure(h.hermiticity_error() < 1e-12, || {
        format!("{m}: hermiticity error {}", h.hermiticity_error())
    })?;
    let levels = model.adiabatic_levels(p, m).map_err(|e| e.to_string())?;
    let scale = h.matrix.norm();
    for (i, e) in levels.eigenvalues.iter().enumerate() {
        let v = levels.eigenvectors.column(i);
        let residual = (&h.matrix * v - v * Complex64::from(*e)).norm();
        ensure(residual < 1e-10 * scale, || format!("{m}: eigen residual {residual:e}"))?;
    }
    ensure(levels.eigenvalues.windows(2).all(|w| w[0] <= w[1]), || {
        format!("{m}: eigenvalues unsorted")
    })
}

/// A field with zero ellipticity leaves every ground hyperfine level degenerate.
pub fn linear_degenerate(db: &AtomDatabase, re: [f64; 3], phase: f64, lambda_nm: f64, f: f64) -> Check {
    let m = ground_manifold(f);
    let Ok(pols) = polarizabilities(db, m, wavelength_to_angular_frequency(lambda_nm * 1e-9)) else {
        return Ok(());
    };
    let g = Complex64::from_polar(1e6, phase);
    let field = ComplexField {
        position: CylindricalPoint::new(1.0, 0.0, 0.0),
        e: Vector3::new(g * re[0], g * re[1], g * re[2]),
    };
    let eps = ellipticity_vector(&field).map_err(|e| e.to_string())?.vector.norm();
    ensure(eps < 1e-14, || format!("ellipticity {eps:e} of a linear field"))?;
    let h = stark_hamiltonian(&field, &pols, m).map_err(|e| e.to_string())?;
    let (ev, _) = hermitian_eigen(&h.matrix);
    let spread = ev.last().unwrap() - ev[0];
    let scale = ev[0].abs().max(ev.last().unwrap().abs());
    ensure(spread <= 1e-12 * scale, || {
        format!("{m} at {lambda_nm} nm: spread {spread:e} of {scale:e}")
    })
}

/// Forward/backward reversal flips the rank-1 part only.
pub fn reversal(db: &AtomDatabase, p: CylindricalPoint, m: Manifold, lambda: f64, phi0: f64) -> Check {
    let pols = polarizabilities(db, m, wavelength_to_angular_frequency(lambda)).map_err(|e| e.to_string())?;
    let fwd = single_beam(Direction::Forward, lambda, phi0)
        .field(p)
        .map_err(|e| e.to_string())?;
    let bwd = single_beam(Direction::Backward, lambda, phi0)
        .field(p)
        .map_err(|e| e.to_string())?;
    let hf = rank_parts(&stark_hamiltonian(&fwd, &pols, m).unwrap().matrix, m);
    let hb = rank_parts(&stark_hamiltonian(&bwd, &pols, m).unwrap().matrix, m);
    let scale = hf[0].norm();
    ensure((&hf[0] - &hb[0]).norm() < 1e-12 * scale, || {
        format!("{m}: scalar part changed")
    })?;
    ensure((&hf[2] - &hb[2]).norm() < 1e-12 * scale, || {
        format!("{m}: tensor part changed")
    })?;
    ensure((&hf[1] + &hb[1]).norm() < 1e-12 * scale, || {
        format!("{m}: vector part did not flip")
    })?;
    ensure(hf[1].norm() > 1e-6 * scale, || {
        format!("{m}: vector part unexpectedly absent")
    })
}

/// `α2 = 0` for every J = 1/2 manifold.
pub fn j_half_tensor(db: &AtomDatabase, lambda_nm: f64) -> Check {
    for label in ["6S1/2", "7S1/2", "6P1/2"] {
        for f in [3.0, 4.0] {
            let m = Manifold::parse(label, f).map_err(|e| e.to_string())?;
            if let Ok(p) = polarizabilities(db, m, wavelength_to_angular_frequency(lambda_nm * 1e-9)) {
                ensure(p.tensor_au == 0.0 && p.rank_au[2] == 0.0, || {
                    format!("{m}: α2 = {}", p.tensor_au)
                })?;
            }
        }
    }
    Ok(())
}

/// The coherent red pair (coherence group 0) is linearly polarized.
pub fn pair_linear(model: &TrapModel, p: CylindricalPoint) -> Check {
    let fields = model.group_fields(p).map_err(|e| e.to_string())?;
    let eps = ellipticity_vector(&fields[0]).map_err(|e| e.to_string())?.vector.norm();
    ensure(eps < 1e-12, || format!("pair ellipticity {eps:e} at {p:?}"))
}

/// Excited-state shifts in light polarized along the quantization axis are
/// diagonal and quadratic in m.
pub fn tensor_quadratic(db: &AtomDatabase, lambda_nm: f64, f: f64) -> Check {
    let m = excited_manifold(f);
    let Ok(pols) = polarizabilities(db, m, wavelength_to_angular_frequency(lambda_nm * 1e-9)) else {
        return Ok(());
    };
    let field = ComplexField {
        position: CylindricalPoint::new(1.0, 0.0, 0.0),
        e: Vector3::new(Complex64::default(), Complex64::default(), Complex64::new(1e6, 0.0)),
    };
    let h = stark_hamiltonian(&field, &pols, m).map_err(|e| e.to_string())?.matrix;
    let n = h.nrows();
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(h[(i, j)].norm());
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    let ms = m.m_values();
    // least squares a + b m² through the diagonal
    let (s0, s1, s2) = ms.iter().fold((0.0, 0.0, 0.0), |acc, x| {
        (acc.0 + 1.0, acc.1 + x * x, acc.2 + x.powi(4))
    });
    let (t0, t1) = ms
        .iter()
        .zip(&diag)
        .fold((0.0, 0.0), |acc, (x, y)| (acc.0 + y, acc.1 + x * x * y));
    let det = s0 * s2 - s1 * s1;
    let a = (t0 * s2 - t1 * s1) / det;
    let b = (s0 * t1 - s1 * t0) / det;
    let hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = hi - lo;
    let residual = ms
        .iter()
        .zip(&diag)
        .map(|(x, y)| (a + b * x * x - y).abs())
        .fold(0.0, f64::max);
    ensure(residual < 1e-10 * scale, || {
        format!("{m} at {lambda_nm} nm: m² fit residual {residual:e} of {scale:e}")
    })?;
    ensure(off < 1e-10 * scale, || format!("{m}: off-diagonal {off:e}"))
}

/// `U(φ) = U(−φ) = U(π − φ)` per eigenvalue on an azimuthal scan.
pub fn mirror_symmetric(model: &TrapModel, distance: f64) -> Check {
    let a = model.radius();
    let grid = ScanGrid::Azimuthal {
        start_rad: -PI,
        stop_rad: PI,
        points: 73,
        distance_m: distance,
        z_m: 0.0,
    };
    let manifolds = all_manifolds();
    let table = scan_potential(model, &manifolds, &grid).map_err(|e| e.to_string())?;
    for row in &table.rows {
        let phi = row.coord;
        for mirror_phi in [-phi, PI - phi] {
            let p = CylindricalPoint::new(a + distance, mirror_phi, 0.0);
            for (k, m) in manifolds.iter().enumerate() {
                let mirrored = model.adiabatic_levels(p, *m).map_err(|e| e.to_string())?.eigenvalues;
                let scale = row.levels[k].iter().map(|v| v.abs()).fold(0.0, f64::max);
                for (u, v) in row.levels[k].iter().zip(&mirrored) {
                    ensure((u - v).abs() <= 1e-10 * scale, || {
                        format!("{m} at φ={phi} vs {mirror_phi}: {u} vs {v}")
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// The ground potential along z repeats with period `π/β` of the red pair,
/// located from the FFT peak of an axial scan.
pub fn axial_period(model: &TrapModel) -> Check {
    let period = PI / model.beams()[0].mode.beta;
    let lattice = model.lattice_period().ok_or("no standing wave")?;
    ensure((lattice - period).abs() < 1e-15 * period, || {
        format!("lattice period {lattice} vs {period}")
    })?;
    // a window that is deliberately not a whole number of periods
    let n = 1024;
    let length = 20.37 * period;
    let grid = ScanGrid::Axial {
        start_m: 0.0,
        stop_m: length * (n - 1) as f64 / n as f64,
        points: n,
        distance_m: 230e-9,
        phi_rad: 0.3,
    };
    let table = scan_potential(model, &[ground_manifold(4.0)], &grid).map_err(|e| e.to_string())?;
    let series: Vec<f64> = table.rows.iter().map(|r| r.levels[0][0]).collect();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = series
        .iter()
        .map(|v| rustfft::num_complex::Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (peak, _) = buf[1..n / 2]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    let k = (peak + 1) as f64;
    // parabolic interpolation of the log spectrum around the peak bin
    let mag = |i: usize| buf[i].norm().ln();
    let (l, c, r) = (mag(peak), mag(peak + 1), mag(peak + 2));
    let measured = length / (k + 0.5 * (l - r) / (l - 2.0 * c + r));
    ensure((measured - period).abs() < 0.02 * period, || {
        format!("FFT period {measured} vs {period}")
    })?;
    for z in [0.0, 0.37 * period, 1.9 * period] {
        let p0 = CylindricalPoint::new(model.radius() + 230e-9, 0.3, z);
        let p1 = CylindricalPoint::new(model.radius() + 230e-9, 0.3, z + period);
        let u0 = model
            .adiabatic_levels(p0, ground_manifold(4.0))
            .map_err(|e| e.to_string())?
            .eigenvalues;
        let u1 = model
            .adiabatic_levels(p1, ground_manifold(4.0))
            .map_err(|e| e.to_string())?
            .eigenvalues;
        for (a, b) in u0.iter().zip(&u1) {
            ensure((a - b).abs() < 1e-10 * a.abs(), || {
                format!("U(z) {a} vs U(z + π/β) {b}")
            })?;
        }
    }
    Ok(())
}
