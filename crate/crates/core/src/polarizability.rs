//! Hyperfine-resolved dynamic polarizabilities and magic wavelengths.
//!
//! Reduced rank-K polarizabilities follow the irreducible-tensor form
//!
//! `α^(K)_F = (-1)^(K+F+1) sqrt(2K+1) Σ (-1)^F' {1 K 1; F F' F} |<F'||d||F>|²
//!            × [1/(ω_F'F - ω) + (-1)^K/(ω_F'F + ω)]`
//!
//! in atomic units (ħ = 1), with `|<F'||d||F>|² = (2F+1)(2F'+1){J' F' I; F J 1}² |<J'||d||J>|²`.
//! The conventional scalar, vector and tensor polarizabilities are fixed
//! multiples of `α^(0)`, `α^(1)` and `α^(2)`.

use crate::angular::wigner_6j;
use crate::atom::{f_range, AtomDatabase};
use crate::error::{Error, Result};
use crate::light_shift::Manifold;
use crate::units::{
    angular_frequency_to_au, wavelength_to_angular_frequency, AU_POLARIZABILITY, EPSILON_0, PLANCK, SPEED_OF_LIGHT,
};
use serde::Serialize;
use std::f64::consts::PI;

/// Default half-width of the excluded band around every resonance, in Hz.
pub const DEFAULT_RESONANCE_GUARD_HZ: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizabilitySet {
    pub manifold: Manifold,
    /// Optical angular frequency, rad/s.
    pub omega: f64,
    /// Reduced `α^(0)`, `α^(1)`, `α^(2)` in atomic units.
    pub rank_au: [f64; 3],
    pub scalar_au: f64,
    pub vector_au: f64,
    pub tensor_au: f64,
}

impl PolarizabilitySet {
    pub fn scalar_si(&self) -> f64 {
        self.scalar_au * AU_POLARIZABILITY
    }

    pub fn vector_si(&self) -> f64 {
        self.vector_au * AU_POLARIZABILITY
    }

    pub fn tensor_si(&self) -> f64 {
        self.tensor_au * AU_POLARIZABILITY
    }

    fn from_ranks(manifold: Manifold, omega: f64, rank_au: [f64; 3]) -> Self {
        let f = manifold.f.value();
        let scalar = rank_au[0] / (3.0 * (2.0 * f + 1.0)).sqrt();
        let vector = if f > 0.0 {
            -(2.0 * f / ((f + 1.0) * (2.0 * f + 1.0))).sqrt() * rank_au[1]
        } else {
            0.0
        };
        let tensor = if f >= 1.0 {
            -(2.0 * f * (2.0 * f - 1.0) / (3.0 * (f + 1.0) * (2.0 * f + 1.0) * (2.0 * f + 3.0))).sqrt() * rank_au[2]
        } else {
            0.0
        };
        PolarizabilitySet {
            manifold,
            omega,
            rank_au,
            scalar_au: scalar,
            vector_au: vector,
            tensor_au: tensor,
        }
    }

    /// Energy shift (Hz) of sublevel `m` in linearly polarized light of
    /// intensity `I` (W/m²) polarized along the quantization axis.
    pub fn linear_shift_hz(&self, m: f64, intensity: f64) -> f64 {
        let f = self.manifold.f.value();
        let mut alpha = self.scalar_au;
        if f >= 1.0 {
            alpha += self.tensor_au * (3.0 * m * m - f * (f + 1.0)) / (f * (2.0 * f - 1.0));
        }
        -alpha * AU_POLARIZABILITY * intensity / (2.0 * SPEED_OF_LIGHT * EPSILON_0) / PLANCK
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizabilityOptions {
    /// Minimum |detuning| from any hyperfine-resolved resonance, Hz.
    pub resonance_guard_hz: f64,
    /// Resolve the hyperfine structure of the coupled levels. When false the
    /// fine-structure energies are used throughout.
    pub hyperfine_resolved: bool,
}

impl Default for PolarizabilityOptions {
    fn default() -> Self {
        PolarizabilityOptions {
            resonance_guard_hz: DEFAULT_RESONANCE_GUARD_HZ,
            hyperfine_resolved: true,
        }
    }
}

fn sign(twice_exponent: i64) -> f64 {
    debug_assert!(twice_exponent % 2 == 0);
    if (twice_exponent / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn polarizabilities(db: &AtomDatabase, manifold: Manifold, omega: f64) -> Result<PolarizabilitySet> {
    polarizabilities_with(db, manifold, omega, &PolarizabilityOptions::default())
}

pub fn polarizabilities_with(
    db: &AtomDatabase,
    manifold: Manifold,
    omega: f64,
    opts: &PolarizabilityOptions,
) -> Result<PolarizabilitySet> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "optical angular frequency must be non-negative, got {omega}"
        )));
    }
    let idx = db.level_index(&manifold.level)?;
    let level = &db.levels()[idx];
    let i_spin = db.nuclear_spin;
    let j = level.label.j;
    let f = manifold.f;
    if !f_range(j, i_spin).contains(&f) {
        return Err(Error::UnknownLevel(format!("{} has no F = {}", level.label, f)));
    }
    let e_f = if opts.hyperfine_resolved {
        db.hyperfine_energy(level, f)
    } else {
        level.energy_hz
    };
    let w = angular_frequency_to_au(omega);
    let (tf, tj, ti) = (f.twice() as i64, j.twice() as i64, i_spin.twice() as i64);

    let mut sums = [0.0f64; 3];
    for (other_idx, d) in db.lines_of(idx) {
        let other = &db.levels()[other_idx];
        let tjp = other.label.j.twice() as i64;
        for fp in f_range(other.label.j, i_spin) {
            let tfp = fp.twice() as i64;
            let six = wigner_6j(tjp, tfp, ti, tf, tj, 2);
            let d2 = (tf + 1) as f64 * (tfp + 1) as f64 * six * six * d * d;
            if d2 == 0.0 {
                continue;
            }
            let e_fp = if opts.hyperfine_resolved {
                db.hyperfine_energy(other, fp)
            } else {
                other.energy_hz
            };
            let nu = e_fp - e_f;
            let detuning_hz = nu.abs() - omega / (2.0 * PI);
            if detuning_hz.abs() < opts.resonance_guard_hz {
                return Err(Error::OnResonance {
                    level: other.label.to_string(),
                    f: fp.to_string(),
                    detuning_hz,
                });
            }
            let wt = angular_frequency_to_au(2.0 * PI * nu);
            for (k, s) in sums.iter_mut().enumerate() {
                let sixk = wigner_6j(2, 2 * k as i64, 2, tf, tfp, tf);
                if sixk == 0.0 {
                    continue;
                }
                let parity_k = if k % 2 == 0 { 1.0 } else { -1.0 };
                *s += sign(tfp) * sixk * d2 * (1.0 / (wt - w) + parity_k / (wt + w));
            }
        }
    }
    let mut rank = [0.0; 3];
    for (k, r) in rank.iter_mut().enumerate() {
        *r = sign(2 * k as i64 + tf + 2) * ((2 * k + 1) as f64).sqrt() * sums[k];
    }
    if j.twice() == 1 {
        // Rank-2 coupling of a J = 1/2 level exists only through the
        // hyperfine splitting of the intermediate states and is dropped.
        rank[2] = 0.0;
    }
    Ok(PolarizabilitySet::from_ranks(manifold, omega, rank))
}

/// A single magnetic sublevel `|F, m>` of a manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sublevel {
    pub manifold: Manifold,
    pub m: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LightShiftSpectrum {
    pub intensity: f64,
    pub sublevels: Vec<Sublevel>,
    /// Vacuum wavelengths in meters.
    pub wavelengths: Vec<f64>,
    /// `shifts_hz[i][s]` is the shift of sublevel `s` at wavelength `i`.
    pub shifts_hz: Vec<Vec<f64>>,
}

/// Light shifts for linearly polarized light along the quantization axis.
pub fn scalar_light_shift_spectrum(
    db: &AtomDatabase,
    sublevels: &[Sublevel],
    wavelengths: &[f64],
    intensity: f64,
) -> Result<LightShiftSpectrum> {
    let mut shifts = Vec::with_capacity(wavelengths.len());
    for &lambda in wavelengths {
        let omega = wavelength_to_angular_frequency(lambda);
        let mut row = Vec::with_capacity(sublevels.len());
        for s in sublevels {
            let p = polarizabilities(db, s.manifold, omega)?;
            row.push(p.linear_shift_hz(s.m, intensity));
        }
        shifts.push(row);
    }
    Ok(LightShiftSpectrum {
        intensity,
        sublevels: sublevels.to_vec(),
        wavelengths: wavelengths.to_vec(),
        shifts_hz: shifts,
    })
}

/// Intensity used for light-shift spectra and magic-wavelength searches, W/m².
pub const DEFAULT_SPECTRUM_INTENSITY: f64 = 2.9e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagicWavelength {
    pub wavelength: f64,
    /// d(U_ground - U_excited)/dλ at the crossing, Hz per meter.
    pub slope_hz_per_m: f64,
    /// Common light shift at the crossing, Hz.
    pub shift_hz: f64,
}

fn differential_shift(
    db: &AtomDatabase,
    ground: &Sublevel,
    excited: &Sublevel,
    lambda: f64,
    intensity: f64,
) -> Result<f64> {
    let omega = wavelength_to_angular_frequency(lambda);
    let g = polarizabilities(db, ground.manifold, omega)?.linear_shift_hz(ground.m, intensity);
    let e = polarizabilities(db, excited.manifold, omega)?.linear_shift_hz(excited.m, intensity);
    Ok(g - e)
}

/// Wavelength in `[lo, hi]` where the ground and excited sublevels see the
/// same light shift for linearly polarized light.
pub fn find_magic_wavelength(
    db: &AtomDatabase,
    bracket: (f64, f64),
    ground: Sublevel,
    excited: Sublevel,
    intensity: f64,
) -> Result<MagicWavelength> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let f = |lambda: f64| differential_shift(db, &ground, &excited, lambda, intensity);
    const SAMPLES: usize = 200;
    let grid: Vec<f64> = (0..=SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / SAMPLES as f64)
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for &x in &grid {
        let v = match f(x) {
            Ok(v) => v,
            Err(Error::OnResonance { .. }) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some((px, pv)) = prev {
            if pv.signum() != v.signum() {
                if let Some(root) = refine_root(&f, px, x, pv)? {
                    let step = 1e-12;
                    let slope = (f(root + step)? - f(root - step)?) / (2.0 * step);
                    let omega = wavelength_to_angular_frequency(root);
                    let shift = polarizabilities(db, ground.manifold, omega)?.linear_shift_hz(ground.m, intensity);
                    return Ok(MagicWavelength {
                        wavelength: root,
                        slope_hz_per_m: slope,
                        shift_hz: shift,
                    });
                }
            }
        }
        prev = Some((x, v));
    }
    Err(Error::NoSignChange { lo, hi })
}

/// Bisection; returns `None` when the sign change turns out to be a pole.
fn refine_root(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<Option<f64>> {
    let scale = fa.abs();
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a < 1e-15 {
            let fm = match f(mid) {
                Ok(v) => v,
                Err(Error::OnResonance { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            return Ok(if fm.abs() <= scale.max(1.0) { Some(mid) } else { None });
        }
        let fm = match f(mid) {
            Ok(v) => v,
            Err(Error::OnResonance { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Err(Error::NonConvergence("magic-wavelength bisection".into()))
}
