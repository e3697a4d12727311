//! Planar van der Waals attraction toward the fiber surface, `U = -C3 / d³`.

use crate::error::{Error, Result};
use crate::light_shift::Manifold;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceModel {
    /// `C3 / h` in kHz·μm³.
    #[serde(rename = "c3_khz_um3")]
    pub c3_khz_um3: f64,
    /// Multiplier applied to every level other than the ground state.
    #[serde(default = "default_excited_scale")]
    pub excited_scale: f64,
}

fn default_excited_scale() -> f64 {
    2.0
}

impl Default for SurfaceModel {
    fn default() -> Self {
        SurfaceModel {
            c3_khz_um3: 1.2,
            excited_scale: 2.0,
        }
    }
}

impl SurfaceModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.c3_khz_um3.is_finite() && self.c3_khz_um3 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "C3 must be positive, got {}",
                self.c3_khz_um3
            )));
        }
        if !(self.excited_scale.is_finite() && self.excited_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "excited_scale must be positive, got {}",
                self.excited_scale
            )));
        }
        Ok(())
    }

    /// `C3 / h` in Hz·m³.
    pub fn c3_hz_m3(&self) -> f64 {
        self.c3_khz_um3 * 1e3 * 1e-18
    }

    pub fn scale_for(&self, manifold: &Manifold) -> f64 {
        let l = manifold.level;
        if l.n == 6 && l.l == 0 {
            1.0
        } else {
            self.excited_scale
        }
    }
}

/// Surface potential (Hz) at distance `d` (m) from the fiber surface.
pub fn surface_potential(model: &SurfaceModel, d: f64, manifold: &Manifold) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    Ok(-model.scale_for(manifold) * model.c3_hz_m3() / (d * d * d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ground() -> Manifold {
        Manifold::parse("6S1/2", 4.0).unwrap()
    }

    fn excited() -> Manifold {
        Manifold::parse("6P3/2", 4.0).unwrap()
    }

    #[test]
    fn value_at_100_nm() {
        let m = SurfaceModel::default();
        let u = surface_potential(&m, 0.1e-6, &ground()).unwrap();
        assert!((u + 1.2e6).abs() < 1e-6);
        let ue = surface_potential(&m, 0.1e-6, &excited()).unwrap();
        assert_eq!(ue, 2.0 * u);
    }

    #[test]
    fn cubic_scaling_and_monotone() {
        let m = SurfaceModel::default();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let d = i as f64 * 5e-9;
            let u = surface_potential(&m, d, &ground()).unwrap();
            let u2 = surface_potential(&m, 2.0 * d, &ground()).unwrap();
            assert!((u2 - u / 8.0).abs() <= 1e-15 * u.abs());
            assert!(u > prev);
            prev = u;
        }
        assert!(surface_potential(&m, 1.0, &ground()).unwrap().abs() < 1e-11);
    }

    #[test]
    fn non_positive_distance() {
        let m = SurfaceModel::default();
        assert!(matches!(
            surface_potential(&m, 0.0, &ground()),
            Err(Error::NonPositiveDistance(_))
        ));
        assert!(matches!(
            surface_potential(&m, -1e-9, &ground()),
            Err(Error::NonPositiveDistance(_))
        ));
    }

    #[test]
    fn validation() {
        assert!(SurfaceModel {
            c3_khz_um3: 0.0,
            excited_scale: 2.0
        }
        .validate()
        .is_err());
        assert!(SurfaceModel {
            c3_khz_um3: 1.2,
            excited_scale: -1.0
        }
        .validate()
        .is_err());
        assert!(SurfaceModel::default().validate().is_ok());
    }
}
