//! ac Stark Hamiltonian on a hyperfine manifold.
//!
//! For a positive-frequency amplitude `E` (physical field `Re[E e^{iωt}]`)
//!
//! `H = -(1/4) [ α_s E*·E + i α_v (E* × E)·F / (2F)
//!      + α_T (3[(E*·F)(E·F) + (E·F)(E*·F)] - 2 (E*·E) F²) / (2F(2F-1)) ]`
//!
//! and matrices are returned as energy/h in Hz on the basis `m = -F..F`.

use crate::angular::{angular_momentum_matrices, HalfInt};
use crate::atom::LevelLabel;
use crate::error::{Error, Result};
use crate::polarizability::PolarizabilitySet;
use crate::units::{AU_POLARIZABILITY, PLANCK};
use crate::waveguide::{ComplexField, CylindricalPoint};
use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ManifoldRepr", into = "ManifoldRepr")]
pub struct Manifold {
    pub level: LevelLabel,
    pub f: HalfInt,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifoldRepr {
    level: String,
    f: f64,
}

impl TryFrom<ManifoldRepr> for Manifold {
    type Error = String;
    fn try_from(r: ManifoldRepr) -> std::result::Result<Self, String> {
        let level = LevelLabel::parse(&r.level).map_err(|e| e.to_string())?;
        let f = HalfInt::from_value(r.f).ok_or_else(|| format!("F = {} is not a half-integer", r.f))?;
        Ok(Manifold { level, f })
    }
}

impl From<Manifold> for ManifoldRepr {
    fn from(m: Manifold) -> Self {
        ManifoldRepr {
            level: m.level.to_string(),
            f: m.f.value(),
        }
    }
}

impl Manifold {
    pub fn new(level: LevelLabel, f: HalfInt) -> Self {
        Manifold { level, f }
    }

    pub fn parse(level: &str, f: f64) -> Result<Self> {
        let level = LevelLabel::parse(level)?;
        let f =
            HalfInt::from_value(f).ok_or_else(|| Error::InvalidParameter(format!("F = {f} is not a half-integer")))?;
        Ok(Manifold { level, f })
    }

    pub fn dim(&self) -> usize {
        self.f.multiplicity()
    }

    /// Magnetic quantum numbers in basis order.
    pub fn m_values(&self) -> Vec<f64> {
        let f = self.f.value();
        (0..self.dim()).map(|i| -f + i as f64).collect()
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} F={}", self.level, self.f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarkHamiltonian {
    pub manifold: Manifold,
    /// Energy/h in Hz.
    pub matrix: DMatrix<Complex64>,
}

impl StarkHamiltonian {
    pub fn zero(manifold: Manifold) -> Self {
        let d = manifold.dim();
        StarkHamiltonian {
            manifold,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.norm();
        if n == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.adjoint()).norm() / n
    }

    /// Rank-0 part, `Tr(H) / (2F+1)`.
    pub fn scalar_part(&self) -> f64 {
        self.matrix.trace().re / self.manifold.dim() as f64
    }

    /// Coefficients `b` of the rank-1 part `b·F`, in Hz.
    pub fn vector_part(&self) -> Vector3<f64> {
        let f = self.manifold.f.value();
        if f == 0.0 {
            return Vector3::zeros();
        }
        let norm = f * (f + 1.0) * (2.0 * f + 1.0) / 3.0;
        let ops = angular_momentum_matrices(self.manifold.f);
        Vector3::from_fn(|k, _| (&self.matrix * &ops[k]).trace().re / norm)
    }

    /// Largest minus smallest eigenvalue, Hz.
    pub fn splitting(&self) -> f64 {
        let (ev, _) = hermitian_eigen(&self.matrix);
        ev.last().map_or(0.0, |max| max - ev[0])
    }

    pub fn add_scalar(&mut self, value_hz: f64) {
        for i in 0..self.manifold.dim() {
            self.matrix[(i, i)] += Complex64::new(value_hz, 0.0);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityVector {
    pub position: CylindricalPoint,
    pub vector: Vector3<f64>,
}

/// `Im[E* × E] / (E*·E)`.
pub fn ellipticity_vector(field: &ComplexField) -> Result<EllipticityVector> {
    let norm = field.intensity_amplitude_sq();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let c = cross_conj(&field.e, &field.e);
    Ok(EllipticityVector {
        position: field.position,
        vector: c.map(|v| v.im / norm),
    })
}

/// `a* × b`
fn cross_conj(a: &Vector3<Complex64>, b: &Vector3<Complex64>) -> Vector3<Complex64> {
    let a = a.map(|v| v.conj());
    Vector3::new(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
}

fn dot_f(e: &Vector3<Complex64>, ops: &[DMatrix<Complex64>; 3]) -> DMatrix<Complex64> {
    &ops[0] * e[0] + &ops[1] * e[1] + &ops[2] * e[2]
}

/// Bilinear Stark form `H(e1*, e2)`; equals the Hamiltonian when `e1 = e2`.
pub(crate) fn stark_bilinear(
    e1: &Vector3<Complex64>,
    e2: &Vector3<Complex64>,
    pols: &PolarizabilitySet,
    manifold: Manifold,
) -> DMatrix<Complex64> {
    let dim = manifold.dim();
    let f = manifold.f.value();
    let ops = angular_momentum_matrices(manifold.f);
    let e1c = e1.map(|v| v.conj());
    let dot = e1c.dot(e2);
    let scale = -0.25 * AU_POLARIZABILITY / PLANCK;

    let mut h = DMatrix::<Complex64>::identity(dim, dim) * (dot * pols.scalar_au);
    if f > 0.0 && pols.vector_au != 0.0 {
        let c = cross_conj(e1, e2);
        let coef = Complex64::new(0.0, pols.vector_au / (2.0 * f));
        h += dot_f(&c, &ops) * coef;
    }
    if f >= 1.0 && pols.tensor_au != 0.0 {
        let a = dot_f(&e1c, &ops);
        let b = dot_f(e2, &ops);
        let mut t = (&a * &b + &b * &a) * Complex64::new(3.0, 0.0);
        let f2 = f * (f + 1.0);
        for i in 0..dim {
            t[(i, i)] -= dot * (2.0 * f2);
        }
        h += t * Complex64::new(pols.tensor_au / (2.0 * f * (2.0 * f - 1.0)), 0.0);
    }
    h * Complex64::new(scale, 0.0)
}

pub fn stark_hamiltonian(
    field: &ComplexField,
    pols: &PolarizabilitySet,
    manifold: Manifold,
) -> Result<StarkHamiltonian> {
    if pols.manifold != manifold {
        return Err(Error::DimensionMismatch(format!(
            "polarizabilities belong to {} but the manifold is {}",
            pols.manifold, manifold
        )));
    }
    let matrix = stark_bilinear(&field.e, &field.e, pols, manifold);
    Ok(StarkHamiltonian { manifold, matrix })
}

/// Sorted eigen-decomposition of a Hermitian matrix; eigenvectors are the
/// columns of the returned matrix.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}
