//! Angular-momentum algebra on doubled integers.
//!
//! All quantum numbers are passed as twice their value so half-integers stay
//! exact (`j = 7/2` is `7`). Wigner symbols use the Racah sums with an `f64`
//! factorial table, which is exact for the small arguments used here.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

/// A non-negative angular momentum quantum number stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HalfInt(u32);

impl HalfInt {
    pub const fn from_twice(twice: u32) -> Self {
        HalfInt(twice)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// Number of magnetic sublevels, `2j + 1`.
    pub fn multiplicity(self) -> usize {
        self.0 as usize + 1
    }

    pub fn from_value(v: f64) -> Option<Self> {
        let t = (2.0 * v).round();
        if v < 0.0 || (2.0 * v - t).abs() > 1e-9 {
            None
        } else {
            Some(HalfInt(t as u32))
        }
    }
}

impl TryFrom<f64> for HalfInt {
    type Error = String;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        HalfInt::from_value(v).ok_or_else(|| format!("{v} is not a non-negative half-integer"))
    }
}

impl From<HalfInt> for f64 {
    fn from(h: HalfInt) -> f64 {
        h.value()
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

fn factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![1.0; 171];
        for n in 1..171 {
            t[n] = t[n - 1] * n as f64;
        }
        t
    })
}

fn fact(n: i64) -> f64 {
    factorial_table()[n as usize]
}

fn triangle(a: i64, b: i64, c: i64) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// Square root of the triangle coefficient Δ(abc), doubled arguments.
fn delta(a: i64, b: i64, c: i64) -> f64 {
    (fact((a + b - c) / 2) * fact((a - b + c) / 2) * fact((-a + b + c) / 2) / fact((a + b + c) / 2 + 1)).sqrt()
}

fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)` with doubled arguments.
pub fn wigner_3j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j3 + m3) % 2 != 0 {
        return 0.0;
    }
    let pre = delta(j1, j2, j3)
        * (fact((j1 + m1) / 2)
            * fact((j1 - m1) / 2)
            * fact((j2 + m2) / 2)
            * fact((j2 - m2) / 2)
            * fact((j3 + m3) / 2)
            * fact((j3 - m3) / 2))
        .sqrt();

    let kmin = 0.max((j2 - j3 - m1) / 2).max((j1 - j3 + m2) / 2);
    let kmax = ((j1 + j2 - j3) / 2).min((j1 - m1) / 2).min((j2 + m2) / 2);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let den = fact(k)
            * fact((j1 + j2 - j3) / 2 - k)
            * fact((j1 - m1) / 2 - k)
            * fact((j2 + m2) / 2 - k)
            * fact((j3 - j2 + m1) / 2 + k)
            * fact((j3 - j1 - m2) / 2 + k);
        sum += parity(k) / den;
    }
    parity((j1 - j2 - m3) / 2) * pre * sum
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}` with doubled arguments.
pub fn wigner_6j(j1: i64, j2: i64, j3: i64, j4: i64, j5: i64, j6: i64) -> f64 {
    if !triangle(j1, j2, j3) || !triangle(j1, j5, j6) || !triangle(j4, j2, j6) || !triangle(j4, j5, j3) {
        return 0.0;
    }
    let a1 = (j1 + j2 + j3) / 2;
    let a2 = (j1 + j5 + j6) / 2;
    let a3 = (j4 + j2 + j6) / 2;
    let a4 = (j4 + j5 + j3) / 2;
    let b1 = (j1 + j2 + j4 + j5) / 2;
    let b2 = (j2 + j3 + j5 + j6) / 2;
    let b3 = (j3 + j1 + j6 + j4) / 2;
    let kmin = a1.max(a2).max(a3).max(a4);
    let kmax = b1.min(b2).min(b3);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let den =
            fact(k - a1) * fact(k - a2) * fact(k - a3) * fact(k - a4) * fact(b1 - k) * fact(b2 - k) * fact(b3 - k);
        sum += parity(k) * fact(k + 1) / den;
    }
    delta(j1, j2, j3) * delta(j1, j5, j6) * delta(j4, j2, j6) * delta(j4, j5, j3) * sum
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | J M>` with doubled arguments.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    parity((j1 - j2 + m) / 2) * ((j + 1) as f64).sqrt() * wigner_3j(j1, j2, j, m1, m2, -m)
}

/// Matrices of `(F_x, F_y, F_z)` in units of ħ on the basis `m = -F, ..., F`.
pub fn angular_momentum_matrices(f: HalfInt) -> [DMatrix<Complex64>; 3] {
    let dim = f.multiplicity();
    let fv = f.value();
    let mut jx = DMatrix::<Complex64>::zeros(dim, dim);
    let mut jy = DMatrix::<Complex64>::zeros(dim, dim);
    let mut jz = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        let m = -fv + i as f64;
        jz[(i, i)] = Complex64::new(m, 0.0);
        if i + 1 < dim {
            // <m+1| F+ |m>
            let c = (fv * (fv + 1.0) - m * (m + 1.0)).sqrt();
            jx[(i + 1, i)] = Complex64::new(0.5 * c, 0.0);
            jx[(i, i + 1)] = Complex64::new(0.5 * c, 0.0);
            jy[(i + 1, i)] = Complex64::new(0.0, -0.5 * c);
            jy[(i, i + 1)] = Complex64::new(0.0, 0.5 * c);
        }
    }
    [jx, jy, jz]
}
