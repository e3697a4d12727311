//! Bessel functions of the first kind `J_n` and modified Bessel functions of
//! the second kind `K_n` for real, positive arguments.
//!
//! `J_n` uses Miller's backward recurrence normalized with the identity
//! `J_0 + 2 Σ J_2k = 1`. `K_0`, `K_1` use the ascending series for `x <= 2`
//! and Steed's continued fraction (Temme's form) above that. Higher orders
//! come from the upward recurrence, which is stable for `K_n`.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `J_0(x) .. J_nmax(x)` for `x >= 0`.
pub fn bessel_j_all(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_j_all requires x >= 0, got {x}");
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 1e-8 {
        // leading term of the series is exact to double precision here
        let mut term = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                term *= 0.5 * x / n as f64;
            }
            *o = term;
        }
        return out;
    }

    let big = nmax.max(x as usize);
    let mut start = big + 20 + (40.0 * big as f64).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            sum *= 1e-250;
            for o in out.iter_mut() {
                *o *= 1e-250;
            }
        }
        // j now holds the unnormalized J_{k-1}
        let order = k - 1;
        if order <= nmax {
            out[order] = j;
        }
        if order % 2 == 0 && order > 0 {
            sum += 2.0 * j;
        }
    }
    sum += j;
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j_all(0, x.abs())[0]
}

pub fn bessel_j1(x: f64) -> f64 {
    let v = bessel_j_all(1, x.abs())[1];
    if x < 0.0 {
        -v
    } else {
        v
    }
}

pub fn bessel_jn(n: usize, x: f64) -> f64 {
    assert!(x >= 0.0);
    bessel_j_all(n, x)[n]
}

fn bessel_i01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let mut t0 = 1.0;
    let mut t1 = 0.5 * x;
    let mut i0 = t0;
    let mut i1 = t1;
    for k in 1..200 {
        let kf = k as f64;
        t0 *= y / (kf * kf);
        t1 *= y / (kf * (kf + 1.0));
        i0 += t0;
        i1 += t1;
        if t0 < 1e-17 * i0 && t1 < 1e-17 * i1 {
            break;
        }
    }
    (i0, i1)
}

fn bessel_k01_series(x: f64) -> (f64, f64) {
    let (i0, i1) = bessel_i01_series(x);
    let lnx2 = (0.5 * x).ln();
    let y = 0.25 * x * x;

    // K0 = -(ln(x/2) + γ) I0 + Σ_{k>=1} H_k y^k / (k!)^2
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut s0 = 0.0;
    // K1 = 1/x + ln(x/2) I1 - (x/4) Σ_{k>=0} [ψ(k+1) + ψ(k+2)] y^k / (k! (k+1)!)
    let mut term1 = 1.0;
    let mut psi_k1 = -EULER_GAMMA;
    let mut s1 = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            term *= y / (kf * kf);
            harmonic += 1.0 / kf;
            s0 += harmonic * term;
            term1 *= y / (kf * (kf + 1.0));
            psi_k1 += 1.0 / kf;
        }
        let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
        let d1 = (psi_k1 + psi_k2) * term1;
        s1 += d1;
        if k > 2 && term < 1e-18 * s0.abs().max(1.0) && d1.abs() < 1e-18 * s1.abs() {
            break;
        }
    }
    let k0 = -(lnx2 + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + lnx2 * i1 - 0.25 * x * s1;
    (k0, k1)
}

fn bessel_k01_cf2(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// `(K_0(x), K_1(x))` for `x > 0`.
pub fn bessel_k01(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "modified Bessel K requires x > 0, got {x}");
    if x <= 2.0 {
        bessel_k01_series(x)
    } else {
        bessel_k01_cf2(x)
    }
}

/// `K_0(x) .. K_nmax(x)` by upward recurrence.
pub fn bessel_k_all(nmax: usize, x: f64) -> Vec<f64> {
    let (k0, k1) = bessel_k01(x);
    let mut out = vec![k0];
    if nmax >= 1 {
        out.push(k1);
    }
    for n in 1..nmax {
        let next = out[n - 1] + 2.0 * n as f64 / x * out[n];
        out.push(next);
    }
    out
}

pub fn bessel_k0(x: f64) -> f64 {
    bessel_k01(x).0
}

pub fn bessel_k1(x: f64) -> f64 {
    bessel_k01(x).1
}

pub fn bessel_kn(n: usize, x: f64) -> f64 {
    bessel_k_all(n, x)[n]
}

/// `J_1'(x) / (x J_1(x))`, the interior logarithmic-derivative term of the
/// HE11 characteristic equation.
pub fn j1_log_derivative_term(x: f64) -> f64 {
    let j = bessel_j_all(1, x);
    (j[0] / j[1] - 1.0 / x) / x
}

/// `K_1'(x) / (x K_1(x))`, the exterior counterpart.
pub fn k1_log_derivative_term(x: f64) -> f64 {
    let (k0, k1) = bessel_k01(x);
    (-k0 / k1 - 1.0 / x) / x
}
