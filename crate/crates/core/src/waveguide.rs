//! Exact HE11 mode of a step-index cylinder and its exterior field.
//!
//! Conventions: the physical field is `Re[E e^{iωt}]`; a forward beam carries
//! `e^{-iβz}`. For a quasi-linearly polarized mode with input axis `φ0`,
//! `(E_x, E_y)` are real and `E_z` is imaginary at `z = 0`.

use crate::error::{Error, Result};
use crate::special::{bessel_j_all, bessel_k_all, j1_log_derivative_term, k1_log_derivative_term};
use crate::units::{EPSILON_0, SPEED_OF_LIGHT};
use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    /// Radius in meters.
    pub radius: f64,
    pub n1: f64,
    pub n2: f64,
}

impl FiberSpec {
    pub fn new(radius: f64, n1: f64, n2: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fiber radius must be positive, got {radius}"
            )));
        }
        if !(n1.is_finite() && n2.is_finite()) || n2 < 1.0 || n1 < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "refractive indices must be finite and >= 1, got n1={n1}, n2={n2}"
            )));
        }
        Ok(FiberSpec { radius, n1, n2 })
    }
}

/// Refractive index of fused silica from the three-term Sellmeier fit of
/// Malitson; wavelength in meters.
pub fn fused_silica_index(wavelength: f64) -> f64 {
    let l2 = (wavelength * 1e6).powi(2);
    let terms = [
        (0.696_166_3, 0.068_404_3),
        (0.407_942_6, 0.116_241_4),
        (0.897_479_4, 9.896_161),
    ];
    let mut n2 = 1.0;
    for (b, c) in terms {
        n2 += b * l2 / (l2 - c * c);
    }
    n2.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoreMaterial {
    #[serde(rename = "fused-silica")]
    FusedSilica,
}

/// Core index either as a dispersive material or a fixed number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoreIndex {
    Constant(f64),
    Material(CoreMaterial),
}

impl CoreIndex {
    pub fn at(&self, wavelength: f64) -> f64 {
        match self {
            CoreIndex::Constant(n) => *n,
            CoreIndex::Material(CoreMaterial::FusedSilica) => fused_silica_index(wavelength),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidedModeSolution {
    /// Vacuum wavelength in meters.
    pub wavelength: f64,
    pub fiber: FiberSpec,
    /// Propagation constant in rad/m.
    pub beta: f64,
    pub h: f64,
    pub q: f64,
    pub s: f64,
}

struct BesselAtBoundary {
    j: Vec<f64>,
    k: Vec<f64>,
}

impl GuidedModeSolution {
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn effective_index(&self) -> f64 {
        self.beta / self.k0()
    }

    pub fn v_number(&self) -> f64 {
        self.k0() * self.fiber.radius * (self.fiber.n1.powi(2) - self.fiber.n2.powi(2)).sqrt()
    }

    pub fn angular_frequency(&self) -> f64 {
        self.k0() * SPEED_OF_LIGHT
    }

    fn boundary(&self) -> BesselAtBoundary {
        let a = self.fiber.radius;
        BesselAtBoundary {
            j: bessel_j_all(3, self.h * a),
            k: bessel_k_all(3, self.q * a),
        }
    }

    /// Interior and exterior power carried by the circularly polarized mode
    /// with unit amplitude, from closed-form Lommel integrals.
    fn circular_power_split(&self) -> (f64, f64) {
        let a = self.fiber.radius;
        let (n1, n2) = (self.fiber.n1, self.fiber.n2);
        let (beta, h, q, s) = (self.beta, self.h, self.q, self.s);
        let k0 = self.k0();
        let omega = self.angular_frequency();
        let b = self.boundary();
        let (j, k) = (&b.j, &b.k);
        let s1 = beta * beta * s / (k0 * k0 * n1 * n1);
        let s2 = beta * beta * s / (k0 * k0 * n2 * n2);
        let c = j[1] / k[1];
        let half_a2 = 0.5 * a * a;

        let lj0 = half_a2 * (j[0] * j[0] + j[1] * j[1]);
        let lj2 = half_a2 * (j[2] * j[2] - j[1] * j[3]);
        let lk0 = half_a2 * (k[1] * k[1] - k[0] * k[0]);
        let lk2 = half_a2 * (k[1] * k[3] - k[2] * k[2]);

        let p_in = 2.0 * PI * beta * omega * EPSILON_0 * n1 * n1 / (4.0 * h * h)
            * ((1.0 - s) * (1.0 - s1) * lj0 + (1.0 + s) * (1.0 + s1) * lj2);
        let p_out = 2.0 * PI * c * c * beta * omega * EPSILON_0 * n2 * n2 / (4.0 * q * q)
            * ((1.0 - s) * (1.0 - s2) * lk0 + (1.0 + s) * (1.0 + s2) * lk2);
        (p_in, p_out)
    }

    /// Power (W) carried by the quasi-linear mode with `A_lin = 1 V/m`.
    pub fn linear_power_per_unit_amplitude(&self) -> f64 {
        let (p_in, p_out) = self.circular_power_split();
        0.5 * (p_in + p_out)
    }

    /// Fraction of the guided power flowing outside the fiber.
    pub fn exterior_power_fraction(&self) -> f64 {
        let (p_in, p_out) = self.circular_power_split();
        p_out / (p_in + p_out)
    }

    /// `|E_z|² / |E|²` at `r = a⁺` on the input polarization axis.
    pub fn longitudinal_fraction_at_surface(&self) -> f64 {
        let beam = BeamSpec::new(self.wavelength, 1e-3, Direction::Forward, 0.0);
        let pt = CylindricalPoint {
            r: self.fiber.radius,
            phi: 0.0,
            z: 0.0,
        };
        let f = PreparedBeam::from_mode(*self, beam)
            .field(pt)
            .expect("surface point is exterior");
        let ez = f.e[2].norm_sqr();
        ez / f.intensity_amplitude_sq()
    }
}

/// `X - X_HE`, the HE-branch characteristic function written in the
/// normalized parameters `u = h a` and `w = q a` (with `u² + w² = V²`).
/// Returns the value and the local magnitude scale `|X| + |X_HE|`.
fn characteristic_uw(u: f64, w: f64, k0: f64, fiber: &FiberSpec) -> (f64, f64) {
    let (n1, n2, a) = (fiber.n1, fiber.n2, fiber.radius);
    let beta = ((k0 * n1).powi(2) - (u / a).powi(2)).sqrt();
    let x = j1_log_derivative_term(u);
    let y = k1_log_derivative_term(w);
    let rhs = (beta / k0).powi(2) * (1.0 / (u * u) + 1.0 / (w * w)).powi(2);
    let n1s = n1 * n1;
    let n2s = n2 * n2;
    let x_he = (-(n1s + n2s) * y - ((n1s - n2s).powi(2) * y * y + 4.0 * n1s * rhs).sqrt()) / (2.0 * n1s);
    (x - x_he, x.abs() + x_he.abs())
}

fn characteristic(u: f64, k0: f64, fiber: &FiberSpec) -> (f64, f64) {
    let v2 = (k0 * fiber.radius).powi(2) * (fiber.n1.powi(2) - fiber.n2.powi(2));
    characteristic_uw(u, (v2 - u * u).sqrt(), k0, fiber)
}

/// Characteristic function evaluated at a propagation constant, with its
/// local magnitude scale `|X| + |X_HE|`.
pub fn characteristic_residual(wavelength: f64, fiber: &FiberSpec, beta: f64) -> (f64, f64) {
    let k0 = 2.0 * PI / wavelength;
    let u = fiber.radius * ((k0 * fiber.n1).powi(2) - beta * beta).sqrt();
    characteristic(u, k0, fiber)
}

/// `s` parameter of the HE11 mode from `(h, q, a)`.
pub fn s_parameter(h: f64, q: f64, radius: f64) -> f64 {
    let u = h * radius;
    let w = q * radius;
    (1.0 / (u * u) + 1.0 / (w * w)) / (j1_log_derivative_term(u) + k1_log_derivative_term(w))
}

pub fn solve_he11(wavelength: f64, fiber: &FiberSpec) -> Result<GuidedModeSolution> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let fiber = FiberSpec::new(fiber.radius, fiber.n1, fiber.n2)?;
    if fiber.n1 <= fiber.n2 {
        return Err(Error::NoGuidedRoot(format!(
            "no index contrast (n1 = {}, n2 = {})",
            fiber.n1, fiber.n2
        )));
    }
    let k0 = 2.0 * PI / wavelength;
    let v = k0 * fiber.radius * (fiber.n1.powi(2) - fiber.n2.powi(2)).sqrt();

    const SAMPLES: usize = 4000;
    let at = |i: usize| v * (i as f64 + 0.5) / SAMPLES as f64;
    let mut prev_u = at(0);
    let mut prev_g = characteristic(prev_u, k0, &fiber).0;
    let mut found = None;
    for i in 1..SAMPLES {
        let u = at(i);
        let g = characteristic(u, k0, &fiber).0;
        if prev_g.is_finite() && g.is_finite() && prev_g.signum() != g.signum() {
            let root = bisect(prev_u, u, prev_g, |x| characteristic(x, k0, &fiber).0)?;
            let (res, scale) = characteristic(root, k0, &fiber);
            // a sign change across a pole of J1'/J1 leaves a large residual
            if res.abs() <= 1e-8 * scale.max(1.0) {
                let w = (v * v - root * root).sqrt();
                found = Some((root, w));
                break;
            }
        }
        prev_u = u;
        prev_g = g;
    }
    if found.is_none() && prev_g > 0.0 {
        // weakly guiding fibers put the root exponentially close to u = V,
        // where only w resolves it; continue in log w
        let g_of_lw = |lw: f64| {
            let w = lw.exp();
            characteristic_uw((v * v - w * w).sqrt(), w, k0, &fiber).0
        };
        let mut prev_lw = (v * v - prev_u * prev_u).sqrt().ln();
        let mut prev_g = g_of_lw(prev_lw);
        let floor = (1e-280f64).ln();
        let step = 0.05;
        let mut lw = prev_lw - step;
        while lw > floor {
            let g = g_of_lw(lw);
            if g.is_finite() && prev_g.is_finite() && g.signum() != prev_g.signum() {
                let root = bisect(lw, prev_lw, g, g_of_lw)?;
                let w = root.exp();
                found = Some(((v * v - w * w).sqrt(), w));
                break;
            }
            prev_lw = lw;
            prev_g = g;
            lw -= step;
        }
    }
    let (u, w) = found.ok_or_else(|| {
        Error::NoGuidedRoot(format!(
            "no sign change of the HE11 characteristic function (V = {v:.4})"
        ))
    })?;

    let a = fiber.radius;
    let h = u / a;
    let beta = ((k0 * fiber.n1).powi(2) - h * h).sqrt();
    let q = w / a;
    if !(beta > k0 * fiber.n2 && beta < k0 * fiber.n1) {
        return Err(Error::NoGuidedRoot(format!(
            "root beta = {beta} outside the guided bracket"
        )));
    }
    Ok(GuidedModeSolution {
        wavelength,
        fiber,
        beta,
        h,
        q,
        s: s_parameter(h, q, a),
    })
}

fn bisect(mut lo: f64, mut hi: f64, mut flo: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * lo.abs().max(hi.abs()) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()) {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::NonConvergence(format!("bisection stalled on [{lo}, {hi}]")))
    }
}

/// `A_lin` (V/m) such that the quasi-linear mode carries power `P` (W).
pub fn normalize_amplitude(sol: &GuidedModeSolution, power: f64) -> Result<f64> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beam power must be non-negative, got {power}"
        )));
    }
    Ok((power / sol.linear_power_per_unit_amplitude()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "wavelength_m")]
    pub wavelength: f64,
    #[serde(rename = "power_w")]
    pub power: f64,
    pub direction: Direction,
    #[serde(rename = "polarization_angle_rad")]
    pub polarization_angle: f64,
    pub coherence_group: i64,
    #[serde(rename = "detuning_offset_hz", default)]
    pub detuning_offset: f64,
}

impl BeamSpec {
    pub fn new(wavelength: f64, power: f64, direction: Direction, polarization_angle: f64) -> Self {
        BeamSpec {
            name: None,
            wavelength,
            power,
            direction,
            polarization_angle,
            coherence_group: 0,
            detuning_offset: 0.0,
        }
    }

    pub fn with_group(mut self, group: i64) -> Self {
        self.coherence_group = group;
        self
    }

    pub fn with_offset(mut self, offset_hz: f64) -> Self {
        self.detuning_offset = offset_hz;
        self
    }

    /// Optical frequency in Hz including the detuning offset.
    pub fn frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength + self.detuning_offset
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.frequency()
    }

    /// Vacuum wavelength of the offset-shifted light.
    pub fn actual_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beam wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if !(self.power.is_finite() && self.power >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beam power must be non-negative, got {}",
                self.power
            )));
        }
        if !self.polarization_angle.is_finite() || !self.detuning_offset.is_finite() {
            return Err(Error::InvalidParameter("beam angle and offset must be finite".into()));
        }
        if self.frequency() <= 0.0 {
            return Err(Error::InvalidParameter(
                "detuning offset exceeds the optical frequency".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylindricalPoint {
    /// Distance from the fiber axis (m).
    pub r: f64,
    pub phi: f64,
    pub z: f64,
}

impl CylindricalPoint {
    pub fn new(r: f64, phi: f64, z: f64) -> Self {
        CylindricalPoint { r, phi, z }
    }
}

/// Positive-frequency electric field amplitude (V/m) in Cartesian components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexField {
    pub position: CylindricalPoint,
    pub e: Vector3<Complex64>,
}

impl ComplexField {
    pub fn zero(position: CylindricalPoint) -> Self {
        ComplexField {
            position,
            e: Vector3::zeros(),
        }
    }

    /// `E* · E`
    pub fn intensity_amplitude_sq(&self) -> f64 {
        self.e.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// A beam with its mode solved and amplitude normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedBeam {
    pub spec: BeamSpec,
    pub mode: GuidedModeSolution,
    pub amplitude: f64,
    j1_over_k1: f64,
}

impl PreparedBeam {
    pub fn new(spec: BeamSpec, fiber: &FiberSpec) -> Result<Self> {
        spec.validate()?;
        let mode = solve_he11(spec.actual_wavelength(), fiber)?;
        Ok(Self::from_mode(mode, spec))
    }

    pub fn from_mode(mode: GuidedModeSolution, spec: BeamSpec) -> Self {
        let amplitude = normalize_amplitude(&mode, spec.power.max(0.0)).unwrap_or(0.0);
        let a = mode.fiber.radius;
        let j1 = bessel_j_all(1, mode.h * a)[1];
        let k1 = bessel_k_all(1, mode.q * a)[1];
        PreparedBeam {
            spec,
            mode,
            amplitude,
            j1_over_k1: j1 / k1,
        }
    }

    pub fn field(&self, p: CylindricalPoint) -> Result<ComplexField> {
        let a = self.mode.fiber.radius;
        if !(p.r >= a) {
            return Err(Error::InsideFiber { r: p.r, radius: a });
        }
        let (beta, q, s) = (self.mode.beta, self.mode.q, self.mode.s);
        let phi0 = self.spec.polarization_angle;
        let k = bessel_k_all(2, q * p.r);
        let amp = self.amplitude;
        let pre = amp * beta * self.j1_over_k1 / (2.0 * q);
        let ex = pre * ((1.0 - s) * k[0] * phi0.cos() + (1.0 + s) * k[2] * (2.0 * p.phi - phi0).cos());
        let ey = pre * ((1.0 - s) * k[0] * phi0.sin() + (1.0 + s) * k[2] * (2.0 * p.phi - phi0).sin());
        let ez = amp * self.j1_over_k1 * k[1] * (p.phi - phi0).cos();
        let (ez, phase) = match self.spec.direction {
            Direction::Forward => (Complex64::new(0.0, ez), Complex64::from_polar(1.0, -beta * p.z)),
            Direction::Backward => (Complex64::new(0.0, -ez), Complex64::from_polar(1.0, beta * p.z)),
        };
        Ok(ComplexField {
            position: p,
            e: Vector3::new(
                Complex64::new(ex, 0.0) * phase,
                Complex64::new(ey, 0.0) * phase,
                ez * phase,
            ),
        })
    }
}

pub fn mode_field(sol: &GuidedModeSolution, beam: &BeamSpec, point: CylindricalPoint) -> Result<ComplexField> {
    beam.validate()?;
    PreparedBeam::from_mode(*sol, beam.clone()).field(point)
}

/// Relative tolerance on optical frequency for beams sharing a coherence group.
pub const GROUP_FREQUENCY_TOLERANCE: f64 = 1e-9;

/// Coherent sum of the fields of beams that belong to one coherence group.
pub fn superpose_group(beams: &[&PreparedBeam], point: CylindricalPoint) -> Result<ComplexField> {
    if let Some(first) = beams.first() {
        let f0 = first.spec.frequency();
        for b in beams.iter() {
            if b.spec.coherence_group != first.spec.coherence_group
                || ((b.spec.frequency() - f0) / f0).abs() > GROUP_FREQUENCY_TOLERANCE
            {
                return Err(Error::MixedWavelengthGroup {
                    group: first.spec.coherence_group,
                });
            }
        }
    }
    let mut total = ComplexField::zero(point);
    for b in beams {
        total.e += b.field(point)?.e;
    }
    Ok(total)
}
