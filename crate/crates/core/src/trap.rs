//! Adiabatic trap potentials `U = U_ls + U_surface`, minimum search,
//! harmonic fits, sublevel splittings and coherence estimates.

use crate::angular::angular_momentum_matrices;
use crate::atom::AtomDatabase;
use crate::error::{Error, Result};
use crate::light_shift::{stark_bilinear, Manifold, StarkHamiltonian};
use crate::polarizability::{polarizabilities, PolarizabilitySet};
use crate::surface::{surface_potential, SurfaceModel};
use crate::units::{hz_to_mk, AU_POLARIZABILITY, HBAR, PLANCK};
use crate::waveguide::{
    BeamSpec, ComplexField, CoreIndex, CoreMaterial, CylindricalPoint, Direction, FiberSpec, PreparedBeam,
    GROUP_FREQUENCY_TOLERANCE,
};
use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

/// Closest approach to the fiber surface used by every scan and search.
pub const SURFACE_GUARD: f64 = 20e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub radius_m: f64,
    pub core_index: CoreIndex,
    #[serde(default = "vacuum_index")]
    pub cladding_index: f64,
}

fn vacuum_index() -> f64 {
    1.0
}

impl FiberConfig {
    pub fn silica(radius_m: f64) -> Self {
        FiberConfig {
            radius_m,
            core_index: CoreIndex::Material(CoreMaterial::FusedSilica),
            cladding_index: 1.0,
        }
    }

    pub fn spec_at(&self, wavelength: f64) -> Result<FiberSpec> {
        FiberSpec::new(self.radius_m, self.core_index.at(wavelength), self.cladding_index)
    }
}

fn default_manifolds() -> Vec<Manifold> {
    vec![ground_manifold(3.0), ground_manifold(4.0), excited_manifold(4.0)]
}

pub fn ground_manifold(f: f64) -> Manifold {
    Manifold::parse("6S1/2", f).expect("valid ground manifold")
}

pub fn excited_manifold(f: f64) -> Manifold {
    Manifold::parse("6P3/2", f).expect("valid excited manifold")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfiguration {
    pub fiber: FiberConfig,
    pub beams: Vec<BeamSpec>,
    #[serde(default)]
    pub surface: SurfaceModel,
    /// Frequency offset between the two blue beams, Hz.
    #[serde(rename = "delta_fb_hz", default)]
    pub delta_fb: f64,
    #[serde(default = "default_manifolds")]
    pub manifolds: Vec<Manifold>,
}

impl TrapConfiguration {
    pub fn new(fiber: FiberConfig, beams: Vec<BeamSpec>) -> Self {
        TrapConfiguration {
            fiber,
            beams,
            surface: SurfaceModel::default(),
            delta_fb: 0.0,
            manifolds: default_manifolds(),
        }
    }

    /// Reference trap: a 1064 nm standing wave polarized along x and a
    /// single 780 nm beam polarized along y.
    pub fn vetsch() -> Self {
        let red = 1064e-9;
        let beams = vec![
            named("red-fwd", BeamSpec::new(red, 2.2e-3, Direction::Forward, 0.0)),
            named("red-bwd", BeamSpec::new(red, 2.2e-3, Direction::Backward, 0.0)),
            named(
                "blue",
                BeamSpec::new(780e-9, 25e-3, Direction::Forward, PI / 2.0).with_group(1),
            ),
        ];
        TrapConfiguration::new(FiberConfig::silica(250e-9), beams)
    }

    /// Magic-wavelength trap with a frequency-offset blue pair.
    pub fn magic() -> Self {
        let delta_fb = 30e9;
        let beams = vec![
            named("red-fwd", BeamSpec::new(937e-9, 0.95e-3, Direction::Forward, 0.0)),
            named("red-bwd", BeamSpec::new(937e-9, 0.95e-3, Direction::Backward, 0.0)),
            named(
                "blue-fwd",
                BeamSpec::new(687e-9, 16e-3, Direction::Forward, 0.0)
                    .with_group(1)
                    .with_offset(delta_fb / 2.0),
            ),
            named(
                "blue-bwd",
                BeamSpec::new(687e-9, 16e-3, Direction::Backward, 0.0)
                    .with_group(2)
                    .with_offset(-delta_fb / 2.0),
            ),
        ];
        let mut cfg = TrapConfiguration::new(FiberConfig::silica(250e-9), beams);
        cfg.delta_fb = delta_fb;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.beams.is_empty() {
            return bad("at least one beam is required".into());
        }
        if self.manifolds.is_empty() {
            return bad("at least one manifold is required".into());
        }
        if !(self.fiber.radius_m.is_finite() && self.fiber.radius_m > 0.0) {
            return bad(format!("fiber radius must be positive, got {}", self.fiber.radius_m));
        }
        if !(self.fiber.cladding_index.is_finite() && self.fiber.cladding_index >= 1.0) {
            return bad(format!(
                "cladding index must be >= 1, got {}",
                self.fiber.cladding_index
            ));
        }
        self.surface.validate().map_err(|e| Error::Config(e.to_string()))?;
        for (i, b) in self.beams.iter().enumerate() {
            b.validate().map_err(|e| Error::Config(format!("beam {i}: {e}")))?;
        }
        let mut groups: BTreeMap<i64, f64> = BTreeMap::new();
        for b in &self.beams {
            let f = b.frequency();
            match groups.get(&b.coherence_group) {
                Some(&f0) if ((f - f0) / f0).abs() > GROUP_FREQUENCY_TOLERANCE => {
                    return bad(format!(
                        "coherence group {} mixes beams of different optical frequency",
                        b.coherence_group
                    ));
                }
                Some(_) => {}
                None => {
                    groups.insert(b.coherence_group, f);
                }
            }
        }
        if !(self.delta_fb.is_finite() && self.delta_fb >= 0.0) {
            return bad(format!("delta_fb_hz must be non-negative, got {}", self.delta_fb));
        }
        let half = 0.5 * self.delta_fb;
        let offsets: Vec<f64> = self
            .beams
            .iter()
            .map(|b| b.detuning_offset)
            .filter(|o| *o != 0.0)
            .collect();
        if self.delta_fb == 0.0 {
            if !offsets.is_empty() {
                return bad("beam detuning offsets require a nonzero delta_fb_hz".into());
            }
        } else {
            for o in &offsets {
                if (o.abs() - half).abs() > 1e-9 * half {
                    return bad(format!("detuning offset {o} Hz is not ±delta_fb/2 = ±{half} Hz"));
                }
            }
            if !offsets.iter().any(|o| *o > 0.0) || !offsets.iter().any(|o| *o < 0.0) {
                return bad("nonzero delta_fb_hz needs beams offset by +delta_fb/2 and -delta_fb/2".into());
            }
        }
        Ok(())
    }

    /// Copy with a different blue-pair offset; offsets of the beams that are
    /// already offset are rescaled to `±δ/2`.
    pub fn with_delta_fb(&self, delta_fb: f64) -> Result<Self> {
        if self.delta_fb == 0.0 {
            return Err(Error::Config("configuration has no offset beams to rescale".into()));
        }
        let mut cfg = self.clone();
        for b in &mut cfg.beams {
            if b.detuning_offset != 0.0 {
                b.detuning_offset = b.detuning_offset.signum() * 0.5 * delta_fb;
            }
        }
        cfg.delta_fb = delta_fb;
        Ok(cfg)
    }

    pub fn scale_powers(&self, factor: f64) -> Self {
        let mut cfg = self.clone();
        for b in &mut cfg.beams {
            b.power *= factor;
        }
        cfg
    }
}

fn named(name: &str, mut b: BeamSpec) -> BeamSpec {
    b.name = Some(name.to_string());
    b
}

#[derive(Debug, Clone)]
struct BeamGroup {
    members: Vec<usize>,
    omega: f64,
    frequency: f64,
}

/// Eigenvalues (Hz, ascending) and eigenvectors (columns, `|F, m>` basis).
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticLevels {
    pub point: CylindricalPoint,
    pub manifold: Manifold,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

pub use crate::light_shift::hermitian_eigen;

/// A trap configuration with solved modes and cached polarizabilities.
pub struct TrapModel<'a> {
    db: &'a AtomDatabase,
    config: TrapConfiguration,
    beams: Vec<PreparedBeam>,
    groups: Vec<BeamGroup>,
    pol_cache: HashMap<Manifold, Vec<PolarizabilitySet>>,
}

impl<'a> TrapModel<'a> {
    pub fn new(db: &'a AtomDatabase, config: TrapConfiguration) -> Result<Self> {
        config.validate()?;
        let mut beams = Vec::with_capacity(config.beams.len());
        for spec in &config.beams {
            let fiber = config.fiber.spec_at(spec.actual_wavelength())?;
            beams.push(PreparedBeam::new(spec.clone(), &fiber)?);
        }
        let mut by_id: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, b) in beams.iter().enumerate() {
            by_id.entry(b.spec.coherence_group).or_default().push(i);
        }
        let groups: Vec<BeamGroup> = by_id
            .into_values()
            .map(|members| {
                let spec = &beams[members[0]].spec;
                BeamGroup {
                    omega: spec.angular_frequency(),
                    frequency: spec.frequency(),
                    members,
                }
            })
            .collect();
        let mut model = TrapModel {
            db,
            config,
            beams,
            groups,
            pol_cache: HashMap::new(),
        };
        let mut wanted = model.config.manifolds.clone();
        wanted.extend(default_manifolds());
        for m in wanted {
            if !model.pol_cache.contains_key(&m) {
                let p = model.compute_pols(m)?;
                model.pol_cache.insert(m, p);
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &TrapConfiguration {
        &self.config
    }

    pub fn database(&self) -> &AtomDatabase {
        self.db
    }

    pub fn beams(&self) -> &[PreparedBeam] {
        &self.beams
    }

    pub fn radius(&self) -> f64 {
        self.config.fiber.radius_m
    }

    pub fn mass(&self) -> f64 {
        self.db.constants.mass_kg
    }

    fn compute_pols(&self, manifold: Manifold) -> Result<Vec<PolarizabilitySet>> {
        self.groups
            .iter()
            .map(|g| polarizabilities(self.db, manifold, g.omega))
            .collect()
    }

    /// Polarizabilities of `manifold` at each coherence group's frequency.
    pub fn pols(&self, manifold: Manifold) -> Result<Cow<'_, [PolarizabilitySet]>> {
        match self.pol_cache.get(&manifold) {
            Some(p) => Ok(Cow::Borrowed(p.as_slice())),
            None => Ok(Cow::Owned(self.compute_pols(manifold)?)),
        }
    }

    /// Coherent field of every coherence group at a point.
    pub fn group_fields(&self, point: CylindricalPoint) -> Result<Vec<ComplexField>> {
        self.groups
            .iter()
            .map(|g| {
                let mut total = ComplexField::zero(point);
                for &i in &g.members {
                    total.e += self.beams[i].field(point)?.e;
                }
                Ok(total)
            })
            .collect()
    }

    /// Light-shift Hamiltonian summed incoherently over coherence groups.
    pub fn stark(&self, point: CylindricalPoint, manifold: Manifold) -> Result<StarkHamiltonian> {
        let pols = self.pols(manifold)?;
        let fields = self.group_fields(point)?;
        let mut h = StarkHamiltonian::zero(manifold);
        for (field, p) in fields.iter().zip(pols.iter()) {
            h.matrix += stark_bilinear(&field.e, &field.e, p, manifold);
        }
        Ok(h)
    }

    pub fn surface(&self, point: CylindricalPoint, manifold: Manifold) -> Result<f64> {
        surface_potential(&self.config.surface, point.r - self.radius(), &manifold)
    }

    /// Light shift plus surface potential.
    pub fn hamiltonian(&self, point: CylindricalPoint, manifold: Manifold) -> Result<StarkHamiltonian> {
        let surface = self.surface(point, manifold)?;
        let mut h = self.stark(point, manifold)?;
        h.add_scalar(surface);
        Ok(h)
    }

    /// Sublevel-averaged potential `Tr(H) / (2F+1)`, Hz. Only the scalar
    /// polarizability and the surface term contribute to the trace.
    pub fn mean_potential(&self, point: CylindricalPoint, manifold: Manifold) -> Result<f64> {
        let surface = self.surface(point, manifold)?;
        let pols = self.pols(manifold)?;
        let fields = self.group_fields(point)?;
        let light: f64 = fields
            .iter()
            .zip(pols.iter())
            .map(|(f, p)| -0.25 * p.scalar_au * f.intensity_amplitude_sq())
            .sum();
        Ok(light * AU_POLARIZABILITY / PLANCK + surface)
    }

    pub fn adiabatic_levels(&self, point: CylindricalPoint, manifold: Manifold) -> Result<AdiabaticLevels> {
        let h = self.hamiltonian(point, manifold)?;
        let (eigenvalues, eigenvectors) = hermitian_eigen(&h.matrix);
        Ok(AdiabaticLevels {
            point,
            manifold,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Period of the standing-wave lattice, `π/β`, of the first coherence
    /// group that contains both propagation directions.
    pub fn lattice_period(&self) -> Option<f64> {
        self.groups.iter().find_map(|g| {
            let fwd = g
                .members
                .iter()
                .any(|&i| self.beams[i].spec.direction == Direction::Forward);
            let bwd = g
                .members
                .iter()
                .any(|&i| self.beams[i].spec.direction == Direction::Backward);
            (fwd && bwd).then(|| PI / self.beams[g.members[0]].mode.beta)
        })
    }

    /// Unit vector along the first beam's input polarization.
    pub fn quantization_axis(&self) -> Vector3<f64> {
        let phi0 = self.beams[0].spec.polarization_angle;
        Vector3::new(phi0.cos(), phi0.sin(), 0.0)
    }

    /// Light-shift Hamiltonian from the instantaneous field, including the
    /// interference between groups whose frequencies differ by less than
    /// 1e-3 of the optical frequency, averaged over one beat period
    /// `1/δ_fb` with a 64-point rule. Cross terms use polarizabilities at the
    /// mean frequency of the two groups.
    pub fn beat_averaged_stark(&self, point: CylindricalPoint, manifold: Manifold) -> Result<StarkHamiltonian> {
        if self.config.delta_fb == 0.0 {
            return Err(Error::Config(
                "the beat-average check needs a nonzero delta_fb_hz".into(),
            ));
        }
        const SAMPLES: usize = 64;
        let pols = self.pols(manifold)?;
        let fields = self.group_fields(point)?;
        let period = 1.0 / self.config.delta_fb;
        let dim = manifold.dim();
        let mut avg = DMatrix::<Complex64>::zeros(dim, dim);
        let mut cross: Vec<(usize, usize, DMatrix<Complex64>)> = Vec::new();
        for (a, ga) in self.groups.iter().enumerate() {
            for (b, gb) in self.groups.iter().enumerate() {
                if a == b {
                    avg += stark_bilinear(&fields[a].e, &fields[a].e, &pols[a], manifold);
                    continue;
                }
                if (ga.frequency - gb.frequency).abs() >= 1e-3 * ga.frequency {
                    continue;
                }
                let p = polarizabilities(self.db, manifold, 0.5 * (ga.omega + gb.omega))?;
                cross.push((a, b, stark_bilinear(&fields[a].e, &fields[b].e, &p, manifold)));
            }
        }
        for k in 0..SAMPLES {
            let t = period * k as f64 / SAMPLES as f64;
            for (a, b, m) in &cross {
                let phase = 2.0 * PI * (self.groups[*b].frequency - self.groups[*a].frequency) * t;
                avg += m * (Complex64::from_polar(1.0, phase) / SAMPLES as f64);
            }
        }
        Ok(StarkHamiltonian { manifold, matrix: avg })
    }

    /// Relative difference between the beat-averaged and group Hamiltonians.
    pub fn beat_check(&self, point: CylindricalPoint, manifold: Manifold) -> Result<f64> {
        let avg = self.beat_averaged_stark(point, manifold)?;
        let grp = self.stark(point, manifold)?;
        let n = grp.matrix.norm();
        Ok(if n == 0.0 {
            0.0
        } else {
            (&avg.matrix - &grp.matrix).norm() / n
        })
    }

    /// Energy (Hz) of the eigenstate with the largest overlap with `|F, m>`
    /// quantized along the first beam's polarization axis.
    pub fn tracked_energy(&self, point: CylindricalPoint, manifold: Manifold, m: f64) -> Result<f64> {
        let reference = axis_eigenstate(manifold, self.quantization_axis(), m)?;
        let levels = self.adiabatic_levels(point, manifold)?;
        let mut best = (0.0, f64::NEG_INFINITY);
        for (i, e) in levels.eigenvalues.iter().enumerate() {
            let overlap = levels.eigenvectors.column(i).dotc(&reference).norm_sqr();
            if overlap > best.1 {
                best = (*e, overlap);
            }
        }
        Ok(best.0)
    }
}

/// Eigenvector of `F·n` with eigenvalue `m`.
pub fn axis_eigenstate(manifold: Manifold, axis: Vector3<f64>, m: f64) -> Result<nalgebra::DVector<Complex64>> {
    let f = manifold.f.value();
    if (m.abs() > f) || ((m - f).fract().abs() > 1e-9 && (m - f).fract().abs() < 1.0 - 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "m = {m} is not a sublevel of {manifold}"
        )));
    }
    let ops = angular_momentum_matrices(manifold.f);
    let fn_op = &ops[0] * Complex64::new(axis[0], 0.0)
        + &ops[1] * Complex64::new(axis[1], 0.0)
        + &ops[2] * Complex64::new(axis[2], 0.0);
    let (values, vectors) = hermitian_eigen(&fn_op);
    let idx = values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - m).abs().total_cmp(&(b.1 - m).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(vectors.column(idx).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScanGrid {
    /// Distance from the fiber surface.
    Radial {
        start_m: f64,
        stop_m: f64,
        points: usize,
        phi_rad: f64,
        z_m: f64,
    },
    Azimuthal {
        start_rad: f64,
        stop_rad: f64,
        points: usize,
        distance_m: f64,
        z_m: f64,
    },
    Axial {
        start_m: f64,
        stop_m: f64,
        points: usize,
        distance_m: f64,
        phi_rad: f64,
    },
}

impl ScanGrid {
    pub fn axis_name(&self) -> &'static str {
        match self {
            ScanGrid::Radial { .. } => "radial",
            ScanGrid::Azimuthal { .. } => "azimuthal",
            ScanGrid::Axial { .. } => "axial",
        }
    }

    fn range(&self) -> (f64, f64, usize) {
        match *self {
            ScanGrid::Radial {
                start_m,
                stop_m,
                points,
                ..
            } => (start_m, stop_m, points),
            ScanGrid::Azimuthal {
                start_rad,
                stop_rad,
                points,
                ..
            } => (start_rad, stop_rad, points),
            ScanGrid::Axial {
                start_m,
                stop_m,
                points,
                ..
            } => (start_m, stop_m, points),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (start, stop, n) = self.range();
        if n == 0 {
            return Err(Error::Config("scan needs at least one point".into()));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::Config("scan range must be finite".into()));
        }
        if n > 1 && stop <= start {
            return Err(Error::Config("scan stop must exceed start".into()));
        }
        let closest = match *self {
            ScanGrid::Radial { start_m, .. } => start_m,
            ScanGrid::Azimuthal { distance_m, .. } | ScanGrid::Axial { distance_m, .. } => distance_m,
        };
        if !(closest >= SURFACE_GUARD) {
            return Err(Error::Config(format!(
                "scan reaches {closest:e} m from the surface; the minimum is {SURFACE_GUARD:e} m"
            )));
        }
        Ok(())
    }

    /// Grid coordinates in ascending order.
    pub fn coords(&self) -> Vec<f64> {
        let (start, stop, n) = self.range();
        if n == 1 {
            return vec![start];
        }
        (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn point(&self, coord: f64, radius: f64) -> CylindricalPoint {
        match *self {
            ScanGrid::Radial { phi_rad, z_m, .. } => CylindricalPoint::new(radius + coord, phi_rad, z_m),
            ScanGrid::Azimuthal { distance_m, z_m, .. } => CylindricalPoint::new(radius + distance_m, coord, z_m),
            ScanGrid::Axial {
                distance_m, phi_rad, ..
            } => CylindricalPoint::new(radius + distance_m, phi_rad, coord),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub coord: f64,
    pub point: CylindricalPoint,
    /// Sorted eigenvalues (Hz) for each scanned manifold.
    pub levels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTable {
    pub axis: String,
    pub manifolds: Vec<Manifold>,
    pub rows: Vec<ScanRow>,
}

/// Adiabatic potentials on a one-dimensional grid, evaluated in parallel and
/// returned in grid order.
pub fn scan_potential(model: &TrapModel, manifolds: &[Manifold], grid: &ScanGrid) -> Result<ScanTable> {
    grid.validate()?;
    let a = model.radius();
    let rows = grid
        .coords()
        .into_par_iter()
        .map(|c| {
            let point = grid.point(c, a);
            let levels = manifolds
                .iter()
                .map(|m| model.adiabatic_levels(point, *m).map(|l| l.eigenvalues))
                .collect::<Result<Vec<_>>>()?;
            Ok(ScanRow {
                coord: c,
                point,
                levels,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanTable {
        axis: grid.axis_name().to_string(),
        manifolds: manifolds.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimumSearch {
    pub radial_points: usize,
    pub azimuthal_points: usize,
    pub axial_points: usize,
    /// Radial search range as distance from the surface, m.
    pub inner_m: f64,
    pub outer_m: f64,
    pub tolerance_m: f64,
}

impl Default for MinimumSearch {
    fn default() -> Self {
        MinimumSearch {
            radial_points: 100,
            azimuthal_points: 72,
            axial_points: 50,
            inner_m: 50e-9,
            outer_m: 600e-9,
            tolerance_m: 0.1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapMinimum {
    pub manifold: Manifold,
    pub position: CylindricalPoint,
    pub distance_m: f64,
    /// Sublevel-averaged potential at the minimum relative to `U(∞) = 0`.
    pub depth_hz: f64,
    pub depth_mk: f64,
    /// Lowest adiabatic level at the minimum.
    pub lowest_level_hz: f64,
    /// Depth relative to the lower of the surface-side barrier and `U(∞)`.
    pub escape_depth_hz: f64,
    pub escape_depth_mk: f64,
}

/// Minimizes `f(d, s, z)` (nm coordinates) with the Nelder-Mead simplex.
pub fn nelder_mead(f: impl Fn(&[f64; 3]) -> f64, start: [f64; 3], step: f64, tol: f64) -> Result<([f64; 3], f64)> {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(&start)));
    for k in 0..3 {
        let mut p = start;
        p[k] += step;
        simplex.push((p, f(&p)));
    }
    let combine = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            a[2] + t * (b[2] - a[2]),
        ]
    };
    for _ in 0..5000 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| ((p[0] - best[0]).powi(2) + (p[1] - best[1]).powi(2) + (p[2] - best[2]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        if size < tol {
            return Ok(simplex[0]);
        }
        let mut centroid = [0.0; 3];
        for (p, _) in &simplex[..3] {
            for k in 0..3 {
                centroid[k] += p[k] / 3.0;
            }
        }
        let (worst, fw) = simplex[3];
        let refl = combine(&centroid, &worst, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = combine(&centroid, &worst, -2.0);
            let fe = f(&exp);
            simplex[3] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (refl, fr);
        } else {
            let (toward, ft) = if fr < fw { (refl, fr) } else { (worst, fw) };
            let con = combine(&centroid, &toward, 0.5);
            let fc = f(&con);
            if fc < ft {
                simplex[3] = (con, fc);
            } else {
                for vertex in simplex.iter_mut().skip(1) {
                    let p = combine(&best, &vertex.0, 0.5);
                    *vertex = (p, f(&p));
                }
            }
        }
    }
    Err(Error::NonConvergence("Nelder-Mead did not reach the tolerance".into()))
}

/// Periodic index shift.
fn wrap(i: usize, d: isize, n: usize) -> usize {
    (i as isize + d).rem_euclid(n as isize) as usize
}

pub fn find_trap_minimum(model: &TrapModel, manifold: Manifold) -> Result<TrapMinimum> {
    find_trap_minimum_with(model, manifold, &MinimumSearch::default())
}

/// Coarse three-dimensional grid followed by Nelder-Mead refinement of the
/// sublevel-averaged potential.
pub fn find_trap_minimum_with(model: &TrapModel, manifold: Manifold, search: &MinimumSearch) -> Result<TrapMinimum> {
    let a = model.radius();
    let (nr, np) = (search.radial_points.max(3), search.azimuthal_points.max(1));
    let period = model.lattice_period();
    let nz = if period.is_some() {
        search.axial_points.max(1)
    } else {
        1
    };
    let d_of = |i: usize| search.inner_m + (search.outer_m - search.inner_m) * i as f64 / (nr - 1) as f64;
    let phi_of = |j: usize| 2.0 * PI * j as f64 / np as f64;
    let z_of = |k: usize| period.map_or(0.0, |p| p * k as f64 / nz as f64);

    let values = (0..nr * np * nz)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (np * nz), (idx / nz) % np, idx % nz);
            model.mean_potential(CylindricalPoint::new(a + d_of(i), phi_of(j), z_of(k)), manifold)
        })
        .collect::<Result<Vec<f64>>>()?;
    let at = |i: usize, j: usize, k: usize| values[(i * np + j) * nz + k];

    let mut best: Option<(usize, usize, usize, f64)> = None;
    for i in 1..nr - 1 {
        for j in 0..np {
            for k in 0..nz {
                let u = at(i, j, k);
                let radial = u < at(i - 1, j, k) && u < at(i + 1, j, k);
                let azimuthal = np == 1 || (u <= at(i, wrap(j, -1, np), k) && u <= at(i, wrap(j, 1, np), k));
                let axial = nz == 1 || (u <= at(i, j, wrap(k, -1, nz)) && u <= at(i, j, wrap(k, 1, nz)));
                if radial && azimuthal && axial && best.is_none_or(|b| u < b.3) {
                    best = Some((i, j, k, u));
                }
            }
        }
    }
    let (i0, j0, k0, _) = best.ok_or_else(|| {
        Error::NoMinimum(format!(
            "{manifold}: no interior minimum between the surface and {:e} m",
            search.outer_m
        ))
    })?;

    let r0 = a + d_of(i0);
    let (phi0, z0) = (phi_of(j0), z_of(k0));
    let objective = |x: &[f64; 3]| {
        let d = x[0] * 1e-9;
        if d < SURFACE_GUARD {
            return f64::INFINITY;
        }
        let p = CylindricalPoint::new(a + d, phi0 + x[1] * 1e-9 / r0, z0 + x[2] * 1e-9);
        model.mean_potential(p, manifold).unwrap_or(f64::INFINITY)
    };
    let step = 0.5 * (search.outer_m - search.inner_m) / (nr - 1) as f64 * 1e9;
    let (x, u_min) = nelder_mead(
        objective,
        [d_of(i0) * 1e9, 0.0, 0.0],
        step.max(1.0),
        search.tolerance_m * 1e9,
    )?;
    let d_min = x[0] * 1e-9;
    if d_min < SURFACE_GUARD + 2.0 * search.tolerance_m || d_min > search.outer_m || !(u_min < 0.0) {
        return Err(Error::NoMinimum(format!(
            "{manifold}: refinement left the trapping region (d = {d_min:e} m)"
        )));
    }
    let mut phi = (phi0 + x[1] * 1e-9 / r0).rem_euclid(2.0 * PI);
    if phi > PI {
        phi -= 2.0 * PI;
    }
    let z = match period {
        Some(p) => {
            let z = (z0 + x[2] * 1e-9).rem_euclid(p);
            if z > 0.5 * p {
                z - p
            } else {
                z
            }
        }
        None => z0 + x[2] * 1e-9,
    };
    let position = CylindricalPoint::new(a + d_min, phi, z);

    const BARRIER_SAMPLES: usize = 400;
    let barrier = (0..=BARRIER_SAMPLES)
        .into_par_iter()
        .map(|i| {
            let d = SURFACE_GUARD + (d_min - SURFACE_GUARD) * i as f64 / BARRIER_SAMPLES as f64;
            model.mean_potential(CylindricalPoint::new(a + d, phi, z), manifold)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let escape = u_min - barrier.min(0.0);
    let lowest = model.adiabatic_levels(position, manifold)?.eigenvalues[0];
    Ok(TrapMinimum {
        manifold,
        position,
        distance_m: d_min,
        depth_hz: u_min,
        depth_mk: hz_to_mk(u_min),
        lowest_level_hz: lowest,
        escape_depth_hz: escape,
        escape_depth_mk: hz_to_mk(escape),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub radial_window_m: f64,
    pub azimuthal_window_rad: f64,
    pub axial_window_m: f64,
    pub points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            radial_window_m: 10e-9,
            azimuthal_window_rad: 5f64.to_radians(),
            axial_window_m: 10e-9,
            points: 21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicFit {
    pub axis: &'static str,
    pub frequency_hz: f64,
    /// Quadratic coefficient of `U/h` in Hz/m².
    pub curvature_hz_per_m2: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapFrequencies {
    pub radial: HarmonicFit,
    pub azimuthal: HarmonicFit,
    /// Absent when no standing wave confines the atom along z.
    pub axial: Option<HarmonicFit>,
}

/// Least-squares `y = c0 + c1 x + c2 x²`; returns `(c0, c1, c2, R²)`.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidParameter(
            "quadratic fit needs at least three points".into(),
        ));
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let t = x / scale;
        let row = Vector3::new(1.0, t, t * t);
        ata += row * row.transpose();
        aty += row * y;
    }
    let c = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::InvalidParameter("degenerate quadratic fit".into()))?;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let t = x / scale;
        let fit = c[0] + c[1] * t + c[2] * t * t;
        ss_res += (y - fit).powi(2);
        ss_tot += (y - mean).powi(2);
    }
    let r2 = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Ok((c[0], c[1] / scale, c[2] / (scale * scale), r2))
}

fn harmonic_fit(
    model: &TrapModel,
    manifold: Manifold,
    axis: &'static str,
    window: f64,
    points: usize,
    at: impl Fn(f64) -> CylindricalPoint + Sync,
) -> Result<HarmonicFit> {
    let n = points.max(3);
    let xs: Vec<f64> = (0..n)
        .map(|i| -window + 2.0 * window * i as f64 / (n - 1) as f64)
        .collect();
    let ys = xs
        .par_iter()
        .map(|&x| model.mean_potential(at(x), manifold))
        .collect::<Result<Vec<f64>>>()?;
    let (_, _, c2, r2) = fit_quadratic(&xs, &ys)?;
    if !(r2 >= 0.99) || !(c2 > 0.0) {
        return Err(Error::PoorFit {
            axis: axis.to_string(),
            r_squared: r2,
        });
    }
    let k = 2.0 * PLANCK * c2;
    let frequency_hz = (k / model.mass()).sqrt() / (2.0 * PI);
    Ok(HarmonicFit {
        axis,
        frequency_hz,
        curvature_hz_per_m2: c2,
        r_squared: r2,
    })
}

/// Harmonic frequencies from quadratic fits of the sublevel-averaged
/// potential along r, the azimuthal arc and z through the minimum.
pub fn trap_frequencies(model: &TrapModel, minimum: &TrapMinimum, opts: &FitOptions) -> Result<TrapFrequencies> {
    let p = minimum.position;
    let m = minimum.manifold;
    let radial = harmonic_fit(model, m, "radial", opts.radial_window_m, opts.points, |x| {
        CylindricalPoint::new(p.r + x, p.phi, p.z)
    })?;
    let arc = opts.azimuthal_window_rad * p.r;
    let azimuthal = harmonic_fit(model, m, "azimuthal", arc, opts.points, |x| {
        CylindricalPoint::new(p.r, p.phi + x / p.r, p.z)
    })?;
    let axial = match model.lattice_period() {
        Some(_) => Some(harmonic_fit(
            model,
            m,
            "axial",
            opts.axial_window_m,
            opts.points,
            |x| CylindricalPoint::new(p.r, p.phi, p.z + x),
        )?),
        None => None,
    };
    Ok(TrapFrequencies {
        radial,
        azimuthal,
        axial,
    })
}

/// Ground-state rms width `sqrt(ħ / (4π m ν))` of a harmonic oscillator.
pub fn motional_width(frequency_hz: f64, mass_kg: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) {
        return Err(Error::NonPositiveFrequency(frequency_hz));
    }
    Ok((HBAR / (4.0 * PI * mass_kg * frequency_hz)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplittingPoint {
    pub position: CylindricalPoint,
    /// Largest minus smallest adiabatic level of the manifold, Hz.
    pub splitting_hz: f64,
}

pub fn splitting_map(model: &TrapModel, manifold: Manifold, path: &[CylindricalPoint]) -> Result<Vec<SplittingPoint>> {
    path.par_iter()
        .map(|&p| {
            let levels = model.adiabatic_levels(p, manifold)?.eigenvalues;
            let splitting_hz = levels[levels.len() - 1] - levels[0];
            Ok(SplittingPoint {
                position: p,
                splitting_hz,
            })
        })
        .collect()
}

/// Points along the azimuthal arc through `center`, `±half_span` radians.
pub fn azimuthal_path(center: CylindricalPoint, half_span: f64, points: usize) -> Vec<CylindricalPoint> {
    let n = points.max(1);
    if n == 1 {
        return vec![center];
    }
    (0..n)
        .map(|i| {
            let dphi = -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64;
            CylindricalPoint::new(center.r, center.phi + dphi, center.z)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcitedTrapping {
    pub manifold: Manifold,
    pub m: f64,
    /// The tracked sublevel has a local minimum along r through the ground minimum.
    pub radial_minimum: bool,
    /// Some adiabatic level of the manifold has such a radial minimum.
    pub any_level_radial_minimum: bool,
    pub minimum: Option<CylindricalPoint>,
    pub energy_hz: Option<f64>,
    pub offset_from_ground_m: Option<f64>,
    /// Local minimum confirmed along r, the azimuthal arc and z.
    pub trapped_all_directions: bool,
}

fn interior_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1])
        .collect()
}

fn distance(a: &CylindricalPoint, b: &CylindricalPoint) -> f64 {
    let (ax, ay) = (a.r * a.phi.cos(), a.r * a.phi.sin());
    let (bx, by) = (b.r * b.phi.cos(), b.r * b.phi.sin());
    ((ax - bx).powi(2) + (ay - by).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

/// Whether sublevel `m` of an excited manifold is trapped near the ground minimum.
pub fn excited_trapping(
    model: &TrapModel,
    manifold: Manifold,
    m: f64,
    ground: &TrapMinimum,
    search: &MinimumSearch,
    fit: &FitOptions,
) -> Result<ExcitedTrapping> {
    let a = model.radius();
    let g = ground.position;
    let step = 1e-9;
    let n = ((search.outer_m - SURFACE_GUARD) / step).round() as usize + 1;
    let ds: Vec<f64> = (0..n).map(|i| SURFACE_GUARD + step * i as f64).collect();
    let rows = ds
        .par_iter()
        .map(|&d| {
            let p = CylindricalPoint::new(a + d, g.phi, g.z);
            Ok((
                model.tracked_energy(p, manifold, m)?,
                model.adiabatic_levels(p, manifold)?.eigenvalues,
            ))
        })
        .collect::<Result<Vec<(f64, Vec<f64>)>>>()?;
    let tracked: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let dim = manifold.dim();
    let any_level = (0..dim).any(|k| {
        let curve: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
        !interior_minima(&curve).is_empty()
    });
    let candidates = interior_minima(&tracked);
    let mut result = ExcitedTrapping {
        manifold,
        m,
        radial_minimum: !candidates.is_empty(),
        any_level_radial_minimum: any_level,
        minimum: None,
        energy_hz: None,
        offset_from_ground_m: None,
        trapped_all_directions: false,
    };
    let Some(&i0) = candidates.iter().min_by(|&&x, &&y| {
        (ds[x] - ground.distance_m)
            .abs()
            .total_cmp(&(ds[y] - ground.distance_m).abs())
    }) else {
        return Ok(result);
    };

    let r0 = a + ds[i0];
    let energy = |p: CylindricalPoint| model.tracked_energy(p, manifold, m);
    let objective = |x: &[f64; 3]| {
        let d = x[0] * 1e-9;
        if d < SURFACE_GUARD {
            return f64::INFINITY;
        }
        energy(CylindricalPoint::new(
            a + d,
            g.phi + x[1] * 1e-9 / r0,
            g.z + x[2] * 1e-9,
        ))
        .unwrap_or(f64::INFINITY)
    };
    let (x, e_min) = nelder_mead(objective, [ds[i0] * 1e9, 0.0, 0.0], 2.0, search.tolerance_m * 1e9)?;
    let p = CylindricalPoint::new(a + x[0] * 1e-9, g.phi + x[1] * 1e-9 / r0, g.z + x[2] * 1e-9);
    let mut probes = vec![
        CylindricalPoint::new(p.r - fit.radial_window_m, p.phi, p.z),
        CylindricalPoint::new(p.r + fit.radial_window_m, p.phi, p.z),
        CylindricalPoint::new(p.r, p.phi - fit.azimuthal_window_rad, p.z),
        CylindricalPoint::new(p.r, p.phi + fit.azimuthal_window_rad, p.z),
    ];
    if model.lattice_period().is_some() {
        probes.push(CylindricalPoint::new(p.r, p.phi, p.z - fit.axial_window_m));
        probes.push(CylindricalPoint::new(p.r, p.phi, p.z + fit.axial_window_m));
    }
    let mut confined = p.r - a > SURFACE_GUARD + 1e-9;
    for q in probes {
        if q.r - a <= SURFACE_GUARD || energy(q)? <= e_min {
            confined = false;
        }
    }
    result.minimum = Some(p);
    result.energy_hz = Some(e_min);
    result.offset_from_ground_m = Some(distance(&p, &g));
    result.trapped_all_directions = confined && e_min < 0.0;
    Ok(result)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterizeOptions {
    #[serde(default = "default_ground")]
    pub ground: Manifold,
    /// Second ground manifold for the differential (clock) shift.
    #[serde(default = "default_partner")]
    pub hyperfine_partner: Option<Manifold>,
    #[serde(default = "default_excited")]
    pub excited: Option<Manifold>,
    #[serde(default)]
    pub excited_m: f64,
    /// Azimuthal arc displacement for the splitting estimate; defaults to
    /// the azimuthal motional width.
    #[serde(default)]
    pub splitting_displacement_m: Option<f64>,
    #[serde(default)]
    pub search: MinimumSearch,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default = "default_true")]
    pub beat_check: bool,
}

fn default_ground() -> Manifold {
    ground_manifold(4.0)
}

fn default_partner() -> Option<Manifold> {
    Some(ground_manifold(3.0))
}

fn default_excited() -> Option<Manifold> {
    Some(excited_manifold(4.0))
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        CharacterizeOptions {
            ground: default_ground(),
            hyperfine_partner: default_partner(),
            excited: default_excited(),
            excited_m: 0.0,
            splitting_displacement_m: None,
            search: MinimumSearch::default(),
            fit: FitOptions::default(),
            beat_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapCharacterization {
    pub minimum: TrapMinimum,
    pub frequencies: TrapFrequencies,
    pub motional_width_radial_m: f64,
    pub motional_width_azimuthal_m: f64,
    pub motional_width_axial_m: Option<f64>,
    pub azimuthal_width_rad: f64,
    pub splitting_at_minimum_hz: f64,
    pub splitting_displacement_m: f64,
    pub splitting_at_displacement_hz: f64,
    /// `|δν(φ_min) - δν(φ_min + σ_φ)|` of the ground splitting.
    pub splitting_spread_hz: f64,
    /// `1 / δν` at the minimum.
    pub coherence_time_s: f64,
    /// `1 / δν` at the displaced point.
    pub displaced_coherence_time_s: f64,
    /// Change of the sublevel-averaged hyperfine transition frequency over
    /// the azimuthal motional width.
    pub hyperfine_spread_hz: Option<f64>,
    /// `1 / hyperfine_spread_hz`.
    pub motional_coherence_time_s: Option<f64>,
    pub excited: Option<ExcitedTrapping>,
    pub beat_check_relative_error: Option<f64>,
}

fn inverse(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x.abs()
    }
}

pub fn characterize(model: &TrapModel, opts: &CharacterizeOptions) -> Result<TrapCharacterization> {
    let minimum = find_trap_minimum_with(model, opts.ground, &opts.search)?;
    let frequencies = trap_frequencies(model, &minimum, &opts.fit)?;
    let mass = model.mass();
    let sigma_r = motional_width(frequencies.radial.frequency_hz, mass)?;
    let sigma_arc = motional_width(frequencies.azimuthal.frequency_hz, mass)?;
    let sigma_z = frequencies
        .axial
        .map(|f| motional_width(f.frequency_hz, mass))
        .transpose()?;
    let p = minimum.position;
    let sigma_phi = sigma_arc / p.r;
    let displacement = opts.splitting_displacement_m.unwrap_or(sigma_arc);
    let displaced = CylindricalPoint::new(p.r, p.phi + displacement / p.r, p.z);
    let at_sigma = CylindricalPoint::new(p.r, p.phi + sigma_phi, p.z);
    let split = splitting_map(model, opts.ground, &[p, displaced, at_sigma])?;

    let hyperfine_spread = match opts.hyperfine_partner {
        Some(partner) => {
            let diff = |q: CylindricalPoint| -> Result<f64> {
                Ok(model.mean_potential(q, opts.ground)? - model.mean_potential(q, partner)?)
            };
            Some((diff(p)? - diff(at_sigma)?).abs())
        }
        None => None,
    };
    let excited = match opts.excited {
        Some(m) => Some(excited_trapping(
            model,
            m,
            opts.excited_m,
            &minimum,
            &opts.search,
            &opts.fit,
        )?),
        None => None,
    };
    let beat = if opts.beat_check && model.config().delta_fb != 0.0 {
        Some(model.beat_check(p, opts.ground)?)
    } else {
        None
    };
    Ok(TrapCharacterization {
        minimum,
        frequencies,
        motional_width_radial_m: sigma_r,
        motional_width_azimuthal_m: sigma_arc,
        motional_width_axial_m: sigma_z,
        azimuthal_width_rad: sigma_phi,
        splitting_at_minimum_hz: split[0].splitting_hz,
        splitting_displacement_m: displacement,
        splitting_at_displacement_hz: split[1].splitting_hz,
        splitting_spread_hz: (split[0].splitting_hz - split[2].splitting_hz).abs(),
        coherence_time_s: inverse(split[0].splitting_hz),
        displaced_coherence_time_s: inverse(split[1].splitting_hz),
        hyperfine_spread_hz: hyperfine_spread,
        motional_coherence_time_s: hyperfine_spread.map(inverse),
        excited,
        beat_check_relative_error: beat,
    })
}
