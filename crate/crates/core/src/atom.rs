//! Cesium level structure and electric-dipole line data.
//!
//! The data file is JSON. Every number is a `{"value": .., "source": ..}`
//! pair whose source tag must appear in the file's `sources` table. Level
//! labels carry the quantum numbers (`"6P3/2"` is n = 6, L = 1, J = 3/2).

use crate::angular::HalfInt;
use crate::error::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

const BUNDLED: &str = include_str!("../data/cs133.json");

/// Fine-structure manifolds that a cesium database must provide.
pub fn required_cesium_levels() -> Vec<String> {
    let mut v = Vec::new();
    for n in 6..=15 {
        v.push(format!("{n}S1/2"));
    }
    for n in 6..=11 {
        v.push(format!("{n}P1/2"));
    }
    for n in 6..=11 {
        v.push(format!("{n}P3/2"));
    }
    for n in 6..=11 {
        v.push(format!("{n}D3/2"));
    }
    for n in 6..=11 {
        v.push(format!("{n}D5/2"));
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelLabel {
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
}

impl LevelLabel {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Schema(format!("malformed level label '{s}'"));
        let split = s.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
        let n: u32 = s[..split].parse().map_err(|_| bad())?;
        let mut rest = s[split..].chars();
        let l = match rest.next().ok_or_else(bad)? {
            'S' => 0,
            'P' => 1,
            'D' => 2,
            'F' => 3,
            _ => return Err(bad()),
        };
        let jstr: String = rest.collect();
        let j = match jstr.split_once('/') {
            Some((num, "2")) => HalfInt::from_twice(num.parse().map_err(|_| bad())?),
            None => HalfInt::from_twice(2 * jstr.parse::<u32>().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        let two_l = 2 * l;
        if n == 0 || l >= n || j.twice() + 1 < two_l || j.twice() > two_l + 1 {
            return Err(bad());
        }
        Ok(LevelLabel { n, l, j })
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = ['S', 'P', 'D', 'F'][self.l as usize];
        write!(f, "{}{}{}", self.n, l, self.j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineLevel {
    pub label: LevelLabel,
    /// Energy above the ground centroid, Hz.
    pub energy_hz: f64,
    pub hyperfine_a_hz: f64,
    pub hyperfine_b_hz: f64,
    /// Natural linewidth Γ/2π, Hz (0 if unknown).
    pub linewidth_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleLine {
    /// Index of the lower level in the database.
    pub lower: usize,
    pub upper: usize,
    /// Reduced matrix element `<J||d||J'>` in e·a0.
    pub reduced_dipole_ea0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomConstants {
    pub mass_kg: f64,
    pub ground_hyperfine_hz: f64,
}

#[derive(Debug, Clone)]
pub struct AtomDatabase {
    pub species: String,
    pub nuclear_spin: HalfInt,
    pub constants: AtomConstants,
    levels: Vec<FineLevel>,
    lines: Vec<DipoleLine>,
    warnings: Vec<String>,
}

pub fn check_selection_rules(a: &LevelLabel, b: &LevelLabel) -> Result<()> {
    let dl = a.l as i64 - b.l as i64;
    let dj = a.j.twice() as i64 - b.j.twice() as i64;
    if dl.abs() != 1 || dj.abs() > 2 {
        return Err(Error::SelectionRule(format!("{a} - {b} violates dL = ±1, |dJ| <= 1")));
    }
    Ok(())
}

/// Hyperfine shift of level `F` from the magnetic-dipole and
/// electric-quadrupole constants.
pub fn hyperfine_shift(j: HalfInt, i: HalfInt, f: HalfInt, a_hz: f64, b_hz: f64) -> f64 {
    let (jv, iv, fv) = (j.value(), i.value(), f.value());
    let k = fv * (fv + 1.0) - iv * (iv + 1.0) - jv * (jv + 1.0);
    let mut shift = 0.5 * a_hz * k;
    if jv >= 1.0 && iv >= 1.0 && b_hz != 0.0 {
        shift += b_hz * (1.5 * k * (k + 1.0) - 2.0 * iv * (iv + 1.0) * jv * (jv + 1.0))
            / (4.0 * iv * (2.0 * iv - 1.0) * jv * (2.0 * jv - 1.0));
    }
    shift
}

/// Allowed total angular momenta `|J - I| ..= J + I`.
pub fn f_range(j: HalfInt, i: HalfInt) -> Vec<HalfInt> {
    let lo = (j.twice() as i64 - i.twice() as i64).unsigned_abs() as u32;
    (lo..=j.twice() + i.twice())
        .step_by(2)
        .map(HalfInt::from_twice)
        .collect()
}

impl AtomDatabase {
    /// Builds a database from parts, checking references and selection rules.
    pub fn new(
        species: impl Into<String>,
        nuclear_spin: HalfInt,
        constants: AtomConstants,
        levels: Vec<FineLevel>,
        lines: Vec<DipoleLine>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for l in &levels {
            if !seen.insert(l.label) {
                return Err(Error::Schema(format!("duplicate level {}", l.label)));
            }
            if !l.energy_hz.is_finite() || !l.hyperfine_a_hz.is_finite() || !l.hyperfine_b_hz.is_finite() {
                return Err(Error::Schema(format!("non-finite data for level {}", l.label)));
            }
            if !(l.linewidth_hz >= 0.0) {
                return Err(Error::Schema(format!("negative linewidth for level {}", l.label)));
            }
        }
        for line in &lines {
            let (lo, up) = match (levels.get(line.lower), levels.get(line.upper)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Schema("dipole line refers to a missing level".into())),
            };
            check_selection_rules(&lo.label, &up.label)?;
            if !(line.reduced_dipole_ea0 > 0.0 && line.reduced_dipole_ea0.is_finite()) {
                return Err(Error::Schema(format!(
                    "matrix element of {} - {} must be positive",
                    lo.label, up.label
                )));
            }
            if up.energy_hz <= lo.energy_hz {
                return Err(Error::Schema(format!(
                    "line {} - {}: upper level lies below lower",
                    lo.label, up.label
                )));
            }
        }
        if !(constants.mass_kg > 0.0) {
            return Err(Error::Schema("atomic mass must be positive".into()));
        }
        Ok(AtomDatabase {
            species: species.into(),
            nuclear_spin,
            constants,
            levels,
            lines,
            warnings: Vec::new(),
        })
    }

    /// The cesium data file shipped with the crate.
    pub fn bundled() -> Self {
        parse_atom_data(BUNDLED).expect("bundled atom data is valid")
    }

    pub fn levels(&self) -> &[FineLevel] {
        &self.levels
    }

    pub fn lines(&self) -> &[DipoleLine] {
        &self.lines
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn level_index(&self, label: &LevelLabel) -> Result<usize> {
        self.levels
            .iter()
            .position(|l| l.label == *label)
            .ok_or_else(|| Error::UnknownLevel(label.to_string()))
    }

    pub fn level(&self, label: &str) -> Result<&FineLevel> {
        let lbl = LevelLabel::parse(label).map_err(|_| Error::UnknownLevel(label.into()))?;
        Ok(&self.levels[self.level_index(&lbl)?])
    }

    /// Lines touching level `idx`, as `(other level index, reduced element)`.
    pub fn lines_of(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lines.iter().filter_map(move |l| {
            if l.lower == idx {
                Some((l.upper, l.reduced_dipole_ea0))
            } else if l.upper == idx {
                Some((l.lower, l.reduced_dipole_ea0))
            } else {
                None
            }
        })
    }

    /// Copy of the database keeping only lines accepted by `keep`.
    pub fn filter_lines(&self, keep: impl Fn(&FineLevel, &FineLevel) -> bool) -> Self {
        let mut db = self.clone();
        db.lines.retain(|l| keep(&self.levels[l.lower], &self.levels[l.upper]));
        db
    }

    /// Hyperfine sublevels of a fine level: `(F, energy in Hz)` ordered by F.
    pub fn hyperfine_levels(&self, level: &FineLevel) -> Vec<(HalfInt, f64)> {
        hyperfine_levels(level, self.nuclear_spin)
    }

    pub fn hyperfine_energy(&self, level: &FineLevel, f: HalfInt) -> f64 {
        level.energy_hz
            + hyperfine_shift(
                level.label.j,
                self.nuclear_spin,
                f,
                level.hyperfine_a_hz,
                level.hyperfine_b_hz,
            )
    }
}

pub fn hyperfine_levels(level: &FineLevel, nuclear_spin: HalfInt) -> Vec<(HalfInt, f64)> {
    f_range(level.label.j, nuclear_spin)
        .into_iter()
        .map(|f| {
            let shift = hyperfine_shift(
                level.label.j,
                nuclear_spin,
                f,
                level.hyperfine_a_hz,
                level.hyperfine_b_hz,
            );
            (f, level.energy_hz + shift)
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Tagged {
    value: f64,
    source: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Tagged(Tagged),
    Untagged(serde_json::Value),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    nuclear_spin: RawNumber,
    mass_kg: RawNumber,
    ground_hyperfine_hz: RawNumber,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    label: String,
    energy_hz: RawNumber,
    hyperfine_a_hz: Option<RawNumber>,
    hyperfine_b_hz: Option<RawNumber>,
    linewidth_hz: Option<RawNumber>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    lower: String,
    upper: String,
    reduced_dipole_ea0: RawNumber,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    format: String,
    version: String,
    species: String,
    #[allow(dead_code)]
    provenance: String,
    sources: BTreeMap<String, String>,
    constants: RawConstants,
    levels: Vec<RawLevel>,
    lines: Vec<RawLine>,
}

struct Resolver<'a> {
    sources: &'a BTreeMap<String, String>,
}

impl Resolver<'_> {
    fn get(&self, n: &RawNumber, what: &str) -> Result<f64> {
        match n {
            RawNumber::Tagged(t) => {
                if !self.sources.contains_key(&t.source) {
                    return Err(Error::Schema(format!("{what}: unknown source tag '{}'", t.source)));
                }
                Ok(t.value)
            }
            RawNumber::Untagged(v) => Err(Error::Schema(format!(
                "{what}: entry {v} is not a {{\"value\", \"source\"}} pair"
            ))),
        }
    }
}

pub fn parse_atom_data(text: &str) -> Result<AtomDatabase> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => Error::Parse(e.to_string()),
    })?;
    if raw.format != "nanotrap-atom-data" {
        return Err(Error::Schema(format!("unsupported format '{}'", raw.format)));
    }
    if raw.version != "1" {
        return Err(Error::Schema(format!("unsupported version '{}'", raw.version)));
    }
    let res = Resolver { sources: &raw.sources };
    let spin = res.get(&raw.constants.nuclear_spin, "constants.nuclear_spin")?;
    let nuclear_spin =
        HalfInt::from_value(spin).ok_or_else(|| Error::Schema(format!("nuclear spin {spin} is not a half-integer")))?;
    let constants = AtomConstants {
        mass_kg: res.get(&raw.constants.mass_kg, "constants.mass_kg")?,
        ground_hyperfine_hz: res.get(&raw.constants.ground_hyperfine_hz, "constants.ground_hyperfine_hz")?,
    };

    let mut warnings = Vec::new();
    let mut levels = Vec::with_capacity(raw.levels.len());
    for rl in &raw.levels {
        let label = LevelLabel::parse(&rl.label)?;
        let ctx = |f: &str| format!("level {}: {f}", rl.label);
        let opt = |n: &Option<RawNumber>, f: &str| -> Result<Option<f64>> {
            n.as_ref().map(|v| res.get(v, &ctx(f))).transpose()
        };
        let a = opt(&rl.hyperfine_a_hz, "hyperfine_a_hz")?;
        let b = opt(&rl.hyperfine_b_hz, "hyperfine_b_hz")?;
        let g = opt(&rl.linewidth_hz, "linewidth_hz")?;
        if a.is_none() {
            warnings.push(format!("{}: no hyperfine constants, using A = B = 0", rl.label));
        }
        if g.is_none() {
            warnings.push(format!("{}: no natural linewidth, using 0", rl.label));
        }
        levels.push(FineLevel {
            label,
            energy_hz: res.get(&rl.energy_hz, &ctx("energy_hz"))?,
            hyperfine_a_hz: a.unwrap_or(0.0),
            hyperfine_b_hz: b.unwrap_or(0.0),
            linewidth_hz: g.unwrap_or(0.0),
        });
    }

    let find = |s: &str| -> Result<usize> {
        let lbl = LevelLabel::parse(s)?;
        levels
            .iter()
            .position(|l| l.label == lbl)
            .ok_or_else(|| Error::Schema(format!("dipole line refers to undeclared level {s}")))
    };
    let mut lines = Vec::with_capacity(raw.lines.len());
    for rl in &raw.lines {
        let lower = find(&rl.lower)?;
        let upper = find(&rl.upper)?;
        check_selection_rules(&levels[lower].label, &levels[upper].label)?;
        let d = res.get(&rl.reduced_dipole_ea0, &format!("line {} - {}", rl.lower, rl.upper))?;
        lines.push(DipoleLine {
            lower,
            upper,
            reduced_dipole_ea0: d,
        });
    }

    let mut db = AtomDatabase::new(raw.species, nuclear_spin, constants, levels, lines)?;
    if db.species.ends_with("Cs") {
        check_cesium_coverage(&db)?;
    }
    if !warnings.is_empty() {
        log::info!(
            "atom data: {} levels lack hyperfine constants or linewidths; defaults of 0 are used",
            warnings.len()
        );
        for w in &warnings {
            log::debug!("{w}");
        }
    }
    db.warnings = warnings;
    Ok(db)
}

fn check_cesium_coverage(db: &AtomDatabase) -> Result<()> {
    let ground = db
        .level_index(&LevelLabel::parse("6S1/2")?)
        .map_err(|_| missing("6S1/2"))?;
    let p32 = db
        .level_index(&LevelLabel::parse("6P3/2")?)
        .map_err(|_| missing("6P3/2"))?;
    for name in required_cesium_levels() {
        let idx = db.level_index(&LevelLabel::parse(&name)?).map_err(|_| missing(&name))?;
        if idx == ground {
            continue;
        }
        let linked = db.lines_of(idx).any(|(other, _)| other == ground || other == p32);
        if !linked {
            return Err(Error::Schema(format!(
                "level {name} has no dipole line to 6S1/2 or 6P3/2"
            )));
        }
    }
    Ok(())
}

fn missing(name: &str) -> Error {
    Error::Schema(format!("required level {name} is missing"))
}

pub fn load_atom_data(path: impl AsRef<Path>) -> Result<AtomDatabase> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_atom_data(&text)
}
