#![allow(dead_code)]

pub mod checks;

use nalgebra::{DMatrix, Vector3};
use nanotrap::angular::{angular_momentum_matrices, wigner_3j, HalfInt};
use nanotrap::atom::{f_range, AtomConstants, AtomDatabase, DipoleLine, FineLevel, LevelLabel};
use nanotrap::light_shift::{stark_hamiltonian, Manifold};
use nanotrap::polarizability::polarizabilities;
use nanotrap::units::{AU_POLARIZABILITY, HARTREE_FREQUENCY, PLANCK};
use nanotrap::waveguide::{ComplexField, CylindricalPoint};
use num_complex::Complex64;
use proptest::prelude::*;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cmat(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| c(v, 0.0))
}

/// Field conversion from atomic units to V/m.
pub fn au_field_to_si() -> f64 {
    (PLANCK * HARTREE_FREQUENCY / AU_POLARIZABILITY).sqrt()
}

/// `(J_x, J_y, J_z, I_x, I_y, I_z)` on the uncoupled `|J mJ> |I mI>` space.
fn uncoupled_ops(j: HalfInt, i: HalfInt) -> ([DMatrix<Complex64>; 3], [DMatrix<Complex64>; 3]) {
    let dj = j.multiplicity();
    let di = i.multiplicity();
    let jo = angular_momentum_matrices(j);
    let io = angular_momentum_matrices(i);
    let idj = DMatrix::<Complex64>::identity(dj, dj);
    let idi = DMatrix::<Complex64>::identity(di, di);
    (
        [jo[0].kronecker(&idi), jo[1].kronecker(&idi), jo[2].kronecker(&idi)],
        [idj.kronecker(&io[0]), idj.kronecker(&io[1]), idj.kronecker(&io[2])],
    )
}

fn total_f_squared(j: HalfInt, i: HalfInt) -> (DMatrix<Complex64>, [DMatrix<Complex64>; 3]) {
    let (jo, io) = uncoupled_ops(j, i);
    let f = [&jo[0] + &io[0], &jo[1] + &io[1], &jo[2] + &io[2]];
    let f2 = &f[0] * &f[0] + &f[1] * &f[1] + &f[2] * &f[2];
    (f2, f)
}

/// Spectral projector onto total angular momentum `F` in the uncoupled space.
fn hyperfine_projector(j: HalfInt, i: HalfInt, f: HalfInt) -> DMatrix<Complex64> {
    let (f2, _) = total_f_squared(j, i);
    let n = f2.nrows();
    let target = f.value() * (f.value() + 1.0);
    let mut p = DMatrix::<Complex64>::identity(n, n);
    for other in f_range(j, i) {
        if other == f {
            continue;
        }
        let v = other.value() * (other.value() + 1.0);
        let shifted = &f2 - DMatrix::<Complex64>::identity(n, n) * c(v, 0.0);
        p = p * shifted * c(1.0 / (target - v), 0.0);
    }
    p
}

/// Columns `|F, m>`, m = -F..F, built from the stretched state with the
/// lowering operator so that the phases follow the standard convention.
fn coupled_basis(j: HalfInt, i: HalfInt, f: HalfInt) -> DMatrix<Complex64> {
    let (_, fo) = total_f_squared(j, i);
    let p = hyperfine_projector(j, i, f);
    let n = p.nrows();
    let di = i.multiplicity();
    let fv = f.value();
    // stretched state: project the uncoupled states with mJ + mI = F
    let mut top = None;
    for idx in 0..n {
        let mj = -j.value() + (idx / di) as f64;
        let mi = -i.value() + (idx % di) as f64;
        if (mj + mi - fv).abs() < 1e-9 {
            let mut e = nalgebra::DVector::<Complex64>::zeros(n);
            e[idx] = c(1.0, 0.0);
            let v = &p * e;
            if v.norm() > 1e-6 {
                top = Some(v.normalize());
                break;
            }
        }
    }
    let top = top.expect("stretched state exists");
    let lower = &fo[0] - &fo[1] * c(0.0, 1.0);
    let dim = f.multiplicity();
    let mut cols = vec![top];
    for _ in 1..dim {
        let v = &lower * cols.last().unwrap();
        cols.push(v.normalize());
    }
    cols.reverse();
    DMatrix::from_columns(&cols)
}

/// Cartesian dipole blocks `<J' mJ'| d_k |J mJ>` (atomic units) tensored
/// with the identity on the nuclear spin.
fn dipole_blocks(jp: HalfInt, j: HalfInt, i: HalfInt, reduced: f64) -> [DMatrix<Complex64>; 3] {
    let (dp, d) = (jp.multiplicity(), j.multiplicity());
    let mut sph = Vec::new();
    for q in [-1i64, 0, 1] {
        let m = DMatrix::<f64>::from_fn(dp, d, |r, col| {
            let tmp = 2 * r as i64 - jp.twice() as i64;
            let tm = 2 * col as i64 - j.twice() as i64;
            let w = wigner_3j(jp.twice() as i64, 2, j.twice() as i64, -tmp, 2 * q, tm);
            let phase = if ((jp.twice() as i64 - tmp) / 2).rem_euclid(2) == 0 {
                1.0
            } else {
                -1.0
            };
            phase * w * reduced
        });
        sph.push(cmat(&m));
    }
    let s = 0.5f64.sqrt();
    let dx = (&sph[0] - &sph[2]) * c(s, 0.0);
    let dy = (&sph[0] + &sph[2]) * c(0.0, s);
    let dz = sph[1].clone();
    let idi = DMatrix::<Complex64>::identity(i.multiplicity(), i.multiplicity());
    [dx.kronecker(&idi), dy.kronecker(&idi), dz.kronecker(&idi)]
}

/// Brute-force second-order light shift (Hz) on `manifold` for the
/// positive-frequency amplitude `e_au` (atomic units), summed over every
/// hyperfine sublevel of every coupled level:
///
/// `H = 1/4 Σ_e [ (d·E) P_e (d·E*) / (E_g - E_e + ħω) + (d·E*) P_e (d·E) / (E_g - E_e - ħω) ]`
pub fn oracle_hamiltonian(
    db: &AtomDatabase,
    manifold: Manifold,
    omega: f64,
    e_au: &Vector3<Complex64>,
) -> DMatrix<Complex64> {
    let i = db.nuclear_spin;
    let idx = db.level_index(&manifold.level).unwrap();
    let level = &db.levels()[idx];
    let j = level.label.j;
    let basis = coupled_basis(j, i, manifold.f);
    let eg = db.hyperfine_energy(level, manifold.f) / HARTREE_FREQUENCY;
    let w = omega / (2.0 * std::f64::consts::PI * HARTREE_FREQUENCY);
    let n = basis.nrows();
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for (other_idx, d) in db.lines_of(idx) {
        let other = &db.levels()[other_idx];
        let jp = other.label.j;
        let x = dipole_blocks(jp, j, i, d);
        let d_e = &x[0] * e_au[0] + &x[1] * e_au[1] + &x[2] * e_au[2];
        let d_ec = &x[0] * e_au[0].conj() + &x[1] * e_au[1].conj() + &x[2] * e_au[2].conj();
        // ground <- excited blocks of d·E and d·E*, from hermiticity of d_k
        let d_e_ge = x[0].adjoint() * e_au[0] + x[1].adjoint() * e_au[1] + x[2].adjoint() * e_au[2];
        let d_ec_ge =
            x[0].adjoint() * e_au[0].conj() + x[1].adjoint() * e_au[1].conj() + x[2].adjoint() * e_au[2].conj();
        for fp in f_range(jp, i) {
            let p = hyperfine_projector(jp, i, fp);
            let ee = db.hyperfine_energy(other, fp) / HARTREE_FREQUENCY;
            let t1 = &d_e_ge * &p * &d_ec * c(1.0 / (eg - ee + w), 0.0);
            let t2 = &d_ec_ge * &p * &d_e * c(1.0 / (eg - ee - w), 0.0);
            h += (t1 + t2) * c(0.25, 0.0);
        }
    }
    basis.adjoint() * h * basis * c(HARTREE_FREQUENCY, 0.0)
}

/// The library's Hamiltonian for the same field.
pub fn library_hamiltonian(
    db: &AtomDatabase,
    manifold: Manifold,
    omega: f64,
    e_au: &Vector3<Complex64>,
) -> nanotrap::Result<DMatrix<Complex64>> {
    let pols = polarizabilities(db, manifold, omega)?;
    let field = ComplexField {
        position: CylindricalPoint::new(1.0, 0.0, 0.0),
        e: e_au * c(au_field_to_si(), 0.0),
    };
    Ok(stark_hamiltonian(&field, &pols, manifold)?.matrix)
}

/// Removes the rank-2 part of an operator on a manifold.
pub fn drop_rank2(h: &DMatrix<Complex64>, f: HalfInt) -> DMatrix<Complex64> {
    let n = h.nrows();
    let fv = f.value();
    let mut out = DMatrix::<Complex64>::identity(n, n) * (h.trace() / n as f64);
    if fv > 0.0 {
        let ops = angular_momentum_matrices(f);
        let norm = fv * (fv + 1.0) * (2.0 * fv + 1.0) / 3.0;
        for op in &ops {
            let b = (h * op).trace() / norm;
            out += op * b;
        }
    }
    out
}

pub fn relative_error(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Library versus oracle, with the rank-2 part removed for J = 1/2 where the
/// library sets it to zero.
pub fn oracle_mismatch(
    db: &AtomDatabase,
    manifold: Manifold,
    omega: f64,
    e_au: &Vector3<Complex64>,
) -> nanotrap::Result<f64> {
    let lib = library_hamiltonian(db, manifold, omega, e_au)?;
    let mut oracle = oracle_hamiltonian(db, manifold, omega, e_au);
    if manifold.level.j.twice() == 1 {
        oracle = drop_rank2(&oracle, manifold.f);
    }
    Ok(relative_error(&lib, &oracle))
}

#[derive(Debug, Clone)]
pub struct ToyParams {
    pub spin_twice: u32,
    pub energies: [f64; 5],
    pub dipoles: [f64; 7],
    pub hyperfine_a: [f64; 6],
    pub hyperfine_b: [f64; 6],
}

/// Six-level toy atom: 6S1/2, 6P1/2, 6P3/2, 7S1/2, 5D3/2, 5D5/2.
pub fn toy_database(p: &ToyParams) -> AtomDatabase {
    let labels = ["6S1/2", "6P1/2", "6P3/2", "7S1/2", "5D3/2", "5D5/2"];
    let e = p.energies;
    let energies = [
        0.0,
        e[0],
        e[0] + e[1],
        e[0] + e[1] + e[2],
        e[0] + e[1] + e[3],
        e[0] + e[1] + e[3] + e[4],
    ];
    let levels: Vec<FineLevel> = labels
        .iter()
        .enumerate()
        .map(|(k, l)| FineLevel {
            label: LevelLabel::parse(l).unwrap(),
            energy_hz: energies[k],
            hyperfine_a_hz: p.hyperfine_a[k],
            hyperfine_b_hz: p.hyperfine_b[k],
            linewidth_hz: 0.0,
        })
        .collect();
    let pairs = [(0, 1), (0, 2), (1, 3), (2, 3), (1, 4), (2, 4), (2, 5)];
    let lines = pairs
        .iter()
        .zip(p.dipoles)
        .map(|(&(lower, upper), d)| DipoleLine {
            lower,
            upper,
            reduced_dipole_ea0: d,
        })
        .collect();
    AtomDatabase::new(
        "toy",
        HalfInt::from_twice(p.spin_twice),
        AtomConstants {
            mass_kg: 2.2e-25,
            ground_hyperfine_hz: 0.0,
        },
        levels,
        lines,
    )
    .unwrap()
}

pub fn field_strategy() -> impl Strategy<Value = Vector3<Complex64>> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_map(|v| Vector3::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5])) * c(1e-6, 0.0))
}

pub fn toy_strategy() -> impl Strategy<Value = ToyParams> {
    (
        prop::sample::select(vec![1u32, 3, 5, 7]),
        (
            2.5e14f64..3.5e14,
            5e12f64..2e13,
            5e13f64..1.2e14,
            5e13f64..1.5e14,
            1e11f64..5e12,
        ),
        prop::array::uniform7(0.3f64..8.0),
        prop::array::uniform6(-5e8f64..3e9),
        prop::array::uniform6(-1e8f64..1e8),
    )
        .prop_map(|(spin_twice, e, dipoles, hyperfine_a, hyperfine_b)| ToyParams {
            spin_twice,
            energies: [e.0, e.1, e.2, e.3, e.4],
            dipoles,
            hyperfine_a,
            hyperfine_b,
        })
}

/// Smallest `|ν_line − ν| / ν` over every hyperfine-resolved line of a manifold.
pub fn nearest_detuning_fraction(db: &AtomDatabase, manifold: Manifold, nu: f64) -> f64 {
    let idx = db.level_index(&manifold.level).unwrap();
    let eg = db.hyperfine_energy(&db.levels()[idx], manifold.f);
    let mut best = f64::INFINITY;
    for (o, _) in db.lines_of(idx) {
        let other = &db.levels()[o];
        for fp in f_range(other.label.j, db.nuclear_spin) {
            let gap = (db.hyperfine_energy(other, fp) - eg).abs();
            best = best.min((gap - nu).abs() / nu);
        }
    }
    best
}
