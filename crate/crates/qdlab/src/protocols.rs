//! Gate pipelines built from the Wilson operators: standard qudit gates,
//! the order-6 qubit universality check, the toric phase-gate random walk,
//! the D(Z3) metaplectic gate set and the ancilla CNOT circuit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::boundary_defect::LagrangianVector;
use crate::linalg::{c, cr, diag, identity, kron, max_diff, unitarity_residual, CMat, C64};
use crate::mtc_data::{builtin, solve_m3j, MtcData, MtcError};
use crate::wilson_ops::{self, ChargeTarget, OperatorMatrix, WilsonError};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Wilson(#[from] WilsonError),
    #[error(transparent)]
    Mtc(#[from] MtcError),
    #[error("qudit dimension must be at least 2")]
    Dimension,
    #[error("measurement outcome {0} out of range")]
    Outcome(usize),
    #[error("check failed: {0}")]
    Check(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// textbook definition
    Standard,
    /// computed from Wilson operators, braids or charge projections
    Derived,
    /// needed but not produced topologically here
    AssumedExternal,
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub name: String,
    pub matrix: CMat,
    pub clifford: bool,
    pub measurement: bool,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct GateSet {
    pub d: usize,
    pub gates: Vec<Gate>,
}

impl GateSet {
    pub fn get(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    fn push(&mut self, name: &str, matrix: CMat, clifford: bool, provenance: Provenance) {
        self.gates.push(Gate { name: name.into(), matrix, clifford, measurement: false, provenance });
    }
}

pub fn omega(d: usize) -> C64 {
    crate::linalg::root_of_unity(1, d)
}

fn w_pow(d: usize, k: usize) -> C64 {
    crate::linalg::root_of_unity((k % d) as i64, d)
}

pub fn hadamard(d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| w_pow(d, i * j) / (d as f64).sqrt())
}

pub fn shift(d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| if i == (j + 1) % d { cr(1.0) } else { cr(0.0) })
}

pub fn clock(d: usize) -> CMat {
    diag(&(0..d).map(|j| w_pow(d, j)).collect::<Vec<_>>())
}

/// |i>|j> -> |i>|i+j>, control first
pub fn sum_gate(d: usize) -> CMat {
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + (i + j) % d, i * d + j)] = cr(1.0);
        }
    }
    m
}

pub fn controlled_z(d: usize) -> CMat {
    diag(&(0..d * d).map(|k| w_pow(d, (k / d) * (k % d))).collect::<Vec<_>>())
}

pub fn standard_gates(d: usize) -> Result<GateSet, ProtocolError> {
    if d < 2 {
        return Err(ProtocolError::Dimension);
    }
    let mut set = GateSet { d, gates: Vec::new() };
    set.push("H", hadamard(d), true, Provenance::Standard);
    set.push("SUM", sum_gate(d), true, Provenance::Standard);
    set.push("X", shift(d), true, Provenance::Standard);
    set.push("Z", clock(d), true, Provenance::Standard);
    set.push("CZ", controlled_z(d), true, Provenance::Standard);
    if d == 2 {
        set.push("P", diag(&[cr(1.0), c(0.0, 1.0)]), true, Provenance::Standard);
        set.push("T", diag(&[cr(1.0), C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]), false, Provenance::Standard);
    }
    if d == 3 {
        set.push("Q3", diag(&[cr(1.0), cr(1.0), omega(3)]), true, Provenance::Standard);
        set.push("Flip3", diag(&[cr(1.0), cr(1.0), cr(-1.0)]), false, Provenance::Standard);
    }
    Ok(set)
}

/// (I (x) H) SUM (I (x) H^dagger); equals CZ for every d
pub fn cz_from_sum(d: usize) -> CMat {
    let h = hadamard(d);
    let id = identity(d);
    kron(&id, &h) * sum_gate(d) * kron(&id, &h.adjoint())
}

#[derive(Clone, Debug, Serialize)]
pub struct Order6Report {
    pub eigenvalues_m: Vec<[f64; 2]>,
    pub eigenvalues_n: Vec<[f64; 2]>,
    pub eigenvalue_error: f64,
    pub unit_modulus_error: f64,
    pub cos_arg: f64,
    pub commutator_norm: f64,
    pub unitarity_error: f64,
    pub pass: bool,
}

/// eigenvalues of a 2x2 matrix, ordered by imaginary part (descending)
fn eig2(m: &CMat) -> [C64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr - det * 4.0).sqrt();
    let (a, b) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    if a.im >= b.im {
        [a, b]
    } else {
        [b, a]
    }
}

pub fn order6_matrices() -> (CMat, CMat) {
    let h = hadamard(2);
    let p = diag(&[cr(1.0), C64::from_polar(1.0, std::f64::consts::FRAC_PI_3)]);
    let pd = p.adjoint();
    (&h * &p * &h * &pd, &h * &pd * &h * &p)
}

pub fn check_universality_order6() -> Order6Report {
    let (m, n) = order6_matrices();
    let target = [c(0.75, 7f64.sqrt() / 4.0), c(0.75, -(7f64.sqrt()) / 4.0)];
    let (em, en) = (eig2(&m), eig2(&n));
    let mut err = 0.0f64;
    let mut unit = 0.0f64;
    for k in 0..2 {
        err = err.max((em[k] - target[k]).norm()).max((en[k] - target[k]).norm());
        unit = unit.max((em[k].norm() - 1.0).abs()).max((en[k].norm() - 1.0).abs());
    }
    let comm = (&m * &n - &n * &m).norm();
    let unitarity = unitarity_residual(&m).max(unitarity_residual(&n));
    let pair = |v: &[C64; 2]| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
    Order6Report {
        eigenvalues_m: pair(&em),
        eigenvalues_n: pair(&en),
        eigenvalue_error: err,
        unit_modulus_error: unit,
        cos_arg: em[0].arg().cos(),
        commutator_norm: comm,
        unitarity_error: unitarity,
        pass: err < 1e-12 && unit < 1e-12 && comm > 0.1 && unitarity < 1e-12,
    }
}

/// Operators of the toric phase-gate protocol on the two-hole qubit:
/// W_e(gamma) (also used for beta_2), W_m(alpha_2) and the step-3
/// measurement operator.
pub struct PhaseWalkOps {
    pub we: CMat,
    pub wm: CMat,
    pub step3: CMat,
}

pub fn phase_walk_ops() -> Result<PhaseWalkOps, ProtocolError> {
    let m = builtin("tc")?;
    let b = LagrangianVector::parse("1+e", &m.labels).expect("1+e parses");
    let basis = wilson_ops::ground_state_basis(&m, &[b.clone(), b.clone()])?;
    let ms = solve_m3j(&m, &b, 0)?;
    let we = wilson_ops::tunnel_matrix(&m, &ms, &ms, &basis, "e")?;
    let wm = wilson_ops::loop_matrix(&m, &basis, 2, "m")?;
    // step 3 uses the other square-root branch of alpha = -1
    let step3 = wilson_ops::measurement_operator(&[we.clone(), wm.clone()])?;
    Ok(PhaseWalkOps { we: we.entries, wm: wm.entries, step3: step3.entries })
}

fn proj(h: &CMat, s: f64) -> CMat {
    (identity(h.nrows()) + h * cr(s)) * cr(0.5)
}

/// |psi(s1)> = (|0> + s1 |1>)/sqrt 2
pub fn psi(s1: f64) -> CMat {
    CMat::from_column_slice(2, 1, &[cr(1.0 / 2f64.sqrt()), cr(s1 / 2f64.sqrt())])
}

/// <psi(s1)| P_beta(s1) P_3(s3) P_alpha(s2) |psi(s1)> and the residual of
/// the output away from psi(s1)
pub fn round_factor(ops: &PhaseWalkOps, s1: f64, s2: f64, s3: f64) -> (C64, f64) {
    let v = proj(&ops.we, s1) * proj(&ops.step3, s3) * proj(&ops.wm, s2) * psi(s1);
    let p = psi(s1);
    let f = (p.adjoint() * &v)[(0, 0)];
    (f, (&v - &p * f).norm())
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkRound {
    pub s2: i8,
    pub s3: i8,
    /// relative phase of this round in units of pi/2 (+1 or -1)
    pub step: i8,
    /// accumulated phase in units of pi/2, mod 4
    pub net: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkTrace {
    pub seed: u64,
    pub rounds: Vec<WalkRound>,
    pub complete: bool,
    pub max_factor_error: f64,
}

/// rng for trial t of a seeded batch
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

fn run_walk(ops: &PhaseWalkOps, rng: &mut ChaCha8Rng, seed: u64, max_rounds: usize) -> WalkTrace {
    let mut net = 0u8;
    let mut rounds = Vec::new();
    let mut worst = 0.0f64;
    let mut complete = false;
    for _ in 0..max_rounds {
        // Born probabilities of s2 then s3 are 1/2 on either psi(s1)
        let s2 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let s3 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let mut rel = [cr(0.0); 2];
        for (k, s1) in [1.0, -1.0].into_iter().enumerate() {
            let (f, resid) = round_factor(ops, s1, s2, s3);
            let want = c(1.0, s1 * s2 * s3) / 4.0;
            worst = worst.max((f - want).norm()).max(resid);
            rel[k] = f;
        }
        let phase = (rel[0] / rel[1]).arg();
        let step: i8 = if phase > 0.0 { 1 } else { -1 };
        worst = worst.max((phase - step as f64 * std::f64::consts::FRAC_PI_2).abs());
        net = ((net as i8 + step).rem_euclid(4)) as u8;
        rounds.push(WalkRound { s2: s2 as i8, s3: s3 as i8, step, net });
        if net == 1 {
            complete = true;
            break;
        }
    }
    WalkTrace { seed, rounds, complete, max_factor_error: worst }
}

pub fn toric_phase_gate_walk(seed: u64, max_rounds: usize) -> Result<WalkTrace, ProtocolError> {
    let ops = phase_walk_ops()?;
    Ok(run_walk(&ops, &mut trial_rng(seed, 0), seed, max_rounds))
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkStats {
    pub seed: u64,
    pub trials: usize,
    pub horizon: usize,
    pub successes: usize,
    pub success_fraction: f64,
    pub mean_rounds: f64,
    pub max_factor_error: f64,
}

pub fn phase_walk_statistics(seed: u64, trials: usize, horizon: usize) -> Result<WalkStats, ProtocolError> {
    let ops = phase_walk_ops()?;
    let mut successes = 0;
    let mut total_rounds = 0usize;
    let mut worst = 0.0f64;
    for t in 0..trials {
        let tr = run_walk(&ops, &mut trial_rng(seed, t as u64), seed, horizon);
        if tr.complete {
            successes += 1;
            total_rounds += tr.rounds.len();
        }
        worst = worst.max(tr.max_factor_error);
    }
    Ok(WalkStats {
        seed,
        trials,
        horizon,
        successes,
        success_fraction: successes as f64 / trials.max(1) as f64,
        mean_rounds: if successes > 0 { total_rounds as f64 / successes as f64 } else { 0.0 },
        max_factor_error: worst,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Dz3Check {
    pub name: String,
    pub error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Dz3Report {
    pub gates: GateSet,
    pub checks: Vec<Dz3Check>,
    pub projection: OperatorMatrix,
}

impl Dz3Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn two_hole(m: &MtcData, alg: &str) -> Result<(wilson_ops::GroundBasis, crate::mtc_data::MSymbolSet), ProtocolError> {
    let b = LagrangianVector::parse(alg, &m.labels).ok_or_else(|| ProtocolError::Check(format!("bad algebra {}", alg)))?;
    let basis = wilson_ops::ground_state_basis(m, &[b.clone(), b.clone()])?;
    let ms = solve_m3j(m, &b, 0)?;
    Ok((basis, ms))
}

fn vec3(v: [C64; 3]) -> CMat {
    CMat::from_column_slice(3, 1, &v)
}

/// Assemble the metaplectic set for D(Z3) gapped-boundary qutrits and check
/// every derived gate against its textbook form.
pub fn dz3_universal_set() -> Result<Dz3Report, ProtocolError> {
    let m = builtin("dz3")?;
    let w = omega(3);
    let std = standard_gates(3)?;
    let std_m = |n: &str| std.get(n).expect("standard gate").matrix.clone();
    let mut set = GateSet { d: 3, gates: Vec::new() };
    let mut checks = Vec::new();
    let mut check = |name: &str, err: f64, tol: f64| checks.push(Dz3Check { name: name.into(), error: err, pass: err < tol });

    let (qb, ms) = two_hole(&m, "1+e+e2")?;
    let x = wilson_ops::tunnel_matrix(&m, &ms, &ms, &qb, "e")?.entries;
    check("X = W_e(gamma)", max_diff(&x, &std_m("X")), 1e-12);
    set.push("X", x.clone(), true, Provenance::Derived);
    let z = wilson_ops::loop_matrix(&m, &qb, 2, "m2")?.entries;
    check("Z = W_m2(alpha_2)", max_diff(&z, &std_m("Z")), 1e-12);
    set.push("Z", z.clone(), true, Provenance::Derived);

    let h = hadamard(3);
    set.push("H", h.clone(), true, Provenance::AssumedExternal);

    // control m-qutrit on holes 1,2, target e-qutrit on holes 3,4
    let holes: Vec<LagrangianVector> = ["1+m+m2", "1+m+m2", "1+e+e2", "1+e+e2"].iter().map(|s| LagrangianVector::parse(s, &m.labels).expect("algebra")).collect();
    let b4 = wilson_ops::ground_state_basis(&m, &holes)?;
    let braid = wilson_ops::braid_sigma2_squared(&m, &b4)?;
    let cz = wilson_ops::restrict(&braid.entries, &wilson_ops::logical_subspace(&b4));
    check("CZ = sigma_2^2 block", max_diff(&cz, &std_m("CZ")), 1e-12);
    let id = identity(3);
    let sum = kron(&id, &h.adjoint()) * &cz * kron(&id, &h);
    check("SUM = (I x H^dagger) CZ (I x H)", max_diff(&sum, &std_m("SUM")), 1e-12);
    set.push("CZ", cz, true, Provenance::Derived);
    set.push("SUM", sum, true, Provenance::Derived);

    // Dehn twist of the single-layer Z3 factor, diag(1, w, w); Q3 = twist^-1 Z
    let twist = diag(&[cr(1.0), w, w]);
    set.push("Twist", twist.clone(), true, Provenance::AssumedExternal);
    let q3 = twist.adjoint() * &z;
    check("Q3 = Twist^dagger Z", max_diff(&q3, &std_m("Q3")), 1e-12);
    set.push("Q3", q3, true, Provenance::Derived);

    let pe = wilson_ops::charge_projection(&m, &qb, ChargeTarget::Arc, "e")?;
    let p = pe.entries.clone();
    let one = vec3([cr(1.0), w.conj(), w]) / cr(3f64.sqrt());
    check("P_e (1,wbar,w) eigenvalue 1", (&p * &one - &one).norm(), 1e-12);
    for v in [vec3([cr(1.0), cr(1.0), cr(1.0)]), vec3([cr(1.0), w, w.conj()])] {
        check("P_e kernel vector", (&p * &v).norm(), 1e-12);
    }
    check("P_e idempotent", max_diff(&(&p * &p), &p), 1e-12);
    let mut total = CMat::zeros(3, 3);
    for a in wilson_ops::factor_labels(3) {
        total += wilson_ops::charge_projection(&m, &qb, ChargeTarget::Arc, &a)?.entries;
    }
    check("sum_a P_a = I", max_diff(&total, &id), 1e-12);
    let comp = &id - &p;
    let coherent = &x * h.adjoint() * &comp * &h * x.adjoint();
    let want = diag(&[cr(0.0), cr(1.0), cr(1.0)]);
    check("X H^dagger (1-P_e) H X^dagger = proj span{|1>,|2>}", max_diff(&coherent, &want), 1e-12);
    set.gates.push(Gate { name: "M".into(), matrix: coherent, clifford: false, measurement: true, provenance: Provenance::Derived });

    // Flip3 from a B loop around an A+C+D qutrit hole of D(S3)
    let ds3 = builtin("ds3")?;
    let acd = LagrangianVector::parse("A+C+D", &ds3.labels).expect("A+C+D");
    let qb3 = wilson_ops::ground_state_basis(&ds3, &[acd.clone(), acd])?;
    let flip = wilson_ops::loop_matrix(&ds3, &qb3, 1, "B")?.entries;
    check("Flip3 = W_B(alpha) in D(S3)", max_diff(&flip, &std_m("Flip3")), 1e-12);
    set.push("Flip3", flip, false, Provenance::Derived);

    for g in &set.gates {
        if !g.measurement {
            check(&format!("{} unitary", g.name), unitarity_residual(&g.matrix), 1e-9);
        }
    }
    Ok(Dz3Report { gates: set, checks, projection: pe })
}

/// Net two-qudit action of the ancilla SUM circuit: qudits (c_in, t, a, c_out)
/// with a (flux ancilla) prepared in |0> and c_out in the uniform state.
/// SUM(c_in -> a), SUM(a -> t), SUM^-1(c_out -> a); a is read out as j and
/// c_in in the Fourier basis as k. Corrections X^j then Z^k go on c_out.
/// Returns the corrected map on (c_out, t), rescaled by p.
pub fn ancilla_sum_circuit(p: usize, j: usize, k: usize) -> Result<CMat, ProtocolError> {
    if p < 2 {
        return Err(ProtocolError::Dimension);
    }
    if j >= p {
        return Err(ProtocolError::Outcome(j));
    }
    if k >= p {
        return Err(ProtocolError::Outcome(k));
    }
    let idx = |ci: usize, t: usize, a: usize, co: usize| ((ci * p + t) * p + a) * p + co;
    let n = p.pow(4);
    // gates as basis permutations on the four-qudit register
    let apply = |v: &[C64], f: &dyn Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize)| {
        let mut out = vec![cr(0.0); n];
        for ci in 0..p {
            for t in 0..p {
                for a in 0..p {
                    for co in 0..p {
                        let (x1, x2, x3, x4) = f(ci, t, a, co);
                        out[idx(x1, x2, x3, x4)] += v[idx(ci, t, a, co)];
                    }
                }
            }
        }
        out
    };
    let mut out = CMat::zeros(p * p, p * p);
    for c0 in 0..p {
        for t0 in 0..p {
            let mut v = vec![cr(0.0); n];
            for co in 0..p {
                v[idx(c0, t0, 0, co)] = cr(1.0 / (p as f64).sqrt());
            }
            v = apply(&v, &|ci, t, a, co| (ci, t, (a + ci) % p, co));
            v = apply(&v, &|ci, t, a, co| (ci, (t + a) % p, a, co));
            v = apply(&v, &|ci, t, a, co| (ci, t, (a + p - co) % p, co));
            // project a onto |j>, c_in onto the Fourier state k
            for ci in 0..p {
                let bra = w_pow(p, ci * k).conj() / (p as f64).sqrt();
                for t in 0..p {
                    for co in 0..p {
                        let amp = v[idx(ci, t, j, co)] * bra;
                        // corrections on c_out: X^j, then Z^k
                        let co2 = (co + j) % p;
                        let amp = amp * w_pow(p, co2 * k);
                        out[(co2 * p + t, c0 * p + t0)] += amp;
                    }
                }
            }
        }
    }
    Ok(out * cr(p as f64))
}

/// toric CNOT between two 1+e qubits using a 1+m and a 1+e ancilla
pub fn toric_cnot_circuit(outcome: usize) -> Result<CMat, ProtocolError> {
    ancilla_sum_circuit(2, outcome, 0)
}
