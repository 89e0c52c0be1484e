//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use qdlab::boundary_defect::{boundary_label, condensation_map, defect_types, BoundaryExcitation, LagrangianVector};
use qdlab::group_core::{build_group, FiniteGroup, GroupSpec, Subgroup};
use qdlab::hopf_algebra::verify_quasi_hopf;
use qdlab::lattice_sim::{confinement_profile, ground_space_dimension, verify_commuting, Lattice, LatticeSpec};
use qdlab::linalg::{c, cr, diag, from_rows, max_diff, root_of_unity, CMat, C64};
use qdlab::mtc_data::{builtin, find_lagrangian_algebras, gauge_equivalent, solve_m3j, MSymbolSet, MtcData};
use qdlab::protocols::{check_universality_order6, dz3_universal_set, phase_walk_statistics};
use qdlab::qdouble::{build, AnyonSystem};
use qdlab::wilson_ops::{
    braid_sigma2_squared, charge_projection, factor_labels, ground_state_basis, logical_subspace, loop_matrix, restrict, tunnel_matrix,
    ChargeTarget, GroundBasis,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn grp(s: &str) -> FiniteGroup {
    build_group(&GroupSpec::parse(s).unwrap()).unwrap()
}

fn sys(s: &str) -> AnyonSystem {
    build(&grp(s)).unwrap()
}

fn lv(m: &MtcData, s: &str) -> LagrangianVector {
    LagrangianVector::parse(s, &m.labels).unwrap()
}

fn basis(m: &MtcData, holes: &[&str]) -> Result<GroundBasis, String> {
    let b: Vec<_> = holes.iter().map(|h| lv(m, h)).collect();
    ground_state_basis(m, &b).map_err(e)
}

fn real(rows: &[&[f64]]) -> CMat {
    from_rows(&rows.iter().map(|r| r.iter().map(|&x| cr(x)).collect()).collect::<Vec<Vec<C64>>>())
}

fn within(t: Instant, secs: f64) -> Result<(), String> {
    let s = t.elapsed().as_secs_f64();
    ensure(s < secs, format!("took {:.2}s, limit {}s", s, secs))
}

fn c1_anyons() -> Outcome {
    let t = Instant::now();
    let z2 = sys("z2");
    ensure(z2.len() == 4, format!("D(Z2) has {} types", z2.len()))?;
    let s3 = sys("s3");
    ensure(s3.len() == 8, format!("D(S3) has {} types", s3.len()))?;
    let dims: Vec<f64> = ["A", "B", "C", "D", "E", "F", "G", "H"].iter().map(|l| s3.dims[s3.index_of(l).unwrap()]).collect();
    ensure(dims == vec![1., 1., 2., 3., 3., 2., 2., 2.], format!("dims {:?}", dims))?;
    within(t, 1.0)?;
    Ok("D(Z2) 4 types; D(S3) 8 types, dims A..H = 1,1,2,3,3,2,2,2".into())
}

const DS3_S6: [[f64; 8]; 8] = [
    [1., 1., 2., 3., 3., 2., 2., 2.],
    [1., 1., 2., -3., -3., 2., 2., 2.],
    [2., 2., 4., 0., 0., -2., -2., -2.],
    [3., -3., 0., 3., -3., 0., 0., 0.],
    [3., -3., 0., -3., 3., 0., 0., 0.],
    [2., 2., -2., 0., 0., 4., -2., -2.],
    [2., 2., -2., 0., 0., -2., -2., 4.],
    [2., 2., -2., 0., 0., -2., 4., -2.],
];

const DS3_FUSION: [(&str, &str, &str); 24] = [
    ("C", "C", "ABC"),
    ("C", "D", "DE"),
    ("C", "E", "DE"),
    ("C", "F", "GH"),
    ("C", "G", "FH"),
    ("C", "H", "FG"),
    ("D", "D", "ACFGH"),
    ("D", "E", "BCFGH"),
    ("D", "F", "DE"),
    ("D", "G", "DE"),
    ("D", "H", "DE"),
    ("E", "E", "ACFGH"),
    ("E", "F", "DE"),
    ("F", "F", "ABF"),
    ("F", "G", "HC"),
    ("F", "H", "GC"),
    ("G", "G", "ABG"),
    ("G", "H", "FC"),
    ("H", "H", "ABH"),
    ("B", "B", "A"),
    ("B", "C", "C"),
    ("B", "D", "E"),
    ("B", "E", "D"),
    ("B", "F", "F"),
];

fn c2_modular() -> Outcome {
    let t = Instant::now();
    let s3 = sys("s3");
    let letters = ["A", "B", "C", "D", "E", "F", "G", "H"];
    let idx = |l: &str| s3.index_of(l).unwrap();
    let mut err: f64 = 0.0;
    for (i, a) in letters.iter().enumerate() {
        for (j, b) in letters.iter().enumerate() {
            err = err.max((s3.s[(idx(a), idx(b))] - cr(DS3_S6[i][j] / 6.0)).norm());
        }
    }
    let w = root_of_unity(1, 3);
    let want_t = [cr(1.), cr(1.), cr(1.), cr(1.), cr(-1.), cr(1.), w, w * w];
    for (i, a) in letters.iter().enumerate() {
        err = err.max((s3.t[idx(a)] - want_t[i]).norm());
    }
    ensure(err < 1e-12, format!("S/T max error {:.3e}", err))?;
    for (a, b, prod) in DS3_FUSION {
        let mut want = vec![0usize; 8];
        for ch in prod.chars() {
            want[idx(&ch.to_string())] += 1;
        }
        ensure(s3.fusion[idx(a)][idx(b)] == want && s3.fusion[idx(b)][idx(a)] == want, format!("{} x {}", a, b))?;
    }
    within(t, 1.0)?;
    Ok(format!("S, T entrywise error {:.1e}; {} fusion rows exact", err, DS3_FUSION.len()))
}

/// conventional names of S3 boundary excitations in each case
fn s3_exc_name(case: usize, x: &BoundaryExcitation) -> String {
    let rep = x.coset.rep;
    match case {
        1 => ["1", "r", "r2", "s", "rs", "r2s"][rep].to_string(),
        2 => match (rep, x.irrep) {
            (0, 0) => "A".into(),
            (0, 1) => "B".into(),
            _ => "C".into(),
        },
        3 => {
            let base = if rep == 0 { ["1", "r", "r2"] } else { ["s", "sr", "sr2"] };
            base[x.irrep].to_string()
        }
        _ => ["A", "B", "C"][x.irrep].to_string(),
    }
}

fn case_subgroup(g: &FiniteGroup, case: usize) -> Subgroup {
    match case {
        1 => g.trivial_subgroup(),
        2 => g.parse_subgroup("s").unwrap(),
        3 => g.parse_subgroup("r").unwrap(),
        _ => g.full_subgroup(),
    }
}

fn case_table(case: usize) -> Vec<(&'static str, &'static str)> {
    match case {
        1 => vec![("A", "1"), ("B", "1"), ("C", "2*1"), ("D", "s rs r2s"), ("E", "s rs r2s"), ("F", "r r2"), ("G", "r r2"), ("H", "r r2")],
        2 => vec![("A", "A"), ("B", "B"), ("C", "A B"), ("D", "A C"), ("E", "B C"), ("F", "C"), ("G", "C"), ("H", "C")],
        3 => vec![("A", "1"), ("B", "1"), ("C", "r r2"), ("D", "s sr sr2"), ("E", "s sr sr2"), ("F", "2*1"), ("G", "r r2"), ("H", "r r2")],
        // F -> A + B, as dimension counting requires
        _ => vec![("A", "A"), ("B", "B"), ("C", "C"), ("D", "A C"), ("E", "B C"), ("F", "A B"), ("G", "C"), ("H", "C")],
    }
}

fn parse_products(s: &str) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for tok in s.split_whitespace() {
        let (n, name) = match tok.split_once('*') {
            Some((n, name)) => (n.parse().unwrap(), name),
            None => (1, tok),
        };
        *m.entry(name.to_string()).or_insert(0) += n;
    }
    m
}

fn c3_boundaries() -> Outcome {
    let t = Instant::now();
    let s3 = sys("s3");
    let labels = s3.labels();
    let names = ["A+B+2C", "A+C+D", "A+B+2F", "A+D+F"];
    for case in 1..=4 {
        let k = case_subgroup(&s3.group, case);
        let got = boundary_label(&s3, &k).map_err(e)?;
        ensure(got == LagrangianVector::parse(names[case - 1], &labels).unwrap(), format!("case {} label {}", case, got.display(&labels)))?;
        let (exc, map) = condensation_map(&s3, &k).map_err(e)?;
        for (anyon, prods) in case_table(case) {
            let a = s3.index_of(anyon).unwrap();
            let mut row = BTreeMap::new();
            for (j, x) in exc.iter().enumerate() {
                if map.coefficients[a][j] > 0 {
                    row.insert(s3_exc_name(case, x), map.coefficients[a][j]);
                }
            }
            ensure(row == parse_products(prods), format!("case {} anyon {}: {:?}", case, anyon, row))?;
        }
    }
    within(t, 1.0)?;
    Ok("cases I-IV: A+B+2C, A+C+D, A+B+2F, A+F+D and all condensation rows".into())
}

fn c4_lagrangian() -> Outcome {
    let t = Instant::now();
    let show = |m: &MtcData| -> Vec<String> { find_lagrangian_algebras(m).iter().map(|v| v.display(&m.labels)).collect() };
    let tc = show(&builtin("tc").map_err(e)?);
    ensure(tc == ["1+e", "1+m"], format!("tc {:?}", tc))?;
    let ds3 = show(&builtin("ds3").map_err(e)?);
    ensure(ds3 == ["A+B+2C", "A+B+2F", "A+C+D", "A+F+D"], format!("ds3 {:?}", ds3))?;
    let dz3 = show(&builtin("dz3").map_err(e)?);
    ensure(dz3 == ["1+e+e2", "1+m+m2"], format!("dz3 {:?}", dz3))?;
    within(t, 5.0)?;
    Ok(format!("tc {:?}; ds3 {:?}; dz3 {:?}", tc, ds3, dz3))
}

fn c5_defects() -> Outcome {
    let t = Instant::now();
    let z2 = grp("z2");
    let d = defect_types(&z2, &z2.trivial_subgroup(), &z2.full_subgroup()).map_err(e)?;
    ensure(d.len() == 1 && (d[0].fpdim - 2f64.sqrt()).abs() < 1e-12, "Z2 bare defect")?;
    let s3 = grp("s3");
    let d = defect_types(&s3, &s3.parse_subgroup("s").unwrap(), &s3.full_subgroup()).map_err(e)?;
    ensure(d.len() == 2 && d.iter().all(|x| (x.fpdim - 3f64.sqrt()).abs() < 1e-12), "S3 (Z2,S3) defects")?;
    for name in ["z2", "z3", "s3"] {
        let n = grp(name).order;
        let gg = grp(&format!("{}x{}", name, name));
        let k2 = gg.subgroup(&(0..n).map(|a| a * n).collect::<Vec<_>>()).map_err(e)?;
        let d = defect_types(&gg, &gg.trivial_subgroup(), &k2).map_err(e)?;
        ensure(d.len() == n && d.iter().all(|x| (x.fpdim - (n as f64).sqrt()).abs() < 1e-12), format!("genons of {}", name))?;
    }
    within(t, 5.0)?;
    Ok("Z2: 1 type dim sqrt2; S3 (Z2,S3): 2 types dim sqrt3; genons |G| types dim sqrt|G| for Z2, Z3, S3".into())
}

fn c6_gates() -> Outcome {
    let tc = builtin("tc").map_err(e)?;
    let gb = basis(&tc, &["1+e", "1+e"])?;
    let ms = solve_m3j(&tc, &lv(&tc, "1+e"), 0).map_err(e)?;
    let we = tunnel_matrix(&tc, &ms, &ms, &gb, "e").map_err(e)?.entries;
    ensure(max_diff(&we, &real(&[&[0., 1.], &[1., 0.]])) < 1e-9, "W_e != sigma_x")?;
    let wm = loop_matrix(&tc, &gb, 1, "m").map_err(e)?.entries;
    ensure(max_diff(&wm, &real(&[&[1., 0.], &[0., -1.]])) < 1e-9, "W_m != sigma_z")?;

    let ds3 = builtin("ds3").map_err(e)?;
    let gb = basis(&ds3, &["A+C+D", "A+C+D"])?;
    let ms = solve_m3j(&ds3, &lv(&ds3, "A+C+D"), 0).map_err(e)?;
    let r2 = 2f64.sqrt();
    let wc = tunnel_matrix(&ds3, &ms, &ms, &gb, "C").map_err(e)?.entries;
    let err_c = max_diff(&wc, &real(&[&[0., 1., 0.], &[1., 1. / r2, 0.], &[0., 0., r2]]));
    ensure(err_c < 1e-9, format!("W_C error {:.3e}", err_c))?;
    let wd = tunnel_matrix(&ds3, &ms, &ms, &gb, "D").map_err(e)?.entries;
    let err_d = max_diff(&wd, &real(&[&[0., 0., 1.], &[0., 0., r2], &[1., r2, 0.]]));
    ensure(err_d < 1e-9, format!("W_D error {:.3e}", err_d))?;
    let wb = loop_matrix(&ds3, &gb, 1, "B").map_err(e)?.entries;
    ensure(max_diff(&wb, &real(&[&[1., 0., 0.], &[0., 1., 0.], &[0., 0., -1.]])) < 1e-9, "W_B loop")?;

    let gb = basis(&tc, &["1+e", "1+e", "1+m", "1+m"])?;
    let op = braid_sigma2_squared(&tc, &gb).map_err(e)?;
    let blk = restrict(&op.entries, &logical_subspace(&gb));
    ensure(max_diff(&blk, &diag(&[cr(1.), cr(1.), cr(1.), cr(-1.)])) < 1e-9, "toric braid block is not CZ")?;

    let dz3 = builtin("dz3").map_err(e)?;
    let gb = basis(&dz3, &["1+e+e2", "1+e+e2", "1+m+m2", "1+m+m2"])?;
    let op = braid_sigma2_squared(&dz3, &gb).map_err(e)?;
    let blk = restrict(&op.entries, &logical_subspace(&gb));
    let w = root_of_unity(1, 3);
    let one = cr(1.);
    let want = diag(&[one, one, one, one, w, w * w, one, w * w, w]);
    ensure(max_diff(&blk, &want) < 1e-9, "D(Z3) braid block")?;
    Ok(format!("sigma_x, sigma_z; W_C err {:.1e}, W_D err {:.1e}; W_B = diag(1,1,-1); CZ; diag(1,1,1,1,w,w2,1,w2,w)", err_c, err_d))
}

fn c7_msolve() -> Outcome {
    let ds3 = builtin("ds3").map_err(e)?;
    let set = solve_m3j(&ds3, &lv(&ds3, "A+C+D"), 0).map_err(e)?;
    ensure(set.pentagon_residual < 1e-9 && set.braid_residual < 1e-9 && set.normalization_residual < 1e-9, format!("residual {:.3e}", set.max_residual()))?;
    // reference values, normalized with M^{a abar}_1 = 1/sqrt(d_a)
    let i = |l: &str| ds3.index_of(l).unwrap();
    let (a, cc, d) = (i("A"), i("C"), i("D"));
    let mut matched = false;
    for sign in [1.0, -1.0] {
        let mut values = BTreeMap::new();
        values.insert((cc, cc, a), cr(1.0 / 2f64.sqrt()));
        values.insert((cc, cc, cc), c(0.0, sign / 2f64.sqrt()));
        values.insert((d, d, a), cr(1.0 / 3f64.sqrt()));
        values.insert((d, d, cc), c(0.0, sign * (2.0f64 / 3.0).sqrt()));
        values.insert((cc, d, d), c(0.0, -sign));
        let reference = MSymbolSet {
            boundary: lv(&ds3, "A+C+D"),
            values,
            pentagon_residual: 0.0,
            braid_residual: 0.0,
            braid_summed_residual: 0.0,
            normalization_residual: 0.0,
            attempts: 0,
        };
        let mut ours = set.clone();
        ours.values.retain(|k, _| reference.values.contains_key(k));
        matched |= gauge_equivalent(&ours, &reference, 1e-9);
    }
    ensure(matched, "D(S3) A+C+D set not gauge-equivalent to the reference set")?;
    for name in ["tc", "dz3"] {
        let m = builtin(name).map_err(e)?;
        for b in find_lagrangian_algebras(&m) {
            let s = solve_m3j(&m, &b, 0).map_err(e)?;
            ensure(s.max_residual() < 1e-9, format!("{} residual", name))?;
            ensure(s.values.values().all(|v| (v - cr(1.0)).norm() < 1e-9), format!("{} {} not trivial", name, b.display(&m.labels)))?;
        }
    }
    Ok(format!("D(S3) A+C+D residual {:.1e}, gauge-equivalent to reference; tc and dz3 all 1", set.max_residual()))
}

fn c8_projection() -> Outcome {
    let m = builtin("dz3").map_err(e)?;
    let gb = basis(&m, &["1+e+e2", "1+e+e2"])?;
    let w = root_of_unity(1, 3);
    let one = cr(1.0);
    let p = charge_projection(&m, &gb, ChargeTarget::Arc, "e").map_err(e)?.entries;
    let want = from_rows(&[vec![one, w, w.conj()], vec![w.conj(), one, w], vec![w, w.conj(), one]]) / cr(3.0);
    let err = max_diff(&p, &want);
    ensure(err < 1e-12, format!("P^(e) error {:.3e}", err))?;
    ensure(max_diff(&(&p * &p), &p) < 1e-12, "not idempotent")?;
    let v = CMat::from_column_slice(3, 1, &[one, w.conj(), w]) / cr(3f64.sqrt());
    ensure((&p * &v - &v).norm() < 1e-12, "(1, wbar, w)/sqrt3 is not fixed")?;
    let mut sum = CMat::zeros(3, 3);
    for a in factor_labels(3) {
        sum += charge_projection(&m, &gb, ChargeTarget::Arc, &a).map_err(e)?.entries;
    }
    ensure(max_diff(&sum, &qdlab::linalg::identity(3)) < 1e-12, "projectors do not sum to I")?;
    Ok(format!("P^(e) error {:.1e}; idempotent; eigenvector (1,wbar,w)/sqrt3; sum = I", err))
}

fn c9_universality() -> Outcome {
    let r = check_universality_order6();
    ensure(r.eigenvalue_error < 1e-12, format!("eigenvalue error {:.3e}", r.eigenvalue_error))?;
    ensure(r.commutator_norm > 0.1, format!("|MN - NM| = {}", r.commutator_norm))?;
    let d = dz3_universal_set().map_err(e)?;
    let worst = d.checks.iter().map(|c| c.error).fold(0.0, f64::max);
    ensure(d.pass() && worst < 1e-12, format!("D(Z3) checks fail, worst {:.3e}", worst))?;
    Ok(format!("eigenvalues (3 +- i sqrt7)/4 err {:.1e}, |MN-NM| = {:.3}; D(Z3) {} checks, worst {:.1e}", r.eigenvalue_error, r.commutator_norm, d.checks.len(), worst))
}

fn c10_walk() -> Outcome {
    let t = Instant::now();
    let s = phase_walk_statistics(2024, 10_000, 64).map_err(e)?;
    ensure(s.max_factor_error < 1e-12, format!("round factor error {:.3e}", s.max_factor_error))?;
    ensure(s.success_fraction >= 0.999, format!("success fraction {}", s.success_fraction))?;
    within(t, 10.0)?;
    Ok(format!("10^4 trials, horizon 64: success {:.4}, factor error {:.1e}", s.success_fraction, s.max_factor_error))
}

fn c11_hopf() -> Outcome {
    let t = Instant::now();
    let g = grp("s3");
    let mut worst: f64 = 0.0;
    for k in ["s", "1"] {
        let r = verify_quasi_hopf(&g, &g.parse_subgroup(k).unwrap()).map_err(e)?;
        let m = r.residuals.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        ensure(r.pass && m < 1e-9, format!("K = {}: residual {:.3e}", k, m))?;
        worst = worst.max(m);
    }
    within(t, 5.0)?;
    Ok(format!("(S3,Z2) and (S3,1): worst axiom residual {:.1e}", worst))
}

fn c12_lattice() -> Outcome {
    let mut notes = Vec::new();
    for (name, max_edges, want) in [("z2-two-holes", 20, 2), ("z3-two-holes", 12, 3)] {
        let t = Instant::now();
        let lat = Lattice::build(&LatticeSpec::preset(name).unwrap()).map_err(e)?;
        ensure(lat.num_edges <= max_edges, format!("{} has {} edges", name, lat.num_edges))?;
        let rep = verify_commuting(&lat, 32, 1);
        ensure(rep.max_residual < 1e-10, format!("{} commutator {:.3e}", name, rep.max_residual))?;
        let gsd = ground_space_dimension(&lat, 1);
        ensure(gsd == want, format!("{} gsd {}", name, gsd))?;
        within(t, 60.0)?;
        notes.push(format!("{} edges {} gsd {} comm {:.1e}", name, lat.num_edges, gsd, rep.max_residual));
    }
    let t = Instant::now();
    let lat = Lattice::build(&LatticeSpec::preset("z2-confine").unwrap()).map_err(e)?;
    let r = confinement_profile(&lat, 0, 0, 1, 1).map_err(e)?;
    ensure(r.slope >= 1.0, format!("confinement slope {}", r.slope))?;
    within(t, 60.0)?;
    notes.push(format!("confinement slope {}", r.slope));
    Ok(notes.join("; "))
}

fn qdlab(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qdlab")).args(args).output().map_err(e)?;
    ensure(out.status.success(), format!("qdlab {:?} exited {:?}: {}", args, out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

fn c13_determinism() -> Outcome {
    let cmds: Vec<Vec<&str>> = vec![
        vec!["anyons", "s3"],
        vec!["modular", "s3"],
        vec!["modular", "builtin:ds3"],
        vec!["fusion", "s3"],
        vec!["boundary", "s3"],
        vec!["defects", "s3", "--k1", "s", "--k2", "full"],
        vec!["defects", "z3", "--genon"],
        vec!["lagrangian", "builtin:ds3"],
        vec!["msolve", "builtin:ds3", "--boundary", "A+C+D"],
        vec!["gate", "tunnel", "--mtc", "builtin:ds3", "--boundary", "A+C+D", "--anyon", "C"],
        vec!["gate", "loop", "--mtc", "builtin:ds3", "--boundary", "A+C+D", "--anyon", "B"],
        vec!["gate", "braid", "--mtc", "builtin:dz3", "--boundary", "1+e+e2", "--boundary", "1+m+m2", "--logical"],
        vec!["gate", "project", "--mtc", "builtin:dz3", "--boundary", "1+e+e2", "--anyon", "e"],
        vec!["protocol", "order6"],
        vec!["protocol", "dz3"],
        vec!["protocol", "tc-phase-walk", "--seed", "7", "--trials", "2000"],
        vec!["hopf-check", "s3", "--subgroup", "s"],
        vec!["lattice", "check", "--preset", "z3-two-holes", "--trials", "2"],
        vec!["lattice", "gsd", "--preset", "z2-two-holes"],
        vec!["lattice", "ribbon", "--preset", "z2-confine"],
    ];
    let mut runs = 0;
    for cmd in &cmds {
        for json in [false, true] {
            let mut base: Vec<&str> = cmd.clone();
            if json {
                base.push("--json");
            }
            let first = qdlab(&base)?;
            let second = qdlab(&base)?;
            ensure(first == second, format!("{:?} differs between runs", base))?;
            runs += 2;
            for n in ["1", "4"] {
                let mut threaded = base.clone();
                threaded.extend(["--threads", n]);
                ensure(qdlab(&threaded)? == first, format!("{:?} differs with --threads {}", base, n))?;
                runs += 1;
            }
        }
    }
    let out = String::from_utf8(qdlab(&["gate", "loop", "--mtc", "builtin:ds3", "--boundary", "A+C+D", "--anyon", "B", "--json"])?).map_err(e)?;
    let v: serde_json::Value = serde_json::from_str(&out).map_err(e)?;
    let diag_ok = (0..3).all(|i| v["matrix"][i][i][0].as_f64() == Some(if i == 2 { -1.0 } else { 1.0 }));
    ensure(diag_ok, "gate loop example is not diag(1,1,-1)")?;
    Ok(format!("{} commands, {} invocations byte-identical across runs and --threads 1/4", cmds.len(), runs))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("anyon classification", c1_anyons),
        ("modular data", c2_modular),
        ("boundary classification", c3_boundaries),
        ("Lagrangian search", c4_lagrangian),
        ("defects", c5_defects),
        ("gate matrices", c6_gates),
        ("M-3j solver", c7_msolve),
        ("charge projection", c8_projection),
        ("universality checks", c9_universality),
        ("phase-gate walk", c10_walk),
        ("quasi-Hopf verification", c11_hopf),
        ("lattice", c12_lattice),
        ("determinism", c13_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("PASS {:>2} {} ({:.2}s): {}", i + 1, name, secs, msg),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {} ({:.2}s): {}", i + 1, name, secs, msg);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
