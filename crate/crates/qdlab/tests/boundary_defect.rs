use std::collections::BTreeMap;

use proptest::prelude::*;
use qdlab::boundary_defect::*;
use qdlab::group_core::{build_group, FiniteGroup, GroupSpec, Subgroup};
use qdlab::qdouble::{build, AnyonSystem};

fn grp(s: &str) -> FiniteGroup {
    build_group(&GroupSpec::parse(s).unwrap()).unwrap()
}

fn s3_sys() -> AnyonSystem {
    build(&grp("s3")).unwrap()
}

/// conventional names for S3 boundary excitations in each case
fn s3_exc_name(case: usize, x: &BoundaryExcitation) -> String {
    let rep = x.coset.rep;
    match case {
        // K trivial: the element r_T; D3 indices 0..6 are 1,r,r2,s,rs,r2s
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
        4 => ["A", "B", "C"][x.irrep].to_string(),
        _ => unreachable!(),
    }
}

fn subgroup_for_case(g: &FiniteGroup, case: usize) -> Subgroup {
    match case {
        1 => g.trivial_subgroup(),
        2 => g.parse_subgroup("s").unwrap(),
        3 => g.parse_subgroup("r").unwrap(),
        _ => g.full_subgroup(),
    }
}

fn expected(case: usize) -> Vec<(&'static str, &'static str)> {
    // anyon -> condensation products, entries separated by spaces,
    // multiplicity as "2*x"
    match case {
        1 => vec![
            ("A", "1"),
            ("B", "1"),
            ("C", "2*1"),
            ("D", "s rs r2s"),
            ("E", "s rs r2s"),
            ("F", "r r2"),
            ("G", "r r2"),
            ("H", "r r2"),
        ],
        2 => vec![("A", "A"), ("B", "B"), ("C", "A B"), ("D", "A C"), ("E", "B C"), ("F", "C"), ("G", "C"), ("H", "C")],
        3 => vec![
            ("A", "1"),
            ("B", "1"),
            ("C", "r r2"),
            ("D", "s sr sr2"),
            ("E", "s sr sr2"),
            ("F", "2*1"),
            ("G", "r r2"),
            ("H", "r r2"),
        ],
        // F -> A alone would break dimension counting; it is A + B
        4 => vec![("A", "A"), ("B", "B"), ("C", "C"), ("D", "A C"), ("E", "B C"), ("F", "A B"), ("G", "C"), ("H", "C")],
        _ => unreachable!(),
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

#[test]
fn s3_condensation_tables() {
    let sys = s3_sys();
    let g = &sys.group;
    for case in 1..=4 {
        let k = subgroup_for_case(g, case);
        let (exc, map) = condensation_map(&sys, &k).unwrap();
        for (anyon, prods) in expected(case) {
            let a = sys.index_of(anyon).unwrap();
            let mut got = BTreeMap::new();
            for (j, x) in exc.iter().enumerate() {
                if map.coefficients[a][j] > 0 {
                    got.insert(s3_exc_name(case, x), map.coefficients[a][j]);
                }
            }
            assert_eq!(got, parse_products(prods), "case {} anyon {}", case, anyon);
        }
    }
}

#[test]
fn s3_boundary_labels() {
    let sys = s3_sys();
    let labels = sys.labels();
    let expect = ["A+B+2C", "A+C+D", "A+B+2F", "A+D+F"];
    for case in 1..=4 {
        let k = subgroup_for_case(&sys.group, case);
        let lv = boundary_label(&sys, &k).unwrap();
        assert_eq!(LagrangianVector::parse(expect[case - 1], &labels).unwrap(), lv, "case {}", case);
    }
}

#[test]
fn s3_uncondense_lists() {
    let sys = s3_sys();
    let k = subgroup_for_case(&sys.group, 2);
    let exc = boundary_excitations(&sys.group, &k).unwrap();
    let c = exc.iter().position(|x| s3_exc_name(2, x) == "C").unwrap();
    let got: Vec<String> = uncondense(&sys, &k, c).unwrap().iter().map(|(a, _)| sys.anyons[*a].label.clone()).collect();
    let mut got = got;
    got.sort();
    assert_eq!(got, vec!["D", "E", "F", "G", "H"]);
    // Case IV, excitation B pulls back to B + E + F
    let k4 = sys.group.full_subgroup();
    let exc4 = boundary_excitations(&sys.group, &k4).unwrap();
    let b = exc4.iter().position(|x| s3_exc_name(4, x) == "B").unwrap();
    let mut got: Vec<String> = uncondense(&sys, &k4, b).unwrap().iter().map(|(a, _)| sys.anyons[*a].label.clone()).collect();
    got.sort();
    assert_eq!(got, vec!["B", "E", "F"]);
}

#[test]
fn boundary_excitation_dims() {
    let g = grp("s3");
    let dims = |k: &Subgroup| -> Vec<f64> { boundary_excitations(&g, k).unwrap().iter().map(|x| x.fpdim).collect() };
    assert_eq!(dims(&g.parse_subgroup("s").unwrap()), vec![1.0, 1.0, 2.0]);
    assert_eq!(dims(&g.trivial_subgroup()), vec![1.0; 6]);
    assert_eq!(dims(&g.full_subgroup()), vec![1.0, 1.0, 2.0]);
}

#[test]
fn toric_boundaries() {
    let sys = build(&grp("z2")).unwrap();
    let labels = sys.labels();
    let z = &sys.group;
    assert_eq!(boundary_label(&sys, &z.trivial_subgroup()).unwrap().display(&labels), "1+e");
    assert_eq!(boundary_label(&sys, &z.full_subgroup()).unwrap().display(&labels), "1+m");
    let z3 = build(&grp("z3")).unwrap();
    assert_eq!(boundary_label(&z3, &z3.group.full_subgroup()).unwrap().display(&z3.labels()), "1+m+m2");
    assert_eq!(boundary_label(&z3, &z3.group.trivial_subgroup()).unwrap().display(&z3.labels()), "1+e+e2");
}

#[test]
fn defect_examples() {
    let z2 = grp("z2");
    let d = defect_types(&z2, &z2.trivial_subgroup(), &z2.full_subgroup()).unwrap();
    assert_eq!(d.len(), 1);
    assert!((d[0].fpdim - 2f64.sqrt()).abs() < 1e-12);
    let s3 = grp("s3");
    let d = defect_types(&s3, &s3.parse_subgroup("s").unwrap(), &s3.full_subgroup()).unwrap();
    assert_eq!(d.len(), 2);
    for x in &d {
        assert!((x.fpdim - 3f64.sqrt()).abs() < 1e-12);
    }
    let d = defect_types(&s3, &s3.trivial_subgroup(), &s3.parse_subgroup("r").unwrap()).unwrap();
    assert_eq!(d.len(), 2);
    for x in &d {
        assert!((x.fpdim - 3f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn genon_defects() {
    for name in ["z2", "z3", "s3"] {
        let g = grp(name);
        let gg = grp(&format!("{}x{}", name, name));
        let n = g.order;
        let k2: Vec<usize> = (0..n).map(|a| a * n).collect();
        let k2 = gg.subgroup(&k2).unwrap();
        let d = defect_types(&gg, &gg.trivial_subgroup(), &k2).unwrap();
        assert_eq!(d.len(), n);
        for x in &d {
            assert!((x.fpdim - (n as f64).sqrt()).abs() < 1e-12);
        }
    }
}

fn reverse_of(g: &FiniteGroup, x: &DefectType) -> Vec<DefectType> {
    defect_types(g, &x.coset.right, &x.coset.left).unwrap()
}

#[test]
fn defect_degeneracies() {
    let s3 = grp("s3");
    let z2 = s3.parse_subgroup("s").unwrap();
    let full = s3.full_subgroup();
    let xs = defect_types(&s3, &z2, &full).unwrap();
    let ys = reverse_of(&s3, &xs[0]);
    // bare with bare (both trivial R) fuse to the vacuum once
    let deg = defect_fusion_degeneracy(&s3, &[(z2.clone(), xs[0].clone()), (full.clone(), ys[0].clone())]).unwrap();
    assert_eq!(deg, 1);
    let deg = defect_fusion_degeneracy(&s3, &[(z2.clone(), xs[1].clone()), (full.clone(), ys[0].clone())]).unwrap();
    assert_eq!(deg, 0);
    // toric bare defect squared
    let z = grp("z2");
    let (t, f) = (z.trivial_subgroup(), z.full_subgroup());
    let x = defect_types(&z, &t, &f).unwrap();
    let y = defect_types(&z, &f, &t).unwrap();
    assert_eq!(defect_fusion_degeneracy(&z, &[(t.clone(), x[0].clone()), (f.clone(), y[0].clone())]).unwrap(), 1);
    // a chain of one boundary vacuum
    let vac = boundary_excitations(&s3, &z2).unwrap().into_iter().find(|x| x.is_vacuum()).unwrap();
    assert_eq!(defect_fusion_degeneracy(&s3, &[(z2.clone(), vac.clone())]).unwrap(), 1);
    // open chain
    assert!(defect_fusion_degeneracy(&s3, &[(z2.clone(), xs[0].clone())]).is_err());
}

#[test]
fn four_genons_on_z2() {
    // four bare defects between e and m boundaries: degeneracy 2 (one qubit)
    let z = grp("z2");
    let (t, f) = (z.trivial_subgroup(), z.full_subgroup());
    let x = defect_types(&z, &t, &f).unwrap()[0].clone();
    let y = defect_types(&z, &f, &t).unwrap()[0].clone();
    let chain = vec![(t.clone(), x.clone()), (f.clone(), y.clone()), (t.clone(), x), (f.clone(), y)];
    assert_eq!(defect_fusion_degeneracy(&z, &chain).unwrap(), 2);
}

fn sys_name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("z2"), Just("z3"), Just("s3"), Just("d4"), Just("z2xz2"), Just("z4")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn condensation_invariants(name in sys_name()) {
        let sys = build(&grp(name)).unwrap();
        let g = &sys.group;
        let order = g.order as f64;
        for k in g.subgroup_classes().unwrap() {
            let (exc, map) = condensation_map(&sys, &k).unwrap();
            let tot: f64 = exc.iter().map(|x| x.fpdim * x.fpdim).sum();
            prop_assert!((tot - order).abs() < 1e-9);
            for a in 0..sys.len() {
                let d: f64 = exc.iter().enumerate().map(|(j, x)| map.coefficients[a][j] as f64 * x.fpdim).sum();
                prop_assert!((d - sys.dims[a]).abs() < 1e-9);
            }
            let tr = map.transpose();
            for (j, x) in exc.iter().enumerate() {
                let d: f64 = (0..sys.len()).map(|a| tr.coefficients[j][a] as f64 * sys.dims[a]).sum();
                prop_assert!((d - order * x.fpdim).abs() < 1e-9);
            }
            let lv = boundary_label(&sys, &k).unwrap();
            prop_assert_eq!(lv.multiplicities[0], 1);
            prop_assert!((lv.dim(&sys.dims) - order).abs() < 1e-9);
            for a in 0..sys.len() {
                if lv.multiplicities[a] > 0 {
                    prop_assert!((sys.t[a] - qdlab::linalg::cr(1.0)).norm() < 1e-9);
                }
            }
            for h in 0..g.order {
                let kc = g.conjugate_subgroup(h, &k);
                prop_assert_eq!(&boundary_label(&sys, &kc).unwrap(), &lv);
            }
            let dt = defect_types(g, &k, &k).unwrap();
            prop_assert_eq!(dt.len(), exc.len());
            for (x, y) in dt.iter().zip(&exc) {
                prop_assert!((x.fpdim - y.fpdim).abs() < 1e-12);
            }
        }
    }
}
