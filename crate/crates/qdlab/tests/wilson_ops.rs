use proptest::prelude::*;
use qdlab::boundary_defect::LagrangianVector;
use qdlab::linalg::{c, cr, from_rows, identity, max_diff, root_of_unity, unitarity_residual, CMat, C64};
use qdlab::mtc_data::{builtin, solve_m3j, MtcData};
use qdlab::wilson_ops::*;

fn lv(m: &MtcData, s: &str) -> LagrangianVector {
    LagrangianVector::parse(s, &m.labels).unwrap()
}

fn basis(m: &MtcData, holes: &[&str]) -> GroundBasis {
    let b: Vec<_> = holes.iter().map(|h| lv(m, h)).collect();
    ground_state_basis(m, &b).unwrap()
}

fn real(rows: &[&[f64]]) -> CMat {
    from_rows(&rows.iter().map(|r| r.iter().map(|&x| cr(x)).collect()).collect::<Vec<Vec<C64>>>())
}

#[test]
fn toric_two_hole_operators() {
    let m = builtin("tc").unwrap();
    let gb = basis(&m, &["1+e", "1+e"]);
    assert_eq!(gb.labels, vec!["1", "e"]);
    let ms = solve_m3j(&m, &lv(&m, "1+e"), 0).unwrap();
    let we = tunnel_matrix(&m, &ms, &ms, &gb, "e").unwrap();
    assert!(max_diff(&we.entries, &real(&[&[0.0, 1.0], &[1.0, 0.0]])) < 1e-12);
    let wm = loop_matrix(&m, &gb, 1, "m").unwrap();
    assert!(max_diff(&wm.entries, &real(&[&[1.0, 0.0], &[0.0, -1.0]])) < 1e-12);
    let wm2 = loop_matrix(&m, &gb, 2, "m").unwrap();
    assert!(max_diff(&wm.entries, &wm2.entries) < 1e-12);
    // i W_m W_e is the Hermitian measurement of the pair
    let p = measurement_operator(&[wm.clone(), we.clone()]).unwrap();
    assert!(max_diff(&p.entries, &(&wm.entries * &we.entries * c(0.0, 1.0))) < 1e-12);
    assert!(max_diff(&(&p.entries * &p.entries), &identity(2)) < 1e-12);
    // sigma_x and sigma_x + sigma_z neither commute nor anticommute
    let mixed = OperatorMatrix { name: "X+Z".into(), entries: &we.entries + &wm.entries, labels: we.labels.clone() };
    assert!(matches!(measurement_operator(&[we.clone(), mixed]), Err(WilsonError::NotReversalProportional)));
    assert!(matches!(measurement_operator(&[]), Err(WilsonError::Empty)));
}

#[test]
fn ds3_two_hole_operators() {
    let m = builtin("ds3").unwrap();
    let gb = basis(&m, &["A+C+D", "A+C+D"]);
    assert_eq!(gb.labels, vec!["A", "C", "D"]);
    let ms = solve_m3j(&m, &lv(&m, "A+C+D"), 0).unwrap();
    let r2 = 2f64.sqrt();
    let wc = tunnel_matrix(&m, &ms, &ms, &gb, "C").unwrap();
    assert!(max_diff(&wc.entries, &real(&[&[0.0, 1.0, 0.0], &[1.0, 1.0 / r2, 0.0], &[0.0, 0.0, r2]])) < 1e-9, "{}", wc.entries);
    let wd = tunnel_matrix(&m, &ms, &ms, &gb, "D").unwrap();
    assert!(max_diff(&wd.entries, &real(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, r2], &[1.0, r2, 0.0]])) < 1e-9, "{}", wd.entries);
    let wb = loop_matrix(&m, &gb, 1, "B").unwrap();
    assert!(max_diff(&wb.entries, &real(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, -1.0]])) < 1e-12);
    // W_A is the identity, and tunnels obey the fusion rules of the hole charges
    let wa = tunnel_matrix(&m, &ms, &ms, &gb, "A").unwrap();
    assert!(max_diff(&wa.entries, &identity(3)) < 1e-9);
    assert!(charge_projection(&m, &gb, ChargeTarget::Arc, "e").is_err());
    assert!(matches!(loop_matrix(&m, &gb, 3, "B"), Err(WilsonError::BadHole(3))));
    assert!(matches!(tunnel_matrix(&m, &ms, &ms, &gb, "Q"), Err(WilsonError::BadLabel(_))));
}

#[test]
fn basis_dimensions() {
    let m = builtin("ds3").unwrap();
    let four = vec![lv(&m, "A+C+D"); 4];
    let gb = ground_state_basis(&m, &four).unwrap();
    assert_eq!(gb.dim(), 49);
    assert_eq!(hom_dimension(&m, &four), 49);
    let tc = builtin("tc").unwrap();
    assert_eq!(basis(&tc, &["1+e", "1+e", "1+m", "1+m"]).dim(), 4);
    assert_eq!(basis(&tc, &["1+e", "1+m"]).dim(), 1);
    assert!(ground_state_basis(&tc, &[lv(&tc, "1+eps"), lv(&tc, "1+e")]).is_err());
}

#[test]
fn toric_double_braid_is_controlled_z() {
    let m = builtin("tc").unwrap();
    let gb = basis(&m, &["1+e", "1+e", "1+m", "1+m"]);
    let op = braid_sigma2_squared(&m, &gb).unwrap();
    let idx = logical_subspace(&gb);
    assert_eq!(idx.len(), 4);
    let blk = restrict(&op.entries, &idx);
    let want = qdlab::linalg::diag(&[cr(1.0), cr(1.0), cr(1.0), cr(-1.0)]);
    assert!(max_diff(&blk, &want) < 1e-12, "{}", blk);
}

#[test]
fn dz3_double_braid_phases() {
    let m = builtin("dz3").unwrap();
    let gb = basis(&m, &["1+e+e2", "1+e+e2", "1+m+m2", "1+m+m2"]);
    let op = braid_sigma2_squared(&m, &gb).unwrap();
    let blk = restrict(&op.entries, &logical_subspace(&gb));
    let w = root_of_unity(1, 3);
    let w2 = w * w;
    let one = cr(1.0);
    let want = qdlab::linalg::diag(&[one, one, one, one, w, w2, one, w2, w]);
    assert!(max_diff(&blk, &want) < 1e-12, "{}", blk);
}

fn check_relations(m: &MtcData, gb: &GroundBasis) {
    let d = gb.dim();
    let gens = all_pure_braid_generators(m, gb).unwrap();
    assert_eq!(gens.len(), 6);
    for g in &gens {
        assert!(unitarity_residual(&g.entries) < 1e-9, "{}", g.name);
    }
    let a = |n: &str| gens.iter().find(|g| g.name == n).unwrap().entries.clone();
    // disjoint pairs commute
    assert!(max_diff(&(a("A12") * a("A34")), &(a("A34") * a("A12"))) < 1e-9);
    assert!(max_diff(&(a("A14") * a("A23")), &(a("A23") * a("A14"))) < 1e-9);
    // A12 then A13 then A23 is the full twist of holes 1..3, which is central
    let t = a("A23") * a("A13") * a("A12");
    let twist = braid_word_matrix(m, gb, &[(1, false), (2, false)].repeat(3), "twist").unwrap().entries;
    assert!(max_diff(&t, &twist) < 1e-9);
    for g in ["A12", "A13", "A23"] {
        assert!(max_diff(&(&t * a(g)), &(a(g) * &t)) < 1e-9);
    }
    let words: Vec<BraidWord> = vec![
        vec![(1, false), (2, false), (1, false), (2, true), (1, true), (2, true)],
        vec![(2, false), (3, false), (2, false), (3, true), (2, true), (3, true)],
        vec![(1, false), (3, false), (1, true), (3, true)],
        // sphere relations
        vec![(1, false), (2, false), (3, false), (3, false), (2, false), (1, false)],
        [(1, false), (2, false), (3, false)].repeat(4),
    ];
    for w in words {
        let op = braid_word_matrix(m, gb, &w, "w").unwrap();
        assert!(max_diff(&op.entries, &identity(d)) < 1e-9, "{:?}", w);
    }
}

#[test]
fn braid_group_relations_toric() {
    let m = builtin("tc").unwrap();
    check_relations(&m, &basis(&m, &["1+e", "1+e", "1+m", "1+m"]));
    check_relations(&m, &basis(&m, &["1+e", "1+m", "1+e", "1+m"]));
}

#[test]
fn braid_group_relations_ds3() {
    let m = builtin("ds3").unwrap();
    check_relations(&m, &basis(&m, &["A+C+D"; 4]));
    check_relations(&m, &basis(&m, &["A+C+D", "A+F+D", "A+C+D", "A+F+D"]));
}

#[test]
fn dz3_charge_projectors() {
    let m = builtin("dz3").unwrap();
    let gb = basis(&m, &["1+e+e2", "1+e+e2"]);
    let w = root_of_unity(1, 3);
    let p = charge_projection(&m, &gb, ChargeTarget::Arc, "e").unwrap();
    let one = cr(1.0);
    let want = from_rows(&[vec![one, w, w.conj()], vec![w.conj(), one, w], vec![w, w.conj(), one]]) / cr(3.0);
    assert!(max_diff(&p.entries, &want) < 1e-12, "{}", p.entries);
    let mut sum_arc = CMat::zeros(3, 3);
    let mut sum_loop = CMat::zeros(3, 3);
    for a in factor_labels(3) {
        let pa = charge_projection(&m, &gb, ChargeTarget::Arc, &a).unwrap().entries;
        assert!(max_diff(&(&pa * &pa), &pa) < 1e-12);
        sum_arc += pa;
        let pl = charge_projection(&m, &gb, ChargeTarget::Loop(1), &a).unwrap().entries;
        assert!(max_diff(&(&pl * &pl), &pl) < 1e-12);
        sum_loop += pl;
    }
    assert!(max_diff(&sum_arc, &identity(3)) < 1e-12);
    assert!(max_diff(&sum_loop, &identity(3)) < 1e-12);
    let tc = builtin("tc").unwrap();
    let gb2 = basis(&tc, &["1+e", "1+e"]);
    let err = charge_projection(&tc, &gb2, ChargeTarget::Arc, "e").unwrap_err();
    assert_eq!(err.to_string(), "requires modular input category");
}

#[test]
fn loop_and_tunnel_commute_up_to_phase() {
    for n in [3usize, 5] {
        let m = builtin(&format!("dz{}", n)).unwrap();
        let alg = (0..n).map(|k| qdlab::qdouble::zn_label(n, k, 0)).collect::<Vec<_>>().join("+");
        let gb = basis(&m, &[&alg, &alg]);
        let ms = solve_m3j(&m, &lv(&m, &alg), 0).unwrap();
        let we = tunnel_matrix(&m, &ms, &ms, &gb, "e").unwrap().entries;
        let wm = loop_matrix(&m, &gb, 2, "m").unwrap().entries;
        let lhs = &wm * &we;
        let rhs = &we * &wm * root_of_unity(-1, n);
        assert!(max_diff(&lhs, &rhs) < 1e-12, "n = {}", n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn tunnels_unitary_for_abelian(n in 2usize..7, k in 0usize..7) {
        let m = builtin(&format!("dz{}", n)).unwrap();
        let alg = (0..n).map(|j| qdlab::qdouble::zn_label(n, j, 0)).collect::<Vec<_>>().join("+");
        let gb = basis(&m, &[&alg, &alg]);
        prop_assert_eq!(gb.dim(), n);
        let ms = solve_m3j(&m, &lv(&m, &alg), 0).unwrap();
        let label = qdlab::qdouble::zn_label(n, k % n, 0);
        let w = tunnel_matrix(&m, &ms, &ms, &gb, &label).unwrap().entries;
        prop_assert!(unitarity_residual(&w) < 1e-12);
        // W^n = 1
        let mut p = identity(n);
        for _ in 0..n {
            p = &p * &w;
        }
        prop_assert!(max_diff(&p, &identity(n)) < 1e-12);
    }
}
