use qdlab::group_core::{build_group, FiniteGroup, GroupSpec};
use qdlab::hopf_algebra::*;

fn grp(s: &str) -> FiniteGroup {
    build_group(&GroupSpec::parse(s).unwrap()).unwrap()
}

fn show(r: &QuasiHopfReport) -> String {
    r.residuals.iter().map(|(n, v)| format!("{}={:.2e}", n, v)).collect::<Vec<_>>().join(" ")
}

#[test]
fn toric_boundary_algebra_is_exact() {
    let g = grp("z2");
    let k = g.full_subgroup();
    let r = verify_quasi_hopf(&g, &k).unwrap();
    assert!(r.residuals.iter().all(|(_, v)| *v == 0.0), "{}", show(&r));
    let r = verify_quasi_hopf(&g, &g.trivial_subgroup()).unwrap();
    assert!(r.residuals.iter().all(|(_, v)| *v == 0.0), "{}", show(&r));
}

#[test]
fn s3_boundaries_pass() {
    let g = grp("s3");
    for ks in ["trivial", "s", "r", "full"] {
        let k = g.parse_subgroup(ks).unwrap();
        let r = verify_quasi_hopf(&g, &k).unwrap();
        assert!(r.pass, "K={}: {}", ks, show(&r));
        assert!(r.two_sided);
    }
}

#[test]
fn larger_groups_pass() {
    for (gs, ks) in [("d4", "s"), ("d4", "r2,s"), ("s4", "2"), ("s4", "3,4"), ("d5", "s"), ("z2xz2", "trivial"), ("s3xs3", "7")] {
        let g = grp(gs);
        let k = g.parse_subgroup(ks).unwrap();
        assert!(k.order() > 1 || ks == "trivial");
        let r = verify_quasi_hopf(&g, &k).unwrap();
        assert!(r.pass, "{} {}: {}", gs, ks, show(&r));
    }
}

#[test]
fn all_subgroups_of_s4_pass() {
    let g = grp("s4");
    for k in g.subgroup_classes().unwrap() {
        let r = verify_quasi_hopf(&g, &k).unwrap();
        assert!(r.pass, "|K|={}: {}", k.order(), show(&r));
    }
}

#[test]
fn dimension_and_structure() {
    let g = grp("s3");
    let k = g.parse_subgroup("s").unwrap();
    let z = ZAlgebra::new(&g, &k, Variant::Corrected, TransversalChoice::TwoSided).unwrap();
    assert_eq!(z.dim(), g.order);
    assert_eq!(z.num_cosets(), 3);
    assert_eq!(z.reps[0], 0);
    for b in 0..z.dim() {
        assert_eq!(z.comul_basis(b).len(), z.num_cosets());
        let cnt: f64 = z.comul_basis(b).iter().map(|&(p, q)| z.counit_basis(p) * z.counit_basis(q)).sum();
        assert_eq!(cnt, z.counit_basis(b));
    }
    // {g} lies in K and g = r(g) {g}^{-1}
    for x in 0..g.order {
        let c = z.curly(x);
        assert!(k.contains(c));
        assert_eq!(g.mul(z.r(x), g.inv(c)), x);
    }
}

#[test]
fn full_subgroup_has_trivial_associator() {
    let g = grp("s3");
    let z = ZAlgebra::new(&g, &g.full_subgroup(), Variant::Corrected, TransversalChoice::TwoSided).unwrap();
    let phi = z.phi(false);
    let one = z.unit();
    let one3 = z.outer(&z.outer(&one, &one), &one);
    assert_eq!(tensor_diff(&phi, &one3), 0.0);
}

#[test]
fn dual_algebra_is_coassociative() {
    let g = grp("s3");
    let z = ZAlgebra::new(&g, &g.parse_subgroup("s").unwrap(), Variant::Corrected, TransversalChoice::TwoSided).unwrap();
    let d = z.dim();
    for c in 0..d {
        let mut left = std::collections::BTreeMap::new();
        let mut right = std::collections::BTreeMap::new();
        for (ab, cc) in z.y_comultiply(c) {
            for (a, b) in z.y_comultiply(ab) {
                *left.entry((a, b, cc)).or_insert(0) += 1;
            }
            for (b, c2) in z.y_comultiply(cc) {
                *right.entry((ab, b, c2)).or_insert(0) += 1;
            }
        }
        assert_eq!(left, right);
    }
}

#[test]
fn printed_alpha_breaks_normalization() {
    // everything holds except the two normalization identities, which
    // need alpha = 1 rather than the projector onto the coset K
    let g = grp("s3");
    let k = g.trivial_subgroup();
    let z = ZAlgebra::new(&g, &k, Variant::AsPrinted, TransversalChoice::TwoSided).unwrap();
    let r = verify_with(&z).unwrap();
    for (name, v) in &r.residuals {
        if name.starts_with("normalization") {
            assert!(*v > 0.5, "{}", show(&r));
        } else {
            assert!(*v < 1e-12, "{}: {}", name, v);
        }
    }
    assert!(!r.pass);
}

#[test]
fn min_index_transversal_not_always_two_sided() {
    let g = grp("s4");
    let mut found = false;
    for k in g.subgroup_classes().unwrap() {
        let z = ZAlgebra::new(&g, &k, Variant::Corrected, TransversalChoice::MinIndex).unwrap();
        if !z.is_two_sided() {
            found = true;
            let r = verify_with(&z).unwrap();
            assert!(!r.pass);
        }
    }
    assert!(found);
}
