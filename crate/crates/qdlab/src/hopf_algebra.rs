//! The quasi-Hopf algebra Z(G,1,K,1) of boundary local operators, with
//! basis Z^{(hK,k)} = B^{hK} A^k, and a numeric check of its axioms.
//!
//! Elements are sparse maps from basis tuples to real coefficients (all
//! structure constants are 0/1).

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::group_core::{FiniteGroup, GroupError, Subgroup};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HopfError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("elements belong to different algebras")]
    Mismatch,
    #[error("algebra too large for verification: dim {0} > {1}")]
    TooLarge(usize, usize),
}

/// Which formulas to use for the coproduct, alpha and beta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// coproduct with tensor factors ordered so coassociativity holds,
    /// alpha = 1, beta = sum_x delta_x {r_x^{-1}}
    Corrected,
    /// coproduct, alpha and beta exactly as printed in the appendix
    AsPrinted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TransversalChoice {
    /// both a left and a right transversal, containing 1
    TwoSided,
    /// least element index of each left coset
    MinIndex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZBasisElement {
    pub coset: usize,
    /// index into K's sorted element list
    pub k: usize,
}

pub type Tensor = BTreeMap<Vec<usize>, f64>;

#[derive(Clone, Debug)]
pub struct ZAlgebra {
    pub group: FiniteGroup,
    pub subgroup: Subgroup,
    pub variant: Variant,
    /// left coset index of each group element; cosets ordered by least element
    pub coset_of: Vec<usize>,
    /// r_x for every coset
    pub reps: Vec<usize>,
    kpos: Vec<Option<usize>>,
}

impl ZAlgebra {
    pub fn new(g: &FiniteGroup, k: &Subgroup, variant: Variant, choice: TransversalChoice) -> Result<ZAlgebra, HopfError> {
        g.check_subgroup(k)?;
        let n = g.order;
        let mut coset_of = vec![usize::MAX; n];
        let mut cosets: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            if coset_of[x] != usize::MAX {
                continue;
            }
            let idx = cosets.len();
            let mut members: Vec<usize> = k.elements.iter().map(|&kk| g.mul(x, kk)).collect();
            members.sort();
            for &y in &members {
                coset_of[y] = idx;
            }
            cosets.push(members);
        }
        let min_reps: Vec<usize> = cosets.iter().map(|c| c[0]).collect();
        let reps = match choice {
            TransversalChoice::MinIndex => min_reps,
            TransversalChoice::TwoSided => {
                if is_right_transversal(g, k, &min_reps) {
                    min_reps
                } else {
                    two_sided_transversal(g, k, &cosets)
                }
            }
        };
        let mut kpos = vec![None; n];
        for (i, &x) in k.elements.iter().enumerate() {
            kpos[x] = Some(i);
        }
        Ok(ZAlgebra { group: g.clone(), subgroup: k.clone(), variant, coset_of, reps, kpos })
    }

    pub fn dim(&self) -> usize {
        self.reps.len() * self.subgroup.order()
    }

    pub fn num_cosets(&self) -> usize {
        self.reps.len()
    }

    pub fn basis(&self, b: usize) -> ZBasisElement {
        let ko = self.subgroup.order();
        ZBasisElement { coset: b / ko, k: b % ko }
    }

    pub fn index(&self, coset: usize, kelem: usize) -> usize {
        coset * self.subgroup.order() + self.kpos[kelem].expect("not in K")
    }

    fn kel(&self, b: usize) -> usize {
        self.subgroup.elements[b % self.subgroup.order()]
    }

    /// r(g)
    pub fn r(&self, g: usize) -> usize {
        self.reps[self.coset_of[g]]
    }

    /// {g} in K with g = r(g) {g}^{-1}
    pub fn curly(&self, g: usize) -> usize {
        let gr = &self.group;
        gr.mul(gr.inv(g), self.r(g))
    }

    pub fn is_two_sided(&self) -> bool {
        is_right_transversal(&self.group, &self.subgroup, &self.reps)
    }

    /// Z^{(x,k1)} Z^{(y,k2)} = delta_{x, k1 y} Z^{(x, k1 k2)}
    pub fn mul_basis(&self, a: usize, b: usize) -> Option<usize> {
        let g = &self.group;
        let (x, k1) = (a / self.subgroup.order(), self.kel(a));
        let (y, k2) = (b / self.subgroup.order(), self.kel(b));
        if self.coset_of[g.mul(k1, self.reps[y])] == x {
            Some(self.index(x, g.mul(k1, k2)))
        } else {
            None
        }
    }

    pub fn unit(&self) -> Tensor {
        let e = self.group.identity();
        (0..self.num_cosets()).map(|x| (vec![self.index(x, e)], 1.0)).collect()
    }

    pub fn counit_basis(&self, b: usize) -> f64 {
        if b / self.subgroup.order() == 0 {
            1.0
        } else {
            0.0
        }
    }

    /// Delta of a basis element as (first, second) pairs.
    pub fn comul_basis(&self, b: usize) -> Vec<(usize, usize)> {
        let g = &self.group;
        let (x, k) = (b / self.subgroup.order(), self.kel(b));
        let rx = self.reps[x];
        let mut out = Vec::with_capacity(self.num_cosets());
        for y in 0..self.num_cosets() {
            let ry = self.reps[y];
            let z = self.coset_of[g.mul(g.inv(ry), rx)];
            let kappa = self.curly(g.mul(g.inv(k), ry));
            let first = self.index(y, k);
            let second = self.index(z, kappa);
            match self.variant {
                Variant::Corrected => out.push((first, second)),
                Variant::AsPrinted => out.push((second, first)),
            }
        }
        out
    }

    /// S(Z^{(y,k)}) = Z^{(r(g)^{-1} K, {g}^{-1})} with g = k^{-1} r_y
    pub fn antipode_basis(&self, b: usize) -> usize {
        let gr = &self.group;
        let (y, k) = (b / self.subgroup.order(), self.kel(b));
        let g = gr.mul(gr.inv(k), self.reps[y]);
        let c = self.coset_of[gr.inv(self.r(g))];
        self.index(c, gr.inv(self.curly(g)))
    }

    /// the element of K embedded as sum_x delta_x k
    pub fn embed_k(&self, k: usize) -> Tensor {
        (0..self.num_cosets()).map(|x| (vec![self.index(x, k)], 1.0)).collect()
    }

    pub fn alpha(&self) -> Tensor {
        match self.variant {
            Variant::Corrected => self.unit(),
            Variant::AsPrinted => [(vec![self.index(0, 0)], 1.0)].into_iter().collect(),
        }
    }

    pub fn beta(&self) -> Tensor {
        let g = &self.group;
        let mut t = Tensor::new();
        for x in 0..self.num_cosets() {
            let rx = self.reps[x];
            let kk = match self.variant {
                Variant::Corrected => self.curly(g.inv(rx)),
                Variant::AsPrinted => g.inv(self.curly(rx)),
            };
            add(&mut t, vec![self.index(x, kk)], 1.0);
        }
        t
    }

    /// Phi = sum_{a,c} delta_a (x) delta_c (x) {r_a r_c}; inverse uses {r_a r_c}^{-1}
    pub fn phi(&self, inverse: bool) -> Tensor {
        let g = &self.group;
        let m = self.num_cosets();
        let mut t = Tensor::new();
        for a in 0..m {
            for c in 0..m {
                let mut kk = self.curly(g.mul(self.reps[a], self.reps[c]));
                if inverse {
                    kk = g.inv(kk);
                }
                for x in 0..m {
                    add(&mut t, vec![self.index(a, 0), self.index(c, 0), self.index(x, kk)], 1.0);
                }
            }
        }
        t
    }

    /// product of tensors of equal arity, factorwise
    pub fn tmul(&self, a: &Tensor, b: &Tensor) -> Tensor {
        let ko = self.subgroup.order();
        // index b by the coset tuple
        let mut by_cosets: BTreeMap<Vec<usize>, Vec<(&Vec<usize>, f64)>> = BTreeMap::new();
        for (key, &v) in b {
            let cs: Vec<usize> = key.iter().map(|&i| i / ko).collect();
            by_cosets.entry(cs).or_default().push((key, v));
        }
        let g = &self.group;
        let mut out = Tensor::new();
        for (ka, &va) in a {
            let need: Vec<usize> = ka
                .iter()
                .map(|&i| {
                    let (x, k) = (i / ko, self.kel(i));
                    self.coset_of[g.mul(g.inv(k), self.reps[x])]
                })
                .collect();
            if let Some(list) = by_cosets.get(&need) {
                for (kb, vb) in list {
                    let key: Option<Vec<usize>> = ka.iter().zip(kb.iter()).map(|(&p, &q)| self.mul_basis(p, q)).collect();
                    if let Some(key) = key {
                        add(&mut out, key, va * vb);
                    }
                }
            }
        }
        prune(out)
    }

    /// apply Delta to tensor factor `pos`
    pub fn delta_at(&self, t: &Tensor, pos: usize) -> Tensor {
        let mut out = Tensor::new();
        for (key, &v) in t {
            for (p, q) in self.comul_basis(key[pos]) {
                let mut nk = Vec::with_capacity(key.len() + 1);
                nk.extend_from_slice(&key[..pos]);
                nk.push(p);
                nk.push(q);
                nk.extend_from_slice(&key[pos + 1..]);
                add(&mut out, nk, v);
            }
        }
        prune(out)
    }

    pub fn epsilon_at(&self, t: &Tensor, pos: usize) -> Tensor {
        let mut out = Tensor::new();
        for (key, &v) in t {
            let e = self.counit_basis(key[pos]);
            if e != 0.0 {
                let mut nk = key.clone();
                nk.remove(pos);
                add(&mut out, nk, v * e);
            }
        }
        prune(out)
    }

    pub fn antipode(&self, t: &Tensor) -> Tensor {
        let mut out = Tensor::new();
        for (key, &v) in t {
            add(&mut out, key.iter().map(|&b| self.antipode_basis(b)).collect(), v);
        }
        prune(out)
    }

    /// a (x) b for tensors
    pub fn outer(&self, a: &Tensor, b: &Tensor) -> Tensor {
        let mut out = Tensor::new();
        for (ka, &va) in a {
            for (kb, &vb) in b {
                let mut k = ka.clone();
                k.extend_from_slice(kb);
                add(&mut out, k, va * vb);
            }
        }
        out
    }

    pub fn basis_tensor(&self, b: usize) -> Tensor {
        [(vec![b], 1.0)].into_iter().collect()
    }

    fn unit_power(&self, n: usize) -> Tensor {
        let u = self.unit();
        let mut t = u.clone();
        for _ in 1..n {
            t = self.outer(&t, &u);
        }
        t
    }

    /// split a 3-tensor into its legs and contract sum_i f(x_i, y_i, z_i)
    fn contract3(&self, t: &Tensor, f: impl Fn(&Tensor, &Tensor, &Tensor) -> Tensor) -> Tensor {
        let mut out = Tensor::new();
        for (key, &v) in t {
            let x = self.basis_tensor(key[0]);
            let y = self.basis_tensor(key[1]);
            let z = self.basis_tensor(key[2]);
            for (k, w) in f(&x, &y, &z) {
                add(&mut out, k, v * w);
            }
        }
        prune(out)
    }

    /// Multiplication of Z read as the comultiplication of the dual Y:
    /// Delta_Y(f_c) = sum over (a, b) with a b = c of f_a (x) f_b.
    pub fn y_comultiply(&self, c: usize) -> Vec<(usize, usize)> {
        let d = self.dim();
        let mut out = Vec::new();
        for a in 0..d {
            for b in 0..d {
                if self.mul_basis(a, b) == Some(c) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

fn add(t: &mut Tensor, k: Vec<usize>, v: f64) {
    *t.entry(k).or_insert(0.0) += v;
}

fn prune(t: Tensor) -> Tensor {
    t.into_iter().filter(|(_, v)| v.abs() > 1e-14).collect()
}

pub fn tensor_diff(a: &Tensor, b: &Tensor) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, v) in a {
        worst = worst.max((v - b.get(k).cloned().unwrap_or(0.0)).abs());
    }
    for (k, v) in b {
        if !a.contains_key(k) {
            worst = worst.max(v.abs());
        }
    }
    worst
}

fn is_right_transversal(g: &FiniteGroup, k: &Subgroup, reps: &[usize]) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    for &r in reps {
        // right coset K r, keyed by its least element
        let key = k.elements.iter().map(|&kk| g.mul(kk, r)).min().unwrap();
        if !seen.insert(key) {
            return false;
        }
    }
    true
}

/// Perfect matching between left and right cosets (Kuhn's algorithm,
/// deterministic order), each pair represented by the least element in
/// the intersection. The coset K is matched with itself through 1.
fn two_sided_transversal(g: &FiniteGroup, k: &Subgroup, left: &[Vec<usize>]) -> Vec<usize> {
    let n = g.order;
    let mut right_of = vec![usize::MAX; n];
    let mut rights: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        if right_of[x] != usize::MAX {
            continue;
        }
        let idx = rights.len();
        let mut members: Vec<usize> = k.elements.iter().map(|&kk| g.mul(kk, x)).collect();
        members.sort();
        for &y in &members {
            right_of[y] = idx;
        }
        rights.push(members);
    }
    let m = left.len();
    // candidate right cosets of each left coset, by least intersecting element
    let cands: Vec<Vec<(usize, usize)>> = left
        .iter()
        .map(|lc| {
            let mut v: Vec<(usize, usize)> = Vec::new();
            for &x in lc {
                if !v.iter().any(|(rc, _)| *rc == right_of[x]) {
                    v.push((right_of[x], x));
                }
            }
            v
        })
        .collect();
    let mut match_right: Vec<Option<usize>> = vec![None; m];
    match_right[0] = Some(0);
    fn try_assign(
        l: usize,
        cands: &[Vec<(usize, usize)>],
        match_right: &mut Vec<Option<usize>>,
        visited: &mut Vec<bool>,
    ) -> bool {
        for &(rc, _) in &cands[l] {
            if rc == 0 || visited[rc] {
                continue;
            }
            visited[rc] = true;
            let free = match match_right[rc] {
                None => true,
                Some(other) => try_assign(other, cands, match_right, visited),
            };
            if free {
                match_right[rc] = Some(l);
                return true;
            }
        }
        false
    }
    for l in 1..m {
        let mut visited = vec![false; m];
        let ok = try_assign(l, &cands, &mut match_right, &mut visited);
        assert!(ok, "left and right cosets always admit a perfect matching");
    }
    let mut reps = vec![0; m];
    for (rc, l) in match_right.iter().enumerate() {
        let l = l.unwrap();
        reps[l] = cands[l].iter().find(|(r, _)| *r == rc).unwrap().1;
    }
    reps[0] = 0;
    reps
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiHopfReport {
    pub group: String,
    pub subgroup_order: usize,
    pub variant: Variant,
    pub transversal: Vec<usize>,
    pub two_sided: bool,
    pub residuals: Vec<(String, f64)>,
    pub pass: bool,
}

pub const VERIFY_MAX_DIM: usize = 1000;

pub fn verify_quasi_hopf(g: &FiniteGroup, k: &Subgroup) -> Result<QuasiHopfReport, HopfError> {
    verify_with(&ZAlgebra::new(g, k, Variant::Corrected, TransversalChoice::TwoSided)?)
}

pub fn verify_with(z: &ZAlgebra) -> Result<QuasiHopfReport, HopfError> {
    let d = z.dim();
    if d > VERIFY_MAX_DIM {
        return Err(HopfError::TooLarge(d, VERIFY_MAX_DIM));
    }
    let mut res: Vec<(String, f64)> = Vec::new();
    let phi = z.phi(false);
    let phi_inv = z.phi(true);
    let one3 = z.unit_power(3);

    // associativity and unit of the algebra
    let mut r_assoc: f64 = 0.0;
    let mut r_unit: f64 = 0.0;
    let unit = z.unit();
    for a in 0..d {
        let ta = z.basis_tensor(a);
        r_unit = r_unit.max(tensor_diff(&z.tmul(&unit, &ta), &ta)).max(tensor_diff(&z.tmul(&ta, &unit), &ta));
        for b in 0..d {
            for c in 0..d {
                let l = z.mul_basis(a, b).and_then(|ab| z.mul_basis(ab, c));
                let r = z.mul_basis(b, c).and_then(|bc| z.mul_basis(a, bc));
                if l != r {
                    r_assoc = 1.0;
                }
            }
        }
    }
    res.push(("associativity".into(), r_assoc));
    res.push(("unit".into(), r_unit));

    // Delta is an algebra map, Delta(1) = 1 (x) 1
    let mut r_hom: f64 = tensor_diff(&z.delta_at(&unit, 0), &z.unit_power(2));
    for a in 0..d {
        let da = z.delta_at(&z.basis_tensor(a), 0);
        for b in 0..d {
            let db = z.delta_at(&z.basis_tensor(b), 0);
            let lhs = match z.mul_basis(a, b) {
                Some(ab) => z.delta_at(&z.basis_tensor(ab), 0),
                None => Tensor::new(),
            };
            r_hom = r_hom.max(tensor_diff(&lhs, &z.tmul(&da, &db)));
        }
    }
    res.push(("comultiplication_homomorphism".into(), r_hom));

    // quasi-coassociativity: (1 (x) Delta)Delta(a) Phi = Phi (Delta (x) 1)Delta(a)
    let mut r_coassoc: f64 = 0.0;
    for a in 0..d {
        let da = z.delta_at(&z.basis_tensor(a), 0);
        let left = z.delta_at(&da, 1);
        let right = z.delta_at(&da, 0);
        r_coassoc = r_coassoc.max(tensor_diff(&z.tmul(&left, &phi), &z.tmul(&phi, &right)));
    }
    res.push(("quasi_coassociativity".into(), r_coassoc));

    res.push(("associator_invertible".into(), tensor_diff(&z.tmul(&phi, &phi_inv), &one3)));

    // pentagon
    let one = z.unit();
    let lhs = z.tmul(&z.delta_at(&phi, 2), &z.delta_at(&phi, 0));
    let one_phi = z.outer(&one, &phi);
    let phi_one = z.outer(&phi, &one);
    let rhs = z.tmul(&z.tmul(&one_phi, &z.delta_at(&phi, 1)), &phi_one);
    res.push(("pentagon".into(), tensor_diff(&lhs, &rhs)));

    // counit
    let mut r_counit: f64 = 0.0;
    for a in 0..d {
        let ta = z.basis_tensor(a);
        let da = z.delta_at(&ta, 0);
        r_counit = r_counit.max(tensor_diff(&z.epsilon_at(&da, 0), &ta)).max(tensor_diff(&z.epsilon_at(&da, 1), &ta));
    }
    res.push(("counit".into(), r_counit));
    res.push(("associator_counit".into(), tensor_diff(&z.epsilon_at(&phi, 1), &z.unit_power(2))));

    // antipode is an anti-homomorphism
    let mut r_anti: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let lhs = match z.mul_basis(a, b) {
                Some(ab) => z.basis_tensor(z.antipode_basis(ab)),
                None => Tensor::new(),
            };
            let rhs = z.tmul(&z.basis_tensor(z.antipode_basis(b)), &z.basis_tensor(z.antipode_basis(a)));
            r_anti = r_anti.max(tensor_diff(&lhs, &rhs));
        }
    }
    res.push(("antipode_antihomomorphism".into(), r_anti));

    let alpha = z.alpha();
    let beta = z.beta();
    let mut r_alpha: f64 = 0.0;
    let mut r_beta: f64 = 0.0;
    for a in 0..d {
        let eps = z.counit_basis(a);
        let mut sa = Tensor::new();
        let mut sb = Tensor::new();
        for (p, q) in z.comul_basis(a) {
            let tp = z.basis_tensor(p);
            let tq = z.basis_tensor(q);
            for (k, v) in z.tmul(&z.tmul(&z.antipode(&tp), &alpha), &tq) {
                add(&mut sa, k, v);
            }
            for (k, v) in z.tmul(&z.tmul(&tp, &beta), &z.antipode(&tq)) {
                add(&mut sb, k, v);
            }
        }
        let ea: Tensor = alpha.iter().map(|(k, v)| (k.clone(), v * eps)).collect();
        let eb: Tensor = beta.iter().map(|(k, v)| (k.clone(), v * eps)).collect();
        r_alpha = r_alpha.max(tensor_diff(&prune(sa), &prune(ea)));
        r_beta = r_beta.max(tensor_diff(&prune(sb), &prune(eb)));
    }
    res.push(("antipode_alpha".into(), r_alpha));
    res.push(("antipode_beta".into(), r_beta));

    // sum x beta S(y) alpha z = 1 over Phi, sum S(x) alpha y beta S(z) = 1 over Phi^{-1}
    let n1 = z.contract3(&phi, |x, y, w| z.tmul(&z.tmul(&z.tmul(&z.tmul(x, &beta), &z.antipode(y)), &alpha), w));
    let n2 = z.contract3(&phi_inv, |x, y, w| {
        z.tmul(&z.tmul(&z.tmul(&z.tmul(&z.antipode(x), &alpha), y), &beta), &z.antipode(w))
    });
    res.push(("normalization_phi".into(), tensor_diff(&n1, &unit)));
    res.push(("normalization_phi_inverse".into(), tensor_diff(&n2, &unit)));

    let pass = res.iter().all(|(_, r)| *r < 1e-9);
    Ok(QuasiHopfReport {
        group: z.group.name.clone(),
        subgroup_order: z.subgroup.order(),
        variant: z.variant,
        transversal: z.reps.clone(),
        two_sided: z.is_two_sided(),
        residuals: res,
        pass,
    })
}

/// linear combination product helper for external callers
pub fn z_multiply(z: &ZAlgebra, x: &Tensor, y: &Tensor) -> Tensor {
    z.tmul(x, y)
}

pub fn z_comultiply(z: &ZAlgebra, x: &Tensor) -> Tensor {
    z.delta_at(x, 0)
}
