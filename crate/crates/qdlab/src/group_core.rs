//! Finite groups as multiplication tables, with subgroups, conjugacy classes,
//! double cosets, character tables and unitary matrix irreps.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, cr, root_of_unity, CMat, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("invalid group table: {0}")]
    InvalidTable(String),
    #[error("table is not associative: ({0}*{1})*{2} != {0}*({1}*{2})")]
    NotAssociative(usize, usize, usize),
    #[error("not a subgroup: {0}")]
    NotSubgroup(String),
    #[error("group order {0} exceeds the character table cap {1}; supply an explicit table")]
    CapExceeded(usize, usize),
    #[error("character table computation failed: {0}")]
    CharacterTable(String),
    #[error("matrix irreps unavailable: {0}")]
    IrrepsUnavailable(String),
    #[error("bad group spec: {0}")]
    BadSpec(String),
}

/// Which catalog family a group came from. Used to pick matrix irreps.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Cyclic(usize),
    Dihedral(usize),
    Symmetric(usize),
    Product(Box<Family>, Box<Family>, usize),
    Table,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSpec {
    Cyclic { n: usize },
    Symmetric { n: usize },
    Dihedral { n: usize },
    Product { left: Box<GroupSpec>, right: Box<GroupSpec> },
    Table {
        table: Vec<Vec<usize>>,
        #[serde(default)]
        name: Option<String>,
    },
}

impl GroupSpec {
    /// Short names: z3, s3, d4, z2xz2, s3xs3, or a JSON object.
    pub fn parse(s: &str) -> Result<GroupSpec, GroupError> {
        let t = s.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t).map_err(|e| GroupError::BadSpec(e.to_string()));
        }
        let lower = t.to_ascii_lowercase();
        let parts: Vec<&str> = lower.split('x').collect();
        if parts.len() > 1 {
            let mut it = parts.iter().map(|p| GroupSpec::parse(p));
            let mut acc = it.next().unwrap()?;
            for p in it {
                acc = GroupSpec::Product { left: Box::new(acc), right: Box::new(p?) };
            }
            return Ok(acc);
        }
        let (head, num) = lower.split_at(1);
        let n: usize = num
            .parse()
            .map_err(|_| GroupError::BadSpec(format!("cannot parse group name '{}'", t)))?;
        match head {
            "z" | "c" => Ok(GroupSpec::Cyclic { n }),
            "s" => Ok(GroupSpec::Symmetric { n }),
            "d" => Ok(GroupSpec::Dihedral { n }),
            _ => Err(GroupError::BadSpec(format!("unknown group family in '{}'", t))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    pub name: String,
    pub order: usize,
    mul: Vec<usize>,
    inv: Vec<usize>,
    pub names: Vec<String>,
    pub family: Family,
}

impl PartialEq for FiniteGroup {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.mul == other.mul
    }
}

impl FiniteGroup {
    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// g h g^{-1}
    pub fn conj(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(g, h), self.inv(g))
    }

    pub fn elem_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        (0..self.order)
            .map(|a| (0..self.order).map(|b| self.mul(a, b)).collect())
            .collect()
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn element_by_name(&self, s: &str) -> Option<usize> {
        if let Some(i) = self.names.iter().position(|n| n == s) {
            return Some(i);
        }
        s.parse::<usize>().ok().filter(|i| *i < self.order)
    }

    pub fn from_spec(spec: &GroupSpec) -> Result<FiniteGroup, GroupError> {
        match spec {
            GroupSpec::Cyclic { n } => {
                if *n == 0 {
                    return Err(GroupError::BadSpec("cyclic(0)".into()));
                }
                Ok(cyclic(*n))
            }
            GroupSpec::Dihedral { n } => {
                if *n < 1 {
                    return Err(GroupError::BadSpec("dihedral(0)".into()));
                }
                Ok(dihedral(*n))
            }
            GroupSpec::Symmetric { n } => {
                if *n == 0 || *n > 5 {
                    return Err(GroupError::BadSpec(format!("symmetric({}) not supported, n must be 1..=5", n)));
                }
                Ok(symmetric(*n))
            }
            GroupSpec::Product { left, right } => {
                Ok(direct_product(&FiniteGroup::from_spec(left)?, &FiniteGroup::from_spec(right)?))
            }
            GroupSpec::Table { table, name } => {
                let mut g = from_table(table)?;
                if let Some(n) = name {
                    g.name = n.clone();
                }
                Ok(g)
            }
        }
    }

    /// Subgroup generated by the given elements.
    pub fn generated(&self, gens: &[usize]) -> Subgroup {
        let mut set = BTreeSet::new();
        set.insert(0);
        let mut frontier = vec![0usize];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if set.insert(y) {
                    frontier.push(y);
                }
            }
        }
        Subgroup::from_sorted(self.order, set.into_iter().collect())
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup::from_sorted(self.order, vec![0])
    }

    pub fn full_subgroup(&self) -> Subgroup {
        Subgroup::from_sorted(self.order, (0..self.order).collect())
    }

    /// Checks closure and returns the subgroup.
    pub fn subgroup(&self, elems: &[usize]) -> Result<Subgroup, GroupError> {
        let set: BTreeSet<usize> = elems.iter().cloned().collect();
        if set.iter().any(|&x| x >= self.order) {
            return Err(GroupError::NotSubgroup("element index out of range".into()));
        }
        if !set.contains(&0) {
            return Err(GroupError::NotSubgroup("identity missing".into()));
        }
        for &a in &set {
            if !set.contains(&self.inv(a)) {
                return Err(GroupError::NotSubgroup(format!("inverse of {} missing", a)));
            }
            for &b in &set {
                if !set.contains(&self.mul(a, b)) {
                    return Err(GroupError::NotSubgroup(format!("{}*{} not in set", a, b)));
                }
            }
        }
        Ok(Subgroup::from_sorted(self.order, set.into_iter().collect()))
    }

    pub fn check_subgroup(&self, k: &Subgroup) -> Result<(), GroupError> {
        if k.parent_order != self.order {
            return Err(GroupError::NotSubgroup("subgroup belongs to a different group".into()));
        }
        self.subgroup(&k.elements).map(|_| ())
    }

    /// g K g^{-1}
    pub fn conjugate_subgroup(&self, g: usize, k: &Subgroup) -> Subgroup {
        let mut v: Vec<usize> = k.elements.iter().map(|&x| self.conj(g, x)).collect();
        v.sort();
        Subgroup::from_sorted(self.order, v)
    }

    /// The conjugate of K with lexicographically least element list.
    pub fn canonical_conjugate(&self, k: &Subgroup) -> Subgroup {
        (0..self.order)
            .map(|g| self.conjugate_subgroup(g, k))
            .min_by(|a, b| a.elements.cmp(&b.elements))
            .unwrap()
    }

    /// All subgroups up to conjugacy, each as its canonical conjugate,
    /// sorted by (order, elements). Limited to order <= 128.
    pub fn subgroup_classes(&self) -> Result<Vec<Subgroup>, GroupError> {
        if self.order > 128 {
            return Err(GroupError::CapExceeded(self.order, 128));
        }
        let to_mask = |s: &Subgroup| -> u128 { s.elements.iter().fold(0u128, |m, &x| m | (1u128 << x)) };
        let cyclics: Vec<Subgroup> = {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for g in 0..self.order {
                let s = self.generated(&[g]);
                if seen.insert(to_mask(&s)) {
                    out.push(s);
                }
            }
            out
        };
        let mut all: BTreeMap<u128, Subgroup> = BTreeMap::new();
        let mut frontier: Vec<Subgroup> = Vec::new();
        for s in &cyclics {
            if all.insert(to_mask(s), s.clone()).is_none() {
                frontier.push(s.clone());
            }
        }
        while let Some(s) = frontier.pop() {
            for cy in &cyclics {
                if cy.elements.iter().all(|x| s.contains(*x)) {
                    continue;
                }
                let mut gens = s.elements.clone();
                gens.extend(cy.elements.iter().cloned());
                let j = self.generated(&gens);
                let m = to_mask(&j);
                if let std::collections::btree_map::Entry::Vacant(e) = all.entry(m) {
                    e.insert(j.clone());
                    frontier.push(j);
                }
            }
        }
        let mut canon: BTreeSet<Vec<usize>> = BTreeSet::new();
        for s in all.values() {
            canon.insert(self.canonical_conjugate(s).elements);
        }
        let mut out: Vec<Subgroup> = canon.into_iter().map(|e| Subgroup::from_sorted(self.order, e)).collect();
        out.sort_by(|a, b| (a.order(), &a.elements).cmp(&(b.order(), &b.elements)));
        Ok(out)
    }

    /// Parse a subgroup description: "trivial", "full", or generators
    /// separated by commas (element names or indices), e.g. "s" or "r,s".
    pub fn parse_subgroup(&self, s: &str) -> Result<Subgroup, GroupError> {
        let t = s.trim();
        match t {
            "trivial" | "1" | "{1}" => return Ok(self.trivial_subgroup()),
            "full" | "G" | "all" => return Ok(self.full_subgroup()),
            _ => {}
        }
        let body = t.trim_start_matches("gens:").trim_start_matches('<').trim_end_matches('>');
        let mut gens = Vec::new();
        for part in body.split(',') {
            let p = part.trim();
            let e = self
                .element_by_name(p)
                .ok_or_else(|| GroupError::NotSubgroup(format!("unknown element '{}'", p)))?;
            gens.push(e);
        }
        Ok(self.generated(&gens))
    }

    /// The subgroup as a group in its own right, elements relabeled in
    /// increasing parent-index order (identity stays at 0).
    pub fn subgroup_as_group(&self, k: &Subgroup) -> FiniteGroup {
        let pos: BTreeMap<usize, usize> = k.elements.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let n = k.order();
        let mut mul = vec![0; n * n];
        let mut inv = vec![0; n];
        for (i, &a) in k.elements.iter().enumerate() {
            inv[i] = pos[&self.inv(a)];
            for (j, &b) in k.elements.iter().enumerate() {
                mul[i * n + j] = pos[&self.mul(a, b)];
            }
        }
        let names = k.elements.iter().map(|&x| self.names[x].clone()).collect();
        FiniteGroup {
            name: format!("{}<{}>", self.name, n),
            order: n,
            mul,
            inv,
            names,
            family: Family::Table,
        }
    }
}

fn finish(name: String, order: usize, mul: Vec<usize>, names: Vec<String>, family: Family) -> FiniteGroup {
    let mut inv = vec![0; order];
    for a in 0..order {
        for b in 0..order {
            if mul[a * order + b] == 0 {
                inv[a] = b;
                break;
            }
        }
    }
    FiniteGroup { name, order, mul, inv, names, family }
}

pub fn cyclic(n: usize) -> FiniteGroup {
    let mut mul = vec![0; n * n];
    for a in 0..n {
        for b in 0..n {
            mul[a * n + b] = (a + b) % n;
        }
    }
    let names = (0..n).map(|k| k.to_string()).collect();
    finish(format!("Z{}", n), n, mul, names, Family::Cyclic(n))
}

/// Dihedral group of order 2n; index k + n*j is r^k s^j.
pub fn dihedral(n: usize) -> FiniteGroup {
    let order = 2 * n;
    let mut mul = vec![0; order * order];
    for x in 0..order {
        let (a, i) = (x % n, x / n);
        for y in 0..order {
            let (b, j) = (y % n, y / n);
            // r^a s^i r^b s^j = r^{a +- b} s^{i+j}
            let k = if i == 0 { (a + b) % n } else { (a + n - b) % n };
            mul[x * order + y] = k + n * ((i + j) % 2);
        }
    }
    let names = (0..order)
        .map(|x| {
            let (k, j) = (x % n, x / n);
            let r = match k {
                0 => String::new(),
                1 => "r".to_string(),
                _ => format!("r{}", k),
            };
            let s = if j == 1 { "s" } else { "" };
            let nm = format!("{}{}", r, s);
            if nm.is_empty() {
                "1".to_string()
            } else {
                nm
            }
        })
        .collect();
    finish(format!("D{}", n), order, mul, names, Family::Dihedral(n))
}

/// S_n; S_3 is given in the dihedral presentation r^3 = s^2 = srsr = 1,
/// larger n as permutations in lexicographic order.
pub fn symmetric(n: usize) -> FiniteGroup {
    if n == 3 {
        let mut g = dihedral(3);
        g.name = "S3".into();
        g.family = Family::Symmetric(3);
        return g;
    }
    let mut perms: Vec<Vec<usize>> = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        perms.push(p.clone());
        // next permutation
        let mut i = n as isize - 2;
        while i >= 0 && p[i as usize] >= p[i as usize + 1] {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        let i = i as usize;
        let mut j = n - 1;
        while p[j] <= p[i] {
            j -= 1;
        }
        p.swap(i, j);
        p[i + 1..].reverse();
    }
    let index: BTreeMap<Vec<usize>, usize> = perms.iter().enumerate().map(|(i, q)| (q.clone(), i)).collect();
    let order = perms.len();
    let mut mul = vec![0; order * order];
    for a in 0..order {
        for b in 0..order {
            // (a b)(i) = a(b(i))
            let comp: Vec<usize> = (0..n).map(|i| perms[a][perms[b][i]]).collect();
            mul[a * order + b] = index[&comp];
        }
    }
    let names = perms.iter().map(|q| cycle_notation(q)).collect();
    finish(format!("S{}", n), order, mul, names, Family::Symmetric(n))
}

fn cycle_notation(p: &[usize]) -> String {
    let mut seen = vec![false; p.len()];
    let mut out = String::new();
    for i in 0..p.len() {
        if seen[i] || p[i] == i {
            continue;
        }
        let mut cyc = vec![i];
        seen[i] = true;
        let mut j = p[i];
        while j != i {
            seen[j] = true;
            cyc.push(j);
            j = p[j];
        }
        out.push('(');
        out.push_str(&cyc.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(""));
        out.push(')');
    }
    if out.is_empty() {
        "1".into()
    } else {
        out
    }
}

/// G x H with index a*|H| + b.
pub fn direct_product(g: &FiniteGroup, h: &FiniteGroup) -> FiniteGroup {
    let (n, m) = (g.order, h.order);
    let order = n * m;
    let mut mul = vec![0; order * order];
    for x in 0..order {
        for y in 0..order {
            mul[x * order + y] = g.mul(x / m, y / m) * m + h.mul(x % m, y % m);
        }
    }
    let mut names = Vec::with_capacity(order);
    for a in 0..n {
        for b in 0..m {
            names.push(format!("({},{})", g.names[a], h.names[b]));
        }
    }
    finish(
        format!("{}x{}", g.name, h.name),
        order,
        mul,
        names,
        Family::Product(Box::new(g.family.clone()), Box::new(h.family.clone()), m),
    )
}

/// Validate an explicit table (row-major; index 0 must be the identity).
pub fn from_table(table: &[Vec<usize>]) -> Result<FiniteGroup, GroupError> {
    let n = table.len();
    if n == 0 {
        return Err(GroupError::InvalidTable("empty table".into()));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != n {
            return Err(GroupError::InvalidTable(format!("row {} has length {}", i, row.len())));
        }
        if row.iter().any(|&x| x >= n) {
            return Err(GroupError::InvalidTable(format!("row {} has an out-of-range entry", i)));
        }
    }
    for a in 0..n {
        if table[0][a] != a || table[a][0] != a {
            return Err(GroupError::InvalidTable(format!("element 0 is not a two-sided identity (fails at {})", a)));
        }
    }
    for a in 0..n {
        let has_inv = (0..n).any(|b| table[a][b] == 0 && table[b][a] == 0);
        if !has_inv {
            return Err(GroupError::InvalidTable(format!("element {} has no two-sided inverse", a)));
        }
    }
    let check = |a: usize, b: usize, c_: usize| table[table[a][b]][c_] == table[a][table[b][c_]];
    if n <= 64 {
        for a in 0..n {
            for b in 0..n {
                for c_ in 0..n {
                    if !check(a, b, c_) {
                        return Err(GroupError::NotAssociative(a, b, c_));
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa550c);
        for _ in 0..200_000 {
            let (a, b, c_) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            if !check(a, b, c_) {
                return Err(GroupError::NotAssociative(a, b, c_));
            }
        }
    }
    let mul: Vec<usize> = table.iter().flat_map(|r| r.iter().cloned()).collect();
    let names = (0..n).map(|k| k.to_string()).collect();
    Ok(finish(format!("T{}", n), n, mul, names, Family::Table))
}

pub fn build_group(spec: &GroupSpec) -> Result<FiniteGroup, GroupError> {
    FiniteGroup::from_spec(spec)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subgroup {
    pub parent_order: usize,
    pub elements: Vec<usize>,
}

impl Subgroup {
    fn from_sorted(parent_order: usize, elements: Vec<usize>) -> Subgroup {
        Subgroup { parent_order, elements }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn intersect(&self, other: &Subgroup) -> Subgroup {
        let v = self.elements.iter().cloned().filter(|x| other.contains(*x)).collect();
        Subgroup::from_sorted(self.parent_order, v)
    }

    pub fn index_of(&self, x: usize) -> Option<usize> {
        self.elements.binary_search(&x).ok()
    }
}

#[derive(Clone, Debug)]
pub struct ConjugacyClass {
    pub rep: usize,
    pub elements: Vec<usize>,
    pub centralizer: Subgroup,
    /// p_i with elements[i] = p_i rep p_i^{-1}
    pub transversal: Vec<usize>,
}

impl ConjugacyClass {
    pub fn size(&self) -> usize {
        self.elements.len()
    }
    pub fn position(&self, x: usize) -> Option<usize> {
        self.elements.binary_search(&x).ok()
    }
}

pub fn conjugacy_classes(g: &FiniteGroup) -> Vec<ConjugacyClass> {
    let n = g.order;
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    for x in 0..n {
        if seen[x] {
            continue;
        }
        let mut set = BTreeSet::new();
        for h in 0..n {
            set.insert(g.conj(h, x));
        }
        for &y in &set {
            seen[y] = true;
        }
        let elements: Vec<usize> = set.into_iter().collect();
        let cent: Vec<usize> = (0..n).filter(|&h| g.mul(h, x) == g.mul(x, h)).collect();
        let transversal = elements
            .iter()
            .map(|&ci| (0..n).find(|&p| g.conj(p, x) == ci).unwrap())
            .collect();
        classes.push(ConjugacyClass {
            rep: x,
            elements,
            centralizer: Subgroup::from_sorted(n, cent),
            transversal,
        });
    }
    classes.sort_by_key(|cl| (cl.size(), cl.rep));
    classes
}

#[derive(Clone, Debug)]
pub struct DoubleCoset {
    pub left: Subgroup,
    pub right: Subgroup,
    pub rep: usize,
    pub elements: Vec<usize>,
    /// K1 cap r K2 r^{-1}
    pub stabilizer: Subgroup,
    /// left coset representatives of K1 / stabilizer
    pub transversal: Vec<usize>,
    /// q_i r q_i^{-1}, only when K1 = K2
    pub s: Option<Vec<usize>>,
}

impl DoubleCoset {
    pub fn size(&self) -> usize {
        self.elements.len()
    }
    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&x).is_ok()
    }
}

pub fn double_cosets(g: &FiniteGroup, k1: &Subgroup, k2: &Subgroup) -> Result<Vec<DoubleCoset>, GroupError> {
    g.check_subgroup(k1)?;
    g.check_subgroup(k2)?;
    let n = g.order;
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for r in 0..n {
        if seen[r] {
            continue;
        }
        let mut set = BTreeSet::new();
        for &a in &k1.elements {
            for &b in &k2.elements {
                set.insert(g.mul(g.mul(a, r), b));
            }
        }
        for &y in &set {
            seen[y] = true;
        }
        let rk2r = g.conjugate_subgroup(r, k2);
        let stab = k1.intersect(&rk2r);
        let mut trans = Vec::new();
        let mut covered = BTreeSet::new();
        for &q in &k1.elements {
            if covered.contains(&q) {
                continue;
            }
            trans.push(q);
            for &h in &stab.elements {
                covered.insert(g.mul(q, h));
            }
        }
        let s = if k1 == k2 {
            Some(trans.iter().map(|&q| g.conj(q, r)).collect())
        } else {
            None
        };
        out.push(DoubleCoset {
            left: k1.clone(),
            right: k2.clone(),
            rep: r,
            elements: set.into_iter().collect(),
            stabilizer: stab,
            transversal: trans,
            s,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub classes: Vec<ConjugacyClass>,
    /// class index of each element
    pub class_of: Vec<usize>,
    /// rows[irrep][class]
    pub rows: Vec<Vec<C64>>,
    pub dims: Vec<usize>,
    pub order: usize,
}

impl CharacterTable {
    pub fn chi(&self, irrep: usize, g: usize) -> C64 {
        self.rows[irrep][self.class_of[g]]
    }

    pub fn num_irreps(&self) -> usize {
        self.rows.len()
    }

    /// max deviation from row orthonormality and column orthogonality
    pub fn orthogonality_residual(&self) -> f64 {
        let k = self.rows.len();
        let n = self.order as f64;
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let mut s = C64::new(0.0, 0.0);
                for (j, cl) in self.classes.iter().enumerate() {
                    s += self.rows[a][j] * self.rows[b][j].conj() * cl.size() as f64;
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((s / n - cr(target)).norm());
            }
        }
        for i in 0..k {
            for j in 0..k {
                let mut s = C64::new(0.0, 0.0);
                for a in 0..k {
                    s += self.rows[a][i] * self.rows[a][j].conj();
                }
                let target = if i == j { n / self.classes[i].size() as f64 } else { 0.0 };
                worst = worst.max((s - cr(target)).norm() / n);
            }
        }
        worst
    }
}

pub const DEFAULT_CHAR_CAP: usize = 256;

pub fn character_table(g: &FiniteGroup) -> Result<CharacterTable, GroupError> {
    character_table_with_cap(g, DEFAULT_CHAR_CAP)
}

/// Burnside-Dixon: simultaneous eigenvectors of the class-sum matrices.
pub fn character_table_with_cap(g: &FiniteGroup, cap: usize) -> Result<CharacterTable, GroupError> {
    if g.order > cap {
        return Err(GroupError::CapExceeded(g.order, cap));
    }
    let classes = conjugacy_classes(g);
    let k = classes.len();
    let mut class_of = vec![0; g.order];
    for (i, cl) in classes.iter().enumerate() {
        for &x in &cl.elements {
            class_of[x] = i;
        }
    }
    let sizes: Vec<f64> = classes.iter().map(|c| c.size() as f64).collect();
    // a[j][(l,k)] = c_{jk}^l sqrt(|C_l|/|C_k|)
    let mut amats: Vec<DMatrix<f64>> = Vec::with_capacity(k);
    for cj in classes.iter() {
        let mut m = DMatrix::<f64>::zeros(k, k);
        for (l, cl) in classes.iter().enumerate() {
            let z = cl.rep;
            let mut counts = vec![0usize; k];
            for &x in &cj.elements {
                let y = g.mul(g.inv(x), z);
                counts[class_of[y]] += 1;
            }
            for kk in 0..k {
                m[(l, kk)] = counts[kk] as f64 * (sizes[l] / sizes[kk]).sqrt();
            }
        }
        amats.push(m);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1_c0_5e);
    for _attempt in 0..32 {
        let mut h = CMat::zeros(k, k);
        for a in &amats {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(-1.0..1.0);
            let at = a.transpose();
            for i in 0..k {
                for j in 0..k {
                    h[(i, j)] += cr(x * (a[(i, j)] + at[(i, j)])) + c(0.0, y * (a[(i, j)] - at[(i, j)]));
                }
            }
        }
        let eig = h.symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = ev.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if ev.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-7 * scale) {
            continue;
        }
        let mut rows = Vec::with_capacity(k);
        let mut dims = Vec::with_capacity(k);
        let mut ok = true;
        for col in 0..k {
            let v = eig.eigenvectors.column(col);
            if v[0].norm() < 1e-12 {
                ok = false;
                break;
            }
            let u: Vec<C64> = (0..k).map(|l| v[l] / sizes[l].sqrt() / v[0]).collect();
            let norm: f64 = (0..k).map(|l| sizes[l] * u[l].norm_sqr()).sum();
            let d = (g.order as f64 / norm).sqrt();
            let di = d.round();
            if (d - di).abs() > 1e-6 || di < 1.0 {
                ok = false;
                break;
            }
            let row: Vec<C64> = u.iter().map(|x| x * di).collect();
            rows.push(row);
            dims.push(di as usize);
        }
        if !ok {
            continue;
        }
        // snap to sums of roots of unity
        for (r, row) in rows.iter_mut().enumerate() {
            for (j, cl) in classes.iter().enumerate() {
                let e = g.elem_order(cl.rep);
                if let Some(s) = snap_root_sum(row[j], dims[r], e, 1e-6) {
                    row[j] = s;
                }
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| row_key(&rows[a], dims[a]).cmp(&row_key(&rows[b], dims[b])));
        let table = CharacterTable {
            classes: classes.clone(),
            class_of: class_of.clone(),
            rows: order.iter().map(|&i| rows[i].clone()).collect(),
            dims: order.iter().map(|&i| dims[i]).collect(),
            order: g.order,
        };
        let sq: usize = table.dims.iter().map(|d| d * d).sum();
        if sq != g.order || table.orthogonality_residual() > 1e-9 {
            continue;
        }
        return Ok(table);
    }
    Err(GroupError::CharacterTable("eigenvalues did not separate".into()))
}

fn row_key(row: &[C64], dim: usize) -> (u8, usize, Vec<(i64, i64)>) {
    let trivial = row.iter().all(|z| (z - cr(1.0)).norm() < 1e-9);
    let vals = row
        .iter()
        .map(|z| {
            if z.norm() < 1e-9 {
                (-1, 0)
            } else {
                let mut a = z.arg();
                if a < -1e-9 {
                    a += 2.0 * std::f64::consts::PI;
                }
                ((a.max(0.0) * 1e6).round() as i64, (z.norm() * 1e6).round() as i64)
            }
        })
        .collect();
    (if trivial { 0 } else { 1 }, dim, vals)
}

/// Nearest sum of `d` e-th roots of unity, if within tol.
pub fn snap_root_sum(z: C64, d: usize, e: usize, tol: f64) -> Option<C64> {
    // number of multisets of size d from e roots
    let mut combos: f64 = 1.0;
    for i in 0..d {
        combos *= (e + i) as f64 / (i + 1) as f64;
    }
    if combos > 2.0e5 {
        return None;
    }
    let roots: Vec<C64> = (0..e).map(|k| root_of_unity(k as i64, e)).collect();
    let mut best: Option<(f64, C64)> = None;
    let mut counts = vec![0usize; e];
    fn rec(
        pos: usize,
        left: usize,
        counts: &mut Vec<usize>,
        roots: &[C64],
        z: C64,
        best: &mut Option<(f64, C64)>,
    ) {
        if pos == roots.len() - 1 {
            counts[pos] = left;
            let s: C64 = counts.iter().zip(roots).map(|(n, r)| r * *n as f64).sum();
            let d = (s - z).norm();
            if best.map(|b| d < b.0).unwrap_or(true) {
                *best = Some((d, s));
            }
            counts[pos] = 0;
            return;
        }
        for take in 0..=left {
            counts[pos] = take;
            rec(pos + 1, left - take, counts, roots, z, best);
        }
        counts[pos] = 0;
    }
    rec(0, d, &mut counts, &roots, z, &mut best);
    best.and_then(|(dist, s)| if dist < tol { Some(crate::linalg::clean(s, 1e-13)) } else { None })
}

/// Multiplicities of the irreps of H (ordered by H's own table) in the
/// restriction of a class function of G.
pub fn restriction_multiplicities(
    g: &FiniteGroup,
    chi_g: &dyn Fn(usize) -> C64,
    h: &Subgroup,
) -> Result<Vec<usize>, GroupError> {
    g.check_subgroup(h)?;
    let hg = g.subgroup_as_group(h);
    let th = character_table(&hg)?;
    let mut out = Vec::with_capacity(th.num_irreps());
    for s in 0..th.num_irreps() {
        let mut acc = C64::new(0.0, 0.0);
        for (i, &x) in h.elements.iter().enumerate() {
            acc += chi_g(x) * th.chi(s, i).conj();
        }
        acc /= h.order() as f64;
        let m = acc.re.round();
        if (acc - cr(m)).norm() > 1e-6 || m < 0.0 {
            return Err(GroupError::CharacterTable(format!("non-integral multiplicity {}", acc)));
        }
        out.push(m as usize);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct MatrixIrrep {
    pub index: usize,
    pub dim: usize,
    pub matrices: Vec<CMat>,
}

impl MatrixIrrep {
    pub fn homomorphism_residual(&self, g: &FiniteGroup) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..g.order {
            for b in 0..g.order {
                let lhs = &self.matrices[a] * &self.matrices[b];
                worst = worst.max(crate::linalg::max_diff(&lhs, &self.matrices[g.mul(a, b)]));
            }
        }
        worst
    }
}

fn catalog_candidates(g: &FiniteGroup, fam: &Family) -> Option<Vec<Vec<CMat>>> {
    match fam {
        Family::Cyclic(n) => Some(
            (0..*n)
                .map(|k| (0..*n).map(|j| CMat::from_element(1, 1, root_of_unity((k * j) as i64, *n))).collect())
                .collect(),
        ),
        Family::Dihedral(n) | Family::Symmetric(n) if matches!(fam, Family::Dihedral(_)) || *n == 3 => {
            let n = *n;
            let mut out = Vec::new();
            let one_dim = |fr: f64, fs: f64| -> Vec<CMat> {
                (0..2 * n)
                    .map(|x| {
                        let (k, j) = (x % n, x / n);
                        CMat::from_element(1, 1, cr(fr.powi(k as i32) * fs.powi(j as i32)))
                    })
                    .collect()
            };
            out.push(one_dim(1.0, 1.0));
            out.push(one_dim(1.0, -1.0));
            if n % 2 == 0 {
                out.push(one_dim(-1.0, 1.0));
                out.push(one_dim(-1.0, -1.0));
            }
            for m in 1..=((n - 1) / 2) {
                let t = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
                let mats = (0..2 * n)
                    .map(|x| {
                        let (k, j) = (x % n, x / n);
                        let a = t * k as f64;
                        let rot = CMat::from_row_slice(2, 2, &[cr(a.cos()), cr(-a.sin()), cr(a.sin()), cr(a.cos())]);
                        let refl = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
                        if j == 0 {
                            rot
                        } else {
                            rot * refl
                        }
                    })
                    .collect();
                out.push(mats);
            }
            let _ = g;
            Some(out)
        }
        Family::Product(a, b, m) => {
            let order = g.order;
            let n = order / m;
            let ga = placeholder_group(a, n)?;
            let gb = placeholder_group(b, *m)?;
            let ca = catalog_candidates(&ga, a)?;
            let cb = catalog_candidates(&gb, b)?;
            let mut out = Vec::new();
            for x in &ca {
                for y in &cb {
                    out.push(
                        (0..order)
                            .map(|e| crate::linalg::kron(&x[e / m], &y[e % m]))
                            .collect(),
                    );
                }
            }
            Some(out)
        }
        _ => None,
    }
}

fn placeholder_group(fam: &Family, order: usize) -> Option<FiniteGroup> {
    match fam {
        Family::Cyclic(n) => Some(cyclic(*n)),
        Family::Dihedral(n) => Some(dihedral(*n)),
        Family::Symmetric(n) => Some(symmetric(*n)),
        Family::Product(a, b, m) => {
            let ga = placeholder_group(a, order / m)?;
            let gb = placeholder_group(b, *m)?;
            Some(direct_product(&ga, &gb))
        }
        Family::Table => None,
    }
}

/// Irreps from the left regular representation: eigenspaces of a random
/// element of the commutant are irreducible.
fn numeric_candidates(g: &FiniteGroup, table: &CharacterTable) -> Result<Vec<Vec<CMat>>, GroupError> {
    let n = g.order;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1227);
    for _attempt in 0..16 {
        let mut x = CMat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let z = c(rng.gen_range(-1.0..1.0), if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) });
                x[(i, j)] = z;
                x[(j, i)] = z.conj();
            }
        }
        // H = sum_g L(g) X L(g)^T with L(g) e_y = e_{gy}
        let mut h = CMat::zeros(n, n);
        for gg in 0..n {
            for i in 0..n {
                for j in 0..n {
                    h[(g.mul(gg, i), g.mul(gg, j))] += x[(i, j)];
                }
            }
        }
        let eig = h.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).unwrap());
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for &i in &idx {
            match clusters.last_mut() {
                Some(cl) if (eig.eigenvalues[i] - eig.eigenvalues[*cl.last().unwrap()]).abs() < 1e-8 => cl.push(i),
                _ => clusters.push(vec![i]),
            }
        }
        let mut found: Vec<Option<Vec<CMat>>> = vec![None; table.num_irreps()];
        let mut bad = false;
        for cl in &clusters {
            let u = CMat::from_columns(&cl.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
            let d = cl.len();
            let mats: Vec<CMat> = (0..n)
                .map(|gg| {
                    let mut lu = CMat::zeros(n, d);
                    for i in 0..n {
                        for k in 0..d {
                            lu[(g.mul(gg, i), k)] = u[(i, k)];
                        }
                    }
                    u.adjoint() * lu
                })
                .collect();
            let which = (0..table.num_irreps()).find(|&r| {
                table.dims[r] == d && (0..n).all(|gg| (mats[gg].trace() - table.chi(r, gg)).norm() < 1e-7)
            });
            match which {
                Some(r) => {
                    if found[r].is_none() {
                        found[r] = Some(mats);
                    }
                }
                None => {
                    bad = true;
                    break;
                }
            }
        }
        if !bad && found.iter().all(|f| f.is_some()) {
            return Ok(found.into_iter().map(|f| f.unwrap()).collect());
        }
    }
    Err(GroupError::IrrepsUnavailable("numeric decomposition did not separate".into()))
}

/// Unitary matrix irreps ordered like the character table rows.
pub fn matrix_irreps(g: &FiniteGroup) -> Result<Vec<MatrixIrrep>, GroupError> {
    let table = character_table(g)?;
    let candidates = match catalog_candidates(g, &g.family) {
        Some(c) => c,
        None => numeric_candidates(g, &table)?,
    };
    let mut out = Vec::with_capacity(table.num_irreps());
    for r in 0..table.num_irreps() {
        let m = candidates
            .iter()
            .find(|mats| {
                mats[0].nrows() == table.dims[r]
                    && (0..g.order).all(|x| (mats[x].trace() - table.chi(r, x)).norm() < 1e-7)
            })
            .ok_or_else(|| GroupError::IrrepsUnavailable(format!("no catalog irrep for row {}", r)))?;
        out.push(MatrixIrrep { index: r, dim: table.dims[r], matrices: m.clone() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s3_presentation() {
        let g = symmetric(3);
        let r = g.element_by_name("r").unwrap();
        let s = g.element_by_name("s").unwrap();
        assert_eq!(g.elem_order(r), 3);
        assert_eq!(g.elem_order(s), 2);
        let srsr = g.mul(g.mul(s, r), g.mul(s, r));
        assert_eq!(srsr, 0);
    }

    #[test]
    fn parse_names() {
        assert_eq!(GroupSpec::parse("s3xs3").unwrap(), GroupSpec::Product {
            left: Box::new(GroupSpec::Symmetric { n: 3 }),
            right: Box::new(GroupSpec::Symmetric { n: 3 }),
        });
        assert!(GroupSpec::parse("q8").is_err());
    }

    #[test]
    fn snap_basic() {
        let w = root_of_unity(1, 3);
        let s = snap_root_sum(w + w * w + C64::new(1e-8, 0.0), 2, 3, 1e-6).unwrap();
        assert!((s - cr(-1.0)).norm() < 1e-14);
    }
}
