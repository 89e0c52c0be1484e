//! Boundary excitations, bulk-to-boundary condensation, Lagrangian labels
//! of the subgroup boundaries, and boundary defect types.

use thiserror::Error;

use crate::group_core::{character_table, double_cosets, CharacterTable, DoubleCoset, FiniteGroup, GroupError, Subgroup};
use crate::linalg::{cr, C64};
use crate::qdouble::{AnyonSystem, QdError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Qd(#[from] QdError),
    #[error("defect chain does not close: {0}")]
    OpenChain(String),
    #[error("non-integral multiplicity {0}")]
    NonIntegral(String),
}

/// A simple defect between a K1 boundary and a K2 boundary: a double coset
/// T in K1\G/K2 and an irrep R of the stabilizer K1 cap r_T K2 r_T^{-1}.
/// With K1 = K2 these are the boundary excitations.
#[derive(Clone, Debug)]
pub struct DefectType {
    pub coset: DoubleCoset,
    pub irrep: usize,
    pub fpdim: f64,
    pub label: String,
    stab_table: CharacterTable,
}

pub type BoundaryExcitation = DefectType;

impl DefectType {
    pub fn irrep_dim(&self) -> usize {
        self.stab_table.dims[self.irrep]
    }

    /// character of R at an element of the stabilizer (parent index)
    pub fn chi(&self, x: usize) -> C64 {
        let pos = self.coset.stabilizer.index_of(x).expect("not in stabilizer");
        self.stab_table.chi(self.irrep, pos)
    }

    pub fn is_vacuum(&self) -> bool {
        self.coset.rep == 0 && self.irrep == 0
    }
}

pub fn defect_types(g: &FiniteGroup, k1: &Subgroup, k2: &Subgroup) -> Result<Vec<DefectType>, BoundaryError> {
    let dcs = double_cosets(g, k1, k2)?;
    let mut out = Vec::new();
    for dc in dcs {
        let sg = g.subgroup_as_group(&dc.stabilizer);
        let table = character_table(&sg)?;
        for r in 0..table.num_irreps() {
            let fpdim = ((k1.order() * k2.order()) as f64).sqrt() * table.dims[r] as f64 / dc.stabilizer.order() as f64;
            let label = if table.num_irreps() == 1 {
                g.names[dc.rep].clone()
            } else {
                format!("{}:{}", g.names[dc.rep], r)
            };
            out.push(DefectType { coset: dc.clone(), irrep: r, fpdim, label, stab_table: table.clone() });
        }
    }
    Ok(out)
}

pub fn boundary_excitations(g: &FiniteGroup, k: &Subgroup) -> Result<Vec<BoundaryExcitation>, BoundaryError> {
    let mut v = defect_types(g, k, k)?;
    for x in v.iter_mut() {
        // |K| dim R / |K^r|, same number as the defect formula with K1 = K2
        x.fpdim = (k.order() * x.irrep_dim()) as f64 / x.coset.stabilizer.order() as f64;
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    BulkToBoundary,
    BoundaryToBulk,
}

#[derive(Clone, Debug)]
pub struct CondensationMap {
    pub direction: Direction,
    /// coefficients[anyon][excitation] (bulk to boundary); transposed for
    /// the other direction
    pub coefficients: Vec<Vec<usize>>,
}

impl CondensationMap {
    pub fn transpose(&self) -> CondensationMap {
        let rows = self.coefficients.len();
        let cols = if rows == 0 { 0 } else { self.coefficients[0].len() };
        let coefficients = (0..cols).map(|j| (0..rows).map(|i| self.coefficients[i][j]).collect()).collect();
        CondensationMap {
            direction: match self.direction {
                Direction::BulkToBoundary => Direction::BoundaryToBulk,
                Direction::BoundaryToBulk => Direction::BulkToBoundary,
            },
            coefficients,
        }
    }
}

/// Multiplicity of boundary excitation x in the restriction of bulk anyon a
/// to the boundary algebra:
/// n = 1/|K^r| sum_{k in K^r} sum_{g in rK cap C, kg = gk} chi_pi(p_g^-1 k p_g) conj chi_R(k)
pub fn condensation_coefficient(sys: &AnyonSystem, k: &Subgroup, a: usize, x: &BoundaryExcitation) -> Result<usize, BoundaryError> {
    let g = &sys.group;
    let cl = &sys.classes[sys.anyons[a].class];
    let r = x.coset.rep;
    let stab = &x.coset.stabilizer;
    let mut acc = C64::new(0.0, 0.0);
    for &kk in &k.elements {
        let gg = g.mul(r, kk);
        let pos = match cl.position(gg) {
            Some(p) => p,
            None => continue,
        };
        let p = cl.transversal[pos];
        for &s in &stab.elements {
            if g.mul(s, gg) != g.mul(gg, s) {
                continue;
            }
            let z = g.mul(g.mul(g.inv(p), s), p);
            acc += sys.centralizer_chi(a, z) * x.chi(s).conj();
        }
    }
    acc /= stab.order() as f64;
    let m = acc.re.round();
    if (acc - cr(m)).norm() > 1e-6 || m < 0.0 {
        return Err(BoundaryError::NonIntegral(format!("{}", acc)));
    }
    Ok(m as usize)
}

pub fn condensation_map(sys: &AnyonSystem, k: &Subgroup) -> Result<(Vec<BoundaryExcitation>, CondensationMap), BoundaryError> {
    let exc = boundary_excitations(&sys.group, k)?;
    let mut coefficients = vec![vec![0usize; exc.len()]; sys.len()];
    for a in 0..sys.len() {
        for (j, x) in exc.iter().enumerate() {
            coefficients[a][j] = condensation_coefficient(sys, k, a, x)?;
        }
    }
    Ok((exc, CondensationMap { direction: Direction::BulkToBoundary, coefficients }))
}

/// (excitation index, multiplicity) pairs
pub fn condense(sys: &AnyonSystem, k: &Subgroup, a: usize) -> Result<Vec<(usize, usize)>, BoundaryError> {
    let (_, m) = condensation_map(sys, k)?;
    Ok(m.coefficients[a].iter().enumerate().filter(|(_, n)| **n > 0).map(|(j, n)| (j, *n)).collect())
}

/// (anyon index, multiplicity) pairs
pub fn uncondense(sys: &AnyonSystem, k: &Subgroup, x: usize) -> Result<Vec<(usize, usize)>, BoundaryError> {
    let (_, m) = condensation_map(sys, k)?;
    Ok((0..sys.len()).filter(|&a| m.coefficients[a][x] > 0).map(|a| (a, m.coefficients[a][x])).collect())
}

/// multiplicities n_a of a condensable algebra object, indexed by anyon
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LagrangianVector {
    pub multiplicities: Vec<usize>,
}

impl LagrangianVector {
    pub fn display(&self, labels: &[String]) -> String {
        let mut parts = Vec::new();
        for (i, &n) in self.multiplicities.iter().enumerate() {
            match n {
                0 => {}
                1 => parts.push(labels[i].clone()),
                _ => parts.push(format!("{}{}", n, labels[i])),
            }
        }
        parts.join("+")
    }

    /// parse "A+C+D" or "1+e" or "A+B+2C" against a label list
    pub fn parse(s: &str, labels: &[String]) -> Option<LagrangianVector> {
        let mut m = vec![0usize; labels.len()];
        for part in s.split('+') {
            let p = part.trim();
            if p.is_empty() {
                return None;
            }
            if let Some(i) = labels.iter().position(|l| l == p) {
                m[i] += 1;
                continue;
            }
            let digits: String = p.chars().take_while(|c| c.is_ascii_digit()).collect();
            if digits.is_empty() {
                return None;
            }
            let rest = &p[digits.len()..];
            let i = labels.iter().position(|l| l == rest)?;
            m[i] += digits.parse::<usize>().ok()?;
        }
        Some(LagrangianVector { multiplicities: m })
    }

    pub fn dim(&self, dims: &[f64]) -> f64 {
        self.multiplicities.iter().zip(dims).map(|(n, d)| *n as f64 * d).sum()
    }
}

/// Bulk anyons condensing to the boundary vacuum, with multiplicity.
pub fn boundary_label(sys: &AnyonSystem, k: &Subgroup) -> Result<LagrangianVector, BoundaryError> {
    let (exc, m) = condensation_map(sys, k)?;
    let vac = exc.iter().position(|x| x.is_vacuum()).unwrap();
    Ok(LagrangianVector { multiplicities: (0..sys.len()).map(|a| m.coefficients[a][vac]).collect() })
}

/// Dimension of Hom(1, X_1 (x) ... (x) X_n) for a closed chain of defects,
/// X_i between K_i and K_{i+1}. Computed as the dimension of invariants of
/// K_1 x ... x K_n acting on the sum over g_1...g_n = 1 of the graded
/// pieces, by averaging the character.
pub fn defect_fusion_degeneracy(g: &FiniteGroup, chain: &[(Subgroup, DefectType)]) -> Result<usize, BoundaryError> {
    let n = chain.len();
    if n == 0 {
        return Err(BoundaryError::OpenChain("empty chain".into()));
    }
    for i in 0..n {
        let (ki, x) = &chain[i];
        let next = &chain[(i + 1) % n].0;
        if &x.coset.left != ki {
            return Err(BoundaryError::OpenChain(format!("defect {} does not start on subgroup {}", i, i)));
        }
        if &x.coset.right != next {
            return Err(BoundaryError::OpenChain(format!("defect {} does not end on subgroup {}", i, (i + 1) % n)));
        }
    }
    // decompose every g in T_i as a r b; store a for each g
    let mut left_factor: Vec<Vec<Option<usize>>> = Vec::with_capacity(n);
    for (i, (ki, x)) in chain.iter().enumerate() {
        let next = &chain[(i + 1) % n].0;
        let mut lf = vec![None; g.order];
        for &a in &ki.elements {
            for &b in &next.elements {
                let y = g.mul(g.mul(a, x.coset.rep), b);
                if lf[y].is_none() {
                    lf[y] = Some(a);
                }
            }
        }
        left_factor.push(lf);
    }
    let sizes: Vec<usize> = chain.iter().map(|(k, _)| k.order()).collect();
    let total: usize = sizes.iter().product();
    let mut acc = C64::new(0.0, 0.0);
    let mut ks = vec![0usize; n];
    for idx in 0..total {
        let mut rem = idx;
        for i in 0..n {
            ks[i] = chain[i].0.elements[rem % sizes[i]];
            rem /= sizes[i];
        }
        // fixed elements of each T_i under g -> k_i g k_{i+1}^{-1}, with traces
        let mut fixed: Vec<Vec<(usize, C64)>> = Vec::with_capacity(n);
        for i in 0..n {
            let kn = g.inv(ks[(i + 1) % n]);
            let x = &chain[i].1;
            let mut v = Vec::new();
            for &y in &x.coset.elements {
                if g.mul(g.mul(ks[i], y), kn) == y {
                    let a = left_factor[i][y].unwrap();
                    let s = g.mul(g.mul(g.inv(a), ks[i]), a);
                    v.push((y, x.chi(s)));
                }
            }
            fixed.push(v);
        }
        acc += sum_closed(g, &fixed, 0, 0, cr(1.0));
    }
    acc /= total as f64;
    let m = acc.re.round();
    if (acc - cr(m)).norm() > 1e-6 || m < 0.0 {
        return Err(BoundaryError::NonIntegral(format!("{}", acc)));
    }
    Ok(m as usize)
}

fn sum_closed(g: &FiniteGroup, fixed: &[Vec<(usize, C64)>], i: usize, prod: usize, w: C64) -> C64 {
    if i == fixed.len() {
        return if prod == 0 { w } else { C64::new(0.0, 0.0) };
    }
    if i == fixed.len() - 1 {
        let need = g.inv(prod);
        return fixed[i].iter().filter(|(y, _)| *y == need).map(|(_, t)| w * t).sum();
    }
    let mut acc = C64::new(0.0, 0.0);
    for (y, t) in &fixed[i] {
        acc += sum_closed(g, fixed, i + 1, g.mul(prod, *y), w * t);
    }
    acc
}
