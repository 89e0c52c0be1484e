//! Ground-state bases of spheres with gapped-boundary holes and the logical
//! operators acting on them: Wilson tunnels and loops, pure braids of
//! holes, topological charge projections and composite measurements.
//!
//! A basis state is a left-associated fusion tree ((x1 x2)_{y1} x3)_{y2} ...
//! with x_i condensing on hole i and the total charge trivial. For two
//! holes the channel is s = x2 (so x1 = sbar).

use thiserror::Error;

use crate::boundary_defect::LagrangianVector;
use crate::linalg::{cr, hermiticity_residual, identity, CMat, C64};
use crate::mtc_data::{is_lagrangian, MSymbolSet, MtcData, MtcError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WilsonError {
    #[error(transparent)]
    Mtc(#[from] MtcError),
    #[error("{0} is not a Lagrangian algebra of this category")]
    NotLagrangian(String),
    #[error("operation needs a {0}-hole basis")]
    Holes(usize),
    #[error("unknown anyon label '{0}'")]
    BadLabel(String),
    #[error("hole index {0} out of range")]
    BadHole(usize),
    #[error("M symbols missing for hole {0}")]
    MissingM(usize),
    #[error("requires modular input category")]
    NotFactorizable,
    #[error("not reversal-proportional")]
    NotReversalProportional,
    #[error("operator {0} is not Hermitian")]
    NotHermitian(usize),
    #[error("empty operator list")]
    Empty,
    #[error("dimension mismatch")]
    Dimension,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisState {
    /// x_i, the charge condensing on hole i
    pub charges: Vec<usize>,
    /// condensation channel index on each hole (< n_{x_i})
    pub mult: Vec<usize>,
    /// y_1 .. y_{n-2}
    pub inner: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GroundBasis {
    pub boundaries: Vec<LagrangianVector>,
    pub states: Vec<BasisState>,
    pub labels: Vec<String>,
}

impl GroundBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn holes(&self) -> usize {
        self.boundaries.len()
    }

    pub fn index_of(&self, st: &BasisState) -> Option<usize> {
        self.states.iter().position(|s| s == st)
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub name: String,
    pub entries: CMat,
    pub labels: Vec<String>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

fn name_of(mtc: &MtcData, a: usize) -> String {
    mtc.labels[a].clone()
}

pub fn ground_state_basis(mtc: &MtcData, boundaries: &[LagrangianVector]) -> Result<GroundBasis, WilsonError> {
    if boundaries.len() < 2 {
        return Err(WilsonError::Holes(2));
    }
    for b in boundaries {
        if !is_lagrangian(mtc, b) {
            return Err(WilsonError::NotLagrangian(b.display(&mtc.labels)));
        }
    }
    let n = mtc.len();
    let h = boundaries.len();
    let supports: Vec<Vec<usize>> = boundaries.iter().map(|b| (0..n).filter(|&a| b.multiplicities[a] > 0).collect()).collect();
    // enumerate partial trees: (charges, running total y)
    let mut partial: Vec<(Vec<usize>, Vec<usize>, usize)> = supports[0].iter().map(|&x| (vec![x], vec![], x)).collect();
    for (i, sup) in supports.iter().enumerate().skip(1) {
        let mut next = Vec::new();
        for (xs, ys, tot) in &partial {
            for &x in sup {
                if i == h - 1 {
                    if mtc.n(*tot, x, 0) > 0 {
                        let mut xs2 = xs.clone();
                        xs2.push(x);
                        next.push((xs2, ys.clone(), 0));
                    }
                } else {
                    for y in mtc.products(*tot, x) {
                        let mut xs2 = xs.clone();
                        xs2.push(x);
                        let mut ys2 = ys.clone();
                        if i >= 1 {
                            ys2.push(y);
                        }
                        next.push((xs2, ys2, y));
                    }
                }
            }
        }
        partial = next;
    }
    let mut states = Vec::new();
    for (xs, ys, _) in partial {
        // expand condensation channel indices
        let mut mults: Vec<Vec<usize>> = vec![vec![]];
        for (i, &x) in xs.iter().enumerate() {
            let k = boundaries[i].multiplicities[x];
            mults = mults.into_iter().flat_map(|m| (0..k).map(move |j| [m.clone(), vec![j]].concat())).collect();
        }
        for m in mults {
            states.push(BasisState { charges: xs.clone(), mult: m, inner: ys.clone() });
        }
    }
    let key = |s: &BasisState| {
        let mut k: Vec<usize> = s.charges[1..].to_vec();
        k.push(s.charges[0]);
        k.extend(&s.inner);
        k.extend(&s.mult);
        k
    };
    states.sort_by_key(|s| key(s));
    let labels = states
        .iter()
        .map(|s| {
            let multi = s.mult.iter().any(|&m| m > 0) || boundaries.iter().any(|b| b.multiplicities.iter().any(|&k| k > 1));
            let base = if h == 2 {
                name_of(mtc, s.charges[1])
            } else {
                let xs: Vec<String> = s.charges.iter().map(|&x| name_of(mtc, x)).collect();
                let ys: Vec<String> = s.inner.iter().map(|&y| name_of(mtc, y)).collect();
                format!("({};{})", xs.join(","), ys.join(","))
            };
            if multi {
                format!("{}[{}]", base, s.mult.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","))
            } else {
                base
            }
        })
        .collect();
    Ok(GroundBasis { boundaries: boundaries.to_vec(), states, labels })
}

/// dim Hom(1, A_1 (x) ... (x) A_n) computed from N alone
pub fn hom_dimension(mtc: &MtcData, boundaries: &[LagrangianVector]) -> usize {
    let n = mtc.len();
    let mut v = vec![0usize; n];
    v[0] = 1;
    for b in boundaries {
        let mut next = vec![0usize; n];
        for t in 0..n {
            if v[t] == 0 {
                continue;
            }
            for x in 0..n {
                if b.multiplicities[x] == 0 {
                    continue;
                }
                for y in 0..n {
                    next[y] += v[t] * b.multiplicities[x] * mtc.n(t, x, y);
                }
            }
        }
        v = next;
    }
    v[0]
}

fn label_index(mtc: &MtcData, a: &str) -> Result<usize, WilsonError> {
    mtc.index_of(a).ok_or_else(|| WilsonError::BadLabel(a.to_string()))
}

fn two_hole(basis: &GroundBasis) -> Result<(), WilsonError> {
    if basis.holes() != 2 {
        return Err(WilsonError::Holes(2));
    }
    Ok(())
}

/// W_a(gamma): tunnel a from hole 1 to hole 2. Entry (c, b) =
/// M^{ab}_c(A_1) conj(M^{ab}_c(A_2)) sqrt(d_a d_b / d_c).
pub fn tunnel_matrix(mtc: &MtcData, m1: &MSymbolSet, m2: &MSymbolSet, basis: &GroundBasis, a: &str) -> Result<OperatorMatrix, WilsonError> {
    two_hole(basis)?;
    let ai = label_index(mtc, a)?;
    if m1.boundary != basis.boundaries[0] {
        return Err(WilsonError::MissingM(1));
    }
    if m2.boundary != basis.boundaries[1] {
        return Err(WilsonError::MissingM(2));
    }
    let d = basis.dim();
    let mut w = CMat::zeros(d, d);
    for (j, sb) in basis.states.iter().enumerate() {
        let b = sb.charges[1];
        for (i, sc) in basis.states.iter().enumerate() {
            let cc = sc.charges[1];
            if mtc.n(ai, b, cc) == 0 || sc.mult != sb.mult {
                continue;
            }
            let v = m1.get(ai, b, cc) * m2.get(ai, b, cc).conj() * (mtc.dims[ai] * mtc.dims[b] / mtc.dims[cc]).sqrt();
            w[(i, j)] = crate::linalg::clean(v, 1e-14);
        }
    }
    Ok(OperatorMatrix { name: format!("W_{}(gamma)", a), entries: w, labels: basis.labels.clone() })
}

/// W_a(alpha_i): diagonal S_{a s}/S_{0 s} with s the charge in hole i.
pub fn loop_matrix(mtc: &MtcData, basis: &GroundBasis, hole: usize, a: &str) -> Result<OperatorMatrix, WilsonError> {
    two_hole(basis)?;
    if hole == 0 || hole > 2 {
        return Err(WilsonError::BadHole(hole));
    }
    let ai = label_index(mtc, a)?;
    let d = basis.dim();
    let mut w = CMat::zeros(d, d);
    for (i, s) in basis.states.iter().enumerate() {
        let x = s.charges[hole - 1];
        w[(i, i)] = crate::linalg::clean(mtc.s[(ai, x)] / mtc.s[(0, x)], 1e-14);
    }
    Ok(OperatorMatrix { name: format!("W_{}(alpha_{})", a, hole), entries: w, labels: basis.labels.clone() })
}

/// Elementary exchange of holes i, i+1 (1-based i in 1..=3) on the fusion
/// space of a fixed charge tuple. Clockwise orientation uses inverse
/// R symbols. Returns the permuted tuple and the matrix between the
/// inner-channel spaces (columns: source y, rows: target y).
fn exchange(mtc: &MtcData, i: usize, x: &[usize; 4], clockwise: bool) -> ([usize; 4], Vec<usize>, Vec<usize>, CMat) {
    let r = |a: usize, b: usize, c: usize| -> C64 {
        if clockwise {
            mtc.rsym(b, a, c).inv()
        } else {
            mtc.rsym(a, b, c)
        }
    };
    let mut xp = *x;
    xp.swap(i - 1, i);
    let src = inner_space(mtc, x);
    let dst = inner_space(mtc, &xp);
    let mut m = CMat::zeros(dst.len(), src.len());
    let d4 = mtc.dual[x[3]];
    match i {
        1 => {
            for (j, &y) in src.iter().enumerate() {
                let k = dst.iter().position(|&z| z == y).expect("same channel set");
                m[(k, j)] = r(x[0], x[1], y);
            }
        }
        2 => {
            // M[y'][y] = sum_w F^{x1x2x3}_d[y][w] R_w conj F^{x1x3x2}_d[y'][w]
            for (j, &y) in src.iter().enumerate() {
                for (k, &yp) in dst.iter().enumerate() {
                    let mut acc = cr(0.0);
                    for w in mtc.products(x[1], x[2]) {
                        if mtc.n(x[0], w, d4) == 0 {
                            continue;
                        }
                        acc += mtc.fsym(x[0], x[1], x[2], d4, y, w) * r(x[1], x[2], w) * mtc.fsym(x[0], x[2], x[1], d4, yp, w).conj();
                    }
                    m[(k, j)] = acc;
                }
            }
        }
        3 => {
            let d3 = mtc.dual[x[2]];
            for (j, &y) in src.iter().enumerate() {
                let k = dst.iter().position(|&z| z == y).expect("same channel set");
                let yb = mtc.dual[y];
                let before = mtc.fsym(y, x[2], x[3], 0, d4, yb);
                let after = mtc.fsym(y, x[3], x[2], 0, d3, yb);
                m[(k, j)] = before * r(x[2], x[3], yb) / after;
            }
        }
        _ => panic!("exchange index must be 1, 2 or 3"),
    }
    (xp, src, dst, m)
}

fn inner_space(mtc: &MtcData, x: &[usize; 4]) -> Vec<usize> {
    let d4 = mtc.dual[x[3]];
    mtc.products(x[0], x[1]).into_iter().filter(|&y| mtc.n(y, x[2], d4) > 0).collect()
}

/// A braid word in time order: (generator 1..=3, inverse?).
pub type BraidWord = Vec<(usize, bool)>;

fn word_block(mtc: &MtcData, word: &[(usize, bool)], x: &[usize; 4]) -> ([usize; 4], CMat) {
    let mut cur = *x;
    let mut m = identity(inner_space(mtc, x).len());
    for &(g, inv) in word {
        // clockwise exchanges are the positive generators; inverses run counterclockwise
        let (next, _, _, e) = exchange(mtc, g, &cur, !inv);
        m = e * m;
        cur = next;
    }
    (cur, m)
}

/// Operator of a pure braid word on a four-hole basis.
pub fn braid_word_matrix(mtc: &MtcData, basis: &GroundBasis, word: &[(usize, bool)], name: &str) -> Result<OperatorMatrix, WilsonError> {
    if basis.holes() != 4 {
        return Err(WilsonError::Holes(4));
    }
    let d = basis.dim();
    let mut out = CMat::zeros(d, d);
    for (j, s) in basis.states.iter().enumerate() {
        let x = [s.charges[0], s.charges[1], s.charges[2], s.charges[3]];
        let (xf, blk) = word_block(mtc, word, &x);
        if xf != x {
            return Err(WilsonError::Dimension);
        }
        let ys = inner_space(mtc, &x);
        let col = ys.iter().position(|&y| y == s.inner[0]).expect("state channel admissible");
        for (row, &yp) in ys.iter().enumerate() {
            let mut inner = s.inner.clone();
            inner[0] = yp;
            let target = BasisState { charges: s.charges.clone(), mult: s.mult.clone(), inner };
            if let Some(i) = basis.index_of(&target) {
                out[(i, j)] = blk[(row, col)];
            }
        }
    }
    Ok(OperatorMatrix { name: name.to_string(), entries: out.map(|z| crate::linalg::clean(z, 1e-14)), labels: basis.labels.clone() })
}

/// Holes 2 and 3 taken fully around each other.
pub fn braid_sigma2_squared(mtc: &MtcData, basis: &GroundBasis) -> Result<OperatorMatrix, WilsonError> {
    braid_word_matrix(mtc, basis, &[(2, false), (2, false)], "sigma2^2")
}

/// A_12, A_13, A_14, A_23, A_24, A_34
pub fn pure_braid_words() -> Vec<(String, BraidWord)> {
    vec![
        ("A12".into(), vec![(1, false), (1, false)]),
        ("A13".into(), vec![(2, false), (1, false), (1, false), (2, true)]),
        ("A14".into(), vec![(3, false), (2, false), (1, false), (1, false), (2, true), (3, true)]),
        ("A23".into(), vec![(2, false), (2, false)]),
        ("A24".into(), vec![(3, false), (2, false), (2, false), (3, true)]),
        ("A34".into(), vec![(3, false), (3, false)]),
    ]
}

pub fn all_pure_braid_generators(mtc: &MtcData, basis: &GroundBasis) -> Result<Vec<OperatorMatrix>, WilsonError> {
    pure_braid_words().iter().map(|(n, w)| braid_word_matrix(mtc, basis, w, n)).collect()
}

/// Indices of basis states with holes (1,2) and (3,4) each fusing to
/// vacuum, ordered by (x2, x4): the control-target qudit block.
pub fn logical_subspace(basis: &GroundBasis) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..basis.dim()).filter(|&i| basis.states[i].inner.first() == Some(&0)).collect();
    idx.sort_by_key(|&i| {
        let s = &basis.states[i];
        (s.charges[1], s.charges[3], s.mult.clone())
    });
    idx
}

pub fn restrict(op: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| op[(idx[i], idx[j])])
}

pub enum ChargeTarget {
    Loop(usize),
    Arc,
}

/// For D(Z_n) with n odd, B = C (x) Cbar with C = Z_n and S^C_xy = w^{xy}/sqrt n.
fn odd_cyclic_order(mtc: &MtcData) -> Option<usize> {
    let size = mtc.len();
    let n = (size as f64).sqrt().round() as usize;
    if n * n != size || n % 2 == 0 || mtc.dims.iter().any(|&d| d != 1.0) {
        return None;
    }
    let reference = crate::mtc_data::abelian_double(n);
    if reference.labels != mtc.labels || crate::linalg::max_diff(&reference.s, &mtc.s) > 1e-9 {
        return None;
    }
    Some(n)
}

/// Labels of the single-layer factor C = Z_n: "1", "e", "e2", ...
pub fn factor_labels(n: usize) -> Vec<String> {
    (0..n).map(|k| crate::qdouble::zn_label(n, k, 0)).collect()
}

/// P^{(a)}: loop version is diagonal (channel whose C-charge is a); arc
/// version is sum_x S^C_{0a} conj(S^C_{xa}) W_{g^x}(gamma) with g the
/// generator of the hole algebra.
pub fn charge_projection(mtc: &MtcData, basis: &GroundBasis, target: ChargeTarget, a: &str) -> Result<OperatorMatrix, WilsonError> {
    two_hole(basis)?;
    let n = odd_cyclic_order(mtc).ok_or(WilsonError::NotFactorizable)?;
    let ak = factor_labels(n).iter().position(|l| l == a).ok_or_else(|| WilsonError::BadLabel(a.to_string()))?;
    let b0 = &basis.boundaries[0];
    if b0 != &basis.boundaries[1] {
        return Err(WilsonError::NotFactorizable);
    }
    // generator of the hole algebra {g^k}
    let gen = (1..mtc.len()).find(|&x| b0.multiplicities[x] > 0).ok_or(WilsonError::NotFactorizable)?;
    let power = |x: usize| -> Option<usize> {
        let mut cur = 0usize;
        for k in 0..n {
            if cur == x {
                return Some(k);
            }
            cur = mtc.products(cur, gen)[0];
        }
        None
    };
    let d = basis.dim();
    let sc = |x: usize, y: usize| crate::linalg::root_of_unity((x * y) as i64, n) / (n as f64).sqrt();
    let mut p = CMat::zeros(d, d);
    match target {
        ChargeTarget::Loop(hole) => {
            if hole == 0 || hole > 2 {
                return Err(WilsonError::BadHole(hole));
            }
            for (i, s) in basis.states.iter().enumerate() {
                let k = power(s.charges[hole - 1]).ok_or(WilsonError::NotFactorizable)?;
                if k == ak {
                    p[(i, i)] = cr(1.0);
                }
            }
        }
        ChargeTarget::Arc => {
            for (j, sb) in basis.states.iter().enumerate() {
                let kb = power(sb.charges[1]).ok_or(WilsonError::NotFactorizable)?;
                for (i, scn) in basis.states.iter().enumerate() {
                    let kc = power(scn.charges[1]).ok_or(WilsonError::NotFactorizable)?;
                    let x = (kc + n - kb) % n;
                    p[(i, j)] += sc(0, ak) * sc(x, ak).conj();
                }
            }
        }
    }
    let name = format!("P^({})", a);
    Ok(OperatorMatrix { name, entries: p.map(|z| crate::linalg::clean(z, 1e-14)), labels: basis.labels.clone() })
}

/// P = sqrt(alpha) H_1 ... H_k where H_k ... H_1 = alpha H_1 ... H_k.
pub fn measurement_operator(ops: &[OperatorMatrix]) -> Result<OperatorMatrix, WilsonError> {
    let first = ops.first().ok_or(WilsonError::Empty)?;
    let d = first.dim();
    for (i, o) in ops.iter().enumerate() {
        if o.dim() != d {
            return Err(WilsonError::Dimension);
        }
        if hermiticity_residual(&o.entries) > 1e-9 {
            return Err(WilsonError::NotHermitian(i));
        }
    }
    let mut fwd = identity(d);
    for o in ops {
        fwd *= &o.entries;
    }
    let mut rev = identity(d);
    for o in ops.iter().rev() {
        rev *= &o.entries;
    }
    let norm: f64 = fwd.iter().map(|z| z.norm_sqr()).sum();
    if norm < 1e-24 {
        return Err(WilsonError::NotReversalProportional);
    }
    let alpha: C64 = fwd.iter().zip(rev.iter()).map(|(f, r)| f.conj() * r).sum::<C64>() / norm;
    if (alpha.norm() - 1.0).abs() > 1e-9 || crate::linalg::max_diff(&rev, &(&fwd * alpha)) > 1e-9 {
        return Err(WilsonError::NotReversalProportional);
    }
    let p = fwd * alpha.sqrt();
    let name = ops.iter().map(|o| o.name.clone()).collect::<Vec<_>>().join("*");
    Ok(OperatorMatrix { name, entries: p.map(|z| crate::linalg::clean(z, 1e-14)), labels: first.labels.clone() })
}
