//! Exact state-vector simulation of the quantum double Hamiltonian with
//! gapped-boundary holes on a small planar patch.
//!
//! Geometry: width x height plaquettes. Horizontal edges point right,
//! vertical edges point up. Vertex (x, y) has index y (W+1) + x; edge
//! h(x, y) joins (x, y) to (x+1, y), edge v(x, y) joins (x, y) to (x, y+1).
//! A hole is a rectangle of plaquettes with a subgroup K; its plaquettes,
//! interior edges and every vertex of its closure belong to it. The outer
//! boundary is treated as a hole surrounding the patch.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_core::{build_group, FiniteGroup, GroupError, GroupSpec, Subgroup};
use crate::linalg::{cr, C64};
use crate::qdouble::{AnyonSystem, QdError};

/// default cap on the number of amplitudes
pub const STATE_CAP: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("state space of {0} amplitudes exceeds the cap of {1}")]
    TooLarge(u128, usize),
    #[error("holes {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("hole {0} lies outside the lattice or is empty")]
    BadHole(usize),
    #[error("malformed ribbon: {0}")]
    BadRibbon(String),
    #[error("bad lattice spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Anyons(#[from] QdError),
    #[error("unknown anyon '{0}'")]
    BadAnyon(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorderRule {
    /// border edges of a hole carry T^K (value restricted to K)
    #[default]
    Restricted,
    /// border edges carry no hole term at all
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub subgroup: String,
}

/// a defect region between K1 (left) and K2 (right) carries K1 cap K2
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSpec {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub left: String,
    pub right: String,
}

fn default_outer() -> String {
    "1".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub width: usize,
    pub height: usize,
    pub group: String,
    /// subgroup of the outer boundary; "1" (rough) by default
    #[serde(default = "default_outer")]
    pub outer: String,
    #[serde(default)]
    pub holes: Vec<HoleSpec>,
    #[serde(default)]
    pub defects: Vec<DefectSpec>,
    #[serde(default)]
    pub border: BorderRule,
    /// store only edge values allowed by T^K terms
    #[serde(default)]
    pub compact: bool,
}

impl LatticeSpec {
    pub fn parse(text: &str) -> Result<LatticeSpec, LatticeError> {
        serde_json::from_str(text).map_err(|e| LatticeError::Spec(e.to_string()))
    }

    /// named examples used by the CLI and the tests
    pub fn preset(name: &str) -> Option<LatticeSpec> {
        let hole = |x0, y0, x1, y1, k: &str| HoleSpec { x0, y0, x1, y1, subgroup: k.into() };
        let base = |w, h, g: &str, outer: &str, holes: Vec<HoleSpec>| LatticeSpec {
            width: w,
            height: h,
            group: g.into(),
            outer: outer.into(),
            holes,
            defects: vec![],
            border: BorderRule::Restricted,
            compact: false,
        };
        Some(match name {
            // rough holes at both ends of a strip with smooth top and bottom
            "z2-two-holes" => base(5, 1, "z2", "full", vec![hole(0, 0, 1, 1, "1"), hole(4, 0, 5, 1, "1")]),
            "z3-two-holes" => base(3, 1, "z3", "full", vec![hole(0, 0, 1, 1, "1"), hole(2, 0, 3, 1, "1")]),
            "z2-bulk" => base(2, 2, "z2", "full", vec![]),
            "z2-rough-patch" => base(2, 2, "z2", "1", vec![]),
            // strip that is entirely one rough hole, for flux strings
            "z2-confine" => base(5, 1, "z2", "full", vec![hole(0, 0, 5, 1, "1")]),
            "z2-strip" => base(5, 1, "z2", "full", vec![]),
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Bulk,
    Outer,
    Hole(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TermKind {
    Vertex,
    Plaquette,
    EdgeL,
    EdgeT,
}

#[derive(Clone, Debug, Serialize)]
pub struct Term {
    pub kind: TermKind,
    pub site: usize,
    pub region: Region,
    /// elements of K (G for bulk vertices, {1} for bulk plaquettes)
    pub subgroup: Vec<usize>,
}

impl Term {
    pub fn label(&self) -> String {
        let k = match self.kind {
            TermKind::Vertex => "A",
            TermKind::Plaquette => "B",
            TermKind::EdgeL => "L",
            TermKind::EdgeT => "T",
        };
        match self.region {
            Region::Bulk => format!("{}({})", k, self.site),
            Region::Outer => format!("{}^out({})", k, self.site),
            Region::Hole(h) => format!("{}^K{}({})", k, h, self.site),
        }
    }
}

pub struct Lattice {
    pub spec: LatticeSpec,
    pub group: FiniteGroup,
    pub width: usize,
    pub height: usize,
    pub num_edges: usize,
    /// allowed values per edge
    pub domain: Vec<Vec<usize>>,
    /// position of a group element in the edge's domain
    pos: Vec<Vec<Option<usize>>>,
    stride: Vec<usize>,
    pub dim: usize,
    pub terms: Vec<Term>,
    pub subgroups: Vec<Subgroup>,
    pub vertex_region: Vec<Region>,
    pub plaquette_region: Vec<Region>,
}

impl Lattice {
    pub fn vertex(&self, x: usize, y: usize) -> usize {
        y * (self.width + 1) + x
    }

    pub fn h_edge(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn v_edge(&self, x: usize, y: usize) -> usize {
        self.width * (self.height + 1) + y * (self.width + 1) + x
    }

    pub fn plaquette(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// (tail, head) vertices
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let nh = self.width * (self.height + 1);
        if e < nh {
            let (x, y) = (e % self.width, e / self.width);
            (self.vertex(x, y), self.vertex(x + 1, y))
        } else {
            let r = e - nh;
            let (x, y) = (r % (self.width + 1), r / (self.width + 1));
            (self.vertex(x, y), self.vertex(x, y + 1))
        }
    }

    /// edges at a vertex with true when the vertex is the tail
    pub fn star(&self, v: usize) -> Vec<(usize, bool)> {
        let (x, y) = (v % (self.width + 1), v / (self.width + 1));
        let mut out = Vec::new();
        if x < self.width {
            out.push((self.h_edge(x, y), true));
        }
        if x > 0 {
            out.push((self.h_edge(x - 1, y), false));
        }
        if y < self.height {
            out.push((self.v_edge(x, y), true));
        }
        if y > 0 {
            out.push((self.v_edge(x, y - 1), false));
        }
        out
    }

    /// bottom, right, top, left
    pub fn boundary(&self, p: usize) -> [usize; 4] {
        let (x, y) = (p % self.width, p / self.width);
        [self.h_edge(x, y), self.v_edge(x + 1, y), self.h_edge(x, y + 1), self.v_edge(x, y)]
    }

    pub fn support(&self, t: &Term) -> Vec<usize> {
        match t.kind {
            TermKind::Vertex => self.star(t.site).into_iter().map(|(e, _)| e).collect(),
            TermKind::Plaquette => self.boundary(t.site).to_vec(),
            _ => vec![t.site],
        }
    }

    #[inline]
    pub fn value(&self, idx: usize, e: usize) -> usize {
        self.domain[e][(idx / self.stride[e]) % self.domain[e].len()]
    }

    #[inline]
    fn with(&self, idx: usize, e: usize, val: usize) -> Option<usize> {
        let old = (idx / self.stride[e]) % self.domain[e].len();
        let new = self.pos[e][val]?;
        Some(idx - old * self.stride[e] + new * self.stride[e])
    }

    /// counterclockwise holonomy from the bottom-left corner
    pub fn holonomy(&self, idx: usize, p: usize) -> usize {
        let g = &self.group;
        let [b, r, t, l] = self.boundary(p);
        let x = g.mul(self.value(idx, b), self.value(idx, r));
        let x = g.mul(x, g.inv(self.value(idx, t)));
        g.mul(x, g.inv(self.value(idx, l)))
    }

    /// A^k(v) on a basis index
    pub fn gauge(&self, idx: usize, v: usize, k: usize) -> Option<usize> {
        let g = &self.group;
        let mut out = idx;
        for (e, tail) in self.star(v) {
            let x = self.value(idx, e);
            let nx = if tail { g.mul(k, x) } else { g.mul(x, g.inv(k)) };
            out = self.with(out, e, nx)?;
        }
        Some(out)
    }

    pub fn build(spec: &LatticeSpec) -> Result<Lattice, LatticeError> {
        Lattice::build_with_cap(spec, STATE_CAP)
    }

    pub fn build_with_cap(spec: &LatticeSpec, cap: usize) -> Result<Lattice, LatticeError> {
        let group = build_group(&GroupSpec::parse(&spec.group)?)?;
        let (w, h) = (spec.width, spec.height);
        if w == 0 || h == 0 {
            return Err(LatticeError::Spec("width and height must be positive".into()));
        }
        let nv = (w + 1) * (h + 1);
        let ne = w * (h + 1) + (w + 1) * h;
        let np = w * h;
        // holes and defect regions together
        let mut rects: Vec<(usize, usize, usize, usize, Subgroup)> = Vec::new();
        for hs in &spec.holes {
            rects.push((hs.x0, hs.y0, hs.x1, hs.y1, group.parse_subgroup(&hs.subgroup)?));
        }
        for d in &spec.defects {
            let k = group.parse_subgroup(&d.left)?.intersect(&group.parse_subgroup(&d.right)?);
            rects.push((d.x0, d.y0, d.x1, d.y1, k));
        }
        let outer = group.parse_subgroup(&spec.outer)?;
        let mut lat = Lattice {
            spec: spec.clone(),
            group: group.clone(),
            width: w,
            height: h,
            num_edges: ne,
            domain: vec![],
            pos: vec![],
            stride: vec![],
            dim: 0,
            terms: vec![],
            subgroups: rects.iter().map(|r| r.4.clone()).collect(),
            vertex_region: vec![Region::Bulk; nv],
            plaquette_region: vec![Region::Bulk; np],
        };
        let mut edge_region = vec![Region::Bulk; ne];
        // edges restricted by a T term but without L (hole borders, perimeter)
        let mut border_of: Vec<Option<Region>> = vec![None; ne];
        for x in 0..=w {
            for y in 0..=h {
                if x == 0 || y == 0 || x == w || y == h {
                    let v = lat.vertex(x, y);
                    lat.vertex_region[v] = Region::Outer;
                }
            }
        }
        for x in 0..w {
            border_of[lat.h_edge(x, 0)] = Some(Region::Outer);
            border_of[lat.h_edge(x, h)] = Some(Region::Outer);
        }
        for y in 0..h {
            border_of[lat.v_edge(0, y)] = Some(Region::Outer);
            border_of[lat.v_edge(w, y)] = Some(Region::Outer);
        }
        let mut claimed: Vec<Option<usize>> = vec![None; nv];
        for (i, &(x0, y0, x1, y1, _)) in rects.iter().enumerate() {
            if x1 <= x0 || y1 <= y0 || x1 > w || y1 > h {
                return Err(LatticeError::BadHole(i));
            }
            for x in x0..=x1 {
                for y in y0..=y1 {
                    let v = lat.vertex(x, y);
                    if let Some(j) = claimed[v] {
                        return Err(LatticeError::Overlap(j, i));
                    }
                    claimed[v] = Some(i);
                    lat.vertex_region[v] = Region::Hole(i);
                }
            }
            for x in x0..x1 {
                for y in y0..y1 {
                    let p = lat.plaquette(x, y);
                    lat.plaquette_region[p] = Region::Hole(i);
                }
            }
            for x in x0..x1 {
                for y in y0..=y1 {
                    let e = lat.h_edge(x, y);
                    if y > y0 && y < y1 {
                        edge_region[e] = Region::Hole(i);
                    } else {
                        border_of[e] = Some(Region::Hole(i));
                    }
                }
            }
            for x in x0..=x1 {
                for y in y0..y1 {
                    let e = lat.v_edge(x, y);
                    if x > x0 && x < x1 {
                        edge_region[e] = Region::Hole(i);
                    } else {
                        border_of[e] = Some(Region::Hole(i));
                    }
                }
            }
        }
        let sub_of = |r: Region| -> &Subgroup {
            match r {
                Region::Hole(i) => &rects[i].4,
                _ => &outer,
            }
        };
        let all: Vec<usize> = (0..group.order).collect();
        let mut terms = Vec::new();
        for v in 0..nv {
            let r = lat.vertex_region[v];
            let k = if r == Region::Bulk { all.clone() } else { sub_of(r).elements.clone() };
            if k.len() > 1 {
                terms.push(Term { kind: TermKind::Vertex, site: v, region: r, subgroup: k });
            }
        }
        for p in 0..np {
            let r = lat.plaquette_region[p];
            let k = if r == Region::Bulk { vec![0] } else { sub_of(r).elements.clone() };
            if k.len() < group.order {
                terms.push(Term { kind: TermKind::Plaquette, site: p, region: r, subgroup: k });
            }
        }
        let mut domain = vec![all.clone(); ne];
        for e in 0..ne {
            let (k, with_l) = match (edge_region[e], border_of[e]) {
                (Region::Hole(i), _) => (rects[i].4.elements.clone(), true),
                (_, Some(r)) if spec.border == BorderRule::Restricted => (sub_of(r).elements.clone(), false),
                _ => continue,
            };
            let r = if let Region::Hole(_) = edge_region[e] { edge_region[e] } else { border_of[e].expect("border region") };
            if with_l && k.len() > 1 {
                terms.push(Term { kind: TermKind::EdgeL, site: e, region: r, subgroup: k.clone() });
            }
            if k.len() < group.order {
                terms.push(Term { kind: TermKind::EdgeT, site: e, region: r, subgroup: k.clone() });
                if spec.compact {
                    domain[e] = k;
                }
            }
        }
        let mut dim: u128 = 1;
        for d in &domain {
            dim *= d.len() as u128;
        }
        if dim > cap as u128 {
            return Err(LatticeError::TooLarge(dim, cap));
        }
        let mut stride = vec![0; ne];
        let mut s = 1usize;
        for e in 0..ne {
            stride[e] = s;
            s *= domain[e].len();
        }
        lat.pos = domain
            .iter()
            .map(|d| {
                let mut p = vec![None; group.order];
                for (i, &x) in d.iter().enumerate() {
                    p[x] = Some(i);
                }
                p
            })
            .collect();
        lat.domain = domain;
        lat.stride = stride;
        lat.dim = dim as usize;
        lat.terms = terms;
        Ok(lat)
    }

    /// apply one projector term
    pub fn apply(&self, t: &Term, psi: &[C64]) -> Vec<C64> {
        let g = &self.group;
        let inv_k = 1.0 / t.subgroup.len() as f64;
        match t.kind {
            TermKind::Vertex => (0..self.dim)
                .into_par_iter()
                .map(|j| {
                    let mut acc = cr(0.0);
                    for &k in &t.subgroup {
                        if let Some(src) = self.gauge(j, t.site, g.inv(k)) {
                            acc += psi[src];
                        }
                    }
                    acc * inv_k
                })
                .collect(),
            TermKind::Plaquette => (0..self.dim)
                .into_par_iter()
                .map(|j| if t.subgroup.binary_search(&self.holonomy(j, t.site)).is_ok() { psi[j] } else { cr(0.0) })
                .collect(),
            TermKind::EdgeT => (0..self.dim)
                .into_par_iter()
                .map(|j| if t.subgroup.binary_search(&self.value(j, t.site)).is_ok() { psi[j] } else { cr(0.0) })
                .collect(),
            TermKind::EdgeL => (0..self.dim)
                .into_par_iter()
                .map(|j| {
                    let x = self.value(j, t.site);
                    let mut acc = cr(0.0);
                    for &k in &t.subgroup {
                        if let Some(src) = self.with(j, t.site, g.mul(g.inv(k), x)) {
                            acc += psi[src];
                        }
                    }
                    acc * inv_k
                })
                .collect(),
        }
    }

    pub fn random_state(&self, rng: &mut ChaCha8Rng) -> Vec<C64> {
        let mut v: Vec<C64> = (0..self.dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let n = norm(&v);
        v.iter_mut().for_each(|z| *z /= n);
        v
    }

    /// product of every term, i.e. the ground-space projector when the
    /// terms commute
    pub fn project_ground(&self, psi: &[C64]) -> Vec<C64> {
        let mut v = psi.to_vec();
        for t in &self.terms {
            v = self.apply(t, &v);
        }
        v
    }

    pub fn expectation(&self, t: &Term, psi: &[C64]) -> f64 {
        inner(psi, &self.apply(t, psi)).re
    }

    /// terms with expectation below 1 - tol
    pub fn violated(&self, psi: &[C64], tol: f64) -> Vec<usize> {
        let n2 = inner(psi, psi).re;
        (0..self.terms.len()).filter(|&i| self.expectation(&self.terms[i], psi) < n2 * (1.0 - tol)).collect()
    }

    /// a normalized ground state (deterministic for a seed)
    pub fn ground_state(&self, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = self.project_ground(&self.random_state(&mut rng));
        let n = norm(&v);
        v.iter_mut().for_each(|z| *z /= n);
        v
    }
}

/// fixed-chunk reduction so the result does not depend on the thread count
fn chunked_sum(n: usize, f: impl Fn(usize) -> C64 + Sync) -> C64 {
    const CHUNK: usize = 4096;
    let parts: Vec<C64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = cr(0.0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc += f(i);
            }
            acc
        })
        .collect();
    parts.into_iter().fold(cr(0.0), |a, b| a + b)
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    chunked_sum(a.len(), |i| a[i].conj() * b[i])
}

pub fn norm(a: &[C64]) -> f64 {
    inner(a, a).re.sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutingReport {
    pub terms: usize,
    pub pairs_checked: usize,
    pub trials: usize,
    pub max_residual: f64,
    pub worst_pair: Option<(String, String)>,
    pub max_idempotency_residual: f64,
}

/// [P_i, P_j] on random states for every pair of terms sharing an edge
/// (terms on disjoint edges commute as tensor factors); also checks P^2 = P.
pub fn verify_commuting(lat: &Lattice, trials: usize, seed: u64) -> CommutingReport {
    let n = lat.terms.len();
    let supports: Vec<BTreeSet<usize>> = lat.terms.iter().map(|t| lat.support(t).into_iter().collect()).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !supports[i].is_disjoint(&supports[j]) {
                pairs.push((i, j));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_pair = None;
    let mut idem = 0.0f64;
    for _ in 0..trials {
        let psi = lat.random_state(&mut rng);
        let applied: Vec<Vec<C64>> = lat.terms.iter().map(|t| lat.apply(t, &psi)).collect();
        for (i, t) in lat.terms.iter().enumerate() {
            let pp = lat.apply(t, &applied[i]);
            let d: Vec<C64> = pp.iter().zip(&applied[i]).map(|(a, b)| a - b).collect();
            idem = idem.max(norm(&d));
        }
        for &(i, j) in &pairs {
            let a = lat.apply(&lat.terms[i], &applied[j]);
            let b = lat.apply(&lat.terms[j], &applied[i]);
            let d: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let r = norm(&d);
            if r > worst {
                worst = r;
                worst_pair = Some((lat.terms[i].label(), lat.terms[j].label()));
            }
        }
    }
    CommutingReport { terms: n, pairs_checked: pairs.len(), trials, max_residual: worst, worst_pair, max_idempotency_residual: idem }
}

/// Rank of the product of all projectors: project a random frame and count
/// the vectors that survive Gram-Schmidt at relative threshold 1e-8.
pub fn ground_space_dimension(lat: &Lattice, seed: u64) -> usize {
    ground_space_dimension_upto(lat, seed, lat.dim).0
}

/// Same, but stops once `limit` independent vectors are found; the flag
/// is false when the true dimension may be larger.
pub fn ground_space_dimension_upto(lat: &Lattice, seed: u64, limit: usize) -> (usize, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = limit.min(lat.dim).max(1);
    let mut k = 8.min(limit);
    loop {
        let vecs: Vec<Vec<C64>> = (0..k).map(|_| lat.project_ground(&lat.random_state(&mut rng))).collect();
        let r = frame_rank(vecs);
        if r < k || k == lat.dim {
            return (r, true);
        }
        if k >= limit {
            return (r, false);
        }
        k = (2 * k).min(limit);
    }
}

fn frame_rank(vecs: Vec<Vec<C64>>) -> usize {
    let scale = vecs.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for mut v in vecs {
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &v);
                v.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&v);
        if n > 1e-8 * scale {
            v.par_iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TriangleKind {
    /// along an edge: T^g, reads the edge value
    Direct,
    /// across an edge: L^h
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Triangle {
    pub kind: TriangleKind,
    pub edge: usize,
    /// traversed along the edge orientation (direct) or crossing it so
    /// that L^h acts by left multiplication (dual)
    pub forward: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ribbon {
    pub triangles: Vec<Triangle>,
}

impl Ribbon {
    pub fn concat(&self, other: &Ribbon) -> Ribbon {
        Ribbon { triangles: [self.triangles.clone(), other.triangles.clone()].concat() }
    }

    /// along row y from vertex x0 to x1 (x0 < x1), with the dual triangles
    /// crossing the vertical edges above: direct h(x,y), dual v(x+1,y)
    pub fn horizontal(lat: &Lattice, x0: usize, x1: usize, y: usize) -> Result<Ribbon, LatticeError> {
        if x1 <= x0 || x1 > lat.width || y >= lat.height {
            return Err(LatticeError::BadRibbon(format!("row {} from {} to {}", y, x0, x1)));
        }
        let mut t = Vec::new();
        for x in x0..x1 {
            t.push(Triangle { kind: TriangleKind::Direct, edge: lat.h_edge(x, y), forward: true });
            t.push(Triangle { kind: TriangleKind::Dual, edge: lat.v_edge(x + 1, y), forward: true });
        }
        Ok(Ribbon { triangles: t })
    }

    /// dual path along plaquette row y from plaquette x0 to x1, crossing
    /// v(x0+1,y) .. v(x1,y); only dual triangles (a pure flux string)
    pub fn dual_row(lat: &Lattice, x0: usize, x1: usize, y: usize) -> Result<Ribbon, LatticeError> {
        if x1 <= x0 || x1 >= lat.width || y >= lat.height {
            return Err(LatticeError::BadRibbon(format!("plaquette row {} from {} to {}", y, x0, x1)));
        }
        Ok(Ribbon { triangles: (x0 + 1..=x1).map(|x| Triangle { kind: TriangleKind::Dual, edge: lat.v_edge(x, y), forward: true }).collect() })
    }

    /// direct path along vertex row y from x0 to x1 (a pure charge string)
    pub fn direct_row(lat: &Lattice, x0: usize, x1: usize, y: usize) -> Result<Ribbon, LatticeError> {
        if x1 <= x0 || x1 > lat.width || y > lat.height {
            return Err(LatticeError::BadRibbon(format!("vertex row {} from {} to {}", y, x0, x1)));
        }
        Ok(Ribbon { triangles: (x0..x1).map(|x| Triangle { kind: TriangleKind::Direct, edge: lat.h_edge(x, y), forward: true }).collect() })
    }

    fn check(&self, lat: &Lattice) -> Result<(), LatticeError> {
        let mut seen = BTreeSet::new();
        for t in &self.triangles {
            if t.edge >= lat.num_edges {
                return Err(LatticeError::BadRibbon(format!("edge {} out of range", t.edge)));
            }
            if !seen.insert((t.edge, t.kind == TriangleKind::Dual)) {
                return Err(LatticeError::BadRibbon(format!("edge {} used twice", t.edge)));
            }
        }
        let direct: BTreeSet<usize> = self.triangles.iter().filter(|t| t.kind == TriangleKind::Direct).map(|t| t.edge).collect();
        if self.triangles.iter().any(|t| t.kind == TriangleKind::Dual && direct.contains(&t.edge)) {
            return Err(LatticeError::BadRibbon("an edge is both crossed and followed".into()));
        }
        Ok(())
    }
}

/// F^{(h,g)} on a basis index: direct triangles read y (conjugating the
/// running flux and consuming g), dual triangles multiply by the flux.
fn ribbon_basis(lat: &Lattice, r: &Ribbon, idx: usize, h: usize, g: usize) -> Option<usize> {
    let grp = &lat.group;
    let mut cur = h;
    let mut rem = g;
    let mut out = idx;
    for t in &r.triangles {
        let x = lat.value(idx, t.edge);
        match t.kind {
            TriangleKind::Direct => {
                let y = if t.forward { x } else { grp.inv(x) };
                cur = grp.mul(grp.mul(grp.inv(y), cur), y);
                rem = grp.mul(grp.inv(y), rem);
            }
            TriangleKind::Dual => {
                let nx = if t.forward { grp.mul(cur, x) } else { grp.mul(x, grp.inv(cur)) };
                out = lat.with(out, t.edge, nx)?;
            }
        }
    }
    if rem == 0 {
        Some(out)
    } else {
        None
    }
}

pub fn apply_ribbon_fg(lat: &Lattice, psi: &[C64], r: &Ribbon, h: usize, g: usize) -> Result<Vec<C64>, LatticeError> {
    r.check(lat)?;
    let mut out = vec![cr(0.0); lat.dim];
    if r.triangles.is_empty() {
        if g == 0 {
            out.copy_from_slice(psi);
        }
        return Ok(out);
    }
    for (idx, &a) in psi.iter().enumerate() {
        if a == cr(0.0) {
            continue;
        }
        if let Some(j) = ribbon_basis(lat, r, idx, h, g) {
            out[j] += a;
        }
    }
    Ok(out)
}

/// sum_g coeff(g) F^{(h,g)}
pub fn apply_ribbon_combination(lat: &Lattice, psi: &[C64], r: &Ribbon, h: usize, coeff: &dyn Fn(usize) -> C64) -> Result<Vec<C64>, LatticeError> {
    let mut out = vec![cr(0.0); lat.dim];
    for g in 0..lat.group.order {
        let c = coeff(g);
        if c == cr(0.0) {
            continue;
        }
        let part = apply_ribbon_fg(lat, psi, r, h, g)?;
        out.iter_mut().zip(part).for_each(|(o, p)| *o += c * p);
    }
    Ok(out)
}

/// rank of {F^{(h,g)} psi : h, g in G} for a random psi
pub fn ribbon_operator_rank(lat: &Lattice, r: &Ribbon, seed: u64) -> Result<usize, LatticeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = lat.random_state(&mut rng);
    let mut vecs = Vec::new();
    for h in 0..lat.group.order {
        for g in 0..lat.group.order {
            vecs.push(apply_ribbon_fg(lat, &psi, r, h, g)?);
        }
    }
    Ok(frame_rank(vecs))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfinementReport {
    pub row: usize,
    pub flux: usize,
    pub lengths: Vec<usize>,
    pub violated: Vec<usize>,
    pub slope: f64,
}

/// Flux string of element h along plaquette row y starting at plaquette
/// x0, applied to a ground state for every length that fits. Counts the
/// violated terms per length; inside a hole that pins edges to K the
/// count grows with the length, in the bulk it stays at the two ends.
pub fn confinement_profile(lat: &Lattice, x0: usize, y: usize, h: usize, seed: u64) -> Result<ConfinementReport, LatticeError> {
    if x0 + 1 >= lat.width || y >= lat.height {
        return Err(LatticeError::BadRibbon("no room for a flux string".into()));
    }
    let gs = lat.ground_state(seed);
    let mut lengths = Vec::new();
    let mut violated = Vec::new();
    for len in 1..(lat.width - x0) {
        let r = Ribbon::dual_row(lat, x0, x0 + len, y)?;
        let st = apply_ribbon_combination(lat, &gs, &r, h, &|_| cr(1.0))?;
        lengths.push(len);
        violated.push(lat.violated(&st, 1e-9).len());
    }
    let slope = fit_slope(&lengths, &violated);
    Ok(ConfinementReport { row: y, flux: h, lengths, violated, slope })
}

pub fn fit_slope(xs: &[usize], ys: &[usize]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<usize>() as f64 / n;
    let my = ys.iter().sum::<usize>() as f64 / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (*x as f64 - mx) * (*y as f64 - my);
        den += (*x as f64 - mx).powi(2);
    }
    num / den
}

/// A^g at vertex v (gather form)
pub fn apply_gauge(lat: &Lattice, psi: &[C64], v: usize, g: usize) -> Vec<C64> {
    let gi = lat.group.inv(g);
    (0..lat.dim).into_par_iter().map(|j| lat.gauge(j, v, gi).map_or(cr(0.0), |src| psi[src])).collect()
}

/// Projector onto anyon a at the site (bottom-left vertex of plaquette p, p):
/// (d/|Z|) sum_i sum_z conj chi(z) A^{q_i z q_i^-1} B^{c_i}, with c_i running
/// over the class and q_i its transversal. Summed over all anyons it is
/// the identity.
pub fn anyon_sector_project(lat: &Lattice, sys: &AnyonSystem, psi: &[C64], p: usize, label: &str) -> Result<Vec<C64>, LatticeError> {
    let a = sys.index_of(label).ok_or_else(|| LatticeError::BadAnyon(label.to_string()))?;
    if p >= lat.width * lat.height {
        return Err(LatticeError::BadRibbon(format!("no plaquette {}", p)));
    }
    let g = &lat.group;
    let v = lat.boundary(p)[0];
    let v = lat.endpoints(v).0;
    let cl = &sys.classes[sys.anyons[a].class];
    let scale = sys.irrep_dim(a) as f64 / cl.centralizer.order() as f64;
    let mut out = vec![cr(0.0); lat.dim];
    for (i, &c) in cl.elements.iter().enumerate() {
        let flux: Vec<C64> = (0..lat.dim).into_par_iter().map(|j| if lat.holonomy(j, p) == c { psi[j] } else { cr(0.0) }).collect();
        let q = cl.transversal[i];
        for &z in &cl.centralizer.elements {
            let coeff = sys.centralizer_chi(a, z).conj() * scale;
            let moved = apply_gauge(lat, &flux, v, g.mul(g.mul(q, z), g.inv(q)));
            out.par_iter_mut().zip(moved.par_iter()).for_each(|(o, m)| *o += coeff * m);
        }
    }
    Ok(out)
}

/// rank of the F-span on the ground state after projecting the start site
/// of the ribbon (plaquette p) onto each anyon
pub fn sector_ranks(lat: &Lattice, sys: &AnyonSystem, r: &Ribbon, p: usize, seed: u64) -> Result<Vec<(String, usize)>, LatticeError> {
    let gs = lat.ground_state(seed);
    let mut states = Vec::new();
    for h in 0..lat.group.order {
        for g in 0..lat.group.order {
            states.push(apply_ribbon_fg(lat, &gs, r, h, g)?);
        }
    }
    let mut out = Vec::new();
    for label in sys.labels() {
        let mut proj = Vec::new();
        for st in &states {
            proj.push(anyon_sector_project(lat, sys, st, p, &label)?);
        }
        out.push((label, frame_rank(proj)));
    }
    Ok(out)
}
