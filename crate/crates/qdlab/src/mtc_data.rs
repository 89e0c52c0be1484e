//! Modular tensor category data (labels, S, T, N, F, R), the abelian
//! doubles D(Z_n), a JSON loader, Lagrangian algebra search and the
//! M-3j solver for multiplicity-free condensable algebras.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary_defect::LagrangianVector;
use crate::linalg::{c, cr, root_of_unity, unitarity_residual, CMat, C64};
use crate::qdouble::{verlinde, zn_label, QdError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MtcError {
    #[error("schema: {0}")]
    Schema(String),
    #[error("S not unitary (residual {0:.3e})")]
    NotUnitary(f64),
    #[error("S not symmetric")]
    NotSymmetric,
    #[error("dims do not match S_0a/S_00 at label {0}")]
    Dims(usize),
    #[error("T entry {0} is not a phase")]
    BadTwist(usize),
    #[error("Verlinde fusion from S differs from stored N at ({0},{1},{2})")]
    Verlinde(usize, usize, usize),
    #[error(transparent)]
    Fusion(#[from] QdError),
    #[error("F symbol {0:?} nonzero on an inadmissible vertex")]
    Admissibility([usize; 6]),
    #[error("pentagon fails at (a,b,c,d,e,f,g,k,l) = {indices:?}, residual {residual:.3e}")]
    Pentagon { indices: Vec<usize>, residual: f64 },
    #[error("hexagon fails at (a,b,c,d,e,g) = {indices:?}, residual {residual:.3e}")]
    Hexagon { indices: Vec<usize>, residual: f64 },
    #[error("fusion multiplicities above 1 are not supported")]
    Multiplicity,
    #[error("{0} is not a Lagrangian algebra of this category")]
    NotLagrangian(String),
    #[error("M-3j system has no solution within the iteration budget (best residual {0:.3e})")]
    NoSolution(f64),
    #[error("unknown builtin '{0}' (try tc, dz3, ds3, dzN)")]
    UnknownBuiltin(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Clone, Debug)]
pub struct MtcData {
    pub name: String,
    pub labels: Vec<String>,
    pub dual: Vec<usize>,
    pub dims: Vec<f64>,
    pub s: CMat,
    pub t: Vec<C64>,
    /// fusion[a][b][c] = N_{ab}^c
    pub fusion: Vec<Vec<Vec<usize>>>,
    /// F^{abc}_{d;ef} keyed [a,b,c,d,e,f]
    pub f: BTreeMap<[usize; 6], C64>,
    /// R^{ab}_c keyed [a,b,c]
    pub r: BTreeMap<[usize; 3], C64>,
    /// absent admissible F entries read as 1
    pub trivial_f_default: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub unitarity: f64,
    pub pentagon: f64,
    pub hexagon: f64,
    pub exhaustive: bool,
}

impl MtcData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn n(&self, a: usize, b: usize, c: usize) -> usize {
        self.fusion[a][b][c]
    }

    pub fn products(&self, a: usize, b: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.fusion[a][b][c] > 0).collect()
    }

    pub fn total_dim(&self) -> f64 {
        self.dims.iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    pub fn is_multiplicity_free(&self) -> bool {
        self.fusion.iter().flatten().flatten().all(|&x| x <= 1)
    }

    pub fn fsym(&self, a: usize, b: usize, c: usize, d: usize, e: usize, f: usize) -> C64 {
        if let Some(v) = self.f.get(&[a, b, c, d, e, f]) {
            return *v;
        }
        if self.trivial_f_default && self.admissible_f(a, b, c, d, e, f) {
            cr(1.0)
        } else {
            cr(0.0)
        }
    }

    pub fn rsym(&self, a: usize, b: usize, c: usize) -> C64 {
        self.r.get(&[a, b, c]).cloned().unwrap_or(cr(0.0))
    }

    pub fn admissible_f(&self, a: usize, b: usize, c: usize, d: usize, e: usize, f: usize) -> bool {
        self.n(a, b, e) > 0 && self.n(e, c, d) > 0 && self.n(b, c, f) > 0 && self.n(a, f, d) > 0
    }

    pub fn is_boson(&self, a: usize) -> bool {
        (self.t[a] - cr(1.0)).norm() < 1e-9
    }

    /// Consistency checks. Pentagon and hexagon are exhaustive up to
    /// 16 labels, otherwise sampled with a fixed seed.
    pub fn validate(&self) -> Result<ValidationReport, MtcError> {
        let n = self.len();
        if self.s.nrows() != n || self.s.ncols() != n || self.t.len() != n || self.dims.len() != n {
            return Err(MtcError::Schema("S, T and dims must match the label count".into()));
        }
        let u = unitarity_residual(&self.s);
        if u > 1e-8 {
            return Err(MtcError::NotUnitary(u));
        }
        if crate::linalg::max_diff(&self.s, &self.s.transpose()) > 1e-8 {
            return Err(MtcError::NotSymmetric);
        }
        for a in 0..n {
            if (self.s[(0, a)] / self.s[(0, 0)] - cr(self.dims[a])).norm() > 1e-8 {
                return Err(MtcError::Dims(a));
            }
            if (self.t[a].norm() - 1.0).abs() > 1e-9 {
                return Err(MtcError::BadTwist(a));
            }
        }
        let v = verlinde(&self.s)?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if v[a][b][c] != self.fusion[a][b][c] {
                        return Err(MtcError::Verlinde(a, b, c));
                    }
                }
            }
        }
        if !self.is_multiplicity_free() {
            return Err(MtcError::Multiplicity);
        }
        for (k, val) in &self.f {
            let [a, b, c, d, e, f] = *k;
            if val.norm() > 1e-12 && !self.admissible_f(a, b, c, d, e, f) {
                return Err(MtcError::Admissibility(*k));
            }
        }
        let exhaustive = n <= 16;
        let pentagon = self.pentagon_residual(exhaustive)?;
        let hexagon = self.hexagon_residual()?;
        Ok(ValidationReport { unitarity: u, pentagon, hexagon, exhaustive })
    }

    fn quads(&self, exhaustive: bool) -> Vec<[usize; 5]> {
        let n = self.len();
        if exhaustive {
            let mut out = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            for e in 0..n {
                                out.push([a, b, c, d, e]);
                            }
                        }
                    }
                }
            }
            out
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            (0..20000)
                .map(|_| [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)])
                .collect()
        }
    }

    /// F^{fcd}_e[g][l] F^{abl}_e[f][k] = sum_h F^{abc}_g[f][h] F^{ahd}_e[g][k] F^{bcd}_k[h][l]
    pub fn pentagon_residual(&self, exhaustive: bool) -> Result<f64, MtcError> {
        let n = self.len();
        let prods: Vec<Vec<Vec<usize>>> = (0..n).map(|a| (0..n).map(|b| self.products(a, b)).collect()).collect();
        let mut worst: f64 = 0.0;
        for [a, b, c, d, e] in self.quads(exhaustive) {
            for &f in &prods[a][b] {
                for &g in &prods[f][c] {
                    if self.n(g, d, e) == 0 {
                        continue;
                    }
                    for &l in &prods[c][d] {
                        for &k in &prods[b][l] {
                            if self.n(a, k, e) == 0 {
                                continue;
                            }
                            let lhs = self.fsym(f, c, d, e, g, l) * self.fsym(a, b, l, e, f, k);
                            let mut rhs = cr(0.0);
                            for &h in &prods[b][c] {
                                rhs += self.fsym(a, b, c, g, f, h) * self.fsym(a, h, d, e, g, k) * self.fsym(b, c, d, k, h, l);
                            }
                            let r = (lhs - rhs).norm();
                            worst = worst.max(r);
                            if r > 1e-7 {
                                return Err(MtcError::Pentagon { indices: vec![a, b, c, d, e, f, g, k, l], residual: r });
                            }
                        }
                    }
                }
            }
        }
        Ok(worst)
    }

    /// R^{ab}_e F^{bac}_d[e][g] R^{ac}_g = sum_f F^{abc}_d[e][f] R^{af}_d F^{bca}_d[f][g],
    /// and the same with R^{xy}_z replaced by 1/R^{yx}_z
    pub fn hexagon_residual(&self) -> Result<f64, MtcError> {
        let n = self.len();
        let mut worst: f64 = 0.0;
        let inv = |x: usize, y: usize, z: usize| -> C64 {
            let r = self.rsym(y, x, z);
            if r.norm() < 1e-14 {
                cr(0.0)
            } else {
                r.inv()
            }
        };
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        for e in self.products(a, b) {
                            if self.n(e, c, d) == 0 {
                                continue;
                            }
                            for g in self.products(a, c) {
                                if self.n(b, g, d) == 0 {
                                    continue;
                                }
                                for pass in 0..2 {
                                    let rr = |x: usize, y: usize, z: usize| if pass == 0 { self.rsym(x, y, z) } else { inv(x, y, z) };
                                    let lhs = rr(a, b, e) * self.fsym(b, a, c, d, e, g) * rr(a, c, g);
                                    let mut rhs = cr(0.0);
                                    for f in self.products(b, c) {
                                        rhs += self.fsym(a, b, c, d, e, f) * rr(a, f, d) * self.fsym(b, c, a, d, f, g);
                                    }
                                    let r = (lhs - rhs).norm();
                                    worst = worst.max(r);
                                    if r > 1e-7 {
                                        return Err(MtcError::Hexagon { indices: vec![a, b, c, d, e, g], residual: r });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(worst)
    }

    /// max |S_ab - (1/D) sum_c N_{abar b}^c theta_c/(theta_a theta_b) d_c|
    pub fn monodromy_s_residual(&self) -> f64 {
        let n = self.len();
        let dd = self.total_dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut acc = cr(0.0);
                for cc in 0..n {
                    acc += self.t[cc] / (self.t[a] * self.t[b]) * (self.n(self.dual[a], b, cc) as f64 * self.dims[cc]);
                }
                worst = worst.max((self.s[(a, b)] - acc / dd).norm());
            }
        }
        worst
    }

    /// max |theta_a - sum_c (d_c/d_a) R^{aa}_c|
    pub fn twist_from_r_residual(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|a| {
                let s: C64 = (0..n).map(|c| self.rsym(a, a, c) * (self.n(a, a, c) as f64 * self.dims[c] / self.dims[a])).sum();
                (s - self.t[a]).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        let file = MtcFile {
            name: self.name.clone(),
            labels: self.labels.clone(),
            dims: self.dims.clone(),
            s: (0..self.len()).map(|i| (0..self.len()).map(|j| pair(self.s[(i, j)])).collect()).collect(),
            t: self.t.iter().map(|z| pair(*z)).collect(),
            n: Some(self.fusion.clone()),
            trivial_f_default: self.trivial_f_default,
            f: self.f.iter().map(|(k, v)| Entry { idx: k.to_vec(), val: pair(*v) }).collect(),
            r: self.r.iter().map(|(k, v)| Entry { idx: k.to_vec(), val: pair(*v) }).collect(),
        };
        // one line per row / entry keeps files diffable without pretty-printing every number
        let js = |v: &dyn erased::Js| v.js();
        let mut out = String::from("{\n");
        out += &format!("  \"name\": {},\n", js(&file.name));
        out += &format!("  \"labels\": {},\n", js(&file.labels));
        out += &format!("  \"dims\": {},\n", js(&file.dims));
        out += &format!("  \"S\": [\n{}\n  ],\n", lines(file.s.iter().map(|r| js(r))));
        out += &format!("  \"T\": {},\n", js(&file.t));
        if let Some(nn) = &file.n {
            out += &format!("  \"N\": [\n{}\n  ],\n", lines(nn.iter().map(|r| js(r))));
        }
        out += &format!("  \"trivial_f_default\": {},\n", file.trivial_f_default);
        out += &format!("  \"F\": [\n{}\n  ],\n", lines(file.f.iter().map(|e| js(e))));
        out += &format!("  \"R\": [\n{}\n  ]\n}}\n", lines(file.r.iter().map(|e| js(e))));
        out
    }
}

fn lines(it: impl Iterator<Item = String>) -> String {
    it.map(|l| format!("    {}", l)).collect::<Vec<_>>().join(",\n")
}

mod erased {
    pub trait Js {
        fn js(&self) -> String;
    }
    impl<T: serde::Serialize> Js for T {
        fn js(&self) -> String {
            serde_json::to_string(self).expect("serializable")
        }
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MtcFile {
    name: String,
    labels: Vec<String>,
    dims: Vec<f64>,
    #[serde(rename = "S")]
    s: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "T")]
    t: Vec<[f64; 2]>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default)]
    trivial_f_default: bool,
    #[serde(rename = "F", default)]
    f: Vec<Entry>,
    #[serde(rename = "R", default)]
    r: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    idx: Vec<usize>,
    val: [f64; 2],
}

/// Parse and validate MTC JSON.
pub fn parse_mtc(text: &str) -> Result<(MtcData, ValidationReport), MtcError> {
    let file: MtcFile = serde_json::from_str(text).map_err(|e| MtcError::Schema(e.to_string()))?;
    let n = file.labels.len();
    if n == 0 {
        return Err(MtcError::Schema("no labels".into()));
    }
    if file.s.len() != n || file.s.iter().any(|row| row.len() != n) {
        return Err(MtcError::Schema("S must be n x n".into()));
    }
    let s = CMat::from_fn(n, n, |i, j| c(file.s[i][j][0], file.s[i][j][1]));
    let t: Vec<C64> = file.t.iter().map(|p| c(p[0], p[1])).collect();
    if t.len() != n || file.dims.len() != n {
        return Err(MtcError::Schema("T and dims must have one entry per label".into()));
    }
    let fusion = match file.n {
        Some(nn) => {
            if nn.len() != n || nn.iter().any(|r| r.len() != n || r.iter().any(|x| x.len() != n)) {
                return Err(MtcError::Schema("N must be n x n x n".into()));
            }
            nn
        }
        None => verlinde(&s)?,
    };
    let mut f = BTreeMap::new();
    for e in &file.f {
        if e.idx.len() != 6 || e.idx.iter().any(|&i| i >= n) {
            return Err(MtcError::Schema(format!("bad F index {:?}", e.idx)));
        }
        f.insert([e.idx[0], e.idx[1], e.idx[2], e.idx[3], e.idx[4], e.idx[5]], c(e.val[0], e.val[1]));
    }
    let mut r = BTreeMap::new();
    for e in &file.r {
        if e.idx.len() != 3 || e.idx.iter().any(|&i| i >= n) {
            return Err(MtcError::Schema(format!("bad R index {:?}", e.idx)));
        }
        r.insert([e.idx[0], e.idx[1], e.idx[2]], c(e.val[0], e.val[1]));
    }
    let dual = (0..n).map(|a| (0..n).find(|&b| fusion[a][b][0] > 0).unwrap_or(a)).collect();
    let m = MtcData {
        name: file.name,
        labels: file.labels,
        dual,
        dims: file.dims,
        s,
        t,
        fusion,
        f,
        r,
        trivial_f_default: file.trivial_f_default,
    };
    let rep = m.validate()?;
    Ok((m, rep))
}

pub fn load_mtc(path: &std::path::Path) -> Result<(MtcData, ValidationReport), MtcError> {
    let text = std::fs::read_to_string(path).map_err(|e| MtcError::Io(format!("{}: {}", path.display(), e)))?;
    parse_mtc(&text)
}

/// D(Z_n): labels e^{a1} m^{a2} at index a1 + n a2, trivial F,
/// R^{ab} = omega^{a2 b1}.
pub fn abelian_double(n: usize) -> MtcData {
    assert!(n >= 2, "abelian_double needs n >= 2");
    let size = n * n;
    let split = |a: usize| (a % n, a / n);
    let join = |a1: usize, a2: usize| (a1 % n) + n * (a2 % n);
    let w = |k: i64| crate::linalg::clean(root_of_unity(k, n), 1e-15);
    let labels: Vec<String> = (0..size).map(|a| zn_label(n, a % n, a / n)).collect();
    let s = CMat::from_fn(size, size, |a, b| {
        let ((a1, a2), (b1, b2)) = (split(a), split(b));
        crate::linalg::clean(w(-((a2 * b1 + a1 * b2) as i64)) / n as f64, 1e-15)
    });
    let t: Vec<C64> = (0..size).map(|a| w((split(a).0 * split(a).1) as i64)).collect();
    let mut fusion = vec![vec![vec![0; size]; size]; size];
    let mut r = BTreeMap::new();
    for a in 0..size {
        for b in 0..size {
            let ((a1, a2), (b1, b2)) = (split(a), split(b));
            let cc = join(a1 + b1, a2 + b2);
            fusion[a][b][cc] = 1;
            r.insert([a, b, cc], w((a2 * b1) as i64));
        }
    }
    let dual = (0..size).map(|a| join(n - split(a).0, n - split(a).1)).collect();
    MtcData {
        name: if n == 2 { "toric code".into() } else { format!("D(Z{})", n) },
        labels,
        dual,
        dims: vec![1.0; size],
        s,
        t,
        fusion,
        f: BTreeMap::new(),
        r,
        trivial_f_default: true,
    }
}

const DS3_JSON: &str = include_str!("../data/ds3.json");

/// "tc", "dz3", "ds3", "dzN"; an optional "builtin:" prefix is accepted.
pub fn builtin(name: &str) -> Result<MtcData, MtcError> {
    let key = name.trim().trim_start_matches("builtin:").to_ascii_lowercase();
    match key.as_str() {
        "tc" | "toric" | "dz2" => Ok(abelian_double(2)),
        "ds3" => Ok(parse_mtc(DS3_JSON)?.0),
        _ => {
            if let Some(rest) = key.strip_prefix("dz") {
                if let Ok(n) = rest.parse::<usize>() {
                    if (2..=16).contains(&n) {
                        return Ok(abelian_double(n));
                    }
                }
            }
            Err(MtcError::UnknownBuiltin(name.to_string()))
        }
    }
}

/// builtin name or JSON file path
pub fn resolve(spec: &str) -> Result<MtcData, MtcError> {
    if spec.starts_with("builtin:") {
        return builtin(spec);
    }
    let p = std::path::Path::new(spec);
    if p.exists() {
        return Ok(load_mtc(p)?.0);
    }
    builtin(spec)
}

/// n_0 = 1, bosons only, dimension sqrt(FPdim), and n_a n_b <= sum_c N_ab^c n_c
pub fn is_lagrangian(mtc: &MtcData, v: &LagrangianVector) -> bool {
    let n = mtc.len();
    let m = &v.multiplicities;
    if m.len() != n || m[0] != 1 {
        return false;
    }
    if (0..n).any(|a| m[a] > 0 && !mtc.is_boson(a)) {
        return false;
    }
    let dim: f64 = (0..n).map(|a| m[a] as f64 * mtc.dims[a]).sum();
    if (dim - mtc.total_dim()).abs() > 1e-9 {
        return false;
    }
    for a in 0..n {
        for b in 0..n {
            let rhs: usize = (0..n).map(|c| mtc.fusion[a][b][c] * m[c]).sum();
            if m[a] * m[b] > rhs {
                return false;
            }
        }
    }
    true
}

/// Exhaustive depth-first search, sorted with larger multiplicities on
/// earlier labels first.
pub fn find_lagrangian_algebras(mtc: &MtcData) -> Vec<LagrangianVector> {
    let n = mtc.len();
    let target = mtc.total_dim();
    let bosons: Vec<usize> = (1..n).filter(|&a| mtc.is_boson(a)).collect();
    let mut out = Vec::new();
    let mut m = vec![0usize; n];
    m[0] = 1;
    fn dfs(mtc: &MtcData, bosons: &[usize], pos: usize, sum: f64, target: f64, m: &mut Vec<usize>, out: &mut Vec<LagrangianVector>) {
        if (sum - target).abs() < 1e-9 {
            let v = LagrangianVector { multiplicities: m.clone() };
            if is_lagrangian(mtc, &v) {
                out.push(v);
            }
            return;
        }
        if pos == bosons.len() || sum > target + 1e-9 {
            return;
        }
        let a = bosons[pos];
        let cap = ((target - sum) / mtc.dims[a] + 1e-9).floor() as usize;
        for k in 0..=cap {
            m[a] = k;
            dfs(mtc, bosons, pos + 1, sum + k as f64 * mtc.dims[a], target, m, out);
        }
        m[a] = 0;
    }
    dfs(mtc, &bosons, 0, 1.0, target, &mut m, &mut out);
    out.sort_by(|x, y| y.multiplicities.cmp(&x.multiplicities));
    out.dedup();
    out
}

#[derive(Clone, Debug)]
pub struct MSymbolSet {
    pub boundary: LagrangianVector,
    /// M^{ab}_c keyed (a,b,c), for a,b,c in the algebra and N_ab^c > 0
    pub values: BTreeMap<(usize, usize, usize), C64>,
    pub pentagon_residual: f64,
    pub braid_residual: f64,
    pub braid_summed_residual: f64,
    pub normalization_residual: f64,
    pub attempts: usize,
}

impl MSymbolSet {
    pub fn get(&self, a: usize, b: usize, c: usize) -> C64 {
        self.values.get(&(a, b, c)).cloned().unwrap_or(cr(0.0))
    }

    pub fn max_residual(&self) -> f64 {
        self.pentagon_residual.max(self.braid_residual).max(self.normalization_residual)
    }

    /// M^{ab}_c -> Gamma_a Gamma_b / Gamma_c M^{ab}_c
    pub fn transformed(&self, gamma: &[C64]) -> MSymbolSet {
        let mut out = self.clone();
        for ((a, b, c), v) in out.values.iter_mut() {
            *v *= gamma[*a] * gamma[*b] / gamma[*c];
        }
        out
    }
}

struct MSystem {
    keys: Vec<(usize, usize, usize)>,
    fixed: Vec<Option<C64>>,
    /// each equation: sum of coef * prod of key values
    pentagon: Vec<Vec<(C64, Vec<usize>)>>,
    braid: Vec<Vec<(C64, Vec<usize>)>>,
}

fn support_of(mtc: &MtcData, boundary: &LagrangianVector) -> Result<Vec<usize>, MtcError> {
    if !is_lagrangian(mtc, boundary) {
        return Err(MtcError::NotLagrangian(boundary.display(&mtc.labels)));
    }
    if boundary.multiplicities.iter().any(|&k| k > 1) || !mtc.is_multiplicity_free() {
        return Err(MtcError::Multiplicity);
    }
    Ok((0..mtc.len()).filter(|&a| boundary.multiplicities[a] > 0).collect())
}

fn build_system(mtc: &MtcData, support: &[usize]) -> MSystem {
    let mut keys = Vec::new();
    for &a in support {
        for &b in support {
            for &cc in support {
                if mtc.n(a, b, cc) > 0 {
                    keys.push((a, b, cc));
                }
            }
        }
    }
    let key_index: HashMap<_, _> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let fixed: Vec<Option<C64>> = keys
        .iter()
        .map(|&(a, b, cc)| {
            if a == 0 || b == 0 {
                Some(cr(1.0))
            } else if cc == 0 {
                Some(cr(1.0 / mtc.dims[a].sqrt()))
            } else {
                None
            }
        })
        .collect();
    let inside = |x: usize| support.contains(&x);
    let mut pentagon = Vec::new();
    for &a in support {
        for &b in support {
            for &cc in support {
                for &d in support {
                    for f in 0..mtc.len() {
                        if mtc.n(b, cc, f) == 0 || mtc.n(a, f, d) == 0 {
                            continue;
                        }
                        let mut terms = Vec::new();
                        for &e in support {
                            if mtc.n(a, b, e) == 0 || mtc.n(e, cc, d) == 0 {
                                continue;
                            }
                            let coef = mtc.fsym(a, b, cc, d, e, f).conj();
                            if coef.norm() > 1e-14 {
                                terms.push((coef, vec![key_index[&(a, b, e)], key_index[&(e, cc, d)]]));
                            }
                        }
                        if inside(f) {
                            terms.push((cr(-1.0), vec![key_index[&(b, cc, f)], key_index[&(a, f, d)]]));
                        }
                        if !terms.is_empty() {
                            pentagon.push(terms);
                        }
                    }
                }
            }
        }
    }
    let mut braid = Vec::new();
    for &(a, b, cc) in &keys {
        braid.push(vec![(mtc.rsym(a, b, cc), vec![key_index[&(b, a, cc)]]), (cr(-1.0), vec![key_index[&(a, b, cc)]])]);
    }
    MSystem { keys, fixed, pentagon, braid }
}

fn eval_eq(eq: &[(C64, Vec<usize>)], vals: &[C64]) -> C64 {
    eq.iter().map(|(c0, idx)| idx.iter().fold(*c0, |acc, &i| acc * vals[i])).sum()
}

impl MSystem {
    fn equations(&self) -> impl Iterator<Item = &Vec<(C64, Vec<usize>)>> {
        self.pentagon.iter().chain(self.braid.iter())
    }

    fn unknowns(&self) -> Vec<usize> {
        (0..self.keys.len()).filter(|&i| self.fixed[i].is_none()).collect()
    }

    fn full(&self, z: &[C64]) -> Vec<C64> {
        let mut vals: Vec<C64> = self.fixed.iter().map(|f| f.unwrap_or(cr(0.0))).collect();
        for (j, &i) in self.unknowns().iter().enumerate() {
            vals[i] = z[j];
        }
        vals
    }

    fn residual(&self, z: &[C64]) -> DVector<C64> {
        let vals = self.full(z);
        DVector::from_iterator(self.pentagon.len() + self.braid.len(), self.equations().map(|eq| eval_eq(eq, &vals)))
    }

    fn jacobian(&self, z: &[C64]) -> CMat {
        let vals = self.full(z);
        let unk = self.unknowns();
        let col_of: HashMap<usize, usize> = unk.iter().enumerate().map(|(j, &i)| (i, j)).collect();
        let rows = self.pentagon.len() + self.braid.len();
        let mut jm = CMat::zeros(rows, unk.len());
        for (r, eq) in self.equations().enumerate() {
            for (c0, idx) in eq {
                for (p, &i) in idx.iter().enumerate() {
                    if let Some(&col) = col_of.get(&i) {
                        let mut v = *c0;
                        for (q, &k) in idx.iter().enumerate() {
                            if q != p {
                                v *= vals[k];
                            }
                        }
                        jm[(r, col)] += v;
                    }
                }
            }
        }
        jm
    }

    /// damped Gauss-Newton; returns (solution, max residual)
    fn solve_from(&self, mut z: Vec<C64>) -> (Vec<C64>, f64) {
        let norm = |r: &DVector<C64>| r.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut r = self.residual(&z);
        let mut best = norm(&r);
        let mut lambda = 1e-3;
        for _ in 0..300 {
            if best < 1e-13 || z.is_empty() {
                break;
            }
            let j = self.jacobian(&z);
            let jh = j.adjoint();
            let mut a = &jh * &j;
            for i in 0..a.nrows() {
                a[(i, i)] += cr(lambda);
            }
            let rhs = -(&jh * &r);
            let step = match a.lu().solve(&rhs) {
                Some(s) => s,
                None => break,
            };
            let trial: Vec<C64> = z.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let tr = self.residual(&trial);
            let tn = norm(&tr);
            if tn < best {
                z = trial;
                r = tr;
                best = tn;
                lambda = (lambda / 3.0).max(1e-12);
            } else {
                lambda *= 4.0;
                if lambda > 1e8 {
                    break;
                }
            }
        }
        (z, best)
    }
}

pub const M_RESTARTS: usize = 64;

/// Solve the M-3j pentagon and braid equations with the normalizations
/// M^{1a}_a = M^{a1}_a = 1 and M^{a abar}_1 = 1/sqrt(d_a) fixed, then
/// gauge-fix to the canonical representative.
pub fn solve_m3j(mtc: &MtcData, boundary: &LagrangianVector, seed: u64) -> Result<MSymbolSet, MtcError> {
    let support = support_of(mtc, boundary)?;
    let sys = build_system(mtc, &support);
    let nu = sys.unknowns().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: (Vec<C64>, f64) = (vec![cr(1.0); nu], f64::INFINITY);
    let mut attempts = 0;
    for attempt in 0..=M_RESTARTS {
        attempts = attempt + 1;
        let start: Vec<C64> = if attempt == 0 {
            vec![cr(1.0); nu]
        } else {
            (0..nu)
                .map(|_| C64::from_polar(rng.gen_range(0.3..1.5), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect()
        };
        let (z, res) = sys.solve_from(start);
        if res < best.1 {
            best = (z, res);
        }
        if best.1 < 1e-11 {
            break;
        }
    }
    if best.1 > 1e-9 {
        return Err(MtcError::NoSolution(best.1));
    }
    let vals = sys.full(&best.0);
    let mut set = MSymbolSet {
        boundary: boundary.clone(),
        values: sys.keys.iter().zip(vals.iter()).map(|(k, v)| (*k, *v)).collect(),
        pentagon_residual: 0.0,
        braid_residual: 0.0,
        braid_summed_residual: 0.0,
        normalization_residual: 0.0,
        attempts,
    };
    set = canonical_gauge(mtc, &set);
    for v in set.values.values_mut() {
        *v = crate::linalg::clean(*v, 1e-13);
    }
    fill_residuals(mtc, &mut set);
    Ok(set)
}

/// Residuals of an M-3j set against the pentagon, braid and
/// normalization conditions.
pub fn fill_residuals(mtc: &MtcData, set: &mut MSymbolSet) {
    let support: Vec<usize> = (0..mtc.len()).filter(|&a| set.boundary.multiplicities[a] > 0).collect();
    let sys = build_system(mtc, &support);
    let vals: Vec<C64> = sys.keys.iter().map(|k| set.get(k.0, k.1, k.2)).collect();
    set.pentagon_residual = sys.pentagon.iter().map(|e| eval_eq(e, &vals).norm()).fold(0.0, f64::max);
    set.braid_residual = sys.braid.iter().map(|e| eval_eq(e, &vals).norm()).fold(0.0, f64::max);
    let mut summed: f64 = 0.0;
    for &a in &support {
        for &b in &support {
            let mut acc = cr(0.0);
            for &cc in &support {
                if mtc.n(a, b, cc) > 0 {
                    acc += set.get(b, a, cc) * mtc.rsym(a, b, cc) - set.get(a, b, cc);
                }
            }
            summed = summed.max(acc.norm());
        }
    }
    set.braid_summed_residual = summed;
    let mut norm: f64 = 0.0;
    for i in 0..sys.keys.len() {
        if let Some(f) = sys.fixed[i] {
            norm = norm.max((vals[i] - f).norm());
        }
    }
    set.normalization_residual = norm;
}

/// Non-self-dual pairs: Gamma_a^3 = 1/M^{aa}_{abar} when that entry exists.
/// Self-dual c: sign chosen so the first nonzero M^{xx}_c (else the first
/// entry whose value flips with Gamma_c) has nonnegative imaginary part,
/// then nonnegative real part.
pub fn canonical_gauge(mtc: &MtcData, set: &MSymbolSet) -> MSymbolSet {
    let n = mtc.len();
    let mut gamma = vec![cr(1.0); n];
    let support: Vec<usize> = (0..n).filter(|&a| set.boundary.multiplicities[a] > 0).collect();
    for &a in &support {
        let ab = mtc.dual[a];
        if ab <= a {
            continue;
        }
        let v = set.get(a, a, ab);
        if v.norm() > 1e-12 {
            let g = v.inv().powf(1.0 / 3.0);
            gamma[a] = g;
            gamma[ab] = g.inv();
        }
    }
    let mut out = set.transformed(&gamma);
    let tol = 1e-10;
    let needs_flip = |v: C64| v.im < -tol || (v.im.abs() <= tol && v.re < -tol);
    for &cc in &support {
        if cc == 0 || mtc.dual[cc] != cc {
            continue;
        }
        let mut pick = out.values.iter().find(|((x, y, z), v)| x == y && *z == cc && *x != 0 && v.norm() > 1e-12).map(|(_, v)| *v);
        if pick.is_none() {
            pick = out
                .values
                .iter()
                .find(|((x, y, z), v)| {
                    let e = (*x == cc) as i32 + (*y == cc) as i32 - (*z == cc) as i32;
                    e % 2 != 0 && v.norm() > 1e-12
                })
                .map(|(_, v)| *v);
        }
        if let Some(v) = pick {
            if needs_flip(v) {
                let mut g = vec![cr(1.0); n];
                g[cc] = cr(-1.0);
                out = out.transformed(&g);
            }
        }
    }
    out
}

/// True iff some unit-modulus Gamma with Gamma_1 = 1 maps set a onto set
/// b, found by propagation with branching over roots. Entries fixed by
/// normalization must agree outright.
pub fn gauge_equivalent(a: &MSymbolSet, b: &MSymbolSet, tol: f64) -> bool {
    if a.boundary != b.boundary {
        return false;
    }
    let keys: Vec<(usize, usize, usize)> = a.values.keys().chain(b.values.keys()).cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for k in &keys {
        let (x, y) = (a.get(k.0, k.1, k.2), b.get(k.0, k.1, k.2));
        if (x.norm() < tol) != (y.norm() < tol) {
            return false;
        }
        // normalization entries are not gauge data
        if (k.0 == 0 || k.1 == 0 || k.2 == 0) && (x - y).norm() > tol {
            return false;
        }
    }
    let eqs: Vec<((usize, usize, usize), C64)> = keys
        .iter()
        .filter(|k| a.get(k.0, k.1, k.2).norm() >= tol)
        .map(|k| (*k, b.get(k.0, k.1, k.2) / a.get(k.0, k.1, k.2)))
        .collect();
    let n = a.boundary.multiplicities.len();
    let mut gamma: Vec<Option<C64>> = vec![None; n];
    gamma[0] = Some(cr(1.0));
    search(&eqs, &mut gamma, tol)
}

fn exponents(k: &(usize, usize, usize)) -> BTreeMap<usize, i32> {
    let mut m = BTreeMap::new();
    *m.entry(k.0).or_insert(0) += 1;
    *m.entry(k.1).or_insert(0) += 1;
    *m.entry(k.2).or_insert(0) -= 1;
    m.retain(|_, v| *v != 0);
    m
}

fn search(eqs: &[((usize, usize, usize), C64)], gamma: &mut Vec<Option<C64>>, tol: f64) -> bool {
    // consistency of fully determined equations
    let mut pending = None;
    for (k, ratio) in eqs {
        let ex = exponents(k);
        let unknown: Vec<(usize, i32)> = ex.iter().filter(|(l, _)| gamma[**l].is_none()).map(|(l, e)| (*l, *e)).collect();
        let known: C64 = ex.iter().filter(|(l, _)| gamma[**l].is_some()).map(|(l, e)| gamma[*l].unwrap().powi(*e)).product();
        match unknown.len() {
            0 => {
                if (known - ratio).norm() > tol * 10.0 {
                    return false;
                }
            }
            1 if pending.is_none() => pending = Some((unknown[0], ratio / known)),
            _ => {}
        }
    }
    match pending {
        Some(((l, e), target)) => {
            // Gamma_l^e = target
            let p = e.unsigned_abs();
            let base = if e > 0 { target } else { target.inv() };
            if (base.norm() - 1.0).abs() > tol * 10.0 {
                return false;
            }
            let root = base.powf(1.0 / p as f64);
            for j in 0..p {
                gamma[l] = Some(root * root_of_unity(j as i64, p as usize));
                if search(eqs, gamma, tol) {
                    return true;
                }
            }
            gamma[l] = None;
            false
        }
        None => {
            // a label only constrained jointly with others: treat it as a free gauge direction
            let free = eqs.iter().flat_map(|(k, _)| exponents(k).into_keys()).find(|l| gamma[*l].is_none());
            match free {
                Some(l) => {
                    gamma[l] = Some(cr(1.0));
                    let ok = search(eqs, gamma, tol);
                    gamma[l] = None;
                    ok
                }
                None => true,
            }
        }
    }
}
