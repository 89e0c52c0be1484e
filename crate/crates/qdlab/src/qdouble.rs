//! Anyons of the quantum double D(G): pairs (conjugacy class, centralizer
//! irrep), their dimensions, modular S and T, and Verlinde fusion.

use thiserror::Error;

use crate::group_core::{
    character_table, conjugacy_classes, CharacterTable, ConjugacyClass, Family, FiniteGroup, GroupError,
};
use crate::linalg::{cr, CMat, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("fusion coefficient N[{0}][{1}][{2}] = {3} is not a nonnegative integer")]
    NonIntegralFusion(usize, usize, usize, String),
    #[error("S matrix first row must be strictly positive")]
    BadFirstRow,
}

#[derive(Clone, Debug)]
pub struct Anyon {
    /// index into AnyonSystem::classes
    pub class: usize,
    /// irrep index in the centralizer's character table
    pub irrep: usize,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct AnyonSystem {
    pub group: FiniteGroup,
    pub classes: Vec<ConjugacyClass>,
    /// centralizer of each class rep as a group, and its character table
    pub centralizers: Vec<FiniteGroup>,
    pub centralizer_tables: Vec<CharacterTable>,
    pub anyons: Vec<Anyon>,
    pub dims: Vec<f64>,
    pub s: CMat,
    /// twists theta_a
    pub t: Vec<C64>,
    /// fusion[a][b][c] = N_{ab}^c
    pub fusion: Vec<Vec<Vec<usize>>>,
    pub dual: Vec<usize>,
}

impl AnyonSystem {
    pub fn len(&self) -> usize {
        self.anyons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anyons.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.anyons.iter().position(|a| a.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.anyons.iter().map(|a| a.label.clone()).collect()
    }

    /// character of the anyon's centralizer irrep at a parent element of
    /// the centralizer
    pub fn centralizer_chi(&self, a: usize, x: usize) -> C64 {
        let an = &self.anyons[a];
        let cl = &self.classes[an.class];
        let pos = cl.centralizer.index_of(x).expect("element not in centralizer");
        self.centralizer_tables[an.class].chi(an.irrep, pos)
    }

    pub fn class_size(&self, a: usize) -> usize {
        self.classes[self.anyons[a].class].size()
    }

    pub fn irrep_dim(&self, a: usize) -> usize {
        let an = &self.anyons[a];
        self.centralizer_tables[an.class].dims[an.irrep]
    }

    pub fn total_dim(&self) -> f64 {
        self.group.order as f64
    }
}

pub fn anyon_types(g: &FiniteGroup) -> Result<Vec<Anyon>, QdError> {
    Ok(build(g)?.anyons)
}

pub fn quantum_dim(sys: &AnyonSystem, a: usize) -> f64 {
    (sys.class_size(a) * sys.irrep_dim(a)) as f64
}

pub fn modular_data(g: &FiniteGroup) -> Result<(CMat, Vec<C64>), QdError> {
    let sys = build(g)?;
    Ok((sys.s, sys.t))
}

fn is_s3(g: &FiniteGroup) -> bool {
    matches!(g.family, Family::Symmetric(3) | Family::Dihedral(3))
}

fn is_cyclic(g: &FiniteGroup) -> Option<usize> {
    match g.family {
        Family::Cyclic(n) => Some(n),
        _ => None,
    }
}

/// e^{a1} m^{a2} in ASCII: "1", "e", "e2", "m", "em", "e2m", "m2", ...
pub fn zn_label(n: usize, a1: usize, a2: usize) -> String {
    if n == 2 {
        return match (a1, a2) {
            (0, 0) => "1",
            (1, 0) => "e",
            (0, 1) => "m",
            _ => "eps",
        }
        .to_string();
    }
    let part = |sym: &str, k: usize| -> String {
        match k {
            0 => String::new(),
            1 => sym.to_string(),
            _ => format!("{}{}", sym, k),
        }
    };
    let s = format!("{}{}", part("e", a1), part("m", a2));
    if s.is_empty() {
        "1".into()
    } else {
        s
    }
}

pub fn build(g: &FiniteGroup) -> Result<AnyonSystem, QdError> {
    let classes = conjugacy_classes(g);
    let mut centralizers = Vec::new();
    let mut tables = Vec::new();
    for cl in &classes {
        let z = g.subgroup_as_group(&cl.centralizer);
        tables.push(character_table(&z)?);
        centralizers.push(z);
    }
    let mut anyons = Vec::new();
    for (ci, _) in classes.iter().enumerate() {
        for r in 0..tables[ci].num_irreps() {
            anyons.push(Anyon { class: ci, irrep: r, label: String::new() });
        }
    }
    // labels
    if is_s3(g) {
        let letters = [["A", "B", "C"], ["F", "G", "H"], ["D", "E", ""]];
        for a in anyons.iter_mut() {
            a.label = letters[a.class][a.irrep].to_string();
        }
    } else if let Some(n) = is_cyclic(g) {
        for a in anyons.iter_mut() {
            // class index = flux (class of element k is k), irrep index = charge
            let flux = classes[a.class].rep;
            a.label = zn_label(n, a.irrep, flux);
        }
    } else {
        for a in anyons.iter_mut() {
            a.label = format!("({},{})", g.names[classes[a.class].rep], a.irrep);
        }
    }
    let n = anyons.len();
    let dims: Vec<f64> = anyons
        .iter()
        .map(|a| (classes[a.class].size() * tables[a.class].dims[a.irrep]) as f64)
        .collect();

    let chi = |a: &Anyon, x: usize| -> C64 {
        let cl = &classes[a.class];
        let pos = cl.centralizer.index_of(x).expect("not in centralizer");
        tables[a.class].chi(a.irrep, pos)
    };
    // S_ab = 1/|G| sum_{h in C_a, g in C_b, gh = hg} conj chi_a(x_h^-1 g x_h) conj chi_b(x_g^-1 h x_g)
    let mut s = CMat::zeros(n, n);
    for (i, a) in anyons.iter().enumerate() {
        let ca = &classes[a.class];
        for (j, b) in anyons.iter().enumerate() {
            if j < i {
                continue;
            }
            let cb = &classes[b.class];
            let mut acc = C64::new(0.0, 0.0);
            for (hi, &h) in ca.elements.iter().enumerate() {
                let xh = ca.transversal[hi];
                for (gi, &gg) in cb.elements.iter().enumerate() {
                    if g.mul(gg, h) != g.mul(h, gg) {
                        continue;
                    }
                    let xg = cb.transversal[gi];
                    let u = g.mul(g.mul(g.inv(xh), gg), xh);
                    let v = g.mul(g.mul(g.inv(xg), h), xg);
                    acc += chi(a, u).conj() * chi(b, v).conj();
                }
            }
            acc /= g.order as f64;
            s[(i, j)] = crate::linalg::clean(acc, 1e-14);
            s[(j, i)] = s[(i, j)];
        }
    }
    let t: Vec<C64> = anyons
        .iter()
        .map(|a| {
            let rep = classes[a.class].rep;
            crate::linalg::clean(chi(a, rep) / tables[a.class].dims[a.irrep] as f64, 1e-14)
        })
        .collect();
    let fusion = verlinde(&s)?;
    let dual: Vec<usize> = (0..n).map(|a| (0..n).find(|&b| fusion[a][b][0] == 1).unwrap_or(a)).collect();
    Ok(AnyonSystem {
        group: g.clone(),
        classes,
        centralizers,
        centralizer_tables: tables,
        anyons,
        dims,
        s,
        t,
        fusion,
        dual,
    })
}

/// N_ab^c = sum_x S_ax S_bx conj(S_cx) / S_0x
pub fn verlinde(s: &CMat) -> Result<Vec<Vec<Vec<usize>>>, QdError> {
    let n = s.nrows();
    for x in 0..n {
        if s[(0, x)].re <= 1e-12 || s[(0, x)].im.abs() > 1e-9 {
            return Err(QdError::BadFirstRow);
        }
    }
    let mut out = vec![vec![vec![0usize; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for x in 0..n {
                    acc += s[(a, x)] * s[(b, x)] * s[(c, x)].conj() / s[(0, x)];
                }
                let r = acc.re.round();
                if (acc - cr(r)).norm() > 1e-6 || r < 0.0 {
                    return Err(QdError::NonIntegralFusion(a, b, c, format!("{:.6}", acc)));
                }
                out[a][b][c] = r as usize;
            }
        }
    }
    Ok(out)
}

pub fn fusion_rules(s: &CMat) -> Result<Vec<Vec<Vec<usize>>>, QdError> {
    verlinde(s)
}

/// max |(ST)^3 - theta S^2| over the best global phase theta
pub fn modular_relation_residual(s: &CMat, t: &[C64]) -> f64 {
    let tm = crate::linalg::diag(t);
    let st = s * &tm;
    let lhs = &st * &st * &st;
    let s2 = s * s;
    // theta from the largest entry of S^2
    let (mut bi, mut bj, mut best) = (0, 0, 0.0);
    for i in 0..s2.nrows() {
        for j in 0..s2.ncols() {
            if s2[(i, j)].norm() > best {
                best = s2[(i, j)].norm();
                bi = i;
                bj = j;
            }
        }
    }
    let theta = lhs[(bi, bj)] / s2[(bi, bj)];
    crate::linalg::max_diff(&lhs, &(s2 * theta))
}
