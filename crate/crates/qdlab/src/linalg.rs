//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// e^{2 pi i k / n}
pub fn root_of_unity(k: i64, n: usize) -> C64 {
    let t = 2.0 * std::f64::consts::PI * (k.rem_euclid(n as i64) as f64) / n as f64;
    C64::from_polar(1.0, t)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// max |a_ij - b_ij|; infinite if shapes differ
pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    if u.ncols() != n {
        return f64::INFINITY;
    }
    max_diff(&(u.adjoint() * u), &identity(n))
}

pub fn hermiticity_residual(h: &CMat) -> f64 {
    max_diff(h, &h.adjoint())
}

pub fn diag(v: &[C64]) -> CMat {
    let n = v.len();
    let mut m = CMat::zeros(n, n);
    for (i, x) in v.iter().enumerate() {
        m[(i, i)] = *x;
    }
    m
}

pub fn from_rows(rows: &[Vec<C64>]) -> CMat {
    let r = rows.len();
    let cdim = if r == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(r, cdim, |i, j| rows[i][j])
}

/// Numerical rank via singular values above `tol` (relative to the largest).
pub fn rank(m: &CMat, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * top.max(1.0)).count()
}

/// Orthonormal basis of the null space of m, as columns.
pub fn null_space(m: &CMat, tol: f64) -> CMat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return identity(n);
    }
    // work with m^H m so the svd is square and V is complete
    let g = m.adjoint() * m;
    let eig = g.symmetric_eigen();
    let mut cols = Vec::new();
    let scale = eig.eigenvalues.iter().cloned().fold(1.0, f64::max);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).unwrap());
    for i in idx {
        if eig.eigenvalues[i].abs() < tol * scale {
            cols.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    if cols.is_empty() {
        return CMat::zeros(n, 0);
    }
    CMat::from_columns(&cols)
}

/// Least-squares solve via SVD with a cutoff on small singular values.
pub fn lstsq(a: &CMat, b: &nalgebra::DVector<C64>, cutoff: f64) -> nalgebra::DVector<C64> {
    let svd = a.clone().svd(true, true);
    match svd.solve(b, cutoff) {
        Ok(x) => x,
        Err(_) => nalgebra::DVector::zeros(a.ncols()),
    }
}

/// Snap tiny real/imag parts to zero so printed output is stable.
pub fn clean(z: C64, tol: f64) -> C64 {
    let re = if z.re.abs() < tol { 0.0 } else { z.re };
    let im = if z.im.abs() < tol { 0.0 } else { z.im };
    C64::new(re, im)
}

pub fn clean_mat(m: &CMat, tol: f64) -> CMat {
    m.map(|z| clean(z, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities() {
        let k = kron(&identity(2), &identity(3));
        assert!(max_diff(&k, &identity(6)) < 1e-15);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = from_rows(&[vec![cr(1.0), cr(1.0)]]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!((ns[(0, 0)] + ns[(1, 0)]).norm() < 1e-12);
    }

    #[test]
    fn roots() {
        let w = root_of_unity(1, 3);
        assert!((w * w * w - cr(1.0)).norm() < 1e-14);
        assert!((root_of_unity(-1, 3) - w.conj()).norm() < 1e-14);
    }
}
