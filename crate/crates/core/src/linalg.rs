//! Dense symmetric-matrix helpers shared by the solvers and samplers.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let scale = 1.0_f64.max(m[(i, j)].abs()).max(m[(j, i)].abs());
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// log det of a symmetric positive definite matrix, `None` if Cholesky fails.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

pub fn inverse_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = m.clone().cholesky()?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

/// `Tr(A B)` for symmetric `B`, without forming the product.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Rescales a covariance to unit diagonal; zero-variance rows are left untouched.
pub fn to_correlation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    let scale: Vec<f64> = (0..p)
        .map(|i| {
            let d = m[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut out = DMatrix::from_fn(p, p, |i, j| m[(i, j)] * scale[i] * scale[j]);
    for i in 0..p {
        if m[(i, i)] > 0.0 {
            out[(i, i)] = 1.0;
        }
    }
    out
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let p = m.nrows();
    let mut best = 0.0_f64;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                best = best.max(m[(i, j)].abs());
            }
        }
    }
    best
}

/// `count` log-spaced values from `hi` down to `lo`, both inclusive.
pub fn log_spaced_desc(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    (0..count).map(|k| (lh + (ll - lh) * k as f64 / (count - 1) as f64).exp()).collect()
}
