//! Dense symmetric helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Moore-Penrose pseudoinverse of a symmetric matrix. Eigenvalues with
/// magnitude at most `rel_cutoff * max|eigenvalue|` are treated as zero.
pub fn sym_pinv(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let cutoff = rel_cutoff * scale;
    let mut out = DMatrix::zeros(n, n);
    for (k, &val) in eig.eigenvalues.iter().enumerate() {
        if val.abs() > cutoff && val != 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / val;
        }
    }
    out
}

/// Solves the symmetric system `m x = rhs`, falling back to the
/// pseudoinverse when `m` is singular.
pub fn sym_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(chol) = m.clone().cholesky() {
        let x = chol.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return x;
        }
    }
    sym_pinv(m, 1e-12) * rhs
}

pub fn max_abs_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_rank_deficient_laplacian() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let p = sym_pinv(&l, 1e-12);
        // L = 2 vvᵀ with v = (1,-1)/√2, so L† = vvᵀ/2.
        let expected = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert!((p - expected).norm() < 1e-14);
    }

    #[test]
    fn solve_falls_back_on_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let x = sym_solve(&m, &DVector::from_vec(vec![2.0, 2.0]));
        assert!((x - DVector::from_vec(vec![1.0, 1.0])).norm() < 1e-12);
    }
}
