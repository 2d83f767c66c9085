//! Dense real least-squares helpers shared by the relocation and residue
//! stages.

use nalgebra::{DMatrix, DVector, SVD};

/// Scales every column of `a` to unit Euclidean norm in place and returns
/// the applied factors (1 for all-zero columns).
pub(crate) fn normalize_columns(a: &mut DMatrix<f64>) -> Vec<f64> {
    let mut scales = Vec::with_capacity(a.ncols());
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        col *= s;
        scales.push(s);
    }
    scales
}

/// Upper-triangular factor of a Householder QR.
pub(crate) fn r_factor(a: DMatrix<f64>) -> DMatrix<f64> {
    a.qr().r()
}

/// Rank tolerance relative to the largest singular value or pivot,
/// mirroring the usual `max(m, n)·ε` rule.
pub(crate) fn rank_tol(m: usize, n: usize) -> f64 {
    m.max(n) as f64 * f64::EPSILON
}

pub(crate) struct SvdSolution {
    pub x: DVector<f64>,
    pub condition: f64,
    pub rank: usize,
}

/// Minimum-norm least-squares solution of `a·x ≈ b` after column
/// equilibration. Singular values below the rank tolerance are discarded.
/// Returns `None` if the matrix is identically zero.
pub(crate) fn solve_min_norm(mut a: DMatrix<f64>, b: &DVector<f64>) -> Option<SvdSolution> {
    let (m, n) = a.shape();
    let scales = normalize_columns(&mut a);
    let svd = SVD::new(a, true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return None;
    }
    let smin = if m >= n { svd.singular_values.min() } else { 0.0 };
    let cutoff = smax * rank_tol(m, n);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let mut x = svd.solve(b, cutoff).ok()?;
    for (xi, s) in x.iter_mut().zip(&scales) {
        *xi *= s;
    }
    Some(SvdSolution {
        x,
        condition: smax / smin,
        rank,
    })
}

/// Back substitution for the leading `n×n` upper-triangular block of `r`.
pub(crate) fn back_substitute(r: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_on_duplicate_columns() {
        // x0 + x1 = 2 with identical columns: min-norm answer is (1, 1)
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.5, 0.5]);
        let b = DVector::from_vec(vec![2.0, 4.0, 1.0]);
        let sol = solve_min_norm(a, &b).unwrap();
        assert_eq!(sol.rank, 1);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        assert!(sol.condition > 1e12);
    }

    #[test]
    fn triangular_solve() {
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 4.0]);
        assert_eq!(back_substitute(&r, &[4.0, 8.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_matrix_has_no_solution() {
        assert!(solve_min_norm(DMatrix::zeros(3, 2), &DVector::zeros(3)).is_none());
    }
}
