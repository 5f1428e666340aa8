//! Thin bridge to nalgebra for the few decompositions the crate needs.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2};

pub fn to_dmatrix(a: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Array1<f64> {
    let eig = SymmetricEigen::new(to_dmatrix(a.view()));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Array1::from(v)
}

pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    symmetric_eigenvalues(a)[0]
}

/// Singular values (descending) and matching right singular vectors as the
/// columns of a `cols × r` matrix, `r = min(rows, cols)`.
pub fn right_singular_pairs(a: ArrayView2<f64>) -> (Vec<f64>, Array2<f64>) {
    let svd = to_dmatrix(a).svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let vectors = Array2::from_shape_fn((a.ncols(), order.len()), |(row, col)| {
        v_t[(order[col], row)]
    });
    (values, vectors)
}

/// Numerical rank with a relative singular value cutoff.
pub fn rank(a: ArrayView2<f64>, rel_tol: f64) -> usize {
    let (s, _) = right_singular_pairs(a);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigenvalues_sorted() {
        let a = array![[2.0, 0.0], [0.0, -1.0]];
        assert_eq!(symmetric_eigenvalues(&a).to_vec(), vec![-1.0, 2.0]);
    }

    #[test]
    fn singular_pairs_descending() {
        let a = array![[1.0, 0.0, 0.0], [0.0, 3.0, 0.0]];
        let (s, v) = right_singular_pairs(a.view());
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        assert!((v[[1, 0]].abs() - 1.0).abs() < 1e-12);
        assert_eq!(rank(a.view(), 1e-10), 2);
    }
}
