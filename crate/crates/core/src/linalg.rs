//! Subspace utilities on top of a dense SVD.
//!
//! Matrices are stored as `nalgebra::DMatrix`; decompositions run in `faer`,
//! whose SVD stays backward stable on rank-deficient input.

use faer::Mat;
use nalgebra::DMatrix;

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

struct Decomposition {
    s: Vec<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
}

/// Full SVD: `u` is `rows x rows`, `v` is `cols x cols`, `s` descending.
fn full_svd(m: &DMatrix<f64>) -> Decomposition {
    let svd = to_faer(m).svd().expect("SVD converges");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    Decomposition {
        s: (0..s.nrows()).map(|i| s[i]).collect(),
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    }
}

/// Thin SVD: `u` is `rows x p`, `v` is `cols x p` with `p = min(rows, cols)`.
fn thin_svd(m: &DMatrix<f64>) -> Decomposition {
    let svd = to_faer(m).thin_svd().expect("SVD converges");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    Decomposition {
        s: (0..s.nrows()).map(|i| s[i]).collect(),
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m).singular_values().expect("SVD converges")
}

/// Number of singular values above `rel_tol · σ_max · max(rows, cols)`.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    let tol = rel_tol * smax * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|s| **s > tol).count()
}

/// Rank with an absolute threshold.
pub fn rank_above(m: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(m).iter().filter(|s| **s > tol).count()
}

/// Orthonormal basis (as columns) of the numerical range of `m`.
pub fn range_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let dec = thin_svd(m);
    let r = dec.s.iter().filter(|s| **s > tol).count();
    dec.u.columns(0, r).into_owned()
}

/// Orthonormal basis of the orthogonal complement of `span(m)` in
/// `R^{m.nrows()}`: the trailing left singular vectors.
pub fn orthogonal_complement(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let dim = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let dec = full_svd(m);
    let r = dec.s.iter().filter(|s| **s > tol).count();
    dec.u.columns(r, dim - r).into_owned()
}

/// Removes the component of every column of `m` lying in the span of the
/// orthonormal columns of `basis`.
pub fn project_out(m: &DMatrix<f64>, basis: &DMatrix<f64>) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return m.clone();
    }
    m - basis * (basis.transpose() * m)
}

/// Scales every nonzero column to unit Euclidean norm.
pub fn normalize_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

/// Builds a matrix from equal-length column vectors.
pub fn from_columns(rows: usize, cols: &[Vec<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        debug_assert_eq!(c.len(), rows);
        m.column_mut(j).copy_from_slice(c);
    }
    m
}

/// For each column of `m`, whether it lies outside the span of the other
/// columns. A column is independent of the rest exactly when the
/// corresponding unit vector lies in the row space of `m`.
pub fn independent_columns(m: &DMatrix<f64>, tol: f64) -> Vec<bool> {
    const ROW_SPACE_FLOOR: f64 = 1.0 - 1e-6;
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 {
        return vec![false; n];
    }
    let dec = thin_svd(m);
    let r = dec.s.iter().filter(|s| **s > tol).count();
    if r == n {
        return vec![true; n];
    }
    let row_space = dec.v.columns(0, r);
    (0..n).map(|a| row_space.row(a).norm_squared() > ROW_SPACE_FLOOR).collect()
}
