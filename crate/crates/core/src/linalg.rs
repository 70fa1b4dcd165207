//! Dense real-matrix primitives used by the scheme construction.
//!
//! Every routine here goes through a sorted singular value decomposition so
//! that rank decisions, null spaces and pseudoinverses agree on one
//! threshold: a singular value counts as nonzero when it exceeds
//! `tol * sigma_max`.

use nalgebra::DMatrix;

/// Dense real matrix. Zero-sized dimensions are allowed and represent an
/// empty stream set (for example an inactive user pair).
pub type Mat = DMatrix<f64>;

/// Default relative rank threshold.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Orthonormal basis of a subspace of `R^ambient_dim`, one column per basis
/// vector. A basis with zero columns is the trivial subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    basis: Mat,
}

impl SubspaceBasis {
    fn new(basis: Mat) -> Self {
        Self {
            ambient_dim: basis.nrows(),
            basis,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn into_basis(self) -> Mat {
        self.basis
    }

    /// Orthogonal projector `B Bᵀ` onto the subspace. Basis-rotation
    /// invariant, so this is what comparisons should use.
    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }
}

/// Singular value decomposition with singular values sorted descending,
/// `u` of shape `rows × k` and `v` square (`cols × cols`), so trailing
/// columns of `v` complete the basis. `k = min(rows, cols)`.
struct SortedSvd {
    u: Mat,
    sigma: Vec<f64>,
    v: Mat,
}

// nalgebra's bidiagonal SVD occasionally returns a factorization that does
// not reproduce rank-deficient inputs, so the decomposition itself comes
// from faer.
fn sorted_svd(a: &Mat) -> SortedSvd {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    let fa = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = fa.svd().expect("svd converges on finite input");
    let (fu, fv) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));

    let mut u = Mat::zeros(rows, k);
    let mut v = Mat::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(s[src]);
        u.set_column(dst, &Mat::from_fn(rows, 1, |i, _| fu[(i, src)]).column(0));
    }
    // Columns past `k` belong to zero singular values; keep their order.
    let v_order: Vec<usize> = order.iter().copied().chain(k..cols).collect();
    for (dst, &src) in v_order.iter().enumerate() {
        v.set_column(dst, &Mat::from_fn(cols, 1, |i, _| fv[(i, src)]).column(0));
    }
    SortedSvd { u, sigma, v }
}

fn numerical_rank(sigma: &[f64], tol: f64) -> usize {
    let Some(&max) = sigma.first() else {
        return 0;
    };
    if max <= 0.0 || !max.is_finite() {
        return 0;
    }
    sigma.iter().take_while(|&&s| s > tol * max).count()
}

/// Number of singular values exceeding `tol` times the largest one.
pub fn rank(a: &Mat, tol: f64) -> usize {
    debug_assert!(tol > 0.0);
    if a.is_empty() {
        return 0;
    }
    numerical_rank(&sorted_svd(a).sigma, tol)
}

/// Orthonormal basis of `{x : a x = 0}`.
pub fn null_space(a: &Mat, tol: f64) -> SubspaceBasis {
    debug_assert!(tol > 0.0);
    let cols = a.ncols();
    if cols == 0 {
        return SubspaceBasis::new(Mat::zeros(0, 0));
    }
    if a.nrows() == 0 {
        return SubspaceBasis::new(Mat::identity(cols, cols));
    }
    let svd = sorted_svd(a);
    let r = numerical_rank(&svd.sigma, tol);
    SubspaceBasis::new(svd.v.columns(r, cols - r).into_owned())
}

/// Orthonormal basis of the column space of `a`.
pub fn column_space(a: &Mat, tol: f64) -> SubspaceBasis {
    if a.is_empty() {
        return SubspaceBasis::new(Mat::zeros(a.nrows(), 0));
    }
    let svd = sorted_svd(a);
    let r = numerical_rank(&svd.sigma, tol);
    SubspaceBasis::new(svd.u.columns(0, r).into_owned())
}

/// Moore-Penrose pseudoinverse.
pub fn pseudo_inverse(a: &Mat, tol: f64) -> Mat {
    debug_assert!(tol > 0.0);
    let (rows, cols) = a.shape();
    if a.is_empty() {
        return Mat::zeros(cols, rows);
    }
    let svd = sorted_svd(a);
    let r = numerical_rank(&svd.sigma, tol);
    let mut out = Mat::zeros(cols, rows);
    for i in 0..r {
        let vi = svd.v.column(i);
        let ui = svd.u.column(i);
        out += (vi * ui.transpose()) / svd.sigma[i];
    }
    out
}

/// Coefficients `(va, vb)` with `a·va = b·vb`, whose common image is an
/// orthonormal basis of `span(a) ∩ span(b)`.
///
/// The intersection is read off the null space of `[a, -b]`: the top block of
/// each null vector combines columns of `a`, the bottom block columns of `b`.
/// Null vectors that come from the kernels of `a` or `b` alone map to zero
/// and are dropped when the image is orthonormalized.
pub fn column_space_intersection(a: &Mat, b: &Mat, tol: f64) -> (Mat, Mat) {
    assert_eq!(a.nrows(), b.nrows(), "row count mismatch");
    let (ca, cb) = (a.ncols(), b.ncols());
    if ca == 0 || cb == 0 || a.nrows() == 0 {
        return (Mat::zeros(ca, 0), Mat::zeros(cb, 0));
    }
    let mut stacked = Mat::zeros(a.nrows(), ca + cb);
    stacked.columns_mut(0, ca).copy_from(a);
    stacked.columns_mut(ca, cb).copy_from(&(-b));
    let z = null_space(&stacked, tol).into_basis();
    if z.ncols() == 0 {
        return (Mat::zeros(ca, 0), Mat::zeros(cb, 0));
    }
    let top = z.rows(0, ca).into_owned();
    let bottom = z.rows(ca, cb).into_owned();

    let image = a * &top;
    // Scale the image against the inputs, not against itself, so kernel-only
    // null vectors (image ~ 0) are not promoted to directions.
    let scale = a.amax().max(b.amax());
    let svd = sorted_svd(&image);
    let r = svd
        .sigma
        .iter()
        .take_while(|&&s| s > tol * scale.max(f64::MIN_POSITIVE))
        .count();
    let mut mix = Mat::zeros(z.ncols(), r);
    for i in 0..r {
        mix.set_column(i, &(svd.v.column(i) / svd.sigma[i]));
    }
    (top * &mix, bottom * mix)
}

/// Horizontal concatenation of matrices with equal row counts.
pub fn hstack(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation of matrices with equal column counts.
pub fn vstack(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.rows_mut(at, b.nrows()).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// Block-diagonal matrix with `copies` repetitions of `a`.
pub fn block_diag_repeat(a: &Mat, copies: usize) -> Mat {
    let (r, c) = a.shape();
    let mut out = Mat::zeros(r * copies, c * copies);
    for i in 0..copies {
        out.view_mut((i * r, i * c), (r, c)).copy_from(a);
    }
    out
}

/// Largest absolute entry, 0 for empty matrices.
pub fn max_abs(a: &Mat) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.amax()
    }
}

/// Selection matrix whose rows are the listed rows of the `n × n` identity.
pub fn selection(indices: &[usize], n: usize) -> Mat {
    let mut s = Mat::zeros(indices.len(), n);
    for (row, &i) in indices.iter().enumerate() {
        s[(row, i)] = 1.0;
    }
    s
}

/// Natural log of the determinant of a symmetric positive definite matrix.
pub(crate) fn ln_det_spd(a: &Mat) -> Option<f64> {
    if a.is_empty() {
        return Some(0.0);
    }
    let chol = a.clone().cholesky()?;
    Some(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub(crate) fn spd_inverse(a: &Mat) -> Option<Mat> {
    if a.is_empty() {
        return Some(a.clone());
    }
    a.clone().cholesky().map(|c| c.inverse())
}
