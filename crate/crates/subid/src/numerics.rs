//! Dense linear-algebra primitives used by every other module.
//!
//! Everything here is a deterministic function of its inputs. Factorizations
//! are delegated to `nalgebra`; this module fixes the conventions the rest of
//! the crate relies on (descending singular values, lower-triangular RQ,
//! rank decisions relative to `rcond`).

use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SubidError};

/// Dense real matrix, the working type of the whole crate.
pub type Mat = DMatrix<f64>;

/// Dense real column vector.
pub type Vect = nalgebra::DVector<f64>;

/// Default relative truncation threshold for pseudo-inverses and rank tests.
/// Singular directions below `rcond * sigma_max` are treated as zero.
pub const DEFAULT_RCOND: f64 = 1e-12;

const FACTOR_MAX_ITER: usize = 50_000;

/// Returns an error if any entry of `m` is NaN or infinite.
pub fn ensure_finite(m: &Mat, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SubidError::NonFinite(what))
    }
}

/// Singular value decomposition `m = u * diag(s) * v^T` (compact form).
///
/// `u` and `v` have orthonormal columns and `s` is sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

impl SvdResult {
    /// Number of singular values above `rcond * s[0]`.
    pub fn rank(&self, rcond: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rcond * smax).count()
    }

    /// Reconstructs `u * diag(s) * v^T`.
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        &us * self.v.transpose()
    }
}

/// Compact SVD with singular values sorted non-increasing.
pub fn svd(m: &Mat) -> Result<SvdResult> {
    ensure_finite(m, "svd input")?;
    let decomp = SVD::try_new(m.clone(), true, true, f64::EPSILON, FACTOR_MAX_ITER)
        .ok_or(SubidError::NumericalFailure("SVD did not converge"))?;
    let u = decomp.u.expect("u requested");
    let v = decomp.v_t.expect("v_t requested").transpose();
    let s: Vec<f64> = decomp.singular_values.iter().copied().collect();

    // nalgebra sorts, but the descending order is a contract here.
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let sorted = idx.iter().map(|&i| s[i]).collect::<Vec<_>>();
    let u = Mat::from_columns(&idx.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let v = Mat::from_columns(&idx.iter().map(|&i| v.column(i)).collect::<Vec<_>>());
    Ok(SvdResult { u, s: sorted, v })
}

/// RQ-style factorization `m = r * q` with `r` lower triangular and `q`
/// having orthonormal rows. Requires `rows(m) <= cols(m)`.
pub fn rq(m: &Mat) -> Result<(Mat, Mat)> {
    ensure_finite(m, "rq input")?;
    let (p, n) = m.shape();
    if p > n {
        return Err(SubidError::BadShape(format!(
            "rq requires rows <= cols, got {p}x{n}"
        )));
    }
    let qr = m.transpose().qr();
    let r_lower = qr.r().transpose();
    let q_rows = qr.q().transpose();
    Ok((r_lower, q_rows))
}

/// Solution of a row-space least-squares problem, see [`lstsq_rows`].
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    /// The estimated coefficient matrix.
    pub theta: Mat,
    /// Numerical rank of the regressor matrix at the given `rcond`.
    pub rank: usize,
    /// True when the regressors do not have full row rank.
    pub rank_deficient: bool,
}

/// Solves `min_theta || target - theta * regressors ||_F` through a
/// rank-revealing SVD; directions below `rcond * sigma_max` are truncated.
pub fn lstsq_rows(target: &Mat, regressors: &Mat, rcond: f64) -> Result<LstsqSolution> {
    if target.ncols() != regressors.ncols() {
        return Err(SubidError::BadShape(format!(
            "lstsq_rows: target has {} columns, regressors {}",
            target.ncols(),
            regressors.ncols()
        )));
    }
    let dec = svd(regressors)?;
    let rank = dec.rank(rcond);
    let theta = apply_pinv_left(target, &dec, rcond);
    Ok(LstsqSolution {
        theta,
        rank,
        rank_deficient: rank < regressors.nrows(),
    })
}

// target * pinv(R) given the SVD of R, without forming pinv explicitly:
// pinv(R) = V * diag(1/s) * U^T, so target * pinv(R) = (target * V) * diag * U^T.
fn apply_pinv_left(target: &Mat, dec: &SvdResult, rcond: f64) -> Mat {
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let mut scaled = target * &dec.v;
    for (j, &s) in dec.s.iter().enumerate() {
        let inv = if smax > 0.0 && s > rcond * smax {
            1.0 / s
        } else {
            0.0
        };
        scaled.column_mut(j).scale_mut(inv);
    }
    &scaled * dec.u.transpose()
}

/// Moore-Penrose pseudo-inverse with relative truncation threshold `rcond`.
pub fn pinv(m: &Mat, rcond: f64) -> Result<Mat> {
    let dec = svd(m)?;
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let mut vs = dec.v.clone();
    for (j, &s) in dec.s.iter().enumerate() {
        let inv = if smax > 0.0 && s > rcond * smax {
            1.0 / s
        } else {
            0.0
        };
        vs.column_mut(j).scale_mut(inv);
    }
    Ok(&vs * dec.u.transpose())
}

fn symmetric_eigen(m: &Mat, what: &'static str) -> Result<(Mat, Vec<f64>)> {
    ensure_finite(m, what)?;
    let (r, c) = m.shape();
    if r != c {
        return Err(SubidError::BadShape(format!("{what}: {r}x{c} not square")));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(SubidError::BadShape(format!(
            "{what}: asymmetry {asym:.3e} exceeds tolerance"
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, FACTOR_MAX_ITER).ok_or(
        SubidError::NumericalFailure("symmetric eigen did not converge"),
    )?;
    Ok((eig.eigenvectors, eig.eigenvalues.iter().copied().collect()))
}

/// Inverse symmetric square root of a PSD matrix: returns `w` with
/// `w * m * w = I` on the numerically nonzero eigenspace.
///
/// Eigenvalues below `rcond * lambda_max` are treated as zero; a negative
/// eigenvalue beyond tolerance yields `NotPsd`.
pub fn sym_inv_sqrt(m: &Mat, rcond: f64) -> Result<Mat> {
    let (vecs, vals) = symmetric_eigen(m, "sym_inv_sqrt input")?;
    let lmax = vals.iter().cloned().fold(0.0_f64, f64::max);
    let min_eig = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 * lmax.max(1.0) {
        return Err(SubidError::NotPsd { min_eig });
    }
    let mut w = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let f = if l > rcond * lmax && l > 0.0 {
            1.0 / l.sqrt()
        } else {
            0.0
        };
        w.column_mut(j).scale_mut(f);
    }
    Ok(&w * vecs.transpose())
}

/// Symmetric PSD square root; small negative eigenvalues are clipped at zero.
pub fn sym_sqrt_psd(m: &Mat) -> Result<Mat> {
    let (vecs, vals) = symmetric_eigen(m, "sym_sqrt input")?;
    let lmax = vals.iter().cloned().fold(0.0_f64, f64::max);
    let min_eig = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 * lmax.max(1.0) {
        return Err(SubidError::NotPsd { min_eig });
    }
    let mut w = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        w.column_mut(j).scale_mut(l.max(0.0).sqrt());
    }
    Ok(&w * vecs.transpose())
}

/// Full spectrum of a square matrix, unordered; conjugate pairs for real input.
pub fn eigvals(m: &Mat) -> Result<Vec<Complex64>> {
    ensure_finite(m, "eigvals input")?;
    let (r, c) = m.shape();
    if r != c {
        return Err(SubidError::BadShape(format!("eigvals: {r}x{c} not square")));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, FACTOR_MAX_ITER).ok_or(
        SubidError::NumericalFailure("Schur iteration did not converge"),
    )?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    Ok(eigvals(m)?.iter().map(|l| l.norm()).fold(0.0_f64, f64::max))
}

/// Applies the orthogonal complement projector of the row space of `u` to
/// `x` from the right: computes `x * (I - u^T (u u^T)^{-1} u)` without ever
/// forming the M-by-M projector.
pub fn project_out_rows(x: &Mat, u: &Mat, rcond: f64) -> Result<Mat> {
    if u.nrows() == 0 {
        return Ok(x.clone());
    }
    if x.ncols() != u.ncols() {
        return Err(SubidError::BadShape(format!(
            "project_out_rows: {} vs {} columns",
            x.ncols(),
            u.ncols()
        )));
    }
    let gram = u * u.transpose();
    let xut = x * u.transpose();
    Ok(x - xut * pinv(&gram, rcond)? * u)
}

/// Vertically stacks matrices that share a column count.
pub fn vstack(blocks: &[&Mat]) -> Mat {
    assert!(!blocks.is_empty());
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: column mismatch");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

/// Horizontally stacks matrices that share a row count.
pub fn hstack(blocks: &[&Mat]) -> Mat {
    assert!(!blocks.is_empty());
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack: row mismatch");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}
