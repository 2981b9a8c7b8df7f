//! LTI state-space models, form conversions, Kalman filtering and the
//! steady-state Riccati solution.
//!
//! The process form is
//! `x(t+1) = A x(t) + B u(t) + w(t)`, `y(t) = C x(t) + D u(t) + v(t)`;
//! with the steady-state Kalman gain attached it is equivalent to the
//! innovation form driven by the one-step prediction error.

use crate::error::{Result, SubidError};
use crate::numerics::{
    self, ensure_finite, eigvals, spectral_radius, svd, sym_sqrt_psd, Mat, Vect, DEFAULT_RCOND,
};
use crate::stacking::{ext_controllability, ext_observability, hankel, toeplitz_h, Direction};

/// Singular-value threshold for rank decisions on structural tests.
const RANK_TOL: f64 = 1e-8;

/// Margin used by the stability test: stable means spectral radius < 1 - this.
const STABILITY_MARGIN: f64 = 1e-10;

/// LTI discrete-time state-space realization with an optional Kalman gain.
#[derive(Debug, Clone, PartialEq)]
pub struct SsModel {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    /// Steady-state Kalman gain; present for innovation-form models.
    pub k: Option<Mat>,
}

impl SsModel {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let m = SsModel { a, b, c, d, k: None };
        m.validate()?;
        Ok(m)
    }

    pub fn with_gain(a: Mat, b: Mat, c: Mat, d: Mat, k: Mat) -> Result<Self> {
        let m = SsModel {
            a,
            b,
            c,
            d,
            k: Some(k),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n_x = self.a.nrows();
        let n_u = self.b.ncols();
        let n_y = self.c.nrows();
        if n_x == 0 || n_u == 0 || n_y == 0 {
            return Err(SubidError::BadShape("model dimensions must be >= 1".into()));
        }
        if self.a.ncols() != n_x || self.b.nrows() != n_x {
            return Err(SubidError::BadShape("A/B dimensions inconsistent".into()));
        }
        if self.c.ncols() != n_x || self.d.nrows() != n_y || self.d.ncols() != n_u {
            return Err(SubidError::BadShape("C/D dimensions inconsistent".into()));
        }
        if let Some(k) = &self.k {
            if k.nrows() != n_x || k.ncols() != n_y {
                return Err(SubidError::BadShape("K dimensions inconsistent".into()));
            }
            ensure_finite(k, "model K")?;
        }
        ensure_finite(&self.a, "model A")?;
        ensure_finite(&self.b, "model B")?;
        ensure_finite(&self.c, "model C")?;
        ensure_finite(&self.d, "model D")?;
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }
}

/// Joint covariance blocks of the process/measurement noise pair (w, v):
/// `E [v; w] [v; w]^T = [[R, S^T], [S, Q]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub q: Mat,
    pub r: Mat,
    pub s: Mat,
}

impl NoiseSpec {
    pub fn new(q: Mat, r: Mat, s: Mat) -> Result<Self> {
        let n = NoiseSpec { q, r, s };
        n.validate()?;
        Ok(n)
    }

    /// Zero process and measurement cross-covariance with the given sizes.
    pub fn zero(n_x: usize, n_y: usize) -> Self {
        NoiseSpec {
            q: Mat::zeros(n_x, n_x),
            r: Mat::zeros(n_y, n_y),
            s: Mat::zeros(n_x, n_y),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n_x = self.q.nrows();
        let n_y = self.r.nrows();
        if self.q.ncols() != n_x || self.r.ncols() != n_y {
            return Err(SubidError::BadShape("Q/R must be square".into()));
        }
        if self.s.nrows() != n_x || self.s.ncols() != n_y {
            return Err(SubidError::BadShape("S must be n_x by n_y".into()));
        }
        ensure_finite(&self.q, "noise Q")?;
        ensure_finite(&self.r, "noise R")?;
        ensure_finite(&self.s, "noise S")?;
        let joint = self.joint();
        let scale = joint.amax().max(1.0);
        if (&joint - joint.transpose()).amax() > 1e-10 * scale {
            return Err(SubidError::BadShape("noise blocks not symmetric".into()));
        }
        let min_eig = numerics::eigvals(&joint)?
            .iter()
            .map(|l| l.re)
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * scale {
            return Err(SubidError::NotPsd { min_eig });
        }
        Ok(())
    }

    /// The joint block matrix `[[R, S^T], [S, Q]]` for the stacked pair (v, w).
    pub fn joint(&self) -> Mat {
        let n_x = self.q.nrows();
        let n_y = self.r.nrows();
        let mut j = Mat::zeros(n_x + n_y, n_x + n_y);
        j.view_mut((0, 0), (n_y, n_y)).copy_from(&self.r);
        j.view_mut((0, n_y), (n_y, n_x)).copy_from(&self.s.transpose());
        j.view_mut((n_y, 0), (n_x, n_y)).copy_from(&self.s);
        j.view_mut((n_y, n_y), (n_x, n_x)).copy_from(&self.q);
        j
    }
}

/// Predictor form: `x(t+1) = (A - K C) x(t) + (B - K D) u(t) + K y(t)` with
/// the measured output acting as an input.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub a_tilde: Mat,
    pub b_tilde: Mat,
    pub k: Mat,
    pub c: Mat,
    pub d: Mat,
}

/// Observer-predictor form with a user-chosen gain `lambda` in place of the
/// Kalman gain inside the state matrix: `x(t+1) = (A - Lambda C) x(t) +
/// (B - Lambda D) u(t) + K e(t) + Lambda y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverPredictorModel {
    pub a_breve: Mat,
    pub b_breve: Mat,
    pub lambda: Mat,
    pub k: Mat,
    pub c: Mat,
    pub d: Mat,
}

/// Result of [`check_structure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureReport {
    pub stable: bool,
    pub observable: bool,
    pub controllable: bool,
    pub minimal: bool,
    /// `Some` only when the model carries a gain: spectral radius of
    /// `A - K C` strictly inside the unit circle.
    pub minphase: Option<bool>,
}

/// Stability, observability, controllability and minimum-phase checks.
///
/// With a noise specification the controllability test uses the pair
/// `(A, [B, Q^(1/2)])`, otherwise `(A, B)`.
pub fn check_structure(m: &SsModel, noise: Option<&NoiseSpec>) -> Result<StructureReport> {
    let n_x = m.order();
    let stable = spectral_radius(&m.a)? < 1.0 - STABILITY_MARGIN;

    let gamma = ext_observability(&m.a, &m.c, n_x);
    let observable = svd(&gamma)?.rank(RANK_TOL) == n_x;

    let ctrl_input = match noise {
        Some(ns) => {
            let q_sqrt = sym_sqrt_psd(&ns.q)?;
            numerics::hstack(&[&m.b, &q_sqrt])
        }
        None => m.b.clone(),
    };
    let omega = ext_controllability(&m.a, &ctrl_input, n_x);
    let controllable = svd(&omega)?.rank(RANK_TOL) == n_x;

    let minphase = match &m.k {
        Some(k) => Some(spectral_radius(&(&m.a - k * &m.c))? < 1.0),
        None => None,
    };

    Ok(StructureReport {
        stable,
        observable,
        controllable,
        minimal: observable && controllable,
        minphase,
    })
}

/// Steady-state Riccati solution.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Fixed point of the Riccati recursion.
    pub p: Mat,
    /// Steady-state Kalman gain `(S + A P C^T)(R + C P C^T)^(-1)`.
    pub k: Mat,
    /// Iterations used to converge.
    pub iters: usize,
}

fn riccati_step(m: &SsModel, noise: &NoiseSpec, p: &Mat) -> Result<(Mat, Mat)> {
    let apct = &m.a * p * m.c.transpose() + &noise.s;
    let innov_cov = &noise.r + &m.c * p * m.c.transpose();
    let inv = invert_spd(&innov_cov)?;
    let gain = &apct * &inv;
    let p_next = &m.a * p * m.a.transpose() + &noise.q - &gain * apct.transpose();
    // symmetrize to keep roundoff from accumulating over many iterations
    let p_next = (&p_next + p_next.transpose()) * 0.5;
    Ok((p_next, gain))
}

// Inverse of a (small) symmetric positive-definite matrix via SVD, with an
// explicit singularity check.
fn invert_spd(m: &Mat) -> Result<Mat> {
    let dec = svd(m)?;
    let n = m.nrows();
    if dec.rank(1e-13) < n {
        return Err(SubidError::NumericalFailure(
            "innovation covariance numerically singular",
        ));
    }
    let mut vs = dec.v.clone();
    for (j, &s) in dec.s.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(&vs * dec.u.transpose())
}

/// Iterates the Riccati recursion from `p0` (identity when `None`) until the
/// fixed point is reached: `||P_next - P||_F <= tol * max(1, ||P||_F)`.
///
/// Returns the limit covariance, the steady-state gain, and the iteration
/// count. The deduced gain renders `A - K C` strictly stable.
pub fn riccati_solve(
    m: &SsModel,
    noise: &NoiseSpec,
    p0: Option<&Mat>,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    let n_x = m.order();
    let mut p = match p0 {
        Some(p0) => p0.clone(),
        None => Mat::identity(n_x, n_x),
    };
    for iter in 1..=max_iter {
        let (p_next, gain) = riccati_step(m, noise, &p)?;
        let delta = (&p_next - &p).norm();
        if delta <= tol * p.norm().max(1.0) {
            return Ok(RiccatiSolution {
                p: p_next,
                k: gain,
                iters: iter,
            });
        }
        p = p_next;
    }
    Err(SubidError::RiccatiDivergence {
        iters: max_iter,
        last: p,
    })
}

/// Rewrites an innovation-form model into predictor form.
pub fn to_predictor(m: &SsModel) -> Result<PredictorModel> {
    let k = m.k.as_ref().ok_or(SubidError::MissingGain)?;
    Ok(PredictorModel {
        a_tilde: &m.a - k * &m.c,
        b_tilde: &m.b - k * &m.d,
        k: k.clone(),
        c: m.c.clone(),
        d: m.d.clone(),
    })
}

/// Rewrites an innovation-form model into observer-predictor form with the
/// user-supplied observer gain `lambda`.
pub fn to_observer_predictor(m: &SsModel, lambda: &Mat) -> Result<ObserverPredictorModel> {
    let k = m.k.as_ref().ok_or(SubidError::MissingGain)?;
    if lambda.nrows() != m.order() || lambda.ncols() != m.n_outputs() {
        return Err(SubidError::BadShape(format!(
            "lambda must be {}x{}",
            m.order(),
            m.n_outputs()
        )));
    }
    Ok(ObserverPredictorModel {
        a_breve: &m.a - lambda * &m.c,
        b_breve: &m.b - lambda * &m.d,
        lambda: lambda.clone(),
        k: k.clone(),
        c: m.c.clone(),
        d: m.d.clone(),
    })
}

/// Observer gain placing every eigenvalue of `A - Lambda C` at the origin
/// (deadbeat observer), for single-output systems, via characteristic-
/// polynomial placement.
pub fn deadbeat_gain(m: &SsModel) -> Result<Mat> {
    if m.n_outputs() != 1 {
        return Err(SubidError::Unsupported(
            "deadbeat gain placement requires a single output; supply lambda directly".into(),
        ));
    }
    let n_x = m.order();
    let obs = ext_observability(&m.a, &m.c, n_x);
    let dec = svd(&obs)?;
    if dec.rank(RANK_TOL) < n_x {
        return Err(SubidError::NotObservable);
    }
    // Ackermann: Lambda = phi(A) * O^(-1) * e_n with phi(z) = z^n.
    let mut e_n = Mat::zeros(n_x, 1);
    e_n[(n_x - 1, 0)] = 1.0;
    let sol = obs
        .lu()
        .solve(&e_n)
        .ok_or(SubidError::NotObservable)?;
    let mut a_pow = Mat::identity(n_x, n_x);
    for _ in 0..n_x {
        a_pow = &a_pow * &m.a;
    }
    Ok(&a_pow * sol)
}

/// Output of the prediction-only Kalman filter.
#[derive(Debug, Clone)]
pub struct KalmanRun {
    /// Predicted states; column `t` holds `xhat(t)` for `t = 0..=N`.
    pub xhat: Mat,
    /// Time-varying gains, one per processed sample.
    pub gains: Vec<Mat>,
    /// Error covariance after the last step.
    pub p_final: Mat,
}

/// Runs the prediction phase of the Kalman filter over the full record:
/// `xhat(t+1) = A xhat(t) + B u(t) + K(t) (y(t) - C xhat(t) - D u(t))`
/// with the gain and covariance updated by the Riccati difference equation.
pub fn kalman_predict(
    m: &SsModel,
    noise: &NoiseSpec,
    u: &Mat,
    y: &Mat,
    x0: &Vect,
    p0: &Mat,
) -> Result<KalmanRun> {
    let n_x = m.order();
    let n = u.ncols();
    if y.ncols() != n || u.nrows() != m.n_inputs() || y.nrows() != m.n_outputs() {
        return Err(SubidError::BadShape("kalman_predict: data dimensions".into()));
    }
    if x0.len() != n_x || p0.shape() != (n_x, n_x) {
        return Err(SubidError::BadShape("kalman_predict: x0/p0 dimensions".into()));
    }
    let mut xhat = Mat::zeros(n_x, n + 1);
    xhat.column_mut(0).copy_from(x0);
    let mut p = p0.clone();
    let mut gains = Vec::with_capacity(n);
    let mut x = x0.clone();
    for t in 0..n {
        let (p_next, gain) = riccati_step(m, noise, &p)?;
        let innov =
            y.column(t) - &m.c * &x - &m.d * u.column(t).into_owned();
        x = &m.a * &x + &m.b * u.column(t).into_owned() + &gain * innov;
        xhat.column_mut(t + 1).copy_from(&x);
        gains.push(gain);
        p = p_next;
    }
    Ok(KalmanRun {
        xhat,
        gains,
        p_final: p,
    })
}

/// Evaluates the Kalman filter state at time `t` in closed form, as a linear
/// combination of the initial estimate and the stacked past data:
/// `xhat(t) = (A^t - D_t Gamma_t) xhat(0) + D_t y_t^-(t) +
/// (Omega_t - D_t H_t) u_t^-(t)` with
/// `D_t = [(A - K(t-1) C) D_(t-1), K(t-1)]` and `D_0` empty.
///
/// Must agree with the recursive filter at every step.
pub fn kf_data_form(
    m: &SsModel,
    gains: &[Mat],
    x0hat: &Vect,
    u: &Mat,
    y: &Mat,
    t: usize,
) -> Result<Vect> {
    if t == 0 {
        return Ok(x0hat.clone());
    }
    let n = u.ncols();
    if t > n || t > gains.len() {
        return Err(SubidError::BadWindow(format!(
            "kf_data_form: t={t} beyond available data/gains"
        )));
    }
    let n_x = m.order();
    let mut delta = Mat::zeros(n_x, 0);
    for s in 0..t {
        let shifted = (&m.a - &gains[s] * &m.c) * &delta;
        delta = numerics::hstack(&[&shifted, &gains[s]]);
    }
    let gamma = ext_observability(&m.a, &m.c, t);
    let omega = ext_controllability(&m.a, &m.b, t);
    let h = toeplitz_h(&m.a, &m.b, &m.c, &m.d, t);
    let y_past = hankel(y, t, 1, t, Direction::Past)?.data;
    let u_past = hankel(u, t, 1, t, Direction::Past)?.data;

    let mut a_pow = Mat::identity(n_x, n_x);
    for _ in 0..t {
        a_pow = &a_pow * &m.a;
    }

    let free_resp = (&a_pow - &delta * &gamma) * x0hat;
    let forced = (&omega - &delta * &h) * &u_past;
    let data_term = &delta * &y_past;
    let out = free_resp + Vect::from_column_slice(forced.as_slice())
        + Vect::from_column_slice(data_term.as_slice());
    Ok(out)
}

/// Exact state reconstruction for deterministic (noise-free) data:
/// `x(t)` as a linear combination of the last `n_x` inputs and outputs,
/// valid when the leading `n_x` rows of the observability matrix are
/// invertible.
pub fn exact_state_deterministic(m: &SsModel, u: &Mat, y: &Mat, t: usize) -> Result<Vect> {
    let n_x = m.order();
    if t < n_x {
        return Err(SubidError::BadWindow(format!(
            "exact_state_deterministic: t={t} < n_x={n_x}"
        )));
    }
    if t > u.ncols() || t > y.ncols() {
        return Err(SubidError::BadWindow(format!(
            "exact_state_deterministic: t={t} beyond data"
        )));
    }
    let gamma = ext_observability(&m.a, &m.c, n_x);
    let lead = gamma.view((0, 0), (n_x, n_x)).into_owned();
    let dec = svd(&lead)?;
    if dec.rank(DEFAULT_RCOND) < n_x {
        return Err(SubidError::LeadingBlockSingular);
    }
    let lead_inv = numerics::pinv(&lead, DEFAULT_RCOND)?;

    let h = toeplitz_h(&m.a, &m.b, &m.c, &m.d, n_x);
    let h_lead = h.view((0, 0), (n_x, h.ncols())).into_owned();
    let omega = ext_controllability(&m.a, &m.b, n_x);

    let y_past = hankel(y, n_x, 1, t, Direction::Past)?.data;
    let u_past = hankel(u, n_x, 1, t, Direction::Past)?.data;
    let y_lead = y_past.view((0, 0), (n_x, 1)).into_owned();

    let mut a_pow = Mat::identity(n_x, n_x);
    for _ in 0..n_x {
        a_pow = &a_pow * &m.a;
    }

    let state = &a_pow * &lead_inv * y_lead + (&omega - &a_pow * &lead_inv * h_lead) * u_past;
    Ok(Vect::from_column_slice(state.as_slice()))
}

/// Eigenvalues of the state matrix (convenience for comparisons).
pub fn poles(m: &SsModel) -> Result<Vec<num_complex::Complex64>> {
    eigvals(&m.a)
}
