//! Stacked vectors, block-Hankel data matrices and the structural block
//! matrices (extended observability/controllability, block Toeplitz) that
//! the data equations are written in.
//!
//! Time indexing is 0-based: the earliest time a depth-`ell` past block can
//! be anchored at is `t0 = ell`.

use crate::error::{Result, SubidError};
use crate::numerics::Mat;

/// Whether a Hankel block stacks samples before (`Past`) or from (`Future`)
/// its anchor time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Past,
    Future,
}

/// Block-Hankel matrix of a multichannel signal.
///
/// Column `j` of a past block is the stacked vector
/// `[r(t0+j-ell); ...; r(t0+j-1)]` (oldest lag first); column `j` of a
/// future block is `[r(t0+j); ...; r(t0+j+ell-1)]`.
#[derive(Debug, Clone)]
pub struct HankelBlock {
    pub data: Mat,
    pub ell: usize,
    pub m_cols: usize,
    pub n_r: usize,
    pub direction: Direction,
    pub t0: usize,
}

/// Builds the block-Hankel matrix of `signal` (one channel per row).
pub fn hankel(
    signal: &Mat,
    ell: usize,
    m_cols: usize,
    t0: usize,
    direction: Direction,
) -> Result<HankelBlock> {
    let n_r = signal.nrows();
    let n = signal.ncols();
    if ell == 0 || m_cols == 0 {
        return Err(SubidError::BadWindow(format!(
            "hankel: ell={ell}, m_cols={m_cols} must be >= 1"
        )));
    }
    // All accessed sample indices must lie in [0, n-1].
    let (first, last) = match direction {
        Direction::Past => (t0 as isize - ell as isize, (t0 + m_cols) as isize - 2),
        Direction::Future => (t0 as isize, (t0 + m_cols + ell) as isize - 2),
    };
    if first < 0 || last as usize > n - 1 {
        return Err(SubidError::BadWindow(format!(
            "hankel: window [{first}, {last}] outside data range [0, {}]",
            n - 1
        )));
    }

    let mut data = Mat::zeros(ell * n_r, m_cols);
    for j in 0..m_cols {
        for k in 0..ell {
            let t = match direction {
                Direction::Past => t0 + j - ell + k,
                Direction::Future => t0 + j + k,
            };
            data.view_mut((k * n_r, j), (n_r, 1))
                .copy_from(&signal.column(t));
        }
    }
    Ok(HankelBlock {
        data,
        ell,
        m_cols,
        n_r,
        direction,
        t0,
    })
}

/// Extended observability matrix: row block `k` is `C * A^k`, `k = 0..ell-1`.
pub fn ext_observability(a: &Mat, c: &Mat, ell: usize) -> Mat {
    assert!(ell >= 1);
    let n_y = c.nrows();
    let n_x = a.nrows();
    let mut out = Mat::zeros(ell * n_y, n_x);
    let mut block = c.clone();
    for k in 0..ell {
        out.view_mut((k * n_y, 0), (n_y, n_x)).copy_from(&block);
        if k + 1 < ell {
            block = &block * a;
        }
    }
    out
}

/// Reversed extended controllability matrix `[A^(ell-1) B, ..., A B, B]`.
pub fn ext_controllability(a: &Mat, b: &Mat, ell: usize) -> Mat {
    assert!(ell >= 1);
    let n_x = a.nrows();
    let n_u = b.ncols();
    let mut out = Mat::zeros(n_x, ell * n_u);
    let mut block = b.clone();
    for k in 0..ell {
        // block = A^k * B goes into column block ell-1-k (rightmost is B)
        out.view_mut((0, (ell - 1 - k) * n_u), (n_x, n_u))
            .copy_from(&block);
        if k + 1 < ell {
            block = a * &block;
        }
    }
    out
}

/// Block lower-triangular Toeplitz matrix of impulse-response blocks:
/// diagonal blocks `D`, sub-diagonal block `k` is `C * A^(k-1) * B`.
pub fn toeplitz_h(a: &Mat, b: &Mat, c: &Mat, d: &Mat, ell: usize) -> Mat {
    assert!(ell >= 1);
    let n_y = c.nrows();
    let n_u = b.ncols();
    // markov[k]: D for k = 0, C A^(k-1) B for k >= 1
    let mut markov = Vec::with_capacity(ell);
    markov.push(d.clone());
    if ell > 1 {
        let mut cak = c.clone();
        for _ in 1..ell {
            markov.push(&cak * b);
            cak = &cak * a;
        }
    }
    let mut out = Mat::zeros(ell * n_y, ell * n_u);
    for i in 0..ell {
        for j in 0..=i {
            out.view_mut((i * n_y, j * n_u), (n_y, n_u))
                .copy_from(&markov[i - j]);
        }
    }
    out
}

/// Builds the block Toeplitz matrix directly from a list of parameter
/// blocks `[G_0, ..., G_(ell-1)]` placed at block `(i, j) = G_(i-j)`.
pub fn toeplitz_from_markov(markov: &[Mat], ell: usize) -> Mat {
    assert!(markov.len() >= ell && ell >= 1);
    let n_y = markov[0].nrows();
    let n_u = markov[0].ncols();
    let mut out = Mat::zeros(ell * n_y, ell * n_u);
    for i in 0..ell {
        for j in 0..=i {
            out.view_mut((i * n_y, j * n_u), (n_y, n_u))
                .copy_from(&markov[i - j]);
        }
    }
    out
}

/// Zero/one selector mapping the vectorized parameter row
/// `[D, CB, ..., C A^(f-2) B]` onto the vectorized block Toeplitz matrix:
/// `selector * vec(row) = vec(H_f)` for every (A, B, C, D).
pub fn duplication_selector(f: usize, n_y: usize, n_u: usize) -> Mat {
    assert!(f >= 1);
    let h_rows = f * n_y;
    let h_cols = f * n_u;
    let w_rows = n_y;
    let mut out = Mat::zeros(h_rows * h_cols, w_rows * f * n_u);
    // vec is column-major: entry (r, c) of a matrix with R rows maps to c*R + r.
    for i in 0..f {
        for j in 0..=i {
            let k = i - j;
            for b in 0..n_u {
                for a in 0..n_y {
                    let h_idx = (j * n_u + b) * h_rows + (i * n_y + a);
                    let w_idx = (k * n_u + b) * w_rows + a;
                    out[(h_idx, w_idx)] = 1.0;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::svd;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ramp(n: usize) -> Mat {
        Mat::from_fn(1, n, |_, j| j as f64)
    }

    fn randn_mat(rng: &mut StdRng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
    }

    #[test]
    fn hankel_past_ramp() {
        let h = hankel(&ramp(4), 2, 3, 2, Direction::Past).unwrap();
        let expect = Mat::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 1.0, 2.0, 3.0]);
        assert_eq!(h.data, expect);
    }

    #[test]
    fn hankel_future_ramp() {
        let h = hankel(&ramp(4), 2, 2, 0, Direction::Future).unwrap();
        let expect = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 2.0]);
        assert_eq!(h.data, expect);
    }

    #[test]
    fn hankel_past_future_shift_identity() {
        // r_ell^-(t) = r_ell^+(t - ell)
        let mut rng = StdRng::seed_from_u64(2);
        let sig = randn_mat(&mut rng, 2, 20);
        for ell in 1..4 {
            for t0 in ell..10 {
                let past = hankel(&sig, ell, 5, t0, Direction::Past).unwrap();
                let fut = hankel(&sig, ell, 5, t0 - ell, Direction::Future).unwrap();
                assert_eq!(past.data, fut.data);
            }
        }
    }

    #[test]
    fn hankel_rejects_out_of_range() {
        assert!(matches!(
            hankel(&ramp(4), 2, 3, 1, Direction::Past),
            Err(SubidError::BadWindow(_))
        ));
        assert!(matches!(
            hankel(&ramp(4), 2, 4, 0, Direction::Future),
            Err(SubidError::BadWindow(_))
        ));
    }

    #[test]
    fn observability_examples() {
        let gamma = ext_observability(&Mat::identity(2, 2), &Mat::identity(2, 2), 2);
        assert_eq!(
            gamma,
            Mat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0])
        );

        let a = Mat::from_row_slice(1, 1, &[0.5]);
        let c = Mat::from_row_slice(1, 1, &[1.0]);
        let gamma = ext_observability(&a, &c, 3);
        assert_eq!(gamma, Mat::from_row_slice(3, 1, &[1.0, 0.5, 0.25]));
    }

    #[test]
    fn observability_full_rank_for_observable_systems() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..5 {
            let n_x = 3;
            let a = randn_mat(&mut rng, n_x, n_x) * 0.4;
            let c = randn_mat(&mut rng, 1, n_x);
            let gamma = ext_observability(&a, &c, n_x + 2);
            let dec = svd(&gamma).unwrap();
            assert_eq!(dec.rank(1e-8), n_x);
        }
    }

    #[test]
    fn controllability_examples() {
        let a = Mat::from_row_slice(1, 1, &[0.5]);
        let b = Mat::from_row_slice(1, 1, &[1.0]);
        assert_eq!(
            ext_controllability(&a, &b, 2),
            Mat::from_row_slice(1, 2, &[0.5, 1.0])
        );

        // nilpotent A: only the rightmost block survives
        let a = Mat::zeros(2, 2);
        let b = Mat::from_row_slice(2, 1, &[1.0, 2.0]);
        let omega = ext_controllability(&a, &b, 3);
        assert_eq!(
            omega,
            Mat::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0])
        );
    }

    #[test]
    fn controllability_matches_zero_state_rollout() {
        // Omega_ell(A, B) * u_ell^-(t) equals the state reached from
        // x(t - ell) = 0 under the inputs u(t-ell..t-1).
        let mut rng = StdRng::seed_from_u64(13);
        let a = randn_mat(&mut rng, 3, 3) * 0.3;
        let b = randn_mat(&mut rng, 3, 2);
        let ell = 4;
        let u = randn_mat(&mut rng, 2, ell);
        let mut x = Mat::zeros(3, 1);
        for t in 0..ell {
            x = &a * &x + &b * u.columns(t, 1);
        }
        let u_stack = Mat::from_fn(2 * ell, 1, |i, _| u[(i % 2, i / 2)]);
        let omega = ext_controllability(&a, &b, ell);
        assert!((&omega * &u_stack - &x).norm() < 1e-12);
    }

    #[test]
    fn toeplitz_examples() {
        let a = Mat::from_row_slice(1, 1, &[0.5]);
        let b = Mat::from_row_slice(1, 1, &[1.0]);
        let c = Mat::from_row_slice(1, 1, &[1.0]);
        let d = Mat::from_row_slice(1, 1, &[0.0]);
        assert_eq!(toeplitz_h(&a, &b, &c, &d, 1), Mat::zeros(1, 1));
        assert_eq!(
            toeplitz_h(&a, &b, &c, &d, 2),
            Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])
        );
    }

    #[test]
    fn duplication_selector_identity_for_f1() {
        let sel = duplication_selector(1, 2, 3);
        assert_eq!(sel, Mat::identity(6, 6));
    }

    #[test]
    fn duplication_selector_scalar_f2() {
        let sel = duplication_selector(2, 1, 1);
        // maps (d, cb) to vec([[d, 0], [cb, d]]) = (d, cb, 0, d)
        let expect = Mat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(sel, expect);
    }

    #[test]
    fn duplication_selector_matches_toeplitz() {
        let mut rng = StdRng::seed_from_u64(21);
        let (n_y, n_u, n_x, f) = (2, 2, 3, 3);
        let a = randn_mat(&mut rng, n_x, n_x);
        let b = randn_mat(&mut rng, n_x, n_u);
        let c = randn_mat(&mut rng, n_y, n_x);
        let d = randn_mat(&mut rng, n_y, n_u);

        let mut row = Mat::zeros(n_y, f * n_u);
        row.view_mut((0, 0), (n_y, n_u)).copy_from(&d);
        let mut cak = c.clone();
        for k in 1..f {
            row.view_mut((0, k * n_u), (n_y, n_u)).copy_from(&(&cak * &b));
            cak = &cak * &a;
        }

        let h = toeplitz_h(&a, &b, &c, &d, f);
        let sel = duplication_selector(f, n_y, n_u);
        let vec_row = Mat::from_column_slice(row.len(), 1, row.as_slice());
        let vec_h = Mat::from_column_slice(h.len(), 1, h.as_slice());
        // each selector row has at most a single one, so this is exact
        assert_eq!(&sel * vec_row, vec_h);
    }
}
