//! Lawson-Hanson nonnegative least squares for the small dense systems of
//! the threshold-mixture fit.

use nalgebra::{DMatrix, DVector};

const TOL: f64 = 1e-12;

/// Minimizes `|A x - b|` subject to `x >= 0`.
///
/// When several inactive columns tie for the steepest gradient, the one
/// with the smallest `tie_rank` enters first; this pins down the solution
/// when `A` has duplicate columns.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, tie_rank: &[u64]) -> DVector<f64> {
    let cols = a.ncols();
    debug_assert_eq!(tie_rank.len(), cols);
    let mut x = DVector::zeros(cols);
    let mut active = vec![false; cols];

    for _ in 0..3 * cols + 10 {
        let w = a.transpose() * (b - a * &x);
        let best = (0..cols)
            .filter(|&j| !active[j])
            .map(|j| w[j])
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_nan() || best <= TOL {
            break;
        }
        let enter = (0..cols)
            .filter(|&j| !active[j] && w[j] >= best - TOL)
            .min_by_key(|&j| tie_rank[j])
            .expect("at least one column attains the max");
        active[enter] = true;

        loop {
            let z = solve_on(a, b, &active);
            let blocking: Vec<usize> = (0..cols).filter(|&j| active[j] && z[j] <= TOL).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (&z - &x) * alpha;
            for j in 0..cols {
                if active[j] && x[j] <= TOL {
                    active[j] = false;
                    x[j] = 0.0;
                }
            }
            if !active.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Unconstrained least squares restricted to the active columns; inactive
/// entries of the result are zero.
fn solve_on(a: &DMatrix<f64>, b: &DVector<f64>, active: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..active.len()).filter(|&j| active[j]).collect();
    let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
    let sol = sub
        .svd(true, true)
        .solve(b, TOL)
        .expect("SVD computed with U and V");
    let mut out = DVector::zeros(active.len());
    for (c, &j) in idx.iter().enumerate() {
        out[j] = sol[c];
    }
    out
}
