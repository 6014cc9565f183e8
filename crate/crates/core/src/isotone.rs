//! Isotonic least squares: pool-adjacent-violators, the max–min formula as a
//! reference oracle, the greatest convex minorant of the cumulative sums with
//! left derivatives, the left-continuous step estimator, and the localized
//! process used to read off the estimator's limit behavior.

use crate::num::Real;
use crate::{Error, Result};

/// A fitted monotone regression: `mu_hat` is the least-squares projection of
/// `y` onto nondecreasing sequences, `blocks` its level sets, `gcm_knots` the
/// indices (0-based, on the cumulative-sum diagram) where the greatest convex
/// minorant touches.
#[derive(Clone, Debug)]
pub struct IsotonicFit<T: Real> {
    pub y: Vec<T>,
    pub mu_hat: Vec<T>,
    /// `(start, end, level)` with `end` exclusive.
    pub blocks: Vec<(usize, usize, T)>,
    pub gcm_knots: Vec<usize>,
}

impl<T: Real> IsotonicFit<T> {
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Pool-adjacent-violators in one left-to-right pass with a block stack.
pub fn pava<T: Real>(y: &[T]) -> IsotonicFit<T> {
    assert!(!y.is_empty(), "pava needs at least one observation");
    // stack of (block sum, block length)
    let mut sums: Vec<T> = Vec::with_capacity(y.len());
    let mut lens: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y {
        sums.push(v);
        lens.push(1);
        while sums.len() > 1 {
            let k = sums.len();
            let mean_prev = sums[k - 2] / T::from_usize_(lens[k - 2]);
            let mean_last = sums[k - 1] / T::from_usize_(lens[k - 1]);
            if mean_prev <= mean_last {
                break;
            }
            let s = sums.pop().expect("nonempty");
            let l = lens.pop().expect("nonempty");
            *sums.last_mut().expect("nonempty") += s;
            *lens.last_mut().expect("nonempty") += l;
        }
    }
    let mut mu_hat = Vec::with_capacity(y.len());
    let mut blocks = Vec::with_capacity(sums.len());
    let mut knots = Vec::with_capacity(sums.len());
    let mut start = 0usize;
    for (s, l) in sums.into_iter().zip(lens) {
        let level = s / T::from_usize_(l);
        for _ in 0..l {
            mu_hat.push(level);
        }
        blocks.push((start, start + l, level));
        start += l;
        knots.push(start); // the minorant touches the diagram at block ends
    }
    IsotonicFit { y: y.to_vec(), mu_hat, blocks, gcm_knots: knots }
}

/// Direct evaluation of `mu_hat_k = max_{i<=k} min_{j>=k} mean(y_i..y_j)`
/// via prefix sums. Reference oracle, `O(n²)`, capped.
pub fn maxmin<T: Real>(y: &[T]) -> Result<IsotonicFit<T>> {
    const CAP: usize = 2000;
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidParameter("maxmin needs at least one observation".into()));
    }
    if n > CAP {
        return Err(Error::SizeCap { n, cap: CAP, what: "maxmin oracle (use pava)" });
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(T::zero());
    for &v in y {
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + v);
    }
    let avg = |i: usize, j: usize| (prefix[j + 1] - prefix[i]) / T::from_usize_(j - i + 1);

    let mut mu_hat = vec![T::neg_infinity(); n];
    // for each anchor i: m(i, k) = min_{j >= k} avg(i, j), folded downward in k
    for i in 0..n {
        let mut min_from = T::infinity();
        for k in (i..n).rev() {
            min_from = min_from.min(avg(i, k));
            if min_from > mu_hat[k] {
                mu_hat[k] = min_from;
            }
        }
    }
    let mut blocks = Vec::new();
    let mut knots = Vec::new();
    let mut start = 0usize;
    for k in 1..=n {
        if k == n || mu_hat[k] != mu_hat[start] {
            blocks.push((start, k, mu_hat[start]));
            knots.push(k);
            start = k;
        }
    }
    Ok(IsotonicFit { y: y.to_vec(), mu_hat, blocks, gcm_knots: knots })
}

/// Greatest convex minorant of points with strictly increasing `x`: minorant
/// values at the input abscissae, left derivatives, and the touch indices.
pub struct Gcm<T: Real> {
    pub minorant: Vec<T>,
    /// Left derivative at `x_k` for `k >= 1` (slope of the hull segment
    /// ending at or covering `x_k`); `left_deriv[0]` repeats the first slope.
    pub left_deriv: Vec<T>,
    pub touch: Vec<usize>,
}

pub fn gcm<T: Real>(x: &[T], y: &[T]) -> Result<Gcm<T>> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidParameter("gcm needs >= 2 points with matching lengths".into()));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("gcm abscissae must be strictly increasing".into()));
    }
    // lower convex hull via a monotone stack of indices; ties in slope keep
    // the earlier touch point
    let mut hull: Vec<usize> = vec![0];
    for k in 1..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let s_ab = (y[b] - y[a]) / (x[b] - x[a]);
            let s_ak = (y[k] - y[a]) / (x[k] - x[a]);
            if s_ak < s_ab {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut minorant = vec![T::zero(); n];
    let mut left_deriv = vec![T::zero(); n];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (y[b] - y[a]) / (x[b] - x[a]);
        for k in a..=b {
            if k > a || a == 0 {
                left_deriv[k] = slope;
            }
            minorant[k] = y[a] + slope * (x[k] - x[a]);
        }
    }
    Ok(Gcm { minorant, left_deriv, touch: hull })
}

/// The isotonic fit read off as the left derivative of the GCM of the
/// cumulative-sum diagram `(k, y_1 + … + y_k)`, `k = 0, …, n`.
pub fn fit_via_gcm<T: Real>(y: &[T]) -> Result<Vec<T>> {
    let n = y.len();
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut acc = T::zero();
    xs.push(T::zero());
    ys.push(T::zero());
    for (k, &v) in y.iter().enumerate() {
        acc += v;
        xs.push(T::from_usize_(k + 1));
        ys.push(acc);
    }
    let g = gcm(&xs, &ys)?;
    Ok(g.left_deriv[1..].to_vec())
}

/// The left-continuous step estimator at `t ∈ (0, 1]`: value `mu_hat_k` on
/// `((k-1)/n, k/n]`, i.e. `mu_hat_{ceil(n t)}`.
pub fn fit_phi_hat<T: Real>(fit: &IsotonicFit<T>, t_eval: T) -> T {
    let n = fit.n();
    debug_assert!(t_eval > T::zero() && t_eval <= T::one());
    let k = (T::from_usize_(n) * t_eval).ceil().to_f64_() as usize;
    fit.mu_hat[k.clamp(1, n) - 1]
}

/// The localized cumulative-sum process
/// `Z_n(s) = d_n^{-2} (Y_n(t + d_n s) - Y_n(t) - phi_t d_n s)` on `s_grid`,
/// where `Y_n(u) = n^{-1} Σ_{k<=[nu]} y_k`, together with the left derivative
/// at `s = 0` of its GCM, which reproduces `d_n^{-1}(phi_hat_n(t) - phi_t)`.
pub struct LocalProcess<T: Real> {
    pub s_grid: Vec<T>,
    pub z: Vec<T>,
    pub gcm_left_deriv_at_zero: T,
}

pub fn local_process<T: Real>(
    y: &[T],
    t: T,
    d_n: T,
    phi_t: T,
    s_grid: &[T],
) -> Result<LocalProcess<T>> {
    let n = y.len();
    let nf = T::from_usize_(n);
    for &s in s_grid {
        let u = t + d_n * s;
        if u < T::zero() || u > T::one() {
            return Err(Error::InvalidParameter(format!(
                "local grid escapes [0,1]: t + d_n s = {}",
                u.to_f64_()
            )));
        }
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(T::zero());
    for &v in y {
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + v);
    }
    let y_n = |u: T| prefix[((nf * u).floor().to_f64_() as usize).min(n)] / nf;
    let y_t = y_n(t);
    let z_of = |s: T| (y_n(t + d_n * s) - y_t - phi_t * d_n * s) / (d_n * d_n);
    let z: Vec<T> = s_grid.iter().map(|&s| z_of(s)).collect();

    // GCM route on the full natural grid s_k = (k/n - t)/d_n: its left
    // derivative at s = 0 must reproduce d_n^{-1}(phi_hat_n(t) - phi_t)
    let sk: Vec<T> = (0..=n)
        .map(|k| (T::from_usize_(k) / nf - t) / d_n)
        .collect();
    // evaluate on the knots through the prefix array directly so no floor
    // round-trip can land one knot off
    let zk: Vec<T> = (0..=n)
        .map(|k| (prefix[k] / nf - y_t - phi_t * d_n * sk[k]) / (d_n * d_n))
        .collect();
    let g = gcm(&sk, &zk)?;
    let k0 = ((nf * t).ceil().to_f64_() as usize).clamp(1, n);
    let deriv = g.left_deriv[k0];

    let fit = pava(y);
    let direct = (fit_phi_hat(&fit, t) - phi_t) / d_n;
    let tol = T::from_f64_(1e-9) * T::one().max(direct.abs());
    if (deriv - direct).abs() > tol {
        return Err(Error::Numerical(format!(
            "localized GCM derivative {} disagrees with the step-function route {}",
            deriv.to_f64_(),
            direct.to_f64_()
        )));
    }
    Ok(LocalProcess { s_grid: s_grid.to_vec(), z, gcm_left_deriv_at_zero: deriv })
}
