//! The bandwidth rate machinery for the isotonic limit theorems: from the
//! slowly varying factor `h` in `v_n² ~ n^β h(n)`, build
//! `L(x) = h(x^{2/(4-β)})^{-1/2}`, its asymptotic conjugate `L*` solving
//! `L*(x) L(x L*(x)) = 1`, and the rate `d_n = n^{-(2-β)/(4-β)} ℓ(n)` with
//! `ℓ(n) = (L*(n))^{2/(4-β)}`, plus the constants standing in front of the
//! limit laws.

use crate::num::Real;
use crate::{Error, Result};

/// Slowly varying factor `h(n)`.
#[derive(Clone, Debug)]
pub enum HRule<T: Real> {
    Const(T),
    /// `h(x) = scale · (ln x)^exponent` (guarded below `x = e`).
    LogPower { scale: T, exponent: T },
    /// Piecewise-linear in `(ln x, ln h)` through measured points, with flat
    /// extrapolation; lets a measured normalizer sequence drive the schedule.
    Interp { ln_x: Vec<T>, ln_h: Vec<T> },
}

impl<T: Real> HRule<T> {
    pub fn from_samples(points: &[(usize, T)]) -> Self {
        let ln_x = points.iter().map(|(n, _)| T::from_usize_(*n).ln()).collect();
        let ln_h = points.iter().map(|(_, h)| h.ln()).collect();
        HRule::Interp { ln_x, ln_h }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            HRule::Const(c) => *c,
            HRule::LogPower { scale, exponent } => {
                *scale * x.max(T::from_f64_(std::f64::consts::E)).ln().powf(*exponent)
            }
            HRule::Interp { ln_x, ln_h } => {
                let lx = x.max(T::from_f64_(1.0)).ln();
                let k = ln_x.len();
                if lx <= ln_x[0] {
                    return ln_h[0].exp();
                }
                if lx >= ln_x[k - 1] {
                    return ln_h[k - 1].exp();
                }
                let i = ln_x.iter().position(|v| *v > lx).expect("inside the range") - 1;
                let w = (lx - ln_x[i]) / (ln_x[i + 1] - ln_x[i]);
                (ln_h[i] + w * (ln_h[i + 1] - ln_h[i])).exp()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            HRule::Const(c) => format!("h = {c}"),
            HRule::LogPower { scale, exponent } => format!("h(n) = {scale} (ln n)^{exponent}"),
            HRule::Interp { ln_x, .. } => format!("h interpolated through {} points", ln_x.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct RatePoint<T: Real> {
    pub n: usize,
    pub l_at_n: T,
    pub l_star: T,
    pub ell: T,
    pub d_n: T,
    /// `|L*(n) · L(n L*(n)) - 1|` at the accepted fixed point.
    pub residual: T,
    pub iterations: usize,
}

/// The rate schedule over an evaluation grid.
#[derive(Clone, Debug)]
pub struct RateSchedule<T: Real> {
    pub beta: T,
    pub h_desc: String,
    pub points: Vec<RatePoint<T>>,
}

impl<T: Real> RateSchedule<T> {
    pub fn d_at(&self, n: usize) -> Option<T> {
        self.points.iter().find(|p| p.n == n).map(|p| p.d_n)
    }
}

fn l_of<T: Real>(h: &HRule<T>, beta: T, x: T) -> T {
    let e = T::from_f64_(2.0) / (T::from_f64_(4.0) - beta);
    h.eval(x.powf(e)).sqrt().recip()
}

/// Solve `x = 1/L(n x)` by fixed-point iteration from `x = 1`, relative
/// tolerance `1e-10`, at most 200 iterations; the residual
/// `|x L(n x) - 1| ≤ 1e-8` is enforced at every accepted point.
pub fn rate_schedule<T: Real>(beta: T, h: &HRule<T>, n_grid: &[usize]) -> Result<RateSchedule<T>> {
    if !(beta > T::zero() && beta <= T::from_f64_(2.0)) {
        return Err(Error::InvalidParameter("beta must lie in (0, 2]".into()));
    }
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let nf = T::from_usize_(n);
        if h.eval(nf) <= T::zero() {
            return Err(Error::InvalidParameter("h must be positive on the grid".into()));
        }
        let mut x = T::one();
        let mut iterations = 0;
        let tol = T::from_f64_(1e-10);
        loop {
            let next = l_of(h, beta, nf * x).recip();
            iterations += 1;
            let done = (next - x).abs() <= tol * next.abs().max(T::one());
            x = next;
            if done {
                break;
            }
            if iterations >= 200 {
                let residual = (x * l_of(h, beta, nf * x) - T::one()).abs();
                return Err(Error::FixedPointDiverged {
                    residual: residual.to_f64_(),
                    iters: iterations,
                });
            }
        }
        let residual = (x * l_of(h, beta, nf * x) - T::one()).abs();
        if residual > T::from_f64_(1e-8) {
            return Err(Error::FixedPointDiverged {
                residual: residual.to_f64_(),
                iters: iterations,
            });
        }
        let exp_ell = T::from_f64_(2.0) / (T::from_f64_(4.0) - beta);
        let ell = x.powf(exp_ell);
        let rate_exp = (T::from_f64_(2.0) - beta) / (T::from_f64_(4.0) - beta);
        points.push(RatePoint {
            n,
            l_at_n: l_of(h, beta, nf),
            l_star: x,
            ell,
            d_n: ell / nf.powf(rate_exp),
            residual,
            iterations,
        });
    }
    Ok(RateSchedule { beta, h_desc: h.describe(), points })
}

/// `d_n → 0` and `n d_n → ∞` along the grid, checked numerically.
pub fn rate_is_admissible<T: Real>(schedule: &RateSchedule<T>) -> bool {
    let d: Vec<T> = schedule.points.iter().map(|p| p.d_n).collect();
    let nd: Vec<T> = schedule
        .points
        .iter()
        .map(|p| T::from_usize_(p.n) * p.d_n)
        .collect();
    d.windows(2).all(|w| w[1] < w[0]) && nd.windows(2).all(|w| w[1] > w[0])
}

/// The calibration trajectory `d_n^{-2} n^{-1} m_{[n d_n]}` that must drift
/// to 1 for the localized limit to hold; `m_fn` supplies the normalizer
/// sequence (e.g. measured `v_k`).
pub fn calibration_trajectory<T: Real>(
    schedule: &RateSchedule<T>,
    mut m_fn: impl FnMut(usize) -> T,
) -> Vec<(usize, T)> {
    schedule
        .points
        .iter()
        .map(|p| {
            let nf = T::from_usize_(p.n);
            let k = (nf * p.d_n).floor().to_f64_() as usize;
            let m = m_fn(k.max(1));
            (p.n, m / (p.d_n * p.d_n * nf))
        })
        .collect()
}

/// Constant in front of the short-memory limit, `2 (½ A² φ'(t))^{1/3}`.
pub fn kappa_short_memory<T: Real>(phi_prime: T, a: T) -> Result<T> {
    guard_phi(phi_prime)?;
    let half = T::from_f64_(0.5);
    Ok(T::from_f64_(2.0) * (half * a * a * phi_prime).powf(T::one() / T::from_f64_(3.0)))
}

/// Constant for the `β = 1` normalized case, `2 (½ φ'(t))^{1/3}`.
pub fn kappa_unit_beta<T: Real>(phi_prime: T) -> Result<T> {
    guard_phi(phi_prime)?;
    let half = T::from_f64_(0.5);
    Ok(T::from_f64_(2.0) * (half * phi_prime).powf(T::one() / T::from_f64_(3.0)))
}

/// Constant for general regular variation, `2 (φ'(t)/2)^{(2-β)/(4-β)}`.
pub fn kappa_beta<T: Real>(phi_prime: T, beta: T) -> Result<T> {
    guard_phi(phi_prime)?;
    if !(beta > T::zero() && beta <= T::from_f64_(2.0)) {
        return Err(Error::InvalidParameter("beta must lie in (0, 2]".into()));
    }
    let e = (T::from_f64_(2.0) - beta) / (T::from_f64_(4.0) - beta);
    Ok(T::from_f64_(2.0) * (phi_prime / T::from_f64_(2.0)).powf(e))
}

/// Same constant parameterized by the Hurst index,
/// `2 (φ'(t)/2)^{(1-H)/(2-H)}`.
pub fn kappa_hurst<T: Real>(phi_prime: T, h: T) -> Result<T> {
    guard_phi(phi_prime)?;
    if !(h > T::zero() && h < T::one()) {
        return Err(Error::InvalidParameter("Hurst index must lie in (0, 1)".into()));
    }
    let e = (T::one() - h) / (T::from_f64_(2.0) - h);
    Ok(T::from_f64_(2.0) * (phi_prime / T::from_f64_(2.0)).powf(e))
}

fn guard_phi<T: Real>(phi_prime: T) -> Result<()> {
    if phi_prime <= T::zero() {
        return Err(Error::InvalidParameter("phi'(t) must be positive".into()));
    }
    Ok(())
}
