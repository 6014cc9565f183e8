//! Stationary innovation models: iid noise, causal linear filters of Gaussian
//! noise, and functions of a finite Markov chain started at stationarity.
//!
//! The three families are chosen because the projections
//! `P_0(ξ_j) = E(ξ_j|F_0) - E(ξ_j|F_{-1})` have closed forms, so weak
//! dependence conditions become machine-checkable numbers instead of
//! assumptions. Each model also constructs the coupled martingale differences
//! `d_j = Σ_ℓ P_j(ξ_ℓ)` from the same underlying randomness as the sample.

use crate::num::Kahan;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use statrs::function::gamma::ln_gamma;

/// Coefficients of a causal linear filter over Gaussian noise.
#[derive(Clone, Debug)]
pub enum ThetaSeq {
    /// `θ_m = ratio^m`, `|ratio| < 1`.
    Geometric { ratio: f64 },
    /// Finitely many coefficients at `m = 0, …, len-1`.
    Finite(Vec<f64>),
}

impl ThetaSeq {
    fn value(&self, m: usize) -> f64 {
        match self {
            ThetaSeq::Geometric { ratio } => ratio.powi(m as i32),
            ThetaSeq::Finite(v) => v.get(m).copied().unwrap_or(0.0),
        }
    }

    /// Effective support: geometric filters are cut where the squared tail
    /// falls below 1e-30 of the total.
    fn effective_len(&self) -> usize {
        match self {
            ThetaSeq::Geometric { ratio } => {
                let r2 = ratio * ratio;
                ((1e-30f64.ln() / r2.ln()).ceil() as usize).max(4)
            }
            ThetaSeq::Finite(v) => v.len(),
        }
    }

    fn sum(&self) -> f64 {
        match self {
            ThetaSeq::Geometric { ratio } => 1.0 / (1.0 - ratio),
            ThetaSeq::Finite(v) => v.iter().sum(),
        }
    }

    /// `Σ_{m≥n} θ_m²` (exact for both shapes).
    fn sq_tail(&self, n: usize) -> f64 {
        match self {
            ThetaSeq::Geometric { ratio } => {
                let r2 = ratio * ratio;
                r2.powi(n as i32) / (1.0 - r2)
            }
            ThetaSeq::Finite(v) => v.iter().skip(n).map(|t| t * t).sum(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum InnovationKind {
    IidGaussian { sigma: f64 },
    /// Student t with `ν > 4`, rescaled to unit variance so that fourth
    /// moments exist with room to spare.
    IidStudentT { nu: f64 },
    CausalLinear { theta: ThetaSeq, sigma: f64 },
    MarkovFunctional,
}

/// A stationary innovation model with closed-form projection norms.
#[derive(Clone, Debug)]
pub struct InnovationModel {
    kind: InnovationKind,
    moment_order_max: f64,
    markov: Option<MarkovData>,
}

/// Precomputed Markov quantities: stationary law, Poisson solution
/// `(I - P)h = f` on the zero-mean subspace, `Ph`, and per-row cumulative
/// transition probabilities for sampling.
#[derive(Clone, Debug)]
struct MarkovData {
    p: DMatrix<f64>,
    f: DVector<f64>,
    pi: DVector<f64>,
    h: DVector<f64>,
    ph: DVector<f64>,
    cum_rows: Vec<Vec<f64>>,
    cum_pi: Vec<f64>,
}

/// Sampled innovations on `j ∈ [j_lo, j_hi]`, optionally with the coupled
/// martingale differences, plus the generating randomness for conditional
/// diagnostics.
#[derive(Clone, Debug)]
pub struct InnovWindow {
    pub j_lo: i64,
    pub xi: Vec<f64>,
    pub md: Option<Vec<f64>>,
    pub driver: Driver,
}

/// The raw randomness behind a sampled window.
#[derive(Clone, Debug)]
pub enum Driver {
    None,
    /// Gaussian noise `ε_j` aligned with the window (`eps[k] = ε_{j_lo+k}`).
    Eps(Vec<f64>),
    /// Chain states including the pre-window state
    /// (`states[k] = Y_{j_lo-1+k}`).
    States(Vec<usize>),
}

impl InnovWindow {
    #[inline]
    pub fn xi_at(&self, j: i64) -> f64 {
        self.xi[(j - self.j_lo) as usize]
    }
}

/// `(E|Z|^q)^{1/q}` for a standard Gaussian.
pub fn gaussian_abs_norm(q: f64) -> f64 {
    let log_moment = 0.5 * q * 2f64.ln() + ln_gamma((q + 1.0) / 2.0) - ln_gamma(0.5);
    (log_moment / q).exp()
}

/// `(E|T_ν|^q)^{1/q}` for Student t with `ν` degrees of freedom (`q < ν`).
fn student_abs_norm(nu: f64, q: f64) -> f64 {
    let log_moment = 0.5 * q * nu.ln() + ln_gamma((q + 1.0) / 2.0) + ln_gamma((nu - q) / 2.0)
        - ln_gamma(0.5)
        - ln_gamma(nu / 2.0);
    (log_moment / q).exp()
}

impl InnovationModel {
    pub fn iid_gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        Ok(InnovationModel {
            kind: InnovationKind::IidGaussian { sigma },
            moment_order_max: f64::INFINITY,
            markov: None,
        })
    }

    pub fn iid_student_t(nu: f64) -> Result<Self> {
        if !(nu > 4.0) {
            return Err(Error::InvalidParameter("StudentT requires nu > 4".into()));
        }
        Ok(InnovationModel {
            kind: InnovationKind::IidStudentT { nu },
            moment_order_max: nu - 0.01,
            markov: None,
        })
    }

    pub fn causal_linear(theta: ThetaSeq, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        if let ThetaSeq::Geometric { ratio } = theta {
            if ratio.abs() >= 1.0 {
                return Err(Error::InvalidParameter("geometric filter needs |ratio| < 1".into()));
            }
        }
        Ok(InnovationModel {
            kind: InnovationKind::CausalLinear { theta, sigma },
            moment_order_max: f64::INFINITY,
            markov: None,
        })
    }

    /// A function `f` of an irreducible aperiodic chain with row-stochastic
    /// `transition`, started from the stationary law. `f` is centered against
    /// the stationary law at construction; the Poisson equation
    /// `(I - P)h = f` is solved through the fundamental matrix with residual
    /// tolerance `1e-12`.
    pub fn markov_functional(transition: DMatrix<f64>, f: DVector<f64>) -> Result<Self> {
        let m = transition.nrows();
        if m < 2 || transition.ncols() != m || f.len() != m {
            return Err(Error::InvalidParameter("transition must be square and match f".into()));
        }
        for r in 0..m {
            let row_sum: f64 = transition.row(r).iter().sum();
            if (row_sum - 1.0).abs() > 1e-12 || transition.row(r).iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidParameter("transition must be row-stochastic".into()));
            }
        }
        // irreducibility + aperiodicity: some power of P must be strictly
        // positive (primitivity)
        let mut pk = transition.clone();
        let mut all_positive = pk.iter().all(|p| *p > 0.0);
        for _ in 0..(2 * m * m) {
            if all_positive {
                break;
            }
            pk = &pk * &transition;
            all_positive = pk.iter().all(|p| *p > 1e-300);
        }
        if !all_positive {
            return Err(Error::InvalidParameter(
                "transition matrix is reducible or periodic; Poisson equation unsolvable".into(),
            ));
        }

        // stationary law: solve πᵀ(P - I) = 0 with Σπ = 1
        let mut a = (transition.clone() - DMatrix::identity(m, m)).transpose();
        for c in 0..m {
            a[(m - 1, c)] = 1.0;
        }
        let mut rhs = DVector::zeros(m);
        rhs[m - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("stationary law solve failed".into()))?;

        let mean = pi.dot(&f);
        let f: DVector<f64> = f.map(|v| v - mean);

        let ones = DVector::<f64>::from_element(m, 1.0);
        let z = DMatrix::identity(m, m) - &transition + &ones * pi.transpose();
        let h = z
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Numerical("Poisson equation solve failed".into()))?;
        let ph = &transition * &h;
        let residual = (&h - &ph - &f).amax();
        if residual > 1e-12 {
            return Err(Error::Numerical(format!(
                "Poisson equation residual {residual:.3e} exceeds 1e-12"
            )));
        }

        let cum = |it: &mut dyn Iterator<Item = f64>| -> Vec<f64> {
            it.scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
        };
        let cum_rows: Vec<Vec<f64>> = (0..m)
            .map(|r| cum(&mut transition.row(r).iter().copied()))
            .collect();
        let cum_pi = cum(&mut pi.iter().copied());

        Ok(InnovationModel {
            kind: InnovationKind::MarkovFunctional,
            moment_order_max: f64::INFINITY,
            markov: Some(MarkovData { p: transition, f, pi, h, ph, cum_rows, cum_pi }),
        })
    }

    /// The standard two-state example: stay probability `stay`, observable
    /// `f = (1, -1)`.
    pub fn two_state(stay: f64) -> Result<Self> {
        let p = DMatrix::from_row_slice(2, 2, &[stay, 1.0 - stay, 1.0 - stay, stay]);
        Self::markov_functional(p, DVector::from_column_slice(&[1.0, -1.0]))
    }

    pub fn kind(&self) -> &InnovationKind {
        &self.kind
    }

    pub fn moment_order_max(&self) -> f64 {
        self.moment_order_max
    }

    fn markov(&self) -> &MarkovData {
        self.markov.as_ref().expect("markov data present for MarkovFunctional")
    }

    /// Marginal second moment `E ξ_0²`.
    pub fn xi_variance(&self) -> f64 {
        match &self.kind {
            InnovationKind::IidGaussian { sigma } => sigma * sigma,
            InnovationKind::IidStudentT { .. } => 1.0,
            InnovationKind::CausalLinear { theta, sigma } => sigma * sigma * theta.sq_tail(0),
            InnovationKind::MarkovFunctional => {
                let md = self.markov();
                md.pi.iter().zip(md.f.iter()).map(|(p, f)| p * f * f).sum()
            }
        }
    }

    /// Sample `ξ_j` for `j ∈ [j_lo, j_hi]` from the stationary law, with the
    /// martingale differences when requested.
    pub fn sample_window<R: Rng + ?Sized>(
        &self,
        j_lo: i64,
        j_hi: i64,
        rng: &mut R,
        with_md: bool,
    ) -> InnovWindow {
        assert!(j_lo <= j_hi);
        let w = (j_hi - j_lo + 1) as usize;
        match &self.kind {
            InnovationKind::IidGaussian { sigma } => {
                let xi: Vec<f64> =
                    (0..w).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
                let md = with_md.then(|| xi.clone());
                InnovWindow { j_lo, xi, md, driver: Driver::None }
            }
            InnovationKind::IidStudentT { nu } => {
                let scale = ((nu - 2.0) / nu).sqrt();
                let t = StudentT::new(*nu).expect("validated at construction");
                let xi: Vec<f64> = (0..w).map(|_| scale * t.sample(rng)).collect();
                let md = with_md.then(|| xi.clone());
                InnovWindow { j_lo, xi, md, driver: Driver::None }
            }
            InnovationKind::CausalLinear { theta, sigma } => {
                let len = theta.effective_len();
                let eps: Vec<f64> = (0..w + len - 1)
                    .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                // eps[0] corresponds to ε_{j_lo-(len-1)}
                let coeffs: Vec<f64> = (0..len).map(|m| theta.value(m)).collect();
                let mut xi = vec![0.0; w];
                for (k, x) in xi.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (m, c) in coeffs.iter().enumerate() {
                        acc += c * eps[k + len - 1 - m];
                    }
                    *x = acc;
                }
                let md = with_md.then(|| {
                    let a = theta.sum();
                    (0..w).map(|k| a * eps[k + len - 1]).collect()
                });
                InnovWindow { j_lo, xi, md, driver: Driver::Eps(eps[len - 1..].to_vec()) }
            }
            InnovationKind::MarkovFunctional => {
                let md = self.markov();
                let pick = |cum: &[f64], u: f64| cum.iter().position(|c| u <= *c).unwrap_or(cum.len() - 1);
                let mut states = Vec::with_capacity(w + 1);
                states.push(pick(&md.cum_pi, rng.random::<f64>()));
                for _ in 0..w {
                    let prev = *states.last().expect("nonempty");
                    states.push(pick(&md.cum_rows[prev], rng.random::<f64>()));
                }
                let xi: Vec<f64> = states[1..].iter().map(|&s| md.f[s]).collect();
                let mdiff = with_md.then(|| {
                    (1..=w).map(|k| md.h[states[k]] - md.ph[states[k - 1]]).collect()
                });
                InnovWindow { j_lo, xi, md: mdiff, driver: Driver::States(states) }
            }
        }
    }

    /// Closed-form `‖P_0(ξ_j)‖_q`.
    pub fn projection_norm(&self, j: i64, q: f64) -> Result<f64> {
        if q > self.moment_order_max {
            return Err(Error::MomentOrderExceeded { q, max_q: self.moment_order_max });
        }
        Ok(match &self.kind {
            InnovationKind::IidGaussian { sigma } => {
                if j == 0 {
                    sigma * gaussian_abs_norm(q)
                } else {
                    0.0
                }
            }
            InnovationKind::IidStudentT { nu } => {
                if j == 0 {
                    ((nu - 2.0) / nu).sqrt() * student_abs_norm(*nu, q)
                } else {
                    0.0
                }
            }
            InnovationKind::CausalLinear { theta, sigma } => {
                if j < 0 {
                    0.0
                } else {
                    theta.value(j as usize).abs() * sigma * gaussian_abs_norm(q)
                }
            }
            InnovationKind::MarkovFunctional => {
                if j < 0 {
                    return Ok(0.0);
                }
                // P_0(ξ_j) = (P^j f)(Y_0) - (P^{j+1} f)(Y_{-1})
                let md = self.markov();
                let gj = self.p_power_f(j as usize);
                let gj1 = &md.p * &gj;
                let m = md.p.nrows();
                let mut acc = 0.0;
                for y_prev in 0..m {
                    for y0 in 0..m {
                        let w = md.pi[y_prev] * md.p[(y_prev, y0)];
                        acc += w * (gj[y0] - gj1[y_prev]).abs().powf(q);
                    }
                }
                acc.powf(1.0 / q)
            }
        })
    }

    fn p_power_f(&self, j: usize) -> DVector<f64> {
        let md = self.markov();
        let mut g = md.f.clone();
        for _ in 0..j {
            g = &md.p * &g;
        }
        g
    }

    /// Closed-form `‖E(ξ_n|F_0)‖_q` for `n ≥ 1`.
    pub fn cond_mean_norm(&self, n: usize, q: f64) -> Result<f64> {
        if q > self.moment_order_max {
            return Err(Error::MomentOrderExceeded { q, max_q: self.moment_order_max });
        }
        Ok(match &self.kind {
            InnovationKind::IidGaussian { .. } | InnovationKind::IidStudentT { .. } => 0.0,
            InnovationKind::CausalLinear { theta, sigma } => {
                // E(ξ_n|F_0) = Σ_{m≥n} θ_m ε_{n-m} is Gaussian
                sigma * theta.sq_tail(n).sqrt() * gaussian_abs_norm(q)
            }
            InnovationKind::MarkovFunctional => {
                let md = self.markov();
                let g = self.p_power_f(n);
                md.pi
                    .iter()
                    .zip(g.iter())
                    .map(|(p, v)| p * v.abs().powf(q))
                    .sum::<f64>()
                    .powf(1.0 / q)
            }
        })
    }

    /// `‖ξ_{-n} - E(ξ_{-n}|F_0)‖_q`; identically zero for the adapted
    /// built-ins (`ξ_{-n}` is `F_0`-measurable).
    pub fn nonadapted_norm(&self, _n: usize, _q: f64) -> f64 {
        0.0
    }

    /// The long-run parameter `η = E d_0²` in closed form.
    pub fn eta(&self) -> f64 {
        match &self.kind {
            InnovationKind::IidGaussian { sigma } => sigma * sigma,
            InnovationKind::IidStudentT { .. } => 1.0,
            InnovationKind::CausalLinear { theta, sigma } => {
                let a = theta.sum();
                a * a * sigma * sigma
            }
            InnovationKind::MarkovFunctional => {
                // E d² with d = h(Y_0) - (Ph)(Y_{-1})
                let md = self.markov();
                let m = md.p.nrows();
                let mut acc = 0.0;
                for y_prev in 0..m {
                    for y0 in 0..m {
                        let w = md.pi[y_prev] * md.p[(y_prev, y0)];
                        let d = md.h[y0] - md.ph[y_prev];
                        acc += w * d * d;
                    }
                }
                acc
            }
        }
    }

    /// Independent route to `η`: the covariance series
    /// `Σ_k Cov(ξ_0, ξ_k)` summed numerically with a geometric tail cutoff.
    /// Shares no code with the Poisson-equation route.
    pub fn eta_via_covariance_series(&self) -> f64 {
        let var = self.xi_variance();
        match &self.kind {
            InnovationKind::IidGaussian { .. } | InnovationKind::IidStudentT { .. } => var,
            InnovationKind::CausalLinear { .. } => {
                let mut acc = Kahan::new();
                acc.add(var);
                let mut k = 1usize;
                loop {
                    let c = self.autocovariance(k);
                    acc.add(2.0 * c);
                    if c.abs() < 1e-16 * acc.value().abs().max(1.0) || k > 100_000 {
                        break;
                    }
                    k += 1;
                }
                acc.value()
            }
            InnovationKind::MarkovFunctional => {
                let md = self.markov();
                let mut acc = Kahan::new();
                acc.add(var);
                let mut g = md.f.clone();
                for _ in 0..10_000 {
                    g = &md.p * &g;
                    let c: f64 = md.pi.iter().zip(md.f.iter()).zip(g.iter()).map(
                        |((p, f), gv)| p * f * gv,
                    )
                    .sum();
                    acc.add(2.0 * c);
                    if g.amax() < 1e-16 {
                        break;
                    }
                }
                acc.value()
            }
        }
    }

    /// `Cov(ξ_0, ξ_k)`.
    pub fn autocovariance(&self, k: usize) -> f64 {
        match &self.kind {
            InnovationKind::IidGaussian { sigma } => {
                if k == 0 {
                    sigma * sigma
                } else {
                    0.0
                }
            }
            InnovationKind::IidStudentT { .. } => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            InnovationKind::CausalLinear { theta, sigma } => {
                let len = theta.effective_len();
                let s: f64 = (0..len).map(|m| theta.value(m) * theta.value(m + k)).sum();
                sigma * sigma * s
            }
            InnovationKind::MarkovFunctional => {
                let md = self.markov();
                let g = self.p_power_f(k);
                md.pi.iter().zip(md.f.iter()).zip(g.iter()).map(|((p, f), gv)| p * f * gv).sum()
            }
        }
    }
}

/// Partial sum of a lag-indexed series with its tail bound.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SeriesReport {
    pub id: &'static str,
    pub partial_sum: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
    pub finite: bool,
}

/// Numeric report on the projection-norm series that drive the weak
/// dependence conditions, plus the series-comparison inequality checked on
/// the truncated data (`Σ b_n u_n ≤ C_q Σ b_n ((1/n) Σ_{k≥n} u_k^q)^{1/q}`).
#[derive(Clone, Debug, serde::Serialize)]
pub struct ProjectionReport {
    pub q: f64,
    pub lags: Vec<i64>,
    pub proj_norms: Vec<f64>,
    pub series: Vec<SeriesReport>,
    /// `(weight id, lhs, C_q · rhs, holds)` for weights `b_n ∈ {1, ln(n+1)}`.
    pub series_inequalities: Vec<(String, f64, f64, bool)>,
}

impl InnovationModel {
    /// Evaluate the dependence-condition series for this model at order `q`.
    pub fn condition_series(&self, q: f64) -> Result<ProjectionReport> {
        let max_lag = 256usize;
        let lags: Vec<i64> = (0..=max_lag as i64).collect();
        let proj_norms: Vec<f64> =
            lags.iter().map(|&j| self.projection_norm(j, q)).collect::<Result<_>>()?;

        let geom_tail = |terms: &[f64]| -> f64 {
            // observed geometric decay ratio over the last stretch
            let k = terms.len();
            if k < 8 {
                return 0.0;
            }
            let a = terms[k - 5..].iter().sum::<f64>() / 5.0;
            let b = terms[k - 10..k - 5].iter().sum::<f64>() / 5.0;
            if a <= 0.0 || b <= 0.0 {
                return 0.0;
            }
            let r = (a / b).powf(0.2).min(0.999);
            terms[k - 1] * r / (1.0 - r)
        };

        let mut series = Vec::new();
        let mut push_series = |id: &'static str, terms: Vec<f64>| {
            let partial: f64 = terms.iter().sum();
            let tail = geom_tail(&terms);
            series.push(SeriesReport {
                id,
                partial_sum: partial,
                terms_used: terms.len(),
                tail_bound: tail,
                finite: partial.is_finite() && tail.is_finite(),
            });
        };

        push_series("proj_norm_sum", proj_norms.clone());
        let cond_mean: Vec<f64> =
            (1..=max_lag).map(|n| self.cond_mean_norm(n, q)).collect::<Result<_>>()?;
        push_series(
            "cond_mean_over_root_n",
            cond_mean
                .iter()
                .enumerate()
                .map(|(i, v)| v / ((i + 1) as f64).powf(1.0 / q))
                .collect(),
        );
        push_series(
            "nonadapted_over_root_n",
            (1..=max_lag)
                .map(|n| self.nonadapted_norm(n, q) / (n as f64).powf(1.0 / q))
                .collect(),
        );
        let cond_mean2: Vec<f64> =
            (1..=max_lag).map(|n| self.cond_mean_norm(n, 2.0)).collect::<Result<_>>()?;
        push_series(
            "log_weighted_cond_mean",
            cond_mean2
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let n = (i + 1) as f64;
                    n.ln() * v / n.sqrt()
                })
                .collect(),
        );
        let proj2: Vec<f64> =
            (0..=max_lag as i64).map(|j| self.projection_norm(j, 2.0)).collect::<Result<_>>()?;
        push_series(
            "log_weighted_proj_norm",
            proj2
                .iter()
                .enumerate()
                .map(|(j, v)| (1.0 + j as f64).ln() * v)
                .collect(),
        );

        // series-comparison inequality on the truncated data, for both
        // admissible weights
        let u: Vec<f64> = proj_norms[1..].to_vec();
        let mut series_inequalities = Vec::new();
        for (name, b) in [
            ("constant", Box::new(|_: usize| 1.0) as Box<dyn Fn(usize) -> f64>),
            ("log", Box::new(|n: usize| ((n + 1) as f64).ln())),
        ] {
            let (lhs, rhs) = crate::ineq::series_comparison_sides(&b, &u, q);
            series_inequalities.push((name.to_string(), lhs, rhs, lhs <= rhs * (1.0 + 1e-9)));
        }

        Ok(ProjectionReport { q, lags, proj_norms, series, series_inequalities })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_state() -> InnovationModel {
        InnovationModel::two_state(0.9).unwrap()
    }

    #[test]
    fn gaussian_norms() {
        assert!((gaussian_abs_norm(2.0) - 1.0).abs() < 1e-12);
        // E|Z| = sqrt(2/π)
        assert!((gaussian_abs_norm(1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        // E Z^4 = 3
        assert!((gaussian_abs_norm(4.0) - 3f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn student_unit_variance() {
        let m = InnovationModel::iid_student_t(6.0).unwrap();
        // scaled to unit variance: q=2 norm is 1
        assert!((m.projection_norm(0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            m.projection_norm(0, 6.5),
            Err(Error::MomentOrderExceeded { .. })
        ));
    }

    #[test]
    fn iid_projections() {
        let m = InnovationModel::iid_gaussian(1.0).unwrap();
        assert!((m.projection_norm(0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.projection_norm(3, 2.0).unwrap(), 0.0);
        let m = InnovationModel::iid_gaussian(2.0).unwrap();
        assert_eq!(m.eta(), 4.0);
    }

    #[test]
    fn causal_linear_closed_forms() {
        let m = InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap();
        // projection norms 1, 0.5, 0.25, … summing to 2
        for j in 0..6 {
            let v = m.projection_norm(j, 2.0).unwrap();
            assert!((v - 0.5f64.powi(j as i32)).abs() < 1e-12);
        }
        assert!((m.eta() - 4.0).abs() < 1e-12);
        assert!((m.eta_via_covariance_series() - 4.0).abs() < 1e-10);
        // lag-1 autocovariance 2/3
        assert!((m.autocovariance(1) - 2.0 / 3.0).abs() < 1e-12);
        // ‖E(ξ_n|F_0)‖_2 = 0.5^n sqrt(4/3)
        for n in 1..6 {
            let v = m.cond_mean_norm(n, 2.0).unwrap();
            let expect = 0.5f64.powi(n as i32) * (4.0 / 3.0f64).sqrt();
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn markov_two_state_closed_forms() {
        let m = two_state();
        let md = m.markov();
        assert!((md.pi[0] - 0.5).abs() < 1e-12);
        // h = 5 f on the eigenvector
        assert!((md.h[0] - 5.0).abs() < 1e-10 && (md.h[1] + 5.0).abs() < 1e-10);
        // ‖E(ξ_n|F_0)‖_2 = 0.8^n
        for n in 1..8 {
            let v = m.cond_mean_norm(n, 2.0).unwrap();
            assert!((v - 0.8f64.powi(n as i32)).abs() < 1e-12);
        }
        // ‖P_0(ξ_j)‖_2 = 0.6 · 0.8^j
        for j in 0..8 {
            let v = m.projection_norm(j, 2.0).unwrap();
            assert!((v - 0.6 * 0.8f64.powi(j as i32)).abs() < 1e-12, "j = {j}");
        }
        // η = 9 via both routes
        assert!((m.eta() - 9.0).abs() < 1e-10);
        assert!((m.eta_via_covariance_series() - 9.0).abs() < 1e-10);
        assert!((m.autocovariance(3) - 0.8f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn markov_rejects_bad_chains() {
        // reducible block chain
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(InnovationModel::markov_functional(p, DVector::from_column_slice(&[1.0, -1.0]))
            .is_err());
        // periodic two-cycle
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(InnovationModel::markov_functional(p, DVector::from_column_slice(&[1.0, -1.0]))
            .is_err());
        // not row-stochastic
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.5]);
        assert!(InnovationModel::markov_functional(p, DVector::from_column_slice(&[1.0, -1.0]))
            .is_err());
    }

    #[test]
    fn markov_f_is_centered_automatically() {
        let p = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.1, 0.9]);
        let m = InnovationModel::markov_functional(p, DVector::from_column_slice(&[3.0, 1.0]))
            .unwrap();
        let md = m.markov();
        let mean: f64 = md.pi.iter().zip(md.f.iter()).map(|(p, f)| p * f).sum();
        assert!(mean.abs() < 1e-14);
    }

    #[test]
    fn iid_gaussian_sample_mean_band() {
        let m = InnovationModel::iid_gaussian(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000i64;
        let w = m.sample_window(1, n, &mut rng, false);
        let mean = w.xi.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn causal_linear_lag1_autocovariance_empirical() {
        let m = InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400_000i64;
        let w = m.sample_window(1, n, &mut rng, false);
        let mut acc = 0.0;
        for k in 1..w.xi.len() {
            acc += w.xi[k] * w.xi[k - 1];
        }
        let c1 = acc / (w.xi.len() - 1) as f64;
        assert!((c1 - 2.0 / 3.0).abs() < 0.02, "lag-1 = {c1}");
    }

    #[test]
    fn markov_lag_k_autocovariance_empirical() {
        let m = two_state();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400_000i64;
        let w = m.sample_window(1, n, &mut rng, false);
        for k in [1usize, 2, 3] {
            let mut acc = 0.0;
            for i in k..w.xi.len() {
                acc += w.xi[i] * w.xi[i - k];
            }
            let c = acc / (w.xi.len() - k) as f64;
            assert!((c - 0.8f64.powi(k as i32)).abs() < 0.02, "lag {k}: {c}");
        }
    }

    #[test]
    fn martingale_difference_construction() {
        // iid: d = ξ
        let m = InnovationModel::iid_gaussian(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = m.sample_window(0, 100, &mut rng, true);
        assert_eq!(w.xi, w.md.unwrap());

        // causal linear: d_j = 2 ε_j
        let m = InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap();
        let w = m.sample_window(0, 100, &mut rng, true);
        let md = w.md.as_ref().unwrap();
        if let Driver::Eps(eps) = &w.driver {
            for (d, e) in md.iter().zip(eps.iter()) {
                assert!((d - 2.0 * e).abs() < 1e-12);
            }
        } else {
            panic!("expected eps driver");
        }

        // markov: E d² = 9, empirical over a long window
        let m = two_state();
        let w = m.sample_window(0, 400_000, &mut rng, true);
        let md = w.md.as_ref().unwrap();
        let ed2 = md.iter().map(|d| d * d).sum::<f64>() / md.len() as f64;
        assert!((ed2 - 9.0).abs() < 0.15, "E d² = {ed2}");
    }

    #[test]
    fn martingale_property_conditional_mean() {
        // E(d_j | previous state) = 0 for the markov model, by state bucket
        let m = two_state();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let w = m.sample_window(1, 100_000, &mut rng, true);
        let md = w.md.as_ref().unwrap();
        let states = match &w.driver {
            Driver::States(s) => s,
            _ => panic!("expected states"),
        };
        for s in 0..2 {
            let vals: Vec<f64> = md
                .iter()
                .enumerate()
                .filter(|(k, _)| states[*k] == s)
                .map(|(_, d)| *d)
                .collect();
            let mean = crate::stats::mean(&vals);
            let se = crate::stats::mc_se(&vals);
            assert!(mean.abs() < 4.0 * se, "state {s}: mean {mean}, se {se}");
        }

        // causal linear: regression of d_j on ε_{j-1} vanishes
        let m = InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap();
        let w = m.sample_window(1, 100_000, &mut rng, true);
        let md = w.md.as_ref().unwrap();
        if let Driver::Eps(eps) = &w.driver {
            let prods: Vec<f64> =
                (1..md.len()).map(|k| md[k] * eps[k - 1]).collect();
            let mean = crate::stats::mean(&prods);
            let se = crate::stats::mc_se(&prods);
            assert!(mean.abs() < 4.0 * se, "cov {mean} vs se {se}");
        }
    }

    #[test]
    fn projection_orthogonality_exact() {
        // E[P_a(ξ_i) P_b(ξ_j)] = 0 for a ≠ b, exact triple sum over the
        // two-state space; here a = 1, b = 0
        let m = two_state();
        let md = m.markov();
        let p = &md.p;
        let g = |j: usize| m.p_power_f(j);
        for (i, j) in [(1usize, 0usize), (2, 0), (2, 1), (3, 2)] {
            // P_1(ξ_i) = (P^{i-1}f)(Y_1) - (P^i f)(Y_0), needs i ≥ 1
            // P_0(ξ_j) = (P^j f)(Y_0) - (P^{j+1} f)(Y_{-1})
            let gi = g(i - 1);
            let gi1 = g(i);
            let gj = g(j);
            let gj1 = g(j + 1);
            let mut acc = 0.0;
            for y_m1 in 0..2 {
                for y0 in 0..2 {
                    for y1 in 0..2 {
                        let w = md.pi[y_m1] * p[(y_m1, y0)] * p[(y0, y1)];
                        let p1 = gi[y1] - gi1[y0];
                        let p0 = gj[y0] - gj1[y_m1];
                        acc += w * p1 * p0;
                    }
                }
            }
            assert!(acc.abs() < 1e-12, "cross level ({i},{j}): {acc}");
        }
    }

    #[test]
    fn condition_series_report() {
        let m = two_state();
        let rep = m.condition_series(2.0).unwrap();
        // Σ n^{-1/2} 0.8^n converges; flagged finite
        let s = rep.series.iter().find(|s| s.id == "cond_mean_over_root_n").unwrap();
        assert!(s.finite && s.partial_sum < 10.0);
        for (name, lhs, rhs, ok) in &rep.series_inequalities {
            assert!(ok, "{name}: {lhs} > {rhs}");
        }

        // iid: exactly one nonzero projection term
        let m = InnovationModel::iid_gaussian(1.0).unwrap();
        let rep = m.condition_series(2.0).unwrap();
        assert_eq!(rep.proj_norms.iter().filter(|v| **v > 0.0).count(), 1);

        // causal linear matches the closed-form geometric sum
        let m = InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap();
        let rep = m.condition_series(2.0).unwrap();
        let s = rep.series.iter().find(|s| s.id == "proj_norm_sum").unwrap();
        assert!((s.partial_sum - 2.0).abs() < 1e-10);
    }

    #[test]
    fn finite_series_implies_summable_projections() {
        // whenever both root-n series are finite, Σ‖P_0(ξ_j)‖_q is finite:
        // checked numerically on the built-in matrix
        let models = vec![
            InnovationModel::iid_gaussian(1.0).unwrap(),
            InnovationModel::iid_student_t(6.0).unwrap(),
            InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap(),
            InnovationModel::causal_linear(ThetaSeq::Finite(vec![1.0, -0.5, 0.25]), 2.0).unwrap(),
            two_state(),
            InnovationModel::two_state(0.6).unwrap(),
        ];
        for m in &models {
            let q = 4.0f64.min(m.moment_order_max());
            let rep = m.condition_series(q).unwrap();
            let series12_finite = rep
                .series
                .iter()
                .filter(|s| s.id.ends_with("over_root_n"))
                .all(|s| s.finite);
            let proj = rep.series.iter().find(|s| s.id == "proj_norm_sum").unwrap();
            assert!(series12_finite);
            assert!(proj.finite);
        }
    }

    #[test]
    fn reproducible_streams() {
        let m = two_state();
        let w1 = m.sample_window(0, 1000, &mut ChaCha8Rng::seed_from_u64(42), true);
        let w2 = m.sample_window(0, 1000, &mut ChaCha8Rng::seed_from_u64(42), true);
        assert_eq!(w1.xi, w2.xi);
        assert_eq!(w1.md, w2.md);
    }
}
