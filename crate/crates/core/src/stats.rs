//! Kolmogorov–Smirnov machinery, calibrated meta-runs, and small summary
//! helpers shared by the experiments.

use statrs::distribution::{ContinuousCDF, Normal};

/// One-sample KS statistic `sup_x |F_emp(x) - F(x)|` against a cdf closure.
pub fn ks_statistic_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = sample.iter().copied().filter(|x| x.is_finite()).collect();
    assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_statistic_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs: Vec<f64> = a.iter().copied().filter(|x| x.is_finite()).collect();
    let mut ys: Vec<f64> = b.iter().copied().filter(|x| x.is_finite()).collect();
    assert!(!xs.is_empty() && !ys.is_empty());
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        fa = i as f64 / na;
        fb = j as f64 / nb;
        d = d.max((fa - fb).abs());
    }
    let _ = (fa, fb);
    d
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        s += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// Asymptotic critical constant `c(α)` with `P(√n D_n > c) ≈ α`.
pub fn ks_critical_constant(alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt()
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// One-sample KS test at asymptotic level `alpha`.
pub fn ks_one_sample_test(sample: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> KsOutcome {
    let d = ks_statistic_one_sample(sample, cdf);
    let n = sample.len() as f64;
    let critical_value = ks_critical_constant(alpha) / n.sqrt();
    KsOutcome {
        statistic: d,
        critical_value,
        p_value: kolmogorov_sf(n.sqrt() * d),
        reject: d > critical_value,
    }
}

/// Two-sample KS test at asymptotic level `alpha`.
pub fn ks_two_sample_test(a: &[f64], b: &[f64], alpha: f64) -> KsOutcome {
    let d = ks_statistic_two_sample(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let scale = (na * nb / (na + nb)).sqrt();
    let critical_value = ks_critical_constant(alpha) / scale;
    KsOutcome {
        statistic: d,
        critical_value,
        p_value: kolmogorov_sf(scale * d),
        reject: d > critical_value,
    }
}

pub fn normal_cdf(mean: f64, sd: f64) -> impl Fn(f64) -> f64 {
    let dist = Normal::new(mean, sd).expect("valid normal parameters");
    move |x| dist.cdf(x)
}

/// Verdict of a batch of independent statistical runs; the suite passes when
/// at least `required` of the runs pass, so single-run flakiness cannot fail
/// a criterion while a systematic mismatch does.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MetaVerdict {
    pub passes: usize,
    pub runs: usize,
    pub required: usize,
    pub pass: bool,
    pub statistics: Vec<f64>,
}

pub fn meta_runs(runs: usize, required: usize, mut run: impl FnMut(usize) -> KsOutcome) -> MetaVerdict {
    let mut passes = 0;
    let mut statistics = Vec::with_capacity(runs);
    for r in 0..runs {
        let out = run(r);
        if !out.reject {
            passes += 1;
        }
        statistics.push(out.statistic);
    }
    MetaVerdict { passes, runs, required, pass: passes >= required, statistics }
}

/// Ordinary least squares `y = a + b x`, returning `(slope, intercept)`.
pub fn ols_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Standard error of the sample mean.
pub fn mc_se(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Empirical quantile by linear interpolation on the order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = p.clamp(0.0, 1.0) * (sorted.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}
