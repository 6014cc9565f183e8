//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! The underlying limit statements are asymptotic; full weak convergence (in
//! particular tightness of the path process) is not reproducible as such at
//! desk scale, so the distributional criteria here are stated as surrogates:
//! deterministic coefficient-level checks, exact small-instance oracles, and
//! calibrated Monte Carlo marginal/covariance/max-statistic tests. KS-based
//! verdicts run 20 independent meta-runs and require at least 18 passes, so
//! single-run flakiness cannot fail a criterion while a systematic law
//! mismatch does.

use longrun::coeffs::{self, CoefficientModel, Truncation};
use longrun::harness::{
    self, experiments::local_slopes, FcltOptions, IsoRateOptions, RateTheorem, SeedSpace,
    TruncPurpose,
};
use longrun::innovations::{InnovationModel, ThetaSeq};
use longrun::linproc::{max_statistics, Normalizer, PathSimulator};
use longrun::rates::{self, HRule};
use longrun::{ineq, isotone, stats, Orlicz};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn line(id: u32, name: &str, pass: bool, details: &str) {
    println!("[criterion {id:02}] {name}: {} — {details}", if pass { "PASS" } else { "FAIL" });
}

#[test]
fn c01_regular_variation_exponents() {
    let grid: Vec<usize> = (8..=16).map(|e| 1usize << e).collect();
    let cases: Vec<(&str, CoefficientModel<f64>, f64)> = vec![
        ("fractional d=0.25", CoefficientModel::fractional(0.25).unwrap(), 1.5),
        ("power_diff alpha=0.25", CoefficientModel::power_diff(0.25).unwrap(), 0.5),
        ("power_tail alpha=0.75", CoefficientModel::power_tail(0.75).unwrap(), 1.5),
    ];
    let mut all = true;
    let mut details = String::new();
    for (name, model, beta) in &cases {
        let tr = harness::default_truncation(model, 1 << 16, TruncPurpose::Normalizers);
        let rep = harness::run_normalizers(model, &grid, &tr, 0.05).unwrap();
        let ok = rep.pass && (rep.beta_hat - beta).abs() <= 0.05;
        all &= ok;
        details.push_str(&format!("{name}: {:.4} (target {beta}); ", rep.beta_hat));
    }
    // log-damped: the exponent is approached only logarithmically, so the
    // testable claim is the upward trend of the local slopes toward 2
    let model = CoefficientModel::log_damped(1.0).unwrap();
    let tr = harness::default_truncation(&model, 1 << 16, TruncPurpose::Normalizers);
    let rep = harness::run_normalizers(&model, &grid, &tr, 0.05).unwrap();
    let est = coeffs::beta_estimate(&model, &grid, &tr).unwrap();
    let slopes = local_slopes(&est.points);
    details.push_str(&format!(
        "log_damped slopes {:.3} -> {:.3} (trend toward 2)",
        slopes.first().unwrap(),
        slopes.last().unwrap()
    ));
    all &= rep.pass;
    line(1, "regular variation of the normalizer", all, &details);
    assert!(all, "{details}");
}

#[test]
fn c02_covariance_limit_profile() {
    let model = CoefficientModel::fractional(0.25).unwrap();
    let tr = harness::default_truncation(&model, 1 << 14, TruncPurpose::Normalizers);
    let rep = harness::run_cov_limit(
        &model,
        1 << 14,
        &[0.2, 0.4, 0.6, 0.8, 1.0],
        1.5,
        &tr,
        0.05,
    )
    .unwrap();
    line(
        2,
        "covariance ratio against the fractional form",
        rep.pass,
        &format!("max |ratio - target| = {:.4} over {} pairs (tol 0.05)", rep.max_abs_err, rep.rows.len()),
    );
    assert!(rep.pass);
}

#[test]
fn c03_exact_gaussian_marginal_oracle() {
    let innov = InnovationModel::iid_gaussian(1.0).unwrap();
    let opts = FcltOptions { reps: 5000, meta_runs: 20, required: 18, alpha: 0.01 };
    let seeds = SeedSpace::new(0x5eed_0003);

    let dirac = CoefficientModel::dirac();
    let rep_d = harness::run_fclt(
        &dirac,
        &innov,
        1 << 10,
        &[1.0],
        &[64, 256, 1024],
        &seeds.subspace("dirac"),
        &opts,
        &Truncation::default(),
    )
    .unwrap();

    let frac = CoefficientModel::fractional(0.25).unwrap();
    let tr = harness::default_truncation(&frac, 1 << 12, TruncPurpose::Simulation);
    let rep_f = harness::run_fclt(
        &frac,
        &innov,
        1 << 12,
        &[1.0],
        &[256, 1024, 4096],
        &seeds.subspace("fractional"),
        &opts,
        &tr,
    )
    .unwrap();

    let pass = rep_d.pass && rep_f.pass;
    let d = &rep_d.per_t[0].1;
    let f = &rep_f.per_t[0].1;
    line(
        3,
        "exact-Gaussian marginal law of S_n / v_n",
        pass,
        &format!("dirac {}/{} meta-runs, fractional {}/{} meta-runs (level 0.01)", d.passes, d.runs, f.passes, f.runs),
    );
    assert!(pass);
}

#[test]
fn c04_long_run_variance_two_routes() {
    let innov = InnovationModel::two_state(0.9).unwrap();
    let eta_poisson = innov.eta();
    let eta_series = innov.eta_via_covariance_series();
    let routes_ok = (eta_poisson - 9.0).abs() <= 1e-10
        && (eta_series - 9.0).abs() <= 1e-10
        && (eta_poisson - eta_series).abs() <= 1e-10;

    // empirical Var(S_n)/v_n² with unit-impulse coefficients at n = 2^14
    let n = 1usize << 14;
    let reps = 4000;
    let seeds = SeedSpace::new(0x5eed_0004);
    use rayon::prelude::*;
    let endpoints: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeds.stream("var-ratio", rep as u64);
            let w = innov.sample_window(1, n as i64, &mut rng, false);
            w.xi.iter().sum::<f64>()
        })
        .collect();
    let sq: Vec<f64> = endpoints.iter().map(|s| s * s / n as f64).collect();
    let mean = stats::mean(&sq);
    let se = stats::mc_se(&sq);
    let band_ok = (mean - 9.0).abs() <= 3.0 * se;

    let pass = routes_ok && band_ok;
    line(
        4,
        "long-run variance",
        pass,
        &format!(
            "poisson {eta_poisson:.12}, series {eta_series:.12}; empirical Var(S_n)/v_n² = {mean:.3} ± {se:.3} (target 9)"
        ),
    );
    assert!(pass);
}

#[test]
fn c05_isotonic_oracle_equivalence() {
    let close = |a: &[f64], b: &[f64], tol: f64| -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    };

    // exhaustive {0,1,2}-sequences of length <= 6
    let mut checked = 0usize;
    for len in 1..=6usize {
        let total = 3usize.pow(len as u32);
        for code in 0..total {
            let mut y = Vec::with_capacity(len);
            let mut c = code;
            for _ in 0..len {
                y.push((c % 3) as f64);
                c /= 3;
            }
            let a = isotone::pava(&y);
            let b = isotone::maxmin(&y).unwrap();
            let g = isotone::fit_via_gcm(&y).unwrap();
            assert!(close(&a.mu_hat, &b.mu_hat, 1e-12), "{y:?}");
            assert!(close(&a.mu_hat, &g, 1e-12), "{y:?}");
            checked += 1;
        }
    }

    // random length-50 instances + idempotence / order / contraction
    let seeds = SeedSpace::new(0x5eed_0005);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    use rand_distr::Distribution;
    for rep in 0..1000u64 {
        let mut rng = seeds.stream("iso-random", rep);
        let y: Vec<f64> = (0..50).map(|_| normal.sample(&mut rng)).collect();
        let a = isotone::pava(&y);
        let b = isotone::maxmin(&y).unwrap();
        let g = isotone::fit_via_gcm(&y).unwrap();
        assert!(close(&a.mu_hat, &b.mu_hat, 1e-12));
        assert!(close(&a.mu_hat, &g, 1e-12));
        // idempotence
        let again = isotone::pava(&a.mu_hat);
        assert!(close(&a.mu_hat, &again.mu_hat, 1e-12));
        // order preservation and contraction against a shifted partner
        let shift: Vec<f64> = (0..50).map(|k| 0.3 + 0.02 * (k % 7) as f64).collect();
        let y2: Vec<f64> = y.iter().zip(&shift).map(|(v, s)| v + s).collect();
        let a2 = isotone::pava(&y2);
        assert!(a.mu_hat.iter().zip(&a2.mu_hat).all(|(m, m2)| m <= m2));
        let num: f64 = a.mu_hat.iter().zip(&a2.mu_hat).map(|(m, m2)| (m - m2) * (m - m2)).sum();
        let den: f64 = y.iter().zip(&y2).map(|(v, v2)| (v - v2) * (v - v2)).sum();
        assert!(num <= den + 1e-12);
    }

    // least-squares optimality against exhaustive block partitions (n <= 8)
    for rep in 0..200u64 {
        let mut rng = seeds.stream("iso-exhaustive", rep);
        let n = 4 + (rep % 5) as usize;
        let y: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let fit = isotone::pava(&y);
        let sse_fit: f64 = y.iter().zip(&fit.mu_hat).map(|(a, b)| (a - b) * (a - b)).sum();
        let mut best = f64::INFINITY;
        for mask in 0..(1usize << (n - 1)) {
            // mask bit k set = block boundary after position k
            let mut mu = Vec::with_capacity(n);
            let mut start = 0usize;
            let mut monotone = true;
            let mut prev = f64::NEG_INFINITY;
            for k in 0..n {
                if k == n - 1 || mask & (1 << k) != 0 {
                    let mean: f64 = y[start..=k].iter().sum::<f64>() / (k - start + 1) as f64;
                    if mean < prev {
                        monotone = false;
                        break;
                    }
                    prev = mean;
                    for _ in start..=k {
                        mu.push(mean);
                    }
                    start = k + 1;
                }
            }
            if monotone {
                let sse: f64 = y.iter().zip(&mu).map(|(a, b)| (a - b) * (a - b)).sum();
                best = best.min(sse);
            }
        }
        assert!(sse_fit <= best + 1e-10, "pava sse {sse_fit} vs exhaustive {best}");
    }

    line(
        5,
        "isotonic oracle equivalence",
        true,
        &format!("{checked} exhaustive + 1000 random instances; block-partition optimum matched on 200 small instances"),
    );
}

#[test]
fn c06_isotonic_rate_short_memory() {
    let coeff = CoefficientModel::dirac();
    let innov = InnovationModel::iid_gaussian(1.0).unwrap();
    let seeds = SeedSpace::new(0x5eed_0006);
    let grid: Vec<usize> = (10..=16).map(|e| 1usize << e).collect();
    let opts = IsoRateOptions {
        reps: 2000,
        ks_meta: 20,
        ks_required: 18,
        ks_reference: 1500,
        ..Default::default()
    };
    let rep = harness::run_iso_rate(
        &coeff,
        &innov,
        RateTheorem::ShortMemory,
        &grid,
        &seeds,
        &opts,
        |_| Truncation::default(),
    )
    .unwrap();
    let ks = rep.ks.as_ref().unwrap();
    line(
        6,
        "isotonic rate, short memory",
        rep.pass,
        &format!(
            "slope {:.4} (band {:.4} ± 0.1), KS vs argmin reference {}/{} meta-runs, kappa {:.3}",
            rep.slope, rep.expected_slope, ks.passes, ks.runs, rep.kappa
        ),
    );
    assert!(rep.pass);
}

#[test]
fn c07_isotonic_rate_long_memory() {
    let coeff = CoefficientModel::fractional(0.25).unwrap();
    let innov = InnovationModel::iid_gaussian(1.0).unwrap();
    let seeds = SeedSpace::new(0x5eed_0007);
    let grid: Vec<usize> = (10..=16).map(|e| 1usize << e).collect();
    let opts = IsoRateOptions { reps: 2000, ks_meta: 0, ..Default::default() };
    // the schedule is derived from the same consistently-truncated v_n the
    // simulation realizes, so a loose (but uniform) window suffices
    let rep = harness::run_iso_rate(
        &coeff,
        &innov,
        RateTheorem::LongMemory,
        &grid,
        &seeds,
        &opts,
        |_| Truncation::new(0.1),
    )
    .unwrap();
    let cal_last = rep.calibration.last().unwrap().1;
    line(
        7,
        "isotonic rate, long memory",
        rep.pass,
        &format!(
            "slope {:.4} (band -0.2 ± 0.1), calibration -> {:.3}",
            rep.slope, cal_last
        ),
    );
    assert!(rep.pass);
}

#[test]
fn c08_moment_and_maximal_inequalities() {
    let seeds = SeedSpace::new(0x5eed_0008);
    let gauss = InnovationModel::iid_gaussian(1.0).unwrap();
    let markov = InnovationModel::two_state(0.9).unwrap();
    let filtered = InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap();
    let dirac = CoefficientModel::dirac();
    let harmonic = CoefficientModel::harmonic();

    // explicit-constant moment bound across the model matrix
    let mut all = true;
    let mut worst: f64 = 0.0;
    let matrix: Vec<(&CoefficientModel<f64>, &InnovationModel, f64, Vec<usize>)> = vec![
        (&dirac, &gauss, 2.0, vec![1, 16, 256, 1024]),
        (&dirac, &gauss, 4.0, vec![16, 256]),
        (&dirac, &markov, 2.0, vec![16, 256, 1024]),
        (&harmonic, &filtered, 2.0, vec![16, 128]),
    ];
    for (coeff, innov, q, m_grid) in &matrix {
        let tr = harness::default_truncation(coeff, 1024, TruncPurpose::Simulation);
        let rep = ineq::verify_moment_inequality(
            coeff,
            innov,
            m_grid,
            *q,
            10_000,
            &seeds.subspace(&format!("moment-q{q}")),
            &tr,
        )
        .unwrap();
        all &= rep.pass;
        worst = rep.rows.iter().map(|r| r.ratio).fold(worst, f64::max);
    }

    // dyadic maximal bound for the three Young functions at p = 2, N = 12
    let mut dyadic_msg = String::new();
    for (name, psi) in [
        ("x", Orlicz::power(1.0).unwrap()),
        ("x^2", Orlicz::power(2.0).unwrap()),
        ("x^2 ln^3(1+x^2)", Orlicz::log_power(3.0).unwrap()),
    ] {
        let rep = ineq::dyadic_max_bound(
            &dirac,
            &gauss,
            &psi,
            2.0,
            12,
            10_000,
            &seeds.subspace(name),
            &Truncation::default(),
        )
        .unwrap();
        all &= rep.pass;
        dyadic_msg.push_str(&format!("Ψ={name}: lhs/rhs {:.3}; ", rep.lhs / rep.rhs));
    }

    // E max S_k² / v_n² bounded (no upward trend) for the long-memory kind
    let frac = CoefficientModel::fractional(0.25).unwrap();
    let tr = Truncation::new(0.05);
    let mut ratios = Vec::new();
    use rayon::prelude::*;
    for e in (8..=14).step_by(2) {
        let n = 1usize << e;
        let sim = PathSimulator::new(&frac, &gauss, n, vec![1.0], Normalizer::VN, &tr).unwrap();
        let maxes: Vec<f64> = (0..1000)
            .into_par_iter()
            .map(|rep| {
                let mut rng = seeds.stream(&format!("maxsq-n{n}"), rep as u64);
                let p = sim.simulate(&mut rng, false);
                max_statistics(&p).max_s_sq
            })
            .collect();
        ratios.push((n, stats::mean(&maxes) / sim.v2));
    }
    let xs: Vec<f64> = ratios.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|(_, r)| r.ln()).collect();
    let (trend, _) = stats::ols_line(&xs, &ys);
    let spread = ratios.iter().map(|(_, r)| *r).fold(0.0f64, f64::max)
        / ratios.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let bounded = trend <= 0.05 && spread <= 1.6;
    all &= bounded;

    line(
        8,
        "moment and maximal inequalities",
        all,
        &format!(
            "worst moment ratio {worst:.3} (must stay <= 1); {dyadic_msg}max-square trend {trend:.3}, spread {spread:.2}"
        ),
    );
    assert!(all);
}

#[test]
fn c09_martingale_coupling_decay() {
    let coeff = CoefficientModel::harmonic();
    let innov = InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: 0.5 }, 1.0).unwrap();
    let seeds = SeedSpace::new(0x5eed_0009);
    let psi = Orlicz::power(2.0).unwrap();
    let tr = harness::default_truncation(&coeff, 1 << 12, TruncPurpose::Simulation);
    let rep = ineq::verify_martingale_approx(
        &coeff,
        &innov,
        &[1 << 8, 1 << 10, 1 << 12],
        &[1, 2, 4, 8, 16, 32],
        &psi,
        1500,
        &seeds,
        &tr,
    )
    .unwrap();
    let ratios: Vec<f64> = rep.rows.iter().map(|r| r.ratio).collect();

    // coboundary identity residuals
    let ma = CoefficientModel::finite_ma(vec![1.0, 1.0]).unwrap();
    let cob_ma = ineq::coboundary_check(&ma, &innov, 512, &seeds, &Truncation::default()).unwrap();
    let alt = CoefficientModel::alternating_heyde(0.8, 0.0).unwrap();
    let cob_alt = ineq::coboundary_check(
        &alt,
        &innov,
        1 << 10,
        &seeds,
        &Truncation::best_effort(1e-6, 2_000_000),
    )
    .unwrap();

    let pass = rep.strictly_decreasing
        && cob_ma.pass
        && cob_ma.max_residual <= 1e-12
        && cob_alt.pass;
    line(
        9,
        "martingale coupling decay and coboundary identity",
        pass,
        &format!(
            "max-coupling/s_n: {:.4} > {:.4} > {:.4}; residuals: finite {:.2e}, alternating {:.2e} (bound {:.2e})",
            ratios[0], ratios[1], ratios[2], cob_ma.max_residual, cob_alt.max_residual, cob_alt.bound
        ),
    );
    assert!(pass);
}

#[test]
fn c10_rate_schedule_identities() {
    // constant-h closed form, exact
    let grid: Vec<usize> = (8..=20).step_by(2).map(|e| 1usize << e).collect();
    let sched = rates::rate_schedule(1.0, &HRule::Const(4.0), &grid).unwrap();
    let mut ok = true;
    for p in &sched.points {
        ok &= (p.l_star - 2.0).abs() < 1e-9;
        ok &= (p.d_n - 2f64.powf(2.0 / 3.0) * (p.n as f64).powf(-1.0 / 3.0)).abs()
            <= 1e-9 * p.d_n;
        ok &= p.residual <= 1e-8;
    }
    ok &= rates::rate_is_admissible(&sched);

    // residual bound on every emitted point for a slowly varying h as well
    let sched_log: rates::RateSchedule<f64> = rates::rate_schedule(
        1.0,
        &HRule::LogPower { scale: 4.0, exponent: 2.0 },
        &grid,
    )
    .unwrap();
    ok &= sched_log.points.iter().all(|p| p.residual <= 1e-8);

    // constant identities, exact to the bit
    let unit: f64 = rates::kappa_unit_beta(2.0).unwrap();
    let via_beta: f64 = rates::kappa_beta(2.0, 1.0).unwrap();
    ok &= unit.to_bits() == via_beta.to_bits();
    for (phi, beta) in [(2.0f64, 1.5f64), (0.7, 0.8), (3.0, 1.0), (1.0, 2.0)] {
        let a: f64 = rates::kappa_beta(phi, beta).unwrap();
        let b: f64 = rates::kappa_hurst(phi, beta / 2.0).unwrap();
        ok &= a.to_bits() == b.to_bits();
    }

    line(
        10,
        "rate-schedule machinery",
        ok,
        &format!(
            "max residual {:.2e}; closed form and constant identities exact",
            sched.points.iter().map(|p| p.residual).fold(0.0, f64::max)
        ),
    );
    assert!(ok);
}
