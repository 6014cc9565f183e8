use longrun::coeffs::*;
use longrun::harness::{self, TruncPurpose};
use std::time::Instant;

fn main() {
    let grid: Vec<usize> = (8..=16).map(|e| 1usize << e).collect();
    let models: Vec<(&str, CoefficientModel<f64>)> = vec![
        ("fractional d=0.25", CoefficientModel::fractional(0.25).unwrap()),
        ("power_diff a=0.25", CoefficientModel::power_diff(0.25).unwrap()),
        ("power_tail a=0.75", CoefficientModel::power_tail(0.75).unwrap()),
        ("log_damped a=1.0", CoefficientModel::log_damped(1.0).unwrap()),
    ];
    for (name, m) in &models {
        let t0 = Instant::now();
        let tr = harness::default_truncation(m, 1 << 16, TruncPurpose::Normalizers);
        let est = beta_estimate(m, &grid, &tr).unwrap();
        let slopes = harness::experiments::local_slopes(&est.points);
        println!(
            "{name}: beta_hat {:.4} target {:?} ({:.1?})\n  local slopes: {:?}",
            est.beta_hat,
            m.analytic_beta(),
            t0.elapsed(),
            slopes.iter().map(|s| (s * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
        let max_dev = est
            .ratios
            .iter()
            .map(|(t, r)| (r - t.powf(m.analytic_beta().unwrap())).abs())
            .fold(0.0f64, f64::max);
        println!("  max ratio dev at 2^16: {max_dev:.4}");
    }

    // covariance limit profile for fractional at 2^14
    let m = CoefficientModel::fractional(0.25).unwrap();
    let tr = harness::default_truncation(&m, 1 << 14, TruncPurpose::Normalizers);
    let t0 = Instant::now();
    let rep = harness::run_cov_limit(&m, 1 << 14, &[0.2, 0.4, 0.6, 0.8, 1.0], 1.5, &tr, 0.05).unwrap();
    println!("cov-limit fractional 2^14: max err {:.4} pass {} ({:.1?})", rep.max_abs_err, rep.pass, t0.elapsed());

    // harmonic s_n ratio trajectory
    let m: CoefficientModel<f64> = CoefficientModel::harmonic();
    for e in [10, 12, 14, 16] {
        let n = 1usize << e;
        let sn = s_squared(&m, n).sqrt();
        println!("harmonic s_n/(2 sqrt(n) ln n) at 2^{e}: {:.4}", sn / (2.0 * (n as f64).sqrt() * (n as f64).ln()));
    }
}
