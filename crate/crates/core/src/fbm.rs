//! Reference laws for the scaling limits: fractional Gaussian noise via
//! circulant embedding (with a Cholesky fallback and cross-check), fractional
//! Brownian motion paths, and the two-sided `argmin { B_H(s) + s² }` sampler
//! behind the cube-root-type limit distributions.

use crate::num::Real;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Two-sided fBm covariance `½(|s|^{2H} + |t|^{2H} - |t-s|^{2H})`.
pub fn fbm_cov<T: Real>(h: T, s: T, t: T) -> T {
    let two_h = h + h;
    let half = T::from_f64_(0.5);
    half * (s.abs().powf(two_h) + t.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub fn fgn_cov(h: f64, k: i64) -> f64 {
    let k = k.abs() as f64;
    let two_h = 2.0 * h;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbmMethod {
    Circulant,
    Cholesky,
}

/// A sampled fBm path on `grid` (starting at `B_H(0) = 0`).
#[derive(Clone, Debug)]
pub struct FbmPath {
    pub h: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: FbmMethod,
}

/// Exact-in-law sampler for unit-step fractional Gaussian noise of length
/// `n` (a power of two) by circulant embedding: the embedding spectrum is
/// computed once and shared across draws.
pub struct FgnSampler {
    pub h: f64,
    pub n: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl FgnSampler {
    pub fn new(h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidParameter("Hurst index must lie in (0, 1)".into()));
        }
        if !n.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "circulant embedding wants a power-of-two length".into(),
            ));
        }
        let m = 2 * n;
        let mut row = vec![Complex::new(0.0, 0.0); m];
        for (k, slot) in row.iter_mut().enumerate().take(n + 1) {
            slot.re = fgn_cov(h, k as i64);
        }
        for k in 1..n {
            row[m - k].re = row[k].re;
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let max_eig = row.iter().fold(0.0f64, |mx, c| mx.max(c.re));
        let mut sqrt_eig = Vec::with_capacity(m);
        for c in &row {
            if c.re < -1e-10 * max_eig {
                return Err(Error::Numerical(format!(
                    "circulant embedding not nonnegative (min eigenvalue {:.3e}); \
                     use the cholesky method",
                    c.re
                )));
            }
            sqrt_eig.push(c.re.max(0.0).sqrt());
        }
        Ok(FgnSampler { h, n, sqrt_eig, fft })
    }

    /// One fGn draw with unit step and unit variance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = 2 * self.n;
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        let scale0 = 1.0 / (m as f64).sqrt();
        let scale = 1.0 / (2.0 * m as f64).sqrt();
        buf[0] = Complex::new(self.sqrt_eig[0] * scale0 * rng.sample::<f64, _>(StandardNormal), 0.0);
        buf[self.n] =
            Complex::new(self.sqrt_eig[self.n] * scale0 * rng.sample::<f64, _>(StandardNormal), 0.0);
        for k in 1..self.n {
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            let w = self.sqrt_eig[k] * scale;
            buf[k] = Complex::new(w * g1, w * g2);
            buf[m - k] = buf[k].conj();
        }
        self.fft.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }
}

/// fBm on the uniform grid `0, T/n, …, T` (`n + 1` values, first exactly 0).
///
/// Circulant embedding needs `n_points` to be a power of two and falls back
/// to Cholesky if the embedding spectrum dips negative; the Cholesky route is
/// capped at 2^12 points.
pub fn sample_fbm<R: Rng + ?Sized>(
    h: f64,
    n_points: usize,
    t_max: f64,
    rng: &mut R,
    method: FbmMethod,
) -> Result<FbmPath> {
    let dt = t_max / n_points as f64;
    let grid: Vec<f64> = (0..=n_points).map(|i| i as f64 * dt).collect();
    match method {
        FbmMethod::Circulant => {
            let sampler = match FgnSampler::new(h, n_points) {
                Ok(s) => s,
                Err(Error::Numerical(_)) => {
                    return sample_fbm(h, n_points, t_max, rng, FbmMethod::Cholesky)
                }
                Err(e) => return Err(e),
            };
            let fgn = sampler.sample(rng);
            let scale = dt.powf(h);
            let mut values = Vec::with_capacity(n_points + 1);
            values.push(0.0);
            let mut acc = 0.0;
            for x in fgn {
                acc += scale * x;
                values.push(acc);
            }
            Ok(FbmPath { h, grid, values, method: FbmMethod::Circulant })
        }
        FbmMethod::Cholesky => {
            const CAP: usize = 1 << 12;
            if n_points > CAP {
                return Err(Error::SizeCap {
                    n: n_points,
                    cap: CAP,
                    what: "cholesky fBm (use circulant)",
                });
            }
            let chol = cholesky_factor(h, &grid[1..])?;
            let z: Vec<f64> = (0..n_points).map(|_| rng.sample(StandardNormal)).collect();
            let mut values = vec![0.0; n_points + 1];
            for i in 0..n_points {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += chol[(i, j)] * z[j];
                }
                values[i + 1] = acc;
            }
            Ok(FbmPath { h, grid, values, method: FbmMethod::Cholesky })
        }
    }
}

/// Lower Cholesky factor of the fBm covariance on the (nonzero) grid points.
/// Factorization success doubles as the positive-semidefiniteness assertion.
fn cholesky_factor(h: f64, grid: &[f64]) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let cov = DMatrix::from_fn(n, n, |i, j| fbm_cov(h, grid[i], grid[j]));
    nalgebra::Cholesky::new(cov)
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical("fBm covariance failed Cholesky factorization".into()))
}

/// Grid argmin of `values[i] + s_i²` on `s_i = s_lo + i·delta`.
/// Ties break toward the smallest `|s|`, then the negative side; a minimizer
/// on either boundary is an error (the search window was too small).
pub fn argmin_quadratic(s_lo: f64, delta: f64, values: &[f64], half_width: f64) -> Result<f64> {
    assert!(values.len() >= 3);
    let mut best = f64::INFINITY;
    let mut best_s = f64::NAN;
    let mut best_idx = 0usize;
    for (i, v) in values.iter().enumerate() {
        let s = s_lo + i as f64 * delta;
        let obj = v + s * s;
        let better = obj < best
            || (obj == best && (s.abs() < best_s.abs() || (s.abs() == best_s.abs() && s < best_s)));
        if better {
            best = obj;
            best_s = s;
            best_idx = i;
        }
    }
    if best_idx == 0 || best_idx == values.len() - 1 {
        return Err(Error::BoundaryHit { half_width });
    }
    Ok(best_s)
}

/// Sampler for `argmin { B_H(s) + s², s ∈ [-M, M] }` over a grid of step
/// `delta`, with `B_H` a standard two-sided fBm.
///
/// The two-sided path is realized by recentering a one-sided path at an
/// interior time: `{B(M + s) - B(M)}` has exactly the two-sided covariance
/// `½(|s|^{2H} + |t|^{2H} - |t-s|^{2H})` by stationarity of increments, for
/// every `H` (two glued independent halves would be correct only at
/// `H = 1/2`).
pub struct ArgminSampler {
    pub h: f64,
    pub half_width: f64,
    pub delta: f64,
    steps_per_side: usize,
    scale: f64,
    fgn: FgnSampler,
}

impl ArgminSampler {
    pub fn new(h: f64, half_width: f64, delta: f64) -> Result<Self> {
        if !(half_width > 0.0 && delta > 0.0 && delta < half_width) {
            return Err(Error::InvalidParameter(
                "need half_width > 0 and 0 < delta < half_width".into(),
            ));
        }
        let steps_per_side = (half_width / delta).round() as usize;
        let fgn = FgnSampler::new(h, (2 * steps_per_side).next_power_of_two())?;
        Ok(ArgminSampler {
            h,
            half_width: steps_per_side as f64 * delta,
            delta,
            steps_per_side,
            scale: delta.powf(h),
            fgn,
        })
    }

    /// One two-sided path on the `s` grid (first entry at `s = -M`).
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let fgn = self.fgn.sample(rng);
        let total = 2 * self.steps_per_side;
        let mut cum = Vec::with_capacity(total + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for x in &fgn[..total] {
            acc += self.scale * x;
            cum.push(acc);
        }
        let center = cum[self.steps_per_side];
        cum.iter().map(|v| v - center).collect()
    }

    pub fn s_grid(&self) -> Vec<f64> {
        (0..=2 * self.steps_per_side)
            .map(|i| -self.half_width + i as f64 * self.delta)
            .collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let path = self.sample_path(rng);
        argmin_quadratic(-self.half_width, self.delta, &path, self.half_width)
    }
}

/// One argmin draw with fresh spectrum setup (convenience; batch callers
/// should hold an [`ArgminSampler`]).
pub fn sample_argmin<R: Rng + ?Sized>(
    h: f64,
    half_width: f64,
    delta: f64,
    rng: &mut R,
) -> Result<f64> {
    ArgminSampler::new(h, half_width, delta)?.draw(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cov_values() {
        assert!((fbm_cov(0.5f64, 0.3, 0.7) - 0.3).abs() < 1e-12); // min(s,t) at H=1/2
        assert!((fbm_cov(0.75f64, 1.0, 1.0) - 1.0).abs() < 1e-12);
        // cancellation: ½(0.5^1.5 + 1 - 0.5^1.5) = 0.5
        assert!((fbm_cov(0.75f64, 0.5, 1.0) - 0.5).abs() < 1e-12);
        // two-sided: opposite signs correlate negatively for H > 1/2
        assert!(fbm_cov(0.75f64, -0.5, 0.5) < 0.0);
        assert!((fbm_cov(0.5f64, -0.5, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn fgn_cov_brownian_is_white() {
        assert_eq!(fgn_cov(0.5, 0), 1.0);
        for k in 1..5 {
            assert!(fgn_cov(0.5, k).abs() < 1e-12);
        }
    }

    #[test]
    fn circulant_fgn_white_at_half() {
        let sampler = FgnSampler::new(0.5, 1 << 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = sampler.sample(&mut rng);
        let n = x.len() as f64;
        let var = x.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.15, "var = {var}");
        let rho1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1.0) / var;
        assert!(rho1.abs() <= 4.0 / n.sqrt(), "rho(1) = {rho1}");
    }

    #[test]
    fn fbm_terminal_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut endpoints = Vec::new();
        for _ in 0..2000 {
            let p = sample_fbm(0.75, 1 << 8, 1.0, &mut rng, FbmMethod::Circulant).unwrap();
            assert_eq!(p.values[0], 0.0);
            endpoints.push(*p.values.last().unwrap());
        }
        let var = stats::mean(&endpoints.iter().map(|x| x * x).collect::<Vec<_>>());
        let se = stats::mc_se(&endpoints.iter().map(|x| x * x).collect::<Vec<_>>());
        assert!((var - 1.0).abs() < 4.0 * se, "Var(B(1)) = {var} ± {se}");
    }

    #[test]
    fn empirical_covariance_matches_form() {
        let h = 0.7;
        let n = 1 << 6;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reps = 4000;
        let (i1, i2) = (n / 4, n); // t = 0.25, 1.0
        let mut prods = Vec::with_capacity(reps);
        for _ in 0..reps {
            let p = sample_fbm(h, n, 1.0, &mut rng, FbmMethod::Circulant).unwrap();
            prods.push(p.values[i1] * p.values[i2]);
        }
        let expect = fbm_cov(h, 0.25, 1.0);
        let got = stats::mean(&prods);
        let se = stats::mc_se(&prods);
        assert!((got - expect).abs() < 4.0 * se, "{got} vs {expect} (se {se})");
    }

    #[test]
    fn cholesky_vs_circulant_cross_validation() {
        let h = 0.6;
        let n = 1 << 9;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let reps = 2000;
        let mut a = Vec::with_capacity(reps);
        let mut b = Vec::with_capacity(reps);
        for _ in 0..reps {
            a.push(*sample_fbm(h, n, 1.0, &mut rng, FbmMethod::Circulant).unwrap().values.last().unwrap());
            b.push(*sample_fbm(h, n, 1.0, &mut rng, FbmMethod::Cholesky).unwrap().values.last().unwrap());
        }
        let out = stats::ks_two_sample_test(&a, &b, 0.01);
        assert!(!out.reject, "KS = {}", out.statistic);
    }

    #[test]
    fn cholesky_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_fbm(0.6, 1 << 13, 1.0, &mut rng, FbmMethod::Cholesky),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn self_similarity_second_moment() {
        // Var B(4t) = 4^{2H} Var B(t)
        let h = 0.75;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut at_t = Vec::new();
        let mut at_4t = Vec::new();
        for _ in 0..3000 {
            let p = sample_fbm(h, 1 << 7, 1.0, &mut rng, FbmMethod::Circulant).unwrap();
            at_t.push(p.values[32] * p.values[32]); // t = 0.25
            at_4t.push(p.values[128] * p.values[128]); // 4t = 1.0
        }
        let lhs = stats::mean(&at_4t);
        let rhs = 4f64.powf(2.0 * h) * stats::mean(&at_t);
        let se = 4f64.powf(2.0 * h) * stats::mc_se(&at_t) + stats::mc_se(&at_4t);
        assert!((lhs - rhs).abs() < 4.0 * se, "{lhs} vs {rhs}");
    }

    #[test]
    fn argmin_zero_noise_is_zero() {
        let values = vec![0.0; 2049];
        let s = argmin_quadratic(-1.0, 2.0 / 2048.0, &values, 1.0).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn argmin_boundary_hit() {
        // linear tilt pushes the minimum to the left edge
        let n = 101;
        let values: Vec<f64> = (0..n).map(|i| 10.0 * i as f64).collect();
        assert!(matches!(
            argmin_quadratic(-1.0, 0.02, &values, 1.0),
            Err(Error::BoundaryHit { .. })
        ));
    }

    #[test]
    fn argmin_symmetry_and_mean() {
        let sampler = ArgminSampler::new(0.5, 5.0, 1.0 / 1024.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut draws = Vec::new();
        for _ in 0..4000 {
            draws.push(sampler.draw(&mut rng).unwrap());
        }
        let mean = stats::mean(&draws);
        let se = stats::mc_se(&draws);
        assert!(mean.abs() < 4.0 * se, "mean {mean} vs se {se}");
        // distributional symmetry: sample vs its negation
        let neg: Vec<f64> = draws.iter().map(|x| -x).collect();
        let out = stats::ks_two_sample_test(&draws, &neg, 0.01);
        assert!(!out.reject);
    }

    #[test]
    fn boundary_hits_rare_at_default_window() {
        let sampler = ArgminSampler::new(0.5, 5.0, 1.0 / 256.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut hits = 0;
        for _ in 0..2000 {
            if sampler.draw(&mut rng).is_err() {
                hits += 1;
            }
        }
        assert_eq!(hits, 0, "boundary-hit frequency should be far below 1e-3");
    }

    #[test]
    fn two_sided_matches_direct_cholesky() {
        // the recentered construction vs a direct factorization of the
        // two-sided covariance, compared through KS on the argmin law
        let h = 0.75;
        let delta = 1.0 / 32.0;
        // wide enough that boundary escapes are ~5σ events at this Hurst
        let m = 3.5;
        let sampler = ArgminSampler::new(h, m, delta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reps = 1500;
        let mut shift_draws = Vec::new();
        for _ in 0..reps {
            shift_draws.push(sampler.draw(&mut rng).unwrap());
        }

        let grid: Vec<f64> = sampler.s_grid().into_iter().filter(|s| *s != 0.0).collect();
        let chol = cholesky_factor(h, &grid).unwrap();
        let mut direct_draws = Vec::new();
        for _ in 0..reps {
            let z: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
            let mut values = Vec::with_capacity(grid.len() + 1);
            for i in 0..grid.len() {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += chol[(i, j)] * z[j];
                }
                values.push(acc);
            }
            // reinsert B(0) = 0 at the center of the grid
            let zero_pos = grid.iter().position(|s| *s > 0.0).unwrap();
            values.insert(zero_pos, 0.0);
            direct_draws.push(argmin_quadratic(-m, delta, &values, m).unwrap());
        }
        let out = stats::ks_two_sample_test(&shift_draws, &direct_draws, 0.01);
        assert!(!out.reject, "KS = {}", out.statistic);
    }
}
