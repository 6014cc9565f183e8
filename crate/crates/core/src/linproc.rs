//! Simulation of the linear process `X_k = Σ_i a_i ξ_{k-i}`, its partial sums
//! `S_k`, and the coupled martingale surrogate `T_k = Σ_j c_{k,j} d_j`, all
//! driven by one innovation window.
//!
//! One window of `ξ` is drawn per replication; the `X` path comes from a
//! single FFT convolution with the coefficient kernel and the partial sums
//! from one prefix pass. Packing `ξ + i·d` into the complex signal yields the
//! coupled pair from the same transform, since the kernel is real.

use crate::coeffs::{self, CoefficientModel, Truncation};
use crate::innovations::{InnovWindow, InnovationModel};
use crate::{Error, Result};
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Which normalizer the experiment attaches to the path; stored explicitly so
/// scaling conventions cannot silently mix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// `v_n = (Σ_j c_{n,j}²)^{1/2}` over the retained window.
    VN,
    /// `s_n = √n |Σ_{|i|≤n} a_i|`.
    SN,
    /// `√n`.
    SqrtN,
}

/// One realization of the partial-sum path.
#[derive(Clone, Debug)]
pub struct SamplePath {
    pub n: usize,
    pub grid: Vec<f64>,
    /// `S_1, …, S_n`.
    pub s: Vec<f64>,
    /// Coupled martingale sums `T_1, …, T_n` when requested.
    pub t: Option<Vec<f64>>,
    pub normalizer: Normalizer,
    /// The value of the chosen normalizer; attached, never applied.
    pub norm_value: f64,
}

impl SamplePath {
    /// `S_{[nt]}` with `S_0 = 0`.
    #[inline]
    pub fn s_at_time(&self, t: f64) -> f64 {
        let k = ((self.n as f64) * t).floor() as usize;
        if k == 0 {
            0.0
        } else {
            self.s[k.min(self.n) - 1]
        }
    }

    #[inline]
    pub fn t_at_time(&self, t: f64) -> f64 {
        let k = ((self.n as f64) * t).floor() as usize;
        match (&self.t, k) {
            (_, 0) => 0.0,
            (Some(tt), k) => tt[k.min(self.n) - 1],
            (None, _) => f64::NAN,
        }
    }
}

/// Exact maxima over `k = 1..n`.
#[derive(Clone, Copy, Debug)]
pub struct MaxStats {
    pub max_abs_s: f64,
    pub max_s_sq: f64,
    pub max_abs_diff: Option<f64>,
}

pub fn max_statistics(path: &SamplePath) -> MaxStats {
    let max_abs_s = path.s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_abs_diff = path.t.as_ref().map(|t| {
        path.s
            .iter()
            .zip(t.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    });
    MaxStats { max_abs_s, max_s_sq: max_abs_s * max_abs_s, max_abs_diff }
}

/// Reusable simulator for one `(coefficients, innovations, n)` combination:
/// the coefficient kernel spectrum, window bounds, and normalizers are
/// computed once and shared read-only across replications.
pub struct PathSimulator {
    coeff: CoefficientModel<f64>,
    innov: InnovationModel,
    pub n: usize,
    pub grid: Vec<f64>,
    pub normalizer: Normalizer,
    pub j_lo: i64,
    pub j_hi: i64,
    /// `v_n²` over the same retained window that drives the simulation.
    pub v2: f64,
    pub s2: f64,
    kernel_lo: i64,
    fft_len: usize,
    a_spec: Vec<Complex<f64>>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    /// Compactly supported kernels convolve directly.
    short_kernel: Option<Vec<f64>>,
}

impl PathSimulator {
    pub fn new(
        coeff: &CoefficientModel<f64>,
        innov: &InnovationModel,
        n: usize,
        grid: Vec<f64>,
        normalizer: Normalizer,
        tr: &Truncation,
    ) -> Result<Self> {
        if grid.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) || grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("grid must be sorted inside (0, 1]".into()));
        }
        let profile = coeffs::window_profile(coeff, n, tr)?;
        let (j_lo, j_hi) = (profile.j_lo, profile.j_hi);
        let kernel_lo = if coeff.causal() { 0 } else { 1 - j_hi };
        let kernel_hi = match coeff.support() {
            coeffs::Support::Finite { hi, .. } => hi.min(n as i64 - j_lo),
            _ => n as i64 - j_lo,
        };
        let klen = (kernel_hi - kernel_lo + 1) as usize;
        let w = (j_hi - j_lo + 1) as usize;

        let short = klen <= 64;
        let fft_len = if short { 1 } else { (klen + w).next_power_of_two() };
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(fft_len);
        let fft_inv = planner.plan_fft_inverse(fft_len);

        let mut a_spec = vec![Complex::new(0.0, 0.0); fft_len];
        let mut short_kernel = None;
        let mut cur = coeffs::SeqCoeff::new(coeff, kernel_lo);
        if short {
            short_kernel = Some((0..klen).map(|_| cur.next_coeff()).collect());
        } else {
            for slot in a_spec.iter_mut().take(klen) {
                slot.re = cur.next_coeff();
            }
            fft_fwd.process(&mut a_spec);
        }

        Ok(PathSimulator {
            coeff: coeff.clone(),
            innov: innov.clone(),
            n,
            grid,
            normalizer,
            j_lo,
            j_hi,
            v2: profile.v2,
            s2: coeffs::s_squared(coeff, n),
            kernel_lo,
            fft_len,
            a_spec,
            fft_fwd,
            fft_inv,
            short_kernel,
        })
    }

    pub fn norm_value(&self) -> f64 {
        match self.normalizer {
            Normalizer::VN => self.v2.sqrt(),
            Normalizer::SN => self.s2.sqrt(),
            Normalizer::SqrtN => (self.n as f64).sqrt(),
        }
    }

    /// Convolve one complex-packed signal with the kernel spectrum. The two
    /// real channels come out as the real and imaginary parts. Short kernels
    /// skip the transform entirely.
    fn convolve(&self, re: &[f64], im: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        if let Some(kernel) = &self.short_kernel {
            let direct = |u: &[f64]| -> Vec<f64> {
                (0..self.n)
                    .map(|k| {
                        // X_k = Σ_m a_m u[k + 1 - j_lo - kernel_lo - m]
                        let base = (k as i64 + 1 - self.j_lo - self.kernel_lo) as usize;
                        kernel
                            .iter()
                            .enumerate()
                            .filter(|(m, _)| *m <= base && base - *m < u.len())
                            .map(|(m, a)| a * u[base - m])
                            .sum()
                    })
                    .collect()
            };
            let xs = direct(re);
            let ys = im.map(|u| direct(u)).unwrap_or_default();
            return (xs, ys);
        }
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        for (k, slot) in buf.iter_mut().take(re.len()).enumerate() {
            slot.re = re[k];
            if let Some(im) = im {
                slot.im = im[k];
            }
        }
        self.fft_fwd.process(&mut buf);
        for (b, a) in buf.iter_mut().zip(self.a_spec.iter()) {
            *b *= *a;
        }
        self.fft_inv.process(&mut buf);
        let scale = 1.0 / self.fft_len as f64;
        // X_k sits at convolution offset k - kernel_lo - j_lo
        let base = (1 - self.kernel_lo - self.j_lo) as usize;
        let xs = (0..self.n).map(|k| buf[base + k].re * scale).collect();
        let ys = (0..self.n).map(|k| buf[base + k].im * scale).collect();
        (xs, ys)
    }

    /// One replication. With `with_martingale`, `T` is driven by the
    /// identical underlying randomness as `S`.
    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R, with_martingale: bool) -> SamplePath {
        let window = self.innov.sample_window(self.j_lo, self.j_hi, rng, with_martingale);
        self.path_from_window(&window, with_martingale)
    }

    /// Assemble the path from an already-sampled window (used by coupling
    /// diagnostics that need the window afterwards).
    pub fn path_from_window(&self, window: &InnovWindow, with_martingale: bool) -> SamplePath {
        let (xs, ys) = self.convolve(&window.xi, window.md.as_deref());
        let mut s = xs;
        let mut acc = 0.0;
        for v in s.iter_mut() {
            acc += *v;
            *v = acc;
        }
        let t = with_martingale.then(|| {
            let mut t = ys;
            let mut acc = 0.0;
            for v in t.iter_mut() {
                acc += *v;
                *v = acc;
            }
            t
        });
        SamplePath {
            n: self.n,
            grid: self.grid.clone(),
            s,
            t,
            normalizer: self.normalizer,
            norm_value: self.norm_value(),
        }
    }

    /// Sample an innovation window compatible with this simulator.
    pub fn sample_window<R: Rng + ?Sized>(&self, rng: &mut R, with_md: bool) -> InnovWindow {
        self.innov.sample_window(self.j_lo, self.j_hi, rng, with_md)
    }

    /// The endpoint `S_k` as the linear statistic `Σ_j c_{k,j} ξ_j`
    /// (no FFT; used by marginal-law experiments and as the second route in
    /// the two-route agreement check).
    pub fn linear_statistic(&self, k: usize) -> LinearStatistic {
        let top = if self.coeff.causal() { (k as i64).min(self.j_hi) } else { self.j_hi };
        LinearStatistic {
            j_lo: self.j_lo,
            c: coeffs::window_on(&self.coeff, k, self.j_lo, top),
        }
    }

    pub fn coeff(&self) -> &CoefficientModel<f64> {
        &self.coeff
    }
    pub fn innov(&self) -> &InnovationModel {
        &self.innov
    }
}

/// Precomputed weights for evaluating `S_k = Σ_j c_{k,j} ξ_j` by dot product.
pub struct LinearStatistic {
    pub j_lo: i64,
    pub c: Vec<f64>,
}

impl LinearStatistic {
    pub fn evaluate(&self, window: &InnovWindow) -> f64 {
        debug_assert_eq!(self.j_lo, window.j_lo);
        self.c
            .iter()
            .zip(window.xi.iter())
            .map(|(c, x)| c * x)
            .sum()
    }
}

/// Convenience one-shot wrapper around [`PathSimulator`].
pub fn simulate_path<R: Rng + ?Sized>(
    coeff: &CoefficientModel<f64>,
    innov: &InnovationModel,
    n: usize,
    grid: Vec<f64>,
    rng: &mut R,
    with_martingale: bool,
    tr: &Truncation,
) -> Result<SamplePath> {
    let sim = PathSimulator::new(coeff, innov, n, grid, Normalizer::VN, tr)?;
    Ok(sim.simulate(rng, with_martingale))
}
