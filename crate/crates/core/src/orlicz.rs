//! Orlicz (Luxemburg) norms: `‖X‖_Ψ = inf {c > 0 : E Ψ(|X|/c) ≤ 1}`,
//! estimated on samples by bisection, for the power family `Ψ(x) = x^q` and
//! the log-power family `Ψ(x) = x² ln^α(1+x²)`.

use crate::num::Real;
use crate::{Error, Result};

/// A convex, nondecreasing Young function with `Ψ(0) = 0` and a numeric
/// inverse (closed form for powers, bracketed bisection otherwise).
#[derive(Clone, Copy, Debug)]
pub enum OrliczFunction<T: Real> {
    /// `Ψ(x) = x^q`, `q ≥ 1`; the Luxemburg norm is then the `L^q` norm.
    Power { q: T },
    /// `Ψ(x) = x² ln^α(1 + x²)`, `α > 2`; grows barely faster than `x²`,
    /// which is what the dyadic maximal bound exploits.
    LogPower { alpha: T },
}

impl<T: Real> OrliczFunction<T> {
    pub fn power(q: T) -> Result<Self> {
        if q < T::one() {
            return Err(Error::InvalidParameter("Power Orlicz function needs q >= 1".into()));
        }
        Ok(OrliczFunction::Power { q })
    }

    pub fn log_power(alpha: T) -> Result<Self> {
        if alpha <= T::from_f64_(2.0) {
            return Err(Error::InvalidParameter("LogPower Orlicz function needs alpha > 2".into()));
        }
        Ok(OrliczFunction::LogPower { alpha })
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        debug_assert!(x >= T::zero());
        match *self {
            OrliczFunction::Power { q } => x.powf(q),
            OrliczFunction::LogPower { alpha } => {
                let x2 = x * x;
                x2 * (T::one() + x2).ln().powf(alpha)
            }
        }
    }

    /// `Ψ^{-1}(y)` for `y ≥ 0`: closed form for powers, monotone bisection
    /// with bracket doubling otherwise (relative tolerance `1e-10`).
    pub fn inverse(&self, y: T) -> T {
        if y <= T::zero() {
            return T::zero();
        }
        match *self {
            OrliczFunction::Power { q } => y.powf(q.recip()),
            OrliczFunction::LogPower { .. } => {
                let mut hi = T::one();
                while self.eval(hi) < y {
                    hi = hi + hi;
                }
                let mut lo = T::zero();
                // bisect essentially to machine precision so the value
                // roundtrip Ψ(Ψ⁻¹(y)) = y holds to 1e-10 relative
                let tol = T::epsilon() * T::from_f64_(4.0);
                while (hi - lo) > tol * hi.max(T::one()) {
                    let mid = (lo + hi) * T::from_f64_(0.5);
                    if self.eval(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (lo + hi) * T::from_f64_(0.5)
            }
        }
    }

    /// The growth exponent α with `Ψ(cx) ≤ c^α Ψ(x)` for `c ≥ 2`
    /// (class membership; for the log-power family `ln(1+c²x²) ≤ c² ln(1+x²)`
    /// gives `2 + 2α`).
    pub fn growth_exponent(&self) -> T {
        match *self {
            OrliczFunction::Power { q } => q,
            OrliczFunction::LogPower { alpha } => T::from_f64_(2.0) + alpha + alpha,
        }
    }
}

/// Empirical Luxemburg norm under an arbitrary Young function evaluator.
///
/// Starts from the bracket `[max|x| / Ψ^{-1}(size), max|x| / Ψ^{-1}(1/size)]`
/// (which always straddles the root) and bisects `mean Ψ(|x_i|/c) = 1` to a
/// relative tolerance of `1e-6`.
pub fn orlicz_norm_with<T: Real>(
    sample: &[T],
    eval: impl Fn(T) -> T,
    inverse: impl Fn(T) -> T,
) -> T {
    assert!(!sample.is_empty(), "orlicz norm of an empty sample");
    let max_abs = sample.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if max_abs == T::zero() {
        return T::zero();
    }
    let size = T::from_usize_(sample.len());
    let mean_at = |c: T| {
        let mut s = T::zero();
        for x in sample {
            s += eval(x.abs() / c);
        }
        s / size
    };
    let mut lo = max_abs / inverse(size);
    let mut hi = max_abs / inverse(size.recip());
    // the analytic bracket is exact for the empirical mean, but guard against
    // rounding at the edges by geometric expansion
    let half = T::from_f64_(0.5);
    while mean_at(lo) < T::one() {
        lo = lo * half;
    }
    while mean_at(hi) > T::one() {
        hi = hi + hi;
    }
    let tol = T::from_f64_(1e-6);
    while (hi - lo) > tol * hi {
        let mid = (lo + hi) * half;
        if mean_at(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * half
}

/// Empirical Luxemburg norm of a sample under `psi`.
pub fn orlicz_norm<T: Real>(sample: &[T], psi: &OrliczFunction<T>) -> T {
    orlicz_norm_with(sample, |x| psi.eval(x), |y| psi.inverse(y))
}

/// Empirical `L^q` norm `(mean |x|^q)^{1/q}`.
pub fn empirical_q_norm<T: Real>(sample: &[T], q: T) -> T {
    let n = T::from_usize_(sample.len());
    (sample.iter().map(|x| x.abs().powf(q)).sum::<T>() / n).powf(q.recip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_norm_is_q_norm() {
        let sample: Vec<f64> = (1..=200).map(|k| (k as f64 * 0.37).sin() * 2.0).collect();
        for q in [1.0, 2.0, 4.0] {
            let psi = OrliczFunction::power(q).unwrap();
            let a = orlicz_norm(&sample, &psi);
            let b = empirical_q_norm(&sample, q);
            assert!((a / b - 1.0).abs() < 1e-5, "q={q}: {a} vs {b}");
        }
    }

    #[test]
    fn constant_sample_power2() {
        let psi = OrliczFunction::power(2.0).unwrap();
        let sample = vec![3.0f64; 100];
        assert!((orlicz_norm(&sample, &psi) - 3.0).abs() < 1e-5);
    }

    #[test]
    fn zero_sample() {
        let psi = OrliczFunction::power(2.0).unwrap();
        assert_eq!(orlicz_norm(&[0.0, 0.0], &psi), 0.0);
    }

    #[test]
    fn inverse_roundtrip() {
        let psi = OrliczFunction::<f64>::log_power(3.0).unwrap();
        for y in [1e-6, 0.5, 1.0, 7.0, 1e4] {
            let x = psi.inverse(y);
            assert!((psi.eval(x) / y - 1.0).abs() < 1e-9, "y = {y}");
        }
        let p = OrliczFunction::<f64>::power(2.0).unwrap();
        assert!((p.inverse(9.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn young_function_class_properties() {
        // convexity, Ψ(0)=0, monotonicity, Ψ(√x) convexity, and the growth
        // bound Ψ(cx) ≤ c^α Ψ(x) for c ≥ 2, all on a sampled grid
        let functions: Vec<OrliczFunction<f64>> = vec![
            OrliczFunction::power(2.0).unwrap(),
            OrliczFunction::power(4.0).unwrap(),
            OrliczFunction::log_power(3.0).unwrap(),
        ];
        let xs: Vec<f64> = (1..=80).map(|k| k as f64 * 0.25).collect();
        for psi in &functions {
            assert_eq!(psi.eval(0.0), 0.0);
            let alpha = psi.growth_exponent();
            for w in xs.windows(3) {
                let (a, b, c) = (w[0], w[1], w[2]);
                // midpoint convexity of Ψ and of x ↦ Ψ(√x)
                assert!(psi.eval(b) <= 0.5 * (psi.eval(a) + psi.eval(c)) + 1e-9);
                let g = |x: f64| psi.eval(x.sqrt());
                assert!(g(b) <= 0.5 * (g(a) + g(c)) + 1e-9);
                assert!(psi.eval(b) >= psi.eval(a));
            }
            for &x in &xs {
                for c in [2.0, 3.0, 10.0] {
                    assert!(
                        psi.eval(c * x) <= c.powf(alpha) * psi.eval(x) * (1.0 + 1e-12),
                        "growth bound at x={x}, c={c}"
                    );
                }
            }
        }
    }

    #[test]
    fn norm_is_homogeneous() {
        let sample: Vec<f64> = (1..=5000)
            .map(|k| ((k * 2654435761u64 as usize % 1000) as f64 / 500.0 - 1.0) * 3.0)
            .collect();
        let psi = OrliczFunction::log_power(3.0).unwrap();
        let base = orlicz_norm(&sample, &psi);
        for c in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = sample.iter().map(|x| c * x).collect();
            let v = orlicz_norm(&scaled, &psi);
            assert!((v / (c * base) - 1.0).abs() < 1e-5, "c = {c}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(OrliczFunction::<f64>::power(0.5).is_err());
        assert!(OrliczFunction::<f64>::log_power(2.0).is_err());
    }
}
