//! Serializable configuration records for models and experiments. These are
//! the JSON-facing shapes; flags in the CLI override fields loaded from a
//! config file.

use crate::coeffs::{CoefficientKind, CoefficientModel, Truncation};
use crate::innovations::{InnovationModel, ThetaSeq};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoeffConfig {
    Fractional { d: f64 },
    PowerDiff { alpha: f64 },
    PowerTail { alpha: f64 },
    LogDamped { alpha: f64 },
    AlternatingHeyde { p: f64, #[serde(default)] q: f64 },
    Harmonic,
    Dirac,
    FiniteMa { values: Vec<f64> },
}

impl CoeffConfig {
    pub fn build(&self) -> Result<CoefficientModel<f64>> {
        match self {
            CoeffConfig::Fractional { d } => CoefficientModel::fractional(*d),
            CoeffConfig::PowerDiff { alpha } => CoefficientModel::power_diff(*alpha),
            CoeffConfig::PowerTail { alpha } => CoefficientModel::power_tail(*alpha),
            CoeffConfig::LogDamped { alpha } => CoefficientModel::log_damped(*alpha),
            CoeffConfig::AlternatingHeyde { p, q } => CoefficientModel::alternating_heyde(*p, *q),
            CoeffConfig::Harmonic => Ok(CoefficientModel::harmonic()),
            CoeffConfig::Dirac => Ok(CoefficientModel::dirac()),
            CoeffConfig::FiniteMa { values } => CoefficientModel::finite_ma(values.clone()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CoeffConfig::Fractional { .. } => "fractional",
            CoeffConfig::PowerDiff { .. } => "power_diff",
            CoeffConfig::PowerTail { .. } => "power_tail",
            CoeffConfig::LogDamped { .. } => "log_damped",
            CoeffConfig::AlternatingHeyde { .. } => "alternating_heyde",
            CoeffConfig::Harmonic => "harmonic",
            CoeffConfig::Dirac => "dirac",
            CoeffConfig::FiniteMa { .. } => "finite_ma",
        }
    }

    pub fn params_label(&self) -> String {
        match self {
            CoeffConfig::Fractional { d } => format!("d={d}"),
            CoeffConfig::PowerDiff { alpha } | CoeffConfig::PowerTail { alpha } => {
                format!("alpha={alpha}")
            }
            CoeffConfig::LogDamped { alpha } => format!("alpha={alpha}"),
            CoeffConfig::AlternatingHeyde { p, q } => format!("p={p};q={q}"),
            CoeffConfig::Harmonic | CoeffConfig::Dirac => String::new(),
            CoeffConfig::FiniteMa { values } => format!("len={}", values.len()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovConfig {
    IidGaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
    IidStudentT { nu: f64 },
    CausalGeometric {
        ratio: f64,
        #[serde(default = "one")]
        sigma: f64,
    },
    CausalFinite {
        theta: Vec<f64>,
        #[serde(default = "one")]
        sigma: f64,
    },
    MarkovTwoState {
        #[serde(default = "default_stay")]
        stay: f64,
    },
    Markov {
        transition: Vec<Vec<f64>>,
        f: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}
fn default_stay() -> f64 {
    0.9
}

impl InnovConfig {
    pub fn build(&self) -> Result<InnovationModel> {
        match self {
            InnovConfig::IidGaussian { sigma } => InnovationModel::iid_gaussian(*sigma),
            InnovConfig::IidStudentT { nu } => InnovationModel::iid_student_t(*nu),
            InnovConfig::CausalGeometric { ratio, sigma } => {
                InnovationModel::causal_linear(ThetaSeq::Geometric { ratio: *ratio }, *sigma)
            }
            InnovConfig::CausalFinite { theta, sigma } => {
                InnovationModel::causal_linear(ThetaSeq::Finite(theta.clone()), *sigma)
            }
            InnovConfig::MarkovTwoState { stay } => InnovationModel::two_state(*stay),
            InnovConfig::Markov { transition, f } => {
                let m = transition.len();
                let flat: Vec<f64> = transition.iter().flatten().copied().collect();
                InnovationModel::markov_functional(
                    DMatrix::from_row_slice(m, flat.len() / m.max(1), &flat),
                    DVector::from_column_slice(f),
                )
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            InnovConfig::IidGaussian { .. } => "iid_gaussian",
            InnovConfig::IidStudentT { .. } => "iid_student_t",
            InnovConfig::CausalGeometric { .. } => "causal_geometric",
            InnovConfig::CausalFinite { .. } => "causal_finite",
            InnovConfig::MarkovTwoState { .. } => "markov_two_state",
            InnovConfig::Markov { .. } => "markov",
        }
    }
}

/// What the truncation tolerance is buying; deterministic normalizer scans
/// want tight windows, Monte Carlo paths only need consistent ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncPurpose {
    Normalizers,
    Simulation,
}

/// Kind-aware default truncation: heavy-`j`-tail rules cannot reach the
/// compact-support default of `1e-8`, and the log-damped rule's tail is only
/// logarithmically summable, so it runs best-effort with a width cap
/// proportional to `n`.
pub fn default_truncation(model: &CoefficientModel<f64>, n: usize, purpose: TruncPurpose) -> Truncation {
    use CoefficientKind::*;
    let tight = purpose == TruncPurpose::Normalizers;
    match model.kind() {
        Dirac | FiniteMa(_) | AlternatingHeyde { .. } => Truncation::new(1e-8),
        PowerDiff { .. } => Truncation::new(if tight { 1e-4 } else { 1e-3 }),
        Harmonic => Truncation::new(if tight { 1e-4 } else { 1e-2 }),
        Fractional { .. } | PowerTail { .. } => Truncation::new(if tight { 0.01 } else { 0.05 }),
        LogDamped { .. } => Truncation::best_effort(1e-6, 64 * n.max(1024)),
        Custom(_) => Truncation::new(if tight { 1e-4 } else { 1e-2 }),
    }
}

/// Programmatic experiment record: one seeded, fully deterministic run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub coeff: Option<CoeffConfig>,
    pub innov: Option<InnovConfig>,
    pub n: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    /// Time grid inside (0, 1].
    pub grid: Option<Vec<f64>>,
    pub replications: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub rel_tol: Option<f64>,
    /// KS level for statistical verdicts.
    pub alpha: Option<f64>,
    pub meta_runs: Option<usize>,
    pub hurst: Option<f64>,
    pub half_width: Option<f64>,
    pub delta: Option<f64>,
    pub q: Option<f64>,
    pub t: Option<f64>,
    /// Slope of the linear trend function `phi(x) = phi_slope · x`.
    pub phi_slope: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            coeff: None,
            innov: None,
            n: None,
            n_grid: None,
            grid: None,
            replications: None,
            seed: 0,
            rel_tol: None,
            alpha: None,
            meta_runs: None,
            hurst: None,
            half_width: None,
            delta: None,
            q: None,
            t: None,
            phi_slope: None,
        }
    }
}

impl ExperimentConfig {
    pub fn truncation(&self, model: &CoefficientModel<f64>, n: usize, purpose: TruncPurpose) -> Truncation {
        match self.rel_tol {
            Some(rt) => Truncation::new(rt),
            None => default_truncation(model, n, purpose),
        }
    }
}
