//! Closed-form ergodic-rate machinery and its quadrature oracle.
//!
//! The per-user ergodic rate has two closed branches: with interference, a
//! double sum of partial-fraction weights against differences of scaled
//! exponential integrals; without, a single sum of the same kernels. When
//! the weights are ill-conditioned (near-equal gains) the evaluation falls
//! back to adaptive quadrature of the SINR density, and to a seeded Monte
//! Carlo estimate if the density itself is unusable; the chosen method is
//! reported alongside the value.

mod expint;
mod pdf;
pub mod quadrature;

pub use expint::exp_e1_scaled;
pub use pdf::{conditioning_number, interference_pdf, signal_pdf, sinr_pdf, UserGains};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{LinkBudget, PathlossMatrix};
use crate::modes::{ModeError, ModeGroups, TransmissionMode};

use pdf::{partial_fraction_weights, sinr_pdf_prepared};

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("{name} must be positive and finite, got {value}")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error("gain must be positive and finite, got {0}")]
    InvalidGain(f64),
    #[error("{list} gain list must not be empty")]
    EmptyGains { list: &'static str },
    #[error("mode spans {found} ports but the gain matrix has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error("quadrature did not converge (value {value}, error estimate {error})")]
    QuadratureFailed { value: f64, error: f64 },
    #[error("policy field {name} out of range: {value}")]
    InvalidPolicy { name: &'static str, value: f64 },
}

/// Numerical policy for closed-form evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalPolicy {
    /// Relative spread applied to coincident gains before partial fractions.
    pub tie_epsilon: f64,
    /// Largest tolerated partial-fraction term before falling back.
    pub conditioning_threshold: f64,
    /// Relative tolerance for the adaptive quadrature.
    pub quadrature_rel_tol: f64,
    /// Disabled only to exercise the conditioning guard.
    pub perturb_ties: bool,
    /// Realizations for the Monte Carlo fallback branch.
    pub fallback_realizations: u32,
    /// Seed for the (deterministic) Monte Carlo fallback.
    pub fallback_seed: u64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self {
            tie_epsilon: 1e-9,
            conditioning_threshold: 1e12,
            quadrature_rel_tol: 1e-9,
            perturb_ties: true,
            fallback_realizations: 200_000,
            fallback_seed: 0x0da5_ca1e,
        }
    }
}

impl EvalPolicy {
    pub fn validate(&self) -> Result<(), RateError> {
        if !(self.tie_epsilon > 0.0 && self.tie_epsilon < 1e-3) {
            return Err(RateError::InvalidPolicy {
                name: "tie_epsilon",
                value: self.tie_epsilon,
            });
        }
        if !(self.conditioning_threshold > 0.0) {
            return Err(RateError::InvalidPolicy {
                name: "conditioning_threshold",
                value: self.conditioning_threshold,
            });
        }
        if !(self.quadrature_rel_tol > 0.0) {
            return Err(RateError::InvalidPolicy {
                name: "quadrature_rel_tol",
                value: self.quadrature_rel_tol,
            });
        }
        Ok(())
    }
}

/// Which evaluation path produced a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    ClosedForm,
    Quadrature,
    MonteCarloFallback,
}

/// A rate value together with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub value: f64,
    pub method: RateMethod,
}

/// Per-user rates, their sum, and the weakest branch used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserRateBreakdown {
    pub per_user_rates: Vec<f64>,
    pub sum_rate: f64,
    pub method: RateMethod,
}

const LN_2: f64 = std::f64::consts::LN_2;

/// Closed-form interference branch on perturbed gain lists. Returns the rate
/// in bits/s/Hz; `None` when a scaled-E1 evaluation failed (cannot happen for
/// valid inputs, kept as a guard).
fn closed_rate_with_interference(
    serving: &[f64],
    interfering: &[f64],
    power: f64,
    noise: f64,
) -> Option<f64> {
    let a = partial_fraction_weights(serving);
    let b = partial_fraction_weights(interfering);
    let e_serv: Vec<f64> = serving
        .iter()
        .map(|&s| exp_e1_scaled(noise / (s * power)).ok())
        .collect::<Option<_>>()?;
    let e_intf: Vec<f64> = interfering
        .iter()
        .map(|&s| exp_e1_scaled(noise / (s * power)).ok())
        .collect::<Option<_>>()?;
    let mut total = 0.0;
    for (k, &sk) in serving.iter().enumerate() {
        for (u, &su) in interfering.iter().enumerate() {
            let cross = sk / (sk - su);
            total += a[k] * b[u] * cross * (e_serv[k] - e_intf[u]);
        }
    }
    Some(total / LN_2)
}

/// Closed-form single-user branch (no interference) on perturbed gains.
fn closed_rate_single_user(serving: &[f64], power: f64, noise: f64) -> Option<f64> {
    let a = partial_fraction_weights(serving);
    let mut total = 0.0;
    for (k, &sk) in serving.iter().enumerate() {
        total += a[k] * exp_e1_scaled(noise / (sk * power)).ok()?;
    }
    Some(total / LN_2)
}

/// Ergodic rate of one user in bits/s/Hz, by the closed form when well
/// conditioned, else quadrature, else a seeded Monte Carlo estimate.
///
/// An inactive user (empty serving set) has rate exactly 0.
pub fn ergodic_user_rate_closed(
    gains: &UserGains,
    budget: &LinkBudget,
    policy: &EvalPolicy,
) -> RateEstimate {
    if !gains.is_active() {
        return RateEstimate {
            value: 0.0,
            method: RateMethod::ClosedForm,
        };
    }
    let (serving, interfering) = gains.perturbed(policy);
    let power = budget.power();
    let noise = budget.noise_variance();

    let cond = conditioning_number(gains, policy);
    if cond.is_finite() && cond <= policy.conditioning_threshold {
        let value = if interfering.is_empty() {
            closed_rate_single_user(&serving, power, noise)
        } else {
            closed_rate_with_interference(&serving, &interfering, power, noise)
        };
        if let Some(v) = value {
            if v.is_finite() {
                return RateEstimate {
                    // Tiny negative values are cancellation residue of an
                    // analytically non-negative quantity.
                    value: v.max(0.0),
                    method: RateMethod::ClosedForm,
                };
            }
        }
    }

    if let Some(v) = quadrature_rate_checked(&serving, &interfering, power, noise, policy) {
        return RateEstimate {
            value: v,
            method: RateMethod::Quadrature,
        };
    }

    RateEstimate {
        value: mc_fallback_rate(gains, budget, policy),
        method: RateMethod::MonteCarloFallback,
    }
}

/// Quadrature of the rate integrand plus a normalization sanity check; the
/// density inherits the partial-fraction weights, so an ill-conditioned
/// instance shows up as mass far from 1 or a non-finite result.
fn quadrature_rate_checked(
    serving: &[f64],
    interfering: &[f64],
    power: f64,
    noise: f64,
    policy: &EvalPolicy,
) -> Option<f64> {
    // As a fallback the quadrature only needs to beat the broken closed
    // form, not the oracle tolerance; the density's own cancellation noise
    // caps what is reachable anyway.
    let mut fallback_policy = *policy;
    fallback_policy.quadrature_rel_tol = policy.quadrature_rel_tol.max(1e-6);
    let policy = &fallback_policy;
    let rate = quadrature_rate_prepared(serving, interfering, power, noise, policy).ok()?;
    if !rate.is_finite() || rate < -1e-9 {
        return None;
    }
    let scale = sinr_scale(serving, power, noise);
    let breakpoints = quadrature::decade_breakpoints(scale);
    let mass = if interfering.is_empty() {
        quadrature::integrate_zero_to_inf(
            |rho| density_single_user(rho, serving, power, noise),
            &breakpoints,
            policy.quadrature_rel_tol.max(1e-10),
        )
    } else {
        quadrature::integrate_zero_to_inf(
            |rho| sinr_pdf_prepared(rho, serving, interfering, power, noise),
            &breakpoints,
            policy.quadrature_rel_tol.max(1e-10),
        )
    }
    .ok()?;
    if (mass - 1.0).abs() > 1e-4 {
        return None;
    }
    Some(rate.max(0.0))
}

/// Largest signal scale `max(S) P / sigma^2`; the SINR density lives within
/// a few decades of this.
fn sinr_scale(serving: &[f64], power: f64, noise: f64) -> f64 {
    let max_gain = serving.iter().fold(0.0f64, |m, &g| m.max(g));
    (max_gain * power / noise).max(1e-30)
}

/// Density of `rho = signal / sigma^2` for a user without interference.
fn density_single_user(rho: f64, serving: &[f64], power: f64, noise: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let weights = partial_fraction_weights(serving);
    serving
        .iter()
        .zip(&weights)
        .map(|(&g, &w)| {
            let mean = g * power / noise;
            w / mean * (-rho / mean).exp()
        })
        .sum()
}

/// Direct adaptive quadrature of `log2(1+rho)` against the SINR density,
/// the in-repo oracle for the closed form.
pub fn ergodic_user_rate_quadrature(
    gains: &UserGains,
    budget: &LinkBudget,
    policy: &EvalPolicy,
) -> Result<f64, RateError> {
    if !gains.is_active() {
        return Ok(0.0);
    }
    let (serving, interfering) = gains.perturbed(policy);
    quadrature_rate_prepared(
        &serving,
        &interfering,
        budget.power(),
        budget.noise_variance(),
        policy,
    )
}

fn quadrature_rate_prepared(
    serving: &[f64],
    interfering: &[f64],
    power: f64,
    noise: f64,
    policy: &EvalPolicy,
) -> Result<f64, RateError> {
    let breakpoints = quadrature::decade_breakpoints(sinr_scale(serving, power, noise));
    if interfering.is_empty() {
        quadrature::integrate_zero_to_inf(
            |rho| (1.0 + rho).log2() * density_single_user(rho, serving, power, noise),
            &breakpoints,
            policy.quadrature_rel_tol,
        )
    } else {
        quadrature::integrate_zero_to_inf(
            |rho| (1.0 + rho).log2() * sinr_pdf_prepared(rho, serving, interfering, power, noise),
            &breakpoints,
            policy.quadrature_rel_tol,
        )
    }
}

/// Integral of the SINR density over `(0, inf)`; 1 up to quadrature error
/// for any valid interference-limited instance.
pub fn sinr_pdf_normalization(
    gains: &UserGains,
    budget: &LinkBudget,
    policy: &EvalPolicy,
) -> Result<f64, RateError> {
    if !gains.is_active() {
        return Err(RateError::EmptyGains { list: "serving" });
    }
    if !gains.has_interference() {
        return Err(RateError::EmptyGains {
            list: "interfering",
        });
    }
    let (serving, interfering) = gains.perturbed(policy);
    let power = budget.power();
    let noise = budget.noise_variance();
    let breakpoints = quadrature::decade_breakpoints(sinr_scale(&serving, power, noise));
    quadrature::integrate_zero_to_inf(
        |rho| sinr_pdf_prepared(rho, &serving, &interfering, power, noise),
        &breakpoints,
        policy.quadrature_rel_tol,
    )
}

/// Seeded Monte Carlo estimate of the user rate straight from the
/// instantaneous SINR; last-resort branch for degenerate coefficients.
fn mc_fallback_rate(gains: &UserGains, budget: &LinkBudget, policy: &EvalPolicy) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(policy.fallback_seed);
    let power = budget.power();
    let noise = budget.noise_variance();
    let n = policy.fallback_realizations.max(2);
    let mut acc = 0.0;
    for _ in 0..n {
        let mut signal = 0.0;
        for &g in gains.serving() {
            signal += g * power * exp_draw(&mut rng);
        }
        let mut denom = noise;
        for &g in gains.interfering() {
            denom += g * power * exp_draw(&mut rng);
        }
        acc += (1.0 + signal / denom).log2();
    }
    acc / n as f64
}

fn exp_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(-rng.random::<f64>()).ln_1p()
}

/// Ergodic sum rate of a mode: per-user closed rates and their sum, with
/// the weakest evaluation branch recorded.
pub fn ergodic_sum_rate_closed(
    mode: &TransmissionMode,
    gains: &PathlossMatrix,
    budget: &LinkBudget,
    policy: &EvalPolicy,
) -> Result<UserRateBreakdown, RateError> {
    if mode.n_ports() != gains.n_ports() {
        return Err(RateError::DimensionMismatch {
            expected: gains.n_ports(),
            found: mode.n_ports(),
        });
    }
    let groups = ModeGroups::derive(mode, gains.k_users())?;
    let mut per_user_rates = Vec::with_capacity(gains.k_users());
    let mut method = RateMethod::ClosedForm;
    for user in 0..gains.k_users() {
        let user_gains = UserGains::for_user(&groups, user, gains);
        let est = ergodic_user_rate_closed(&user_gains, budget, policy);
        method = method.max(est.method);
        per_user_rates.push(est.value);
    }
    let sum_rate = per_user_rates.iter().sum();
    Ok(UserRateBreakdown {
        per_user_rates,
        sum_rate,
        method,
    })
}
