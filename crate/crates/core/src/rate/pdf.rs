//! Signal, interference, and SINR probability densities.
//!
//! With fixed large-scale gains the desired and interfering powers are sums
//! of independent exponentials with distinct means, so their densities are
//! hypoexponential mixtures with partial-fraction weights
//! `A_k = prod_{l!=k} S_k/(S_k - S_l)`. The SINR density integrates the
//! signal density against the shifted interference-plus-noise density and
//! collapses to a rational-times-exponential form.
//!
//! The weights are singular for coincident gains; callers perturb tied
//! values first (see [`spread_ties`]) and guard against near-ties through
//! the conditioning number.

use crate::geometry::LinkBudget;

use super::{EvalPolicy, RateError};

/// Partial-fraction weights `A_k = prod_{l != k} g_k / (g_k - g_l)`.
///
/// Entries are non-finite when gains coincide; the caller decides whether
/// that trips the conditioning guard.
pub(crate) fn partial_fraction_weights(gains: &[f64]) -> Vec<f64> {
    gains
        .iter()
        .enumerate()
        .map(|(k, &gk)| {
            let mut w = 1.0;
            for (l, &gl) in gains.iter().enumerate() {
                if l != k {
                    w *= gk / (gk - gl);
                }
            }
            w
        })
        .collect()
}

/// Multiplicatively spread groups of (near-)equal values so the
/// partial-fraction weights stay finite.
///
/// Values within `epsilon` relative of each other form a tie group; member
/// `m` of a group (1-based, in order of first appearance) is scaled by
/// `1 + m*epsilon`. Coincident gains are a measure-zero event under random
/// drops, so the spread moves rates by O(epsilon).
pub(crate) fn spread_ties(values: &mut [f64], epsilon: f64) {
    let n = values.len();
    if n < 2 {
        return;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut group_start = 0;
    let assign = |group: &[usize], values: &mut [f64]| {
        if group.len() < 2 {
            return;
        }
        let mut members = group.to_vec();
        members.sort_unstable();
        for (m, &idx) in members.iter().enumerate() {
            values[idx] *= 1.0 + (m as f64 + 1.0) * epsilon;
        }
    };
    for i in 1..=n {
        let chained = i < n && {
            let a = values[order[i - 1]];
            let b = values[order[i]];
            (b - a).abs() <= epsilon * a.abs().max(b.abs())
        };
        if !chained {
            assign(&order[group_start..i], values);
            group_start = i;
        }
    }
}

/// Serving and interfering large-scale gains for one user under one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGains {
    serving: Vec<f64>,
    interfering: Vec<f64>,
}

impl UserGains {
    /// Gains must be positive and finite; an inactive user has an empty
    /// serving list.
    pub fn new(serving: Vec<f64>, interfering: Vec<f64>) -> Result<Self, RateError> {
        for &g in serving.iter().chain(interfering.iter()) {
            if !(g > 0.0) || !g.is_finite() {
                return Err(RateError::InvalidGain(g));
            }
        }
        Ok(Self {
            serving,
            interfering,
        })
    }

    /// Extract one user's gains from the mode groups and the gain matrix.
    pub fn for_user(
        groups: &crate::modes::ModeGroups,
        user: usize,
        gains: &crate::geometry::PathlossMatrix,
    ) -> Self {
        let row = gains.row(user);
        Self {
            serving: groups.serving(user).iter().map(|&j| row[j]).collect(),
            interfering: groups.interference(user).iter().map(|&j| row[j]).collect(),
        }
    }

    pub fn serving(&self) -> &[f64] {
        &self.serving
    }

    pub fn interfering(&self) -> &[f64] {
        &self.interfering
    }

    pub fn is_active(&self) -> bool {
        !self.serving.is_empty()
    }

    pub fn has_interference(&self) -> bool {
        !self.interfering.is_empty()
    }

    /// Tie-spread copies of (serving, interfering), perturbed jointly since
    /// the closed form also needs serving and interfering gains distinct
    /// from each other.
    pub(crate) fn perturbed(&self, policy: &EvalPolicy) -> (Vec<f64>, Vec<f64>) {
        let mut combined: Vec<f64> = self
            .serving
            .iter()
            .chain(self.interfering.iter())
            .copied()
            .collect();
        if policy.perturb_ties {
            spread_ties(&mut combined, policy.tie_epsilon);
        }
        let interfering = combined.split_off(self.serving.len());
        (combined, interfering)
    }
}

/// Density of the desired signal power `sum_k S_k P |h_k|^2` at `rho`.
pub fn signal_pdf(
    rho: f64,
    serving_gains: &[f64],
    power: f64,
    policy: &EvalPolicy,
) -> Result<f64, RateError> {
    if serving_gains.is_empty() {
        return Err(RateError::EmptyGains { list: "serving" });
    }
    if !(power > 0.0) {
        return Err(RateError::InvalidArgument {
            name: "power",
            value: power,
        });
    }
    if rho <= 0.0 {
        return Ok(0.0);
    }
    let mut gains = serving_gains.to_vec();
    if policy.perturb_ties {
        spread_ties(&mut gains, policy.tie_epsilon);
    }
    let weights = partial_fraction_weights(&gains);
    Ok(gains
        .iter()
        .zip(&weights)
        .map(|(&g, &w)| {
            let mean = g * power;
            w / mean * (-rho / mean).exp()
        })
        .sum())
}

/// Density of interference-plus-noise `sigma^2 + sum_u S_u P |h_u|^2` at
/// `theta` (zero below the noise floor).
pub fn interference_pdf(
    theta: f64,
    interfering_gains: &[f64],
    power: f64,
    noise: f64,
    policy: &EvalPolicy,
) -> Result<f64, RateError> {
    if interfering_gains.is_empty() {
        return Err(RateError::EmptyGains {
            list: "interfering",
        });
    }
    if !(power > 0.0) || !(noise > 0.0) {
        return Err(RateError::InvalidArgument {
            name: "power/noise",
            value: power.min(noise),
        });
    }
    if theta <= noise {
        return Ok(0.0);
    }
    let mut gains = interfering_gains.to_vec();
    if policy.perturb_ties {
        spread_ties(&mut gains, policy.tie_epsilon);
    }
    let weights = partial_fraction_weights(&gains);
    Ok(gains
        .iter()
        .zip(&weights)
        .map(|(&g, &w)| {
            let mean = g * power;
            w / mean * (-(theta - noise) / mean).exp()
        })
        .sum())
}

/// SINR density for an interference-limited user, the closed evaluation of
/// `integral f_signal(rho*theta) f_interference(theta) theta dtheta`.
pub fn sinr_pdf(
    rho: f64,
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
    if rho <= 0.0 {
        return Ok(0.0);
    }
    let (serving, interfering) = gains.perturbed(policy);
    Ok(sinr_pdf_prepared(
        rho,
        &serving,
        &interfering,
        budget.power(),
        budget.noise_variance(),
    ))
}

/// Eq.-(6)-style evaluation on already perturbed gain lists.
pub(crate) fn sinr_pdf_prepared(
    rho: f64,
    serving: &[f64],
    interfering: &[f64],
    power: f64,
    noise: f64,
) -> f64 {
    let a = partial_fraction_weights(serving);
    let b = partial_fraction_weights(interfering);
    let mut total = 0.0;
    for (k, &sk) in serving.iter().enumerate() {
        let decay = (-noise * rho / (sk * power)).exp();
        if decay == 0.0 {
            continue;
        }
        for (u, &su) in interfering.iter().enumerate() {
            let denom = su * rho + sk;
            let numer = noise * denom + sk * su * power;
            total += a[k] * b[u] * numer / (denom * denom) * decay;
        }
    }
    total / power
}

/// Largest partial-fraction term magnitude entering the closed form; the
/// conditioning guard compares this against the policy threshold.
pub fn conditioning_number(gains: &UserGains, policy: &EvalPolicy) -> f64 {
    if !gains.is_active() {
        return 0.0;
    }
    let (serving, interfering) = gains.perturbed(policy);
    let a = partial_fraction_weights(&serving);
    if interfering.is_empty() {
        return a.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
    }
    let b = partial_fraction_weights(&interfering);
    let mut worst = 0.0f64;
    for (k, &sk) in serving.iter().enumerate() {
        for (u, &su) in interfering.iter().enumerate() {
            let term = (a[k] * b[u] * sk / (sk - su)).abs();
            if term.is_nan() {
                return f64::INFINITY;
            }
            worst = worst.max(term);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn policy() -> EvalPolicy {
        EvalPolicy::default()
    }

    #[test]
    fn weights_for_distinct_pair() {
        let w = partial_fraction_weights(&[1.0, 0.5]);
        assert_relative_eq!(w[0], 2.0);
        assert_relative_eq!(w[1], -1.0);
        // Partial fractions of a density integrate to 1: sum A_k = 1.
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn spread_separates_exact_ties() {
        let mut v = [2.0, 2.0, 2.0];
        spread_ties(&mut v, 1e-9);
        assert!(v[0] < v[1] && v[1] < v[2]);
        assert_relative_eq!(v[0], 2.0 * (1.0 + 1e-9));
        assert_relative_eq!(v[2], 2.0 * (1.0 + 3e-9));
        let w = partial_fraction_weights(&v);
        assert!(w.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn spread_leaves_distinct_values_alone() {
        let mut v = [1.0, 0.5, 0.25];
        let orig = v;
        spread_ties(&mut v, 1e-9);
        assert_eq!(v, orig);
    }

    #[test]
    fn signal_pdf_single_gain_is_exponential() {
        let s = 0.4f64;
        let p = 2.5;
        for rho in [0.1, 1.0, 7.0] {
            let expected = 1.0 / (s * p) * (-rho / (s * p)).exp();
            let got = signal_pdf(rho, &[s], p, &policy()).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn signal_pdf_matches_hand_value() {
        // Gains {1, 0.5}, P=1 at rho=1: 2e^-1 - 2e^-2.
        let got = signal_pdf(1.0, &[1.0, 0.5], 1.0, &policy()).unwrap();
        assert_relative_eq!(got, 0.465_088_315_869_659_26, max_relative = 1e-13);
    }

    #[test]
    fn signal_pdf_rejects_empty() {
        assert!(matches!(
            signal_pdf(1.0, &[], 1.0, &policy()),
            Err(RateError::EmptyGains { list: "serving" })
        ));
    }

    #[test]
    fn interference_pdf_single_gain_shifted_exponential() {
        let (s, p, noise) = (0.7f64, 1.3, 0.5);
        let theta = 2.0;
        let expected = 1.0 / (s * p) * (-(theta - noise) / (s * p)).exp();
        let got = interference_pdf(theta, &[s], p, noise, &policy()).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-14);
        assert_abs_diff_eq!(
            interference_pdf(0.4, &[s], p, noise, &policy()).unwrap(),
            0.0
        );
    }

    #[test]
    fn interference_pdf_rejects_empty() {
        assert!(interference_pdf(1.0, &[], 1.0, 0.5, &policy()).is_err());
    }

    #[test]
    fn sinr_pdf_requires_both_sets() {
        let budget = LinkBudget::from_snr_db(10.0);
        let only_signal = UserGains::new(vec![1.0], vec![]).unwrap();
        assert!(sinr_pdf(1.0, &only_signal, &budget, &policy()).is_err());
        let only_intf = UserGains::new(vec![], vec![1.0]).unwrap();
        assert!(sinr_pdf(1.0, &only_intf, &budget, &policy()).is_err());
    }

    #[test]
    fn conditioning_number_flags_near_ties() {
        let well = UserGains::new(vec![1.0, 0.5], vec![0.1]).unwrap();
        let mut no_perturb = policy();
        no_perturb.perturb_ties = false;
        assert!(conditioning_number(&well, &no_perturb) < 1e3);
        // Gains separated by 1e-12 relative: weights near 1e12.
        let tight = UserGains::new(vec![1.0, 1.0 + 1e-12], vec![0.1]).unwrap();
        assert!(conditioning_number(&tight, &no_perturb) > 1e10);
        // Exact tie without perturbation: infinite.
        let tied = UserGains::new(vec![1.0, 1.0], vec![0.1]).unwrap();
        assert!(conditioning_number(&tied, &no_perturb).is_infinite());
    }
}
