//! Small-scale fading simulation, mode selection, and cell-averaged
//! experiments.
//!
//! Fading power gains are i.i.d. unit-mean exponentials (|h|^2 for a
//! unit-variance complex Gaussian h), sampled by inverse CDF so a draw
//! consumes exactly one stream value. Experiments derive one ChaCha stream
//! per drop from (seed, drop index), which makes every result independent of
//! thread count and schedule; within a drop, candidate modes and SNR points
//! share the same fading draws (common random numbers) unless disabled.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    build_distance_matrix, sample_users_with_exclusion, CellLayout, GeometryError, LinkBudget,
    PathlossMatrix,
};
use crate::modes::{
    enumerate_ideal_capped, generate_min_distance_candidates, CandidateSet, ModeError, ModeGroups,
    TransmissionMode, DEFAULT_ENUMERATION_CAP,
};
use crate::rate::{ergodic_sum_rate_closed, EvalPolicy, RateError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("monte carlo estimation requires an McConfig")]
    MissingMcConfig,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// One realization of the K x N fading power gains `|h|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDraw {
    k_users: usize,
    n_ports: usize,
    power_gains: Vec<f64>,
}

impl FadingDraw {
    pub fn k_users(&self) -> usize {
        self.k_users
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn gain(&self, user: usize, port: usize) -> f64 {
        self.power_gains[user * self.n_ports + port]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.power_gains[user * self.n_ports..(user + 1) * self.n_ports]
    }
}

fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // -ln(1 - U) on U in [0,1): exact inverse CDF, one draw per sample.
    -(-rng.random::<f64>()).ln_1p()
}

/// Sample a K x N matrix of i.i.d. unit-mean exponential power gains.
pub fn sample_fading<R: Rng + ?Sized>(k_users: usize, n_ports: usize, rng: &mut R) -> FadingDraw {
    let power_gains = (0..k_users * n_ports)
        .map(|_| unit_exponential(rng))
        .collect();
    FadingDraw {
        k_users,
        n_ports,
        power_gains,
    }
}

/// Monte Carlo sampling parameters. `stream_id` selects an independent
/// ChaCha stream under the same seed; experiments use the drop index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub realizations: u32,
    pub seed: u64,
    pub stream_id: u64,
    /// Share one set of fading draws across all candidate modes.
    pub common_randoms: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            realizations: 5000,
            seed: 42,
            stream_id: 0,
            common_randoms: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.realizations < 2 {
            return Err(SimError::InvalidConfig(format!(
                "realizations must be at least 2, got {}",
                self.realizations
            )));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub realizations: u32,
}

/// Instantaneous rate of one user for one fading draw:
/// `log2(1 + sum_serving S P h / (sigma^2 + sum_interfering S P h))`.
pub fn instantaneous_user_rate(
    user: usize,
    groups: &ModeGroups,
    gains_row: &[f64],
    draw_row: &[f64],
    budget: &LinkBudget,
) -> f64 {
    let serving = groups.serving(user);
    if serving.is_empty() {
        return 0.0;
    }
    let power = budget.power();
    let mut signal = 0.0;
    for &j in serving {
        signal += gains_row[j] * power * draw_row[j];
    }
    let mut denom = budget.noise_variance();
    for &j in groups.interference(user) {
        denom += gains_row[j] * power * draw_row[j];
    }
    (1.0 + signal / denom).log2()
}

fn instantaneous_sum_rate(
    groups: &ModeGroups,
    gains: &PathlossMatrix,
    draw: &FadingDraw,
    budget: &LinkBudget,
) -> f64 {
    (0..gains.k_users())
        .map(|i| instantaneous_user_rate(i, groups, gains.row(i), draw.row(i), budget))
        .sum()
}

/// Monte Carlo estimate of a mode's ergodic sum rate over `realizations`
/// independent fading draws.
pub fn mc_ergodic_sum_rate(
    mode: &TransmissionMode,
    gains: &PathlossMatrix,
    budget: &LinkBudget,
    config: &McConfig,
) -> Result<McEstimate, SimError> {
    config.validate()?;
    if mode.n_ports() != gains.n_ports() {
        return Err(SimError::Rate(RateError::DimensionMismatch {
            expected: gains.n_ports(),
            found: mode.n_ports(),
        }));
    }
    let groups = ModeGroups::derive(mode, gains.k_users())?;
    let mut rng = config.rng();
    // Welford running mean/variance.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for n in 1..=config.realizations {
        let draw = sample_fading(gains.k_users(), gains.n_ports(), &mut rng);
        let value = instantaneous_sum_rate(&groups, gains, &draw, budget);
        let delta = value - mean;
        mean += delta / n as f64;
        m2 += delta * (value - mean);
    }
    let n = config.realizations as f64;
    Ok(McEstimate {
        mean,
        std_error: (m2 / (n - 1.0)).sqrt() / n.sqrt(),
        realizations: config.realizations,
    })
}

/// Estimator used to rank candidate modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    ClosedForm,
    MonteCarlo,
}

/// Highest-rate mode in the candidate set under the chosen estimator; ties
/// break toward the earliest candidate.
pub fn select_best_mode(
    candidates: &CandidateSet,
    gains: &PathlossMatrix,
    budget: &LinkBudget,
    estimator: Estimator,
    mc: Option<&McConfig>,
    policy: &EvalPolicy,
) -> Result<(TransmissionMode, f64), SimError> {
    if candidates.is_empty() {
        return Err(SimError::EmptyCandidates);
    }
    match estimator {
        Estimator::ClosedForm => {
            let mut best: Option<(usize, f64)> = None;
            for (idx, mode) in candidates.iter().enumerate() {
                let rate = ergodic_sum_rate_closed(mode, gains, budget, policy)?.sum_rate;
                if best.is_none_or(|(_, b)| rate > b) {
                    best = Some((idx, rate));
                }
            }
            let (idx, rate) = best.unwrap();
            Ok((candidates.modes()[idx].clone(), rate))
        }
        Estimator::MonteCarlo => {
            let config = mc.ok_or(SimError::MissingMcConfig)?;
            config.validate()?;
            let rates = if config.common_randoms {
                let mut rng = config.rng();
                let draws: Vec<FadingDraw> = (0..config.realizations)
                    .map(|_| sample_fading(gains.k_users(), gains.n_ports(), &mut rng))
                    .collect();
                mode_means_over_draws(candidates, gains, &draws, &[*budget])?
            } else {
                // Independent draws per mode, each from a sub-seed of the
                // master stream so the count of modes cannot alias streams.
                let mut master = config.rng();
                let mut rates = Vec::with_capacity(candidates.len());
                for mode in candidates {
                    let sub = McConfig {
                        seed: master.random::<u64>(),
                        stream_id: 0,
                        ..*config
                    };
                    rates.push(vec![mc_ergodic_sum_rate(mode, gains, budget, &sub)?.mean]);
                }
                rates
            };
            let mut best = (0, rates[0][0]);
            for (idx, r) in rates.iter().enumerate().skip(1) {
                if r[0] > best.1 {
                    best = (idx, r[0]);
                }
            }
            Ok((candidates.modes()[best.0].clone(), best.1))
        }
    }
}

/// Per-mode, per-budget Monte Carlo means over a shared set of draws.
///
/// Signal and interference powers are accumulated once per (mode, draw) at
/// unit power, then rescaled for every budget on the grid.
fn mode_means_over_draws(
    candidates: &CandidateSet,
    gains: &PathlossMatrix,
    draws: &[FadingDraw],
    budgets: &[LinkBudget],
) -> Result<Vec<Vec<f64>>, SimError> {
    let k = gains.k_users();
    let groups: Vec<ModeGroups> = candidates
        .iter()
        .map(|m| ModeGroups::derive(m, k))
        .collect::<Result<_, _>>()?;
    let mut out = vec![vec![0.0f64; budgets.len()]; candidates.len()];
    for draw in draws {
        for (mi, g) in groups.iter().enumerate() {
            for user in 0..k {
                let serving = g.serving(user);
                if serving.is_empty() {
                    continue;
                }
                let row = gains.row(user);
                let draw_row = draw.row(user);
                let mut signal = 0.0;
                for &j in serving {
                    signal += row[j] * draw_row[j];
                }
                let mut interference = 0.0;
                for &j in g.interference(user) {
                    interference += row[j] * draw_row[j];
                }
                for (bi, budget) in budgets.iter().enumerate() {
                    let p = budget.power();
                    out[mi][bi] +=
                        (1.0 + p * signal / (budget.noise_variance() + p * interference)).log2();
                }
            }
        }
    }
    let n = draws.len() as f64;
    for row in &mut out {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Ok(out)
}

/// Per-drop candidate generation and reporting strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// Minimum-distance candidates ranked by the closed form.
    ProposedClosedForm,
    /// Exhaustive candidates ranked by per-mode Monte Carlo means.
    IdealExhaustiveMc,
    /// Exhaustive candidates ranked by the closed form.
    IdealExhaustiveClosed,
    /// A single mode evaluated as-is (Monte Carlo estimate).
    FixedMode(TransmissionMode),
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::ProposedClosedForm => write!(f, "proposed"),
            Selector::IdealExhaustiveMc => write!(f, "ideal_mc"),
            Selector::IdealExhaustiveClosed => write!(f, "ideal_closed"),
            Selector::FixedMode(m) => write!(f, "fixed{m}"),
        }
    }
}

/// Configuration of a cell-averaged experiment over random user drops.
#[derive(Debug, Clone, PartialEq)]
pub struct DropExperimentConfig {
    pub n_ports: usize,
    pub k_users: usize,
    pub snr_grid_db: Vec<f64>,
    pub drops: u32,
    pub mc: McConfig,
    pub selector: Selector,
    pub policy: EvalPolicy,
    /// Users closer than this to a port are redrawn (0 disables).
    pub exclusion_radius: f64,
    pub candidate_cap: u128,
}

impl DropExperimentConfig {
    /// Reference-experiment defaults: 4000 drops, 5000 realizations,
    /// SNR 0..50 dB in 5 dB steps.
    pub fn reference_defaults(n_ports: usize, k_users: usize, selector: Selector) -> Self {
        Self {
            n_ports,
            k_users,
            snr_grid_db: (0..=10).map(|i| 5.0 * i as f64).collect(),
            drops: 4000,
            mc: McConfig::default(),
            selector,
            policy: EvalPolicy::default(),
            exclusion_radius: 0.0,
            candidate_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    fn validate(&self, layout: &CellLayout) -> Result<(), SimError> {
        if self.snr_grid_db.is_empty() {
            return Err(SimError::InvalidConfig("empty SNR grid".into()));
        }
        if self.drops == 0 {
            return Err(SimError::InvalidConfig("drops must be at least 1".into()));
        }
        if self.k_users == 0 {
            return Err(SimError::InvalidConfig("k_users must be at least 1".into()));
        }
        if self.n_ports != layout.n_ports() {
            return Err(SimError::InvalidConfig(format!(
                "config says {} ports but the layout has {}",
                self.n_ports,
                layout.n_ports()
            )));
        }
        self.mc.validate()?;
        self.policy.validate()?;
        if let Selector::FixedMode(mode) = &self.selector {
            if mode.n_ports() != self.n_ports {
                return Err(SimError::InvalidConfig(format!(
                    "fixed mode {mode} does not span {} ports",
                    self.n_ports
                )));
            }
            if mode.max_user() > self.k_users {
                return Err(SimError::InvalidConfig(format!(
                    "fixed mode {mode} references user {} of {}",
                    mode.max_user(),
                    self.k_users
                )));
            }
        }
        Ok(())
    }
}

/// One point of a cell-averaged curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub mean_sum_rate: f64,
    pub std_error: f64,
}

/// Cell-averaged curve for one selector.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAverageCurve {
    pub selector: Selector,
    pub drops: u32,
    pub realizations: u32,
    pub points: Vec<CurvePoint>,
}

/// Average the selected mode's ergodic sum rate over uniform user drops,
/// one curve point per SNR. Drop `d` consumes ChaCha stream `d` of the
/// configured seed, so results are bit-identical for any thread count.
pub fn cell_average_experiment(
    config: &DropExperimentConfig,
    layout: &CellLayout,
) -> Result<CellAverageCurve, SimError> {
    config.validate(layout)?;
    let budgets: Vec<LinkBudget> = config
        .snr_grid_db
        .iter()
        .map(|&db| LinkBudget::from_snr_db(db))
        .collect();
    let ideal = match config.selector {
        Selector::IdealExhaustiveMc | Selector::IdealExhaustiveClosed => Some(
            enumerate_ideal_capped(config.n_ports, config.k_users, config.candidate_cap)?,
        ),
        _ => None,
    };

    let per_drop: Vec<Vec<f64>> = (0..config.drops)
        .into_par_iter()
        .map(|drop| run_drop(drop, config, layout, &budgets, ideal.as_ref()))
        .collect::<Result<_, _>>()?;

    let drops = config.drops as f64;
    let points = budgets
        .iter()
        .enumerate()
        .map(|(si, budget)| {
            let mean = per_drop.iter().map(|d| d[si]).sum::<f64>() / drops;
            let var = if config.drops > 1 {
                per_drop.iter().map(|d| (d[si] - mean).powi(2)).sum::<f64>() / (drops - 1.0)
            } else {
                0.0
            };
            CurvePoint {
                snr_db: budget.snr_db(),
                mean_sum_rate: mean,
                std_error: (var / drops).sqrt(),
            }
        })
        .collect();

    Ok(CellAverageCurve {
        selector: config.selector.clone(),
        drops: config.drops,
        realizations: config.mc.realizations,
        points,
    })
}

fn run_drop(
    drop: u32,
    config: &DropExperimentConfig,
    layout: &CellLayout,
    budgets: &[LinkBudget],
    ideal: Option<&CandidateSet>,
) -> Result<Vec<f64>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.mc.seed);
    rng.set_stream(drop as u64);

    // A user landing exactly on a port has probability zero but would make
    // the gain singular; redraw rather than fail the whole experiment.
    let (users, gains) = loop {
        let users =
            sample_users_with_exclusion(config.k_users, layout, config.exclusion_radius, &mut rng);
        match crate::geometry::build_pathloss_matrix(&users, layout) {
            Ok(gains) => break (users, gains),
            Err(GeometryError::CoincidentUserPort { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    };

    match &config.selector {
        Selector::ProposedClosedForm => {
            let distances = build_distance_matrix(&users, layout)?;
            let candidates = generate_min_distance_candidates(&distances);
            budgets
                .iter()
                .map(|b| {
                    select_best_mode(
                        &candidates,
                        &gains,
                        b,
                        Estimator::ClosedForm,
                        None,
                        &config.policy,
                    )
                    .map(|(_, rate)| rate)
                })
                .collect()
        }
        Selector::IdealExhaustiveClosed => {
            let candidates = ideal.expect("ideal set precomputed");
            budgets
                .iter()
                .map(|b| {
                    select_best_mode(
                        candidates,
                        &gains,
                        b,
                        Estimator::ClosedForm,
                        None,
                        &config.policy,
                    )
                    .map(|(_, rate)| rate)
                })
                .collect()
        }
        Selector::IdealExhaustiveMc => {
            let candidates = ideal.expect("ideal set precomputed");
            let draws = drop_draws(config, &mut rng);
            let means = mode_means_over_draws(candidates, &gains, &draws, budgets)?;
            Ok((0..budgets.len())
                .map(|si| {
                    means
                        .iter()
                        .map(|m| m[si])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect())
        }
        Selector::FixedMode(mode) => {
            let groups = ModeGroups::derive(mode, config.k_users)?;
            let draws = drop_draws(config, &mut rng);
            let mut acc = vec![0.0f64; budgets.len()];
            for draw in &draws {
                for (si, budget) in budgets.iter().enumerate() {
                    acc[si] += instantaneous_sum_rate(&groups, &gains, draw, budget);
                }
            }
            Ok(acc
                .into_iter()
                .map(|v| v / config.mc.realizations as f64)
                .collect())
        }
    }
}

fn drop_draws(config: &DropExperimentConfig, rng: &mut ChaCha8Rng) -> Vec<FadingDraw> {
    (0..config.mc.realizations)
        .map(|_| sample_fading(config.k_users, config.n_ports, rng))
        .collect()
}
