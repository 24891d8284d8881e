//! Sum-rate analysis and transmission-mode selection for single-cell
//! downlink distributed antenna systems.
//!
//! A cell holds `N` single-antenna DA ports on a ring and `K` single-antenna
//! users. Each port either transmits at full power to one user or stays off;
//! a length-`N` assignment vector (a *transmission mode*) fixes the pairing.
//! Given only the large-scale pathloss gains, the ergodic sum rate of a mode
//! over Rayleigh fading has a closed form built from scaled exponential
//! integrals, and the best mode can be selected without instantaneous CSI.
//!
//! The crate provides:
//!
//! - [`geometry`]: cell layout, canonical port placement, pathloss matrices,
//!   uniform user drops.
//! - [`modes`]: transmission modes, serving/interference groups, exhaustive
//!   candidate enumeration, and the reduced minimum-distance candidate set
//!   (`2^N - N` modes instead of `(K+1)^N - K(2^N-2) - 1`).
//! - [`rate`]: closed-form ergodic rates, the SINR density, a quadrature
//!   oracle, and conditioning-aware fallbacks.
//! - [`sim`]: fading simulation, Monte Carlo rate estimates, best-mode
//!   selection, and reproducible cell-averaged experiments.

// Validation sites use `!(x > 0.0)`-style comparisons on purpose: they
// reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod modes;
pub mod rate;
pub mod sim;

pub use geometry::{
    build_distance_matrix, build_pathloss_matrix, default_cell_radius, place_ports,
    sample_uniform_users, CellLayout, DistanceMatrix, GeometryError, LinkBudget, PathlossMatrix,
    Position,
};
pub use modes::{
    derive_groups, enumerate_ideal, generate_min_distance_candidates, ideal_count, proposed_count,
    CandidateSet, ModeError, ModeGroups, Provenance, TransmissionMode,
};
pub use rate::{
    ergodic_sum_rate_closed, ergodic_user_rate_closed, ergodic_user_rate_quadrature, exp_e1_scaled,
    EvalPolicy, RateError, RateMethod, UserGains, UserRateBreakdown,
};
pub use sim::{
    cell_average_experiment, mc_ergodic_sum_rate, sample_fading, select_best_mode,
    CellAverageCurve, CurvePoint, DropExperimentConfig, Estimator, FadingDraw, McConfig,
    McEstimate, Selector, SimError,
};
