//! Candidate-set listing: the exhaustive set and the minimum-distance set,
//! with sizes checked against their closed-form counts.

use das_core::geometry::{build_distance_matrix, sample_uniform_users, Position};
use das_core::modes::{
    enumerate_ideal, generate_min_distance_candidates, ideal_count, proposed_count, CandidateSet,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::ModeRow;
use crate::spec::ExperimentSpec;
use crate::CliError;

/// JSON rendering of both candidate sets.
#[derive(Debug, Serialize)]
pub struct ModesReport {
    pub n_ports: usize,
    pub k_users: usize,
    pub ideal: SetReport,
    pub proposed: SetReport,
    /// User positions the proposed set was generated from (sampled from the
    /// seed when none are configured).
    pub users: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct SetReport {
    pub size: u64,
    pub count_formula: u64,
    pub modes: Vec<Vec<usize>>,
}

pub fn cmd_modes(spec: &ExperimentSpec) -> Result<ModesReport, CliError> {
    let n = spec.geometry.n_ports;
    let k = spec.geometry.k_users;
    let layout = spec.geometry.layout()?;

    let ideal = enumerate_ideal(n, k).map_err(|e| CliError::Numerical(e.to_string()))?;
    let expected = ideal_count(n, k);
    if ideal.len() as u128 != expected {
        return Err(CliError::Numerical(format!(
            "ideal set size {} disagrees with the closed-form count {expected}",
            ideal.len()
        )));
    }

    let users: Vec<Position> = match spec.geometry.user_positions() {
        Some(users) => users,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.run.seed);
            sample_uniform_users(k, layout.cell_radius(), &mut rng)
        }
    };
    let distances =
        build_distance_matrix(&users, &layout).map_err(|e| CliError::Config(e.to_string()))?;
    let proposed = generate_min_distance_candidates(&distances);

    Ok(ModesReport {
        n_ports: n,
        k_users: k,
        ideal: set_report(&ideal, expected),
        proposed: set_report(&proposed, proposed_count(n)),
        users: users.iter().map(|p| [p.x, p.y]).collect(),
    })
}

fn set_report(set: &CandidateSet, formula: u128) -> SetReport {
    SetReport {
        size: set.len() as u64,
        count_formula: formula as u64,
        modes: set.iter().map(|m| m.assignments().to_vec()).collect(),
    }
}

impl ModesReport {
    pub fn to_rows(&self) -> Vec<ModeRow> {
        let fmt = |m: &[usize]| {
            let inner: Vec<String> = m.iter().map(|u| u.to_string()).collect();
            format!("[{}]", inner.join(","))
        };
        let mut rows = Vec::with_capacity(self.ideal.modes.len() + self.proposed.modes.len());
        for m in &self.ideal.modes {
            rows.push(ModeRow {
                set: "ideal".into(),
                size: self.ideal.size,
                mode: fmt(m),
            });
        }
        for m in &self.proposed.modes {
            rows.push(ModeRow {
                set: "proposed".into(),
                size: self.proposed.size,
                mode: fmt(m),
            });
        }
        rows
    }
}
