//! Cell-averaged ergodic sum rate over random user drops, one curve per
//! requested selector.

use das_core::modes::{enumerate_ideal_capped, TransmissionMode, DEFAULT_ENUMERATION_CAP};
use das_core::sim::{cell_average_experiment, DropExperimentConfig, McConfig, Selector};

use crate::output::CellAverageRow;
use crate::spec::ExperimentSpec;
use crate::CliError;

/// Fixed-mode curves are expanded from the full ideal set only while it
/// stays a readable overlay.
const ALL_FIXED_LIMIT: usize = 16;

pub fn cmd_cell_average(spec: &ExperimentSpec) -> Result<Vec<CellAverageRow>, CliError> {
    let layout = spec.geometry.layout()?;
    let selectors = resolve_selectors(spec)?;

    let mut rows = Vec::new();
    for selector in selectors {
        let config = DropExperimentConfig {
            n_ports: spec.geometry.n_ports,
            k_users: spec.geometry.k_users,
            snr_grid_db: spec.run.snr_grid_db.clone(),
            drops: spec.run.drops,
            mc: McConfig {
                realizations: spec.run.realizations,
                seed: spec.run.seed,
                stream_id: 0,
                common_randoms: spec.run.common_randoms,
            },
            selector,
            policy: spec.policy,
            exclusion_radius: spec.run.exclusion_radius,
            candidate_cap: DEFAULT_ENUMERATION_CAP,
        };
        let curve = cell_average_experiment(&config, &layout).map_err(map_sim_error)?;
        let label = curve.selector.to_string();
        for point in curve.points {
            rows.push(CellAverageRow {
                snr_db: point.snr_db,
                selector: label.clone(),
                mean_sum_rate: point.mean_sum_rate,
                std_error: point.std_error,
                drops: curve.drops,
                realizations: curve.realizations,
            });
        }
    }
    Ok(rows)
}

fn map_sim_error(e: das_core::sim::SimError) -> CliError {
    use das_core::sim::SimError;
    match e {
        SimError::InvalidConfig(msg) => CliError::Config(msg),
        other => CliError::Numerical(other.to_string()),
    }
}

/// Expand selector tokens; the default is the proposed and ideal curves,
/// plus every ideal mode as a fixed curve when the set is small (the
/// reference overlay for the 2x2 system).
fn resolve_selectors(spec: &ExperimentSpec) -> Result<Vec<Selector>, CliError> {
    let tokens = match &spec.run.selectors {
        Some(tokens) if !tokens.is_empty() => tokens.clone(),
        _ => {
            let mut defaults = vec!["proposed".to_string(), "ideal-mc".to_string()];
            let ideal = das_core::modes::ideal_count(spec.geometry.n_ports, spec.geometry.k_users);
            if ideal <= ALL_FIXED_LIMIT as u128 {
                defaults.push("all-fixed".to_string());
            }
            defaults
        }
    };
    let mut selectors = Vec::new();
    for token in tokens {
        match token.as_str() {
            "proposed" => selectors.push(Selector::ProposedClosedForm),
            "ideal-mc" | "ideal" => selectors.push(Selector::IdealExhaustiveMc),
            "ideal-closed" => selectors.push(Selector::IdealExhaustiveClosed),
            "all-fixed" => {
                let set = enumerate_ideal_capped(
                    spec.geometry.n_ports,
                    spec.geometry.k_users,
                    ALL_FIXED_LIMIT as u128,
                )
                .map_err(|_| {
                    CliError::Config(format!(
                        "all-fixed expands only candidate sets of at most {ALL_FIXED_LIMIT} modes; \
                         list fixed=<mode> selectors explicitly"
                    ))
                })?;
                selectors.extend(set.iter().cloned().map(Selector::FixedMode));
            }
            other => {
                let Some(body) = other.strip_prefix("fixed=") else {
                    return Err(CliError::Config(format!("unknown selector `{other}`")));
                };
                let assignments: Result<Vec<usize>, _> =
                    body.split(',').map(|s| s.trim().parse::<usize>()).collect();
                let assignments = assignments
                    .map_err(|e| CliError::Config(format!("bad fixed mode `{body}`: {e}")))?;
                let mode = TransmissionMode::new(assignments)
                    .map_err(|e| CliError::Config(format!("bad fixed mode `{body}`: {e}")))?;
                selectors.push(Selector::FixedMode(mode));
            }
        }
    }
    Ok(selectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Scenario;

    fn desk_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::default();
        spec.run.drops = 10;
        spec.run.realizations = 100;
        spec.run.snr_grid_db = vec![0.0, 20.0];
        spec.finalize(Scenario::CellAverage).unwrap()
    }

    #[test]
    fn default_selectors_cover_reference_overlay() {
        let spec = desk_spec();
        let selectors = resolve_selectors(&spec).unwrap();
        // proposed + ideal-mc + 4 fixed modes for the 2x2 system.
        assert_eq!(selectors.len(), 6);
        let rows = cmd_cell_average(&spec).unwrap();
        assert_eq!(rows.len(), 6 * 2);
        assert!(rows.iter().any(|r| r.selector == "fixed[1,2]"));
        assert_eq!(rows[0].drops, 10);
    }

    #[test]
    fn selector_tokens_parse() {
        let mut spec = desk_spec();
        spec.run.selectors = Some(vec![
            "proposed".into(),
            "ideal-closed".into(),
            "fixed=2,1".into(),
        ]);
        let s = resolve_selectors(&spec).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[2].to_string(), "fixed[2,1]");
        spec.run.selectors = Some(vec!["bogus".into()]);
        assert!(resolve_selectors(&spec).is_err());
    }

    #[test]
    fn smoke_run_single_drop() {
        let mut spec = desk_spec();
        spec.run.drops = 1;
        spec.run.selectors = Some(vec!["proposed".into()]);
        let rows = cmd_cell_average(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.std_error == 0.0));
        assert!(rows.iter().all(|r| r.mean_sum_rate > 0.0));
    }
}
