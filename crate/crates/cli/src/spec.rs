//! Declarative experiment specification: defaults, TOML config files, and
//! flag overrides.
//!
//! Defaults reproduce the reference setup: pathloss exponent 3, cell radius
//! `sqrt(112/3)`, 5000 channel realizations, 4000 user drops, SNR grid
//! 0..50 dB in 5 dB steps, noise variance fixed at 1 so SNR in dB maps to
//! transmit power directly.

use std::path::{Path, PathBuf};

use das_core::geometry::{default_cell_radius, CellLayout, Position};
use das_core::rate::EvalPolicy;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RateCurve,
    CellAverage,
    Modes,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Geometry block: system size plus optional explicit positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub n_ports: usize,
    pub k_users: usize,
    pub cell_radius: f64,
    pub pathloss_exponent: f64,
    /// Explicit port positions; the canonical ring when absent.
    pub ports: Option<Vec<[f64; 2]>>,
    /// Fixed user positions (required by rate-curve, optional for modes).
    pub users: Option<Vec<[f64; 2]>>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            n_ports: 2,
            k_users: 2,
            cell_radius: default_cell_radius(),
            pathloss_exponent: 3.0,
            ports: None,
            users: None,
        }
    }
}

impl GeometrySpec {
    pub fn layout(&self) -> Result<CellLayout, CliError> {
        let layout = match &self.ports {
            Some(ports) => {
                if ports.len() != self.n_ports {
                    return Err(CliError::Config(format!(
                        "{} explicit ports given but n_ports = {}",
                        ports.len(),
                        self.n_ports
                    )));
                }
                CellLayout::with_ports(
                    ports.iter().map(|&[x, y]| Position::new(x, y)).collect(),
                    self.cell_radius,
                    self.pathloss_exponent,
                )
            }
            None => CellLayout::circular(self.n_ports, self.cell_radius, self.pathloss_exponent),
        };
        layout.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn user_positions(&self) -> Option<Vec<Position>> {
        self.users
            .as_ref()
            .map(|u| u.iter().map(|&[x, y]| Position::new(x, y)).collect())
    }
}

/// Run block: grid, sample sizes, seeding, and selector strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub snr_grid_db: Vec<f64>,
    pub drops: u32,
    pub realizations: u32,
    pub seed: u64,
    /// Selector tokens for cell-average: `proposed`, `ideal-mc`,
    /// `ideal-closed`, `fixed=<u1,..,uN>`, `all-fixed`.
    pub selectors: Option<Vec<String>>,
    pub exclusion_radius: f64,
    /// Share fading draws across candidate modes within a drop.
    pub common_randoms: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            snr_grid_db: (0..=10).map(|i| 5.0 * i as f64).collect(),
            drops: 4000,
            realizations: 5000,
            seed: 42,
            selectors: None,
            exclusion_radius: 0.0,
            common_randoms: true,
        }
    }
}

/// Full experiment specification; one TOML document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Optional in files; checked against the subcommand when present.
    pub scenario: Option<Scenario>,
    pub geometry: GeometrySpec,
    pub run: RunSpec,
    pub policy: EvalPolicy,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    /// Check names for validate; `None` means all.
    pub checks: Option<Vec<String>>,
    /// Fault-injection flag: evaluate the conditioning check without the
    /// tie spread so the fallback path is exercised.
    pub disable_tie_perturbation: bool,
}

impl ExperimentSpec {
    pub fn from_config_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Enforce scenario-specific invariants and fill scenario defaults.
    pub fn finalize(mut self, scenario: Scenario) -> Result<Self, CliError> {
        if let Some(declared) = self.scenario {
            if declared != scenario {
                return Err(CliError::Config(format!(
                    "config declares scenario {declared:?} but the {scenario:?} command was invoked"
                )));
            }
        }
        self.scenario = Some(scenario);

        if scenario == Scenario::RateCurve && self.geometry.users.is_none() {
            if self.geometry.n_ports == 2 && self.geometry.k_users == 2 {
                // The reference two-user scenario. Port 1 is the west port,
                // matching the labeling under which mode [1,2] pairs each
                // user with its nearest port.
                self.geometry.users = Some(vec![[-2.5, -2.0], [3.0, 4.5]]);
                if self.geometry.ports.is_none() {
                    self.geometry.ports = Some(vec![[-4.0, 0.0], [4.0, 0.0]]);
                }
            } else {
                return Err(CliError::Config(
                    "rate-curve requires fixed user positions (geometry.users)".into(),
                ));
            }
        }

        if let Some(users) = &self.geometry.users {
            if users.is_empty() {
                return Err(CliError::Config("geometry.users must not be empty".into()));
            }
            if self.geometry.k_users != users.len() {
                return Err(CliError::Config(format!(
                    "{} user positions given but k_users = {}",
                    users.len(),
                    self.geometry.k_users
                )));
            }
        }
        if self.run.snr_grid_db.is_empty() {
            return Err(CliError::Config("snr grid must not be empty".into()));
        }
        if self.geometry.n_ports == 0 || self.geometry.k_users == 0 {
            return Err(CliError::Config(
                "n_ports and k_users must be at least 1".into(),
            ));
        }
        self.policy
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(self)
    }
}

/// Parse `x,y;x,y` into position pairs.
pub fn parse_positions(text: &str) -> Result<Vec<[f64; 2]>, String> {
    text.split(';')
        .map(|pair| {
            let coords: Vec<&str> = pair.split(',').map(str::trim).collect();
            if coords.len() != 2 {
                return Err(format!("expected `x,y` but got `{pair}`"));
            }
            let x = coords[0]
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate `{}`: {e}", coords[0]))?;
            let y = coords[1]
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate `{}`: {e}", coords[1]))?;
            Ok([x, y])
        })
        .collect()
}

/// Parse a comma-separated dB list.
pub fn parse_snr_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad SNR value `{s}`: {e}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_parameters() {
        let spec = ExperimentSpec::default();
        assert_eq!(spec.run.drops, 4000);
        assert_eq!(spec.run.realizations, 5000);
        assert_eq!(spec.geometry.pathloss_exponent, 3.0);
        assert!((spec.geometry.cell_radius - (112.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(spec.run.snr_grid_db.len(), 11);
    }

    #[test]
    fn rate_curve_defaults_fill_fixed_scenario() {
        let spec = ExperimentSpec::default()
            .finalize(Scenario::RateCurve)
            .unwrap();
        assert_eq!(spec.geometry.users.unwrap(), vec![[-2.5, -2.0], [3.0, 4.5]]);
        assert_eq!(spec.geometry.ports.unwrap(), vec![[-4.0, 0.0], [4.0, 0.0]]);
    }

    #[test]
    fn rate_curve_without_users_rejected_for_other_sizes() {
        let mut spec = ExperimentSpec::default();
        spec.geometry.n_ports = 3;
        spec.geometry.k_users = 3;
        assert!(matches!(
            spec.finalize(Scenario::RateCurve),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn scenario_mismatch_rejected() {
        let spec = ExperimentSpec {
            scenario: Some(Scenario::Modes),
            ..Default::default()
        };
        assert!(spec.finalize(Scenario::CellAverage).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
scenario = "cell_average"

[geometry]
n_ports = 3
k_users = 3

[run]
drops = 100
realizations = 500
seed = 7
selectors = ["proposed", "ideal-mc"]

[policy]
tie_epsilon = 1e-8
"#;
        let spec: ExperimentSpec = toml::from_str(text).unwrap();
        assert_eq!(spec.scenario, Some(Scenario::CellAverage));
        assert_eq!(spec.geometry.n_ports, 3);
        assert_eq!(spec.run.drops, 100);
        assert_eq!(spec.policy.tie_epsilon, 1e-8);
        assert_eq!(spec.run.seed, 7);
    }

    #[test]
    fn position_and_snr_parsers() {
        assert_eq!(
            parse_positions("-2.5,-2;3,4.5").unwrap(),
            vec![[-2.5, -2.0], [3.0, 4.5]]
        );
        assert!(parse_positions("1;2").is_err());
        assert_eq!(parse_snr_list("0, 10,20").unwrap(), vec![0.0, 10.0, 20.0]);
        assert!(parse_snr_list("ten").is_err());
    }
}
