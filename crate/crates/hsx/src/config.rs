//! Run configuration: JSON file, CLI overrides, defaults, validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::StateJson;
use crate::scenario::{scenario_by_name, Scenario};
use crate::state::EulerianState;

/// Which driver to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Simulate,
    Metric,
    Lipschitz,
    Converge,
    Validate,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Metric => "metric",
            ExperimentKind::Lipschitz => "lipschitz",
            ExperimentKind::Converge => "converge",
            ExperimentKind::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: Option<ExperimentKind>,
    pub scenario: Option<String>,
    pub state: Option<StateJson>,
    /// Second operand for the metric driver.
    pub scenario_b: Option<String>,
    pub state_b: Option<StateJson>,
    pub grid: Option<GridConfig>,
    pub times: Option<Vec<f64>>,
    pub seed: Option<u64>,
    /// Interior control points for the distance refinement.
    pub budget: Option<usize>,
    /// Gauss-Legendre points per path segment.
    pub quad_points: Option<usize>,
    /// Number of random pairs for the stability certificate.
    pub pairs: Option<usize>,
    /// Amplitude of the random normalized states in (0, 1).
    pub roughness: Option<f64>,
    /// Node-count ladder for the convergence driver.
    pub grid_ladder: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Option<usize>,
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
}

/// CLI overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
    pub times: Option<Vec<f64>>,
}

/// Fully resolved configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub scenario: Option<Scenario>,
    pub inline_state: Option<EulerianState>,
    pub second_scenario: Option<Scenario>,
    pub second_state: Option<EulerianState>,
    pub grid: Grid,
    pub times: Vec<f64>,
    pub seed: u64,
    pub budget: usize,
    pub quad_points: usize,
    pub pairs: usize,
    pub roughness: f64,
    pub grid_ladder: Vec<usize>,
    pub out: PathBuf,
}

impl RunConfig {
    /// The state the run operates on (scenario takes precedence).
    pub fn primary_state(&self) -> Result<EulerianState> {
        if let Some(s) = &self.scenario {
            return Ok(s.initial.clone());
        }
        self.inline_state
            .clone()
            .ok_or_else(|| Error::validation("scenario", "no scenario or inline state given"))
    }

    pub fn secondary_state(&self) -> Result<EulerianState> {
        if let Some(s) = &self.second_scenario {
            return Ok(s.initial.clone());
        }
        self.second_state
            .clone()
            .ok_or_else(|| Error::validation("scenario_b", "metric runs need a second state"))
    }
}

pub fn load_config(path: &Path, kind: ExperimentKind, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let file: ConfigFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    resolve(file, kind, overrides)
}

pub fn resolve(file: ConfigFile, kind: ExperimentKind, overrides: &Overrides) -> Result<RunConfig> {
    if let Some(k) = file.kind {
        if k != kind {
            return Err(Error::validation(
                "kind",
                format!("config says `{}` but the subcommand is `{}`", k.as_str(), kind.as_str()),
            ));
        }
    }

    let scenario = match &file.scenario {
        Some(name) => Some(scenario_by_name(name)?),
        None => None,
    };
    let inline_state = match &file.state {
        Some(js) => Some(js.clone().into_state()?),
        None => None,
    };
    if scenario.is_none() && inline_state.is_none() && kind != ExperimentKind::Lipschitz {
        return Err(Error::validation(
            "scenario",
            "either `scenario` or `state` must be given",
        ));
    }
    let second_scenario = match &file.scenario_b {
        Some(name) => Some(scenario_by_name(name)?),
        None => None,
    };
    let second_state = match &file.state_b {
        Some(js) => Some(js.clone().into_state()?),
        None => None,
    };
    if kind == ExperimentKind::Metric && second_scenario.is_none() && second_state.is_none() {
        return Err(Error::validation(
            "scenario_b",
            "metric runs need `scenario_b` or `state_b`",
        ));
    }

    let default_grid = scenario
        .as_ref()
        .map(|s| s.default_grid.clone())
        .unwrap_or_else(|| Grid::new(-4.0, 6.0, 1024).unwrap());
    let gc = file.grid.unwrap_or(GridConfig { n: None, xi_min: None, xi_max: None });
    let n = overrides.grid_n.or(gc.n).unwrap_or(1024);
    let xi_min = gc.xi_min.unwrap_or(default_grid.xi_min());
    let xi_max = gc.xi_max.unwrap_or(default_grid.xi_max());
    let grid = Grid::new(xi_min, xi_max, n)?;

    let times = overrides
        .times
        .clone()
        .or(file.times)
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    if times.is_empty() {
        return Err(Error::validation("times", "need at least one time"));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::validation("times", "times must strictly increase"));
        }
    }
    if times[0] < 0.0 {
        return Err(Error::validation("times", "times must be nonnegative"));
    }

    let roughness = file.roughness.unwrap_or(0.3);
    if !(roughness > 0.0 && roughness < 1.0) {
        return Err(Error::validation("roughness", "must lie in (0, 1)"));
    }
    let pairs = file.pairs.unwrap_or(20);
    if pairs == 0 {
        return Err(Error::validation("pairs", "need at least one pair"));
    }
    let grid_ladder = file.grid_ladder.unwrap_or_else(|| vec![256, 512, 1024]);
    if grid_ladder.len() < 2 && kind == ExperimentKind::Converge {
        return Err(Error::validation("grid_ladder", "need at least two grid sizes"));
    }
    let quad_points = file.quad_points.unwrap_or(3);
    if quad_points == 0 {
        return Err(Error::validation("quad_points", "need at least one point"));
    }

    Ok(RunConfig {
        kind,
        scenario,
        inline_state,
        second_scenario,
        second_state,
        grid,
        times,
        seed: overrides.seed.or(file.seed).unwrap_or(0),
        budget: file.budget.unwrap_or(0),
        quad_points,
        pairs,
        roughness,
        grid_ladder,
        out: overrides
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("hsx-out")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_json(json: &str, kind: ExperimentKind) -> Result<RunConfig> {
        let file: ConfigFile = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        resolve(file, kind, &Overrides::default())
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = from_json(
            r#"{"scenario": "breaking", "times": [1, 2, 3]}"#,
            ExperimentKind::Simulate,
        )
        .unwrap();
        assert_eq!(c.grid.n(), 1024);
        assert_eq!(c.budget, 0);
        assert_eq!(c.quad_points, 3);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let err = from_json(r#"{"scenario": "vortex"}"#, ExperimentKind::Simulate).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "scenario"));
    }

    #[test]
    fn non_increasing_times_are_rejected() {
        let err = from_json(
            r#"{"scenario": "breaking", "times": [2, 1]}"#,
            ExperimentKind::Simulate,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "times"));
    }

    #[test]
    fn metric_requires_second_operand() {
        let err = from_json(r#"{"scenario": "breaking"}"#, ExperimentKind::Metric).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "scenario_b"));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let err = from_json(
            r#"{"kind": "metric", "scenario": "breaking"}"#,
            ExperimentKind::Simulate,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "kind"));
    }
}
