//! Run configuration: a single JSON document describing the flow, the solver
//! and the experiment parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cell::SolverConfig;
use crate::error::{Error, Result};
use crate::flow::FlowField;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [i32; 2],
    pub re: [f64; 2],
    pub im: [f64; 2],
}

/// Flow specification block: either a named builtin or an explicit mode list.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeSpec>>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

impl FlowSpec {
    pub fn builtin(name: &str, amplitude: f64) -> Self {
        FlowSpec {
            builtin: Some(name.to_string()),
            delta: None,
            modes: None,
            amplitude,
        }
    }

    pub fn build(&self) -> Result<FlowField> {
        let field = match (&self.builtin, &self.modes) {
            (Some(name), None) => match name.as_str() {
                "zero" => FlowField::zero(),
                "shear_sin" => FlowField::shear_sin(),
                "cellular" => FlowField::cellular(),
                "cats_eye" => {
                    let delta = self.delta.ok_or_else(|| {
                        Error::InvalidConfig("cats_eye requires a delta in (0, 1)".into())
                    })?;
                    FlowField::cats_eye(delta)
                        .map_err(|e| Error::InvalidConfig(e.to_string()))?
                }
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown builtin flow '{other}' (expected zero | shear_sin | cellular | cats_eye)"
                    )))
                }
            },
            (None, Some(specs)) => {
                let mut modes = BTreeMap::new();
                for m in specs {
                    modes.insert(
                        m.k,
                        [
                            Complex64::new(m.re[0], m.im[0]),
                            Complex64::new(m.re[1], m.im[1]),
                        ],
                    );
                }
                FlowField::from_modes(modes, 1.0, "custom")
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "flow block must give either a builtin or a mode list, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "flow block must give a builtin name or a mode list".into(),
                ))
            }
        };
        Ok(field.with_amplitude(self.amplitude))
    }
}

/// Experiment parameters shared across the subcommands; each command reads
/// the subset it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Tag used by `effburn experiment` when no variant is given on the
    /// command line.
    pub kind: Option<String>,
    /// Momenta for batch commands.
    pub p_list: Vec<[f64; 2]>,
    /// Flow amplitudes for the weak-flow sweep.
    pub eps_list: Vec<f64>,
    /// Flow amplitudes for the strong-flow sweep.
    pub a_list: Vec<f64>,
    pub n_angles: usize,
    /// Level for Hbar level curves.
    pub level: f64,
    /// "alpha" or "hbar" for the level-curve command.
    pub level_kind: String,
    /// Flatness threshold; when absent it is derived from the solver noise.
    pub kappa_tol: Option<f64>,
    /// Quadrature resolution for the shear oracle.
    pub quad_n: usize,
    /// Small-divisor floor for a2.
    pub divisor_floor: f64,
    /// Front model for the front command: euclidean | ell1 | sampled.
    pub front_model: String,
    pub front_scale: f64,
    pub t_list: Vec<f64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: None,
            p_list: vec![[1.0, 0.0]],
            eps_list: vec![0.2, 0.1],
            a_list: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            n_angles: 64,
            level: 1.0,
            level_kind: "alpha".to_string(),
            kappa_tol: None,
            quad_n: 2048,
            divisor_floor: crate::perturb::DEFAULT_DIVISOR_FLOOR,
            front_model: "ell1".to_string(),
            front_scale: 1.0,
            t_list: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Subset of {"csv", "json", "svg"}.
    pub formats: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into(), "svg".into()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub flow: FlowSpec,
    pub solver: SolverConfig,
    pub experiment: ExperimentSpec,
    pub output: OutputSpec,
    /// Seed recorded in outputs for any randomized sampling a driver adds.
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.flow.build()?;
        self.solver
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let e = &self.experiment;
        if e.p_list.is_empty() {
            return Err(Error::InvalidConfig("p_list must not be empty".into()));
        }
        if e.n_angles == 0 {
            return Err(Error::InvalidConfig("n_angles must be positive".into()));
        }
        for list in [&e.eps_list, &e.a_list, &e.t_list] {
            if list.is_empty() {
                return Err(Error::InvalidConfig(
                    "eps_list, a_list and t_list must not be empty".into(),
                ));
            }
        }
        match e.level_kind.as_str() {
            "alpha" | "hbar" => {}
            other => {
                return Err(Error::InvalidConfig(format!(
                    "level_kind must be alpha or hbar, got '{other}'"
                )))
            }
        }
        match e.front_model.as_str() {
            "euclidean" | "ell1" | "sampled" => {}
            other => {
                return Err(Error::InvalidConfig(format!(
                    "front_model must be euclidean, ell1 or sampled, got '{other}'"
                )))
            }
        }
        for f in &self.output.formats {
            if !matches!(f.as_str(), "csv" | "json" | "svg") {
                return Err(Error::InvalidConfig(format!("unknown output format '{f}'")));
            }
        }
        Ok(())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_flows_build() {
        for name in ["zero", "shear_sin", "cellular"] {
            let spec = FlowSpec::builtin(name, 2.0);
            let f = spec.build().unwrap();
            assert_eq!(f.amplitude(), 2.0);
        }
        let mut spec = FlowSpec::builtin("cats_eye", 1.0);
        assert!(spec.build().is_err()); // missing delta
        spec.delta = Some(0.3);
        assert!(spec.build().is_ok());
    }

    #[test]
    fn unknown_builtin_rejected() {
        assert!(FlowSpec::builtin("vortex", 1.0).build().is_err());
    }

    #[test]
    fn mode_list_round_trip() {
        let json = r#"{
            "flow": {"modes": [
                {"k": [0, 1], "re": [0.0, 0.0], "im": [-0.5, 0.0]},
                {"k": [0, -1], "re": [0.0, 0.0], "im": [0.5, 0.0]}
            ], "amplitude": 1.5}
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        let f = cfg.flow.build().unwrap();
        assert_eq!(f.n_modes(), 2);
        assert_eq!(f.amplitude(), 1.5);
    }

    #[test]
    fn malformed_flow_block_is_config_error() {
        let json = r#"{"flow": {"builtin": "shear_sin", "modes": []}}"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn default_config_is_valid() {
        let mut cfg = RunConfig::default();
        cfg.flow = FlowSpec::builtin("cellular", 1.0);
        cfg.validate().unwrap();
    }
}
