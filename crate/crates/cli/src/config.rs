//! Run configuration: a TOML file with `[model]`, `[policy]`, `[sweep]`,
//! `[simulate]` and `[output]` sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tandem_clearing::evaluation::{SweepGrid, SweepSpec};
use tandem_clearing::solver::{SolveOptions, DEFAULT_TIE_TOL};
use tandem_clearing::{Action, ModelParams, SystemState};

use crate::CliError;

pub const DEFAULT_N_MAX: usize = 40;
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_EPISODES: usize = 10_000;
pub const DEFAULT_START: &str = "10,2,0,0";

/// Shown under `--help`.
pub const CONFIG_HELP: &str = "\
CONFIG FILE (TOML; every key optional, unknown keys rejected):
  [model]     mu0 mu1 mu2 h0 h1 h2 (all > 0), n_max = 40,
              tie_tol = 1e-9, tie_break = 2
  [policy]    spec = \"optimal\" | \"always1\" | \"always2\" | \"threshold:T\"
              | \"blocking\" | \"custom:N200,N110,N101\" | \"p1\"..\"p5\"
              state = \"i,j,k,l\"   (evaluate: also print this state)
  [sweep]     mu0 mu1 mu2 h0 h1 h2 = [..] (default: the standard grid),
              states = [\"20,2,0,0\", \"20,1,1,0\", \"20,1,0,1\"], n_max = 22,
              policies = [\"p1\", ..., \"p5\"]
  [simulate]  episodes = 10000, seed = 0, start = \"10,2,0,0\", policy = \"optimal\"
  [output]    dir = \"out\"
Command-line flags override the file.";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub mu0: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub h0: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub n_max: Option<usize>,
    pub tie_tol: Option<f64>,
    pub tie_break: Option<u8>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub spec: Option<String>,
    pub state: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub mu0: Option<Vec<f64>>,
    pub mu1: Option<Vec<f64>>,
    pub mu2: Option<Vec<f64>>,
    pub h0: Option<Vec<f64>>,
    pub h1: Option<Vec<f64>>,
    pub h2: Option<Vec<f64>>,
    pub states: Option<Vec<String>>,
    pub n_max: Option<usize>,
    pub policies: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    pub start: Option<String>,
    pub policy: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn parse(text: &str) -> Result<FileConfig, String> {
    toml::from_str(text).map_err(|e| e.message().to_string())
}

pub fn parse_state(s: &str) -> Result<SystemState, CliError> {
    let x: SystemState = s.parse().map_err(|e| CliError::Usage(format!("bad state '{s}': {e}")))?;
    if !x.in_space() {
        return Err(CliError::Usage(format!("state {x} is not in the state space")));
    }
    Ok(x)
}

pub fn parse_tie_break(code: u8) -> Result<Action, CliError> {
    Action::from_code(code).ok_or_else(|| CliError::Usage(format!("tie_break must be 1 or 2, got {code}")))
}

/// Parses `mu0,mu1,mu2,h0,h1,h2`.
pub fn parse_params(s: &str) -> Result<[f64; 6], CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(CliError::Usage(format!("--params needs six comma-separated numbers, got '{s}'")));
    }
    let mut out = [0.0; 6];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|_| CliError::Usage(format!("bad number '{part}' in --params")))?;
    }
    Ok(out)
}

impl ModelSection {
    /// Parameters with `--params` taking precedence over the file.
    pub fn params(&self, flag: Option<[f64; 6]>) -> Result<ModelParams, CliError> {
        let values = match flag {
            Some(v) => v,
            None => {
                let fields = [self.mu0, self.mu1, self.mu2, self.h0, self.h1, self.h2];
                let names = ["mu0", "mu1", "mu2", "h0", "h1", "h2"];
                let mut v = [0.0; 6];
                for ((slot, field), name) in v.iter_mut().zip(fields).zip(names) {
                    *slot = field.ok_or_else(|| {
                        CliError::Usage(format!("missing model parameter {name} (use --params or [model] in --config)"))
                    })?;
                }
                v
            }
        };
        ModelParams::new(values[0], values[1], values[2], values[3], values[4], values[5])
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn options(&self, tie_break_flag: Option<u8>) -> Result<SolveOptions, CliError> {
        let tie_break = match tie_break_flag.or(self.tie_break) {
            Some(code) => parse_tie_break(code)?,
            None => SolveOptions::default().tie_break,
        };
        let tie_tol = self.tie_tol.unwrap_or(DEFAULT_TIE_TOL);
        if !(tie_tol.is_finite() && tie_tol >= 0.0) {
            return Err(CliError::Usage(format!("tie_tol must be finite and non-negative, got {tie_tol}")));
        }
        Ok(SolveOptions { tie_tol, tie_break })
    }
}

impl SweepSection {
    pub fn spec(&self, n_max_flag: Option<usize>, options: SolveOptions) -> Result<SweepSpec, CliError> {
        let mut spec = SweepSpec::standard();
        let std = SweepGrid::standard();
        let pick = |v: &Option<Vec<f64>>, d: Vec<f64>| v.clone().unwrap_or(d);
        spec.grid = SweepGrid {
            mu0: pick(&self.mu0, std.mu0),
            mu1: pick(&self.mu1, std.mu1),
            mu2: pick(&self.mu2, std.mu2),
            h0: pick(&self.h0, std.h0),
            h1: pick(&self.h1, std.h1),
            h2: pick(&self.h2, std.h2),
        };
        if let Some(states) = &self.states {
            spec.states = states.iter().map(|s| parse_state(s)).collect::<Result<_, _>>()?;
        }
        if let Some(policies) = &self.policies {
            spec.policies = policies
                .iter()
                .map(|p| tandem_clearing::evaluation::PolicyColumn::new(&column_label(p), p))
                .collect();
        }
        if let Some(n) = n_max_flag.or(self.n_max) {
            spec.n_max = n;
        }
        spec.options = options;
        Ok(spec)
    }
}

/// Column-safe label for a policy spec (`threshold:10` becomes `threshold10`).
fn column_label(spec: &str) -> String {
    spec.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '_').collect()
}
