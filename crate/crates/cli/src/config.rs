//! Settings from an optional TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use dtr_core::constraints::InteriorScope;
use dtr_core::realizer::RealizeConfig;
use dtr_core::solver::SolverConfig;
use serde::Deserialize;

/// Layout of the `--config` file. Every key is optional:
///
/// ```toml
/// seed = 7
/// budget = 30.0
/// allow_reflection = true
/// interior_scope = "OFF_OUTER_FACE"
/// lift_targets = [4.0, 16.0]
///
/// [solver]
/// restarts = 4
/// max_iterations = 5000
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub budget: Option<f64>,
    pub allow_reflection: Option<bool>,
    pub interior_scope: Option<InteriorScope>,
    pub lift_targets: Option<Vec<f64>>,
    pub perturbation_trials: Option<usize>,
    pub polish_iterations: Option<usize>,
    pub smt2_dir: Option<PathBuf>,
    pub solver: Option<SolverConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn apply(self, config: &mut RealizeConfig) {
        if let Some(solver) = self.solver {
            config.solver = solver;
        }
        if let Some(seed) = self.seed {
            config.solver.seed = seed;
        }
        if let Some(budget) = self.budget {
            config.solver.time_budget_secs = budget;
        }
        if let Some(allow) = self.allow_reflection {
            config.allow_reflection = allow;
        }
        if let Some(scope) = self.interior_scope {
            config.interior_scope = scope;
        }
        if let Some(targets) = self.lift_targets {
            config.lift_targets = targets;
        }
        if let Some(trials) = self.perturbation_trials {
            config.perturbation_trials = trials;
        }
        if let Some(iterations) = self.polish_iterations {
            config.polish_iterations = iterations;
        }
        if self.smt2_dir.is_some() {
            config.smt2_dir = self.smt2_dir;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let text = "seed = 7\nbudget = 5.0\ninterior_scope = \"OFF_OUTER_FACE\"\n[solver]\nrestarts = 3\n";
        let file: FileConfig = toml::from_str(text).unwrap();
        let mut config = RealizeConfig::default();
        file.apply(&mut config);
        assert_eq!(config.solver.seed, 7);
        assert_eq!(config.solver.time_budget_secs, 5.0);
        assert_eq!(config.solver.restarts, 3);
        assert_eq!(config.solver.max_iterations, SolverConfig::default().max_iterations);
        assert_eq!(config.interior_scope, InteriorScope::OffOuterFace);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("colour = 1\n").is_err());
    }
}
