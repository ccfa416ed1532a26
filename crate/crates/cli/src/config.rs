//! Run configuration: TOML file sections merged under command-line flags.
//!
//! ```toml
//! [run]
//! inputs = ["data/a.nt", "data/b.nq.gz"]
//! policy = "pld"            # host | pld | graph
//! alignment = "align.tsv"
//! out = "results"
//! seed = 7
//! threads = 4
//! strict = false
//!
//! [prior]
//! damping = 0.85
//!
//! [similarity]
//! numeric_floor = 1e-12
//!
//! [engine]
//! outer_threshold = 1e-3
//!
//! [truthfinder]
//! dampening = 0.3
//!
//! [synth]
//! n_sources = 50
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use truthdiscover::baselines::TruthFinderConfig;
use truthdiscover::engine::EngineConfig;
use truthdiscover::eval::SynthConfig;
use truthdiscover::prior::PriorConfig;
use truthdiscover::similarity::SimilarityConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub inputs: Vec<PathBuf>,
    pub policy: Option<String>,
    pub alignment: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub run: RunSection,
    pub prior: PriorConfig,
    pub similarity: SimilarityConfig,
    pub engine: EngineConfig,
    pub truthfinder: TruthFinderConfig,
    pub synth: SynthConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Paths in the `[run]` section are relative to the config file.
    pub fn resolve_paths(mut self, base: &Path) -> FileConfig {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.run.inputs.iter_mut().for_each(fix);
        self.run.alignment.iter_mut().for_each(fix);
        self.run.out.iter_mut().for_each(fix);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_parse() {
        let cfg: FileConfig = toml::from_str(
            "[run]\ninputs = [\"a.nt\"]\npolicy = \"pld\"\n[prior]\ndamping = 0.5\n[engine]\nouter_max = 7\n[synth]\nn_sources = 9\nreliability_range = [0.1, 0.2]\n",
        )
        .unwrap();
        assert_eq!(cfg.run.inputs, vec![PathBuf::from("a.nt")]);
        assert_eq!(cfg.prior.damping, 0.5);
        assert_eq!(cfg.prior.max_sweeps, PriorConfig::default().max_sweeps);
        assert_eq!(cfg.engine.outer_max, 7);
        assert_eq!(cfg.synth.n_sources, 9);
        assert_eq!(cfg.synth.reliability_range, (0.1, 0.2));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[prior]\ndampng = 0.5\n").is_err());
        assert!(toml::from_str::<FileConfig>("[priors]\n").is_err());
    }

    #[test]
    fn paths_relative_to_file() {
        let cfg: FileConfig = toml::from_str("[run]\ninputs = [\"a.nt\", \"/abs/b.nt\"]\n").unwrap();
        let cfg = cfg.resolve_paths(Path::new("/etc/td"));
        assert_eq!(cfg.run.inputs, vec![PathBuf::from("/etc/td/a.nt"), PathBuf::from("/abs/b.nt")]);
    }
}
