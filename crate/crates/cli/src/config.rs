//! Declarative pipeline configuration (TOML).
//!
//! Every knob has a default, so an empty or absent file is a valid config.
//! `--seed` on the command line re-derives the four component seeds from
//! one master value.

use aphasia_core::eval::TargetKind;
use aphasia_core::gnn::{NeighborMode, TrainConfig};
use aphasia_core::graph::{GestureTieBreak, GraphConfig};
use aphasia_core::stats::RidgeOptions;
use aphasia_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusSection,
    pub synth: SynthSection,
    pub parser: ParserSection,
    pub graph: GraphSection,
    pub features: FeaturesSection,
    pub ridge: RidgeSection,
    pub gnn: GnnSection,
    pub eval: EvalSection,
    pub analyze: AnalyzeSection,
    pub scores: ScoreColumns,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Directory of `.cha` files. Empty means `<out>/corpus` (the synth
    /// stage output).
    pub dir: String,
    /// WAB score sheet CSV. Empty means `<corpus dir>/wab_scores.csv`.
    pub scores: String,
}

impl CorpusSection {
    pub fn dir_or(&self, out_dir: &Path) -> PathBuf {
        if self.dir.is_empty() {
            out_dir.join("corpus")
        } else {
            PathBuf::from(&self.dir)
        }
    }

    pub fn scores_or(&self, out_dir: &Path) -> PathBuf {
        if self.scores.is_empty() {
            self.dir_or(out_dir).join("wab_scores.csv")
        } else {
            PathBuf::from(&self.scores)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_participants: usize,
    pub seed: u64,
    pub severity_min: f64,
    pub severity_max: f64,
    pub max_para_sem: f64,
    pub max_para_phon: f64,
    pub max_para_neo: f64,
    pub max_gesture_rate: f64,
    pub base_gesture_rate: f64,
    pub utterances_min: usize,
    pub utterances_max: usize,
    pub words_at_severe: f64,
    pub words_at_mild: f64,
    pub target_noise_sd: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSection {
            n_participants: d.n_participants,
            seed: d.seed,
            severity_min: d.severity_min,
            severity_max: d.severity_max,
            max_para_sem: d.max_para_sem,
            max_para_phon: d.max_para_phon,
            max_para_neo: d.max_para_neo,
            max_gesture_rate: d.max_gesture_rate,
            base_gesture_rate: d.base_gesture_rate,
            utterances_min: d.utterances_min,
            utterances_max: d.utterances_max,
            words_at_severe: d.words_at_severe,
            words_at_mild: d.words_at_mild,
            target_noise_sd: d.target_noise_sd,
        }
    }
}

impl SynthSection {
    pub fn to_core(&self) -> SynthConfig {
        SynthConfig {
            n_participants: self.n_participants,
            seed: self.seed,
            severity_min: self.severity_min,
            severity_max: self.severity_max,
            max_para_sem: self.max_para_sem,
            max_para_phon: self.max_para_phon,
            max_para_neo: self.max_para_neo,
            max_gesture_rate: self.max_gesture_rate,
            base_gesture_rate: self.base_gesture_rate,
            utterances_min: self.utterances_min,
            utterances_max: self.utterances_max,
            words_at_severe: self.words_at_severe,
            words_at_mild: self.words_at_mild,
            target_noise_sd: self.target_noise_sd,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParserSection {
    pub participant_tag: String,
}

impl Default for ParserSection {
    fn default() -> Self {
        ParserSection {
            participant_tag: "PAR".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub gesture_window: usize,
    /// "preceding" or "following".
    pub tie_break: String,
    pub louvain_seed: u64,
    pub emit_dot: bool,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            gesture_window: 5,
            tie_break: "preceding".to_string(),
            louvain_seed: 7,
            emit_dot: false,
        }
    }
}

impl GraphSection {
    pub fn to_core(&self) -> Result<GraphConfig, String> {
        let tie_break = match self.tie_break.as_str() {
            "preceding" => GestureTieBreak::Preceding,
            "following" => GestureTieBreak::Following,
            other => return Err(format!("graph.tie_break must be `preceding` or `following`, got `{other}`")),
        };
        Ok(GraphConfig {
            gesture_window: self.gesture_window,
            tie_break,
            louvain_seed: self.louvain_seed,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    /// Include the paraphasia indicator as node-feature dimension 7.
    pub include_paraphasia_feature: bool,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            include_paraphasia_feature: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeSection {
    pub alpha: f64,
    pub standardize: bool,
    pub fit_intercept: bool,
}

impl Default for RidgeSection {
    fn default() -> Self {
        let d = RidgeOptions::default();
        RidgeSection {
            alpha: d.alpha,
            standardize: d.standardize,
            fit_intercept: d.fit_intercept,
        }
    }
}

impl RidgeSection {
    pub fn to_core(&self) -> RidgeOptions {
        RidgeOptions {
            alpha: self.alpha,
            standardize: self.standardize,
            fit_intercept: self.fit_intercept,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnSection {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub seed: u64,
    pub weight_init_scale: f64,
    /// "undirected", "in_only" or "out_only".
    pub neighbor_mode: String,
    pub use_edge_weights: bool,
    pub standardize_targets: bool,
}

impl Default for GnnSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        GnnSection {
            hidden: d.hidden,
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            dropout: d.dropout,
            seed: d.seed,
            weight_init_scale: d.weight_init_scale,
            neighbor_mode: "undirected".to_string(),
            use_edge_weights: d.use_edge_weights,
            standardize_targets: d.standardize_targets,
        }
    }
}

impl GnnSection {
    pub fn to_core(&self) -> Result<TrainConfig, String> {
        let neighbor_mode = match self.neighbor_mode.as_str() {
            "undirected" => NeighborMode::Undirected,
            "in_only" => NeighborMode::InOnly,
            "out_only" => NeighborMode::OutOnly,
            other => {
                return Err(format!(
                    "gnn.neighbor_mode must be `undirected`, `in_only` or `out_only`, got `{other}`"
                ))
            }
        };
        Ok(TrainConfig {
            hidden: self.hidden,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            dropout: self.dropout,
            seed: self.seed,
            weight_init_scale: self.weight_init_scale,
            neighbor_mode,
            use_edge_weights: self.use_edge_weights,
            standardize_targets: self.standardize_targets,
            ..TrainConfig::default()
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k: usize,
    pub seed: u64,
    pub repeats: usize,
    pub targets: Vec<String>,
    pub oof_target: String,
    pub n_each_cases: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            k: 5,
            seed: 99,
            repeats: 5,
            targets: TargetKind::ALL.iter().map(|t| t.name().to_string()).collect(),
            oof_target: "wab_aq".to_string(),
            n_each_cases: 3,
        }
    }
}

pub fn parse_target(name: &str) -> Result<TargetKind, String> {
    TargetKind::ALL
        .iter()
        .copied()
        .find(|t| t.name() == name)
        .ok_or_else(|| format!("unknown target `{name}`"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub lowess_frac: f64,
    pub lowess_features: Vec<String>,
    pub lowess_target: String,
    /// WAB-AQ below this threshold defines the positive (aphasic) class
    /// for the logistic odds fit.
    pub logistic_threshold: f64,
    pub logistic_unit: f64,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection {
            lowess_frac: 0.5,
            lowess_features: vec![
                "gesture_ratio".to_string(),
                "para_any".to_string(),
                "para_sem".to_string(),
                "density".to_string(),
                "degree_entropy".to_string(),
            ],
            lowess_target: "wab_aq".to_string(),
            logistic_threshold: 93.8,
            logistic_unit: 0.01,
        }
    }
}

/// Column-name mapping for real score-sheet exports whose headers differ
/// from the frozen five-column schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreColumns {
    pub participant_id: String,
    pub wab_aq: String,
    pub fluency: String,
    pub sequential_commands: String,
    pub repetition: String,
}

impl Default for ScoreColumns {
    fn default() -> Self {
        ScoreColumns {
            participant_id: "participant_id".to_string(),
            wab_aq: "wab_aq".to_string(),
            fluency: "fluency".to_string(),
            sequential_commands: "sequential_commands".to_string(),
            repetition: "repetition".to_string(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(PipelineConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
            }
        }
    }

    /// Derive all component seeds from one master seed.
    pub fn override_seed(&mut self, master: u64) {
        self.synth.seed = master;
        self.graph.louvain_seed = master.wrapping_add(1);
        self.gnn.seed = master.wrapping_add(2);
        self.eval.seed = master.wrapping_add(3);
    }

    /// Canonical TOML snapshot for manifests.
    pub fn snapshot(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let parsed: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(parsed.eval.k, 5);
        assert_eq!(parsed.gnn.hidden, 64);
        assert_eq!(parsed.analyze.logistic_threshold, 93.8);
    }

    #[test]
    fn partial_overrides_merge_with_defaults() {
        let parsed: PipelineConfig = toml::from_str(
            "[gnn]\nhidden = 8\nepochs = 10\n\n[eval]\nk = 3\n",
        )
        .unwrap();
        assert_eq!(parsed.gnn.hidden, 8);
        assert_eq!(parsed.gnn.epochs, 10);
        assert_eq!(parsed.gnn.dropout, 0.2);
        assert_eq!(parsed.eval.k, 3);
        assert_eq!(parsed.eval.repeats, 5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[gnn]\ntypo_key = 1\n").is_err());
    }

    #[test]
    fn seed_override_fans_out() {
        let mut config = PipelineConfig::default();
        config.override_seed(1000);
        assert_eq!(config.synth.seed, 1000);
        assert_eq!(config.graph.louvain_seed, 1001);
        assert_eq!(config.gnn.seed, 1002);
        assert_eq!(config.eval.seed, 1003);
    }

    #[test]
    fn snapshot_roundtrips() {
        let config = PipelineConfig::default();
        let text = config.snapshot();
        let parsed: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(parsed.snapshot(), text);
    }
}
