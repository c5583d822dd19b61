//! Experiment runner: seeded k-fold splitting, repeated-CV out-of-fold
//! prediction, metric aggregation, ablation studies and case reports.

use crate::error::EvalError;
use crate::gnn::{self, GraphSample, TrainConfig};
use crate::stats::{self, RidgeOptions};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// The four WAB regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WabScores {
    pub wab_aq: f64,
    pub fluency: f64,
    pub sequential_commands: f64,
    pub repetition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    WabAq,
    Fluency,
    SequentialCommands,
    Repetition,
}

impl TargetKind {
    pub const ALL: [TargetKind; 4] = [
        TargetKind::WabAq,
        TargetKind::Fluency,
        TargetKind::SequentialCommands,
        TargetKind::Repetition,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TargetKind::WabAq => "wab_aq",
            TargetKind::Fluency => "fluency",
            TargetKind::SequentialCommands => "sequential_commands",
            TargetKind::Repetition => "repetition",
        }
    }
}

impl WabScores {
    pub fn get(&self, target: TargetKind) -> f64 {
        match target {
            TargetKind::WabAq => self.wab_aq,
            TargetKind::Fluency => self.fluency,
            TargetKind::SequentialCommands => self.sequential_commands,
            TargetKind::Repetition => self.repetition,
        }
    }
}

/// One participant's evaluation inputs: the 20-value feature row, the GNN
/// graph sample, and the four targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub participant_id: String,
    pub gd: Vec<f64>,
    pub graph: GraphSample,
    pub scores: WabScores,
}

/// The joined per-participant dataset consumed by every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalDataset {
    pub records: Vec<EvalRecord>,
}

pub const DATASET_VERSION: &str = "aphasia-dataset/1";

/// Column index that flags gesture nodes in the node feature layout.
const IS_GESTURE_COLUMN: usize = 1;

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    version: String,
    gd_columns: Vec<String>,
    records: Vec<EvalRecord>,
}

impl EvalDataset {
    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.participant_id.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        let file = DatasetFile {
            version: DATASET_VERSION.to_string(),
            gd_columns: crate::features::GD_COLUMNS.iter().map(|s| s.to_string()).collect(),
            records: self.records.clone(),
        };
        serde_json::to_string_pretty(&file).expect("dataset serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: DatasetFile =
            serde_json::from_str(text).map_err(|e| format!("dataset parse error: {e}"))?;
        if file.version != DATASET_VERSION {
            return Err(format!(
                "dataset version mismatch: found `{}`, expected `{DATASET_VERSION}`",
                file.version
            ));
        }
        Ok(EvalDataset {
            records: file.records,
        })
    }

    /// Delete gesture nodes and their incident edges from every graph
    /// sample (feature rows and targets are untouched).
    pub fn without_gesture_nodes(&self) -> EvalDataset {
        let records = self
            .records
            .iter()
            .map(|r| {
                let remove: Vec<bool> = r
                    .graph
                    .features
                    .iter()
                    .map(|row| row.get(IS_GESTURE_COLUMN).copied() == Some(1.0))
                    .collect();
                EvalRecord {
                    participant_id: r.participant_id.clone(),
                    gd: r.gd.clone(),
                    graph: r.graph.without_nodes(&remove),
                    scores: r.scores,
                }
            })
            .collect();
        EvalDataset { records }
    }
}

/// Seeded fold assignment: shuffle then contiguous chunks whose sizes
/// differ by at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_members(&self, fold: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

pub fn kfold_split(ids: &[String], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFoldCount { k });
    }
    if ids.len() < k {
        return Err(EvalError::TooFewParticipants { k, got: ids.len() });
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n = ids.len();
    let base = n / k;
    let extra = n % k;
    let mut assignments = BTreeMap::new();
    let mut cursor = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &idx in &order[cursor..cursor + size] {
            assignments.insert(ids[idx].clone(), fold);
        }
        cursor += size;
    }
    Ok(FoldPlan { k, seed, assignments })
}

/// RMSE, MAE and both correlations between truth and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    pub pearson: f64,
    pub spearman: f64,
}

pub fn compute_metrics(truth: &[f64], pred: &[f64]) -> Result<Metrics, EvalError> {
    if truth.len() != pred.len() || truth.is_empty() {
        return Err(EvalError::Stats(crate::error::StatsError::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        }));
    }
    let n = truth.len() as f64;
    let mut square_sum = 0.0;
    let mut abs_sum = 0.0;
    for (t, p) in truth.iter().zip(pred) {
        let e = t - p;
        square_sum += e * e;
        abs_sum += e.abs();
    }
    Ok(Metrics {
        rmse: (square_sum / n).sqrt(),
        mae: abs_sum / n,
        pearson: stats::pearson(truth, pred)?,
        spearman: stats::spearman(truth, pred)?,
    })
}

/// Which model a cross-validation run trains.
#[derive(Debug, Clone)]
pub enum ModelKind {
    Ridge(RidgeOptions),
    Gnn(TrainConfig),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Ridge(_) => "ridge",
            ModelKind::Gnn(_) => "gnn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPrediction {
    pub participant_id: String,
    pub truth: f64,
    pub prediction: f64,
    pub fold: usize,
}

/// Per-fold metric means and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub target: String,
    pub folds: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub pearson_mean: f64,
    pub pearson_std: f64,
    pub spearman_mean: f64,
    pub spearman_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: MetricReport,
    pub predictions: Vec<FoldPrediction>,
}

fn mask_columns(gd: &[f64], mask: Option<&[usize]>) -> Result<Vec<f64>, EvalError> {
    match mask {
        None => Ok(gd.to_vec()),
        Some(columns) => {
            if columns.is_empty() {
                return Err(EvalError::EmptyFeatureMask);
            }
            Ok(columns.iter().map(|&c| gd[c]).collect())
        }
    }
}

fn fit_fold(
    model: &ModelKind,
    train: &[&EvalRecord],
    test: &[&EvalRecord],
    target: TargetKind,
    mask: Option<&[usize]>,
    fold: usize,
) -> Result<Vec<FoldPrediction>, EvalError> {
    let boxed = |e: EvalError| EvalError::FoldFailed {
        fold,
        source: Box::new(e),
    };
    match model {
        ModelKind::Ridge(options) => {
            let rows: Vec<Vec<f64>> = train
                .iter()
                .map(|r| mask_columns(&r.gd, mask))
                .collect::<Result<_, _>>()?;
            let y: Vec<f64> = train.iter().map(|r| r.scores.get(target)).collect();
            let fit = stats::ridge_fit(&rows, &y, options)
                .map_err(|e| boxed(EvalError::Stats(e)))?;
            test.iter()
                .map(|r| {
                    let row = mask_columns(&r.gd, mask)?;
                    Ok(FoldPrediction {
                        participant_id: r.participant_id.clone(),
                        truth: r.scores.get(target),
                        prediction: fit.predict(&row),
                        fold,
                    })
                })
                .collect()
        }
        ModelKind::Gnn(cfg) => {
            let dataset: Vec<(GraphSample, f64)> = train
                .iter()
                .map(|r| (r.graph.clone(), r.scores.get(target)))
                .collect();
            let model = gnn::train(&dataset, cfg).map_err(|e| boxed(EvalError::Gnn(e)))?;
            test.iter()
                .map(|r| {
                    let prediction = model
                        .predict(&r.graph)
                        .map_err(|e| boxed(EvalError::Gnn(e)))?;
                    Ok(FoldPrediction {
                        participant_id: r.participant_id.clone(),
                        truth: r.scores.get(target),
                        prediction,
                        fold,
                    })
                })
                .collect()
        }
    }
}

fn run_folds(
    model: &ModelKind,
    data: &EvalDataset,
    target: TargetKind,
    plan: &FoldPlan,
    mask: Option<&[usize]>,
    fold_seed_base: u64,
) -> Result<Vec<Vec<FoldPrediction>>, EvalError> {
    let mut per_fold = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let train: Vec<&EvalRecord> = data
            .records
            .iter()
            .filter(|r| plan.assignments[&r.participant_id] != fold)
            .collect();
        let test: Vec<&EvalRecord> = data
            .records
            .iter()
            .filter(|r| plan.assignments[&r.participant_id] == fold)
            .collect();

        // Leakage guard: train and test participants must be disjoint.
        let train_ids: BTreeSet<&str> =
            train.iter().map(|r| r.participant_id.as_str()).collect();
        assert!(
            test.iter().all(|r| !train_ids.contains(r.participant_id.as_str())),
            "fold {fold}: train/test participant overlap"
        );

        // Vary the GNN seed per fold, deterministically.
        let fold_model = match model {
            ModelKind::Gnn(cfg) => ModelKind::Gnn(TrainConfig {
                seed: fold_seed_base
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(fold as u64)
                    ^ cfg.seed,
                ..*cfg
            }),
            ridge => ridge.clone(),
        };
        per_fold.push(fit_fold(&fold_model, &train, &test, target, mask, fold)?);
    }
    Ok(per_fold)
}

/// Train on each fold's complement and predict the fold; report per-metric
/// mean and standard deviation across folds.
pub fn cross_validate(
    model: &ModelKind,
    data: &EvalDataset,
    target: TargetKind,
    k: usize,
    seed: u64,
    mask: Option<&[usize]>,
) -> Result<CvOutcome, EvalError> {
    if data.records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let plan = kfold_split(&data.ids(), k, seed)?;
    let per_fold = run_folds(model, data, target, &plan, mask, seed)?;

    let mut rmse = Vec::new();
    let mut mae = Vec::new();
    let mut pearson = Vec::new();
    let mut spearman = Vec::new();
    for (fold, predictions) in per_fold.iter().enumerate() {
        let truth: Vec<f64> = predictions.iter().map(|p| p.truth).collect();
        let pred: Vec<f64> = predictions.iter().map(|p| p.prediction).collect();
        let metrics = compute_metrics(&truth, &pred).map_err(|e| EvalError::FoldFailed {
            fold,
            source: Box::new(e),
        })?;
        rmse.push(metrics.rmse);
        mae.push(metrics.mae);
        pearson.push(metrics.pearson);
        spearman.push(metrics.spearman);
    }

    let (rmse_mean, rmse_std) = mean_std(&rmse);
    let (mae_mean, mae_std) = mean_std(&mae);
    let (pearson_mean, pearson_std) = mean_std(&pearson);
    let (spearman_mean, spearman_std) = mean_std(&spearman);
    Ok(CvOutcome {
        report: MetricReport {
            model: model.name().to_string(),
            target: target.name().to_string(),
            folds: k,
            rmse_mean,
            rmse_std,
            mae_mean,
            mae_std,
            pearson_mean,
            pearson_std,
            spearman_mean,
            spearman_std,
        },
        predictions: per_fold.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofPrediction {
    pub participant_id: String,
    pub truth: f64,
    /// Mean out-of-fold prediction over repeats.
    pub prediction: f64,
}

/// Repeated k-fold OOF prediction: repeat r re-splits with `seed + r`, each
/// participant is predicted once per repeat by a model that never saw it,
/// and the final value is the mean over repeats. Output follows dataset
/// record order.
pub fn oof_predictions(
    model: &ModelKind,
    data: &EvalDataset,
    target: TargetKind,
    k: usize,
    seed: u64,
    repeats: usize,
) -> Result<Vec<OofPrediction>, EvalError> {
    if data.records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for repeat in 0..repeats.max(1) {
        let repeat_seed = seed + repeat as u64;
        let plan = kfold_split(&data.ids(), k, repeat_seed)?;
        let per_fold = run_folds(model, data, target, &plan, None, repeat_seed)?;
        for prediction in per_fold.into_iter().flatten() {
            *sums.entry(prediction.participant_id).or_insert(0.0) += prediction.prediction;
        }
    }
    let denom = repeats.max(1) as f64;
    Ok(data
        .records
        .iter()
        .map(|r| OofPrediction {
            participant_id: r.participant_id.clone(),
            truth: r.scores.get(target),
            prediction: sums[&r.participant_id] / denom,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub participant_id: String,
    pub truth: f64,
    pub prediction: f64,
    pub abs_error: f64,
}

/// Best / median-straddling / worst cases, globally sorted by error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub rows: Vec<CaseRow>,
}

/// Select the `n_each` smallest, the `n_each` rows straddling the median,
/// and the `n_each` largest absolute errors. Overlapping selections are
/// deduplicated, so short inputs are clamped without repeating anyone.
pub fn rank_cases(oof: &[OofPrediction], n_each: usize) -> CaseReport {
    let mut sorted: Vec<CaseRow> = oof
        .iter()
        .map(|p| CaseRow {
            participant_id: p.participant_id.clone(),
            truth: p.truth,
            prediction: p.prediction,
            abs_error: (p.truth - p.prediction).abs(),
        })
        .collect();
    sorted.sort_by(|a, b| {
        a.abs_error
            .partial_cmp(&b.abs_error)
            .unwrap()
            .then_with(|| a.participant_id.cmp(&b.participant_id))
    });

    let n = sorted.len();
    if n == 0 {
        return CaseReport { rows: Vec::new() };
    }
    let mut picked: BTreeSet<usize> = BTreeSet::new();
    picked.extend(0..n_each.min(n));
    let mid = (n - 1) / 2;
    let start = mid.saturating_sub((n_each.saturating_sub(1)) / 2);
    picked.extend((start..n.min(start + n_each)).collect::<Vec<_>>());
    picked.extend(n.saturating_sub(n_each)..n);

    CaseReport {
        rows: picked.into_iter().map(|i| sorted[i].clone()).collect(),
    }
}

/// Feature-subset and graph ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AblationVariant {
    GraphOnly,
    GraphPos,
    GraphPosPara,
    PosOnly,
    ParaOnly,
    GnnNoGesture,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 6] = [
        AblationVariant::GraphOnly,
        AblationVariant::GraphPos,
        AblationVariant::GraphPosPara,
        AblationVariant::PosOnly,
        AblationVariant::ParaOnly,
        AblationVariant::GnnNoGesture,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AblationVariant::GraphOnly => "GRAPH_ONLY",
            AblationVariant::GraphPos => "GRAPH_POS",
            AblationVariant::GraphPosPara => "GRAPH_POS_PARA",
            AblationVariant::PosOnly => "POS_ONLY",
            AblationVariant::ParaOnly => "PARA_ONLY",
            AblationVariant::GnnNoGesture => "GNN_NO_GESTURE",
        }
    }

    /// Feature-column mask for regression variants; `None` for GNN ones.
    pub fn mask(&self) -> Option<Vec<usize>> {
        use crate::features::{GRAPH_COLUMN_RANGE, PARA_COLUMN_RANGE, POS_COLUMN_RANGE};
        match self {
            AblationVariant::GraphOnly => Some(GRAPH_COLUMN_RANGE.collect()),
            AblationVariant::GraphPos => {
                Some(GRAPH_COLUMN_RANGE.chain(POS_COLUMN_RANGE).collect())
            }
            AblationVariant::GraphPosPara => Some(
                GRAPH_COLUMN_RANGE
                    .chain(POS_COLUMN_RANGE)
                    .chain(PARA_COLUMN_RANGE)
                    .collect(),
            ),
            AblationVariant::PosOnly => Some(POS_COLUMN_RANGE.collect()),
            AblationVariant::ParaOnly => Some(PARA_COLUMN_RANGE.collect()),
            AblationVariant::GnnNoGesture => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblateOptions {
    pub k: usize,
    pub seed: u64,
    pub target: TargetKind,
    pub ridge: RidgeOptions,
    pub gnn: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationOutcome {
    pub variant: String,
    pub report: MetricReport,
    /// In-sample OLS fit on the masked columns (regression variants only).
    pub r_squared: Option<f64>,
    pub adjusted_r_squared: Option<f64>,
}

/// Run one ablation variant. Regression variants mask feature columns and
/// additionally report in-sample R-squared from an OLS fit on the masked
/// table; `GNN_NO_GESTURE` deletes gesture nodes before cross-validation.
pub fn ablate(
    data: &EvalDataset,
    variant: AblationVariant,
    options: &AblateOptions,
) -> Result<AblationOutcome, EvalError> {
    match variant.mask() {
        Some(mask) => {
            let outcome = cross_validate(
                &ModelKind::Ridge(options.ridge),
                data,
                options.target,
                options.k,
                options.seed,
                Some(&mask),
            )?;
            let rows: Vec<Vec<f64>> = data
                .records
                .iter()
                .map(|r| mask_columns(&r.gd, Some(&mask)))
                .collect::<Result<_, _>>()?;
            let y: Vec<f64> = data
                .records
                .iter()
                .map(|r| r.scores.get(options.target))
                .collect();
            // Rank-aware fit: para_any is an exact sum of the three class
            // rates, so the full feature block is rank-deficient and the
            // strict OLS path would reject it.
            let (r_squared, adjusted, _rank) = stats::least_squares_r2(&rows, &y)?;
            Ok(AblationOutcome {
                variant: variant.name().to_string(),
                report: outcome.report,
                r_squared: Some(r_squared),
                adjusted_r_squared: Some(adjusted),
            })
        }
        None => {
            let pruned = data.without_gesture_nodes();
            let outcome = cross_validate(
                &ModelKind::Gnn(options.gnn),
                &pruned,
                options.target,
                options.k,
                options.seed,
                None,
            )?;
            Ok(AblationOutcome {
                variant: variant.name().to_string(),
                report: outcome.report,
                r_squared: None,
                adjusted_r_squared: None,
            })
        }
    }
}
