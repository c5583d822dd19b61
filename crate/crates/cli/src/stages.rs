//! Stage-by-stage pipeline orchestration.
//!
//! Each stage reads the previous stage's artifacts, writes its own under
//! `<out>/<stage>/`, and seals them with a manifest. Reruns with identical
//! inputs and seeds are byte-identical (manifests differ only in their
//! timestamp).

use crate::config::{parse_target, PipelineConfig};
use crate::error::CliError;
use crate::ingest::{ingest_scores, merge_features_scores};
use crate::manifest::{require, StageWriter};
use crate::plots;
use aphasia_core::chat::{parse_transcript, Transcript};
use aphasia_core::eval::{
    ablate, cross_validate, oof_predictions, rank_cases, AblateOptions, AblationVariant,
    EvalDataset, EvalRecord, MetricReport, ModelKind, OofPrediction, TargetKind, WabScores,
};
use aphasia_core::features::{graph_feature_vector, node_feature_matrix, GD_COLUMNS};
use aphasia_core::gnn::{train, GraphSample};
use aphasia_core::graph::{build_graph_with_communities, DiscourseGraph};
use aphasia_core::stats;
use aphasia_core::synth::{generate_participants, scores_csv};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "lowercase")]
pub enum Stage {
    Synth,
    Parse,
    Graph,
    Features,
    Analyze,
    Train,
    Evaluate,
    Oof,
    Ablate,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Parse => "parse",
            Stage::Graph => "graph",
            Stage::Features => "features",
            Stage::Analyze => "analyze",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Oof => "oof",
            Stage::Ablate => "ablate",
        }
    }
}

pub struct StageContext {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
}

impl StageContext {
    pub fn new(config: PipelineConfig, out_dir: PathBuf) -> Self {
        StageContext { config, out_dir }
    }

    fn stage_dir(&self, stage: &str) -> PathBuf {
        self.out_dir.join(stage)
    }

    fn corpus_dir(&self) -> PathBuf {
        self.config.corpus.dir_or(&self.out_dir)
    }

    fn scores_path(&self) -> PathBuf {
        self.config.corpus.scores_or(&self.out_dir)
    }

    fn writer(&self, stage: &str, dir: &Path) -> StageWriter {
        StageWriter::new(stage, dir, &self.config.snapshot())
    }
}

pub fn run_stage(ctx: &StageContext, stage: Stage) -> Result<(), CliError> {
    log::info!(target: "pipeline", "stage={} out={}", stage.name(), ctx.out_dir.display());
    match stage {
        Stage::Synth => run_synth(ctx),
        Stage::Parse => run_parse(ctx),
        Stage::Graph => run_graph(ctx),
        Stage::Features => run_features(ctx),
        Stage::Analyze => run_analyze(ctx),
        Stage::Train => run_train(ctx),
        Stage::Evaluate => run_evaluate(ctx),
        Stage::Oof => run_oof(ctx),
        Stage::Ablate => run_ablate(ctx),
    }
}

fn list_files(dir: &Path, extension: &str, skip: &[&str]) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(extension))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map_or(false, |name| !skip.contains(&name))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Shortest-roundtrip float formatting; deterministic and parseable.
fn fnum(v: f64) -> String {
    format!("{v}")
}

fn run_synth(ctx: &StageContext) -> Result<(), CliError> {
    let cfg = ctx.config.synth.to_core();
    let dir = ctx.stage_dir("corpus");
    let mut writer = ctx.writer("synth", &dir);
    writer.seed("synth_seed", cfg.seed);

    let participants = generate_participants(&cfg);
    for participant in &participants {
        writer.write(
            &format!("{}.cha", participant.id),
            participant.chat_text.as_bytes(),
        )?;
    }
    writer.write("wab_scores.csv", scores_csv(&participants).as_bytes())?;
    writer.seal()?;
    log::info!(target: "synth", "participants={} dir={}", participants.len(), dir.display());
    Ok(())
}

fn run_parse(ctx: &StageContext) -> Result<(), CliError> {
    let corpus = ctx.corpus_dir();
    require(&corpus, "synth")?;
    let files = list_files(&corpus, "cha", &[])?;
    if files.is_empty() {
        return Err(CliError::MalformedInput {
            path: corpus.display().to_string(),
            message: "no .cha files found".to_string(),
        });
    }

    let dir = ctx.stage_dir("transcripts");
    let mut writer = ctx.writer("parse", &dir);
    let tag = &ctx.config.parser.participant_tag;

    let mut warnings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut transcripts: BTreeMap<String, Transcript> = BTreeMap::new();
    for file in &files {
        writer.input(file, "synth")?;
        let raw = std::fs::read_to_string(file)?;
        let outcome = parse_transcript(&raw, tag).map_err(|e| CliError::MalformedInput {
            path: file.display().to_string(),
            message: e.to_string(),
        })?;
        let mut transcript = outcome.transcript;
        if transcript.participant_id == *tag {
            // No @Participants header: fall back to the file stem.
            transcript.participant_id = file
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(tag)
                .to_string();
        }
        let pid = transcript.participant_id.clone();
        if let Some(previous) = seen.insert(pid.clone(), file.clone()) {
            log::warn!(target: "parse", "duplicate participant id {pid} ({} and {})",
                previous.display(), file.display());
            return Err(CliError::DuplicateKey {
                id: pid,
                context: "parsed corpus".to_string(),
            });
        }
        if !outcome.warnings.is_empty() {
            warnings.insert(
                pid.clone(),
                outcome.warnings.iter().map(|w| w.to_string()).collect(),
            );
        }
        transcripts.insert(pid, transcript);
    }

    for (pid, transcript) in &transcripts {
        let json = serde_json::to_string_pretty(transcript).expect("transcript serializes");
        writer.write(&format!("{pid}.json"), json.as_bytes())?;
    }
    writer.write(
        "parse_warnings.json",
        serde_json::to_string_pretty(&warnings)
            .expect("warnings serialize")
            .as_bytes(),
    )?;
    writer.seal()?;
    log::info!(target: "parse", "transcripts={} with_warnings={}", transcripts.len(), warnings.len());
    Ok(())
}

fn load_transcript(path: &Path) -> Result<Transcript, CliError> {
    let raw = std::fs::read_to_string(path)?;
    serde_json::from_str(&raw).map_err(|e| CliError::MalformedInput {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn run_graph(ctx: &StageContext) -> Result<(), CliError> {
    let transcripts_dir = ctx.stage_dir("transcripts");
    require(&transcripts_dir, "parse")?;
    let files = list_files(
        &transcripts_dir,
        "json",
        &["manifest.json", "parse_warnings.json"],
    )?;

    let graph_cfg = ctx
        .config
        .graph
        .to_core()
        .map_err(CliError::Config)?;
    let dir = ctx.stage_dir("graphs");
    let mut writer = ctx.writer("graph", &dir);
    writer.seed("louvain_seed", graph_cfg.louvain_seed);

    let mut built = 0usize;
    let mut skipped = Vec::new();
    for file in &files {
        writer.input(file, "parse")?;
        let transcript = load_transcript(file)?;
        let pid = transcript.participant_id.clone();
        match build_graph_with_communities(&transcript, &graph_cfg) {
            Ok((graph, assignment)) => {
                writer.write(&format!("{pid}.json"), graph.to_json().as_bytes())?;
                if ctx.config.graph.emit_dot {
                    writer.write(&format!("{pid}.dot"), graph.to_dot().as_bytes())?;
                }
                log::debug!(target: "graph",
                    "pid={pid} nodes={} edges={} communities={} modularity={:.4}",
                    graph.node_count(), graph.edge_count(),
                    assignment.community_count(), assignment.modularity);
                built += 1;
            }
            Err(e) => {
                log::warn!(target: "graph", "pid={pid} skipped: {e}");
                skipped.push(pid);
            }
        }
    }
    writer.write(
        "skipped.json",
        serde_json::to_string_pretty(&skipped)
            .expect("skip list serializes")
            .as_bytes(),
    )?;
    writer.seal()?;
    log::info!(target: "graph", "graphs={built} skipped={}", skipped.len());
    Ok(())
}

fn load_graph(path: &Path) -> Result<DiscourseGraph, CliError> {
    let raw = std::fs::read_to_string(path)?;
    DiscourseGraph::from_json(&raw).map_err(|e| CliError::MalformedInput {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn run_features(ctx: &StageContext) -> Result<(), CliError> {
    let graphs_dir = ctx.stage_dir("graphs");
    let transcripts_dir = ctx.stage_dir("transcripts");
    require(&graphs_dir, "graph")?;
    require(&transcripts_dir, "parse")?;
    let scores_path = ctx.scores_path();
    require(&scores_path, "synth")?;

    let dir = ctx.stage_dir("features");
    let mut writer = ctx.writer("features", &dir);
    writer.input(&scores_path, "synth")?;

    let graph_files = list_files(&graphs_dir, "json", &["manifest.json", "skipped.json"])?;
    let include_para = ctx.config.features.include_paraphasia_feature;

    let mut rows: Vec<(String, Vec<f64>, GraphSample)> = Vec::new();
    for file in &graph_files {
        writer.input(file, "graph")?;
        let graph = load_graph(file)?;
        let pid = graph.participant_id().to_string();
        let transcript_path = transcripts_dir.join(format!("{pid}.json"));
        require(&transcript_path, "parse")?;
        let transcript = load_transcript(&transcript_path)?;
        let gd = graph_feature_vector(&graph, &transcript).to_row().to_vec();
        let matrix = node_feature_matrix(&graph, include_para);
        let sample = GraphSample::from_graph(&graph, &matrix);
        rows.push((pid, gd, sample));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));

    // features.csv covers every parsed participant, scored or not.
    let mut features_csv = format!("participant_id,{}\n", GD_COLUMNS.join(","));
    for (pid, gd, _) in &rows {
        let values: Vec<String> = gd.iter().map(|v| fnum(*v)).collect();
        let _ = writeln!(features_csv, "{pid},{}", values.join(","));
    }
    writer.write("features.csv", features_csv.as_bytes())?;

    let ingest = ingest_scores(&scores_path, &ctx.config.scores)?;
    log::info!(target: "features",
        "scores kept={} dropped={} of {}", ingest.records.len(), ingest.dropped, ingest.total);

    let keyed: Vec<(String, (Vec<f64>, GraphSample))> = rows
        .into_iter()
        .map(|(pid, gd, sample)| (pid, (gd, sample)))
        .collect();
    let (joined, excluded) = merge_features_scores(&keyed, &ingest.records)?;
    for pid in &excluded {
        log::warn!(target: "features", "excluded from join: {pid}");
    }

    let mut table_csv = format!(
        "participant_id,{},wab_aq,fluency,sequential_commands,repetition\n",
        GD_COLUMNS.join(",")
    );
    let mut records = Vec::with_capacity(joined.len());
    for (pid, (gd, sample), scores) in joined {
        let values: Vec<String> = gd.iter().map(|v| fnum(*v)).collect();
        let _ = writeln!(
            table_csv,
            "{pid},{},{},{},{},{}",
            values.join(","),
            fnum(scores.wab_aq),
            fnum(scores.fluency),
            fnum(scores.sequential_commands),
            fnum(scores.repetition)
        );
        records.push(EvalRecord {
            participant_id: pid,
            gd,
            graph: sample,
            scores,
        });
    }
    writer.write("analysis_table.csv", table_csv.as_bytes())?;

    let dataset = EvalDataset { records };
    writer.write("dataset.json", dataset.to_json().as_bytes())?;
    writer.seal()?;
    log::info!(target: "features", "joined participants={}", dataset.records.len());
    Ok(())
}

struct AnalysisTable {
    ids: Vec<String>,
    features: Vec<Vec<f64>>,
    targets: Vec<WabScores>,
}

impl AnalysisTable {
    fn feature_column(&self, index: usize) -> Vec<f64> {
        self.features.iter().map(|row| row[index]).collect()
    }

    fn target_column(&self, target: TargetKind) -> Vec<f64> {
        self.targets.iter().map(|s| s.get(target)).collect()
    }
}

fn load_analysis_table(path: &Path) -> Result<AnalysisTable, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::MalformedInput {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut ids = Vec::new();
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::MalformedInput {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let parse_cell = |i: usize| -> Result<f64, CliError> {
            row.get(i)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| CliError::MalformedInput {
                    path: path.display().to_string(),
                    message: format!("bad numeric cell at column {i}"),
                })
        };
        ids.push(row.get(0).unwrap_or("").to_string());
        let mut gd = Vec::with_capacity(GD_COLUMNS.len());
        for i in 0..GD_COLUMNS.len() {
            gd.push(parse_cell(i + 1)?);
        }
        features.push(gd);
        let base = GD_COLUMNS.len() + 1;
        targets.push(WabScores {
            wab_aq: parse_cell(base)?,
            fluency: parse_cell(base + 1)?,
            sequential_commands: parse_cell(base + 2)?,
            repetition: parse_cell(base + 3)?,
        });
    }
    Ok(AnalysisTable {
        ids,
        features,
        targets,
    })
}

#[derive(Serialize)]
struct Hc3Report {
    target: String,
    columns: Vec<String>,
    dropped_columns: Vec<String>,
    result: Option<stats::RegressionResult>,
    /// Set when the fit is impossible for this corpus (e.g. a leverage-one
    /// observation in a small sample); the stage still completes.
    error: Option<String>,
}

#[derive(Serialize)]
struct OddsEntry {
    feature: String,
    threshold: f64,
    unit: f64,
    odds_ratio: Option<f64>,
    slope: Option<f64>,
    separation: Option<bool>,
    error: Option<String>,
}

fn run_analyze(ctx: &StageContext) -> Result<(), CliError> {
    let table_path = ctx.stage_dir("features").join("analysis_table.csv");
    require(&table_path, "features")?;
    let table = load_analysis_table(&table_path)?;

    let dir = ctx.stage_dir("analyze");
    let mut writer = ctx.writer("analyze", &dir);
    writer.input(&table_path, "features")?;

    // Spearman heatmap: 20 feature rows x 4 target columns.
    let target_names: Vec<String> = TargetKind::ALL.iter().map(|t| t.name().to_string()).collect();
    let feature_names: Vec<String> = GD_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut grid: Vec<Vec<Option<f64>>> = Vec::new();
    let mut heatmap_csv = format!("feature,{}\n", target_names.join(","));
    for (i, name) in feature_names.iter().enumerate() {
        let x = table.feature_column(i);
        let mut row = Vec::new();
        let mut cells = Vec::new();
        for target in TargetKind::ALL {
            let y = table.target_column(target);
            match stats::spearman(&x, &y) {
                Ok(rho) => {
                    row.push(Some(rho));
                    cells.push(fnum(rho));
                }
                Err(_) => {
                    row.push(None);
                    cells.push(String::new());
                }
            }
        }
        let _ = writeln!(heatmap_csv, "{name},{}", cells.join(","));
        grid.push(row);
    }
    writer.write("heatmap.csv", heatmap_csv.as_bytes())?;
    writer.write(
        "heatmap.svg",
        plots::heatmap_svg("Spearman correlation: features vs WAB scores", &feature_names, &target_names, &grid)
            .as_bytes(),
    )?;

    // LOWESS panels for the configured feature/target pairs.
    let lowess_target = parse_target(&ctx.config.analyze.lowess_target).map_err(CliError::Config)?;
    let y_all = table.target_column(lowess_target);
    for feature in &ctx.config.analyze.lowess_features {
        let index = GD_COLUMNS
            .iter()
            .position(|c| c == feature)
            .ok_or_else(|| CliError::Config(format!("unknown lowess feature `{feature}`")))?;
        let x_all = table.feature_column(index);
        let mut order: Vec<usize> = (0..x_all.len()).collect();
        order.sort_by(|&a, &b| x_all[a].partial_cmp(&x_all[b]).unwrap());
        let x_sorted: Vec<f64> = order.iter().map(|&i| x_all[i]).collect();
        let y_sorted: Vec<f64> = order.iter().map(|&i| y_all[i]).collect();
        let fit = stats::lowess(&x_sorted, &y_sorted, ctx.config.analyze.lowess_frac)
            .map_err(|e| CliError::Numeric(e.to_string()))?;

        let name = format!("lowess_{feature}__{}", lowess_target.name());
        let mut csv = format!("{feature},{},lowess_fit\n", lowess_target.name());
        for i in 0..x_sorted.len() {
            let _ = writeln!(csv, "{},{},{}", fnum(x_sorted[i]), fnum(y_sorted[i]), fnum(fit[i]));
        }
        writer.write(&format!("{name}.csv"), csv.as_bytes())?;
        let points: Vec<(f64, f64)> = x_sorted.iter().copied().zip(y_sorted.iter().copied()).collect();
        let overlay: Vec<(f64, f64)> = x_sorted.iter().copied().zip(fit.iter().copied()).collect();
        writer.write(
            &format!("{name}.svg"),
            plots::scatter_svg(
                &format!("{feature} vs {}", lowess_target.name()),
                feature,
                lowess_target.name(),
                &points,
                false,
                Some(&overlay),
            )
            .as_bytes(),
        )?;
    }

    // Multivariate OLS with HC3 errors per target. Constant columns carry
    // no information and break the design, and para_any is the exact sum
    // of the three class rates; both are dropped before fitting.
    let is_constant = |index: usize| {
        let column = table.feature_column(index);
        column.iter().all(|&v| v == column[0])
    };
    for target in TargetKind::ALL {
        let y = table.target_column(target);
        let mut dropped: Vec<String> = Vec::new();
        let mut keep: Vec<usize> = (0..GD_COLUMNS.len())
            .filter(|&i| {
                if is_constant(i) {
                    dropped.push(GD_COLUMNS[i].to_string());
                    false
                } else {
                    true
                }
            })
            .collect();
        let select = |keep: &[usize]| -> Vec<Vec<f64>> {
            table
                .features
                .iter()
                .map(|row| keep.iter().map(|&i| row[i]).collect())
                .collect()
        };
        if stats::ols_hc3(&select(&keep), &y).is_err() {
            keep.retain(|&i| {
                if GD_COLUMNS[i] == "para_any" {
                    dropped.push("para_any".to_string());
                    false
                } else {
                    true
                }
            });
        }
        let columns: Vec<String> = keep.iter().map(|&i| GD_COLUMNS[i].to_string()).collect();
        let report = match stats::ols_hc3(&select(&keep), &y) {
            Ok(result) => Hc3Report {
                target: target.name().to_string(),
                columns,
                dropped_columns: dropped,
                result: Some(result),
                error: None,
            },
            Err(e) => {
                log::warn!(target: "analyze", "hc3 fit for {} failed: {e}", target.name());
                Hc3Report {
                    target: target.name().to_string(),
                    columns,
                    dropped_columns: dropped,
                    result: None,
                    error: Some(e.to_string()),
                }
            }
        };
        writer.write(
            &format!("hc3_{}.json", target.name()),
            serde_json::to_string_pretty(&report)
                .expect("report serializes")
                .as_bytes(),
        )?;
    }

    // Univariate logistic odds per paraphasia rate feature.
    let threshold = ctx.config.analyze.logistic_threshold;
    let unit = ctx.config.analyze.logistic_unit;
    let wab = table.target_column(TargetKind::WabAq);
    let labels: Vec<bool> = wab.iter().map(|&v| v < threshold).collect();
    let mut odds = Vec::new();
    for feature in ["para_any", "para_sem", "para_phon", "para_neo"] {
        let index = GD_COLUMNS.iter().position(|c| *c == feature).unwrap();
        let x = table.feature_column(index);
        let entry = match stats::logistic_odds(&x, &labels, unit) {
            Ok(fit) => OddsEntry {
                feature: feature.to_string(),
                threshold,
                unit,
                odds_ratio: Some(fit.odds_ratio),
                slope: Some(fit.slope),
                separation: Some(fit.separation),
                error: None,
            },
            Err(e) => OddsEntry {
                feature: feature.to_string(),
                threshold,
                unit,
                odds_ratio: None,
                slope: None,
                separation: None,
                error: Some(e.to_string()),
            },
        };
        odds.push(entry);
    }
    writer.write(
        "logistic_odds.json",
        serde_json::to_string_pretty(&odds)
            .expect("odds serialize")
            .as_bytes(),
    )?;

    writer.seal()?;
    log::info!(target: "analyze", "participants={} artifacts in {}", table.ids.len(), dir.display());
    Ok(())
}

fn load_dataset(ctx: &StageContext) -> Result<(EvalDataset, PathBuf), CliError> {
    let path = ctx.stage_dir("features").join("dataset.json");
    require(&path, "features")?;
    let raw = std::fs::read_to_string(&path)?;
    let dataset = EvalDataset::from_json(&raw).map_err(|e| CliError::MalformedInput {
        path: path.display().to_string(),
        message: e,
    })?;
    Ok((dataset, path))
}

fn run_train(ctx: &StageContext) -> Result<(), CliError> {
    let (dataset, dataset_path) = load_dataset(ctx)?;
    let gnn_cfg = ctx.config.gnn.to_core().map_err(CliError::Config)?;

    let dir = ctx.stage_dir("train");
    let mut writer = ctx.writer("train", &dir);
    writer.input(&dataset_path, "features")?;
    writer.seed("gnn_seed", gnn_cfg.seed);

    for target_name in &ctx.config.eval.targets {
        let target = parse_target(target_name).map_err(CliError::Config)?;
        let pairs: Vec<(GraphSample, f64)> = dataset
            .records
            .iter()
            .map(|r| (r.graph.clone(), r.scores.get(target)))
            .collect();
        let model = train(&pairs, &gnn_cfg)?;
        writer.write(
            &format!("checkpoint_{}.json", target.name()),
            model.to_json().as_bytes(),
        )?;
        let mut loss_csv = String::from("epoch,mse\n");
        for (epoch, mse) in model.loss_history.iter().enumerate() {
            let _ = writeln!(loss_csv, "{},{}", epoch + 1, fnum(*mse));
        }
        writer.write(&format!("loss_{}.csv", target.name()), loss_csv.as_bytes())?;
        log::info!(target: "train",
            "target={} final_mse={:.6}", target.name(), model.loss_history.last().unwrap());
    }
    writer.seal()?;
    Ok(())
}

fn metrics_csv_row(report: &MetricReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        report.model,
        report.target,
        report.folds,
        fnum(report.rmse_mean),
        fnum(report.rmse_std),
        fnum(report.mae_mean),
        fnum(report.mae_std),
        fnum(report.pearson_mean),
        fnum(report.pearson_std),
        fnum(report.spearman_mean)
    )
}

const METRICS_HEADER: &str =
    "model,target,folds,rmse_mean,rmse_std,mae_mean,mae_std,pearson_mean,pearson_std,spearman_mean\n";

fn run_evaluate(ctx: &StageContext) -> Result<(), CliError> {
    let (dataset, dataset_path) = load_dataset(ctx)?;
    let ridge = ModelKind::Ridge(ctx.config.ridge.to_core());
    let gnn = ModelKind::Gnn(ctx.config.gnn.to_core().map_err(CliError::Config)?);
    let k = ctx.config.eval.k;
    let seed = ctx.config.eval.seed;

    let dir = ctx.stage_dir("evaluate");
    let mut writer = ctx.writer("evaluate", &dir);
    writer.input(&dataset_path, "features")?;
    writer.seed("eval_seed", seed);

    let mut reports = Vec::new();
    let mut csv = METRICS_HEADER.to_string();
    for target_name in &ctx.config.eval.targets {
        let target = parse_target(target_name).map_err(CliError::Config)?;
        for model in [&ridge, &gnn] {
            let outcome = cross_validate(model, &dataset, target, k, seed, None)?;
            log::info!(target: "evaluate",
                "model={} target={} rmse={:.3}+-{:.3} pearson={:.3}",
                outcome.report.model, outcome.report.target,
                outcome.report.rmse_mean, outcome.report.rmse_std,
                outcome.report.pearson_mean);
            csv.push_str(&metrics_csv_row(&outcome.report));
            reports.push(outcome.report);
        }
    }
    writer.write(
        "metrics.json",
        serde_json::to_string_pretty(&reports)
            .expect("reports serialize")
            .as_bytes(),
    )?;
    writer.write("metrics.csv", csv.as_bytes())?;
    writer.seal()?;
    Ok(())
}

fn oof_csv(predictions: &[OofPrediction]) -> String {
    let mut csv = String::from("participant_id,truth,prediction\n");
    for p in predictions {
        let _ = writeln!(csv, "{},{},{}", p.participant_id, fnum(p.truth), fnum(p.prediction));
    }
    csv
}

fn run_oof(ctx: &StageContext) -> Result<(), CliError> {
    let (dataset, dataset_path) = load_dataset(ctx)?;
    let target = parse_target(&ctx.config.eval.oof_target).map_err(CliError::Config)?;
    let k = ctx.config.eval.k;
    let seed = ctx.config.eval.seed;
    let repeats = ctx.config.eval.repeats;

    let dir = ctx.stage_dir("oof");
    let mut writer = ctx.writer("oof", &dir);
    writer.input(&dataset_path, "features")?;
    writer.seed("eval_seed", seed);

    let models = [
        ModelKind::Ridge(ctx.config.ridge.to_core()),
        ModelKind::Gnn(ctx.config.gnn.to_core().map_err(CliError::Config)?),
    ];
    #[derive(Serialize)]
    struct OofSummary {
        model: String,
        target: String,
        k: usize,
        repeats: usize,
        metrics: aphasia_core::eval::Metrics,
    }
    let mut summaries = Vec::new();
    for model in &models {
        let predictions = oof_predictions(model, &dataset, target, k, seed, repeats)?;
        let name = format!("oof_{}_{}", model.name(), target.name());
        writer.write(&format!("{name}.csv"), oof_csv(&predictions).as_bytes())?;

        let truth: Vec<f64> = predictions.iter().map(|p| p.truth).collect();
        let pred: Vec<f64> = predictions.iter().map(|p| p.prediction).collect();
        let metrics = aphasia_core::eval::compute_metrics(&truth, &pred)?;
        summaries.push(OofSummary {
            model: model.name().to_string(),
            target: target.name().to_string(),
            k,
            repeats,
            metrics,
        });

        let points: Vec<(f64, f64)> = truth.iter().copied().zip(pred.iter().copied()).collect();
        writer.write(
            &format!("pred_vs_true_{}_{}.svg", model.name(), target.name()),
            plots::scatter_svg(
                &format!("{} OOF: predicted vs true {}", model.name(), target.name()),
                &format!("true {}", target.name()),
                &format!("predicted {}", target.name()),
                &points,
                true,
                None,
            )
            .as_bytes(),
        )?;
        let mut scatter_csv = String::from("truth,prediction\n");
        for (t, p) in &points {
            let _ = writeln!(scatter_csv, "{},{}", fnum(*t), fnum(*p));
        }
        writer.write(
            &format!("pred_vs_true_{}_{}.csv", model.name(), target.name()),
            scatter_csv.as_bytes(),
        )?;

        if matches!(model, ModelKind::Gnn(_)) {
            let cases = rank_cases(&predictions, ctx.config.eval.n_each_cases);
            writer.write(
                &format!("cases_{}.json", target.name()),
                serde_json::to_string_pretty(&cases)
                    .expect("cases serialize")
                    .as_bytes(),
            )?;
            let mut cases_csv = String::from("participant_id,truth,prediction,abs_error\n");
            for row in &cases.rows {
                let _ = writeln!(
                    cases_csv,
                    "{},{},{},{}",
                    row.participant_id,
                    fnum(row.truth),
                    fnum(row.prediction),
                    fnum(row.abs_error)
                );
            }
            writer.write(&format!("cases_{}.csv", target.name()), cases_csv.as_bytes())?;
        }
        log::info!(target: "oof",
            "model={} target={} repeats={repeats} done", model.name(), target.name());
    }
    writer.write(
        "oof_summary.json",
        serde_json::to_string_pretty(&summaries)
            .expect("summaries serialize")
            .as_bytes(),
    )?;
    writer.seal()?;
    Ok(())
}

fn run_ablate(ctx: &StageContext) -> Result<(), CliError> {
    let (dataset, dataset_path) = load_dataset(ctx)?;
    let target = parse_target(&ctx.config.eval.oof_target).map_err(CliError::Config)?;
    let options = AblateOptions {
        k: ctx.config.eval.k,
        seed: ctx.config.eval.seed,
        target,
        ridge: ctx.config.ridge.to_core(),
        gnn: ctx.config.gnn.to_core().map_err(CliError::Config)?,
    };

    let dir = ctx.stage_dir("ablate");
    let mut writer = ctx.writer("ablate", &dir);
    writer.input(&dataset_path, "features")?;
    writer.seed("eval_seed", options.seed);

    // Full-model GNN baseline for the gesture-removal comparison.
    let gnn_full = cross_validate(
        &ModelKind::Gnn(options.gnn),
        &dataset,
        target,
        options.k,
        options.seed,
        None,
    )?
    .report;

    let mut outcomes = Vec::new();
    let mut csv = String::from("variant,rmse_mean,rmse_std,pearson_mean,r_squared,adjusted_r_squared\n");
    for variant in AblationVariant::ALL {
        let outcome = ablate(&dataset, variant, &options)?;
        log::info!(target: "ablate",
            "variant={} rmse={:.3} r2={:?}", outcome.variant,
            outcome.report.rmse_mean, outcome.r_squared);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            outcome.variant,
            fnum(outcome.report.rmse_mean),
            fnum(outcome.report.rmse_std),
            fnum(outcome.report.pearson_mean),
            outcome.r_squared.map(fnum).unwrap_or_default(),
            outcome.adjusted_r_squared.map(fnum).unwrap_or_default()
        );
        outcomes.push(outcome);
    }
    let _ = writeln!(
        csv,
        "GNN_FULL,{},{},{},,",
        fnum(gnn_full.rmse_mean),
        fnum(gnn_full.rmse_std),
        fnum(gnn_full.pearson_mean)
    );

    #[derive(Serialize)]
    struct AblationFile {
        target: String,
        gnn_full: MetricReport,
        variants: Vec<aphasia_core::eval::AblationOutcome>,
    }
    writer.write(
        "ablation.json",
        serde_json::to_string_pretty(&AblationFile {
            target: target.name().to_string(),
            gnn_full,
            variants: outcomes,
        })
        .expect("ablation serializes")
        .as_bytes(),
    )?;
    writer.write("ablation.csv", csv.as_bytes())?;
    writer.seal()?;
    Ok(())
}
