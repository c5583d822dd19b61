//! WAB score-sheet ingestion and feature/score merging.

use crate::config::ScoreColumns;
use crate::error::CliError;
use aphasia_core::eval::WabScores;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct WabRecordRow {
    pub participant_id: String,
    pub scores: WabScores,
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub records: Vec<WabRecordRow>,
    pub dropped: usize,
    pub total: usize,
}

fn parse_score(cell: &str) -> Option<f64> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return None;
    }
    match trimmed.to_ascii_lowercase().as_str() {
        "unknown" | "na" | "n/a" | "null" | "none" | "nan" => return None,
        _ => {}
    }
    trimmed.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn validate_range(
    row: usize,
    column: &str,
    value: f64,
    min: f64,
    max: f64,
) -> Result<(), CliError> {
    if value < min || value > max {
        return Err(CliError::ScoreOutOfRange {
            row,
            column: column.to_string(),
            value,
            min,
            max,
        });
    }
    Ok(())
}

/// Read the score sheet, dropping rows with empty/unknown/non-numeric
/// score cells (counted, logged by the caller) and erroring on
/// out-of-range values. The column mapping handles real exports whose
/// headers differ from the frozen schema.
pub fn ingest_scores(path: &Path, columns: &ScoreColumns) -> Result<IngestOutcome, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::MalformedInput {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::MalformedInput {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();

    let find = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::MissingColumn {
                column: name.to_string(),
            })
    };
    let id_col = find(&columns.participant_id)?;
    let aq_col = find(&columns.wab_aq)?;
    let fluency_col = find(&columns.fluency)?;
    let commands_col = find(&columns.sequential_commands)?;
    let repetition_col = find(&columns.repetition)?;

    let mut records = Vec::new();
    let mut dropped = 0usize;
    let mut total = 0usize;
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::MalformedInput {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        total += 1;
        let row_number = index + 2; // 1-based, after the header line
        let id = row.get(id_col).unwrap_or("").trim().to_string();
        let cells = [
            row.get(aq_col).unwrap_or(""),
            row.get(fluency_col).unwrap_or(""),
            row.get(commands_col).unwrap_or(""),
            row.get(repetition_col).unwrap_or(""),
        ];
        let parsed: Vec<Option<f64>> = cells.iter().map(|c| parse_score(c)).collect();
        if id.is_empty() || parsed.iter().any(Option::is_none) {
            dropped += 1;
            continue;
        }
        let wab_aq = parsed[0].unwrap();
        let fluency = parsed[1].unwrap();
        let sequential_commands = parsed[2].unwrap();
        let repetition = parsed[3].unwrap();
        validate_range(row_number, &columns.wab_aq, wab_aq, 0.0, 100.0)?;
        validate_range(row_number, &columns.fluency, fluency, 0.0, 10.0)?;
        records.push(WabRecordRow {
            participant_id: id,
            scores: WabScores {
                wab_aq,
                fluency,
                sequential_commands,
                repetition,
            },
        });
    }

    if records.is_empty() {
        return Err(CliError::EmptyIngest);
    }
    Ok(IngestOutcome {
        records,
        dropped,
        total,
    })
}

/// Inner-join feature rows with score records on participant id.
/// Participants present on only one side are returned for logging; a
/// duplicate id on either side or an empty join is an error.
pub fn merge_features_scores<T: Clone>(
    features: &[(String, T)],
    scores: &[WabRecordRow],
) -> Result<(Vec<(String, T, WabScores)>, Vec<String>), CliError> {
    let mut score_map: BTreeMap<&str, &WabScores> = BTreeMap::new();
    for record in scores {
        if score_map
            .insert(record.participant_id.as_str(), &record.scores)
            .is_some()
        {
            return Err(CliError::DuplicateKey {
                id: record.participant_id.clone(),
                context: "score sheet".to_string(),
            });
        }
    }
    let mut seen_features: BTreeMap<&str, ()> = BTreeMap::new();
    let mut joined = Vec::new();
    let mut excluded = Vec::new();
    for (id, value) in features {
        if seen_features.insert(id.as_str(), ()).is_some() {
            return Err(CliError::DuplicateKey {
                id: id.clone(),
                context: "feature table".to_string(),
            });
        }
        match score_map.remove(id.as_str()) {
            Some(scores) => joined.push((id.clone(), value.clone(), *scores)),
            None => excluded.push(id.clone()),
        }
    }
    // Score rows never matched by a feature row are also excluded.
    excluded.extend(score_map.keys().map(|s| s.to_string()));

    if joined.is_empty() {
        return Err(CliError::EmptyJoin);
    }
    Ok((joined, excluded))
}
