//! On-disk artifact formats. Every file starts with a format-version marker:
//! CSVs carry a `# faultseed-csv v1` comment line followed by the header
//! row; JSON documents carry a top-level `format_version` field.
//!
//! Identifiers written to CSV are validated at corpus load to a charset that
//! needs no quoting, so rows are plain comma joins.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{KillMatrix, KillStatus, KillVector};
use crate::metrics::SimilarityRecord;
use crate::mutant::Mutant;
use crate::Score;

pub const CSV_VERSION_LINE: &str = "# faultseed-csv v1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad JSON: {message}")]
    BadJson { path: String, message: String },
    #[error("{path}:{line}: bad CSV row: {message}")]
    BadCsv {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> ArtifactError {
    ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write atomically enough for our purposes: create parent dirs, then write.
pub fn write_file(path: &Path, contents: &str) -> Result<(), ArtifactError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn read_file(path: &Path) -> Result<String, ArtifactError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Build a CSV document: version line, header, then rows.
pub fn csv_document(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(rows.len() * 32 + 64);
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

/// Parse a CSV document produced by [`csv_document`]: skips `#` comment
/// lines, checks the header, returns the field rows.
pub fn parse_csv(
    path: &Path,
    text: &str,
    expected_header: &str,
) -> Result<Vec<Vec<String>>, ArtifactError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != expected_header {
                return Err(ArtifactError::BadCsv {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("expected header `{expected_header}`, got `{line}`"),
                });
            }
            saw_header = true;
            continue;
        }
        rows.push(line.split(',').map(str::to_string).collect());
    }
    if !saw_header {
        return Err(ArtifactError::BadCsv {
            path: path.display().to_string(),
            line: 0,
            message: "missing header".into(),
        });
    }
    Ok(rows)
}

/// Scores are written with `Display`, which round-trips f64 exactly.
pub fn fmt_score(v: Score) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// mutants.json

/// A [`Mutant`] plus its unified diff against the fixed source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MutantRecord {
    #[serde(flatten)]
    pub mutant: Mutant,
    pub diff: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct MutantsFile {
    format_version: u32,
    subject: String,
    mutants: Vec<MutantRecord>,
}

pub fn write_mutants(
    path: &Path,
    subject: &str,
    mutants: &[Mutant],
    fixed_source: &str,
) -> Result<(), ArtifactError> {
    let records: Vec<MutantRecord> = mutants
        .iter()
        .map(|m| MutantRecord {
            mutant: m.clone(),
            diff: crate::diff::unified_diff(
                fixed_source,
                &m.patched_source,
                &format!("{subject}/fixed.mini"),
                &format!("{subject}/mutants/{}", m.id),
            ),
        })
        .collect();
    let doc = MutantsFile {
        format_version: FORMAT_VERSION,
        subject: subject.to_string(),
        mutants: records,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    write_file(path, &text)
}

pub fn read_mutants(path: &Path) -> Result<Vec<Mutant>, ArtifactError> {
    let text = read_file(path)?;
    let doc: MutantsFile = serde_json::from_str(&text).map_err(|e| ArtifactError::BadJson {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(doc.mutants.into_iter().map(|r| r.mutant).collect())
}

// ---------------------------------------------------------------------------
// killmatrix.csv + killmatrix.meta.json

pub const KILLMATRIX_HEADER: &str = "mutant_id,test_id,outcome";

/// One row per (non-INVALID mutant, test): PASS or FAIL.
pub fn write_killmatrix_csv(path: &Path, matrix: &KillMatrix) -> Result<(), ArtifactError> {
    let mut rows = Vec::new();
    for vector in matrix.vectors.values() {
        if vector.status == KillStatus::Invalid {
            continue;
        }
        for test in &matrix.test_ids {
            let outcome = if vector.failing_tests.contains(test) {
                "FAIL"
            } else {
                "PASS"
            };
            rows.push(format!("{},{},{}", vector.mutant_id, test, outcome));
        }
    }
    write_file(path, &csv_document(KILLMATRIX_HEADER, &rows))
}

/// Rebuild per-mutant failing sets from killmatrix.csv (used by the
/// acceptance suite as the independent route).
pub fn read_killmatrix_csv(
    path: &Path,
) -> Result<BTreeMap<String, BTreeSet<String>>, ArtifactError> {
    let text = read_file(path)?;
    let rows = parse_csv(path, &text, KILLMATRIX_HEADER)?;
    let mut failing: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 3 {
            return Err(ArtifactError::BadCsv {
                path: path.display().to_string(),
                line: i + 3,
                message: "expected 3 fields".into(),
            });
        }
        let entry = failing.entry(row[0].clone()).or_default();
        if row[2] == "FAIL" {
            entry.insert(row[1].clone());
        }
    }
    Ok(failing)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct KillMatrixMeta {
    pub format_version: u32,
    pub subject: String,
    pub test_ids: Vec<String>,
    pub statuses: BTreeMap<String, KillStatus>,
    pub mutation_score: Option<Score>,
}

pub fn write_killmatrix_meta(path: &Path, matrix: &KillMatrix) -> Result<(), ArtifactError> {
    let meta = KillMatrixMeta {
        format_version: FORMAT_VERSION,
        subject: matrix.subject.clone(),
        test_ids: matrix.test_ids.clone(),
        statuses: matrix
            .vectors
            .iter()
            .map(|(id, v)| (id.clone(), v.status))
            .collect(),
        mutation_score: crate::harness::mutation_score(matrix).ok(),
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("serializable");
    text.push('\n');
    write_file(path, &text)
}

pub fn read_killmatrix(
    csv_path: &Path,
    meta_path: &Path,
) -> Result<KillMatrix, ArtifactError> {
    let failing = read_killmatrix_csv(csv_path)?;
    let text = read_file(meta_path)?;
    let meta: KillMatrixMeta = serde_json::from_str(&text).map_err(|e| ArtifactError::BadJson {
        path: meta_path.display().to_string(),
        message: e.to_string(),
    })?;
    let vectors: BTreeMap<String, KillVector> = meta
        .statuses
        .iter()
        .map(|(id, status)| {
            (
                id.clone(),
                KillVector {
                    mutant_id: id.clone(),
                    status: *status,
                    failing_tests: failing.get(id).cloned().unwrap_or_default(),
                },
            )
        })
        .collect();
    Ok(KillMatrix {
        subject: meta.subject,
        test_ids: meta.test_ids,
        vectors,
    })
}

// ---------------------------------------------------------------------------
// similarity.csv

pub const SIMILARITY_HEADER: &str = "mutant_id,fault_id,granularity,metric,syntactic,semantic";

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub granularity: String,
    pub record: SimilarityRecord,
}

pub fn similarity_rows(rows: &[SimilarityRow]) -> Vec<String> {
    rows.iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.record.mutant_id,
                r.record.fault_id,
                r.granularity,
                r.record.metric_name,
                fmt_score(r.record.syntactic),
                fmt_score(r.record.semantic)
            )
        })
        .collect()
}

pub fn write_similarity(path: &Path, rows: &[SimilarityRow]) -> Result<(), ArtifactError> {
    write_file(path, &csv_document(SIMILARITY_HEADER, &similarity_rows(rows)))
}

pub fn read_similarity(path: &Path) -> Result<Vec<SimilarityRow>, ArtifactError> {
    let text = read_file(path)?;
    let rows = parse_csv(path, &text, SIMILARITY_HEADER)?;
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 6 {
            return Err(ArtifactError::BadCsv {
                path: path.display().to_string(),
                line: i + 3,
                message: "expected 6 fields".into(),
            });
        }
        let parse_score = |s: &str| -> Result<Score, ArtifactError> {
            s.parse().map_err(|_| ArtifactError::BadCsv {
                path: path.display().to_string(),
                line: i + 3,
                message: format!("bad score `{s}`"),
            })
        };
        out.push(SimilarityRow {
            granularity: row[2].clone(),
            record: SimilarityRecord {
                mutant_id: row[0].clone(),
                fault_id: row[1].clone(),
                metric_name: row[3].clone(),
                syntactic: parse_score(&row[4])?,
                semantic: parse_score(&row[5])?,
            },
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// generic JSON document with a format_version field

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ArtifactError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| ArtifactError::BadJson {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_with_version_line() {
        let doc = csv_document("a,b", &["1,2".into(), "3,4".into()]);
        assert!(doc.starts_with(CSV_VERSION_LINE));
        let rows = parse_csv(Path::new("x.csv"), &doc, "a,b").unwrap();
        assert_eq!(rows, vec![vec!["1", "2"], vec!["3", "4"]]);
    }

    #[test]
    fn wrong_header_rejected() {
        let doc = csv_document("a,b", &[]);
        assert!(parse_csv(Path::new("x.csv"), &doc, "a,c").is_err());
    }

    #[test]
    fn score_formatting_roundtrips() {
        for v in [0.0, 1.0, 1.0 / 3.0, 0.6687403049764221, 1e-9] {
            let s = fmt_score(v);
            let back: Score = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{s}");
        }
    }

    #[test]
    fn killmatrix_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("killmatrix.csv");
        let mut vectors = BTreeMap::new();
        vectors.insert(
            "m1".to_string(),
            KillVector {
                mutant_id: "m1".into(),
                status: KillStatus::Killed,
                failing_tests: ["t1".to_string()].into(),
            },
        );
        vectors.insert(
            "m2".to_string(),
            KillVector {
                mutant_id: "m2".into(),
                status: KillStatus::Survived,
                failing_tests: BTreeSet::new(),
            },
        );
        let matrix = KillMatrix {
            subject: "s".into(),
            test_ids: vec!["t1".into(), "t2".into()],
            vectors,
        };
        write_killmatrix_csv(&path, &matrix).unwrap();
        let failing = read_killmatrix_csv(&path).unwrap();
        assert_eq!(failing["m1"], ["t1".to_string()].into());
        assert!(failing["m2"].is_empty());

        let meta_path = dir.path().join("killmatrix.meta.json");
        write_killmatrix_meta(&meta_path, &matrix).unwrap();
        let back = read_killmatrix(&path, &meta_path).unwrap();
        assert_eq!(back, matrix);
    }
}
