//! Kill-matrix analytics: quartile partitioning by syntactic similarity,
//! fault resemblance, syntactic/semantic correlation, subsumption structure
//! and same-location sensitivity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{KillMatrix, KillStatus};
use crate::metrics::SimilarityRecord;
use crate::stats::{kendall_tau_a_with_p, pearson_r_with_p, StatsError};
use crate::Score;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("quartile partitioning needs at least 4 records, got {0}")]
    TooFewMutants(usize),
    #[error("correlation needs at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("matrix has no killed mutants")]
    NoKilledMutants,
}

/// Mutant ids split into four bins of ascending syntactic similarity.
/// `q1` holds the most dissimilar mutants, `q4` the most similar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuartilePartition {
    pub q1: Vec<String>,
    pub q2: Vec<String>,
    pub q3: Vec<String>,
    pub q4: Vec<String>,
}

impl QuartilePartition {
    pub fn quartiles(&self) -> [&Vec<String>; 4] {
        [&self.q1, &self.q2, &self.q3, &self.q4]
    }

    pub fn quartile_of(&self, mutant_id: &str) -> Option<usize> {
        self.quartiles()
            .iter()
            .position(|q| q.iter().any(|id| id == mutant_id))
    }
}

/// Stable sort by (syntactic, mutant id), then split into four near-equal
/// parts; any remainder goes to the lower quartiles first.
pub fn quartiles(records: &[SimilarityRecord]) -> Result<QuartilePartition, AnalysisError> {
    let n = records.len();
    if n < 4 {
        return Err(AnalysisError::TooFewMutants(n));
    }
    let mut sorted: Vec<&SimilarityRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.syntactic
            .total_cmp(&b.syntactic)
            .then_with(|| a.mutant_id.cmp(&b.mutant_id))
    });
    let base = n / 4;
    let remainder = n % 4;
    let mut sizes = [base; 4];
    for size in sizes.iter_mut().take(remainder) {
        *size += 1;
    }
    let mut iter = sorted.into_iter().map(|r| r.mutant_id.clone());
    let mut take = |count: usize| -> Vec<String> { iter.by_ref().take(count).collect() };
    Ok(QuartilePartition {
        q1: take(sizes[0]),
        q2: take(sizes[1]),
        q3: take(sizes[2]),
        q4: take(sizes[3]),
    })
}

/// Per-fault resemblance verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultResemblance {
    pub fault_id: String,
    pub mutant_count: usize,
    /// Some mutant has Ochiai exactly 1 against the fault.
    pub resembled: bool,
    /// Some mutant is syntactically identical at patch granularity.
    pub exact_match: bool,
    /// Quartile-wise resemblance flags (q1..q4).
    pub per_quartile: [bool; 4],
    /// Fraction of mutants that resemble the fault.
    pub resembling_ratio: Score,
    /// Fraction of each quartile's mutants that resemble the fault.
    pub per_quartile_ratio: [Score; 4],
}

/// Evaluate resemblance of one fault from its similarity records (at the
/// analysis granularity) and the quartile partition built from them.
/// `patch_syntactic` carries patch-granularity syntactic scores used for
/// the exact-match column.
pub fn resemblance(
    records: &[SimilarityRecord],
    partition: &QuartilePartition,
    patch_syntactic: &BTreeMap<String, Score>,
) -> FaultResemblance {
    let fault_id = records
        .first()
        .map(|r| r.fault_id.clone())
        .unwrap_or_default();
    let semantic: BTreeMap<&str, Score> = records
        .iter()
        .map(|r| (r.mutant_id.as_str(), r.semantic))
        .collect();
    let resembles = |id: &str| semantic.get(id).copied() == Some(1.0);

    let resembled = records.iter().any(|r| r.semantic == 1.0);
    let exact_match = records
        .iter()
        .any(|r| patch_syntactic.get(&r.mutant_id).copied() == Some(1.0));
    let mut per_quartile = [false; 4];
    let mut per_quartile_ratio = [0.0; 4];
    for (i, q) in partition.quartiles().iter().enumerate() {
        let hits = q.iter().filter(|id| resembles(id)).count();
        per_quartile[i] = hits > 0;
        per_quartile_ratio[i] = if q.is_empty() {
            0.0
        } else {
            hits as Score / q.len() as Score
        };
    }
    let hits = records.iter().filter(|r| r.semantic == 1.0).count();
    FaultResemblance {
        fault_id,
        mutant_count: records.len(),
        resembled,
        exact_match,
        per_quartile,
        resembling_ratio: if records.is_empty() {
            0.0
        } else {
            hits as Score / records.len() as Score
        },
        per_quartile_ratio,
    }
}

/// Aggregate of [`FaultResemblance`] rows across faults (one row per tool in
/// the summary table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResemblanceSummary {
    pub faults: usize,
    /// Percentage of faults with at least one resembling mutant.
    pub pct_resembled: Score,
    pub pct_exact_match: Score,
    pub pct_per_quartile: [Score; 4],
    /// Mean over faults of the resembling-mutant ratio (in percent).
    pub mean_ratio: Score,
    pub mean_ratio_per_quartile: [Score; 4],
}

pub fn summarize_resemblance(rows: &[FaultResemblance]) -> ResemblanceSummary {
    let n = rows.len().max(1) as Score;
    let pct = |count: usize| 100.0 * count as Score / n;
    let mut per_q = [0.0; 4];
    let mut ratio_q = [0.0; 4];
    for i in 0..4 {
        per_q[i] = pct(rows.iter().filter(|r| r.per_quartile[i]).count());
        ratio_q[i] = 100.0 * rows.iter().map(|r| r.per_quartile_ratio[i]).sum::<Score>() / n;
    }
    ResemblanceSummary {
        faults: rows.len(),
        pct_resembled: pct(rows.iter().filter(|r| r.resembled).count()),
        pct_exact_match: pct(rows.iter().filter(|r| r.exact_match).count()),
        pct_per_quartile: per_q,
        mean_ratio: 100.0 * rows.iter().map(|r| r.resembling_ratio).sum::<Score>() / n,
        mean_ratio_per_quartile: ratio_q,
    }
}

/// Correlation between syntactic and semantic similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub kendall_tau_a: Score,
    pub tau_p_value: Score,
    /// `None` when a coordinate has zero variance (r undefined, not 0).
    pub pearson: Option<PearsonResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: Score,
    pub p_value: Score,
}

pub fn correlations(records: &[SimilarityRecord]) -> Result<Correlations, AnalysisError> {
    if records.len() < 3 {
        return Err(AnalysisError::TooFewRecords {
            needed: 3,
            got: records.len(),
        });
    }
    let pairs: Vec<(Score, Score)> = records.iter().map(|r| (r.syntactic, r.semantic)).collect();
    let (tau, tau_p) = kendall_tau_a_with_p(&pairs).expect("n >= 3");
    let pearson = match pearson_r_with_p(&pairs) {
        Ok((r, p)) => Some(PearsonResult { r, p_value: p }),
        Err(StatsError::DegenerateVariance) => None,
        Err(e) => unreachable!("pearson on n >= 3: {e}"),
    };
    Ok(Correlations {
        kendall_tau_a: tau,
        tau_p_value: tau_p,
        pearson,
    })
}

/// Groups of killed mutants with identical failing-test sets, plus the
/// strict-subsumption edges between the groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsumptionGraph {
    /// Each group lists its mutant ids (sorted); groups are ordered by their
    /// smallest id.
    pub groups: Vec<Vec<String>>,
    /// `(i, j)` means groups[i] subsumes groups[j]: every test killing i's
    /// mutants also kills j's, and the failing sets differ.
    pub edges: Vec<(usize, usize)>,
    /// Indices of groups with no incoming subsumption edge.
    pub subsuming_groups: Vec<usize>,
}

impl SubsumptionGraph {
    pub fn subsuming_mutants(&self) -> BTreeSet<&str> {
        self.subsuming_groups
            .iter()
            .flat_map(|i| self.groups[*i].iter().map(String::as_str))
            .collect()
    }
}

/// Group killed mutants by identical failing sets and relate the groups by
/// strict subset inclusion of those sets.
pub fn subsumption(matrix: &KillMatrix) -> Result<SubsumptionGraph, AnalysisError> {
    let mut by_failing: BTreeMap<&BTreeSet<String>, Vec<String>> = BTreeMap::new();
    for v in matrix.vectors.values() {
        if v.status == KillStatus::Killed {
            by_failing
                .entry(&v.failing_tests)
                .or_default()
                .push(v.mutant_id.clone());
        }
    }
    if by_failing.is_empty() {
        return Err(AnalysisError::NoKilledMutants);
    }
    let mut grouped: Vec<(&BTreeSet<String>, Vec<String>)> = by_failing
        .into_iter()
        .map(|(failing, mut ids)| {
            ids.sort();
            (failing, ids)
        })
        .collect();
    grouped.sort_by(|a, b| a.1[0].cmp(&b.1[0]));

    let mut edges = Vec::new();
    for (i, (fa, _)) in grouped.iter().enumerate() {
        for (j, (fb, _)) in grouped.iter().enumerate() {
            if i != j && fa.is_subset(fb) && fa != fb {
                edges.push((i, j));
            }
        }
    }
    let subsumed: BTreeSet<usize> = edges.iter().map(|(_, j)| *j).collect();
    let subsuming_groups = (0..grouped.len()).filter(|i| !subsumed.contains(i)).collect();
    Ok(SubsumptionGraph {
        groups: grouped.into_iter().map(|(_, ids)| ids).collect(),
        edges,
        subsuming_groups,
    })
}

/// Cross-tool contribution table: for each ordered pair (a, b), the share of
/// subsuming groups that contain a b-mutant but no a-mutant, relative to the
/// subsuming groups containing an a-mutant. `None` when tool a contributes
/// no subsuming group at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRow {
    pub base_tool: String,
    pub added_tool: String,
    pub contribution: Option<Score>,
}

pub fn cross_tool_subsumption(
    matrices: &BTreeMap<String, KillMatrix>,
) -> Result<(SubsumptionGraph, Vec<ContributionRow>), AnalysisError> {
    let mut pooled = KillMatrix {
        subject: String::new(),
        test_ids: Vec::new(),
        vectors: BTreeMap::new(),
    };
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (tool, matrix) in matrices {
        if pooled.test_ids.is_empty() {
            pooled.test_ids = matrix.test_ids.clone();
        }
        assert_eq!(
            pooled.test_ids, matrix.test_ids,
            "matrices must share the test universe"
        );
        for (id, v) in &matrix.vectors {
            owner.insert(id.as_str(), tool.as_str());
            pooled.vectors.insert(id.clone(), v.clone());
        }
    }
    let graph = subsumption(&pooled)?;

    let group_tools: Vec<BTreeSet<&str>> = graph
        .groups
        .iter()
        .map(|g| g.iter().filter_map(|id| owner.get(id.as_str()).copied()).collect())
        .collect();
    let subsuming: Vec<&BTreeSet<&str>> = graph
        .subsuming_groups
        .iter()
        .map(|i| &group_tools[*i])
        .collect();

    let mut rows = Vec::new();
    for base in matrices.keys() {
        let base_count = subsuming
            .iter()
            .filter(|tools| tools.contains(base.as_str()))
            .count();
        for added in matrices.keys() {
            if base == added {
                continue;
            }
            let extra = subsuming
                .iter()
                .filter(|tools| tools.contains(added.as_str()) && !tools.contains(base.as_str()))
                .count();
            rows.push(ContributionRow {
                base_tool: base.clone(),
                added_tool: added.clone(),
                contribution: (base_count > 0).then(|| extra as Score / base_count as Score),
            });
        }
    }
    Ok((graph, rows))
}

/// Pairwise similarity deltas of mutants sharing a location, split into
/// patch locations (inside the reference fix) and all other locations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationSensitivity {
    /// (|delta syntactic|, |delta semantic|) per unordered same-location pair.
    pub patch_location_pairs: Vec<(Score, Score)>,
    pub other_location_pairs: Vec<(Score, Score)>,
}

/// `locations` maps mutant id to (function, span); `is_patch_location`
/// decides the bucket from the fault's changed region.
pub fn location_sensitivity(
    records: &[SimilarityRecord],
    locations: &BTreeMap<String, (String, (usize, usize))>,
    is_patch_location: impl Fn(&str, (usize, usize)) -> bool,
) -> LocationSensitivity {
    let mut by_location: BTreeMap<(&String, (usize, usize)), Vec<&SimilarityRecord>> =
        BTreeMap::new();
    for r in records {
        if let Some((function, span)) = locations.get(&r.mutant_id) {
            by_location.entry((function, *span)).or_default().push(r);
        }
    }
    let mut out = LocationSensitivity::default();
    for ((function, span), rs) in by_location {
        if rs.len() < 2 {
            continue;
        }
        let bucket = if is_patch_location(function, span) {
            &mut out.patch_location_pairs
        } else {
            &mut out.other_location_pairs
        };
        for i in 0..rs.len() {
            for j in (i + 1)..rs.len() {
                bucket.push((
                    (rs[i].syntactic - rs[j].syntactic).abs(),
                    (rs[i].semantic - rs[j].semantic).abs(),
                ));
            }
        }
    }
    out
}
