//! Syntactic similarity over token sequences (BLEU, cosine, Jaccard) and
//! semantic similarity over failing-test sets (Ochiai), plus the per-mutant
//! similarity table at file, function and patch granularity.
//!
//! All scores are generic over [`Real`]; the pipeline uses [`Score`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::changed_middle;
use crate::harness::{FaultReference, KillMatrix, KillStatus};
use crate::lexing::lex;
use crate::minilang::parse;
use crate::mutant::Mutant;
use crate::num::Real;
use crate::Score;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("similarity metrics require non-empty token sequences")]
    EmptySequence,
}

/// Modified n-gram precision with clipped counts.
fn ngram_precision<F: Real>(reference: &[String], candidate: &[String], n: usize) -> F {
    let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
    for gram in reference.windows(n) {
        *ref_counts.entry(gram).or_insert(0) += 1;
    }
    let mut cand_counts: HashMap<&[String], usize> = HashMap::new();
    for gram in candidate.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let total: usize = cand_counts.values().sum();
    let clipped: usize = cand_counts
        .iter()
        .map(|(gram, c)| (*c).min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    F::from_count(clipped) / F::from_count(total)
}

/// BLEU with the standard brevity penalty.
///
/// Geometric mean of modified n-gram precisions up to
/// `min(4, |reference|, |candidate|)`, multiplied by
/// `exp(1 - |ref|/|cand|)` when the candidate is shorter than the
/// reference. Any zero precision zeroes the score (no smoothing).
pub fn bleu<F: Real>(reference: &[String], candidate: &[String]) -> Result<F, MetricsError> {
    bleu_with_options(reference, candidate, true)
}

/// BLEU with the brevity penalty optionally disabled.
pub fn bleu_with_options<F: Real>(
    reference: &[String],
    candidate: &[String],
    brevity_penalty: bool,
) -> Result<F, MetricsError> {
    if reference.is_empty() || candidate.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    let max_n = 4.min(reference.len()).min(candidate.len());
    let mut log_sum = F::zero();
    for n in 1..=max_n {
        let p: F = ngram_precision(reference, candidate, n);
        if p == F::zero() {
            return Ok(F::zero());
        }
        log_sum = log_sum + p.ln();
    }
    let mean = (log_sum / F::from_count(max_n)).exp();
    let bp = if brevity_penalty && candidate.len() < reference.len() {
        (F::one() - F::from_count(reference.len()) / F::from_count(candidate.len())).exp()
    } else {
        F::one()
    };
    Ok(bp * mean)
}

/// Cosine of the token-frequency vectors.
pub fn cosine_sim<F: Real>(reference: &[String], candidate: &[String]) -> Result<F, MetricsError> {
    if reference.is_empty() || candidate.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    fn count(tokens: &[String]) -> BTreeMap<&String, usize> {
        let mut m = BTreeMap::new();
        for t in tokens {
            *m.entry(t).or_insert(0) += 1;
        }
        m
    }
    let a = count(reference);
    let b = count(candidate);
    let dot: F = a
        .iter()
        .filter_map(|(t, ca)| b.get(t).map(|cb| F::from_count(*ca) * F::from_count(*cb)))
        .fold(F::zero(), |acc, x| acc + x);
    let norm = |m: &BTreeMap<&String, usize>| -> F {
        m.values()
            .fold(F::zero(), |acc, c| acc + F::from_count(*c) * F::from_count(*c))
            .sqrt()
    };
    Ok(dot / (norm(&a) * norm(&b)))
}

/// Set intersection over union of the distinct tokens.
pub fn jaccard_sim<F: Real>(reference: &[String], candidate: &[String]) -> Result<F, MetricsError> {
    if reference.is_empty() || candidate.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    let a: BTreeSet<&String> = reference.iter().collect();
    let b: BTreeSet<&String> = candidate.iter().collect();
    let inter = a.intersection(&b).count();
    let union = a.union(&b).count();
    Ok(F::from_count(inter) / F::from_count(union))
}

/// Ochiai coefficient of two failing-test sets:
/// `|A ∩ B| / sqrt(|A| * |B|)`, defined as 0 when either set is empty
/// (a mutant nothing fails on resembles no fault).
pub fn ochiai<F: Real>(failing_a: &BTreeSet<String>, failing_b: &BTreeSet<String>) -> F {
    if failing_a.is_empty() || failing_b.is_empty() {
        return F::zero();
    }
    let inter = failing_a.intersection(failing_b).count();
    F::from_count(inter) / (F::from_count(failing_a.len()) * F::from_count(failing_b.len())).sqrt()
}

/// Which syntactic metric to use for mutant-vs-fault comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntacticMetric {
    Bleu,
    Cosine,
    Jaccard,
}

impl SyntacticMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            SyntacticMetric::Bleu => "bleu",
            SyntacticMetric::Cosine => "cosine",
            SyntacticMetric::Jaccard => "jaccard",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bleu" => Some(SyntacticMetric::Bleu),
            "cosine" => Some(SyntacticMetric::Cosine),
            "jaccard" => Some(SyntacticMetric::Jaccard),
            _ => None,
        }
    }

    pub fn eval<F: Real>(
        self,
        reference: &[String],
        candidate: &[String],
    ) -> Result<F, MetricsError> {
        match self {
            SyntacticMetric::Bleu => bleu(reference, candidate),
            SyntacticMetric::Cosine => cosine_sim(reference, candidate),
            SyntacticMetric::Jaccard => jaccard_sim(reference, candidate),
        }
    }
}

/// Token scope for the syntactic comparison. The fault side is always the
/// faulty version; the mutant side is the patched source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// Whole file on both sides.
    File,
    /// Only the functions changed by the reference fault; mutants outside
    /// them are excluded from the table.
    Function,
    /// Only the differing token region of each patch.
    Patch,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::File => "file",
            Granularity::Function => "function",
            Granularity::Patch => "patch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "file" => Some(Granularity::File),
            "function" => Some(Granularity::Function),
            "patch" => Some(Granularity::Patch),
            _ => None,
        }
    }

    pub fn all() -> [Granularity; 3] {
        [Granularity::File, Granularity::Function, Granularity::Patch]
    }
}

/// One mutant-vs-fault comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub mutant_id: String,
    pub fault_id: String,
    pub syntactic: Score,
    pub semantic: Score,
    pub metric_name: String,
}

fn function_tokens(source: &str, names: &BTreeSet<String>) -> Option<Vec<String>> {
    let program = parse(source).ok()?;
    let stream = lex(source).ok()?;
    let mut out = Vec::new();
    for name in names {
        let f = program.function(name)?;
        out.extend(
            stream
                .in_span(f.span.0, f.span.1)
                .iter()
                .map(|t| t.text.clone()),
        );
    }
    Some(out)
}

/// Syntactic similarity of a mutant against the reference fault at the
/// given granularity. `None` means the mutant has no comparable tokens at
/// this granularity (for example, a mutant outside the changed functions).
pub fn syntactic_score(
    fault: &FaultReference,
    mutant: &Mutant,
    faulty_source: &str,
    fixed_source: &str,
    metric: SyntacticMetric,
    granularity: Granularity,
) -> Option<Score> {
    match granularity {
        Granularity::File => {
            let cand = lex(&mutant.patched_source).ok()?.texts();
            metric.eval(&fault.faulty_tokens, &cand).ok()
        }
        Granularity::Function => {
            if !fault.changed_functions.contains(&mutant.function) {
                return None;
            }
            let reference = function_tokens(faulty_source, &fault.changed_functions)?;
            let candidate = function_tokens(&mutant.patched_source, &fault.changed_functions)?;
            metric.eval(&reference, &candidate).ok()
        }
        Granularity::Patch => {
            let fault_patch = changed_middle(&fault.fixed_tokens, &fault.faulty_tokens);
            let cand_tokens = lex(&mutant.patched_source).ok()?.texts();
            let fixed_tokens = lex(fixed_source).ok()?.texts();
            let mutant_patch = changed_middle(&fixed_tokens, &cand_tokens);
            // Two empty patches are identical by convention; one empty side
            // is maximally dissimilar. The metrics themselves reject empty
            // sequences.
            match (fault_patch.is_empty(), mutant_patch.is_empty()) {
                (true, true) => Some(1.0),
                (true, false) | (false, true) => Some(0.0),
                (false, false) => metric.eval(fault_patch, mutant_patch).ok(),
            }
        }
    }
}

/// One record per non-`INVALID` mutant covered by `matrix`, ordered by
/// mutant id. Mutants without comparable tokens at the granularity are
/// skipped (this is how the function granularity restricts the table to
/// mutants inside the changed functions).
pub fn similarity_table(
    matrix: &KillMatrix,
    fault: &FaultReference,
    mutants: &[Mutant],
    faulty_source: &str,
    fixed_source: &str,
    metric: SyntacticMetric,
    granularity: Granularity,
) -> Vec<SimilarityRecord> {
    let mut by_id: Vec<&Mutant> = mutants.iter().collect();
    by_id.sort_by(|a, b| a.id.cmp(&b.id));
    let mut records = Vec::new();
    for mutant in by_id {
        let Some(vector) = matrix.vectors.get(&mutant.id) else {
            continue;
        };
        if vector.status == KillStatus::Invalid {
            continue;
        }
        let Some(syntactic) =
            syntactic_score(fault, mutant, faulty_source, fixed_source, metric, granularity)
        else {
            continue;
        };
        let semantic: Score = ochiai(&vector.failing_tests, &fault.failing_tests);
        records.push(SimilarityRecord {
            mutant_id: mutant.id.clone(),
            fault_id: fault.fault_id.clone(),
            syntactic,
            semantic,
            metric_name: metric.as_str().to_string(),
        });
    }
    records
}
