//! Execute mutants (and the reference fault) against the test suite,
//! producing the kill matrix that all semantic analyses consume.

pub mod external;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::affix_split;
use crate::lexing::lex;
use crate::minilang::{parse, run_test, CorpusEntry, Program, TestCase};
use crate::mutant::Mutant;
use crate::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum KillStatus {
    Killed,
    Survived,
    /// Failed the validity re-check (patched source no longer parses or no
    /// longer differs from the original).
    Invalid,
}

/// Execution record for one mutant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillVector {
    pub mutant_id: String,
    pub status: KillStatus,
    pub failing_tests: BTreeSet<String>,
}

/// Mutant-by-test outcome table for one subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillMatrix {
    pub subject: String,
    /// Suite order.
    pub test_ids: Vec<String>,
    /// Keyed (and therefore canonically ordered) by mutant id.
    pub vectors: BTreeMap<String, KillVector>,
}

impl KillMatrix {
    pub fn killed_count(&self) -> usize {
        self.vectors
            .values()
            .filter(|v| v.status == KillStatus::Killed)
            .count()
    }

    pub fn killed_ids(&self) -> Vec<&str> {
        self.vectors
            .values()
            .filter(|v| v.status == KillStatus::Killed)
            .map(|v| v.mutant_id.as_str())
            .collect()
    }

    /// Restrict to the given mutant ids (used for per-engine views).
    pub fn restricted_to(&self, ids: &BTreeSet<String>) -> KillMatrix {
        KillMatrix {
            subject: self.subject.clone(),
            test_ids: self.test_ids.clone(),
            vectors: self
                .vectors
                .iter()
                .filter(|(id, _)| ids.contains(*id))
                .map(|(id, v)| (id.clone(), v.clone()))
                .collect(),
        }
    }
}

/// A reference fault: its observable failure signature and its token-level
/// patch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultReference {
    pub fault_id: String,
    pub failing_tests: BTreeSet<String>,
    /// Full-file token texts of the faulty version.
    pub faulty_tokens: Vec<String>,
    /// Full-file token texts of the fixed version.
    pub fixed_tokens: Vec<String>,
    pub changed_functions: BTreeSet<String>,
    /// Byte range of the changed region in the fixed source (zero-width for
    /// pure insertions on the faulty side).
    pub fixed_change_span: (usize, usize),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("corpus entry {entry}: {side} version does not parse: {message}")]
    UnparsableFixture {
        entry: String,
        side: &'static str,
        message: String,
    },
    #[error("corpus entry {entry}: fixed and faulty versions are identical")]
    IdenticalVersions { entry: String },
    #[error("corpus entry {entry}: test `{test}` fails on the fixed version")]
    FixedVersionFails { entry: String, test: String },
    #[error("corpus entry {entry}: no test fails on the faulty version")]
    FaultNotTriggered { entry: String },
    #[error("kill matrix has no valid mutants")]
    EmptyMatrix,
}

fn failing_set(program: &Program, tests: &[TestCase], step_limit: u64) -> BTreeSet<String> {
    tests
        .iter()
        .filter(|t| match run_test(program, t, step_limit) {
            Ok(outcome) => outcome.is_failure(),
            // A test whose target function vanished cannot pass.
            Err(_) => true,
        })
        .map(|t| t.id.clone())
        .collect()
}

/// Run every mutant against every test.
///
/// Each mutant's patched source is re-parsed first; mutants failing that
/// validity re-check come back `INVALID` and are never executed. The result
/// is independent of `workers` (vectors are keyed by mutant id).
pub fn execute_all(
    program: &Program,
    mutants: &[Mutant],
    tests: &[TestCase],
    step_limit: u64,
    workers: usize,
) -> KillMatrix {
    assert!(workers >= 1, "workers must be at least 1");
    let original_tokens = lex(&program.source_text).expect("program lexes").texts();

    let run_one = |m: &Mutant| -> (String, KillVector) {
        let valid = parse(&m.patched_source)
            .ok()
            .filter(|_| {
                lex(&m.patched_source)
                    .map(|s| s.texts() != original_tokens)
                    .unwrap_or(false)
            });
        let vector = match valid {
            None => KillVector {
                mutant_id: m.id.clone(),
                status: KillStatus::Invalid,
                failing_tests: BTreeSet::new(),
            },
            Some(mutant_program) => {
                let failing = failing_set(&mutant_program, tests, step_limit);
                KillVector {
                    mutant_id: m.id.clone(),
                    status: if failing.is_empty() {
                        KillStatus::Survived
                    } else {
                        KillStatus::Killed
                    },
                    failing_tests: failing,
                }
            }
        };
        (m.id.clone(), vector)
    };

    let vectors: BTreeMap<String, KillVector> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool");
        pool.install(|| mutants.par_iter().map(run_one).collect())
    } else {
        mutants.iter().map(run_one).collect()
    };

    KillMatrix {
        subject: String::new(),
        test_ids: tests.iter().map(|t| t.id.clone()).collect(),
        vectors,
    }
}

/// Execute the reference fault of a corpus entry: record which tests fail on
/// the faulty version, assert the fixed version is green, and compute the
/// token-level patch.
pub fn execute_reference(
    entry: &CorpusEntry,
    step_limit: u64,
) -> Result<FaultReference, HarnessError> {
    let parse_side = |side: &'static str, src: &str| {
        parse(src).map_err(|e| HarnessError::UnparsableFixture {
            entry: entry.name.clone(),
            side,
            message: e.to_string(),
        })
    };
    let fixed = parse_side("fixed", &entry.fixed_source)?;
    let faulty = parse_side("faulty", &entry.faulty_source)?;

    let fixed_tokens = lex(&entry.fixed_source).expect("lexes").texts();
    let faulty_tokens = lex(&entry.faulty_source).expect("lexes").texts();
    if fixed_tokens == faulty_tokens {
        return Err(HarnessError::IdenticalVersions {
            entry: entry.name.clone(),
        });
    }

    for t in &entry.tests {
        let pass = matches!(
            run_test(&fixed, t, step_limit),
            Ok(outcome) if !outcome.is_failure()
        );
        if !pass {
            return Err(HarnessError::FixedVersionFails {
                entry: entry.name.clone(),
                test: t.id.clone(),
            });
        }
    }

    let failing_tests = failing_set(&faulty, &entry.tests, step_limit);
    if failing_tests.is_empty() {
        return Err(HarnessError::FaultNotTriggered {
            entry: entry.name.clone(),
        });
    }

    // Functions whose token sequences differ between the versions (or that
    // exist on only one side).
    let side_tokens = |program: &Program, source: &str| -> BTreeMap<String, Vec<String>> {
        let stream = lex(source).expect("lexes");
        program
            .functions
            .iter()
            .map(|f| {
                let toks = stream
                    .in_span(f.span.0, f.span.1)
                    .iter()
                    .map(|t| t.text.clone())
                    .collect();
                (f.name.clone(), toks)
            })
            .collect()
    };
    let fixed_fns = side_tokens(&fixed, &entry.fixed_source);
    let faulty_fns = side_tokens(&faulty, &entry.faulty_source);
    let mut changed_functions = BTreeSet::new();
    for (name, toks) in &fixed_fns {
        if faulty_fns.get(name) != Some(toks) {
            changed_functions.insert(name.clone());
        }
    }
    for name in faulty_fns.keys() {
        if !fixed_fns.contains_key(name) {
            changed_functions.insert(name.clone());
        }
    }

    // Changed byte range in the fixed source, from the token-level affix
    // split.
    let (p, s) = affix_split(&fixed_tokens, &faulty_tokens);
    let stream = lex(&entry.fixed_source).expect("lexes");
    let fixed_change_span = if p + s >= stream.tokens.len() {
        // Pure insertion on the faulty side: anchor at the insertion point.
        let at = stream
            .tokens
            .get(p)
            .map(|t| t.span.0)
            .unwrap_or(entry.fixed_source.len());
        (at, at)
    } else {
        (
            stream.tokens[p].span.0,
            stream.tokens[stream.tokens.len() - 1 - s].span.1,
        )
    };

    Ok(FaultReference {
        fault_id: format!("{}.fault", entry.name),
        failing_tests,
        faulty_tokens,
        fixed_tokens,
        changed_functions,
        fixed_change_span,
    })
}

/// Killed over killed-plus-survived; `INVALID` mutants are excluded from
/// both sides of the ratio.
pub fn mutation_score(matrix: &KillMatrix) -> Result<Score, HarnessError> {
    let killed = matrix.killed_count();
    let survived = matrix
        .vectors
        .values()
        .filter(|v| v.status == KillStatus::Survived)
        .count();
    if killed + survived == 0 {
        return Err(HarnessError::EmptyMatrix);
    }
    Ok(killed as Score / (killed + survived) as Score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::grammar::generate_grammar_mutants;
    use crate::minilang::{Corpus, Expected, DEFAULT_STEP_LIMIT};

    fn entry(name: &str) -> CorpusEntry {
        Corpus::bundled().get(name).unwrap().clone()
    }

    #[test]
    fn reference_fault_has_failing_tests_and_green_fixed() {
        let fault = execute_reference(&entry("gcd"), DEFAULT_STEP_LIMIT).unwrap();
        assert!(!fault.failing_tests.is_empty());
        assert_eq!(fault.changed_functions.len(), 1);
        assert!(fault.changed_functions.contains("gcd"));
    }

    #[test]
    fn two_function_fault_reports_both() {
        let fault = execute_reference(&entry("linear"), DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(fault.changed_functions.len(), 2);
        assert!(fault.changed_functions.contains("scale"));
        assert!(fault.changed_functions.contains("eval"));
    }

    #[test]
    fn identical_versions_rejected() {
        let mut e = entry("gcd");
        e.faulty_source = e.fixed_source.clone();
        assert!(matches!(
            execute_reference(&e, DEFAULT_STEP_LIMIT),
            Err(HarnessError::IdenticalVersions { .. })
        ));
    }

    #[test]
    fn failing_fixed_test_is_a_fixture_bug() {
        let mut e = entry("gcd");
        e.tests[0].expected = Expected::Value(999);
        assert!(matches!(
            execute_reference(&e, DEFAULT_STEP_LIMIT),
            Err(HarnessError::FixedVersionFails { .. })
        ));
    }

    #[test]
    fn return_zero_mutant_is_killed_by_gcd_test() {
        let e = entry("gcd");
        let program = parse(&e.fixed_source).unwrap();
        let mutants = generate_grammar_mutants(&program);
        let matrix = execute_all(&program, &mutants, &e.tests, DEFAULT_STEP_LIMIT, 1);
        let ret = mutants
            .iter()
            .find(|m| m.operator_id == "return_value_zero")
            .unwrap();
        let v = &matrix.vectors[&ret.id];
        assert_eq!(v.status, KillStatus::Killed);
        assert!(v.failing_tests.contains("t01"), "gcd(12,8)=4 must fail");
    }

    #[test]
    fn corrupted_patched_source_is_invalid() {
        let e = entry("gcd");
        let program = parse(&e.fixed_source).unwrap();
        let mut mutants = generate_grammar_mutants(&program);
        mutants[0].patched_source = "fn gcd(a, b){ return".to_string();
        let matrix = execute_all(&program, &mutants, &e.tests, DEFAULT_STEP_LIMIT, 1);
        assert_eq!(matrix.vectors[&mutants[0].id].status, KillStatus::Invalid);
    }

    #[test]
    fn killed_iff_failing_nonempty() {
        let e = entry("isprime");
        let program = parse(&e.fixed_source).unwrap();
        let mutants = generate_grammar_mutants(&program);
        let matrix = execute_all(&program, &mutants, &e.tests, DEFAULT_STEP_LIMIT, 1);
        for v in matrix.vectors.values() {
            match v.status {
                KillStatus::Killed => assert!(!v.failing_tests.is_empty()),
                KillStatus::Survived | KillStatus::Invalid => {
                    assert!(v.failing_tests.is_empty())
                }
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_matrix() {
        let e = entry("triangle");
        let program = parse(&e.fixed_source).unwrap();
        let mutants = generate_grammar_mutants(&program);
        let one = execute_all(&program, &mutants, &e.tests, DEFAULT_STEP_LIMIT, 1);
        let four = execute_all(&program, &mutants, &e.tests, DEFAULT_STEP_LIMIT, 4);
        assert_eq!(one, four);
    }

    #[test]
    fn mutation_score_excludes_invalid() {
        let mk = |id: &str, status: KillStatus, failing: &[&str]| KillVector {
            mutant_id: id.to_string(),
            status,
            failing_tests: failing.iter().map(|s| s.to_string()).collect(),
        };
        let mut vectors = BTreeMap::new();
        vectors.insert("m1".into(), mk("m1", KillStatus::Killed, &["t1"]));
        vectors.insert("m2".into(), mk("m2", KillStatus::Killed, &["t2"]));
        vectors.insert("m3".into(), mk("m3", KillStatus::Survived, &[]));
        vectors.insert("m4".into(), mk("m4", KillStatus::Invalid, &[]));
        let matrix = KillMatrix {
            subject: "s".into(),
            test_ids: vec!["t1".into(), "t2".into()],
            vectors,
        };
        let score = mutation_score(&matrix).unwrap();
        assert!((score - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_invalid_matrix_is_empty() {
        let matrix = KillMatrix {
            subject: "s".into(),
            test_ids: vec![],
            vectors: BTreeMap::new(),
        };
        assert!(matches!(
            mutation_score(&matrix),
            Err(HarnessError::EmptyMatrix)
        ));
    }

    #[test]
    fn equivalent_mutant_survives() {
        // In isprime, `n == 2 || n == 3` -> `n == 2 && n == 3` is equivalent
        // (the loop handles 2 and 3 correctly anyway).
        let e = entry("isprime");
        let program = parse(&e.fixed_source).unwrap();
        let mutants = generate_grammar_mutants(&program);
        let logical = mutants
            .iter()
            .find(|m| m.operator_id == "logical_replacement")
            .unwrap();
        let matrix = execute_all(
            &program,
            std::slice::from_ref(logical),
            &e.tests,
            DEFAULT_STEP_LIMIT,
            1,
        );
        assert_eq!(matrix.vectors[&logical.id].status, KillStatus::Survived);
    }
}
