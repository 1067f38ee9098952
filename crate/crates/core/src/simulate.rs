//! Dynamic tool comparison: minimal killing test suites, the objective
//! cross-kill grid, and the seeded cost-effectiveness simulation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{FaultReference, KillMatrix, KillStatus};
use crate::seeds::derive_seed;
use crate::Score;

pub use crate::stats::a12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimulateError {
    #[error("matrix has no killed mutants")]
    NoKilledMutants,
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub repetitions: usize,
    pub rng_seed: u64,
    /// Ascending percentages of baseline mutants analysed, ending at 100.
    pub checkpoints: Vec<u8>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            repetitions: 100,
            rng_seed: 42,
            checkpoints: vec![10, 20, 50, 75, 100],
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.repetitions < 1 {
            return Err(SimulateError::BadConfig("repetitions must be >= 1".into()));
        }
        if self.checkpoints.is_empty() || *self.checkpoints.last().unwrap() != 100 {
            return Err(SimulateError::BadConfig(
                "checkpoints must end at 100".into(),
            ));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimulateError::BadConfig(
                "checkpoints must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Greedy set cover over the kill matrix: repeatedly pick the test killing
/// the most not-yet-killed mutants (ties broken by test id ascending) until
/// every killable mutant is covered.
pub fn minimal_killing_suite(matrix: &KillMatrix) -> Result<BTreeSet<String>, SimulateError> {
    let mut remaining: Vec<&BTreeSet<String>> = matrix
        .vectors
        .values()
        .filter(|v| v.status == KillStatus::Killed)
        .map(|v| &v.failing_tests)
        .collect();
    if remaining.is_empty() {
        return Err(SimulateError::NoKilledMutants);
    }
    let mut suite = BTreeSet::new();
    while !remaining.is_empty() {
        let best = matrix
            .test_ids
            .iter()
            .map(|t| (remaining.iter().filter(|f| f.contains(t)).count(), t))
            .max_by(|(ca, ta), (cb, tb)| ca.cmp(cb).then_with(|| tb.cmp(ta)))
            .map(|(count, t)| (count, t.clone()))
            .expect("non-empty suite");
        debug_assert!(best.0 > 0, "killable mutant must have a killing test");
        suite.insert(best.1.clone());
        remaining.retain(|f| !f.contains(&best.1));
    }
    Ok(suite)
}

/// Fraction of `matrix`'s killable mutants that `suite` kills.
pub fn killed_fraction(matrix: &KillMatrix, suite: &BTreeSet<String>) -> Option<Score> {
    let killable: Vec<&BTreeSet<String>> = matrix
        .vectors
        .values()
        .filter(|v| v.status == KillStatus::Killed)
        .map(|v| &v.failing_tests)
        .collect();
    if killable.is_empty() {
        return None;
    }
    let killed = killable
        .iter()
        .filter(|f| f.iter().any(|t| suite.contains(t)))
        .count();
    Some(killed as Score / killable.len() as Score)
}

/// One cell of the objective grid: the suite built for `baseline`'s mutants
/// scored against `target`'s mutants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveCell {
    pub baseline: String,
    pub target: String,
    /// `None` when the target has no killable mutants.
    pub fraction: Option<Score>,
}

/// Objective comparison for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectObjective {
    pub subject: String,
    pub suites: BTreeMap<String, BTreeSet<String>>,
    pub grid: Vec<ObjectiveCell>,
    /// Whether each baseline suite intersects the fault's failing tests.
    pub fault_detected: BTreeMap<String, bool>,
}

/// Build each tool's minimal killing suite and score it against every
/// tool's mutants, plus fault detection. Tools without killed mutants are
/// skipped as baselines.
pub fn objective_comparison(
    subject: &str,
    matrices: &BTreeMap<String, KillMatrix>,
    fault: &FaultReference,
) -> SubjectObjective {
    let mut suites = BTreeMap::new();
    let mut fault_detected = BTreeMap::new();
    for (tool, matrix) in matrices {
        if let Ok(suite) = minimal_killing_suite(matrix) {
            fault_detected.insert(
                tool.clone(),
                suite.iter().any(|t| fault.failing_tests.contains(t)),
            );
            suites.insert(tool.clone(), suite);
        }
    }
    let mut grid = Vec::new();
    for (baseline, suite) in &suites {
        for (target, matrix) in matrices {
            grid.push(ObjectiveCell {
                baseline: baseline.clone(),
                target: target.clone(),
                fraction: killed_fraction(matrix, suite),
            });
        }
    }
    SubjectObjective {
        subject: subject.to_string(),
        suites,
        grid,
        fault_detected,
    }
}

/// Snapshot of one repetition at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSample {
    pub pct: u8,
    pub tests_selected: usize,
    /// Killed fraction per tool under the suite accumulated so far.
    pub killed_fraction: BTreeMap<String, Score>,
    pub fault_detected: bool,
}

/// Aggregated means at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMean {
    pub pct: u8,
    pub mean_tests_selected: Score,
    pub mean_killed_fraction: BTreeMap<String, Score>,
    pub fault_detection_rate: Score,
}

/// Full simulation output for one (subject, baseline) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub baseline: String,
    pub checkpoints: Vec<u8>,
    pub per_repetition: Vec<Vec<CheckpointSample>>,
    pub means: Vec<CheckpointMean>,
}

/// Simulate a tester who analyses the baseline tool's killable mutants in
/// random order, picking one random killing test per still-live mutant, and
/// measure every tool's mutation score plus fault detection at each
/// checkpoint. Repetition `r` uses the seed derived from
/// `(config.rng_seed, "rep", r)`, so parallel evaluation of repetitions
/// would reproduce the sequential aggregate exactly.
pub fn cost_effectiveness(
    matrices: &BTreeMap<String, KillMatrix>,
    fault: &FaultReference,
    baseline_tool: &str,
    config: &SimulationConfig,
) -> Result<CostCurve, SimulateError> {
    config.validate()?;
    let baseline = matrices
        .get(baseline_tool)
        .ok_or_else(|| SimulateError::BadConfig(format!("unknown tool {baseline_tool}")))?;

    // Killable baseline mutants in canonical id order; their failing sets.
    let baseline_mutants: Vec<&BTreeSet<String>> = baseline
        .vectors
        .values()
        .filter(|v| v.status == KillStatus::Killed)
        .map(|v| &v.failing_tests)
        .collect();
    let n = baseline_mutants.len();
    if n == 0 {
        return Err(SimulateError::NoKilledMutants);
    }
    // Checkpoint targets in "baseline mutants analysed".
    let targets: Vec<usize> = config
        .checkpoints
        .iter()
        .map(|pct| ((*pct as usize * n).div_ceil(100)).max(1))
        .collect();

    let mut per_repetition = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(config.rng_seed, &["rep", &rep.to_string()]));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);

        let mut suite: BTreeSet<String> = BTreeSet::new();
        let mut samples = Vec::with_capacity(targets.len());
        let mut next_checkpoint = 0;
        for (analysed, idx) in order.iter().enumerate() {
            let failing = baseline_mutants[*idx];
            // Skip mutants the accumulated suite already kills.
            if !failing.iter().any(|t| suite.contains(t)) {
                let killers: Vec<&String> = failing.iter().collect();
                let pick = killers[rng.gen_range(0..killers.len())];
                suite.insert(pick.clone());
            }
            while next_checkpoint < targets.len() && analysed + 1 == targets[next_checkpoint] {
                samples.push(CheckpointSample {
                    pct: config.checkpoints[next_checkpoint],
                    tests_selected: suite.len(),
                    killed_fraction: matrices
                        .iter()
                        .filter_map(|(tool, m)| {
                            killed_fraction(m, &suite).map(|f| (tool.clone(), f))
                        })
                        .collect(),
                    fault_detected: suite.iter().any(|t| fault.failing_tests.contains(t)),
                });
                next_checkpoint += 1;
            }
        }
        debug_assert_eq!(samples.len(), targets.len());
        per_repetition.push(samples);
    }

    // Aggregate in repetition order so the result is independent of any
    // evaluation order.
    let tools: Vec<&String> = matrices.keys().collect();
    let mut means = Vec::new();
    for (ci, pct) in config.checkpoints.iter().enumerate() {
        let reps = per_repetition.len() as Score;
        let mean_tests = per_repetition
            .iter()
            .map(|r| r[ci].tests_selected as Score)
            .sum::<Score>()
            / reps;
        let mut mean_killed = BTreeMap::new();
        for tool in &tools {
            let mut sum = 0.0;
            let mut have = 0usize;
            for r in &per_repetition {
                if let Some(f) = r[ci].killed_fraction.get(*tool) {
                    sum += f;
                    have += 1;
                }
            }
            if have > 0 {
                mean_killed.insert((*tool).clone(), sum / have as Score);
            }
        }
        let detection = per_repetition
            .iter()
            .map(|r| if r[ci].fault_detected { 1.0 } else { 0.0 })
            .sum::<Score>()
            / reps;
        means.push(CheckpointMean {
            pct: *pct,
            mean_tests_selected: mean_tests,
            mean_killed_fraction: mean_killed,
            fault_detection_rate: detection,
        });
    }

    Ok(CostCurve {
        baseline: baseline_tool.to_string(),
        checkpoints: config.checkpoints.clone(),
        per_repetition,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::KillVector;
    use proptest::prelude::*;

    fn matrix_of(subject: &str, vectors: &[(&str, &[&str])], tests: &[&str]) -> KillMatrix {
        let mut map = BTreeMap::new();
        for (id, failing) in vectors {
            map.insert(
                id.to_string(),
                KillVector {
                    mutant_id: id.to_string(),
                    status: if failing.is_empty() {
                        KillStatus::Survived
                    } else {
                        KillStatus::Killed
                    },
                    failing_tests: failing.iter().map(|s| s.to_string()).collect(),
                },
            );
        }
        KillMatrix {
            subject: subject.into(),
            test_ids: tests.iter().map(|s| s.to_string()).collect(),
            vectors: map,
        }
    }

    fn fault(failing: &[&str]) -> FaultReference {
        FaultReference {
            fault_id: "f".into(),
            failing_tests: failing.iter().map(|s| s.to_string()).collect(),
            faulty_tokens: vec!["x".into()],
            fixed_tokens: vec!["y".into()],
            changed_functions: BTreeSet::new(),
            fixed_change_span: (0, 0),
        }
    }

    #[test]
    fn greedy_needs_both_tests() {
        // m1 killed by {t1}, m2 by {t2}, m3 by {t1, t2}: no single test
        // covers m1 and m2.
        let m = matrix_of(
            "s",
            &[("m1", &["t1"]), ("m2", &["t2"]), ("m3", &["t1", "t2"])],
            &["t1", "t2"],
        );
        let suite = minimal_killing_suite(&m).unwrap();
        assert_eq!(
            suite,
            ["t1", "t2"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn greedy_single_test_covers_all() {
        let m = matrix_of(
            "s",
            &[("m1", &["t1", "t2"]), ("m2", &["t1"])],
            &["t1", "t2"],
        );
        let suite = minimal_killing_suite(&m).unwrap();
        assert_eq!(suite.len(), 1);
        assert!(suite.contains("t1"));
    }

    #[test]
    fn greedy_tie_break_by_test_id() {
        let m = matrix_of("s", &[("m1", &["t1", "t2"])], &["t2", "t1"]);
        let suite = minimal_killing_suite(&m).unwrap();
        assert_eq!(suite.into_iter().collect::<Vec<_>>(), vec!["t1"]);
    }

    #[test]
    fn greedy_errors_without_kills() {
        let m = matrix_of("s", &[("m1", &[])], &["t1"]);
        assert_eq!(
            minimal_killing_suite(&m),
            Err(SimulateError::NoKilledMutants)
        );
    }

    #[test]
    fn objective_self_score_is_one() {
        let mut matrices = BTreeMap::new();
        matrices.insert(
            "a".to_string(),
            matrix_of("s", &[("a1", &["t1"]), ("a2", &["t2"])], &["t1", "t2", "t3"]),
        );
        matrices.insert(
            "b".to_string(),
            matrix_of("s", &[("b1", &["t3"])], &["t1", "t2", "t3"]),
        );
        let obj = objective_comparison("s", &matrices, &fault(&["t3"]));
        for tool in ["a", "b"] {
            let self_cell = obj
                .grid
                .iter()
                .find(|c| c.baseline == tool && c.target == tool)
                .unwrap();
            assert_eq!(self_cell.fraction, Some(1.0));
        }
        assert_eq!(obj.fault_detected["b"], true);
        assert_eq!(obj.fault_detected["a"], false);
    }

    #[test]
    fn forced_choice_is_deterministic() {
        let mut matrices = BTreeMap::new();
        matrices.insert(
            "a".to_string(),
            matrix_of("s", &[("m1", &["t1"])], &["t1", "t2"]),
        );
        let config = SimulationConfig {
            repetitions: 1,
            ..Default::default()
        };
        let curve = cost_effectiveness(&matrices, &fault(&["t2"]), "a", &config).unwrap();
        assert_eq!(curve.per_repetition.len(), 1);
        let last = curve.per_repetition[0].last().unwrap();
        assert_eq!(last.tests_selected, 1);
        assert_eq!(last.killed_fraction["a"], 1.0);
        assert!(!last.fault_detected);
    }

    #[test]
    fn baseline_reaches_full_kill_at_100pct() {
        let mut matrices = BTreeMap::new();
        matrices.insert(
            "a".to_string(),
            matrix_of(
                "s",
                &[
                    ("m1", &["t1"]),
                    ("m2", &["t2"]),
                    ("m3", &["t1", "t3"]),
                    ("m4", &[]),
                ],
                &["t1", "t2", "t3"],
            ),
        );
        let config = SimulationConfig {
            repetitions: 20,
            ..Default::default()
        };
        let curve = cost_effectiveness(&matrices, &fault(&["t1"]), "a", &config).unwrap();
        for rep in &curve.per_repetition {
            assert_eq!(rep.last().unwrap().killed_fraction["a"], 1.0);
        }
        assert_eq!(curve.means.last().unwrap().mean_killed_fraction["a"], 1.0);
    }

    #[test]
    fn curves_are_monotone_per_repetition() {
        let mut matrices = BTreeMap::new();
        matrices.insert(
            "a".to_string(),
            matrix_of(
                "s",
                &[
                    ("m1", &["t1"]),
                    ("m2", &["t2"]),
                    ("m3", &["t3"]),
                    ("m4", &["t1", "t2"]),
                    ("m5", &["t4"]),
                ],
                &["t1", "t2", "t3", "t4"],
            ),
        );
        matrices.insert(
            "b".to_string(),
            matrix_of("s", &[("b1", &["t2"]), ("b2", &["t4"])], &["t1", "t2", "t3", "t4"]),
        );
        let config = SimulationConfig {
            repetitions: 50,
            ..Default::default()
        };
        let curve = cost_effectiveness(&matrices, &fault(&["t4"]), "a", &config).unwrap();
        for rep in &curve.per_repetition {
            for w in rep.windows(2) {
                for (tool, f) in &w[0].killed_fraction {
                    assert!(w[1].killed_fraction[tool] >= *f);
                }
                assert!(w[1].fault_detected >= w[0].fault_detected);
                assert!(w[1].tests_selected >= w[0].tests_selected);
            }
        }
    }

    #[test]
    fn seeded_determinism_and_seed_sensitivity() {
        let mut matrices = BTreeMap::new();
        matrices.insert(
            "a".to_string(),
            matrix_of(
                "s",
                &[
                    ("m1", &["t1", "t2"]),
                    ("m2", &["t2", "t3"]),
                    ("m3", &["t1", "t3"]),
                    ("m4", &["t4"]),
                ],
                &["t1", "t2", "t3", "t4"],
            ),
        );
        let config = SimulationConfig {
            repetitions: 10,
            rng_seed: 42,
            checkpoints: vec![50, 100],
        };
        let f = fault(&["t1"]);
        let one = cost_effectiveness(&matrices, &f, "a", &config).unwrap();
        let two = cost_effectiveness(&matrices, &f, "a", &config).unwrap();
        assert_eq!(one, two);
        let other_seed = SimulationConfig {
            rng_seed: 43,
            ..config
        };
        let three = cost_effectiveness(&matrices, &f, "a", &other_seed).unwrap();
        assert_eq!(three.checkpoints, one.checkpoints);
        // Different seed is allowed to differ (and does here in general).
        let _ = three;
    }

    #[test]
    fn bad_checkpoints_rejected() {
        let bad = SimulationConfig {
            checkpoints: vec![10, 50],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let unsorted = SimulationConfig {
            checkpoints: vec![50, 10, 100],
            ..Default::default()
        };
        assert!(unsorted.validate().is_err());
    }

    proptest! {
        // The greedy suite always kills every killable mutant.
        #[test]
        fn greedy_cover_complete(
            sets in proptest::collection::vec(
                proptest::collection::btree_set(0u8..6, 1..4), 1..10
            )
        ) {
            let vectors: Vec<(String, Vec<String>)> = sets
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("m{i}"), s.iter().map(|t| format!("t{t}")).collect()))
                .collect();
            let tests: Vec<String> = (0..6).map(|t| format!("t{t}")).collect();
            let matrix = KillMatrix {
                subject: "s".into(),
                test_ids: tests,
                vectors: vectors
                    .into_iter()
                    .map(|(id, failing)| {
                        (
                            id.clone(),
                            KillVector {
                                mutant_id: id,
                                status: KillStatus::Killed,
                                failing_tests: failing.into_iter().collect(),
                            },
                        )
                    })
                    .collect(),
            };
            let suite = minimal_killing_suite(&matrix).unwrap();
            prop_assert_eq!(killed_fraction(&matrix, &suite), Some(1.0));
        }
    }
}
