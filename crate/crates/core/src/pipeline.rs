//! Stage orchestration: generate → execute → analyze → simulate → report.
//! Stages communicate only through files under the output directory, so any
//! stage can be re-run in isolation and re-running without input changes
//! rewrites byte-identical artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    correlations, cross_tool_subsumption, location_sensitivity, quartiles, resemblance,
    summarize_resemblance, ContributionRow, Correlations, FaultResemblance, LocationSensitivity,
    QuartilePartition, SubsumptionGraph,
};
use crate::artifacts::{
    self, csv_document, fmt_score, ArtifactError, SimilarityRow, FORMAT_VERSION,
};
use crate::config::{ConfigError, RunConfig};
use crate::engines::grammar::generate_grammar_mutants;
use crate::engines::pattern::{generate_pattern_mutants, localize};
use crate::engines::predictor::{generate_predictor_mutants, train_ngram, NGramModel};
use crate::harness::{
    execute_all, execute_reference, FaultReference, HarnessError, KillMatrix,
};
use crate::lexing::lex;
use crate::metrics::{similarity_table, Granularity, SimilarityRecord};
use crate::minilang::{parse, Corpus, CorpusError, Program};
use crate::mutant::{Engine, Mutant};
use crate::seeds::derive_seed;
use crate::simulate::{
    cost_effectiveness, objective_comparison, SimulationConfig, SubjectObjective,
};
use crate::stats::a12;
use crate::Score;

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("missing stage input: {0} (run the earlier stages first)")]
    MissingInput(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl StageError {
    /// Process exit code for the CLI: 2 config, 3 corpus, 4 missing stage
    /// input, 5 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Config(_) => 2,
            StageError::Corpus(_) => 3,
            StageError::MissingInput(_) => 4,
            StageError::Internal(_) => 5,
        }
    }
}

impl From<ArtifactError> for StageError {
    fn from(e: ArtifactError) -> Self {
        StageError::Internal(e.to_string())
    }
}

impl From<HarnessError> for StageError {
    fn from(e: HarnessError) -> Self {
        StageError::Corpus(CorpusError::BadTests {
            entry: String::new(),
            message: e.to_string(),
        })
    }
}

pub struct Pipeline {
    pub config: RunConfig,
    corpus: Corpus,
}

/// Summary row of the generate stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCount {
    pub subject: String,
    pub engine: Engine,
    pub mutants: usize,
}

impl Pipeline {
    /// Resolve the corpus (bundled when no path is configured) and validate
    /// the configuration.
    pub fn new(config: RunConfig) -> Result<Pipeline, StageError> {
        config.validate()?;
        let corpus = match &config.corpus_path {
            Some(path) => Corpus::load(path)?,
            None => Corpus::bundled(),
        };
        Ok(Pipeline { config, corpus })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    fn out(&self) -> &Path {
        &self.config.out_dir
    }

    fn subject_dir(&self, subject: &str) -> PathBuf {
        self.out().join(subject)
    }

    fn write_config(&self) -> Result<(), StageError> {
        artifacts::write_file(&self.out().join("config.toml"), &self.config.to_toml())?;
        Ok(())
    }

    fn parse_subject(&self, subject: &str, source: &str) -> Result<Program, StageError> {
        parse(source).map_err(|e| {
            StageError::Corpus(CorpusError::BadTests {
                entry: subject.to_string(),
                message: format!("source does not parse: {e}"),
            })
        })
    }

    // -----------------------------------------------------------------
    // generate

    /// Train the shared predictor model (when the predictor engine is
    /// selected) and run every selected engine on every subject.
    pub fn generate(&self) -> Result<Vec<GenerationCount>, StageError> {
        self.write_config()?;
        let model: Option<NGramModel> = if self.config.engines.contains(&Engine::Predictor) {
            let sources: Vec<String> = self
                .corpus
                .entries
                .iter()
                .map(|e| e.fixed_source.clone())
                .collect();
            let model = train_ngram(&sources, self.config.ngram_order)
                .map_err(|e| StageError::Internal(e.to_string()))?;
            artifacts::write_file(&self.out().join("ngram.model"), &model.to_text())?;
            Some(model)
        } else {
            None
        };

        let mut counts = Vec::new();
        let mut totals: BTreeMap<Engine, usize> = BTreeMap::new();
        for entry in &self.corpus.entries {
            let program = self.parse_subject(&entry.name, &entry.fixed_source)?;
            let mut mutants: Vec<Mutant> = Vec::new();

            if self.config.engines.contains(&Engine::Grammar) {
                mutants.extend(generate_grammar_mutants(&program));
            }
            if self.config.engines.contains(&Engine::Pattern) {
                let ranking = localize(&program, &entry.bug_report);
                // Mirror the paper's setup: restrict seeding to the
                // functions touched by the reference fix.
                let scope = changed_functions_static(&entry.fixed_source, &entry.faulty_source);
                mutants.extend(generate_pattern_mutants(
                    &program,
                    &ranking,
                    self.config.cap,
                    scope.as_ref(),
                ));
            }
            if let Some(model) = &model {
                mutants.extend(generate_predictor_mutants(
                    &program,
                    model,
                    self.config.k,
                    self.config.context_limit,
                    self.config.predictor_policy,
                ));
            }

            for engine in &self.config.engines {
                let n = mutants.iter().filter(|m| m.engine == *engine).count();
                counts.push(GenerationCount {
                    subject: entry.name.clone(),
                    engine: *engine,
                    mutants: n,
                });
                *totals.entry(*engine).or_insert(0) += n;
            }
            artifacts::write_mutants(
                &self.subject_dir(&entry.name).join("mutants.json"),
                &entry.name,
                &mutants,
                &entry.fixed_source,
            )?;
        }

        let mut rows: Vec<String> = counts
            .iter()
            .map(|c| format!("{},{},{}", c.subject, c.engine, c.mutants))
            .collect();
        for (engine, total) in &totals {
            rows.push(format!("all,{engine},{total}"));
        }
        artifacts::write_file(
            &self.out().join("generation_summary.csv"),
            &csv_document("subject,engine,mutants", &rows),
        )?;
        Ok(counts)
    }

    // -----------------------------------------------------------------
    // execute

    fn load_mutants(&self, subject: &str) -> Result<Vec<Mutant>, StageError> {
        let path = self.subject_dir(subject).join("mutants.json");
        if !path.is_file() {
            return Err(StageError::MissingInput(path.display().to_string()));
        }
        Ok(artifacts::read_mutants(&path)?)
    }

    /// Run every mutant and the reference fault of every subject.
    pub fn execute(&self) -> Result<(), StageError> {
        self.write_config()?;
        for entry in &self.corpus.entries {
            let mutants = self.load_mutants(&entry.name)?;
            let program = self.parse_subject(&entry.name, &entry.fixed_source)?;
            let mut matrix = execute_all(
                &program,
                &mutants,
                &entry.tests,
                self.config.step_limit,
                self.config.workers,
            );
            matrix.subject = entry.name.clone();
            let fault = execute_reference(entry, self.config.step_limit)?;

            let dir = self.subject_dir(&entry.name);
            artifacts::write_killmatrix_csv(&dir.join("killmatrix.csv"), &matrix)?;
            artifacts::write_killmatrix_meta(&dir.join("killmatrix.meta.json"), &matrix)?;
            artifacts::write_json(&dir.join("fault.json"), &FaultFile {
                format_version: FORMAT_VERSION,
                fault: fault.clone(),
            })?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // shared loading for analyze/simulate/report

    fn load_subject(&self, subject: &str) -> Result<SubjectData, StageError> {
        let dir = self.subject_dir(subject);
        let mutants = self.load_mutants(subject)?;
        for file in ["killmatrix.csv", "killmatrix.meta.json", "fault.json"] {
            if !dir.join(file).is_file() {
                return Err(StageError::MissingInput(dir.join(file).display().to_string()));
            }
        }
        let matrix = artifacts::read_killmatrix(
            &dir.join("killmatrix.csv"),
            &dir.join("killmatrix.meta.json"),
        )?;
        let fault_file: FaultFile = artifacts::read_json(&dir.join("fault.json"))?;
        Ok(SubjectData {
            mutants,
            matrix,
            fault: fault_file.fault,
        })
    }

    fn tool_matrices(data: &SubjectData, engines: &BTreeSet<Engine>) -> BTreeMap<String, KillMatrix> {
        let mut out = BTreeMap::new();
        for engine in engines {
            let ids: BTreeSet<String> = data
                .mutants
                .iter()
                .filter(|m| m.engine == *engine)
                .map(|m| m.id.clone())
                .collect();
            out.insert(engine.to_string(), data.matrix.restricted_to(&ids));
        }
        out
    }

    // -----------------------------------------------------------------
    // analyze

    /// Similarity tables (all three granularities), quartiles, resemblance,
    /// correlations, subsumption and location sensitivity.
    pub fn analyze(&self) -> Result<(), StageError> {
        self.write_config()?;
        let mut similarity_rows: Vec<SimilarityRow> = Vec::new();
        let mut per_tool_rows: BTreeMap<String, Vec<FaultResemblance>> = BTreeMap::new();
        let mut per_tool_records: BTreeMap<String, Vec<SimilarityRecord>> = BTreeMap::new();
        let mut contribution_rows: BTreeMap<(String, String), Vec<Score>> = BTreeMap::new();

        for entry in &self.corpus.entries {
            let data = self.load_subject(&entry.name)?;
            let by_engine: BTreeMap<String, Vec<Mutant>> = {
                let mut m: BTreeMap<String, Vec<Mutant>> = BTreeMap::new();
                for mutant in &data.mutants {
                    m.entry(mutant.engine.to_string())
                        .or_default()
                        .push(mutant.clone());
                }
                m
            };

            let mut tool_reports: BTreeMap<String, ToolAnalysis> = BTreeMap::new();
            for (tool, mutants) in &by_engine {
                // Tables at every granularity; the configured one drives the
                // downstream analysis.
                let mut tables: BTreeMap<Granularity, Vec<SimilarityRecord>> = BTreeMap::new();
                for granularity in Granularity::all() {
                    let records = similarity_table(
                        &data.matrix,
                        &data.fault,
                        mutants,
                        &entry.faulty_source,
                        &entry.fixed_source,
                        self.config.syntactic_metric,
                        granularity,
                    );
                    similarity_rows.extend(records.iter().map(|r| SimilarityRow {
                        granularity: granularity.as_str().to_string(),
                        record: r.clone(),
                    }));
                    tables.insert(granularity, records);
                }
                let records = &tables[&self.config.granularity];
                let patch_scores: BTreeMap<String, Score> = tables[&Granularity::Patch]
                    .iter()
                    .map(|r| (r.mutant_id.clone(), r.syntactic))
                    .collect();

                let partition = quartiles(records).ok();
                let fault_resemblance = partition
                    .as_ref()
                    .map(|p| resemblance(records, p, &patch_scores));
                if let Some(r) = &fault_resemblance {
                    per_tool_rows.entry(tool.clone()).or_default().push(r.clone());
                }
                per_tool_records
                    .entry(tool.clone())
                    .or_default()
                    .extend(records.iter().cloned());

                let locations: BTreeMap<String, (String, (usize, usize))> = mutants
                    .iter()
                    .map(|m| (m.id.clone(), (m.function.clone(), m.span)))
                    .collect();
                let fault_ref = &data.fault;
                let sensitivity = location_sensitivity(records, &locations, |function, span| {
                    let (lo, hi) = fault_ref.fixed_change_span;
                    fault_ref.changed_functions.contains(function)
                        && if lo == hi {
                            span.0 <= lo && span.1 >= lo
                        } else {
                            span.0 < hi && span.1 > lo
                        }
                });

                tool_reports.insert(
                    tool.clone(),
                    ToolAnalysis {
                        records: records.len(),
                        quartiles: partition,
                        resemblance: fault_resemblance,
                        correlations: correlations(records).ok(),
                        location_sensitivity: sensitivity,
                    },
                );
            }

            let matrices = Self::tool_matrices(&data, &self.config.engines);
            let (pooled_graph, contributions) = match cross_tool_subsumption(&matrices) {
                Ok((g, c)) => (Some(g), c),
                Err(_) => (None, Vec::new()),
            };
            for row in &contributions {
                if let Some(v) = row.contribution {
                    contribution_rows
                        .entry((row.base_tool.clone(), row.added_tool.clone()))
                        .or_default()
                        .push(v);
                }
            }

            artifacts::write_json(
                &self.subject_dir(&entry.name).join("analysis.json"),
                &AnalysisFile {
                    format_version: FORMAT_VERSION,
                    subject: entry.name.clone(),
                    fault_id: data.fault.fault_id.clone(),
                    granularity: self.config.granularity.as_str().to_string(),
                    per_tool: tool_reports,
                    subsumption: pooled_graph,
                    cross_tool: contributions,
                },
            )?;
        }

        artifacts::write_similarity(&self.out().join("similarity.csv"), &similarity_rows)?;

        // Table-2/Table-3 style per-tool summary.
        let mut summary_rows = Vec::new();
        for (tool, rows) in &per_tool_rows {
            let s = summarize_resemblance(rows);
            summary_rows.push(format!(
                "{tool},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.faults,
                fmt_score(s.pct_resembled),
                fmt_score(s.pct_exact_match),
                fmt_score(s.pct_per_quartile[0]),
                fmt_score(s.pct_per_quartile[1]),
                fmt_score(s.pct_per_quartile[2]),
                fmt_score(s.pct_per_quartile[3]),
                fmt_score(s.mean_ratio),
                fmt_score(s.mean_ratio_per_quartile[0]),
                fmt_score(s.mean_ratio_per_quartile[1]),
                fmt_score(s.mean_ratio_per_quartile[2]),
                fmt_score(s.mean_ratio_per_quartile[3]),
            ));
        }
        artifacts::write_file(
            &self.out().join("analysis_summary.csv"),
            &csv_document(
                "tool,faults,total,exact_matches,q1,q2,q3,q4,mean_ratio,mean_ratio_q1,mean_ratio_q2,mean_ratio_q3,mean_ratio_q4",
                &summary_rows,
            ),
        )?;

        // Per-tool correlations pooled over subjects.
        let mut corr_rows = Vec::new();
        for (tool, records) in &per_tool_records {
            if let Ok(c) = correlations(records) {
                let (r, p) = c
                    .pearson
                    .as_ref()
                    .map(|p| (fmt_score(p.r), fmt_score(p.p_value)))
                    .unwrap_or_else(|| ("undefined".into(), "undefined".into()));
                corr_rows.push(format!(
                    "{tool},{},{},{},{}",
                    fmt_score(c.kendall_tau_a),
                    fmt_score(c.tau_p_value),
                    r,
                    p
                ));
            }
        }
        artifacts::write_file(
            &self.out().join("correlations.csv"),
            &csv_document("tool,kendall_tau_a,tau_p,pearson_r,pearson_p", &corr_rows),
        )?;

        // Mean cross-tool contribution over subjects.
        let mut contrib_rows = Vec::new();
        for ((base, added), values) in &contribution_rows {
            let mean = values.iter().sum::<Score>() / values.len() as Score;
            contrib_rows.push(format!("{base},{added},{}", fmt_score(mean)));
        }
        artifacts::write_file(
            &self.out().join("subsumption_contributions.csv"),
            &csv_document("base_tool,added_tool,mean_contribution", &contrib_rows),
        )?;
        Ok(())
    }

    // -----------------------------------------------------------------
    // simulate

    /// Objective comparison plus the seeded cost-effectiveness simulation.
    pub fn simulate(&self) -> Result<(), StageError> {
        self.write_config()?;
        let mut objective_rows = Vec::new();
        let mut objectives: Vec<SubjectObjective> = Vec::new();
        // (baseline, pct, tool) -> per-subject mean killed fractions.
        let mut killed: BTreeMap<(String, u8, String), Vec<Score>> = BTreeMap::new();
        // (baseline, pct) -> per-subject detection rates.
        let mut detection: BTreeMap<(String, u8), Vec<Score>> = BTreeMap::new();

        for entry in &self.corpus.entries {
            let data = self.load_subject(&entry.name)?;
            let matrices = Self::tool_matrices(&data, &self.config.engines);

            let objective = objective_comparison(&entry.name, &matrices, &data.fault);
            for cell in &objective.grid {
                objective_rows.push(format!(
                    "{},{},{},{},{}",
                    entry.name,
                    cell.baseline,
                    cell.target,
                    cell.fraction.map(fmt_score).unwrap_or_else(|| "undefined".into()),
                    objective.fault_detected[&cell.baseline]
                ));
            }
            objectives.push(objective);

            for (tool, matrix) in &matrices {
                if matrix.killed_count() == 0 {
                    continue;
                }
                let config = SimulationConfig {
                    repetitions: self.config.repetitions,
                    rng_seed: derive_seed(
                        self.config.seed,
                        &["simulate", &entry.name, tool],
                    ),
                    checkpoints: self.config.checkpoints.clone(),
                };
                let curve = cost_effectiveness(&matrices, &data.fault, tool, &config)
                    .map_err(|e| StageError::Internal(e.to_string()))?;
                for mean in &curve.means {
                    for (target, fraction) in &mean.mean_killed_fraction {
                        killed
                            .entry((tool.clone(), mean.pct, target.clone()))
                            .or_default()
                            .push(*fraction);
                    }
                    detection
                        .entry((tool.clone(), mean.pct))
                        .or_default()
                        .push(mean.fault_detection_rate);
                }
            }
        }

        artifacts::write_file(
            &self.out().join("objective.csv"),
            &csv_document(
                "subject,baseline,target,fraction,fault_detected",
                &objective_rows,
            ),
        )?;

        // Aggregate objective grid (mean and median over subjects).
        let mut agg: BTreeMap<(String, String), Vec<Score>> = BTreeMap::new();
        let mut det: BTreeMap<String, Vec<Score>> = BTreeMap::new();
        for o in &objectives {
            for cell in &o.grid {
                if let Some(f) = cell.fraction {
                    agg.entry((cell.baseline.clone(), cell.target.clone()))
                        .or_default()
                        .push(f);
                }
            }
            for (tool, hit) in &o.fault_detected {
                det.entry(tool.clone())
                    .or_default()
                    .push(if *hit { 1.0 } else { 0.0 });
            }
        }
        let median = |xs: &mut Vec<Score>| -> Score {
            xs.sort_by(Score::total_cmp);
            let n = xs.len();
            if n % 2 == 1 {
                xs[n / 2]
            } else {
                (xs[n / 2 - 1] + xs[n / 2]) / 2.0
            }
        };
        let mut summary_rows = Vec::new();
        for ((baseline, target), mut values) in agg {
            let mean = values.iter().sum::<Score>() / values.len() as Score;
            let med = median(&mut values);
            summary_rows.push(format!(
                "{baseline},{target},{},{}",
                fmt_score(mean),
                fmt_score(med)
            ));
        }
        artifacts::write_file(
            &self.out().join("objective_summary.csv"),
            &csv_document("baseline,target,mean_fraction,median_fraction", &summary_rows),
        )?;
        let mut detection_rows = Vec::new();
        for (tool, mut values) in det {
            let mean = values.iter().sum::<Score>() / values.len() as Score;
            let med = median(&mut values);
            detection_rows.push(format!("{tool},{},{}", fmt_score(mean), fmt_score(med)));
        }
        artifacts::write_file(
            &self.out().join("fault_detection.csv"),
            &csv_document("tool,mean_detection,median_detection", &detection_rows),
        )?;

        // simulation.csv: means over subjects.
        let mut sim_rows = Vec::new();
        for ((baseline, pct, tool), values) in &killed {
            let mean = values.iter().sum::<Score>() / values.len() as Score;
            let det_values = &detection[&(baseline.clone(), *pct)];
            let mean_det = det_values.iter().sum::<Score>() / det_values.len() as Score;
            sim_rows.push(format!(
                "{baseline},{pct},{tool},{},{}",
                fmt_score(mean),
                fmt_score(mean_det)
            ));
        }
        artifacts::write_file(
            &self.out().join("simulation.csv"),
            &csv_document(
                "baseline,checkpoint_pct,tool,mean_killed_fraction,mean_fault_detection",
                &sim_rows,
            ),
        )?;

        // a12.csv: fault-detection distributions (one value per subject) of
        // baseline A vs baseline B at the same budget percentage.
        let mut a12_rows = Vec::new();
        let tools: BTreeSet<String> = detection.keys().map(|(t, _)| t.clone()).collect();
        for a in &tools {
            for b in &tools {
                if a == b {
                    continue;
                }
                for pct in &self.config.checkpoints {
                    let (Some(xa), Some(xb)) = (
                        detection.get(&(a.clone(), *pct)),
                        detection.get(&(b.clone(), *pct)),
                    ) else {
                        continue;
                    };
                    if let Ok(value) = a12(xa, xb) {
                        a12_rows.push(format!("{a},{b},{pct},{}", fmt_score(value)));
                    }
                }
            }
        }
        artifacts::write_file(
            &self.out().join("a12.csv"),
            &csv_document("tool_a,tool_b,checkpoint_pct,a12", &a12_rows),
        )?;
        Ok(())
    }

    // -----------------------------------------------------------------
    // report

    /// Plot-ready long-format CSVs derived from the earlier artifacts.
    pub fn report(&self) -> Result<(), StageError> {
        self.write_config()?;
        let similarity_path = self.out().join("similarity.csv");
        if !similarity_path.is_file() {
            return Err(StageError::MissingInput(
                similarity_path.display().to_string(),
            ));
        }
        let rows = artifacts::read_similarity(&similarity_path)?;
        let plots = self.out().join("plots");

        // Scatter: one row per record at the configured granularity.
        let granularity = self.config.granularity.as_str();
        let mut engine_of: BTreeMap<(String, String), String> = BTreeMap::new();
        let mut fault_subject: BTreeMap<String, String> = BTreeMap::new();
        for entry in &self.corpus.entries {
            fault_subject.insert(format!("{}.fault", entry.name), entry.name.clone());
            for m in self.load_mutants(&entry.name)? {
                engine_of.insert(
                    (entry.name.clone(), m.id.clone()),
                    m.engine.to_string(),
                );
            }
        }
        let mut scatter = Vec::new();
        for row in rows.iter().filter(|r| r.granularity == granularity) {
            let Some(subject) = fault_subject.get(&row.record.fault_id) else {
                continue;
            };
            let Some(tool) = engine_of.get(&(subject.clone(), row.record.mutant_id.clone()))
            else {
                continue;
            };
            scatter.push(format!(
                "{tool},{subject},{},{},{}",
                row.record.mutant_id,
                fmt_score(row.record.syntactic),
                fmt_score(row.record.semantic)
            ));
        }
        artifacts::write_file(
            &plots.join("scatter.csv"),
            &csv_document("tool,subject,mutant_id,syntactic,semantic", &scatter),
        )?;

        // Quartile boxes: per-tool semantic values bucketed by quartile.
        let mut quartile_rows = Vec::new();
        for entry in &self.corpus.entries {
            let analysis_path = self.subject_dir(&entry.name).join("analysis.json");
            if !analysis_path.is_file() {
                return Err(StageError::MissingInput(analysis_path.display().to_string()));
            }
            let analysis: AnalysisFile = artifacts::read_json(&analysis_path)?;
            for (tool, report) in &analysis.per_tool {
                let Some(partition) = &report.quartiles else {
                    continue;
                };
                let semantic: BTreeMap<&String, Score> = rows
                    .iter()
                    .filter(|r| {
                        r.granularity == granularity
                            && r.record.fault_id == analysis.fault_id
                    })
                    .map(|r| (&r.record.mutant_id, r.record.semantic))
                    .collect();
                for (qi, ids) in partition.quartiles().iter().enumerate() {
                    for id in *ids {
                        if let Some(s) = semantic.get(id) {
                            quartile_rows.push(format!(
                                "{tool},{},q{},{id},{}",
                                entry.name,
                                qi + 1,
                                fmt_score(*s)
                            ));
                        }
                    }
                }
            }
        }
        artifacts::write_file(
            &plots.join("quartiles.csv"),
            &csv_document("tool,subject,quartile,mutant_id,semantic", &quartile_rows),
        )?;

        // Subsumption contributions (already aggregated).
        let contrib = self.out().join("subsumption_contributions.csv");
        if !contrib.is_file() {
            return Err(StageError::MissingInput(contrib.display().to_string()));
        }
        artifacts::write_file(&plots.join("subsumption.csv"), &artifacts::read_file(&contrib)?)?;

        // Cost curves straight from simulation.csv.
        let sim = self.out().join("simulation.csv");
        if !sim.is_file() {
            return Err(StageError::MissingInput(sim.display().to_string()));
        }
        artifacts::write_file(&plots.join("cost_curves.csv"), &artifacts::read_file(&sim)?)?;

        // Same-location sensitivity deltas.
        let mut sensitivity_rows = Vec::new();
        for entry in &self.corpus.entries {
            let analysis: AnalysisFile =
                artifacts::read_json(&self.subject_dir(&entry.name).join("analysis.json"))?;
            for (tool, report) in &analysis.per_tool {
                for (bucket, pairs) in [
                    ("patch", &report.location_sensitivity.patch_location_pairs),
                    ("random", &report.location_sensitivity.other_location_pairs),
                ] {
                    for (dsyn, dsem) in pairs {
                        sensitivity_rows.push(format!(
                            "{tool},{},{bucket},{},{}",
                            entry.name,
                            fmt_score(*dsyn),
                            fmt_score(*dsem)
                        ));
                    }
                }
            }
        }
        artifacts::write_file(
            &plots.join("sensitivity.csv"),
            &csv_document(
                "tool,subject,bucket,delta_syntactic,delta_semantic",
                &sensitivity_rows,
            ),
        )?;
        Ok(())
    }

    /// generate → execute → analyze → simulate → report.
    pub fn run_all(&self) -> Result<(), StageError> {
        self.generate()?;
        self.execute()?;
        self.analyze()?;
        self.simulate()?;
        self.report()?;
        Ok(())
    }
}

/// Functions whose token sequences differ between the fixed and faulty
/// sources (statically computable, used as the pattern engine's scope).
pub fn changed_functions_static(
    fixed_source: &str,
    faulty_source: &str,
) -> Option<BTreeSet<String>> {
    let fixed = parse(fixed_source).ok()?;
    let faulty = parse(faulty_source).ok()?;
    let tokens_of = |program: &Program, source: &str| -> BTreeMap<String, Vec<String>> {
        let stream = lex(source).expect("parsed source lexes");
        program
            .functions
            .iter()
            .map(|f| {
                (
                    f.name.clone(),
                    stream
                        .in_span(f.span.0, f.span.1)
                        .iter()
                        .map(|t| t.text.clone())
                        .collect(),
                )
            })
            .collect()
    };
    let fixed_fns = tokens_of(&fixed, fixed_source);
    let faulty_fns = tokens_of(&faulty, faulty_source);
    let mut changed = BTreeSet::new();
    for (name, toks) in &fixed_fns {
        if faulty_fns.get(name) != Some(toks) {
            changed.insert(name.clone());
        }
    }
    for name in faulty_fns.keys() {
        if !fixed_fns.contains_key(name) {
            changed.insert(name.clone());
        }
    }
    Some(changed)
}

struct SubjectData {
    mutants: Vec<Mutant>,
    matrix: KillMatrix,
    fault: FaultReference,
}

#[derive(Debug, Serialize, Deserialize)]
struct FaultFile {
    format_version: u32,
    #[serde(flatten)]
    fault: FaultReference,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ToolAnalysis {
    pub records: usize,
    pub quartiles: Option<QuartilePartition>,
    pub resemblance: Option<FaultResemblance>,
    pub correlations: Option<Correlations>,
    pub location_sensitivity: LocationSensitivity,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnalysisFile {
    pub format_version: u32,
    pub subject: String,
    pub fault_id: String,
    pub granularity: String,
    pub per_tool: BTreeMap<String, ToolAnalysis>,
    pub subsumption: Option<SubsumptionGraph>,
    pub cross_tool: Vec<ContributionRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn changed_functions_static_detects_both_sides() {
        let fixed = "fn a(x){return x;} fn b(y){return y + 1;}";
        let faulty = "fn a(x){return x;} fn b(y){return y - 1;}";
        let changed = changed_functions_static(fixed, faulty).unwrap();
        assert_eq!(changed, ["b".to_string()].into());
    }

    #[test]
    fn stage_errors_map_to_exit_codes() {
        assert_eq!(
            StageError::MissingInput("x".into()).exit_code(),
            4
        );
        assert_eq!(
            StageError::Corpus(CorpusError::Empty).exit_code(),
            3
        );
        assert_eq!(StageError::Internal("x".into()).exit_code(), 5);
    }
}
