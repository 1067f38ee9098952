//! Command-line adapter for non-mini-language subjects: apply each mutant's
//! patched source to a scratch copy of the subject directory, run a
//! configured per-test command, and classify by exit code. Timeouts count as
//! failures, like everywhere else in the harness.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{KillMatrix, KillStatus, KillVector};
use crate::mutant::Mutant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExternalConfig {
    /// Path of the mutated file, relative to the subject directory.
    pub source_path: String,
    /// Optional build step run once per mutant before testing.
    #[serde(default)]
    pub build_cmd: Option<String>,
    /// Per-test command; `{test_id}` is substituted.
    pub test_cmd_template: String,
    pub timeout_seconds: u64,
    /// Test identifiers fed into the template.
    pub tests: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

fn copy_dir(src: &Path, dst: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dst)?;
    for entry in fs::read_dir(src)? {
        let entry = entry?;
        let target = dst.join(entry.file_name());
        if entry.path().is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            fs::copy(entry.path(), &target)?;
        }
    }
    Ok(())
}

enum CmdResult {
    Exit(i32),
    TimedOut,
}

fn run_with_timeout(cmd: &str, cwd: &Path, timeout: Duration) -> std::io::Result<CmdResult> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .current_dir(cwd)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()?;
    let started = Instant::now();
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(CmdResult::Exit(status.code().unwrap_or(1)));
        }
        if started.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(CmdResult::TimedOut);
        }
        std::thread::sleep(Duration::from_millis(5));
    }
}

/// Execute all mutants of an external subject. Each mutant runs in its own
/// scratch copy under `scratch_root`. A failing build marks the mutant
/// `INVALID`; a nonzero or timed-out test marks that test failing.
pub fn execute_all_external(
    subject_dir: &Path,
    scratch_root: &Path,
    config: &ExternalConfig,
    mutants: &[Mutant],
) -> Result<KillMatrix, ExternalError> {
    if config.tests.is_empty() {
        return Err(ExternalError::Config("no tests configured".into()));
    }
    let timeout = Duration::from_secs(config.timeout_seconds.max(1));
    let mut vectors: BTreeMap<String, KillVector> = BTreeMap::new();

    for (i, mutant) in mutants.iter().enumerate() {
        let workdir = scratch_root.join(format!("m{i}"));
        copy_dir(subject_dir, &workdir)?;
        fs::write(workdir.join(&config.source_path), &mutant.patched_source)?;

        let mut invalid = false;
        if let Some(build) = &config.build_cmd {
            match run_with_timeout(build, &workdir, timeout)? {
                CmdResult::Exit(0) => {}
                _ => invalid = true,
            }
        }

        let mut failing = BTreeSet::new();
        if !invalid {
            for test_id in &config.tests {
                let cmd = config.test_cmd_template.replace("{test_id}", test_id);
                let failed = !matches!(run_with_timeout(&cmd, &workdir, timeout)?, CmdResult::Exit(0));
                if failed {
                    failing.insert(test_id.clone());
                }
            }
        }

        let status = if invalid {
            KillStatus::Invalid
        } else if failing.is_empty() {
            KillStatus::Survived
        } else {
            KillStatus::Killed
        };
        vectors.insert(
            mutant.id.clone(),
            KillVector {
                mutant_id: mutant.id.clone(),
                status,
                failing_tests: failing,
            },
        );
    }

    Ok(KillMatrix {
        subject: String::new(),
        test_ids: config.tests.clone(),
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mutant::{Engine, Mutant};

    fn fake_mutant(id: &str, patched: &str) -> Mutant {
        Mutant {
            id: id.to_string(),
            engine: Engine::Grammar,
            operator_id: "external".into(),
            function: "f".into(),
            span: (0, 0),
            original_tokens: vec![],
            mutated_tokens: vec![],
            patched_source: patched.to_string(),
        }
    }

    #[test]
    fn classifies_by_exit_code_and_timeout() {
        let tmp = tempfile::tempdir().unwrap();
        let subject = tmp.path().join("subject");
        std::fs::create_dir_all(&subject).unwrap();
        std::fs::write(subject.join("value.txt"), "42\n").unwrap();

        let config = ExternalConfig {
            source_path: "value.txt".into(),
            build_cmd: Some("test -f value.txt".into()),
            // t_ok passes iff the file still holds 42; t_sleep simulates a
            // hang when the file holds the string `sleep`.
            test_cmd_template:
                "case {test_id} in t_ok) grep -q '^42$' value.txt;; t_sleep) if grep -q sleep value.txt; then sleep 30; else true; fi;; esac"
                    .into(),
            timeout_seconds: 1,
            tests: vec!["t_ok".into(), "t_sleep".into()],
        };

        let mutants = vec![
            fake_mutant("m_same", "42\n"),
            fake_mutant("m_changed", "41\n"),
            fake_mutant("m_hang", "sleep\n"),
        ];
        let matrix =
            execute_all_external(&subject, &tmp.path().join("scratch"), &config, &mutants)
                .unwrap();

        assert_eq!(matrix.vectors["m_same"].status, KillStatus::Survived);
        assert_eq!(matrix.vectors["m_changed"].status, KillStatus::Killed);
        assert!(matrix.vectors["m_changed"].failing_tests.contains("t_ok"));
        // The hang times out, which counts as a kill.
        assert_eq!(matrix.vectors["m_hang"].status, KillStatus::Killed);
        assert!(matrix.vectors["m_hang"].failing_tests.contains("t_sleep"));
    }

    #[test]
    fn failing_build_marks_invalid() {
        let tmp = tempfile::tempdir().unwrap();
        let subject = tmp.path().join("subject");
        std::fs::create_dir_all(&subject).unwrap();
        std::fs::write(subject.join("src.txt"), "ok\n").unwrap();

        let config = ExternalConfig {
            source_path: "src.txt".into(),
            build_cmd: Some("grep -q ok src.txt".into()),
            test_cmd_template: "true".into(),
            timeout_seconds: 1,
            tests: vec!["t1".into()],
        };
        let mutants = vec![fake_mutant("m_bad", "damaged\n")];
        let matrix =
            execute_all_external(&subject, &tmp.path().join("scratch"), &config, &mutants)
                .unwrap();
        assert_eq!(matrix.vectors["m_bad"].status, KillStatus::Invalid);
    }
}
