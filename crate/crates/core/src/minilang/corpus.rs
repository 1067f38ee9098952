//! Corpus of subjects: a fixed program, a faulty variant, a test suite and a
//! free-text bug report, laid out on disk as
//! `corpus/<name>/{fixed.mini,faulty.mini,tests.json,bugreport.txt}`.
//!
//! The bundled micro-corpus is compiled into the crate so tests and the
//! default pipeline run without any filesystem setup.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Expected result of a test: a concrete value or `"EXPECT_ERROR"` for runs
/// that must raise a runtime error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Value(i64),
    #[serde(with = "expect_error")]
    Error,
}

mod expect_error {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("EXPECT_ERROR")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "EXPECT_ERROR" {
            Ok(())
        } else {
            Err(D::Error::custom("expected the string \"EXPECT_ERROR\""))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub function: String,
    pub inputs: Vec<i64>,
    pub expected: Expected,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub fixed_source: String,
    pub faulty_source: String,
    pub tests: Vec<TestCase>,
    pub bug_report: String,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    /// Entries sorted by name.
    pub entries: Vec<CorpusEntry>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus path {0} is not a directory")]
    NotADirectory(String),
    #[error("corpus entry {entry}: missing {file}")]
    MissingFile { entry: String, file: String },
    #[error("corpus entry {entry}: {source}")]
    Io {
        entry: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus entry {entry}: bad tests.json: {message}")]
    BadTests { entry: String, message: String },
    #[error("corpus entry {entry}: duplicate test id `{id}`")]
    DuplicateTestId { entry: String, id: String },
    #[error("corpus entry {entry}: id `{id}` contains characters unsafe for reports")]
    UnsafeId { entry: String, id: String },
    #[error("corpus entry {entry}: fixed and faulty sources are identical")]
    IdenticalVersions { entry: String },
    #[error("corpus entry {entry}: test `{test}` does not pass on the fixed version")]
    FixedVersionFails { entry: String, test: String },
    #[error("corpus entry {entry}: no test fails on the faulty version")]
    FaultNotTriggered { entry: String },
    #[error("corpus is empty")]
    Empty,
}

/// Identifiers end up in CSV files; keep them to a boring charset.
fn id_is_safe(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl CorpusEntry {
    fn validate(self) -> Result<Self, CorpusError> {
        if !id_is_safe(&self.name) {
            return Err(CorpusError::UnsafeId {
                entry: self.name.clone(),
                id: self.name.clone(),
            });
        }
        for (i, t) in self.tests.iter().enumerate() {
            if !id_is_safe(&t.id) {
                return Err(CorpusError::UnsafeId {
                    entry: self.name.clone(),
                    id: t.id.clone(),
                });
            }
            if self.tests[..i].iter().any(|u| u.id == t.id) {
                return Err(CorpusError::DuplicateTestId {
                    entry: self.name.clone(),
                    id: t.id.clone(),
                });
            }
        }
        Ok(self)
    }

    fn from_parts(
        name: &str,
        fixed: &str,
        faulty: &str,
        tests_json: &str,
        bug_report: &str,
    ) -> Result<Self, CorpusError> {
        let tests: Vec<TestCase> =
            serde_json::from_str(tests_json).map_err(|e| CorpusError::BadTests {
                entry: name.to_string(),
                message: e.to_string(),
            })?;
        CorpusEntry {
            name: name.to_string(),
            fixed_source: fixed.to_string(),
            faulty_source: faulty.to_string(),
            tests,
            bug_report: bug_report.to_string(),
        }
        .validate()
    }
}

impl Corpus {
    /// Load a corpus from a directory tree. Entry order is by name.
    pub fn load(dir: &Path) -> Result<Corpus, CorpusError> {
        if !dir.is_dir() {
            return Err(CorpusError::NotADirectory(dir.display().to_string()));
        }
        let mut names: Vec<String> = Vec::new();
        let read = |entry: &str, src: std::io::Error| CorpusError::Io {
            entry: entry.to_string(),
            source: src,
        };
        for e in fs::read_dir(dir).map_err(|e| read("<root>", e))? {
            let e = e.map_err(|e| read("<root>", e))?;
            if e.path().is_dir() {
                names.push(e.file_name().to_string_lossy().into_owned());
            }
        }
        names.sort();
        let mut entries = Vec::new();
        for name in names {
            let sub = dir.join(&name);
            let want = |file: &str| -> Result<String, CorpusError> {
                let path = sub.join(file);
                if !path.is_file() {
                    return Err(CorpusError::MissingFile {
                        entry: name.clone(),
                        file: file.to_string(),
                    });
                }
                fs::read_to_string(&path).map_err(|e| read(&name, e))
            };
            entries.push(CorpusEntry::from_parts(
                &name,
                &want("fixed.mini")?,
                &want("faulty.mini")?,
                &want("tests.json")?,
                &want("bugreport.txt")?,
            )?);
        }
        if entries.is_empty() {
            return Err(CorpusError::Empty);
        }
        Ok(Corpus { entries })
    }

    pub fn get(&self, name: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// The micro-corpus compiled into the crate.
    pub fn bundled() -> Corpus {
        macro_rules! entry {
            ($name:literal) => {
                CorpusEntry::from_parts(
                    $name,
                    include_str!(concat!("../../corpus/", $name, "/fixed.mini")),
                    include_str!(concat!("../../corpus/", $name, "/faulty.mini")),
                    include_str!(concat!("../../corpus/", $name, "/tests.json")),
                    include_str!(concat!("../../corpus/", $name, "/bugreport.txt")),
                )
                .expect("bundled corpus entry must be valid")
            };
        }
        let mut entries = vec![
            entry!("absdiff"),
            entry!("clamp"),
            entry!("digitsum"),
            entry!("fib"),
            entry!("gcd"),
            entry!("isprime"),
            entry!("linear"),
            entry!("max3"),
            entry!("median3"),
            entry!("power"),
            entry!("ratio"),
            entry!("sumto"),
            entry!("triangle"),
        ];
        entries.sort_by(|a, b| a.name.cmp(&b.name));
        Corpus { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_is_well_formed() {
        let corpus = Corpus::bundled();
        assert!(corpus.entries.len() >= 10);
        for e in &corpus.entries {
            assert!(
                (8..=20).contains(&e.tests.len()),
                "{} has {} tests",
                e.name,
                e.tests.len()
            );
            assert!(!e.bug_report.trim().is_empty(), "{} bug report empty", e.name);
        }
    }

    #[test]
    fn expected_serde_roundtrip() {
        let t: TestCase = serde_json::from_str(
            r#"{"id":"t1","function":"f","inputs":[1,2],"expected":"EXPECT_ERROR"}"#,
        )
        .unwrap();
        assert_eq!(t.expected, Expected::Error);
        let v: TestCase =
            serde_json::from_str(r#"{"id":"t2","function":"f","inputs":[],"expected":-3}"#)
                .unwrap();
        assert_eq!(v.expected, Expected::Value(-3));
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("EXPECT_ERROR"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let tests = r#"[
            {"id":"t1","function":"f","inputs":[1],"expected":1},
            {"id":"t1","function":"f","inputs":[2],"expected":2}
        ]"#;
        let err = CorpusEntry::from_parts("x", "fn f(a){return a;}", "fn f(a){return 0;}", tests, "r");
        assert!(matches!(err, Err(CorpusError::DuplicateTestId { .. })));
    }

    #[test]
    fn unsafe_ids_rejected() {
        let tests = r#"[{"id":"t,1","function":"f","inputs":[1],"expected":1}]"#;
        let err = CorpusEntry::from_parts("x", "fn f(a){return a;}", "fn f(a){return 0;}", tests, "r");
        assert!(matches!(err, Err(CorpusError::UnsafeId { .. })));
    }
}
