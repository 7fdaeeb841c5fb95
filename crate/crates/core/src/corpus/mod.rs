//! Chat-log ingestion and gold dialog annotations.
//!
//! A corpus file is JSON-lines, one object per utterance:
//! `{"id": str, "ts": int, "author": str, "text": str, "dialog": str|absent}`.
//! Logs are kept sorted by `(timestamp, id)`; all values are immutable after
//! construction.

mod text;

pub use text::{
    normalize_text, normalize_text_counted, tokenize_and_lemmatize, Lemmatizer, PlaceholderCounts,
    PLACEHOLDERS,
};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {reason}")]
    ParseLine { line: usize, reason: String },
    #[error("line {line}: invalid record: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("duplicate utterance id {id:?} (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("utterances missing gold dialog annotation: {}", ids.join(", "))]
    IncompleteAnnotation { ids: Vec<String> },
    #[error("partition does not cover the log: {0}")]
    PartitionCoverage(String),
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    /// Epoch seconds, UTC. Always >= 0.
    pub timestamp: i64,
    pub author: String,
    pub raw_text: String,
    /// Lowercase lemmatized tokens; empty until [`ChatLog::preprocess`] runs.
    #[serde(default)]
    pub norm_tokens: Vec<String>,
    pub gold_dialog: Option<String>,
}

/// On-disk JSONL record. `text` carries raw text on ingest and normalized
/// text after preprocessing; the schema is the same in both directions.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    ts: i64,
    author: String,
    text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    dialog: Option<String>,
}

/// A full chat log, sorted by `(timestamp, id)` with lexicographic id ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatLog {
    utterances: Vec<Utterance>,
    pub project: String,
}

impl ChatLog {
    /// Builds a log from utterances, sorting into canonical order and
    /// checking id uniqueness and field validity.
    pub fn new(mut utterances: Vec<Utterance>, project: &str) -> Result<Self, CorpusError> {
        for (i, u) in utterances.iter().enumerate() {
            validate_utterance(u, i + 1)?;
        }
        let mut seen = HashSet::new();
        for (i, u) in utterances.iter().enumerate() {
            if !seen.insert(u.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    id: u.id.clone(),
                    line: i + 1,
                });
            }
        }
        utterances.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        Ok(Self {
            utterances,
            project: project.to_string(),
        })
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Position of an utterance id in canonical log order.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.utterances.iter().position(|u| u.id == id)
    }

    /// Normalizes every raw text and fills `norm_tokens`. Placeholder
    /// replacement counts are accumulated across the whole log.
    pub fn preprocess(&mut self) -> PlaceholderCounts {
        self.preprocess_with(&Lemmatizer::default())
    }

    pub fn preprocess_with(&mut self, lemmatizer: &Lemmatizer) -> PlaceholderCounts {
        let mut counts = PlaceholderCounts::default();
        for u in &mut self.utterances {
            let (norm, c) = normalize_text_counted(&u.raw_text);
            counts.add(&c);
            u.norm_tokens = tokenize_and_lemmatize(&norm, lemmatizer);
        }
        counts
    }

    /// Reads a JSON-lines corpus file. Utterances come back sorted by
    /// `(timestamp, id)`; `gold_dialog` is filled where the record has one.
    pub fn ingest_jsonl(path: &Path) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path)?;
        let project = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string());
        let mut utterances = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| CorpusError::ParseLine {
                    line: lineno,
                    reason: e.to_string(),
                })?;
            if let Some(prev) = seen.insert(rec.id.clone(), lineno) {
                let _ = prev;
                return Err(CorpusError::DuplicateId {
                    id: rec.id,
                    line: lineno,
                });
            }
            let u = Utterance {
                id: rec.id,
                timestamp: rec.ts,
                author: rec.author,
                raw_text: rec.text,
                norm_tokens: Vec::new(),
                gold_dialog: rec.dialog,
            };
            validate_utterance(&u, lineno)?;
            utterances.push(u);
        }
        utterances.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        Ok(Self {
            utterances,
            project,
        })
    }

    /// Writes the log back out as JSON-lines. `normalized` selects whether
    /// the `text` field carries normalized or raw text.
    pub fn write_jsonl<W: Write>(&self, mut out: W, normalized: bool) -> Result<(), CorpusError> {
        for u in &self.utterances {
            let text = if normalized {
                normalize_text(&u.raw_text)
            } else {
                u.raw_text.clone()
            };
            let rec = Record {
                id: u.id.clone(),
                ts: u.timestamp,
                author: u.author.clone(),
                text,
                dialog: u.gold_dialog.clone(),
            };
            let json = serde_json::to_string(&rec).expect("record serialization");
            writeln!(out, "{json}")?;
        }
        Ok(())
    }

    /// Groups utterances by their gold dialog labels.
    pub fn partition_from_gold(&self) -> Result<Partition, CorpusError> {
        let missing: Vec<String> = self
            .utterances
            .iter()
            .filter(|u| u.gold_dialog.is_none())
            .map(|u| u.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(CorpusError::IncompleteAnnotation { ids: missing });
        }
        let assignments: BTreeMap<String, String> = self
            .utterances
            .iter()
            .map(|u| (u.id.clone(), u.gold_dialog.clone().unwrap()))
            .collect();
        Partition::from_assignments(self, &assignments)
    }
}

fn validate_utterance(u: &Utterance, line: usize) -> Result<(), CorpusError> {
    if u.id.is_empty() {
        return Err(CorpusError::InvalidRecord {
            line,
            reason: "empty id".into(),
        });
    }
    if u.timestamp < 0 {
        return Err(CorpusError::InvalidRecord {
            line,
            reason: format!("negative timestamp {} for {:?}", u.timestamp, u.id),
        });
    }
    if u.author.is_empty() {
        return Err(CorpusError::InvalidRecord {
            line,
            reason: format!("empty author for {:?}", u.id),
        });
    }
    Ok(())
}

/// One conversation: a non-empty ordered set of utterance ids, in log order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialog {
    pub dialog_id: String,
    pub member_ids: Vec<String>,
}

impl Dialog {
    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }

    pub fn member_set(&self) -> BTreeSet<&str> {
        self.member_ids.iter().map(String::as_str).collect()
    }
}

/// A set of disjoint dialogs exactly covering a chat log.
///
/// Construction always goes through a log so that member order inside each
/// dialog follows log order and dialogs are listed by their earliest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub dialogs: Vec<Dialog>,
    pub log_ref: String,
}

impl Partition {
    /// Builds a canonical partition from a complete id -> dialog-id map.
    ///
    /// Errors unless the assignment keys are exactly the utterance ids of
    /// `log` (total cover; disjointness is structural for a map).
    pub fn from_assignments(
        log: &ChatLog,
        assignments: &BTreeMap<String, String>,
    ) -> Result<Self, CorpusError> {
        let log_ids: BTreeSet<&str> = log.utterances.iter().map(|u| u.id.as_str()).collect();
        let assigned: BTreeSet<&str> = assignments.keys().map(String::as_str).collect();
        if log_ids != assigned {
            let missing: Vec<&&str> = log_ids.difference(&assigned).take(5).collect();
            let extra: Vec<&&str> = assigned.difference(&log_ids).take(5).collect();
            let mut msg = String::new();
            if !missing.is_empty() {
                let _ = write!(msg, "unassigned utterances {missing:?}");
            }
            if !extra.is_empty() {
                if !msg.is_empty() {
                    msg.push_str("; ");
                }
                let _ = write!(msg, "assignments for unknown utterances {extra:?}");
            }
            return Err(CorpusError::PartitionCoverage(msg));
        }
        // Walk the log in order so members and dialogs both come out in
        // first-appearance order.
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<&str, Vec<String>> = HashMap::new();
        for u in &log.utterances {
            let label = assignments.get(&u.id).unwrap();
            if !groups.contains_key(label.as_str()) {
                order.push(label.clone());
            }
            groups.entry(label).or_default().push(u.id.clone());
        }
        let dialogs = order
            .iter()
            .map(|label| Dialog {
                dialog_id: label.clone(),
                member_ids: groups.remove(label.as_str()).unwrap(),
            })
            .collect();
        Ok(Self {
            dialogs,
            log_ref: log.project.clone(),
        })
    }

    pub fn total_utterances(&self) -> usize {
        self.dialogs.iter().map(Dialog::len).sum()
    }

    /// Map from utterance id to the index of its dialog.
    pub fn membership(&self) -> HashMap<&str, usize> {
        let mut m = HashMap::new();
        for (i, d) in self.dialogs.iter().enumerate() {
            for id in &d.member_ids {
                m.insert(id.as_str(), i);
            }
        }
        m
    }

    /// Flat id -> dialog-id assignment view.
    pub fn assignments(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for d in &self.dialogs {
            for id in &d.member_ids {
                m.insert(id.clone(), d.dialog_id.clone());
            }
        }
        m
    }
}

/// Dialog ids whose token stream is more than half placeholder tokens.
///
/// This is the optional exclusion filter for placeholder-heavy dialogs;
/// language and typo detection are out of scope.
pub fn placeholder_heavy_dialogs(log: &ChatLog, partition: &Partition) -> Vec<String> {
    let by_id: HashMap<&str, &Utterance> =
        log.utterances.iter().map(|u| (u.id.as_str(), u)).collect();
    partition
        .dialogs
        .iter()
        .filter(|d| {
            let mut total = 0usize;
            let mut placeholders = 0usize;
            for id in &d.member_ids {
                if let Some(u) = by_id.get(id.as_str()) {
                    total += u.norm_tokens.len();
                    placeholders += u
                        .norm_tokens
                        .iter()
                        .filter(|t| PLACEHOLDERS.contains(&t.as_str()))
                        .count();
                }
            }
            total > 0 && placeholders * 2 > total
        })
        .map(|d| d.dialog_id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write as _;

    fn utt(id: &str, ts: i64, author: &str, text: &str, dialog: Option<&str>) -> Utterance {
        Utterance {
            id: id.into(),
            timestamp: ts,
            author: author.into(),
            raw_text: text.into(),
            norm_tokens: Vec::new(),
            gold_dialog: dialog.map(Into::into),
        }
    }

    fn write_temp(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn ingest_sorts_by_timestamp_then_id() {
        let f = write_temp(&[
            r#"{"id":"u1","ts":10,"author":"a","text":"later"}"#,
            r#"{"id":"u2","ts":5,"author":"b","text":"earlier"}"#,
        ]);
        let log = ChatLog::ingest_jsonl(f.path()).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.utterances()[0].timestamp, 5);
        assert_eq!(log.utterances()[1].timestamp, 10);
    }

    #[test]
    fn ingest_breaks_timestamp_ties_by_id() {
        let f = write_temp(&[
            r#"{"id":"z","ts":5,"author":"a","text":"x"}"#,
            r#"{"id":"a","ts":5,"author":"b","text":"y"}"#,
        ]);
        let log = ChatLog::ingest_jsonl(f.path()).unwrap();
        assert_eq!(log.utterances()[0].id, "a");
        assert_eq!(log.utterances()[1].id, "z");
    }

    #[test]
    fn ingest_rejects_duplicate_id() {
        let f = write_temp(&[
            r#"{"id":"u1","ts":1,"author":"a","text":"x"}"#,
            r#"{"id":"u1","ts":2,"author":"b","text":"y"}"#,
        ]);
        let err = ChatLog::ingest_jsonl(f.path()).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { ref id, .. } if id == "u1"));
    }

    #[test]
    fn ingest_empty_file_gives_empty_log() {
        let f = write_temp(&[]);
        let log = ChatLog::ingest_jsonl(f.path()).unwrap();
        assert!(log.is_empty());
    }

    #[test]
    fn ingest_names_bad_line() {
        let f = write_temp(&[
            r#"{"id":"u1","ts":1,"author":"a","text":"x"}"#,
            r#"{"id":"u2","#,
        ]);
        let err = ChatLog::ingest_jsonl(f.path()).unwrap_err();
        match err {
            CorpusError::ParseLine { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_negative_timestamp() {
        let f = write_temp(&[r#"{"id":"u1","ts":-3,"author":"a","text":"x"}"#]);
        assert!(matches!(
            ChatLog::ingest_jsonl(f.path()).unwrap_err(),
            CorpusError::InvalidRecord { line: 1, .. }
        ));
    }

    #[test]
    fn partition_from_gold_groups_by_label() {
        let log = ChatLog::new(
            vec![
                utt("u1", 1, "a", "x", Some("a")),
                utt("u2", 2, "b", "y", Some("a")),
                utt("u3", 3, "c", "z", Some("b")),
            ],
            "t",
        )
        .unwrap();
        let p = log.partition_from_gold().unwrap();
        assert_eq!(p.dialogs.len(), 2);
        assert_eq!(p.dialogs[0].member_ids, vec!["u1", "u2"]);
        assert_eq!(p.dialogs[1].member_ids, vec!["u3"]);
    }

    #[test]
    fn partition_from_gold_single_dialog() {
        let log = ChatLog::new(
            vec![
                utt("u1", 1, "a", "x", Some("d")),
                utt("u2", 2, "b", "y", Some("d")),
                utt("u3", 3, "c", "z", Some("d")),
            ],
            "t",
        )
        .unwrap();
        let p = log.partition_from_gold().unwrap();
        assert_eq!(p.dialogs.len(), 1);
        assert_eq!(p.dialogs[0].len(), 3);
    }

    #[test]
    fn partition_from_gold_reports_missing_ids() {
        let log = ChatLog::new(
            vec![
                utt("u1", 1, "a", "x", Some("d")),
                utt("u2", 2, "b", "y", None),
            ],
            "t",
        )
        .unwrap();
        match log.partition_from_gold().unwrap_err() {
            CorpusError::IncompleteAnnotation { ids } => assert_eq!(ids, vec!["u2"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn roundtrip_preserves_content() {
        let f = write_temp(&[
            r#"{"id":"u1","ts":3,"author":"a","text":"hello there","dialog":"d1"}"#,
            r#"{"id":"u2","ts":1,"author":"b","text":"hi"}"#,
        ]);
        let log = ChatLog::ingest_jsonl(f.path()).unwrap();
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf, false).unwrap();
        let f2 = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f2.path(), &buf).unwrap();
        let log2 = ChatLog::ingest_jsonl(f2.path()).unwrap();
        assert_eq!(log.utterances(), log2.utterances());
    }

    #[test]
    fn placeholder_heavy_filter_flags_only_heavy_dialogs() {
        let mut log = ChatLog::new(
            vec![
                utt("u1", 1, "a", "see https://x.com and a@b.com", Some("d1")),
                utt("u2", 2, "b", "plain words only here", Some("d2")),
            ],
            "t",
        )
        .unwrap();
        log.preprocess();
        let p = log.partition_from_gold().unwrap();
        let heavy = placeholder_heavy_dialogs(&log, &p);
        assert_eq!(heavy, vec!["d1".to_string()]);
    }

    proptest! {
        // Random label assignments always produce a disjoint, covering partition.
        #[test]
        fn prop_partition_invariants(labels in proptest::collection::vec(0u8..4, 1..24)) {
            let utts: Vec<Utterance> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| utt(&format!("u{i}"), i as i64, "a", "x", Some(&format!("d{l}"))))
                .collect();
            let n = utts.len();
            let log = ChatLog::new(utts, "t").unwrap();
            let p = log.partition_from_gold().unwrap();
            let mut seen = HashSet::new();
            for d in &p.dialogs {
                prop_assert!(!d.is_empty());
                for id in &d.member_ids {
                    prop_assert!(seen.insert(id.clone()), "dialogs overlap on {id}");
                }
            }
            prop_assert_eq!(seen.len(), n);
        }

        // Serialize-then-ingest is the identity on log content.
        #[test]
        fn prop_jsonl_roundtrip(n in 0usize..12, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let utts: Vec<Utterance> = (0..n)
                .map(|i| {
                    utt(
                        &format!("u{i}"),
                        rng.gen_range(0..50),
                        &format!("a{}", rng.gen_range(0..3)),
                        "some text",
                        if rng.gen_bool(0.5) { Some("d") } else { None },
                    )
                })
                .collect();
            let log = ChatLog::new(utts, "t").unwrap();
            let mut buf = Vec::new();
            log.write_jsonl(&mut buf, false).unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            std::fs::write(f.path(), &buf).unwrap();
            let log2 = ChatLog::ingest_jsonl(f.path()).unwrap();
            prop_assert_eq!(log.utterances(), log2.utterances());
        }
    }
}
