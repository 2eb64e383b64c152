//! Timestamped document corpora and daily scanned-document totals.
//!
//! Corpora are JSON-lines files, one object per line with exactly the keys
//! `id`, `date` and `text`. Dates are calendar days (`YYYY-MM-DD`); a
//! trailing time of day (`2016-05-01T13:45:00Z`, `2016-05-01 13:45`) is
//! accepted and truncated to the day. Totals are CSV files with the header
//! `date,count`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("corpus contains no documents")]
    Empty,
    #[error("invalid date range: {first} is after {last}")]
    InvertedRange { first: NaiveDate, last: NaiveDate },
    #[error("daily totals missing day {0}")]
    MissingDay(NaiveDate),
    #[error("line {line}: daily total for {date} must be positive, got {count}")]
    NonPositiveCount {
        line: usize,
        date: NaiveDate,
        count: i64,
    },
}

/// Parse a calendar day, truncating any time-of-day suffix.
pub fn parse_day(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let day = match raw.char_indices().nth(10) {
        Some((idx, c)) if c == 'T' || c == 't' || c == ' ' => &raw[..idx],
        Some(_) => return None,
        None => raw,
    };
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

/// Inclusive range of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    first: NaiveDate,
    last: NaiveDate,
}

impl DateRange {
    pub fn new(first: NaiveDate, last: NaiveDate) -> Result<Self, CorpusError> {
        if first > last {
            return Err(CorpusError::InvertedRange { first, last });
        }
        Ok(Self { first, last })
    }

    pub fn first(&self) -> NaiveDate {
        self.first
    }

    pub fn last(&self) -> NaiveDate {
        self.last
    }

    /// Number of days in the range, `t_max`.
    pub fn days(&self) -> usize {
        (self.last - self.first).num_days() as usize + 1
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.first <= day && day <= self.last
    }

    /// Zero-based day index, `t - 1`.
    pub fn index_of(&self, day: NaiveDate) -> Option<usize> {
        self.contains(day)
            .then(|| (day - self.first).num_days() as usize)
    }

    pub fn day(&self, index: usize) -> NaiveDate {
        self.first + Days::new(index as u64)
    }

    pub fn iter(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.days()).map(|i| self.day(i))
    }
}

/// One timestamped publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    pub date: NaiveDate,
    pub text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    id: String,
    date: String,
    text: String,
}

/// An ordered, immutable collection of documents covering a contiguous day range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentSet {
    docs: Vec<Document>,
    range: DateRange,
}

impl DocumentSet {
    /// Build a set whose range spans the earliest to the latest document.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let first = docs.iter().map(|d| d.date).min().ok_or(CorpusError::Empty)?;
        let last = docs.iter().map(|d| d.date).max().ok_or(CorpusError::Empty)?;
        check_ids(&docs)?;
        Ok(Self {
            docs,
            range: DateRange::new(first, last)?,
        })
    }

    /// Build a set over an explicit analysis range. Documents outside the
    /// range are dropped; the number dropped is returned alongside.
    pub fn within_range(
        docs: Vec<Document>,
        range: DateRange,
    ) -> Result<(Self, usize), CorpusError> {
        check_ids(&docs)?;
        let before = docs.len();
        let docs: Vec<Document> = docs.into_iter().filter(|d| range.contains(d.date)).collect();
        let dropped = before - docs.len();
        if docs.is_empty() {
            return Err(CorpusError::Empty);
        }
        Ok((Self { docs, range }, dropped))
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn range(&self) -> DateRange {
        self.range
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Number of documents per day, `x_t`.
    pub fn daily_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.range.days()];
        for doc in &self.docs {
            let t = self.range.index_of(doc.date).expect("document outside range");
            counts[t] += 1;
        }
        counts
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for doc in &self.docs {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn check_ids(docs: &[Document]) -> Result<(), CorpusError> {
    let mut seen = HashSet::with_capacity(docs.len());
    for doc in docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(CorpusError::DuplicateId(doc.id.clone()));
        }
    }
    Ok(())
}

/// Parse JSON-lines documents. Blank lines are skipped; line numbers are 1-based.
pub fn parse_documents<R: BufRead>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        if raw.id.is_empty() {
            return Err(CorpusError::Malformed {
                line: lineno,
                message: "empty document id".into(),
            });
        }
        let date = parse_day(&raw.date).ok_or_else(|| CorpusError::Malformed {
            line: lineno,
            message: format!("invalid date {:?}", raw.date),
        })?;
        docs.push(Document {
            id: raw.id,
            date,
            text: raw.text,
        });
    }
    Ok(docs)
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Load a corpus file; the date range spans the earliest to the latest document.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<DocumentSet, CorpusError> {
    let docs = parse_documents(open(path.as_ref())?)?;
    DocumentSet::from_documents(docs)
}

/// Load a corpus restricted to `range`, returning the count of dropped documents.
pub fn load_corpus_in_range(
    path: impl AsRef<Path>,
    range: DateRange,
) -> Result<(DocumentSet, usize), CorpusError> {
    let docs = parse_documents(open(path.as_ref())?)?;
    DocumentSet::within_range(docs, range)
}

/// Total number of documents scanned by the monitoring system on each day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyTotals {
    range: DateRange,
    counts: Vec<u64>,
}

impl DailyTotals {
    pub fn new(range: DateRange, counts: Vec<u64>) -> Result<Self, CorpusError> {
        if counts.len() != range.days() {
            return Err(CorpusError::MissingDay(range.day(counts.len().min(range.days()))));
        }
        if let Some(t) = counts.iter().position(|&c| c == 0) {
            return Err(CorpusError::NonPositiveCount {
                line: 0,
                date: range.day(t),
                count: 0,
            });
        }
        Ok(Self { range, counts })
    }

    pub fn range(&self) -> DateRange {
        self.range
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Parse `date,count` rows. Rows outside `range` are ignored.
pub fn parse_daily_totals<R: BufRead>(
    reader: R,
    range: DateRange,
) -> Result<DailyTotals, CorpusError> {
    let mut counts: Vec<Option<u64>> = vec![None; range.days()];
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.replace(' ', "") == "date,count" {
                continue;
            }
            return Err(CorpusError::Malformed {
                line: lineno,
                message: "expected header `date,count`".into(),
            });
        }
        let malformed = |message: String| CorpusError::Malformed {
            line: lineno,
            message,
        };
        let (date, count) = line
            .split_once(',')
            .ok_or_else(|| malformed("expected `date,count`".into()))?;
        let date = parse_day(date).ok_or_else(|| malformed(format!("invalid date {date:?}")))?;
        let count: i64 = count
            .trim()
            .parse()
            .map_err(|_| malformed(format!("invalid count {:?}", count.trim())))?;
        if count <= 0 {
            return Err(CorpusError::NonPositiveCount {
                line: lineno,
                date,
                count,
            });
        }
        if let Some(t) = range.index_of(date) {
            if counts[t].replace(count as u64).is_some() {
                return Err(malformed(format!("repeated date {date}")));
            }
        }
    }
    let counts = counts
        .into_iter()
        .enumerate()
        .map(|(t, c)| c.ok_or(CorpusError::MissingDay(range.day(t))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DailyTotals { range, counts })
}

pub fn load_daily_totals(
    path: impl AsRef<Path>,
    range: DateRange,
) -> Result<DailyTotals, CorpusError> {
    parse_daily_totals(open(path.as_ref())?, range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn loads_three_documents_over_three_days() {
        let src = r#"{"id":"a","date":"2016-05-01","text":"x"}
{"id":"b","date":"2016-05-01","text":"y"}
{"id":"c","date":"2016-05-03","text":"z"}
"#;
        let set = DocumentSet::from_documents(parse_documents(src.as_bytes()).unwrap()).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.range().days(), 3);
        assert_eq!(set.daily_counts(), vec![2, 0, 1]);
        assert_eq!(set.docs()[2].id, "c");
    }

    #[test]
    fn duplicate_id_is_named() {
        let src = r#"{"id":"a1","date":"2016-05-01","text":"x"}
{"id":"a1","date":"2016-05-02","text":"y"}"#;
        let err = DocumentSet::from_documents(parse_documents(src.as_bytes()).unwrap()).unwrap_err();
        assert!(matches!(&err, CorpusError::DuplicateId(id) if id == "a1"));
        assert!(err.to_string().contains("a1"));
    }

    #[test]
    fn empty_file_is_an_error() {
        let docs = parse_documents("".as_bytes()).unwrap();
        assert!(matches!(DocumentSet::from_documents(docs), Err(CorpusError::Empty)));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let src = "{\"id\":\"a\",\"date\":\"2016-05-01\",\"text\":\"x\"}\n{\"id\":\"b\",\"date\":\"2016-13-01\",\"text\":\"y\"}\n";
        match parse_documents(src.as_bytes()) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let extra = r#"{"id":"a","date":"2016-05-01","text":"x","lang":"en"}"#;
        assert!(matches!(
            parse_documents(extra.as_bytes()),
            Err(CorpusError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn time_of_day_is_truncated() {
        assert_eq!(parse_day("2016-05-01T23:59:59Z"), Some(day("2016-05-01")));
        assert_eq!(parse_day("2016-05-01 08:00"), Some(day("2016-05-01")));
        assert_eq!(parse_day("2016-05-01x"), None);
        assert_eq!(parse_day("2016-02-30"), None);
    }

    #[test]
    fn out_of_range_documents_are_dropped_and_counted() {
        let docs = vec![
            Document { id: "a".into(), date: day("2016-04-30"), text: String::new() },
            Document { id: "b".into(), date: day("2016-05-02"), text: String::new() },
        ];
        let range = DateRange::new(day("2016-05-01"), day("2016-05-31")).unwrap();
        let (set, dropped) = DocumentSet::within_range(docs, range).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(set.range().days(), 31);
        assert_eq!(set.daily_counts()[1], 1);
    }

    #[test]
    fn totals_cover_may() {
        let mut src = String::from("date,count\n");
        for d in 1..=31 {
            src.push_str(&format!("2016-05-{d:02},{}\n", 100 + d));
        }
        let range = DateRange::new(day("2016-05-01"), day("2016-05-31")).unwrap();
        let totals = parse_daily_totals(src.as_bytes(), range).unwrap();
        assert_eq!(totals.len(), 31);
        assert_eq!(totals.counts()[0], 101);
    }

    #[test]
    fn nonpositive_total_is_rejected() {
        let src = "date,count\n2016-05-01,3\n2016-05-02,0\n";
        let range = DateRange::new(day("2016-05-01"), day("2016-05-02")).unwrap();
        assert!(matches!(
            parse_daily_totals(src.as_bytes(), range),
            Err(CorpusError::NonPositiveCount { line: 3, count: 0, .. })
        ));
    }

    #[test]
    fn missing_total_day_is_named() {
        let src = "date,count\n2016-05-03,3\n2016-05-05,4\n";
        let range = DateRange::new(day("2016-05-03"), day("2016-05-05")).unwrap();
        match parse_daily_totals(src.as_bytes(), range) {
            Err(CorpusError::MissingDay(d)) => assert_eq!(d, day("2016-05-04")),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_docs() -> impl Strategy<Value = Vec<Document>> {
        prop::collection::vec((0u64..60, "[a-zA-Z ,.!é]{0,30}"), 1..40).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (offset, text))| Document {
                    id: format!("doc-{i}"),
                    date: day("2016-05-01") + Days::new(offset),
                    text,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(docs in arb_docs()) {
            let set = DocumentSet::from_documents(docs).unwrap();
            let mut buf = Vec::new();
            set.write_jsonl(&mut buf).unwrap();
            let again = DocumentSet::from_documents(parse_documents(buf.as_slice()).unwrap()).unwrap();
            prop_assert_eq!(&again, &set);
            let counts = set.daily_counts();
            prop_assert_eq!(counts.iter().sum::<u64>(), set.len() as u64);
        }
    }
}
