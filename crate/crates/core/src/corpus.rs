//! Labelled text datasets: CSV ingestion, tokenization, stratified splits and
//! construction of augmented training sets.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{AugmentError, Augmenter};
use crate::rng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("insufficient data: requested {requested} records, {available} available")]
    InsufficientData { requested: usize, available: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("augmenting record {record_id}: {source}")]
    Augment {
        record_id: u64,
        #[source]
        source: AugmentError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    Augmented { method: String, parent_id: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: u64,
    pub text: String,
    pub label: usize,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    Binary,
    Categorical,
}

impl TaskKind {
    pub fn for_label_count(n: usize) -> Self {
        if n <= 2 {
            TaskKind::Binary
        } else {
            TaskKind::Categorical
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<Document>,
    pub label_names: Vec<String>,
    pub task_kind: TaskKind,
}

impl Dataset {
    /// Builds a dataset after checking label range, id uniqueness and that
    /// every augmented record points at a parent present in the set.
    pub fn new(records: Vec<Document>, label_names: Vec<String>) -> Result<Self, CorpusError> {
        if label_names.is_empty() {
            return Err(CorpusError::Invalid("no label names".into()));
        }
        let mut ids = HashSet::with_capacity(records.len());
        for doc in &records {
            if doc.label >= label_names.len() {
                return Err(CorpusError::Invalid(format!(
                    "record {} has label {} but only {} label names",
                    doc.id,
                    doc.label,
                    label_names.len()
                )));
            }
            if !ids.insert(doc.id) {
                return Err(CorpusError::Invalid(format!("duplicate id {}", doc.id)));
            }
        }
        for doc in &records {
            if let Origin::Augmented { parent_id, .. } = &doc.origin {
                if !ids.contains(parent_id) {
                    return Err(CorpusError::Invalid(format!(
                        "record {} references missing parent {}",
                        doc.id, parent_id
                    )));
                }
            }
        }
        let task_kind = TaskKind::for_label_count(label_names.len());
        Ok(Dataset { records, label_names, task_kind })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|d| d.label).collect()
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for d in &self.records {
            counts[d.label] += 1;
        }
        counts
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> + Clone {
        self.records.iter().map(|d| d.text.as_str())
    }

    fn with_records(&self, records: Vec<Document>) -> Dataset {
        Dataset {
            records,
            label_names: self.label_names.clone(),
            task_kind: self.task_kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl From<usize> for ColumnRef {
    fn from(i: usize) -> Self {
        ColumnRef::Index(i)
    }
}

impl From<&str> for ColumnRef {
    fn from(s: &str) -> Self {
        ColumnRef::Name(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub text: ColumnRef,
    pub label: ColumnRef,
    #[serde(default = "default_true")]
    pub has_header: bool,
    /// Explicit label order; labels are otherwise numbered in first-seen order.
    #[serde(default)]
    pub label_order: Option<Vec<String>>,
}

fn default_true() -> bool {
    true
}

impl ColumnSpec {
    pub fn named(text: &str, label: &str) -> Self {
        ColumnSpec {
            text: text.into(),
            label: label.into(),
            has_header: true,
            label_order: None,
        }
    }

    pub fn indexed(text: usize, label: usize, has_header: bool) -> Self {
        ColumnSpec {
            text: text.into(),
            label: label.into(),
            has_header,
            label_order: None,
        }
    }

    pub fn with_label_order(mut self, order: Vec<String>) -> Self {
        self.label_order = Some(order);
        self
    }
}

fn resolve_column(col: &ColumnRef, header: Option<&csv::StringRecord>) -> Result<usize, CorpusError> {
    match col {
        ColumnRef::Index(i) => {
            if let Some(h) = header {
                if *i >= h.len() {
                    return Err(CorpusError::MissingColumn(i.to_string()));
                }
            }
            Ok(*i)
        }
        ColumnRef::Name(name) => {
            let header = header.ok_or_else(|| CorpusError::MissingColumn(name.clone()))?;
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| CorpusError::MissingColumn(name.clone()))
        }
    }
}

/// Reads a UTF-8, RFC 4180 CSV file into a dataset of original documents.
///
/// Row numbers in errors are 1-based line numbers in the file.
pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSpec) -> Result<Dataset, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .from_path(path.as_ref())?;
    let header = if schema.has_header {
        Some(reader.headers()?.clone())
    } else {
        None
    };
    let text_col = resolve_column(&schema.text, header.as_ref())?;
    let label_col = resolve_column(&schema.label, header.as_ref())?;

    let mut label_names: Vec<String> = schema.label_order.clone().unwrap_or_default();
    let mut label_index: HashMap<String, usize> =
        label_names.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let explicit = schema.label_order.is_some();

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let text = record.get(text_col).ok_or_else(|| CorpusError::MalformedRow {
            row,
            reason: format!("no field {text_col}"),
        })?;
        let label = record.get(label_col).ok_or_else(|| CorpusError::MalformedRow {
            row,
            reason: format!("no field {label_col}"),
        })?;
        if text.trim().is_empty() {
            return Err(CorpusError::MalformedRow { row, reason: "empty text".into() });
        }
        let label = label.trim();
        if label.is_empty() {
            return Err(CorpusError::MalformedRow { row, reason: "empty label".into() });
        }
        let idx = match label_index.get(label) {
            Some(&i) => i,
            None if explicit => {
                return Err(CorpusError::MalformedRow {
                    row,
                    reason: format!("label {label:?} not in explicit label order"),
                })
            }
            None => {
                label_names.push(label.to_string());
                label_index.insert(label.to_string(), label_names.len() - 1);
                label_names.len() - 1
            }
        };
        records.push(Document {
            id: records.len() as u64,
            text: text.to_string(),
            label: idx,
            origin: Origin::Original,
        });
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    Dataset::new(records, label_names)
}

/// Writes a `text,label` CSV with a header, labels by name.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["text", "label"])?;
    for doc in &dataset.records {
        w.write_record([doc.text.as_str(), dataset.label_names[doc.label].as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one JSON document per line.
pub fn write_jsonl(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut out = BufWriter::new(File::create(path)?);
    for doc in &dataset.records {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSON-lines dataset. Without explicit names, labels are named by
/// their integer value.
pub fn read_jsonl(
    path: impl AsRef<Path>,
    label_names: Option<Vec<String>>,
) -> Result<Dataset, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRow {
            row: i as u64 + 1,
            reason: e.to_string(),
        })?;
        records.push(doc);
    }
    if records.is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    let names = match label_names {
        Some(n) => n,
        None => {
            let max = records.iter().map(|d| d.label).max().unwrap_or(0);
            (0..=max).map(|i| i.to_string()).collect()
        }
    };
    Dataset::new(records, names)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Lowercases, splits on Unicode whitespace and trims non-alphanumeric
/// characters from both ends of each token. Tokens left empty are dropped.
pub fn tokenize(text: &str) -> TokenizedDoc {
    let tokens = text
        .to_lowercase()
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    TokenizedDoc { tokens }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_size: usize,
    pub val_size: usize,
    pub seed: u64,
}

/// Largest-remainder apportionment of `total` across classes proportional to
/// `weights`, never exceeding `caps`.
fn apportion(total: usize, weights: &[usize], caps: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let mut alloc = vec![0usize; weights.len()];
    if total == 0 || sum == 0 {
        return alloc;
    }
    let mut remainders = Vec::with_capacity(weights.len());
    for (c, &w) in weights.iter().enumerate() {
        let exact = total as f64 * w as f64 / sum as f64;
        let base = (exact.floor() as usize).min(caps[c]);
        alloc[c] = base;
        remainders.push((exact - exact.floor(), c));
    }
    // Largest fractional part first; ties to the lower class index.
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = remainders.iter().map(|&(_, c)| c).collect();
    // Spare capacity after the first pass, if caps bound some classes.
    order.extend(0..weights.len());
    for c in order {
        if assigned == total {
            break;
        }
        if alloc[c] < caps[c] {
            alloc[c] += 1;
            assigned += 1;
        }
    }
    while assigned < total {
        let mut progressed = false;
        for c in 0..weights.len() {
            if assigned < total && alloc[c] < caps[c] {
                alloc[c] += 1;
                assigned += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    alloc
}

/// Stratified, seeded split into disjoint train and validation sets.
///
/// Both outputs keep the records in their original relative order.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), CorpusError> {
    let requested = spec.train_size + spec.val_size;
    if requested > dataset.len() {
        return Err(CorpusError::InsufficientData {
            requested,
            available: dataset.len(),
        });
    }
    let k = dataset.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, d) in dataset.records.iter().enumerate() {
        by_class[d.label].push(i);
    }
    let mut rng = rng::labeled_stream(spec.seed, "split");
    for group in &mut by_class {
        group.shuffle(&mut rng);
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let train_alloc = apportion(spec.train_size, &counts, &counts);
    let remaining: Vec<usize> = counts.iter().zip(&train_alloc).map(|(n, t)| n - t).collect();
    let val_alloc = apportion(spec.val_size, &counts, &remaining);

    let mut train_idx = Vec::with_capacity(spec.train_size);
    let mut val_idx = Vec::with_capacity(spec.val_size);
    for (c, group) in by_class.iter().enumerate() {
        train_idx.extend_from_slice(&group[..train_alloc[c]]);
        val_idx.extend_from_slice(&group[train_alloc[c]..train_alloc[c] + val_alloc[c]]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset.records[i].clone()).collect();
    Ok((dataset.with_records(pick(&train_idx)), dataset.with_records(pick(&val_idx))))
}

/// Returns the originals plus `n_aug` augmented copies of each, laid out as
/// `orig_0, aug_0_1..aug_0_n, orig_1, ...`.
///
/// Copy `j` of record `id` is produced from the stream `seed ^ id`, so the
/// result does not depend on how records are scheduled across threads.
pub fn build_augmented(
    train: &Dataset,
    augmenter: &dyn Augmenter,
    n_aug: usize,
    seed: u64,
) -> Result<Dataset, CorpusError> {
    if n_aug == 0 {
        return Ok(train.clone());
    }
    let copies: Vec<Vec<String>> = train
        .records
        .par_iter()
        .map(|doc| {
            let mut stream = rng::record_stream(seed, doc.id);
            (0..n_aug)
                .map(|j| augmenter.augment_copy(&doc.text, j, &mut stream))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| CorpusError::Augment { record_id: doc.id, source })
        })
        .collect::<Result<_, _>>()?;

    let mut next_id = train.records.iter().map(|d| d.id).max().map_or(0, |m| m + 1);
    let mut records = Vec::with_capacity(train.len() * (n_aug + 1));
    for (doc, texts) in train.records.iter().zip(copies) {
        records.push(doc.clone());
        for text in texts {
            records.push(Document {
                id: next_id,
                text,
                label: doc.label,
                origin: Origin::Augmented {
                    method: augmenter.name().to_string(),
                    parent_id: doc.id,
                },
            });
            next_id += 1;
        }
    }
    Dataset::new(records, train.label_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::IdentityAugmenter;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn toy(n: usize, k: usize) -> Dataset {
        let records = (0..n)
            .map(|i| Document {
                id: i as u64,
                text: format!("doc number {i}"),
                label: i % k,
                origin: Origin::Original,
            })
            .collect();
        Dataset::new(records, (0..k).map(|c| format!("c{c}")).collect()).unwrap()
    }

    #[test]
    fn two_row_csv() {
        let f = write_tmp("text,label\n\"good, film\",pos\nbad film,neg\n");
        let ds = load_csv(f.path(), &ColumnSpec::named("text", "label")).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.label_names, vec!["pos", "neg"]);
        assert_eq!(ds.records[0].text, "good, film");
        assert_eq!(ds.task_kind, TaskKind::Binary);
    }

    #[test]
    fn four_class_csv_is_categorical() {
        let f = write_tmp("3,a\n4,b\n2,c\n1,d\n3,e\n");
        let ds = load_csv(f.path(), &ColumnSpec::indexed(1, 0, false)).unwrap();
        assert_eq!(ds.label_names.len(), 4);
        assert_eq!(ds.task_kind, TaskKind::Categorical);
        assert_eq!(ds.labels(), vec![0, 1, 2, 3, 0]);
    }

    #[test]
    fn explicit_label_order() {
        let f = write_tmp("text,label\nx,neg\ny,pos\n");
        let spec = ColumnSpec::named("text", "label").with_label_order(vec!["pos".into(), "neg".into()]);
        let ds = load_csv(f.path(), &spec).unwrap();
        assert_eq!(ds.labels(), vec![1, 0]);
    }

    #[test]
    fn empty_text_is_malformed() {
        let f = write_tmp("text,label\nfine,pos\n,neg\n");
        match load_csv(f.path(), &ColumnSpec::named("text", "label")) {
            Err(CorpusError::MalformedRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_empty_file() {
        let f = write_tmp("body,label\nx,pos\n");
        assert!(matches!(
            load_csv(f.path(), &ColumnSpec::named("text", "label")),
            Err(CorpusError::MissingColumn(c)) if c == "text"
        ));
        let f = write_tmp("text,label\n");
        assert!(matches!(
            load_csv(f.path(), &ColumnSpec::named("text", "label")),
            Err(CorpusError::EmptyFile)
        ));
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The dog barks.").tokens, vec!["the", "dog", "barks"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n").is_empty());
        assert_eq!(tokenize("Ünïcode\u{00a0}SPACE").tokens, vec!["ünïcode", "space"]);
    }

    #[test]
    fn dataset_rejects_bad_parent_and_duplicates() {
        let doc = |id, origin| Document { id, text: "t".into(), label: 0, origin };
        let names = vec!["a".to_string()];
        assert!(Dataset::new(vec![doc(0, Origin::Original), doc(0, Origin::Original)], names.clone()).is_err());
        let orphan = Origin::Augmented { method: "x".into(), parent_id: 9 };
        assert!(Dataset::new(vec![doc(1, orphan)], names).is_err());
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let ds = toy(20_000, 4);
        let (train, val) = split(&ds, &SplitSpec { train_size: 10_000, val_size: 10_000, seed: 1 }).unwrap();
        assert_eq!(train.len(), 10_000);
        assert_eq!(val.len(), 10_000);
        let ids: HashSet<u64> = train.records.iter().map(|d| d.id).collect();
        assert!(val.records.iter().all(|d| !ids.contains(&d.id)));
    }

    #[test]
    fn split_edge_cases() {
        let ds = toy(50, 2);
        let (train, val) = split(&ds, &SplitSpec { train_size: 0, val_size: 50, seed: 3 }).unwrap();
        assert!(train.is_empty());
        assert_eq!(val.len(), 50);
        assert!(matches!(
            split(&ds, &SplitSpec { train_size: 40, val_size: 11, seed: 3 }),
            Err(CorpusError::InsufficientData { requested: 51, available: 50 })
        ));
    }

    #[test]
    fn split_is_stratified_on_imbalanced_data() {
        let records = (0..1000)
            .map(|i| Document {
                id: i,
                text: "x".into(),
                label: if i % 10 == 0 { 1 } else { 0 },
                origin: Origin::Original,
            })
            .collect();
        let ds = Dataset::new(records, vec!["maj".into(), "min".into()]).unwrap();
        let (train, val) = split(&ds, &SplitSpec { train_size: 200, val_size: 300, seed: 9 }).unwrap();
        assert_eq!(train.label_counts(), vec![180, 20]);
        assert_eq!(val.label_counts(), vec![270, 30]);
    }

    #[test]
    fn identity_build_repeats_six_times() {
        let ds = toy(100, 3);
        let out = build_augmented(&ds, &IdentityAugmenter, 5, 4).unwrap();
        assert_eq!(out.len(), 600);
        for d in &out.records {
            if let Origin::Augmented { parent_id, method } = &d.origin {
                assert_eq!(method, "identity");
                assert_eq!(d.text, ds.records[*parent_id as usize].text);
            }
        }
        assert_eq!(build_augmented(&ds, &IdentityAugmenter, 0, 4).unwrap(), ds);
    }

    #[test]
    fn jsonl_round_trip() {
        let ds = build_augmented(&toy(5, 2), &IdentityAugmenter, 1, 0).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(&ds, f.path()).unwrap();
        let back = read_jsonl(f.path(), Some(ds.label_names.clone())).unwrap();
        assert_eq!(back, ds);
        let line = std::fs::read_to_string(f.path()).unwrap();
        assert!(line.starts_with(r#"{"id":0,"text":"doc number 0","label":0,"origin":"original"}"#));
    }
}
