//! Dataset serialization, summary statistics, and the automated error
//! breakdown.
//!
//! The canonical on-disk form is UTF-8 TSV with a header, LF endings, tab
//! separators, and no quoting; tabs and newlines inside text fields are
//! rejected at write time. Annotations and ground truths live in separate
//! files keyed by item id. External releases with different column layouts
//! are read through a small mapping file (see [`ColumnMapping`]).

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::aggregate::{AnnotatedItem, Annotation, ItemId, WorkerId};
use crate::error::{Error, Result};
use crate::kvfile;
use crate::metrics::wer;
use crate::textnorm::{normalize, Alphabet, NormalizedText};

const ANNOTATION_HEADER: &str = "item_id\tworker_id\ttext\tduration_s\tgolden";
const TRUTHS_HEADER: &str = "item_id\ttext";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Write a file via a temporary sibling and rename, so readers never see a
/// half-written output.
pub fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp~");
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(content.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

/// Read annotations from the canonical TSV format, grouping rows into
/// items in order of first appearance. Ground truths stay `None`; merge
/// them with [`attach_truths`].
pub fn read_annotations(path: &Path, alphabet: Alphabet) -> Result<Vec<AnnotatedItem>> {
    let content = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected header"))?;
    let columns = parse_header(header, path)?;

    let mut items: Vec<AnnotatedItem> = Vec::new();
    let mut index: BTreeMap<ItemId, usize> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(ItemId, WorkerId)> = BTreeSet::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns.len() {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} columns, found {}", columns.len(), fields.len()),
            ));
        }
        let get = |name: &str| -> Option<&str> {
            columns.iter().position(|c| c == name).map(|i| fields[i])
        };
        let item_id = ItemId::new(get("item_id").expect("validated header"));
        let worker_id = WorkerId::new(get("worker_id").expect("validated header"));
        if !seen_pairs.insert((item_id.clone(), worker_id.clone())) {
            return Err(parse_err(
                path,
                lineno,
                format!("duplicate annotation for item {item_id} by worker {worker_id}"),
            ));
        }
        let duration_seconds = match get("duration_s") {
            None | Some("") => None,
            Some(v) => Some(
                v.parse::<f64>()
                    .map_err(|_| parse_err(path, lineno, format!("bad duration `{v}`")))?,
            ),
        };
        let is_golden = match get("golden") {
            None | Some("") | Some("0") => false,
            Some("1") => true,
            Some(other) => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("bad golden flag `{other}`"),
                ))
            }
        };
        let annotation = Annotation {
            worker_id,
            text: normalize(get("text").expect("validated header"), alphabet),
            duration_seconds,
            is_golden,
        };
        let idx = *index.entry(item_id.clone()).or_insert_with(|| {
            items.push(AnnotatedItem::new(item_id.clone()));
            items.len() - 1
        });
        items[idx].annotations.push(annotation);
    }
    Ok(items)
}

fn parse_header(header: &str, path: &Path) -> Result<Vec<String>> {
    let columns: Vec<String> = header.split('\t').map(str::to_string).collect();
    for required in ["item_id", "worker_id", "text"] {
        if !columns.iter().any(|c| c == required) {
            return Err(parse_err(
                path,
                1,
                format!("header missing column `{required}`"),
            ));
        }
    }
    for c in &columns {
        if !matches!(
            c.as_str(),
            "item_id" | "worker_id" | "text" | "duration_s" | "golden"
        ) {
            return Err(parse_err(path, 1, format!("unknown column `{c}`")));
        }
    }
    Ok(columns)
}

fn check_text_writable(text: &str) -> Result<()> {
    if text.contains('\t') || text.contains('\n') || text.contains('\r') {
        return Err(Error::contract(format!(
            "text field contains a tab or newline and cannot be written: `{text}`"
        )));
    }
    Ok(())
}

/// Write annotations in the canonical TSV format. The raw (pre-
/// normalization) text is stored, so write-then-read round-trips.
pub fn write_annotations(items: &[AnnotatedItem], path: &Path) -> Result<()> {
    let mut out = String::from(ANNOTATION_HEADER);
    out.push('\n');
    for item in items {
        for ann in &item.annotations {
            check_text_writable(ann.text.original())?;
            check_text_writable(item.item_id.as_str())?;
            check_text_writable(ann.worker_id.as_str())?;
            let duration = ann
                .duration_seconds
                .map(|d| d.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                item.item_id,
                ann.worker_id,
                ann.text.original(),
                duration,
                if ann.is_golden { "1" } else { "0" },
            ));
        }
    }
    atomic_write(path, &out)
}

/// Read the ground-truth table (item_id, text).
pub fn read_truths(path: &Path, alphabet: Alphabet) -> Result<BTreeMap<ItemId, NormalizedText>> {
    let content = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected header"))?;
    if header != TRUTHS_HEADER {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{TRUTHS_HEADER}`"),
        ));
    }
    let mut truths = BTreeMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(path, lineno, "expected 2 columns"))?;
        if text.contains('\t') {
            return Err(parse_err(path, lineno, "expected 2 columns, found more"));
        }
        if truths
            .insert(ItemId::new(id), normalize(text, alphabet))
            .is_some()
        {
            return Err(parse_err(
                path,
                lineno,
                format!("duplicate ground truth for item {id}"),
            ));
        }
    }
    Ok(truths)
}

pub fn write_truths(items: &[AnnotatedItem], path: &Path) -> Result<()> {
    let mut out = String::from(TRUTHS_HEADER);
    out.push('\n');
    for item in items {
        if let Some(truth) = &item.ground_truth {
            check_text_writable(truth.original())?;
            out.push_str(&format!("{}\t{}\n", item.item_id, truth.original()));
        }
    }
    atomic_write(path, &out)
}

/// Attach ground truths to items in place; unknown ids in the truth table
/// are ignored, items without a truth stay `None`.
pub fn attach_truths(items: &mut [AnnotatedItem], truths: &BTreeMap<ItemId, NormalizedText>) {
    for item in items {
        if let Some(t) = truths.get(&item.item_id) {
            item.ground_truth = Some(t.clone());
        }
    }
}

/// Column layout of an external release, loaded from a `key: value`
/// mapping file. Keys: `item_id`, `worker_id`, `text` (required),
/// `duration_s`, `golden` (optional), `delimiter` (`tab`, `comma`,
/// `semicolon`, or a single character; default tab), `has_header`
/// (default true; when false, column values are 0-based indices).
#[derive(Debug, Clone)]
pub struct ColumnMapping {
    pub delimiter: u8,
    pub has_header: bool,
    pub item_id: String,
    /// Required for annotation files; a truths-only mapping may omit it.
    pub worker_id: Option<String>,
    pub text: String,
    pub duration_s: Option<String>,
    pub golden: Option<String>,
}

impl ColumnMapping {
    pub fn from_file(path: &Path) -> Result<Self> {
        let map = kvfile::read_kv_file(path)?;
        let delimiter = match map.get("delimiter").map(String::as_str) {
            None | Some("tab") => b'\t',
            Some("comma") => b',',
            Some("semicolon") => b';',
            Some(s) if s.len() == 1 => s.as_bytes()[0],
            Some(other) => {
                return Err(Error::contract(format!("mapping: bad delimiter `{other}`")))
            }
        };
        let has_header = match map.get("has_header").map(String::as_str) {
            None | Some("true") => true,
            Some("false") => false,
            Some(other) => {
                return Err(Error::contract(format!(
                    "mapping: bad has_header `{other}`"
                )))
            }
        };
        let require = |key: &str| -> Result<String> {
            map.get(key)
                .cloned()
                .ok_or_else(|| Error::contract(format!("mapping file missing key `{key}`")))
        };
        Ok(ColumnMapping {
            delimiter,
            has_header,
            item_id: require("item_id")?,
            worker_id: map.get("worker_id").cloned(),
            text: require("text")?,
            duration_s: map.get("duration_s").cloned(),
            golden: map.get("golden").cloned(),
        })
    }

    fn resolve(
        &self,
        headers: Option<&csv::StringRecord>,
        name: &str,
        path: &Path,
    ) -> Result<usize> {
        match headers {
            Some(h) => h
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| parse_err(path, 1, format!("column `{name}` not found in header"))),
            None => name
                .parse::<usize>()
                .map_err(|_| Error::contract(format!("mapping: `{name}` is not a column index"))),
        }
    }
}

/// Read an external annotation release through a column mapping. Quoted
/// CSV is handled; rows are grouped into items in order of first
/// appearance.
pub fn read_annotations_mapped(
    path: &Path,
    mapping: &ColumnMapping,
    alphabet: Alphabet,
) -> Result<Vec<AnnotatedItem>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter)
        .has_headers(mapping.has_header)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::contract(format!("{}: {e}", path.display())))?;
    let headers = if mapping.has_header {
        Some(
            reader
                .headers()
                .map_err(|e| parse_err(path, 1, e.to_string()))?
                .clone(),
        )
    } else {
        None
    };
    let item_col = mapping.resolve(headers.as_ref(), &mapping.item_id, path)?;
    let worker_name = mapping.worker_id.as_ref().ok_or_else(|| {
        Error::contract("mapping file missing key `worker_id` (required for annotation files)")
    })?;
    let worker_col = mapping.resolve(headers.as_ref(), worker_name, path)?;
    let text_col = mapping.resolve(headers.as_ref(), &mapping.text, path)?;
    let duration_col = mapping
        .duration_s
        .as_ref()
        .map(|n| mapping.resolve(headers.as_ref(), n, path))
        .transpose()?;
    let golden_col = mapping
        .golden
        .as_ref()
        .map(|n| mapping.resolve(headers.as_ref(), n, path))
        .transpose()?;

    let mut items: Vec<AnnotatedItem> = Vec::new();
    let mut index: BTreeMap<ItemId, usize> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(ItemId, WorkerId)> = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let lineno = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |col: usize| -> Result<&str> {
            record
                .get(col)
                .ok_or_else(|| parse_err(path, lineno, format!("missing column {col}")))
        };
        let item_id = ItemId::new(field(item_col)?);
        let worker_id = WorkerId::new(field(worker_col)?);
        if !seen_pairs.insert((item_id.clone(), worker_id.clone())) {
            return Err(parse_err(
                path,
                lineno,
                format!("duplicate annotation for item {item_id} by worker {worker_id}"),
            ));
        }
        let duration_seconds = match duration_col {
            None => None,
            Some(c) => {
                let v = field(c)?;
                if v.is_empty() {
                    None
                } else {
                    Some(
                        v.parse::<f64>()
                            .map_err(|_| parse_err(path, lineno, format!("bad duration `{v}`")))?,
                    )
                }
            }
        };
        let is_golden = match golden_col {
            None => false,
            Some(c) => {
                let v = field(c)?;
                matches!(v, "1" | "true" | "True" | "TRUE" | "yes")
            }
        };
        let annotation = Annotation {
            worker_id,
            text: normalize(field(text_col)?, alphabet),
            duration_seconds,
            is_golden,
        };
        let idx = *index.entry(item_id.clone()).or_insert_with(|| {
            items.push(AnnotatedItem::new(item_id.clone()));
            items.len() - 1
        });
        items[idx].annotations.push(annotation);
    }
    Ok(items)
}

/// Read an external ground-truth table through the same mapping mechanism
/// (only `item_id` and `text` are used). Repeated rows for one item are
/// fine as long as the text agrees, so the annotations export itself can
/// serve as the truth table when it carries a golden-output column.
pub fn read_truths_mapped(
    path: &Path,
    mapping: &ColumnMapping,
    alphabet: Alphabet,
) -> Result<BTreeMap<ItemId, NormalizedText>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter)
        .has_headers(mapping.has_header)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::contract(format!("{}: {e}", path.display())))?;
    let headers = if mapping.has_header {
        Some(
            reader
                .headers()
                .map_err(|e| parse_err(path, 1, e.to_string()))?
                .clone(),
        )
    } else {
        None
    };
    let item_col = mapping.resolve(headers.as_ref(), &mapping.item_id, path)?;
    let text_col = mapping.resolve(headers.as_ref(), &mapping.text, path)?;
    let mut truths: BTreeMap<ItemId, NormalizedText> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let lineno = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let id = record
            .get(item_col)
            .ok_or_else(|| parse_err(path, lineno, format!("missing column {item_col}")))?;
        let text = record
            .get(text_col)
            .ok_or_else(|| parse_err(path, lineno, format!("missing column {text_col}")))?;
        let normalized = normalize(text, alphabet);
        if let Some(existing) = truths.get(&ItemId::new(id)) {
            if !existing.same_tokens(&normalized) {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("conflicting ground truths for item {id}"),
                ));
            }
            continue;
        }
        truths.insert(ItemId::new(id), normalized);
    }
    Ok(truths)
}

/// Dataset-level counts and mean sentence lengths in words.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub n_items: usize,
    pub n_workers: usize,
    pub n_answers: usize,
    pub mean_gt_len: f64,
    pub mean_ann_len: f64,
}

pub fn summary_stats(items: &[AnnotatedItem]) -> DatasetSummary {
    let mut workers = BTreeSet::new();
    let mut n_answers = 0usize;
    let mut ann_words = 0usize;
    let mut gt_words = 0usize;
    let mut gt_count = 0usize;
    for item in items {
        if let Some(t) = &item.ground_truth {
            gt_words += t.word_count();
            gt_count += 1;
        }
        for ann in &item.annotations {
            workers.insert(&ann.worker_id);
            n_answers += 1;
            ann_words += ann.text.word_count();
        }
    }
    DatasetSummary {
        n_items: items.len(),
        n_workers: workers.len(),
        n_answers,
        mean_gt_len: if gt_count == 0 {
            0.0
        } else {
            gt_words as f64 / gt_count as f64
        },
        mean_ann_len: if n_answers == 0 {
            0.0
        } else {
            ann_words as f64 / n_answers as f64
        },
    }
}

/// How the crowd did on an item: every response exact, at least one exact,
/// or none exact. Zero word-level edit distance counts as exact.
///
/// This is the automated classification only. Manual review of hard items
/// conventionally labels error *causes* as task difficulty, violation of
/// instructions, or homophones; that labeling is a human judgment and no
/// machinery for it exists here beyond this note.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrowdClass {
    AllCorrect,
    HasCorrect,
    AllIncorrect,
}

pub fn classify_item(item: &AnnotatedItem) -> Result<CrowdClass> {
    item.validate()?;
    let truth = item
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::contract(format!("item {} has no ground truth", item.item_id)))?;
    let correct = item
        .annotations
        .iter()
        .filter(|a| wer(truth, &a.text).errors == 0)
        .count();
    Ok(if correct == item.annotations.len() {
        CrowdClass::AllCorrect
    } else if correct > 0 {
        CrowdClass::HasCorrect
    } else {
        CrowdClass::AllIncorrect
    })
}

/// Correct (+) and incorrect (−) output counts for one method within one
/// crowd class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub correct: usize,
    pub incorrect: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MethodBreakdown {
    pub all_correct: ClassCounts,
    pub has_correct: ClassCounts,
    pub all_incorrect: ClassCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct BreakdownTable {
    pub n_items: usize,
    /// Items per crowd class; method-independent.
    pub class_sizes: BTreeMap<CrowdClass, usize>,
    pub methods: BTreeMap<String, MethodBreakdown>,
}

impl CrowdClass {
    pub fn label(self) -> &'static str {
        match self {
            CrowdClass::AllCorrect => "all_correct",
            CrowdClass::HasCorrect => "has_correct",
            CrowdClass::AllIncorrect => "all_incorrect",
        }
    }
}

/// Cross-tabulate method correctness against crowd correctness.
pub fn error_breakdown(
    items: &[AnnotatedItem],
    method_outputs: &BTreeMap<String, BTreeMap<ItemId, NormalizedText>>,
) -> Result<BreakdownTable> {
    let mut class_sizes: BTreeMap<CrowdClass, usize> = BTreeMap::new();
    class_sizes.insert(CrowdClass::AllCorrect, 0);
    class_sizes.insert(CrowdClass::HasCorrect, 0);
    class_sizes.insert(CrowdClass::AllIncorrect, 0);
    let mut methods: BTreeMap<String, MethodBreakdown> = method_outputs
        .keys()
        .map(|m| (m.clone(), MethodBreakdown::default()))
        .collect();
    for item in items {
        let class = classify_item(item)?;
        *class_sizes.get_mut(&class).expect("all classes present") += 1;
        let truth = item
            .ground_truth
            .as_ref()
            .expect("checked in classify_item");
        for (method, outputs) in method_outputs {
            let output = outputs.get(&item.item_id).ok_or_else(|| {
                Error::contract(format!(
                    "method {method} has no output for item {}",
                    item.item_id
                ))
            })?;
            let correct = wer(truth, output).errors == 0;
            let breakdown = methods.get_mut(method).expect("initialized above");
            let cell = match class {
                CrowdClass::AllCorrect => &mut breakdown.all_correct,
                CrowdClass::HasCorrect => &mut breakdown.has_correct,
                CrowdClass::AllIncorrect => &mut breakdown.all_incorrect,
            };
            if correct {
                cell.correct += 1;
            } else {
                cell.incorrect += 1;
            }
        }
    }
    Ok(BreakdownTable {
        n_items: items.len(),
        class_sizes,
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::aggregate_oracle;

    fn norm(s: &str) -> NormalizedText {
        normalize(s, Alphabet::Latin)
    }

    fn item(id: &str, truth: Option<&str>, texts: &[(&str, &str)]) -> AnnotatedItem {
        AnnotatedItem {
            item_id: ItemId::from(id),
            ground_truth: truth.map(norm),
            annotations: texts
                .iter()
                .map(|(w, t)| Annotation {
                    worker_id: WorkerId::new(*w),
                    text: norm(t),
                    duration_seconds: Some(31.5),
                    is_golden: false,
                })
                .collect(),
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let ann_path = dir.path().join("annotations.tsv");
        let truth_path = dir.path().join("truths.tsv");
        let items = vec![
            item(
                "a",
                Some("The cat."),
                &[("w1", "the cat"), ("w2", "a cat!")],
            ),
            item("b", Some("dog"), &[("w1", "Dog")]),
        ];
        write_annotations(&items, &ann_path).unwrap();
        write_truths(&items, &truth_path).unwrap();
        let mut read = read_annotations(&ann_path, Alphabet::Latin).unwrap();
        attach_truths(
            &mut read,
            &read_truths(&truth_path, Alphabet::Latin).unwrap(),
        );
        assert_eq!(items, read);
    }

    #[test]
    fn written_bytes_are_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ann_path = dir.path().join("a.tsv");
        let truth_path = dir.path().join("t.tsv");
        let mut it = item("rec-1", Some("The cat."), &[("w9", "the cat")]);
        it.annotations[0].duration_seconds = Some(12.5);
        it.annotations[0].is_golden = true;
        let items = vec![it];
        write_annotations(&items, &ann_path).unwrap();
        write_truths(&items, &truth_path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&ann_path).unwrap(),
            "item_id\tworker_id\ttext\tduration_s\tgolden\nrec-1\tw9\tthe cat\t12.5\t1\n"
        );
        assert_eq!(
            std::fs::read_to_string(&truth_path).unwrap(),
            "item_id\ttext\nrec-1\tThe cat.\n"
        );
    }

    #[test]
    fn malformed_row_names_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "item_id\tworker_id\ttext\na\tw\thello\nbroken\n").unwrap();
        match read_annotations(&path, Alphabet::Latin) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_pair_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.tsv");
        std::fs::write(&path, "item_id\tworker_id\ttext\na\tw\tone\na\tw\ttwo\n").unwrap();
        assert!(read_annotations(&path, Alphabet::Latin).is_err());
    }

    #[test]
    fn tab_in_text_rejected_at_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tsv");
        let mut items = vec![item("a", None, &[("w", "ok")])];
        items[0].annotations[0].text = normalize("with\ttab", Alphabet::Latin);
        assert!(write_annotations(&items, &path).is_err());
    }

    #[test]
    fn summary_of_empty_dataset_is_zero() {
        let s = summary_stats(&[]);
        assert_eq!(
            s,
            DatasetSummary {
                n_items: 0,
                n_workers: 0,
                n_answers: 0,
                mean_gt_len: 0.0,
                mean_ann_len: 0.0,
            }
        );
    }

    #[test]
    fn summary_counts_and_means() {
        let items = vec![item(
            "a",
            Some("one two three four"),
            &[("w1", "one two three")],
        )];
        let s = summary_stats(&items);
        assert_eq!(s.n_items, 1);
        assert_eq!(s.n_workers, 1);
        assert_eq!(s.n_answers, 1);
        assert_eq!(s.mean_gt_len, 4.0);
        assert_eq!(s.mean_ann_len, 3.0);
    }

    #[test]
    fn mapped_reader_handles_quoted_csv() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("release.csv");
        std::fs::write(
            &data,
            "url,performer,output\nrec1,9,\"hello, world\"\nrec1,10,hello world\n",
        )
        .unwrap();
        let map_path = dir.path().join("mapping.kv");
        std::fs::write(
            &map_path,
            "delimiter: comma\nitem_id: url\nworker_id: performer\ntext: output\n",
        )
        .unwrap();
        let mapping = ColumnMapping::from_file(&map_path).unwrap();
        let items = read_annotations_mapped(&data, &mapping, Alphabet::Latin).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].annotations.len(), 2);
        assert_eq!(items[0].annotations[0].text.tokens(), ["hello", "world"]);
    }

    #[test]
    fn mapped_truths_tolerate_agreeing_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("export.tsv");
        std::fs::write(
            &data,
            "INPUT:audio\tGOLDEN:output\nrec1\tThe truth.\nrec1\tthe truth\nrec2\tother\n",
        )
        .unwrap();
        let map_path = dir.path().join("m.kv");
        std::fs::write(&map_path, "item_id: INPUT:audio\ntext: GOLDEN:output\n").unwrap();
        let mapping = ColumnMapping::from_file(&map_path).unwrap();
        let truths = read_truths_mapped(&data, &mapping, Alphabet::Latin).unwrap();
        assert_eq!(truths.len(), 2);

        std::fs::write(
            &data,
            "INPUT:audio\tGOLDEN:output\nrec1\tone thing\nrec1\tanother thing\n",
        )
        .unwrap();
        assert!(read_truths_mapped(&data, &mapping, Alphabet::Latin).is_err());
    }

    #[test]
    fn breakdown_classes_and_counts() {
        let items = vec![
            item("all", Some("x y"), &[("w1", "x y"), ("w2", "X Y.")]),
            item("has", Some("x y"), &[("w1", "x y"), ("w2", "z")]),
            item("none", Some("x y"), &[("w1", "q"), ("w2", "z")]),
        ];
        let mut oracle_outputs = BTreeMap::new();
        for it in &items {
            oracle_outputs.insert(it.item_id.clone(), aggregate_oracle(it).unwrap());
        }
        let mut method_outputs = BTreeMap::new();
        method_outputs.insert("oracle".to_string(), oracle_outputs);
        let table = error_breakdown(&items, &method_outputs).unwrap();
        assert_eq!(table.class_sizes[&CrowdClass::AllCorrect], 1);
        assert_eq!(table.class_sizes[&CrowdClass::HasCorrect], 1);
        assert_eq!(table.class_sizes[&CrowdClass::AllIncorrect], 1);
        let oracle = &table.methods["oracle"];
        assert_eq!(
            oracle.all_correct,
            ClassCounts {
                correct: 1,
                incorrect: 0
            }
        );
        assert_eq!(
            oracle.has_correct,
            ClassCounts {
                correct: 1,
                incorrect: 0
            }
        );
        // Oracle is restricted to worker responses, so an all-incorrect
        // item can never score correct.
        assert_eq!(
            oracle.all_incorrect,
            ClassCounts {
                correct: 0,
                incorrect: 1
            }
        );
        let total: usize = [oracle.all_correct, oracle.has_correct, oracle.all_incorrect]
            .iter()
            .map(|c| c.correct + c.incorrect)
            .sum();
        assert_eq!(total, table.n_items);
    }

    #[test]
    fn breakdown_requires_method_coverage() {
        let items = vec![item("a", Some("x"), &[("w", "x")])];
        let mut method_outputs = BTreeMap::new();
        method_outputs.insert("m".to_string(), BTreeMap::new());
        assert!(error_breakdown(&items, &method_outputs).is_err());
    }
}
