//! Typed tabular data: schema, cells with an explicit missing state, CSV
//! ingestion and stratified fold splitting.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
        }
    }
}

/// Column layout of a dataset. The class attribute is always categorical and
/// its labels are ordered; that order is the "label index" used for every
/// tie-break in the crate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
    class_index: usize,
    class_labels: Vec<String>,
}

#[derive(Deserialize)]
struct RawSchema {
    attributes: Vec<Attribute>,
    class_index: usize,
    class_labels: Vec<String>,
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSchema::deserialize(d)?;
        Schema::new(raw.attributes, raw.class_index, raw.class_labels)
            .map_err(serde::de::Error::custom)
    }
}

impl Schema {
    pub fn new(
        attributes: Vec<Attribute>,
        class_index: usize,
        class_labels: Vec<String>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate attribute name `{}`",
                    a.name
                )));
            }
        }
        let class = attributes.get(class_index).ok_or_else(|| {
            Error::Schema(format!(
                "class index {class_index} out of range for {} attributes",
                attributes.len()
            ))
        })?;
        if class.kind != AttributeKind::Categorical {
            return Err(Error::Schema(format!(
                "class attribute `{}` must be categorical",
                class.name
            )));
        }
        if attributes.len() < 2 {
            return Err(Error::Schema(
                "at least one non-class attribute is required".into(),
            ));
        }
        if class_labels.is_empty() {
            return Err(Error::Schema("no class labels declared".into()));
        }
        let mut labels = HashSet::new();
        for l in &class_labels {
            if !labels.insert(l.as_str()) {
                return Err(Error::Schema(format!("duplicate class label `{l}`")));
            }
        }
        Ok(Schema {
            attributes,
            class_index,
            class_labels,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_labels(&self) -> usize {
        self.class_labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn kind(&self, column: usize) -> AttributeKind {
        self.attributes[column].kind
    }

    pub fn name(&self, column: usize) -> &str {
        &self.attributes[column].name
    }

    /// Column indices of the non-class attributes, in schema order. Position
    /// `i` in this list is feature `i` of a [`crate::classify::FeatureMask`].
    pub fn feature_columns(&self) -> Vec<usize> {
        (0..self.attributes.len())
            .filter(|&c| c != self.class_index)
            .collect()
    }

    pub fn feature_count(&self) -> usize {
        self.attributes.len() - 1
    }

    /// Non-class columns of the given kind.
    pub fn columns_of_kind(&self, kind: AttributeKind) -> Vec<usize> {
        self.feature_columns()
            .into_iter()
            .filter(|&c| self.attributes[c].kind == kind)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Record {
    pub cells: Vec<Cell>,
}

impl Record {
    pub fn new(cells: Vec<Cell>) -> Self {
        Record { cells }
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Schema, records: Vec<Record>) -> Result<Self> {
        let ds = Dataset { schema, records };
        ds.validate()?;
        Ok(ds)
    }

    pub fn empty(schema: Schema) -> Self {
        Dataset {
            schema,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks arity, column type discipline and class labels for every record.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            check_record(&self.schema, r)
                .map_err(|reason| Error::Conformance { record: i, reason })?;
        }
        Ok(())
    }

    /// Class label index of record `i`.
    pub fn label(&self, i: usize) -> Result<usize> {
        let col = self.schema.class_index;
        match &self.records[i].cells[col] {
            Cell::Text(s) => self
                .schema
                .label_index(s)
                .ok_or_else(|| Error::Conformance {
                    record: i,
                    reason: format!("unknown class label `{s}`"),
                }),
            _ => Err(Error::MissingValue {
                record: i,
                column: self.schema.name(col).to_string(),
            }),
        }
    }

    pub fn labels(&self) -> Result<Vec<usize>> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    /// Records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn with_records(&self, records: Vec<Record>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records,
        }
    }

    pub fn missing_cells(&self) -> usize {
        self.records.iter().map(Record::missing_count).sum()
    }
}

pub(crate) fn check_record(schema: &Schema, r: &Record) -> std::result::Result<(), String> {
    if r.cells.len() != schema.len() {
        return Err(format!(
            "expected {} cells, found {}",
            schema.len(),
            r.cells.len()
        ));
    }
    for (c, cell) in r.cells.iter().enumerate() {
        let ok = match (schema.kind(c), cell) {
            (_, Cell::Missing) => true,
            (AttributeKind::Numeric, Cell::Num(v)) => v.is_finite(),
            (AttributeKind::Categorical, Cell::Text(_)) => true,
            _ => false,
        };
        if !ok {
            return Err(format!(
                "cell {:?} does not fit {:?} column `{}`",
                cell,
                schema.kind(c),
                schema.name(c)
            ));
        }
    }
    if let Cell::Text(label) = &r.cells[schema.class_index] {
        if schema.label_index(label).is_none() {
            return Err(format!("unknown class label `{label}`"));
        }
    }
    Ok(())
}

/// Raw field values that are read as MISSING, per column name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MissingPolicy {
    pub sentinels: BTreeMap<String, Vec<String>>,
}

impl MissingPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, column: &str, values: &[&str]) -> Self {
        self.sentinels
            .entry(column.to_string())
            .or_default()
            .extend(values.iter().map(|v| v.to_string()));
        self
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for col in self.sentinels.keys() {
            if schema.column_index(col).is_none() {
                return Err(Error::Schema(format!(
                    "missing-value policy references unknown column `{col}`"
                )));
            }
        }
        Ok(())
    }

    fn is_sentinel(&self, column: &str, kind: AttributeKind, raw: &str) -> bool {
        let Some(values) = self.sentinels.get(column) else {
            return false;
        };
        values.iter().any(|s| {
            if s == raw {
                return true;
            }
            // numeric sentinels match by value, so "0" also catches "0.0"
            kind == AttributeKind::Numeric
                && matches!((s.trim().parse::<f64>(), raw.parse::<f64>()), (Ok(a), Ok(b)) if a == b)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Token written for MISSING cells. Empty fields always read as MISSING.
    pub missing_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            missing_token: String::new(),
        }
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &Schema,
    policy: &MissingPolicy,
    opts: &CsvOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema, policy, opts)
}

pub fn read_csv<R: Read>(
    reader: R,
    schema: &Schema,
    policy: &MissingPolicy,
    opts: &CsvOptions,
) -> Result<Dataset> {
    policy.validate(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = Vec::new();
    let mut header_pending = opts.has_header;
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = line + 1;
        if row.len() == 1 && row.get(0).is_some_and(|f| f.trim().is_empty()) {
            continue;
        }
        if row.len() != schema.len() {
            return Err(Error::Arity {
                row: row_no,
                expected: schema.len(),
                found: row.len(),
            });
        }
        if header_pending {
            header_pending = false;
            let found: Vec<&str> = row.iter().map(str::trim).collect();
            let expected: Vec<&str> = schema
                .attributes()
                .iter()
                .map(|a| a.name.as_str())
                .collect();
            if found != expected {
                return Err(Error::Header {
                    expected: expected.join(","),
                    found: found.join(","),
                });
            }
            continue;
        }
        let mut cells = Vec::with_capacity(schema.len());
        for (c, raw) in row.iter().enumerate() {
            let raw = raw.trim();
            let attr = &schema.attributes()[c];
            if raw.is_empty() || policy.is_sentinel(&attr.name, attr.kind, raw) {
                cells.push(Cell::Missing);
                continue;
            }
            cells.push(match attr.kind {
                AttributeKind::Categorical => Cell::Text(raw.to_string()),
                AttributeKind::Numeric => match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Cell::Num(v),
                    _ => {
                        return Err(Error::ParseNumber {
                            row: row_no,
                            column: attr.name.clone(),
                            value: raw.to_string(),
                        })
                    }
                },
            });
        }
        let record = Record::new(cells);
        check_record(schema, &record).map_err(|reason| Error::Conformance {
            record: records.len(),
            reason: format!("row {row_no}: {reason}"),
        })?;
        records.push(record);
    }
    Ok(Dataset {
        schema: schema.clone(),
        records,
    })
}

pub fn format_cell(cell: &Cell, missing_token: &str) -> String {
    match cell {
        Cell::Num(v) => format!("{v}"),
        Cell::Text(s) => s.clone(),
        Cell::Missing => missing_token.to_string(),
    }
}

pub fn write_csv<W: Write>(ds: &Dataset, writer: W, opts: &CsvOptions) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    if opts.has_header {
        w.write_record(ds.schema.attributes().iter().map(|a| a.name.as_str()))?;
    }
    for r in &ds.records {
        w.write_record(r.cells.iter().map(|c| format_cell(c, &opts.missing_token)))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv writer>".into(),
        source,
    })?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>, opts: &CsvOptions) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv(ds, std::io::BufWriter::new(file), opts)
}

/// One train/test split produced by [`stratified_kfold`].
#[derive(Clone, Debug)]
pub struct Fold {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub train: Dataset,
    pub test: Dataset,
}

/// Test-fold membership for stratified k-fold CV over label indices.
///
/// Each class is shuffled independently, the classes are concatenated in
/// label order, and position `p` of the concatenation goes to fold `p % k`.
/// Per-class fold counts therefore differ by at most one, and so do the
/// overall fold sizes. Returned index lists are sorted.
pub fn stratified_fold_indices(
    labels: &[usize],
    label_names: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); label_names.len()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for (l, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::TooFewPerClass {
                label: label_names[l].clone(),
                count: members.len(),
                k,
            });
        }
    }
    let mut folds = vec![Vec::new(); k];
    let mut pos = 0usize;
    for (l, mut members) in by_class.into_iter().enumerate() {
        let mut rng = rng::stream(seed, &[0x5f01d, l as u64]);
        members.shuffle(&mut rng);
        for i in members {
            folds[pos % k].push(i);
            pos += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    let labels = ds.labels()?;
    let test_sets = stratified_fold_indices(&labels, ds.schema.class_labels(), k, seed)?;
    Ok(test_sets
        .into_iter()
        .map(|test_indices| {
            let mut in_test = vec![false; ds.len()];
            for &i in &test_indices {
                in_test[i] = true;
            }
            let train_indices: Vec<usize> = (0..ds.len()).filter(|&i| !in_test[i]).collect();
            Fold {
                train: ds.subset(&train_indices),
                test: ds.subset(&test_indices),
                train_indices,
                test_indices,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_schema() -> Schema {
        Schema::new(
            vec![
                Attribute::numeric("glucose"),
                Attribute::numeric("age"),
                Attribute::categorical("class"),
            ],
            2,
            vec!["neg".into(), "pos".into()],
        )
        .unwrap()
    }

    #[test]
    fn schema_rejects_bad_layouts() {
        let dup = Schema::new(
            vec![
                Attribute::numeric("a"),
                Attribute::numeric("a"),
                Attribute::categorical("c"),
            ],
            2,
            vec!["x".into()],
        );
        assert!(dup.is_err());
        let numeric_class = Schema::new(
            vec![Attribute::numeric("a"), Attribute::numeric("c")],
            1,
            vec!["x".into()],
        );
        assert!(numeric_class.is_err());
        let only_class = Schema::new(vec![Attribute::categorical("c")], 0, vec!["x".into()]);
        assert!(only_class.is_err());
        let out_of_range = Schema::new(vec![Attribute::categorical("c")], 3, vec!["x".into()]);
        assert!(out_of_range.is_err());
    }

    #[test]
    fn sentinel_zero_becomes_missing() {
        let csv = "glucose,age,class\n148,50,pos\n0,31,neg\n89,0,neg\n";
        let policy = MissingPolicy::none().with("glucose", &["0"]);
        let ds = read_csv(
            csv.as_bytes(),
            &tiny_schema(),
            &policy,
            &CsvOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.missing_cells(), 1);
        assert!(ds.records[1].cells[0].is_missing());
        // age keeps its literal zero
        assert_eq!(ds.records[2].cells[1], Cell::Num(0.0));
    }

    #[test]
    fn header_only_file_is_empty() {
        let ds = read_csv(
            "glucose,age,class\n".as_bytes(),
            &tiny_schema(),
            &MissingPolicy::none(),
            &CsvOptions::default(),
        )
        .unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn arity_error_reports_row() {
        let err = read_csv(
            "glucose,age,class\n1,2,pos\n1,2\n".as_bytes(),
            &tiny_schema(),
            &MissingPolicy::none(),
            &CsvOptions::default(),
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                Error::Arity {
                    row: 3,
                    expected: 3,
                    found: 2
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn unparseable_number_is_an_error() {
        let err = read_csv(
            "glucose,age,class\nabc,2,pos\n".as_bytes(),
            &tiny_schema(),
            &MissingPolicy::none(),
            &CsvOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ParseNumber { row: 2, .. }));
        // ...unless the policy covers it
        let ds = read_csv(
            "glucose,age,class\nNA,2,pos\n".as_bytes(),
            &tiny_schema(),
            &MissingPolicy::none().with("glucose", &["NA"]),
            &CsvOptions::default(),
        )
        .unwrap();
        assert!(ds.records[0].cells[0].is_missing());
    }

    #[test]
    fn header_mismatch_and_headerless_files() {
        let err = read_csv(
            "gluc,age,class\n1,2,pos\n".as_bytes(),
            &tiny_schema(),
            &MissingPolicy::none(),
            &CsvOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Header { .. }));
        let opts = CsvOptions {
            has_header: false,
            ..CsvOptions::default()
        };
        let ds = read_csv(
            "1,2,pos\n".as_bytes(),
            &tiny_schema(),
            &MissingPolicy::none(),
            &opts,
        )
        .unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn policy_must_reference_known_columns() {
        let policy = MissingPolicy::none().with("insulin", &["0"]);
        assert!(policy.validate(&tiny_schema()).is_err());
    }

    #[test]
    fn balanced_five_fold() {
        let recs: Vec<Record> = (0..10)
            .map(|i| {
                Record::new(vec![
                    Cell::Num(i as f64),
                    Cell::Num(1.0),
                    Cell::text(if i % 2 == 0 { "neg" } else { "pos" }),
                ])
            })
            .collect();
        let ds = Dataset::new(tiny_schema(), recs).unwrap();
        let folds = stratified_kfold(&ds, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        for f in &folds {
            assert_eq!(f.test.len(), 2);
            let labels = f.test.labels().unwrap();
            assert!(labels.contains(&0) && labels.contains(&1));
            assert_eq!(f.train.len(), 8);
        }
        let again = stratified_kfold(&ds, 5, 3).unwrap();
        for (a, b) in folds.iter().zip(&again) {
            assert_eq!(a.test_indices, b.test_indices);
        }
    }

    #[test]
    fn too_few_members_per_class() {
        let recs = vec![
            Record::new(vec![Cell::Num(1.0), Cell::Num(1.0), Cell::text("neg")]),
            Record::new(vec![Cell::Num(1.0), Cell::Num(1.0), Cell::text("neg")]),
            Record::new(vec![Cell::Num(1.0), Cell::Num(1.0), Cell::text("pos")]),
        ];
        let ds = Dataset::new(tiny_schema(), recs).unwrap();
        assert!(matches!(
            stratified_kfold(&ds, 2, 0),
            Err(Error::TooFewPerClass { count: 1, .. })
        ));
        assert!(stratified_kfold(&ds, 1, 0).is_err());
    }

    #[test]
    fn validator_catches_type_violations() {
        let bad = Dataset {
            schema: tiny_schema(),
            records: vec![Record::new(vec![
                Cell::text("x"),
                Cell::Num(1.0),
                Cell::text("pos"),
            ])],
        };
        assert!(bad.validate().is_err());
        let bad_label = Dataset {
            schema: tiny_schema(),
            records: vec![Record::new(vec![
                Cell::Num(1.0),
                Cell::Num(1.0),
                Cell::text("maybe"),
            ])],
        };
        assert!(bad_label.validate().is_err());
    }
}
