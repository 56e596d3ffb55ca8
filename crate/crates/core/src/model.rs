//! Dataset and prediction data model, with CSV / JSON-lines ingestion.
//!
//! Row order in the dataset file is the canonical item order used by every
//! downstream structure: item index `i` is the `i`-th data row.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bitset::MemberSet;
use crate::error::{Error, Result};

/// Index of a label inside a [`LabelSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSpace {
    labels: Vec<String>,
    index: HashMap<String, LabelId>,
}

impl LabelSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidDataset("label space is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), LabelId(i)).is_some() {
                return Err(Error::InvalidDataset(format!("label '{label}' listed twice")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<LabelId> {
        self.index.get(label).copied()
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.labels[id.0]
    }
}

/// Ternary attribute value. Only `Present` grants subbasis membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeValue {
    Present,
    Absent,
    Missing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub id: String,
    pub true_label: LabelId,
    pub attributes: Vec<AttributeValue>,
    pub scalars: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    items: Vec<Item>,
    label_space: LabelSpace,
    attribute_names: Vec<String>,
    scalar_names: Vec<String>,
    id_index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(
        items: Vec<Item>,
        label_space: LabelSpace,
        attribute_names: Vec<String>,
        scalar_names: Vec<String>,
    ) -> Result<Self> {
        let mut id_index = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if item.id.is_empty() {
                return Err(Error::InvalidDataset(format!("item {i} has an empty id")));
            }
            if id_index.insert(item.id.clone(), i).is_some() {
                return Err(Error::DuplicateId { line: i as u64 + 1, id: item.id.clone() });
            }
            if item.true_label.0 >= label_space.len() {
                return Err(Error::InvalidDataset(format!("item '{}' has a label outside the label space", item.id)));
            }
            if item.attributes.len() != attribute_names.len() || item.scalars.len() != scalar_names.len() {
                return Err(Error::InvalidDataset(format!("item '{}' has the wrong number of fields", item.id)));
            }
        }
        Ok(Self { items, label_space, attribute_names, scalar_names, id_index })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn scalar_names(&self) -> &[String] {
        &self.scalar_names
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|item| item.id.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Csv,
    Jsonl,
}

impl SourceFormat {
    /// Guesses the format from a file extension; anything not JSON-like is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => Self::Jsonl,
            _ => Self::Csv,
        }
    }
}

/// Sidecar JSON assigning roles to the columns of a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaDescriptor {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default)]
    pub scalars: Vec<String>,
    #[serde(default)]
    pub missing_sentinel: String,
    /// Declared label space. When absent, labels are collected from the
    /// label column in order of first appearance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<SourceFormat>,
}

impl SchemaDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.missing_sentinel == "0" || self.missing_sentinel == "1" {
            return Err(Error::Schema("missing_sentinel cannot be \"0\" or \"1\"".into()));
        }
        let mut seen = HashMap::new();
        let roles = [&self.id, &self.label].into_iter().chain(&self.attributes).chain(&self.scalars);
        for column in roles {
            if seen.insert(column.as_str(), ()).is_some() {
                return Err(Error::Schema(format!("column '{column}' is assigned more than one role")));
            }
        }
        Ok(())
    }

    fn parse_attribute(&self, line: u64, column: &str, cell: Option<&str>) -> Result<AttributeValue> {
        match cell {
            Some("1") => Ok(AttributeValue::Present),
            Some("0") => Ok(AttributeValue::Absent),
            None => Ok(AttributeValue::Missing),
            Some(s) if s.is_empty() || s == self.missing_sentinel => Ok(AttributeValue::Missing),
            Some(s) => Err(Error::MalformedAttribute { line, column: column.into(), value: s.into() }),
        }
    }

    fn parse_scalar(&self, line: u64, column: &str, cell: Option<&str>) -> Result<Option<f64>> {
        match cell {
            None => Ok(None),
            Some(s) if s.is_empty() || s == self.missing_sentinel => Ok(None),
            Some(s) => match s.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(Error::NonNumericScalar { line, column: column.into(), value: s.into() }),
            },
        }
    }
}

/// Cells of one row, already resolved to the schema's roles.
struct RawRow<'a> {
    line: u64,
    id: Option<String>,
    label: Option<String>,
    attributes: Vec<Option<&'a str>>,
    scalars: Vec<Option<&'a str>>,
}

struct DatasetBuilder<'s> {
    schema: &'s SchemaDescriptor,
    items: Vec<Item>,
    labels: Vec<String>,
    label_index: HashMap<String, LabelId>,
    ids: HashMap<String, ()>,
    open_labels: bool,
}

impl<'s> DatasetBuilder<'s> {
    fn new(schema: &'s SchemaDescriptor) -> Result<Self> {
        let (labels, open_labels) = match &schema.labels {
            Some(declared) => (declared.clone(), false),
            None => (Vec::new(), true),
        };
        let mut label_index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if label_index.insert(l.clone(), LabelId(i)).is_some() {
                return Err(Error::Schema(format!("label '{l}' declared twice")));
            }
        }
        Ok(Self { schema, items: Vec::new(), labels, label_index, ids: HashMap::new(), open_labels })
    }

    fn push(&mut self, row: RawRow<'_>) -> Result<()> {
        let line = row.line;
        let id = row.id.filter(|s| !s.is_empty()).ok_or_else(|| Error::BadRow { line, message: "empty id".into() })?;
        if self.ids.insert(id.clone(), ()).is_some() {
            return Err(Error::DuplicateId { line, id });
        }
        let label = row.label.filter(|s| !s.is_empty()).ok_or_else(|| Error::BadRow { line, message: "empty label".into() })?;
        let true_label = match self.label_index.get(&label) {
            Some(&l) => l,
            None if self.open_labels => {
                let l = LabelId(self.labels.len());
                self.labels.push(label.clone());
                self.label_index.insert(label, l);
                l
            }
            None => return Err(Error::BadRow { line, message: format!("label '{label}' is not a declared label") }),
        };
        let attributes = self
            .schema
            .attributes
            .iter()
            .zip(row.attributes)
            .map(|(col, cell)| self.schema.parse_attribute(line, col, cell))
            .collect::<Result<Vec<_>>>()?;
        let scalars = self
            .schema
            .scalars
            .iter()
            .zip(row.scalars)
            .map(|(col, cell)| self.schema.parse_scalar(line, col, cell))
            .collect::<Result<Vec<_>>>()?;
        self.items.push(Item { id, true_label, attributes, scalars });
        Ok(())
    }

    fn finish(self) -> Result<Dataset> {
        let label_space = LabelSpace::new(self.labels)?;
        Dataset::new(self.items, label_space, self.schema.attributes.clone(), self.schema.scalars.clone())
    }
}

/// Parses a dataset file whose columns are assigned roles by `schema`.
pub fn parse_dataset<R: Read>(schema: &SchemaDescriptor, source: R, format: SourceFormat) -> Result<Dataset> {
    schema.validate()?;
    match format {
        SourceFormat::Csv => parse_dataset_csv(schema, source),
        SourceFormat::Jsonl => parse_dataset_jsonl(schema, BufReader::new(source)),
    }
}

fn parse_dataset_csv<R: Read>(schema: &SchemaDescriptor, source: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::UnknownColumn { column: name.into() })
    };
    let id_col = column(&schema.id)?;
    let label_col = column(&schema.label)?;
    let attr_cols = schema.attributes.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;
    let scalar_cols = schema.scalars.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;

    let mut builder = DatasetBuilder::new(schema)?;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        builder.push(RawRow {
            line,
            id: record.get(id_col).map(str::to_owned),
            label: record.get(label_col).map(str::to_owned),
            attributes: attr_cols.iter().map(|&c| record.get(c)).collect(),
            scalars: scalar_cols.iter().map(|&c| record.get(c)).collect(),
        })?;
    }
    builder.finish()
}

fn json_cell(value: Option<&serde_json::Value>) -> Option<String> {
    use serde_json::Value;
    match value? {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(if *b { "1" } else { "0" }.into()),
        other => Some(other.to_string()),
    }
}

fn parse_dataset_jsonl<R: BufRead>(schema: &SchemaDescriptor, source: R) -> Result<Dataset> {
    let mut builder = DatasetBuilder::new(schema)?;
    for (n, line) in source.lines().enumerate() {
        let line_no = n as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::BadRow { line: line_no, message: format!("invalid JSON: {e}") })?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::BadRow { line: line_no, message: "record must be a JSON object".into() })?;
        let attrs: Vec<Option<String>> = schema.attributes.iter().map(|c| json_cell(obj.get(c))).collect();
        let scalars: Vec<Option<String>> = schema.scalars.iter().map(|c| json_cell(obj.get(c))).collect();
        if !obj.contains_key(&schema.label) {
            return Err(Error::UnknownColumn { column: schema.label.clone() });
        }
        builder.push(RawRow {
            line: line_no,
            id: json_cell(obj.get(&schema.id)),
            label: json_cell(obj.get(&schema.label)),
            attributes: attrs.iter().map(Option::as_deref).collect(),
            scalars: scalars.iter().map(Option::as_deref).collect(),
        })?;
    }
    builder.finish()
}

/// Serializes a dataset back to CSV using the schema's column names.
/// Missing values are written as the schema's sentinel.
pub fn write_dataset_csv(dataset: &Dataset, schema: &SchemaDescriptor) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = [&schema.id, &schema.label].into_iter().chain(&schema.attributes).chain(&schema.scalars);
    writer.write_record(header)?;
    for item in dataset.items() {
        let mut row = vec![item.id.clone(), dataset.label_space().name(item.true_label).to_owned()];
        row.extend(item.attributes.iter().map(|a| match a {
            AttributeValue::Present => "1".to_owned(),
            AttributeValue::Absent => "0".to_owned(),
            AttributeValue::Missing => schema.missing_sentinel.clone(),
        }));
        row.extend(item.scalars.iter().map(|s| match s {
            Some(v) => v.to_string(),
            None => schema.missing_sentinel.clone(),
        }));
        writer.write_record(&row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8 for utf-8 input"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub predicted_label: String,
    pub loss: Option<f64>,
}

/// A model, represented only by its per-item outputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionTable {
    pub entries: BTreeMap<String, PredictionEntry>,
    pub source_tag: String,
}

impl PredictionTable {
    pub fn with_source_tag(mut self, tag: impl Into<String>) -> Self {
        self.source_tag = tag.into();
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses a predictions CSV with header `item_id,predicted_label[,loss]`.
pub fn parse_predictions<R: Read>(source: R) -> Result<PredictionTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = column("item_id").ok_or_else(|| Error::UnknownColumn { column: "item_id".into() })?;
    let pred_col = column("predicted_label").ok_or_else(|| Error::UnknownColumn { column: "predicted_label".into() })?;
    let loss_col = column("loss");

    let mut table = PredictionTable::default();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(id_col).unwrap_or_default().to_owned();
        if id.is_empty() {
            return Err(Error::BadRow { line, message: "empty item_id".into() });
        }
        let predicted_label = record.get(pred_col).unwrap_or_default().to_owned();
        let loss = match loss_col.and_then(|c| record.get(c)) {
            None | Some("") => None,
            Some(raw) => match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
                _ => return Err(Error::InvalidLoss { line, value: raw.into() }),
            },
        };
        if table.entries.contains_key(&id) {
            return Err(Error::DuplicateId { line, id });
        }
        table.entries.insert(id, PredictionEntry { predicted_label, loss });
    }
    Ok(table)
}

/// A dataset joined with a total prediction table.
///
/// Immutable; every per-item vector is indexed by dataset item index.
#[derive(Clone, Debug)]
pub struct EvaluationContext {
    ids: Vec<String>,
    label_space: LabelSpace,
    true_labels: Vec<LabelId>,
    predicted: Vec<LabelId>,
    losses: Vec<Option<f64>>,
    correct: Vec<bool>,
    correct_set: MemberSet,
    source_tag: String,
}

impl EvaluationContext {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn true_label(&self, index: usize) -> LabelId {
        self.true_labels[index]
    }

    pub fn predicted_label(&self, index: usize) -> LabelId {
        self.predicted[index]
    }

    pub fn loss(&self, index: usize) -> Option<f64> {
        self.losses[index]
    }

    pub fn is_correct(&self, index: usize) -> bool {
        self.correct[index]
    }

    pub fn correctness(&self) -> &[bool] {
        &self.correct
    }

    /// Items whose prediction matches the true label.
    pub fn correct_set(&self) -> &MemberSet {
        &self.correct_set
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }
}

/// Checks that `preds` is total over `dataset` with in-space labels and
/// pairs every item with its prediction.
pub fn join_validate(dataset: &Dataset, preds: &PredictionTable) -> Result<EvaluationContext> {
    let space = dataset.label_space();
    let n = dataset.len();
    let mut predicted = Vec::with_capacity(n);
    let mut losses = Vec::with_capacity(n);
    for item in dataset.items() {
        let entry = preds.entries.get(&item.id).ok_or_else(|| Error::MissingPrediction { id: item.id.clone() })?;
        let label = space.id(&entry.predicted_label).ok_or_else(|| Error::PredictionOutsideLabelSpace {
            id: item.id.clone(),
            label: entry.predicted_label.clone(),
        })?;
        predicted.push(label);
        losses.push(entry.loss);
    }
    if let Some(extra) = preds.entries.keys().find(|id| dataset.index_of(id).is_none()) {
        return Err(Error::UnknownItem { id: extra.clone() });
    }
    let true_labels: Vec<LabelId> = dataset.items().iter().map(|i| i.true_label).collect();
    let correct: Vec<bool> = true_labels.iter().zip(&predicted).map(|(t, p)| t == p).collect();
    Ok(EvaluationContext {
        ids: dataset.ids().map(str::to_owned).collect(),
        label_space: space.clone(),
        true_labels,
        predicted,
        losses,
        correct_set: MemberSet::from_bools(&correct),
        correct,
        source_tag: preds.source_tag.clone(),
    })
}
