#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use dataspace_core::model::{AttributeValue, Item, LabelId, LabelSpace, PredictionEntry, SourceFormat};
use dataspace_core::{parse_dataset, parse_predictions, Dataset, PredictionTable, SchemaDescriptor};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy6").join(name)
}

pub fn toy6() -> (Dataset, PredictionTable) {
    let schema = SchemaDescriptor::from_json(&fs::read_to_string(fixture("toy6.schema.json")).unwrap()).unwrap();
    let data = fs::read(fixture("toy6.csv")).unwrap();
    let dataset = parse_dataset(&schema, data.as_slice(), SourceFormat::Csv).unwrap();
    let preds = parse_predictions(fs::read(fixture("toy6-preds.csv")).unwrap().as_slice()).unwrap();
    (dataset, preds)
}

/// Random labeled dataset with `n_labels + n_attrs` potential subbasis
/// elements, plus random predictions and losses.
pub fn random_case<R: Rng>(rng: &mut R, max_items: usize, max_elements: usize) -> (Dataset, PredictionTable) {
    let n = rng.gen_range(1..=max_items);
    let n_labels = rng.gen_range(1..=max_elements.min(3));
    let n_attrs = rng.gen_range(0..=max_elements - n_labels);
    let labels: Vec<String> = (0..n_labels).map(|l| format!("L{l}")).collect();
    let density: f64 = rng.gen_range(0.2..0.8);
    let items: Vec<Item> = (0..n)
        .map(|i| Item {
            id: format!("x{i}"),
            true_label: LabelId(rng.gen_range(0..n_labels)),
            attributes: (0..n_attrs)
                .map(|_| match rng.gen_range(0.0..1.0) {
                    p if p < density => AttributeValue::Present,
                    p if p < density + 0.1 => AttributeValue::Missing,
                    _ => AttributeValue::Absent,
                })
                .collect(),
            scalars: vec![],
        })
        .collect();
    let mut preds = PredictionTable::default();
    for item in &items {
        let label = if rng.gen_bool(0.6) { item.true_label.0 } else { rng.gen_range(0..n_labels) };
        preds.entries.insert(
            item.id.clone(),
            PredictionEntry { predicted_label: labels[label].clone(), loss: Some(rng.gen_range(0.0..3.0)) },
        );
    }
    let attrs = (0..n_attrs).map(|a| format!("a{a}")).collect();
    let dataset = Dataset::new(items, LabelSpace::new(labels).unwrap(), attrs, vec![]).unwrap();
    (dataset, preds)
}

/// Accuracy on an explicit index set, recounted from raw strings.
pub fn recount_accuracy(dataset: &Dataset, preds: &PredictionTable, members: &BTreeSet<usize>) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let correct = members
        .iter()
        .filter(|&&i| {
            let item = &dataset.items()[i];
            preds.entries[&item.id].predicted_label == dataset.label_space().name(item.true_label)
        })
        .count();
    correct as f64 / members.len() as f64
}
