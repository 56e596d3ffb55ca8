use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitset::MemberSet;
use crate::error::{Error, Result};
use crate::model::{AttributeValue, Dataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Label,
    Attribute,
    ScalarGe,
    ScalarLe,
    /// Synthetic element covering every item, appended when coverage is waived.
    Cover,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubbasisElement {
    pub sb_index: usize,
    pub name: String,
    pub kind: ElementKind,
    pub members: MemberSet,
}

/// A covering family of item subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subbasis {
    elements: Vec<SubbasisElement>,
    n_items: usize,
}

impl Subbasis {
    /// Validates name uniqueness and coverage of `0..n_items`.
    pub fn new(elements: Vec<(String, ElementKind, MemberSet)>, n_items: usize) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptySubbasis);
        }
        let mut names = HashSet::new();
        let mut out = Vec::with_capacity(elements.len());
        for (sb_index, (name, kind, members)) in elements.into_iter().enumerate() {
            if members.universe() != n_items {
                return Err(Error::InvalidDataset(format!("element '{name}' is over {} items, expected {n_items}", members.universe())));
            }
            if !names.insert(name.clone()) {
                return Err(Error::DuplicateElementName(name));
            }
            out.push(SubbasisElement { sb_index, name, kind, members });
        }
        let subbasis = Self { elements: out, n_items };
        let uncovered = n_items - subbasis.union_of_all().count();
        if uncovered > 0 {
            return Err(Error::CoverageViolation { uncovered });
        }
        Ok(subbasis)
    }

    pub fn elements(&self) -> &[SubbasisElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn union_of_all(&self) -> MemberSet {
        let mut acc = MemberSet::empty(self.n_items);
        for e in &self.elements {
            acc.union_with(&e.members);
        }
        acc
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ge,
    Le,
}

/// `scalar >= value` or `scalar <= value`. Items with no value for the
/// scalar are never members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub scalar: String,
    pub direction: Direction,
    pub value: f64,
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.direction {
            Direction::Ge => ">=",
            Direction::Le => "<=",
        };
        write!(f, "{}{}{}", self.scalar, op, self.value)
    }
}

impl FromStr for Threshold {
    type Err = String;

    /// Parses `name>=value` or `name<=value`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (scalar, direction, value) = if let Some((a, b)) = s.rsplit_once(">=") {
            (a, Direction::Ge, b)
        } else if let Some((a, b)) = s.rsplit_once("<=") {
            (a, Direction::Le, b)
        } else {
            return Err(format!("threshold '{s}' must look like name>=value or name<=value"));
        };
        let value: f64 = value.trim().parse().map_err(|_| format!("threshold '{s}' has a non-numeric value"))?;
        if !value.is_finite() {
            return Err(format!("threshold '{s}' must be finite"));
        }
        Ok(Self { scalar: scalar.trim().to_owned(), direction, value })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeSelection {
    #[default]
    All,
    None,
    Named(Vec<String>),
}

/// Which metadata become subbasis elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubbasisSpec {
    pub labels: bool,
    pub attributes: AttributeSelection,
    pub thresholds: Vec<Threshold>,
    /// Append a synthetic `all` element instead of failing on coverage.
    pub waive_coverage: bool,
}

impl Default for SubbasisSpec {
    fn default() -> Self {
        Self { labels: true, attributes: AttributeSelection::All, thresholds: Vec::new(), waive_coverage: false }
    }
}

pub const COVER_ELEMENT_NAME: &str = "all";

/// Builds subbasis elements from labels, present attributes and scalar
/// thresholds, in that order, each following dataset declaration order.
pub fn build_subbasis(dataset: &Dataset, spec: &SubbasisSpec) -> Result<Subbasis> {
    let n = dataset.len();
    let mut elements = Vec::new();

    if spec.labels {
        for (l, label) in dataset.label_space().labels().iter().enumerate() {
            let members = MemberSet::from_indices(
                n,
                dataset.items().iter().enumerate().filter(|(_, it)| it.true_label.0 == l).map(|(i, _)| i),
            );
            elements.push((format!("label:{label}"), ElementKind::Label, members));
        }
    }

    let attr_indices: Vec<usize> = match &spec.attributes {
        AttributeSelection::All => (0..dataset.attribute_names().len()).collect(),
        AttributeSelection::None => Vec::new(),
        AttributeSelection::Named(names) => {
            let mut idx = names
                .iter()
                .map(|name| {
                    dataset.attribute_names().iter().position(|a| a == name).ok_or_else(|| Error::UnknownAttribute(name.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            idx.sort_unstable();
            idx.dedup();
            idx
        }
    };
    for a in attr_indices {
        let members = MemberSet::from_indices(
            n,
            dataset
                .items()
                .iter()
                .enumerate()
                .filter(|(_, it)| it.attributes[a] == AttributeValue::Present)
                .map(|(i, _)| i),
        );
        elements.push((format!("attr:{}", dataset.attribute_names()[a]), ElementKind::Attribute, members));
    }

    // thresholds follow scalar declaration order; ties keep the spec's order
    let mut thresholds = spec
        .thresholds
        .iter()
        .map(|t| {
            dataset
                .scalar_names()
                .iter()
                .position(|s| *s == t.scalar)
                .map(|s| (s, t))
                .ok_or_else(|| Error::UnknownScalar(t.scalar.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    thresholds.sort_by_key(|(s, _)| *s);
    for (s, t) in thresholds {
        let members = MemberSet::from_indices(
            n,
            dataset.items().iter().enumerate().filter_map(|(i, it)| {
                let v = it.scalars[s]?;
                let hit = match t.direction {
                    Direction::Ge => v >= t.value,
                    Direction::Le => v <= t.value,
                };
                hit.then_some(i)
            }),
        );
        let kind = match t.direction {
            Direction::Ge => ElementKind::ScalarGe,
            Direction::Le => ElementKind::ScalarLe,
        };
        elements.push((format!("scalar:{t}"), kind, members));
    }

    if elements.is_empty() {
        return Err(Error::EmptySubbasis);
    }
    if spec.waive_coverage {
        let mut covered = MemberSet::empty(n);
        for (_, _, m) in &elements {
            covered.union_with(m);
        }
        if covered.count() < n {
            elements.push((COVER_ELEMENT_NAME.to_owned(), ElementKind::Cover, MemberSet::full(n)));
        }
    }
    Subbasis::new(elements, n)
}
