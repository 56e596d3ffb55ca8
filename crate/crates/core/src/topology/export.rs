//! JSON export / import of a materialized topology.
//!
//! Member sets are written as item ids in dataset row order, so importing
//! needs the dataset the topology was built from.

use serde::{Deserialize, Serialize};

use super::{ElementKind, GenerationConfig, OpenSet, OsId, SetExpr, Subbasis, Topology};
use crate::bitset::MemberSet;
use crate::error::{Error, Result};
use crate::model::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubbasisElementExport {
    pub sb_index: usize,
    pub name: String,
    pub kind: ElementKind,
    pub member_ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenSetExport {
    pub os_id: OsId,
    /// Canonical expression text.
    pub expr: String,
    pub cardinality: usize,
    pub member_ids: Vec<String>,
    /// Structured form of every recorded expression, canonical first.
    pub all_exprs: Vec<SetExpr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyExport {
    pub n_items: usize,
    pub subbasis: Vec<SubbasisElementExport>,
    pub open_sets: Vec<OpenSetExport>,
    pub config: GenerationConfig,
}

fn ids_of(members: &MemberSet, dataset: &Dataset) -> Vec<String> {
    members.iter().map(|i| dataset.items()[i].id.clone()).collect()
}

fn members_of(ids: &[String], dataset: &Dataset) -> Result<MemberSet> {
    let mut set = MemberSet::empty(dataset.len());
    for id in ids {
        let i = dataset.index_of(id).ok_or_else(|| Error::BadTopologyImport(format!("unknown item id '{id}'")))?;
        set.insert(i);
    }
    Ok(set)
}

impl Topology {
    pub fn export(&self, dataset: &Dataset) -> Result<TopologyExport> {
        if dataset.len() != self.n_items() {
            return Err(Error::ContextMismatch { topology: self.n_items(), context: dataset.len() });
        }
        Ok(TopologyExport {
            n_items: self.n_items(),
            subbasis: self
                .subbasis()
                .elements()
                .iter()
                .map(|e| SubbasisElementExport {
                    sb_index: e.sb_index,
                    name: e.name.clone(),
                    kind: e.kind,
                    member_ids: ids_of(&e.members, dataset),
                })
                .collect(),
            open_sets: self
                .open_sets()
                .iter()
                .map(|s| OpenSetExport {
                    os_id: s.os_id,
                    expr: self.render(&s.canonical_expr),
                    cardinality: s.cardinality,
                    member_ids: ids_of(&s.members, dataset),
                    all_exprs: s.all_exprs.clone(),
                })
                .collect(),
            config: self.config().clone(),
        })
    }

    pub fn to_json(&self, dataset: &Dataset) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.export(dataset)?)?)
    }

    /// Rebuilds a topology, checking that every recorded expression still
    /// evaluates to the recorded members.
    pub fn import(doc: &TopologyExport, dataset: &Dataset) -> Result<Self> {
        if doc.n_items != dataset.len() {
            return Err(Error::ContextMismatch { topology: doc.n_items, context: dataset.len() });
        }
        let mut elements = Vec::with_capacity(doc.subbasis.len());
        for (i, e) in doc.subbasis.iter().enumerate() {
            if e.sb_index != i {
                return Err(Error::BadTopologyImport(format!("subbasis element at position {i} has index {}", e.sb_index)));
            }
            elements.push((e.name.clone(), e.kind, members_of(&e.member_ids, dataset)?));
        }
        let subbasis = Subbasis::new(elements, dataset.len())?;

        let mut sets = Vec::with_capacity(doc.open_sets.len());
        for s in &doc.open_sets {
            let members = members_of(&s.member_ids, dataset)?;
            let canonical_expr = s
                .all_exprs
                .first()
                .cloned()
                .ok_or_else(|| Error::BadTopologyImport(format!("open set {} has no expression", s.os_id)))?;
            if canonical_expr.render(&subbasis) != s.expr {
                return Err(Error::BadTopologyImport(format!("open set {} expression text does not match its tree", s.os_id)));
            }
            if let Some(bad) = s.all_exprs.iter().find(|e| e.evaluate(&subbasis) != members) {
                return Err(Error::BadTopologyImport(format!(
                    "open set {}: '{}' does not evaluate to its members",
                    s.os_id,
                    bad.render(&subbasis)
                )));
            }
            sets.push(OpenSet {
                os_id: s.os_id,
                cardinality: s.cardinality,
                members,
                canonical_expr,
                all_exprs: s.all_exprs.clone(),
            });
        }
        Topology::from_parts(subbasis, doc.config.clone(), sets)
    }

    pub fn from_json(text: &str, dataset: &Dataset) -> Result<Self> {
        Self::import(&serde_json::from_str(text)?, dataset)
    }
}
