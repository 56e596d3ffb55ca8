//! Statistic-valued presheaves over a materialized topology.
//!
//! A section over a nonempty open set is a single real number; the section
//! space over `EMPTY` is the single point `{0}`. Restriction is the identity
//! into nonempty sets and the zero map into `EMPTY`.

mod statistic;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EvaluationContext;
use crate::topology::{OpenSet, OsId, Topology};

pub use statistic::{Accuracy, MacroRate, MeanLoss, PerLabel, StatKind, Statistic, StatisticRegistry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionSpace {
    /// `[0, 1]`
    UnitInterval,
    /// `[0, ∞)`
    NonNegative,
    /// `{0}`, the sections over the empty set.
    Zero,
}

impl SectionSpace {
    pub fn contains(self, value: f64) -> bool {
        match self {
            Self::UnitInterval => (0.0..=1.0).contains(&value),
            Self::NonNegative => value >= 0.0 && value.is_finite(),
            Self::Zero => value == 0.0,
        }
    }
}

/// Produces `res_{U,V}` for nested open sets `V ⊆ U`.
pub trait RestrictionRule: Send + Sync {
    fn name(&self) -> &str;

    fn restrict(&self, from: &OpenSet, to: &OpenSet, value: f64) -> f64;
}

/// Identity into nonempty sets, zero map into the empty set.
pub struct IdentityOrZero;

impl RestrictionRule for IdentityOrZero {
    fn name(&self) -> &str {
        "identity_or_zero"
    }

    fn restrict(&self, _from: &OpenSet, to: &OpenSet, value: f64) -> f64 {
        if to.cardinality == 0 {
            0.0
        } else {
            value
        }
    }
}

#[derive(Clone)]
pub struct PresheafSpec {
    pub statistic: Arc<dyn Statistic>,
    pub restriction: Arc<dyn RestrictionRule>,
}

impl fmt::Debug for PresheafSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PresheafSpec")
            .field("statistic", &self.statistic.name())
            .field("restriction", &self.restriction.name())
            .finish()
    }
}

impl PresheafSpec {
    pub fn new(statistic: Arc<dyn Statistic>) -> Self {
        Self { statistic, restriction: Arc::new(IdentityOrZero) }
    }

    pub fn section_space(&self, set: &OpenSet) -> SectionSpace {
        if set.cardinality == 0 {
            SectionSpace::Zero
        } else if self.statistic.is_rate() {
            SectionSpace::UnitInterval
        } else {
            SectionSpace::NonNegative
        }
    }

    /// `res_{U,V}(value)`; fails unless `V ⊆ U`.
    pub fn restrict(&self, topology: &Topology, u: OsId, v: OsId, value: f64) -> Result<f64> {
        let (from, to) = (topology.get(u)?, topology.get(v)?);
        if !to.members.is_subset(&from.members) {
            return Err(Error::NotNested { u: u.0, v: v.0 });
        }
        Ok(self.restriction.restrict(from, to, value))
    }
}

/// The statistic's value on one open set; 0 on the empty set.
pub fn section_value(stat: &dyn Statistic, set: &OpenSet, ctx: &EvaluationContext) -> Result<f64> {
    if set.members.universe() != ctx.len() {
        return Err(Error::ContextMismatch { topology: set.members.universe(), context: ctx.len() });
    }
    if set.cardinality == 0 {
        return Ok(0.0);
    }
    stat.evaluate(&set.members, ctx)
}

/// One section per open set, indexed by os_id.
#[derive(Clone, Debug)]
pub struct Assignment {
    presheaf: PresheafSpec,
    values: Vec<f64>,
    source_tag: String,
}

impl Assignment {
    pub fn from_values(presheaf: PresheafSpec, values: Vec<f64>, source_tag: impl Into<String>) -> Self {
        Self { presheaf, values, source_tag: source_tag.into() }
    }

    /// Builds from `(os_id, value)` pairs in any order; ids must be exactly
    /// `0..pairs.len()`.
    pub fn from_pairs(
        presheaf: PresheafSpec,
        pairs: impl IntoIterator<Item = (OsId, f64)>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        let mut slots: Vec<Option<f64>> = Vec::new();
        for (id, v) in pairs {
            if id.0 >= slots.len() {
                slots.resize(id.0 + 1, None);
            }
            if slots[id.0].replace(v).is_some() {
                return Err(Error::DuplicateValue(id.0));
            }
        }
        let values = slots
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or(Error::UnknownOpenSet(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_values(presheaf, values, source_tag))
    }

    pub fn presheaf(&self) -> &PresheafSpec {
        &self.presheaf
    }

    pub fn statistic(&self) -> &dyn Statistic {
        self.presheaf.statistic.as_ref()
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, id: OsId) -> Result<f64> {
        self.values.get(id.0).copied().ok_or(Error::UnknownOpenSet(id.0))
    }

    pub(crate) fn check_against(&self, topology: &Topology) -> Result<()> {
        if self.values.len() != topology.len() {
            return Err(Error::AssignmentMismatch { assignment: self.values.len(), topology: topology.len() });
        }
        Ok(())
    }

    pub fn export(&self, topology: &Topology) -> Result<AssignmentExport> {
        self.check_against(topology)?;
        Ok(AssignmentExport {
            statistic: self.statistic().name().to_owned(),
            restriction: self.presheaf.restriction.name().to_owned(),
            source_tag: self.source_tag.clone(),
            values: topology
                .open_sets()
                .iter()
                .zip(&self.values)
                .map(|(s, &v)| AssignmentRow {
                    os_id: s.os_id,
                    expr: topology.render(&s.canonical_expr),
                    cardinality: s.cardinality,
                    value: round6(v),
                })
                .collect(),
        })
    }

    /// CSV with header `os_id,expr,cardinality,value`, values to 6 decimals.
    pub fn to_csv(&self, topology: &Topology) -> Result<String> {
        self.check_against(topology)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["os_id", "expr", "cardinality", "value"])?;
        for (s, v) in topology.open_sets().iter().zip(&self.values) {
            w.write_record([
                s.os_id.to_string(),
                topology.render(&s.canonical_expr),
                s.cardinality.to_string(),
                format!("{v:.6}"),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    pub fn to_json(&self, topology: &Topology) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.export(topology)?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub os_id: OsId,
    pub expr: String,
    pub cardinality: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentExport {
    pub statistic: String,
    pub restriction: String,
    pub source_tag: String,
    pub values: Vec<AssignmentRow>,
}

/// Rounds to 6 decimal places, the precision used in machine-readable output.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Evaluates `stat` on every open set of `topology`.
pub fn compute_assignment(topology: &Topology, stat: Arc<dyn Statistic>, ctx: &EvaluationContext) -> Result<Assignment> {
    if topology.n_items() != ctx.len() {
        return Err(Error::ContextMismatch { topology: topology.n_items(), context: ctx.len() });
    }
    let values = topology
        .open_sets()
        .par_iter()
        .map(|set| section_value(stat.as_ref(), set, ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok(Assignment::from_values(PresheafSpec::new(stat), values, ctx.source_tag()))
}
