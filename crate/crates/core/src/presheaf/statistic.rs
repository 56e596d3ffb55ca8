//! Per-open-set statistics and the registry that selects them by name.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bitset::MemberSet;
use crate::error::{Error, Result};
use crate::model::EvaluationContext;

/// The built-in statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Accuracy,
    PrecisionMacro,
    RecallMacro,
    F1Macro,
    MeanLoss,
}

impl StatKind {
    pub const ALL: [StatKind; 5] =
        [StatKind::Accuracy, StatKind::PrecisionMacro, StatKind::RecallMacro, StatKind::F1Macro, StatKind::MeanLoss];

    pub fn name(self) -> &'static str {
        match self {
            Self::Accuracy => "accuracy",
            Self::PrecisionMacro => "precision_macro",
            Self::RecallMacro => "recall_macro",
            Self::F1Macro => "f1_macro",
            Self::MeanLoss => "mean_loss",
        }
    }

    pub fn statistic(self) -> Arc<dyn Statistic> {
        match self {
            Self::Accuracy => Arc::new(Accuracy),
            Self::PrecisionMacro => Arc::new(MacroRate(PerLabel::Precision)),
            Self::RecallMacro => Arc::new(MacroRate(PerLabel::Recall)),
            Self::F1Macro => Arc::new(MacroRate(PerLabel::F1)),
            Self::MeanLoss => Arc::new(MeanLoss),
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::UnknownStatistic(s.to_owned()))
    }
}

/// A statistic evaluated on a nonempty subset of the evaluation context.
///
/// Empty sets never reach `evaluate`; their section is the single point 0.
pub trait Statistic: Send + Sync {
    /// Registry key, e.g. `accuracy`.
    fn name(&self) -> &str;

    /// Column heading for rendered tables, e.g. `Accuracy`.
    fn label(&self) -> &str;

    /// Rate statistics take values in `[0, 1]`; others in `[0, ∞)`.
    fn is_rate(&self) -> bool;

    fn evaluate(&self, members: &MemberSet, ctx: &EvaluationContext) -> Result<f64>;
}

impl fmt::Debug for dyn Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Statistic({})", self.name())
    }
}

pub struct Accuracy;

impl Statistic for Accuracy {
    fn name(&self) -> &str {
        StatKind::Accuracy.name()
    }

    fn label(&self) -> &str {
        "Accuracy"
    }

    fn is_rate(&self) -> bool {
        true
    }

    fn evaluate(&self, members: &MemberSet, ctx: &EvaluationContext) -> Result<f64> {
        let correct = ctx.correct_set().intersection_count(members);
        Ok(correct as f64 / members.count() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerLabel {
    Precision,
    Recall,
    F1,
}

/// Macro average over the true labels present in the subset of a one-vs-rest
/// per-label rate computed within the subset. Per-label terms with a zero
/// denominator are left out of the average; if none remain the value is 0.
pub struct MacroRate(pub PerLabel);

#[derive(Clone, Copy, Default)]
struct Tally {
    tp: u64,
    fp: u64,
    fn_: u64,
    support: u64,
}

impl Statistic for MacroRate {
    fn name(&self) -> &str {
        match self.0 {
            PerLabel::Precision => StatKind::PrecisionMacro.name(),
            PerLabel::Recall => StatKind::RecallMacro.name(),
            PerLabel::F1 => StatKind::F1Macro.name(),
        }
    }

    fn label(&self) -> &str {
        match self.0 {
            PerLabel::Precision => "Macro precision",
            PerLabel::Recall => "Macro recall",
            PerLabel::F1 => "Macro F1",
        }
    }

    fn is_rate(&self) -> bool {
        true
    }

    fn evaluate(&self, members: &MemberSet, ctx: &EvaluationContext) -> Result<f64> {
        let mut tallies = vec![Tally::default(); ctx.label_space().len()];
        for i in members.iter() {
            let (t, p) = (ctx.true_label(i).0, ctx.predicted_label(i).0);
            tallies[t].support += 1;
            if t == p {
                tallies[t].tp += 1;
            } else {
                tallies[t].fn_ += 1;
                tallies[p].fp += 1;
            }
        }
        let (mut sum, mut terms) = (0.0, 0u64);
        for t in tallies.iter().filter(|t| t.support > 0) {
            let (num, den) = match self.0 {
                PerLabel::Precision => (t.tp, t.tp + t.fp),
                PerLabel::Recall => (t.tp, t.tp + t.fn_),
                PerLabel::F1 => (2 * t.tp, 2 * t.tp + t.fp + t.fn_),
            };
            if den > 0 {
                sum += num as f64 / den as f64;
                terms += 1;
            }
        }
        Ok(if terms == 0 { 0.0 } else { sum / terms as f64 })
    }
}

pub struct MeanLoss;

impl Statistic for MeanLoss {
    fn name(&self) -> &str {
        StatKind::MeanLoss.name()
    }

    fn label(&self) -> &str {
        "Mean loss"
    }

    fn is_rate(&self) -> bool {
        false
    }

    fn evaluate(&self, members: &MemberSet, ctx: &EvaluationContext) -> Result<f64> {
        let mut sum = 0.0;
        for i in members.iter() {
            sum += ctx.loss(i).ok_or_else(|| Error::MissingLoss { id: ctx.id(i).to_owned() })?;
        }
        Ok(sum / members.count() as f64)
    }
}

/// Statistics addressable by name.
#[derive(Clone)]
pub struct StatisticRegistry {
    entries: BTreeMap<String, Arc<dyn Statistic>>,
}

impl Default for StatisticRegistry {
    fn default() -> Self {
        let mut reg = Self { entries: BTreeMap::new() };
        for kind in StatKind::ALL {
            reg.register(kind.statistic());
        }
        reg
    }
}

impl StatisticRegistry {
    /// Registers a statistic under its own name, replacing any previous one.
    pub fn register(&mut self, stat: Arc<dyn Statistic>) {
        self.entries.insert(stat.name().to_owned(), stat);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Statistic>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownStatistic(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
