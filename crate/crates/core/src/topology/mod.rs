//! Bounded, deduplicated finite topologies generated from a subbasis.
//!
//! Open sets are identified by their member set. Generation order is fixed:
//! `EMPTY`, `FULL`, the subbasis elements, intersections of 2..=k elements,
//! then unions of 2..=k elements, each combination family in lexicographic
//! index order. When two expressions produce the same members the first one
//! keeps the id and canonical expression; later ones are recorded as
//! provenance.

mod export;
mod expr;
mod subbasis;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::MemberSet;
use crate::error::{Error, Result};

pub use export::{OpenSetExport, SubbasisElementExport, TopologyExport};
pub use expr::{ExprKind, SetExpr};
pub use subbasis::{
    build_subbasis, AttributeSelection, Direction, ElementKind, Subbasis, SubbasisElement, SubbasisSpec, Threshold,
    COVER_ELEMENT_NAME,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OsId(pub usize);

impl std::fmt::Display for OsId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub max_intersection_arity: usize,
    pub max_union_arity: usize,
    pub min_cardinality: usize,
    pub max_open_sets: usize,
    /// Record empty intersections as extra expressions of `EMPTY`.
    pub keep_empty_intersections: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            max_intersection_arity: 2,
            max_union_arity: 1,
            min_cardinality: 20,
            max_open_sets: 1_000_000,
            keep_empty_intersections: false,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_intersection_arity < 1 {
            return Err(Error::ArityBelowOne("max_intersection_arity"));
        }
        if self.max_union_arity < 1 {
            return Err(Error::ArityBelowOne("max_union_arity"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenSet {
    pub os_id: OsId,
    pub members: MemberSet,
    pub canonical_expr: SetExpr,
    /// Every expression that produced these members, canonical first.
    pub all_exprs: Vec<SetExpr>,
    pub cardinality: usize,
}

#[derive(Clone, Debug)]
pub struct Topology {
    open_sets: Vec<OpenSet>,
    subbasis: Subbasis,
    config: GenerationConfig,
    lookup: HashMap<u64, Vec<OsId>>,
    /// `(cardinality, os_id)` sorted ascending.
    by_cardinality: Vec<(usize, OsId)>,
}

fn members_hash(members: &MemberSet) -> u64 {
    let mut h = DefaultHasher::new();
    members.hash(&mut h);
    h.finish()
}

struct Candidate {
    expr: SetExpr,
    members: MemberSet,
    hash: u64,
}

impl Topology {
    pub const EMPTY: OsId = OsId(0);
    pub const FULL: OsId = OsId(1);

    fn empty_shell(subbasis: Subbasis, config: GenerationConfig) -> Self {
        Self { open_sets: Vec::new(), subbasis, config, lookup: HashMap::new(), by_cardinality: Vec::new() }
    }

    fn find_hashed(&self, members: &MemberSet, hash: u64) -> Option<OsId> {
        self.lookup.get(&hash)?.iter().copied().find(|id| self.open_sets[id.0].members == *members)
    }

    fn push_new(&mut self, expr: SetExpr, members: MemberSet, hash: u64) -> Result<OsId> {
        if self.open_sets.len() >= self.config.max_open_sets {
            return Err(Error::TooManyOpenSets { max: self.config.max_open_sets });
        }
        let os_id = OsId(self.open_sets.len());
        let cardinality = members.count();
        self.lookup.entry(hash).or_default().push(os_id);
        self.open_sets.push(OpenSet { os_id, members, all_exprs: vec![expr.clone()], canonical_expr: expr, cardinality });
        Ok(os_id)
    }

    /// Applies the merge / filter rules to one candidate.
    fn offer(&mut self, cand: Candidate) -> Result<()> {
        if let Some(id) = self.find_hashed(&cand.members, cand.hash) {
            let set = &mut self.open_sets[id.0];
            if !set.all_exprs.contains(&cand.expr) {
                set.all_exprs.push(cand.expr);
            }
            return Ok(());
        }
        if cand.members.count() < self.config.min_cardinality {
            return Ok(());
        }
        self.push_new(cand.expr, cand.members, cand.hash).map(|_| ())
    }

    fn finish(mut self) -> Self {
        self.by_cardinality = self.open_sets.iter().map(|s| (s.cardinality, s.os_id)).collect();
        self.by_cardinality.sort_unstable();
        self
    }

    /// Materializes the bounded topology generated by `subbasis`.
    pub fn generate(subbasis: Subbasis, config: GenerationConfig) -> Result<Self> {
        config.validate()?;
        let n = subbasis.n_items();
        if n == 0 {
            return Err(Error::InvalidDataset("cannot build a topology over zero items".into()));
        }
        let full = subbasis.union_of_all();
        let full_card = full.count();
        let elements: Vec<MemberSet> = subbasis.elements().iter().map(|e| e.members.clone()).collect();
        let mut topo = Self::empty_shell(subbasis, config.clone());

        let empty = MemberSet::empty(n);
        let h = members_hash(&empty);
        topo.push_new(SetExpr::Empty, empty, h)?;
        let h = members_hash(&full);
        topo.push_new(SetExpr::Full, full, h)?;

        for (i, members) in elements.iter().enumerate() {
            let hash = members_hash(members);
            topo.offer(Candidate { expr: SetExpr::Element(i), members: members.clone(), hash })?;
        }

        // A candidate below min_cardinality survives only by equalling an
        // existing set, and the only existing sets that small are EMPTY and
        // FULL; everything else can be discarded before the serial merge.
        let min_card = config.min_cardinality;
        let keep_empty = config.keep_empty_intersections;
        let worth_offering = |card: usize| card >= min_card || card == full_card;

        for arity in 2..=config.max_intersection_arity.min(elements.len()) {
            let batches = combination_batches(elements.len(), arity, |combo| {
                let mut acc = elements[combo[0]].clone();
                for &j in &combo[1..] {
                    acc.intersect_with(&elements[j]);
                }
                let card = acc.count();
                if card == 0 && !keep_empty {
                    return None;
                }
                (card == 0 || worth_offering(card)).then(|| {
                    let hash = members_hash(&acc);
                    Candidate { expr: SetExpr::intersection_of(combo), members: acc, hash }
                })
            });
            for cand in batches.into_iter().flatten() {
                topo.offer(cand)?;
            }
        }

        for arity in 2..=config.max_union_arity.min(elements.len()) {
            let batches = combination_batches(elements.len(), arity, |combo| {
                let mut acc = elements[combo[0]].clone();
                for &j in &combo[1..] {
                    acc.union_with(&elements[j]);
                }
                let card = acc.count();
                (card == 0 || worth_offering(card)).then(|| {
                    let hash = members_hash(&acc);
                    Candidate { expr: SetExpr::union_of(combo), members: acc, hash }
                })
            });
            for cand in batches.into_iter().flatten() {
                topo.offer(cand)?;
            }
        }

        Ok(topo.finish())
    }

    /// Rebuilds a topology from already-deduplicated open sets, checking
    /// ids, cardinalities and uniqueness. Used by import.
    pub(crate) fn from_parts(subbasis: Subbasis, config: GenerationConfig, sets: Vec<OpenSet>) -> Result<Self> {
        let mut topo = Self::empty_shell(subbasis, config);
        for (i, set) in sets.into_iter().enumerate() {
            if set.os_id != OsId(i) {
                return Err(Error::BadTopologyImport(format!("open set at position {i} has os_id {}", set.os_id)));
            }
            if set.cardinality != set.members.count() {
                return Err(Error::BadTopologyImport(format!("open set {i} has a wrong cardinality")));
            }
            let hash = members_hash(&set.members);
            if topo.find_hashed(&set.members, hash).is_some() {
                return Err(Error::BadTopologyImport(format!("open set {i} duplicates an earlier set")));
            }
            topo.lookup.entry(hash).or_default().push(set.os_id);
            topo.open_sets.push(set);
        }
        let n = topo.subbasis.n_items();
        let ok_empty = topo.open_sets.first().is_some_and(|s| s.members.is_empty());
        let ok_full = topo.open_sets.get(1).is_some_and(|s| s.cardinality == n);
        if !ok_empty || !ok_full {
            return Err(Error::BadTopologyImport("open sets 0 and 1 must be EMPTY and FULL".into()));
        }
        Ok(topo.finish())
    }

    pub fn open_sets(&self) -> &[OpenSet] {
        &self.open_sets
    }

    pub fn len(&self) -> usize {
        self.open_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open_sets.is_empty()
    }

    pub fn subbasis(&self) -> &Subbasis {
        &self.subbasis
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    pub fn n_items(&self) -> usize {
        self.subbasis.n_items()
    }

    pub fn get(&self, id: OsId) -> Result<&OpenSet> {
        self.open_sets.get(id.0).ok_or(Error::UnknownOpenSet(id.0))
    }

    /// `members(v) ⊆ members(u)`.
    pub fn is_subset(&self, v: OsId, u: OsId) -> Result<bool> {
        Ok(self.get(v)?.members.is_subset(&self.get(u)?.members))
    }

    /// All open sets containing the item, in id order. Never includes `EMPTY`.
    pub fn neighborhoods_of(&self, item_index: usize) -> Result<Vec<OsId>> {
        if item_index >= self.n_items() {
            return Err(Error::ItemOutOfRange { index: item_index, n_items: self.n_items() });
        }
        Ok(self.open_sets.iter().filter(|s| s.members.contains(item_index)).map(|s| s.os_id).collect())
    }

    /// Open sets whose cardinality lies in `lo..=hi`, ordered by cardinality
    /// then id.
    pub fn with_cardinality_between(&self, lo: usize, hi: usize) -> impl Iterator<Item = OsId> + '_ {
        let start = self.by_cardinality.partition_point(|&(c, _)| c < lo);
        self.by_cardinality[start..].iter().take_while(move |&&(c, _)| c <= hi).map(|&(_, id)| id)
    }

    /// Open sets nested in `u`, in id order.
    pub fn subsets_of(&self, u: OsId) -> Result<Vec<OsId>> {
        let target = &self.get(u)?.members;
        let mut ids: Vec<OsId> = self
            .with_cardinality_between(0, target.count())
            .filter(|id| self.open_sets[id.0].members.is_subset(target))
            .collect();
        ids.sort_unstable();
        Ok(ids)
    }

    pub fn find_by_members(&self, members: &MemberSet) -> Option<OsId> {
        if members.universe() != self.n_items() {
            return None;
        }
        self.find_hashed(members, members_hash(members))
    }

    /// Resolves expression text (e.g. `attr:red ∩ label:A`) to the open set
    /// it evaluates to.
    pub fn resolve(&self, text: &str) -> Result<OsId> {
        let expr = SetExpr::parse(text, &self.subbasis)?;
        self.find_by_members(&expr.evaluate(&self.subbasis)).ok_or_else(|| Error::NotMaterialized(text.to_owned()))
    }

    pub fn render(&self, expr: &SetExpr) -> String {
        expr.render(&self.subbasis)
    }

    /// Canonical expression text of an open set.
    pub fn name_of(&self, id: OsId) -> Result<String> {
        Ok(self.render(&self.get(id)?.canonical_expr))
    }
}

/// Evaluates `f` on every `arity`-combination of `0..n` in lexicographic
/// order, in parallel, returning results grouped by leading index.
fn combination_batches<T, F>(n: usize, arity: usize, f: F) -> Vec<Vec<T>>
where
    T: Send,
    F: Fn(&[usize]) -> Option<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut combo = Vec::with_capacity(arity);
            ((first + 1)..n)
                .combinations(arity - 1)
                .filter_map(|rest| {
                    combo.clear();
                    combo.push(first);
                    combo.extend(rest);
                    f(&combo)
                })
                .collect()
        })
        .collect()
}
