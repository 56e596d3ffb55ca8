//! Evaluation quantities derived from an assignment: restriction
//! differences, local k-bounded inconsistency, neighborhood extrema and
//! rankings.
//!
//! Everything here quantifies over the *materialized* open sets only.
//! Ties are broken by larger cardinality, then smaller os_id.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presheaf::Assignment;
use crate::topology::{ExprKind, OsId, Topology};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyResult {
    pub u: OsId,
    pub k: usize,
    pub value: f64,
    pub witness_v: OsId,
    pub candidates_examined: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodExtrema {
    pub item_index: usize,
    pub a_max: f64,
    pub argmax: OsId,
    pub a_min: f64,
    pub argmin: OsId,
    pub neighborhood_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedSlice {
    pub os_id: OsId,
    pub expr: String,
    pub cardinality: usize,
    pub value: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDirection {
    Top,
    Bottom,
}

/// Optional predicate on cardinality and expression shape.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceFilter {
    pub min_cardinality: Option<usize>,
    pub max_cardinality: Option<usize>,
    pub kinds: Option<Vec<ExprKind>>,
}

impl SliceFilter {
    pub fn min_cardinality(n: usize) -> Self {
        Self { min_cardinality: Some(n), ..Default::default() }
    }

    pub fn matches(&self, topology: &Topology, id: OsId) -> bool {
        let Ok(set) = topology.get(id) else { return false };
        self.min_cardinality.is_none_or(|m| set.cardinality >= m)
            && self.max_cardinality.is_none_or(|m| set.cardinality <= m)
            && self.kinds.as_ref().is_none_or(|ks| ks.contains(&set.canonical_expr.kind()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    pub item_index: usize,
    pub bottom: Vec<RankedSlice>,
    pub top: Vec<RankedSlice>,
}

/// `(value, cardinality, id)` ordered so that the greatest element is the
/// preferred maximizer.
fn tie_key(value: f64, cardinality: usize, id: OsId) -> impl Ord {
    // + 0.0 folds -0.0 into 0.0 so total_cmp sees them as equal
    (OrdF64(value + 0.0), cardinality, std::cmp::Reverse(id))
}

#[derive(Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn checked(assign: &Assignment, topology: &Topology) -> Result<()> {
    if assign.len() != topology.len() {
        return Err(Error::AssignmentMismatch { assignment: assign.len(), topology: topology.len() });
    }
    Ok(())
}

/// `res_{U,V}(a_U) − a_V`, signed.
pub fn restriction_difference(assign: &Assignment, topology: &Topology, u: OsId, v: OsId) -> Result<f64> {
    checked(assign, topology)?;
    let restricted = assign.presheaf().restrict(topology, u, v, assign.value(u)?)?;
    Ok(restricted - assign.value(v)?)
}

/// Largest `|res_{U,V}(a_U) − a_V|` over materialized `V ⊆ U` with
/// `|U \ V| ≤ k`. `V = U` is always a candidate, so the value is ≥ 0.
pub fn local_inconsistency(assign: &Assignment, topology: &Topology, u: OsId, k: usize) -> Result<InconsistencyResult> {
    checked(assign, topology)?;
    let target = topology.get(u)?;
    let a_u = assign.value(u)?;
    let size = target.cardinality;

    let mut best: Option<(f64, usize, OsId)> = None;
    let mut examined = 0;
    // V ⊆ U implies |U \ V| = |U| − |V|, so only sizes in [|U| − k, |U|] qualify.
    for v in topology.with_cardinality_between(size.saturating_sub(k), size) {
        let set = &topology.open_sets()[v.0];
        if !set.members.is_subset(&target.members) {
            continue;
        }
        examined += 1;
        let diff = (assign.presheaf().restriction.restrict(target, set, a_u) - assign.values()[v.0]).abs();
        let better = match best {
            None => true,
            Some((bv, bc, bid)) => tie_key(diff, set.cardinality, v) > tie_key(bv, bc, bid),
        };
        if better {
            best = Some((diff, set.cardinality, v));
        }
    }
    let (value, _, witness_v) = best.expect("U is always its own candidate");
    Ok(InconsistencyResult { u, k, value, witness_v, candidates_examined: examined })
}

/// Best and worst values over the open sets containing the item.
pub fn neighborhood_extrema(assign: &Assignment, topology: &Topology, item_index: usize) -> Result<NeighborhoodExtrema> {
    checked(assign, topology)?;
    let hoods = topology.neighborhoods_of(item_index)?;
    let key = |id: OsId, flip: bool| {
        let v = assign.values()[id.0];
        tie_key(if flip { -v } else { v }, topology.open_sets()[id.0].cardinality, id)
    };
    let argmax = *hoods.iter().max_by_key(|&&id| key(id, false)).expect("FULL contains every item");
    let argmin = *hoods.iter().max_by_key(|&&id| key(id, true)).expect("FULL contains every item");
    Ok(NeighborhoodExtrema {
        item_index,
        a_max: assign.values()[argmax.0],
        argmax,
        a_min: assign.values()[argmin.0],
        argmin,
        neighborhood_count: hoods.len(),
    })
}

fn rank_ids(
    assign: &Assignment,
    topology: &Topology,
    ids: impl Iterator<Item = OsId>,
    direction: RankDirection,
    n: usize,
) -> Vec<RankedSlice> {
    let mut ids: Vec<OsId> = ids.filter(|&id| id != Topology::EMPTY).collect();
    let key = |id: &OsId| {
        let v = assign.values()[id.0];
        let v = if direction == RankDirection::Top { v } else { -v };
        std::cmp::Reverse(tie_key(v, topology.open_sets()[id.0].cardinality, *id))
    };
    ids.sort_by_cached_key(key);
    ids.into_iter()
        .take(n)
        .enumerate()
        .map(|(r, id)| {
            let set = &topology.open_sets()[id.0];
            RankedSlice {
                os_id: id,
                expr: topology.render(&set.canonical_expr),
                cardinality: set.cardinality,
                value: assign.values()[id.0],
                rank: r + 1,
            }
        })
        .collect()
}

/// Best (`Top`) or worst (`Bottom`) `n` nonempty open sets passing `filter`.
pub fn rank_open_sets(
    assign: &Assignment,
    topology: &Topology,
    direction: RankDirection,
    n: usize,
    filter: &SliceFilter,
) -> Result<Vec<RankedSlice>> {
    checked(assign, topology)?;
    let ids = (0..topology.len()).map(OsId).filter(|&id| filter.matches(topology, id));
    Ok(rank_ids(assign, topology, ids, direction, n))
}

/// Bottom and top `n` among the neighborhoods of one item.
pub fn neighborhood_report(assign: &Assignment, topology: &Topology, item_index: usize, n: usize) -> Result<NeighborhoodReport> {
    checked(assign, topology)?;
    let hoods = topology.neighborhoods_of(item_index)?;
    Ok(NeighborhoodReport {
        item_index,
        bottom: rank_ids(assign, topology, hoods.iter().copied(), RankDirection::Bottom, n),
        top: rank_ids(assign, topology, hoods.iter().copied(), RankDirection::Top, n),
    })
}

/// Number of nonempty open sets whose value is exactly `target`.
pub fn count_with_value(assign: &Assignment, topology: &Topology, target: f64) -> Result<usize> {
    checked(assign, topology)?;
    Ok(topology.open_sets().iter().filter(|s| s.cardinality > 0 && assign.values()[s.os_id.0] == target).count())
}

/// [`local_inconsistency`] for every open set, in id order.
pub fn inconsistency_all(assign: &Assignment, topology: &Topology, k: usize) -> Result<Vec<InconsistencyResult>> {
    use rayon::prelude::*;
    checked(assign, topology)?;
    (0..topology.len()).into_par_iter().map(|u| local_inconsistency(assign, topology, OsId(u), k)).collect()
}
