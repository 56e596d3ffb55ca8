use dataspace_core::analysis::{
    count_with_value, inconsistency_all, local_inconsistency, neighborhood_extrema, neighborhood_report,
    rank_open_sets, InconsistencyResult, RankDirection, RankedSlice, SliceFilter,
};
use dataspace_core::presheaf::round6;
use dataspace_core::{Assignment, EvaluationContext, OsId, Topology};
use serde::{Serialize, Serializer};

fn six<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round6(*v))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRow {
    pub rank: usize,
    pub os_id: usize,
    pub expr: String,
    pub cardinality: usize,
    #[serde(serialize_with = "six")]
    pub value: f64,
}

impl From<RankedSlice> for SliceRow {
    fn from(s: RankedSlice) -> Self {
        Self { rank: s.rank, os_id: s.os_id.0, expr: s.expr, cardinality: s.cardinality, value: s.value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InconsistencyRow {
    pub os_id: usize,
    pub expr: String,
    pub cardinality: usize,
    #[serde(serialize_with = "six")]
    pub value: f64,
    pub witness_os_id: usize,
    pub witness_expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemReport {
    pub item_id: String,
    pub neighborhood_count: usize,
    #[serde(serialize_with = "six")]
    pub a_max: f64,
    pub argmax: String,
    #[serde(serialize_with = "six")]
    pub a_min: f64,
    pub argmin: String,
    pub bottom: Vec<SliceRow>,
    pub top: Vec<SliceRow>,
}

/// Exact-value counts, only meaningful for rate statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeCounts {
    pub at_one: usize,
    pub at_zero: usize,
    pub nonempty: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub statistic: String,
    pub statistic_label: String,
    pub is_rate: bool,
    pub source_tag: String,
    pub n_items: usize,
    pub open_set_count: usize,
    #[serde(serialize_with = "six")]
    pub global_value: f64,
    pub top: Vec<SliceRow>,
    pub bottom: Vec<SliceRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<ExtremeCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub inconsistency: Vec<InconsistencyRow>,
    pub items: Vec<ItemReport>,
}

/// What to put in a report besides the global value.
#[derive(Debug, Clone, Default)]
pub struct ReportRequest {
    pub top: usize,
    pub bottom: usize,
    pub counts: bool,
    /// `None` skips inconsistency entirely.
    pub k: Option<usize>,
    /// Sets to compute inconsistency for; empty means the `top` most
    /// inconsistent nonempty sets.
    pub sets: Vec<OsId>,
    pub items: Vec<usize>,
    pub item_top: usize,
    pub item_bottom: usize,
}

fn incon_row(topology: &Topology, r: &InconsistencyResult) -> dataspace_core::Result<InconsistencyRow> {
    let set = topology.get(r.u)?;
    Ok(InconsistencyRow {
        os_id: r.u.0,
        expr: topology.name_of(r.u)?,
        cardinality: set.cardinality,
        value: r.value,
        witness_os_id: r.witness_v.0,
        witness_expr: topology.name_of(r.witness_v)?,
    })
}

fn rows(slices: Vec<RankedSlice>) -> Vec<SliceRow> {
    slices.into_iter().map(SliceRow::from).collect()
}

pub fn build_report(
    assign: &Assignment,
    topology: &Topology,
    ctx: &EvaluationContext,
    req: &ReportRequest,
) -> dataspace_core::Result<AnalysisReport> {
    let stat = assign.statistic();
    let any = SliceFilter::default();

    let counts = if req.counts && stat.is_rate() {
        Some(ExtremeCounts {
            at_one: count_with_value(assign, topology, 1.0)?,
            at_zero: count_with_value(assign, topology, 0.0)?,
            nonempty: topology.open_sets().iter().filter(|s| s.cardinality > 0).count(),
        })
    } else {
        None
    };

    let mut inconsistency = Vec::new();
    if let Some(k) = req.k {
        if req.sets.is_empty() {
            let mut all: Vec<InconsistencyResult> = inconsistency_all(assign, topology, k)?
                .into_iter()
                .filter(|r| topology.open_sets()[r.u.0].cardinality > 0)
                .collect();
            let card = |r: &InconsistencyResult| topology.open_sets()[r.u.0].cardinality;
            all.sort_by(|a, b| b.value.total_cmp(&a.value).then(card(b).cmp(&card(a))).then(a.u.cmp(&b.u)));
            all.truncate(req.top);
            for r in &all {
                inconsistency.push(incon_row(topology, r)?);
            }
        } else {
            for &u in &req.sets {
                inconsistency.push(incon_row(topology, &local_inconsistency(assign, topology, u, k)?)?);
            }
        }
    }

    let mut items = Vec::new();
    for &x in &req.items {
        let e = neighborhood_extrema(assign, topology, x)?;
        let mut r = neighborhood_report(assign, topology, x, req.item_top.max(req.item_bottom))?;
        r.top.truncate(req.item_top);
        r.bottom.truncate(req.item_bottom);
        items.push(ItemReport {
            item_id: ctx.id(x).to_owned(),
            neighborhood_count: e.neighborhood_count,
            a_max: e.a_max,
            argmax: topology.name_of(e.argmax)?,
            a_min: e.a_min,
            argmin: topology.name_of(e.argmin)?,
            bottom: rows(r.bottom),
            top: rows(r.top),
        });
    }

    Ok(AnalysisReport {
        statistic: stat.name().to_owned(),
        statistic_label: stat.label().to_owned(),
        is_rate: stat.is_rate(),
        source_tag: assign.source_tag().to_owned(),
        n_items: topology.n_items(),
        open_set_count: topology.len(),
        global_value: assign.value(Topology::FULL)?,
        top: rows(rank_open_sets(assign, topology, RankDirection::Top, req.top, &any)?),
        bottom: rows(rank_open_sets(assign, topology, RankDirection::Bottom, req.bottom, &any)?),
        counts,
        k: req.k,
        inconsistency,
        items,
    })
}
