use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, Result};
use dataspace_core::presheaf::round6;

use crate::report::{AnalysisReport, SliceRow};

pub trait ReportRenderer: Send + Sync {
    fn name(&self) -> &'static str;
    fn render(&self, report: &AnalysisReport) -> Result<String>;
}

pub struct JsonRenderer;

impl ReportRenderer for JsonRenderer {
    fn name(&self) -> &'static str {
        "json"
    }

    fn render(&self, report: &AnalysisReport) -> Result<String> {
        let mut s = serde_json::to_string_pretty(report)?;
        s.push('\n');
        Ok(s)
    }
}

/// Long-form CSV: one row per reported value, tagged by section.
pub struct CsvRenderer;

const CSV_HEADER: [&str; 9] =
    ["section", "item_id", "rank", "os_id", "expr", "cardinality", "value", "witness_os_id", "witness_expr"];

impl ReportRenderer for CsvRenderer {
    fn name(&self) -> &'static str {
        "csv"
    }

    fn render(&self, report: &AnalysisReport) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        let num = |v: f64| format!("{:.6}", round6(v));
        let slice = |w: &mut csv::Writer<Vec<u8>>, section: &str, item: &str, s: &SliceRow| {
            w.write_record([
                section,
                item,
                &s.rank.to_string(),
                &s.os_id.to_string(),
                &s.expr,
                &s.cardinality.to_string(),
                &num(s.value),
                "",
                "",
            ])
        };

        w.write_record(["global", "", "", "1", "FULL", &report.n_items.to_string(), &num(report.global_value), "", ""])?;
        for s in &report.top {
            slice(&mut w, "top", "", s)?;
        }
        for s in &report.bottom {
            slice(&mut w, "bottom", "", s)?;
        }
        if let Some(c) = &report.counts {
            w.write_record(["count_at_one", "", "", "", "", &c.at_one.to_string(), "", "", ""])?;
            w.write_record(["count_at_zero", "", "", "", "", &c.at_zero.to_string(), "", "", ""])?;
        }
        for r in &report.inconsistency {
            w.write_record([
                "inconsistency",
                "",
                "",
                &r.os_id.to_string(),
                &r.expr,
                &r.cardinality.to_string(),
                &num(r.value),
                &r.witness_os_id.to_string(),
                &r.witness_expr,
            ])?;
        }
        for it in &report.items {
            w.write_record(["item_max", &it.item_id, "", "", &it.argmax, "", &num(it.a_max), "", ""])?;
            w.write_record(["item_min", &it.item_id, "", "", &it.argmin, "", &num(it.a_min), "", ""])?;
            for s in &it.bottom {
                slice(&mut w, "item_bottom", &it.item_id, s)?;
            }
            for s in &it.top {
                slice(&mut w, "item_top", &it.item_id, s)?;
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Human tables: two columns, rates as percentages to two decimals.
pub struct MarkdownRenderer;

impl MarkdownRenderer {
    pub fn format_value(value: f64, is_rate: bool) -> String {
        if is_rate {
            format!("{:.2}", value * 100.0)
        } else {
            format!("{value:.4}")
        }
    }

    fn table(out: &mut String, label: &str, is_rate: bool, rows: &[&SliceRow]) {
        let _ = writeln!(out, "| Open set | {label} |");
        let _ = writeln!(out, "|---|---:|");
        for r in rows {
            let _ = writeln!(out, "| {} | {} |", escape(&r.expr), Self::format_value(r.value, is_rate));
        }
        out.push('\n');
    }
}

fn escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn ascending(rows: &[SliceRow]) -> Vec<&SliceRow> {
    let mut v: Vec<&SliceRow> = rows.iter().collect();
    v.sort_by(|a, b| a.value.total_cmp(&b.value).then(b.cardinality.cmp(&a.cardinality)).then(a.os_id.cmp(&b.os_id)));
    v
}

impl ReportRenderer for MarkdownRenderer {
    fn name(&self) -> &'static str {
        "md"
    }

    fn render(&self, r: &AnalysisReport) -> Result<String> {
        let fmt = |v: f64| Self::format_value(v, r.is_rate);
        let mut out = String::new();
        let _ = writeln!(out, "# {} by open set\n", r.statistic_label);
        if !r.source_tag.is_empty() {
            let _ = writeln!(out, "Predictions: {}  ", r.source_tag);
        }
        let _ = writeln!(out, "Items: {}  ", r.n_items);
        let _ = writeln!(out, "Open sets: {}  ", r.open_set_count);
        let _ = writeln!(out, "Global {}: {}\n", r.statistic_label.to_lowercase(), fmt(r.global_value));

        if let Some(c) = &r.counts {
            let ones = if c.at_one == c.nonempty && c.nonempty > 0 { "all nonempty".to_owned() } else { c.at_one.to_string() };
            let zeros = if c.at_zero == c.nonempty && c.nonempty > 0 { "all nonempty".to_owned() } else { c.at_zero.to_string() };
            let _ = writeln!(out, "sets at 1.000: {ones}; sets at 0.000: {zeros}\n");
        }

        if !r.bottom.is_empty() {
            out.push_str("## Lowest\n\n");
            Self::table(&mut out, &r.statistic_label, r.is_rate, &ascending(&r.bottom));
        }
        if !r.top.is_empty() {
            out.push_str("## Highest\n\n");
            Self::table(&mut out, &r.statistic_label, r.is_rate, &ascending(&r.top));
        }

        if let (Some(k), false) = (r.k, r.inconsistency.is_empty()) {
            let _ = writeln!(out, "## Local inconsistency (k = {k})\n");
            out.push_str("| Open set | Incon | Witness |\n|---|---:|---|\n");
            for row in &r.inconsistency {
                let _ = writeln!(out, "| {} | {} | {} |", escape(&row.expr), fmt(row.value), escape(&row.witness_expr));
            }
            out.push('\n');
        }

        for it in &r.items {
            let _ = writeln!(out, "## Item {}\n", it.item_id);
            let _ = writeln!(out, "Neighborhoods: {}  ", it.neighborhood_count);
            let _ = writeln!(out, "a_max: {} ({})  ", fmt(it.a_max), it.argmax);
            let _ = writeln!(out, "a_min: {} ({})\n", fmt(it.a_min), it.argmin);
            if !it.bottom.is_empty() {
                out.push_str("### Lowest neighborhoods\n\n");
                Self::table(&mut out, &r.statistic_label, r.is_rate, &ascending(&it.bottom));
            }
            if !it.top.is_empty() {
                out.push_str("### Highest neighborhoods\n\n");
                Self::table(&mut out, &r.statistic_label, r.is_rate, &ascending(&it.top));
            }
        }
        while out.ends_with("\n\n") {
            out.pop();
        }
        Ok(out)
    }
}

pub struct RendererRegistry {
    renderers: BTreeMap<&'static str, Box<dyn ReportRenderer>>,
}

impl Default for RendererRegistry {
    fn default() -> Self {
        let mut reg = Self { renderers: BTreeMap::new() };
        reg.register(Box::new(JsonRenderer));
        reg.register(Box::new(CsvRenderer));
        reg.register(Box::new(MarkdownRenderer));
        reg
    }
}

impl RendererRegistry {
    pub fn register(&mut self, renderer: Box<dyn ReportRenderer>) {
        self.renderers.insert(renderer.name(), renderer);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ReportRenderer> {
        self.renderers.get(name).map(|r| r.as_ref()).ok_or_else(|| {
            anyhow!("unknown format {name:?}; available: {}", self.names().collect::<Vec<_>>().join(", "))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.renderers.keys().copied()
    }
}
