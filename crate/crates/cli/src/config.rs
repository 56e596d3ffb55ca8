use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dataspace_core::topology::{AttributeSelection, Threshold};
use dataspace_core::{GenerationConfig, SubbasisSpec};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "dataspace", version, about = "Evaluate a model on the open sets of a metadata-induced topology")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the topology and write it as JSON.
    Build(BuildArgs),
    /// Compute an assignment and write the analysis report.
    Report(ReportArgs),
    /// Neighborhood report for a single item.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Dataset file (CSV, or JSON lines for .jsonl/.ndjson/.json).
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSON sidecar assigning column roles.
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenerationArgs {
    #[arg(long, default_value_t = 2)]
    pub max_intersection_arity: usize,
    #[arg(long, default_value_t = 1)]
    pub max_union_arity: usize,
    #[arg(long, default_value_t = 20)]
    pub min_cardinality: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_open_sets: usize,
    #[arg(long)]
    pub keep_empty_intersections: bool,

    /// Leave labels out of the subbasis.
    #[arg(long)]
    pub no_labels: bool,
    /// Leave attributes out of the subbasis.
    #[arg(long, conflicts_with = "attribute")]
    pub no_attributes: bool,
    /// Use only these attributes (repeatable); default is all.
    #[arg(long = "attribute", value_name = "NAME")]
    pub attribute: Vec<String>,
    /// Scalar threshold element such as `wingspan>=30` (repeatable).
    #[arg(long = "threshold", value_name = "EXPR")]
    pub threshold: Vec<Threshold>,
    /// Append a synthetic `all` element if the subbasis does not cover every item.
    #[arg(long)]
    pub waive_coverage: bool,
}

impl GenerationArgs {
    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            max_intersection_arity: self.max_intersection_arity,
            max_union_arity: self.max_union_arity,
            min_cardinality: self.min_cardinality,
            max_open_sets: self.max_open_sets,
            keep_empty_intersections: self.keep_empty_intersections,
        }
    }

    pub fn subbasis(&self) -> SubbasisSpec {
        let attributes = if self.no_attributes {
            AttributeSelection::None
        } else if self.attribute.is_empty() {
            AttributeSelection::All
        } else {
            AttributeSelection::Named(self.attribute.clone())
        };
        SubbasisSpec {
            labels: !self.no_labels,
            attributes,
            thresholds: self.threshold.clone(),
            waive_coverage: self.waive_coverage,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest file; defaults to `<out>.manifest.json`, or stderr without --out.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub generation: GenerationArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Predictions CSV with header item_id,predicted_label[,loss].
    #[arg(long)]
    pub predictions: PathBuf,
    /// Previously exported topology; generation flags are ignored when given.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[command(flatten)]
    pub generation: GenerationArgs,
    #[arg(long, default_value = "accuracy")]
    pub statistic: String,
    #[arg(long, default_value = "md")]
    pub format: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Bound on |U \ V| for local inconsistency.
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, default_value_t = 10)]
    pub bottom: usize,
    /// Item id to report neighborhoods for (repeatable).
    #[arg(long = "item", value_name = "ID")]
    pub item: Vec<String>,
    /// Open set, by expression text, to report inconsistency for (repeatable).
    /// All open sets when omitted.
    #[arg(long = "set", value_name = "EXPR")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    #[arg(long = "item", value_name = "ID")]
    pub item: String,
    #[arg(long, default_value_t = 3)]
    pub top: usize,
    #[arg(long, default_value_t = 3)]
    pub bottom: usize,
}

/// Everything a run depends on, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub predictions: Option<PathBuf>,
    pub topology: Option<PathBuf>,
    pub generation: GenerationConfig,
    pub subbasis: SubbasisSpec,
    pub statistic: Option<String>,
    pub k: Option<usize>,
    pub top: Option<usize>,
    pub bottom: Option<usize>,
    pub items: Vec<String>,
    pub sets: Vec<String>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn base(command: &'static str, input: &InputArgs, generation: &GenerationArgs, out: &OutputArgs) -> Self {
        Self {
            command,
            dataset: input.dataset.clone(),
            schema: input.schema.clone(),
            predictions: None,
            topology: None,
            generation: generation.generation(),
            subbasis: generation.subbasis(),
            statistic: None,
            k: None,
            top: None,
            bottom: None,
            items: Vec::new(),
            sets: Vec::new(),
            format: None,
            out: out.out.clone(),
        }
    }

    fn eval(command: &'static str, eval: &EvalArgs) -> Self {
        Self {
            predictions: Some(eval.predictions.clone()),
            topology: eval.topology.clone(),
            statistic: Some(eval.statistic.clone()),
            format: Some(eval.format.clone()),
            ..Self::base(command, &eval.input, &eval.generation, &eval.output)
        }
    }

    pub fn from_build(args: &BuildArgs) -> Self {
        Self::base("build", &args.input, &args.generation, &args.output)
    }

    pub fn from_report(args: &ReportArgs) -> Self {
        Self {
            k: Some(args.k),
            top: Some(args.top),
            bottom: Some(args.bottom),
            items: args.item.clone(),
            sets: args.set.clone(),
            ..Self::eval("report", &args.eval)
        }
    }

    pub fn from_inspect(args: &InspectArgs) -> Self {
        Self {
            top: Some(args.top),
            bottom: Some(args.bottom),
            items: vec![args.item.clone()],
            ..Self::eval("inspect", &args.eval)
        }
    }
}
