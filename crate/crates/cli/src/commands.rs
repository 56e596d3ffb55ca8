use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dataspace_core::model::SourceFormat;
use dataspace_core::{
    build_subbasis, compute_assignment, join_validate, parse_dataset, parse_predictions, Assignment, Dataset,
    EvaluationContext, OsId, SchemaDescriptor, Statistic, StatisticRegistry, Topology,
};
use std::sync::Arc;

use crate::config::{BuildArgs, Cli, Command, EvalArgs, GenerationArgs, InputArgs, InspectArgs, OutputArgs, ReportArgs, RunConfig};
use crate::manifest::{InputDigest, RunManifest, Stopwatch};
use crate::render::{RendererRegistry, ReportRenderer};
use crate::report::{build_report, AnalysisReport, ReportRequest};

/// Result of a command before anything is written.
pub struct RunOutput {
    pub body: String,
    pub summary: String,
    pub manifest: RunManifest,
}

fn read_input(manifest: &mut RunManifest, role: &'static str, path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {role} file {}", path.display()))?;
    manifest.inputs.push(InputDigest::new(role, path, &bytes));
    Ok(bytes)
}

fn load_dataset(manifest: &mut RunManifest, input: &InputArgs) -> Result<Dataset> {
    let schema_bytes = read_input(manifest, "schema", &input.schema)?;
    let data_bytes = read_input(manifest, "dataset", &input.dataset)?;
    let schema = std::str::from_utf8(&schema_bytes)
        .map_err(anyhow::Error::from)
        .and_then(|s| Ok(SchemaDescriptor::from_json(s)?))
        .with_context(|| format!("invalid schema {}", input.schema.display()))?;
    let format = schema.format.unwrap_or_else(|| SourceFormat::from_path(&input.dataset));
    parse_dataset(&schema, data_bytes.as_slice(), format)
        .with_context(|| format!("invalid dataset {}", input.dataset.display()))
}

fn generate(dataset: &Dataset, generation: &GenerationArgs) -> Result<Topology> {
    let config = generation.generation();
    config.validate()?;
    let subbasis = build_subbasis(dataset, &generation.subbasis())?;
    Ok(Topology::generate(subbasis, config)?)
}

/// Inputs of an evaluating command, fully parsed and joined.
pub struct Loaded {
    pub dataset: Dataset,
    pub topology: Topology,
    pub ctx: EvaluationContext,
    pub assignment: Assignment,
    pub renderer_name: String,
    pub manifest: RunManifest,
    pub stopwatch: Stopwatch,
}

pub fn load_eval(eval: &EvalArgs, config: RunConfig) -> Result<Loaded> {
    let mut sw = Stopwatch::start();
    let mut manifest = RunManifest::new(config);

    let dataset = load_dataset(&mut manifest, &eval.input)?;
    let pred_bytes = read_input(&mut manifest, "predictions", &eval.predictions)?;
    let tag = eval.predictions.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let preds = parse_predictions(pred_bytes.as_slice())
        .with_context(|| format!("invalid predictions {}", eval.predictions.display()))?
        .with_source_tag(tag);
    let topo_text = match &eval.topology {
        Some(path) => {
            let bytes = read_input(&mut manifest, "topology", path)?;
            Some((path, String::from_utf8(bytes).with_context(|| format!("topology {} is not UTF-8", path.display()))?))
        }
        None => None,
    };
    let statistic: Arc<dyn Statistic> = StatisticRegistry::default().get(&eval.statistic)?;
    RendererRegistry::default().get(&eval.format)?;
    if topo_text.is_none() {
        eval.generation.generation().validate()?;
    }
    let ctx = join_validate(&dataset, &preds)
        .with_context(|| format!("predictions {} do not match dataset {}", eval.predictions.display(), eval.input.dataset.display()))?;
    sw.lap("load");

    let topology = match topo_text {
        Some((path, text)) => {
            Topology::from_json(&text, &dataset).with_context(|| format!("invalid topology {}", path.display()))?
        }
        None => generate(&dataset, &eval.generation)?,
    };
    manifest.open_set_count = topology.len();
    sw.lap("topology");

    let assignment = compute_assignment(&topology, statistic, &ctx)?;
    sw.lap("assignment");

    Ok(Loaded { dataset, topology, ctx, assignment, renderer_name: eval.format.clone(), manifest, stopwatch: sw })
}

fn item_index(dataset: &Dataset, id: &str) -> Result<usize> {
    dataset.index_of(id).ok_or_else(|| {
        let some: Vec<&str> = dataset.ids().take(5).collect();
        let more = if dataset.len() > some.len() { ", ..." } else { "" };
        anyhow!("unknown item id {id:?}; valid ids are {}{more} ({} items)", some.join(", "), dataset.len())
    })
}

fn finish(mut loaded: Loaded, report: &AnalysisReport, summary: String) -> Result<RunOutput> {
    let registry = RendererRegistry::default();
    let renderer: &dyn ReportRenderer = registry.get(&loaded.renderer_name)?;
    let body = renderer.render(report)?;
    loaded.stopwatch.lap("render");
    loaded.manifest.timings = loaded.stopwatch.finish();
    Ok(RunOutput { body, summary, manifest: loaded.manifest })
}

pub fn cmd_build(args: &BuildArgs) -> Result<RunOutput> {
    let mut sw = Stopwatch::start();
    let mut manifest = RunManifest::new(RunConfig::from_build(args));
    let dataset = load_dataset(&mut manifest, &args.input)?;
    args.generation.generation().validate()?;
    sw.lap("load");
    let topology = generate(&dataset, &args.generation)?;
    sw.lap("topology");
    let mut body = topology.to_json(&dataset)?;
    body.push('\n');
    sw.lap("export");
    manifest.open_set_count = topology.len();
    manifest.timings = sw.finish();
    Ok(RunOutput { body, summary: format!("{} open sets", topology.len()), manifest })
}

pub fn cmd_report(args: &ReportArgs) -> Result<RunOutput> {
    let loaded = load_eval(&args.eval, RunConfig::from_report(args))?;
    let items = args.item.iter().map(|id| item_index(&loaded.dataset, id)).collect::<Result<Vec<_>>>()?;
    let sets = args
        .set
        .iter()
        .map(|text| loaded.topology.resolve(text).with_context(|| format!("unknown open set {text:?}")))
        .collect::<Result<Vec<OsId>>>()?;
    let req = ReportRequest {
        top: args.top,
        bottom: args.bottom,
        counts: true,
        k: Some(args.k),
        sets,
        items,
        item_top: args.top,
        item_bottom: args.bottom,
    };
    let report = build_report(&loaded.assignment, &loaded.topology, &loaded.ctx, &req)?;
    let summary = format!("{} open sets; global {} {:.6}", loaded.topology.len(), report.statistic, report.global_value);
    finish(loaded, &report, summary)
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<RunOutput> {
    let loaded = load_eval(&args.eval, RunConfig::from_inspect(args))?;
    let x = item_index(&loaded.dataset, &args.item)?;
    let req = ReportRequest { items: vec![x], item_top: args.top, item_bottom: args.bottom, ..Default::default() };
    let report = build_report(&loaded.assignment, &loaded.topology, &loaded.ctx, &req)?;
    let it = &report.items[0];
    let summary = format!("item {}: a_max {:.6} ({}), a_min {:.6} ({})", it.item_id, it.a_max, it.argmax, it.a_min, it.argmin);
    finish(loaded, &report, summary)
}

fn manifest_path(output: &OutputArgs) -> Option<PathBuf> {
    output.manifest.clone().or_else(|| {
        output.out.as_ref().map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

/// Writes the body to `--out` (or stdout) and the manifest next to it (or
/// to stderr). The summary goes to stdout when the body went to a file.
pub fn emit(run: &RunOutput, output: &OutputArgs) -> Result<()> {
    match &output.out {
        Some(path) => {
            fs::write(path, &run.body).with_context(|| format!("cannot write {}", path.display()))?;
            println!("{}", run.summary);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(run.body.as_bytes())?;
            stdout.flush()?;
            eprintln!("{}", run.summary);
        }
    }
    let manifest = run.manifest.to_json() + "\n";
    match manifest_path(output) {
        Some(path) => fs::write(&path, manifest).with_context(|| format!("cannot write {}", path.display()))?,
        None => eprint!("{manifest}"),
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Build(args) => emit(&cmd_build(args)?, &args.output),
        Command::Report(args) => emit(&cmd_report(args)?, &args.eval.output),
        Command::Inspect(args) => emit(&cmd_inspect(args)?, &args.eval.output),
    }
}

/// Rejects output paths that would overwrite an input.
pub fn check_paths(cli: &Cli) -> Result<()> {
    let (inputs, out): (Vec<&Path>, Option<&PathBuf>) = match &cli.command {
        Command::Build(a) => (vec![&a.input.dataset, &a.input.schema], a.output.out.as_ref()),
        Command::Report(ReportArgs { eval, .. }) | Command::Inspect(InspectArgs { eval, .. }) => {
            let mut v: Vec<&Path> = vec![&eval.input.dataset, &eval.input.schema, &eval.predictions];
            v.extend(eval.topology.as_deref());
            (v, eval.output.out.as_ref())
        }
    };
    if let Some(out) = out {
        if inputs.contains(&out.as_path()) {
            bail!("output {} would overwrite an input", out.display());
        }
    }
    Ok(())
}
