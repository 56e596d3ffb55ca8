//! Acceptance suite. Runs as a plain binary (`harness = false`) and prints
//! one PASS/FAIL line per criterion; exits nonzero if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use dataspace_cli::config::Command;
use dataspace_cli::render::{MarkdownRenderer, ReportRenderer};
use dataspace_cli::report::{build_report, ReportRequest};
use dataspace_cli::{cmd_build, cmd_report, load_eval, Cli, RunConfig};
use dataspace_core::analysis::{local_inconsistency, neighborhood_extrema};
use dataspace_core::bitset::MemberSet;
use dataspace_core::model::{AttributeValue, Item, LabelId, LabelSpace};
use dataspace_core::topology::ElementKind;
use dataspace_core::{
    build_subbasis, compute_assignment, join_validate, Assignment, Dataset, EvaluationContext, GenerationConfig, OsId,
    PresheafSpec, StatKind, Subbasis, SubbasisSpec, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy6").join(name).display().to_string()
}

fn cli(args: &[&str]) -> Cli {
    let mut argv = vec!["dataspace"];
    argv.extend_from_slice(args);
    Cli::try_parse_from(argv).expect("valid arguments")
}

fn toy6_args(cmd: &str, extra: &[&str]) -> Cli {
    let (d, s, p) = (fixture("toy6.csv"), fixture("toy6.schema.json"), fixture("toy6-preds.csv"));
    let mut args = vec![cmd, "--dataset", &d, "--schema", &s, "--min-cardinality", "1"];
    if cmd != "build" {
        args.extend(["--predictions", p.as_str()]);
    }
    args.extend_from_slice(extra);
    cli(&args)
}

/// Sets as sorted index lists, for comparison against oracles.
fn family(t: &Topology) -> BTreeSet<Vec<usize>> {
    t.open_sets().iter().map(|s| s.members.to_vec()).collect()
}

fn toy6_end_to_end() -> Outcome {
    let start = Instant::now();
    let Command::Build(build) = toy6_args("build", &[]).command else { unreachable!() };
    let out = cmd_build(&build).map_err(|e| format!("{e:#}"))?;
    ensure!(out.summary == "11 open sets", "summary {:?}", out.summary);

    let doc: serde_json::Value = serde_json::from_str(&out.body).map_err(|e| e.to_string())?;
    let got: BTreeSet<Vec<String>> = doc["open_sets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["member_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_owned()).collect())
        .collect();
    let want: BTreeSet<Vec<String>> = [
        &[][..],
        &["1", "2", "3", "4", "5", "6"],
        &["1", "2", "3"],
        &["4", "5", "6"],
        &["1", "2", "4", "5"],
        &["2", "3", "5", "6"],
        &["1", "2"],
        &["2", "3"],
        &["4", "5"],
        &["5", "6"],
        &["2", "5"],
    ]
    .iter()
    .map(|s| s.iter().map(|x| x.to_string()).collect())
    .collect();
    ensure!(doc["open_sets"].as_array().unwrap().len() == 11 && got == want, "member sets differ: {got:?}");

    let Command::Report(report) = toy6_args("report", &[]).command else { unreachable!() };
    let loaded = load_eval(&report.eval, RunConfig::from_report(&report)).map_err(|e| format!("{e:#}"))?;
    let (t, a) = (&loaded.topology, &loaded.assignment);

    // accuracy by hand: correct items are ids 1, 2, 4, 6
    let correct: BTreeSet<usize> = [0, 1, 3, 5].into();
    for set in t.open_sets() {
        let m = set.members.to_vec();
        let want = if m.is_empty() { 0.0 } else { m.iter().filter(|i| correct.contains(i)).count() as f64 / m.len() as f64 };
        let v = a.value(set.os_id).unwrap();
        ensure!((v - want).abs() <= 1e-12, "accuracy of {} is {v}, expected {want}", t.name_of(set.os_id).unwrap());
    }

    let red = t.resolve("attr:red").unwrap();
    let r = local_inconsistency(a, t, red, 2).unwrap();
    ensure!(r.value == 0.25, "Incon_2(U_red) = {}", r.value);

    // 1/6 has no exact binary form, so exactness is checked on the witness
    // counts: |c_X/n_X − c_V/n_V| = 1/6 ⇔ 6·|c_X·n_V − c_V·n_X| = n_X·n_V
    let r = local_inconsistency(a, t, Topology::FULL, 2).unwrap();
    let v = t.get(r.witness_v).unwrap();
    let count = |ms: &MemberSet| ms.intersection_count(loaded.ctx.correct_set()) as i64;
    let (cx, nx) = (count(&t.get(Topology::FULL).unwrap().members), 6i64);
    let (cv, nv) = (count(&v.members), v.cardinality as i64);
    ensure!(6 * (cx * nv - cv * nx).abs() == nx * nv, "Incon_2(X) is not 1/6: witness {}", t.name_of(r.witness_v).unwrap());
    ensure!((r.value - 1.0 / 6.0).abs() < 1e-15, "Incon_2(X) = {}", r.value);

    let e = neighborhood_extrema(a, t, 4).unwrap();
    ensure!(e.a_min == 0.5 && e.a_max == 0.75, "item 4 extrema ({}, {})", e.a_min, e.a_max);

    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("11 open sets, Incon_2 = 0.25 and 1/6, item-4 extrema (0.5, 0.75), {elapsed:.2?}"))
}

/// Random subbasis with every item covered, as raw bitmasks.
fn random_masks(rng: &mut ChaCha8Rng) -> (usize, Vec<u64>) {
    let n = rng.gen_range(1..=12);
    let k = rng.gen_range(1..=5);
    let mut masks: Vec<u64> = (0..k).map(|_| rng.gen::<u64>() & rng.gen::<u64>() & ((1 << n) - 1)).collect();
    let covered = masks.iter().fold(0, |acc, m| acc | m);
    masks[0] |= !covered & ((1 << n) - 1);
    (n, masks)
}

fn subbasis_from(n: usize, masks: &[u64]) -> Subbasis {
    let elements = masks
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let members = MemberSet::from_indices(n, (0..n).filter(|i| m >> i & 1 == 1));
            (format!("e{j}"), ElementKind::Attribute, members)
        })
        .collect();
    Subbasis::new(elements, n).unwrap()
}

/// Every subset of the subbasis of size ≤ max_i intersected, and of size
/// ≤ max_u united, plus ∅ and X.
fn enumerate(n: usize, masks: &[u64], max_i: usize, max_u: usize) -> BTreeSet<Vec<usize>> {
    let full = (1u64 << n) - 1;
    let mut out = BTreeSet::from([0u64, full]);
    for pick in 1u32..(1 << masks.len()) {
        let chosen: Vec<u64> = (0..masks.len()).filter(|j| pick >> j & 1 == 1).map(|j| masks[j]).collect();
        if chosen.len() <= max_i {
            out.insert(chosen.iter().fold(full, |a, m| a & m));
        }
        if chosen.len() <= max_u {
            out.insert(chosen.iter().fold(0, |a, m| a | m));
        }
    }
    out.into_iter().map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

fn closure_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC105);
    for case in 0..200 {
        let (n, masks) = random_masks(&mut rng);
        let (max_i, max_u) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let config = GenerationConfig { max_intersection_arity: max_i, max_union_arity: max_u, min_cardinality: 0, ..Default::default() };
        let t = Topology::generate(subbasis_from(n, &masks), config).map_err(|e| e.to_string())?;
        let got = family(&t);
        ensure!(got.len() == t.len(), "case {case}: duplicate member sets");
        ensure!(got == enumerate(n, &masks, max_i, max_u), "case {case}: family differs from enumeration");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("200 random subbases agree with exhaustive enumeration, {elapsed:.2?}"))
}

struct Case {
    topology: Topology,
    assignment: Assignment,
    ctx: EvaluationContext,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let n = rng.gen_range(1..=12);
    let n_labels = rng.gen_range(1..=3);
    let n_attrs = rng.gen_range(0..=5 - n_labels);
    let items: Vec<Item> = (0..n)
        .map(|i| Item {
            id: format!("x{i}"),
            true_label: LabelId(rng.gen_range(0..n_labels)),
            attributes: (0..n_attrs)
                .map(|_| if rng.gen_bool(0.5) { AttributeValue::Present } else { AttributeValue::Absent })
                .collect(),
            scalars: vec![],
        })
        .collect();
    let labels: Vec<String> = (0..n_labels).map(|l| format!("L{l}")).collect();
    let mut preds = dataspace_core::PredictionTable::default();
    for item in &items {
        let guess = if rng.gen_bool(0.6) { item.true_label.0 } else { rng.gen_range(0..n_labels) };
        preds.entries.insert(
            item.id.clone(),
            dataspace_core::model::PredictionEntry { predicted_label: labels[guess].clone(), loss: None },
        );
    }
    let attrs = (0..n_attrs).map(|a| format!("a{a}")).collect();
    let dataset = Dataset::new(items, LabelSpace::new(labels).unwrap(), attrs, vec![]).unwrap();
    let config = GenerationConfig {
        max_intersection_arity: rng.gen_range(1..=3),
        max_union_arity: rng.gen_range(1..=3),
        min_cardinality: 0,
        ..Default::default()
    };
    let topology = Topology::generate(build_subbasis(&dataset, &SubbasisSpec::default()).unwrap(), config).unwrap();
    let ctx = join_validate(&dataset, &preds).unwrap();
    let assignment = compute_assignment(&topology, StatKind::Accuracy.statistic(), &ctx).unwrap();
    Case { topology, assignment, ctx }
}

fn toy6_case() -> Case {
    let Command::Report(report) = toy6_args("report", &[]).command else { unreachable!() };
    let l = load_eval(&report.eval, RunConfig::from_report(&report)).unwrap();
    Case { topology: l.topology, assignment: l.assignment, ctx: l.ctx }
}

fn check_axioms(spec: &PresheafSpec, t: &Topology, a: &Assignment) -> Result<usize, String> {
    let sets: Vec<u64> = t.open_sets().iter().map(|s| s.members.iter().fold(0u64, |m, i| m | 1 << i)).collect();
    let sub = |v: usize, u: usize| sets[v] & !sets[u] == 0;
    let mut triples = 0;
    for u in 0..sets.len() {
        let au = a.values()[u];
        let id = spec.restrict(t, OsId(u), OsId(u), au).map_err(|e| e.to_string())?;
        ensure!(id == au, "identity fails on {u}");
        for v in (0..sets.len()).filter(|&v| sub(v, u)) {
            let uv = spec.restrict(t, OsId(u), OsId(v), au).map_err(|e| e.to_string())?;
            for w in (0..sets.len()).filter(|&w| sub(w, v)) {
                let vw = spec.restrict(t, OsId(v), OsId(w), uv).map_err(|e| e.to_string())?;
                let uw = spec.restrict(t, OsId(u), OsId(w), au).map_err(|e| e.to_string())?;
                ensure!(vw.to_bits() == uw.to_bits(), "composition fails on ({u}, {v}, {w})");
                triples += 1;
            }
        }
    }
    Ok(triples)
}

fn presheaf_axioms() -> Outcome {
    let toy = toy6_case();
    let mut triples = check_axioms(toy.assignment.presheaf(), &toy.topology, &toy.assignment)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xA110);
    for _ in 0..50 {
        let c = random_case(&mut rng);
        triples += check_axioms(c.assignment.presheaf(), &c.topology, &c.assignment)?;
    }
    Ok(format!("identity and composition exact on {triples} nested triples (toy6 + 50 random)"))
}

fn analysis_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA110);
    let mut checks = 0;
    for case in 0..50 {
        let Case { topology: t, assignment: a, ctx } = random_case(&mut rng);
        let sets: Vec<BTreeSet<usize>> = t.open_sets().iter().map(|s| s.members.iter().collect()).collect();
        let acc = |s: &BTreeSet<usize>| {
            if s.is_empty() {
                0.0
            } else {
                s.iter().filter(|&&i| ctx.is_correct(i)).count() as f64 / s.len() as f64
            }
        };
        let vals: Vec<f64> = sets.iter().map(acc).collect();
        for u in 0..sets.len() {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=3 {
                let brute = (0..sets.len())
                    .filter(|&v| sets[v].is_subset(&sets[u]) && sets[u].len() - sets[v].len() <= k)
                    .map(|v| ((if sets[v].is_empty() { 0.0 } else { vals[u] }) - vals[v]).abs())
                    .fold(0.0, f64::max);
                let r = local_inconsistency(&a, &t, OsId(u), k).map_err(|e| e.to_string())?;
                ensure!((r.value - brute).abs() < 1e-12, "case {case}: Incon_{k}({u}) = {} vs {brute}", r.value);
                ensure!(r.value >= prev, "case {case}: Incon not monotone in k at {u}");
                prev = r.value;
                checks += 1;
            }
        }
        for x in 0..t.n_items() {
            let hood: Vec<f64> = (0..sets.len()).filter(|&u| sets[u].contains(&x)).map(|u| vals[u]).collect();
            let e = neighborhood_extrema(&a, &t, x).map_err(|e| e.to_string())?;
            let (lo, hi) = (hood.iter().copied().fold(f64::MAX, f64::min), hood.iter().copied().fold(f64::MIN, f64::max));
            ensure!((e.a_min - lo).abs() < 1e-12 && (e.a_max - hi).abs() < 1e-12, "case {case}: extrema of item {x}");
            checks += 1;
        }
    }
    Ok(format!("{checks} inconsistency/extrema values match brute force, monotone in k"))
}

fn determinism() -> Outcome {
    let mut compared = Vec::new();
    for format in ["json", "csv", "md"] {
        let run = || {
            let Command::Report(args) =
                toy6_args("report", &["--format", format, "--k", "2", "--item", "5", "--item", "1"]).command
            else {
                unreachable!()
            };
            cmd_report(&args).map_err(|e| format!("{e:#}"))
        };
        let (a, b) = (run()?, run()?);
        ensure!(a.body == b.body, "{format} output differs between runs");
        ensure!(a.manifest.without_timings() == b.manifest.without_timings(), "{format} manifests differ beyond timings");
        compared.push(format!("{format} {}B", a.body.len()));
    }
    Ok(format!("two runs byte-identical ({})", compared.join(", ")))
}

fn peak_rss_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

/// 12,000 items over 200 labels and 312 binary attributes with skewed
/// prevalence, so pairwise intersections span the min_cardinality cut.
fn synthetic(rng: &mut ChaCha8Rng) -> (Dataset, dataspace_core::PredictionTable) {
    let (n, n_labels, n_attrs) = (12_000, 200, 312);
    let prevalence: Vec<f64> = (0..n_attrs).map(|_| rng.gen_range(0.005f64..0.25)).collect();
    let items: Vec<Item> = (0..n)
        .map(|i| Item {
            id: format!("s{i}"),
            true_label: LabelId(i % n_labels),
            attributes: prevalence
                .iter()
                .map(|&p| if rng.gen_bool(p) { AttributeValue::Present } else { AttributeValue::Absent })
                .collect(),
            scalars: vec![],
        })
        .collect();
    let labels: Vec<String> = (0..n_labels).map(|l| format!("class{l}")).collect();
    let mut preds = dataspace_core::PredictionTable::default();
    for item in &items {
        let guess = if rng.gen_bool(0.57) { item.true_label.0 } else { rng.gen_range(0..n_labels) };
        preds.entries.insert(
            item.id.clone(),
            dataspace_core::model::PredictionEntry { predicted_label: labels[guess].clone(), loss: None },
        );
    }
    let attrs = (0..n_attrs).map(|a| format!("attr{a}")).collect();
    (Dataset::new(items, LabelSpace::new(labels).unwrap(), attrs, vec![]).unwrap(), preds)
}

fn scale_budget() -> Outcome {
    let (dataset, preds) = synthetic(&mut ChaCha8Rng::seed_from_u64(12_000));
    let start = Instant::now();
    let subbasis = build_subbasis(&dataset, &SubbasisSpec::default()).map_err(|e| e.to_string())?;
    ensure!(subbasis.len() == 512, "subbasis has {} elements", subbasis.len());
    let config = GenerationConfig { max_intersection_arity: 2, max_union_arity: 1, min_cardinality: 20, ..Default::default() };
    let t = Topology::generate(subbasis, config).map_err(|e| e.to_string())?;
    let ctx = join_validate(&dataset, &preds).map_err(|e| e.to_string())?;
    let a = compute_assignment(&t, StatKind::Accuracy.statistic(), &ctx).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(a.len() == t.len(), "assignment incomplete");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    let rss = peak_rss_mb();
    if let Some(mb) = rss {
        ensure!(mb < 2048.0, "peak RSS {mb:.0} MB");
    }
    let mem = rss.map_or("peak RSS unavailable".to_owned(), |mb| format!("peak RSS {mb:.0} MB"));
    Ok(format!("{} open sets from 512 elements over 12,000 items in {elapsed:.2?}, {mem}", t.len()))
}

fn markdown_format() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7AB1E);
    let toy = toy6_case();
    let mut rows = 0;
    for trial in 0..20 {
        let mut values: Vec<f64> = (0..toy.topology.len()).map(|_| rng.gen_range(0.0..=1.0)).collect();
        values[0] = 0.0;
        if trial == 0 {
            values[6] = 0.3913;
        }
        let a = Assignment::from_values(toy.assignment.presheaf().clone(), values.clone(), "");
        let req = ReportRequest { top: 5, bottom: 5, ..Default::default() };
        let report = build_report(&a, &toy.topology, &toy.ctx, &req).map_err(|e| e.to_string())?;
        let md = MarkdownRenderer.render(&report).map_err(|e| e.to_string())?;
        ensure!(md.matches("| Open set | Accuracy |").count() == 2, "header missing");
        if trial == 0 {
            ensure!(md.contains("| label:A ∩ attr:red | 39.13 |"), "0.3913 not rendered as 39.13");
        }
        for line in md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Open set")) {
            let cells: Vec<&str> = line.trim_matches('|').split(" | ").map(str::trim).collect();
            ensure!(cells.len() == 2, "row {line:?} is not two columns");
            let id = toy.topology.resolve(cells[0]).map_err(|e| e.to_string())?;
            ensure!(cells[1] == format!("{:.2}", values[id.0] * 100.0), "row {line:?} has wrong percent");
            let (_, frac) = cells[1].split_once('.').ok_or("no decimals")?;
            ensure!(frac.len() == 2, "row {line:?} is not 2-decimal");
            rows += 1;
        }
    }
    Ok(format!("{rows} rows over 20 random assignments in two-column 2-decimal percent form"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("scale budget", scale_budget),
        ("toy6 end-to-end", toy6_end_to_end),
        ("closure oracle", closure_oracle),
        ("presheaf axioms", presheaf_axioms),
        ("analysis oracle", analysis_oracle),
        ("determinism", determinism),
        ("markdown format", markdown_format),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("[PASS] {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("[FAIL] {name}: panicked");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
