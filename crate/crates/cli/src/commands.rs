use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trajeval_core::framework::{
    emit_report, evaluate_models, parse_json, render_svg, MetricSelection, ReportFormat,
};
use trajeval_core::generators::GeneratorSpec;
use trajeval_core::grid::{select_cell_size, stability_sweep, write_sweep_file, SweepConfig};
use trajeval_core::metrics::{MetricId, MetricParams};
use trajeval_core::mobility::{profile_dataset, DatasetProfile};
use trajeval_core::privacy::{
    run_attack, tul_protocols, write_scores_csv, write_targets_csv, AttackConfig, DistanceKind,
    HeuristicTulSolver, Scenario, TargetSetup, TrajectoryDistance, TulData, TulResult, TulSolver,
};

use crate::args::{
    AttackCommand, Cli, Command, DistanceArg, EvaluateArgs, Format, GridCommand, MiaArgs, PlotArgs,
    ProfileArgs, ScenarioArg, TulArgs,
};
use crate::load;
use crate::manifest::ManifestBuilder;
use crate::plot;

/// How a run ended when it did not fail outright.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    /// Outputs were written but some metrics failed and `--allow-partial` was off.
    Partial,
}

struct Run<'a> {
    out: &'a Path,
    seed: Option<u64>,
    manifest: ManifestBuilder,
    outputs: Vec<PathBuf>,
}

impl Run<'_> {
    fn write(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn writer(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.outputs.push(path.clone());
        Ok((path, BufWriter::new(f)))
    }
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<Outcome> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let mut manifest = ManifestBuilder::new(argv);
    // commands with repeated runs replace this with their full seed list
    manifest.seeds(cli.seed.into_iter().collect());
    let mut run = Run {
        out: &cli.out,
        seed: cli.seed,
        manifest,
        outputs: Vec::new(),
    };
    let outcome = match &cli.command {
        Command::Profile(a) => profile(&mut run, a)?,
        Command::Grid(g) => grid(&mut run, g)?,
        Command::Evaluate(a) => evaluate(&mut run, a)?,
        Command::Attack(AttackCommand::Mia(a)) => mia(&mut run, a)?,
        Command::Attack(AttackCommand::Tul(a)) => tul(&mut run, a)?,
        Command::Plot(a) => plot_cmd(&mut run, a)?,
    };
    let Run {
        out,
        manifest,
        outputs,
        ..
    } = run;
    manifest.finish(out, &outputs)?;
    Ok(outcome)
}

fn profile(run: &mut Run, a: &ProfileArgs) -> Result<Outcome> {
    let mut rows: Vec<(String, DatasetProfile)> = Vec::new();
    for p in &a.dataset {
        run.manifest.input(p)?;
        let d = load::dataset(p, None)?;
        rows.push((d.meta().name.clone(), profile_dataset(&d)?));
    }
    run.manifest
        .config(&serde_json::json!({ "format": format!("{:?}", a.format) }))?;
    let mut table = String::from("dataset");
    for h in DatasetProfile::HEADER {
        table.push(',');
        table.push_str(h);
    }
    table.push('\n');
    for (name, p) in &rows {
        table.push_str(name);
        for v in p.values() {
            table.push_str(&format!(",{}", round6(v)));
        }
        table.push('\n');
    }
    print!("{table}");
    match a.format {
        Format::Csv => run.write("profile.csv", &table)?,
        Format::Json => {
            let named: Vec<_> = rows
                .iter()
                .map(|(n, p)| serde_json::json!({ "dataset": n, "profile": p }))
                .collect();
            run.write(
                "profile.json",
                &(serde_json::to_string_pretty(&named)? + "\n"),
            )?
        }
        Format::Svg => bail!("profiles are written as csv or json"),
    };
    Ok(Outcome::Complete)
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Sweep settings as found in a config file; anything absent keeps the default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    edges_m: Option<Vec<f64>>,
    offsets_per_axis: Option<usize>,
    metrics: Option<Vec<MetricId>>,
    params: Option<MetricParams>,
}

fn grid(run: &mut Run, g: &GridCommand) -> Result<Outcome> {
    match g {
        GridCommand::Select { dataset } => {
            run.manifest.input(dataset)?;
            let d = load::dataset(dataset, None)?;
            let s = select_cell_size(&d)?;
            run.manifest
                .config(&serde_json::json!({ "select": true }))?;
            let csv = format!(
                "edge_m,p10_m,p50_m,elbow_unique_m,elbow_self_m,elbow_occupancy_m,degenerate\n{},{},{},{},{},{},{}\n",
                s.edge_m, s.p10_m, s.p50_m, s.elbows_m[0], s.elbows_m[1], s.elbows_m[2], s.degenerate
            );
            run.write("grid_selection.csv", &csv)?;
            println!("selected cell edge: {} m", s.edge_m);
        }
        GridCommand::Sweep {
            dataset,
            syn,
            config,
        } => {
            run.manifest.input(dataset)?;
            run.manifest.input(syn)?;
            let file: SweepFile = match config {
                Some(p) => {
                    run.manifest.input(p)?;
                    let s = fs::read_to_string(p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str(&s).with_context(|| format!("parsing {}", p.display()))?
                }
                None => SweepFile::default(),
            };
            let mut cfg = SweepConfig::default();
            if let Some(e) = file.edges_m {
                cfg.edges_m = e;
            }
            if let Some(k) = file.offsets_per_axis {
                cfg.offsets_per_axis = k;
            }
            if let Some(m) = file.metrics {
                cfg.metrics = m;
            }
            if let Some(p) = file.params {
                cfg.params = p;
            }
            run.manifest.config(&cfg)?;
            let real = load::dataset(dataset, None)?;
            let s = load::dataset(syn, Some(&real))?;
            let rows = stability_sweep(&real, &s, &cfg)?;
            let path = run.out.join("sweep.csv");
            write_sweep_file(&rows, &path)?;
            run.outputs.push(path.clone());
            println!("{} rows written to {}", rows.len(), path.display());
        }
    }
    Ok(Outcome::Complete)
}

fn report_format(f: Format) -> ReportFormat {
    match f {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
        Format::Svg => ReportFormat::Svg,
    }
}

fn evaluate(run: &mut Run, a: &EvaluateArgs) -> Result<Outcome> {
    let mut sel = match (&a.config, &a.preset) {
        (Some(p), _) => {
            run.manifest.input(p)?;
            MetricSelection::load(p)?
        }
        (None, Some(name)) => MetricSelection::preset(name)?,
        (None, None) => MetricSelection::preset("use-case-a")?,
    };
    if let Some(e) = a.cell_edge_m {
        sel = sel.with_cell_edge(e)?;
    }
    run.manifest.config(&sel.to_toml_string())?;
    run.manifest.input(&a.dataset)?;
    let real = load::dataset(&a.dataset, None)?;
    let mut syns = Vec::with_capacity(a.syn.len());
    for p in &a.syn {
        run.manifest.input(p)?;
        syns.push(load::dataset(p, Some(&real))?);
    }
    let layers = match &a.layers {
        Some(dir) => {
            run.manifest.input(dir)?;
            Some(load::layers(dir, &real.meta().crs)?)
        }
        None if sel.needs_layers() => {
            bail!(
                "selection `{}` has realism metrics; pass --layers DIR",
                sel.name
            )
        }
        None => None,
    };
    let report = evaluate_models(&real, &syns, &sel, layers.as_ref())?;
    let path = emit_report(&report, report_format(a.format), run.out)?;
    run.outputs.push(path.clone());
    for b in &report.best_counts {
        println!("{}: best in {} of {} metrics", b.model, b.count, sel.len());
    }
    println!("report written to {}", path.display());
    let failures: Vec<String> = report
        .original
        .iter()
        .chain(&report.models)
        .flat_map(|v| {
            v.failures()
                .map(move |f| format!("{} / {}", v.model, f.metric))
        })
        .collect();
    if failures.is_empty() {
        return Ok(Outcome::Complete);
    }
    eprintln!("failed metrics: {}", failures.join(", "));
    Ok(if a.allow_partial {
        Outcome::Complete
    } else {
        Outcome::Partial
    })
}

fn mia(run: &mut Run, a: &MiaArgs) -> Result<Outcome> {
    let mut cfg = match &a.config {
        Some(p) => {
            run.manifest.input(p)?;
            let s = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            AttackConfig::from_toml_str(&s)?
        }
        None => AttackConfig::default(),
    };
    if let Some(s) = a.scenario {
        cfg.scenario = match s {
            ScenarioArg::Main => Scenario::Main,
            ScenarioArg::Masked => Scenario::Masked,
            ScenarioArg::ReleasedOnly => Scenario::ReleasedOnly,
        };
    }
    if a.keep_fraction.is_some() {
        cfg.keep_fraction = a.keep_fraction;
    }
    if let Some(d) = a.distance {
        cfg.distance = distance_kind(d);
    }
    if let Some(n) = a.seeds {
        cfg.n_seeds = n;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if cfg.scenario == Scenario::ReleasedOnly && a.aux.is_some() {
        bail!("the released-only scenario uses no auxiliary data; drop --aux");
    }
    let spec = load::generator(&a.generator)?;
    if let Some(p) = &a.generator.generator {
        run.manifest.input(p)?;
    }
    run.manifest.config(&MiaRunConfig {
        attack: &cfg,
        generator: &spec,
    })?;
    run.manifest.seeds(cfg.seeds());

    for p in [&a.dataset, &a.target, &a.holdout] {
        run.manifest.input(p)?;
    }
    let d_train = load::dataset(&a.dataset, None)?;
    let q_target = load::dataset(&a.target, Some(&d_train))?;
    let holdout = load::dataset(&a.holdout, Some(&d_train))?;
    let d_aux = match &a.aux {
        Some(p) => {
            run.manifest.input(p)?;
            Some(load::dataset(p, Some(&d_train))?)
        }
        None => None,
    };
    let setup = TargetSetup {
        d_train: &d_train,
        q_target: &q_target,
        holdout: &holdout,
    };
    let result = run_attack(&setup, d_aux.as_ref(), &spec, &cfg)?;
    run.write("mia.json", &(serde_json::to_string_pretty(&result)? + "\n"))?;
    let (_, w) = run.writer("mia_targets.csv")?;
    write_targets_csv(&result, w)?;
    let (_, w) = run.writer("mia_scores.csv")?;
    write_scores_csv(&result, w)?;
    println!(
        "{:?} / {:?}: accuracy {} over {} targets",
        cfg.scenario,
        cfg.distance,
        result.summary(),
        result.total_targets()
    );
    Ok(Outcome::Complete)
}

#[derive(Serialize)]
struct MiaRunConfig<'a> {
    attack: &'a AttackConfig,
    generator: &'a GeneratorSpec,
}

fn distance_kind(d: DistanceArg) -> DistanceKind {
    match d {
        DistanceArg::Frechet => DistanceKind::Frechet,
        DistanceArg::Custom => DistanceKind::Custom,
    }
}

#[derive(Serialize)]
struct TulOutput {
    generator: GeneratorSpec,
    distance: DistanceKind,
    seed: u64,
    legacy: TulResult,
    fixed: TulResult,
}

fn tul(run: &mut Run, a: &TulArgs) -> Result<Outcome> {
    let spec = load::generator(&a.generator)?;
    if let Some(p) = &a.generator.generator {
        run.manifest.input(p)?;
    }
    let seed = run.seed.unwrap_or(0);
    let kind = distance_kind(a.distance);
    run.manifest
        .config(&serde_json::json!({ "generator": spec, "distance": kind }))?;
    run.manifest.seeds(vec![seed]);
    run.manifest.input(&a.dataset)?;
    run.manifest.input(&a.target)?;
    let d_train = load::dataset(&a.dataset, None)?;
    let q_target = load::dataset(&a.target, Some(&d_train))?;

    let mut model = spec.build()?;
    model.fit(&d_train)?;
    let s_train = model.blur(&d_train, seed)?;
    let s_target = model.blur(&q_target, seed.wrapping_add(1))?;
    let data = TulData {
        d_train: &d_train,
        q_target: &q_target,
        s_train: &s_train,
        s_target: &s_target,
    };
    let distance = TrajectoryDistance {
        kind,
        ..TrajectoryDistance::default()
    };
    let [legacy, fixed] = tul_protocols(&data, &|| {
        Box::new(HeuristicTulSolver::new(distance)) as Box<dyn TulSolver>
    })?;
    for r in [&legacy, &fixed] {
        println!(
            "{:?}: real {:.3}, synthetic {:.3}, gap {:.1} pp",
            r.protocol, r.accuracy_real, r.accuracy_syn, r.gap_pp
        );
    }
    let out = TulOutput {
        generator: spec,
        distance: kind,
        seed,
        legacy,
        fixed,
    };
    run.write("tul.json", &(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(Outcome::Complete)
}

fn plot_cmd(run: &mut Run, a: &PlotArgs) -> Result<Outcome> {
    run.manifest.input(&a.input)?;
    run.manifest
        .config(&serde_json::json!({ "plot_seed": a.plot_seed }))?;
    let is_json = a.input.extension().is_some_and(|e| e == "json");
    let path = if is_json {
        let s = fs::read_to_string(&a.input)
            .with_context(|| format!("reading {}", a.input.display()))?;
        let report =
            parse_json(&s).with_context(|| format!("parsing report {}", a.input.display()))?;
        run.write("report.svg", &render_svg(&report))?
    } else {
        let table = plot::read_scores(&a.input, a.plot_seed)?;
        run.write("histogram.svg", &plot::histogram_svg(&table))?
    };
    println!("plot written to {}", path.display());
    Ok(Outcome::Complete)
}
