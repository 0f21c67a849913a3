//! Command-line entry points. Each subcommand maps to one `run_*` function so
//! tests can drive them without a subprocess.

use std::path::{Path, PathBuf};
use std::process::{Child, Command};
use std::time::Instant;

use ats_core::corpus::{generate, split};
use ats_core::eval::{attach_probes, compare_runs, evaluate, train_probe, MetricsReport, Side};
use ats_core::net::{clone_student_from_teacher, NetSpec};
use ats_core::train::{train_teacher, Adapter, Mode};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io;
use crate::manifest::RunManifest;
use crate::metrics::{read_report, MetricsLog, Record};
use crate::pilot::{self, PilotPreset, SeedOutcome};

#[derive(Debug, Parser)]
#[command(name = "ats", version, about = "Adversarial teacher-student adaptation on synthetic parallel corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a parallel corpus and its train/dev/test splits.
    GenData(GenDataArgs),
    /// Train a teacher, or adapt a student from a teacher checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a corpus split.
    Eval(EvalArgs),
    /// Train a fresh condition probe on frozen features.
    Probe(ProbeArgs),
    /// Tabulate evaluation reports, best average first.
    Compare(CompareArgs),
    /// Run the bundled experiment grid over several seeds.
    Pilot(PilotArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write corpus.csv.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training split (corpus file).
    #[arg(long)]
    pub data: PathBuf,
    /// Teacher checkpoint; required for ts, ats and mfa.
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    /// Evaluated every `eval_every` epochs when given.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Comma-separated factor names.
    #[arg(long, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Continue from the checkpoint and state in `--out`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Source,
    Target,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Source => Side::Source,
            SideArg::Target => Side::Target,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "target")]
    pub side: SideArg,
    /// Run name recorded in the report; defaults to the checkpoint's directory name.
    #[arg(long)]
    pub name: Option<String>,
    /// Attach fresh-probe accuracies per factor.
    #[arg(long)]
    pub probe: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append the report to a JSONL metrics log.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Probe the student's features; without it the raw frames are probed.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub factor: String,
    #[arg(long, value_enum, default_value = "target")]
    pub side: SideArg,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report files (`.json`, or `.jsonl` logs whose last eval record is used).
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Tabulate the conditions of this factor.
    #[arg(long)]
    pub factor: Option<String>,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct PilotArgs {
    /// Preset TOML; defaults to the bundled preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated corpus seeds, replacing the preset's.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Worker processes; seeds are spread over them.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Print the bundled preset as TOML and exit.
    #[arg(long)]
    pub print_preset: bool,
    #[arg(long, hide = true)]
    pub worker: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).map_err(|e| e.to_string())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::GenData(a) => run_gen_data(&a),
        Cmd::Train(a) => run_train(&a),
        Cmd::Eval(a) => run_eval(&a),
        Cmd::Probe(a) => run_probe(&a),
        Cmd::Compare(a) => run_compare(&a),
        Cmd::Pilot(a) => run_pilot(&a),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn split_names(n: usize) -> Vec<String> {
    match n {
        1 => vec!["all".into()],
        2 => vec!["train".into(), "test".into()],
        3 => vec!["train".into(), "dev".into(), "test".into()],
        _ => (0..n).map(|i| format!("split{i}")).collect(),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn run_gen_data(a: &GenDataArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = RunConfig::resolve(a.config.as_deref())?;
    create_dir(&a.out)?;
    let corpus = generate(&cfg.corpus)?;
    let mut manifest = RunManifest::new("gen-data", cfg.corpus.seed, cfg.to_toml());
    if let Some(c) = &a.config {
        manifest.input(c)?;
    }
    let whole = a.out.join("corpus.atsc");
    io::save_corpus(&corpus, &whole)?;
    manifest.output(&whole)?;
    let parts = split(&corpus, &cfg.split.fractions)?;
    for (part, name) in parts.iter().zip(split_names(parts.len())) {
        let p = a.out.join(format!("{name}.atsc"));
        io::save_corpus(part, &p)?;
        manifest.output(&p)?;
        println!("{name}: {} frames -> {}", part.len(), p.display());
    }
    if a.csv {
        let p = a.out.join("corpus.csv");
        io::write_bytes(&p, io::corpus_to_csv(&corpus).as_bytes())?;
        manifest.output(&p)?;
    }
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    manifest.save(&a.out.join("manifest.json"))
}

fn train_config(a: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::resolve(a.config.as_deref())?;
    let t = &mut cfg.train;
    if let Some(m) = a.mode {
        t.mode = m;
    }
    if let Some(f) = &a.factors {
        t.factors = f.clone();
    }
    if let Some(l) = a.lambda {
        t.lambda = l;
    }
    if let Some(l) = a.lr {
        t.lr = l;
    }
    if let Some(e) = a.epochs {
        t.epochs = e;
    }
    t.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn run_name(out: &Path) -> String {
    out.file_name().map_or_else(|| "run".into(), |n| n.to_string_lossy().into_owned())
}

pub fn run_train(a: &TrainArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = train_config(a)?;
    let t = &cfg.train;
    let data = io::load_corpus(&a.data)?;
    let dev = a.dev.as_deref().map(io::load_corpus).transpose()?;
    create_dir(&a.out)?;
    let model_path = a.out.join("model.ckpt");
    let state_path = a.out.join("state.atst");
    let mut log = MetricsLog::append(&a.out.join("metrics.jsonl"))?;
    let name = run_name(&a.out);
    let mut manifest = RunManifest::new("train", t.seed, cfg.to_toml());
    manifest.input(&a.data)?;

    if t.mode == Mode::Teacher {
        if a.resume {
            return Err(CliError::Usage("--resume applies to adaptation runs only".into()));
        }
        let n_classes = data.spec().n_classes;
        let run = train_teacher(&data, n_classes, t)?;
        for stats in run.history {
            println!("epoch {} loss {:.6}", stats.epoch, stats.losses.l_ts);
            log.write(&Record::Epoch { run: name.clone(), stats })?;
        }
        let spec = NetSpec::new(data.spec().input_dim, t.hidden_dims.clone(), n_classes);
        let graph = clone_student_from_teacher(&run.teacher, &spec, t.seed)?;
        if let Some(dev) = &dev {
            log.write(&Record::Eval(named(evaluate(&graph, dev, "dev", Side::Source)?, &name)))?;
        }
        io::save_checkpoint(&graph, &model_path)?;
    } else {
        let mut adapter = if a.resume {
            let graph = io::load_checkpoint(&model_path, None)?;
            let state = io::load_state(&state_path)?;
            println!("resuming at epoch {}", state.epoch);
            Adapter::resume(graph, state, &data, t)?
        } else {
            let teacher_path =
                a.teacher.as_deref().ok_or_else(|| CliError::Usage(format!("mode {} needs --teacher", t.mode)))?;
            manifest.input(teacher_path)?;
            let teacher = io::load_checkpoint(teacher_path, None)?.teacher().clone();
            Adapter::new(&teacher, &data, t)?
        };
        while !adapter.is_done() {
            let stats = adapter.run_epoch()?;
            let l = &stats.losses;
            println!("epoch {} l_ts {:.6} kl {:.6} l_cond {:?} l_total {:.6}", stats.epoch, l.l_ts, l.kl_diag, l.l_cond, l.l_total);
            let due = t.eval_every > 0 && stats.epoch % t.eval_every == 0;
            log.write(&Record::Epoch { run: name.clone(), stats })?;
            io::save_checkpoint(adapter.graph(), &model_path)?;
            io::save_state(adapter.state(), &state_path)?;
            if let (true, Some(dev)) = (due || adapter.is_done(), &dev) {
                let mut r = evaluate(adapter.graph(), dev, "dev", Side::Target)?;
                r.run = name.clone();
                log.write(&Record::Eval(r))?;
            }
        }
        io::save_checkpoint(adapter.graph(), &model_path)?;
        io::save_state(adapter.state(), &state_path)?;
        manifest.output(&state_path)?;
    }
    manifest.output(&model_path)?;
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    manifest.save(&a.out.join("manifest.json"))?;
    println!("wrote {}", model_path.display());
    Ok(())
}

fn named(mut r: MetricsReport, name: &str) -> MetricsReport {
    r.run = name.into();
    r
}

fn split_label(path: &Path) -> String {
    path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned())
}

pub fn run_eval(a: &EvalArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(a.config.as_deref())?;
    let graph = io::load_checkpoint(&a.model, None)?;
    let data = io::load_corpus(&a.data)?;
    let mut report = evaluate(&graph, &data, &split_label(&a.data), a.side.into())?;
    if a.probe {
        attach_probes(&mut report, &graph, &data, &cfg.probe)?;
    }
    report.run = a.name.clone().unwrap_or_else(|| a.model.parent().map_or_else(|| "model".into(), run_name));
    print_report(&report);
    if let Some(p) = &a.out {
        io::write_bytes(p, serde_json::to_string_pretty(&report).expect("report serializes").as_bytes())?;
    }
    if let Some(p) = &a.metrics {
        MetricsLog::append(p)?.write(&Record::Eval(report))?;
    }
    Ok(())
}

fn print_report(r: &MetricsReport) {
    println!("{} on {} ({}, {} frames): accuracy {:.4}, mean KL {:.6}", r.run, r.split, r.side.as_str(), r.frames, r.accuracy, r.mean_kl);
    for f in &r.factors {
        let per: Vec<String> =
            f.task_accuracy.iter().map(|a| a.map_or_else(|| "-".into(), |v| format!("{v:.3}"))).collect();
        print!("  {}: per-condition [{}]", f.factor, per.join(", "));
        if let Some(p) = f.probe_accuracy {
            print!(" probe {p:.3} (chance {:.3})", f.chance);
        }
        if let Some(h) = f.head_accuracy {
            print!(" head {h:.3}");
        }
        if let Some(v) = f.invariance {
            print!(" invariance {v:.4}");
        }
        println!();
    }
}

pub fn run_probe(a: &ProbeArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(a.config.as_deref())?;
    let data = io::load_corpus(&a.data)?;
    let r = data.factor_index(&a.factor)?;
    let labels = data
        .condition_labels(r)
        .ok_or_else(|| CliError::Data(format!("{}: no labels for factor `{}`", a.data.display(), a.factor)))?;
    let frames = match a.side {
        SideArg::Source => data.source(),
        SideArg::Target => data.target(),
    };
    let features = match &a.model {
        Some(m) => io::load_checkpoint(m, None)?.student_features(frames)?,
        None => frames.clone(),
    };
    let out = train_probe(&features, labels, &cfg.probe)?;
    println!("probe {}: accuracy {:.4} (chance {:.4})", a.factor, out.accuracy, out.chance);
    Ok(())
}

pub fn run_compare(a: &CompareArgs) -> Result<(), CliError> {
    let reports = a.reports.iter().map(|p| read_report(p)).collect::<Result<Vec<_>, _>>()?;
    let table = compare_runs(&reports, a.factor.as_deref());
    print!("{}", if a.csv { table.to_csv() } else { table.to_text() });
    Ok(())
}

pub fn load_preset(path: Option<&Path>) -> Result<PilotPreset, CliError> {
    let mut preset = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            toml::from_str(&text).map_err(|e| CliError::Config { path: p.to_path_buf(), message: e.to_string() })?
        }
        None => PilotPreset::standard(),
    };
    if let Some(seed) = crate::config::seed_override()? {
        preset.seeds = vec![seed];
    }
    Ok(preset)
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Runs one seed of the grid and writes its outcome, reports and checkpoints.
pub fn run_pilot_seed(preset: &PilotPreset, seed: u64, out: &Path) -> Result<SeedOutcome, CliError> {
    let dir = seed_dir(out, seed);
    create_dir(&dir)?;
    let (outcome, artifacts) = pilot::run_seed(preset, seed)?;
    for (name, graph) in &artifacts.graphs {
        io::save_checkpoint(graph, &dir.join(format!("{name}.ckpt")))?;
    }
    for r in outcome.systems.iter().chain([&outcome.source]) {
        let p = dir.join(format!("{}.json", r.run));
        io::write_bytes(&p, serde_json::to_string_pretty(r).expect("report serializes").as_bytes())?;
    }
    let text = serde_json::to_string_pretty(&outcome).expect("outcome serializes");
    io::write_bytes(&dir.join("outcome.json"), text.as_bytes())?;
    Ok(outcome)
}

fn read_outcome(out: &Path, seed: u64) -> Result<SeedOutcome, CliError> {
    let p = seed_dir(out, seed).join("outcome.json");
    serde_json::from_slice(&io::read_bytes(&p)?).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
}

fn spawn_worker(config: Option<&Path>, out: &Path, seed: u64) -> Result<Child, CliError> {
    let exe = std::env::current_exe().map_err(|e| CliError::io("current executable", e))?;
    let mut cmd = Command::new(exe);
    cmd.arg("pilot").arg("--worker").arg("--out").arg(out).arg("--seeds").arg(seed.to_string());
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.env_remove(crate::config::SEED_ENV);
    cmd.spawn().map_err(|e| CliError::io("worker process", e))
}

pub fn run_pilot(a: &PilotArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut preset = load_preset(a.config.as_deref())?;
    if a.print_preset {
        print!("{}", toml::to_string_pretty(&preset).expect("preset serializes"));
        return Ok(());
    }
    if let Some(s) = &a.seeds {
        preset.seeds = s.clone();
    }
    if preset.seeds.is_empty() {
        return Err(CliError::Usage("pilot needs at least one seed".into()));
    }
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    create_dir(&a.out)?;

    let outcomes = if a.jobs == 1 || a.worker || preset.seeds.len() == 1 {
        let mut v = Vec::new();
        for &seed in &preset.seeds {
            let t = Instant::now();
            v.push(run_pilot_seed(&preset, seed, &a.out)?);
            eprintln!("seed {seed} done in {:.1}s", t.elapsed().as_secs_f64());
        }
        v
    } else {
        let mut pending: Vec<u64> = preset.seeds.iter().rev().copied().collect();
        let mut running: Vec<(u64, Child)> = Vec::new();
        while !pending.is_empty() || !running.is_empty() {
            while running.len() < a.jobs {
                let Some(seed) = pending.pop() else { break };
                running.push((seed, spawn_worker(a.config.as_deref(), &a.out, seed)?));
            }
            let (seed, mut child) = running.remove(0);
            let status = child.wait().map_err(|e| CliError::io("worker process", e))?;
            if !status.success() {
                return Err(CliError::Data(format!("worker for seed {seed} failed with {status}")));
            }
        }
        preset.seeds.iter().map(|&s| read_outcome(&a.out, s)).collect::<Result<Vec<_>, _>>()?
    };
    if a.worker {
        return Ok(());
    }

    let reports: Vec<MetricsReport> = outcomes.iter().flat_map(|o| o.systems.iter().cloned()).collect();
    let averaged = pilot::average_reports(&outcomes);
    let table = compare_runs(&averaged, Some(pilot::ENVIRONMENT));
    print!("{}", table.to_text());
    io::write_bytes(&a.out.join("compare.csv"), table.to_csv().as_bytes())?;
    let criteria = pilot::check_criteria(&outcomes);
    for c in &criteria {
        println!("{c}");
    }
    let summary = serde_json::json!({
        "seeds": preset.seeds,
        "mean_accuracy": pilot::mean_accuracies(&outcomes),
        "criteria": criteria,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "reports": reports,
    });
    io::write_bytes(&a.out.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap().as_bytes())?;
    let mut manifest = RunManifest::new("pilot", preset.seeds[0], toml::to_string_pretty(&preset).unwrap());
    if let Some(c) = &a.config {
        manifest.input(c)?;
    }
    manifest.output(&a.out.join("summary.json"))?;
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    manifest.save(&a.out.join("manifest.json"))?;
    println!("pilot finished in {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
