//! The bundled experiment grid: unadapted teacher, plain T/S, adversarial
//! T/S on each factor, and multi-factorial adversarial T/S, over several
//! corpus seeds.

use ats_core::corpus::{generate, split, CorpusSpec, ParallelCorpus};
use ats_core::eval::{attach_probes, evaluate, MetricsReport, ProbeConfig, Side};
use ats_core::net::{clone_student_from_teacher, ModelGraph, NetSpec};
use ats_core::train::{adapt, train_teacher, Mode, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENVIRONMENT: &str = "environment";
pub const SPEAKER: &str = "speaker";

/// System names in table order.
pub const SYSTEMS: [&str; 5] = ["unadapted", "ts", "ats-environment", "ats-speaker", "mfa"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotPreset {
    pub corpus: CorpusSpec,
    pub split: Vec<f64>,
    pub teacher: TrainConfig,
    pub adapt: TrainConfig,
    pub probe: ProbeConfig,
    pub seeds: Vec<u64>,
}

impl PilotPreset {
    pub fn standard() -> Self {
        let corpus = CorpusSpec::default();
        let teacher = TrainConfig {
            mode: Mode::Teacher,
            lr: 0.05,
            batch_size: 32,
            epochs: 10,
            hidden_dims: vec![32, 32],
            ..TrainConfig::default()
        };
        let adapt = TrainConfig {
            mode: Mode::Ts,
            lr: 0.002,
            batch_size: 32,
            epochs: 250,
            head_hidden: vec![96, 96],
            ..TrainConfig::default()
        };
        // Probes share the head's shape so leakage is judged at equal capacity.
        let probe = ProbeConfig { hidden: adapt.head_hidden.clone(), ..ProbeConfig::default() };
        Self { corpus, split: vec![0.6, 0.1, 0.3], teacher, adapt, probe, seeds: vec![0, 1, 2, 3, 4] }
    }

    /// Adaptation config for one system of the grid.
    pub fn system_config(&self, system: &str, seed: u64) -> Option<TrainConfig> {
        let (mode, factors): (Mode, &[&str]) = match system {
            "ts" => (Mode::Ts, &[]),
            "ats-environment" => (Mode::Ats, &[ENVIRONMENT]),
            "ats-speaker" => (Mode::Ats, &[SPEAKER]),
            "mfa" => (Mode::Mfa, &[SPEAKER, ENVIRONMENT]),
            _ => return None,
        };
        Some(TrainConfig {
            mode,
            seed,
            factors: factors.iter().map(|s| s.to_string()).collect(),
            ..self.adapt.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Teacher on the source half of the test split.
    pub source: MetricsReport,
    /// One report per entry of [`SYSTEMS`], on the target half of the test split.
    pub systems: Vec<MetricsReport>,
}

impl SeedOutcome {
    pub fn system(&self, name: &str) -> &MetricsReport {
        self.systems.iter().find(|r| r.run == name).expect("known system")
    }
}

pub struct SeedArtifacts {
    pub corpus: ParallelCorpus,
    pub graphs: Vec<(String, ModelGraph)>,
}

/// Runs the full grid for one corpus seed.
pub fn run_seed(preset: &PilotPreset, seed: u64) -> Result<(SeedOutcome, SeedArtifacts), CliError> {
    let corpus = generate(&CorpusSpec { seed, ..preset.corpus.clone() })?;
    let parts = split(&corpus, &preset.split)?;
    let (train, test) = (&parts[0], parts.last().unwrap());

    let teacher_cfg = TrainConfig { seed, ..preset.teacher.clone() };
    let teacher = train_teacher(train, preset.corpus.n_classes, &teacher_cfg)?.teacher;
    let spec = NetSpec::new(preset.corpus.input_dim, teacher_cfg.hidden_dims.clone(), preset.corpus.n_classes);
    let unadapted = clone_student_from_teacher(&teacher, &spec, seed)?;

    let mut graphs = vec![("unadapted".to_string(), unadapted)];
    for system in &SYSTEMS[1..] {
        let cfg = preset.system_config(system, seed).expect("grid system");
        graphs.push((system.to_string(), adapt(&teacher, train, &cfg)?.graph));
    }

    let mut source = evaluate(&graphs[0].1, test, "test", Side::Source)?;
    source.run = "teacher-source".into();
    let mut systems = Vec::with_capacity(graphs.len());
    for (name, g) in &graphs {
        let mut r = evaluate(g, test, "test", Side::Target)?;
        attach_probes(&mut r, g, test, &ProbeConfig { seed, ..preset.probe.clone() })?;
        r.run = name.clone();
        systems.push(r);
    }
    Ok((SeedOutcome { seed, source, systems }, SeedArtifacts { corpus, graphs }))
}

/// Seed-mean of `f` over `outcomes`.
pub fn seed_mean(outcomes: &[SeedOutcome], f: impl Fn(&SeedOutcome) -> f64) -> f64 {
    outcomes.iter().map(f).sum::<f64>() / outcomes.len().max(1) as f64
}

fn probe_margin(o: &SeedOutcome, system: &str, factor: &str) -> f64 {
    let m = o.system(system).factor(factor).expect("pilot factor");
    m.probe_accuracy.expect("probes attached") - m.chance
}

fn invariance(o: &SeedOutcome, system: &str, factor: &str) -> f64 {
    o.system(system).factor(factor).and_then(|m| m.invariance).expect("pilot factor")
}

/// Slack on the `≤` comparisons between adapted systems.
pub const ORDER_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.detail)
    }
}

fn criterion(id: &str, passed: bool, detail: String) -> Criterion {
    Criterion { id: id.into(), passed, detail }
}

/// The pilot's pass/fail checks over all seeds.
pub fn check_criteria(outcomes: &[SeedOutcome]) -> Vec<Criterion> {
    let acc = |name: &'static str| seed_mean(outcomes, move |o| o.system(name).accuracy);
    let source = seed_mean(outcomes, |o| o.source.accuracy);
    let [unadapted, ts, ats_env, ats_spk, mfa] = SYSTEMS.map(acc);
    let mut out = Vec::new();

    out.push(criterion("teacher-source-accuracy", source >= 0.95, format!("mean source accuracy {source:.4} (>= 0.95)")));
    out.push(criterion(
        "unadapted-target-drop",
        source - unadapted >= 0.15,
        format!("source {source:.4} - unadapted target {unadapted:.4} = {:.4} (>= 0.15)", source - unadapted),
    ));
    out.push(criterion(
        "ts-gain-over-unadapted",
        ts - unadapted >= 0.10,
        format!("ts {ts:.4} - unadapted {unadapted:.4} = {:.4} (>= 0.10)", ts - unadapted),
    ));

    let pairs = [("ats-environment", ENVIRONMENT), ("ats-speaker", SPEAKER)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (sys, factor) in pairs {
        let adv = seed_mean(outcomes, |o| probe_margin(o, sys, factor));
        let plain = seed_mean(outcomes, |o| probe_margin(o, "ts", factor));
        ok &= adv <= 0.10 && plain >= 0.20;
        parts.push(format!("{factor}: {sys} +{adv:.3} (<= 0.10), ts +{plain:.3} (>= 0.20)"));
    }
    out.push(criterion("probe-above-chance", ok, parts.join("; ")));

    let ordered = unadapted < ts
        && ts <= ats_env + ORDER_TOLERANCE
        && ts <= ats_spk + ORDER_TOLERANCE
        && ats_env <= mfa + ORDER_TOLERANCE
        && ats_spk <= mfa + ORDER_TOLERANCE;
    out.push(criterion(
        "accuracy-ordering",
        ordered,
        format!(
            "unadapted {unadapted:.4} < ts {ts:.4} <= ats-environment {ats_env:.4}, ats-speaker {ats_spk:.4} <= mfa {mfa:.4} (slack {ORDER_TOLERANCE})"
        ),
    ));

    let mut worst = Vec::new();
    let mut ok = true;
    for (sys, factor) in pairs {
        let gaps: Vec<f64> = outcomes.iter().map(|o| invariance(o, "ts", factor) - invariance(o, sys, factor)).collect();
        ok &= gaps.iter().all(|g| *g > 0.0);
        worst.push(format!("{factor}: smallest ts - {sys} gap {:.3}", gaps.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
    out.push(criterion("invariance-every-seed", ok, worst.join("; ")));
    out
}

/// Per-system seed means of target accuracy, in [`SYSTEMS`] order.
pub fn mean_accuracies(outcomes: &[SeedOutcome]) -> Vec<(String, f64)> {
    SYSTEMS.iter().map(|s| (s.to_string(), seed_mean(outcomes, |o| o.system(s).accuracy))).collect()
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// One report per system with every number averaged over seeds.
pub fn average_reports(outcomes: &[SeedOutcome]) -> Vec<MetricsReport> {
    let n = outcomes.len().max(1) as f64;
    SYSTEMS
        .iter()
        .map(|&name| {
            let all: Vec<&MetricsReport> = outcomes.iter().map(|o| o.system(name)).collect();
            let mut avg = all[0].clone();
            avg.frames = all.iter().map(|r| r.frames).sum();
            avg.accuracy = all.iter().map(|r| r.accuracy).sum::<f64>() / n;
            avg.mean_l_ts = all.iter().map(|r| r.mean_l_ts).sum::<f64>() / n;
            avg.mean_kl = all.iter().map(|r| r.mean_kl).sum::<f64>() / n;
            for (k, f) in avg.factors.iter_mut().enumerate() {
                let per = |r: &&MetricsReport| r.factors[k].clone();
                let fs: Vec<_> = all.iter().map(per).collect();
                f.chance = fs.iter().map(|f| f.chance).sum::<f64>() / n;
                for (a, cell) in f.task_accuracy.iter_mut().enumerate() {
                    *cell = mean_opt(fs.iter().map(|f| f.task_accuracy[a]));
                }
                f.probe_accuracy = mean_opt(fs.iter().map(|f| f.probe_accuracy));
                f.head_accuracy = mean_opt(fs.iter().map(|f| f.head_accuracy));
                f.invariance = mean_opt(fs.iter().map(|f| f.invariance));
            }
            avg
        })
        .collect()
}
