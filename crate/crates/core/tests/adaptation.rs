mod common;

use ats_core::corpus::{generate, AuditedCorpus, CorpusSpec, FactorSpec, ParallelCorpus};
use ats_core::loss::{condition_loss, kl_divergence};
use ats_core::net::{clone_student_from_teacher, decode_checkpoint, encode_checkpoint, FactorHead, NetSpec};
use ats_core::train::{adapt, adapt_ats, adapt_mfa, adapt_ts, train_teacher, Adapter, Mode, TrainConfig, TrainState};
use ats_core::Error;
use common::{cfg, small_corpus, small_teacher};

fn teacher_bytes(t: &ats_core::net::Teacher) -> Vec<u64> {
    t.net().layers().iter().flat_map(|l| l.w.as_slice().iter().chain(l.b.as_slice())).map(|v| v.to_bits()).collect()
}

#[test]
fn ats_with_zero_lambda_equals_ts() {
    let c = small_corpus(1);
    let t = small_teacher(&c);
    let ts = adapt_ts(&t, &c, &cfg(Mode::Ts, &[])).unwrap();
    let ats = adapt_ats(&t, &c, &TrainConfig { lambda: 0.0, ..cfg(Mode::Ats, &["environment"]) }).unwrap();
    assert_eq!(ts.graph.feature_extractor(), ats.graph.feature_extractor());
    assert_eq!(ts.graph.task_head(), ats.graph.task_head());
    // The head still trained.
    let fresh = clone_student_from_teacher(&t, ats.graph.spec(), 11).unwrap();
    assert_ne!(fresh.condition_heads(), ats.graph.condition_heads());
}

#[test]
fn mfa_with_one_factor_equals_ats() {
    let c = small_corpus(2);
    let t = small_teacher(&c);
    let ats = adapt_ats(&t, &c, &cfg(Mode::Ats, &["speaker"])).unwrap();
    let mfa = adapt_mfa(&t, &c, &cfg(Mode::Mfa, &["speaker"])).unwrap();
    assert_eq!(ats.graph, mfa.graph);
    assert_eq!(ats.history, mfa.history);
}

#[test]
fn teacher_is_frozen() {
    let c = small_corpus(3);
    let t = small_teacher(&c);
    let before = teacher_bytes(&t);
    for (mode, f) in [(Mode::Ts, vec![]), (Mode::Ats, vec!["environment"]), (Mode::Mfa, vec!["environment", "speaker"])] {
        let run = adapt(&t, &c, &cfg(mode, &f)).unwrap();
        assert_eq!(teacher_bytes(run.graph.teacher()), before);
    }
    assert_eq!(teacher_bytes(&t), before);
}

#[test]
fn adaptation_never_reads_task_labels() {
    let c = small_corpus(4);
    let t = small_teacher(&c);
    for (mode, f) in [(Mode::Ts, vec![]), (Mode::Ats, vec!["speaker"]), (Mode::Mfa, vec!["environment", "speaker"])] {
        let audited = AuditedCorpus::new(&c);
        adapt(&t, &audited, &cfg(mode, &f)).unwrap();
        assert_eq!(audited.task_label_reads(), 0, "{mode}");
        assert_eq!(audited.condition_label_reads() > 0, mode != Mode::Ts);
    }
    let audited = AuditedCorpus::new(&c);
    train_teacher(&audited, 3, &TrainConfig { mode: Mode::Teacher, epochs: 1, ..TrainConfig::default() }).unwrap();
    assert!(audited.task_label_reads() > 0);
}

#[test]
fn adaptation_runs_without_task_labels() {
    let c = small_corpus(5);
    let t = small_teacher(&c);
    let unlabeled = c.clone().without_task_labels();
    let a = adapt(&t, &unlabeled, &cfg(Mode::Mfa, &["environment", "speaker"])).unwrap();
    let b = adapt(&t, &c, &cfg(Mode::Mfa, &["environment", "speaker"])).unwrap();
    assert_eq!(a.graph, b.graph);
}

#[test]
fn missing_condition_labels_is_contract_error() {
    let c = small_corpus(6);
    let t = small_teacher(&c);
    let unlabeled = c.clone().without_condition_labels();
    let err = adapt(&t, &unlabeled, &cfg(Mode::Ats, &["environment"])).unwrap_err();
    assert!(matches!(err, Error::Contract(_)), "{err:?}");
    // Plain T/S needs no condition labels.
    adapt(&t, &unlabeled, &cfg(Mode::Ts, &[])).unwrap();
}

#[test]
fn single_condition_factor_rejected() {
    let mut spec = common::small_spec(7);
    spec.factors.push(FactorSpec { name: "mic".into(), cardinality: 1, transform_strength: 0.0 });
    let c = generate(&spec).unwrap();
    let t = small_teacher(&c);
    assert!(matches!(adapt(&t, &c, &cfg(Mode::Ats, &["mic"])), Err(Error::Config(_))));
    assert!(matches!(adapt(&t, &c, &cfg(Mode::Ats, &["room"])), Err(Error::UnknownFactor { .. })));
    assert!(matches!(adapt(&t, &c, &cfg(Mode::Mfa, &[])), Err(Error::Config(_))));
    assert!(matches!(adapt_ts(&t, &c, &cfg(Mode::Ats, &["speaker"])), Err(Error::Config(_))));
}

#[test]
fn deterministic_given_seed() {
    let c = small_corpus(8);
    let t = small_teacher(&c);
    let conf = cfg(Mode::Mfa, &["environment", "speaker"]);
    let a = adapt(&t, &c, &conf).unwrap();
    let b = adapt(&t, &c, &conf).unwrap();
    assert_eq!(a.graph, b.graph);
    let other = adapt(&t, &c, &TrainConfig { seed: 12, ..conf }).unwrap();
    assert_ne!(a.graph, other.graph);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let c = small_corpus(9);
    let t = small_teacher(&c);
    let conf = TrainConfig { epochs: 4, ..cfg(Mode::Mfa, &["environment", "speaker"]) };
    let whole = adapt(&t, &c, &conf).unwrap();

    let mut first = Adapter::new(&t, &c, &conf).unwrap();
    let mut history = vec![first.run_epoch().unwrap(), first.run_epoch().unwrap()];
    let ckpt = encode_checkpoint(first.graph());
    let state = first.state().encode();

    let graph = decode_checkpoint(&ckpt, None).unwrap();
    let second = Adapter::resume(graph, TrainState::decode(&state).unwrap(), &c, &conf).unwrap();
    let rest = second.run().unwrap();
    history.extend(rest.history);
    assert_eq!(rest.graph, whole.graph);
    assert_eq!(history, whole.history);
}

#[test]
fn first_head_update_does_not_depend_on_lambda() {
    let c = small_corpus(10);
    let t = small_teacher(&c);
    let one_step = |lambda: f64| {
        let conf = TrainConfig { lambda, epochs: 1, batch_size: c.len(), ..cfg(Mode::Ats, &["environment"]) };
        adapt(&t, &c, &conf).unwrap().graph
    };
    let (a, b) = (one_step(5.0), one_step(10.0));
    assert_eq!(a.condition_heads(), b.condition_heads());
    assert_eq!(a.task_head(), b.task_head());
    assert_ne!(a.feature_extractor(), b.feature_extractor());
}

/// With a pretrained head held fixed, one reversed step on `θ_f` moves the
/// features toward higher condition loss.
#[test]
fn reversed_feature_step_raises_condition_loss() {
    let mut raised = 0;
    let mut mean_delta = 0.0;
    for seed in 0..20 {
        let c = small_corpus(100 + seed);
        let t = small_teacher(&c);
        let pre = adapt(&t, &c, &TrainConfig { lambda: 0.0, epochs: 3, seed, ..cfg(Mode::Ats, &["environment"]) }).unwrap();
        let env = c.condition_labels(0).unwrap();
        let lcond = |g: &ats_core::net::ModelGraph| {
            condition_loss(&g.forward_student(c.target()).unwrap().cond_post[0], env).unwrap() / c.len() as f64
        };
        let mut g = pre.graph.clone();
        g.grl.lambda = 5.0;
        let before = lcond(&g);
        let fwd = g.forward_student(c.target()).unwrap();
        let b = c.len() as f64;
        let zero_task = ats_core::tensor::Matrix::zeros(c.len(), 3);
        let gc = ats_core::loss::condition_loss_grad(&fwd.cond_post[0], env).unwrap().scale(1.0 / b);
        let mut grads = g.backward_student(&fwd.cache, &zero_task, &[gc]).unwrap();
        // Only θ_f moves.
        for l in grads.task.iter_mut().chain(grads.heads[0].iter_mut()) {
            l.w = l.w.scale(0.0);
            l.b = l.b.scale(0.0);
        }
        g.apply_sgd(&grads, 0.01).unwrap();
        let delta = lcond(&g) - before;
        mean_delta += delta / 20.0;
        if delta >= 0.0 {
            raised += 1;
        }
    }
    assert!(mean_delta > 0.0, "mean change {mean_delta}");
    assert!(raised >= 18, "{raised}/20");
}

fn kl_on(g: &ats_core::net::ModelGraph, c: &ParallelCorpus) -> f64 {
    let p_t = g.forward_teacher(c.source()).unwrap();
    kl_divergence(&p_t, &g.predict_student(c.target()).unwrap()).unwrap() / c.len() as f64
}

#[test]
fn ts_reduces_held_out_kl_on_shifted_corpus() {
    let train = small_corpus(20);
    let held = generate(&CorpusSpec { n_frames: 300, ..train.spec().clone() }).unwrap();
    let held = ats_core::corpus::split(&held, &[0.5, 0.5]).unwrap().remove(1);
    let t = small_teacher(&train);
    let spec = NetSpec::new(6, vec![16, 16], 3);
    let before = kl_on(&clone_student_from_teacher(&t, &spec, 0).unwrap(), &held);
    let after = kl_on(&adapt_ts(&t, &train, &TrainConfig { epochs: 10, ..cfg(Mode::Ts, &[]) }).unwrap().graph, &held);
    assert!(after < before, "{before} -> {after}");
}

#[test]
fn identity_shift_keeps_kl_near_zero() {
    let spec = CorpusSpec {
        factors: vec![FactorSpec { name: "environment".into(), cardinality: 2, transform_strength: 0.0 }],
        target_noise_sigma: 0.0,
        ..common::small_spec(21)
    };
    let c = generate(&spec).unwrap();
    assert_eq!(c.source(), c.target());
    let t = small_teacher(&c);
    let run = adapt_ts(&t, &c, &cfg(Mode::Ts, &[])).unwrap();
    assert!(kl_on(&run.graph, &c) <= 1e-3);
}

#[test]
fn history_losses_are_consistent() {
    let c = small_corpus(22);
    let t = small_teacher(&c);
    let run = adapt(&t, &c, &cfg(Mode::Mfa, &["environment", "speaker"])).unwrap();
    assert_eq!(run.history.len(), 3);
    for e in &run.history {
        let l = &e.losses;
        assert_eq!(l.l_cond.len(), 2);
        let rebuilt = l.l_ts - 5.0 * l.l_cond.iter().sum::<f64>();
        assert!((rebuilt - l.l_total).abs() <= 1e-12);
        assert!(l.kl_diag >= 0.0 && l.kl_diag <= l.l_ts);
    }
    assert_eq!(run.state.epoch, 3);
    assert!(run.graph.spec().factors == vec![
        FactorHead { name: "environment".into(), classes: 3 },
        FactorHead { name: "speaker".into(), classes: 2 }
    ]);
}
