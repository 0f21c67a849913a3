#![allow(dead_code)]

use ats_core::corpus::{generate, CorpusSpec, FactorSpec, ParallelCorpus};
use ats_core::net::Teacher;
use ats_core::train::{train_teacher, Mode, TrainConfig};

pub fn small_spec(seed: u64) -> CorpusSpec {
    CorpusSpec {
        n_frames: 600,
        input_dim: 6,
        n_classes: 3,
        factors: vec![
            FactorSpec { name: "environment".into(), cardinality: 3, transform_strength: 3.0 },
            FactorSpec { name: "speaker".into(), cardinality: 2, transform_strength: 2.0 },
        ],
        class_separation: 5.0,
        noise_sigma: 1.0,
        target_noise_sigma: 0.2,
        seed,
        include_identity_condition: true,
    }
}

pub fn small_corpus(seed: u64) -> ParallelCorpus {
    generate(&small_spec(seed)).unwrap()
}

pub fn small_teacher(corpus: &ParallelCorpus) -> Teacher {
    let cfg = TrainConfig { mode: Mode::Teacher, epochs: 5, hidden_dims: vec![16, 16], seed: 3, ..TrainConfig::default() };
    train_teacher(corpus, corpus.spec().n_classes, &cfg).unwrap().teacher
}

pub fn cfg(mode: Mode, factors: &[&str]) -> TrainConfig {
    TrainConfig {
        mode,
        epochs: 3,
        seed: 11,
        factors: factors.iter().map(|s| s.to_string()).collect(),
        ..TrainConfig::default()
    }
}
