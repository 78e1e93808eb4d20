//! Experiment pipeline: configuration, synthetic corpus, batch evaluation,
//! the λ_E/QP experiment and artifact I/O.

pub mod config;
pub mod corpus;
pub mod evaluate;
pub mod lambda;
pub mod logs;

pub use config::{CorpusEntry, ExperimentConfig, DEFAULT_QPS, FULL_QPS};
pub use corpus::{generate_corpus, generate_frame, generate_sequence, Content};
pub use evaluate::{evaluate, BdEntry, BdReport, Provenance, RunResult, StreamingReport};
pub use lambda::{run_lambda_experiment, write_lambda_outputs, LambdaOutcome, LambdaSummary};
