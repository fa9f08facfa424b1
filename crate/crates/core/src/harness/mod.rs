//! Episodes, nominal policies, brute-force oracles and trace verification.

pub mod bench;
pub mod episode;
pub mod oracle;
pub mod policy;
pub mod scenario;
pub mod trace;
pub mod verify;

pub use bench::{bench_phase1, sample_unsafe_states, BenchRow, UnsafeSample};
pub use episode::{run_batch, run_episode, Env, EpisodeJob, SafeguardStack, TriggerSetup};
pub use oracle::{brute_force_project, safe_control_fraction, SafeFraction, ScanCell};
pub use policy::{NominalPolicy, PolicySpec};
pub use trace::{AssumptionFlag, EpisodeFailure, EpisodeTrace, StepRecord, TRACE_COLUMNS};
pub use verify::{check_finite_time_convergence, check_forward_invariance, VerificationReport};
