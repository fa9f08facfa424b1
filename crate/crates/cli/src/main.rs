//! `issa`: safety index synthesis, safeguarded simulation, verification,
//! safe-set scans and phase-one benchmarks from a JSON run config.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 1    | verification failed, or an unexpected runtime error |
//! | 2    | design rule infeasible |
//! | 3    | episode aborted mid-run (partial trace written) |
//! | 64   | bad command line or config |
//! | 65   | trace file does not match the expected schema |
//! | 66   | scan requested for a model without a 2D control |
//! | 74   | output file could not be written |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use issa_core::config::{RunConfig, Sidecar};
use issa_core::ctrigger::TriggerProps;
use issa_core::harness::{
    bench_phase1, check_finite_time_convergence, check_forward_invariance, run_episode, safe_control_fraction,
    sample_unsafe_states, EpisodeTrace,
};
use issa_core::model::{Dynamics, RobotState};
use issa_core::safety_index::{discrete_k_min, synthesize_k, IndexKind, Mode, RuleReport};
use issa_core::Error;

const EXIT_VERIFY: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_ABORTED: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_SCHEMA: u8 = 65;
const EXIT_NOT_2D: u8 = 66;
const EXIT_IO: u8 = 74;

#[derive(Parser, Debug)]
#[command(name = "issa", version, about = "Model-free safe control: synthesize, simulate, verify, scan, bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the design rules for the configured mode and print per-clause slack.
    Synthesize {
        #[command(flatten)]
        run: RunArgs,
        /// Also print the smallest gain k that passes the gain clause.
        #[arg(long)]
        k_min: bool,
    },
    /// Run one safeguarded episode and write the trace CSV plus a JSON sidecar.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Apply nominal controls without the safeguard.
        #[arg(long)]
        no_safeguard: bool,
    },
    /// Check forward invariance and, with the trigger enabled, the convergence bound.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        /// Run config or sidecar; defaults to the sidecar next to the trace.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Built-in unicycle comparison of discrete and continuous-approximation safety.
    Toy {
        #[arg(long, value_enum, default_value_t = ModeArg::Discrete)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the one-step change of the index over a control lattice.
    Scan {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// State as `px,py,theta[,v]`; defaults to the configured initial state.
        #[arg(long, allow_hyphen_values = true)]
        state: Option<String>,
        /// Lattice points per control dimension.
        #[arg(long, default_value_t = 41)]
        resolution: usize,
    },
    /// Phase-one success rate over sampled unsafe states for several direction counts.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![3, 5, 10, 20])]
        n_dirs: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Write wall_ms = 0 so the output is byte-reproducible.
        #[arg(long)]
        no_timing: bool,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Continuous,
    Discrete,
    ContinuousApprox,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Continuous => Mode::Continuous,
            ModeArg::Discrete => Mode::Discrete,
            ModeArg::ContinuousApprox => Mode::ContinuousApprox,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_) | Error::UnsupportedExponent(_) => EXIT_USAGE,
            Error::Trace(_) => EXIT_SCHEMA,
            Error::InfeasibleGain { .. } => EXIT_INFEASIBLE,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synthesize { run, k_min } => synthesize(&run, k_min),
        Command::Simulate { run, out, no_safeguard } => simulate(&run, &out, no_safeguard),
        Command::Verify { trace, config } => verify(&trace, config.as_deref()),
        Command::Toy { mode, out, steps, seed } => toy(mode.into(), &out, steps, seed),
        Command::Scan { run, out, state, resolution } => scan(&run, &out, state.as_deref(), resolution),
        Command::Bench { run, out, n_dirs, trials, no_timing } => bench(&run, &out, &n_dirs, trials, no_timing),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(run: &RunArgs) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::load(&run.config)?;
    if let Some(seed) = run.seed {
        config.seed = seed;
    }
    if let Some(steps) = run.steps {
        config.sim.steps = steps;
    }
    if let Some(mode) = run.mode {
        config.index.mode = mode.into();
    }
    config.validate()?;
    Ok(config)
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| Failure::new(EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

fn sidecar_path(trace: &Path) -> PathBuf {
    let mut s = trace.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn print_rule(report: &RuleReport) {
    for c in &report.clauses {
        println!(
            "clause {:<18} {:<4} lhs={:.9e} rhs={:.9e} slack={:+.9e}  [{}]",
            c.clause.name(),
            if c.holds { "ok" } else { "FAIL" },
            c.lhs,
            c.rhs,
            c.slack,
            c.clause.formula()
        );
        if let Some(note) = &c.note {
            println!("  note: {note}");
        }
    }
}

fn infeasible(report: &RuleReport) -> Failure {
    let names: Vec<&str> = report.failures().map(|c| c.clause.name()).collect();
    Failure::new(EXIT_INFEASIBLE, format!("design rule violated: {}", names.join(", ")))
}

fn synthesize(run: &RunArgs, k_min: bool) -> CmdResult {
    let config = load_config(run)?;
    println!("mode {}", config.index.mode);
    if matches!(config.index.family, IndexKind::Toy { .. }) {
        println!("toy index family: no design rule applies");
        return Ok(());
    }
    let params = config.index.params();
    if config.index.mode == Mode::Discrete {
        if params.n != 1 {
            return Err(Failure::new(EXIT_INFEASIBLE, format!("discrete mode requires n = 1, got n = {}", params.n)));
        }
        let model = config.build_model()?;
        println!("d_dot*_min {:.9e}", config.d_dot_star_min(&model)?);
    }
    let report = config.rule_report()?;
    print_rule(&report);
    if k_min {
        let k = match config.index.mode {
            Mode::Discrete => discrete_k_min(params.eta0, &config.limits),
            Mode::Continuous | Mode::ContinuousApprox => {
                synthesize_k(&config.limits, params.n, params.sigma, params.d_min)?
            }
        };
        println!("k_min {k:.9e}");
    }
    if report.holds() {
        println!("feasible");
        Ok(())
    } else {
        Err(infeasible(&report))
    }
}

/// Runs the configured episode, writes trace and sidecar, prints a summary.
fn run_and_write(config: &RunConfig, out: &Path) -> Result<EpisodeTrace, Failure> {
    let rt = config.runtime()?;
    let trace = run_episode(&rt.env, &rt.policy, &rt.stack, rt.x0, rt.steps, rt.seed);
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    write_file(out, &csv)?;
    let sidecar = Sidecar {
        config: config.clone(),
        trigger_props: rt.trigger_props.clone(),
        failure: trace.failure.clone(),
        flags: trace.flags.clone(),
    };
    let side = sidecar_path(out);
    write_file(&side, sidecar.to_json().as_bytes())?;

    println!("steps {}", trace.len());
    println!("interventions {}", trace.interventions());
    println!("trigger_firings {}", trace.records.iter().filter(|r| r.trigger_fired).count());
    println!("queries {}", trace.total_queries());
    match trace.max_phi0() {
        Some(m) => println!("max_phi0 {m:.6e}"),
        None => println!("max_phi0 n/a"),
    }
    match trace.records.iter().find(|r| r.phi <= 0.0) {
        Some(r) => println!("converged_step {}", r.t),
        None => println!("converged_step none"),
    }
    print_flags(&trace);
    println!("wrote {} and {}", out.display(), side.display());
    if let Some(f) = &trace.failure {
        return Err(Failure::new(EXIT_ABORTED, format!("episode aborted at step {}: {}", f.step, f.message)));
    }
    Ok(trace)
}

fn print_flags(trace: &EpisodeTrace) {
    if trace.flags.is_empty() {
        println!("assumption_flags none");
        return;
    }
    let mut counts: Vec<(&str, usize, usize)> = Vec::new();
    for f in &trace.flags {
        match counts.iter_mut().find(|(k, _, _)| *k == f.kind) {
            Some(c) => c.1 += 1,
            None => counts.push((&f.kind, 1, f.step)),
        }
    }
    for (kind, n, first) in counts {
        println!("assumption_flag {kind} count={n} first_step={first}");
    }
}

fn simulate(run: &RunArgs, out: &Path, no_safeguard: bool) -> CmdResult {
    let mut config = load_config(run)?;
    if no_safeguard {
        config.sim.safeguard = false;
    }
    let report = config.rule_report()?;
    if !report.holds() {
        print_rule(&report);
        return Err(infeasible(&report));
    }
    run_and_write(&config, out).map(|_| ())
}

fn toy(mode: Mode, out: &Path, steps: Option<usize>, seed: Option<u64>) -> CmdResult {
    let mut config = RunConfig::toy(mode);
    if let Some(s) = steps {
        config.sim.steps = s;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    println!("mode {mode}");
    let trace = run_and_write(&config, out)?;
    let phis: Vec<f64> = trace.records.iter().map(|r| r.phi).collect();
    let rises = phis.windows(2).filter(|w| w[1] > w[0] && w[0] > 0.0).count();
    let intervened_rises = trace.records.windows(2).filter(|w| w[0].intervened() && w[1].phi > w[0].phi).count();
    let entry = phis.iter().position(|p| *p <= 0.0);
    let later_positive = entry.map_or(0, |e| phis[e..].iter().filter(|p| **p > 0.0).count());
    println!("phi_rises_while_positive {rises}");
    println!("phi_rises_after_intervention {intervened_rises}");
    println!("positives_after_entry {later_positive}");
    if let Some(p) = phis.last() {
        println!("final_phi {p:.6e}");
    }
    Ok(())
}

fn load_verify_context(trace_path: &Path, config: Option<&Path>) -> Result<Sidecar, Failure> {
    let path = config.map(Path::to_path_buf).unwrap_or_else(|| sidecar_path(trace_path));
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    if let Ok(sidecar) = Sidecar::from_json(&text) {
        return Ok(sidecar);
    }
    let config = RunConfig::from_json(&text)?;
    Ok(Sidecar { config, trigger_props: None, failure: None, flags: vec![] })
}

fn verify(trace_path: &Path, config: Option<&Path>) -> CmdResult {
    let ctx = load_verify_context(trace_path, config)?;
    let file = fs::File::open(trace_path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot read {}: {e}", trace_path.display())))?;
    let mut trace = EpisodeTrace::read_csv(file)?;
    trace.failure = ctx.failure.clone();
    trace.flags = ctx.flags.clone();

    let inv = check_forward_invariance(&trace);
    let mut ok = inv.forward_invariant;
    match inv.first_violation_step {
        Some(s) => println!("forward_invariance FAIL violation_step {s}"),
        None => println!("forward_invariance ok"),
    }
    let mut flags = inv.assumption_flags.clone();

    let config = &ctx.config;
    if config.index.mode == Mode::Discrete && config.ctrigger.enabled {
        let props: TriggerProps = match ctx.trigger_props.clone() {
            Some(p) => p,
            None => {
                let model = config.build_model()?;
                config.trigger_props(&model)?.expect("trigger enabled")
            }
        };
        let conv = check_finite_time_convergence(&trace, &config.index.params(), &props, &config.ctrigger.constants);
        let bound = conv.bound_steps.map_or("n/a".to_string(), |b| format!("{b:.3}"));
        let step = conv.convergence_step.map_or("none".to_string(), |s| s.to_string());
        println!("finite_time_convergence {} step {step} bound {bound}", if conv.converged { "ok" } else { "FAIL" });
        ok &= conv.converged;
        for f in conv.assumption_flags {
            if !flags.contains(&f) {
                flags.push(f);
            }
        }
    } else {
        println!("finite_time_convergence skipped (needs discrete mode with the trigger enabled)");
    }
    for f in &trace.flags {
        if !flags.contains(&f.kind) {
            flags.push(f.kind.clone());
        }
    }
    if flags.is_empty() {
        println!("flags none");
    } else {
        println!("flags {}", flags.join(","));
    }
    if ok {
        println!("verified");
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERIFY, "verification failed"))
    }
}

fn parse_state(text: &str) -> Result<RobotState, Failure> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match parts.as_deref() {
        Ok([px, py, theta]) => Ok(RobotState::pose(*px, *py, *theta)),
        Ok([px, py, theta, v]) => Ok(RobotState::new(*px, *py, *theta, *v)),
        _ => Err(Failure::new(EXIT_USAGE, format!("state must be px,py,theta[,v], got {text:?}"))),
    }
}

fn scan(run: &RunArgs, out: &Path, state: Option<&str>, resolution: usize) -> CmdResult {
    let config = load_config(run)?;
    let rt = config.runtime()?;
    let dim = rt.env.model.control_box().dim();
    if dim != 2 {
        return Err(Failure::new(EXIT_NOT_2D, format!("scan needs a 2D control, this model has {dim}")));
    }
    let x = match state {
        Some(s) => parse_state(s)?,
        None => rt.x0,
    };
    let query = rt.env.query(&rt.env.obstacles, &x)?;
    let frac = safe_control_fraction(&query, resolution, config.execution())?;
    let mut text = String::from("u1,u2,delta_phi,status\n");
    for c in &frac.cells {
        let _ = writeln!(text, "{},{},{},{}", c.u1, c.u2, c.delta_phi, c.status);
    }
    write_file(out, text.as_bytes())?;
    println!("state {x}");
    println!("phi {:.6e}", query.phi());
    println!("safe_fraction {:.6}", frac.fraction);
    println!("wrote {}", out.display());
    Ok(())
}

fn bench(run: &RunArgs, out: &Path, n_dirs: &[usize], trials: usize, no_timing: bool) -> CmdResult {
    let config = load_config(run)?;
    let rt = config.runtime()?;
    let p = config.index.params();
    // φ > 0 is only reachable for a non-colliding robot inside this band
    let d_range = match &config.index.family {
        IndexKind::Toy { r, big_r } => (*big_r, big_r + r + config.limits.v_max * config.world_dt()),
        IndexKind::Energy => (p.d_min, p.d_min + p.sigma + p.k * config.limits.v_max),
    };
    let samples = sample_unsafe_states(&rt.env, trials, d_range, config.limits.v_max, config.seed)?;
    let rows = bench_phase1(&rt.env, &samples, &config.issa, n_dirs, config.seed, config.execution(), !no_timing)?;
    let mut text = String::from("n_dirs,success_rate,mean_candidates,mean_queries,wall_ms\n");
    for r in &rows {
        let _ =
            writeln!(text, "{},{},{},{},{}", r.n_dirs, r.success_rate, r.mean_candidates, r.mean_queries, r.wall_ms);
        println!(
            "n_dirs {:>3}  success {:.3}  candidates {:.2}  queries {:.1}  wall_ms {:.1}",
            r.n_dirs, r.success_rate, r.mean_candidates, r.mean_queries, r.wall_ms
        );
    }
    write_file(out, text.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}
