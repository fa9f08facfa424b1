//! Episode traces and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::issa::Phase;
use crate::model::{ControlVector, RobotState};
use crate::safety_index::SafetyStatus;
use crate::{Error, Result};

/// Column order of the trace CSV.
pub const TRACE_COLUMNS: [&str; 15] = [
    "t",
    "px",
    "py",
    "theta",
    "v",
    "u_nom_0",
    "u_nom_1",
    "u_app_0",
    "u_app_1",
    "phi",
    "phi0",
    "nominal_status",
    "phase",
    "trigger_fired",
    "queries",
];

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// State at the start of the step.
    pub state: RobotState,
    pub u_nominal: ControlVector,
    pub u_applied: ControlVector,
    pub phi: f64,
    pub phi0: f64,
    pub nominal_status: SafetyStatus,
    pub phase: Phase,
    pub trigger_fired: bool,
    /// Dynamics evaluations spent on this step by the safeguard stack.
    pub queries: usize,
}

impl StepRecord {
    pub fn intervened(&self) -> bool {
        self.phase != Phase::PassThrough || self.trigger_fired
    }
}

/// Non-fatal observation that a modelling assumption did not hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionFlag {
    pub step: usize,
    pub kind: String,
}

/// Why an episode stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFailure {
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub records: Vec<StepRecord>,
    /// State after the last recorded step.
    pub final_state: Option<RobotState>,
    pub failure: Option<EpisodeFailure>,
    pub flags: Vec<AssumptionFlag>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    t: usize,
    px: f64,
    py: f64,
    theta: f64,
    v: f64,
    u_nom_0: f64,
    u_nom_1: f64,
    u_app_0: f64,
    u_app_1: f64,
    phi: f64,
    phi0: f64,
    nominal_status: SafetyStatus,
    phase: Phase,
    trigger_fired: bool,
    queries: usize,
}

fn two(u: &ControlVector) -> Result<(f64, f64)> {
    match u.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Trace(format!("trace rows hold 2D controls, got {} components", u.dim()))),
    }
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn interventions(&self) -> usize {
        self.records.iter().filter(|r| r.intervened()).count()
    }

    pub fn max_phi0(&self) -> Option<f64> {
        self.records.iter().map(|r| r.phi0).reduce(f64::max)
    }

    pub fn total_queries(&self) -> usize {
        self.records.iter().map(|r| r.queries).sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        let io = |e: csv::Error| Error::Trace(e.to_string());
        wr.write_record(TRACE_COLUMNS).map_err(io)?;
        for r in &self.records {
            let (n0, n1) = two(&r.u_nominal)?;
            let (a0, a1) = two(&r.u_applied)?;
            wr.serialize(Row {
                t: r.t,
                px: r.state.px,
                py: r.state.py,
                theta: r.state.theta,
                v: r.state.v,
                u_nom_0: n0,
                u_nom_1: n1,
                u_app_0: a0,
                u_app_1: a1,
                phi: r.phi,
                phi0: r.phi0,
                nominal_status: r.nominal_status,
                phase: r.phase,
                trigger_fired: r.trigger_fired,
                queries: r.queries,
            })
            .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Trace(e.to_string()))
    }

    /// Parses a trace CSV. The header must match [`TRACE_COLUMNS`] exactly.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rd.headers().map_err(|e| Error::Trace(e.to_string()))?;
        if header.iter().ne(TRACE_COLUMNS.iter().copied()) {
            return Err(Error::Trace(format!(
                "unexpected trace header {:?}, expected {:?}",
                header.iter().collect::<Vec<_>>(),
                TRACE_COLUMNS
            )));
        }
        let mut records = Vec::new();
        for (i, row) in rd.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Trace(format!("row {}: {e}", i + 1)))?;
            if row.t != records.len() {
                return Err(Error::Trace(format!("row {}: step index {} out of sequence", i + 1, row.t)));
            }
            records.push(StepRecord {
                t: row.t,
                state: RobotState { px: row.px, py: row.py, theta: row.theta, v: row.v },
                u_nominal: ControlVector(vec![row.u_nom_0, row.u_nom_1]),
                u_applied: ControlVector(vec![row.u_app_0, row.u_app_1]),
                phi: row.phi,
                phi0: row.phi0,
                nominal_status: row.nominal_status,
                phase: row.phase,
                trigger_fired: row.trigger_fired,
                queries: row.queries,
            });
        }
        Ok(Self { records, ..Self::default() })
    }
}
