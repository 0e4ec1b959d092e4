//! Subcommand implementations. Each returns the files it wants written.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context as _};
use headwayrl::agent::{
    read_checkpoint, write_checkpoint, write_reward_curve, CheckpointMeta, EpisodeStats,
};
use headwayrl::env::TraceRecord;
use headwayrl::line_model::{LineConfig, TravelTimeTable};
use headwayrl::simulator::{CapacityBucket, Evaluation};
use headwayrl::{DemandSet, Timetable, ValueNetwork};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::{file_digest, Artifacts};
use crate::Command;

mod ablate;
mod basic;
mod scenario;
mod sweep;

pub use ablate::{TailStats, ABLATION_TABLE_FILE};
pub use scenario::ScenarioRow;
pub use sweep::{parse_value, SweepRun, SweepSummary};

/// Per-command state: the resolved config and digests of files read so far.
pub struct Context {
    pub config: RunConfig,
    pub inputs: BTreeMap<String, String>,
}

impl Context {
    pub fn new(config: RunConfig) -> Self {
        let mut ctx = Self {
            config,
            inputs: BTreeMap::new(),
        };
        for p in ctx.config.input_files() {
            // a missing file surfaces later with a better message
            let _ = ctx.record(&p);
        }
        ctx
    }

    /// Records the digest of an input file.
    pub fn record(&mut self, path: &Path) -> anyhow::Result<()> {
        let d = file_digest(path)?;
        self.inputs.insert(path.display().to_string(), d);
        Ok(())
    }

    pub fn line(&self) -> anyhow::Result<(LineConfig, TravelTimeTable)> {
        self.config.line()
    }

    pub fn demand(&mut self, flag: Option<&Path>, line: &LineConfig) -> anyhow::Result<DemandSet> {
        if let Some(p) = flag {
            self.record(p)?;
        }
        self.config.demand(flag, line)
    }

    pub fn timetable(&mut self, path: &Path, line: &LineConfig) -> anyhow::Result<Timetable> {
        self.record(path)?;
        let t = Timetable::load(path)
            .with_context(|| format!("loading timetable {}", path.display()))?;
        t.validate_for(line)
            .with_context(|| format!("timetable {}", path.display()))?;
        Ok(t)
    }

    pub fn checkpoint(&mut self, path: &Path) -> anyhow::Result<(ValueNetwork, CheckpointMeta)> {
        self.record(path)?;
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        read_checkpoint(bytes.as_slice())
            .with_context(|| format!("loading checkpoint {}", path.display()))
    }
}

pub fn dispatch(command: &Command, ctx: &mut Context) -> anyhow::Result<Artifacts> {
    match command {
        Command::GenData(a) => basic::gen_data(a, ctx),
        Command::Train(a) => basic::train(a, ctx),
        Command::Eval(a) => basic::eval(a, ctx),
        Command::Scenario(a) => scenario::scenario(a, ctx),
        Command::Sweep(a) => sweep::sweep(a, ctx),
        Command::Ablate(a) => ablate::ablate(a, ctx),
        Command::Rerun(_) => bail!("rerun cannot be nested"),
    }
}

/// `metrics.json`: ND/AWT/NSP/unserved plus the half-hour capacity series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub nd: usize,
    pub awt: f64,
    pub nsp: u64,
    pub unserved: usize,
    pub served: usize,
    pub total_wait: f64,
    pub capacity_series: Vec<CapacityBucket>,
}

impl From<&Evaluation> for MetricsReport {
    fn from(e: &Evaluation) -> Self {
        let m = &e.metrics;
        Self {
            nd: m.nd,
            awt: m.awt,
            nsp: m.nsp,
            unserved: m.unserved,
            served: m.served,
            total_wait: m.total_wait,
            capacity_series: e.capacity_series.clone(),
        }
    }
}

pub(crate) fn timetable_csv(t: &Timetable) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    Ok(buf)
}

pub(crate) fn curve_csv(curve: &[EpisodeStats]) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_reward_curve(curve, &mut buf)?;
    Ok(buf)
}

pub(crate) fn trace_jsonl(trace: &[TraceRecord]) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    for r in trace {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

pub(crate) fn capacity_csv(series: &[CapacityBucket]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for b in series {
        w.serialize(b)?;
    }
    Ok(w.into_inner()?)
}

pub(crate) fn checkpoint_bin(net: &ValueNetwork, meta: &CheckpointMeta) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, net, meta)?;
    Ok(buf)
}

/// Rows serialized with a header (written even when `rows` is empty).
pub(crate) fn rows_csv<T: Serialize>(header: &[&str], rows: &[T]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}
