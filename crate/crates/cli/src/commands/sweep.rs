use anyhow::{bail, Context as _};
use headwayrl::agent::train;
use headwayrl::env::StandardScheme;
use headwayrl::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rows_csv, Context};
use crate::manifest::Artifacts;
use crate::{SweepArgs, SweepParam};

/// Parses `0.002`, `1/500` or `0`.
pub fn parse_value(s: &str) -> anyhow::Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n
                .trim()
                .parse()
                .with_context(|| format!("bad numerator in {s:?}"))?;
            let d: f64 = d
                .trim()
                .parse()
                .with_context(|| format!("bad denominator in {s:?}"))?;
            if d == 0.0 {
                bail!("zero denominator in {s:?}");
            }
            n / d
        }
        None => s.parse().with_context(|| format!("bad value {s:?}"))?,
    };
    if !v.is_finite() {
        bail!("value {s:?} is not finite");
    }
    Ok(v)
}

/// One training run of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: f64,
    pub repeat: usize,
    pub nd: usize,
    pub awt: f64,
    pub nsp: u64,
    pub mean_reward: f64,
    /// Standard deviation of ND over the trailing training episodes.
    pub nd_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TableRow {
    value: f64,
    nd_max: usize,
    nd_min: usize,
    nd_mode: usize,
    awt_max: f64,
    awt_min: f64,
    awt_average: f64,
    nd_std: f64,
}

/// Rank correlations of the greedy ND and AWT with the swept value over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub param: String,
    pub values: Vec<f64>,
    pub repeats: usize,
    pub spearman_nd: Option<f64>,
    pub spearman_awt: Option<f64>,
}

pub fn sweep(args: &SweepArgs, ctx: &mut Context) -> anyhow::Result<Artifacts> {
    let (line, tt) = ctx.line()?;
    let demand = ctx.demand(args.demand.as_deref(), &line)?;
    let cfg = ctx.config.clone();
    let name = match args.param {
        SweepParam::Omega => "omega",
        SweepParam::Gamma => "gamma",
    };
    let values: Vec<f64> = if args.values.is_empty() {
        match args.param {
            SweepParam::Omega => cfg.sweep.omegas.clone(),
            SweepParam::Gamma => cfg.sweep.gammas.clone(),
        }
    } else {
        args.values
            .iter()
            .map(|s| parse_value(s))
            .collect::<anyhow::Result<_>>()?
    };
    if values.is_empty() {
        bail!("no sweep values");
    }
    let repeats = args.repeats.unwrap_or(cfg.sweep.repeats);
    if repeats == 0 {
        bail!("repeats must be positive");
    }
    let tail = cfg.sweep.tail;

    let cells: Vec<(f64, usize)> = values
        .iter()
        .flat_map(|&v| (0..repeats).map(move |r| (v, r)))
        .collect();
    let runs: Vec<SweepRun> = cells
        .par_iter()
        .map(|&(value, repeat)| -> anyhow::Result<SweepRun> {
            let mut agent = cfg.agent.clone();
            agent.seed = cfg.seed.wrapping_add(repeat as u64);
            let mut reward = cfg.reward;
            match args.param {
                SweepParam::Omega => reward.omega = value,
                SweepParam::Gamma => agent.gamma = value,
            }
            let out = train(
                &line,
                &tt,
                &demand,
                reward,
                &mut StandardScheme::default(),
                &agent,
            )?;
            let from = out.curve.len().saturating_sub(tail);
            let nds: Vec<f64> = out.curve[from..].iter().map(|e| e.nd as f64).collect();
            log::info!(
                "{name}={value} repeat {repeat}: nd {} awt {:.3}",
                out.greedy.metrics.nd,
                out.greedy.metrics.awt
            );
            Ok(SweepRun {
                value,
                repeat,
                nd: out.greedy.metrics.nd,
                awt: out.greedy.metrics.awt,
                nsp: out.greedy.metrics.nsp,
                mean_reward: out.greedy.mean_reward,
                nd_std: stats::std_dev(&nds),
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let table: Vec<TableRow> = values
        .iter()
        .map(|&v| {
            let group: Vec<&SweepRun> = runs.iter().filter(|r| r.value == v).collect();
            let nd: Vec<usize> = group.iter().map(|r| r.nd).collect();
            let awt: Vec<f64> = group.iter().map(|r| r.awt).collect();
            let sd: Vec<f64> = group.iter().map(|r| r.nd_std).collect();
            TableRow {
                value: v,
                nd_max: nd.iter().copied().max().unwrap_or(0),
                nd_min: nd.iter().copied().min().unwrap_or(0),
                nd_mode: stats::mode(&nd).unwrap_or(0),
                awt_max: stats::max(&awt),
                awt_min: stats::min(&awt),
                awt_average: stats::mean(&awt),
                nd_std: stats::mean(&sd),
            }
        })
        .collect();

    let xs: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let finite = |x: f64| x.is_finite().then_some(x);
    let summary = SweepSummary {
        param: name.into(),
        values: values.clone(),
        repeats,
        spearman_nd: finite(stats::spearman(
            &xs,
            &runs.iter().map(|r| r.nd as f64).collect::<Vec<_>>(),
        )),
        spearman_awt: finite(stats::spearman(
            &xs,
            &runs.iter().map(|r| r.awt).collect::<Vec<_>>(),
        )),
    };

    let mut out = Artifacts::default();
    out.add(
        format!("sweep_{name}_runs.csv"),
        rows_csv(
            &[name, "repeat", "nd", "awt", "nsp", "mean_reward", "nd_std"],
            &runs,
        )?,
    );
    out.add(
        format!("sweep_{name}.csv"),
        rows_csv(
            &[
                name,
                "nd_max",
                "nd_min",
                "nd_mode",
                "awt_max",
                "awt_min",
                "awt_average",
                "nd_std",
            ],
            &table,
        )?,
    );
    out.add_json(format!("sweep_{name}_summary.json"), &summary)?;
    Ok(out)
}
