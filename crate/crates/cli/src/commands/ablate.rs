use anyhow::bail;
use headwayrl::agent::{train, EpisodeStats};
use headwayrl::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{curve_csv, Context};
use crate::manifest::Artifacts;
use crate::variant::scheme_for;
use crate::AblateArgs;

pub const ABLATION_TABLE_FILE: &str = "ablation_table.csv";

/// Statistics over the trailing training episodes of one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub variant: String,
    pub reward_max: f64,
    pub reward_min: f64,
    pub reward_variance: f64,
    pub nd_max: usize,
    pub nd_min: usize,
    pub nd_mode: usize,
    pub nd_variance: f64,
}

impl TailStats {
    pub fn from_curve(variant: &str, curve: &[EpisodeStats], tail: usize) -> Self {
        let tail = &curve[curve.len().saturating_sub(tail)..];
        let r: Vec<f64> = tail.iter().map(|e| e.mean_reward).collect();
        let nd: Vec<usize> = tail.iter().map(|e| e.nd).collect();
        let ndf: Vec<f64> = nd.iter().map(|&n| n as f64).collect();
        Self {
            variant: variant.into(),
            reward_max: stats::max(&r),
            reward_min: stats::min(&r),
            reward_variance: stats::variance(&r),
            nd_max: nd.iter().copied().max().unwrap_or(0),
            nd_min: nd.iter().copied().min().unwrap_or(0),
            nd_mode: stats::mode(&nd).unwrap_or(0),
            nd_variance: stats::variance(&ndf),
        }
    }
}

pub fn ablate(args: &AblateArgs, ctx: &mut Context) -> anyhow::Result<Artifacts> {
    let (line, tt) = ctx.line()?;
    let demand = ctx.demand(args.demand.as_deref(), &line)?;
    let cfg = ctx.config.clone();
    let variants = if args.variants.is_empty() {
        cfg.ablate.variants.clone()
    } else {
        args.variants.clone()
    };
    if variants.is_empty() {
        bail!("no variants given");
    }
    // fail on a bad tag before any training starts
    for v in &variants {
        scheme_for(v, &line)?;
    }
    let results: Vec<(String, Vec<EpisodeStats>)> = variants
        .par_iter()
        .map(|v| -> anyhow::Result<_> {
            let mut scheme = scheme_for(v, &line)?;
            let out = train(&line, &tt, &demand, cfg.reward, &mut *scheme, &cfg.agent)?;
            log::info!(
                "{v}: {} episodes, greedy nd {}",
                out.curve.len(),
                out.greedy.metrics.nd
            );
            Ok((scheme.name(), out.curve))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut out = Artifacts::default();
    let mut table = Vec::new();
    for (name, curve) in &results {
        out.add(
            format!("reward_curve_{}.csv", slug(name)),
            curve_csv(curve)?,
        );
        table.push(TailStats::from_curve(name, curve, cfg.ablate.tail));
    }
    out.add(ABLATION_TABLE_FILE, layout(&table)?);
    Ok(out)
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Statistic rows down, variants across.
fn layout(table: &[TailStats]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric".to_string(), "statistic".to_string()];
    header.extend(table.iter().map(|t| t.variant.clone()));
    w.write_record(&header)?;
    type Cell = fn(&TailStats) -> String;
    let rows: [(&str, &str, Cell); 7] = [
        ("mean_reward", "max", |t| t.reward_max.to_string()),
        ("mean_reward", "min", |t| t.reward_min.to_string()),
        ("mean_reward", "variance", |t| t.reward_variance.to_string()),
        ("nd", "max", |t| t.nd_max.to_string()),
        ("nd", "min", |t| t.nd_min.to_string()),
        ("nd", "mode", |t| t.nd_mode.to_string()),
        ("nd", "variance", |t| t.nd_variance.to_string()),
    ];
    for (metric, stat, cell) in rows {
        let mut rec = vec![metric.to_string(), stat.to_string()];
        rec.extend(table.iter().map(cell));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}
