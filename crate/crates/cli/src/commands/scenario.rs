use anyhow::{bail, Context as _};
use headwayrl::agent::{rollout, train, CheckpointMeta, Policy};
use headwayrl::baselines::{ga_optimize, memetic_optimize, write_fitness_trace, SearchOutcome};
use headwayrl::env::StandardScheme;
use headwayrl::od_data::{resample, shift_peak};
use headwayrl::scalar::Real;
use headwayrl::simulator::{evaluate_timetable, Metrics};
use headwayrl::{DemandSet, RewardParams, Timetable, ValueNetwork};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{checkpoint_bin, rows_csv, timetable_csv, Context};
use crate::manifest::Artifacts;
use crate::variant::scheme_for;
use crate::{Method, ScenarioArgs, Transform};

/// One (setting, method) cell of the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub transform: String,
    pub value: f64,
    pub method: String,
    pub nd: usize,
    pub awt: f64,
    pub nsp: u64,
    pub unserved: usize,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Dqn => "dqn",
        Method::Ga => "ga",
        Method::Memetic => "memetic",
        Method::Manual => "manual",
    }
}

struct Controller {
    net: ValueNetwork,
    scheme: String,
    reward: RewardParams,
}

pub fn scenario(args: &ScenarioArgs, ctx: &mut Context) -> anyhow::Result<Artifacts> {
    let (line, tt) = ctx.line()?;
    let base = ctx.demand(args.demand.as_deref(), &line)?;
    let cfg = ctx.config.clone();
    let (tag, values) = match args.transform {
        Transform::Shift => (
            "shift",
            if args.values.is_empty() {
                cfg.scenario.shifts.clone()
            } else {
                args.values.clone()
            },
        ),
        Transform::Sample => (
            "sample",
            if args.values.is_empty() {
                cfg.scenario.rates.clone()
            } else {
                args.values.clone()
            },
        ),
    };
    if values.is_empty() {
        bail!("no {tag} values given");
    }
    let mut methods: Vec<Method> = Vec::new();
    for &m in &args.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let mut out = Artifacts::default();

    let mut fixed: Vec<(Method, Timetable)> = Vec::new();
    let mut controller = None;
    for &m in &methods {
        match m {
            Method::Ga | Method::Memetic => {
                let search: fn(_, _, _, _, _) -> _ = if m == Method::Ga {
                    ga_optimize
                } else {
                    memetic_optimize
                };
                let SearchOutcome {
                    timetable,
                    fitness,
                    trace,
                    ..
                } = search(&base, &line, &tt, &cfg.ga, &cfg.fitness)?;
                log::info!(
                    "{} fitness {fitness:.3} with {} departures",
                    method_name(m),
                    timetable.len()
                );
                let mut buf = Vec::new();
                write_fitness_trace(&trace, &mut buf)?;
                out.add(format!("fitness_{}.csv", method_name(m)), buf);
                out.add(
                    format!("timetable_{}.csv", method_name(m)),
                    timetable_csv(&timetable)?,
                );
                fixed.push((m, timetable));
            }
            Method::Manual => {
                let path = args
                    .manual
                    .as_deref()
                    .context("method manual needs --manual <timetable CSV>")?;
                fixed.push((m, ctx.timetable(path, &line)?));
            }
            Method::Dqn => {
                controller = Some(match &args.checkpoint {
                    Some(path) => {
                        let (net, meta) = ctx.checkpoint(path)?;
                        Controller {
                            net,
                            scheme: meta.scheme,
                            reward: meta.reward,
                        }
                    }
                    None => {
                        let mut scheme = StandardScheme::default();
                        let trained =
                            train(&line, &tt, &base, cfg.reward, &mut scheme, &cfg.agent)?;
                        let meta = CheckpointMeta {
                            sizes: trained.network.sizes(),
                            activation: "relu".into(),
                            scalar: f64::TAG.into(),
                            scheme: "s_m".into(),
                            reward: cfg.reward,
                            agent: cfg.agent.clone(),
                            seed: cfg.agent.seed,
                        };
                        out.add("checkpoint.bin", checkpoint_bin(&trained.network, &meta)?);
                        Controller {
                            net: trained.network,
                            scheme: meta.scheme,
                            reward: cfg.reward,
                        }
                    }
                });
            }
        }
    }

    let window = cfg.scenario.shift_window;
    let demands: Vec<DemandSet> = values
        .par_iter()
        .map(|&v| match args.transform {
            Transform::Shift => shift_peak(&base, window, v),
            Transform::Sample => resample(&base, v, cfg.seed),
        })
        .collect::<Result<_, _>>()?;

    let cells: Vec<Vec<ScenarioRow>> = values
        .par_iter()
        .zip(&demands)
        .map(|(&v, d)| -> anyhow::Result<Vec<ScenarioRow>> {
            let mut rows = Vec::new();
            for &m in &methods {
                let metrics: Metrics = match m {
                    Method::Dqn => {
                        let c = controller.as_ref().expect("trained above");
                        let mut scheme = scheme_for(&c.scheme, &line)?;
                        rollout(
                            &c.net,
                            &line,
                            &tt,
                            d,
                            c.reward,
                            &mut *scheme,
                            Policy::Greedy,
                            cfg.seed,
                        )?
                        .metrics
                    }
                    _ => {
                        let t = &fixed
                            .iter()
                            .find(|(f, _)| *f == m)
                            .expect("optimized above")
                            .1;
                        evaluate_timetable(d, &line, &tt, t)?.metrics
                    }
                };
                rows.push(ScenarioRow {
                    transform: tag.into(),
                    value: v,
                    method: method_name(m).into(),
                    nd: metrics.nd,
                    awt: metrics.awt,
                    nsp: metrics.nsp,
                    unserved: metrics.unserved,
                });
            }
            Ok(rows)
        })
        .collect::<anyhow::Result<_>>()?;
    let rows: Vec<ScenarioRow> = cells.into_iter().flatten().collect();

    out.add(
        format!("scenario_{tag}.csv"),
        rows_csv(
            &[
                "transform",
                "value",
                "method",
                "nd",
                "awt",
                "nsp",
                "unserved",
            ],
            &rows,
        )?,
    );
    out.add(
        format!("table_{tag}.csv"),
        layout(&values, &methods, &rows)?,
    );
    Ok(out)
}

/// Methods × metrics down, settings across.
fn layout(values: &[f64], methods: &[Method], rows: &[ScenarioRow]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["method".to_string(), "metric".to_string()];
    header.extend(values.iter().map(|v| v.to_string()));
    w.write_record(&header)?;
    for &m in methods {
        let name = method_name(m);
        for metric in ["nd", "awt", "nsp"] {
            let mut rec = vec![name.to_string(), metric.to_string()];
            for &v in values {
                let r = rows
                    .iter()
                    .find(|r| r.method == name && r.value == v)
                    .expect("one row per cell");
                rec.push(match metric {
                    "nd" => r.nd.to_string(),
                    "awt" => format!("{:.3}", r.awt),
                    _ => r.nsp.to_string(),
                });
            }
            w.write_record(&rec)?;
        }
    }
    Ok(w.into_inner()?)
}
