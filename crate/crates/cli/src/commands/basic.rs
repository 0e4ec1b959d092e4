use anyhow::bail;
use headwayrl::agent::{rollout, train as train_agent, CheckpointMeta, Policy};
use headwayrl::od_data::generate_synthetic;
use headwayrl::scalar::Real;
use headwayrl::simulator::evaluate_timetable;

use super::{
    capacity_csv, checkpoint_bin, curve_csv, timetable_csv, trace_jsonl, Context, MetricsReport,
};
use crate::manifest::Artifacts;
use crate::variant::scheme_for;
use crate::{EvalArgs, GenDataArgs, TrainArgs};

pub fn gen_data(args: &GenDataArgs, ctx: &mut Context) -> anyhow::Result<Artifacts> {
    let mut spec = ctx.config.synthetic.clone();
    if let Some(n) = args.passengers {
        spec.passengers = n;
    }
    let demand = generate_synthetic(&spec, ctx.config.seed)?;
    let mut buf = Vec::new();
    demand.write_csv(&mut buf)?;
    log::info!("generated {} passengers", demand.len());
    let mut out = Artifacts::default();
    out.add("demand.csv", buf);
    Ok(out)
}

pub fn train(args: &TrainArgs, ctx: &mut Context) -> anyhow::Result<Artifacts> {
    let (line, tt) = ctx.line()?;
    let demand = ctx.demand(args.demand.as_deref(), &line)?;
    let mut agent = ctx.config.agent.clone();
    if let Some(e) = args.episodes {
        agent.episodes = e;
    }
    let mut scheme = scheme_for(&args.variant, &line)?;
    let reward = ctx.config.reward;
    let outcome = train_agent(&line, &tt, &demand, reward, &mut *scheme, &agent)?;
    let eval = evaluate_timetable(&demand, &line, &tt, &outcome.greedy.timetable)?;
    log::info!(
        "trained {} episodes: nd {} awt {:.3} nsp {}",
        outcome.curve.len(),
        eval.metrics.nd,
        eval.metrics.awt,
        eval.metrics.nsp
    );
    let meta = CheckpointMeta {
        sizes: outcome.network.sizes(),
        activation: "relu".into(),
        scalar: f64::TAG.into(),
        scheme: scheme.name(),
        reward,
        agent: agent.clone(),
        seed: agent.seed,
    };
    let mut out = Artifacts::default();
    out.add("checkpoint.bin", checkpoint_bin(&outcome.network, &meta)?);
    out.add("reward_curve.csv", curve_csv(&outcome.curve)?);
    out.add("timetable.csv", timetable_csv(&outcome.greedy.timetable)?);
    out.add_json("metrics.json", &MetricsReport::from(&eval))?;
    out.add("capacity.csv", capacity_csv(&eval.capacity_series)?);
    out.add("trace.jsonl", trace_jsonl(&outcome.greedy.trace)?);
    Ok(out)
}

pub fn eval(args: &EvalArgs, ctx: &mut Context) -> anyhow::Result<Artifacts> {
    let (line, tt) = ctx.line()?;
    let demand = ctx.demand(args.demand.as_deref(), &line)?;
    let mut out = Artifacts::default();
    let timetable = match (&args.timetable, &args.checkpoint) {
        (Some(path), None) => ctx.timetable(path, &line)?,
        (None, Some(path)) => {
            let (net, meta) = ctx.checkpoint(path)?;
            let mut scheme = scheme_for(&meta.scheme, &line)?;
            if scheme.state_dim(&line) != net.input_dim() {
                bail!(
                    "checkpoint expects {} inputs, scheme {} on this line gives {}",
                    net.input_dim(),
                    meta.scheme,
                    scheme.state_dim(&line)
                );
            }
            let r = rollout(
                &net,
                &line,
                &tt,
                &demand,
                meta.reward,
                &mut *scheme,
                Policy::Greedy,
                ctx.config.seed,
            )?;
            out.add("trace.jsonl", trace_jsonl(&r.trace)?);
            r.timetable
        }
        _ => bail!("eval needs exactly one of --timetable or --checkpoint"),
    };
    let eval = evaluate_timetable(&demand, &line, &tt, &timetable)?;
    out.add_json("metrics.json", &MetricsReport::from(&eval))?;
    out.add("capacity.csv", capacity_csv(&eval.capacity_series)?);
    out.add("timetable.csv", timetable_csv(&timetable)?);
    Ok(out)
}
