use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{repair, Chromosome, FitnessWeights};
use crate::line_model::{LineConfig, Minute, TravelTimeTable};
use crate::od_data::DemandSet;
use crate::simulator::Timetable;
use crate::{Error, Result};

/// GA settings. `ls_budget` only affects [`memetic_optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament: usize,
    pub ls_budget: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 40,
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.002,
            tournament: 2,
            ls_budget: 60,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config("GA population must be at least 2".into()));
        }
        if self.tournament == 0 {
            return Err(Error::Config("tournament size must be positive".into()));
        }
        for (name, p) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// One fitness-trace line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub timetable: Timetable,
    pub fitness: f64,
    /// Row 0 is the initial population.
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

struct Problem<'a> {
    demand: &'a DemandSet,
    line: &'a LineConfig,
    tt: &'a TravelTimeTable,
    weights: &'a FitnessWeights,
}

impl Problem<'_> {
    fn eval(&self, c: &Chromosome) -> f64 {
        super::fitness(c, self.demand, self.line, self.tt, self.weights)
            .expect("validated inputs simulate without error")
    }

    fn eval_all(&self, pop: &[Chromosome]) -> Vec<f64> {
        pop.par_iter().map(|c| self.eval(c)).collect()
    }
}

/// Genetic search over departure vectors.
///
/// Tournament selection, single-point crossover, per-bit flip mutation and
/// repair after every operator; the best individual survives unchanged.
pub fn ga_optimize(
    demand: &DemandSet,
    line: &LineConfig,
    tt: &TravelTimeTable,
    params: &GaParams,
    weights: &FitnessWeights,
) -> Result<SearchOutcome> {
    search(demand, line, tt, params, weights, 0)
}

/// [`ga_optimize`] plus a hill climb on an elite archive after every generation,
/// spending at most `params.ls_budget` evaluations per generation.
///
/// The archive takes the population elite whenever it is better but never
/// feeds back into the population, so the GA part follows the same draws as
/// [`ga_optimize`] and the result is never worse for the same seed.
pub fn memetic_optimize(
    demand: &DemandSet,
    line: &LineConfig,
    tt: &TravelTimeTable,
    params: &GaParams,
    weights: &FitnessWeights,
) -> Result<SearchOutcome> {
    search(demand, line, tt, params, weights, params.ls_budget)
}

fn search(
    demand: &DemandSet,
    line: &LineConfig,
    tt: &TravelTimeTable,
    params: &GaParams,
    weights: &FitnessWeights,
    ls_budget: usize,
) -> Result<SearchOutcome> {
    params.validate()?;
    line.validate()?;
    if line.min_interval > line.window() {
        return Err(Error::Config(format!(
            "minimum interval {} exceeds the service window of {} minutes",
            line.min_interval,
            line.window()
        )));
    }
    demand.check_stations(line.stations)?;
    tt.check_no_overtaking(line.service_start, line.service_end)?;
    let problem = Problem {
        demand,
        line,
        tt,
        weights,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut pop: Vec<Chromosome> = (0..params.population)
        .map(|_| random_feasible(line, &mut rng))
        .collect();
    let mut fit = problem.eval_all(&pop);
    let mut evaluations = pop.len();
    // memetic archive, climbed beside the population so the GA draws are unchanged
    let first = argmin(&fit);
    let mut archive = (pop[first].clone(), fit[first]);
    let mut archive_settled = false;
    let mut trace = vec![trace_row(0, &fit)];

    for generation in 1..=params.generations {
        let elite = argmin(&fit);
        let mut next = Vec::with_capacity(params.population);
        next.push(pop[elite].clone());
        while next.len() < params.population {
            let a = tournament(&fit, params.tournament, &mut rng);
            let b = tournament(&fit, params.tournament, &mut rng);
            let (mut c1, mut c2) = (pop[a].clone(), pop[b].clone());
            if rng.random_bool(params.crossover_rate) {
                let cut = rng.random_range(1..c1.len());
                c1.bits_mut()[cut..].swap_with_slice(&mut c2.bits_mut()[cut..]);
                c1 = repair(&c1, line);
                c2 = repair(&c2, line);
            }
            for c in [&mut c1, &mut c2] {
                mutate(c, params.mutation_rate, &mut rng);
                *c = repair(c, line);
            }
            next.push(c1);
            if next.len() < params.population {
                next.push(c2);
            }
        }
        let mut next_fit = Vec::with_capacity(params.population);
        next_fit.push(fit[elite]);
        next_fit.extend(problem.eval_all(&next[1..]));
        evaluations += next.len() - 1;
        pop = next;
        fit = next_fit;
        let mut row = trace_row(generation, &fit);
        if ls_budget > 0 {
            let elite = argmin(&fit);
            if fit[elite] < archive.1 {
                archive = (pop[elite].clone(), fit[elite]);
                archive_settled = false;
            }
            if !archive_settled {
                let (improved, f, used) = hill_climb(&problem, &archive.0, archive.1, ls_budget);
                archive_settled = used < ls_budget;
                archive = (improved, f);
                evaluations += used;
            }
            row.best = row.best.min(archive.1);
        }
        trace.push(row);
    }

    let best = argmin(&fit);
    let (chrom, fitness) = if ls_budget > 0 && archive.1 < fit[best] {
        archive
    } else {
        (pop[best].clone(), fit[best])
    };
    Ok(SearchOutcome {
        timetable: chrom.to_timetable(),
        fitness,
        trace,
        evaluations,
    })
}

fn trace_row(generation: usize, fit: &[f64]) -> TraceRow {
    TraceRow {
        generation,
        best: fit.iter().copied().fold(f64::INFINITY, f64::min),
        mean: fit.iter().sum::<f64>() / fit.len() as f64,
    }
}

fn argmin(fit: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fit.iter().enumerate() {
        if f < fit[best] {
            best = i;
        }
    }
    best
}

fn tournament<R: Rng>(fit: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..size {
        let c = rng.random_range(0..fit.len());
        if fit[c] < fit[best] {
            best = c;
        }
    }
    best
}

fn mutate<R: Rng>(c: &mut Chromosome, rate: f64, rng: &mut R) {
    if rate == 0.0 {
        return;
    }
    for b in c.bits_mut() {
        if rng.random_bool(rate) {
            *b = !*b;
        }
    }
    c.pin_endpoints();
}

/// Headways scattered ±2 minutes around a per-individual typical headway
/// drawn from `[T_min, T_max]`, then repaired.
fn random_feasible<R: Rng>(line: &LineConfig, rng: &mut R) -> Chromosome {
    let (lo, hi) = (line.min_interval, line.max_interval);
    let centre = rng.random_range(lo..=hi);
    let (a, b) = (centre.saturating_sub(2).max(lo), (centre + 2).min(hi));
    let mut deps = Vec::new();
    let mut m = line.service_start;
    loop {
        m += rng.random_range(a..=b);
        if m >= line.service_end {
            break;
        }
        deps.push(m);
    }
    let c = Chromosome::from_departures(line, &deps).expect("departures inside the window");
    repair(&c, line)
}

/// First-improvement hill climb over ±1 shifts, removals and midpoint insertions.
/// Returns the final individual, its fitness and the evaluations spent.
fn hill_climb(
    problem: &Problem<'_>,
    start: &Chromosome,
    start_fit: f64,
    budget: usize,
) -> (Chromosome, f64, usize) {
    let line = problem.line;
    let mut cur = start.clone();
    let mut cur_fit = start_fit;
    let mut used = 0;
    'outer: while used < budget {
        for cand in neighbours(&cur, line) {
            if used >= budget {
                break 'outer;
            }
            let f = problem.eval(&cand);
            used += 1;
            if f < cur_fit {
                cur = cand;
                cur_fit = f;
                continue 'outer;
            }
        }
        break;
    }
    (cur, cur_fit, used)
}

/// Feasible neighbours of `c` in a fixed order, without duplicates of `c`.
fn neighbours(c: &Chromosome, line: &LineConfig) -> Vec<Chromosome> {
    let deps = c.departures();
    let n = deps.len();
    let mut out: Vec<Chromosome> = Vec::new();
    let mut push = |cand: Vec<Minute>| {
        if let Ok(ch) = Chromosome::from_departures(line, &cand) {
            if ch.bits() != c.bits()
                && ch.to_timetable().validate_for(line).is_ok()
                && !out.contains(&ch)
            {
                out.push(ch);
            }
        }
    };
    for i in 1..n.saturating_sub(1) {
        for d in [-1i64, 1] {
            let mut cand = deps.clone();
            cand[i] = (i64::from(cand[i]) + d) as Minute;
            push(cand);
        }
    }
    for i in 1..n.saturating_sub(1) {
        let mut cand = deps.clone();
        cand.remove(i);
        push(cand);
    }
    for w in deps.windows(2) {
        if w[1] - w[0] >= 2 * line.min_interval {
            let mut cand = deps.clone();
            cand.push(w[0] + (w[1] - w[0]) / 2);
            cand.sort_unstable();
            push(cand);
        }
    }
    out
}

/// Writes the fitness trace CSV (`generation,best,mean`).
pub fn write_fitness_trace<W: Write>(trace: &[TraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
