use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use headwayrl::baselines::{
    fitness, ga_optimize, memetic_optimize, Chromosome, FitnessWeights, GaParams,
};
use headwayrl::line_model::{Minute, TravelTimeTable};
use headwayrl::{DemandSet, LineConfig, PassengerRecord};

fn demand(seed: u64, n: usize, end: f64, stations: u32) -> DemandSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|i| {
            // bunch arrivals around the middle of the window
            let t = if rng.random_bool(0.6) {
                (end / 2.0 + rng.random_range(-end / 8.0..end / 8.0)).max(0.0)
            } else {
                rng.random_range(0.0..end)
            };
            let o = rng.random_range(1..stations);
            let d = rng.random_range(o + 1..=stations);
            PassengerRecord::new(format!("p{i}"), t, o, d)
        })
        .collect();
    DemandSet::new(records).unwrap()
}

/// Feasible when every headway is at most `hi` and at least `lo`, the last one excepted.
fn feasible(deps: &[Minute], lo: Minute, hi: Minute) -> bool {
    let gaps: Vec<Minute> = deps.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.iter().all(|&g| g <= hi) && gaps.iter().rev().skip(1).all(|&g| g >= lo)
}

#[test]
fn ga_is_within_five_percent_of_exhaustive_optimum() {
    let line = LineConfig::new(4, 0, 13)
        .with_intervals(2, 5)
        .with_capacity(3, 4);
    let tt = TravelTimeTable::constant(4, 1.0).unwrap();
    let weights = FitnessWeights::default();
    for instance in 0..5u64 {
        let d = demand(instance, 40, 13.0, 4);
        let mut best = f64::INFINITY;
        let mut count = 0;
        for mask in 0u32..1 << 12 {
            let deps: Vec<Minute> = std::iter::once(0)
                .chain((1..=12).filter(|i| mask >> (i - 1) & 1 == 1))
                .chain(std::iter::once(13))
                .collect();
            if !feasible(&deps, 2, 5) {
                continue;
            }
            count += 1;
            let c = Chromosome::from_departures(&line, &deps).unwrap();
            best = best.min(fitness(&c, &d, &line, &tt, &weights).unwrap());
        }
        assert!(count > 10);
        let params = GaParams {
            population: 20,
            generations: 30,
            mutation_rate: 1.0 / 14.0,
            seed: instance,
            ..GaParams::default()
        };
        let out = ga_optimize(&d, &line, &tt, &params, &weights).unwrap();
        assert!(feasible(out.timetable.departures(), 2, 5));
        assert!(out.fitness >= best - 1e-9, "GA beat the exhaustive optimum");
        assert!(
            out.fitness <= best * 1.05,
            "instance {instance}: GA {} optimum {best}",
            out.fitness
        );
    }
}

#[test]
fn memetic_never_worse_than_ga_on_paired_seeds() {
    let line = LineConfig::new(6, 0, 180)
        .with_intervals(3, 15)
        .with_capacity(10, 12);
    let tt = TravelTimeTable::constant(6, 2.0).unwrap();
    let weights = FitnessWeights::default();
    let d = demand(99, 400, 180.0, 6);
    let mut wins = 0;
    for seed in 0..20u64 {
        let params = GaParams {
            population: 16,
            generations: 20,
            seed,
            ..GaParams::default()
        };
        let ga = ga_optimize(&d, &line, &tt, &params, &weights).unwrap();
        let ma = memetic_optimize(&d, &line, &tt, &params, &weights).unwrap();
        assert!(
            ma.fitness <= ga.fitness,
            "seed {seed}: memetic {} GA {}",
            ma.fitness,
            ga.fitness
        );
        if ma.fitness < ga.fitness {
            wins += 1;
        }
    }
    assert!(wins > 0);
}
