mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use headwayrl::agent::random_constrained;
use headwayrl::env::{reward, Action, BusEnv, RewardParams};
use headwayrl::line_model::{Minute, TravelTimeTable};
use headwayrl::simulator::{evaluate_timetable, Evaluation, TripResult};
use headwayrl::{DemandSet, LineConfig, Timetable};

use support::oracle::{random_instance, Instance};

fn build(inst: &Instance) -> (LineConfig, TravelTimeTable, DemandSet) {
    let line = LineConfig::new(inst.stations, inst.window.0, inst.window.1)
        .with_intervals(1, 60)
        .with_capacity(inst.capacity, inst.capacity);
    let tt = TravelTimeTable::from_bands(inst.stations, &inst.bands).unwrap();
    (line, tt, DemandSet::new(inst.passengers.clone()).unwrap())
}

fn run(inst: &Instance, departures: &[Minute]) -> (DemandSet, Evaluation) {
    let (line, tt, demand) = build(inst);
    let eval = evaluate_timetable(
        &demand,
        &line,
        &tt,
        &Timetable::new(departures.to_vec()).unwrap(),
    )
    .unwrap();
    (demand, eval)
}

/// Boarding minute per demand index, `None` if never boarded.
fn boarding_times(demand: &DemandSet, eval: &Evaluation) -> Vec<Option<f64>> {
    let mut out = vec![None; demand.len()];
    for b in eval.trips.iter().flat_map(|t| &t.served) {
        assert!(out[b.record].is_none(), "passenger boarded twice");
        out[b.record] = Some(b.boarded);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn conservation_and_capacity(seed in any::<u64>()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 30, 6);
        let (demand, eval) = run(&inst, &inst.departures);
        let m = &eval.metrics;
        prop_assert_eq!(m.served + m.unserved, demand.len());
        prop_assert_eq!(boarding_times(&demand, &eval).iter().filter(|b| b.is_some()).count(), m.served);
        for t in &eval.trips {
            prop_assert!(t.onboard.iter().all(|&l| l <= inst.capacity));
            prop_assert!(t.max_onboard <= inst.capacity);
            prop_assert_eq!(t.boardings.iter().sum::<u32>(), t.alightings.iter().sum::<u32>());
            let mut load = 0u32;
            for k in 0..t.onboard.len() {
                load = load + t.boardings[k] - t.alightings[k];
                prop_assert_eq!(t.onboard[k], load);
            }
            // segment-sum and per-passenger readings of consumed capacity agree
            let rides: u64 = t.served.iter().map(|b| u64::from(b.destination - b.origin)).sum();
            prop_assert_eq!(t.capacity_used, rides);
            prop_assert_eq!(t.onboard.iter().map(|&l| u64::from(l)).sum::<u64>(), rides);
        }
    }

    #[test]
    fn fifo_boarding(seed in any::<u64>()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 30, 6);
        let (demand, eval) = run(&inst, &inst.departures);
        let boarded = boarding_times(&demand, &eval);
        let r = demand.records();
        for t in &eval.trips {
            for b in &t.served {
                // nobody who was already waiting at this station is left behind
                for (j, p) in r.iter().enumerate() {
                    if p.origin == b.origin && (p.arrival_minute, &p.id) < (b.arrival, &r[b.record].id) {
                        prop_assert!(matches!(boarded[j], Some(x) if x <= b.boarded));
                    }
                }
            }
        }
    }

    #[test]
    fn uncapacitated_extra_departure_never_adds_wait(seed in any::<u64>(), extra in 0u32..=60) {
        let mut inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 30, 5);
        inst.capacity = 30;
        prop_assume!(!inst.departures.contains(&extra));
        let mut more = inst.departures.clone();
        more.push(extra);
        more.sort_unstable();
        let (demand, base) = run(&inst, &inst.departures);
        let (_, plus) = run(&inst, &more);
        prop_assert_eq!((base.metrics.nsp, plus.metrics.nsp), (0, 0));
        for (a, b) in boarding_times(&demand, &base).iter().zip(boarding_times(&demand, &plus)) {
            if let Some(a) = a {
                prop_assert!(matches!(b, Some(b) if b <= *a));
            }
        }
        if plus.metrics.served == base.metrics.served {
            prop_assert!(plus.metrics.total_wait <= base.metrics.total_wait);
        }
        // passengers served either way never wait longer in total
        let (a, b) = (boarding_times(&demand, &base), boarding_times(&demand, &plus));
        let r = demand.records();
        let wait = |times: &[Option<f64>]| -> f64 {
            times.iter().zip(&a).zip(r).filter_map(|((t, s), p)| s.and(*t).map(|t| t - p.arrival_minute)).sum()
        };
        prop_assert!(wait(&b) <= wait(&a));
    }

    #[test]
    fn random_legal_rollouts_respect_headway_bounds(
        seed in any::<u64>(),
        start in 0u32..1200,
        len in 2u32..200,
        lo in 1u32..20,
        span in 0u32..20,
    ) {
        let hi = (lo + span).min(len);
        prop_assume!(lo <= hi);
        let line = LineConfig::new(3, start, start + len).with_intervals(lo, hi);
        let tt = TravelTimeTable::constant(3, 2.0).unwrap();
        let demand = DemandSet::empty();
        let mut env = BusEnv::<f64>::new(&line, &tt, &demand, RewardParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while !env.is_done() {
            let a = random_constrained(env.t_ml(), (lo, hi), &mut rng);
            env.step(a).unwrap();
        }
        let tt = env.episode_to_timetable().unwrap();
        let d = tt.departures();
        prop_assert_eq!(d.first(), Some(&start));
        prop_assert_eq!(d.last(), Some(&(start + len)));
        let gaps: Vec<Minute> = d.windows(2).map(|w| w[1] - w[0]).collect();
        prop_assert!(gaps.iter().all(|&g| g <= hi));
        prop_assert!(gaps.iter().rev().skip(1).all(|&g| g >= lo));
        prop_assert!(tt.validate_for(&line).is_ok());
    }

    #[test]
    fn reward_branches_sum_exactly(
        used in 0u64..2000,
        wait_eighths in 0u32..100_000,
        stranded in proptest::collection::vec(0u32..50, 2),
    ) {
        // dyadic weights and e = 64 keep every operation exact
        let params = RewardParams { omega: 1.0 / 4096.0, beta: 0.25, mu: 5000.0 };
        let e = 64.0;
        let trip = TripResult {
            depart_minute: 0,
            station_times: vec![0.0; 3],
            boardings: vec![0; 3],
            alightings: vec![0; 3],
            stranded: stranded.clone(),
            onboard: vec![0; 2],
            max_onboard: 0,
            waiting_total: f64::from(wait_eighths) / 8.0,
            capacity_used: used,
            served: Vec::new(),
        };
        let ds = f64::from(stranded.iter().sum::<u32>());
        let sum = reward(&trip, Action::Hold, &params, e) + reward(&trip, Action::Depart, &params, e);
        prop_assert_eq!(sum, 1.0 - params.omega * trip.waiting_total - 2.0 * params.beta * ds);
    }
}

/// Stranding is counted per bus and station, so under heavy overload an extra
/// bus can add stranding events even though nobody boards later.
#[test]
fn extra_departure_can_add_stranding_events_under_overload() {
    use headwayrl::PassengerRecord;
    let inst = Instance {
        stations: 2,
        capacity: 1,
        window: (0, 60),
        bands: vec![headwayrl::line_model::TravelBand {
            start: 0,
            segments: vec![1.0],
        }],
        passengers: (0..5)
            .map(|i| PassengerRecord::new(format!("p{i}"), 0.0, 1, 2))
            .collect(),
        departures: vec![5, 10],
    };
    let (_, base) = run(&inst, &[5, 10]);
    let (_, plus) = run(&inst, &[5, 7, 10]);
    assert_eq!((base.metrics.nsp, plus.metrics.nsp), (4 + 3, 4 + 3 + 2));
    assert!(plus.metrics.unserved < base.metrics.unserved);
}

/// With binding capacity an extra bus can move an upstream rider onto a later
/// bus that then fills up before a downstream passenger.
#[test]
fn extra_departure_can_displace_a_downstream_rider() {
    use headwayrl::PassengerRecord;
    let p = |id: &str, t: f64, o: u32, d: u32| PassengerRecord::new(id, t, o, d);
    let inst = Instance {
        stations: 3,
        capacity: 2,
        window: (0, 60),
        bands: vec![headwayrl::line_model::TravelBand {
            start: 0,
            segments: vec![2.0, 0.0],
        }],
        passengers: vec![
            p("a", 11.875, 1, 2),
            p("b", 20.375, 1, 3),
            p("c", 21.125, 1, 2),
            p("d", 31.0, 1, 2),
            p("e", 31.125, 1, 3),
            p("f", 19.875, 2, 3),
            p("g", 45.125, 2, 3),
            p("h", 55.5, 2, 3),
        ],
        departures: vec![52, 54],
    };
    let (demand, base) = run(&inst, &[52, 54]);
    let (_, plus) = run(&inst, &[12, 52, 54]);
    let h = demand.records().iter().position(|r| r.id == "h").unwrap();
    assert_eq!(boarding_times(&demand, &base)[h], Some(56.0));
    assert_eq!(boarding_times(&demand, &plus)[h], None);
}
