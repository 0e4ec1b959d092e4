//! Chronological event-enumeration reference for the trip simulator.
//!
//! Buses and passengers are processed as one time-ordered event stream with
//! explicit per-station queues; nothing is shared with the simulator code.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use headwayrl::line_model::TravelBand;
use headwayrl::od_data::PassengerRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrip {
    pub depart: u32,
    pub station_times: Vec<f64>,
    pub boardings: Vec<u32>,
    pub alightings: Vec<u32>,
    pub stranded: Vec<u32>,
    pub onboard: Vec<u32>,
    pub max_onboard: u32,
    pub waiting_total: f64,
    pub capacity_used: u64,
    /// (passenger id, arrival, boarding time, origin, destination) in boarding order.
    pub served: Vec<(String, f64, f64, u32, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub trips: Vec<OracleTrip>,
    pub nd: usize,
    pub served: usize,
    pub unserved: usize,
    pub nsp: u64,
    pub total_wait: f64,
    pub awt: f64,
}

/// Offset of station `k` (1-based) for a bus leaving at `depart`.
pub fn offset(bands: &[TravelBand], stations: u32, depart: u32, k: u32) -> f64 {
    let band = bands
        .iter()
        .filter(|b| b.start <= depart)
        .max_by_key(|b| b.start)
        .unwrap_or_else(|| bands.iter().min_by_key(|b| b.start).unwrap());
    (1..k)
        .map(|s| {
            if band.segments.len() == 1 {
                band.segments[0]
            } else {
                band.segments[s as usize - 1]
            }
        })
        .take((stations - 1) as usize)
        .sum()
}

enum Event {
    Passenger(usize),
    Bus { trip: usize, station: u32 },
}

pub fn simulate(
    passengers: &[PassengerRecord],
    stations: u32,
    capacity: u32,
    bands: &[TravelBand],
    departures: &[u32],
) -> OracleResult {
    let k_max = stations as usize;
    let mut trips: Vec<OracleTrip> = departures
        .iter()
        .map(|&d| OracleTrip {
            depart: d,
            station_times: (1..=stations)
                .map(|k| f64::from(d) + offset(bands, stations, d, k))
                .collect(),
            boardings: vec![0; k_max],
            alightings: vec![0; k_max],
            stranded: vec![0; k_max - 1],
            onboard: vec![0; k_max - 1],
            max_onboard: 0,
            waiting_total: 0.0,
            capacity_used: 0,
            served: Vec::new(),
        })
        .collect();

    // (time, class, tie) with passengers (class 0) before buses (class 1)
    let mut events: Vec<((f64, u8, usize, String), Event)> = Vec::new();
    for (i, p) in passengers.iter().enumerate() {
        events.push(((p.arrival_minute, 0, 0, p.id.clone()), Event::Passenger(i)));
    }
    for (t, trip) in trips.iter().enumerate() {
        for k in 1..=stations {
            let at = trip.station_times[k as usize - 1];
            events.push((
                (at, 1, t, String::new()),
                Event::Bus {
                    trip: t,
                    station: k,
                },
            ));
        }
    }
    events.sort_by(|a, b| {
        let (x, y) = (&a.0, &b.0);
        x.0.total_cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
            .then(x.3.cmp(&y.3))
    });

    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); k_max + 1];
    let mut riders: Vec<Vec<usize>> = vec![Vec::new(); trips.len()];
    let mut boarded = vec![false; passengers.len()];
    for (_, ev) in events {
        match ev {
            Event::Passenger(i) => queues[passengers[i].origin as usize].push_back(i),
            Event::Bus { trip, station } => {
                let now = trips[trip].station_times[station as usize - 1];
                let before = riders[trip].len();
                riders[trip].retain(|&i| passengers[i].destination != station);
                trips[trip].alightings[station as usize - 1] = (before - riders[trip].len()) as u32;
                if station == stations {
                    continue;
                }
                let q = &mut queues[station as usize];
                let mut on = 0;
                while riders[trip].len() < capacity as usize {
                    let Some(i) = q.pop_front() else { break };
                    let p = &passengers[i];
                    riders[trip].push(i);
                    boarded[i] = true;
                    on += 1;
                    let t = &mut trips[trip];
                    t.waiting_total += now - p.arrival_minute;
                    t.served
                        .push((p.id.clone(), p.arrival_minute, now, p.origin, p.destination));
                }
                let t = &mut trips[trip];
                let s = station as usize - 1;
                t.boardings[s] = on;
                t.stranded[s] = q.len() as u32;
                let load = riders[trip].len() as u32;
                t.onboard[s] = load;
                t.max_onboard = t.max_onboard.max(load);
                t.capacity_used += u64::from(load);
            }
        }
    }

    let served = boarded.iter().filter(|&&b| b).count();
    let total_wait: f64 = trips.iter().map(|t| t.waiting_total).sum();
    OracleResult {
        nd: trips.len(),
        served,
        unserved: passengers.len() - served,
        nsp: trips
            .iter()
            .flat_map(|t| &t.stranded)
            .map(|&s| u64::from(s))
            .sum(),
        awt: if served == 0 {
            0.0
        } else {
            total_wait / served as f64
        },
        total_wait,
        trips,
    }
}

/// A small random instance on exact binary fractions: arrivals on a 1/8-minute
/// grid and travel times in half minutes, so every sum is exact in f64.
#[derive(Debug, Clone)]
pub struct Instance {
    pub stations: u32,
    pub capacity: u32,
    pub window: (u32, u32),
    pub bands: Vec<TravelBand>,
    pub passengers: Vec<PassengerRecord>,
    pub departures: Vec<u32>,
}

pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_stations: u32,
    max_passengers: usize,
    max_departures: usize,
) -> Instance {
    let stations = rng.random_range(2..=max_stations);
    let window = (0u32, 60u32);
    let segs = (stations - 1) as usize;
    let band = |start: u32, rng: &mut R| TravelBand {
        start,
        segments: if rng.random_bool(0.3) {
            vec![f64::from(rng.random_range(0..=8u32)) * 0.5]
        } else {
            (0..segs)
                .map(|_| f64::from(rng.random_range(0..=8u32)) * 0.5)
                .collect()
        },
    };
    let mut bands = vec![band(0, rng)];
    if rng.random_bool(0.4) {
        let start = rng.random_range(1..60);
        let b = band(start, rng);
        // keep the second band only when it cannot let a bus overtake
        let slower_by: f64 = (1..=stations)
            .map(|k| {
                offset(std::slice::from_ref(&bands[0]), stations, 0, k)
                    - offset(std::slice::from_ref(&b), stations, 0, k)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if slower_by <= 1.0 {
            bands.push(b);
        }
    }
    let n = rng.random_range(0..=max_passengers);
    let passengers = (0..n)
        .map(|i| {
            let o = rng.random_range(1..stations);
            let d = rng.random_range(o + 1..=stations);
            PassengerRecord::new(
                format!("p{i:02}"),
                f64::from(rng.random_range(0..=60 * 8u32)) / 8.0,
                o,
                d,
            )
        })
        .collect();
    let count = rng.random_range(1..=max_departures);
    let mut picks: BTreeMap<u32, ()> = BTreeMap::new();
    while picks.len() < count {
        picks.insert(rng.random_range(window.0..=window.1), ());
    }
    Instance {
        stations,
        capacity: rng.random_range(1..=5),
        window,
        bands,
        passengers,
        departures: picks.into_keys().collect(),
    }
}
