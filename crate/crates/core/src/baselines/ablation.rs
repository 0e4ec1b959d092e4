//! Alternative state/reward encodings used to ablate the standard scheme.

use crate::env::{Action, BusEnv, History, Scheme};
use crate::line_model::{LineConfig, Minute};
use crate::scalar::Real;
use crate::simulator::{run_trip, TripResult};

/// Frames stacked by [`SchemeOne`].
pub const SCHEME_ONE_FRAMES: usize = 4;
/// Look-ahead for the future-arrivals channel of [`SchemeOne`], minutes.
pub const ARRIVAL_HORIZON: f64 = 15.0;

/// Per-segment telemetry at one minute; each vector has `K − 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct StationFrame {
    pub waiting: Vec<usize>,
    pub arrivals: Vec<usize>,
    pub presence: Vec<bool>,
    pub position: Vec<f64>,
}

impl StationFrame {
    /// Telemetry at the environment's current minute.
    pub fn capture<T: Real>(env: &BusEnv<'_, T>) -> Self {
        let line = env.line();
        let segs = line.segments();
        let t = f64::from(env.minute());
        let q = env.queues();
        let mut frame = Self {
            waiting: (1..=segs as u32).map(|k| q.waiting_at(k, t)).collect(),
            arrivals: (1..=segs as u32)
                .map(|k| q.arrivals_between(k, t, ARRIVAL_HORIZON))
                .collect(),
            presence: vec![false; segs],
            position: vec![0.0; segs],
        };
        for trip in env.trips() {
            if let Some((i, frac)) = segment_at(trip, t) {
                frame.presence[i] = true;
                frame.position[i] = frame.position[i].max(frac);
            }
        }
        frame
    }

    fn encode<T: Real>(&self, capacity: f64) -> Vec<T> {
        let scaled = |v: &[usize]| {
            v.iter()
                .map(|&x| T::of(x as f64 / capacity))
                .collect::<Vec<_>>()
        };
        let mut out = scaled(&self.waiting);
        out.extend(scaled(&self.arrivals));
        out.extend(
            self.presence
                .iter()
                .map(|&p| if p { T::one() } else { T::zero() }),
        );
        out.extend(self.position.iter().map(|&p| T::of(p)));
        out
    }
}

/// Segment index the bus of `trip` is travelling at time `t`, with the
/// fraction of that segment already covered.
fn segment_at(trip: &TripResult, t: f64) -> Option<(usize, f64)> {
    let times = &trip.station_times;
    if t < times[0] || t >= times[times.len() - 1] {
        return None;
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let span = times[i + 1] - times[i];
    Some((
        i,
        if span > 0.0 {
            (t - times[i]) / span
        } else {
            0.0
        },
    ))
}

/// Station-level telemetry stacked over four minutes; reward is minus the
/// empty seats on the road plus the passengers waiting.
#[derive(Debug, Clone)]
pub struct SchemeOne<T> {
    history: History<T>,
    /// Multiplier applied to the raw reward during training.
    pub scale: f64,
}

impl<T: Real> SchemeOne<T> {
    /// Reward scaled by `1 / (C_max · (K − 1))`.
    pub fn new(line: &LineConfig) -> Self {
        Self {
            history: History::new(SCHEME_ONE_FRAMES),
            scale: 1.0 / (f64::from(line.capacity) * line.segments() as f64),
        }
    }

    /// Unscaled `−(C_ml + Σ_k d_mk)`.
    pub fn raw_reward(env: &BusEnv<'_, T>, action: Action) -> f64 {
        let line = env.line();
        let t = f64::from(env.minute());
        let cap = line.capacity;
        let mut seats: u64 = env
            .trips()
            .iter()
            .filter_map(|trip| {
                segment_at(trip, t).map(|(i, _)| u64::from(cap - trip.onboard[i].min(cap)))
            })
            .sum();
        let q = env.queues();
        let mut waiting: u64 = (1..=line.segments() as u32)
            .map(|k| q.waiting_at(k, t) as u64)
            .sum();
        if action == Action::Depart {
            let trip = env.current_trip();
            seats += u64::from(cap - trip.onboard[0].min(cap));
            waiting -= u64::from(trip.boardings[0]);
        }
        -((seats + waiting) as f64)
    }
}

impl<T: Real> Scheme<T> for SchemeOne<T> {
    fn name(&self) -> String {
        "scheme-one".into()
    }

    fn state_dim(&self, line: &LineConfig) -> usize {
        SCHEME_ONE_FRAMES * 4 * line.segments()
    }

    fn reset(&mut self) {
        self.history.clear();
    }

    fn encode(&mut self, env: &BusEnv<'_, T>) -> Vec<T> {
        let frame = StationFrame::capture(env).encode(f64::from(env.line().capacity));
        self.history.push(frame)
    }

    fn reward(&mut self, env: &BusEnv<'_, T>, action: Action) -> T {
        T::of(Self::raw_reward(env, action) * self.scale)
    }
}

/// Uncapped boarding counts of a hypothetical trip leaving at the current minute.
#[derive(Debug, Clone, PartialEq)]
pub struct UncappedTrip {
    pub boardings: Vec<u32>,
    pub alightings: Vec<u32>,
    /// `p_m^k` after station `k`, length `K − 1`.
    pub load: Vec<u32>,
}

impl UncappedTrip {
    pub fn at<T: Real>(env: &BusEnv<'_, T>) -> Self {
        let trip = run_trip(env.queues(), env.travel_times(), env.minute(), u32::MAX);
        Self {
            load: trip.onboard.clone(),
            boardings: trip.boardings,
            alightings: trip.alightings,
        }
    }

    pub fn max_load(&self) -> u32 {
        self.load.iter().copied().max().unwrap_or(0)
    }

    /// `Σ_k p_m^k`, capacity units consumed without the on-board limit.
    pub fn consumed(&self) -> u64 {
        self.load.iter().map(|&p| u64::from(p)).sum()
    }

    pub fn boarded(&self) -> u64 {
        self.boardings.iter().map(|&w| u64::from(w)).sum()
    }
}

/// Three-feature state (hour, uncapped peak load, time since last departure)
/// with a capacity-consumption reward.
#[derive(Debug, Clone)]
pub struct SchemeTwo {
    cache: Option<(Minute, UncappedTrip)>,
    /// Multiplier applied to the raw reward during training.
    pub scale: f64,
}

impl SchemeTwo {
    /// Reward scaled by `1 / e_m`.
    pub fn new(line: &LineConfig) -> Self {
        Self {
            cache: None,
            scale: 1.0 / crate::line_model::trip_capacity(line),
        }
    }

    fn trip<T: Real>(&mut self, env: &BusEnv<'_, T>) -> &UncappedTrip {
        let m = env.minute();
        if self.cache.as_ref().is_none_or(|(at, _)| *at != m) {
            self.cache = Some((m, UncappedTrip::at(env)));
        }
        &self.cache.as_ref().expect("filled above").1
    }

    /// Unscaled reward: `−(e_m − Σ_k p_m^k) − Σ_k w_m^k` when departing,
    /// `−Σ_k w_m^k` when holding.
    pub fn raw_reward(trip: &UncappedTrip, e_m: f64, action: Action) -> f64 {
        let waiting = trip.boarded() as f64;
        match action {
            Action::Depart => -(e_m - trip.consumed() as f64) - waiting,
            Action::Hold => -waiting,
        }
    }
}

impl<T: Real> Scheme<T> for SchemeTwo {
    fn name(&self) -> String {
        "scheme-two".into()
    }

    fn state_dim(&self, _line: &LineConfig) -> usize {
        3
    }

    fn reset(&mut self) {
        self.cache = None;
    }

    fn encode(&mut self, env: &BusEnv<'_, T>) -> Vec<T> {
        let line = env.line();
        let m = env.minute();
        let t_ml = env.t_ml();
        let peak = self.trip(env).max_load();
        vec![
            T::of(f64::from(m / 60) / 24.0),
            T::of(f64::from(peak) / f64::from(line.capacity)),
            T::of(f64::from(t_ml) / f64::from(line.max_interval)),
        ]
    }

    fn reward(&mut self, env: &BusEnv<'_, T>, action: Action) -> T {
        let e_m = env.trip_capacity().to_f64_lossy();
        let scale = self.scale;
        T::of(Self::raw_reward(self.trip(env), e_m, action) * scale)
    }
}
