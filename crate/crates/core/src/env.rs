//! The minute-stepped dispatch MDP.
//!
//! At every minute of the service window the controller sees features of a
//! hypothetical bus leaving *now* and decides whether to dispatch it. The
//! first and last minute always dispatch.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::line_model::{trip_capacity, LineConfig, Minute, TravelTimeTable};
use crate::od_data::DemandSet;
use crate::scalar::Real;
use crate::simulator::{
    metrics_from_trips, run_trip, Metrics, StationQueues, Timetable, TripResult,
};
use crate::{Error, Result};

/// Number of features in the state vector.
pub const FEATURES: usize = 6;
/// Waiting-time normaliser `μ`.
pub const DEFAULT_MU: f64 = 5000.0;
/// Stranding penalty weight `β`.
pub const DEFAULT_BETA: f64 = 0.2;
/// Waiting penalty weight `ω`.
pub const DEFAULT_OMEGA: f64 = 1.0 / 5000.0;

/// Dispatch decision for one minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    /// No departure (`a = 0`).
    Hold = 0,
    /// Departure (`a = 1`).
    Depart = 1,
}

impl Action {
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Action::Hold
        } else {
            Action::Depart
        }
    }
}

/// `[x1, x2, x3, x4, x5, x6]`: hour/24, minute/60, peak load / capacity,
/// waiting / μ, consumed / provided capacity, stranded / capacity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector<T>(pub [T; FEATURES]);

impl<T: Real> StateVector<T> {
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    #[inline]
    pub fn to_vec(&self) -> Vec<T> {
        self.0.to_vec()
    }
}

/// Weights of the departure reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct RewardParams<T: Real> {
    pub omega: T,
    pub beta: T,
    pub mu: T,
}

impl<T: Real> Default for RewardParams<T> {
    fn default() -> Self {
        Self {
            omega: T::of(DEFAULT_OMEGA),
            beta: T::of(DEFAULT_BETA),
            mu: T::of(DEFAULT_MU),
        }
    }
}

impl<T: Real> RewardParams<T> {
    pub fn with_omega(mut self, omega: T) -> Self {
        self.omega = omega;
        self
    }
}

/// One experience tuple. States are stored as the encoded vector the agent saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition<T> {
    pub s: Vec<T>,
    pub a: Action,
    pub r: T,
    pub s_next: Vec<T>,
    pub done: bool,
}

/// Reward for dispatching (`Depart`) or not (`Hold`) the trip `trip` at minute `m`.
///
/// `Hold`: `1 − o/e − ω·W − β·ds`; `Depart`: `o/e − β·ds`.
pub fn reward<T: Real>(trip: &TripResult, a: Action, params: &RewardParams<T>, e_m: T) -> T {
    let rate = T::of(trip.capacity_used as f64) / e_m;
    let stranding = params.beta * T::of(trip.stranding_total() as f64);
    match a {
        Action::Hold => T::one() - rate - params.omega * T::of(trip.waiting_total) - stranding,
        Action::Depart => rate - stranding,
    }
}

/// Feature values before clamping, for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFeatures {
    pub waiting: f64,
    pub consumption: f64,
}

/// Maps the hypothetical trip leaving at `m` to the state vector.
///
/// Returns the state and whether `x4` or `x5` had to be clamped into `[0, 1]`.
pub fn state_from_trip<T: Real>(
    m: Minute,
    trip: &TripResult,
    line: &LineConfig,
    params: &RewardParams<T>,
) -> (StateVector<T>, RawFeatures) {
    let cap = f64::from(line.capacity);
    let hour = f64::from(m / 60);
    let minute = f64::from(m % 60);
    let raw = RawFeatures {
        waiting: trip.waiting_total / params.mu.to_f64_lossy(),
        consumption: trip.capacity_used as f64 / line.capacity_at(m),
    };
    let x = [
        hour / 24.0,
        minute / 60.0,
        f64::from(trip.max_onboard) / cap,
        raw.waiting.clamp(0.0, 1.0),
        raw.consumption.clamp(0.0, 1.0),
        (trip.stranding_total() as f64 / cap).min(1.0),
    ];
    (StateVector(x.map(T::of)), raw)
}

/// Source of the hypothetical trip behind each observation.
///
/// The default [`OracleLookahead`] replays true future arrivals; a learned
/// demand forecaster can be plugged in instead.
pub trait TripPredictor: Send + Sync {
    fn predict(
        &self,
        queues: &StationQueues<'_>,
        line: &LineConfig,
        tt: &TravelTimeTable,
        m: Minute,
    ) -> TripResult;
}

/// Ground-truth lookahead over the recorded demand.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleLookahead;

impl TripPredictor for OracleLookahead {
    fn predict(
        &self,
        queues: &StationQueues<'_>,
        line: &LineConfig,
        tt: &TravelTimeTable,
        m: Minute,
    ) -> TripResult {
        run_trip(queues, tt, m, line.capacity)
    }
}

/// What [`BusEnv::step`] reports besides the transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo<T> {
    pub transition: Transition<T>,
    pub minute: Minute,
    /// Minutes since the previous departure, at decision time.
    pub t_ml: Minute,
    /// The action was overridden by the endpoint rule.
    pub forced: bool,
    pub committed: bool,
}

/// One line of the episode trace (JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub m: Minute,
    pub state: [f64; FEATURES],
    pub action: u8,
    pub forced: bool,
    pub reward: f64,
    pub t_ml: Minute,
    pub committed: bool,
}

impl<T: Real> From<&StepInfo<T>> for TraceRecord {
    fn from(step: &StepInfo<T>) -> Self {
        let mut state = [0.0; FEATURES];
        for (dst, src) in state.iter_mut().zip(&step.transition.s) {
            *dst = src.to_f64_lossy();
        }
        Self {
            m: step.minute,
            state,
            action: step.transition.a as u8,
            forced: step.forced,
            reward: step.transition.r.to_f64_lossy(),
            t_ml: step.t_ml,
            committed: step.committed,
        }
    }
}

/// Episode state over borrowed line, travel times and demand.
pub struct BusEnv<'a, T: Real> {
    line: &'a LineConfig,
    tt: &'a TravelTimeTable,
    queues: StationQueues<'a>,
    predictor: Box<dyn TripPredictor + 'a>,
    params: RewardParams<T>,
    e_m: T,
    minute: Minute,
    last_departure: Option<Minute>,
    trips: Vec<TripResult>,
    current: TripResult,
    state: StateVector<T>,
    done: bool,
    clamped: usize,
}

impl<'a, T: Real> BusEnv<'a, T> {
    /// Starts an episode at `line.service_start` with the oracle lookahead.
    pub fn new(
        line: &'a LineConfig,
        tt: &'a TravelTimeTable,
        demand: &'a DemandSet,
        params: RewardParams<T>,
    ) -> Result<Self> {
        Self::with_predictor(line, tt, demand, params, Box::new(OracleLookahead))
    }

    pub fn with_predictor(
        line: &'a LineConfig,
        tt: &'a TravelTimeTable,
        demand: &'a DemandSet,
        params: RewardParams<T>,
        predictor: Box<dyn TripPredictor + 'a>,
    ) -> Result<Self> {
        line.validate()?;
        if tt.stations() != line.stations {
            return Err(Error::Config(format!(
                "travel table has {} stations, line has {}",
                tt.stations(),
                line.stations
            )));
        }
        let queues = StationQueues::new(demand, line.stations)?;
        let m = line.service_start;
        let current = predictor.predict(&queues, line, tt, m);
        let mut env = Self {
            line,
            tt,
            queues,
            predictor,
            params,
            e_m: T::of(trip_capacity(line)),
            minute: m,
            last_departure: None,
            trips: Vec::new(),
            current,
            state: StateVector::default(),
            done: false,
            clamped: 0,
        };
        env.refresh_state();
        Ok(env)
    }

    fn refresh_state(&mut self) {
        let (state, raw) = state_from_trip(self.minute, &self.current, self.line, &self.params);
        if !(0.0..=1.0).contains(&raw.waiting) || !(0.0..=1.0).contains(&raw.consumption) {
            self.clamped += 1;
            log::trace!(
                "minute {}: clamped x4={} x5={}",
                self.minute,
                raw.waiting,
                raw.consumption
            );
        }
        self.state = state;
    }

    #[inline]
    pub fn line(&self) -> &'a LineConfig {
        self.line
    }

    #[inline]
    pub fn travel_times(&self) -> &'a TravelTimeTable {
        self.tt
    }

    #[inline]
    pub fn queues(&self) -> &StationQueues<'a> {
        &self.queues
    }

    #[inline]
    pub fn params(&self) -> &RewardParams<T> {
        &self.params
    }

    /// `e_m` of the line.
    #[inline]
    pub fn trip_capacity(&self) -> T {
        self.e_m
    }

    #[inline]
    pub fn minute(&self) -> Minute {
        self.minute
    }

    #[inline]
    pub fn is_done(&self) -> bool {
        self.done
    }

    /// `t_ml = m − last departure` (0 before the first departure).
    #[inline]
    pub fn t_ml(&self) -> Minute {
        self.last_departure.map_or(0, |d| self.minute - d)
    }

    /// Departures committed so far.
    pub fn departures(&self) -> Vec<Minute> {
        self.trips.iter().map(|t| t.depart_minute).collect()
    }

    #[inline]
    pub fn trips(&self) -> &[TripResult] {
        &self.trips
    }

    /// The hypothetical trip leaving at the current minute.
    #[inline]
    pub fn current_trip(&self) -> &TripResult {
        &self.current
    }

    /// Number of observations whose `x4` or `x5` were clamped.
    #[inline]
    pub fn clamped_observations(&self) -> usize {
        self.clamped
    }

    /// Whether the current minute's action is fixed by the endpoint rule.
    #[inline]
    pub fn is_forced_minute(&self) -> bool {
        self.minute == self.line.service_start || self.minute == self.line.service_end
    }

    /// State of the current minute. Pure; repeated calls return the same value.
    #[inline]
    pub fn observe(&self) -> StateVector<T> {
        self.state
    }

    /// Predicted trip leaving at `m` against the current queues (read-only).
    pub fn predict_at(&self, m: Minute) -> TripResult {
        self.predictor.predict(&self.queues, self.line, self.tt, m)
    }

    /// Applies `action` at the current minute and advances one minute.
    pub fn step(&mut self, action: Action) -> Result<StepInfo<T>> {
        if self.done {
            return Err(Error::Episode("step after episode end".into()));
        }
        let m = self.minute;
        let forced = self.is_forced_minute();
        let a = if forced { Action::Depart } else { action };
        let t_ml = self.t_ml();
        let s = self.state.to_vec();
        let r = reward(&self.current, a, &self.params, self.e_m);

        let committed = a == Action::Depart;
        if committed {
            self.queues.commit(&self.current)?;
            self.trips.push(self.current.clone());
            self.last_departure = Some(m);
        }

        let done = m >= self.line.service_end;
        if done {
            self.done = true;
        } else {
            self.minute = m + 1;
            self.current = self
                .predictor
                .predict(&self.queues, self.line, self.tt, self.minute);
            self.refresh_state();
        }
        Ok(StepInfo {
            transition: Transition {
                s,
                a,
                r,
                s_next: self.state.to_vec(),
                done,
            },
            minute: m,
            t_ml,
            forced,
            committed,
        })
    }

    /// Committed departures of a finished episode.
    pub fn episode_to_timetable(&self) -> Result<Timetable> {
        if !self.done {
            return Err(Error::Episode("episode not done".into()));
        }
        Timetable::new(self.departures())
    }

    /// ND/AWT/NSP of the trips committed so far.
    pub fn metrics(&self) -> Metrics {
        metrics_from_trips(&self.trips, self.queues.unserved())
    }
}

/// Builds the agent's input and reward from the environment.
///
/// The standard scheme uses the six-feature state and the departure reward;
/// ablations swap in other encodings.
pub trait Scheme<T: Real>: Send {
    /// Short tag used in reports.
    fn name(&self) -> String;
    /// Length of the encoded state.
    fn state_dim(&self, line: &LineConfig) -> usize;
    /// Clears per-episode history.
    fn reset(&mut self) {}
    /// Encodes the state at the environment's current minute.
    fn encode(&mut self, env: &BusEnv<'_, T>) -> Vec<T>;
    /// Reward for taking `action` at the current minute, evaluated before the step.
    fn reward(&mut self, env: &BusEnv<'_, T>, action: Action) -> T;
}

/// Which of the six features the agent sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask(pub [bool; FEATURES]);

impl Default for FeatureMask {
    fn default() -> Self {
        Self([true; FEATURES])
    }
}

impl FeatureMask {
    /// Drops the listed 1-based features.
    pub fn without(features: &[usize]) -> Self {
        let mut keep = [true; FEATURES];
        for &f in features {
            keep[f - 1] = false;
        }
        Self(keep)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&k| k).count()
    }

    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.0)
            .filter(|(_, k)| *k)
            .map(|(v, _)| *v)
            .collect()
    }
}

/// Six-feature state (optionally masked) and the departure reward.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardScheme {
    pub mask: FeatureMask,
}

impl<T: Real> Scheme<T> for StandardScheme {
    fn name(&self) -> String {
        if self.mask.count() == FEATURES {
            "s_m".into()
        } else {
            let dropped: Vec<String> = (0..FEATURES)
                .filter(|&i| !self.mask.0[i])
                .map(|i| format!("x{}", i + 1))
                .collect();
            format!("s_m-{}", dropped.join("-"))
        }
    }

    fn state_dim(&self, _line: &LineConfig) -> usize {
        self.mask.count()
    }

    fn encode(&mut self, env: &BusEnv<'_, T>) -> Vec<T> {
        self.mask.apply(env.observe().as_slice())
    }

    fn reward(&mut self, env: &BusEnv<'_, T>, action: Action) -> T {
        reward(
            env.current_trip(),
            action,
            env.params(),
            env.trip_capacity(),
        )
    }
}

/// Fixed-length history of the most recent encodings, oldest first.
#[derive(Debug, Clone)]
pub struct History<T> {
    frames: VecDeque<Vec<T>>,
    len: usize,
}

impl<T: Real> History<T> {
    pub fn new(len: usize) -> Self {
        Self {
            frames: VecDeque::with_capacity(len),
            len,
        }
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    /// Pushes `frame`; until full, the oldest slots repeat the first frame.
    pub fn push(&mut self, frame: Vec<T>) -> Vec<T> {
        if self.frames.is_empty() {
            for _ in 1..self.len {
                self.frames.push_back(frame.clone());
            }
        }
        if self.frames.len() == self.len {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        self.frames.iter().flatten().copied().collect()
    }
}
