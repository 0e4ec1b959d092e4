//! Comparison methods: GA and memetic timetable search over per-minute
//! departure vectors, fixed timetables, and the two ablation schemes.
//!
//! The memetic variant is GA plus a hill climb on the elite. It approximates
//! a published memetic timetabling method rather than reproducing it.

pub mod ablation;
mod chromosome;
mod fitness;
mod ga;

pub use ablation::{SchemeOne, SchemeTwo, StationFrame};
pub use chromosome::{repair, Chromosome};
pub use fitness::{fitness, fitness_of_timetable, FitnessWeights};
pub use ga::{
    ga_optimize, memetic_optimize, write_fitness_trace, GaParams, SearchOutcome, TraceRow,
};
