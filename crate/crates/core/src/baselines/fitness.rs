use serde::{Deserialize, Serialize};

use super::Chromosome;
use crate::line_model::{LineConfig, TravelTimeTable};
use crate::od_data::DemandSet;
use crate::simulator::{evaluate_timetable, Evaluation, Timetable};
use crate::Result;

/// Weights of the timetable-search objective, in capacity units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessWeights {
    /// Per-bucket |provided − consumed| capacity mismatch.
    pub w_gap: f64,
    pub w_nsp: f64,
    pub w_nd: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self {
            w_gap: 1.0,
            w_nsp: 5.0,
            w_nd: 1.0,
        }
    }
}

impl FitnessWeights {
    /// Objective value of an already evaluated timetable. Lower is better.
    pub fn score(&self, eval: &Evaluation) -> f64 {
        let gap: f64 = eval
            .capacity_series
            .iter()
            .map(|b| (b.provided - b.consumed).abs())
            .sum();
        gap * self.w_gap + eval.metrics.nsp as f64 * self.w_nsp + eval.metrics.nd as f64 * self.w_nd
    }
}

/// Objective value of a (repaired) chromosome. Lower is better.
pub fn fitness(
    chrom: &Chromosome,
    demand: &DemandSet,
    line: &LineConfig,
    tt: &TravelTimeTable,
    weights: &FitnessWeights,
) -> Result<f64> {
    fitness_of_timetable(&chrom.to_timetable(), demand, line, tt, weights)
}

pub fn fitness_of_timetable(
    timetable: &Timetable,
    demand: &DemandSet,
    line: &LineConfig,
    tt: &TravelTimeTable,
    weights: &FitnessWeights,
) -> Result<f64> {
    Ok(weights.score(&evaluate_timetable(demand, line, tt, timetable)?))
}
