//! The structured run configuration (TOML).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use headwayrl::agent::AgentConfig;
use headwayrl::baselines::{FitnessWeights, GaParams};
use headwayrl::line_model::{LineConfig, LineSpec, TravelTimeTable};
use headwayrl::od_data::{generate_synthetic, load_demand, SyntheticSpec};
use headwayrl::{presets, DemandSet, RewardParams};
use serde::{Deserialize, Serialize};

/// Everything a command needs besides its own flags.
///
/// `seed` is the single source of randomness: it is copied into the agent
/// and GA sections and seeds synthetic demand and resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub line: LineSpec,
    pub demand: DemandConfig,
    pub synthetic: SyntheticSpec,
    pub agent: AgentConfig,
    pub reward: RewardParams,
    pub ga: GaParams,
    pub fitness: FitnessWeights,
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
    pub ablate: AblateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            line: presets::reference_line_spec(),
            demand: DemandConfig::default(),
            synthetic: presets::reference_demand_spec(),
            agent: presets::desk_agent(),
            reward: RewardParams::default(),
            ga: GaParams::default(),
            fitness: FitnessWeights::default(),
            scenario: ScenarioConfig::default(),
            sweep: SweepConfig::default(),
            ablate: AblateConfig::default(),
        }
    }
}

/// Where demand comes from when a command gets no `--demand` flag.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandConfig {
    /// Demand CSV; when absent the `[synthetic]` spec is sampled with `seed`.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Arrivals inside `[start, end)` move under a shift.
    pub shift_window: (f64, f64),
    /// Peak shifts in minutes; negative values advance the peak.
    pub shifts: Vec<f64>,
    pub rates: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            shift_window: (960.0, 1140.0),
            shifts: vec![-180.0, -120.0, -60.0, 30.0, 60.0, 90.0, 120.0, 150.0],
            rates: vec![0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub omegas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub repeats: usize,
    /// Trailing training episodes behind the ND standard deviation.
    pub tail: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omegas: vec![
                0.0,
                1.0 / 5000.0,
                1.0 / 2000.0,
                1.0 / 500.0,
                1.0 / 200.0,
                1.0 / 50.0,
            ],
            gammas: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            repeats: 3,
            tail: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    pub variants: Vec<String>,
    /// Trailing training episodes behind the statistics table.
    pub tail: usize,
}

impl Default for AblateConfig {
    fn default() -> Self {
        Self {
            variants: [
                "full",
                "drop-feature:x1x2",
                "drop-feature:x3",
                "drop-feature:x4",
                "drop-feature:x5",
                "drop-feature:x6",
            ]
            .map(String::from)
            .to_vec(),
            tail: 20,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Parses a config; keys it leaves out keep their [`Default`] values,
    /// table by table.
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let mut base = toml::Table::try_from(Self::default())?;
        merge(&mut base, text.parse::<toml::Table>()?);
        Ok(base.try_into()?)
    }

    /// Applies the seed override and pushes the seed into every section.
    pub fn resolved(mut self, seed: Option<u64>) -> anyhow::Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.agent.seed = self.seed;
        self.ga.seed = self.seed;
        self.agent.validate()?;
        self.ga.validate()?;
        if self.sweep.repeats == 0 {
            bail!("sweep.repeats must be positive");
        }
        Ok(self)
    }

    pub fn line(&self) -> anyhow::Result<(LineConfig, TravelTimeTable)> {
        Ok(self.line.build()?)
    }

    /// Demand from `path`, else the configured file, else synthetic.
    pub fn demand(&self, path: Option<&Path>, line: &LineConfig) -> anyhow::Result<DemandSet> {
        match path.or(self.demand.path.as_deref()) {
            Some(p) => Ok(load_demand(p, Some(line.stations))
                .with_context(|| format!("loading demand {}", p.display()))?),
            None => {
                if self.synthetic.stations != line.stations {
                    bail!(
                        "synthetic demand has {} stations, line has {}",
                        self.synthetic.stations,
                        line.stations
                    );
                }
                Ok(generate_synthetic(&self.synthetic, self.seed)?)
            }
        }
    }

    /// Files the configuration itself reads.
    pub fn input_files(&self) -> Vec<PathBuf> {
        self.demand.path.iter().cloned().collect()
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), c);
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let c = RunConfig::from_toml("seed = 4\n[reward]\nomega = 0.001\n[agent]\nepisodes = 3\n")
            .unwrap();
        assert_eq!(c.reward.omega, 0.001);
        assert_eq!(c.reward.beta, RewardParams::default().beta);
        assert_eq!(c.agent.episodes, 3);
        assert_eq!(c.agent.hidden, presets::desk_agent().hidden);
        let r = c.resolved(Some(9)).unwrap();
        assert_eq!((r.seed, r.agent.seed, r.ga.seed), (9, 9, 9));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[agent]\nepsilon_start = 1.0\n").is_err());
        assert!(RunConfig::from_toml("colour = 1\n").is_err());
    }
}
