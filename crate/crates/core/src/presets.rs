//! Ready-made desk-scale instances.

use crate::agent::AgentConfig;
use crate::line_model::{LineConfig, LineSpec, TravelBand, TravelTimeTable};
use crate::od_data::{OdProfile, Peak, SyntheticSpec};
use crate::Result;

/// 10-station line served 06:00–22:00, 2.5 minutes per segment.
pub fn reference_line_spec() -> LineSpec {
    let mut config = LineConfig::new(10, 360, 1320);
    config.line_id = "desk".into();
    LineSpec {
        config,
        travel_bands: vec![TravelBand {
            start: 0,
            segments: vec![2.5],
        }],
    }
}

pub fn reference_line() -> Result<(LineConfig, TravelTimeTable)> {
    reference_line_spec().build()
}

/// About 2,000 riders with morning and evening peaks, boarding mostly near
/// the head of the line and alighting near its end.
pub fn reference_demand_spec() -> SyntheticSpec {
    let mut spec = SyntheticSpec::uniform(10, 2000, 360.0, 1310.0);
    spec.baseline = 0.25;
    spec.peaks = vec![
        Peak {
            center: 480.0,
            width: 45.0,
            weight: 1.0,
        },
        Peak {
            center: 1050.0,
            width: 55.0,
            weight: 0.8,
        },
    ];
    spec.od_profile = OdProfile {
        origin: vec![3.0, 3.0, 2.0, 2.0, 1.5, 1.0, 1.0, 0.5, 0.5],
        destination: vec![0.5, 0.5, 1.0, 1.0, 1.5, 2.0, 2.0, 3.0, 3.0],
    };
    spec.line_id = "desk".into();
    spec
}

/// Small network and short schedule for quick runs.
pub fn desk_agent() -> AgentConfig {
    AgentConfig {
        hidden: vec![32, 32],
        learning_rate: 0.01,
        episodes: 60,
        ..AgentConfig::default()
    }
}
