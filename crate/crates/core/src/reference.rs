//! Bundled reference scenario values.
//!
//! Seven service classes with equal mix weights, a 120 s mean call duration
//! and a 240 s mean cell dwell time. Weights are an equal-split default; the
//! class set gives a mean per-call demand of 66 kbit/s.

use crate::traffic::{CellParameters, TrafficClass, TrafficMix};

/// Mean call duration at full allocation, seconds.
pub const DEFAULT_CALL_DURATION_S: f64 = 120.0;
/// Mean cell dwell time, seconds.
pub const DEFAULT_DWELL_TIME_S: f64 = 240.0;

/// The seven-class reference mix with equal weights.
pub fn reference_mix() -> TrafficMix<f64> {
    let spec: [(&str, f64, f64, f64); 7] = [
        ("conversational-voice", 25.0, 0.0, 0.0),
        ("conversational-video", 128.0, 0.0, 0.0),
        ("real-time-gaming", 56.0, 0.0, 0.0),
        ("buffered-streaming", 128.0, 0.2, 0.6),
        ("voice-messaging", 13.0, 0.2, 0.3),
        ("web-browsing", 56.0, 0.2, 0.5),
        ("background", 56.0, 0.5, 0.9),
    ];
    TrafficMix {
        classes: spec
            .iter()
            .map(|&(n, b, gn, gh)| TrafficClass {
                name: n.into(),
                weight: 1.0 / 7.0,
                bandwidth_req: b,
                gamma_new: gn,
                gamma_handover: gh,
            })
            .collect(),
    }
}

/// Handover-to-new arrival rate ratio used by the reference sweep.
pub const REFERENCE_HANDOVER_RATIO: f64 = 0.5;

/// New-call rate grid of the reference sweep, spanning light load to roughly
/// twice the saturation point of the 5000 kbit/s cell.
pub fn reference_sweep_grid() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0, 1.1, 1.25]
}

/// Moderate-load grid point used for the simulator/chain comparison.
pub const REFERENCE_MODERATE_LAMBDA_NEW: f64 = 0.5;

/// Heavy-load grid point used for the dropping-probability comparison.
pub const REFERENCE_HEAVY_LAMBDA_NEW: f64 = 1.0;

/// Reference cell: 5000 kbit/s capacity with the given arrival rates.
pub fn reference_cell(lambda_new: f64, lambda_handover: f64) -> CellParameters<f64> {
    CellParameters {
        capacity: 5000.0,
        lambda_new,
        lambda_handover,
        completion_rate: 1.0 / DEFAULT_CALL_DURATION_S,
        dwell_rate: 1.0 / DEFAULT_DWELL_TIME_S,
    }
}
