use serde::{Deserialize, Serialize};

use crate::emission::RespiratoryEventKind;
use crate::error::{Error, Result};

/// Counts of one emission event, the input to symbol mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventCounts {
    pub kind: RespiratoryEventKind,
    pub timestamp: f64,
    pub particle_count: u64,
    pub infectious_count: u64,
}

/// Variable-concentration shift keying symbol produced by one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovcskSymbol {
    pub event_kind: RespiratoryEventKind,
    /// Index of the threshold bin holding `particle_count`.
    pub concentration_level: usize,
    pub particle_count: u64,
    pub infectious_count: u64,
    pub timestamp: f64,
}

/// Level of `count`: the number of thresholds at or below it.
pub fn concentration_level(count: u64, thresholds: &[u64]) -> usize {
    thresholds.partition_point(|&th| th <= count)
}

/// Maps each event to one symbol. Thresholds must be strictly increasing.
pub fn to_symbols(events: &[EventCounts], thresholds: &[u64]) -> Result<Vec<MovcskSymbol>> {
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(
            "symbol_thresholds",
            "thresholds must be strictly increasing",
        ));
    }
    events
        .iter()
        .map(|e| {
            if e.infectious_count > e.particle_count {
                return Err(Error::invalid("infectious count exceeds particle count"));
            }
            Ok(MovcskSymbol {
                event_kind: e.kind,
                concentration_level: concentration_level(e.particle_count, thresholds),
                particle_count: e.particle_count,
                infectious_count: e.infectious_count,
                timestamp: e.timestamp,
            })
        })
        .collect()
}
