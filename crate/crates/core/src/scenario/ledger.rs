use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::SimulationResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLedger {
    pub event_id: u64,
    pub emitted: u64,
    pub deposited: u64,
    pub absorbed: u64,
    pub blocked: u64,
    pub airborne_at_end: u64,
}

/// Particle accounting of a run: every emitted particle ends in exactly one
/// terminal category or is still airborne.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct LedgerReport {
    pub emitted: u64,
    pub deposited: u64,
    pub absorbed: u64,
    pub blocked: u64,
    pub airborne_at_end: u64,
    pub events: Vec<EventLedger>,
}

/// Verifies `emitted = deposited + absorbed + blocked + airborne_at_end` per
/// event and in total, and that the per-event tallies agree with the record
/// lists.
pub fn ledger_check(r: &SimulationResult) -> Result<LedgerReport> {
    let mut deposited = vec![0u64; r.events.len()];
    let mut absorbed = vec![0u64; r.events.len()];
    for d in &r.depositions {
        *deposited.get_mut(d.event_id as usize).ok_or_else(|| {
            Error::Ledger(format!("deposition of unknown event {}", d.event_id))
        })? += 1;
    }
    for a in &r.absorptions {
        *absorbed.get_mut(a.event_id as usize).ok_or_else(|| {
            Error::Ledger(format!("absorption of unknown event {}", a.event_id))
        })? += 1;
    }

    let mut report = LedgerReport::default();
    for (i, e) in r.events.iter().enumerate() {
        if e.event_id != i as u64 {
            return Err(Error::Ledger(format!(
                "event {i} carries id {}",
                e.event_id
            )));
        }
        if e.deposited != deposited[i] || e.absorbed != absorbed[i] {
            return Err(Error::Ledger(format!(
                "event {i}: tallies ({} deposited, {} absorbed) disagree with records ({}, {})",
                e.deposited, e.absorbed, deposited[i], absorbed[i]
            )));
        }
        let accounted = e.deposited + e.absorbed + e.blocked + e.airborne_at_end;
        if accounted != e.emitted {
            return Err(Error::Ledger(format!(
                "event {i}: emitted {} but accounted {accounted}",
                e.emitted
            )));
        }
        report.emitted += e.emitted;
        report.deposited += e.deposited;
        report.absorbed += e.absorbed;
        report.blocked += e.blocked;
        report.airborne_at_end += e.airborne_at_end;
        report.events.push(EventLedger {
            event_id: e.event_id,
            emitted: e.emitted,
            deposited: e.deposited,
            absorbed: e.absorbed,
            blocked: e.blocked,
            airborne_at_end: e.airborne_at_end,
        });
    }
    if report.deposited != r.depositions.len() as u64
        || report.absorbed != r.absorptions.len() as u64
    {
        return Err(Error::Ledger("record counts disagree with totals".into()));
    }
    Ok(report)
}
