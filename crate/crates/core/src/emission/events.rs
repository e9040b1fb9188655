//! Respiratory event processes: deterministic breathing, two-state Markov
//! speech and per-step Bernoulli coughs and sneezes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::emission::RespiratoryEventKind;
use crate::error::{Error, Result};

/// Tolerance for placing a process tick inside a time window.
const TICK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechState {
    Silent,
    Talking,
}

/// Discrete-time two-state speaking model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeakingMarkov {
    pub p_silence_to_talk: f64,
    pub p_talk_to_silence: f64,
    pub state: SpeechState,
    /// Step length, s.
    pub step: f64,
}

impl Default for SpeakingMarkov {
    fn default() -> Self {
        SpeakingMarkov {
            p_silence_to_talk: 0.2,
            p_talk_to_silence: 0.1,
            state: SpeechState::Silent,
            step: 1.0,
        }
    }
}

impl SpeakingMarkov {
    pub fn validate(&self) -> Result<()> {
        check_probability("p_silence_to_talk", self.p_silence_to_talk)?;
        check_probability("p_talk_to_silence", self.p_talk_to_silence)?;
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("step", "must be positive"));
        }
        Ok(())
    }

    /// Row-stochastic transition matrix, rows/columns ordered (Silent, Talking).
    pub fn transition_matrix(&self) -> [[f64; 2]; 2] {
        [
            [1.0 - self.p_silence_to_talk, self.p_silence_to_talk],
            [self.p_talk_to_silence, 1.0 - self.p_talk_to_silence],
        ]
    }

    /// Long-run fraction of steps spent talking.
    pub fn stationary_talking_fraction(&self) -> Option<f64> {
        let denom = self.p_silence_to_talk + self.p_talk_to_silence;
        (denom > 0.0).then(|| self.p_silence_to_talk / denom)
    }
}

/// One Markov transition. The caller emits a speech frame iff the returned
/// state is `Talking`.
pub fn speaking_transition<R: Rng + ?Sized>(m: SpeakingMarkov, rng: &mut R) -> SpeakingMarkov {
    let u: f64 = rng.random();
    let state = match m.state {
        SpeechState::Silent if u < m.p_silence_to_talk => SpeechState::Talking,
        SpeechState::Talking if u < m.p_talk_to_silence => SpeechState::Silent,
        s => s,
    };
    SpeakingMarkov { state, ..m }
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(
            name,
            format!("probability must lie in [0, 1], got {p}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledEvent {
    pub t: f64,
    pub kind: RespiratoryEventKind,
}

/// Per-agent event-process parameters.
///
/// Cough and sneeze probabilities are per Bernoulli step; when unset they
/// default by infection status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventModel {
    /// Breaths per minute; 0 disables breathing.
    pub breath_rate_per_min: f64,
    pub speech: SpeakingMarkov,
    /// Length of a cough/sneeze Bernoulli step, s.
    pub bernoulli_step: f64,
    pub cough_probability: Option<f64>,
    pub sneeze_probability: Option<f64>,
    /// Events forced at fixed times, in addition to the stochastic ones.
    pub scheduled: Vec<ScheduledEvent>,
}

impl Default for EventModel {
    fn default() -> Self {
        EventModel {
            breath_rate_per_min: 14.0,
            speech: SpeakingMarkov::default(),
            bernoulli_step: 0.1,
            cough_probability: None,
            sneeze_probability: None,
            scheduled: Vec::new(),
        }
    }
}

pub const COUGH_PROBABILITY_HEALTHY: f64 = 1e-5;
pub const COUGH_PROBABILITY_INFECTED: f64 = 1e-3;
pub const SNEEZE_PROBABILITY_HEALTHY: f64 = 1e-6;
pub const SNEEZE_PROBABILITY_INFECTED: f64 = 1e-4;

impl EventModel {
    /// Only the scheduled events; every stochastic process is off.
    pub fn scripted(scheduled: Vec<ScheduledEvent>) -> Self {
        EventModel {
            breath_rate_per_min: 0.0,
            speech: SpeakingMarkov {
                p_silence_to_talk: 0.0,
                state: SpeechState::Silent,
                ..SpeakingMarkov::default()
            },
            cough_probability: Some(0.0),
            sneeze_probability: Some(0.0),
            scheduled,
            ..EventModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.breath_rate_per_min >= 0.0 && self.breath_rate_per_min.is_finite()) {
            return Err(Error::config("breath_rate_per_min", "must be non-negative"));
        }
        self.speech
            .validate()
            .map_err(|e| prefix_path(e, "speech"))?;
        if !(self.bernoulli_step > 0.0 && self.bernoulli_step.is_finite()) {
            return Err(Error::config("bernoulli_step", "must be positive"));
        }
        if let Some(p) = self.cough_probability {
            check_probability("cough_probability", p)?;
        }
        if let Some(p) = self.sneeze_probability {
            check_probability("sneeze_probability", p)?;
        }
        for (i, ev) in self.scheduled.iter().enumerate() {
            if !(ev.t >= 0.0 && ev.t.is_finite()) {
                return Err(Error::config(
                    format!("scheduled[{i}].t"),
                    "must be non-negative",
                ));
            }
        }
        Ok(())
    }

    pub fn cough_probability(&self, infected: bool) -> f64 {
        self.cough_probability.unwrap_or(if infected {
            COUGH_PROBABILITY_INFECTED
        } else {
            COUGH_PROBABILITY_HEALTHY
        })
    }

    pub fn sneeze_probability(&self, infected: bool) -> f64 {
        self.sneeze_probability.unwrap_or(if infected {
            SNEEZE_PROBABILITY_INFECTED
        } else {
            SNEEZE_PROBABILITY_HEALTHY
        })
    }

    fn speech_enabled(&self) -> bool {
        self.speech.p_silence_to_talk > 0.0 || self.speech.state == SpeechState::Talking
    }
}

pub(crate) fn prefix_path(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { path, message } => Error::Config {
            path: format!("{prefix}.{path}"),
            message,
        },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub t: f64,
    pub kind: RespiratoryEventKind,
}

/// Stateful event source of one agent.
///
/// Each process ticks on its own integer-indexed grid (`k * period`), so
/// event counts over a horizon do not depend on how the horizon is cut into
/// windows.
#[derive(Debug, Clone)]
pub struct EventGenerator {
    model: EventModel,
    infected: bool,
    now: f64,
    breath_tick: u64,
    speech_tick: u64,
    bernoulli_tick: u64,
    speech: SpeakingMarkov,
    scheduled: Vec<ScheduledEvent>,
    scheduled_cursor: usize,
}

impl EventGenerator {
    pub fn new(model: EventModel, infected: bool) -> Result<Self> {
        model.validate()?;
        let mut scheduled = model.scheduled.clone();
        scheduled.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(EventGenerator {
            speech: model.speech,
            model,
            infected,
            now: 0.0,
            breath_tick: 0,
            speech_tick: 0,
            bernoulli_tick: 0,
            scheduled,
            scheduled_cursor: 0,
        })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn speech_state(&self) -> SpeechState {
        self.speech.state
    }

    /// True if no event can occur after the current time.
    pub fn exhausted(&self) -> bool {
        self.scheduled_cursor >= self.scheduled.len()
            && self.model.breath_rate_per_min == 0.0
            && !self.model.speech_enabled()
            && self.model.cough_probability(self.infected) == 0.0
            && self.model.sneeze_probability(self.infected) == 0.0
    }

    /// Events in `[now, now + dt)`.
    pub fn next_events<R: Rng + ?Sized>(
        &mut self,
        dt: f64,
        rng: &mut R,
    ) -> Result<Vec<TimedEvent>> {
        if !(dt > 0.0) {
            return Err(Error::invalid("event window must be positive"));
        }
        Ok(self.advance_to(self.now + dt, rng))
    }

    /// Events in `[now, t_end)`, ordered by time; advances `now` to `t_end`.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, t_end: f64, rng: &mut R) -> Vec<TimedEvent> {
        let mut events = Vec::new();
        let limit = t_end - TICK_EPS;

        while let Some(ev) = self.scheduled.get(self.scheduled_cursor) {
            if ev.t >= limit {
                break;
            }
            events.push(TimedEvent {
                t: ev.t.max(self.now),
                kind: ev.kind,
            });
            self.scheduled_cursor += 1;
        }

        if self.model.breath_rate_per_min > 0.0 {
            loop {
                let t = self.breath_tick as f64 * 60.0 / self.model.breath_rate_per_min;
                if t >= limit {
                    break;
                }
                events.push(TimedEvent {
                    t,
                    kind: RespiratoryEventKind::Breath,
                });
                self.breath_tick += 1;
            }
        }

        loop {
            let t = self.speech_tick as f64 * self.speech.step;
            if t >= limit {
                break;
            }
            self.speech = speaking_transition(self.speech, rng);
            if self.speech.state == SpeechState::Talking {
                events.push(TimedEvent {
                    t,
                    kind: RespiratoryEventKind::SpeechFrame,
                });
            }
            self.speech_tick += 1;
        }

        let p_cough = self.model.cough_probability(self.infected);
        let p_sneeze = self.model.sneeze_probability(self.infected);
        loop {
            let t = self.bernoulli_tick as f64 * self.model.bernoulli_step;
            if t >= limit {
                break;
            }
            // both draws are taken every step so the streams stay aligned
            let cough = rng.random::<f64>() < p_cough;
            let sneeze = rng.random::<f64>() < p_sneeze;
            if cough {
                events.push(TimedEvent {
                    t,
                    kind: RespiratoryEventKind::Cough,
                });
            }
            if sneeze {
                events.push(TimedEvent {
                    t,
                    kind: RespiratoryEventKind::Sneeze,
                });
            }
            self.bernoulli_tick += 1;
        }

        events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.kind.cmp(&b.kind)));
        self.now = t_end;
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn count(events: &[TimedEvent], kind: RespiratoryEventKind) -> usize {
        events.iter().filter(|e| e.kind == kind).count()
    }

    #[test]
    fn breathing_is_deterministic() {
        let model = EventModel {
            breath_rate_per_min: 14.0,
            ..EventModel::scripted(vec![])
        };
        let mut g = EventGenerator::new(model, false).unwrap();
        let mut rng = stream(1, Domain::Events, 0);
        let mut all = Vec::new();
        for _ in 0..6000 {
            all.extend(g.next_events(0.01, &mut rng).unwrap());
        }
        assert_eq!(count(&all, RespiratoryEventKind::Breath), 14);
        assert_eq!(all.len(), 14);
    }

    #[test]
    fn windowing_does_not_change_counts() {
        let model = EventModel {
            breath_rate_per_min: 14.0,
            ..EventModel::scripted(vec![])
        };
        let mut a = EventGenerator::new(model.clone(), false).unwrap();
        let mut b = EventGenerator::new(model, false).unwrap();
        let mut rng = stream(1, Domain::Events, 0);
        let one = a.advance_to(60.0, &mut rng);
        let mut many = Vec::new();
        for k in 1..=600 {
            many.extend(b.advance_to(k as f64 * 0.1, &mut rng));
        }
        assert_eq!(one, many);
    }

    #[test]
    fn zero_cough_probability_never_coughs() {
        let model = EventModel {
            cough_probability: Some(0.0),
            ..EventModel::default()
        };
        let mut g = EventGenerator::new(model, true).unwrap();
        let mut rng = stream(2, Domain::Events, 0);
        let events = g.advance_to(3600.0, &mut rng);
        assert_eq!(count(&events, RespiratoryEventKind::Cough), 0);
    }

    #[test]
    fn infected_cough_more_by_default() {
        let m = EventModel::default();
        assert!(m.cough_probability(true) > m.cough_probability(false));
        assert!(m.sneeze_probability(true) > m.sneeze_probability(false));
    }

    #[test]
    fn bad_probability_is_config_error() {
        let model = EventModel {
            cough_probability: Some(1.5),
            ..EventModel::default()
        };
        assert!(matches!(
            EventGenerator::new(model, true),
            Err(Error::Config { ref path, .. }) if path == "cough_probability"
        ));
        let model = EventModel {
            speech: SpeakingMarkov {
                p_talk_to_silence: -0.1,
                ..SpeakingMarkov::default()
            },
            ..EventModel::default()
        };
        assert!(matches!(
            model.validate(),
            Err(Error::Config { ref path, .. }) if path == "speech.p_talk_to_silence"
        ));
    }

    #[test]
    fn talking_is_absorbing_without_exit_probability() {
        let mut m = SpeakingMarkov {
            p_silence_to_talk: 0.5,
            p_talk_to_silence: 0.0,
            state: SpeechState::Talking,
            step: 1.0,
        };
        let mut rng = stream(3, Domain::Events, 0);
        for _ in 0..10_000 {
            m = speaking_transition(m, &mut rng);
            assert_eq!(m.state, SpeechState::Talking);
        }
    }

    #[test]
    fn rows_sum_to_one() {
        for p in [0.0, 0.1, 0.5, 1.0] {
            for q in [0.0, 0.3, 1.0] {
                let m = SpeakingMarkov {
                    p_silence_to_talk: p,
                    p_talk_to_silence: q,
                    ..SpeakingMarkov::default()
                };
                for row in m.transition_matrix() {
                    assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    fn talking_fraction(p: f64, q: f64, seed: u64) -> f64 {
        let mut m = SpeakingMarkov {
            p_silence_to_talk: p,
            p_talk_to_silence: q,
            state: SpeechState::Silent,
            step: 1.0,
        };
        let mut rng = stream(seed, Domain::Events, 0);
        let n = 100_000;
        let mut talking = 0usize;
        for _ in 0..n {
            m = speaking_transition(m, &mut rng);
            talking += (m.state == SpeechState::Talking) as usize;
        }
        talking as f64 / n as f64
    }

    #[test]
    fn stationary_fraction() {
        assert!((talking_fraction(0.2, 0.1, 4) - 2.0 / 3.0).abs() < 0.02);
        assert!((talking_fraction(0.3, 0.3, 5) - 0.5).abs() < 0.02);
        let grid = [(0.1, 0.1), (0.1, 0.5), (0.5, 0.1), (0.2, 0.2), (0.5, 0.5)];
        for (i, (p, q)) in grid.into_iter().enumerate() {
            let expect = p / (p + q);
            assert!((talking_fraction(p, q, 10 + i as u64) - expect).abs() < 0.02);
        }
    }

    #[test]
    fn generator_reproducible() {
        let run = || {
            let mut g = EventGenerator::new(EventModel::default(), true).unwrap();
            let mut rng = stream(9, Domain::Events, 1);
            g.advance_to(600.0, &mut rng)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn scripted_generator_exhausts() {
        let mut g = EventGenerator::new(
            EventModel::scripted(vec![ScheduledEvent {
                t: 0.5,
                kind: RespiratoryEventKind::Cough,
            }]),
            true,
        )
        .unwrap();
        let mut rng = stream(0, Domain::Events, 0);
        assert!(!g.exhausted());
        assert!(g.advance_to(0.5, &mut rng).is_empty());
        let ev = g.advance_to(0.51, &mut rng);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].t, 0.5);
        assert!(g.exhausted());
    }
}
