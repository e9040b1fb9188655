use crate::emission::{
    apply_mask, sample_emission, tag_infectious, to_symbols, EventCounts, EventGenerator,
    TimedEvent,
};
use crate::error::Result;
use crate::exec::Execution;
use crate::rng::{stream, Domain, Stream};
use crate::scenario::{
    absorb_check, accumulate_dose, infection_decision, receiver_position, segment_sphere_entry,
    AbsorptionRecord, AgentOutcome, ApertureKind, DepositionRecord, DosePoint, DoseState,
    EventRecord, PlacedAperture, Scenario, Segment, SimulationResult,
};
use crate::transport::{
    AdaptiveStepper, Environment, JetField, Particle, ParticleState, WindowOutcome,
};
use crate::vec3::Vec3;

/// Tolerance when cutting the run duration into global steps.
const STEP_EPS: f64 = 1e-9;

struct Tracked {
    particle: Particle,
    transport_rng: Stream,
    absorption_rng: Stream,
    hint: f64,
    event: u64,
    source: usize,
}

enum Fate {
    Airborne,
    Deposited {
        point: Vec3,
        t: f64,
    },
    Absorbed {
        receiver: usize,
        aperture: ApertureKind,
        point: Vec3,
        t: f64,
    },
}

/// Apertures of one receiver at the current step, with a bounding sphere
/// used to skip it cheaply.
struct PlacedReceiver {
    agent: usize,
    center: Vec3,
    radius: f64,
    apertures: Vec<PlacedAperture>,
}

struct StepContext<'a> {
    env: &'a Environment,
    jets: &'a [JetField],
    stepper: &'a AdaptiveStepper,
    receivers: &'a [PlacedReceiver],
    prefilter: bool,
    t0: f64,
    t1: f64,
}

fn place_receivers(s: &Scenario, t: f64) -> Vec<PlacedReceiver> {
    s.agents
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.apertures.is_empty())
        .map(|(i, a)| {
            let base = receiver_position(a, t);
            let apertures: Vec<PlacedAperture> = a
                .apertures
                .iter()
                .map(|ap| PlacedAperture {
                    center: base + ap.offset,
                    radius: ap.radius,
                    gain: ap.gain,
                    kind: ap.kind,
                })
                .collect();
            let radius = a
                .apertures
                .iter()
                .map(|ap| ap.offset.norm() + ap.radius)
                .fold(0.0, f64::max);
            PlacedReceiver {
                agent: i,
                center: base,
                radius,
                apertures,
            }
        })
        .collect()
}

fn advance_one(tr: &mut Tracked, ctx: &StepContext<'_>) -> Result<Fate> {
    let start_t = ctx.t0.max(tr.particle.emitted_at);
    let start = tr.particle.position;
    let jet = &ctx.jets[tr.event as usize];
    let outcome = ctx.stepper.advance(
        &mut tr.particle,
        ctx.env,
        jet,
        start_t,
        ctx.t1,
        &mut tr.hint,
        &mut tr.transport_rng,
    )?;
    let (end, t_end) = match outcome {
        WindowOutcome::Airborne => (tr.particle.position, ctx.t1),
        WindowOutcome::Landed(l) => (l.point, l.time),
    };
    let segment = Segment {
        start,
        end,
        t_start: start_t,
        t_end,
    };

    let mut hits: Vec<(f64, usize, PlacedAperture)> = Vec::new();
    for r in ctx.receivers.iter().filter(|r| r.agent != tr.source) {
        if ctx.prefilter && segment_sphere_entry(start, end, r.center, r.radius).is_none() {
            continue;
        }
        for ap in &r.apertures {
            if let Some(s) = segment_sphere_entry(start, end, ap.center, ap.radius) {
                hits.push((s, r.agent, *ap));
            }
        }
    }
    hits.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.kind.cmp(&b.2.kind))
    });
    for (_, receiver, ap) in hits {
        if let Some(s) = absorb_check(&segment, &ap, &mut tr.absorption_rng) {
            let point = segment.point(s);
            tr.particle.transition(ParticleState::Absorbed)?;
            tr.particle.position = point;
            return Ok(Fate::Absorbed {
                receiver,
                aperture: ap.kind,
                point,
                t: segment.time(s),
            });
        }
    }
    Ok(match outcome {
        WindowOutcome::Airborne => Fate::Airborne,
        WindowOutcome::Landed(l) => {
            tr.particle.deposit_at(l.point)?;
            Fate::Deposited {
                point: l.point,
                t: l.time,
            }
        }
    })
}

/// Runs `s` with the default execution mode.
pub fn run(s: &Scenario) -> Result<SimulationResult> {
    run_with(s, Execution::default())
}

/// Runs `s`. The result depends only on the scenario and its seed, not on
/// `exec` or the number of worker threads.
pub fn run_with(s: &Scenario, exec: Execution) -> Result<SimulationResult> {
    s.validate()?;
    let seed = s.run.require_seed()?;
    let settings = &s.run;
    let stepper = AdaptiveStepper {
        tol: settings.tol,
        dt_max: settings.dt_max,
        dt_min: settings.dt_min,
    };
    stepper.validate()?;

    let mut generators = s
        .agents
        .iter()
        .map(|a| EventGenerator::new(a.events.clone(), a.infected))
        .collect::<Result<Vec<_>>>()?;
    let mut event_rngs: Vec<Stream> = s
        .agents
        .iter()
        .map(|a| stream(seed, Domain::Events, a.id as u64))
        .collect();
    let mut doses: Vec<DoseState> = s
        .agents
        .iter()
        .map(|a| DoseState::new(a.detection_threshold, a.infected))
        .collect();
    let mut traces: Vec<Vec<DosePoint>> = vec![Vec::new(); s.agents.len()];
    let mut infected_at: Vec<Option<f64>> = vec![None; s.agents.len()];

    let mut events: Vec<EventRecord> = Vec::new();
    let mut jets: Vec<JetField> = Vec::new();
    let mut airborne: Vec<Tracked> = Vec::new();
    let mut depositions: Vec<DepositionRecord> = Vec::new();
    let mut absorptions: Vec<AbsorptionRecord> = Vec::new();
    let mut next_particle_id: u64 = 0;

    let dt = settings.dt_global;
    let n_steps = ((settings.duration / dt) - STEP_EPS).ceil().max(0.0) as u64;
    let mut end_time = settings.duration;

    for step in 0..n_steps {
        let t0 = step as f64 * dt;
        let t1 = ((step + 1) as f64 * dt).min(settings.duration);
        if airborne.is_empty() && generators.iter().all(EventGenerator::exhausted) {
            end_time = t0;
            break;
        }

        for (ai, agent) in s.agents.iter().enumerate() {
            let timed: Vec<TimedEvent> = generators[ai].advance_to(t1, &mut event_rngs[ai]);
            for ev in timed {
                let event_id = events.len() as u64;
                let base = receiver_position(agent, ev.t);
                let origin = base + Vec3::Z * agent.mouth_height;
                let mut batch = sample_emission(
                    ev.kind,
                    &s.profile,
                    origin,
                    agent.facing_unit(),
                    &mut stream(seed, Domain::Emission, event_id),
                )?;
                tag_infectious(
                    &mut batch.particles,
                    settings.virion_concentration,
                    agent.infected,
                    &mut stream(seed, Domain::Infectious, event_id),
                )?;
                let blocked = match &agent.mask {
                    Some(mask) => apply_mask(
                        &mut batch.particles,
                        &mut batch.jet,
                        mask,
                        &mut stream(seed, Domain::Mask, event_id),
                    )?,
                    None => 0,
                };
                let emitted = batch.particles.len() as u64;
                let infectious = batch.particles.iter().filter(|p| p.infectious).count() as u64;
                jets.push(batch.jet);
                let first_particle_id = next_particle_id;
                for (k, mut p) in batch.particles.into_iter().enumerate() {
                    p.id = first_particle_id + k as u64;
                    p.emitted_at = ev.t;
                    if p.is_airborne() {
                        airborne.push(Tracked {
                            transport_rng: stream(seed, Domain::Transport, p.id),
                            absorption_rng: stream(seed, Domain::Absorption, p.id),
                            particle: p,
                            hint: settings.dt_max,
                            event: event_id,
                            source: ai,
                        });
                    }
                }
                next_particle_id += emitted;
                events.push(EventRecord {
                    event_id,
                    agent_id: agent.id,
                    kind: ev.kind,
                    t: ev.t,
                    emitter_position: base,
                    first_particle_id,
                    emitted,
                    infectious,
                    blocked,
                    deposited: 0,
                    absorbed: 0,
                    airborne_at_end: 0,
                    omitted_draws: batch.omitted_draws,
                });
            }
        }

        if airborne.is_empty() {
            continue;
        }
        let receivers = place_receivers(s, t1);
        let ctx = StepContext {
            env: &s.environment,
            jets: &jets,
            stepper: &stepper,
            receivers: &receivers,
            prefilter: settings.absorption_prefilter,
            t0,
            t1,
        };
        let fates = exec.map_mut(&mut airborne, |tr| advance_one(tr, &ctx));

        let mut step_absorptions: Vec<(AbsorptionRecord, usize)> = Vec::new();
        for (tr, fate) in airborne.iter().zip(fates) {
            let p = &tr.particle;
            match fate? {
                Fate::Airborne => {}
                Fate::Deposited { point, t } => {
                    events[tr.event as usize].deposited += 1;
                    depositions.push(DepositionRecord {
                        particle_id: p.id,
                        event_id: tr.event,
                        x: point.x,
                        y: point.y,
                        t,
                        diameter: p.diameter,
                        infectious: p.infectious,
                    });
                }
                Fate::Absorbed {
                    receiver,
                    aperture,
                    point,
                    t,
                } => {
                    events[tr.event as usize].absorbed += 1;
                    step_absorptions.push((
                        AbsorptionRecord {
                            particle_id: p.id,
                            event_id: tr.event,
                            receiver_id: s.agents[receiver].id,
                            aperture,
                            position: point,
                            t,
                            diameter: p.diameter,
                            infectious: p.infectious,
                        },
                        receiver,
                    ));
                }
            }
        }
        step_absorptions.sort_by(|a, b| {
            a.0.t
                .total_cmp(&b.0.t)
                .then(a.0.particle_id.cmp(&b.0.particle_id))
        });
        for (rec, receiver) in step_absorptions {
            let before = doses[receiver].dose;
            accumulate_dose(&mut doses[receiver], rec.infectious);
            if doses[receiver].dose != before {
                traces[receiver].push(DosePoint {
                    t: rec.t,
                    dose: doses[receiver].dose,
                });
            }
            let was_infected = doses[receiver].infected;
            if infection_decision(&mut doses[receiver]) && !was_infected {
                infected_at[receiver] = Some(rec.t);
            }
            absorptions.push(rec);
        }
        airborne.retain(|tr| tr.particle.is_airborne());
    }

    for tr in &airborne {
        events[tr.event as usize].airborne_at_end += 1;
    }
    depositions.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.particle_id.cmp(&b.particle_id)));

    let counts: Vec<EventCounts> = events
        .iter()
        .map(|e| EventCounts {
            kind: e.kind,
            timestamp: e.t,
            particle_count: e.emitted,
            infectious_count: e.infectious,
        })
        .collect();
    let symbols = to_symbols(&counts, &settings.symbol_thresholds)?;

    let outcomes = s
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| AgentOutcome {
            agent_id: a.id,
            initially_infected: a.infected,
            threshold: a.detection_threshold,
            dose: doses[i].dose,
            infected: doses[i].infected,
            infected_at: infected_at[i],
            dose_trace: std::mem::take(&mut traces[i]),
        })
        .collect();

    Ok(SimulationResult {
        depositions,
        absorptions,
        events,
        outcomes,
        symbols,
        end_time,
    })
}
