//! End-to-end acceptance checks. All criteria run sequentially in a single
//! test so their runtimes are measured without competing test threads; each
//! prints one PASS/FAIL line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use aerocomm::analysis::{ks_critical, ks_statistic, summary_metrics, SummaryOptions};
use aerocomm::emission::{
    sample_from_cdf, speaking_transition, speed_cdf_from_distance_sample, EmpiricalCdf,
    EventGenerator, EventModel, Mask, RespiratoryEventKind, SpeakingMarkov, SpeechState,
};
use aerocomm::io::{load_config, load_empirical_csv, Config, DiameterConfig, SpeedConfig, Unit};
use aerocomm::rng::{stream, Domain};
use aerocomm::scenario::{ledger_check, run, Agent, Scenario};
use aerocomm::transport::{step_adaptive, Environment, JetField, Particle, WATER_DENSITY};
use aerocomm::Vec3;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete, DiscreteCDF};

type Outcome = Result<String, String>;

/// Name, check and wall-clock budget of one criterion.
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aerocomm"))
}

fn analytic_range() -> Outcome {
    let out = bin()
        .args(["dmax", "--v", "5", "--h0", "1.64"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("exit status {}", out.status)
    })?;
    let text = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let d: f64 = text
        .parse()
        .map_err(|_| format!("unparsable output `{text}`"))?;
    ensure((d - 2.890).abs() <= 0.005, || format!("dmax = {d}"))?;
    Ok(format!("dmax prints {text} m (2.890 ± 0.005)"))
}

fn integrator_oracle() -> Outcome {
    let env = Environment::ballistic();
    let jet = JetField::still();
    let mut p = Particle::new(
        0,
        Vec3::new(0.0, 0.0, 1.64),
        Vec3::new(5.0, 0.0, 0.0),
        1e-4,
        WATER_DENSITY,
    );
    let mut rng = stream(0, Domain::Transport, 0);
    let mut t = 0.0;
    while p.is_airborne() {
        let (q, dt) =
            step_adaptive(&p, &env, &jet, t, 0.01, 1e-6, &mut rng).map_err(|e| e.to_string())?;
        p = q;
        t += dt;
    }
    let x = p.position.x;
    ensure((x - 2.8911).abs() <= 1e-4, || format!("landed at {x} m"))?;
    ensure((t - 0.57823).abs() <= 1e-5, || {
        format!("landed at t = {t} s")
    })?;
    Ok(format!("lands at {x:.5} m, t = {t:.6} s"))
}

fn settle(d: f64, duration: f64) -> Result<f64, String> {
    let env = Environment::default();
    let jet = JetField::still();
    let mut p = Particle::new(0, Vec3::new(0.0, 0.0, 100.0), Vec3::ZERO, d, WATER_DENSITY);
    let mut rng = stream(0, Domain::Transport, 0);
    let mut t = 0.0;
    while t < duration {
        let (q, dt) =
            step_adaptive(&p, &env, &jet, t, 0.01, 1e-9, &mut rng).map_err(|e| e.to_string())?;
        p = q;
        t += dt;
    }
    Ok(-p.velocity.z)
}

fn terminal_velocity() -> Outcome {
    let small = settle(20e-6, 1.0)?;
    ensure(((small - 0.0120) / 0.0120).abs() <= 0.01, || {
        format!("20 µm settles at {small} m/s")
    })?;
    let large = settle(100e-6, 2.0)?;
    ensure(large < 0.2997, || {
        format!("100 µm settles at {large} m/s, not below Stokes")
    })?;
    Ok(format!(
        "20 µm: {small:.5} m/s; 100 µm: {large:.4} m/s < 0.2997 m/s"
    ))
}

fn reference_cough() -> Outcome {
    let mut details = Vec::new();
    for seed in 1..=5 {
        let started = Instant::now();
        let mut cfg = Config::default();
        cfg.run.seed = Some(seed);
        let scenario = cfg.resolve().map_err(|e| e.to_string())?;
        let r = run(&scenario).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        let m = summary_metrics(&r, &SummaryOptions::default()).map_err(|e| e.to_string())?;
        ensure(m.emitted == 5000, || {
            format!("seed {seed}: emitted {}", m.emitted)
        })?;
        let within = m.span_fraction(0.5, 5.0).unwrap();
        let modal = m.modal_band().ok_or("no deposits")?;
        let far = m.bands.last().unwrap().count;
        ensure(within >= 0.5, || {
            format!("seed {seed}: {within:.3} of deposits in [0.5, 5] m")
        })?;
        ensure(
            modal.lo >= 0.5 && modal.hi.is_some_and(|h| h <= 5.0),
            || format!("seed {seed}: modal band starts at {} m", modal.lo),
        )?;
        ensure(far >= 1, || format!("seed {seed}: nothing beyond 5 m"))?;
        ensure(elapsed <= Duration::from_secs(120), || {
            format!("seed {seed} took {elapsed:.1?}")
        })?;
        details.push(format!(
            "seed {seed}: {:.1}% in [0.5,5] m, mode [{}, {}) m, {far} beyond 5 m, max {:.2} m, {:.0?}",
            100.0 * within,
            modal.lo,
            modal.hi.unwrap(),
            m.max_particle_range,
            elapsed
        ));
    }
    Ok(details.join("; "))
}

fn masked_cough(
    efficiency: f64,
    duration: f64,
) -> Result<aerocomm::scenario::SimulationResult, String> {
    let mut cfg = Config::default();
    cfg.run.seed = Some(99);
    cfg.run.duration = duration;
    cfg.agents[0].mask = Some(Mask {
        efficiency,
        jet_attenuation: 0.9,
    });
    // a receiver straight ahead, so absorptions count as downstream records
    let mut receiver = Agent::new(1, Vec3::new(0.0, 0.6, 0.0), -Vec3::Y);
    receiver.events = EventModel::scripted(vec![]);
    cfg.agents.push(receiver);
    let s: Scenario = cfg.resolve().map_err(|e| e.to_string())?;
    run(&s).map_err(|e| e.to_string())
}

fn mask_filtration() -> Outcome {
    let partial = masked_cough(0.8, 0.02)?;
    let passed = partial.emitted() - partial.blocked();
    ensure(partial.emitted() == 5000, || {
        format!("emitted {}", partial.emitted())
    })?;
    ensure((915..=1085).contains(&passed), || {
        format!("{passed} particles passed the mask")
    })?;
    let full = masked_cough(1.0, 10.0)?;
    let downstream =
        full.depositions.len() + full.absorptions.len() + full.airborne_at_end() as usize;
    ensure(downstream == 0, || {
        format!("{downstream} records behind a perfect mask")
    })?;
    ensure(full.blocked() == 5000, || {
        format!("blocked {}", full.blocked())
    })?;
    Ok(format!(
        "efficiency 0.8 passes {passed} (1000 ± 85); efficiency 1.0 passes 0"
    ))
}

fn markov_speaking() -> Outcome {
    let grid = [0.1, 0.2, 0.5];
    let mut worst: f64 = 0.0;
    for (i, p) in grid.iter().enumerate() {
        for (j, q) in grid.iter().enumerate() {
            let mut m = SpeakingMarkov {
                p_silence_to_talk: *p,
                p_talk_to_silence: *q,
                ..SpeakingMarkov::default()
            };
            let mut rng = stream(2024, Domain::Events, (i * 3 + j) as u64);
            let steps = 100_000;
            let mut talking = 0u64;
            for _ in 0..steps {
                m = speaking_transition(m, &mut rng);
                talking += (m.state == SpeechState::Talking) as u64;
            }
            let frac = talking as f64 / steps as f64;
            let expected = p / (p + q);
            ensure((frac - expected).abs() <= 0.02, || {
                format!("p={p} q={q}: {frac:.4} vs {expected:.4}")
            })?;
            worst = worst.max((frac - expected).abs());
        }
    }
    Ok(format!(
        "9 (p, q) pairs, largest deviation {worst:.4} (≤ 0.02)"
    ))
}

fn cough_process() -> Outcome {
    let model = EventModel {
        breath_rate_per_min: 0.0,
        speech: SpeakingMarkov {
            p_silence_to_talk: 0.0,
            ..SpeakingMarkov::default()
        },
        sneeze_probability: Some(0.0),
        ..EventModel::default()
    };
    let runs = 200;
    let counts: Vec<u64> = (0..runs)
        .map(|k| {
            let mut generator = EventGenerator::new(model.clone(), true).expect("valid model");
            let mut rng = stream(77, Domain::Events, k);
            generator
                .advance_to(3600.0, &mut rng)
                .iter()
                .filter(|e| e.kind == RespiratoryEventKind::Cough)
                .count() as u64
        })
        .collect();

    let binom = Binomial::new(1e-3, 36_000).map_err(|e| e.to_string())?;
    // merge outcomes into cells with at least 5 expected counts
    let mut cells: Vec<(u64, u64, f64)> = Vec::new(); // (lo, hi, probability)
    let (mut lo, mut acc) = (0u64, 0.0);
    for k in 0..=200u64 {
        acc += binom.pmf(k);
        if acc * runs as f64 >= 5.0 {
            cells.push((lo, k, acc));
            lo = k + 1;
            acc = 0.0;
        }
    }
    let last = cells.last_mut().unwrap();
    last.1 = u64::MAX;
    last.2 += acc + (1.0 - binom.cdf(200));
    let mut chi2 = 0.0;
    for (lo, hi, prob) in &cells {
        let observed = counts.iter().filter(|c| **c >= *lo && **c <= *hi).count() as f64;
        let expected = prob * runs as f64;
        chi2 += (observed - expected).powi(2) / expected;
    }
    let dof = (cells.len() - 1) as f64;
    let critical = ChiSquared::new(dof).unwrap().inverse_cdf(0.99);
    let mean = counts.iter().sum::<u64>() as f64 / runs as f64;
    ensure(chi2 <= critical, || {
        format!("chi2 = {chi2:.2} > {critical:.2} ({dof} dof), mean {mean}")
    })?;
    Ok(format!(
        "chi2 = {chi2:.2} ≤ {critical:.2} on {dof} dof; mean {mean:.2} coughs/h"
    ))
}

fn office_config() -> Result<Config, String> {
    let mut cfg =
        load_config(&workspace().join("configs/office.json")).map_err(|e| e.to_string())?;
    let base = cfg.base_dir.clone();
    if let DiameterConfig::Csv { path, .. } = &mut cfg.emission.diameters {
        *path = base.join(&*path);
    }
    if let SpeedConfig::DistanceCsv { path, .. } = &mut cfg.emission.speeds {
        *path = base.join(&*path);
    }
    cfg.run.duration = 2.5;
    Ok(cfg)
}

fn conservation() -> Outcome {
    let mut totals = [0u64; 5];
    for seed in 0..20 {
        let mut cfg = office_config()?;
        cfg.run.seed = Some(seed);
        let r = run(&cfg.resolve().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let l = ledger_check(&r).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(
            l.emitted == l.deposited + l.absorbed + l.blocked + l.airborne_at_end,
            || format!("seed {seed}: {l:?}"),
        )?;
        for (t, v) in totals.iter_mut().zip([
            l.emitted,
            l.deposited,
            l.absorbed,
            l.blocked,
            l.airborne_at_end,
        ]) {
            *t += v;
        }
    }
    ensure(totals[1..].iter().all(|t| *t > 0), || {
        format!("a category never occurred: {totals:?}")
    })?;
    Ok(format!(
        "20 seeds exact; totals emitted {} = deposited {} + absorbed {} + blocked {} + airborne {}",
        totals[0], totals[1], totals[2], totals[3], totals[4]
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_path = dir.path().join("config.json");
    let mut cfg = office_config()?;
    cfg.run.seed = Some(7);
    std::fs::write(&cfg_path, cfg.to_json().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let mut bundles = Vec::new();
    for (k, threads) in ["1", "1", "8", "8"].iter().enumerate() {
        let out = dir.path().join(format!("out{k}"));
        let status = bin()
            .env("AEROCOMM_THREADS", threads)
            .args(["simulate", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        bundles.push(files);
    }
    ensure(bundles[0].len() == 6, || {
        format!("{} files in bundle", bundles[0].len())
    })?;
    for (k, b) in bundles.iter().enumerate().skip(1) {
        for ((name, a), (_, other)) in bundles[0].iter().zip(b) {
            ensure(a == other, || format!("run {k}: {name} differs"))?;
        }
    }
    let bytes: usize = bundles[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "4 runs (threads 1, 1, 8, 8) byte-identical, {bytes} bytes per bundle"
    ))
}

fn sampling_fidelity() -> Outcome {
    let data = workspace().join("data");
    let diameters = load_empirical_csv(&data.join("cough_diameters_um.csv"), Unit::Um)
        .map_err(|e| e.to_string())?;
    let distances = load_empirical_csv(&data.join("cough_distances_m.csv"), Unit::M)
        .map_err(|e| e.to_string())?;
    let speeds = distances.map_values(|d| d / (2.0 * 1.64 / 9.81f64).sqrt());
    let speed_cdf =
        speed_cdf_from_distance_sample(&distances, 1.64, 9.81).map_err(|e| e.to_string())?;
    let draws = 100_000;
    let mut details = Vec::new();
    for (k, (name, sample, cdf)) in [
        (
            "diameters",
            &diameters,
            EmpiricalCdf::from_weighted(&diameters).map_err(|e| e.to_string())?,
        ),
        (
            "distances",
            &distances,
            EmpiricalCdf::from_weighted(&distances).map_err(|e| e.to_string())?,
        ),
        ("speeds", &speeds, speed_cdf),
    ]
    .into_iter()
    .enumerate()
    {
        let mut rng = stream(5, Domain::Emission, k as u64);
        let drawn: Vec<f64> = (0..draws)
            .map(|_| sample_from_cdf(&cdf, &mut rng))
            .collect();
        let d = ks_statistic(sample, &drawn);
        let critical = ks_critical(0.01, sample.total_weight(), draws as f64);
        ensure(d <= critical, || {
            format!("{name}: D = {d:.5} > {critical:.5}")
        })?;
        details.push(format!("{name} D = {d:.4} ≤ {critical:.4}"));
    }
    Ok(details.join("; "))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        (
            "analytic throw range",
            analytic_range,
            Duration::from_secs(5),
        ),
        (
            "drag-free integrator oracle",
            integrator_oracle,
            Duration::from_secs(1),
        ),
        (
            "terminal velocity",
            terminal_velocity,
            Duration::from_secs(1),
        ),
        (
            "reference cough deposition",
            reference_cough,
            Duration::from_secs(600),
        ),
        ("mask filtration", mask_filtration, Duration::from_secs(10)),
        (
            "speaking Markov chain",
            markov_speaking,
            Duration::from_secs(5),
        ),
        (
            "cough Bernoulli process",
            cough_process,
            Duration::from_secs(30),
        ),
        (
            "particle conservation",
            conservation,
            Duration::from_secs(300),
        ),
        ("bundle determinism", determinism, Duration::from_secs(300)),
        (
            "inverse-CDF sampling",
            sampling_fidelity,
            Duration::from_secs(5),
        ),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = check().and_then(|detail| {
            let elapsed = started.elapsed();
            ensure(elapsed <= budget, || {
                format!("took {elapsed:.1?}, budget {budget:?}")
            })?;
            Ok(detail)
        });
        let elapsed = started.elapsed();
        let (verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed.push(i + 1);
                ("FAIL", e)
            }
        };
        writeln!(
            stdout,
            "acceptance {:2} {verdict} {name} [{elapsed:.2?}]: {detail}",
            i + 1
        )
        .unwrap();
    }
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
