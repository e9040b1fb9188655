use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{deposition_heatmap, summary_metrics, HeatmapGrid, MetricsSummary};
use crate::error::{Error, Result};
use crate::io::config::AnalysisConfig;
use crate::io::format::{format_sig, round_sig};
use crate::scenario::{ledger_check, AgentOutcome, ApertureKind, LedgerReport, SimulationResult};

pub const DEPOSITION_FILE: &str = "deposition.csv";
pub const ABSORPTION_FILE: &str = "absorption.csv";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SYMBOL_FILE: &str = "symbols.csv";
pub const LEDGER_FILE: &str = "ledger.json";

const DEPOSITION_HEADER: &str = "particle_id,x_m,y_m,t_s,diameter_m,infectious";
const ABSORPTION_HEADER: &str =
    "particle_id,event_id,receiver_id,aperture,x_m,y_m,z_m,t_s,diameter_m,infectious";
const SYMBOL_HEADER: &str =
    "timestamp_s,event_kind,concentration_level,particle_count,infectious_count";

/// Content of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub end_time: f64,
    pub metrics: MetricsSummary,
    pub ledger: LedgerReport,
    pub outcomes: Vec<AgentOutcome>,
}

/// A written output directory and the reductions it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub summary: Summary,
    pub heatmap: HeatmapGrid,
}

impl OutputBundle {
    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }
}

/// One row of `deposition.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepositionRow {
    pub particle_id: u64,
    pub x_m: f64,
    pub y_m: f64,
    pub t_s: f64,
    pub diameter_m: f64,
    pub infectious: bool,
}

/// One row of `absorption.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionRow {
    pub particle_id: u64,
    pub event_id: u64,
    pub receiver_id: u32,
    pub aperture: ApertureKind,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    pub t_s: f64,
    pub diameter_m: f64,
    pub infectious: bool,
}

fn join(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

fn deposition_csv(result: &SimulationResult) -> String {
    let mut out = format!("{DEPOSITION_HEADER}\n");
    for d in &result.depositions {
        out += &join(&[
            d.particle_id.to_string(),
            format_sig(d.x),
            format_sig(d.y),
            format_sig(d.t),
            format_sig(d.diameter),
            d.infectious.to_string(),
        ]);
    }
    out
}

fn absorption_csv(result: &SimulationResult) -> String {
    let mut out = format!("{ABSORPTION_HEADER}\n");
    for a in &result.absorptions {
        out += &join(&[
            a.particle_id.to_string(),
            a.event_id.to_string(),
            a.receiver_id.to_string(),
            a.aperture.as_str().to_string(),
            format_sig(a.position.x),
            format_sig(a.position.y),
            format_sig(a.position.z),
            format_sig(a.t),
            format_sig(a.diameter),
            a.infectious.to_string(),
        ]);
    }
    out
}

fn symbol_csv(result: &SimulationResult) -> String {
    let mut out = format!("{SYMBOL_HEADER}\n");
    for s in &result.symbols {
        out += &join(&[
            format_sig(s.timestamp),
            s.event_kind.as_str().to_string(),
            s.concentration_level.to_string(),
            s.particle_count.to_string(),
            s.infectious_count.to_string(),
        ]);
    }
    out
}

fn heatmap_csv(grid: &HeatmapGrid) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "origin_m,{},{}",
        format_sig(grid.origin[0]),
        format_sig(grid.origin[1])
    )
    .unwrap();
    writeln!(out, "cell_m,{}", format_sig(grid.cell)).unwrap();
    for row in grid.rows() {
        out += &join(&row.iter().map(u64::to_string).collect::<Vec<_>>());
    }
    out
}

fn round_floats(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().unwrap());
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn json<T: Serialize>(value: &T, what: &str) -> Result<String> {
    let err = |source| Error::Json {
        context: format!("serializing {what}"),
        source,
    };
    let mut v = serde_json::to_value(value).map_err(err)?;
    round_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(err)?;
    text.push('\n');
    Ok(text)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Writes the six-file output bundle into `dir`, creating it if needed.
///
/// The conservation ledger is checked first; a violated ledger writes
/// nothing. Output bytes depend only on `result` and `analysis`.
pub fn write_outputs(
    result: &SimulationResult,
    dir: &Path,
    analysis: &AnalysisConfig,
) -> Result<OutputBundle> {
    let ledger = ledger_check(result)?;
    let metrics = summary_metrics(result, &analysis.summary_options())?;
    let h = &analysis.heatmap;
    let heatmap = deposition_heatmap(&result.depositions, h.origin, h.cell, h.extent)?;
    let summary = Summary {
        end_time: result.end_time,
        metrics,
        ledger: ledger.clone(),
        outcomes: result.outcomes.clone(),
    };

    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    write_file(dir, DEPOSITION_FILE, &deposition_csv(result))?;
    write_file(dir, ABSORPTION_FILE, &absorption_csv(result))?;
    write_file(dir, HEATMAP_FILE, &heatmap_csv(&heatmap))?;
    write_file(dir, SYMBOL_FILE, &symbol_csv(result))?;
    write_file(dir, SUMMARY_FILE, &json(&summary, "summary")?)?;
    write_file(dir, LEDGER_FILE, &json(&ledger, "ledger")?)?;
    Ok(OutputBundle {
        dir: dir.to_path_buf(),
        summary,
        heatmap,
    })
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let context = || format!("reading {}", path.display());
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        context: context(),
        source,
    })?;
    rdr.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|source| Error::Csv {
            context: context(),
            source,
        })
}

/// Parses a `deposition.csv` written by [`write_outputs`].
pub fn read_depositions(path: &Path) -> Result<Vec<DepositionRow>> {
    read_rows(path)
}

/// Parses an `absorption.csv` written by [`write_outputs`].
pub fn read_absorptions(path: &Path) -> Result<Vec<AbsorptionRow>> {
    read_rows(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emission::RespiratoryEventKind;
    use crate::scenario::{AbsorptionRecord, DepositionRecord, EventRecord};
    use crate::vec3::Vec3;

    fn empty() -> SimulationResult {
        SimulationResult {
            depositions: vec![],
            absorptions: vec![],
            events: vec![],
            outcomes: vec![],
            symbols: vec![],
            end_time: 0.0,
        }
    }

    fn small() -> SimulationResult {
        let mut r = empty();
        r.events.push(EventRecord {
            event_id: 0,
            agent_id: 0,
            kind: RespiratoryEventKind::Cough,
            t: 0.0,
            emitter_position: Vec3::ZERO,
            first_particle_id: 0,
            emitted: 3,
            infectious: 1,
            blocked: 1,
            deposited: 1,
            absorbed: 1,
            airborne_at_end: 0,
            omitted_draws: 0,
        });
        r.depositions.push(DepositionRecord {
            particle_id: 0,
            event_id: 0,
            x: 0.05,
            y: 1.0 / 3.0,
            t: 0.7,
            diameter: 6.123456789123e-5,
            infectious: true,
        });
        r.absorptions.push(AbsorptionRecord {
            particle_id: 2,
            event_id: 0,
            receiver_id: 4,
            aperture: ApertureKind::Face,
            position: Vec3::new(0.0, 1.0, 1.6),
            t: 0.2,
            diameter: 7e-5,
            infectious: false,
        });
        r.end_time = 1.0;
        r
    }

    #[test]
    fn empty_result_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let b = write_outputs(&empty(), dir.path(), &AnalysisConfig::default()).unwrap();
        let dep = std::fs::read_to_string(b.path(DEPOSITION_FILE)).unwrap();
        assert_eq!(dep, format!("{DEPOSITION_HEADER}\n"));
        let abs = std::fs::read_to_string(b.path(ABSORPTION_FILE)).unwrap();
        assert_eq!(abs, format!("{ABSORPTION_HEADER}\n"));
        assert_eq!(b.summary.metrics.emitted, 0);
        assert_eq!(b.summary.metrics.max_particle_range, 0.0);
        assert_eq!(b.heatmap.total(), 0);
    }

    #[test]
    fn rows_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let r = small();
        let b = write_outputs(&r, dir.path(), &AnalysisConfig::default()).unwrap();
        let dep = read_depositions(&b.path(DEPOSITION_FILE)).unwrap();
        assert_eq!(dep.len(), 1);
        assert_eq!(dep[0].x_m, 0.05);
        assert_eq!(dep[0].y_m, 0.333333333);
        assert_eq!(dep[0].diameter_m, 6.12345679e-5);
        assert!(dep[0].infectious);
        let abs = read_absorptions(&b.path(ABSORPTION_FILE)).unwrap();
        assert_eq!(abs[0].receiver_id, 4);
        assert_eq!(abs[0].aperture, ApertureKind::Face);
        assert_eq!(abs[0].z_m, 1.6);
    }

    #[test]
    fn heatmap_has_two_line_header() {
        let dir = tempfile::tempdir().unwrap();
        let b = write_outputs(&small(), dir.path(), &AnalysisConfig::default()).unwrap();
        let text = std::fs::read_to_string(b.path(HEATMAP_FILE)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "origin_m,-1.5,0");
        assert_eq!(lines[1], "cell_m,0.1");
        assert_eq!(lines.len(), 2 + 60);
        assert_eq!(lines[2].split(',').count(), 30);
        let total: u64 = lines[2..]
            .iter()
            .flat_map(|l| l.split(','))
            .map(|c| c.parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 1);
        // y = 1/3 lies in row 3, x = 0.05 in column 15
        assert_eq!(lines[2 + 3].split(',').nth(15), Some("1"));
    }

    #[test]
    fn violated_ledger_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = small();
        r.events[0].emitted = 4;
        let out = dir.path().join("bundle");
        assert!(matches!(
            write_outputs(&r, &out, &AnalysisConfig::default()),
            Err(Error::Ledger(_))
        ));
        assert!(!out.exists());
    }

    #[test]
    fn rewriting_is_byte_stable() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_outputs(&small(), a.path(), &AnalysisConfig::default()).unwrap();
        write_outputs(&small(), b.path(), &AnalysisConfig::default()).unwrap();
        for f in [
            DEPOSITION_FILE,
            ABSORPTION_FILE,
            HEATMAP_FILE,
            SUMMARY_FILE,
            SYMBOL_FILE,
            LEDGER_FILE,
        ] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }
}
