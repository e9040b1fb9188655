//! Reductions of a [`SimulationResult`]: floor heat maps, histograms, range
//! and dose metrics, plus the goodness-of-fit statistics used to validate
//! the stochastic components.

use serde::{Deserialize, Serialize};

use crate::emission::WeightedSample;
use crate::error::{Error, Result};
use crate::scenario::{DepositionRecord, SimulationResult};
use crate::vec3::Vec3;

/// Floor deposition counts on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    /// Lower-left corner `(x, y)`, m.
    pub origin: [f64; 2],
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `counts[iy * nx + ix]`, row 0 at the lowest `y`.
    pub counts: Vec<u64>,
    /// Records that fell outside the grid.
    pub out_of_extent: u64,
}

impl HeatmapGrid {
    pub fn get(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.nx.max(1))
    }
}

/// Layout of a heat map. The default covers ±1.5 m across and 0-6 m ahead of
/// an emitter at the origin facing +y, in 0.1 m cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapSpec {
    pub origin: [f64; 2],
    pub cell: f64,
    /// Width and height of the gridded region, m.
    pub extent: [f64; 2],
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        HeatmapSpec {
            origin: [-1.5, 0.0],
            cell: 0.1,
            extent: [3.0, 6.0],
        }
    }
}

impl HeatmapSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(Error::config("cell", "must be positive"));
        }
        if !self.extent.iter().all(|e| *e > 0.0 && e.is_finite()) {
            return Err(Error::config("extent", "must be positive"));
        }
        if !self.origin.iter().all(|o| o.is_finite()) {
            return Err(Error::config("origin", "must be finite"));
        }
        Ok(())
    }
}

/// Bins deposition records by `floor((x - ox) / cell)`, `floor((y - oy) / cell)`.
pub fn deposition_heatmap(
    records: &[DepositionRecord],
    origin: [f64; 2],
    cell: f64,
    extent: [f64; 2],
) -> Result<HeatmapGrid> {
    HeatmapSpec {
        origin,
        cell,
        extent,
    }
    .validate()?;
    // tolerate extents that are a whole number of cells up to rounding
    let cells = |e: f64| ((e / cell) - 1e-9).ceil().max(1.0) as usize;
    let (nx, ny) = (cells(extent[0]), cells(extent[1]));
    let mut counts = vec![0u64; nx * ny];
    let mut out_of_extent = 0;
    for r in records {
        let fx = ((r.x - origin[0]) / cell).floor();
        let fy = ((r.y - origin[1]) / cell).floor();
        if fx >= 0.0 && fy >= 0.0 && (fx as usize) < nx && (fy as usize) < ny {
            counts[fy as usize * nx + fx as usize] += 1;
        } else {
            out_of_extent += 1;
        }
    }
    Ok(HeatmapGrid {
        origin,
        cell,
        nx,
        ny,
        counts,
        out_of_extent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// `counts[i]` holds values in `[edges[i], edges[i + 1])`.
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Index of the fullest bin (the first one on ties).
    pub fn mode_bin(&self) -> Option<usize> {
        let max = *self.counts.iter().max()?;
        (max > 0).then(|| self.counts.iter().position(|c| *c == max).unwrap())
    }
}

/// Left-closed binning over strictly increasing `edges`.
pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram> {
    weighted_histogram(values.iter().map(|v| (*v, 1)), edges)
}

/// [`histogram`] with integer weights per value.
pub fn weighted_histogram(
    values: impl IntoIterator<Item = (f64, u64)>,
    edges: &[f64],
) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(
            "histogram edges must be strictly increasing",
        ));
    }
    let last = edges[edges.len() - 1];
    let mut h = Histogram {
        edges: edges.to_vec(),
        counts: vec![0; edges.len() - 1],
        underflow: 0,
        overflow: 0,
    };
    for (v, w) in values {
        if v < edges[0] {
            h.underflow += w;
        } else if v >= last || v.is_nan() {
            h.overflow += w;
        } else {
            h.counts[edges.partition_point(|e| *e <= v) - 1] += w;
        }
    }
    Ok(h)
}

/// Histogram of an ingested weighted sample (weights rounded to integers).
pub fn sample_histogram(sample: &WeightedSample, edges: &[f64]) -> Result<Histogram> {
    weighted_histogram(
        sample
            .values
            .iter()
            .zip(&sample.weights)
            .map(|(v, w)| (*v, w.round() as u64)),
        edges,
    )
}

/// Radial band `[lo, hi)`; `hi = None` is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: Option<f64>,
    pub count: u64,
    pub fraction: f64,
}

impl Band {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && self.hi.is_none_or(|hi| r < hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverDose {
    pub agent_id: u32,
    pub dose: u64,
    pub infected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    /// Farthest horizontal distance from its emitter of any infectious
    /// deposition or absorption, m.
    pub infection_range: f64,
    /// Farthest horizontal distance of any deposition or absorption, m.
    pub max_particle_range: f64,
    pub emitted: u64,
    pub deposited: u64,
    pub absorbed: u64,
    pub blocked: u64,
    pub airborne_at_end: u64,
    pub blocked_fraction: f64,
    pub doses: Vec<ReceiverDose>,
    /// Agents that crossed their threshold during the run.
    pub infected_receivers: Vec<u32>,
    /// Deposits partitioned by the band edges: `[0, e0)`, `[e0, e1)`, ...,
    /// `[e_last, inf)`.
    pub bands: Vec<Band>,
    /// Deposits in `[e0, e_k)` for each later edge `e_k`.
    pub spans: Vec<Band>,
}

impl MetricsSummary {
    /// Band holding the most deposits (first one on ties).
    pub fn modal_band(&self) -> Option<&Band> {
        let max = self.bands.iter().map(|b| b.count).max()?;
        (max > 0).then(|| self.bands.iter().find(|b| b.count == max).unwrap())
    }

    /// Deposit fraction in the span `[lo, hi)`, if that span was computed.
    pub fn span_fraction(&self, lo: f64, hi: f64) -> Option<f64> {
        self.spans
            .iter()
            .find(|s| s.lo == lo && s.hi == Some(hi))
            .map(|s| s.fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummaryOptions {
    /// Strictly increasing radial band edges, m.
    pub band_edges: Vec<f64>,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            band_edges: vec![0.5, 2.0, 5.0],
        }
    }
}

impl SummaryOptions {
    pub fn validate(&self) -> Result<()> {
        let e = &self.band_edges;
        if e.is_empty() || e[0] <= 0.0 || e.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config(
                "band_edges",
                "must be positive and strictly increasing",
            ));
        }
        Ok(())
    }
}

fn fraction(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Horizontal distance of each deposit from its emitter at emission time.
pub fn deposition_radii(result: &SimulationResult) -> Vec<f64> {
    result
        .depositions
        .iter()
        .map(|d| radial(result, d.event_id, Vec3::new(d.x, d.y, 0.0)))
        .collect()
}

fn radial(result: &SimulationResult, event_id: u64, point: Vec3) -> f64 {
    result
        .event(event_id)
        .map(|e| e.emitter_position.horizontal_distance(point))
        .unwrap_or(f64::NAN)
}

pub fn summary_metrics(
    result: &SimulationResult,
    options: &SummaryOptions,
) -> Result<MetricsSummary> {
    options.validate()?;
    let mut infection_range: f64 = 0.0;
    let mut max_particle_range: f64 = 0.0;
    let radii = deposition_radii(result);
    for (d, r) in result.depositions.iter().zip(&radii) {
        max_particle_range = max_particle_range.max(*r);
        if d.infectious {
            infection_range = infection_range.max(*r);
        }
    }
    for a in &result.absorptions {
        let r = radial(result, a.event_id, a.position);
        max_particle_range = max_particle_range.max(r);
        if a.infectious {
            infection_range = infection_range.max(r);
        }
    }

    let total = radii.len() as u64;
    let edges = &options.band_edges;
    let mut bounds: Vec<(f64, Option<f64>)> = Vec::with_capacity(edges.len() + 1);
    bounds.push((0.0, Some(edges[0])));
    for w in edges.windows(2) {
        bounds.push((w[0], Some(w[1])));
    }
    bounds.push((edges[edges.len() - 1], None));
    let make_band = |lo: f64, hi: Option<f64>| {
        let mut b = Band {
            lo,
            hi,
            count: 0,
            fraction: 0.0,
        };
        b.count = radii.iter().filter(|r| b.contains(**r)).count() as u64;
        b.fraction = fraction(b.count, total);
        b
    };
    let bands = bounds.iter().map(|(lo, hi)| make_band(*lo, *hi)).collect();
    let spans = edges[1..]
        .iter()
        .map(|hi| make_band(edges[0], Some(*hi)))
        .collect();

    let emitted = result.emitted();
    let blocked = result.blocked();
    Ok(MetricsSummary {
        infection_range,
        max_particle_range,
        emitted,
        deposited: total,
        absorbed: result.absorptions.len() as u64,
        blocked,
        airborne_at_end: result.airborne_at_end(),
        blocked_fraction: fraction(blocked, emitted),
        doses: result
            .outcomes
            .iter()
            .map(|o| ReceiverDose {
                agent_id: o.agent_id,
                dose: o.dose,
                infected: o.infected,
            })
            .collect(),
        infected_receivers: result
            .outcomes
            .iter()
            .filter(|o| o.infected && !o.initially_infected)
            .map(|o| o.agent_id)
            .collect(),
        bands,
        spans,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic of a weighted sample against
/// plain draws.
pub fn ks_statistic(source: &WeightedSample, draws: &[f64]) -> f64 {
    let total = source.total_weight();
    let mut src: Vec<(f64, f64)> = source
        .values
        .iter()
        .copied()
        .zip(source.weights.iter().copied())
        .collect();
    src.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut drawn = draws.to_vec();
    drawn.sort_by(f64::total_cmp);

    let mut points: Vec<f64> = src
        .iter()
        .map(|p| p.0)
        .chain(drawn.iter().copied())
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let (mut i, mut j) = (0, 0);
    let mut f_src = 0.0;
    let mut d: f64 = 0.0;
    for x in points {
        while i < src.len() && src[i].0 <= x {
            f_src += src[i].1 / total;
            i += 1;
        }
        while j < drawn.len() && drawn[j] <= x {
            j += 1;
        }
        d = d.max((f_src - j as f64 / drawn.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical(alpha: f64, n: f64, m: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

/// Pearson chi-square statistic.
pub fn chi_square_statistic(observed: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum()
}
