use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::max_throw_distance;

/// Values with non-negative weights, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::invalid("values and weights differ in length"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample values must be finite"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("sample weights must be non-negative"));
        }
        Ok(WeightedSample { values, weights })
    }

    pub fn unweighted(values: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        WeightedSample::new(values, weights)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> WeightedSample {
        WeightedSample {
            values: self.values.iter().map(|&v| f(v)).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Fraction of total weight at values `>= threshold`.
    pub fn mass_at_or_above(&self, threshold: f64) -> f64 {
        let above: f64 = self
            .values
            .iter()
            .zip(&self.weights)
            .filter(|(v, _)| **v >= threshold)
            .map(|(_, w)| w)
            .sum();
        above / self.total_weight()
    }
}

/// Step-function CDF over a finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    support: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EmpiricalCdf {
    /// Builds the CDF of a weighted sample. Zero-weight values are dropped and
    /// duplicate values merged.
    pub fn from_weighted(sample: &WeightedSample) -> Result<Self> {
        let total = sample.total_weight();
        if !(total > 0.0) {
            return Err(Error::invalid("empirical sample has zero total weight"));
        }
        let mut pairs: Vec<(f64, f64)> = sample
            .values
            .iter()
            .copied()
            .zip(sample.weights.iter().copied())
            .filter(|(_, w)| *w > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut mass: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            match support.last() {
                Some(&last) if last == v => *mass.last_mut().unwrap() += w,
                _ => {
                    support.push(v);
                    mass.push(w);
                }
            }
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = mass
            .iter()
            .map(|m| {
                acc += m;
                acc / total
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(EmpiricalCdf {
            support,
            cumulative,
        })
    }

    /// Equal-weight CDF of `values`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("distances", "empirical input is empty"));
        }
        EmpiricalCdf::from_weighted(&WeightedSample::unweighted(values.to_vec())?)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn min(&self) -> f64 {
        self.support[0]
    }

    pub fn max(&self) -> f64 {
        *self.support.last().unwrap()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.support.partition_point(|&v| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Smallest support value whose cumulative probability reaches `u`.
    /// Defined for `u` in `(0, 1]`.
    pub fn inverse(&self, u: f64) -> f64 {
        let idx = self.cumulative.partition_point(|&c| c < u);
        self.support[idx.min(self.support.len() - 1)]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_from_cdf(self, rng)
    }

    pub fn transform(&self, f: impl Fn(f64) -> f64) -> EmpiricalCdf {
        EmpiricalCdf {
            support: self.support.iter().map(|&v| f(v)).collect(),
            cumulative: self.cumulative.clone(),
        }
    }
}

/// Inverse-transform sample with `u` uniform on `(0, 1]`.
pub fn sample_from_cdf<R: Rng + ?Sized>(c: &EmpiricalCdf, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    c.inverse(u)
}

/// Speed CDF implied by observed travel distances of a frictionless
/// horizontal throw from height `h0`: `v = d * sqrt(g / (2 h0))`.
pub fn empirical_cdf_from_distances(distances: &[f64], h0: f64, g: f64) -> Result<EmpiricalCdf> {
    if distances.is_empty() {
        return Err(Error::config("distances", "empirical input is empty"));
    }
    let sample = WeightedSample::unweighted(distances.to_vec())?;
    speed_cdf_from_distance_sample(&sample, h0, g)
}

/// Weighted form of [`empirical_cdf_from_distances`].
pub fn speed_cdf_from_distance_sample(
    distances: &WeightedSample,
    h0: f64,
    g: f64,
) -> Result<EmpiricalCdf> {
    if !(h0 > 0.0) {
        return Err(Error::config("h0", "emission height must be positive"));
    }
    if distances.values.iter().any(|d| *d < 0.0) {
        return Err(Error::config("distances", "distances must be non-negative"));
    }
    // time of flight of the throw; v = d / t_flight
    let t_flight = max_throw_distance(1.0, h0, g)?;
    EmpiricalCdf::from_weighted(&distances.map_values(|d| d / t_flight))
}
