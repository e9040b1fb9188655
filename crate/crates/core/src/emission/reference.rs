//! Built-in reference distributions for a horizontal cough from 1.64 m.
//!
//! The diameter histogram peaks in the 20-30 µm bin with most droplets under
//! 100 µm; the flight-distance histogram concentrates between 0.5 m and 2 m
//! with a tail past 2 m. The same tables ship as CSV under `data/`.

/// `(diameter in µm, count)`.
pub const COUGH_DIAMETERS_UM: [(f64, f64); 18] = [
    (5.0, 40.0),
    (15.0, 120.0),
    (25.0, 190.0),
    (35.0, 150.0),
    (45.0, 110.0),
    (55.0, 80.0),
    (65.0, 60.0),
    (75.0, 45.0),
    (85.0, 35.0),
    (95.0, 28.0),
    (110.0, 30.0),
    (130.0, 20.0),
    (150.0, 14.0),
    (175.0, 10.0),
    (200.0, 7.0),
    (250.0, 5.0),
    (300.0, 3.0),
    (400.0, 2.0),
];

/// `(flight distance in m, count)`.
pub const COUGH_DISTANCES_M: [(f64, f64); 13] = [
    (0.1, 20.0),
    (0.3, 45.0),
    (0.5, 70.0),
    (0.7, 90.0),
    (0.9, 95.0),
    (1.1, 85.0),
    (1.3, 70.0),
    (1.5, 55.0),
    (1.7, 40.0),
    (1.9, 28.0),
    (2.1, 18.0),
    (2.3, 10.0),
    (2.5, 5.0),
];

pub const EMISSION_HEIGHT: f64 = 1.64;

pub fn cough_diameters() -> super::WeightedSample {
    super::WeightedSample {
        values: COUGH_DIAMETERS_UM.iter().map(|(d, _)| d * 1e-6).collect(),
        weights: COUGH_DIAMETERS_UM.iter().map(|(_, w)| *w).collect(),
    }
}

pub fn cough_distances() -> super::WeightedSample {
    super::WeightedSample {
        values: COUGH_DISTANCES_M.iter().map(|(d, _)| *d).collect(),
        weights: COUGH_DISTANCES_M.iter().map(|(_, w)| *w).collect(),
    }
}
