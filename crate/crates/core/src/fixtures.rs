//! Reference networks.

use crate::network::{SensorId, Topology};

/// Wired KLJN links of the ten-sensor example network: A..G are wired,
/// H, I and J are wireless-only.
pub const REFERENCE_KLJN_EDGES: [(&str, &str); 6] = [
    ("A", "B"),
    ("A", "D"),
    ("B", "E"),
    ("C", "D"),
    ("D", "E"),
    ("F", "G"),
];

pub const REFERENCE_SENSORS: [&str; 10] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J"];

/// Expected trust values for the example network with every kill switch
/// at 1. Rows are the evaluating sensor, columns the evaluated one.
pub const REFERENCE_TRUST_MATRIX: [[f64; 10]; 10] = [
    [
        1.0, 1.0, 0.555, 1.0, 0.701, 0.346, 0.346, 0.173, 0.173, 0.173,
    ],
    [
        1.0, 1.0, 0.346, 0.874, 1.0, 0.346, 0.346, 0.173, 0.173, 0.173,
    ],
    [
        0.728, 0.376, 1.0, 1.0, 0.728, 0.346, 0.346, 0.173, 0.173, 0.173,
    ],
    [1.0, 0.701, 1.0, 1.0, 1.0, 0.346, 0.346, 0.173, 0.173, 0.173],
    [
        0.701, 1.0, 0.555, 1.0, 1.0, 0.346, 0.346, 0.173, 0.173, 0.173,
    ],
    [
        0.376, 0.376, 0.346, 0.381, 0.376, 1.0, 1.0, 0.173, 0.173, 0.173,
    ],
    [
        0.376, 0.376, 0.346, 0.381, 0.376, 1.0, 1.0, 0.173, 0.173, 0.173,
    ],
    [
        0.376, 0.376, 0.346, 0.381, 0.376, 0.346, 0.346, 1.0, 0.173, 0.173,
    ],
    [
        0.376, 0.376, 0.346, 0.381, 0.376, 0.346, 0.346, 0.173, 1.0, 0.173,
    ],
    [
        0.376, 0.376, 0.346, 0.381, 0.376, 0.346, 0.3458, 0.173, 0.173, 1.0,
    ],
];

/// Stated precision of a reference entry: three decimals, except the one
/// four-decimal entry.
pub fn reference_tolerance(expected: f64) -> f64 {
    if (expected * 1000.0 - (expected * 1000.0).round()).abs() > 1e-9 {
        0.0005
    } else {
        0.001
    }
}

/// The ten-sensor example network, without wireless sets.
pub fn reference_topology() -> Topology {
    let id = |s: &str| SensorId::new(s).expect("static id");
    Topology::new(
        REFERENCE_SENSORS.iter().map(|s| id(s)),
        REFERENCE_KLJN_EDGES.iter().map(|(a, b)| (id(a), id(b))),
    )
    .expect("reference network is well formed")
}
