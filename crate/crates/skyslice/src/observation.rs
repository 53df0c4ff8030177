//! The fixed-length global observation vector shared by every agent.
//!
//! For a fleet of `n` drones the vector has `6n + 12` entries, laid out as
//! five consecutive blocks:
//!
//! | block                | entries | contents                                 |
//! |----------------------|---------|------------------------------------------|
//! | positions            | `3n`    | (x, y, z) per drone                      |
//! | batteries            | `n`     | percentage in [0, 100] per drone         |
//! | class counts         | `3`     | associated users per class (A, B, C)     |
//! | planar velocities    | `2n`    | (vx, vy) per drone                       |
//! | aggregated QoS       | `9`     | (L, T, S) per class, absent class → 0    |
//!
//! At `n = 4` this is 36 entries: positions 0..=11, batteries 12..=15,
//! counts 16..=18, velocities 19..=26, QoS 27..=35.

use std::ops::Range;

/// Index map of the observation blocks for a fleet of `n` drones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsLayout {
    pub n_drones: usize,
}

impl ObsLayout {
    pub fn new(n_drones: usize) -> Self {
        Self { n_drones }
    }

    pub fn len(&self) -> usize {
        6 * self.n_drones + 12
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn positions(&self) -> Range<usize> {
        0..3 * self.n_drones
    }

    pub fn batteries(&self) -> Range<usize> {
        3 * self.n_drones..4 * self.n_drones
    }

    pub fn counts(&self) -> Range<usize> {
        4 * self.n_drones..4 * self.n_drones + 3
    }

    pub fn velocities(&self) -> Range<usize> {
        4 * self.n_drones + 3..6 * self.n_drones + 3
    }

    pub fn qos(&self) -> Range<usize> {
        6 * self.n_drones + 3..6 * self.n_drones + 12
    }
}

/// A filled observation vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    values: Vec<f64>,
    layout: ObsLayout,
}

impl Observation {
    pub(crate) fn from_parts(values: Vec<f64>, layout: ObsLayout) -> Self {
        debug_assert_eq!(values.len(), layout.len());
        Self { values, layout }
    }

    pub fn layout(&self) -> ObsLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn positions(&self) -> &[f64] {
        &self.values[self.layout.positions()]
    }

    pub fn batteries(&self) -> &[f64] {
        &self.values[self.layout.batteries()]
    }

    pub fn counts(&self) -> &[f64] {
        &self.values[self.layout.counts()]
    }

    pub fn velocities(&self) -> &[f64] {
        &self.values[self.layout.velocities()]
    }

    pub fn qos(&self) -> &[f64] {
        &self.values[self.layout.qos()]
    }
}
