//! Radial grids in r = |z|².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the default grid: a fine start, a linear segment on [0, 1],
/// then geometric spacing out to `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    pub r_max: f64,
    /// Spacing of the linear segment on [0, 1].
    pub linear_step: f64,
    /// Spacing used on [0, linear_step] so the first node sits at or below 1e-4.
    pub origin_step: f64,
    /// Ratio between successive nodes beyond r = 1.
    pub ratio: f64,
    /// Radii that must be grid nodes.
    pub pins: Vec<f64>,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            r_max: 1e6,
            linear_step: 1e-3,
            origin_step: 1e-4,
            ratio: 1.01,
            pins: Vec::new(),
        }
    }
}

impl GridParams {
    pub fn with_r_max(r_max: f64) -> Self {
        Self {
            r_max,
            ..Self::default()
        }
    }

    /// Integers 2..=10, every power of ten and every power of two up to `r_max`.
    pub fn standard_pins(r_max: f64) -> Vec<f64> {
        let mut pins: Vec<f64> = (2..=10).map(f64::from).collect();
        let mut p = 100.0;
        while p <= r_max {
            pins.push(p);
            p *= 10.0;
        }
        let mut p = 16.0;
        while p <= r_max {
            pins.push(p);
            p *= 2.0;
        }
        pins.sort_by(f64::total_cmp);
        pins
    }
}

/// Strictly increasing radii starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

/// A uniformly refined interval inserted into a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl RadialGrid {
    pub fn new(params: &GridParams) -> Result<Self> {
        if !(params.r_max > 1.0) || !params.r_max.is_finite() {
            return Err(Error::InvalidGrid(format!("r_max must exceed 1, got {}", params.r_max)));
        }
        if !(params.ratio > 1.0 && params.ratio < 2.0) {
            return Err(Error::InvalidGrid(format!("ratio must lie in (1, 2), got {}", params.ratio)));
        }
        if !(params.linear_step > 0.0 && params.linear_step <= 0.1)
            || !(params.origin_step > 0.0 && params.origin_step <= params.linear_step)
        {
            return Err(Error::InvalidGrid("invalid linear/origin step".into()));
        }
        let mut nodes = vec![0.0];
        let n_origin = (params.linear_step / params.origin_step).round() as usize;
        for i in 1..n_origin {
            nodes.push(i as f64 * params.origin_step);
        }
        let n_linear = (1.0 / params.linear_step).round() as usize;
        for i in 1..=n_linear {
            nodes.push(i as f64 * params.linear_step);
        }
        let mut k = 1;
        loop {
            let r = params.ratio.powi(k);
            if r >= params.r_max {
                break;
            }
            nodes.push(r);
            k += 1;
        }
        nodes.push(params.r_max);
        let mut grid = Self { nodes };
        grid.insert_pins(&params.pins);
        Ok(grid)
    }

    /// Grid from explicit nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.first() != Some(&0.0) || nodes.len() < 3 {
            return Err(Error::InvalidGrid("grid must start at 0 with at least 3 nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("grid must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// Adds exact nodes, dropping existing nodes within a relative 1e-9 of a pin.
    pub fn insert_pins(&mut self, pins: &[f64]) {
        let r_max = self.r_max();
        let mut pins: Vec<f64> = pins.iter().copied().filter(|p| *p > 0.0 && *p <= r_max).collect();
        if pins.is_empty() {
            return;
        }
        pins.sort_by(f64::total_cmp);
        pins.dedup();
        let near = |x: f64| pins.iter().any(|p| (x - p).abs() <= 1e-9 * p);
        let mut nodes: Vec<f64> = self
            .nodes
            .iter()
            .copied()
            .filter(|x| *x == 0.0 || *x == r_max || !near(*x))
            .collect();
        nodes.extend(pins.iter().copied().filter(|p| *p != r_max));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        self.nodes = nodes;
    }

    /// Replaces the nodes inside `[lo, hi]` by a uniform subdivision whose
    /// endpoints are exact nodes.
    pub fn refine(&mut self, refinement: Refinement) {
        let lo = refinement.lo.max(0.0);
        let hi = refinement.hi.min(self.r_max());
        if !(hi > lo) || !(refinement.step > 0.0) {
            return;
        }
        let count = ((hi - lo) / refinement.step).ceil().max(1.0) as usize;
        let mut nodes: Vec<f64> = self
            .nodes
            .iter()
            .copied()
            .filter(|x| *x < lo || *x > hi)
            .collect();
        for i in 0..=count {
            nodes.push(lo + (hi - lo) * i as f64 / count as f64);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        self.nodes = nodes;
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("nonempty grid")
    }

    /// Index of an exact node, if present.
    pub fn index_of(&self, r: f64) -> Option<usize> {
        self.nodes.binary_search_by(|v| v.total_cmp(&r)).ok()
    }
}
