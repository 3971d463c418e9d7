//! Uniform tensor grids on the closure of a box and functions sampled on them.

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Point};

/// Finest level accepted per dimension (points per axis = 2^level + 1).
pub const MAX_LEVEL_1D: u32 = 24;
pub const MAX_LEVEL_2D: u32 = 12;

/// Uniform grid with `2^level + 1` nodes per axis on the closed box.
/// Nodes are stored with the first axis varying fastest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    domain: AxisBox,
    level: u32,
}

impl Grid {
    pub fn new(domain: AxisBox, level: u32) -> Result<Self> {
        let max = if domain.dim() == 1 { MAX_LEVEL_1D } else { MAX_LEVEL_2D };
        if level == 0 || level > max {
            return Err(Error::Config(format!(
                "grid level must lie in 1..={max} for a {}-D domain, got {level}",
                domain.dim()
            )));
        }
        Ok(Self { domain, level })
    }

    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of intervals per axis, `2^level`.
    pub fn intervals(&self) -> usize {
        1usize << self.level
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.intervals() + 1
    }

    pub fn len(&self) -> usize {
        self.nodes_per_axis().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.side(axis) / self.intervals() as f64
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        if j == self.intervals() {
            self.domain.upper()[axis]
        } else {
            self.domain.lower()[axis] + self.spacing(axis) * j as f64
        }
    }

    /// Per-axis node indices of a flat index.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        let n = self.nodes_per_axis();
        match self.dim() {
            1 => [flat, 0],
            _ => [flat % n, flat / n],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] + self.nodes_per_axis() * idx[1],
        }
    }

    pub fn node(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        match self.dim() {
            1 => Point::x(self.coordinate(0, idx[0])),
            _ => Point::xy(self.coordinate(0, idx[0]), self.coordinate(1, idx[1])),
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    /// Fractional node coordinates of `x` (not clamped).
    pub fn fractional_index(&self, x: &Point) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = (x[k] - self.domain.lower()[k]) / self.spacing(k);
        }
        out
    }

    /// The node `x` sits on, if its fractional index is within `tol` of an
    /// integer on every axis.
    pub fn node_index_of(&self, x: &Point, tol: f64) -> Option<usize> {
        let frac = self.fractional_index(x);
        let mut idx = [0usize; 2];
        for k in 0..self.dim() {
            let r = frac[k].round();
            if (frac[k] - r).abs() > tol || r < 0.0 || r > self.intervals() as f64 {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(self.flat_index(idx))
    }

    /// Multilinear interpolation stencil (flat index, weight) at `x`, clamped
    /// to the grid. Exact nodes produce a single entry of weight one.
    pub fn stencil(&self, x: &Point, snap_tol: f64) -> Vec<(usize, f64)> {
        if let Some(k) = self.node_index_of(x, snap_tol) {
            return vec![(k, 1.0)];
        }
        let frac = self.fractional_index(x);
        let last = self.intervals();
        let mut axes = [(0usize, 0.0f64); 2];
        for k in 0..self.dim() {
            let t = frac[k].clamp(0.0, last as f64);
            let j = (t.floor() as usize).min(last - 1);
            axes[k] = (j, t - j as f64);
        }
        match self.dim() {
            1 => {
                let (j, w) = axes[0];
                vec![(j, 1.0 - w), (j + 1, w)]
            }
            _ => {
                let (i, wx) = axes[0];
                let (j, wy) = axes[1];
                vec![
                    (self.flat_index([i, j]), (1.0 - wx) * (1.0 - wy)),
                    (self.flat_index([i + 1, j]), wx * (1.0 - wy)),
                    (self.flat_index([i, j + 1]), (1.0 - wx) * wy),
                    (self.flat_index([i + 1, j + 1]), wx * wy),
                ]
            }
        }
    }

    /// Composite trapezoid weight of a node.
    pub fn trapezoid_weight(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let last = self.intervals();
        (0..self.dim())
            .map(|k| {
                let h = self.spacing(k);
                if idx[k] == 0 || idx[k] == last {
                    0.5 * h
                } else {
                    h
                }
            })
            .product()
    }
}

/// Values of a scalar function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "grid at level {} has {} nodes but {} values were given",
                grid.level(),
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("sampled values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { values: vec![0.0; grid.len()], grid }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Point) -> f64) -> Self {
        let values = grid.nodes().map(|x| f(&x)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Multilinear interpolation, clamped to the grid.
    pub fn value_at(&self, x: &Point) -> f64 {
        self.grid.stencil(x, 1e-9).iter().map(|&(k, w)| w * self.values[k]).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &SampledFunction) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    pub fn scaled(&self, c: f64) -> SampledFunction {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Pointwise `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: f64, other: &SampledFunction, b: f64) -> Result<SampledFunction> {
        if self.grid != other.grid {
            return Err(Error::Invalid("sampled functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grid: self.grid, values })
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
