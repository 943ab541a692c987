//! Periodic uniform grids and the real fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::SpectralSymbol;
use crate::spectral::Transform;

/// Periodic box `[-L, L)^N` with `n` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dimension: usize,
    points_per_axis: usize,
    half_length: f64,
}

/// Plain-data description of a [`Grid`], as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub points_per_axis: usize,
    pub half_length: f64,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;
    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.dimension, spec.points_per_axis, spec.half_length)
    }
}

impl From<Grid> for GridSpec {
    fn from(grid: Grid) -> Self {
        GridSpec { dimension: grid.dimension, points_per_axis: grid.points_per_axis, half_length: grid.half_length }
    }
}

pub const MIN_POINTS_PER_AXIS: usize = 256;

impl Grid {
    pub fn new(dimension: usize, points_per_axis: usize, half_length: f64) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidParameter(format!("grid dimension must be 1 or 2, got {dimension}")));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "points_per_axis must be a power of two >= {MIN_POINTS_PER_AXIS}, got {points_per_axis}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidParameter(format!("half_length must be positive, got {half_length}")));
        }
        Ok(Self { dimension, points_per_axis, half_length })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    /// Volume element `dx^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    /// Node coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coordinate(i)).collect()
    }

    /// Coordinates of the node with flat index `flat`.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        match self.dimension {
            1 => [self.coordinate(flat), 0.0],
            _ => [self.coordinate(flat / n), self.coordinate(flat % n)],
        }
    }

    /// `|x|` of every node, row-major.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let p = self.point(i);
                (p[0] * p[0] + p[1] * p[1]).sqrt()
            })
            .collect()
    }

    /// Same box with twice the half-length and twice the nodes (same spacing).
    pub fn doubled(&self) -> Self {
        Self { points_per_axis: 2 * self.points_per_axis, half_length: 2.0 * self.half_length, ..*self }
    }

    /// Flat index of the node at the box center (x = 0).
    pub fn origin_index(&self) -> usize {
        let h = self.points_per_axis / 2;
        match self.dimension {
            1 => h,
            _ => h * self.points_per_axis + h,
        }
    }
}

/// Real values sampled on a [`Grid`] at a time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonfiniteState { time, detail: format!("node {bad} holds {}", values[bad]) });
        }
        Ok(Self { grid, values, time })
    }

    /// Crate-internal constructor for values already known to be finite.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, time }
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        Self { grid, values: vec![0.0; grid.len()], time }
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, time: f64, f: F) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..grid.dimension()])
            })
            .collect();
        Self { grid, values, time }
    }

    /// Samples a radial profile `g(|x|)`.
    pub fn from_radial<F: Fn(f64) -> f64>(grid: Grid, time: f64, g: F) -> Self {
        let values = grid.radii().into_iter().map(g).collect();
        Self { grid, values, time }
    }

    /// Discrete delta of unit mass at the box center.
    pub fn delta(grid: Grid) -> Self {
        let mut f = Self::zeros(grid, 0.0);
        f.values[grid.origin_index()] = 1.0 / grid.cell_volume();
        f
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

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn value_at_origin(&self) -> f64 {
        self.values[self.grid.origin_index()]
    }

    /// Pointwise map, keeping grid and time.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), time: self.time }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values, time: self.time })
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Riemann sum `Σ u dx^N`.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(Σ |u|^q dx^N)^{1/q}`; `q = ∞` gives the sup norm.
    pub fn lq_norm(&self, q: f64) -> f64 {
        assert!(q >= 1.0, "lq_norm needs q >= 1");
        if q.is_infinite() {
            return self.sup_norm();
        }
        if q == 1.0 {
            return self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume();
        }
        (self.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * self.grid.cell_volume()).powf(1.0 / q)
    }

    fn ball_nodes(&self, radius: f64) -> impl Iterator<Item = f64> + '_ {
        let grid = self.grid;
        self.values.iter().enumerate().filter_map(move |(i, &v)| {
            let p = grid.point(i);
            (p[0] * p[0] + p[1] * p[1] <= radius * radius).then_some(v)
        })
    }

    /// Riemann sum restricted to `|x| <= radius`.
    pub fn integrate_ball(&self, radius: f64) -> f64 {
        self.ball_nodes(radius).sum::<f64>() * self.grid.cell_volume()
    }

    /// Sup norm restricted to `|x| <= radius`.
    pub fn sup_norm_ball(&self, radius: f64) -> f64 {
        self.ball_nodes(radius).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `L^q` norm restricted to `|x| <= radius`.
    pub fn lq_norm_ball(&self, q: f64, radius: f64) -> f64 {
        assert!(q >= 1.0, "lq_norm needs q >= 1");
        if q.is_infinite() {
            return self.sup_norm_ball(radius);
        }
        (self.ball_nodes(radius).map(|v| v.abs().powf(q)).sum::<f64>() * self.grid.cell_volume()).powf(1.0 / q)
    }

    /// Multilinear interpolation between the `2^N` surrounding nodes
    /// (periodic wrap on the upper side).
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let grid = &self.grid;
        let l = grid.half_length();
        if x.len() != grid.dimension() || x.iter().any(|&c| !(c >= -l && c < l)) {
            return Err(Error::OutOfDomain { point: x.to_vec(), half_length: l });
        }
        let n = grid.points_per_axis();
        let dx = grid.spacing();
        let locate = |c: f64| {
            let s = (c + l) / dx;
            let i = (s.floor() as usize).min(n - 1);
            (i, (i + 1) % n, s - i as f64)
        };
        Ok(match grid.dimension() {
            1 => {
                let (i0, i1, w) = locate(x[0]);
                (1.0 - w) * self.values[i0] + w * self.values[i1]
            }
            _ => {
                let (r0, r1, wr) = locate(x[0]);
                let (c0, c1, wc) = locate(x[1]);
                let v = |r: usize, c: usize| self.values[r * n + c];
                (1.0 - wr) * ((1.0 - wc) * v(r0, c0) + wc * v(r0, c1)) + wr * ((1.0 - wc) * v(r1, c0) + wc * v(r1, c1))
            }
        })
    }
}

/// Periodic convolution `J * u` through the transform.
pub fn convolve(field: &Field, symbol: &SpectralSymbol) -> Result<Field> {
    if symbol.grid() != field.grid() {
        return Err(Error::GridMismatch(format!("symbol on {:?}, field on {:?}", symbol.grid(), field.grid())));
    }
    apply_multiplier(field, symbol.values())
}

/// Multiplies the transform of `field` by a real, even multiplier.
pub fn apply_multiplier(field: &Field, multiplier: &[f64]) -> Result<Field> {
    let grid = *field.grid();
    if multiplier.len() != grid.len() {
        return Err(Error::GridMismatch(format!("multiplier of length {} on {} nodes", multiplier.len(), grid.len())));
    }
    let mut transform = Transform::new(&grid);
    let mut spectrum = transform.forward_real(field.values());
    for (s, m) in spectrum.iter_mut().zip(multiplier) {
        *s *= *m;
    }
    let values = transform.inverse_real(spectrum);
    Field::new(grid, values, field.time())
}
