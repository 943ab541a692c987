//! Discrete Fourier machinery on periodic boxes.
//!
//! Transforms are unnormalized forward / `1/n^N`-normalized inverse, applied
//! row-major over one or two axes. FFT plans are cached per length in a
//! process-wide registry so concurrent workers share them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::Grid;

type PlanKey = (usize, bool);
type PlanCache = HashMap<PlanKey, Arc<dyn Fft<f64>>>;

static PLANS: Lazy<Mutex<PlanCache>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut plans = PLANS.lock().expect("fft plan registry poisoned");
    plans
        .entry((len, inverse))
        .or_insert_with(|| {
            let direction = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
            FftPlanner::new().plan_fft(len, direction)
        })
        .clone()
}

/// Reusable transform engine for one grid shape.
#[derive(Clone)]
pub struct Transform {
    n: usize,
    dimension: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    column: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("n", &self.n).field("dimension", &self.dimension).finish()
    }
}

impl Transform {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.points_per_axis();
        let forward = plan(n, false);
        let inverse = plan(n, true);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            dimension: grid.dimension(),
            forward,
            inverse,
            column: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        let fft = self.forward.clone();
        self.apply(&*fft, data);
    }

    /// Inverse transform including the `1/n^N` normalization.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let fft = self.inverse.clone();
        self.apply(&*fft, data);
        let scale = 1.0 / (data.len() as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn apply(&mut self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n.pow(self.dimension as u32));
        // rows (last axis, contiguous)
        fft.process_with_scratch(data, &mut self.scratch);
        if self.dimension == 2 {
            for col in 0..n {
                for row in 0..n {
                    self.column[row] = data[row * n + col];
                }
                fft.process_with_scratch(&mut self.column, &mut self.scratch);
                for row in 0..n {
                    data[row * n + col] = self.column[row];
                }
            }
        }
    }

    /// Forward transform of a real array.
    pub fn forward_real(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&mut self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }
}

/// Signed integer frequency index of DFT slot `j` on an `n`-point axis.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Angular wavenumbers `2π m / (2 L)` of one axis, in DFT order.
pub fn wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.points_per_axis();
    let base = PI / grid.half_length();
    (0..n).map(|j| base * signed_index(j, n) as f64).collect()
}

/// Wavenumbers for spectral differentiation: the Nyquist mode is zeroed so a
/// real field has a real derivative.
pub fn derivative_wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.points_per_axis();
    let mut k = wavenumbers(grid);
    k[n / 2] = 0.0;
    k
}

/// Evaluates `g` at every dual-grid point, given per-axis wavenumbers, in
/// row-major order.
pub fn map_dual<F: FnMut(&[f64]) -> f64>(grid: &Grid, mut g: F) -> Vec<f64> {
    let k = wavenumbers(grid);
    let n = k.len();
    match grid.dimension() {
        1 => k.iter().map(|&kx| g(&[kx])).collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for &ky in &k {
                for &kx in &k {
                    out.push(g(&[ky, kx]));
                }
            }
            out
        }
    }
}

/// Circular shift by half a period on every axis: moves the sample at signed
/// offset 0 (DFT index 0) to the box center node.
pub fn center_origin(values: &[f64], grid: &Grid) -> Vec<f64> {
    let n = grid.points_per_axis();
    let h = n / 2;
    match grid.dimension() {
        1 => (0..n).map(|i| values[(i + h) % n]).collect(),
        _ => {
            let mut out = vec![0.0; n * n];
            for r in 0..n {
                let sr = (r + h) % n;
                for c in 0..n {
                    out[r * n + c] = values[sr * n + (c + h) % n];
                }
            }
            out
        }
    }
}
