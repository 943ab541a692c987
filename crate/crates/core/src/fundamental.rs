//! The smooth part `W` of the fundamental solution of `u_t = J*u - u`,
//! evaluated exactly per frequency: `Ŵ(ξ, t) = e^{t(Ĵ(ξ) - 1)} - e^{-t}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::{KernelSpec, SpectralSymbol};
use crate::spectral::{center_origin, derivative_wavenumbers, Transform};

/// `e^{t(j - 1)} - e^{-t}` without cancellation at small `t`.
pub fn w_multiplier(symbol_value: f64, t: f64) -> f64 {
    let tj = t * symbol_value;
    if tj.abs() < 1.0 {
        (-t).exp() * tj.exp_m1()
    } else {
        (t * (symbol_value - 1.0)).exp() - (-t).exp()
    }
}

/// `∂_t` of [`w_multiplier`]: `(ĵ - 1) Ŵ + e^{-t} ĵ`.
pub fn wt_multiplier(symbol_value: f64, t: f64) -> f64 {
    (symbol_value - 1.0) * w_multiplier(symbol_value, t) + (-t).exp() * symbol_value
}

/// `W(·, t)` on a grid.
#[derive(Debug, Clone)]
pub struct WEvaluation {
    pub field: Field,
    pub kernel: KernelSpec,
    pub t: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("W needs t > 0, got {t}")));
    }
    Ok(())
}

/// Inverse-transforms a real even multiplier into a physical field with the
/// kernel origin at the box center, scaled as a density.
fn multiplier_to_field(grid: &Grid, multiplier: Vec<Complex64>, t: f64) -> Field {
    let mut transform = Transform::new(grid);
    let raw = transform.inverse_real(multiplier);
    let scale = 1.0 / grid.cell_volume();
    let values = center_origin(&raw, grid).into_iter().map(|v| v * scale).collect();
    Field::from_parts(*grid, values, t)
}

fn symbol_for(kernel: &KernelSpec, grid: &Grid) -> Result<SpectralSymbol> {
    kernel.spectral_symbol(grid)
}

pub fn w_field(kernel: &KernelSpec, grid: &Grid, t: f64) -> Result<WEvaluation> {
    check_time(t)?;
    let symbol = symbol_for(kernel, grid)?;
    Ok(w_field_with_symbol(kernel, &symbol, t))
}

pub fn w_field_with_symbol(kernel: &KernelSpec, symbol: &SpectralSymbol, t: f64) -> WEvaluation {
    let multiplier = symbol.values().iter().map(|&j| Complex64::new(w_multiplier(j, t), 0.0)).collect();
    WEvaluation { field: multiplier_to_field(symbol.grid(), multiplier, t), kernel: *kernel, t }
}

/// Components of `∇W(·, t)`, one field per axis.
pub fn grad_w_field(kernel: &KernelSpec, grid: &Grid, t: f64) -> Result<Vec<Field>> {
    check_time(t)?;
    let symbol = symbol_for(kernel, grid)?;
    Ok(grad_w_with_symbol(&symbol, t))
}

fn grad_w_with_symbol(symbol: &SpectralSymbol, t: f64) -> Vec<Field> {
    let grid = symbol.grid();
    let n = grid.points_per_axis();
    let k = derivative_wavenumbers(grid);
    let w: Vec<f64> = symbol.values().iter().map(|&j| w_multiplier(j, t)).collect();
    (0..grid.dimension())
        .map(|axis| {
            let multiplier = w
                .iter()
                .enumerate()
                .map(|(idx, &m)| {
                    // axis 0 is the row index in 2-d, the only index in 1-d
                    let slot = match (grid.dimension(), axis) {
                        (1, _) => idx,
                        (_, 0) => idx / n,
                        _ => idx % n,
                    };
                    Complex64::new(0.0, k[slot] * m)
                })
                .collect();
            multiplier_to_field(grid, multiplier, t)
        })
        .collect()
}

/// `W_t(·, t)`.
pub fn wt_field(kernel: &KernelSpec, grid: &Grid, t: f64) -> Result<Field> {
    check_time(t)?;
    let symbol = symbol_for(kernel, grid)?;
    Ok(wt_with_symbol(&symbol, t))
}

fn wt_with_symbol(symbol: &SpectralSymbol, t: f64) -> Field {
    let multiplier = symbol.values().iter().map(|&j| Complex64::new(wt_multiplier(j, t), 0.0)).collect();
    multiplier_to_field(symbol.grid(), multiplier, t)
}

/// Pointwise `|∇W|`.
pub fn gradient_magnitude(components: &[Field]) -> Field {
    let first = &components[0];
    let values = (0..first.values().len())
        .map(|i| components.iter().map(|c| c.values()[i].powi(2)).sum::<f64>().sqrt())
        .collect();
    Field::from_parts(*first.grid(), values, first.time())
}

/// The far-field region `{|x| >= K √t} ∩ {|x| >= factor · R_J}` of the barrier estimates,
/// truncated at `|x| <= L/2` where periodic images are still negligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusion {
    pub min_radius_factor: f64,
    #[serde(rename = "k")]
    pub sqrt_time_factor: f64,
}

impl Default for Exclusion {
    fn default() -> Self {
        Self { min_radius_factor: 2.0, sqrt_time_factor: 4.0 }
    }
}

impl Exclusion {
    pub fn inner_radius(&self, kernel: &KernelSpec, t: f64) -> f64 {
        (self.sqrt_time_factor * t.sqrt()).max(self.min_radius_factor * kernel.support_radius())
    }
}

/// Measured barrier constants at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierRow {
    pub t: f64,
    /// `∫ W(·, t)`
    pub mass: f64,
    /// `sup W(·, t)`
    pub sup: f64,
    /// `sup_A W |x|^{N+2} / t`
    pub c_w: f64,
    /// `sup_A |∇W| |x|^{N+3} / t`
    pub c_grad: f64,
    /// `sup_A (|W_t| - e^{-t} J)_+ (1 + |x|)^{N+4} / t`
    pub c_t: f64,
    /// `‖∇W‖_1`
    pub l1_grad: f64,
    /// `‖W_t‖_1`
    pub l1_wt: f64,
    /// `‖∇W‖_1 / min(t, t^{-1/2})`, bounded on both time regimes.
    pub g1: f64,
    /// `‖W_t‖_1 · max(1, t)`
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub rows: Vec<BarrierRow>,
    pub max_c_w: f64,
    pub max_c_grad: f64,
    pub max_c_t: f64,
    pub max_g1: f64,
    pub max_t1: f64,
}

/// Max/min ratio of a positive series; infinite if any entry is not positive.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > 0.0 && lo.is_finite() {
        hi / lo
    } else {
        f64::INFINITY
    }
}

pub fn barrier_row(kernel: &KernelSpec, symbol: &SpectralSymbol, t: f64, exclusion: &Exclusion) -> Result<BarrierRow> {
    check_time(t)?;
    let grid = *symbol.grid();
    let inner = exclusion.inner_radius(kernel, t);
    let outer = 0.5 * grid.half_length();
    if inner >= outer {
        return Err(Error::EmptyExclusionRegion { radius: inner, half_length: grid.half_length() });
    }
    let w = w_field_with_symbol(kernel, symbol, t).field;
    let grad = gradient_magnitude(&grad_w_with_symbol(symbol, t));
    let wt = wt_with_symbol(symbol, t);
    let n = grid.dimension() as i32;
    let decay = (-t).exp();
    let (mut c_w, mut c_grad, mut c_t) = (0.0f64, 0.0f64, 0.0f64);
    for (i, r) in grid.radii().into_iter().enumerate() {
        if r < inner || r > outer {
            continue;
        }
        c_w = c_w.max(w.values()[i] * r.powi(n + 2) / t);
        c_grad = c_grad.max(grad.values()[i] * r.powi(n + 3) / t);
        let excess = (wt.values()[i].abs() - decay * kernel.evaluate_radial(r)).max(0.0);
        c_t = c_t.max(excess * (1.0 + r).powi(n + 4) / t);
    }
    let l1_grad = grad.lq_norm(1.0);
    let l1_wt = wt.lq_norm(1.0);
    Ok(BarrierRow {
        t,
        mass: w.integrate(),
        sup: w.sup_norm(),
        c_w,
        c_grad,
        c_t,
        l1_grad,
        l1_wt,
        g1: l1_grad / t.min(t.powf(-0.5)),
        t1: l1_wt * t.max(1.0),
    })
}

/// Barrier constants over an increasing list of times (rows ordered by `t`).
pub fn barrier_report(kernel: &KernelSpec, grid: &Grid, t_list: &[f64], exclusion: &Exclusion) -> Result<BarrierReport> {
    if t_list.is_empty() {
        return Err(Error::InvalidParameter("barrier_report needs at least one time".into()));
    }
    if t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("barrier_report times must be increasing".into()));
    }
    let symbol = kernel.spectral_symbol(grid)?;
    let rows = t_list
        .par_iter()
        .map(|&t| barrier_row(kernel, &symbol, t, exclusion))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&BarrierRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(BarrierReport {
        max_c_w: max(|r| r.c_w),
        max_c_grad: max(|r| r.c_grad),
        max_c_t: max(|r| r.c_t),
        max_g1: max(|r| r.g1),
        max_t1: max(|r| r.t1),
        rows,
    })
}
