//! Radial, compactly supported convolution kernels `J` with unit mass.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature;
use crate::spectral::{signed_index, Transform};

/// Minimum number of grid spacings per support radius.
pub const MIN_POINTS_PER_RADIUS: f64 = 16.0;

const QUAD_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `exp(-1/(1 - r^2))`, smooth.
    Bump,
    /// `(1 - r^2)_+`
    Epanechnikov,
    /// `(1 - r^2)_+^2`
    Quartic,
}

impl KernelFamily {
    /// Unnormalized profile as a function of `r = |x| / R_J`.
    pub fn profile(self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - r * r;
        match self {
            KernelFamily::Bump => (-1.0 / s).exp(),
            KernelFamily::Epanechnikov => s,
            KernelFamily::Quartic => s * s,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Bump => "bump",
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Quartic => "quartic",
        }
    }
}

/// Configuration form of a kernel: the normalization is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub support_radius: f64,
    pub dimension: usize,
}

/// A normalized radial kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelConfig", into = "KernelConfig")]
pub struct KernelSpec {
    family: KernelFamily,
    support_radius: f64,
    dimension: usize,
    normalization: f64,
}

impl TryFrom<KernelConfig> for KernelSpec {
    type Error = Error;
    fn try_from(c: KernelConfig) -> Result<Self> {
        KernelSpec::new(c.family, c.support_radius, c.dimension)
    }
}

impl From<KernelSpec> for KernelConfig {
    fn from(k: KernelSpec) -> Self {
        KernelConfig { family: k.family, support_radius: k.support_radius, dimension: k.dimension }
    }
}

/// `∫_0^1 profile(r) r^m dr`
fn radial_moment(family: KernelFamily, m: i32) -> f64 {
    // The bump profile is flat to all orders at r = 1, so the open endpoint is harmless.
    quadrature::integrate(|r| family.profile(r) * r.powi(m), 0.0, 1.0, QUAD_TOL)
}

/// Surface measure of the unit sphere: `∫_{R^N} g(|x|) dx = ω_N ∫ g(r) r^{N-1} dr`.
fn sphere_measure(dimension: usize) -> f64 {
    match dimension {
        1 => 2.0,
        _ => 2.0 * PI,
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, support_radius: f64, dimension: usize) -> Result<Self> {
        if !(support_radius.is_finite() && support_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("support_radius must be positive, got {support_radius}")));
        }
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidParameter(format!("kernel dimension must be 1 or 2, got {dimension}")));
        }
        let raw_mass = sphere_measure(dimension)
            * support_radius.powi(dimension as i32)
            * radial_moment(family, dimension as i32 - 1);
        Ok(Self { family, support_radius, dimension, normalization: 1.0 / raw_mass })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `J` at distance `r = |x|` from the origin.
    pub fn evaluate_radial(&self, r: f64) -> f64 {
        self.normalization * self.family.profile(r.abs() / self.support_radius)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.evaluate_radial(x.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// `∫ J`, by quadrature (1 up to quadrature error).
    pub fn mass(&self) -> f64 {
        self.normalization
            * sphere_measure(self.dimension)
            * self.support_radius.powi(self.dimension as i32)
            * radial_moment(self.family, self.dimension as i32 - 1)
    }

    /// The effective diffusivity `(1/2N) ∫ J(x) |x|^2 dx`.
    pub fn diffusivity(&self) -> f64 {
        let n = self.dimension as i32;
        self.normalization * sphere_measure(self.dimension) * self.support_radius.powi(n + 2) * radial_moment(self.family, n + 1)
            / (2.0 * n as f64)
    }

    /// Kernel `k^N J(k x)`: same family, support radius divided by `k`.
    pub fn dilated(&self, k: f64) -> Result<Self> {
        Self::new(self.family, self.support_radius / k, self.dimension)
    }

    pub fn check_resolved(&self, grid: &Grid) -> Result<()> {
        if grid.dimension() != self.dimension {
            return Err(Error::GridMismatch(format!(
                "kernel in dimension {} paired with a {}-d grid",
                self.dimension,
                grid.dimension()
            )));
        }
        let points_per_radius = self.support_radius / grid.spacing();
        if points_per_radius < MIN_POINTS_PER_RADIUS * (1.0 - 1e-12) {
            return Err(Error::UnderresolvedKernel { points_per_radius });
        }
        Ok(())
    }

    /// `J` sampled at signed node offsets, with the origin in DFT slot 0.
    pub fn sample_wrapped(&self, grid: &Grid) -> Vec<f64> {
        let n = grid.points_per_axis();
        let dx = grid.spacing();
        let offsets: Vec<f64> = (0..n).map(|j| signed_index(j, n) as f64 * dx).collect();
        match grid.dimension() {
            1 => offsets.iter().map(|&x| self.evaluate_radial(x)).collect(),
            _ => {
                let mut out = Vec::with_capacity(n * n);
                for &y in &offsets {
                    for &x in &offsets {
                        out.push(self.evaluate_radial((x * x + y * y).sqrt()));
                    }
                }
                out
            }
        }
    }

    /// Discrete symbol `Ĵ` on the dual grid, renormalized so `Ĵ(0) = 1`.
    pub fn spectral_symbol(&self, grid: &Grid) -> Result<SpectralSymbol> {
        self.check_resolved(grid)?;
        let samples = self.sample_wrapped(grid);
        let raw_mass = samples.iter().sum::<f64>() * grid.cell_volume();
        let mut transform = Transform::new(grid);
        let spectrum = transform.forward_real(&samples);
        let zero = spectrum[0].re;
        let values = spectrum.iter().map(|c| c.re / zero).collect();
        Ok(SpectralSymbol { grid: *grid, values, raw_mass })
    }
}

/// `Ĵ` sampled on the dual grid of a particular [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSymbol {
    grid: Grid,
    values: Vec<f64>,
    raw_mass: f64,
}

impl SpectralSymbol {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ J(x_i) dx^N` before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
