//! Reference solver for the limit problem `U_t - a ΔU = -c0 U^p`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::quadrature::{self, gauss_legendre};
use crate::solver::{run_split, PowerAbsorption, SplitStepper, Trajectory};
use crate::spectral::map_dual;

/// Initial datum of the limit problem.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitDatum {
    /// `A |x|^{-α}`, `0 < α < N`.
    PowerLaw { amplitude: f64, alpha: f64 },
    /// `M δ`
    PointSource { mass: f64 },
    Field(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitProblem {
    pub diffusivity: f64,
    pub c0: f64,
    pub p: f64,
    pub datum: LimitDatum,
}

/// Plain-data form of the scalar part of a [`LimitProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCoefficients {
    pub diffusivity: f64,
    pub c0: f64,
    pub p: f64,
}

impl LimitProblem {
    fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.diffusivity.is_finite() && self.diffusivity > 0.0) {
            return Err(Error::InvalidParameter(format!("diffusivity must be positive, got {}", self.diffusivity)));
        }
        if !(self.c0.is_finite() && self.c0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("c0 must be >= 0, got {}", self.c0)));
        }
        if self.c0 > 0.0 {
            PowerAbsorption::new(self.p, self.c0)?;
        }
        match &self.datum {
            LimitDatum::PowerLaw { alpha, .. } => {
                let n = grid.dimension() as f64;
                if *alpha >= n {
                    return Err(Error::SingularDatumUnsupported { alpha: *alpha, dimension: grid.dimension() });
                }
                if *alpha <= 0.0 {
                    return Err(Error::InvalidAlpha { alpha: *alpha, dimension: grid.dimension(), reason: "need alpha > 0" });
                }
            }
            LimitDatum::PointSource { mass } if !(mass.is_finite() && *mass >= 0.0) => {
                return Err(Error::InvalidParameter(format!("point-source mass must be >= 0, got {mass}")));
            }
            LimitDatum::Field(f) if f.grid() != grid => {
                return Err(Error::GridMismatch("limit datum field is on a different grid".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

/// `M (4π a t)^{-N/2} exp(-|x|^2 / 4 a t)` on the grid.
pub fn gaussian_point_source(mass: f64, diffusivity: f64, grid: &Grid, t: f64) -> Field {
    let n = grid.dimension() as f64;
    let peak = mass * (4.0 * PI * diffusivity * t).powf(-0.5 * n);
    let inv = 1.0 / (4.0 * diffusivity * t);
    Field::from_radial(*grid, t, |r| peak * (-r * r * inv).exp())
}

/// `exp(-a |ξ|^2 dt)`
pub fn heat_multiplier(grid: &Grid, diffusivity: f64, dt: f64) -> Vec<f64> {
    map_dual(grid, |k| (-diffusivity * dt * k.iter().map(|v| v * v).sum::<f64>()).exp())
}

/// Cell averages of `A |x|^{-α}`; the singular cell is averaged analytically.
pub fn power_law_cell_average(grid: &Grid, amplitude: f64, alpha: f64) -> Result<Field> {
    let n = grid.dimension();
    if alpha >= n as f64 {
        return Err(Error::SingularDatumUnsupported { alpha, dimension: n });
    }
    let h = 0.5 * grid.spacing();
    let values = match n {
        1 => {
            // antiderivative of |x|^{-α}: sign(x) |x|^{1-α} / (1-α)
            let prim = |x: f64| x.signum() * x.abs().powf(1.0 - alpha) / (1.0 - alpha);
            grid.axis().into_iter().map(|x| amplitude * (prim(x + h) - prim(x - h)) / (2.0 * h)).collect()
        }
        _ => {
            let (nodes, weights) = gauss_legendre(6);
            // ∫ over the square [-h, h]^2 of r^{-α} = 8 ∫_0^{π/4} ∫_0^{h / cos θ} r^{1-α} dr dθ
            let angular = quadrature::integrate(|th| th.cos().powf(alpha - 2.0), 0.0, PI / 4.0, 1e-15);
            let singular = 8.0 * h.powf(2.0 - alpha) / (2.0 - alpha) * angular / (4.0 * h * h);
            let origin = grid.origin_index();
            (0..grid.len())
                .map(|i| {
                    if i == origin {
                        return amplitude * singular;
                    }
                    let p = grid.point(i);
                    let mut acc = 0.0;
                    for (a, wa) in nodes.iter().zip(&weights) {
                        for (b, wb) in nodes.iter().zip(&weights) {
                            let x = p[0] + h * a;
                            let y = p[1] + h * b;
                            acc += wa * wb * (x * x + y * y).powf(-0.5 * alpha);
                        }
                    }
                    amplitude * acc / 4.0
                })
                .collect()
        }
    };
    Field::new(*grid, values, 0.0)
}

/// Strang integration of the limit problem. Snapshot times are absolute; a
/// point-source datum starts from the exact Gaussian at `t0 = dt`.
pub fn evolve_limit(problem: &LimitProblem, grid: &Grid, dt: f64, snapshot_times: &[f64]) -> Result<Trajectory> {
    problem.validate(grid)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("snapshot_times must be strictly increasing".into()));
    }
    let (u0, t0) = match &problem.datum {
        LimitDatum::PowerLaw { amplitude, alpha } => (power_law_cell_average(grid, *amplitude, *alpha)?, 0.0),
        LimitDatum::PointSource { mass } => (gaussian_point_source(*mass, problem.diffusivity, grid, dt), dt),
        LimitDatum::Field(f) => (f.clone().with_time(0.0), 0.0),
    };
    let snapshot_steps = snapshot_times
        .iter()
        .map(|&t| {
            let idx = ((t - t0) / dt).round();
            if idx < 0.0 || (t0 + idx * dt - t).abs() > 1e-9 * t.max(1.0) {
                return Err(Error::InvalidParameter(format!("snapshot time {t} is not t0 + j dt (t0 = {t0}, dt = {dt})")));
            }
            Ok(idx as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    let steps = snapshot_steps.last().copied().unwrap_or(0);
    let absorption = if problem.c0 > 0.0 { Some(PowerAbsorption::new(problem.p, problem.c0)?) } else { None };
    let stepper = SplitStepper::new(grid, heat_multiplier(grid, problem.diffusivity, dt), absorption, dt);
    let p = absorption.map(|a| a.exponent());
    let mut traj = run_split(*grid, stepper, &u0, dt, steps, &snapshot_steps, &[], p, t0)?;
    // pin snapshot stamps to the requested times exactly
    for (f, &t) in traj.snapshots.iter_mut().zip(snapshot_times) {
        *f = f.clone().with_time(t);
    }
    for (row, &t) in traj.ledger.iter_mut().zip(snapshot_times) {
        row.t = t;
    }
    Ok(traj)
}

/// Sup over `|x| <= L/(2k)` of `|k^α U(kx, k^2 t) - U(x, t)|` for a power-law datum.
pub fn self_similarity_check(problem: &LimitProblem, grid: &Grid, t: f64, dt: f64, k: f64) -> Result<f64> {
    let alpha = match problem.datum {
        LimitDatum::PowerLaw { alpha, .. } => alpha,
        _ => return Err(Error::InvalidParameter("self-similarity check needs a power-law datum".into())),
    };
    if k.is_nan() || k < 1.0 {
        return Err(Error::InvalidParameter(format!("rescaling factor must be >= 1, got {k}")));
    }
    if k == 1.0 {
        return Ok(0.0);
    }
    let traj = evolve_limit(problem, grid, dt, &[t, k * k * t])?;
    let (base, late) = (&traj.snapshots[0], &traj.snapshots[1]);
    let window = grid.half_length() / (2.0 * k);
    let scale = k.powf(alpha);
    let mut defect = 0.0f64;
    for (i, r) in grid.radii().into_iter().enumerate() {
        if r > window {
            continue;
        }
        let p = grid.point(i);
        let x: Vec<f64> = p[..grid.dimension()].iter().map(|c| c * k).collect();
        let rescaled = scale * late.interpolate(&x)?;
        defect = defect.max((rescaled - base.values()[i]).abs());
    }
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_peak_and_mass() {
        let grid = Grid::new(1, 4096, 20.0).unwrap();
        let g = gaussian_point_source(1.0, 0.1, &grid, 1.0);
        assert!((g.value_at_origin() - 0.892_062_058_076_386_3).abs() < 1e-12);
        assert!((g.integrate() - 1.0).abs() < 1e-10);
        let grid2 = Grid::new(2, 512, 8.0).unwrap();
        let g2 = gaussian_point_source(2.0, 0.3, &grid2, 1.5);
        assert!((g2.value_at_origin() - 2.0 / (4.0 * PI * 0.45)).abs() < 1e-12);
        assert!((g2.integrate() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn pure_heat_point_source_is_gaussian() {
        let grid = Grid::new(1, 2048, 32.0).unwrap();
        let problem = LimitProblem { diffusivity: 0.1, c0: 0.0, p: 3.0, datum: LimitDatum::PointSource { mass: 1.5 } };
        let times = [0.5, 2.0, 10.0];
        let traj = evolve_limit(&problem, &grid, 0.01, &times).unwrap();
        for (snap, &t) in traj.snapshots.iter().zip(&times) {
            let exact = gaussian_point_source(1.5, 0.1, &grid, t);
            let err = snap.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "t={t} err={err}");
        }
    }

    #[test]
    fn constant_datum_follows_ode() {
        let grid = Grid::new(2, 256, 4.0).unwrap();
        let c = 2.0;
        let p = 3.0;
        let datum = Field::from_fn(grid, 0.0, |_| c);
        let problem = LimitProblem { diffusivity: 0.7, c0: 1.0, p, datum: LimitDatum::Field(datum) };
        let traj = evolve_limit(&problem, &grid, 0.05, &[1.0, 3.0]).unwrap();
        for snap in &traj.snapshots {
            let exact = (c.powf(1.0 - p) + (p - 1.0) * snap.time()).powf(-1.0 / (p - 1.0));
            assert!(snap.values().iter().all(|v| (v - exact).abs() < 1e-12));
        }
    }

    #[test]
    fn singular_cell_average_1d() {
        let grid = Grid::new(1, 256, 4.0).unwrap();
        let f = power_law_cell_average(&grid, 1.0, 0.5).unwrap();
        let h = grid.spacing() / 2.0;
        // (1/2h) ∫_{-h}^{h} |x|^{-1/2} = 2 h^{-1/2}
        assert!((f.value_at_origin() - 2.0 / h.sqrt()).abs() < 1e-12);
        // cells tile [-L - h, L - h)
        let prim = |x: f64| x.signum() * x.abs().sqrt() * 2.0;
        let exact = prim(4.0 - h) - prim(-4.0 - h);
        assert!((f.integrate() - exact).abs() < 1e-9);
    }

    #[test]
    fn singular_cell_average_2d() {
        let grid = Grid::new(2, 256, 2.0).unwrap();
        let f = power_law_cell_average(&grid, 1.0, 1.0).unwrap();
        let h = grid.spacing() / 2.0;
        // ∫_{[-h,h]^2} 1/r = 8 h asinh(1)
        let expected = 8.0 * h * 1f64.asinh() / (4.0 * h * h);
        assert!((f.value_at_origin() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonintegrable_power() {
        let grid = Grid::new(1, 256, 4.0).unwrap();
        let problem = LimitProblem { diffusivity: 0.1, c0: 0.0, p: 3.0, datum: LimitDatum::PowerLaw { amplitude: 1.0, alpha: 1.0 } };
        assert!(matches!(evolve_limit(&problem, &grid, 0.1, &[1.0]), Err(Error::SingularDatumUnsupported { .. })));
    }

    #[test]
    fn identity_rescaling_has_no_defect() {
        let grid = Grid::new(1, 256, 4.0).unwrap();
        let problem = LimitProblem { diffusivity: 0.1, c0: 0.0, p: 5.0, datum: LimitDatum::PowerLaw { amplitude: 1.0, alpha: 0.5 } };
        assert_eq!(self_similarity_check(&problem, &grid, 1.0, 0.1, 1.0).unwrap(), 0.0);
    }
}
