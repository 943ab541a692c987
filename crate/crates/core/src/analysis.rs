//! Turns trajectories into measured rates, convergence metrics, and audits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::rescaling::ScalingLaw;
use crate::solver::Trajectory;

pub const MIN_FIT_POINTS: usize = 5;

/// Least-squares slope of `log(value)` against `log(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

pub fn rate_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidParameter("rate_fit needs strictly increasing times".into()));
    }
    let inside: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    if inside.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints { needed: MIN_FIT_POINTS, found: inside.len() });
    }
    if let Some(&(time, value)) = inside.iter().find(|(_, v)| v.is_nan() || *v <= 0.0) {
        return Err(Error::NonpositiveValue { time, value });
    }
    let pts: Vec<(f64, f64)> = inside.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - exponent * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit { exponent, intercept, r_squared, window, n_points: pts.len() })
}

/// Windowed convergence metric `sup_{|x| <= R√t} |f(√t) u(x, t) - t^{γ/2} U(x, t)|`,
/// which is `t^{γ/2} |g(t) u - U|` with the family's log correction `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSeries {
    pub entries: Vec<(f64, f64)>,
    pub window_factor: f64,
    /// `γ` in `t^{γ/2}`.
    pub decay_power: f64,
}

impl ConvergenceSeries {
    pub fn metrics(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn is_decreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].1 < w[0].1)
    }

    /// Last metric over first metric.
    pub fn reduction(&self) -> f64 {
        match (self.entries.first(), self.entries.last()) {
            (Some(a), Some(b)) => b.1 / a.1,
            _ => f64::NAN,
        }
    }
}

/// Metric of one snapshot against its reference.
pub fn convergence_metric(u: &Field, reference: &Field, law: &ScalingLaw, window_factor: f64) -> Result<f64> {
    u.check_same_grid(reference)?;
    let t = u.time();
    let radius = window_factor * t.sqrt();
    let limit = 0.5 * u.grid().half_length();
    if radius > limit {
        return Err(Error::WindowExceedsDomain { radius, limit });
    }
    let scale_u = law.f(t.sqrt());
    let scale_ref = t.powf(0.5 * law.decay_power());
    let grid = u.grid();
    let mut metric = 0.0f64;
    for (i, r) in grid.radii().into_iter().enumerate() {
        if r <= radius {
            metric = metric.max((scale_u * u.values()[i] - scale_ref * reference.values()[i]).abs());
        }
    }
    Ok(metric)
}

pub fn convergence_series<R>(traj: &Trajectory, reference: R, law: &ScalingLaw, window_factor: f64) -> Result<ConvergenceSeries>
where
    R: Fn(f64) -> Result<Field> + Sync,
{
    let entries = traj
        .snapshots
        .par_iter()
        .filter(|s| s.time() > 0.0)
        .map(|s| {
            let reference = reference(s.time())?;
            Ok((s.time(), convergence_metric(s, &reference, law, window_factor)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceSeries { entries, window_factor, decay_power: law.decay_power() })
}

/// `∫u(t)` against `∫u0 - A(t)` at every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassAudit {
    pub t_list: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `∫u0 - A(t_end)`, the mass of the eventual point-source limit.
    pub m_limit: f64,
}

impl MassAudit {
    pub fn residuals(&self) -> Vec<f64> {
        self.lhs.iter().zip(&self.rhs).map(|(l, r)| l - r).collect()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn mass_audit(traj: &Trajectory) -> MassAudit {
    let t_list = traj.ledger.iter().map(|r| r.t).collect();
    let lhs = traj.ledger.iter().map(|r| r.mass).collect();
    let rhs: Vec<f64> = traj.ledger.iter().map(|r| traj.initial_mass - r.absorbed_mass).collect();
    let m_limit = rhs.last().copied().unwrap_or(traj.initial_mass);
    MassAudit { t_list, lhs, rhs, m_limit }
}

/// Per-snapshot solution barriers: `sup f(√t) u` and `sup_{|x| >= r0} f(|x|) u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionBarrierRow {
    pub t: f64,
    pub time_barrier: f64,
    pub space_barrier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionBarrierSummary {
    pub rows: Vec<SolutionBarrierRow>,
    pub max_time_barrier: f64,
    pub max_space_barrier: f64,
}

pub fn solution_barrier_report(traj: &Trajectory, law: &ScalingLaw) -> SolutionBarrierSummary {
    let r0 = law.domain_start().max(1.0);
    let rows: Vec<SolutionBarrierRow> = traj
        .snapshots
        .iter()
        .filter(|s| s.time() > 0.0)
        .map(|s| {
            let time_barrier = law.f(s.time().sqrt()) * s.sup_norm();
            let space_barrier = s
                .grid()
                .radii()
                .into_iter()
                .zip(s.values())
                .filter(|(r, _)| *r >= r0 && *r > law.domain_start())
                .map(|(r, &u)| law.f(r) * u)
                .fold(0.0, f64::max);
            SolutionBarrierRow { t: s.time(), time_barrier, space_barrier }
        })
        .collect();
    SolutionBarrierSummary {
        max_time_barrier: rows.iter().map(|r| r.time_barrier).fold(0.0, f64::max),
        max_space_barrier: rows.iter().map(|r| r.space_barrier).fold(0.0, f64::max),
        rows,
    }
}

/// `sup_x u(x, t) (1 + √t + |x|)^μ` for each snapshot.
pub fn envelope_constants(traj: &Trajectory, mu: f64) -> Vec<(f64, f64)> {
    traj.snapshots
        .iter()
        .map(|s| {
            let st = s.time().sqrt();
            let c = s
                .grid()
                .radii()
                .into_iter()
                .zip(s.values())
                .map(|(r, &u)| u * (1.0 + st + r).powf(mu))
                .fold(0.0, f64::max);
            (s.time(), c)
        })
        .collect()
}
