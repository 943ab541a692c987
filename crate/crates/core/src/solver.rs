//! Time integration of `u_t = J*u - u - u^p` by Strang splitting with exact
//! substeps, and of the linear equation `u_t = J*u - u`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundamental::w_multiplier;
use crate::grid::{apply_multiplier, convolve, Field, Grid};
use crate::kernel::{KernelSpec, SpectralSymbol};
use crate::spectral::Transform;

/// Pointwise absorption `u' = -c u^p` with fast paths for the exponents used in practice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAbsorption {
    p: f64,
    coefficient: f64,
    integer_excess: Option<i32>,
}

impl PowerAbsorption {
    pub fn new(p: f64, coefficient: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("absorption exponent must exceed 1, got {p}")));
        }
        if !(coefficient.is_finite() && coefficient >= 0.0) {
            return Err(Error::InvalidParameter(format!("absorption coefficient must be >= 0, got {coefficient}")));
        }
        let q = p - 1.0;
        let integer_excess = (q.fract() == 0.0 && q <= 16.0).then_some(q as i32);
        Ok(Self { p, coefficient, integer_excess })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// `u^{p-1}` for `u >= 0`.
    #[inline]
    fn pow_excess(&self, u: f64) -> f64 {
        match self.integer_excess {
            Some(q) => u.powi(q),
            None => u.powf(self.p - 1.0),
        }
    }

    /// `u^p` for `u >= 0`.
    #[inline]
    pub fn pow(&self, u: f64) -> f64 {
        u * self.pow_excess(u)
    }

    /// `s^{-1/(p-1)}` for `s >= 1`.
    #[inline]
    fn inverse_root(&self, s: f64) -> f64 {
        match self.integer_excess {
            Some(1) => 1.0 / s,
            Some(2) => 1.0 / s.sqrt(),
            Some(3) => 1.0 / s.cbrt(),
            Some(4) => 1.0 / s.sqrt().sqrt(),
            Some(6) => 1.0 / s.sqrt().cbrt(),
            _ => s.powf(-1.0 / (self.p - 1.0)),
        }
    }

    /// Exact flow of `u' = -c u^p` over `dt`: `u (1 + (p-1) c dt u^{p-1})^{-1/(p-1)}`.
    #[inline]
    pub fn flow(&self, u: f64, dt: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let s = 1.0 + (self.p - 1.0) * self.coefficient * dt * self.pow_excess(u);
        u * self.inverse_root(s)
    }
}

/// `exp(dt (Ĵ - 1))`, the exact linear semigroup multiplier.
pub fn linear_multiplier(symbol: &SpectralSymbol, dt: f64) -> Vec<f64> {
    symbol.values().iter().map(|&j| (dt * (j - 1.0)).exp()).collect()
}

/// One exact step of `u_t = J*u - u`.
pub fn step_linear(field: &Field, symbol: &SpectralSymbol, dt: f64) -> Result<Field> {
    if symbol.grid() != field.grid() {
        return Err(Error::GridMismatch(format!("symbol on {:?}, field on {:?}", symbol.grid(), field.grid())));
    }
    let out = apply_multiplier(field, &linear_multiplier(symbol, dt))?;
    Ok(out.with_time(field.time() + dt))
}

/// One exact step of `u_t = -u^p`; negative inputs are treated as zero.
pub fn step_absorption(field: &Field, p: f64, dt: f64) -> Result<Field> {
    let absorption = PowerAbsorption::new(p, 1.0)?;
    Ok(field.map(|u| absorption.flow(u, dt)).with_time(field.time() + dt))
}

/// Half absorption, full linear, half absorption. `p = None` is the linear equation.
pub fn step_strang(field: &Field, symbol: &SpectralSymbol, p: Option<f64>, dt: f64) -> Result<Field> {
    match p {
        None => step_linear(field, symbol, dt),
        Some(p) => {
            let half = step_absorption(field, p, 0.5 * dt)?;
            let lin = step_linear(&half, symbol, dt)?;
            Ok(step_absorption(&lin, p, 0.5 * dt)?.with_time(field.time() + dt))
        }
    }
}

/// `u_L(t) = e^{-t} u0 + W(·, t) * u0`.
pub fn linear_solution_via_w(kernel: &KernelSpec, grid: &Grid, u0: &Field, t: f64) -> Result<Field> {
    if u0.grid() != grid {
        return Err(Error::GridMismatch(format!("datum on {:?}, requested {:?}", u0.grid(), grid)));
    }
    let symbol = kernel.spectral_symbol(grid)?;
    let w: Vec<f64> = symbol.values().iter().map(|&j| w_multiplier(j, t)).collect();
    let smooth = apply_multiplier(u0, &w)?;
    let decay = (-t).exp();
    let out = u0.zip_with(&smooth, |a, b| decay * a + b)?;
    Ok(out.with_time(u0.time() + t))
}

/// Steps `u_t = J*u - u + g(t) S(x)` with the trapezoidal exponential rule
/// `u_{n+1} = e^{dt L}(u_n + dt/2 g_n S) + dt/2 g_{n+1} S`.
pub fn evolve_linear_with_source<G: Fn(f64) -> f64>(
    symbol: &SpectralSymbol,
    source: &Field,
    rate: G,
    u0: &Field,
    dt: f64,
    t_end: f64,
) -> Result<Field> {
    u0.check_same_grid(source)?;
    let steps = step_count(dt, t_end)?;
    let mult = linear_multiplier(symbol, dt);
    let grid = *u0.grid();
    let mut transform = Transform::new(&grid);
    let mut u = u0.values().to_vec();
    let mut buf = vec![Complex64::default(); u.len()];
    for n in 0..steps {
        let t = n as f64 * dt;
        let g0 = 0.5 * dt * rate(t);
        let g1 = 0.5 * dt * rate(t + dt);
        for ((b, &v), &s) in buf.iter_mut().zip(&u).zip(source.values()) {
            *b = Complex64::new(v + g0 * s, 0.0);
        }
        transform.forward(&mut buf);
        for (b, m) in buf.iter_mut().zip(&mult) {
            *b *= *m;
        }
        transform.inverse(&mut buf);
        for ((v, b), &s) in u.iter_mut().zip(&buf).zip(source.values()) {
            *v = b.re + g1 * s;
        }
    }
    Field::new(grid, u, u0.time() + steps as f64 * dt)
}

fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_end must be >= 0, got {t_end}")));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub kernel: KernelSpec,
    pub grid: Grid,
    /// Absorption exponent; `None` solves the linear equation.
    pub p: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    /// Radii `ρ` for which `∫_0^t ∫_{B_ρ} u` and `∫_0^t ∫_{B_ρ} u^p` are accumulated.
    #[serde(default)]
    pub ball_radii: Vec<f64>,
}

impl SolveConfig {
    pub fn new(kernel: KernelSpec, grid: Grid, p: Option<f64>, dt: f64, t_end: f64, snapshot_times: Vec<f64>) -> Self {
        Self { kernel, grid, p, dt, t_end, snapshot_times, ball_radii: Vec::new() }
    }

    /// Step indices of the snapshot times.
    pub fn validate(&self) -> Result<Vec<usize>> {
        self.kernel.check_resolved(&self.grid)?;
        if let Some(p) = self.p {
            PowerAbsorption::new(p, 1.0)?;
        }
        let steps = step_count(self.dt, self.t_end)?;
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("snapshot_times must be strictly increasing".into()));
        }
        if let Some(&t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end * (1.0 + 1e-12)).contains(&t)) {
            return Err(Error::InvalidParameter(format!("snapshot time {t} outside [0, {}]", self.t_end)));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] - w[0] < self.dt * (1.0 - 1e-9)) {
            return Err(Error::InvalidParameter("dt exceeds the spacing of snapshot_times".into()));
        }
        if self.ball_radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidParameter("ball radii must be positive".into()));
        }
        self.snapshot_times
            .iter()
            .map(|&t| {
                let idx = (t / self.dt).round();
                if (idx * self.dt - t).abs() > 1e-9 * t.max(1.0) {
                    return Err(Error::InvalidParameter(format!("snapshot time {t} is not a multiple of dt = {}", self.dt)));
                }
                Ok((idx as usize).min(steps))
            })
            .collect()
    }
}

/// Per-snapshot audit entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub mass: f64,
    pub sup: f64,
    /// `A(t) = ∫_0^t ∫ u^p`, trapezoid in time.
    pub absorbed_mass: f64,
}

/// Time integrals over a ball, at one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallIntegrals {
    pub t: f64,
    pub radius: f64,
    /// `∫_0^t ∫_{B_ρ} u`
    pub u: f64,
    /// `∫_0^t ∫_{B_ρ} u^p`
    pub u_pow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Field>,
    pub ledger: Vec<LedgerRow>,
    pub ball_integrals: Vec<BallIntegrals>,
    pub initial_mass: f64,
    pub p: Option<f64>,
    /// Largest magnitude of negative values clamped before absorption substeps.
    pub max_clamp: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::time).collect()
    }

    pub fn absorbed_mass(&self) -> Vec<f64> {
        self.ledger.iter().map(|r| r.absorbed_mass).collect()
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Field> {
        self.snapshots.iter().find(|f| (f.time() - t).abs() <= 1e-9 * t.max(1.0))
    }
}

/// Reusable split-step engine over a fixed grid and time step.
pub(crate) struct SplitStepper {
    transform: Transform,
    multiplier: Vec<f64>,
    buffer: Vec<Complex64>,
    absorption: Option<PowerAbsorption>,
    dt: f64,
    pub max_clamp: f64,
}

impl SplitStepper {
    pub fn new(grid: &Grid, multiplier: Vec<f64>, absorption: Option<PowerAbsorption>, dt: f64) -> Self {
        Self {
            transform: Transform::new(grid),
            buffer: vec![Complex64::default(); multiplier.len()],
            multiplier,
            absorption,
            dt,
            max_clamp: 0.0,
        }
    }

    fn absorb(&mut self, u: &mut [f64], dt: f64) {
        if let Some(a) = self.absorption {
            for v in u.iter_mut() {
                if *v < 0.0 {
                    self.max_clamp = self.max_clamp.max(-*v);
                }
                *v = a.flow(*v, dt);
            }
        }
    }

    pub fn step(&mut self, u: &mut [f64]) {
        let half = 0.5 * self.dt;
        self.absorb(u, half);
        for (b, &v) in self.buffer.iter_mut().zip(u.iter()) {
            *b = Complex64::new(v, 0.0);
        }
        self.transform.forward(&mut self.buffer);
        for (b, m) in self.buffer.iter_mut().zip(&self.multiplier) {
            *b *= *m;
        }
        self.transform.inverse(&mut self.buffer);
        for (v, b) in u.iter_mut().zip(&self.buffer) {
            *v = b.re;
        }
        self.absorb(u, half);
    }
}

/// Trapezoid accumulators for mass bookkeeping.
pub(crate) struct Ledger {
    absorption: Option<PowerAbsorption>,
    cell: f64,
    dt: f64,
    balls: Vec<(f64, Vec<usize>)>,
    pub absorbed: f64,
    last_pow: f64,
    ball_u: Vec<f64>,
    ball_pow: Vec<f64>,
    last_ball: Vec<(f64, f64)>,
}

impl Ledger {
    pub fn new(grid: &Grid, absorption: Option<PowerAbsorption>, dt: f64, radii: &[f64], u0: &[f64]) -> Self {
        let r = grid.radii();
        let balls: Vec<(f64, Vec<usize>)> = radii
            .iter()
            .map(|&rho| (rho, r.iter().enumerate().filter(|(_, &ri)| ri <= rho).map(|(i, _)| i).collect()))
            .collect();
        let mut ledger = Self {
            absorption,
            cell: grid.cell_volume(),
            dt,
            ball_u: vec![0.0; balls.len()],
            ball_pow: vec![0.0; balls.len()],
            last_ball: Vec::new(),
            balls,
            absorbed: 0.0,
            last_pow: 0.0,
        };
        ledger.last_pow = ledger.pow_integral(u0);
        ledger.last_ball = ledger.ball_sample(u0);
        ledger
    }

    fn pow_integral(&self, u: &[f64]) -> f64 {
        match self.absorption {
            Some(a) => u.iter().map(|&v| a.pow(v.max(0.0))).sum::<f64>() * self.cell,
            None => 0.0,
        }
    }

    fn ball_sample(&self, u: &[f64]) -> Vec<(f64, f64)> {
        self.balls
            .iter()
            .map(|(_, idx)| {
                let s: f64 = idx.iter().map(|&i| u[i]).sum::<f64>() * self.cell;
                let sp = match self.absorption {
                    Some(a) => idx.iter().map(|&i| a.pow(u[i].max(0.0))).sum::<f64>() * self.cell,
                    None => 0.0,
                };
                (s, sp)
            })
            .collect()
    }

    /// Accounts for one step ending in state `u`. Returns `∫ u` (NaN-propagating).
    pub fn advance(&mut self, u: &[f64]) -> f64 {
        let pow = self.pow_integral(u);
        self.absorbed += 0.5 * self.dt * (self.last_pow + pow);
        self.last_pow = pow;
        if !self.balls.is_empty() {
            let sample = self.ball_sample(u);
            for (j, (s, sp)) in sample.iter().enumerate() {
                self.ball_u[j] += 0.5 * self.dt * (self.last_ball[j].0 + s);
                self.ball_pow[j] += 0.5 * self.dt * (self.last_ball[j].1 + sp);
            }
            self.last_ball = sample;
        }
        u.iter().sum::<f64>() * self.cell + pow
    }

    pub fn ball_rows(&self, t: f64) -> Vec<BallIntegrals> {
        self.balls
            .iter()
            .enumerate()
            .map(|(j, (rho, _))| BallIntegrals { t, radius: *rho, u: self.ball_u[j], u_pow: self.ball_pow[j] })
            .collect()
    }
}

/// Integrates the configured problem from `u0`, recording snapshots and the absorption ledger.
pub fn evolve(config: &SolveConfig, u0: &Field) -> Result<Trajectory> {
    let snapshot_steps = config.validate()?;
    if u0.grid() != &config.grid {
        return Err(Error::GridMismatch(format!("datum on {:?}, config grid {:?}", u0.grid(), config.grid)));
    }
    if u0.min_value() < 0.0 {
        return Err(Error::InvalidParameter("initial datum must be nonnegative".into()));
    }
    let symbol = config.kernel.spectral_symbol(&config.grid)?;
    let absorption = config.p.map(|p| PowerAbsorption::new(p, 1.0)).transpose()?;
    let stepper = SplitStepper::new(&config.grid, linear_multiplier(&symbol, config.dt), absorption, config.dt);
    let steps = step_count(config.dt, config.t_end)?;
    run_split(config.grid, stepper, u0, config.dt, steps, &snapshot_steps, &config.ball_radii, config.p, 0.0)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_split(
    grid: Grid,
    mut stepper: SplitStepper,
    u0: &Field,
    dt: f64,
    steps: usize,
    snapshot_steps: &[usize],
    ball_radii: &[f64],
    p: Option<f64>,
    t0: f64,
) -> Result<Trajectory> {
    let mut u = u0.values().to_vec();
    let mut ledger = Ledger::new(&grid, stepper.absorption, dt, ball_radii, &u);
    let initial_mass = u0.integrate();
    let mut snapshots = Vec::with_capacity(snapshot_steps.len());
    let mut rows = Vec::with_capacity(snapshot_steps.len());
    let mut balls = Vec::new();
    let mut next = snapshot_steps.iter().peekable();
    let mut record = |n: usize, u: &[f64], ledger: &Ledger, snapshots: &mut Vec<Field>, rows: &mut Vec<LedgerRow>| {
        let t = t0 + n as f64 * dt;
        let f = Field::from_parts(grid, u.to_vec(), t);
        rows.push(LedgerRow { t, mass: f.integrate(), sup: f.sup_norm(), absorbed_mass: ledger.absorbed });
        balls.extend(ledger.ball_rows(t));
        snapshots.push(f);
    };
    while next.peek() == Some(&&0) {
        next.next();
        record(0, &u, &ledger, &mut snapshots, &mut rows);
    }
    for n in 1..=steps {
        stepper.step(&mut u);
        let check = ledger.advance(&u);
        if !check.is_finite() {
            let bad = u.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::NonfiniteState {
                time: t0 + n as f64 * dt,
                detail: format!("node {bad} holds {} after step {n}", u[bad]),
            });
        }
        while next.peek() == Some(&&n) {
            next.next();
            record(n, &u, &ledger, &mut snapshots, &mut rows);
        }
    }
    if stepper.max_clamp > 0.0 {
        log::debug!("clamped negative values up to {:.3e} before absorption", stepper.max_clamp);
    }
    Ok(Trajectory { snapshots, ledger: rows, ball_integrals: balls, initial_mass, p, max_clamp: stepper.max_clamp })
}

/// `J * u - u`.
pub fn apply_operator(field: &Field, symbol: &SpectralSymbol) -> Result<Field> {
    let conv = convolve(field, symbol)?;
    conv.zip_with(field, |a, b| a - b)
}
