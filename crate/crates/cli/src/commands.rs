//! Subcommand implementations. Each writes its files into `dir` and returns the
//! lines to print on stdout.

use std::path::Path;

use nldiff::analysis::{
    convergence_series, envelope_constants, mass_audit, rate_fit, solution_barrier_report, ConvergenceSeries, RateFit,
};
use nldiff::fundamental::{barrier_report, grad_w_field, w_field, wt_field};
use nldiff::heat::{evolve_limit, gaussian_point_source, LimitDatum, LimitProblem};
use nldiff::rescaling::{rescale_field, FamilyKind, ScalingLaw};
use nldiff::solver::{evolve, Trajectory};
use nldiff::{Field, Grid};
use rayon::prelude::*;

use crate::config::{DatumKind, ExperimentConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, stamp, write_field, write_table, Provenance, Table};

pub type Lines = Vec<String>;

fn provenance(command: &str, cfg: &ExperimentConfig) -> Provenance {
    Provenance::new(command, &cfg.hash())
}

/// Kernel profile samples on `[0, 1.25 R_J]`.
pub fn kernel(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let k = &cfg.kernel;
    let samples = 256;
    let mut table = Table::new(&["r", "J"]);
    for i in 0..=samples {
        let r = 1.25 * k.support_radius() * i as f64 / samples as f64;
        table.push_numbers(&[r, k.evaluate_radial(r)]);
    }
    write_table(dir, "kernel.csv", &table, &provenance("kernel", cfg))?;
    Ok(vec![
        format!("family {} R_J {} N {}", k.family().name(), fmt_f64(k.support_radius()), k.dimension()),
        format!("mass {}", fmt_f64(k.mass())),
        format!("diffusivity {}", fmt_f64(k.diffusivity())),
    ])
}

pub fn w_table(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let report = barrier_report(&cfg.kernel, &cfg.grid, &cfg.barrier.t_list, &cfg.barrier.exclusion)?;
    let mut table = Table::new(&["t", "mass", "sup", "c_w", "c_grad", "c_t", "l1_grad", "l1_wt", "g1", "t1"]);
    for r in &report.rows {
        table.push_numbers(&[r.t, r.mass, r.sup, r.c_w, r.c_grad, r.c_t, r.l1_grad, r.l1_wt, r.g1, r.t1]);
    }
    write_table(dir, "w_table.csv", &table, &provenance("w-table", cfg))?;
    Ok(vec![format!(
        "max C_W {} max C_grad {} max C_T {}",
        fmt_f64(report.max_c_w),
        fmt_f64(report.max_c_grad),
        fmt_f64(report.max_c_t)
    )])
}

pub fn w_snapshot(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let t = cfg.barrier.w_time;
    let ts = stamp(t);
    let w = w_field(&cfg.kernel, &cfg.grid, t)?.field.with_time(t);
    write_field(dir, &format!("w_t{ts}.nldf"), &w)?;
    for (d, g) in grad_w_field(&cfg.kernel, &cfg.grid, t)?.into_iter().enumerate() {
        write_field(dir, &format!("grad_w{d}_t{ts}.nldf"), &g.with_time(t))?;
    }
    let wt = wt_field(&cfg.kernel, &cfg.grid, t)?.with_time(t);
    write_field(dir, &format!("dw_dt_t{ts}.nldf"), &wt)?;
    Ok(vec![format!("t {ts} mass {} sup {}", fmt_f64(w.integrate()), fmt_f64(w.sup_norm()))])
}

pub fn initial_datum(cfg: &ExperimentConfig) -> Result<Field, CliError> {
    Ok(cfg.family()?.representative_datum(&cfg.grid)?)
}

pub fn run_trajectory(cfg: &ExperimentConfig) -> Result<Trajectory, CliError> {
    Ok(evolve(&cfg.solve_config(), &initial_datum(cfg)?)?)
}

fn ledger_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(&["t", "mass", "sup", "absorbed_mass", "mass_residual"]);
    for r in &traj.ledger {
        let residual = r.mass - (traj.initial_mass - r.absorbed_mass);
        table.push_numbers(&[r.t, r.mass, r.sup, r.absorbed_mass, residual]);
    }
    table
}

pub fn simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let traj = run_trajectory(cfg)?;
    let prov = provenance("simulate", cfg);
    for s in &traj.snapshots {
        write_field(dir, &format!("u_t{}.nldf", stamp(s.time())), s)?;
    }
    write_table(dir, "ledger.csv", &ledger_table(&traj), &prov)?;
    if !traj.ball_integrals.is_empty() {
        let mut table = Table::new(&["t", "radius", "int_u", "int_u_pow"]);
        for b in &traj.ball_integrals {
            table.push_numbers(&[b.t, b.radius, b.u, b.u_pow]);
        }
        write_table(dir, "ball.csv", &table, &prov)?;
    }
    let last = traj.ledger.last().expect("validated configs have snapshots");
    Ok(vec![
        format!("initial mass {}", fmt_f64(traj.initial_mass)),
        format!("t {} mass {} sup {}", fmt_f64(last.t), fmt_f64(last.mass), fmt_f64(last.sup)),
    ])
}

/// Mass of the point-source limit: `limit.mass`, the absorbed-mass audit of
/// `fine` for integrable data, or `f(k) k^{-N} ∫_{B_k} u0` at `k = L/2`.
fn point_source_mass(cfg: &ExperimentConfig, fine: &Trajectory) -> Result<f64, CliError> {
    if let Some(m) = cfg.limit.mass {
        return Ok(m);
    }
    let family = cfg.family()?;
    if family.kind() == FamilyKind::Integrable {
        return Ok(mass_audit(fine).m_limit);
    }
    let law = cfg.law()?;
    let k = 0.5 * cfg.grid.half_length();
    let u0 = initial_datum(cfg)?;
    Ok(law.f(k) * k.powi(-(cfg.grid.dimension() as i32)) * u0.integrate_ball(k))
}

/// Limit problem `U_t = 𝔞 ΔU - c0 U^p` matching the configuration.
fn limit_problem(cfg: &ExperimentConfig, law: &ScalingLaw, mass: Option<f64>) -> Result<LimitProblem, CliError> {
    let family = cfg.family()?;
    let datum = match cfg.limit_datum() {
        DatumKind::PowerLaw => LimitDatum::PowerLaw { amplitude: family.amplitude(), alpha: family.alpha() },
        DatumKind::PointSource => LimitDatum::PointSource { mass: mass.expect("point-source mass resolved by caller") },
        DatumKind::Family => LimitDatum::Field(initial_datum(cfg)?),
    };
    let c0 = cfg.limit.c0.unwrap_or(law.c0);
    Ok(LimitProblem { diffusivity: cfg.kernel.diffusivity(), c0, p: law.p, datum })
}

/// Reference snapshots `U(·, t)` at `times` on the run grid.
fn reference_solve(cfg: &ExperimentConfig, law: &ScalingLaw, fine: Option<&Trajectory>, times: &[f64]) -> Result<Vec<Field>, CliError> {
    let mass = match cfg.limit_datum() {
        DatumKind::PointSource => Some(match fine {
            Some(traj) => point_source_mass(cfg, traj)?,
            None => point_source_mass(cfg, &run_trajectory(cfg)?)?,
        }),
        _ => None,
    };
    let problem = limit_problem(cfg, law, mass)?;
    if let (LimitDatum::PointSource { mass }, true) = (&problem.datum, problem.c0 == 0.0) {
        let a = problem.diffusivity;
        return Ok(times.iter().map(|&t| gaussian_point_source(*mass, a, &cfg.grid, t)).collect());
    }
    let dt = cfg.limit.dt.unwrap_or(cfg.run.dt);
    Ok(evolve_limit(&problem, &cfg.grid, dt, times)?.snapshots)
}

pub fn limit(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let law = cfg.law()?;
    let snaps = reference_solve(cfg, &law, None, &cfg.run.snapshot_times)?;
    let mut table = Table::new(&["t", "mass", "sup"]);
    for s in &snaps {
        write_field(dir, &format!("U_t{}.nldf", stamp(s.time())), s)?;
        table.push_numbers(&[s.time(), s.integrate(), s.sup_norm()]);
    }
    write_table(dir, "limit_ledger.csv", &table, &provenance("limit", cfg))?;
    Ok(vec![format!(
        "datum {:?} c0 {} diffusivity {}",
        cfg.limit_datum(),
        fmt_f64(cfg.limit.c0.unwrap_or(law.c0)),
        fmt_f64(cfg.kernel.diffusivity())
    )])
}

/// Fine solve sampled at the ladder times `k^2`.
fn ladder_trajectory(cfg: &ExperimentConfig) -> Result<Trajectory, CliError> {
    let times = cfg.ladder_times();
    let mut solve = cfg.solve_config();
    solve.t_end = *times.last().expect("validated ladder is non-empty");
    solve.snapshot_times = times;
    solve.ball_radii.clear();
    solve.validate().map_err(|e| CliError::Config(format!("compare.k_ladder: {e}")))?;
    Ok(evolve(&solve, &initial_datum(cfg)?)?)
}

/// Grid holding `u^k(·, 1)`: half-length `L / k_max` so every rung reads inside the fine box.
fn target_grid(cfg: &ExperimentConfig) -> Result<Grid, CliError> {
    let k_max = *cfg.compare.k_ladder.last().expect("validated ladder is non-empty");
    Ok(Grid::new(cfg.grid.dimension(), cfg.compare.target_points, cfg.grid.half_length() / k_max)?)
}

fn rescaled_ladder(cfg: &ExperimentConfig, law: &ScalingLaw, traj: &Trajectory) -> Result<Vec<(f64, Field)>, CliError> {
    let target = target_grid(cfg)?;
    cfg.compare
        .k_ladder
        .par_iter()
        .map(|&k| {
            let fine = traj.snapshot_at(k * k).expect("ladder times are snapshots");
            Ok((k, rescale_field(fine, k, law.f(k), &target)?))
        })
        .collect()
}

fn write_rescaled(cfg: &ExperimentConfig, law: &ScalingLaw, rescaled: &[(f64, Field)], dir: &Path, prov: &Provenance) -> Result<(), CliError> {
    let mut table = Table::new(&["k", "f", "F", "sup", "mass"]);
    for (k, u) in rescaled {
        write_field(dir, &format!("uk_k{}.nldf", stamp(*k)), u)?;
        // the linear equation has no absorption term to rescale
        let big_f = if cfg.run.p.is_some() { law.big_f(*k) } else { 0.0 };
        table.push_numbers(&[*k, law.f(*k), big_f, u.sup_norm(), u.integrate()]);
    }
    write_table(dir, "rescale.csv", &table, prov)?;
    Ok(())
}

pub fn rescale(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let law = cfg.law()?;
    let traj = ladder_trajectory(cfg)?;
    let rescaled = rescaled_ladder(cfg, &law, &traj)?;
    write_rescaled(cfg, &law, &rescaled, dir, &provenance("rescale", cfg))?;
    Ok(rescaled.iter().map(|(k, u)| format!("k {} sup u^k {}", stamp(*k), fmt_f64(u.sup_norm()))).collect())
}

/// Everything `compare` computes.
pub struct Comparison {
    pub law: ScalingLaw,
    pub trajectory: Trajectory,
    pub rescaled: Vec<(f64, Field)>,
    pub reference: Vec<Field>,
    pub series: Vec<ConvergenceSeries>,
}

/// Fine solve, rescale ladder, reference solve and one convergence series per window.
pub fn comparison(cfg: &ExperimentConfig) -> Result<Comparison, CliError> {
    let law = cfg.law()?;
    let trajectory = ladder_trajectory(cfg)?;
    let rescaled = rescaled_ladder(cfg, &law, &trajectory)?;
    let times = cfg.ladder_times();
    let reference = reference_solve(cfg, &law, Some(&trajectory), &times)?;
    let lookup = |t: f64| -> nldiff::Result<Field> {
        let i = times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.max(1.0)).expect("ladder time");
        Ok(reference[i].clone())
    };
    let series = cfg
        .compare
        .windows
        .iter()
        .map(|&r| convergence_series(&trajectory, lookup, &law, r))
        .collect::<nldiff::Result<Vec<_>>>()?;
    Ok(Comparison { law, trajectory, rescaled, reference, series })
}

/// Local exponents between consecutive rungs, and a least-squares fit when
/// enough rungs fall in the fit window.
fn convergence_rates(cfg: &ExperimentConfig, series: &[ConvergenceSeries]) -> Table {
    let mut table = Table::new(&["R", "t_start", "t_end", "exponent", "r_squared", "n_points"]);
    for s in series {
        for w in s.entries.windows(2) {
            let exponent = (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln();
            table.push_numbers(&[s.window_factor, w[0].0, w[1].0, exponent, 1.0, 2.0]);
        }
        let window = cfg.compare.fit_window.unwrap_or((0.0, f64::INFINITY));
        if let Ok(fit) = rate_fit(&s.entries, window) {
            push_fit(&mut table, s.window_factor, &fit);
        }
    }
    table
}

fn push_fit(table: &mut Table, r: f64, fit: &RateFit) {
    let (lo, hi) = fit.window;
    table.push_numbers(&[r, lo, hi, fit.exponent, fit.r_squared, fit.n_points as f64]);
}

pub fn write_comparison(cfg: &ExperimentConfig, cmp: &Comparison, dir: &Path, prov: &Provenance) -> Result<(), CliError> {
    write_rescaled(cfg, &cmp.law, &cmp.rescaled, dir, prov)?;
    let mut table = Table::new(&["t", "k", "R", "metric"]);
    for s in &cmp.series {
        for &(t, m) in &s.entries {
            table.push_numbers(&[t, t.sqrt(), s.window_factor, m]);
        }
    }
    write_table(dir, "convergence.csv", &table, prov)?;
    write_table(dir, "rates.csv", &convergence_rates(cfg, &cmp.series), prov)?;
    Ok(())
}

pub fn compare(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let cmp = comparison(cfg)?;
    write_comparison(cfg, &cmp, dir, &provenance("compare", cfg))?;
    Ok(cmp
        .series
        .iter()
        .map(|s| {
            let metrics: Vec<String> = s.metrics().into_iter().map(fmt_f64).collect();
            format!(
                "R {} metrics [{}] final/initial {} decreasing {}",
                fmt_f64(s.window_factor),
                metrics.join(", "),
                fmt_f64(s.reduction()),
                s.is_decreasing()
            )
        })
        .collect())
}

/// Decay fits of `sup u`, `∫u` and `f(√t) sup u` over the run's snapshots.
pub fn rates(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let law = cfg.law()?;
    let traj = run_trajectory(cfg)?;
    let window = cfg.compare.fit_window.unwrap_or((0.0, f64::INFINITY));
    let series: [(&str, Vec<(f64, f64)>); 3] = [
        ("sup", traj.ledger.iter().map(|r| (r.t, r.sup)).collect()),
        ("mass", traj.ledger.iter().map(|r| (r.t, r.mass)).collect()),
        ("scaled_sup", traj.ledger.iter().map(|r| (r.t, law.f(r.t.sqrt()) * r.sup)).collect()),
    ];
    let mut table = Table::new(&["quantity", "exponent", "intercept", "r_squared", "t_lo", "t_hi", "n_points"]);
    let mut lines = Vec::new();
    for (name, s) in &series {
        let fit = rate_fit(s, window).map_err(|e| CliError::Config(format!("run.snapshot_times: {e}")))?;
        let mut row = vec![name.to_string()];
        row.extend(
            [fit.exponent, fit.intercept, fit.r_squared, fit.window.0, fit.window.1, fit.n_points as f64]
                .iter()
                .map(|&v| fmt_f64(v)),
        );
        table.push(row);
        lines.push(format!("{name} ~ t^{} (r^2 {})", fmt_f64(fit.exponent), fmt_f64(fit.r_squared)));
    }
    write_table(dir, "rates.csv", &table, &provenance("rates", cfg))?;
    Ok(lines)
}

pub fn mass_audit_cmd(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let traj = run_trajectory(cfg)?;
    let audit = mass_audit(&traj);
    let mut table = Table::new(&["t", "mass", "initial_minus_absorbed", "residual"]);
    for ((t, l), r) in audit.t_list.iter().zip(&audit.lhs).zip(&audit.rhs) {
        table.push_numbers(&[*t, *l, *r, l - r]);
    }
    write_table(dir, "mass_audit.csv", &table, &provenance("mass-audit", cfg))?;
    Ok(vec![
        format!("M_limit {}", fmt_f64(audit.m_limit)),
        format!("max |residual| / initial mass {}", fmt_f64(audit.max_abs_residual() / traj.initial_mass)),
    ])
}

/// Envelope exponent: `2/(p-1)` with absorption, the family's `α` without.
fn envelope_exponent(cfg: &ExperimentConfig) -> Result<f64, CliError> {
    Ok(match cfg.run.p {
        Some(p) => 2.0 / (p - 1.0),
        None => cfg.family()?.alpha(),
    })
}

pub fn barrier(cfg: &ExperimentConfig, dir: &Path) -> Result<Lines, CliError> {
    let law = cfg.law()?;
    let traj = run_trajectory(cfg)?;
    let report = solution_barrier_report(&traj, &law);
    let envelope = envelope_constants(&traj, envelope_exponent(cfg)?);
    let mut table = Table::new(&["t", "time_barrier", "space_barrier", "envelope"]);
    for row in &report.rows {
        let env = envelope.iter().find(|e| e.0 == row.t).map_or(f64::NAN, |e| e.1);
        table.push_numbers(&[row.t, row.time_barrier, row.space_barrier, env]);
    }
    write_table(dir, "barrier.csv", &table, &provenance("barrier", cfg))?;
    Ok(vec![format!(
        "max sup f(sqrt t) u {} max sup f(|x|) u {}",
        fmt_f64(report.max_time_barrier),
        fmt_f64(report.max_space_barrier)
    )])
}
