use std::f64::consts::PI;

use nldiff::analysis::{convergence_metric, envelope_constants, mass_audit, rate_fit};
use nldiff::heat::gaussian_point_source;
use nldiff::rescaling::{FamilyKind, ScalingFamily, ScalingLaw};
use nldiff::solver::{evolve, SolveConfig};
use nldiff::{Field, Grid, KernelFamily, KernelSpec};

#[test]
fn point_source_metric_plateaus_at_the_gaussian_peak() {
    let grid = Grid::new(1, 4096, 256.0).unwrap();
    let law = ScalingLaw::new(ScalingFamily::new(FamilyKind::Integrable, 1.0, None, 1).unwrap(), 4.0).unwrap();
    let (mass, a) = (1.7, 0.1);
    for t in [1.0, 10.0, 100.0, 1000.0] {
        let u = gaussian_point_source(mass, a, &grid, t);
        let zero = Field::zeros(grid, t);
        let metric = convergence_metric(&u, &zero, &law, 2.0).unwrap();
        assert!((metric - mass / (4.0 * PI * a).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn smoothed_indicator_mass_audit() {
    let kernel = KernelSpec::new(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let grid = Grid::new(1, 2048, 64.0).unwrap();
    let u0 = ScalingFamily::new(FamilyKind::Integrable, 1.0, None, 1).unwrap().representative_datum(&grid).unwrap();
    let times = vec![1.0, 5.0, 10.0, 20.0];
    let traj = evolve(&SolveConfig::new(kernel, grid, Some(4.0), 0.01, 20.0, times), &u0).unwrap();
    let audit = mass_audit(&traj);
    for (l, r) in audit.lhs.iter().zip(&audit.rhs) {
        assert!((l - r).abs() < 1e-4 * traj.initial_mass);
    }
    assert!(audit.m_limit > 0.0 && audit.m_limit < traj.initial_mass);
}

#[test]
fn envelope_constant_is_finite_for_power_law_data() {
    let kernel = KernelSpec::new(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let grid = Grid::new(1, 4096, 128.0).unwrap();
    let p = 5.0;
    let u0 = ScalingFamily::power_law(1.0, 0.5, 1).unwrap().representative_datum(&grid).unwrap();
    let times = vec![1.0, 4.0, 16.0, 64.0];
    let traj = evolve(&SolveConfig::new(kernel, grid, Some(p), 0.05, 64.0, times), &u0).unwrap();
    let c: Vec<f64> = envelope_constants(&traj, 2.0 / (p - 1.0)).into_iter().map(|(_, c)| c).collect();
    assert!(c.iter().all(|v| v.is_finite() && *v > 0.0));
    let spread = c.iter().cloned().fold(0.0, f64::max) / c.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 3.0, "{c:?}");
}

#[test]
fn rate_of_perturbed_power_law() {
    let series: Vec<(f64, f64)> = (0..=40)
        .map(|i| {
            let t = 10f64.powf(i as f64 / 20.0);
            (t, (1.0 + 0.1 * t.ln().sin()) / t)
        })
        .collect();
    let fit = rate_fit(&series, (1.0, 100.0)).unwrap();
    assert!((fit.exponent + 1.0).abs() < 0.05);
}
