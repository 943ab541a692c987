use nldiff::analysis::mass_audit;
use nldiff::heat::{evolve_limit, gaussian_point_source, self_similarity_check, LimitDatum, LimitProblem};
use nldiff::rescaling::{FamilyKind, ScalingFamily};
use nldiff::Grid;

fn power_law(c0: f64, p: f64) -> LimitProblem {
    LimitProblem { diffusivity: 0.1, c0, p, datum: LimitDatum::PowerLaw { amplitude: 1.0, alpha: 0.5 } }
}

#[test]
fn pure_heat_power_law_is_self_similar() {
    let problem = power_law(0.0, 5.0);
    let defect = |n: usize| {
        let grid = Grid::new(1, n, 64.0).unwrap();
        let d = self_similarity_check(&problem, &grid, 1.0, 0.25, 2.0).unwrap();
        let sup = evolve_limit(&problem, &grid, 0.25, &[1.0]).unwrap().snapshots[0].sup_norm();
        d / sup
    };
    let (coarse, fine) = (defect(4096), defect(8192));
    assert!(coarse < 1e-3, "relative defect {coarse}");
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "coarse {coarse} fine {fine}");
}

#[test]
fn absorbing_power_law_is_self_similar_at_the_critical_exponent() {
    // p = 1 + 2/α keeps the limit equation invariant under the power-law scaling
    let problem = power_law(1.0, 5.0);
    let grid = Grid::new(1, 8192, 64.0).unwrap();
    let sup = evolve_limit(&problem, &grid, 0.005, &[1.0]).unwrap().snapshots[0].sup_norm();
    for k in [2.0, 4.0] {
        let defect = self_similarity_check(&problem, &grid, 1.0, 0.005, k).unwrap();
        assert!(defect < 1e-2 * sup, "k = {k}: {defect} vs sup {sup}");
    }
}

#[test]
fn critical_power_law_decay_plateaus() {
    let problem = power_law(1.0, 5.0);
    let grid = Grid::new(1, 8192, 256.0).unwrap();
    let times = [4.0, 16.0, 64.0];
    let traj = evolve_limit(&problem, &grid, 0.01, &times).unwrap();
    let scaled: Vec<f64> = traj.snapshots.iter().map(|s| s.time().powf(0.25) * s.value_at_origin()).collect();
    for w in scaled.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 1e-2, "{scaled:?}");
    }
}

#[test]
fn point_source_loses_mass_to_absorption() {
    let grid = Grid::new(1, 4096, 128.0).unwrap();
    let problem = LimitProblem { diffusivity: 0.1, c0: 1.0, p: 3.0, datum: LimitDatum::PointSource { mass: 2.0 } };
    let traj = evolve_limit(&problem, &grid, 0.01, &[1.0, 5.0, 20.0]).unwrap();
    let audit = mass_audit(&traj);
    assert!(audit.lhs.windows(2).all(|w| w[1] < w[0]));
    assert!(audit.lhs[0] < traj.initial_mass && audit.lhs[2] > 0.0);
}

#[test]
fn integrable_datum_mass_balance() {
    let grid = Grid::new(1, 4096, 64.0).unwrap();
    let family = ScalingFamily::new(FamilyKind::Integrable, 1.0, None, 1).unwrap();
    let u0 = family.representative_datum(&grid).unwrap();
    let problem = LimitProblem { diffusivity: 0.1, c0: 1.0, p: 3.0, datum: LimitDatum::Field(u0) };
    let traj = evolve_limit(&problem, &grid, 0.01, &[1.0, 5.0, 20.0]).unwrap();
    let audit = mass_audit(&traj);
    assert!(audit.max_abs_residual() < 1e-4 * traj.initial_mass);
}

#[test]
fn pure_heat_point_source_stays_gaussian() {
    let grid = Grid::new(2, 256, 16.0).unwrap();
    let problem = LimitProblem { diffusivity: 0.25, c0: 0.0, p: 2.0, datum: LimitDatum::PointSource { mass: 3.0 } };
    let traj = evolve_limit(&problem, &grid, 0.05, &[2.0]).unwrap();
    let exact = gaussian_point_source(3.0, 0.25, &grid, 2.0);
    let diff = traj.snapshots[0]
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10 * exact.sup_norm());
}
