use nldiff::analysis::mass_audit;
use nldiff::solver::{evolve, linear_solution_via_w, step_absorption, SolveConfig, Trajectory};
use nldiff::{Field, Grid, KernelFamily, KernelSpec};
use proptest::prelude::*;

fn setup() -> (KernelSpec, Grid) {
    (KernelSpec::new(KernelFamily::Epanechnikov, 1.0, 1).unwrap(), Grid::new(1, 512, 16.0).unwrap())
}

fn gaussian(grid: Grid, height: f64) -> Field {
    Field::from_radial(grid, 0.0, |r| height * (-r * r / 4.0).exp())
}

fn run(kernel: KernelSpec, grid: Grid, p: Option<f64>, dt: f64, t_end: f64, u0: &Field) -> Trajectory {
    let snaps = vec![t_end];
    evolve(&SolveConfig::new(kernel, grid, p, dt, t_end, snaps), u0).unwrap()
}

fn sup_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn closed_form_linear_solution_matches_stepping() {
    let (kernel, grid) = setup();
    let indicator = Field::from_radial(grid, 0.0, |r| if r <= 1.0 { 1.0 } else { 0.0 });
    for (u0, t) in [(indicator, 2.0), (gaussian(grid, 1.0), 5.0)] {
        let stepped = run(kernel, grid, None, 1e-3, t, &u0);
        let closed = linear_solution_via_w(&kernel, &grid, &u0, t).unwrap();
        assert!(sup_diff(&stepped.snapshots[0], &closed) < 1e-6);
    }
}

#[test]
fn strang_splitting_is_second_order() {
    let (kernel, grid) = setup();
    let u0 = gaussian(grid, 1.0);
    let reference = run(kernel, grid, Some(3.0), 1e-4, 1.0, &u0).snapshots.remove(0);
    let errors: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| sup_diff(&run(kernel, grid, Some(3.0), dt, 1.0, &u0).snapshots[0], &reference))
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "errors {errors:?}");
    }
}

#[test]
fn mass_identity_and_its_time_step_convergence() {
    let (kernel, grid) = setup();
    let u0 = gaussian(grid, 2.0);
    let times = vec![0.5, 1.0, 2.0, 4.0];
    let residual = |dt: f64| {
        let traj = evolve(&SolveConfig::new(kernel, grid, Some(2.0), dt, 4.0, times.clone()), &u0).unwrap();
        mass_audit(&traj).max_abs_residual() / traj.initial_mass
    };
    let (coarse, fine) = (residual(0.01), residual(0.005));
    assert!(coarse < 1e-4, "coarse {coarse} fine {fine}");
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn absorbing_ode_on_a_constant_state() {
    let grid = Grid::new(1, 256, 8.0).unwrap();
    let ones = Field::from_fn(grid, 0.0, |_| 1.0);
    let half = step_absorption(&ones, 2.0, 1.0).unwrap();
    assert!(half.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    let also_half = step_absorption(&ones, 3.0, 1.5).unwrap();
    assert!(also_half.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
}

#[test]
fn whole_box_ball_ledger_matches_global_ledger() {
    let (kernel, grid) = setup();
    let u0 = gaussian(grid, 1.5);
    let mut cfg = SolveConfig::new(kernel, grid, Some(3.0), 0.01, 2.0, vec![1.0, 2.0]);
    cfg.ball_radii = vec![2.0, 100.0];
    let traj = evolve(&cfg, &u0).unwrap();
    for (row, t) in traj.ledger.iter().zip([1.0, 2.0]) {
        let whole = traj.ball_integrals.iter().find(|b| b.t == t && b.radius == 100.0).unwrap();
        let inner = traj.ball_integrals.iter().find(|b| b.t == t && b.radius == 2.0).unwrap();
        assert!((whole.u_pow - row.absorbed_mass).abs() < 1e-12 * row.absorbed_mass);
        assert!(inner.u_pow < whole.u_pow && inner.u < whole.u);
    }
}

fn bumps(grid: Grid, centers: &[f64], heights: &[f64]) -> Field {
    Field::from_fn(grid, 0.0, |x| {
        centers.iter().zip(heights).map(|(c, h)| h * (-(x[0] - c).powi(2)).exp()).sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn absorption_stays_between_zero_and_linear_solution(
        centers in prop::collection::vec(-5.0f64..5.0, 3),
        heights in prop::collection::vec(0.0f64..3.0, 3),
        p in 1.2f64..6.0,
    ) {
        let (kernel, grid) = setup();
        let u0 = bumps(grid, &centers, &heights);
        let times = vec![0.5, 1.0, 2.0];
        let nonlinear = evolve(&SolveConfig::new(kernel, grid, Some(p), 0.05, 2.0, times.clone()), &u0).unwrap();
        let linear = evolve(&SolveConfig::new(kernel, grid, None, 0.05, 2.0, times), &u0).unwrap();
        for (u, ul) in nonlinear.snapshots.iter().zip(&linear.snapshots) {
            prop_assert!(u.min_value() >= 0.0);
            for (a, b) in u.values().iter().zip(ul.values()) {
                prop_assert!(*a <= b + 1e-10);
            }
        }
    }

    #[test]
    fn larger_data_give_larger_solutions(scale in 1.0f64..3.0, p in 1.5f64..5.0) {
        let (kernel, grid) = setup();
        let small = gaussian(grid, 1.0);
        let large = gaussian(grid, scale);
        let a = run(kernel, grid, Some(p), 0.05, 1.0, &small);
        let b = run(kernel, grid, Some(p), 0.05, 1.0, &large);
        for (x, y) in a.snapshots[0].values().iter().zip(b.snapshots[0].values()) {
            prop_assert!(*x <= y + 1e-12);
        }
    }
}
