use nldiff::grid::convolve;
use nldiff::spectral::{wavenumbers, Transform};
use nldiff::{Field, Grid, KernelFamily, KernelSpec};
use proptest::prelude::*;

fn periodic_offset(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

/// Direct-sum convolution with the discrete kernel normalized to unit Riemann mass.
fn direct_convolution(kernel: &KernelSpec, u: &Field) -> Vec<f64> {
    let grid = *u.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let period = 2.0 * grid.half_length();
    let reach = (kernel.support_radius() / h).ceil() as i64 + 1;
    let offsets: Vec<i64> = (-reach..=reach).collect();
    let weight = |di: i64, dj: i64| -> f64 {
        let x = [periodic_offset(di as f64 * h, period), periodic_offset(dj as f64 * h, period)];
        kernel.evaluate(&x[..grid.dimension()])
    };
    let mut out = vec![0.0; grid.len()];
    let wrap = |i: usize, d: i64| -> usize { ((i as i64 + d).rem_euclid(n as i64)) as usize };
    if grid.dimension() == 1 {
        let total: f64 = offsets.iter().map(|&d| weight(d, 0)).sum();
        for (i, o) in out.iter_mut().enumerate() {
            *o = offsets.iter().map(|&d| weight(d, 0) * u.values()[wrap(i, -d)]).sum::<f64>() / total;
        }
    } else {
        let mut total = 0.0;
        for &a in &offsets {
            for &b in &offsets {
                total += weight(a, b);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for &a in &offsets {
                    for &b in &offsets {
                        let w = weight(a, b);
                        if w != 0.0 {
                            acc += w * u.values()[wrap(i, -a) * n + wrap(j, -b)];
                        }
                    }
                }
                out[i * n + j] = acc / total;
            }
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn fft_convolution_matches_direct_sum_1d() {
    let kernel = KernelSpec::new(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let grid = Grid::new(1, 256, 8.0).unwrap();
    let u = Field::from_radial(grid, 0.0, |r| if r <= 1.0 { 1.0 } else { 0.0 });
    let fast = convolve(&u, &kernel.spectral_symbol(&grid).unwrap()).unwrap();
    let slow = direct_convolution(&kernel, &u);
    assert!(max_diff(fast.values(), &slow) < 1e-8);
}

#[test]
fn fft_convolution_matches_direct_sum_2d() {
    let kernel = KernelSpec::new(KernelFamily::Quartic, 1.0, 2).unwrap();
    let grid = Grid::new(2, 256, 6.0).unwrap();
    let u = Field::from_fn(grid, 0.0, |x| (-(x[0] - 0.5).powi(2) - 2.0 * x[1] * x[1]).exp() + if x[0].abs() < 1.0 { 0.5 } else { 0.0 });
    let fast = convolve(&u, &kernel.spectral_symbol(&grid).unwrap()).unwrap();
    let slow = direct_convolution(&kernel, &u);
    assert!(max_diff(fast.values(), &slow) < 1e-8);
}

#[test]
fn epanechnikov_symbol_matches_closed_form() {
    let kernel = KernelSpec::new(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let grid = Grid::new(1, 1 << 14, 8.0).unwrap();
    let symbol = kernel.spectral_symbol(&grid).unwrap();
    let xi = wavenumbers(&grid);
    let mut worst = 0.0f64;
    for (&s, &k) in symbol.values().iter().zip(&xi) {
        if k.abs() > 60.0 {
            continue;
        }
        let exact = if k.abs() < 1e-3 {
            1.0 - k * k / 10.0
        } else {
            3.0 * (k.sin() - k * k.cos()) / k.powi(3)
        };
        worst = worst.max((s - exact).abs());
    }
    assert!(worst < 1e-6, "worst deviation {worst}");
}

#[test]
fn quartic_2d_diffusivity_matches_dense_riemann_sum() {
    let kernel = KernelSpec::new(KernelFamily::Quartic, 1.0, 2).unwrap();
    let m = 4096;
    let h = 2.0 / m as f64;
    let (mut mass, mut second) = (0.0, 0.0);
    for i in 0..m {
        let x = -1.0 + (i as f64 + 0.5) * h;
        for j in 0..m {
            let y = -1.0 + (j as f64 + 0.5) * h;
            let r2 = x * x + y * y;
            let w = (1.0 - r2).max(0.0).powi(2);
            mass += w;
            second += w * r2;
        }
    }
    let riemann = second / mass / 4.0;
    assert!((kernel.diffusivity() - riemann).abs() < 1e-6, "{} vs {riemann}", kernel.diffusivity());
    assert!((kernel.diffusivity() - 1.0 / 16.0).abs() < 1e-9);
}

#[test]
fn bump_riemann_mass_is_one() {
    for dim in [1, 2] {
        let kernel = KernelSpec::new(KernelFamily::Bump, 1.5, dim).unwrap();
        let n = if dim == 1 { 4096 } else { 512 };
        let grid = Grid::new(dim, n, 6.0).unwrap();
        let field = Field::from_fn(grid, 0.0, |x| kernel.evaluate(x));
        assert!((field.integrate() - 1.0).abs() < 1e-10, "N = {dim}: {}", field.integrate());
    }
}

fn arbitrary_field(grid: Grid, coeffs: &[f64]) -> Field {
    Field::from_fn(grid, 0.0, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * (-(x[0] - m as f64).powi(2) / (1.0 + m as f64)).exp())
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convolution_is_linear_and_mass_preserving(
        a in prop::collection::vec(0.0f64..2.0, 4),
        b in prop::collection::vec(0.0f64..2.0, 4),
        s in -3.0f64..3.0,
    ) {
        let kernel = KernelSpec::new(KernelFamily::Quartic, 1.0, 1).unwrap();
        let grid = Grid::new(1, 512, 16.0).unwrap();
        let symbol = kernel.spectral_symbol(&grid).unwrap();
        let u = arbitrary_field(grid, &a);
        let v = arbitrary_field(grid, &b);
        let combo = u.zip_with(&v, |x, y| x + s * y).unwrap();
        let lhs = convolve(&combo, &symbol).unwrap();
        let cu = convolve(&u, &symbol).unwrap();
        let cv = convolve(&v, &symbol).unwrap();
        let rhs = cu.zip_with(&cv, |x, y| x + s * y).unwrap();
        prop_assert!(max_diff(lhs.values(), rhs.values()) < 1e-12);
        prop_assert!((cu.integrate() - u.integrate()).abs() < 1e-11 * u.integrate().max(1.0));
        prop_assert!(cu.min_value() > -1e-14);
        prop_assert!(cu.sup_norm() <= u.sup_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn parseval_identity(coeffs in prop::collection::vec(-2.0f64..2.0, 5)) {
        let grid = Grid::new(1, 256, 10.0).unwrap();
        let u = arbitrary_field(grid, &coeffs);
        let spectrum = Transform::new(&grid).forward_real(u.values());
        let physical: f64 = u.values().iter().map(|v| v * v).sum();
        let dual: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>() / grid.len() as f64;
        prop_assert!((physical - dual).abs() <= 1e-10 * physical.max(1e-300));
    }

    #[test]
    fn symbol_is_real_bounded_and_even(r in 1.0f64..3.0, fam in 0usize..3) {
        let family = [KernelFamily::Bump, KernelFamily::Epanechnikov, KernelFamily::Quartic][fam];
        let kernel = KernelSpec::new(family, r, 1).unwrap();
        let grid = Grid::new(1, 1024, 16.0).unwrap();
        let symbol = kernel.spectral_symbol(&grid).unwrap();
        let v = symbol.values();
        prop_assert!((v[0] - 1.0).abs() < 1e-15);
        prop_assert!(v.iter().all(|s| s.abs() <= 1.0 + 1e-12));
        for m in 1..grid.len() {
            prop_assert!((v[m] - v[grid.len() - m]).abs() < 1e-12);
        }
    }
}
