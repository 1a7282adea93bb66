use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tptomo::evolution::DensityField;
use tptomo::geometry::*;
use tptomo::phantom::{Bump, DensityModel, Gaussian, Phantom};
use tptomo::spectral::GridSpec;
use tptomo::tomography::*;
use tptomo::transport::ProbeSymbol;

fn unit(a: f64) -> Vec<f64> {
    vec![a.cos(), a.sin()]
}

fn datum(y: Vec<f64>, k: Vec<f64>, len: f64) -> RayDatum<f64> {
    RayDatum { vertex: y, direction: k, length: len, value: 0.0, method: Method::Quadrature, uncertainty: 0.0, low_confidence: false }
}

// Euclidean length of the part of [a; a + len k] inside the square [lo, hi]^2 (clip by bisection-free slab test)
fn clipped_length(a: &[f64], k: &[f64], len: f64, lo: f64, hi: f64) -> f64 {
    let (mut t0, mut t1) = (0.0f64, len);
    for i in 0..2 {
        if k[i] == 0.0 {
            if a[i] < lo || a[i] > hi {
                return 0.0;
            }
        } else {
            let (u, v) = ((lo - a[i]) / k[i], (hi - a[i]) / k[i]);
            t0 = t0.max(u.min(v));
            t1 = t1.min(u.max(v));
        }
    }
    (t1 - t0).max(0.0)
}

fn two_bumps() -> Phantom<f64> {
    Phantom::bumps(vec![
        Bump { center: vec![-0.25, 0.1], radius: 0.45, amplitude: 1.0 },
        Bump { center: vec![0.3, -0.2], radius: 0.35, amplitude: 0.7 },
    ])
}

#[test]
fn axis_and_diagonal_rows() {
    let grid = ReconstructionGrid::<f64>::new(2, 10, 1.0, 0.0);
    let h = grid.spacing();
    // horizontal ray through the middle of cell row 3, spanning cells 2..=6
    let y = grid.lower() + 3.5 * h;
    let a = [grid.lower() + 2.0 * h, y];
    let b = [grid.lower() + 7.0 * h, y];
    let row = segment_row(&grid, &a, &b);
    assert_eq!(row.len(), 5);
    for (_, v) in &row {
        assert!((v - h).abs() < 1e-12);
    }
    // diagonal of one cell
    let a = [grid.lower() + 4.0 * h, grid.lower() + 4.0 * h];
    let b = [grid.lower() + 5.0 * h, grid.lower() + 5.0 * h];
    let row = segment_row(&grid, &a, &b);
    assert_eq!(row.len(), 1);
    assert!((row[0].1 - h * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn row_sums_match_clipped_lengths() {
    let grid = ReconstructionGrid::new(2, 37, 1.3, 0.0);
    let (lo, hi) = (grid.lower(), grid.lower() + grid.spacing() * 37.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<_> = (0..300)
        .map(|_| {
            let y = vec![rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)];
            datum(y, unit(rng.gen_range(0.0..std::f64::consts::TAU)), rng.gen_range(0.1..4.0))
        })
        .collect();
    let (m, warnings) = build_ray_matrix(&data, &grid).unwrap();
    let missing = (0..data.len()).filter(|&i| m.row(i).count() == 0).count();
    assert_eq!(warnings.len(), missing);
    for (i, d) in data.iter().enumerate() {
        let oracle = clipped_length(&d.vertex, &d.direction, d.length, lo, hi);
        assert!((m.row_sum(i) - oracle).abs() < 1e-10, "ray {i}: {} vs {oracle}", m.row_sum(i));
    }
}

#[test]
fn adjoint_consistency() {
    let grid = ReconstructionGrid::new(2, 24, 1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<_> = (0..200)
        .map(|_| datum(vec![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)], unit(rng.gen_range(0.0..6.3)), 2.0))
        .collect();
    let (m, _) = build_ray_matrix(&data, &grid).unwrap();
    let x: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..data.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let lhs: f64 = m.mul(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
    let rhs: f64 = x.iter().zip(m.mul_transpose(&y)).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
}

#[test]
fn empty_data_rejected_and_zero_data_gives_zero() {
    let grid = ReconstructionGrid::new(2, 16, 1.0, 1e-3);
    assert!(build_ray_matrix::<f64>(&[], &grid).is_err());
    let data: Vec<_> = (0..40).map(|i| datum(vec![-2.0, -1.0 + 0.05 * i as f64], vec![1.0, 0.0], 4.0)).collect();
    let rec = reconstruct(&data, &grid).unwrap();
    assert!(rec.values.iter().all(|v| *v == 0.0));
    assert!(rec.converged);
}

fn fan_data(rho: &Phantom<f64>, vertices: usize, fan: usize, radius: f64) -> Vec<RayDatum<f64>> {
    let mut rays = Vec::new();
    for v in 0..vertices {
        let a = std::f64::consts::TAU * v as f64 / vertices as f64;
        let y = vec![radius * a.cos(), radius * a.sin()];
        let half = (1.0f64 / radius).asin() * 1.2;
        for j in 0..fan {
            let b = a + std::f64::consts::PI - half + 2.0 * half * (j as f64 + 0.5) / fan as f64;
            rays.push((y.clone(), unit(b), 2.0 * radius));
        }
    }
    quadrature_data(rho, &rays).unwrap()
}

fn cell_values(rho: &Phantom<f64>, grid: &ReconstructionGrid<f64>) -> Vec<f64> {
    // cell averages on a 4x4 sub-sample
    let h = grid.spacing();
    (0..grid.len())
        .map(|i| {
            let c = grid.center(i);
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    let p = [c[0] + h * ((a as f64 + 0.5) / 4.0 - 0.5), c[1] + h * ((b as f64 + 0.5) / 4.0 - 0.5)];
                    s += rho.density(&p);
                }
            }
            s / 16.0
        })
        .collect()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[test]
fn full_coverage_two_bump_reconstruction() {
    let rho = two_bumps();
    let data = fan_data(&rho, 360, 96, 1.5);
    let grid = ReconstructionGrid { max_iterations: 300, ..ReconstructionGrid::new(2, 48, 1.2, 1e-4) };
    let rec = reconstruct(&data, &grid).unwrap();
    let err = rel_l2(&rec.values, &cell_values(&rho, &grid));
    assert!(err < 0.05, "relative error {err}");
    // forward projection reproduces the data up to the reported residual
    let (m, _) = build_ray_matrix(&data, &grid).unwrap();
    let r: f64 = m.mul(&rec.values).iter().zip(&data).map(|(p, d)| (p - d.value).powi(2)).sum::<f64>().sqrt();
    assert!(r <= rec.residual * (1.0 + 1e-12));
}

#[test]
fn filtered_backprojection_of_parallel_data() {
    let rho = two_bumps();
    let angles: Vec<f64> = (0..180).map(|i| std::f64::consts::PI * i as f64 / 180.0).collect();
    let m = 129;
    let ds = 2.6 / (m - 1) as f64;
    let sino: Vec<Vec<f64>> = angles
        .iter()
        .map(|th| {
            let (k, n) = (vec![-th.sin(), th.cos()], vec![th.cos(), th.sin()]);
            (0..m)
                .map(|j| {
                    let s = (j as f64 - (m - 1) as f64 / 2.0) * ds;
                    let y = vec![s * n[0] - 2.0 * k[0], s * n[1] - 2.0 * k[1]];
                    line_integral(&rho, &y, &k, 4.0).unwrap()
                })
                .collect()
        })
        .collect();
    let grid = ReconstructionGrid::new(2, 48, 1.2, 0.0);
    let fbp = filtered_backprojection(&sino, &angles, ds, &grid).unwrap();
    let err = rel_l2(&fbp, &cell_values(&rho, &grid));
    assert!(err < 0.1, "relative error {err}");
}

#[test]
fn gaussian_line_integral_through_center() {
    let rho = Phantom::Gaussians { gaussians: vec![Gaussian { center: vec![0.0, 0.0], width: 0.2, amplitude: 1.5, cutoff: 10.0 }] };
    let v = line_integral(&rho, &[-2.0, 0.0], &[1.0, 0.0], 4.0).unwrap();
    // int exp(-x^2 / 2w^2) dx = w sqrt(2 pi), tails beyond 10 w negligible
    let exact = 1.5 * 0.2 * (2.0 * std::f64::consts::PI).sqrt();
    assert!((v - exact).abs() < 1e-6 * exact);
}

struct Reference {
    witness: ConditionWitness<f64>,
    sigma: Region<f64>,
    rho: DensityField<f64>,
}

fn reference() -> Reference {
    let grid = GridSpec::new(2, 48, 2.4, 0.01, 1.0).unwrap();
    let phantom = Phantom::bumps(vec![
        Bump { center: vec![0.0, 0.1], radius: 0.3, amplitude: 1.0 },
        Bump { center: vec![0.1, -0.2], radius: 0.2, amplitude: 0.8 },
    ]);
    let rho = DensityField::from_model(&grid, &phantom).unwrap();
    let sigma = Region::from_density(&rho);
    let s = Region::product(Region::ball(vec![-1.2, 0.0], 0.4), Region::ball(vec![-1.2, 0.0], 0.4));
    let w1 = Region::cuboid(vec![-1.3, 1.3], vec![0.5, 1.9]);
    let w2 = Region::cuboid(vec![0.6, -1.0], vec![1.0, 1.0]);
    let sampling = Sampling::new(0.1);
    let mut witness = check_condition1(&s, &w1, &w2, &sigma, &sampling);
    let (y2, x2) = construct_y2_x2(&witness, &s, &w2, &sigma, &sampling).unwrap();
    witness.y2 = Some(y2);
    witness.x2_region = Some(x2);
    Reference { witness, sigma, rho }
}

fn counts(v: usize, t: usize) -> PlanCounts<f64> {
    PlanCounts { vertices: v, targets_per_vertex: t, max_angular_gap: 0.05 }
}

#[test]
fn planned_rays_reverify() {
    let r = reference();
    let plan = plan_rays(&r.witness, &r.sigma, &counts(12, 20)).unwrap();
    assert!(!plan.rays.is_empty());
    for ray in &plan.rays {
        assert!(verify_planned_ray(ray, &r.witness, &r.sigma), "{ray:?}");
    }
    let empty = plan_rays(&r.witness, &r.sigma, &counts(0, 20)).unwrap();
    assert!(empty.rays.is_empty());
}

#[test]
fn symbol_extraction_matches_quadrature() {
    let r = reference();
    let plan = plan_rays(&r.witness, &r.sigma, &counts(6, 10)).unwrap();
    let probe = ProbeSymbol::new(0.02, 4.0, vec![1.0, 0.0]).unwrap();
    let g = 0.3;
    let ex = extract_from_symbols(&r.rho, g, &probe, 10.0, &plan.rays);
    assert!(ex.rejected.is_empty(), "{:?}", ex.rejected);
    let mut hits = 0;
    for d in &ex.data {
        let oracle = line_integral(&r.rho, &d.vertex, &d.direction, d.length).unwrap();
        if oracle > 0.0 {
            hits += 1;
        }
        assert!((d.value - oracle).abs() <= 1e-6 * oracle.abs().max(1e-3), "{} vs {oracle}", d.value);
    }
    assert!(hits > 0);
    // zero density gives zero data
    let zero = DensityField::zeros(&GridSpec::new(2, 48, 2.4, 0.01, 1.0).unwrap());
    let ex0 = extract_from_symbols(&zero, g, &probe, 10.0, &plan.rays);
    assert!(ex0.data.iter().all(|d| d.value == 0.0));
}

#[test]
fn symbol_extraction_rejects_blocked_reference_ray() {
    let r = reference();
    let plan = plan_rays(&r.witness, &r.sigma, &counts(1, 1)).unwrap();
    let mut ray = plan.rays[0].clone();
    ray.kappa1 = ray.kappa2.clone();
    ray.y1 = ray.y2.clone();
    let probe = ProbeSymbol::new(0.02, 4.0, vec![1.0, 0.0]).unwrap();
    let ex = extract_from_symbols(&r.rho, 0.3, &probe, 10.0, &[ray]);
    assert_eq!(ex.rejected.len(), 1);
}

#[test]
fn limited_angle_support_localization() {
    let r = reference();
    let plan = plan_rays(&r.witness, &r.sigma, &counts(40, 60)).unwrap();
    let probe = ProbeSymbol::new(0.02, 4.0, vec![1.0, 0.0]).unwrap();
    let ex = extract_from_symbols(&r.rho, 0.3, &probe, 10.0, &plan.rays);
    let (lo, hi) = r.sigma.bounds().unwrap();
    let pad = 0.05;
    let support_box = Some((lo.iter().map(|x| x - pad).collect(), hi.iter().map(|x| x + pad).collect()));
    let grid = ReconstructionGrid { support_box, ..ReconstructionGrid::new(2, 20, 0.5, 1e-3) };
    let rec = reconstruct(&ex.data, &grid).unwrap();
    let truth: Vec<f64> = (0..grid.len()).map(|i| r.rho.density(&grid.center(i))).collect();
    let err = rel_l2(&rec.values, &truth);
    println!("limited-angle relative error {err:.3}, angular gap {:.3}", plan.angular_gap);
    let max = rec.values.iter().cloned().fold(0.0, f64::max);
    let np = grid.points_per_axis as i64;
    let true_cells: Vec<(i64, i64)> =
        (0..grid.len()).filter(|&i| truth[i] > 0.0).map(|i| (i as i64 / np, i as i64 % np)).collect();
    for i in (0..grid.len()).filter(|&i| rec.values[i] > 0.2 * max) {
        let (a, b) = (i as i64 / np, i as i64 % np);
        let d = true_cells.iter().map(|(p, q)| (p - a).abs().max((q - b).abs())).min().unwrap();
        assert!(d <= 2, "cell ({a}, {b}) is {d} cells from the support");
    }
}
