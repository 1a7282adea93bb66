use num_complex::Complex64;
use tptomo::evolution::{
    evolve, evolve_with, DensityField, EvolveOptions, PhysicsParams, SourceSpec, TemporalWindow, WavePacket,
};
use tptomo::numerics::bump;
use tptomo::phantom::{Bump, Phantom};
use tptomo::spectral::{FieldState, GridSpec};

type M4 = [[Complex64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

/// `exp(-i h H)` by scaling and squaring of a Taylor series.
fn expm(hm: &[[f64; 4]; 4], h: f64) -> M4 {
    let s = 12;
    let hs = h / 2f64.powi(s);
    let a: M4 = std::array::from_fn(|i| std::array::from_fn(|j| Complex64::new(0.0, -hs * hm[i][j])));
    let mut term: M4 = std::array::from_fn(|i| std::array::from_fn(|j| Complex64::new((i == j) as u8 as f64, 0.0)));
    let mut sum = term;
    for k in 1..20 {
        term = mul(&term, &a).map(|r| r.map(|z| z / k as f64));
        for i in 0..4 {
            for j in 0..4 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    sum
}

/// `-i int_0^t exp(-i (t-s) H) e0 w(s) ds` by composite Simpson.
fn mode_oracle(hm: &[[f64; 4]; 4], w: &TemporalWindow<f64>, t: f64) -> [Complex64; 4] {
    let n = 20000;
    let h = t / n as f64;
    let e = expm(hm, h);
    let mut acc = [Complex64::default(); 4];
    for j in 0..=n {
        let s = h * j as f64;
        let wt = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
        let next: [Complex64; 4] = std::array::from_fn(|r| (0..4).map(|k| e[r][k] * acc[k]).sum());
        acc = next;
        if j > 0 || true {
            acc[0] += window_value(w, s) * (wt * h / 3.0);
        }
    }
    acc.map(|z| z * Complex64::new(0.0, -1.0))
}

fn window_value(w: &TemporalWindow<f64>, t: f64) -> Complex64 {
    if t <= w.start || t >= w.end {
        return Complex64::default();
    }
    let mid = 0.5 * (w.start + w.end);
    let u = (t - mid) / (0.5 * (w.end - w.start));
    Complex64::from_polar(bump(u), -w.carrier * (t - mid))
}

fn plane_wave(k1: [f64; 2], k2: [f64; 2], window: TemporalWindow<f64>) -> SourceSpec<f64> {
    SourceSpec::single(WavePacket {
        center1: vec![0.0, 0.0],
        center2: vec![0.0, 0.0],
        width: f64::INFINITY,
        carrier1: k1.to_vec(),
        carrier2: k2.to_vec(),
        amplitude: [1.0, 0.0],
        window,
    })
}

fn hamiltonian(xi1: [f64; 2], xi2: [f64; 2], rho: f64, p: &PhysicsParams<f64>) -> [[f64; 4]; 4] {
    let n1 = (xi1[0] * xi1[0] + xi1[1] * xi1[1]).sqrt();
    let n2 = (xi2[0] * xi2[0] + xi2[1] * xi2[1]).sqrt();
    let (g, o, a) = (p.g, p.omega, rho.sqrt());
    [
        [n1 + n2, g * a, g * a, 0.0],
        [g * a, o + n1, 0.0, g * a],
        [g * a, 0.0, o + n2, -g * a],
        [0.0, g * a, -g * a, 2.0 * o],
    ]
}

/// Exact solution on the grid for the symmetrized plane-wave source.
fn constant_rho_oracle(
    grid: &GridSpec<f64>,
    k1: [f64; 2],
    k2: [f64; 2],
    rho: f64,
    p: &PhysicsParams<f64>,
    w: &TemporalWindow<f64>,
    t: f64,
) -> FieldState<f64> {
    let mut st = FieldState::zeros(grid);
    let b = grid.block_len();
    for (xi1, xi2) in [(k1, k2), (k2, k1)] {
        let v = mode_oracle(&hamiltonian(xi1, xi2, rho, p), w, t);
        for i1 in 0..b {
            let x1 = grid.block_point(i1);
            for i2 in 0..b {
                let x2 = grid.block_point(i2);
                let ph = Complex64::from_polar(0.5, xi1[0] * x1[0] + xi1[1] * x1[1] + xi2[0] * x2[0] + xi2[1] * x2[1]);
                for k in 0..4 {
                    st.component_mut(k)[i1 * b + i2] += v[k] * ph;
                }
            }
        }
    }
    st
}

fn periodic(times: Vec<f64>) -> EvolveOptions<f64> {
    EvolveOptions { enforce_no_wrap: false, ..EvolveOptions::at(times) }
}

fn rel_diff(a: &FieldState<f64>, b: &FieldState<f64>) -> f64 {
    let d: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm_sqr()).sum();
    d.sqrt() / b.norm()
}

fn constant_rho_run(steps: usize) -> (FieldState<f64>, FieldState<f64>) {
    let t = 2.0;
    let grid = GridSpec::new(2, 8, std::f64::consts::PI, t / steps as f64, t).unwrap();
    let p = PhysicsParams { g: 0.8, omega: 0.7 };
    let w = TemporalWindow { start: 0.2, end: 1.2, carrier: 3.0 };
    let (k1, k2) = ([2.0, 0.0], [1.0, -1.0]);
    let rho = DensityField::uniform_periodic(&grid, 0.5).unwrap();
    let tr = evolve_with(&rho, &p, &plane_wave(k1, k2, w.clone()), &grid, &periodic(vec![t]), |_, _| Ok(())).unwrap();
    let oracle = constant_rho_oracle(&grid, k1, k2, 0.5, &p, &w, t);
    (tr.snapshots[0].clone(), oracle)
}

#[test]
fn constant_density_matches_mode_oracle() {
    let (u, oracle) = constant_rho_run(2048);
    let err = rel_diff(&u, &oracle);
    assert!(err < 1e-6, "relative error {err:e}");
}

#[test]
fn splitting_is_second_order() {
    let runs: Vec<FieldState<f64>> = [128, 256, 512].iter().map(|&s| constant_rho_run(s).0).collect();
    let e1 = rel_diff(&runs[0], &runs[1]);
    let e2 = rel_diff(&runs[1], &runs[2]);
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.1, "observed order {order}");
}

#[test]
fn decoupled_plane_wave_matches_scalar_duhamel() {
    let t = 1.5;
    let grid = GridSpec::new(2, 8, std::f64::consts::PI, t / 600.0, t).unwrap();
    let p = PhysicsParams { g: 0.0, omega: 1.0 };
    let w = TemporalWindow { start: 0.1, end: 0.9, carrier: 2.0 };
    let (k1, k2) = ([1.0, 1.0], [0.0, 3.0]);
    let rho = DensityField::uniform_periodic(&grid, 1.0).unwrap();
    let tr = evolve_with(&rho, &p, &plane_wave(k1, k2, w.clone()), &grid, &periodic(vec![t]), |_, _| Ok(())).unwrap();
    let u = &tr.snapshots[0];
    for k in 1..4 {
        assert!(u.component(k).iter().all(|z| *z == Complex64::default()));
    }
    let oracle = constant_rho_oracle(&grid, k1, k2, 1.0, &p, &w, t);
    let err = u.max_abs_diff(&oracle);
    assert!(err < 1e-8, "{err:e}");
}

fn scattering_setup(g: f64) -> (GridSpec<f64>, DensityField<f64>, PhysicsParams<f64>, SourceSpec<f64>) {
    let grid = GridSpec::new(2, 20, 3.1, 0.02, 1.2).unwrap();
    let ph = Phantom::bumps(vec![Bump { center: vec![0.3, 0.0], radius: 0.5, amplitude: 1.0 }]);
    let rho = DensityField::from_model(&grid, &ph).unwrap();
    let src = packet_source([-0.4, 0.0], [0.0, -0.3], [5.0, 0.0], [0.0, 4.0], [1.0, 0.0], 0.1);
    (grid, rho, PhysicsParams { g, omega: 0.5 }, src)
}

fn packet_source(y1: [f64; 2], y2: [f64; 2], k1: [f64; 2], k2: [f64; 2], amp: [f64; 2], start: f64) -> SourceSpec<f64> {
    let tau = (k1[0].hypot(k1[1])) + k2[0].hypot(k2[1]);
    SourceSpec::single(WavePacket {
        center1: y1.to_vec(),
        center2: y2.to_vec(),
        width: 0.35,
        carrier1: k1.to_vec(),
        carrier2: k2.to_vec(),
        amplitude: amp,
        window: TemporalWindow { start, end: start + 0.3, carrier: tau },
    })
}

#[test]
fn zero_source_gives_identically_zero_trajectory() {
    let (grid, rho, p, _) = scattering_setup(1.0);
    let tr = evolve(&rho, &p, &SourceSpec::zero(), &grid, &[0.0, 0.6, 1.2]).unwrap();
    assert!(tr.snapshots.iter().all(|s| s.data.iter().all(|z| *z == Complex64::default())));
}

#[test]
fn field_vanishes_before_source_window() {
    let (grid, rho, p, src) = scattering_setup(1.0);
    let tr = evolve(&rho, &p, &src, &grid, &[0.06, 1.2]).unwrap();
    assert!(tr.snapshots[0].data.iter().all(|z| *z == Complex64::default()));
    assert!(tr.snapshots[1].norm() > 0.0);
}

#[test]
fn post_source_norm_is_conserved() {
    let (mut grid, _, p, src) = scattering_setup(1.0);
    grid.dt = 0.001;
    grid.points_per_axis = 16;
    let ph = Phantom::bumps(vec![Bump { center: vec![0.3, 0.0], radius: 0.5, amplitude: 1.0 }]);
    let rho = DensityField::from_model(&grid, &ph).unwrap();
    let mut norms = Vec::new();
    evolve_with(&rho, &p, &src, &grid, &EvolveOptions::default(), |s, _| {
        if s.time > 0.45 {
            norms.push(s.norm());
        }
        Ok(())
    })
    .unwrap();
    assert!(norms.len() >= 700);
    let (lo, hi) = norms.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / hi < 1e-8, "drift {}", (hi - lo) / hi);
}

#[test]
fn swap_symmetry_holds_throughout_scattering() {
    let (grid, rho, p, src) = scattering_setup(1.5);
    let mut worst = 0.0f64;
    evolve_with(&rho, &p, &src, &grid, &EvolveOptions::default(), |s, k| {
        if k % 5 == 0 {
            worst = worst.max(s.max_abs_diff(&s.exchanged()));
        }
        Ok(())
    })
    .unwrap();
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn solution_is_linear_in_the_source() {
    let (grid, rho, p, f) = scattering_setup(1.0);
    let h = packet_source([0.2, 0.3], [-0.3, 0.1], [0.0, -5.0], [4.0, 3.0], [0.3, -0.7], 0.2);
    let (al, be) = (Complex64::new(0.4, -1.1), Complex64::new(-0.6, 0.25));
    let comb = f.scaled(al).combined(be, &h);
    let t = [1.2];
    let uf = evolve(&rho, &p, &f, &grid, &t).unwrap().snapshots.remove(0);
    let uh = evolve(&rho, &p, &h, &grid, &t).unwrap().snapshots.remove(0);
    let uc = evolve(&rho, &p, &comb, &grid, &t).unwrap().snapshots.remove(0);
    let mut expect = uf.clone();
    expect.scale(al);
    expect.axpy(be, &uh);
    assert!(uc.max_abs_diff(&expect) < 1e-10 * uc.norm());
}

#[test]
fn decoupling_at_zero_coupling() {
    let (grid, rho, _, src) = scattering_setup(0.0);
    let p = PhysicsParams { g: 0.0, omega: 2.0 };
    let u = evolve(&rho, &p, &src, &grid, &[1.2]).unwrap().snapshots.remove(0);
    for k in 1..4 {
        assert!(u.component(k).iter().all(|z| *z == Complex64::default()));
    }
    let free = evolve(&DensityField::zeros(&grid), &p, &src, &grid, &[1.2]).unwrap().snapshots.remove(0);
    assert_eq!(u, free);
}

#[test]
fn stability_ratio_is_refinement_stable() {
    let ratio = |dt: f64| {
        let (mut grid, rho, p, src) = scattering_setup(1.0);
        grid.dt = dt;
        let tr = evolve(&rho, &p, &src, &grid, &[]).unwrap();
        let fmax = (0..40)
            .map(|i| {
                let t = 0.1 + 0.3 * i as f64 / 40.0;
                let b = grid.block_len();
                (0..b * b)
                    .map(|j| src.value_at(t, &grid.block_point(j / b), &grid.block_point(j % b)).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        tr.max_norm / fmax
    };
    let (a, b) = (ratio(0.02), ratio(0.01));
    assert!(a.is_finite() && a > 0.0);
    assert!((a - b).abs() / b < 0.01, "{a} vs {b}");
}
