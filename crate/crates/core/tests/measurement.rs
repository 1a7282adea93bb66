use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tptomo::evolution::{DensityField, PhysicsParams, SourceSpec, TemporalWindow, WavePacket};
use tptomo::measurement::{
    apply_lambda, conormal_pairing_symbol, pairing_m, polarization_recover, repair_factor, DetectorSpec,
    DirectionQuadrature, LambdaOracle, SolverOracle,
};
use tptomo::numerics::bump;
use tptomo::phantom::{Bump, Phantom};
use tptomo::spectral::{FieldState, GridSpec};

fn chi(x: &[f64]) -> f64 {
    let r = ((x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2)).sqrt();
    bump(r / 0.9)
}

fn detector(grid: &GridSpec<f64>) -> DetectorSpec<f64> {
    let pts = vec![vec![0.0, 0.0], vec![-0.4, 0.3], vec![0.6, -0.2]];
    DetectorSpec::with_weight(grid, pts, chi, vec![0.3, 0.42]).unwrap()
}

fn random_field(grid: &GridSpec<f64>, rng: &mut ChaCha8Rng) -> FieldState<f64> {
    let mut u = FieldState::zeros(grid);
    for z in u.data.iter_mut() {
        *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    u
}

#[test]
fn separable_field_matches_one_block_quadrature() {
    let grid = GridSpec::new(2, 16, 1.6, 0.1, 0.5).unwrap();
    let det = detector(&grid);
    let b = grid.block_len();
    let h = grid.spacing();
    let a: Vec<Complex64> = (0..b).map(|i| Complex64::new(1.0 + i as f64 * 0.01, -0.5)).collect();
    let g: Vec<Complex64> = (0..b)
        .map(|i| {
            let x = grid.block_point(i);
            Complex64::from_polar((-(x[0] * x[0] + x[1] * x[1]) / (2.0 * 0.3f64.powi(2))).exp(), 8.0 * x[0])
        })
        .collect();
    let mut u = FieldState::zeros(&grid);
    for i1 in 0..b {
        for i2 in 0..b {
            u.component_mut(0)[i1 * b + i2] = a[i1] * g[i2];
        }
    }
    // 1-D (flattened block) quadrature of chi |g|^2
    let mut q = 0.0;
    for i in 0..grid.points_per_axis {
        for j in 0..grid.points_per_axis {
            let x = [-1.6 + h * i as f64, -1.6 + h * j as f64];
            q += chi(&x) * g[i * grid.points_per_axis + j].norm_sqr() * h * h;
        }
    }
    let got = apply_lambda(&u, &det).unwrap();
    for (p, v) in det.w1_points.iter().zip(&got) {
        let i1 = grid.nearest_block_index(p).unwrap();
        let want = a[i1].norm_sqr() * q;
        assert!((v - want).abs() <= 1e-10 * want, "{v} vs {want}");
    }
}

#[test]
fn lambda_scales_with_chi_and_ignores_global_phase() {
    let grid = GridSpec::new(2, 12, 1.5, 0.1, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = random_field(&grid, &mut rng);
    let det = DetectorSpec::with_weight(&grid, vec![vec![0.1, 0.1]], |x: &[f64]| bump(x[0].hypot(x[1])), vec![0.0]).unwrap();
    let mut det3 = det.clone();
    det3.chi.iter_mut().for_each(|v| *v *= 3.0);
    let l1 = apply_lambda(&u, &det).unwrap()[0];
    let l3 = apply_lambda(&u, &det3).unwrap()[0];
    assert!((l3 - 3.0 * l1).abs() < 1e-13 * l3);
    let mut v = u.clone();
    v.scale(Complex64::from_polar(1.0, 2.3));
    let lv = apply_lambda(&v, &det).unwrap()[0];
    assert!((lv - l1).abs() < 1e-13 * l1);
}

#[test]
fn pairing_matches_dense_sum_and_is_sesquilinear() {
    let grid = GridSpec::new(2, 16, 1.6, 0.1, 0.5).unwrap();
    let det = detector(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = random_field(&grid, &mut rng);
    let v = random_field(&grid, &mut rng);
    let b = grid.block_len();
    let dv = grid.spacing().powi(2);
    let m = pairing_m(&u, &v, &det).unwrap();
    for (p, got) in det.w1_points.iter().zip(&m) {
        let i1 = grid.nearest_block_index(p).unwrap();
        let mut want = Complex64::default();
        for i2 in 0..b {
            let x2 = grid.block_point(i2);
            want += chi(&x2) * u.at(0, i1, i2) * v.at(0, i1, i2).conj() * dv;
        }
        assert!((got - want).norm() < 1e-10 * want.norm());
    }
    let (al, be) = (Complex64::new(0.3, -1.2), Complex64::new(-0.7, 0.4));
    let mut ua = u.clone();
    ua.scale(al);
    let mut vb = v.clone();
    vb.scale(be);
    let m2 = pairing_m(&ua, &vb, &det).unwrap();
    for (a, b) in m.iter().zip(&m2) {
        assert!((a * al * be.conj() - b).norm() < 1e-12 * b.norm());
    }
}

#[test]
fn disjoint_x2_supports_pair_to_zero() {
    let grid = GridSpec::new(2, 16, 1.6, 0.1, 0.5).unwrap();
    let det = detector(&grid);
    let b = grid.block_len();
    let mut u = FieldState::zeros(&grid);
    let mut v = FieldState::zeros(&grid);
    for i1 in 0..b {
        for i2 in 0..b {
            if grid.block_point(i2)[0] < 0.0 {
                u.component_mut(0)[i1 * b + i2] = Complex64::new(1.0, 1.0);
            } else {
                v.component_mut(0)[i1 * b + i2] = Complex64::new(2.0, -1.0);
            }
        }
    }
    assert!(pairing_m(&u, &v, &det).unwrap().iter().all(|z| *z == Complex64::default()));
}

fn random_packet(rng: &mut ChaCha8Rng) -> SourceSpec<f64> {
    let mut v = |r: f64| rng.gen_range(-r..r);
    let k = |a: f64| [9.0 * a.cos(), 9.0 * a.sin()];
    let start = 0.03 + v(0.02).abs();
    SourceSpec::single(WavePacket {
        center1: vec![v(0.2), v(0.2)],
        center2: vec![v(0.2), v(0.2)],
        width: 0.22,
        carrier1: k(v(std::f64::consts::PI)).to_vec(),
        carrier2: k(v(std::f64::consts::PI)).to_vec(),
        amplitude: [v(1.0), v(1.0)],
        window: TemporalWindow { start, end: start + 0.2, carrier: 18.0 },
    })
}

#[test]
fn polarization_identity_recovers_pairing() {
    let grid = GridSpec::new(2, 16, 1.8, 0.01, 0.45).unwrap();
    let ph = Phantom::bumps(vec![Bump { center: vec![0.1, 0.1], radius: 0.4, amplitude: 2.0 }]);
    let rho = DensityField::from_model(&grid, &ph).unwrap();
    let det = DetectorSpec::with_weight(
        &grid,
        vec![vec![0.0, 0.0], vec![0.3, -0.2]],
        |x: &[f64]| bump(x[0].hypot(x[1]) / 0.6),
        vec![0.3, 0.42],
    )
    .unwrap();
    let oracle = SolverOracle::new(&rho, PhysicsParams { g: 1.0, omega: 0.5 }, grid.clone(), &det);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..3 {
        let f = random_packet(&mut rng);
        let h = random_packet(&mut rng);
        let rec = polarization_recover(&f, &h, &oracle).unwrap();
        let direct = oracle.direct_pairing(&f, &h).unwrap();
        assert!(direct.max_abs() > 0.0);
        assert!(rec.max_abs_diff(&direct) < 1e-9 * direct.max_abs().max(1e-30));
    }
    let f = random_packet(&mut rng);
    let same = polarization_recover(&f, &f, &oracle).unwrap();
    let lam = oracle.lambda(&f).unwrap();
    assert!(same.max_abs_diff(&lam) < 1e-12 * lam.max_abs());
    let zero = polarization_recover(&f, &SourceSpec::zero(), &oracle).unwrap();
    assert!(zero.max_abs() < 1e-12 * lam.max_abs());
}

fn eta(r: f64) -> f64 {
    r * bump((r - 1.0) / 0.35)
}

/// Dense Simpson oracle of the single-direction pairing symbol.
fn dense_pairing(symbol: impl Fn(f64) -> Complex64, t: f64, eps: f64, smax: f64) -> Complex64 {
    let nr = 800;
    let (a, b) = (0.65, 1.35);
    let hr = (b - a) / nr as f64;
    let finv = |s: f64| {
        (0..=nr)
            .map(|j| {
                let r = a + hr * j as f64;
                let w = if j == 0 || j == nr { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                Complex64::from_polar(eta(r) * w * hr / 3.0, s * r)
            })
            .sum::<Complex64>()
    };
    let simpson = |lo: f64, hi: f64, ns: usize| {
        let hs = (hi - lo) / ns as f64;
        (0..=ns)
            .map(|j| {
                let s = lo + hs * j as f64;
                let w = if j == 0 || j == ns { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                Complex64::from_polar(w * hs / 3.0, -s * t) * finv(s) * symbol(s)
            })
            .sum::<Complex64>()
    };
    simpson(eps, 10.0, 40000) + simpson(10.0, smax, 40000)
}

#[test]
fn delta_direction_reduces_to_one_dimensional_quadrature() {
    let sym = |s: f64| Complex64::new(1.0, 0.5) / (1.0 + s).powi(3);
    let got = conormal_pairing_symbol(
        |s, _| sym(s),
        |_| Complex64::new(0.5, -0.25),
        |r, _| eta(r),
        (0.65, 1.35),
        1.1,
        &DirectionQuadrature::delta(vec![0.0, 1.0]),
        0.5,
        1e4,
    )
    .unwrap();
    let want = dense_pairing(sym, 1.1, 0.5, 400.0) * Complex64::new(0.5, 0.25);
    assert!((got - want).norm() < 1e-8 * want.norm(), "{got} vs {want}");
}

#[test]
fn repair_factor_is_nonvanishing_for_smooth_profile() {
    let nu = |s: f64| tptomo::numerics::smooth_step((s - 0.5) / 0.5) * s.powi(-6);
    let chk = repair_factor(eta, (0.65, 1.35), nu, None::<fn(f64) -> f64>, 1.0, 0.5, 1e4, 1e-8).unwrap();
    assert!(chk.nonvanishing);
    let want = dense_pairing(|s| Complex64::new(-nu(s) / s, 0.0), 1.0, 0.5, 400.0);
    assert!((chk.value - want).norm() < 1e-8 * want.norm(), "{} vs {want}", chk.value);
    let phi = |s: f64| bump((s - 3.0) / 1.5);
    let rep = repair_factor(eta, (0.65, 1.35), nu, Some(phi), 1.0, 0.5, 1e4, 1e-8).unwrap();
    let want = dense_pairing(|s| Complex64::new(-nu(s) * phi(s) / s, 0.0), 1.0, 0.5, 400.0);
    assert!((rep.value - want).norm() < 1e-8 * want.norm());
}
