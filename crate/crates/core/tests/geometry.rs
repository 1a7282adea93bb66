use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tptomo::evolution::DensityField;
use tptomo::geometry::*;
use tptomo::phantom::{Bump, Phantom};
use tptomo::spectral::GridSpec;

fn d(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sigma_of(bumps: Vec<Bump<f64>>) -> Region<f64> {
    let grid = GridSpec::new(2, 48, 2.4, 0.01, 1.0).unwrap();
    let rho = DensityField::from_model(&grid, &Phantom::bumps(bumps)).unwrap();
    Region::from_density(&rho)
}

fn reference() -> (Region<f64>, Region<f64>, Region<f64>, Region<f64>) {
    let sigma = sigma_of(vec![
        Bump { center: vec![0.0, 0.1], radius: 0.3, amplitude: 1.0 },
        Bump { center: vec![0.1, -0.2], radius: 0.2, amplitude: 0.8 },
    ]);
    let s = Region::product(Region::ball(vec![-1.2, 0.0], 0.4), Region::ball(vec![-1.2, 0.0], 0.4));
    let w1 = Region::cuboid(vec![-1.3, 1.3], vec![0.5, 1.9]);
    let w2 = Region::cuboid(vec![0.6, -1.0], vec![1.0, 1.0]);
    (s, w1, w2, sigma)
}

fn counterexample() -> (Region<f64>, Region<f64>, Region<f64>, Region<f64>) {
    let ring = (0..16)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 8.0;
            Bump { center: vec![0.6 * a.cos(), 0.6 * a.sin()], radius: 0.22, amplitude: 1.0 }
        })
        .collect();
    let sigma = sigma_of(ring);
    let s = Region::product(Region::ball(vec![-1.2, 0.0], 0.2), Region::ball(vec![0.0, 0.0], 0.2));
    let w1 = Region::ball(vec![0.0, 0.0], 0.3);
    let w2 = Region::difference(Region::ball(vec![0.0, 0.0], 1.5), Region::ball(vec![0.0, 0.0], 1.0));
    (s, w1, w2, sigma)
}

#[test]
fn grazing_segment_follows_closest_sample_rule() {
    let unit = Region::ball(vec![0.0, 0.0], 1.0);
    let step = 0.05;
    for (k, off) in [1.0 + step / 4.0, 1.0 - step / 4.0, 1.0].iter().enumerate() {
        let a = [-1.3 + 0.01 * k as f64, *off];
        let b = [1.7, *off];
        // closed form distance from the origin to every sample of the segment
        let len = d(&a, &b);
        let m = (len / step).ceil() as usize;
        let closest = (0..=m)
            .map(|i| {
                let s = i as f64 / m as f64;
                ((a[0] + (b[0] - a[0]) * s).powi(2) + off * off).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let exact = off.abs();
        assert!(closest >= exact);
        assert_eq!(segment_hits(&unit, &a, &b, step), closest <= 1.0, "offset {off}");
    }
}

#[test]
fn sigma_behind_source_is_dark() {
    let x2 = Region::cuboid(vec![1.0, -0.5], vec![1.5, 0.5]);
    let sigma = Region::ball(vec![-1.0, 0.0], 0.2);
    let p = [0.0, 0.0];
    let s = Sampling::new(0.05);
    // exhaustive oracle: for every sample, march the ray until it is far past X2
    let lit = sigma.samples(0.05).iter().all(|q| {
        let l = d(q, &p);
        let dir = [(q[0] - p[0]) / l, (q[1] - p[1]) / l];
        (0..2000).any(|i| {
            let t = i as f64 * 0.005;
            x2.contains(&[q[0] + dir[0] * t, q[1] + dir[1] * t])
        })
    });
    assert!(!lit);
    assert_eq!(illuminated_from(&p, &x2, &sigma, &s).unwrap(), lit);
    let ahead = Region::ball(vec![0.5, 0.0], 0.1);
    assert!(illuminated_from(&p, &x2, &ahead, &s).unwrap());
}

#[test]
fn equidistant_source_examples() {
    let s = Sampling::new(0.05);
    let point = Region::product(Region::cuboid(vec![0.0, 0.0], vec![0.0, 0.0]), Region::cuboid(vec![0.0, 0.0], vec![0.0, 0.0]));
    assert_eq!(find_equidistant_source(&[0.6, 0.8], &[1.0, 0.0], &point, &s), Some(vec![0.0; 4]));
    assert_eq!(find_equidistant_source(&[0.6, 0.8], &[2.0, 0.0], &point, &s), None);

    let diag = Region::product(Region::ball(vec![0.0, 0.0], 0.5), Region::ball(vec![0.0, 0.0], 0.5));
    let mut ds = s.clone();
    ds.diagonal = true;
    let y = find_equidistant_source(&[1.0, 0.3], &[1.0, 0.3], &diag, &ds).unwrap();
    assert_eq!(&y[..2], &y[2..]);

    let prod = Region::product(Region::ball(vec![-0.5, 0.2], 0.4), Region::ball(vec![0.3, -0.1], 0.3));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut found = 0;
    for _ in 0..40 {
        let x1 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let x2 = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        if let Some(y) = find_equidistant_source(&x1, &x2, &prod, &s) {
            assert!(prod.contains(&y));
            assert!((d(&x1, &y[..2]) - d(&x2, &y[2..])).abs() < s.tol);
            found += 1;
        }
    }
    assert!(found > 5);
}

#[test]
fn empty_sigma_passes_and_y2_fills_the_slice() {
    let s = Region::product(Region::ball(vec![0.0, 0.0], 0.8), Region::ball(vec![0.0, 0.0], 0.8));
    let w1 = Region::cuboid(vec![-1.0, 1.0], vec![1.0, 1.4]);
    let w2 = w1.clone();
    let sigma = Region::Empty { dim: 2 };
    let mut sp = Sampling::new(0.1);
    sp.max_candidates = 8;
    let w = check_condition1(&s, &w1, &w2, &sigma, &sp);
    assert!(w.passed(), "{}", w.report());
    assert!(w.reverify(&s, &w1, &w2, &sigma));
    let (y2, _) = construct_y2_x2(&w, &s, &w2, &sigma, &sp).unwrap();
    let z2 = w.z2.clone().unwrap();
    // largest ball around z2 inside the second factor of S
    let largest = 0.8 - d(&z2, &[0.0, 0.0]);
    assert!(y2.radius <= largest + 1e-12 && y2.radius > largest - sp.step, "{} vs {largest}", y2.radius);
}

#[test]
fn reference_configuration_passes_and_reverifies() {
    let (s, w1, w2, sigma) = reference();
    let sp = Sampling::new(0.1);
    let mut w = check_condition1(&s, &w1, &w2, &sigma, &sp);
    assert!(w.passed(), "{}", w.report());
    assert!(w.reverify(&s, &w1, &w2, &sigma));
    assert!(w.x1_cardinality > 0);
    let (y2, x2) = construct_y2_x2(&w, &s, &w2, &sigma, &sp).unwrap();
    assert!(y2.radius >= sp.step);
    w.y2 = Some(y2.clone());
    w.x2_region = Some(x2.clone());
    assert!(w.reverify(&s, &w1, &w2, &sigma));
    let center = y2.center.clone();
    for q in [center.clone(), vec![center[0] + y2.radius * 0.7, center[1] - y2.radius * 0.7]] {
        assert!(illuminated_from(&q, &x2, &sigma, &sp).unwrap());
        assert!(!x2.contains(&q));
    }
}

#[test]
fn shrinking_sigma_keeps_the_witness() {
    let (s, w1, w2, sigma) = reference();
    let sp = Sampling::new(0.1);
    let w = check_condition1(&s, &w1, &w2, &sigma, &sp);
    let smaller = sigma_of(vec![Bump { center: vec![0.0, 0.1], radius: 0.3, amplitude: 1.0 }]);
    assert!(w.reverify(&s, &w1, &w2, &smaller));
}

#[test]
fn sigma_around_w1_fails_avoidance() {
    let (s, w1, w2, sigma) = counterexample();
    let sp = Sampling::new(0.1);
    let w = check_condition1(&s, &w1, &w2, &sigma, &sp);
    assert!(!w.passed());
    assert_eq!(w.failed_clause, Some(Clause::Avoidance), "{}", w.report());
    assert_eq!(w.offending.len(), 2);
    let z1 = w.z1.clone().unwrap();
    assert!(segment_hits(&sigma, &z1, &w.offending[1], sp.segment_step));
}

#[test]
fn source_next_to_sigma_cannot_host_y2() {
    let (s, w1, w2, sigma) = reference();
    let sp = Sampling::new(0.1);
    let w = check_condition1(&s, &w1, &w2, &sigma, &sp);
    assert!(w.passed());
    let z2 = w.z2.clone().unwrap();
    // a second scatterer half a cell away from z2, towards W2
    let near = Region::UnionOfBalls {
        centers: vec![vec![0.0, 0.1], vec![z2[0] + 0.08, z2[1]]],
        radii: vec![0.3, 0.03],
    };
    assert!(illuminated_from(&z2, &w2, &near, &sp).unwrap());
    let err = construct_y2_x2(&w, &s, &w2, &near, &sp).unwrap_err();
    assert!(matches!(err, tptomo::Error::Construction(_)), "{err}");
}
