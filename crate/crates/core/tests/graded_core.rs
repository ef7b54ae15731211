use dgint::fixtures::{bundled, bundled_with, BUNDLED};

#[test]
fn bundled_charts_load() {
    for name in BUNDLED {
        let c = bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(c.check_q2().iter().all(|r| r.is_zero()), "{name}");
    }
}

#[test]
fn broken_fixture_reports_residual() {
    assert!(bundled("broken_jacobi").is_err());
    let c = bundled_with("broken_jacobi", true).unwrap();
    assert!(c.check_q2().iter().any(|r| !r.is_zero()));
}

use std::sync::Arc;

use dgint::chart_format::{display_dg_spec, parse_dg_spec};
use dgint::error::Error;
use dgint::graded::{koszul_normalize, GradedCoordSystem, GradedPolynomial};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

#[test]
fn bianchi_constants_satisfy_jacobi() {
    // c^1_23 = c^2_31 = 1, c^3_12 = 0
    let text = "[coords]\ne1 1\ne2 1\ne3 1\n[Q]\ne1 = e2*e3\ne2 = e3*e1\n";
    let c = parse_dg_spec(text, "bianchi", false).unwrap();
    assert!(c.check_q2().iter().all(|r| r.is_zero()));
}

#[test]
fn q2_violation_names_coordinates() {
    let text = dgint::fixtures::source("broken_jacobi").unwrap();
    match parse_dg_spec(text, "broken", false) {
        Err(Error::Q2Violation(names)) => assert!(!names.is_empty()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn fixture_shapes() {
    let so3 = bundled("so3").unwrap();
    assert_eq!((so3.rank(), so3.ell()), (3, 1));
    let heis = bundled("heisenberg").unwrap();
    assert_eq!(heis.ell(), 1);
    assert_eq!(heis.fq().iter().filter(|f| !f.is_zero()).count(), 1);
    let c = bundled("courant_std").unwrap();
    assert_eq!((c.rank(), c.ell()), (8, 2));
    assert_eq!(bundled("string_su2").unwrap().ell(), 2);
}

#[test]
fn chart_text_round_trips() {
    for name in BUNDLED {
        let c = bundled(name).unwrap();
        let text = display_dg_spec(&c);
        let back = parse_dg_spec(&text, name, false).unwrap();
        assert_eq!(display_dg_spec(&back), text, "{name}");
        assert_eq!(back.fq(), c.fq(), "{name}");
        assert_eq!(back.omega(), c.omega(), "{name}");
        assert_eq!(back.bounds(), c.bounds(), "{name}");
    }
}

#[test]
fn parse_errors_carry_positions() {
    let bad = "[coords]\nx 0\ny one\n";
    match parse_dg_spec(bad, "bad", false) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let bad_q = "[coords]\nx 0\nxi 1\n[Q]\nx = 2 * * xi\n";
    match parse_dg_spec(bad_q, "bad", false) {
        Err(Error::Parse { line, col, .. }) => assert_eq!((line, col > 1), (5, true)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn linearization_squares_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in BUNDLED {
        let c = bundled(name).unwrap();
        let inner = c.bounds().shrunk(0.05);
        for _ in 0..100 {
            let x: Vec<f64> = inner
                .bounds
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect();
            let m = c.linearize(&x).unwrap();
            assert!((&m * &m).amax() < 1e-12, "{name} at {x:?}");
        }
    }
    // π = ∂1 ∧ ∂2: Q_lin sends p2 to -x1 and p1 to x2
    let p = bundled("poisson_const").unwrap();
    let m = p.linearize(&[0.3, -0.4]).unwrap();
    let want = nalgebra::DMatrix::from_row_slice(
        4,
        4,
        &[
            0., 0., 0., -1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0., 0.,
        ],
    );
    assert_eq!(m, want);
    let so3 = bundled("so3").unwrap();
    assert_eq!(so3.linearize(&[]).unwrap().amax(), 0.0);
}

fn cs() -> Arc<GradedCoordSystem> {
    let coords = [
        ("x", 0),
        ("y", 0),
        ("a", 1),
        ("b", 1),
        ("c", 1),
        ("p", 2),
        ("r", 2),
    ];
    Arc::new(
        GradedCoordSystem::new(coords.iter().map(|(n, d)| (n.to_string(), *d)).collect()).unwrap(),
    )
}

/// Random product of coordinates of total degree `deg`, as an ordered factor list.
fn random_factors(rng: &mut ChaCha8Rng, cs: &GradedCoordSystem, deg: usize) -> Vec<usize> {
    loop {
        let len = rng.gen_range(0..5);
        let f: Vec<usize> = (0..len).map(|_| rng.gen_range(0..cs.len())).collect();
        if f.iter().map(|&i| cs.degree(i)).sum::<usize>() == deg {
            return f;
        }
    }
}

fn random_poly(rng: &mut ChaCha8Rng, cs: &Arc<GradedCoordSystem>, deg: usize) -> GradedPolynomial {
    let mut p = GradedPolynomial::zero(cs);
    for _ in 0..3 {
        let f = random_factors(rng, cs, deg);
        p = p.add(&GradedPolynomial::term(cs, q(rng.gen_range(-3..=3)), &f));
    }
    p
}

/// Left derivative of an ordered product, by moving each occurrence to the front.
fn partial_oracle(cs: &Arc<GradedCoordSystem>, factors: &[usize], i: usize) -> GradedPolynomial {
    let mut out = GradedPolynomial::zero(cs);
    let mut passed = 0;
    for (r, &f) in factors.iter().enumerate() {
        if f == i {
            let rest: Vec<usize> = factors
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != r)
                .map(|(_, &g)| g)
                .collect();
            let sign = if cs.degree(i) * passed % 2 == 1 {
                -1
            } else {
                1
            };
            out = out.add(&GradedPolynomial::term(cs, q(sign), &rest));
        }
        passed += cs.degree(f);
    }
    out
}

#[test]
fn partial_matches_sign_oracle() {
    let cs = cs();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let deg = rng.gen_range(0..5);
        let f = random_factors(&mut rng, &cs, deg);
        let p = GradedPolynomial::term(&cs, q(1), &f);
        for i in 0..cs.len() {
            assert_eq!(p.partial(i), partial_oracle(&cs, &f, i), "{f:?} d/d{i}");
        }
    }
}

#[test]
fn graded_leibniz_rule() {
    let cs = cs();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (dp, dq) = (rng.gen_range(0..4), rng.gen_range(0..4));
        let a = random_poly(&mut rng, &cs, dp);
        let b = random_poly(&mut rng, &cs, dq);
        for i in 0..cs.len() {
            let mut second = a.mul(&b.partial(i));
            if cs.degree(i) * dp % 2 == 1 {
                second = second.neg();
            }
            assert_eq!(a.mul(&b).partial(i), a.partial(i).mul(&b).add(&second));
        }
    }
}

#[test]
fn koszul_normalization_is_idempotent() {
    let cs = cs();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let f: Vec<usize> = (0..rng.gen_range(0..6))
            .map(|_| rng.gen_range(2..cs.len()))
            .collect();
        if let Some((sorted, _)) = koszul_normalize(&f, cs.degrees()) {
            assert_eq!(
                koszul_normalize(&sorted, cs.degrees()),
                Some((sorted.clone(), false))
            );
        }
    }
}
