use std::sync::Arc;

use dgint::form::{AffineMap, PolyForm, ScalarForm};
use dgint::random;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;
const CAP: usize = 8;

fn r(a: i64, b: i64) -> Q {
    Q::new(a.into(), b.into())
}

fn rand_form(rng: &mut ChaCha8Rng, n: usize) -> ScalarForm<Q> {
    random::scalar_form(rng, n, CAP, 3)
}

#[test]
fn small_examples() {
    // d(x dy) = dx dy
    let xdy = ScalarForm::<Q>::coord(2, CAP, 0).wedge(&ScalarForm::dcoord(2, CAP, 1));
    assert_eq!(
        xdy.d(),
        ScalarForm::monomial(2, CAP, 0b11, &[0, 0], Q::one())
    );
    // d t0 = -dx1 - dx2
    let t0 = ScalarForm::<Q>::barycentric(2, CAP, 0);
    let want = ScalarForm::dcoord(2, CAP, 0)
        .add(&ScalarForm::dcoord(2, CAP, 1))
        .neg();
    assert_eq!(t0.d(), want);
    // dx dy = -dy dx
    let dx = ScalarForm::<Q>::dcoord(2, CAP, 0);
    let dy = ScalarForm::<Q>::dcoord(2, CAP, 1);
    assert_eq!(dx.wedge(&dy), dy.wedge(&dx).neg());
    assert_eq!(dx.wedge(&ScalarForm::constant(2, CAP, Q::one())), dx);
    // ∫ x1 dx1 dx2 over Δ² = 1/6
    let f = ScalarForm::<Q>::monomial(2, CAP, 0b11, &[1, 0], Q::one());
    assert_eq!(f.integrate_top(), r(1, 6));
    // a 0-form integrates to 0 over an edge
    assert!(ScalarForm::<Q>::constant(2, CAP, Q::one())
        .integrate_over(&[0, 1])
        .unwrap()
        .is_zero());
    // h0(dx) = x on Δ¹; h0(dx dy) = (x dy - y dx)/2
    let dt = ScalarForm::<Q>::dcoord(1, CAP, 0);
    assert_eq!(dt.homotopy(0), ScalarForm::coord(1, CAP, 0));
    let h = dx.wedge(&dy).homotopy(0);
    let x = ScalarForm::<Q>::coord(2, CAP, 0);
    let y = ScalarForm::<Q>::coord(2, CAP, 1);
    assert_eq!(h, x.wedge(&dy).sub(&y.wedge(&dx)).scale(&r(1, 2)));
    // the face x2 = 0 of Δ² kills dx2
    assert!(dy.pullback_vertices(&[0, 1]).unwrap().is_zero());
    assert_eq!(f.pullback(&AffineMap::identity(2)), f);
}

#[test]
fn norm_examples() {
    let z = PolyForm::<f64>::zero(Arc::new(vec![0]), 1, CAP, 0);
    assert_eq!(z.norm().value, 0.0);
    let c = PolyForm::from_comps(
        Arc::new(vec![0]),
        0,
        vec![ScalarForm::constant(1, CAP, -2.5)],
    );
    assert_eq!(c.norm().value, 2.5);
    let x = PolyForm::<f64>::from_comps(Arc::new(vec![0]), 0, vec![ScalarForm::coord(1, CAP, 0)]);
    assert_eq!(x.norm().value, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let a: PolyForm<f64> = random::poly_form(&mut rng, &Arc::new(vec![0, 1]), 2, CAP, 0, 3);
        let b: PolyForm<f64> = random::poly_form(&mut rng, &Arc::new(vec![0, 1]), 2, CAP, 0, 3);
        assert!(a.add(&b).norm().value <= a.norm().value + b.norm().value + 1e-12);
    }
}

#[test]
fn d_squared_and_leibniz() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 1..=3 {
        for _ in 0..20 {
            let a = rand_form(&mut rng, n);
            assert!(a.d().d().is_zero());
            let p = rng.gen_range(0..=n);
            let a = a.part(p);
            let b = rand_form(&mut rng, n);
            let second = a.wedge(&b.d());
            let second = if p % 2 == 1 { second.neg() } else { second };
            assert_eq!(a.wedge(&b).d(), a.d().wedge(&b).add(&second), "n={n}");
        }
    }
}

#[test]
fn homotopy_formula_on_triangle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let a = rand_form(&mut rng, 2);
        for v in 0..=2 {
            let ev = ScalarForm::constant(2, CAP, a.part(0).vertex_value(v));
            assert_eq!(a.d().homotopy(v).add(&a.homotopy(v).d()), a.sub(&ev));
            assert!(a.homotopy(v).homotopy(v).is_zero());
        }
    }
}

fn random_vertex_map(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<usize> {
    (0..=m).map(|_| rng.gen_range(0..=n)).collect()
}

#[test]
fn pullback_is_a_chain_map_and_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for n in 1..=3 {
        for m in 1..=3 {
            for _ in 0..10 {
                let a = rand_form(&mut rng, n);
                let b = rand_form(&mut rng, n).part(0);
                let v = random_vertex_map(&mut rng, m, n);
                let map = AffineMap::from_vertices(&v, n).unwrap();
                assert_eq!(a.d().pullback(&map), a.pullback(&map).d());
                assert_eq!(
                    b.wedge(&a).pullback(&map),
                    b.pullback(&map).wedge(&a.pullback(&map))
                );
            }
        }
    }
}

#[test]
fn stokes_on_simplices() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for n in 1..=3 {
        for _ in 0..20 {
            let a = rand_form(&mut rng, n).part(n - 1);
            let mut rhs = Q::zero();
            for p in 0..=n {
                let v: Vec<usize> = (0..=n).filter(|&j| j != p).collect();
                let t = a.integrate_over(&v).unwrap();
                rhs = if p % 2 == 0 { rhs + t } else { rhs - t };
            }
            assert_eq!(a.d().integrate_top(), rhs, "n={n}");
        }
    }
}

// integer coefficients stay integral under vertex pullbacks, so f64 is exact here
fn rand_polyform(rng: &mut ChaCha8Rng, n: usize) -> PolyForm<f64> {
    random::poly_form(rng, &Arc::new(vec![0, 1, 2]), n, 4, 0, 2)
}

#[test]
fn simplicial_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for n in 1..=3 {
        for _ in 0..5 {
            let a = rand_polyform(&mut rng, n);
            for j in 0..=n {
                for i in 0..j {
                    if n >= 2 {
                        assert_eq!(a.face(j).face(i), a.face(i).face(j - 1));
                    }
                }
                for i in 0..=j {
                    assert_eq!(
                        a.degeneracy(j).degeneracy(i),
                        a.degeneracy(i).degeneracy(j + 1)
                    );
                }
            }
            for j in 0..=n {
                for i in 0..=n + 1 {
                    let lhs = a.degeneracy(j).face(i);
                    let rhs = if i < j {
                        a.face(i).degeneracy(j - 1)
                    } else if i == j || i == j + 1 {
                        a.clone()
                    } else {
                        a.face(i - 1).degeneracy(j)
                    };
                    assert_eq!(lhs, rhs, "d_{i} s_{j} on Δ^{n}");
                }
            }
        }
    }
}

#[test]
fn table_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let wdeg = Arc::new(vec![0, 1, 2]);
    for n in 1..=3 {
        let f: PolyForm<f64> = random::poly_form(&mut rng, &wdeg, n, CAP, 0, 3);
        let f = f.scale(&0.37);
        let text = f.to_table(&names);
        let back = PolyForm::from_table(&text, &names, wdeg.clone()).unwrap();
        assert_eq!(back, f);
    }
}
