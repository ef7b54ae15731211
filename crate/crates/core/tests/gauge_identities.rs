use std::sync::Arc;

use dgint::form::{PolyForm, ScalarForm};
use dgint::random;
use dgint::simplicial::{
    dupont_gauge, dupont_scalar, elementary_form, gauge_project_pi, subsets, whitney_project,
    whitney_project_scalar,
};
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Q = BigRational;

fn rand_form(rng: &mut ChaCha8Rng, n: usize) -> ScalarForm<Q> {
    random::scalar_form(rng, n, 8, 3)
}

#[test]
fn homotopy_formula_all_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=3 {
        for _ in 0..5 {
            let a = rand_form(&mut rng, n);
            for v in 0..=n {
                let lhs = a.d().homotopy(v).add(&a.homotopy(v).d());
                let ev = ScalarForm::constant(n, 8, a.part(0).vertex_value(v));
                assert_eq!(lhs, a.sub(&ev), "n={n} v={v}");
                assert!(a.homotopy(v).homotopy(v).is_zero());
            }
        }
    }
}

#[test]
fn gauge_identities_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..=3 {
        for _ in 0..5 {
            let a = rand_form(&mut rng, n);
            let p = whitney_project_scalar(&a);
            let s = dupont_scalar(&a);
            let ds_sd = s.d().add(&dupont_scalar(&a.d()));
            assert_eq!(ds_sd, a.sub(&p), "[d,s] = 1 - p, n={n}");
            assert!(dupont_scalar(&s).is_zero(), "s^2, n={n}");
            assert!(whitney_project_scalar(&s).is_zero(), "ps, n={n}");
            assert!(dupont_scalar(&p).is_zero(), "sp, n={n}");
            assert_eq!(whitney_project_scalar(&p), p, "p^2, n={n}");
        }
    }
}

#[test]
fn whitney_integrals() {
    let w = elementary_form::<Q>(&[0, 1], 1, 4).unwrap();
    assert_eq!(
        w.integrate_over(&[0, 1]).unwrap(),
        Q::from_integer(1.into())
    );
    let _ = PolyForm::<Q>::zero(Arc::new(vec![1]), 1, 4, 0);
}

fn r(a: i64, b: i64) -> Q {
    Q::new(a.into(), b.into())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=n {
            let mut q = p.clone();
            q.insert(pos, n);
            out.push(q);
        }
    }
    out
}

#[test]
fn dupont_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=3 {
        let perms = permutations(n);
        assert_eq!(perms.len(), (1..=n + 1).product::<usize>());
        for _ in 0..10 {
            // degree 2 at cap 6 leaves room for s without truncation
            let a: ScalarForm<Q> = random::scalar_form(&mut rng, n, 6, 2);
            let s = dupont_scalar(&a);
            for sigma in &perms {
                let pa = a.pullback_vertices(sigma).unwrap();
                assert_eq!(
                    dupont_scalar(&pa),
                    s.pullback_vertices(sigma).unwrap(),
                    "n={n} {sigma:?}"
                );
            }
        }
    }
}

#[test]
fn gauge_operators_are_simplicial() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 1..=3 {
        for _ in 0..5 {
            let a: ScalarForm<Q> = random::scalar_form(&mut rng, n, 6, 2);
            let (s, p) = (dupont_scalar(&a), whitney_project_scalar(&a));
            for j in 0..=n {
                let face: Vec<usize> = (0..=n).filter(|&v| v != j).collect();
                let fa = a.pullback_vertices(&face).unwrap();
                assert_eq!(dupont_scalar(&fa), s.pullback_vertices(&face).unwrap());
                assert_eq!(
                    whitney_project_scalar(&fa),
                    p.pullback_vertices(&face).unwrap()
                );
                let degen: Vec<usize> = (0..=n + 1)
                    .map(|v| if v <= j { v } else { v - 1 })
                    .collect();
                let da = a.pullback_vertices(&degen).unwrap();
                assert_eq!(dupont_scalar(&da), s.pullback_vertices(&degen).unwrap());
                assert_eq!(
                    whitney_project_scalar(&da),
                    p.pullback_vertices(&degen).unwrap()
                );
            }
        }
    }
}

#[test]
fn elementary_forms() {
    let t0 = elementary_form::<Q>(&[0], 2, 8).unwrap();
    assert_eq!(t0, ScalarForm::barycentric(2, 8, 0));
    let w01 = elementary_form::<Q>(&[0, 1], 1, 8).unwrap();
    assert_eq!(w01, ScalarForm::dcoord(1, 8, 0));
    for n in 1..=3 {
        for k in 0..=n {
            for idx in subsets(n, k + 1) {
                let w = elementary_form::<Q>(&idx, n, 8).unwrap();
                for other in subsets(n, k + 1) {
                    let want = if other == idx {
                        Q::from_integer(1.into())
                    } else {
                        Q::from_integer(0.into())
                    };
                    assert_eq!(w.integrate_over(&other).unwrap(), want);
                }
                // dω_I = Σ_i ω_{iI}
                let mut sum = ScalarForm::zero(n, 8);
                for i in 0..=n {
                    if idx.contains(&i) {
                        continue;
                    }
                    let mut j: Vec<usize> = idx.clone();
                    j.push(i);
                    j.sort();
                    let pos = j.iter().position(|&v| v == i).unwrap();
                    let e = elementary_form::<Q>(&j, n, 8).unwrap();
                    sum.add_assign(&if pos % 2 == 0 { e } else { e.neg() });
                }
                assert_eq!(w.d(), sum, "{idx:?}");
            }
        }
    }
    assert!(elementary_form::<Q>(&[1, 0], 2, 8).is_err());
    assert!(elementary_form::<Q>(&[0, 3], 2, 8).is_err());
}

#[test]
fn gauge_examples_on_interval() {
    let t = ScalarForm::<Q>::coord(1, 8, 0);
    let dt = ScalarForm::<Q>::dcoord(1, 8, 0);
    assert!(dupont_scalar(&dt).is_zero());
    assert_eq!(
        dupont_scalar(&t.wedge(&dt).scale(&r(2, 1))),
        t.wedge(&t).sub(&t)
    );
    assert_eq!(whitney_project_scalar(&t.wedge(&t)), t);
    assert_eq!(whitney_project_scalar(&dt), dt);
}

#[test]
fn pi_fixes_closed_and_kills_gauge_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = Arc::new(vec![0usize, 1]);
    for n in 1..=3 {
        for _ in 0..5 {
            let beta: PolyForm<Q> = random::poly_form(&mut rng, &w, n, 8, -1, 3);
            let closed = beta.d();
            assert_eq!(gauge_project_pi(&closed), closed);
            let gamma: PolyForm<Q> = random::poly_form(&mut rng, &w, n, 8, 1, 2);
            let m = dupont_gauge(&gamma);
            assert!(gauge_project_pi(&m).is_zero());
            // D = h0(E): image of Whitney forms under h0
            let e = whitney_project(&gamma);
            let dpart = e.homotopy(0);
            assert!(gauge_project_pi(&dpart).is_zero(), "n={n}");
            // d is injective on im s
            if !m.is_zero() {
                assert!(!m.d().is_zero());
            }
        }
    }
}
