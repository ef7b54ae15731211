use dgint::chart_format::parse_dg_spec;
use dgint::config::Tolerances;
use dgint::error::Error;
use dgint::fixtures::bundled;
use dgint::form::{PolyForm, ScalarForm};
use dgint::graded::ChartedDgManifold;
use dgint::groupoid::{gauge_flow_retract, reconstruct, GroupoidElement};
use dgint::mc;
use dgint::random;
use dgint::simplicial::WhitneyCochain;
use dgint::symplectic::*;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: usize = 8;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

const T_STAR_LINE: &str = "[coords]\nx 0\np 1\n[box]\nx -1 1\n[Q]\n[omega]\nx p 1\n";

fn t_star_plane() -> ChartedDgManifold {
    let text = "[coords]\nx1 0\nx2 0\np1 1\np2 1\n[box]\nx1 -1 1\nx2 -1 1\n[Q]\n[omega]\nx1 p1 1\nx2 p2 1\n";
    parse_dg_spec(text, "tstar_plane", false).unwrap()
}

#[test]
fn pairing_on_cotangent_line() {
    let dg = parse_dg_spec(T_STAR_LINE, "tstar_line", false).unwrap();
    let w = dg.wdeg();
    let a = PolyForm::zero(w.clone(), 1, 4, 0);
    let u = PolyForm::from_comps(
        w.clone(),
        0,
        vec![ScalarForm::constant(1, 4, 1.0), ScalarForm::zero(1, 4)],
    );
    let v = PolyForm::from_comps(
        w.clone(),
        0,
        vec![ScalarForm::zero(1, 4), ScalarForm::dcoord(1, 4, 0)],
    );
    assert!((omega_pair(&dg, &a, &u, &v).unwrap() - 1.0).abs() < 1e-15);
    assert!((omega_pair(&dg, &a, &v, &u).unwrap() + 1.0).abs() < 1e-15);
    // f(t) = t, g = 3t^2: ∫ 3t^3 dt = 3/4
    let u2 = PolyForm::from_comps(
        w.clone(),
        0,
        vec![ScalarForm::coord(1, 4, 0), ScalarForm::zero(1, 4)],
    );
    let g = ScalarForm::monomial(1, 4, 1, &[2], 3.0);
    let v2 = PolyForm::from_comps(w.clone(), 0, vec![ScalarForm::zero(1, 4), g]);
    assert!((omega_pair(&dg, &a, &u2, &v2).unwrap() - 0.75).abs() < 1e-15);
    let a2 = PolyForm::zero(w, 2, 4, 0);
    assert!(matches!(
        omega_pair(&dg, &a2, &u.degeneracy(0), &v.degeneracy(0)),
        Err(Error::Degree(_))
    ));
}

#[test]
fn grassmann_unit_interval() {
    let s = GrassmannElement::generator(1, 0);
    let t = GrassmannElement::monomial(1, 0b11);
    assert_eq!(s.integral_pairing(&t), half());
    assert_eq!(closed_formula(1, 0b01, 0b11), half());
    assert!(GrassmannElement::one(1).integral_pairing(&t).is_zero());
}

#[test]
fn grassmann_homotopy_identity() {
    for n in 1..=4 {
        let c = BigRational::from_integer((n as i64 + 1).into());
        for m in 0..(1usize << (n + 1)) {
            let e = GrassmannElement::monomial(n, m);
            let lhs = e.partial().d().add(&e.d().partial());
            assert_eq!(lhs, e.scale(&c), "n = {n}, mask = {m:b}");
            assert!(e.d().d().is_zero() && e.partial().partial().is_zero());
        }
    }
}

#[test]
fn grassmann_closed_formula_and_kernel_law() {
    for n in 1..=4 {
        let t = grassmann_pairings(n);
        assert!(
            t.mismatches().is_empty(),
            "n = {n}: {:?}",
            &t.mismatches()[..t.mismatches().len().min(5)]
        );
        assert!(t.kernel_law(), "n = {n}");
        let size = 1usize << (n + 1);
        for a in 0..size {
            for b in 0..size {
                let deg = a.count_ones() + b.count_ones();
                if deg as usize != n + 2 {
                    assert!(t.integral[a][b].is_zero());
                }
            }
        }
        // ⟨,⟩ is nondegenerate
        assert_eq!(dgint::linalg::rank(&t.top), size);
    }
}

fn random_on(
    dg: &ChartedDgManifold,
    rng: &mut ChaCha8Rng,
    n: usize,
    degree: i32,
    amp: f64,
) -> PolyForm<f64> {
    let f: PolyForm<f64> = random::poly_form(rng, &dg.wdeg(), n, CAP, degree, 2);
    f.scale(&amp)
}

#[test]
fn stokes_identity_for_arbitrary_base() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in [
        "poisson_const",
        "poisson_quadratic",
        "courant_std",
        "courant_hflux",
    ] {
        let dg = bundled(name).unwrap();
        let k = dg.omega().unwrap().k;
        let a = random_on(&dg, &mut rng, k + 1, 0, 0.05);
        let u = random_on(&dg, &mut rng, k + 1, 0, 1.0);
        let v = random_on(&dg, &mut rng, k + 1, 0, 1.0);
        let lhs = delta_omega(&dg, &a, &u, &v).unwrap();
        let rhs = stokes_rhs(&dg, &a, &u, &v).unwrap();
        assert!(
            (lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()),
            "{name}: {lhs} vs {rhs}"
        );
        assert!(lhs.abs() > 1e-3, "{name}: vacuous check");
    }
}

#[test]
fn delta_omega_big_vanishes_on_closed_tangents() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in [
        "poisson_const",
        "poisson_quadratic",
        "courant_std",
        "courant_hflux",
    ] {
        let dg = bundled(name).unwrap();
        let n = dg.omega().unwrap().k + 1;
        let b = random::small_closed(&mut rng, &dg.wdeg(), n, CAP, 0.02);
        let a = mc::kuranishi_inverse(&dg, &b, &tol()).unwrap();
        let w = dg.wdeg();
        let tangent = |rng: &mut ChaCha8Rng| {
            let beta = random::small_closed(rng, &w, n, CAP, 1.0);
            mc::linearized_inverse(&dg, &a.form, &beta, 0, &tol()).unwrap()
        };
        let u = tangent(&mut rng);
        let v = tangent(&mut rng);
        assert!(mc::d_tot(&dg, &a.form, &u).max_coeff() < 1e-9);
        let d = delta_omega(&dg, &a.form, &u, &v).unwrap();
        assert!(d.abs() < 1e-10, "{name}: {d:e}");
        let off = random_on(&dg, &mut rng, n, 0, 1.0);
        assert!(delta_omega(&dg, &a.form, &u, &off).unwrap().abs() > 1e-3);
    }
}

fn sample_point(dg: &ChartedDgManifold, rng: &mut ChaCha8Rng) -> Vec<f64> {
    dg.bounds()
        .shrunk(0.5)
        .bounds
        .iter()
        .map(|&(lo, hi)| rng.gen_range(lo..hi))
        .collect()
}

#[test]
fn omega_s_full_rank_at_basepoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for name in [
        "poisson_const",
        "poisson_quadratic",
        "courant_std",
        "courant_hflux",
    ] {
        let dg = bundled(name).unwrap();
        let k = dg.omega().unwrap().k;
        let x = sample_point(&dg, &mut rng);
        let g = GroupoidElement::constant(&dg, &x, k, CAP, &tol()).unwrap();
        let om = omega_s_matrix(&dg, &g, &tol()).unwrap();
        let nd = nondegeneracy_check(&dg, &x, k).unwrap();
        assert!(om.antisymmetry < 1e-10, "{name}");
        assert_eq!(om.tangent_dim, nd.closed_dim, "{name}");
        assert_eq!(om.rank, om.tangent_dim, "{name}");
        assert!(nd.nondegenerate() && nd.kernel_law, "{name}");
    }
}

#[test]
fn canonical_block_for_flat_cotangent() {
    let dg = t_star_plane();
    let g = GroupoidElement::constant(&dg, &[0.0, 0.0], 1, CAP, &tol()).unwrap();
    let om = omega_s_matrix(&dg, &g, &tol()).unwrap();
    assert_eq!((om.tangent_dim, om.rank), (4, 4));
    // eigenvalues of an antisymmetric nondegenerate 4x4 block come in ±i pairs
    let sv = om.matrix.clone().svd(false, false).singular_values;
    assert!(sv.iter().all(|&s| s > 0.1));
    let nd = nondegeneracy_check(&dg, &[0.0, 0.0], 1).unwrap();
    assert_eq!((nd.closed_dim, nd.rank), (4, 4));
}

#[test]
fn exact_tangents_match_finite_differences() {
    let dg = bundled("poisson_quadratic").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let b = random::small_closed(&mut rng, &dg.wdeg(), 1, CAP, 0.05);
    let a = mc::kuranishi_inverse(&dg, &b, &tol()).unwrap();
    let g = gauge_flow_retract(&dg, &a.form, 20.0, 100, &tol())
        .unwrap()
        .element;
    let layout = g.cochain.layout();
    let h = 1e-5;
    for col in 0..layout.len() {
        let mut e = WhitneyCochain::zero(1, dg.wdeg(), 0);
        let mut x = vec![0.0; layout.len()];
        x[col] = 1.0;
        e.set_flat(&x);
        let u = gauged_tangent(&dg, &g.form, &e.realize(CAP), &tol()).unwrap();
        let shift = |s: f64| {
            let mut c = g.cochain.clone();
            let y: Vec<f64> = c.flat().iter().zip(&x).map(|(v, d)| v + s * d).collect();
            c.set_flat(&y);
            reconstruct(&dg, &c, CAP, &tol()).unwrap().form
        };
        let fd = shift(h).sub(&shift(-h)).scale(&(0.5 / h));
        assert!(fd.sub(&u).max_coeff() < 1e-6, "column {col}");
    }
}

#[test]
fn delta_omega_s_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for name in ["poisson_const", "poisson_quadratic", "courant_std"] {
        let dg = bundled(name).unwrap();
        let n = dg.omega().unwrap().k + 1;
        let b = random::small_closed(&mut rng, &dg.wdeg(), n, CAP, 0.02);
        let a = mc::kuranishi_inverse(&dg, &b, &tol()).unwrap();
        let g = gauge_flow_retract(&dg, &a.form, 20.0, 100, &tol())
            .unwrap()
            .element;
        assert!(g.accepted(&tol()), "{name}");
        let d = delta_omega_s(&dg, &g, &tol()).unwrap();
        assert!(d < 1e-8, "{name}: {d:e}");
    }
}

#[test]
fn nondegeneracy_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for name in [
        "poisson_const",
        "poisson_quadratic",
        "courant_std",
        "courant_hflux",
    ] {
        let dg = bundled(name).unwrap();
        let k = dg.omega().unwrap().k;
        for _ in 0..10 {
            let x = sample_point(&dg, &mut rng);
            let r = nondegeneracy_check(&dg, &x, k).unwrap();
            assert!(r.nondegenerate() && r.kernel_law, "{name} at {x:?}: {r:?}");
        }
    }
}

#[test]
fn degenerate_omega_is_flagged() {
    let text = "[coords]\nx 0\ny 0\np 1\n[box]\nx -1 1\ny -1 1\n[Q]\n[omega]\nx p 1\n";
    let dg = parse_dg_spec(text, "half", false).unwrap();
    assert!(matches!(
        nondegeneracy_check(&dg, &[0.0, 0.0], 1),
        Err(Error::Degenerate(_))
    ));
    let abelian = t_star_plane();
    assert!(matches!(
        nondegeneracy_check(&abelian, &[0.0, 0.0], 2),
        Err(Error::Degree(_))
    ));
}

/// dim of `(Ẽ_k ⊗ W)^q`: pairs (subset I of {0..k}, coordinate i) with |I| - |ξ^i| = q.
fn graded_dim(k: usize, wdeg: &[usize], q: i64) -> usize {
    let binom = |n: usize, r: i64| -> usize {
        if r < 0 || r as usize > n {
            return 0;
        }
        (0..r as usize).fold(1, |acc, j| acc * (n - j) / (j + 1))
    };
    wdeg.iter().map(|&w| binom(k + 1, q + w as i64)).sum()
}

#[test]
fn closed_dimension_from_acyclicity() {
    // d_tot is acyclic, so dim Z^1 = Σ_{q≤0} (-1)^q dim C^q
    for name in ["poisson_const", "courant_std", "courant_hflux"] {
        let dg = bundled(name).unwrap();
        let k = dg.omega().unwrap().k;
        let w = dg.wdeg();
        let mut z: i64 = 0;
        for q in -(w.iter().max().copied().unwrap() as i64)..=0 {
            let sign = if q % 2 == 0 { 1 } else { -1 };
            z += sign * graded_dim(k, &w, q) as i64;
        }
        let x = vec![0.2; dg.coords().zero_coords().len()];
        let r = nondegeneracy_check(&dg, &x, k).unwrap();
        assert_eq!(r.space_dim, graded_dim(k, &w, 1));
        assert_eq!(r.closed_dim as i64, z, "{name}");
    }
}
