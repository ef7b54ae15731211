use dgint::config::Tolerances;
use dgint::fixtures::bundled;
use dgint::form::{PolyForm, ScalarForm};
use dgint::mc::{self, MCSolution};
use dgint::random;
use dgint::simplicial::{horn_fill_big, moore_fill};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn heis_b(a: f64, b: f64) -> PolyForm<f64> {
    let dg = bundled("heisenberg").unwrap();
    let mut f = PolyForm::zero(dg.wdeg(), 2, 8, 0);
    f.set_comp(0, ScalarForm::dcoord(2, 8, 0).scale(&a));
    f.set_comp(1, ScalarForm::dcoord(2, 8, 1).scale(&b));
    f
}

#[test]
fn heisenberg_closed_form_correction() {
    let dg = bundled("heisenberg").unwrap();
    let (a, b) = (0.3, -0.7);
    let sol = mc::kuranishi_inverse(&dg, &heis_b(a, b), &Tolerances::default()).unwrap();
    let x = ScalarForm::<f64>::coord(2, 8, 0);
    let y = ScalarForm::<f64>::coord(2, 8, 1);
    let corr = x
        .wedge(&ScalarForm::dcoord(2, 8, 1))
        .sub(&y.wedge(&ScalarForm::dcoord(2, 8, 0)))
        .scale(&(a * b / 2.0));
    let mut want = heis_b(a, b);
    want.set_comp(2, corr);
    assert!(sol.form.sub(&want).max_coeff() < 1e-15, "{:?}", sol.form);
    assert_eq!(sol.residual_norm, 0.0);
    assert!(sol.iterations <= 3);
}

#[test]
fn kuranishi_round_trip_random() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in [
        "so3",
        "heisenberg",
        "affine2",
        "string_su2",
        "poisson_const",
        "courant_std",
    ] {
        let dg = bundled(name).unwrap();
        for n in 2..=3 {
            for _ in 0..3 {
                let b = random::small_closed(&mut rng, &dg.wdeg(), n, 8, 0.02);
                let sol = mc::kuranishi_inverse(&dg, &b, &tol).unwrap();
                let back = mc::kuranishi(&dg, &sol.form).unwrap();
                assert!(back.sub(&b).max_coeff() < 1e-10, "{name} n={n}");
                assert!(
                    sol.residual_norm < 1e-10,
                    "{name} n={n} residual {}",
                    sol.residual_norm
                );
                let start = sol.form.add(&b.scale(&0.01));
                let again = mc::picard(&dg, &b, 0, &tol, start).unwrap();
                assert!(again.form.sub(&sol.form).max_coeff() < 1e-9);
            }
        }
    }
}

#[test]
fn horn_fill_heisenberg() {
    let dg = bundled("heisenberg").unwrap();
    let tol = Tolerances::default();
    let edge = |c: usize, v: f64| {
        let mut f = PolyForm::zero(dg.wdeg(), 1, 8, 0);
        f.set_comp(c, ScalarForm::dcoord(1, 8, 0).scale(&v));
        f
    };
    // Λ²₁: faces 0 (edge 12) and 2 (edge 01)
    let faces = vec![Some(edge(1, 0.2)), None, Some(edge(0, 0.1))];
    let fill = horn_fill_big(&dg, &faces, 1, &tol).unwrap();
    assert!(fill.face_error < 1e-10);
    assert!(fill.solution.residual_norm < 1e-10);
    let closed: Vec<_> = faces.clone();
    for k in 0..3 {
        let mut ys = closed.clone();
        ys[k] = None;
        if k != 1 {
            ys[1] = Some(fill.solution.form.face(1));
        }
        let w = moore_fill(&ys, k).unwrap();
        for j in 0..3 {
            if let Some(y) = &ys[j] {
                assert!(w.face(j).sub(y).max_coeff() < 1e-14);
            }
        }
    }
}

#[test]
fn propagation_heisenberg() {
    let dg = bundled("heisenberg").unwrap();
    let tol = Tolerances::default();
    let mut a0 = PolyForm::zero(dg.wdeg(), 2, 8, 0);
    a0.set_comp(0, ScalarForm::dcoord(2, 8, 0).scale(&0.3));
    let a0 = MCSolution::from_form(&dg, a0, 1e-12).unwrap();
    let wdeg = dg.wdeg();
    let h = move |_t: f64| {
        let mut f = PolyForm::zero(wdeg.clone(), 2, 8, -1);
        f.set_comp(1, ScalarForm::constant(2, 8, 0.5));
        f
    };
    let cyl = mc::propagate_homotopy(&dg, &a0, &h, 64, &tol).unwrap();
    let last = cyl.slices.last().unwrap();
    assert!(!last.comp(2).is_zero());
    for r in cyl.slice_residuals(&dg).unwrap() {
        assert!(r < 1e-8);
    }
}

fn so3_cylinder_residual(steps: usize) -> f64 {
    let dg = bundled("so3").unwrap();
    let tol = Tolerances {
        picard_tol: 1e-16,
        ..Tolerances::default()
    };
    let cap = 16;
    let mut b = PolyForm::zero(dg.wdeg(), 2, cap, 0);
    b.set_comp(0, ScalarForm::dcoord(2, cap, 0).scale(&0.4));
    b.set_comp(1, ScalarForm::dcoord(2, cap, 1).scale(&0.3));
    b.set_comp(2, ScalarForm::dcoord(2, cap, 0).scale(&-0.2));
    let a0 = mc::kuranishi_inverse(&dg, &b, &tol).unwrap();
    let wdeg = dg.wdeg();
    let h = move |t: f64| {
        let mut f = PolyForm::zero(wdeg.clone(), 2, cap, -1);
        f.set_comp(0, ScalarForm::constant(2, cap, 0.8 - 0.5 * t));
        f.set_comp(1, ScalarForm::constant(2, cap, 0.3 * t));
        f.set_comp(2, ScalarForm::constant(2, cap, 0.6));
        f
    };
    let cyl = mc::propagate_homotopy(&dg, &a0, &h, steps, &tol).unwrap();
    cyl.slice_residuals(&dg)
        .unwrap()
        .into_iter()
        .fold(0.0, f64::max)
}

#[test]
fn propagation_is_fourth_order() {
    let r: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&s| so3_cylinder_residual(s))
        .collect();
    let order = ((r[0] / r[2]).log2()) / 2.0;
    assert!(order >= 3.5, "{r:?}");
}

#[test]
fn random_horns_fill() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for name in ["so3", "string_su2", "poisson_quadratic", "courant_hflux"] {
        let dg = bundled(name).unwrap();
        for n in 1..=3 {
            for k in 0..=n {
                for _ in 0..3 {
                    let b = random::small_closed(&mut rng, &dg.wdeg(), n, 8, 0.005);
                    let a = mc::kuranishi_inverse(&dg, &b, &tol).unwrap();
                    let mut faces: Vec<Option<PolyForm<f64>>> =
                        (0..=n).map(|j| Some(a.form.face(j))).collect();
                    faces[k] = None;
                    let fill = horn_fill_big(&dg, &faces, k, &tol).unwrap();
                    assert!(
                        fill.face_error <= 1e-10,
                        "{name} Λ^{n}_{k}: {:e}",
                        fill.face_error
                    );
                    assert!(fill.solution.residual_norm <= 1e-10, "{name} Λ^{n}_{k}");
                    let closed: Vec<Option<PolyForm<f64>>> =
                        (0..=n).map(|j| (j != k).then(|| b.face(j))).collect();
                    let w = moore_fill(&closed, k).unwrap();
                    for (j, y) in closed.iter().enumerate() {
                        if let Some(y) = y {
                            assert!(w.face(j).sub(y).max_coeff() < 1e-15);
                        }
                    }
                }
            }
        }
    }
}
