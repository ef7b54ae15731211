//! Plain-text reports (`key = value` lines plus CSV blocks) and the seeded
//! self-test suite behind `dgint selftest`.

use std::fmt::{Display, Write as _};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fixtures::{bundled, bundled_with, BUNDLED};
use crate::form::{PolyForm, ScalarForm};
use crate::graded::{ChartedDgManifold, GradedPolynomial};
use crate::groupoid::{gauge_flow_retract, multiply, pushforward_ks, ChartMap, GroupoidElement};
use crate::lie::LieAlgebra;
use crate::mc;
use crate::random;
use crate::simplicial::{dupont_scalar, horn_fill_big, moore_fill, whitney_project_scalar};
use crate::symplectic::{delta_omega_s, grassmann_pairings, nondegeneracy_check, omega_s_matrix};

#[derive(Clone, Debug, PartialEq)]
enum Entry {
    Kv(String, String),
    Csv(String, String),
}

/// Ordered report; rendering is a pure function of the entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    entries: Vec<Entry>,
}

/// Fixed-width scientific notation so reports compare byte for byte.
pub fn num(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn join_nums(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kv(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push(Entry::Kv(key.into(), value.to_string()));
    }

    pub fn num(&mut self, key: impl Into<String>, v: f64) {
        self.kv(key, num(v));
    }

    /// Record a verdict and return it.
    pub fn check(&mut self, key: impl Into<String>, ok: bool) -> bool {
        self.kv(key, verdict(ok));
        ok
    }

    pub fn csv(&mut self, name: impl Into<String>, body: impl Into<String>) {
        self.entries.push(Entry::Csv(name.into(), body.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find_map(|e| match e {
            Entry::Kv(k, v) if k == key => Some(v.as_str()),
            _ => None,
        })
    }

    /// True when no value in the report is `FAIL`.
    pub fn all_pass(&self) -> bool {
        !self
            .entries
            .iter()
            .any(|e| matches!(e, Entry::Kv(_, v) if v == "FAIL"))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            match e {
                Entry::Kv(k, v) => {
                    let _ = writeln!(s, "{k} = {v}");
                }
                Entry::Csv(name, body) => {
                    let _ = writeln!(s, "[csv {name}]");
                    s.push_str(body);
                    if !body.ends_with('\n') {
                        s.push('\n');
                    }
                    let _ = writeln!(s, "[end {name}]");
                }
            }
        }
        s
    }
}

/// Machine-readable block for a failed command.
pub fn error_block(command: &str, e: &Error) -> String {
    let mut r = Report::new();
    r.kv("status", "error");
    r.kv("command", command);
    r.kv("error.kind", e.kind());
    r.kv("error.message", e.to_string().replace('\n', " "));
    r.render()
}

/// Uniform point in the middle half of the chart box.
pub fn sample_point<R: Rng>(dg: &ChartedDgManifold, rng: &mut R) -> Vec<f64> {
    dg.bounds()
        .shrunk(0.5)
        .bounds
        .iter()
        .map(|&(lo, hi)| rng.gen_range(lo..hi))
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

type Suite = fn(&mut Report, &mut ChaCha8Rng, &RunConfig) -> Result<bool>;

/// Run every invariant suite with randomness drawn from `seed`.
pub fn selftest(seed: u64, cfg: &RunConfig) -> Report {
    let mut r = Report::new();
    r.kv("command", "selftest");
    r.kv("seed", seed);
    r.kv("cap", cfg.cap);
    r.num("picard_tol", cfg.tol.picard_tol);
    r.num("mc_tol", cfg.tol.mc_tol);
    let suites: [(&str, Suite); 9] = [
        ("charts", suite_charts),
        ("gauge", suite_gauge),
        ("kuranishi", suite_kuranishi),
        ("horns", suite_horns),
        ("bch", suite_bch),
        ("propagation", suite_propagation),
        ("retraction", suite_retraction),
        ("functoriality", suite_functoriality),
        ("symplectic", suite_symplectic),
    ];
    let mut all = true;
    for (i, (name, f)) in suites.iter().enumerate() {
        // each suite gets its own stream so suites stay independent
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
        let ok = match f(&mut r, &mut rng, cfg) {
            Ok(ok) => ok,
            Err(e) => {
                r.kv(format!("{name}.error"), e.to_string());
                false
            }
        };
        all &= r.check(format!("{name}.result"), ok);
    }
    r.check("selftest", all);
    r
}

fn suite_charts(r: &mut Report, _: &mut ChaCha8Rng, _: &RunConfig) -> Result<bool> {
    let mut ok = true;
    for name in BUNDLED {
        let dg = bundled(name)?;
        let res = dg.q2_residual_norm();
        r.num(format!("charts.{name}.q2_residual"), res);
        ok &= res == 0.0;
    }
    let broken = bundled_with("broken_jacobi", true)?;
    let res = broken.q2_residual_norm();
    r.num("charts.broken_jacobi.q2_residual", res);
    ok &= res > 0.0 && bundled("broken_jacobi").is_err();
    Ok(ok)
}

fn suite_gauge(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    type Q = num_rational::BigRational;
    let mut ok = true;
    let mut count = 0;
    for n in 1..=3 {
        for _ in 0..4 {
            let a: ScalarForm<Q> = random::scalar_form(rng, n, cfg.cap, 3);
            let p = whitney_project_scalar(&a);
            let s = dupont_scalar(&a);
            ok &= s.d().add(&dupont_scalar(&a.d())) == a.sub(&p);
            ok &= dupont_scalar(&s).is_zero();
            ok &= whitney_project_scalar(&s).is_zero();
            ok &= dupont_scalar(&p).is_zero();
            count += 1;
        }
    }
    r.kv("gauge.forms", count);
    Ok(ok)
}

fn suite_kuranishi(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    let tol = &cfg.tol;
    let mut worst_back: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for name in BUNDLED {
        let dg = bundled(name)?;
        let b = random::small_closed(rng, &dg.wdeg(), 2, cfg.cap, 0.02);
        let sol = mc::kuranishi_inverse(&dg, &b, tol)?;
        worst_back = worst_back.max(mc::kuranishi(&dg, &sol.form)?.sub(&b).max_coeff());
        worst_res = worst_res.max(sol.residual_norm);
    }
    r.num("kuranishi.round_trip", worst_back);
    r.num("kuranishi.residual", worst_res);
    // Heisenberg: the correction is (ab/2)(x dy - y dx) in the central direction
    let dg = bundled("heisenberg")?;
    let (a, b) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let cap = cfg.cap;
    let mut bf = PolyForm::zero(dg.wdeg(), 2, cap, 0);
    bf.set_comp(0, ScalarForm::dcoord(2, cap, 0).scale(&a));
    bf.set_comp(1, ScalarForm::dcoord(2, cap, 1).scale(&b));
    let sol = mc::kuranishi_inverse(&dg, &bf, tol)?;
    let x = ScalarForm::<f64>::coord(2, cap, 0);
    let y = ScalarForm::<f64>::coord(2, cap, 1);
    let mut want = bf.clone();
    want.set_comp(
        2,
        x.wedge(&ScalarForm::dcoord(2, cap, 1))
            .sub(&y.wedge(&ScalarForm::dcoord(2, cap, 0)))
            .scale(&(a * b / 2.0)),
    );
    let heis = sol.form.sub(&want).max_coeff();
    r.num("kuranishi.heisenberg_closed_form", heis);
    Ok(worst_back <= 1e-10 && worst_res <= 1e-10 && heis <= 1e-15)
}

fn suite_horns(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    let tol = &cfg.tol;
    let mut face: f64 = 0.0;
    let mut res: f64 = 0.0;
    let mut moore: f64 = 0.0;
    for name in ["so3", "string_su2", "poisson_quadratic"] {
        let dg = bundled(name)?;
        for k in 0..=2 {
            let b = random::small_closed(rng, &dg.wdeg(), 2, cfg.cap, 0.01);
            let a = mc::kuranishi_inverse(&dg, &b, tol)?;
            let faces: Vec<Option<PolyForm<f64>>> =
                (0..=2).map(|j| (j != k).then(|| a.form.face(j))).collect();
            let fill = horn_fill_big(&dg, &faces, k, tol)?;
            face = face.max(fill.face_error);
            res = res.max(fill.solution.residual_norm);
            let ys: Vec<Option<PolyForm<f64>>> =
                (0..=2).map(|j| (j != k).then(|| b.face(j))).collect();
            let w = moore_fill(&ys, k)?;
            for (j, y) in ys.iter().enumerate() {
                if let Some(y) = y {
                    moore = moore.max(w.face(j).sub(y).max_coeff());
                }
            }
        }
    }
    r.num("horns.face_error", face);
    r.num("horns.residual", res);
    r.num("horns.moore_face_error", moore);
    Ok(face <= 1e-10 && res <= 1e-10 && moore <= 1e-14)
}

fn suite_bch(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    let tol = &cfg.tol;
    let cap = cfg.cap;
    let heis = bundled("heisenberg")?;
    let lie = LieAlgebra::from_chart(&heis)
        .ok_or_else(|| Error::InvalidChart("heisenberg is not a Lie chart".into()))?;
    let mut heis_err: f64 = 0.0;
    for _ in 0..4 {
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let ga = GroupoidElement::edge(&heis, &[], &a, cap, tol)?;
        let gb = GroupoidElement::edge(&heis, &[], &b, cap, tol)?;
        let p = multiply(&heis, &ga, &gb, cap, tol)?.edge_values();
        let br = lie.bracket(&a, &b);
        let want: Vec<f64> = (0..3).map(|i| a[i] + b[i] + 0.5 * br[i]).collect();
        heis_err = heis_err.max(max_diff(&p, &want));
    }
    r.num("bch.heisenberg", heis_err);
    let so3 = bundled("so3")?;
    let lie = LieAlgebra::from_chart(&so3)
        .ok_or_else(|| Error::InvalidChart("so3 is not a Lie chart".into()))?;
    let mut so3_err: f64 = 0.0;
    for _ in 0..2 {
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let ga = GroupoidElement::edge(&so3, &[], &a, cap, tol)?;
        let gb = GroupoidElement::edge(&so3, &[], &b, cap, tol)?;
        let p = multiply(&so3, &ga, &gb, cap, tol)?.edge_values();
        so3_err = so3_err.max(max_diff(&p, &lie.bch(&a, &b)));
    }
    r.num("bch.so3", so3_err);
    Ok(heis_err <= 1e-6 && so3_err <= 1e-3)
}

fn suite_propagation(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    let dg = bundled("so3")?;
    let cap = cfg.cap;
    let b = random::small_closed(rng, &dg.wdeg(), 2, cap, 0.05);
    let a0 = mc::kuranishi_inverse(&dg, &b, &cfg.tol)?;
    let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let wdeg = dg.wdeg();
    let h = move |t: f64| {
        let mut f = PolyForm::zero(wdeg.clone(), 2, cap, -1);
        for (i, ci) in c.iter().enumerate() {
            f.set_comp(i, ScalarForm::constant(2, cap, ci * (1.0 - 0.5 * t)));
        }
        f
    };
    let cyl = mc::propagate_homotopy(&dg, &a0, &h, cfg.rk4_steps.min(32), &cfg.tol)?;
    let worst = cyl.slice_residuals(&dg)?.into_iter().fold(0.0, f64::max);
    r.num("propagation.slice_residual", worst);
    Ok(worst <= 1e-8)
}

fn suite_retraction(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    let tol = &cfg.tol;
    let dg = bundled("heisenberg")?;
    let b = random::small_closed(rng, &dg.wdeg(), 2, cfg.cap, 0.05);
    let a = mc::kuranishi_inverse(&dg, &b, tol)?;
    let ret = gauge_flow_retract(&dg, &a.form, 20.0, 100, tol)?;
    let monotone = ret.defects.windows(2).all(|w| w[1] <= w[0]);
    let last = *ret.defects.last().unwrap_or(&f64::INFINITY);
    let again = gauge_flow_retract(&dg, &ret.element.form, 20.0, 100, tol)?;
    let idem = again.element.form.sub(&ret.element.form).max_coeff();
    r.kv("retraction.monotone", monotone);
    r.num("retraction.final_defect", last);
    r.num("retraction.idempotence", idem);
    Ok(monotone && last < 1e-8 && idem < 1e-8 && ret.element.accepted(tol))
}

fn suite_functoriality(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    let tol = &cfg.tol;
    let heis = Arc::new(bundled("heisenberg")?);
    let ab2 = Arc::new(bundled("abelian2")?);
    let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let ga = GroupoidElement::edge(&heis, &[], &a, cfg.cap, tol)?;
    let gb = GroupoidElement::edge(&heis, &[], &b, cfg.cap, tol)?;
    let id = ChartMap::identity(heis.clone());
    let same = pushforward_ks(&id, &ga, 20.0, 100, tol)?.form == ga.form;
    let cs = heis.coords();
    let quot = ChartMap::new(
        heis.clone(),
        ab2.clone(),
        vec![
            GradedPolynomial::coord(cs, 0),
            GradedPolynomial::coord(cs, 1),
        ],
    )?;
    let prod = multiply(&heis, &ga, &gb, cfg.cap, tol)?;
    let lhs = pushforward_ks(&quot, &prod, 20.0, 100, tol)?.edge_values();
    let want = [a[0] + b[0], a[1] + b[1]];
    let q = max_diff(&lhs, &want);
    r.kv("functoriality.identity_exact", same);
    r.num("functoriality.quotient", q);
    Ok(same && q <= 1e-8)
}

fn suite_symplectic(r: &mut Report, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<bool> {
    let tol = &cfg.tol;
    let mut ok = true;
    for n in 1..=3 {
        let t = grassmann_pairings(n);
        let m = t.mismatches().len();
        r.kv(format!("symplectic.grassmann.n{n}.mismatches"), m);
        ok &= m == 0 && t.kernel_law();
    }
    for name in [
        "poisson_const",
        "poisson_quadratic",
        "courant_std",
        "courant_hflux",
    ] {
        let dg = bundled(name)?;
        let k = dg.omega().map(|o| o.k).unwrap_or(0);
        let x = sample_point(&dg, rng);
        let nd = nondegeneracy_check(&dg, &x, k)?;
        r.kv(format!("symplectic.{name}.closed_dim"), nd.closed_dim);
        r.kv(format!("symplectic.{name}.rank"), nd.rank);
        ok &= nd.nondegenerate() && nd.kernel_law;
    }
    let dg = bundled("poisson_const")?;
    let x = sample_point(&dg, rng);
    let g = GroupoidElement::constant(&dg, &x, 1, cfg.cap, tol)?;
    let om = omega_s_matrix(&dg, &g, tol)?;
    r.kv(
        "symplectic.poisson_const.omega_s_rank",
        format!("{}/{}", om.rank, om.tangent_dim),
    );
    ok &= om.rank == om.tangent_dim;
    let b = random::small_closed(rng, &dg.wdeg(), 2, cfg.cap, 0.02);
    let a = mc::kuranishi_inverse(&dg, &b, tol)?;
    let g = gauge_flow_retract(&dg, &a.form, 20.0, 100, tol)?.element;
    let d = delta_omega_s(&dg, &g, tol)?;
    r.num("symplectic.poisson_const.delta_omega_s", d);
    Ok(ok && d <= 1e-6)
}
