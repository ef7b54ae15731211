//! The finite-dimensional groupoid of gauge-fixed Maurer–Cartan forms:
//! elements are parametrized by Whitney cochains, composition is horn
//! filling by Newton's method on the cochain curvature.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::form::PolyForm;
use crate::graded::{ChartedDgManifold, GradedPolynomial};
use crate::mc::{self, axpy, check_range, evaluate_fq_unchecked, evaluate_poly};
use crate::simplicial::{dupont_gauge, moore_fill, WhitneyCochain, HORN_EXACT_TOL};

/// Forward-difference step for Newton Jacobians.
pub const FD_STEP: f64 = 1e-6;
/// Jacobians with a larger condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e10;
const MAX_NEWTON: usize = 40;

/// A gauge-fixed MC form together with its Whitney coordinates.
#[derive(Clone, Debug)]
pub struct GroupoidElement {
    pub n: usize,
    pub cochain: WhitneyCochain,
    pub form: PolyForm<f64>,
    pub mc_residual_norm: f64,
    /// `norm(s A)`
    pub gauge_defect_norm: f64,
    /// Largest entry of the cochain curvature.
    pub curvature_norm: f64,
}

impl GroupoidElement {
    fn finish(
        dg: &ChartedDgManifold,
        cochain: WhitneyCochain,
        form: PolyForm<f64>,
    ) -> Result<Self> {
        let (_, r) = mc::mc_residual(dg, &form)?;
        let curvature = curvature_of(dg, &cochain, &form);
        Ok(GroupoidElement {
            n: cochain.n,
            gauge_defect_norm: dupont_gauge(&form).norm().value,
            curvature_norm: curvature.max_abs(),
            mc_residual_norm: r.value,
            cochain,
            form,
        })
    }

    pub fn accepted(&self, tol: &Tolerances) -> bool {
        self.mc_residual_norm <= 10.0 * tol.mc_tol && self.gauge_defect_norm <= tol.mc_tol
    }

    /// The degenerate element sitting at the point `x` of `U`.
    pub fn constant(
        dg: &ChartedDgManifold,
        x: &[f64],
        n: usize,
        cap: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        let zc = dg.coords().zero_coords();
        if x.len() != zc.len() {
            return Err(Error::Dimension(format!(
                "{} base values for {} degree-0 coordinates",
                x.len(),
                zc.len()
            )));
        }
        let mut c = WhitneyCochain::zero(n, dg.wdeg(), 0);
        for (p, &i) in zc.iter().enumerate() {
            for v in 0..=n {
                c.set(i, &[v], x[p]);
            }
        }
        reconstruct(dg, &c, cap, tol)
    }

    /// A 1-simplex starting at `x0` with edge values `a` on the degree-1
    /// coordinates; the end point is solved for.
    pub fn edge(
        dg: &ChartedDgManifold,
        x0: &[f64],
        a: &[f64],
        cap: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        let cs = dg.coords();
        let ones: Vec<usize> = (0..cs.len()).filter(|&i| cs.degree(i) == 1).collect();
        if a.len() != ones.len() {
            return Err(Error::Dimension(format!(
                "{} edge values for {} degree-1 coordinates",
                a.len(),
                ones.len()
            )));
        }
        let mut c = GroupoidElement::constant(dg, x0, 1, cap, tol)?.cochain;
        for (p, &i) in ones.iter().enumerate() {
            c.set(i, &[0, 1], a[p]);
        }
        let zc = cs.zero_coords().to_vec();
        let unknowns: Vec<(usize, Vec<usize>)> = zc.iter().map(|&i| (i, vec![1])).collect();
        let equations: Vec<(usize, Vec<usize>)> = zc.iter().map(|&i| (i, vec![0, 1])).collect();
        let (c, _) = newton_cells(dg, &c, &unknowns, &equations, cap, tol, false)?;
        reconstruct(dg, &c, cap, tol)
    }

    /// Values on the edge of a 1-simplex, one per degree-1 coordinate.
    pub fn edge_values(&self) -> Vec<f64> {
        let cs = &self.cochain.wdeg;
        (0..cs.len())
            .filter(|&i| cs[i] == 1)
            .map(|i| self.cochain.get(i, &[0, 1]))
            .collect()
    }

    /// Restriction to the face opposite vertex `p`.
    pub fn face(&self, dg: &ChartedDgManifold, p: usize) -> Result<Self> {
        GroupoidElement::finish(dg, self.cochain.face(p), self.form.face(p))
    }
}

fn picard_gauged(
    dg: &ChartedDgManifold,
    base: &PolyForm<f64>,
    tol: &Tolerances,
) -> Result<PolyForm<f64>> {
    let mut a = base.clone();
    let mut extra = 0;
    let mut last = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=tol.max_iter {
        if check_range(dg, &a, tol.box_shrink).is_err() {
            return Err(Error::Divergence {
                iter: it,
                reason: "gauge-fixed iterate left the shrunk chart box".into(),
            });
        }
        let next = base.add(&dupont_gauge(&evaluate_fq_unchecked(dg, &a)));
        let delta = next.sub(&a).max_coeff();
        if !delta.is_finite() {
            return Err(Error::Divergence {
                iter: it,
                reason: "non-finite coefficients".into(),
            });
        }
        a = next;
        if delta == 0.0 {
            return Ok(a);
        }
        if delta <= tol.picard_tol {
            // a few more sweeps push the error well below the stopping threshold
            extra += 1;
            if extra > 3 || delta >= last {
                return Ok(a);
            }
        } else if delta > last {
            growth += 1;
            if growth >= 5 {
                return Err(Error::Divergence {
                    iter: it,
                    reason: format!("coefficient change grew to {delta:e}"),
                });
            }
        }
        last = delta;
    }
    Err(Error::Divergence {
        iter: tol.max_iter,
        reason: format!("no convergence, last change {last:e}"),
    })
}

/// Form `A` with `A = c + s F_Q(A)`.
pub fn reconstruct_form(
    dg: &ChartedDgManifold,
    c: &WhitneyCochain,
    cap: usize,
    tol: &Tolerances,
) -> Result<PolyForm<f64>> {
    if c.degree != 0 {
        return Err(Error::Degree(format!(
            "cochain of total degree {}",
            c.degree
        )));
    }
    picard_gauged(dg, &c.realize(cap), tol)
}

/// Solve `A = c + s F_Q(A)` and attach diagnostics.
pub fn reconstruct(
    dg: &ChartedDgManifold,
    c: &WhitneyCochain,
    cap: usize,
    tol: &Tolerances,
) -> Result<GroupoidElement> {
    let a = reconstruct_form(dg, c, cap, tol)?;
    GroupoidElement::finish(dg, c.clone(), a)
}

fn curvature_of(dg: &ChartedDgManifold, c: &WhitneyCochain, a: &PolyForm<f64>) -> WhitneyCochain {
    let cap = mc::exact_cap(dg, a.poly_degree().max(1)).max(a.cap());
    let mut f = evaluate_fq_unchecked(dg, &a.rebase(cap));
    f.clear_truncation();
    c.coboundary().sub(&WhitneyCochain::from_form(&f))
}

/// `R(c) = δc - ∫ F_Q(A(c))`, a cochain of total degree 1.
pub fn curvature(
    dg: &ChartedDgManifold,
    c: &WhitneyCochain,
    cap: usize,
    tol: &Tolerances,
) -> Result<WhitneyCochain> {
    let a = reconstruct_form(dg, c, cap, tol)?;
    Ok(curvature_of(dg, c, &a))
}

fn residual_vector(
    dg: &ChartedDgManifold,
    base: &WhitneyCochain,
    unknowns: &[(usize, Vec<usize>)],
    equations: &[(usize, Vec<usize>)],
    z: &[f64],
    cap: usize,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let mut c = base.clone();
    for ((i, cell), &v) in unknowns.iter().zip(z) {
        c.set(*i, cell, v);
    }
    let r = curvature(dg, &c, cap, tol)?;
    Ok(DVector::from_iterator(
        equations.len(),
        equations.iter().map(|(i, cell)| r.get(*i, cell)),
    ))
}

/// Newton statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    pub condition: f64,
}

/// Gauss–Newton on selected curvature entries over selected cochain
/// entries, with minimum-norm steps when the system is underdetermined.
///
/// With `redundant` the equations may be linearly dependent: singular
/// values below `1e-10 σ_max` are dropped instead of failing.
pub fn newton_cells(
    dg: &ChartedDgManifold,
    start: &WhitneyCochain,
    unknowns: &[(usize, Vec<usize>)],
    equations: &[(usize, Vec<usize>)],
    cap: usize,
    tol: &Tolerances,
    redundant: bool,
) -> Result<(WhitneyCochain, NewtonReport)> {
    let mut z: Vec<f64> = unknowns
        .iter()
        .map(|(i, cell)| start.get(*i, cell))
        .collect();
    let eval = |z: &[f64]| residual_vector(dg, start, unknowns, equations, z, cap, tol);
    let mut r = eval(&z)?;
    let mut norm = r.amax();
    let mut condition: f64 = 1.0;
    let mut it = 0;
    while norm > tol.newton_tol && !unknowns.is_empty() && !equations.is_empty() && it < MAX_NEWTON
    {
        it += 1;
        let cols: Vec<DVector<f64>> = (0..z.len())
            .into_par_iter()
            .map(|j| {
                let mut zj = z.clone();
                zj[j] += FD_STEP;
                eval(&zj).map(|rj| (rj - &r) / FD_STEP)
            })
            .collect::<Result<_>>()?;
        let jac = DMatrix::from_columns(&cols);
        let svd = jac.clone().svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let cutoff = if redundant { smax * 1e-10 } else { 0.0 };
        let smin = sv
            .iter()
            .copied()
            .filter(|&s| s > cutoff)
            .fold(f64::INFINITY, f64::min);
        condition = if smin > 0.0 && smin.is_finite() {
            smax / smin
        } else {
            f64::INFINITY
        };
        if condition > MAX_CONDITION {
            return Err(Error::SingularJacobian(condition));
        }
        let step = svd
            .solve(&r, cutoff.max(smax * 1e-14))
            .map_err(|e| Error::NewtonFailed(e.to_string()))?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..6 {
            let trial: Vec<f64> = z
                .iter()
                .zip(step.iter())
                .map(|(a, b)| a - lambda * b)
                .collect();
            if let Ok(rt) = eval(&trial) {
                if rt.amax() < norm {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            lambda /= 2.0;
        }
        let Some((zn, rn)) = accepted else {
            break;
        };
        let improvement = rn.amax() / norm;
        z = zn;
        r = rn;
        norm = r.amax();
        if norm <= tol.mc_tol && improvement > 0.5 {
            break;
        }
    }
    if norm > tol.mc_tol {
        return Err(Error::NewtonFailed(format!(
            "curvature residual {norm:e} after {it} iterations"
        )));
    }
    let mut c = start.clone();
    for ((i, cell), &v) in unknowns.iter().zip(&z) {
        c.set(*i, cell, v);
    }
    Ok((
        c,
        NewtonReport {
            iterations: it,
            residual: norm,
            condition,
        },
    ))
}

/// Cochain on Δⁿ assembled from the horn faces; cells not covered are 0.
pub fn assemble_horn(faces: &[Option<GroupoidElement>], k: usize) -> Result<WhitneyCochain> {
    let n = faces.len() - 1;
    if n < 1 || k > n || faces[k].is_some() {
        return Err(Error::IncompatibleHorn(format!(
            "horn index {k} for {n}-simplex"
        )));
    }
    let wdeg = faces
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| Error::IncompatibleHorn("empty horn".into()))?
        .cochain
        .wdeg
        .clone();
    let mut c = WhitneyCochain::zero(n, wdeg.clone(), 0);
    let mut seen = c.clone();
    for (j, f) in faces.iter().enumerate() {
        let Some(f) = f else {
            if j != k {
                return Err(Error::IncompatibleHorn(format!("face {j} missing")));
            }
            continue;
        };
        if f.n + 1 != n {
            return Err(Error::IncompatibleHorn(format!(
                "face {j} has wrong dimension"
            )));
        }
        let verts: Vec<usize> = (0..=n).filter(|&v| v != j).collect();
        for (i, cell) in f.cochain.layout() {
            let image: Vec<usize> = cell.iter().map(|&v| verts[v]).collect();
            let v = f.cochain.get(i, &cell);
            if seen.get(i, &image) != 0.0 {
                let old = c.get(i, &image);
                if (old - v).abs() > HORN_EXACT_TOL * (1.0 + old.abs()) {
                    return Err(Error::IncompatibleHorn(format!(
                        "faces disagree on cell {image:?} of coordinate {i}"
                    )));
                }
            }
            c.set(i, &image, v);
            seen.set(i, &image, 1.0);
        }
    }
    Ok(c)
}

/// Cells of the horn filler that no horn face determines, and the curvature
/// entries that are not implied by the faces.
pub fn horn_cells(
    wdeg: &[usize],
    n: usize,
    k: usize,
) -> (Vec<(usize, Vec<usize>)>, Vec<(usize, Vec<usize>)>) {
    let full: Vec<usize> = (0..=n).collect();
    let missing: Vec<usize> = (0..=n).filter(|&v| v != k).collect();
    let mut unknowns = Vec::new();
    let mut equations = Vec::new();
    for (i, &w) in wdeg.iter().enumerate() {
        if w == n {
            unknowns.push((i, full.clone()));
        }
        if w + 1 == n {
            unknowns.push((i, missing.clone()));
            equations.push((i, full.clone()));
        }
        if w + 2 == n {
            equations.push((i, missing.clone()));
        }
    }
    (unknowns, equations)
}

/// A horn fill in the gauge-fixed groupoid.
#[derive(Clone, Debug)]
pub struct KsFill {
    pub element: GroupoidElement,
    pub newton: NewtonReport,
}

/// Fill a horn of gauge-fixed elements; `offset` perturbs the Newton start.
pub fn horn_fill_ks_from(
    dg: &ChartedDgManifold,
    faces: &[Option<GroupoidElement>],
    k: usize,
    cap: usize,
    tol: &Tolerances,
    offset: Option<&[f64]>,
) -> Result<KsFill> {
    let n = faces.len() - 1;
    let mut c = assemble_horn(faces, k)?;
    // linear filler of the Whitney realizations as the Newton start
    let realized: Vec<Option<PolyForm<f64>>> = faces
        .iter()
        .map(|f| f.as_ref().map(|g| g.cochain.realize(cap)))
        .collect();
    let w = WhitneyCochain::from_form(&moore_fill(&realized, k)?);
    let (unknowns, equations) = horn_cells(&c.wdeg, n, k);
    for (p, (i, cell)) in unknowns.iter().enumerate() {
        let shift = offset.map_or(0.0, |o| o[p]);
        c.set(*i, cell, w.get(*i, cell) + shift);
    }
    let (c, newton) = newton_cells(dg, &c, &unknowns, &equations, cap, tol, false)?;
    let element = reconstruct(dg, &c, cap, tol)?;
    if element.mc_residual_norm > 10.0 * tol.mc_tol {
        return Err(Error::NewtonFailed(format!(
            "filler has MC residual {:e} although its curvature vanishes",
            element.mc_residual_norm
        )));
    }
    Ok(KsFill { element, newton })
}

pub fn horn_fill_ks(
    dg: &ChartedDgManifold,
    faces: &[Option<GroupoidElement>],
    k: usize,
    cap: usize,
    tol: &Tolerances,
) -> Result<KsFill> {
    horn_fill_ks_from(dg, faces, k, cap, tol, None)
}

fn check_edges(xs: &[&GroupoidElement]) -> Result<()> {
    if xs.iter().any(|g| g.n != 1) {
        return Err(Error::Dimension(
            "groupoid operations take 1-simplices".into(),
        ));
    }
    Ok(())
}

/// Product `a·b` as composition of arrows: `b` on the edge 01, `a` on the
/// edge 12; the Λ²₁ filler's edge 02 is the product.
pub fn multiply(
    dg: &ChartedDgManifold,
    a: &GroupoidElement,
    b: &GroupoidElement,
    cap: usize,
    tol: &Tolerances,
) -> Result<GroupoidElement> {
    check_edges(&[a, b])?;
    let fill = horn_fill_ks(dg, &[Some(a.clone()), None, Some(b.clone())], 1, cap, tol)?;
    fill.element.face(dg, 1)
}

/// `x` with `a·x = c` (Λ²₂ fill).
pub fn divide_left(
    dg: &ChartedDgManifold,
    a: &GroupoidElement,
    c: &GroupoidElement,
    cap: usize,
    tol: &Tolerances,
) -> Result<GroupoidElement> {
    check_edges(&[a, c])?;
    let fill = horn_fill_ks(dg, &[Some(a.clone()), Some(c.clone()), None], 2, cap, tol)?;
    fill.element.face(dg, 2)
}

/// `x` with `x·b = c` (Λ²₀ fill).
pub fn divide_right(
    dg: &ChartedDgManifold,
    c: &GroupoidElement,
    b: &GroupoidElement,
    cap: usize,
    tol: &Tolerances,
) -> Result<GroupoidElement> {
    check_edges(&[b, c])?;
    let fill = horn_fill_ks(dg, &[None, Some(c.clone()), Some(b.clone())], 0, cap, tol)?;
    fill.element.face(dg, 0)
}

/// Trace of a gauge-flow retraction.
#[derive(Clone, Debug)]
pub struct Retraction {
    pub element: GroupoidElement,
    /// `norm(s A)` at each flow time, starting at 0.
    pub defects: Vec<f64>,
    pub times: Vec<f64>,
    /// Newton correction applied after the flow.
    pub polish: Option<NewtonReport>,
}

/// Defect below which a form counts as already gauge fixed.
pub const GAUGE_FIXED_TOL: f64 = 1e-12;

/// Below this defect a rise is treated as the cap-D noise floor and ends the flow.
pub const GAUGE_PLATEAU: f64 = 1e-9;

/// Flow `dA/dτ = d_tot(-s A)` up to `tau_max`, then snap to the nearest
/// zero of the cochain curvature.
pub fn gauge_flow_retract(
    dg: &ChartedDgManifold,
    a: &PolyForm<f64>,
    tau_max: f64,
    steps: usize,
    tol: &Tolerances,
) -> Result<Retraction> {
    let cap = a.cap();
    let d0 = dupont_gauge(a).norm().value;
    if d0 <= GAUGE_FIXED_TOL {
        let element = GroupoidElement::finish(dg, WhitneyCochain::from_form(a), a.clone())?;
        return Ok(Retraction {
            element,
            defects: vec![d0],
            times: vec![0.0],
            polish: None,
        });
    }
    let rhs = |a: &PolyForm<f64>| -> PolyForm<f64> {
        let h = dupont_gauge(a).neg();
        mc::d_tot(dg, a, &h)
    };
    let dt = tau_max / steps as f64;
    let mut cur = a.clone();
    let mut defects = vec![d0];
    let mut times = vec![0.0];
    for s in 0..steps {
        let k1 = rhs(&cur);
        let k2 = rhs(&axpy(&cur, &k1, dt / 2.0));
        let k3 = rhs(&axpy(&cur, &k2, dt / 2.0));
        let k4 = rhs(&axpy(&cur, &k3, dt));
        let mut next = cur.clone();
        next.add_scaled(&k1, &(dt / 6.0));
        next.add_scaled(&k2, &(dt / 3.0));
        next.add_scaled(&k3, &(dt / 3.0));
        next.add_scaled(&k4, &(dt / 6.0));
        let t = (s + 1) as f64 * dt;
        if check_range(dg, &next, 0.0).is_err() || !next.max_coeff().is_finite() {
            return Err(Error::FlowExit(t));
        }
        let d = dupont_gauge(&next).norm().value;
        let prev = *defects.last().unwrap();
        if d > prev {
            if prev <= GAUGE_PLATEAU {
                // truncation noise floor; the Newton polish takes over from here
                break;
            }
            return Err(Error::Stalled(format!(
                "gauge defect rose from {prev:e} to {d:e} at tau = {t}"
            )));
        }
        cur = next;
        defects.push(d);
        times.push(t);
    }
    let c0 = WhitneyCochain::from_form(&cur);
    let all = c0.layout();
    let eqs = WhitneyCochain::zero(c0.n, c0.wdeg.clone(), 1).layout();
    let (c, report) = newton_cells(dg, &c0, &all, &eqs, cap, tol, true)?;
    let element = reconstruct(dg, &c, cap, tol)?;
    Ok(Retraction {
        element,
        defects,
        times,
        polish: Some(report),
    })
}

/// A polynomial map of charts, `ξ'^k ↦ images[k](ξ)`.
#[derive(Clone, Debug)]
pub struct ChartMap {
    pub source: Arc<ChartedDgManifold>,
    pub target: Arc<ChartedDgManifold>,
    pub images: Vec<GradedPolynomial>,
    pub dg_verified: bool,
}

impl ChartMap {
    /// Build and verify `φ* ∘ Q' = Q ∘ φ*` symbolically.
    pub fn new(
        source: Arc<ChartedDgManifold>,
        target: Arc<ChartedDgManifold>,
        images: Vec<GradedPolynomial>,
    ) -> Result<Self> {
        let tcs = target.coords();
        if images.len() != tcs.len() {
            return Err(Error::Dimension(format!(
                "{} images for {} target coordinates",
                images.len(),
                tcs.len()
            )));
        }
        for (k, img) in images.iter().enumerate() {
            if img.coords() != source.coords() {
                return Err(Error::InvalidChart(format!(
                    "image of {} is not over the source coordinates",
                    tcs.name(k)
                )));
            }
            if let Some(d) = img.degree() {
                if d != tcs.degree(k) {
                    return Err(Error::Degree(format!(
                        "image of {} has degree {d}, expected {}",
                        tcs.name(k),
                        tcs.degree(k)
                    )));
                }
            }
        }
        for (k, img) in images.iter().enumerate() {
            let lhs = target.fq()[k].substitute(&images, source.coords());
            let rhs = img.apply_vector_field(source.fq());
            if lhs != rhs {
                return Err(Error::InvalidChart(format!(
                    "map does not intertwine Q on {}: {}",
                    tcs.name(k),
                    lhs.sub(&rhs)
                )));
            }
        }
        Ok(ChartMap {
            source,
            target,
            images,
            dg_verified: true,
        })
    }

    pub fn identity(dg: Arc<ChartedDgManifold>) -> Self {
        let images = (0..dg.rank())
            .map(|i| GradedPolynomial::coord(dg.coords(), i))
            .collect();
        ChartMap::new(dg.clone(), dg, images).expect("identity is a dg map")
    }

    /// `φ_* A`: substitute the components of `A` into the images.
    pub fn push_form(&self, a: &PolyForm<f64>) -> PolyForm<f64> {
        let comps = self.images.iter().map(|g| evaluate_poly(g, a)).collect();
        PolyForm::from_comps(self.target.wdeg(), a.degree(), comps)
    }
}

/// `K^s(φ) = p^s ∘ φ_* ∘ i^s` on a single element.
pub fn pushforward_ks(
    phi: &ChartMap,
    g: &GroupoidElement,
    tau_max: f64,
    steps: usize,
    tol: &Tolerances,
) -> Result<GroupoidElement> {
    let pushed = phi.push_form(&g.form);
    Ok(gauge_flow_retract(&phi.target, &pushed, tau_max, steps, tol)?.element)
}
