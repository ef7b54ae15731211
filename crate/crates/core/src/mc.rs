//! Maurer–Cartan residuals, the Kuranishi map and its inverse, and the
//! propagation ODE along a cylinder.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::form::{lattice_points, FormNorm, PolyForm, ScalarForm, NORM_RESOLUTION};
use crate::graded::{ChartedDgManifold, GradedPolynomial};
use crate::scalar::Scalar;

/// Substitute the components of `a` into `g`: `ξ^i -> a^i`.
///
/// Degree-0 coordinates are replaced by the function parts of their
/// components; graded factors are wedged in monomial order.
pub fn evaluate_poly<T: Scalar>(g: &GradedPolynomial, a: &PolyForm<T>) -> ScalarForm<T> {
    let n = a.dim();
    let cap = a.cap();
    let cs = g.coords();
    let mut out = ScalarForm::zero(n, cap);
    let mut truncated = false;
    for (m, c) in g.terms() {
        let mut t = ScalarForm::constant(n, cap, T::from_rational(c));
        for (p, &e) in m.x.iter().enumerate() {
            let f = a.comp(cs.zero_coords()[p]);
            for _ in 0..e {
                t = f.wedge(&t);
            }
        }
        for &k in &m.xi {
            t = t.wedge(a.comp(k));
        }
        truncated |= t.truncated();
        out.add_assign(&t);
    }
    out.mark_truncated(truncated);
    out
}

/// Check that the degree-0 components stay inside `bx` on the sample lattice.
pub fn check_range<T: Scalar>(dg: &ChartedDgManifold, a: &PolyForm<T>, shrink: f64) -> Result<()> {
    let zc = dg.coords().zero_coords();
    if zc.is_empty() {
        return Ok(());
    }
    let bx = dg.bounds().shrunk(shrink);
    let pts = lattice_points(a.dim(), NORM_RESOLUTION);
    let mut val = vec![0.0; zc.len()];
    for x in &pts {
        for (p, &i) in zc.iter().enumerate() {
            val[p] = a.comp(i).eval(0, x);
        }
        if !bx.contains(&val) {
            return Err(Error::RangeViolation(format!(
                "degree-0 part takes value {val:?} at {x:?}"
            )));
        }
    }
    Ok(())
}

/// `F_Q(A)`, a form of total degree 1.
pub fn evaluate_fq<T: Scalar>(dg: &ChartedDgManifold, a: &PolyForm<T>) -> Result<PolyForm<T>> {
    check_range(dg, a, 0.0)?;
    Ok(evaluate_fq_unchecked(dg, a))
}

pub fn evaluate_fq_unchecked<T: Scalar>(dg: &ChartedDgManifold, a: &PolyForm<T>) -> PolyForm<T> {
    check_total_degree(a, 0);
    let comps = dg.fq().iter().map(|f| evaluate_poly(f, a)).collect();
    PolyForm::from_comps(a.wdeg().clone(), 1, comps)
}

fn check_total_degree<T: Scalar>(a: &PolyForm<T>, q: i32) {
    assert_eq!(a.degree(), q, "expected a form of total degree {q}");
}

/// Cap at which `F_Q(A)` has no truncation for `A` of x-degree at most `cap`.
pub fn exact_cap(dg: &ChartedDgManifold, cap: usize) -> usize {
    let k = dg
        .fq()
        .iter()
        .map(|f| f.max_factors())
        .max()
        .unwrap_or(1)
        .max(1);
    cap * k
}

/// `dA - F_Q(A)` computed without truncation, and its norm.
pub fn mc_residual<T: Scalar>(
    dg: &ChartedDgManifold,
    a: &PolyForm<T>,
) -> Result<(PolyForm<T>, FormNorm)> {
    check_range(dg, a, 0.0)?;
    let cap = exact_cap(dg, a.poly_degree().max(1)).max(a.cap());
    let big = a.rebase(cap);
    let mut r = big.d().sub(&evaluate_fq_unchecked(dg, &big));
    r.clear_truncation();
    let n = r.norm();
    Ok((r, n))
}

/// `κ_v(A) = A - h_v F_Q(A)`, with the homotopy contracting onto vertex `v`.
pub fn kuranishi_at<T: Scalar>(
    dg: &ChartedDgManifold,
    a: &PolyForm<T>,
    vertex: usize,
) -> Result<PolyForm<T>> {
    Ok(a.sub(&evaluate_fq(dg, a)?.homotopy(vertex)))
}

pub fn kuranishi<T: Scalar>(dg: &ChartedDgManifold, a: &PolyForm<T>) -> Result<PolyForm<T>> {
    kuranishi_at(dg, a, 0)
}

#[derive(Clone, Debug)]
pub struct MCSolution {
    pub form: PolyForm<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest coefficient change per Picard iteration.
    pub deltas: Vec<f64>,
}

impl MCSolution {
    pub fn truncated(&self) -> bool {
        self.form.truncated()
    }

    /// Wrap a form after checking its residual.
    pub fn from_form(dg: &ChartedDgManifold, form: PolyForm<f64>, tol: f64) -> Result<Self> {
        let (_, n) = mc_residual(dg, &form)?;
        Ok(MCSolution {
            form,
            residual_norm: n.value,
            iterations: 0,
            converged: n.value <= tol,
            deltas: vec![],
        })
    }
}

pub fn closedness(b: &PolyForm<f64>) -> f64 {
    b.d().max_coeff()
}

/// Inverse of `κ_v` by the Picard iteration `A <- B + h_v F_Q(A)`.
pub fn kuranishi_inverse_at(
    dg: &ChartedDgManifold,
    b: &PolyForm<f64>,
    vertex: usize,
    tol: &Tolerances,
) -> Result<MCSolution> {
    check_total_degree(b, 0);
    let defect = closedness(b);
    if defect > 1e-12 * (1.0 + b.max_coeff()) {
        return Err(Error::NotClosed(defect));
    }
    picard(dg, b, vertex, tol, b.clone())
}

pub fn kuranishi_inverse(
    dg: &ChartedDgManifold,
    b: &PolyForm<f64>,
    tol: &Tolerances,
) -> Result<MCSolution> {
    kuranishi_inverse_at(dg, b, 0, tol)
}

/// Picard iteration from an arbitrary starting iterate.
pub fn picard(
    dg: &ChartedDgManifold,
    b: &PolyForm<f64>,
    vertex: usize,
    tol: &Tolerances,
    start: PolyForm<f64>,
) -> Result<MCSolution> {
    let mut a = start;
    let mut deltas = Vec::new();
    let mut growth = 0;
    for it in 1..=tol.max_iter {
        if check_range(dg, &a, tol.box_shrink).is_err() {
            return Err(Error::Divergence {
                iter: it,
                reason: "iterate left the shrunk chart box".into(),
            });
        }
        let next = b.add(&evaluate_fq_unchecked(dg, &a).homotopy(vertex));
        let delta = next.sub(&a).max_coeff();
        if !delta.is_finite() {
            return Err(Error::Divergence {
                iter: it,
                reason: "non-finite coefficients".into(),
            });
        }
        if deltas
            .last()
            .is_some_and(|&last: &f64| delta > last && last > tol.picard_tol)
        {
            growth += 1;
            if growth >= 5 {
                return Err(Error::Divergence {
                    iter: it,
                    reason: format!("coefficient change grew to {delta:e}"),
                });
            }
        }
        deltas.push(delta);
        a = next;
        if delta <= tol.picard_tol {
            let (_, r) = mc_residual(dg, &a)?;
            return Ok(MCSolution {
                form: a,
                residual_norm: r.value,
                iterations: it,
                converged: r.value <= tol.mc_tol,
                deltas,
            });
        }
    }
    Err(Error::Divergence {
        iter: tol.max_iter,
        reason: format!(
            "no convergence, last change {:e}",
            deltas.last().copied().unwrap_or(f64::NAN)
        ),
    })
}

/// `(L_A V)^k = Σ_i V^i ∧ (∂_i F^k)(A)`, the derivative of `F_Q` at `A` along `V`.
pub fn directional<T: Scalar>(
    dg: &ChartedDgManifold,
    a: &PolyForm<T>,
    v: &PolyForm<T>,
) -> PolyForm<T> {
    let r = dg.rank();
    let mut comps = Vec::with_capacity(r);
    for k in 0..r {
        let mut acc = ScalarForm::zero(a.dim(), a.cap());
        for i in 0..r {
            let d = dg.dfq(k, i);
            if d.is_zero() || v.comp(i).is_zero() {
                continue;
            }
            acc.add_assign(&v.comp(i).wedge(&evaluate_poly(d, a)));
        }
        comps.push(acc);
    }
    PolyForm::from_comps(a.wdeg().clone(), v.degree() + 1, comps)
}

/// `d_tot u = du - (-1)^q L_A u` for `u` of total degree `q`.
pub fn d_tot<T: Scalar>(dg: &ChartedDgManifold, a: &PolyForm<T>, u: &PolyForm<T>) -> PolyForm<T> {
    let l = directional(dg, a, u);
    if u.degree().rem_euclid(2) == 0 {
        u.d().sub(&l)
    } else {
        u.d().add(&l)
    }
}

/// Solve `u = β + h_v(L_A u)` (tangent direction to the MC set with
/// Kuranishi image β) by fixed-point iteration.
pub fn linearized_inverse(
    dg: &ChartedDgManifold,
    a: &PolyForm<f64>,
    beta: &PolyForm<f64>,
    vertex: usize,
    tol: &Tolerances,
) -> Result<PolyForm<f64>> {
    let mut u = beta.clone();
    let scale = 1.0 + beta.max_coeff();
    for it in 1..=tol.max_iter {
        let next = beta.add(&directional(dg, a, &u).homotopy(vertex));
        let delta = next.sub(&u).max_coeff();
        u = next;
        if !delta.is_finite() {
            return Err(Error::Divergence {
                iter: it,
                reason: "non-finite tangent iterate".into(),
            });
        }
        if delta <= tol.picard_tol * scale {
            return Ok(u);
        }
    }
    Err(Error::Divergence {
        iter: tol.max_iter,
        reason: "linearized Picard iteration did not converge".into(),
    })
}

/// Time slices of a solution on `Δⁿ × [0,1]`.
#[derive(Clone, Debug)]
pub struct CylinderForm {
    pub times: Vec<f64>,
    /// Horizontal part `A_h(t)` at each node.
    pub slices: Vec<PolyForm<f64>>,
    /// Vertical part `H(t)` at each node.
    pub vertical: Vec<PolyForm<f64>>,
}

impl CylinderForm {
    /// MC residual norm of every slice.
    pub fn slice_residuals(&self, dg: &ChartedDgManifold) -> Result<Vec<f64>> {
        self.slices
            .iter()
            .map(|s| mc_residual(dg, s).map(|(_, n)| n.value))
            .collect()
    }
}

/// Integrate `dA/dt = dH + H^i ∂_i F_Q(A)` from `A(0) = A0` with classical RK4.
pub fn propagate_homotopy(
    dg: &ChartedDgManifold,
    a0: &MCSolution,
    h: &dyn Fn(f64) -> PolyForm<f64>,
    steps: usize,
    tol: &Tolerances,
) -> Result<CylinderForm> {
    if a0.residual_norm > tol.mc_tol {
        return Err(Error::Divergence {
            iter: 0,
            reason: format!("initial slice is not MC (residual {:e})", a0.residual_norm),
        });
    }
    let rhs = |t: f64, a: &PolyForm<f64>| -> PolyForm<f64> {
        let ht = h(t);
        d_tot(dg, a, &ht)
    };
    let dt = 1.0 / steps as f64;
    let mut a = a0.form.clone();
    let mut times = vec![0.0];
    let mut slices = vec![a.clone()];
    let mut vertical = vec![h(0.0)];
    for s in 0..steps {
        let t = s as f64 * dt;
        let k1 = rhs(t, &a);
        let k2 = rhs(t + dt / 2.0, &axpy(&a, &k1, dt / 2.0));
        let k3 = rhs(t + dt / 2.0, &axpy(&a, &k2, dt / 2.0));
        let k4 = rhs(t + dt, &axpy(&a, &k3, dt));
        let mut next = a.clone();
        next.add_scaled(&k1, &(dt / 6.0));
        next.add_scaled(&k2, &(dt / 3.0));
        next.add_scaled(&k3, &(dt / 3.0));
        next.add_scaled(&k4, &(dt / 6.0));
        if check_range(dg, &next, 0.0).is_err() || !next.max_coeff().is_finite() {
            return Err(Error::FlowExit(t + dt));
        }
        a = next;
        times.push(t + dt);
        slices.push(a.clone());
        vertical.push(h(t + dt));
    }
    Ok(CylinderForm {
        times,
        slices,
        vertical,
    })
}

pub(crate) fn axpy(a: &PolyForm<f64>, k: &PolyForm<f64>, s: f64) -> PolyForm<f64> {
    let mut out = a.clone();
    out.add_scaled(k, &s);
    out
}
