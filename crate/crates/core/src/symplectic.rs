//! Constant graded 2-forms on charts and their integration to simplices.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::form::{wedge_sign, PolyForm, ScalarForm};
use crate::graded::{ChartedDgManifold, GradedCoordSystem, GradedPolynomial};
use crate::groupoid::GroupoidElement;
use crate::linalg;
use crate::mc::{self, directional, exact_cap};
use crate::poly::factorial;
use crate::scalar::rational_from_f64;
use crate::simplicial::{dupont_gauge, elementary_form, WhitneyCochain};

/// `ϖ = ½ ϖ_ij dξ^i dξ^j` with constant coefficients, stored with both
/// orderings filled in by `ϖ_ij = -(-1)^{|i||j|} ϖ_ji`.
#[derive(Clone, Debug, PartialEq)]
pub struct PreSymplecticData {
    pub k: usize,
    entries: BTreeMap<(usize, usize), BigRational>,
    pub symplectic: bool,
}

impl PreSymplecticData {
    pub fn new(
        cs: &Arc<GradedCoordSystem>,
        given: Vec<(usize, usize, BigRational)>,
    ) -> Result<Self> {
        let mut entries: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        let mut k = None;
        for (i, j, v) in given {
            if v.is_zero() {
                continue;
            }
            let deg = cs.degree(i) + cs.degree(j);
            match k {
                None => k = Some(deg),
                Some(k0) if k0 != deg => {
                    return Err(Error::Degree(format!(
                        "omega component {} {} has degree {deg}, others have {k0}",
                        cs.name(i),
                        cs.name(j)
                    )))
                }
                _ => {}
            }
            let sign_even = cs.degree(i) * cs.degree(j) % 2 == 0;
            let partner = if sign_even { -v.clone() } else { v.clone() };
            if i == j && partner != v {
                return Err(Error::InvalidChart(format!(
                    "omega {0} {0} violates graded antisymmetry",
                    cs.name(i)
                )));
            }
            for (key, val) in [((i, j), v), ((j, i), partner)] {
                if let Some(old) = entries.get(&key) {
                    if *old != val {
                        return Err(Error::InvalidChart(format!(
                            "omega {} {} inconsistent with its antisymmetric partner",
                            cs.name(key.0),
                            cs.name(key.1)
                        )));
                    }
                }
                entries.insert(key, val);
            }
        }
        let k =
            k.ok_or_else(|| Error::InvalidChart("omega section has no nonzero entries".into()))?;
        let n = cs.len();
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), v) in &entries {
            m[(i, j)] = v.to_f64().unwrap_or(f64::NAN);
        }
        let symplectic = m
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .all(|&s| s > 1e-12);
        Ok(PreSymplecticData {
            k,
            entries,
            symplectic,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &BigRational)> {
        self.entries.iter()
    }

    pub fn get(&self, i: usize, j: usize) -> BigRational {
        self.entries
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), v) in &self.entries {
            m[(i, j)] = v.to_f64().unwrap_or(f64::NAN);
        }
        m
    }

    /// The polynomial `L_Q ϖ` written in coordinates `ξ`, `u`, `v`:
    /// `Σ ϖ_ij ((Lu)^i v^j + (-1)^{|i|} u^i (Lv)^j)` with `(Lu)^i = u^m ∂_m F^i`.
    /// It vanishes identically iff `ϖ` is `Q`-invariant.
    pub fn q_invariance_residual(&self, dg: &ChartedDgManifold) -> GradedPolynomial {
        let cs = dg.coords();
        let n = cs.len();
        let mut coords = Vec::with_capacity(3 * n);
        for prefix in ["", "u_", "v_"] {
            for i in 0..n {
                coords.push((format!("{prefix}{}", cs.name(i)), cs.degree(i)));
            }
        }
        let ext = Arc::new(GradedCoordSystem::new(coords).expect("extended coordinates"));
        let base: Vec<usize> = (0..n).collect();
        let lin = |shift: usize| -> Vec<GradedPolynomial> {
            (0..n)
                .map(|i| {
                    let mut acc = GradedPolynomial::zero(&ext);
                    for m in 0..n {
                        let d = dg.dfq(i, m);
                        if d.is_zero() {
                            continue;
                        }
                        let um = GradedPolynomial::coord(&ext, shift + m);
                        acc = acc.add(&um.mul(&d.embed(&ext, &base)));
                    }
                    acc
                })
                .collect()
        };
        let lu = lin(n);
        let lv = lin(2 * n);
        let mut out = GradedPolynomial::zero(&ext);
        for (&(i, j), w) in &self.entries {
            let c = GradedPolynomial::constant(&ext, w.clone());
            let vj = GradedPolynomial::coord(&ext, 2 * n + j);
            let ui = GradedPolynomial::coord(&ext, n + i);
            let t1 = c.mul(&lu[i]).mul(&vj);
            let mut t2 = c.mul(&ui).mul(&lv[j]);
            if cs.degree(i) % 2 == 1 {
                t2 = t2.neg();
            }
            out = out.add(&t1).add(&t2);
        }
        out
    }

    pub fn validate(&self, dg: &ChartedDgManifold) -> Result<()> {
        let r = self.q_invariance_residual(dg);
        if !r.is_zero() {
            return Err(Error::InvalidChart(format!(
                "omega is not Q-invariant: {r}"
            )));
        }
        Ok(())
    }
}

fn omega_of(dg: &ChartedDgManifold) -> Result<&PreSymplecticData> {
    dg.omega()
        .ok_or_else(|| Error::InvalidChart(format!("chart {} has no omega section", dg.label)))
}

/// `Σ ϖ_ij u^i ∧ v^j` as a scalar form. Products are formed at a cap large
/// enough to avoid truncation.
pub fn pairing_form(
    om: &PreSymplecticData,
    u: &PolyForm<f64>,
    v: &PolyForm<f64>,
) -> ScalarForm<f64> {
    let cap = (u.poly_degree() + v.poly_degree())
        .max(u.cap())
        .max(v.cap());
    let (u, v) = (u.rebase(cap), v.rebase(cap));
    let mut acc = ScalarForm::zero(u.dim(), cap);
    for (&(i, j), w) in om.entries() {
        if u.comp(i).is_zero() || v.comp(j).is_zero() {
            continue;
        }
        let w = w.to_f64().unwrap_or(f64::NAN);
        acc.add_scaled(&u.comp(i).wedge(v.comp(j)), &w);
    }
    acc
}

/// `ω_A(u, v) = ∫_{Δ^k} ϖ_ij(A) u^i v^j` for tangent vectors of total degree 0.
pub fn omega_pair(
    dg: &ChartedDgManifold,
    a: &PolyForm<f64>,
    u: &PolyForm<f64>,
    v: &PolyForm<f64>,
) -> Result<f64> {
    let om = omega_of(dg)?;
    let k = a.dim();
    if om.k != k {
        return Err(Error::Degree(format!(
            "omega has degree {}, simplex has dimension {k}",
            om.k
        )));
    }
    if u.dim() != k || v.dim() != k {
        return Err(Error::Dimension(format!(
            "tangents on Δ^{} and Δ^{}, base on Δ^{k}",
            u.dim(),
            v.dim()
        )));
    }
    if u.degree() != 0 || v.degree() != 0 {
        return Err(Error::Degree(format!(
            "tangents of degree {} and {}",
            u.degree(),
            v.degree()
        )));
    }
    Ok(pairing_form(om, u, v).integrate_top())
}

/// `Σ_p (-1)^p ω(u|_p, v|_p)` over the faces of `Δ^{k+1}`.
pub fn delta_omega(
    dg: &ChartedDgManifold,
    a: &PolyForm<f64>,
    u: &PolyForm<f64>,
    v: &PolyForm<f64>,
) -> Result<f64> {
    let mut s = 0.0;
    for p in 0..=a.dim() {
        let t = omega_pair(dg, &a.face(p), &u.face(p), &v.face(p))?;
        s += if p % 2 == 0 { t } else { -t };
    }
    Ok(s)
}

/// `∫ ϖ_ij (d_tot u)^i v^j + ∫ (-1)^{|i|} ϖ_ij u^i (d_tot v)^j` on `Δ^{k+1}`;
/// equals [`delta_omega`] by Stokes and `Q`-invariance of `ϖ`.
pub fn stokes_rhs(
    dg: &ChartedDgManifold,
    a: &PolyForm<f64>,
    u: &PolyForm<f64>,
    v: &PolyForm<f64>,
) -> Result<f64> {
    let om = omega_of(dg)?;
    let cap =
        exact_cap(dg, a.poly_degree().max(1)).max(a.cap()) + u.poly_degree() + v.poly_degree();
    let (a, u, v) = (a.rebase(cap), u.rebase(cap), v.rebase(cap));
    let du = mc::d_tot(dg, &a, &u);
    let dv = mc::d_tot(dg, &a, &v);
    let wdeg = u.wdeg().clone();
    let signed = PolyForm::from_comps(
        wdeg.clone(),
        0,
        (0..u.rank())
            .map(|i| {
                if wdeg[i] % 2 == 1 {
                    u.comp(i).neg()
                } else {
                    u.comp(i).clone()
                }
            })
            .collect(),
    );
    let total = pairing_form(om, &du, &v).add(&pairing_form(om, &signed, &dv));
    Ok(total.integrate_top())
}

/// `u = γ + s(L_A u)`: derivative of the gauge-fixed solution `A(c)` along
/// the cochain direction realized by `γ`.
pub fn gauged_tangent(
    dg: &ChartedDgManifold,
    a: &PolyForm<f64>,
    gamma: &PolyForm<f64>,
    tol: &Tolerances,
) -> Result<PolyForm<f64>> {
    let mut u = gamma.clone();
    let scale = 1.0 + gamma.max_coeff();
    for it in 1..=tol.max_iter {
        let next = gamma.add(&dupont_gauge(&directional(dg, a, &u)));
        let delta = next.sub(&u).max_coeff();
        u = next;
        if !delta.is_finite() {
            return Err(Error::Divergence {
                iter: it,
                reason: "non-finite tangent iterate".into(),
            });
        }
        if delta <= 1e-3 * tol.picard_tol * scale {
            return Ok(u);
        }
    }
    Err(Error::Divergence {
        iter: tol.max_iter,
        reason: "gauge-fixed tangent iteration did not converge".into(),
    })
}

/// Tangent space of the gauge-fixed groupoid at an element.
#[derive(Clone, Debug)]
pub struct KsTangents {
    /// Columns span the kernel of the linearized curvature, in cochain coordinates.
    pub basis: DMatrix<f64>,
    /// Tangent forms, one per column of `basis`.
    pub forms: Vec<PolyForm<f64>>,
    /// Linearized curvature `DR`, one column per cochain coordinate.
    pub jacobian: DMatrix<f64>,
}

impl KsTangents {
    pub fn dim(&self) -> usize {
        self.forms.len()
    }
}

const KERNEL_THRESHOLD: f64 = 1e-8;

/// Linearize `c ↦ A(c)` and `c ↦ R(c)` at `g` and restrict to `DR = 0`.
pub fn ks_tangents(
    dg: &ChartedDgManifold,
    g: &GroupoidElement,
    tol: &Tolerances,
) -> Result<KsTangents> {
    let a = &g.form;
    let cap = a.cap();
    let big = exact_cap(dg, a.poly_degree().max(1)).max(cap);
    let a_big = a.rebase(big);
    let layout = g.cochain.layout();
    let dirs: Vec<(PolyForm<f64>, Vec<f64>)> = (0..layout.len())
        .into_par_iter()
        .map(|col| -> Result<(PolyForm<f64>, Vec<f64>)> {
            let mut e = WhitneyCochain::zero(g.n, g.cochain.wdeg.clone(), 0);
            let mut x = vec![0.0; layout.len()];
            x[col] = 1.0;
            e.set_flat(&x);
            let u = gauged_tangent(dg, a, &e.realize(cap), tol)?;
            let mut l = directional(dg, &a_big, &u.rebase(big));
            l.clear_truncation();
            let dr = e.coboundary().sub(&WhitneyCochain::from_form(&l));
            Ok((u, dr.flat()))
        })
        .collect::<Result<_>>()?;
    let rows = dirs.first().map_or(0, |d| d.1.len());
    let n = layout.len();
    let jacobian = DMatrix::from_fn(rows, n, |r, c| dirs[c].1[r]);
    let mut padded = DMatrix::zeros(rows.max(n), n);
    padded.view_mut((0, 0), (rows, n)).copy_from(&jacobian);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.max().max(1.0);
    let kernel: Vec<usize> = (0..n)
        .filter(|&r| svd.singular_values[r] <= KERNEL_THRESHOLD * smax)
        .collect();
    let basis = DMatrix::from_fn(n, kernel.len(), |i, j| v_t[(kernel[j], i)]);
    let forms = (0..kernel.len())
        .map(|j| {
            let mut t = PolyForm::zero(a.wdeg().clone(), g.n, cap, 0);
            for (i, (u, _)) in dirs.iter().enumerate() {
                let w = basis[(i, j)];
                if w.abs() > 1e-15 {
                    t.add_scaled(u, &w);
                }
            }
            t
        })
        .collect();
    Ok(KsTangents {
        basis,
        forms,
        jacobian,
    })
}

/// Matrix of `ω^s` on a tangent basis of `K^s_k` at `g`.
#[derive(Clone, Debug)]
pub struct OmegaS {
    pub matrix: DMatrix<f64>,
    pub tangent_dim: usize,
    pub rank: usize,
    /// Largest `|M + M^T|`.
    pub antisymmetry: f64,
}

pub fn omega_s_matrix(
    dg: &ChartedDgManifold,
    g: &GroupoidElement,
    tol: &Tolerances,
) -> Result<OmegaS> {
    let om = omega_of(dg)?;
    if om.k != g.n {
        return Err(Error::Degree(format!(
            "omega has degree {}, element lives on Δ^{}",
            om.k, g.n
        )));
    }
    let t = ks_tangents(dg, g, tol)?;
    let m = t.dim();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| omega_pair(dg, &g.form, &t.forms[i], &t.forms[j]))
        .collect::<Result<_>>()?;
    let matrix = DMatrix::from_row_slice(m, m, &vals);
    let antisymmetry = (&matrix + matrix.transpose()).amax();
    Ok(OmegaS {
        rank: linalg::numerical_rank(&matrix, KERNEL_THRESHOLD),
        tangent_dim: m,
        antisymmetry,
        matrix,
    })
}

/// `max_{a,b} |Σ_p (-1)^p ω(t_a|_p, t_b|_p)|` over a tangent basis at an
/// element of `K^s_{k+1}`.
pub fn delta_omega_s(dg: &ChartedDgManifold, g: &GroupoidElement, tol: &Tolerances) -> Result<f64> {
    let om = omega_of(dg)?;
    if om.k + 1 != g.n {
        return Err(Error::Degree(format!(
            "omega has degree {}, element lives on Δ^{}",
            om.k, g.n
        )));
    }
    let t = ks_tangents(dg, g, tol)?;
    let m = t.dim();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| delta_omega(dg, &g.form, &t.forms[i], &t.forms[j]))
        .collect::<Result<_>>()?;
    Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())))
}

type Q = BigRational;

/// An element of the exterior algebra `Λ(ε_0, .., ε_n)`, indexed by subset bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannElement {
    pub n: usize,
    coeffs: Vec<Q>,
}

impl GrassmannElement {
    pub fn zero(n: usize) -> Self {
        GrassmannElement {
            n,
            coeffs: vec![Q::zero(); 1 << (n + 1)],
        }
    }

    pub fn monomial(n: usize, mask: usize) -> Self {
        let mut e = Self::zero(n);
        e.coeffs[mask] = Q::one();
        e
    }

    pub fn one(n: usize) -> Self {
        Self::monomial(n, 0)
    }

    pub fn generator(n: usize, i: usize) -> Self {
        Self::monomial(n, 1 << i)
    }

    pub fn full_mask(&self) -> usize {
        (1 << (self.n + 1)) - 1
    }

    pub fn coeff(&self, mask: usize) -> &Q {
        &self.coeffs[mask]
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// `Some(d)` if every nonzero term has degree `d`.
    pub fn degree(&self) -> Option<usize> {
        let mut deg = None;
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = m.count_ones() as usize;
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => return None,
                _ => {}
            }
        }
        deg
    }

    pub fn add(&self, o: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&o.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        GrassmannElement { n: self.n, coeffs }
    }

    pub fn scale(&self, s: &Q) -> Self {
        let coeffs = self.coeffs.iter().map(|a| a * s).collect();
        GrassmannElement { n: self.n, coeffs }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (a, ca) in self.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (b, cb) in o.coeffs.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                if let Some(neg) = wedge_sign(a, b) {
                    let p = ca * cb;
                    if neg {
                        out.coeffs[a | b] -= p;
                    } else {
                        out.coeffs[a | b] += p;
                    }
                }
            }
        }
        out
    }

    /// `d = Σ ε_i`, acting by left multiplication.
    pub fn d(&self) -> Self {
        let mut e = Self::zero(self.n);
        for i in 0..=self.n {
            e = e.add(&Self::generator(self.n, i));
        }
        e.mul(self)
    }

    /// `∂ = Σ ∂/∂ε_i` (left derivatives).
    pub fn partial(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for i in 0..=self.n {
                if m >> i & 1 == 1 {
                    let below = (m & ((1 << i) - 1)).count_ones();
                    if below % 2 == 0 {
                        out.coeffs[m ^ (1 << i)] += c;
                    } else {
                        out.coeffs[m ^ (1 << i)] -= c;
                    }
                }
            }
        }
        out
    }

    /// `⟨σ, τ⟩`: the coefficient of `ε_0 .. ε_n` in `στ`.
    pub fn top_pairing(&self, o: &Self) -> Q {
        self.mul(o).coeffs[self.full_mask()].clone()
    }

    /// `χ(ε_I) = ω_I`, `χ(1) = 0`.
    pub fn chi(&self, cap: usize) -> ScalarForm<Q> {
        let mut out = ScalarForm::zero(self.n, cap);
        for (m, c) in self.coeffs.iter().enumerate() {
            if m == 0 || c.is_zero() {
                continue;
            }
            let idx: Vec<usize> = (0..=self.n).filter(|&i| m >> i & 1 == 1).collect();
            let w = elementary_form::<Q>(&idx, self.n, cap).expect("sorted indices");
            out.add_scaled(&w, c);
        }
        out
    }

    /// `(σ, τ) = ∫_{Δⁿ} χ(σ) χ(τ)`.
    pub fn integral_pairing(&self, o: &Self) -> Q {
        self.chi(2).wedge(&o.chi(2)).integrate_top()
    }
}

/// `((i-1)!(j-1)!/(n+1)!) ⟨ε_I, ∂ε_J⟩` for `|I| = i`, `|J| = j`, both at least 1.
pub fn closed_formula(n: usize, a: usize, b: usize) -> Q {
    let (i, j) = (a.count_ones() as usize, b.count_ones() as usize);
    if i == 0 || j == 0 {
        return Q::zero();
    }
    let s = GrassmannElement::monomial(n, a);
    let t = GrassmannElement::monomial(n, b);
    let f = Q::new(
        BigInt::from(factorial(i - 1) * factorial(j - 1)),
        BigInt::from(factorial(n + 1)),
    );
    s.top_pairing(&t.partial()) * f
}

/// Both pairing tables on `Ẽ_n`, indexed by subset bitmask.
#[derive(Clone, Debug)]
pub struct GrassmannTables {
    pub n: usize,
    pub top: Vec<Vec<Q>>,
    pub integral: Vec<Vec<Q>>,
    pub closed: Vec<Vec<Q>>,
}

impl GrassmannTables {
    /// Pairs where the closed formula and the integral disagree.
    pub fn mismatches(&self) -> Vec<(usize, usize)> {
        let size = self.integral.len();
        (0..size)
            .flat_map(|a| (0..size).map(move |b| (a, b)))
            .filter(|&(a, b)| self.integral[a][b] != self.closed[a][b])
            .collect()
    }

    /// Whether the kernel of `(,)` is exactly `ker ∂`.
    pub fn kernel_law(&self) -> bool {
        let size = self.integral.len();
        let gram_kernel = linalg::nullspace(&self.integral, size);
        let del: Vec<Vec<Q>> = {
            let cols: Vec<GrassmannElement> = (0..size)
                .map(|m| GrassmannElement::monomial(self.n, m).partial())
                .collect();
            (0..size)
                .map(|r| cols.iter().map(|c| c.coeff(r).clone()).collect())
                .collect()
        };
        let del_kernel = linalg::nullspace(&del, size);
        same_span(&gram_kernel, &del_kernel)
    }
}

fn same_span(a: &[Vec<Q>], b: &[Vec<Q>]) -> bool {
    let ra = linalg::rank(a);
    let rb = linalg::rank(b);
    let joint: Vec<Vec<Q>> = a.iter().chain(b).cloned().collect();
    ra == rb && linalg::rank(&joint) == ra
}

pub fn grassmann_pairings(n: usize) -> GrassmannTables {
    let size = 1usize << (n + 1);
    let chis: Vec<ScalarForm<Q>> = (0..size)
        .map(|m| GrassmannElement::monomial(n, m).chi(2))
        .collect();
    let rows: Vec<(Vec<Q>, Vec<Q>, Vec<Q>)> = (0..size)
        .into_par_iter()
        .map(|a| {
            let s = GrassmannElement::monomial(n, a);
            let mut top = Vec::with_capacity(size);
            let mut integral = Vec::with_capacity(size);
            let mut closed = Vec::with_capacity(size);
            for b in 0..size {
                top.push(s.top_pairing(&GrassmannElement::monomial(n, b)));
                integral.push(chis[a].wedge(&chis[b]).integrate_top());
                closed.push(closed_formula(n, a, b));
            }
            (top, integral, closed)
        })
        .collect();
    let mut t = GrassmannTables {
        n,
        top: Vec::new(),
        integral: Vec::new(),
        closed: Vec::new(),
    };
    for (a, b, c) in rows {
        t.top.push(a);
        t.integral.push(b);
        t.closed.push(c);
    }
    t
}

/// Outcome of the linear-algebra nondegeneracy test at a point of `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyReport {
    pub k: usize,
    /// Dimension of `(Ẽ_k ⊗ W)^1`.
    pub space_dim: usize,
    /// Dimension of its `d_tot`-closed subspace.
    pub closed_dim: usize,
    /// Rank of `(,) ⊗ ϖ_x` restricted to the closed subspace.
    pub rank: usize,
    /// Kernel of `(,) ⊗ ϖ_x` on `(Ẽ_k ⊗ W)^1` equals the `∂ ⊗ 1`-closed part.
    pub kernel_law: bool,
}

impl NondegeneracyReport {
    pub fn nondegenerate(&self) -> bool {
        self.rank == self.closed_dim
    }
}

/// Basis `ε_I ⊗ e_i` of `(Ẽ_k ⊗ W)^deg`, i.e. `|I| - |ξ^i| = deg`.
fn tensor_basis(k: usize, wdeg: &[usize], deg: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, &w) in wdeg.iter().enumerate() {
        for m in 0..(1usize << (k + 1)) {
            if m.count_ones() as usize == w + deg {
                out.push((m, i));
            }
        }
    }
    out
}

/// Build `(Ẽ_k ⊗ W)^1` at `x`, its `d_tot = d + Q_lin(x)`-closed part and
/// the restriction of `(,) ⊗ ϖ_x`, all over `Q`.
pub fn nondegeneracy_check(
    dg: &ChartedDgManifold,
    x: &[f64],
    k: usize,
) -> Result<NondegeneracyReport> {
    let om = omega_of(dg)?;
    if !om.symplectic {
        return Err(Error::Degenerate("omega is not symplectic".into()));
    }
    if om.k != k {
        return Err(Error::Degree(format!(
            "omega has degree {}, asked for k = {k}",
            om.k
        )));
    }
    let zc = dg.coords().zero_coords();
    if x.len() != zc.len() {
        return Err(Error::Dimension(format!(
            "{} base values for {} degree-0 coordinates",
            x.len(),
            zc.len()
        )));
    }
    if !dg.bounds().contains(x) {
        return Err(Error::OutsideBox(format!("{x:?}")));
    }
    let xq: Vec<Q> = x.iter().map(|&v| rational_from_f64(v)).collect();
    let r = dg.rank();
    // m[t][i] = ∂_i F^t(x)
    let m: Vec<Vec<Q>> = (0..r)
        .map(|t| (0..r).map(|i| dg.dfq(t, i).eval_exact(&xq)).collect())
        .collect();
    let wdeg = dg.wdeg();
    let b1 = tensor_basis(k, &wdeg, 1);
    let b2 = tensor_basis(k, &wdeg, 2);
    let b0 = tensor_basis(k, &wdeg, 0);
    let pos = |b: &[(usize, usize)]| -> BTreeMap<(usize, usize), usize> {
        b.iter().enumerate().map(|(p, &e)| (e, p)).collect()
    };
    let (p2, p0) = (pos(&b2), pos(&b0));

    let mut dtot = vec![vec![Q::zero(); b1.len()]; b2.len()];
    let mut del = vec![vec![Q::zero(); b1.len()]; b0.len()];
    for (col, &(mask, i)) in b1.iter().enumerate() {
        let s = GrassmannElement::monomial(k, mask);
        let ds = s.d();
        for (mm, c) in ds.coeffs().iter().enumerate() {
            if !c.is_zero() {
                dtot[p2[&(mm, i)]][col] += c;
            }
        }
        for (t, row) in m.iter().enumerate() {
            let c = &row[i];
            if c.is_zero() {
                continue;
            }
            let target = p2
                .get(&(mask, t))
                .ok_or_else(|| Error::Degree(format!("Q_lin maps e{i} out of degree at e{t}")))?;
            dtot[*target][col] -= c;
        }
        let ps = s.partial();
        for (mm, c) in ps.coeffs().iter().enumerate() {
            if !c.is_zero() {
                del[p0[&(mm, i)]][col] += c;
            }
        }
    }

    let chis: BTreeMap<usize, ScalarForm<Q>> = b1
        .iter()
        .map(|&(mask, _)| mask)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|mask| (mask, GrassmannElement::monomial(k, mask).chi(2)))
        .collect();
    let pairing: Vec<Vec<Q>> = b1
        .par_iter()
        .map(|&(ma, i)| {
            b1.iter()
                .map(|&(mb, j)| {
                    let w = om.get(i, j);
                    if w.is_zero() {
                        return Q::zero();
                    }
                    chis[&ma].wedge(&chis[&mb]).integrate_top() * w
                })
                .collect()
        })
        .collect();

    let z = linalg::nullspace(&dtot, b1.len());
    let restricted: Vec<Vec<Q>> = z
        .iter()
        .map(|zi| {
            let pz = linalg::mat_vec(&pairing, zi);
            z.iter()
                .map(|zj| {
                    zj.iter()
                        .zip(&pz)
                        .fold(Q::zero(), |acc, (a, b)| acc + a * b)
                })
                .collect()
        })
        .collect();
    let rank = linalg::rank(&restricted);
    let pairing_kernel = linalg::nullspace(&pairing, b1.len());
    let del_kernel = linalg::nullspace(&del, b1.len());
    Ok(NondegeneracyReport {
        k,
        space_dim: b1.len(),
        closed_dim: z.len(),
        rank,
        kernel_law: same_span(&pairing_kernel, &del_kernel),
    })
}
