//! Whitney forms, the Whitney projection, the Dupont gauge, Moore's horn
//! filler and horn filling for Maurer–Cartan forms.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::form::{PolyForm, ScalarForm};
use crate::graded::ChartedDgManifold;
use crate::mc::{self, MCSolution};
use crate::scalar::Scalar;

/// Sorted `size`-element subsets of `{0..=n}` in lexicographic order.
pub fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size == 0 || size > n + 1 {
        return out;
    }
    let mut cur: Vec<usize> = (0..size).collect();
    loop {
        out.push(cur.clone());
        let mut i = size;
        while i > 0 && cur[i - 1] == n + 1 - size + (i - 1) {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Differential of the barycentric coordinate `t_i`.
fn dt<T: Scalar>(n: usize, cap: usize, i: usize) -> ScalarForm<T> {
    ScalarForm::barycentric(n, cap, i).d()
}

/// `ω_I = k! Σ_j (-1)^j t_{i_j} dt_{i_0} .. ^dt_{i_j} .. dt_{i_k}`.
pub fn elementary_form<T: Scalar>(
    indices: &[usize],
    n: usize,
    cap: usize,
) -> Result<ScalarForm<T>> {
    if indices.is_empty()
        || indices.iter().any(|&i| i > n)
        || indices.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::BadIndices(format!("{indices:?} on a {n}-simplex")));
    }
    let k = indices.len() - 1;
    let mut acc = ScalarForm::zero(n, cap);
    for j in 0..=k {
        let mut t = ScalarForm::barycentric(n, cap, indices[j]);
        for (m, &i) in indices.iter().enumerate() {
            if m != j {
                t = t.wedge(&dt(n, cap, i));
            }
        }
        if j % 2 == 0 {
            acc.add_assign(&t);
        } else {
            acc.add_assign(&t.neg());
        }
    }
    let fact: i64 = (1..=k as i64).product();
    Ok(acc.scale(&T::from_int(fact)))
}

type ElementaryKey = (TypeId, usize, usize, Vec<usize>);

static ELEMENTARY: OnceLock<Mutex<HashMap<ElementaryKey, Arc<dyn Any + Send + Sync>>>> =
    OnceLock::new();

/// Shared copy of `elementary_form` for sorted in-range indices.
fn elementary<T: Scalar>(indices: &[usize], n: usize, cap: usize) -> Arc<ScalarForm<T>> {
    let key = (TypeId::of::<T>(), n, cap, indices.to_vec());
    let table = ELEMENTARY.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(w) = table.lock().expect("elementary cache poisoned").get(&key) {
        return w.clone().downcast().expect("keyed by type");
    }
    let w = Arc::new(elementary_form::<T>(indices, n, cap).expect("sorted"));
    table
        .lock()
        .expect("elementary cache poisoned")
        .insert(key, w.clone());
    w
}

/// Whitney projection of a scalar form: `Σ_I ω_I ∫_I α`.
pub fn whitney_project_scalar<T: Scalar>(a: &ScalarForm<T>) -> ScalarForm<T> {
    let n = a.dim();
    let cap = a.cap();
    let mut out = ScalarForm::zero(n, cap);
    for k in 0..=n {
        let part = a.part(k);
        if part.is_zero() {
            continue;
        }
        for s in subsets(n, k + 1) {
            let v = part
                .pullback_vertices(&s)
                .expect("subsimplex")
                .integrate_top();
            if !v.is_zero() {
                out.add_scaled(&elementary(&s, n, cap), &v);
            }
        }
    }
    out.mark_truncated(a.truncated());
    out
}

/// Dupont's operator `s = Σ_{k<n} Σ_I (-1)^k ω_I h_{i_k} .. h_{i_0}`.
///
/// The sign compensates for our homotopy convention `hd + dh = 1 - ev_v`.
pub fn dupont_scalar<T: Scalar>(a: &ScalarForm<T>) -> ScalarForm<T> {
    let n = a.dim();
    let cap = a.cap();
    let mut out = ScalarForm::zero(n, cap);
    let mut stack: Vec<(Vec<usize>, ScalarForm<T>)> =
        (0..=n).map(|i| (vec![i], a.homotopy(i))).collect();
    while let Some((idx, g)) = stack.pop() {
        if g.is_zero() {
            continue;
        }
        if idx.len() <= n {
            let t = elementary::<T>(&idx, n, cap).wedge(&g);
            if idx.len() % 2 == 0 {
                out.add_scaled(&t, &-T::one());
            } else {
                out.add_assign(&t);
            }
            for next in idx.last().unwrap() + 1..=n {
                if idx.len() < n {
                    let mut j = idx.clone();
                    j.push(next);
                    stack.push((j, g.homotopy(next)));
                }
            }
        }
    }
    out.mark_truncated(a.truncated());
    out
}

fn map_comps<T: Scalar>(
    a: &PolyForm<T>,
    degree: i32,
    f: impl Fn(&ScalarForm<T>) -> ScalarForm<T>,
) -> PolyForm<T> {
    PolyForm::from_comps(a.wdeg().clone(), degree, a.comps().iter().map(f).collect())
}

/// `p` applied componentwise.
pub fn whitney_project<T: Scalar>(a: &PolyForm<T>) -> PolyForm<T> {
    map_comps(a, a.degree(), whitney_project_scalar)
}

/// `s` applied componentwise.
pub fn dupont_gauge<T: Scalar>(a: &PolyForm<T>) -> PolyForm<T> {
    map_comps(a, a.degree() - 1, dupont_scalar)
}

/// `π(α) = α - (h_0 p + s)(dα)`.
pub fn gauge_project_pi<T: Scalar>(a: &PolyForm<T>) -> PolyForm<T> {
    let da = a.d();
    let corr = whitney_project(&da).homotopy(0).add(&dupont_gauge(&da));
    a.sub(&corr)
}

/// Coefficients of Whitney forms: one real per subsimplex and coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyCochain {
    pub n: usize,
    pub wdeg: Arc<Vec<usize>>,
    /// Total degree: coordinate `i` lives on subsimplices of dimension `wdeg[i] + degree`.
    pub degree: i32,
    pub values: Vec<Vec<f64>>,
}

impl WhitneyCochain {
    pub fn zero(n: usize, wdeg: Arc<Vec<usize>>, degree: i32) -> Self {
        let values = wdeg
            .iter()
            .map(|&w| Self::cells_for(n, w as i32 + degree).len())
            .map(|len| vec![0.0; len])
            .collect();
        WhitneyCochain {
            n,
            wdeg,
            degree,
            values,
        }
    }

    fn cells_for(n: usize, dim: i32) -> Vec<Vec<usize>> {
        if dim < 0 {
            return vec![];
        }
        subsets(n, dim as usize + 1)
    }

    /// Subsimplices carrying coordinate `i`.
    pub fn cells(&self, i: usize) -> Vec<Vec<usize>> {
        Self::cells_for(self.n, self.wdeg[i] as i32 + self.degree)
    }

    pub fn get(&self, i: usize, cell: &[usize]) -> f64 {
        match self.cells(i).binary_search_by(|c| c.as_slice().cmp(cell)) {
            Ok(p) => self.values[i][p],
            Err(_) => 0.0,
        }
    }

    pub fn set(&mut self, i: usize, cell: &[usize], v: f64) {
        let p = self
            .cells(i)
            .binary_search_by(|c| c.as_slice().cmp(cell))
            .expect("cell carries this coordinate");
        self.values[i][p] = v;
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, x: &[f64]) {
        let mut k = 0;
        for v in self.values.iter_mut() {
            for e in v.iter_mut() {
                *e = x[k];
                k += 1;
            }
        }
    }

    /// `(coordinate, cell)` for each flat position.
    pub fn layout(&self) -> Vec<(usize, Vec<usize>)> {
        (0..self.wdeg.len())
            .flat_map(|i| self.cells(i).into_iter().map(move |c| (i, c)))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&o.values) {
            for (x, y) in a.iter_mut().zip(b) {
                *x -= y;
            }
        }
        out
    }

    /// `Σ c_I ω_I` as a form.
    pub fn realize<T: Scalar>(&self, cap: usize) -> PolyForm<T> {
        let comps = (0..self.wdeg.len())
            .map(|i| {
                let mut f = ScalarForm::zero(self.n, cap);
                for (c, &v) in self.cells(i).iter().zip(&self.values[i]) {
                    if v != 0.0 {
                        let w = elementary::<T>(c, self.n, cap);
                        f.add_scaled(&w, &T::from_f64(v).expect("finite cochain value"));
                    }
                }
                f
            })
            .collect();
        PolyForm::from_comps(self.wdeg.clone(), self.degree, comps)
    }

    /// Read off `∫_I α` for every cell.
    pub fn from_form(a: &PolyForm<f64>) -> Self {
        let mut c = Self::zero(a.dim(), a.wdeg().clone(), a.degree());
        for i in 0..a.rank() {
            let cells = c.cells(i);
            for (p, cell) in cells.iter().enumerate() {
                c.values[i][p] = a
                    .comp(i)
                    .pullback_vertices(cell)
                    .expect("subsimplex")
                    .integrate_top();
            }
        }
        c
    }

    /// Simplicial coboundary `(δc)(J) = Σ_r (-1)^r c(J \ j_r)`.
    pub fn coboundary(&self) -> Self {
        let mut out = Self::zero(self.n, self.wdeg.clone(), self.degree + 1);
        for i in 0..self.wdeg.len() {
            let cells = out.cells(i);
            for (p, cell) in cells.iter().enumerate() {
                let mut acc = 0.0;
                for r in 0..cell.len() {
                    let mut f = cell.clone();
                    f.remove(r);
                    let v = self.get(i, &f);
                    acc += if r % 2 == 0 { v } else { -v };
                }
                out.values[i][p] = acc;
            }
        }
        out
    }

    /// Restriction along the vertex map `vertices` (strictly increasing).
    pub fn restrict(&self, vertices: &[usize]) -> Self {
        let m = vertices.len() - 1;
        let mut out = Self::zero(m, self.wdeg.clone(), self.degree);
        for i in 0..self.wdeg.len() {
            let cells = out.cells(i);
            for (p, cell) in cells.iter().enumerate() {
                let image: Vec<usize> = cell.iter().map(|&v| vertices[v]).collect();
                out.values[i][p] = self.get(i, &image);
            }
        }
        out
    }

    pub fn face(&self, p: usize) -> Self {
        let v: Vec<usize> = (0..=self.n).filter(|&j| j != p).collect();
        self.restrict(&v)
    }
}

/// Largest coefficient gap between two forms, relative to their size.
fn mismatch<T: Scalar>(a: &PolyForm<T>, b: &PolyForm<T>) -> f64 {
    let cap = a.cap().max(b.cap());
    a.rebase(cap).sub(&b.rebase(cap)).max_coeff()
}

fn exact_tolerance<T: Scalar>(a: &PolyForm<T>) -> f64 {
    HORN_EXACT_TOL * (1.0 + a.max_coeff())
}

/// Tolerance for "exact" equality of float forms (rounding only).
pub const HORN_EXACT_TOL: f64 = 1e-12;

/// Check `d_i y_j = d_{j-1} y_i` for all horn indices `i < j`.
pub fn check_horn<T: Scalar>(ys: &[Option<PolyForm<T>>], k: usize) -> Result<()> {
    let n = ys.len() - 1;
    if n < 1 || k > n || ys[k].is_some() {
        return Err(Error::IncompatibleHorn(format!(
            "horn index {k} for {n}-simplex"
        )));
    }
    for (j, y) in ys.iter().enumerate() {
        match y {
            None if j != k => return Err(Error::IncompatibleHorn(format!("face {j} missing"))),
            Some(y) if y.dim() != n - 1 => {
                return Err(Error::IncompatibleHorn(format!(
                    "face {j} has wrong dimension"
                )))
            }
            _ => {}
        }
    }
    if n < 2 {
        return Ok(());
    }
    for j in 0..=n {
        for i in 0..j {
            let (Some(yi), Some(yj)) = (&ys[i], &ys[j]) else {
                continue;
            };
            let a = yj.face(i);
            let b = yi.face(j - 1);
            if mismatch(&a, &b) > exact_tolerance(&a) {
                return Err(Error::IncompatibleHorn(format!(
                    "faces {i} and {j} disagree on their common face"
                )));
            }
        }
    }
    Ok(())
}

/// Moore's filler for the horn with `ys[k] = None`: returns `w` with `d_i w = y_i`.
pub fn moore_fill<T: Scalar>(ys: &[Option<PolyForm<T>>], k: usize) -> Result<PolyForm<T>> {
    check_horn(ys, k)?;
    let n = ys.len() - 1;
    if k == n {
        let y: Vec<&PolyForm<T>> = ys[..n].iter().map(|y| y.as_ref().unwrap()).collect();
        return Ok(moore_last(&y));
    }
    // relabel so the missing face is the last one: g(j) = j (j<k), j+1 (k<=j<n), g(n) = k
    let g: Vec<usize> = (0..=n)
        .map(|j| {
            if j < k {
                j
            } else if j < n {
                j + 1
            } else {
                k
            }
        })
        .collect();
    let mut yp = Vec::with_capacity(n);
    for j in 0..n {
        let list: Vec<usize> = (0..=n).filter(|&m| m != j).map(|m| g[m]).collect();
        let p = g[j];
        let sorted: Vec<usize> = (0..=n).filter(|&m| m != p).collect();
        let perm: Vec<usize> = list
            .iter()
            .map(|v| sorted.iter().position(|s| s == v).unwrap())
            .collect();
        yp.push(ys[p].as_ref().unwrap().pullback_vertices(&perm)?);
    }
    let refs: Vec<&PolyForm<T>> = yp.iter().collect();
    let wp = moore_last(&refs);
    let mut ginv = vec![0; n + 1];
    for (j, &gj) in g.iter().enumerate() {
        ginv[gj] = j;
    }
    wp.pullback_vertices(&ginv)
}

fn moore_last<T: Scalar>(y: &[&PolyForm<T>]) -> PolyForm<T> {
    let mut w = y[0].degeneracy(0);
    for i in 1..y.len() {
        let corr = w.face(i).degeneracy(i);
        w = w.sub(&corr).add(&y[i].degeneracy(i));
    }
    w
}

/// Report from a horn fill.
#[derive(Clone, Debug)]
pub struct HornFill {
    pub solution: MCSolution,
    /// Largest coefficient mismatch between the filler's faces and the inputs.
    pub face_error: f64,
}

/// Fill a horn of MC forms: Kuranishi facewise at vertex `k`, fill the
/// closed forms linearly, then invert the Kuranishi map at `k`.
pub fn horn_fill_big(
    dg: &ChartedDgManifold,
    faces: &[Option<PolyForm<f64>>],
    k: usize,
    tol: &Tolerances,
) -> Result<HornFill> {
    check_horn(faces, k)?;
    let n = faces.len() - 1;
    for (j, f) in faces.iter().enumerate() {
        if let Some(a) = f {
            let (_, r) = mc::mc_residual(dg, a)?;
            if r.value > tol.mc_tol {
                return Err(Error::IncompatibleHorn(format!(
                    "face {j} is not MC (residual {:e})",
                    r.value
                )));
            }
        }
    }
    let closed: Vec<Option<PolyForm<f64>>> = faces
        .iter()
        .enumerate()
        .map(|(j, f)| {
            f.as_ref().map(|a| {
                let kk = if k < j { k } else { k - 1 };
                mc::kuranishi_at(dg, &a.rebase(mc::exact_cap(dg, a.cap())), kk).map(|y| {
                    // the face is MC only to tolerance, so its image is closed only to tolerance
                    gauge_project_pi(&y).rebase(a.cap())
                })
            })
        })
        .map(|r| r.transpose())
        .collect::<Result<_>>()?;
    let mut b = moore_fill(&closed, k)?;
    b.clear_truncation();
    let sol = mc::kuranishi_inverse_at(dg, &b, k, tol)?;
    let mut face_error: f64 = 0.0;
    for j in 0..=n {
        if let Some(a) = &faces[j] {
            face_error = face_error.max(mismatch(&sol.form.face(j), a));
        }
    }
    Ok(HornFill {
        solution: sol,
        face_error,
    })
}
