//! Polynomial differential forms on the standard simplex.
//!
//! The simplex Δⁿ sits in Rⁿ with vertex 0 at the origin and vertex `i` at
//! the unit vector `e_i`. Coordinates are `x_1..x_n` (stored 0-based) and
//! barycentrics are `t_0 = 1 - Σx`, `t_i = x_i`. A scalar form keeps one
//! [`Poly`] per monomial `dx^J`, indexed by the bitmask of `J`.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::poly::{Basis, Poly, MAX_VARS};
use crate::scalar::Scalar;

/// Sign of `dx^a ∧ dx^b` relative to `dx^(a|b)`; `None` when they overlap.
pub fn wedge_sign(a: usize, b: usize) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut inv = 0u32;
    let mut bb = b;
    while bb != 0 {
        let low = bb.trailing_zeros();
        inv += (a >> (low + 1)).count_ones();
        bb &= bb - 1;
    }
    Some(inv % 2 == 1)
}

fn bits(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize)
        .filter(|&j| mask >> j & 1 == 1)
        .collect()
}

/// An affine map `x = M y + b` from the m-simplex frame to the n-simplex frame.
#[derive(Clone, Debug)]
pub struct AffineMap<T: Scalar = f64> {
    pub src_dim: usize,
    pub dst_dim: usize,
    /// `dst_dim` rows, `src_dim` columns.
    pub mat: Vec<Vec<T>>,
    pub off: Vec<T>,
}

impl<T: Scalar> AffineMap<T> {
    /// Affine extension of a vertex map `j -> vertices[j]` of Δᵐ into Δⁿ.
    pub fn from_vertices(vertices: &[usize], n: usize) -> Result<Self> {
        if vertices.is_empty() || vertices.iter().any(|&v| v > n) {
            return Err(Error::BadIndices(format!(
                "vertex list {vertices:?} does not map into a {n}-simplex"
            )));
        }
        let m = vertices.len() - 1;
        let point = |v: usize| -> Vec<T> {
            (0..n)
                .map(|r| {
                    if v > 0 && r + 1 == v {
                        T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect()
        };
        let off = point(vertices[0]);
        let mut mat = vec![vec![T::zero(); m]; n];
        for j in 1..=m {
            let p = point(vertices[j]);
            for r in 0..n {
                mat[r][j - 1] = p[r].clone() - off[r].clone();
            }
        }
        Ok(AffineMap {
            src_dim: m,
            dst_dim: n,
            mat,
            off,
        })
    }

    pub fn identity(n: usize) -> Self {
        let v: Vec<usize> = (0..=n).collect();
        Self::from_vertices(&v, n).expect("identity vertex map")
    }

    /// Minor with rows `rows` (dst bits) and columns `cols` (src bits).
    fn minor(&self, rows: &[usize], cols: &[usize]) -> T {
        det(&rows
            .iter()
            .map(|&r| cols.iter().map(|&c| self.mat[r][c].clone()).collect())
            .collect::<Vec<Vec<T>>>())
    }
}

fn det<T: Scalar>(m: &[Vec<T>]) -> T {
    match m.len() {
        0 => T::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone(),
        k => {
            let mut acc = T::zero();
            for c in 0..k {
                if m[0][c].is_zero() {
                    continue;
                }
                let sub: Vec<Vec<T>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != c)
                            .map(|(_, x)| x.clone())
                            .collect()
                    })
                    .collect();
                let t = m[0][c].clone() * det(&sub);
                acc = if c % 2 == 0 { acc + t } else { acc - t };
            }
            acc
        }
    }
}

/// Precomputed images of every source monomial under an affine substitution.
struct MonomialImages<T: Scalar> {
    images: Vec<Poly<T>>,
}

impl<T: Scalar> MonomialImages<T> {
    /// Images of the monomials of degree at most `max_deg` (the basis is graded).
    fn new(map: &AffineMap<T>, from: &Basis, to: &Basis, max_deg: usize) -> Self {
        let mut images: Vec<Poly<T>> = Vec::with_capacity(from.len());
        for i in 0..from.len() {
            if from.degree_of(i) > max_deg {
                break;
            }
            let e = *from.exps(i);
            if i == 0 {
                images.push(Poly::constant(to, T::one()));
                continue;
            }
            let v = (0..from.nvars()).find(|&v| e[v] > 0).unwrap();
            let mut pe = e;
            pe[v] -= 1;
            let parent = &images[from.index_of(&pe).unwrap()];
            let mut img = parent.scale(&map.off[v]);
            for k in 0..map.src_dim {
                if !map.mat[v][k].is_zero() {
                    let (t, _) = parent.mul_var(k, to);
                    img.add_scaled(&t, &map.mat[v][k]);
                }
            }
            images.push(img);
        }
        MonomialImages { images }
    }

    fn apply(&self, p: &Poly<T>) -> Poly<T> {
        let mut out = Poly::zero();
        for (i, c) in p.nonzero() {
            out.add_scaled(&self.images[i], c);
        }
        out
    }
}

/// A real-valued polynomial differential form on Δⁿ.
#[derive(Clone)]
pub struct ScalarForm<T: Scalar = f64> {
    n: usize,
    basis: Arc<Basis>,
    comps: Vec<Poly<T>>,
    truncated: bool,
}

impl<T: Scalar> std::fmt::Debug for ScalarForm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut terms = Vec::new();
        for (mask, p) in self.comps.iter().enumerate() {
            for (i, c) in p.nonzero() {
                let e = &self.basis.exps(i)[..self.n];
                terms.push(format!("{c:?}*x{e:?}*dx{:?}", bits(mask)));
            }
        }
        write!(f, "ScalarForm(n={}, [{}])", self.n, terms.join(" + "))
    }
}

impl<T: Scalar> PartialEq for ScalarForm<T> {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.basis.cap() == o.basis.cap() && self.comps == o.comps
    }
}

impl<T: Scalar> ScalarForm<T> {
    pub fn zero(n: usize, cap: usize) -> Self {
        assert!(n <= MAX_VARS);
        ScalarForm {
            n,
            basis: Basis::get(n, cap),
            comps: vec![Poly::zero(); 1 << n],
            truncated: false,
        }
    }

    pub fn constant(n: usize, cap: usize, v: T) -> Self {
        let mut f = Self::zero(n, cap);
        f.comps[0] = Poly::constant(&f.basis, v);
        f
    }

    /// `coeff * x^exps dx^mask`
    pub fn monomial(n: usize, cap: usize, mask: usize, exps: &[u8], coeff: T) -> Self {
        let mut f = Self::zero(n, cap);
        let mut e = [0u8; MAX_VARS];
        e[..exps.len()].copy_from_slice(exps);
        f.comps[mask] = Poly::monomial(&f.basis, &e, coeff);
        f
    }

    /// The coordinate function `x_v` (0-based).
    pub fn coord(n: usize, cap: usize, v: usize) -> Self {
        let mut f = Self::zero(n, cap);
        f.comps[0] = Poly::var(&f.basis, v);
        f
    }

    /// The 1-form `dx_v` (0-based).
    pub fn dcoord(n: usize, cap: usize, v: usize) -> Self {
        let mut f = Self::zero(n, cap);
        f.comps[1 << v] = Poly::constant(&f.basis, T::one());
        f
    }

    /// Barycentric coordinate `t_i`.
    pub fn barycentric(n: usize, cap: usize, i: usize) -> Self {
        if i > 0 {
            return Self::coord(n, cap, i - 1);
        }
        let mut f = Self::constant(n, cap, T::one());
        for v in 0..n {
            f = f.sub(&Self::coord(n, cap, v));
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.basis.cap()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn mark_truncated(&mut self, t: bool) {
        self.truncated |= t;
    }

    pub fn comp(&self, mask: usize) -> &Poly<T> {
        &self.comps[mask]
    }

    pub fn set_comp(&mut self, mask: usize, p: Poly<T>) {
        self.comps[mask] = p;
    }

    pub fn comps(&self) -> &[Poly<T>] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|p| p.is_zero())
    }

    /// Keep only the form-degree `k` part.
    pub fn part(&self, k: usize) -> Self {
        let mut out = self.clone();
        for (mask, p) in out.comps.iter_mut().enumerate() {
            if mask.count_ones() as usize != k {
                *p = Poly::zero();
            }
        }
        out
    }

    fn check(&self, o: &Self) {
        assert_eq!(self.n, o.n, "simplex dimension mismatch");
        assert_eq!(self.cap(), o.cap(), "degree cap mismatch");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        ScalarForm {
            n: self.n,
            basis: self.basis.clone(),
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
            truncated: self.truncated || o.truncated,
        }
    }

    pub fn add_assign(&mut self, o: &Self) {
        self.check(o);
        for (a, b) in self.comps.iter_mut().zip(&o.comps) {
            a.add_assign(b);
        }
        self.truncated |= o.truncated;
    }

    pub fn add_scaled(&mut self, o: &Self, s: &T) {
        self.check(o);
        for (a, b) in self.comps.iter_mut().zip(&o.comps) {
            a.add_scaled(b, s);
        }
        self.truncated |= o.truncated;
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|p| p.neg())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|p| p.scale(s))
    }

    fn map(&self, f: impl Fn(&Poly<T>) -> Poly<T>) -> Self {
        ScalarForm {
            n: self.n,
            basis: self.basis.clone(),
            comps: self.comps.iter().map(f).collect(),
            truncated: self.truncated,
        }
    }

    /// Exterior derivative.
    pub fn d(&self) -> Self {
        let mut out = Self::zero(self.n, self.cap());
        out.truncated = self.truncated;
        for (mask, p) in self.comps.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for v in 0..self.n {
                if mask >> v & 1 == 1 {
                    continue;
                }
                let dp = p.deriv(v, &self.basis);
                if dp.is_zero() {
                    continue;
                }
                let target = mask | 1 << v;
                if (mask & ((1 << v) - 1)).count_ones() % 2 == 1 {
                    out.comps[target].add_assign(&dp.neg());
                } else {
                    out.comps[target].add_assign(&dp);
                }
            }
        }
        out
    }

    /// Wedge product, truncated at the cap.
    pub fn wedge(&self, o: &Self) -> Self {
        self.check(o);
        let mut out = Self::zero(self.n, self.cap());
        out.truncated = self.truncated || o.truncated;
        for (ma, pa) in self.comps.iter().enumerate() {
            if pa.is_zero() {
                continue;
            }
            for (mb, pb) in o.comps.iter().enumerate() {
                if pb.is_zero() {
                    continue;
                }
                let Some(neg) = wedge_sign(ma, mb) else {
                    continue;
                };
                let (prod, t) = pa.mul(pb, &self.basis);
                out.truncated |= t;
                if neg {
                    out.comps[ma | mb].add_assign(&prod.neg());
                } else {
                    out.comps[ma | mb].add_assign(&prod);
                }
            }
        }
        out
    }

    /// Multiply by a function given as a polynomial.
    pub fn mul_function(&self, f: &Poly<T>) -> Self {
        let mut out = self.clone();
        for p in out.comps.iter_mut() {
            if p.is_zero() {
                continue;
            }
            let (q, t) = p.mul(f, &self.basis);
            out.truncated |= t;
            *p = q;
        }
        out
    }

    /// Pullback along an affine map whose target is this form's simplex.
    pub fn pullback(&self, map: &AffineMap<T>) -> Self {
        assert_eq!(map.dst_dim, self.n, "pullback target dimension mismatch");
        let m = map.src_dim;
        let mut out = Self::zero(m, self.cap());
        out.truncated = self.truncated;
        if self.is_zero() {
            return out;
        }
        let images = MonomialImages::new(map, &self.basis, &out.basis, self.poly_degree());
        for (mask, p) in self.comps.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let k = mask.count_ones() as usize;
            if k > m {
                continue;
            }
            let g = images.apply(p);
            if g.is_zero() {
                continue;
            }
            let rows = bits(mask);
            for kmask in 0..(1usize << m) {
                if kmask.count_ones() as usize != k {
                    continue;
                }
                let dm = map.minor(&rows, &bits(kmask));
                if !dm.is_zero() {
                    out.comps[kmask].add_scaled(&g, &dm);
                }
            }
        }
        out
    }

    pub fn pullback_vertices(&self, vertices: &[usize]) -> Result<Self> {
        Ok(self.pullback(&AffineMap::from_vertices(vertices, self.n)?))
    }

    /// Translate so that `x -> x + c e_v` (used to move a vertex to the origin).
    fn translate(&self, v: usize, c: &T) -> Self {
        self.map(|p| p.shift(v, c, &self.basis))
    }

    /// Radial homotopy contracting onto vertex `vertex`.
    ///
    /// `h(x^a dx^{j_1..j_k}) = (|a|+k)^-1 Σ_r (-1)^(r-1) x_{j_r} x^a dx^{..ĵ_r..}`
    /// in coordinates centred at the vertex.
    pub fn homotopy(&self, vertex: usize) -> Self {
        assert!(vertex <= self.n, "vertex out of range");
        if vertex == 0 {
            return self.homotopy_origin();
        }
        let v = vertex - 1;
        self.translate(v, &T::one())
            .homotopy_origin()
            .translate(v, &-T::one())
    }

    fn homotopy_origin(&self) -> Self {
        let b = &self.basis;
        let mut out = Self::zero(self.n, self.cap());
        out.truncated = self.truncated;
        for (mask, p) in self.comps.iter().enumerate() {
            let k = mask.count_ones() as usize;
            if k == 0 || p.is_zero() {
                continue;
            }
            let g = p.map_monomials(|i| T::one() / T::from_int((b.degree_of(i) + k) as i64));
            for (r, j) in bits(mask).into_iter().enumerate() {
                let (t, tr) = g.mul_var(j, b);
                out.truncated |= tr;
                let target = mask & !(1 << j);
                if r % 2 == 0 {
                    out.comps[target].add_assign(&t);
                } else {
                    out.comps[target].add_assign(&t.neg());
                }
            }
        }
        out
    }

    /// Value of the 0-form part at a vertex.
    pub fn vertex_value(&self, vertex: usize) -> T {
        let mut e = [0u8; MAX_VARS];
        if vertex == 0 {
            return self.comps[0].coeff(0);
        }
        let mut acc = T::zero();
        for (i, c) in self.comps[0].nonzero() {
            e.copy_from_slice(self.basis.exps(i));
            if e.iter()
                .enumerate()
                .all(|(v, &a)| a == 0 || v + 1 == vertex)
            {
                acc = acc + c.clone();
            }
        }
        acc
    }

    /// Integral of the top-degree part over Δⁿ (positively oriented).
    pub fn integrate_top(&self) -> T {
        let top = (1usize << self.n) - 1;
        let mut acc = T::zero();
        for (i, c) in self.comps[top].nonzero() {
            acc = acc + c.clone() * T::dirichlet_weight(&self.basis, i);
        }
        acc
    }

    /// Integral over the oriented subsimplex spanned by `vertices`.
    pub fn integrate_over(&self, vertices: &[usize]) -> Result<T> {
        Ok(self.pullback_vertices(vertices)?.integrate_top())
    }

    pub fn eval(&self, mask: usize, point: &[f64]) -> f64 {
        self.comps[mask].eval(&self.basis, point)
    }

    /// Sup of |coefficient function| over the lattice of resolution 8.
    pub fn lattice_sup(&self) -> f64 {
        let pts = lattice_points(self.n, NORM_RESOLUTION);
        let mut best = 0.0f64;
        for p in &self.comps {
            if p.is_zero() {
                continue;
            }
            for x in &pts {
                best = best.max(p.eval(&self.basis, x).abs());
            }
        }
        best
    }

    pub fn max_coeff(&self) -> f64 {
        self.comps.iter().map(|p| p.max_abs()).fold(0.0, f64::max)
    }

    /// Re-express with another cap.
    pub fn rebase(&self, cap: usize) -> Self {
        let to = Basis::get(self.n, cap);
        let mut truncated = self.truncated;
        let comps = self
            .comps
            .iter()
            .map(|p| {
                let (q, t) = p.rebase(&self.basis, &to);
                truncated |= t;
                q
            })
            .collect();
        ScalarForm {
            n: self.n,
            basis: to,
            comps,
            truncated,
        }
    }

    pub fn to_f64(&self) -> ScalarForm<f64> {
        ScalarForm {
            n: self.n,
            basis: self.basis.clone(),
            comps: self.comps.iter().map(|p| p.to_f64()).collect(),
            truncated: self.truncated,
        }
    }

    pub fn chop(&self, eps: f64) -> Self {
        self.map(|p| p.chop(eps))
    }

    /// Highest x-degree present.
    pub fn poly_degree(&self) -> usize {
        self.comps
            .iter()
            .filter_map(|p| p.degree(&self.basis))
            .max()
            .unwrap_or(0)
    }
}

pub const NORM_RESOLUTION: usize = 8;

/// Points `k/res` with `Σk <= res` in Δⁿ.
pub fn lattice_points(n: usize, res: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(v: usize, left: usize, res: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if v == cur.len() {
            out.push(cur.iter().map(|&k| k as f64 / res as f64).collect());
            return;
        }
        for k in 0..=left {
            cur[v] = k;
            rec(v + 1, left - k, res, cur, out);
        }
    }
    rec(0, res, res, &mut cur, &mut out);
    out
}

/// Lattice sup-norm (the only norm scheme used).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormNorm {
    pub value: f64,
}

impl FormNorm {
    pub const SCHEME: &'static str = "lattice-sup";
}

/// A W-valued form: one scalar form per graded coordinate.
///
/// Component `i` of a form of total degree `q` lives in form degree
/// `wdeg[i] + q`.
#[derive(Clone, Debug)]
pub struct PolyForm<T: Scalar = f64> {
    wdeg: Arc<Vec<usize>>,
    degree: i32,
    comps: Vec<ScalarForm<T>>,
}

impl<T: Scalar> PartialEq for PolyForm<T> {
    fn eq(&self, o: &Self) -> bool {
        self.wdeg == o.wdeg && self.degree == o.degree && self.comps == o.comps
    }
}

impl<T: Scalar> PolyForm<T> {
    pub fn zero(wdeg: Arc<Vec<usize>>, n: usize, cap: usize, degree: i32) -> Self {
        let comps = (0..wdeg.len()).map(|_| ScalarForm::zero(n, cap)).collect();
        PolyForm {
            wdeg,
            degree,
            comps,
        }
    }

    /// Build from components, discarding parts of the wrong form degree.
    pub fn from_comps(wdeg: Arc<Vec<usize>>, degree: i32, comps: Vec<ScalarForm<T>>) -> Self {
        assert_eq!(wdeg.len(), comps.len());
        let comps = comps
            .into_iter()
            .zip(wdeg.iter())
            .map(|(c, &w)| {
                let k = w as i32 + degree;
                if k < 0 || k as usize > c.dim() {
                    let mut z = ScalarForm::zero(c.dim(), c.cap());
                    z.mark_truncated(c.truncated());
                    z
                } else {
                    c.part(k as usize)
                }
            })
            .collect();
        PolyForm {
            wdeg,
            degree,
            comps,
        }
    }

    pub fn wdeg(&self) -> &Arc<Vec<usize>> {
        &self.wdeg
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.comps[0].dim()
    }

    pub fn cap(&self) -> usize {
        self.comps[0].cap()
    }

    pub fn rank(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, i: usize) -> &ScalarForm<T> {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[ScalarForm<T>] {
        &self.comps
    }

    pub fn set_comp(&mut self, i: usize, f: ScalarForm<T>) {
        let k = self.wdeg[i] as i32 + self.degree;
        self.comps[i] = if k < 0 {
            ScalarForm::zero(f.dim(), f.cap())
        } else {
            f.part(k as usize)
        };
    }

    /// Form degree carried by component `i`, if it fits on the simplex.
    pub fn form_degree(&self, i: usize) -> Option<usize> {
        let k = self.wdeg[i] as i32 + self.degree;
        (k >= 0 && k as usize <= self.dim()).then_some(k as usize)
    }

    pub fn truncated(&self) -> bool {
        self.comps.iter().any(|c| c.truncated())
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    fn zip(&self, o: &Self, f: impl Fn(&ScalarForm<T>, &ScalarForm<T>) -> ScalarForm<T>) -> Self {
        assert_eq!(self.degree, o.degree, "total degree mismatch");
        assert_eq!(self.wdeg, o.wdeg, "coordinate system mismatch");
        PolyForm {
            wdeg: self.wdeg.clone(),
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    fn map(&self, degree: i32, f: impl Fn(&ScalarForm<T>) -> ScalarForm<T>) -> Self {
        PolyForm::from_comps(
            self.wdeg.clone(),
            degree,
            self.comps.iter().map(f).collect(),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn add_scaled(&mut self, o: &Self, s: &T) {
        assert_eq!(self.degree, o.degree, "total degree mismatch");
        for (a, b) in self.comps.iter_mut().zip(&o.comps) {
            a.add_scaled(b, s);
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(self.degree, |a| a.scale(s))
    }

    pub fn neg(&self) -> Self {
        self.map(self.degree, |a| a.neg())
    }

    pub fn d(&self) -> Self {
        self.map(self.degree + 1, |a| a.d())
    }

    pub fn homotopy(&self, vertex: usize) -> Self {
        self.map(self.degree - 1, |a| a.homotopy(vertex))
    }

    pub fn pullback(&self, map: &AffineMap<T>) -> Self {
        self.map(self.degree, |a| a.pullback(map))
    }

    pub fn pullback_vertices(&self, vertices: &[usize]) -> Result<Self> {
        let map = AffineMap::from_vertices(vertices, self.dim())?;
        Ok(self.pullback(&map))
    }

    /// Face map `d_p`: restrict to the face opposite vertex `p`.
    pub fn face(&self, p: usize) -> Self {
        let v: Vec<usize> = (0..=self.dim()).filter(|&j| j != p).collect();
        self.pullback_vertices(&v).expect("face vertices")
    }

    /// Degeneracy `s_i`: pull back along Δⁿ⁺¹ -> Δⁿ collapsing `i, i+1`.
    pub fn degeneracy(&self, i: usize) -> Self {
        let n = self.dim();
        let v: Vec<usize> = (0..=n + 1)
            .map(|j| if j <= i { j } else { j - 1 })
            .collect();
        self.pullback_vertices(&v).expect("degeneracy vertices")
    }

    /// Wedge a scalar form on the left of every component.
    pub fn left_mul(&self, f: &ScalarForm<T>, fdeg: usize) -> Self {
        self.map(self.degree + fdeg as i32, |a| f.wedge(a))
    }

    /// Integral of each component over the subsimplex `vertices`.
    pub fn integrate(&self, vertices: &[usize]) -> Result<Vec<T>> {
        let map = AffineMap::from_vertices(vertices, self.dim())?;
        let k = vertices.len() - 1;
        Ok((0..self.rank())
            .map(|i| {
                if self.form_degree(i) != Some(k) {
                    T::zero()
                } else {
                    self.comps[i].pullback(&map).integrate_top()
                }
            })
            .collect())
    }

    pub fn norm(&self) -> FormNorm {
        FormNorm {
            value: self
                .comps
                .iter()
                .map(|c| c.lattice_sup())
                .fold(0.0, f64::max),
        }
    }

    pub fn max_coeff(&self) -> f64 {
        self.comps.iter().map(|c| c.max_coeff()).fold(0.0, f64::max)
    }

    pub fn rebase(&self, cap: usize) -> Self {
        self.map(self.degree, |a| a.rebase(cap))
    }

    pub fn chop(&self, eps: f64) -> Self {
        self.map(self.degree, |a| a.chop(eps))
    }

    pub fn to_f64(&self) -> PolyForm<f64> {
        PolyForm {
            wdeg: self.wdeg.clone(),
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.to_f64()).collect(),
        }
    }

    pub fn clear_truncation(&mut self) {
        for c in self.comps.iter_mut() {
            c.truncated = false;
        }
    }

    pub fn poly_degree(&self) -> usize {
        self.comps
            .iter()
            .map(|c| c.poly_degree())
            .max()
            .unwrap_or(0)
    }

    /// Vertex values of the degree-0 part of each component.
    pub fn vertex_values(&self, vertex: usize) -> Vec<T> {
        self.comps.iter().map(|c| c.vertex_value(vertex)).collect()
    }
}

impl PolyForm<f64> {
    /// Flat text table: `xi, J, exponents, coefficient`.
    pub fn to_table(&self, names: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# n = {}", self.dim());
        let _ = writeln!(s, "# degree = {}", self.degree);
        let _ = writeln!(s, "# cap = {}", self.cap());
        for (i, c) in self.comps.iter().enumerate() {
            for (mask, p) in c.comps().iter().enumerate() {
                for (m, v) in p.nonzero() {
                    let j: Vec<String> = bits(mask).iter().map(|b| (b + 1).to_string()).collect();
                    let j = if j.is_empty() {
                        "-".to_string()
                    } else {
                        j.join(" ")
                    };
                    let e: Vec<String> = c.basis().exps(m)[..self.dim()]
                        .iter()
                        .map(|x| x.to_string())
                        .collect();
                    let e = if e.is_empty() {
                        "-".to_string()
                    } else {
                        e.join(" ")
                    };
                    let _ = writeln!(s, "{}, {}, {}, {:?}", names[i], j, e, v);
                }
            }
        }
        s
    }

    pub fn from_table(text: &str, names: &[String], wdeg: Arc<Vec<usize>>) -> Result<Self> {
        let mut n = None;
        let mut degree = None;
        let mut cap = None;
        let mut rows = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                line: ln + 1,
                col: 1,
                msg,
            };
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.split_once('=') {
                    let v: i64 = v
                        .trim()
                        .parse()
                        .map_err(|_| perr(format!("bad header value {v:?}")))?;
                    match k.trim() {
                        "n" => n = Some(v as usize),
                        "degree" => degree = Some(v as i32),
                        "cap" => cap = Some(v as usize),
                        _ => {}
                    }
                }
                continue;
            }
            let f: Vec<&str> = line.split(',').map(|x| x.trim()).collect();
            if f.len() != 4 {
                return Err(perr("expected 4 comma-separated fields".into()));
            }
            let i = names
                .iter()
                .position(|nm| nm == f[0])
                .ok_or_else(|| perr(format!("unknown coordinate {:?}", f[0])))?;
            let mut mask = 0usize;
            if f[1] != "-" {
                for t in f[1].split_whitespace() {
                    let j: usize = t.parse().map_err(|_| perr(format!("bad index {t:?}")))?;
                    if j == 0 {
                        return Err(perr("form indices are 1-based".into()));
                    }
                    mask |= 1 << (j - 1);
                }
            }
            let mut e = [0u8; MAX_VARS];
            if f[2] != "-" {
                for (v, t) in f[2].split_whitespace().enumerate() {
                    if v >= MAX_VARS {
                        return Err(perr("too many exponents".into()));
                    }
                    e[v] = t.parse().map_err(|_| perr(format!("bad exponent {t:?}")))?;
                }
            }
            let c: f64 = f[3]
                .parse()
                .map_err(|_| perr(format!("bad coefficient {:?}", f[3])))?;
            rows.push((i, mask, e, c, ln + 1));
        }
        let n = n.ok_or_else(|| Error::Parse {
            line: 1,
            col: 1,
            msg: "missing `# n` header".into(),
        })?;
        let degree = degree.unwrap_or(0);
        let cap = cap.unwrap_or(crate::config::DEFAULT_CAP);
        let mut comps: Vec<ScalarForm<f64>> =
            (0..names.len()).map(|_| ScalarForm::zero(n, cap)).collect();
        for (i, mask, e, c, line) in rows {
            if mask >= 1 << n {
                return Err(Error::Parse {
                    line,
                    col: 1,
                    msg: "form index exceeds simplex dimension".into(),
                });
            }
            let m = ScalarForm::monomial(n, cap, mask, &e, c);
            if m.is_zero() && c != 0.0 {
                return Err(Error::Parse {
                    line,
                    col: 1,
                    msg: "monomial exceeds degree cap".into(),
                });
            }
            comps[i].add_assign(&m);
        }
        Ok(PolyForm::from_comps(wdeg, degree, comps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    #[test]
    fn d_of_x_dy() {
        let f = ScalarForm::<f64>::coord(2, 4, 0).wedge(&ScalarForm::dcoord(2, 4, 1));
        let dxdy = ScalarForm::dcoord(2, 4, 0).wedge(&ScalarForm::dcoord(2, 4, 1));
        assert_eq!(f.d(), dxdy);
    }

    #[test]
    fn d_of_t0() {
        let t0 = ScalarForm::<f64>::barycentric(2, 4, 0);
        let want = ScalarForm::dcoord(2, 4, 0)
            .add(&ScalarForm::dcoord(2, 4, 1))
            .neg();
        assert_eq!(t0.d(), want);
    }

    #[test]
    fn wedge_antisymmetry() {
        let dx = ScalarForm::<f64>::dcoord(2, 4, 0);
        let dy = ScalarForm::<f64>::dcoord(2, 4, 1);
        assert_eq!(dx.wedge(&dy), dy.wedge(&dx).neg());
    }

    #[test]
    fn homotopy_examples() {
        let dx = ScalarForm::<Q>::dcoord(1, 4, 0);
        assert_eq!(dx.homotopy(0), ScalarForm::coord(1, 4, 0));
        let dxdy = ScalarForm::<Q>::dcoord(2, 4, 0).wedge(&ScalarForm::dcoord(2, 4, 1));
        let half = Q::new(1.into(), 2.into());
        let x = ScalarForm::<Q>::coord(2, 4, 0);
        let y = ScalarForm::<Q>::coord(2, 4, 1);
        let want = x
            .wedge(&ScalarForm::dcoord(2, 4, 1))
            .sub(&y.wedge(&ScalarForm::dcoord(2, 4, 0)))
            .scale(&half);
        assert_eq!(dxdy.homotopy(0), want);
    }

    #[test]
    fn integral_of_x_over_triangle() {
        let f = ScalarForm::<Q>::monomial(2, 4, 0b11, &[1, 0], Q::from_integer(1.into()));
        assert_eq!(f.integrate_top(), Q::new(1.into(), 6.into()));
    }

    #[test]
    fn face_kills_transverse_differential() {
        // face x_2 = 0 of the triangle is the edge through vertices 0,1
        let dy = ScalarForm::<f64>::dcoord(2, 4, 1);
        assert!(dy.pullback_vertices(&[0, 1]).unwrap().is_zero());
    }

    #[test]
    fn norm_of_coordinate() {
        assert_eq!(ScalarForm::<f64>::coord(1, 4, 0).lattice_sup(), 1.0);
    }
}
