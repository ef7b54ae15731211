//! Graded coordinates, polynomials in them, and dg charts.
//!
//! Coordinates of degree 0 behave as ordinary commuting variables and only
//! appear in coefficients; positive-degree coordinates form the graded part of
//! a monomial, stored sorted ascending with Koszul signs applied on entry.
//! All derivatives are left derivatives.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::symplectic::PreSymplecticData;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedCoordSystem {
    names: Vec<String>,
    degrees: Vec<usize>,
    /// Coordinate indices of the degree-0 coordinates, in order.
    zero: Vec<usize>,
    /// Position among degree-0 coordinates, for each coordinate.
    zero_pos: Vec<Option<usize>>,
}

impl GradedCoordSystem {
    pub fn new(coords: Vec<(String, usize)>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidChart("no coordinates".into()));
        }
        let mut names = Vec::new();
        let mut degrees = Vec::new();
        for (n, d) in coords {
            if names.contains(&n) {
                return Err(Error::InvalidChart(format!("duplicate coordinate {n:?}")));
            }
            names.push(n);
            degrees.push(d);
        }
        if degrees.iter().all(|&d| d == 0) {
            return Err(Error::InvalidChart(
                "at least one coordinate of positive degree is required".into(),
            ));
        }
        let zero: Vec<usize> = (0..degrees.len()).filter(|&i| degrees[i] == 0).collect();
        let mut zero_pos = vec![None; degrees.len()];
        for (p, &i) in zero.iter().enumerate() {
            zero_pos[i] = Some(p);
        }
        Ok(GradedCoordSystem {
            names,
            degrees,
            zero,
            zero_pos,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Maximal coordinate degree.
    pub fn ell(&self) -> usize {
        *self.degrees.iter().max().unwrap()
    }

    /// Number of coordinates in each degree `0..=ell`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![0; self.ell() + 1];
        for &k in &self.degrees {
            d[k] += 1;
        }
        d
    }

    pub fn zero_coords(&self) -> &[usize] {
        &self.zero
    }

    pub fn zero_pos(&self, i: usize) -> Option<usize> {
        self.zero_pos[i]
    }

    pub fn wdeg(&self) -> Arc<Vec<usize>> {
        Arc::new(self.degrees.clone())
    }
}

/// Product of intervals, one per degree-0 coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenBox {
    pub bounds: Vec<(f64, f64)>,
}

impl OpenBox {
    pub fn unbounded(k: usize) -> Self {
        OpenBox {
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); k],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(&v, &(lo, hi))| v > lo && v < hi)
    }

    /// Shrink every finite interval by `frac` of its width, split evenly.
    pub fn shrunk(&self, frac: f64) -> Self {
        OpenBox {
            bounds: self
                .bounds
                .iter()
                .map(|&(lo, hi)| {
                    if lo.is_finite() && hi.is_finite() {
                        let w = (hi - lo) * frac / 2.0;
                        (lo + w, hi - w)
                    } else {
                        (lo, hi)
                    }
                })
                .collect(),
        }
    }

    /// Midpoint, with 0 (clamped) along unbounded directions.
    pub fn center(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (lo + hi) / 2.0,
                (true, false) => lo.max(0.0) + if lo >= 0.0 { 1.0 } else { 0.0 },
                (false, true) => hi.min(0.0) - if hi <= 0.0 { 1.0 } else { 0.0 },
                (false, false) => 0.0,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    /// Positive-degree coordinate indices, ascending.
    pub xi: Vec<usize>,
    /// Exponent of each degree-0 coordinate (by position among them).
    pub x: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self, cs: &GradedCoordSystem) -> usize {
        self.xi.iter().map(|&i| cs.degree(i)).sum()
    }

    pub fn x_degree(&self) -> usize {
        self.x.iter().map(|&e| e as usize).sum()
    }
}

/// Sort graded indices ascending; returns `None` if an odd index repeats.
pub fn koszul_normalize(xi: &[usize], degrees: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut v = xi.to_vec();
    let mut neg = false;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            if degrees[v[j - 1]] % 2 == 1 && degrees[v[j]] % 2 == 1 {
                neg = !neg;
            }
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] && degrees[w[0]] % 2 == 1 {
            return None;
        }
    }
    Some((v, neg))
}

/// Polynomial in graded coordinates with rational coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct GradedPolynomial {
    cs: Arc<GradedCoordSystem>,
    terms: BTreeMap<Monomial, BigRational>,
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

impl GradedPolynomial {
    pub fn zero(cs: &Arc<GradedCoordSystem>) -> Self {
        GradedPolynomial {
            cs: cs.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(cs: &Arc<GradedCoordSystem>, c: BigRational) -> Self {
        let mut p = Self::zero(cs);
        let m = Monomial {
            xi: vec![],
            x: vec![0; cs.zero.len()],
        };
        p.add_term(m, c);
        p
    }

    /// The coordinate function of coordinate `i`.
    pub fn coord(cs: &Arc<GradedCoordSystem>, i: usize) -> Self {
        Self::term(cs, q(1), &[i])
    }

    /// `c` times the ordered product of the listed coordinates.
    pub fn term(cs: &Arc<GradedCoordSystem>, c: BigRational, factors: &[usize]) -> Self {
        let mut x = vec![0u32; cs.zero.len()];
        let mut xi = Vec::new();
        for &f in factors {
            match cs.zero_pos(f) {
                Some(p) => x[p] += 1,
                None => xi.push(f),
            }
        }
        let mut p = Self::zero(cs);
        if let Some((xi, neg)) = koszul_normalize(&xi, &cs.degrees) {
            p.add_term(Monomial { xi, x }, if neg { -c } else { c });
        }
        p
    }

    pub fn coords(&self) -> &Arc<GradedCoordSystem> {
        &self.cs
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Cohomological degree if homogeneous (`Some(0)` for the zero polynomial).
    pub fn degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(|m| m.degree(&self.cs));
        match degs.next() {
            None => Some(0),
            Some(d) => degs.all(|e| e == d).then_some(d),
        }
    }

    /// Largest number of coordinate factors (graded and degree 0) in a term.
    pub fn max_factors(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.xi.len() + m.x_degree())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.clone();
        for (m, c) in &o.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&q(-1))
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut p = Self::zero(&self.cs);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut p = Self::zero(&self.cs);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let mut xi = ma.xi.clone();
                xi.extend_from_slice(&mb.xi);
                let Some((xi, neg)) = koszul_normalize(&xi, &self.cs.degrees) else {
                    continue;
                };
                let x = ma.x.iter().zip(&mb.x).map(|(a, b)| a + b).collect();
                let c = ca * cb;
                p.add_term(Monomial { xi, x }, if neg { -c } else { c });
            }
        }
        p
    }

    /// Left partial derivative with respect to coordinate `i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut p = Self::zero(&self.cs);
        if let Some(pos) = self.cs.zero_pos(i) {
            for (m, c) in &self.terms {
                let e = m.x[pos];
                if e == 0 {
                    continue;
                }
                let mut m2 = m.clone();
                m2.x[pos] -= 1;
                p.add_term(m2, c * q(e as i64));
            }
            return p;
        }
        let di = self.cs.degree(i);
        for (m, c) in &self.terms {
            let Some(first) = m.xi.iter().position(|&k| k == i) else {
                continue;
            };
            let mult = m.xi.iter().filter(|&&k| k == i).count();
            let before: usize = m.xi[..first].iter().map(|&k| self.cs.degree(k)).sum();
            let mut m2 = m.clone();
            m2.xi.remove(first);
            let c = c * q(mult as i64);
            p.add_term(m2, if di * before % 2 == 1 { -c } else { c });
        }
        p
    }

    /// `Σ_i F^i ∂_i self`, the action of the vector field with components `fq`.
    pub fn apply_vector_field(&self, fq: &[GradedPolynomial]) -> Self {
        let mut p = Self::zero(&self.cs);
        for (i, f) in fq.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let d = self.partial(i);
            if !d.is_zero() {
                p = p.add(&f.mul(&d));
            }
        }
        p
    }

    /// Value of the part free of graded coordinates at a degree-0 point.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            if !m.xi.is_empty() {
                continue;
            }
            let mut v = c.to_f64().unwrap_or(f64::NAN);
            for (p, &e) in m.x.iter().enumerate() {
                v *= x[p].powi(e as i32);
            }
            s += v;
        }
        s
    }

    /// Exact version of [`eval_at`](Self::eval_at).
    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        let mut s = BigRational::zero();
        for (m, c) in &self.terms {
            if !m.xi.is_empty() {
                continue;
            }
            let mut v = c.clone();
            for (p, &e) in m.x.iter().enumerate() {
                for _ in 0..e {
                    v *= &x[p];
                }
            }
            s += v;
        }
        s
    }

    /// Substitute `images[i]` (polynomials over `target`) for coordinate `i`.
    pub fn substitute(&self, images: &[GradedPolynomial], target: &Arc<GradedCoordSystem>) -> Self {
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut t = Self::constant(target, c.clone());
            for (p, &e) in m.x.iter().enumerate() {
                for _ in 0..e {
                    t = t.mul(&images[self.cs.zero[p]]);
                }
            }
            for &k in &m.xi {
                t = t.mul(&images[k]);
            }
            out = out.add(&t);
        }
        out
    }

    /// Same polynomial viewed in a larger system whose first coordinates agree.
    pub fn embed(&self, target: &Arc<GradedCoordSystem>, index_map: &[usize]) -> Self {
        let images: Vec<GradedPolynomial> = index_map
            .iter()
            .map(|&j| GradedPolynomial::coord(target, j))
            .collect();
        self.substitute(&images, target)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.abs().to_f64().unwrap_or(f64::NAN))
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for GradedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let mut factors: Vec<String> = Vec::new();
            for (p, &e) in m.x.iter().enumerate() {
                let name = self.cs.name(self.cs.zero[p]);
                match e {
                    0 => {}
                    1 => factors.push(name.to_string()),
                    _ => factors.push(format!("{name}^{e}")),
                }
            }
            let mut i = 0;
            while i < m.xi.len() {
                let c = m.xi[i];
                let run = m.xi[i..].iter().take_while(|&&k| k == c).count();
                let name = self.cs.name(c);
                factors.push(if run == 1 {
                    name.to_string()
                } else {
                    format!("{name}^{run}")
                });
                i += run;
            }
            if !a.is_one() || factors.is_empty() {
                factors.insert(0, a.to_string());
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for GradedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A local dg manifold: coordinates, a box for the degree-0 ones, and `Q`.
#[derive(Clone, Debug)]
pub struct ChartedDgManifold {
    pub label: String,
    coords: Arc<GradedCoordSystem>,
    bx: OpenBox,
    fq: Vec<GradedPolynomial>,
    /// `dfq[k][i] = ∂_i F^k`
    dfq: Vec<Vec<GradedPolynomial>>,
    omega: Option<PreSymplecticData>,
}

impl ChartedDgManifold {
    /// Validate degrees and, unless `allow_unchecked`, that `Q² = 0`.
    pub fn new(
        label: impl Into<String>,
        coords: Arc<GradedCoordSystem>,
        bx: OpenBox,
        fq: Vec<GradedPolynomial>,
        omega: Option<PreSymplecticData>,
        allow_unchecked: bool,
    ) -> Result<Self> {
        if fq.len() != coords.len() {
            return Err(Error::InvalidChart(format!(
                "{} structure polynomials for {} coordinates",
                fq.len(),
                coords.len()
            )));
        }
        if bx.bounds.len() != coords.zero_coords().len() {
            return Err(Error::InvalidChart(
                "box dimension does not match W^0".into(),
            ));
        }
        for &(lo, hi) in &bx.bounds {
            if !(lo < hi) {
                return Err(Error::InvalidChart(format!("empty interval ({lo}, {hi})")));
            }
        }
        for (i, f) in fq.iter().enumerate() {
            for (m, _) in f.terms() {
                if m.degree(&coords) != coords.degree(i) + 1 {
                    return Err(Error::InvalidChart(format!(
                        "Q{} has a term of degree {}, expected {}",
                        coords.name(i),
                        m.degree(&coords),
                        coords.degree(i) + 1
                    )));
                }
            }
        }
        let dfq = fq
            .iter()
            .map(|f| (0..coords.len()).map(|i| f.partial(i)).collect())
            .collect();
        let chart = ChartedDgManifold {
            label: label.into(),
            coords,
            bx,
            fq,
            dfq,
            omega,
        };
        if !allow_unchecked {
            let bad: Vec<String> = chart
                .check_q2()
                .iter()
                .enumerate()
                .filter(|(_, r)| !r.is_zero())
                .map(|(k, _)| chart.coords.name(k).to_string())
                .collect();
            if !bad.is_empty() {
                return Err(Error::Q2Violation(bad));
            }
            if let Some(om) = &chart.omega {
                om.validate(&chart)?;
            }
        }
        Ok(chart)
    }

    pub fn coords(&self) -> &Arc<GradedCoordSystem> {
        &self.coords
    }

    pub fn bounds(&self) -> &OpenBox {
        &self.bx
    }

    pub fn fq(&self) -> &[GradedPolynomial] {
        &self.fq
    }

    pub fn dfq(&self, k: usize, i: usize) -> &GradedPolynomial {
        &self.dfq[k][i]
    }

    pub fn omega(&self) -> Option<&PreSymplecticData> {
        self.omega.as_ref()
    }

    pub fn ell(&self) -> usize {
        self.coords.ell()
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn wdeg(&self) -> Arc<Vec<usize>> {
        self.coords.wdeg()
    }

    pub fn names(&self) -> Vec<String> {
        self.coords.names().to_vec()
    }

    /// `Q(F^k)` for each `k`; all zero iff `Q² = 0`.
    pub fn check_q2(&self) -> Vec<GradedPolynomial> {
        self.fq
            .iter()
            .map(|f| f.apply_vector_field(&self.fq))
            .collect()
    }

    /// Largest coefficient size over all Q² residuals.
    pub fn q2_residual_norm(&self) -> f64 {
        self.check_q2()
            .iter()
            .map(|r| r.max_abs_coeff())
            .fold(0.0, f64::max)
    }

    /// Linear part of `Q` at a degree-0 point: `(Q_lin w)^k = -Σ_i ∂_i F^k(x) w^i`.
    pub fn linearize(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.bx.bounds.len() {
            return Err(Error::Dimension(format!(
                "point has {} entries, W^0 has dimension {}",
                x.len(),
                self.bx.bounds.len()
            )));
        }
        if !self.bx.contains(x) {
            return Err(Error::OutsideBox(format!("{x:?}")));
        }
        let n = self.rank();
        Ok(DMatrix::from_fn(n, n, |k, i| -self.dfq[k][i].eval_at(x)))
    }
}
