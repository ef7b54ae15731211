//! Dense multivariate polynomials with a total-degree cap.
//!
//! A [`Basis`] enumerates every monomial in `nvars` variables of total degree
//! at most `cap`. Monomial exponents are packed into a mixed-radix code so
//! that the product of two monomials (when it stays under the cap) is found by
//! adding codes and one table lookup.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::scalar::Scalar;

pub const MAX_VARS: usize = 6;

pub type Exps = [u8; MAX_VARS];

#[derive(Debug)]
pub struct Basis {
    nvars: usize,
    cap: usize,
    exps: Vec<Exps>,
    degs: Vec<usize>,
    codes: Vec<usize>,
    radix: Vec<usize>,
    lookup: Vec<u32>,
    dirichlet: OnceLock<Vec<BigRational>>,
    dirichlet_f64: OnceLock<Vec<f64>>,
}

const ABSENT: u32 = u32::MAX;

static BASES: OnceLock<Mutex<HashMap<(usize, usize), Arc<Basis>>>> = OnceLock::new();

impl Basis {
    /// Shared basis for `nvars` variables and degree cap `cap`.
    pub fn get(nvars: usize, cap: usize) -> Arc<Basis> {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables supported");
        let table = BASES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = table.lock().expect("basis cache poisoned");
        guard
            .entry((nvars, cap))
            .or_insert_with(|| Arc::new(Basis::build(nvars, cap)))
            .clone()
    }

    fn build(nvars: usize, cap: usize) -> Basis {
        let mut exps = Vec::new();
        let mut cur = [0u8; MAX_VARS];
        enumerate(nvars, cap, 0, &mut cur, &mut exps);
        exps.sort_by(|a, b| {
            let da: usize = a.iter().map(|&e| e as usize).sum();
            let db: usize = b.iter().map(|&e| e as usize).sum();
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        let radix: Vec<usize> = (0..nvars).map(|v| (cap + 1).pow(v as u32)).collect();
        let size = (cap + 1).pow(nvars as u32);
        let mut lookup = vec![ABSENT; size];
        let mut codes = Vec::with_capacity(exps.len());
        let mut degs = Vec::with_capacity(exps.len());
        for (i, e) in exps.iter().enumerate() {
            let code: usize = (0..nvars).map(|v| e[v] as usize * radix[v]).sum();
            lookup[code] = i as u32;
            codes.push(code);
            degs.push(e.iter().map(|&x| x as usize).sum());
        }
        Basis {
            nvars,
            cap,
            exps,
            degs,
            codes,
            radix,
            lookup,
            dirichlet: OnceLock::new(),
            dirichlet_f64: OnceLock::new(),
        }
    }

    /// `prod(a_i!) / (|a| + n)!`, the integral of `x^a dx_1..dx_n` over the simplex.
    pub fn dirichlet(&self) -> &[BigRational] {
        self.dirichlet.get_or_init(|| {
            self.exps
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let mut num = BigInt::one();
                    for &a in &e[..self.nvars] {
                        for j in 1..=a as u64 {
                            num *= j;
                        }
                    }
                    let mut den = BigInt::one();
                    for j in 1..=(self.degs[i] + self.nvars) as u64 {
                        den *= j;
                    }
                    BigRational::new(num, den)
                })
                .collect()
        })
    }

    pub fn dirichlet_f64(&self) -> &[f64] {
        self.dirichlet_f64.get_or_init(|| {
            self.dirichlet()
                .iter()
                .map(|q| q.to_f64().unwrap_or(0.0))
                .collect()
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exps(&self, i: usize) -> &Exps {
        &self.exps[i]
    }

    pub fn degree_of(&self, i: usize) -> usize {
        self.degs[i]
    }

    /// Index of a monomial, or `None` when it exceeds the cap.
    pub fn index_of(&self, e: &[u8]) -> Option<usize> {
        let deg: usize = e.iter().map(|&x| x as usize).sum();
        if deg > self.cap {
            return None;
        }
        let code: usize = (0..self.nvars).map(|v| e[v] as usize * self.radix[v]).sum();
        let i = self.lookup[code];
        (i != ABSENT).then_some(i as usize)
    }

    #[inline]
    fn product_index(&self, i: usize, j: usize) -> Option<usize> {
        if self.degs[i] + self.degs[j] > self.cap {
            return None;
        }
        Some(self.lookup[self.codes[i] + self.codes[j]] as usize)
    }

    #[inline]
    fn shift_index(&self, i: usize, v: usize) -> Option<usize> {
        if self.degs[i] + 1 > self.cap {
            return None;
        }
        Some(self.lookup[self.codes[i] + self.radix[v]] as usize)
    }

    #[inline]
    fn unshift_index(&self, i: usize, v: usize) -> Option<usize> {
        if self.exps[i][v] == 0 {
            return None;
        }
        Some(self.lookup[self.codes[i] - self.radix[v]] as usize)
    }
}

fn enumerate(nvars: usize, left: usize, v: usize, cur: &mut Exps, out: &mut Vec<Exps>) {
    if v == nvars {
        out.push(*cur);
        return;
    }
    for e in 0..=left {
        cur[v] = e as u8;
        enumerate(nvars, left - e, v + 1, cur, out);
    }
    cur[v] = 0;
}

/// Coefficient vector over a [`Basis`]. An empty vector is the zero polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T: Scalar = f64> {
    c: Vec<T>,
}

impl<T: Scalar> Default for Poly<T> {
    fn default() -> Self {
        Poly { c: Vec::new() }
    }
}

impl<T: Scalar> Poly<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(b: &Basis, v: T) -> Self {
        if v.is_zero() {
            return Self::zero();
        }
        let mut p = Self::dense_zero(b);
        p.c[0] = v;
        p
    }

    pub fn var(b: &Basis, v: usize) -> Self {
        let mut e = [0u8; MAX_VARS];
        e[v] = 1;
        Self::monomial(b, &e, T::one())
    }

    pub fn monomial(b: &Basis, e: &[u8], coeff: T) -> Self {
        match b.index_of(e) {
            Some(i) if !coeff.is_zero() => {
                let mut p = Self::dense_zero(b);
                p.c[i] = coeff;
                p
            }
            _ => Self::zero(),
        }
    }

    pub fn from_coeffs(c: Vec<T>) -> Self {
        let mut p = Poly { c };
        p.normalize();
        p
    }

    fn dense_zero(b: &Basis) -> Self {
        Poly {
            c: vec![T::zero(); b.len()],
        }
    }

    fn normalize(&mut self) {
        if self.c.iter().all(|x| x.is_zero()) {
            self.c.clear();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> T {
        self.c.get(i).cloned().unwrap_or_else(T::zero)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &T)> {
        self.c.iter().enumerate().filter(|(_, x)| !x.is_zero())
    }

    /// Highest total degree carrying a nonzero coefficient.
    pub fn degree(&self, b: &Basis) -> Option<usize> {
        self.nonzero().map(|(i, _)| b.degree_of(i)).max()
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let c = self
            .c
            .iter()
            .zip(&o.c)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Self::from_coeffs(c)
    }

    pub fn add_assign(&mut self, o: &Self) {
        if o.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = o.clone();
            return;
        }
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a = a.clone() + b.clone();
        }
        self.normalize();
    }

    pub fn add_scaled(&mut self, o: &Self, s: &T) {
        if o.is_zero() || s.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = o.scale(s);
            return;
        }
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a = a.clone() + b.clone() * s.clone();
        }
        self.normalize();
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Poly {
            c: self.c.iter().map(|x| -x.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Poly {
            c: self.c.iter().map(|x| x.clone() * s.clone()).collect(),
        }
    }

    /// Product truncated to the basis cap; the flag reports dropped terms.
    pub fn mul(&self, o: &Self, b: &Basis) -> (Self, bool) {
        if self.is_zero() || o.is_zero() {
            return (Self::zero(), false);
        }
        let mut out = Self::dense_zero(b);
        let mut truncated = false;
        let rhs: Vec<(usize, &T)> = o.nonzero().collect();
        for (i, a) in self.nonzero() {
            for &(j, bb) in &rhs {
                match b.product_index(i, j) {
                    Some(k) => out.c[k] = out.c[k].clone() + a.clone() * bb.clone(),
                    None => truncated = true,
                }
            }
        }
        out.normalize();
        (out, truncated)
    }

    pub fn mul_var(&self, v: usize, b: &Basis) -> (Self, bool) {
        if self.is_zero() {
            return (Self::zero(), false);
        }
        let mut out = Self::dense_zero(b);
        let mut truncated = false;
        for (i, a) in self.nonzero() {
            match b.shift_index(i, v) {
                Some(k) => out.c[k] = a.clone(),
                None => truncated = true,
            }
        }
        out.normalize();
        (out, truncated)
    }

    pub fn deriv(&self, v: usize, b: &Basis) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = Self::dense_zero(b);
        for (i, a) in self.nonzero() {
            if let Some(k) = b.unshift_index(i, v) {
                out.c[k] = a.clone() * T::from_int(b.exps(i)[v] as i64);
            }
        }
        out.normalize();
        out
    }

    /// Multiply each monomial coefficient by `f(monomial index)`.
    pub fn map_monomials(&self, f: impl Fn(usize) -> T) -> Self {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(i, x)| {
                if x.is_zero() {
                    T::zero()
                } else {
                    x.clone() * f(i)
                }
            })
            .collect();
        Self::from_coeffs(c)
    }

    pub fn eval(&self, b: &Basis, point: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, a) in self.nonzero() {
            let e = b.exps(i);
            let mut m = a.to_f64_lossy();
            for (v, &x) in point.iter().enumerate().take(b.nvars()) {
                if e[v] > 0 {
                    m *= x.powi(e[v] as i32);
                }
            }
            s += m;
        }
        s
    }

    /// Re-express in another basis with the same variable count.
    pub fn rebase(&self, from: &Basis, to: &Basis) -> (Self, bool) {
        debug_assert_eq!(from.nvars(), to.nvars());
        if self.is_zero() {
            return (Self::zero(), false);
        }
        let mut out = Self::dense_zero(to);
        let mut truncated = false;
        for (i, a) in self.nonzero() {
            match to.index_of(from.exps(i)) {
                Some(k) => out.c[k] = a.clone(),
                None => truncated = true,
            }
        }
        out.normalize();
        (out, truncated)
    }

    /// Drop every coefficient with absolute value at most `eps`.
    pub fn chop(&self, eps: f64) -> Self {
        let c = self
            .c
            .iter()
            .map(|x| {
                if x.to_f64_lossy().abs() <= eps {
                    T::zero()
                } else {
                    x.clone()
                }
            })
            .collect();
        Self::from_coeffs(c)
    }

    pub fn max_abs(&self) -> f64 {
        self.c
            .iter()
            .map(|x| x.to_f64_lossy().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> Poly<f64> {
        Poly::from_coeffs(self.c.iter().map(|x| x.to_f64_lossy()).collect())
    }

    /// Translate one variable: `x_v -> x_v + c`. Never raises degree.
    pub fn shift(&self, v: usize, c: &T, b: &Basis) -> Self {
        if self.is_zero() || c.is_zero() {
            return self.clone();
        }
        let mut out = Self::dense_zero(b);
        let mut cpow = vec![T::one()];
        for _ in 0..b.cap() {
            let last = cpow.last().unwrap().clone();
            cpow.push(last * c.clone());
        }
        for (i, a) in self.nonzero() {
            let e = *b.exps(i);
            let m = e[v] as usize;
            let mut f = e;
            for j in 0..=m {
                f[v] = j as u8;
                let k = b.index_of(&f).expect("lower degree monomial exists");
                let w: T = binomial::<T>(m, j) * cpow[m - j].clone();
                out.c[k] = out.c[k].clone() + a.clone() * w;
            }
        }
        out.normalize();
        out
    }

    /// Substitute `x_v = L_v(y)` for every source variable.
    ///
    /// `images[v]` is a polynomial in the target basis; the source and
    /// target caps are expected to agree so affine images never truncate.
    pub fn substitute(&self, from: &Basis, images: &[Poly<T>], to: &Basis) -> (Self, bool) {
        if self.is_zero() {
            return (Self::zero(), false);
        }
        let maxdeg = self.degree(from).unwrap_or(0);
        let mut truncated = false;
        let one = Poly::constant(to, T::one());
        let powers: Vec<Vec<Poly<T>>> = images
            .iter()
            .map(|img| {
                let mut pw = vec![one.clone()];
                for _ in 0..maxdeg {
                    let (next, t) = pw.last().unwrap().mul(img, to);
                    truncated |= t;
                    pw.push(next);
                }
                pw
            })
            .collect();
        let mut out = Poly::zero();
        for (i, a) in self.nonzero() {
            let e = from.exps(i);
            let mut term = Poly::constant(to, a.clone());
            for (v, pw) in powers.iter().enumerate() {
                if e[v] > 0 {
                    let (next, t) = term.mul(&pw[e[v] as usize], to);
                    truncated |= t;
                    term = next;
                }
            }
            out.add_assign(&term);
        }
        (out, truncated)
    }
}

/// `m!`
pub fn factorial(m: usize) -> u128 {
    (1..=m as u128).product()
}

/// Binomial coefficient as a scalar.
pub fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    let mut r = T::one();
    for i in 0..k {
        r = r * T::from_int((n - i) as i64) / T::from_int((i + 1) as i64);
    }
    r
}
