//! Text format for charts.
//!
//! ```text
//! # comment
//! [coords]
//! x 0
//! xi 1
//! [box]
//! x -1 1
//! [Q]
//! x = xi
//! [omega]
//! x xi 1
//! ```
//!
//! Grammar of a `[Q]` right-hand side:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := ('+' | '-')? factor ('*' factor)*
//! factor := number ('/' number)? | name ('^' integer)? | '(' expr ')'
//! number := digits ('.' digits)?
//! ```
//!
//! Coordinates absent from `[Q]` have `Q = 0`; degree-0 coordinates absent
//! from `[box]` range over the whole line. Bounds accept `inf` and `-inf`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graded::{ChartedDgManifold, GradedCoordSystem, GradedPolynomial, OpenBox};
use crate::symplectic::PreSymplecticData;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    None,
    Coords,
    Box,
    Q,
    Omega,
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

/// Parse and validate a chart; `Q² = 0` is enforced unless `allow_unchecked`.
pub fn parse_dg_spec(text: &str, label: &str, allow_unchecked: bool) -> Result<ChartedDgManifold> {
    let mut section = Section::None;
    let mut coords: Vec<(String, usize)> = Vec::new();
    let mut boxes: Vec<(String, f64, f64, usize)> = Vec::new();
    let mut qs: Vec<(String, String, usize, usize)> = Vec::new();
    let mut omegas: Vec<(String, String, BigRational, usize)> = Vec::new();

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = raw.split('#').next().unwrap();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        if trimmed.starts_with('[') {
            section = match trimmed {
                "[coords]" => Section::Coords,
                "[box]" => Section::Box,
                "[Q]" => Section::Q,
                "[omega]" => Section::Omega,
                _ => return Err(perr(ln, indent + 1, format!("unknown section {trimmed}"))),
            };
            continue;
        }
        let fields: Vec<(usize, &str)> = split_fields(line);
        match section {
            Section::None => return Err(perr(ln, indent + 1, "content before first section")),
            Section::Coords => {
                if fields.len() != 2 {
                    return Err(perr(ln, indent + 1, "expected `name degree`"));
                }
                check_name(fields[0].1, ln, fields[0].0)?;
                let d: usize = fields[1]
                    .1
                    .parse()
                    .map_err(|_| perr(ln, fields[1].0, "degree must be a non-negative integer"))?;
                coords.push((fields[0].1.to_string(), d));
            }
            Section::Box => {
                if fields.len() != 3 {
                    return Err(perr(ln, indent + 1, "expected `name lo hi`"));
                }
                let lo = parse_bound(fields[1].1)
                    .ok_or_else(|| perr(ln, fields[1].0, "bad lower bound"))?;
                let hi = parse_bound(fields[2].1)
                    .ok_or_else(|| perr(ln, fields[2].0, "bad upper bound"))?;
                boxes.push((fields[0].1.to_string(), lo, hi, ln));
            }
            Section::Q => {
                let Some(eq) = line.find('=') else {
                    return Err(perr(ln, indent + 1, "expected `name = expression`"));
                };
                let name = line[..eq].trim();
                check_name(name, ln, indent + 1)?;
                qs.push((name.to_string(), line[eq + 1..].to_string(), ln, eq + 2));
            }
            Section::Omega => {
                if fields.len() != 3 {
                    return Err(perr(ln, indent + 1, "expected `name_i name_j value`"));
                }
                let v =
                    parse_number(fields[2].1).ok_or_else(|| perr(ln, fields[2].0, "bad value"))?;
                omegas.push((fields[0].1.to_string(), fields[1].1.to_string(), v, ln));
            }
        }
    }

    let cs = Arc::new(GradedCoordSystem::new(coords).map_err(|e| perr(1, 1, e.to_string()))?);
    let mut bx = OpenBox::unbounded(cs.zero_coords().len());
    for (name, lo, hi, ln) in boxes {
        let i = cs
            .index_of(&name)
            .ok_or_else(|| perr(ln, 1, format!("unknown coordinate {name:?}")))?;
        let p = cs
            .zero_pos(i)
            .ok_or_else(|| perr(ln, 1, format!("{name:?} is not a degree-0 coordinate")))?;
        if !(lo < hi) {
            return Err(perr(ln, 1, "lower bound must be below upper bound"));
        }
        bx.bounds[p] = (lo, hi);
    }
    let mut fq: Vec<GradedPolynomial> =
        (0..cs.len()).map(|_| GradedPolynomial::zero(&cs)).collect();
    let mut seen = vec![false; cs.len()];
    for (name, rhs, ln, col) in qs {
        let i = cs
            .index_of(&name)
            .ok_or_else(|| perr(ln, 1, format!("unknown coordinate {name:?}")))?;
        if seen[i] {
            return Err(perr(ln, 1, format!("Q{name} given twice")));
        }
        seen[i] = true;
        let mut p = ExprParser {
            s: rhs.as_bytes(),
            pos: 0,
            line: ln,
            col0: col,
            cs: &cs,
        };
        fq[i] = p.parse_all()?;
    }
    let omega = if omegas.is_empty() {
        None
    } else {
        let mut entries = Vec::new();
        for (a, b, v, ln) in omegas {
            let i = cs
                .index_of(&a)
                .ok_or_else(|| perr(ln, 1, format!("unknown coordinate {a:?}")))?;
            let j = cs
                .index_of(&b)
                .ok_or_else(|| perr(ln, 1, format!("unknown coordinate {b:?}")))?;
            entries.push((i, j, v));
        }
        Some(PreSymplecticData::new(&cs, entries)?)
    };
    ChartedDgManifold::new(label, cs, bx, fq, omega, allow_unchecked)
}

/// Canonical text form of a chart; parsing it gives back the same chart.
pub fn display_dg_spec(dg: &ChartedDgManifold) -> String {
    let cs = dg.coords();
    let mut s = String::new();
    let _ = writeln!(s, "# {}", dg.label);
    let _ = writeln!(s, "[coords]");
    for i in 0..cs.len() {
        let _ = writeln!(s, "{} {}", cs.name(i), cs.degree(i));
    }
    if !cs.zero_coords().is_empty() {
        let _ = writeln!(s, "[box]");
        for (p, &i) in cs.zero_coords().iter().enumerate() {
            let (lo, hi) = dg.bounds().bounds[p];
            let _ = writeln!(s, "{} {} {}", cs.name(i), fmt_bound(lo), fmt_bound(hi));
        }
    }
    let _ = writeln!(s, "[Q]");
    for (i, f) in dg.fq().iter().enumerate() {
        if !f.is_zero() {
            let _ = writeln!(s, "{} = {}", cs.name(i), f);
        }
    }
    if let Some(om) = dg.omega() {
        let _ = writeln!(s, "[omega]");
        for ((i, j), v) in om.entries() {
            let _ = writeln!(s, "{} {} {}", cs.name(*i), cs.name(*j), v);
        }
    }
    s
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn parse_bound(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}

fn split_fields(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn check_name(name: &str, line: usize, col: usize) -> Result<()> {
    let ok = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(perr(line, col, format!("invalid name {name:?}")))
    }
}

/// Exact rational from `12`, `-0.25` or `3/4`.
pub fn parse_number(s: &str) -> Option<BigRational> {
    if let Some((a, b)) = s.split_once('/') {
        let a = parse_number(a)?;
        let b = parse_number(b)?;
        return (!b.is_zero()).then(|| a / b);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let v = BigRational::new(num, den);
    Some(if neg { -v } else { v })
}

struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
    line: usize,
    col0: usize,
    cs: &'a Arc<GradedCoordSystem>,
}

impl ExprParser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        perr(self.line, self.col0 + self.pos, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && (self.s[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn parse_all(&mut self) -> Result<GradedPolynomial> {
        let p = self.expr()?;
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<GradedPolynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<GradedPolynomial> {
        let mut neg = false;
        match self.peek() {
            Some(b'-') => {
                neg = true;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            _ => {}
        }
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(if neg { acc.neg() } else { acc })
    }

    fn number_token(&mut self) -> Result<BigRational> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.')
        {
            self.pos += 1;
        }
        let tok = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        parse_number(tok).ok_or_else(|| {
            self.pos = start;
            self.err(format!("bad number {tok:?}"))
        })
    }

    fn factor(&mut self) -> Result<GradedPolynomial> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let mut v = self.number_token()?;
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    let d = self.number_token()?;
                    if d.is_zero() {
                        return Err(self.err("division by zero"));
                    }
                    v /= d;
                }
                Ok(GradedPolynomial::constant(self.cs, v))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                let Some(i) = self.cs.index_of(name) else {
                    self.pos = start;
                    return Err(self.err(format!("unknown coordinate {name:?}")));
                };
                let base = GradedPolynomial::coord(self.cs, i);
                if self.peek() != Some(b'^') {
                    return Ok(base);
                }
                self.pos += 1;
                self.skip_ws();
                let estart = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let e: u32 = std::str::from_utf8(&self.s[estart..self.pos])
                    .unwrap()
                    .parse()
                    .map_err(|_| self.err("expected integer exponent"))?;
                let mut acc = GradedPolynomial::constant(self.cs, BigRational::one());
                for _ in 0..e {
                    acc = acc.mul(&base);
                }
                Ok(acc)
            }
            Some(c) => Err(self.err(format!("unexpected character {:?}", c as char))),
        }
    }
}
