//! Ordinal notations built from the binary Veblen function.
//!
//! An ordinal is a descending sum of principal terms `phi(a,b)` with
//! positive coefficients. `phi(0,b)` is `w^b`, so naturals are multiples of
//! `phi(0,0) = 1`. A stored term `phi(a,b)` never has `b = phi(a',b')` with
//! `a' > a`, since such a `b` is already a fixed point of `phi(a,-)`.
//! Under that rule the representation is unique below Gamma_0, which is far
//! more room than the toolkit needs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{PdlError, Result};
use crate::formula::{Formula, Program, Sequent};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(Term, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    a: Ordinal,
    b: Ordinal,
}

impl Term {
    pub fn a(&self) -> &Ordinal {
        &self.a
    }
    pub fn b(&self) -> &Ordinal {
        &self.b
    }

    fn cmp_term(&self, other: &Term) -> Ordering {
        match self.a.cmp(&other.a) {
            Ordering::Equal => self.b.cmp(&other.b),
            // phi(a1,b1) < phi(a2,b2) with a1 < a2 iff b1 < phi(a2,b2)
            Ordering::Less => self.b.cmp_with_term(other),
            Ordering::Greater => other.b.cmp_with_term(self).reverse(),
        }
    }

    fn as_ordinal(&self) -> Ordinal {
        Ordinal { terms: vec![(self.clone(), 1)] }
    }

    /// `e` with `self = w^e`.
    fn log(&self) -> Ordinal {
        if self.a.is_zero() {
            self.b.clone()
        } else {
            self.as_ordinal()
        }
    }
}

impl Ordinal {
    pub fn zero() -> Ordinal {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Ordinal {
        Ordinal::nat(1)
    }

    pub fn nat(n: u64) -> Ordinal {
        if n == 0 {
            return Ordinal::zero();
        }
        let one = Term { a: Ordinal::zero(), b: Ordinal::zero() };
        Ordinal { terms: vec![(one, n)] }
    }

    pub fn omega() -> Ordinal {
        omega_pow(&Ordinal::one())
    }

    /// `phi(w, 0)`, the supremum of `phi(n, 0)`.
    pub fn phi_omega_zero() -> Ordinal {
        veblen(&Ordinal::omega(), &Ordinal::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Term, u64)] {
        &self.terms
    }

    /// `Some(n)` when the ordinal is finite.
    pub fn as_nat(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(t, n)] if t.a.is_zero() && t.b.is_zero() => Some(*n),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_nat().is_some()
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some((t, _)) if t.a.is_zero() && t.b.is_zero())
    }

    /// Exponent `d` of the leading term `w^d`; `None` for zero.
    pub fn leading_exponent(&self) -> Option<Ordinal> {
        self.terms.first().map(|(t, _)| t.log())
    }

    pub fn succ(&self) -> Ordinal {
        ord_sum(self, &Ordinal::one())
    }

    pub fn is_principal(&self) -> bool {
        matches!(self.terms.as_slice(), [(_, 1)])
    }

    fn single_term(&self) -> Option<&Term> {
        match self.terms.as_slice() {
            [(t, 1)] => Some(t),
            _ => None,
        }
    }

    fn cmp_with_term(&self, t: &Term) -> Ordering {
        match self.terms.first() {
            None => Ordering::Less,
            Some((lead, c)) => match lead.cmp_term(t) {
                Ordering::Equal => {
                    if *c > 1 || self.terms.len() > 1 {
                        Ordering::Greater
                    } else {
                        Ordering::Equal
                    }
                }
                o => o,
            },
        }
    }

    /// Additive decomposition into principal parts, largest first, each
    /// repeated by its coefficient.
    pub fn principal_parts(&self) -> Vec<Ordinal> {
        let mut out = Vec::new();
        for (t, c) in &self.terms {
            for _ in 0..*c {
                out.push(t.as_ordinal());
            }
        }
        out
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (x, y) in self.terms.iter().zip(other.terms.iter()) {
            match x.0.cmp_term(&y.0) {
                Ordering::Equal => {}
                o => return o,
            }
            match x.1.cmp(&y.1) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn compare(a: &Ordinal, b: &Ordinal) -> Ordering {
    a.cmp(b)
}

/// Natural (Hessenberg) sum.
pub fn nat_sum(a: &Ordinal, b: &Ordinal) -> Ordinal {
    let mut out: Vec<(Term, u64)> = Vec::with_capacity(a.terms.len() + b.terms.len());
    let (mut i, mut j) = (0, 0);
    while i < a.terms.len() || j < b.terms.len() {
        if j == b.terms.len() {
            out.push(a.terms[i].clone());
            i += 1;
        } else if i == a.terms.len() {
            out.push(b.terms[j].clone());
            j += 1;
        } else {
            match a.terms[i].0.cmp_term(&b.terms[j].0) {
                Ordering::Greater => {
                    out.push(a.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.terms[i].0.clone(), a.terms[i].1 + b.terms[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    Ordinal { terms: out }
}

pub fn nat_sum_all<'a, I: IntoIterator<Item = &'a Ordinal>>(items: I) -> Ordinal {
    items.into_iter().fold(Ordinal::zero(), |acc, x| nat_sum(&acc, x))
}

/// Ordinary (non-commutative) ordinal sum.
pub fn ord_sum(a: &Ordinal, b: &Ordinal) -> Ordinal {
    let Some((lead, bc)) = b.terms.first() else {
        return a.clone();
    };
    let mut out: Vec<(Term, u64)> = Vec::new();
    for (t, c) in &a.terms {
        match t.cmp_term(lead) {
            Ordering::Greater => out.push((t.clone(), *c)),
            Ordering::Equal => {
                out.push((t.clone(), c + bc));
                out.extend(b.terms[1..].iter().cloned());
                return Ordinal { terms: out };
            }
            Ordering::Less => break,
        }
    }
    out.extend(b.terms.iter().cloned());
    Ordinal { terms: out }
}

/// `phi(a, b)`, collapsing `phi(a, phi(a', b'))` to `phi(a', b')` when `a < a'`.
pub fn veblen(a: &Ordinal, b: &Ordinal) -> Ordinal {
    if let Some(t) = b.single_term() {
        if t.a > *a {
            return b.clone();
        }
    }
    Ordinal { terms: vec![(Term { a: a.clone(), b: b.clone() }, 1)] }
}

pub fn omega_pow(a: &Ordinal) -> Ordinal {
    veblen(&Ordinal::zero(), a)
}

/// `a * w` for `a > 0`, that is `w^(d+1)` with `w^d` the leading term of `a`.
/// Zero maps to zero.
pub fn times_omega(a: &Ordinal) -> Ordinal {
    match a.leading_exponent() {
        None => Ordinal::zero(),
        Some(d) => omega_pow(&d.succ()),
    }
}

/// Least `beta` with `x < w^beta`.
pub fn log_bound(x: &Ordinal) -> Ordinal {
    match x.leading_exponent() {
        None => Ordinal::zero(),
        Some(d) => d.succ(),
    }
}

pub fn max(a: &Ordinal, b: &Ordinal) -> Ordinal {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

// ---------------------------------------------------------------------------
// Ordinal complexity

pub fn o_program(p: &Program) -> Ordinal {
    match p {
        Program::Atom(_) => Ordinal::zero(),
        Program::Union(a, b) => max(&o_program(a), &o_program(b)).succ(),
        Program::Comp(a, b) => nat_sum(&o_program(a), &o_program(b)).succ(),
        Program::Star(a) => o_star(&o_program(a)),
    }
}

/// `sup_m o(P^m)` given `o(P)`. The m-fold composition has complexity
/// `o(P) (+) ... (+) o(P) + (m-1)`, whose supremum is `w^(d+1)` for leading
/// exponent `d`, and `w` when `o(P) = 0`.
pub fn o_star(op: &Ordinal) -> Ordinal {
    if op.is_zero() {
        Ordinal::omega()
    } else {
        times_omega(op)
    }
}

pub fn o_formula(f: &Formula) -> Ordinal {
    let o = match f {
        Formula::Lit { .. } => Ordinal::zero(),
        Formula::Or(a, b) | Formula::And(a, b) => max(&o_formula(a), &o_formula(b)).succ(),
        Formula::Box { prog, body } | Formula::Dia { prog, body } => {
            nat_sum(&o_program(prog), &o_formula(body)).succ()
        }
    };
    debug_assert!(o < omega_pow(&Ordinal::omega()));
    o
}

pub fn o_sequent(s: &Sequent) -> Ordinal {
    s.iter().fold(Ordinal::zero(), |acc, f| nat_sum(&acc, &o_formula(f)))
}

// ---------------------------------------------------------------------------
// Text form: `w^2*3 + w + 1`, `phi(1,0)`, `phi(w,0)`.

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (t, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if t.a.is_zero() && t.b.is_zero() {
                write!(f, "{c}")?;
                continue;
            }
            if t.a.is_zero() {
                if t.b == Ordinal::one() {
                    write!(f, "w")?;
                } else if t.b.is_finite() || t.b.is_principal() {
                    write!(f, "w^{}", t.b)?;
                } else {
                    write!(f, "w^({})", t.b)?;
                }
            } else {
                write!(f, "phi({},{})", t.a, t.b)?;
            }
            if *c > 1 {
                write!(f, "*{c}")?;
            }
        }
        Ok(())
    }
}

struct OrdParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> OrdParser<'a> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.i < self.s.len() && self.s[self.i] == c {
            self.i += 1;
            true
        } else {
            false
        }
    }
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(PdlError::Syntax { pos: self.i, msg: msg.to_string() })
    }
    fn nat(&mut self) -> Option<u64> {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return None;
        }
        std::str::from_utf8(&self.s[start..self.i]).ok()?.parse().ok()
    }
    fn expr(&mut self) -> Result<Ordinal> {
        let mut acc = self.product()?;
        while self.eat(b'+') {
            let t = self.product()?;
            acc = ord_sum(&acc, &t);
        }
        Ok(acc)
    }
    fn product(&mut self) -> Result<Ordinal> {
        let base = self.power()?;
        if self.eat(b'*') {
            let Some(n) = self.nat() else { return self.err("expected coefficient") };
            let mut acc = Ordinal::zero();
            for _ in 0..n {
                acc = ord_sum(&acc, &base);
            }
            return Ok(acc);
        }
        Ok(base)
    }
    fn power(&mut self) -> Result<Ordinal> {
        self.ws();
        if self.eat(b'w') {
            if self.eat(b'^') {
                let e = self.power()?;
                return Ok(omega_pow(&e));
            }
            return Ok(Ordinal::omega());
        }
        if self.s[self.i..].starts_with(b"phi") {
            self.i += 3;
            if !self.eat(b'(') {
                return self.err("expected `(`");
            }
            let a = self.expr()?;
            if !self.eat(b',') {
                return self.err("expected `,`");
            }
            let b = self.expr()?;
            if !self.eat(b')') {
                return self.err("expected `)`");
            }
            return Ok(veblen(&a, &b));
        }
        if self.eat(b'(') {
            let e = self.expr()?;
            if !self.eat(b')') {
                return self.err("expected `)`");
            }
            return Ok(e);
        }
        match self.nat() {
            Some(n) => Ok(Ordinal::nat(n)),
            None => self.err("expected ordinal"),
        }
    }
}

impl FromStr for Ordinal {
    type Err = PdlError;
    fn from_str(s: &str) -> Result<Ordinal> {
        let mut p = OrdParser { s: s.as_bytes(), i: 0 };
        let o = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return p.err("trailing input");
        }
        Ok(o)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Ordinal, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
