//! Programs, seq-formulas and sequents.
//!
//! Formulas are kept in negation normal form: `~` only ever sits on a
//! variable. The text grammar is
//!
//! ```text
//! sequent  := formula (',' formula)*
//! formula  := conj ('|' conj)*
//! conj     := unary ('&' unary)*
//! unary    := ident | '~' ident | '[' prog ']' unary | '<' prog '>' unary | '(' formula ')'
//! prog     := pseq ('+' pseq)*
//! pseq     := pstar (';' pstar)*
//! pstar    := patom '*'*
//! patom    := ident | '(' prog ')'
//! ```
//!
//! Binary connectives associate to the left.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PdlError, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Program {
    Atom(String),
    Comp(Box<Program>, Box<Program>),
    Union(Box<Program>, Box<Program>),
    Star(Box<Program>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Lit { var: String, positive: bool },
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Box { prog: Program, body: Box<Formula> },
    Dia { prog: Program, body: Box<Formula> },
}

impl Program {
    pub fn atom(name: &str) -> Program {
        Program::Atom(name.to_string())
    }
    pub fn comp(a: Program, b: Program) -> Program {
        Program::Comp(Box::new(a), Box::new(b))
    }
    pub fn union(a: Program, b: Program) -> Program {
        Program::Union(Box::new(a), Box::new(b))
    }
    pub fn star(a: Program) -> Program {
        Program::Star(Box::new(a))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Program::Atom(_))
    }

    pub fn has_star(&self) -> bool {
        match self {
            Program::Atom(_) => false,
            Program::Comp(a, b) | Program::Union(a, b) => a.has_star() || b.has_star(),
            Program::Star(_) => true,
        }
    }

    pub fn atom_name(&self) -> Option<&str> {
        match self {
            Program::Atom(n) => Some(n),
            _ => None,
        }
    }

    /// `P;P;...;P` with `m >= 1` copies, associated to the left.
    pub fn power(&self, m: usize) -> Program {
        assert!(m >= 1);
        let mut acc = self.clone();
        for _ in 1..m {
            acc = Program::comp(acc, self.clone());
        }
        acc
    }

    pub fn complexity(&self) -> usize {
        match self {
            Program::Atom(_) => 0,
            Program::Comp(a, b) | Program::Union(a, b) => 1 + a.complexity() + b.complexity(),
            Program::Star(a) => 1 + a.complexity(),
        }
    }

    pub fn atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Program::Atom(n) => {
                out.insert(n.clone());
            }
            Program::Comp(a, b) | Program::Union(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
            Program::Star(a) => a.atoms(out),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let paren = match self {
            Program::Atom(n) => return write!(f, "{n}"),
            Program::Union(..) => prec > 1,
            Program::Comp(..) => prec > 2,
            Program::Star(..) => prec > 3,
        };
        if paren {
            write!(f, "(")?;
        }
        match self {
            Program::Union(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "+")?;
                b.fmt_prec(f, 2)?;
            }
            Program::Comp(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, ";")?;
                b.fmt_prec(f, 3)?;
            }
            Program::Star(a) => {
                a.fmt_prec(f, 3)?;
                write!(f, "*")?;
            }
            Program::Atom(_) => unreachable!(),
        }
        if paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Formula {
    pub fn lit(var: &str, positive: bool) -> Formula {
        Formula::Lit { var: var.to_string(), positive }
    }
    pub fn var(var: &str) -> Formula {
        Formula::lit(var, true)
    }
    pub fn nvar(var: &str) -> Formula {
        Formula::lit(var, false)
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn boxed(prog: Program, body: Formula) -> Formula {
        Formula::Box { prog, body: Box::new(body) }
    }
    pub fn dia(prog: Program, body: Formula) -> Formula {
        Formula::Dia { prog, body: Box::new(body) }
    }

    /// Left-folded disjunction; `None` for an empty list.
    pub fn or_all<I: IntoIterator<Item = Formula>>(items: I) -> Option<Formula> {
        items.into_iter().reduce(Formula::or)
    }

    /// Left-folded conjunction; `None` for an empty list.
    pub fn and_all<I: IntoIterator<Item = Formula>>(items: I) -> Option<Formula> {
        items.into_iter().reduce(Formula::and)
    }

    /// `x0 | ~x0` over the given variable name; stands in for the constant 1.
    pub fn verum(var: &str) -> Formula {
        Formula::or(Formula::var(var), Formula::nvar(var))
    }

    /// `x0 & ~x0`; stands in for the constant 0.
    pub fn falsum(var: &str) -> Formula {
        Formula::and(Formula::var(var), Formula::nvar(var))
    }

    /// `<P><P>...<P>A` with `m` copies of the prefix.
    pub fn dia_power(prog: &Program, m: usize, body: Formula) -> Formula {
        (0..m).fold(body, |acc, _| Formula::dia(prog.clone(), acc))
    }

    pub fn box_power(prog: &Program, m: usize, body: Formula) -> Formula {
        (0..m).fold(body, |acc, _| Formula::boxed(prog.clone(), acc))
    }

    pub fn is_lit(&self) -> bool {
        matches!(self, Formula::Lit { .. })
    }

    pub fn is_modal(&self) -> bool {
        matches!(self, Formula::Box { .. } | Formula::Dia { .. })
    }

    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::Lit { .. } => true,
            Formula::Or(a, b) | Formula::And(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    pub fn is_star_free(&self) -> bool {
        match self {
            Formula::Lit { .. } => true,
            Formula::Or(a, b) | Formula::And(a, b) => a.is_star_free() && b.is_star_free(),
            Formula::Box { prog, body } | Formula::Dia { prog, body } => {
                !prog.has_star() && body.is_star_free()
            }
        }
    }

    /// Seq-negation: swap literal polarity, `|`/`&`, and `[P]`/`<P>`.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Lit { var, positive } => Formula::Lit { var: var.clone(), positive: !positive },
            Formula::Or(a, b) => Formula::and(a.negate(), b.negate()),
            Formula::And(a, b) => Formula::or(a.negate(), b.negate()),
            Formula::Box { prog, body } => Formula::dia(prog.clone(), body.negate()),
            Formula::Dia { prog, body } => Formula::boxed(prog.clone(), body.negate()),
        }
    }

    /// Literal occurrences plus occurrences of `|`, `&`, `+`, `;`, `*`.
    pub fn complexity(&self) -> usize {
        match self {
            Formula::Lit { .. } => 1,
            Formula::Or(a, b) | Formula::And(a, b) => 1 + a.complexity() + b.complexity(),
            Formula::Box { prog, body } | Formula::Dia { prog, body } => {
                prog.complexity() + body.complexity()
            }
        }
    }

    /// Number of AST nodes, counting each modality as one node and each
    /// program connective as one node. Used for size measurements.
    pub fn size(&self) -> usize {
        fn psize(p: &Program) -> usize {
            match p {
                Program::Atom(_) => 1,
                Program::Comp(a, b) | Program::Union(a, b) => 1 + psize(a) + psize(b),
                Program::Star(a) => 1 + psize(a),
            }
        }
        match self {
            Formula::Lit { .. } => 1,
            Formula::Or(a, b) | Formula::And(a, b) => 1 + a.size() + b.size(),
            Formula::Box { prog, body } | Formula::Dia { prog, body } => {
                psize(prog) + body.size()
            }
        }
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Lit { .. } => 0,
            Formula::Or(a, b) | Formula::And(a, b) => a.modal_depth().max(b.modal_depth()),
            Formula::Box { body, .. } | Formula::Dia { body, .. } => 1 + body.modal_depth(),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Lit { var, .. } => {
                out.insert(var.clone());
            }
            Formula::Or(a, b) | Formula::And(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Formula::Box { body, .. } | Formula::Dia { body, .. } => body.vars(out),
        }
    }

    pub fn programs(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Lit { .. } => {}
            Formula::Or(a, b) | Formula::And(a, b) => {
                a.programs(out);
                b.programs(out);
            }
            Formula::Box { prog, body } | Formula::Dia { prog, body } => {
                prog.atoms(out);
                body.programs(out);
            }
        }
    }

    pub fn var_set(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.vars(&mut s);
        s
    }

    /// Flatten a left/right nested disjunction into its disjuncts.
    pub fn disjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            if let Formula::Or(a, b) = f {
                go(a, out);
                go(b, out);
            } else {
                out.push(f);
            }
        }
        go(self, &mut out);
        out
    }

    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            if let Formula::And(a, b) = f {
                go(a, out);
                go(b, out);
            } else {
                out.push(f);
            }
        }
        go(self, &mut out);
        out
    }

    pub fn classify(&self) -> BTreeSet<Fragment> {
        classify_fragment(self)
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::Lit { var, positive } => {
                if *positive {
                    write!(f, "{var}")
                } else {
                    write!(f, "~{var}")
                }
            }
            Formula::Or(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::And(a, b) => {
                if prec > 2 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                b.fmt_prec(f, 3)?;
                if prec > 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Box { prog, body } => {
                write!(f, "[{prog}]")?;
                body.fmt_prec(f, 3)
            }
            Formula::Dia { prog, body } => {
                write!(f, "<{prog}>")?;
                body.fmt_prec(f, 3)
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

pub fn seq_negate(f: &Formula) -> Formula {
    f.negate()
}

pub fn plain_complexity(f: &Formula) -> usize {
    f.complexity()
}

// ---------------------------------------------------------------------------
// Sequents

/// A finite multiset of formulas. Equality and hashing ignore order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequent(pub Vec<Formula>);

impl Sequent {
    pub fn new(v: Vec<Formula>) -> Self {
        Sequent(v)
    }
    pub fn empty() -> Self {
        Sequent(Vec::new())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn iter(&self) -> std::slice::Iter<'_, Formula> {
        self.0.iter()
    }
    pub fn sorted(&self) -> Vec<Formula> {
        let mut v = self.0.clone();
        v.sort();
        v
    }
    pub fn count(&self, f: &Formula) -> usize {
        self.0.iter().filter(|g| *g == f).count()
    }
    pub fn contains(&self, f: &Formula) -> bool {
        self.0.contains(f)
    }
    pub fn with(&self, f: Formula) -> Sequent {
        let mut v = self.0.clone();
        v.push(f);
        Sequent(v)
    }
    pub fn union(&self, other: &Sequent) -> Sequent {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Sequent(v)
    }
    /// Remove one occurrence of `f`; `None` if absent.
    pub fn remove_one(&self, f: &Formula) -> Option<Sequent> {
        let i = self.0.iter().position(|g| g == f)?;
        let mut v = self.0.clone();
        v.remove(i);
        Some(Sequent(v))
    }
    pub fn without_index(&self, i: usize) -> Sequent {
        let mut v = self.0.clone();
        v.remove(i);
        Sequent(v)
    }
    /// `other` is a sub-multiset of `self`.
    pub fn includes(&self, other: &Sequent) -> bool {
        let mut rest = self.0.clone();
        for f in &other.0 {
            match rest.iter().position(|g| g == f) {
                Some(i) => {
                    rest.swap_remove(i);
                }
                None => return false,
            }
        }
        true
    }
    /// Multiset difference `self - other`; `None` unless `other` is included.
    pub fn minus(&self, other: &Sequent) -> Option<Sequent> {
        let mut rest = self.0.clone();
        for f in &other.0 {
            let i = rest.iter().position(|g| g == f)?;
            rest.remove(i);
        }
        Some(Sequent(rest))
    }
    pub fn complexity(&self) -> usize {
        self.0.iter().map(Formula::complexity).sum()
    }
    pub fn size(&self) -> usize {
        self.0.iter().map(Formula::size).sum()
    }
    pub fn is_axiom(&self) -> bool {
        self.0.iter().any(|f| match f {
            Formula::Lit { var, positive: true } => {
                self.0.contains(&Formula::Lit { var: var.clone(), positive: false })
            }
            _ => false,
        })
    }
    pub fn vars(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for f in &self.0 {
            f.vars(&mut s);
        }
        s
    }
    pub fn in_l00(&self) -> bool {
        self.0.iter().all(|f| f.classify().contains(&Fragment::L00))
    }
    /// The disjunction of all members, `None` when empty.
    pub fn disjunction(&self) -> Option<Formula> {
        Formula::or_all(self.0.iter().cloned())
    }
}

impl PartialEq for Sequent {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.sorted() == other.sorted()
    }
}
impl Eq for Sequent {}

impl std::hash::Hash for Sequent {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sorted().hash(state)
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl From<Vec<Formula>> for Sequent {
    fn from(v: Vec<Formula>) -> Self {
        Sequent(v)
    }
}

// ---------------------------------------------------------------------------
// Fragments

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Fragment {
    /// Purely propositional.
    LEmpty,
    /// Star-free with atomic programs only.
    L00,
    /// Star-free.
    L0,
    /// No box over a starred program; programs are atoms, diamonds may carry `p*` for atomic `p`.
    For10,
    /// No box over a starred program.
    For1,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Fragment::LEmpty => "L_empty",
            Fragment::L00 => "L_00",
            Fragment::L0 => "L_0",
            Fragment::For10 => "FOR_10",
            Fragment::For1 => "FOR_1",
        };
        f.write_str(s)
    }
}

pub fn classify_fragment(f: &Formula) -> BTreeSet<Fragment> {
    fn walk(f: &Formula, prop: &mut bool, atomic: &mut bool, star: &mut bool, boxstar: &mut bool, for10: &mut bool) {
        match f {
            Formula::Lit { .. } => {}
            Formula::Or(a, b) | Formula::And(a, b) => {
                walk(a, prop, atomic, star, boxstar, for10);
                walk(b, prop, atomic, star, boxstar, for10);
            }
            Formula::Box { prog, body } | Formula::Dia { prog, body } => {
                *prop = false;
                if !prog.is_atomic() {
                    *atomic = false;
                }
                if prog.has_star() {
                    *star = true;
                    if matches!(f, Formula::Box { .. }) {
                        *boxstar = true;
                    }
                }
                let ok10 = match (f, prog) {
                    (_, Program::Atom(_)) => true,
                    (Formula::Dia { .. }, Program::Star(inner)) => inner.is_atomic(),
                    _ => false,
                };
                if !ok10 {
                    *for10 = false;
                }
                walk(body, prop, atomic, star, boxstar, for10);
            }
        }
    }
    let (mut prop, mut atomic, mut star, mut boxstar, mut for10) = (true, true, false, false, true);
    walk(f, &mut prop, &mut atomic, &mut star, &mut boxstar, &mut for10);
    let mut out = BTreeSet::new();
    if boxstar {
        return out;
    }
    out.insert(Fragment::For1);
    if for10 {
        out.insert(Fragment::For10);
    }
    if !star {
        out.insert(Fragment::L0);
        if atomic {
            out.insert(Fragment::L00);
        }
    }
    if prop {
        out.insert(Fragment::LEmpty);
    }
    out
}

/// Rewrite `;` and `+` away: `(P;Q)A -> (P)(Q)A`, `<P+Q>A -> <P>A | <Q>A`,
/// `[P+Q]A -> [P]A & [Q]A`.
pub fn interpret_into_l00(f: &Formula) -> Result<Formula> {
    if !f.is_star_free() {
        return Err(PdlError::Fragment(format!("`{f}` contains a starred program")));
    }
    fn modal(is_box: bool, p: &Program, body: Formula) -> Formula {
        match p {
            Program::Atom(_) => {
                if is_box {
                    Formula::boxed(p.clone(), body)
                } else {
                    Formula::dia(p.clone(), body)
                }
            }
            Program::Comp(a, b) => {
                let inner = modal(is_box, b, body);
                modal(is_box, a, inner)
            }
            Program::Union(a, b) => {
                let l = modal(is_box, a, body.clone());
                let r = modal(is_box, b, body);
                if is_box {
                    Formula::and(l, r)
                } else {
                    Formula::or(l, r)
                }
            }
            Program::Star(_) => unreachable!(),
        }
    }
    fn go(f: &Formula) -> Formula {
        match f {
            Formula::Lit { .. } => f.clone(),
            Formula::Or(a, b) => Formula::or(go(a), go(b)),
            Formula::And(a, b) => Formula::and(go(a), go(b)),
            Formula::Box { prog, body } => modal(true, prog, go(body)),
            Formula::Dia { prog, body } => modal(false, prog, go(body)),
        }
    }
    Ok(go(f))
}

// ---------------------------------------------------------------------------
// Parser

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '^' | '\'' | '#' | '$' | '.')
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(PdlError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(d) => self.err(format!("expected `{c}`, found `{d}`")),
                None => self.err(format!("expected `{c}`, found end of input")),
            }
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if is_ident_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if start == self.pos {
            return match self.peek() {
                Some(c) => self.err(format!("expected identifier, found `{c}`")),
                None => self.err("expected identifier, found end of input"),
            };
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut acc = self.conj()?;
        while self.eat('|') {
            let rhs = self.conj()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut acc = self.unary()?;
        while self.eat('&') {
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some('~') => {
                self.pos += 1;
                let v = self.ident()?;
                Ok(Formula::nvar(&v))
            }
            Some('(') => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(')')?;
                Ok(f)
            }
            Some('[') => {
                self.pos += 1;
                let p = self.program()?;
                self.expect(']')?;
                let body = self.unary()?;
                Ok(Formula::boxed(p, body))
            }
            Some('<') => {
                self.pos += 1;
                let p = self.program()?;
                self.expect('>')?;
                let body = self.unary()?;
                Ok(Formula::dia(p, body))
            }
            Some(_) => {
                let v = self.ident()?;
                Ok(Formula::var(&v))
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn program(&mut self) -> Result<Program> {
        let mut acc = self.pseq()?;
        while self.eat('+') {
            let rhs = self.pseq()?;
            acc = Program::union(acc, rhs);
        }
        Ok(acc)
    }

    fn pseq(&mut self) -> Result<Program> {
        let mut acc = self.pstar()?;
        while self.eat(';') {
            let rhs = self.pstar()?;
            acc = Program::comp(acc, rhs);
        }
        Ok(acc)
    }

    fn pstar(&mut self) -> Result<Program> {
        let mut acc = if self.eat('(') {
            let p = self.program()?;
            self.expect(')')?;
            p
        } else {
            Program::Atom(self.ident()?)
        };
        while self.eat('*') {
            acc = Program::star(acc);
        }
        Ok(acc)
    }

    fn finish(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser::new(text);
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parse a comma-separated sequent; blank input is the empty sequent.
pub fn parse_sequent(text: &str) -> Result<Sequent> {
    let mut p = Parser::new(text);
    if p.peek().is_none() {
        return Ok(Sequent::empty());
    }
    let mut v = vec![p.formula()?];
    while p.eat(',') {
        v.push(p.formula()?);
    }
    p.finish()?;
    Ok(Sequent(v))
}

pub fn parse_program(text: &str) -> Result<Program> {
    let mut p = Parser::new(text);
    let prog = p.program()?;
    p.finish()?;
    Ok(prog)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Formula(Formula),
    Sequent(Sequent),
}

/// Parse a single formula, or a sequent when the text has top-level commas.
pub fn parse(text: &str) -> Result<Parsed> {
    let s = parse_sequent(text)?;
    if s.len() == 1 {
        Ok(Parsed::Formula(s.0.into_iter().next().unwrap()))
    } else {
        Ok(Parsed::Sequent(s))
    }
}

// ---------------------------------------------------------------------------
// Normal-form shapes

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcnfRow {
    pub b: Option<Formula>,
    pub c: Option<Formula>,
    pub d: Vec<Formula>,
}

/// `/\_i (B_i | <p>C_i | \/_j [p]D_ij)` with propositional or absent parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcnfShape {
    pub rows: Vec<BcnfRow>,
    pub prog: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BdnfShape {
    pub f: Option<Formula>,
    /// `(F_i, G_i)` for the rows `F_i & [p]G_i`.
    pub box_rows: Vec<(Option<Formula>, Formula)>,
    /// `(F_j, H_j)` for the rows `F_j & <p>H_j`.
    pub dia_rows: Vec<(Option<Formula>, Formula)>,
    pub prog: String,
}

impl BcnfRow {
    pub fn render(&self, p: &Program) -> Option<Formula> {
        let mut parts = Vec::new();
        if let Some(b) = &self.b {
            parts.push(b.clone());
        }
        if let Some(c) = &self.c {
            parts.push(Formula::dia(p.clone(), c.clone()));
        }
        for d in &self.d {
            parts.push(Formula::boxed(p.clone(), d.clone()));
        }
        Formula::or_all(parts)
    }
}

impl BcnfShape {
    pub fn m(&self) -> usize {
        self.rows.len()
    }
    pub fn program(&self) -> Program {
        Program::Atom(self.prog.clone())
    }
    /// `n = sum_i n_i`.
    pub fn bound(&self) -> usize {
        self.rows.iter().map(|r| r.d.len()).sum()
    }
    /// Render as a formula. A row with every part absent is the empty
    /// disjunction and makes the whole conjunction unrenderable.
    pub fn render(&self) -> Result<Formula> {
        let p = self.program();
        let mut rows = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            match r.render(&p) {
                Some(f) => rows.push(f),
                None => return Err(PdlError::shape(format!("row {i}"), "all components absent")),
            }
        }
        Formula::and_all(rows).ok_or_else(|| PdlError::shape("BCNF", "no rows"))
    }
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(PdlError::shape("BCNF", "m must be at least 1"));
        }
        for (i, r) in self.rows.iter().enumerate() {
            for f in r.b.iter().chain(r.c.iter()).chain(r.d.iter()) {
                if !f.is_propositional() {
                    return Err(PdlError::shape(f, format!("row {i}: component is not propositional")));
                }
            }
        }
        Ok(())
    }
}

impl BdnfShape {
    pub fn s(&self) -> usize {
        self.box_rows.len()
    }
    pub fn t(&self) -> usize {
        self.dia_rows.len()
    }
    pub fn program(&self) -> Program {
        Program::Atom(self.prog.clone())
    }
    pub fn render(&self) -> Formula {
        let p = self.program();
        let mut parts = Vec::new();
        if let Some(f) = &self.f {
            parts.push(f.clone());
        }
        for (fi, g) in &self.box_rows {
            let m = Formula::boxed(p.clone(), g.clone());
            parts.push(match fi {
                Some(fi) => Formula::and(fi.clone(), m),
                None => m,
            });
        }
        for (fj, h) in &self.dia_rows {
            let m = Formula::dia(p.clone(), h.clone());
            parts.push(match fj {
                Some(fj) => Formula::and(fj.clone(), m),
                None => m,
            });
        }
        Formula::or_all(parts).expect("s, t >= 1")
    }
    pub fn validate(&self) -> Result<()> {
        if self.box_rows.is_empty() || self.dia_rows.is_empty() {
            return Err(PdlError::shape("BDNF", "s and t must both be at least 1"));
        }
        let comps = self
            .f
            .iter()
            .chain(self.box_rows.iter().flat_map(|(a, b)| a.iter().chain(std::iter::once(b))))
            .chain(self.dia_rows.iter().flat_map(|(a, b)| a.iter().chain(std::iter::once(b))));
        for c in comps {
            if !c.is_propositional() {
                return Err(PdlError::shape(c, "component is not propositional"));
            }
        }
        Ok(())
    }
}

fn check_prog(prog: &Program, expected: &mut Option<String>, at: &Formula) -> Result<()> {
    let name = match prog {
        Program::Atom(n) => n,
        _ => return Err(PdlError::shape(at, "program is not atomic")),
    };
    match expected {
        None => {
            *expected = Some(name.clone());
            Ok(())
        }
        Some(e) if e == name => Ok(()),
        Some(e) => Err(PdlError::shape(at, format!("mixes programs `{e}` and `{name}`"))),
    }
}

pub fn recognize_bcnf(f: &Formula) -> Result<BcnfShape> {
    if matches!(f, Formula::Dia { .. }) {
        return Err(PdlError::shape(f, "bare diamond has no conjunction structure"));
    }
    let mut prog: Option<String> = None;
    let mut rows = Vec::new();
    for conj in f.conjuncts() {
        let mut bs = Vec::new();
        let mut c = None;
        let mut d = Vec::new();
        for disj in conj.disjuncts() {
            match disj {
                Formula::Dia { prog: p, body } => {
                    check_prog(p, &mut prog, disj)?;
                    if !body.is_propositional() {
                        return Err(PdlError::shape(body, "diamond body is not propositional"));
                    }
                    if c.is_some() {
                        return Err(PdlError::shape(conj, "row has more than one diamond"));
                    }
                    c = Some((**body).clone());
                }
                Formula::Box { prog: p, body } => {
                    check_prog(p, &mut prog, disj)?;
                    if !body.is_propositional() {
                        return Err(PdlError::shape(body, "box body is not propositional"));
                    }
                    d.push((**body).clone());
                }
                g if g.is_propositional() => bs.push(g.clone()),
                g => return Err(PdlError::shape(g, "conjunction under a disjunction mixes in modalities")),
            }
        }
        rows.push(BcnfRow { b: Formula::or_all(bs), c, d });
    }
    Ok(BcnfShape { rows, prog: prog.unwrap_or_else(|| "p".to_string()) })
}

pub fn recognize_bdnf(f: &Formula) -> Result<BdnfShape> {
    let mut prog: Option<String> = None;
    let mut fs = Vec::new();
    let mut box_rows = Vec::new();
    let mut dia_rows = Vec::new();
    for disj in f.disjuncts() {
        if disj.is_propositional() {
            fs.push(disj.clone());
            continue;
        }
        let mut props = Vec::new();
        let mut modal: Option<&Formula> = None;
        for c in disj.conjuncts() {
            if c.is_propositional() {
                props.push(c.clone());
            } else if c.is_modal() {
                if modal.is_some() {
                    return Err(PdlError::shape(disj, "row has more than one modal conjunct"));
                }
                modal = Some(c);
            } else {
                return Err(PdlError::shape(c, "disjunction under a conjunction mixes in modalities"));
            }
        }
        let fi = Formula::and_all(props);
        match modal {
            Some(Formula::Box { prog: p, body }) => {
                check_prog(p, &mut prog, disj)?;
                if !body.is_propositional() {
                    return Err(PdlError::shape(body, "box body is not propositional"));
                }
                box_rows.push((fi, (**body).clone()));
            }
            Some(Formula::Dia { prog: p, body }) => {
                check_prog(p, &mut prog, disj)?;
                if !body.is_propositional() {
                    return Err(PdlError::shape(body, "diamond body is not propositional"));
                }
                dia_rows.push((fi, (**body).clone()));
            }
            _ => unreachable!(),
        }
    }
    if box_rows.is_empty() {
        return Err(PdlError::shape(f, "no `F & [p]G` row (s = 0)"));
    }
    if dia_rows.is_empty() {
        return Err(PdlError::shape(f, "no `F & <p>H` row (t = 0)"));
    }
    Ok(BdnfShape { f: Formula::or_all(fs), box_rows, dia_rows, prog: prog.unwrap() })
}

/// Split `<p*>A | Z` into `(p, A, Z)`. The starred diamond may sit anywhere
/// among the top-level disjuncts; the remaining disjuncts form `Z`, which
/// must be propositional.
pub fn split_starred(s: &Formula) -> Result<(String, Formula, Option<Formula>)> {
    let ds = s.disjuncts();
    let mut hit = None;
    let mut rest = Vec::new();
    for d in ds {
        match d {
            Formula::Dia { prog: Program::Star(inner), body } if hit.is_none() => match inner.as_ref() {
                Program::Atom(p) => hit = Some((p.clone(), (**body).clone())),
                _ => return Err(PdlError::shape(d, "starred program is not atomic")),
            },
            g => rest.push(g.clone()),
        }
    }
    let (p, a) = hit.ok_or_else(|| PdlError::shape(s, "no `<p*>A` disjunct"))?;
    let z = Formula::or_all(rest);
    if let Some(z) = &z {
        if !z.is_propositional() {
            return Err(PdlError::shape(z, "Z is not propositional"));
        }
    }
    Ok((p, a, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(f("x"), Formula::var("x"));
        assert_eq!(
            f("<p*>(x | y)"),
            Formula::dia(Program::star(Program::atom("p")), Formula::or(Formula::var("x"), Formula::var("y")))
        );
        let s = parse_sequent("[p;q]~x, y").unwrap();
        assert_eq!(
            s,
            Sequent(vec![
                Formula::boxed(Program::comp(Program::atom("p"), Program::atom("q")), Formula::nvar("x")),
                Formula::var("y")
            ])
        );
    }

    #[test]
    fn precedence() {
        assert_eq!(f("x | y & z"), Formula::or(f("x"), f("y & z")));
        assert_eq!(f("[p]x | y"), Formula::or(f("[p]x"), f("y")));
        assert_eq!(parse_program("p+q;r*").unwrap(), Program::union(Program::atom("p"), Program::comp(Program::atom("q"), Program::star(Program::atom("r")))));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_formula("x | ") {
            Err(PdlError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_formula("~(x)").is_err());
        assert!(parse_formula("[p x").is_err());
    }

    #[test]
    fn render_roundtrip() {
        for s in ["x | (y | z)", "(x | y) & z", "<(p+q)*;r>~x", "[p**]x", "[(p;q);r]x", "[p;(q;r)]x", "x & (y & z)"] {
            let a = f(s);
            assert_eq!(f(&a.to_string()), a, "{s}");
        }
    }

    #[test]
    fn negation_examples() {
        assert_eq!(f("x").negate(), f("~x"));
        assert_eq!(f("<p>(x & y)").negate(), f("[p](~x | ~y)"));
        let g = f("[p;q*](x | ~y)");
        assert_eq!(g.negate().negate(), g);
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(f("x").complexity(), 1);
        assert_eq!(f("x | y").complexity(), 3);
        assert_eq!(f("<p;q>x").complexity(), 2);
        assert_eq!(f("[p*]x").complexity(), 2);
    }

    #[test]
    fn fragments() {
        use Fragment::*;
        let all: BTreeSet<_> = [LEmpty, L00, L0, For10, For1].into_iter().collect();
        assert_eq!(f("x | ~y").classify(), all);
        assert_eq!(f("<p*>x").classify(), [For10, For1].into_iter().collect());
        assert!(f("[p*]x").classify().is_empty());
        assert_eq!(f("<p;q>x").classify(), [L0, For1].into_iter().collect());
        assert_eq!(f("[p]x").classify(), [L00, L0, For10, For1].into_iter().collect());
    }

    #[test]
    fn l00_interpretation() {
        assert_eq!(interpret_into_l00(&f("[p+q]x")).unwrap(), f("[p]x & [q]x"));
        assert_eq!(interpret_into_l00(&f("<p;q>x")).unwrap(), f("<p><q>x"));
        assert_eq!(interpret_into_l00(&f("[p]x")).unwrap(), f("[p]x"));
        assert!(interpret_into_l00(&f("<p*>x")).is_err());
    }

    #[test]
    fn bcnf_examples() {
        let s = recognize_bcnf(&f("x | <p>y | [p]z")).unwrap();
        assert_eq!(s.m(), 1);
        assert_eq!(s.rows[0], BcnfRow { b: Some(f("x")), c: Some(f("y")), d: vec![f("z")] });
        assert_eq!(s.render().unwrap(), f("x | <p>y | [p]z"));
        assert!(recognize_bcnf(&f("<p>x")).is_err());
        assert!(recognize_bcnf(&f("<p>x | <p>y")).is_err());
        assert!(recognize_bcnf(&f("[p][p]x")).is_err());
        assert!(recognize_bcnf(&f("[p]x | [q]y")).is_err());
        let two = recognize_bcnf(&f("(x | [p]y) & ([p]z | [p]w | ~x)")).unwrap();
        assert_eq!(two.bound(), 3);
    }

    #[test]
    fn bdnf_examples() {
        let s = recognize_bdnf(&f("x | (y & [p]z) | (w & <p>v)")).unwrap();
        assert_eq!(s.f, Some(f("x")));
        assert_eq!((s.s(), s.t()), (1, 1));
        assert_eq!(s.render(), f("x | (y & [p]z) | (w & <p>v)"));
        assert!(recognize_bdnf(&f("x | [p]z")).is_err());
        assert!(recognize_bdnf(&f("[p]z | <p>(x & [p]y)")).is_err());
    }

    #[test]
    fn sequent_multiset_semantics() {
        let a = parse_sequent("x, y, x").unwrap();
        let b = parse_sequent("y, x, x").unwrap();
        let c = parse_sequent("y, y, x").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.includes(&parse_sequent("x, x").unwrap()));
        assert!(!a.includes(&parse_sequent("y, y").unwrap()));
    }

    #[test]
    fn starred_split() {
        let (p, a, z) = split_starred(&f("<p*>(x | <p>x) | ~x")).unwrap();
        assert_eq!(p, "p");
        assert_eq!(a, f("x | <p>x"));
        assert_eq!(z, Some(f("~x")));
    }

    #[test]
    fn json_roundtrip() {
        let g = f("<p*;q>(x & [r]~y)");
        let j = serde_json::to_string(&g).unwrap();
        let back: Formula = serde_json::from_str(&j).unwrap();
        assert_eq!(back, g);
    }
}
