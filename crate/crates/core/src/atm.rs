//! Encoding of a space-bounded alternating Turing machine run as a PDL
//! formula `Accepts`, its negation as a BDNE `<Next*>A | Z`, a direct
//! simulator, and a bounded model search over well-formed configurations.
//!
//! Atoms are `Symbol_i^a`, `State_i^q` (with the head annotations `l` and
//! `r` as pseudo-states), `Accept`, and the single program `Next`.
//! Positions run over `0..=N+1`, where `N` is the space bound.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{PdlError, Result};
use crate::formula::{BdnfShape, Formula, Program};
use crate::par;
use crate::semantics::{Frame, WorldSet};

pub const ACCEPT: &str = "Accept";
pub const NEXT: &str = "Next";
pub const LEFT: &str = "l";
pub const RIGHT: &str = "r";

fn default_left_end() -> String {
    "lm".into()
}
fn default_right_end() -> String {
    "rm".into()
}

fn input_symbols<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum In {
        Word(String),
        Symbols(Vec<String>),
    }
    Ok(match In::deserialize(d)? {
        In::Word(w) => w.chars().map(String::from).collect(),
        In::Symbols(v) => v,
    })
}

/// Machine description as read from JSON. `alphabet` lists the tape
/// symbols other than the endmarkers and must contain `blank`; `delta`
/// maps `"q,a"` to a list of `[p, b, d]` moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtmSpec {
    pub alphabet: Vec<String>,
    pub blank: String,
    #[serde(default = "default_left_end")]
    pub left_end: String,
    #[serde(default = "default_right_end")]
    pub right_end: String,
    pub states: Vec<String>,
    pub start: String,
    pub universal: Vec<String>,
    pub existential: Vec<String>,
    pub delta: BTreeMap<String, Vec<(String, String, i8)>>,
    #[serde(deserialize_with = "input_symbols")]
    pub input: Vec<String>,
    pub space: usize,
}

type Move = (usize, usize, i64);

/// A validated machine with everything indexed.
#[derive(Debug, Clone)]
pub struct Machine {
    /// Tape alphabet; the last two entries are the left and right endmarkers.
    pub gamma: Vec<String>,
    pub states: Vec<String>,
    pub universal: Vec<bool>,
    pub start: usize,
    pub blank: usize,
    delta: HashMap<(usize, usize), Vec<Move>>,
    pub input: Vec<usize>,
    pub space: usize,
}

fn check_name(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(PdlError::Invalid(format!("{kind} name `{s}` must be a non-empty [A-Za-z0-9_] word")));
    }
    Ok(())
}

fn index_of(names: &[String], s: &str, what: &str) -> Result<usize> {
    names.iter().position(|x| x == s).ok_or_else(|| PdlError::Invalid(format!("unknown {what} `{s}`")))
}

impl AtmSpec {
    pub fn from_json(s: &str) -> Result<AtmSpec> {
        serde_json::from_str(s).map_err(|e| PdlError::Invalid(e.to_string()))
    }

    pub fn compile(&self) -> Result<Machine> {
        let mut gamma = Vec::new();
        for a in &self.alphabet {
            check_name("symbol", a)?;
            if gamma.contains(a) {
                return Err(PdlError::Invalid(format!("symbol `{a}` listed twice")));
            }
            if *a == self.left_end || *a == self.right_end {
                return Err(PdlError::Invalid(format!("symbol `{a}` collides with an endmarker")));
            }
            gamma.push(a.clone());
        }
        check_name("endmarker", &self.left_end)?;
        check_name("endmarker", &self.right_end)?;
        if self.left_end == self.right_end {
            return Err(PdlError::Invalid("the two endmarkers must differ".into()));
        }
        gamma.push(self.left_end.clone());
        gamma.push(self.right_end.clone());
        let blank = index_of(&self.alphabet, &self.blank, "blank symbol")?;

        let mut states = Vec::new();
        for q in &self.states {
            check_name("state", q)?;
            if q == LEFT || q == RIGHT {
                return Err(PdlError::Invalid(format!("state `{q}` collides with a head annotation")));
            }
            if states.contains(q) {
                return Err(PdlError::Invalid(format!("state `{q}` listed twice")));
            }
            states.push(q.clone());
        }
        let start = index_of(&states, &self.start, "start state")?;
        let mut universal = vec![false; states.len()];
        let mut seen = vec![false; states.len()];
        for (list, is_u) in [(&self.universal, true), (&self.existential, false)] {
            for q in list {
                let i = index_of(&states, q, "state")?;
                if seen[i] {
                    return Err(PdlError::Invalid(format!("state `{q}` is both universal and existential")));
                }
                seen[i] = true;
                universal[i] = is_u;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(PdlError::Invalid(format!("state `{}` is neither universal nor existential", states[i])));
        }

        let (lm, rm) = (gamma.len() - 2, gamma.len() - 1);
        let mut delta: HashMap<(usize, usize), Vec<Move>> = HashMap::new();
        for (key, moves) in &self.delta {
            let (q, a) = key.split_once(',').ok_or_else(|| PdlError::Invalid(format!("delta key `{key}` is not `q,a`")))?;
            let q = index_of(&states, q.trim(), "state")?;
            let a = index_of(&gamma, a.trim(), "symbol")?;
            let entry = delta.entry((q, a)).or_default();
            for (p, b, d) in moves {
                let p = index_of(&states, p, "state")?;
                let b = index_of(&gamma, b, "symbol")?;
                if !(-1..=1).contains(d) {
                    return Err(PdlError::Invalid(format!("move direction {d} not in -1..1")));
                }
                let end_a = a == lm || a == rm;
                if end_a && b != a || !end_a && (b == lm || b == rm) {
                    return Err(PdlError::Invalid(format!("move on `{key}` rewrites an endmarker")));
                }
                if a == lm && *d < 0 || a == rm && *d > 0 {
                    return Err(PdlError::Invalid(format!("move on `{key}` leaves the tape")));
                }
                entry.push((p, b, *d as i64));
            }
        }
        let input = self.input.iter().map(|x| index_of(&self.alphabet, x, "input symbol")).collect::<Result<Vec<_>>>()?;
        if input.len() > self.space {
            return Err(PdlError::Invalid(format!("input length {} exceeds the space bound {}", input.len(), self.space)));
        }
        Ok(Machine { gamma, states, universal, start, blank, delta, input, space: self.space })
    }
}

impl Machine {
    pub fn left_end(&self) -> usize {
        self.gamma.len() - 2
    }
    pub fn right_end(&self) -> usize {
        self.gamma.len() - 1
    }
    /// Last position, `N + 1`.
    pub fn last(&self) -> usize {
        self.space + 1
    }
    pub fn moves(&self, q: usize, a: usize) -> &[Move] {
        self.delta.get(&(q, a)).map(Vec::as_slice).unwrap_or(&[])
    }
    pub fn move_count(&self) -> usize {
        self.delta.values().map(Vec::len).sum()
    }

    fn sym(&self, i: usize, a: usize) -> Formula {
        Formula::var(&format!("Symbol_{i}^{}", self.gamma[a]))
    }
    fn nsym(&self, i: usize, a: usize) -> Formula {
        self.sym(i, a).negate()
    }
    /// `q` indexes `states`, then `l`, then `r`.
    fn st(&self, i: usize, q: usize) -> Formula {
        Formula::var(&format!("State_{i}^{}", self.state_name(q)))
    }
    fn nst(&self, i: usize, q: usize) -> Formula {
        self.st(i, q).negate()
    }
    fn state_name(&self, q: usize) -> &str {
        match q.checked_sub(self.states.len()) {
            None => &self.states[q],
            Some(0) => LEFT,
            Some(_) => RIGHT,
        }
    }
    fn l(&self) -> usize {
        self.states.len()
    }
    fn r(&self) -> usize {
        self.states.len() + 1
    }
    /// `State_{i+d}^p`, or the constant 0 when `i + d` leaves the tape.
    fn st_at(&self, i: usize, d: i64, p: usize) -> Formula {
        let j = i as i64 + d;
        if j < 0 || j > self.last() as i64 {
            Formula::falsum(ACCEPT)
        } else {
            self.st(j as usize, p)
        }
    }
    fn positions(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.last()
    }
}

fn acc() -> Formula {
    Formula::var(ACCEPT)
}
fn nacc() -> Formula {
    Formula::nvar(ACCEPT)
}
fn next() -> Program {
    Program::atom(NEXT)
}
fn or_or_false(v: Vec<Formula>) -> Formula {
    Formula::or_all(v).unwrap_or_else(|| Formula::falsum(ACCEPT))
}
fn and_or_true(v: Vec<Formula>) -> Formula {
    Formula::and_all(v).unwrap_or_else(|| Formula::verum(ACCEPT))
}
fn exactly_one(atoms: Vec<Formula>) -> Formula {
    or_or_false(
        (0..atoms.len())
            .map(|a| {
                let others = (0..atoms.len()).filter(|b| *b != a).map(|b| atoms[b].negate()).collect();
                Formula::and(atoms[a].clone(), and_or_true(others))
            })
            .collect(),
    )
}

/// `State_0^s`, the input on cells `1..=n`, blanks on `n+1..=N`.
pub fn start(m: &Machine) -> Formula {
    let mut parts = vec![m.st(0, m.start)];
    for (i, a) in m.input.iter().enumerate() {
        parts.push(m.sym(i + 1, *a));
    }
    for i in m.input.len() + 1..=m.space {
        parts.push(m.sym(i, m.blank));
    }
    and_or_true(parts)
}

/// `repair` asserts the right endmarker positively; otherwise it appears
/// overlined as displayed.
pub fn config(m: &Machine, repair: bool) -> Formula {
    let g = m.gamma.len();
    let qlr = m.states.len() + 2;
    let mut parts = Vec::new();
    for i in m.positions() {
        parts.push(exactly_one((0..g).map(|a| m.sym(i, a)).collect()));
    }
    parts.push(m.sym(0, m.left_end()));
    parts.push(if repair { m.sym(m.last(), m.right_end()) } else { m.nsym(m.last(), m.right_end()) });
    parts.push(or_or_false(m.positions().flat_map(|i| (0..m.states.len()).map(move |q| (i, q))).map(|(i, q)| m.st(i, q)).collect()));
    for i in m.positions() {
        parts.push(exactly_one((0..qlr).map(|q| m.st(i, q)).collect()));
    }
    for i in 0..m.last() {
        for q in (0..m.states.len()).chain([m.l()]) {
            parts.push(Formula::or(m.nst(i, q), m.st(i + 1, m.l())));
        }
    }
    for i in 1..=m.last() {
        for q in (0..m.states.len()).chain([m.r()]) {
            parts.push(Formula::or(m.nst(i, q), m.st(i - 1, m.r())));
        }
    }
    and_or_true(parts)
}

/// Displayed guard `~l | ~r` is vacuous under the exactly-one constraint;
/// `repair` uses `~l & ~r`, so that cells away from the head keep their
/// symbol.
pub fn move_formula(m: &Machine, repair: bool) -> Formula {
    let p = next();
    let mut parts = Vec::new();
    for i in m.positions() {
        let guard = if repair {
            Formula::and(m.nst(i, m.l()), m.nst(i, m.r()))
        } else {
            Formula::or(m.nst(i, m.l()), m.nst(i, m.r()))
        };
        let keep = (0..m.gamma.len()).map(|a| Formula::or(m.nsym(i, a), Formula::boxed(p.clone(), m.sym(i, a)))).collect();
        parts.push(Formula::or(guard, and_or_true(keep)));
    }
    for i in m.positions() {
        for a in 0..m.gamma.len() {
            for q in 0..m.states.len() {
                let succ: Vec<Formula> = m.moves(q, a).iter().map(|(pp, b, d)| Formula::and(m.sym(i, *b), m.st_at(i, *d, *pp))).collect();
                let some = and_or_true(succ.iter().map(|s| Formula::dia(p.clone(), s.clone())).collect());
                let only = Formula::boxed(p.clone(), or_or_false(succ));
                parts.push(Formula::or(m.nsym(i, a), Formula::or(m.nst(i, q), Formula::and(some, only))));
            }
        }
    }
    and_or_true(parts)
}

fn states_of(m: &Machine, universal: bool) -> Vec<(usize, usize)> {
    m.positions().flat_map(|i| (0..m.states.len()).filter(move |q| m.universal[*q] == universal).map(move |q| (i, q))).collect()
}

pub fn acceptance(m: &Machine) -> Formula {
    let p = next();
    let none = |u: bool| and_or_true(states_of(m, u).into_iter().map(|(i, q)| m.nst(i, q)).collect());
    let e = Formula::or(
        none(false),
        Formula::and(Formula::or(acc(), Formula::boxed(p.clone(), nacc())), Formula::or(nacc(), Formula::dia(p.clone(), acc()))),
    );
    let u = Formula::or(
        none(true),
        Formula::and(Formula::or(acc(), Formula::dia(p.clone(), nacc())), Formula::or(nacc(), Formula::boxed(p.clone(), acc()))),
    );
    Formula::and(e, u)
}

/// `Config & Move & Acceptance`, the body under `[Next*]`.
pub fn invariant(m: &Machine, repair: bool) -> Formula {
    Formula::and(config(m, repair), Formula::and(move_formula(m, repair), acceptance(m)))
}

/// `Acc & Start & [Next*](Config & Move & Acceptance)`.
pub fn encode_accepts(m: &Machine, repair: bool) -> Formula {
    Formula::and(acc(), Formula::and(start(m), Formula::boxed(Program::star(next()), invariant(m, repair))))
}

/// The negation as `(A, Z)` with `A` in BDNF over `Next`.
///
/// Without `repair` the rows are the displayed ones verbatim. With `repair`
/// each row is the actual negation of the corresponding repaired conjunct
/// of `Accepts`, which makes `<Next*>A | Z` equivalent to its negation.
pub fn encode_negation_bdne(m: &Machine, repair: bool) -> (BdnfShape, Formula) {
    let g = m.gamma.len();
    let nq = m.states.len();
    let qlr = nq + 2;

    let mut f0 = Vec::new();
    for i in m.positions() {
        let rows = (0..g).map(|a| Formula::or(m.nsym(i, a), or_or_false((0..g).filter(|b| *b != a).map(|b| m.sym(i, b)).collect())));
        f0.push(and_or_true(rows.collect()));
    }
    f0.push(m.nsym(0, m.left_end()));
    f0.push(if repair { m.nsym(m.last(), m.right_end()) } else { m.sym(m.last(), m.right_end()) });
    f0.push(and_or_true(m.positions().flat_map(|i| (0..nq).map(move |q| (i, q))).map(|(i, q)| m.nst(i, q)).collect()));
    for i in m.positions() {
        let rows = (0..qlr).map(|q| Formula::or(m.nst(i, q), or_or_false((0..qlr).filter(|p| *p != q).map(|p| m.st(i, p)).collect())));
        f0.push(and_or_true(rows.collect()));
    }
    for i in 0..m.last() {
        for q in (0..nq).chain([m.l()]) {
            f0.push(if repair {
                Formula::and(m.st(i, q), m.nst(i + 1, m.l()))
            } else {
                Formula::and(m.nst(i, q), m.st(i + 1, m.l()))
            });
        }
    }
    for i in 1..=m.last() {
        for q in (0..nq).chain([m.r()]) {
            f0.push(if repair {
                Formula::and(m.st(i, q), m.nst(i - 1, m.r()))
            } else {
                Formula::and(m.nst(i, q), m.st(i - 1, m.r()))
            });
        }
    }

    let present = |u: bool| -> Formula {
        let s = states_of(m, u);
        if repair {
            or_or_false(s.into_iter().map(|(i, q)| m.st(i, q)).collect())
        } else {
            and_or_true(s.into_iter().map(|(i, q)| m.nst(i, q)).collect())
        }
    };
    let head = |i: usize, q: usize| if repair { m.st(i, q) } else { m.nst(i, q) };

    let mut box_rows = vec![
        (Some(Formula::and(present(false), acc())), nacc()),
        (Some(Formula::and(present(true), nacc())), acc()),
    ];
    let mut dia_rows = vec![
        (Some(Formula::and(present(false), nacc())), acc()),
        (Some(Formula::and(present(true), acc())), nacc()),
    ];
    // R
    for i in m.positions() {
        for a in 0..g {
            for q in 0..nq {
                for (p, b, d) in m.moves(q, a) {
                    box_rows.push((Some(Formula::and(m.sym(i, a), head(i, q))), Formula::or(m.nsym(i, *b), m.st_at(i, *d, *p).negate())));
                }
            }
        }
    }
    // T
    for i in m.positions() {
        for a in 0..g {
            let guard = if repair {
                Formula::or(m.st(i, m.l()), m.st(i, m.r()))
            } else {
                Formula::and(m.st(i, m.l()), m.st(i, m.r()))
            };
            dia_rows.push((Some(Formula::and(guard, m.sym(i, a))), m.nsym(i, a)));
        }
    }
    // S
    for i in m.positions() {
        for a in 0..g {
            for q in 0..nq {
                let alts: Vec<Formula> = m.moves(q, a).iter().map(|(p, b, d)| Formula::or(m.nsym(i, *b), m.st_at(i, *d, *p).negate())).collect();
                let body = if repair { and_or_true(alts) } else { or_or_false(alts) };
                dia_rows.push((Some(Formula::and(m.sym(i, a), head(i, q))), body));
            }
        }
    }

    let shape = BdnfShape { f: Formula::or_all(f0), box_rows, dia_rows, prog: NEXT.into() };
    let z = Formula::or(nacc(), start(m).negate());
    (shape, z)
}

/// `<Next*>A | Z`.
pub fn render_bdne(shape: &BdnfShape, z: &Formula) -> Formula {
    Formula::or(Formula::dia(Program::star(shape.program()), shape.render()), z.clone())
}

/// Expected row counts `(|R|, |T|, |S|)`.
pub fn row_counts(m: &Machine) -> (usize, usize, usize) {
    let cells = m.space + 2;
    (cells * m.move_count(), cells * m.gamma.len(), cells * m.gamma.len() * m.states.len())
}

// ---------------------------------------------------------------------------
// Simulation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtmVerdict {
    Accepts,
    Rejects,
    Bound,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Config {
    state: usize,
    head: usize,
    tape: Vec<usize>,
}

fn initial(m: &Machine) -> Config {
    let mut tape = vec![m.blank; m.space + 2];
    tape[0] = m.left_end();
    tape[m.last()] = m.right_end();
    for (i, a) in m.input.iter().enumerate() {
        tape[i + 1] = *a;
    }
    Config { state: m.start, head: 0, tape }
}

fn successors(m: &Machine, c: &Config) -> Vec<Config> {
    m.moves(c.state, c.tape[c.head])
        .iter()
        .map(|(p, b, d)| {
            let mut tape = c.tape.clone();
            tape[c.head] = *b;
            Config { state: *p, head: (c.head as i64 + d) as usize, tape }
        })
        .collect()
}

/// Least-fixpoint alternating acceptance on the configuration graph: an
/// existential configuration accepts when some successor does, a universal
/// one when all do. Configurations that only reach acceptance through a
/// cycle reject.
pub fn simulate_atm(m: &Machine, max_configs: usize) -> AtmVerdict {
    let mut ids: HashMap<Config, usize> = HashMap::new();
    let mut confs = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    let c0 = initial(m);
    ids.insert(c0.clone(), 0);
    confs.push(c0);
    queue.push_back(0);
    while let Some(u) = queue.pop_front() {
        let mut out = Vec::new();
        for c in successors(m, &confs[u]) {
            let id = match ids.get(&c) {
                Some(id) => *id,
                None => {
                    if confs.len() >= max_configs {
                        return AtmVerdict::Bound;
                    }
                    let id = confs.len();
                    ids.insert(c.clone(), id);
                    confs.push(c);
                    queue.push_back(id);
                    id
                }
            };
            out.push(id);
        }
        if succ.len() <= u {
            succ.resize(u + 1, Vec::new());
        }
        succ[u] = out;
    }
    let mut acc = vec![false; confs.len()];
    loop {
        let mut changed = false;
        for u in 0..confs.len() {
            if acc[u] {
                continue;
            }
            let now = if m.universal[confs[u].state] {
                succ[u].iter().all(|v| acc[*v])
            } else {
                succ[u].iter().any(|v| acc[*v])
            };
            if now {
                acc[u] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if acc[0] {
        AtmVerdict::Accepts
    } else {
        AtmVerdict::Rejects
    }
}

// ---------------------------------------------------------------------------
// Bounded model search

/// `f` with the propositional atoms decided at one world and the modal
/// subformulas left as numbered atoms.
#[derive(Debug, Clone)]
enum Simp {
    Const(bool),
    Modal(usize),
    And(Vec<Simp>),
    Or(Vec<Simp>),
}

impl Simp {
    fn eval(&self, on: &[bool]) -> bool {
        match self {
            Simp::Const(b) => *b,
            Simp::Modal(i) => on[*i],
            Simp::And(v) => v.iter().all(|s| s.eval(on)),
            Simp::Or(v) => v.iter().any(|s| s.eval(on)),
        }
    }
    fn atoms(&self, out: &mut Vec<usize>) {
        match self {
            Simp::Const(_) => {}
            Simp::Modal(i) => out.push(*i),
            Simp::And(v) | Simp::Or(v) => v.iter().for_each(|s| s.atoms(out)),
        }
    }
}

struct Modal {
    is_box: bool,
    ext: WorldSet,
}

struct Local<'a> {
    vals: &'a HashMap<String, WorldSet>,
    index: HashMap<(bool, Formula), usize>,
}

impl Local<'_> {
    fn simp(&self, f: &Formula, w: usize) -> Simp {
        match f {
            Formula::Lit { var, positive } => Simp::Const(self.vals.get(var).is_some_and(|s| s.contains(w)) == *positive),
            Formula::And(a, b) => match (self.simp(a, w), self.simp(b, w)) {
                (Simp::Const(false), _) | (_, Simp::Const(false)) => Simp::Const(false),
                (Simp::Const(true), x) | (x, Simp::Const(true)) => x,
                (x, y) => Simp::And(vec![x, y]),
            },
            Formula::Or(a, b) => match (self.simp(a, w), self.simp(b, w)) {
                (Simp::Const(true), _) | (_, Simp::Const(true)) => Simp::Const(true),
                (Simp::Const(false), x) | (x, Simp::Const(false)) => x,
                (x, y) => Simp::Or(vec![x, y]),
            },
            Formula::Box { body, .. } => Simp::Modal(self.index[&(true, (**body).clone())]),
            Formula::Dia { body, .. } => Simp::Modal(self.index[&(false, (**body).clone())]),
        }
    }
}

fn collect_modals(f: &Formula, prog: &Program, out: &mut Vec<(bool, Formula)>) -> Result<()> {
    match f {
        Formula::Lit { .. } => Ok(()),
        Formula::And(a, b) | Formula::Or(a, b) => {
            collect_modals(a, prog, out)?;
            collect_modals(b, prog, out)
        }
        Formula::Box { prog: p, body } | Formula::Dia { prog: p, body } => {
            if p != prog || !body.is_propositional() {
                return Err(PdlError::Invalid(format!("`{f}` is not a depth-one modality over `{prog}`")));
            }
            out.push((matches!(f, Formula::Box { .. }), (**body).clone()));
            Ok(())
        }
    }
}

/// Outcome of the search: a frame and a world satisfying the target, or
/// `None` when no frame over the universe does.
pub type ModelSearch = Option<(Frame, usize)>;

/// Largest set of universe valuations that can each satisfy `inv` with
/// successors drawn from the set itself, followed by a frame built from
/// the witnesses. Exact for `init & [prog*]inv` over frames whose worlds
/// carry valuations from the universe, provided `init` is propositional
/// and `inv` has modal depth one over `prog`.
pub fn search_invariant_model(universe: &Frame, init: &Formula, inv: &Formula, prog: &Program, max_boxes: usize) -> Result<ModelSearch> {
    if !init.is_propositional() {
        return Err(PdlError::Invalid("initial condition must be propositional".into()));
    }
    let mut found = Vec::new();
    collect_modals(inv, prog, &mut found)?;
    let mut index = HashMap::new();
    let mut modals = Vec::new();
    for (is_box, body) in found {
        if let std::collections::hash_map::Entry::Vacant(e) = index.entry((is_box, body.clone())) {
            e.insert(modals.len());
            modals.push(Modal { is_box, ext: universe.extension(&body) });
        }
    }
    let mut vars = std::collections::BTreeSet::new();
    inv.vars(&mut vars);
    init.vars(&mut vars);
    let vals: HashMap<String, WorldSet> = vars.into_iter().map(|v| (v.clone(), universe.extension(&Formula::var(&v)))).collect();
    let local = Local { vals: &vals, index };
    let n = universe.worlds;
    let simps: Vec<Simp> = par::map_range(n, |w| local.simp(inv, w));

    // For world `w` and the live set, the chosen boxes and one witness per
    // true diamond.
    let choose = |w: usize, alive: &WorldSet| -> Result<Option<Vec<usize>>> {
        let mut atoms = Vec::new();
        simps[w].atoms(&mut atoms);
        atoms.sort_unstable();
        atoms.dedup();
        let (boxes, dias): (Vec<usize>, Vec<usize>) = atoms.into_iter().partition(|a| modals[*a].is_box);
        if boxes.len() > max_boxes {
            return Err(PdlError::Bound(format!("{} box atoms at one world", boxes.len())));
        }
        let mut on = vec![false; modals.len()];
        for mask in 0u64..1 << boxes.len() {
            let mut inter = alive.clone();
            on.iter_mut().for_each(|x| *x = false);
            for (k, b) in boxes.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    on[*b] = true;
                    inter.intersect_with(&modals[*b].ext);
                }
            }
            let mut witnesses = Vec::new();
            for d in &dias {
                let mut s = inter.clone();
                s.intersect_with(&modals[*d].ext);
                let first = s.iter().next();
                if let Some(v) = first {
                    on[*d] = true;
                    witnesses.push(v);
                }
            }
            if simps[w].eval(&on) {
                return Ok(Some(witnesses));
            }
        }
        Ok(None)
    };

    let mut alive = WorldSet::full(n);
    loop {
        let live: Vec<usize> = alive.iter().collect();
        let keep = par::map(&live, |w| choose(*w, &alive).map(|c| c.is_some())).into_iter().collect::<Result<Vec<_>>>()?;
        if keep.iter().all(|k| *k) {
            break;
        }
        let mut next = WorldSet::empty(n);
        for (w, k) in live.iter().zip(keep) {
            if k {
                next.insert(*w);
            }
        }
        alive = next;
    }

    let init_ext = universe.extension(init);
    let Some(root) = alive.iter().find(|w| init_ext.contains(*w)) else {
        return Ok(None);
    };
    // Keep only what the root reaches through witnesses.
    let mut order = vec![root];
    let mut pos: HashMap<usize, usize> = HashMap::from([(root, 0)]);
    let mut edges = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let w = order[i];
        for v in choose(w, &alive)?.expect("survivors have a choice") {
            let next = *pos.entry(v).or_insert_with(|| {
                order.push(v);
                order.len() - 1
            });
            edges.push((i, next));
        }
        i += 1;
    }
    let mut frame = Frame::new(order.len());
    frame.access.insert(prog.atom_name().unwrap_or(NEXT).to_string(), edges);
    for (var, ext) in &vals {
        let ws: Vec<usize> = order.iter().enumerate().filter(|(_, w)| ext.contains(**w)).map(|(k, _)| k).collect();
        if !ws.is_empty() {
            frame.valuation.insert(var.clone(), ws);
        }
    }
    Ok(Some((frame, 0)))
}

/// One world per well-formed configuration valuation: a head position and
/// state with the forced `l`/`r` annotations, one symbol per cell, and a
/// value for `Accept`. Candidates violating `Config` are dropped.
pub fn configuration_universe(m: &Machine, repair: bool, max_worlds: usize) -> Result<Frame> {
    let cells = m.space + 2;
    let g = m.gamma.len();
    let tapes = (g as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    let total = tapes.saturating_mul((cells * m.states.len() * 2) as u128);
    if total > max_worlds as u128 {
        return Err(PdlError::Bound(format!("{total} candidate worlds exceed the bound {max_worlds}")));
    }
    let mut cand = Frame::new(total as usize);
    let mut vals: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut w = 0;
    for code in 0..tapes as usize {
        let mut c = code;
        let tape: Vec<usize> = (0..cells)
            .map(|_| {
                let a = c % g;
                c /= g;
                a
            })
            .collect();
        for head in 0..cells {
            for q in 0..m.states.len() {
                for accept in [false, true] {
                    for (i, a) in tape.iter().enumerate() {
                        vals.entry(format!("Symbol_{i}^{}", m.gamma[*a])).or_default().push(w);
                        let s = if i == head {
                            m.states[q].as_str()
                        } else if i < head {
                            RIGHT
                        } else {
                            LEFT
                        };
                        vals.entry(format!("State_{i}^{s}")).or_default().push(w);
                    }
                    if accept {
                        vals.entry(ACCEPT.into()).or_default().push(w);
                    }
                    w += 1;
                }
            }
        }
    }
    cand.valuation = vals;
    let ok = cand.extension(&config(m, repair));
    let keep: Vec<usize> = ok.iter().collect();
    let mut out = Frame::new(keep.len());
    let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(k, w)| (*w, k)).collect();
    for (var, ws) in &cand.valuation {
        let v: Vec<usize> = ws.iter().filter_map(|w| pos.get(w).copied()).collect();
        if !v.is_empty() {
            out.valuation.insert(var.clone(), v);
        }
    }
    Ok(out)
}

/// Search for a frame satisfying `encode_accepts(m, repair)` among frames
/// whose worlds are well-formed configurations. A model found is checked
/// against the formula by direct evaluation before it is returned.
pub fn bounded_satisfiable(m: &Machine, repair: bool, max_worlds: usize) -> Result<ModelSearch> {
    let universe = configuration_universe(m, repair, max_worlds)?;
    let init = Formula::and(acc(), start(m));
    let found = search_invariant_model(&universe, &init, &invariant(m, repair), &next(), 20)?;
    if let Some((frame, root)) = &found {
        if !frame.eval(*root, &encode_accepts(m, repair))? {
            return Err(PdlError::Invalid("constructed frame does not satisfy the formula".into()));
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::recognize_bdnf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn spec(json: &str) -> Machine {
        AtmSpec::from_json(json).unwrap().compile().unwrap()
    }

    fn parity(input: &str) -> Machine {
        spec(&format!(
            r#"{{"alphabet":["0","1","b"],"blank":"b","states":["e","o","f"],"start":"e",
            "universal":["f"],"existential":["e","o"],
            "delta":{{"e,lm":[["e","lm",1]],"e,0":[["e","0",1]],"e,1":[["o","1",1]],
                      "o,0":[["o","0",1]],"o,1":[["e","1",1]],"o,rm":[["f","rm",0]]}},
            "input":"{input}","space":2}}"#
        ))
    }

    fn branching(universal_start: bool, input: &str) -> Machine {
        let (u, e) = if universal_start { (r#"["s","f"]"#, r#"["t"]"#) } else { (r#"["f"]"#, r#"["s","t"]"#) };
        spec(&format!(
            r#"{{"alphabet":["0","1","b"],"blank":"b","states":["s","t","f"],"start":"s",
            "universal":{u},"existential":{e},
            "delta":{{"s,lm":[["t","lm",1],["f","lm",0]],"t,0":[["t","0",1]],"t,1":[["f","1",0]]}},
            "input":"{input}","space":2}}"#
        ))
    }

    #[test]
    fn spec_validation() {
        let bad = r#"{"alphabet":["0","b"],"blank":"b","states":["s"],"start":"s","universal":["s"],"existential":["s"],"delta":{},"input":"","space":1}"#;
        assert!(AtmSpec::from_json(bad).unwrap().compile().is_err());
        let clash = r#"{"alphabet":["0","b"],"blank":"b","states":["l"],"start":"l","universal":["l"],"existential":[],"delta":{},"input":"","space":1}"#;
        assert!(AtmSpec::from_json(clash).unwrap().compile().is_err());
        let off = r#"{"alphabet":["0","b"],"blank":"b","states":["s"],"start":"s","universal":[],"existential":["s"],"delta":{"s,lm":[["s","lm",-1]]},"input":"","space":1}"#;
        assert!(AtmSpec::from_json(off).unwrap().compile().is_err());
        let m = parity("01");
        assert_eq!(m.gamma, vec!["0", "1", "b", "lm", "rm"]);
        assert_eq!(m.input, vec![0, 1]);
    }

    #[test]
    fn simulation_examples() {
        assert_eq!(simulate_atm(&parity("01"), 1000), AtmVerdict::Accepts);
        assert_eq!(simulate_atm(&parity("11"), 1000), AtmVerdict::Rejects);
        assert_eq!(simulate_atm(&parity("10"), 1000), AtmVerdict::Accepts);
        assert_eq!(simulate_atm(&branching(false, "00"), 1000), AtmVerdict::Accepts);
        assert_eq!(simulate_atm(&branching(true, "00"), 1000), AtmVerdict::Rejects);
        assert_eq!(simulate_atm(&branching(true, "01"), 1000), AtmVerdict::Accepts);
        assert_eq!(simulate_atm(&parity("01"), 2), AtmVerdict::Bound);
        let halt = spec(r#"{"alphabet":["b"],"blank":"b","states":["s"],"start":"s","universal":["s"],"existential":[],"delta":{},"input":"","space":1}"#);
        assert_eq!(simulate_atm(&halt, 10), AtmVerdict::Accepts);
    }

    #[test]
    fn formula_round_trips() {
        let m = parity("01");
        for repair in [false, true] {
            let f = encode_accepts(&m, repair);
            assert_eq!(crate::formula::parse_formula(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn bdne_shape_and_counts() {
        for m in [parity("01"), branching(true, "10")] {
            for repair in [false, true] {
                let (shape, z) = encode_negation_bdne(&m, repair);
                let (r, t, s) = row_counts(&m);
                assert_eq!(shape.s(), 2 + r);
                assert_eq!(shape.t(), 2 + t + s);
                let rendered = shape.render();
                let back = recognize_bdnf(&rendered).unwrap();
                assert_eq!((back.s(), back.t()), (shape.s(), shape.t()));
                assert!(z.is_propositional());
                let full = render_bdne(&shape, &z);
                assert!(crate::expansion::Bcne::parse(&full).is_err());
            }
        }
    }

    #[test]
    fn literal_rows_follow_the_display() {
        let m = parity("0");
        let (shape, _) = encode_negation_bdne(&m, false);
        // The first R row is (0, 0, e, (e, 0, +1)).
        let (fa, ga) = &shape.box_rows[2];
        assert_eq!(fa.as_ref().unwrap().to_string(), "Symbol_0^0 & ~State_0^e");
        assert_eq!(ga.to_string(), "~Symbol_0^0 | ~State_1^e");
        let (shape, _) = encode_negation_bdne(&m, true);
        assert_eq!(shape.box_rows[2].0.as_ref().unwrap().to_string(), "Symbol_0^0 & State_0^e");
    }

    fn random_valuation_frame(m: &Machine, rng: &mut ChaCha8Rng, universe: &Frame, worlds: usize) -> Frame {
        let mut fr = Frame::new(worlds);
        let picks: Vec<usize> = (0..worlds).map(|_| rng.gen_range(0..universe.worlds)).collect();
        let mut names = std::collections::BTreeSet::new();
        encode_accepts(m, true).vars(&mut names);
        for v in names {
            let base = universe.valuation.get(&v);
            let ws: Vec<usize> = (0..worlds)
                .filter(|k| {
                    let on = base.is_some_and(|b| b.contains(&picks[*k]));
                    // Occasional flips leave the well-formed configurations.
                    on ^ rng.gen_bool(0.01)
                })
                .collect();
            fr.valuation.insert(v, ws);
        }
        let edges = (0..worlds).flat_map(|u| (0..worlds).map(move |v| (u, v))).filter(|_| rng.gen_bool(0.5)).collect();
        fr.access.insert(NEXT.into(), edges);
        fr
    }

    #[test]
    fn repaired_bdne_is_the_negation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [parity("01"), branching(true, "01")] {
            let universe = configuration_universe(&m, false, 1 << 20).unwrap();
            let neg = encode_accepts(&m, true).negate();
            let (shape, z) = encode_negation_bdne(&m, true);
            let bdne = render_bdne(&shape, &z);
            let mut differ = 0;
            for round in 0..300 {
                let fr = random_valuation_frame(&m, &mut rng, &universe, 1 + round % 3);
                for w in 0..fr.worlds {
                    if fr.eval(w, &neg).unwrap() != fr.eval(w, &bdne).unwrap() {
                        differ += 1;
                    }
                }
            }
            assert_eq!(differ, 0);
            // The invariant and the BDNF body are complementary at every
            // well-formed world of the universe with arbitrary successors.
            let body = shape.render();
            let inv = invariant(&m, true);
            for round in 0..200 {
                let fr = random_valuation_frame(&m, &mut rng, &universe, 2 + round % 2);
                for w in 0..fr.worlds {
                    assert_ne!(fr.eval(w, &inv).unwrap(), fr.eval(w, &body).unwrap());
                }
            }
        }
    }

    #[test]
    fn simulation_matches_bounded_models() {
        let machines = [parity("01"), parity("11"), parity("10"), branching(true, "00"), branching(true, "01"), branching(false, "00")];
        for m in machines {
            let sim = simulate_atm(&m, 10_000);
            let model = bounded_satisfiable(&m, true, 1 << 20).unwrap();
            assert_eq!(sim == AtmVerdict::Accepts, model.is_some(), "machine on {:?}", m.input);
        }
    }

    #[test]
    fn literal_bdne_is_not_the_negation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = parity("01");
        let universe = configuration_universe(&m, false, 1 << 20).unwrap();
        let (shape, _) = encode_negation_bdne(&m, false);
        let body = shape.render();
        let inv = invariant(&m, false);
        let mut agree = 0;
        for round in 0..200 {
            let fr = random_valuation_frame(&m, &mut rng, &universe, 2 + round % 2);
            agree += (0..fr.worlds).filter(|w| fr.eval(*w, &inv).unwrap() == fr.eval(*w, &body).unwrap()).count();
        }
        assert!(agree > 0);
    }

    #[test]
    fn cyclic_runs_are_read_as_greatest_fixpoints() {
        // A self-loop in an existential state: no finite accepting run, yet
        // `Accept` can be held true along the loop.
        let m = spec(r#"{"alphabet":["b"],"blank":"b","states":["s"],"start":"s","universal":[],"existential":["s"],"delta":{"s,lm":[["s","lm",0]]},"input":"","space":1}"#);
        assert_eq!(simulate_atm(&m, 100), AtmVerdict::Rejects);
        assert!(bounded_satisfiable(&m, true, 1 << 20).unwrap().is_some());
    }

    #[test]
    fn literal_move_guard_is_vacuous() {
        // The head steps right and comes back. With the displayed guard the
        // cell it left may change meanwhile, so the literal encoding admits
        // a model for a machine that rejects.
        let m = spec(
            r#"{"alphabet":["0","1","b"],"blank":"b","states":["s","t","v","w","f"],"start":"s",
            "universal":["f"],"existential":["s","t","v","w"],
            "delta":{"s,lm":[["t","lm",1]],"t,0":[["v","0",1]],"v,b":[["w","b",-1]],"w,1":[["f","1",0]]},
            "input":"0","space":2}"#,
        );
        assert_eq!(simulate_atm(&m, 100), AtmVerdict::Rejects);
        assert!(bounded_satisfiable(&m, true, 1 << 22).unwrap().is_none());
        assert!(bounded_satisfiable(&m, false, 1 << 22).unwrap().is_some());
    }

    #[test]
    fn size_is_at_most_quadratic() {
        let mut ratios = Vec::new();
        for n in 2..=8 {
            let m = spec(&format!(
                r#"{{"alphabet":["0","b"],"blank":"b","states":["s","f"],"start":"s","universal":["f"],"existential":["s"],
                "delta":{{"s,lm":[["s","lm",1]],"s,0":[["s","0",1]],"s,b":[["s","b",1]],"s,rm":[["f","rm",0]]}},
                "input":"0","space":{n}}}"#
            ));
            let acc = encode_accepts(&m, false).size() as f64;
            let (shape, z) = encode_negation_bdne(&m, false);
            let bdne = render_bdne(&shape, &z).size() as f64;
            ratios.push(bdne / (acc * acc));
        }
        let c = ratios[0];
        assert!(ratios.iter().all(|r| *r <= c), "{ratios:?}");
    }
}
