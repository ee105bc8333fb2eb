//! Finite Kripke frames and the semantic oracle.
//!
//! `eval` is plain model checking. `sequent_valid_bounded` searches for a
//! tree-shaped countermodel by building, world by world, a frame that makes
//! every member of the sequent false at the root. Whatever it returns as a
//! countermodel is re-checked with `eval` before it is reported.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PdlError, Result};
use crate::formula::{Formula, Program, Sequent};

/// Fixed-width bitset over worlds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldSet {
    bits: Vec<u64>,
    n: usize,
}

impl WorldSet {
    pub fn empty(n: usize) -> Self {
        WorldSet { bits: vec![0; n.div_ceil(64).max(1)], n }
    }
    pub fn full(n: usize) -> Self {
        let mut s = WorldSet::empty(n);
        for w in 0..n {
            s.insert(w);
        }
        s
    }
    pub fn insert(&mut self, w: usize) {
        self.bits[w / 64] |= 1 << (w % 64);
    }
    pub fn contains(&self, w: usize) -> bool {
        self.bits[w / 64] >> (w % 64) & 1 == 1
    }
    pub fn union_with(&mut self, o: &WorldSet) {
        for (a, b) in self.bits.iter_mut().zip(&o.bits) {
            *a |= b;
        }
    }
    pub fn intersect_with(&mut self, o: &WorldSet) {
        for (a, b) in self.bits.iter_mut().zip(&o.bits) {
            *a &= b;
        }
    }
    pub fn intersects(&self, o: &WorldSet) -> bool {
        self.bits.iter().zip(&o.bits).any(|(a, b)| a & b != 0)
    }
    pub fn is_subset(&self, o: &WorldSet) -> bool {
        self.bits.iter().zip(&o.bits).all(|(a, b)| a & !b == 0)
    }
    pub fn complement(&self) -> WorldSet {
        let mut s = WorldSet::empty(self.n);
        for w in 0..self.n {
            if !self.contains(w) {
                s.insert(w);
            }
        }
        s
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|w| self.contains(*w))
    }
}

/// A binary relation as successor sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    succ: Vec<WorldSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { succ: vec![WorldSet::empty(n); n] }
    }
    pub fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for w in 0..n {
            r.succ[w].insert(w);
        }
        r
    }
    pub fn add(&mut self, u: usize, v: usize) {
        self.succ[u].insert(v);
    }
    pub fn successors(&self, u: usize) -> &WorldSet {
        &self.succ[u]
    }
    fn n(&self) -> usize {
        self.succ.len()
    }
    pub fn compose(&self, o: &Relation) -> Relation {
        let n = self.n();
        let mut r = Relation::empty(n);
        for u in 0..n {
            for v in self.succ[u].iter() {
                let s = o.succ[v].clone();
                r.succ[u].union_with(&s);
            }
        }
        r
    }
    pub fn union(&self, o: &Relation) -> Relation {
        let mut r = self.clone();
        for (a, b) in r.succ.iter_mut().zip(&o.succ) {
            a.union_with(b);
        }
        r
    }
    /// Reflexive-transitive closure.
    pub fn star(&self) -> Relation {
        let n = self.n();
        let mut r = Relation::identity(n);
        for u in 0..n {
            let mut stack = vec![u];
            while let Some(w) = stack.pop() {
                for v in self.succ[w].iter() {
                    if !r.succ[u].contains(v) {
                        r.succ[u].insert(v);
                        stack.push(v);
                    }
                }
            }
        }
        r
    }
    /// Worlds with at least one successor in `s`.
    pub fn pre_exists(&self, s: &WorldSet) -> WorldSet {
        let mut out = WorldSet::empty(self.n());
        for u in 0..self.n() {
            if self.succ[u].intersects(s) {
                out.insert(u);
            }
        }
        out
    }
    /// Worlds all of whose successors lie in `s`.
    pub fn pre_forall(&self, s: &WorldSet) -> WorldSet {
        let mut out = WorldSet::empty(self.n());
        for u in 0..self.n() {
            if self.succ[u].is_subset(s) {
                out.insert(u);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Frame {
    pub worlds: usize,
    #[serde(default)]
    pub access: BTreeMap<String, Vec<(usize, usize)>>,
    #[serde(default)]
    pub valuation: BTreeMap<String, Vec<usize>>,
}

impl Frame {
    pub fn new(worlds: usize) -> Self {
        Frame { worlds, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (p, edges) in &self.access {
            for (u, v) in edges {
                if *u >= self.worlds || *v >= self.worlds {
                    return Err(PdlError::Invalid(format!("edge ({u},{v}) of `{p}` leaves the frame")));
                }
            }
        }
        for (x, ws) in &self.valuation {
            if let Some(w) = ws.iter().find(|w| **w >= self.worlds) {
                return Err(PdlError::Invalid(format!("valuation of `{x}` names world {w}")));
            }
        }
        Ok(())
    }

    pub fn atomic(&self, p: &str) -> Relation {
        let mut r = Relation::empty(self.worlds);
        if let Some(edges) = self.access.get(p) {
            for (u, v) in edges {
                r.add(*u, *v);
            }
        }
        r
    }

    pub fn relation(&self, p: &Program) -> Relation {
        match p {
            Program::Atom(a) => self.atomic(a),
            Program::Comp(a, b) => self.relation(a).compose(&self.relation(b)),
            Program::Union(a, b) => self.relation(a).union(&self.relation(b)),
            Program::Star(a) => self.relation(a).star(),
        }
    }

    /// The set of worlds where `f` holds.
    pub fn extension(&self, f: &Formula) -> WorldSet {
        match f {
            Formula::Lit { var, positive } => {
                let mut s = WorldSet::empty(self.worlds);
                if let Some(ws) = self.valuation.get(var) {
                    for w in ws {
                        s.insert(*w);
                    }
                }
                if *positive {
                    s
                } else {
                    s.complement()
                }
            }
            Formula::Or(a, b) => {
                let mut s = self.extension(a);
                s.union_with(&self.extension(b));
                s
            }
            Formula::And(a, b) => {
                let mut s = self.extension(a);
                s.intersect_with(&self.extension(b));
                s
            }
            Formula::Box { prog, body } => self.relation(prog).pre_forall(&self.extension(body)),
            Formula::Dia { prog, body } => self.relation(prog).pre_exists(&self.extension(body)),
        }
    }

    pub fn eval(&self, world: usize, f: &Formula) -> Result<bool> {
        if world >= self.worlds {
            return Err(PdlError::Invalid(format!("unknown world {world}")));
        }
        Ok(self.extension(f).contains(world))
    }

    /// True iff some member of the sequent holds at `world`.
    pub fn eval_sequent(&self, world: usize, s: &Sequent) -> Result<bool> {
        for f in s.iter() {
            if self.eval(world, f)? {
                return Ok(true);
            }
        }
        if world >= self.worlds {
            return Err(PdlError::Invalid(format!("unknown world {world}")));
        }
        Ok(false)
    }

    pub fn valid(&self, f: &Formula) -> bool {
        self.extension(f) == WorldSet::full(self.worlds)
    }
}

pub fn eval(frame: &Frame, world: usize, f: &Formula) -> Result<bool> {
    frame.eval(world, f)
}

// ---------------------------------------------------------------------------
// Countermodel search

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    /// A `valid` verdict is authoritative when the search provably covered
    /// every candidate. Countermodels are always authoritative.
    pub authoritative: bool,
    pub countermodel: Option<(Frame, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub size: usize,
    pub depth: usize,
}

impl SearchBounds {
    /// Bounds that make the search exhaustive for a star-free sequent.
    pub fn for_sequent(s: &Sequent) -> SearchBounds {
        let depth = s.iter().map(Formula::modal_depth).max().unwrap_or(0);
        SearchBounds { size: 1 << 16, depth: depth.max(1) }
    }
}

struct Builder {
    valuation: Vec<BTreeSet<String>>,
    edges: Vec<(String, usize, usize)>,
    bounds: SearchBounds,
    truncated: bool,
    blocked: bool,
    eventualities: bool,
    star_free: bool,
    failed: HashSet<Vec<Formula>>,
}

struct Saturated {
    lits: BTreeSet<(String, bool)>,
    boxes: Vec<(String, Formula)>,
    dias: Vec<(String, Formula)>,
}

impl Builder {
    /// Expand the non-modal structure of a label, enumerating every
    /// consistent choice of disjuncts.
    fn saturations(&self, label: &[Formula]) -> Vec<Saturated> {
        let mut out = Vec::new();
        let mut todo: Vec<Formula> = label.to_vec();
        todo.reverse();
        let mut seen = HashSet::new();
        self.sat_rec(&mut todo, &mut seen, BTreeSet::new(), Vec::new(), Vec::new(), &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn sat_rec(
        &self,
        todo: &mut Vec<Formula>,
        seen: &mut HashSet<Formula>,
        lits: BTreeSet<(String, bool)>,
        boxes: Vec<(String, Formula)>,
        dias: Vec<(String, Formula)>,
        out: &mut Vec<Saturated>,
    ) {
        let Some(f) = todo.pop() else {
            out.push(Saturated { lits, boxes, dias });
            return;
        };
        if seen.contains(&f) {
            self.sat_rec(todo, seen, lits, boxes, dias, out);
            todo.push(f);
            return;
        }
        seen.insert(f.clone());
        let pushed: Vec<Formula>;
        match &f {
            Formula::Lit { var, positive } => {
                if lits.contains(&(var.clone(), !positive)) {
                    seen.remove(&f);
                    todo.push(f);
                    return;
                }
                let mut l = lits;
                l.insert((var.clone(), *positive));
                self.sat_rec(todo, seen, l, boxes, dias, out);
                seen.remove(&f);
                todo.push(f);
                return;
            }
            Formula::And(a, b) => pushed = vec![(**b).clone(), (**a).clone()],
            Formula::Or(a, b) => {
                for alt in [a, b] {
                    todo.push((**alt).clone());
                    self.sat_rec(todo, seen, lits.clone(), boxes.clone(), dias.clone(), out);
                    todo.pop();
                }
                seen.remove(&f);
                todo.push(f);
                return;
            }
            Formula::Box { prog, body } => match prog {
                Program::Atom(a) => {
                    let mut bx = boxes;
                    bx.push((a.clone(), (**body).clone()));
                    self.sat_rec(todo, seen, lits, bx, dias, out);
                    seen.remove(&f);
                    todo.push(f);
                    return;
                }
                Program::Comp(p, q) => {
                    pushed = vec![Formula::boxed((**p).clone(), Formula::boxed((**q).clone(), (**body).clone()))]
                }
                Program::Union(p, q) => {
                    pushed = vec![
                        Formula::boxed((**q).clone(), (**body).clone()),
                        Formula::boxed((**p).clone(), (**body).clone()),
                    ]
                }
                Program::Star(p) => {
                    pushed = vec![Formula::boxed((**p).clone(), f.clone()), (**body).clone()]
                }
            },
            Formula::Dia { prog, body } => match prog {
                Program::Atom(a) => {
                    let mut ds = dias;
                    ds.push((a.clone(), (**body).clone()));
                    self.sat_rec(todo, seen, lits, boxes, ds, out);
                    seen.remove(&f);
                    todo.push(f);
                    return;
                }
                Program::Comp(p, q) => {
                    pushed = vec![Formula::dia((**p).clone(), Formula::dia((**q).clone(), (**body).clone()))]
                }
                Program::Union(p, q) => {
                    let alt = Formula::or(
                        Formula::dia((**p).clone(), (**body).clone()),
                        Formula::dia((**q).clone(), (**body).clone()),
                    );
                    pushed = vec![alt]
                }
                Program::Star(p) => {
                    let alt = Formula::or((**body).clone(), Formula::dia((**p).clone(), f.clone()));
                    pushed = vec![alt]
                }
            },
        }
        let n = pushed.len();
        todo.extend(pushed);
        self.sat_rec(todo, seen, lits, boxes, dias, out);
        for _ in 0..n {
            todo.pop();
        }
        seen.remove(&f);
        todo.push(f);
    }

    /// Try to realise `label` at a fresh world. Returns the world index.
    fn realise(&mut self, label: Vec<Formula>, path: &mut Vec<(Vec<Formula>, usize)>, depth: usize) -> Option<usize> {
        let mut key = label.clone();
        key.sort();
        key.dedup();
        if let Some((_, w)) = path.iter().find(|(l, _)| *l == key) {
            self.blocked = true;
            return Some(*w);
        }
        if self.star_free && self.failed.contains(&key) {
            return None;
        }
        if self.valuation.len() >= self.bounds.size {
            self.truncated = true;
            return None;
        }
        let truncated_before = self.truncated;
        for Saturated { lits, boxes, dias } in self.saturations(&key) {
            if !dias.is_empty() && depth >= self.bounds.depth {
                self.truncated = true;
                continue;
            }
            let world = self.valuation.len();
            let edges_mark = self.edges.len();
            self.valuation.push(lits.iter().filter(|(_, pos)| *pos).map(|(v, _)| v.clone()).collect());
            path.push((key.clone(), world));
            let mut ok = true;
            for (a, c) in &dias {
                let mut child = vec![c.clone()];
                child.extend(boxes.iter().filter(|(b, _)| b == a).map(|(_, d)| d.clone()));
                match self.realise(child, path, depth + 1) {
                    Some(v) => self.edges.push((a.clone(), world, v)),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            path.pop();
            if ok {
                return Some(world);
            }
            self.valuation.truncate(world);
            self.edges.truncate(edges_mark);
        }
        if self.star_free && self.truncated == truncated_before {
            self.failed.insert(key);
        }
        None
    }

    fn frame(&self) -> Frame {
        let mut f = Frame::new(self.valuation.len());
        for (w, vars) in self.valuation.iter().enumerate() {
            for v in vars {
                f.valuation.entry(v.clone()).or_default().push(w);
            }
        }
        for (p, u, v) in &self.edges {
            f.access.entry(p.clone()).or_default().push((*u, *v));
        }
        f
    }
}

fn has_dia_star(f: &Formula) -> bool {
    match f {
        Formula::Lit { .. } => false,
        Formula::Or(a, b) | Formula::And(a, b) => has_dia_star(a) || has_dia_star(b),
        Formula::Box { body, .. } => has_dia_star(body),
        Formula::Dia { prog, body } => prog.has_star() || has_dia_star(body),
    }
}

/// Search for a world falsifying every member of `gamma`.
pub fn sequent_valid_bounded(gamma: &Sequent, bounds: SearchBounds) -> Verdict {
    let negs: Vec<Formula> = gamma.iter().map(Formula::negate).collect();
    let star_free = gamma.iter().all(Formula::is_star_free);
    let eventualities = negs.iter().any(has_dia_star);
    let mut b = Builder {
        valuation: Vec::new(),
        edges: Vec::new(),
        bounds,
        truncated: false,
        blocked: false,
        eventualities,
        star_free,
        failed: HashSet::new(),
    };
    let mut path = Vec::new();
    match b.realise(negs, &mut path, 0) {
        Some(root) => {
            let frame = b.frame();
            if frame.eval_sequent(root, gamma).unwrap_or(true) {
                // A blocked loop left an eventuality unfulfilled.
                Verdict { valid: true, authoritative: false, countermodel: None }
            } else {
                Verdict { valid: false, authoritative: true, countermodel: Some((frame, root)) }
            }
        }
        None => {
            let authoritative = !b.truncated && !(b.blocked && b.eventualities);
            Verdict { valid: true, authoritative, countermodel: None }
        }
    }
}

/// Exhaustive search with bounds large enough to be authoritative on
/// star-free input and on input without `[P*]` occurrences.
pub fn sequent_valid(gamma: &Sequent) -> Verdict {
    sequent_valid_bounded(gamma, SearchBounds::for_sequent(gamma))
}

// ---------------------------------------------------------------------------
// Brute-force frame enumeration

/// Every frame on exactly `n` worlds over the given programs and variables,
/// in a fixed order. The count is `2^(|progs| n^2 + |vars| n)`.
pub fn frame_count(n: usize, progs: usize, vars: usize) -> Option<u64> {
    let bits = progs * n * n + vars * n;
    if bits >= 63 {
        None
    } else {
        Some(1u64 << bits)
    }
}

pub fn frame_from_code(n: usize, progs: &[String], vars: &[String], code: u64) -> Frame {
    let mut f = Frame::new(n);
    let mut bit = 0;
    for p in progs {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if code >> bit & 1 == 1 {
                    edges.push((u, v));
                }
                bit += 1;
            }
        }
        f.access.insert(p.clone(), edges);
    }
    for x in vars {
        let mut ws = Vec::new();
        for w in 0..n {
            if code >> bit & 1 == 1 {
                ws.push(w);
            }
            bit += 1;
        }
        f.valuation.insert(x.clone(), ws);
    }
    f
}

pub fn random_frame<R: Rng>(rng: &mut R, n: usize, progs: &[String], vars: &[String], edge_p: f64) -> Frame {
    let mut f = Frame::new(n);
    for p in progs {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if rng.gen_bool(edge_p) {
                    edges.push((u, v));
                }
            }
        }
        f.access.insert(p.clone(), edges);
    }
    for x in vars {
        f.valuation.insert(x.clone(), (0..n).filter(|_| rng.gen_bool(0.5)).collect());
    }
    f
}

fn names(fs: &[&Formula]) -> (Vec<String>, Vec<String>) {
    let mut progs = BTreeSet::new();
    let mut vars = BTreeSet::new();
    for f in fs {
        f.programs(&mut progs);
        f.vars(&mut vars);
    }
    (progs.into_iter().collect(), vars.into_iter().collect())
}

/// Outcome of comparing formulas over small frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallFrameCheck {
    pub agree: bool,
    pub frames_checked: u64,
    pub exhaustive: bool,
    pub witness: Option<(Frame, usize)>,
}

/// Check that `a` and `b` hold at the same worlds of every frame with at
/// most `max_worlds` worlds. Falls back to `budget` random frames per size
/// when the exhaustive count is larger than `budget`.
pub fn equivalent_on_small_frames<R: Rng>(a: &Formula, b: &Formula, max_worlds: usize, budget: u64, rng: &mut R) -> SmallFrameCheck {
    let (progs, vars) = names(&[a, b]);
    let mut checked = 0;
    let mut exhaustive = true;
    for n in 1..=max_worlds {
        let count = frame_count(n, progs.len(), vars.len());
        let frames: Box<dyn Iterator<Item = Frame>> = match count {
            Some(c) if c <= budget => Box::new((0..c).map(|code| frame_from_code(n, &progs, &vars, code))),
            _ => {
                exhaustive = false;
                let v: Vec<Frame> = (0..budget).map(|_| random_frame(rng, n, &progs, &vars, 0.4)).collect();
                Box::new(v.into_iter())
            }
        };
        for fr in frames {
            checked += 1;
            let ea = fr.extension(a);
            let eb = fr.extension(b);
            if ea != eb {
                let w = (0..n).find(|w| ea.contains(*w) != eb.contains(*w)).unwrap();
                return SmallFrameCheck { agree: false, frames_checked: checked, exhaustive, witness: Some((fr, w)) };
            }
        }
    }
    SmallFrameCheck { agree: true, frames_checked: checked, exhaustive, witness: None }
}

/// Look for a world satisfying `f` in frames of at most `max_worlds` worlds.
/// Exhaustive when the count is at most `budget`, random sampling otherwise.
pub fn satisfiable_on_small_frames<R: Rng>(f: &Formula, max_worlds: usize, budget: u64, rng: &mut R) -> (Option<(Frame, usize)>, bool) {
    let (progs, vars) = names(&[f]);
    let mut exhaustive = true;
    for n in 1..=max_worlds {
        let count = frame_count(n, progs.len(), vars.len());
        let frames: Box<dyn Iterator<Item = Frame>> = match count {
            Some(c) if c <= budget => Box::new((0..c).map(|code| frame_from_code(n, &progs, &vars, code))),
            _ => {
                exhaustive = false;
                let v: Vec<Frame> = (0..budget).map(|_| random_frame(rng, n, &progs, &vars, 0.4)).collect();
                Box::new(v.into_iter())
            }
        };
        for fr in frames {
            if let Some(w) = fr.extension(f).iter().next() {
                return (Some((fr, w)), exhaustive);
            }
        }
    }
    (None, exhaustive)
}

// ---------------------------------------------------------------------------
// Propositional validity

/// Classical tautology check. Truth tables up to 20 variables, Shannon
/// splitting with simplification above that.
pub fn taut_check(y: &Formula) -> Result<bool> {
    if !y.is_propositional() {
        return Err(PdlError::Fragment(format!("`{y}` is not propositional")));
    }
    let vars: Vec<String> = y.var_set().into_iter().collect();
    if vars.len() <= 20 {
        let idx: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        for row in 0u32..(1u32 << vars.len()) {
            if !eval_row(y, &idx, row) {
                return Ok(false);
            }
        }
        Ok(true)
    } else {
        Ok(split(y, &mut HashMap::new()))
    }
}

fn eval_row(f: &Formula, idx: &BTreeMap<&str, usize>, row: u32) -> bool {
    match f {
        Formula::Lit { var, positive } => (row >> idx[var.as_str()] & 1 == 1) == *positive,
        Formula::Or(a, b) => eval_row(a, idx, row) || eval_row(b, idx, row),
        Formula::And(a, b) => eval_row(a, idx, row) && eval_row(b, idx, row),
        _ => unreachable!(),
    }
}

enum Cof {
    Const(bool),
    F(Formula),
}

fn cofactor(f: &Formula, x: &str, val: bool) -> Cof {
    match f {
        Formula::Lit { var, positive } if var == x => Cof::Const(val == *positive),
        Formula::Lit { .. } => Cof::F(f.clone()),
        Formula::Or(a, b) | Formula::And(a, b) => {
            let is_or = matches!(f, Formula::Or(..));
            match (cofactor(a, x, val), cofactor(b, x, val)) {
                (Cof::Const(c), _) | (_, Cof::Const(c)) if c == is_or => Cof::Const(c),
                (Cof::Const(_), other) | (other, Cof::Const(_)) => other,
                (Cof::F(a), Cof::F(b)) => Cof::F(if is_or { Formula::or(a, b) } else { Formula::and(a, b) }),
            }
        }
        _ => unreachable!(),
    }
}

fn split(f: &Formula, memo: &mut HashMap<Formula, bool>) -> bool {
    if let Some(v) = memo.get(f) {
        return *v;
    }
    let x = f.var_set().into_iter().next().expect("a non-constant formula has a variable");
    let ok = [false, true].into_iter().all(|val| match cofactor(f, &x, val) {
        Cof::Const(c) => c,
        Cof::F(g) => split(&g, memo),
    });
    memo.insert(f.clone(), ok);
    ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, parse_sequent};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn small() -> Frame {
        let mut fr = Frame::new(2);
        fr.access.insert("p".into(), vec![(0, 1)]);
        fr.valuation.insert("x".into(), vec![1]);
        fr
    }

    #[test]
    fn eval_examples() {
        let fr = small();
        assert!(fr.eval(0, &f("<p>x")).unwrap());
        assert!(fr.eval(0, &f("<p*>x")).unwrap());
        assert!(!fr.eval(0, &f("[p*]x")).unwrap());
        assert!(Frame::new(1).eval(0, &f("[p]x")).unwrap());
        assert!(fr.eval(5, &f("x")).is_err());
    }

    #[test]
    fn star_matches_unrolling() {
        let mut fr = Frame::new(4);
        fr.access.insert("p".into(), vec![(0, 1), (1, 2), (2, 3)]);
        fr.valuation.insert("x".into(), vec![3]);
        assert!(fr.eval(0, &f("<p*>x")).unwrap());
        assert!(fr.eval(0, &f("<p;p;p>x")).unwrap());
        assert!(!fr.eval(0, &f("<p;p>x")).unwrap());
    }

    #[test]
    fn search_examples() {
        let v = sequent_valid(&parse_sequent("x, ~x").unwrap());
        assert!(v.valid && v.authoritative);
        let v = sequent_valid(&parse_sequent("[p]x").unwrap());
        assert!(!v.valid);
        let (fr, w) = v.countermodel.unwrap();
        assert_eq!(fr.worlds, 2);
        assert!(!fr.eval(w, &f("[p]x")).unwrap());
        let v = sequent_valid_bounded(&parse_sequent("<p>x, [p]~x").unwrap(), SearchBounds { size: 8, depth: 1 });
        assert!(v.valid && v.authoritative);
    }

    #[test]
    fn search_with_star() {
        let v = sequent_valid(&parse_sequent("<p*>x").unwrap());
        assert!(!v.valid);
        let v = sequent_valid(&parse_sequent("<p*>x, ~x").unwrap());
        assert!(v.valid);
        let v = sequent_valid(&parse_sequent("[p*]x, ~x").unwrap());
        assert!(!v.valid);
        let (fr, w) = v.countermodel.unwrap();
        assert!(!fr.eval(w, &f("[p*]x")).unwrap());
        // The refutation loops forever, so validity is only reported as
        // non-authoritative.
        let v = sequent_valid(&parse_sequent("<p*>~x, [p*]x").unwrap());
        assert!(v.valid && !v.authoritative);
        let v = sequent_valid(&parse_sequent("<p*>(x & <p>~x), ~x, [p*]x").unwrap());
        assert!(v.valid);
    }

    #[test]
    fn taut_examples() {
        assert!(taut_check(&f("x | ~x")).unwrap());
        assert!(!taut_check(&f("x")).unwrap());
        assert!(taut_check(&f("(x & y) | ~x | ~y")).unwrap());
        assert!(taut_check(&f("[p]x")).is_err());
    }

    #[test]
    fn splitting_agrees_with_table() {
        let big = (0..22).map(|i| Formula::verum(&format!("v{i}"))).reduce(Formula::and).unwrap();
        assert!(taut_check(&big).unwrap());
        let bad = Formula::and(big, Formula::var("z"));
        assert!(!taut_check(&bad).unwrap());
    }

    #[test]
    fn frame_json() {
        let fr = small();
        let j = serde_json::to_string(&fr).unwrap();
        assert_eq!(serde_json::from_str::<Frame>(&j).unwrap(), fr);
    }
}
