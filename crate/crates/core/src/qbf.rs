//! Deciding `<p*>A | Z` for BDNF `A`: De Morgan conversion of `A` into a
//! BCNF `R` indexed by choice functions, the Boolean recursion `f`, and the
//! quantified Boolean formula obtained by unrolling `f`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{PdlError, Result};
use crate::expansion::{expand, pi_of};
use crate::formula::{recognize_bdnf, split_starred, BcnfRow, BcnfShape, BdnfShape, Formula, Sequent};
use crate::par;
use crate::prover::{eval_memo, Memo};
use crate::semantics::taut_check;

/// Variable used to spell the truth constant as `x0 | ~x0`.
pub const VERUM_VAR: &str = "x0";

/// `R = /\_xi R_xi` with `xi` ranging over `{1,2}^(s+t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvertedBcnf {
    pub s: usize,
    pub t: usize,
    /// One choice function per row of `shape`, values in `{1, 2}`.
    pub xis: Vec<Vec<u8>>,
    /// `J_xi`, as 1-based box-row indices.
    pub j_sets: Vec<Vec<usize>>,
    /// Rows whose `B_xi` picked an absent `F_k` and so became the constant.
    pub constant_rows: Vec<bool>,
    pub shape: BcnfShape,
}

impl ConvertedBcnf {
    /// `n = sum_xi |J_xi|`.
    pub fn n(&self) -> usize {
        self.j_sets.iter().map(Vec::len).sum()
    }

    pub fn render(&self) -> Result<Formula> {
        self.shape.render()
    }

    /// Size of `R_xi`, the truth constant counting as one symbol.
    pub fn row_size(&self, i: usize) -> usize {
        let f = self.shape.rows[i].render(&self.shape.program()).expect("rows are nonempty");
        f.size() - if self.constant_rows[i] { 2 } else { 0 }
    }
}

/// Apply the De Morgan conversion. `xi(k)` for `k <= s` picks between `F_k`
/// and `[p]G_k`; for `k > s` between `F'_(k-s)` and `<p>H_(k-s)`.
pub fn bdnf_to_bcnf(a: &BdnfShape) -> Result<ConvertedBcnf> {
    a.validate()?;
    let (s, t) = (a.s(), a.t());
    if s + t > 20 {
        return Err(PdlError::Bound(format!("2^{} choice functions", s + t)));
    }
    let fs: Vec<&Option<Formula>> = a.box_rows.iter().map(|r| &r.0).chain(a.dia_rows.iter().map(|r| &r.0)).collect();
    let mut xis = Vec::new();
    let mut j_sets = Vec::new();
    let mut constant_rows = Vec::new();
    let mut rows = Vec::new();
    for code in 0u32..(1 << (s + t)) {
        // Bit k-1 set means xi(k) = 2; code 0 is the constant function 1.
        let xi: Vec<u8> = (0..s + t).map(|k| 1 + (code >> k & 1) as u8).collect();
        let mut constant = false;
        let mut bs: Vec<Formula> = a.f.iter().cloned().collect();
        for k in 0..s + t {
            if xi[k] == 1 {
                match fs[k] {
                    Some(f) => bs.push(f.clone()),
                    None => constant = true,
                }
            }
        }
        let b = if constant { Some(Formula::verum(VERUM_VAR)) } else { Formula::or_all(bs) };
        let c = Formula::or_all((s..s + t).filter(|k| xi[*k] == 2).map(|k| a.dia_rows[k - s].1.clone()));
        let j: Vec<usize> = (0..s).filter(|k| xi[*k] == 2).map(|k| k + 1).collect();
        let d = j.iter().map(|k| a.box_rows[k - 1].1.clone()).collect();
        rows.push(BcnfRow { b, c, d });
        xis.push(xi);
        j_sets.push(j);
        constant_rows.push(constant);
    }
    Ok(ConvertedBcnf { s, t, xis, j_sets, constant_rows, shape: BcnfShape { rows, prog: a.prog.clone() } })
}

/// A recognised BDNE `<p*>A | Z` with its conversion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bdne {
    pub bdnf: BdnfShape,
    pub z: Option<Formula>,
    pub r: ConvertedBcnf,
}

impl Bdne {
    pub fn parse(s: &Formula) -> Result<Bdne> {
        let (p, a, z) = split_starred(s)?;
        let bdnf = recognize_bdnf(&a)?;
        if bdnf.prog != p {
            return Err(PdlError::shape(&a, format!("BDNF uses `{}` under `<{p}*>`", bdnf.prog)));
        }
        let r = bdnf_to_bcnf(&bdnf)?;
        Ok(Bdne { bdnf, z, r })
    }
}

fn disj(a: Option<&Formula>, b: Option<&Formula>) -> Option<Formula> {
    Formula::or_all(a.into_iter().chain(b).cloned())
}

/// Memoised evaluation of `f(i, X)`.
pub struct FEval<'a> {
    r: &'a ConvertedBcnf,
    memo: Mutex<HashMap<(usize, Option<Formula>), bool>>,
    taut: Mutex<HashMap<Formula, bool>>,
}

impl<'a> FEval<'a> {
    pub fn new(r: &'a ConvertedBcnf) -> Self {
        FEval { r, memo: Mutex::new(HashMap::new()), taut: Mutex::new(HashMap::new()) }
    }

    /// Plain Boolean validity of a disjunction; the empty one is false.
    fn valid(&self, y: Option<Formula>) -> bool {
        let Some(y) = y else { return false };
        if let Some(v) = self.taut.lock().unwrap().get(&y) {
            return *v;
        }
        let v = taut_check(&y).expect("components are propositional");
        self.taut.lock().unwrap().insert(y, v);
        v
    }

    pub fn f(&self, i: usize, x: Option<&Formula>) -> bool {
        let key = (i, x.cloned());
        if let Some(v) = self.memo.lock().unwrap().get(&key) {
            return *v;
        }
        let rows: Vec<usize> = (0..self.r.shape.rows.len()).collect();
        let per_row = par::map(&rows, |xi| {
            let row = &self.r.shape.rows[*xi];
            if self.valid(disj(row.b.as_ref(), x)) {
                return true;
            }
            row.d.iter().any(|d| {
                let cd = disj(row.c.as_ref(), Some(d));
                if i == 0 {
                    self.valid(cd)
                } else {
                    self.f(i - 1, cd.as_ref())
                }
            })
        });
        let v = per_row.into_iter().all(|b| b);
        self.memo.lock().unwrap().insert(key, v);
        v
    }

    pub fn memo_len(&self) -> usize {
        self.memo.lock().unwrap().len()
    }
}

pub fn f_eval(i: usize, x: Option<&Formula>, r: &ConvertedBcnf) -> bool {
    FEval::new(r).f(i, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Via {
    F,
    Expansion,
    Qbf,
}

impl std::str::FromStr for Via {
    type Err = PdlError;
    fn from_str(s: &str) -> Result<Via> {
        match s {
            "f" => Ok(Via::F),
            "expansion" => Ok(Via::Expansion),
            "qbf" => Ok(Via::Qbf),
            _ => Err(PdlError::Invalid(format!("unknown route `{s}`"))),
        }
    }
}

pub fn decide_bdne_via(s: &Formula, via: Via) -> Result<bool> {
    let e = Bdne::parse(s)?;
    let n = e.r.n();
    Ok(match via {
        Via::F => f_eval(n + 1, e.z.as_ref(), &e.r),
        Via::Expansion => {
            let seq = expand(&e.r.render()?, &pi_of(e.z.as_ref()), n + 1, &e.r.shape.program());
            eval_memo(&seq, &mut Memo::new())?
        }
        Via::Qbf => qbf_eval(&emit_qbf_parsed(&e)),
    })
}

pub fn decide_bdne(s: &Formula) -> Result<bool> {
    decide_bdne_via(s, Via::F)
}

// ---------------------------------------------------------------------------
// Quantified Boolean formulas

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QbfNode {
    Const(bool),
    And(Vec<usize>),
    Or(Vec<usize>),
    /// `forall vars. matrix`, closing exactly the variables of the matrix.
    Forall { vars: Vec<String>, matrix: Formula },
}

/// A quantified Boolean formula stored as a DAG of shared subformulas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qbf {
    pub nodes: Vec<QbfNode>,
    pub root: usize,
}

struct QbfBuilder<'a> {
    r: &'a ConvertedBcnf,
    nodes: Vec<QbfNode>,
    index: HashMap<QbfNode, usize>,
    calls: HashMap<(usize, Option<Formula>), usize>,
}

impl QbfBuilder<'_> {
    fn add(&mut self, n: QbfNode) -> usize {
        if let Some(i) = self.index.get(&n) {
            return *i;
        }
        let i = self.nodes.len();
        self.nodes.push(n.clone());
        self.index.insert(n, i);
        i
    }

    fn closed(&mut self, y: Option<Formula>) -> usize {
        match y {
            None => self.add(QbfNode::Const(false)),
            Some(y) => {
                let vars = y.var_set().into_iter().collect();
                self.add(QbfNode::Forall { vars, matrix: y })
            }
        }
    }

    fn f(&mut self, i: usize, x: Option<&Formula>) -> usize {
        let key = (i, x.cloned());
        if let Some(n) = self.calls.get(&key) {
            return *n;
        }
        let mut conj = Vec::new();
        for xi in 0..self.r.shape.rows.len() {
            let row = self.r.shape.rows[xi].clone();
            let mut alts = vec![self.closed(disj(row.b.as_ref(), x))];
            for d in &row.d {
                let cd = disj(row.c.as_ref(), Some(d));
                alts.push(if i == 0 { self.closed(cd) } else { self.f(i - 1, cd.as_ref()) });
            }
            conj.push(if alts.len() == 1 { alts[0] } else { self.add(QbfNode::Or(alts)) });
        }
        let n = self.add(QbfNode::And(conj));
        self.calls.insert(key, n);
        n
    }
}

fn emit_qbf_parsed(e: &Bdne) -> Qbf {
    let mut b = QbfBuilder { r: &e.r, nodes: Vec::new(), index: HashMap::new(), calls: HashMap::new() };
    let root = b.f(e.r.n() + 1, e.z.as_ref());
    Qbf { nodes: b.nodes, root }
}

/// The QBF `S^` whose truth is equivalent to validity of the BDNE `s`.
pub fn emit_qbf(s: &Formula) -> Result<Qbf> {
    Ok(emit_qbf_parsed(&Bdne::parse(s)?))
}

pub fn qbf_eval(q: &Qbf) -> bool {
    let mut vals: Vec<Option<bool>> = vec![None; q.nodes.len()];
    // Children always precede their parents in `nodes`.
    for (i, n) in q.nodes.iter().enumerate() {
        let v = match n {
            QbfNode::Const(b) => *b,
            QbfNode::And(cs) => cs.iter().all(|c| vals[*c].unwrap()),
            QbfNode::Or(cs) => cs.iter().any(|c| vals[*c].unwrap()),
            QbfNode::Forall { matrix, .. } => taut_check(matrix).expect("matrices are propositional"),
        };
        vals[i] = Some(v);
    }
    vals[q.root].unwrap()
}

impl Qbf {
    /// Symbols in the shared representation: one per gate and edge, and the
    /// quantified variables plus the matrix for each block.
    pub fn size(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                QbfNode::Const(_) => 1,
                QbfNode::And(cs) | QbfNode::Or(cs) => 1 + cs.len(),
                QbfNode::Forall { vars, matrix } => vars.len() + matrix.size(),
            })
            .sum()
    }

    /// Size of the formula written out as a tree, saturating.
    pub fn tree_size(&self) -> u128 {
        let mut sz = vec![0u128; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            sz[i] = match n {
                QbfNode::Const(_) => 1,
                QbfNode::And(cs) | QbfNode::Or(cs) => cs.iter().fold(1u128, |a, c| a.saturating_add(sz[*c])),
                QbfNode::Forall { vars, matrix } => (vars.len() + matrix.size()) as u128,
            };
        }
        sz[self.root]
    }

    pub fn blocks(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, QbfNode::Forall { .. })).count()
    }
}

/// Prenex the universal blocks (each block gets its own copy of its
/// variables) and Tseitin-encode the matrix into QDIMACS. Fails when more
/// than `clause_budget` clauses would be produced.
pub fn export_qdimacs(q: &Qbf, clause_budget: usize) -> Result<String> {
    let mut universals: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); q.nodes.len()];
    let mut next = 1usize;
    let mut reachable = BTreeSet::new();
    let mut stack = vec![q.root];
    while let Some(i) = stack.pop() {
        if !reachable.insert(i) {
            continue;
        }
        if let QbfNode::And(cs) | QbfNode::Or(cs) = &q.nodes[i] {
            stack.extend(cs.iter().copied());
        }
    }
    for i in &reachable {
        if let QbfNode::Forall { vars, .. } = &q.nodes[*i] {
            for v in vars {
                universals[*i].insert(v.clone(), next);
                next += 1;
            }
        }
    }
    let n_univ = next - 1;
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut gate: HashMap<usize, i64> = HashMap::new();
    let push = |clauses: &mut Vec<Vec<i64>>, c: Vec<i64>| -> Result<()> {
        if clauses.len() >= clause_budget {
            return Err(PdlError::Bound(format!("Tseitin encoding exceeds {clause_budget} clauses")));
        }
        clauses.push(c);
        Ok(())
    };

    type PushClause<'a> = dyn Fn(&mut Vec<Vec<i64>>, Vec<i64>) -> Result<()> + 'a;

    fn encode_matrix(
        f: &Formula,
        env: &BTreeMap<String, usize>,
        next: &mut usize,
        clauses: &mut Vec<Vec<i64>>,
        push: &PushClause,
    ) -> Result<i64> {
        match f {
            Formula::Lit { var, positive } => {
                let v = env[var] as i64;
                Ok(if *positive { v } else { -v })
            }
            Formula::Or(a, b) | Formula::And(a, b) => {
                let la = encode_matrix(a, env, next, clauses, push)?;
                let lb = encode_matrix(b, env, next, clauses, push)?;
                let g = *next as i64;
                *next += 1;
                if matches!(f, Formula::Or(..)) {
                    push(clauses, vec![-g, la, lb])?;
                    push(clauses, vec![g, -la])?;
                    push(clauses, vec![g, -lb])?;
                } else {
                    push(clauses, vec![-g, la])?;
                    push(clauses, vec![-g, lb])?;
                    push(clauses, vec![g, -la, -lb])?;
                }
                Ok(g)
            }
            _ => Err(PdlError::Fragment("matrix is not propositional".into())),
        }
    }

    // Children precede parents, so one forward pass assigns every gate.
    for (i, node) in q.nodes.iter().enumerate() {
        if !reachable.contains(&i) {
            continue;
        }
        let lit = match node {
            QbfNode::Const(b) => {
                let g = next as i64;
                next += 1;
                push(&mut clauses, vec![if *b { g } else { -g }])?;
                g
            }
            QbfNode::Forall { matrix, .. } => encode_matrix(matrix, &universals[i], &mut next, &mut clauses, &push)?,
            QbfNode::And(cs) | QbfNode::Or(cs) => {
                let ls: Vec<i64> = cs.iter().map(|c| gate[c]).collect();
                let g = next as i64;
                next += 1;
                if matches!(q.nodes[i], QbfNode::Or(_)) {
                    let mut big = vec![-g];
                    big.extend(&ls);
                    push(&mut clauses, big)?;
                    for l in &ls {
                        push(&mut clauses, vec![g, -l])?;
                    }
                } else {
                    for l in &ls {
                        push(&mut clauses, vec![-g, *l])?;
                    }
                    let mut big = vec![g];
                    big.extend(ls.iter().map(|l| -l));
                    push(&mut clauses, big)?;
                }
                g
            }
        };
        gate.insert(i, lit);
    }
    push(&mut clauses, vec![gate[&q.root]])?;
    let total = next - 1;
    let mut out = String::new();
    writeln!(out, "c universal closure of the unrolled recursion").unwrap();
    writeln!(out, "p cnf {total} {}", clauses.len()).unwrap();
    if n_univ > 0 {
        let vs: Vec<String> = (1..=n_univ).map(|v| v.to_string()).collect();
        writeln!(out, "a {} 0", vs.join(" ")).unwrap();
    }
    if total > n_univ {
        let vs: Vec<String> = (n_univ + 1..=total).map(|v| v.to_string()).collect();
        writeln!(out, "e {} 0", vs.join(" ")).unwrap();
    }
    for c in &clauses {
        let ls: Vec<String> = c.iter().map(|l| l.to_string()).collect();
        writeln!(out, "{} 0", ls.join(" ")).unwrap();
    }
    Ok(out)
}

/// Parsed QDIMACS: variable count, quantifier blocks, clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qdimacs {
    pub vars: usize,
    pub prefix: Vec<(char, Vec<usize>)>,
    pub clauses: Vec<Vec<i64>>,
}

pub fn parse_qdimacs(text: &str) -> Result<Qdimacs> {
    let mut vars = 0;
    let mut prefix = Vec::new();
    let mut clauses = Vec::new();
    for line in text.lines() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first() {
            None | Some(&"c") => {}
            Some(&"p") => {
                vars = toks.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| PdlError::Invalid("bad header".into()))?;
            }
            Some(&q @ ("a" | "e")) => {
                let vs = toks[1..toks.len() - 1].iter().map(|v| v.parse().map_err(|_| PdlError::Invalid("bad variable".into()))).collect::<Result<_>>()?;
                prefix.push((q.chars().next().unwrap(), vs));
            }
            Some(_) => {
                let ls: Vec<i64> = toks.iter().map(|v| v.parse().map_err(|_| PdlError::Invalid("bad literal".into()))).collect::<Result<_>>()?;
                clauses.push(ls[..ls.len() - 1].to_vec());
            }
        }
    }
    Ok(Qdimacs { vars, prefix, clauses })
}

impl Qdimacs {
    /// Brute-force truth of `forall a. exists e. CNF`, for small files.
    pub fn solve_small(&self) -> Result<bool> {
        let univ: Vec<usize> = self.prefix.iter().filter(|(q, _)| *q == 'a').flat_map(|(_, v)| v.clone()).collect();
        if univ.len() > 20 {
            return Err(PdlError::Bound("too many universal variables for brute force".into()));
        }
        for code in 0u64..(1 << univ.len()) {
            let mut assign: HashMap<i64, bool> = HashMap::new();
            for (k, v) in univ.iter().enumerate() {
                assign.insert(*v as i64, code >> k & 1 == 1);
            }
            if !self.unit_propagate(assign) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Tseitin clauses from this module are satisfiable under a universal
    /// assignment exactly when propagation succeeds without conflict.
    fn unit_propagate(&self, mut assign: HashMap<i64, bool>) -> bool {
        loop {
            let mut changed = false;
            for c in &self.clauses {
                let mut unassigned = Vec::new();
                let mut sat = false;
                for l in c {
                    match assign.get(&l.abs()) {
                        Some(v) if *v == (*l > 0) => {
                            sat = true;
                            break;
                        }
                        Some(_) => {}
                        None => unassigned.push(*l),
                    }
                }
                if sat {
                    continue;
                }
                match unassigned.len() {
                    0 => return false,
                    1 => {
                        assign.insert(unassigned[0].abs(), unassigned[0] > 0);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }
}

/// The expansion `R^_(n+1), Z` of a BDNE.
pub fn expansion_sequent(s: &Formula) -> Result<Sequent> {
    let e = Bdne::parse(s)?;
    Ok(expand(&e.r.render()?, &pi_of(e.z.as_ref()), e.r.n() + 1, &e.r.shape.program()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::decide_bcne;
    use crate::formula::{parse_formula, Program};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn conversion_example() {
        let a = recognize_bdnf(&f("u | (v & [p]g) | (w & <p>h)")).unwrap();
        let r = bdnf_to_bcnf(&a).unwrap();
        assert_eq!(r.xis.len(), 4);
        let i = r.xis.iter().position(|x| x == &vec![2, 2]).unwrap();
        assert_eq!(r.shape.rows[i].b, Some(f("u")));
        assert_eq!(r.shape.rows[i].c, Some(f("h")));
        assert_eq!(r.j_sets[i], vec![1]);
        assert_eq!(r.shape.rows[i].d, vec![f("g")]);
        let i = r.xis.iter().position(|x| x == &vec![1, 1]).unwrap();
        assert_eq!(r.shape.rows[i].b, Some(f("u | v | w")));
        assert_eq!(r.shape.rows[i].c, None);
        assert!(r.j_sets[i].is_empty());
        assert_eq!(r.n(), 2);
        for i in 0..4 {
            assert!(r.row_size(i) < a.render().size());
        }
    }

    #[test]
    fn absent_parts_become_constants() {
        let a = recognize_bdnf(&f("[p]g | <p>h")).unwrap();
        let r = bdnf_to_bcnf(&a).unwrap();
        assert_eq!(r.constant_rows.iter().filter(|c| **c).count(), 3);
        // With every F part absent and t = 1 the all-modal row has the same
        // size as A, so only the weak bound holds there.
        for i in 0..4 {
            assert!(r.row_size(i) <= a.render().size(), "{i}");
        }
        let i = r.xis.iter().position(|x| x == &vec![2, 2]).unwrap();
        assert_eq!(r.row_size(i), a.render().size());
    }

    #[test]
    fn f_examples() {
        let r = bdnf_to_bcnf(&recognize_bdnf(&f("(x | ~x) | (y & [p]z) | (y & <p>z)")).unwrap()).unwrap();
        assert!(f_eval(0, Some(&f("x | ~x")), &r));
        let single = ConvertedBcnf {
            s: 0,
            t: 0,
            xis: vec![vec![]],
            j_sets: vec![vec![]],
            constant_rows: vec![false],
            shape: BcnfShape { rows: vec![BcnfRow { b: Some(f("x")), c: None, d: vec![] }], prog: "p".into() },
        };
        assert!(f_eval(0, Some(&f("~x")), &single));
        let r = bdnf_to_bcnf(&recognize_bdnf(&f("(y & [p]z) | (w & <p>z)")).unwrap()).unwrap();
        for i in 0..4 {
            assert!(!f_eval(i, Some(&f("v")), &r));
        }
    }

    #[test]
    fn three_routes_agree() {
        for s in [
            "<p*>((x & [p]y) | (~x & <p>~y)) | z",
            "<p*>((x & [p]y) | (~x & <p>~y)) | x",
            "<p*>(y | (x & [p]x) | <p>~x)",
            "<p*>([p]x | <p>~x) | ~y",
            "<p*>((x & [p]x) | (y & <p>y) | (~x & <p>~y)) | ~y",
            "<p*>(z | ~z | ([p]x & x) | <p>x)",
        ] {
            let g = f(s);
            let a = decide_bdne_via(&g, Via::F).unwrap();
            let b = decide_bdne_via(&g, Via::Expansion).unwrap();
            let c = decide_bdne_via(&g, Via::Qbf).unwrap();
            assert_eq!((a, b), (a, c), "{s}");
            assert_eq!(a, b, "{s}");
        }
        assert!(decide_bdne(&f("<p*>(z | ~z | ([p]x & x) | <p>x)")).unwrap());
    }

    #[test]
    fn bcne_route_on_converted_form() {
        let g = f("<p*>((x & [p]y) | (~x & <p>~y)) | z");
        let e = Bdne::parse(&g).unwrap();
        let r = e.r.render().unwrap();
        let bcne = Formula::or(Formula::dia(Program::star(Program::atom("p")), r), e.z.clone().unwrap());
        assert_eq!(decide_bcne(&bcne).unwrap(), decide_bdne(&g).unwrap());
    }

    #[test]
    fn qdimacs_export() {
        let g = f("<p*>((x & [p]y) | (~x & <p>~y)) | z");
        let q = emit_qbf(&g).unwrap();
        let text = export_qdimacs(&q, 1_000_000).unwrap();
        let parsed = parse_qdimacs(&text).unwrap();
        assert_eq!(parsed.prefix.iter().filter(|(q, _)| *q == 'a').count(), 1);
        assert_eq!(parsed.prefix[0].0, 'a');
        assert!(export_qdimacs(&q, 3).is_err());
    }

    #[test]
    fn qdimacs_truth_matches_evaluation() {
        let block = |m: &str| QbfNode::Forall { vars: f(m).var_set().into_iter().collect(), matrix: f(m) };
        let cases = [
            (vec![block("x | ~x"), block("y"), QbfNode::Or(vec![0, 1])], true),
            (vec![block("x | ~x"), block("y"), QbfNode::And(vec![0, 1])], false),
            (vec![block("x | y"), block("x & ~x"), QbfNode::Or(vec![0, 1]), block("y | ~y"), QbfNode::And(vec![2, 3])], false),
            (vec![block("(x & y) | ~x | ~y"), QbfNode::Const(false), QbfNode::Or(vec![0, 1])], true),
        ];
        for (nodes, expected) in cases {
            let root = nodes.len() - 1;
            let q = Qbf { nodes, root };
            assert_eq!(qbf_eval(&q), expected);
            let parsed = parse_qdimacs(&export_qdimacs(&q, 1000).unwrap()).unwrap();
            assert_eq!(parsed.solve_small().unwrap(), expected);
        }
    }
}
