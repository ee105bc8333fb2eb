//! Proof search for Seq00 following a fixed priority order: disjunctions
//! first, then conjunctions, and for purely modal sequents a choice of the
//! box that Gen is applied to. The search tree doubles as a Boolean circuit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::calculus::{Derivation, Rule};
use crate::error::{PdlError, Result};
use crate::formula::{Formula, Sequent};
use crate::par;

/// Sequents at least this large have their branches searched in parallel.
const PAR_THRESHOLD: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    AxLeaf,
    FailLeaf,
    OrStep,
    AndStep,
    /// Gen on the box at the given position (with its program's diamonds).
    GenStep(usize),
    /// Drop the box at the given position and keep searching.
    WeakStep(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchTree {
    pub node: Sequent,
    pub kind: StepKind,
    pub children: Vec<SearchTree>,
}

/// How a node of the search tree combines its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Leaf(bool),
    Id,
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub sequent: Sequent,
    pub kind: StepKind,
}

/// One maximal path of the search tree on which the circuit evaluates false.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub path: Vec<TraceStep>,
}

impl Trace {
    /// Compact path encoding: one symbol per step.
    pub fn encode(&self) -> String {
        self.path
            .iter()
            .map(|s| match s.kind {
                StepKind::AxLeaf => "A".to_string(),
                StepKind::FailLeaf => "F".to_string(),
                StepKind::OrStep => "v".to_string(),
                StepKind::AndStep => "&".to_string(),
                StepKind::GenStep(j) => format!("g{j}"),
                StepKind::WeakStep(j) => format!("w{j}"),
            })
            .collect::<Vec<_>>()
            .join(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofResult {
    Proved(Derivation),
    Refuted(Trace),
}

impl ProofResult {
    pub fn is_proved(&self) -> bool {
        matches!(self, ProofResult::Proved(_))
    }
}

fn require_l00(s: &Sequent) -> Result<()> {
    if s.in_l00() {
        Ok(())
    } else {
        Err(PdlError::Fragment(format!("`{s}` is not an L_00 sequent")))
    }
}

/// Position and premise of each Gen candidate of a purely modal sequent:
/// boxes in left-to-right order, each with its program's diamonds.
fn gen_candidates(s: &Sequent) -> Vec<(usize, Sequent)> {
    let mut out = Vec::new();
    for (j, f) in s.iter().enumerate() {
        let Formula::Box { prog, body } = f else { continue };
        let mut prem = vec![(**body).clone()];
        prem.extend(s.iter().filter_map(|g| match g {
            Formula::Dia { prog: q, body } if q == prog => Some((**body).clone()),
            _ => None,
        }));
        out.push((j, Sequent(prem)));
    }
    out
}

fn gen_principals(s: &Sequent, j: usize) -> Vec<Formula> {
    let Formula::Box { prog, .. } = &s.0[j] else { unreachable!() };
    let mut out = vec![s.0[j].clone()];
    out.extend(s.iter().filter(|g| matches!(g, Formula::Dia { prog: q, .. } if q == prog)).cloned());
    out
}

/// The step the priority conditions prescribe at `s`, with its premises.
pub fn expand_step(s: &Sequent) -> (StepKind, Vec<Sequent>) {
    if s.is_axiom() {
        return (StepKind::AxLeaf, Vec::new());
    }
    if let Some(i) = s.iter().position(|f| matches!(f, Formula::Or(..))) {
        let Formula::Or(a, b) = &s.0[i] else { unreachable!() };
        let prem = s.without_index(i).with((**a).clone()).with((**b).clone());
        return (StepKind::OrStep, vec![prem]);
    }
    if let Some(i) = s.iter().position(|f| matches!(f, Formula::And(..))) {
        let Formula::And(a, b) = &s.0[i] else { unreachable!() };
        let rest = s.without_index(i);
        return (StepKind::AndStep, vec![rest.with((**a).clone()), rest.with((**b).clone())]);
    }
    let cands = gen_candidates(s);
    match cands.len() {
        0 => (StepKind::FailLeaf, Vec::new()),
        1 => (StepKind::GenStep(cands[0].0), vec![cands[0].1.clone()]),
        _ => {
            let (j, prem) = cands[0].clone();
            (StepKind::GenStep(j), vec![prem, s.without_index(j)])
        }
    }
}

impl SearchTree {
    pub fn gate(&self) -> Gate {
        match (self.kind, self.children.len()) {
            (StepKind::AxLeaf, _) => Gate::Leaf(true),
            (StepKind::FailLeaf, _) => Gate::Leaf(false),
            (StepKind::AndStep, _) => Gate::And,
            (StepKind::GenStep(_), 2) => Gate::Or,
            _ => Gate::Id,
        }
    }

    /// Circuit value of this node.
    pub fn val(&self) -> bool {
        match self.gate() {
            Gate::Leaf(b) => b,
            Gate::Id => self.children[0].val(),
            Gate::And => self.children.iter().all(SearchTree::val),
            Gate::Or => self.children.iter().any(SearchTree::val),
        }
    }

    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SearchTree::size).sum::<usize>()
    }

    pub fn max_sequent_len(&self) -> usize {
        self.children.iter().map(SearchTree::max_sequent_len).fold(self.node.len(), usize::max)
    }
}

/// Build the whole search tree. In the tree, the second premise of a
/// branching Gen node is reached through an explicit `WeakStep`.
pub fn search_tree(s: &Sequent, max_nodes: usize) -> Result<SearchTree> {
    require_l00(s)?;
    let mut budget = max_nodes;
    build_tree(s, &mut budget)
}

fn build_tree(s: &Sequent, budget: &mut usize) -> Result<SearchTree> {
    if *budget == 0 {
        return Err(PdlError::Bound("search tree exceeds the node budget".into()));
    }
    *budget -= 1;
    let (kind, prems) = expand_step(s);
    let mut children = Vec::with_capacity(prems.len());
    for (i, p) in prems.iter().enumerate() {
        if let (StepKind::GenStep(j), 1) = (kind, i) {
            *budget = budget.checked_sub(1).ok_or_else(|| PdlError::Bound("search tree exceeds the node budget".into()))?;
            let inner = build_tree(p, budget)?;
            children.push(SearchTree { node: p.clone(), kind: StepKind::WeakStep(j), children: vec![inner] });
        } else {
            children.push(build_tree(p, budget)?);
        }
    }
    Ok(SearchTree { node: s.clone(), kind, children })
}

/// Circuit evaluation of the search tree without materialising it.
pub fn eval_circuit(s: &Sequent) -> Result<bool> {
    require_l00(s)?;
    Ok(val(s))
}

fn val(s: &Sequent) -> bool {
    let (kind, prems) = expand_step(s);
    let big = par::is_parallel() && s.size() >= PAR_THRESHOLD;
    match (kind, prems.len()) {
        (StepKind::AxLeaf, _) => true,
        (StepKind::FailLeaf, _) => false,
        (StepKind::AndStep, _) if big => {
            let (a, b) = par::join(|| val(&prems[0]), || val(&prems[1]));
            a && b
        }
        (StepKind::AndStep, _) => val(&prems[0]) && val(&prems[1]),
        (StepKind::GenStep(_), 2) if big => {
            let (a, b) = par::join(|| val(&prems[0]), || val(&prems[1]));
            a || b
        }
        (StepKind::GenStep(_), 2) => val(&prems[0]) || val(&prems[1]),
        _ => val(&prems[0]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Lit(u32, bool),
    Or(u32, u32),
    And(u32, u32),
    Box(u32, u32),
    Dia(u32, u32),
}

/// Memo table for [`eval_memo`]. Formulas are hash-consed, so a sequent is
/// keyed by its sorted set of node ids (derivability ignores multiplicities).
#[derive(Debug, Default)]
pub struct Memo {
    nodes: Vec<Node>,
    ids: HashMap<Node, u32>,
    names: HashMap<String, u32>,
    table: HashMap<Vec<u32>, bool>,
}

impl Memo {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct sequents decided so far.
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn name(&mut self, s: &str) -> u32 {
        let next = self.names.len() as u32;
        *self.names.entry(s.to_string()).or_insert(next)
    }

    fn node(&mut self, n: Node) -> u32 {
        if let Some(&i) = self.ids.get(&n) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(n);
        self.ids.insert(n, i);
        i
    }

    fn intern(&mut self, f: &Formula) -> u32 {
        let n = match f {
            Formula::Lit { var, positive } => Node::Lit(self.name(var), *positive),
            Formula::Or(a, b) => Node::Or(self.intern(a), self.intern(b)),
            Formula::And(a, b) => Node::And(self.intern(a), self.intern(b)),
            Formula::Box { prog, body } => Node::Box(self.name(&prog.to_string()), self.intern(body)),
            Formula::Dia { prog, body } => Node::Dia(self.name(&prog.to_string()), self.intern(body)),
        };
        self.node(n)
    }
}

/// Circuit evaluation sharing results between identical sub-sequents.
pub fn eval_memo(s: &Sequent, memo: &mut Memo) -> Result<bool> {
    require_l00(s)?;
    let ids = s.iter().map(|f| memo.intern(f)).collect();
    Ok(val_memo(ids, memo))
}

fn val_memo(start: Vec<u32>, memo: &mut Memo) -> bool {
    // Or is invertible and never branches, so it is applied eagerly.
    let mut key = Vec::with_capacity(start.len());
    let mut stack = start;
    while let Some(x) = stack.pop() {
        match memo.nodes[x as usize] {
            Node::Or(a, b) => stack.extend([a, b]),
            _ => key.push(x),
        }
    }
    key.sort_unstable();
    key.dedup();
    if let Some(&v) = memo.table.get(&key) {
        return v;
    }
    let axiom = key.iter().any(|&x| match memo.nodes[x as usize] {
        Node::Lit(v, true) => memo.ids.get(&Node::Lit(v, false)).is_some_and(|n| key.binary_search(n).is_ok()),
        _ => false,
    });
    let v = if axiom {
        true
    } else if let Some(i) = key.iter().position(|&x| matches!(memo.nodes[x as usize], Node::And(..))) {
        let Node::And(a, b) = memo.nodes[key[i] as usize] else { unreachable!() };
        let mut rest = key.clone();
        rest.remove(i);
        let mut left = rest.clone();
        left.push(a);
        rest.push(b);
        val_memo(left, memo) && val_memo(rest, memo)
    } else {
        let boxes: Vec<(u32, u32)> = key
            .iter()
            .filter_map(|&x| match memo.nodes[x as usize] {
                Node::Box(p, b) => Some((p, b)),
                _ => None,
            })
            .collect();
        boxes.into_iter().any(|(p, b)| {
            let mut prem = vec![b];
            prem.extend(key.iter().filter_map(|&x| match memo.nodes[x as usize] {
                Node::Dia(q, d) if q == p => Some(d),
                _ => None,
            }));
            val_memo(prem, memo)
        })
    };
    memo.table.insert(key, v);
    v
}

/// Decide `s` and return either a Seq00 derivation or a falsifying path.
pub fn prove(s: &Sequent) -> Result<ProofResult> {
    require_l00(s)?;
    Ok(match search(s) {
        Some(d) => ProofResult::Proved(d),
        None => ProofResult::Refuted(refute(s)),
    })
}

fn search(s: &Sequent) -> Option<Derivation> {
    if s.is_axiom() {
        return Some(Derivation::ax(s.clone()));
    }
    let big = par::is_parallel() && s.size() >= PAR_THRESHOLD;
    let (kind, prems) = expand_step(s);
    match kind {
        StepKind::AxLeaf => Some(Derivation::ax(s.clone())),
        StepKind::FailLeaf | StepKind::WeakStep(_) => None,
        StepKind::OrStep => {
            let i = s.iter().position(|f| matches!(f, Formula::Or(..))).unwrap();
            let child = search(&prems[0])?;
            Some(Derivation::node(Rule::Or, s.clone(), &[s.0[i].clone()], vec![child]))
        }
        StepKind::AndStep => {
            let i = s.iter().position(|f| matches!(f, Formula::And(..))).unwrap();
            let (a, b) = if big {
                par::join(|| search(&prems[0]), || search(&prems[1]))
            } else {
                let a = search(&prems[0])?;
                (Some(a), search(&prems[1]))
            };
            Some(Derivation::node(Rule::And, s.clone(), &[s.0[i].clone()], vec![a?, b?]))
        }
        StepKind::GenStep(_) => {
            // The chain Gen(j1) or Weak(j1) then Gen(j2) ... collapses to a
            // choice among all boxes; Gen absorbs the dropped formulas.
            let cands = gen_candidates(s);
            let found = if big {
                par::map(&cands, |(_, prem)| search(prem)).into_iter().zip(&cands).find_map(|(d, (j, _))| d.map(|d| (*j, d)))
            } else {
                cands.iter().find_map(|(j, prem)| search(prem).map(|d| (*j, d)))
            };
            let (j, child) = found?;
            Some(Derivation::node(Rule::Gen, s.clone(), &gen_principals(s, j), vec![child]))
        }
    }
}

/// Follow a false path: the failing premise of an AND, the first premise of
/// an OR.
fn refute(s: &Sequent) -> Trace {
    let mut path = Vec::new();
    let mut cur = s.clone();
    loop {
        let (kind, prems) = expand_step(&cur);
        path.push(TraceStep { sequent: cur.clone(), kind });
        cur = match (kind, prems.len()) {
            (StepKind::AxLeaf | StepKind::FailLeaf, _) => break,
            (StepKind::AndStep, _) => {
                if val(&prems[0]) {
                    prems[1].clone()
                } else {
                    prems[0].clone()
                }
            }
            _ => prems[0].clone(),
        };
    }
    Trace { path }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceStats {
    /// Longest stack of retained nodes.
    pub peak_path: usize,
    /// Depth bound guaranteed by the subformula property.
    pub depth_bound: usize,
    /// Longest sequent seen on any path.
    pub peak_sequent: usize,
    /// Maximal paths visited.
    pub paths: u64,
}

struct Frame {
    gate: Gate,
    prems: Vec<Sequent>,
    next: usize,
}

/// Depth-first evaluation keeping one path of frames; each frame holds its
/// pending premises and a counter.
pub fn eval_iterative(s: &Sequent) -> Result<(bool, SpaceStats)> {
    require_l00(s)?;
    let mut stats = SpaceStats { peak_path: 0, depth_bound: s.size() + 1, peak_sequent: s.len(), paths: 0 };
    let mut stack: Vec<Frame> = Vec::new();
    let mut pending = Some(s.clone());
    let mut result = false;
    loop {
        if let Some(cur) = pending.take() {
            stats.peak_sequent = stats.peak_sequent.max(cur.len());
            let (kind, prems) = expand_step(&cur);
            let gate = match (kind, prems.len()) {
                (StepKind::AxLeaf, _) => Gate::Leaf(true),
                (StepKind::FailLeaf, _) => Gate::Leaf(false),
                (StepKind::AndStep, _) => Gate::And,
                (StepKind::GenStep(_), 2) => Gate::Or,
                _ => Gate::Id,
            };
            if let Gate::Leaf(b) = gate {
                stats.paths += 1;
                result = b;
            } else {
                stack.push(Frame { gate, prems, next: 0 });
                stats.peak_path = stats.peak_path.max(stack.len());
            }
        } else {
            let Some(top) = stack.last_mut() else { break };
            let done = top.next > 0
                && match top.gate {
                    Gate::And => !result,
                    Gate::Or => result,
                    _ => true,
                };
            if done || top.next == top.prems.len() {
                stack.pop();
                continue;
            }
            pending = Some(std::mem::take(&mut top.prems[top.next]));
            top.next += 1;
        }
    }
    Ok((result, stats))
}

/// Programs occurring in a sequent, for reporting.
pub fn program_names(s: &Sequent) -> Vec<String> {
    let mut set = std::collections::BTreeSet::new();
    for f in s.iter() {
        f.programs(&mut set);
    }
    set.into_iter().collect()
}
