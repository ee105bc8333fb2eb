//! Star elimination by finite expansion: `<p*>A, Π` is replaced by
//! `A, <p>A, ..., <p>^k A, Π`. For BCNF bodies `k = n + 1` suffices, which
//! gives a decision procedure; refutation trees witness the failures.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{PdlError, Result};
use crate::formula::{recognize_bcnf, split_starred, BcnfShape, Formula, Program, Sequent};
use crate::par;
use crate::prover::{eval_circuit, eval_memo, prove, Memo, ProofResult};

/// `A, <p>A, ..., <p>^k A, Π`.
pub fn expand(a: &Formula, pi: &Sequent, k: usize, p: &Program) -> Sequent {
    let mut out: Vec<Formula> = (0..=k).map(|m| Formula::dia_power(p, m, a.clone())).collect();
    out.extend(pi.iter().cloned());
    Sequent(out)
}

pub fn bcnf_bound(a: &BcnfShape) -> usize {
    a.bound()
}

/// `Π` for a starred expression: `{Z}`, or empty when `Z` is absent.
pub fn pi_of(z: Option<&Formula>) -> Sequent {
    Sequent(z.into_iter().cloned().collect())
}

/// A recognised BCNE `<p*>A | Z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bcne {
    pub shape: BcnfShape,
    pub a: Formula,
    pub z: Option<Formula>,
}

impl Bcne {
    pub fn parse(s: &Formula) -> Result<Bcne> {
        let (p, a, z) = split_starred(s)?;
        let mut shape = recognize_bcnf(&a)?;
        let has_modal = shape.rows.iter().any(|r| r.c.is_some() || !r.d.is_empty());
        if has_modal && shape.prog != p {
            return Err(PdlError::shape(&a, format!("BCNF uses `{}` under `<{p}*>`", shape.prog)));
        }
        shape.prog = p;
        Ok(Bcne { shape, a, z })
    }

    pub fn pi(&self) -> Sequent {
        pi_of(self.z.as_ref())
    }

    pub fn expansion(&self, k: usize) -> Sequent {
        expand(&self.a, &self.pi(), k, &self.shape.program())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcneDecision {
    pub valid: bool,
    /// `n = sum_i n_i`; the expansion depth used is `n + 1`.
    pub n: usize,
    pub expansion: Sequent,
}

pub fn decide_bcne_detailed(s: &Formula) -> Result<BcneDecision> {
    let e = Bcne::parse(s)?;
    let n = e.shape.bound();
    let expansion = e.expansion(n + 1);
    let valid = eval_circuit(&expansion)?;
    Ok(BcneDecision { valid, n, expansion })
}

pub fn decide_bcne(s: &Formula) -> Result<bool> {
    Ok(decide_bcne_detailed(s)?.valid)
}

/// Least `k <= cap` whose expansion is provable.
pub fn min_expansion_k(a: &Formula, pi: &Sequent, p: &Program, cap: usize) -> Result<Option<usize>> {
    let mut memo = Memo::new();
    for k in 0..=cap {
        if eval_memo(&expand(a, pi, k, p), &mut memo)? {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Refutation trees

/// Inner nodes record the chosen row; `children[0]` is the son and the
/// remaining children are the daughters, one per box of that row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationTree {
    pub label: Sequent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<RefutationTree>,
}

impl RefutationTree {
    fn leaf(label: Sequent) -> Self {
        RefutationTree { label, row: None, children: Vec::new() }
    }

    pub fn height(&self) -> usize {
        self.children.iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(RefutationTree::size).sum::<usize>()
    }

    fn visit<'a>(&'a self, depth: usize, daughter: bool, out: &mut Vec<(usize, bool, &'a RefutationTree)>) {
        out.push((depth, daughter, self));
        for (i, c) in self.children.iter().enumerate() {
            c.visit(depth + 1, i > 0, out);
        }
    }

    /// Every node with its depth and whether it is a daughter.
    pub fn nodes(&self) -> Vec<(usize, bool, &RefutationTree)> {
        let mut out = Vec::new();
        self.visit(0, false, &mut out);
        out
    }
}

fn son_label(shape: &BcnfShape, i: usize, label: &Sequent) -> Sequent {
    let mut s = label.clone();
    if let Some(b) = &shape.rows[i].b {
        s = s.with(b.clone());
    }
    s
}

fn daughter_label(shape: &BcnfShape, i: usize, j: usize) -> Sequent {
    let row = &shape.rows[i];
    Sequent(row.c.iter().cloned().chain(std::iter::once(row.d[j].clone())).collect())
}

struct TreeBuilder<'a> {
    shape: &'a BcnfShape,
    memo: HashMap<(Vec<Formula>, usize), Option<RefutationTree>>,
    budget: usize,
}

impl TreeBuilder<'_> {
    /// A tree witnessing that `A^_r, label` is not derivable.
    fn build(&mut self, label: &Sequent, r: usize) -> Result<Option<RefutationTree>> {
        let key = (label.sorted(), r);
        if let Some(t) = self.memo.get(&key) {
            return Ok(t.clone());
        }
        if self.budget == 0 {
            return Err(PdlError::Bound("refutation tree exceeds the node budget".into()));
        }
        self.budget -= 1;
        let shape = self.shape;
        let sons: Vec<Sequent> = (0..shape.m()).map(|i| son_label(shape, i, label)).collect();
        let son_ok = par::map(&sons, |s| eval_circuit(s).map(|v| !v)).into_iter().collect::<Result<Vec<_>>>()?;
        let mut found = None;
        'rows: for i in 0..shape.m() {
            if !son_ok[i] {
                continue;
            }
            let mut children = vec![RefutationTree::leaf(sons[i].clone())];
            for j in 0..shape.rows[i].d.len() {
                let dl = daughter_label(shape, i, j);
                let sub = if r == 0 {
                    (!eval_circuit(&dl)?).then(|| RefutationTree::leaf(dl))
                } else {
                    self.build(&dl, r - 1)?
                };
                match sub {
                    Some(t) => children.push(t),
                    None => continue 'rows,
                }
            }
            found = Some(RefutationTree { label: label.clone(), row: Some(i), children });
            break;
        }
        self.memo.insert(key, found.clone());
        Ok(found)
    }
}

/// `T_k` for `A^_k, Π`, or `None` when that sequent is derivable.
pub fn build_refutation_tree(shape: &BcnfShape, pi: &Sequent, k: usize, budget: usize) -> Result<Option<RefutationTree>> {
    shape.validate()?;
    let mut b = TreeBuilder { shape, memo: HashMap::new(), budget };
    b.build(pi, k)
}

/// Check the defining conditions of `T_k`: root label `Π`, every label
/// underivable (the strong form of the leaf condition), row structure, and
/// leaves exactly the sons and the daughters at depth `k + 1`.
pub fn check_refutation_tree(shape: &BcnfShape, pi: &Sequent, k: usize, t: &RefutationTree) -> std::result::Result<(), String> {
    if t.label != *pi {
        return Err("root label is not Π".into());
    }
    let nodes = t.nodes();
    let refuted = par::map(&nodes, |(_, _, n)| match prove(&n.label) {
        Ok(ProofResult::Refuted(_)) => Ok(()),
        Ok(ProofResult::Proved(_)) => Err(format!("label `{}` is derivable", n.label)),
        Err(e) => Err(e.to_string()),
    });
    if let Some(e) = refuted.into_iter().find_map(|r| r.err()) {
        return Err(e);
    }
    for (depth, daughter, n) in nodes {
        let leaf = n.children.is_empty();
        let should_be_leaf = !daughter && depth > 0 || daughter && depth == k + 1;
        if depth > k + 1 {
            return Err(format!("node at depth {depth} exceeds height {}", k + 1));
        }
        if leaf != should_be_leaf {
            return Err(format!("node `{}` at depth {depth}: leaf status is wrong", n.label));
        }
        if leaf {
            continue;
        }
        let i = n.row.ok_or("inner node without a row")?;
        if i >= shape.m() {
            return Err(format!("row {i} out of range"));
        }
        let row = &shape.rows[i];
        if n.children.len() != row.d.len() + 1 {
            return Err(format!("row {i} needs {} children", row.d.len() + 1));
        }
        if n.children[0].label != son_label(shape, i, &n.label) {
            return Err(format!("son of `{}` is mislabelled", n.label));
        }
        for j in 0..row.d.len() {
            if n.children[j + 1].label != daughter_label(shape, i, j) {
                return Err(format!("daughter {j} of `{}` is mislabelled", n.label));
            }
        }
    }
    Ok(())
}

fn node_at_mut<'a>(t: &'a mut RefutationTree, path: &[usize]) -> &'a mut RefutationTree {
    path.iter().fold(t, |n, i| &mut n.children[*i])
}

fn node_at<'a>(t: &'a RefutationTree, path: &[usize]) -> &'a RefutationTree {
    path.iter().fold(t, |n, i| &n.children[*i])
}

fn truncate(t: &mut RefutationTree, depth: usize, max_depth: usize) {
    if depth >= max_depth {
        t.children.clear();
        t.row = None;
        return;
    }
    for c in &mut t.children {
        truncate(c, depth + 1, max_depth);
    }
}

fn first_leaf_daughter(t: &RefutationTree, depth: usize, target: usize, path: &mut Vec<usize>) -> bool {
    if depth == target {
        return t.children.is_empty();
    }
    for (i, c) in t.children.iter().enumerate().skip(1) {
        path.push(i);
        if first_leaf_daughter(c, depth + 1, target, path) {
            return true;
        }
        path.pop();
    }
    false
}

/// One substitution performed while pumping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PumpStep {
    pub leaf: Vec<usize>,
    pub r: usize,
    pub t: usize,
}

/// From `T_s` (with `s > n`) build `T_{s+1}` by replacing, for each leaf
/// daughter, the subtree at the later of the first repeated pair of labels
/// on its path by the subtree at the earlier one, then cutting at height
/// `s + 2`.
pub fn pump(tree: &RefutationTree, s: usize) -> Result<(RefutationTree, Vec<PumpStep>)> {
    let mut t = tree.clone();
    let mut steps = Vec::new();
    loop {
        let mut path = Vec::new();
        if !first_leaf_daughter(&t, 0, s + 1, &mut path) {
            break;
        }
        let labels: Vec<Vec<Formula>> = (1..=path.len()).map(|d| node_at(&t, &path[..d]).label.sorted()).collect();
        // Positions 1..=s+1 along the path; pick the least t, then least r.
        let pair = (1..labels.len()).find_map(|ti| (0..ti).find(|ri| labels[*ri] == labels[ti]).map(|ri| (ri + 1, ti + 1)));
        let (r, tt) = pair.ok_or_else(|| PdlError::Invalid("no repeated daughter label; s must exceed n".into()))?;
        let mut sub = node_at(&t, &path[..r]).clone();
        truncate(&mut sub, tt, s + 2);
        *node_at_mut(&mut t, &path[..tt]) = sub;
        steps.push(PumpStep { leaf: path, r, t: tt });
    }
    Ok((t, steps))
}
