//! Finite derivations, the rule checker for the four cut-free calculi,
//! extended axioms, the admissible transformations and p-inversion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PdlError, Result};
use crate::formula::{parse_formula, Formula, Program, Sequent};
use crate::ordinal::Ordinal;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Ax,
    Or,
    And,
    DiaUnion,
    BoxUnion,
    DiaComp,
    BoxComp,
    DiaStar,
    Gen,
    Cut,
    Weak,
}

impl Rule {
    pub fn arity(self) -> Option<usize> {
        match self {
            Rule::Ax => Some(0),
            Rule::Or | Rule::DiaUnion | Rule::DiaComp | Rule::BoxComp | Rule::DiaStar | Rule::Gen | Rule::Weak => Some(1),
            Rule::And | Rule::BoxUnion | Rule::Cut => Some(2),
        }
    }

    fn is_decomposition(self) -> bool {
        matches!(self, Rule::Or | Rule::And | Rule::DiaUnion | Rule::BoxUnion | Rule::DiaComp | Rule::BoxComp)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A finite derivation tree. `principal` holds positions in `sequent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub sequent: Sequent,
    pub rule: Rule,
    pub principal: Vec<usize>,
    pub ord: Ordinal,
    pub children: Vec<Derivation>,
    /// The cut formula `C` of a `Cut` node; the left premise holds `C`, the
    /// right one its negation.
    pub cut: Option<Formula>,
}

#[derive(Serialize, Deserialize)]
struct DerivationJson {
    sequent: Vec<String>,
    rule: Rule,
    #[serde(default)]
    principal: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ord: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<DerivationJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cut: Option<String>,
}

impl DerivationJson {
    fn from(d: &Derivation) -> Self {
        DerivationJson {
            sequent: d.sequent.iter().map(|f| f.to_string()).collect(),
            rule: d.rule,
            principal: d.principal.clone(),
            ord: Some(d.ord.to_string()),
            children: d.children.iter().map(DerivationJson::from).collect(),
            cut: d.cut.as_ref().map(|c| c.to_string()),
        }
    }

    fn into_derivation(self) -> Result<Derivation> {
        let sequent = Sequent(self.sequent.iter().map(|s| parse_formula(s)).collect::<Result<_>>()?);
        let children = self.children.into_iter().map(|c| c.into_derivation()).collect::<Result<Vec<_>>>()?;
        let ord = match self.ord {
            Some(o) => o.parse()?,
            None => children.iter().map(|c| c.ord.succ()).max().unwrap_or_default(),
        };
        let cut = self.cut.map(|c| parse_formula(&c)).transpose()?;
        Ok(Derivation { sequent, rule: self.rule, principal: self.principal, ord, children, cut })
    }
}

impl Serialize for Derivation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DerivationJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Derivation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DerivationJson::deserialize(d)?.into_derivation().map_err(serde::de::Error::custom)
    }
}

/// Pick distinct positions of `wanted` inside `seq`.
fn positions_of(seq: &Sequent, wanted: &[Formula]) -> Option<Vec<usize>> {
    let mut used = vec![false; seq.len()];
    let mut out = Vec::with_capacity(wanted.len());
    for w in wanted {
        let i = (0..seq.len()).find(|i| !used[*i] && seq.0[*i] == *w)?;
        used[i] = true;
        out.push(i);
    }
    Some(out)
}

fn next_ord(children: &[Derivation]) -> Ordinal {
    children.iter().map(|c| c.ord.succ()).max().unwrap_or_default()
}

impl Derivation {
    /// Build a node, locating the principal formulas in the conclusion and
    /// labelling it one above its highest premise.
    pub fn node(rule: Rule, sequent: Sequent, principal: &[Formula], children: Vec<Derivation>) -> Derivation {
        let principal = positions_of(&sequent, principal)
            .unwrap_or_else(|| panic!("principal formulas missing from `{sequent}`"));
        let ord = next_ord(&children);
        Derivation { sequent, rule, principal, ord, children, cut: None }
    }

    pub fn ax(sequent: Sequent) -> Derivation {
        let pair = sequent.iter().enumerate().find_map(|(i, f)| match f {
            Formula::Lit { var, positive: true } => sequent
                .iter()
                .position(|g| matches!(g, Formula::Lit { var: v, positive: false } if v == var))
                .map(|j| vec![i, j]),
            _ => None,
        });
        Derivation {
            sequent,
            rule: Rule::Ax,
            principal: pair.unwrap_or_default(),
            ord: Ordinal::zero(),
            children: Vec::new(),
            cut: None,
        }
    }

    pub fn cut_node(sequent: Sequent, c: Formula, left: Derivation, right: Derivation) -> Derivation {
        let ord = next_ord(&[left.clone(), right.clone()]);
        Derivation { sequent, rule: Rule::Cut, principal: Vec::new(), ord, children: vec![left, right], cut: Some(c) }
    }

    pub fn weak_node(sequent: Sequent, child: Derivation) -> Derivation {
        let ord = child.ord.succ();
        Derivation { sequent, rule: Rule::Weak, principal: Vec::new(), ord, children: vec![child], cut: None }
    }

    pub fn principal_formulas(&self) -> Vec<Formula> {
        self.principal.iter().filter_map(|i| self.sequent.0.get(*i).cloned()).collect()
    }

    /// Natural height: leaves have height 0.
    pub fn height(&self) -> usize {
        self.children.iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Derivation::size).sum::<usize>()
    }

    /// Replace every label by the natural height of its subtree.
    pub fn relabel(&mut self) {
        for c in &mut self.children {
            c.relabel();
        }
        self.ord = next_ord(&self.children);
    }

    pub fn relabeled(mut self) -> Derivation {
        self.relabel();
        self
    }

    pub fn is_cut_free(&self) -> bool {
        self.rule != Rule::Cut && self.children.iter().all(Derivation::is_cut_free)
    }

    pub fn count_rule(&self, r: Rule) -> usize {
        (self.rule == r) as usize + self.children.iter().map(|c| c.count_rule(r)).sum::<usize>()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("derivations serialize")
    }

    pub fn from_json(s: &str) -> Result<Derivation> {
        serde_json::from_str(s).map_err(|e| PdlError::Invalid(e.to_string()))
    }

    fn preorder<'a>(&'a self, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Derivation)>) {
        out.push((path.clone(), self));
        for (i, c) in self.children.iter().enumerate() {
            path.push(i);
            c.preorder(path, out);
            path.pop();
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Derivation> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.children.get(*i)?.at(rest),
        }
    }
}

// ---------------------------------------------------------------------------
// Modal prefixes and rule decompositions

/// Walk down `k` modalities of one polarity, returning the prefix programs
/// (outermost first) and the remaining formula.
fn strip_prefix(f: &Formula, is_box: bool, k: usize) -> Option<(Vec<Program>, &Formula)> {
    let mut progs = Vec::with_capacity(k);
    let mut cur = f;
    for _ in 0..k {
        match (cur, is_box) {
            (Formula::Box { prog, body }, true) | (Formula::Dia { prog, body }, false) => {
                progs.push(prog.clone());
                cur = body;
            }
            _ => return None,
        }
    }
    Some((progs, cur))
}

fn modal(is_box: bool, prog: Program, body: Formula) -> Formula {
    if is_box {
        Formula::boxed(prog, body)
    } else {
        Formula::dia(prog, body)
    }
}

fn wrap(is_box: bool, progs: &[Program], body: Formula) -> Formula {
    progs.iter().rev().fold(body, |acc, p| modal(is_box, p.clone(), acc))
}

fn chain_len(f: &Formula) -> usize {
    match f {
        Formula::Box { body, .. } | Formula::Dia { body, .. } => 1 + chain_len(body),
        _ => 0,
    }
}

/// The premise formulas produced by decomposition rule `rule` applied to
/// `f` at prefix depth `k`, one list per premise.
pub fn decompose(rule: Rule, f: &Formula, k: usize) -> Option<Vec<Vec<Formula>>> {
    match rule {
        Rule::Or => match (f, k) {
            (Formula::Or(a, b), 0) => Some(vec![vec![(**a).clone(), (**b).clone()]]),
            _ => None,
        },
        Rule::And => match (f, k) {
            (Formula::And(a, b), 0) => Some(vec![vec![(**a).clone()], vec![(**b).clone()]]),
            _ => None,
        },
        Rule::DiaUnion | Rule::DiaComp | Rule::BoxUnion | Rule::BoxComp => {
            let is_box = matches!(rule, Rule::BoxUnion | Rule::BoxComp);
            let (pre, rest) = strip_prefix(f, is_box, k)?;
            let (prog, body) = match (rest, is_box) {
                (Formula::Box { prog, body }, true) | (Formula::Dia { prog, body }, false) => (prog, body),
                _ => return None,
            };
            let body = (**body).clone();
            match (rule, prog) {
                (Rule::DiaUnion, Program::Union(p, r)) => Some(vec![vec![
                    wrap(false, &pre, Formula::dia((**p).clone(), body.clone())),
                    wrap(false, &pre, Formula::dia((**r).clone(), body)),
                ]]),
                (Rule::BoxUnion, Program::Union(p, r)) => Some(vec![
                    vec![wrap(true, &pre, Formula::boxed((**p).clone(), body.clone()))],
                    vec![wrap(true, &pre, Formula::boxed((**r).clone(), body))],
                ]),
                (Rule::DiaComp, Program::Comp(p, r)) => Some(vec![vec![wrap(
                    false,
                    &pre,
                    Formula::dia((**p).clone(), Formula::dia((**r).clone(), body)),
                )]]),
                (Rule::BoxComp, Program::Comp(p, r)) => Some(vec![vec![wrap(
                    true,
                    &pre,
                    Formula::boxed((**p).clone(), Formula::boxed((**r).clone(), body)),
                )]]),
                _ => None,
            }
        }
        _ => None,
    }
}

fn premise_sequent(concl: &Sequent, principal: &Formula, parts: &[Formula]) -> Option<Sequent> {
    let mut s = concl.remove_one(principal)?;
    s.0.extend(parts.iter().cloned());
    Some(s)
}

/// Depth at which a decomposition node actually applies its rule.
fn decomposition_depth(d: &Derivation) -> Option<usize> {
    let f = d.principal_formulas().into_iter().next()?;
    let max = if matches!(d.rule, Rule::Or | Rule::And) { 0 } else { chain_len(&f) };
    (0..=max).find(|k| match decompose(d.rule, &f, *k) {
        Some(parts) => {
            parts.len() == d.children.len()
                && parts.iter().zip(&d.children).all(|(ps, c)| premise_sequent(&d.sequent, &f, ps).as_ref() == Some(&c.sequent))
        }
        None => false,
    })
}

fn build_decomposition(rule: Rule, concl: Sequent, f: &Formula, children: Vec<Derivation>) -> Derivation {
    Derivation::node(rule, concl, std::slice::from_ref(f), children)
}

/// Match `x` against `<Q..><P>^m A` given the conclusion formula
/// `<Q..><P*>A`; used by the star rule.
fn star_premise_matches(concl_f: &Formula, x: &Formula, general: bool) -> bool {
    let max = if general { chain_len(concl_f) } else { 0 };
    for k in 0..=max {
        let Some((pre, rest)) = strip_prefix(concl_f, false, k) else { continue };
        let Formula::Dia { prog: Program::Star(p), body } = rest else { continue };
        if !general && !p.is_atomic() {
            continue;
        }
        let Some((xpre, mut xrest)) = strip_prefix(x, false, k) else { continue };
        if xpre != pre {
            continue;
        }
        loop {
            if xrest == body.as_ref() {
                return true;
            }
            match xrest {
                Formula::Dia { prog, body: b } if prog == p.as_ref() => xrest = b,
                _ => break,
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Checking

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum System {
    Seq00,
    Seq0,
    Seq10,
    Seq1,
}

impl FromStr for System {
    type Err = PdlError;
    fn from_str(s: &str) -> Result<System> {
        match s.to_ascii_lowercase().as_str() {
            "seq00" => Ok(System::Seq00),
            "seq0" => Ok(System::Seq0),
            "seq10" => Ok(System::Seq10),
            "seq1" => Ok(System::Seq1),
            _ => Err(PdlError::Invalid(format!("unknown system `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub system: System,
    pub cut: bool,
    pub upgraded: bool,
    /// Accept `Weak` annotation nodes.
    pub weak: bool,
}

impl CheckOptions {
    pub fn new(system: System) -> Self {
        CheckOptions { system, cut: false, upgraded: false, weak: false }
    }
    pub fn with_cut(mut self) -> Self {
        self.cut = true;
        self
    }
    pub fn with_upgrades(mut self) -> Self {
        self.upgraded = true;
        self
    }
    pub fn with_weak(mut self) -> Self {
        self.weak = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckResult {
    Valid,
    Invalid { path: Vec<usize>, sequent: String, reason: String },
}

impl CheckResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, CheckResult::Valid)
    }
}

fn check_local(opts: &CheckOptions, d: &Derivation) -> std::result::Result<(), String> {
    let sys = opts.system;
    let compound_rules = matches!(sys, System::Seq0 | System::Seq1);
    if let Some(n) = d.rule.arity() {
        if d.children.len() != n {
            return Err(format!("{} expects {n} premise(s), found {}", d.rule, d.children.len()));
        }
    }
    for c in &d.children {
        if c.ord >= d.ord {
            return Err(format!("premise label {} is not below {}", c.ord, d.ord));
        }
    }
    if d.principal.iter().any(|i| *i >= d.sequent.len()) {
        return Err("principal position out of range".into());
    }
    match d.rule {
        Rule::Ax => {
            if !d.sequent.is_axiom() {
                return Err("not an axiom: no complementary literal pair".into());
            }
            if let [i, j] = d.principal[..] {
                match (&d.sequent.0[i], &d.sequent.0[j]) {
                    (Formula::Lit { var: a, positive: pa }, Formula::Lit { var: b, positive: pb }) if a == b && pa != pb => {}
                    _ => return Err("principal positions are not a complementary pair".into()),
                }
            } else if !d.principal.is_empty() {
                return Err("axiom principal must name two positions".into());
            }
            Ok(())
        }
        r if r.is_decomposition() => {
            if matches!(r, Rule::DiaUnion | Rule::BoxUnion | Rule::DiaComp | Rule::BoxComp) && !compound_rules {
                return Err(format!("{r} is not a rule of {sys:?}"));
            }
            let [i] = d.principal[..] else {
                return Err("exactly one principal position expected".into());
            };
            let f = &d.sequent.0[i];
            let max = if opts.upgraded { chain_len(f) } else { 0 };
            for k in 0..=max {
                if let Some(parts) = decompose(r, f, k) {
                    if parts.iter().zip(&d.children).all(|(ps, c)| premise_sequent(&d.sequent, f, ps).as_ref() == Some(&c.sequent)) {
                        return Ok(());
                    }
                }
            }
            Err(format!("premises do not match {r} applied to `{f}`"))
        }
        Rule::DiaStar => {
            if matches!(sys, System::Seq00 | System::Seq0) {
                return Err(format!("DiaStar is not a rule of {sys:?}"));
            }
            let [i] = d.principal[..] else {
                return Err("exactly one principal position expected".into());
            };
            let f = &d.sequent.0[i];
            let child = &d.children[0].sequent;
            let Some(extra) = child.minus(&d.sequent) else {
                return Err("premise must contain the conclusion".into());
            };
            if extra.len() != 1 {
                return Err("premise must add exactly one formula".into());
            }
            if star_premise_matches(f, &extra.0[0], sys == System::Seq1) {
                Ok(())
            } else {
                Err(format!("`{}` is not an unfolding of `{f}`", extra.0[0]))
            }
        }
        Rule::Gen => {
            if d.principal.is_empty() {
                return Err("Gen needs at least one principal formula".into());
            }
            let mut prog: Option<&Program> = None;
            let mut boxes = 0;
            let mut bodies = Vec::new();
            for i in &d.principal {
                let (p, body, is_box) = match &d.sequent.0[*i] {
                    Formula::Box { prog, body } => (prog, body, true),
                    Formula::Dia { prog, body } => (prog, body, false),
                    g => return Err(format!("Gen principal `{g}` is not modal")),
                };
                if let Some(q) = prog {
                    if q != p {
                        return Err(format!("Gen mixes programs `{q}` and `{p}`"));
                    }
                }
                prog = Some(p);
                boxes += is_box as usize;
                bodies.push((**body).clone());
            }
            let p = prog.unwrap();
            if matches!(sys, System::Seq00 | System::Seq10) && !p.is_atomic() {
                return Err(format!("Gen over compound program `{p}` outside Seq0/Seq1"));
            }
            if boxes != 1 {
                return Err(format!("Gen side condition violated: {boxes} boxes among principals, exactly one required"));
            }
            if Sequent(bodies) != d.children[0].sequent {
                return Err("Gen premise is not the list of principal bodies".into());
            }
            let mut seen = d.principal.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != d.principal.len() {
                return Err("repeated principal position".into());
            }
            Ok(())
        }
        Rule::Cut => {
            if !opts.cut {
                return Err("Cut is not allowed".into());
            }
            let c = d.cut.as_ref().ok_or("Cut node without cut formula")?;
            let l = d.children[0].sequent.remove_one(c).ok_or("left premise lacks the cut formula")?;
            let r = d.children[1].sequent.remove_one(&c.negate()).ok_or("right premise lacks the negated cut formula")?;
            if l.union(&r) != d.sequent {
                return Err("conclusion is not the union of the premise contexts".into());
            }
            Ok(())
        }
        Rule::Weak => {
            if !opts.weak {
                return Err("Weak annotations are not allowed".into());
            }
            if !d.sequent.includes(&d.children[0].sequent) {
                return Err("weakening premise is not a sub-multiset".into());
            }
            Ok(())
        }
        _ => unreachable!(),
    }
}

/// Check every node; the first offending node in preorder is reported.
pub fn check(opts: &CheckOptions, d: &Derivation) -> CheckResult {
    let mut nodes = Vec::new();
    d.preorder(&mut Vec::new(), &mut nodes);
    let results = par::map(&nodes, |(_, n)| check_local(opts, n));
    for ((path, n), r) in nodes.iter().zip(results) {
        if let Err(reason) = r {
            return CheckResult::Invalid { path: path.clone(), sequent: n.sequent.to_string(), reason };
        }
    }
    CheckResult::Valid
}

// ---------------------------------------------------------------------------
// Extended axiom

/// A cut-free derivation of `F, ~F, Γ` built by recursion on `F`.
pub fn extended_axiom(f: &Formula, gamma: &Sequent) -> Result<Derivation> {
    if !f.is_star_free() {
        return Err(PdlError::Fragment(format!("`{f}` contains a starred program; its dual needs the omega-rule")));
    }
    Ok(ext_ax(f, gamma).relabeled())
}

fn ext_ax(f: &Formula, gamma: &Sequent) -> Derivation {
    let nf = f.negate();
    let concl = Sequent(vec![f.clone(), nf.clone()]).union(gamma);
    match f {
        Formula::Lit { .. } => Derivation::ax(concl),
        Formula::Or(a, b) | Formula::And(a, b) => {
            // Apply (|) to whichever of f, ~f is the disjunction, then (&).
            let (disj, conj, da, db, ca, cb) = match f {
                Formula::Or(..) => (f.clone(), nf.clone(), (**a).clone(), (**b).clone(), a.negate(), b.negate()),
                _ => (nf.clone(), f.clone(), a.negate(), b.negate(), (**a).clone(), (**b).clone()),
            };
            let mid = Sequent(vec![da.clone(), db.clone(), conj.clone()]).union(gamma);
            let left = ext_ax(&da, &Sequent(vec![db.clone()]).union(gamma));
            let right = ext_ax(&db, &Sequent(vec![da.clone()]).union(gamma));
            let left = reorder(left, Sequent(vec![da.clone(), db.clone(), ca]).union(gamma));
            let right = reorder(right, Sequent(vec![da.clone(), db.clone(), cb]).union(gamma));
            let and = Derivation::node(Rule::And, mid, &[conj], vec![left, right]);
            Derivation::node(Rule::Or, concl, &[disj], vec![and])
        }
        Formula::Box { prog, body } | Formula::Dia { prog, body } => {
            let is_box = matches!(f, Formula::Box { .. });
            let (bx, dia) = if is_box { (f.clone(), nf.clone()) } else { (nf.clone(), f.clone()) };
            let (bbody, dbody) = match (&bx, &dia) {
                (Formula::Box { body: b1, .. }, Formula::Dia { body: b2, .. }) => ((**b1).clone(), (**b2).clone()),
                _ => unreachable!(),
            };
            match prog {
                Program::Atom(_) => {
                    let prem = ext_ax(body, &Sequent::empty());
                    let prem = reorder(prem, Sequent(vec![bbody, dbody]));
                    Derivation::node(Rule::Gen, concl, &[bx, dia], vec![prem])
                }
                Program::Union(..) => {
                    // <P+R>~A first, then [P+R]A.
                    let dparts = decompose(Rule::DiaUnion, &dia, 0).unwrap().remove(0);
                    let bparts = decompose(Rule::BoxUnion, &bx, 0).unwrap();
                    let mid = Sequent(vec![bx.clone()]).union(&Sequent(dparts.clone())).union(gamma);
                    let mut kids = Vec::new();
                    for (i, bp) in bparts.iter().enumerate() {
                        let other = dparts[1 - i].clone();
                        let sub = ext_ax(&bp[0], &Sequent(vec![other]).union(gamma));
                        kids.push(reorder(sub, Sequent(vec![bp[0].clone()]).union(&Sequent(dparts.clone())).union(gamma)));
                    }
                    let bu = Derivation::node(Rule::BoxUnion, mid, std::slice::from_ref(&bx), kids);
                    Derivation::node(Rule::DiaUnion, concl, &[dia], vec![bu])
                }
                Program::Comp(..) => {
                    let dpart = decompose(Rule::DiaComp, &dia, 0).unwrap().remove(0).remove(0);
                    let bpart = decompose(Rule::BoxComp, &bx, 0).unwrap().remove(0).remove(0);
                    let mid = Sequent(vec![bx.clone(), dpart.clone()]).union(gamma);
                    let sub = ext_ax(&bpart, gamma);
                    let sub = reorder(sub, Sequent(vec![bpart.clone(), dpart]).union(gamma));
                    let bc = Derivation::node(Rule::BoxComp, mid, std::slice::from_ref(&bx), vec![sub]);
                    Derivation::node(Rule::DiaComp, concl, &[dia], vec![bc])
                }
                Program::Star(_) => unreachable!(),
            }
        }
    }
}

/// Re-present the root sequent in another order; the multiset must agree.
pub(crate) fn reorder(mut d: Derivation, target: Sequent) -> Derivation {
    assert_eq!(d.sequent, target, "reorder changes the multiset");
    let pf = d.principal_formulas();
    d.principal = positions_of(&target, &pf).expect("principal formulas survive reordering");
    d.sequent = target;
    d
}

// ---------------------------------------------------------------------------
// Admissible transformations

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    W,
    C,
    OrInv,
    AndInv1,
    AndInv2,
    DiaUnionInv,
    BoxUnionInv1,
    BoxUnionInv2,
    DiaCompInv,
    BoxCompInv,
    GenVec,
}

impl TransformKind {
    pub const ALL: [TransformKind; 11] = [
        TransformKind::W,
        TransformKind::C,
        TransformKind::OrInv,
        TransformKind::AndInv1,
        TransformKind::AndInv2,
        TransformKind::DiaUnionInv,
        TransformKind::BoxUnionInv1,
        TransformKind::BoxUnionInv2,
        TransformKind::DiaCompInv,
        TransformKind::BoxCompInv,
        TransformKind::GenVec,
    ];

    /// Whether the transformation never raises the height.
    pub fn height_preserving(self) -> bool {
        matches!(self, TransformKind::W | TransformKind::C | TransformKind::OrInv | TransformKind::AndInv1 | TransformKind::AndInv2)
    }

    fn inversion(self) -> Option<(Rule, usize)> {
        Some(match self {
            TransformKind::OrInv => (Rule::Or, 0),
            TransformKind::AndInv1 => (Rule::And, 0),
            TransformKind::AndInv2 => (Rule::And, 1),
            TransformKind::DiaUnionInv => (Rule::DiaUnion, 0),
            TransformKind::BoxUnionInv1 => (Rule::BoxUnion, 0),
            TransformKind::BoxUnionInv2 => (Rule::BoxUnion, 1),
            TransformKind::DiaCompInv => (Rule::DiaComp, 0),
            TransformKind::BoxCompInv => (Rule::BoxComp, 0),
            _ => return None,
        })
    }
}

impl FromStr for TransformKind {
    type Err = PdlError;
    fn from_str(s: &str) -> Result<TransformKind> {
        TransformKind::ALL
            .iter()
            .copied()
            .find(|k| format!("{k:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| PdlError::Invalid(format!("unknown transform `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformArgs {
    /// Formulas added by weakening.
    Weaken(Sequent),
    /// Occurrence to contract or invert, with the prefix depth of the
    /// redex for the program inversions.
    Target { formula: Formula, depth: usize },
    /// Programs `P1..Pk` and, per endsequent formula, its box pattern.
    GenVec { progs: Vec<Program>, pattern: Vec<Vec<bool>>, gamma: Sequent },
}

pub fn transform(kind: TransformKind, d: &Derivation, args: &TransformArgs) -> Result<Derivation> {
    let out = match (kind, args) {
        (TransformKind::W, TransformArgs::Weaken(pi)) => weaken(d, pi),
        (TransformKind::C, TransformArgs::Target { formula, .. }) => {
            if d.sequent.count(formula) < 2 {
                return Err(PdlError::Invalid(format!("`{formula}` does not occur twice")));
            }
            contract(d, formula)?
        }
        (TransformKind::GenVec, TransformArgs::GenVec { progs, pattern, gamma }) => gen_vec(d, progs, pattern, gamma)?,
        (k, TransformArgs::Target { formula, depth }) if k.inversion().is_some() => {
            let (rule, side) = k.inversion().unwrap();
            if !d.sequent.contains(formula) {
                return Err(PdlError::Invalid(format!("`{formula}` is not in the endsequent")));
            }
            if decompose(rule, formula, *depth).is_none() {
                return Err(PdlError::shape(formula, format!("no {rule} redex at depth {depth}")));
            }
            invert(d, rule, side, formula, *depth)?
        }
        _ => return Err(PdlError::Invalid(format!("arguments do not fit transform {kind:?}"))),
    };
    Ok(out.relabeled())
}

/// Add `pi` to the endsequent without raising the height.
pub fn weaken(d: &Derivation, pi: &Sequent) -> Derivation {
    if pi.is_empty() {
        return d.clone();
    }
    let concl = d.sequent.union(pi);
    match d.rule {
        Rule::Ax => Derivation::ax(concl),
        Rule::Gen | Rule::Weak => {
            let mut n = d.clone();
            n.sequent = concl;
            n
        }
        Rule::Cut => {
            let l = weaken(&d.children[0], pi);
            Derivation::cut_node(concl, d.cut.clone().unwrap(), l, d.children[1].clone())
        }
        _ => {
            let kids = d.children.iter().map(|c| weaken(c, pi)).collect();
            let mut n = Derivation::node(d.rule, concl, &d.principal_formulas(), kids);
            n.ord = d.ord.clone();
            n
        }
    }
}

fn with_parts(s: &Sequent, f: &Formula, parts: &[Formula]) -> Sequent {
    premise_sequent(s, f, parts).expect("target occurrence present")
}

/// Occurrences of `f` in the context of `d`'s last inference.
fn context_count(d: &Derivation, f: &Formula) -> usize {
    let principal = d.principal_formulas().iter().filter(|g| *g == f).count();
    let principal = if d.rule == Rule::Ax { 0 } else { principal };
    d.sequent.count(f) - principal
}

fn rebuild_context(d: &Derivation, concl: Sequent, kids: Vec<Derivation>) -> Result<Derivation> {
    match d.rule {
        Rule::Ax => Ok(Derivation::ax(concl)),
        Rule::Gen => {
            let mut n = d.clone();
            n.sequent = concl;
            n.principal = positions_of(&n.sequent, &d.principal_formulas()).unwrap();
            n.children = kids;
            Ok(n)
        }
        Rule::Cut => Ok(Derivation::cut_node(concl, d.cut.clone().unwrap(), kids[0].clone(), kids[1].clone())),
        Rule::Weak => Ok(Derivation::weak_node(concl, kids[0].clone())),
        _ => Ok(Derivation::node(d.rule, concl, &d.principal_formulas(), kids)),
    }
}

/// Which premise of a cut carries a context occurrence of `f`.
fn cut_side(d: &Derivation, f: &Formula) -> usize {
    let c = d.cut.as_ref().unwrap();
    let l = d.children[0].sequent.count(f) - (c == f) as usize;
    if l > 0 {
        0
    } else {
        1
    }
}

/// Inversion of `rule` on `f` at depth `k`, keeping premise `side`.
fn invert(d: &Derivation, rule: Rule, side: usize, f: &Formula, k: usize) -> Result<Derivation> {
    let parts = decompose(rule, f, k).ok_or_else(|| PdlError::shape(f, "no redex"))?.remove(side);
    let concl = with_parts(&d.sequent, f, &parts);
    let ctx = context_count(d, f);
    match d.rule {
        Rule::Ax => Ok(Derivation::ax(concl)),
        Rule::Weak => {
            if d.children[0].sequent.contains(f) {
                let c = invert(&d.children[0], rule, side, f, k)?;
                Ok(Derivation::weak_node(concl, c))
            } else {
                Ok(Derivation::weak_node(concl, d.children[0].clone()))
            }
        }
        Rule::Cut => {
            let s = cut_side(d, f);
            let mut kids = d.children.clone();
            kids[s] = invert(&kids[s], rule, side, f, k)?;
            rebuild_context(d, concl, kids)
        }
        Rule::Gen => {
            if ctx > 0 {
                return rebuild_context(d, concl, d.children.clone());
            }
            invert_gen_principal(d, rule, side, f, k, concl)
        }
        Rule::DiaStar => {
            if ctx == 0 {
                return Err(PdlError::Invalid("inversion through a principal star inference is not supported".into()));
            }
            let c = invert(&d.children[0], rule, side, f, k)?;
            rebuild_context(d, concl, vec![c])
        }
        r => {
            let g = d.principal_formulas().remove(0);
            if g != *f || ctx > 0 {
                let kids = d.children.iter().map(|c| invert(c, rule, side, f, k)).collect::<Result<Vec<_>>>()?;
                return rebuild_context(d, concl, kids);
            }
            let j = decomposition_depth(d).ok_or_else(|| PdlError::Invalid("malformed decomposition node".into()))?;
            if r == rule && j == k {
                return Ok(d.children[side].clone());
            }
            invert_permute(d, rule, side, f, k, j, concl)
        }
    }
}

/// `f` is principal in a program rule at a depth other than the target:
/// invert its descendants in the premises, then reapply the rule to each part.
fn invert_permute(d: &Derivation, rule: Rule, side: usize, f: &Formula, k: usize, j: usize, concl: Sequent) -> Result<Derivation> {
    let rho = d.rule;
    let comp = |r: Rule| matches!(r, Rule::DiaComp | Rule::BoxComp);
    let (k2, j2) = if j < k { (k + comp(rho) as usize, j) } else { (k, j + comp(rule) as usize) };
    let desc = decompose(rho, f, j).unwrap();
    let mut premises = Vec::new();
    for (i, ds) in desc.iter().enumerate() {
        let mut acc = d.children[i].clone();
        for g in ds {
            acc = invert(&acc, rule, side, g, k2)?;
        }
        premises.push(acc);
    }
    let parts = decompose(rule, f, k).unwrap().remove(side);
    if premises.len() == 1 {
        let mut node = premises.remove(0);
        for p in &parts {
            let sub = decompose(rho, p, j2).ok_or_else(|| PdlError::shape(p, "lost redex while permuting"))?;
            let mut s = node.sequent.clone();
            for g in &sub[0] {
                s = s.remove_one(g).ok_or_else(|| PdlError::shape(g, "missing while permuting"))?;
            }
            s.0.push(p.clone());
            node = build_decomposition(rho, s, p, vec![node]);
        }
        debug_assert_eq!(node.sequent, concl);
        Ok(node)
    } else {
        let [p] = &parts[..] else {
            return Err(PdlError::Invalid("unexpected part count while permuting".into()));
        };
        let sub = decompose(rho, p, j2).ok_or_else(|| PdlError::shape(p, "lost redex while permuting"))?;
        let s = with_parts(&premises[0].sequent, &sub[0][0], std::slice::from_ref(p));
        debug_assert_eq!(s, concl);
        Ok(build_decomposition(rho, s, p, premises))
    }
}

struct GenSlots {
    prog: Program,
    /// (formula, body, is_box) for every principal slot.
    slots: Vec<(Formula, Formula, bool)>,
}

fn gen_slots(d: &Derivation) -> GenSlots {
    let mut prog = None;
    let slots = d
        .principal_formulas()
        .into_iter()
        .map(|g| match &g {
            Formula::Box { prog: p, body } => {
                prog = Some(p.clone());
                let b = (**body).clone();
                (g, b, true)
            }
            Formula::Dia { prog: p, body } => {
                prog = Some(p.clone());
                let b = (**body).clone();
                (g, b, false)
            }
            _ => unreachable!("Gen principal is modal"),
        })
        .collect();
    GenSlots { prog: prog.unwrap(), slots }
}

fn invert_gen_principal(d: &Derivation, rule: Rule, side: usize, f: &Formula, k: usize, concl: Sequent) -> Result<Derivation> {
    let GenSlots { prog: g, slots } = gen_slots(d);
    let ti = slots.iter().position(|s| s.0 == *f).unwrap();
    let is_box = slots[ti].2;
    if k > 0 {
        let body = slots[ti].1.clone();
        let prem = invert(&d.children[0], rule, side, &body, k - 1)?;
        let sub_parts = decompose(rule, &body, k - 1).unwrap().remove(side);
        let mut principals: Vec<Formula> = slots.iter().enumerate().filter(|(i, _)| *i != ti).map(|(_, s)| s.0.clone()).collect();
        principals.extend(sub_parts.into_iter().map(|p| modal(is_box, g.clone(), p)));
        return Ok(Derivation::node(Rule::Gen, concl, &principals, vec![prem]));
    }
    let mut gamma = d.sequent.clone();
    for s in &slots {
        gamma = gamma.remove_one(&s.0).unwrap();
    }
    let others: Vec<&(Formula, Formula, bool)> = slots.iter().enumerate().filter(|(i, _)| *i != ti).map(|(_, s)| s).collect();
    let dia_bodies: Vec<Formula> = others.iter().filter(|s| !s.2).map(|s| s.1.clone()).collect();
    let boxed = others.iter().find(|s| s.2).map(|s| s.1.clone());
    let d1 = d.children[0].clone();
    let target_body = slots[ti].1.clone();
    match (&g, rule) {
        (Program::Union(p, r), Rule::DiaUnion | Rule::BoxUnion) => {
            let (p, r) = ((**p).clone(), (**r).clone());
            // Re-join <P>B, <R>B into <P+R>B for every other diamond.
            let rejoin = |mut node: Derivation| {
                for b in &dia_bodies {
                    let whole = Formula::dia(g.clone(), b.clone());
                    let mut s = node.sequent.remove_one(&Formula::dia(p.clone(), b.clone())).unwrap();
                    s = s.remove_one(&Formula::dia(r.clone(), b.clone())).unwrap();
                    s.0.push(whole.clone());
                    node = build_decomposition(Rule::DiaUnion, s, &whole, vec![node]);
                }
                node
            };
            let split: Vec<Formula> = dia_bodies
                .iter()
                .flat_map(|b| [Formula::dia(p.clone(), b.clone()), Formula::dia(r.clone(), b.clone())])
                .collect();
            if rule == Rule::DiaUnion {
                let c = boxed.ok_or_else(|| PdlError::Invalid("Gen without box".into()))?;
                let x = gamma.union(&Sequent(vec![Formula::dia(p.clone(), target_body.clone()), Formula::dia(r.clone(), target_body.clone())]));
                let branch = |q: &Program| {
                    let mut principals = vec![Formula::dia(q.clone(), target_body.clone())];
                    principals.extend(dia_bodies.iter().map(|b| Formula::dia(q.clone(), b.clone())));
                    principals.push(Formula::boxed(q.clone(), c.clone()));
                    let s = x.union(&Sequent(split.clone())).with(Formula::boxed(q.clone(), c.clone()));
                    rejoin(Derivation::node(Rule::Gen, s, &principals, vec![d1.clone()]))
                };
                let left = branch(&p);
                let right = branch(&r);
                let whole = Formula::boxed(g.clone(), c);
                let s = with_parts(&left.sequent, &Formula::boxed(p.clone(), match &whole {
                    Formula::Box { body, .. } => (**body).clone(),
                    _ => unreachable!(),
                }), std::slice::from_ref(&whole));
                let n = build_decomposition(Rule::BoxUnion, s, &whole, vec![left, right]);
                debug_assert_eq!(n.sequent, concl);
                Ok(n)
            } else {
                let q = if side == 0 { p.clone() } else { r.clone() };
                let mut principals = vec![Formula::boxed(q.clone(), target_body.clone())];
                principals.extend(dia_bodies.iter().map(|b| Formula::dia(q.clone(), b.clone())));
                let s = gamma.union(&Sequent(split.clone())).with(Formula::boxed(q, target_body));
                let n = rejoin(Derivation::node(Rule::Gen, s, &principals, vec![d1]));
                debug_assert_eq!(n.sequent, concl);
                Ok(n)
            }
        }
        (Program::Comp(p, r), Rule::DiaComp | Rule::BoxComp) => {
            let (p, r) = ((**p).clone(), (**r).clone());
            let inner: Vec<Formula> = slots.iter().map(|s| modal(s.2, r.clone(), s.1.clone())).collect();
            let g_r = Derivation::node(Rule::Gen, Sequent(inner.clone()), &inner, vec![d1]);
            let outer: Vec<Formula> = slots.iter().map(|s| modal(s.2, p.clone(), modal(s.2, r.clone(), s.1.clone()))).collect();
            let mut node = Derivation::node(Rule::Gen, gamma.union(&Sequent(outer.clone())), &outer, vec![g_r]);
            for (i, s) in slots.iter().enumerate() {
                if i == ti {
                    continue;
                }
                let whole = s.0.clone();
                let split = modal(s.2, p.clone(), modal(s.2, r.clone(), s.1.clone()));
                let rr = if s.2 { Rule::BoxComp } else { Rule::DiaComp };
                let seq = with_parts(&node.sequent, &split, std::slice::from_ref(&whole));
                node = build_decomposition(rr, seq, &whole, vec![node]);
            }
            debug_assert_eq!(node.sequent, concl);
            Ok(node)
        }
        _ => Err(PdlError::shape(f, "Gen program does not match the inversion")),
    }
}

/// Remove one context occurrence of `g` throughout; `None` if it is ever
/// used as a principal formula.
fn strip(d: &Derivation, g: &Formula) -> Option<Derivation> {
    if context_count(d, g) == 0 {
        return None;
    }
    let concl = d.sequent.remove_one(g)?;
    match d.rule {
        Rule::Ax => concl.is_axiom().then(|| Derivation::ax(concl)),
        Rule::Gen => rebuild_context(d, concl, d.children.clone()).ok(),
        Rule::Weak => {
            if d.children[0].sequent.count(g) < d.sequent.count(g) {
                Some(Derivation::weak_node(concl, d.children[0].clone()))
            } else {
                Some(Derivation::weak_node(concl, strip(&d.children[0], g)?))
            }
        }
        Rule::Cut => {
            let s = cut_side(d, g);
            let mut kids = d.children.clone();
            kids[s] = strip(&kids[s], g)?;
            rebuild_context(d, concl, kids).ok()
        }
        _ => {
            let kids = d.children.iter().map(|c| strip(c, g)).collect::<Option<Vec<_>>>()?;
            rebuild_context(d, concl, kids).ok()
        }
    }
}

/// Contraction: from a derivation of `f, f, Γ` build one of `f, Γ`.
pub fn contract(d: &Derivation, f: &Formula) -> Result<Derivation> {
    let concl = d.sequent.remove_one(f).ok_or_else(|| PdlError::Invalid("nothing to contract".into()))?;
    let ctx = context_count(d, f);
    match d.rule {
        Rule::Ax => return Ok(Derivation::ax(concl)),
        Rule::Gen => {
            if ctx > 0 {
                return rebuild_context(d, concl, d.children.clone());
            }
            // Both copies are principal diamonds.
            let body = match f {
                Formula::Dia { body, .. } => (**body).clone(),
                _ => return Err(PdlError::Invalid("two principal boxes in Gen".into())),
            };
            let prem = contract(&d.children[0], &body)?;
            let mut principals = d.principal_formulas();
            let i = principals.iter().position(|g| g == f).unwrap();
            principals.remove(i);
            return Ok(Derivation::node(Rule::Gen, concl, &principals, vec![prem]));
        }
        Rule::Weak => {
            let c = &d.children[0];
            return if c.sequent.count(f) >= 2 {
                Ok(Derivation::weak_node(concl, contract(c, f)?))
            } else {
                Ok(Derivation::weak_node(concl, c.clone()))
            };
        }
        Rule::Cut => {
            let c = d.cut.as_ref().unwrap();
            let l = d.children[0].sequent.count(f) - (c == f) as usize;
            let r = d.children[1].sequent.count(f) - (c.negate() == *f) as usize;
            let mut kids = d.children.clone();
            if l >= 2 {
                kids[0] = contract(&kids[0], f)?;
            } else if r >= 2 {
                kids[1] = contract(&kids[1], f)?;
            } else {
                return Err(PdlError::Invalid("contraction across the two sides of a cut".into()));
            }
            return rebuild_context(d, concl, kids);
        }
        _ => {}
    }
    if ctx >= 2 {
        let kids = d.children.iter().map(|c| contract(c, f)).collect::<Result<Vec<_>>>()?;
        return rebuild_context(d, concl, kids);
    }
    if d.rule == Rule::DiaStar {
        let prem = contract(&d.children[0], f)?;
        return rebuild_context(d, concl, vec![prem]);
    }
    // One copy is principal, one sits in the context.
    let rule = d.rule;
    let j = decomposition_depth(d).ok_or_else(|| PdlError::Invalid("malformed decomposition node".into()))?;
    let parts = decompose(rule, f, j).unwrap();
    if matches!(rule, Rule::DiaUnion | Rule::DiaComp | Rule::BoxComp) {
        let mut stripped = Some(d.children[0].clone());
        for p in &parts[0] {
            stripped = stripped.and_then(|s| strip(&s, p));
        }
        if let Some(s) = stripped {
            if s.height() <= d.height() {
                return Ok(s);
            }
        }
    }
    if rule == Rule::BoxUnion {
        for (i, ps) in parts.iter().enumerate() {
            if let Some(s) = strip(&d.children[i], &ps[0]) {
                return Ok(s);
            }
        }
    }
    let mut kids = Vec::new();
    for (i, ps) in parts.iter().enumerate() {
        let mut c = invert(&d.children[i], rule, i, f, j)?;
        for p in ps {
            c = contract(&c, p)?;
        }
        kids.push(c);
    }
    Ok(build_decomposition(rule, concl, f, kids))
}

/// Iterated Gen: from `A1..An` derive `(P1)_{f_1(1)}..(Pk)_{f_1(k)} A1, ..., Γ`.
pub fn gen_vec(d: &Derivation, progs: &[Program], pattern: &[Vec<bool>], gamma: &Sequent) -> Result<Derivation> {
    let n = d.sequent.len();
    let k = progs.len();
    if n == 0 || k == 0 {
        return Err(PdlError::Invalid("GenVec needs a nonempty endsequent and program vector".into()));
    }
    if pattern.len() != n || pattern.iter().any(|row| row.len() != k) {
        return Err(PdlError::Invalid("pattern must be n rows of length k".into()));
    }
    for j in 0..k {
        let boxes = pattern.iter().filter(|row| row[j]).count();
        if boxes != 1 {
            return Err(PdlError::Invalid(format!("column {j} has {boxes} boxes, exactly one required")));
        }
    }
    let mut cur: Vec<Formula> = d.sequent.0.clone();
    let mut node = d.clone();
    for j in (0..k).rev() {
        cur = cur.iter().zip(pattern).map(|(a, row)| modal(row[j], progs[j].clone(), a.clone())).collect();
        let mut s = Sequent(cur.clone());
        if j == 0 {
            s = s.union(gamma);
        }
        node = Derivation::node(Rule::Gen, s, &cur, vec![node]);
    }
    Ok(node)
}

// ---------------------------------------------------------------------------
// p-inversion

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PInversion {
    /// A derivation of the side context Γ.
    Side(Derivation),
    /// A derivation of `A_i, B_1..B_k` with `i` indexing the boxes `[p]A_i`.
    Box { index: usize, derivation: Derivation },
}

fn mentions_program_at_top(f: &Formula, p: &str) -> bool {
    match f {
        Formula::Lit { .. } => false,
        Formula::Or(a, b) | Formula::And(a, b) => mentions_program_at_top(a, p) || mentions_program_at_top(b, p),
        Formula::Box { prog, .. } | Formula::Dia { prog, .. } => prog.atom_name() == Some(p),
    }
}

fn is_p_modal(f: &Formula, p: &str) -> bool {
    match f {
        Formula::Box { prog, .. } | Formula::Dia { prog, .. } => prog.atom_name() == Some(p),
        _ => false,
    }
}

/// Split a derivation of `[p]A.., <p>B.., Γ` according to how its p-formulas
/// are used, without raising the height.
pub fn p_invert(d: &Derivation, p: &str) -> Result<PInversion> {
    for f in d.sequent.iter() {
        if !is_p_modal(f, p) && mentions_program_at_top(f, p) {
            return Err(PdlError::shape(f, format!("side formula exposes program `{p}`")));
        }
    }
    if !d.is_cut_free() {
        return Err(PdlError::Invalid("p-inversion expects a cut-free derivation".into()));
    }
    let boxes: Vec<Formula> = d.sequent.iter().filter_map(|f| match f {
        Formula::Box { prog, body } if prog.atom_name() == Some(p) => Some((**body).clone()),
        _ => None,
    }).collect();
    let out = pinv(d, p, &boxes)?;
    Ok(match out {
        PInversion::Side(x) => PInversion::Side(x.relabeled()),
        PInversion::Box { index, derivation } => PInversion::Box { index, derivation: derivation.relabeled() },
    })
}

fn pinv(d: &Derivation, p: &str, boxes: &[Formula]) -> Result<PInversion> {
    let gamma = Sequent(d.sequent.iter().filter(|f| !is_p_modal(f, p)).cloned().collect());
    let dias: Vec<Formula> = d.sequent.iter().filter_map(|f| match f {
        Formula::Dia { prog, body } if prog.atom_name() == Some(p) => Some((**body).clone()),
        _ => None,
    }).collect();
    match d.rule {
        Rule::Ax => {
            if !gamma.is_axiom() {
                return Err(PdlError::Invalid("axiom pair outside the side context".into()));
            }
            Ok(PInversion::Side(Derivation::ax(gamma)))
        }
        Rule::Gen => {
            let GenSlots { prog, slots } = gen_slots(d);
            if prog.atom_name() == Some(p) {
                let (_, a, _) = slots.iter().find(|s| s.2).unwrap();
                let index = boxes.iter().position(|b| b == a).unwrap();
                let used: Vec<Formula> = slots.iter().filter(|s| !s.2).map(|s| s.1.clone()).collect();
                let missing = Sequent(dias).minus(&Sequent(used)).unwrap();
                let w = weaken(&d.children[0], &missing);
                let target = Sequent(vec![a.clone()]).union(&Sequent(d.sequent.iter().filter_map(|f| match f {
                    Formula::Dia { prog, body } if prog.atom_name() == Some(p) => Some((**body).clone()),
                    _ => None,
                }).collect()));
                Ok(PInversion::Box { index, derivation: reorder(w, target) })
            } else {
                Ok(PInversion::Side(rebuild_context(d, gamma, d.children.clone())?))
            }
        }
        Rule::Or | Rule::And => {
            let mut kids = Vec::new();
            for c in &d.children {
                match pinv(c, p, boxes)? {
                    PInversion::Side(x) => kids.push(x),
                    b => return Ok(b),
                }
            }
            Ok(PInversion::Side(Derivation::node(d.rule, gamma, &d.principal_formulas(), kids)))
        }
        r => Err(PdlError::Invalid(format!("p-inversion expects a Seq00 derivation, found {r}"))),
    }
}
