//! Cut degrees and cut elimination for finite Seq0+Cut derivations whose
//! cut formulas are star-free, with ordinal height accounting.
//!
//! `reduce_cut` removes one lowermost cut (the operation R), `eliminate`
//! runs the double recursion R⁺ and returns E(∂) together with a trace of
//! every R application.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{contract, extended_axiom, reorder, transform, weaken, Derivation, Rule, TransformArgs, TransformKind};
use crate::error::{PdlError, Result};
use crate::formula::{Formula, Program, Sequent};
use crate::ordinal::{nat_sum, o_formula, ord_sum, veblen, Ordinal};
use crate::prover::{prove, ProofResult};

/// Which reduction applies to a cut, named after its (normalised) cut
/// formula `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutCase {
    Literal,
    Or,
    /// `C = <Q..><P+R>A` with the union at the given prefix depth.
    Union(usize),
    /// `C = <Q..><P;R>A`.
    Comp(usize),
    /// `C = <p>A` with `p` atomic and no compound program on the diamond
    /// chain.
    Modal,
}

/// One application of R inside the recursion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub cut: String,
    pub case: CutCase,
    /// Degree threshold of the R⁺ pass that triggered this step.
    pub rho: u64,
    pub deg_before: Ordinal,
    pub deg_after: Ordinal,
    pub h_left: Ordinal,
    pub h_right: Ordinal,
    pub height: Ordinal,
    /// h(∂₁) ⊕ h(∂₂) + ω
    pub bound: Ordinal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Elimination {
    pub derivation: Derivation,
    pub deg: Ordinal,
    pub alpha: Ordinal,
    pub height_in: Ordinal,
    pub height_out: Ordinal,
    /// φ(α, h(∂))
    pub bound: Ordinal,
    pub steps: Vec<Step>,
}

/// Maximum of o(C)+1 over the cut formulas, 0 when there are none.
pub fn deg(d: &Derivation) -> Ordinal {
    let own = match (&d.rule, &d.cut) {
        (Rule::Cut, Some(c)) => o_formula(c).succ(),
        _ => Ordinal::zero(),
    };
    d.children.iter().map(deg).fold(own, |a, b| a.max(b))
}

fn finite_deg(d: &Derivation) -> Result<u64> {
    deg(d).as_nat().ok_or_else(|| PdlError::Fragment("cut degree is infinite; some cut formula contains a starred program".into()))
}

fn require_star_free(d: &Derivation) -> Result<()> {
    if let Some(c) = &d.cut {
        if !c.is_star_free() {
            return Err(PdlError::Fragment(format!("cut formula `{c}` contains a starred program")));
        }
    }
    d.children.iter().try_for_each(require_star_free)
}

fn classify(c: &Formula) -> Result<CutCase> {
    let mut k = 0;
    let mut f = c;
    while let Formula::Dia { prog, body } = f {
        match prog {
            Program::Atom(_) => {
                k += 1;
                f = body;
            }
            Program::Union(..) => return Ok(CutCase::Union(k)),
            Program::Comp(..) => return Ok(CutCase::Comp(k)),
            Program::Star(_) => return Err(PdlError::Fragment(format!("cut formula `{c}` contains a starred program"))),
        }
    }
    match (k, f) {
        (0, Formula::Lit { .. }) => Ok(CutCase::Literal),
        (0, Formula::Or(..)) => Ok(CutCase::Or),
        (0, _) => Err(PdlError::shape(c, "cut formula is not in normal orientation")),
        _ => Ok(CutCase::Modal),
    }
}

type OnPrincipal<'a> = dyn FnMut(&Derivation) -> Result<Derivation> + 'a;

/// Follow one occurrence of `c` from the root of `d` up to the inferences
/// where it is principal, adding `extra` to every sequent on the way. At a
/// principal inference `on_principal` supplies the replacement, which must
/// derive the node's sequent with `c` swapped for `extra`.
fn ascend(d: &Derivation, c: &Formula, extra: &Sequent, on_principal: &mut OnPrincipal<'_>) -> Result<Derivation> {
    let concl = d
        .sequent
        .remove_one(c)
        .ok_or_else(|| PdlError::Invalid(format!("`{c}` is missing from `{}`", d.sequent)))?
        .union(extra);
    let principal = !matches!(d.rule, Rule::Cut | Rule::Weak) && d.principal_formulas().contains(c);
    if principal {
        let out = on_principal(d)?;
        if out.sequent != concl {
            return Err(PdlError::Invalid(format!("replacement derives `{}`, expected `{concl}`", out.sequent)));
        }
        return Ok(reorder(out, concl));
    }
    match d.rule {
        Rule::Ax => Ok(Derivation::ax(concl)),
        Rule::Gen => Ok(Derivation::node(Rule::Gen, concl, &d.principal_formulas(), d.children.clone())),
        Rule::Weak => {
            let child = &d.children[0];
            if child.sequent.count(c) == d.sequent.count(c) {
                Ok(Derivation::weak_node(concl, ascend(child, c, extra, on_principal)?))
            } else {
                Ok(Derivation::weak_node(concl, child.clone()))
            }
        }
        Rule::Cut => {
            let cut = d.cut.as_ref().expect("cut node without cut formula");
            let left = d.children[0].sequent.count(c) - (cut == c) as usize;
            let mut kids = d.children.clone();
            if left > 0 {
                kids[0] = ascend(&kids[0], c, extra, on_principal)?;
            } else {
                kids[1] = ascend(&kids[1], c, extra, on_principal)?;
            }
            let [l, r]: [Derivation; 2] = kids.try_into().unwrap();
            Ok(Derivation::cut_node(concl, cut.clone(), l, r))
        }
        rule => {
            let kids = d.children.iter().map(|k| ascend(k, c, extra, on_principal)).collect::<Result<Vec<_>>>()?;
            Ok(Derivation::node(rule, concl, &d.principal_formulas(), kids))
        }
    }
}

fn cut_of(seq_l: &Derivation, c: &Formula, seq_r: &Derivation) -> Derivation {
    let concl = seq_l.sequent.remove_one(c).unwrap().union(&seq_r.sequent.remove_one(&c.negate()).unwrap());
    Derivation::cut_node(concl, c.clone(), seq_l.clone(), seq_r.clone())
}

fn invert(kind: TransformKind, d: &Derivation, f: &Formula, depth: usize) -> Result<Derivation> {
    transform(kind, d, &TransformArgs::Target { formula: f.clone(), depth })
}

/// Two cuts leave the right context twice; eliminate them and contract.
fn merge_context(d: Derivation, pi: &Sequent, steps: &mut Vec<Step>) -> Result<Derivation> {
    if pi.is_empty() {
        return Ok(d);
    }
    let alpha = alpha_for(finite_deg(&d)?);
    let mut out = r_plus(1, &alpha, d, steps)?;
    for f in pi.iter() {
        out = contract(&out, f)?;
    }
    Ok(out)
}

/// The operation R on a derivation whose last inference is a cut.
fn reduce(d: &Derivation, steps: &mut Vec<Step>) -> Result<(Derivation, CutCase)> {
    if d.rule != Rule::Cut {
        return Err(PdlError::Invalid("the last inference is not a cut".into()));
    }
    let c0 = d.cut.clone().ok_or_else(|| PdlError::Invalid("cut node without cut formula".into()))?;
    if !c0.is_star_free() {
        return Err(PdlError::Fragment(format!("cut formula `{c0}` contains a starred program")));
    }
    let flip = matches!(c0, Formula::And(..) | Formula::Box { .. } | Formula::Lit { positive: false, .. });
    let (c, l, r) = if flip { (c0.negate(), &d.children[1], &d.children[0]) } else { (c0, &d.children[0], &d.children[1]) };
    let cb = c.negate();
    let pi = r
        .sequent
        .remove_one(&cb)
        .ok_or_else(|| PdlError::Invalid(format!("right premise lacks `{cb}`")))?;
    if !l.sequent.contains(&c) {
        return Err(PdlError::Invalid(format!("left premise lacks `{c}`")));
    }
    let case = classify(&c)?;
    let out = match case {
        CutCase::Literal => ascend(l, &c, &pi, &mut |ax: &Derivation| {
            let rest = ax.sequent.remove_one(&c).and_then(|s| s.remove_one(&cb)).unwrap();
            Ok(weaken(r, &rest))
        })?,
        CutCase::Or => {
            let Formula::Or(a, b) = &c else { unreachable!() };
            let a1 = invert(TransformKind::OrInv, l, &c, 0)?;
            let b1 = invert(TransformKind::AndInv1, r, &cb, 0)?;
            let b2 = invert(TransformKind::AndInv2, r, &cb, 0)?;
            let inner = cut_of(&a1, a, &b1);
            merge_context(cut_of(&inner, b, &b2), &pi, steps)?
        }
        CutCase::Union(k) => {
            let parts = crate::calculus::decompose(Rule::DiaUnion, &c, k).unwrap();
            let (c1, c2) = (&parts[0][0], &parts[0][1]);
            let a1 = invert(TransformKind::DiaUnionInv, l, &c, k)?;
            let b1 = invert(TransformKind::BoxUnionInv1, r, &cb, k)?;
            let b2 = invert(TransformKind::BoxUnionInv2, r, &cb, k)?;
            let inner = cut_of(&a1, c1, &b1);
            merge_context(cut_of(&inner, c2, &b2), &pi, steps)?
        }
        CutCase::Comp(k) => {
            // The split formula has the same o; reduce again until the
            // chain reaches a union, an atomic diamond or a literal.
            let parts = crate::calculus::decompose(Rule::DiaComp, &c, k).unwrap();
            let a1 = invert(TransformKind::DiaCompInv, l, &c, k)?;
            let b1 = invert(TransformKind::BoxCompInv, r, &cb, k)?;
            reduce(&cut_of(&a1, &parts[0][0], &b1), steps)?.0
        }
        CutCase::Modal => ascend(l, &c, &pi, &mut |g: &Derivation| modal_principal(g, &c, r))?,
    };
    Ok((reorder(out.relabeled(), d.sequent.clone()), case))
}

/// `g` is a Gen inference with principal `c = <p>A`; combine it with the
/// right premise `r` of the cut, which contains `[p]~A`.
fn modal_principal(g: &Derivation, c: &Formula, r: &Derivation) -> Result<Derivation> {
    if g.rule != Rule::Gen {
        return Err(PdlError::shape(c, format!("principal in a {} inference", g.rule)));
    }
    let Formula::Dia { prog, body: a } = c else { unreachable!() };
    let mut others = g.principal_formulas();
    let i = others.iter().position(|f| f == c).unwrap();
    others.remove(i);
    let gamma = others.iter().try_fold(g.sequent.remove_one(c).unwrap(), |s, f| s.remove_one(f)).unwrap();
    let left = &g.children[0];
    let cb = c.negate();
    let extra = Sequent(others.clone());
    let mut on_box = |h: &Derivation| -> Result<Derivation> {
        if h.rule != Rule::Gen {
            return Err(PdlError::shape(&cb, format!("principal in a {} inference", h.rule)));
        }
        let dias: Vec<Formula> = h.principal_formulas().into_iter().filter(|f| *f != cb).collect();
        let concl = h.sequent.remove_one(&cb).unwrap().union(&extra);
        let cut = cut_of(left, a, &h.children[0]);
        let mut principals = others.clone();
        principals.extend(dias);
        debug_assert!(principals.iter().all(|f| matches!(f, Formula::Dia { prog: q, .. } | Formula::Box { prog: q, .. } if q == prog)));
        Ok(Derivation::node(Rule::Gen, concl, &principals, vec![cut]))
    };
    let combined = ascend(r, &cb, &extra, &mut on_box)?;
    Ok(weaken(&combined, &gamma))
}

/// R applied to a derivation ending in a cut, with strict descent and the
/// height bound checked.
pub fn reduce_cut(d: &Derivation) -> Result<Derivation> {
    let mut steps = Vec::new();
    apply_r(d, 0, &mut steps)
}

fn apply_r(d: &Derivation, rho: u64, steps: &mut Vec<Step>) -> Result<Derivation> {
    require_star_free(d)?;
    let before = deg(d);
    let c = d.cut.clone().ok_or_else(|| PdlError::Invalid("the last inference is not a cut".into()))?;
    let own = o_formula(&c).succ();
    if d.children.iter().any(|k| deg(k) >= own) {
        return Err(PdlError::Invalid(format!("a premise contains a cut of degree at least that of `{c}`")));
    }
    let h_left = d.children[0].clone().relabeled().ord;
    let h_right = d.children[1].clone().relabeled().ord;
    let mut inner = Vec::new();
    let (out, case) = reduce(d, &mut inner)?;
    let after = deg(&out);
    if after >= before {
        return Err(PdlError::Invalid(format!("cut degree did not descend: {before} to {after}")));
    }
    let bound = ord_sum(&nat_sum(&h_left, &h_right), &Ordinal::omega());
    if out.ord >= bound {
        return Err(PdlError::Invalid(format!("height {} exceeds {bound}", out.ord)));
    }
    steps.extend(inner);
    steps.push(Step {
        cut: c.to_string(),
        case,
        rho,
        deg_before: before,
        deg_after: after,
        h_left,
        h_right,
        height: out.ord.clone(),
        bound,
    });
    Ok(out)
}

/// min{β : n < ω^β} for a finite degree n.
fn alpha_for(n: u64) -> Ordinal {
    if n == 0 {
        Ordinal::zero()
    } else {
        Ordinal::one()
    }
}

/// R⁺(ρ, α, ∂) for deg(∂) < ρ + ω^α. Finite degrees only, so the Cantor
/// normal form of (deg − ρ) + 1 is a run of ω^0 terms.
fn r_plus(rho: u64, alpha: &Ordinal, d: Derivation, steps: &mut Vec<Step>) -> Result<Derivation> {
    if alpha.is_zero() {
        return r_plus_zero(rho, &d, steps);
    }
    if alpha != &Ordinal::one() {
        return Err(PdlError::Fragment(format!("R+ with alpha = {alpha} needs infinite cut degrees")));
    }
    let n = finite_deg(&d)?;
    if n < rho {
        return Ok(d);
    }
    let blocks = n - rho + 1;
    let mut cur = d;
    for i in (0..blocks).rev() {
        cur = r_plus(rho + i, &Ordinal::zero(), cur, steps)?;
    }
    Ok(cur)
}

/// R⁺(ρ, 0, ∂): every cut of degree ρ is reduced after its premises.
fn r_plus_zero(rho: u64, d: &Derivation, steps: &mut Vec<Step>) -> Result<Derivation> {
    let kids = d.children.iter().map(|k| r_plus_zero(rho, k, steps)).collect::<Result<Vec<_>>>()?;
    let mut node = d.clone();
    node.children = kids;
    if d.rule == Rule::Cut {
        let own = o_formula(d.cut.as_ref().unwrap()).succ().as_nat().unwrap_or(u64::MAX);
        if own >= rho {
            return apply_r(&node.relabeled(), rho, steps);
        }
    }
    Ok(node.relabeled())
}

/// E(∂) = R⁺(1, α, ∂) with α = min{β : deg(∂) < ω^β}.
pub fn eliminate(d: &Derivation) -> Result<Elimination> {
    require_star_free(d)?;
    let n = finite_deg(d)?;
    let alpha = alpha_for(n);
    let mut steps = Vec::new();
    let out = if n == 0 { d.clone() } else { r_plus(1, &alpha, d.clone(), &mut steps)?.relabeled() };
    if !out.is_cut_free() || out.sequent != d.sequent {
        return Err(PdlError::Invalid("elimination left a cut or changed the endsequent".into()));
    }
    let out = reorder(out, d.sequent.clone());
    let bound = veblen(&alpha, &d.ord);
    if out.ord >= bound {
        return Err(PdlError::Invalid(format!("height {} exceeds {bound}", out.ord)));
    }
    Ok(Elimination {
        deg: Ordinal::nat(n),
        alpha,
        height_in: d.ord.clone(),
        height_out: out.ord.clone(),
        bound,
        derivation: out,
        steps,
    })
}

// ---------------------------------------------------------------------------
// Random Seq0+Cut derivations

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub max_height: usize,
    pub max_deg: u64,
    /// Nesting of cuts inside cut premises.
    pub nesting: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_height: 12, max_deg: 5, nesting: 2 }
    }
}

const VARS: [&str; 3] = ["x", "y", "z"];
const PROGS: [&str; 2] = ["p", "q"];

fn random_program<R: Rng>(rng: &mut R, compound: bool) -> Program {
    let a = Program::atom(PROGS[rng.gen_range(0..2)]);
    if !compound || rng.gen_bool(0.6) {
        return a;
    }
    let b = Program::atom(PROGS[rng.gen_range(0..2)]);
    if rng.gen_bool(0.5) {
        Program::union(a, b)
    } else {
        Program::comp(a, b)
    }
}

/// A random star-free formula with `o` at most `max_o`.
pub fn random_formula<R: Rng>(rng: &mut R, size: usize, compound: bool, max_o: u64) -> Formula {
    loop {
        let f = random_formula_raw(rng, size, compound);
        if o_formula(&f).as_nat().is_some_and(|o| o <= max_o) {
            return f;
        }
    }
}

fn random_formula_raw<R: Rng>(rng: &mut R, size: usize, compound: bool) -> Formula {
    if size <= 1 || rng.gen_bool(0.25) {
        return Formula::lit(VARS[rng.gen_range(0..3)], rng.gen_bool(0.5));
    }
    match rng.gen_range(0..4) {
        0 => Formula::or(random_formula_raw(rng, size / 2, compound), random_formula_raw(rng, size / 2, compound)),
        1 => Formula::and(random_formula_raw(rng, size / 2, compound), random_formula_raw(rng, size / 2, compound)),
        2 => Formula::dia(random_program(rng, compound), random_formula_raw(rng, size - 1, compound)),
        _ => Formula::boxed(random_program(rng, compound), random_formula_raw(rng, size - 1, compound)),
    }
}

/// A cut-free or cut-containing derivation of `c, Δ` for some Δ.
fn premise<R: Rng>(rng: &mut R, c: &Formula, cfg: &GenConfig, nesting: usize) -> Result<Derivation> {
    let l00 = c.classify().contains(&crate::formula::Fragment::L00);
    match rng.gen_range(0..4) {
        0 | 1 if l00 => {
            let r = random_formula(rng, 3, false, cfg.max_deg);
            let side = if rng.gen_bool(0.5) {
                Sequent(vec![Formula::or(c.negate(), r)])
            } else {
                Sequent(vec![Formula::and(c.negate(), r.clone()), r.negate()])
            };
            match prove(&side.with(c.clone()))? {
                ProofResult::Proved(d) => Ok(d),
                ProofResult::Refuted(_) => extended_axiom(c, &Sequent::empty()),
            }
        }
        2 if nesting > 0 => {
            let inner = cut_derivation(rng, cfg, nesting - 1)?;
            Ok(weaken(&inner, &Sequent(vec![c.clone()])).relabeled())
        }
        _ => {
            let extra = if rng.gen_bool(0.5) { Sequent(vec![random_formula(rng, 2, true, cfg.max_deg)]) } else { Sequent::empty() };
            extended_axiom(c, &extra)
        }
    }
}

fn cut_derivation<R: Rng>(rng: &mut R, cfg: &GenConfig, nesting: usize) -> Result<Derivation> {
    let size = rng.gen_range(1..=5);
    let c = random_formula(rng, size, true, cfg.max_deg.saturating_sub(1));
    let left = premise(rng, &c, cfg, nesting)?;
    let right = premise(rng, &c.negate(), cfg, nesting)?;
    Ok(cut_of(&left, &c, &right).relabeled())
}

/// A seeded Seq0+Cut derivation within the height and degree limits.
pub fn random_cut_derivation(seed: u64, cfg: &GenConfig) -> Result<Derivation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let d = cut_derivation(&mut rng, cfg, cfg.nesting)?;
        if d.height() <= cfg.max_height && finite_deg(&d)? <= cfg.max_deg {
            return Ok(d);
        }
    }
    Err(PdlError::Bound("no derivation within the limits".into()))
}
