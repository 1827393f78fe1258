//! Fixpoint engine for linear clause sets: one convex polyhedron per
//! predicate, computed by Kleene iteration with widening.

use std::collections::{BTreeMap, BTreeSet};

use crate::chc::{params, Clause, Head, Pred, Program, FALSE};
use crate::linconstr::{Constraint, LinExpr, Polyhedron, Var};
use crate::model::{satisfies_clause, ConstrainedFact, Model, DEFAULT_SPLIT_BUDGET};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LinsolveError {
    #[error("clause {0} has more than one body atom")]
    NonLinear(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearConfig {
    /// Updates of a predicate joined by plain hull before widening starts.
    pub widen_delay: usize,
    /// Further attempts, each with the delay raised by one, after the
    /// widened fixpoint derives a false variant.
    pub retries: usize,
    /// Widenings per predicate that also keep relations of the new iterate
    /// before falling back to the plain operator.
    pub enriched_widenings: usize,
    /// One descending pass after stabilization.
    pub narrow: bool,
    pub split_budget: usize,
    pub max_rounds: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            widen_delay: 1,
            retries: 2,
            enriched_widenings: 3,
            narrow: false,
            split_budget: DEFAULT_SPLIT_BUDGET,
            max_rounds: 500,
        }
    }
}

/// Interpretation per predicate over the canonical parameters, with the
/// number of times each has changed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AbstractState {
    pub interp: BTreeMap<Pred, Polyhedron>,
    pub changes: BTreeMap<Pred, usize>,
}

impl AbstractState {
    pub fn get(&self, pred: &Pred) -> Option<&Polyhedron> {
        self.interp.get(pred).filter(|p| p.sat())
    }

    /// Satisfiable interpretations as a model, false variants excluded.
    pub fn to_model(&self) -> Model {
        let mut m = Model::new();
        for (pred, poly) in &self.interp {
            if pred.name != FALSE && poly.sat() {
                // one fact per predicate, so arities cannot clash
                let _ = m.insert(ConstrainedFact::new(pred.clone(), poly.clone()));
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NotSolvedReason {
    /// The abstraction derived a satisfiable interpretation for this
    /// false variant.
    FalseDerived(Pred),
    RoundLimit,
    /// The fixpoint failed the clause check on this clause.
    Unsound(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum LinearVerdict {
    Solved(Model),
    NotSolved(NotSolvedReason),
}

fn head_pred(c: &Clause) -> Pred {
    match &c.head {
        Head::False => Pred::plain(FALSE),
        Head::Atom(a) => a.pred.clone(),
    }
}

/// The clause's contribution to its head, over canonical parameters; None
/// when the body atom is uninterpreted.
pub(crate) fn contribution(c: &Clause, s: &AbstractState) -> Option<Polyhedron> {
    let mut cs = c.constraints.clone();
    if let Some(atom) = c.body.first() {
        let body = s.get(&atom.pred)?;
        let map: BTreeMap<Var, Var> = body
            .dims()
            .iter()
            .cloned()
            .zip(atom.args.iter().cloned())
            .collect();
        cs.extend(body.rename(&map).constraints().iter().cloned());
    }
    let head_args = c.head_args();
    let slots: Vec<Var> = (0..head_args.len())
        .map(|i| Var::new(format!("#h{}", i)))
        .collect();
    for (slot, arg) in slots.iter().zip(head_args) {
        cs.push(Constraint::eq(
            &LinExpr::var(slot.clone()),
            &LinExpr::var(arg.clone()),
        ));
    }
    let projected = Polyhedron::over(slots.clone(), cs).project_integral(&slots);
    if !projected.sat_integral() {
        return None;
    }
    let canon: BTreeMap<Var, Var> = slots.into_iter().zip(params(head_args.len())).collect();
    Some(projected.rename(&canon).tighten().simplify())
}

/// Predicates that depend on themselves through the clauses of `p`; only
/// these are widened.
pub fn recursive_predicates(p: &Program) -> BTreeSet<Pred> {
    let mut succ: BTreeMap<Pred, BTreeSet<Pred>> = BTreeMap::new();
    for c in p.clauses() {
        for a in &c.body {
            succ.entry(a.pred.clone()).or_default().insert(head_pred(c));
        }
    }
    let mut out = BTreeSet::new();
    for start in succ.keys() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&Pred> = succ[start].iter().collect();
        while let Some(q) = stack.pop() {
            if q == start {
                out.insert(start.clone());
                break;
            }
            if seen.insert(q) {
                stack.extend(succ.get(q).into_iter().flatten());
            }
        }
    }
    out
}

/// One Jacobi round: every predicate is recomputed from the previous state.
pub fn step(p: &Program, s: &AbstractState, cfg: &LinearConfig) -> AbstractState {
    step_with(p, s, cfg, &recursive_predicates(p))
}

fn step_with(
    p: &Program,
    s: &AbstractState,
    cfg: &LinearConfig,
    widen_at: &BTreeSet<Pred>,
) -> AbstractState {
    let mut fresh: BTreeMap<Pred, Polyhedron> = BTreeMap::new();
    for c in p.clauses() {
        let Some(contrib) = contribution(c, s) else {
            continue;
        };
        let q = head_pred(c);
        let joined = match fresh.remove(&q) {
            None => contrib,
            Some(prev) => prev.hull(&contrib).expect("same canonical dims"),
        };
        fresh.insert(q, joined);
    }
    let mut next = s.clone();
    for (q, new) in fresh {
        let updated = match s.get(&q) {
            None => new.tighten().simplify(),
            Some(old) => {
                let joined = old.hull(&new).expect("same canonical dims").tighten();
                if joined.entails_integral(old).unwrap_or(false)
                    && old.entails_integral(&joined).unwrap_or(false)
                {
                    continue;
                }
                let n = s.changes.get(&q).copied().unwrap_or(0);
                if n < cfg.widen_delay || !widen_at.contains(&q) {
                    joined.simplify()
                } else if n < cfg.widen_delay + cfg.enriched_widenings {
                    old.widen_enriched(&joined, true).simplify()
                } else {
                    old.widen_bounded(&joined, true).simplify()
                }
            }
        };
        *next.changes.entry(q.clone()).or_insert(0) += 1;
        next.interp.insert(q, updated);
    }
    next
}

/// Mutual entailment of every interpretation.
pub fn stabilized(s1: &AbstractState, s2: &AbstractState) -> bool {
    let preds = s1.interp.keys().chain(s2.interp.keys());
    for q in preds {
        match (s1.get(q), s2.get(q)) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                if !(a.entails_integral(b).unwrap_or(false)
                    && b.entails_integral(a).unwrap_or(false))
                {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

/// Recomputes every predicate once from `s` without joining the old value.
fn descend(p: &Program, s: &AbstractState) -> AbstractState {
    let mut interp: BTreeMap<Pred, Polyhedron> = BTreeMap::new();
    for c in p.clauses() {
        let Some(contrib) = contribution(c, s) else {
            continue;
        };
        let q = head_pred(c);
        let joined = match interp.remove(&q) {
            None => contrib,
            Some(prev) => prev.hull(&contrib).expect("same canonical dims"),
        };
        interp.insert(q, joined);
    }
    let interp = interp
        .into_iter()
        .map(|(q, poly)| (q, poly.tighten().simplify()))
        .collect();
    AbstractState {
        interp,
        changes: s.changes.clone(),
    }
}

/// Iterates to a post-fixpoint; returns the final state and the number of
/// rounds, or None when the round limit is hit.
pub fn fixpoint(p: &Program, cfg: &LinearConfig) -> Option<(AbstractState, usize)> {
    let widen_at = recursive_predicates(p);
    let mut s = AbstractState::default();
    for round in 1..=cfg.max_rounds {
        let next = step_with(p, &s, cfg, &widen_at);
        if stabilized(&s, &next) {
            let s = if cfg.narrow { descend(p, &next) } else { next };
            return Some((s, round));
        }
        s = next;
    }
    None
}

pub fn solve_linear(p: &Program, cfg: &LinearConfig) -> Result<LinearVerdict, LinsolveError> {
    if let Some(c) = p.clauses().iter().find(|c| !c.is_linear()) {
        return Err(LinsolveError::NonLinear(c.id));
    }
    let mut attempt = cfg.clone();
    let s = loop {
        let Some((s, _)) = fixpoint(p, &attempt) else {
            return Ok(LinearVerdict::NotSolved(NotSolvedReason::RoundLimit));
        };
        match s
            .interp
            .keys()
            .find(|q| q.name == FALSE && s.get(q).is_some())
        {
            None => break s,
            Some(q) if attempt.widen_delay >= cfg.widen_delay + cfg.retries => {
                return Ok(LinearVerdict::NotSolved(NotSolvedReason::FalseDerived(
                    q.clone(),
                )));
            }
            Some(_) => attempt.widen_delay += 1,
        }
    };
    let m = s.to_model();
    for c in p.clauses() {
        if !satisfies_clause(&m, c, cfg.split_budget).unwrap_or(false) {
            return Ok(LinearVerdict::NotSolved(NotSolvedReason::Unsound(c.id)));
        }
    }
    Ok(LinearVerdict::Solved(m))
}
