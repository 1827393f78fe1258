//! Fourier-Motzkin elimination over conjunctions of atomic constraints.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::expr::{Constraint, LinExpr, Rat, Rel, Triviality, Var};
use super::lp;

/// Systems larger than this lose their redundant atoms between steps.
const PRUNE_ABOVE: usize = 64;

/// Indices of the input atoms a derived atom was combined from.
type History = BTreeSet<usize>;

/// Bounds collected for one primitive direction `d.x`.
#[derive(Default)]
struct Bounds {
    lo: Option<(Rat, bool, History)>,
    hi: Option<(Rat, bool, History)>,
    eq: Option<(Rat, History)>,
}

fn tighter_lo(a: &(Rat, bool, History), b: &(Rat, bool, History)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && ((a.1 && !b.1) || (a.1 == b.1 && a.2.len() < b.2.len())))
}

fn tighter_hi(a: &(Rat, bool, History), b: &(Rat, bool, History)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && ((a.1 && !b.1) || (a.1 == b.1 && a.2.len() < b.2.len())))
}

/// Splits `e = d.x + c` into the primitive direction `d` (gcd 1, leading
/// coefficient positive), the scale `s` with `d.x * s = e - c`, and `c`.
fn direction(e: &LinExpr) -> (BTreeMap<Var, Rat>, Rat, Rat) {
    let lead = e.terms().values().next().expect("non-constant").clone();
    // coefficients are integers after normalization
    let mut g = num_bigint::BigInt::zero();
    for c in e.terms().values() {
        g = num_integer::Integer::gcd(&g, c.numer());
    }
    let mut s = Rat::from_integer(g);
    if lead.is_negative() {
        s = -s;
    }
    let dir = e.terms().iter().map(|(v, c)| (v.clone(), c / &s)).collect();
    (dir, s, e.constant_term().clone())
}

/// Canonicalizes a conjunction: normalizes (and tightens when `integral`),
/// drops trivially true atoms, merges atoms sharing a direction, turns
/// matching opposite bounds into equalities. `None` if a contradiction shows.
pub(crate) fn canonicalize(cs: Vec<Constraint>, integral: bool) -> Option<Vec<Constraint>> {
    let tracked = cs.into_iter().map(|c| (c, History::new())).collect();
    canonicalize_tracked(tracked, integral).map(|v| v.into_iter().map(|(c, _)| c).collect())
}

fn canonicalize_tracked(
    cs: Vec<(Constraint, History)>,
    integral: bool,
) -> Option<Vec<(Constraint, History)>> {
    let mut by_dir: BTreeMap<BTreeMap<Var, Rat>, Bounds> = BTreeMap::new();
    for (c, hist) in cs {
        let c = if integral {
            c.tightened()
        } else {
            c.normalized()
        };
        match c.triviality() {
            Triviality::True => continue,
            Triviality::False => return None,
            Triviality::NonTrivial => {}
        }
        let (dir, s, k) = direction(&c.expr);
        // c.expr = s * (d.x) + k
        let b = by_dir.entry(dir).or_default();
        let strict = c.rel == Rel::Lt;
        match c.rel {
            Rel::Eq => {
                let val = -k / &s;
                match &b.eq {
                    Some((old, _)) if *old != val => return None,
                    Some((_, h)) if h.len() <= hist.len() => {}
                    _ => b.eq = Some((val, hist)),
                }
            }
            Rel::Le | Rel::Lt => {
                let bound = (-k / &s, strict, hist);
                if s.is_positive() {
                    if b.hi.as_ref().is_none_or(|h| tighter_hi(&bound, h)) {
                        b.hi = Some(bound);
                    }
                } else if b.lo.as_ref().is_none_or(|l| tighter_lo(&bound, l)) {
                    b.lo = Some(bound);
                }
            }
        }
    }
    let mut out = Vec::new();
    for (dir, b) in by_dir {
        let dexpr = {
            let mut e = LinExpr::zero();
            for (v, c) in &dir {
                e.add_term(v.clone(), c.clone());
            }
            e
        };
        let emit_eq = |val: &Rat| {
            let mut e = dexpr.clone();
            e.add_constant(&-val.clone());
            Constraint::new(e, Rel::Eq)
        };
        if let Some((val, hist)) = &b.eq {
            if let Some((l, strict, _)) = &b.lo {
                if val < l || (val == l && *strict) {
                    return None;
                }
            }
            if let Some((h, strict, _)) = &b.hi {
                if val > h || (val == h && *strict) {
                    return None;
                }
            }
            out.push((emit_eq(val), hist.clone()));
            continue;
        }
        if let (Some((l, ls, lh)), Some((h, hs, hh))) = (&b.lo, &b.hi) {
            if l > h || (l == h && (*ls || *hs)) {
                return None;
            }
            if l == h {
                out.push((emit_eq(l), lh.union(hh).cloned().collect()));
                continue;
            }
        }
        if let Some((l, strict, hist)) = b.lo {
            // l - d.x rel 0
            let mut e = dexpr.neg();
            e.add_constant(&l);
            out.push((
                Constraint::new(e, if strict { Rel::Lt } else { Rel::Le }),
                hist,
            ));
        }
        if let Some((h, strict, hist)) = b.hi {
            let mut e = dexpr.clone();
            e.add_constant(&-h);
            out.push((
                Constraint::new(e, if strict { Rel::Lt } else { Rel::Le }),
                hist,
            ));
        }
    }
    Some(out)
}

fn pick_equality(cs: &[Constraint], elim: &BTreeSet<Var>) -> Option<(usize, Var)> {
    cs.iter()
        .enumerate()
        .filter(|(_, c)| c.rel == Rel::Eq)
        .filter_map(|(i, c)| {
            c.vars()
                .find(|v| elim.contains(*v))
                .map(|v| (c.expr.terms().len(), i, v.clone()))
        })
        .min()
        .map(|(_, i, v)| (i, v))
}

fn pick_variable(cs: &[Constraint], elim: &BTreeSet<Var>) -> Option<Var> {
    let mut counts: BTreeMap<&Var, (usize, usize)> = BTreeMap::new();
    for c in cs {
        for (v, k) in c.expr.terms() {
            if elim.contains(v) {
                let e = counts.entry(v).or_default();
                if k.is_positive() {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
    }
    counts
        .into_iter()
        .min_by_key(|(v, (p, n))| (p * n, (*v).clone()))
        .map(|(v, _)| v.clone())
}

/// Eliminates `elim` from the conjunction `cs`. The result constrains the
/// remaining variables exactly to the projection (over the rationals; with
/// `integral`, to a tightening of it that keeps every integer point of the
/// projection of integer points). `None` when the conjunction is empty.
///
/// Combinations built from more than `t + 1` atoms after `t` elimination
/// steps are redundant (Chernikov) and are dropped; histories restart after
/// each equality substitution.
pub(crate) fn eliminate(
    cs: Vec<Constraint>,
    elim: &BTreeSet<Var>,
    integral: bool,
) -> Option<Vec<Constraint>> {
    let fresh = |cs: Vec<Constraint>| -> Vec<(Constraint, History)> {
        cs.into_iter()
            .enumerate()
            .map(|(i, c)| (c, History::from([i])))
            .collect()
    };
    let mut cs = canonicalize_tracked(fresh(cs), integral)?;
    let mut steps = 0;
    loop {
        let plain: Vec<Constraint> = cs.iter().map(|(c, _)| c.clone()).collect();
        if let Some((i, v)) = pick_equality(&plain, elim) {
            let (eq, _) = cs.swap_remove(i);
            let a = eq.expr.coeff(&v);
            let mut rest = eq.expr.clone();
            rest.add_term(v.clone(), -a.clone());
            // a*v + rest = 0  =>  v = -rest / a
            let by = rest.scale(&(-Rat::one() / a));
            let next = cs.iter().map(|(c, _)| c.substitute(&v, &by)).collect();
            cs = canonicalize_tracked(fresh(next), integral)?;
            steps = 0;
            continue;
        }
        let Some(v) = pick_variable(&plain, elim) else {
            return Some(plain);
        };
        steps += 1;
        let (mentions, mut keep): (Vec<_>, Vec<_>) =
            cs.into_iter().partition(|(c, _)| c.mentions(&v));
        let (pos, neg): (Vec<_>, Vec<_>) = mentions
            .into_iter()
            .partition(|(c, _)| c.expr.coeff(&v).is_positive());
        for (p, ph) in &pos {
            let a = p.expr.coeff(&v);
            for (n, nh) in &neg {
                let hist: History = ph.union(nh).cloned().collect();
                if hist.len() > steps + 1 {
                    continue;
                }
                let b = -n.expr.coeff(&v);
                let e = p.expr.scale(&b).add(&n.expr.scale(&a));
                let rel = if p.rel == Rel::Lt || n.rel == Rel::Lt {
                    Rel::Lt
                } else {
                    Rel::Le
                };
                keep.push((Constraint::new(e, rel), hist));
            }
        }
        cs = canonicalize_tracked(keep, integral)?;
        if cs.len() > PRUNE_ABOVE && cs.iter().all(|(c, _)| c.rel != Rel::Lt) {
            let plain = cs.into_iter().map(|(c, _)| c).collect();
            cs = fresh(lp::without_redundant(plain));
            steps = 0;
        }
    }
}

pub(crate) fn satisfiable(cs: &[Constraint], integral: bool) -> bool {
    if !integral {
        return super::lp::satisfiable(cs);
    }
    let all: BTreeSet<Var> = super::expr::vars_of(cs);
    eliminate(cs.to_vec(), &all, integral).is_some()
}

/// A point of the (tightened, when `integral`) conjunction, preferring
/// integer coordinates. `None` when the conjunction is empty.
pub(crate) fn witness(cs: &[Constraint], integral: bool) -> Option<BTreeMap<Var, Rat>> {
    let order: Vec<Var> = super::expr::vars_of(cs).into_iter().collect();
    let mut systems = vec![canonicalize(cs.to_vec(), integral)?];
    for v in &order {
        let last = systems.last().expect("nonempty");
        let next = eliminate(last.clone(), &BTreeSet::from([v.clone()]), integral)?;
        systems.push(next);
    }
    let mut point: BTreeMap<Var, Rat> = BTreeMap::new();
    for (i, v) in order.iter().enumerate().rev() {
        let mut lo: Option<(Rat, bool)> = None;
        let mut hi: Option<(Rat, bool)> = None;
        for c in &systems[i] {
            let a = c.expr.coeff(v);
            if a.is_zero() {
                continue;
            }
            let mut rest = c.expr.clone();
            rest.add_term(v.clone(), -a.clone());
            let r = rest.eval(&point).expect("later variables are fixed");
            // a*v + r rel 0
            let bound = -r / &a;
            let strict = c.rel == Rel::Lt;
            let upper = |hi: &mut Option<(Rat, bool)>| {
                if hi
                    .as_ref()
                    .is_none_or(|(h, s)| bound < *h || (bound == *h && strict && !s))
                {
                    *hi = Some((bound.clone(), strict));
                }
            };
            let lower = |lo: &mut Option<(Rat, bool)>| {
                if lo
                    .as_ref()
                    .is_none_or(|(l, s)| bound > *l || (bound == *l && strict && !s))
                {
                    *lo = Some((bound.clone(), strict));
                }
            };
            match c.rel {
                Rel::Eq => {
                    upper(&mut hi);
                    lower(&mut lo);
                }
                _ if a.is_positive() => upper(&mut hi),
                _ => lower(&mut lo),
            }
        }
        let value = match (lo, hi) {
            (None, None) => Rat::zero(),
            (Some((l, s)), None) => {
                if s {
                    l.floor() + Rat::one()
                } else {
                    l.ceil()
                }
            }
            (None, Some((h, s))) => {
                if s {
                    h.ceil() - Rat::one()
                } else {
                    h.floor()
                }
            }
            (Some((l, ls)), Some((h, hs))) => {
                let first = if ls { l.floor() + Rat::one() } else { l.ceil() };
                if first < h || (first == h && !hs) {
                    first
                } else if l == h {
                    l
                } else {
                    (l + h) / Rat::from_integer(2.into())
                }
            }
        };
        point.insert(v.clone(), value);
    }
    Some(point)
}

/// Integer satisfiability by branch and bound on rational witnesses. Gives
/// up after `budget` nodes and then answers `true`.
pub(crate) fn integer_satisfiable(cs: &[Constraint], budget: usize) -> bool {
    let mut stack = vec![cs.to_vec()];
    let mut nodes = 0;
    while let Some(node) = stack.pop() {
        if nodes == budget {
            return true;
        }
        nodes += 1;
        let Some(point) = witness(&node, true) else {
            continue;
        };
        let Some((v, x)) = point.iter().find(|(_, x)| !x.is_integer()) else {
            return true;
        };
        let var = LinExpr::var(v.clone());
        let mut below = node.clone();
        below.push(Constraint::le(&var, &LinExpr::constant(x.floor())));
        let mut above = node;
        above.push(Constraint::ge(&var, &LinExpr::constant(x.ceil())));
        stack.push(below);
        stack.push(above);
    }
    false
}
