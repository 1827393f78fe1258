//! The at-most-k-dimension program `P[k]`.
//!
//! Each predicate `p` is split into `p(d)` (derivations of dimension exactly
//! `d`) and `p[d]` (at most `d`), for `0 <= d <= k`:
//!
//! 1. `H(0) :- C.` for constraint-only clauses, and `H(d) :- C, B(d).` for
//!    every clause with one body atom and every `d`;
//! 2. for clauses with `r > 1` body atoms and `1 <= d <= k`:
//!    a. one child at `(d)`, the others at `[d-1]`;
//!    b. the children in a set `J` at `(d-1)`, the others at `[d-2]`, when
//!    all of these exist;
//! 3. `H[d] :- H(e).` for `0 <= e <= d <= k`.
//!
//! Rule 2b as usually stated ranges over two-element sets `J` only. With
//! three or more body atoms that misses nodes whose children tie at the
//! maximum dimension three or more times, so by default every `J` with at
//! least two elements is used; [`TieSets::Pairs`] gives the two-element form.

use std::collections::BTreeSet;

use crate::chc::{params, Atom, Clause, DimIndex, Head, Pred, Program, ProgramError, FALSE};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum KdimError {
    #[error("program already contains indexed predicate {0}")]
    AlreadyIndexed(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Which tie sets rule 2b ranges over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieSets {
    /// Every `J` with `|J| >= 2`: complete for any body size.
    #[default]
    AtLeastTwo,
    /// Only `|J| = 2`.
    Pairs,
}

/// Where a clause of the transformed program came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Index of the source clause.
    Source(usize),
    /// `H[d] :- H(e).`
    Epsilon,
}

fn indexed_head(head: &Head, index: DimIndex) -> Head {
    match head {
        Head::False => Head::Atom(Atom::new(Pred::plain(FALSE).with_index(index), Vec::new())),
        Head::Atom(a) => Head::Atom(Atom::new(a.pred.with_index(index), a.args.clone())),
    }
}

fn indexed_body(body: &[Atom], indices: &[DimIndex]) -> Vec<Atom> {
    body.iter()
        .zip(indices)
        .map(|(a, ix)| Atom::new(a.pred.with_index(*ix), a.args.clone()))
        .collect()
}

/// Subsets of `0..r` used by rule 2b, by size then lexicographically.
fn tie_sets(r: usize, ties: TieSets) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = match ties {
        TieSets::Pairs => vec![2],
        TieSets::AtLeastTwo => (2..=r).collect(),
    };
    let mut out = Vec::new();
    for size in sizes {
        let mut combo: Vec<usize> = (0..size).collect();
        if size > r {
            continue;
        }
        loop {
            out.push(combo.clone());
            // next combination in lexicographic order
            let mut i = size;
            while i > 0 && combo[i - 1] == r - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// Transforms `p` into its at-most-`k`-dimension program, recording the
/// origin of every clause.
pub fn kdim_traced(
    p: &Program,
    k: u32,
    ties: TieSets,
) -> Result<(Program, Vec<Origin>), KdimError> {
    if let Some(ix) = p.signatures().keys().find(|q| q.index.is_some()) {
        return Err(KdimError::AlreadyIndexed(ix.to_string()));
    }
    let mut out: Vec<(Clause, Origin)> = Vec::new();
    let emit = |src: &Clause, head: Head, body: Vec<Atom>, out: &mut Vec<(Clause, Origin)>| {
        let clause = Clause {
            id: 0,
            head,
            constraints: src.constraints.clone(),
            body,
        };
        out.push((clause, Origin::Source(src.id)));
    };

    for c in p.clauses().iter().filter(|c| c.body.len() <= 1) {
        if c.body.is_empty() {
            emit(
                c,
                indexed_head(&c.head, DimIndex::Exactly(0)),
                Vec::new(),
                &mut out,
            );
        } else {
            for d in 0..=k {
                let ix = [DimIndex::Exactly(d)];
                emit(
                    c,
                    indexed_head(&c.head, ix[0]),
                    indexed_body(&c.body, &ix),
                    &mut out,
                );
            }
        }
    }

    for c in p.clauses().iter().filter(|c| c.body.len() > 1) {
        let r = c.body.len();
        let sets = tie_sets(r, ties);
        for d in 1..=k {
            let head = indexed_head(&c.head, DimIndex::Exactly(d));
            for j in 0..r {
                let ix: Vec<DimIndex> = (0..r)
                    .map(|i| {
                        if i == j {
                            DimIndex::Exactly(d)
                        } else {
                            DimIndex::AtMost(d - 1)
                        }
                    })
                    .collect();
                emit(c, head.clone(), indexed_body(&c.body, &ix), &mut out);
            }
            for set in &sets {
                if set.len() < r && d < 2 {
                    continue;
                }
                let ix: Vec<DimIndex> = (0..r)
                    .map(|i| {
                        if set.contains(&i) {
                            DimIndex::Exactly(d - 1)
                        } else {
                            DimIndex::AtMost(d - 2)
                        }
                    })
                    .collect();
                emit(c, head.clone(), indexed_body(&c.body, &ix), &mut out);
            }
        }
    }

    for pred in p.predicates() {
        let arity = p.arity(&pred).unwrap_or(0);
        let args = params(arity);
        for d in 0..=k {
            for e in 0..=d {
                let head = Head::Atom(Atom::new(
                    pred.with_index(DimIndex::AtMost(d)),
                    args.clone(),
                ));
                let body = vec![Atom::new(
                    pred.with_index(DimIndex::Exactly(e)),
                    args.clone(),
                )];
                out.push((
                    Clause {
                        id: 0,
                        head,
                        constraints: Vec::new(),
                        body,
                    },
                    Origin::Epsilon,
                ));
            }
        }
    }

    let (clauses, origins): (Vec<Clause>, Vec<Origin>) = out.into_iter().unzip();
    Ok((Program::new(clauses)?, origins))
}

pub fn kdim(p: &Program, k: u32) -> Result<Program, KdimError> {
    kdim_traced(p, k, TieSets::default()).map(|(q, _)| q)
}

/// Number of clauses of the at-most-`k` program, from the rule counts.
pub fn clause_count(p: &Program, k: u32, ties: TieSets) -> usize {
    let k = k as usize;
    let mut n = 0;
    for c in p.clauses() {
        let r = c.body.len();
        n += match r {
            0 => 1,
            1 => k + 1,
            _ => {
                let sets = tie_sets(r, ties);
                let full = sets.iter().filter(|s| s.len() == r).count();
                // 2a: r per level; 2b: the full set from d = 1, all sets from d = 2
                k * r + k.min(1) * full + k.saturating_sub(1) * sets.len()
            }
        };
    }
    n + p.predicates().len() * (k + 1) * (k + 2) / 2
}

/// Replaces every indexed predicate by its base; indexed `false` heads
/// become the plain `false` head again.
pub fn erase_indices(p: &Program) -> Result<Program, ProgramError> {
    let clauses = p
        .clauses()
        .iter()
        .map(|c| {
            let head = match &c.head {
                Head::Atom(a) if a.pred.name == FALSE => Head::False,
                Head::Atom(a) => Head::Atom(Atom::new(a.pred.base(), a.args.clone())),
                Head::False => Head::False,
            };
            let body = c
                .body
                .iter()
                .map(|a| Atom::new(a.pred.base(), a.args.clone()))
                .collect();
            Clause {
                id: c.id,
                head,
                constraints: c.constraints.clone(),
                body,
            }
        })
        .collect();
    Program::new(clauses)
}

/// `{p(d), p[d] : p in preds(P), 0 <= d <= k}`.
pub fn indexed_inventory(p: &Program, k: u32) -> BTreeSet<Pred> {
    p.predicates()
        .into_iter()
        .flat_map(|q| {
            (0..=k).flat_map(move |d| {
                [
                    q.with_index(DimIndex::Exactly(d)),
                    q.with_index(DimIndex::AtMost(d)),
                ]
            })
        })
        .collect()
}
