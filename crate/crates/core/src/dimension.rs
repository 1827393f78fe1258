//! Derivation trees, their dimension, and a bounded enumerator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::chc::{Clause, Pred, Program};
use crate::kdim::Origin;
use crate::linconstr::{fm, Constraint, LinExpr, Var};

/// A derivation tree: the clause applied at the root and one subtree per
/// body atom, in body order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DerivTree {
    pub clause_id: usize,
    pub children: Vec<DerivTree>,
}

impl DerivTree {
    pub fn leaf(clause_id: usize) -> Self {
        DerivTree {
            clause_id,
            children: Vec::new(),
        }
    }

    pub fn node(clause_id: usize, children: Vec<DerivTree>) -> Self {
        DerivTree {
            clause_id,
            children,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(DerivTree::size).sum::<usize>()
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut out = vec![self.clause_id];
        for c in &self.children {
            out.extend(c.preorder());
        }
        out
    }

    /// Conjunction of the clause constraints along the tree, with each
    /// node's variables renamed apart and body arguments linked to the
    /// child heads.
    pub fn constraints(&self, p: &Program) -> Vec<Constraint> {
        let mut out = Vec::new();
        let mut counter = 0;
        collect_constraints(self, p, None, &mut counter, &mut out);
        out
    }

    /// Whether the accumulated constraint is rationally satisfiable.
    pub fn feasible(&self, p: &Program) -> bool {
        fm::satisfiable(&self.constraints(p), false)
    }

    /// Contracts every node whose clause satisfies `skip` (a unit step) and
    /// maps the remaining clause ids through `relabel`.
    pub fn contract(
        &self,
        skip: &dyn Fn(usize) -> bool,
        relabel: &dyn Fn(usize) -> usize,
    ) -> DerivTree {
        if skip(self.clause_id) && self.children.len() == 1 {
            return self.children[0].contract(skip, relabel);
        }
        DerivTree {
            clause_id: relabel(self.clause_id),
            children: self
                .children
                .iter()
                .map(|c| c.contract(skip, relabel))
                .collect(),
        }
    }

    /// Removes the ε-steps of a tree of a transformed program and relabels
    /// its nodes with the source clause ids.
    pub fn erase(&self, origins: &[Origin]) -> DerivTree {
        self.contract(
            &|id| origins[id] == Origin::Epsilon,
            &|id| match origins[id] {
                Origin::Source(s) => s,
                Origin::Epsilon => id,
            },
        )
    }

    /// Text form: one `cN` line per node (1-based clause number), indented
    /// two spaces per depth.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        self.dump_into(0, &mut s);
        s
    }

    fn dump_into(&self, depth: usize, s: &mut String) {
        s.push_str(&"  ".repeat(depth));
        s.push_str(&format!("c{}\n", self.clause_id + 1));
        for c in &self.children {
            c.dump_into(depth + 1, s);
        }
    }

    pub fn parse_dump(text: &str) -> Result<DerivTree, TreeParseError> {
        let mut lines = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let indent = line.len() - line.trim_start_matches(' ').len();
            if indent % 2 != 0 {
                return Err(TreeParseError::Indent(n + 1));
            }
            let label = line.trim();
            let id: usize = label
                .strip_prefix('c')
                .and_then(|s| s.parse().ok())
                .filter(|&i| i >= 1)
                .ok_or_else(|| TreeParseError::Label(n + 1, label.to_string()))?;
            lines.push((n + 1, indent / 2, id - 1));
        }
        let mut pos = 0;
        let tree = parse_subtree(&lines, &mut pos, 0)?;
        if let Some(&(n, _, _)) = lines.get(pos) {
            return Err(TreeParseError::Indent(n));
        }
        Ok(tree)
    }
}

fn parse_subtree(
    lines: &[(usize, usize, usize)],
    pos: &mut usize,
    depth: usize,
) -> Result<DerivTree, TreeParseError> {
    let &(n, d, id) = lines.get(*pos).ok_or(TreeParseError::Empty)?;
    if d != depth {
        return Err(TreeParseError::Indent(n));
    }
    *pos += 1;
    let mut children = Vec::new();
    while let Some(&(_, d, _)) = lines.get(*pos) {
        if d <= depth {
            break;
        }
        children.push(parse_subtree(lines, pos, depth + 1)?);
    }
    Ok(DerivTree {
        clause_id: id,
        children,
    })
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum TreeParseError {
    #[error("empty tree")]
    Empty,
    #[error("line {0}: bad indentation")]
    Indent(usize),
    #[error("line {0}: expected a clause label like c1, found {1:?}")]
    Label(usize, String),
}

impl fmt::Display for DerivTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.clause_id + 1)?;
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", c)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn collect_constraints(
    t: &DerivTree,
    p: &Program,
    link: Option<&[Var]>,
    counter: &mut usize,
    out: &mut Vec<Constraint>,
) {
    let clause = &p.clauses()[t.clause_id];
    let tag = *counter;
    *counter += 1;
    let map: BTreeMap<Var, Var> = clause
        .vars()
        .into_iter()
        .map(|v| {
            let fresh = Var::new(format!("#t{}_{}", tag, v));
            (v, fresh)
        })
        .collect();
    out.extend(clause.constraints.iter().map(|c| c.rename(&map)));
    if let Some(parent_args) = link {
        for (a, h) in parent_args.iter().zip(clause.head_args()) {
            out.push(Constraint::eq(
                &LinExpr::var(a.clone()),
                &LinExpr::var(map[h].clone()),
            ));
        }
    }
    for (atom, child) in clause.body.iter().zip(&t.children) {
        let args: Vec<Var> = atom.args.iter().map(|v| map[v].clone()).collect();
        collect_constraints(child, p, Some(&args), counter, out);
    }
}

/// Tree dimension: 0 at leaves; the maximum child dimension when exactly
/// one child attains it, one more otherwise.
pub fn dim(t: &DerivTree) -> u32 {
    let dims: Vec<u32> = t.children.iter().map(dim).collect();
    match dims.iter().max() {
        None => 0,
        Some(&m) if dims.iter().filter(|&&d| d == m).count() == 1 => m,
        Some(&m) => m + 1,
    }
}

pub fn height(t: &DerivTree) -> u32 {
    t.children.iter().map(|c| 1 + height(c)).max().unwrap_or(0)
}

/// Trees grouped by root predicate and weight, built bottom-up.
struct Shapes<'a> {
    p: &'a Program,
    weight: &'a dyn Fn(&Clause) -> usize,
    memo: HashMap<(Pred, usize), Vec<DerivTree>>,
}

impl<'a> Shapes<'a> {
    fn exact(&mut self, pred: &Pred, n: usize, depth: usize) -> Vec<DerivTree> {
        if let Some(ts) = self.memo.get(&(pred.clone(), n)) {
            return ts.clone();
        }
        let mut out = Vec::new();
        // zero-weight clauses could otherwise recurse without bound
        if depth <= self.p.clauses().len() + 1 {
            let clauses: Vec<&Clause> = self.p.clauses_for(pred).collect();
            for c in clauses {
                let w = (self.weight)(c);
                if w > n {
                    continue;
                }
                let budget = n - w;
                if c.body.is_empty() {
                    if budget == 0 {
                        out.push(DerivTree::leaf(c.id));
                    }
                    continue;
                }
                let preds: Vec<Pred> = c.body.iter().map(|a| a.pred.clone()).collect();
                let next_depth = if w == 0 { depth + 1 } else { 0 };
                for kids in self.distribute(&preds, budget, next_depth) {
                    out.push(DerivTree::node(c.id, kids));
                }
            }
        }
        if depth == 0 {
            self.memo.insert((pred.clone(), n), out.clone());
        }
        out
    }

    /// Child lists for `preds` whose weights sum to `n`, each child at least 1.
    fn distribute(&mut self, preds: &[Pred], n: usize, depth: usize) -> Vec<Vec<DerivTree>> {
        let Some((first, rest)) = preds.split_first() else {
            return if n == 0 { vec![Vec::new()] } else { Vec::new() };
        };
        let mut out = Vec::new();
        for m in 0..=n {
            let heads = self.exact(first, m, depth);
            if heads.is_empty() {
                continue;
            }
            let tails = self.distribute(rest, n - m, depth);
            for h in &heads {
                for t in &tails {
                    let mut v = Vec::with_capacity(preds.len());
                    v.push(h.clone());
                    v.extend(t.iter().cloned());
                    out.push(v);
                }
            }
        }
        out
    }
}

/// Derivation trees of `p` rooted at `root` whose total clause weight is at
/// most `max_weight` and whose accumulated constraint is satisfiable,
/// ordered by their preorder clause-id sequence.
pub fn enumerate_weighted<'a>(
    p: &'a Program,
    root: &Pred,
    max_weight: usize,
    weight: &dyn Fn(&Clause) -> usize,
) -> impl Iterator<Item = DerivTree> + 'a {
    let mut shapes = Shapes {
        p,
        weight,
        memo: HashMap::new(),
    };
    let mut all: Vec<DerivTree> = (0..=max_weight)
        .flat_map(|n| shapes.exact(root, n, 0))
        .collect();
    all.sort_by_cached_key(|t| t.preorder());
    all.dedup();
    all.into_iter().filter(move |t| t.feasible(p))
}

/// Derivation trees with at most `max_nodes` nodes.
pub fn enumerate<'a>(
    p: &'a Program,
    root: &Pred,
    max_nodes: usize,
) -> impl Iterator<Item = DerivTree> + 'a {
    enumerate_weighted(p, root, max_nodes, &|_| 1)
}

/// Trees of a transformed program, counting only non-ε nodes against the
/// bound, each mapped back to a tree of the source program.
pub fn enumerate_erased(
    kp: &Program,
    origins: &[Origin],
    root: &Pred,
    max_nodes: usize,
) -> BTreeSet<DerivTree> {
    let weight = |c: &Clause| usize::from(origins[c.id] != Origin::Epsilon);
    enumerate_weighted(kp, root, max_nodes, &weight)
        .map(|t| t.erase(origins))
        .collect()
}
