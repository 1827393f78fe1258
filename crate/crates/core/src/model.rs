//! Models as disjunctions of constrained facts, clause satisfaction,
//! inductiveness, and linearization of a level against a model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::chc::{
    params, parse_program, Atom, Clause, Head, ParseError, Pred, Program, ProgramError, FALSE,
};
use crate::linconstr::{fm, Constraint, LinError, Polyhedron, Var};

pub const DEFAULT_SPLIT_BUDGET: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("predicate {pred} has arity {expected} in the model but {found} in the clause")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("not a constrained fact: {0}")]
    NotAFact(String),
    #[error("program has no indexed predicates")]
    NotIndexed,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Lin(#[from] LinError),
}

/// `pred(params) :- constraint`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedFact {
    pub pred: Pred,
    pub params: Vec<Var>,
    pub constraint: Polyhedron,
}

impl ConstrainedFact {
    pub fn new(pred: Pred, constraint: Polyhedron) -> Self {
        let params = constraint.dims().to_vec();
        ConstrainedFact {
            pred,
            params,
            constraint,
        }
    }

    /// A fact over the canonical parameters `A, B, ...`.
    pub fn canonical(
        pred: Pred,
        arity: usize,
        constraints: Vec<Constraint>,
    ) -> Result<Self, ModelError> {
        Ok(Self::new(
            pred,
            Polyhedron::new(params(arity), constraints)?,
        ))
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// The constraint with the parameters renamed to `args`.
    pub fn instantiate(&self, args: &[Var]) -> Vec<Constraint> {
        let map: BTreeMap<Var, Var> = self
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        self.constraint.rename(&map).constraints().to_vec()
    }
}

impl fmt::Display for ConstrainedFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} :- {}.",
            Atom::new(self.pred.clone(), self.params.clone()),
            self.constraint
        )
    }
}

/// Predicates absent from the map are interpreted as empty; `false` and its
/// indexed variants are always empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Model {
    facts: BTreeMap<Pred, Vec<ConstrainedFact>>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fact: ConstrainedFact) -> Result<(), ModelError> {
        let list = self.facts.entry(fact.pred.clone()).or_default();
        if let Some(first) = list.first() {
            if first.arity() != fact.arity() {
                return Err(ModelError::ArityMismatch {
                    pred: fact.pred.to_string(),
                    expected: first.arity(),
                    found: fact.arity(),
                });
            }
        }
        if !list.contains(&fact) {
            list.push(fact);
        }
        Ok(())
    }

    pub fn facts(&self) -> impl Iterator<Item = &ConstrainedFact> {
        self.facts.values().flatten()
    }

    pub fn facts_for(&self, pred: &Pred) -> &[ConstrainedFact] {
        if pred.name == FALSE {
            return &[];
        }
        self.facts.get(pred).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Pred> {
        self.facts.keys()
    }

    pub fn contains(&self, pred: &Pred) -> bool {
        self.facts.contains_key(pred)
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Adds the facts of predicates not yet present.
    pub fn absorb(&mut self, other: &Model) {
        for (pred, fs) in &other.facts {
            if !self.facts.contains_key(pred) {
                self.facts.insert(pred.clone(), fs.clone());
            }
        }
    }

    /// Merges indexed predicates into their base; facts of different
    /// indices become disjuncts, duplicates included.
    pub fn erase_indices(&self) -> Model {
        let mut out = Model::new();
        for f in self.facts() {
            let fact = ConstrainedFact {
                pred: f.pred.base(),
                ..f.clone()
            };
            out.facts.entry(fact.pred.clone()).or_default().push(fact);
        }
        out
    }

    /// Drops every disjunct whose integer points lie in another disjunct of
    /// the same predicate.
    pub fn pruned(&self) -> Model {
        let mut out = Model::new();
        for (pred, fs) in &self.facts {
            let live: Vec<&ConstrainedFact> =
                fs.iter().filter(|f| f.constraint.sat_integral()).collect();
            let mut kept: Vec<ConstrainedFact> = Vec::new();
            for (i, f) in live.iter().enumerate() {
                let subsumed = live.iter().enumerate().any(|(j, g)| {
                    j != i
                        && f.constraint.entails_integral(&g.constraint).unwrap_or(false)
                        // of two equivalent disjuncts keep the first
                        && (j < i || !g.constraint.entails_integral(&f.constraint).unwrap_or(false))
                });
                if !subsumed {
                    kept.push((*f).clone());
                }
            }
            if !kept.is_empty() {
                out.facts.insert(pred.clone(), kept);
            }
        }
        out
    }

    /// Reads the `pred(A,B) :- [c1,c2].` form, one fact per line.
    pub fn parse(text: &str) -> Result<Model, ModelError> {
        let p = parse_program(text)?;
        let mut m = Model::new();
        for c in p.clauses() {
            let Head::Atom(head) = &c.head else {
                return Err(ModelError::NotAFact(c.to_string()));
            };
            if !c.body.is_empty() {
                return Err(ModelError::NotAFact(c.to_string()));
            }
            let ps = params(head.args.len());
            let mut map: BTreeMap<Var, Var> = BTreeMap::new();
            for v in c.vars() {
                map.insert(v.clone(), Var::new(format!("#m_{}", v)));
            }
            for (a, p) in head.args.iter().zip(&ps) {
                map.insert(a.clone(), p.clone());
            }
            let cs: Vec<Constraint> = c.constraints.iter().map(|x| x.rename(&map)).collect();
            let poly = Polyhedron::over(ps.clone(), cs).project(&ps);
            m.insert(ConstrainedFact::new(head.pred.clone(), poly))?;
        }
        Ok(m)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in self.facts() {
            writeln!(f, "{}", fact)?;
        }
        Ok(())
    }
}

fn check_arity(fact: &ConstrainedFact, atom: &Atom) -> Result<(), ModelError> {
    if fact.arity() != atom.args.len() {
        return Err(ModelError::ArityMismatch {
            pred: atom.pred.to_string(),
            expected: fact.arity(),
            found: atom.args.len(),
        });
    }
    Ok(())
}

/// Disjuncts per body atom, each instantiated to the atom's arguments.
fn body_choices(m: &Model, body: &[Atom]) -> Result<Vec<Vec<Vec<Constraint>>>, ModelError> {
    body.iter()
        .map(|a| {
            m.facts_for(&a.pred)
                .iter()
                .map(|f| {
                    check_arity(f, a)?;
                    Ok(f.instantiate(&a.args))
                })
                .collect()
        })
        .collect()
}

/// Calls `visit` with the constraint of every combination of one disjunct
/// per body atom; stops early when `visit` returns false.
fn for_each_combination(
    base: &[Constraint],
    choices: &[Vec<Vec<Constraint>>],
    visit: &mut dyn FnMut(Vec<Constraint>) -> Result<bool, ModelError>,
) -> Result<bool, ModelError> {
    fn go(
        acc: Vec<Constraint>,
        rest: &[Vec<Vec<Constraint>>],
        visit: &mut dyn FnMut(Vec<Constraint>) -> Result<bool, ModelError>,
    ) -> Result<bool, ModelError> {
        let Some((first, rest)) = rest.split_first() else {
            return visit(acc);
        };
        for d in first {
            let mut next = acc.clone();
            next.extend(d.iter().cloned());
            if !fm::satisfiable(&next, true) {
                continue;
            }
            if !go(next, rest, visit)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
    go(base.to_vec(), choices, visit)
}

/// Whether every integer point of `region` lies in some polyhedron of
/// `heads`, deciding by splitting `region` on the negated atoms of each
/// head in turn. Returns false once `budget` splits are spent.
/// Branch-and-bound nodes spent per integer feasibility query.
const INTEGER_NODES: usize = 64;

fn feasible(cs: &[Constraint]) -> bool {
    fm::integer_satisfiable(cs, INTEGER_NODES)
}

fn covered(region: Vec<Constraint>, heads: &[Vec<Constraint>], budget: &mut usize) -> bool {
    if !feasible(&region) {
        return true;
    }
    let entails = |r: &[Constraint], a: &Constraint| {
        a.integral_negations().into_iter().all(|n| {
            let mut cs = r.to_vec();
            cs.push(n);
            !feasible(&cs)
        })
    };
    if heads.iter().any(|h| h.iter().all(|a| entails(&region, a))) {
        return true;
    }
    let Some((h, rest)) = heads.split_first() else {
        return false;
    };
    let mut acc = region;
    for atom in h {
        if entails(&acc, atom) {
            continue;
        }
        for n in atom.integral_negations() {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let mut piece = acc.clone();
            piece.push(n);
            if !covered(piece, rest, budget) {
                return false;
            }
        }
        acc.push(atom.clone());
        if !feasible(&acc) {
            return true;
        }
    }
    true
}

/// Whether `m` satisfies `c` over the integers.
pub fn satisfies_clause(m: &Model, c: &Clause, budget: usize) -> Result<bool, ModelError> {
    let choices = body_choices(m, &c.body)?;
    let head: Option<Vec<Vec<Constraint>>> = match &c.head {
        Head::False => None,
        Head::Atom(a) if a.pred.name == FALSE => None,
        Head::Atom(a) => Some(
            m.facts_for(&a.pred)
                .iter()
                .map(|f| {
                    check_arity(f, a)?;
                    Ok(f.instantiate(&a.args))
                })
                .collect::<Result<_, ModelError>>()?,
        ),
    };
    let mut budget = budget;
    for_each_combination(&c.constraints, &choices, &mut |body| {
        Ok(match &head {
            None => !fm::satisfiable(&body, true),
            Some(heads) => {
                let relevant: Vec<Vec<Constraint>> = heads
                    .iter()
                    .filter(|h| {
                        let mut cs = body.clone();
                        cs.extend(h.iter().cloned());
                        fm::satisfiable(&cs, true)
                    })
                    .cloned()
                    .collect();
                covered(body, &relevant, &mut budget)
            }
        })
    })
}

/// Ids of the clauses of `p` that the index-erased `m` does not satisfy.
pub fn violations(m: &Model, p: &Program, budget: usize) -> Result<Vec<usize>, ModelError> {
    let erased = m.erase_indices().pruned();
    let mut out = Vec::new();
    for c in p.clauses() {
        if !satisfies_clause(&erased, c, budget)? {
            out.push(c.id);
        }
    }
    Ok(out)
}

/// Whether the index-erased `m` is a model of `p`. Arity errors count as
/// not inductive.
pub fn inductive(m: &Model, p: &Program, budget: usize) -> bool {
    let erased = m.erase_indices().pruned();
    p.clauses()
        .iter()
        .all(|c| satisfies_clause(&erased, c, budget).unwrap_or(false))
}

/// Replaces every body atom below the program's top level by its
/// interpretation in `s`, one clause per combination of disjuncts; clauses
/// with an unsatisfiable constraint are dropped and the rest are projected
/// onto the variables of the remaining atoms.
pub fn linearize(p: &Program, s: &Model) -> Result<Program, ModelError> {
    let top = p
        .signatures()
        .keys()
        .filter_map(|q| q.index.map(|ix| ix.level()))
        .max()
        .ok_or(ModelError::NotIndexed)?;
    let mut out = Vec::new();
    for c in p.clauses() {
        let (kept, replaced): (Vec<Atom>, Vec<Atom>) = c
            .body
            .iter()
            .cloned()
            .partition(|a| a.pred.index.is_none_or(|ix| ix.level() == top));
        let choices = body_choices(s, &replaced)?;
        let mut keep: Vec<Var> = c.head_args().to_vec();
        for a in &kept {
            keep.extend(a.args.iter().cloned());
        }
        let keep: Vec<Var> = keep
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for_each_combination(&c.constraints, &choices, &mut |cs| {
            let poly = Polyhedron::over(keep.clone(), cs).project_integral(&keep);
            if poly.sat_integral() {
                out.push(Clause {
                    id: 0,
                    head: c.head.clone(),
                    constraints: poly.simplify().constraints().to_vec(),
                    body: kept.clone(),
                });
            }
            Ok(true)
        })?;
    }
    Ok(Program::new(out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chc::{parse_constraints, DimIndex};
    use crate::kdim::kdim;
    use crate::linconstr::{rat, Rat};
    use proptest::prelude::*;

    const FIB: &str = "
fib(A, B):- A>=0,  A=<1, B=A.
fib(A, B) :- A > 1, A2 = A - 2, fib(A2, B2),
           A1 = A - 1, fib(A1, B1), B = B1 + B2.
false:- A>5, fib(A,B), B<A.
";

    fn fact(pred: Pred, arity: usize, cs: &str) -> ConstrainedFact {
        let cs = if cs.is_empty() {
            Vec::new()
        } else {
            parse_constraints(cs).unwrap()
        };
        ConstrainedFact::canonical(pred, arity, cs).unwrap()
    }

    fn model(facts: Vec<ConstrainedFact>) -> Model {
        let mut m = Model::new();
        for f in facts {
            m.insert(f).unwrap();
        }
        m
    }

    #[test]
    fn fib_clause_two_fails_under_level_zero_model() {
        let p = parse_program(FIB).unwrap();
        let m = model(vec![fact(Pred::plain("fib"), 2, "A>=0, A=<1, B=1")]);
        assert!(!satisfies_clause(&m, &p.clauses()[1], DEFAULT_SPLIT_BUDGET).unwrap());
        let m = model(vec![fact(Pred::plain("fib"), 2, "A>=0, A=<1, B=A")]);
        assert!(!satisfies_clause(&m, &p.clauses()[1], DEFAULT_SPLIT_BUDGET).unwrap());
        assert_eq!(violations(&m, &p, DEFAULT_SPLIT_BUDGET).unwrap(), vec![1]);
        assert!(!inductive(&m, &p, DEFAULT_SPLIT_BUDGET));
    }

    #[test]
    fn top_satisfies_definite_clauses() {
        let p = parse_program(FIB).unwrap();
        let m = model(vec![fact(Pred::plain("fib"), 2, "")]);
        assert!(satisfies_clause(&m, &p.clauses()[0], DEFAULT_SPLIT_BUDGET).unwrap());
        assert!(satisfies_clause(&m, &p.clauses()[1], DEFAULT_SPLIT_BUDGET).unwrap());
        assert!(!satisfies_clause(&m, &p.clauses()[2], DEFAULT_SPLIT_BUDGET).unwrap());
    }

    #[test]
    fn empty_model_and_integrity_only() {
        let p = parse_program("false :- p(X).").unwrap();
        assert!(inductive(&Model::new(), &p, DEFAULT_SPLIT_BUDGET));
    }

    #[test]
    fn disjunctive_head_needs_splitting() {
        // X in [0,4] is covered by [0,2] and [3,4] only over the integers
        let c = parse_program("p(X) :- X>=0, X=<4.").unwrap().clauses()[0].clone();
        let m = model(vec![
            fact(Pred::plain("p"), 1, "A>=0, A=<2"),
            fact(Pred::plain("p"), 1, "A>=3, A=<4"),
        ]);
        assert!(satisfies_clause(&m, &c, DEFAULT_SPLIT_BUDGET).unwrap());
        let m = model(vec![
            fact(Pred::plain("p"), 1, "A>=0, A=<2"),
            fact(Pred::plain("p"), 1, "A>=4, A=<4"),
        ]);
        assert!(!satisfies_clause(&m, &c, DEFAULT_SPLIT_BUDGET).unwrap());
        // a zero budget gives up
        let m = model(vec![
            fact(Pred::plain("p"), 1, "A>=0, A=<2"),
            fact(Pred::plain("p"), 1, "A>=3, A=<4"),
        ]);
        assert!(!satisfies_clause(&m, &c, 0).unwrap());
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let c = parse_program("q(X) :- p(X).").unwrap().clauses()[0].clone();
        let m = model(vec![fact(Pred::plain("p"), 2, "")]);
        assert!(matches!(
            satisfies_clause(&m, &c, 10),
            Err(ModelError::ArityMismatch { .. })
        ));
    }

    /// The three-level model of Fib in listing form.
    const LEVEL_TWO: &str = "\
fib(0)(A,B) :- [-A>= -1,A>=0,B=1].
fib[0](A,B) :- [-A>= -1,A>=0,B=1].
fib(1)(A,B) :- [A>=2,A+ -B=0].
fib[1](A,B) :- [A+ -B>= -1,B>=1,-A+B>=0].
fib(2)(A,B) :- [A>=4,-2*A+B>= -3].
fib[2](A,B) :- [A>=0,B>=1,-A+B>=0].
";

    #[test]
    fn printed_level_two_model_erases_to_six_disjuncts() {
        let m = Model::parse(LEVEL_TWO).unwrap();
        let e = m.erase_indices();
        assert_eq!(e.facts_for(&Pred::plain("fib")).len(), 6);
        let fact = &m.facts_for(&Pred::exactly("fib", 0))[0];
        let erased = ConstrainedFact {
            pred: fact.pred.base(),
            ..fact.clone()
        };
        assert_eq!(erased.to_string(), "fib(A,B) :- [B=1,A>=0,-A>= -1].");
        let p = parse_program(FIB).unwrap();
        // B=1 excludes (0,0), which clause c1 derives
        assert_eq!(violations(&m, &p, DEFAULT_SPLIT_BUDGET).unwrap(), vec![0]);
        assert!(satisfies_clause(&e, &p.clauses()[1], DEFAULT_SPLIT_BUDGET).unwrap());
        assert!(satisfies_clause(&e, &p.clauses()[2], DEFAULT_SPLIT_BUDGET).unwrap());
    }

    #[test]
    fn model_text_round_trip() {
        let m = Model::parse(LEVEL_TWO).unwrap();
        let text = m.to_string();
        assert_eq!(Model::parse(&text).unwrap().to_string(), text);
        let odd = Model::parse("p(X, 3) :- [X>0].\nq :- [].\nr(0)() :- [].").unwrap();
        assert_eq!(
            odd.to_string(),
            "p(A,B) :- [B=3,A>=1].\nq :- [].\nr(0)() :- [].\n"
        );
        assert!(Model::parse("p(X) :- q(X).").is_err());
    }

    #[test]
    fn linearize_excerpt() {
        let p = parse_program(
            "false(1) :- A>5, B<A, fib(1)(A,B).
             fib(1)(A,B) :- A>1, C=A-2, E=A-1, B=F+D, fib(1)(C,D), fib[0](E,F).",
        )
        .unwrap();
        let s0 = model(vec![
            fact(Pred::exactly("fib", 0), 2, "A>=0, A=<1, B=A"),
            fact(Pred::at_most("fib", 0), 2, "A>=0, A=<1, B=A"),
        ]);
        let lin = linearize(&p, &s0).unwrap();
        assert!(lin.is_linear());
        assert_eq!(lin.clauses().len(), 2);
        let want = parse_program(
            "false(1) :- A>5, B<A, fib(1)(A,B).
             fib(1)(A,B) :- -A>= -2, A>1, A-C=2, B-D=1, fib(1)(C,D).",
        )
        .unwrap();
        for (g, w) in lin.clauses().iter().zip(want.clauses()) {
            assert_eq!(g.head, w.head);
            assert_eq!(g.body, w.body);
            let vars: Vec<Var> = g.vars().into_iter().collect();
            let gp = Polyhedron::over(vars.clone(), g.constraints.clone());
            let wp = Polyhedron::over(vars, w.constraints.clone());
            assert!(gp.equivalent_integral(&wp), "{} vs {}", g, w);
        }
    }

    #[test]
    fn linearize_against_empty_levels_drops_clauses() {
        let p = parse_program(FIB).unwrap();
        let k1 = kdim(&p, 1).unwrap();
        let lin = linearize(&k1, &Model::new()).unwrap();
        assert!(lin.is_linear());
        for c in lin.clauses() {
            assert!(c
                .body
                .iter()
                .all(|a| a.pred.index.map(DimIndex::level) == Some(1)));
        }
        // the fact and the level-1 clauses of c3, c2 (two tie-free ones drop) survive
        assert!(lin.clauses().iter().any(|c| c.body.is_empty()));
    }

    fn grid_point(vars: &[Var], coords: &[i64]) -> BTreeMap<Var, Rat> {
        vars.iter()
            .cloned()
            .zip(coords.iter().map(|&c| rat(c)))
            .collect()
    }

    fn small_constraint() -> impl Strategy<Value = (i64, i64, i64, u8)> {
        (-2i64..=2, -2i64..=2, -3i64..=3, 0u8..3)
    }

    fn build(cs: &[(i64, i64, i64, u8)], x: &str, y: &str) -> Vec<Constraint> {
        use crate::linconstr::LinExpr;
        cs.iter()
            .map(|&(a, b, c, rel)| {
                let mut e = LinExpr::term(Var::from(x), rat(a));
                e.add_term(Var::from(y), rat(b));
                let k = LinExpr::constant(rat(c));
                match rel {
                    0 => Constraint::le(&e, &k),
                    1 => Constraint::ge(&e, &k),
                    _ => Constraint::eq(&e, &k),
                }
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn satisfaction_agrees_with_grid(
            body in prop::collection::vec(small_constraint(), 0..3),
            clause in prop::collection::vec(small_constraint(), 0..2),
            heads in prop::collection::vec(prop::collection::vec(small_constraint(), 0..3), 0..3),
        ) {
            // clause: p(X,Y) :- C, q(X,Y)
            let q = Pred::plain("q");
            let p = Pred::plain("p");
            let mut m = Model::new();
            m.insert(ConstrainedFact::canonical(q.clone(), 2, build(&body, "A", "B")).unwrap()).unwrap();
            for h in &heads {
                m.insert(ConstrainedFact::canonical(p.clone(), 2, build(h, "A", "B")).unwrap()).unwrap();
            }
            let xy = vec![Var::from("X"), Var::from("Y")];
            let c = Clause {
                id: 0,
                head: Head::Atom(Atom::new(p.clone(), xy.clone())),
                constraints: build(&clause, "X", "Y"),
                body: vec![Atom::new(q.clone(), xy.clone())],
            };
            let verdict = satisfies_clause(&m, &c, DEFAULT_SPLIT_BUDGET).unwrap();
            if verdict {
                let ab = params(2);
                for x in -5..=5 {
                    for y in -5..=5 {
                        let pt = grid_point(&xy, &[x, y]);
                        let in_body = c.constraints.iter().all(|k| k.holds_at(&pt) == Some(true))
                            && m.facts_for(&q).iter().any(|f| f.constraint.contains_point(&grid_point(&ab, &[x, y])));
                        if in_body {
                            prop_assert!(m.facts_for(&p).iter().any(|f| f.constraint.contains_point(&grid_point(&ab, &[x, y]))));
                        }
                    }
                }
            }
        }
    }
}
