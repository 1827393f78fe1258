#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use dimsolve::chc::{params, Clause, Program};
use dimsolve::linconstr::{Constraint, LinExpr, Polyhedron, Var};
use dimsolve::model::{ConstrainedFact, Model};
use dimsolve::parse_program;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FIB: &str = "
fib(A, B):- A>=0,  A=<1, B=A.
fib(A, B) :- A > 1, A2 = A - 2, fib(A2, B2),
           A1 = A - 1, fib(A1, B1), B = B1 + B2.
false:- A>5, fib(A,B), B<A.
";

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

const POOL: [&str; 5] = ["X", "Y", "Z", "U", "W"];
const RELS: [&str; 5] = [">=", "=<", "=", ">", "<"];

fn atom_text(rng: &mut ChaCha8Rng, vars: &[&str]) -> String {
    let n = rng.gen_range(1..=2);
    let mut terms = Vec::new();
    for v in vars.choose_multiple(rng, n) {
        let mut c = 0;
        while c == 0 {
            c = rng.gen_range(-3..=3);
        }
        terms.push(format!("{}*{}", c, v));
    }
    let rel = RELS[rng.gen_range(0..RELS.len())];
    format!("{} {} {}", terms.join(" + "), rel, rng.gen_range(-3..=3))
}

fn pred_atom(rng: &mut ChaCha8Rng, name: &str, arity: usize) -> String {
    let args: Vec<&str> = (0..arity)
        .map(|_| POOL[rng.gen_range(0..POOL.len())])
        .collect();
    if arity == 0 {
        name.to_string()
    } else {
        format!("{}({})", name, args.join(","))
    }
}

/// Random program text: up to 4 predicates of arity 1 or 2, one
/// constraint-only clause per predicate, a few rules of up to 3 body atoms,
/// coefficients in [-3, 3].
pub fn random_program_text(rng: &mut ChaCha8Rng) -> String {
    let np = rng.gen_range(1..=4);
    let preds: Vec<(String, usize)> = (0..np)
        .map(|i| (format!("p{}", i), rng.gen_range(1..=2)))
        .collect();
    let mut out = String::new();
    for (name, arity) in &preds {
        let head = pred_atom(rng, name, *arity);
        out.push_str(&format!("{} :- {}.\n", head, atom_text(rng, &POOL[..2])));
    }
    for _ in 0..rng.gen_range(1..=3) {
        let (name, arity) = preds.choose(rng).expect("nonempty");
        let head = if rng.gen_bool(0.2) {
            "false".to_string()
        } else {
            pred_atom(rng, name, *arity)
        };
        let mut body: Vec<String> = (0..rng.gen_range(1..=2))
            .map(|_| atom_text(rng, &POOL))
            .collect();
        for _ in 0..rng.gen_range(1..=3) {
            let (b, ba) = preds.choose(rng).expect("nonempty");
            body.push(pred_atom(rng, b, *ba));
        }
        out.push_str(&format!("{} :- {}.\n", head, body.join(", ")));
    }
    out
}

pub fn random_program(rng: &mut ChaCha8Rng) -> Program {
    let text = random_program_text(rng);
    parse_program(&text)
        .unwrap_or_else(|e| panic!("generated program does not parse: {}\n{}", e, text))
}

/// Random model over `preds`: zero to two random disjuncts per predicate.
pub fn random_model(rng: &mut ChaCha8Rng, preds: &BTreeMap<dimsolve::chc::Pred, usize>) -> Model {
    let mut m = Model::new();
    for (q, &arity) in preds {
        if q.is_false_variant() {
            continue;
        }
        let ps = params(arity);
        let names: Vec<String> = ps.iter().map(|v| v.to_string()).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        for _ in 0..rng.gen_range(0..=2) {
            let cs: Vec<Constraint> = (0..rng.gen_range(0..=2))
                .map(|_| {
                    let text = if names.is_empty() {
                        "0 =< 1".to_string()
                    } else {
                        atom_text(rng, &names)
                    };
                    dimsolve::chc::parse_constraints(&text)
                        .expect("generated constraint parses")
                        .remove(0)
                })
                .collect();
            m.insert(ConstrainedFact::canonical(q.clone(), arity, cs).expect("arity matches"))
                .expect("arity matches");
        }
    }
    m
}

/// Whether two clauses agree up to a renaming of variables: same head and
/// body predicates, and equivalent constraints once local variables are
/// projected away and atom arguments are matched by position.
pub fn same_up_to_renaming(a: &Clause, b: &Clause) -> bool {
    if a.head.pred() != b.head.pred()
        || a.body.len() != b.body.len()
        || a.body
            .iter()
            .zip(&b.body)
            .any(|(x, y)| x.pred != y.pred || x.args.len() != y.args.len())
    {
        return false;
    }
    let positional = |c: &Clause| -> Vec<Var> {
        c.head_args()
            .iter()
            .chain(c.body.iter().flat_map(|at| at.args.iter()))
            .cloned()
            .collect()
    };
    let (pa, pb) = (positional(a), positional(b));
    let slots: Vec<Var> = (0..pa.len())
        .map(|i| Var::new(format!("#s{}", i)))
        .collect();
    let pinned = |c: &Clause, args: &[Var]| -> Polyhedron {
        let mut cs = c.constraints.clone();
        for (s, v) in slots.iter().zip(args) {
            cs.push(Constraint::eq(
                &LinExpr::var(s.clone()),
                &LinExpr::var(v.clone()),
            ));
        }
        Polyhedron::over(slots.clone(), cs).project(&slots)
    };
    pinned(a, &pa).equivalent(&pinned(b, &pb))
}

/// Multiset equality of clause lists under `same_up_to_renaming`.
pub fn same_clauses(got: &[Clause], want: &[Clause]) -> bool {
    if got.len() != want.len() {
        return false;
    }
    let mut used = BTreeSet::new();
    want.iter().all(|w| {
        let hit = (0..got.len()).find(|i| !used.contains(i) && same_up_to_renaming(&got[*i], w));
        hit.map(|i| used.insert(i)).is_some()
    })
}

pub fn verdict(n: u32, pass: bool, detail: &str) {
    println!(
        "criterion {:>2}: {} {}",
        n,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
}
