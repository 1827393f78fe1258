//! Surface syntax printing; `parse_program` reads every printed form back.

use std::fmt;

use super::{Atom, Clause, DimIndex, Head, Pred, FALSE};

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            None => write!(f, "{}", self.name),
            Some(DimIndex::Exactly(d)) => write!(f, "{}({})", self.name, d),
            Some(DimIndex::AtMost(d)) => write!(f, "{}[{}]", self.name, d),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred)?;
        if self.args.is_empty() {
            // `q(0)` alone would read back as q applied to the literal 0
            if matches!(self.pred.index, Some(DimIndex::Exactly(_))) && self.pred.name != FALSE {
                write!(f, "()")?;
            }
            return Ok(());
        }
        write!(f, "(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", a)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::False => write!(f, "{}", FALSE),
            Head::Atom(a) => write!(f, "{}", a),
        }
    }
}

/// `head :- c1, c2, b1, b2.` with constraints before body atoms.
impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        let items: Vec<String> = self
            .constraints
            .iter()
            .map(|c| c.to_string())
            .chain(self.body.iter().map(|a| a.to_string()))
            .collect();
        if !items.is_empty() {
            write!(f, " :- {}", items.join(", "))?;
        }
        write!(f, ".")
    }
}

#[cfg(test)]
mod tests {
    use crate::chc::parse_program;

    #[test]
    fn round_trip_is_identity_after_one_parse() {
        let src = "fib(A, B):- A>=0,  A=<1, B=A.
fib(A, B) :- A > 1, A2 = A - 2, fib(A2, B2),
           A1 = A - 1, fib(A1, B1), B = B1 + B2.
false:- A>5, fib(A,B), B<A.
p(0, X, X). q(1)() :- r[0]. false(2) :- q(1)().";
        let p = parse_program(src).unwrap();
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, again);
        assert_eq!(again.to_string(), p.to_string());
    }

    #[test]
    fn empty_program_prints_empty() {
        assert_eq!(parse_program("").unwrap().to_string(), "");
    }

    #[test]
    fn printed_forms() {
        let p = parse_program("false(0) :- A>5, B<A, fib(0)(A,B).\nfib[0](A,B) :- fib(0)(A,B).")
            .unwrap();
        assert_eq!(
            p.to_string(),
            "false(0) :- A>=6, A+ -B>=1, fib(0)(A,B).\nfib[0](A,B) :- fib(0)(A,B).\n"
        );
    }
}
