//! Recursive-descent parser for the CLP clause syntax.
//!
//! ```text
//! fib(A, B) :- A > 1, A2 = A - 2, fib(A2, B2), A1 = A - 1, fib(A1, B1), B = B1 + B2.
//! false :- A > 5, fib(A, B), B < A.
//! ```
//!
//! Printed indexed predicates (`fib(0)(A,B)`, `fib[0](A,B)`, `false(1)`) are
//! accepted too, as are constrained facts `p(A,B) :- [c1,c2].`

use std::collections::BTreeSet;

use num_bigint::BigInt;

use super::{fresh_var, Atom, Clause, DimIndex, Head, Pred, Program, ProgramError, FALSE};
use crate::linconstr::{Constraint, LinExpr, Rat, Var};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: non-linear arithmetic term")]
    NonLinear { line: usize, col: usize },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(BigInt),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Neck,
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
    Plus,
    Minus,
    Star,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (sl, sc) = (line, col);
        let take = |n: usize, tok: Tok, out: &mut Vec<Spanned>| {
            out.push(Spanned {
                tok,
                line: sl,
                col: sc,
            });
            n
        };
        let peek = chars.get(i + 1).copied();
        let n = match c {
            '\n' => {
                line += 1;
                col = 0;
                1
            }
            c if c.is_whitespace() => 1,
            '%' => {
                let mut j = i;
                while j < chars.len() && chars[j] != '\n' {
                    j += 1;
                }
                j - i
            }
            '(' => take(1, Tok::LParen, &mut out),
            ')' => take(1, Tok::RParen, &mut out),
            '[' => take(1, Tok::LBrack, &mut out),
            ']' => take(1, Tok::RBrack, &mut out),
            ',' => take(1, Tok::Comma, &mut out),
            '.' => take(1, Tok::Dot, &mut out),
            '+' => take(1, Tok::Plus, &mut out),
            '-' => take(1, Tok::Minus, &mut out),
            '*' => take(1, Tok::Star, &mut out),
            ':' if peek == Some('-') => take(2, Tok::Neck, &mut out),
            '=' if peek == Some('<') => take(2, Tok::Le, &mut out),
            '=' => take(1, Tok::Eq, &mut out),
            '<' if peek == Some('=') => take(2, Tok::Le, &mut out),
            '<' => take(1, Tok::Lt, &mut out),
            '>' if peek == Some('=') => take(2, Tok::Ge, &mut out),
            '>' => take(1, Tok::Gt, &mut out),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                take(j - i, Tok::Int(s.parse().expect("digits")), &mut out)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let tok = if c.is_ascii_uppercase() || c == '_' {
                    Tok::Var(s)
                } else {
                    Tok::Ident(s)
                };
                take(j - i, tok, &mut out)
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character {:?}", other),
                })
            }
        };
        i += n;
        col += n;
    }
    Ok(out)
}

/// An atom as written: arguments may be integer literals or repeat.
enum RawArg {
    Var(Var),
    Int(BigInt),
}

struct RawAtom {
    pred: Pred,
    args: Vec<RawArg>,
}

enum Item {
    Constraint(Constraint),
    Atom(RawAtom),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn location(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(s) => (s.line, s.col),
            None => (1, 1),
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.location();
        Err(ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(format!("expected {}", what))
        }
    }

    fn index_number(&mut self) -> PResult<u32> {
        match self.bump() {
            Some(Tok::Int(n)) => match u32::try_from(n) {
                Ok(d) => Ok(d),
                Err(_) => self.error("dimension index out of range"),
            },
            _ => self.error("expected dimension index"),
        }
    }

    /// `ident`, `ident(args)`, `ident(d)(args)`, `ident[d](args)`, `ident[d]`.
    fn atom(&mut self) -> PResult<RawAtom> {
        let name = match self.bump() {
            Some(Tok::Ident(s)) => s,
            _ => return self.error("expected predicate name"),
        };
        let mut index = None;
        if self.peek() == Some(&Tok::LBrack) {
            self.bump();
            index = Some(DimIndex::AtMost(self.index_number()?));
            self.expect(Tok::RBrack, "]")?;
        } else if self.peek() == Some(&Tok::LParen)
            && matches!(self.peek_at(1), Some(Tok::Int(_)))
            && self.peek_at(2) == Some(&Tok::RParen)
            && (self.peek_at(3) == Some(&Tok::LParen) || name == FALSE)
        {
            self.bump();
            index = Some(DimIndex::Exactly(self.index_number()?));
            self.bump();
        }
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                match self.bump() {
                    Some(Tok::Var(v)) => args.push(RawArg::Var(Var::new(v))),
                    Some(Tok::Int(n)) => args.push(RawArg::Int(n)),
                    Some(Tok::Minus) => match self.bump() {
                        Some(Tok::Int(n)) => args.push(RawArg::Int(-n)),
                        _ => return self.error("expected integer after '-'"),
                    },
                    _ => return self.error("expected variable or integer argument"),
                }
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "',' or ')'")?;
            }
        }
        Ok(RawAtom {
            pred: Pred { name, index },
            args,
        })
    }

    /// `[-] (INT | INT * VAR | VAR)`
    fn term(&mut self) -> PResult<LinExpr> {
        let negative = self.eat(&Tok::Minus);
        let e = match self.bump() {
            Some(Tok::Int(n)) => {
                let k = Rat::from_integer(n);
                if self.eat(&Tok::Star) {
                    match self.bump() {
                        Some(Tok::Var(v)) => LinExpr::term(Var::new(v), k),
                        _ => {
                            self.pos -= 1;
                            let (line, col) = self.location();
                            return Err(ParseError::NonLinear { line, col });
                        }
                    }
                } else {
                    LinExpr::constant(k)
                }
            }
            Some(Tok::Var(v)) => {
                if self.peek() == Some(&Tok::Star) {
                    let (line, col) = self.location();
                    return Err(ParseError::NonLinear { line, col });
                }
                LinExpr::var(Var::new(v))
            }
            _ => {
                self.pos -= 1;
                return self.error("expected arithmetic term");
            }
        };
        Ok(if negative { e.neg() } else { e })
    }

    fn linexpr(&mut self) -> PResult<LinExpr> {
        let mut e = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = e.add(&self.term()?);
            } else if self.eat(&Tok::Minus) {
                e = e.sub(&self.term()?);
            } else {
                return Ok(e);
            }
        }
    }

    /// Strict comparisons are tightened: variables range over the integers.
    fn constraint(&mut self) -> PResult<Constraint> {
        let lhs = self.linexpr()?;
        let rel = self.bump();
        let rhs = self.linexpr()?;
        Ok(match rel {
            Some(Tok::Eq) => Constraint::eq(&lhs, &rhs),
            Some(Tok::Le) => Constraint::le(&lhs, &rhs),
            Some(Tok::Lt) => Constraint::lt(&lhs, &rhs).tightened(),
            Some(Tok::Ge) => Constraint::ge(&lhs, &rhs),
            Some(Tok::Gt) => Constraint::gt(&lhs, &rhs).tightened(),
            _ => {
                self.pos -= 1;
                return self.error("expected relation (=, =<, <, >=, >)");
            }
        })
    }

    fn item(&mut self) -> PResult<Item> {
        match self.peek() {
            Some(Tok::Ident(_)) => Ok(Item::Atom(self.atom()?)),
            _ => Ok(Item::Constraint(self.constraint()?)),
        }
    }

    fn constraint_list(&mut self) -> PResult<Vec<Constraint>> {
        let mut out = Vec::new();
        if self.peek() == Some(&Tok::RBrack) {
            return Ok(out);
        }
        loop {
            out.push(self.constraint()?);
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    /// `head [:- items | :- [constraints]] .`
    fn clause(&mut self) -> PResult<(Option<RawAtom>, Vec<Item>)> {
        let head = self.atom()?;
        let head = if head.pred.name == FALSE && head.pred.index.is_none() {
            if !head.args.is_empty() {
                return self.error("plain false takes no arguments");
            }
            None
        } else {
            Some(head)
        };
        let mut items = Vec::new();
        if self.eat(&Tok::Neck) {
            if self.eat(&Tok::LBrack) {
                items.extend(self.constraint_list()?.into_iter().map(Item::Constraint));
                self.expect(Tok::RBrack, "]")?;
            } else {
                loop {
                    let item = self.item()?;
                    if let Item::Atom(a) = &item {
                        if a.pred.name == FALSE && a.pred.index.is_none() {
                            return self.error("plain false may not occur in a clause body");
                        }
                    }
                    items.push(item);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
        }
        self.expect(Tok::Dot, "'.' at end of clause")?;
        Ok((head, items))
    }
}

/// Turns a raw atom into one with distinct variable arguments, adding
/// equalities for literals and repeated variables.
fn distinct_args(raw: RawAtom, used: &mut BTreeSet<Var>, eqs: &mut Vec<Constraint>) -> Atom {
    let mut seen = BTreeSet::new();
    let mut args = Vec::with_capacity(raw.args.len());
    for a in raw.args {
        match a {
            RawArg::Var(v) if seen.insert(v.clone()) => args.push(v),
            RawArg::Var(v) => {
                let f = fresh_var(used);
                eqs.push(Constraint::eq(&LinExpr::var(f.clone()), &LinExpr::var(v)));
                seen.insert(f.clone());
                args.push(f);
            }
            RawArg::Int(n) => {
                let f = fresh_var(used);
                eqs.push(Constraint::eq(
                    &LinExpr::var(f.clone()),
                    &LinExpr::constant(Rat::from_integer(n)),
                ));
                seen.insert(f.clone());
                args.push(f);
            }
        }
    }
    Atom::new(raw.pred, args)
}

fn raw_vars(raw: &RawAtom) -> impl Iterator<Item = Var> + '_ {
    raw.args.iter().filter_map(|a| match a {
        RawArg::Var(v) => Some(v.clone()),
        RawArg::Int(_) => None,
    })
}

fn build_clause(head: Option<RawAtom>, items: Vec<Item>) -> Clause {
    let mut used: BTreeSet<Var> = BTreeSet::new();
    if let Some(h) = &head {
        used.extend(raw_vars(h));
    }
    for it in &items {
        match it {
            Item::Constraint(c) => used.extend(c.vars().cloned()),
            Item::Atom(a) => used.extend(raw_vars(a)),
        }
    }
    let mut constraints = Vec::new();
    let mut raw_body = Vec::new();
    for it in items {
        match it {
            Item::Constraint(c) => constraints.push(c),
            Item::Atom(a) => raw_body.push(a),
        }
    }
    let head = match head {
        None => Head::False,
        Some(h) => Head::Atom(distinct_args(h, &mut used, &mut constraints)),
    };
    let body = raw_body
        .into_iter()
        .map(|a| distinct_args(a, &mut used, &mut constraints))
        .collect();
    Clause {
        id: 0,
        head,
        constraints,
        body,
    }
}

/// Parses and normalizes a program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let mut program = Program::default();
    while !p.at_end() {
        let (head, items) = p.clause()?;
        program.push(build_clause(head, items))?;
    }
    Ok(program)
}

/// Parses `c1, c2, ...` (optionally bracketed).
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>, ParseError> {
    let mut p = Parser::new(text)?;
    let bracketed = p.eat(&Tok::LBrack);
    let cs = p.constraint_list()?;
    if bracketed {
        p.expect(Tok::RBrack, "]")?;
    }
    if !p.at_end() {
        return p.error("trailing input after constraints");
    }
    Ok(cs)
}
