use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::One;

use super::expr::{rat, Constraint, LinExpr, Rat, Rel, Var};
use super::LinError;
use super::{fm, lp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
    Unknown,
}

/// A convex polyhedron in constraint form over an ordered list of dims.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    dims: Vec<Var>,
    constraints: Vec<Constraint>,
    feasibility: Feasibility,
}

impl PartialEq for Polyhedron {
    /// Syntactic equality of normalized forms; use [`Polyhedron::equivalent`]
    /// for semantic comparison.
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.constraints == other.constraints
    }
}

impl Polyhedron {
    pub fn universe(dims: Vec<Var>) -> Self {
        Polyhedron {
            dims,
            constraints: Vec::new(),
            feasibility: Feasibility::Feasible,
        }
    }

    pub fn empty(dims: Vec<Var>) -> Self {
        Polyhedron {
            dims,
            constraints: vec![Constraint::contradiction()],
            feasibility: Feasibility::Infeasible,
        }
    }

    /// Builds and normalizes; every constraint variable must be a dim.
    pub fn new(dims: Vec<Var>, constraints: Vec<Constraint>) -> Result<Self, LinError> {
        let known: BTreeSet<&Var> = dims.iter().collect();
        for c in &constraints {
            if let Some(v) = c.vars().find(|v| !known.contains(v)) {
                return Err(LinError::UnknownVariable(v.clone()));
            }
        }
        Ok(Self::from_parts(dims, constraints))
    }

    /// Like [`Polyhedron::new`] but adds any missing variables as dims.
    pub fn over(mut dims: Vec<Var>, constraints: Vec<Constraint>) -> Self {
        let known: BTreeSet<Var> = dims.iter().cloned().collect();
        let extra: BTreeSet<Var> = super::expr::vars_of(&constraints)
            .into_iter()
            .filter(|v| !known.contains(v))
            .collect();
        dims.extend(extra);
        Self::from_parts(dims, constraints)
    }

    fn from_parts(dims: Vec<Var>, constraints: Vec<Constraint>) -> Self {
        Polyhedron {
            dims,
            constraints,
            feasibility: Feasibility::Unknown,
        }
        .normalize()
    }

    /// Canonical form: contradictions collapse to the marker, equalities
    /// come first and the feasibility flag is settled.
    pub fn normalize(self) -> Self {
        if self.feasibility != Feasibility::Unknown {
            return self;
        }
        let Some(cs) = fm::canonicalize(self.constraints, false) else {
            return Self::empty(self.dims);
        };
        if !fm::satisfiable(&cs, false) {
            return Self::empty(self.dims);
        }
        Polyhedron {
            dims: self.dims,
            constraints: order(cs),
            feasibility: Feasibility::Feasible,
        }
    }

    pub fn dims(&self) -> &[Var] {
        &self.dims
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn feasibility(&self) -> Feasibility {
        self.feasibility
    }

    /// Rational satisfiability, decided exactly.
    pub fn sat(&self) -> bool {
        match self.feasibility {
            Feasibility::Feasible => true,
            Feasibility::Infeasible => false,
            Feasibility::Unknown => fm::satisfiable(&self.constraints, false),
        }
    }

    /// Satisfiability over the integers, approximated from above by
    /// tightening after every elimination step. `false` means no integer point.
    pub fn sat_integral(&self) -> bool {
        self.sat() && fm::satisfiable(&self.constraints, true)
    }

    pub fn is_universe(&self) -> bool {
        self.sat() && self.constraints.is_empty()
    }

    fn check_dims_within(&self, other: &Polyhedron) -> Result<(), LinError> {
        let mine: BTreeSet<&Var> = self.dims.iter().collect();
        match other.dims.iter().find(|v| !mine.contains(v)) {
            Some(v) => Err(LinError::DimensionMismatch(format!(
                "{} is not a dimension of the entailing polyhedron",
                v
            ))),
            None => Ok(()),
        }
    }

    fn entails_atom(&self, c: &Constraint, integral: bool) -> bool {
        let negs = if integral {
            c.integral_negations()
        } else {
            c.negations()
        };
        negs.into_iter().all(|n| {
            let mut cs = self.constraints.clone();
            cs.push(n);
            !fm::satisfiable(&cs, integral)
        })
    }

    /// Every rational point of `self` satisfies `other`.
    pub fn entails(&self, other: &Polyhedron) -> Result<bool, LinError> {
        self.check_dims_within(other)?;
        Ok(self.entails_unchecked(other, false))
    }

    /// Every integer point of `self` satisfies `other`.
    pub fn entails_integral(&self, other: &Polyhedron) -> Result<bool, LinError> {
        self.check_dims_within(other)?;
        Ok(self.entails_unchecked(other, true))
    }

    fn entails_unchecked(&self, other: &Polyhedron, integral: bool) -> bool {
        if !self.sat() || (integral && !self.sat_integral()) {
            return true;
        }
        if !other.sat() {
            return false;
        }
        other
            .constraints
            .iter()
            .all(|c| self.entails_atom(c, integral))
    }

    pub fn entails_constraint(&self, c: &Constraint) -> bool {
        !self.sat() || self.entails_atom(c, false)
    }

    pub fn entails_constraint_integral(&self, c: &Constraint) -> bool {
        !self.sat_integral() || self.entails_atom(c, true)
    }

    pub fn equivalent(&self, other: &Polyhedron) -> bool {
        self.entails_unchecked(other, false) && other.entails_unchecked(self, false)
    }

    pub fn equivalent_integral(&self, other: &Polyhedron) -> bool {
        self.entails_unchecked(other, true) && other.entails_unchecked(self, true)
    }

    /// Conjunction; dims are the union, in order of first occurrence.
    pub fn meet(&self, other: &Polyhedron) -> Polyhedron {
        let mut dims = self.dims.clone();
        for d in &other.dims {
            if !dims.contains(d) {
                dims.push(d.clone());
            }
        }
        let mut cs = self.constraints.clone();
        cs.extend(other.constraints.iter().cloned());
        Self::from_parts(dims, cs)
    }

    pub fn add_constraints(&self, extra: impl IntoIterator<Item = Constraint>) -> Polyhedron {
        let mut cs = self.constraints.clone();
        cs.extend(extra);
        Self::over(self.dims.clone(), cs)
    }

    /// Existential projection onto `keep` (exact over the rationals).
    pub fn project(&self, keep: &[Var]) -> Polyhedron {
        if !self.sat() {
            return Self::empty(keep.to_vec());
        }
        let keep_set: BTreeSet<&Var> = keep.iter().collect();
        let elim: BTreeSet<Var> = self
            .dims
            .iter()
            .chain(super::expr::vars_of(&self.constraints).iter())
            .filter(|v| !keep_set.contains(v))
            .cloned()
            .collect();
        match fm::eliminate(self.constraints.clone(), &elim, false) {
            None => Self::empty(keep.to_vec()),
            Some(cs) => Self::from_parts(keep.to_vec(), cs),
        }
    }

    /// Projection that tightens after every elimination step. Keeps every
    /// integer point of the exact projection; may drop rational ones.
    pub fn project_integral(&self, keep: &[Var]) -> Polyhedron {
        let keep_set: BTreeSet<&Var> = keep.iter().collect();
        let elim: BTreeSet<Var> = self
            .dims
            .iter()
            .chain(super::expr::vars_of(&self.constraints).iter())
            .filter(|v| !keep_set.contains(v))
            .cloned()
            .collect();
        match fm::eliminate(self.constraints.clone(), &elim, true) {
            None => Self::empty(keep.to_vec()),
            Some(cs) => Self::from_parts(keep.to_vec(), cs),
        }
    }

    /// Integer tightening of every atom; sound when all dims are integral.
    pub fn tighten(&self) -> Polyhedron {
        if !self.sat() {
            return self.clone();
        }
        let cs = self.constraints.iter().map(Constraint::tightened).collect();
        Self::from_parts(self.dims.clone(), cs)
    }

    /// Removes atoms entailed by the remaining ones, in canonical order.
    pub fn simplify(&self) -> Polyhedron {
        if !self.sat() {
            return Self::empty(self.dims.clone());
        }
        if self.constraints.iter().all(|c| c.rel != Rel::Lt) {
            let kept = lp::without_redundant(self.constraints.clone());
            return Polyhedron {
                dims: self.dims.clone(),
                constraints: order(kept),
                feasibility: Feasibility::Feasible,
            };
        }
        let mut kept: Vec<Constraint> = self.constraints.clone();
        let mut i = 0;
        while i < kept.len() {
            let candidate = kept[i].clone();
            let rest: Vec<Constraint> = kept
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, c)| c.clone())
                .collect();
            let rest_poly = Polyhedron {
                dims: self.dims.clone(),
                constraints: rest.clone(),
                feasibility: Feasibility::Feasible,
            };
            if rest_poly.entails_atom(&candidate, false) {
                kept = rest;
            } else {
                i += 1;
            }
        }
        Polyhedron {
            dims: self.dims.clone(),
            constraints: order(kept),
            feasibility: Feasibility::Feasible,
        }
    }

    /// Closed convex hull, via the lifted encoding with scaled copies.
    pub fn hull(&self, other: &Polyhedron) -> Result<Polyhedron, LinError> {
        if self.dims != other.dims {
            return Err(LinError::DimensionMismatch(format!(
                "hull over [{}] and [{}]",
                join(&self.dims),
                join(&other.dims)
            )));
        }
        if !self.sat() {
            return Ok(other.clone());
        }
        if !other.sat() {
            return Ok(self.clone());
        }
        // x = y + z, sigma + tau = 1, sigma, tau >= 0,
        // A1 y <= sigma b1, A2 z <= tau b2; substitute z = x - y, tau = 1 - sigma.
        let sigma = Var::new("#sigma");
        let copy: BTreeMap<Var, Var> = self
            .dims
            .iter()
            .map(|d| (d.clone(), Var::new(format!("#y_{}", d))))
            .collect();
        let mut cs = Vec::new();
        for c in &self.constraints {
            let mut e = c.expr.rename(&copy);
            e.add_constant(&-c.expr.constant_term().clone());
            e.add_term(sigma.clone(), c.expr.constant_term().clone());
            cs.push(Constraint::new(e, c.rel));
        }
        let tau = LinExpr::constant(Rat::one()).sub(&LinExpr::var(sigma.clone()));
        for c in &other.constraints {
            let mut e = c.expr.clone();
            for d in &self.dims {
                e = e.substitute(
                    d,
                    &LinExpr::var(d.clone()).sub(&LinExpr::var(copy[d].clone())),
                );
            }
            e.add_constant(&-c.expr.constant_term().clone());
            e = e.add(&tau.scale(c.expr.constant_term()));
            cs.push(Constraint::new(e, c.rel));
        }
        cs.push(Constraint::le(
            &LinExpr::zero(),
            &LinExpr::var(sigma.clone()),
        ));
        cs.push(Constraint::le(
            &LinExpr::var(sigma.clone()),
            &LinExpr::constant(rat(1)),
        ));
        let mut elim: BTreeSet<Var> = copy.values().cloned().collect();
        elim.insert(sigma);
        // closure: strict atoms only come from strict inputs; relax them
        let cs: Vec<Constraint> = cs
            .into_iter()
            .map(|c| {
                if c.rel == Rel::Lt {
                    Constraint::new(c.expr, Rel::Le)
                } else {
                    c
                }
            })
            .collect();
        let projected = fm::eliminate(cs, &elim, false).expect("hull of feasible inputs");
        Ok(Self::from_parts(self.dims.clone(), projected).simplify())
    }

    /// Standard widening: the atoms of `self` (equalities split into two
    /// inequalities) that `other` entails.
    pub fn widen(&self, other: &Polyhedron) -> Polyhedron {
        self.widen_with(other, false)
    }

    pub(crate) fn widen_with(&self, other: &Polyhedron, integral: bool) -> Polyhedron {
        if !self.sat() {
            return other.clone();
        }
        if !other.sat() {
            return self.clone();
        }
        let kept: Vec<Constraint> = self
            .constraints
            .iter()
            .flat_map(Constraint::as_inequalities)
            .filter(|c| other.entails_atom(c, integral))
            .collect();
        Self::from_parts(self.dims.clone(), kept)
    }

    /// The atoms of `self` as inequalities, followed by the bounds on single
    /// dims it implies.
    fn atoms_with_bounds(&self) -> Vec<Constraint> {
        let mut own: Vec<Constraint> = self
            .constraints
            .iter()
            .flat_map(Constraint::as_inequalities)
            .collect();
        for d in &self.dims {
            for b in self
                .project(std::slice::from_ref(d))
                .constraints
                .iter()
                .flat_map(Constraint::as_inequalities)
            {
                if !own.contains(&b) {
                    own.push(b);
                }
            }
        }
        own
    }

    /// Standard widening of `self` with its implied single-dim bounds made
    /// explicit.
    pub fn widen_bounded(&self, other: &Polyhedron, integral: bool) -> Polyhedron {
        if !self.sat() || !other.sat() {
            return self.widen_with(other, integral);
        }
        let explicit = Polyhedron {
            dims: self.dims.clone(),
            constraints: self.atoms_with_bounds(),
            feasibility: Feasibility::Feasible,
        };
        explicit.widen_with(other, integral)
    }

    /// Widening after enriching `self` with the atoms of `other` that are
    /// mutually redundant with one of its own atoms: `self` entails them and
    /// swapping them in for that atom leaves `self` unchanged. Relations that
    /// hold on both iterates then survive even when `self` did not state
    /// them (a point, say). The bounds of single dims implied by `self` are
    /// added as well, so an implied bound is not lost with the atoms that
    /// implied it.
    pub fn widen_enriched(&self, other: &Polyhedron, integral: bool) -> Polyhedron {
        if !self.sat() || !other.sat() {
            return self.widen_with(other, integral);
        }
        let own = self.atoms_with_bounds();
        let extra: Vec<Constraint> = other
            .constraints
            .iter()
            .flat_map(Constraint::as_inequalities)
            .filter(|g| !own.contains(g) && self.entails_atom(g, integral))
            .filter(|g| {
                (0..own.len()).any(|i| {
                    let mut swapped: Vec<Constraint> = own
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, c)| c.clone())
                        .collect();
                    swapped.push((*g).clone());
                    let p = Polyhedron {
                        dims: self.dims.clone(),
                        constraints: swapped,
                        feasibility: Feasibility::Feasible,
                    };
                    p.entails_atom(&own[i], integral)
                })
            })
            .collect();
        let enriched = Polyhedron {
            dims: self.dims.clone(),
            constraints: own.into_iter().chain(extra).collect(),
            feasibility: Feasibility::Feasible,
        };
        enriched.widen_with(other, integral)
    }

    /// Simultaneous renaming of dims and constraint variables.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Polyhedron {
        let dims = self
            .dims
            .iter()
            .map(|d| map.get(d).cloned().unwrap_or_else(|| d.clone()))
            .collect();
        if !self.sat() {
            return Self::empty(dims);
        }
        Polyhedron {
            dims,
            constraints: order(self.constraints.iter().map(|c| c.rename(map)).collect()),
            feasibility: self.feasibility,
        }
    }

    /// Same constraints over a different dim list (must cover the variables).
    pub fn with_dims(&self, dims: Vec<Var>) -> Result<Polyhedron, LinError> {
        if !self.sat() {
            return Ok(Self::empty(dims));
        }
        Self::new(dims, self.constraints.clone())
    }

    pub fn contains_point(&self, point: &BTreeMap<Var, Rat>) -> bool {
        self.sat()
            && self
                .constraints
                .iter()
                .all(|c| c.holds_at(point).unwrap_or(false))
    }
}

fn order(mut cs: Vec<Constraint>) -> Vec<Constraint> {
    cs.sort_by_key(|c| c.rel != Rel::Eq);
    cs
}

fn join(vs: &[Var]) -> String {
    vs.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.constraints.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "]")
    }
}
