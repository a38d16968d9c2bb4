//! Clausal form. A clause is a disjunction of signed atoms plus a weight,
//! where `Weight::Hard` marks an inviolable constraint.

use std::fmt;

use super::formula::Formula;
use super::term::Atom;
use super::LogicError;

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Weight {
    Hard,
    Soft(f64),
}

impl Weight {
    pub fn is_hard(&self) -> bool {
        matches!(self, Weight::Hard)
    }

    pub fn soft_value(&self) -> Option<f64> {
        match self {
            Weight::Hard => None,
            Weight::Soft(w) => Some(*w),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    // ordered by atom first so that complementary literals sit next to each
    // other in a sorted clause
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.atom.cmp(&other.atom).then(self.positive.cmp(&other.positive))
    }
}

impl Literal {
    pub fn pos(atom: Atom) -> Literal {
        Literal { positive: true, atom }
    }

    pub fn neg(atom: Atom) -> Literal {
        Literal { positive: false, atom }
    }

    pub fn complement(&self) -> Literal {
        Literal { positive: !self.positive, atom: self.atom.clone() }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "!{}", self.atom)
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Clause {
    /// Sorted and duplicate-free.
    pub literals: Vec<Literal>,
    pub weight: Weight,
    /// Index of the source formula this clause was compiled from.
    pub origin: usize,
}

impl Clause {
    pub fn new(mut literals: Vec<Literal>, weight: Weight, origin: usize) -> Clause {
        literals.sort();
        literals.dedup();
        Clause { literals, weight, origin }
    }

    /// True if the clause contains an atom both positively and negatively.
    pub fn is_tautology(&self) -> bool {
        // literals are sorted with the negative sign first, so a
        // complementary pair is adjacent
        self.literals
            .windows(2)
            .any(|w| w[0].atom == w[1].atom && w[0].positive != w[1].positive)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.weight {
            Weight::Hard => write!(f, "hard: ")?,
            Weight::Soft(w) => write!(f, "{w}: ")?,
        }
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

/// Converts a quantifier-free formula into an equivalent set of clauses.
///
/// A soft input weight is divided equally among the produced clauses, so a
/// formula whose conjunctive form has n clauses yields n clauses of weight
/// w/n. Tautological clauses are dropped before the division. Formulas with
/// existential quantifiers are rejected.
pub fn to_cnf(formula: &Formula, weight: Weight, origin: usize) -> Result<Vec<Clause>, LogicError> {
    let nnf = nnf(formula, true)?;
    let mut sets = clause_sets(&nnf);
    sets.retain(|s| !is_taut(s));
    sets.sort();
    sets.dedup();
    let weight = match weight {
        Weight::Hard => Weight::Hard,
        Weight::Soft(w) => Weight::Soft(if sets.is_empty() { w } else { w / sets.len() as f64 }),
    };
    Ok(sets
        .into_iter()
        .map(|s| Clause { literals: s, weight, origin })
        .collect())
}

/// Negation normal form; `polarity` is false under an odd number of
/// negations. Implication and equivalence are expanded away.
fn nnf(f: &Formula, polarity: bool) -> Result<Formula, LogicError> {
    Ok(match (f, polarity) {
        (Formula::True, true) | (Formula::False, false) => Formula::True,
        (Formula::True, false) | (Formula::False, true) => Formula::False,
        (Formula::Atom(a), true) => Formula::Atom(a.clone()),
        (Formula::Atom(a), false) => Formula::Not(Box::new(Formula::Atom(a.clone()))),
        (Formula::Not(inner), p) => nnf(inner, !p)?,
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            Formula::and(nnf(a, polarity)?, nnf(b, polarity)?)
        }
        (Formula::Or(a, b), true) | (Formula::And(a, b), false) => {
            Formula::or(nnf(a, polarity)?, nnf(b, polarity)?)
        }
        (Formula::Implies(a, b), p) => {
            if p {
                Formula::or(nnf(a, false)?, nnf(b, true)?)
            } else {
                Formula::and(nnf(a, true)?, nnf(b, false)?)
            }
        }
        (Formula::Iff(a, b), p) => {
            // a <=> b becomes (!a | b) ^ (!b | a); negated, (a | b) ^ (!a | !b)
            if p {
                Formula::and(
                    Formula::or(nnf(a, false)?, nnf(b, true)?),
                    Formula::or(nnf(b, false)?, nnf(a, true)?),
                )
            } else {
                Formula::and(
                    Formula::or(nnf(a, true)?, nnf(b, true)?),
                    Formula::or(nnf(a, false)?, nnf(b, false)?),
                )
            }
        }
        (Formula::Exists(..), _) => return Err(LogicError::ExistentialQuantifier),
    })
}

/// Distributes disjunction over conjunction. Input is in negation normal
/// form; output clauses are sorted literal vectors.
fn clause_sets(f: &Formula) -> Vec<Vec<Literal>> {
    match f {
        Formula::True => vec![],
        Formula::False => vec![vec![]],
        Formula::Atom(a) => vec![vec![Literal::pos(a.clone())]],
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(a) => vec![vec![Literal::neg(a.clone())]],
            _ => unreachable!("negation below nnf"),
        },
        Formula::And(a, b) => {
            let mut out = clause_sets(a);
            out.extend(clause_sets(b));
            out
        }
        Formula::Or(a, b) => {
            let left = clause_sets(a);
            let right = clause_sets(b);
            if left.is_empty() {
                return vec![];
            }
            if right.is_empty() {
                return vec![];
            }
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    let mut merged = l.clone();
                    merged.extend(r.iter().cloned());
                    merged.sort();
                    merged.dedup();
                    out.push(merged);
                }
            }
            out
        }
        Formula::Implies(..) | Formula::Iff(..) | Formula::Exists(..) => {
            unreachable!("connective below nnf")
        }
    }
}

fn is_taut(lits: &[Literal]) -> bool {
    lits.windows(2)
        .any(|w| w[0].atom == w[1].atom && w[0].positive != w[1].positive)
}
