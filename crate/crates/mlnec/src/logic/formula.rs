//! Quantifier-free formula trees. Universal closure over the free variables
//! is implicit everywhere; the `Exists` variant only exists so that the
//! clausal converter can reject it explicitly.

use std::collections::BTreeSet;
use std::fmt;

use super::signature::Signature;
use super::term::{Atom, Binding, Var};
use super::LogicError;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(Vec<Var>, Box<Formula>),
}

impl Formula {
    pub fn atom(atom: Atom) -> Formula {
        Formula::Atom(atom)
    }

    /// Negation with constant folding.
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Conjunction with unit and annihilator folding.
    pub fn and(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (Formula::True, x) | (x, Formula::True) => x,
            (a, b) => Formula::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (Formula::False, x) | (x, Formula::False) => x,
            (a, b) => Formula::Or(Box::new(a), Box::new(b)),
        }
    }

    pub fn implies(body: Formula, head: Formula) -> Formula {
        Formula::Implies(Box::new(body), Box::new(head))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Right-folded conjunction of `fs`; the empty conjunction is `True`.
    pub fn conjoin(fs: Vec<Formula>) -> Formula {
        let mut out = Formula::True;
        for f in fs.into_iter().rev() {
            out = Formula::and(f, out);
        }
        out
    }

    /// Right-folded disjunction of `fs`; the empty disjunction is `False`.
    pub fn disjoin(fs: Vec<Formula>) -> Formula {
        let mut out = Formula::False;
        for f in fs.into_iter().rev() {
            out = Formula::or(f, out);
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut BTreeSet::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut BTreeSet<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                let mut vars = BTreeSet::new();
                a.collect_vars(&mut vars);
                for v in vars {
                    if !bound.contains(&v) {
                        out.insert(v);
                    }
                }
            }
            Formula::Not(f) => f.collect_free_vars(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free_vars(bound, out);
                b.collect_free_vars(bound, out);
            }
            Formula::Exists(vs, f) => {
                let added: Vec<Var> = vs.iter().filter(|v| bound.insert((*v).clone())).cloned().collect();
                f.collect_free_vars(bound, out);
                for v in added {
                    bound.remove(&v);
                }
            }
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out.push(a),
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Exists(_, f) => f.collect_atoms(out),
        }
    }

    /// Applies a binding to every atom. Folding is not re-applied; the tree
    /// shape is preserved so substitution stays structure-compatible.
    pub fn substitute(&self, binding: &Binding, sig: &Signature) -> Result<Formula, LogicError> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::Atom(a.substitute(binding, sig)?),
            Formula::Not(f) => Formula::Not(Box::new(f.substitute(binding, sig)?)),
            Formula::And(a, b) => {
                Formula::And(Box::new(a.substitute(binding, sig)?), Box::new(b.substitute(binding, sig)?))
            }
            Formula::Or(a, b) => {
                Formula::Or(Box::new(a.substitute(binding, sig)?), Box::new(b.substitute(binding, sig)?))
            }
            Formula::Implies(a, b) => {
                Formula::Implies(Box::new(a.substitute(binding, sig)?), Box::new(b.substitute(binding, sig)?))
            }
            Formula::Iff(a, b) => {
                Formula::Iff(Box::new(a.substitute(binding, sig)?), Box::new(b.substitute(binding, sig)?))
            }
            Formula::Exists(vs, f) => {
                let mut inner = binding.clone();
                for v in vs {
                    inner.remove(&v.name);
                }
                Formula::Exists(vs.clone(), Box::new(f.substitute(&inner, sig)?))
            }
        })
    }

    /// Truth value under `model`, which assigns every ground atom.
    ///
    /// The formula must be ground and quantifier-free; violations are
    /// programming errors and panic.
    pub fn eval(&self, model: &dyn Fn(&Atom) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => {
                debug_assert!(a.is_ground(), "eval on unground atom {a}");
                model(a)
            }
            Formula::Not(f) => !f.eval(model),
            Formula::And(a, b) => a.eval(model) && b.eval(model),
            Formula::Or(a, b) => a.eval(model) || b.eval(model),
            Formula::Implies(a, b) => !a.eval(model) || b.eval(model),
            Formula::Iff(a, b) => a.eval(model) == b.eval(model),
            Formula::Exists(..) => panic!("eval on quantified formula"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print::formula(self, 0))
    }
}

mod print {
    use super::Formula;

    // precedence levels: iff 1, implies 2, or 3, and 4, not 5
    pub fn formula(f: &Formula, parent: u8) -> String {
        let (s, prec) = match f {
            Formula::True => ("true".to_string(), 6),
            Formula::False => ("false".to_string(), 6),
            Formula::Atom(a) => (a.to_string(), 6),
            Formula::Not(inner) => (format!("!{}", formula(inner, 5)), 5),
            Formula::And(a, b) => (format!("{} ^ {}", formula(a, 4), formula(b, 4)), 4),
            Formula::Or(a, b) => (format!("{} | {}", formula(a, 3), formula(b, 3)), 3),
            Formula::Implies(a, b) => (format!("{} => {}", formula(a, 3), formula(b, 2)), 2),
            Formula::Iff(a, b) => (format!("{} <=> {}", formula(a, 2), formula(b, 1)), 1),
            Formula::Exists(vs, inner) => {
                let names: Vec<&str> = vs.iter().map(|v| v.name.as_str()).collect();
                (format!("exists {} ({})", names.join(","), formula(inner, 0)), 5)
            }
        };
        if prec < parent {
            format!("({s})")
        } else {
            s
        }
    }
}
