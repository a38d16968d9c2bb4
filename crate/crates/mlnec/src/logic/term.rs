//! Terms and atoms over a sorted first-order vocabulary.

use std::fmt;

use super::signature::Signature;
use super::LogicError;
use std::collections::BTreeMap;

/// A sorted variable. Two variables are the same iff name and sort agree.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var {
    pub name: String,
    pub sort: String,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: impl Into<String>) -> Self {
        Var { name: name.into(), sort: sort.into() }
    }
}

/// First-order term. `Succ` is the successor construct on the time sort;
/// it only ever wraps a time-sorted variable or a time constant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Var),
    Const(String),
    Time(u32),
    Succ(Box<Term>),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>, sort: impl Into<String>) -> Self {
        Term::Var(Var::new(name, sort))
    }

    pub fn app(func: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(func.into(), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Time(_) => true,
            Term::Succ(t) => t.is_ground(),
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut std::collections::BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) | Term::Time(_) => {}
            Term::Succ(t) => t.collect_vars(out),
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{}", v.name),
            Term::Const(c) => write!(f, "{c}"),
            Term::Time(t) => write!(f, "{t}"),
            Term::Succ(t) => write!(f, "{t}+1"),
            Term::App(func, args) => {
                write!(f, "{func}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A map from variable names to (ground or variable) replacement terms.
pub type Binding = BTreeMap<String, Term>;

/// Applies `binding` to `term`. Unbound variables are left in place, so the
/// result may be partial. Successor terms over a bound time variable are
/// evaluated; stepping past the last time-point is reported as
/// [`LogicError::TimeBoundary`] so grounding can drop the instance.
pub fn substitute_term(term: &Term, binding: &Binding, sig: &Signature) -> Result<Term, LogicError> {
    match term {
        Term::Var(v) => match binding.get(&v.name) {
            None => Ok(term.clone()),
            Some(replacement) => {
                let found = sig.sort_of_term(replacement)?;
                if found != v.sort {
                    return Err(LogicError::SortMismatch {
                        var: v.name.clone(),
                        expected: v.sort.clone(),
                        found,
                    });
                }
                Ok(replacement.clone())
            }
        },
        Term::Const(_) | Term::Time(_) => Ok(term.clone()),
        Term::Succ(inner) => {
            let inner = substitute_term(inner, binding, sig)?;
            match inner {
                Term::Time(t) => {
                    if t >= sig.time_max()? {
                        Err(LogicError::TimeBoundary)
                    } else {
                        Ok(Term::Time(t + 1))
                    }
                }
                other => Ok(Term::Succ(Box::new(other))),
            }
        }
        Term::App(func, args) => {
            let args = args
                .iter()
                .map(|a| substitute_term(a, binding, sig))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::App(func.clone(), args))
        }
    }
}

/// An applied predicate. Ground atoms double as keys in evidence maps and
/// ground network tables, so the derive chain keeps them orderable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { pred: pred.into(), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut std::collections::BTreeSet<Var>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    pub fn substitute(&self, binding: &Binding, sig: &Signature) -> Result<Atom, LogicError> {
        let args = self
            .args
            .iter()
            .map(|a| substitute_term(a, binding, sig))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Atom { pred: self.pred.clone(), args })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}
