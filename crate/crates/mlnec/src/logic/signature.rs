//! Sorted vocabulary: sorts with finite domains, function symbols for event
//! and fluent constructors, and role-tagged predicates.

use std::collections::BTreeMap;

use super::term::Term;
use super::LogicError;

pub const TIME_SORT: &str = "time";
pub const EVENT_SORT: &str = "event";
pub const FLUENT_SORT: &str = "fluent";

pub const HAPPENS: &str = "happens";
pub const HOLDS_AT: &str = "holdsAt";
pub const INITIATED_AT: &str = "initiatedAt";
pub const TERMINATED_AT: &str = "terminatedAt";

/// How a predicate participates in inference: evidence predicates are fully
/// observed and closed-world, the query predicate (`holdsAt`) is inferred,
/// auxiliary predicates exist only before compilation eliminates them.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PredicateRole {
    Evidence,
    Query,
    Auxiliary,
}

/// Domain of a sort: an ordered list of named constants, or the integer
/// range `0..=max` for the time sort.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SortDef {
    Constants(Vec<String>),
    Time { max: u32 },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FunctionDecl {
    pub args: Vec<String>,
    pub result: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PredicateDecl {
    pub args: Vec<String>,
    pub role: PredicateRole,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Signature {
    sorts: BTreeMap<String, SortDef>,
    functions: BTreeMap<String, FunctionDecl>,
    predicates: BTreeMap<String, PredicateDecl>,
}

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    pub fn declare_sort(&mut self, name: &str, constants: Vec<String>) -> Result<(), LogicError> {
        if self.sorts.contains_key(name) {
            return Err(LogicError::DuplicateSymbol(name.to_string()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &constants {
            if !seen.insert(c.clone()) {
                return Err(LogicError::DuplicateConstant { sort: name.to_string(), constant: c.clone() });
            }
            if self.sort_of_constant(c).is_ok() {
                return Err(LogicError::DuplicateConstant { sort: name.to_string(), constant: c.clone() });
            }
        }
        self.sorts.insert(name.to_string(), SortDef::Constants(constants));
        Ok(())
    }

    /// Declares (or re-ranges) the time sort as `0..=max`.
    pub fn declare_time(&mut self, max: u32) {
        self.sorts.insert(TIME_SORT.to_string(), SortDef::Time { max });
    }

    /// A copy of this signature with the time range replaced, used when a
    /// narrative horizon overrides the declared range.
    pub fn with_time_max(&self, max: u32) -> Signature {
        let mut sig = self.clone();
        sig.declare_time(max);
        sig
    }

    pub fn declare_function(&mut self, name: &str, args: Vec<String>, result: &str) -> Result<(), LogicError> {
        if self.functions.contains_key(name) || self.predicates.contains_key(name) {
            return Err(LogicError::DuplicateSymbol(name.to_string()));
        }
        for s in args.iter().chain(std::iter::once(&result.to_string())) {
            if !self.sorts.contains_key(s) && s != TIME_SORT {
                return Err(LogicError::UnknownSort(s.clone()));
            }
        }
        // constructors may not take constructed sorts as arguments, which
        // keeps domain enumeration finite and one level deep
        for s in &args {
            if self.is_constructed(s) || s == result {
                return Err(LogicError::NestedConstructor { function: name.to_string(), sort: s.clone() });
            }
        }
        self.functions.insert(name.to_string(), FunctionDecl { args, result: result.to_string() });
        Ok(())
    }

    pub fn declare_predicate(&mut self, name: &str, args: Vec<String>, role: PredicateRole) -> Result<(), LogicError> {
        if self.predicates.contains_key(name) || self.functions.contains_key(name) {
            return Err(LogicError::DuplicateSymbol(name.to_string()));
        }
        for s in &args {
            if !self.sorts.contains_key(s) && s != TIME_SORT {
                return Err(LogicError::UnknownSort(s.clone()));
            }
        }
        self.predicates.insert(name.to_string(), PredicateDecl { args, role });
        Ok(())
    }

    pub fn sort(&self, name: &str) -> Option<&SortDef> {
        self.sorts.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.get(name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.get(name)
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&String, &PredicateDecl)> {
        self.predicates.iter()
    }

    pub fn functions(&self) -> impl Iterator<Item = (&String, &FunctionDecl)> {
        self.functions.iter()
    }

    pub fn sorts(&self) -> impl Iterator<Item = (&String, &SortDef)> {
        self.sorts.iter()
    }

    pub fn role(&self, pred: &str) -> Option<PredicateRole> {
        self.predicates.get(pred).map(|p| p.role)
    }

    pub fn time_max(&self) -> Result<u32, LogicError> {
        match self.sorts.get(TIME_SORT) {
            Some(SortDef::Time { max }) => Ok(*max),
            _ => Err(LogicError::UnknownSort(TIME_SORT.to_string())),
        }
    }

    /// True if some function symbol produces values of `sort`.
    pub fn is_constructed(&self, sort: &str) -> bool {
        self.functions.values().any(|f| f.result == sort)
    }

    fn sort_of_constant(&self, constant: &str) -> Result<String, LogicError> {
        for (name, def) in &self.sorts {
            if let SortDef::Constants(cs) = def {
                if cs.iter().any(|c| c == constant) {
                    return Ok(name.clone());
                }
            }
        }
        Err(LogicError::UnknownSymbol(constant.to_string()))
    }

    /// The sort of a ground or variable term.
    pub fn sort_of_term(&self, term: &Term) -> Result<String, LogicError> {
        match term {
            Term::Var(v) => Ok(v.sort.clone()),
            Term::Const(c) => self.sort_of_constant(c),
            Term::Time(_) => Ok(TIME_SORT.to_string()),
            Term::Succ(_) => Ok(TIME_SORT.to_string()),
            Term::App(func, _) => {
                let decl = self
                    .functions
                    .get(func)
                    .ok_or_else(|| LogicError::UnknownSymbol(func.clone()))?;
                Ok(decl.result.clone())
            }
        }
    }

    /// Enumerates the ground terms of a sort in a fixed order: declared
    /// constants first, then constructor applications over their argument
    /// domains. The time sort enumerates `0..=max`.
    pub fn domain(&self, sort: &str) -> Result<Vec<Term>, LogicError> {
        let mut out = Vec::new();
        match self.sorts.get(sort) {
            Some(SortDef::Time { max }) => {
                for t in 0..=*max {
                    out.push(Term::Time(t));
                }
                return Ok(out);
            }
            Some(SortDef::Constants(cs)) => {
                for c in cs {
                    out.push(Term::Const(c.clone()));
                }
            }
            None => return Err(LogicError::UnknownSort(sort.to_string())),
        }
        for (name, decl) in &self.functions {
            if decl.result != sort {
                continue;
            }
            let arg_domains = decl
                .args
                .iter()
                .map(|s| self.domain(s))
                .collect::<Result<Vec<_>, _>>()?;
            for combo in cartesian(&arg_domains) {
                out.push(Term::App(name.clone(), combo));
            }
        }
        Ok(out)
    }

    /// Checks an atom against the declared predicate: known symbol, matching
    /// arity, and argument sorts in declaration positions.
    pub fn check_atom(&self, atom: &super::term::Atom) -> Result<(), LogicError> {
        let decl = self
            .predicates
            .get(&atom.pred)
            .ok_or_else(|| LogicError::UnknownSymbol(atom.pred.clone()))?;
        if decl.args.len() != atom.args.len() {
            return Err(LogicError::ArityMismatch {
                symbol: atom.pred.clone(),
                expected: decl.args.len(),
                found: atom.args.len(),
            });
        }
        for (arg, expected) in atom.args.iter().zip(&decl.args) {
            let found = self.sort_of_term(arg)?;
            if &found != expected {
                return Err(LogicError::SortMismatch {
                    var: arg.to_string(),
                    expected: expected.clone(),
                    found,
                });
            }
            if let Term::App(func, args) = arg {
                let fdecl = self.functions.get(func).ok_or_else(|| LogicError::UnknownSymbol(func.clone()))?;
                if fdecl.args.len() != args.len() {
                    return Err(LogicError::ArityMismatch {
                        symbol: func.clone(),
                        expected: fdecl.args.len(),
                        found: args.len(),
                    });
                }
                for (a, s) in args.iter().zip(&fdecl.args) {
                    let found = self.sort_of_term(a)?;
                    if &found != s {
                        return Err(LogicError::SortMismatch {
                            var: a.to_string(),
                            expected: s.clone(),
                            found,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// All combinations picking one term from each domain, in row-major order.
pub fn cartesian(domains: &[Vec<Term>]) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for prefix in &out {
            for t in d {
                let mut row = prefix.clone();
                row.push(t.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}
