//! Grounding: enumerating the instances of a clause or formula over the
//! Cartesian product of its variables' domains.

use std::collections::BTreeSet;

use super::clause::Clause;
use super::formula::Formula;
use super::signature::Signature;
use super::term::{Binding, Var};
use super::LogicError;

/// Iterator over all bindings of `vars` to their domains, in lexicographic
/// order of the (name-sorted) variables.
pub struct BindingIter {
    vars: Vec<Var>,
    domains: Vec<Vec<super::term::Term>>,
    index: Vec<usize>,
    done: bool,
}

impl BindingIter {
    pub fn new(vars: BTreeSet<Var>, sig: &Signature) -> Result<BindingIter, LogicError> {
        let vars: Vec<Var> = vars.into_iter().collect();
        let domains = vars
            .iter()
            .map(|v| sig.domain(&v.sort))
            .collect::<Result<Vec<_>, _>>()?;
        let done = domains.iter().any(Vec::is_empty);
        let index = vec![0; vars.len()];
        Ok(BindingIter { vars, domains, index, done })
    }
}

impl Iterator for BindingIter {
    type Item = Binding;

    fn next(&mut self) -> Option<Binding> {
        if self.done {
            return None;
        }
        let mut binding = Binding::new();
        for (i, v) in self.vars.iter().enumerate() {
            binding.insert(v.name.clone(), self.domains[i][self.index[i]].clone());
        }
        // odometer step, least significant position last
        let mut pos = self.vars.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.index[pos] += 1;
            if self.index[pos] < self.domains[pos].len() {
                break;
            }
            self.index[pos] = 0;
        }
        Some(binding)
    }
}

/// Lazily enumerates the ground instances of `clause`. Instances whose time
/// successor steps past the horizon are dropped; nothing else is filtered,
/// so the instance count is the product of the domain sizes minus the
/// boundary drops.
pub fn groundings<'a>(
    clause: &'a Clause,
    sig: &'a Signature,
) -> Result<impl Iterator<Item = Clause> + 'a, LogicError> {
    let mut vars = BTreeSet::new();
    for lit in &clause.literals {
        lit.atom.collect_vars(&mut vars);
    }
    let bindings = BindingIter::new(vars, sig)?;
    Ok(bindings.filter_map(move |binding| instantiate(clause, &binding, sig)))
}

fn instantiate(clause: &Clause, binding: &Binding, sig: &Signature) -> Option<Clause> {
    let mut lits = Vec::with_capacity(clause.literals.len());
    for lit in &clause.literals {
        match lit.atom.substitute(binding, sig) {
            Ok(atom) => lits.push(super::clause::Literal { positive: lit.positive, atom }),
            Err(LogicError::TimeBoundary) => return None,
            Err(e) => panic!("grounding substitution failed: {e}"),
        }
    }
    Some(Clause::new(lits, clause.weight, clause.origin))
}

/// Ground instances of a formula, same boundary rule as clause grounding.
pub fn formula_groundings(formula: &Formula, sig: &Signature) -> Result<Vec<Formula>, LogicError> {
    let bindings = BindingIter::new(formula.free_vars(), sig)?;
    let mut out = Vec::new();
    for binding in bindings {
        match formula.substitute(&binding, sig) {
            Ok(f) => out.push(f),
            Err(LogicError::TimeBoundary) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
