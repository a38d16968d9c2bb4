//! Evidence-conditioned grounding. The compiled program is instantiated
//! over the narrative's horizon, every evidence literal is replaced by its
//! closed-world truth value, satisfied and tautological clauses are
//! dropped, and what remains is a Markov network over the unknown
//! `holdsAt` atoms alone.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::compile::CompiledKb;
use crate::kb::Narrative;
use crate::logic::signature::{FLUENT_SORT, HOLDS_AT};
use crate::logic::{groundings, to_cnf, Atom, Clause, LogicError, PredicateRole, Signature, Term, Weight};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GroundError {
    #[error("evidence leaves no way to satisfy `{clause}` from `{label}`")]
    Inconsistent { clause: String, label: String },
    #[error("{got} weights supplied where {expected} are needed")]
    WeightCount { expected: usize, got: usize },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Index of a query atom in the network's atom table.
pub type AtomId = usize;

/// A literal over a network atom. The derived order keeps complementary
/// literals adjacent in a sorted clause.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct GroundLit {
    pub atom: AtomId,
    pub positive: bool,
}

impl GroundLit {
    pub fn pos(atom: AtomId) -> GroundLit {
        GroundLit { atom, positive: true }
    }

    pub fn neg(atom: AtomId) -> GroundLit {
        GroundLit { atom, positive: false }
    }
}

/// Weight annotation of a ground clause. A soft clause scales its
/// formula's current weight by `coeff`: a formula whose conjunctive form
/// has n clauses contributes 1/n per clause, and duplicate groundings add
/// their coefficients up. Keeping the factor separate lets weight updates
/// reuse the network.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum ClauseWeight {
    Hard,
    Soft { coeff: f64 },
}

/// A ground clause: a disjunction of literals over network atoms.
#[derive(Clone, PartialEq, Debug)]
pub struct GroundClause {
    /// Sorted and duplicate-free.
    pub lits: Vec<GroundLit>,
    /// Index into the network's formula table.
    pub origin: usize,
    pub weight: ClauseWeight,
}

impl GroundClause {
    pub fn is_satisfied(&self, world: &[bool]) -> bool {
        self.lits.iter().any(|l| world[l.atom] == l.positive)
    }
}

/// Bookkeeping for one compiled formula.
#[derive(Clone, PartialEq, Debug)]
pub struct FormulaInfo {
    pub label: String,
    pub weight: Weight,
    /// Clauses in the formula's conjunctive form.
    pub cnf_clauses: usize,
    /// Ground instances produced before evidence substitution.
    pub groundings: usize,
    /// Distinct ground clauses surviving in the network.
    pub surviving: usize,
}

/// The evidence-conditioned ground Markov network.
#[derive(Clone, PartialEq, Debug)]
pub struct GroundNetwork {
    /// Every unknown `holdsAt` instance; index is the [`AtomId`].
    pub atoms: Vec<Atom>,
    pub atom_ids: BTreeMap<Atom, AtomId>,
    pub clauses: Vec<GroundClause>,
    pub formulas: Vec<FormulaInfo>,
    /// Query atoms the narrative fixes; excluded from `atoms`.
    pub clamped: BTreeMap<Atom, bool>,
}

impl GroundNetwork {
    /// Builds a network directly from its pieces, normalising clause
    /// literal order.
    pub fn from_parts(atoms: Vec<Atom>, formulas: Vec<FormulaInfo>, mut clauses: Vec<GroundClause>) -> GroundNetwork {
        let atom_ids = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        for c in &mut clauses {
            c.lits.sort();
            c.lits.dedup();
        }
        GroundNetwork { atoms, atom_ids, clauses, formulas, clamped: BTreeMap::new() }
    }

    /// The effective weight of a clause, `None` for hard ones.
    pub fn clause_weight(&self, clause: &GroundClause) -> Option<f64> {
        match clause.weight {
            ClauseWeight::Hard => None,
            ClauseWeight::Soft { coeff } => {
                let w = self.formulas[clause.origin].weight.soft_value().expect("soft clause from a soft formula");
                Some(coeff * w)
            }
        }
    }

    /// Sum of the effective weights of the soft clauses `world` satisfies.
    pub fn world_score(&self, world: &[bool]) -> f64 {
        debug_assert_eq!(world.len(), self.atoms.len());
        self.clauses
            .iter()
            .filter(|c| c.is_satisfied(world))
            .filter_map(|c| self.clause_weight(c))
            .sum()
    }

    /// True when `world` satisfies every hard clause.
    pub fn hard_ok(&self, world: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.weight != ClauseWeight::Hard || c.is_satisfied(world))
    }

    /// Satisfied-grounding counts of `world`, one entry per soft formula in
    /// weight-vector order. The dot product with the soft weights equals
    /// [`world_score`].
    ///
    /// [`world_score`]: GroundNetwork::world_score
    pub fn feature_counts(&self, world: &[bool]) -> Vec<f64> {
        let index = self.soft_index();
        let mut counts = vec![0.0; self.soft_weights().len()];
        for c in &self.clauses {
            if let ClauseWeight::Soft { coeff } = c.weight {
                if c.is_satisfied(world) {
                    counts[index[c.origin]] += coeff;
                }
            }
        }
        counts
    }

    /// Current soft formula weights, in formula order.
    pub fn soft_weights(&self) -> Vec<f64> {
        self.formulas.iter().filter_map(|f| f.weight.soft_value()).collect()
    }

    /// Replaces the soft formula weights without re-grounding.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<(), GroundError> {
        let soft: Vec<usize> = self
            .formulas
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.weight.is_hard())
            .map(|(i, _)| i)
            .collect();
        if soft.len() != weights.len() {
            return Err(GroundError::WeightCount { expected: soft.len(), got: weights.len() });
        }
        for (i, w) in soft.into_iter().zip(weights) {
            self.formulas[i].weight = Weight::Soft(*w);
        }
        Ok(())
    }

    /// Maps formula index to position in the soft weight vector.
    pub(crate) fn soft_index(&self) -> Vec<usize> {
        let mut index = vec![usize::MAX; self.formulas.len()];
        let mut next = 0;
        for (i, f) in self.formulas.iter().enumerate() {
            if !f.weight.is_hard() {
                index[i] = next;
                next += 1;
            }
        }
        index
    }

    pub fn stats(&self) -> NetworkStats {
        NetworkStats {
            atom_count: self.atoms.len(),
            clause_count: self.clauses.len(),
            per_formula: self.formulas.clone(),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct NetworkStats {
    pub atom_count: usize,
    pub clause_count: usize,
    pub per_formula: Vec<FormulaInfo>,
}

impl fmt::Display for NetworkStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "atoms: {}", self.atom_count)?;
        writeln!(f, "clauses: {}", self.clause_count)?;
        for info in &self.per_formula {
            writeln!(f, "{}: {} ground, {} kept", info.label, info.groundings, info.surviving)?;
        }
        Ok(())
    }
}

/// Grounds a compiled knowledge base against a narrative.
///
/// The narrative's horizon overrides any time range in the knowledge base.
/// Evidence predicates are closed-world; `holdsAt` atoms listed in the
/// narrative are clamped to their observed values and leave the network.
pub fn ground(ckb: &CompiledKb, narrative: &Narrative) -> Result<GroundNetwork, GroundError> {
    let sig = ckb.signature.with_time_max(narrative.horizon);

    let mut atoms = Vec::new();
    let mut atom_ids = BTreeMap::new();
    for fluent in sig.domain(FLUENT_SORT)? {
        for t in 0..=narrative.horizon {
            let atom = Atom::new(HOLDS_AT, vec![fluent.clone(), Term::Time(t)]);
            if narrative.clamped.contains_key(&atom) {
                continue;
            }
            atom_ids.insert(atom.clone(), atoms.len());
            atoms.push(atom);
        }
    }

    let per_formula: Vec<(FormulaInfo, BTreeMap<Vec<GroundLit>, ClauseWeight>)> = ckb
        .formulas
        .par_iter()
        .enumerate()
        .map(|(origin, cf)| ground_formula(origin, cf, &sig, narrative, &atom_ids))
        .collect::<Result<_, _>>()?;

    let mut formulas = Vec::with_capacity(per_formula.len());
    let mut clauses = Vec::new();
    for (origin, (mut info, dedup)) in per_formula.into_iter().enumerate() {
        info.surviving = dedup.len();
        formulas.push(info);
        for (lits, weight) in dedup {
            clauses.push(GroundClause { lits, origin, weight });
        }
    }
    Ok(GroundNetwork { atoms, atom_ids, clauses, formulas, clamped: narrative.clamped.clone() })
}

fn ground_formula(
    origin: usize,
    cf: &crate::compile::CompiledFormula,
    sig: &Signature,
    narrative: &Narrative,
    atom_ids: &BTreeMap<Atom, AtomId>,
) -> Result<(FormulaInfo, BTreeMap<Vec<GroundLit>, ClauseWeight>), GroundError> {
    // unit weight makes the instantiated clause carry its coefficient
    let normalized = if cf.weight.is_hard() { Weight::Hard } else { Weight::Soft(1.0) };
    let cnf = to_cnf(&cf.formula, normalized, origin)?;

    let mut count = 0usize;
    let mut dedup: BTreeMap<Vec<GroundLit>, ClauseWeight> = BTreeMap::new();
    for clause in &cnf {
        for instance in groundings(clause, sig)? {
            count += 1;
            if instance.is_tautology() {
                continue;
            }
            let lits = match simplify(&instance, narrative, sig, atom_ids) {
                None => continue, // satisfied by evidence
                Some(lits) => lits,
            };
            if lits.is_empty() {
                if instance.weight.is_hard() {
                    return Err(GroundError::Inconsistent {
                        clause: instance.to_string(),
                        label: cf.label.clone(),
                    });
                }
                // a soft clause no world satisfies adds the same zero everywhere
                continue;
            }
            let weight = match instance.weight {
                Weight::Hard => ClauseWeight::Hard,
                Weight::Soft(coeff) => ClauseWeight::Soft { coeff },
            };
            match dedup.entry(lits) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(weight);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    if let (ClauseWeight::Soft { coeff }, ClauseWeight::Soft { coeff: add }) =
                        (e.get_mut(), weight)
                    {
                        *coeff += add;
                    }
                }
            }
        }
    }
    let info = FormulaInfo {
        label: cf.label.clone(),
        weight: cf.weight,
        cnf_clauses: cnf.len(),
        groundings: count,
        surviving: 0,
    };
    Ok((info, dedup))
}

/// Replaces known literals by their truth values. `None` means the clause
/// is satisfied outright; otherwise the unknown residue is returned.
fn simplify(
    clause: &Clause,
    narrative: &Narrative,
    sig: &Signature,
    atom_ids: &BTreeMap<Atom, AtomId>,
) -> Option<Vec<GroundLit>> {
    let mut lits = Vec::with_capacity(clause.literals.len());
    for lit in &clause.literals {
        let truth = match sig.role(&lit.atom.pred) {
            Some(PredicateRole::Evidence) => Some(narrative.truth(&lit.atom)),
            Some(PredicateRole::Query) => narrative.clamped.get(&lit.atom).copied(),
            other => unreachable!("compiled clause mentions {other:?} predicate `{}`", lit.atom.pred),
        };
        match truth {
            Some(value) if value == lit.positive => return None,
            Some(_) => {} // a false literal drops out
            None => {
                let id = *atom_ids.get(&lit.atom).expect("unknown holdsAt instances are in the atom table");
                lits.push(GroundLit { atom: id, positive: lit.positive });
            }
        }
    }
    lits.sort();
    lits.dedup();
    Some(lits)
}
