//! Marginal and MAP inference over ground networks: an exact enumeration
//! engine used as an oracle and for small problems, an MC-SAT sampler for
//! the rest, and two weighted MaxSAT solvers for MAP queries.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::grounding::{AtomId, GroundNetwork};
use crate::logic::{Atom, Term};

mod exact;
mod maxsat;
mod mcsat;

pub use exact::{exact_marginals, exact_marginals_with_cap, posterior, Posterior, EXACT_CAP};
pub use maxsat::{map_exact, map_exact_with_cap, map_localsearch, WalkOptions, MAP_CAP};
pub use mcsat::{mcsat_marginals, mcsat_stats, McSatOptions, SampleStats};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum InferError {
    #[error("a connected component of {atoms} atoms exceeds the exact-inference cap of {cap}")]
    TooLarge { atoms: usize, cap: usize },
    #[error("the hard clauses cannot all be satisfied")]
    Unsatisfiable,
}

/// Per-atom probabilities, in the network's atom order.
#[derive(Clone, PartialEq, Debug)]
pub struct MarginalTable {
    pub atoms: Vec<Atom>,
    pub probabilities: Vec<f64>,
    /// Sample count behind the estimates, `None` for exact results.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl MarginalTable {
    pub fn probability(&self, atom: &Atom) -> Option<f64> {
        self.atoms.iter().position(|a| a == atom).map(|i| self.probabilities[i])
    }

    /// Result rows, with clamped atoms reported at probability 0 or 1.
    pub fn rows(&self, clamped: &BTreeMap<Atom, bool>) -> Vec<(String, u32, f64)> {
        let mut rows: Vec<(String, u32, f64)> = self
            .atoms
            .iter()
            .zip(&self.probabilities)
            .map(|(a, p)| row(a, *p))
            .collect();
        rows.extend(clamped.iter().map(|(a, v)| row(a, if *v { 1.0 } else { 0.0 })));
        rows
    }
}

/// A truth assignment over the network's atoms with its soft score.
#[derive(Clone, PartialEq, Debug)]
pub struct MapAssignment {
    pub atoms: Vec<Atom>,
    pub values: Vec<bool>,
    pub score: f64,
    /// False when a local search exhausted its budget without reaching a
    /// state that satisfies every hard clause.
    pub hard_feasible: bool,
}

impl MapAssignment {
    pub fn truth(&self, atom: &Atom) -> Option<bool> {
        self.atoms.iter().position(|a| a == atom).map(|i| self.values[i])
    }

    pub fn rows(&self, clamped: &BTreeMap<Atom, bool>) -> Vec<(String, u32, bool)> {
        let mut rows: Vec<(String, u32, bool)> = self
            .atoms
            .iter()
            .zip(&self.values)
            .map(|(a, v)| {
                let (fluent, time) = fluent_time(a);
                (fluent, time, *v)
            })
            .collect();
        rows.extend(clamped.iter().map(|(a, v)| {
            let (fluent, time) = fluent_time(a);
            (fluent, time, *v)
        }));
        rows
    }
}

fn row(atom: &Atom, p: f64) -> (String, u32, f64) {
    let (fluent, time) = fluent_time(atom);
    (fluent, time, p)
}

pub(crate) fn fluent_time(atom: &Atom) -> (String, u32) {
    match atom.args.as_slice() {
        [fluent, Term::Time(t)] => (fluent.to_string(), *t),
        _ => panic!("query atoms are holdsAt instances, got `{atom}`"),
    }
}

/// A maximal set of atoms linked through shared clauses. Clauses never
/// cross components, so inference factorises over them.
#[derive(Clone, Debug)]
pub(crate) struct Component {
    pub atoms: Vec<AtomId>,
    /// Indices into the network's clause list.
    pub clauses: Vec<usize>,
}

pub(crate) fn components(net: &GroundNetwork) -> Vec<Component> {
    let mut dsu = Dsu::new(net.atoms.len());
    for clause in &net.clauses {
        for pair in clause.lits.windows(2) {
            dsu.union(pair[0].atom, pair[1].atom);
        }
    }
    let mut by_root: BTreeMap<usize, Component> = BTreeMap::new();
    for atom in 0..net.atoms.len() {
        let root = dsu.find(atom);
        by_root.entry(root).or_insert_with(|| Component { atoms: Vec::new(), clauses: Vec::new() }).atoms.push(atom);
    }
    for (i, clause) in net.clauses.iter().enumerate() {
        if let Some(first) = clause.lits.first() {
            let root = dsu.find(first.atom);
            by_root.get_mut(&root).expect("clause atoms are in the table").clauses.push(i);
        }
    }
    by_root.into_values().collect()
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra.max(rb)] = ra.min(rb);
    }
}

/// A set of small integers with O(1) insert, remove, and random access.
pub(crate) struct IndexList {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl IndexList {
    pub fn new(universe: usize) -> IndexList {
        IndexList { items: Vec::new(), pos: vec![usize::MAX; universe] }
    }

    pub fn insert(&mut self, x: usize) {
        if self.pos[x] == usize::MAX {
            self.pos[x] = self.items.len();
            self.items.push(x);
        }
    }

    pub fn remove(&mut self, x: usize) {
        let p = self.pos[x];
        if p == usize::MAX {
            return;
        }
        let last = self.items.pop().expect("non-empty when pos is set");
        if p < self.items.len() {
            self.items[p] = last;
            self.pos[last] = p;
        }
        self.pos[x] = usize::MAX;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.items[i]
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Weight;

    #[test]
    fn components_split_on_shared_atoms() {
        let net = testnet::build(
            5,
            vec![
                (vec![(0, true), (1, false)], Weight::Soft(1.0)),
                (vec![(1, true), (2, true)], Weight::Hard),
                (vec![(3, false)], Weight::Soft(-0.5)),
            ],
        );
        let comps = components(&net);
        let atom_sets: Vec<Vec<usize>> = comps.iter().map(|c| c.atoms.clone()).collect();
        assert_eq!(atom_sets, vec![vec![0, 1, 2], vec![3], vec![4]]);
        assert_eq!(comps[0].clauses.len(), 2);
        assert_eq!(comps[1].clauses.len(), 1);
        assert!(comps[2].clauses.is_empty());
    }

    #[test]
    fn index_list_supports_removal_in_any_order() {
        let mut list = IndexList::new(4);
        for x in [2, 0, 3] {
            list.insert(x);
        }
        list.insert(2);
        assert_eq!(list.len(), 3);
        list.remove(0);
        list.remove(1);
        assert_eq!(list.len(), 2);
        let mut left: Vec<usize> = (0..list.len()).map(|i| list.get(i)).collect();
        left.sort();
        assert_eq!(left, vec![2, 3]);
    }
}
