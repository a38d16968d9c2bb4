//! Predicate completion and axiom specialisation.
//!
//! Initiation and termination rules say when a fluent starts or stops
//! holding, but on their own they leave `initiatedAt` and `terminatedAt`
//! open: a world could satisfy them vacuously by initiating fluents at
//! will. The compiler closes each definition into an equivalence (the
//! disjunction of all rule bodies, `false` when there are none), rewrites
//! the generic change and persistence axioms against those equivalences,
//! and eliminates the two auxiliary predicates entirely. What remains is a
//! program over `happens`, the evidence relations and `holdsAt` alone,
//! split into effect rules (Σ) and inertia rules (Σ′), ready for
//! grounding.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::kb::{KnowledgeBaseSource, Rule, RuleKind};
use crate::logic::signature::{FLUENT_SORT, HOLDS_AT, INITIATED_AT, TERMINATED_AT, TIME_SORT};
use crate::logic::{Atom, Binding, Formula, Signature, Term, Var, Weight};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CompileError {
    #[error("rule {index}: {msg}")]
    BadRule { index: usize, msg: String },
    #[error("{got} weights supplied where {expected} are needed")]
    WeightCount { expected: usize, got: usize },
    #[error("knowledge base is already compiled")]
    AlreadyCompiled,
}

impl CompileError {
    fn bad_rule(index: usize, msg: impl Into<String>) -> CompileError {
        CompileError::BadRule { index, msg: msg.into() }
    }
}

/// Which inertia rules stay hard under a given treatment of persistence.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InertiaVariant {
    /// All inertia rules are hard constraints.
    Hi,
    /// Persistence of holding fluents is soft, the rest stays hard.
    SiH,
    /// Persistence of non-holding fluents is soft, the rest stays hard.
    SiNegh,
    /// All inertia rules are soft, each with its own weight.
    Si,
    /// All inertia rules are soft and share one weight value.
    SiEq,
}

impl InertiaVariant {
    fn softens(self, group: FormulaGroup) -> bool {
        match self {
            InertiaVariant::Hi => false,
            InertiaVariant::SiH => group == FormulaGroup::InertiaHolds,
            InertiaVariant::SiNegh => group == FormulaGroup::InertiaNegHolds,
            InertiaVariant::Si | InertiaVariant::SiEq => group.is_inertia(),
        }
    }
}

impl FromStr for InertiaVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<InertiaVariant, String> {
        match s.to_ascii_lowercase().as_str() {
            "hi" => Ok(InertiaVariant::Hi),
            "si_h" | "sih" => Ok(InertiaVariant::SiH),
            "si_negh" | "sinegh" => Ok(InertiaVariant::SiNegh),
            "si" => Ok(InertiaVariant::Si),
            "si_eq" | "sieq" => Ok(InertiaVariant::SiEq),
            other => Err(format!("unknown inertia policy `{other}` (expected hi, si_h, si_negh, si or si_eq)")),
        }
    }
}

/// An inertia policy: the variant plus optional initial weights for the
/// rules it softens, in compiled order. `SiEq` takes a single value.
/// `None` means 1.0 everywhere.
#[derive(Clone, PartialEq, Debug)]
pub struct InertiaPolicy {
    pub variant: InertiaVariant,
    pub weights: Option<Vec<f64>>,
}

impl InertiaPolicy {
    pub fn new(variant: InertiaVariant) -> InertiaPolicy {
        InertiaPolicy { variant, weights: None }
    }

    pub fn with_weights(variant: InertiaVariant, weights: Vec<f64>) -> InertiaPolicy {
        InertiaPolicy { variant, weights: Some(weights) }
    }
}

/// Role of a compiled formula in the program.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum FormulaGroup {
    /// Effect rule from an initiation disjunct: the fluent holds next.
    Initiation,
    /// Effect rule from a termination disjunct: the fluent stops next.
    Termination,
    /// Persistence of a holding fluent.
    InertiaHolds,
    /// Persistence of a non-holding fluent.
    InertiaNegHolds,
    /// Source formula passed through untouched.
    Constraint,
}

impl FormulaGroup {
    pub fn in_sigma(self) -> bool {
        matches!(self, FormulaGroup::Initiation | FormulaGroup::Termination)
    }

    pub fn is_inertia(self) -> bool {
        matches!(self, FormulaGroup::InertiaHolds | FormulaGroup::InertiaNegHolds)
    }
}

/// One formula of the compiled program.
#[derive(Clone, PartialEq, Debug)]
pub struct CompiledFormula {
    pub label: String,
    pub group: FormulaGroup,
    pub weight: Weight,
    pub formula: Formula,
}

/// The compiled program. Formulas appear fluent by fluent (initiation
/// rules, termination rules, then the two inertia rules), followed by any
/// pass-through constraints; weight vectors index the soft ones in this
/// order.
#[derive(Clone, PartialEq, Debug)]
pub struct CompiledKb {
    pub signature: Signature,
    pub formulas: Vec<CompiledFormula>,
}

impl CompiledKb {
    pub fn sigma(&self) -> impl Iterator<Item = &CompiledFormula> {
        self.formulas.iter().filter(|f| f.group.in_sigma())
    }

    pub fn sigma_prime(&self) -> impl Iterator<Item = &CompiledFormula> {
        self.formulas.iter().filter(|f| f.group.is_inertia())
    }

    /// Current values of the soft weights, in formula order.
    pub fn soft_weights(&self) -> Vec<f64> {
        self.formulas.iter().filter_map(|f| f.weight.soft_value()).collect()
    }

    /// Labels of the soft formulas, aligned with [`soft_weights`].
    ///
    /// [`soft_weights`]: CompiledKb::soft_weights
    pub fn soft_labels(&self) -> Vec<&str> {
        self.formulas
            .iter()
            .filter(|f| !f.weight.is_hard())
            .map(|f| f.label.as_str())
            .collect()
    }

    /// Replaces the soft weights, keeping hard formulas hard.
    pub fn set_soft_weights(&mut self, weights: &[f64]) -> Result<(), CompileError> {
        let soft: Vec<usize> = self
            .formulas
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.weight.is_hard())
            .map(|(i, _)| i)
            .collect();
        if soft.len() != weights.len() {
            return Err(CompileError::WeightCount { expected: soft.len(), got: weights.len() });
        }
        for (i, w) in soft.into_iter().zip(weights) {
            self.formulas[i].weight = Weight::Soft(*w);
        }
        Ok(())
    }

    /// View as a knowledge base for serialisation in the rule DSL.
    pub fn to_source(&self) -> KnowledgeBaseSource {
        let rules = self
            .formulas
            .iter()
            .map(|f| Rule {
                weight: f.weight,
                kind: KnowledgeBaseSource::classify(&f.formula),
                formula: f.formula.clone(),
            })
            .collect();
        KnowledgeBaseSource { signature: self.signature.clone(), rules, compiled: true }
    }

    /// Re-reads a compiled knowledge base from its DSL form, recovering the
    /// formula groups and labels from the rule shapes.
    pub fn from_source(kb: &KnowledgeBaseSource) -> Result<CompiledKb, CompileError> {
        let mut formulas = Vec::new();
        let mut counters: BTreeMap<(String, FormulaGroup), usize> = BTreeMap::new();
        let mut constraint_count = 0usize;
        for (i, rule) in kb.rules.iter().enumerate() {
            check_no_auxiliaries(i + 1, &rule.formula)?;
            let group = classify_compiled(&rule.formula);
            let label = match (group, compiled_fluent_name(&rule.formula)) {
                (FormulaGroup::Constraint, _) | (_, None) => {
                    constraint_count += 1;
                    format!("constraint {constraint_count}")
                }
                (group, Some(name)) => {
                    let counter = counters.entry((name.clone(), group)).or_insert(0);
                    *counter += 1;
                    label_for(&name, group, *counter)
                }
            };
            formulas.push(CompiledFormula { label, group, weight: rule.weight, formula: rule.formula.clone() });
        }
        Ok(CompiledKb { signature: kb.signature.clone(), formulas })
    }
}

fn label_for(fluent: &str, group: FormulaGroup, index: usize) -> String {
    match group {
        FormulaGroup::Initiation => format!("{fluent} init {index}"),
        FormulaGroup::Termination => format!("{fluent} term {index}"),
        FormulaGroup::InertiaHolds => format!("{fluent} inertia holds"),
        FormulaGroup::InertiaNegHolds => format!("{fluent} inertia !holds"),
        FormulaGroup::Constraint => format!("constraint {index}"),
    }
}

/// Completed definition of one fluent constructor: the canonical head
/// pattern and one body per source rule, in source order, each keeping the
/// weight of the rule it came from.
#[derive(Clone, PartialEq, Debug)]
pub struct FluentDefinition {
    /// The fluent term over canonical variables, e.g. `meeting(ID1, ID2)`.
    pub fluent: Term,
    /// The time variable of the definition.
    pub time: Var,
    pub initiation: Vec<(Formula, Weight)>,
    pub termination: Vec<(Formula, Weight)>,
}

impl FluentDefinition {
    pub fn name(&self) -> &str {
        match &self.fluent {
            Term::App(name, _) => name,
            _ => unreachable!("canonical patterns are constructor applications"),
        }
    }

    /// Right-hand side of the completed initiation equivalence.
    pub fn initiation_definition(&self) -> Formula {
        Formula::disjoin(self.initiation.iter().map(|(f, _)| f.clone()).collect())
    }

    /// Right-hand side of the completed termination equivalence.
    pub fn termination_definition(&self) -> Formula {
        Formula::disjoin(self.termination.iter().map(|(f, _)| f.clone()).collect())
    }
}

/// Result of predicate completion, before axiom specialisation.
#[derive(Clone, PartialEq, Debug)]
pub struct CompletedKb {
    pub signature: Signature,
    /// One definition per fluent constructor, in constructor name order.
    pub definitions: Vec<FluentDefinition>,
    pub constraints: Vec<(Formula, Weight)>,
}

/// Computes predicate completion: one initiation and one termination
/// definition per fluent constructor. Rule bodies are renamed onto the
/// head variables of the first rule mentioning the fluent; fluents without
/// rules get generated variables and empty definitions.
pub fn complete(kb: &KnowledgeBaseSource) -> Result<CompletedKb, CompileError> {
    let sig = &kb.signature;
    let mut slots: BTreeMap<String, (Vec<String>, Option<FluentDefinition>)> = sig
        .functions()
        .filter(|(_, decl)| decl.result == FLUENT_SORT)
        .map(|(name, decl)| (name.clone(), (decl.args.clone(), None)))
        .collect();
    let mut constraints = Vec::new();

    for (i, rule) in kb.rules.iter().enumerate() {
        let index = i + 1;
        match rule.kind {
            RuleKind::Initiation | RuleKind::Termination => {
                let (head, body) = rule.head_body().expect("classified by head shape");
                let (fluent, time) = check_head(index, head)?;
                check_body(index, &body, fluent, &time)?;
                let name = match fluent {
                    Term::App(name, _) => name.clone(),
                    _ => unreachable!("checked by check_head"),
                };
                let slot = &mut slots.get_mut(&name).expect("parsed fluent constructors are declared").1;
                let def = slot.get_or_insert_with(|| FluentDefinition {
                    fluent: fluent.clone(),
                    time: time.clone(),
                    initiation: Vec::new(),
                    termination: Vec::new(),
                });
                let body = rename_onto(def, fluent, &time, body, sig);
                match rule.kind {
                    RuleKind::Initiation => def.initiation.push((body, rule.weight)),
                    _ => def.termination.push((body, rule.weight)),
                }
            }
            RuleKind::Axiom | RuleKind::Constraint => {
                check_no_auxiliaries(index, &rule.formula)?;
                constraints.push((rule.formula.clone(), rule.weight));
            }
        }
    }

    let definitions = slots
        .into_iter()
        .map(|(name, (arg_sorts, def))| def.unwrap_or_else(|| generated_definition(&name, &arg_sorts)))
        .collect();
    Ok(CompletedKb { signature: sig.clone(), definitions, constraints })
}

/// Validates a rule head and returns its fluent pattern and time variable.
fn check_head(index: usize, head: &Atom) -> Result<(&Term, Var), CompileError> {
    let form = "heads must have the form Pred(fluent(X, ...), T) with distinct variables";
    let (fluent, time) = match head.args.as_slice() {
        [f @ Term::App(_, args), Term::Var(t)] if t.sort == TIME_SORT => {
            let mut names: Vec<&str> = Vec::with_capacity(args.len());
            for arg in args {
                match arg {
                    Term::Var(v) if !names.contains(&v.name.as_str()) => names.push(&v.name),
                    _ => return Err(CompileError::bad_rule(index, form)),
                }
            }
            (f, t.clone())
        }
        _ => return Err(CompileError::bad_rule(index, form)),
    };
    Ok((fluent, time))
}

fn check_body(index: usize, body: &Formula, fluent: &Term, time: &Var) -> Result<(), CompileError> {
    check_no_auxiliaries(index, body)?;
    let mut bound = std::collections::BTreeSet::new();
    fluent.collect_vars(&mut bound);
    bound.insert(time.clone());
    if let Some(var) = body.free_vars().difference(&bound).next() {
        return Err(CompileError::bad_rule(
            index,
            format!("variable `{}` in the body is not bound by the head", var.name),
        ));
    }
    Ok(())
}

fn check_no_auxiliaries(index: usize, formula: &Formula) -> Result<(), CompileError> {
    for atom in formula.atoms() {
        if atom.pred == INITIATED_AT || atom.pred == TERMINATED_AT {
            return Err(CompileError::bad_rule(
                index,
                format!("`{}` may only appear as the head of a definition rule", atom.pred),
            ));
        }
    }
    Ok(())
}

/// Substitutes a rule body's head variables by the canonical ones.
fn rename_onto(def: &FluentDefinition, fluent: &Term, time: &Var, body: Formula, sig: &Signature) -> Formula {
    let (canon_args, rule_args) = match (&def.fluent, fluent) {
        (Term::App(_, c), Term::App(_, r)) => (c, r),
        _ => unreachable!("checked by check_head"),
    };
    let mut binding = Binding::new();
    for (rule_arg, canon_arg) in rule_args.iter().zip(canon_args) {
        if let Term::Var(v) = rule_arg {
            binding.insert(v.name.clone(), canon_arg.clone());
        }
    }
    binding.insert(time.name.clone(), Term::var(def.time.name.clone(), TIME_SORT));
    body.substitute(&binding, sig).expect("renaming between variables of equal sorts")
}

fn generated_definition(name: &str, arg_sorts: &[String]) -> FluentDefinition {
    let args = arg_sorts
        .iter()
        .enumerate()
        .map(|(i, sort)| Term::var(format!("X{}", i + 1), sort))
        .collect();
    FluentDefinition {
        fluent: Term::app(name, args),
        time: Var::new("T", TIME_SORT),
        initiation: Vec::new(),
        termination: Vec::new(),
    }
}

/// Rewrites the change and persistence axioms against the completed
/// definitions. Weights carry over from the source rules on effect
/// formulas; inertia formulas start hard until a policy is applied.
pub fn specialize_axioms(completed: &CompletedKb) -> CompiledKb {
    let mut formulas = Vec::new();
    for def in &completed.definitions {
        let name = def.name();
        let now = Term::Var(def.time.clone());
        let next = Term::Succ(Box::new(now.clone()));
        let holds_now = Formula::Atom(Atom::new(HOLDS_AT, vec![def.fluent.clone(), now]));
        let holds_next = Formula::Atom(Atom::new(HOLDS_AT, vec![def.fluent.clone(), next]));

        for (k, (body, weight)) in def.initiation.iter().enumerate() {
            formulas.push(CompiledFormula {
                label: label_for(name, FormulaGroup::Initiation, k + 1),
                group: FormulaGroup::Initiation,
                weight: *weight,
                formula: Formula::implies(body.clone(), holds_next.clone()),
            });
        }
        for (k, (body, weight)) in def.termination.iter().enumerate() {
            formulas.push(CompiledFormula {
                label: label_for(name, FormulaGroup::Termination, k + 1),
                group: FormulaGroup::Termination,
                weight: *weight,
                formula: Formula::implies(body.clone(), Formula::not(holds_next.clone())),
            });
        }
        formulas.push(CompiledFormula {
            label: label_for(name, FormulaGroup::InertiaHolds, 0),
            group: FormulaGroup::InertiaHolds,
            weight: Weight::Hard,
            formula: Formula::implies(
                Formula::and(holds_now.clone(), Formula::not(def.termination_definition())),
                holds_next.clone(),
            ),
        });
        formulas.push(CompiledFormula {
            label: label_for(name, FormulaGroup::InertiaNegHolds, 0),
            group: FormulaGroup::InertiaNegHolds,
            weight: Weight::Hard,
            formula: Formula::implies(
                Formula::and(Formula::not(holds_now), Formula::not(def.initiation_definition())),
                Formula::not(holds_next),
            ),
        });
    }
    for (k, (formula, weight)) in completed.constraints.iter().enumerate() {
        formulas.push(CompiledFormula {
            label: label_for("", FormulaGroup::Constraint, k + 1),
            group: FormulaGroup::Constraint,
            weight: *weight,
            formula: formula.clone(),
        });
    }
    CompiledKb { signature: completed.signature.clone(), formulas }
}

/// Marks each compiled formula hard or soft. Effect formulas become soft
/// exactly when `sigma_soft` is set, keeping their source weights (1.0
/// where the source rule was unweighted). Inertia formulas follow the
/// policy; constraints keep whatever the source said.
pub fn apply_policy(
    ckb: &CompiledKb,
    policy: &InertiaPolicy,
    sigma_soft: bool,
) -> Result<CompiledKb, CompileError> {
    let mut out = ckb.clone();
    let softened: Vec<usize> = out
        .formulas
        .iter()
        .enumerate()
        .filter(|(_, f)| policy.variant.softens(f.group))
        .map(|(i, _)| i)
        .collect();
    let inertia_weights = match (&policy.weights, policy.variant) {
        (None, _) => vec![1.0; softened.len()],
        (Some(ws), InertiaVariant::SiEq) => {
            if ws.len() != 1 {
                return Err(CompileError::WeightCount { expected: 1, got: ws.len() });
            }
            vec![ws[0]; softened.len()]
        }
        (Some(ws), _) => {
            if ws.len() != softened.len() {
                return Err(CompileError::WeightCount { expected: softened.len(), got: ws.len() });
            }
            ws.clone()
        }
    };

    for f in &mut out.formulas {
        if f.group.in_sigma() {
            f.weight = match (sigma_soft, f.weight) {
                (true, Weight::Soft(w)) => Weight::Soft(w),
                (true, Weight::Hard) => Weight::Soft(1.0),
                (false, _) => Weight::Hard,
            };
        } else if f.group.is_inertia() {
            f.weight = Weight::Hard;
        }
    }
    for (i, w) in softened.into_iter().zip(inertia_weights) {
        out.formulas[i].weight = Weight::Soft(w);
    }
    Ok(out)
}

/// The full pipeline: completion, axiom specialisation, policy.
pub fn compile(
    kb: &KnowledgeBaseSource,
    policy: &InertiaPolicy,
    sigma_soft: bool,
) -> Result<CompiledKb, CompileError> {
    if kb.compiled {
        return Err(CompileError::AlreadyCompiled);
    }
    apply_policy(&specialize_axioms(&complete(kb)?), policy, sigma_soft)
}

/// Recovers the formula group of a compiled rule from its shape: effect
/// and inertia rules conclude `holdsAt` (possibly negated) at `T+1`, and
/// inertia rules additionally carry the fluent's own `holdsAt` at `T` in
/// the body.
fn classify_compiled(formula: &Formula) -> FormulaGroup {
    let (body, head) = match formula {
        Formula::Implies(b, h) => (Some(b.as_ref()), h.as_ref()),
        other => (None, other),
    };
    let (positive, atom) = match head {
        Formula::Atom(a) => (true, a),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(a) => (false, a),
            _ => return FormulaGroup::Constraint,
        },
        _ => return FormulaGroup::Constraint,
    };
    let (fluent, prev) = match (atom.pred.as_str(), atom.args.as_slice()) {
        (HOLDS_AT, [fluent, Term::Succ(prev)]) => (fluent, prev.as_ref()),
        _ => return FormulaGroup::Constraint,
    };
    let persistence = Atom::new(HOLDS_AT, vec![fluent.clone(), prev.clone()]);
    let inertial = body.is_some_and(|b| b.atoms().iter().any(|a| **a == persistence));
    match (positive, inertial) {
        (true, true) => FormulaGroup::InertiaHolds,
        (true, false) => FormulaGroup::Initiation,
        (false, true) => FormulaGroup::InertiaNegHolds,
        (false, false) => FormulaGroup::Termination,
    }
}

fn compiled_fluent_name(formula: &Formula) -> Option<String> {
    let head = match formula {
        Formula::Implies(_, h) => h.as_ref(),
        other => other,
    };
    let atom = match head {
        Formula::Atom(a) => a,
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(a) => a,
            _ => return None,
        },
        _ => return None,
    };
    match atom.args.first() {
        Some(Term::App(name, _)) => Some(name.clone()),
        _ => None,
    }
}
