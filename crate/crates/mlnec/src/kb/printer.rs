//! Serialisers emitting the same textual formats the parsers accept.
//! `parse(serialize(x))` reproduces `x` up to whitespace and comments.

use std::fmt::Write as _;

use super::{Annotation, KnowledgeBaseSource, Narrative, Rule};
use crate::logic::signature::{
    EVENT_SORT, FLUENT_SORT, HAPPENS, HOLDS_AT, INITIATED_AT, TERMINATED_AT,
};
use crate::logic::{Atom, Formula, PredicateRole, SortDef, Weight};

/// Renders a knowledge base in canonical form: sorts, event and fluent
/// constructors, evidence declarations, then one rule per line.
pub fn serialize_kb(kb: &KnowledgeBaseSource) -> String {
    let mut out = String::new();
    let sig = &kb.signature;

    for (name, def) in sig.sorts() {
        match def {
            SortDef::Time { max } => {
                let _ = writeln!(out, "sort time = 0..{max}");
            }
            SortDef::Constants(cs) => {
                if cs.is_empty() {
                    continue; // event and fluent sorts are implied by their constructors
                }
                let _ = writeln!(out, "sort {name} = {}", cs.join(", "));
            }
        }
    }
    for result in [EVENT_SORT, FLUENT_SORT] {
        for (name, decl) in sig.functions() {
            if decl.result == result {
                let keyword = if result == EVENT_SORT { "event" } else { "fluent" };
                let _ = writeln!(out, "{keyword} {name}({})", decl.args.join(", "));
            }
        }
    }
    for (name, decl) in sig.predicates() {
        if decl.role == PredicateRole::Evidence && name != HAPPENS {
            let _ = writeln!(out, "evidence {name}({})", decl.args.join(", "));
        }
    }
    if kb.compiled {
        out.push_str("compiled\n");
    }
    for rule in &kb.rules {
        out.push_str(&rule_line(rule));
        out.push('\n');
    }
    out
}

pub fn rule_line(rule: &Rule) -> String {
    let prefix = match rule.weight {
        Weight::Hard => String::new(),
        Weight::Soft(w) => format!("{w} "),
    };
    match &rule.formula {
        Formula::Implies(body, head) => {
            format!("{prefix}{} :- {}", formula(head, 2), formula(body, 0))
        }
        other => format!("{prefix}{}", formula(other, 0)),
    }
}

/// Display names: the event calculus predicates are capitalised in rule
/// text, everything else prints as declared.
fn pred_name(pred: &str) -> &str {
    match pred {
        HAPPENS => "Happens",
        HOLDS_AT => "HoldsAt",
        INITIATED_AT => "InitiatedAt",
        TERMINATED_AT => "TerminatedAt",
        other => other,
    }
}

// precedence: <=> 1, => 2, | 3, ^ 4, ! 5
pub fn formula(f: &Formula, parent: u8) -> String {
    let (s, prec) = match f {
        Formula::True => ("true".to_string(), 6),
        Formula::False => ("false".to_string(), 6),
        Formula::Atom(a) => (atom(a), 6),
        Formula::Not(inner) => (format!("!{}", formula(inner, 5)), 5),
        Formula::And(a, b) => (format!("{} ^ {}", formula(a, 4), formula(b, 5)), 4),
        Formula::Or(a, b) => (format!("{} | {}", formula(a, 3), formula(b, 4)), 3),
        Formula::Implies(a, b) => (format!("{} => {}", formula(a, 3), formula(b, 2)), 2),
        Formula::Iff(a, b) => (format!("{} <=> {}", formula(a, 1), formula(b, 2)), 1),
        Formula::Exists(_, inner) => {
            // not expressible in the DSL; printed for diagnostics only
            (format!("exists(...) {}", formula(inner, 5)), 5)
        }
    };
    if prec < parent {
        format!("({s})")
    } else {
        s
    }
}

pub fn atom(a: &Atom) -> String {
    let mut s = format!("{}(", pred_name(&a.pred));
    for (i, arg) in a.args.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{arg}");
    }
    s.push(')');
    s
}

/// Renders a narrative: horizon line, then one ground literal per line.
pub fn serialize_narrative(n: &Narrative) -> String {
    let mut out = format!("horizon 0..{}\n", n.horizon);
    for (a, value) in n.clamped.iter().chain(n.evidence.iter()) {
        if *value {
            let _ = writeln!(out, "{a}");
        } else {
            let _ = writeln!(out, "!{a}");
        }
    }
    out
}

/// Renders an annotation as `holdsAt` atom lines.
pub fn serialize_annotation(ann: &Annotation) -> String {
    let mut out = String::new();
    if let Some(h) = ann.horizon {
        let _ = writeln!(out, "horizon 0..{h}");
    }
    for a in &ann.positives {
        let _ = writeln!(out, "{a}");
    }
    out
}
