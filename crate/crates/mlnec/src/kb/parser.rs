//! Recursive-descent parser for the knowledge base DSL and the narrative
//! and annotation formats.

use std::collections::BTreeMap;

use super::lexer::{continues_after, continues_before, lex, Spanned, Tok};
use super::{Annotation, KbError, KnowledgeBaseSource, Narrative, Rule};
use crate::logic::signature::{
    EVENT_SORT, FLUENT_SORT, HAPPENS, HOLDS_AT, INITIATED_AT, TERMINATED_AT, TIME_SORT,
};
use crate::logic::{Atom, Formula, PredicateRole, Signature, SortDef, Term, Weight};

/// Parses a knowledge base file.
pub fn parse_kb(text: &str) -> Result<KnowledgeBaseSource, KbError> {
    let toks = preprocess(lex(text)?);
    let mut p = Parser::new(toks);
    let mut sig = Signature::new();
    let mut rules = Vec::new();
    let mut compiled = false;

    while !p.at_end() {
        p.skip_newlines();
        if p.at_end() {
            break;
        }
        match p.peek() {
            Tok::Ident(kw) if kw == "sort" => parse_sort_decl(&mut p, &mut sig)?,
            Tok::Ident(kw) if kw == "event" => parse_constructor_decl(&mut p, &mut sig, EVENT_SORT)?,
            Tok::Ident(kw) if kw == "fluent" => parse_constructor_decl(&mut p, &mut sig, FLUENT_SORT)?,
            Tok::Ident(kw) if kw == "evidence" => parse_evidence_decl(&mut p, &mut sig)?,
            Tok::Ident(kw) if kw == "compiled" => {
                p.next();
                p.expect_statement_end()?;
                compiled = true;
            }
            _ => {
                ensure_ec_predicates(&mut sig);
                rules.push(parse_rule(&mut p, &sig)?);
            }
        }
    }
    // A base without rules still compiles, so the calculus predicates must
    // exist even when no rule triggered the declaration.
    ensure_ec_predicates(&mut sig);
    Ok(KnowledgeBaseSource { signature: sig, rules, compiled })
}

/// Parses a narrative file against a signature.
pub fn parse_narrative(text: &str, sig: &Signature) -> Result<Narrative, KbError> {
    let toks = preprocess(lex(text)?);
    let mut p = Parser::new(toks);
    let mut narrative = Narrative::empty();
    let mut declared: Option<(u32, usize)> = None;
    let mut max_seen: u32 = 0;

    while !p.at_end() {
        p.skip_newlines();
        if p.at_end() {
            break;
        }
        if let Tok::Ident(kw) = p.peek() {
            if kw == "horizon" {
                let line = p.line();
                let (_, hi) = parse_horizon(&mut p)?;
                declared = Some((hi, line));
                continue;
            }
        }
        let line = p.line();
        let negated = p.eat(&Tok::Bang);
        let atom = parse_ground_atom(&mut p, sig)?;
        p.expect_statement_end()?;
        max_seen = max_seen.max(max_time(&atom));
        let value = !negated;
        match sig.role(&atom.pred) {
            Some(PredicateRole::Evidence) => {
                if let Some(prev) = narrative.evidence.insert(atom.clone(), value) {
                    if prev != value {
                        return Err(KbError::parse(line, format!("contradictory entries for {atom}")));
                    }
                }
            }
            Some(PredicateRole::Query) => {
                if let Some(prev) = narrative.clamped.insert(atom.clone(), value) {
                    if prev != value {
                        return Err(KbError::parse(line, format!("contradictory entries for {atom}")));
                    }
                }
            }
            _ => {
                return Err(KbError::parse(
                    line,
                    format!("`{}` is not an evidence or query predicate", atom.pred),
                ))
            }
        }
    }

    narrative.horizon = match declared {
        Some((hi, line)) => {
            if max_seen > hi {
                return Err(KbError::parse(
                    line,
                    format!("time-stamp {max_seen} outside declared horizon 0..{hi}"),
                ));
            }
            hi
        }
        None => max_seen,
    };
    Ok(narrative)
}

/// Parses an annotation file: `holdsAt` atom lines or `time,fluent,truth`
/// CSV rows. Negated or false rows are accepted and mean the same as
/// absence.
pub fn parse_annotation(text: &str, sig: &Signature) -> Result<Annotation, KbError> {
    let toks = preprocess(lex(text)?);
    let mut p = Parser::new(toks);
    let mut ann = Annotation::default();

    while !p.at_end() {
        p.skip_newlines();
        if p.at_end() {
            break;
        }
        let line = p.line();
        match p.peek().clone() {
            Tok::Ident(kw) if kw == "horizon" => {
                let (_, hi) = parse_horizon(&mut p)?;
                ann.horizon = Some(hi);
            }
            Tok::Ident(kw) if kw == "time" => {
                // csv header row: time,fluent,truth
                p.next();
                p.expect(&Tok::Comma)?;
                p.expect_ident("fluent")?;
                p.expect(&Tok::Comma)?;
                p.expect_ident("truth")?;
                p.expect_statement_end()?;
            }
            Tok::Number(_) => {
                let time = parse_time_value(&mut p)?;
                p.expect(&Tok::Comma)?;
                let fluent = parse_ground_term(&mut p, sig, FLUENT_SORT)?;
                p.expect(&Tok::Comma)?;
                let truth = match p.next() {
                    Some(Tok::Ident(s)) if s == "true" => true,
                    Some(Tok::Ident(s)) if s == "false" => false,
                    Some(Tok::Number(s)) if s == "1" => true,
                    Some(Tok::Number(s)) if s == "0" => false,
                    other => {
                        return Err(KbError::parse(
                            line,
                            format!("expected truth value, got {}", fmt_opt(other)),
                        ))
                    }
                };
                p.expect_statement_end()?;
                if truth {
                    ann.positives.insert(Atom::new(HOLDS_AT, vec![fluent, Term::Time(time)]));
                }
            }
            _ => {
                let negated = p.eat(&Tok::Bang);
                let atom = parse_ground_atom(&mut p, sig)?;
                p.expect_statement_end()?;
                if atom.pred != HOLDS_AT {
                    return Err(KbError::parse(line, format!("annotations must use {HOLDS_AT}")));
                }
                if !negated {
                    ann.positives.insert(atom);
                }
            }
        }
    }
    Ok(ann)
}

/// Removes newline tokens that only wrap a long statement.
fn preprocess(toks: Vec<Spanned>) -> Vec<Spanned> {
    let mut out: Vec<Spanned> = Vec::with_capacity(toks.len());
    let mut iter = toks.into_iter().peekable();
    while let Some(t) = iter.next() {
        if t.tok == Tok::Newline {
            let joins = out.last().map(|p| continues_after(&p.tok)).unwrap_or(false)
                || iter.peek().map(|n| continues_before(&n.tok)).unwrap_or(false);
            if joins {
                continue;
            }
        }
        out.push(t);
    }
    out
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(toks: Vec<Spanned>) -> Parser {
        Parser { toks, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|t| t.line)
            .unwrap_or(0)
    }

    fn peek(&self) -> &Tok {
        static NEWLINE: Tok = Tok::Newline;
        self.toks.get(self.pos).map(|t| &t.tok).unwrap_or(&NEWLINE)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), KbError> {
        let line = self.line();
        match self.next() {
            Some(t) if &t == tok => Ok(()),
            other => Err(KbError::parse(line, format!("expected {tok}, got {}", fmt_opt(other)))),
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<(), KbError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Ident(s)) if s == name => Ok(()),
            other => Err(KbError::parse(line, format!("expected `{name}`, got {}", fmt_opt(other)))),
        }
    }

    fn any_ident(&mut self) -> Result<String, KbError> {
        let line = self.line();
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(KbError::parse(line, format!("expected identifier, got {}", fmt_opt(other)))),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek() == &Tok::Newline && !self.at_end() {
            self.pos += 1;
        }
    }

    fn expect_statement_end(&mut self) -> Result<(), KbError> {
        if self.at_end() || self.eat(&Tok::Newline) {
            Ok(())
        } else {
            Err(KbError::parse(self.line(), format!("unexpected {} after statement", self.peek())))
        }
    }
}

fn fmt_opt(t: Option<Tok>) -> String {
    match t {
        Some(t) => t.to_string(),
        None => "end of file".to_string(),
    }
}

fn parse_horizon(p: &mut Parser) -> Result<(u32, u32), KbError> {
    let line = p.line();
    p.expect_ident("horizon")?;
    let lo = parse_time_value(p)?;
    p.expect(&Tok::DotDot)?;
    let hi = parse_time_value(p)?;
    p.expect_statement_end()?;
    if lo != 0 {
        return Err(KbError::parse(line, "horizons must start at 0"));
    }
    Ok((lo, hi))
}

fn parse_time_value(p: &mut Parser) -> Result<u32, KbError> {
    let line = p.line();
    match p.next() {
        Some(Tok::Number(s)) => s
            .parse::<u32>()
            .map_err(|_| KbError::parse(line, format!("`{s}` is not a time-point"))),
        other => Err(KbError::parse(line, format!("expected time-point, got {}", fmt_opt(other)))),
    }
}

fn parse_sort_decl(p: &mut Parser, sig: &mut Signature) -> Result<(), KbError> {
    let line = p.line();
    p.expect_ident("sort")?;
    let name = p.any_ident()?;
    p.expect(&Tok::Eq)?;
    if name == TIME_SORT {
        let lo = parse_time_value(p)?;
        p.expect(&Tok::DotDot)?;
        let hi = parse_time_value(p)?;
        p.expect_statement_end()?;
        if lo != 0 {
            return Err(KbError::parse(line, "the time sort must start at 0"));
        }
        sig.declare_time(hi);
        return Ok(());
    }
    let mut constants = Vec::new();
    loop {
        let line = p.line();
        match p.next() {
            Some(Tok::Ident(s)) => {
                if s.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    return Err(KbError::parse(
                        line,
                        format!("constant `{s}` may not start with an upper-case letter"),
                    ));
                }
                constants.push(s);
            }
            Some(Tok::Number(s)) => constants.push(s),
            other => return Err(KbError::parse(line, format!("expected constant, got {}", fmt_opt(other)))),
        }
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.expect_statement_end()?;
    sig.declare_sort(&name, constants).map_err(|e| KbError::parse(line, e.to_string()))
}

fn parse_constructor_decl(p: &mut Parser, sig: &mut Signature, result: &str) -> Result<(), KbError> {
    let line = p.line();
    p.next(); // keyword
    let name = p.any_ident()?;
    let args = parse_sort_list(p)?;
    p.expect_statement_end()?;
    if sig.sort(result).is_none() {
        sig.declare_sort(result, vec![]).map_err(|e| KbError::parse(line, e.to_string()))?;
    }
    sig.declare_function(&name, args, result).map_err(|e| KbError::parse(line, e.to_string()))
}

fn parse_evidence_decl(p: &mut Parser, sig: &mut Signature) -> Result<(), KbError> {
    let line = p.line();
    p.expect_ident("evidence")?;
    let name = p.any_ident()?;
    let args = parse_sort_list(p)?;
    p.expect_statement_end()?;
    sig.declare_predicate(&name, args, PredicateRole::Evidence)
        .map_err(|e| KbError::parse(line, e.to_string()))
}

fn parse_sort_list(p: &mut Parser) -> Result<Vec<String>, KbError> {
    p.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    if p.eat(&Tok::RParen) {
        return Ok(args);
    }
    loop {
        args.push(p.any_ident()?);
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.expect(&Tok::RParen)?;
    Ok(args)
}

fn ensure_ec_predicates(sig: &mut Signature) {
    if sig.sort(EVENT_SORT).is_some() && sig.predicate(HAPPENS).is_none() {
        sig.declare_predicate(HAPPENS, vec![EVENT_SORT.into(), TIME_SORT.into()], PredicateRole::Evidence)
            .expect("happens declaration");
    }
    if sig.sort(FLUENT_SORT).is_some() && sig.predicate(HOLDS_AT).is_none() {
        sig.declare_predicate(HOLDS_AT, vec![FLUENT_SORT.into(), TIME_SORT.into()], PredicateRole::Query)
            .expect("holdsAt declaration");
        sig.declare_predicate(INITIATED_AT, vec![FLUENT_SORT.into(), TIME_SORT.into()], PredicateRole::Auxiliary)
            .expect("initiatedAt declaration");
        sig.declare_predicate(TERMINATED_AT, vec![FLUENT_SORT.into(), TIME_SORT.into()], PredicateRole::Auxiliary)
            .expect("terminatedAt declaration");
    }
}

fn parse_rule(p: &mut Parser, sig: &Signature) -> Result<Rule, KbError> {
    let weight = parse_weight(p)?;
    let mut vars: BTreeMap<String, String> = BTreeMap::new();
    let head = parse_formula(p, sig, &mut vars)?;
    let formula = if p.eat(&Tok::ColonDash) {
        let body = parse_formula(p, sig, &mut vars)?;
        Formula::implies(body, head)
    } else {
        head
    };
    p.expect_statement_end()?;
    let kind = KnowledgeBaseSource::classify(&formula);
    Ok(Rule { weight, kind, formula })
}

fn parse_weight(p: &mut Parser) -> Result<Weight, KbError> {
    let line = p.line();
    let negative = match p.peek() {
        Tok::Minus => {
            p.next();
            true
        }
        Tok::Number(_) => false,
        _ => return Ok(Weight::Hard),
    };
    match p.next() {
        Some(Tok::Number(s)) => {
            let w: f64 = s
                .parse()
                .map_err(|_| KbError::parse(line, format!("`{s}` is not a weight")))?;
            Ok(Weight::Soft(if negative { -w } else { w }))
        }
        other => Err(KbError::parse(line, format!("expected weight, got {}", fmt_opt(other)))),
    }
}

fn parse_formula(p: &mut Parser, sig: &Signature, vars: &mut BTreeMap<String, String>) -> Result<Formula, KbError> {
    let mut f = parse_implication(p, sig, vars)?;
    while p.eat(&Tok::IffOp) {
        let rhs = parse_implication(p, sig, vars)?;
        f = Formula::iff(f, rhs);
    }
    Ok(f)
}

fn parse_implication(p: &mut Parser, sig: &Signature, vars: &mut BTreeMap<String, String>) -> Result<Formula, KbError> {
    let lhs = parse_disjunction(p, sig, vars)?;
    if p.eat(&Tok::Arrow) {
        let rhs = parse_implication(p, sig, vars)?;
        Ok(Formula::implies(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_disjunction(p: &mut Parser, sig: &Signature, vars: &mut BTreeMap<String, String>) -> Result<Formula, KbError> {
    let mut f = parse_conjunction(p, sig, vars)?;
    while p.eat(&Tok::Pipe) {
        let rhs = parse_conjunction(p, sig, vars)?;
        f = Formula::Or(Box::new(f), Box::new(rhs));
    }
    Ok(f)
}

fn parse_conjunction(p: &mut Parser, sig: &Signature, vars: &mut BTreeMap<String, String>) -> Result<Formula, KbError> {
    let mut f = parse_unary(p, sig, vars)?;
    while p.eat(&Tok::Caret) {
        let rhs = parse_unary(p, sig, vars)?;
        f = Formula::And(Box::new(f), Box::new(rhs));
    }
    Ok(f)
}

fn parse_unary(p: &mut Parser, sig: &Signature, vars: &mut BTreeMap<String, String>) -> Result<Formula, KbError> {
    let line = p.line();
    match p.peek().clone() {
        Tok::Bang => {
            p.next();
            Ok(Formula::Not(Box::new(parse_unary(p, sig, vars)?)))
        }
        Tok::LParen => {
            p.next();
            let f = parse_formula(p, sig, vars)?;
            p.expect(&Tok::RParen)?;
            Ok(f)
        }
        Tok::Ident(s) if s == "true" => {
            p.next();
            Ok(Formula::True)
        }
        Tok::Ident(s) if s == "false" => {
            p.next();
            Ok(Formula::False)
        }
        Tok::Ident(_) => Ok(Formula::Atom(parse_atom(p, sig, Some(vars))?)),
        other => Err(KbError::parse(line, format!("expected formula, got {other}"))),
    }
}

/// Case-insensitive spellings of the four event calculus predicates map to
/// their canonical names.
fn canonical_pred(name: &str) -> String {
    match name.to_ascii_lowercase().as_str() {
        "happens" => HAPPENS.to_string(),
        "holdsat" => HOLDS_AT.to_string(),
        "initiatedat" => INITIATED_AT.to_string(),
        "terminatedat" => TERMINATED_AT.to_string(),
        _ => name.to_string(),
    }
}

fn parse_atom(p: &mut Parser, sig: &Signature, vars: Option<&mut BTreeMap<String, String>>) -> Result<Atom, KbError> {
    let line = p.line();
    let raw = p.any_ident()?;
    let pred = canonical_pred(&raw);
    let decl = sig
        .predicate(&pred)
        .ok_or_else(|| {
            if sig.function(&pred).is_some() {
                KbError::parse(line, format!("`{raw}` is a constructor, not a predicate"))
            } else {
                KbError::parse(line, format!("unknown predicate `{raw}`"))
            }
        })?
        .clone();
    p.expect(&Tok::LParen)?;
    let mut args = Vec::new();
    let mut vars = vars;
    for (i, sort) in decl.args.iter().enumerate() {
        if i > 0 {
            p.expect(&Tok::Comma)?;
        }
        args.push(parse_term(p, sig, sort, &mut vars)?);
    }
    p.expect(&Tok::RParen)?;
    Ok(Atom::new(pred, args))
}

fn parse_ground_atom(p: &mut Parser, sig: &Signature) -> Result<Atom, KbError> {
    parse_atom(p, sig, None)
}

fn parse_ground_term(p: &mut Parser, sig: &Signature, expected: &str) -> Result<Term, KbError> {
    parse_term(p, sig, expected, &mut None)
}

fn parse_term(
    p: &mut Parser,
    sig: &Signature,
    expected: &str,
    vars: &mut Option<&mut BTreeMap<String, String>>,
) -> Result<Term, KbError> {
    let line = p.line();
    let base = match p.next() {
        Some(Tok::Number(s)) => {
            if expected == TIME_SORT {
                let t = s
                    .parse::<u32>()
                    .map_err(|_| KbError::parse(line, format!("`{s}` is not a time-point")))?;
                Term::Time(t)
            } else {
                check_constant(sig, expected, &s, line)?;
                Term::Const(s)
            }
        }
        Some(Tok::Ident(s)) => {
            if p.peek() == &Tok::LParen {
                let decl = sig
                    .function(&s)
                    .ok_or_else(|| KbError::parse(line, format!("unknown constructor `{s}`")))?
                    .clone();
                if decl.result != expected {
                    return Err(KbError::parse(
                        line,
                        format!("`{s}` builds sort `{}` where `{expected}` is required", decl.result),
                    ));
                }
                p.expect(&Tok::LParen)?;
                let mut args = Vec::new();
                for (i, sort) in decl.args.iter().enumerate() {
                    if i > 0 {
                        p.expect(&Tok::Comma)?;
                    }
                    args.push(parse_term(p, sig, sort, vars)?);
                }
                p.expect(&Tok::RParen)?;
                Term::App(s, args)
            } else if s.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                match vars {
                    None => {
                        return Err(KbError::parse(line, format!("variable `{s}` not allowed here")))
                    }
                    Some(map) => {
                        if let Some(prev) = map.get(&s) {
                            if prev != expected {
                                return Err(KbError::parse(
                                    line,
                                    format!("variable `{s}` used as `{prev}` and `{expected}`"),
                                ));
                            }
                        } else {
                            map.insert(s.clone(), expected.to_string());
                        }
                        Term::var(s, expected)
                    }
                }
            } else {
                check_constant(sig, expected, &s, line)?;
                Term::Const(s)
            }
        }
        other => return Err(KbError::parse(line, format!("expected term, got {}", fmt_opt(other)))),
    };
    if expected == TIME_SORT && p.peek() == &Tok::Plus {
        p.next();
        match p.next() {
            Some(Tok::Number(s)) if s == "1" => Ok(Term::Succ(Box::new(base))),
            other => Err(KbError::parse(line, format!("expected `1` after `+`, got {}", fmt_opt(other)))),
        }
    } else {
        Ok(base)
    }
}

fn check_constant(sig: &Signature, expected: &str, name: &str, line: usize) -> Result<(), KbError> {
    match sig.sort(expected) {
        Some(SortDef::Constants(cs)) if cs.iter().any(|c| c == name) => Ok(()),
        Some(_) => Err(KbError::parse(
            line,
            format!("unknown constant `{name}` of sort `{expected}`"),
        )),
        None => Err(KbError::parse(line, format!("unknown sort `{expected}`"))),
    }
}

fn max_time(atom: &Atom) -> u32 {
    fn walk(t: &Term, max: &mut u32) {
        match t {
            Term::Time(v) => *max = (*max).max(*v),
            Term::Succ(inner) => walk(inner, max),
            Term::App(_, args) => args.iter().for_each(|a| walk(a, max)),
            Term::Var(_) | Term::Const(_) => {}
        }
    }
    let mut max = 0;
    for a in &atom.args {
        walk(a, &mut max);
    }
    max
}
