use std::collections::{BTreeMap, BTreeSet};

use super::sexpr::{expect_atom, expect_list, parse_one, Pos, Sexpr};
use super::{ActionSchema, Domain, Literal, ParseError, Predicate, SymbolicProblem, SymbolicState, TypeHierarchy, ROOT_TYPE};

const UNSUPPORTED: &[&str] = &[
    "forall", "exists", "when", "or", "imply", "increase", "decrease", "assign", "scale-up", "scale-down", "=", "<",
    ">", "<=", ">=",
];

const UNSUPPORTED_REQUIREMENTS: &[&str] = &[
    ":conditional-effects",
    ":quantified-preconditions",
    ":universal-preconditions",
    ":existential-preconditions",
    ":numeric-fluents",
    ":fluents",
    ":durative-actions",
    ":disjunctive-preconditions",
    ":derived-predicates",
];

fn is_var(s: &str) -> bool {
    s.starts_with('?')
}

fn header<'a>(items: &'a [Sexpr], pos: Pos, kind: &str) -> Result<&'a str, ParseError> {
    let define = items.first().ok_or_else(|| ParseError::syntax(pos, "define", ")"))?;
    if !expect_atom(define, "define")?.eq_ignore_ascii_case("define") {
        return Err(ParseError::syntax(define.pos(), "define", define.as_atom().unwrap_or("list")));
    }
    let head = items.get(1).ok_or_else(|| ParseError::syntax(pos, &format!("({kind} <name>)"), ")"))?;
    let parts = expect_list(head, &format!("({kind} <name>)"))?;
    match parts {
        [k, name] if k.as_atom().map(str::to_ascii_lowercase).as_deref() == Some(kind) => expect_atom(name, "name"),
        _ => Err(ParseError::syntax(head.pos(), &format!("({kind} <name>)"), "malformed header")),
    }
}

/// Parses `a b - t c` style lists into (name, type) pairs.
fn typed_list(items: &[Sexpr], require_vars: bool) -> Result<Vec<(String, String, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let tok = expect_atom(&items[i], "identifier")?;
        if tok == "-" {
            let ty = items.get(i + 1).ok_or_else(|| ParseError::syntax(items[i].pos(), "type name", "end of list"))?;
            let ty = expect_atom(ty, "type name")?;
            if pending.is_empty() {
                return Err(ParseError::syntax(items[i].pos(), "identifier before '-'", "-"));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty.to_string(), p));
            }
            i += 2;
            continue;
        }
        if require_vars && !is_var(tok) {
            return Err(ParseError::syntax(items[i].pos(), "variable (?name)", tok));
        }
        pending.push((tok.to_string(), items[i].pos()));
        i += 1;
    }
    for (n, p) in pending {
        out.push((n, ROOT_TYPE.to_string(), p));
    }
    Ok(out)
}

fn check_supported(expr: &Sexpr) -> Result<(), ParseError> {
    if let Some(h) = expr.head() {
        if UNSUPPORTED.contains(&h.as_str()) {
            return Err(ParseError::semantic(expr.pos(), format!("unsupported construct '{h}'")));
        }
    }
    Ok(())
}

fn literal(expr: &Sexpr) -> Result<(Literal, Pos), ParseError> {
    check_supported(expr)?;
    let items = expect_list(expr, "literal")?;
    if expr.head().as_deref() == Some("not") {
        let inner = match items {
            [_, inner] => inner,
            _ => return Err(ParseError::syntax(expr.pos(), "(not <atom>)", "malformed negation")),
        };
        check_supported(inner)?;
        if inner.head().as_deref() == Some("not") {
            return Err(ParseError::syntax(inner.pos(), "atom", "nested not"));
        }
        let (mut l, p) = literal(inner)?;
        l.positive = false;
        return Ok((l, p));
    }
    let (name, args) = items.split_first().ok_or_else(|| ParseError::syntax(expr.pos(), "predicate name", ")"))?;
    let name = expect_atom(name, "predicate name")?;
    let args = args.iter().map(|a| expect_atom(a, "term").map(str::to_string)).collect::<Result<_, _>>()?;
    Ok((Literal { predicate: name.to_string(), args, positive: true }, expr.pos()))
}

/// Flattens `(and ...)`, a single literal, or `()` into literals.
fn conjunction(expr: &Sexpr) -> Result<Vec<(Literal, Pos)>, ParseError> {
    check_supported(expr)?;
    match expr {
        Sexpr::List(items, _) if items.is_empty() => Ok(Vec::new()),
        Sexpr::List(items, _) if expr.head().as_deref() == Some("and") => {
            let mut out = Vec::new();
            for it in &items[1..] {
                out.extend(conjunction(it)?);
            }
            Ok(out)
        }
        Sexpr::List(..) => Ok(vec![literal(expr)?]),
        Sexpr::Atom(a, p) => Err(ParseError::syntax(*p, "formula", a)),
    }
}

fn check_literal_types(
    domain_preds: &BTreeMap<String, Predicate>,
    types: &TypeHierarchy,
    lit: &Literal,
    pos: Pos,
    bindings: &BTreeMap<String, String>,
) -> Result<(), ParseError> {
    let pred = domain_preds
        .get(&lit.predicate)
        .ok_or_else(|| ParseError::semantic(pos, format!("undeclared predicate {}", lit.predicate)))?;
    if pred.arity() != lit.args.len() {
        return Err(ParseError::semantic(
            pos,
            format!("predicate {} expects {} arguments, got {}", lit.predicate, pred.arity(), lit.args.len()),
        ));
    }
    for (arg, want) in lit.args.iter().zip(&pred.parameter_types) {
        let have = bindings.get(arg).ok_or_else(|| {
            if is_var(arg) {
                ParseError::semantic(pos, format!("variable {arg} is not a parameter"))
            } else {
                ParseError::semantic(pos, format!("unknown object {arg}"))
            }
        })?;
        if !types.is_subtype(have, want) {
            return Err(ParseError::semantic(pos, format!("{arg} has type {have}, {} expects {want}", lit.predicate)));
        }
    }
    Ok(())
}

fn parse_action(items: &[Sexpr], pos: Pos, types: &TypeHierarchy, preds: &BTreeMap<String, Predicate>) -> Result<ActionSchema, ParseError> {
    let name = items.get(1).ok_or_else(|| ParseError::syntax(pos, "action name", ")"))?;
    let name = expect_atom(name, "action name")?.to_string();
    let mut params = Vec::new();
    let mut pre = Vec::new();
    let mut eff = Vec::new();
    let mut cost = 1.0;
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(&items[i], "action keyword")?.to_ascii_lowercase();
        let val = items.get(i + 1).ok_or_else(|| ParseError::syntax(items[i].pos(), "value", ")"))?;
        match key.as_str() {
            ":parameters" => params = typed_list(expect_list(val, "parameter list")?, true)?,
            ":precondition" => pre = conjunction(val)?,
            ":effect" => eff = conjunction(val)?,
            ":cost" => {
                let raw = expect_atom(val, "number")?;
                cost = raw
                    .parse::<f64>()
                    .ok()
                    .filter(|c| c.is_finite() && *c > 0.0)
                    .ok_or_else(|| ParseError::semantic(val.pos(), format!("cost must be a positive number, got {raw}")))?;
            }
            other => return Err(ParseError::syntax(items[i].pos(), ":parameters, :precondition, :effect or :cost", other)),
        }
        i += 2;
    }
    let mut bindings = BTreeMap::new();
    for (v, t, p) in &params {
        if !types.contains(t) {
            return Err(ParseError::semantic(*p, format!("undeclared type {t}")));
        }
        if bindings.insert(v.clone(), t.clone()).is_some() {
            return Err(ParseError::semantic(*p, format!("duplicate parameter {v}")));
        }
    }
    for (l, p) in pre.iter().chain(&eff) {
        check_literal_types(preds, types, l, *p, &bindings)?;
    }
    let (add, delete): (Vec<_>, Vec<_>) = eff.into_iter().map(|(l, _)| l).partition(|l| l.positive);
    Ok(ActionSchema {
        name,
        parameters: params.into_iter().map(|(v, t, _)| (v, t)).collect(),
        preconditions: pre.into_iter().map(|(l, _)| l).collect(),
        add,
        delete: delete.into_iter().map(|l| Literal { positive: true, ..l }).collect(),
        cost,
    })
}

/// Parses a domain in the supported PDDL subset.
pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    let root = parse_one(text)?;
    let items = expect_list(&root, "(define (domain ...))")?;
    let name = header(items, root.pos(), "domain")?.to_string();
    let mut types = TypeHierarchy::new();
    let mut predicates = BTreeMap::new();
    let mut action_forms = Vec::new();
    for section in &items[2..] {
        let body = expect_list(section, "domain section")?;
        let key = section.head().ok_or_else(|| ParseError::syntax(section.pos(), "section keyword", "list"))?;
        match key.as_str() {
            ":requirements" => {
                for r in &body[1..] {
                    let r = expect_atom(r, "requirement")?;
                    if UNSUPPORTED_REQUIREMENTS.contains(&r.to_ascii_lowercase().as_str()) {
                        return Err(ParseError::semantic(section.pos(), format!("unsupported requirement {r}")));
                    }
                }
            }
            ":types" => {
                let decls = typed_list(&body[1..], false)?;
                for (t, _, _) in &decls {
                    types.declare(t, ROOT_TYPE);
                }
                for (t, parent, p) in &decls {
                    if !types.contains(parent) {
                        types.declare(parent, ROOT_TYPE);
                    }
                    if types.is_subtype(parent, t) && parent != t {
                        return Err(ParseError::semantic(*p, format!("cyclic type declaration for {t}")));
                    }
                    types.declare(t, parent);
                }
            }
            ":predicates" => {
                for form in &body[1..] {
                    let parts = expect_list(form, "predicate declaration")?;
                    let (pname, params) = parts
                        .split_first()
                        .ok_or_else(|| ParseError::syntax(form.pos(), "predicate name", ")"))?;
                    let pname = expect_atom(pname, "predicate name")?.to_string();
                    let params = typed_list(params, true)?;
                    for (_, t, p) in &params {
                        if !types.contains(t) {
                            return Err(ParseError::semantic(*p, format!("undeclared type {t}")));
                        }
                    }
                    let pred = Predicate { name: pname.clone(), parameter_types: params.into_iter().map(|(_, t, _)| t).collect() };
                    if predicates.insert(pname.clone(), pred).is_some() {
                        return Err(ParseError::semantic(form.pos(), format!("duplicate predicate {pname}")));
                    }
                }
            }
            ":action" => action_forms.push((body, section.pos())),
            ":functions" | ":constants" | ":derived" | ":durative-action" | ":constraints" => {
                return Err(ParseError::semantic(section.pos(), format!("unsupported section {key}")));
            }
            other => return Err(ParseError::syntax(section.pos(), ":requirements, :types, :predicates or :action", other)),
        }
    }
    let mut schemas: Vec<ActionSchema> = Vec::new();
    for (body, pos) in action_forms {
        let schema = parse_action(body, pos, &types, &predicates)?;
        if schemas.iter().any(|s| s.name == schema.name) {
            return Err(ParseError::semantic(pos, format!("duplicate action {}", schema.name)));
        }
        schemas.push(schema);
    }
    Ok(Domain { name, types, predicates, schemas })
}

/// Parses a problem against an already-validated domain.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<SymbolicProblem, ParseError> {
    let root = parse_one(text)?;
    let items = expect_list(&root, "(define (problem ...))")?;
    let name = header(items, root.pos(), "problem")?.to_string();
    let mut universe = BTreeMap::new();
    let mut init_forms = Vec::new();
    let mut goal_form = None;
    for section in &items[2..] {
        let body = expect_list(section, "problem section")?;
        let key = section.head().ok_or_else(|| ParseError::syntax(section.pos(), "section keyword", "list"))?;
        match key.as_str() {
            ":domain" => {
                let d = body.get(1).ok_or_else(|| ParseError::syntax(section.pos(), "domain name", ")"))?;
                let d = expect_atom(d, "domain name")?;
                if d != domain.name {
                    return Err(ParseError::semantic(d_pos(body), format!("problem targets domain {d}, loaded {}", domain.name)));
                }
            }
            ":objects" => {
                for (o, t, p) in typed_list(&body[1..], false)? {
                    if !domain.types.contains(&t) {
                        return Err(ParseError::semantic(p, format!("unknown type {t} for object {o}")));
                    }
                    if universe.insert(o.clone(), t).is_some() {
                        return Err(ParseError::semantic(p, format!("duplicate object {o}")));
                    }
                }
            }
            ":init" => init_forms.extend(body[1..].iter()),
            ":goal" => goal_form = Some(body.get(1).ok_or_else(|| ParseError::syntax(section.pos(), "goal formula", ")"))?),
            ":requirements" => {}
            other => return Err(ParseError::syntax(section.pos(), ":domain, :objects, :init or :goal", other)),
        }
    }
    let mut init = SymbolicState::new();
    let mut seen = BTreeSet::new();
    for form in init_forms {
        let (l, p) = literal(form)?;
        if !l.positive {
            return Err(ParseError::semantic(p, "negative literal in :init"));
        }
        let atom = l.atom();
        domain.check_atom(&atom, &universe).map_err(|m| ParseError::semantic(p, m))?;
        seen.insert(atom.clone());
        init.insert(atom);
    }
    let mut goal = Vec::new();
    if let Some(g) = goal_form {
        for (l, p) in conjunction(g)? {
            domain.check_atom(&l.atom(), &universe).map_err(|m| ParseError::semantic(p, m))?;
            goal.push(l);
        }
    }
    Ok(SymbolicProblem { name, universe, init, goal })
}

fn d_pos(body: &[Sexpr]) -> Pos {
    body.get(1).map(Sexpr::pos).unwrap_or(Pos { line: 1, col: 1 })
}
