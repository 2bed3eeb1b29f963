//! Typed STRIPS PDDL with `:action-costs`.
//!
//! Supported: `:strips`, `:typing`, `:action-costs`; types, constants,
//! predicates, functions; actions whose precondition is a conjunction of
//! positive atoms and whose effect is a conjunction of atoms, negated atoms
//! and `(increase (total-cost) X)` where `X` is a number or a ground-able
//! function term defined in the problem's `:init`. Everything else is
//! reported as out of subset.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::estimation::Cost;
use crate::task::{ActionId, AtomId, GroundAction, GroundTask, State, TaskError};

#[derive(Debug, Error, PartialEq)]
pub enum PddlError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("out of subset: {0}")]
    OutOfSubset(String),
    #[error("undefined function `{0}`")]
    UndefinedFunction(String),
    #[error("undefined predicate `{0}`")]
    UndefinedPredicate(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("`{name}` expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("variable `{var}` is not a parameter of action `{action}`")]
    UnboundVariable { action: String, var: String },
    #[error("problem is for domain `{problem}` but domain is `{domain}`")]
    DomainMismatch { domain: String, problem: String },
    #[error("no value for cost term `{0}` in the problem's init")]
    MissingCostValue(String),
    #[error("invalid cost {value} for action `{action}`")]
    BadCost { action: String, value: f64 },
    #[error("malformed {0}")]
    Malformed(String),
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Sym(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Sym(..) => None,
        }
    }

    /// Head symbol of a list, lowercased at tokenization time.
    fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Sexp::sym)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Sym(s, _) => f.write_str(s),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn parse_sexp(text: &str) -> Result<Sexp, PddlError> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut done: Option<Sexp> = None;
    let mut line = 1;
    let mut chars = text.chars().peekable();
    let syntax = |line, message: &str| PddlError::Syntax { line, message: message.to_string() };
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            ';' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '(' => {
                if done.is_some() {
                    return Err(syntax(line, "text after the closing parenthesis"));
                }
                stack.push((Vec::new(), line));
            }
            ')' => {
                let (items, start) = stack.pop().ok_or_else(|| syntax(line, "unbalanced `)`"))?;
                let list = Sexp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => done = Some(list),
                }
            }
            c if c.is_whitespace() => {}
            c => {
                let mut sym = c.to_lowercase().to_string();
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    sym.extend(n.to_lowercase());
                    chars.next();
                }
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(Sexp::Sym(sym, line)),
                    None => return Err(syntax(line, "symbol outside of any list")),
                }
            }
        }
    }
    if let Some((_, start)) = stack.first() {
        return Err(syntax(*start, "unclosed `(`"));
    }
    done.ok_or_else(|| syntax(line, "empty input"))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CostExpr {
    /// No `total-cost` increase.
    None,
    Const(f64),
    Function {
        name: String,
        args: Vec<Term>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedAction {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub pre: Vec<AtomTemplate>,
    pub add: Vec<AtomTemplate>,
    pub del: Vec<AtomTemplate>,
    pub cost: CostExpr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedTask {
    pub domain: String,
    pub problem: String,
    /// Type to parent type; `object` is the root.
    pub types: HashMap<String, String>,
    /// Name and type, domain constants first.
    pub objects: Vec<(String, String)>,
    pub predicates: HashMap<String, Vec<String>>,
    pub functions: HashMap<String, Vec<String>>,
    pub actions: Vec<LiftedAction>,
    pub init: Vec<(String, Vec<String>)>,
    pub fluents: HashMap<(String, Vec<String>), f64>,
    pub goal: Vec<(String, Vec<String>)>,
}

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":action-costs"];

fn malformed(what: &str, e: &Sexp) -> PddlError {
    PddlError::Malformed(format!("{what}: {e}"))
}

/// `a b - t c` → `[(a, t), (b, t), (c, object)]`.
fn typed_list(items: &[Sexp], what: &str) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = items[i].sym().ok_or_else(|| malformed(what, &items[i]))?;
        if s == "-" {
            if items.get(i + 1).is_some_and(|t| t.list().is_some()) {
                return Err(PddlError::OutOfSubset("`either` types".into()));
            }
            let ty = items
                .get(i + 1)
                .and_then(Sexp::sym)
                .ok_or_else(|| PddlError::Malformed(format!("{what}: missing type after `-`")))?;
            out.extend(pending.drain(..).map(|n: String| (n, ty.to_string())));
            i += 2;
        } else {
            pending.push(s.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

fn expect_define<'a>(root: &'a Sexp, kind: &str) -> Result<(String, &'a [Sexp]), PddlError> {
    let items = root.list().ok_or_else(|| malformed("top level", root))?;
    if items.first().and_then(Sexp::sym) != Some("define") {
        return Err(malformed("expected (define ...)", root));
    }
    let header = items.get(1).and_then(Sexp::list).ok_or_else(|| malformed("define header", root))?;
    match header {
        [Sexp::Sym(k, _), Sexp::Sym(name, _)] if k == kind => Ok((name.clone(), &items[2..])),
        _ => Err(malformed(&format!("expected ({kind} <name>)"), &items[1])),
    }
}

struct DomainParts {
    name: String,
    types: HashMap<String, String>,
    constants: Vec<(String, String)>,
    predicates: HashMap<String, Vec<String>>,
    functions: HashMap<String, Vec<String>>,
    actions: Vec<LiftedAction>,
}

fn parse_domain(root: &Sexp) -> Result<DomainParts, PddlError> {
    let (name, sections) = expect_define(root, "domain")?;
    let mut d = DomainParts {
        name,
        types: HashMap::new(),
        constants: Vec::new(),
        predicates: HashMap::new(),
        functions: HashMap::new(),
        actions: Vec::new(),
    };
    let mut action_sections = Vec::new();
    for section in sections {
        let items = section.list().ok_or_else(|| malformed("domain section", section))?;
        match section.head() {
            Some(":requirements") => {
                for r in &items[1..] {
                    let r = r.sym().ok_or_else(|| malformed("requirement", r))?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(PddlError::OutOfSubset(format!("requirement {r}")));
                    }
                }
            }
            Some(":types") => {
                for (t, parent) in typed_list(&items[1..], "types")? {
                    d.types.insert(t, parent);
                }
            }
            Some(":constants") => d.constants = typed_list(&items[1..], "constants")?,
            Some(":predicates") => {
                for p in &items[1..] {
                    let l = p.list().ok_or_else(|| malformed("predicate", p))?;
                    let name = l.first().and_then(Sexp::sym).ok_or_else(|| malformed("predicate", p))?;
                    let params = typed_list(&l[1..], "predicate parameters")?;
                    d.predicates.insert(name.to_string(), params.into_iter().map(|(_, t)| t).collect());
                }
            }
            Some(":functions") => {
                let mut i = 1;
                while i < items.len() {
                    if items[i].sym() == Some("-") {
                        if items.get(i + 1).and_then(Sexp::sym) != Some("number") {
                            return Err(PddlError::OutOfSubset("non-numeric function".into()));
                        }
                        i += 2;
                        continue;
                    }
                    let l = items[i].list().ok_or_else(|| malformed("function", &items[i]))?;
                    let name = l.first().and_then(Sexp::sym).ok_or_else(|| malformed("function", &items[i]))?;
                    let params = typed_list(&l[1..], "function parameters")?;
                    d.functions.insert(name.to_string(), params.into_iter().map(|(_, t)| t).collect());
                    i += 1;
                }
            }
            Some(":action") => action_sections.push(items),
            Some(other) => return Err(PddlError::OutOfSubset(format!("domain section {other}"))),
            None => return Err(malformed("domain section", section)),
        }
    }
    for t in d.types.values().chain(d.constants.iter().map(|(_, t)| t)) {
        if t != "object" && !d.types.contains_key(t) {
            return Err(PddlError::UnknownType(t.clone()));
        }
    }
    for items in action_sections {
        let action = parse_action(items, &d)?;
        d.actions.push(action);
    }
    Ok(d)
}

fn parse_term(s: &Sexp, params: &[(String, String)], action: &str) -> Result<Term, PddlError> {
    let s = s.sym().ok_or_else(|| malformed("term", s))?;
    if s.starts_with('?') {
        if !params.iter().any(|(p, _)| p == s) {
            return Err(PddlError::UnboundVariable { action: action.to_string(), var: s.to_string() });
        }
        Ok(Term::Var(s.to_string()))
    } else {
        Ok(Term::Const(s.to_string()))
    }
}

fn parse_atom(e: &Sexp, d: &DomainParts, params: &[(String, String)], action: &str) -> Result<AtomTemplate, PddlError> {
    let l = e.list().ok_or_else(|| malformed("atom", e))?;
    let name = l.first().and_then(Sexp::sym).ok_or_else(|| malformed("atom", e))?;
    let arity = d.predicates.get(name).ok_or_else(|| PddlError::UndefinedPredicate(name.to_string()))?.len();
    if arity != l.len() - 1 {
        return Err(PddlError::Arity { name: name.to_string(), expected: arity, got: l.len() - 1 });
    }
    let args = l[1..].iter().map(|t| parse_term(t, params, action)).collect::<Result<_, _>>()?;
    Ok(AtomTemplate { predicate: name.to_string(), args })
}

fn conjuncts(e: &Sexp) -> &[Sexp] {
    match e.head() {
        Some("and") => &e.list().expect("has head")[1..],
        _ => match e.list() {
            Some([]) => &[],
            _ => std::slice::from_ref(e),
        },
    }
}

const CONNECTIVES: &[&str] = &["or", "not", "imply", "forall", "exists", "when", "=", "<", ">", "<=", ">="];

fn parse_action(items: &[Sexp], d: &DomainParts) -> Result<LiftedAction, PddlError> {
    let name = items.get(1).and_then(Sexp::sym).ok_or_else(|| PddlError::Malformed("action name".into()))?;
    let mut parameters = Vec::new();
    let mut precondition = None;
    let mut effect = None;
    let mut i = 2;
    while i < items.len() {
        let key = items[i].sym().ok_or_else(|| malformed("action body", &items[i]))?;
        let value = items.get(i + 1).ok_or_else(|| PddlError::Malformed(format!("{key} without a value")))?;
        match key {
            ":parameters" => {
                parameters = typed_list(value.list().ok_or_else(|| malformed("parameters", value))?, "parameters")?
            }
            ":precondition" => precondition = Some(value),
            ":effect" => effect = Some(value),
            other => return Err(PddlError::OutOfSubset(format!("action key {other}"))),
        }
        i += 2;
    }
    for (_, t) in &parameters {
        if t != "object" && !d.types.contains_key(t) {
            return Err(PddlError::UnknownType(t.clone()));
        }
    }
    let mut pre = Vec::new();
    if let Some(p) = precondition {
        for c in conjuncts(p) {
            if let Some(h) = c.head().filter(|h| CONNECTIVES.contains(h)) {
                let what =
                    if h == "not" { "negative preconditions".to_string() } else { format!("`{h}` in preconditions") };
                return Err(PddlError::OutOfSubset(what));
            }
            pre.push(parse_atom(c, d, &parameters, name)?);
        }
    }
    let (mut add, mut del, mut cost) = (Vec::new(), Vec::new(), CostExpr::None);
    if let Some(e) = effect {
        for c in conjuncts(e) {
            match c.head() {
                Some("not") => match c.list().expect("has head") {
                    [_, atom] => del.push(parse_atom(atom, d, &parameters, name)?),
                    _ => return Err(malformed("negated effect", c)),
                },
                Some("increase") => cost = parse_cost(c, d, &parameters, name)?,
                Some(h)
                    if CONNECTIVES.contains(&h) || ["decrease", "assign", "scale-up", "scale-down"].contains(&h) =>
                {
                    return Err(PddlError::OutOfSubset(format!("`{h}` in effects")));
                }
                _ => add.push(parse_atom(c, d, &parameters, name)?),
            }
        }
    }
    Ok(LiftedAction { name: name.to_string(), parameters, pre, add, del, cost })
}

fn parse_cost(e: &Sexp, d: &DomainParts, params: &[(String, String)], action: &str) -> Result<CostExpr, PddlError> {
    let l = e.list().expect("has head");
    let [_, target, value] = l else {
        return Err(malformed("increase effect", e));
    };
    if target.head() != Some("total-cost") || target.list().map(<[Sexp]>::len) != Some(1) {
        return Err(PddlError::OutOfSubset(format!("increase of {target}")));
    }
    if let Some(s) = value.sym() {
        let v: f64 = s.parse().map_err(|_| malformed("cost", value))?;
        return Ok(CostExpr::Const(v));
    }
    let items = value.list().expect("not a symbol");
    let fname = items.first().and_then(Sexp::sym).ok_or_else(|| malformed("cost", value))?;
    if ["+", "-", "*", "/"].contains(&fname) {
        return Err(PddlError::OutOfSubset(format!("arithmetic cost expression {value}")));
    }
    let arity = d.functions.get(fname).ok_or_else(|| PddlError::UndefinedFunction(fname.to_string()))?.len();
    if arity != items.len() - 1 {
        return Err(PddlError::Arity { name: fname.to_string(), expected: arity, got: items.len() - 1 });
    }
    let args = items[1..].iter().map(|t| parse_term(t, params, action)).collect::<Result<_, _>>()?;
    Ok(CostExpr::Function { name: fname.to_string(), args })
}

fn ground_atom(e: &Sexp) -> Result<(String, Vec<String>), PddlError> {
    let l = e.list().ok_or_else(|| malformed("ground atom", e))?;
    let syms: Option<Vec<&str>> = l.iter().map(Sexp::sym).collect();
    let syms = syms.filter(|s| !s.is_empty()).ok_or_else(|| malformed("ground atom", e))?;
    Ok((syms[0].to_string(), syms[1..].iter().map(|s| s.to_string()).collect()))
}

/// Parses a domain and problem into a lifted task.
pub fn parse_pddl(domain: &str, problem: &str) -> Result<LiftedTask, PddlError> {
    let d = parse_domain(&parse_sexp(domain)?)?;
    let root = parse_sexp(problem)?;
    let (problem_name, sections) = expect_define(&root, "problem")?;
    let mut objects = d.constants.clone();
    let mut init = Vec::new();
    let mut fluents = HashMap::new();
    let mut goal = Vec::new();
    for section in sections {
        let items = section.list().ok_or_else(|| malformed("problem section", section))?;
        match section.head() {
            Some(":domain") => {
                let name = items.get(1).and_then(Sexp::sym).unwrap_or_default();
                if name != d.name {
                    return Err(PddlError::DomainMismatch { domain: d.name.clone(), problem: name.to_string() });
                }
            }
            Some(":objects") => objects.extend(typed_list(&items[1..], "objects")?),
            Some(":init") => {
                for fact in &items[1..] {
                    if fact.head() == Some("=") {
                        let [_, term, value] = fact.list().expect("has head") else {
                            return Err(malformed("fluent assignment", fact));
                        };
                        let (name, args) = ground_atom(term)?;
                        if !d.functions.contains_key(&name) {
                            return Err(PddlError::UndefinedFunction(name));
                        }
                        let v: f64 =
                            value.sym().and_then(|s| s.parse().ok()).ok_or_else(|| malformed("fluent value", value))?;
                        fluents.insert((name, args), v);
                    } else {
                        init.push(ground_atom(fact)?);
                    }
                }
            }
            Some(":goal") => {
                let g = items.get(1).ok_or_else(|| malformed("goal", section))?;
                for c in conjuncts(g) {
                    if let Some(h) = c.head().filter(|h| CONNECTIVES.contains(h)) {
                        return Err(PddlError::OutOfSubset(format!("`{h}` in goal")));
                    }
                    goal.push(ground_atom(c)?);
                }
            }
            Some(":metric") => {
                let ok = matches!(items, [_, m, t] if m.sym() == Some("minimize") && t.head() == Some("total-cost"));
                if !ok {
                    return Err(PddlError::OutOfSubset(format!("metric {section}")));
                }
            }
            Some(other) => return Err(PddlError::OutOfSubset(format!("problem section {other}"))),
            None => return Err(malformed("problem section", section)),
        }
    }
    let known: HashSet<&str> = objects.iter().map(|(o, _)| o.as_str()).collect();
    for (_, t) in &objects {
        if t != "object" && !d.types.contains_key(t) {
            return Err(PddlError::UnknownType(t.clone()));
        }
    }
    for (pred, args) in init.iter().chain(&goal) {
        let arity = d.predicates.get(pred).ok_or_else(|| PddlError::UndefinedPredicate(pred.clone()))?.len();
        if arity != args.len() {
            return Err(PddlError::Arity { name: pred.clone(), expected: arity, got: args.len() });
        }
        if let Some(a) = args.iter().find(|a| !known.contains(a.as_str())) {
            return Err(PddlError::UnknownObject(a.clone()));
        }
    }
    for a in &d.actions {
        for atom in a.pre.iter().chain(&a.add).chain(&a.del) {
            for t in &atom.args {
                if let Term::Const(c) = t {
                    if !known.contains(c.as_str()) {
                        return Err(PddlError::UnknownObject(c.clone()));
                    }
                }
            }
        }
    }
    let mut actions = d.actions;
    actions.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(LiftedTask {
        domain: d.name,
        problem: problem_name,
        types: d.types,
        objects,
        predicates: d.predicates,
        functions: d.functions,
        actions,
        init,
        fluents,
        goal,
    })
}

/// One instantiated action template.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundedAction {
    pub name: String,
    pub pre: Vec<String>,
    pub add: Vec<String>,
    pub del: Vec<String>,
    pub cost: Cost,
}

fn atom_name(pred: &str, args: &[String]) -> String {
    if args.is_empty() {
        pred.to_string()
    } else {
        format!("{pred}({})", args.join(","))
    }
}

impl LiftedTask {
    fn is_subtype<'s>(&'s self, mut t: &'s str, target: &str) -> bool {
        loop {
            if t == target || target == "object" {
                return true;
            }
            match self.types.get(t) {
                Some(parent) if parent != t => t = parent,
                _ => return false,
            }
        }
    }

    /// Objects usable for a parameter of type `ty`, sorted by name.
    fn domain_of(&self, ty: &str) -> Vec<String> {
        let set: BTreeSet<&str> =
            self.objects.iter().filter(|(_, t)| self.is_subtype(t, ty)).map(|(o, _)| o.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Number of candidate bindings of every action template.
    pub fn candidate_counts(&self) -> Vec<(String, usize)> {
        self.actions
            .iter()
            .map(|a| (a.name.clone(), a.parameters.iter().map(|(_, t)| self.domain_of(t).len()).product()))
            .collect()
    }
}

fn bind(args: &[Term], params: &[(String, String)], binding: &[usize], domains: &[Vec<String>]) -> Vec<String> {
    args.iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => {
                let i = params.iter().position(|(p, _)| p == v).expect("checked at parse time");
                domains[i][binding[i]].clone()
            }
        })
        .collect()
}

/// Instantiates every action template over the typed objects, in order of
/// template name and then bound objects.
///
/// With `prune`, bindings that violate a static precondition are skipped and
/// actions unreachable under delete relaxation are dropped.
pub fn ground(lifted: &LiftedTask, prune: bool) -> Result<Vec<GroundedAction>, PddlError> {
    let mutable: HashSet<&str> =
        lifted.actions.iter().flat_map(|a| a.add.iter().chain(&a.del)).map(|t| t.predicate.as_str()).collect();
    let init: HashSet<String> = lifted.init.iter().map(|(p, a)| atom_name(p, a)).collect();
    let mut out = Vec::new();
    for action in &lifted.actions {
        let domains: Vec<Vec<String>> = action.parameters.iter().map(|(_, t)| lifted.domain_of(t)).collect();
        if domains.iter().any(Vec::is_empty) {
            continue;
        }
        let mut binding = vec![0usize; domains.len()];
        'bindings: loop {
            let inst = |atoms: &[AtomTemplate]| -> Vec<String> {
                atoms
                    .iter()
                    .map(|a| atom_name(&a.predicate, &bind(&a.args, &action.parameters, &binding, &domains)))
                    .collect()
            };
            let pre = inst(&action.pre);
            let static_ok = !prune
                || action
                    .pre
                    .iter()
                    .zip(&pre)
                    .all(|(t, name)| mutable.contains(t.predicate.as_str()) || init.contains(name));
            if static_ok {
                let add = inst(&action.add);
                let mut del = inst(&action.del);
                del.retain(|d| !add.contains(d));
                let args: Vec<String> = (0..domains.len()).map(|i| domains[i][binding[i]].clone()).collect();
                let name = atom_name(&action.name, &args);
                let cost = match &action.cost {
                    CostExpr::None => 0.0,
                    CostExpr::Const(c) => *c,
                    CostExpr::Function { name: f, args } => {
                        let key = (f.clone(), bind(args, &action.parameters, &binding, &domains));
                        *lifted
                            .fluents
                            .get(&key)
                            .ok_or_else(|| PddlError::MissingCostValue(atom_name(&key.0, &key.1)))?
                    }
                };
                if !(cost.is_finite() && cost >= 0.0) {
                    return Err(PddlError::BadCost { action: name, value: cost });
                }
                out.push(GroundedAction { name, pre, add, del, cost });
            }
            // Odometer increment, last parameter fastest.
            let mut k = domains.len();
            loop {
                if k == 0 {
                    break 'bindings;
                }
                k -= 1;
                binding[k] += 1;
                if binding[k] < domains[k].len() {
                    continue 'bindings;
                }
                binding[k] = 0;
            }
        }
    }
    if prune {
        out = relaxed_reachable(out, &init);
    }
    Ok(out)
}

fn relaxed_reachable(actions: Vec<GroundedAction>, init: &HashSet<String>) -> Vec<GroundedAction> {
    let mut reached: HashSet<&str> = init.iter().map(String::as_str).collect();
    let mut usable = vec![false; actions.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for (i, a) in actions.iter().enumerate() {
            if !usable[i] && a.pre.iter().all(|p| reached.contains(p.as_str())) {
                usable[i] = true;
                changed = true;
                reached.extend(a.add.iter().map(String::as_str));
            }
        }
    }
    actions.into_iter().zip(usable).filter_map(|(a, u)| u.then_some(a)).collect()
}

/// A grounded PDDL task with the cost every action declares.
#[derive(Clone, Debug)]
pub struct PddlTask {
    pub task: GroundTask,
    pub costs: Vec<Cost>,
}

/// Parses, grounds and builds a task. Atoms are the sorted set of all atoms
/// mentioned by the initial state, the goal and the ground actions.
pub fn load_pddl(domain: &str, problem: &str, prune: bool) -> Result<PddlTask, PddlError> {
    let lifted = parse_pddl(domain, problem)?;
    let grounded = ground(&lifted, prune)?;
    let init: Vec<String> = lifted.init.iter().map(|(p, a)| atom_name(p, a)).collect();
    let goal: Vec<String> = lifted.goal.iter().map(|(p, a)| atom_name(p, a)).collect();
    let mut names: BTreeSet<&str> = init.iter().chain(&goal).map(String::as_str).collect();
    for a in &grounded {
        names.extend(a.pre.iter().chain(&a.add).chain(&a.del).map(String::as_str));
    }
    let names: Vec<String> = names.into_iter().map(str::to_string).collect();
    let index: HashMap<&str, AtomId> = names.iter().enumerate().map(|(i, n)| (n.as_str(), AtomId(i as u32))).collect();
    let ids = |v: &[String]| v.iter().map(|n| index[n.as_str()]).collect::<Vec<_>>();
    let actions = grounded
        .iter()
        .enumerate()
        .map(|(i, a)| GroundAction::new(ActionId(i as u32), a.name.clone(), ids(&a.pre), ids(&a.add), ids(&a.del)))
        .collect();
    let initial = State::from_atoms(names.len(), ids(&init));
    let goal = ids(&goal);
    let costs = grounded.iter().map(|a| a.cost).collect();
    let task = GroundTask::new(names.clone(), actions, initial, goal)?;
    Ok(PddlTask { task, costs })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const DOMAIN: &str = r#"
(define (domain transport)
  (:requirements :strips :typing :action-costs)
  (:types truck location - object)
  (:predicates (at ?t - truck ?l - location) (road ?l1 ?l2 - location))
  (:functions (total-cost) - number (road-length ?l1 ?l2 - location) - number)
  ; the motivating drive action
  (:action drive
    :parameters (?t - truck ?l1 ?l2 - location)
    :precondition (and (at ?t ?l1) (road ?l1 ?l2))
    :effect (and (not (at ?t ?l1)) (at ?t ?l2)
                 (increase (total-cost) (road-length ?l1 ?l2)))))
"#;

    const PROBLEM: &str = r#"
(define (problem toy) (:domain transport)
  (:objects t1 t2 - truck a b c - location)
  (:init (at t1 a) (at t2 b)
         (road a b) (road b a) (road b c) (road c b) (road c c)
         (= (road-length a b) 3) (= (road-length b a) 3)
         (= (road-length b c) 5) (= (road-length c b) 5) (= (road-length c c) 1)
         (= (total-cost) 0))
  (:goal (and (at t1 c)))
  (:metric minimize (total-cost)))
"#;

    #[test]
    fn drive_template_has_three_parameters() {
        let l = parse_pddl(DOMAIN, PROBLEM).unwrap();
        assert_eq!(l.actions.len(), 1);
        assert_eq!(l.actions[0].parameters.len(), 3);
        assert_eq!(l.candidate_counts(), vec![("drive".to_string(), 2 * 3 * 3)]);
    }

    #[test]
    fn grounding_counts() {
        let l = parse_pddl(DOMAIN, PROBLEM).unwrap();
        // 5 roads × 2 trucks pass the static road check.
        let g = ground(&l, true).unwrap();
        assert_eq!(g.len(), 10);
        assert!(g.iter().any(|a| a.name == "drive(t1,c,c)"));
        assert!(!g.iter().any(|a| a.name == "drive(t1,a,a)"));
        let names: Vec<&str> = g.iter().map(|a| a.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        let cc = g.iter().find(|a| a.name == "drive(t1,c,c)").unwrap();
        assert!(cc.del.is_empty(), "add wins over delete");
        assert_eq!(g.iter().find(|a| a.name == "drive(t2,b,c)").unwrap().cost, 5.0);
        // Without pruning, missing road-length values for non-roads are errors.
        assert!(matches!(ground(&l, false), Err(PddlError::MissingCostValue(_))));
    }

    #[test]
    fn loads_task() {
        let p = load_pddl(DOMAIN, PROBLEM, true).unwrap();
        assert_eq!(p.task.action_count(), 10);
        assert_eq!(p.costs.len(), 10);
        assert!(p.task.atoms().iter().any(|a| a.name == "at(t1,c)"));
    }

    #[test]
    fn out_of_subset_requirement() {
        let d = DOMAIN.replace(":action-costs)", ":action-costs :disjunctive-preconditions)");
        let err = parse_pddl(&d, PROBLEM).unwrap_err();
        assert_eq!(err, PddlError::OutOfSubset("requirement :disjunctive-preconditions".into()));
        assert!(err.to_string().starts_with("out of subset"));
    }

    #[test]
    fn undefined_cost_function() {
        let d = DOMAIN.replace("(road-length ?l1 ?l2)))", "(distance ?l1 ?l2)))");
        assert_eq!(parse_pddl(&d, PROBLEM).unwrap_err(), PddlError::UndefinedFunction("distance".into()));
    }

    #[test]
    fn template_without_bindings() {
        let p = PROBLEM.replace("t1 t2 - truck", "");
        let p = p.replace("(at t1 a) (at t2 b)", "").replace("(at t1 c)", "(road a b)");
        let l = parse_pddl(DOMAIN, &p).unwrap();
        assert!(ground(&l, true).unwrap().is_empty());
    }

    #[test]
    fn syntax_errors_report_lines() {
        let err = parse_pddl("(define (domain x)\n(:predicates (p)", PROBLEM).unwrap_err();
        assert!(matches!(err, PddlError::Syntax { line: 1, .. }), "{err:?}");
    }
}
