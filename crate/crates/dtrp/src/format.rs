//! Domain files: a JSON document with the sections `attributes`, `constants`,
//! `actions`, `network`, `initial`, `utility` and `priorities`.
//!
//! ```json
//! {
//!   "attributes": [{"name": "cost", "kind": "numeric", "default": 0, "range": [0, 1000]},
//!                  {"name": "dvt", "kind": "boolean", "default": false}],
//!   "constants": {"COST_FATALITY": 100000},
//!   "actions": {
//!     "IPG": {"branches": [
//!       {"when": "dvt = 1", "prob": 0.85, "effects": {"cost": "cost + 120", "pos": "1"}},
//!       {"when": "dvt = 1", "prob": 0.15, "effects": {"cost": "cost + 120"}},
//!       {"when": "dvt = 0", "prob": 1, "effects": {"cost": "cost + 120"}}]},
//!     "Test": {"abstract": ["IPG", "RUS"], "grouping": [["IPG#0", "RUS#0"], ["IPG#1", "RUS#1"]]},
//!     "Root": {"decompose": ["Test", "Treat"]}
//!   },
//!   "network": {"root": "Root"},
//!   "initial": {"dvt": true},
//!   "utility": {"k_r": 1, "ug": [{"when": "true", "value": "0"}],
//!               "ur": [{"when": "dead = 1", "value": "-(cost + COST_FATALITY)"},
//!                      {"when": "dead = 0", "value": "-cost"}]},
//!   "priorities": {"Test": 2}
//! }
//! ```
//!
//! Action ids follow the order of the `actions` object, so a serialised
//! domain parses back to the identical value. Expressions and conditions use
//! the language in [`crate::syntax`].

use std::collections::BTreeMap;

use dtrp_core::abstraction::{BranchGrouping, BranchRef};
use dtrp_core::model::{AttrId, AttrKind, AttributeDecl, Effect};
use dtrp_core::{ActionDef, ActionKind, Branch, Domain, Guarded, Interval, UtilityModel};
use serde_json::{json, Map, Value};

use crate::syntax::{self, Names, SyntaxError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{field}: `{name}` is not declared")]
    Reference { field: String, name: String },
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("{field}, column {column}: {message}")]
    Expression { field: String, column: usize, message: String },
}

type Result<T> = std::result::Result<T, FormatError>;

fn schema<T>(field: &str, message: impl Into<String>) -> Result<T> {
    Err(FormatError::Schema {
        field: field.to_string(),
        message: message.into(),
    })
}

fn reference<T>(field: &str, name: &str) -> Result<T> {
    Err(FormatError::Reference {
        field: field.to_string(),
        name: name.to_string(),
    })
}

fn lift(field: &str, e: SyntaxError) -> FormatError {
    match e.unresolved {
        Some(name) => FormatError::Reference {
            field: field.to_string(),
            name,
        },
        None => FormatError::Expression {
            field: field.to_string(),
            column: e.column,
            message: e.message,
        },
    }
}

struct Vocab<'a> {
    attributes: &'a [AttributeDecl],
    constants: &'a [(String, f64)],
}

impl Names for Vocab<'_> {
    fn attr(&self, name: &str) -> Option<AttrId> {
        self.attributes.iter().position(|a| a.name == name)
    }
    fn constant(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|(n, _)| n == name)
    }
    fn attr_name(&self, a: AttrId) -> &str {
        self.attributes.get(a).map(|x| x.name.as_str()).unwrap_or("?")
    }
    fn constant_name(&self, c: usize) -> &str {
        self.constants.get(c).map(|x| x.0.as_str()).unwrap_or("?")
    }
}

fn object<'v>(v: &'v Value, field: &str) -> Result<&'v Map<String, Value>> {
    v.as_object().map_or_else(|| schema(field, "expected an object"), Ok)
}

fn array<'v>(v: &'v Value, field: &str) -> Result<&'v Vec<Value>> {
    v.as_array().map_or_else(|| schema(field, "expected an array"), Ok)
}

fn string<'v>(v: &'v Value, field: &str) -> Result<&'v str> {
    v.as_str().map_or_else(|| schema(field, "expected a string"), Ok)
}

fn number(v: &Value, field: &str) -> Result<f64> {
    v.as_f64().map_or_else(|| schema(field, "expected a number"), Ok)
}

fn required<'v>(m: &'v Map<String, Value>, key: &str, field: &str) -> Result<&'v Value> {
    m.get(key)
        .map_or_else(|| schema(&format!("{field}.{key}"), "missing"), Ok)
}

fn only_keys(m: &Map<String, Value>, allowed: &[&str], field: &str) -> Result<()> {
    match m.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => schema(&format!("{field}.{k}"), "unknown key"),
        None => Ok(()),
    }
}

fn interval(v: &Value, field: &str) -> Result<Interval> {
    if let Some(x) = v.as_f64() {
        return Ok(Interval::point(x));
    }
    match v.as_array().map(|a| a.as_slice()) {
        Some([lo, hi]) => {
            let (lo, hi) = (number(lo, field)?, number(hi, field)?);
            Interval::checked(lo, hi).map_or_else(|| schema(field, format!("malformed interval [{lo}, {hi}]")), Ok)
        }
        _ => schema(field, "expected a number or a [lo, hi] pair"),
    }
}

fn attributes(v: &Value) -> Result<Vec<AttributeDecl>> {
    let mut out = Vec::new();
    for (i, a) in array(v, "attributes")?.iter().enumerate() {
        let field = format!("attributes[{i}]");
        let m = object(a, &field)?;
        only_keys(m, &["name", "kind", "default", "range"], &field)?;
        let name = string(required(m, "name", &field)?, &format!("{field}.name"))?;
        if !is_identifier(name) {
            return schema(&format!("{field}.name"), format!("`{name}` is not an identifier"));
        }
        let kind = match m.get("kind").map(|k| string(k, &format!("{field}.kind"))).transpose()? {
            None | Some("numeric") => AttrKind::Numeric,
            Some("boolean") => AttrKind::Boolean,
            Some(k) => return schema(&format!("{field}.kind"), format!("unknown kind `{k}`")),
        };
        let default = match m.get("default") {
            None => 0.0,
            Some(Value::Bool(b)) if kind == AttrKind::Boolean => f64::from(u8::from(*b)),
            Some(d) => number(d, &format!("{field}.default"))?,
        };
        let mut decl = match kind {
            AttrKind::Numeric => AttributeDecl::numeric(name, default),
            AttrKind::Boolean => AttributeDecl::boolean(name, default != 0.0),
        };
        decl.default = default;
        if let Some(r) = m.get("range") {
            decl.range = Some(interval(r, &format!("{field}.range"))?);
        }
        out.push(decl);
    }
    Ok(out)
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "true"
        && s != "false"
}

fn constants(v: Option<&Value>) -> Result<Vec<(String, f64)>> {
    let Some(v) = v else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for (k, x) in object(v, "constants")? {
        if !is_identifier(k) {
            return schema(&format!("constants.{k}"), "not an identifier");
        }
        out.push((k.clone(), number(x, &format!("constants.{k}"))?));
    }
    Ok(out)
}

fn branches(v: &Value, field: &str, names: &Vocab) -> Result<Vec<Branch>> {
    let mut out = Vec::new();
    for (i, b) in array(v, field)?.iter().enumerate() {
        let field = format!("{field}[{i}]");
        let m = object(b, &field)?;
        only_keys(m, &["when", "prob", "effects"], &field)?;
        let when_field = format!("{field}.when");
        let condition = match m.get("when") {
            None => dtrp_core::Condition::TRUE,
            Some(w) => syntax::parse_condition(string(w, &when_field)?, names).map_err(|e| lift(&when_field, e))?,
        };
        let prob = interval(required(m, "prob", &field)?, &format!("{field}.prob"))?;
        let mut assignments = Vec::new();
        if let Some(e) = m.get("effects") {
            for (attr, expr) in object(e, &format!("{field}.effects"))? {
                let f = format!("{field}.effects.{attr}");
                let Some(a) = names.attr(attr) else {
                    return reference(&f, attr);
                };
                let e = syntax::parse_expr(string(expr, &f)?, names).map_err(|e| lift(&f, e))?;
                assignments.push((a, e));
            }
        }
        let effect = Effect::new(assignments).or_else(|e| schema(&format!("{field}.effects"), e.to_string()))?;
        out.push(Branch::new(condition, prob, effect));
    }
    Ok(out)
}

fn guarded(v: &Value, field: &str, names: &Vocab) -> Result<Vec<Guarded>> {
    let mut out = Vec::new();
    for (i, g) in array(v, field)?.iter().enumerate() {
        let field = format!("{field}[{i}]");
        let m = object(g, &field)?;
        only_keys(m, &["when", "value"], &field)?;
        let when_field = format!("{field}.when");
        let guard = match m.get("when") {
            None => dtrp_core::Condition::TRUE,
            Some(w) => syntax::parse_condition(string(w, &when_field)?, names).map_err(|e| lift(&when_field, e))?,
        };
        let value_field = format!("{field}.value");
        let value = match required(m, "value", &field)? {
            Value::Number(n) => dtrp_core::AffineExpr::constant(Interval::point(n.as_f64().unwrap_or(0.0))),
            other => syntax::parse_expr(string(other, &value_field)?, names).map_err(|e| lift(&value_field, e))?,
        };
        out.push(Guarded { guard, value });
    }
    Ok(out)
}

fn names_list<'v>(v: &'v Value, field: &str) -> Result<Vec<&'v str>> {
    array(v, field)?
        .iter()
        .enumerate()
        .map(|(i, x)| string(x, &format!("{field}[{i}]")))
        .collect()
}

fn grouping(v: &Value, field: &str, inputs: &[&str]) -> Result<BranchGrouping> {
    let mut groups = Vec::new();
    for (gi, g) in array(v, field)?.iter().enumerate() {
        let mut group = Vec::new();
        for (ri, r) in array(g, &format!("{field}[{gi}]"))?.iter().enumerate() {
            let f = format!("{field}[{gi}][{ri}]");
            let s = string(r, &f)?;
            let Some((name, b)) = s.rsplit_once('#') else {
                return schema(&f, format!("`{s}` is not of the form ACTION#BRANCH"));
            };
            let Ok(branch) = b.parse::<usize>() else {
                return schema(&f, format!("`{b}` is not a branch index"));
            };
            let Some(input) = inputs.iter().position(|x| *x == name) else {
                return reference(&f, name);
            };
            group.push(BranchRef { input, branch });
        }
        groups.push(group);
    }
    Ok(BranchGrouping { groups })
}

/// Parses a domain document. Structural invariants beyond the schema (cycles,
/// probability sums, exhaustiveness) are left to [`dtrp_core::validate_domain`].
pub fn parse_domain(text: &str) -> Result<Domain> {
    if text.trim().is_empty() {
        return Err(FormatError::Syntax {
            line: 1,
            column: 1,
            message: "empty document".into(),
        });
    }
    let doc: Value = serde_json::from_str(text).map_err(|e| FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let top = object(&doc, "document")?;
    only_keys(
        top,
        &["attributes", "constants", "actions", "network", "initial", "utility", "priorities"],
        "document",
    )?;
    let attributes = attributes(required(top, "attributes", "document")?)?;
    let constants = constants(top.get("constants"))?;
    let names = Vocab {
        attributes: &attributes,
        constants: &constants,
    };

    let acts = object(required(top, "actions", "document")?, "actions")?;
    let ids: BTreeMap<&str, usize> = acts.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let resolve = |field: &str, list: &[&str]| -> Result<Vec<usize>> {
        list.iter()
            .map(|n| ids.get(n).copied().map_or_else(|| reference(field, n), Ok))
            .collect()
    };
    let mut actions = Vec::with_capacity(acts.len());
    for (name, body) in acts {
        let field = format!("actions.{name}");
        let m = object(body, &field)?;
        let present: Vec<&str> = ["branches", "abstract", "decompose"]
            .into_iter()
            .filter(|k| m.contains_key(*k))
            .collect();
        let def = match present.as_slice() {
            ["branches"] => {
                only_keys(m, &["branches"], &field)?;
                ActionDef::primitive(name, branches(&m["branches"], &format!("{field}.branches"), &names)?)
            }
            ["abstract"] => {
                only_keys(m, &["abstract", "grouping"], &field)?;
                let f = format!("{field}.abstract");
                let list = names_list(&m["abstract"], &f)?;
                let mut def = ActionDef::abstraction(name, resolve(&f, &list)?);
                if let Some(g) = m.get("grouping") {
                    def.grouping = Some(grouping(g, &format!("{field}.grouping"), &list)?);
                }
                def
            }
            ["decompose"] => {
                only_keys(m, &["decompose"], &field)?;
                let f = format!("{field}.decompose");
                ActionDef::decomposition(name, resolve(&f, &names_list(&m["decompose"], &f)?)?)
            }
            _ => return schema(&field, "expected exactly one of `branches`, `abstract`, `decompose`"),
        };
        actions.push(def);
    }

    let network = object(required(top, "network", "document")?, "network")?;
    only_keys(network, &["root"], "network")?;
    let root_name = string(required(network, "root", "network")?, "network.root")?;
    let root = resolve("network.root", &[root_name])?[0];

    let mut initial: Vec<f64> = attributes.iter().map(|a| a.default).collect();
    if let Some(v) = top.get("initial") {
        for (k, x) in object(v, "initial")? {
            let f = format!("initial.{k}");
            let Some(a) = names.attr(k) else {
                return reference(&f, k);
            };
            initial[a] = match x {
                Value::Bool(b) => f64::from(u8::from(*b)),
                other => number(other, &f)?,
            };
        }
    }

    let u = object(required(top, "utility", "document")?, "utility")?;
    only_keys(u, &["k_r", "ug", "ur"], "utility")?;
    let zero = UtilityModel::zero();
    let utility = UtilityModel {
        ug: match u.get("ug") {
            Some(v) => guarded(v, "utility.ug", &names)?,
            None => zero.ug,
        },
        ur: match u.get("ur") {
            Some(v) => guarded(v, "utility.ur", &names)?,
            None => zero.ur,
        },
        k_r: match u.get("k_r") {
            Some(v) => number(v, "utility.k_r")?,
            None => 1.0,
        },
    };

    let mut priorities = BTreeMap::new();
    if let Some(v) = top.get("priorities") {
        for (k, x) in object(v, "priorities")? {
            let f = format!("priorities.{k}");
            let Some(&a) = ids.get(k.as_str()) else {
                return reference(&f, k);
            };
            let Some(p) = x.as_i64() else {
                return schema(&f, "expected an integer");
            };
            priorities.insert(a, p);
        }
    }

    Ok(Domain {
        attributes,
        constants,
        actions,
        root,
        initial,
        utility,
        priorities,
    })
}

fn num(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

fn interval_value(i: Interval) -> Value {
    if i.is_point() {
        num(i.lo())
    } else {
        json!([num(i.lo()), num(i.hi())])
    }
}

fn guarded_value(gs: &[Guarded], names: &Vocab) -> Value {
    Value::Array(
        gs.iter()
            .map(|g| {
                json!({
                    "when": syntax::format_condition(&g.guard, names),
                    "value": syntax::format_expr(&g.value, names),
                })
            })
            .collect(),
    )
}

/// Pretty-printed document that [`parse_domain`] maps back to `d`.
pub fn serialize_domain(d: &Domain) -> String {
    let names = Vocab {
        attributes: &d.attributes,
        constants: &d.constants,
    };
    let attributes: Vec<Value> = d
        .attributes
        .iter()
        .map(|a| {
            let mut m = Map::new();
            m.insert("name".into(), json!(a.name));
            match a.kind {
                AttrKind::Numeric => {
                    m.insert("kind".into(), json!("numeric"));
                    m.insert("default".into(), num(a.default));
                    if let Some(r) = a.range {
                        m.insert("range".into(), json!([num(r.lo()), num(r.hi())]));
                    }
                }
                AttrKind::Boolean => {
                    m.insert("kind".into(), json!("boolean"));
                    if a.default == 0.0 || a.default == 1.0 {
                        m.insert("default".into(), json!(a.default == 1.0));
                    } else {
                        m.insert("default".into(), num(a.default));
                    }
                    if a.range != Some(Interval::UNIT) {
                        if let Some(r) = a.range {
                            m.insert("range".into(), json!([num(r.lo()), num(r.hi())]));
                        }
                    }
                }
            }
            Value::Object(m)
        })
        .collect();
    let constants: Map<String, Value> = d.constants.iter().map(|(n, v)| (n.clone(), num(*v))).collect();
    let mut actions = Map::new();
    for a in &d.actions {
        let body = match a.kind {
            ActionKind::Primitive => {
                let bs: Vec<Value> = a
                    .branches
                    .iter()
                    .map(|b| {
                        let effects: Map<String, Value> = b
                            .effect
                            .assignments()
                            .iter()
                            .map(|(x, e)| (names.attr_name(*x).to_string(), json!(syntax::format_expr(e, &names))))
                            .collect();
                        json!({
                            "when": syntax::format_condition(&b.condition, &names),
                            "prob": interval_value(b.prob),
                            "effects": effects,
                        })
                    })
                    .collect();
                json!({ "branches": bs })
            }
            ActionKind::Abstract => {
                let insts: Vec<&str> = a.instantiations.iter().map(|i| d.action_name(*i)).collect();
                let mut m = Map::new();
                m.insert("abstract".into(), json!(insts));
                if let Some(g) = &a.grouping {
                    let groups: Vec<Vec<String>> = g
                        .groups
                        .iter()
                        .map(|grp| grp.iter().map(|r| format!("{}#{}", insts[r.input], r.branch)).collect())
                        .collect();
                    m.insert("grouping".into(), json!(groups));
                }
                Value::Object(m)
            }
            ActionKind::Decomposable => {
                json!({ "decompose": d.plan_names(&a.subplan) })
            }
        };
        actions.insert(a.name.clone(), body);
    }
    let initial: Map<String, Value> = d
        .attributes
        .iter()
        .zip(&d.initial)
        .map(|(a, v)| {
            let v = match a.kind {
                AttrKind::Boolean if *v == 0.0 || *v == 1.0 => json!(*v == 1.0),
                _ => num(*v),
            };
            (a.name.clone(), v)
        })
        .collect();
    let priorities: Map<String, Value> = d
        .priorities
        .iter()
        .map(|(a, p)| (d.action_name(*a).to_string(), json!(p)))
        .collect();
    let doc = json!({
        "attributes": attributes,
        "constants": constants,
        "actions": actions,
        "network": { "root": d.action_name(d.root) },
        "initial": initial,
        "utility": {
            "k_r": num(d.utility.k_r),
            "ug": guarded_value(&d.utility.ug, &names),
            "ur": guarded_value(&d.utility.ur, &names),
        },
        "priorities": priorities,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json values serialise");
    s.push('\n');
    s
}
