use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use crate::graph::BayesNet;
use crate::idiom::IdiomInstance;

use super::{CptDecl, Decl, Declaration, ModelDocument};

/// Plain decimal with at most 12 significant digits and no trailing zeros.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i64 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let point = exp + 1;
    let mut out = String::new();
    if v < 0.0 {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.push_str(&"0".repeat(point.unsigned_abs() as usize));
        out.push_str(digits);
    } else if point as usize >= digits.len() {
        out.push_str(digits);
        out.push_str(&"0".repeat(point as usize - digits.len()));
    } else {
        let (int, frac) = digits.split_at(point as usize);
        out.push_str(int);
        out.push('.');
        out.push_str(frac);
    }
    out
}

fn numbers(values: &[f64]) -> String {
    values.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(", ")
}

fn comment_lines(out: &mut String, comments: &[String]) {
    for c in comments {
        out.push('#');
        out.push_str(c);
        out.push('\n');
    }
}

fn decl_text(doc: &ModelDocument, body: &Decl) -> String {
    match body {
        Decl::Variable(v) => format!(
            "variable {} {{ states: {}; role: {} }}\n",
            v.name,
            v.states.join(", "),
            v.role.keyword()
        ),
        Decl::Idiom(i) => {
            let mut slots: Vec<_> = i.bindings.iter().collect();
            let rank = |s: &str| i.template.template().slots.iter().position(|t| t.name == s);
            slots.sort_by_key(|b| (rank(&b.slot), b.slot.clone()));
            let mut out = format!("idiom {} {} {{", i.template.keyword(), i.name);
            for b in slots {
                if b.variables.len() == 1 {
                    let _ = write!(out, " {}: {};", b.slot, b.variables[0]);
                } else {
                    let _ = write!(out, " {}: [{}];", b.slot, b.variables.join(", "));
                }
            }
            out.push_str(" }\n");
            out
        }
        Decl::Edge(e) => format!("edge {} {} {}\n", e.from, if e.decision { "=>" } else { "->" }, e.to),
        Decl::Cpt(c) if c.parents.is_empty() => {
            let values = c.rows.first().map_or_else(String::new, |r| numbers(&r.probabilities));
            format!("cpt {} {{ prior: {values}; }}\n", c.child)
        }
        Decl::Cpt(c) => {
            let mut out = format!("cpt {} given ({}) {{\n", c.child, c.parents.join(", "));
            for row in sorted_rows(doc, c) {
                let _ = writeln!(out, "  row({}): {};", row.given.join(", "), numbers(&row.probabilities));
            }
            out.push_str("}\n");
            out
        }
    }
}

/// Rows in parent-state order, the last parent varying fastest.
fn sorted_rows<'a>(doc: &ModelDocument, c: &'a CptDecl) -> Vec<&'a super::CptRow> {
    let index = |parent: &str, state: &str| {
        doc.variable(parent)
            .and_then(|v| v.states.iter().position(|s| s == state))
            .unwrap_or(usize::MAX)
    };
    let mut rows: Vec<_> = c.rows.iter().collect();
    rows.sort_by_key(|r| {
        r.given
            .iter()
            .zip(&c.parents)
            .map(|(s, p)| (index(p, s), s.clone()))
            .collect::<Vec<_>>()
    });
    rows
}

fn section<'a>(
    doc: &'a ModelDocument,
    pick: impl Fn(&'a Decl) -> Option<String>,
) -> Option<String> {
    let mut items: Vec<(String, &Declaration)> = doc
        .declarations
        .iter()
        .filter_map(|d| pick(&d.body).map(|key| (key, d)))
        .collect();
    if items.is_empty() {
        return None;
    }
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    for (_, d) in items {
        comment_lines(&mut out, &d.comments);
        out.push_str(&decl_text(doc, &d.body));
    }
    Some(out)
}

/// Canonical text: header, then variables, idioms, edges and CPTs, each
/// section sorted by name and separated by a blank line.
pub fn serialize(doc: &ModelDocument) -> String {
    let mut blocks = Vec::new();
    if !doc.header.is_empty() {
        let mut h = String::new();
        comment_lines(&mut h, &doc.header);
        blocks.push(h);
    }
    blocks.extend(section(doc, |d| match d {
        Decl::Variable(v) => Some(v.name.clone()),
        _ => None,
    }));
    blocks.extend(section(doc, |d| match d {
        Decl::Idiom(i) => Some(i.name.clone()),
        _ => None,
    }));
    blocks.extend(section(doc, |d| match d {
        Decl::Edge(e) => Some(format!("{}\u{0}{}\u{0}{}", e.from, e.to, e.decision)),
        _ => None,
    }));
    blocks.extend(section(doc, |d| match d {
        Decl::Cpt(c) => Some(c.child.clone()),
        _ => None,
    }));
    if !doc.trailer.is_empty() {
        let mut t = String::new();
        comment_lines(&mut t, &doc.trailer);
        blocks.push(t);
    }
    blocks.join("\n")
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    variables: Vec<JsonVariable<'a>>,
    idioms: Vec<JsonIdiom<'a>>,
    edges: Vec<JsonEdge<'a>>,
    cpts: Vec<JsonCpt<'a>>,
}

#[derive(Serialize)]
struct JsonVariable<'a> {
    name: &'a str,
    states: &'a [String],
    role: &'static str,
}

#[derive(Serialize)]
struct JsonIdiom<'a> {
    template: &'static str,
    name: &'a str,
    bindings: Vec<JsonBinding<'a>>,
}

#[derive(Serialize)]
struct JsonBinding<'a> {
    slot: &'a str,
    variables: &'a [String],
}

#[derive(Serialize)]
struct JsonEdge<'a> {
    from: &'a str,
    to: &'a str,
    decision: bool,
}

#[derive(Serialize)]
struct JsonCpt<'a> {
    variable: &'a str,
    parents: &'a [String],
    rows: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    given: &'a [String],
    probabilities: &'a [f64],
}

/// JSON mirror of the document in canonical order.
pub fn to_json(doc: &ModelDocument) -> String {
    let mut json = JsonDocument {
        variables: doc
            .variables()
            .map(|v| JsonVariable {
                name: &v.name,
                states: &v.states,
                role: v.role.keyword(),
            })
            .collect(),
        idioms: doc
            .idioms()
            .map(|i| {
                let mut bindings: Vec<_> = i.bindings.iter().collect();
                let rank = |s: &str| i.template.template().slots.iter().position(|t| t.name == s);
                bindings.sort_by_key(|b| rank(&b.slot));
                JsonIdiom {
                    template: i.template.keyword(),
                    name: &i.name,
                    bindings: bindings
                        .into_iter()
                        .map(|b| JsonBinding {
                            slot: &b.slot,
                            variables: &b.variables,
                        })
                        .collect(),
                }
            })
            .collect(),
        edges: doc
            .edges()
            .map(|e| JsonEdge {
                from: &e.from,
                to: &e.to,
                decision: e.decision,
            })
            .collect(),
        cpts: doc
            .cpts()
            .map(|c| JsonCpt {
                variable: &c.child,
                parents: &c.parents,
                rows: sorted_rows(doc, c)
                    .into_iter()
                    .map(|r| JsonRow {
                        given: &r.given,
                        probabilities: &r.probabilities,
                    })
                    .collect(),
            })
            .collect(),
    };
    json.variables.sort_by_key(|v| v.name);
    json.idioms.sort_by_key(|i| i.name);
    json.edges.sort_by_key(|e| (e.from, e.to, e.decision));
    json.cpts.sort_by_key(|c| c.variable);
    serde_json::to_string_pretty(&json).expect("documents serialize") + "\n"
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", escape(s))
}

/// Graphviz rendering with one cluster per idiom instance. Clusters cannot
/// overlap, so a variable sits in the first instance that binds it and any
/// further memberships are listed as `// idiom overlap:` comments.
pub fn export_dot(net: &BayesNet, instances: &[IdiomInstance]) -> String {
    let node = |name: &str| {
        let role = net.variable(name).map(|v| v.role.keyword()).unwrap_or("unclassified");
        format!("{} [label=\"{}\\n[{role}]\"];", quote(name), escape(name))
    };
    let mut home: BTreeMap<&str, usize> = BTreeMap::new();
    let mut memberships: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (k, inst) in instances.iter().enumerate() {
        for v in inst.variables() {
            if net.variable(v).is_none() {
                continue;
            }
            home.entry(v).or_insert(k);
            let list = memberships.entry(v).or_default();
            if !list.contains(&inst.name.as_str()) {
                list.push(&inst.name);
            }
        }
    }

    let mut out = String::from("digraph model {\n  node [shape=box];\n");
    for (k, inst) in instances.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{k} {{");
        let _ = writeln!(
            out,
            "    label={};",
            quote(&format!("{} {}", inst.template.keyword(), inst.name))
        );
        for v in net.variables() {
            if home.get(v.name.as_str()) == Some(&k) {
                let _ = writeln!(out, "    {}", node(&v.name));
            }
        }
        out.push_str("  }\n");
    }
    for v in net.variables() {
        if !home.contains_key(v.name.as_str()) {
            let _ = writeln!(out, "  {}", node(&v.name));
        }
    }
    for v in net.variables() {
        if let Some(list) = memberships.get(v.name.as_str()).filter(|l| l.len() > 1) {
            let _ = writeln!(out, "  // idiom overlap: {} in {}", v.name, list.join(", "));
        }
    }
    for e in net.edges() {
        let style = if e.decision { " [style=dashed]" } else { "" };
        let _ = writeln!(out, "  {} -> {}{style};", quote(&e.from), quote(&e.to));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse;

    #[test]
    fn numbers_are_plain_and_short() {
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(0.6 + 0.3), "0.9");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(0.000001234), "0.000001234");
        assert_eq!(format_number(123456.5), "123456.5");
        assert_eq!(format_number(1e14), "100000000000000");
        assert_eq!(format_number(0.9999999999999), "1");
        assert_eq!(format_number(-0.25), "-0.25");
    }

    #[test]
    fn empty_document_serializes_to_nothing() {
        assert_eq!(serialize(&ModelDocument::default()), "");
    }

    #[test]
    fn canonical_layout() {
        let src = "\
# X-ray example

cpt Xray given (Bleeding) { row(no): 0.01, 0.99; row(yes): 0.95, 0.050; }
variable Xray { states: pos, neg; role: medical_test }
# prior
cpt Bleeding { prior: 0.10, 0.9 }
idiom measurement m { assessed: Xray; actual: [Bleeding]; }
variable Bleeding { states: yes, no; role: condition }
";
        let text = serialize(&parse(src).unwrap());
        let expected = "\
# X-ray example

variable Bleeding { states: yes, no; role: condition }
variable Xray { states: pos, neg; role: medical_test }

idiom measurement m { actual: Bleeding; assessed: Xray; }

# prior
cpt Bleeding { prior: 0.1, 0.9; }
cpt Xray given (Bleeding) {
  row(yes): 0.95, 0.05;
  row(no): 0.01, 0.99;
}
";
        assert_eq!(text, expected);
        assert_eq!(serialize(&parse(&text).unwrap()), text);
    }

    #[test]
    fn json_sections_in_order() {
        let doc = parse("variable A { states: x, y; role: sign }\ncpt A { prior: 0.5, 0.5; }\n").unwrap();
        let json = to_json(&doc);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["variables"][0]["role"], "sign");
        assert_eq!(v["cpts"][0]["rows"][0]["probabilities"][1], 0.5);
        let order: Vec<usize> = ["\"variables\"", "\"idioms\"", "\"edges\"", "\"cpts\""]
            .iter()
            .map(|k| json.find(k).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }
}
