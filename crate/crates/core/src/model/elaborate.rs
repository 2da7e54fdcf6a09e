use std::collections::BTreeMap;

use crate::graph::{build_network, BayesNet, BuildError, Cpt, Role, Variable};
use crate::idiom::{compose, instantiate_instance, Fragment, IdiomError, IdiomInstance, IdiomWarning};

use super::codes::*;
use super::{parse, Decl, Diagnostic, ModelDocument, Pos};

/// A network built from a document, with the idiom instances that shaped it.
#[derive(Debug, Clone)]
pub struct Elaboration {
    pub net: BayesNet,
    pub instances: Vec<IdiomInstance>,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and elaborates in one step.
pub fn load(src: &str) -> Result<Elaboration, Vec<Diagnostic>> {
    elaborate(&parse(src)?)
}

fn edge_label(pos: Pos) -> String {
    format!("edge@{}", pos.line)
}

/// Expands idioms, composes them with raw edges and builds the network.
pub fn elaborate(doc: &ModelDocument) -> Result<Elaboration, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let roles: BTreeMap<&str, Role> = doc.variables().map(|v| (v.name.as_str(), v.role)).collect();
    let role_of = |n: &str| roles.get(n).copied();

    let mut var_pos: BTreeMap<&str, Pos> = BTreeMap::new();
    let mut cpt_pos: BTreeMap<&str, Pos> = BTreeMap::new();
    let mut source_pos: BTreeMap<String, Pos> = BTreeMap::new();
    let mut fragments = Vec::new();
    let mut instances = Vec::new();
    // Edges in the order declarations produce them.
    let mut edge_order: Vec<(String, String)> = Vec::new();

    let mut base = Fragment::new();
    for v in doc.variables() {
        base.add_variable(&v.name, v.role);
    }
    fragments.push(base);

    for d in &doc.declarations {
        match &d.body {
            Decl::Variable(v) => {
                var_pos.entry(&v.name).or_insert(d.pos);
            }
            Decl::Cpt(c) => {
                cpt_pos.entry(&c.child).or_insert(d.pos);
            }
            Decl::Idiom(i) => {
                let instance = i.to_instance();
                source_pos.insert(i.name.clone(), d.pos);
                match instantiate_instance(&instance, role_of) {
                    Ok(fragment) => {
                        for w in fragment.warnings() {
                            diags.push(warning_diag(d.pos, w));
                        }
                        for t in i.template.template().edges {
                            for from in instance.bindings.get(t.from).into_iter().flatten() {
                                for to in instance.bindings.get(t.to).into_iter().flatten() {
                                    edge_order.push((from.clone(), to.clone()));
                                }
                            }
                        }
                        fragments.push(fragment);
                        instances.push(instance);
                    }
                    Err(e) => {
                        let code = match e {
                            IdiomError::DuplicateBinding { .. } => DUPLICATE,
                            IdiomError::UnknownSlot { .. } => UNKNOWN_SLOT,
                            _ => SLOT_ARITY,
                        };
                        diags.push(Diagnostic::error(d.pos, code, e.to_string()));
                    }
                }
            }
            Decl::Edge(e) => {
                let label = edge_label(d.pos);
                source_pos.insert(label.clone(), d.pos);
                let mut f = Fragment::new();
                for v in [&e.from, &e.to] {
                    f.add_variable(v, role_of(v).unwrap_or(Role::Unclassified));
                }
                f.add_edge(&e.from, &e.to, e.decision, &label);
                edge_order.push((e.from.clone(), e.to.clone()));
                fragments.push(f);
            }
        }
    }

    let composed = match compose(&fragments) {
        Ok(c) => c,
        Err(IdiomError::CompositionCycle { cycle, contributors }) => {
            let first = contributors
                .iter()
                .flat_map(|(_, s)| s.iter())
                .filter_map(|s| source_pos.get(s))
                .min()
                .copied()
                .unwrap_or(Pos::new(1, 1));
            let blame: Vec<String> = contributors
                .iter()
                .map(|((a, b), s)| format!("{a} -> {b} from {}", s.join(", ")))
                .collect();
            diags.push(Diagnostic::error(
                first,
                CYCLE,
                format!("composition cycle {}: {}", cycle.join(" -> "), blame.join("; ")),
            ));
            return Err(sorted(diags));
        }
        Err(e) => {
            diags.push(Diagnostic::error(Pos::new(1, 1), SLOT_ARITY, e.to_string()));
            return Err(sorted(diags));
        }
    };
    for w in composed.warnings() {
        if let IdiomWarning::MultiRole { variable, .. } = w {
            let pos = var_pos.get(variable.as_str()).copied().unwrap_or(Pos::new(1, 1));
            diags.push(warning_diag(pos, w));
        }
    }
    if diags.iter().any(Diagnostic::is_error) {
        return Err(sorted(diags));
    }

    let mut seen = std::collections::BTreeSet::new();
    edge_order.retain(|e| seen.insert(e.clone()));
    let decision_edges: Vec<(String, String)> = edge_order
        .iter()
        .filter(|(a, b)| composed.edge(a, b).is_some_and(|e| e.decision))
        .cloned()
        .collect();

    let variables: Vec<Variable> = doc
        .variables()
        .map(|v| Variable::new(&v.name, &v.states, v.role))
        .collect();
    let cpts: Vec<Cpt> = doc.cpts().map(|c| to_cpt(doc, c)).collect();

    match build_network(variables, edge_order.clone(), cpts, decision_edges) {
        Ok(net) => Ok(Elaboration {
            net,
            instances,
            warnings: sorted(diags),
        }),
        Err(errors) => {
            let edge_pos = |from: &str, to: &str| {
                composed
                    .edge(from, to)
                    .and_then(|e| e.sources.iter().filter_map(|s| source_pos.get(s)).min().copied())
                    .unwrap_or(Pos::new(1, 1))
            };
            let at_var = |n: &str| var_pos.get(n).copied().unwrap_or(Pos::new(1, 1));
            let at_cpt = |n: &str| cpt_pos.get(n).copied().unwrap_or_else(|| at_var(n));
            for e in errors.0 {
                let (pos, code) = match &e {
                    BuildError::EmptyName => (Pos::new(1, 1), INVALID_STATES),
                    BuildError::TooFewStates(v) | BuildError::DuplicateVariable(v) => (at_var(v), INVALID_STATES),
                    BuildError::DuplicateState { variable, .. } => (at_var(variable), INVALID_STATES),
                    BuildError::UnknownVariable { name, .. } => (at_var(name), UNKNOWN_VARIABLE),
                    BuildError::SelfLoop(v) => (edge_pos(v, v), CYCLE),
                    BuildError::DuplicateEdge { from, to } => (edge_pos(from, to), DUPLICATE),
                    BuildError::CycleDetected { cycle } => (at_var(&cycle[0]), CYCLE),
                    BuildError::DecisionEdgeNotInGraph { from, to } | BuildError::DecisionEdgeTarget { from, to } => {
                        (edge_pos(from, to), DECISION_TARGET)
                    }
                    BuildError::MissingCpt(v) => (at_var(v), MISSING_CPT),
                    BuildError::DuplicateCpt(v) => (at_cpt(v), DUPLICATE),
                    BuildError::CptMismatch { child, .. } => (at_cpt(child), PARENT_MISMATCH),
                    BuildError::RowCount { child, .. } => (at_cpt(child), MISSING_ROW),
                    BuildError::RowWidth { child, .. } | BuildError::EntryOutOfRange { child, .. } => {
                        (at_cpt(child), ROW_SHAPE)
                    }
                    BuildError::RowNotNormalized { child, .. } => (at_cpt(child), ROW_SUM),
                };
                diags.push(Diagnostic::error(pos, code, e.to_string()));
            }
            Err(sorted(diags))
        }
    }
}

fn warning_diag(pos: Pos, w: &IdiomWarning) -> Diagnostic {
    let code = match w {
        IdiomWarning::RoleMismatch { .. } => ROLE_MISMATCH,
        IdiomWarning::MultiRole { .. } => MULTI_ROLE,
        IdiomWarning::NotQuantified { .. } => NOT_QUANTIFIED,
    };
    Diagnostic::warning(pos, code, w.to_string())
}

fn sorted(mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    diags.sort_by_key(|d| (d.line, d.column));
    diags
}

/// Row-major table in the declared parent order. Rows are located by their
/// state labels; the parser has already rejected missing or unknown rows.
fn to_cpt(doc: &ModelDocument, c: &super::CptDecl) -> Cpt {
    let states = |n: &str| doc.variable(n).map(|v| v.states.clone()).unwrap_or_default();
    let cards: Vec<Vec<String>> = c.parents.iter().map(|p| states(p)).collect();
    let total: usize = cards.iter().map(Vec::len).product();
    let mut table = vec![Vec::new(); total];
    for row in &c.rows {
        let index = row
            .given
            .iter()
            .zip(&cards)
            .try_fold(0usize, |acc, (s, options)| {
                options.iter().position(|o| o == s).map(|i| acc * options.len() + i)
            });
        if let Some(i) = index.filter(|i| *i < total) {
            table[i] = row.probabilities.clone();
        }
    }
    Cpt::new(&c.child, &c.parents, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::serialize;

    const TREATMENT: &str = "\
variable CAD { states: yes, no; role: condition }
variable Medication { states: given, not_given; role: treatment }
variable HeartAttack { states: yes, no; role: complication }
idiom treatment t { condition: CAD; treatment: Medication; outcome: HeartAttack; }
cpt CAD { prior: 0.3, 0.7; }
cpt Medication given (CAD) { row(yes): 0.8, 0.2; row(no): 0.2, 0.8; }
cpt HeartAttack given (CAD, Medication) {
  row(yes, given): 0.3, 0.7;
  row(yes, not_given): 0.6, 0.4;
  row(no, given): 0.1, 0.9;
  row(no, not_given): 0.2, 0.8;
}
";

    #[test]
    fn treatment_idiom_builds_decision_arc() {
        let e = load(TREATMENT).unwrap();
        let edges: Vec<(String, String, bool)> = e
            .net
            .edges()
            .iter()
            .map(|x| (x.from.clone(), x.to.clone(), x.decision))
            .collect();
        assert_eq!(
            edges,
            vec![
                ("CAD".into(), "Medication".into(), true),
                ("Medication".into(), "HeartAttack".into(), false),
                ("CAD".into(), "HeartAttack".into(), false),
            ]
        );
        assert_eq!(e.instances.len(), 1);
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn missing_cpt_is_reported_at_the_variable() {
        let src = "variable A { states: x, y; role: sign }\nvariable B { states: x, y; role: sign }\ncpt A { prior: 0.5, 0.5; }\n";
        let diags = load(src).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!((diags[0].code, diags[0].line), (MISSING_CPT, 2));
    }

    #[test]
    fn idiom_and_raw_edges_can_form_a_cycle() {
        let src = "\
variable CAD { states: yes, no; role: condition }
variable Pain { states: yes, no; role: symptom }
idiom manifestation m { condition: CAD; manifestations: Pain; }
edge Pain -> CAD
";
        let diags = load(src).unwrap_err();
        assert_eq!(diags[0].code, CYCLE);
        assert_eq!(diags[0].line, 3);
        assert!(diags[0].message.contains("edge@4"), "{}", diags[0].message);
    }

    #[test]
    fn cpt_parents_must_match_the_graph() {
        let src = "\
variable A { states: x, y; role: risk_factor }
variable B { states: x, y; role: condition }
edge A -> B
cpt A { prior: 0.5, 0.5; }
cpt B { prior: 0.5, 0.5; }
";
        let diags = load(src).unwrap_err();
        assert_eq!((diags[0].code, diags[0].line), (PARENT_MISMATCH, 5));
    }

    #[test]
    fn decision_arc_needs_a_treatment() {
        let src = "\
variable A { states: x, y; role: risk_factor }
variable B { states: x, y; role: condition }
edge A => B
cpt A { prior: 0.5, 0.5; }
cpt B given (A) { row(x): 0.5, 0.5; row(y): 0.5, 0.5; }
";
        let diags = load(src).unwrap_err();
        assert_eq!((diags[0].code, diags[0].line), (DECISION_TARGET, 3));
    }

    #[test]
    fn role_mismatch_and_arity() {
        let src = "\
variable CAD { states: yes, no; role: condition }
variable Age { states: old, young; role: risk_factor }
idiom manifestation m { condition: CAD; manifestations: Age; }
cpt CAD { prior: 0.3, 0.7; }
cpt Age given (CAD) { row(yes): 0.5, 0.5; row(no): 0.5, 0.5; }
";
        let e = load(src).unwrap();
        assert_eq!(e.warnings.len(), 1);
        assert_eq!(e.warnings[0].code, ROLE_MISMATCH);

        let bad = src.replace("manifestations: Age;", "manifestations: [];");
        let diags = load(&bad).unwrap_err();
        assert_eq!(diags[0].code, SLOT_ARITY);
    }

    #[test]
    fn round_trip_is_structurally_identical() {
        let doc = parse(TREATMENT).unwrap();
        let text = serialize(&doc);
        let a = elaborate(&doc).unwrap().net;
        let b = load(&text).unwrap().net;
        assert!(a.equivalent(&b));
        assert_eq!(serialize(&parse(&text).unwrap()), text);
    }

    #[test]
    fn document_from_network_round_trips() {
        let e = load(TREATMENT).unwrap();
        let doc = ModelDocument::from_network(&e.net, &e.instances);
        assert_eq!(doc.edges().count(), 0);
        let again = elaborate(&doc).unwrap();
        assert!(again.net.equivalent(&e.net));
        let bare = ModelDocument::from_network(&e.net, &[]);
        assert_eq!(bare.edges().filter(|x| x.decision).count(), 1);
        assert!(elaborate(&bare).unwrap().net.equivalent(&e.net));
    }
}
