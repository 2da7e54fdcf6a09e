//! Discrete Bayesian network data model and the pure graph algorithms that the
//! rest of the crate builds on: validation, topological order, reachability,
//! d-separation and chain-rule joint probabilities.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::cmp::Reverse;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Normalization tolerance shared by build-time checks and inference.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Clinical role of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Condition,
    Symptom,
    Sign,
    MedicalTest,
    RiskFactor,
    PathogenicMechanism,
    Treatment,
    Comorbidity,
    Complication,
    Reliability,
    Synthetic,
    Unclassified,
}

impl Role {
    pub const ALL: [Role; 12] = [
        Role::Condition,
        Role::Symptom,
        Role::Sign,
        Role::MedicalTest,
        Role::RiskFactor,
        Role::PathogenicMechanism,
        Role::Treatment,
        Role::Comorbidity,
        Role::Complication,
        Role::Reliability,
        Role::Synthetic,
        Role::Unclassified,
    ];

    /// Keyword used in model files.
    pub fn keyword(self) -> &'static str {
        match self {
            Role::Condition => "condition",
            Role::Symptom => "symptom",
            Role::Sign => "sign",
            Role::MedicalTest => "medical_test",
            Role::RiskFactor => "risk_factor",
            Role::PathogenicMechanism => "pathogenic_mechanism",
            Role::Treatment => "treatment",
            Role::Comorbidity => "comorbidity",
            Role::Complication => "complication",
            Role::Reliability => "reliability",
            Role::Synthetic => "synthetic",
            Role::Unclassified => "unclassified",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.keyword() == word)
    }

    /// Symptoms, signs and medical tests.
    pub fn is_manifestation(self) -> bool {
        matches!(self, Role::Symptom | Role::Sign | Role::MedicalTest)
    }

    /// Conditions and comorbidities.
    pub fn is_condition_like(self) -> bool {
        matches!(self, Role::Condition | Role::Comorbidity)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
    pub role: Role,
}

impl Variable {
    pub fn new<S: AsRef<str>>(name: impl Into<String>, states: &[S], role: Role) -> Self {
        Variable {
            name: name.into(),
            states: states.iter().map(|s| s.as_ref().to_string()).collect(),
            role,
        }
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// Conditional probability table.
///
/// `table` holds one row per joint parent state, enumerated in row-major order
/// over `parents` (the last parent varies fastest). Each row is a distribution
/// over the child's states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new<S: AsRef<str>>(child: impl Into<String>, parents: &[S], table: Vec<Vec<f64>>) -> Self {
        Cpt {
            child: child.into(),
            parents: parents.iter().map(|p| p.as_ref().to_string()).collect(),
            table,
        }
    }

    /// Parentless table.
    pub fn prior(child: impl Into<String>, probs: Vec<f64>) -> Self {
        Cpt {
            child: child.into(),
            parents: Vec::new(),
            table: vec![probs],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub decision: bool,
}

/// Map from variable name to state label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Assignment(BTreeMap<String, String>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, variable: impl Into<String>, state: impl Into<String>) -> Self {
        self.insert(variable, state);
        self
    }

    pub fn insert(&mut self, variable: impl Into<String>, state: impl Into<String>) -> Option<String> {
        self.0.insert(variable.into(), state.into())
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.0.get(variable).map(String::as_str)
    }

    pub fn contains(&self, variable: &str) -> bool {
        self.0.contains_key(variable)
    }

    pub fn remove(&mut self, variable: &str) -> Option<String> {
        self.0.remove(variable)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("variable name must not be empty")]
    EmptyName,
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` needs at least two states")]
    TooFewStates(String),
    #[error("variable `{variable}` repeats state `{state}`")]
    DuplicateState { variable: String, state: String },
    #[error("unknown variable `{name}` referenced by {context}")]
    UnknownVariable { name: String, context: String },
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: String, to: String },
    #[error("cycle detected: {}", .cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("decision edge {from} -> {to} is not an edge of the graph")]
    DecisionEdgeNotInGraph { from: String, to: String },
    #[error("decision edge {from} -> {to} must point into a treatment node")]
    DecisionEdgeTarget { from: String, to: String },
    #[error("missing CPT for `{0}`")]
    MissingCpt(String),
    #[error("duplicate CPT for `{0}`")]
    DuplicateCpt(String),
    #[error("CPT parents of `{child}` {cpt_parents:?} do not match graph parents {graph_parents:?}")]
    CptMismatch {
        child: String,
        cpt_parents: Vec<String>,
        graph_parents: Vec<String>,
    },
    #[error("CPT for `{child}` has {found} rows, expected {expected}")]
    RowCount {
        child: String,
        expected: usize,
        found: usize,
    },
    #[error("row {row:?} of `{child}` has {found} entries, expected {expected}")]
    RowWidth {
        child: String,
        row: Vec<String>,
        expected: usize,
        found: usize,
    },
    #[error("row {row:?} of `{child}` has entry {value} outside [0, 1]")]
    EntryOutOfRange {
        child: String,
        row: Vec<String>,
        value: f64,
    },
    #[error("row {row:?} of `{child}` sums to {sum}")]
    RowNotNormalized {
        child: String,
        row: Vec<String>,
        sum: f64,
    },
}

/// Every violation found while building a network.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct BuildErrors(pub Vec<BuildError>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },
    #[error("query sets overlap on {0:?}")]
    OverlappingSets(Vec<String>),
    #[error("query set must not be empty")]
    EmptyQuerySet,
    #[error("assignment is missing {missing:?}")]
    IncompleteAssignment { missing: Vec<String> },
}

/// Parent/child adjacency over variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Dag {
    pub(crate) parents: Vec<Vec<usize>>,
    pub(crate) children: Vec<Vec<usize>>,
}

impl Dag {
    pub(crate) fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (a, b) in edges {
            parents[b].push(a);
            children[a].push(b);
        }
        for list in children.iter_mut() {
            list.sort_unstable();
        }
        Dag { parents, children }
    }

    pub(crate) fn len(&self) -> usize {
        self.parents.len()
    }

    fn closure(&self, start: usize, forward: bool) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let next = if forward { &self.children[v] } else { &self.parents[v] };
            for &w in next {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.remove(&start);
        seen
    }

    pub(crate) fn descendants(&self, v: usize) -> BTreeSet<usize> {
        self.closure(v, true)
    }

    pub(crate) fn ancestors(&self, v: usize) -> BTreeSet<usize> {
        self.closure(v, false)
    }

    /// Kahn's algorithm, smallest index first among ready nodes.
    pub(crate) fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    /// Bayes-ball reachability. `x`, `y`, `z` are index sets assumed disjoint.
    pub(crate) fn d_separated(&self, x: &[usize], y: &[usize], z: &[usize]) -> bool {
        let n = self.len();
        let mut observed = vec![false; n];
        for &v in z {
            observed[v] = true;
        }
        // Observed nodes and their ancestors activate converging connections.
        let mut active_collider = observed.clone();
        let mut stack: Vec<usize> = z.to_vec();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !active_collider[p] {
                    active_collider[p] = true;
                    stack.push(p);
                }
            }
        }

        // (node, arrived_from_child)
        let mut visited = vec![[false; 2]; n];
        let mut reachable = vec![false; n];
        let mut queue: VecDeque<(usize, bool)> = x.iter().map(|&v| (v, true)).collect();
        while let Some((v, up)) = queue.pop_front() {
            let slot = usize::from(up);
            if visited[v][slot] {
                continue;
            }
            visited[v][slot] = true;
            if !observed[v] {
                reachable[v] = true;
            }
            if up {
                if !observed[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !observed[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if active_collider[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        !y.iter().any(|&v| reachable[v])
    }
}

/// Returns one directed cycle (as a node sequence, first node not repeated) if
/// the adjacency list contains any.
pub(crate) fn find_cycle(children: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let n = children.len();
    let mut mark = vec![Mark::New; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // Iterative DFS keeping the next child cursor per frame.
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Open;
        while let Some(&mut (v, ref mut cursor)) = stack.last_mut() {
            if let Some(&w) = children[v].get(*cursor) {
                *cursor += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Open;
                        parent[w] = v;
                        stack.push((w, 0));
                    }
                    Mark::Open => {
                        let mut cycle = vec![v];
                        let mut u = v;
                        while u != w {
                            u = parent[u];
                            cycle.push(u);
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

/// A validated, immutable discrete Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    dag: Dag,
    /// Parent indices in CPT order.
    cpt_parents: Vec<Vec<usize>>,
    cpts: Vec<Cpt>,
}

/// Validates the parts and assembles a network. Every violation is reported.
pub fn build_network(
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    cpts: Vec<Cpt>,
    decision_edges: Vec<(String, String)>,
) -> Result<BayesNet, BuildErrors> {
    let mut errors = Vec::new();

    let mut index = HashMap::new();
    for (i, var) in variables.iter().enumerate() {
        if var.name.is_empty() {
            errors.push(BuildError::EmptyName);
        }
        if index.insert(var.name.clone(), i).is_some() {
            errors.push(BuildError::DuplicateVariable(var.name.clone()));
        }
        if var.states.len() < 2 {
            errors.push(BuildError::TooFewStates(var.name.clone()));
        }
        let mut seen = BTreeSet::new();
        for s in &var.states {
            if !seen.insert(s) {
                errors.push(BuildError::DuplicateState {
                    variable: var.name.clone(),
                    state: s.clone(),
                });
            }
        }
    }

    let decision_set: BTreeSet<&(String, String)> = decision_edges.iter().collect();
    let mut edge_set = BTreeSet::new();
    let mut resolved_edges = Vec::new();
    let mut edge_list = Vec::new();
    for (from, to) in &edges {
        let a = index.get(from);
        let b = index.get(to);
        for (name, idx) in [(from, a), (to, b)] {
            if idx.is_none() {
                errors.push(BuildError::UnknownVariable {
                    name: name.clone(),
                    context: format!("edge {from} -> {to}"),
                });
            }
        }
        let (Some(&a), Some(&b)) = (a, b) else { continue };
        if a == b {
            errors.push(BuildError::SelfLoop(from.clone()));
            continue;
        }
        if !edge_set.insert((a, b)) {
            errors.push(BuildError::DuplicateEdge {
                from: from.clone(),
                to: to.clone(),
            });
            continue;
        }
        resolved_edges.push((a, b));
        edge_list.push(Edge {
            from: from.clone(),
            to: to.clone(),
            decision: decision_set.contains(&(from.clone(), to.clone())),
        });
    }

    for (from, to) in &decision_edges {
        let known = match (index.get(from), index.get(to)) {
            (Some(&a), Some(&b)) => edge_set.contains(&(a, b)).then_some(b),
            _ => None,
        };
        match known {
            None => errors.push(BuildError::DecisionEdgeNotInGraph {
                from: from.clone(),
                to: to.clone(),
            }),
            Some(b) if variables[b].role != Role::Treatment => {
                errors.push(BuildError::DecisionEdgeTarget {
                    from: from.clone(),
                    to: to.clone(),
                })
            }
            Some(_) => {}
        }
    }

    let dag = Dag::from_edges(variables.len(), resolved_edges.iter().copied());
    if let Some(cycle) = find_cycle(&dag.children) {
        errors.push(BuildError::CycleDetected {
            cycle: cycle.iter().map(|&i| variables[i].name.clone()).collect(),
        });
    }

    let mut by_child: Vec<Option<Cpt>> = vec![None; variables.len()];
    for cpt in cpts {
        match index.get(&cpt.child) {
            None => errors.push(BuildError::UnknownVariable {
                name: cpt.child.clone(),
                context: "a CPT".to_string(),
            }),
            Some(&i) if by_child[i].is_some() => errors.push(BuildError::DuplicateCpt(cpt.child.clone())),
            Some(&i) => by_child[i] = Some(cpt),
        }
    }

    let mut cpt_parents = vec![Vec::new(); variables.len()];
    for (i, slot) in by_child.iter().enumerate() {
        let var = &variables[i];
        let Some(cpt) = slot else {
            errors.push(BuildError::MissingCpt(var.name.clone()));
            continue;
        };
        let graph_parents: BTreeSet<usize> = dag.parents[i].iter().copied().collect();
        let mut resolved = Vec::new();
        let mut ok = true;
        for p in &cpt.parents {
            match index.get(p) {
                Some(&pi) => resolved.push(pi),
                None => {
                    ok = false;
                    errors.push(BuildError::UnknownVariable {
                        name: p.clone(),
                        context: format!("the CPT of `{}`", var.name),
                    });
                }
            }
        }
        let cpt_set: BTreeSet<usize> = resolved.iter().copied().collect();
        if ok && (cpt_set != graph_parents || cpt_set.len() != resolved.len()) {
            ok = false;
            errors.push(BuildError::CptMismatch {
                child: var.name.clone(),
                cpt_parents: cpt.parents.clone(),
                graph_parents: dag.parents[i].iter().map(|&p| variables[p].name.clone()).collect(),
            });
        }
        if !ok {
            continue;
        }
        let cards: Vec<usize> = resolved.iter().map(|&p| variables[p].cardinality()).collect();
        let expected_rows: usize = cards.iter().product();
        if cpt.table.len() != expected_rows {
            errors.push(BuildError::RowCount {
                child: var.name.clone(),
                expected: expected_rows,
                found: cpt.table.len(),
            });
        } else {
            for (r, row) in cpt.table.iter().enumerate() {
                let label = || row_labels(&variables, &resolved, &cards, r);
                if row.len() != var.cardinality() {
                    errors.push(BuildError::RowWidth {
                        child: var.name.clone(),
                        row: label(),
                        expected: var.cardinality(),
                        found: row.len(),
                    });
                    continue;
                }
                if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    errors.push(BuildError::EntryOutOfRange {
                        child: var.name.clone(),
                        row: label(),
                        value: bad,
                    });
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_TOLERANCE {
                    errors.push(BuildError::RowNotNormalized {
                        child: var.name.clone(),
                        row: label(),
                        sum,
                    });
                }
            }
        }
        cpt_parents[i] = resolved;
    }

    if !errors.is_empty() {
        return Err(BuildErrors(errors));
    }
    let cpts = by_child.into_iter().map(|c| c.expect("checked above")).collect();
    Ok(BayesNet {
        variables,
        index,
        edges: edge_list,
        dag,
        cpt_parents,
        cpts,
    })
}

fn row_labels(variables: &[Variable], parents: &[usize], cards: &[usize], mut row: usize) -> Vec<String> {
    let mut labels = vec![String::new(); parents.len()];
    for k in (0..parents.len()).rev() {
        labels[k] = variables[parents[k]].states[row % cards[k]].clone();
        row /= cards[k];
    }
    labels
}

/// Owned constituents of a network, suitable for feeding back into
/// [`build_network`] after a transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParts {
    pub variables: Vec<Variable>,
    pub edges: Vec<(String, String)>,
    pub cpts: Vec<Cpt>,
    pub decision_edges: Vec<(String, String)>,
}

impl NetworkParts {
    pub fn build(self) -> Result<BayesNet, BuildErrors> {
        build_network(self.variables, self.edges, self.cpts, self.decision_edges)
    }
}

/// Incremental construction helper around [`build_network`].
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    variables: Vec<Variable>,
    edges: Vec<(String, String)>,
    cpts: Vec<Cpt>,
    decision_edges: Vec<(String, String)>,
}

impl NetworkBuilder {
    pub fn variable<S: AsRef<str>>(mut self, name: &str, states: &[S], role: Role) -> Self {
        self.variables.push(Variable::new(name, states, role));
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string()));
        self
    }

    pub fn decision_edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string()));
        self.decision_edges.push((from.to_string(), to.to_string()));
        self
    }

    pub fn prior(mut self, child: &str, probs: &[f64]) -> Self {
        self.cpts.push(Cpt::prior(child, probs.to_vec()));
        self
    }

    pub fn cpt(mut self, child: &str, parents: &[&str], table: &[&[f64]]) -> Self {
        self.cpts
            .push(Cpt::new(child, parents, table.iter().map(|r| r.to_vec()).collect()));
        self
    }

    pub fn build(self) -> Result<BayesNet, BuildErrors> {
        build_network(self.variables, self.edges, self.cpts, self.decision_edges)
    }
}

impl BayesNet {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// Variables in declaration order.
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn decision_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.decision)
    }

    pub fn is_decision_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|e| e.decision && e.from == from && e.to == to)
    }

    pub fn cpt(&self, name: &str) -> Option<&Cpt> {
        self.index.get(name).map(|&i| &self.cpts[i])
    }

    /// Parents of `name` in CPT order.
    pub fn parents(&self, name: &str) -> Result<Vec<&str>, GraphError> {
        let i = self.require(name)?;
        Ok(self.cpt_parents[i].iter().map(|&p| self.name_of(p)).collect())
    }

    pub fn children(&self, name: &str) -> Result<Vec<&str>, GraphError> {
        let i = self.require(name)?;
        Ok(self.dag.children[i].iter().map(|&c| self.name_of(c)).collect())
    }

    pub fn to_parts(&self) -> NetworkParts {
        NetworkParts {
            variables: self.variables.clone(),
            edges: self.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect(),
            cpts: self.cpts.clone(),
            decision_edges: self
                .decision_edges()
                .map(|e| (e.from.clone(), e.to.clone()))
                .collect(),
        }
    }

    /// Parents precede children; ties follow declaration order.
    pub fn topological_order(&self) -> Vec<&str> {
        self.dag
            .topological_order()
            .expect("validated networks are acyclic")
            .into_iter()
            .map(|i| self.name_of(i))
            .collect()
    }

    /// Strict descendants of `name`, in declaration order.
    pub fn descendants(&self, name: &str) -> Result<BTreeSet<String>, GraphError> {
        let i = self.require(name)?;
        Ok(self.names(self.dag.descendants(i)))
    }

    /// Strict ancestors of `name`.
    pub fn ancestors(&self, name: &str) -> Result<BTreeSet<String>, GraphError> {
        let i = self.require(name)?;
        Ok(self.names(self.dag.ancestors(i)))
    }

    /// True iff every path between `x` and `y` is blocked by `z`.
    pub fn d_separated(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<bool, GraphError> {
        if x.is_empty() || y.is_empty() {
            return Err(GraphError::EmptyQuerySet);
        }
        let xs = self.require_all(x)?;
        let ys = self.require_all(y)?;
        let zs = self.require_all(z)?;
        let mut overlap = BTreeSet::new();
        for (a, b) in [(&xs, &ys), (&xs, &zs), (&ys, &zs)] {
            for v in a.iter().filter(|v| b.contains(v)) {
                overlap.insert(self.variables[*v].name.clone());
            }
        }
        if !overlap.is_empty() {
            return Err(GraphError::OverlappingSets(overlap.into_iter().collect()));
        }
        Ok(self.dag.d_separated(&xs, &ys, &zs))
    }

    /// Chain-rule product of CPT entries for a complete assignment.
    pub fn joint_probability(&self, assignment: &Assignment) -> Result<f64, GraphError> {
        let resolved = self.resolve(assignment)?;
        let mut states = vec![usize::MAX; self.len()];
        for (v, s) in resolved {
            states[v] = s;
        }
        let missing: Vec<String> = states
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == usize::MAX)
            .map(|(i, _)| self.variables[i].name.clone())
            .collect();
        if !missing.is_empty() {
            return Err(GraphError::IncompleteAssignment { missing });
        }
        Ok(self.joint_by_index(&states))
    }

    /// `states[i]` is the state index of variable `i`.
    pub(crate) fn joint_by_index(&self, states: &[usize]) -> f64 {
        (0..self.len()).map(|v| self.cpt_entry(v, states)).product()
    }

    pub(crate) fn cpt_entry(&self, v: usize, states: &[usize]) -> f64 {
        let mut row = 0;
        for &p in &self.cpt_parents[v] {
            row = row * self.variables[p].cardinality() + states[p];
        }
        self.cpts[v].table[row][states[v]]
    }

    /// Resolves names and labels to `(variable index, state index)` pairs.
    pub fn resolve(&self, assignment: &Assignment) -> Result<Vec<(usize, usize)>, GraphError> {
        assignment
            .iter()
            .map(|(var, state)| {
                let v = self.require(var)?;
                let s = self.variables[v]
                    .state_index(state)
                    .ok_or_else(|| GraphError::UnknownState {
                        variable: var.to_string(),
                        state: state.to_string(),
                    })?;
                Ok((v, s))
            })
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name)
            .ok_or_else(|| GraphError::UnknownVariable(name.to_string()))
    }

    fn require_all(&self, names: &[&str]) -> Result<Vec<usize>, GraphError> {
        names.iter().map(|n| self.require(n)).collect()
    }

    pub(crate) fn name_of(&self, i: usize) -> &str {
        &self.variables[i].name
    }

    fn names(&self, set: BTreeSet<usize>) -> BTreeSet<String> {
        set.into_iter().map(|i| self.variables[i].name.clone()).collect()
    }

    pub(crate) fn dag(&self) -> &Dag {
        &self.dag
    }

    pub(crate) fn cpt_parent_indices(&self, v: usize) -> &[usize] {
        &self.cpt_parents[v]
    }

    pub(crate) fn cpt_table(&self, v: usize) -> &[Vec<f64>] {
        &self.cpts[v].table
    }

    pub(crate) fn cardinality(&self, v: usize) -> usize {
        self.variables[v].cardinality()
    }

    /// Same model irrespective of declaration order: identical variables,
    /// edges, decision flags and CPTs (parent order and every entry).
    pub fn equivalent(&self, other: &BayesNet) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let edges = |n: &BayesNet| n.edges.iter().cloned().collect::<BTreeSet<_>>();
        if edges(self) != edges(other) {
            return false;
        }
        self.variables.iter().zip(&self.cpts).all(|(var, cpt)| {
            other.variable(&var.name) == Some(var) && other.cpt(&var.name) == Some(cpt)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> BayesNet {
        BayesNet::builder()
            .variable("A", &["t", "f"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .variable("C", &["t", "f"], Role::Unclassified)
            .edge("A", "B")
            .edge("B", "C")
            .prior("A", &[0.3, 0.7])
            .cpt("B", &["A"], &[&[0.9, 0.1], &[0.2, 0.8]])
            .cpt("C", &["B"], &[&[0.6, 0.4], &[0.5, 0.5]])
            .build()
            .unwrap()
    }

    fn diamond() -> BayesNet {
        let b = BayesNet::builder();
        let b = ["A", "B", "C", "D"]
            .iter()
            .fold(b, |b, n| b.variable(n, &["t", "f"], Role::Unclassified));
        b.edge("A", "B")
            .edge("A", "C")
            .edge("B", "D")
            .edge("C", "D")
            .prior("A", &[0.5, 0.5])
            .cpt("B", &["A"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .cpt("C", &["A"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .cpt("D", &["B", "C"], &[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]])
            .build()
            .unwrap()
    }

    fn smoking() -> BayesNet {
        BayesNet::builder()
            .variable("S", &["yes", "no"], Role::RiskFactor)
            .variable("L", &["yes", "no"], Role::Condition)
            .edge("S", "L")
            .prior("S", &[0.5, 0.5])
            .cpt("L", &["S"], &[&[0.1, 0.9], &[0.01, 0.99]])
            .build()
            .unwrap()
    }

    #[test]
    fn minimal_network_builds() {
        let net = smoking();
        assert_eq!(net.len(), 2);
        assert_eq!(net.edges().len(), 1);
    }

    #[test]
    fn two_cycle_is_reported() {
        let err = BayesNet::builder()
            .variable("A", &["t", "f"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .edge("A", "B")
            .edge("B", "A")
            .cpt("A", &["B"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .cpt("B", &["A"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .build()
            .unwrap_err();
        let cycle = err
            .0
            .iter()
            .find_map(|e| match e {
                BuildError::CycleDetected { cycle } => Some(cycle.clone()),
                _ => None,
            })
            .expect("cycle error");
        let names: BTreeSet<_> = cycle.iter().map(String::as_str).collect();
        assert_eq!(names, BTreeSet::from(["A", "B"]));
    }

    #[test]
    fn unnormalized_row_reports_sum() {
        let err = BayesNet::builder()
            .variable("S", &["yes", "no"], Role::Unclassified)
            .variable("L", &["yes", "no"], Role::Unclassified)
            .edge("S", "L")
            .prior("S", &[0.5, 0.5])
            .cpt("L", &["S"], &[&[0.6, 0.3], &[0.99, 0.01]])
            .build()
            .unwrap_err();
        assert_eq!(err.0.len(), 1);
        match &err.0[0] {
            BuildError::RowNotNormalized { child, row, sum } => {
                assert_eq!(child, "L");
                assert_eq!(row, &vec!["yes".to_string()]);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_violations_are_collected() {
        let err = BayesNet::builder()
            .variable("A", &["t"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .edge("A", "Z")
            .edge("B", "B")
            .decision_edge("A", "B")
            .prior("B", &[0.5, 0.6])
            .build()
            .unwrap_err();
        let kinds: Vec<_> = err.0.iter().map(std::mem::discriminant).collect();
        assert!(err.0.len() >= 5, "{err}");
        assert!(kinds.contains(&std::mem::discriminant(&BuildError::TooFewStates(String::new()))));
        assert!(err.0.iter().any(|e| matches!(e, BuildError::UnknownVariable { name, .. } if name == "Z")));
        assert!(err.0.iter().any(|e| matches!(e, BuildError::SelfLoop(_))));
        assert!(err.0.iter().any(|e| matches!(e, BuildError::DecisionEdgeTarget { .. })));
        assert!(err.0.iter().any(|e| matches!(e, BuildError::MissingCpt(n) if n == "A")));
    }

    #[test]
    fn cpt_parents_must_match_in_edges() {
        let err = BayesNet::builder()
            .variable("A", &["t", "f"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .edge("A", "B")
            .prior("A", &[0.5, 0.5])
            .prior("B", &[0.5, 0.5])
            .build()
            .unwrap_err();
        assert!(matches!(&err.0[0], BuildError::CptMismatch { child, .. } if child == "B"));
    }

    #[test]
    fn decision_edge_requires_treatment_child() {
        let net = BayesNet::builder()
            .variable("C", &["yes", "no"], Role::Condition)
            .variable("T", &["given", "not_given"], Role::Treatment)
            .decision_edge("C", "T")
            .prior("C", &[0.3, 0.7])
            .cpt("T", &["C"], &[&[0.8, 0.2], &[0.2, 0.8]])
            .build()
            .unwrap();
        assert!(net.is_decision_edge("C", "T"));
        assert_eq!(net.decision_edges().count(), 1);
    }

    #[test]
    fn topological_orders() {
        assert_eq!(chain().topological_order(), vec!["A", "B", "C"]);
        assert_eq!(diamond().topological_order(), vec!["A", "B", "C", "D"]);
        let single = BayesNet::builder()
            .variable("X", &["a", "b"], Role::Unclassified)
            .prior("X", &[0.5, 0.5])
            .build()
            .unwrap();
        assert_eq!(single.topological_order(), vec!["X"]);
    }

    #[test]
    fn topological_order_uses_declaration_tie_break() {
        // C declared before B although B -> C does not exist; both are roots.
        let net = BayesNet::builder()
            .variable("C", &["t", "f"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .variable("A", &["t", "f"], Role::Unclassified)
            .edge("A", "C")
            .prior("A", &[0.5, 0.5])
            .prior("B", &[0.5, 0.5])
            .cpt("C", &["A"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .build()
            .unwrap();
        assert_eq!(net.topological_order(), vec!["B", "A", "C"]);
    }

    #[test]
    fn reachability_sets() {
        let c = chain();
        assert_eq!(c.descendants("A").unwrap(), BTreeSet::from(["B".into(), "C".into()]));
        assert!(c.ancestors("A").unwrap().is_empty());
        let d = diamond();
        assert_eq!(
            d.descendants("A").unwrap(),
            BTreeSet::from(["B".into(), "C".into(), "D".into()])
        );
        assert_eq!(c.descendants("Q"), Err(GraphError::UnknownVariable("Q".into())));
    }

    #[test]
    fn d_separation_connection_types() {
        let serial = chain();
        assert!(serial.d_separated(&["A"], &["C"], &["B"]).unwrap());
        assert!(!serial.d_separated(&["A"], &["C"], &[]).unwrap());

        let converging = BayesNet::builder()
            .variable("A", &["t", "f"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .variable("C", &["t", "f"], Role::Unclassified)
            .variable("D", &["t", "f"], Role::Unclassified)
            .edge("A", "B")
            .edge("C", "B")
            .edge("B", "D")
            .prior("A", &[0.5, 0.5])
            .prior("C", &[0.5, 0.5])
            .cpt("B", &["A", "C"], &[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]])
            .cpt("D", &["B"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .build()
            .unwrap();
        assert!(converging.d_separated(&["A"], &["C"], &[]).unwrap());
        assert!(!converging.d_separated(&["A"], &["C"], &["B"]).unwrap());
        // A descendant of the collider also opens the path.
        assert!(!converging.d_separated(&["A"], &["C"], &["D"]).unwrap());

        let diverging = BayesNet::builder()
            .variable("A", &["t", "f"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .variable("C", &["t", "f"], Role::Unclassified)
            .edge("B", "A")
            .edge("B", "C")
            .prior("B", &[0.5, 0.5])
            .cpt("A", &["B"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .cpt("C", &["B"], &[&[0.5, 0.5], &[0.5, 0.5]])
            .build()
            .unwrap();
        assert!(diverging.d_separated(&["A"], &["C"], &["B"]).unwrap());
        assert!(!diverging.d_separated(&["A"], &["C"], &[]).unwrap());
    }

    #[test]
    fn d_separation_argument_errors() {
        let c = chain();
        assert_eq!(c.d_separated(&[], &["C"], &[]), Err(GraphError::EmptyQuerySet));
        assert_eq!(
            c.d_separated(&["A"], &["C"], &["A"]),
            Err(GraphError::OverlappingSets(vec!["A".into()]))
        );
    }

    #[test]
    fn joint_probability_chain_rule() {
        let net = smoking();
        let p = net
            .joint_probability(&Assignment::new().with("S", "yes").with("L", "yes"))
            .unwrap();
        assert!((p - 0.05).abs() < 1e-15);
        let err = net.joint_probability(&Assignment::new().with("S", "yes")).unwrap_err();
        assert_eq!(err, GraphError::IncompleteAssignment { missing: vec!["L".into()] });
        let bad = net.joint_probability(&Assignment::new().with("S", "maybe").with("L", "yes"));
        assert!(matches!(bad, Err(GraphError::UnknownState { .. })));
    }

    #[test]
    fn zero_entry_gives_zero_joint() {
        let net = BayesNet::builder()
            .variable("A", &["t", "f"], Role::Unclassified)
            .variable("B", &["t", "f"], Role::Unclassified)
            .edge("A", "B")
            .prior("A", &[0.4, 0.6])
            .cpt("B", &["A"], &[&[1.0, 0.0], &[0.3, 0.7]])
            .build()
            .unwrap();
        let p = net.joint_probability(&Assignment::new().with("A", "t").with("B", "f")).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn equivalence_ignores_declaration_order() {
        let a = smoking();
        let b = BayesNet::builder()
            .variable("L", &["yes", "no"], Role::Condition)
            .variable("S", &["yes", "no"], Role::RiskFactor)
            .edge("S", "L")
            .cpt("L", &["S"], &[&[0.1, 0.9], &[0.01, 0.99]])
            .prior("S", &[0.5, 0.5])
            .build()
            .unwrap();
        assert!(a.equivalent(&b));
        assert_ne!(a, b);
    }
}
