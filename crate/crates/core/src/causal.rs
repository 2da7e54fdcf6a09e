//! Interventional and counterfactual queries.
//!
//! Interventions are answered by graph surgery: the intervened variables lose
//! their incoming arcs and become point masses. Backdoor adjustment offers a
//! second route to the same number when the adjustment set blocks every
//! backdoor path. Counterfactuals run on a twin network whose hypothetical
//! half copies the descendants of the intervention targets and shares every
//! other variable with the actual world.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Assignment, BayesNet, BuildErrors, Cpt, Dag, GraphError, Role, Variable};
use crate::inference::{self, Distribution, Evidence, InferenceError, IMPOSSIBLE_EVIDENCE};

/// Forced states for the intervened variables.
pub type Intervention = Assignment;

/// Caveat attached to every counterfactual result.
pub const TWIN_SHARING_NOTE: &str = "variables outside the intervention's descendants are shared between worlds; \
     mechanisms carry no exogenous noise, so observed outcomes inform the hypothetical world only through shared variables";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    Observational,
    Interventional,
    Counterfactual,
}

impl fmt::Display for QueryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryMode::Observational => "observational",
            QueryMode::Interventional => "interventional",
            QueryMode::Counterfactual => "counterfactual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub mode: QueryMode,
    /// Arcs cut by surgery, as (parent, child).
    pub removed_edges: Vec<(String, String)>,
    pub adjustment_set: Option<Vec<String>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalQueryResult {
    pub distribution: Distribution,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CausalError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("transformed network is invalid: {0}")]
    Build(#[from] BuildErrors),
    #[error("intervention must name at least one variable")]
    EmptyIntervention,
    #[error("evidence and intervention both set {0:?}")]
    EvidenceOverlapsIntervention(Vec<String>),
    #[error("treatment and target must differ (both `{0}`)")]
    SameVariable(String),
    #[error("invalid adjustment set: {0}")]
    InvalidAdjustmentSet(String),
    #[error("adjustment set {adjustment:?} leaves a backdoor path from `{treatment}` to `{target}` open")]
    BackdoorOpen {
        treatment: String,
        target: String,
        adjustment: Vec<String>,
    },
}

fn resolve_intervention(net: &BayesNet, intervention: &Intervention) -> Result<Vec<(usize, usize)>, CausalError> {
    if intervention.is_empty() {
        return Err(CausalError::EmptyIntervention);
    }
    Ok(net.resolve(intervention)?)
}

fn point_mass(card: usize, state: usize) -> Vec<f64> {
    let mut p = vec![0.0; card];
    p[state] = 1.0;
    p
}

/// Arcs that surgery on `intervention` would cut, in edge declaration order.
pub fn surgery_cuts(net: &BayesNet, intervention: &Intervention) -> Vec<(String, String)> {
    net.edges()
        .iter()
        .filter(|e| intervention.contains(&e.to))
        .map(|e| (e.from.clone(), e.to.clone()))
        .collect()
}

/// Mutilated copy of `net`: every intervened variable loses its incoming arcs
/// and its CPT becomes a point mass on the forced state. The input network
/// is left untouched.
pub fn do_surgery(net: &BayesNet, intervention: &Intervention) -> Result<BayesNet, CausalError> {
    let forced = resolve_intervention(net, intervention)?;
    let mut parts = net.to_parts();
    parts.edges.retain(|(_, to)| !intervention.contains(to));
    parts.decision_edges.retain(|(_, to)| !intervention.contains(to));
    for (v, s) in forced {
        let name = net.name_of(v).to_string();
        let cpt = parts
            .cpts
            .iter_mut()
            .find(|c| c.child == name)
            .expect("every variable has a CPT");
        *cpt = Cpt::prior(name, point_mass(net.cardinality(v), s));
    }
    Ok(parts.build()?)
}

fn check_disjoint(evidence: &Evidence, intervention: &Intervention) -> Result<(), CausalError> {
    let overlap: Vec<String> = intervention
        .variables()
        .filter(|v| evidence.contains(v))
        .map(str::to_string)
        .collect();
    if overlap.is_empty() {
        Ok(())
    } else {
        Err(CausalError::EvidenceOverlapsIntervention(overlap))
    }
}

/// `P(target | do(intervention), evidence)` by surgery.
pub fn interventional_query(
    net: &BayesNet,
    target: &str,
    intervention: &Intervention,
    evidence: &Evidence,
) -> Result<CausalQueryResult, CausalError> {
    check_disjoint(evidence, intervention)?;
    let mutilated = do_surgery(net, intervention)?;
    let mut combined = evidence.clone();
    for (v, s) in intervention.iter() {
        combined.insert(v, s);
    }
    let distribution = inference::posterior(&mutilated, target, &combined)?;
    Ok(CausalQueryResult {
        distribution,
        provenance: Provenance {
            mode: QueryMode::Interventional,
            removed_edges: surgery_cuts(net, intervention),
            adjustment_set: None,
            notes: Vec::new(),
        },
    })
}

fn validate_adjustment(
    net: &BayesNet,
    treatment: &str,
    target: &str,
    adjustment: &[&str],
) -> Result<(usize, usize, Vec<usize>), CausalError> {
    let t = net.require(treatment)?;
    let y = net.require(target)?;
    if t == y {
        return Err(CausalError::SameVariable(treatment.to_string()));
    }
    let descendants = net.dag().descendants(t);
    let mut z = Vec::new();
    for name in adjustment {
        let v = net.require(name)?;
        if v == t || v == y {
            return Err(CausalError::InvalidAdjustmentSet(format!(
                "`{name}` is the treatment or the target"
            )));
        }
        if descendants.contains(&v) {
            return Err(CausalError::InvalidAdjustmentSet(format!(
                "`{name}` is a descendant of treatment `{treatment}`"
            )));
        }
        if !z.contains(&v) {
            z.push(v);
        }
    }
    Ok((t, y, z))
}

/// True iff `adjustment` blocks every backdoor path from `treatment` to
/// `target`, i.e. they are d-separated once the treatment's outgoing arcs
/// are removed.
pub fn backdoor_blocked(
    net: &BayesNet,
    treatment: &str,
    target: &str,
    adjustment: &[&str],
) -> Result<bool, CausalError> {
    let (t, y, z) = validate_adjustment(net, treatment, target, adjustment)?;
    let edges = net.edges().iter().filter_map(|e| {
        let a = net.index_of(&e.from).expect("edge endpoints exist");
        let b = net.index_of(&e.to).expect("edge endpoints exist");
        (a != t).then_some((a, b))
    });
    let pruned = Dag::from_edges(net.len(), edges);
    Ok(pruned.d_separated(&[t], &[y], &z))
}

/// `Σ_z P(target | treatment = forced, Z = z) · P(Z = z)`, refusing sets that
/// leave a backdoor path open.
pub fn backdoor_adjust(
    net: &BayesNet,
    target: &str,
    treatment: &str,
    forced_state: &str,
    adjustment: &[&str],
) -> Result<Distribution, CausalError> {
    let (t, y, z) = validate_adjustment(net, treatment, target, adjustment)?;
    if net.variables()[t].state_index(forced_state).is_none() {
        return Err(GraphError::UnknownState {
            variable: treatment.to_string(),
            state: forced_state.to_string(),
        }
        .into());
    }
    if !backdoor_blocked(net, treatment, target, adjustment)? {
        return Err(CausalError::BackdoorOpen {
            treatment: treatment.to_string(),
            target: target.to_string(),
            adjustment: adjustment.iter().map(|s| s.to_string()).collect(),
        });
    }
    let cards: Vec<usize> = z.iter().map(|&v| net.cardinality(v)).collect();
    let mut total = vec![0.0; net.cardinality(y)];
    let mut digits = vec![0usize; z.len()];
    loop {
        let mut stratum = Evidence::new();
        for (&v, &s) in z.iter().zip(&digits) {
            let var = &net.variables()[v];
            stratum.insert(var.name.clone(), var.states[s].clone());
        }
        let weight = inference::evidence_probability(net, &stratum)?;
        if weight >= IMPOSSIBLE_EVIDENCE {
            let conditioned = stratum.clone().with(treatment, forced_state);
            let d = inference::posterior(net, target, &conditioned)?;
            for (acc, p) in total.iter_mut().zip(&d.probabilities) {
                *acc += weight * p;
            }
        }
        if !advance(&mut digits, &cards) {
            break;
        }
    }
    Ok(Distribution::from_net(net, y, total))
}

fn advance(digits: &mut [usize], cards: &[usize]) -> bool {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < cards[k] {
            return true;
        }
        digits[k] = 0;
    }
    false
}

/// Actual world plus hypothetical copies of the intervention's descendants.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinNetwork {
    pub net: BayesNet,
    /// Original name to hypothetical copy, for every duplicated variable.
    pub hypothetical: BTreeMap<String, String>,
    /// Variables shared by both worlds.
    pub shared: BTreeSet<String>,
    pub intervention: Intervention,
    /// Decision arcs removed from the actual world as well.
    pub removed_actual_arcs: Vec<(String, String)>,
}

impl TwinNetwork {
    pub fn hypothetical_name(&self, original: &str) -> Option<&str> {
        self.hypothetical.get(original).map(String::as_str)
    }

    /// Node that represents `original` in the hypothetical world.
    pub fn hypothetical_node<'a>(&'a self, original: &'a str) -> &'a str {
        self.hypothetical_name(original).unwrap_or(original)
    }

    pub fn hypothetical_to_actual(&self) -> BTreeMap<&str, &str> {
        self.hypothetical
            .iter()
            .map(|(a, h)| (h.as_str(), a.as_str()))
            .collect()
    }
}

/// Builds the twin network for `intervention`.
///
/// With `counterfactual_treatment_mode`, decision arcs into intervened
/// treatment variables are cut in the actual world too; the actual treatment
/// then keeps its marginal behaviour given its remaining parents.
pub fn build_twin(
    net: &BayesNet,
    intervention: &Intervention,
    counterfactual_treatment_mode: bool,
) -> Result<TwinNetwork, CausalError> {
    let forced = resolve_intervention(net, intervention)?;
    let dag = net.dag();
    let mut duplicated = BTreeSet::new();
    for &(v, _) in &forced {
        duplicated.insert(v);
        duplicated.extend(dag.descendants(v));
    }

    let taken: BTreeSet<&str> = net.variables().iter().map(|v| v.name.as_str()).collect();
    let mut hypothetical = BTreeMap::new();
    let mut copy_of = vec![None; net.len()];
    for &v in &duplicated {
        let mut name = format!("{}'", net.name_of(v));
        while taken.contains(name.as_str()) || hypothetical.values().any(|n: &String| *n == name) {
            name.push('\'');
        }
        copy_of[v] = Some(name.clone());
        hypothetical.insert(net.name_of(v).to_string(), name);
    }
    let shared: BTreeSet<String> = (0..net.len())
        .filter(|v| !duplicated.contains(v))
        .map(|v| net.name_of(v).to_string())
        .collect();
    let forced_state: BTreeMap<usize, usize> = forced.iter().copied().collect();

    let original = net.to_parts();
    let mut variables = original.variables.clone();
    let mut edges = Vec::new();
    let mut decision_edges = Vec::new();
    let mut cpts = Vec::new();
    let mut removed_actual_arcs = Vec::new();

    // Actual world.
    let cut_in_actual = |e_to: &str| -> bool {
        counterfactual_treatment_mode
            && intervention.contains(e_to)
            && net.variable(e_to).map(|v| v.role) == Some(Role::Treatment)
    };
    for e in net.edges() {
        if e.decision && cut_in_actual(&e.to) {
            removed_actual_arcs.push((e.from.clone(), e.to.clone()));
            continue;
        }
        edges.push((e.from.clone(), e.to.clone()));
        if e.decision {
            decision_edges.push((e.from.clone(), e.to.clone()));
        }
    }
    for (v, cpt) in original.cpts.iter().enumerate() {
        let cut: Vec<&str> = removed_actual_arcs
            .iter()
            .filter(|(_, to)| *to == cpt.child)
            .map(|(from, _)| from.as_str())
            .collect();
        if cut.is_empty() {
            cpts.push(cpt.clone());
        } else {
            cpts.push(marginalized_cpt(net, v, &cut)?);
        }
    }

    // Hypothetical world.
    let rename = |u: usize| copy_of[u].clone().unwrap_or_else(|| net.name_of(u).to_string());
    for &v in &duplicated {
        let var = &net.variables()[v];
        let name = copy_of[v].clone().expect("duplicated variables have copies");
        variables.push(Variable {
            name: name.clone(),
            states: var.states.clone(),
            role: var.role,
        });
        if let Some(&s) = forced_state.get(&v) {
            cpts.push(Cpt::prior(name, point_mass(var.cardinality(), s)));
            continue;
        }
        let parents = net.cpt_parent_indices(v);
        for &p in parents {
            edges.push((rename(p), name.clone()));
            if net.is_decision_edge(net.name_of(p), &var.name) {
                decision_edges.push((rename(p), name.clone()));
            }
        }
        let parent_names: Vec<String> = parents.iter().map(|&p| rename(p)).collect();
        cpts.push(Cpt::new(name, &parent_names, net.cpt_table(v).to_vec()));
    }

    let twin = crate::graph::build_network(variables, edges, cpts, decision_edges)?;
    Ok(TwinNetwork {
        net: twin,
        hypothetical,
        shared,
        intervention: intervention.clone(),
        removed_actual_arcs,
    })
}

/// CPT of variable `v` once the parents in `cut` are removed:
/// `P(v | remaining parents)` under the original joint.
fn marginalized_cpt(net: &BayesNet, v: usize, cut: &[&str]) -> Result<Cpt, CausalError> {
    let name = net.name_of(v);
    let remaining: Vec<usize> = net
        .cpt_parent_indices(v)
        .iter()
        .copied()
        .filter(|&p| !cut.contains(&net.name_of(p)))
        .collect();
    let cards: Vec<usize> = remaining.iter().map(|&p| net.cardinality(p)).collect();
    let mut table = Vec::new();
    let mut digits = vec![0usize; remaining.len()];
    loop {
        let mut given = Evidence::new();
        for (&p, &s) in remaining.iter().zip(&digits) {
            let var = &net.variables()[p];
            given.insert(var.name.clone(), var.states[s].clone());
        }
        let row = match inference::posterior(net, name, &given) {
            Ok(d) => d.probabilities,
            Err(InferenceError::ImpossibleEvidence { .. }) => {
                let card = net.cardinality(v);
                vec![1.0 / card as f64; card]
            }
            Err(e) => return Err(e.into()),
        };
        table.push(row);
        if !advance(&mut digits, &cards) {
            break;
        }
    }
    let parent_names: Vec<&str> = remaining.iter().map(|&p| net.name_of(p)).collect();
    Ok(Cpt::new(name, &parent_names, table))
}

/// What `target` would have been under `intervention`, given what was
/// actually observed.
pub fn counterfactual_query(
    net: &BayesNet,
    actual_evidence: &Evidence,
    intervention: &Intervention,
    target: &str,
) -> Result<CausalQueryResult, CausalError> {
    net.require(target)?;
    let treatment_mode = intervention
        .variables()
        .any(|v| net.variable(v).map(|var| var.role) == Some(Role::Treatment));
    let twin = build_twin(net, intervention, treatment_mode)?;
    let node = twin.hypothetical_node(target);
    let distribution = inference::posterior(&twin.net, node, actual_evidence)?;

    let mut removed_edges = surgery_cuts(net, intervention)
        .into_iter()
        .map(|(from, to)| {
            let from = twin.hypothetical_node(&from).to_string();
            let to = twin.hypothetical_node(&to).to_string();
            (from, to)
        })
        .collect::<Vec<_>>();
    removed_edges.extend(twin.removed_actual_arcs.iter().cloned());
    let mut notes = vec![TWIN_SHARING_NOTE.to_string()];
    if treatment_mode {
        notes.push("decision arcs into the intervened treatment were removed in both worlds".to_string());
    }
    Ok(CausalQueryResult {
        distribution,
        provenance: Provenance {
            mode: QueryMode::Counterfactual,
            removed_edges,
            adjustment_set: None,
            notes,
        },
    })
}
