//! Idiom templates: reusable graph fragments with typed role slots.
//!
//! The catalog holds ten clinical idioms and four generic ones. An
//! [`IdiomInstance`] binds concrete variables to a template's slots and
//! [`instantiate`] expands it into a [`Fragment`]; [`compose`] merges
//! fragments into a network skeleton.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{find_cycle, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdiomId {
    Manifestation,
    ManifestationReliability,
    RiskFactor,
    Pathogenesis,
    ComorbidityCommonCause,
    ComorbidityCommonSymptomology,
    Complication,
    Treatment,
    TreatmentReliability,
    CounterfactualTreatment,
    CauseConsequence,
    Measurement,
    DefinitionSynthesis,
    Induction,
}

impl IdiomId {
    /// Catalog order.
    pub const ALL: [IdiomId; 14] = [
        IdiomId::Manifestation,
        IdiomId::ManifestationReliability,
        IdiomId::RiskFactor,
        IdiomId::Pathogenesis,
        IdiomId::ComorbidityCommonCause,
        IdiomId::ComorbidityCommonSymptomology,
        IdiomId::Complication,
        IdiomId::Treatment,
        IdiomId::TreatmentReliability,
        IdiomId::CounterfactualTreatment,
        IdiomId::CauseConsequence,
        IdiomId::Measurement,
        IdiomId::DefinitionSynthesis,
        IdiomId::Induction,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            IdiomId::Manifestation => "manifestation",
            IdiomId::ManifestationReliability => "manifestation_reliability",
            IdiomId::RiskFactor => "risk_factor",
            IdiomId::Pathogenesis => "pathogenesis",
            IdiomId::ComorbidityCommonCause => "comorbidity_common_cause",
            IdiomId::ComorbidityCommonSymptomology => "comorbidity_common_symptomology",
            IdiomId::Complication => "complication",
            IdiomId::Treatment => "treatment",
            IdiomId::TreatmentReliability => "treatment_reliability",
            IdiomId::CounterfactualTreatment => "counterfactual_treatment",
            IdiomId::CauseConsequence => "cause_consequence",
            IdiomId::Measurement => "measurement",
            IdiomId::DefinitionSynthesis => "definition_synthesis",
            IdiomId::Induction => "induction",
        }
    }

    pub fn from_keyword(word: &str) -> Option<IdiomId> {
        IdiomId::ALL.into_iter().find(|id| id.keyword() == word)
    }

    pub fn template(self) -> &'static IdiomTemplate {
        &CATALOG[self as usize]
    }

    fn catalog_position(self) -> usize {
        self as usize
    }
}

impl fmt::Display for IdiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    /// Exactly one variable.
    One,
    /// One or more variables.
    Many,
    /// Zero or more variables.
    Optional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub name: &'static str,
    pub arity: Arity,
    /// Roles a conforming binding carries. The first one is the default role
    /// given to variables whose role is not otherwise known.
    pub allowed: &'static [Role],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaEdge {
    pub from: &'static str,
    pub to: &'static str,
    pub decision: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdiomTemplate {
    pub id: IdiomId,
    pub summary: &'static str,
    pub slots: &'static [Slot],
    pub edges: &'static [SchemaEdge],
}

impl IdiomTemplate {
    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.slots.iter().find(|s| s.name == name)
    }
}

use Role::*;

const COND: &[Role] = &[Condition, Comorbidity];
const COND_OR_PM: &[Role] = &[Condition, Comorbidity, PathogenicMechanism];
const MANIF: &[Role] = &[Symptom, Sign, MedicalTest];
const RF: &[Role] = &[RiskFactor];
const PM: &[Role] = &[PathogenicMechanism];
const TREAT: &[Role] = &[Treatment];
const COMPL: &[Role] = &[Complication];
const REL: &[Role] = &[Reliability];
const REL_FACTOR: &[Role] = &[Reliability, Unclassified];
const RF_AFFECTED: &[Role] = &[Condition, Comorbidity, Symptom, Sign, MedicalTest, Treatment];
const SHARED_CAUSE: &[Role] = &[RiskFactor, PathogenicMechanism, Condition, Comorbidity];
const COMORBID: &[Role] = &[Comorbidity];
const COMPL_CAUSE: &[Role] = &[Condition, Comorbidity, Treatment];
const CAUSE: &[Role] = &[
    Unclassified,
    Condition,
    Comorbidity,
    RiskFactor,
    PathogenicMechanism,
    Treatment,
    Synthetic,
];
const CONSEQUENCE: &[Role] = &[
    Unclassified,
    Condition,
    Comorbidity,
    PathogenicMechanism,
    Symptom,
    Sign,
    MedicalTest,
    Synthetic,
];
const MEAS_ACTUAL: &[Role] = &[Unclassified, Condition, Comorbidity, PathogenicMechanism, Synthetic];
const MEAS_ASSESSED: &[Role] = &[MedicalTest, Symptom, Sign, Unclassified];
const PARTS: &[Role] = &[
    Unclassified,
    Condition,
    Symptom,
    Sign,
    MedicalTest,
    RiskFactor,
    PathogenicMechanism,
    Treatment,
    Comorbidity,
    Reliability,
    Synthetic,
];
const SYNTH: &[Role] = &[Synthetic];
const IND_PARAM: &[Role] = &[Unclassified, Synthetic];
const IND_OBS: &[Role] = &[Unclassified, Symptom, Sign, MedicalTest, Synthetic];

const fn slot(name: &'static str, arity: Arity, allowed: &'static [Role]) -> Slot {
    Slot { name, arity, allowed }
}

const fn arc(from: &'static str, to: &'static str) -> SchemaEdge {
    SchemaEdge { from, to, decision: false }
}

const fn decision(from: &'static str, to: &'static str) -> SchemaEdge {
    SchemaEdge { from, to, decision: true }
}

const TREATMENT_SLOTS: &[Slot] = &[
    slot("condition", Arity::One, COND),
    slot("treatment", Arity::One, TREAT),
    slot("outcome", Arity::One, COMPL),
];
const TREATMENT_EDGES: &[SchemaEdge] = &[
    decision("condition", "treatment"),
    arc("treatment", "outcome"),
    arc("condition", "outcome"),
];

static CATALOG: [IdiomTemplate; 14] = [
    IdiomTemplate {
        id: IdiomId::Manifestation,
        summary: "condition causes each observable manifestation",
        slots: &[
            slot("condition", Arity::One, COND),
            slot("manifestations", Arity::Many, MANIF),
        ],
        edges: &[arc("condition", "manifestations")],
    },
    IdiomTemplate {
        id: IdiomId::ManifestationReliability,
        summary: "reported manifestation depends on the actual one and on the reporter's reliability",
        slots: &[
            slot("condition", Arity::One, COND),
            slot("actual", Arity::One, MANIF),
            slot("reported", Arity::One, MANIF),
            slot("reliability", Arity::One, REL),
            slot("factors", Arity::Optional, REL_FACTOR),
        ],
        edges: &[
            arc("condition", "actual"),
            arc("actual", "reported"),
            arc("reliability", "reported"),
            arc("factors", "reliability"),
        ],
    },
    IdiomTemplate {
        id: IdiomId::RiskFactor,
        summary: "observable risk factor directly affects a condition, manifestation or treatment",
        slots: &[
            slot("risk_factors", Arity::Many, RF),
            slot("affected", Arity::Many, RF_AFFECTED),
        ],
        edges: &[arc("risk_factors", "affected")],
    },
    IdiomTemplate {
        id: IdiomId::Pathogenesis,
        summary: "risk factors act on the condition through an unobserved mechanism",
        slots: &[
            slot("risk_factors", Arity::Many, RF),
            slot("mechanism", Arity::One, PM),
            slot("condition", Arity::One, COND),
        ],
        edges: &[arc("risk_factors", "mechanism"), arc("mechanism", "condition")],
    },
    IdiomTemplate {
        id: IdiomId::ComorbidityCommonCause,
        summary: "two conditions share a cause",
        slots: &[
            slot("cause", Arity::One, SHARED_CAUSE),
            slot("condition", Arity::One, COND_OR_PM),
            slot("comorbidity", Arity::One, COMORBID),
        ],
        edges: &[arc("cause", "condition"), arc("cause", "comorbidity")],
    },
    IdiomTemplate {
        id: IdiomId::ComorbidityCommonSymptomology,
        summary: "two conditions share a consequence",
        slots: &[
            slot("condition", Arity::One, COND_OR_PM),
            slot("comorbidity", Arity::One, COMORBID),
            slot("manifestation", Arity::One, MANIF),
        ],
        edges: &[arc("condition", "manifestation"), arc("comorbidity", "manifestation")],
    },
    IdiomTemplate {
        id: IdiomId::Complication,
        summary: "condition or treatment leads to a late unfavourable consequence",
        slots: &[
            slot("cause", Arity::One, COMPL_CAUSE),
            slot("complication", Arity::One, COMPL),
        ],
        edges: &[arc("cause", "complication")],
    },
    IdiomTemplate {
        id: IdiomId::Treatment,
        summary: "condition drives the treatment decision; both affect the outcome",
        slots: TREATMENT_SLOTS,
        edges: TREATMENT_EDGES,
    },
    IdiomTemplate {
        id: IdiomId::TreatmentReliability,
        summary: "treatment idiom where adherence reliability modulates the treatment effect",
        slots: &[
            slot("condition", Arity::One, COND),
            slot("treatment", Arity::One, TREAT),
            slot("outcome", Arity::One, COMPL),
            slot("reliability", Arity::One, REL),
        ],
        edges: &[
            decision("condition", "treatment"),
            arc("treatment", "outcome"),
            arc("condition", "outcome"),
            arc("reliability", "outcome"),
        ],
    },
    IdiomTemplate {
        id: IdiomId::CounterfactualTreatment,
        summary: "treatment idiom intended for twin-network counterfactual queries",
        slots: TREATMENT_SLOTS,
        edges: TREATMENT_EDGES,
    },
    IdiomTemplate {
        id: IdiomId::CauseConsequence,
        summary: "a cause precedes and produces its consequence",
        slots: &[
            slot("cause", Arity::One, CAUSE),
            slot("consequence", Arity::One, CONSEQUENCE),
        ],
        edges: &[arc("cause", "consequence")],
    },
    IdiomTemplate {
        id: IdiomId::Measurement,
        summary: "assessed value depends on the actual value and the measurement accuracy",
        slots: &[
            slot("actual", Arity::One, MEAS_ACTUAL),
            slot("assessed", Arity::One, MEAS_ASSESSED),
            slot("accuracy", Arity::Optional, REL_FACTOR),
        ],
        edges: &[arc("actual", "assessed"), arc("accuracy", "assessed")],
    },
    IdiomTemplate {
        id: IdiomId::DefinitionSynthesis,
        summary: "a synthetic node combines its constituent parts",
        slots: &[
            slot("parts", Arity::Many, PARTS),
            slot("synthetic", Arity::One, SYNTH),
        ],
        edges: &[arc("parts", "synthetic")],
    },
    IdiomTemplate {
        id: IdiomId::Induction,
        summary: "population parameter generates observations (structure only)",
        slots: &[
            slot("parameter", Arity::One, IND_PARAM),
            slot("observations", Arity::Many, IND_OBS),
        ],
        edges: &[arc("parameter", "observations")],
    },
];

/// All fourteen templates in catalog order.
pub fn catalog() -> &'static [IdiomTemplate] {
    &CATALOG
}

/// Slot name to bound variable names.
pub type Bindings = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdiomInstance {
    pub template: IdiomId,
    /// Instance label, unique within a model.
    pub name: String,
    pub bindings: Bindings,
}

impl IdiomInstance {
    pub fn new(template: IdiomId, name: impl Into<String>) -> Self {
        IdiomInstance {
            template,
            name: name.into(),
            bindings: Bindings::new(),
        }
    }

    pub fn bind<S: AsRef<str>>(mut self, slot: &str, variables: &[S]) -> Self {
        self.bindings.insert(
            slot.to_string(),
            variables.iter().map(|v| v.as_ref().to_string()).collect(),
        );
        self
    }

    /// Every bound variable, in slot order.
    pub fn variables(&self) -> Vec<&str> {
        let template = self.template.template();
        let mut out = Vec::new();
        for slot in template.slots {
            for v in self.bindings.get(slot.name).into_iter().flatten() {
                if !out.contains(&v.as_str()) {
                    out.push(v.as_str());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IdiomWarning {
    RoleMismatch {
        instance: String,
        slot: String,
        variable: String,
        role: Role,
    },
    MultiRole {
        variable: String,
        roles: Vec<Role>,
    },
    NotQuantified {
        instance: String,
    },
}

impl fmt::Display for IdiomWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdiomWarning::RoleMismatch { instance, slot, variable, role } => write!(
                f,
                "`{variable}` has role {role}, which slot `{slot}` of idiom `{instance}` does not expect"
            ),
            IdiomWarning::MultiRole { variable, roles } => {
                let roles: Vec<&str> = roles.iter().map(|r| r.keyword()).collect();
                write!(f, "`{variable}` plays several roles: {}", roles.join(", "))
            }
            IdiomWarning::NotQuantified { instance } => write!(
                f,
                "induction idiom `{instance}` is structural only; its parameters are not learned"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdiomError {
    #[error("idiom `{instance}` does not bind required slot `{slot}`")]
    MissingSlot { instance: String, slot: String },
    #[error("idiom `{instance}` binds {found} variable(s) to slot `{slot}` ({expected})")]
    ArityViolation {
        instance: String,
        slot: String,
        expected: &'static str,
        found: usize,
    },
    #[error("idiom `{instance}` has no slot `{slot}`")]
    UnknownSlot { instance: String, slot: String },
    #[error("idiom `{instance}` binds `{variable}` more than once")]
    DuplicateBinding { instance: String, variable: String },
    #[error("composition creates a cycle: {}", .cycle.join(" -> "))]
    CompositionCycle {
        cycle: Vec<String>,
        /// Each edge on the cycle with the fragments that contributed it.
        contributors: Vec<((String, String), Vec<String>)>,
    },
    #[error("cannot suggest an idiom for an empty group")]
    EmptyGroup,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FragmentEdge {
    pub decision: bool,
    /// Labels of the instances (or raw declarations) that produced the edge.
    pub sources: BTreeSet<String>,
}

/// Variables and edges contributed by one or more idiom instances.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Fragment {
    variables: BTreeMap<String, BTreeSet<Role>>,
    edges: BTreeMap<(String, String), FragmentEdge>,
    warnings: Vec<IdiomWarning>,
}

impl Fragment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: &str, role: Role) {
        self.variables.entry(name.to_string()).or_default().insert(role);
    }

    /// Adds (or merges into) an edge; endpoints must already be present.
    pub fn add_edge(&mut self, from: &str, to: &str, decision: bool, source: &str) {
        let entry = self
            .edges
            .entry((from.to_string(), to.to_string()))
            .or_insert_with(|| FragmentEdge {
                decision: false,
                sources: BTreeSet::new(),
            });
        entry.decision |= decision;
        entry.sources.insert(source.to_string());
    }

    pub fn variables(&self) -> &BTreeMap<String, BTreeSet<Role>> {
        &self.variables
    }

    pub fn edges(&self) -> &BTreeMap<(String, String), FragmentEdge> {
        &self.edges
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&FragmentEdge> {
        self.edges.get(&(from.to_string(), to.to_string()))
    }

    pub fn warnings(&self) -> &[IdiomWarning] {
        &self.warnings
    }

    /// Edge pairs without provenance, for structural comparisons.
    pub fn edge_pairs(&self) -> BTreeSet<(String, String, bool)> {
        self.edges
            .iter()
            .map(|((a, b), e)| (a.clone(), b.clone(), e.decision))
            .collect()
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        let names: Vec<&String> = self
            .variables
            .keys()
            .chain(self.edges.keys().flat_map(|(a, b)| [a, b]))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos = |n: &String| names.binary_search(&n).expect("name collected above");
        let mut children = vec![Vec::new(); names.len()];
        for (a, b) in self.edges.keys() {
            children[pos(a)].push(pos(b));
        }
        find_cycle(&children).map(|c| c.into_iter().map(|i| names[i].clone()).collect())
    }
}

/// Expands a template using each slot's default role for every variable.
pub fn instantiate(template: IdiomId, bindings: &Bindings) -> Result<Fragment, IdiomError> {
    let instance = IdiomInstance {
        template,
        name: template.keyword().to_string(),
        bindings: bindings.clone(),
    };
    instantiate_instance(&instance, |_| None)
}

/// Expands an instance; `role_of` supplies declared roles (falling back to
/// the slot default). Bindings whose role the slot does not expect succeed
/// with a warning attached to the fragment.
pub fn instantiate_instance(
    instance: &IdiomInstance,
    role_of: impl Fn(&str) -> Option<Role>,
) -> Result<Fragment, IdiomError> {
    let template = instance.template.template();
    let label = &instance.name;
    for slot in instance.bindings.keys() {
        if template.slot(slot).is_none() {
            return Err(IdiomError::UnknownSlot {
                instance: label.clone(),
                slot: slot.clone(),
            });
        }
    }

    let mut fragment = Fragment::new();
    let mut seen = BTreeSet::new();
    for slot in template.slots {
        let bound = instance.bindings.get(slot.name);
        let count = bound.map_or(0, Vec::len);
        let (ok, expected) = match slot.arity {
            Arity::One => (count == 1, "exactly one"),
            Arity::Many => (count >= 1, "at least one"),
            Arity::Optional => (true, "any number"),
        };
        if !ok {
            return Err(if bound.is_none() {
                IdiomError::MissingSlot {
                    instance: label.clone(),
                    slot: slot.name.to_string(),
                }
            } else {
                IdiomError::ArityViolation {
                    instance: label.clone(),
                    slot: slot.name.to_string(),
                    expected,
                    found: count,
                }
            });
        }
        for var in bound.into_iter().flatten() {
            if !seen.insert(var.clone()) {
                return Err(IdiomError::DuplicateBinding {
                    instance: label.clone(),
                    variable: var.clone(),
                });
            }
            let role = role_of(var).unwrap_or(slot.allowed[0]);
            if !slot.allowed.contains(&role) {
                fragment.warnings.push(IdiomWarning::RoleMismatch {
                    instance: label.clone(),
                    slot: slot.name.to_string(),
                    variable: var.clone(),
                    role,
                });
            }
            fragment.add_variable(var, role);
        }
    }

    for edge in template.edges {
        let froms = instance.bindings.get(edge.from).into_iter().flatten();
        for from in froms {
            for to in instance.bindings.get(edge.to).into_iter().flatten() {
                fragment.add_edge(from, to, edge.decision, label);
            }
        }
    }
    if instance.template == IdiomId::Induction {
        fragment.warnings.push(IdiomWarning::NotQuantified {
            instance: label.clone(),
        });
    }
    debug_assert!(fragment.find_cycle().is_none());
    Ok(fragment)
}

/// Union of fragments keyed by variable name. Shared edges merge (decision
/// flags OR-ed, sources united); a variable seen with several roles keeps them
/// all and earns a warning.
pub fn compose(fragments: &[Fragment]) -> Result<Fragment, IdiomError> {
    let mut out = Fragment::new();
    for f in fragments {
        for (name, roles) in &f.variables {
            out.variables.entry(name.clone()).or_default().extend(roles);
        }
        for ((a, b), e) in &f.edges {
            for s in &e.sources {
                out.add_edge(a, b, e.decision, s);
            }
        }
        out.warnings.extend(
            f.warnings
                .iter()
                .filter(|w| !matches!(w, IdiomWarning::MultiRole { .. }))
                .cloned(),
        );
    }
    for (a, b) in out.edges.keys() {
        debug_assert!(out.variables.contains_key(a) && out.variables.contains_key(b));
    }
    for (name, roles) in &out.variables {
        if roles.len() > 1 {
            out.warnings.push(IdiomWarning::MultiRole {
                variable: name.clone(),
                roles: roles.iter().copied().collect(),
            });
        }
    }
    if let Some(cycle) = out.find_cycle() {
        let contributors = cycle
            .iter()
            .zip(cycle.iter().cycle().skip(1))
            .map(|(a, b)| {
                let e = &out.edges[&(a.clone(), b.clone())];
                ((a.clone(), b.clone()), e.sources.iter().cloned().collect())
            })
            .collect();
        return Err(IdiomError::CompositionCycle { cycle, contributors });
    }
    Ok(out)
}

/// Optional context that sharpens [`suggest_idiom`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SuggestHints {
    /// Whether the mechanism linking a risk factor to the condition is observable.
    pub mediator_observable: Option<bool>,
    /// Whether observations are reported or interpreted by people.
    pub human_reported: Option<bool>,
    /// Whether the consequence is a late effect.
    pub temporal_late_effect: Option<bool>,
}

/// Ranks idioms for a group of role-tagged variables, most specific first.
///
/// The ranking is a rule table over the roles present in the group; ties
/// follow catalog order and the generic cause-consequence idiom is always
/// the last resort.
pub fn suggest_idiom(group: &[(String, Role)], hints: &SuggestHints) -> Result<Vec<IdiomId>, IdiomError> {
    if group.is_empty() {
        return Err(IdiomError::EmptyGroup);
    }
    let count = |pred: fn(Role) -> bool| group.iter().filter(|(_, r)| pred(*r)).count();
    let conditions = count(Role::is_condition_like);
    let manifestations = count(Role::is_manifestation);
    let risk_factors = count(|r| r == Role::RiskFactor);
    let mechanisms = count(|r| r == Role::PathogenicMechanism);
    let treatments = count(|r| r == Role::Treatment);
    let complications = count(|r| r == Role::Complication);
    let reliabilities = count(|r| r == Role::Reliability);
    let synthetics = count(|r| r == Role::Synthetic);

    // (specificity tier, idiom); higher tiers rank first.
    let mut ranked: Vec<(u8, IdiomId)> = Vec::new();
    let reported = hints.human_reported == Some(true);

    if conditions >= 1 && manifestations >= 1 {
        ranked.push((2, IdiomId::Manifestation));
        if reported || reliabilities >= 1 {
            ranked.push((3, IdiomId::ManifestationReliability));
        }
        if conditions >= 2 {
            ranked.push((3, IdiomId::ComorbidityCommonSymptomology));
        }
    }
    if risk_factors >= 1 && conditions >= 1 {
        if hints.mediator_observable == Some(false) || mechanisms >= 1 {
            ranked.push((3, IdiomId::Pathogenesis));
            ranked.push((2, IdiomId::RiskFactor));
        } else {
            ranked.push((2, IdiomId::RiskFactor));
            ranked.push((1, IdiomId::Pathogenesis));
        }
        if conditions >= 2 {
            ranked.push((3, IdiomId::ComorbidityCommonCause));
        }
    } else if risk_factors >= 1 && (manifestations >= 1 || treatments >= 1) {
        ranked.push((2, IdiomId::RiskFactor));
    }
    if complications >= 1 && (conditions >= 1 || treatments >= 1) {
        match hints.temporal_late_effect {
            Some(true) => ranked.push((3, IdiomId::Complication)),
            None => ranked.push((1, IdiomId::Complication)),
            Some(false) => {}
        }
    }
    if conditions >= 1 && treatments >= 1 {
        ranked.push((2, IdiomId::Treatment));
        if reported || reliabilities >= 1 {
            ranked.push((3, IdiomId::TreatmentReliability));
        }
    }
    if reliabilities >= 1 && conditions == 0 {
        ranked.push((1, IdiomId::Measurement));
    }
    if synthetics >= 1 {
        ranked.push((1, IdiomId::DefinitionSynthesis));
    }
    ranked.push((0, IdiomId::CauseConsequence));

    let mut best: BTreeMap<IdiomId, u8> = BTreeMap::new();
    for (tier, id) in ranked {
        let e = best.entry(id).or_insert(tier);
        *e = (*e).max(tier);
    }
    let mut out: Vec<(u8, IdiomId)> = best.into_iter().map(|(id, t)| (t, id)).collect();
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.catalog_position().cmp(&b.1.catalog_position())));
    Ok(out.into_iter().map(|(_, id)| id).collect())
}
