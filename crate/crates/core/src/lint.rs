//! Structural lint rules derived from the idioms' causal directions.
//!
//! Rule ids are frozen: new rules get new ids, existing ones never change
//! meaning. Unclassified variables are exempt from every role rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{BayesNet, Role, PROB_TOLERANCE};
use crate::idiom::{instantiate_instance, IdiomId, IdiomInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::R1,
        RuleId::R2,
        RuleId::R3,
        RuleId::R4,
        RuleId::R5,
        RuleId::R6,
        RuleId::R7,
        RuleId::R8,
    ];

    pub fn severity(self) -> Severity {
        match self {
            RuleId::R1 | RuleId::R2 | RuleId::R5 | RuleId::R6 => Severity::Error,
            RuleId::R3 | RuleId::R4 | RuleId::R7 | RuleId::R8 => Severity::Warning,
        }
    }

    /// The idiom guideline each rule enforces.
    pub fn anchor(self) -> &'static str {
        match self {
            RuleId::R1 => "manifestation idiom: a manifestation is a consequence of the condition, not its cause",
            RuleId::R2 => "risk factor idiom: a risk factor precedes the outcome, it is not a consequence of it",
            RuleId::R3 => "pathogenesis idiom: risk factors usually act on a condition through a pathogenic mechanism",
            RuleId::R4 => "role taxonomy: pathogenic mechanisms normally do not explain manifestations",
            RuleId::R5 => "complication idiom: a complication follows a condition or a treatment",
            RuleId::R6 => "manifestation reliability idiom: reliability qualifies reported observations only",
            RuleId::R7 => "treatment reliability idiom: reliability has no effect when the treatment is not applied",
            RuleId::R8 => "treatment idiom: treatment decisions are informed by decision arcs",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::R1 => "R1",
            RuleId::R2 => "R2",
            RuleId::R3 => "R3",
            RuleId::R4 => "R4",
            RuleId::R5 => "R5",
            RuleId::R6 => "R6",
            RuleId::R7 => "R7",
            RuleId::R8 => "R8",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub rule: RuleId,
    pub severity: Severity,
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub message: String,
    pub anchor: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}] {}", self.severity, self.rule, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub findings: Vec<Finding>,
    pub errors: usize,
    pub warnings: usize,
}

impl LintReport {
    pub fn has_errors(&self) -> bool {
        self.errors > 0
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn rules(&self) -> Vec<RuleId> {
        self.findings.iter().map(|f| f.rule).collect()
    }

    /// One line per finding followed by a summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out.push_str(&format!("{} error(s), {} warning(s)\n", self.errors, self.warnings));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lint reports serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LintConfigError {
    #[error("rule {0} reports errors and cannot be disabled")]
    ErrorRule(RuleId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintConfig {
    disabled: BTreeSet<RuleId>,
    /// Whether the model is meant for observational reasoning, which is when
    /// treatments are expected to carry decision arcs.
    pub observational_use: bool,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            disabled: BTreeSet::new(),
            observational_use: true,
        }
    }
}

impl LintConfig {
    /// Turns a warning rule off. Error rules stay on.
    pub fn disable(&mut self, rule: RuleId) -> Result<(), LintConfigError> {
        if rule.severity() == Severity::Error {
            return Err(LintConfigError::ErrorRule(rule));
        }
        self.disabled.insert(rule);
        Ok(())
    }

    pub fn errors_only() -> Self {
        let mut config = LintConfig::default();
        for rule in RuleId::ALL {
            let _ = config.disable(rule);
        }
        config
    }

    pub fn is_enabled(&self, rule: RuleId) -> bool {
        !self.disabled.contains(&rule)
    }
}

/// Lints with the default configuration.
pub fn lint(net: &BayesNet, instances: Option<&[IdiomInstance]>) -> LintReport {
    lint_with(net, instances, &LintConfig::default())
}

pub fn lint_with(net: &BayesNet, instances: Option<&[IdiomInstance]>, config: &LintConfig) -> LintReport {
    let mut findings = Vec::new();
    let role = |name: &str| net.variable(name).map(|v| v.role).expect("edge endpoints exist");
    let mut push = |rule: RuleId, nodes: Vec<String>, edges: Vec<(String, String)>, message: String| {
        if config.is_enabled(rule) {
            findings.push(Finding {
                rule,
                severity: rule.severity(),
                nodes,
                edges,
                message,
                anchor: rule.anchor().to_string(),
            });
        }
    };

    for e in net.edges() {
        let (from, to) = (role(&e.from), role(&e.to));
        let edge = || vec![(e.from.clone(), e.to.clone())];
        let nodes = || vec![e.from.clone(), e.to.clone()];
        if from.is_manifestation() && to.is_condition_like() {
            push(
                RuleId::R1,
                nodes(),
                edge(),
                format!(
                    "{} -> {}: {from} `{}` points into {to} `{}`; manifestations are consequences of conditions",
                    e.from, e.to, e.from, e.to
                ),
            );
        }
        if (to == Role::RiskFactor) && (from.is_condition_like() || from == Role::Complication) {
            push(
                RuleId::R2,
                nodes(),
                edge(),
                format!(
                    "{} -> {}: risk factor `{}` is caused by {from} `{}`; risk factors precede the outcome",
                    e.from, e.to, e.to, e.from
                ),
            );
        }
        if from == Role::RiskFactor && to.is_condition_like() {
            let mediators: Vec<String> = net
                .descendants(&e.from)
                .expect("edge endpoints exist")
                .into_iter()
                .filter(|m| role(m) == Role::PathogenicMechanism)
                .filter(|m| net.descendants(m).expect("known").contains(&e.to))
                .collect();
            if !mediators.is_empty() {
                let mut nodes = nodes();
                nodes.extend(mediators.iter().cloned());
                push(
                    RuleId::R3,
                    nodes,
                    edge(),
                    format!(
                        "{} -> {}: direct risk-factor edge although mechanism(s) {} already mediate it",
                        e.from,
                        e.to,
                        mediators.join(", ")
                    ),
                );
            }
        }
        if from == Role::PathogenicMechanism && to.is_manifestation() {
            push(
                RuleId::R4,
                nodes(),
                edge(),
                format!(
                    "{} -> {}: pathogenic mechanism `{}` explains {to} `{}`",
                    e.from, e.to, e.from, e.to
                ),
            );
        }
        if from == Role::Reliability
            && matches!(
                to,
                Role::Condition | Role::Comorbidity | Role::RiskFactor | Role::PathogenicMechanism | Role::Treatment
            )
        {
            push(
                RuleId::R6,
                nodes(),
                edge(),
                format!(
                    "{} -> {}: reliability `{}` influences {to} `{}` instead of a reported observation",
                    e.from, e.to, e.from, e.to
                ),
            );
        }
    }

    for var in net.variables() {
        if var.role == Role::Complication {
            let ancestors = net.ancestors(&var.name).expect("known");
            let explained = ancestors.iter().any(|a| {
                matches!(
                    role(a),
                    Role::Condition | Role::Comorbidity | Role::Treatment | Role::Unclassified
                )
            });
            if !explained {
                push(
                    RuleId::R5,
                    vec![var.name.clone()],
                    Vec::new(),
                    format!(
                        "complication `{}` has no condition, comorbidity or treatment among its causes",
                        var.name
                    ),
                );
            }
        }
        if var.role == Role::Treatment && config.observational_use {
            let parents = net.parents(&var.name).expect("known");
            if parents.is_empty() {
                push(
                    RuleId::R8,
                    vec![var.name.clone()],
                    Vec::new(),
                    format!("treatment `{}` has no decision arc and no parents", var.name),
                );
            }
        }
    }

    for instance in instances.into_iter().flatten() {
        if instance.template != IdiomId::TreatmentReliability {
            continue;
        }
        if let Some((nodes, diff)) = reliability_leak(net, instance) {
            push(
                RuleId::R7,
                nodes.clone(),
                Vec::new(),
                format!(
                    "idiom `{}`: outcome `{}` still depends on reliability `{}` when `{}` is not applied (difference {diff:.3e})",
                    instance.name, nodes[0], nodes[2], nodes[1]
                ),
            );
        }
    }

    let order: BTreeMap<&str, usize> = net
        .topological_order()
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n, i))
        .collect();
    let key = |f: &Finding| -> (RuleId, Vec<usize>) {
        (f.rule, f.nodes.iter().map(|n| order[n.as_str()]).collect())
    };
    findings.sort_by_key(key);
    let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
    let warnings = findings.len() - errors;
    LintReport {
        findings,
        errors,
        warnings,
    }
}

/// Index of the state meaning "treatment not applied": the first label that
/// reads as a negation, otherwise the last state.
pub fn not_applied_state(states: &[String]) -> usize {
    const NEGATIVE: &[&str] = &[
        "no", "none", "not_applied", "not_given", "not_taken", "untreated", "absent", "false", "off",
    ];
    states
        .iter()
        .position(|s| {
            let s = s.to_ascii_lowercase();
            NEGATIVE.contains(&s.as_str()) || s.starts_with("not_") || s.starts_with("no_")
        })
        .unwrap_or(states.len().saturating_sub(1))
}

/// `(outcome, treatment, reliability)` plus the largest row difference across
/// reliability states when the treatment is not applied, if it exceeds the
/// tolerance.
fn reliability_leak(net: &BayesNet, instance: &IdiomInstance) -> Option<(Vec<String>, f64)> {
    let one = |slot: &str| instance.bindings.get(slot).and_then(|v| v.first()).cloned();
    let (outcome, treatment, reliability) = (one("outcome")?, one("treatment")?, one("reliability")?);
    let cpt = net.cpt(&outcome)?;
    let t_pos = cpt.parents.iter().position(|p| *p == treatment)?;
    let r_pos = cpt.parents.iter().position(|p| *p == reliability)?;
    let cards: Vec<usize> = cpt
        .parents
        .iter()
        .map(|p| net.variable(p).map(|v| v.cardinality()))
        .collect::<Option<_>>()?;
    let idle = not_applied_state(&net.variable(&treatment)?.states);

    let row_of = |digits: &[usize]| digits.iter().zip(&cards).fold(0, |acc, (d, c)| acc * c + d);
    let mut worst: f64 = 0.0;
    let mut digits = vec![0usize; cards.len()];
    loop {
        if digits[t_pos] == idle && digits[r_pos] == 0 {
            let base = &cpt.table[row_of(&digits)];
            for r in 1..cards[r_pos] {
                let mut other = digits.clone();
                other[r_pos] = r;
                let row = &cpt.table[row_of(&other)];
                for (a, b) in base.iter().zip(row) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        let mut k = cards.len();
        loop {
            if k == 0 {
                let nodes = vec![outcome, treatment, reliability];
                return (worst > PROB_TOLERANCE).then_some((nodes, worst));
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < cards[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoveredEdge {
    pub from: String,
    pub to: String,
    pub instances: Vec<String>,
}

/// Partition of a network's edges into idiom-covered and raw ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub covered: Vec<CoveredEdge>,
    pub uncovered: Vec<(String, String)>,
}

impl CoverageReport {
    /// Covered fraction of all edges; an edgeless network counts as covered.
    pub fn ratio(&self) -> f64 {
        let total = self.covered.len() + self.uncovered.len();
        if total == 0 {
            1.0
        } else {
            self.covered.len() as f64 / total as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Which edges some idiom instance accounts for. Instances that fail to
/// expand contribute nothing.
pub fn coverage(net: &BayesNet, instances: &[IdiomInstance]) -> CoverageReport {
    let mut credit: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for instance in instances {
        let role_of = |n: &str| net.variable(n).map(|v| v.role);
        let Ok(fragment) = instantiate_instance(instance, role_of) else {
            continue;
        };
        for key in fragment.edges().keys() {
            let names = credit.entry(key.clone()).or_default();
            if !names.contains(&instance.name) {
                names.push(instance.name.clone());
            }
        }
    }
    let mut report = CoverageReport::default();
    for e in net.edges() {
        match credit.get(&(e.from.clone(), e.to.clone())) {
            Some(names) => report.covered.push(CoveredEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                instances: names.clone(),
            }),
            None => report.uncovered.push((e.from.clone(), e.to.clone())),
        }
    }
    report
}
