//! Exact observational inference.
//!
//! [`posterior`] runs variable elimination with a min-fill ordering.
//! [`enumerate_posterior`] sums the chain-rule joint over every completion of
//! the evidence and serves as the reference every other result is checked
//! against.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Assignment, BayesNet, GraphError};

/// Hard evidence: observed states for a subset of variables.
pub type Evidence = Assignment;

/// Evidence whose probability falls below this is treated as impossible.
pub const IMPOSSIBLE_EVIDENCE: f64 = 1e-12;

/// Largest network the enumeration oracle accepts.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("evidence is impossible (probability {probability:e})")]
    ImpossibleEvidence { probability: f64 },
    #[error("network has {variables} variables; enumeration is limited to {limit}")]
    TooLarge { variables: usize, limit: usize },
}

/// Normalized distribution over one variable's states, in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub variable: String,
    pub states: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn probability(&self, state: &str) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probabilities[i])
    }

    /// Largest per-state absolute difference. Distributions over different
    /// variables compare as infinitely far apart.
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        if self.variable != other.variable || self.states != other.states {
            return f64::INFINITY;
        }
        self.probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_net(net: &BayesNet, v: usize, probabilities: Vec<f64>) -> Self {
        let var = &net.variables()[v];
        Distribution {
            variable: var.name.clone(),
            states: var.states.clone(),
            probabilities,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.variable)?;
        for (s, p) in self.states.iter().zip(&self.probabilities) {
            write!(f, " {s}={p:.6}")?;
        }
        Ok(())
    }
}

/// Table over a sorted list of variables, row-major with the last variable
/// varying fastest.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn from_cpt(net: &BayesNet, v: usize) -> Self {
        let parents = net.cpt_parent_indices(v);
        let mut vars: Vec<usize> = parents.iter().copied().chain([v]).collect();
        vars.sort_unstable();
        let cards: Vec<usize> = vars.iter().map(|&u| net.cardinality(u)).collect();
        let table = net.cpt_table(v);
        let mut values = Vec::with_capacity(cards.iter().product());
        let mut states = vec![0usize; net.len()];
        for_each_assignment(&cards, |digits| {
            for (&u, &s) in vars.iter().zip(digits) {
                states[u] = s;
            }
            let mut row = 0;
            for &p in parents {
                row = row * net.cardinality(p) + states[p];
            }
            values.push(table[row][states[v]]);
        });
        Factor { vars, cards, values }
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for k in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.cards[k + 1];
        }
        strides
    }

    /// Fixes observed variables and drops them from the scope.
    fn reduce(&self, observed: &[Option<usize>]) -> Factor {
        if self.vars.iter().all(|&v| observed[v].is_none()) {
            return self.clone();
        }
        let strides = self.strides();
        let mut base = 0;
        let mut vars = Vec::new();
        let mut cards = Vec::new();
        let mut kept_strides = Vec::new();
        for (k, &v) in self.vars.iter().enumerate() {
            match observed[v] {
                Some(s) => base += s * strides[k],
                None => {
                    vars.push(v);
                    cards.push(self.cards[k]);
                    kept_strides.push(strides[k]);
                }
            }
        }
        let mut values = Vec::with_capacity(cards.iter().product());
        for_each_assignment(&cards, |digits| {
            let offset: usize = digits.iter().zip(&kept_strides).map(|(d, s)| d * s).sum();
            values.push(self.values[base + offset]);
        });
        Factor { vars, cards, values }
    }

    fn product(&self, other: &Factor) -> Factor {
        let mut vars: Vec<usize> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.position(*v)
                    .map(|k| self.cards[k])
                    .or_else(|| other.position(*v).map(|k| other.cards[k]))
                    .expect("variable comes from one of the operands")
            })
            .collect();
        let project = |f: &Factor| -> Vec<usize> {
            let strides = f.strides();
            vars.iter()
                .map(|v| f.position(*v).map_or(0, |k| strides[k]))
                .collect()
        };
        let (sa, sb) = (project(self), project(other));
        let mut values = Vec::with_capacity(cards.iter().product());
        for_each_assignment(&cards, |digits| {
            let ia: usize = digits.iter().zip(&sa).map(|(d, s)| d * s).sum();
            let ib: usize = digits.iter().zip(&sb).map(|(d, s)| d * s).sum();
            values.push(self.values[ia] * other.values[ib]);
        });
        Factor { vars, cards, values }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let k = self.position(var).expect("summed variable is in scope");
        let strides = self.strides();
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        cards.remove(k);
        let mut kept = strides.clone();
        kept.remove(k);
        let mut values = Vec::with_capacity(cards.iter().product());
        for_each_assignment(&cards, |digits| {
            let base: usize = digits.iter().zip(&kept).map(|(d, s)| d * s).sum();
            let total = (0..self.cards[k]).map(|s| self.values[base + s * strides[k]]).sum();
            values.push(total);
        });
        Factor { vars, cards, values }
    }

    fn position(&self, var: usize) -> Option<usize> {
        self.vars.binary_search(&var).ok()
    }
}

/// Calls `f` with every digit vector of the mixed-radix counter `cards`,
/// last digit fastest. An empty radix list yields one empty assignment.
fn for_each_assignment(cards: &[usize], mut f: impl FnMut(&[usize])) {
    if cards.contains(&0) {
        return;
    }
    let mut digits = vec![0usize; cards.len()];
    loop {
        f(&digits);
        let mut k = cards.len();
        loop {
            if k == 0 {
                return;
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

/// Result of one elimination run: a factor over the kept variables and the
/// product of every scalar that fell out along the way.
struct Eliminated {
    factor: Option<Factor>,
    scale: f64,
}

impl Eliminated {
    fn evidence_probability(&self) -> f64 {
        let mass: f64 = self.factor.as_ref().map_or(1.0, |f| f.values.iter().sum());
        self.scale * mass
    }
}

fn observed_states(net: &BayesNet, evidence: &Evidence) -> Result<Vec<Option<usize>>, GraphError> {
    let mut observed = vec![None; net.len()];
    for (v, s) in net.resolve(evidence)? {
        observed[v] = Some(s);
    }
    Ok(observed)
}

fn eliminate(net: &BayesNet, keep: Option<usize>, observed: &[Option<usize>]) -> Eliminated {
    // Only the query, the evidence and their ancestors matter; everything
    // else sums to one.
    let dag = net.dag();
    let mut relevant = vec![false; net.len()];
    let mut stack: Vec<usize> = keep
        .into_iter()
        .chain((0..net.len()).filter(|&v| observed[v].is_some()))
        .collect();
    while let Some(v) = stack.pop() {
        if !relevant[v] {
            relevant[v] = true;
            stack.extend(dag.parents[v].iter().copied());
        }
    }

    let mut scale = 1.0;
    let mut factors = Vec::new();
    for v in (0..net.len()).filter(|&v| relevant[v]) {
        let f = Factor::from_cpt(net, v).reduce(observed);
        if f.vars.is_empty() {
            scale *= f.values[0];
        } else {
            factors.push(f);
        }
    }

    let mut hidden: BTreeSet<usize> = (0..net.len())
        .filter(|&v| relevant[v] && observed[v].is_none() && Some(v) != keep)
        .collect();
    while let Some(var) = min_fill_choice(&hidden, &factors) {
        hidden.remove(&var);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.position(var).is_some());
        factors = rest;
        let Some(merged) = touching.into_iter().reduce(|a, b| a.product(&b)) else {
            continue;
        };
        let summed = merged.sum_out(var);
        if summed.vars.is_empty() {
            scale *= summed.values[0];
        } else {
            factors.push(summed);
        }
    }
    Eliminated {
        factor: factors.into_iter().reduce(|a, b| a.product(&b)),
        scale,
    }
}

/// Hidden variable whose elimination adds the fewest fill-in edges; ties go to
/// the earliest declared variable.
fn min_fill_choice(hidden: &BTreeSet<usize>, factors: &[Factor]) -> Option<usize> {
    let adjacent = |a: usize, b: usize| {
        factors
            .iter()
            .any(|f| f.position(a).is_some() && f.position(b).is_some())
    };
    hidden
        .iter()
        .map(|&h| {
            let neighbours: BTreeSet<usize> = factors
                .iter()
                .filter(|f| f.position(h).is_some())
                .flat_map(|f| f.vars.iter().copied())
                .filter(|&u| u != h)
                .collect();
            let nb: Vec<usize> = neighbours.into_iter().collect();
            let mut fill = 0usize;
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    if !adjacent(nb[i], nb[j]) {
                        fill += 1;
                    }
                }
            }
            (fill, h)
        })
        .min()
        .map(|(_, h)| h)
}

/// Posterior of `target` given hard evidence, by variable elimination.
pub fn posterior(net: &BayesNet, target: &str, evidence: &Evidence) -> Result<Distribution, InferenceError> {
    let t = net.require(target)?;
    let observed = observed_states(net, evidence)?;
    let run = eliminate(net, Some(t), &observed);
    let p_evidence = run.evidence_probability();
    if p_evidence < IMPOSSIBLE_EVIDENCE {
        return Err(InferenceError::ImpossibleEvidence { probability: p_evidence });
    }
    let card = net.cardinality(t);
    let probabilities = match (observed[t], run.factor) {
        (Some(s), _) => point_mass(card, s),
        (None, Some(f)) => {
            debug_assert_eq!(f.vars, vec![t]);
            let z: f64 = f.values.iter().sum();
            f.values.iter().map(|v| v / z).collect()
        }
        (None, None) => unreachable!("the target's own CPT keeps it in scope"),
    };
    Ok(Distribution::from_net(net, t, probabilities))
}

/// Probability of the evidence itself, summed over everything else.
pub fn evidence_probability(net: &BayesNet, evidence: &Evidence) -> Result<f64, InferenceError> {
    let observed = observed_states(net, evidence)?;
    Ok(eliminate(net, None, &observed).evidence_probability())
}

/// Posteriors for several targets. Each entry equals the corresponding
/// [`posterior`] call.
pub fn batch_query(
    net: &BayesNet,
    targets: &[&str],
    evidence: &Evidence,
) -> Result<BTreeMap<String, Distribution>, InferenceError> {
    targets
        .iter()
        .map(|t| Ok((t.to_string(), posterior(net, t, evidence)?)))
        .collect()
}

/// Brute-force posterior over every full assignment consistent with the
/// evidence.
pub fn enumerate_posterior(
    net: &BayesNet,
    target: &str,
    evidence: &Evidence,
) -> Result<Distribution, InferenceError> {
    if net.len() > ENUMERATION_LIMIT {
        return Err(InferenceError::TooLarge {
            variables: net.len(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let t = net.require(target)?;
    let observed = observed_states(net, evidence)?;
    let free: Vec<usize> = (0..net.len()).filter(|&v| observed[v].is_none()).collect();
    let cards: Vec<usize> = free.iter().map(|&v| net.cardinality(v)).collect();
    let mut states: Vec<usize> = observed.iter().map(|s| s.unwrap_or(0)).collect();
    let mut mass = vec![0.0; net.cardinality(t)];
    for_each_assignment(&cards, |digits| {
        for (&v, &s) in free.iter().zip(digits) {
            states[v] = s;
        }
        mass[states[t]] += net.joint_by_index(&states);
    });
    let total: f64 = mass.iter().sum();
    if total < IMPOSSIBLE_EVIDENCE {
        return Err(InferenceError::ImpossibleEvidence { probability: total });
    }
    Ok(Distribution::from_net(
        net,
        t,
        mass.into_iter().map(|m| m / total).collect(),
    ))
}

fn point_mass(card: usize, state: usize) -> Vec<f64> {
    let mut p = vec![0.0; card];
    p[state] = 1.0;
    p
}
