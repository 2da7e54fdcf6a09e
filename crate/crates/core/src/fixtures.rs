//! The bundled `.idbn` corpus with expected results for each model.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::causal::{counterfactual_query, interventional_query, Intervention};
use crate::graph::{Assignment, BayesNet};
use crate::idiom::IdiomInstance;
use crate::inference::{posterior, Evidence};
use crate::lint::{coverage, lint, RuleId};
use crate::model::{load, Diagnostic, Elaboration};

type Pairs = &'static [(&'static str, &'static str)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QueryKind {
    Observational,
    Interventional(Pairs),
    /// Evidence is the actual world; the pairs are the hypothetical intervention.
    Counterfactual(Pairs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedQuery {
    pub target: &'static str,
    pub state: &'static str,
    pub evidence: Pairs,
    pub kind: QueryKind,
    pub probability: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expectation {
    Query(ExpectedQuery),
    /// Rule ids of the lint findings, in report order.
    Lint(&'static [RuleId]),
    DSeparated {
        x: &'static [&'static str],
        y: &'static [&'static str],
        given: &'static [&'static str],
        separated: bool,
    },
    /// Every edge is produced by some idiom instance.
    FullCoverage,
}

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub id: &'static str,
    pub file: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
    pub expectations: &'static [Expectation],
    source: &'static str,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} diagnostic(s), first: {}", .0.len(), .0.first().map(ToString::to_string).unwrap_or_default())]
    Invalid(Vec<Diagnostic>),
}

/// A fixture elaborated into a network.
#[derive(Debug, Clone)]
pub struct LoadedFixture {
    pub fixture: &'static Fixture,
    pub net: BayesNet,
    pub instances: Vec<IdiomInstance>,
}

impl LoadedFixture {
    pub fn expectations(&self) -> &'static [Expectation] {
        self.fixture.expectations
    }
}

const fn observe(
    target: &'static str,
    state: &'static str,
    evidence: Pairs,
    probability: f64,
    tolerance: f64,
) -> Expectation {
    Expectation::Query(ExpectedQuery {
        target,
        state,
        evidence,
        kind: QueryKind::Observational,
        probability,
        tolerance,
    })
}

const CLEAN: Expectation = Expectation::Lint(&[]);
const ORACLE: f64 = 1e-9;

macro_rules! fixture {
    ($id:literal, $description:literal, $anchor:literal, [$($e:expr),* $(,)?]) => {
        Fixture {
            id: $id,
            file: concat!($id, ".idbn"),
            description: $description,
            anchor: $anchor,
            expectations: &[$($e),*],
            source: include_str!(concat!("../fixtures/", $id, ".idbn")),
        }
    };
}

static REGISTRY: [Fixture; 16] = [
    fixture!(
        "xray_measurement",
        "X-ray result as a measurement of internal chest bleeding",
        "measurement idiom: 1% false positive and 5% false negative X-ray",
        [observe("Bleeding", "yes", &[("Xray", "pos")], 0.913461538462, 1e-6), CLEAN]
    ),
    fixture!(
        "smoking_chain",
        "smoking, lung cancer and X-ray chain for forward and diagnostic reasoning",
        "forward and backward reasoning along a chain",
        [
            observe("LungCancer", "yes", &[], 0.064, ORACLE),
            observe("LungCancer", "yes", &[("Smoking", "yes")], 0.1, ORACLE),
            observe("LungCancer", "yes", &[("Xray", "pos")], 0.551724137931, ORACLE),
            CLEAN,
        ]
    ),
    fixture!(
        "manifestation_cad",
        "CAD with chest pain, sweating and ECG manifestations",
        "manifestation idiom",
        [
            observe("CAD", "yes", &[("ChestPain", "yes")], 0.636363636364, ORACLE),
            observe("CAD", "yes", &[("ChestPain", "yes"), ("ECG", "abnormal")], 0.903225806452, ORACLE),
            Expectation::DSeparated {
                x: &["ChestPain"],
                y: &["ECG"],
                given: &["CAD"],
                separated: true,
            },
            CLEAN,
        ]
    ),
    fixture!(
        "reliability_symptom",
        "reported chest pain qualified by a reliability defined by objectivity and veracity",
        "manifestation reliability idiom",
        [
            observe("CAD", "yes", &[("ReportedChestPain", "yes")], 0.474229238540, ORACLE),
            observe(
                "CAD",
                "yes",
                &[("ReportedChestPain", "yes"), ("SymptomReliability", "reliable")],
                0.598615916955,
                ORACLE
            ),
            observe(
                "CAD",
                "yes",
                &[("ReportedChestPain", "yes"), ("SymptomReliability", "unreliable")],
                0.243243243243,
                ORACLE
            ),
            CLEAN,
        ]
    ),
    fixture!(
        "common_reliability",
        "one patient reliability shared by two reported symptoms",
        "manifestation reliability idiom with a common reliability",
        [
            observe(
                "PatientReliability",
                "reliable",
                &[("ReportedChestPain", "yes"), ("ReportedFatigue", "no")],
                0.651693158258,
                ORACLE
            ),
            observe(
                "CAD",
                "yes",
                &[("ReportedChestPain", "yes"), ("ReportedFatigue", "yes")],
                0.426243018039,
                ORACLE
            ),
            CLEAN,
        ]
    ),
    fixture!(
        "pathogenesis_plaque",
        "obesity and diabetes acting on CAD through plaque",
        "pathogenesis idiom",
        [
            observe("CAD", "yes", &[], 0.183375, ORACLE),
            observe("CAD", "yes", &[("Obesity", "yes")], 0.2865, ORACLE),
            Expectation::DSeparated {
                x: &["Obesity"],
                y: &["CAD"],
                given: &["Plaque"],
                separated: true,
            },
            Expectation::DSeparated {
                x: &["Obesity"],
                y: &["Diabetes"],
                given: &["CAD"],
                separated: false,
            },
            CLEAN,
        ]
    ),
    fixture!(
        "comorbidity_cause",
        "smoking as a shared cause of CAD and lung cancer",
        "comorbidity common cause idiom",
        [
            observe("CAD", "yes", &[("LungCancer", "yes")], 0.262162162162, ORACLE),
            observe("CAD", "yes", &[("LungCancer", "yes"), ("Smoking", "yes")], 0.3, ORACLE),
            Expectation::DSeparated {
                x: &["CAD"],
                y: &["LungCancer"],
                given: &[],
                separated: false,
            },
            Expectation::DSeparated {
                x: &["CAD"],
                y: &["LungCancer"],
                given: &["Smoking"],
                separated: true,
            },
            CLEAN,
        ]
    ),
    fixture!(
        "comorbidity_symptom",
        "CAD and lung cancer sharing chest pain",
        "comorbidity common symptomology idiom: explaining away",
        [
            observe("CAD", "yes", &[("ChestPain", "yes")], 0.505, 1e-6),
            observe("CAD", "yes", &[("ChestPain", "yes"), ("LungCancer", "yes")], 0.108910891089, 1e-6),
            Expectation::DSeparated {
                x: &["CAD"],
                y: &["LungCancer"],
                given: &[],
                separated: true,
            },
            Expectation::DSeparated {
                x: &["CAD"],
                y: &["LungCancer"],
                given: &["ChestPain"],
                separated: false,
            },
            CLEAN,
        ]
    ),
    fixture!(
        "complication_mi",
        "heart attack as a late complication of CAD",
        "complication idiom",
        [observe("CAD", "yes", &[("HeartAttack", "yes")], 0.555555555556, ORACLE), CLEAN]
    ),
    fixture!(
        "treatment_triangle",
        "CAD informs the medication decision; both affect heart attack",
        "treatment idiom with a decision arc",
        [
            observe("HeartAttack", "yes", &[("Medication", "given")], 0.226315789474, ORACLE),
            Expectation::Query(ExpectedQuery {
                target: "HeartAttack",
                state: "yes",
                evidence: &[],
                kind: QueryKind::Interventional(&[("Medication", "given")]),
                probability: 0.16,
                tolerance: ORACLE,
            }),
            CLEAN,
        ]
    ),
    fixture!(
        "treatment_reliability",
        "adherence qualifies the medication effect on heart attack",
        "treatment reliability idiom",
        [
            observe(
                "HeartAttack",
                "yes",
                &[("Medication", "not_given"), ("Adherence", "reliable")],
                0.238709677419,
                ORACLE
            ),
            observe(
                "HeartAttack",
                "yes",
                &[("Medication", "not_given"), ("Adherence", "unreliable")],
                0.238709677419,
                ORACLE
            ),
            observe(
                "HeartAttack",
                "no",
                &[("CAD", "yes"), ("Medication", "given"), ("Adherence", "reliable")],
                0.85,
                ORACLE
            ),
            observe(
                "HeartAttack",
                "no",
                &[("CAD", "yes"), ("Medication", "given"), ("Adherence", "unreliable")],
                0.55,
                ORACLE
            ),
            CLEAN,
        ]
    ),
    fixture!(
        "counterfactual_medication",
        "would the heart attack have been prevented had medication been given",
        "counterfactual treatment idiom",
        [
            Expectation::Query(ExpectedQuery {
                target: "HeartAttack",
                state: "yes",
                evidence: &[("CAD", "yes"), ("Medication", "not_given"), ("HeartAttack", "yes")],
                kind: QueryKind::Counterfactual(&[("Medication", "given")]),
                probability: 0.3,
                tolerance: ORACLE,
            }),
            Expectation::Query(ExpectedQuery {
                target: "HeartAttack",
                state: "yes",
                evidence: &[],
                kind: QueryKind::Counterfactual(&[("Medication", "given")]),
                probability: 0.16,
                tolerance: ORACLE,
            }),
            CLEAN,
        ]
    ),
    fixture!(
        "cad_composite",
        "core CAD model composed from overlapping idioms",
        "combining idioms incrementally",
        [
            observe("CAD", "yes", &[], 0.2375, ORACLE),
            observe("CAD", "yes", &[("ReportedChestPain", "yes"), ("ECG", "abnormal")], 0.855816039945, ORACLE),
            CLEAN,
            Expectation::FullCoverage,
        ]
    ),
    fixture!(
        "head_injury_bad",
        "head injury structure learned from associations",
        "manifestation and risk factor directions",
        [
            observe("Outcome", "poor", &[("BrainScan", "abnormal")], 0.6, ORACLE),
            Expectation::Lint(&[RuleId::R1, RuleId::R2]),
        ]
    ),
    fixture!(
        "head_injury_good",
        "corrected head injury structure",
        "manifestation and risk factor directions",
        [
            observe("Outcome", "poor", &[("BrainScan", "abnormal")], 0.621160409556, ORACLE),
            CLEAN,
            Expectation::FullCoverage,
        ]
    ),
    fixture!(
        "coagulopathy_sketch",
        "trauma-induced coagulopathy sketch",
        "idioms connecting elicited variables",
        [
            observe("Coagulopathy", "yes", &[], 0.153385519525, ORACLE),
            observe("Coagulopathy", "yes", &[("Lactate", "high")], 0.263178330409, ORACLE),
            observe("Coagulopathy", "yes", &[("UnstablePelvis", "yes")], 0.285435252782, ORACLE),
            Expectation::Lint(&[RuleId::R4, RuleId::R4]),
        ]
    ),
];

/// Every bundled fixture in registry order.
pub fn fixtures() -> &'static [Fixture] {
    &REGISTRY
}

pub fn fixture(id: &str) -> Result<&'static Fixture, FixtureError> {
    REGISTRY
        .iter()
        .find(|f| f.id == id)
        .ok_or_else(|| FixtureError::UnknownFixture(id.to_string()))
}

/// Directory holding the corpus files in a source checkout.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn load_fixture(id: &str) -> Result<LoadedFixture, FixtureError> {
    let fixture = fixture(id)?;
    let Elaboration { net, instances, .. } = fixture.elaborate()?;
    Ok(LoadedFixture {
        fixture,
        net,
        instances,
    })
}

/// Loads any `.idbn` file.
pub fn load_path(path: impl AsRef<Path>) -> Result<Elaboration, FixtureError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load(&text).map_err(FixtureError::Invalid)
}

fn assignment(pairs: Pairs) -> Assignment {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

impl Fixture {
    pub fn source(&self) -> &'static str {
        self.source
    }

    pub fn elaborate(&self) -> Result<Elaboration, FixtureError> {
        load(self.source).map_err(FixtureError::Invalid)
    }

    /// Evaluates every expectation; returns one message per mismatch.
    pub fn check(&self) -> Result<Vec<String>, FixtureError> {
        let Elaboration { net, instances, .. } = self.elaborate()?;
        let mut failures = Vec::new();
        for e in self.expectations {
            if let Err(msg) = check_one(&net, &instances, e) {
                failures.push(format!("{}: {msg}", self.id));
            }
        }
        Ok(failures)
    }
}

/// Runs a fixture query and returns the probability of the expected state.
pub fn evaluate(net: &BayesNet, q: &ExpectedQuery) -> Result<f64, String> {
    let evidence: Evidence = assignment(q.evidence);
    let dist = match q.kind {
        QueryKind::Observational => posterior(net, q.target, &evidence).map_err(|e| e.to_string())?,
        QueryKind::Interventional(pairs) => {
            let intervention: Intervention = assignment(pairs);
            interventional_query(net, q.target, &intervention, &evidence)
                .map_err(|e| e.to_string())?
                .distribution
        }
        QueryKind::Counterfactual(pairs) => {
            let intervention: Intervention = assignment(pairs);
            counterfactual_query(net, &evidence, &intervention, q.target)
                .map_err(|e| e.to_string())?
                .distribution
        }
    };
    dist.probability(q.state)
        .ok_or_else(|| format!("`{}` has no state `{}`", q.target, q.state))
}

fn check_one(net: &BayesNet, instances: &[IdiomInstance], e: &Expectation) -> Result<(), String> {
    match e {
        Expectation::Query(q) => {
            let got = evaluate(net, q)?;
            if (got - q.probability).abs() > q.tolerance {
                return Err(format!(
                    "P({}={}) = {got} but expected {} ± {}",
                    q.target, q.state, q.probability, q.tolerance
                ));
            }
        }
        Expectation::Lint(rules) => {
            let got = lint(net, Some(instances)).rules();
            if got != *rules {
                return Err(format!("lint rules {got:?}, expected {rules:?}"));
            }
        }
        Expectation::DSeparated { x, y, given, separated } => {
            let got = net.d_separated(x, y, given).map_err(|e| e.to_string())?;
            if got != *separated {
                return Err(format!("d-separation of {x:?} and {y:?} given {given:?} is {got}"));
            }
        }
        Expectation::FullCoverage => {
            let report = coverage(net, instances);
            if !report.is_complete() {
                return Err(format!("uncovered edges {:?}", report.uncovered));
            }
        }
    }
    Ok(())
}
