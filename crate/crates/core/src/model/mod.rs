//! The `.idbn` model description language.
//!
//! ```text
//! variable CAD { states: yes, no; role: condition }
//! idiom manifestation m1 { condition: CAD; manifestations: [ChestPain, ECG]; }
//! edge Obesity -> CAD
//! cpt ECG given (CAD) { row(yes): 0.8, 0.2; row(no): 0.1, 0.9; }
//! ```

mod elaborate;
mod emit;
mod parse;

use std::fmt;

use serde::Serialize;

use crate::graph::Role;
use crate::idiom::{IdiomId, IdiomInstance};
use crate::lint::Severity;

pub use elaborate::{elaborate, load, Elaboration};
pub use emit::{export_dot, format_number, serialize, to_json};
pub use parse::parse;

/// 1-based line and column (columns count characters).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub fn new(line: usize, column: usize) -> Self {
        Pos { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn error(pos: Pos, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line: pos.line,
            column: pos.column,
            code,
            message: message.into(),
        }
    }

    pub(crate) fn warning(pos: Pos, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(pos, code, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}[{}]: {}",
            self.line, self.column, self.severity, self.code, self.message
        )
    }
}

/// Diagnostic codes. Codes are never reused or renumbered.
pub mod codes {
    pub const LEXICAL: &str = "E001";
    pub const SYNTAX: &str = "E002";
    pub const DUPLICATE: &str = "E003";
    pub const UNKNOWN_TEMPLATE: &str = "E004";
    pub const UNKNOWN_SLOT: &str = "E005";
    pub const UNKNOWN_ROLE: &str = "E006";
    pub const ROW_SUM: &str = "E007";
    pub const MISSING_ROW: &str = "E008";
    pub const UNKNOWN_STATE: &str = "E009";
    pub const UNKNOWN_VARIABLE: &str = "E010";
    pub const MISSING_CPT: &str = "E011";
    pub const CYCLE: &str = "E012";
    pub const PARENT_MISMATCH: &str = "E013";
    pub const SLOT_ARITY: &str = "E014";
    pub const ROW_SHAPE: &str = "E015";
    pub const DUPLICATE_ROW: &str = "E016";
    pub const INVALID_STATES: &str = "E017";
    pub const DECISION_TARGET: &str = "E018";
    pub const ROLE_MISMATCH: &str = "W101";
    pub const MULTI_ROLE: &str = "W102";
    pub const NOT_QUANTIFIED: &str = "W103";
}

/// A parsed model. Declarations keep file order; comments travel with the
/// declaration that follows them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelDocument {
    /// Leading comment block separated from the first declaration by a blank line.
    pub header: Vec<String>,
    pub declarations: Vec<Declaration>,
    /// Comments after the last declaration.
    pub trailer: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub pos: Pos,
    /// Comment text without the leading `#`.
    pub comments: Vec<String>,
    pub body: Decl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Variable(VariableDecl),
    Idiom(IdiomDecl),
    Edge(EdgeDecl),
    Cpt(CptDecl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub states: Vec<String>,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdiomDecl {
    pub template: IdiomId,
    pub name: String,
    pub bindings: Vec<SlotBinding>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotBinding {
    pub slot: String,
    pub variables: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeDecl {
    pub from: String,
    pub to: String,
    pub decision: bool,
}

/// A CPT keyed by parent state labels. Parentless CPTs have a single row
/// with an empty key.
#[derive(Debug, Clone, PartialEq)]
pub struct CptDecl {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<CptRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CptRow {
    pub given: Vec<String>,
    pub probabilities: Vec<f64>,
    pub pos: Pos,
}

impl IdiomDecl {
    pub fn to_instance(&self) -> IdiomInstance {
        IdiomInstance {
            template: self.template,
            name: self.name.clone(),
            bindings: self
                .bindings
                .iter()
                .map(|b| (b.slot.clone(), b.variables.clone()))
                .collect(),
        }
    }
}

impl ModelDocument {
    pub fn is_empty(&self) -> bool {
        self.declarations.is_empty() && self.header.is_empty() && self.trailer.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableDecl> {
        self.declarations.iter().filter_map(|d| match &d.body {
            Decl::Variable(v) => Some(v),
            _ => None,
        })
    }

    pub fn idioms(&self) -> impl Iterator<Item = &IdiomDecl> {
        self.declarations.iter().filter_map(|d| match &d.body {
            Decl::Idiom(i) => Some(i),
            _ => None,
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeDecl> {
        self.declarations.iter().filter_map(|d| match &d.body {
            Decl::Edge(e) => Some(e),
            _ => None,
        })
    }

    pub fn cpts(&self) -> impl Iterator<Item = &CptDecl> {
        self.declarations.iter().filter_map(|d| match &d.body {
            Decl::Cpt(c) => Some(c),
            _ => None,
        })
    }

    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.variables().find(|v| v.name == name)
    }

    pub fn instances(&self) -> Vec<IdiomInstance> {
        self.idioms().map(IdiomDecl::to_instance).collect()
    }

    pub fn push(&mut self, body: Decl) {
        self.declarations.push(Declaration {
            pos: Pos::default(),
            comments: Vec::new(),
            body,
        });
    }

    /// Describes an existing network. Edges that no instance produces (or
    /// whose decision flag no instance supplies) become raw edge declarations.
    pub fn from_network(net: &crate::graph::BayesNet, instances: &[IdiomInstance]) -> Self {
        use crate::idiom::instantiate_instance;
        use std::collections::BTreeMap;

        let mut doc = ModelDocument::default();
        for v in net.variables() {
            doc.push(Decl::Variable(VariableDecl {
                name: v.name.clone(),
                states: v.states.clone(),
                role: v.role,
            }));
        }
        let mut produced: BTreeMap<(String, String), bool> = BTreeMap::new();
        for inst in instances {
            let mut bindings: Vec<SlotBinding> = Vec::new();
            for slot in inst.template.template().slots {
                if let Some(vars) = inst.bindings.get(slot.name) {
                    bindings.push(SlotBinding {
                        slot: slot.name.to_string(),
                        variables: vars.clone(),
                        pos: Pos::default(),
                    });
                }
            }
            doc.push(Decl::Idiom(IdiomDecl {
                template: inst.template,
                name: inst.name.clone(),
                bindings,
            }));
            if let Ok(fragment) = instantiate_instance(inst, |n| net.variable(n).map(|v| v.role)) {
                for (key, e) in fragment.edges() {
                    *produced.entry(key.clone()).or_default() |= e.decision;
                }
            }
        }
        for e in net.edges() {
            let key = (e.from.clone(), e.to.clone());
            let covered = produced.get(&key).is_some_and(|d| *d || !e.decision);
            if !covered {
                doc.push(Decl::Edge(EdgeDecl {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    decision: e.decision,
                }));
            }
        }
        for v in net.variables() {
            let cpt = net.cpt(&v.name).expect("every variable has a CPT");
            let parent_states: Vec<&[String]> = cpt
                .parents
                .iter()
                .map(|p| net.variable(p).expect("parents exist").states.as_slice())
                .collect();
            let mut rows = Vec::with_capacity(cpt.table.len());
            let mut digits = vec![0usize; parent_states.len()];
            for probabilities in &cpt.table {
                let given = digits
                    .iter()
                    .zip(&parent_states)
                    .map(|(d, s)| s[*d].clone())
                    .collect();
                rows.push(CptRow {
                    given,
                    probabilities: probabilities.clone(),
                    pos: Pos::default(),
                });
                for k in (0..digits.len()).rev() {
                    digits[k] += 1;
                    if digits[k] < parent_states[k].len() {
                        break;
                    }
                    digits[k] = 0;
                }
            }
            doc.push(Decl::Cpt(CptDecl {
                child: v.name.clone(),
                parents: cpt.parents.clone(),
                rows,
            }));
        }
        doc
    }
}
