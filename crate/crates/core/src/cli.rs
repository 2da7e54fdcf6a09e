//! Command-line front end: `check`, `lint`, `query`, `classify` and `export`.
//!
//! Results go to the `out` writer and diagnostics to `err`, so the whole
//! dispatch can be driven from tests without spawning a process.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::causal::{counterfactual_query, interventional_query, Provenance, QueryMode};
use crate::graph::{Assignment, BayesNet, Role};
use crate::idiom::{suggest_idiom, IdiomId, IdiomInstance, SuggestHints};
use crate::inference::{posterior, Distribution};
use crate::lint::{coverage, lint_with, LintConfig, RuleId};
use crate::model::{export_dot, load, parse, serialize, to_json, Diagnostic, Elaboration, ModelDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERRORS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_QUERY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "medidiom", version, about = "Build, lint and query idiom-based clinical Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, elaborate and lint a model file.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Let warnings pass; errors still fail.
        #[arg(long)]
        no_warn: bool,
    },
    /// Print the lint report of a model file.
    Lint {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Warning rule to skip (repeatable).
        #[arg(long, value_name = "RULE")]
        disable: Vec<String>,
        /// The model is only used for interventional reasoning (skips R8).
        #[arg(long)]
        interventional_only: bool,
    },
    /// Posterior, interventional or counterfactual distributions.
    Query {
        file: PathBuf,
        #[arg(long = "target", value_name = "VAR", required = true)]
        targets: Vec<String>,
        #[arg(long = "evidence", value_name = "VAR=STATE", value_parser = parse_pair)]
        evidence: Vec<(String, String)>,
        #[arg(long = "do", value_name = "VAR=STATE", value_parser = parse_pair)]
        intervention: Vec<(String, String)>,
        /// Treat --evidence as the actual world and --do as the hypothetical change.
        #[arg(long, requires = "intervention")]
        counterfactual: bool,
        #[arg(long)]
        json: bool,
    },
    /// Suggest idioms for variables no idiom instance explains.
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Render a model as Graphviz, JSON or canonical `.idbn`.
    #[command(group(ArgGroup::new("format").required(true).args(["dot", "json", "idbn"])))]
    Export {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        idbn: bool,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((v, state)) if !v.trim().is_empty() && !state.trim().is_empty() => {
            Ok((v.trim().to_string(), state.trim().to_string()))
        }
        _ => Err(format!("expected VAR=STATE, got `{s}`")),
    }
}

/// Runs one command line and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let status = match cli.command {
        Command::Check { file, json, no_warn } => cmd_check(&file, json, no_warn, err),
        Command::Lint {
            file,
            json,
            disable,
            interventional_only,
        } => cmd_lint(&file, json, &disable, interventional_only, out, err),
        Command::Query {
            file,
            targets,
            evidence,
            intervention,
            counterfactual,
            json,
        } => cmd_query(
            &file,
            &QueryArgs {
                targets,
                evidence,
                intervention,
                counterfactual,
                json,
            },
            out,
            err,
        ),
        Command::Classify { file, json } => cmd_classify(&file, json, out, err),
        Command::Export { file, dot, json, .. } => cmd_export(&file, dot, json, out, err),
    };
    status.unwrap_or_else(|e| {
        let _ = writeln!(err, "medidiom: {e}");
        EXIT_USAGE
    })
}

fn read(path: &Path, err: &mut dyn Write) -> io::Result<Option<String>> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) => {
            writeln!(err, "medidiom: cannot read {}: {e}", path.display())?;
            Ok(None)
        }
    }
}

fn print_diagnostics(path: &Path, diags: &[Diagnostic], err: &mut dyn Write) -> io::Result<()> {
    for d in diags {
        writeln!(err, "{}:{d}", path.display())?;
    }
    Ok(())
}

/// Loads a model, printing diagnostics. `Err(status)` means stop.
fn load_model(path: &Path, err: &mut dyn Write) -> io::Result<Result<Elaboration, i32>> {
    let Some(text) = read(path, err)? else {
        return Ok(Err(EXIT_USAGE));
    };
    match load(&text) {
        Ok(e) => {
            print_diagnostics(path, &e.warnings, err)?;
            Ok(Ok(e))
        }
        Err(diags) => {
            print_diagnostics(path, &diags, err)?;
            Ok(Err(EXIT_ERRORS))
        }
    }
}

fn cmd_check(path: &Path, json: bool, no_warn: bool, err: &mut dyn Write) -> io::Result<i32> {
    let Some(text) = read(path, err)? else {
        return Ok(EXIT_USAGE);
    };
    let (diagnostics, report) = match load(&text) {
        Ok(e) => {
            let report = lint_with(&e.net, Some(&e.instances), &LintConfig::default());
            (e.warnings, Some(report))
        }
        Err(diags) => (diags, None),
    };
    let errors = diagnostics.iter().filter(|d| d.is_error()).count() + report.as_ref().map_or(0, |r| r.errors);
    let warnings = diagnostics.iter().filter(|d| !d.is_error()).count() + report.as_ref().map_or(0, |r| r.warnings);
    let status = if errors > 0 || (warnings > 0 && !no_warn) {
        EXIT_ERRORS
    } else {
        EXIT_OK
    };

    if json {
        let value = json!({
            "file": path.display().to_string(),
            "diagnostics": diagnostics,
            "findings": report.as_ref().map(|r| &r.findings),
            "errors": errors,
            "warnings": warnings,
            "status": status,
        });
        writeln!(err, "{}", serde_json::to_string_pretty(&value).expect("json"))?;
    } else {
        print_diagnostics(path, &diagnostics, err)?;
        if let Some(r) = &report {
            for f in &r.findings {
                writeln!(err, "{}: {f}", path.display())?;
            }
        }
        writeln!(err, "{}: {errors} error(s), {warnings} warning(s)", path.display())?;
    }
    Ok(status)
}

fn cmd_lint(
    path: &Path,
    json: bool,
    disable: &[String],
    interventional_only: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let mut config = LintConfig::default();
    config.observational_use = !interventional_only;
    for name in disable {
        let Some(rule) = RuleId::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(name)) else {
            writeln!(err, "medidiom: unknown rule `{name}`")?;
            return Ok(EXIT_USAGE);
        };
        if let Err(e) = config.disable(rule) {
            writeln!(err, "medidiom: {e}")?;
            return Ok(EXIT_USAGE);
        }
    }
    let e = match load_model(path, err)? {
        Ok(e) => e,
        Err(status) => return Ok(status),
    };
    let report = lint_with(&e.net, Some(&e.instances), &config);
    if json {
        writeln!(out, "{}", report.to_json())?;
    } else {
        write!(out, "{}", report.to_text())?;
    }
    Ok(if report.has_errors() { EXIT_ERRORS } else { EXIT_OK })
}

struct QueryArgs {
    targets: Vec<String>,
    evidence: Vec<(String, String)>,
    intervention: Vec<(String, String)>,
    counterfactual: bool,
    json: bool,
}

/// Collects `VAR=STATE` pairs, rejecting a variable set to two states.
fn assignment(pairs: &[(String, String)], flag: &str) -> Result<Assignment, String> {
    let mut a = Assignment::new();
    for (v, s) in pairs {
        if let Some(prev) = a.insert(v.clone(), s.clone()) {
            if prev != *s {
                return Err(format!("--{flag} sets `{v}` to both `{prev}` and `{s}`"));
            }
        }
    }
    Ok(a)
}

#[derive(Serialize)]
struct QueryResult<'a> {
    target: &'a str,
    distribution: Distribution,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

fn cmd_query(path: &Path, args: &QueryArgs, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let (evidence, intervention) = match (
        assignment(&args.evidence, "evidence"),
        assignment(&args.intervention, "do"),
    ) {
        (Ok(e), Ok(i)) => (e, i),
        (Err(m), _) | (_, Err(m)) => {
            writeln!(err, "medidiom: {m}")?;
            return Ok(EXIT_USAGE);
        }
    };
    let mode = match (intervention.is_empty(), args.counterfactual) {
        (true, _) => QueryMode::Observational,
        (false, false) => QueryMode::Interventional,
        (false, true) => QueryMode::Counterfactual,
    };
    if mode == QueryMode::Interventional {
        let both: Vec<&str> = intervention.variables().filter(|v| evidence.contains(v)).collect();
        if !both.is_empty() {
            writeln!(err, "medidiom: {} both observed and intervened on", both.join(", "))?;
            return Ok(EXIT_USAGE);
        }
    }

    let e = match load_model(path, err)? {
        Ok(e) => e,
        Err(status) => return Ok(status),
    };
    let net = &e.net;
    for t in &args.targets {
        if net.variable(t).is_none() {
            writeln!(err, "medidiom: unknown target `{t}`")?;
            return Ok(EXIT_USAGE);
        }
    }
    for a in [&evidence, &intervention] {
        if let Err(m) = net.resolve(a) {
            writeln!(err, "medidiom: {m}")?;
            return Ok(EXIT_USAGE);
        }
    }

    let mut results = Vec::new();
    for target in &args.targets {
        let answer = match mode {
            QueryMode::Observational => posterior(net, target, &evidence)
                .map(|d| (d, None))
                .map_err(|e| e.to_string()),
            QueryMode::Interventional => interventional_query(net, target, &intervention, &evidence)
                .map(|r| (r.distribution, Some(r.provenance)))
                .map_err(|e| e.to_string()),
            QueryMode::Counterfactual => counterfactual_query(net, &evidence, &intervention, target)
                .map(|r| (r.distribution, Some(r.provenance)))
                .map_err(|e| e.to_string()),
        };
        match answer {
            Ok((distribution, provenance)) => results.push(QueryResult {
                target,
                distribution,
                provenance,
            }),
            Err(m) => {
                writeln!(err, "medidiom: query for `{target}` failed: {m}")?;
                return Ok(EXIT_QUERY);
            }
        }
    }

    if args.json {
        let value = json!({
            "mode": mode,
            "evidence": evidence,
            "intervention": intervention,
            "results": results,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"))?;
    } else {
        for r in &results {
            writeln!(out, "{}", distribution_line(&r.distribution))?;
        }
    }
    Ok(EXIT_OK)
}

/// `NAME: state=p ...` with six decimals.
pub fn distribution_line(d: &Distribution) -> String {
    let cells: Vec<String> = d
        .states
        .iter()
        .zip(&d.probabilities)
        .map(|(s, p)| format!("{s}={p:.6}"))
        .collect();
    format!("{}: {}", d.variable, cells.join(" "))
}

/// A connected group of variables that no idiom instance explains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Suggestion {
    pub variables: Vec<String>,
    pub idioms: Vec<IdiomId>,
}

/// Groups variables joined by uncovered edges (plus unbound loners) and
/// ranks idioms for each group. Groups and members follow topological order.
pub fn classify(net: &BayesNet, instances: &[IdiomInstance]) -> Vec<Suggestion> {
    let order = net.topological_order();
    let rank: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let bound: BTreeSet<&str> = instances.iter().flat_map(|i| i.variables()).collect();
    let report = coverage(net, instances);

    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
    fn find<'a>(parent: &mut BTreeMap<&'a str, &'a str>, v: &'a str) -> &'a str {
        let p = parent[v];
        if p == v {
            return v;
        }
        let root = find(parent, p);
        parent.insert(v, root);
        root
    }
    for v in net.variables() {
        let name = v.name.as_str();
        let has_edges = !net.parents(name).unwrap_or_default().is_empty() || !net.children(name).unwrap_or_default().is_empty();
        if !bound.contains(name) && !has_edges {
            parent.insert(name, name);
        }
    }
    for (a, b) in &report.uncovered {
        let a = net.variable(a).map(|v| v.name.as_str()).unwrap_or(a);
        let b = net.variable(b).map(|v| v.name.as_str()).unwrap_or(b);
        parent.entry(a).or_insert(a);
        parent.entry(b).or_insert(b);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent.insert(ra, rb);
        }
    }

    let members: Vec<&str> = parent.keys().copied().collect();
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for v in members {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().push(v);
    }
    let mut groups: Vec<Vec<&str>> = groups.into_values().collect();
    for g in &mut groups {
        g.sort_by_key(|v| rank.get(v).copied().unwrap_or(usize::MAX));
    }
    groups.sort_by_key(|g| rank.get(g[0]).copied().unwrap_or(usize::MAX));

    groups
        .into_iter()
        .map(|g| {
            let tagged: Vec<(String, Role)> = g
                .iter()
                .map(|v| (v.to_string(), net.variable(v).map_or(Role::Unclassified, |x| x.role)))
                .collect();
            Suggestion {
                variables: g.iter().map(|v| v.to_string()).collect(),
                idioms: suggest_idiom(&tagged, &SuggestHints::default()).expect("groups are non-empty"),
            }
        })
        .collect()
}

fn cmd_classify(path: &Path, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let e = match load_model(path, err)? {
        Ok(e) => e,
        Err(status) => return Ok(status),
    };
    let suggestions = classify(&e.net, &e.instances);
    if json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&json!({ "groups": suggestions })).expect("json")
        )?;
    } else if suggestions.is_empty() {
        if !e.net.is_empty() {
            writeln!(out, "no suggestions")?;
        }
    } else {
        for s in &suggestions {
            let idioms: Vec<&str> = s.idioms.iter().map(|i| i.keyword()).collect();
            writeln!(out, "[{}]: {}", s.variables.join(", "), idioms.join(", "))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_export(path: &Path, dot: bool, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let Some(text) = read(path, err)? else {
        return Ok(EXIT_USAGE);
    };
    let doc: ModelDocument = match parse(&text) {
        Ok(doc) => doc,
        Err(diags) => {
            print_diagnostics(path, &diags, err)?;
            return Ok(EXIT_ERRORS);
        }
    };
    if dot {
        let e = match crate::model::elaborate(&doc) {
            Ok(e) => e,
            Err(diags) => {
                print_diagnostics(path, &diags, err)?;
                return Ok(EXIT_ERRORS);
            }
        };
        write!(out, "{}", export_dot(&e.net, &e.instances))?;
    } else if json {
        write!(out, "{}", to_json(&doc))?;
    } else {
        write!(out, "{}", serialize(&doc))?;
    }
    Ok(EXIT_OK)
}
