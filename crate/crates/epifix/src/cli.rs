//! The `epifix` command line.
//!
//! Exit codes: 0 on success or a valid result, 1 for a semantic negative
//! (a countermodel, a rejected proof or refused lemma), 2 for usage, file and
//! parse errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use epifix_core::lnu::{self, check_validity, parse_nu, Budget, ConditionRegistry};
use epifix_core::lo::{analyze, parse_lo};
use epifix_core::oracle;
use epifix_core::proof::{check_proof, LemmaError, LemmaRegistry};
use epifix_core::{Event, FormulaO, Game, Operator, Restriction};
use serde::Serialize;

use crate::formats::{self, show_event};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "epifix",
    version,
    about = "Iterated elimination, common belief of rationality and proofs linking them"
)]
pub struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Extra condition definitions, one `condition <name>: <formula>` per line.
    #[arg(long, global = true, value_name = "FILE")]
    conditions: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the optimality operator of a condition from the full game.
    Eliminate {
        game: PathBuf,
        /// A condition name (`lsd`, `gsd`, `gbr` or one from --conditions) or a
        /// condition file defining exactly one condition.
        condition: String,
        /// Print every stage and the closure ordinal.
        #[arg(long)]
        trace: bool,
    },
    /// List the states of a belief model where a formula holds.
    Evaluate { model: PathBuf, game: PathBuf, formula: String },
    /// Search the belief models of a game for a countermodel.
    CheckValid {
        game: PathBuf,
        formula: String,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Seed for --random (default 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a proof script, registering its lemmas by a sweep over the standard corpus.
    CheckProof { proof: PathBuf },
    /// Report whether a condition is closed, positive and context-safe.
    AnalyzeCondition {
        /// A condition name or a formula.
        condition: String,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct BudgetArgs {
    /// Every model with up to K states.
    #[arg(long, value_name = "K")]
    exhaustive: Option<usize>,
    /// N sampled models with up to K states.
    #[arg(long, num_args = 2, value_names = ["N", "K"])]
    random: Option<Vec<usize>>,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    json: bool,
}

impl Io<'_> {
    fn emit<T: Serialize>(&mut self, report: &T, text: &str) -> Result<(), String> {
        let written = if self.json {
            serde_json::to_string_pretty(report)
                .map_err(|e| e.to_string())
                .and_then(|s| writeln!(self.out, "{s}").map_err(|e| e.to_string()))
        } else {
            write!(self.out, "{text}").map_err(|e| e.to_string())
        };
        written.map_err(|e| format!("cannot write output: {e}"))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_game(path: &Path) -> Result<Game, String> {
    formats::parse_game(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn registry(conditions: Option<&Path>) -> Result<ConditionRegistry, String> {
    let mut reg = ConditionRegistry::with_builtins();
    if let Some(path) = conditions {
        formats::load_conditions(&read(path)?, &mut reg).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(reg)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, String> {
    let reg = registry(cli.conditions.as_deref())?;
    let mut io = Io { out, json: cli.json };
    match cli.command {
        Command::Eliminate { game, condition, trace } => eliminate(&mut io, &reg, &game, &condition, trace),
        Command::Evaluate { model, game, formula } => evaluate(&mut io, &reg, &model, &game, &formula),
        Command::CheckValid { game, formula, budget, seed } => {
            check_valid(&mut io, &reg, &game, &formula, &budget, seed)
        }
        Command::CheckProof { proof } => check_proof_file(&mut io, &reg, &proof),
        Command::AnalyzeCondition { condition } => analyze_condition(&mut io, &reg, &condition),
    }
}

fn resolve_condition(reg: &ConditionRegistry, arg: &str) -> Result<(String, FormulaO), String> {
    if let Some(c) = reg.get(arg) {
        return Ok((arg.to_string(), c.formula.clone()));
    }
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(format!("`{arg}` is neither a known condition nor a condition file"));
    }
    let defs = formats::parse_conditions(&read(path)?).map_err(|e| format!("{arg}: {e}"))?;
    match defs.as_slice() {
        [(_, name, phi)] => Ok((name.clone(), phi.clone())),
        _ => Err(format!("{arg} defines {} conditions; load it with --conditions and name one", defs.len())),
    }
}

fn parts(g: &Game, r: &Restriction) -> Vec<Vec<String>> {
    (0..g.players()).map(|i| r.part(i).iter().map(|s| g.strategy_name(i, s).to_string()).collect()).collect()
}

fn show_stage(g: &Game, r: &Restriction) -> String {
    let cells: Vec<String> =
        parts(g, r).iter().enumerate().map(|(i, names)| format!("{}: {}", i + 1, names.join(" "))).collect();
    format!("{{{}}}", cells.join("; "))
}

fn show_survivors(g: &Game, r: &Restriction) -> String {
    parts(g, r)
        .iter()
        .enumerate()
        .map(|(i, names)| {
            let listed = if names.is_empty() { "-".to_string() } else { names.join(" ") };
            format!("{}: {listed}", i + 1)
        })
        .collect::<Vec<_>>()
        .join(" / ")
}

#[derive(Serialize)]
struct EliminateReport {
    condition: String,
    survivors: Vec<Vec<String>>,
    closure_ordinal: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    stages: Option<Vec<Vec<Vec<String>>>>,
}

fn eliminate(
    io: &mut Io<'_>,
    reg: &ConditionRegistry,
    game: &Path,
    condition: &str,
    trace: bool,
) -> Result<i32, String> {
    let g = load_game(game)?;
    let (name, phi) = resolve_condition(reg, condition)?;
    let op = Operator::uniform(&g, &phi).map_err(|e| e.to_string())?;
    let t = op.iterate_from_top().map_err(|e| e.to_string())?;
    let mut text = String::new();
    if trace {
        for (k, stage) in t.stages.iter().enumerate() {
            text.push_str(&format!("stage {k}: {}\n", show_stage(&g, stage)));
        }
        text.push_str(&format!("closure_ordinal: {}\n", t.closure_ordinal));
    }
    text.push_str(&format!("survivors: {}\n", show_survivors(&g, &t.outcome)));
    let report = EliminateReport {
        condition: name,
        survivors: parts(&g, &t.outcome),
        closure_ordinal: t.closure_ordinal,
        stages: trace.then(|| t.stages.iter().map(|s| parts(&g, s)).collect()),
    };
    io.emit(&report, &text)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct EvaluateReport {
    formula: String,
    states: Vec<String>,
}

fn evaluate(
    io: &mut Io<'_>,
    reg: &ConditionRegistry,
    model: &Path,
    game: &Path,
    formula: &str,
) -> Result<i32, String> {
    let g = load_game(game)?;
    let m = formats::parse_model(&read(model)?, &g).map_err(|e| format!("{}: {e}", model.display()))?;
    let psi = parse_nu(formula).map_err(|e| format!("formula: {e}"))?;
    // a free X is read as the whole state space
    let result = if psi.is_first_order() {
        lnu::interpret(&m, reg, &psi, m.omega())
    } else {
        lnu::interpret_so(&m, reg, &psi, m.omega())
    }
    .map_err(|e| e.to_string())?;
    let report = EvaluateReport {
        formula: psi.to_string(),
        states: result.states().map(|w| m.state_name(w).to_string()).collect(),
    };
    io.emit(&report, &format!("{}\n", show_event(&m, result)))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CountermodelReport {
    model: String,
    environment: Vec<String>,
    satisfied: Vec<String>,
}

#[derive(Serialize)]
struct ValidityReportJson {
    formula: String,
    valid_on_corpus: bool,
    models_checked: u64,
    countermodel: Option<CountermodelReport>,
}

fn check_valid(
    io: &mut Io<'_>,
    reg: &ConditionRegistry,
    game: &Path,
    formula: &str,
    budget: &BudgetArgs,
    seed: Option<u64>,
) -> Result<i32, String> {
    let g = load_game(game)?;
    let psi = parse_nu(formula).map_err(|e| format!("formula: {e}"))?;
    if seed.is_some() && budget.random.is_none() {
        return Err("--seed only applies to --random".into());
    }
    let budget = match (&budget.exhaustive, &budget.random) {
        (Some(k), _) => Budget::Exhaustive { max_states: *k },
        (None, Some(nk)) => Budget::Random { samples: nk[0], max_states: nk[1], seed: seed.unwrap_or(0) },
        (None, None) => unreachable!("clap requires one budget"),
    };
    let report = check_validity(&g, reg, &psi, budget).map_err(|e| e.to_string())?;
    let names = |m: &epifix_core::BeliefModel<'_>, e: Event| -> Vec<String> {
        e.states().map(|w| m.state_name(w).to_string()).collect()
    };
    let mut text = String::new();
    let countermodel = report.countermodel.as_ref().map(|c| {
        let serialized = formats::write_model(&c.model);
        text = format!("COUNTERMODEL (after {} models)\n{serialized}", report.models_checked);
        if psi.has_free_x() {
            text.push_str(&format!("# X = {}\n", show_event(&c.model, c.environment)));
        }
        text.push_str(&format!("# holds at {}\n", show_event(&c.model, c.satisfied)));
        CountermodelReport {
            model: serialized,
            environment: names(&c.model, c.environment),
            satisfied: names(&c.model, c.satisfied),
        }
    });
    if report.valid_on_corpus {
        text = format!("VALID-ON-CORPUS ({} models checked)\n", report.models_checked);
    }
    let json = ValidityReportJson {
        formula: psi.to_string(),
        valid_on_corpus: report.valid_on_corpus,
        models_checked: report.models_checked,
        countermodel,
    };
    io.emit(&json, &text)?;
    Ok(if report.valid_on_corpus { EXIT_OK } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct LemmaReport {
    name: String,
    premise: String,
    conclusion: String,
    registered: bool,
    models_checked: u64,
    error: Option<String>,
}

#[derive(Serialize)]
struct FailureReport {
    line: usize,
    reason: String,
}

#[derive(Serialize)]
struct ProofReportJson {
    ok: bool,
    theorem: Option<String>,
    lemmas: Vec<LemmaReport>,
    failure: Option<FailureReport>,
}

fn check_proof_file(io: &mut Io<'_>, reg: &ConditionRegistry, proof: &Path) -> Result<i32, String> {
    let script = formats::parse_proof(&read(proof)?).map_err(|e| format!("{}: {e}", proof.display()))?;
    let corpus = oracle::standard_corpus();
    let mut lemmas = LemmaRegistry::new();
    let mut lemma_reports = Vec::new();
    let mut text = String::new();
    let mut refused = false;
    for decl in &script.lemmas {
        let outcome = lemmas.register_lemma(&decl.name, &decl.premise, &decl.conclusion, reg, &corpus);
        let (registered, checked, error) = match outcome {
            Ok(l) => (true, l.evidence.models_checked, None),
            Err(e @ LemmaError::Refused { .. }) => {
                refused = true;
                (false, 0, Some(e.to_string()))
            }
            Err(e) => return Err(format!("lemma `{}`: {e}", decl.name)),
        };
        match &error {
            None => text.push_str(&format!(
                "lemma {}: {} -> {} registered ({checked} optimality models)\n",
                decl.name, decl.premise, decl.conclusion
            )),
            Some(e) => text.push_str(&format!("LEMMA REFUSED {}: {e}\n", decl.name)),
        }
        lemma_reports.push(LemmaReport {
            name: decl.name.clone(),
            premise: decl.premise.clone(),
            conclusion: decl.conclusion.clone(),
            registered,
            models_checked: checked,
            error,
        });
    }
    let verdict = check_proof(&script, reg, &lemmas);
    let ok = verdict.ok && !refused;
    match &verdict.first_failure {
        Some(f) => text.push_str(&format!("FAIL {f}\n")),
        None if ok => {
            text.push_str(&format!("OK {}\n", script.theorem().map(ToString::to_string).unwrap_or_default()))
        }
        None => text.push_str("FAIL a declared lemma was refused\n"),
    }
    let json = ProofReportJson {
        ok,
        theorem: script.theorem().map(ToString::to_string),
        lemmas: lemma_reports,
        failure: verdict.first_failure.map(|f| FailureReport { line: f.line, reason: f.reason.to_string() }),
    };
    io.emit(&json, &text)?;
    Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct AnalysisReport {
    name: Option<String>,
    formula: String,
    closed: bool,
    positive: bool,
    context_safe: bool,
}

fn analyze_condition(io: &mut Io<'_>, reg: &ConditionRegistry, condition: &str) -> Result<i32, String> {
    let (name, phi) = match reg.get(condition) {
        Some(c) => (Some(condition.to_string()), c.formula.clone()),
        None => (None, parse_lo(condition).map_err(|e| format!("condition: {e}"))?),
    };
    let a = analyze(&phi);
    let mut text = String::new();
    if let Some(n) = &name {
        text.push_str(&format!("condition: {n}\n"));
    }
    text.push_str(&format!(
        "formula: {phi}\nclosed: {}\npositive: {}\ncontext_safe: {}\n",
        a.closed, a.positive, a.context_safe
    ));
    let report = AnalysisReport {
        name,
        formula: phi.to_string(),
        closed: a.closed,
        positive: a.positive,
        context_safe: a.context_safe,
    };
    io.emit(&report, &text)?;
    Ok(EXIT_OK)
}
