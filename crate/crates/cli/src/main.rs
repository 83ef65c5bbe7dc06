//! `mxcheck` command-line front end.
//!
//! Exit codes: 0 all checked properties hold, 1 a violation was found,
//! 2 inconclusive within the budget, 3 usage or configuration error.

use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mxcheck::check::{check_model, CheckOptions, Letter, Outcome, Property, PropertySet, Verdict};
use mxcheck::explore::Budget;
use mxcheck::justness::ConcurrencySpec;
use mxcheck::lang::{self, Program};
use mxcheck::model::{kind_name, CompositeModel, MemoryModel, ModelOptions};
use mxcheck::registers::{Blocking, Init, Kind, RegisterConfig, Style};
use mxcheck::scenario::{self, enumerate_scenario_outcomes, Script};
use mxcheck::trace::{self, TraceDoc};
use mxcheck::zoo;
use mxcheck::Error;

/// Environment variable holding the default `--budget`.
const BUDGET_VAR: &str = "MXCHECK_BUDGET";

#[derive(Parser)]
#[command(name = "mxcheck", version, about = "Model checker for mutual exclusion algorithms over safe, regular and atomic registers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check one algorithm under one memory model.
    Check(CheckArgs),
    /// Compute verdict rows for corpus algorithms and compare with the expected table.
    Table(TableArgs),
    /// Enumerate read outcomes of the built-in register timing examples.
    Examples,
    /// Replay a structured counterexample and print it.
    Replay {
        /// File written by `check --trace --json`.
        file: String,
        /// Algorithm source file, for traces of algorithms outside the corpus.
        #[arg(long)]
        source: Option<String>,
    },
    /// List the built-in corpus.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropArg {
    Me,
    Df,
    Sf,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Safe,
    Regular,
    Atomic,
}

#[derive(Args)]
struct Common {
    /// Read style of the register processes: instant or full.
    #[arg(long, default_value = "instant")]
    style: String,
    /// Blocking variant: none, all, writes-reads or writes.
    #[arg(long, default_value = "none")]
    blocking: String,
    /// Exploration limits, e.g. `states=1000000,seconds=60`.
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    /// Corpus name or path to a source file.
    #[arg(long)]
    algorithm: String,
    /// Number of threads; defaults to the corpus entry's default.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    registers: KindArg,
    #[arg(long, default_value = "T")]
    concurrency: String,
    #[arg(long, value_enum, default_value = "all")]
    property: PropArg,
    /// Print counterexamples.
    #[arg(long)]
    trace: bool,
    /// Emit one JSON document instead of text.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TableArgs {
    /// `all`, `two-thread`, `three-thread`, or a comma-separated list of names.
    #[arg(long, default_value = "two-thread")]
    subset: String,
    /// Override the thread count of every row.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Table(a) => cmd_table(a),
        Cmd::Examples => cmd_examples(),
        Cmd::Replay { file, source } => cmd_replay(&file, source.as_deref()),
        Cmd::List => {
            for e in zoo::list() {
                let row: Vec<String> = (0..6).map(|c| e.cell(c)).collect();
                println!("{:<26} N={}  {}  {}", e.name, e.default_threads, row.join(" "), e.origin);
            }
            Ok(0)
        }
    }
}

fn options(c: &Common, properties: PropertySet) -> Result<CheckOptions> {
    let budget = match c.budget.clone().or_else(|| std::env::var(BUDGET_VAR).ok()) {
        Some(s) => Budget::parse(&s).map_err(|e| anyhow!(e))?,
        None => Budget::default(),
    };
    Ok(CheckOptions {
        style: trace::parse_style(&c.style).map_err(|e| anyhow!(e))?,
        blocking: trace::parse_blocking(&c.blocking).map_err(|e| anyhow!(e))?,
        properties,
        budget,
    })
}

/// Resolves a corpus name or a file path to a program and thread count.
fn load(name: &str, threads: Option<usize>) -> Result<(Program, usize)> {
    if let Ok(e) = zoo::find(name) {
        let n = threads.unwrap_or(e.default_threads);
        return Ok((zoo::builtin(name, n)?, n));
    }
    if Path::new(name).is_file() {
        let text = std::fs::read_to_string(name).with_context(|| format!("reading {name}"))?;
        let p = lang::parse(&text).map_err(|e| anyhow!("{name}:{e}"))?;
        let n = threads.unwrap_or(p.min_threads.max(2));
        lang::check_threads(&p, n)?;
        return Ok((p, n));
    }
    Err(Error::UnknownAlgorithm(name.to_string()).into())
}

fn kind_of(k: KindArg) -> Kind {
    match k {
        KindArg::Safe => Kind::Safe,
        KindArg::Regular => Kind::Regular,
        KindArg::Atomic => Kind::Atomic,
    }
}

fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::Holds => "holds".into(),
        Outcome::Violated(_) => "violated".into(),
        Outcome::Inconclusive(why) => format!("inconclusive ({why})"),
        Outcome::NotChecked => "not checked".into(),
    }
}

fn outcome_json(o: &Outcome) -> serde_json::Value {
    serde_json::Value::String(
        match o {
            Outcome::Holds => "holds",
            Outcome::Violated(_) => "violated",
            Outcome::Inconclusive(_) => "inconclusive",
            Outcome::NotChecked => "not-checked",
        }
        .into(),
    )
}

fn exit_code(v: &Verdict) -> u8 {
    let outs = [&v.me, &v.df, &v.sf];
    if outs.iter().any(|o| matches!(o, Outcome::Violated(_))) {
        1
    } else if outs.iter().any(|o| matches!(o, Outcome::Inconclusive(_))) {
        2
    } else {
        0
    }
}

const PROPS: [Property; 3] = [Property::MutualExclusion, Property::DeadlockFreedom, Property::StarvationFreedom];

fn cmd_check(a: CheckArgs) -> Result<u8> {
    let kind = kind_of(a.registers);
    let c: ConcurrencySpec = a.concurrency.parse().map_err(|e: String| anyhow!(e))?;
    let memory = MemoryModel::new(kind, c)?;
    let props = match a.property {
        PropArg::Me => PropertySet::only(Property::MutualExclusion),
        PropArg::Df => PropertySet::only(Property::DeadlockFreedom),
        PropArg::Sf => PropertySet::only(Property::StarvationFreedom),
        PropArg::All => PropertySet::ALL,
    };
    let opts = options(&a.common, props)?;
    let (p, n) = load(&a.algorithm, a.threads)?;
    let model = CompositeModel::build(&p, n, ModelOptions { kind, style: opts.style, blocking: opts.blocking })?;
    let v = check_model(&model, &[memory], &opts)?.remove(0);
    let code = exit_code(&v);
    if a.json {
        let mut doc = serde_json::json!({
            "algorithm": p.name,
            "threads": n,
            "memory": memory.label(),
            "style": a.common.style,
            "blocking": a.common.blocking,
            "states": v.states,
            "transitions": v.transitions,
            "letter": v.letter().map(|l| l.to_string()),
        });
        for prop in PROPS {
            doc[prop.short()] = outcome_json(v.outcome(prop));
        }
        if a.trace {
            let traces: Vec<TraceDoc> = PROPS.iter().filter_map(|&pr| v.outcome(pr).counterexample()).map(|cex| trace::to_doc(&model, c, cex)).collect();
            doc["traces"] = serde_json::to_value(traces)?;
        }
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(code);
    }
    println!("{} with {n} threads, {} registers ({} states, {} transitions)", p.name, memory.label(), v.states, v.transitions);
    for prop in PROPS {
        if !matches!(v.outcome(prop), Outcome::NotChecked) {
            println!("  {:<22} {}", prop.long(), outcome_text(v.outcome(prop)));
        }
    }
    if let Some(l) = v.letter() {
        println!("verdict: {l}");
    }
    if a.trace {
        for prop in PROPS {
            if let Some(cex) = v.outcome(prop).counterexample() {
                println!();
                print!("{}", trace::render_human(&model, cex));
            }
        }
    }
    Ok(code)
}

fn select(subset: &str) -> Result<Vec<&'static zoo::Entry>> {
    let all = zoo::list();
    Ok(match subset {
        "all" => all.iter().collect(),
        "two-thread" => all.iter().filter(|e| e.two_thread()).collect(),
        "three-thread" => all.iter().filter(|e| !e.two_thread()).collect(),
        names => names.split(',').map(|n| zoo::find(n.trim())).collect::<Result<_, _>>()?,
    })
}

fn cmd_table(a: TableArgs) -> Result<u8> {
    let opts = options(&a.common, PropertySet::ALL)?;
    let entries = select(&a.subset)?;
    let mut code = 0u8;
    let mut json_rows = Vec::new();
    if !a.json {
        println!("{:<28} {:>2}  {:<24}  expected", "algorithm", "N", "safe reg  T  S  I  A");
    }
    for e in entries {
        let n = a.threads.unwrap_or(e.default_threads);
        let p = zoo::builtin(e.name, n)?;
        let mut cells = Vec::new();
        for kind in [Kind::Safe, Kind::Regular, Kind::Atomic] {
            let mems: Vec<MemoryModel> = MemoryModel::ALL.iter().copied().filter(|m| m.kind == kind).collect();
            let model = CompositeModel::build(&p, n, ModelOptions { kind, style: opts.style, blocking: opts.blocking })?;
            cells.extend(check_model(&model, &mems, &opts)?);
        }
        let letters: Vec<Option<Letter>> = cells.iter().map(Verdict::letter).collect();
        let expected = e.expected_row();
        let mut marks = Vec::new();
        for (i, l) in letters.iter().enumerate() {
            match l {
                None => {
                    code = code.max(2);
                    marks.push("?".to_string());
                }
                Some(l) if *l != expected[i] => {
                    code = 1;
                    marks.push(format!("{l}!"));
                }
                Some(l) => marks.push(l.to_string()),
            }
        }
        if a.json {
            json_rows.push(serde_json::json!({
                "algorithm": e.name,
                "threads": n,
                "letters": letters.iter().map(|l| l.map(|x| x.to_string())).collect::<Vec<_>>(),
                "expected": e.expected,
                "states": cells.iter().map(|v| v.states).collect::<Vec<_>>(),
            }));
        } else {
            let got = format!("{:<4} {:<3} {:<2} {:<2} {:<2} {:<2}", marks[0], marks[1], marks[2], marks[3], marks[4], marks[5]);
            let exp: Vec<String> = (0..6).map(|c| e.cell(c)).collect();
            println!("{:<28} {:>2}  {got:<24}  {}", e.title, n, exp.join(" "));
        }
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&json_rows)?);
    } else if code == 1 {
        println!("rows marked ! differ from the expected table");
    }
    Ok(code)
}

fn cmd_examples() -> Result<u8> {
    for (title, text) in [("single-writer example", scenario::SINGLE_WRITER), ("multi-writer example", scenario::MULTI_WRITER)] {
        let script = Script::parse(text)?;
        println!("{title}:");
        for kind in [Kind::Safe, Kind::Regular, Kind::Atomic] {
            let cfg = RegisterConfig { id: 0, domain: 3, init: Init::Value(0), kind, style: Style::FullRead, blocking: Blocking::None };
            let o = enumerate_scenario_outcomes(&cfg, 3, &script)?;
            let sets: Vec<String> = o
                .reads
                .iter()
                .map(|r| format!("{r}∈{{{}}}", o.values_of(r).iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
                .collect();
            println!("  {:<8} {} outcomes; {}", kind_name(kind), o.tuples.len(), sets.join(" "));
        }
    }
    Ok(0)
}

fn cmd_replay(file: &str, source: Option<&str>) -> Result<u8> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {file}"))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    // Accept a bare trace, a list of traces, or a `check --json` document.
    let docs: Vec<TraceDoc> = if let Some(t) = value.get("traces") {
        serde_json::from_value(t.clone())?
    } else if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    if docs.is_empty() {
        bail!("{file} contains no traces");
    }
    for doc in docs {
        let memory = doc.memory().map_err(|e| anyhow!(e))?;
        let (p, _) = load(source.unwrap_or(&doc.algorithm), Some(doc.threads))?;
        let style = trace::parse_style(&doc.style).map_err(|e| anyhow!(e))?;
        let blocking = trace::parse_blocking(&doc.blocking).map_err(|e| anyhow!(e))?;
        let model = CompositeModel::build(&p, doc.threads, ModelOptions { kind: memory.kind, style, blocking })?;
        let cex = doc.reconstruct(&model)?;
        trace::replay(&model, memory.concurrency, &cex)?;
        println!("replay ok: {} {} under {}", doc.algorithm, doc.property.short(), memory.label());
        print!("{}", trace::render_human(&model, &cex));
    }
    Ok(0)
}
