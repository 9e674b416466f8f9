//! coroc: annotation checking, call-graph export, CPS translation, program
//! execution, differential testing, and runtime microbenchmarks for mini-C
//! coroutine programs.
//!
//! Exit codes: 0 clean, 1 findings (diagnostics, refused translations,
//! trace mismatches), 2 input errors (missing files, parse or type errors),
//! 3 runtime faults.

use clap::{Parser, Subcommand, ValueEnum};
use coroc_cli::bench::{self, BenchKind};
use coroc_core::check;
use coroc_core::interp::difftest::{self, DiffConfig};
use coroc_core::interp::{direct, machine, DEFAULT_FUEL};
use coroc_core::{
    cps, parse_program_with, print_program_with, typecheck, CpsError, Outcome, ParseOptions,
    PrintOptions, Program, Stage, TraceEvent, TypedProgram,
};
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CLEAN: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Longest schedule the default drain policy will build before giving up on
/// a program that never lets its coroutines finish.
const DRAIN_CAP: usize = 1 << 16;

#[derive(Parser)]
#[command(name = "coroc", version, about = "Check, translate, and run coroutine programs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check coroutine annotations and print diagnostics.
    Check {
        file: PathBuf,
        /// Emit machine-readable JSON instead of one diagnostic per line.
        #[arg(long)]
        json: bool,
        /// Name of the coroutine annotation attribute.
        #[arg(long, value_name = "NAME", default_value = "coroutine_fn")]
        attr_name: String,
    },
    /// Print the annotated call graph as DOT.
    Graph {
        file: PathBuf,
        /// Drop nodes that carry no information (undeclared native leaves).
        #[arg(long)]
        filter: bool,
        /// Emit the graph as JSON instead of DOT.
        #[arg(long)]
        json: bool,
        /// Write to a file instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Name of the coroutine annotation attribute.
        #[arg(long, value_name = "NAME", default_value = "coroutine_fn")]
        attr_name: String,
    },
    /// Translate annotated functions to continuation-passing style.
    Translate {
        file: PathBuf,
        /// Pipeline stage to print.
        #[arg(long, value_enum, default_value_t = StageArg::Cps)]
        stage: StageArg,
        /// Write to a file instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Name of the coroutine annotation attribute.
        #[arg(long, value_name = "NAME", default_value = "coroutine_fn")]
        attr_name: String,
    },
    /// Run a program and print its event trace.
    Run {
        file: PathBuf,
        /// Comma-separated coroutine ordinals to resume after main returns.
        /// Without this, coroutines are resumed round-robin until they all
        /// terminate.
        #[arg(long, value_name = "ORDS")]
        schedule: Option<String>,
        /// Execution step budget.
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Use the direct-style reference interpreter (the default).
        #[arg(long, conflicts_with = "cps")]
        direct: bool,
        /// Translate first and run the converted program on the runtime.
        #[arg(long)]
        cps: bool,
    },
    /// Translate, then compare both engines over many schedules.
    Difftest {
        file: PathBuf,
        /// Longest schedule to try.
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Sample size when the schedule space is too large to enumerate.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Seed for sampled schedules.
        #[arg(long, default_value_t = 0xD1FF)]
        seed: u64,
        /// Emit the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Measure a runtime scenario and print its result as JSON.
    Bench {
        /// Scenario to measure.
        #[arg(long, value_enum, default_value_t = BenchArg::Lifecycle)]
        bench: BenchArg,
        /// Whether terminated coroutines are recycled through the pool.
        #[arg(long, value_enum, default_value_t = PoolArg::On)]
        pool: PoolArg,
        /// Operations per round.
        #[arg(long, default_value_t = 10_000)]
        iters: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Boxed,
    Normalized,
    Split,
    Lifted,
    Cps,
}

impl From<StageArg> for Stage {
    fn from(stage: StageArg) -> Stage {
        match stage {
            StageArg::Boxed => Stage::Boxed,
            StageArg::Normalized => Stage::Normalized,
            StageArg::Split => Stage::Split,
            StageArg::Lifted => Stage::Lifted,
            StageArg::Cps => Stage::Cps,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolArg {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchArg {
    Lifecycle,
    Nesting,
    Yield,
}

impl From<BenchArg> for BenchKind {
    fn from(kind: BenchArg) -> BenchKind {
        match kind {
            BenchArg::Lifecycle => BenchKind::Lifecycle,
            BenchArg::Nesting => BenchKind::Nesting,
            BenchArg::Yield => BenchKind::Yield,
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Cmd::Check { file, json, attr_name } => cmd_check(&file, json, &attr_name),
        Cmd::Graph { file, filter, json, out, attr_name } => {
            cmd_graph(&file, filter, json, out.as_deref(), &attr_name)
        }
        Cmd::Translate { file, stage, out, attr_name } => {
            cmd_translate(&file, stage.into(), out.as_deref(), &attr_name)
        }
        Cmd::Run { file, schedule, fuel, direct: _, cps } => {
            cmd_run(&file, schedule.as_deref(), fuel, cps)
        }
        Cmd::Difftest { file, depth, samples, seed, json } => {
            cmd_difftest(&file, depth, samples, seed, json)
        }
        Cmd::Bench { bench, pool, iters } => cmd_bench(bench.into(), pool, iters),
    }
}

fn load(file: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(file).map_err(|e| {
        eprintln!("error: {}: {e}", file.display());
        ExitCode::from(EXIT_INPUT)
    })
}

fn parse(source: &str, attr_name: &str) -> Result<Program, ExitCode> {
    let opts = ParseOptions::with_coroutine_attr(attr_name);
    parse_program_with(source, &opts).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INPUT)
    })
}

fn frontend(source: &str, attr_name: &str) -> Result<TypedProgram, ExitCode> {
    typecheck(parse(source, attr_name)?).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INPUT)
    })
}

fn emit(out: Option<&Path>, text: &str) -> ExitCode {
    match out {
        None => {
            print!("{text}");
            ExitCode::from(EXIT_CLEAN)
        }
        Some(path) => match fs::write(path, text) {
            Ok(()) => ExitCode::from(EXIT_CLEAN),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ExitCode::from(EXIT_INPUT)
            }
        },
    }
}

fn cmd_check(file: &Path, json: bool, attr_name: &str) -> ExitCode {
    let source = match load(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let typed = match frontend(&source, attr_name) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let report = check::check(&typed);
    if json {
        let view = serde_json::json!({
            "clean": report.is_clean(),
            "diagnostics": report.diagnostics,
        });
        println!("{}", serde_json::to_string_pretty(&view).expect("report serializes"));
    } else {
        for d in &report.diagnostics {
            println!("{d}");
        }
    }
    if report.is_clean() {
        ExitCode::from(EXIT_CLEAN)
    } else {
        ExitCode::from(EXIT_FINDINGS)
    }
}

fn cmd_graph(
    file: &Path,
    filter: bool,
    json: bool,
    out: Option<&Path>,
    attr_name: &str,
) -> ExitCode {
    let source = match load(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let typed = match frontend(&source, attr_name) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let report = check::check(&typed);
    let graph = if filter { report.graph.filtered() } else { report.graph };
    let text = if json {
        let mut s = serde_json::to_string_pretty(&graph).expect("graph serializes");
        s.push('\n');
        s
    } else {
        let opts = PrintOptions { coroutine_attr: attr_name.to_string(), ..Default::default() };
        check::emit_dot(&graph, &opts)
    };
    emit(out, &text)
}

fn cmd_translate(file: &Path, stage: Stage, out: Option<&Path>, attr_name: &str) -> ExitCode {
    let source = match load(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let program = match parse(&source, attr_name) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match cps::translate_to(&program, stage) {
        Ok(translated) => {
            let opts =
                PrintOptions { coroutine_attr: attr_name.to_string(), ..Default::default() };
            emit(out, &print_program_with(&translated, &opts))
        }
        Err(CpsError::Lang(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(CpsError::CheckFailed(diagnostics)) => {
            for d in &diagnostics {
                eprintln!("{d}");
            }
            eprintln!("error: the program has annotation problems; fix them before translating");
            ExitCode::from(EXIT_FINDINGS)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FINDINGS)
        }
    }
}

fn cmd_run(file: &Path, schedule: Option<&str>, fuel: u64, use_cps: bool) -> ExitCode {
    let source = match load(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let program = match parse(&source, "coroutine_fn") {
        Ok(p) => p,
        Err(code) => return code,
    };

    let run: Box<dyn Fn(&[u64]) -> Outcome> = if use_cps {
        let converted = match cps::translate(&program) {
            Ok(c) => c,
            Err(CpsError::Lang(e)) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
            Err(CpsError::CheckFailed(diagnostics)) => {
                for d in &diagnostics {
                    eprintln!("{d}");
                }
                eprintln!("error: refusing to translate; run --direct or fix the annotations");
                return ExitCode::from(EXIT_FINDINGS);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_FINDINGS);
            }
        };
        let typed = match typecheck(converted) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        };
        Box::new(move |sched: &[u64]| machine::run(&typed, sched, fuel))
    } else {
        let mut with_ids = program.clone();
        with_ids.assign_ids();
        let typed = match typecheck(with_ids) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        };
        Box::new(move |sched: &[u64]| direct::run(&typed, sched, fuel))
    };

    let outcome = match schedule {
        Some(text) => match parse_schedule(text) {
            Ok(sched) => run(&sched),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        },
        None => drain(run.as_ref()),
    };

    for event in &outcome.trace {
        println!("{event}");
    }
    match outcome.fault {
        None => ExitCode::from(EXIT_CLEAN),
        Some(fault) => {
            eprintln!("fault: {fault}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn parse_schedule(text: &str) -> Result<Vec<u64>, String> {
    text.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad schedule entry `{}`", part.trim()))
        })
        .collect()
}

/// The default schedule: resume every coroutine round-robin, doubling the
/// number of passes until a run ends with all coroutines terminated (resumes
/// of finished coroutines are skipped, so overshooting is harmless).
fn drain(run: &dyn Fn(&[u64]) -> Outcome) -> Outcome {
    let mut schedule: Vec<u64> = Vec::new();
    let mut passes: u64 = 1;
    loop {
        let outcome = run(&schedule);
        if outcome.fault.is_some() {
            return outcome;
        }
        let terminated: BTreeSet<u64> = outcome
            .trace
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Term { coroutine } => Some(*coroutine),
                _ => None,
            })
            .collect();
        if terminated.len() as u64 == outcome.coroutines_created
            || schedule.len() >= DRAIN_CAP
        {
            return outcome;
        }
        for _ in 0..passes {
            schedule.extend(0..outcome.coroutines_created);
        }
        passes *= 2;
    }
}

fn cmd_difftest(file: &Path, depth: usize, samples: usize, seed: u64, json: bool) -> ExitCode {
    let source = match load(file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let program = match parse(&source, "coroutine_fn") {
        Ok(p) => p,
        Err(code) => return code,
    };
    let cfg = DiffConfig { max_depth: depth, samples, seed, ..DiffConfig::default() };
    let report = match difftest::run(&program, &cfg) {
        Ok(r) => r,
        Err(CpsError::Lang(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
        Err(CpsError::CheckFailed(diagnostics)) => {
            for d in &diagnostics {
                eprintln!("{d}");
            }
            eprintln!("error: the program has annotation problems; fix them before translating");
            return ExitCode::from(EXIT_FINDINGS);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FINDINGS);
        }
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("schedules run: {}", report.schedules_run);
        println!("exhaustive: {}", report.exhaustive);
        println!("skipped (fuel): {}", report.skipped_fuel);
        println!("mismatches: {}", report.mismatches.len());
        for m in &report.mismatches {
            println!("--- schedule {:?}", m.schedule);
            println!("    direct:    {}", summarize(&m.direct));
            println!("    converted: {}", summarize(&m.converted));
        }
    }
    if report.is_clean() {
        ExitCode::from(EXIT_CLEAN)
    } else {
        ExitCode::from(EXIT_FINDINGS)
    }
}

fn summarize(outcome: &Outcome) -> String {
    let events: Vec<String> = outcome.trace.iter().map(|e| e.to_string()).collect();
    let fault = match &outcome.fault {
        Some(f) => format!(" fault: {f}"),
        None => String::new(),
    };
    format!("[{}]{fault}", events.join(", "))
}

fn cmd_bench(kind: BenchKind, pool: PoolArg, iters: u64) -> ExitCode {
    let result = bench::run(kind, matches!(pool, PoolArg::On), iters);
    println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
    ExitCode::from(EXIT_CLEAN)
}
