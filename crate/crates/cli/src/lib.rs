//! The `ratest` command line.
//!
//! Exit codes: 0 consistent or success, 1 inconsistent, 2 usage or input
//! error, 3 search budget exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ratest_core::harness::{differential_run, FuzzParams, WriterBound};
use ratest_core::onewriter::{solve, SolverTrace};
use ratest_core::oracle::{all_consistent_rfs, oracle_consistent, OracleError, OracleLimits};
use ratest_core::reductions::{
    cnf_to_threewriter, cnf_to_twowriter, cnf_to_twowriter_relaxed, graph_to_onewriter,
};
use ratest_core::trace_io::{
    parse_dimacs, parse_edgelist, parse_trace, serialize_trace, TraceDocument,
};
use ratest_core::verdict::model_needs_mo;
use ratest_core::{check_axiom, Axiom, MemoryModel, ReadsFrom, Refutation, Verdict};

pub const EXIT_CONSISTENT: i32 = 0;
pub const EXIT_INCONSISTENT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ratest", version, about = "Consistency checking for weak memory execution graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether some rf and mo make the graph consistent.
    Check(CheckArgs),
    /// Check the rf/mo annotations of a trace against a model.
    Verify(VerifyArgs),
    /// Decide consistency by exhaustive search.
    Oracle(OracleArgs),
    /// Generate a hardness gadget.
    Reduce(ReduceArgs),
    /// Differential testing of the solver against the oracle.
    Fuzz(FuzzArgs),
}

#[derive(Args, Debug)]
struct ModelInput {
    #[arg(long, value_parser = parse_model)]
    model: MemoryModel,
    /// Trace file, or `-` for standard input.
    #[arg(long)]
    input: String,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: ModelInput,
    /// Write the consistent rf/mo as trace annotations.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Write the solver's update steps.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: ModelInput,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: ModelInput,
    /// List every consistent reads-from relation.
    #[arg(long)]
    all_rf: bool,
    #[arg(long)]
    max_events: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReduceKind {
    Cnf3w,
    Cnf2w,
    Cnf2wRlx,
    Triangle,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(value_enum)]
    kind: ReduceKind,
    #[arg(long)]
    input: String,
    /// Output file, or `-` for standard output.
    #[arg(long)]
    output: String,
}

#[derive(Args, Debug)]
struct FuzzArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    cases: u64,
    #[arg(long)]
    events: usize,
    #[arg(long, value_parser = parse_writers)]
    writers: WriterBound,
    /// Comma-separated model names, or `all`.
    #[arg(long, value_parser = parse_models)]
    models: ModelList,
    /// Directory for reproducer traces.
    #[arg(long, default_value = "ratest-repro")]
    out_dir: PathBuf,
}

#[derive(Clone, Debug)]
struct ModelList(Vec<MemoryModel>);

fn parse_model(s: &str) -> Result<MemoryModel, String> {
    s.parse()
}

fn parse_models(s: &str) -> Result<ModelList, String> {
    if s == "all" {
        return Ok(ModelList(MemoryModel::ALL.to_vec()));
    }
    let models = s
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<MemoryModel>, String>>()?;
    if models.is_empty() {
        return Err("no models given".into());
    }
    Ok(ModelList(models))
}

fn parse_writers(s: &str) -> Result<WriterBound, String> {
    match s {
        "1" => Ok(WriterBound::One),
        "2" => Ok(WriterBound::Two),
        "3" => Ok(WriterBound::Three),
        "any" => Ok(WriterBound::Unbounded),
        _ => Err(format!("expected 1, 2, 3 or any, got `{s}`")),
    }
}

/// Errors that map to an exit code other than 2.
#[derive(Debug)]
struct Budget(OracleError);

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for Budget {}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn read_input(&mut self, path: &str) -> Result<String> {
        if path == "-" {
            let mut s = String::new();
            self.stdin
                .read_to_string(&mut s)
                .context("reading standard input")?;
            Ok(s)
        } else {
            fs::read_to_string(path).with_context(|| format!("reading {path}"))
        }
    }

    fn write_output(&mut self, path: &str, text: &str) -> Result<()> {
        if path == "-" {
            self.out.write_all(text.as_bytes())?;
            Ok(())
        } else {
            fs::write(path, text).with_context(|| format!("writing {path}"))
        }
    }

    fn load(&mut self, path: &str) -> Result<TraceDocument> {
        let text = self.read_input(path)?;
        parse_trace(&text).with_context(|| format!("parsing {path}"))
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{e}");
                EXIT_CONSISTENT
            };
            return code;
        }
    };
    let mut io = Io { stdin, out, err };
    let result = match cli.command {
        Command::Check(a) => cmd_check(&mut io, a),
        Command::Verify(a) => cmd_verify(&mut io, a),
        Command::Oracle(a) => cmd_oracle(&mut io, a),
        Command::Reduce(a) => cmd_reduce(&mut io, a),
        Command::Fuzz(a) => cmd_fuzz(&mut io, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e:#}");
            if e.downcast_ref::<Budget>().is_some() {
                EXIT_BUDGET
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn print_verdict(out: &mut dyn Write, v: &Verdict) -> Result<i32> {
    match v {
        Verdict::Consistent { .. } => {
            writeln!(out, "CONSISTENT")?;
            Ok(EXIT_CONSISTENT)
        }
        Verdict::Inconsistent(r) => {
            writeln!(out, "INCONSISTENT {}", r.name())?;
            match r {
                Refutation::Violation(v) => {
                    writeln!(out, "certificate: {}", v.cycle_string())?;
                    if let Some(t) = &v.anchor {
                        writeln!(out, "anchor: {t}")?;
                    }
                }
                Refutation::NoMatchingWrite(r) => {
                    writeln!(out, "certificate: read {r} has no matching write")?;
                }
                Refutation::Exhausted => {
                    writeln!(out, "certificate: no rf and mo satisfy the model")?;
                }
            }
            Ok(EXIT_INCONSISTENT)
        }
    }
}

fn render_trace(t: &SolverTrace) -> String {
    let mut s = String::new();
    for (i, it) in t.iterations.iter().enumerate() {
        let v = &it.violation;
        let _ = write!(s, "update {}: read {} from {} stale by {}", i + 1, v.read, v.write, v.later);
        if let Some(via) = &v.via {
            let _ = write!(s, " via {via}");
        }
        let _ = writeln!(s, "; now reads {}", it.replacement);
    }
    if let Some(rf) = &t.rf {
        s.push_str("final rf:");
        for (r, w) in rf.iter() {
            let _ = write!(s, " {r}<-{w}");
        }
        s.push('\n');
    }
    s
}

fn cmd_check(io: &mut Io<'_>, a: CheckArgs) -> Result<i32> {
    let doc = io.load(&a.common.input)?;
    let g = doc.graph;
    let m = a.common.model;
    let (verdict, trace) = if g.is_one_writer() {
        let (v, t) = solve(&g, m)?;
        (v, Some(t))
    } else {
        writeln!(
            io.err,
            "warning: {} writer threads on some location; using exhaustive search",
            g.max_writers()
        )?;
        let v = oracle_consistent(&g, m, &OracleLimits::default()).map_err(Budget)?;
        (v, None)
    };
    let code = print_verdict(io.out, &verdict)?;
    if let (Some(path), Verdict::Consistent { rf, mo }) = (&a.witness, &verdict) {
        let doc = TraceDocument {
            graph: g.clone(),
            rf: Some(rf.clone()),
            mo: mo.clone(),
        };
        fs::write(path, serialize_trace(&doc))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.trace {
        let text = match &trace {
            Some(t) => render_trace(t),
            None => "# exhaustive search, no update steps\n".to_string(),
        };
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(code)
}

fn cmd_verify(io: &mut Io<'_>, a: VerifyArgs) -> Result<i32> {
    let doc = io.load(&a.common.input)?;
    let g = &doc.graph;
    let m = a.common.model;
    let rf = match doc.rf {
        Some(rf) => rf,
        None if g.reads().is_empty() => ReadsFrom::new(),
        None => bail!("{}: rf annotations are required", a.common.input),
    };
    let has_writes = (0..g.locations().len()).any(|x| !g.writes_to(x).is_empty());
    let mo = match doc.mo {
        Some(mo) => Some(mo),
        None if model_needs_mo(m) && !has_writes => Some(Default::default()),
        None if model_needs_mo(m) => {
            bail!("{}: model {m} needs mo annotations", a.common.input)
        }
        None => None,
    };
    let mut first = None;
    for &ax in Axiom::of_model(m) {
        match check_axiom(g, &rf, mo.as_ref(), ax)? {
            None => writeln!(io.out, "{ax}: pass")?,
            Some(v) => {
                writeln!(io.out, "{ax}: fail: {}", v.cycle_string())?;
                first.get_or_insert(v);
            }
        }
    }
    let verdict = match first {
        None => Verdict::Consistent { rf, mo },
        Some(v) => Verdict::Inconsistent(Refutation::Violation(v)),
    };
    match &verdict {
        Verdict::Consistent { .. } => {
            writeln!(io.out, "CONSISTENT")?;
            Ok(EXIT_CONSISTENT)
        }
        Verdict::Inconsistent(r) => {
            writeln!(io.out, "INCONSISTENT {}", r.name())?;
            Ok(EXIT_INCONSISTENT)
        }
    }
}

fn cmd_oracle(io: &mut Io<'_>, a: OracleArgs) -> Result<i32> {
    let doc = io.load(&a.common.input)?;
    let g = &doc.graph;
    let m = a.common.model;
    let mut limits = OracleLimits::default();
    if let Some(n) = a.max_events {
        limits.max_events = n;
    }
    let verdict = oracle_consistent(g, m, &limits).map_err(Budget)?;
    let code = print_verdict(io.out, &verdict)?;
    if a.all_rf {
        let all = all_consistent_rfs(g, m, &limits).map_err(Budget)?;
        writeln!(io.out, "consistent rfs: {}", all.len())?;
        for rf in all {
            let pairs: Vec<String> = rf.iter().map(|(r, w)| format!("{r}<-{w}")).collect();
            writeln!(io.out, "rf: {}", pairs.join(" "))?;
        }
    }
    Ok(code)
}

fn cmd_reduce(io: &mut Io<'_>, a: ReduceArgs) -> Result<i32> {
    let text = io.read_input(&a.input)?;
    let doc = match a.kind {
        ReduceKind::Triangle => {
            let gr = parse_edgelist(&text).with_context(|| format!("parsing {}", a.input))?;
            let (g, rf) = graph_to_onewriter(&gr);
            TraceDocument {
                graph: g,
                rf: Some(rf).filter(|rf| !rf.is_empty()),
                mo: None,
            }
        }
        kind => {
            let phi = parse_dimacs(&text).with_context(|| format!("parsing {}", a.input))?;
            TraceDocument::new(match kind {
                ReduceKind::Cnf3w => cnf_to_threewriter(&phi),
                ReduceKind::Cnf2w => cnf_to_twowriter(&phi),
                _ => cnf_to_twowriter_relaxed(&phi),
            })
        }
    };
    io.write_output(&a.output, &serialize_trace(&doc))?;
    Ok(EXIT_CONSISTENT)
}

fn cmd_fuzz(io: &mut Io<'_>, a: FuzzArgs) -> Result<i32> {
    let p = FuzzParams {
        seed: a.seed,
        num_events: a.events,
        writer_bound: a.writers,
        ..FuzzParams::default()
    };
    let report = differential_run(&p, &a.models.0, a.cases, Some(&a.out_dir))
        .map_err(|e| anyhow!(e))?;
    io.out.write_all(report.render().as_bytes())?;
    Ok(if report.failures.is_empty() {
        EXIT_CONSISTENT
    } else {
        EXIT_INCONSISTENT
    })
}
