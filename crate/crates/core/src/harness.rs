//! Random graph generation and differential testing of the solver against
//! the exhaustive oracle.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::axioms::{replay, verify};
use crate::model::{rf_leq, Access, Graph, MemoryModel};
use crate::onewriter::{derive_mo, solve_with, SolveError, SolveOptions, SolverTrace};
use crate::oracle::{all_consistent_rfs, oracle_consistent, OracleError, OracleLimits};
use crate::trace_io::{serialize_trace, TraceDocument};
use crate::verdict::{Refutation, Verdict};

pub const PRNG_NAME: &str = "ChaCha8";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cannot write reproducer {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriterBound {
    One,
    Two,
    Three,
    Unbounded,
}

impl WriterBound {
    fn limit(self, threads: usize) -> usize {
        match self {
            WriterBound::One => 1,
            WriterBound::Two => 2,
            WriterBound::Three => 3,
            WriterBound::Unbounded => threads,
        }
        .min(threads)
    }
}

impl fmt::Display for WriterBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WriterBound::One => "1",
            WriterBound::Two => "2",
            WriterBound::Three => "3",
            WriterBound::Unbounded => "any",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzParams {
    pub seed: u64,
    pub num_threads: usize,
    pub num_locations: usize,
    pub num_events: usize,
    /// Values are drawn from `0..value_range`.
    pub value_range: i64,
    pub writer_bound: WriterBound,
}

impl Default for FuzzParams {
    fn default() -> Self {
        FuzzParams {
            seed: 0,
            num_threads: 3,
            num_locations: 2,
            num_events: 10,
            value_range: 3,
            writer_bound: WriterBound::One,
        }
    }
}

fn check_params(p: &FuzzParams) -> Result<(), HarnessError> {
    if p.num_events > 0 && p.num_threads == 0 {
        return Err(HarnessError::InvalidParams("events but no threads".into()));
    }
    if p.num_events > 0 && p.num_locations == 0 {
        return Err(HarnessError::InvalidParams("events but no locations".into()));
    }
    if p.value_range <= 0 {
        return Err(HarnessError::InvalidParams("value range must be positive".into()));
    }
    Ok(())
}

fn rng_for(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

fn thread_of_slot(rng: &mut ChaCha8Rng, i: usize, threads: usize) -> usize {
    if rng.gen_bool(0.75) {
        i % threads
    } else {
        rng.gen_range(0..threads)
    }
}

fn assemble(threads: Vec<Vec<Access>>) -> Graph {
    Graph::new(
        threads
            .into_iter()
            .enumerate()
            .map(|(t, ev)| (format!("t{t}"), ev))
            .collect(),
    )
    .expect("generated names are valid")
}

/// The graph for case 0 of `p`.
pub fn random_graph(p: &FuzzParams) -> Result<Graph, HarnessError> {
    random_graph_case(p, 0)
}

/// Each case index draws from its own stream of the seeded generator.
pub fn random_graph_case(p: &FuzzParams, case: u64) -> Result<Graph, HarnessError> {
    check_params(p)?;
    if p.num_events == 0 {
        return Ok(Graph::empty());
    }
    let mut rng = rng_for(p.seed, case);
    let t = p.num_threads;
    let all: Vec<usize> = (0..t).collect();
    let writers: Vec<Vec<usize>> = (0..p.num_locations)
        .map(|_| {
            let k = p.writer_bound.limit(t);
            let mut w: Vec<usize> = all.choose_multiple(&mut rng, k).copied().collect();
            w.sort_unstable();
            w
        })
        .collect();

    // (thread, location, is_write, value)
    let mut slots = Vec::with_capacity(p.num_events);
    for i in 0..p.num_events {
        let th = thread_of_slot(&mut rng, i, t);
        let x = rng.gen_range(0..p.num_locations);
        let write = writers[x].contains(&th) && rng.gen_bool(0.5);
        slots.push((th, x, write, rng.gen_range(0..p.value_range)));
    }
    let written: Vec<Vec<i64>> = (0..p.num_locations)
        .map(|x| {
            slots
                .iter()
                .filter(|s| s.1 == x && s.2)
                .map(|s| s.3)
                .collect()
        })
        .collect();
    let mut threads = vec![Vec::new(); t];
    for (th, x, write, val) in slots {
        let var = format!("x{x}");
        if write {
            threads[th].push(Access::write(var, val));
            continue;
        }
        let val = match written[x].choose(&mut rng) {
            Some(&v) if rng.gen_bool(0.9) => v,
            _ => rng.gen_range(0..p.value_range),
        };
        threads[th].push(Access::read(var, val));
    }
    Ok(assemble(threads))
}

/// A 1-writer graph recorded from a sequentially consistent run, hence
/// consistent under every model. Location `x<i>` belongs to thread `i % T`.
pub fn sc_graph(p: &FuzzParams, case: u64) -> Result<Graph, HarnessError> {
    check_params(p)?;
    if p.num_events == 0 {
        return Ok(Graph::empty());
    }
    let mut rng = rng_for(p.seed, case);
    let t = p.num_threads;
    let mut memory: Vec<Option<i64>> = vec![None; p.num_locations];
    let mut threads = vec![Vec::new(); t];
    for i in 0..p.num_events {
        let th = thread_of_slot(&mut rng, i, t);
        let owned: Vec<usize> = (0..p.num_locations).filter(|x| x % t == th).collect();
        let x = rng.gen_range(0..p.num_locations);
        match memory[x] {
            Some(v) if !(owned.contains(&x) && rng.gen_bool(0.3)) => {
                threads[th].push(Access::read(format!("x{x}"), v));
            }
            _ => match owned.choose(&mut rng) {
                Some(&y) => {
                    let v = rng.gen_range(0..p.value_range);
                    memory[y] = Some(v);
                    threads[th].push(Access::write(format!("x{y}"), v));
                }
                // a thread without locations reads one that has a value
                None => {
                    let seen: Vec<usize> =
                        (0..p.num_locations).filter(|&y| memory[y].is_some()).collect();
                    if let Some(&y) = seen.choose(&mut rng) {
                        threads[th].push(Access::read(format!("x{y}"), memory[y].unwrap()));
                    }
                }
            },
        }
    }
    Ok(assemble(threads))
}

pub type SolverFn =
    dyn Fn(&Graph, MemoryModel) -> Result<(Verdict, SolverTrace), SolveError> + Sync;

fn default_solver(g: &Graph, m: MemoryModel) -> Result<(Verdict, SolverTrace), SolveError> {
    solve_with(g, m, SolveOptions { verify_cm: true })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub case: u64,
    pub messages: Vec<String>,
    pub reproducer: String,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub params: FuzzParams,
    pub models: Vec<MemoryModel>,
    pub cases: u64,
    /// Cases skipped because the oracle ran out of budget.
    pub budget_skips: Vec<(u64, String)>,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn header(&self) -> String {
        let p = &self.params;
        let models: Vec<&str> = self.models.iter().map(|m| m.name()).collect();
        format!(
            "prng={PRNG_NAME} seed={} threads={} locations={} events={} values={} writers={} models={}",
            p.seed,
            p.num_threads,
            p.num_locations,
            p.num_events,
            p.value_range,
            p.writer_bound,
            models.join(",")
        )
    }

    pub fn summary(&self) -> String {
        format!("cases={} failures={}", self.cases, self.failures.len())
    }

    pub fn render(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for (case, why) in &self.budget_skips {
            let _ = writeln!(out, "case {case} skipped: {why}");
        }
        for f in &self.failures {
            for m in &f.messages {
                let _ = writeln!(out, "case {} FAIL: {m}", f.case);
            }
            if let Some(p) = &f.path {
                let _ = writeln!(out, "case {} reproducer: {}", f.case, p.display());
            }
        }
        out.push_str(&self.summary());
        out.push('\n');
        out
    }
}

enum CaseOutcome {
    Ok,
    Budget(String),
    Failed(Vec<String>),
}

fn verdict_name(v: &Verdict) -> String {
    match v {
        Verdict::Consistent { .. } => "Consistent".into(),
        Verdict::Inconsistent(r) => format!("Inconsistent({})", r.name()),
    }
}

/// All checks on one graph; returns failure messages.
pub fn check_graph(
    g: &Graph,
    models: &[MemoryModel],
    solver: &SolverFn,
    limits: &OracleLimits,
) -> Result<Vec<String>, OracleError> {
    let mut msgs = Vec::new();
    let one_writer = g.is_one_writer();
    let mut oracle = Vec::new();
    for &m in models {
        oracle.push((m, oracle_consistent(g, m, limits)?));
    }
    let of = |m: MemoryModel| oracle.iter().find(|(x, _)| *x == m).map(|(_, v)| v.is_consistent());
    let chain = [MemoryModel::Sra, MemoryModel::Ra, MemoryModel::Wra];
    for pair in chain.windows(2) {
        if let (Some(true), Some(false)) = (of(pair[0]), of(pair[1])) {
            msgs.push(format!("oracle: {} consistent but {} not", pair[0], pair[1]));
        }
    }
    if !one_writer {
        return Ok(msgs);
    }
    for (m, ov) in &oracle {
        let m = *m;
        let (sv, trace) = match solver(g, m) {
            Ok(x) => x,
            Err(e) => {
                msgs.push(format!("{m}: solver error: {e}"));
                continue;
            }
        };
        if sv.is_consistent() != ov.is_consistent() {
            msgs.push(format!(
                "{m}: solver {} but oracle {}",
                verdict_name(&sv),
                verdict_name(ov)
            ));
            continue;
        }
        if let Verdict::Inconsistent(Refutation::NoMatchingWrite(r)) = ov {
            if let Verdict::Inconsistent(sr) = &sv {
                if sr.blocking_read() != Some(r) {
                    msgs.push(format!("{m}: oracle blocks on read {r}, solver reports {sr}"));
                }
            }
        }
        match &sv {
            Verdict::Consistent { rf, mo } => {
                match verify(g, rf, mo.as_ref(), m) {
                    Ok(v) if v.is_consistent() => {}
                    Ok(v) => msgs.push(format!("{m}: solver witness fails: {}", verdict_name(&v))),
                    Err(e) => msgs.push(format!("{m}: solver witness invalid: {e}")),
                }
                for other in all_consistent_rfs(g, m, limits)? {
                    if !rf_leq(rf, &other, g).unwrap_or(false) {
                        msgs.push(format!("{m}: solver rf is not below a consistent rf"));
                        break;
                    }
                }
                if m == MemoryModel::Wra {
                    match verify(g, rf, mo.as_ref(), MemoryModel::Cm) {
                        Ok(v) if v.is_consistent() => {}
                        _ => msgs.push("wra witness is not a cm witness".into()),
                    }
                }
            }
            Verdict::Inconsistent(Refutation::Violation(v)) => {
                let mo = derive_mo(g).ok();
                let ok = trace
                    .rf
                    .as_ref()
                    .map(|rf| replay(g, rf, mo.as_ref(), v).unwrap_or(false))
                    .unwrap_or(false);
                if !ok {
                    msgs.push(format!("{m}: certificate does not replay: {v}"));
                }
            }
            Verdict::Inconsistent(_) => {}
        }
    }
    Ok(msgs)
}

pub fn differential_run(
    p: &FuzzParams,
    models: &[MemoryModel],
    count: u64,
    out_dir: Option<&Path>,
) -> Result<Report, HarnessError> {
    differential_run_with(p, models, count, out_dir, &default_solver, &OracleLimits::default())
}

/// As [`differential_run`] with a replaceable solver.
pub fn differential_run_with(
    p: &FuzzParams,
    models: &[MemoryModel],
    count: u64,
    out_dir: Option<&Path>,
    solver: &SolverFn,
    limits: &OracleLimits,
) -> Result<Report, HarnessError> {
    check_params(p)?;
    let outcomes: Vec<(u64, Graph, CaseOutcome)> = (0..count)
        .into_par_iter()
        .map(|case| {
            let g = random_graph_case(p, case).expect("params checked");
            let out = match check_graph(&g, models, solver, limits) {
                Ok(m) if m.is_empty() => CaseOutcome::Ok,
                Ok(m) => CaseOutcome::Failed(m),
                Err(e) => CaseOutcome::Budget(e.to_string()),
            };
            (case, g, out)
        })
        .collect();
    let mut report = Report {
        params: *p,
        models: models.to_vec(),
        cases: count,
        budget_skips: Vec::new(),
        failures: Vec::new(),
    };
    for (case, g, out) in outcomes {
        match out {
            CaseOutcome::Ok => {}
            CaseOutcome::Budget(why) => report.budget_skips.push((case, why)),
            CaseOutcome::Failed(messages) => {
                let mut text = String::new();
                let _ = writeln!(text, "# {} case={case}", report.header());
                for m in &messages {
                    let _ = writeln!(text, "# {m}");
                }
                text.push_str(&serialize_trace(&TraceDocument::new(g)));
                let path = match out_dir {
                    Some(dir) => {
                        let path = dir.join(format!("case-{case}.trace"));
                        fs::create_dir_all(dir)
                            .and_then(|_| fs::write(&path, &text))
                            .map_err(|source| HarnessError::Io {
                                path: path.clone(),
                                source,
                            })?;
                        Some(path)
                    }
                    None => None,
                };
                report.failures.push(Failure {
                    case,
                    messages,
                    reproducer: text,
                    path,
                });
            }
        }
    }
    Ok(report)
}
