use std::fs;

use ratest_core::harness::{
    differential_run, differential_run_with, random_graph, random_graph_case, sc_graph,
    FuzzParams, WriterBound,
};
use ratest_core::onewriter::SolverTrace;
use ratest_core::oracle::OracleLimits;
use ratest_core::trace_io::{parse_trace, serialize_trace, TraceDocument};
use ratest_core::{MemoryModel, ReadsFrom, Verdict};

fn params(seed: u64, bound: WriterBound) -> FuzzParams {
    FuzzParams {
        seed,
        num_threads: 3,
        num_locations: 2,
        num_events: 9,
        value_range: 3,
        writer_bound: bound,
    }
}

#[test]
fn generation_is_deterministic() {
    let p = params(42, WriterBound::Two);
    let a = serialize_trace(&TraceDocument::new(random_graph(&p).unwrap()));
    let b = serialize_trace(&TraceDocument::new(random_graph(&p).unwrap()));
    assert_eq!(a, b);
    assert_eq!(random_graph(&p).unwrap().len(), 9);
    let other = random_graph_case(&p, 1).unwrap();
    assert_ne!(random_graph(&p).unwrap(), other);
}

#[test]
fn writer_bound_is_respected() {
    for case in 0..200 {
        for (bound, max) in [(WriterBound::One, 1), (WriterBound::Two, 2), (WriterBound::Three, 3)] {
            let g = random_graph_case(&params(3, bound), case).unwrap();
            assert!(g.max_writers() <= max);
        }
    }
}

#[test]
fn empty_and_invalid_params() {
    let mut p = params(1, WriterBound::One);
    p.num_events = 0;
    assert_eq!(random_graph(&p).unwrap().len(), 0);
    p.num_events = 3;
    p.num_threads = 0;
    assert!(random_graph(&p).is_err());
}

#[test]
fn sc_graphs_are_one_writer_and_consistent() {
    let p = FuzzParams {
        num_events: 12,
        ..params(5, WriterBound::One)
    };
    for case in 0..30 {
        let g = sc_graph(&p, case).unwrap();
        assert!(g.is_one_writer());
        for m in MemoryModel::ALL {
            assert!(
                ratest_core::onewriter::solve(&g, m).unwrap().0.is_consistent(),
                "{m} case {case}"
            );
        }
    }
}

#[test]
fn zero_cases() {
    let r = differential_run(&params(0, WriterBound::One), &MemoryModel::ALL, 0, None).unwrap();
    assert!(r.render().ends_with("cases=0 failures=0\n"));
    assert!(r.render().starts_with("prng=ChaCha8 seed=0"));
}

#[test]
fn small_sweep_agrees() {
    let r = differential_run(&params(11, WriterBound::One), &MemoryModel::ALL, 60, None).unwrap();
    assert!(r.failures.is_empty(), "{}", r.render());
    let r = differential_run(
        &params(12, WriterBound::Two),
        &[MemoryModel::Sra, MemoryModel::Ra, MemoryModel::Wra],
        60,
        None,
    )
    .unwrap();
    assert!(r.failures.is_empty(), "{}", r.render());
}

#[test]
fn broken_solver_yields_reproducers() {
    let dir = tempfile::tempdir().unwrap();
    let liar = |g: &ratest_core::Graph, _m: MemoryModel| {
        let rf = ReadsFrom::new();
        let _ = g;
        Ok((Verdict::Consistent { rf, mo: None }, SolverTrace::default()))
    };
    let p = params(9, WriterBound::One);
    let r = differential_run_with(
        &p,
        &[MemoryModel::Wra],
        40,
        Some(dir.path()),
        &liar,
        &OracleLimits::default(),
    )
    .unwrap();
    assert!(!r.failures.is_empty());
    for f in &r.failures {
        let text = fs::read_to_string(f.path.as_ref().unwrap()).unwrap();
        let doc = parse_trace(&text).unwrap();
        assert_eq!(doc.graph, random_graph_case(&p, f.case).unwrap());
        let again = ratest_core::harness::check_graph(
            &doc.graph,
            &[MemoryModel::Wra],
            &liar,
            &OracleLimits::default(),
        )
        .unwrap();
        assert_eq!(again, f.messages);
    }
}
