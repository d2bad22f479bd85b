#![allow(clippy::needless_range_loop)]

mod common;

use proptest::prelude::*;
use ratest_core::harness::{random_graph_case, FuzzParams, WriterBound};
use ratest_core::onewriter::solve;
use ratest_core::oracle::{enumerate_mos, enumerate_rfs, oracle_consistent, OracleLimits};
use ratest_core::trace_io::{parse_trace, serialize_trace, TraceDocument};
use ratest_core::{
    check_axiom, hb_reaches, rf_leq, rf_min, verify, Axiom, Graph, MemoryModel, ReadsFrom,
};

fn params(seed: u64, events: usize, bound: WriterBound) -> FuzzParams {
    FuzzParams {
        seed,
        num_threads: 3,
        num_locations: 2,
        num_events: events,
        value_range: 3,
        writer_bound: bound,
    }
}

fn limits() -> OracleLimits {
    OracleLimits::default()
}

/// (po ∪ rf)⁺ by squaring an adjacency matrix until it stops changing.
fn closure(g: &Graph, rf: &ReadsFrom) -> Vec<Vec<bool>> {
    let n = g.len();
    let mut m = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            m[a][b] = g.thread_of(a) == g.thread_of(b) && g.index_of(a) + 1 == g.index_of(b);
        }
    }
    for (r, w) in rf.iter() {
        m[g.node(w).unwrap()][g.node(r).unwrap()] = true;
    }
    loop {
        let mut next = m.clone();
        for a in 0..n {
            for k in 0..n {
                if m[a][k] {
                    for b in 0..n {
                        next[a][b] |= m[k][b];
                    }
                }
            }
        }
        if next == m {
            return m;
        }
        m = next;
    }
}

fn some_rfs(g: &Graph, limit: usize) -> Vec<ReadsFrom> {
    match enumerate_rfs(g, &limits()) {
        Ok(it) => it.take(limit).collect(),
        Err(_) => Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hb_matches_matrix_closure(seed in 0u64..10_000, events in 1usize..12) {
        let g = random_graph_case(&params(seed, events, WriterBound::Unbounded), 0).unwrap();
        for rf in some_rfs(&g, 4) {
            let m = closure(&g, &rf);
            for a in 0..g.len() {
                for b in 0..g.len() {
                    let got = hb_reaches(&g, &rf, &g.event(a).id, &g.event(b).id).unwrap();
                    prop_assert_eq!(got, m[a][b]);
                }
            }
            let porf = check_axiom(&g, &rf, None, Axiom::PorfAcyclicity).unwrap();
            prop_assert_eq!(porf.is_some(), (0..g.len()).any(|a| m[a][a]));
        }
    }

    #[test]
    fn trace_round_trip(seed in 0u64..10_000, events in 0usize..14, annotate in any::<bool>()) {
        let g = random_graph_case(&params(seed, events, WriterBound::Unbounded), 0).unwrap();
        let mut doc = TraceDocument::new(g.clone());
        if annotate {
            doc.rf = some_rfs(&g, 1).into_iter().next().filter(|rf| !rf.is_empty());
            if g.locations().iter().any(|x| g.writes_to(g.loc_index(x).unwrap()).len() > 1) {
                doc.mo = enumerate_mos(&g, &limits()).ok().and_then(|mut it| it.next());
            }
        }
        let text = serialize_trace(&doc);
        let back = parse_trace(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(serialize_trace(&back), text);
    }

    #[test]
    fn models_coincide_on_one_writer(seed in 0u64..100_000, events in 1usize..14) {
        let g = random_graph_case(&params(seed, events, WriterBound::One), 0).unwrap();
        let v: Vec<bool> = [MemoryModel::Sra, MemoryModel::Ra, MemoryModel::Wra, MemoryModel::Cc, MemoryModel::Ccv]
            .iter()
            .map(|&m| solve(&g, m).unwrap().0.is_consistent())
            .collect();
        prop_assert!(v.iter().all(|&b| b == v[0]));
    }

    #[test]
    fn rf_min_is_greatest_lower_bound(seed in 0u64..10_000, events in 1usize..10) {
        let g = random_graph_case(&params(seed, events, WriterBound::One), 0).unwrap();
        let all = some_rfs(&g, 64);
        for a in all.iter().take(8) {
            for b in all.iter().take(8) {
                let m = rf_min(a, b, &g).unwrap();
                prop_assert!(rf_leq(&m, a, &g).unwrap() && rf_leq(&m, b, &g).unwrap());
                for c in &all {
                    if rf_leq(c, a, &g).unwrap() && rf_leq(c, b, &g).unwrap() {
                        prop_assert!(rf_leq(c, &m, &g).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn pointwise_model_hierarchy() {
    for case in 0..120 {
        let g = random_graph_case(&params(77, 7, WriterBound::Unbounded), case).unwrap();
        let Ok(rfs) = enumerate_rfs(&g, &limits()) else { continue };
        for rf in rfs.take(32) {
            for mo in enumerate_mos(&g, &limits()).unwrap() {
                let ok = |m| verify(&g, &rf, Some(&mo), m).unwrap().is_consistent();
                let (s, r, w) = (ok(MemoryModel::Sra), ok(MemoryModel::Ra), ok(MemoryModel::Wra));
                assert!(!s || r, "case {case}");
                assert!(!r || w, "case {case}");
            }
        }
    }
}

#[test]
fn weak_read_violation_forces_coherence_violation() {
    for case in 0..120 {
        let g = random_graph_case(&params(78, 8, WriterBound::Unbounded), case).unwrap();
        let Ok(rfs) = enumerate_rfs(&g, &limits()) else { continue };
        for rf in rfs.take(32) {
            if check_axiom(&g, &rf, None, Axiom::WeakReadCoherence).unwrap().is_none() {
                continue;
            }
            for mo in enumerate_mos(&g, &limits()).unwrap() {
                let wc = check_axiom(&g, &rf, Some(&mo), Axiom::WriteCoherence).unwrap();
                let rc = check_axiom(&g, &rf, Some(&mo), Axiom::ReadCoherence).unwrap();
                assert!(wc.is_some() || rc.is_some(), "case {case}");
            }
        }
    }
}

#[test]
fn rf_order_monotonicity_and_meets() {
    for case in 0..60 {
        let g = random_graph_case(&params(79, 9, WriterBound::One), case).unwrap();
        let all = some_rfs(&g, 200);
        let porf: Vec<bool> = all
            .iter()
            .map(|rf| check_axiom(&g, rf, None, Axiom::PorfAcyclicity).unwrap().is_some())
            .collect();
        let weak: Vec<bool> = all
            .iter()
            .map(|rf| check_axiom(&g, rf, None, Axiom::WeakReadCoherence).unwrap().is_none())
            .collect();
        for i in 0..all.len() {
            for j in 0..all.len() {
                if porf[i] && rf_leq(&all[i], &all[j], &g).unwrap() {
                    assert!(porf[j], "case {case}");
                }
                if weak[i] && weak[j] {
                    let m = rf_min(&all[i], &all[j], &g).unwrap();
                    assert!(check_axiom(&g, &m, None, Axiom::WeakReadCoherence).unwrap().is_none());
                }
            }
        }
    }
}

#[test]
fn oracle_hierarchy_on_multi_writer_graphs() {
    for case in 0..80 {
        let g = random_graph_case(&params(80, 8, WriterBound::Two), case).unwrap();
        let c = |m| oracle_consistent(&g, m, &limits()).unwrap().is_consistent();
        let (s, r, w) = (c(MemoryModel::Sra), c(MemoryModel::Ra), c(MemoryModel::Wra));
        assert!(!s || r);
        assert!(!r || w);
    }
}

#[test]
fn mutated_rf_lines_are_rejected() {
    let text = common::fixture_text("read_coherence.trace");
    for bad in [
        text.replace("rf t1:0 t2:1", "rf t1:1 t2:1"),
        text.replace("rf t1:0 t2:1", "rf t1:2 t2:1"),
        text.replace("rf t1:0 t2:1", "rf t2:0 t2:1"),
        text.replace("rf t1:0 t2:1", "rf t1:0 t2:0"),
        text.replace("rf t1:0 t2:1", "rf t1:0 t2:7"),
        text.replace("rf t1:0 t2:1", ""),
    ] {
        assert!(parse_trace(&bad).is_err(), "{bad}");
    }
}
