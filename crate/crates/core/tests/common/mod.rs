#![allow(dead_code)]

use std::path::PathBuf;

use ratest_core::trace_io::{parse_trace, TraceDocument};
use ratest_core::{EventId, ModificationOrder, ReadsFrom, Step};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn load(name: &str) -> TraceDocument {
    parse_trace(&fixture_text(name)).unwrap()
}

pub fn id(s: &str) -> EventId {
    s.parse().unwrap()
}

/// rf from "reader<-writer" pairs.
pub fn rf(pairs: &[(&str, &str)]) -> ReadsFrom {
    ReadsFrom::from_pairs(pairs.iter().map(|(r, w)| (id(w), id(r))))
}

pub fn mo(orders: &[(&str, &[&str])]) -> ModificationOrder {
    let mut out = ModificationOrder::new();
    for (var, ids) in orders {
        out.set(*var, ids.iter().map(|s| id(s)).collect());
    }
    out
}

/// Whether `cycle` equals `expected` up to rotation.
pub fn same_cycle(cycle: &[Step], expected: &[(&str, &str)]) -> bool {
    let got: Vec<(String, String)> = cycle
        .iter()
        .map(|s| (s.event.to_string(), s.label.to_string()))
        .collect();
    let want: Vec<(String, String)> = expected
        .iter()
        .map(|(e, l)| (e.to_string(), l.to_string()))
        .collect();
    got.len() == want.len()
        && (0..got.len()).any(|k| (0..got.len()).all(|i| got[(i + k) % got.len()] == want[i]))
}

pub fn replay_rf0() -> ReadsFrom {
    rf(&[("t2:1", "t1:0"), ("t2:0", "t1:1"), ("t3:1", "t1:1"), ("t3:0", "t2:2")])
}

pub fn replay_rf1() -> ReadsFrom {
    rf(&[("t2:1", "t1:2"), ("t2:0", "t1:1"), ("t3:1", "t1:1"), ("t3:0", "t2:2")])
}

pub fn replay_rf2() -> ReadsFrom {
    rf(&[("t2:1", "t1:2"), ("t2:0", "t1:1"), ("t3:1", "t1:3"), ("t3:0", "t2:2")])
}

/// The mo order written out by hand for x1=1, x2=0, x3=0:
/// on s_i the satisfying thread's first write, then both writes of the
/// other thread, then the satisfying thread's second write.
pub fn formula3_proof_order_mo() -> ModificationOrder {
    let witness = load("formula3_witness.trace").mo.unwrap();
    let mut out = witness.clone();
    for (i, (a, n)) in [(1, ("T1_1", "T1_0")), (2, ("T2_0", "T2_1")), (3, ("T3_0", "T3_1"))] {
        let order = [format!("{a}:0"), format!("{n}:0"), format!("{n}:1"), format!("{a}:1")];
        out.set(format!("s_{i}"), order.iter().map(|s| id(s)).collect());
    }
    out
}
