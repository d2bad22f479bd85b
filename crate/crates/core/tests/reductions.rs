use ratest_core::oracle::{oracle_consistent, OracleLimits};
use ratest_core::reductions::{
    brute_sat, cnf_to_threewriter, cnf_to_twowriter, cnf_to_twowriter_relaxed, graph_to_onewriter,
    CnfFormula, Literal, UndirectedGraph,
};
use ratest_core::{check_axiom, verify, Axiom, MemoryModel, Verdict};

fn lit(v: i64) -> Literal {
    Literal::from_dimacs(v)
}

fn consistent(g: &ratest_core::Graph, m: MemoryModel) -> bool {
    oracle_consistent(g, m, &OracleLimits::default())
        .unwrap()
        .is_consistent()
}

fn clause_shapes(k: usize) -> Vec<[Literal; 3]> {
    let lits: Vec<Literal> = (1..=k)
        .flat_map(|v| [Literal::new(v, true), Literal::new(v, false)])
        .collect();
    let mut out = Vec::new();
    for a in 0..lits.len() {
        for b in a..lits.len() {
            for c in b..lits.len() {
                out.push([lits[a], lits[b], lits[c]]);
            }
        }
    }
    out
}

#[test]
fn threewriter_and_twowriter_small_sweep() {
    for k in 1..=2 {
        let shapes = clause_shapes(k);
        for (i, c1) in shapes.iter().enumerate() {
            for c2 in &shapes[i..] {
                let phi = CnfFormula::new(k, vec![*c1, *c2]).unwrap();
                let sat = brute_sat(&phi).unwrap().is_some();
                assert_eq!(consistent(&cnf_to_threewriter(&phi), MemoryModel::Wra), sat, "{phi:?}");
                assert_eq!(consistent(&cnf_to_twowriter(&phi), MemoryModel::Ra), sat, "{phi:?}");
            }
        }
    }
}

#[test]
fn repeated_third_literal_keeps_clause_satisfiable() {
    // the only literal of the clause is also its third one
    let phi = CnfFormula::new(1, vec![[lit(1), lit(1), lit(1)]]).unwrap();
    let g = cnf_to_twowriter(&phi);
    assert!(g.max_writers() <= 2);
    assert!(consistent(&g, MemoryModel::Sra));
    let phi = CnfFormula::new(1, vec![[lit(1), lit(1), lit(1)], [lit(-1), lit(-1), lit(-1)]]).unwrap();
    assert!(!consistent(&cnf_to_twowriter(&phi), MemoryModel::Sra));
}

/// Under plain Relaxed the two-writer gadget admits an unsatisfiable
/// formula: the witness closes a porf cycle through `Init_1`'s read of `s`.
/// Requiring porf-acyclicity removes it.
#[test]
fn relaxed_gadget_accepts_an_unsatisfiable_formula() {
    let phi = CnfFormula::new(
        2,
        vec![
            [lit(1), lit(1), lit(2)],
            [lit(1), lit(1), lit(-2)],
            [lit(-1), lit(-1), lit(2)],
            [lit(-1), lit(-1), lit(-2)],
        ],
    )
    .unwrap();
    assert_eq!(brute_sat(&phi).unwrap(), None);
    let g = cnf_to_twowriter_relaxed(&phi);
    let Verdict::Consistent { rf, mo } =
        oracle_consistent(&g, MemoryModel::Relaxed, &OracleLimits::default()).unwrap()
    else {
        panic!("expected a Relaxed witness");
    };
    assert!(verify(&g, &rf, mo.as_ref(), MemoryModel::Relaxed).unwrap().is_consistent());
    assert!(check_axiom(&g, &rf, None, Axiom::PorfAcyclicity).unwrap().is_some());
    assert!(!consistent(&g, MemoryModel::RelaxedAcyclic));
}

#[test]
fn relaxed_gadget_small_cases() {
    for k in 1..=2 {
        let shapes = clause_shapes(k);
        for (i, c1) in shapes.iter().enumerate() {
            for c2 in &shapes[i..] {
                let phi = CnfFormula::new(k, vec![*c1, *c2]).unwrap();
                let sat = brute_sat(&phi).unwrap().is_some();
                let g = cnf_to_twowriter_relaxed(&phi);
                // satisfiable always implies consistent
                if sat {
                    assert!(consistent(&g, MemoryModel::Relaxed), "{phi:?}");
                }
                assert_eq!(consistent(&g, MemoryModel::RelaxedAcyclic), sat, "{phi:?}");
            }
        }
    }
    // the smallest unsatisfiable formula is already accepted without acyclicity
    let unsat = CnfFormula::new(1, vec![[lit(1), lit(1), lit(1)], [lit(-1), lit(-1), lit(-1)]]).unwrap();
    let g = cnf_to_twowriter_relaxed(&unsat);
    assert!(consistent(&g, MemoryModel::Relaxed));
    assert!(!consistent(&g, MemoryModel::RelaxedAcyclic));
}

#[test]
fn triangle_small_graphs() {
    for n in 1..=4usize {
        let pairs: Vec<(usize, usize)> = (1..=n)
            .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges = (0..pairs.len()).filter(|i| mask >> i & 1 == 1).map(|i| pairs[i]);
            let gr = UndirectedGraph::new(n, edges).unwrap();
            let (g, rf) = graph_to_onewriter(&gr);
            let edges = gr.edges().count();
            assert_eq!(g.len(), 5 * n + 12 * edges);
            let fails = check_axiom(&g, &rf, None, Axiom::WeakReadCoherence).unwrap().is_some();
            assert_eq!(fails, gr.has_triangle(), "{gr:?}");
        }
    }
}
