//! Generators for the hardness gadgets and a small exhaustive SAT decider.
//!
//! * [`cnf_to_threewriter`]: 3-CNF to a graph with at most three writer
//!   threads per location, consistent under SRA/RA/WRA iff satisfiable.
//! * [`cnf_to_twowriter`]: the same with clause chains, two writers.
//! * [`cnf_to_twowriter_relaxed`]: two-writer gadget for Relaxed.
//! * [`graph_to_onewriter`]: a 1-writer graph whose forced reads-from
//!   violates weak read coherence iff the input graph has a triangle.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Access, EventId, Graph, ReadsFrom};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("{0} variables is too many for exhaustive search")]
    TooManyVariables(usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range 1..={max}")]
    VertexOutOfRange { vertex: usize, max: usize },
    #[error("variable {var} out of range 1..={max}")]
    VariableOutOfRange { var: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: usize, positive: bool) -> Self {
        Literal { var, positive }
    }

    /// From a DIMACS integer (non-zero).
    pub fn from_dimacs(v: i64) -> Self {
        Literal::new(v.unsigned_abs() as usize, v > 0)
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    fn holds(self, assignment: &[bool]) -> bool {
        assignment[self.var - 1] == self.positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self, ReductionError> {
        for lit in clauses.iter().flatten() {
            if lit.var == 0 || lit.var > num_vars {
                return Err(ReductionError::VariableOutOfRange {
                    var: lit.var,
                    max: num_vars,
                });
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.holds(assignment)))
    }

    /// Clauses (0-based) containing `lit`, ascending.
    fn occurrences(&self, lit: Literal) -> Vec<usize> {
        (0..self.clauses.len())
            .filter(|&j| self.clauses[j].contains(&lit))
            .collect()
    }
}

/// Undirected simple graph on vertices `1..=num_vertices`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    num_vertices: usize,
    // unordered pairs stored as (min, max)
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ReductionError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x == 0 || x > num_vertices {
                    return Err(ReductionError::VertexOutOfRange {
                        vertex: x,
                        max: num_vertices,
                    });
                }
            }
            if u == v {
                return Err(ReductionError::SelfLoop(u));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(UndirectedGraph {
            num_vertices,
            edges: set,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Unordered edges as (smaller, larger).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Neighbours of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (1..=self.num_vertices)
            .filter(|&u| u != v && self.has_edge(u, v))
            .collect()
    }

    pub fn has_triangle(&self) -> bool {
        let n = self.num_vertices;
        (1..=n).any(|a| {
            (a + 1..=n).any(|b| {
                self.has_edge(a, b) && (b + 1..=n).any(|c| self.has_edge(a, c) && self.has_edge(b, c))
            })
        })
    }
}

fn lit_thread(lit: Literal) -> String {
    if lit.positive {
        format!("Tx_{}", lit.var)
    } else {
        format!("Tnx_{}", lit.var)
    }
}

fn s(i: usize) -> String {
    format!("s_{i}")
}

fn v(i: usize) -> String {
    format!("v_{i}")
}

fn c(j: usize) -> String {
    format!("c_{}", j + 1)
}

fn d(j: usize) -> String {
    format!("d_{}", j + 1)
}

/// Writes of a literal thread: `c_j` when the literal is one of the first
/// two of clause `j`, `d_j` when it is the third (both if both).
fn clause_writes(phi: &CnfFormula, lit: Literal, chained: bool) -> Vec<Access> {
    let mut out = Vec::new();
    for j in phi.occurrences(lit) {
        let [l1, l2, l3] = phi.clauses[j];
        if !chained {
            out.push(Access::write(c(j), 1));
            continue;
        }
        if l1 == lit || l2 == lit {
            out.push(Access::write(c(j), 1));
        }
        if l3 == lit {
            out.push(Access::write(d(j), 1));
        }
    }
    out
}

fn cnf_graph(phi: &CnfFormula, chained: bool) -> Graph {
    let mut threads: Vec<(String, Vec<Access>)> = Vec::new();
    for i in 1..=phi.num_vars {
        for b in [1, 0] {
            threads.push((
                format!("T{i}_{b}"),
                vec![
                    Access::write(s(i), 1),
                    Access::write(s(i), 2),
                    Access::write(v(i), b),
                ],
            ));
        }
        for positive in [true, false] {
            let lit = Literal::new(i, positive);
            let mut events = vec![Access::read(v(i), positive as i64)];
            events.extend(clause_writes(phi, lit, chained));
            threads.push((lit_thread(lit), events));
        }
    }
    if chained {
        for j in 0..phi.clauses.len() {
            threads.push((
                format!("Tj_{}", j + 1),
                vec![Access::read(c(j), 1), Access::write(d(j), 1)],
            ));
        }
    }
    let mut tf: Vec<Access> = (0..phi.clauses.len())
        .map(|j| Access::read(if chained { d(j) } else { c(j) }, 1))
        .collect();
    for i in 1..=phi.num_vars {
        tf.push(Access::read(s(i), 2));
        tf.push(Access::read(s(i), 1));
    }
    threads.push(("Tf".into(), tf));
    Graph::new(threads).expect("generated names are valid")
}

/// The three-writer gadget: 4k+1 threads.
pub fn cnf_to_threewriter(phi: &CnfFormula) -> Graph {
    cnf_graph(phi, false)
}

/// The two-writer gadget: 4k+m+1 threads.
pub fn cnf_to_twowriter(phi: &CnfFormula) -> Graph {
    cnf_graph(phi, true)
}

/// The two-writer gadget for Relaxed: 2k+m+3 threads.
pub fn cnf_to_twowriter_relaxed(phi: &CnfFormula) -> Graph {
    let k = phi.num_vars;
    let mut threads: Vec<(String, Vec<Access>)> = Vec::new();
    threads.push((
        "Init_0".into(),
        (1..=k).map(|i| Access::write(v(i), 0)).collect(),
    ));
    let mut init1: Vec<Access> = (1..=k).map(|i| Access::write(v(i), 1)).collect();
    init1.push(Access::read("s", 1));
    init1.extend((1..=k).map(|i| Access::write(v(i), 0)));
    init1.extend((1..=k).map(|i| Access::write(v(i), 1)));
    threads.push(("Init_1".into(), init1));
    for i in 1..=k {
        for positive in [true, false] {
            let lit = Literal::new(i, positive);
            let val = positive as i64;
            let mut events = vec![Access::read(v(i), 1 - val), Access::read(v(i), val)];
            events.extend(clause_writes(phi, lit, true));
            threads.push((lit_thread(lit), events));
        }
    }
    for j in 0..phi.clauses.len() {
        threads.push((
            format!("Tj_{}", j + 1),
            vec![Access::read(c(j), 1), Access::write(d(j), 1)],
        ));
    }
    let mut tf: Vec<Access> = (0..phi.clauses.len())
        .map(|j| Access::read(d(j), 1))
        .collect();
    tf.push(Access::write("s", 1));
    threads.push(("Tf".into(), tf));
    Graph::new(threads).expect("generated names are valid")
}

/// The triangle gadget with its unique reads-from relation.
pub fn graph_to_onewriter(gr: &UndirectedGraph) -> (Graph, ReadsFrom) {
    let n = gr.num_vertices();
    let a = |v: usize| format!("a_{v}");
    let pair = |p: &str, u: usize, w: usize| format!("{p}_{u}_{w}");
    let mut threads: Vec<(String, Vec<Access>)> = Vec::new();
    for v in 1..=n {
        let mut ev = vec![Access::write(a(v), 0), Access::write(a(v), 1)];
        ev.extend(gr.neighbors(v).into_iter().map(|al| Access::write(pair("a", v, al), 0)));
        threads.push((format!("ta_{v}"), ev));
    }
    for (prev, cur) in [("a", "b"), ("b", "c")] {
        for v in 1..=n {
            let nb = gr.neighbors(v);
            let mut ev: Vec<Access> = nb.iter().map(|&al| Access::read(pair(prev, al, v), 0)).collect();
            ev.push(Access::write(format!("{cur}_{v}"), 0));
            ev.extend(nb.iter().map(|&al| Access::write(pair(cur, v, al), 0)));
            threads.push((format!("t{cur}_{v}"), ev));
        }
    }
    for v in 1..=n {
        let mut ev: Vec<Access> = gr
            .neighbors(v)
            .into_iter()
            .map(|al| Access::read(pair("c", al, v), 0))
            .collect();
        ev.push(Access::read(a(v), 0));
        threads.push((format!("td_{v}"), ev));
    }
    let g = Graph::new(threads).expect("generated names are valid");
    let mut rf = ReadsFrom::new();
    for r in g.reads() {
        let w = g
            .matching_writes(r)
            .next()
            .expect("every gadget read has a write");
        rf.insert(g.event(r).id.clone(), g.event(w).id.clone());
    }
    (g, rf)
}

/// Least satisfying assignment, counting with `x1` as the lowest bit.
/// `result[i]` is the value of variable `i + 1`.
pub fn brute_sat(phi: &CnfFormula) -> Result<Option<Vec<bool>>, ReductionError> {
    let k = phi.num_vars;
    if k > 24 {
        return Err(ReductionError::TooManyVariables(k));
    }
    for mask in 0u32..(1u32 << k) {
        let assignment: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
        if phi.satisfied_by(&assignment) {
            return Ok(Some(assignment));
        }
    }
    Ok(None)
}

/// Event id helper for fixtures built from the gadgets.
pub fn event(thread: &str, index: usize) -> EventId {
    EventId::new(thread, index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i64) -> Literal {
        Literal::from_dimacs(v)
    }

    fn formula3() -> CnfFormula {
        CnfFormula::new(
            3,
            vec![[lit(1), lit(2), lit(3)], [lit(1), lit(-2), lit(-3)]],
        )
        .unwrap()
    }

    #[test]
    fn threewriter_shape() {
        let g = cnf_to_threewriter(&formula3());
        assert_eq!(g.num_threads(), 13);
        assert_eq!(g.len(), 38);
        let tf = g.thread_index("Tf").unwrap();
        assert_eq!(g.thread_len(tf), 8);
        assert_eq!(g.max_writers(), 3);
    }

    #[test]
    fn repeated_literal_writes_once() {
        let phi = CnfFormula::new(1, vec![[lit(1), lit(1), lit(1)]]).unwrap();
        let g = cnf_to_threewriter(&phi);
        let t = g.thread_index("Tx_1").unwrap();
        assert_eq!(
            g.thread_events(t).iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            ["r(v_1,1)@Tx_1:0", "w(c_1,1)@Tx_1:1"]
        );
    }

    #[test]
    fn twowriter_shape() {
        let g = cnf_to_twowriter(&formula3());
        assert_eq!(g.num_threads(), 4 * 3 + 2 + 1);
        assert_eq!(g.max_writers(), 2);
        let prof = g.writer_profile();
        let names = |v: &str| prof[v].iter().cloned().collect::<Vec<_>>();
        assert_eq!(names("c_1"), ["Tx_1", "Tx_2"]);
        assert_eq!(names("d_1"), ["Tj_1", "Tx_3"]);
        let empty = cnf_to_twowriter(&CnfFormula::new(2, vec![]).unwrap());
        let tf = empty.thread_index("Tf").unwrap();
        assert_eq!(empty.thread_len(tf), 4);
    }

    #[test]
    fn relaxed_shape() {
        let phi = CnfFormula::new(1, vec![[lit(1), lit(1), lit(1)]]).unwrap();
        let g = cnf_to_twowriter_relaxed(&phi);
        assert_eq!(g.num_threads(), 2 + 1 + 3);
        let t = g.thread_index("Init_1").unwrap();
        assert_eq!(
            g.thread_events(t).iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            ["w(v_1,1)@Init_1:0", "r(s,1)@Init_1:1", "w(v_1,0)@Init_1:2", "w(v_1,1)@Init_1:3"]
        );
        assert!(g.max_writers() <= 2);
    }

    #[test]
    fn triangle_gadget_sizes() {
        let k3 = UndirectedGraph::new(3, [(1, 2), (2, 3), (1, 3)]).unwrap();
        let (g, rf) = graph_to_onewriter(&k3);
        assert_eq!(g.num_threads(), 12);
        assert_eq!(g.len(), 51);
        assert!(g.is_one_writer());
        assert_eq!(rf.len(), g.reads().len());
        assert!(k3.has_triangle());
        let c4 = UndirectedGraph::new(4, [(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
        assert!(!c4.has_triangle());
        assert_eq!(UndirectedGraph::new(2, [(1, 1)]), Err(ReductionError::SelfLoop(1)));
    }

    #[test]
    fn brute_sat_examples() {
        assert_eq!(brute_sat(&formula3()).unwrap(), Some(vec![true, false, false]));
        let unsat = CnfFormula::new(1, vec![[lit(1), lit(1), lit(1)], [lit(-1), lit(-1), lit(-1)]])
            .unwrap();
        assert_eq!(brute_sat(&unsat).unwrap(), None);
        assert_eq!(
            brute_sat(&CnfFormula::new(2, vec![]).unwrap()).unwrap(),
            Some(vec![false, false])
        );
        assert!(brute_sat(&CnfFormula::new(25, vec![]).unwrap()).is_err());
    }
}
