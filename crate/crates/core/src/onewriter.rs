//! Polynomial consistency checking for graphs where every location has a
//! single writer thread.
//!
//! The solver starts from the least reads-from relation and repeatedly moves
//! one read to a po-later write until no coherence violation is left. Every
//! move is forced, so the final relation is below every consistent one.

use thiserror::Error;

use crate::axioms::{check_dense, relaxed_read_violation, Exec, Past};
use crate::model::{EventId, Graph, MemoryModel, ModelError, ModificationOrder, ReadsFrom, NONE};
use crate::verdict::{Axiom, EdgeLabel, Refutation, Step, Verdict, Violation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("location `{0}` is written by more than one thread")]
    NotOneWriter(String),
    #[error("read {0} has no matching write")]
    NoMatchingWrite(EventId),
    #[error("read {0} has no later matching write")]
    NoLaterWrite(EventId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    WeakRead,
    RelaxedRead,
}

/// A violating pattern `r rf⁻¹ w po⁺ w' (rf r')? ... r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub read: EventId,
    pub write: EventId,
    pub later: EventId,
    /// Read of `later` that is po-before `read` (relaxed mode only).
    pub via: Option<EventId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    pub violation: Triple,
    pub replacement: EventId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverTrace {
    pub iterations: Vec<Iteration>,
    /// The last reads-from relation built, against which certificates replay.
    pub rf: Option<ReadsFrom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Re-check ob-acyclicity of CM witnesses.
    pub verify_cm: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            verify_cm: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct DenseTriple {
    read: usize,
    write: usize,
    later: usize,
    via: Option<usize>,
}

struct Solver<'g> {
    g: &'g Graph,
    writer: Vec<usize>,
    // write nodes per location, in po order
    writes: Vec<Vec<usize>>,
    // whether a read in the writer thread must read a po-earlier write
    po_bound: bool,
}

impl<'g> Solver<'g> {
    fn new(g: &'g Graph, po_bound: bool) -> Result<Solver<'g>, SolveError> {
        let mut writer = vec![NONE; g.locations().len()];
        let mut writes = vec![Vec::new(); g.locations().len()];
        for x in 0..g.locations().len() {
            for &w in g.writes_to(x) {
                let t = g.thread_of(w);
                if writer[x] != NONE && writer[x] != t {
                    return Err(SolveError::NotOneWriter(g.locations()[x].clone()));
                }
                writer[x] = t;
                writes[x].push(w);
            }
        }
        Ok(Solver {
            g,
            writer,
            writes,
            po_bound,
        })
    }

    fn allowed(&self, r: usize, w: usize) -> bool {
        let g = self.g;
        g.event(w).val == g.event(r).val
            && !(self.po_bound && g.thread_of(w) == g.thread_of(r) && w > r)
    }

    fn initialize(&self) -> Result<Vec<usize>, SolveError> {
        let g = self.g;
        let reads = g.reads();
        // reads with no candidate anywhere are reported first
        if let Some(&r) = reads.iter().find(|&&r| g.matching_writes(r).next().is_none()) {
            return Err(SolveError::NoMatchingWrite(g.event(r).id.clone()));
        }
        let mut rf = vec![NONE; g.len()];
        for r in reads {
            let w = self.writes[g.loc(r)]
                .iter()
                .copied()
                .find(|&w| self.allowed(r, w))
                .ok_or_else(|| SolveError::NoMatchingWrite(g.event(r).id.clone()))?;
            rf[r] = w;
        }
        Ok(rf)
    }

    fn next_weak(&self, ex: &Exec<'_>) -> Option<DenseTriple> {
        let g = self.g;
        for &t in g.scan_threads() {
            let mut past = Past::new(g);
            for r in g.thread_nodes(t).filter(|&r| g.is_read(r)) {
                let w = ex.rf()[r];
                past.extend(ex, t, g.index_of(r));
                past.include(ex, w);
                let x = g.loc(r);
                let tx = self.writer[x];
                let bound = g.node_at(tx, 0) + past.reach[tx];
                let list = &self.writes[x];
                let p = list.partition_point(|&n| n < bound);
                if p > 0 && list[p - 1] > w {
                    return Some(DenseTriple {
                        read: r,
                        write: w,
                        later: list[p - 1],
                        via: None,
                    });
                }
            }
        }
        None
    }

    fn next_relaxed(&self, ex: &Exec<'_>) -> Option<DenseTriple> {
        // in a 1-writer graph po order on each location's writes is the only mo
        let pos: Vec<usize> = (0..self.g.len()).collect();
        relaxed_read_violation(self.g, ex.rf(), &pos, None).map(|(r, w, later, via)| {
            DenseTriple {
                read: r,
                write: w,
                later,
                via,
            }
        })
    }

    fn update(&self, v: &DenseTriple) -> Option<usize> {
        self.writes[self.g.loc(v.read)]
            .iter()
            .copied()
            .find(|&w| w >= v.later && self.allowed(v.read, w))
    }

    fn triple(&self, v: &DenseTriple) -> Triple {
        let id = |n: usize| self.g.event(n).id.clone();
        Triple {
            read: id(v.read),
            write: id(v.write),
            later: id(v.later),
            via: v.via.map(id),
        }
    }
}

fn mode_of(m: MemoryModel) -> Mode {
    if m.is_relaxed() {
        Mode::RelaxedRead
    } else {
        Mode::WeakRead
    }
}

/// Per location, the writes in po order of their single writer thread.
pub fn derive_mo(g: &Graph) -> Result<ModificationOrder, SolveError> {
    let s = Solver::new(g, true)?;
    let mut mo = ModificationOrder::new();
    for (x, writes) in s.writes.iter().enumerate() {
        if !writes.is_empty() {
            mo.set(
                g.locations()[x].clone(),
                writes.iter().map(|&w| g.event(w).id.clone()).collect(),
            );
        }
    }
    Ok(mo)
}

/// The least reads-from relation: each read takes the po-first matching
/// write of its writer thread (po-before the read when in the same thread).
pub fn initialize_rf(g: &Graph) -> Result<ReadsFrom, SolveError> {
    initialize_rf_for(g, MemoryModel::Wra)
}

/// As [`initialize_rf`]; under plain Relaxed a read may take a po-later write
/// of its own thread.
pub fn initialize_rf_for(g: &Graph, m: MemoryModel) -> Result<ReadsFrom, SolveError> {
    let s = Solver::new(g, m != MemoryModel::Relaxed)?;
    Ok(ReadsFrom::from_dense(g, &s.initialize()?))
}

/// First violation in scan order, with the po-latest offending write.
pub fn next_violation(g: &Graph, rf: &ReadsFrom, mode: Mode) -> Result<Option<Triple>, SolveError> {
    let s = Solver::new(g, true)?;
    let ex = Exec::new(g, rf.to_dense(g)?);
    let v = match mode {
        Mode::WeakRead => s.next_weak(&ex),
        Mode::RelaxedRead => s.next_relaxed(&ex),
    };
    Ok(v.map(|v| s.triple(&v)))
}

/// Moves the violating read to the po-first matching write at or after the
/// offending write.
pub fn update_rf(g: &Graph, rf: &ReadsFrom, v: &Triple) -> Result<ReadsFrom, SolveError> {
    update_rf_for(g, rf, v, MemoryModel::Wra)
}

pub fn update_rf_for(
    g: &Graph,
    rf: &ReadsFrom,
    v: &Triple,
    m: MemoryModel,
) -> Result<ReadsFrom, SolveError> {
    let s = Solver::new(g, m != MemoryModel::Relaxed)?;
    let mut dense = rf.to_dense(g)?;
    let dv = DenseTriple {
        read: g.node_of(&v.read)?,
        write: g.node_of(&v.write)?,
        later: g.node_of(&v.later)?,
        via: v.via.as_ref().map(|r| g.node_of(r)).transpose()?,
    };
    let w = s
        .update(&dv)
        .ok_or_else(|| SolveError::NoLaterWrite(v.read.clone()))?;
    dense[dv.read] = w;
    Ok(ReadsFrom::from_dense(g, &dense))
}

pub fn solve(g: &Graph, m: MemoryModel) -> Result<(Verdict, SolverTrace), SolveError> {
    solve_with(g, m, SolveOptions::default())
}

pub fn solve_with(
    g: &Graph,
    m: MemoryModel,
    opts: SolveOptions,
) -> Result<(Verdict, SolverTrace), SolveError> {
    let s = Solver::new(g, m != MemoryModel::Relaxed)?;
    let mode = mode_of(m);
    let mut trace = SolverTrace::default();
    let rf0 = match s.initialize() {
        Ok(rf) => rf,
        Err(SolveError::NoMatchingWrite(r)) => {
            return Ok((Verdict::Inconsistent(Refutation::NoMatchingWrite(r)), trace));
        }
        Err(e) => return Err(e),
    };
    let mut ex = Exec::new(g, rf0);
    loop {
        let next = match mode {
            Mode::WeakRead => s.next_weak(&ex),
            Mode::RelaxedRead => s.next_relaxed(&ex),
        };
        let Some(v) = next else { break };
        let Some(w) = s.update(&v) else {
            trace.rf = Some(ReadsFrom::from_dense(g, ex.rf()));
            let step = |n: usize, label| Step {
                event: g.event(n).id.clone(),
                label,
            };
            let cycle = match (mode, v.via) {
                (Mode::WeakRead, _) => vec![
                    step(v.read, EdgeLabel::RfInv),
                    step(v.write, EdgeLabel::HbStep),
                    step(v.later, EdgeLabel::HbStep),
                ],
                (Mode::RelaxedRead, Some(r2)) => vec![
                    step(v.read, EdgeLabel::RfInv),
                    step(v.write, EdgeLabel::Mo),
                    step(v.later, EdgeLabel::Rf),
                    step(r2, EdgeLabel::Po),
                ],
                (Mode::RelaxedRead, None) => vec![
                    step(v.read, EdgeLabel::RfInv),
                    step(v.write, EdgeLabel::Mo),
                    step(v.later, EdgeLabel::Po),
                ],
            };
            let axiom = match mode {
                Mode::WeakRead => Axiom::WeakReadCoherence,
                Mode::RelaxedRead => Axiom::RelaxedReadCoherence,
            };
            let violation = Violation {
                axiom,
                cycle,
                anchor: None,
            };
            return Ok((
                Verdict::Inconsistent(Refutation::Violation(violation)),
                trace,
            ));
        };
        trace.iterations.push(Iteration {
            violation: s.triple(&v),
            replacement: g.event(w).id.clone(),
        });
        ex.set_rf(v.read, w);
        debug_assert!(trace.iterations.len() <= g.len());
    }
    let rf = ReadsFrom::from_dense(g, ex.rf());
    trace.rf = Some(rf.clone());
    if m != MemoryModel::Relaxed {
        if let Some(v) = check_dense(&ex, None, Axiom::PorfAcyclicity, None) {
            return Ok((Verdict::Inconsistent(Refutation::Violation(v)), trace));
        }
    }
    if m == MemoryModel::Cm && opts.verify_cm {
        if let Some(v) = check_dense(&ex, None, Axiom::ObAcyclicity, None) {
            return Ok((Verdict::Inconsistent(Refutation::Violation(v)), trace));
        }
    }
    Ok((
        Verdict::Consistent {
            rf,
            mo: Some(derive_mo(g)?),
        },
        trace,
    ))
}
