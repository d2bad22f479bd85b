//! Derived relations (hb, ob) and the consistency axioms.
//!
//! hb-reachability is computed per query by a search over po and rf. The set
//! of events reaching a node is closed downwards within every thread, so it
//! is stored as a prefix length per thread; the set reachable from a node is
//! stored as a suffix start per thread.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::model::{
    DenseMo, EventId, Graph, MemoryModel, ModelError, ModificationOrder, ReadsFrom, NONE,
};
use crate::verdict::{Axiom, EdgeLabel, Refutation, Step, Verdict, Violation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("a modification order is required for {0}")]
    MissingMo(String),
    #[error("thread `{0}` has no events")]
    EmptyThread(String),
    #[error("unknown thread `{0}`")]
    UnknownThread(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// DFS frame: node, its successors, next successor, label taken to reach it.
type Frame = (usize, Vec<(usize, EdgeLabel)>, usize, EdgeLabel);

/// A graph together with a dense reads-from relation.
#[derive(Debug, Clone)]
pub struct Exec<'g> {
    pub g: &'g Graph,
    rf: Vec<usize>,
    readers: Vec<Vec<usize>>,
}

/// Incrementally grown hb-past: `reach[t]` events of thread `t` are in it.
#[derive(Debug, Clone)]
pub struct Past {
    pub reach: Vec<usize>,
    stack: Vec<(usize, usize)>,
}

impl Past {
    pub fn new(g: &Graph) -> Past {
        Past {
            reach: vec![0; g.num_threads()],
            stack: Vec::new(),
        }
    }

    pub fn contains(&self, g: &Graph, n: usize) -> bool {
        g.index_of(n) < self.reach[g.thread_of(n)]
    }

    /// Adds the first `count` events of thread `t` and everything before them.
    pub fn extend(&mut self, ex: &Exec<'_>, t: usize, count: usize) {
        self.stack.push((t, count));
        while let Some((t, c)) = self.stack.pop() {
            let old = self.reach[t];
            if c <= old {
                continue;
            }
            self.reach[t] = c;
            for k in old..c {
                let m = ex.g.node_at(t, k);
                let w = ex.rf[m];
                if w != NONE {
                    self.stack.push((ex.g.thread_of(w), ex.g.index_of(w) + 1));
                }
            }
        }
    }

    /// Adds `n` itself and its hb-past.
    pub fn include(&mut self, ex: &Exec<'_>, n: usize) {
        self.extend(ex, ex.g.thread_of(n), ex.g.index_of(n) + 1);
    }
}

impl<'g> Exec<'g> {
    pub fn new(g: &'g Graph, rf: Vec<usize>) -> Exec<'g> {
        let mut readers = vec![Vec::new(); g.len()];
        for n in g.scan_order() {
            if rf[n] != NONE {
                readers[rf[n]].push(n);
            }
        }
        Exec { g, rf, readers }
    }

    pub fn rf(&self) -> &[usize] {
        &self.rf
    }

    pub fn into_rf(self) -> Vec<usize> {
        self.rf
    }

    pub fn readers(&self, w: usize) -> &[usize] {
        &self.readers[w]
    }

    /// Remaps read `r` to write `w`.
    pub fn set_rf(&mut self, r: usize, w: usize) {
        let old = self.rf[r];
        if old != NONE {
            self.readers[old].retain(|&x| x != r);
        }
        self.rf[r] = w;
        if w != NONE {
            let g = self.g;
            let list = &mut self.readers[w];
            let key = (g.thread_ids()[g.thread_of(r)].as_str(), g.index_of(r));
            let at = list
                .binary_search_by(|&x| {
                    (g.thread_ids()[g.thread_of(x)].as_str(), g.index_of(x)).cmp(&key)
                })
                .unwrap_or_else(|i| i);
            list.insert(at, r);
        }
    }

    /// Strict hb-past of `n`: every `e` with `e hb n`.
    pub fn past(&self, n: usize) -> Past {
        let mut p = Past::new(self.g);
        p.extend(self, self.g.thread_of(n), self.g.index_of(n));
        if self.rf[n] != NONE {
            p.include(self, self.rf[n]);
        }
        p
    }

    /// Strict hb-future of `n` as the first reachable index per thread.
    pub fn future(&self, n: usize) -> Vec<usize> {
        let g = self.g;
        let mut first: Vec<usize> = (0..g.num_threads()).map(|t| g.thread_len(t)).collect();
        let mut stack = vec![(g.thread_of(n), g.index_of(n) + 1)];
        for &r in &self.readers[n] {
            stack.push((g.thread_of(r), g.index_of(r)));
        }
        while let Some((t, s)) = stack.pop() {
            let old = first[t];
            if s >= old {
                continue;
            }
            first[t] = s;
            for k in s..old {
                for &r in &self.readers[g.node_at(t, k)] {
                    stack.push((g.thread_of(r), g.index_of(r)));
                }
            }
        }
        first
    }

    pub fn in_future(&self, first: &[usize], n: usize) -> bool {
        self.g.index_of(n) >= first[self.g.thread_of(n)]
    }

    /// (a, b) ∈ (po ∪ rf)⁺
    pub fn hb(&self, a: usize, b: usize) -> bool {
        let f = self.future(a);
        self.in_future(&f, b)
    }

    /// A cycle of po ∪ rf (∪ mo when given), consecutive po steps merged.
    pub fn find_cycle(&self, mo: Option<&DenseMo>) -> Option<Vec<(usize, EdgeLabel)>> {
        let g = self.g;
        let succ = |n: usize| -> Vec<(usize, EdgeLabel)> {
            let mut out = Vec::new();
            if g.index_of(n) + 1 < g.thread_len(g.thread_of(n)) {
                out.push((n + 1, EdgeLabel::Po));
            }
            out.extend(self.readers[n].iter().map(|&r| (r, EdgeLabel::Rf)));
            if let Some(mo) = mo {
                if g.is_write(n) && mo.pos[n] != NONE {
                    let order = &mo.order[g.loc(n)];
                    if let Some(&next) = order.get(mo.pos[n] + 1) {
                        out.push((next, EdgeLabel::Mo));
                    }
                }
            }
            out
        };
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; g.len()];
        let mut stack_pos = vec![NONE; g.len()];
        for root in g.scan_order() {
            if state[root] != 0 {
                continue;
            }
            let mut frames: Vec<Frame> =
                vec![(root, succ(root), 0, EdgeLabel::Po)];
            state[root] = 1;
            stack_pos[root] = 0;
            while let Some(top) = frames.last_mut() {
                if top.2 == top.1.len() {
                    state[top.0] = 2;
                    frames.pop();
                    continue;
                }
                let (m, label) = top.1[top.2];
                top.2 += 1;
                top.3 = label;
                match state[m] {
                    0 => {
                        state[m] = 1;
                        stack_pos[m] = frames.len();
                        frames.push((m, succ(m), 0, EdgeLabel::Po));
                    }
                    1 => {
                        let cycle: Vec<(usize, EdgeLabel)> = frames[stack_pos[m]..]
                            .iter()
                            .map(|f| (f.0, f.3))
                            .collect();
                        return Some(compress_po(cycle));
                    }
                    _ => {}
                }
            }
        }
        None
    }
}

/// Drops steps entered and left by po, which keeps the cycle valid.
fn compress_po(cycle: Vec<(usize, EdgeLabel)>) -> Vec<(usize, EdgeLabel)> {
    let len = cycle.len();
    let keep: Vec<bool> = (0..len)
        .map(|i| {
            let prev = cycle[(i + len - 1) % len].1;
            !(prev == EdgeLabel::Po && cycle[i].1 == EdgeLabel::Po)
        })
        .collect();
    if keep.iter().all(|k| !k) {
        return cycle;
    }
    cycle
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

fn to_steps(g: &Graph, cycle: &[(usize, EdgeLabel)]) -> Vec<Step> {
    cycle
        .iter()
        .map(|&(n, label)| Step {
            event: g.event(n).id.clone(),
            label,
        })
        .collect()
}

fn violation(g: &Graph, axiom: Axiom, cycle: &[(usize, EdgeLabel)]) -> Violation {
    Violation {
        axiom,
        cycle: to_steps(g, cycle),
        anchor: None,
    }
}

/// Checks one axiom on dense relations. `only_loc` restricts the
/// per-location axioms to a single location; it is ignored by the others.
pub fn check_dense(
    ex: &Exec<'_>,
    mo: Option<&DenseMo>,
    ax: Axiom,
    only_loc: Option<usize>,
) -> Option<Violation> {
    let g = ex.g;
    let wanted = |n: usize| only_loc.is_none_or(|x| g.loc(n) == x);
    match ax {
        Axiom::PorfAcyclicity => ex
            .find_cycle(None)
            .map(|c| violation(g, Axiom::PorfAcyclicity, &c)),
        Axiom::StrongWriteCoherence => ex
            .find_cycle(mo)
            .map(|c| violation(g, Axiom::StrongWriteCoherence, &c)),
        Axiom::WriteCoherence => {
            let mo = mo?;
            for w2 in g.scan_order().filter(|&n| g.is_write(n) && wanted(n)) {
                let order = &mo.order[g.loc(w2)];
                let earlier = &order[..mo.pos[w2]];
                if earlier.is_empty() {
                    continue;
                }
                let fut = ex.future(w2);
                if let Some(&w1) = earlier.iter().find(|&&w1| ex.in_future(&fut, w1)) {
                    return Some(violation(
                        g,
                        Axiom::WriteCoherence,
                        &[(w1, EdgeLabel::Mo), (w2, EdgeLabel::HbStep)],
                    ));
                }
            }
            None
        }
        Axiom::ReadCoherence => {
            let mo = mo?;
            scan_reads(ex, only_loc, |r, past| {
                let w1 = ex.rf[r];
                let order = &mo.order[g.loc(r)];
                order[mo.pos[w1] + 1..]
                    .iter()
                    .find(|&&w2| past.contains(g, w2))
                    .map(|&w2| {
                        violation(
                            g,
                            Axiom::ReadCoherence,
                            &[
                                (r, EdgeLabel::RfInv),
                                (w1, EdgeLabel::Mo),
                                (w2, EdgeLabel::HbStep),
                            ],
                        )
                    })
            })
        }
        Axiom::WeakReadCoherence => scan_reads(ex, only_loc, |r, past| {
            let w = ex.rf[r];
            let mut fut = None;
            let mut found = None;
            for &w2 in g.writes_to(g.loc(r)) {
                if w2 == w || !past.contains(g, w2) {
                    continue;
                }
                let f = fut.get_or_insert_with(|| ex.future(w));
                if ex.in_future(f, w2) {
                    found = Some(w2);
                }
            }
            found.map(|w2| {
                violation(
                    g,
                    Axiom::WeakReadCoherence,
                    &[
                        (r, EdgeLabel::RfInv),
                        (w, EdgeLabel::HbStep),
                        (w2, EdgeLabel::HbStep),
                    ],
                )
            })
        }),
        Axiom::RelaxedWriteCoherence => {
            let mo = mo?;
            for &t in g.scan_threads() {
                // per location: po-earlier write with the largest mo position
                let mut best: Vec<Option<usize>> = vec![None; g.locations().len()];
                for w1 in g.thread_nodes(t).filter(|&n| g.is_write(n) && wanted(n)) {
                    let x = g.loc(w1);
                    if let Some(w2) = best[x] {
                        if mo.pos[w2] > mo.pos[w1] {
                            return Some(violation(
                                g,
                                Axiom::RelaxedWriteCoherence,
                                &[(w1, EdgeLabel::Mo), (w2, EdgeLabel::Po)],
                            ));
                        }
                    }
                    if best[x].is_none_or(|b| mo.pos[b] < mo.pos[w1]) {
                        best[x] = Some(w1);
                    }
                }
            }
            None
        }
        Axiom::RelaxedReadCoherence => {
            let mo = mo?;
            relaxed_read_violation(g, ex.rf(), &mo.pos, only_loc).map(|(r, w1, w2, via)| {
                let cycle = match via {
                    Some(r2) => vec![
                        (r, EdgeLabel::RfInv),
                        (w1, EdgeLabel::Mo),
                        (w2, EdgeLabel::Rf),
                        (r2, EdgeLabel::Po),
                    ],
                    None => vec![
                        (r, EdgeLabel::RfInv),
                        (w1, EdgeLabel::Mo),
                        (w2, EdgeLabel::Po),
                    ],
                };
                violation(g, Axiom::RelaxedReadCoherence, &cycle)
            })
        }
        Axiom::ObAcyclicity => {
            for &t in g.scan_threads() {
                let Some(anchor) = g.thread_nodes(t).last() else {
                    continue;
                };
                let ob = ObDense::compute(ex, anchor);
                if let Some(cycle) = ob.reflexive_cycle() {
                    let mut v = violation(g, Axiom::ObAcyclicity, &cycle);
                    v.anchor = Some(g.thread_ids()[t].clone());
                    return Some(v);
                }
            }
            None
        }
    }
}

/// Visits reads in scan order with their hb-past; stops at the first hit.
fn scan_reads<F>(ex: &Exec<'_>, only_loc: Option<usize>, mut f: F) -> Option<Violation>
where
    F: FnMut(usize, &Past) -> Option<Violation>,
{
    let g = ex.g;
    for &t in g.scan_threads() {
        let mut past = Past::new(g);
        for r in g.thread_nodes(t) {
            if !g.is_read(r) || only_loc.is_some_and(|x| g.loc(r) != x) {
                continue;
            }
            past.extend(ex, t, g.index_of(r));
            past.include(ex, ex.rf[r]);
            if let Some(v) = f(r, &past) {
                return Some(v);
            }
        }
    }
    None
}

/// First read `r` (scan order) with `rf(r) = w1`, `w1 mo w2` and either
/// `w2 po r` or `w2 rf r' po r`. Positions are ranks in any order per
/// location that stands in for mo. Returns `(r, w1, w2, r')`.
pub fn relaxed_read_violation(
    g: &Graph,
    rf: &[usize],
    pos: &[usize],
    only_loc: Option<usize>,
) -> Option<(usize, usize, usize, Option<usize>)> {
    for &t in g.scan_threads() {
        // per location: (write with largest position so far, read it came through)
        let mut best: Vec<Option<(usize, Option<usize>)>> = vec![None; g.locations().len()];
        for e in g.thread_nodes(t) {
            let x = g.loc(e);
            if only_loc.is_some_and(|l| l != x) {
                continue;
            }
            let (w, via) = if g.is_read(e) {
                let w1 = rf[e];
                if let Some((w2, via)) = best[x] {
                    if pos[w2] > pos[w1] {
                        return Some((e, w1, w2, via));
                    }
                }
                (w1, Some(e))
            } else {
                (e, None)
            };
            if best[x].is_none_or(|(b, _)| pos[b] < pos[w]) {
                best[x] = Some((w, via));
            }
        }
    }
    None
}

/// ob of one anchor event as a bit matrix over the anchor's hb-past.
struct ObDense<'a, 'g> {
    ex: &'a Exec<'g>,
    nodes: Vec<usize>,
    local: Vec<usize>,
    hb: Vec<Vec<u64>>,
    ob: Vec<Vec<u64>>,
    // pairs added by the triplet rule (local indices)
    derived: BTreeSet<(usize, usize)>,
}

fn bit(row: &[u64], j: usize) -> bool {
    row[j / 64] >> (j % 64) & 1 == 1
}

fn set_bit(row: &mut [u64], j: usize) {
    row[j / 64] |= 1 << (j % 64);
}

impl<'a, 'g> ObDense<'a, 'g> {
    fn compute(ex: &'a Exec<'g>, anchor: usize) -> ObDense<'a, 'g> {
        let g = ex.g;
        let mut past = ex.past(anchor);
        past.include(ex, anchor);
        let nodes: Vec<usize> = (0..g.len()).filter(|&n| past.contains(g, n)).collect();
        let mut local = vec![NONE; g.len()];
        for (i, &n) in nodes.iter().enumerate() {
            local[n] = i;
        }
        let k = nodes.len();
        let words = k.div_ceil(64).max(1);
        let mut hb = vec![vec![0u64; words]; k];
        for (i, &a) in nodes.iter().enumerate() {
            let fut = ex.future(a);
            for (j, &b) in nodes.iter().enumerate() {
                if ex.in_future(&fut, b) {
                    set_bit(&mut hb[i], j);
                }
            }
        }
        // conflicting triplets (w', r, w) with r po? anchor
        let t = g.thread_of(anchor);
        let mut triplets = Vec::new();
        for r in g.thread_nodes(t).filter(|&r| r <= anchor && g.is_read(r)) {
            let w = ex.rf[r];
            for &w2 in g.writes_to(g.loc(r)) {
                if w2 != w && local[w2] != NONE {
                    triplets.push((local[w2], local[r], local[w]));
                }
            }
        }
        let mut ob = hb.clone();
        let mut derived = BTreeSet::new();
        loop {
            let mut changed = false;
            for &(w2, r, w) in &triplets {
                if bit(&ob[w2], r) && !bit(&ob[w2], w) {
                    set_bit(&mut ob[w2], w);
                    derived.insert((w2, w));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            for m in 0..k {
                for i in 0..k {
                    if bit(&ob[i], m) {
                        let row = ob[m].clone();
                        for (a, b) in ob[i].iter_mut().zip(row) {
                            *a |= b;
                        }
                    }
                }
            }
        }
        ObDense {
            ex,
            nodes,
            local,
            hb,
            ob,
            derived,
        }
    }

    fn contains(&self, a: usize, b: usize) -> bool {
        let (i, j) = (self.local[a], self.local[b]);
        i != NONE && j != NONE && bit(&self.ob[i], j)
    }

    fn pairs(&self) -> BTreeSet<(EventId, EventId)> {
        let g = self.ex.g;
        let mut out = BTreeSet::new();
        for (i, &a) in self.nodes.iter().enumerate() {
            for (j, &b) in self.nodes.iter().enumerate() {
                if bit(&self.ob[i], j) {
                    out.insert((g.event(a).id.clone(), g.event(b).id.clone()));
                }
            }
        }
        out
    }

    /// Shortest cycle of generating edges through the first reflexive event.
    fn reflexive_cycle(&self) -> Option<Vec<(usize, EdgeLabel)>> {
        let k = self.nodes.len();
        let start = (0..k).find(|&i| bit(&self.ob[i], i))?;
        let succ = |i: usize| -> Vec<(usize, EdgeLabel)> {
            let mut out: Vec<(usize, EdgeLabel)> = (0..k)
                .filter(|&j| bit(&self.hb[i], j))
                .map(|j| (j, EdgeLabel::HbStep))
                .collect();
            out.extend(
                self.derived
                    .range((i, 0)..(i + 1, 0))
                    .map(|&(_, j)| (j, EdgeLabel::ObStep)),
            );
            out
        };
        let mut prev: Vec<Option<(usize, EdgeLabel)>> = vec![None; k];
        let mut queue = VecDeque::from([start]);
        let mut seen = vec![false; k];
        while let Some(i) = queue.pop_front() {
            for (j, label) in succ(i) {
                if j == start {
                    let mut path = vec![(i, label)];
                    let mut cur = i;
                    while cur != start {
                        let (p, l) = prev[cur].expect("bfs parent");
                        path.push((p, l));
                        cur = p;
                    }
                    path.reverse();
                    return Some(path.into_iter().map(|(i, l)| (self.nodes[i], l)).collect());
                }
                if !seen[j] {
                    seen[j] = true;
                    prev[j] = Some((i, label));
                    queue.push_back(j);
                }
            }
        }
        unreachable!("a reflexive ob pair lies on a cycle of its generators")
    }
}

/// The ob relation of an anchor event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObRelation {
    pub anchor: EventId,
    pub pairs: BTreeSet<(EventId, EventId)>,
}

impl ObRelation {
    pub fn contains(&self, a: &EventId, b: &EventId) -> bool {
        self.pairs.contains(&(a.clone(), b.clone()))
    }

    pub fn is_reflexive(&self) -> bool {
        self.pairs.iter().any(|(a, b)| a == b)
    }

    pub fn is_subset(&self, other: &ObRelation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }
}

/// Anchor of an ob computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObAnchor {
    Event(EventId),
    /// The last event of the thread.
    Thread(String),
}

pub fn compute_ob(g: &Graph, rf: &ReadsFrom, anchor: &ObAnchor) -> Result<ObRelation, CheckError> {
    let ex = Exec::new(g, rf.to_dense(g)?);
    let node = match anchor {
        ObAnchor::Event(id) => g.node_of(id)?,
        ObAnchor::Thread(t) => {
            let ti = g
                .thread_index(t)
                .ok_or_else(|| CheckError::UnknownThread(t.clone()))?;
            g.thread_nodes(ti)
                .last()
                .ok_or_else(|| CheckError::EmptyThread(t.clone()))?
        }
    };
    let ob = ObDense::compute(&ex, node);
    Ok(ObRelation {
        anchor: g.event(node).id.clone(),
        pairs: ob.pairs(),
    })
}

/// (from, to) ∈ (po ∪ rf)⁺
pub fn hb_reaches(
    g: &Graph,
    rf: &ReadsFrom,
    from: &EventId,
    to: &EventId,
) -> Result<bool, CheckError> {
    let ex = Exec::new(g, rf.to_dense(g)?);
    Ok(ex.hb(g.node_of(from)?, g.node_of(to)?))
}

fn dense_mo(g: &Graph, mo: Option<&ModificationOrder>) -> Result<Option<DenseMo>, CheckError> {
    Ok(match mo {
        Some(mo) => Some(mo.to_dense(g)?),
        None => None,
    })
}

/// Checks a single axiom; `None` when it holds.
pub fn check_axiom(
    g: &Graph,
    rf: &ReadsFrom,
    mo: Option<&ModificationOrder>,
    ax: Axiom,
) -> Result<Option<Violation>, CheckError> {
    if ax.needs_mo() && mo.is_none() {
        return Err(CheckError::MissingMo(ax.to_string()));
    }
    let ex = Exec::new(g, rf.to_dense(g)?);
    let mo = dense_mo(g, mo)?;
    Ok(check_dense(&ex, mo.as_ref(), ax, None))
}

/// Runs the model's axioms in order and reports the first failure.
pub fn verify(
    g: &Graph,
    rf: &ReadsFrom,
    mo: Option<&ModificationOrder>,
    m: MemoryModel,
) -> Result<Verdict, CheckError> {
    let axioms = Axiom::of_model(m);
    if mo.is_none() {
        if let Some(ax) = axioms.iter().find(|a| a.needs_mo()) {
            return Err(CheckError::MissingMo(format!("{m} ({ax})")));
        }
    }
    let ex = Exec::new(g, rf.to_dense(g)?);
    let dmo = dense_mo(g, mo)?;
    Ok(match verify_dense(&ex, dmo.as_ref(), m) {
        Some(v) => Verdict::Inconsistent(Refutation::Violation(v)),
        None => Verdict::Consistent {
            rf: rf.clone(),
            mo: mo.cloned(),
        },
    })
}

pub fn verify_dense(ex: &Exec<'_>, mo: Option<&DenseMo>, m: MemoryModel) -> Option<Violation> {
    Axiom::of_model(m)
        .iter()
        .find_map(|&ax| check_dense(ex, mo, ax, None))
}

/// Re-checks every labelled edge of a certificate against the relations and
/// the shape required by its axiom.
pub fn replay(
    g: &Graph,
    rf: &ReadsFrom,
    mo: Option<&ModificationOrder>,
    v: &Violation,
) -> Result<bool, CheckError> {
    let ex = Exec::new(g, rf.to_dense(g)?);
    let dmo = dense_mo(g, mo)?;
    let nodes: Vec<usize> = v
        .cycle
        .iter()
        .map(|s| g.node_of(&s.event))
        .collect::<Result<_, _>>()?;
    if nodes.is_empty() {
        return Ok(false);
    }
    let ob = match (&v.anchor, v.axiom) {
        (Some(t), Axiom::ObAcyclicity) => {
            let ti = g
                .thread_index(t)
                .ok_or_else(|| CheckError::UnknownThread(t.clone()))?;
            let anchor = g
                .thread_nodes(ti)
                .last()
                .ok_or_else(|| CheckError::EmptyThread(t.clone()))?;
            Some(ObDense::compute(&ex, anchor))
        }
        _ => None,
    };
    let len = nodes.len();
    for (i, step) in v.cycle.iter().enumerate() {
        let (a, b) = (nodes[i], nodes[(i + 1) % len]);
        let ok = match step.label {
            EdgeLabel::Po => g.po(a, b),
            EdgeLabel::Rf => ex.rf()[b] == a,
            EdgeLabel::RfInv => ex.rf()[a] == b,
            EdgeLabel::Mo => match &dmo {
                Some(mo) => g.is_write(a) && g.is_write(b) && mo.before(g, a, b),
                None => false,
            },
            EdgeLabel::HbStep => ex.hb(a, b),
            EdgeLabel::ObStep => ob.as_ref().is_some_and(|ob| ob.contains(a, b)),
        };
        if !ok {
            return Ok(false);
        }
    }
    let labels: Vec<EdgeLabel> = v.cycle.iter().map(|s| s.label).collect();
    let same_loc = nodes.iter().all(|&n| g.loc(n) == g.loc(nodes[0]));
    use EdgeLabel::*;
    let shape = match v.axiom {
        Axiom::PorfAcyclicity => labels.iter().all(|l| matches!(l, Po | Rf)),
        Axiom::StrongWriteCoherence => labels.iter().all(|l| matches!(l, Po | Rf | Mo)),
        Axiom::WriteCoherence => labels == [Mo, HbStep],
        Axiom::ReadCoherence => labels == [RfInv, Mo, HbStep],
        Axiom::WeakReadCoherence => {
            labels == [RfInv, HbStep, HbStep] && same_loc && g.is_write(nodes[2])
        }
        Axiom::RelaxedWriteCoherence => labels == [Mo, Po],
        Axiom::RelaxedReadCoherence => {
            (labels == [RfInv, Mo, Po] || labels == [RfInv, Mo, Rf, Po]) && same_loc
        }
        Axiom::ObAcyclicity => {
            ob.is_some() && labels.iter().all(|l| matches!(l, HbStep | ObStep))
        }
    };
    Ok(shape)
}
