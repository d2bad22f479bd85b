//! Events, partial execution graphs and the synthesized relations.
//!
//! A [`Graph`] stores threads in listing order. Every event also gets a dense
//! node number (its position in the flattened listing) which the checking
//! algorithms use internally; the public relations are keyed by [`EventId`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

/// Marker for "no write" in dense reads-from vectors.
pub const NONE: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate thread id `{0}`")]
    DuplicateThreadId(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("unknown event {0}")]
    UnknownEvent(EventId),
    #[error("writes for read {read} lie in different threads")]
    IncomparableWrites { read: EventId },
    #[error("invalid reads-from: {0}")]
    InvalidRf(String),
    #[error("invalid modification order: {0}")]
    InvalidMo(String),
}

/// Returns true for non-empty strings over `[A-Za-z0-9_.-]`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

/// Address of an event: thread id and 0-based position in that thread.
///
/// The derived order (thread id, then index) is the scan order used for
/// deterministic certificates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId {
    pub thread: String,
    pub index: usize,
}

impl EventId {
    pub fn new(thread: impl Into<String>, index: usize) -> Self {
        EventId {
            thread: thread.into(),
            index,
        }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.thread, self.index)
    }
}

impl FromStr for EventId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (t, i) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected <thread>:<index>, got `{s}`"))?;
        if !is_identifier(t) {
            return Err(format!("invalid thread id `{t}`"));
        }
        let index = i
            .parse::<usize>()
            .map_err(|_| format!("invalid event index `{i}`"))?;
        Ok(EventId::new(t, index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Read,
    Write,
}

/// One memory access as listed in a thread, before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub op: Op,
    pub var: String,
    pub val: i64,
}

impl Access {
    pub fn read(var: impl Into<String>, val: i64) -> Self {
        Access {
            op: Op::Read,
            var: var.into(),
            val,
        }
    }

    pub fn write(var: impl Into<String>, val: i64) -> Self {
        Access {
            op: Op::Write,
            var: var.into(),
            val,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub id: EventId,
    pub op: Op,
    pub var: String,
    pub val: i64,
}

impl Event {
    pub fn is_read(&self) -> bool {
        self.op == Op::Read
    }

    pub fn is_write(&self) -> bool {
        self.op == Op::Write
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.is_read() { 'r' } else { 'w' };
        write!(f, "{}({},{})@{}", op, self.var, self.val, self.id)
    }
}

/// A partial execution graph: per-thread event sequences, po implied by order.
#[derive(Debug, Clone)]
pub struct Graph {
    thread_ids: Vec<String>,
    events: Vec<Event>,
    starts: Vec<usize>,
    thread_of: Vec<usize>,
    by_name: HashMap<String, usize>,
    scan_threads: Vec<usize>,
    locations: Vec<String>,
    loc_of: Vec<usize>,
    loc_index: HashMap<String, usize>,
    // per location, writes in scan order
    writes_by_loc: Vec<Vec<usize>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.thread_ids == other.thread_ids && self.events == other.events
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a validated graph; event ids are assigned by position.
    pub fn new<S: Into<String>>(threads: Vec<(S, Vec<Access>)>) -> Result<Graph, ModelError> {
        let mut thread_ids = Vec::with_capacity(threads.len());
        let mut by_name = HashMap::new();
        let mut events = Vec::new();
        let mut starts = Vec::with_capacity(threads.len() + 1);
        let mut thread_of = Vec::new();
        for (t, (name, accesses)) in threads.into_iter().enumerate() {
            let name: String = name.into();
            if !is_identifier(&name) {
                return Err(ModelError::InvalidIdentifier(name));
            }
            if by_name.insert(name.clone(), t).is_some() {
                return Err(ModelError::DuplicateThreadId(name));
            }
            starts.push(events.len());
            for (index, a) in accesses.into_iter().enumerate() {
                if !is_identifier(&a.var) {
                    return Err(ModelError::InvalidIdentifier(a.var));
                }
                events.push(Event {
                    id: EventId::new(name.clone(), index),
                    op: a.op,
                    var: a.var,
                    val: a.val,
                });
                thread_of.push(t);
            }
            thread_ids.push(name);
        }
        starts.push(events.len());

        let mut scan_threads: Vec<usize> = (0..thread_ids.len()).collect();
        scan_threads.sort_by(|&a, &b| thread_ids[a].cmp(&thread_ids[b]));

        let locations: Vec<String> = events
            .iter()
            .map(|e| e.var.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let loc_index: HashMap<String, usize> = locations
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let loc_of: Vec<usize> = events.iter().map(|e| loc_index[&e.var]).collect();

        let mut g = Graph {
            thread_ids,
            events,
            starts,
            thread_of,
            by_name,
            scan_threads,
            locations,
            loc_of,
            loc_index,
            writes_by_loc: Vec::new(),
        };
        let mut writes_by_loc = vec![Vec::new(); g.locations.len()];
        for n in g.scan_order().collect::<Vec<_>>() {
            if g.events[n].is_write() {
                writes_by_loc[g.loc_of[n]].push(n);
            }
        }
        g.writes_by_loc = writes_by_loc;
        Ok(g)
    }

    pub fn empty() -> Graph {
        Graph::new::<String>(Vec::new()).expect("empty graph is valid")
    }

    /// Number of events.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn num_threads(&self) -> usize {
        self.thread_ids.len()
    }

    /// Thread ids in listing order.
    pub fn thread_ids(&self) -> &[String] {
        &self.thread_ids
    }

    /// Events of thread `t` (listing position), in po order.
    pub fn thread_events(&self, t: usize) -> &[Event] {
        &self.events[self.starts[t]..self.starts[t + 1]]
    }

    pub fn thread_nodes(&self, t: usize) -> Range<usize> {
        self.starts[t]..self.starts[t + 1]
    }

    pub fn thread_len(&self, t: usize) -> usize {
        self.starts[t + 1] - self.starts[t]
    }

    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Threads sorted by id, the order certificates are searched in.
    pub fn scan_threads(&self) -> &[usize] {
        &self.scan_threads
    }

    /// All nodes in (thread id, index) order.
    pub fn scan_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.scan_threads
            .iter()
            .flat_map(move |&t| self.thread_nodes(t))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, n: usize) -> &Event {
        &self.events[n]
    }

    pub fn node(&self, id: &EventId) -> Option<usize> {
        let t = self.thread_index(&id.thread)?;
        (id.index < self.thread_len(t)).then(|| self.starts[t] + id.index)
    }

    pub fn node_of(&self, id: &EventId) -> Result<usize, ModelError> {
        self.node(id).ok_or_else(|| ModelError::UnknownEvent(id.clone()))
    }

    pub fn node_at(&self, t: usize, index: usize) -> usize {
        self.starts[t] + index
    }

    pub fn thread_of(&self, n: usize) -> usize {
        self.thread_of[n]
    }

    pub fn index_of(&self, n: usize) -> usize {
        n - self.starts[self.thread_of[n]]
    }

    pub fn is_read(&self, n: usize) -> bool {
        self.events[n].is_read()
    }

    pub fn is_write(&self, n: usize) -> bool {
        self.events[n].is_write()
    }

    /// po(a, b): same thread, a strictly before b.
    pub fn po(&self, a: usize, b: usize) -> bool {
        self.thread_of[a] == self.thread_of[b] && a < b
    }

    /// Sorted location names.
    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn loc(&self, n: usize) -> usize {
        self.loc_of[n]
    }

    pub fn loc_index(&self, var: &str) -> Option<usize> {
        self.loc_index.get(var).copied()
    }

    /// Writes to location `x` in scan order.
    pub fn writes_to(&self, x: usize) -> &[usize] {
        &self.writes_by_loc[x]
    }

    /// Read nodes in scan order.
    pub fn reads(&self) -> Vec<usize> {
        self.scan_order().filter(|&n| self.is_read(n)).collect()
    }

    /// Writes matching a read's location and value, in scan order.
    pub fn matching_writes(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        let val = self.events[r].val;
        self.writes_by_loc[self.loc_of[r]]
            .iter()
            .copied()
            .filter(move |&w| self.events[w].val == val)
    }

    /// For each location, the set of threads containing a write to it.
    pub fn writer_profile(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for e in self.events.iter().filter(|e| e.is_write()) {
            out.entry(e.var.clone())
                .or_default()
                .insert(e.id.thread.clone());
        }
        out
    }

    /// Largest number of writer threads of any location (0 without writes).
    pub fn max_writers(&self) -> usize {
        self.writer_profile()
            .values()
            .map(BTreeSet::len)
            .max()
            .unwrap_or(0)
    }

    pub fn is_one_writer(&self) -> bool {
        self.max_writers() <= 1
    }
}

/// Total map from every read to the write it observes.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReadsFrom {
    map: BTreeMap<EventId, EventId>,
}

impl ReadsFrom {
    pub fn new() -> Self {
        ReadsFrom::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (EventId, EventId)>>(pairs: I) -> Self {
        // pairs are (write, read)
        ReadsFrom {
            map: pairs.into_iter().map(|(w, r)| (r, w)).collect(),
        }
    }

    /// Sets the write observed by `read`, returning the previous one.
    pub fn insert(&mut self, read: EventId, write: EventId) -> Option<EventId> {
        self.map.insert(read, write)
    }

    pub fn get(&self, read: &EventId) -> Option<&EventId> {
        self.map.get(read)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// (read, write) pairs sorted by read.
    pub fn iter(&self) -> impl Iterator<Item = (&EventId, &EventId)> {
        self.map.iter()
    }

    /// Checks the type invariants against `g` and returns the dense form,
    /// indexed by node with [`NONE`] for writes.
    pub fn to_dense(&self, g: &Graph) -> Result<Vec<usize>, ModelError> {
        let mut dense = vec![NONE; g.len()];
        for (r, w) in &self.map {
            let rn = g.node(r).ok_or_else(|| ModelError::UnknownEvent(r.clone()))?;
            let wn = g.node(w).ok_or_else(|| ModelError::UnknownEvent(w.clone()))?;
            let (re, we) = (g.event(rn), g.event(wn));
            if !re.is_read() {
                return Err(ModelError::InvalidRf(format!("{r} is not a read")));
            }
            if !we.is_write() {
                return Err(ModelError::InvalidRf(format!("{w} is not a write")));
            }
            if re.var != we.var || re.val != we.val {
                return Err(ModelError::InvalidRf(format!(
                    "{r} reads {}={} but {w} writes {}={}",
                    re.var, re.val, we.var, we.val
                )));
            }
            dense[rn] = wn;
        }
        if let Some(n) = (0..g.len()).find(|&n| g.is_read(n) && dense[n] == NONE) {
            return Err(ModelError::InvalidRf(format!(
                "read {} has no write",
                g.event(n).id
            )));
        }
        Ok(dense)
    }

    pub fn from_dense(g: &Graph, dense: &[usize]) -> ReadsFrom {
        ReadsFrom {
            map: (0..g.len())
                .filter(|&n| g.is_read(n))
                .map(|n| (g.event(n).id.clone(), g.event(dense[n]).id.clone()))
                .collect(),
        }
    }
}

/// Per-location total order over that location's writes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModificationOrder {
    orders: BTreeMap<String, Vec<EventId>>,
}

impl ModificationOrder {
    pub fn new() -> Self {
        ModificationOrder::default()
    }

    pub fn set(&mut self, var: impl Into<String>, order: Vec<EventId>) {
        self.orders.insert(var.into(), order);
    }

    pub fn get(&self, var: &str) -> Option<&[EventId]> {
        self.orders.get(var).map(Vec::as_slice)
    }

    /// (location, order) sorted by location.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<EventId>)> {
        self.orders.iter()
    }

    /// Validates against `g` and returns the position of each write in its
    /// location's order (indexed by node, [`NONE`] for reads) together with
    /// the node orders per location index.
    pub fn to_dense(&self, g: &Graph) -> Result<DenseMo, ModelError> {
        let mut pos = vec![NONE; g.len()];
        let mut order = vec![Vec::new(); g.locations().len()];
        for (var, ids) in &self.orders {
            let x = g.loc_index(var).ok_or_else(|| {
                ModelError::InvalidMo(format!("location `{var}` does not occur"))
            })?;
            for (i, id) in ids.iter().enumerate() {
                let n = g.node_of(id)?;
                let e = g.event(n);
                if !e.is_write() || e.var != *var {
                    return Err(ModelError::InvalidMo(format!(
                        "{id} is not a write to `{var}`"
                    )));
                }
                if pos[n] != NONE {
                    return Err(ModelError::InvalidMo(format!("{id} listed twice")));
                }
                pos[n] = i;
                order[x].push(n);
            }
        }
        for (x, o) in order.iter().enumerate() {
            if o.len() != g.writes_to(x).len() {
                return Err(ModelError::InvalidMo(format!(
                    "order for `{}` does not cover all its writes",
                    g.locations()[x]
                )));
            }
        }
        Ok(DenseMo { pos, order })
    }

    pub fn from_dense(g: &Graph, mo: &DenseMo) -> ModificationOrder {
        let mut out = ModificationOrder::new();
        for (x, nodes) in mo.order.iter().enumerate() {
            if !nodes.is_empty() {
                out.set(
                    g.locations()[x].clone(),
                    nodes.iter().map(|&n| g.event(n).id.clone()).collect(),
                );
            }
        }
        out
    }
}

/// Node-indexed modification order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseMo {
    /// Position of each write within its location's order.
    pub pos: Vec<usize>,
    /// Write nodes per location index, in mo order.
    pub order: Vec<Vec<usize>>,
}

impl DenseMo {
    pub fn from_orders(g: &Graph, order: Vec<Vec<usize>>) -> DenseMo {
        let mut pos = vec![NONE; g.len()];
        for nodes in &order {
            for (i, &n) in nodes.iter().enumerate() {
                pos[n] = i;
            }
        }
        DenseMo { pos, order }
    }

    /// a mo b (both writes to the same location).
    pub fn before(&self, g: &Graph, a: usize, b: usize) -> bool {
        g.loc(a) == g.loc(b) && self.pos[a] < self.pos[b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MemoryModel {
    Sra,
    Ra,
    Wra,
    Relaxed,
    RelaxedAcyclic,
    Cc,
    Cm,
    Ccv,
}

impl MemoryModel {
    pub const ALL: [MemoryModel; 8] = [
        MemoryModel::Sra,
        MemoryModel::Ra,
        MemoryModel::Wra,
        MemoryModel::Relaxed,
        MemoryModel::RelaxedAcyclic,
        MemoryModel::Cc,
        MemoryModel::Cm,
        MemoryModel::Ccv,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            MemoryModel::Sra => "sra",
            MemoryModel::Ra => "ra",
            MemoryModel::Wra => "wra",
            MemoryModel::Relaxed => "rlx",
            MemoryModel::RelaxedAcyclic => "rlx-acyclic",
            MemoryModel::Cc => "cc",
            MemoryModel::Cm => "cm",
            MemoryModel::Ccv => "ccv",
        }
    }

    /// CC is WRA and CCv is SRA.
    pub fn resolve(self) -> MemoryModel {
        match self {
            MemoryModel::Cc => MemoryModel::Wra,
            MemoryModel::Ccv => MemoryModel::Sra,
            m => m,
        }
    }

    pub fn is_relaxed(self) -> bool {
        matches!(self, MemoryModel::Relaxed | MemoryModel::RelaxedAcyclic)
    }
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MemoryModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MemoryModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

/// rf1 ⊑ rf2: every read's rf1-write is po-before-or-equal its rf2-write.
pub fn rf_leq(rf1: &ReadsFrom, rf2: &ReadsFrom, g: &Graph) -> Result<bool, ModelError> {
    let a = rf1.to_dense(g)?;
    let b = rf2.to_dense(g)?;
    dense_rf_leq(g, &a, &b)
}

pub fn dense_rf_leq(g: &Graph, a: &[usize], b: &[usize]) -> Result<bool, ModelError> {
    let mut leq = true;
    for n in 0..g.len() {
        if a[n] == NONE {
            continue;
        }
        if g.thread_of(a[n]) != g.thread_of(b[n]) {
            return Err(ModelError::IncomparableWrites {
                read: g.event(n).id.clone(),
            });
        }
        leq &= a[n] <= b[n];
    }
    Ok(leq)
}

/// Pointwise po-minimum of two reads-from relations.
pub fn rf_min(rf1: &ReadsFrom, rf2: &ReadsFrom, g: &Graph) -> Result<ReadsFrom, ModelError> {
    let a = rf1.to_dense(g)?;
    let b = rf2.to_dense(g)?;
    let mut out = a.clone();
    for n in 0..g.len() {
        if a[n] == NONE {
            continue;
        }
        if g.thread_of(a[n]) != g.thread_of(b[n]) {
            return Err(ModelError::IncomparableWrites {
                read: g.event(n).id.clone(),
            });
        }
        out[n] = a[n].min(b[n]);
    }
    Ok(ReadsFrom::from_dense(g, &out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_threads() -> Graph {
        Graph::new(vec![
            ("t1", vec![Access::read("x", 1), Access::write("y", 1)]),
            ("t2", vec![Access::read("y", 1), Access::write("x", 1)]),
        ])
        .unwrap()
    }

    #[test]
    fn ids_follow_listing_order() {
        let g = two_threads();
        assert_eq!(g.len(), 4);
        assert_eq!(g.event(1).id, EventId::new("t1", 1));
        assert!(g.po(0, 1));
        assert!(!g.po(1, 2));
        assert!(!g.po(1, 0));
    }

    #[test]
    fn duplicate_thread_rejected() {
        let err = Graph::new(vec![("t", vec![]), ("t", vec![])]).unwrap_err();
        assert_eq!(err, ModelError::DuplicateThreadId("t".into()));
    }

    #[test]
    fn bad_identifiers_rejected() {
        assert!(Graph::new(vec![("a b", vec![])]).is_err());
        assert!(Graph::new(vec![("t", vec![Access::write("x:y", 0)])]).is_err());
    }

    #[test]
    fn scan_order_sorts_threads_by_id() {
        let g = Graph::new(vec![
            ("zz", vec![Access::write("x", 0)]),
            ("aa", vec![Access::write("x", 1), Access::write("x", 2)]),
        ])
        .unwrap();
        let order: Vec<_> = g.scan_order().map(|n| g.event(n).id.to_string()).collect();
        assert_eq!(order, ["aa:0", "aa:1", "zz:0"]);
        assert_eq!(g.max_writers(), 2);
    }

    #[test]
    fn event_id_parse() {
        assert_eq!("t1:3".parse::<EventId>().unwrap(), EventId::new("t1", 3));
        assert!("t1".parse::<EventId>().is_err());
        assert!("t1:-1".parse::<EventId>().is_err());
    }

    #[test]
    fn rf_validation() {
        let g = two_threads();
        let mut rf = ReadsFrom::new();
        rf.insert(EventId::new("t1", 0), EventId::new("t2", 1));
        assert!(rf.to_dense(&g).is_err());
        rf.insert(EventId::new("t2", 0), EventId::new("t1", 1));
        let dense = rf.to_dense(&g).unwrap();
        assert_eq!(dense[0], 3);
        assert_eq!(ReadsFrom::from_dense(&g, &dense), rf);
        rf.insert(EventId::new("t2", 0), EventId::new("t2", 1));
        assert!(matches!(rf.to_dense(&g), Err(ModelError::InvalidRf(_))));
    }

    #[test]
    fn rf_min_pointwise() {
        let g = Graph::new(vec![
            (
                "w",
                vec![
                    Access::write("x", 1),
                    Access::write("x", 1),
                    Access::write("x", 1),
                    Access::write("x", 1),
                ],
            ),
            ("r", vec![Access::read("x", 1), Access::read("x", 1)]),
        ])
        .unwrap();
        let id = |t: &str, i| EventId::new(t, i);
        let a = ReadsFrom::from_pairs([(id("w", 0), id("r", 0)), (id("w", 3), id("r", 1))]);
        let b = ReadsFrom::from_pairs([(id("w", 2), id("r", 0)), (id("w", 1), id("r", 1))]);
        let m = rf_min(&a, &b, &g).unwrap();
        assert_eq!(m.get(&id("r", 0)), Some(&id("w", 0)));
        assert_eq!(m.get(&id("r", 1)), Some(&id("w", 1)));
        assert!(rf_leq(&m, &a, &g).unwrap());
        assert!(rf_leq(&m, &b, &g).unwrap());
        assert!(!rf_leq(&a, &b, &g).unwrap());
    }

    #[test]
    fn mo_validation() {
        let g = Graph::new(vec![
            ("t1", vec![Access::write("x", 0)]),
            ("t2", vec![Access::write("x", 1)]),
        ])
        .unwrap();
        let mut mo = ModificationOrder::new();
        mo.set("x", vec![EventId::new("t1", 0)]);
        assert!(mo.to_dense(&g).is_err());
        mo.set("x", vec![EventId::new("t2", 0), EventId::new("t1", 0)]);
        let d = mo.to_dense(&g).unwrap();
        assert!(d.before(&g, 1, 0));
        assert_eq!(ModificationOrder::from_dense(&g, &d), mo);
    }
}
