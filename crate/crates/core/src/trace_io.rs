//! Text formats: execution traces with optional rf/mo annotations, DIMACS
//! CNF and edge lists.
//!
//! Trace grammar, one item per line (`#` starts a comment):
//!
//! ```text
//! thread <tid>
//! w <var> <int>
//! r <var> <int>
//! rf <tid>:<idx> <tid>:<idx>        # writer, reader
//! mo <var> <tid>:<idx> ...          # full order for var
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{is_identifier, Access, EventId, Graph, ModificationOrder, ReadsFrom};
use crate::reductions::{CnfFormula, Literal, ReductionError, UndirectedGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: clause has {width} literals, expected 3")]
    NotThreeCnf { line: usize, width: usize },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
}

impl FormatError {
    pub fn line(&self) -> usize {
        match self {
            FormatError::Parse { line, .. }
            | FormatError::NotThreeCnf { line, .. }
            | FormatError::SelfLoop { line, .. } => *line,
        }
    }
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Parse {
        line,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDocument {
    pub graph: Graph,
    pub rf: Option<ReadsFrom>,
    pub mo: Option<ModificationOrder>,
}

impl TraceDocument {
    pub fn new(graph: Graph) -> Self {
        TraceDocument {
            graph,
            rf: None,
            mo: None,
        }
    }
}

/// Non-comment lines as (1-based line number, tokens).
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn int(line: usize, tok: &str) -> Result<i64, FormatError> {
    tok.parse()
        .or_else(|_| err(line, format!("malformed integer `{tok}`")))
}

fn ident(line: usize, tok: &str) -> Result<&str, FormatError> {
    if is_identifier(tok) {
        Ok(tok)
    } else {
        err(line, format!("invalid identifier `{tok}`"))
    }
}

fn node(line: usize, g: &Graph, tok: &str) -> Result<usize, FormatError> {
    let id: EventId = match tok.parse() {
        Ok(id) => id,
        Err(_) => return err(line, format!("malformed event id `{tok}`")),
    };
    g.node(&id)
        .map_or_else(|| err(line, format!("unknown event `{id}`")), Ok)
}

pub fn parse_trace(text: &str) -> Result<TraceDocument, FormatError> {
    let mut threads: Vec<(String, Vec<Access>)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut graph: Option<Graph> = None;
    let mut rf: BTreeMap<EventId, EventId> = BTreeMap::new();
    let mut last_rf_line = 0;
    let mut mo = ModificationOrder::new();
    let mut mo_lines = 0;

    for (ln, toks) in lines(text) {
        let arity = |n: usize| -> Result<(), FormatError> {
            if toks.len() == n {
                Ok(())
            } else {
                err(ln, format!("`{}` takes {} argument(s)", toks[0], n - 1))
            }
        };
        match toks[0] {
            "thread" => {
                arity(2)?;
                if graph.is_some() {
                    return err(ln, "thread block after rf/mo lines");
                }
                let t = ident(ln, toks[1])?;
                if !seen.insert(t.to_string()) {
                    return err(ln, format!("duplicate thread `{t}`"));
                }
                threads.push((t.to_string(), Vec::new()));
            }
            op @ ("w" | "r") => {
                arity(3)?;
                if graph.is_some() {
                    return err(ln, "event after rf/mo lines");
                }
                let Some((_, events)) = threads.last_mut() else {
                    return err(ln, "event outside a thread block");
                };
                let var = ident(ln, toks[1])?;
                let val = int(ln, toks[2])?;
                events.push(if op == "w" {
                    Access::write(var, val)
                } else {
                    Access::read(var, val)
                });
            }
            "rf" => {
                arity(3)?;
                let g = graph.get_or_insert_with(|| build(&threads));
                let w = node(ln, g, toks[1])?;
                let r = node(ln, g, toks[2])?;
                let (we, re) = (g.event(w), g.event(r));
                if !we.is_write() {
                    return err(ln, format!("rf source {} is not a write", we.id));
                }
                if !re.is_read() {
                    return err(ln, format!("rf target {} is not a read", re.id));
                }
                if we.var != re.var || we.val != re.val {
                    return err(
                        ln,
                        format!("{} writes {}={} but {} reads {}={}", we.id, we.var, we.val, re.id, re.var, re.val),
                    );
                }
                if rf.insert(re.id.clone(), we.id.clone()).is_some() {
                    return err(ln, format!("second rf line for {}", re.id));
                }
                last_rf_line = ln;
            }
            "mo" => {
                if toks.len() < 3 {
                    return err(ln, "`mo` needs a location and at least one write");
                }
                let g = graph.get_or_insert_with(|| build(&threads));
                let var = ident(ln, toks[1])?;
                let Some(x) = g.loc_index(var) else {
                    return err(ln, format!("unknown location `{var}`"));
                };
                if mo.get(var).is_some() {
                    return err(ln, format!("second mo line for `{var}`"));
                }
                let mut order = Vec::new();
                let mut listed = BTreeSet::new();
                for tok in &toks[2..] {
                    let n = node(ln, g, tok)?;
                    let e = g.event(n);
                    if !e.is_write() || e.var != var {
                        return err(ln, format!("{} is not a write to `{var}`", e.id));
                    }
                    if !listed.insert(n) {
                        return err(ln, format!("{} listed twice", e.id));
                    }
                    order.push(e.id.clone());
                }
                if order.len() != g.writes_to(x).len() {
                    return err(ln, format!("mo for `{var}` omits a write"));
                }
                mo.set(var, order);
                mo_lines = ln;
            }
            other => return err(ln, format!("unknown keyword `{other}`")),
        }
    }

    let graph = graph.unwrap_or_else(|| build(&threads));
    let rf = if rf.is_empty() {
        None
    } else {
        if let Some(r) = graph
            .reads()
            .into_iter()
            .find(|&r| !rf.contains_key(&graph.event(r).id))
        {
            return err(
                last_rf_line,
                format!("read {} has no rf line", graph.event(r).id),
            );
        }
        Some(ReadsFrom::from_pairs(rf.into_iter().map(|(r, w)| (w, r))))
    };
    let mo = if mo_lines == 0 {
        None
    } else {
        // a location with a single write has only one possible order
        for x in 0..graph.locations().len() {
            let var = &graph.locations()[x];
            let writes = graph.writes_to(x);
            if mo.get(var).is_none() {
                match writes {
                    [] => {}
                    [w] => mo.set(var.clone(), vec![graph.event(*w).id.clone()]),
                    _ => return err(mo_lines, format!("no mo line for `{var}`")),
                }
            }
        }
        Some(mo)
    };
    Ok(TraceDocument { graph, rf, mo })
}

fn build(threads: &[(String, Vec<Access>)]) -> Graph {
    Graph::new(threads.to_vec()).expect("names checked while parsing")
}

pub fn serialize_trace(d: &TraceDocument) -> String {
    let g = &d.graph;
    let mut out = String::new();
    for t in 0..g.num_threads() {
        let _ = writeln!(out, "thread {}", g.thread_ids()[t]);
        for e in g.thread_events(t) {
            let op = if e.is_read() { 'r' } else { 'w' };
            let _ = writeln!(out, "{op} {} {}", e.var, e.val);
        }
    }
    if let Some(rf) = &d.rf {
        for (r, w) in rf.iter() {
            let _ = writeln!(out, "rf {w} {r}");
        }
    }
    if let Some(mo) = &d.mo {
        for (var, order) in mo.iter() {
            let _ = write!(out, "mo {var}");
            for w in order {
                let _ = write!(out, " {w}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, FormatError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut clauses: Vec<[Literal; 3]> = Vec::new();
    let mut pending: Vec<Literal> = Vec::new();
    let mut last = 0;
    for (ln, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        last = ln;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "p" {
            if header.is_some() {
                return err(ln, "second header");
            }
            if toks.len() != 4 || toks[1] != "cnf" {
                return err(ln, "expected `p cnf <vars> <clauses>`");
            }
            let k = toks[2].parse().or_else(|_| err(ln, "bad variable count"))?;
            let m = toks[3].parse().or_else(|_| err(ln, "bad clause count"))?;
            header = Some((k, m, ln));
            continue;
        }
        let Some((k, _, _)) = header else {
            return err(ln, "clause before header");
        };
        for tok in toks {
            let v = int(ln, tok)?;
            if v == 0 {
                match <[Literal; 3]>::try_from(std::mem::take(&mut pending)) {
                    Ok(c) => clauses.push(c),
                    Err(p) => return Err(FormatError::NotThreeCnf { line: ln, width: p.len() }),
                }
            } else {
                let lit = Literal::from_dimacs(v);
                if lit.var > k {
                    return err(ln, format!("variable {} exceeds declared {k}", lit.var));
                }
                pending.push(lit);
            }
        }
    }
    let Some((k, m, hl)) = header else {
        return err(last.max(1), "missing `p cnf` header");
    };
    if !pending.is_empty() {
        return err(last, "unterminated clause");
    }
    if clauses.len() != m {
        return err(hl, format!("header declares {m} clauses, found {}", clauses.len()));
    }
    CnfFormula::new(k, clauses).or_else(|e| err(hl, e.to_string()))
}

pub fn serialize_dimacs(phi: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", phi.num_vars, phi.clauses.len());
    for c in &phi.clauses {
        let _ = writeln!(
            out,
            "{} {} {} 0",
            c[0].to_dimacs(),
            c[1].to_dimacs(),
            c[2].to_dimacs()
        );
    }
    out
}

pub fn parse_edgelist(text: &str) -> Result<UndirectedGraph, FormatError> {
    let mut it = lines(text);
    let Some((ln, toks)) = it.next() else {
        return err(1, "missing vertex count");
    };
    if toks.len() != 1 {
        return err(ln, "first line must be the vertex count");
    }
    let n: usize = toks[0]
        .parse()
        .or_else(|_| err(ln, format!("malformed vertex count `{}`", toks[0])))?;
    let mut edges = Vec::new();
    for (ln, toks) in it {
        if toks.len() != 2 {
            return err(ln, "expected `u v`");
        }
        let mut pair = [0usize; 2];
        for (slot, tok) in pair.iter_mut().zip(&toks) {
            *slot = tok
                .parse()
                .or_else(|_| err(ln, format!("malformed vertex `{tok}`")))?;
        }
        match UndirectedGraph::new(n, [(pair[0], pair[1])]) {
            Ok(_) => edges.push((pair[0], pair[1])),
            Err(ReductionError::SelfLoop(v)) => {
                return Err(FormatError::SelfLoop { line: ln, vertex: v })
            }
            Err(e) => return err(ln, e.to_string()),
        }
    }
    UndirectedGraph::new(n, edges).or_else(|e| err(0, e.to_string()))
}

pub fn serialize_edgelist(gr: &UndirectedGraph) -> String {
    let mut out = format!("{}\n", gr.num_vertices());
    for (u, v) in gr.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_trace() {
        let d = parse_trace("thread t1\nw x 1\nthread t2\nr x 1\nrf t1:0 t2:0").unwrap();
        assert_eq!(d.graph.len(), 2);
        assert_eq!(d.rf.as_ref().unwrap().len(), 1);
        assert!(d.mo.is_none());
        assert_eq!(
            serialize_trace(&d),
            "thread t1\nw x 1\nthread t2\nr x 1\nrf t1:0 t2:0\n"
        );
    }

    #[test]
    fn event_outside_thread() {
        assert_eq!(parse_trace("w x 1").unwrap_err().line(), 1);
    }

    #[test]
    fn empty_document() {
        let d = parse_trace("# nothing\n\n").unwrap();
        assert_eq!(d.graph.len(), 0);
        assert_eq!(serialize_trace(&d), "");
    }

    #[test]
    fn rf_errors() {
        let base = "thread a\nw x 1\nw x 2\nr x 1\nthread b\nr x 1\n";
        for (extra, line) in [
            ("rf a:0 a:1", 7),
            ("rf a:3 b:0", 7),
            ("rf a:1 b:0", 7),
            ("rf a:0 b:9", 7),
            ("rf a:0 b:0\nrf a:0 b:0", 8),
            ("rf a:0 b:0", 7),
            ("rf a:0 b:x", 7),
        ] {
            let e = parse_trace(&format!("{base}{extra}")).unwrap_err();
            assert_eq!(e.line(), line, "{extra}: {e}");
        }
    }

    #[test]
    fn mo_errors_and_fill() {
        let base = "thread a\nw x 1\nw x 2\nw y 1\n";
        assert!(parse_trace(&format!("{base}mo x a:0")).is_err());
        assert!(parse_trace(&format!("{base}mo x a:0 a:0")).is_err());
        assert!(parse_trace(&format!("{base}mo x a:0 a:2")).is_err());
        assert!(parse_trace(&format!("{base}mo y a:2")).is_err());
        let d = parse_trace(&format!("{base}mo x a:1 a:0")).unwrap();
        let mo = d.mo.unwrap();
        assert_eq!(mo.get("y").unwrap(), [EventId::new("a", 2)]);
        assert_eq!(mo.get("x").unwrap(), [EventId::new("a", 1), EventId::new("a", 0)]);
    }

    #[test]
    fn grammar_errors() {
        for bad in [
            "thread a\nw x one",
            "thread a\nthread a",
            "thread a\nq x 1",
            "thread a:b",
            "thread a\nw x 1\nmo x a:0\nthread b",
            "thread a\nw x 1 2",
        ] {
            assert!(parse_trace(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn dimacs() {
        let phi = parse_dimacs("c example\np cnf 3 2\n1 2 3 0\n1 -2 -3 0\n").unwrap();
        assert_eq!(phi.num_vars, 3);
        assert_eq!(phi.clauses[1][1], Literal::new(2, false));
        assert_eq!(parse_dimacs(&serialize_dimacs(&phi)).unwrap(), phi);
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 2 0"),
            Err(FormatError::NotThreeCnf { width: 2, .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 2\n1 2 3 0"),
            Err(FormatError::Parse { .. })
        ));
        assert!(parse_dimacs("1 2 3 0").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 2 3 0").is_err());
        assert!(parse_dimacs("p cnf 3 1\n1 2 3").is_err());
        // clauses may span lines
        assert_eq!(parse_dimacs("p cnf 3 1\n1 2\n3 0").unwrap().clauses.len(), 1);
    }

    #[test]
    fn edgelist() {
        let k3 = parse_edgelist("3\n1 2\n2 3\n1 3\n2 1").unwrap();
        assert_eq!(k3.edges().count(), 3);
        assert!(k3.has_triangle());
        assert!(matches!(
            parse_edgelist("2\n1 1"),
            Err(FormatError::SelfLoop { line: 2, vertex: 1 })
        ));
        assert!(!parse_edgelist("4\n1 2\n2 3\n3 4\n4 1").unwrap().has_triangle());
        assert!(parse_edgelist("2\n1 3").is_err());
        assert!(parse_edgelist("").is_err());
        assert_eq!(serialize_edgelist(&k3), "3\n1 2\n1 3\n2 3\n");
    }
}
