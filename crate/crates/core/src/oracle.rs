//! Exhaustive search over reads-from relations and modification orders.
//!
//! Works for any number of writers per location. Candidate rfs are checked
//! in lexicographic order (possibly in parallel, keeping the first hit).
//! Axioms that do not mention mo are checked before any order is tried, and
//! orders are searched location by location where the axioms allow it.

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use crate::axioms::{check_dense, Exec};
use crate::model::{DenseMo, Graph, MemoryModel, ModificationOrder, ReadsFrom, NONE};
use crate::verdict::{Axiom, Refutation, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("budget exceeded: {what} is {needed}, limit {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_events: usize,
    pub max_rf_candidates: u64,
    /// Bound on the orders of any single location.
    pub max_mo_permutations: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_events: 64,
            max_rf_candidates: 1_000_000,
            max_mo_permutations: 10_000,
        }
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |a, b| a.saturating_mul(b))
}

fn budget(what: &'static str, needed: u128, limit: u128) -> Result<(), OracleError> {
    if needed > limit {
        Err(OracleError::BudgetExceeded {
            what,
            needed,
            limit,
        })
    } else {
        Ok(())
    }
}

/// Mixed-radix space of reads-from candidates for a set of reads.
struct RfSpace {
    reads: Vec<usize>,
    choices: Vec<Vec<usize>>,
    count: u128,
}

impl RfSpace {
    fn new(g: &Graph, reads: Vec<usize>) -> RfSpace {
        let choices: Vec<Vec<usize>> = reads
            .iter()
            .map(|&r| g.matching_writes(r).collect())
            .collect();
        let count = choices
            .iter()
            .fold(1u128, |a, c| a.saturating_mul(c.len() as u128));
        RfSpace {
            reads,
            choices,
            count,
        }
    }

    /// The `i`-th candidate; the first read is the most significant digit.
    fn fill(&self, mut i: u128, rf: &mut [usize]) {
        for k in (0..self.reads.len()).rev() {
            let c = &self.choices[k];
            let n = c.len() as u128;
            rf[self.reads[k]] = c[(i % n) as usize];
            i /= n;
        }
    }

    fn decode(&self, g: &Graph, i: u128) -> Vec<usize> {
        let mut rf = vec![NONE; g.len()];
        self.fill(i, &mut rf);
        rf
    }
}

/// Every reads-from relation of `g`, in lexicographic order.
pub fn enumerate_rfs<'g>(
    g: &'g Graph,
    limits: &OracleLimits,
) -> Result<impl Iterator<Item = ReadsFrom> + 'g, OracleError> {
    let space = RfSpace::new(g, g.reads());
    budget(
        "rf candidates",
        space.count,
        limits.max_rf_candidates as u128,
    )?;
    Ok((0..space.count).map(move |i| ReadsFrom::from_dense(g, &space.decode(g, i))))
}

/// Number of reads-from candidates of `g` (saturating).
pub fn count_rfs(g: &Graph) -> u128 {
    RfSpace::new(g, g.reads()).count
}

fn location_orders(g: &Graph, limits: &OracleLimits) -> Result<Vec<Vec<Vec<usize>>>, OracleError> {
    (0..g.locations().len())
        .map(|x| {
            let writes = g.writes_to(x);
            budget(
                "orders of one location",
                factorial(writes.len()),
                limits.max_mo_permutations as u128,
            )?;
            Ok(writes
                .iter()
                .copied()
                .permutations(writes.len())
                .collect())
        })
        .collect()
}

/// Every modification order of `g`; the first location varies slowest.
pub fn enumerate_mos<'g>(
    g: &'g Graph,
    limits: &OracleLimits,
) -> Result<impl Iterator<Item = ModificationOrder> + 'g, OracleError> {
    let perms = location_orders(g, limits)?;
    let total = perms
        .iter()
        .fold(1u128, |a, p| a.saturating_mul(p.len() as u128));
    Ok((0..total).map(move |mut i| {
        let mut orders = vec![Vec::new(); perms.len()];
        for x in (0..perms.len()).rev() {
            let n = perms[x].len() as u128;
            orders[x] = perms[x][(i % n) as usize].clone();
            i /= n;
        }
        ModificationOrder::from_dense(g, &DenseMo::from_orders(g, orders))
    }))
}

struct Search<'g> {
    g: &'g Graph,
    m: MemoryModel,
    orders: Vec<Vec<Vec<usize>>>,
}

impl<'g> Search<'g> {
    fn new(g: &'g Graph, m: MemoryModel, limits: &OracleLimits) -> Result<Search<'g>, OracleError> {
        let orders = if crate::verdict::model_needs_mo(m) {
            location_orders(g, limits)?
        } else {
            Vec::new()
        };
        Ok(Search { g, m, orders })
    }

    /// `None` if no order makes `ex` consistent, otherwise the witness order
    /// (itself `None` for models that ignore mo).
    fn check(&self, ex: &Exec<'_>) -> Option<Option<DenseMo>> {
        use MemoryModel::*;
        let m = self.m.resolve();
        let fails = |ax| check_dense(ex, None, ax, None).is_some();
        if m != Relaxed && fails(Axiom::PorfAcyclicity) {
            return None;
        }
        match m {
            Wra => (!fails(Axiom::WeakReadCoherence)).then_some(None),
            Cm => (!fails(Axiom::WeakReadCoherence) && !fails(Axiom::ObAcyclicity))
                .then_some(None),
            // RA and SRA imply weak read coherence for every mo
            Ra => {
                if fails(Axiom::WeakReadCoherence) {
                    return None;
                }
                self.per_location(ex, &[Axiom::WriteCoherence, Axiom::ReadCoherence], false)
                    .map(Some)
            }
            Sra => {
                if fails(Axiom::WeakReadCoherence) {
                    return None;
                }
                self.per_location(ex, &[Axiom::WriteCoherence, Axiom::ReadCoherence], true)
                    .map(Some)
            }
            Relaxed | RelaxedAcyclic => self
                .per_location(
                    ex,
                    &[Axiom::RelaxedWriteCoherence, Axiom::RelaxedReadCoherence],
                    false,
                )
                .map(Some),
            Cc | Ccv => unreachable!("resolved"),
        }
    }

    /// Picks an order per location passing the per-location `axioms`; with
    /// `acyclic`, the combination must also keep hb ∪ mo acyclic.
    fn per_location(&self, ex: &Exec<'_>, axioms: &[Axiom], acyclic: bool) -> Option<DenseMo> {
        let g = self.g;
        let nloc = g.locations().len();
        let mut mo = DenseMo::from_orders(g, vec![Vec::new(); nloc]);
        let mut valid: Vec<Vec<&Vec<usize>>> = Vec::with_capacity(nloc);
        for x in 0..nloc {
            let mut ok = Vec::new();
            for perm in &self.orders[x] {
                set_order(&mut mo, x, perm);
                if axioms
                    .iter()
                    .all(|&ax| check_dense(ex, Some(&mo), ax, Some(x)).is_none())
                {
                    ok.push(perm);
                    if !acyclic {
                        break;
                    }
                }
            }
            clear_order(&mut mo, x);
            if ok.is_empty() {
                return None;
            }
            valid.push(ok);
        }
        if !acyclic {
            for (x, perms) in valid.iter().enumerate() {
                set_order(&mut mo, x, perms[0]);
            }
            return Some(mo);
        }
        fn search(ex: &Exec<'_>, valid: &[Vec<&Vec<usize>>], x: usize, mo: &mut DenseMo) -> bool {
            if x == valid.len() {
                return true;
            }
            for perm in &valid[x] {
                set_order(mo, x, perm);
                if ex.find_cycle(Some(mo)).is_none() && search(ex, valid, x + 1, mo) {
                    return true;
                }
            }
            clear_order(mo, x);
            false
        }
        search(ex, &valid, 0, &mut mo).then_some(mo)
    }
}

fn set_order(mo: &mut DenseMo, x: usize, perm: &[usize]) {
    for (i, &n) in perm.iter().enumerate() {
        mo.pos[n] = i;
    }
    mo.order[x] = perm.to_vec();
}

fn clear_order(mo: &mut DenseMo, x: usize) {
    for &n in &mo.order[x] {
        mo.pos[n] = NONE;
    }
    mo.order[x].clear();
}

fn first_unmatched(g: &Graph) -> Option<usize> {
    g.reads()
        .into_iter()
        .find(|&r| g.matching_writes(r).next().is_none())
}

fn witness(g: &Graph, rf: &[usize], mo: Option<DenseMo>) -> Verdict {
    Verdict::Consistent {
        rf: ReadsFrom::from_dense(g, rf),
        mo: mo.map(|mo| ModificationOrder::from_dense(g, &mo)),
    }
}

/// Decides consistency of `g` under `m` by exhaustive search.
pub fn oracle_consistent(
    g: &Graph,
    m: MemoryModel,
    limits: &OracleLimits,
) -> Result<Verdict, OracleError> {
    budget("events", g.len() as u128, limits.max_events as u128)?;
    if let Some(r) = first_unmatched(g) {
        return Ok(Verdict::Inconsistent(Refutation::NoMatchingWrite(
            g.event(r).id.clone(),
        )));
    }
    if m == MemoryModel::Relaxed {
        return relaxed_by_location(g, limits);
    }
    let space = RfSpace::new(g, g.reads());
    budget(
        "rf candidates",
        space.count,
        limits.max_rf_candidates as u128,
    )?;
    let search = Search::new(g, m, limits)?;
    let found = (0..space.count as u64).into_par_iter().find_map_first(|i| {
        let ex = Exec::new(g, space.decode(g, i as u128));
        search.check(&ex).map(|mo| (ex.into_rf(), mo))
    });
    Ok(match found {
        Some((rf, mo)) => witness(g, &rf, mo),
        None => Verdict::Inconsistent(Refutation::Exhausted),
    })
}

/// Relaxed has no axiom relating two locations, so each location is solved
/// on its own and the results are combined.
fn relaxed_by_location(g: &Graph, limits: &OracleLimits) -> Result<Verdict, OracleError> {
    let reads = g.reads();
    let mut rf = vec![NONE; g.len()];
    let mut orders = vec![Vec::new(); g.locations().len()];
    let axioms = [Axiom::RelaxedWriteCoherence, Axiom::RelaxedReadCoherence];
    for (x, chosen) in orders.iter_mut().enumerate() {
        let space = RfSpace::new(g, reads.iter().copied().filter(|&r| g.loc(r) == x).collect());
        budget(
            "rf candidates of one location",
            space.count,
            limits.max_rf_candidates as u128,
        )?;
        let writes = g.writes_to(x);
        budget(
            "orders of one location",
            factorial(writes.len()),
            limits.max_mo_permutations as u128,
        )?;
        let perms: Vec<Vec<usize>> = writes.iter().copied().permutations(writes.len()).collect();
        let mut found = false;
        'outer: for i in 0..space.count {
            space.fill(i, &mut rf);
            let ex = Exec::new(g, rf.clone());
            for perm in &perms {
                let mut mo = DenseMo::from_orders(g, vec![Vec::new(); g.locations().len()]);
                set_order(&mut mo, x, perm);
                if axioms
                    .iter()
                    .all(|&ax| check_dense(&ex, Some(&mo), ax, Some(x)).is_none())
                {
                    *chosen = perm.clone();
                    found = true;
                    break 'outer;
                }
            }
        }
        if !found {
            return Ok(Verdict::Inconsistent(Refutation::Exhausted));
        }
    }
    let mo = DenseMo::from_orders(g, orders);
    Ok(witness(g, &rf, Some(mo)))
}

/// Every reads-from relation for which some order passes the model's axioms.
pub fn all_consistent_rfs(
    g: &Graph,
    m: MemoryModel,
    limits: &OracleLimits,
) -> Result<Vec<ReadsFrom>, OracleError> {
    budget("events", g.len() as u128, limits.max_events as u128)?;
    if first_unmatched(g).is_some() {
        return Ok(Vec::new());
    }
    let space = RfSpace::new(g, g.reads());
    budget(
        "rf candidates",
        space.count,
        limits.max_rf_candidates as u128,
    )?;
    let search = Search::new(g, m, limits)?;
    Ok((0..space.count as u64)
        .into_par_iter()
        .filter_map(|i| {
            let ex = Exec::new(g, space.decode(g, i as u128));
            search
                .check(&ex)
                .map(|_| ReadsFrom::from_dense(g, ex.rf()))
        })
        .collect())
}
