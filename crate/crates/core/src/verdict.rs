//! Axioms, violation certificates and verdicts.

use std::fmt;
use std::str::FromStr;

use crate::model::{EventId, MemoryModel, ModificationOrder, ReadsFrom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    PorfAcyclicity,
    WriteCoherence,
    ReadCoherence,
    StrongWriteCoherence,
    WeakReadCoherence,
    RelaxedWriteCoherence,
    RelaxedReadCoherence,
    ObAcyclicity,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::PorfAcyclicity,
        Axiom::WriteCoherence,
        Axiom::ReadCoherence,
        Axiom::StrongWriteCoherence,
        Axiom::WeakReadCoherence,
        Axiom::RelaxedWriteCoherence,
        Axiom::RelaxedReadCoherence,
        Axiom::ObAcyclicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::PorfAcyclicity => "PorfAcyclicity",
            Axiom::WriteCoherence => "WriteCoherence",
            Axiom::ReadCoherence => "ReadCoherence",
            Axiom::StrongWriteCoherence => "StrongWriteCoherence",
            Axiom::WeakReadCoherence => "WeakReadCoherence",
            Axiom::RelaxedWriteCoherence => "RelaxedWriteCoherence",
            Axiom::RelaxedReadCoherence => "RelaxedReadCoherence",
            Axiom::ObAcyclicity => "ObAcyclicity",
        }
    }

    pub fn needs_mo(self) -> bool {
        matches!(
            self,
            Axiom::WriteCoherence
                | Axiom::ReadCoherence
                | Axiom::StrongWriteCoherence
                | Axiom::RelaxedWriteCoherence
                | Axiom::RelaxedReadCoherence
        )
    }

    /// Axioms of a model, in the order they are checked.
    pub fn of_model(m: MemoryModel) -> &'static [Axiom] {
        use Axiom::*;
        match m {
            MemoryModel::Wra | MemoryModel::Cc => &[PorfAcyclicity, WeakReadCoherence],
            MemoryModel::Ra => &[PorfAcyclicity, WriteCoherence, ReadCoherence],
            MemoryModel::Sra | MemoryModel::Ccv => {
                &[PorfAcyclicity, StrongWriteCoherence, ReadCoherence]
            }
            MemoryModel::Relaxed => &[RelaxedWriteCoherence, RelaxedReadCoherence],
            MemoryModel::RelaxedAcyclic => {
                &[PorfAcyclicity, RelaxedWriteCoherence, RelaxedReadCoherence]
            }
            MemoryModel::Cm => &[PorfAcyclicity, WeakReadCoherence, ObAcyclicity],
        }
    }
}

/// Whether checking `m` requires a modification order.
pub fn model_needs_mo(m: MemoryModel) -> bool {
    Axiom::of_model(m).iter().any(|a| a.needs_mo())
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axiom `{s}`"))
    }
}

/// Label of the edge leaving a certificate step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Po,
    Rf,
    RfInv,
    Mo,
    HbStep,
    ObStep,
}

impl EdgeLabel {
    pub fn name(self) -> &'static str {
        match self {
            EdgeLabel::Po => "po",
            EdgeLabel::Rf => "rf",
            EdgeLabel::RfInv => "rf^-1",
            EdgeLabel::Mo => "mo",
            EdgeLabel::HbStep => "hb",
            EdgeLabel::ObStep => "ob",
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub event: EventId,
    /// Edge from this event to the next step (the last step wraps around).
    pub label: EdgeLabel,
}

/// A failed axiom together with the cycle that witnesses it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub axiom: Axiom,
    pub cycle: Vec<Step>,
    /// Thread whose ob relation is reflexive (ObAcyclicity only).
    pub anchor: Option<String>,
}

impl Violation {
    pub fn events(&self) -> Vec<&EventId> {
        self.cycle.iter().map(|s| &s.event).collect()
    }

    /// Cycle text, e.g. `t1:3 -rf-> t2:1 -po-> t1:3`.
    pub fn cycle_string(&self) -> String {
        let mut out = String::new();
        for s in &self.cycle {
            out.push_str(&format!("{} -{}-> ", s.event, s.label));
        }
        if let Some(first) = self.cycle.first() {
            out.push_str(&first.event.to_string());
        }
        out
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.axiom, self.cycle_string())?;
        if let Some(t) = &self.anchor {
            write!(f, " (ob of thread {t})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refutation {
    Violation(Violation),
    /// A read whose value is written nowhere it could read from.
    NoMatchingWrite(EventId),
    /// Every candidate was checked and none passed.
    Exhausted,
}

impl Refutation {
    pub fn name(&self) -> String {
        match self {
            Refutation::Violation(v) => v.axiom.to_string(),
            Refutation::NoMatchingWrite(_) => "NoMatchingWrite".into(),
            Refutation::Exhausted => "Exhausted".into(),
        }
    }

    /// The read a refutation is blocked on, when there is one.
    pub fn blocking_read(&self) -> Option<&EventId> {
        match self {
            Refutation::NoMatchingWrite(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Refutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Refutation::Violation(v) => v.fmt(f),
            Refutation::NoMatchingWrite(r) => write!(f, "NoMatchingWrite: read {r}"),
            Refutation::Exhausted => f.write_str("Exhausted: no candidate passes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Consistent {
        rf: ReadsFrom,
        mo: Option<ModificationOrder>,
    },
    Inconsistent(Refutation),
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent { .. })
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Verdict::Inconsistent(Refutation::Violation(v)) => Some(v),
            _ => None,
        }
    }

    pub fn axiom(&self) -> Option<Axiom> {
        self.violation().map(|v| v.axiom)
    }

    pub fn rf(&self) -> Option<&ReadsFrom> {
        match self {
            Verdict::Consistent { rf, .. } => Some(rf),
            _ => None,
        }
    }
}
