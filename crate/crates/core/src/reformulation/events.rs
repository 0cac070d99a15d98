use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::hypergraph::JoinKind;
use crate::sparql::{BlockKey, LeafType, OperatorTag, QueryForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleElement {
    Subject,
    Predicate,
    Object,
}

impl TripleElement {
    pub const ALL: [TripleElement; 3] = [TripleElement::Subject, TripleElement::Predicate, TripleElement::Object];

    pub fn as_str(self) -> &'static str {
        match self {
            TripleElement::Subject => "subject",
            TripleElement::Predicate => "predicate",
            TripleElement::Object => "object",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LocusPosition {
    Center,
    NeighborEdge,
    NeighborNode,
    InEdge,
    InNode,
    OutEdge,
    OutNode,
}

impl LocusPosition {
    pub const ALL: [LocusPosition; 7] = [
        LocusPosition::Center,
        LocusPosition::NeighborEdge,
        LocusPosition::NeighborNode,
        LocusPosition::InEdge,
        LocusPosition::InNode,
        LocusPosition::OutEdge,
        LocusPosition::OutNode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LocusPosition::Center => "center",
            LocusPosition::NeighborEdge => "neighborEdge",
            LocusPosition::NeighborNode => "neighborNode",
            LocusPosition::InEdge => "inEdge",
            LocusPosition::InNode => "inNode",
            LocusPosition::OutEdge => "outEdge",
            LocusPosition::OutNode => "outNode",
        }
    }

    /// Positions reported for a join kind: in/out split only for Hybrid,
    /// no neighbor-node bucket for Path.
    pub fn valid_for(self, kind: JoinKind) -> bool {
        use LocusPosition::*;
        match kind {
            JoinKind::Hybrid => matches!(self, Center | InEdge | InNode | OutEdge | OutNode),
            JoinKind::Path => matches!(self, Center | NeighborEdge),
            JoinKind::Star | JoinKind::Sink => matches!(self, Center | NeighborEdge | NeighborNode),
        }
    }
}

/// Where a triple-pattern substitution happened relative to a join vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubstitutionLocus {
    pub join_kind: JoinKind,
    pub position: LocusPosition,
}

/// One reformulation between two contiguous queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Change {
    FormChange {
        from: QueryForm,
        to: QueryForm,
    },
    OperatorAdded(OperatorTag),
    OperatorRemoved(OperatorTag),
    TripleAdded {
        block: BlockKey,
    },
    TripleRemoved {
        block: BlockKey,
    },
    TripleSubstituted {
        block: BlockKey,
        elements: Vec<TripleElement>,
        loci: Vec<SubstitutionLocus>,
    },
    FilterAdded {
        block: BlockKey,
    },
    FilterRemoved {
        block: BlockKey,
    },
    FilterBlockSubstitution {
        block: BlockKey,
    },
    FilterSpecificSubstitution {
        block: BlockKey,
        type_tag: LeafType,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeKind {
    FormChange,
    OperatorAdded,
    OperatorRemoved,
    TripleAdded,
    TripleRemoved,
    TripleSubstituted,
    FilterAdded,
    FilterRemoved,
    FilterBlockSubstitution,
    FilterSpecificSubstitution,
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Change {
    pub fn kind(&self) -> ChangeKind {
        match self {
            Change::FormChange { .. } => ChangeKind::FormChange,
            Change::OperatorAdded(_) => ChangeKind::OperatorAdded,
            Change::OperatorRemoved(_) => ChangeKind::OperatorRemoved,
            Change::TripleAdded { .. } => ChangeKind::TripleAdded,
            Change::TripleRemoved { .. } => ChangeKind::TripleRemoved,
            Change::TripleSubstituted { .. } => ChangeKind::TripleSubstituted,
            Change::FilterAdded { .. } => ChangeKind::FilterAdded,
            Change::FilterRemoved { .. } => ChangeKind::FilterRemoved,
            Change::FilterBlockSubstitution { .. } => ChangeKind::FilterBlockSubstitution,
            Change::FilterSpecificSubstitution { .. } => ChangeKind::FilterSpecificSubstitution,
        }
    }

    pub fn block(&self) -> Option<&BlockKey> {
        match self {
            Change::TripleAdded { block }
            | Change::TripleRemoved { block }
            | Change::TripleSubstituted { block, .. }
            | Change::FilterAdded { block }
            | Change::FilterRemoved { block }
            | Change::FilterBlockSubstitution { block }
            | Change::FilterSpecificSubstitution { block, .. } => Some(block),
            _ => None,
        }
    }

    /// Drops substitution loci, which depend on the first query's graph and
    /// so are not expected to survive a swap of the pair.
    pub fn without_loci(&self) -> Change {
        match self.clone() {
            Change::TripleSubstituted { block, elements, .. } => Change::TripleSubstituted {
                block,
                elements,
                loci: Vec::new(),
            },
            other => other,
        }
    }

    /// The change seen from the other direction (queries swapped).
    pub fn reversed(&self) -> Change {
        match self.clone() {
            Change::FormChange { from, to } => Change::FormChange { from: to, to: from },
            Change::OperatorAdded(t) => Change::OperatorRemoved(t),
            Change::OperatorRemoved(t) => Change::OperatorAdded(t),
            Change::TripleAdded { block } => Change::TripleRemoved { block },
            Change::TripleRemoved { block } => Change::TripleAdded { block },
            Change::FilterAdded { block } => Change::FilterRemoved { block },
            Change::FilterRemoved { block } => Change::FilterAdded { block },
            other => other,
        }
    }
}

/// A change tagged with the session and the 0-based index of the pair's
/// first query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "EventRecord", try_from = "EventRecord")]
pub struct ReformulationEvent {
    pub session: String,
    pub pair: usize,
    pub change: Change,
}

/// Flat NDJSON shape of an event. Keys that do not apply are null.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventRecord {
    pub session: String,
    pub pair: usize,
    pub kind: ChangeKind,
    pub block: Option<String>,
    pub elements: Option<Vec<TripleElement>>,
    pub locus: Option<Vec<SubstitutionLocus>>,
    pub type_tag: Option<LeafType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<QueryForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<QueryForm>,
}

impl From<ReformulationEvent> for EventRecord {
    fn from(e: ReformulationEvent) -> Self {
        let mut r = EventRecord {
            session: e.session,
            pair: e.pair,
            kind: e.change.kind(),
            block: e.change.block().map(|b| b.to_string()),
            elements: None,
            locus: None,
            type_tag: None,
            operator: None,
            from: None,
            to: None,
        };
        match e.change {
            Change::FormChange { from, to } => {
                r.from = Some(from);
                r.to = Some(to);
            }
            Change::OperatorAdded(t) | Change::OperatorRemoved(t) => r.operator = Some(t),
            Change::TripleSubstituted { elements, loci, .. } => {
                r.elements = Some(elements);
                r.locus = Some(loci);
            }
            Change::FilterSpecificSubstitution { type_tag, .. } => r.type_tag = Some(type_tag),
            _ => {}
        }
        r
    }
}

impl TryFrom<EventRecord> for ReformulationEvent {
    type Error = String;

    fn try_from(r: EventRecord) -> Result<Self, Self::Error> {
        let block = || -> Result<BlockKey, String> {
            r.block
                .as_deref()
                .ok_or_else(|| format!("{} needs a block", r.kind))?
                .parse()
        };
        let missing = |what: &str| format!("{} needs {what}", r.kind);
        let change = match r.kind {
            ChangeKind::FormChange => Change::FormChange {
                from: r.from.ok_or_else(|| missing("from"))?,
                to: r.to.ok_or_else(|| missing("to"))?,
            },
            ChangeKind::OperatorAdded => Change::OperatorAdded(r.operator.ok_or_else(|| missing("operator"))?),
            ChangeKind::OperatorRemoved => Change::OperatorRemoved(r.operator.ok_or_else(|| missing("operator"))?),
            ChangeKind::TripleAdded => Change::TripleAdded { block: block()? },
            ChangeKind::TripleRemoved => Change::TripleRemoved { block: block()? },
            ChangeKind::TripleSubstituted => {
                let elements = r.elements.clone().ok_or_else(|| missing("elements"))?;
                if elements.is_empty() {
                    return Err(missing("non-empty elements"));
                }
                Change::TripleSubstituted {
                    block: block()?,
                    elements,
                    loci: r.locus.clone().unwrap_or_default(),
                }
            }
            ChangeKind::FilterAdded => Change::FilterAdded { block: block()? },
            ChangeKind::FilterRemoved => Change::FilterRemoved { block: block()? },
            ChangeKind::FilterBlockSubstitution => Change::FilterBlockSubstitution { block: block()? },
            ChangeKind::FilterSpecificSubstitution => Change::FilterSpecificSubstitution {
                block: block()?,
                type_tag: r.type_tag.ok_or_else(|| missing("typeTag"))?,
            },
        };
        Ok(ReformulationEvent {
            session: r.session,
            pair: r.pair,
            change,
        })
    }
}

pub fn write_events<'a, W: Write>(
    mut w: W,
    events: impl IntoIterator<Item = &'a ReformulationEvent>,
) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<ReformulationEvent>, String> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}
