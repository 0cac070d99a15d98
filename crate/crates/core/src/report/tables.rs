use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::hypergraph::JoinKind;
use crate::reformulation::{Change, LocusPosition, ReformulationEvent, TripleElement};
use crate::sparql::{operator_inventory, BlockKind, LeafType, OperatorTag, QueryAst, QueryForm};

/// A count with the denominator its percentage is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub count: u64,
    pub denominator: u64,
    /// `None` when the denominator is zero.
    pub percent: Option<f64>,
}

impl Cell {
    pub fn new(count: u64, denominator: u64) -> Cell {
        Cell {
            count,
            denominator,
            percent: (denominator > 0).then(|| 100.0 * count as f64 / denominator as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperatorRow {
    pub operator: OperatorTag,
    pub group: String,
    /// Queries using the operator, over all session queries.
    pub usage: Cell,
    /// Pairs removing the operator, over its usage.
    pub removals: Cell,
    /// Pairs adding the operator, over its usage.
    pub additions: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FormChangeRow {
    pub from: QueryForm,
    pub to: QueryForm,
    /// Over all form changes.
    pub changes: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperatorTable {
    pub queries: u64,
    pub pairs: u64,
    pub rows: Vec<OperatorRow>,
    pub form_changes: Vec<FormChangeRow>,
}

/// Triple-pattern changes of one block kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TripleRow {
    pub block: BlockKind,
    /// Block instances present in both queries of a pair.
    pub paired_blocks: u64,
    /// Paired blocks with at least one triple change, over paired blocks.
    pub changed_blocks: Cell,
    /// Additions, removals and substitutions over all triple events of the
    /// block kind; these three sum to 100.
    pub additions: Cell,
    pub removals: Cell,
    pub substitutions: Cell,
    /// Per-element substitutions over substitutions. A combined substitution
    /// is counted for each element it touches as well as in `combined`.
    pub subject: Cell,
    pub predicate: Cell,
    pub object: Cell,
    pub combined: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TripleTable {
    pub rows: Vec<TripleRow>,
    /// Share of each block kind among all substitutions.
    pub substitution_share: Vec<(BlockKind, Cell)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocusRow {
    pub join_kind: JoinKind,
    pub position: LocusPosition,
    /// Over all loci of the same join kind.
    pub loci: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocusTable {
    pub rows: Vec<LocusRow>,
    pub localized_substitutions: u64,
    /// Substitutions with no adjacent join vertex; not in the rows.
    pub unlocalized_substitutions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FilterTable {
    /// Block and specific substitutions over all filter substitutions.
    pub block: Cell,
    pub specific: Cell,
    /// Specific substitutions per leaf type, over specific substitutions.
    pub types: Vec<(LeafType, Cell)>,
    pub added: u64,
    pub removed: u64,
}

pub fn operator_table(sessions: &[&[QueryAst]], events: &[ReformulationEvent]) -> OperatorTable {
    let mut usage: BTreeMap<OperatorTag, u64> = BTreeMap::new();
    let (mut queries, mut pairs) = (0u64, 0u64);
    for s in sessions {
        queries += s.len() as u64;
        pairs += s.len().saturating_sub(1) as u64;
        for q in *s {
            for tag in operator_inventory(q).keys() {
                *usage.entry(*tag).or_default() += 1;
            }
        }
    }
    let mut added: BTreeMap<OperatorTag, u64> = BTreeMap::new();
    let mut removed: BTreeMap<OperatorTag, u64> = BTreeMap::new();
    let mut forms: BTreeMap<(QueryForm, QueryForm), u64> = BTreeMap::new();
    for e in events {
        match e.change {
            Change::OperatorAdded(t) => *added.entry(t).or_default() += 1,
            Change::OperatorRemoved(t) => *removed.entry(t).or_default() += 1,
            Change::FormChange { from, to } => *forms.entry((from, to)).or_default() += 1,
            _ => {}
        }
    }
    let get = |m: &BTreeMap<OperatorTag, u64>, t| m.get(&t).copied().unwrap_or(0);
    let rows = OperatorTag::ALL
        .into_iter()
        .map(|t| {
            let u = get(&usage, t);
            OperatorRow {
                operator: t,
                group: t.group().to_string(),
                usage: Cell::new(u, queries),
                removals: Cell::new(get(&removed, t), u),
                additions: Cell::new(get(&added, t), u),
            }
        })
        .collect();
    let total_forms: u64 = forms.values().sum();
    let form_changes = forms
        .into_iter()
        .map(|((from, to), n)| FormChangeRow {
            from,
            to,
            changes: Cell::new(n, total_forms),
        })
        .collect();
    OperatorTable {
        queries,
        pairs,
        rows,
        form_changes,
    }
}

#[derive(Default)]
struct TripleCounts {
    paired: u64,
    changed: BTreeSet<(String, usize, String)>,
    added: u64,
    removed: u64,
    substituted: u64,
    elements: [u64; 3],
    combined: u64,
}

pub fn triple_table(sessions: &[&[QueryAst]], events: &[ReformulationEvent]) -> TripleTable {
    let mut counts: BTreeMap<BlockKind, TripleCounts> = BTreeMap::new();
    for s in sessions {
        for w in s.windows(2) {
            let blocks2 = w[1].blocks();
            for (key, b1) in w[0].blocks() {
                if let Some((_, b2)) = blocks2.iter().find(|(k, _)| *k == key) {
                    if !b1.triple_patterns.is_empty() || !b2.triple_patterns.is_empty() {
                        counts.entry(key.kind()).or_default().paired += 1;
                    }
                }
            }
        }
    }
    for e in events {
        let Some(block) = e.change.block() else { continue };
        let c = counts.entry(block.kind()).or_default();
        let mut triple = true;
        match &e.change {
            Change::TripleAdded { .. } => c.added += 1,
            Change::TripleRemoved { .. } => c.removed += 1,
            Change::TripleSubstituted { elements, .. } => {
                c.substituted += 1;
                for el in elements {
                    c.elements[TripleElement::ALL.iter().position(|x| x == el).unwrap()] += 1;
                }
                if elements.len() > 1 {
                    c.combined += 1;
                }
            }
            _ => triple = false,
        }
        if triple {
            c.changed.insert((e.session.clone(), e.pair, block.to_string()));
        }
    }
    let total_subs: u64 = counts.values().map(|c| c.substituted).sum();
    let rows: Vec<TripleRow> = counts
        .iter()
        .filter(|(_, c)| c.paired > 0 || c.added + c.removed + c.substituted > 0)
        .map(|(&block, c)| {
            let events = c.added + c.removed + c.substituted;
            TripleRow {
                block,
                paired_blocks: c.paired,
                changed_blocks: Cell::new(c.changed.len() as u64, c.paired),
                additions: Cell::new(c.added, events),
                removals: Cell::new(c.removed, events),
                substitutions: Cell::new(c.substituted, events),
                subject: Cell::new(c.elements[0], c.substituted),
                predicate: Cell::new(c.elements[1], c.substituted),
                object: Cell::new(c.elements[2], c.substituted),
                combined: Cell::new(c.combined, c.substituted),
            }
        })
        .collect();
    let substitution_share = rows
        .iter()
        .map(|r| (r.block, Cell::new(r.substitutions.count, total_subs)))
        .collect();
    TripleTable {
        rows,
        substitution_share,
    }
}

pub fn locus_table(events: &[ReformulationEvent]) -> LocusTable {
    let mut counts: BTreeMap<(JoinKind, LocusPosition), u64> = BTreeMap::new();
    let (mut localized, mut unlocalized) = (0, 0);
    for e in events {
        if let Change::TripleSubstituted { loci, .. } = &e.change {
            if loci.is_empty() {
                unlocalized += 1;
            } else {
                localized += 1;
            }
            for l in loci {
                *counts.entry((l.join_kind, l.position)).or_default() += 1;
            }
        }
    }
    let per_kind = |k: JoinKind| -> u64 { counts.iter().filter(|((j, _), _)| *j == k).map(|(_, n)| n).sum() };
    let mut rows = Vec::new();
    for kind in JoinKind::ALL {
        let total = per_kind(kind);
        for pos in LocusPosition::ALL.into_iter().filter(|p| p.valid_for(kind)) {
            rows.push(LocusRow {
                join_kind: kind,
                position: pos,
                loci: Cell::new(counts.get(&(kind, pos)).copied().unwrap_or(0), total),
            });
        }
    }
    LocusTable {
        rows,
        localized_substitutions: localized,
        unlocalized_substitutions: unlocalized,
    }
}

pub const FILTER_TYPES: [LeafType; 5] = [
    LeafType::Variable,
    LeafType::Iri,
    LeafType::String,
    LeafType::Number,
    LeafType::Boolean,
];

pub fn filter_table(events: &[ReformulationEvent]) -> FilterTable {
    let (mut block, mut added, mut removed) = (0, 0, 0);
    let mut types: BTreeMap<LeafType, u64> = BTreeMap::new();
    for e in events {
        match &e.change {
            Change::FilterBlockSubstitution { .. } => block += 1,
            Change::FilterSpecificSubstitution { type_tag, .. } => *types.entry(*type_tag).or_default() += 1,
            Change::FilterAdded { .. } => added += 1,
            Change::FilterRemoved { .. } => removed += 1,
            _ => {}
        }
    }
    let specific: u64 = types.values().sum();
    FilterTable {
        block: Cell::new(block, block + specific),
        specific: Cell::new(specific, block + specific),
        types: FILTER_TYPES
            .into_iter()
            .map(|t| (t, Cell::new(types.get(&t).copied().unwrap_or(0), specific)))
            .collect(),
        added,
        removed,
    }
}
