use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;

/// The operators whose usage and reformulation are tracked per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorTag {
    Filter,
    Union,
    Optional,
    Graph,
    Bind,
    Minus,
    Service,
    Values,
    SeqPath,
    MulPath,
    AltPath,
    InvPath,
    Projection,
    Count,
    Sample,
    GroupConcat,
    Sum,
    Min,
    Max,
    Avg,
    Distinct,
    Limit,
    OrderBy,
    Offset,
    GroupBy,
    Having,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 26] = [
        OperatorTag::Filter,
        OperatorTag::Union,
        OperatorTag::Optional,
        OperatorTag::Graph,
        OperatorTag::Bind,
        OperatorTag::Minus,
        OperatorTag::Service,
        OperatorTag::Values,
        OperatorTag::SeqPath,
        OperatorTag::MulPath,
        OperatorTag::AltPath,
        OperatorTag::InvPath,
        OperatorTag::Projection,
        OperatorTag::Count,
        OperatorTag::Sample,
        OperatorTag::GroupConcat,
        OperatorTag::Sum,
        OperatorTag::Min,
        OperatorTag::Max,
        OperatorTag::Avg,
        OperatorTag::Distinct,
        OperatorTag::Limit,
        OperatorTag::OrderBy,
        OperatorTag::Offset,
        OperatorTag::GroupBy,
        OperatorTag::Having,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorTag::Filter => "Filter",
            OperatorTag::Union => "Union",
            OperatorTag::Optional => "Optional",
            OperatorTag::Graph => "Graph",
            OperatorTag::Bind => "Bind",
            OperatorTag::Minus => "Minus",
            OperatorTag::Service => "Service",
            OperatorTag::Values => "Values",
            OperatorTag::SeqPath => "SeqPath",
            OperatorTag::MulPath => "MulPath",
            OperatorTag::AltPath => "AltPath",
            OperatorTag::InvPath => "InvPath",
            OperatorTag::Projection => "Projection",
            OperatorTag::Count => "Count",
            OperatorTag::Sample => "Sample",
            OperatorTag::GroupConcat => "GroupConcat",
            OperatorTag::Sum => "Sum",
            OperatorTag::Min => "Min",
            OperatorTag::Max => "Max",
            OperatorTag::Avg => "Avg",
            OperatorTag::Distinct => "Distinct",
            OperatorTag::Limit => "Limit",
            OperatorTag::OrderBy => "OrderBy",
            OperatorTag::Offset => "Offset",
            OperatorTag::GroupBy => "GroupBy",
            OperatorTag::Having => "Having",
        }
    }

    /// Row group used when reporting: graph patterns, property paths,
    /// aggregations or solution modifiers.
    pub fn group(self) -> &'static str {
        use OperatorTag::*;
        match self {
            Filter | Union | Optional | Graph | Bind | Minus | Service | Values => "graph-pattern",
            SeqPath | MulPath | AltPath | InvPath => "property-path",
            Count | Sample | GroupConcat | Sum | Min | Max | Avg => "aggregation",
            Projection | Distinct | Limit | OrderBy | Offset | GroupBy | Having => "solution-modifier",
        }
    }

    fn from_aggregate(agg: AggregateKind) -> OperatorTag {
        match agg {
            AggregateKind::Count => OperatorTag::Count,
            AggregateKind::Sum => OperatorTag::Sum,
            AggregateKind::Min => OperatorTag::Min,
            AggregateKind::Max => OperatorTag::Max,
            AggregateKind::Avg => OperatorTag::Avg,
            AggregateKind::Sample => OperatorTag::Sample,
            AggregateKind::GroupConcat => OperatorTag::GroupConcat,
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Occurrence counts per operator tag; absent tags do not occur.
pub type OperatorInventory = BTreeMap<OperatorTag, usize>;

/// Census of operator occurrences. Each `UNION` keyword counts once;
/// `Projection` counts explicit SELECT projections (not `SELECT *`).
pub fn operator_inventory(ast: &QueryAst) -> OperatorInventory {
    let mut inv = OperatorInventory::new();
    if ast.form == QueryForm::Select {
        select_tags(&ast.select, &mut inv);
    } else {
        modifier_tags(&ast.select.modifiers, &mut inv);
    }
    for agg in &ast.aggregations {
        *inv.entry(OperatorTag::from_aggregate(*agg)).or_default() += 1;
    }
    for root in ast.template.iter().chain(ast.body.iter()) {
        block_tags(root, &mut inv);
    }
    inv
}

fn bump(inv: &mut OperatorInventory, tag: OperatorTag) {
    *inv.entry(tag).or_default() += 1;
}

fn select_tags(clause: &SelectClause, inv: &mut OperatorInventory) {
    if matches!(clause.projection, Projection::Items(_)) {
        bump(inv, OperatorTag::Projection);
    }
    modifier_tags(&clause.modifiers, inv);
}

fn modifier_tags(m: &SolutionModifiers, inv: &mut OperatorInventory) {
    if m.distinct {
        bump(inv, OperatorTag::Distinct);
    }
    if m.limit.is_some() {
        bump(inv, OperatorTag::Limit);
    }
    if m.offset.is_some() {
        bump(inv, OperatorTag::Offset);
    }
    if !m.order_by.is_empty() {
        bump(inv, OperatorTag::OrderBy);
    }
    if !m.group_by.is_empty() {
        bump(inv, OperatorTag::GroupBy);
    }
    if !m.having.is_empty() {
        bump(inv, OperatorTag::Having);
    }
}

fn path_tags(p: &PathExpr, inv: &mut OperatorInventory) {
    match p {
        PathExpr::Link(_) | PathExpr::Var(_) => {}
        PathExpr::Seq(l, r) => {
            bump(inv, OperatorTag::SeqPath);
            path_tags(l, inv);
            path_tags(r, inv);
        }
        PathExpr::Alt(l, r) => {
            bump(inv, OperatorTag::AltPath);
            path_tags(l, inv);
            path_tags(r, inv);
        }
        PathExpr::Inv(i) => {
            bump(inv, OperatorTag::InvPath);
            path_tags(i, inv);
        }
        PathExpr::Mult(i, _) => {
            bump(inv, OperatorTag::MulPath);
            path_tags(i, inv);
        }
    }
}

fn block_tags(block: &OperatorBlock, inv: &mut OperatorInventory) {
    for _ in &block.filters {
        bump(inv, OperatorTag::Filter);
    }
    for tp in &block.triple_patterns {
        path_tags(&tp.predicate, inv);
    }
    for child in &block.children {
        match (&child.kind, &child.detail) {
            (BlockKind::Union, BlockDetail::UnionBranch { continues: true }) => bump(inv, OperatorTag::Union),
            (BlockKind::Optional, _) => bump(inv, OperatorTag::Optional),
            (BlockKind::Graph, _) => bump(inv, OperatorTag::Graph),
            (BlockKind::Bind, _) => bump(inv, OperatorTag::Bind),
            (BlockKind::Minus, _) => bump(inv, OperatorTag::Minus),
            (BlockKind::Service, _) => bump(inv, OperatorTag::Service),
            (BlockKind::Values, _) => bump(inv, OperatorTag::Values),
            (BlockKind::Subquery, BlockDetail::Subquery(clause)) => select_tags(clause, inv),
            _ => {}
        }
        block_tags(child, inv);
    }
}
