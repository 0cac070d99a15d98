//! Surface-syntax tree for the supported SPARQL 1.1 query subset.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QueryForm {
    Select,
    Construct,
    Ask,
    Describe,
}

impl QueryForm {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryForm::Select => "SELECT",
            QueryForm::Construct => "CONSTRUCT",
            QueryForm::Ask => "ASK",
            QueryForm::Describe => "DESCRIBE",
        }
    }
}

impl fmt::Display for QueryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    /// Quoted literal with optional language tag or datatype IRI.
    String {
        value: String,
        lang: Option<String>,
        datatype: Option<String>,
    },
    /// Unquoted numeric literal, lexical form kept verbatim (sign included).
    Number(String),
    Boolean(bool),
}

/// An RDF term or variable as it appears in the query text.
///
/// Prefixed names are already expanded, so `Iri` always holds the full IRI.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Var(String),
    BlankNode(String),
    Literal(Literal),
}

impl Term {
    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// IRIs, variables and blank nodes (blank nodes act as variables).
    pub fn counts_as_term(&self) -> bool {
        !self.is_literal()
    }
}

pub(crate) fn write_escaped(f: &mut impl fmt::Write, value: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in value.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::String { value, lang, datatype } => {
                write_escaped(f, value)?;
                if let Some(lang) = lang {
                    write!(f, "@{lang}")?;
                } else if let Some(dt) = datatype {
                    write!(f, "^^<{dt}>")?;
                }
                Ok(())
            }
            Literal::Number(n) => f.write_str(n),
            Literal::Boolean(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Var(v) => write!(f, "?{v}"),
            Term::BlankNode(b) => write!(f, "_:{b}"),
            Term::Literal(l) => l.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathQuantifier {
    #[serde(rename = "*")]
    ZeroOrMore,
    #[serde(rename = "+")]
    OneOrMore,
    #[serde(rename = "?")]
    ZeroOrOne,
}

impl PathQuantifier {
    pub fn symbol(self) -> char {
        match self {
            PathQuantifier::ZeroOrMore => '*',
            PathQuantifier::OneOrMore => '+',
            PathQuantifier::ZeroOrOne => '?',
        }
    }
}

/// Predicate position of a triple pattern: an IRI, a variable or a property path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathExpr {
    Link(String),
    Var(String),
    Seq(Box<PathExpr>, Box<PathExpr>),
    Alt(Box<PathExpr>, Box<PathExpr>),
    Inv(Box<PathExpr>),
    Mult(Box<PathExpr>, PathQuantifier),
}

impl PathExpr {
    pub fn is_simple(&self) -> bool {
        matches!(self, PathExpr::Link(_) | PathExpr::Var(_))
    }

    /// Leaf terms (IRIs and variables) in left-to-right order.
    pub fn leaves(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Term>) {
        match self {
            PathExpr::Link(iri) => out.push(Term::Iri(iri.clone())),
            PathExpr::Var(v) => out.push(Term::Var(v.clone())),
            PathExpr::Seq(l, r) | PathExpr::Alt(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
            PathExpr::Inv(p) | PathExpr::Mult(p, _) => p.collect_leaves(out),
        }
    }
}

/// Canonical, fully parenthesized serialization. Also used as the hyperedge
/// label of path predicates, so two paths are equal iff their text is.
impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathExpr::Link(iri) => write!(f, "<{iri}>"),
            PathExpr::Var(v) => write!(f, "?{v}"),
            PathExpr::Seq(l, r) => write!(f, "({l}/{r})"),
            PathExpr::Alt(l, r) => write!(f, "({l}|{r})"),
            PathExpr::Inv(p) => write!(f, "^{p}"),
            PathExpr::Mult(p, q) => write!(f, "{p}{}", q.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: PathExpr,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: PathExpr, object: Term) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// Type tag of a filter leaf, decided purely by literal syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafType {
    Variable,
    Iri,
    String,
    Number,
    Boolean,
}

impl LeafType {
    pub fn of(term: &Term) -> LeafType {
        match term {
            Term::Var(_) | Term::BlankNode(_) => LeafType::Variable,
            Term::Iri(_) => LeafType::Iri,
            Term::Literal(Literal::String { .. }) => LeafType::String,
            Term::Literal(Literal::Number(_)) => LeafType::Number,
            Term::Literal(Literal::Boolean(_)) => LeafType::Boolean,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LeafType::Variable => "variable",
            LeafType::Iri => "iri",
            LeafType::String => "string",
            LeafType::Number => "number",
            LeafType::Boolean => "boolean",
        }
    }
}

/// Expression parse tree used for FILTER constraints and every other
/// expression position (BIND, projections, HAVING, ORDER BY).
///
/// Operator names are the SPARQL symbol for infix/prefix operators
/// (`&&`, `>`, `!`, ...), the upper-cased keyword for built-ins and
/// aggregates (`REGEX`, `COUNT`, `COUNT DISTINCT`), or `<iri>` for
/// extension function calls. `COUNT` with no arguments is `COUNT(*)`;
/// a second argument of `GROUP_CONCAT` is its separator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FilterNode {
    Operator {
        name: String,
        args: Vec<FilterNode>,
    },
    Leaf(Term),
    /// `EXISTS` / `NOT EXISTS` carrying its group as an opaque block.
    Exists {
        negated: bool,
        group: Box<OperatorBlock>,
    },
}

impl FilterNode {
    pub fn op(name: impl Into<String>, args: Vec<FilterNode>) -> Self {
        FilterNode::Operator {
            name: name.into(),
            args,
        }
    }

    /// Operator name of this node, or a synthetic name for leaves.
    pub fn head_name(&self) -> String {
        match self {
            FilterNode::Operator { name, .. } => name.clone(),
            FilterNode::Leaf(t) => format!("leaf:{}", LeafType::of(t).as_str()),
            FilterNode::Exists { negated: false, .. } => "EXISTS".to_string(),
            FilterNode::Exists { negated: true, .. } => "NOT EXISTS".to_string(),
        }
    }

    pub fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            FilterNode::Leaf(t) => f(t),
            FilterNode::Operator { args, .. } => args.iter().for_each(|a| a.visit_leaves(f)),
            FilterNode::Exists { .. } => {}
        }
    }

    pub fn visit_operators<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a [FilterNode])) {
        if let FilterNode::Operator { name, args } = self {
            f(name, args);
            args.iter().for_each(|a| a.visit_operators(f));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FilterTree {
    pub root: FilterNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockKind {
    Main,
    GraphTemplate,
    Union,
    Optional,
    Graph,
    Service,
    Subquery,
    Minus,
    Bind,
    Values,
}

impl BlockKind {
    pub const ALL: [BlockKind; 10] = [
        BlockKind::Main,
        BlockKind::GraphTemplate,
        BlockKind::Union,
        BlockKind::Optional,
        BlockKind::Graph,
        BlockKind::Service,
        BlockKind::Subquery,
        BlockKind::Minus,
        BlockKind::Bind,
        BlockKind::Values,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Main => "Main",
            BlockKind::GraphTemplate => "GraphTemplate",
            BlockKind::Union => "Union",
            BlockKind::Optional => "Optional",
            BlockKind::Graph => "Graph",
            BlockKind::Service => "Service",
            BlockKind::Subquery => "Subquery",
            BlockKind::Minus => "Minus",
            BlockKind::Bind => "Bind",
            BlockKind::Values => "Values",
        }
    }
}

impl std::str::FromStr for BlockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BlockKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown block kind {s:?}"))
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProjectionItem {
    Var(String),
    Expr { expr: FilterNode, alias: String },
}

impl ProjectionItem {
    pub fn var_name(&self) -> &str {
        match self {
            ProjectionItem::Var(v) => v,
            ProjectionItem::Expr { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum Projection {
    /// Non-SELECT forms.
    #[default]
    None,
    Star,
    Items(Vec<ProjectionItem>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderCondition {
    pub descending: bool,
    pub expr: FilterNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupCondition {
    Expr(FilterNode),
    Alias { expr: FilterNode, alias: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SolutionModifiers {
    pub distinct: bool,
    pub reduced: bool,
    pub group_by: Vec<GroupCondition>,
    pub having: Vec<FilterNode>,
    pub order_by: Vec<OrderCondition>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

/// Projection and modifiers of a SELECT, shared by top-level queries and subqueries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SelectClause {
    pub projection: Projection,
    pub modifiers: SolutionModifiers,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BlockDetail {
    None,
    /// `continues` is false for the first branch of a `UNION` chain.
    UnionBranch {
        continues: bool,
    },
    Graph {
        name: Term,
    },
    Service {
        silent: bool,
        endpoint: Term,
    },
    Subquery(Box<SelectClause>),
    Bind {
        expr: FilterNode,
        var: String,
    },
    Values {
        vars: Vec<String>,
        rows: Vec<Vec<Option<Term>>>,
        /// Trailing `VALUES` after the solution modifiers of the query.
        trailing: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperatorBlock {
    pub kind: BlockKind,
    /// Position among siblings of the same kind, dense from 0.
    pub ordinal: usize,
    pub triple_patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterTree>,
    pub children: Vec<OperatorBlock>,
    pub detail: BlockDetail,
}

impl OperatorBlock {
    pub fn new(kind: BlockKind, detail: BlockDetail) -> Self {
        OperatorBlock {
            kind,
            ordinal: 0,
            triple_patterns: Vec::new(),
            filters: Vec::new(),
            children: Vec::new(),
            detail,
        }
    }

    /// Pre-order traversal with each block's key path.
    pub fn walk<'a>(&'a self, key: &mut Vec<(BlockKind, usize)>, f: &mut impl FnMut(&BlockKey, &'a OperatorBlock)) {
        key.push((self.kind, self.ordinal));
        f(&BlockKey(key.clone()), self);
        for child in &self.children {
            child.walk(key, f);
        }
        key.pop();
    }

    pub(crate) fn assign_ordinals(&mut self) {
        let mut seen: Vec<(BlockKind, usize)> = Vec::new();
        for child in &mut self.children {
            let slot = match seen.iter_mut().find(|(k, _)| *k == child.kind) {
                Some(slot) => slot,
                None => {
                    seen.push((child.kind, 0));
                    seen.last_mut().unwrap()
                }
            };
            child.ordinal = slot.1;
            slot.1 += 1;
            child.assign_ordinals();
        }
    }
}

/// Identifies a block by its `(kind, ordinal)` path from the root.
/// Blocks of two queries are paired when their keys are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey(pub Vec<(BlockKind, usize)>);

impl BlockKey {
    pub fn kind(&self) -> BlockKind {
        self.0.last().map(|(k, _)| *k).unwrap_or(BlockKind::Main)
    }
}

impl fmt::Display for BlockKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (kind, ord)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            match kind {
                BlockKind::Main | BlockKind::GraphTemplate => write!(f, "{kind}")?,
                _ => write!(f, "{kind}#{ord}")?,
            }
        }
        Ok(())
    }
}

/// Parses the `Display` form, e.g. `Main/Optional#0`.
impl std::str::FromStr for BlockKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split('/')
            .map(|part| match part.split_once('#') {
                Some((kind, ord)) => Ok((
                    kind.parse()?,
                    ord.parse().map_err(|_| format!("bad ordinal in {part:?}"))?,
                )),
                None => Ok((part.parse()?, 0)),
            })
            .collect::<Result<_, String>>()
            .map(BlockKey)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AggregateKind {
    Count,
    Sum,
    Min,
    Max,
    Avg,
    Sample,
    GroupConcat,
}

impl AggregateKind {
    pub fn from_keyword(upper: &str) -> Option<AggregateKind> {
        Some(match upper {
            "COUNT" => AggregateKind::Count,
            "SUM" => AggregateKind::Sum,
            "MIN" => AggregateKind::Min,
            "MAX" => AggregateKind::Max,
            "AVG" => AggregateKind::Avg,
            "SAMPLE" => AggregateKind::Sample,
            "GROUP_CONCAT" => AggregateKind::GroupConcat,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            AggregateKind::Count => "COUNT",
            AggregateKind::Sum => "SUM",
            AggregateKind::Min => "MIN",
            AggregateKind::Max => "MAX",
            AggregateKind::Avg => "AVG",
            AggregateKind::Sample => "SAMPLE",
            AggregateKind::GroupConcat => "GROUP_CONCAT",
        }
    }

    /// Recognizes aggregate operator names, with or without `DISTINCT`.
    pub fn from_operator_name(name: &str) -> Option<AggregateKind> {
        AggregateKind::from_keyword(name.strip_suffix(" DISTINCT").unwrap_or(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DatasetClause {
    Default(String),
    Named(String),
}

/// A parsed SPARQL query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub form: QueryForm,
    pub select: SelectClause,
    /// Ordered, duplicate-free names of the projected variables. Empty for
    /// non-SELECT forms; `SELECT *` expands to the in-scope body variables.
    pub projection_vars: Vec<String>,
    /// `DESCRIBE` targets; empty with `describe_star` for `DESCRIBE *`.
    pub describe_targets: Vec<Term>,
    pub describe_star: bool,
    pub dataset: Vec<DatasetClause>,
    /// `CONSTRUCT` template, present iff the form is CONSTRUCT.
    pub template: Option<OperatorBlock>,
    /// `WHERE` body rooted in the Main block. Absent only for a DESCRIBE without WHERE.
    pub body: Option<OperatorBlock>,
    /// Aggregate calls anywhere in the query, in document order.
    pub aggregations: Vec<AggregateKind>,
    pub term_set: BTreeSet<Term>,
    pub raw_text: String,
}

impl QueryAst {
    /// Every block in document order: the template first, then the body tree.
    pub fn blocks(&self) -> Vec<(BlockKey, &OperatorBlock)> {
        let mut out = Vec::new();
        let mut key = Vec::new();
        for root in self.template.iter().chain(self.body.iter()) {
            root.walk(&mut key, &mut |k, b| out.push((k.clone(), b)));
        }
        out
    }

    pub fn triple_pattern_count(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.triple_patterns.len()).sum()
    }

    /// Structural equality, ignoring the raw query text.
    pub fn same_structure(&self, other: &QueryAst) -> bool {
        self.form == other.form
            && self.select == other.select
            && self.projection_vars == other.projection_vars
            && self.describe_targets == other.describe_targets
            && self.describe_star == other.describe_star
            && self.dataset == other.dataset
            && self.template == other.template
            && self.body == other.body
            && self.aggregations == other.aggregations
            && self.term_set == other.term_set
    }
}
