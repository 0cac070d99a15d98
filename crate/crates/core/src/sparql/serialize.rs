//! Single-line pretty printer and structural templates.
//!
//! Both share one printer; they differ only in how terms are rendered.

use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::ast::*;

/// A query with every IRI, literal and variable replaced by a positional
/// placeholder. Constants are numbered per occurrence and variables per
/// distinct name, both in document order, so join structure is retained.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryTemplate {
    pub canonical_text: String,
}

/// Prints the query in the supported surface syntax with full IRIs.
pub fn serialize(ast: &QueryAst) -> String {
    let mut p = Printer {
        out: String::new(),
        style: Plain,
    };
    p.query(ast);
    p.out
}

pub fn template_of(ast: &QueryAst) -> QueryTemplate {
    let mut p = Printer {
        out: String::new(),
        style: Placeholders::default(),
    };
    p.query(ast);
    QueryTemplate { canonical_text: p.out }
}

trait TermStyle {
    fn term(&mut self, t: &Term) -> String;
    fn var(&mut self, name: &str) -> String {
        self.term(&Term::Var(name.to_string()))
    }
    fn iri(&mut self, iri: &str) -> String {
        self.term(&Term::Iri(iri.to_string()))
    }
    fn count(&mut self, n: u64) -> String;
}

struct Plain;

impl TermStyle for Plain {
    fn term(&mut self, t: &Term) -> String {
        t.to_string()
    }

    fn count(&mut self, n: u64) -> String {
        n.to_string()
    }
}

#[derive(Default)]
struct Placeholders {
    vars: HashMap<Term, usize>,
    constants: usize,
}

impl Placeholders {
    fn constant(&mut self, kind: &str) -> String {
        let s = format!("${kind}{}", self.constants);
        self.constants += 1;
        s
    }
}

impl TermStyle for Placeholders {
    fn term(&mut self, t: &Term) -> String {
        match t {
            Term::Var(_) | Term::BlankNode(_) => {
                let next = self.vars.len();
                let n = *self.vars.entry(t.clone()).or_insert(next);
                format!("?v{n}")
            }
            Term::Iri(_) => self.constant("iri"),
            Term::Literal(_) => self.constant("lit"),
        }
    }

    fn count(&mut self, _n: u64) -> String {
        self.constant("lit")
    }
}

struct Printer<S> {
    out: String,
    style: S,
}

fn is_infix(name: &str) -> bool {
    matches!(
        name,
        "||" | "&&" | "=" | "!=" | "<" | ">" | "<=" | ">=" | "+" | "-" | "*" | "/"
    )
}

impl<S: TermStyle> Printer<S> {
    fn push(&mut self, s: &str) {
        if !self.out.is_empty() && !self.out.ends_with(['(', ' ']) && !s.starts_with([')', ',']) {
            self.out.push(' ');
        }
        self.out.push_str(s);
    }

    fn term(&mut self, t: &Term) {
        let s = self.style.term(t);
        self.push(&s);
    }

    fn query(&mut self, ast: &QueryAst) {
        self.push(ast.form.as_str());
        match ast.form {
            QueryForm::Select => self.select_head(&ast.select),
            QueryForm::Construct => {
                if let Some(t) = &ast.template {
                    self.group(t);
                }
            }
            QueryForm::Describe => {
                if ast.describe_star {
                    self.push("*");
                }
                for t in &ast.describe_targets {
                    self.term(t);
                }
            }
            QueryForm::Ask => {}
        }
        for d in &ast.dataset {
            let (kw, iri) = match d {
                DatasetClause::Default(i) => ("FROM", i),
                DatasetClause::Named(i) => ("FROM NAMED", i),
            };
            self.push(kw);
            let s = self.style.iri(iri);
            self.push(&s);
        }
        if let Some(body) = &ast.body {
            self.push("WHERE");
            self.group(body);
        }
        self.modifiers(&ast.select.modifiers);
        if let Some(body) = &ast.body {
            self.trailing_values(body);
        }
    }

    fn select_head(&mut self, clause: &SelectClause) {
        if clause.modifiers.distinct {
            self.push("DISTINCT");
        } else if clause.modifiers.reduced {
            self.push("REDUCED");
        }
        match &clause.projection {
            Projection::Star | Projection::None => self.push("*"),
            Projection::Items(items) => {
                for item in items {
                    match item {
                        ProjectionItem::Var(v) => {
                            let s = self.style.var(v);
                            self.push(&s);
                        }
                        ProjectionItem::Expr { expr, alias } => {
                            self.push("(");
                            self.expr(expr);
                            self.push("AS");
                            let s = self.style.var(alias);
                            self.push(&s);
                            self.push(")");
                        }
                    }
                }
            }
        }
    }

    fn modifiers(&mut self, m: &SolutionModifiers) {
        if !m.group_by.is_empty() {
            self.push("GROUP BY");
            for g in &m.group_by {
                match g {
                    GroupCondition::Expr(FilterNode::Leaf(t @ Term::Var(_))) => self.term(t),
                    GroupCondition::Expr(e) => {
                        self.push("(");
                        self.expr(e);
                        self.push(")");
                    }
                    GroupCondition::Alias { expr, alias } => {
                        self.push("(");
                        self.expr(expr);
                        self.push("AS");
                        let s = self.style.var(alias);
                        self.push(&s);
                        self.push(")");
                    }
                }
            }
        }
        if !m.having.is_empty() {
            self.push("HAVING");
            for h in &m.having {
                self.push("(");
                self.expr(h);
                self.push(")");
            }
        }
        if !m.order_by.is_empty() {
            self.push("ORDER BY");
            for o in &m.order_by {
                match (&o.expr, o.descending) {
                    (FilterNode::Leaf(t @ Term::Var(_)), false) => self.term(t),
                    (e, desc) => {
                        self.push(if desc { "DESC(" } else { "ASC(" });
                        self.expr(e);
                        self.push(")");
                    }
                }
            }
        }
        if let Some(n) = m.limit {
            self.push("LIMIT");
            let s = self.style.count(n);
            self.push(&s);
        }
        if let Some(n) = m.offset {
            self.push("OFFSET");
            let s = self.style.count(n);
            self.push(&s);
        }
    }

    fn trailing_values(&mut self, block: &OperatorBlock) {
        for c in &block.children {
            if matches!(c.detail, BlockDetail::Values { trailing: true, .. }) {
                self.block_child(c);
            }
        }
    }

    fn group(&mut self, block: &OperatorBlock) {
        self.push("{");
        self.group_contents(block);
        self.push("}");
    }

    fn group_contents(&mut self, block: &OperatorBlock) {
        for tp in &block.triple_patterns {
            self.term(&tp.subject);
            self.path(&tp.predicate);
            self.term(&tp.object);
            self.push(".");
        }
        for child in &block.children {
            if matches!(child.detail, BlockDetail::Values { trailing: true, .. }) {
                continue;
            }
            self.block_child(child);
        }
        for f in &block.filters {
            self.push("FILTER (");
            self.expr(&f.root);
            self.push(")");
        }
    }

    fn block_child(&mut self, child: &OperatorBlock) {
        match &child.detail {
            BlockDetail::UnionBranch { continues } => {
                if *continues {
                    self.push("UNION");
                }
                self.group(child);
            }
            BlockDetail::Graph { name } => {
                self.push("GRAPH");
                self.term(name);
                self.group(child);
            }
            BlockDetail::Service { silent, endpoint } => {
                self.push("SERVICE");
                if *silent {
                    self.push("SILENT");
                }
                self.term(endpoint);
                self.group(child);
            }
            BlockDetail::Subquery(clause) => {
                self.push("{ SELECT");
                self.select_head(clause);
                self.push("WHERE");
                self.group(child);
                self.modifiers(&clause.modifiers);
                self.trailing_values(child);
                self.push("}");
            }
            BlockDetail::Bind { expr, var } => {
                self.push("BIND (");
                self.expr(expr);
                self.push("AS");
                let s = self.style.var(var);
                self.push(&s);
                self.push(")");
            }
            BlockDetail::Values { vars, rows, .. } => {
                self.push("VALUES (");
                for v in vars {
                    let s = self.style.var(v);
                    self.push(&s);
                }
                self.push(") {");
                for row in rows {
                    self.push("(");
                    for cell in row {
                        match cell {
                            Some(t) => self.term(t),
                            None => self.push("UNDEF"),
                        }
                    }
                    self.push(")");
                }
                self.push("}");
            }
            BlockDetail::None => {
                let kw = match child.kind {
                    BlockKind::Optional => "OPTIONAL",
                    BlockKind::Minus => "MINUS",
                    _ => "",
                };
                if !kw.is_empty() {
                    self.push(kw);
                }
                self.group(child);
            }
        }
    }

    fn path(&mut self, p: &PathExpr) {
        let mut s = String::new();
        self.path_into(p, &mut s);
        self.push(&s);
    }

    fn path_into(&mut self, p: &PathExpr, s: &mut String) {
        match p {
            PathExpr::Link(iri) => s.push_str(&self.style.iri(iri)),
            PathExpr::Var(v) => s.push_str(&self.style.var(v)),
            PathExpr::Seq(l, r) | PathExpr::Alt(l, r) => {
                s.push('(');
                self.path_into(l, s);
                s.push(if matches!(p, PathExpr::Seq(..)) { '/' } else { '|' });
                self.path_into(r, s);
                s.push(')');
            }
            PathExpr::Inv(inner) => {
                s.push('^');
                self.path_into(inner, s);
            }
            PathExpr::Mult(inner, q) => {
                self.path_into(inner, s);
                s.push(q.symbol());
            }
        }
    }

    fn expr(&mut self, node: &FilterNode) {
        match node {
            FilterNode::Leaf(t) => self.term(t),
            FilterNode::Exists { negated, group } => {
                self.push(if *negated { "NOT EXISTS" } else { "EXISTS" });
                self.group(group);
            }
            FilterNode::Operator { name, args } => {
                if is_infix(name) && args.len() == 2 {
                    self.push("(");
                    self.expr(&args[0]);
                    self.push(name);
                    self.expr(&args[1]);
                    self.push(")");
                } else if matches!(name.as_str(), "!" | "-" | "+") && args.len() == 1 {
                    let mut head = name.clone();
                    head.push('(');
                    self.push(&head);
                    self.expr(&args[0]);
                    self.push(")");
                } else if name == "IN" || name == "NOT IN" {
                    self.push("(");
                    self.expr(&args[0]);
                    self.push(name);
                    self.push("(");
                    self.arg_list(&args[1..]);
                    self.push(")");
                    self.push(")");
                } else if let Some(agg) = AggregateKind::from_operator_name(name) {
                    let mut head = String::new();
                    write!(head, "{}(", agg.keyword()).unwrap();
                    self.push(&head);
                    if name.ends_with(" DISTINCT") {
                        self.push("DISTINCT");
                    }
                    match args.first() {
                        None => self.push("*"),
                        Some(a) => self.expr(a),
                    }
                    if let (AggregateKind::GroupConcat, Some(FilterNode::Leaf(sep))) = (agg, args.get(1)) {
                        self.push("; SEPARATOR =");
                        let mut lit = String::new();
                        match sep {
                            Term::Literal(Literal::String { value, .. }) => {
                                write_escaped(&mut lit, value).unwrap();
                            }
                            other => lit = other.to_string(),
                        }
                        self.push(&lit);
                    }
                    self.push(")");
                } else {
                    let mut head = name.clone();
                    head.push('(');
                    self.push(&head);
                    self.arg_list(args);
                    self.push(")");
                }
            }
        }
    }

    fn arg_list(&mut self, args: &[FilterNode]) {
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.push(",");
            }
            self.expr(a);
        }
    }
}
