//! Recursive-descent parser for the supported SPARQL subset.
//!
//! The tree keeps the surface syntax: prefixed names are expanded, plain
//! nested groups are flattened into their enclosing block, and every other
//! group-level construct becomes its own [`OperatorBlock`].

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

const UPDATE_KEYWORDS: [&str; 10] = [
    "INSERT", "DELETE", "LOAD", "CLEAR", "CREATE", "DROP", "COPY", "MOVE", "ADD", "WITH",
];

/// Accepted argument counts of built-in functions; `None` is unbounded.
fn builtin_arity(name: &str) -> Option<(usize, Option<usize>)> {
    let a = match name {
        "RAND" | "NOW" | "UUID" | "STRUUID" => (0, Some(0)),
        "BNODE" => (0, Some(1)),
        "STR" | "LANG" | "DATATYPE" | "BOUND" | "IRI" | "URI" | "ABS" | "CEIL" | "FLOOR" | "ROUND" | "STRLEN"
        | "UCASE" | "LCASE" | "ENCODE_FOR_URI" | "YEAR" | "MONTH" | "DAY" | "HOURS" | "MINUTES" | "SECONDS"
        | "TIMEZONE" | "TZ" | "MD5" | "SHA1" | "SHA256" | "SHA384" | "SHA512" | "ISIRI" | "ISURI" | "ISBLANK"
        | "ISLITERAL" | "ISNUMERIC" => (1, Some(1)),
        "LANGMATCHES" | "CONTAINS" | "STRSTARTS" | "STRENDS" | "STRBEFORE" | "STRAFTER" | "STRLANG" | "STRDT"
        | "SAMETERM" => (2, Some(2)),
        "IF" => (3, Some(3)),
        "REGEX" | "SUBSTR" => (2, Some(3)),
        "REPLACE" => (3, Some(4)),
        "CONCAT" | "COALESCE" => (0, None),
        _ => return None,
    };
    Some(a)
}

/// Parses one query. Updates and constructs outside the supported subset
/// are rejected with the byte offset of the offending token.
pub fn parse(text: &str) -> Result<QueryAst, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        prefixes: HashMap::new(),
        base: None,
        anon: 0,
        aggregations: Vec::new(),
    };
    let mut ast = p.query()?;
    ast.raw_text = text.to_string();
    Ok(ast)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prefixes: HashMap<String, String>,
    base: Option<String>,
    anon: usize,
    aggregations: Vec<AggregateKind>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_n(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    /// Errors at end of input point at the last real token.
    fn err(&self, msg: impl Into<String>) -> ParseError {
        let at = if matches!(self.peek(), Tok::Eof) && self.pos > 0 {
            self.toks[self.pos - 1].start
        } else {
            self.toks[self.pos].start
        };
        let msg = msg.into();
        if matches!(self.peek(), Tok::Eof) {
            ParseError::new(at, format!("unexpected end of input: {msg}"))
        } else {
            ParseError::new(at, msg)
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn is_kw_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_n(n), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {kw}")))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{p}'")))
        }
    }

    fn expect_var(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.err("expected variable")),
        }
    }

    fn resolve(&self, iri: &str) -> String {
        match &self.base {
            Some(base) if !iri.contains(':') => format!("{base}{iri}"),
            _ => iri.to_string(),
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> PResult<String> {
        match self.prefixes.get(prefix) {
            Some(ns) => Ok(format!("{ns}{local}")),
            None => Err(self.err(format!("undeclared prefix '{prefix}:'"))),
        }
    }

    /// IRI at the current position (IRIREF or prefixed name), if any.
    fn try_iri(&mut self) -> PResult<Option<String>> {
        let iri = match self.peek().clone() {
            Tok::IriRef(iri) => self.resolve(&iri),
            Tok::PName { prefix, local } => self.expand(&prefix, &local)?,
            _ => return Ok(None),
        };
        self.bump();
        Ok(Some(iri))
    }

    fn expect_iri(&mut self) -> PResult<String> {
        match self.try_iri()? {
            Some(iri) => Ok(iri),
            None => Err(self.err("expected IRI")),
        }
    }

    // ---------------------------------------------------------------- query

    fn query(&mut self) -> PResult<QueryAst> {
        self.prologue()?;
        if let Tok::Ident(word) = self.peek() {
            let upper = word.to_ascii_uppercase();
            if UPDATE_KEYWORDS.contains(&upper.as_str()) {
                return Err(self.err(format!("update operation {upper} is not supported")));
            }
        }
        let mut ast = QueryAst {
            form: QueryForm::Select,
            select: SelectClause::default(),
            projection_vars: Vec::new(),
            describe_targets: Vec::new(),
            describe_star: false,
            dataset: Vec::new(),
            template: None,
            body: None,
            aggregations: Vec::new(),
            term_set: BTreeSet::new(),
            raw_text: String::new(),
        };
        if self.eat_kw("SELECT") {
            ast.form = QueryForm::Select;
            ast.select = self.select_clause()?;
            ast.dataset = self.dataset_clauses()?;
            ast.body = Some(self.where_clause()?);
        } else if self.eat_kw("CONSTRUCT") {
            ast.form = QueryForm::Construct;
            if self.is_punct("{") {
                ast.template = Some(self.construct_template()?);
                ast.dataset = self.dataset_clauses()?;
                ast.body = Some(self.where_clause()?);
            } else {
                ast.dataset = self.dataset_clauses()?;
                self.expect_kw("WHERE")?;
                let template = self.construct_template()?;
                let mut body = OperatorBlock::new(BlockKind::Main, BlockDetail::None);
                body.triple_patterns = template.triple_patterns.clone();
                ast.template = Some(template);
                ast.body = Some(body);
            }
        } else if self.eat_kw("DESCRIBE") {
            ast.form = QueryForm::Describe;
            if self.eat_punct("*") {
                ast.describe_star = true;
            } else {
                loop {
                    if let Tok::Var(v) = self.peek().clone() {
                        self.bump();
                        ast.describe_targets.push(Term::Var(v));
                    } else if let Some(iri) = self.try_iri()? {
                        ast.describe_targets.push(Term::Iri(iri));
                    } else {
                        break;
                    }
                }
                if ast.describe_targets.is_empty() {
                    return Err(self.err("expected DESCRIBE target"));
                }
            }
            ast.dataset = self.dataset_clauses()?;
            if self.is_kw("WHERE") || self.is_punct("{") {
                ast.body = Some(self.where_clause()?);
            }
        } else if self.eat_kw("ASK") {
            ast.form = QueryForm::Ask;
            ast.dataset = self.dataset_clauses()?;
            ast.body = Some(self.where_clause()?);
        } else {
            return Err(self.err("expected SELECT, CONSTRUCT, DESCRIBE or ASK"));
        }
        let mods = self.solution_modifiers()?;
        ast.select.modifiers = SolutionModifiers {
            distinct: ast.select.modifiers.distinct,
            reduced: ast.select.modifiers.reduced,
            ..mods
        };
        if self.is_kw("VALUES") {
            let mut values = self.inline_data()?;
            if let BlockDetail::Values { trailing, .. } = &mut values.detail {
                *trailing = true;
            }
            ast.body
                .get_or_insert_with(|| OperatorBlock::new(BlockKind::Main, BlockDetail::None))
                .children
                .push(values);
        }
        if !matches!(self.peek(), Tok::Eof) {
            return Err(self.err("unexpected trailing input"));
        }

        if let Some(t) = ast.template.as_mut() {
            t.kind = BlockKind::GraphTemplate;
            t.assign_ordinals();
        }
        if let Some(b) = ast.body.as_mut() {
            b.kind = BlockKind::Main;
            b.ordinal = 0;
            b.assign_ordinals();
        }
        ast.projection_vars = match ast.form {
            QueryForm::Select => projection_vars(&ast.select.projection, ast.body.as_ref()),
            _ => Vec::new(),
        };
        ast.aggregations = std::mem::take(&mut self.aggregations);
        ast.term_set = term_set(&ast);
        Ok(ast)
    }

    fn prologue(&mut self) -> PResult<()> {
        loop {
            if self.eat_kw("BASE") {
                match self.bump() {
                    Tok::IriRef(iri) => self.base = Some(iri),
                    _ => return Err(self.err("expected IRI after BASE")),
                }
            } else if self.eat_kw("PREFIX") {
                let prefix = match self.peek().clone() {
                    Tok::PName { prefix, local } if local.is_empty() => prefix,
                    _ => return Err(self.err("expected prefix name")),
                };
                self.bump();
                let iri = match self.peek().clone() {
                    Tok::IriRef(iri) => self.resolve(&iri),
                    _ => return Err(self.err("expected IRI in PREFIX declaration")),
                };
                self.bump();
                self.prefixes.insert(prefix, iri);
            } else {
                return Ok(());
            }
        }
    }

    /// `SELECT` has been consumed. Solution modifiers are parsed by the caller.
    fn select_clause(&mut self) -> PResult<SelectClause> {
        let mut clause = SelectClause::default();
        if self.eat_kw("DISTINCT") {
            clause.modifiers.distinct = true;
        } else if self.eat_kw("REDUCED") {
            clause.modifiers.reduced = true;
        }
        if self.eat_punct("*") {
            clause.projection = Projection::Star;
            return Ok(clause);
        }
        let mut items = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Var(v) => {
                    self.bump();
                    items.push(ProjectionItem::Var(v));
                }
                Tok::Punct("(") => {
                    self.bump();
                    let expr = self.expression()?;
                    self.expect_kw("AS")?;
                    let alias = self.expect_var()?;
                    self.expect_punct(")")?;
                    items.push(ProjectionItem::Expr { expr, alias });
                }
                _ => break,
            }
        }
        if items.is_empty() {
            return Err(self.err("expected projection"));
        }
        clause.projection = Projection::Items(items);
        Ok(clause)
    }

    fn dataset_clauses(&mut self) -> PResult<Vec<DatasetClause>> {
        let mut out = Vec::new();
        while self.eat_kw("FROM") {
            if self.eat_kw("NAMED") {
                out.push(DatasetClause::Named(self.expect_iri()?));
            } else {
                out.push(DatasetClause::Default(self.expect_iri()?));
            }
        }
        Ok(out)
    }

    fn where_clause(&mut self) -> PResult<OperatorBlock> {
        self.eat_kw("WHERE");
        self.group()
    }

    fn solution_modifiers(&mut self) -> PResult<SolutionModifiers> {
        let mut m = SolutionModifiers::default();
        if self.is_kw("GROUP") && self.is_kw_at(1, "BY") {
            self.bump();
            self.bump();
            loop {
                let cond = if self.eat_punct("(") {
                    let expr = self.expression()?;
                    let cond = if self.eat_kw("AS") {
                        GroupCondition::Alias {
                            expr,
                            alias: self.expect_var()?,
                        }
                    } else {
                        GroupCondition::Expr(expr)
                    };
                    self.expect_punct(")")?;
                    cond
                } else if let Tok::Var(v) = self.peek().clone() {
                    self.bump();
                    GroupCondition::Expr(FilterNode::Leaf(Term::Var(v)))
                } else if let Some(call) = self.try_call()? {
                    GroupCondition::Expr(call)
                } else {
                    break;
                };
                m.group_by.push(cond);
            }
            if m.group_by.is_empty() {
                return Err(self.err("expected GROUP BY condition"));
            }
        }
        if self.eat_kw("HAVING") {
            while let Some(c) = self.try_constraint()? {
                m.having.push(c);
            }
            if m.having.is_empty() {
                return Err(self.err("expected HAVING condition"));
            }
        }
        if self.is_kw("ORDER") && self.is_kw_at(1, "BY") {
            self.bump();
            self.bump();
            loop {
                let cond = if self.is_kw("ASC") || self.is_kw("DESC") {
                    let descending = self.is_kw("DESC");
                    self.bump();
                    self.expect_punct("(")?;
                    let expr = self.expression()?;
                    self.expect_punct(")")?;
                    OrderCondition { descending, expr }
                } else if let Tok::Var(v) = self.peek().clone() {
                    self.bump();
                    OrderCondition {
                        descending: false,
                        expr: FilterNode::Leaf(Term::Var(v)),
                    }
                } else if let Some(expr) = self.try_constraint()? {
                    OrderCondition {
                        descending: false,
                        expr,
                    }
                } else {
                    break;
                };
                m.order_by.push(cond);
            }
            if m.order_by.is_empty() {
                return Err(self.err("expected ORDER BY condition"));
            }
        }
        loop {
            if m.limit.is_none() && self.eat_kw("LIMIT") {
                m.limit = Some(self.unsigned()?);
            } else if m.offset.is_none() && self.eat_kw("OFFSET") {
                m.offset = Some(self.unsigned()?);
            } else {
                break;
            }
        }
        Ok(m)
    }

    fn unsigned(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Integer(n) => {
                let v = n.parse().map_err(|_| self.err("integer out of range"))?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.err("expected integer")),
        }
    }

    fn construct_template(&mut self) -> PResult<OperatorBlock> {
        self.expect_punct("{")?;
        let mut block = OperatorBlock::new(BlockKind::GraphTemplate, BlockDetail::None);
        loop {
            if self.eat_punct("}") {
                return Ok(block);
            }
            if self.eat_punct(".") {
                continue;
            }
            self.triples_same_subject(&mut block.triple_patterns)?;
            if !self.is_punct("}") {
                self.expect_punct(".")?;
            }
        }
    }

    // --------------------------------------------------------------- groups

    /// Parses `{ ... }` into a block whose kind the caller assigns.
    fn group(&mut self) -> PResult<OperatorBlock> {
        self.expect_punct("{")?;
        let mut block = OperatorBlock::new(BlockKind::Main, BlockDetail::None);
        if self.is_kw("SELECT") {
            self.bump();
            let sub = self.sub_select()?;
            block.children.push(sub);
            self.expect_punct("}")?;
            return Ok(block);
        }
        loop {
            if self.eat_punct("}") {
                return Ok(block);
            }
            if self.eat_punct(".") {
                continue;
            }
            if self.eat_kw("OPTIONAL") {
                block
                    .children
                    .push(self.kinded_group(BlockKind::Optional, BlockDetail::None)?);
            } else if self.eat_kw("MINUS") {
                block
                    .children
                    .push(self.kinded_group(BlockKind::Minus, BlockDetail::None)?);
            } else if self.eat_kw("GRAPH") {
                let name = self.var_or_iri()?;
                block
                    .children
                    .push(self.kinded_group(BlockKind::Graph, BlockDetail::Graph { name })?);
            } else if self.eat_kw("SERVICE") {
                let silent = self.eat_kw("SILENT");
                let endpoint = self.var_or_iri()?;
                block
                    .children
                    .push(self.kinded_group(BlockKind::Service, BlockDetail::Service { silent, endpoint })?);
            } else if self.eat_kw("FILTER") {
                let root = self
                    .try_constraint()?
                    .ok_or_else(|| self.err("expected FILTER constraint"))?;
                block.filters.push(FilterTree { root });
            } else if self.eat_kw("BIND") {
                self.expect_punct("(")?;
                let expr = self.expression()?;
                self.expect_kw("AS")?;
                let var = self.expect_var()?;
                self.expect_punct(")")?;
                block
                    .children
                    .push(OperatorBlock::new(BlockKind::Bind, BlockDetail::Bind { expr, var }));
            } else if self.is_kw("VALUES") {
                block.children.push(self.inline_data()?);
            } else if self.is_punct("{") {
                let first = self.group()?;
                if self.is_kw("UNION") {
                    let mut branch = first;
                    branch.kind = BlockKind::Union;
                    branch.detail = BlockDetail::UnionBranch { continues: false };
                    block.children.push(branch);
                    while self.eat_kw("UNION") {
                        let mut next = self.group()?;
                        next.kind = BlockKind::Union;
                        next.detail = BlockDetail::UnionBranch { continues: true };
                        block.children.push(next);
                    }
                } else {
                    block.triple_patterns.extend(first.triple_patterns);
                    block.filters.extend(first.filters);
                    block.children.extend(first.children);
                }
            } else {
                self.triples_same_subject(&mut block.triple_patterns)?;
                if !self.is_punct("}") && !self.eat_punct(".") && !self.starts_pattern_keyword() {
                    return Err(self.err("expected '.' or '}'"));
                }
            }
        }
    }

    fn starts_pattern_keyword(&self) -> bool {
        ["OPTIONAL", "MINUS", "GRAPH", "SERVICE", "FILTER", "BIND", "VALUES"]
            .iter()
            .any(|k| self.is_kw(k))
            || self.is_punct("{")
    }

    fn kinded_group(&mut self, kind: BlockKind, detail: BlockDetail) -> PResult<OperatorBlock> {
        let mut b = self.group()?;
        b.kind = kind;
        b.detail = detail;
        Ok(b)
    }

    /// `SELECT` consumed; parses the rest of a subquery into a Subquery block.
    fn sub_select(&mut self) -> PResult<OperatorBlock> {
        let mut clause = self.select_clause()?;
        let mut block = self.where_clause()?;
        let mods = self.solution_modifiers()?;
        clause.modifiers = SolutionModifiers {
            distinct: clause.modifiers.distinct,
            reduced: clause.modifiers.reduced,
            ..mods
        };
        if self.is_kw("VALUES") {
            let mut values = self.inline_data()?;
            if let BlockDetail::Values { trailing, .. } = &mut values.detail {
                *trailing = true;
            }
            block.children.push(values);
        }
        block.kind = BlockKind::Subquery;
        block.detail = BlockDetail::Subquery(Box::new(clause));
        Ok(block)
    }

    fn var_or_iri(&mut self) -> PResult<Term> {
        if let Tok::Var(v) = self.peek().clone() {
            self.bump();
            return Ok(Term::Var(v));
        }
        Ok(Term::Iri(self.expect_iri()?))
    }

    fn inline_data(&mut self) -> PResult<OperatorBlock> {
        self.expect_kw("VALUES")?;
        let mut vars = Vec::new();
        let single = if let Tok::Var(v) = self.peek().clone() {
            self.bump();
            vars.push(v);
            true
        } else {
            self.expect_punct("(")?;
            while let Tok::Var(v) = self.peek().clone() {
                self.bump();
                vars.push(v);
            }
            self.expect_punct(")")?;
            false
        };
        self.expect_punct("{")?;
        let mut rows = Vec::new();
        loop {
            if self.eat_punct("}") {
                break;
            }
            if single {
                rows.push(vec![self.data_value()?]);
                continue;
            }
            self.expect_punct("(")?;
            let mut row = Vec::new();
            while !self.eat_punct(")") {
                row.push(self.data_value()?);
            }
            if row.len() != vars.len() {
                return Err(self.err("VALUES row width does not match variable list"));
            }
            rows.push(row);
        }
        Ok(OperatorBlock::new(
            BlockKind::Values,
            BlockDetail::Values {
                vars,
                rows,
                trailing: false,
            },
        ))
    }

    fn data_value(&mut self) -> PResult<Option<Term>> {
        if self.eat_kw("UNDEF") {
            return Ok(None);
        }
        if let Some(iri) = self.try_iri()? {
            return Ok(Some(Term::Iri(iri)));
        }
        match self.try_literal()? {
            Some(l) => Ok(Some(Term::Literal(l))),
            None => Err(self.err("expected data value")),
        }
    }

    // -------------------------------------------------------------- triples

    fn fresh_bnode(&mut self) -> Term {
        let t = Term::BlankNode(format!("anon{}", self.anon));
        self.anon += 1;
        t
    }

    fn triples_same_subject(&mut self, out: &mut Vec<TriplePattern>) -> PResult<()> {
        if self.is_punct("[") && !matches!(self.peek_n(1), Tok::Punct("]")) {
            let subject = self.blank_property_list(out)?;
            if self.is_punct(".") || self.is_punct("}") {
                return Ok(());
            }
            return self.property_list(subject, out);
        }
        let subject = self.graph_term()?;
        self.property_list(subject, out)
    }

    fn property_list(&mut self, subject: Term, out: &mut Vec<TriplePattern>) -> PResult<()> {
        loop {
            let verb = self.verb()?;
            loop {
                let mut nested = Vec::new();
                let object = if self.is_punct("[") && !matches!(self.peek_n(1), Tok::Punct("]")) {
                    self.blank_property_list(&mut nested)?
                } else {
                    self.graph_term()?
                };
                out.push(TriplePattern::new(subject.clone(), verb.clone(), object));
                out.append(&mut nested);
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                return Ok(());
            }
            while self.eat_punct(";") {}
            if self.is_punct(".") || self.is_punct("}") || self.is_punct("]") {
                return Ok(());
            }
        }
    }

    fn blank_property_list(&mut self, out: &mut Vec<TriplePattern>) -> PResult<Term> {
        self.expect_punct("[")?;
        let node = self.fresh_bnode();
        self.property_list(node.clone(), out)?;
        self.expect_punct("]")?;
        Ok(node)
    }

    fn verb(&mut self) -> PResult<PathExpr> {
        if let Tok::Var(v) = self.peek().clone() {
            self.bump();
            return Ok(PathExpr::Var(v));
        }
        self.path_alternative()
    }

    fn path_alternative(&mut self) -> PResult<PathExpr> {
        let mut left = self.path_sequence()?;
        while self.eat_punct("|") {
            let right = self.path_sequence()?;
            left = PathExpr::Alt(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn path_sequence(&mut self) -> PResult<PathExpr> {
        let mut left = self.path_elt_or_inverse()?;
        while self.eat_punct("/") {
            let right = self.path_elt_or_inverse()?;
            left = PathExpr::Seq(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn path_elt_or_inverse(&mut self) -> PResult<PathExpr> {
        if self.eat_punct("^") {
            return Ok(PathExpr::Inv(Box::new(self.path_elt()?)));
        }
        self.path_elt()
    }

    fn path_elt(&mut self) -> PResult<PathExpr> {
        let primary = self.path_primary()?;
        let quant = match self.peek() {
            Tok::Punct("*") => PathQuantifier::ZeroOrMore,
            Tok::Punct("+") => PathQuantifier::OneOrMore,
            Tok::Punct("?") => PathQuantifier::ZeroOrOne,
            _ => return Ok(primary),
        };
        self.bump();
        Ok(PathExpr::Mult(Box::new(primary), quant))
    }

    fn path_primary(&mut self) -> PResult<PathExpr> {
        if matches!(self.peek(), Tok::Ident(s) if s == "a") {
            self.bump();
            return Ok(PathExpr::Link(RDF_TYPE.to_string()));
        }
        if let Some(iri) = self.try_iri()? {
            return Ok(PathExpr::Link(iri));
        }
        if self.eat_punct("(") {
            let inner = self.path_alternative()?;
            self.expect_punct(")")?;
            return Ok(inner);
        }
        if self.is_punct("!") {
            return Err(self.err("negated property sets are not supported"));
        }
        Err(self.err("expected predicate"))
    }

    /// Subject or object position term.
    fn graph_term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::BNode(b) => {
                self.bump();
                Ok(Term::BlankNode(b))
            }
            Tok::Punct("[") => {
                self.bump();
                self.expect_punct("]")?;
                Ok(self.fresh_bnode())
            }
            Tok::Punct("(") => Err(self.err("RDF collections are not supported")),
            _ => {
                if let Some(iri) = self.try_iri()? {
                    return Ok(Term::Iri(iri));
                }
                match self.try_literal()? {
                    Some(l) => Ok(Term::Literal(l)),
                    None => Err(self.err("expected term")),
                }
            }
        }
    }

    fn try_literal(&mut self) -> PResult<Option<Literal>> {
        let lit = match self.peek().clone() {
            Tok::Str(value) => {
                self.bump();
                let mut lang = None;
                let mut datatype = None;
                if let Tok::LangTag(tag) = self.peek().clone() {
                    self.bump();
                    lang = Some(tag);
                } else if self.eat_punct("^^") {
                    datatype = Some(self.expect_iri()?);
                }
                Literal::String { value, lang, datatype }
            }
            Tok::Integer(n) | Tok::Decimal(n) | Tok::Double(n) => {
                self.bump();
                Literal::Number(n)
            }
            Tok::Punct(sign @ ("+" | "-"))
                if matches!(self.peek_n(1), Tok::Integer(_) | Tok::Decimal(_) | Tok::Double(_)) =>
            {
                self.bump();
                let (Tok::Integer(n) | Tok::Decimal(n) | Tok::Double(n)) = self.bump() else {
                    unreachable!()
                };
                Literal::Number(format!("{sign}{n}"))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Literal::Boolean(s == "true")
            }
            _ => return Ok(None),
        };
        Ok(Some(lit))
    }

    // ---------------------------------------------------------- expressions

    /// Bracketed expression, built-in call or function call.
    fn try_constraint(&mut self) -> PResult<Option<FilterNode>> {
        if self.eat_punct("(") {
            let e = self.expression()?;
            self.expect_punct(")")?;
            return Ok(Some(e));
        }
        self.try_call()
    }

    fn try_call(&mut self) -> PResult<Option<FilterNode>> {
        match self.peek().clone() {
            Tok::Ident(name) if name != "true" && name != "false" => {
                let upper = name.to_ascii_uppercase();
                if upper == "EXISTS" || (upper == "NOT" && self.is_kw_at(1, "EXISTS")) {
                    return self.exists().map(Some);
                }
                let known = builtin_arity(&upper).is_some() || AggregateKind::from_keyword(&upper).is_some();
                if known && matches!(self.peek_n(1), Tok::Punct("(")) {
                    self.bump();
                    return self.builtin_call(&upper).map(Some);
                }
                Ok(None)
            }
            Tok::IriRef(_) | Tok::PName { .. } if matches!(self.peek_n(1), Tok::Punct("(")) => {
                let iri = self.expect_iri()?;
                let args = self.arg_list()?;
                Ok(Some(FilterNode::op(format!("<{iri}>"), args)))
            }
            _ => Ok(None),
        }
    }

    fn exists(&mut self) -> PResult<FilterNode> {
        let negated = self.eat_kw("NOT");
        self.expect_kw("EXISTS")?;
        let mut group = self.group()?;
        group.kind = BlockKind::Main;
        group.assign_ordinals();
        Ok(FilterNode::Exists {
            negated,
            group: Box::new(group),
        })
    }

    fn arg_list(&mut self) -> PResult<Vec<FilterNode>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expression()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    /// Name consumed, current token is `(`.
    fn builtin_call(&mut self, upper: &str) -> PResult<FilterNode> {
        if let Some(agg) = AggregateKind::from_keyword(upper) {
            return self.aggregate(agg);
        }
        let Some((min, max)) = builtin_arity(upper) else {
            return Err(self.err(format!("unknown function {upper}")));
        };
        let at = self.pos;
        let args = self.arg_list()?;
        if args.len() < min || max.is_some_and(|m| args.len() > m) {
            let save = self.pos;
            self.pos = at;
            let e = self.err(format!("wrong number of arguments for {upper}: {}", args.len()));
            self.pos = save;
            return Err(e);
        }
        Ok(FilterNode::op(upper, args))
    }

    fn aggregate(&mut self, agg: AggregateKind) -> PResult<FilterNode> {
        self.expect_punct("(")?;
        let distinct = self.eat_kw("DISTINCT");
        let mut args = Vec::new();
        if agg == AggregateKind::Count && self.eat_punct("*") {
            // COUNT(*) has no argument
        } else {
            args.push(self.expression()?);
        }
        if agg == AggregateKind::GroupConcat && self.eat_punct(";") {
            self.expect_kw("SEPARATOR")?;
            self.expect_punct("=")?;
            match self.bump() {
                Tok::Str(sep) => args.push(FilterNode::Leaf(Term::Literal(Literal::String {
                    value: sep,
                    lang: None,
                    datatype: None,
                }))),
                _ => return Err(self.err("expected separator string")),
            }
        }
        self.expect_punct(")")?;
        self.aggregations.push(agg);
        let name = if distinct {
            format!("{} DISTINCT", agg.keyword())
        } else {
            agg.keyword().to_string()
        };
        Ok(FilterNode::op(name, args))
    }

    fn expression(&mut self) -> PResult<FilterNode> {
        let mut left = self.and_expression()?;
        while self.eat_punct("||") {
            let right = self.and_expression()?;
            left = FilterNode::op("||", vec![left, right]);
        }
        Ok(left)
    }

    fn and_expression(&mut self) -> PResult<FilterNode> {
        let mut left = self.relational()?;
        while self.eat_punct("&&") {
            let right = self.relational()?;
            left = FilterNode::op("&&", vec![left, right]);
        }
        Ok(left)
    }

    fn relational(&mut self) -> PResult<FilterNode> {
        let left = self.additive()?;
        for op in ["=", "!=", "<", ">", "<=", ">="] {
            if self.eat_punct(op) {
                let right = self.additive()?;
                return Ok(FilterNode::op(op, vec![left, right]));
            }
        }
        let negated = self.is_kw("NOT") && self.is_kw_at(1, "IN");
        if negated || self.is_kw("IN") {
            if negated {
                self.bump();
            }
            self.bump();
            let mut args = vec![left];
            args.extend(self.arg_list()?);
            return Ok(FilterNode::op(if negated { "NOT IN" } else { "IN" }, args));
        }
        Ok(left)
    }

    fn additive(&mut self) -> PResult<FilterNode> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.is_punct("+") {
                "+"
            } else if self.is_punct("-") {
                "-"
            } else {
                break;
            };
            self.bump();
            let right = self.multiplicative()?;
            left = FilterNode::op(op, vec![left, right]);
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> PResult<FilterNode> {
        let mut left = self.unary()?;
        loop {
            let op = if self.is_punct("*") {
                "*"
            } else if self.is_punct("/") {
                "/"
            } else {
                break;
            };
            self.bump();
            let right = self.unary()?;
            left = FilterNode::op(op, vec![left, right]);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<FilterNode> {
        for op in ["!", "-", "+"] {
            if self.eat_punct(op) {
                let inner = self.unary()?;
                return Ok(FilterNode::op(op, vec![inner]));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<FilterNode> {
        if let Some(c) = self.try_constraint()? {
            return Ok(c);
        }
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(FilterNode::Leaf(Term::Var(v)))
            }
            Tok::BNode(b) => {
                self.bump();
                Ok(FilterNode::Leaf(Term::BlankNode(b)))
            }
            _ => {
                if let Some(iri) = self.try_iri()? {
                    return Ok(FilterNode::Leaf(Term::Iri(iri)));
                }
                match self.try_literal()? {
                    Some(l) => Ok(FilterNode::Leaf(Term::Literal(l))),
                    None => Err(self.err("expected expression")),
                }
            }
        }
    }
}

// ------------------------------------------------------------ derived views

fn projection_vars(projection: &Projection, body: Option<&OperatorBlock>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |v: &str| {
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    };
    match projection {
        Projection::None => {}
        Projection::Items(items) => items.iter().for_each(|i| push(i.var_name())),
        Projection::Star => {
            if let Some(b) = body {
                let mut vars = Vec::new();
                in_scope_vars(b, &mut vars);
                vars.iter().for_each(|v| push(v));
            }
        }
    }
    out
}

fn in_scope_vars(block: &OperatorBlock, out: &mut Vec<String>) {
    let push = |v: &str, out: &mut Vec<String>| {
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    };
    for tp in &block.triple_patterns {
        if let Term::Var(v) = &tp.subject {
            push(v, out);
        }
        for leaf in tp.predicate.leaves() {
            if let Term::Var(v) = leaf {
                push(&v, out);
            }
        }
        if let Term::Var(v) = &tp.object {
            push(v, out);
        }
    }
    for child in &block.children {
        match &child.detail {
            BlockDetail::Subquery(clause) => {
                for v in projection_vars(&clause.projection, Some(child)) {
                    push(&v, out);
                }
            }
            BlockDetail::Bind { var, .. } => push(var, out),
            BlockDetail::Values { vars, .. } => vars.iter().for_each(|v| push(v, out)),
            _ if child.kind == BlockKind::Minus => {}
            BlockDetail::Graph { name: Term::Var(v) } => {
                push(v, out);
                in_scope_vars(child, out);
            }
            _ => in_scope_vars(child, out),
        }
    }
}

fn collect_block_terms(block: &OperatorBlock, out: &mut BTreeSet<Term>) {
    for tp in &block.triple_patterns {
        for t in [&tp.subject, &tp.object] {
            if t.counts_as_term() {
                out.insert(t.clone());
            }
        }
        out.extend(tp.predicate.leaves());
    }
    for f in &block.filters {
        collect_filter_terms(&f.root, out);
    }
    for child in &block.children {
        collect_block_terms(child, out);
    }
}

fn collect_filter_terms(node: &FilterNode, out: &mut BTreeSet<Term>) {
    match node {
        FilterNode::Leaf(t) => {
            if t.counts_as_term() {
                out.insert(t.clone());
            }
        }
        FilterNode::Operator { args, .. } => args.iter().for_each(|a| collect_filter_terms(a, out)),
        FilterNode::Exists { group, .. } => collect_block_terms(group, out),
    }
}

fn term_set(ast: &QueryAst) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for root in ast.template.iter().chain(ast.body.iter()) {
        collect_block_terms(root, &mut out);
    }
    out
}
