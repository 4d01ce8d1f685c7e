//! The AND/OPT/UNION graph-pattern language: parsing, rendering,
//! well-designedness and UNION normalisation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Term, TriplePattern, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    And,
    Opt,
    Union,
}

impl Op {
    pub fn keyword(self) -> &'static str {
        match self {
            Op::And => "AND",
            Op::Opt => "OPT",
            Op::Union => "UNION",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum GraphPattern {
    Leaf(TriplePattern),
    Node(Op, Box<GraphPattern>, Box<GraphPattern>),
}

impl GraphPattern {
    pub fn node(op: Op, left: GraphPattern, right: GraphPattern) -> Self {
        GraphPattern::Node(op, Box::new(left), Box::new(right))
    }

    pub fn and(left: GraphPattern, right: GraphPattern) -> Self {
        Self::node(Op::And, left, right)
    }

    pub fn opt(left: GraphPattern, right: GraphPattern) -> Self {
        Self::node(Op::Opt, left, right)
    }

    pub fn union(left: GraphPattern, right: GraphPattern) -> Self {
        Self::node(Op::Union, left, right)
    }

    /// Left-associated conjunction of a non-empty sequence of triples.
    pub fn conjunction<I: IntoIterator<Item = TriplePattern>>(triples: I) -> Option<Self> {
        triples
            .into_iter()
            .map(GraphPattern::Leaf)
            .reduce(GraphPattern::and)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse_all()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            GraphPattern::Leaf(t) => out.extend(t.vars().cloned()),
            GraphPattern::Node(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn triples(&self) -> Vec<&TriplePattern> {
        let mut out = Vec::new();
        self.collect_triples(&mut out);
        out
    }

    fn collect_triples<'a>(&'a self, out: &mut Vec<&'a TriplePattern>) {
        match self {
            GraphPattern::Leaf(t) => out.push(t),
            GraphPattern::Node(_, l, r) => {
                l.collect_triples(out);
                r.collect_triples(out);
            }
        }
    }

    pub fn is_union_free(&self) -> bool {
        match self {
            GraphPattern::Leaf(_) => true,
            GraphPattern::Node(Op::Union, _, _) => false,
            GraphPattern::Node(_, l, r) => l.is_union_free() && r.is_union_free(),
        }
    }

    fn count_occurrences(&self, counts: &mut BTreeMap<Var, usize>) {
        match self {
            GraphPattern::Leaf(t) => {
                for v in t.vars() {
                    *counts.entry(v.clone()).or_default() += 1;
                }
            }
            GraphPattern::Node(_, l, r) => {
                l.count_occurrences(counts);
                r.count_occurrences(counts);
            }
        }
    }

    /// Checks well-designedness, returning the first violation found in
    /// pre-order when the pattern is not well-designed.
    pub fn well_designed_violation(&self) -> Option<Violation> {
        let mut components = Vec::new();
        if let Some(v) = flatten_union(self, &mut components) {
            return Some(v);
        }
        components.into_iter().find_map(opt_violation)
    }

    pub fn is_well_designed(&self) -> bool {
        self.well_designed_violation().is_none()
    }

    /// Flattens the top-level UNIONs left to right.
    pub fn union_normalize(&self) -> Result<Vec<GraphPattern>> {
        if let Some(v) = self.well_designed_violation() {
            return Err(Error::NotWellDesigned(v.to_string()));
        }
        let mut components = Vec::new();
        flatten_union(self, &mut components);
        Ok(components.into_iter().cloned().collect())
    }
}

/// Why a pattern is not well-designed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A UNION occurs strictly below an AND or OPT.
    NestedUnion { subpattern: GraphPattern },
    /// `var` occurs in the right side of `subpattern` (an OPT), not in its
    /// left side, and also somewhere outside `subpattern`.
    OptScope { var: Var, subpattern: GraphPattern },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NestedUnion { subpattern } => {
                write!(f, "UNION below AND/OPT in {subpattern}")
            }
            Violation::OptScope { var, subpattern } => write!(
                f,
                "variable {var} of the optional side of {subpattern} occurs outside it"
            ),
        }
    }
}

fn flatten_union<'a>(p: &'a GraphPattern, out: &mut Vec<&'a GraphPattern>) -> Option<Violation> {
    match p {
        GraphPattern::Node(Op::Union, l, r) => {
            flatten_union(l, out).or_else(|| flatten_union(r, out))
        }
        _ => {
            if let Some(nested) = first_union(p) {
                return Some(Violation::NestedUnion {
                    subpattern: nested.clone(),
                });
            }
            out.push(p);
            None
        }
    }
}

fn first_union(p: &GraphPattern) -> Option<&GraphPattern> {
    match p {
        GraphPattern::Leaf(_) => None,
        GraphPattern::Node(Op::Union, _, _) => Some(p),
        GraphPattern::Node(_, l, r) => first_union(l).or_else(|| first_union(r)),
    }
}

fn opt_violation(component: &GraphPattern) -> Option<Violation> {
    let mut total = BTreeMap::new();
    component.count_occurrences(&mut total);
    check_opts(component, &total)
}

fn check_opts(p: &GraphPattern, total: &BTreeMap<Var, usize>) -> Option<Violation> {
    let GraphPattern::Node(op, l, r) = p else {
        return None;
    };
    if *op == Op::Opt {
        let left_vars = l.vars();
        let mut inside = BTreeMap::new();
        p.count_occurrences(&mut inside);
        for var in r.vars() {
            if !left_vars.contains(&var) && total[&var] > inside[&var] {
                return Some(Violation::OptScope {
                    var,
                    subpattern: p.clone(),
                });
            }
        }
    }
    check_opts(l, total).or_else(|| check_opts(r, total))
}

impl fmt::Display for GraphPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphPattern::Leaf(t) => write!(f, "{t}"),
            GraphPattern::Node(op, l, r) => write!(f, "({l} {} {r})", op.keyword()),
        }
    }
}

impl fmt::Debug for GraphPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Comma,
    Word(&'a str),
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Open => "'('".into(),
            Tok::Close => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Word(w) => format!("{w:?}"),
            Tok::End => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn line_col(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(pos, |nl| pos - nl - 1) + 1;
        (line, column)
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its start offset without consuming it.
    fn peek(&mut self) -> (Tok<'a>, usize) {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let tok = match rest.chars().next() {
            None => Tok::End,
            Some('(') => Tok::Open,
            Some(')') => Tok::Close,
            Some(',') => Tok::Comma,
            Some(_) => {
                let len = rest
                    .find(|c: char| c.is_whitespace() || matches!(c, '(' | ')' | ','))
                    .unwrap_or(rest.len());
                Tok::Word(&rest[..len])
            }
        };
        (tok, start)
    }

    fn bump(&mut self, tok: &Tok<'_>) {
        self.pos += match tok {
            Tok::Open | Tok::Close | Tok::Comma => 1,
            Tok::Word(w) => w.len(),
            Tok::End => 0,
        };
    }

    fn error(&self, at: usize, message: String, expected: &str) -> Error {
        let (line, column) = self.line_col(at);
        Error::PatternParse {
            line,
            column,
            message,
            expected: expected.into(),
        }
    }

    fn expect(&mut self, want: Tok<'static>, expected: &str) -> Result<()> {
        let (tok, at) = self.peek();
        if tok == want {
            self.bump(&tok);
            Ok(())
        } else {
            Err(self.error(at, format!("unexpected {}", tok.describe()), expected))
        }
    }

    fn parse_all(mut self) -> Result<GraphPattern> {
        let p = self.pattern()?;
        let (tok, at) = self.peek();
        if tok != Tok::End {
            return Err(self.error(at, format!("trailing {}", tok.describe()), "end of input"));
        }
        Ok(p)
    }

    fn pattern(&mut self) -> Result<GraphPattern> {
        self.expect(Tok::Open, "'('")?;
        let (tok, at) = self.peek();
        match tok {
            Tok::Open => {
                let left = self.pattern()?;
                let op = self.op_word()?;
                let right = self.pattern()?;
                self.expect(Tok::Close, "')'")?;
                Ok(GraphPattern::node(op, left, right))
            }
            Tok::Word(_) => self.triple_body().map(GraphPattern::Leaf),
            other => Err(self.error(
                at,
                format!("unexpected {}", other.describe()),
                "'(' or a term",
            )),
        }
    }

    fn op_word(&mut self) -> Result<Op> {
        let (tok, at) = self.peek();
        let op = match tok {
            Tok::Word("AND") => Op::And,
            Tok::Word("OPT") => Op::Opt,
            Tok::Word("UNION") => Op::Union,
            other => {
                return Err(self.error(
                    at,
                    format!("unexpected {}", other.describe()),
                    "AND, OPT or UNION",
                ))
            }
        };
        self.bump(&tok);
        Ok(op)
    }

    /// Parses `term , term , term )` after the opening parenthesis.
    fn triple_body(&mut self) -> Result<TriplePattern> {
        let s = self.term()?;
        self.expect(Tok::Comma, "','")?;
        let p = self.term()?;
        self.expect(Tok::Comma, "','")?;
        let o = self.term()?;
        self.expect(Tok::Close, "')'")?;
        Ok(TriplePattern::new(s, p, o))
    }

    fn term(&mut self) -> Result<Term> {
        let (tok, at) = self.peek();
        match tok {
            Tok::Word(w) => {
                let term = Term::parse(w).map_err(|m| self.error(at, m, "a term"))?;
                self.bump(&tok);
                Ok(term)
            }
            other => Err(self.error(at, format!("unexpected {}", other.describe()), "a term")),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const P1: &str = "(((?x,p,?y) OPT (?z,q,?x)) OPT ((?y,r,?o1) AND (?o1,r,?o2)))";
    pub(crate) const P2: &str = "(((?x,p,?y) OPT (?z,q,?x)) OPT ((?y,r,?z) AND (?z,r,?o2)))";

    fn leaf(s: &str, p: &str, o: &str) -> GraphPattern {
        GraphPattern::Leaf(TriplePattern::parse_terms(s, p, o))
    }

    #[test]
    fn parses_single_triple() {
        assert_eq!(
            GraphPattern::parse("(?x,p,?y)").unwrap(),
            leaf("?x", "p", "?y")
        );
        assert_eq!(
            GraphPattern::parse("  ( ?x , p , ?y )  ").unwrap(),
            leaf("?x", "p", "?y")
        );
    }

    #[test]
    fn parses_p1_shape() {
        let p = GraphPattern::parse(P1).unwrap();
        let expected = GraphPattern::opt(
            GraphPattern::opt(leaf("?x", "p", "?y"), leaf("?z", "q", "?x")),
            GraphPattern::and(leaf("?y", "r", "?o1"), leaf("?o1", "r", "?o2")),
        );
        assert_eq!(p, expected);
        assert_eq!(p.to_string(), P1);
    }

    #[test]
    fn parse_errors_carry_position() {
        match GraphPattern::parse("((?x,p,?y) AND").unwrap_err() {
            Error::PatternParse { line, column, .. } => assert_eq!((line, column), (1, 15)),
            other => panic!("unexpected {other:?}"),
        }
        let err = GraphPattern::parse("((?x,p,?y) FILTER (?x,p,?y))").unwrap_err();
        assert_eq!(err.kind(), "ParseError");
        assert!(err.to_string().contains("AND, OPT or UNION"));
        assert!(GraphPattern::parse("(?x,p)").is_err());
        assert!(GraphPattern::parse("(?x,p,?y) (?x,p,?y)").is_err());
        assert!(GraphPattern::parse("(?x!,p,?y)").is_err());
    }

    #[test]
    fn example_one_well_designedness() {
        let p1 = GraphPattern::parse(P1).unwrap();
        assert!(p1.is_well_designed());
        let p2 = GraphPattern::parse(P2).unwrap();
        match p2.well_designed_violation() {
            Some(Violation::OptScope { var, subpattern }) => {
                assert_eq!(var.name(), "z");
                assert_eq!(
                    subpattern,
                    GraphPattern::parse("((?x,p,?y) OPT (?z,q,?x))").unwrap()
                );
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(leaf("?x", "p", "?y").is_well_designed());
    }

    #[test]
    fn nested_union_is_rejected() {
        let p = GraphPattern::parse("((?x,p,?y) AND ((?x,q,?z) UNION (?x,r,?z)))").unwrap();
        assert!(matches!(
            p.well_designed_violation(),
            Some(Violation::NestedUnion { .. })
        ));
        assert_eq!(p.union_normalize().unwrap_err().kind(), "NotWellDesigned");
    }

    #[test]
    fn union_normalize_flattens_left_to_right() {
        let a = leaf("?x", "p", "a");
        let b = leaf("?x", "p", "b");
        let c = leaf("?x", "p", "c");
        let p = GraphPattern::union(GraphPattern::union(a.clone(), b.clone()), c.clone());
        assert_eq!(
            p.union_normalize().unwrap(),
            vec![a.clone(), b.clone(), c.clone()]
        );
        let q = GraphPattern::union(a.clone(), GraphPattern::union(b.clone(), c.clone()));
        assert_eq!(q.union_normalize().unwrap(), vec![a.clone(), b, c]);
        assert_eq!(a.union_normalize().unwrap(), vec![a]);
    }

    #[test]
    fn example_two_union_splits_in_two() {
        let p = GraphPattern::parse(&format!(
            "({P1} UNION ((?x,p,?y) OPT ((?z,q,?x) AND (?w,q,?z))))"
        ))
        .unwrap();
        let parts = p.union_normalize().unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0], GraphPattern::parse(P1).unwrap());
        assert!(parts
            .iter()
            .all(|q| q.is_union_free() && q.is_well_designed()));
    }

    #[test]
    fn union_components_checked_independently() {
        // ?z escapes its OPT only across the UNION boundary, which is fine.
        let p = GraphPattern::parse("(((?x,p,?y) OPT (?z,q,?x)) UNION (?z,r,?x))").unwrap();
        assert!(p.is_well_designed());
    }
}
