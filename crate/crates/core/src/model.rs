//! Terms, triple patterns, t-graphs, RDF graphs and mappings, plus their
//! line-oriented file formats.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

fn is_var_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_iri_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '/' | '#' | '.' | '-')
}

/// An IRI, treated as an opaque constant.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(name: &str) -> Result<Self, String> {
        if name.is_empty() {
            return Err("empty IRI".into());
        }
        if name.starts_with('?') {
            return Err(format!("IRI {name:?} may not start with '?'"));
        }
        if let Some(c) = name.chars().find(|c| !is_iri_char(*c)) {
            return Err(format!("invalid character {c:?} in IRI {name:?}"));
        }
        Ok(Iri(name.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A variable. The stored name excludes the leading `?`.
///
/// User-supplied names are restricted to `[A-Za-z0-9_]+`. Names produced
/// internally (fresh renamings, hardness constructions) may additionally
/// contain `#`, which keeps them disjoint from anything a user can write.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Result<Self, String> {
        if name.is_empty() {
            return Err("empty variable name".into());
        }
        if let Some(c) = name.chars().find(|c| !is_var_char(*c)) {
            return Err(format!("invalid character {c:?} in variable ?{name}"));
        }
        Ok(Var(name.into()))
    }

    /// Builds an internal variable; `#` is permitted on top of the user alphabet.
    pub fn internal(name: &str) -> Self {
        debug_assert!(!name.is_empty());
        debug_assert!(name.chars().all(|c| is_var_char(c) || c == '#'));
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Iri(Iri),
    Var(Var),
}

impl Term {
    /// Parses `?name` as a variable and anything else as an IRI.
    pub fn parse(token: &str) -> Result<Self, String> {
        match token.strip_prefix('?') {
            Some(name) => Var::new(name).map(Term::Var),
            None => Iri::new(token).map(Term::Iri),
        }
    }

    pub fn iri(name: &str) -> Self {
        Term::Iri(Iri::new(name).expect("valid IRI literal"))
    }

    pub fn var(name: &str) -> Self {
        Term::Var(Var::new(name).expect("valid variable literal"))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Iri(_) => None,
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            Term::Var(_) => None,
        }
    }

    fn serialized_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        let (prefix, name): (&[u8], &str) = match self {
            Term::Var(v) => (b"?", v.name()),
            Term::Iri(i) => (b"", i.as_str()),
        };
        prefix.iter().copied().chain(name.bytes())
    }
}

// Ordering follows the serialized form so that sorted output matches the
// lexicographic order of rendered triples.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.serialized_bytes().cmp(other.serialized_bytes())
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => i.fmt(f),
            Term::Var(v) => v.fmt(f),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Var> for Term {
    fn from(v: Var) -> Self {
        Term::Var(v)
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

/// A subject–predicate–object triple whose positions may hold variables.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }

    /// Convenience constructor from three tokens (`?x` or IRI). Panics on
    /// malformed tokens; intended for literals in code and tests.
    pub fn parse_terms(s: &str, p: &str, o: &str) -> Self {
        let t = |x: &str| Term::parse(x).expect("valid term literal");
        TriplePattern::new(t(s), t(p), t(o))
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms().into_iter().filter_map(Term::as_var)
    }

    pub fn is_ground(&self) -> bool {
        self.vars().next().is_none()
    }

    /// Rewrites every term through `f`.
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Self {
        TriplePattern::new(f(&self.subject), f(&self.predicate), f(&self.object))
    }

    /// Rewrites variables through `f`, leaving IRIs in place.
    pub fn map_vars(&self, mut f: impl FnMut(&Var) -> Term) -> Self {
        self.map_terms(|t| match t {
            Term::Var(v) => f(v),
            Term::Iri(_) => t.clone(),
        })
    }

    /// The `s p o .` line used by graph files.
    pub fn to_line(&self) -> String {
        format!("{} {} {} .", self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.subject, self.predicate, self.object)
    }
}

impl fmt::Debug for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite set of triple patterns kept in canonical order.
///
/// An RDF graph is a `TGraph` without variables; see [`TGraph::parse_rdf`].
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TGraph {
    triples: BTreeSet<TriplePattern>,
}

pub type RdfGraph = TGraph;

impl TGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: TriplePattern) -> bool {
        self.triples.insert(t)
    }

    pub fn contains(&self, t: &TriplePattern) -> bool {
        self.triples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TriplePattern> + Clone {
        self.triples.iter()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.triples
            .iter()
            .flat_map(|t| t.vars().cloned())
            .collect()
    }

    pub fn is_ground(&self) -> bool {
        self.triples.iter().all(TriplePattern::is_ground)
    }

    /// dom(G): the IRIs occurring anywhere in the graph.
    pub fn iris(&self) -> BTreeSet<Iri> {
        self.triples
            .iter()
            .flat_map(|t| t.terms().into_iter().filter_map(Term::as_iri).cloned())
            .collect()
    }

    pub fn union(&self, other: &TGraph) -> TGraph {
        let mut out = self.clone();
        out.triples.extend(other.triples.iter().cloned());
        out
    }

    pub fn extend(&mut self, other: impl IntoIterator<Item = TriplePattern>) {
        self.triples.extend(other);
    }

    pub fn is_subset(&self, other: &TGraph) -> bool {
        self.triples.is_subset(&other.triples)
    }

    pub fn map_vars(&self, mut f: impl FnMut(&Var) -> Term) -> TGraph {
        self.triples.iter().map(|t| t.map_vars(&mut f)).collect()
    }

    pub fn without(&self, t: &TriplePattern) -> TGraph {
        let mut out = self.clone();
        out.triples.remove(t);
        out
    }

    /// Parses the graph file format; variables are allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut graph = TGraph::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line_no = idx + 1;
            let mut tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.last() == Some(&".") {
                tokens.pop();
            } else if tokens.len() == 3 && tokens[2].ends_with('.') && tokens[2].len() > 1 {
                // `a p b.` is accepted as well as `a p b .`
                tokens[2] = &tokens[2][..tokens[2].len() - 1];
            }
            if tokens.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected three terms, found {}", tokens.len()),
                });
            }
            let term = |tok: &str| {
                Term::parse(tok).map_err(|message| Error::Parse {
                    line: line_no,
                    message,
                })
            };
            graph.insert(TriplePattern::new(
                term(tokens[0])?,
                term(tokens[1])?,
                term(tokens[2])?,
            ));
        }
        Ok(graph)
    }

    /// Parses an RDF graph: as [`TGraph::parse`] but variables are rejected.
    pub fn parse_rdf(text: &str) -> Result<Self> {
        let graph = Self::parse(text)?;
        if graph.is_ground() {
            return Ok(graph);
        }
        // Re-scan for the first offending line so the error is precise.
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('#') {
                continue;
            }
            if let Some(tok) = line.split_whitespace().find(|t| t.starts_with('?')) {
                return Err(Error::NonGroundGraph {
                    line: idx + 1,
                    var: tok.trim_end_matches('.').to_string(),
                });
            }
        }
        unreachable!("non-ground graph without a variable token")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_line());
            out.push('\n');
        }
        out
    }
}

impl FromIterator<TriplePattern> for TGraph {
    fn from_iter<I: IntoIterator<Item = TriplePattern>>(iter: I) -> Self {
        TGraph {
            triples: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a TGraph {
    type Item = &'a TriplePattern;
    type IntoIter = std::collections::btree_set::Iter<'a, TriplePattern>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

impl fmt::Display for TGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{ ")?;
        for (i, t) in self.triples.iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(" }")
    }
}

impl fmt::Debug for TGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite partial function from variables to IRIs.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Mapping {
    bindings: BTreeMap<Var, Iri>,
}

impl Mapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, Iri)>>(pairs: I) -> Self {
        Mapping {
            bindings: pairs.into_iter().collect(),
        }
    }

    /// Convenience constructor for literals: `[("x", "a")]` binds `?x` to `a`.
    pub fn of(pairs: &[(&str, &str)]) -> Self {
        Mapping::from_pairs(pairs.iter().map(|(v, i)| {
            (
                Var::new(v).expect("valid variable literal"),
                Iri::new(i).expect("valid IRI literal"),
            )
        }))
    }

    /// `None` means unbound, which is distinct from any IRI.
    pub fn get(&self, var: &Var) -> Option<&Iri> {
        self.bindings.get(var)
    }

    pub fn insert(&mut self, var: Var, iri: Iri) -> Option<Iri> {
        self.bindings.insert(var, iri)
    }

    pub fn domain(&self) -> BTreeSet<Var> {
        self.bindings.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Iri)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn compatible(&self, other: &Mapping) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .bindings
            .iter()
            .all(|(v, i)| large.bindings.get(v).is_none_or(|j| i == j))
    }

    pub fn merge(&self, other: &Mapping) -> Result<Mapping> {
        let mut out = self.clone();
        for (v, i) in &other.bindings {
            match out.bindings.get(v) {
                Some(j) if j != i => {
                    return Err(Error::IncompatibleMappings { var: v.to_string() })
                }
                Some(_) => {}
                None => {
                    out.bindings.insert(v.clone(), i.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn restrict(&self, vars: &BTreeSet<Var>) -> Mapping {
        Mapping {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, i)| (v.clone(), i.clone()))
                .collect(),
        }
    }

    /// Substitutes every variable of `t`; fails on the first unbound one.
    pub fn apply(&self, t: &TriplePattern) -> Result<TriplePattern> {
        let sub = |term: &Term| -> Result<Term> {
            match term {
                Term::Iri(_) => Ok(term.clone()),
                Term::Var(v) => self
                    .bindings
                    .get(v)
                    .map(|i| Term::Iri(i.clone()))
                    .ok_or_else(|| Error::UnboundVariable { var: v.to_string() }),
            }
        };
        Ok(TriplePattern::new(
            sub(&t.subject)?,
            sub(&t.predicate)?,
            sub(&t.object)?,
        ))
    }

    /// Parses `?var = iri` lines; `#` comments and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Mapping::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let line_no = idx + 1;
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `?var = iri`".into()))?;
            let var = lhs
                .trim()
                .strip_prefix('?')
                .ok_or_else(|| parse_err(format!("expected a variable, found {:?}", lhs.trim())))
                .and_then(|n| Var::new(n).map_err(parse_err))?;
            let iri = Iri::new(rhs.trim()).map_err(parse_err)?;
            if out.bindings.contains_key(&var) {
                return Err(Error::DuplicateBinding {
                    line: line_no,
                    var: var.to_string(),
                });
            }
            out.bindings.insert(var, iri);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        self.bindings
            .iter()
            .map(|(v, i)| format!("{v} = {i}\n"))
            .collect()
    }

    fn sort_key(&self) -> (Vec<&Var>, Vec<&Iri>) {
        (
            self.bindings.keys().collect(),
            self.bindings.values().collect(),
        )
    }
}

/// Canonical order: by sorted domain first, then by the bound values.
impl Ord for Mapping {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Mapping {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, iri)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={iri}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromIterator<(Var, Iri)> for Mapping {
    fn from_iter<I: IntoIterator<Item = (Var, Iri)>>(iter: I) -> Self {
        Mapping::from_pairs(iter)
    }
}

/// Parses a distinguished-variable list: `?x` tokens separated by commas,
/// whitespace or newlines. Lines starting with `#` are comments.
pub fn parse_var_list(text: &str) -> Result<BTreeSet<Var>> {
    let mut out = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let name = tok
                .strip_prefix('?')
                .ok_or_else(|| err(format!("expected a variable, found {tok:?}")))?;
            out.insert(Var::new(name).map_err(err)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, p: &str, o: &str) -> TriplePattern {
        TriplePattern::parse_terms(s, p, o)
    }

    #[test]
    fn compatible_examples() {
        let xa = Mapping::of(&[("x", "a")]);
        assert!(xa.compatible(&Mapping::of(&[("x", "a"), ("y", "b")])));
        assert!(!xa.compatible(&Mapping::of(&[("x", "b")])));
        assert!(Mapping::new().compatible(&xa));
    }

    #[test]
    fn merge_examples() {
        let xa = Mapping::of(&[("x", "a")]);
        let yb = Mapping::of(&[("y", "b")]);
        assert_eq!(
            xa.merge(&yb).unwrap(),
            Mapping::of(&[("x", "a"), ("y", "b")])
        );
        assert_eq!(xa.merge(&xa).unwrap(), xa);
        let zc = Mapping::of(&[("z", "c")]);
        assert_eq!(Mapping::new().merge(&zc).unwrap(), zc);
        let err = xa.merge(&Mapping::of(&[("x", "b")])).unwrap_err();
        assert_eq!(err.kind(), "IncompatibleMappings");
    }

    #[test]
    fn apply_examples() {
        let xa = Mapping::of(&[("x", "a")]);
        assert_eq!(xa.apply(&t("?x", "p", "?x")).unwrap(), t("a", "p", "a"));
        assert_eq!(
            Mapping::new().apply(&t("a", "p", "b")).unwrap(),
            t("a", "p", "b")
        );
        assert_eq!(
            xa.apply(&t("?x", "p", "?y")).unwrap_err(),
            Error::UnboundVariable { var: "?y".into() }
        );
    }

    #[test]
    fn graph_parsing() {
        let g = TGraph::parse("a p b .\na p b").unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.contains(&t("a", "p", "b")));

        let g = TGraph::parse("# comment\n\n  x p y.\n").unwrap();
        assert!(g.contains(&t("x", "p", "y")));

        match TGraph::parse_rdf("a p ?z") {
            Err(Error::NonGroundGraph { line: 1, var }) => assert_eq!(var, "?z"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(TGraph::parse("a p").unwrap_err().kind(), "ParseError");
        assert_eq!(TGraph::parse("a p ?b!").unwrap_err().kind(), "ParseError");
    }

    #[test]
    fn mapping_parsing() {
        let m = Mapping::parse("?x = a\n?y=b").unwrap();
        assert_eq!(m, Mapping::of(&[("x", "a"), ("y", "b")]));
        assert_eq!(
            Mapping::parse("?x = a\n?x = b").unwrap_err(),
            Error::DuplicateBinding {
                line: 2,
                var: "?x".into()
            }
        );
        assert_eq!(Mapping::parse("x = a").unwrap_err().kind(), "ParseError");
    }

    #[test]
    fn canonical_triple_order_follows_serialization() {
        // '?' sorts between digits and letters
        let mut ts = [
            t("b", "p", "c"),
            t("?x", "p", "c"),
            t("1", "p", "c"),
            t("a", "p", "c"),
        ];
        ts.sort();
        let lines: Vec<String> = ts.iter().map(|t| t.to_line()).collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
    }

    #[test]
    fn mapping_display() {
        assert_eq!(
            Mapping::of(&[("y", "b"), ("x", "a")]).to_string(),
            "{?x=a, ?y=b}"
        );
        assert_eq!(Mapping::new().to_string(), "{}");
    }

    #[test]
    fn var_list() {
        let xs = parse_var_list("?x, ?y\n?z").unwrap();
        assert_eq!(xs.len(), 3);
        assert!(parse_var_list("x").is_err());
    }
}
