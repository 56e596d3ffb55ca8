//! Provenance expressions: how an open set was obtained from the subbasis.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::subbasis::Subbasis;
use crate::bitset::MemberSet;
use crate::error::{Error, Result};

/// A union/intersection tree over subbasis indices.
///
/// The derived ordering puts constants first, then single elements by
/// index, then intersections, then unions; canonical operand lists are
/// sorted by it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetExpr {
    Empty,
    Full,
    Element(usize),
    Intersection(Vec<SetExpr>),
    Union(Vec<SetExpr>),
}

/// Coarse shape of an expression, used for filtering reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprKind {
    Empty,
    Full,
    Element,
    Intersection,
    Union,
}

impl SetExpr {
    pub fn intersection_of(indices: &[usize]) -> Self {
        Self::Intersection(indices.iter().map(|&i| Self::Element(i)).collect()).canonical()
    }

    pub fn union_of(indices: &[usize]) -> Self {
        Self::Union(indices.iter().map(|&i| Self::Element(i)).collect()).canonical()
    }

    pub fn kind(&self) -> ExprKind {
        match self {
            Self::Empty => ExprKind::Empty,
            Self::Full => ExprKind::Full,
            Self::Element(_) => ExprKind::Element,
            Self::Intersection(_) => ExprKind::Intersection,
            Self::Union(_) => ExprKind::Union,
        }
    }

    /// Flattens nested operators of the same kind, sorts and dedups operands,
    /// and collapses single-operand operators.
    pub fn canonical(self) -> Self {
        match self {
            Self::Intersection(ops) => Self::canonical_op(ops, true),
            Self::Union(ops) => Self::canonical_op(ops, false),
            leaf => leaf,
        }
    }

    fn canonical_op(ops: Vec<SetExpr>, is_intersection: bool) -> Self {
        let mut flat = Vec::with_capacity(ops.len());
        for op in ops.into_iter().map(Self::canonical) {
            match (op, is_intersection) {
                (Self::Intersection(inner), true) | (Self::Union(inner), false) => flat.extend(inner),
                (other, _) => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        match (flat.len(), is_intersection) {
            (0, true) => Self::Full,
            (0, false) => Self::Empty,
            (1, _) => flat.pop().unwrap(),
            (_, true) => Self::Intersection(flat),
            (_, false) => Self::Union(flat),
        }
    }

    /// Number of operands of the widest intersection and union nodes.
    pub fn arities(&self) -> (usize, usize) {
        match self {
            Self::Empty | Self::Full | Self::Element(_) => (1, 1),
            Self::Intersection(ops) | Self::Union(ops) => {
                let (mut i, mut u) = ops.iter().map(Self::arities).fold((1, 1), |a, b| (a.0.max(b.0), a.1.max(b.1)));
                if matches!(self, Self::Intersection(_)) {
                    i = i.max(ops.len());
                } else {
                    u = u.max(ops.len());
                }
                (i, u)
            }
        }
    }

    pub fn evaluate(&self, subbasis: &Subbasis) -> MemberSet {
        let n = subbasis.n_items();
        match self {
            Self::Empty => MemberSet::empty(n),
            Self::Full => subbasis.union_of_all(),
            Self::Element(i) => subbasis.elements()[*i].members.clone(),
            Self::Intersection(ops) => {
                let mut acc = MemberSet::full(n);
                for op in ops {
                    acc.intersect_with(&op.evaluate(subbasis));
                }
                acc
            }
            Self::Union(ops) => {
                let mut acc = MemberSet::empty(n);
                for op in ops {
                    acc.union_with(&op.evaluate(subbasis));
                }
                acc
            }
        }
    }

    /// Renders with subbasis element names, e.g. `label:A ∩ attr:red`.
    pub fn render(&self, subbasis: &Subbasis) -> String {
        let mut out = String::new();
        self.render_into(subbasis, &mut out);
        out
    }

    fn render_into(&self, subbasis: &Subbasis, out: &mut String) {
        let (ops, sep) = match self {
            Self::Empty => return out.push_str("EMPTY"),
            Self::Full => return out.push_str("FULL"),
            Self::Element(i) => {
                return match subbasis.elements().get(*i) {
                    Some(e) => out.push_str(&e.name),
                    None => {
                        let _ = write!(out, "#{i}");
                    }
                }
            }
            Self::Intersection(ops) => (ops, " ∩ "),
            Self::Union(ops) => (ops, " ∪ "),
        };
        for (k, op) in ops.iter().enumerate() {
            if k > 0 {
                out.push_str(sep);
            }
            let nested = matches!(op, Self::Intersection(_) | Self::Union(_));
            if nested {
                out.push('(');
            }
            op.render_into(subbasis, out);
            if nested {
                out.push(')');
            }
        }
    }

    /// Parses rendered text back into a canonical expression.
    ///
    /// `∩`/`&` bind tighter than `∪`/`|`; parentheses group. Element names
    /// are matched longest-first so names may themselves contain spaces,
    /// colons or parentheses. `EMPTY`/`∅` and `FULL`/`X` name the constants.
    pub fn parse(text: &str, subbasis: &Subbasis) -> Result<Self> {
        let mut parser = Parser { input: text, rest: text, subbasis };
        let expr = parser.union()?;
        parser.skip_ws();
        if !parser.rest.is_empty() {
            return Err(parser.error(format!("unexpected trailing input '{}'", parser.rest)));
        }
        Ok(expr.canonical())
    }
}

const INTERSECTION_OPS: [&str; 2] = ["∩", "&"];
const UNION_OPS: [&str; 2] = ["∪", "|"];

struct Parser<'a> {
    input: &'a str,
    rest: &'a str,
    subbasis: &'a Subbasis,
}

impl Parser<'_> {
    fn error(&self, message: String) -> Error {
        Error::BadExpression { input: self.input.to_owned(), message }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn eat_any(&mut self, ops: &[&str]) -> bool {
        self.skip_ws();
        for op in ops {
            if let Some(r) = self.rest.strip_prefix(op) {
                self.rest = r;
                return true;
            }
        }
        false
    }

    fn union(&mut self) -> Result<SetExpr> {
        let mut ops = vec![self.intersection()?];
        while self.eat_any(&UNION_OPS) {
            ops.push(self.intersection()?);
        }
        Ok(if ops.len() == 1 { ops.pop().unwrap() } else { SetExpr::Union(ops) })
    }

    fn intersection(&mut self) -> Result<SetExpr> {
        let mut ops = vec![self.atom()?];
        while self.eat_any(&INTERSECTION_OPS) {
            ops.push(self.atom()?);
        }
        Ok(if ops.len() == 1 { ops.pop().unwrap() } else { SetExpr::Intersection(ops) })
    }

    /// True when `rest` begins a token boundary: end, operator or `)`.
    fn at_boundary(rest: &str) -> bool {
        let r = rest.trim_start();
        r.is_empty() || r.starts_with(')') || INTERSECTION_OPS.iter().chain(&UNION_OPS).any(|op| r.starts_with(op))
    }

    fn atom(&mut self) -> Result<SetExpr> {
        self.skip_ws();
        let best = self
            .subbasis
            .elements()
            .iter()
            .filter(|e| self.rest.starts_with(e.name.as_str()) && Self::at_boundary(&self.rest[e.name.len()..]))
            .max_by_key(|e| e.name.len());
        if let Some(e) = best {
            self.rest = &self.rest[e.name.len()..];
            return Ok(SetExpr::Element(e.sb_index));
        }
        for (word, expr) in [("EMPTY", SetExpr::Empty), ("∅", SetExpr::Empty), ("FULL", SetExpr::Full), ("X", SetExpr::Full)] {
            if let Some(r) = self.rest.strip_prefix(word) {
                if Self::at_boundary(r) {
                    self.rest = r;
                    return Ok(expr);
                }
            }
        }
        if let Some(r) = self.rest.strip_prefix('(') {
            self.rest = r;
            let inner = self.union()?;
            self.skip_ws();
            return match self.rest.strip_prefix(')') {
                Some(r) => {
                    self.rest = r;
                    Ok(inner)
                }
                None => Err(self.error("missing ')'".into())),
            };
        }
        Err(self.error(format!("no subbasis element matches at '{}'", self.rest)))
    }
}
