//! Block-structured process trees.
//!
//! Text form is nested prefix notation:
//!
//! ```text
//! seq(a, xor(b, c), par(d, e), loop(f, tau))
//! ```
//!
//! `seq`, `xor`, `par` take two or more children, `loop(body, redo)` exactly
//! two, and `tau` is the silent leaf. Any other token is an activity name;
//! names with spaces, punctuation or that collide with `tau` are written in
//! double quotes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "TreeDocument", try_from = "TreeDocument")]
pub enum ProcessTree {
    Sequence(Vec<ProcessTree>),
    Choice(Vec<ProcessTree>),
    Parallel(Vec<ProcessTree>),
    /// `body (redo body)*`
    Loop(Box<ProcessTree>, Box<ProcessTree>),
    Activity(String),
    Silent,
}

impl ProcessTree {
    pub fn activity(name: impl Into<String>) -> Self {
        ProcessTree::Activity(name.into())
    }

    pub fn seq(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Sequence(children)
    }

    pub fn xor(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Choice(children)
    }

    pub fn par(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Parallel(children)
    }

    pub fn looped(body: ProcessTree, redo: ProcessTree) -> Self {
        ProcessTree::Loop(Box::new(body), Box::new(redo))
    }

    /// The model allowing every sequence over `activities`, including the
    /// empty one: `loop(tau, xor(a, b, ...))`.
    pub fn flower<I, S>(activities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut leaves: Vec<ProcessTree> = activities.into_iter().map(|a| ProcessTree::Activity(a.into())).collect();
        leaves.sort();
        leaves.dedup();
        let redo = match leaves.len() {
            0 => ProcessTree::Silent,
            1 => leaves.pop().expect("one leaf"),
            _ => ProcessTree::Choice(leaves),
        };
        ProcessTree::looped(ProcessTree::Silent, redo)
    }

    pub fn children(&self) -> Vec<&ProcessTree> {
        match self {
            ProcessTree::Sequence(c) | ProcessTree::Choice(c) | ProcessTree::Parallel(c) => c.iter().collect(),
            ProcessTree::Loop(b, r) => vec![b, r],
            _ => Vec::new(),
        }
    }

    /// Checks operator arity and non-empty activity names.
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessTree::Sequence(c) | ProcessTree::Choice(c) | ProcessTree::Parallel(c) => {
                if c.len() < 2 {
                    return Err(Error::InvalidTree(format!(
                        "{} needs at least two children",
                        self.operator_name()
                    )));
                }
                c.iter().try_for_each(ProcessTree::validate)
            }
            ProcessTree::Loop(b, r) => {
                b.validate()?;
                r.validate()
            }
            ProcessTree::Activity(n) if n.is_empty() => Err(Error::InvalidTree("empty activity name".into())),
            _ => Ok(()),
        }
    }

    fn operator_name(&self) -> &'static str {
        match self {
            ProcessTree::Sequence(_) => "seq",
            ProcessTree::Choice(_) => "xor",
            ProcessTree::Parallel(_) => "par",
            ProcessTree::Loop(..) => "loop",
            ProcessTree::Activity(_) => "activity",
            ProcessTree::Silent => "tau",
        }
    }

    /// Distinct activity labels.
    pub fn activities(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_activities(&mut out);
        out
    }

    fn collect_activities(&self, out: &mut BTreeSet<String>) {
        match self {
            ProcessTree::Activity(n) => {
                out.insert(n.clone());
            }
            ProcessTree::Silent => {}
            _ => self.children().into_iter().for_each(|c| c.collect_activities(out)),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(ProcessTree::node_count).sum::<usize>()
    }

    /// All traces of the tree with at most `max_len` events.
    pub fn language(&self, max_len: usize) -> BTreeSet<Vec<String>> {
        match self {
            ProcessTree::Activity(n) if max_len >= 1 => [vec![n.clone()]].into_iter().collect(),
            ProcessTree::Activity(_) => BTreeSet::new(),
            ProcessTree::Silent => [Vec::new()].into_iter().collect(),
            ProcessTree::Choice(c) => c.iter().flat_map(|t| t.language(max_len)).collect(),
            ProcessTree::Sequence(c) => c.iter().fold([Vec::new()].into_iter().collect(), |acc, t| {
                concat(&acc, &t.language(max_len), max_len)
            }),
            ProcessTree::Parallel(c) => c.iter().fold([Vec::new()].into_iter().collect(), |acc, t| {
                let child = t.language(max_len);
                let mut out = BTreeSet::new();
                for x in &acc {
                    for y in &child {
                        if x.len() + y.len() <= max_len {
                            shuffle_into(x, y, &mut Vec::new(), &mut out);
                        }
                    }
                }
                out
            }),
            ProcessTree::Loop(b, r) => {
                let body = b.language(max_len);
                let redo = r.language(max_len);
                let mut all = body.clone();
                let mut frontier = body.clone();
                while !frontier.is_empty() {
                    let next = concat(&concat(&frontier, &redo, max_len), &body, max_len);
                    frontier = next.difference(&all).cloned().collect();
                    all.extend(frontier.iter().cloned());
                }
                all
            }
        }
    }
}

fn concat(a: &BTreeSet<Vec<String>>, b: &BTreeSet<Vec<String>>, max_len: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in b {
            if x.len() + y.len() <= max_len {
                let mut v = x.clone();
                v.extend(y.iter().cloned());
                out.insert(v);
            }
        }
    }
    out
}

fn shuffle_into(x: &[String], y: &[String], prefix: &mut Vec<String>, out: &mut BTreeSet<Vec<String>>) {
    match (x.split_first(), y.split_first()) {
        (None, _) => {
            let mut v = prefix.clone();
            v.extend(y.iter().cloned());
            out.insert(v);
        }
        (_, None) => {
            let mut v = prefix.clone();
            v.extend(x.iter().cloned());
            out.insert(v);
        }
        (Some((hx, tx)), Some((hy, ty))) => {
            prefix.push(hx.clone());
            shuffle_into(tx, y, prefix, out);
            prefix.pop();
            prefix.push(hy.clone());
            shuffle_into(x, ty, prefix, out);
            prefix.pop();
        }
    }
}

fn needs_quotes(name: &str) -> bool {
    name.is_empty()
        || name == "tau"
        || name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"' | '\\'))
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTree::Activity(n) if needs_quotes(n) => {
                f.write_str("\"")?;
                for c in n.chars() {
                    if matches!(c, '"' | '\\') {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
            ProcessTree::Activity(n) => f.write_str(n),
            ProcessTree::Silent => f.write_str("tau"),
            _ => {
                write!(f, "{}(", self.operator_name())?;
                for (i, c) in self.children().into_iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::TreeSyntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, ch: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected {ch:?}")))
        }
    }

    fn token(&mut self) -> Result<(String, bool)> {
        self.skip_ws();
        if self.peek() == Some('"') {
            self.pos += 1;
            let mut s = String::new();
            loop {
                let c = self.peek().ok_or_else(|| self.err("unterminated quoted name"))?;
                self.pos += c.len_utf8();
                match c {
                    '"' => return Ok((s, true)),
                    '\\' => {
                        let e = self.peek().ok_or_else(|| self.err("dangling escape"))?;
                        self.pos += e.len_utf8();
                        s.push(e);
                    }
                    _ => s.push(c),
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"') {
                break;
            }
            self.pos += c.len_utf8();
        }
        if start == self.pos {
            return Err(self.err("expected a node"));
        }
        Ok((self.src[start..self.pos].to_string(), false))
    }

    fn node(&mut self) -> Result<ProcessTree> {
        let (tok, quoted) = self.token()?;
        if quoted {
            return Ok(ProcessTree::Activity(tok));
        }
        self.skip_ws();
        let is_call = self.peek() == Some('(');
        match (tok.as_str(), is_call) {
            ("tau", false) => Ok(ProcessTree::Silent),
            (op @ ("seq" | "xor" | "par" | "loop"), true) => {
                let at = self.pos;
                self.expect('(')?;
                let mut children = vec![self.node()?];
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => {
                            self.pos += 1;
                            children.push(self.node()?);
                        }
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ',' or ')'")),
                    }
                }
                let arity_err = |msg: &str| Error::TreeSyntax {
                    offset: at,
                    message: msg.to_string(),
                };
                match op {
                    "loop" => {
                        if children.len() != 2 {
                            return Err(arity_err("loop takes exactly (body, redo)"));
                        }
                        let redo = children.pop().expect("two");
                        let body = children.pop().expect("two");
                        Ok(ProcessTree::looped(body, redo))
                    }
                    _ if children.len() < 2 => Err(arity_err("operators need at least two children")),
                    "seq" => Ok(ProcessTree::Sequence(children)),
                    "xor" => Ok(ProcessTree::Choice(children)),
                    _ => Ok(ProcessTree::Parallel(children)),
                }
            }
            (_, true) => Err(self.err(format!("unknown operator {tok:?}"))),
            _ => Ok(ProcessTree::Activity(tok)),
        }
    }
}

impl FromStr for ProcessTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let tree = p.node()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(tree)
    }
}

/// Nested JSON shape: `{"type": "seq", "children": [...]}`,
/// `{"type": "activity", "name": "a"}`, `{"type": "tau"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDocument {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeDocument>,
}

impl From<ProcessTree> for TreeDocument {
    fn from(t: ProcessTree) -> Self {
        let kind = t.operator_name().to_string();
        match t {
            ProcessTree::Activity(n) => TreeDocument {
                kind,
                name: Some(n),
                children: Vec::new(),
            },
            ProcessTree::Silent => TreeDocument {
                kind,
                name: None,
                children: Vec::new(),
            },
            ProcessTree::Loop(b, r) => TreeDocument {
                kind,
                name: None,
                children: vec![(*b).into(), (*r).into()],
            },
            ProcessTree::Sequence(c) | ProcessTree::Choice(c) | ProcessTree::Parallel(c) => TreeDocument {
                kind,
                name: None,
                children: c.into_iter().map(Into::into).collect(),
            },
        }
    }
}

impl TryFrom<TreeDocument> for ProcessTree {
    type Error = Error;

    fn try_from(d: TreeDocument) -> Result<Self> {
        let mut children = d
            .children
            .into_iter()
            .map(ProcessTree::try_from)
            .collect::<Result<Vec<_>>>()?;
        let tree = match d.kind.as_str() {
            "activity" => ProcessTree::Activity(d.name.ok_or_else(|| Error::InvalidTree("activity without name".into()))?),
            "tau" => ProcessTree::Silent,
            "seq" => ProcessTree::Sequence(children),
            "xor" => ProcessTree::Choice(children),
            "par" => ProcessTree::Parallel(children),
            "loop" if children.len() == 2 => {
                let r = children.pop().expect("two");
                let b = children.pop().expect("two");
                ProcessTree::looped(b, r)
            }
            other => return Err(Error::InvalidTree(format!("bad node {other:?}"))),
        };
        tree.validate()?;
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> ProcessTree {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        let tree = t("seq(a, xor(b,c), par(d,e), loop(f,g))");
        assert_eq!(tree.to_string(), "seq(a, xor(b, c), par(d, e), loop(f, g))");
        assert_eq!(t(&tree.to_string()), tree);
        assert_eq!(t("  seq ( a ,tau )"), ProcessTree::seq(vec![ProcessTree::activity("a"), ProcessTree::Silent]));
    }

    #[test]
    fn quoted_names() {
        let tree = ProcessTree::seq(vec![ProcessTree::activity("take shower"), ProcessTree::activity("tau")]);
        let text = tree.to_string();
        assert_eq!(text, r#"seq("take shower", "tau")"#);
        assert_eq!(t(&text), tree);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!("seq(a)".parse::<ProcessTree>(), Err(Error::TreeSyntax { .. })));
        assert!(matches!("loop(a,b,c)".parse::<ProcessTree>(), Err(Error::TreeSyntax { .. })));
        assert!(matches!("foo(a,b)".parse::<ProcessTree>(), Err(Error::TreeSyntax { .. })));
        assert!(matches!("seq(a,b".parse::<ProcessTree>(), Err(Error::TreeSyntax { .. })));
        assert!(matches!("a b".parse::<ProcessTree>(), Err(Error::TreeSyntax { .. })));
    }

    #[test]
    fn json_document() {
        let tree = t("seq(a, loop(b, tau))");
        let json = serde_json::to_string(&tree).unwrap();
        assert_eq!(
            json,
            r#"{"type":"seq","children":[{"type":"activity","name":"a"},{"type":"loop","children":[{"type":"activity","name":"b"},{"type":"tau"}]}]}"#
        );
        assert_eq!(serde_json::from_str::<ProcessTree>(&json).unwrap(), tree);
        assert!(serde_json::from_str::<ProcessTree>(r#"{"type":"seq","children":[{"type":"tau"}]}"#).is_err());
    }

    #[test]
    fn bounded_language() {
        let lang = t("par(a, seq(b, c))").language(10);
        assert_eq!(lang.len(), 3);
        let lang = t("loop(a, b)").language(5);
        let expected: BTreeSet<Vec<String>> = [vec!["a"], vec!["a", "b", "a"], vec!["a", "b", "a", "b", "a"]]
            .into_iter()
            .map(|v| v.into_iter().map(String::from).collect())
            .collect();
        assert_eq!(lang, expected);
        let flower = ProcessTree::flower(["a", "b"]);
        assert_eq!(flower.language(3).len(), 1 + 2 + 4 + 8);
    }
}
