//! Replay of traces on process trees.
//!
//! A tree state records, per node, whether it has not started, is running
//! (with the state of the active children) or is done. Silent steps are the
//! silent leaves and the exit of a loop after its body. Firing an event takes
//! only the silent steps needed to enable it; every state reachable that way
//! is tracked, and the first accepting run in state order is reported. Before
//! each visible step the labels reachable through silent steps from the
//! state after the previous visible step are counted.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::tree::ProcessTree;

/// Upper bound on simultaneously tracked states per trace position.
pub const MAX_REPLAY_STATES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum St {
    Ready,
    Done,
    Seq(usize, Box<St>),
    Xor(usize, Box<St>),
    Par(Vec<St>),
    Body(Box<St>),
    AfterBody,
    Redo(Box<St>),
}

fn init(t: &ProcessTree) -> St {
    match t {
        ProcessTree::Activity(_) | ProcessTree::Silent | ProcessTree::Choice(_) => St::Ready,
        ProcessTree::Sequence(c) => St::Seq(0, Box::new(init(&c[0]))),
        ProcessTree::Parallel(c) => St::Par(c.iter().map(init).collect()),
        ProcessTree::Loop(b, _) => St::Body(Box::new(init(b))),
    }
}

/// Whether silent steps alone can complete `t` from `s`.
fn finishable(t: &ProcessTree, s: &St) -> bool {
    match (t, s) {
        (_, St::Done) => true,
        (ProcessTree::Silent, St::Ready) => true,
        (ProcessTree::Sequence(c), St::Seq(i, cs)) => {
            finishable(&c[*i], cs) && c[i + 1..].iter().all(|x| finishable(x, &init(x)))
        }
        (ProcessTree::Choice(c), St::Ready) => c.iter().any(|x| finishable(x, &init(x))),
        (ProcessTree::Choice(c), St::Xor(i, cs)) => finishable(&c[*i], cs),
        (ProcessTree::Parallel(c), St::Par(ss)) => c.iter().zip(ss).all(|(x, s)| finishable(x, s)),
        (ProcessTree::Loop(b, _), St::Body(bs)) => finishable(b, bs),
        (ProcessTree::Loop(..), St::AfterBody) => true,
        (ProcessTree::Loop(b, r), St::Redo(rs)) => finishable(r, rs) && finishable(b, &init(b)),
        _ => false,
    }
}

/// Labels that can be the next visible step from `s`.
fn enabled<'a>(t: &'a ProcessTree, s: &St, out: &mut BTreeSet<&'a str>) {
    match (t, s) {
        (ProcessTree::Activity(a), St::Ready) => {
            out.insert(a);
        }
        (ProcessTree::Sequence(c), St::Seq(i, cs)) => {
            enabled(&c[*i], cs, out);
            if finishable(&c[*i], cs) {
                for x in &c[i + 1..] {
                    enabled(x, &init(x), out);
                    if !finishable(x, &init(x)) {
                        break;
                    }
                }
            }
        }
        (ProcessTree::Choice(c), St::Ready) => c.iter().for_each(|x| enabled(x, &init(x), out)),
        (ProcessTree::Choice(c), St::Xor(i, cs)) => enabled(&c[*i], cs, out),
        (ProcessTree::Parallel(c), St::Par(ss)) => c.iter().zip(ss).for_each(|(x, s)| enabled(x, s, out)),
        (ProcessTree::Loop(b, r), St::Body(bs)) => {
            enabled(b, bs, out);
            if finishable(b, bs) {
                enabled_after_body(b, r, out);
            }
        }
        (ProcessTree::Loop(b, r), St::AfterBody) => enabled_after_body(b, r, out),
        (ProcessTree::Loop(b, r), St::Redo(rs)) => {
            enabled(r, rs, out);
            if finishable(r, rs) {
                enabled(b, &init(b), out);
                if finishable(b, &init(b)) {
                    enabled_after_body(b, r, out);
                }
            }
        }
        _ => {}
    }
}

fn enabled_after_body<'a>(b: &'a ProcessTree, r: &'a ProcessTree, out: &mut BTreeSet<&'a str>) {
    enabled(r, &init(r), out);
    if finishable(r, &init(r)) {
        enabled(b, &init(b), out);
    }
}

/// States reached by firing `a` from `s`, taking silent steps only where
/// needed to enable `a`.
fn fire(t: &ProcessTree, s: &St, a: &str, out: &mut Vec<St>) {
    match (t, s) {
        (ProcessTree::Activity(x), St::Ready) if x == a => out.push(St::Done),
        (ProcessTree::Sequence(c), St::Seq(i, cs)) => {
            let wrap = |j: usize, ns: St| {
                if ns != St::Done {
                    St::Seq(j, Box::new(ns))
                } else if j + 1 == c.len() {
                    St::Done
                } else {
                    St::Seq(j + 1, Box::new(init(&c[j + 1])))
                }
            };
            out.extend(fired(&c[*i], cs, a).into_iter().map(|ns| wrap(*i, ns)));
            if finishable(&c[*i], cs) {
                for j in i + 1..c.len() {
                    let start = init(&c[j]);
                    out.extend(fired(&c[j], &start, a).into_iter().map(|ns| wrap(j, ns)));
                    if !finishable(&c[j], &start) {
                        break;
                    }
                }
            }
        }
        (ProcessTree::Choice(c), St::Ready) => {
            for (i, x) in c.iter().enumerate() {
                out.extend(fired(x, &init(x), a).into_iter().map(|ns| wrap_xor(i, ns)));
            }
        }
        (ProcessTree::Choice(c), St::Xor(i, cs)) => {
            out.extend(fired(&c[*i], cs, a).into_iter().map(|ns| wrap_xor(*i, ns)));
        }
        (ProcessTree::Parallel(c), St::Par(ss)) => {
            for (i, x) in c.iter().enumerate() {
                for ns in fired(x, &ss[i], a) {
                    let mut next = ss.clone();
                    next[i] = ns;
                    if next.iter().all(|y| *y == St::Done) {
                        out.push(St::Done);
                    } else {
                        out.push(St::Par(next));
                    }
                }
            }
        }
        (ProcessTree::Loop(b, r), St::Body(bs)) => {
            out.extend(fired(b, bs, a).into_iter().map(wrap_body));
            if finishable(b, bs) {
                fire_after_body(b, r, a, out);
            }
        }
        (ProcessTree::Loop(b, r), St::AfterBody) => fire_after_body(b, r, a, out),
        (ProcessTree::Loop(b, r), St::Redo(rs)) => {
            out.extend(fired(r, rs, a).into_iter().map(|ns| wrap_redo(b, ns)));
            if finishable(r, rs) {
                out.extend(fired(b, &init(b), a).into_iter().map(wrap_body));
                if finishable(b, &init(b)) {
                    fire_after_body(b, r, a, out);
                }
            }
        }
        _ => {}
    }
}

fn fired(t: &ProcessTree, s: &St, a: &str) -> Vec<St> {
    let mut v = Vec::new();
    fire(t, s, a, &mut v);
    v
}

fn fire_after_body(b: &ProcessTree, r: &ProcessTree, a: &str, out: &mut Vec<St>) {
    out.extend(fired(r, &init(r), a).into_iter().map(|ns| wrap_redo(b, ns)));
    if finishable(r, &init(r)) {
        out.extend(fired(b, &init(b), a).into_iter().map(wrap_body));
    }
}

fn wrap_body(ns: St) -> St {
    if ns == St::Done {
        St::AfterBody
    } else {
        St::Body(Box::new(ns))
    }
}

fn wrap_xor(i: usize, ns: St) -> St {
    if ns == St::Done {
        St::Done
    } else {
        St::Xor(i, Box::new(ns))
    }
}

fn wrap_redo(body: &ProcessTree, ns: St) -> St {
    if ns == St::Done {
        St::Body(Box::new(init(body)))
    } else {
        St::Redo(Box::new(ns))
    }
}

/// Result of replaying one trace.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceReplay {
    /// Enabled-label counts before each visible step.
    Accepted(Vec<usize>),
    Rejected,
    /// The search exceeded [`MAX_REPLAY_STATES`].
    Undecided,
}

impl TraceReplay {
    pub fn mean(&self) -> Option<f64> {
        match self {
            TraceReplay::Accepted(c) if !c.is_empty() => Some(c.iter().sum::<usize>() as f64 / c.len() as f64),
            _ => None,
        }
    }
}

/// Replays traces on one tree, caching enabled-label counts across traces.
pub struct Replayer<'a> {
    tree: &'a ProcessTree,
    enabled: HashMap<St, usize>,
}

impl<'a> Replayer<'a> {
    pub fn new(tree: &'a ProcessTree) -> Self {
        Self {
            tree,
            enabled: HashMap::new(),
        }
    }

    fn enabled_count(&mut self, s: &St) -> usize {
        if let Some(&n) = self.enabled.get(s) {
            return n;
        }
        let mut labels = BTreeSet::new();
        enabled(self.tree, s, &mut labels);
        self.enabled.insert(s.clone(), labels.len());
        labels.len()
    }

    pub fn replay<S: AsRef<str>>(&mut self, trace: &[S]) -> TraceReplay {
        // layers[k]: states after k events, each with the index of its
        // predecessor in layers[k - 1]
        let mut layers: Vec<Vec<(St, usize)>> = vec![vec![(init(self.tree), 0)]];
        for event in trace {
            let mut next: BTreeMap<St, usize> = BTreeMap::new();
            for (idx, (s, _)) in layers.last().expect("non-empty").iter().enumerate() {
                for ns in fired(self.tree, s, event.as_ref()) {
                    next.entry(ns).or_insert(idx);
                }
            }
            if next.is_empty() {
                return TraceReplay::Rejected;
            }
            if next.len() > MAX_REPLAY_STATES {
                return TraceReplay::Undecided;
            }
            layers.push(next.into_iter().collect());
        }
        let last = layers.last().expect("non-empty");
        let Some(mut idx) = last.iter().position(|(s, _)| finishable(self.tree, s)) else {
            return TraceReplay::Rejected;
        };
        let mut run = Vec::with_capacity(trace.len() + 1);
        for layer in layers.iter().rev() {
            let (s, parent) = &layer[idx];
            run.push(s.clone());
            idx = *parent;
        }
        run.reverse();
        run.pop();
        TraceReplay::Accepted(run.iter().map(|s| self.enabled_count(s)).collect())
    }
}
