//! Directly-follows graphs and recursive process-tree discovery.
//!
//! The miner repeatedly looks for a cut of the directly-follows graph
//! (exclusive choice, sequence, concurrency, loop, in that order), splits
//! the log along it and recurses. When no cut applies it falls back to the
//! flower model over the remaining activities. Without edge filtering every
//! trace of the input log fits the result.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::eventlog::EventLog;
use crate::tree::ProcessTree;

/// Directly-follows graph with start and end counts, over the activities
/// occurring in a log sorted by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfg {
    pub names: Vec<String>,
    pub activity_counts: Vec<u64>,
    /// `(from, to) -> count`, indices into `names`.
    pub edges: BTreeMap<(usize, usize), u64>,
    pub start_counts: Vec<u64>,
    pub end_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfgNode {
    pub id: String,
    pub count: u64,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfgEdge {
    pub source: String,
    pub target: String,
    pub count: u64,
}

/// Node/edge list form of a [`Dfg`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfgDocument {
    pub nodes: Vec<DfgNode>,
    pub edges: Vec<DfgEdge>,
}

impl Dfg {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn edge_count(&self, from: &str, to: &str) -> u64 {
        match (self.index(from), self.index(to)) {
            (Some(a), Some(b)) => self.edges.get(&(a, b)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn start_count(&self, name: &str) -> u64 {
        self.index(name).map_or(0, |i| self.start_counts[i])
    }

    pub fn end_count(&self, name: &str) -> u64 {
        self.index(name).map_or(0, |i| self.end_counts[i])
    }

    pub fn to_document(&self) -> DfgDocument {
        DfgDocument {
            nodes: (0..self.names.len())
                .map(|i| DfgNode {
                    id: self.names[i].clone(),
                    count: self.activity_counts[i],
                    start: self.start_counts[i],
                    end: self.end_counts[i],
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|(&(a, b), &count)| DfgEdge {
                    source: self.names[a].clone(),
                    target: self.names[b].clone(),
                    count,
                })
                .collect(),
        }
    }
}

pub fn build_dfg(log: &EventLog) -> Dfg {
    let names: Vec<String> = log.activity_names().into_iter().map(String::from).collect();
    let n = names.len();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut dfg = Dfg {
        activity_counts: vec![0; n],
        edges: BTreeMap::new(),
        start_counts: vec![0; n],
        end_counts: vec![0; n],
        names: names.clone(),
    };
    for (trace, mult) in log.variants() {
        let idx: Vec<usize> = log.names_of(trace).iter().map(|s| index[s]).collect();
        for &i in &idx {
            dfg.activity_counts[i] += mult;
        }
        for w in idx.windows(2) {
            *dfg.edges.entry((w[0], w[1])).or_insert(0) += mult;
        }
        dfg.start_counts[idx[0]] += mult;
        dfg.end_counts[*idx.last().expect("non-empty trace")] += mult;
    }
    dfg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    /// Edges below this share of the strongest outgoing edge of their
    /// source are ignored during cut detection. `0` keeps every edge.
    pub edge_filter_ratio: f64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self { edge_filter_ratio: 0.0 }
    }
}

impl DiscoveryConfig {
    pub fn filtered(ratio: f64) -> Self {
        Self {
            edge_filter_ratio: ratio.clamp(0.0, 0.999_999),
        }
    }
}

/// The model accepting every sequence over `activities`.
pub fn flower<I, S>(activities: I) -> ProcessTree
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    ProcessTree::flower(activities)
}

type SubLog = BTreeMap<Vec<usize>, u64>;

/// Discovers a process tree for `log`. An empty log yields the silent tree.
pub fn discover(log: &EventLog, config: DiscoveryConfig) -> ProcessTree {
    let names: Vec<String> = log.activity_names().into_iter().map(String::from).collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut sub = SubLog::new();
    for (trace, mult) in log.variants() {
        let idx = log.names_of(trace).iter().map(|s| index[s]).collect();
        *sub.entry(idx).or_insert(0) += mult;
    }
    let miner = Miner {
        names: &names,
        ratio: config.edge_filter_ratio.max(0.0),
    };
    miner.mine(sub)
}

struct Miner<'a> {
    names: &'a [String],
    ratio: f64,
}

/// Graph of one sublog over local indices `0..acts.len()`.
struct LocalGraph {
    acts: Vec<usize>,
    edge: Vec<Vec<bool>>,
    start: Vec<bool>,
    end: Vec<bool>,
}

impl LocalGraph {
    fn new(log: &SubLog, ratio: f64) -> Self {
        let mut acts: Vec<usize> = log.keys().flatten().copied().collect();
        acts.sort_unstable();
        acts.dedup();
        let n = acts.len();
        let local = |g: usize| acts.binary_search(&g).expect("activity of sublog");
        let mut counts = vec![vec![0u64; n]; n];
        let mut start = vec![false; n];
        let mut end = vec![false; n];
        for (trace, &mult) in log {
            if trace.is_empty() {
                continue;
            }
            start[local(trace[0])] = true;
            end[local(*trace.last().expect("non-empty"))] = true;
            for w in trace.windows(2) {
                counts[local(w[0])][local(w[1])] += mult;
            }
        }
        let edge = counts
            .iter()
            .map(|row| {
                let max = row.iter().copied().max().unwrap_or(0) as f64;
                row.iter().map(|&c| c > 0 && c as f64 >= ratio * max).collect()
            })
            .collect();
        Self { acts, edge, start, end }
    }

    fn len(&self) -> usize {
        self.acts.len()
    }

    fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut reach = vec![vec![false; n]; n];
        for (s, row) in reach.iter_mut().enumerate() {
            let mut queue: VecDeque<usize> = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if self.edge[u][v] && !row[v] {
                        row[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        reach
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }

    /// Classes ordered by their smallest member, members ascending.
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.0.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = by_root.into_values().collect();
        groups.sort_by_key(|g| g[0]);
        groups
    }
}

fn components(n: usize, connected: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if connected(i, j) {
                uf.union(i, j);
            }
        }
    }
    uf.groups()
}

enum Cut {
    Xor(Vec<Vec<usize>>),
    Seq(Vec<Vec<usize>>),
    Par(Vec<Vec<usize>>),
    Loop(Vec<usize>, Vec<usize>),
}

impl Miner<'_> {
    fn mine(&self, log: SubLog) -> ProcessTree {
        if log.is_empty() {
            return ProcessTree::Silent;
        }
        let empty = log.get(&Vec::new()).copied().unwrap_or(0);
        if empty > 0 {
            let rest: SubLog = log.into_iter().filter(|(t, _)| !t.is_empty()).collect();
            if rest.is_empty() {
                return ProcessTree::Silent;
            }
            let inner = self.mine(rest);
            return flatten(ProcessTree::Choice(vec![ProcessTree::Silent, inner]));
        }

        let graph = LocalGraph::new(&log, self.ratio);
        if graph.len() == 1 {
            let a = ProcessTree::Activity(self.names[graph.acts[0]].clone());
            return if log.keys().all(|t| t.len() == 1) {
                a
            } else {
                ProcessTree::looped(a, ProcessTree::Silent)
            };
        }

        let cut = xor_cut(&graph)
            .or_else(|| seq_cut(&graph))
            .or_else(|| par_cut(&graph))
            .or_else(|| loop_cut(&graph));
        let Some(cut) = cut else {
            return ProcessTree::flower(graph.acts.iter().map(|&g| self.names[g].clone()));
        };

        // local group indices -> global activity membership
        let to_global = |group: &[usize]| -> Vec<usize> { group.iter().map(|&l| graph.acts[l]).collect() };
        let is_seq = matches!(cut, Cut::Seq(_));
        let tree = match cut {
            Cut::Xor(groups) => {
                let groups: Vec<Vec<usize>> = groups.iter().map(|g| to_global(g)).collect();
                let mut subs = vec![SubLog::new(); groups.len()];
                for (trace, mult) in &log {
                    // the group holding most of the trace's events takes it
                    let best = (0..groups.len())
                        .max_by_key(|&i| {
                            let hits = trace.iter().filter(|a| groups[i].binary_search(a).is_ok()).count();
                            (hits, std::cmp::Reverse(i))
                        })
                        .expect("at least two groups");
                    let projected = project(trace, &groups[best]);
                    *subs[best].entry(projected).or_insert(0) += mult;
                }
                ProcessTree::Choice(
                    subs.into_iter()
                        .zip(&groups)
                        .map(|(s, g)| {
                            if s.is_empty() {
                                self.unseen(g)
                            } else {
                                self.mine(s)
                            }
                        })
                        .collect(),
                )
            }
            Cut::Seq(groups) | Cut::Par(groups) => {
                let groups: Vec<Vec<usize>> = groups.iter().map(|g| to_global(g)).collect();
                let mut subs = vec![SubLog::new(); groups.len()];
                for (trace, mult) in &log {
                    for (sub, group) in subs.iter_mut().zip(&groups) {
                        *sub.entry(project(trace, group)).or_insert(0) += mult;
                    }
                }
                let children = subs.into_iter().map(|s| self.mine(s)).collect();
                if is_seq {
                    ProcessTree::Sequence(children)
                } else {
                    ProcessTree::Parallel(children)
                }
            }
            Cut::Loop(body, redo) => {
                let body = to_global(&body);
                let redo = to_global(&redo);
                let mut body_log = SubLog::new();
                let mut redo_log = SubLog::new();
                for (trace, mult) in &log {
                    let mut segment: Vec<usize> = Vec::new();
                    let mut in_body = true;
                    for &a in trace {
                        let a_in_body = body.binary_search(&a).is_ok();
                        if a_in_body != in_body {
                            let target = if in_body { &mut body_log } else { &mut redo_log };
                            *target.entry(std::mem::take(&mut segment)).or_insert(0) += mult;
                            in_body = a_in_body;
                        }
                        segment.push(a);
                    }
                    if !in_body {
                        *redo_log.entry(segment).or_insert(0) += mult;
                        segment = Vec::new();
                    }
                    *body_log.entry(segment).or_insert(0) += mult;
                }
                let redo_tree = if redo_log.is_empty() {
                    self.unseen(&redo)
                } else {
                    self.mine(redo_log)
                };
                ProcessTree::looped(self.mine(body_log), redo_tree)
            }
        };
        flatten(tree)
    }

    /// Activities kept by a cut on a filtered graph but absent from the
    /// split sublog.
    fn unseen(&self, group: &[usize]) -> ProcessTree {
        ProcessTree::flower(group.iter().map(|&g| self.names[g].clone()))
    }
}

fn project(trace: &[usize], group: &[usize]) -> Vec<usize> {
    trace.iter().copied().filter(|a| group.binary_search(a).is_ok()).collect()
}

/// Merges children of the same operator into their parent.
fn flatten(tree: ProcessTree) -> ProcessTree {
    fn absorb(children: Vec<ProcessTree>, same: fn(&ProcessTree) -> Option<&Vec<ProcessTree>>) -> Vec<ProcessTree> {
        let mut out = Vec::with_capacity(children.len());
        for c in children {
            match same(&c) {
                Some(inner) => out.extend(inner.iter().cloned()),
                None => out.push(c),
            }
        }
        out
    }
    match tree {
        ProcessTree::Sequence(c) => ProcessTree::Sequence(absorb(c, |t| match t {
            ProcessTree::Sequence(i) => Some(i),
            _ => None,
        })),
        ProcessTree::Choice(c) => ProcessTree::Choice(absorb(c, |t| match t {
            ProcessTree::Choice(i) => Some(i),
            _ => None,
        })),
        ProcessTree::Parallel(c) => ProcessTree::Parallel(absorb(c, |t| match t {
            ProcessTree::Parallel(i) => Some(i),
            _ => None,
        })),
        other => other,
    }
}

fn xor_cut(g: &LocalGraph) -> Option<Cut> {
    let groups = components(g.len(), |i, j| g.edge[i][j] || g.edge[j][i]);
    (groups.len() > 1).then_some(Cut::Xor(groups))
}

fn seq_cut(g: &LocalGraph) -> Option<Cut> {
    let n = g.len();
    let reach = g.reachability();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if reach[i][j] && reach[j][i] {
                uf.union(i, j);
            }
        }
    }
    loop {
        let groups = uf.groups();
        let m = groups.len();
        if m < 2 {
            return None;
        }
        let greach: Vec<Vec<bool>> = (0..m)
            .map(|x| {
                (0..m)
                    .map(|y| x != y && groups[x].iter().any(|&a| groups[y].iter().any(|&b| reach[a][b])))
                    .collect()
            })
            .collect();
        let mut changed = false;
        for x in 0..m {
            for y in x + 1..m {
                if !greach[x][y] && !greach[y][x] {
                    changed |= uf.union(groups[x][0], groups[y][0]);
                }
            }
        }
        if changed {
            continue;
        }
        // cycles between groups through different members
        let mut closure = greach.clone();
        for k in 0..m {
            for x in 0..m {
                if closure[x][k] {
                    for y in 0..m {
                        if closure[k][y] {
                            closure[x][y] = true;
                        }
                    }
                }
            }
        }
        for x in 0..m {
            for y in x + 1..m {
                if closure[x][y] && closure[y][x] {
                    changed |= uf.union(groups[x][0], groups[y][0]);
                }
            }
        }
        if changed {
            continue;
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&x| std::cmp::Reverse(closure[x].iter().filter(|&&r| r).count()));
        return Some(Cut::Seq(order.into_iter().map(|x| groups[x].clone()).collect()));
    }
}

fn par_cut(g: &LocalGraph) -> Option<Cut> {
    let groups = components(g.len(), |i, j| !(g.edge[i][j] && g.edge[j][i]));
    let feasible = |grp: &Vec<usize>| grp.iter().any(|&a| g.start[a]) && grp.iter().any(|&a| g.end[a]);
    let (mut good, bad): (Vec<Vec<usize>>, Vec<Vec<usize>>) = groups.into_iter().partition(feasible);
    if good.is_empty() {
        return None;
    }
    for b in bad {
        good[0].extend(b);
    }
    good[0].sort_unstable();
    (good.len() > 1).then_some(Cut::Par(good))
}

fn loop_cut(g: &LocalGraph) -> Option<Cut> {
    let n = g.len();
    let in_body: Vec<bool> = (0..n).map(|a| g.start[a] || g.end[a]).collect();
    let rest: Vec<usize> = (0..n).filter(|&a| !in_body[a]).collect();
    if rest.is_empty() {
        return None;
    }
    let comps = components(rest.len(), |i, j| {
        let (a, b) = (rest[i], rest[j]);
        g.edge[a][b] || g.edge[b][a]
    });
    let starts: Vec<usize> = (0..n).filter(|&a| g.start[a]).collect();
    let ends: Vec<usize> = (0..n).filter(|&a| g.end[a]).collect();
    let mut body: Vec<usize> = (0..n).filter(|&a| in_body[a]).collect();
    let mut redo = Vec::new();
    for comp in comps {
        let comp: Vec<usize> = comp.into_iter().map(|i| rest[i]).collect();
        let mut is_redo = true;
        for &c in &comp {
            for b in 0..n {
                if !in_body[b] {
                    continue;
                }
                // redo is entered only from end activities and left only
                // towards start activities
                if g.edge[b][c] && !g.end[b] || g.edge[c][b] && !g.start[b] {
                    is_redo = false;
                }
            }
            let from_end = ends.iter().filter(|&&e| g.edge[e][c]).count();
            if from_end > 0 && from_end < ends.len() {
                is_redo = false;
            }
            let to_start = starts.iter().filter(|&&s| g.edge[c][s]).count();
            if to_start > 0 && to_start < starts.len() {
                is_redo = false;
            }
        }
        if is_redo {
            redo.extend(comp);
        } else {
            body.extend(comp);
        }
    }
    if redo.is_empty() {
        return None;
    }
    body.sort_unstable();
    redo.sort_unstable();
    Some(Cut::Loop(body, redo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(s: &str) -> ProcessTree {
        s.parse().unwrap()
    }

    #[test]
    fn dfg_counts() {
        let log = EventLog::from_variants([(vec!["a", "b", "c"], 2)]).unwrap();
        let dfg = build_dfg(&log);
        assert_eq!(dfg.edge_count("a", "b"), 2);
        assert_eq!(dfg.edge_count("b", "c"), 2);
        assert_eq!(dfg.edge_count("a", "c"), 0);
        assert_eq!(dfg.start_count("a"), 2);
        assert_eq!(dfg.end_count("c"), 2);
        let doc = dfg.to_document();
        assert_eq!(doc.nodes.len(), 3);
        assert_eq!(doc.edges.len(), 2);
    }

    #[test]
    fn sequence() {
        let log = EventLog::from_variants([(vec!["a", "b", "c"], 5)]).unwrap();
        assert_eq!(discover(&log, DiscoveryConfig::default()), tree("seq(a, b, c)"));
    }

    #[test]
    fn parallel() {
        let log = EventLog::from_traces([["a", "b"], ["b", "a"]]).unwrap();
        assert_eq!(discover(&log, DiscoveryConfig::default()), tree("par(a, b)"));
    }

    #[test]
    fn choice_and_skip() {
        let log = EventLog::from_traces([vec!["a", "b", "d"], vec!["a", "c", "d"], vec!["a", "d"]]).unwrap();
        assert_eq!(discover(&log, DiscoveryConfig::default()), tree("seq(a, xor(tau, b, c), d)"));
    }

    #[test]
    fn simple_loop() {
        let log = EventLog::from_traces([vec!["a"], vec!["a", "b", "a"], vec!["a", "b", "a", "b", "a"]]).unwrap();
        assert_eq!(discover(&log, DiscoveryConfig::default()), tree("loop(a, b)"));
    }

    #[test]
    fn repeated_single_activity() {
        let log = EventLog::from_traces([vec!["a"], vec!["a", "a"]]).unwrap();
        assert_eq!(discover(&log, DiscoveryConfig::default()), tree("loop(a, tau)"));
    }

    #[test]
    fn no_cut_gives_flower() {
        let log = EventLog::from_traces([vec!["a", "b", "c"], vec!["a", "b", "c", "a", "b", "c"]]).unwrap();
        assert_eq!(discover(&log, DiscoveryConfig::default()), flower(["a", "b", "c"]));
    }

    #[test]
    fn variant_order_is_irrelevant() {
        let one = EventLog::from_traces([vec!["a", "b"], vec!["c"], vec!["b", "a"]]).unwrap();
        let two = EventLog::from_traces([vec!["b", "a"], vec!["a", "b"], vec!["c"]]).unwrap();
        let cfg = DiscoveryConfig::default();
        assert_eq!(discover(&one, cfg), discover(&two, cfg));
    }

    #[test]
    fn edge_filter_drops_rare_edges() {
        let log = EventLog::from_variants([(vec!["a", "b", "c", "d"], 50), (vec!["a", "c", "b", "d"], 1)]).unwrap();
        assert_eq!(discover(&log, DiscoveryConfig::filtered(0.2)), tree("seq(a, b, c, d)"));
        assert_eq!(discover(&log, DiscoveryConfig::default()), tree("seq(a, par(b, c), d)"));
    }
}
