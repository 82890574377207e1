//! Activities, traces and variant-compressed event logs.
//!
//! An [`EventLog`] stores each distinct trace once together with its
//! multiplicity. Every statistic in this crate is multiplicity-aware, so a
//! log with a million identical traces costs the same as a log with one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub mod csv;
pub mod text;
pub mod xes;

/// Label used when rendering the artificial start event.
pub const START_LABEL: &str = "⌊";
/// Label used when rendering the artificial end event.
pub const END_LABEL: &str = "⌋";

/// Dense handle of an activity inside one [`Alphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityId(pub u32);

impl ActivityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interning table mapping activity names to dense ids `0..len`.
#[derive(Debug, Clone, Default)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, ActivityId>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `name`, adding it to the table if needed.
    pub fn intern(&mut self, name: &str) -> Result<ActivityId> {
        if let Some(&id) = self.index.get(name) {
            return Ok(id);
        }
        if name.is_empty() {
            return Err(Error::EmptyActivityName);
        }
        if name == START_LABEL || name == END_LABEL {
            return Err(Error::ReservedName(name.to_string()));
        }
        let id = ActivityId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ActivityId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ActivityId) -> &str {
        &self.names[id.index()]
    }

    pub fn get_name(&self, id: ActivityId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, id: ActivityId) -> bool {
        id.index() < self.names.len()
    }

    /// Names in id order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn ids(&self) -> impl Iterator<Item = ActivityId> {
        (0..self.names.len() as u32).map(ActivityId)
    }
}

/// A non-empty sequence of activity ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trace(Vec<ActivityId>);

impl Trace {
    pub fn new(events: Vec<ActivityId>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::EmptyTrace);
        }
        Ok(Self(events))
    }

    pub fn events(&self) -> &[ActivityId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of (possibly overlapping) contiguous occurrences of `pattern`.
    pub fn occurrences(&self, pattern: &[ActivityId]) -> u64 {
        if pattern.is_empty() || pattern.len() > self.0.len() {
            return 0;
        }
        self.0.windows(pattern.len()).filter(|w| *w == pattern).count() as u64
    }
}

/// Multiset of traces over an interned alphabet.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    alphabet: Alphabet,
    variants: BTreeMap<Trace, u64>,
}

/// Incremental construction of an [`EventLog`].
#[derive(Debug, Default)]
pub struct LogBuilder {
    alphabet: Alphabet,
    variants: BTreeMap<Trace, u64>,
}

impl LogBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from an existing alphabet so that ids are preserved.
    pub fn with_alphabet(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            variants: BTreeMap::new(),
        }
    }

    pub fn intern(&mut self, name: &str) -> Result<ActivityId> {
        self.alphabet.intern(name)
    }

    pub fn push_ids(&mut self, events: Vec<ActivityId>, multiplicity: u64) -> Result<()> {
        if multiplicity == 0 {
            return Ok(());
        }
        if let Some(bad) = events.iter().find(|id| !self.alphabet.contains(**id)) {
            return Err(Error::UnknownActivity(format!("#{}", bad.0)));
        }
        *self.variants.entry(Trace::new(events)?).or_insert(0) += multiplicity;
        Ok(())
    }

    pub fn push_names<S: AsRef<str>>(&mut self, names: &[S], multiplicity: u64) -> Result<()> {
        let ids = names
            .iter()
            .map(|n| self.alphabet.intern(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.push_ids(ids, multiplicity)
    }

    pub fn build(self) -> EventLog {
        EventLog {
            alphabet: self.alphabet,
            variants: self.variants,
        }
    }
}

impl EventLog {
    /// Builds a log from `(sequence, multiplicity)` pairs.
    pub fn from_variants<I, T, S>(variants: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, u64)>,
        T: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut builder = LogBuilder::new();
        for (trace, count) in variants {
            builder.push_names(trace.as_ref(), count)?;
        }
        Ok(builder.build())
    }

    /// Builds a log with one entry per trace.
    pub fn from_traces<I, T, S>(traces: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[S]>,
        S: AsRef<str>,
    {
        Self::from_variants(traces.into_iter().map(|t| (t, 1)))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn variants(&self) -> impl Iterator<Item = (&Trace, u64)> {
        self.variants.iter().map(|(t, &c)| (t, c))
    }

    pub fn multiplicity(&self, trace: &Trace) -> u64 {
        self.variants.get(trace).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn num_variants(&self) -> usize {
        self.variants.len()
    }

    pub fn num_traces(&self) -> u64 {
        self.variants.values().sum()
    }

    pub fn num_events(&self) -> u64 {
        self.variants.iter().map(|(t, &c)| t.len() as u64 * c).sum()
    }

    pub fn names_of(&self, trace: &Trace) -> Vec<&str> {
        trace.events().iter().map(|&id| self.alphabet.name(id)).collect()
    }

    /// `Activities(L)`: ids that occur in at least one variant.
    pub fn activities(&self) -> BTreeSet<ActivityId> {
        let mut seen = vec![false; self.alphabet.len()];
        for trace in self.variants.keys() {
            for id in trace.events() {
                seen[id.index()] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| ActivityId(i as u32))
            .collect()
    }

    /// Occurring activity names in lexicographic order.
    pub fn activity_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .activities()
            .into_iter()
            .map(|id| self.alphabet.name(id))
            .collect();
        names.sort_unstable();
        names
    }

    /// `#(a, L)` for every id in the alphabet, indexed by id.
    pub fn activity_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.alphabet.len()];
        for (trace, &mult) in &self.variants {
            for id in trace.events() {
                counts[id.index()] += mult;
            }
        }
        counts
    }

    /// Occurrence count of each occurring activity, keyed by name.
    pub fn frequencies(&self) -> BTreeMap<String, u64> {
        self.activity_counts()
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c > 0)
            .map(|(i, c)| (self.alphabet.name(ActivityId(i as u32)).to_string(), c))
            .collect()
    }

    /// `#(σ, L)`: multiplicity-weighted count of contiguous, possibly
    /// overlapping occurrences of `pattern`.
    pub fn count_subsequence(&self, pattern: &[ActivityId]) -> u64 {
        if pattern.is_empty() {
            return 0;
        }
        self.variants
            .iter()
            .map(|(t, &c)| c * t.occurrences(pattern))
            .sum()
    }

    /// Like [`count_subsequence`](Self::count_subsequence) but by name.
    /// A name absent from the alphabet occurs zero times.
    pub fn count_named<S: AsRef<str>>(&self, pattern: &[S]) -> u64 {
        let ids: Option<Vec<ActivityId>> = pattern
            .iter()
            .map(|n| self.alphabet.id(n.as_ref()))
            .collect();
        ids.map_or(0, |ids| self.count_subsequence(&ids))
    }

    /// `L↾keep`. Traces that become empty are dropped; ids are re-assigned
    /// densely over `keep`.
    pub fn project(&self, keep: &BTreeSet<ActivityId>) -> Result<EventLog> {
        self.project_counting(keep).map(|(log, _)| log)
    }

    /// Projection that also reports how many traces became empty.
    pub fn project_counting(&self, keep: &BTreeSet<ActivityId>) -> Result<(EventLog, u64)> {
        if let Some(bad) = keep.iter().find(|id| !self.alphabet.contains(**id)) {
            return Err(Error::UnknownActivity(format!("#{}", bad.0)));
        }
        let mut remap = vec![None; self.alphabet.len()];
        let mut alphabet = Alphabet::new();
        for &id in keep {
            remap[id.index()] = Some(alphabet.intern(self.alphabet.name(id))?);
        }
        let mut builder = LogBuilder::with_alphabet(alphabet);
        let mut dropped = 0;
        for (trace, &mult) in &self.variants {
            let kept: Vec<ActivityId> = trace
                .events()
                .iter()
                .filter_map(|id| remap[id.index()])
                .collect();
            if kept.is_empty() {
                dropped += mult;
            } else {
                builder.push_ids(kept, mult)?;
            }
        }
        Ok((builder.build(), dropped))
    }

    /// Projection onto a set of names.
    pub fn project_names<I, S>(&self, keep: I) -> Result<EventLog>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let ids = keep
            .into_iter()
            .map(|n| {
                self.alphabet
                    .id(n.as_ref())
                    .ok_or_else(|| Error::UnknownActivity(n.as_ref().to_string()))
            })
            .collect::<Result<BTreeSet<_>>>()?;
        self.project(&ids)
    }

    /// Projection removing the named activities.
    pub fn without_names<I, S>(&self, remove: I) -> Result<EventLog>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keep: BTreeSet<ActivityId> = self.alphabet.ids().collect();
        for n in remove {
            let id = self
                .alphabet
                .id(n.as_ref())
                .ok_or_else(|| Error::UnknownActivity(n.as_ref().to_string()))?;
            keep.remove(&id);
        }
        self.project(&keep)
    }

    pub fn augment(&self, mode: AugmentMode) -> AugmentedView<'_> {
        AugmentedView { base: self, mode }
    }

    /// Variants as name sequences, sorted lexicographically. This is the
    /// canonical content of the log, independent of id assignment.
    pub fn canonical_variants(&self) -> Vec<(Vec<&str>, u64)> {
        let mut out: Vec<(Vec<&str>, u64)> = self
            .variants
            .iter()
            .map(|(t, &c)| (self.names_of(t), c))
            .collect();
        out.sort();
        out
    }

    /// Hex SHA-256 of the canonical variant multiset.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (names, count) in self.canonical_variants() {
            hasher.update(count.to_le_bytes());
            for n in names {
                hasher.update((n.len() as u64).to_le_bytes());
                hasher.update(n.as_bytes());
            }
            hasher.update([0xff]);
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Two logs are equal when they hold the same named variants with the same
/// multiplicities over the same alphabet, regardless of id assignment.
impl PartialEq for EventLog {
    fn eq(&self, other: &Self) -> bool {
        let mut a: Vec<&str> = self.alphabet.names().collect();
        let mut b: Vec<&str> = other.alphabet.names().collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b && self.canonical_variants() == other.canonical_variants()
    }
}

impl Eq for EventLog {}

impl fmt::Display for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (names, count)) in self.canonical_variants().into_iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "⟨{}⟩^{count}", names.join(","))?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentMode {
    EndAppended,
    StartPrepended,
}

/// One position of an augmented trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Start,
    Activity(ActivityId),
    End,
}

/// Read-only view of a log with artificial start or end events.
#[derive(Debug, Clone, Copy)]
pub struct AugmentedView<'a> {
    base: &'a EventLog,
    mode: AugmentMode,
}

impl<'a> AugmentedView<'a> {
    pub fn mode(&self) -> AugmentMode {
        self.mode
    }

    pub fn base(&self) -> &'a EventLog {
        self.base
    }

    /// Augmented variants with their multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<Symbol>, u64)> + 'a {
        let mode = self.mode;
        self.base.variants().map(move |(trace, count)| {
            let mut seq = Vec::with_capacity(trace.len() + 1);
            if mode == AugmentMode::StartPrepended {
                seq.push(Symbol::Start);
            }
            seq.extend(trace.events().iter().map(|&id| Symbol::Activity(id)));
            if mode == AugmentMode::EndAppended {
                seq.push(Symbol::End);
            }
            (seq, count)
        })
    }

    /// Multiplicity-weighted count of a contiguous symbol pattern.
    pub fn count(&self, pattern: &[Symbol]) -> u64 {
        if pattern.is_empty() {
            return 0;
        }
        self.iter()
            .map(|(seq, c)| c * seq.windows(pattern.len()).filter(|w| *w == pattern).count() as u64)
            .sum()
    }

    /// Renders a symbol with the sentinel labels.
    pub fn label(&self, symbol: Symbol) -> &'a str {
        match symbol {
            Symbol::Start => START_LABEL,
            Symbol::End => END_LABEL,
            Symbol::Activity(id) => self.base.alphabet.name(id),
        }
    }

    /// Drops the sentinels again, yielding a log equal to the base.
    pub fn strip(&self) -> EventLog {
        let mut builder = LogBuilder::with_alphabet(self.base.alphabet.clone());
        for (seq, count) in self.iter() {
            let ids = seq
                .into_iter()
                .filter_map(|s| match s {
                    Symbol::Activity(id) => Some(id),
                    _ => None,
                })
                .collect();
            builder
                .push_ids(ids, count)
                .expect("base traces are non-empty");
        }
        builder.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(spec: &[(&str, u64)]) -> EventLog {
        EventLog::from_variants(
            spec.iter()
                .map(|(s, c)| (s.split(',').collect::<Vec<_>>(), *c)),
        )
        .unwrap()
    }

    #[test]
    fn identical_traces_merge() {
        let l = EventLog::from_traces([["a", "b", "c"], ["a", "b", "c"], ["b", "a", "c"]]).unwrap();
        assert_eq!(l, log(&[("a,b,c", 2), ("b,a,c", 1)]));
        assert_eq!(l.num_traces(), 3);
        assert_eq!(l.num_events(), 9);
    }

    #[test]
    fn count_single_activity() {
        let l = log(&[("a,b,c", 2), ("b,a,c", 3)]);
        assert_eq!(l.count_named(&["a"]), 5);
    }

    #[test]
    fn count_pairs_and_overlaps() {
        let l = log(&[("a,b,c", 2), ("b,a,c", 3)]);
        assert_eq!(l.count_named(&["a", "b"]), 2);
        let xs = log(&[("x,x,x", 1)]);
        assert_eq!(xs.count_named(&["x", "x"]), 2);
        assert_eq!(xs.count_named(&["missing"]), 0);
    }

    #[test]
    fn projection_examples() {
        let l = log(&[("a,b,c,a,b,c", 1)]);
        assert_eq!(l.project_names(["a", "c"]).unwrap(), log(&[("a,c,a,c", 1)]));
        assert_eq!(l.project_names(["a", "b", "c"]).unwrap(), l);

        let swap = log(&[("a,b", 1), ("b,a", 1)]);
        assert_eq!(swap.project_names(["b"]).unwrap(), log(&[("b", 2)]));
    }

    #[test]
    fn projection_drops_empty_traces() {
        let l = log(&[("a,b", 2), ("c", 3)]);
        let keep: BTreeSet<_> = [l.alphabet().id("a").unwrap()].into_iter().collect();
        let (p, dropped) = l.project_counting(&keep).unwrap();
        assert_eq!(dropped, 3);
        assert_eq!(p, log(&[("a", 2)]));
    }

    #[test]
    fn projection_rejects_unknown_ids() {
        let l = log(&[("a", 1)]);
        let keep: BTreeSet<_> = [ActivityId(7)].into_iter().collect();
        assert!(matches!(l.project(&keep), Err(Error::UnknownActivity(_))));
        assert!(l.project_names(["zz"]).is_err());
    }

    #[test]
    fn augmentation() {
        let l = log(&[("a,b", 1)]);
        let end = l.augment(AugmentMode::EndAppended);
        let labels: Vec<_> = end.iter().next().unwrap().0.into_iter().map(|s| end.label(s)).collect();
        assert_eq!(labels, ["a", "b", "⌋"]);
        let start = l.augment(AugmentMode::StartPrepended);
        let labels: Vec<_> = start.iter().next().unwrap().0.into_iter().map(|s| start.label(s)).collect();
        assert_eq!(labels, ["⌊", "a", "b"]);
        assert_eq!(end.strip(), l);
        assert_eq!(start.strip(), l);
    }

    #[test]
    fn sentinels_are_reserved() {
        assert!(matches!(
            EventLog::from_traces([["a", "⌋"]]),
            Err(Error::ReservedName(_))
        ));
        assert!(matches!(EventLog::from_traces([[""]]), Err(Error::EmptyActivityName)));
    }

    #[test]
    fn digest_ignores_id_assignment() {
        let a = log(&[("a,b", 1), ("b,c", 2)]);
        let b = log(&[("b,c", 2), ("a,b", 1)]);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), log(&[("a,b", 2), ("b,c", 2)]).digest());
    }
}
