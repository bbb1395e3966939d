//! The stochastic flow `X_{s,t}` built from lineage tracing, and what it
//! leaves behind at time `t`: the survivor tree, the dust and the
//! non-trivial blocks with their atoms.
//!
//! Tracing a point `x` over `(s, t]` scans the levels of its ancestor
//! complexes from the top: the first level with an event in `(s, t]` yields
//! the latest such event `(u₁, w₁, p₁)`; the search then restarts from `p₁`
//! over strictly deeper levels and times in `(u₁, t]`, and so on. At finite
//! truncation depth the sequence always terminates, so the image of `x` is
//! the last parent reached (or `x` itself when nothing hit it).

use std::fmt::Display;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::events::{child_key, root_key, EventStore};
use crate::scalar::Exact;
use crate::space::{measure, Alphabet, Word};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step {
    pub time: f64,
    pub word: Word,
    pub parent: Word,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lineage {
    pub start: Word,
    pub steps: Vec<Step>,
    pub end: Word,
}

impl Lineage {
    pub fn is_dust(&self) -> bool {
        self.steps.is_empty()
    }

    /// Levels `N_1 < N_2 < ...` of the events that moved the lineage.
    pub fn levels(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.word.level()).collect()
    }
}

fn check_point(store: &EventStore, x: &Word) -> Result<()> {
    let precision = store.space().precision;
    if x.level() != precision {
        return Err(Error::NotAPoint { level: x.level(), precision });
    }
    Ok(())
}

/// Follows a lineage from `point`, looking at levels `≥ from_level` and
/// times in `(lo, t]`. Returns the final position.
fn follow(
    store: &EventStore,
    mut steps: Option<&mut Vec<Step>>,
    from_level: usize,
    mut lo: f64,
    mut point: Word,
    t: f64,
) -> Result<Word> {
    for n in from_level..=store.depth() {
        if lo >= t {
            break;
        }
        if let Some(e) = store.latest_in(&point.prefix(n), (lo, t))? {
            lo = e.time;
            point = e.parent.clone();
            if let Some(steps) = steps.as_deref_mut() {
                steps.push(Step { time: e.time, word: e.word, parent: e.parent });
            }
        }
    }
    Ok(point)
}

pub fn trace_lineage(store: &EventStore, x: &Word, s: f64, t: f64) -> Result<Lineage> {
    check_point(store, x)?;
    store.check_interval((s, t))?;
    let mut steps = Vec::new();
    let end = follow(store, Some(&mut steps), 0, s, x.clone(), t)?;
    Ok(Lineage { start: x.clone(), steps, end })
}

/// `X_{s,t}(x)`.
pub fn apply_flow(store: &EventStore, x: &Word, s: f64, t: f64) -> Result<Word> {
    check_point(store, x)?;
    store.check_interval((s, t))?;
    follow(store, None, 0, s, x.clone(), t)
}

/// Complexes untouched, in themselves or any ancestor, by events in `(0, t]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivorTree {
    pub t: f64,
    pub depth: usize,
    /// `levels[n]` is the sorted survivor set at level `n`.
    pub levels: Vec<Vec<Word>>,
}

impl SurvivorTree {
    /// `B_n^t` for `n = 0..=depth`.
    pub fn counts(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.len() as u64).collect()
    }

    pub fn dust_is_empty(&self) -> bool {
        self.levels.last().is_none_or(|l| l.is_empty())
    }
}

/// Anything that exposes per-level survivor counts `B_0, ..., B_N`.
pub trait LevelCounts {
    fn level_counts(&self) -> &[u64];
}

impl LevelCounts for Vec<u64> {
    fn level_counts(&self) -> &[u64] {
        self
    }
}

/// Survivor counts and the number of non-trivial blocks, without words.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivorCounts {
    pub t: f64,
    pub depth: usize,
    pub counts: Vec<u64>,
    pub blocks: u64,
}

impl SurvivorCounts {
    pub fn dust_is_empty(&self) -> bool {
        self.counts.last().is_none_or(|&b| b == 0)
    }

    /// `B_N |S|^{-N}` as a float.
    pub fn dust_measure(&self, alphabet: Alphabet) -> f64 {
        let last = *self.counts.last().unwrap_or(&0) as f64;
        last / (alphabet.size() as f64).powi(self.depth as i32)
    }
}

impl LevelCounts for SurvivorCounts {
    fn level_counts(&self) -> &[u64] {
        &self.counts
    }
}

fn check_origin(store: &EventStore, t: f64) -> Result<()> {
    store.check_interval((0.0, t))
}

pub fn survivor_tree(store: &EventStore, t: f64) -> Result<SurvivorTree> {
    check_origin(store, t)?;
    let alphabet = store.space().alphabet;
    let root = (Word::root(), root_key(store.seed()));
    let mut frontier = if store.fires(0, root.1, 0.0, t) { vec![] } else { vec![root] };
    let mut levels = Vec::with_capacity(store.depth() + 1);
    for n in 0..store.depth() {
        let mut next = Vec::new();
        for (w, key) in &frontier {
            for letter in alphabet.letters() {
                let k = child_key(*key, letter);
                if !store.fires(n + 1, k, 0.0, t) {
                    next.push((w.child_unchecked(letter), k));
                }
            }
        }
        levels.push(frontier.into_iter().map(|(w, _)| w).collect());
        frontier = next;
    }
    levels.push(frontier.into_iter().map(|(w, _)| w).collect());
    Ok(SurvivorTree { t, depth: store.depth(), levels })
}

/// Depth-first count of survivors per level and of top-level event complexes.
pub fn survivor_counts(store: &EventStore, t: f64) -> Result<SurvivorCounts> {
    check_origin(store, t)?;
    let depth = store.depth();
    let size = store.space().alphabet.size();
    let mut counts = vec![0u64; depth + 1];
    let mut blocks = 0u64;
    let root = root_key(store.seed());
    if store.fires(0, root, 0.0, t) {
        return Ok(SurvivorCounts { t, depth, counts, blocks: 1 });
    }
    let mut stack = vec![(0usize, root)];
    while let Some((level, key)) = stack.pop() {
        counts[level] += 1;
        if level == depth {
            continue;
        }
        for letter in 1..=size {
            let k = child_key(key, letter);
            if store.fires(level + 1, k, 0.0, t) {
                blocks += 1;
            } else {
                stack.push((level + 1, k));
            }
        }
    }
    Ok(SurvivorCounts { t, depth, counts, blocks })
}

/// Whether `D_t` is empty at the truncation depth, stopping at the first
/// surviving depth-`N` complex.
pub fn dust_is_empty(store: &EventStore, t: f64) -> Result<bool> {
    check_origin(store, t)?;
    let depth = store.depth();
    let size = store.space().alphabet.size();
    let root = root_key(store.seed());
    if store.fires(0, root, 0.0, t) {
        return Ok(true);
    }
    let mut stack = vec![(0usize, root)];
    while let Some((level, key)) = stack.pop() {
        if level == depth {
            return Ok(false);
        }
        for letter in 1..=size {
            let k = child_key(key, letter);
            if !store.fires(level + 1, k, 0.0, t) {
                stack.push((level + 1, k));
            }
        }
    }
    Ok(true)
}

fn as_string<T: Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Display"))]
pub struct Block<T> {
    /// Maximal complex hit by an event in `(0, t]`; the whole block.
    pub word: Word,
    /// Common image of every point of the block.
    pub atom: Word,
    #[serde(serialize_with = "as_string")]
    pub mass: T,
}

/// Partition of the space at time `t` into dust and non-trivial blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Display"))]
pub struct BlockDecomposition<T> {
    pub t: f64,
    pub depth: usize,
    #[serde(skip)]
    pub alphabet: Alphabet,
    /// Depth-`N` survivor complexes; their union is the dust.
    #[serde(skip)]
    pub dust_words: Vec<Word>,
    #[serde(serialize_with = "as_string")]
    pub dust_measure: T,
    /// Sorted by word.
    pub blocks: Vec<Block<T>>,
    pub b_counts: Vec<u64>,
}

/// Where a point ends up in a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fate {
    Dust,
    Block(usize),
}

impl<T: Exact> BlockDecomposition<T> {
    pub fn total_mass(&self) -> T {
        self.blocks
            .iter()
            .fold(self.dust_measure.clone(), |acc, b| acc + b.mass.clone())
    }

    pub fn dust_is_empty(&self) -> bool {
        self.dust_words.is_empty()
    }

    pub fn fate(&self, x: &Word) -> Fate {
        for n in 0..=self.depth.min(x.level()) {
            let w = x.prefix(n);
            if let Ok(i) = self.blocks.binary_search_by(|b| b.word.cmp(&w)) {
                return Fate::Block(i);
            }
        }
        Fate::Dust
    }

    /// Shallowest complex entirely contained in the dust, if the dust is non-empty.
    pub fn largest_dust_complex(&self) -> Option<Word> {
        if self.dust_words.is_empty() {
            return None;
        }
        let size = self.alphabet.size() as u128;
        let mut counts = std::collections::HashMap::<Word, u128>::new();
        for w in &self.dust_words {
            for n in 0..=self.depth {
                *counts.entry(w.prefix(n)).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .filter(|(w, c)| size.checked_pow((self.depth - w.level()) as u32) == Some(*c))
            .map(|(w, _)| w)
            .min()
    }
}

pub fn decompose<T: Exact>(store: &EventStore, t: f64) -> Result<BlockDecomposition<T>> {
    check_origin(store, t)?;
    let alphabet = store.space().alphabet;
    let depth = store.depth();
    let mut tops = Vec::new();
    let mut b_counts = Vec::with_capacity(depth + 1);
    let root = (Word::root(), root_key(store.seed()));
    let mut frontier = if store.fires(0, root.1, 0.0, t) {
        tops.push(root.0.clone());
        vec![]
    } else {
        vec![root]
    };
    for n in 0..depth {
        b_counts.push(frontier.len() as u64);
        let mut next = Vec::new();
        for (w, key) in &frontier {
            for letter in alphabet.letters() {
                let k = child_key(*key, letter);
                let child = w.child_unchecked(letter);
                if store.fires(n + 1, k, 0.0, t) {
                    tops.push(child);
                } else {
                    next.push((child, k));
                }
            }
        }
        frontier = next;
    }
    b_counts.push(frontier.len() as u64);
    let dust_words: Vec<Word> = frontier.into_iter().map(|(w, _)| w).collect();

    tops.sort();
    let mut blocks = Vec::with_capacity(tops.len());
    for w in tops {
        let e = store
            .latest_in(&w, (0.0, t))?
            .expect("top complex has an event in (0, t]");
        let atom = follow(store, None, w.level() + 1, e.time, e.parent, t)?;
        let mass = measure::<T>(alphabet, &w);
        blocks.push(Block { word: w, atom, mass });
    }
    let mut atoms: Vec<&Word> = blocks.iter().map(|b| &b.atom).collect();
    atoms.sort();
    if atoms.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::AtomCollision { precision: store.space().precision });
    }

    let leaf = measure::<T>(alphabet, &Word::from_letters_unchecked(&vec![1; depth]));
    let dust_measure = T::from_count(dust_words.len() as u64) * leaf;
    Ok(BlockDecomposition { t, depth, alphabet, dust_words, dust_measure, blocks, b_counts })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowCounterexample {
    pub x: Word,
    pub s: f64,
    pub t: f64,
    pub v: f64,
    pub direct: Word,
    pub composed: Word,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowCheckReport {
    pub samples: usize,
    pub violations: usize,
    pub counterexample: Option<FlowCounterexample>,
}

impl FlowCheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `X_{s,v}(x) = X_{t,v}(X_{s,t}(x))` for random `x` and `s < t < v`
/// inside the store's window.
pub fn verify_flow_property<R: Rng + ?Sized>(
    store: &EventStore,
    n_samples: usize,
    rng: &mut R,
) -> Result<FlowCheckReport> {
    let (lo, hi) = store.window();
    let mut violations = 0;
    let mut counterexample = None;
    let mut done = 0;
    while done < n_samples {
        let mut ts = [0f64; 3];
        for slot in &mut ts {
            *slot = lo + (hi - lo) * rng.random::<f64>();
        }
        ts.sort_by(f64::total_cmp);
        let [s, t, v] = ts;
        if !(lo < s && s < t && t < v) {
            continue;
        }
        let x = store.space().sample_point(&Word::root(), rng)?;
        let direct = apply_flow(store, &x, s, v)?;
        let mid = apply_flow(store, &x, s, t)?;
        let composed = apply_flow(store, &mid, t, v)?;
        if direct != composed {
            violations += 1;
            counterexample.get_or_insert(FlowCounterexample { x, s, t, v, direct, composed });
        }
        done += 1;
    }
    Ok(FlowCheckReport { samples: n_samples, violations, counterexample })
}
