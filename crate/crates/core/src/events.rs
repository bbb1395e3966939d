//! One realization of the reproduction-event Poisson process, truncated to
//! complexes of level at most `depth` and sampled lazily per complex.
//!
//! The events of complex `K_w` are a pure function of `(seed, w)`: a 64-bit
//! key is folded from the seed and the letters of `w` and seeds a dedicated
//! xoshiro256++ stream. Queries can therefore run in any order, or be
//! recomputed without the memo, and still see the same realization.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, RwLock};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rates::RateFamily;
use crate::space::{SpaceConfig, Word};

/// SplitMix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub(crate) fn root_key(seed: u64) -> u64 {
    mix64(seed ^ 0x5e6c_0a1e_5ce7_0001)
}

#[inline]
pub(crate) fn child_key(key: u64, letter: u8) -> u64 {
    mix64(key.wrapping_add(GOLDEN.wrapping_mul(letter as u64)))
}

/// Seed of replicate `index` in a Monte Carlo run rooted at `seed`.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(GOLDEN)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    /// Complex in which the event happens.
    pub word: Word,
    /// Parent point, a precision-length word with `word` as prefix.
    pub parent: Word,
}

type Times = SmallVec<[f64; 4]>;

pub struct EventStore {
    space: SpaceConfig,
    rates: RateFamily<f64>,
    depth: usize,
    window: (f64, f64),
    seed: u64,
    counts: Vec<Option<Poisson<f64>>>,
    memo: RwLock<HashMap<Word, Arc<[Event]>>>,
    faults: Mutex<HashMap<Word, u64>>,
}

impl std::fmt::Debug for EventStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventStore")
            .field("space", &self.space)
            .field("rates", &self.rates.to_string())
            .field("depth", &self.depth)
            .field("window", &self.window)
            .field("seed", &self.seed)
            .finish()
    }
}

impl EventStore {
    /// Store over the time window `(window.0, window.1]`.
    pub fn new(
        space: SpaceConfig,
        rates: RateFamily<f64>,
        depth: usize,
        window: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        rates.validate()?;
        if space.precision < depth {
            return Err(Error::PrecisionBelowDepth { precision: space.precision, depth });
        }
        let (lo, hi) = window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval(lo, hi));
        }
        let counts = (0..=depth)
            .map(|n| {
                let mean = rates.rate(n) * (hi - lo);
                if mean > 0.0 {
                    Poisson::new(mean)
                        .map(Some)
                        .map_err(|e| Error::InvalidRates(format!("level {n}: {e}")))
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        Ok(EventStore {
            space,
            rates,
            depth,
            window,
            seed,
            counts,
            memo: RwLock::new(HashMap::new()),
            faults: Mutex::new(HashMap::new()),
        })
    }

    /// Store over `(0, horizon]`.
    pub fn from_origin(
        space: SpaceConfig,
        rates: RateFamily<f64>,
        depth: usize,
        horizon: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::new(space, rates, depth, (0.0, horizon), seed)
    }

    pub fn space(&self) -> &SpaceConfig {
        &self.space
    }

    pub fn rates(&self) -> &RateFamily<f64> {
        &self.rates
    }

    /// Truncation depth `N`: complexes deeper than this never see events.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Rate actually used at `level`, i.e. the truncated family.
    pub fn level_rate(&self, level: usize) -> f64 {
        if level > self.depth {
            0.0
        } else {
            self.rates.rate(level)
        }
    }

    pub fn key_of(&self, w: &Word) -> u64 {
        w.letters().iter().fold(root_key(self.seed), |k, &l| child_key(k, l))
    }

    pub(crate) fn check_interval(&self, (lo, hi): (f64, f64)) -> Result<()> {
        if !(lo < hi) {
            return Err(Error::InvalidInterval(lo, hi));
        }
        let (wl, wh) = self.window;
        if lo < wl || hi > wh {
            return Err(Error::OutsideWindow { lo, hi, win_lo: wl, win_hi: wh });
        }
        Ok(())
    }

    fn check_level(&self, w: &Word) -> Result<()> {
        if w.level() > self.depth {
            Err(Error::DepthExceeded { level: w.level(), depth: self.depth })
        } else {
            Ok(())
        }
    }

    /// Event count and times over the whole window; the stream is left
    /// positioned for parent sampling.
    #[inline]
    fn draw_times(&self, level: usize, key: u64, times: &mut Times) -> Xoshiro256PlusPlus {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(key);
        times.clear();
        if let Some(Some(pois)) = self.counts.get(level) {
            let count = pois.sample(&mut rng) as usize;
            let (lo, hi) = self.window;
            let len = hi - lo;
            for _ in 0..count {
                times.push(hi - len * rng.random::<f64>());
            }
        }
        rng
    }

    /// Whether the complex at `level` with stream `key` has an event in
    /// `(lo, hi]`. Skips the memo and fault hooks.
    #[inline]
    pub(crate) fn fires(&self, level: usize, key: u64, lo: f64, hi: f64) -> bool {
        if level > self.depth || self.counts[level].is_none() {
            return false;
        }
        let mut times = Times::new();
        self.draw_times(level, key, &mut times);
        times.iter().any(|&t| t > lo && t <= hi)
    }

    fn realize(&self, w: &Word, key: u64) -> Vec<Event> {
        let mut times = Times::new();
        let mut rng = self.draw_times(w.level(), key, &mut times);
        let mut events: Vec<Event> = times
            .iter()
            .map(|&time| Event {
                time,
                word: w.clone(),
                parent: self
                    .space
                    .sample_point(w, &mut rng)
                    .expect("precision checked against depth"),
            })
            .collect();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        events
    }

    fn full_stream(&self, w: &Word) -> Arc<[Event]> {
        if let Some(count) = self.faults.lock().unwrap().get_mut(w) {
            *count += 1;
            let key = self.key_of(w) ^ mix64(*count);
            return self.realize(w, key).into();
        }
        if let Some(hit) = self.memo.read().unwrap().get(w) {
            return hit.clone();
        }
        let events: Arc<[Event]> = self.realize(w, self.key_of(w)).into();
        self.memo.write().unwrap().entry(w.clone()).or_insert(events).clone()
    }

    /// Events in complex `w` with time in `interval = (lo, hi]`, sorted by time.
    pub fn events_in(&self, w: &Word, interval: (f64, f64)) -> Result<Vec<Event>> {
        self.check_level(w)?;
        self.check_interval(interval)?;
        if self.counts[w.level()].is_none() {
            return Ok(Vec::new());
        }
        let (lo, hi) = interval;
        Ok(self
            .full_stream(w)
            .iter()
            .filter(|e| e.time > lo && e.time <= hi)
            .cloned()
            .collect())
    }

    /// Latest event of `w` in `(lo, hi]`, if any.
    pub fn latest_in(&self, w: &Word, interval: (f64, f64)) -> Result<Option<Event>> {
        Ok(self.events_in(w, interval)?.pop())
    }

    pub fn has_event(&self, w: &Word, interval: (f64, f64)) -> Result<bool> {
        self.check_level(w)?;
        self.check_interval(interval)?;
        if self.faults.lock().unwrap().contains_key(w) {
            return Ok(!self.events_in(w, interval)?.is_empty());
        }
        Ok(self.fires(w.level(), self.key_of(w), interval.0, interval.1))
    }

    /// Negative-control hook: from now on every query of `w` re-draws its
    /// events from a fresh stream, so the store no longer describes a single
    /// realization.
    pub fn inject_fault(&self, w: &Word) {
        self.memo.write().unwrap().remove(w);
        self.faults.lock().unwrap().insert(w.clone(), 0);
    }

    /// Number of memoized complexes.
    pub fn materialized(&self) -> usize {
        self.memo.read().unwrap().len()
    }

    /// Writes every event of every complex of level `≤ max_level` as CSV
    /// `time,word,parent`, sorted by level, then word, then time.
    pub fn write_csv<W: Write>(&self, out: &mut W, max_level: usize) -> Result<()> {
        const MAX_WORDS: u128 = 1 << 22;
        let max_level = max_level.min(self.depth);
        let a = self.space.alphabet;
        let total: u128 = (0..=max_level).map(|n| a.words_at(n).unwrap_or(u128::MAX)).sum();
        if total > MAX_WORDS {
            return Err(Error::InvalidParameter(format!(
                "refusing to enumerate {total} complexes; lower the level"
            )));
        }
        let io = |e: std::io::Error| Error::InvalidParameter(format!("write failed: {e}"));
        writeln!(out, "time,word,parent").map_err(io)?;
        for n in 0..=max_level {
            for w in Word::enumerate(a, n) {
                for e in self.events_in(&w, self.window)? {
                    writeln!(out, "{},{},{}", e.time, e.word, e.parent).map_err(io)?;
                }
            }
        }
        Ok(())
    }
}
