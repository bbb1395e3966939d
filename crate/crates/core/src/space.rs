//! The segregated geographical space: the word tree of complexes, its uniform
//! measure, and two concrete geometries (the `|S|`-part Cantor set and the
//! unit interval cut into half-open cells).
//!
//! Points of the space are represented at fixed precision as words of length
//! `P`; the genealogy only ever looks at which complexes contain a point, so
//! word arithmetic is exact.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{Exact, Real};

/// Number of letters `|S|` in the alphabet `{1, ..., |S|}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet(u8);

impl Alphabet {
    pub fn new(size: u32) -> Result<Self> {
        if (2..=255).contains(&size) {
            Ok(Alphabet(size as u8))
        } else {
            Err(Error::InvalidAlphabet(size))
        }
    }

    #[inline]
    pub fn size(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0 as usize
    }

    /// Letters `1..=|S|`.
    pub fn letters(self) -> impl Iterator<Item = u8> {
        1..=self.0
    }

    pub fn check(self, letter: u8) -> Result<()> {
        if letter >= 1 && letter <= self.0 {
            Ok(())
        } else {
            Err(Error::LetterOutOfRange { letter: letter as u32, size: self.0 })
        }
    }

    /// Number of words of length `level`, or `None` on overflow.
    pub fn words_at(self, level: usize) -> Option<u128> {
        (self.0 as u128).checked_pow(level as u32)
    }
}

/// Address of a complex `K_w`. The empty word is the whole space.
///
/// Words compare by level first, then lexicographically.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(SmallVec<[u8; 32]>);

impl Word {
    pub fn root() -> Self {
        Word(SmallVec::new())
    }

    pub fn new(alphabet: Alphabet, letters: &[u8]) -> Result<Self> {
        for &l in letters {
            alphabet.check(l)?;
        }
        Ok(Word(SmallVec::from_slice(letters)))
    }

    /// Builds a word without range checks; callers guarantee `1 <= l <= |S|`.
    pub(crate) fn from_letters_unchecked(letters: &[u8]) -> Self {
        Word(SmallVec::from_slice(letters))
    }

    #[inline]
    pub fn level(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn child(&self, alphabet: Alphabet, letter: u8) -> Result<Word> {
        alphabet.check(letter)?;
        Ok(self.child_unchecked(letter))
    }

    #[inline]
    pub(crate) fn child_unchecked(&self, letter: u8) -> Word {
        let mut w = self.clone();
        w.0.push(letter);
        w
    }

    pub fn parent(&self) -> Option<Word> {
        if self.is_root() {
            None
        } else {
            Some(self.prefix(self.level() - 1))
        }
    }

    /// Level-`n` ancestor. Panics if `n > level`.
    #[inline]
    pub fn prefix(&self, n: usize) -> Word {
        Word(SmallVec::from_slice(&self.0[..n]))
    }

    /// True iff `self` is a prefix of `other`, i.e. `K_other ⊆ K_self`.
    #[inline]
    pub fn is_ancestor_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Position of the word among the words of its level, in base `|S|`.
    pub fn index(&self, alphabet: Alphabet) -> Option<u128> {
        let base = alphabet.size() as u128;
        self.0.iter().try_fold(0u128, |acc, &l| {
            acc.checked_mul(base)?.checked_add((l - 1) as u128)
        })
    }

    /// All words of length `level` in lexicographic order.
    pub fn enumerate(alphabet: Alphabet, level: usize) -> impl Iterator<Item = Word> {
        let total = alphabet.words_at(level).expect("level enumerable");
        let base = alphabet.size() as u128;
        (0..total).map(move |mut idx| {
            let mut letters = vec![0u8; level];
            for slot in letters.iter_mut().rev() {
                *slot = (idx % base) as u8 + 1;
                idx /= base;
            }
            Word::from_letters_unchecked(&letters)
        })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level().cmp(&other.level()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&l| l <= 9) {
            for l in &self.0 {
                write!(f, "{l}")?;
            }
            Ok(())
        } else {
            for (i, l) in self.0.iter().enumerate() {
                if i > 0 {
                    f.write_str(".")?;
                }
                write!(f, "{l}")?;
            }
            Ok(())
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

/// Parses `"121"` (single-digit letters) or `"10.2.11"` (dot-separated).
/// The empty string is the root. Range checks against an alphabet are the
/// caller's job.
impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidWord(s.to_string());
        let letters: Vec<u8> = if s.contains('.') {
            s.split('.')
                .map(|p| p.parse::<u8>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        if letters.contains(&0) {
            return Err(bad());
        }
        Ok(Word(SmallVec::from_vec(letters)))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Uniform measure `λ(K_w) = |S|^{-|w|}`.
pub fn measure<T: Exact>(alphabet: Alphabet, w: &Word) -> T {
    T::one() / num_traits::pow(T::from_count(alphabet.size() as u64), w.level())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Geometry {
    /// Attractor of `F_i(x) = (2i - 2 + x) / (2|S| - 1)`.
    CantorSet,
    /// `[0,1]` with overlaps assigned to the cell nearer the origin.
    HalfOpenInterval,
}

impl Geometry {
    /// Contraction ratio between consecutive levels.
    pub fn ratio<F: Real>(self, alphabet: Alphabet) -> F {
        let s = F::from_count(alphabet.len());
        match self {
            Geometry::CantorSet => F::one() / (s + s - F::one()),
            Geometry::HalfOpenInterval => F::one() / s,
        }
    }

    /// Diameter bound of a level-`n` complex.
    pub fn diameter<F: Real>(self, alphabet: Alphabet, n: usize) -> F {
        self.ratio::<F>(alphabet).powi(n as i32)
    }

    /// Sub-interval of `[0,1]` occupied by `K_w`.
    pub fn embed<T: Exact>(self, alphabet: Alphabet, w: &Word) -> Interval<T> {
        let s = T::from_count(alphabet.size() as u64);
        let two = T::from_count(2);
        let denom = match self {
            Geometry::CantorSet => two.clone() * s.clone() - T::one(),
            Geometry::HalfOpenInterval => s.clone(),
        };
        let (mut lo, mut hi) = (T::zero(), T::one());
        for &l in w.letters().iter().rev() {
            let l = T::from_count(l as u64);
            let offset = match self {
                Geometry::CantorSet => two.clone() * l - two.clone(),
                Geometry::HalfOpenInterval => l - T::one(),
            };
            lo = (offset.clone() + lo) / denom.clone();
            hi = (offset + hi) / denom.clone();
        }
        let lo_closed = match self {
            Geometry::CantorSet => true,
            Geometry::HalfOpenInterval => w.letters().iter().all(|&l| l == 1),
        };
        Interval { lo, hi, lo_closed, hi_closed: true }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::CantorSet => "cantor",
            Geometry::HalfOpenInterval => "interval",
        })
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cantor" | "cantor-set" => Ok(Geometry::CantorSet),
            "interval" | "half-open-interval" => Ok(Geometry::HalfOpenInterval),
            other => Err(Error::InvalidParameter(format!("unknown geometry {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl<T: Exact> Interval<T> {
    pub fn width(&self) -> T {
        self.hi.clone() - self.lo.clone()
    }

    /// True iff the two intervals share no point.
    pub fn disjoint(&self, other: &Interval<T>) -> bool {
        let (a, b) = if self.lo <= other.lo { (self, other) } else { (other, self) };
        a.hi < b.lo || (a.hi == b.lo && !(a.hi_closed && b.lo_closed))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpaceConfig {
    pub alphabet: Alphabet,
    pub geometry: Geometry,
    /// Length of the words representing points.
    pub precision: usize,
}

impl SpaceConfig {
    pub fn new(alphabet: Alphabet, geometry: Geometry, precision: usize) -> Result<Self> {
        if precision == 0 {
            return Err(Error::InvalidParameter("precision must be at least 1".into()));
        }
        Ok(SpaceConfig { alphabet, geometry, precision })
    }

    /// Extends `w` by independent uniform letters up to the configured precision.
    pub fn sample_point<R: Rng + ?Sized>(&self, w: &Word, rng: &mut R) -> Result<Word> {
        sample_uniform_point(self.alphabet, w, self.precision, rng)
    }
}

/// Uniform point of `K_w` at precision `p`: `w` followed by `p - |w|` uniform letters.
pub fn sample_uniform_point<R: Rng + ?Sized>(
    alphabet: Alphabet,
    w: &Word,
    precision: usize,
    rng: &mut R,
) -> Result<Word> {
    if w.level() > precision {
        return Err(Error::PrecisionExceeded { level: w.level(), precision });
    }
    let mut out = w.clone();
    for _ in w.level()..precision {
        out.0.push(rng.random_range(1..=alphabet.size()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn s(n: u32) -> Alphabet {
        Alphabet::new(n).unwrap()
    }

    fn w(text: &str) -> Word {
        text.parse().unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(1).is_err());
        assert!(Alphabet::new(256).is_err());
        assert_eq!(Alphabet::new(2).unwrap().size(), 2);
    }

    #[test]
    fn child_and_parent() {
        assert_eq!(Word::root().child(s(2), 1).unwrap(), w("1"));
        assert_eq!(w("12").child(s(2), 2).unwrap(), w("122"));
        assert_eq!(w("12").child(s(2), 2).unwrap().parent().unwrap(), w("12"));
        assert!(w("12").child(s(2), 3).is_err());
        assert!(w("12").child(s(2), 0).is_err());
        assert_eq!(Word::root().parent(), None);
    }

    #[test]
    fn ancestry() {
        assert!(Word::root().is_ancestor_of(&w("212")));
        assert!(w("12").is_ancestor_of(&w("121")));
        assert!(!w("12").is_ancestor_of(&w("21")));
        assert!(w("12").is_ancestor_of(&w("12")));
    }

    #[test]
    fn measure_values() {
        assert_eq!(measure::<BigRational>(s(2), &w("121")), q(1, 8));
        assert_eq!(measure::<BigRational>(s(3), &Word::root()), q(1, 1));
        for n in 0..5 {
            let total: BigRational =
                Word::enumerate(s(3), n).map(|v| measure::<BigRational>(s(3), &v)).sum();
            assert_eq!(total, q(1, 1));
        }
    }

    #[test]
    fn embed_examples() {
        let c = Geometry::CantorSet.embed::<BigRational>(s(2), &w("2"));
        assert_eq!((c.lo, c.hi), (q(2, 3), q(1, 1)));
        let h = Geometry::HalfOpenInterval.embed::<BigRational>(s(2), &w("1"));
        assert_eq!((h.lo.clone(), h.hi.clone()), (q(0, 1), q(1, 2)));
        assert!(h.lo_closed && h.hi_closed);
        let h2 = Geometry::HalfOpenInterval.embed::<BigRational>(s(2), &w("2"));
        assert!(!h2.lo_closed);
        for g in [Geometry::CantorSet, Geometry::HalfOpenInterval] {
            let r = g.embed::<BigRational>(s(3), &Word::root());
            assert_eq!((r.lo, r.hi), (q(0, 1), q(1, 1)));
        }
    }

    #[test]
    fn cantor_embedding_matches_ifs_maps() {
        // F_1 then F_2 on [0,1] for |S| = 2: F_1(F_2([0,1])) = [2/9, 1/3].
        let c = Geometry::CantorSet.embed::<BigRational>(s(2), &w("12"));
        assert_eq!((c.lo, c.hi), (q(2, 9), q(1, 3)));
        let f = Geometry::CantorSet.embed::<f64>(s(2), &w("12"));
        assert!((f.lo - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn complexes_partition_unit_interval() {
        for g in [Geometry::CantorSet, Geometry::HalfOpenInterval] {
            for n in 0..4 {
                let cells: Vec<_> =
                    Word::enumerate(s(3), n).map(|v| g.embed::<BigRational>(s(3), &v)).collect();
                for (i, a) in cells.iter().enumerate() {
                    for b in &cells[i + 1..] {
                        assert!(a.disjoint(b), "{g} level {n}");
                    }
                }
                let width =
                    g.embed::<BigRational>(s(3), &Word::enumerate(s(3), n).next().unwrap()).width();
                let expected = num_traits::pow(g_ratio_exact(g, 3), n);
                assert_eq!(width, expected);
            }
        }
    }

    fn g_ratio_exact(g: Geometry, size: i64) -> BigRational {
        match g {
            Geometry::CantorSet => q(1, 2 * size - 1),
            Geometry::HalfOpenInterval => q(1, size),
        }
    }

    #[test]
    fn diameters_shrink() {
        let a = s(2);
        for g in [Geometry::CantorSet, Geometry::HalfOpenInterval] {
            let r: f64 = g.ratio(a);
            assert!(r > 0.0 && r < 1.0);
            let d: Vec<f64> = (0..60).map(|n| g.diameter(a, n)).collect();
            assert!(d.windows(2).all(|p| p[1] < p[0]));
            assert!(d[59] < 1e-15);
        }
        assert_eq!(Geometry::CantorSet.ratio::<f32>(s(2)), 1.0 / 3.0);
    }

    #[test]
    fn sample_point_contract() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let a = s(2);
        let full = w("1212");
        assert_eq!(sample_uniform_point(a, &full, 4, &mut rng).unwrap(), full);
        assert!(sample_uniform_point(a, &full, 3, &mut rng).is_err());
        let p = sample_uniform_point(a, &w("21"), 20, &mut rng).unwrap();
        assert_eq!(p.level(), 20);
        assert!(w("21").is_ancestor_of(&p));
    }

    #[test]
    fn first_letter_is_fair() {
        // Binomial(10^4, 1/2): sd = 50.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| sample_uniform_point(s(2), &Word::root(), 20, &mut rng).unwrap().letters()[0] == 1)
            .count();
        assert!((ones as f64 - 5000.0).abs() <= 150.0, "{ones}");
    }

    #[test]
    fn word_order_and_parse() {
        assert!(w("2") < w("11"));
        assert!(w("11") < w("12"));
        let big = Word::new(s(12), &[10, 2, 11]).unwrap();
        assert_eq!(big.to_string(), "10.2.11");
        assert_eq!(big.to_string().parse::<Word>().unwrap(), big);
        assert_eq!("".parse::<Word>().unwrap(), Word::root());
        assert!("1x".parse::<Word>().is_err());
        assert!("10".parse::<Word>().is_err());
        assert_eq!(w("21").index(s(2)), Some(2));
    }

    #[test]
    fn unique_ancestor_per_level() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let a = s(3);
        let x = sample_uniform_point(a, &Word::root(), 6, &mut rng).unwrap();
        for n in 0..=4 {
            let hits = Word::enumerate(a, n).filter(|v| v.is_ancestor_of(&x)).count();
            assert_eq!(hits, 1);
        }
    }
}
