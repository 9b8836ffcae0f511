//! Combinatorics of controlled and uncontrolled words.
//!
//! Words are strings over `{1, 2}`. A short word (length `N0`) is
//! *controlled* (in `Z`) when its density of 1s is at least `alpha`; a long
//! word (length `4 N0`) is in `X` when all four of its `N0`-blocks are
//! uncontrolled, and in `Y` otherwise. Thresholds are exact rationals.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exact rational density threshold.
pub type Threshold = Ratio<u64>;

/// Largest `N0` accepted by [`count_sets`].
pub const MAX_N0: u32 = 4096;
/// Largest `N0` accepted by [`enumerate_counts`] (`4 N0` bits must fit in a `u32`).
pub const MAX_ENUMERATION_N0: u32 = 6;

/// A nonempty word over `{1, 2}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Word {
    digits: Vec<u8>,
}

impl Word {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::Parameter("words must be nonempty".into()));
        }
        if let Some(d) = digits.iter().find(|&&d| d != 1 && d != 2) {
            return Err(Error::Parameter(format!("word digits must be 1 or 2, got {d}")));
        }
        Ok(Self { digits })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.digits.iter().filter(|&&d| d == 1).count()
    }

    /// Fraction of digits equal to 1.
    pub fn density(&self) -> Threshold {
        Ratio::new(self.ones() as u64, self.len() as u64)
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut digits = self.digits.clone();
        digits.extend_from_slice(&other.digits);
        Self { digits }
    }

    /// Consecutive blocks of length `block`.
    pub fn blocks(&self, block: usize) -> Result<Vec<Word>> {
        if block == 0 || !self.len().is_multiple_of(block) {
            return Err(Error::LengthMismatch { expected: block.max(1) * (self.len() / block.max(1)).max(1), found: self.len() });
        }
        Ok(self.digits.chunks(block).map(|c| Word { digits: c.to_vec() }).collect())
    }

    /// `w^+_k` for the first half `w_+ = w^+_{N1} ... w^+_1`, i.e. counted
    /// from the end, `k` starting at 1.
    pub fn plus_digit(&self, k: usize) -> Option<u8> {
        (1..=self.len()).contains(&k).then(|| self.digits[self.len() - k])
    }

    /// `w^-_k` for the second half `w_- = w^-_0 ... w^-_{N1 - 1}`.
    pub fn minus_digit(&self, k: usize) -> Option<u8> {
        self.digits.get(k).copied()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses digits `1`/`2`; `.`, `·`, `_` and whitespace are separators.
impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .chars()
            .filter(|c| !(c.is_whitespace() || matches!(c, '.' | '·' | '_')))
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                other => Err(Error::Parameter(format!("invalid word character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(digits)
    }
}

impl TryFrom<String> for Word {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Word> for String {
    fn from(w: Word) -> Self {
        w.to_string()
    }
}

/// Exact decimal such as `0.05` as a rational.
pub fn parse_threshold(s: &str) -> Result<Threshold> {
    let bad = || Error::Parameter(format!("cannot parse threshold {s:?} as a nonnegative decimal"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(num, den));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if (int.is_empty() && frac.is_empty()) || frac.len() > 18 {
        return Err(bad());
    }
    let all_digits = |t: &str| t.chars().all(|c| c.is_ascii_digit());
    if !all_digits(int) || !all_digits(frac) {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let den = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = int.checked_mul(den).and_then(|x| x.checked_add(frac)).ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

/// The grid `k / 20`, `k = 1..=19`.
pub fn alpha_grid() -> Vec<Threshold> {
    (1..=19).map(|k| Ratio::new(k, 20)).collect()
}

/// Whether `ones / len >= alpha`, exactly.
fn at_least(ones: u64, len: u64, alpha: Threshold) -> bool {
    (ones as u128) * (*alpha.denom() as u128) >= (*alpha.numer() as u128) * (len as u128)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShortClass {
    /// Controlled: density at least `alpha`.
    Z,
    ZComplement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LongClass {
    /// Every block uncontrolled.
    X,
    Y,
}

pub fn classify_short(w: &Word, n0: usize, alpha: Threshold) -> Result<ShortClass> {
    if w.len() != n0 {
        return Err(Error::LengthMismatch { expected: n0, found: w.len() });
    }
    Ok(if at_least(w.ones() as u64, n0 as u64, alpha) { ShortClass::Z } else { ShortClass::ZComplement })
}

pub fn classify_long(w: &Word, alpha: Threshold, n0: usize) -> Result<LongClass> {
    if n0 == 0 || w.len() != 4 * n0 {
        return Err(Error::LengthMismatch { expected: 4 * n0, found: w.len() });
    }
    for block in w.blocks(n0)? {
        if classify_short(&block, n0, alpha)? == ShortClass::Z {
            return Ok(LongClass::Y);
        }
    }
    Ok(LongClass::X)
}

/// `w = w_+ w_-` with both halves of length `N1`.
pub fn split_word(w: &Word) -> Result<(Word, Word)> {
    if !w.len().is_multiple_of(2) {
        return Err(Error::LengthMismatch { expected: w.len() + 1, found: w.len() });
    }
    let (a, b) = w.digits.split_at(w.len() / 2);
    Ok((Word { digits: a.to_vec() }, Word { digits: b.to_vec() }))
}

/// `N0 = ceil((1 - eps0)/6 log(1/h))` and `N1 = 2 N0`.
pub fn propagation_times(h: f64, eps0: f64) -> Result<(u32, u32)> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Parameter(format!("h must lie in (0, 1), got {h}")));
    }
    propagation_times_log(-h.ln(), eps0)
}

/// [`propagation_times`] in terms of `log(1/h)`, which avoids underflow and
/// rounding of `h` itself. Values within `1e-9` of an integer are snapped
/// before taking the ceiling.
pub fn propagation_times_log(log_inv_h: f64, eps0: f64) -> Result<(u32, u32)> {
    if !(log_inv_h > 0.0 && log_inv_h.is_finite()) {
        return Err(Error::Parameter(format!("log(1/h) must be positive, got {log_inv_h}")));
    }
    if !(eps0 > 0.0 && eps0 < 0.25) {
        return Err(Error::Parameter(format!("eps0 must lie in (0, 1/4), got {eps0}")));
    }
    let raw = (1.0 - eps0) / 6.0 * log_inv_h;
    let snapped = if (raw - raw.round()).abs() <= 1e-9 { raw.round() } else { raw };
    let n0 = snapped.ceil().max(1.0);
    if n0 > MAX_N0 as f64 {
        return Err(Error::SizeCap { size: n0 as usize, cap: MAX_N0 as usize });
    }
    let n0 = n0 as u32;
    Ok((n0, 2 * n0))
}

/// Parameters of one word-partition configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordParams {
    pub log_inv_h: f64,
    pub eps0: f64,
    pub alpha: Threshold,
    pub n0: u32,
    pub n1: u32,
}

impl WordParams {
    pub fn new(log_inv_h: f64, eps0: f64, alpha: Threshold) -> Result<Self> {
        let (n0, n1) = propagation_times_log(log_inv_h, eps0)?;
        if alpha.is_zero() || alpha >= Threshold::one() {
            return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { log_inv_h, eps0, alpha, n0, n1 })
    }

    pub fn h(&self) -> f64 {
        (-self.log_inv_h).exp()
    }

    pub fn counts(&self) -> Result<Counts> {
        count_sets(self.n0, self.alpha)
    }
}

/// Sizes of `Z`, `Z^c` (short words) and `X`, `Y` (long words).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub size_z: BigUint,
    pub size_zc: BigUint,
    pub size_x: BigUint,
    pub size_y: BigUint,
}

/// Closed form: `#Z^c = sum_{k/N0 < alpha} C(N0, k)`, `#X = (#Z^c)^4`,
/// `#Y = 2^{4 N0} - #X`.
pub fn count_sets(n0: u32, alpha: Threshold) -> Result<Counts> {
    if n0 == 0 || n0 > MAX_N0 {
        return Err(Error::Parameter(format!("N0 must lie in 1..={MAX_N0}, got {n0}")));
    }
    let mut size_zc = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..=n0 {
        if at_least(k as u64, n0 as u64, alpha) {
            break;
        }
        size_zc += &binom;
        binom = binom * (n0 - k) / (k + 1);
    }
    let short_total = BigUint::one() << n0;
    let size_x = size_zc.pow(4);
    let size_y = (BigUint::one() << (4 * n0)) - &size_x;
    Ok(Counts { size_z: short_total - &size_zc, size_zc, size_x, size_y })
}

/// Exhaustive enumeration of all `2^{4 N0}` words; the cross-check for
/// [`count_sets`]. Bit `i` of the mask is set when digit `i` is 1.
pub fn enumerate_counts(n0: u32, alpha: Threshold) -> Result<Counts> {
    if n0 == 0 || n0 > MAX_ENUMERATION_N0 {
        return Err(Error::Parameter(format!("enumeration needs N0 in 1..={MAX_ENUMERATION_N0}, got {n0}")));
    }
    let block_mask = (1u32 << n0) - 1;
    // Classification of every short word, indexed by its bitmask.
    let controlled: Vec<bool> =
        (0..=block_mask).map(|b| at_least(b.count_ones() as u64, n0 as u64, alpha)).collect();
    let size_z = controlled.iter().filter(|&&c| c).count() as u64;
    let mut size_x = 0u64;
    let total = 1u64 << (4 * n0);
    for word in 0..total {
        let word = word as u32;
        if (0..4).all(|b| !controlled[((word >> (b * n0)) & block_mask) as usize]) {
            size_x += 1;
        }
    }
    Ok(Counts {
        size_z: size_z.into(),
        size_zc: ((1u64 << n0) - size_z).into(),
        size_x: size_x.into(),
        size_y: (total - size_x).into(),
    })
}

/// `ln` of a big integer, exact enough for reporting.
pub fn big_ln(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// One grid point of [`check_count_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountBoundRow {
    pub log_inv_h: f64,
    pub n0: u32,
    pub counts: Counts,
    /// `ln(#X h^{beta/2})`, the log of the smallest admissible `C` at this `h`.
    pub log_c: f64,
    /// `ln sup_{h' <= h} #X h'^{beta/2}` over the grid.
    pub log_c_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountBoundReport {
    pub beta: f64,
    pub alpha: Threshold,
    pub eps0: f64,
    pub rows: Vec<CountBoundRow>,
    /// `ln` of the smallest `C` with `#X <= C h^{-beta/2}` on the whole grid.
    pub log_c_global: f64,
    /// Whether the per-`h` constant is nonincreasing over the second half of
    /// the grid, i.e. the empirical constant has stabilized.
    pub bounded: bool,
}

impl CountBoundReport {
    /// The tail constants, nonincreasing as `h` decreases.
    pub fn tail_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].log_c_tail <= w[0].log_c_tail + 1e-12)
    }
}

/// Evaluates `#X(N0(h), alpha) h^{beta/2}` over a grid of `log(1/h)` values,
/// which must be strictly increasing (that is, `h` decreasing).
pub fn check_count_bound(beta: f64, alpha: Threshold, eps0: f64, log_inv_h: &[f64]) -> Result<CountBoundReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    if log_inv_h.is_empty() {
        return Err(Error::Parameter("h grid is empty".into()));
    }
    if log_inv_h.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("h grid must be strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(log_inv_h.len());
    for &l in log_inv_h {
        let (n0, _) = propagation_times_log(l, eps0)?;
        let counts = count_sets(n0, alpha)?;
        let log_c = big_ln(&counts.size_x) - 0.5 * beta * l;
        rows.push(CountBoundRow { log_inv_h: l, n0, counts, log_c, log_c_tail: log_c });
    }
    let mut running = f64::NEG_INFINITY;
    for row in rows.iter_mut().rev() {
        running = running.max(row.log_c);
        row.log_c_tail = running;
    }
    let log_c_global = rows.iter().map(|r| r.log_c).fold(f64::NEG_INFINITY, f64::max);
    let tail = &rows[rows.len() / 2..];
    let bounded = tail.windows(2).all(|w| w[1].log_c <= w[0].log_c + 1e-12);
    Ok(CountBoundReport { beta, alpha, eps0, rows, log_c_global, bounded })
}
