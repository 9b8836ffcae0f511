//! Finite unions of closed intervals and exact porosity checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack used when comparing lengths built from floating endpoints.
const LENGTH_TOL: f64 = 1e-12;

/// A sorted union of pairwise disjoint closed intervals `[a, b]`, `a < b`.
///
/// Sets built by [`PorousSet::new`] lie in `[0, 1]`; images under maps
/// that leave the unit interval use [`PorousSet::new_unbounded`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorousSet {
    intervals: Vec<(f64, f64)>,
}

impl PorousSet {
    /// Validates ordering, disjointness and containment in `[0, 1]`.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        let set = Self::new_unbounded(intervals)?;
        if let (Some(&(a, _)), Some(&(_, b))) = (set.intervals.first(), set.intervals.last()) {
            if a < 0.0 || b > 1.0 {
                return Err(Error::Parameter(format!("intervals must lie in [0, 1], got hull [{a}, {b}]")));
            }
        }
        Ok(set)
    }

    /// Like [`PorousSet::new`] without the `[0, 1]` containment.
    pub fn new_unbounded(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Parameter(format!("interval [{a}, {b}] must be finite with a < b")));
            }
        }
        for w in intervals.windows(2) {
            if w[0].1 >= w[1].0 {
                return Err(Error::Parameter(format!(
                    "intervals [{}, {}] and [{}, {}] are not sorted and disjoint",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn unit() -> Self {
        Self { intervals: vec![(0.0, 1.0)] }
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn from_unsorted(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self::new_unbounded(merge_sorted(intervals))
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|&(_, b)| b < x);
        self.intervals.get(idx).is_some_and(|&(a, _)| a <= x)
    }

    /// Open complementary gaps `(p, q)`, including the two unbounded ones.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut left = f64::NEG_INFINITY;
        for &(a, b) in &self.intervals {
            out.push((left, a));
            left = b;
        }
        out.push((left, f64::INFINITY));
        out
    }

    /// Exact porosity check on the scale window `[alpha0, alpha1]`.
    pub fn is_porous(&self, nu: f64, alpha0: f64, alpha1: f64) -> Result<bool> {
        Ok(self.porosity(nu, alpha0, alpha1)?.is_none())
    }

    /// `None` if every interval `I` with `|I| in [alpha0, alpha1]` contains a
    /// subinterval of length `nu |I|` missing the set, otherwise an interval
    /// `I` with no such subinterval.
    ///
    /// For a fixed length `L`, the positions `x` for which `[x, x + L]` sees
    /// a gap `(p, q)` of length `>= nu L` in the right place form the closed
    /// interval `[p - (1 - nu) L, q - nu L]`. These intervals are ordered
    /// like the gaps, so `L` fails exactly when two consecutive long gaps are
    /// more than `(1 - 2 nu) L` apart. Between the critical lengths
    /// `len(gap) / nu` the long gaps do not change and the condition is
    /// linear in `L`, so checking both ends of every piece is exhaustive.
    pub fn porosity(&self, nu: f64, alpha0: f64, alpha1: f64) -> Result<Option<Witness>> {
        check_window(nu, alpha0, alpha1)?;
        let gaps = self.gaps();
        let mut breaks: Vec<f64> = gaps
            .iter()
            .map(|(p, q)| (q - p) / nu)
            .filter(|&c| c.is_finite() && c > alpha0 && c < alpha1)
            .collect();
        breaks.push(alpha0);
        breaks.push(alpha1);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        for (k, &c) in breaks.iter().enumerate() {
            if let Some(x) = uncovered(&gaps, nu, c, false) {
                return Ok(Some(Witness { start: x, length: c }));
            }
            let Some(&next) = breaks.get(k + 1) else { break };
            if uncovered(&gaps, nu, c, true).is_some() {
                // Failure just above `c`: pick a concrete length inside the piece.
                let mut length = 0.5 * (c + next);
                for _ in 0..60 {
                    if let Some(x) = uncovered(&gaps, nu, length, false) {
                        return Ok(Some(Witness { start: x, length }));
                    }
                    length = 0.5 * (c + length);
                }
                return Ok(Some(Witness { start: f64::NAN, length: c }));
            }
        }
        Ok(None)
    }

    /// Union of `base^-depth`-adic intervals whose digits all lie in `kept`.
    pub fn cantor_iterate(base: u32, kept: &[u32], depth: u32) -> Result<Self> {
        if base < 3 {
            return Err(Error::Parameter(format!("base must be at least 3, got {base}")));
        }
        if depth == 0 {
            return Err(Error::Parameter("depth must be at least 1".into()));
        }
        let mut digits = kept.to_vec();
        digits.sort_unstable();
        digits.dedup();
        if digits.is_empty() || digits.len() >= base as usize || digits.iter().any(|&d| d >= base) {
            return Err(Error::Parameter(format!(
                "kept digits {kept:?} must be a proper nonempty subset of 0..{base}"
            )));
        }
        let count = (digits.len() as f64).powi(depth as i32);
        if count > (1u64 << 22) as f64 {
            return Err(Error::SizeCap { size: count as usize, cap: 1 << 22 });
        }
        let mut starts: Vec<u64> = vec![0];
        for _ in 0..depth {
            starts = starts
                .iter()
                .flat_map(|&s| digits.iter().map(move |&d| s * base as u64 + d as u64))
                .collect();
        }
        let scale = (base as f64).powi(depth as i32);
        let raw = starts.iter().map(|&s| (s as f64 / scale, (s + 1) as f64 / scale)).collect();
        Self::new(merge_sorted(raw))
    }

    /// Removes, in generation `j = 0..depth`, centered gaps of width
    /// `delta e^{-2j}` from every period of length `T e^{-2j}`.
    ///
    /// Returns the set and `nu' = e^{-2} delta / T`; the set is
    /// `nu'`-porous on `[T e^{-2(depth - 1)}, 1]`.
    pub fn gap_construction(t: f64, delta: f64, depth: u32) -> Result<(Self, f64)> {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(Error::Parameter(format!("T must be at least 1, got {t}")));
        }
        if !(delta > 0.0 && delta < 1.0 && delta < t) {
            return Err(Error::Parameter(format!("delta must lie in (0, min(1, T)), got {delta}")));
        }
        if depth == 0 {
            return Err(Error::Parameter("depth must be at least 1".into()));
        }
        let last_width = delta * (-2.0 * (depth - 1) as f64).exp();
        if last_width < 1e-14 {
            return Err(Error::Parameter(format!("depth {depth} needs gap width {last_width:e} below 1e-14")));
        }
        let total: f64 = (0..depth).map(|j| (2.0 * j as f64).exp() / t + 1.0).sum();
        const CAP: usize = 1 << 22;
        if total > CAP as f64 {
            return Err(Error::SizeCap { size: total as usize, cap: CAP });
        }
        let mut gaps = Vec::new();
        for j in 0..depth {
            let decay = (-2.0 * j as f64).exp();
            let period = t * decay;
            let half = 0.5 * delta * decay;
            let mut k = 0u64;
            loop {
                let center = (k as f64 + 0.5) * period;
                if center - half >= 1.0 {
                    break;
                }
                gaps.push((center - half, center + half));
                k += 1;
            }
        }
        gaps.sort_by(|x, y| x.0.total_cmp(&y.0));
        let gaps = merge_sorted(gaps);
        let mut kept = Vec::new();
        let mut left = 0.0_f64;
        for (p, q) in gaps {
            if p > left {
                kept.push((left, p.min(1.0)));
            }
            left = left.max(q);
            if left >= 1.0 {
                break;
            }
        }
        if left < 1.0 {
            kept.push((left, 1.0));
        }
        kept.retain(|(a, b)| b > a);
        let nu_prime = (-2.0_f64).exp() * delta / t;
        Ok((Self::new(kept)?, nu_prime))
    }

    /// `Omega + [-alpha, alpha]`, clipped to `[0, 1]` and merged.
    pub fn thicken(&self, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("thickening radius must be nonnegative, got {alpha}")));
        }
        if alpha == 0.0 {
            return Ok(self.clone());
        }
        let raw = self
            .intervals
            .iter()
            .map(|&(a, b)| ((a - alpha).max(0.0), (b + alpha).min(1.0)))
            .filter(|(a, b)| b > a)
            .collect();
        Self::new_unbounded(merge_sorted(raw))
    }

    /// Image under a strictly monotone map, applied to the endpoints.
    ///
    /// `bound` is the supplied bound `2 C_1` on `|psi'|`, `|1/psi'|` and
    /// `|psi''|`; it only feeds [`diffeo_window`]. Monotonicity is checked on
    /// a grid of `[0, 1]` and at every endpoint.
    pub fn diffeo_image<F: Fn(f64) -> f64>(&self, psi: F) -> Result<Self> {
        const GRID: usize = 10_000;
        let mut xs: Vec<f64> = (0..=GRID).map(|k| k as f64 / GRID as f64).collect();
        xs.extend(self.intervals.iter().flat_map(|&(a, b)| [a, b]));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let values: Vec<f64> = xs.iter().map(|&x| psi(x)).collect();
        let increasing = values.last() > values.first();
        for (w, x) in values.windows(2).zip(&xs) {
            let ok = if increasing { w[1] > w[0] } else { w[1] < w[0] };
            if !ok || !w[1].is_finite() {
                return Err(Error::NotMonotone { at: *x });
            }
        }
        let raw = self
            .intervals
            .iter()
            .map(|&(a, b)| {
                let (pa, pb) = (psi(a), psi(b));
                (pa.min(pb), pa.max(pb))
            })
            .collect();
        Self::from_unsorted(raw)
    }

    /// One `a b` pair per line; `#` comments and blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut intervals = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parameter(format!("line {}: cannot parse {s:?} as a number", lineno + 1)))
            };
            match fields.as_slice() {
                [a, b] => intervals.push((parse(a)?, parse(b)?)),
                _ => {
                    return Err(Error::Parameter(format!(
                        "line {}: expected two numbers, got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(intervals)
    }
}

impl fmt::Display for PorousSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in &self.intervals {
            writeln!(f, "{a} {b}")?;
        }
        Ok(())
    }
}

impl FromStr for PorousSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// An interval `[start, start + length]` that contains no gap of relative size `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub start: f64,
    pub length: f64,
}

fn check_window(nu: f64, alpha0: f64, alpha1: f64) -> Result<()> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Parameter(format!("nu must lie in (0, 1), got {nu}")));
    }
    if !(alpha0 > 0.0 && alpha0 <= alpha1 && alpha1.is_finite()) {
        return Err(Error::Parameter(format!("scale window must satisfy 0 < alpha0 <= alpha1, got [{alpha0}, {alpha1}]")));
    }
    Ok(())
}

/// A point `x` such that `[x, x + length]` fails, if any. With `just_above`
/// the check is the limit from above: gaps of length exactly `nu * length`
/// no longer count, and the separation inequality is taken at `length`.
fn uncovered(gaps: &[(f64, f64)], nu: f64, length: f64, just_above: bool) -> Option<f64> {
    let need = nu * length;
    let long = gaps.iter().filter(|(p, q)| {
        let len = q - p;
        if just_above {
            len > need + LENGTH_TOL
        } else {
            len >= need - LENGTH_TOL
        }
    });
    let mut prev: Option<(f64, f64)> = None;
    for &(p, q) in long {
        if let Some((_, q0)) = prev {
            let separation = p - q0;
            if separation > (1.0 - 2.0 * nu) * length + LENGTH_TOL {
                return Some(0.5 * ((q0 - need) + (p - (length - need))));
            }
        }
        prev = Some((p, q));
    }
    None
}

/// Merges sorted intervals that overlap or touch.
fn merge_sorted(intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (a, b) in intervals {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// The scale window `(nu / 2, 2 C_1 alpha0, alpha1 / (2 C_1^3))` for the
/// image of a `nu`-porous set under a map with derivative bound `2 C_1`,
/// where `C_1 = max(1, bound / 2)`.
pub fn diffeo_window(nu: f64, alpha0: f64, alpha1: f64, bound: f64) -> (f64, f64, f64) {
    let c1 = (bound / 2.0).max(1.0);
    (nu / 2.0, 2.0 * c1 * alpha0, alpha1 * 0.5 / c1.powi(3))
}

/// The window `(nu / 3, max(alpha0, 3 alpha / nu), alpha1)` after thickening by `alpha`.
pub fn thicken_window(nu: f64, alpha0: f64, alpha1: f64, alpha: f64) -> (f64, f64, f64) {
    (nu / 3.0, alpha0.max(3.0 * alpha / nu), alpha1)
}

/// Brute-force porosity on a grid: every length `alpha0 + k step` up to
/// `alpha1` and every start `x` on the `step` grid is tested directly
/// against the definition. Independent of the gap-separation argument in
/// [`PorousSet::porosity`]; used to cross-check it.
pub fn grid_porosity(set: &PorousSet, nu: f64, alpha0: f64, alpha1: f64, step: f64) -> Result<Option<Witness>> {
    check_window(nu, alpha0, alpha1)?;
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Parameter(format!("grid step must be positive, got {step}")));
    }
    let gaps = set.gaps();
    let Some(&(lo, _)) = set.intervals.first() else { return Ok(None) };
    let hi = set.intervals.last().map(|&(_, b)| b).unwrap_or(lo);
    let lengths = ((alpha1 - alpha0) / step + 1e-9).floor() as i64;
    for k in 0..=lengths {
        let length = alpha0 + k as f64 * step;
        let need = nu * length - LENGTH_TOL;
        let first = ((lo - length) / step).floor() as i64 - 1;
        let last = (hi / step).ceil() as i64 + 1;
        let mut g = 0usize;
        for i in first..=last {
            let x = i as f64 * step;
            let end = x + length;
            while g < gaps.len() && gaps[g].1 <= x {
                g += 1;
            }
            let ok = gaps[g..]
                .iter()
                .take_while(|(p, _)| *p < end)
                .any(|&(p, q)| end.min(q) - x.max(p) >= need);
            if !ok {
                return Ok(Some(Witness { start: x, length }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PorousSet::new(vec![(0.2, 0.1)]).is_err());
        assert!(PorousSet::new(vec![(0.1, 0.3), (0.3, 0.4)]).is_err());
        assert!(PorousSet::new(vec![(0.5, 1.2)]).is_err());
        assert!(PorousSet::new_unbounded(vec![(0.5, 1.2)]).is_ok());
        assert!(PorousSet::new(vec![(0.0, 0.2), (0.5, 1.0)]).is_ok());
    }

    #[test]
    fn trivial_porosity() {
        assert!(PorousSet::empty().is_porous(0.9, 1e-6, 1.0).unwrap());
        for nu in [0.01, 0.3, 0.7] {
            assert!(!PorousSet::unit().is_porous(nu, 0.5, 1.0).unwrap());
        }
        assert!(PorousSet::unit().is_porous(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn witness_is_genuine() {
        let set = PorousSet::new(vec![(0.0, 0.3), (0.32, 0.6), (0.9, 1.0)]).unwrap();
        let w = set.porosity(0.25, 0.05, 0.5).unwrap().expect("not porous");
        assert!((0.05..=0.5).contains(&w.length));
        let gaps = set.gaps();
        let best = gaps
            .iter()
            .map(|&(p, q)| (w.start + w.length).min(q) - w.start.max(p))
            .fold(f64::MIN, f64::max);
        assert!(best < 0.25 * w.length);
    }

    #[test]
    fn cantor_examples() {
        let c1 = PorousSet::cantor_iterate(3, &[0, 2], 1).unwrap();
        assert_eq!(c1.intervals(), &[(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]);
        for d in 1..=6 {
            let c = PorousSet::cantor_iterate(3, &[0, 2], d).unwrap();
            assert_eq!(c.len(), 1 << d);
            assert!((c.measure() - (2.0f64 / 3.0).powi(d as i32)).abs() < 1e-12);
        }
        assert!(PorousSet::cantor_iterate(2, &[0], 3).is_err());
        assert!(PorousSet::cantor_iterate(3, &[0, 1, 2], 3).is_err());
        assert!(PorousSet::cantor_iterate(3, &[], 3).is_err());
        assert!(PorousSet::cantor_iterate(3, &[0, 2], 0).is_err());
        // adjacent kept digits merge
        let c = PorousSet::cantor_iterate(4, &[0, 1], 1).unwrap();
        assert_eq!(c.intervals(), &[(0.0, 0.5)]);
    }

    #[test]
    fn cantor_porosity_window() {
        let c = PorousSet::cantor_iterate(3, &[0, 2], 5).unwrap();
        let s5 = 3f64.powi(-5);
        assert!(c.is_porous(0.1, 3f64.powi(-4), 1.0).unwrap());
        assert!(c.is_porous(0.1, 1.25 * s5, 1.0).unwrap());
        // a solid basic interval of length 3^-5 admits no gap
        assert!(!c.is_porous(0.1, s5, 1.0).unwrap());
    }

    #[test]
    fn gap_construction_examples() {
        let (set, nu) = PorousSet::gap_construction(1.0, 0.5, 1).unwrap();
        assert!((nu - 0.067668).abs() < 1e-6);
        assert_eq!(set.intervals(), &[(0.0, 0.25), (0.75, 1.0)]);
        for (t, delta, depth) in [(1.0, 0.5, 3), (2.0, 0.8, 4), (1.5, 0.3, 3)] {
            let (set, nu) = PorousSet::gap_construction(t, delta, depth).unwrap();
            let low = t * (-2.0 * (depth - 1) as f64).exp();
            assert!(set.is_porous(nu, low, 1.0).unwrap(), "T={t} delta={delta} depth={depth}");
        }
        assert!(PorousSet::gap_construction(0.5, 0.1, 2).is_err());
        assert!(PorousSet::gap_construction(1.0, 1.5, 2).is_err());
        assert!(PorousSet::gap_construction(1.0, 0.5, 20).is_err());
    }

    #[test]
    fn thicken_examples() {
        let set = PorousSet::new(vec![(0.5, 0.5 + 1e-9)]).unwrap();
        assert_eq!(set.thicken(0.0).unwrap(), set);
        let t = set.thicken(0.1).unwrap();
        assert!((t.intervals()[0].0 - 0.4).abs() < 1e-15 && (t.intervals()[0].1 - (0.6 + 1e-9)).abs() < 1e-15);
        let clipped = PorousSet::new(vec![(0.0, 0.1), (0.15, 0.2)]).unwrap().thicken(0.05).unwrap();
        assert_eq!(clipped.intervals(), &[(0.0, 0.25)]);
        assert!(set.thicken(-1.0).is_err());

        let (set, nu) = PorousSet::gap_construction(1.0, 0.5, 3).unwrap();
        let alpha0 = (-4.0_f64).exp();
        let alpha = nu * alpha0 / 3.0;
        let (nu3, lo, hi) = thicken_window(nu, alpha0, 1.0, alpha);
        assert!(set.thicken(alpha).unwrap().is_porous(nu3, lo, hi).unwrap());
    }

    #[test]
    fn diffeo_examples() {
        let c = PorousSet::cantor_iterate(3, &[0, 2], 4).unwrap();
        assert_eq!(c.diffeo_image(|x| x).unwrap(), c);
        let doubled = c.diffeo_image(|x| 2.0 * x).unwrap();
        for (p, q) in c.intervals().iter().zip(doubled.intervals()) {
            assert_eq!((2.0 * p.0, 2.0 * p.1), *q);
        }
        let reversed = c.diffeo_image(|x| 1.0 - x).unwrap();
        assert_eq!(reversed.len(), c.len());
        assert!(matches!(c.diffeo_image(|x| (x - 0.5) * (x - 0.5)), Err(Error::NotMonotone { .. })));

        let (set, nu) = PorousSet::gap_construction(1.0, 0.5, 3).unwrap();
        let psi = |x: f64| x + 0.1 * (2.0 * std::f64::consts::PI * x).sin() / (4.0 * std::f64::consts::PI);
        let image = set.diffeo_image(psi).unwrap();
        let (nu2, lo, hi) = diffeo_window(nu, (-4.0_f64).exp(), 1.0, 2.0);
        assert!(image.is_porous(nu2, lo, hi).unwrap());
    }

    #[test]
    fn parse_and_format_round_trip() {
        let set = PorousSet::cantor_iterate(3, &[0, 2], 3).unwrap();
        let text = set.to_string();
        assert_eq!(text.parse::<PorousSet>().unwrap(), set);
        let parsed = PorousSet::parse("# two pieces\n0 0.25\n\n0.5 0.75 # trailing\n").unwrap();
        assert_eq!(parsed.intervals(), &[(0.0, 0.25), (0.5, 0.75)]);
        assert!(PorousSet::parse("0 0.1 0.2").is_err());
        assert!(PorousSet::parse("a b").is_err());
    }

    #[test]
    fn exact_agrees_with_grid_on_small_case() {
        let set = PorousSet::new(vec![(0.1, 0.2), (0.25, 0.5), (0.52, 0.7)]).unwrap();
        for (nu, a0, a1) in [(0.1, 0.05, 0.3), (0.25, 0.02, 0.5), (0.25, 0.1, 0.2)] {
            let exact = set.is_porous(nu, a0, a1).unwrap();
            let grid = grid_porosity(&set, nu, a0, a1, 1e-4).unwrap().is_none();
            assert_eq!(exact, grid, "nu={nu} window=[{a0}, {a1}]");
        }
    }
}
