//! Operator norms of `1_{Omega-} F 1_{Omega+}` in the discrete and the
//! continuous model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::PorousSet;
use crate::{Error, Result, C64};

/// Largest grid handled by the dense path.
pub const DENSE_MAX_N: usize = 4096;
/// Largest submatrix (in entries) handled by the dense path.
pub const DENSE_MAX_ENTRIES: usize = 1 << 21;

/// A subset of `Z_N` as a bit mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteSet {
    mask: Vec<bool>,
}

impl DiscreteSet {
    pub fn new(mask: Vec<bool>) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::Parameter("grid size N must be positive".into()));
        }
        Ok(Self { mask })
    }

    pub fn full(n: usize) -> Self {
        Self { mask: vec![true; n.max(1)] }
    }

    pub fn empty(n: usize) -> Self {
        Self { mask: vec![false; n.max(1)] }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut set = Self::empty(n);
        for &i in indices {
            if i >= n {
                return Err(Error::Parameter(format!("index {i} outside Z_{n}")));
            }
            set.mask[i] = true;
        }
        Ok(set)
    }

    /// Cells `[j/N, (j+1)/N)` whose midpoint lies in the set.
    pub fn from_porous(set: &PorousSet, n: usize) -> Result<Self> {
        Self::new((0..n).map(|j| set.contains((j as f64 + 0.5) / n as f64)).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.mask.len() == other.mask.len() && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    DenseSvd,
    PowerIteration,
}

impl NormMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DenseSvd => "dense-svd",
            Self::PowerIteration => "power-iteration",
        }
    }
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-svd" | "dense" => Ok(Self::DenseSvd),
            "power-iteration" | "power" => Ok(Self::PowerIteration),
            other => Err(Error::Parameter(format!("unknown norm method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    /// For power iteration, `|M*M x - lambda x| / lambda` at the final iterate.
    pub residual: f64,
}

impl NormResult {
    fn exact(value: f64) -> Self {
        Self { value, method: NormMethod::DenseSvd, iterations: 0, residual: 0.0 }
    }
}

/// Options for [`discrete_norm_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Force a method instead of choosing by size.
    pub method: Option<NormMethod>,
    pub max_iterations: usize,
    /// Stop when the relative Rayleigh-quotient change drops below this.
    pub tolerance: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { method: None, max_iterations: 10_000, tolerance: 1e-10 }
    }
}

/// `sqrt(|Omega-| |Omega+| / N)`, the Frobenius norm of the submatrix.
pub fn frobenius_bound(minus: &DiscreteSet, plus: &DiscreteSet) -> f64 {
    (minus.count() as f64 * plus.count() as f64 / minus.grid_size() as f64).sqrt()
}

/// Norm of the `Omega- x Omega+` submatrix of the unitary DFT
/// `F[j, k] = N^{-1/2} e^{-2 pi i jk / N}`.
pub fn discrete_norm(minus: &DiscreteSet, plus: &DiscreteSet) -> Result<NormResult> {
    discrete_norm_with(minus, plus, NormOptions::default())
}

pub fn discrete_norm_with(minus: &DiscreteSet, plus: &DiscreteSet, opts: NormOptions) -> Result<NormResult> {
    let n = minus.grid_size();
    if plus.grid_size() != n {
        return Err(Error::DimensionMismatch { expected: n, found: plus.grid_size() });
    }
    let (rows, cols) = (minus.indices(), plus.indices());
    if rows.is_empty() || cols.is_empty() {
        return Ok(NormResult::exact(0.0));
    }
    let method = opts.method.unwrap_or(if n <= DENSE_MAX_N && rows.len() * cols.len() <= DENSE_MAX_ENTRIES {
        NormMethod::DenseSvd
    } else {
        NormMethod::PowerIteration
    });
    match method {
        NormMethod::DenseSvd => {
            let scale = (n as f64).sqrt().recip();
            let m = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
                let phase = ((rows[a] * cols[b]) % n) as f64 / n as f64;
                C64::from_polar(scale, -2.0 * PI * phase)
            });
            Ok(NormResult::exact(top_singular_value(m)))
        }
        NormMethod::PowerIteration => power_iteration(minus, plus, opts),
    }
}

fn top_singular_value(m: DMatrix<C64>) -> f64 {
    // Work with the smaller Gram matrix; its top eigenvalue is sigma_max^2.
    let gram = if m.nrows() <= m.ncols() { &m * m.adjoint() } else { m.adjoint() * &m };
    let eig = gram.symmetric_eigenvalues();
    eig.max().max(0.0).sqrt()
}

fn power_iteration(minus: &DiscreteSet, plus: &DiscreteSet, opts: NormOptions) -> Result<NormResult> {
    let n = minus.grid_size();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let scale = (n as f64).sqrt().recip();
    let restrict = |v: &mut [C64], set: &DiscreteSet| {
        for (x, &keep) in v.iter_mut().zip(set.mask()) {
            if !keep {
                *x = C64::new(0.0, 0.0);
            }
        }
    };
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // y = M* M x with M = 1_- F 1_+, F unitary
    let apply = |x: &[C64]| -> Vec<C64> {
        let mut y = x.to_vec();
        forward.process(&mut y);
        for z in &mut y {
            *z *= scale;
        }
        restrict(&mut y, minus);
        inverse.process(&mut y);
        for z in &mut y {
            *z *= scale;
        }
        restrict(&mut y, plus);
        y
    };

    let mut x: Vec<C64> = plus.mask().iter().map(|&b| C64::new(if b { 1.0 } else { 0.0 }, 0.0)).collect();
    let start = norm(&x);
    x.iter_mut().for_each(|z| *z /= start);
    let mut lambda = 0.0_f64;
    for iteration in 1..=opts.max_iterations {
        let y = apply(&x);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        let ynorm = norm(&y);
        if ynorm == 0.0 {
            return Ok(NormResult { value: 0.0, method: NormMethod::PowerIteration, iterations: iteration, residual: 0.0 });
        }
        let change = (next - lambda).abs() / next.abs().max(f64::MIN_POSITIVE);
        if change <= opts.tolerance {
            let residual = y.iter().zip(&x).map(|(a, b)| (a - b * next).norm_sqr()).sum::<f64>().sqrt() / next;
            return Ok(NormResult {
                value: next.max(0.0).sqrt(),
                method: NormMethod::PowerIteration,
                iterations: iteration,
                residual,
            });
        }
        lambda = next;
        x = y.into_iter().map(|z| z / ynorm).collect();
    }
    let y = apply(&x);
    let residual = y.iter().zip(&x).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt() / lambda;
    Err(Error::NoConvergence { iterations: opts.max_iterations, residual })
}

/// Midpoint nodes of `[k/q, (k+1)/q)` cells inside the set.
fn quadrature_nodes(set: &PorousSet, points_per_unit: usize) -> Vec<f64> {
    let Some(&(lo, _)) = set.intervals().first() else { return Vec::new() };
    let hi = set.intervals().last().map(|&(_, b)| b).unwrap_or(lo);
    let q = points_per_unit as f64;
    let first = (lo * q).floor() as i64;
    let last = (hi * q).ceil() as i64;
    (first..last).map(|k| (k as f64 + 0.5) / q).filter(|&x| set.contains(x)).collect()
}

/// Norm of the kernel `(2 pi h)^{-1/2} e^{-i x xi / h}` from `Omega+` (in `x`)
/// to `Omega-` (in `xi`), by composite midpoint quadrature with
/// `points_per_unit` cells per unit length.
pub fn continuous_norm(minus: &PorousSet, plus: &PorousSet, h: f64, points_per_unit: usize) -> Result<NormResult> {
    check_continuous(h, points_per_unit)?;
    let xi = quadrature_nodes(minus, points_per_unit);
    let x = quadrature_nodes(plus, points_per_unit);
    if xi.is_empty() || x.is_empty() {
        return Ok(NormResult::exact(0.0));
    }
    let weight = 1.0 / points_per_unit as f64;
    let amplitude = weight / (2.0 * PI * h).sqrt();
    let m = DMatrix::from_fn(xi.len(), x.len(), |a, b| C64::from_polar(amplitude, -xi[a] * x[b] / h));
    Ok(NormResult::exact(top_singular_value(m)))
}

/// `min(1, (|Omega-| |Omega+| / (2 pi h))^{1/2})` with measures taken on the
/// same quadrature grid as [`continuous_norm`].
pub fn continuous_frobenius_bound(minus: &PorousSet, plus: &PorousSet, h: f64, points_per_unit: usize) -> Result<f64> {
    check_continuous(h, points_per_unit)?;
    let w = 1.0 / points_per_unit as f64;
    let mm = quadrature_nodes(minus, points_per_unit).len() as f64 * w;
    let mp = quadrature_nodes(plus, points_per_unit).len() as f64 * w;
    Ok((mm * mp / (2.0 * PI * h)).sqrt().min(1.0))
}

fn check_continuous(h: f64, points_per_unit: usize) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Parameter(format!("h must lie in (0, 1), got {h}")));
    }
    let spacing = 1.0 / points_per_unit.max(1) as f64;
    if spacing > h / 8.0 {
        return Err(Error::UnderResolved { spacing, limit: h / 8.0 });
    }
    Ok(())
}

/// Least-squares fit `log norm = log C + beta log scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta_hat: f64,
    pub log_c: f64,
    pub r_squared: f64,
}

pub fn beta_regression(samples: &[(f64, f64)]) -> Result<BetaFit> {
    if samples.len() < 4 {
        return Err(Error::Parameter(format!("need at least 4 samples, got {}", samples.len())));
    }
    if let Some(&(s, v)) = samples.iter().find(|(s, v)| !(*s > 0.0 && *v > 0.0)) {
        return Err(Error::Parameter(format!("scales and norms must be positive, got ({s}, {v})")));
    }
    let xs: Vec<f64> = samples.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return Err(Error::Parameter("all samples share one scale".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let beta = sxy / sxx;
    let log_c = my - beta * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - log_c - beta * x).powi(2)).sum();
    let r_squared = if ss_tot <= 1e-24 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(BetaFit { beta_hat: beta, log_c, r_squared })
}

/// Outcome of the two-dimensional tensor-product comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorCheck {
    pub norm_2d: f64,
    pub norm_1d: f64,
    pub difference: f64,
}

impl TensorCheck {
    pub fn agrees(&self, tol: f64) -> bool {
        self.difference <= tol
    }
}

/// Largest 2D operator, in matrix entries.
pub const TENSOR_MAX_ENTRIES: usize = 1 << 24;

/// Builds `1_{Omega-}(frequency_1) F_{N x T} 1_{Omega+}(position_1)` on the
/// grid `Z_N x Z_T` entry by entry from the 2D DFT kernel and compares its
/// norm with the one-dimensional [`discrete_norm`].
pub fn tensor_factor_check(minus: &DiscreteSet, plus: &DiscreteSet, transverse: usize) -> Result<TensorCheck> {
    let n = minus.grid_size();
    if plus.grid_size() != n {
        return Err(Error::DimensionMismatch { expected: n, found: plus.grid_size() });
    }
    if transverse == 0 {
        return Err(Error::Parameter("transverse dimension must be positive".into()));
    }
    let rows: Vec<(usize, usize)> =
        minus.indices().into_iter().flat_map(|j| (0..transverse).map(move |l| (j, l))).collect();
    let cols: Vec<(usize, usize)> =
        plus.indices().into_iter().flat_map(|k| (0..transverse).map(move |m| (k, m))).collect();
    let size = (n * transverse).pow(2);
    if size > TENSOR_MAX_ENTRIES {
        return Err(Error::SizeCap { size, cap: TENSOR_MAX_ENTRIES });
    }
    let norm_1d = discrete_norm_with(minus, plus, NormOptions { method: Some(NormMethod::DenseSvd), ..Default::default() })?.value;
    let norm_2d = if rows.is_empty() || cols.is_empty() {
        0.0
    } else {
        let scale = ((n * transverse) as f64).sqrt().recip();
        let m = DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
            let ((j, l), (k, m)) = (rows[a], cols[b]);
            let phase = ((j * k) % n) as f64 / n as f64 + ((l * m) % transverse) as f64 / transverse as f64;
            C64::from_polar(scale, -2.0 * PI * phase)
        });
        top_singular_value(m)
    };
    Ok(TensorCheck { norm_2d, norm_1d, difference: (norm_2d - norm_1d).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cantor(k: u32) -> DiscreteSet {
        let set = PorousSet::cantor_iterate(3, &[0, 2], k).unwrap();
        DiscreteSet::from_porous(&set, 3usize.pow(k)).unwrap()
    }

    #[test]
    fn trivial_norms() {
        for n in [1, 7, 64] {
            let full = DiscreteSet::full(n);
            assert!((discrete_norm(&full, &full).unwrap().value - 1.0).abs() < 1e-12);
            assert_eq!(discrete_norm(&full, &DiscreteSet::empty(n)).unwrap().value, 0.0);
            let zero = DiscreteSet::from_indices(n, &[0]).unwrap();
            assert!((discrete_norm(&zero, &zero).unwrap().value - (n as f64).powf(-0.5)).abs() < 1e-14);
        }
        assert!(discrete_norm(&DiscreteSet::full(4), &DiscreteSet::full(5)).is_err());
    }

    #[test]
    fn cantor_reference_values() {
        let n81 = discrete_norm(&cantor(4), &cantor(4)).unwrap();
        assert!((n81.value - 0.7370600127).abs() < 1e-9, "{}", n81.value);
        let d = cantor(4);
        assert!(n81.value <= frobenius_bound(&d, &d));
    }

    #[test]
    fn power_iteration_matches_dense() {
        let power = NormOptions { method: Some(NormMethod::PowerIteration), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [3, 4, 5, 6] {
            let c = cantor(k);
            let dense = discrete_norm(&c, &c).unwrap().value;
            let iter = discrete_norm_with(&c, &c, power).unwrap();
            assert!((dense - iter.value).abs() < 1e-7, "k={k}: {dense} vs {}", iter.value);
        }
        for _ in 0..5 {
            let n = 256;
            let a = DiscreteSet::new((0..n).map(|_| rng.gen_bool(0.3)).collect()).unwrap();
            let b = DiscreteSet::new((0..n).map(|_| rng.gen_bool(0.3)).collect()).unwrap();
            let dense = discrete_norm(&a, &b).unwrap().value;
            let iter = discrete_norm_with(&a, &b, power).unwrap();
            assert!((dense - iter.value).abs() < 1e-7, "{dense} vs {}", iter.value);
        }
    }

    #[test]
    fn power_iteration_cap_reports_residual() {
        let c = cantor(5);
        let opts = NormOptions { method: Some(NormMethod::PowerIteration), max_iterations: 2, tolerance: 1e-15 };
        assert!(matches!(discrete_norm_with(&c, &c, opts), Err(Error::NoConvergence { iterations: 2, .. })));
    }

    #[test]
    fn continuous_unit_box() {
        let unit = PorousSet::unit();
        let norm = continuous_norm(&unit, &unit, 0.1, 512).unwrap().value;
        assert!((norm - 0.97191).abs() < 1e-4, "{norm}");
        assert!(matches!(continuous_norm(&unit, &unit, 0.1, 64), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn continuous_symmetry_and_bound() {
        let a = PorousSet::new(vec![(0.0, 0.2), (0.5, 0.6)]).unwrap();
        let b = PorousSet::cantor_iterate(3, &[0, 2], 2).unwrap();
        let h = 0.05;
        let ab = continuous_norm(&a, &b, h, 400).unwrap().value;
        let ba = continuous_norm(&b, &a, h, 400).unwrap().value;
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab <= continuous_frobenius_bound(&a, &b, h, 400).unwrap() + 1e-12);
    }

    #[test]
    fn regression_examples() {
        let exact: Vec<(f64, f64)> = [0.1, 0.01, 0.001, 1e-4].iter().map(|&s: &f64| (s, s.powf(0.25))).collect();
        let fit = beta_regression(&exact).unwrap();
        assert!((fit.beta_hat - 0.25).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = [0.1, 0.01, 0.001, 1e-4].iter().map(|&s| (s, 1.0)).collect();
        assert_eq!(beta_regression(&flat).unwrap().beta_hat, 0.0);
        assert!(beta_regression(&exact[..3]).is_err());
        assert!(beta_regression(&[(0.1, 1.0); 4]).is_err());
        assert!(beta_regression(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0), (0.4, 1.0)]).is_err());
    }

    #[test]
    fn tensor_examples() {
        let full = DiscreteSet::full(8);
        let check = tensor_factor_check(&full, &full, 4).unwrap();
        assert!((check.norm_2d - 1.0).abs() < 1e-10 && check.agrees(1e-8));
        let check = tensor_factor_check(&full, &DiscreteSet::empty(8), 4).unwrap();
        assert_eq!((check.norm_2d, check.norm_1d), (0.0, 0.0));
        assert!(matches!(
            tensor_factor_check(&DiscreteSet::full(4096), &full, 2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            tensor_factor_check(&DiscreteSet::full(4096), &DiscreteSet::full(4096), 2),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn discretization_uses_midpoints() {
        let set = PorousSet::new(vec![(0.0, 0.25)]).unwrap();
        assert_eq!(DiscreteSet::from_porous(&set, 8).unwrap().indices(), vec![0, 1]);
    }
}
