//! The canonical symplectic form on `T*CH^n \ 0` in exponential chart
//! coordinates, the straightening coordinates at a point, and slow
//! rectangles.
//!
//! A cotangent point is a bundle point `q` together with a fiber radius
//! `tau`. Chart coordinates around a base point are `(s, u)` with
//! `s in R^{4n-1}` along the ordered frame and `u = log(tau / tau_0)`:
//!
//! ```text
//! (s, u)  ->  (lift_0 exp(sum s_i B_i), tau_0 e^u)
//! ```
//!
//! Index `4n - 1` of a chart vector is always the dilation direction `u`.
//! The tautological form is `alpha = tau Re<dz, v>`, and `omega = d alpha`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::flows::{bundle_distance, frame_indices, geodesic_flow, FrameRole, SphereBundlePoint};
use crate::minkowski::{expm, frame_basis, inner_raw, GroupElement, LieAlgebraElement, Sign, SpaceDim};
use crate::{CMat, CVec, Error, Result, C64};

/// Default radius of the exponential chart.
pub const CHART_RADIUS: f64 = 0.5;
/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// A point `tau * q` of `T*CH^n \ 0`, identified with a covector through the metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    q: SphereBundlePoint,
    tau: f64,
}

impl CotangentPoint {
    pub fn new(q: SphereBundlePoint, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("fiber radius must be positive, got {tau}")));
        }
        Ok(Self { q, tau })
    }

    /// `(e_0, e_1)` with unit fiber radius.
    pub fn base_point(n: SpaceDim) -> Self {
        Self { q: SphereBundlePoint::base_point(n), tau: 1.0 }
    }

    pub fn q(&self) -> &SphereBundlePoint {
        &self.q
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> SpaceDim {
        self.q.dim()
    }

    /// The homogeneous geodesic flow: the sphere part flows, `tau` is unchanged.
    pub fn flow(&self, t: f64) -> Self {
        Self { q: geodesic_flow(&self.q, t), tau: self.tau }
    }
}

/// Distance proxy on `T*CH^n \ 0`: bundle distance combined with `|Delta log tau|`.
pub fn cotangent_distance(a: &CotangentPoint, b: &CotangentPoint) -> Result<f64> {
    let d = bundle_distance(&a.q, &b.q)?;
    Ok(d.hypot(a.tau.ln() - b.tau.ln()))
}

/// Exponential chart coordinates `(s, u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartCoords {
    pub s: Vec<f64>,
    pub u: f64,
}

impl ChartCoords {
    pub fn zeros(n: SpaceDim) -> Self {
        Self { s: vec![0.0; n.frame_len()], u: 0.0 }
    }

    /// From a flat vector of length `4n` whose last entry is `u`.
    pub fn from_slice(values: &[f64]) -> Self {
        let (s, u) = values.split_at(values.len().saturating_sub(1));
        Self { s: s.to_vec(), u: u.first().copied().unwrap_or(0.0) }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.s.clone();
        v.push(self.u);
        v
    }

    /// `|s| + |u|`, the quantity bounded by the chart radius.
    pub fn radius(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum::<f64>().sqrt() + self.u.abs()
    }
}

/// Index of the dilation coordinate in a chart vector.
pub fn dilation_index(n: SpaceDim) -> usize {
    n.frame_len()
}

/// Chart dimension `4n`.
pub fn chart_dim(n: SpaceDim) -> usize {
    n.frame_len() + 1
}

/// Frame matrices `B_i`, computed once per chart.
struct Chart<'a> {
    base: &'a CotangentPoint,
    frame: Vec<CMat>,
}

impl<'a> Chart<'a> {
    fn new(base: &'a CotangentPoint) -> Self {
        let n = base.dim();
        let frame = frame_basis(n)
            .into_iter()
            .map(|label| LieAlgebraElement::basis(label, n).expect("frame labels are valid").matrix().clone())
            .collect();
        Self { base, frame }
    }

    fn lift(&self, c: &[f64]) -> CMat {
        let n = self.base.dim().ambient();
        let mut s = CMat::zeros(n, n);
        for (b, &x) in self.frame.iter().zip(c) {
            if x != 0.0 {
                s += b * C64::new(x, 0.0);
            }
        }
        self.base.q.lift().matrix() * expm(&s)
    }

    fn tau(&self, c: &[f64]) -> f64 {
        self.base.tau * c[self.frame.len()].exp()
    }

    /// `alpha` at chart point `c`, with `dz` by central differences.
    fn alpha(&self, c: &[f64], h: f64) -> Vec<f64> {
        let dim = c.len();
        let v = self.lift(c).column(1).into_owned();
        let tau = self.tau(c);
        let mut shifted = c.to_vec();
        (0..dim)
            .map(|j| {
                shifted[j] = c[j] + h;
                let zp: CVec = self.lift(&shifted).column(0).into_owned();
                shifted[j] = c[j] - h;
                let zm: CVec = self.lift(&shifted).column(0).into_owned();
                shifted[j] = c[j];
                let dz = (zp - zm) / C64::new(2.0 * h, 0.0);
                tau * inner_raw(&dz, &v).re
            })
            .collect()
    }
}

fn check_chart(base: &CotangentPoint, c: &ChartCoords, radius: f64) -> Result<()> {
    let expected = base.dim().frame_len();
    if c.s.len() != expected {
        return Err(Error::LengthMismatch { expected, found: c.s.len() });
    }
    let norm = c.radius();
    if norm >= radius {
        return Err(Error::ChartRadius { norm, radius });
    }
    Ok(())
}

/// The point with chart coordinates `c` around `base`, using [`CHART_RADIUS`].
pub fn chart_to_point(base: &CotangentPoint, c: &ChartCoords) -> Result<CotangentPoint> {
    chart_to_point_with_radius(base, c, CHART_RADIUS)
}

pub fn chart_to_point_with_radius(base: &CotangentPoint, c: &ChartCoords, radius: f64) -> Result<CotangentPoint> {
    check_chart(base, c, radius)?;
    let chart = Chart::new(base);
    let lift = GroupElement::from_matrix_unchecked(chart.lift(&c.to_vec()));
    CotangentPoint::new(SphereBundlePoint::from_lift(lift), chart.tau(&c.to_vec()))
}

/// Inverts [`chart_to_point`] by Gauss-Newton on `(s, theta)`, where the
/// phase `theta` absorbs the `U(1)` ambiguity of the representative `(z, v)`.
pub fn point_to_chart(base: &CotangentPoint, p: &CotangentPoint) -> Result<ChartCoords> {
    let n = base.dim();
    if p.dim() != n {
        return Err(Error::DimensionMismatch { expected: n.ambient(), found: p.dim().ambient() });
    }
    let chart = Chart::new(base);
    let frame_len = n.frame_len();
    let (zt, vt) = (p.q.z().entries().clone(), p.q.v().entries().clone());

    let residual = |x: &[f64]| -> DVector<f64> {
        let mut c = x[..frame_len].to_vec();
        c.push(0.0);
        let g = chart.lift(&c);
        let phase = C64::from_polar(1.0, x[frame_len]);
        let dz = g.column(0) - &zt * phase;
        let dv = g.column(1) - &vt * phase;
        let values = dz.iter().chain(dv.iter()).flat_map(|w| [w.re, w.im]);
        DVector::from_iterator(4 * n.ambient(), values)
    };

    let z0 = base.q.z().entries();
    let v0 = base.q.v().entries();
    let overlap: C64 = zt.dotc(z0) + vt.dotc(v0);
    let mut x = vec![0.0; frame_len + 1];
    x[frame_len] = overlap.arg();

    const STEP: f64 = 1e-6;
    let mut r = residual(&x);
    let mut iterations = 0;
    while r.norm() > 1e-13 && iterations < 60 {
        iterations += 1;
        let mut jac = DMatrix::zeros(r.len(), x.len());
        for k in 0..x.len() {
            let mut xp = x.clone();
            xp[k] += STEP;
            let mut xm = x.clone();
            xm[k] -= STEP;
            jac.set_column(k, &((residual(&xp) - residual(&xm)) / (2.0 * STEP)));
        }
        let delta = jac
            .svd(true, true)
            .solve(&r, 1e-12)
            .map_err(|_| Error::Degenerate { condition: f64::INFINITY })?;
        for (xi, d) in x.iter_mut().zip(delta.iter()) {
            *xi -= d;
        }
        let next = residual(&x);
        let stalled = next.norm() >= r.norm() * 0.999 && next.norm() < 1e-11;
        r = next;
        if stalled {
            break;
        }
    }
    if r.norm() > 1e-10 {
        return Err(Error::NoConvergence { iterations, residual: r.norm() });
    }
    x.truncate(frame_len);
    Ok(ChartCoords { s: x, u: (p.tau / base.tau).ln() })
}

/// `omega` and `alpha` in chart coordinates at `c = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMatrixAt {
    pub base: CotangentPoint,
    pub omega: DMatrix<f64>,
    pub alpha: DVector<f64>,
}

impl SymplecticMatrixAt {
    /// `max |omega + omega^T|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        (&self.omega + self.omega.transpose()).amax()
    }

    pub fn pairing(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.omega * b))
    }

    /// Largest `|omega(a, b)|` over chart basis vectors with `a in left`, `b in right`.
    pub fn max_pairing(&self, left: &[usize], right: &[usize]) -> f64 {
        left.iter()
            .flat_map(|&i| right.iter().map(move |&j| (i, j)))
            .fold(0.0, |acc, (i, j)| acc.max(self.omega[(i, j)].abs()))
    }
}

/// `omega = d alpha` at `c = 0` by nested central differences with step `fd_step`.
pub fn symplectic_form_at(base: &CotangentPoint, fd_step: f64) -> Result<SymplecticMatrixAt> {
    if !(1e-6..=1e-3).contains(&fd_step) {
        return Err(Error::Parameter(format!("fd_step {fd_step} outside [1e-6, 1e-3]")));
    }
    let out = raw_form(base, fd_step);
    check_nondegenerate(&out)?;
    Ok(out)
}

/// Richardson extrapolation `(4 omega(h/2) - omega(h)) / 3` of the nested scheme.
pub fn symplectic_form_extrapolated(base: &CotangentPoint, fd_step: f64) -> Result<SymplecticMatrixAt> {
    let coarse = symplectic_form_at(base, fd_step)?;
    let fine = raw_form(base, fd_step / 2.0);
    let out = SymplecticMatrixAt {
        base: base.clone(),
        omega: (&fine.omega * 4.0 - &coarse.omega) / 3.0,
        alpha: (&fine.alpha * 4.0 - &coarse.alpha) / 3.0,
    };
    check_nondegenerate(&out)?;
    Ok(out)
}

/// No step-range check; used for convergence studies at larger steps.
pub fn raw_form(base: &CotangentPoint, h: f64) -> SymplecticMatrixAt {
    let chart = Chart::new(base);
    let dim = chart_dim(base.dim());
    let origin = vec![0.0; dim];
    let alpha = DVector::from_vec(chart.alpha(&origin, h));
    // derivs[(i, j)] = d_i alpha_j
    let mut derivs = DMatrix::zeros(dim, dim);
    let mut c = origin;
    for i in 0..dim {
        c[i] = h;
        let plus = chart.alpha(&c, h);
        c[i] = -h;
        let minus = chart.alpha(&c, h);
        c[i] = 0.0;
        for j in 0..dim {
            derivs[(i, j)] = (plus[j] - minus[j]) / (2.0 * h);
        }
    }
    let omega = &derivs - derivs.transpose();
    SymplecticMatrixAt { base: base.clone(), omega, alpha }
}

fn check_nondegenerate(form: &SymplecticMatrixAt) -> Result<()> {
    let sv = form.omega.singular_values();
    let (min, max) = (sv.min(), sv.max());
    if min.is_nan() || min <= 1e-8 * max.max(1e-300) {
        return Err(Error::Degenerate { condition: max / min });
    }
    Ok(())
}

/// `omega` from the Lie bracket: `omega(A, B) = -tau Re [A, B]_{10}` on frame
/// directions and `omega(d_u, B) = tau Re B_{10}`.
pub fn exact_symplectic_form(base: &CotangentPoint) -> DMatrix<f64> {
    let chart = Chart::new(base);
    let dim = chart_dim(base.dim());
    let u = dilation_index(base.dim());
    let tau = base.tau;
    let mut omega = DMatrix::zeros(dim, dim);
    for (a, ma) in chart.frame.iter().enumerate() {
        for (b, mb) in chart.frame.iter().enumerate() {
            let comm = ma * mb - mb * ma;
            omega[(a, b)] = -tau * comm[(1, 0)].re;
        }
        omega[(u, a)] = tau * ma[(1, 0)].re;
        omega[(a, u)] = -omega[(u, a)];
    }
    omega
}

/// The four vanishing pairing families of the `omega` decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairingFamily {
    /// `(R d_u + R X) x (E_u + E_s)`.
    NeutralHyperbolic,
    /// `E_u x E_u` with `E_u = R V- + E-`.
    UnstableUnstable,
    /// `E_s x E_s` with `E_s = R V+ + E+`.
    StableStable,
    /// `V+ x E-` and `V- x E+`.
    FastSlowOpposite,
}

impl PairingFamily {
    pub const ALL: [PairingFamily; 4] =
        [Self::NeutralHyperbolic, Self::UnstableUnstable, Self::StableStable, Self::FastSlowOpposite];

    pub fn name(self) -> &'static str {
        match self {
            Self::NeutralHyperbolic => "neutral-hyperbolic",
            Self::UnstableUnstable => "unstable-unstable",
            Self::StableStable => "stable-stable",
            Self::FastSlowOpposite => "fast-slow-opposite",
        }
    }

    /// Chart index pairs whose pairing must vanish.
    pub fn pairs(self, n: SpaceDim) -> Vec<(usize, usize)> {
        let cross = |a: Vec<usize>, b: Vec<usize>| -> Vec<(usize, usize)> {
            a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).collect()
        };
        let within = |a: Vec<usize>| -> Vec<(usize, usize)> {
            a.iter().enumerate().flat_map(|(k, &i)| a[k + 1..].iter().map(move |&j| (i, j))).collect()
        };
        match self {
            Self::NeutralHyperbolic => {
                let mut hyper = unstable_indices(n);
                hyper.extend(stable_indices(n));
                cross(vec![dilation_index(n), 0], hyper)
            }
            Self::UnstableUnstable => within(unstable_indices(n)),
            Self::StableStable => within(stable_indices(n)),
            Self::FastSlowOpposite => {
                let mut pairs = cross(fast(n, Sign::Plus), slow(n, Sign::Minus));
                pairs.extend(cross(fast(n, Sign::Minus), slow(n, Sign::Plus)));
                pairs
            }
        }
    }
}

fn fast(n: SpaceDim, sign: Sign) -> Vec<usize> {
    frame_indices(n, FrameRole::Fast(sign))
}

fn slow(n: SpaceDim, sign: Sign) -> Vec<usize> {
    frame_indices(n, FrameRole::Slow(sign))
}

/// `E_u = R V- + E-`.
pub fn unstable_indices(n: SpaceDim) -> Vec<usize> {
    let mut v = fast(n, Sign::Minus);
    v.extend(slow(n, Sign::Minus));
    v
}

/// `E_s = R V+ + E+`.
pub fn stable_indices(n: SpaceDim) -> Vec<usize> {
    let mut v = fast(n, Sign::Plus);
    v.extend(slow(n, Sign::Plus));
    v
}

/// Largest `|omega|` over one pairing family.
pub fn pairing_residual(form: &SymplecticMatrixAt, family: PairingFamily) -> f64 {
    family
        .pairs(form.base.dim())
        .into_iter()
        .fold(0.0, |acc, (i, j)| acc.max(form.omega[(i, j)].abs()))
}

/// `max |omega|` over `L_u = R X + E_u` and over `L_s = R X + E_s`.
pub fn lagrangian_residuals(form: &SymplecticMatrixAt) -> (f64, f64) {
    let n = form.base.dim();
    let mut lu = vec![0];
    lu.extend(unstable_indices(n));
    let mut ls = vec![0];
    ls.extend(stable_indices(n));
    (form.max_pairing(&lu, &lu), form.max_pairing(&ls, &ls))
}

/// Finite-difference error of the whole form at a step and at half the step,
/// measured against [`exact_symplectic_form`].
///
/// The vanishing pairings carry no truncation error at all for this
/// scheme (only roundoff), so the order of the scheme is observed on the
/// full matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub step: f64,
    pub error: f64,
    pub error_half: f64,
}

impl ConvergenceReport {
    /// Close to 4 for a second-order scheme.
    pub fn ratio(&self) -> f64 {
        self.error / self.error_half
    }
}

pub fn form_convergence(base: &CotangentPoint, step: f64) -> ConvergenceReport {
    let exact = exact_symplectic_form(base);
    let error = |h: f64| (&raw_form(base, h).omega - &exact).amax();
    ConvergenceReport { step, error: error(step), error_half: error(step / 2.0) }
}

/// `J_std = [[0, -I], [I, 0]]` in `(y, eta)` order, so that
/// `omega_std(d_eta_j, d_y_k) = delta_jk`.
pub fn canonical_matrix(dim: usize) -> DMatrix<f64> {
    let half = dim / 2;
    let mut j = DMatrix::zeros(dim, dim);
    for k in 0..half {
        j[(k, half + k)] = -1.0;
        j[(half + k, k)] = 1.0;
    }
    j
}

/// Linear straightening coordinates at a point: `L` sends the chart basis
/// `e_1..e_2n, f_1..f_2n` to `d_y, d_eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StraightenMap {
    pub base: CotangentPoint,
    /// Chart coordinates to `(y, eta)`.
    pub l: DMatrix<f64>,
    /// `L^{-1}`: columns are `e_1..e_2n, f_1..f_2n` in chart coordinates.
    pub basis: DMatrix<f64>,
    /// Condition number of the `E- x E+` pairing system.
    pub condition: f64,
}

/// Straightening map built from the extrapolated finite-difference form.
pub fn straighten(base: &CotangentPoint) -> Result<StraightenMap> {
    let form = symplectic_form_extrapolated(base, 1e-3)?;
    straighten_with(&form)
}

/// The symplectic-basis construction: `e_1 in R V+`, `e_2.. in E+`,
/// `e_2n in R X`, `f_1 in R V-`, `f_j in E-` dual to the `e_j`,
/// `f_2n in R d_u`.
///
/// Each conjugate pair is scaled so that `|e_j| = |f_j|` in the frame
/// norm. For the slow block this uses the SVD `M = U S V^T` of the
/// `E- x E+` pairing matrix: `e = E+ V S^{-1/2}`, `f = E- U S^{-1/2}`.
/// Balanced scaling keeps the straightened coordinates comparable in size,
/// which is what the rectangle experiments rely on.
pub fn straighten_with(form: &SymplecticMatrixAt) -> Result<StraightenMap> {
    let n = form.base.dim();
    let dim = chart_dim(n);
    let half = dim / 2;
    let w = &form.omega;
    let (vp, vm) = (fast(n, Sign::Plus)[0], fast(n, Sign::Minus)[0]);
    let (ep, em) = (slow(n, Sign::Plus), slow(n, Sign::Minus));
    let u = dilation_index(n);

    let mut basis = DMatrix::zeros(dim, dim);
    let mut pair = |f_index: usize, e_index: usize, column: usize| -> Result<()> {
        let p = w[(f_index, e_index)];
        if p.abs() < 1e-12 {
            return Err(Error::Degenerate { condition: 1.0 / p.abs() });
        }
        let scale = p.abs().sqrt().recip();
        basis[(e_index, column)] = scale;
        basis[(f_index, half + column)] = p.signum() * scale;
        Ok(())
    };
    pair(vm, vp, 0)?;
    pair(u, 0, half - 1)?;

    let pairing = DMatrix::from_fn(em.len(), ep.len(), |a, k| w[(em[a], ep[k])]);
    let svd = pairing.svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let condition = smax / smin;
    if !(condition.is_finite() && condition < 1e12) {
        return Err(Error::Degenerate { condition });
    }
    let (uu, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    for j in 0..em.len() {
        let scale = svd.singular_values[j].sqrt().recip();
        for (b, &i) in ep.iter().enumerate() {
            basis[(i, 1 + j)] = vt[(j, b)] * scale;
        }
        for (a, &i) in em.iter().enumerate() {
            basis[(i, half + 1 + j)] = uu[(a, j)] * scale;
        }
    }
    let l = basis
        .clone()
        .try_inverse()
        .ok_or(Error::Degenerate { condition: f64::INFINITY })?;
    Ok(StraightenMap { base: form.base.clone(), l, basis, condition })
}

impl StraightenMap {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `max |L^T J_std L - omega|`.
    pub fn symplectic_residual(&self, omega: &DMatrix<f64>) -> f64 {
        let j = canonical_matrix(self.dim());
        (self.l.transpose() * j * &self.l - omega).amax()
    }

    /// `max |B^T omega B - J_std|` for the basis `B = L^{-1}`.
    pub fn basis_residual(&self, omega: &DMatrix<f64>) -> f64 {
        (self.basis.transpose() * omega * &self.basis - canonical_matrix(self.dim())).amax()
    }

    /// How far `L` sends each distinguished subspace outside its target
    /// coordinate span, relative to the image size.
    pub fn image_residuals(&self) -> Vec<(&'static str, f64)> {
        let n = self.base.dim();
        let dim = self.dim();
        let half = dim / 2;
        let all: Vec<usize> = (0..dim).collect();
        let y1 = 0;
        let eta1 = half;
        let rest = |skip: usize| all.iter().copied().filter(|&i| i != skip).collect::<Vec<_>>();
        let perp = |sign: Sign| {
            let skip = fast(n, sign)[0];
            (0..dim).filter(|&i| i != skip).collect::<Vec<_>>()
        };
        vec![
            ("V+ -> y1", self.leak(&fast(n, Sign::Plus), &[y1])),
            ("V- -> eta1", self.leak(&fast(n, Sign::Minus), &[eta1])),
            ("E+ -> y2..y(2n-1)", self.leak(&slow(n, Sign::Plus), &(1..half - 1).collect::<Vec<_>>())),
            ("E- -> eta2..eta(2n-1)", self.leak(&slow(n, Sign::Minus), &(half + 1..dim - 1).collect::<Vec<_>>())),
            ("X -> y2n", self.leak(&[0], &[half - 1])),
            ("d_u -> eta2n", self.leak(&[dilation_index(n)], &[dim - 1])),
            ("V+perp -> ker dy1", self.leak(&perp(Sign::Plus), &rest(y1))),
            ("V-perp -> ker deta1", self.leak(&perp(Sign::Minus), &rest(eta1))),
        ]
    }

    fn leak(&self, sources: &[usize], targets: &[usize]) -> f64 {
        sources
            .iter()
            .map(|&s| {
                let image = self.l.column(s);
                let outside: f64 = image
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !targets.contains(i))
                    .map(|(_, x)| x * x)
                    .sum();
                outside.sqrt() / image.norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_canonical(&self, c: &ChartCoords) -> DVector<f64> {
        &self.l * DVector::from_vec(c.to_vec())
    }

    pub fn from_canonical(&self, p: &DVector<f64>) -> ChartCoords {
        let c = &self.basis * p;
        ChartCoords::from_slice(c.as_slice())
    }

    /// `(y, eta)` coordinates of a nearby point.
    pub fn coordinates_of(&self, p: &CotangentPoint) -> Result<DVector<f64>> {
        Ok(self.to_canonical(&point_to_chart(&self.base, p)?))
    }
}

/// `{|y| + |eta| <= alpha, |w_1 - w_1^0| <= width}` with `w = eta` for the
/// unstable (`-`) rectangle and `w = y` for the stable (`+`) one. The norm
/// `|y| + |eta|` is the l1 norm of all `4n` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowRectangle {
    pub straighten: StraightenMap,
    pub alpha: f64,
    pub center: f64,
    pub sign: Sign,
    pub slab_width: f64,
}

impl SlowRectangle {
    /// The rectangle with slab width `alpha^2`.
    pub fn new(straighten: StraightenMap, alpha: f64, center: f64, sign: Sign) -> Result<Self> {
        Self::with_slab_width(straighten, alpha, center, sign, alpha * alpha)
    }

    pub fn with_slab_width(
        straighten: StraightenMap,
        alpha: f64,
        center: f64,
        sign: Sign,
        slab_width: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= CHART_RADIUS) {
            return Err(Error::Parameter(format!("alpha {alpha} outside (0, {CHART_RADIUS}]")));
        }
        if center.abs() > alpha {
            return Err(Error::Parameter(format!("|center| {} exceeds alpha {alpha}", center.abs())));
        }
        if slab_width.is_nan() || slab_width <= 0.0 {
            return Err(Error::Parameter(format!("slab width {slab_width} must be positive")));
        }
        Ok(Self { straighten, alpha, center, sign, slab_width })
    }

    pub fn base(&self) -> &CotangentPoint {
        &self.straighten.base
    }

    /// Coordinate index of the slab: `eta_1` for `-`, `y_1` for `+`.
    pub fn slab_index(&self) -> usize {
        match self.sign {
            Sign::Minus => self.straighten.dim() / 2,
            Sign::Plus => 0,
        }
    }

    /// Whether `(y, eta)` satisfies the defining inequalities up to `tol`.
    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        let k = self.slab_index();
        p.lp_norm(1) <= self.alpha + tol && (p[k] - self.center).abs() <= self.slab_width + tol
    }

    /// Deterministic `(y, eta)` samples: the center, the slab endpoints with
    /// the cross-polytope vertices of each, then the first `m` Halton points.
    /// The list for `m` is a prefix of the list for `m + 1`.
    pub fn canonical_samples(&self, m: usize) -> Result<Vec<DVector<f64>>> {
        if m < 2 {
            return Err(Error::Parameter(format!("sample count {m} must be at least 2")));
        }
        let dim = self.straighten.dim();
        let k = self.slab_index();
        let slab = |offset: f64| (self.center + offset).clamp(-self.alpha, self.alpha);
        let mut out = Vec::new();
        let mut center = DVector::zeros(dim);
        center[k] = self.center;
        out.push(center);
        for offset in [-self.slab_width, self.slab_width] {
            let w = slab(offset);
            let radius = self.alpha - w.abs();
            let mut p = DVector::zeros(dim);
            p[k] = w;
            out.push(p.clone());
            for i in (0..dim).filter(|&i| i != k) {
                for s in [-1.0, 1.0] {
                    let mut q = p.clone();
                    q[i] = s * radius;
                    out.push(q);
                }
            }
        }
        let primes = first_primes(dim);
        for index in 1..=m {
            let h: Vec<f64> = primes.iter().map(|&b| radical_inverse(index as u64, b)).collect();
            let w = slab((2.0 * h[0] - 1.0) * self.slab_width);
            let cube: Vec<f64> = h[1..].iter().map(|x| 2.0 * x - 1.0).collect();
            let rest = cube_to_cross_polytope(&cube, self.alpha - w.abs());
            let mut p = DVector::zeros(dim);
            p[k] = w;
            for (i, x) in (0..dim).filter(|&i| i != k).zip(rest) {
                p[i] = x;
            }
            out.push(p);
        }
        Ok(out)
    }
}

/// Maps `[-1, 1]^d` onto the l1 ball of radius `r` via `x |x|_inf / |x|_1`.
fn cube_to_cross_polytope(x: &[f64], r: f64) -> Vec<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let linf = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if l1 == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| r * v * linf / l1).collect()
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut scale = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * scale;
        index /= base;
        scale /= base as f64;
    }
    result
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut k = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= k).all(|&p| !k.is_multiple_of(p)) {
            primes.push(k);
        }
        k += 1;
    }
    primes
}

/// Sample points of the rectangle as cotangent points.
pub fn rectangle_samples(rect: &SlowRectangle, m: usize) -> Result<Vec<CotangentPoint>> {
    rect.canonical_samples(m)?
        .iter()
        .map(|p| chart_to_point(rect.base(), &rect.straighten.from_canonical(p)))
        .collect()
}

/// Largest pairwise distance of the flowed samples. The unstable rectangle
/// flows forward by `t`, the stable one backward.
///
/// Points are left-translated by the inverse lift of the flowed center
/// first; the true distance is invariant under this, and the ambient proxy
/// stays accurate near the identity.
pub fn propagated_diameter(rect: &SlowRectangle, t: f64, m: usize) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Parameter(format!("propagation time {t} must be nonnegative")));
    }
    let time = match rect.sign {
        Sign::Minus => t,
        Sign::Plus => -t,
    };
    let samples = rectangle_samples(rect, m)?;
    let flowed: Vec<CotangentPoint> = samples.iter().map(|p| p.flow(time)).collect();
    let recenter = flowed[0].q.lift().inverse();
    let local: Vec<CotangentPoint> = flowed
        .iter()
        .map(|p| CotangentPoint {
            q: SphereBundlePoint::from_lift(recenter.mul(p.q.lift())),
            tau: p.tau,
        })
        .collect();
    let mut diameter = 0.0_f64;
    for (i, a) in local.iter().enumerate() {
        for b in &local[i + 1..] {
            diameter = diameter.max(cotangent_distance(a, b)?);
        }
    }
    Ok(diameter)
}

/// One row of the rectangle experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleRow {
    pub alpha: f64,
    pub sign: Sign,
    pub t: f64,
    pub m: usize,
    pub diameter: f64,
    pub diameter_over_alpha_et: f64,
}

/// Slab width used in the rectangle experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slab {
    /// Width `alpha^2`, the slow rectangle.
    Thin,
    /// Width `alpha`, the control.
    Wide,
}

/// Diameters for `t = 0, step, 2 step, ..` up to `log(1/alpha)`.
pub fn rectangle_series(
    straighten: &StraightenMap,
    alpha: f64,
    sign: Sign,
    slab: Slab,
    t_step: f64,
    m: usize,
) -> Result<Vec<RectangleRow>> {
    let width = match slab {
        Slab::Thin => alpha * alpha,
        Slab::Wide => alpha,
    };
    let rect = SlowRectangle::with_slab_width(straighten.clone(), alpha, 0.0, sign, width)?;
    let t_max = (1.0 / alpha).ln();
    let steps = (t_max / t_step + 1e-9).floor() as usize;
    (0..=steps)
        .map(|k| {
            let t = k as f64 * t_step;
            let diameter = propagated_diameter(&rect, t, m)?;
            Ok(RectangleRow {
                alpha,
                sign,
                t,
                m,
                diameter,
                diameter_over_alpha_et: diameter / (alpha * t.exp()),
            })
        })
        .collect()
}

/// Single constant `C` for `diameter <= C alpha e^t`: the geometric mean of
/// the ratios, with the largest absolute log deviation as fit residual.
pub fn fit_rectangle_constant(rows: &[RectangleRow]) -> (f64, f64) {
    let logs: Vec<f64> = rows.iter().map(|r| r.diameter_over_alpha_et.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len().max(1) as f64;
    let residual = logs.iter().fold(0.0_f64, |a, l| a.max((l - mean).abs()));
    (mean.exp(), residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::random_algebra_element;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dim(n: usize) -> SpaceDim {
        SpaceDim::new(n).unwrap()
    }

    fn random_base(n: usize, rng: &mut ChaCha8Rng) -> CotangentPoint {
        let g = random_algebra_element(dim(n), 0.5, rng).exp();
        CotangentPoint::new(SphereBundlePoint::from_lift(g), rng.gen_range(0.5..2.0)).unwrap()
    }

    #[test]
    fn chart_origin_and_flow_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = random_base(2, &mut rng);
        let p = chart_to_point(&base, &ChartCoords::zeros(dim(2))).unwrap();
        assert_eq!(p, base);
        let mut c = ChartCoords::zeros(dim(2));
        c.s[0] = 0.3;
        let p = chart_to_point(&base, &c).unwrap();
        let flowed = base.flow(0.3);
        assert!(cotangent_distance(&p, &flowed).unwrap() < 1e-14);
        assert_eq!(p.tau(), base.tau());
    }

    #[test]
    fn chart_radius_enforced() {
        let base = CotangentPoint::base_point(dim(2));
        let mut c = ChartCoords::zeros(dim(2));
        c.u = 0.6;
        assert!(matches!(chart_to_point(&base, &c), Err(Error::ChartRadius { .. })));
    }

    #[test]
    fn chart_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 3] {
            let base = random_base(n, &mut rng);
            for _ in 0..5 {
                let raw: Vec<f64> = (0..chart_dim(dim(n))).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                let scaled: Vec<f64> = raw.iter().map(|x| x * 0.05 / norm).collect();
                let c = ChartCoords::from_slice(&scaled);
                let p = chart_to_point(&base, &c).unwrap();
                let back = point_to_chart(&base, &p).unwrap();
                let err = back.to_vec().iter().zip(c.to_vec()).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
                assert!(err < 1e-9, "n={n} err={err}");
            }
        }
    }

    #[test]
    fn fd_form_matches_bracket_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = random_base(2, &mut rng);
        let form = symplectic_form_at(&base, 1e-4).unwrap();
        let exact = exact_symplectic_form(&base);
        assert!((&form.omega - &exact).amax() < 1e-6);
        assert!(form.antisymmetry_residual() < 1e-9);
        let tau = base.tau();
        assert!((form.alpha[0] - tau).abs() < 1e-7);
        let u = dilation_index(dim(2));
        assert!((form.omega[(u, 0)] - tau).abs() < 1e-7);
    }

    #[test]
    fn pairings_vanish_and_lagrangian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = random_base(3, &mut rng);
        let form = symplectic_form_at(&base, 1e-4).unwrap();
        for family in PairingFamily::ALL {
            assert!(pairing_residual(&form, family) < 1e-6, "{}", family.name());
        }
        let (lu, ls) = lagrangian_residuals(&form);
        assert!(lu < 1e-6 && ls < 1e-6);
    }

    #[test]
    fn second_order_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let base = random_base(2, &mut rng);
        let report = form_convergence(&base, 1e-3);
        assert!((3.0..=5.0).contains(&report.ratio()), "ratio {}", report.ratio());
    }

    #[test]
    fn fd_step_range_checked() {
        let base = CotangentPoint::base_point(dim(2));
        assert!(symplectic_form_at(&base, 1e-2).is_err());
        assert!(symplectic_form_at(&base, 1e-7).is_err());
    }

    #[test]
    fn straighten_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3] {
            let base = random_base(n, &mut rng);
            let map = straighten(&base).unwrap();
            let exact = exact_symplectic_form(&base);
            assert!(map.symplectic_residual(&exact) < 1e-8, "{}", map.symplectic_residual(&exact));
            assert!(map.basis_residual(&exact) < 1e-8);
            for (name, r) in map.image_residuals() {
                assert!(r < 1e-7, "{name}: {r}");
            }
        }
    }

    #[test]
    fn rectangle_samples_satisfy_inequalities() {
        let base = CotangentPoint::base_point(dim(2));
        let map = straighten(&base).unwrap();
        let rect = SlowRectangle::new(map.clone(), 0.05, 0.01, Sign::Minus).unwrap();
        let canonical = rect.canonical_samples(16).unwrap();
        assert_eq!(canonical[0][rect.slab_index()], 0.01);
        let points = rectangle_samples(&rect, 16).unwrap();
        assert_eq!(points[0], chart_to_point(&base, &map.from_canonical(&canonical[0])).unwrap());
        for p in &points {
            let coords = map.coordinates_of(p).unwrap();
            assert!(rect.contains(&coords, 1e-8));
        }
        let two = rect.canonical_samples(2).unwrap();
        let k = rect.slab_index();
        let spread = two.iter().map(|p| p[k]).fold(f64::MIN, f64::max) - two.iter().map(|p| p[k]).fold(f64::MAX, f64::min);
        assert!(spread <= 2.0 * 0.05 * 0.05 + 1e-15);
    }

    #[test]
    fn rectangle_parameters_checked() {
        let map = straighten(&CotangentPoint::base_point(dim(2))).unwrap();
        assert!(SlowRectangle::new(map.clone(), 0.6, 0.0, Sign::Minus).is_err());
        assert!(SlowRectangle::new(map.clone(), 0.1, 0.2, Sign::Minus).is_err());
        let rect = SlowRectangle::new(map, 0.1, 0.0, Sign::Minus).unwrap();
        assert!(rect.canonical_samples(1).is_err());
        assert!(propagated_diameter(&rect, -1.0, 4).is_err());
    }

    #[test]
    fn diameter_monotone_in_m() {
        let map = straighten(&CotangentPoint::base_point(dim(2))).unwrap();
        let rect = SlowRectangle::new(map, 0.1, 0.0, Sign::Minus).unwrap();
        let d: Vec<f64> = [2, 8, 32].iter().map(|&m| propagated_diameter(&rect, 1.5, m).unwrap()).collect();
        assert!(d[0] <= d[1] && d[1] <= d[2]);
        let d0 = propagated_diameter(&rect, 0.0, 8).unwrap();
        assert!(d0 < 10.0 * 0.1);
    }

    #[test]
    fn canonical_matrix_shape() {
        let j = canonical_matrix(4);
        assert_eq!(j[(0, 2)], -1.0);
        assert_eq!(j[(2, 0)], 1.0);
        assert!((&j * &j + DMatrix::identity(4, 4)).amax() == 0.0);
    }
}
