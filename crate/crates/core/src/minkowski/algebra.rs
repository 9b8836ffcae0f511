use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{inner_raw, max_abs, signature, GroupElement, MinkVector, Sign, SlowVector, SpaceDim};
use crate::{CMat, CVec, Error, Result, C64};

/// Default membership tolerance for `su(n,1)`.
pub const ALGEBRA_TOL: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Names of the standard basis elements of `su(n,1)`.
///
/// Indices `j, k` run over `2..=n`, matching the coordinates of `C^{n,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    X,
    V(Sign),
    W(Sign, usize),
    Z(Sign, usize),
    R(usize, usize),
    RPrime(usize, usize),
    Generic,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisLabel::X => write!(f, "X"),
            BasisLabel::V(s) => write!(f, "V{}", s.symbol()),
            BasisLabel::W(s, j) => write!(f, "W{}_{j}", s.symbol()),
            BasisLabel::Z(s, j) => write!(f, "Z{}_{j}", s.symbol()),
            BasisLabel::R(j, k) => write!(f, "R_{j}{k}"),
            BasisLabel::RPrime(j, k) => write!(f, "R'_{j}{k}"),
            BasisLabel::Generic => write!(f, "generic"),
        }
    }
}

impl BasisLabel {
    fn validate(self, n: SpaceDim) -> Result<()> {
        let n = n.get();
        let slow = |j: usize| (2..=n).contains(&j);
        let ok = match self {
            BasisLabel::X | BasisLabel::V(_) => true,
            BasisLabel::W(_, j) | BasisLabel::Z(_, j) => slow(j),
            BasisLabel::R(j, k) => slow(j) && slow(k) && j < k,
            BasisLabel::RPrime(j, k) => slow(j) && slow(k) && j <= k,
            BasisLabel::Generic => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBasis(format!("{self} for n = {n}")))
        }
    }
}

/// The ordered basis of `su(n,1)`: the sphere-bundle frame
/// `X, V-, V+, W-_j, Z-_j, W+_j, Z+_j` followed by the rotation algebra
/// `R_jk (j < k)` and `R'_jk (j <= k)`.
pub fn full_basis(n: SpaceDim) -> Vec<BasisLabel> {
    let nn = n.get();
    let mut out = frame_basis(n);
    for j in 2..=nn {
        for k in j + 1..=nn {
            out.push(BasisLabel::R(j, k));
        }
    }
    for j in 2..=nn {
        for k in j..=nn {
            out.push(BasisLabel::RPrime(j, k));
        }
    }
    out
}

/// The `4n - 1` frame labels, in the order used by frame coefficients.
pub fn frame_basis(n: SpaceDim) -> Vec<BasisLabel> {
    let nn = n.get();
    let mut out = vec![BasisLabel::X, BasisLabel::V(Sign::Minus), BasisLabel::V(Sign::Plus)];
    for sign in [Sign::Minus, Sign::Plus] {
        out.extend((2..=nn).map(|j| BasisLabel::W(sign, j)));
        out.extend((2..=nn).map(|j| BasisLabel::Z(sign, j)));
    }
    out
}

/// An element of `su(n,1)`. The label is metadata only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct LieAlgebraElement {
    matrix: CMat,
    label: Option<BasisLabel>,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    #[serde(with = "crate::json::cmat")]
    matrix: CMat,
    #[serde(default)]
    label: Option<BasisLabel>,
}

impl TryFrom<RawElement> for LieAlgebraElement {
    type Error = Error;
    fn try_from(raw: RawElement) -> Result<Self> {
        let mut el = Self::new(raw.matrix)?;
        el.label = raw.label;
        Ok(el)
    }
}

impl From<LieAlgebraElement> for RawElement {
    fn from(el: LieAlgebraElement) -> Self {
        RawElement { matrix: el.matrix, label: el.label }
    }
}

impl LieAlgebraElement {
    /// Validates membership with the default tolerance.
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerance(matrix, ALGEBRA_TOL)
    }

    pub fn with_tolerance(matrix: CMat, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 3 {
            return Err(Error::InvalidDimension(matrix.nrows().saturating_sub(1)));
        }
        let residual = membership_residual(&matrix);
        if residual > tol {
            return Err(Error::NotInAlgebra { residual, tolerance: tol });
        }
        Ok(Self { matrix, label: None })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat) -> Self {
        Self { matrix, label: None }
    }

    pub fn zero(n: SpaceDim) -> Self {
        Self::from_matrix_unchecked(CMat::zeros(n.ambient(), n.ambient()))
    }

    /// The standard basis element with the given label.
    pub fn basis(label: BasisLabel, n: SpaceDim) -> Result<Self> {
        label.validate(n)?;
        let size = n.ambient();
        let mut m = CMat::zeros(size, size);
        match label {
            BasisLabel::X => {
                m[(0, 1)] = ONE;
                m[(1, 0)] = ONE;
            }
            BasisLabel::V(s) => {
                let s = s.value();
                m[(0, 0)] = I;
                m[(0, 1)] = -I * s;
                m[(1, 0)] = I * s;
                m[(1, 1)] = -I;
            }
            BasisLabel::W(s, j) => {
                let s = s.value();
                m[(0, j)] = ONE;
                m[(1, j)] = ONE * s;
                m[(j, 0)] = ONE;
                m[(j, 1)] = -ONE * s;
            }
            BasisLabel::Z(s, j) => {
                let s = s.value();
                m[(0, j)] = I;
                m[(1, j)] = I * s;
                m[(j, 0)] = -I;
                m[(j, 1)] = I * s;
            }
            BasisLabel::R(j, k) => {
                m[(j, k)] = ONE;
                m[(k, j)] = -ONE;
            }
            BasisLabel::RPrime(j, k) => {
                m[(j, k)] += I;
                m[(k, j)] += I;
                if j == k {
                    m[(0, 0)] = -I;
                    m[(1, 1)] = -I;
                }
            }
            BasisLabel::Generic => unreachable!("rejected by validate"),
        }
        Ok(Self { matrix: m, label: Some(label) })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn label(&self) -> Option<BasisLabel> {
        self.label
    }

    pub fn dim(&self) -> SpaceDim {
        SpaceDim(self.matrix.nrows() - 1)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_matrix_unchecked(&self.matrix * C64::new(c, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self::from_matrix_unchecked(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self::from_matrix_unchecked(&self.matrix - &other.matrix))
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.matrix.nrows() != other.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: other.matrix.nrows(),
            });
        }
        Ok(())
    }

    /// Real-linear combination `sum_i c_i B_i` over a list of labels.
    pub fn combination(n: SpaceDim, labels: &[BasisLabel], coeffs: &[f64]) -> Result<Self> {
        if labels.len() != coeffs.len() {
            return Err(Error::LengthMismatch { expected: labels.len(), found: coeffs.len() });
        }
        let mut m = CMat::zeros(n.ambient(), n.ambient());
        for (&label, &c) in labels.iter().zip(coeffs) {
            if c != 0.0 {
                m += Self::basis(label, n)?.matrix * C64::new(c, 0.0);
            }
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Coefficients in [`full_basis`] order, read off the matrix entries.
    pub fn coefficients(&self) -> Vec<f64> {
        let m = &self.matrix;
        let n = self.dim().get();
        let x = m[(1, 0)].re;
        let diff = m[(1, 0)].im; // a_+ - a_-
        let sum = (m[(0, 0)] - m[(1, 1)]).im / 2.0; // a_+ + a_-
        let mut out = vec![x, (sum - diff) / 2.0, (sum + diff) / 2.0];
        let plus = |j: usize| (m[(0, j)] + m[(1, j)]) / 2.0;
        let minus = |j: usize| (m[(0, j)] - m[(1, j)]) / 2.0;
        out.extend((2..=n).map(|j| minus(j).re));
        out.extend((2..=n).map(|j| minus(j).im));
        out.extend((2..=n).map(|j| plus(j).re));
        out.extend((2..=n).map(|j| plus(j).im));
        for j in 2..=n {
            for k in j + 1..=n {
                out.push(m[(j, k)].re);
            }
        }
        for j in 2..=n {
            out.push(m[(j, j)].im / 2.0);
            for k in j + 1..=n {
                out.push(m[(j, k)].im);
            }
        }
        // R'_jk with j fixed were pushed as (jj, j j+1, ...), which matches
        // full_basis ordering (j <= k, lexicographic).
        out
    }

    /// Coefficients along the `4n - 1` frame directions.
    pub fn frame_coefficients(&self) -> Vec<f64> {
        let mut c = self.coefficients();
        c.truncate(self.dim().frame_len());
        c
    }

    pub fn from_coefficients(n: SpaceDim, coeffs: &[f64]) -> Result<Self> {
        Self::combination(n, &full_basis(n), coeffs)
    }

    /// Build from frame coefficients (rotation part zero).
    pub fn from_frame(n: SpaceDim, coeffs: &[f64]) -> Result<Self> {
        Self::combination(n, &frame_basis(n), coeffs)
    }

    /// Matrix exponential via scaling and squaring.
    pub fn exp(&self) -> GroupElement {
        GroupElement::from_matrix_unchecked(super::expm(&self.matrix))
    }
}

/// `max(|M* J + J M|, |tr M|)`.
pub fn membership_residual(m: &CMat) -> f64 {
    let n = SpaceDim(m.nrows() - 1);
    let j = signature(n);
    let form = m.adjoint() * &j + &j * m;
    max_abs(&form).max(m.trace().norm())
}

/// The commutator `[A, B] = AB - BA`.
pub fn bracket(a: &LieAlgebraElement, b: &LieAlgebraElement) -> Result<LieAlgebraElement> {
    a.same_dim(b)?;
    Ok(LieAlgebraElement::from_matrix_unchecked(
        &a.matrix * &b.matrix - &b.matrix * &a.matrix,
    ))
}

/// `kappa_E^{+-}(w) = sum_j Re(w_j) W^{+-}_j - Im(w_j) Z^{+-}_j`.
pub fn kappa_e(sign: Sign, w: &SlowVector) -> LieAlgebraElement {
    let n = SpaceDim(w.len() + 1);
    let size = n.ambient();
    let s = sign.value();
    let mut m = CMat::zeros(size, size);
    for (idx, wj) in w.as_vec().iter().enumerate() {
        let j = idx + 2;
        // Re(w) W + (-Im w) Z, entry by entry.
        let (a, b) = (wj.re, -wj.im);
        m[(0, j)] = C64::new(a, b);
        m[(1, j)] = C64::new(a, b) * s;
        m[(j, 0)] = C64::new(a, -b);
        m[(j, 1)] = C64::new(-a, b) * s;
    }
    LieAlgebraElement::from_matrix_unchecked(m)
}

/// Closed form of `(c V^{+-} + kappa^{+-}(w)) z` using only the Minkowski product.
pub fn stun_matrix_action(c: f64, sign: Sign, w: &SlowVector, z: &MinkVector) -> Result<MinkVector> {
    let n = SpaceDim(w.len() + 1);
    if z.len() != n.ambient() {
        return Err(Error::DimensionMismatch { expected: n.ambient(), found: z.len() });
    }
    let mut null = CVec::zeros(n.ambient());
    null[0] = ONE;
    null[1] = C64::new(sign.value(), 0.0);
    let slow = MinkVector::from_slow(w).into_inner();
    let zv = z.entries();
    let along_null = inner_raw(zv, &null);
    let fast = &null * (-I * c * along_null);
    let slow_part = &null * inner_raw(zv, &slow) - &slow * along_null;
    MinkVector::new(fast + slow_part)
}

/// A random element with coefficients uniform in `[-scale, scale]` on the full basis.
pub fn random_algebra_element<R: Rng + ?Sized>(
    n: SpaceDim,
    scale: f64,
    rng: &mut R,
) -> LieAlgebraElement {
    let labels = full_basis(n);
    let coeffs: Vec<f64> = labels.iter().map(|_| rng.gen_range(-scale..=scale)).collect();
    LieAlgebraElement::combination(n, &labels, &coeffs).expect("labels valid by construction")
}
