//! Complex Minkowski space `C^{n,1}` and the Lie group `SU(n,1)`.
//!
//! Everything here is exact matrix arithmetic in double precision. The
//! Hermitian form has signature `(-, +, ..., +)`, so `J = diag(-1, 1, ..., 1)`
//! and a matrix `M` lies in `su(n,1)` iff `M* J + J M = 0` and `tr M = 0`.

mod algebra;
mod group;

pub use algebra::{
    bracket, frame_basis, full_basis, kappa_e, membership_residual, random_algebra_element, stun_matrix_action, BasisLabel,
    LieAlgebraElement, ALGEBRA_TOL,
};
pub use group::{
    expm, in_x_w_u, nilpotent_exp, subgroup_element, w_k_element, GroupElement, Subgroup,
    GROUP_TOL,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{CMat, CVec, Error, Result, C64};

/// Complex dimension `n` of `CH^n`; always at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SpaceDim(usize);

impl SpaceDim {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Size of the ambient space `C^{n,1}`, i.e. `n + 1`.
    pub fn ambient(self) -> usize {
        self.0 + 1
    }

    /// Number of slow directions in each of `E^+`, `E^-` (real dimension `2n - 2`).
    pub fn slow_dim(self) -> usize {
        2 * (self.0 - 1)
    }

    /// Dimension of the sphere bundle, `4n - 1`.
    pub fn frame_len(self) -> usize {
        4 * self.0 - 1
    }

    /// Real dimension of `su(n,1)`, `n^2 + 2n`.
    pub fn algebra_dim(self) -> usize {
        self.0 * self.0 + 2 * self.0
    }
}

impl TryFrom<usize> for SpaceDim {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<SpaceDim> for usize {
    fn from(n: SpaceDim) -> usize {
        n.0
    }
}

/// The sign selecting the stable (`+`) or unstable (`-`) family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "p" => Ok(Sign::Plus),
            "-" | "minus" | "m" => Ok(Sign::Minus),
            other => Err(Error::Parameter(format!("unknown sign {other:?}"))),
        }
    }
}

/// The signature matrix `J = diag(-1, 1, ..., 1)` of size `n + 1`.
pub fn signature(n: SpaceDim) -> CMat {
    let mut j = CMat::identity(n.ambient(), n.ambient());
    j[(0, 0)] = C64::new(-1.0, 0.0);
    j
}

/// A vector in `C^{n,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkVector(#[serde(with = "crate::json::cvec")] CVec);

impl MinkVector {
    pub fn new(entries: CVec) -> Result<Self> {
        if entries.len() < 3 {
            return Err(Error::InvalidDimension(entries.len().saturating_sub(1)));
        }
        Ok(Self(entries))
    }

    pub fn from_slice(entries: &[C64]) -> Result<Self> {
        Self::new(CVec::from_column_slice(entries))
    }

    /// Canonical basis vector `e_k` of `C^{n,1}`.
    pub fn basis(n: SpaceDim, k: usize) -> Self {
        let mut v = CVec::zeros(n.ambient());
        v[k] = C64::new(1.0, 0.0);
        Self(v)
    }

    /// The vector `(0, 0, w_2, ..., w_n)`.
    pub fn from_slow(w: &SlowVector) -> Self {
        let mut v = CVec::zeros(w.len() + 2);
        v.rows_mut(2, w.len()).copy_from(w.as_vec());
        Self(v)
    }

    pub fn entries(&self) -> &CVec {
        &self.0
    }

    pub fn into_inner(self) -> CVec {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(&self.0 - &other.0))
    }

    /// Euclidean (not Minkowski) norm of the coordinates.
    pub fn euclidean_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// A vector `w in C^{n-1}`, the argument of `kappa_E^{+-}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowVector(#[serde(with = "crate::json::cvec")] CVec);

impl SlowVector {
    pub fn new(w: CVec) -> Self {
        Self(w)
    }

    pub fn from_slice(w: &[C64]) -> Self {
        Self(CVec::from_column_slice(w))
    }

    pub fn zeros(n: SpaceDim) -> Self {
        Self(CVec::zeros(n.get() - 1))
    }

    pub fn random<R: Rng + ?Sized>(n: SpaceDim, scale: f64, rng: &mut R) -> Self {
        Self(CVec::from_fn(n.get() - 1, |_, _| {
            C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale))
        }))
    }

    pub fn as_vec(&self) -> &CVec {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Standard Hermitian product on `C^{n-1}`, linear in the first slot.
    pub fn hermitian(&self, other: &Self) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b.conj()).sum()
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// The sesquilinear product `<z, w> = -z_0 conj(w_0) + sum_j z_j conj(w_j)`.
pub fn minkowski_inner(z: &MinkVector, w: &MinkVector) -> Result<C64> {
    check_len(z.len(), w.len())?;
    Ok(inner_raw(z.entries(), w.entries()))
}

pub(crate) fn inner_raw(z: &CVec, w: &CVec) -> C64 {
    let tail: C64 = z.iter().zip(w.iter()).skip(1).map(|(a, b)| a * b.conj()).sum();
    tail - z[0] * w[0].conj()
}

/// Largest absolute entry of a complex matrix.
pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n2() -> SpaceDim {
        SpaceDim::new(2).unwrap()
    }

    #[test]
    fn space_dim_rejects_one() {
        assert_eq!(SpaceDim::new(1), Err(Error::InvalidDimension(1)));
        assert_eq!(SpaceDim::new(3).unwrap().frame_len(), 11);
        assert_eq!(SpaceDim::new(3).unwrap().algebra_dim(), 15);
    }

    #[test]
    fn inner_on_basis_vectors() {
        let e0 = MinkVector::basis(n2(), 0);
        let e1 = MinkVector::basis(n2(), 1);
        assert_eq!(minkowski_inner(&e0, &e0).unwrap(), C64::new(-1.0, 0.0));
        assert_eq!(minkowski_inner(&e1, &e1).unwrap(), C64::new(1.0, 0.0));
        let null = e0.add(&e1).unwrap();
        assert_eq!(minkowski_inner(&null, &null).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn inner_is_sesquilinear() {
        let z = MinkVector::from_slice(&[C64::new(1.0, 2.0), C64::new(0.5, -1.0), C64::new(0.0, 3.0)])
            .unwrap();
        let w = MinkVector::from_slice(&[C64::new(-2.0, 1.0), C64::new(1.0, 1.0), C64::new(2.0, 0.0)])
            .unwrap();
        let c = C64::new(0.3, -0.7);
        let lhs = minkowski_inner(&z.scale(c), &w).unwrap();
        assert!((lhs - c * minkowski_inner(&z, &w).unwrap()).norm() < 1e-14);
        let rhs = minkowski_inner(&z, &w.scale(c)).unwrap();
        assert!((rhs - c.conj() * minkowski_inner(&z, &w).unwrap()).norm() < 1e-14);
        let swapped = minkowski_inner(&w, &z).unwrap();
        assert!((swapped - minkowski_inner(&z, &w).unwrap().conj()).norm() < 1e-14);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let a = MinkVector::basis(n2(), 0);
        let b = MinkVector::basis(SpaceDim::new(3).unwrap(), 0);
        assert_eq!(
            minkowski_inner(&a, &b),
            Err(Error::DimensionMismatch { expected: 3, found: 4 })
        );
    }
}
