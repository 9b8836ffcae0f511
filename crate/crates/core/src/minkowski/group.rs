use serde::{Deserialize, Serialize};

use super::{kappa_e, max_abs, signature, LieAlgebraElement, MinkVector, Sign, SlowVector, SpaceDim};
use crate::{CMat, CVec, Error, Result, C64};

/// Default membership tolerance for `SU(n,1)`.
pub const GROUP_TOL: f64 = 1e-10;

/// An element of `G = SU(n,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGroup", into = "RawGroup")]
pub struct GroupElement {
    matrix: CMat,
}

#[derive(Serialize, Deserialize)]
struct RawGroup {
    #[serde(with = "crate::json::cmat")]
    matrix: CMat,
}

impl TryFrom<RawGroup> for GroupElement {
    type Error = Error;
    fn try_from(raw: RawGroup) -> Result<Self> {
        Self::new(raw.matrix)
    }
}

impl From<GroupElement> for RawGroup {
    fn from(g: GroupElement) -> Self {
        RawGroup { matrix: g.matrix }
    }
}

impl GroupElement {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerance(matrix, GROUP_TOL)
    }

    pub fn with_tolerance(matrix: CMat, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 3 {
            return Err(Error::InvalidDimension(matrix.nrows().saturating_sub(1)));
        }
        let residual = group_residual(&matrix);
        if residual > tol {
            return Err(Error::NotInGroup { residual, tolerance: tol });
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat) -> Self {
        Self { matrix }
    }

    pub fn identity(n: SpaceDim) -> Self {
        Self { matrix: CMat::identity(n.ambient(), n.ambient()) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> SpaceDim {
        SpaceDim(self.matrix.nrows() - 1)
    }

    /// `max(|M* J M - J|, |det M - 1|)`.
    pub fn residual(&self) -> f64 {
        group_residual(&self.matrix)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { matrix: &self.matrix * &other.matrix }
    }

    /// Inverse through the form: `M^{-1} = J M* J`.
    pub fn inverse(&self) -> Self {
        let j = signature(self.dim());
        Self { matrix: &j * self.matrix.adjoint() * &j }
    }

    pub fn apply(&self, z: &MinkVector) -> Result<MinkVector> {
        if z.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: self.matrix.nrows(), found: z.len() });
        }
        MinkVector::new(&self.matrix * z.entries())
    }

    /// Column `k`, i.e. the image of `e_k`.
    pub fn column(&self, k: usize) -> CVec {
        self.matrix.column(k).into_owned()
    }

    /// `g Y g^{-1}` for `Y` in the Lie algebra.
    pub fn adjoint_action(&self, y: &LieAlgebraElement) -> LieAlgebraElement {
        let m = &self.matrix * y.matrix() * self.inverse().matrix;
        LieAlgebraElement::from_matrix_unchecked(m)
    }
}

fn group_residual(m: &CMat) -> f64 {
    let j = signature(SpaceDim(m.nrows() - 1));
    let form = m.adjoint() * &j * m - &j;
    max_abs(&form).max((m.determinant() - C64::new(1.0, 0.0)).norm())
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled so its 1-norm is at most 1/4; 24 Taylor terms then
/// leave a truncation error far below `1e-16` relative.
pub fn expm(a: &CMat) -> CMat {
    let size = a.nrows();
    let norm1 = (0..size)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.25 { (norm1 / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = a * C64::new(0.5_f64.powi(squarings as i32), 0.0);

    let mut result = CMat::identity(size, size);
    let mut term = CMat::identity(size, size);
    for k in 1..=24 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(c V^{+-} + kappa^{+-}(w))` through the exact identity `N^3 = 0`.
pub fn nilpotent_exp(c: f64, sign: Sign, w: &SlowVector) -> GroupElement {
    let n = SpaceDim(w.len() + 1);
    let v = LieAlgebraElement::basis(super::BasisLabel::V(sign), n).expect("V is always valid");
    let nil = v.matrix() * C64::new(c, 0.0) + kappa_e(sign, w).matrix();
    let sq = &nil * &nil;
    let m = CMat::identity(n.ambient(), n.ambient()) + &nil + sq * C64::new(0.5, 0.0);
    GroupElement::from_matrix_unchecked(m)
}

/// Parameters for the one-parameter and compact subgroups.
#[derive(Debug, Clone, PartialEq)]
pub enum Subgroup {
    /// `exp(s V^+)`.
    UPlus(f64),
    /// `exp(s V^-)`.
    UMinus(f64),
    /// `exp(t X)`.
    A(f64),
    /// `diag((det B)^{-1}, B)` for `B` in `U(n)`.
    K(CMat),
    /// `diag(e^{i theta}, e^{i theta}, B)` for `B` in `U(n-1)` with `det B = e^{-2 i theta}`.
    R(f64, CMat),
}

fn unitary_residual(b: &CMat) -> f64 {
    let size = b.nrows();
    max_abs(&(b.adjoint() * b - CMat::identity(size, size)))
}

/// Closed-form matrices of `U^{+-}`, `A`, `K`, `R` inside `SU(n,1)`.
pub fn subgroup_element(kind: &Subgroup, n: SpaceDim) -> Result<GroupElement> {
    let size = n.ambient();
    let mut m = CMat::identity(size, size);
    match kind {
        Subgroup::UPlus(s) | Subgroup::UMinus(s) => {
            let sign = if matches!(kind, Subgroup::UPlus(_)) { 1.0 } else { -1.0 };
            let is = C64::new(0.0, *s);
            m[(0, 0)] = C64::new(1.0, 0.0) + is;
            m[(0, 1)] = -is * sign;
            m[(1, 0)] = is * sign;
            m[(1, 1)] = C64::new(1.0, 0.0) - is;
        }
        Subgroup::A(t) => {
            let (ch, sh) = (t.cosh(), t.sinh());
            m[(0, 0)] = C64::new(ch, 0.0);
            m[(0, 1)] = C64::new(sh, 0.0);
            m[(1, 0)] = C64::new(sh, 0.0);
            m[(1, 1)] = C64::new(ch, 0.0);
        }
        Subgroup::K(b) => {
            check_block(b, n.get())?;
            let res = unitary_residual(b);
            if res > GROUP_TOL {
                return Err(Error::Parameter(format!("K block is not unitary (residual {res:.3e})")));
            }
            m[(0, 0)] = C64::new(1.0, 0.0) / b.determinant();
            m.view_mut((1, 1), (n.get(), n.get())).copy_from(b);
        }
        Subgroup::R(theta, b) => {
            check_block(b, n.get() - 1)?;
            let res = unitary_residual(b);
            if res > GROUP_TOL {
                return Err(Error::Parameter(format!("R block is not unitary (residual {res:.3e})")));
            }
            let det_gap = (b.determinant() - C64::from_polar(1.0, -2.0 * theta)).norm();
            if det_gap > GROUP_TOL {
                return Err(Error::Parameter(format!(
                    "R block needs det B = exp(-2i theta); off by {det_gap:.3e}"
                )));
            }
            let phase = C64::from_polar(1.0, *theta);
            m[(0, 0)] = phase;
            m[(1, 1)] = phase;
            m.view_mut((2, 2), (n.get() - 1, n.get() - 1)).copy_from(b);
        }
    }
    Ok(GroupElement::from_matrix_unchecked(m))
}

fn check_block(b: &CMat, expected: usize) -> Result<()> {
    if b.nrows() != expected || b.ncols() != expected {
        return Err(Error::DimensionMismatch { expected, found: b.nrows() });
    }
    Ok(())
}

/// Embed `B in SU(k,1)` in the upper-left corner of `SU(n,1)` (the standard subgroup `W_k`).
pub fn w_k_element(n: SpaceDim, block: &CMat) -> Result<GroupElement> {
    let k1 = block.nrows();
    if k1 < 2 || k1 > n.ambient() || !block.is_square() {
        return Err(Error::Parameter(format!("W_k block of size {k1} does not fit n = {}", n.get())));
    }
    let mut j = CMat::identity(k1, k1);
    j[(0, 0)] = C64::new(-1.0, 0.0);
    let res = max_abs(&(block.adjoint() * &j * block - &j))
        .max((block.determinant() - C64::new(1.0, 0.0)).norm());
    if res > GROUP_TOL {
        return Err(Error::NotInGroup { residual: res, tolerance: GROUP_TOL });
    }
    let mut m = CMat::identity(n.ambient(), n.ambient());
    m.view_mut((0, 0), (k1, k1)).copy_from(block);
    Ok(GroupElement::from_matrix_unchecked(m))
}

/// Membership in `X(W_l, U^+)`: whether `B (e_0 + e_1)` lies in `C^{l,1} + 0`.
pub fn in_x_w_u(b: &GroupElement, l: usize) -> Result<bool> {
    let n = b.dim().get();
    if !(1..=n).contains(&l) {
        return Err(Error::Parameter(format!("l = {l} must lie in 1..={n}")));
    }
    let null = b.column(0) + b.column(1);
    Ok(null.iter().skip(l + 1).all(|z| z.norm() <= GROUP_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{random_algebra_element, BasisLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dim(n: usize) -> SpaceDim {
        SpaceDim::new(n).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn a_subgroup_display() {
        let t = 0.7_f64;
        let a = subgroup_element(&Subgroup::A(t), dim(2)).unwrap();
        let z = c(0.0, 0.0);
        let expected = CMat::from_row_slice(
            3,
            3,
            &[c(t.cosh(), 0.0), c(t.sinh(), 0.0), z, c(t.sinh(), 0.0), c(t.cosh(), 0.0), z, z, z, c(1.0, 0.0)],
        );
        assert_eq!(a.matrix(), &expected);
        assert_eq!(subgroup_element(&Subgroup::A(0.0), dim(2)).unwrap(), GroupElement::identity(dim(2)));
    }

    #[test]
    fn u_plus_display_and_exponential() {
        let s = 0.4;
        let u = subgroup_element(&Subgroup::UPlus(s), dim(2)).unwrap();
        let z = c(0.0, 0.0);
        let expected = CMat::from_row_slice(
            3,
            3,
            &[c(1.0, s), c(0.0, -s), z, c(0.0, s), c(1.0, -s), z, z, z, c(1.0, 0.0)],
        );
        assert_eq!(u.matrix(), &expected);
        for n in 2..=4 {
            for sign in [Sign::Plus, Sign::Minus] {
                let kind = if sign == Sign::Plus { Subgroup::UPlus(s) } else { Subgroup::UMinus(s) };
                let u = subgroup_element(&kind, dim(n)).unwrap();
                let v = LieAlgebraElement::basis(BasisLabel::V(sign), dim(n)).unwrap();
                let e = v.scale(s).exp();
                assert!(max_abs(&(u.matrix() - e.matrix())) < 1e-12);
            }
        }
    }

    #[test]
    fn unipotent_square_vanishes() {
        let u = subgroup_element(&Subgroup::UMinus(2.5), dim(3)).unwrap();
        let d = u.matrix() - CMat::identity(4, 4);
        assert!(max_abs(&(&d * &d)) < 1e-14);
    }

    #[test]
    fn expm_matches_known_exponentials() {
        let x = LieAlgebraElement::basis(BasisLabel::X, dim(3)).unwrap();
        let e = x.scale(1.3).exp();
        let a = subgroup_element(&Subgroup::A(1.3), dim(3)).unwrap();
        assert!(max_abs(&(e.matrix() - a.matrix())) < 1e-13);
        assert_eq!(expm(&CMat::zeros(3, 3)), CMat::identity(3, 3));
    }

    #[test]
    fn exp_lands_in_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=5 {
            for _ in 0..20 {
                let y = random_algebra_element(dim(n), 1.0, &mut rng);
                let g = y.exp();
                assert!(g.residual() < 1e-10, "residual {}", g.residual());
                let prod = g.mul(&g.inverse());
                assert!(max_abs(&(prod.matrix() - CMat::identity(n + 1, n + 1))) < 1e-11);
            }
        }
    }

    #[test]
    fn nilpotent_exp_examples() {
        assert_eq!(
            nilpotent_exp(0.0, Sign::Plus, &SlowVector::zeros(dim(3))),
            GroupElement::identity(dim(3))
        );
        let u = nilpotent_exp(0.8, Sign::Minus, &SlowVector::zeros(dim(2)));
        let expected = subgroup_element(&Subgroup::UMinus(0.8), dim(2)).unwrap();
        assert!(max_abs(&(u.matrix() - expected.matrix())) < 1e-15);
    }

    #[test]
    fn k_and_r_constructors() {
        let n = dim(2);
        let theta = 0.3_f64;
        let b = CMat::from_row_slice(1, 1, &[C64::from_polar(1.0, -2.0 * theta)]);
        let r = subgroup_element(&Subgroup::R(theta, b.clone()), n).unwrap();
        assert!(r.residual() < 1e-14);
        // stabilizes (e0, e1)
        assert!((r.column(0)[0] - C64::from_polar(1.0, theta)).norm() < 1e-15);

        let wrong = subgroup_element(&Subgroup::R(theta + 0.1, b), n);
        assert!(matches!(wrong, Err(Error::Parameter(_))));

        let kb = CMat::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let k = subgroup_element(&Subgroup::K(kb), n).unwrap();
        assert!(k.residual() < 1e-14);
        let not_unitary = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(subgroup_element(&Subgroup::K(not_unitary), n).is_err());
    }

    #[test]
    fn in_x_w_u_examples() {
        let n = dim(2);
        for l in 1..=2 {
            assert!(in_x_w_u(&GroupElement::identity(n), l).unwrap());
        }
        assert!(in_x_w_u(&GroupElement::identity(n), 0).is_err());
        assert!(in_x_w_u(&GroupElement::identity(n), 3).is_err());

        // K rotating e1 towards e2: B = [[cos, -sin],[sin, cos]] acting on (e1, e2).
        let phi = 0.9_f64;
        let kb = CMat::from_row_slice(
            2,
            2,
            &[c(phi.cos(), 0.0), c(-phi.sin(), 0.0), c(phi.sin(), 0.0), c(phi.cos(), 0.0)],
        );
        let k = subgroup_element(&Subgroup::K(kb), n).unwrap();
        // B(e0 + e1) = e0 + cos(phi) e1 + sin(phi) e2 has a nonzero e2 component.
        assert!(!in_x_w_u(&k, 1).unwrap());
        assert!(in_x_w_u(&k, 2).unwrap());
    }

    #[test]
    fn w_k_blocks_stay_in_x_w_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = dim(4);
        for k in 1..=4 {
            let inner = random_algebra_element(dim(k.max(2)), 0.5, &mut rng).exp();
            let block = if k == 1 {
                subgroup_element(&Subgroup::A(0.4), dim(2)).unwrap().matrix().view((0, 0), (2, 2)).into_owned()
            } else {
                inner.matrix().clone()
            };
            let g = w_k_element(n, &block).unwrap();
            for l in k..=4 {
                assert!(in_x_w_u(&g, l).unwrap(), "k = {k}, l = {l}");
            }
        }
    }
}
