//! The sphere bundle `SCH^n` and its homogeneous flows.
//!
//! A point is a pair `(z, v)` with `<z,z> = -1`, `<z,v> = 0`, `<v,v> = 1`,
//! carried together with a group lift `g` satisfying `g e_0 = z`, `g e_1 = v`.
//! Flows act by right translation of the lift, so they are exact matrix
//! products and never integrate an ODE.
//!
//! Tangent vectors are expressed in the left-invariant frame
//! `X, V-, V+, W-_j, Z-_j, W+_j, Z+_j` (see [`crate::minkowski::full_basis`]),
//! which is orthonormal for the metric used throughout.

use serde::{Deserialize, Serialize};

use crate::minkowski::{
    inner_raw, subgroup_element, GroupElement, LieAlgebraElement, MinkVector, Sign, SpaceDim,
    Subgroup, GROUP_TOL,
};
use crate::{CMat, CVec, Error, Result, C64};

/// Scale applied to the ambient distance so the geodesic direction has unit speed.
pub const DISTANCE_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A point of the sphere bundle with an explicit group lift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct SphereBundlePoint {
    z: MinkVector,
    v: MinkVector,
    lift: GroupElement,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    z: MinkVector,
    v: MinkVector,
    lift: GroupElement,
}

impl TryFrom<RawPoint> for SphereBundlePoint {
    type Error = Error;
    fn try_from(raw: RawPoint) -> Result<Self> {
        Self::new(raw.z, raw.v, raw.lift)
    }
}

impl From<SphereBundlePoint> for RawPoint {
    fn from(q: SphereBundlePoint) -> Self {
        RawPoint { z: q.z, v: q.v, lift: q.lift }
    }
}

impl SphereBundlePoint {
    /// Validates the bundle and lift invariants to `1e-10`.
    pub fn new(z: MinkVector, v: MinkVector, lift: GroupElement) -> Result<Self> {
        let q = Self { z, v, lift };
        let residual = q.invariant_residual();
        if residual > GROUP_TOL {
            return Err(Error::NotOnBundle { residual });
        }
        Ok(q)
    }

    /// The point `(g e_0, g e_1)` with lift `g`.
    pub fn from_lift(lift: GroupElement) -> Self {
        let z = MinkVector::new(lift.column(0)).expect("lift has n >= 2");
        let v = MinkVector::new(lift.column(1)).expect("lift has n >= 2");
        Self { z, v, lift }
    }

    /// `(e_0, e_1)` with identity lift.
    pub fn base_point(n: SpaceDim) -> Self {
        Self::from_lift(GroupElement::identity(n))
    }

    pub fn z(&self) -> &MinkVector {
        &self.z
    }

    pub fn v(&self) -> &MinkVector {
        &self.v
    }

    pub fn lift(&self) -> &GroupElement {
        &self.lift
    }

    pub fn dim(&self) -> SpaceDim {
        self.lift.dim()
    }

    /// Largest violation of the bundle relations and of the lift consistency.
    pub fn invariant_residual(&self) -> f64 {
        let (z, v) = (self.z.entries(), self.v.entries());
        let form = [
            (inner_raw(z, z) + 1.0).norm(),
            inner_raw(z, v).norm(),
            (inner_raw(v, v) - 1.0).norm(),
        ];
        let lift = [
            (self.lift.column(0) - z).norm(),
            (self.lift.column(1) - v).norm(),
        ];
        form.into_iter().chain(lift).fold(0.0, f64::max)
    }

    /// The representative `e^{i theta} (z, v)` of the same point of `SCH^n`.
    ///
    /// The lift is multiplied on the right by an element of the isotropy
    /// group, so it stays in `SU(n,1)`.
    pub fn rotate_phase(&self, theta: f64) -> Self {
        let n = self.dim();
        let mut b = CMat::identity(n.get() - 1, n.get() - 1);
        b[(0, 0)] = C64::from_polar(1.0, -2.0 * theta);
        let r = subgroup_element(&Subgroup::R(theta, b), n).expect("det condition holds by construction");
        right_translate(self, &r)
    }
}

/// `g.(z, v) = (g z, g v)` with lift `g * lift`.
pub fn act(g: &GroupElement, q: &SphereBundlePoint) -> Result<SphereBundlePoint> {
    if g.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim().ambient(), found: g.dim().ambient() });
    }
    let out = SphereBundlePoint::from_lift(g.mul(q.lift()));
    let residual = out.invariant_residual();
    if residual > GROUP_TOL {
        return Err(Error::NotOnBundle { residual });
    }
    Ok(out)
}

/// Right translation of the lift by `h`.
pub fn right_translate(q: &SphereBundlePoint, h: &GroupElement) -> SphereBundlePoint {
    SphereBundlePoint::from_lift(q.lift().mul(h))
}

/// The geodesic flow `phi^t`: right translation by `exp(t X)`.
pub fn geodesic_flow(q: &SphereBundlePoint, t: f64) -> SphereBundlePoint {
    let a = subgroup_element(&Subgroup::A(t), q.dim()).expect("A is always constructible");
    right_translate(q, &a)
}

/// The horocycle flow of `V^{+-}`: right translation by `exp(s V^{+-})`.
pub fn horocycle_flow(q: &SphereBundlePoint, s: f64, sign: Sign) -> SphereBundlePoint {
    let kind = match sign {
        Sign::Plus => Subgroup::UPlus(s),
        Sign::Minus => Subgroup::UMinus(s),
    };
    let u = subgroup_element(&kind, q.dim()).expect("U is always constructible");
    right_translate(q, &u)
}

/// Which subbundle a frame index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRole {
    Flow,
    Fast(Sign),
    Slow(Sign),
}

/// Role of each of the `4n - 1` frame slots.
pub fn frame_roles(n: SpaceDim) -> Vec<FrameRole> {
    let slow = n.slow_dim();
    let mut roles = vec![FrameRole::Flow, FrameRole::Fast(Sign::Minus), FrameRole::Fast(Sign::Plus)];
    roles.extend(std::iter::repeat_n(FrameRole::Slow(Sign::Minus), slow));
    roles.extend(std::iter::repeat_n(FrameRole::Slow(Sign::Plus), slow));
    roles
}

/// Frame indices spanning one subbundle.
pub fn frame_indices(n: SpaceDim, role: FrameRole) -> Vec<usize> {
    frame_roles(n)
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| (r == role).then_some(i))
        .collect()
}

/// Diagonal factors of `d phi^t` in the frame: `1`, `e^{2t}` on `V-`,
/// `e^{-2t}` on `V+`, `e^{t}` on `E-`, `e^{-t}` on `E+`.
pub fn expansion_factors(n: SpaceDim, t: f64) -> Vec<f64> {
    frame_roles(n)
        .into_iter()
        .map(|role| match role {
            FrameRole::Flow => 1.0,
            FrameRole::Fast(s) => (-2.0 * s.value() * t).exp(),
            FrameRole::Slow(s) => (-s.value() * t).exp(),
        })
        .collect()
}

/// A tangent vector at a bundle point in the left-invariant frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTangent {
    base: SphereBundlePoint,
    coeffs: Vec<f64>,
}

impl FrameTangent {
    pub fn new(base: SphereBundlePoint, coeffs: Vec<f64>) -> Result<Self> {
        let expected = base.dim().frame_len();
        if coeffs.len() != expected {
            return Err(Error::LengthMismatch { expected, found: coeffs.len() });
        }
        Ok(Self { base, coeffs })
    }

    /// The unit vector along frame slot `index`.
    pub fn unit(base: SphereBundlePoint, index: usize) -> Result<Self> {
        let len = base.dim().frame_len();
        if index >= len {
            return Err(Error::Parameter(format!("frame index {index} out of range 0..{len}")));
        }
        let mut coeffs = vec![0.0; len];
        coeffs[index] = 1.0;
        Self::new(base, coeffs)
    }

    pub fn base(&self) -> &SphereBundlePoint {
        &self.base
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn to_algebra(&self) -> LieAlgebraElement {
        LieAlgebraElement::from_frame(self.base.dim(), &self.coeffs).expect("length checked")
    }

    /// Ambient velocity `(lift Y e_0, lift Y e_1)` of the vector.
    pub fn ambient_velocity(&self) -> (CVec, CVec) {
        let m = self.base.lift().matrix() * self.to_algebra().matrix();
        (m.column(0).into_owned(), m.column(1).into_owned())
    }
}

/// `d phi^t` in closed form: `Ad(exp(-tX))` is diagonal in the frame.
pub fn pushforward_frame(w: &FrameTangent, t: f64) -> FrameTangent {
    let factors = expansion_factors(w.base.dim(), t);
    let coeffs = w.coeffs.iter().zip(&factors).map(|(c, f)| c * f).collect();
    FrameTangent { base: geodesic_flow(&w.base, t), coeffs }
}

/// Pushforward by central differences of the curve `s -> lift exp(sY) exp(tX)`.
///
/// The derivative is pulled back by the flowed lift and decomposed in the
/// frame; this never uses the adjoint eigenvalues.
pub fn finite_difference_pushforward(w: &FrameTangent, t: f64, step: f64) -> FrameTangent {
    let n = w.base.dim();
    let y = w.to_algebra();
    let flow = subgroup_element(&Subgroup::A(t), n).expect("A is always constructible");
    let curve = |s: f64| w.base.lift().mul(&y.scale(s).exp()).mul(&flow);
    let tangent = (curve(step).matrix() - curve(-step).matrix()) / C64::new(2.0 * step, 0.0);
    let flowed = w.base.lift().mul(&flow);
    let pulled = flowed.inverse().matrix() * tangent;
    let coeffs = LieAlgebraElement::from_matrix_unchecked(pulled).frame_coefficients();
    FrameTangent { base: SphereBundlePoint::from_lift(flowed), coeffs }
}

/// Proxy distance on `SCH^n`: the ambient Euclidean distance of `(z, v)`
/// minimized over the phase `e^{i theta}`, scaled by `1/sqrt(2)`.
///
/// The optimal phase aligns the Hermitian overlap, so no search is needed.
pub fn bundle_distance(q1: &SphereBundlePoint, q2: &SphereBundlePoint) -> Result<f64> {
    if q1.dim() != q2.dim() {
        return Err(Error::DimensionMismatch { expected: q1.dim().ambient(), found: q2.dim().ambient() });
    }
    let (z1, v1) = (q1.z.entries(), q1.v.entries());
    let (z2, v2) = (q2.z.entries(), q2.v.entries());
    let overlap: C64 = z2.dotc(z1) + v2.dotc(v1); // sum q1 * conj(q2)
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let dz = z1 - z2 * phase;
    let dv = v1 - v2 * phase;
    Ok(DISTANCE_SCALE * (dz.norm_squared() + dv.norm_squared()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::random_algebra_element;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dim(n: usize) -> SpaceDim {
        SpaceDim::new(n).unwrap()
    }

    #[test]
    fn base_point_is_exact() {
        let q = SphereBundlePoint::base_point(dim(2));
        assert_eq!(q.invariant_residual(), 0.0);
        assert_eq!(q.z(), &MinkVector::basis(dim(2), 0));
        assert_eq!(q.v(), &MinkVector::basis(dim(2), 1));
        assert_eq!(act(&GroupElement::identity(dim(2)), &q).unwrap(), q);
    }

    #[test]
    fn act_by_a_matches_display() {
        let t = 0.8_f64;
        let a = subgroup_element(&Subgroup::A(t), dim(2)).unwrap();
        let q = act(&a, &SphereBundlePoint::base_point(dim(2))).unwrap();
        let z = q.z().entries();
        assert!((z[0].re - t.cosh()).abs() < 1e-15 && (z[1].re - t.sinh()).abs() < 1e-15);
        let v = q.v().entries();
        assert!((v[0].re - t.sinh()).abs() < 1e-15 && (v[1].re - t.cosh()).abs() < 1e-15);
    }

    #[test]
    fn act_rejects_non_isometry() {
        let mut m = CMat::identity(3, 3);
        m[(0, 0)] = C64::new(2.0, 0.0);
        let g = GroupElement::with_tolerance(m, f64::INFINITY).unwrap();
        let q = SphereBundlePoint::base_point(dim(2));
        assert!(matches!(act(&g, &q), Err(Error::NotOnBundle { .. })));
    }

    #[test]
    fn random_isometries_keep_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = SphereBundlePoint::base_point(dim(3));
        for _ in 0..100 {
            let g = random_algebra_element(dim(3), 0.8, &mut rng).exp();
            let out = act(&g, &q).unwrap();
            assert!(inner_raw(out.z().entries(), out.v().entries()).norm() < 1e-12);
        }
    }

    #[test]
    fn geodesic_flow_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = SphereBundlePoint::from_lift(random_algebra_element(dim(2), 0.5, &mut rng).exp());
        assert_eq!(geodesic_flow(&q, 0.0).lift().matrix(), q.lift().matrix());
        let a = geodesic_flow(&geodesic_flow(&q, 0.7), -1.9);
        let b = geodesic_flow(&q, -1.2);
        assert!(bundle_distance(&a, &b).unwrap() < 1e-10);
        let base = geodesic_flow(&SphereBundlePoint::base_point(dim(2)), 1.1);
        assert!((base.z().entries()[1].re - 1.1_f64.sinh()).abs() < 1e-14);
    }

    #[test]
    fn horocycle_flow_commutes_with_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let q = SphereBundlePoint::from_lift(random_algebra_element(dim(3), 0.4, &mut rng).exp());
        assert_eq!(horocycle_flow(&q, 0.0, Sign::Minus).lift().matrix(), q.lift().matrix());
        let (s, t) = (0.3, 0.9);
        let lhs = geodesic_flow(&horocycle_flow(&q, s, Sign::Minus), t);
        let rhs = horocycle_flow(&geodesic_flow(&q, t), s * (2.0 * t).exp(), Sign::Minus);
        assert!(bundle_distance(&lhs, &rhs).unwrap() < 1e-9);
        // same matrix as the nilpotent exponential route
        let via_nil = right_translate(
            &q,
            &crate::minkowski::nilpotent_exp(s, Sign::Minus, &crate::SlowVector::zeros(dim(3))),
        );
        assert!(bundle_distance(&via_nil, &horocycle_flow(&q, s, Sign::Minus)).unwrap() < 1e-14);
    }

    #[test]
    fn pushforward_examples() {
        let n = dim(2);
        let q = SphereBundlePoint::base_point(n);
        let t = 1.3_f64;
        let vm = FrameTangent::unit(q.clone(), 1).unwrap();
        assert!((pushforward_frame(&vm, t).norm() - (2.0 * t).exp()).abs() < 1e-12);
        // W+_2 sits after X, V-, V+, W-_2, Z-_2
        let wp = FrameTangent::unit(q.clone(), 5).unwrap();
        assert!((pushforward_frame(&wp, t).norm() - (-t).exp()).abs() < 1e-15);
        let x = FrameTangent::unit(q, 0).unwrap();
        assert_eq!(pushforward_frame(&x, t).norm(), 1.0);
    }

    #[test]
    fn frame_tangent_length_checked() {
        let q = SphereBundlePoint::base_point(dim(2));
        assert!(matches!(FrameTangent::new(q.clone(), vec![0.0; 3]), Err(Error::LengthMismatch { .. })));
        assert!(FrameTangent::unit(q, 7).is_err());
    }

    #[test]
    fn distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = SphereBundlePoint::from_lift(random_algebra_element(dim(2), 0.5, &mut rng).exp());
        assert_eq!(bundle_distance(&q, &q).unwrap(), 0.0);
        assert!(bundle_distance(&q, &q.rotate_phase(1.234)).unwrap() < 1e-12);
        let base = SphereBundlePoint::base_point(dim(2));
        let t = 1e-3;
        let ratio = bundle_distance(&base, &geodesic_flow(&base, t)).unwrap() / t;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn rotate_phase_keeps_invariants() {
        let q = SphereBundlePoint::base_point(dim(3)).rotate_phase(0.77);
        assert!(q.invariant_residual() < 1e-14);
        assert!((q.z().entries()[0] - C64::from_polar(1.0, 0.77)).norm() < 1e-15);
    }
}
