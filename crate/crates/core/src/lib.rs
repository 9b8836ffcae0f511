//! Numerical laboratory for the dynamics of complex hyperbolic space.
//!
//! The crate is split along the computable pieces of the theory:
//!
//! * [`minkowski`]: complex Minkowski space `C^{n,1}`, the Lie algebra
//!   `su(n,1)` in its standard basis, brackets, nilpotent exponentials and
//!   the matrix subgroups of `SU(n,1)`.
//! * [`flows`]: the sphere bundle as pairs `(z, v)` with group lifts, the
//!   geodesic and horocycle flows and their exact expansion rates.
//! * [`symplectic`]: the canonical symplectic form in exponential chart
//!   coordinates, point-straightening coordinates and slow rectangles.
//! * [`fup`]: porous sets and the fractal uncertainty principle as an
//!   operator-norm decay experiment.
//! * [`words`]: controlled/uncontrolled word combinatorics.
//! * [`acceptance`]: the end-to-end verification suite shared by the
//!   `acceptance` test target and the `chlab all` command.

pub mod acceptance;
pub mod error;
pub mod flows;
pub mod fup;
pub mod json;
pub mod minkowski;
pub mod symplectic;
pub mod words;

pub use error::{Error, Result};
pub use flows::{FrameTangent, SphereBundlePoint};
pub use fup::{DiscreteSet, FupParams, NormMethod, NormResult, PorousSet};
pub use minkowski::{
    BasisLabel, GroupElement, LieAlgebraElement, MinkVector, Sign, SlowVector, SpaceDim,
};
pub use symplectic::{ChartCoords, CotangentPoint, SlowRectangle, StraightenMap, SymplecticMatrixAt};
pub use words::{Word, WordParams};

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
