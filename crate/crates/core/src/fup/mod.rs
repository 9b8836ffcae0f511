//! Porous sets and the fractal uncertainty principle, measured as the decay
//! of `|| 1_{Omega-} F_h 1_{Omega+} ||`.
//!
//! The discrete model replaces `F_h` by the unitary `N`-point DFT with
//! `h = 1/N`; a set `Omega in [0, 1]` becomes the cells of `Z_N` whose
//! midpoints it contains. The continuous kernel is kept for cross-checks.

mod norm;
mod porous;

pub use norm::{
    beta_regression, continuous_frobenius_bound, continuous_norm, discrete_norm, discrete_norm_with,
    frobenius_bound, tensor_factor_check, BetaFit, DiscreteSet, NormMethod, NormOptions, NormResult,
    TensorCheck, DENSE_MAX_ENTRIES, DENSE_MAX_N, TENSOR_MAX_ENTRIES,
};
pub use porous::{diffeo_window, grid_porosity, thicken_window, PorousSet, Witness};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Semiclassical parameter, either continuous or as a DFT size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    H(f64),
    N(usize),
}

impl Scale {
    /// `h`, with `h = 1/N` in the discrete model.
    pub fn h(self) -> f64 {
        match self {
            Self::H(h) => h,
            Self::N(n) => 1.0 / n as f64,
        }
    }
}

/// Parameters of one FUP configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FupParams {
    pub scale: Scale,
    pub rho: f64,
    pub nu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl FupParams {
    /// Uses `rho = 2/3 (1 - eps0)` and the window `[h^gamma0, h^gamma1]`.
    pub fn new(scale: Scale, eps0: f64, nu: f64, gamma0: f64, gamma1: f64) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 < 0.25) {
            return Err(Error::Parameter(format!("eps0 must lie in (0, 1/4), got {eps0}")));
        }
        let h = scale.h();
        let params = Self {
            scale,
            rho: 2.0 / 3.0 * (1.0 - eps0),
            nu,
            alpha0: h.powf(gamma0),
            alpha1: h.powf(gamma1),
            gamma0,
            gamma1,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.scale.h();
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Parameter(format!("h must lie in (0, 1), got {h}")));
        }
        if !(self.rho > 0.5 && self.rho < 2.0 / 3.0) {
            return Err(Error::Parameter(format!("rho must lie in (1/2, 2/3), got {}", self.rho)));
        }
        if !(0.0 <= self.gamma1 && self.gamma1 < 0.5 && 0.5 < self.gamma0 && self.gamma0 <= 1.0) {
            return Err(Error::Parameter(format!(
                "need 0 <= gamma1 < 1/2 < gamma0 <= 1, got gamma0 = {}, gamma1 = {}",
                self.gamma0, self.gamma1
            )));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::Parameter(format!("nu must lie in (0, 1), got {}", self.nu)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= self.alpha1) {
            return Err(Error::Parameter(format!(
                "scale window must satisfy 0 < alpha0 <= alpha1, got [{}, {}]",
                self.alpha0, self.alpha1
            )));
        }
        Ok(())
    }
}

/// Discretized base-3 Cantor set (digits `{0, 2}`) at `N = 3^k`.
pub fn cantor_discrete(k: u32) -> Result<DiscreteSet> {
    let set = PorousSet::cantor_iterate(3, &[0, 2], k)?;
    DiscreteSet::from_porous(&set, 3usize.pow(k))
}
