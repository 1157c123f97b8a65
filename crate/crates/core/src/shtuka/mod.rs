//! Equal characteristic: k[[π₀]]-coefficients with P = π₀ − u₀. Everything else reuses the
//! generic φ-module machinery over the equichar base.

use crate::base::{make_base, BaseSpec, FrobeniusBase, PolySpec};
use crate::error::{Error, Result};
use crate::phimod::{twist_module, PhiModule};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShtukaConfig {
    pub q: u64,
    pub residue_degree: usize,
    /// π₀-torsion level.
    pub torsion_level: u32,
    /// u₀ as a polynomial in u over k.
    pub u0: PolySpec,
    pub precision: i64,
}

impl ShtukaConfig {
    /// u₀ = u^e.
    pub fn standard(q: u64, e: usize, torsion_level: u32, precision: i64) -> ShtukaConfig {
        ShtukaConfig { q, residue_degree: 1, torsion_level, u0: PolySpec::monomial(1, e), precision }
    }
}

pub fn make_shtuka_base(cfg: &ShtukaConfig) -> Result<FrobeniusBase> {
    if cfg.u0.0.iter().flatten().all(|&c| c == 0) {
        return Err(Error::pre("u₀ must be nonzero"));
    }
    make_base(BaseSpec::equichar(cfg.q, cfg.residue_degree, cfg.torsion_level, cfg.precision, cfg.u0.clone()))
}

/// The lattice side of the r-th power of the Lubin–Tate character in height ≤ h: 𝔖(h − r).
pub fn lt_twist(r: u32, h: u32, base: &FrobeniusBase) -> Result<PhiModule> {
    if r > h {
        return Err(Error::pre(format!("Lubin–Tate exponent {r} outside [0,{h}]")));
    }
    twist_module(h - r, h, base)
}
