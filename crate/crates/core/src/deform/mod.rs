//! First-order deformations of a φ-module over 𝔖/p: absorption of high-order
//! perturbations, the finite set of ε-classes, the ε-stable lattice basis, and
//! square-zero lifting.

pub mod classes;
pub mod epsilon;
pub mod lift;

use crate::base::{CoeffKind, FrobeniusBase, Mat};
use crate::error::{Error, Result};
use crate::prolong::denominator_bound;

pub use classes::{brute_force_class_count, eps_classes, tangent_index, TangentClassSet, TangentIndex};
pub use epsilon::{eps_stable_basis, free_rank_one_lattices, EpsStableBasis};
pub use lift::{cokernel_length, lift_square_zero};

/// A fixed φ-matrix α of height ≤ h over (k ⊗ F)[[u]], with its denominator bound r and cutoff c.
#[derive(Clone, Debug)]
pub struct TangentProblem {
    pub base: FrobeniusBase,
    pub alpha: Mat,
    pub h: u32,
    pub r: i64,
    pub c: i64,
}

impl TangentProblem {
    /// Default cutoff c = 2he + 1.
    pub fn new(base: &FrobeniusBase, alpha: &Mat, h: u32) -> Result<TangentProblem> {
        if base.ring().torsion_exponent() != 1 || base.ring().generator_named("t").is_some() {
            return Err(Error::pre("tangent problems live over a base killed by the uniformizer"));
        }
        if !matches!(base.coeffs(), CoeffKind::Field(_)) {
            return Err(Error::pre("tangent problems need a coefficient field"));
        }
        if !alpha.is_square() || !alpha.is_integral() {
            return Err(Error::pre("α must be a square integral matrix"));
        }
        let inv = alpha
            .inverse_laurent()
            .map_err(|e| Error::pre(format!("α is not invertible after inverting u: {e}")))?;
        if !inv.scale(&base.p_power(h)).is_integral() {
            return Err(Error::pre(format!("α has height above {h}")));
        }
        let r = denominator_bound(base, alpha)?;
        let he = base.e() as i64 * h as i64;
        Ok(TangentProblem { base: base.clone(), alpha: alpha.clone(), h, r, c: 2 * he + 1 })
    }

    /// Replaces the cutoff; c > 2he is required, and c = 2he is allowed for p ≥ 3.
    pub fn with_cutoff(mut self, c: i64) -> Result<TangentProblem> {
        let he = self.he();
        if c < 2 * he || (c == 2 * he && self.base.p() == 2) {
            return Err(Error::pre(format!("cutoff {c} is too small; need c > 2he = {}", 2 * he)));
        }
        self.c = c;
        Ok(self)
    }

    pub fn he(&self) -> i64 {
        self.base.e() as i64 * self.h as i64
    }

    pub fn rank(&self) -> usize {
        self.alpha.rows()
    }

    /// X ↦ α·σ(X) − X·α.
    pub fn coboundary(&self, x: &Mat) -> Mat {
        self.alpha.mul(&self.base.sigma_mat(x)).sub(&x.mul(&self.alpha))
    }
}

#[derive(Clone, Debug)]
pub struct AbsorbTrace {
    /// Y = Σ Y^{(i)}.
    pub y: Mat,
    pub partials: Vec<Mat>,
    /// X^{(0)} = X, X^{(1)}, ...
    pub residuals: Vec<Mat>,
    /// The guaranteed orders c^{(0)} = c, c^{(i)} = q·(c^{(i−1)} − he).
    pub orders: Vec<i64>,
    /// Actual u-valuations of the residuals (None once zero at precision).
    pub valuations: Vec<Option<i64>>,
    /// u-precision at which (β+X) + α·σ(Y) − Y·α = β was verified.
    pub precision: i64,
}

const MAX_ABSORB_STEPS: usize = 64;

/// Successive approximation: Y^{(i)} = X^{(i−1)}·α^{-1}, X^{(i)} = α·σ(Y^{(i)}), so that
/// Σ (Y^{(i)}·α − α·σ(Y^{(i)})) telescopes to X.
pub fn absorb(tp: &TangentProblem, beta: &Mat, x: &Mat) -> Result<AbsorbTrace> {
    let he = tp.he();
    let c = tp.c;
    if c < 2 * he || (c == 2 * he && tp.base.p() == 2) {
        return Err(Error::pre(format!("cutoff {c} is too small; need c > 2he = {}", 2 * he)));
    }
    if x.valuation().is_some_and(|v| v < c) {
        return Err(Error::pre(format!("perturbation is not in u^{c}·Mat")));
    }
    let q = tp.base.q() as i64;
    let inv = tp.alpha.inverse_laurent().map_err(|e| Error::pre(e.to_string()))?;
    let n = tp.rank();
    let mut y = tp.base.zero_mat(n, n);
    let mut partials = Vec::new();
    let mut residuals = vec![x.clone()];
    let mut orders = vec![c];
    let mut valuations = vec![x.valuation()];
    let mut cur = x.clone();
    let mut bound = c;
    for _ in 0..MAX_ABSORB_STEPS {
        if cur.is_zero() {
            break;
        }
        let yi = cur.mul(&inv);
        let next = tp.alpha.mul(&tp.base.sigma_mat(&yi));
        bound = q * (bound - he);
        if next.valuation().is_some_and(|v| v < bound) {
            return Err(Error::indeterminate("residual order fell below its guaranteed bound", next.precision()));
        }
        y = y.add(&yi);
        partials.push(yi);
        orders.push(bound);
        valuations.push(next.valuation());
        residuals.push(next.clone());
        cur = next;
    }
    if !cur.is_zero() {
        return Err(Error::indeterminate(
            format!("residual still nonzero after {MAX_ABSORB_STEPS} steps"),
            cur.valuation().unwrap_or(0),
        ));
    }
    let lhs = beta.add(x).add(&tp.coboundary(&y));
    let diff = lhs.sub(beta);
    if !diff.is_zero() {
        return Err(Error::indeterminate("absorption identity fails", diff.precision()));
    }
    Ok(AbsorbTrace { y, partials, residuals, orders, valuations, precision: diff.precision().min(tp.base.precision()) })
}
