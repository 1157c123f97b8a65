//! Bounded search for σ-conjugacies U·B₁ = B₂·σ(U).
//!
//! Over an F_p-algebra Λ the condition is F_p-linear in the coefficients of U, so the
//! solutions with bounded u-degree form a vector space that is computed exactly; the
//! search is only over which solution is invertible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PhiModule;
use crate::base::field::{combine, kernel};
use crate::base::{FrobeniusBase, Mat, Series, SmallField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsoMode {
    /// U ∈ GL_n(Λ[[u]]).
    Integral,
    /// U ∈ GL_n(Λ((u))) with poles of order at most `pole`.
    Laurent { pole: i64 },
}

#[derive(Clone, Debug)]
pub enum IsoResult {
    /// U with U·B₁ ≡ B₂·σ(U) modulo u^precision.
    Found { u: Mat, precision: i64 },
    /// No invertible solution among those examined; never a proof of non-isomorphism.
    NotFound { bound: i64, solution_dim: usize },
}

impl IsoResult {
    pub fn found(&self) -> bool {
        matches!(self, IsoResult::Found { .. })
    }
}

const EXHAUSTIVE_LIMIT: u128 = 1 << 16;
const RANDOM_SAMPLES: usize = 4096;

/// Integral-mode search between two φ-modules.
pub fn is_isomorphic(m1: &PhiModule, m2: &PhiModule, bound: i64) -> Result<IsoResult> {
    if m1.base() != m2.base() {
        return Err(Error::pre("modules live over different bases"));
    }
    find_conjugator(m1.base(), m1.matrix(), m2.matrix(), bound, IsoMode::Integral, 0)
}

/// Searches U with entries of u-degree ≤ bound (and pole ≤ the mode's pole bound).
pub fn find_conjugator(base: &FrobeniusBase, b1: &Mat, b2: &Mat, bound: i64, mode: IsoMode, seed: u64) -> Result<IsoResult> {
    let ring = base.ring();
    let n = b1.rows();
    if b2.rows() != n {
        return Ok(IsoResult::NotFound { bound, solution_dim: 0 });
    }
    if ring.torsion_exponent() != 1 {
        return Err(Error::pre("conjugacy search needs a coefficient ring killed by p"));
    }
    if n > 4 {
        return Err(Error::pre("conjugacy search supports rank at most 4"));
    }
    let s = match mode {
        IsoMode::Integral => 0,
        IsoMode::Laurent { pole } => pole.max(0),
    };
    let q = base.q() as i64;
    let d = ring.dim();
    let v1 = b1.valuation().unwrap_or(0);
    let v2 = b2.valuation().unwrap_or(0);
    let top = (b1.precision().saturating_sub(s))
        .min(b2.precision().saturating_sub(q * s))
        .min(bound + 1 + v1)
        .min(v2 + q * (bound + 1));
    let low = (-s + v1).min(v2 - q * s);
    if top <= low {
        return Err(Error::indeterminate("no equations below the available precision", top));
    }
    let degrees: Vec<i64> = (-s..=bound).collect();
    let field = SmallField::prime(ring.p());
    let nvars = n * n * degrees.len() * d;
    let neq = n * n * (top - low) as usize * d;
    // column k of the system is the image of the k-th unknown monomial
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(nvars);
    let mut unknowns = Vec::with_capacity(nvars);
    for a in 0..n {
        for b in 0..n {
            for &j in &degrees {
                for c in 0..d {
                    let mut mu = ring.zero();
                    mu[c] = 1;
                    let x = Series::monomial(ring, base.precision(), j, &mu);
                    let sx = base.sigma(&x);
                    // L(U) = U·B₁ − B₂·σ(U) with U = x·e_ab
                    let mut col = vec![0u32; neq];
                    for jj in 0..n {
                        let t = x.mul(b1.get(b, jj));
                        write_entry(&mut col, a, jj, n, &t, low, top, d, false);
                    }
                    for ii in 0..n {
                        let t = b2.get(ii, a).mul(&sx);
                        write_entry(&mut col, ii, b, n, &t, low, top, d, true);
                    }
                    columns.push(col);
                    unknowns.push((a, b, j, c));
                }
            }
        }
    }
    let p = ring.p() as u32;
    let rows: Vec<Vec<u32>> = (0..neq).map(|r| columns.iter().map(|col| col[r] % p).collect()).collect();
    let sol = kernel(&field, &rows, nvars);
    let k = sol.len();
    let build = |coeffs: &[u32]| -> Mat {
        let v = combine(&field, &sol, coeffs, nvars);
        let mut u = base.zero_mat(n, n);
        for (idx, &val) in v.iter().enumerate() {
            if val == 0 {
                continue;
            }
            let (a, b, j, c) = unknowns[idx];
            let mut mu = ring.zero();
            mu[c] = val as u64;
            let term = Series::monomial(ring, base.precision(), j, &mu);
            let cur = u.get(a, b).add(&term);
            u.set(a, b, cur);
        }
        u
    };
    let invertible = |u: &Mat| -> bool {
        let det = u.det();
        match mode {
            IsoMode::Integral => ring.is_unit(&det.coeff(0)),
            IsoMode::Laurent { .. } => det.unit_degree().is_some(),
        }
    };
    if k == 0 {
        return Ok(IsoResult::NotFound { bound, solution_dim: 0 });
    }
    let total = (p as u128).checked_pow(k as u32);
    let try_coeffs = |coeffs: &[u32]| -> Option<Mat> {
        let u = build(coeffs);
        invertible(&u).then_some(u)
    };
    if let Some(total) = total.filter(|&t| t <= EXHAUSTIVE_LIMIT) {
        let mut coeffs = vec![0u32; k];
        for _ in 1..total {
            // odometer increment
            for c in coeffs.iter_mut() {
                *c += 1;
                if *c < p {
                    break;
                }
                *c = 0;
            }
            if let Some(u) = try_coeffs(&coeffs) {
                return Ok(IsoResult::Found { u, precision: top });
            }
        }
    } else {
        for i in 0..k {
            let mut coeffs = vec![0u32; k];
            coeffs[i] = 1;
            if let Some(u) = try_coeffs(&coeffs) {
                return Ok(IsoResult::Found { u, precision: top });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RANDOM_SAMPLES {
            let coeffs: Vec<u32> = (0..k).map(|_| rng.gen_range(0..p)).collect();
            if let Some(u) = try_coeffs(&coeffs) {
                return Ok(IsoResult::Found { u, precision: top });
            }
        }
    }
    Ok(IsoResult::NotFound { bound, solution_dim: k })
}

#[allow(clippy::too_many_arguments)]
fn write_entry(col: &mut [u32], i: usize, j: usize, n: usize, t: &Series, low: i64, top: i64, d: usize, negate: bool) {
    let p = t.ring().p();
    for (deg, a) in t.terms() {
        if deg < low || deg >= top {
            continue;
        }
        let base = (((i * n + j) * (top - low) as usize) + (deg - low) as usize) * d;
        for (c, &x) in a.iter().enumerate() {
            let x = x % p;
            let val = if negate { (p - x) % p } else { x };
            let slot = &mut col[base + c];
            *slot = ((*slot as u64 + val) % p) as u32;
        }
    }
}
