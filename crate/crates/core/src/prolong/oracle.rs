//! Brute-force enumeration of prolongations for ℓ-rank ≤ 2, by running over every
//! Hermite basis between u^{bound}·seed and u^{-bound}·seed and testing it directly.
//! Independent of the window linear algebra; used to cross-check it.

use super::{EtaleTorsionModule, Lattice};
use crate::base::{Mat, Series, EXACT};
use crate::error::{Error, Result};

pub fn brute_force_prolongations(m: &EtaleTorsionModule, bound: i64) -> Result<Vec<Lattice>> {
    let n = m.rank();
    let r = m.restriction();
    let ring = r.field_ring();
    let cap = m.base().precision();
    let mono = |d: i64| Series::u_pow(ring, cap, d);
    let mut out = Vec::new();
    let mut consider = |local: Mat| -> Result<()> {
        let l = Lattice::from_basis(&m.seed().mul(&local))?;
        if m.is_prolongation(&l)? {
            out.push(l);
        }
        Ok(())
    };
    match n {
        1 => {
            for a in -bound..=bound {
                consider(Mat::scalar(&mono(a), 1))?;
            }
        }
        2 => {
            let fs = r.field().size() as u64;
            for a in -bound..=bound {
                for b in -bound..=bound {
                    // below-diagonal entry x with degrees in [max(-bound, a+b-bound), b)
                    let from = (-bound).max(a + b - bound);
                    let len = (b - from).max(0) as u32;
                    for idx in 0..fs.pow(len) {
                        let mut t = idx;
                        let coeffs: Vec<Vec<u64>> = (0..len)
                            .map(|_| {
                                let c = (t % fs) as u32;
                                t /= fs;
                                r.from_field(c)
                            })
                            .collect();
                        let x = Series::from_coeffs(ring, cap, from, &coeffs, EXACT);
                        let zero = Series::zero(ring, cap);
                        consider(Mat::from_rows(vec![vec![mono(a), zero], vec![x, mono(b)]]))?;
                    }
                }
            }
        }
        _ => return Err(Error::pre("brute-force enumeration supports ℓ-rank at most 2")),
    }
    Ok(out)
}
