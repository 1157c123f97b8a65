//! Lifting a φ-module over F to a square-zero thickening F[ν]/ν² (ν = ε or T).

use crate::base::field::SmallField;
use crate::base::{CoeffKind, Echelon, FrobeniusBase, Mat};
use crate::error::{Error, Result};
use crate::phimod::{base_change, PhiModule, RingMap};

/// B_A = s(B̄)·(1 + ν·s(Δ)), s the coefficient section F → F[ν]. The height tag of `m_bar`
/// is checked on the lift, and the lift is checked to reduce back to B̄.
pub fn lift_square_zero(m_bar: &PhiModule, target: &FrobeniusBase, delta: Option<&Mat>) -> Result<PhiModule> {
    let a = match m_bar.base().coeffs() {
        CoeffKind::Field(a) => *a,
        _ => return Err(Error::pre("the module to lift must have field coefficients")),
    };
    let nu = match target.coeffs() {
        CoeffKind::Dual(b) if *b == a => target.eps(),
        CoeffKind::Poly(b, 2) if *b == a => target.generator("T"),
        other => return Err(Error::pre(format!("cannot lift field {a} coefficients to {other}"))),
    }
    .expect("square-zero generator present");
    let src = m_bar.base();
    let images = src
        .ring()
        .generators()
        .iter()
        .map(|g| target.generator(&g.name).ok_or_else(|| Error::pre(format!("target lacks generator {}", g.name))))
        .collect::<Result<Vec<_>>>()?;
    let section = RingMap::new(src, target, images)?;
    let n = m_bar.rank();
    let b = section.apply_mat(m_bar.matrix());
    let twist = match delta {
        Some(d) => {
            if d.rows() != n || d.cols() != n {
                return Err(Error::pre("perturbation has the wrong shape"));
            }
            target.identity(n).add(&section.apply_mat(d).scale_coeff(&nu))
        }
        None => target.identity(n),
    };
    let lifted = PhiModule::new(target, b.mul(&twist))?;
    let lifted = match m_bar.height_tag() {
        Some(h) => lifted.with_height(h)?,
        None => lifted,
    };
    let back = base_change(&lifted, &RingMap::reduction(target, src)?)?;
    if !back.matrix().eq_at_precision(m_bar.matrix()) {
        return Err(Error::pre("lift does not reduce to the given module"));
    }
    Ok(lifted)
}

/// F_p-length of Λ[[u]]^n / B·Λ[[u]]^n for B of height ≤ h over a base killed by p.
pub fn cokernel_length(m: &PhiModule, h: u32) -> Result<usize> {
    let base = m.base();
    let ring = base.ring();
    if ring.torsion_exponent() != 1 {
        return Err(Error::pre("cokernel length is computed over bases killed by p"));
    }
    let eh = base.e() as i64 * h as i64;
    let n = m.rank();
    let d = ring.dim();
    let b = m.matrix();
    if b.precision() < eh {
        return Err(Error::indeterminate("φ-matrix not known modulo u^{eh}", b.precision()));
    }
    let f = SmallField::prime(base.p());
    let dim = n * eh as usize * d;
    let encode = |col: &[crate::base::Series]| {
        let mut v = vec![0u32; dim];
        for (i, s) in col.iter().enumerate() {
            for (deg, a) in s.terms() {
                if deg < eh {
                    for (k, &x) in a.iter().enumerate() {
                        v[(i * eh as usize + deg as usize) * d + k] = x as u32;
                    }
                }
            }
        }
        v
    };
    let mut image = Echelon::zero(dim);
    for j in 0..n {
        for deg in 0..eh {
            for k in 0..d {
                let mut c = ring.zero();
                c[k] = 1;
                let x = base.monomial(deg, &c);
                let col: Vec<_> = (0..n).map(|i| b.get(i, j).mul(&x)).collect();
                image.insert(&f, encode(&col));
            }
        }
    }
    Ok(dim - image.rank())
}
