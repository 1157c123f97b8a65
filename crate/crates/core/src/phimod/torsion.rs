//! Torsion modules as isogeny cokernels, and images of lattices under surjections.

use super::{height_le, Height, PhiModule};
use crate::base::{FrobeniusBase, Mat, Series};
use crate::error::{Error, Result};

/// ⊕ 𝔖/p^{a_i} with an induced φ-matrix; row i of the matrix is meaningful modulo p^{a_i}.
#[derive(Clone, Debug)]
pub struct TorsionPhiModule {
    pub base: FrobeniusBase,
    pub exponents: Vec<u32>,
    pub matrix: Mat,
}

impl TorsionPhiModule {
    pub fn is_zero(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.exponents.len()
    }
}

fn p_valuation(s: &Series) -> Option<u32> {
    let ring = s.ring();
    s.terms().iter().filter_map(|(_, a)| ring.p_valuation(a)).min()
}

fn div_p_power(s: &Series, k: u32) -> Series {
    let ring = s.ring().clone();
    s.map_coeffs(&ring, |a| ring.div_p_power(a, k).expect("divisible"))
}

/// Cokernel of a φ-compatible f: 𝔐₁ → 𝔐₀ as ⊕ 𝔖/p^{a_i}, via a Smith-type reduction
/// whose pivots have the shape p^a·unit.
pub fn isogeny_cokernel(f: &Mat, m1: &PhiModule, m0: &PhiModule) -> Result<TorsionPhiModule> {
    let base = m0.base();
    let n = m0.rank();
    if f.rows() != n || f.cols() != m1.rank() || m1.rank() != n {
        return Err(Error::pre("isogeny must be a square map between modules of equal rank"));
    }
    let lhs = m0.matrix().mul(&base.sigma_mat(f));
    let rhs = f.mul(m1.matrix());
    if !lhs.eq_at_precision(&rhs) {
        return Err(Error::pre("map is not φ-compatible: B₀·σ(f) ≠ f·B₁"));
    }
    let ring = base.ring().clone();
    let nt = base.torsion_level();
    let mut a = f.clone();
    // U with f = U·D·V; we track U directly through the inverse row operations
    let mut u_mat = base.identity(n);
    let mut exps = vec![0u32; n];
    for k in 0..n {
        // minimal p-content among the remaining block
        let mut best: Option<(u32, usize, usize)> = None;
        let mut min_content = u32::MAX;
        for i in k..n {
            for j in k..n {
                if let Some(v) = p_valuation(a.get(i, j)) {
                    min_content = min_content.min(v);
                }
            }
        }
        if min_content == u32::MAX {
            return Err(Error::pre(format!("cokernel is not certified to be killed by p^{nt}; raise the torsion level")));
        }
        for i in k..n {
            for j in k..n {
                let x = a.get(i, j);
                if p_valuation(x) == Some(min_content) {
                    let y = div_p_power(x, min_content);
                    if ring.is_unit(&y.coeff(0)) && y.is_integral() && best.is_none() {
                        best = Some((min_content, i, j));
                    }
                }
            }
        }
        let Some((content, pi, pj)) = best else {
            return Err(Error::pre("cokernel is not of the shape ⊕𝔖/p^a (no p^a·unit pivot)"));
        };
        a.swap_rows(k, pi);
        u_mat.swap_cols(k, pi);
        a.swap_cols(k, pj);
        let pivot_unit = div_p_power(a.get(k, k), content);
        let w = pivot_unit.invert().map_err(|e| Error::pre(format!("pivot not a unit: {e}")))?;
        // row k ← w·row k; U ← U·diag(w^{-1})
        a.scale_row(k, &w);
        u_mat.scale_col(k, &pivot_unit);
        for i in 0..n {
            if i == k {
                continue;
            }
            let z = a.get(i, k).clone();
            if z.is_zero() {
                continue;
            }
            let c = div_p_power(&z, content);
            a.sub_row_multiple(i, k, &c);
            // inverse of the row operation: column k of U gains c·column i
            let mut col_add = base.zero_mat(n, 1);
            for r in 0..n {
                col_add.set(r, 0, u_mat.get(r, i).mul(&c));
            }
            for r in 0..n {
                let v = u_mat.get(r, k).add(col_add.get(r, 0));
                u_mat.set(r, k, v);
            }
        }
        for j in 0..n {
            if j == k {
                continue;
            }
            let z = a.get(k, j).clone();
            if z.is_zero() {
                continue;
            }
            let c = div_p_power(&z, content);
            a.sub_col_multiple(j, k, &c);
        }
        if content >= nt {
            return Err(Error::pre(format!("cokernel has exponent {content} ≥ torsion level {nt}")));
        }
        exps[k] = content;
    }
    let uinv = u_mat.inverse_laurent().map_err(|e| Error::pre(format!("basis change not invertible: {e}")))?;
    let b_new = uinv.mul(m0.matrix()).mul(&base.sigma_mat(&u_mat));
    let keep: Vec<usize> = (0..n).filter(|&i| exps[i] > 0).collect();
    let modulus = |s: &Series, k: u32| -> Series {
        let pk = ring.p().pow(k);
        s.map_coeffs(&ring, |c| c.iter().map(|x| x % pk).collect())
    };
    // well-definedness: p^{a_j}·(column j) must vanish modulo p^{a_i} in row i
    for &i in &keep {
        for &j in &keep {
            let t = b_new.get(i, j).scale_int(ring.p().pow(exps[j]) as i64);
            if !modulus(&t, exps[i]).is_zero() {
                return Err(Error::pre("induced φ on the cokernel is not well defined"));
            }
        }
    }
    let matrix = Mat::from_fn(keep.len(), keep.len(), |i, j| modulus(b_new.get(keep[i], keep[j]), exps[keep[i]]));
    let exponents = keep.iter().map(|&i| exps[i]).collect();
    Ok(TorsionPhiModule { base: base.clone(), exponents, matrix })
}

/// Image lattice f(𝔐) and kernel lattice 𝔐 ∩ ker f for a φ-compatible surjection.
#[derive(Clone, Debug)]
pub struct ImageClosure {
    pub image: PhiModule,
    pub kernel: Option<PhiModule>,
    /// Columns: a basis of f(𝔐) in the target's coordinates.
    pub image_basis: Mat,
    /// Columns: a basis of the kernel lattice in the source's coordinates.
    pub kernel_basis: Option<Mat>,
}

/// `target_phi` is the target's φ-matrix over Λ((u)); `map` is n″×n with
/// target_phi·σ(map) = map·B. Needs a coefficient field (Λ[[u]] a discrete valuation ring).
pub fn image_closure(m: &PhiModule, target_phi: &Mat, map: &Mat) -> Result<ImageClosure> {
    let base = m.base();
    let ring = base.ring();
    if ring.torsion_exponent() != 1 || ring.generators().iter().any(|g| g.kind == crate::base::GenKind::Nilpotent) {
        return Err(Error::pre("image closure needs a coefficient field"));
    }
    let n = m.rank();
    let n2 = target_phi.rows();
    if map.rows() != n2 || map.cols() != n {
        return Err(Error::pre("map has the wrong shape"));
    }
    let lhs = target_phi.mul(&base.sigma_mat(map));
    let rhs = map.mul(m.matrix());
    if !lhs.eq_at_precision(&rhs) {
        return Err(Error::pre("map is not φ-compatible"));
    }
    // column echelon over the valuation ring: G·V = [H | 0]
    let mut g = map.clone();
    let mut v = base.identity(n);
    let mut c = 0;
    for row in 0..n2 {
        if c == n {
            break;
        }
        let mut best: Option<(i64, usize)> = None;
        for j in c..n {
            if let Some(val) = g.get(row, j).valuation() {
                if best.map_or(true, |(bv, _)| val < bv) {
                    best = Some((val, j));
                }
            }
        }
        let Some((_, pj)) = best else { continue };
        g.swap_cols(c, pj);
        v.swap_cols(c, pj);
        let pivot = g.get(row, c).clone();
        for j in c + 1..n {
            let x = g.get(row, j).clone();
            if x.is_zero() {
                continue;
            }
            let q = x.mul(&pivot.invert_laurent().map_err(|e| Error::pre(e.to_string()))?);
            g.sub_col_multiple(j, c, &q);
            v.sub_col_multiple(j, c, &q);
        }
        c += 1;
    }
    if c != n2 {
        return Err(Error::pre("map is not surjective after inverting u"));
    }
    let h = Mat::from_fn(n2, n2, |i, j| g.get(i, j).clone());
    let hinv = h.inverse_laurent().map_err(|e| Error::pre(e.to_string()))?;
    let b_img = hinv.mul(target_phi).mul(&base.sigma_mat(&h));
    if !b_img.is_integral() {
        return Err(Error::pre("image is not φ-stable"));
    }
    let image = PhiModule::new(base, b_img)?;
    let (kernel, kernel_basis) = if n > n2 {
        let k = Mat::from_fn(n, n - n2, |i, j| v.get(i, n2 + j).clone());
        let vinv = v.inverse_laurent().map_err(|e| Error::pre(e.to_string()))?;
        let full = vinv.mul(m.matrix()).mul(&base.sigma_mat(&k));
        for i in 0..n2 {
            for j in 0..n - n2 {
                if !full.get(i, j).is_zero() {
                    return Err(Error::pre("kernel is not φ-stable"));
                }
            }
        }
        let bk = Mat::from_fn(n - n2, n - n2, |i, j| full.get(n2 + i, j).clone());
        (Some(PhiModule::new(base, bk)?), Some(k))
    } else {
        (None, None)
    };
    let tag = m.height_tag();
    let tag_ok = |x: &PhiModule| -> Result<Option<u32>> {
        match tag {
            Some(hh) => match height_le(x, hh)? {
                Height::Within { .. } => Ok(Some(hh)),
                Height::Exceeds { obstruction } => Err(Error::pre(format!("subquotient exceeds height {hh}: {obstruction}"))),
            },
            None => Ok(None),
        }
    };
    let image = PhiModule { height: tag_ok(&image)?, ..image };
    let kernel = match kernel {
        Some(kk) => Some(PhiModule { height: tag_ok(&kk)?, ..kk }),
        None => None,
    };
    Ok(ImageClosure { image, kernel, image_basis: h, kernel_basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec};
    use crate::phimod::twist_module;

    #[test]
    fn p_times_identity_on_a_twist() {
        let b = make_base(BaseSpec::standard_mixed(3, 1, 2, 24)).unwrap();
        let t = twist_module(1, 1, &b).unwrap();
        let f = Mat::scalar(&b.int(3), 1);
        let coker = isogeny_cokernel(&f, &t, &t).unwrap();
        assert_eq!(coker.exponents, vec![1]);
        let pmod3 = b.big_p().map_coeffs(b.ring(), |c| c.iter().map(|x| x % 3).collect());
        assert!(coker.matrix.get(0, 0).eq_at_precision(&pmod3));
        let id = isogeny_cokernel(&b.identity(1), &t, &t).unwrap();
        assert!(id.is_zero());
    }

    #[test]
    fn diagonal_isogeny() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 3, 24)).unwrap();
        let m = PhiModule::new(&b, b.identity(2)).unwrap();
        let f = Mat::diagonal(&[b.int(2), b.int(4)]);
        let coker = isogeny_cokernel(&f, &m, &m).unwrap();
        let mut e = coker.exponents.clone();
        e.sort();
        assert_eq!(e, vec![1, 2]);
    }

    #[test]
    fn projection_onto_second_coordinate() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 1, 24)).unwrap();
        let m = PhiModule::new(&b, Mat::diagonal(&[b.one(), b.big_p().clone()])).unwrap().with_height(1).unwrap();
        let map = Mat::from_rows(vec![vec![b.zero(), b.one()]]);
        let target = Mat::scalar(b.big_p(), 1);
        let ic = image_closure(&m, &target, &map).unwrap();
        assert!(ic.image.matrix().get(0, 0).eq_at_precision(b.big_p()));
        assert!(ic.kernel.unwrap().matrix().get(0, 0).eq_at_precision(&b.one()));
    }
}
