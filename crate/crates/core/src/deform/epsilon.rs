//! Lattices over F[ε]((u)) through their reductions: a Λ[[u]]-stable lattice L sits in
//! 0 → D → L → A → 0 with A = L mod ε, εD-part D ⊇ A, and admits a basis g_i with
//! L = Σ Λ[[u]]·g_i + Σ F[[u]]·ε·u^{-r_i}·g_i.

use crate::base::{CoeffKind, FrobeniusBase, Mat, Series};
use crate::error::{Error, Result};
use crate::prolong::{EtaleTorsionModule, Lattice};

#[derive(Clone, Debug)]
pub struct EpsStableBasis {
    /// The lattice, in ℓ-coordinates of the ambient module.
    pub lattice: Lattice,
    /// Columns g_i as Λ((u))-vectors.
    pub g: Mat,
    /// r_i ≥ 0 with ε·u^{-r_i}·g_i ∈ L.
    pub exponents: Vec<i64>,
    /// G^{-1}·B·σ(G) = ᾱ + ε·β.
    pub alpha_tilde: Mat,
    pub alpha_bar: Mat,
    pub beta: Mat,
    /// Basis of L mod ε in ℓ-coordinates.
    pub reduction: Mat,
    /// Position of L mod ε among the prolongations of the reduced module.
    pub index: Option<usize>,
}

/// Diagonalizes X over ℓ[[u]]: returns (S, T, v) with S·X·T = diag(u^{v_i}), S and T unimodular,
/// keeping S^{-1} instead of S.
fn smith(x: &Mat) -> Result<(Mat, Mat, Vec<i64>)> {
    let n = x.rows();
    let ring = x.ring().clone();
    let cap = x.cap();
    let mut a = x.clone();
    let mut s_inv = Mat::identity(&ring, cap, n);
    let mut t = Mat::identity(&ring, cap, n);
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let mut best: Option<(i64, usize, usize)> = None;
        for i in k..n {
            for j in k..n {
                if let Some(v) = a.get(i, j).valuation() {
                    if best.map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, i, j)) = best else {
            return Err(Error::indeterminate("singular matrix in elementary divisor reduction", a.precision()));
        };
        a.swap_rows(k, i);
        s_inv.swap_cols(k, i);
        a.swap_cols(k, j);
        t.swap_cols(k, j);
        let unit = a.get(k, k).shift(-v).invert().map_err(|e| Error::indeterminate(e.to_string(), a.precision()))?;
        a.scale_col(k, &unit);
        t.scale_col(k, &unit);
        for r in 0..n {
            if r != k && !a.get(r, k).is_zero() {
                let f = a.get(r, k).shift(-v);
                a.sub_row_multiple(r, k, &f);
                // row_r -= f·row_k on the left corresponds to col_k += f·col_r on S^{-1}
                let neg = f.neg();
                s_inv.sub_col_multiple(k, r, &neg);
            }
        }
        for c in 0..n {
            if c != k && !a.get(k, c).is_zero() {
                let f = a.get(k, c).shift(-v);
                a.sub_col_multiple(c, k, &f);
                t.sub_col_multiple(c, k, &f);
            }
        }
        vals.push(v);
    }
    Ok((s_inv, t, vals))
}

fn block(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m.get(rows[i], cols[j]).clone())
}

/// The ε-stable basis of 𝔐⁺ for a module over a base with A = F_{p^a}[ε].
pub fn eps_stable_basis(m: &EtaleTorsionModule) -> Result<EpsStableBasis> {
    let base = m.base();
    let CoeffKind::Dual(a) = *base.coeffs() else {
        return Err(Error::pre("ε-stable bases need dual-number coefficients"));
    };
    let lattice = m.max_prolongation()?;
    eps_basis_of(m, &lattice, a)
}

fn eps_basis_of(m: &EtaleTorsionModule, lattice: &Lattice, a: usize) -> Result<EpsStableBasis> {
    let base = m.base();
    let r = m.restriction();
    let n = m.rank() / 2;
    let even: Vec<usize> = (0..n).map(|i| 2 * i).collect();
    let odd: Vec<usize> = (0..n).map(|i| 2 * i + 1).collect();
    let order: Vec<usize> = even.iter().chain(&odd).copied().collect();
    let h = lattice.basis();
    let gens: Vec<Vec<Series>> = (0..2 * n).map(|j| order.iter().map(|&i| h.get(i, j).clone()).collect()).collect();
    let hnf = crate::prolong::window::hermite(2 * n, &gens)?;
    let top: Vec<usize> = (0..n).collect();
    let bottom: Vec<usize> = (n..2 * n).collect();
    let a_blk = block(&hnf, &top, &top);
    let c_blk = block(&hnf, &bottom, &top);
    let d_blk = block(&hnf, &bottom, &bottom);
    let a_inv = a_blk.inverse_laurent().map_err(|e| Error::indeterminate(e.to_string(), a_blk.precision()))?;
    let (s_inv, _, vals) = smith(&a_inv.mul(&d_blk))?;
    let exponents: Vec<i64> = vals.iter().map(|v| -v).collect();
    if exponents.iter().any(|&e| e < 0) {
        return Err(Error::pre("lattice is not stable under ε"));
    }
    let lifted_a = a_blk.mul(&s_inv);
    let lifted_c = c_blk.mul(&s_inv);
    // back to interleaved ℓ-coordinates
    let ell = Mat::from_fn(2 * n, n, |i, j| if i % 2 == 0 { lifted_a.get(i / 2, j).clone() } else { lifted_c.get(i / 2, j).clone() });
    let g = r.lift_columns(&ell);
    let b = base_matrix(m)?;
    let g_inv = g.inverse_laurent().map_err(|e| Error::indeterminate(e.to_string(), g.precision()))?;
    let alpha_tilde = g_inv.mul(&b).mul(&base.sigma_mat(&g));
    let reduced = base.with_coeffs(CoeffKind::Field(a))?;
    let dl = reduced.ring().dim();
    let part = |s: &Series, k: usize| s.map_coeffs(reduced.ring(), |c| c[k * dl..(k + 1) * dl].to_vec());
    let alpha_bar = alpha_tilde.map(|s| part(s, 0));
    let beta = alpha_tilde.map(|s| part(s, 1));
    let index = reduced_index(&reduced, m, &a_blk)?;
    Ok(EpsStableBasis { lattice: lattice.clone(), g, exponents, alpha_tilde, alpha_bar, beta, reduction: a_blk, index })
}

/// The Λ((u))-matrix of the module, rebuilt from its ℓ-restriction.
fn base_matrix(m: &EtaleTorsionModule) -> Result<Mat> {
    let r = m.restriction();
    let n = m.rank() / r.nil_dim();
    // the restriction of a Λ-matrix has the image of e_j in column j·nil_dim
    let cols: Vec<usize> = (0..n).map(|j| j * r.nil_dim()).collect();
    let rows: Vec<usize> = (0..m.rank()).collect();
    Ok(r.lift_columns(&block(m.phi(), &rows, &cols)))
}

fn reduced_index(reduced: &FrobeniusBase, m: &EtaleTorsionModule, a_blk: &Mat) -> Result<Option<usize>> {
    let b = base_matrix(m)?;
    let dl = reduced.ring().dim();
    let b_bar = b.map(|s| s.map_coeffs(reduced.ring(), |c| c[..dl].to_vec()));
    let seed = a_blk.map(|s| s.map_coeffs(reduced.ring(), |c| c.to_vec()));
    let mbar = EtaleTorsionModule::with_lattice_seed(reduced, &b_bar, m.height(), seed.clone())?;
    let set = mbar.enumerate_prolongations()?;
    let target = Lattice::from_basis(&seed)?;
    Ok(set.lattices.iter().position(|l| *l == target))
}

/// Free rank-one lattices Λ[[u]]·g, g = u^s·(1 + ε·f) with |s| ≤ shift_bound and f a polar
/// part of order ≤ pole_bound, on which α is φ-stable of height ≤ h. Returns the generators g.
pub fn free_rank_one_lattices(base: &FrobeniusBase, alpha: &Series, h: u32, shift_bound: i64, pole_bound: i64) -> Result<Vec<Series>> {
    let CoeffKind::Dual(_) = base.coeffs() else {
        return Err(Error::pre("free lattice search needs dual-number coefficients"));
    };
    let ring = base.ring();
    let eps = base.eps().expect("dual numbers have ε");
    let dl = ring.dim() / 2;
    let field_elems: Vec<Vec<u64>> = ring.field_part().elements();
    let slots = pole_bound.max(0) as u32;
    let total = (field_elems.len() as u128).checked_pow(slots).unwrap_or(u128::MAX);
    if total > 1 << 20 {
        return Err(Error::Resource(format!("{total} polar parts exceed the search limit")));
    }
    let ph = base.p_power(h);
    let mut out = Vec::new();
    for s in -shift_bound..=shift_bound {
        for idx in 0..total {
            let mut f = base.zero();
            let mut t = idx;
            for k in 1..=pole_bound {
                let c = &field_elems[(t % field_elems.len() as u128) as usize];
                t /= field_elems.len() as u128;
                let mut coeff = ring.zero();
                coeff[..dl].copy_from_slice(c);
                f = f.add(&base.monomial(-k, &ring.mul(&coeff, &eps)));
            }
            let g = base.u_pow(s).mul(&base.one().add(&f));
            let Ok(g_inv) = g.invert_laurent() else { continue };
            let a2 = g_inv.mul(alpha).mul(&base.sigma(&g));
            if !a2.is_integral() {
                continue;
            }
            let Ok(a2_inv) = a2.invert_laurent() else { continue };
            if a2_inv.mul(&ph).is_integral() {
                out.push(g);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec};

    fn remark_instance() -> (FrobeniusBase, Series) {
        let b = make_base(BaseSpec::standard_mixed(2, 2, 1, 40).with_coeffs(CoeffKind::Dual(1))).unwrap();
        let eps = b.constant(&b.eps().unwrap());
        let alpha = b.big_p().add(&eps.shift(-1));
        (b, alpha)
    }

    #[test]
    fn dual_numbers_basis() {
        let (b, alpha) = remark_instance();
        let m = EtaleTorsionModule::with_diagonal_seed(&b, &Mat::scalar(&alpha, 1), 1, 3).unwrap();
        let e = eps_stable_basis(&m).unwrap();
        assert_eq!(e.exponents, vec![2]);
        assert_eq!(e.alpha_bar.get(0, 0).terms(), vec![(2, vec![1])]);
        assert_eq!(e.beta.get(0, 0).terms(), vec![(-1, vec![1])]);
        assert_eq!(e.index, Some(0));
    }

    #[test]
    fn no_free_lattice_for_the_dual_numbers_instance() {
        let (b, alpha) = remark_instance();
        assert!(free_rank_one_lattices(&b, &alpha, 1, 3, 8).unwrap().is_empty());
    }

    #[test]
    fn free_lattice_found_for_integral_alpha() {
        let b = make_base(BaseSpec::standard_mixed(2, 2, 1, 40).with_coeffs(CoeffKind::Dual(1))).unwrap();
        let found = free_rank_one_lattices(&b, b.big_p(), 1, 1, 2).unwrap();
        assert!(found.iter().any(|g| g.eq_at_precision(&b.one())));
    }

    #[test]
    fn smith_of_diagonal_mixed() {
        let b = make_base(BaseSpec::standard_mixed(3, 1, 1, 16)).unwrap();
        let x = b.mat_from_ints(&[vec![vec![0, 0, 1], vec![0, 1]], vec![vec![0, 1], vec![2]]]);
        let (_, _, v) = smith(&x).unwrap();
        let mut v = v;
        v.sort();
        assert_eq!(v, vec![0, 2]);
    }
}
