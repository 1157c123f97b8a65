//! Restriction of scalars from Λ((u)) to ℓ((u)), ℓ the residue field of Λ.
//!
//! Λ = ℓ ⊗ (nilpotent part) has the ℓ-basis of nilpotent monomials ν_m; a Λ-vector of
//! length n becomes an ℓ-vector of length n·nil_dim with coordinate (i, m) at i·nil_dim + m.

use std::sync::Arc;

use crate::base::{CoeffRing, FrobeniusBase, GenKind, Mat, Series, SmallField};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ScalarRestriction {
    source: Arc<CoeffRing>,
    field_ring: Arc<CoeffRing>,
    field: SmallField,
    sigma: Vec<u32>,
    sigma_inv: Vec<u32>,
    field_dim: usize,
    nil_dim: usize,
    cap: i64,
    q: u64,
}

impl ScalarRestriction {
    pub fn new(base: &FrobeniusBase) -> Result<ScalarRestriction> {
        let ring = base.ring();
        if ring.torsion_exponent() != 1 || ring.generator_named("t").is_some() {
            return Err(Error::pre("lattice computations need a base killed by the uniformizer (N = 1)"));
        }
        let field_ring = ring.field_part();
        let gens = field_ring.generators();
        if gens.len() > 1 {
            return Err(Error::pre("the residue ring of Λ must be a field"));
        }
        let modulus = gens.first().map_or(vec![0, 1], |g| g.relation.iter().map(|&c| c % ring.p()).collect());
        let field = SmallField::with_modulus(ring.p(), modulus);
        let field_dim = field_ring.dim();
        let size = field.size();
        let sigma: Vec<u32> = (0..size)
            .map(|a| field.from_digits(&field_ring.frobenius(&field.digits(a))))
            .collect();
        let mut sigma_inv = vec![0u32; size as usize];
        for (a, &s) in sigma.iter().enumerate() {
            sigma_inv[s as usize] = a as u32;
        }
        Ok(ScalarRestriction {
            source: ring.clone(),
            nil_dim: ring.dim() / field_dim,
            field_ring: Arc::new(field_ring),
            field,
            sigma,
            sigma_inv,
            field_dim,
            cap: base.precision(),
            q: base.q(),
        })
    }

    pub fn source(&self) -> &Arc<CoeffRing> {
        &self.source
    }

    /// ℓ as a coefficient ring, for series arithmetic.
    pub fn field_ring(&self) -> &Arc<CoeffRing> {
        &self.field_ring
    }

    /// ℓ with table arithmetic, for linear algebra.
    pub fn field(&self) -> &SmallField {
        &self.field
    }

    pub fn nil_dim(&self) -> usize {
        self.nil_dim
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sigma(&self, a: u32) -> u32 {
        self.sigma[a as usize]
    }

    pub fn sigma_inv(&self, a: u32) -> u32 {
        self.sigma_inv[a as usize]
    }

    pub fn to_field(&self, a: &[u64]) -> u32 {
        self.field.from_digits(a)
    }

    pub fn from_field(&self, a: u32) -> Vec<u64> {
        self.field.digits(a)
    }

    /// Multiplication by `a` on Λ as a nil_dim × nil_dim matrix of ℓ-elements.
    fn elem_block(&self, a: &[u64]) -> Vec<Vec<Vec<u64>>> {
        let (nd, dl) = (self.nil_dim, self.field_dim);
        let mut out = vec![vec![vec![0u64; dl]; nd]; nd];
        for m in 0..nd {
            let mut basis = self.source.zero();
            basis[dl * m] = 1;
            let prod = self.source.mul(a, &basis);
            for (mp, row) in out.iter_mut().enumerate() {
                row[m] = prod[dl * mp..dl * mp + dl].to_vec();
            }
        }
        out
    }

    fn series_block(&self, s: &Series) -> Vec<Vec<Series>> {
        let nd = self.nil_dim;
        let lo = s.low_degree();
        let hi = s.high_degree();
        let len = if s.is_zero() { 0 } else { (hi - lo + 1).max(0) as usize };
        let mut coeffs = vec![vec![vec![vec![0u64; self.field_dim]; len]; nd]; nd];
        for (deg, a) in s.terms() {
            let blk = self.elem_block(&a);
            for (r, row) in blk.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    coeffs[r][c][(deg - lo) as usize] = x.clone();
                }
            }
        }
        coeffs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cs| Series::from_coeffs(&self.field_ring, self.cap, lo, cs, s.precision()))
                    .collect()
            })
            .collect()
    }

    /// The ℓ((u))-matrix of a Λ((u))-matrix.
    pub fn restrict_mat(&self, m: &Mat) -> Mat {
        let nd = self.nil_dim;
        let mut out = Mat::zero(&self.field_ring, self.cap, m.rows() * nd, m.cols() * nd);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let blk = self.series_block(m.get(i, j));
                for (r, row) in blk.into_iter().enumerate() {
                    for (c, s) in row.into_iter().enumerate() {
                        out.set(i * nd + r, j * nd + c, s);
                    }
                }
            }
        }
        out
    }

    /// Multiplication by each nilpotent generator on ℓ((u))^{n·nil_dim}.
    pub fn nilpotent_operators(&self, n: usize) -> Vec<Mat> {
        self.source
            .generators()
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind == GenKind::Nilpotent)
            .map(|(v, _)| {
                let s = Series::constant(&self.source, self.cap, &self.source.gen(v));
                let one = Mat::identity(&self.source, self.cap, n);
                self.restrict_mat(&one.scale(&s))
            })
            .collect()
    }

    /// Inverse of restriction on vectors: groups ℓ-coordinates back into Λ-entries.
    pub fn lift_vector(&self, v: &[Series]) -> Vec<Series> {
        let (nd, dl) = (self.nil_dim, self.field_dim);
        v.chunks(nd)
            .map(|chunk| {
                let mut acc = Series::zero(&self.source, self.cap);
                for (m, s) in chunk.iter().enumerate() {
                    let moved = s.map_coeffs(&self.source, |a| {
                        let mut out = vec![0u64; dl * nd];
                        out[dl * m..dl * m + dl].copy_from_slice(a);
                        out
                    });
                    acc = acc.add(&moved);
                }
                acc
            })
            .collect()
    }

    /// Columns of an ℓ-matrix lifted to Λ-vectors.
    pub fn lift_columns(&self, m: &Mat) -> Mat {
        let cols: Vec<Vec<Series>> = (0..m.cols()).map(|j| self.lift_vector(&m.column(j))).collect();
        let rows = m.rows() / self.nil_dim;
        Mat::from_fn(rows, m.cols(), |i, j| cols[j][i].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec, CoeffKind};

    #[test]
    fn dual_numbers_restrict_to_two_by_two() {
        let b = make_base(BaseSpec::standard_mixed(2, 2, 1, 16).with_coeffs(CoeffKind::Dual(1))).unwrap();
        let r = ScalarRestriction::new(&b).unwrap();
        assert_eq!(r.nil_dim(), 2);
        let eps = b.constant(&b.eps().unwrap());
        let a = b.u_pow(2).add(&eps.shift(-1));
        let m = r.restrict_mat(&Mat::scalar(&a, 1));
        // columns: α·e = u² e + u^{-1} εe, α·εe = u² εe
        assert_eq!(m.get(0, 0).terms(), vec![(2, vec![1])]);
        assert!(m.get(0, 1).is_zero());
        assert_eq!(m.get(1, 0).terms(), vec![(-1, vec![1])]);
        assert_eq!(m.get(1, 1).terms(), vec![(2, vec![1])]);
        let lifted = r.lift_columns(&m);
        assert!(lifted.get(0, 0).eq_at_precision(&a));
    }

    #[test]
    fn residue_frobenius_on_f4() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 1, 16).with_residue_degree(2)).unwrap();
        let r = ScalarRestriction::new(&b).unwrap();
        for a in 0..4 {
            assert_eq!(r.sigma(r.sigma(a)), a);
            assert_eq!(r.sigma_inv(r.sigma(a)), a);
            assert_eq!(r.sigma(a), r.field().pow(a, 2));
        }
    }

    #[test]
    fn rejects_higher_torsion() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 2, 16)).unwrap();
        assert!(ScalarRestriction::new(&b).is_err());
    }
}
