//! Lattices of bounded height inside étale φ-modules over Λ((u)) with pΛ = 0:
//! the maximal and minimal ones, and all of them when the gap between those is small.

pub mod oracle;
pub mod restrict;
pub mod window;

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::base::{Echelon, FrobeniusBase, Mat, Series};
use crate::error::{Error, Result};
pub use restrict::ScalarRestriction;
use window::{hermite, Engine, Window};

/// Default cap on |𝔐⁺/𝔐⁻| for enumeration; overridable with PHIMOD_MAX_QUOTIENT.
pub const DEFAULT_MAX_QUOTIENT: u128 = 1 << 16;

pub fn max_quotient() -> u128 {
    std::env::var("PHIMOD_MAX_QUOTIENT")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_QUOTIENT)
}

/// ⌈max_j min_i ord(α_ij) / (q − 1)⌉ for a φ-matrix α in the column convention.
pub fn denominator_bound(base: &FrobeniusBase, alpha: &Mat) -> Result<i64> {
    let mut worst = i64::MIN;
    for j in 0..alpha.cols() {
        let col_min = (0..alpha.rows()).filter_map(|i| alpha.get(i, j).valuation()).min();
        let Some(v) = col_min else {
            return Err(Error::pre(format!("column {j} of the φ-matrix vanishes")));
        };
        worst = worst.max(v);
    }
    Ok(div_ceil(worst, base.q() as i64 - 1))
}

fn div_ceil(a: i64, b: i64) -> i64 {
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

/// A lattice in the ambient ℓ((u))-coordinates, stored in Hermite normal form.
#[derive(Clone, Debug)]
pub struct Lattice {
    basis: Mat,
}

impl Lattice {
    pub fn from_generators(n: usize, gens: &[Vec<Series>]) -> Result<Lattice> {
        Ok(Lattice { basis: hermite(n, gens)? })
    }

    pub fn from_basis(basis: &Mat) -> Result<Lattice> {
        let cols: Vec<Vec<Series>> = (0..basis.cols()).map(|j| basis.column(j)).collect();
        Lattice::from_generators(basis.rows(), &cols)
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    /// Canonical key: (row, column, degree, coefficient digits) of every term.
    pub fn key(&self) -> Vec<i64> {
        let mut k = Vec::new();
        for i in 0..self.basis.rows() {
            for j in 0..self.basis.cols() {
                for (deg, a) in self.basis.get(i, j).terms() {
                    k.extend([i as i64, j as i64, deg]);
                    k.extend(a.iter().map(|&x| x as i64));
                }
            }
        }
        k
    }

    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        let inv = invert(&self.basis)?;
        Ok(inv.mul(&other.basis).is_integral())
    }

    /// Sum of the pivot exponents: the length of R/L against the coordinate lattice R.
    pub fn covolume(&self) -> i64 {
        (0..self.rank()).map(|i| self.basis.get(i, i).valuation().unwrap_or(0)).sum()
    }

    pub fn format(&self) -> String {
        self.basis.format()
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Lattice {}

fn invert(m: &Mat) -> Result<Mat> {
    m.inverse_laurent().map_err(|e| Error::indeterminate(format!("matrix inversion failed: {e}"), m.precision()))
}

/// An étale φ-module over Λ((u)) (pΛ = 0) restricted to ℓ((u)), with a known lattice
/// (the seed) that is φ-stable, Λ-stable and of height ≤ h.
#[derive(Clone, Debug)]
pub struct EtaleTorsionModule {
    base: FrobeniusBase,
    restriction: Arc<ScalarRestriction>,
    phi: Mat,
    nil: Vec<Mat>,
    seed: Mat,
    h: u32,
    p_scalar: Series,
}

/// Local data of a module in the coordinates of one lattice.
struct Coordinates {
    phi: Mat,
    p_power: Mat,
    nil: Vec<Mat>,
}

impl EtaleTorsionModule {
    /// The module with Λ((u))-matrix `matrix` and the standard lattice as seed.
    pub fn new(base: &FrobeniusBase, matrix: &Mat, h: u32) -> Result<EtaleTorsionModule> {
        let m = EtaleTorsionModule::unchecked(base, matrix, h)?;
        m.check_seed()?;
        Ok(m)
    }

    fn unchecked(base: &FrobeniusBase, matrix: &Mat, h: u32) -> Result<EtaleTorsionModule> {
        if !matrix.is_square() || matrix.ring() != base.ring() {
            return Err(Error::pre("φ-matrix must be square over the base ring"));
        }
        let r = Arc::new(ScalarRestriction::new(base)?);
        let phi = r.restrict_mat(matrix);
        let nil = r.nilpotent_operators(matrix.rows());
        let p_scalar = r.restrict_mat(&Mat::scalar(base.big_p(), 1)).get(0, 0).clone();
        let seed = Mat::identity(r.field_ring(), base.precision(), phi.rows());
        Ok(EtaleTorsionModule { base: base.clone(), restriction: r, phi, nil, seed, h, p_scalar })
    }

    /// The module with an explicit seed lattice, given by a basis in ℓ-coordinates.
    pub fn with_lattice_seed(base: &FrobeniusBase, matrix: &Mat, h: u32, seed: Mat) -> Result<EtaleTorsionModule> {
        EtaleTorsionModule::unchecked(base, matrix, h)?.with_seed(seed)
    }

    /// Same module with the seed given by a basis in ℓ-coordinates.
    pub fn with_seed(&self, seed: Mat) -> Result<EtaleTorsionModule> {
        let m = EtaleTorsionModule { seed, ..self.clone() };
        m.check_seed()?;
        Ok(m)
    }

    /// Like `new`, but searching a seed among diagonal lattices diag(u^{a_i}) with |a_i| ≤ bound.
    pub fn with_diagonal_seed(base: &FrobeniusBase, matrix: &Mat, h: u32, bound: i64) -> Result<EtaleTorsionModule> {
        let proto = EtaleTorsionModule::unchecked(base, matrix, h)?;
        let n = proto.rank();
        if n > 4 {
            return Err(Error::pre("diagonal seed search supports ℓ-rank at most 4"));
        }
        let ring = proto.restriction.field_ring().clone();
        for radius in 0..=bound {
            let mut exps = vec![-radius; n];
            loop {
                if exps.iter().any(|a| a.abs() == radius) {
                    let diag: Vec<Series> = exps.iter().map(|&a| Series::u_pow(&ring, base.precision(), a)).collect();
                    if let Ok(m) = proto.with_seed(Mat::diagonal(&diag)) {
                        return Ok(m);
                    }
                }
                // odometer over [-radius, radius]^n
                let mut k = 0;
                while k < n && exps[k] == radius {
                    exps[k] = -radius;
                    k += 1;
                }
                if k == n {
                    break;
                }
                exps[k] += 1;
            }
        }
        Err(Error::pre(format!("no diagonal lattice with exponents in [-{bound}, {bound}] is φ-stable of height ≤ {h}")))
    }

    pub fn base(&self) -> &FrobeniusBase {
        &self.base
    }

    pub fn restriction(&self) -> &ScalarRestriction {
        &self.restriction
    }

    /// ℓ-rank of the module.
    pub fn rank(&self) -> usize {
        self.phi.rows()
    }

    pub fn height(&self) -> u32 {
        self.h
    }

    /// φ-matrix in ambient ℓ-coordinates.
    pub fn phi(&self) -> &Mat {
        &self.phi
    }

    pub fn seed(&self) -> &Mat {
        &self.seed
    }

    fn eh(&self) -> i64 {
        self.base.e() as i64 * self.h as i64
    }

    fn coordinates(&self, g: &Mat) -> Result<Coordinates> {
        let q = self.base.q();
        let ginv = invert(g)?;
        let phi = ginv.mul(&self.phi).mul(&g.frobenius(q));
        let n = self.rank();
        let p_power = Mat::scalar(&self.p_scalar.pow(self.h as u64), n);
        let nil = self.nil.iter().map(|e| ginv.mul(e).mul(g)).collect();
        Ok(Coordinates { phi, p_power, nil })
    }

    fn check_seed(&self) -> Result<()> {
        let c = self.coordinates(&self.seed)?;
        if !c.phi.is_integral() {
            return Err(Error::pre("seed lattice is not φ-stable"));
        }
        if c.nil.iter().any(|e| !e.is_integral()) {
            return Err(Error::pre("seed lattice is not stable under the coefficient ring"));
        }
        let inv = invert(&c.phi)?;
        if !inv.mul(&c.p_power).is_integral() {
            return Err(Error::pre(format!("seed lattice has height above {}", self.h)));
        }
        Ok(())
    }

    /// Checks a lattice is a prolongation (φ-stable, Λ-stable, height ≤ h).
    pub fn is_prolongation(&self, l: &Lattice) -> Result<bool> {
        let c = self.coordinates(l.basis())?;
        if !c.phi.is_integral() || c.nil.iter().any(|e| !e.is_integral()) {
            return Ok(false);
        }
        let Ok(inv) = c.phi.inverse_laurent() else {
            return Ok(false);
        };
        Ok(inv.mul(&c.p_power).is_integral())
    }

    /// φ-matrix of the lattice in its Hermite basis.
    pub fn lattice_phi(&self, l: &Lattice) -> Result<Mat> {
        Ok(self.coordinates(l.basis())?.phi)
    }

    /// The dual module Hom(M, ℓ((u))) twisted by P^h, paired by Σ x_i y_i; lattices go to
    /// dual lattices, reversing inclusions and preserving height ≤ h.
    pub fn dual(&self) -> Result<EtaleTorsionModule> {
        let ph = self.p_scalar.pow(self.h as u64);
        let phi = invert(&self.phi)?.transpose().scale(&ph);
        let nil = self.nil.iter().map(Mat::transpose).collect();
        let seed = invert(&self.seed)?.transpose();
        let m = EtaleTorsionModule { phi, nil, seed, ..self.clone() };
        m.check_seed()?;
        Ok(m)
    }

    /// The lattice dual to `l` under the pairing used by `dual`.
    pub fn dual_lattice(&self, l: &Lattice) -> Result<Lattice> {
        Lattice::from_basis(&invert(l.basis())?.transpose())
    }

    /// 𝔐⁺: the largest prolongation, by descending saturation from u^{-B}·seed.
    pub fn max_prolongation(&self) -> Result<Lattice> {
        let eh = self.eh();
        let q = self.base.q() as i64;
        let start = div_ceil(eh, q - 1) + eh;
        let c = self.coordinates(&self.seed)?;
        let win = Window { lo: -q * start, hi: eh, n: self.rank() };
        let engine = Engine::new(&self.restriction, win, -start, &c.phi, &c.p_power, &c.nil)?;
        let f = self.restriction.field();
        let seed_w = win.standard(f, 0);
        let mut l = win.standard(f, -start);
        loop {
            let stable = engine.phi_preimage(&l, &l);
            let image = engine.phi_span(&l);
            let bounded = engine.p_power_preimage(&l, &image);
            let next = stable.intersect(f, &bounded);
            if next == l {
                break;
            }
            l = next;
        }
        if !l.contains_space(f, &seed_w) {
            return Err(Error::pre("saturation lost the seed lattice; the seed is not a prolongation"));
        }
        if win.lowest_degree(&l).is_some_and(|d| d <= -start) {
            return Err(Error::Resource(format!("interiority bound B = {start} too small; increase B")));
        }
        self.to_ambient(&engine, &l)
    }

    fn to_ambient(&self, engine: &Engine, l: &Echelon) -> Result<Lattice> {
        let local = hermite(self.rank(), &engine.generators(l))?;
        Lattice::from_basis(&self.seed.mul(&local))
    }

    /// 𝔐⁻ as the dual of the maximal prolongation of the dual module.
    pub fn min_prolongation(&self) -> Result<Lattice> {
        let d = self.dual()?;
        let mx = d.max_prolongation()?;
        d.dual_lattice(&mx)
    }

    /// All prolongations, between 𝔐⁻ and 𝔐⁺.
    pub fn enumerate_prolongations(&self) -> Result<ProlongationSet> {
        let mn = self.min_prolongation()?;
        let mx = self.max_prolongation()?;
        let g = mn.basis().clone();
        let c = self.coordinates(&g)?;
        let rel = invert(&g)?.mul(mx.basis());
        let depth = (-rel.valuation().unwrap_or(0)).max(0);
        let eh = self.eh();
        let q = self.base.q() as i64;
        let win = Window { lo: -q * depth, hi: eh.max(1), n: self.rank() };
        let engine = Engine::new(&self.restriction, win, -depth, &c.phi, &c.p_power, &c.nil)?;
        let f = self.restriction.field();
        let bottom = win.standard(f, 0);
        let mut top = bottom.clone();
        let mut complement = Vec::new();
        for j in 0..rel.cols() {
            let v = win.encode(&self.restriction, &rel.column(j))?;
            let mut w = v;
            while w.iter().any(|&x| x != 0) {
                if top.insert(f, w.clone()) {
                    complement.push(w.clone());
                }
                w = win.times_u(&w);
            }
        }
        let gap = complement.len();
        let size = (f.size() as u128).checked_pow(gap as u32).unwrap_or(u128::MAX);
        let cap = max_quotient();
        if size > cap {
            return Err(Error::Resource(format!("|𝔐⁺/𝔐⁻| = {}^{gap} exceeds the cap {cap} (PHIMOD_MAX_QUOTIENT)", f.size())));
        }
        // projective points of 𝔐⁺/𝔐⁻: coefficient vectors with leading coefficient 1
        let fs = f.size() as u128;
        let mut reps: Vec<Vec<u32>> = Vec::new();
        for lead in 0..gap {
            let free = gap - lead - 1;
            for idx in 0..fs.pow(free as u32) {
                let mut coeffs = vec![0u32; gap];
                coeffs[lead] = 1;
                let mut t = idx;
                for c in coeffs.iter_mut().skip(lead + 1) {
                    *c = (t % fs) as u32;
                    t /= fs;
                }
                reps.push(crate::base::field::combine(f, &complement, &coeffs, win.len()));
            }
        }
        let cyclic: BTreeSet<Echelon> = reps.par_iter().map(|v| engine.closure(&bottom, std::slice::from_ref(v))).collect::<Vec<_>>().into_iter().collect();
        let cyclic: Vec<Echelon> = cyclic.into_iter().collect();
        let mut stable: BTreeSet<Echelon> = BTreeSet::new();
        stable.insert(bottom.clone());
        let mut work: Vec<Echelon> = vec![bottom.clone()];
        while let Some(x) = work.pop() {
            for cy in &cyclic {
                let s = x.sum(f, cy);
                if stable.insert(s.clone()) {
                    work.push(s);
                }
            }
        }
        let mut found: Vec<Echelon> = stable.into_iter().filter(|l| engine.height_holds(l)).collect();
        found.sort_by_key(|l| (l.rank(), l.key()));
        let closed = found.iter().all(|a| {
            found.iter().all(|b| {
                let s = a.sum(f, b);
                let i = a.intersect(f, b);
                found.contains(&s) && found.contains(&i)
            })
        });
        let mut inclusions = Vec::new();
        for (i, a) in found.iter().enumerate() {
            for (j, b) in found.iter().enumerate() {
                if i != j && b.contains_space(f, a) {
                    inclusions.push((i, j));
                }
            }
        }
        let lattices = found
            .iter()
            .map(|l| {
                let local = hermite(self.rank(), &engine.generators(l))?;
                Lattice::from_basis(&g.mul(&local))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProlongationSet { max: mx, min: mn, lattices, inclusions, closed, quotient_dim: gap })
    }
}

#[derive(Clone, Debug)]
pub struct ProlongationSet {
    pub max: Lattice,
    pub min: Lattice,
    /// Ordered from 𝔐⁻ upwards (by ℓ-dimension over 𝔐⁻, then canonical key).
    pub lattices: Vec<Lattice>,
    /// Pairs (i, j) with lattices[i] ⊊ lattices[j].
    pub inclusions: Vec<(usize, usize)>,
    /// Whether the set is closed under sums and intersections.
    pub closed: bool,
    /// dim_ℓ 𝔐⁺/𝔐⁻.
    pub quotient_dim: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec, CoeffKind};

    fn rank_one(p: u64, e: usize, alpha: &[i64], h: u32) -> (FrobeniusBase, EtaleTorsionModule) {
        let b = make_base(BaseSpec::standard_mixed(p, e, 1, 32)).unwrap();
        let m = EtaleTorsionModule::new(&b, &Mat::scalar(&b.from_ints(alpha), 1), h).unwrap();
        (b, m)
    }

    #[test]
    fn denominator_bound_examples() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 1, 16)).unwrap();
        assert_eq!(denominator_bound(&b, &Mat::scalar(&b.u_pow(1), 1)).unwrap(), 1);
        assert_eq!(denominator_bound(&b, &b.identity(2)).unwrap(), 0);
        let b3 = make_base(BaseSpec::standard_mixed(3, 2, 1, 16)).unwrap();
        let d = Mat::diagonal(&[b3.one(), b3.u_pow(2)]);
        assert_eq!(denominator_bound(&b3, &d).unwrap(), 1);
        let z = b.zero_mat(1, 1);
        assert!(denominator_bound(&b, &z).is_err());
    }

    #[test]
    fn unit_root_rank_one_over_f2() {
        // α = 1, e = 2, h = 1: u^a R works for 0 ≤ a ≤ 2
        let (_, m) = rank_one(2, 2, &[1], 1);
        let set = m.enumerate_prolongations().unwrap();
        assert_eq!(set.lattices.len(), 3);
        assert_eq!(set.max.covolume(), 0);
        assert_eq!(set.min.covolume(), 2);
        assert!(set.closed);
        for l in &set.lattices {
            assert!(m.is_prolongation(l).unwrap());
        }
    }

    #[test]
    fn unit_root_rank_one_over_f3_is_rigid() {
        let (_, m) = rank_one(3, 1, &[1], 1);
        let set = m.enumerate_prolongations().unwrap();
        assert_eq!(set.lattices.len(), 1);
        assert_eq!(set.max, set.min);
    }

    #[test]
    fn seed_outside_height_is_refused() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 1, 32)).unwrap();
        // α = u² has height 2 > 1 on the standard lattice
        assert!(EtaleTorsionModule::new(&b, &Mat::scalar(&b.u_pow(2), 1), 1).is_err());
    }

    #[test]
    fn dual_numbers_example_matches_brute_force() {
        let b = make_base(BaseSpec::standard_mixed(2, 2, 1, 40).with_coeffs(CoeffKind::Dual(1))).unwrap();
        let eps = b.constant(&b.eps().unwrap());
        let alpha = b.big_p().add(&eps.shift(-1));
        let m = EtaleTorsionModule::with_diagonal_seed(&b, &Mat::scalar(&alpha, 1), 1, 3).unwrap();
        let set = m.enumerate_prolongations().unwrap();
        let brute = oracle::brute_force_prolongations(&m, 3).unwrap();
        let mut a: Vec<Vec<i64>> = set.lattices.iter().map(Lattice::key).collect();
        let mut c: Vec<Vec<i64>> = brute.iter().map(Lattice::key).collect();
        a.sort();
        c.sort();
        assert_eq!(a, c);
        for l in &set.lattices {
            assert!(set.max.contains(l).unwrap());
            assert!(l.contains(&set.min).unwrap());
        }
    }

    #[test]
    fn dual_numbers_example_has_a_single_lattice() {
        // span{e, u^{-k}εe} is φ-stable of height ≤ 1 only for k = 2 when p = e = 2
        let b = make_base(BaseSpec::standard_mixed(2, 2, 1, 40).with_coeffs(CoeffKind::Dual(1))).unwrap();
        let eps = b.constant(&b.eps().unwrap());
        let alpha = b.big_p().add(&eps.shift(-1));
        let m = EtaleTorsionModule::with_diagonal_seed(&b, &Mat::scalar(&alpha, 1), 1, 3).unwrap();
        let set = m.enumerate_prolongations().unwrap();
        assert_eq!(set.lattices.len(), 1);
        let r = m.restriction().field_ring();
        let expected = Lattice::from_basis(&Mat::diagonal(&[Series::one(r, 40), Series::u_pow(r, 40, -2)])).unwrap();
        assert_eq!(set.max, expected);
        let wrong = Lattice::from_basis(&Mat::diagonal(&[Series::one(r, 40), Series::u_pow(r, 40, -1)])).unwrap();
        assert!(!m.is_prolongation(&wrong).unwrap());
    }
}
