//! Breuil modules attached to φ-modules of height ≤ 1 in mixed characteristic: 𝓜 = S ⊗_{σ} 𝔐,
//! its Fil¹, φ₁ = φ/p on Fil¹, and the monodromy operator N_𝓜 obtained as the limit of a
//! contracting recursion.
//!
//! Coordinates: ê_j = 1 ⊗ e_j. With the column convention for B, φ_𝓜(x) = σ(B)·σ(x) and
//! x ∈ Fil¹𝓜 iff B·x ∈ Fil¹S. The N-operator is stored in the basis f_i = φ₁(m_i).

mod dvr;
pub mod sring;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{CoeffKind, FrobeniusBase, Mode};
use crate::error::{Error, Result};
use crate::phimod::{height_le, PhiModule};
use dvr::Dvr;
pub use sring::{SElem, SMat, SRing};
use sring::{column, from_columns, mat_inverse, mat_map, mat_mul, mat_vec};

#[derive(Clone, Debug)]
pub struct BreuilModule {
    pub source: PhiModule,
    pub ring: SRing,
    /// φ-matrix of 𝔐 lifted to S.
    pub b: SMat,
    pub rank: usize,
    /// Number of Fil¹ generators of the form P·(basis vector).
    pub split_index: usize,
    /// The arranging change of basis, a matrix of integer polynomials.
    pub arrangement: SMat,
    /// m_i in ê-coordinates.
    pub fil1_basis: Vec<Vec<SElem>>,
    /// Columns f_i = φ₁(m_i) in ê-coordinates.
    pub phi1_matrix: SMat,
    phi1_inverse: SMat,
    /// φ_𝓜 in f-coordinates: F^{-1}·σ(B)·σ(F).
    pub phi_f: SMat,
    /// m_i in f-coordinates.
    mu: Vec<Vec<SElem>>,
    /// Relative p-adic precision the construction is valid to.
    pub precision: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    /// Lowest u-degree where N_n and N_{n−1} differ; None once they agree.
    pub u_order: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Monodromy {
    /// N_𝓜 in the basis f_i: N_𝓜(f_i) = Σ_k A_ki f_k.
    pub matrix: SMat,
    pub trace: Vec<Residual>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub passed: bool,
    pub samples: usize,
    pub u_precision: usize,
    pub p_precision: u32,
}

#[derive(Clone, Debug)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn lift_symmetric(c: u64, modulus: u64) -> i128 {
    let c = c as i128;
    let m = modulus as i128;
    if 2 * c > m {
        c - m
    } else {
        c
    }
}

/// Integer coefficients of P, lowest degree first.
fn eisenstein_ints(base: &FrobeniusBase) -> Vec<i128> {
    let mut v: Vec<i128> = base.spec().poly.0.iter().map(|c| c.first().copied().unwrap_or(0) as i128).collect();
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

pub fn build_breuil(m: &PhiModule) -> Result<BreuilModule> {
    let base = m.base();
    if base.mode() != Mode::Mixed {
        return Err(Error::pre("Breuil modules exist only in mixed characteristic"));
    }
    if base.residue_degree() != 1 || *base.coeffs() != CoeffKind::Field(1) {
        return Err(Error::pre("Breuil modules are built over W(F_p)[[u]] with prime-field coefficients"));
    }
    if !height_le(m, 1)?.holds() {
        return Err(Error::pre("module has height > 1"));
    }
    let p = base.p();
    let e = base.e() as usize;
    let n_tors = base.torsion_level();
    let b_mat = m.matrix();
    let m_s = base.precision().min(b_mat.precision());
    if m_s < 1 {
        return Err(Error::indeterminate("φ-matrix carries no u-adic information", m_s));
    }
    let m_s = m_s as usize;
    let ring = SRing::new(p, e, m_s, n_tors)?;
    let modulus = p.pow(n_tors);
    let d = m.rank();

    let ints = |s: &crate::base::Series| -> Result<Vec<i128>> {
        let mut v = vec![0i128; m_s];
        for (deg, c) in s.terms() {
            if deg < 0 {
                return Err(Error::pre("φ-matrix is not integral"));
            }
            if (deg as usize) < m_s {
                v[deg as usize] = lift_symmetric(c[0], modulus);
            }
        }
        Ok(v)
    };
    let b_ints: Vec<Vec<Vec<i128>>> = (0..d).map(|i| (0..d).map(|j| ints(b_mat.get(i, j))).collect()).collect::<Result<_>>()?;

    let p_ints = eisenstein_ints(base);
    let dvr = Dvr::new(p as i128, &p_ints, n_tors)?;
    let rho0 = (e as i64 * n_tors as i64).min(m_s as i64);
    let (l_bar, split_index, ker_rho) = dvr.kernel_arrangement(&b_ints, rho0)?;
    let precision = n_tors.min((ker_rho / e as i64) as u32);
    if precision < 2 {
        return Err(Error::indeterminate("Fil¹ arrangement leaves too few p-adic digits", m_s as i64));
    }

    let b: SMat = b_ints.iter().map(|row| row.iter().map(|c| ring.with_precision(&ring.from_ints(c), precision)).collect()).collect();
    let arrangement: SMat = l_bar.iter().map(|row| row.iter().map(|c| ring.from_ints(c)).collect()).collect();
    let big_p = ring.from_ints(&p_ints);
    let fil1_basis: Vec<Vec<SElem>> = (0..d)
        .map(|i| {
            let col = column(&arrangement, i);
            if i < split_index {
                col.iter().map(|x| ring.mul(&big_p, x)).collect()
            } else {
                col
            }
        })
        .collect();

    let sigma_b = mat_map(&b, |x| ring.sigma(x));
    let mut f_cols = Vec::with_capacity(d);
    for mi in &fil1_basis {
        f_cols.push(phi1(&ring, &sigma_b, mi)?);
    }
    let phi1_matrix = from_columns(&f_cols);
    let phi1_inverse = mat_inverse(&ring, &phi1_matrix)
        .map_err(|_| Error::indeterminate("φ₁(Fil¹) does not generate at this precision", m_s as i64))?;
    let sigma_f = mat_map(&phi1_matrix, |x| ring.sigma(x));
    let phi_f = mat_mul(&ring, &phi1_inverse, &mat_mul(&ring, &sigma_b, &sigma_f));
    let mu = fil1_basis.iter().map(|x| mat_vec(&ring, &phi1_inverse, x)).collect();

    Ok(BreuilModule {
        source: m.clone(),
        ring,
        b,
        rank: d,
        split_index,
        arrangement,
        fil1_basis,
        phi1_matrix,
        phi1_inverse,
        phi_f,
        mu,
        precision,
    })
}

/// φ₁(x) = σ(B·x)/p in ê-coordinates, given σ(B).
fn phi1(ring: &SRing, sigma_b: &SMat, x: &[SElem]) -> Result<Vec<SElem>> {
    let sx: Vec<SElem> = x.iter().map(|c| ring.sigma(c)).collect();
    mat_vec(ring, sigma_b, &sx).iter().map(|c| ring.div_p(c)).collect()
}

impl BreuilModule {
    fn sigma_b(&self) -> SMat {
        mat_map(&self.b, |x| self.ring.sigma(x))
    }

    /// N_𝓜 on f-coordinates: y ↦ N(y) + A·y.
    fn n_f(&self, a: &SMat, y: &[SElem]) -> Vec<SElem> {
        let ay = mat_vec(&self.ring, a, y);
        y.iter().zip(&ay).map(|(c, t)| self.ring.add(&self.ring.n_op(c), t)).collect()
    }

    fn to_f(&self, x: &[SElem]) -> Vec<SElem> {
        mat_vec(&self.ring, &self.phi1_inverse, x)
    }

    fn from_f(&self, y: &[SElem]) -> Vec<SElem> {
        mat_vec(&self.ring, &self.phi1_matrix, y)
    }

    /// N_𝓜 in ê-coordinates.
    pub fn apply_n(&self, a: &SMat, x: &[SElem]) -> Vec<SElem> {
        self.from_f(&self.n_f(a, &self.to_f(x)))
    }

    /// φ_𝓜 in ê-coordinates.
    pub fn apply_phi(&self, x: &[SElem]) -> Vec<SElem> {
        let sx: Vec<SElem> = x.iter().map(|c| self.ring.sigma(c)).collect();
        mat_vec(&self.ring, &self.sigma_b(), &sx)
    }
}

/// Iterates A_n·δ_i = Φ·σ(N(μ_i) + A_{n−1}·μ_i) from A_0 = 0 until two steps agree.
pub fn monodromy_n(bm: &BreuilModule, max_iter: usize) -> Result<Monodromy> {
    let ring = &bm.ring;
    let d = bm.rank;
    let mut a: SMat = vec![vec![ring.with_precision(&ring.zero(), bm.precision); d]; d];
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let cols: Vec<Vec<SElem>> = bm
            .mu
            .iter()
            .map(|mu| {
                let inner: Vec<SElem> = bm.n_f(&a, mu).iter().map(|c| ring.sigma(c)).collect();
                mat_vec(ring, &bm.phi_f, &inner)
            })
            .collect();
        let next = from_columns(&cols);
        let u_order = next
            .iter()
            .zip(&a)
            .flat_map(|(r1, r0)| r1.iter().zip(r0).filter_map(|(x, y)| ring.u_order(&ring.sub(x, y))))
            .min();
        trace.push(Residual { u_order });
        a = next;
        if u_order.is_none() {
            return Ok(Monodromy { matrix: a, trace });
        }
    }
    let orders: Vec<String> = trace.iter().map(|r| r.u_order.map_or("-".into(), |o| o.to_string())).collect();
    Err(Error::indeterminate(
        format!("N recursion did not stabilize in {max_iter} steps; residual u-orders {}", orders.join(",")),
        ring.len() as i64,
    ))
}

fn random_s(ring: &SRing, rng: &mut ChaCha8Rng, r: u32) -> SElem {
    let p = ring.p() as i128;
    let mut s = ring.zero();
    for i in 0..ring.len() {
        let a = rng.gen_range(0..p * p);
        if a != 0 {
            s = ring.add(&s, &ring.divided_monomial(i, a));
        }
    }
    ring.with_precision(&s, r)
}

fn vec_eq(ring: &SRing, x: &[SElem], y: &[SElem]) -> (bool, u32) {
    let r = x.iter().chain(y).map(SElem::precision).min().unwrap_or(0);
    (x.iter().zip(y).all(|(a, b)| ring.eq(a, b)), r)
}

/// Commutation N_𝓜(φ₁(x)) = φ_𝓜(N_𝓜(x)) for one x ∈ Fil¹𝓜, compared in f-coordinates.
fn commutes(bm: &BreuilModule, a: &SMat, x: &[SElem]) -> (bool, u32) {
    let Ok(px) = phi1(&bm.ring, &bm.sigma_b(), x) else {
        return (false, 0);
    };
    let lhs = bm.n_f(a, &bm.to_f(&px));
    let nx: Vec<SElem> = bm.n_f(a, &bm.to_f(x)).iter().map(|c| bm.ring.sigma(c)).collect();
    let rhs = mat_vec(&bm.ring, &bm.phi_f, &nx);
    vec_eq(&bm.ring, &lhs, &rhs)
}

pub fn check_breuil_axioms(bm: &BreuilModule, n: &Monodromy, seed: u64) -> AxiomReport {
    let ring = &bm.ring;
    let d = bm.rank;
    let a = &n.matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m_u = ring.len();
    let mut checks = Vec::new();
    let mut record = |name: &'static str, results: Vec<(bool, u32)>| {
        checks.push(AxiomCheck {
            name,
            passed: results.iter().all(|r| r.0),
            samples: results.len(),
            u_precision: m_u,
            p_precision: results.iter().map(|r| r.1).min().unwrap_or(bm.precision),
        });
    };

    let n_mod_i: Vec<(bool, u32)> = a.iter().flatten().map(|x| (ring.in_ideal_i(x), x.precision())).collect();
    record("n-mod-i", n_mod_i);

    let mut fil1: Vec<Vec<SElem>> = bm.fil1_basis.clone();
    for mi in &bm.fil1_basis {
        let s = random_s(ring, &mut rng, bm.precision);
        fil1.push(mi.iter().map(|c| ring.mul(&s, c)).collect());
    }
    // P^k/k! with k! prime to p
    let big_p = eisenstein_elem(bm);
    let mut power = ring.one();
    let mut fact = 1i128;
    for k in 1..ring.p().min(3) as i128 {
        power = ring.mul(&power, &big_p);
        fact *= k;
        let dp = ring.div_unit_int(&power, fact);
        for j in 0..d {
            let mut x = vec![ring.zero(); d];
            x[j] = ring.with_precision(&dp, bm.precision);
            fil1.push(x);
        }
    }
    record("commutation", fil1.iter().map(|x| commutes(bm, a, x)).collect());

    let mut leibniz = Vec::new();
    for _ in 0..3 {
        let s = random_s(ring, &mut rng, bm.precision);
        let x: Vec<SElem> = (0..d).map(|_| random_s(ring, &mut rng, bm.precision)).collect();
        let sx: Vec<SElem> = x.iter().map(|c| ring.mul(&s, c)).collect();
        let lhs = bm.apply_n(a, &sx);
        let nx = bm.apply_n(a, &x);
        let ns = ring.n_op(&s);
        let rhs: Vec<SElem> = x.iter().zip(&nx).map(|(xi, ni)| ring.add(&ring.mul(&ns, xi), &ring.mul(&s, ni))).collect();
        leibniz.push(vec_eq(ring, &lhs, &rhs));
    }
    record("leibniz", leibniz);

    let prod = mat_mul(ring, &bm.phi1_matrix, &bm.phi1_inverse);
    let gen: Vec<(bool, u32)> = vec![(
        prod.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, x)| ring.eq(x, &if i == j { ring.one() } else { ring.zero() }))),
        prod.iter().flatten().map(SElem::precision).min().unwrap_or(0),
    )];
    record("generation", gen);
    AxiomReport { checks }
}

fn eisenstein_elem(bm: &BreuilModule) -> SElem {
    bm.ring.from_ints(&eisenstein_ints(bm.source.base()))
}

/// N_𝓜 + u·Id, for exercising the commutation check.
pub fn corrupt(n: &Monodromy, ring: &SRing) -> Monodromy {
    let u = ring.from_ints(&[0, 1]);
    let matrix = n
        .matrix
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, x)| if i == j { ring.add(x, &u) } else { x.clone() }).collect())
        .collect();
    Monodromy { matrix, trace: n.trace.clone() }
}

/// A rank-2 module U·diag(1, P)·V with U, V elementary products of small integer polynomials.
pub fn sample_height_one(base: &FrobeniusBase, seed: u64) -> Result<PhiModule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_ints: Vec<i64> = eisenstein_ints(base).iter().map(|&c| c as i64).collect();
    let bound = (base.p().pow(base.torsion_level()) / 2) as i64;
    for _ in 0..64 {
        let mut poly = || -> Vec<i64> { (0..3).map(|_| rng.gen_range(-1..=1)).collect() };
        let (a, b, c, dd) = (poly(), poly(), poly(), poly());
        let one = vec![1i64];
        let zero = vec![0i64];
        let e12 = |x: &Vec<i64>| [[one.clone(), x.clone()], [zero.clone(), one.clone()]];
        let e21 = |x: &Vec<i64>| [[one.clone(), zero.clone()], [x.clone(), one.clone()]];
        let diag = [[one.clone(), zero.clone()], [zero.clone(), p_ints.clone()]];
        let mut prod = poly_mat_mul(&e12(&a), &e21(&b));
        for f in [diag, e21(&c), e12(&dd)] {
            prod = poly_mat_mul(&prod, &f);
        }
        if prod.iter().flatten().flatten().all(|x| x.abs() < bound) {
            let rows: Vec<Vec<Vec<i64>>> = prod.iter().map(|r| r.to_vec()).collect();
            return PhiModule::new(base, base.mat_from_ints(&rows));
        }
    }
    Err(Error::Resource("torsion level too small for sampled coefficients".into()))
}

type PolyMat2 = [[Vec<i64>; 2]; 2];

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[i64], b: &[i64]) -> Vec<i64> {
    (0..a.len().max(b.len())).map(|i| a.get(i).unwrap_or(&0) + b.get(i).unwrap_or(&0)).collect()
}

fn poly_mat_mul(x: &PolyMat2, y: &PolyMat2) -> PolyMat2 {
    let entry = |i: usize, j: usize| poly_add(&poly_mul(&x[i][0], &y[0][j]), &poly_mul(&x[i][1], &y[1][j]));
    [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]
}

/// Entries of an S-matrix as strings b·u^i (b rational with p-power denominator).
pub fn describe(bm: &BreuilModule, a: &SMat) -> Vec<Vec<String>> {
    a.iter().map(|row| row.iter().map(|x| bm.ring.format(x)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec, Mat};

    fn base(e: usize) -> FrobeniusBase {
        make_base(BaseSpec::standard_mixed(3, e, 8, 32)).unwrap()
    }

    fn run(m: &PhiModule) -> (BreuilModule, Monodromy, AxiomReport) {
        let bm = build_breuil(m).unwrap();
        let n = monodromy_n(&bm, 20).unwrap();
        let rep = check_breuil_axioms(&bm, &n, 7);
        (bm, n, rep)
    }

    #[test]
    fn etale_rank_one() {
        let b = base(1);
        let m = PhiModule::new(&b, b.mat_from_ints(&[vec![vec![1]]])).unwrap();
        let (bm, _, rep) = run(&m);
        assert_eq!(bm.split_index, 1);
        // φ₁(P·ê) = σ(P)/p
        let sp = bm.ring.div_p(&bm.ring.sigma(&eisenstein_elem(&bm))).unwrap();
        assert!(bm.ring.eq(&bm.phi1_matrix[0][0], &sp));
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn twist_rank_one() {
        let b = base(2);
        let m = PhiModule::new(&b, Mat::scalar(b.big_p(), 1)).unwrap();
        let (bm, _, rep) = run(&m);
        assert_eq!(bm.split_index, 0);
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn diag_one_p_and_negative_control() {
        let b = base(2);
        let m = PhiModule::new(&b, b.mat_from_ints(&[vec![vec![1], vec![]], vec![vec![], vec![3, 0, 1]]])).unwrap();
        let (bm, n, rep) = run(&m);
        assert_eq!(bm.split_index, 1);
        assert!(rep.all_passed(), "{rep:?}");
        let bad = check_breuil_axioms(&bm, &corrupt(&n, &bm.ring), 7);
        assert!(!bad.get("commutation").unwrap().passed);
    }

    #[test]
    fn constant_matrix_converges_quickly() {
        let b = base(1);
        // P times a constant invertible matrix: every basis vector lies in Fil¹
        let m = PhiModule::new(&b, b.mat_from_ints(&[vec![vec![], vec![3, 1]], vec![vec![3, 1], vec![]]])).unwrap();
        let (bm, n, rep) = run(&m);
        assert_eq!(bm.split_index, 0);
        assert!(rep.all_passed(), "{rep:?}");
        let orders: Vec<usize> = n.trace.iter().filter_map(|r| r.u_order).collect();
        assert!(orders.windows(2).all(|w| w[0] < w[1]), "{orders:?}");
        assert!(orders.first().map_or(true, |&o| o >= 1));
        assert!(n.trace.len() <= 4 + 2);
    }

    #[test]
    fn sampled_modules() {
        for (e, seed) in [(1, 1), (2, 2)] {
            let b = base(e);
            let m = sample_height_one(&b, seed).unwrap();
            let (_, n, rep) = run(&m);
            assert!(rep.all_passed(), "{rep:?}");
            assert!(n.trace.len() <= 20);
        }
    }
}
