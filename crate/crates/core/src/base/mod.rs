//! Ring backends: 𝔖 = W_N(k)[[u]] ⊗ A (mixed) and (k ⊗ A)[[u]][π₀]/π₀^N (equichar).
//!
//! Both are modelled as Λ[[u]] for a finite coefficient ring Λ that carries the
//! coefficient Frobenius; in equal characteristic π₀ is a nilpotent generator of Λ,
//! so π₀-torsion is exact and only the u-direction is truncated.

pub mod arith;
pub mod coeff;
pub mod field;
pub mod matrix;
pub mod series;

use std::fmt;
use std::sync::Arc;

pub use coeff::{CoeffKind, CoeffRing, GenKind, Generator, ResidueFrobenius};
pub use field::{Echelon, SmallField};
pub use matrix::Mat;
pub use series::{InvertError, Series, EXACT};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Mixed,
    Equichar,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mixed => "mixed",
            Mode::Equichar => "equichar",
        })
    }
}

/// Polynomial in u whose coefficients are written in the power basis of the residue
/// generator: `coeffs[i][j]` is the coefficient of x^j·u^i.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolySpec(pub Vec<Vec<i64>>);

impl PolySpec {
    pub fn from_ints(ints: &[i64]) -> PolySpec {
        PolySpec(ints.iter().map(|&n| vec![n]).collect())
    }

    /// c·u^e with integer c.
    pub fn monomial(c: i64, e: usize) -> PolySpec {
        let mut v = vec![vec![0]; e + 1];
        v[e] = vec![c];
        PolySpec(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BaseSpec {
    pub mode: Mode,
    /// p in mixed mode, q in equichar mode.
    pub p_or_q: u64,
    pub residue_degree: usize,
    pub torsion_level: u32,
    pub precision: i64,
    /// P itself in mixed mode, u₀ in equichar mode.
    pub poly: PolySpec,
    pub coeffs: CoeffKind,
}

impl BaseSpec {
    pub fn mixed(p: u64, residue_degree: usize, torsion_level: u32, precision: i64, poly: PolySpec) -> BaseSpec {
        BaseSpec { mode: Mode::Mixed, p_or_q: p, residue_degree, torsion_level, precision, poly, coeffs: CoeffKind::Field(1) }
    }

    pub fn equichar(q: u64, residue_degree: usize, torsion_level: u32, precision: i64, u0: PolySpec) -> BaseSpec {
        BaseSpec { mode: Mode::Equichar, p_or_q: q, residue_degree, torsion_level, precision, poly: u0, coeffs: CoeffKind::Field(1) }
    }

    /// Mixed base with Eisenstein polynomial u^e + p.
    pub fn standard_mixed(p: u64, e: usize, torsion_level: u32, precision: i64) -> BaseSpec {
        let mut ints = vec![0i64; e + 1];
        ints[0] = p as i64;
        ints[e] = 1;
        BaseSpec::mixed(p, 1, torsion_level, precision, PolySpec::from_ints(&ints))
    }

    /// Equichar base with u₀ = u^e.
    pub fn standard_equichar(q: u64, e: usize, torsion_level: u32, precision: i64) -> BaseSpec {
        BaseSpec::equichar(q, 1, torsion_level, precision, PolySpec::monomial(1, e))
    }

    pub fn with_coeffs(mut self, coeffs: CoeffKind) -> BaseSpec {
        self.coeffs = coeffs;
        self
    }

    pub fn with_precision(mut self, precision: i64) -> BaseSpec {
        self.precision = precision;
        self
    }

    pub fn with_residue_degree(mut self, d: usize) -> BaseSpec {
        self.residue_degree = d;
        self
    }
}

#[derive(Clone)]
pub struct FrobeniusBase {
    spec: BaseSpec,
    p: u64,
    q: u64,
    e: u32,
    ring: Arc<CoeffRing>,
    big_p: Series,
}

impl fmt::Debug for FrobeniusBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FrobeniusBase({} p={} q={} d={} N={} M={} e={} A={} P={})",
            self.spec.mode,
            self.p,
            self.q,
            self.spec.residue_degree,
            self.spec.torsion_level,
            self.spec.precision,
            self.e,
            self.spec.coeffs,
            self.big_p
        )
    }
}

impl PartialEq for FrobeniusBase {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for FrobeniusBase {}

pub fn make_base(spec: BaseSpec) -> Result<FrobeniusBase> {
    if spec.torsion_level < 1 {
        return Err(Error::pre("torsion level must be at least 1"));
    }
    if spec.residue_degree < 1 {
        return Err(Error::pre("residue degree must be positive"));
    }
    if spec.precision < 1 {
        return Err(Error::pre("u-precision must be positive"));
    }
    let (p, s) = arith::prime_power(spec.p_or_q).ok_or_else(|| Error::pre(format!("{} is not a prime power", spec.p_or_q)))?;
    if spec.mode == Mode::Mixed && s != 1 {
        return Err(Error::pre("mixed mode needs a prime p"));
    }
    let a = spec.coeffs.field_degree();
    if a > 1 && spec.residue_degree * s as usize > 1 {
        return Err(Error::pre("coefficient field extensions need residue field F_p (k ⊗ F must be a field)"));
    }
    if let CoeffKind::Poly(_, bound) = spec.coeffs {
        if bound < 1 {
            return Err(Error::pre("polynomial coefficient bound must be positive"));
        }
    }
    let mut extra = coeff::coefficient_generators(p, &spec.coeffs);
    let ring = match spec.mode {
        Mode::Mixed => CoeffRing::build(p, spec.torsion_level, spec.residue_degree, ResidueFrobenius::WittLift, extra),
        Mode::Equichar => {
            if spec.torsion_level > 1 {
                let n = spec.torsion_level as usize;
                let mut rel = vec![0u64; n + 1];
                rel[n] = 1;
                extra.push(Generator { name: "t".into(), kind: GenKind::Nilpotent, relation: rel });
            }
            CoeffRing::build(p, 1, spec.residue_degree * s as usize, ResidueFrobenius::Power(spec.p_or_q), extra)
        }
    };
    if ring.dim() > 64 {
        return Err(Error::pre(format!("coefficient ring of dimension {} is too large", ring.dim())));
    }
    let ring = Arc::new(ring);
    let cap = spec.precision;
    let poly = poly_from_spec(&ring, cap, &spec.poly)?;
    let (big_p, e) = match spec.mode {
        Mode::Mixed => {
            // degree read from the integer data, so a non-unit top term is caught even when it vanishes mod p^N
            let e = spec.poly.0.iter().rposition(|c| c.iter().any(|&x| x != 0)).map_or(0, |i| i as i64);
            if e < 1 {
                return Err(Error::pre("P must have positive u-degree"));
            }
            let lead = poly.coeff(e);
            if !ring.is_unit(&lead) {
                return Err(Error::pre("P is not Eisenstein: leading coefficient is not a unit"));
            }
            // constant term exactly p
            let c0 = spec.poly.0.first().cloned().unwrap_or_default();
            let c0_ok = c0.first().copied() == Some(p as i64) && c0.iter().skip(1).all(|&x| x == 0);
            if !c0_ok {
                return Err(Error::pre("P is not Eisenstein: constant term must be p"));
            }
            for i in 1..e as usize {
                let c = spec.poly.0.get(i).cloned().unwrap_or_default();
                if c.iter().any(|&x| x.rem_euclid(p as i64) != 0) {
                    return Err(Error::pre(format!("P is not Eisenstein: coefficient of u^{i} is not divisible by p")));
                }
            }
            (poly, e as u32)
        }
        Mode::Equichar => {
            let Some(e) = poly.valuation() else {
                return Err(Error::pre("u₀ must be nonzero"));
            };
            if e < 1 {
                return Err(Error::pre("u₀ must have positive u-order"));
            }
            let pi0 = match ring.generator_named("t") {
                Some(v) => Series::constant(&ring, cap, &ring.gen(v)),
                None => Series::zero(&ring, cap),
            };
            (pi0.sub(&poly), e as u32)
        }
    };
    Ok(FrobeniusBase { spec, p, q: spec_q(p, s), e, ring, big_p })
}

fn spec_q(p: u64, s: u32) -> u64 {
    p.pow(s)
}

fn poly_from_spec(ring: &Arc<CoeffRing>, cap: i64, spec: &PolySpec) -> Result<Series> {
    let xgen = ring.generator_index(GenKind::Residue).map(|v| ring.gen(v));
    let mut coeffs = Vec::new();
    for c in &spec.0 {
        let mut val = ring.zero();
        let mut pw = ring.one();
        for (j, &n) in c.iter().enumerate() {
            if j > 0 {
                let Some(x) = &xgen else {
                    return Err(Error::pre("residue-field coordinates given but the residue field is F_p"));
                };
                pw = ring.mul(&pw, x);
            }
            val = ring.add(&val, &ring.mul(&pw, &ring.from_int(n)));
        }
        coeffs.push(val);
    }
    Ok(Series::from_coeffs(ring, cap, 0, &coeffs, EXACT))
}

impl FrobeniusBase {
    pub fn spec(&self) -> &BaseSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.spec.mode
    }

    /// Residue characteristic.
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The power by which σ raises u.
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn torsion_level(&self) -> u32 {
        self.spec.torsion_level
    }

    pub fn precision(&self) -> i64 {
        self.spec.precision
    }

    pub fn residue_degree(&self) -> usize {
        self.spec.residue_degree
    }

    pub fn coeffs(&self) -> &CoeffKind {
        &self.spec.coeffs
    }

    pub fn ring(&self) -> &Arc<CoeffRing> {
        &self.ring
    }

    /// The distinguished element P(u).
    pub fn big_p(&self) -> &Series {
        &self.big_p
    }

    pub fn p_power(&self, h: u32) -> Series {
        self.big_p.pow(h as u64)
    }

    /// The equal-characteristic uniformizer π₀ (zero when N = 1), or p in mixed mode.
    pub fn prime_element(&self) -> Series {
        match self.spec.mode {
            Mode::Mixed => self.int(self.p as i64),
            Mode::Equichar => match self.ring.generator_named("t") {
                Some(v) => self.constant(&self.ring.gen(v)),
                None => self.zero(),
            },
        }
    }

    pub fn zero(&self) -> Series {
        Series::zero(&self.ring, self.spec.precision)
    }

    pub fn one(&self) -> Series {
        Series::one(&self.ring, self.spec.precision)
    }

    pub fn int(&self, n: i64) -> Series {
        Series::from_int(&self.ring, self.spec.precision, n)
    }

    pub fn u_pow(&self, k: i64) -> Series {
        Series::u_pow(&self.ring, self.spec.precision, k)
    }

    pub fn constant(&self, a: &[u64]) -> Series {
        Series::constant(&self.ring, self.spec.precision, a)
    }

    pub fn monomial(&self, deg: i64, a: &[u64]) -> Series {
        Series::monomial(&self.ring, self.spec.precision, deg, a)
    }

    pub fn from_ints(&self, ints: &[i64]) -> Series {
        Series::from_ints(&self.ring, self.spec.precision, ints)
    }

    /// Matrix whose entries are integer polynomials in u (lowest degree first).
    pub fn mat_from_ints(&self, rows: &[Vec<Vec<i64>>]) -> Mat {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|e| self.from_ints(e)).collect()).collect())
    }

    pub fn identity(&self, n: usize) -> Mat {
        Mat::identity(&self.ring, self.spec.precision, n)
    }

    pub fn zero_mat(&self, rows: usize, cols: usize) -> Mat {
        Mat::zero(&self.ring, self.spec.precision, rows, cols)
    }

    pub fn sigma(&self, x: &Series) -> Series {
        x.frobenius(self.q)
    }

    pub fn sigma_mat(&self, m: &Mat) -> Mat {
        m.frobenius(self.q)
    }

    /// Coefficient-ring element for the named generator (x, y, eps, T, t).
    pub fn generator(&self, name: &str) -> Option<Vec<u64>> {
        self.ring.generator_named(name).map(|v| self.ring.gen(v))
    }

    pub fn eps(&self) -> Option<Vec<u64>> {
        self.generator("eps")
    }

    /// Same base at another u-precision.
    pub fn with_precision(&self, precision: i64) -> Result<FrobeniusBase> {
        make_base(self.spec.clone().with_precision(precision))
    }

    /// Same base with another coefficient ring A.
    pub fn with_coeffs(&self, coeffs: CoeffKind) -> Result<FrobeniusBase> {
        make_base(self.spec.clone().with_coeffs(coeffs))
    }

    /// Warnings for a planned use at height h (not errors).
    pub fn warnings(&self, h: u32) -> Vec<String> {
        let mut w = Vec::new();
        if self.spec.precision < (self.e * h) as i64 {
            w.push(format!("u-precision {} is below e*h = {}", self.spec.precision, self.e * h));
        }
        w
    }

    /// Cardinality of the residue field k.
    pub fn residue_size(&self) -> u64 {
        self.q.pow(self.spec.residue_degree as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_examples() {
        let b = make_base(BaseSpec::mixed(3, 1, 1, 32, PolySpec::from_ints(&[3, 1]))).unwrap();
        assert_eq!(b.e(), 1);
        // P ≡ u mod 3
        assert_eq!(b.big_p().terms(), vec![(1, vec![1])]);
        let b2 = make_base(BaseSpec::mixed(2, 1, 1, 64, PolySpec::from_ints(&[2, 0, 1]))).unwrap();
        assert_eq!(b2.e(), 2);
        let u = b2.u_pow(1);
        assert_eq!(b2.sigma(&u).terms(), vec![(2, vec![1])]);
    }

    #[test]
    fn equichar_example() {
        let b = make_base(BaseSpec::standard_equichar(2, 2, 3, 32)).unwrap();
        assert_eq!(b.e(), 2);
        // P = π₀ − u²
        let pi0 = b.prime_element();
        assert!(b.big_p().eq_at_precision(&pi0.sub(&b.u_pow(2))));
        assert!(b.sigma(&pi0).eq_at_precision(&pi0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_base(BaseSpec::mixed(3, 1, 1, 32, PolySpec::from_ints(&[9, 1]))).is_err());
        assert!(make_base(BaseSpec::mixed(3, 1, 1, 32, PolySpec::from_ints(&[3, 1, 3]))).is_err());
        assert!(make_base(BaseSpec::mixed(3, 1, 0, 32, PolySpec::from_ints(&[3, 1]))).is_err());
        assert!(make_base(BaseSpec::standard_equichar(2, 0, 1, 32)).is_err());
    }

    #[test]
    fn equichar_residue_frobenius_is_q_power() {
        let spec = BaseSpec::equichar(2, 2, 1, 16, PolySpec(vec![vec![0], vec![0, 1]]));
        let b = make_base(spec).unwrap();
        let c = b.generator("x").unwrap();
        let r = b.ring();
        assert_eq!(r.frobenius(&c), r.mul(&c, &c));
        assert_eq!(b.e(), 1);
    }
}
