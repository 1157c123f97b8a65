//! Truncated Laurent series over a finite coefficient ring, with guaranteed precision.
//!
//! A series stands for Σ c_i u^i, known modulo u^prec. Exact values (polynomials)
//! carry `EXACT` until some operation pushes their degree past the working cap.

use std::fmt;
use std::sync::Arc;

use super::coeff::CoeffRing;

pub const EXACT: i64 = i64::MAX / 4;

fn clamp(x: i64) -> i64 {
    x.min(EXACT)
}

#[derive(Clone)]
pub struct Series {
    ring: Arc<CoeffRing>,
    lo: i64,
    prec: i64,
    cap: i64,
    c: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvertError {
    /// No coefficient below the precision is a unit.
    NotInvertible { valuation: Option<i64>, precision: i64 },
    /// The unit coefficient sits above u-degree zero; only a Laurent inverse exists.
    NeedsPole { unit_degree: i64 },
}

impl fmt::Display for InvertError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvertError::NotInvertible { valuation, precision } => match valuation {
                Some(v) => write!(f, "not invertible: no unit coefficient below u^{precision} (valuation {v})"),
                None => write!(f, "not invertible: zero modulo u^{precision}"),
            },
            InvertError::NeedsPole { unit_degree } => {
                write!(f, "not invertible over the integral ring: first unit coefficient at u^{unit_degree}")
            }
        }
    }
}

impl Series {
    pub fn zero(ring: &Arc<CoeffRing>, cap: i64) -> Series {
        Series { ring: ring.clone(), lo: 0, prec: EXACT, cap, c: Vec::new() }
    }

    pub fn one(ring: &Arc<CoeffRing>, cap: i64) -> Series {
        Series::constant(ring, cap, &ring.one())
    }

    pub fn constant(ring: &Arc<CoeffRing>, cap: i64, a: &[u64]) -> Series {
        Series::monomial(ring, cap, 0, a)
    }

    pub fn from_int(ring: &Arc<CoeffRing>, cap: i64, n: i64) -> Series {
        Series::constant(ring, cap, &ring.from_int(n))
    }

    /// a·u^deg.
    pub fn monomial(ring: &Arc<CoeffRing>, cap: i64, deg: i64, a: &[u64]) -> Series {
        let mut s = Series { ring: ring.clone(), lo: deg, prec: EXACT, cap, c: a.to_vec() };
        s.normalize();
        s
    }

    /// u^deg.
    pub fn u_pow(ring: &Arc<CoeffRing>, cap: i64, deg: i64) -> Series {
        Series::monomial(ring, cap, deg, &ring.one())
    }

    /// Builds Σ coeffs[i]·u^(lo+i) from ring elements.
    pub fn from_coeffs(ring: &Arc<CoeffRing>, cap: i64, lo: i64, coeffs: &[Vec<u64>], prec: i64) -> Series {
        let mut c = Vec::with_capacity(coeffs.len() * ring.dim());
        for a in coeffs {
            c.extend_from_slice(a);
        }
        let mut s = Series { ring: ring.clone(), lo, prec: clamp(prec), cap, c };
        s.normalize();
        s
    }

    /// Polynomial in u with integer coefficients, lowest degree first.
    pub fn from_ints(ring: &Arc<CoeffRing>, cap: i64, ints: &[i64]) -> Series {
        let coeffs: Vec<Vec<u64>> = ints.iter().map(|&n| ring.from_int(n)).collect();
        Series::from_coeffs(ring, cap, 0, &coeffs, EXACT)
    }

    pub fn ring(&self) -> &Arc<CoeffRing> {
        &self.ring
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec >= EXACT
    }

    /// Lowest stored degree (meaningful only when nonzero).
    pub fn low_degree(&self) -> i64 {
        self.lo
    }

    /// One past the highest stored degree.
    pub fn high_degree(&self) -> i64 {
        self.lo + self.len() as i64
    }

    fn len(&self) -> usize {
        self.c.len() / self.ring.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// u-adic valuation; None if zero modulo the precision.
    pub fn valuation(&self) -> Option<i64> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.lo)
        }
    }

    fn val_or_prec(&self) -> i64 {
        if self.c.is_empty() {
            self.prec
        } else {
            self.lo
        }
    }

    pub fn coeff(&self, deg: i64) -> Vec<u64> {
        let d = self.ring.dim();
        if deg < self.lo || deg >= self.high_degree() {
            return vec![0; d];
        }
        let i = (deg - self.lo) as usize;
        self.c[i * d..(i + 1) * d].to_vec()
    }

    /// (degree, coefficient) pairs of the nonzero terms.
    pub fn terms(&self) -> Vec<(i64, Vec<u64>)> {
        let d = self.ring.dim();
        self.c
            .chunks(d)
            .enumerate()
            .filter(|(_, a)| a.iter().any(|&x| x != 0))
            .map(|(i, a)| (self.lo + i as i64, a.to_vec()))
            .collect()
    }

    fn normalize(&mut self) {
        let d = self.ring.dim();
        if self.prec < EXACT && self.prec > self.cap {
            self.prec = self.cap;
        }
        // drop terms at or above the precision
        if self.prec < EXACT {
            let keep = (self.prec - self.lo).max(0) as usize;
            if self.len() > keep {
                self.c.truncate(keep * d);
            }
        }
        while self.c.len() >= d && self.c[self.c.len() - d..].iter().all(|&x| x == 0) {
            self.c.truncate(self.c.len() - d);
        }
        let mut skip = 0;
        while skip * d < self.c.len() && self.c[skip * d..(skip + 1) * d].iter().all(|&x| x == 0) {
            skip += 1;
        }
        if skip > 0 {
            self.c.drain(..skip * d);
            self.lo += skip as i64;
        }
        if self.c.is_empty() {
            self.lo = 0;
        }
        if self.prec >= EXACT && self.high_degree() > self.cap && !self.c.is_empty() {
            self.prec = self.cap;
            self.normalize();
        }
    }

    pub fn with_precision(&self, prec: i64) -> Series {
        let mut s = self.clone();
        s.prec = s.prec.min(prec);
        s.normalize();
        s
    }

    pub fn with_cap(&self, cap: i64) -> Series {
        let mut s = self.clone();
        s.cap = cap;
        s.normalize();
        s
    }

    fn same_ring(&self, other: &Series) {
        debug_assert!(Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring);
    }

    fn combine(&self, other: &Series, negate: bool) -> Series {
        self.same_ring(other);
        let d = self.ring.dim();
        let prec = self.prec.min(other.prec);
        let cap = self.cap.min(other.cap);
        if self.c.is_empty() && other.c.is_empty() {
            let mut z = Series::zero(&self.ring, cap);
            z.prec = prec;
            return z;
        }
        let lo = if self.c.is_empty() {
            other.lo
        } else if other.c.is_empty() {
            self.lo
        } else {
            self.lo.min(other.lo)
        };
        let hi = self.high_degree().max(other.high_degree()).min(prec.max(lo));
        let n = (hi - lo).max(0) as usize;
        let mut c = vec![0u64; n * d];
        for (src, neg) in [(self, false), (other, negate)] {
            for i in 0..src.len() {
                let deg = src.lo + i as i64;
                if deg >= hi {
                    break;
                }
                let at = (deg - lo) as usize * d;
                let block = &src.c[i * d..(i + 1) * d];
                if neg {
                    self.ring.sub_assign(&mut c[at..at + d], block);
                } else {
                    self.ring.add_assign(&mut c[at..at + d], block);
                }
            }
        }
        let mut s = Series { ring: self.ring.clone(), lo, prec, cap, c };
        s.normalize();
        s
    }

    pub fn add(&self, other: &Series) -> Series {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Series) -> Series {
        self.combine(other, true)
    }

    pub fn neg(&self) -> Series {
        let mut s = self.clone();
        s.c = self.ring.neg(&self.c);
        s
    }

    pub fn mul(&self, other: &Series) -> Series {
        self.same_ring(other);
        let d = self.ring.dim();
        let cap = self.cap.min(other.cap);
        let va = self.val_or_prec();
        let vb = other.val_or_prec();
        let prec = clamp(self.prec.saturating_add(vb)).min(clamp(other.prec.saturating_add(va)));
        if self.c.is_empty() || other.c.is_empty() {
            let mut z = Series::zero(&self.ring, cap);
            z.prec = prec;
            z.normalize();
            return z;
        }
        let lo = self.lo + other.lo;
        let full = self.len() + other.len() - 1;
        let mut prec = prec;
        let fits = prec >= EXACT && lo + full as i64 <= cap;
        let top = if fits { lo + full as i64 } else { prec.min(cap) };
        if !fits && top < prec {
            prec = top;
        }
        let limit = ((top - lo).max(0) as usize).min(full);
        let mut c = vec![0u64; limit * d];
        if d == 1 {
            let md = self.ring.modulus();
            let mut acc = vec![0u128; limit];
            for (i, &a) in self.c.iter().enumerate() {
                if a == 0 || i >= limit {
                    continue;
                }
                for (j, &b) in other.c.iter().enumerate() {
                    if i + j >= limit {
                        break;
                    }
                    acc[i + j] = (acc[i + j] + a as u128 * b as u128) % md as u128;
                }
            }
            for (k, v) in acc.into_iter().enumerate() {
                c[k] = v as u64;
            }
        } else {
            for i in 0..self.len().min(limit) {
                let a = &self.c[i * d..(i + 1) * d];
                if a.iter().all(|&x| x == 0) {
                    continue;
                }
                for j in 0..other.len() {
                    if i + j >= limit {
                        break;
                    }
                    let b = &other.c[j * d..(j + 1) * d];
                    let k = i + j;
                    self.ring.mul_acc(&mut c[k * d..(k + 1) * d], a, b);
                }
            }
        }
        let mut s = Series { ring: self.ring.clone(), lo, prec, cap, c };
        s.normalize();
        s
    }

    /// Multiplies by a coefficient-ring element.
    pub fn scale(&self, a: &[u64]) -> Series {
        let d = self.ring.dim();
        let mut s = self.clone();
        for (i, chunk) in self.c.chunks(d).enumerate() {
            let prod = self.ring.mul(chunk, a);
            s.c[i * d..(i + 1) * d].copy_from_slice(&prod);
        }
        s.normalize();
        s
    }

    pub fn scale_int(&self, n: i64) -> Series {
        self.scale(&self.ring.from_int(n))
    }

    /// Multiplies by u^k (exact shift).
    pub fn shift(&self, k: i64) -> Series {
        let mut s = self.clone();
        if !s.c.is_empty() {
            s.lo += k;
        }
        if s.prec < EXACT {
            s.prec += k;
        }
        s.normalize();
        s
    }

    pub fn pow(&self, mut e: u64) -> Series {
        let mut r = Series::one(&self.ring, self.cap);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        r
    }

    /// u ↦ u^q together with the coefficient Frobenius.
    pub fn frobenius(&self, q: u64) -> Series {
        let d = self.ring.dim();
        let q = q as i64;
        let n = self.len();
        let new_len = if n == 0 { 0 } else { (n - 1) * q as usize + 1 };
        let mut c = vec![0u64; new_len * d];
        for i in 0..n {
            let block = &self.c[i * d..(i + 1) * d];
            if block.iter().all(|&x| x == 0) {
                continue;
            }
            let img = self.ring.frobenius(block);
            let at = i * q as usize * d;
            c[at..at + d].copy_from_slice(&img);
        }
        let prec = if self.prec >= EXACT { EXACT } else { clamp(self.prec.saturating_mul(q)) };
        let mut s = Series { ring: self.ring.clone(), lo: self.lo * q, prec, cap: self.cap, c };
        s.normalize();
        s
    }

    /// Applies a map to every coefficient, landing in another ring.
    pub fn map_coeffs(&self, target: &Arc<CoeffRing>, f: impl Fn(&[u64]) -> Vec<u64>) -> Series {
        let d = self.ring.dim();
        let coeffs: Vec<Vec<u64>> = self.c.chunks(d).map(&f).collect();
        Series::from_coeffs(target, self.cap, self.lo, &coeffs, self.prec)
    }

    /// Degree of the first coefficient that is a unit of the coefficient ring.
    pub fn unit_degree(&self) -> Option<i64> {
        let d = self.ring.dim();
        self.c
            .chunks(d)
            .position(|a| self.ring.is_unit(a))
            .map(|i| self.lo + i as i64)
    }

    /// Inverse inside the integral ring Λ[[u]]: needs a unit constant term.
    pub fn invert(&self) -> Result<Series, InvertError> {
        match self.unit_degree() {
            None => Err(InvertError::NotInvertible { valuation: self.valuation(), precision: self.prec }),
            Some(0) if self.lo >= 0 => Ok(self.invert_power_series()),
            Some(v) => Err(InvertError::NeedsPole { unit_degree: v }),
        }
    }

    /// Newton inversion of a series with unit constant term and no negative terms.
    fn invert_power_series(&self) -> Series {
        let ring = &self.ring;
        let inv0 = ring.inverse(&self.coeff(0)).expect("unit constant term");
        let target = self.prec.min(self.cap);
        let mut y = Series::constant(ring, self.cap, &inv0);
        y.prec = 1;
        let two = Series::from_int(ring, self.cap, 2);
        let mut known = 1i64;
        while known < target {
            known = (known * 2).min(target);
            let x = self.with_precision(known);
            let mut yk = y.clone();
            yk.prec = known;
            // y ← y(2 − xy)
            let t = two.sub(&x.mul(&yk));
            y = yk.mul(&t).with_precision(known);
        }
        y.prec = target;
        y.normalize();
        y
    }

    /// Inverse in the Laurent ring Λ((u)); lower coefficients must be nilpotent.
    pub fn invert_laurent(&self) -> Result<Series, InvertError> {
        let Some(v) = self.unit_degree() else {
            return Err(InvertError::NotInvertible { valuation: self.valuation(), precision: self.prec });
        };
        let y = self.shift(-v);
        if y.lo >= 0 {
            return Ok(y.invert_power_series().shift(-v));
        }
        // y = w + z with w integral (unit constant term) and z a finite polar part
        let d = self.ring.dim();
        let split = (-y.lo) as usize;
        let mut zc = y.clone();
        zc.c.truncate(split * d);
        zc.prec = EXACT;
        zc.normalize();
        let w = y.sub(&zc);
        let winv = w.invert_power_series();
        let t = zc.mul(&winv).neg();
        let mut term = Series::one(&self.ring, self.cap);
        let mut total = term.clone();
        let bound = (self.ring.dim() as u64) * self.ring.torsion_exponent() as u64 + 1;
        for _ in 0..bound {
            term = term.mul(&t);
            if term.is_zero() && term.precision() >= total.precision() {
                break;
            }
            total = total.add(&term);
        }
        Ok(total.mul(&winv).shift(-v))
    }

    /// Equality of coefficients below the smaller precision.
    pub fn eq_at_precision(&self, other: &Series) -> bool {
        self.sub(other).is_zero()
    }

    /// True when every coefficient of negative degree vanishes.
    pub fn is_integral(&self) -> bool {
        self.c.is_empty() || self.lo >= 0
    }

    /// Splits off all terms of degree below `deg`.
    pub fn truncate_below(&self, deg: i64) -> Series {
        let d = self.ring.dim();
        let mut s = self.clone();
        if s.c.is_empty() || deg <= s.lo {
            return s;
        }
        let drop = ((deg - s.lo) as usize).min(s.len());
        s.c.drain(..drop * d);
        s.lo += drop as i64;
        s.normalize();
        s
    }

    /// Terms of degree below `deg`, as an exact series.
    pub fn part_below(&self, deg: i64) -> Series {
        let mut s = self.clone();
        s.prec = if deg < self.prec { EXACT } else { self.prec };
        if deg < self.prec {
            let d = self.ring.dim();
            let keep = (deg - s.lo).clamp(0, s.len() as i64) as usize;
            s.c.truncate(keep * d);
        }
        s.normalize();
        s
    }

    pub fn evaluate_constant(&self) -> Vec<u64> {
        self.coeff(0)
    }

    pub fn format(&self) -> String {
        let terms = self.terms();
        let mut parts: Vec<String> = terms
            .iter()
            .map(|(deg, a)| {
                let coeff = self.ring.format_elem(a);
                match deg {
                    0 => coeff,
                    1 => format!("{coeff}*u"),
                    _ => format!("{coeff}*u^{deg}"),
                }
            })
            .collect();
        if parts.is_empty() {
            parts.push("0".into());
        }
        let body = parts.join(" + ");
        if self.is_exact() {
            body
        } else {
            format!("{body} + O(u^{})", self.prec)
        }
    }
}

impl PartialEq for Series {
    fn eq(&self, other: &Series) -> bool {
        self.lo == other.lo && self.prec == other.prec && self.c == other.c
    }
}

impl Eq for Series {}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::coeff::{coefficient_generators, CoeffKind, ResidueFrobenius};

    fn f2() -> Arc<CoeffRing> {
        Arc::new(CoeffRing::prime(2, 1))
    }

    #[test]
    fn geometric_series() {
        let r = f2();
        let x = Series::from_ints(&r, 16, &[1, 1]);
        let y = x.invert().unwrap();
        assert_eq!(y.precision(), 16);
        for k in 0..16 {
            assert_eq!(y.coeff(k), vec![1]);
        }
        assert!(x.mul(&y).eq_at_precision(&Series::one(&r, 16)));
    }

    #[test]
    fn u_is_only_a_laurent_unit() {
        let r = f2();
        let u = Series::u_pow(&r, 16, 1);
        assert!(matches!(u.invert(), Err(InvertError::NeedsPole { unit_degree: 1 })));
        let inv = u.invert_laurent().unwrap();
        assert_eq!(inv.valuation(), Some(-1));
        assert_eq!(inv.terms().len(), 1);
    }

    #[test]
    fn eisenstein_inverse_mod_p() {
        let r = f2();
        // P = u^2 + 2 is u^2 modulo 2
        let p = Series::from_ints(&r, 32, &[2, 0, 1]);
        let inv = p.invert_laurent().unwrap();
        assert_eq!(inv.terms(), vec![(-2, vec![1])]);
    }

    #[test]
    fn nilpotent_polar_part() {
        let gens = coefficient_generators(2, &CoeffKind::Dual(1));
        let r = Arc::new(CoeffRing::build(2, 1, 1, ResidueFrobenius::WittLift, gens));
        let eps = r.gen(0);
        // x = 1 + u^{-1} ε
        let x = Series::one(&r, 16).add(&Series::monomial(&r, 16, -1, &eps));
        let y = x.invert_laurent().unwrap();
        assert!(x.mul(&y).eq_at_precision(&Series::one(&r, 16)));
        assert_eq!(y.valuation(), Some(-1));
    }

    #[test]
    fn frobenius_spreads_degrees() {
        let r = Arc::new(CoeffRing::prime(3, 1));
        let x = Series::from_ints(&r, 32, &[0, 2]);
        assert_eq!(x.frobenius(3).terms(), vec![(3, vec![2])]);
    }

    #[test]
    fn product_precision() {
        let r = f2();
        let a = Series::from_ints(&r, 20, &[0, 1]).with_precision(10);
        let b = Series::from_ints(&r, 20, &[0, 0, 1]).with_precision(8);
        // min(10 + 2, 8 + 1)
        assert_eq!(a.mul(&b).precision(), 9);
    }
}
