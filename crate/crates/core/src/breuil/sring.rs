//! The divided-power ring S = {Σ a_i u^i / q(i)! : a_i ∈ Z_p}, q(i) = ⌊i/e⌋, truncated at u^M.
//!
//! A coefficient b_i is stored as c_i = p^D·b_i mod p^W with D = v_p(q(M−1)!), so every
//! element of S has integral c. Precision r is relative to the lattice S: the element is known
//! modulo p^r·S, i.e. c_i is known modulo p^{r + D − v_p(q(i)!)}. S is a ring, so products keep
//! the smaller precision; only division by p costs a digit.

use crate::base::arith::{vp, vp_factorial};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SRing {
    p: u64,
    e: usize,
    m: usize,
    d: u32,
    w: u32,
    modulus: u128,
    /// v_p(q(i)!) per degree.
    t: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SElem {
    c: Vec<u128>,
    r: u32,
}

fn pow(p: u64, k: u32) -> u128 {
    (p as u128).pow(k)
}

impl SRing {
    /// S truncated at u^m with `digits` guaranteed p-adic digits for exact inputs.
    pub fn new(p: u64, e: usize, m: usize, digits: u32) -> Result<SRing> {
        if e == 0 || m == 0 {
            return Err(Error::pre("S needs e ≥ 1 and a positive u-precision"));
        }
        let t: Vec<u32> = (0..m).map(|i| vp_factorial((i / e) as u64, p)).collect();
        let d = *t.last().expect("m > 0");
        let w = digits + d + 2;
        let bits = 2.0 * w as f64 * (p as f64).log2();
        if bits >= 127.0 {
            return Err(Error::Resource(format!("S at p = {p}, M = {m}, e = {e} needs {w} p-adic digits, beyond 128-bit products")));
        }
        Ok(SRing { p, e, m, d, w, modulus: pow(p, w), t })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> usize {
        self.e
    }

    /// u-precision M.
    pub fn len(&self) -> usize {
        self.m
    }

    /// Working digits W of the scaled coefficients (N_S + D in total).
    pub fn working_digits(&self) -> u32 {
        self.w
    }

    /// The divided-power budget D = v_p(q(M−1)!).
    pub fn budget(&self) -> u32 {
        self.d
    }

    pub fn max_precision(&self) -> u32 {
        self.w - self.d
    }

    fn norm(&self, x: i128) -> u128 {
        x.rem_euclid(self.modulus as i128) as u128
    }

    pub fn zero(&self) -> SElem {
        SElem { c: vec![0; self.m], r: self.max_precision() }
    }

    pub fn one(&self) -> SElem {
        self.from_ints(&[1])
    }

    /// An element of W(k)[u] ⊂ S from integer coefficients (lowest degree first).
    pub fn from_ints(&self, ints: &[i128]) -> SElem {
        let mut s = self.zero();
        let scale = pow(self.p, self.d);
        for (i, &b) in ints.iter().enumerate().take(self.m) {
            s.c[i] = self.norm(b) * scale % self.modulus;
        }
        s
    }

    /// a·u^i/q(i)! for an integer a.
    pub fn divided_monomial(&self, i: usize, a: i128) -> SElem {
        let mut s = self.zero();
        if i >= self.m {
            return s;
        }
        let k = (i / self.e) as u64;
        let mut unit: u128 = 1;
        for j in 1..=k {
            let mut x = j;
            while x % self.p == 0 {
                x /= self.p;
            }
            unit = unit * (x as u128 % self.modulus) % self.modulus;
        }
        let inv = self.inverse_mod(unit);
        let v = self.t[i];
        s.c[i] = self.norm(a) * inv % self.modulus * pow(self.p, self.d - v) % self.modulus;
        s
    }

    fn inverse_mod(&self, a: u128) -> u128 {
        // a is prime to p; extended Euclid in i128 is enough for moduli below 2^63.5
        let (mut t, mut new_t) = (0i128, 1i128);
        let (mut r, mut new_r) = (self.modulus as i128, (a % self.modulus) as i128);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        self.norm(t)
    }

    /// a/n for an integer n prime to p.
    pub fn div_unit_int(&self, a: &SElem, n: i128) -> SElem {
        let inv = self.inverse_mod(self.norm(n));
        SElem { c: a.c.iter().map(|x| x * inv % self.modulus).collect(), r: a.r }
    }

    pub fn add(&self, a: &SElem, b: &SElem) -> SElem {
        SElem { c: a.c.iter().zip(&b.c).map(|(x, y)| (x + y) % self.modulus).collect(), r: a.r.min(b.r) }
    }

    pub fn sub(&self, a: &SElem, b: &SElem) -> SElem {
        SElem { c: a.c.iter().zip(&b.c).map(|(x, y)| (x + self.modulus - y) % self.modulus).collect(), r: a.r.min(b.r) }
    }

    pub fn neg(&self, a: &SElem) -> SElem {
        self.sub(&self.zero(), a)
    }

    pub fn scale_int(&self, a: &SElem, k: i128) -> SElem {
        let k = self.norm(k);
        SElem { c: a.c.iter().map(|x| x * k % self.modulus).collect(), r: a.r }
    }

    pub fn mul(&self, a: &SElem, b: &SElem) -> SElem {
        let scale = pow(self.p, self.d);
        let mut out = vec![0u128; self.m];
        for (i, &x) in a.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.c.iter().enumerate().take(self.m - i) {
                if y == 0 {
                    continue;
                }
                // x·y < p^{2W} fits; the true product is divisible by p^D
                let prod = x * y / scale;
                out[i + j] = (out[i + j] + prod % self.modulus) % self.modulus;
            }
        }
        SElem { c: out, r: a.r.min(b.r) }
    }

    /// σ: u ↦ u^p, trivial on the coefficients (k = F_p).
    pub fn sigma(&self, a: &SElem) -> SElem {
        let mut out = vec![0u128; self.m];
        for (i, &x) in a.c.iter().enumerate() {
            let j = i * self.p as usize;
            if j < self.m {
                out[j] = x;
            }
        }
        SElem { c: out, r: a.r }
    }

    /// N = −u·d/du.
    pub fn n_op(&self, a: &SElem) -> SElem {
        SElem { c: a.c.iter().enumerate().map(|(i, &x)| self.norm(-(i as i128)) * x % self.modulus).collect(), r: a.r }
    }

    /// Division by p of an element known to lie in p·S.
    pub fn div_p(&self, a: &SElem) -> Result<SElem> {
        if a.r == 0 {
            return Err(Error::indeterminate("no p-adic digits left to divide by p", 0));
        }
        let mut c = Vec::with_capacity(self.m);
        for (i, &x) in a.c.iter().enumerate() {
            let known = self.known_digits(a.r, i);
            let x = x % pow(self.p, known);
            // p·S needs one digit beyond the divided-power budget of this degree
            if x % pow(self.p, (self.d - self.t[i] + 1).min(known)) != 0 {
                return Err(Error::pre(format!("coefficient of u^{i} is not divisible by p in S")));
            }
            c.push(x / self.p as u128);
        }
        Ok(SElem { c, r: a.r - 1 })
    }

    fn known_digits(&self, r: u32, i: usize) -> u32 {
        (r + self.d - self.t[i]).min(self.w)
    }

    /// Equality modulo p^{min precision}·S.
    pub fn eq(&self, a: &SElem, b: &SElem) -> bool {
        let r = a.r.min(b.r);
        (0..self.m).all(|i| {
            let m = pow(self.p, self.known_digits(r, i));
            a.c[i] % m == b.c[i] % m
        })
    }

    pub fn is_zero(&self, a: &SElem) -> bool {
        self.eq(a, &SElem { c: vec![0; self.m], r: a.r })
    }

    /// Lowest degree carrying a nonzero coefficient at precision.
    pub fn u_order(&self, a: &SElem) -> Option<usize> {
        (0..self.m).find(|&i| a.c[i] % pow(self.p, self.known_digits(a.r, i)) != 0)
    }

    /// Least relative p-adic order v with a ∈ p^v·S, capped at the precision.
    pub fn p_order(&self, a: &SElem) -> u32 {
        (0..self.m)
            .map(|i| {
                let x = a.c[i] % pow(self.p, self.known_digits(a.r, i));
                if x == 0 {
                    a.r
                } else {
                    let v = vp_u128(x, self.p) + self.t[i];
                    v.saturating_sub(self.d).min(a.r)
                }
            })
            .min()
            .unwrap_or(a.r)
    }

    /// Whether the constant term vanishes, i.e. a lies in the ideal I.
    pub fn in_ideal_i(&self, a: &SElem) -> bool {
        a.c[0] % pow(self.p, self.known_digits(a.r, 0)) == 0
    }

    pub fn is_unit(&self, a: &SElem) -> bool {
        // constant coefficient b_0 = c_0 / p^D must be a p-adic unit
        let b0 = a.c[0] / pow(self.p, self.d);
        a.c[0] % pow(self.p, self.d) == 0 && b0 % self.p as u128 != 0
    }

    pub fn inverse(&self, a: &SElem) -> Result<SElem> {
        if !self.is_unit(a) {
            return Err(Error::pre("element of S is not a unit"));
        }
        let b0 = a.c[0] / pow(self.p, self.d);
        let inv0 = self.inverse_mod(b0);
        let inv0_s = self.from_u128(inv0);
        // a = b0·(1 + z), z ∈ I; (1 + z)^{-1} = Σ (−z)^k, finite below u^M
        let mut z = self.mul(a, &inv0_s);
        z.c[0] = 0;
        let minus_z = self.neg(&z);
        let mut term = self.one();
        let mut acc = self.one();
        for _ in 1..self.m {
            term = self.mul(&term, &minus_z);
            if term.c.iter().all(|&x| x == 0) {
                break;
            }
            acc = self.add(&acc, &term);
        }
        let mut out = self.mul(&acc, &inv0_s);
        out.r = out.r.min(a.r);
        Ok(out)
    }

    fn from_u128(&self, x: u128) -> SElem {
        let mut s = self.zero();
        s.c[0] = x % self.modulus * pow(self.p, self.d) % self.modulus;
        s
    }

    /// Integral coefficients b_i when a ∈ W(k)[[u]] at precision (None if some b_i is not integral).
    pub fn integral_coeffs(&self, a: &SElem) -> Option<Vec<u128>> {
        let scale = pow(self.p, self.d);
        a.c.iter().map(|&x| if x % scale == 0 { Some(x / scale) } else { None }).collect()
    }

    pub fn with_precision(&self, a: &SElem, r: u32) -> SElem {
        SElem { c: a.c.clone(), r: a.r.min(r) }
    }

    /// Human-readable b_i = c_i / p^D, reduced to the known digits with signed representatives.
    pub fn format(&self, a: &SElem) -> String {
        let mut parts = Vec::new();
        for (i, &x) in a.c.iter().enumerate() {
            let m = pow(self.p, self.known_digits(a.r, i));
            let x = x % m;
            if x == 0 {
                continue;
            }
            let v = vp_u128(x, self.p).min(self.d);
            let (num, neg) = if 2 * x > m { (m - x, true) } else { (x, false) };
            let num = num / pow(self.p, v);
            let sign = if neg { "-" } else { "" };
            let coeff = if v == self.d { format!("{sign}{num}") } else { format!("{sign}{num}/{}^{}", self.p, self.d - v) };
            parts.push(if i == 0 { coeff } else { format!("{coeff}*u^{i}") });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

impl SElem {
    pub fn precision(&self) -> u32 {
        self.r
    }
}

fn vp_u128(x: u128, p: u64) -> u32 {
    if x <= u64::MAX as u128 {
        return vp(x as u64, p);
    }
    let mut v = 0;
    let mut x = x;
    while x % p as u128 == 0 {
        x /= p as u128;
        v += 1;
    }
    v
}

pub type SMat = Vec<Vec<SElem>>;

pub fn mat_mul(s: &SRing, a: &SMat, b: &SMat) -> SMat {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(s.zero(), |acc, l| s.add(&acc, &s.mul(&a[i][l], &b[l][j]))))
                .collect()
        })
        .collect()
}

pub fn mat_vec(s: &SRing, a: &SMat, v: &[SElem]) -> Vec<SElem> {
    a.iter().map(|row| row.iter().zip(v).fold(s.zero(), |acc, (x, y)| s.add(&acc, &s.mul(x, y)))).collect()
}

pub fn mat_map(a: &SMat, f: impl Fn(&SElem) -> SElem) -> SMat {
    a.iter().map(|row| row.iter().map(&f).collect()).collect()
}

pub fn column(a: &SMat, j: usize) -> Vec<SElem> {
    a.iter().map(|row| row[j].clone()).collect()
}

pub fn from_columns(cols: &[Vec<SElem>]) -> SMat {
    let n = cols.first().map_or(0, Vec::len);
    (0..n).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect()
}

pub fn identity(s: &SRing, n: usize) -> SMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { s.one() } else { s.zero() }).collect()).collect()
}

/// Gauss–Jordan over the local ring S with unit pivots.
pub fn mat_inverse(s: &SRing, a: &SMat) -> Result<SMat> {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity(s, n);
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| s.is_unit(&m[r][col])) else {
            return Err(Error::pre("matrix over S is not invertible"));
        };
        m.swap(col, piv);
        inv.swap(col, piv);
        let pinv = s.inverse(&m[col][col])?;
        m[col] = m[col].iter().map(|x| s.mul(x, &pinv)).collect();
        inv[col] = inv[col].iter().map(|x| s.mul(x, &pinv)).collect();
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col].clone();
            let (mr, mc) = (m[r].clone(), m[col].clone());
            m[r] = mr.iter().zip(&mc).map(|(x, y)| s.sub(x, &s.mul(&f, y))).collect();
            let (ir, ic) = (inv[r].clone(), inv[col].clone());
            inv[r] = ir.iter().zip(&ic).map(|(x, y)| s.sub(x, &s.mul(&f, y))).collect();
        }
    }
    Ok(inv)
}
