//! O_K = W(F_p)[π], π a root of the Eisenstein polynomial P, as vectors in the basis
//! 1, π, …, π^{e−1} modulo a fixed power of p. Elements carry an absolute π-adic precision.

use crate::error::{Error, Result};

const EXACT: i64 = 1 << 40;

#[derive(Clone, Debug)]
struct El {
    a: Vec<i128>,
    rho: i64,
}

pub(super) struct Dvr {
    p: i128,
    e: usize,
    modulus: i128,
    /// π^e = Σ_j rel_j·π^j.
    rel: Vec<i128>,
    p_over_pi: Vec<i128>,
}

fn vp(mut x: i128, p: i128) -> i64 {
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

impl Dvr {
    pub(super) fn new(p: i128, big_p: &[i128], digits: u32) -> Result<Dvr> {
        let e = big_p.len().saturating_sub(1);
        if e == 0 || big_p[e] != 1 {
            return Err(Error::pre("P must be monic of positive degree"));
        }
        if big_p[..e].iter().any(|c| c % p != 0) || (big_p[0] / p) % p == 0 {
            return Err(Error::pre("P is not Eisenstein"));
        }
        let bits = 2.0 * (digits + 2) as f64 * (p as f64).log2();
        if bits >= 125.0 {
            return Err(Error::Resource(format!("{} p-adic digits exceed 128-bit arithmetic", digits + 2)));
        }
        let modulus = p.pow(digits + 2);
        let rel: Vec<i128> = big_p[..e].iter().map(|c| (-c).rem_euclid(modulus)).collect();
        let mut dvr = Dvr { p, e, modulus, rel, p_over_pi: Vec::new() };
        // π^e = p·w with w = Σ (rel_j/p)·π^j a unit, so p/π = π^{e−1}·w^{-1}
        let w = El { a: dvr.rel.iter().map(|c| c / p).collect(), rho: EXACT };
        let w_inv = dvr.unit_inverse(&w);
        let mut pi_pow = vec![0; e];
        pi_pow[e - 1] = 1;
        dvr.p_over_pi = dvr.mul(&El { a: pi_pow, rho: EXACT }, &w_inv).a;
        Ok(dvr)
    }

    fn reduce(&self, c: &[i128]) -> Vec<i128> {
        let mut w: Vec<i128> = c.iter().map(|x| x.rem_euclid(self.modulus)).collect();
        w.resize(w.len().max(self.e), 0);
        for k in (self.e..w.len()).rev() {
            let t = w[k];
            w[k] = 0;
            if t == 0 {
                continue;
            }
            for (j, r) in self.rel.iter().enumerate() {
                let i = k - self.e + j;
                w[i] = (w[i] + t * r) % self.modulus;
            }
        }
        w.truncate(self.e);
        w
    }

    fn val(&self, x: &El) -> i64 {
        x.a.iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(j, &c)| self.e as i64 * vp(c, self.p) + j as i64)
            .min()
            .unwrap_or(EXACT)
            .min(x.rho)
    }

    fn is_zero(&self, x: &El) -> bool {
        self.val(x) >= x.rho
    }

    fn mul(&self, x: &El, y: &El) -> El {
        let mut c = vec![0i128; 2 * self.e - 1];
        for (i, a) in x.a.iter().enumerate() {
            for (j, b) in y.a.iter().enumerate() {
                c[i + j] = (c[i + j] + a * b) % self.modulus;
            }
        }
        let rho = (x.rho + self.val(y)).min(y.rho + self.val(x)).min(EXACT);
        El { a: self.reduce(&c), rho }
    }

    fn sub(&self, x: &El, y: &El) -> El {
        El { a: x.a.iter().zip(&y.a).map(|(a, b)| (a - b).rem_euclid(self.modulus)).collect(), rho: x.rho.min(y.rho) }
    }

    fn div_pi(&self, x: &El) -> El {
        debug_assert!(x.a[0] % self.p == 0);
        let a0 = x.a[0] / self.p;
        let mut out: Vec<i128> = self.p_over_pi.iter().map(|c| c * a0 % self.modulus).collect();
        for j in 1..self.e {
            out[j - 1] = (out[j - 1] + x.a[j]) % self.modulus;
        }
        El { a: out, rho: if x.rho >= EXACT { EXACT } else { x.rho - 1 } }
    }

    fn inverse_mod(&self, a: i128) -> i128 {
        let (mut t, mut new_t) = (0i128, 1i128);
        let (mut r, mut new_r) = (self.modulus, a.rem_euclid(self.modulus));
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        t.rem_euclid(self.modulus)
    }

    fn unit_inverse(&self, x: &El) -> El {
        let inv0 = self.inverse_mod(x.a[0]);
        let scale = El { a: self.constant(inv0), rho: EXACT };
        let y = self.mul(x, &scale);
        let mut minus_z = self.sub(&El { a: self.constant(1), rho: EXACT }, &y);
        minus_z.a[0] = 0;
        let mut acc = El { a: self.constant(1), rho: EXACT };
        let mut term = acc.clone();
        loop {
            term = self.mul(&term, &minus_z);
            if term.a.iter().all(|&c| c == 0) {
                break;
            }
            acc = El { a: acc.a.iter().zip(&term.a).map(|(a, b)| (a + b) % self.modulus).collect(), rho: EXACT };
        }
        let mut out = self.mul(&acc, &scale);
        out.rho = x.rho;
        out
    }

    fn constant(&self, c: i128) -> Vec<i128> {
        let mut v = vec![0; self.e];
        v[0] = c.rem_euclid(self.modulus);
        v
    }

    /// a/b for v(a) ≥ v(b) = v < precision.
    fn quotient(&self, a: &El, b: &El) -> El {
        let v = self.val(b);
        let (mut a, mut b) = (a.clone(), b.clone());
        for _ in 0..v {
            a = self.div_pi(&a);
            b = self.div_pi(&b);
        }
        self.mul(&a, &self.unit_inverse(&b))
    }

    /// Column-reduces B(π): returns an invertible L (entries as integer polynomials of degree < e),
    /// the number d₁ of independent columns of B(π)·L (they come first), and the π-adic precision
    /// to which the remaining columns vanish.
    pub(super) fn kernel_arrangement(&self, b: &[Vec<Vec<i128>>], rho0: i64) -> Result<(Vec<Vec<Vec<i128>>>, usize, i64)> {
        let d = b.len();
        let orig: Vec<Vec<El>> = b.iter().map(|row| row.iter().map(|c| El { a: self.reduce(c), rho: rho0 }).collect()).collect();
        let mut bb = orig.clone();
        let mut l: Vec<Vec<El>> =
            (0..d).map(|i| (0..d).map(|j| El { a: self.constant((i == j) as i128), rho: EXACT }).collect()).collect();
        let swap_cols = |m: &mut Vec<Vec<El>>, x: usize, y: usize| m.iter_mut().for_each(|row| row.swap(x, y));
        let mut k = 0;
        for row in 0..d {
            let Some(piv) = (k..d).filter(|&c| !self.is_zero(&bb[row][c])).min_by_key(|&c| self.val(&bb[row][c])) else {
                continue;
            };
            swap_cols(&mut bb, k, piv);
            swap_cols(&mut l, k, piv);
            for c in k + 1..d {
                if self.is_zero(&bb[row][c]) {
                    continue;
                }
                let f = self.quotient(&bb[row][c], &bb[row][k]);
                for m in [&mut bb, &mut l] {
                    for r in m.iter_mut() {
                        let t = self.mul(&f, &r[k]);
                        r[c] = self.sub(&r[c], &t);
                    }
                }
            }
            k += 1;
            if k == d {
                break;
            }
        }
        // recompute the kernel columns from the exact L to get their true precision
        let exact_l: Vec<Vec<El>> = l.iter().map(|row| row.iter().map(|x| El { a: x.a.clone(), rho: EXACT }).collect()).collect();
        let mut ker_rho = self.e as i64 * (vp(self.modulus, self.p) - 2);
        for c in k..d {
            for row in &orig {
                let mut acc = El { a: vec![0; self.e], rho: EXACT };
                for (x, lrow) in row.iter().zip(&exact_l) {
                    let t = self.mul(x, &lrow[c]);
                    acc = El { a: acc.a.iter().zip(&t.a).map(|(a, b)| (a + b) % self.modulus).collect(), rho: acc.rho.min(t.rho) };
                }
                if !self.is_zero(&acc) {
                    return Err(Error::indeterminate("kernel of B mod P not found at this precision", rho0));
                }
                ker_rho = ker_rho.min(acc.rho);
            }
        }
        let half = self.modulus / 2;
        let lift = |x: &El| x.a.iter().map(|&c| if c > half { c - self.modulus } else { c }).collect::<Vec<i128>>();
        Ok((l.iter().map(|row| row.iter().map(lift).collect()).collect(), k, ker_rho))
    }
}
