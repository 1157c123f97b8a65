//! Integer and prime-field polynomial helpers.

#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
pub fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

pub fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo the prime `p`.
pub fn invmod_prime(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    powmod(a, p - 2, p)
}

/// Inverse of a unit modulo `p^m`, via Hensel lifting from `p`.
pub fn invmod_prime_power(a: u64, p: u64, modulus: u64) -> Option<u64> {
    if a % p == 0 {
        return None;
    }
    let mut y = invmod_prime(a % p, p);
    let mut prec = p;
    while prec < modulus {
        prec = prec.saturating_mul(prec).min(modulus);
        // y <- y (2 - a y)
        let ay = mulmod(a % modulus, y, modulus);
        y = mulmod(y, submod(2 % modulus, ay, modulus), modulus);
    }
    Some(y % modulus)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits a prime power `q = p^s`, returning `(p, s)`.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while q % p != 0 {
        p += 1;
    }
    let mut s = 0;
    let mut r = q;
    while r % p == 0 {
        r /= p;
        s += 1;
    }
    if r == 1 {
        Some((p, s))
    } else {
        None
    }
}

/// p-adic valuation of n! (Legendre).
pub fn vp_factorial(n: u64, p: u64) -> u32 {
    let mut v = 0;
    let mut q = n / p;
    while q > 0 {
        v += q as u32;
        q /= p;
    }
    v
}

pub fn vp(mut n: u64, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Dense polynomials over F_p, coefficient vectors low degree first.

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.iter().map(|c| c % p).collect();
    let df = f.len() - 1;
    let lead_inv = invmod_prime(f[df] % p, p);
    while r.len() > df {
        let top = *r.last().unwrap();
        let shift = r.len() - 1 - df;
        if top != 0 {
            let c = mulmod(top, lead_inv, p);
            for (i, fi) in f.iter().enumerate() {
                r[shift + i] = submod(r[shift + i], mulmod(c, *fi, p), p);
            }
        }
        r.pop();
    }
    trim(r)
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if *ai == 0 {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] = addmod(out[i + j], mulmod(*ai, *bj, p), p);
        }
    }
    poly_rem(&out, f, p)
}

fn poly_powmod(a: &[u64], mut e: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut base = poly_rem(a, f, p);
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(&result, &base, f, p);
        }
        base = poly_mulmod(&base, &base, f, p);
        e >>= 1;
    }
    result
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        out[i] = submod(x, y, p);
    }
    trim(out)
}

/// Rabin's irreducibility test for a monic `f` over F_p.
pub fn is_irreducible(f: &[u64], p: u64) -> bool {
    let d = f.len() - 1;
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    // x^(p^k) mod f
    let frob_pow = |k: usize| -> Vec<u64> {
        let mut y = x.clone();
        for _ in 0..k {
            y = poly_powmod(&y, p, f, p);
        }
        y
    };
    if poly_sub(&frob_pow(d), &x, p) != Vec::<u64>::new() {
        return false;
    }
    for r in prime_divisors(d as u64) {
        let g = poly_gcd(f, &poly_sub(&frob_pow(d / r as usize), &x, p), p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

/// The first monic irreducible polynomial of degree `d` over F_p, in the order
/// that reads the lower coefficients as a base-p integer.
pub fn first_irreducible(p: u64, d: usize) -> Vec<u64> {
    if d == 1 {
        return vec![0, 1];
    }
    let total = p.pow(d as u32);
    for n in 0..total {
        let mut f = Vec::with_capacity(d + 1);
        let mut r = n;
        for _ in 0..d {
            f.push(r % p);
            r /= p;
        }
        f.push(1);
        if f[0] != 0 && is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_inverse_mod_prime_power() {
        for a in [1u64, 3, 5, 7, 11, 13] {
            let y = invmod_prime_power(a, 2, 64).unwrap();
            assert_eq!(mulmod(a, y, 64), 1);
        }
        assert!(invmod_prime_power(6, 3, 27).is_none());
    }

    #[test]
    fn irreducibles_are_found() {
        assert_eq!(first_irreducible(2, 2), vec![1, 1, 1]);
        assert_eq!(first_irreducible(3, 2), vec![1, 0, 1]);
        let f = first_irreducible(2, 4);
        assert!(is_irreducible(&f, 2));
        assert!(!is_irreducible(&[1, 0, 1], 2));
    }

    #[test]
    fn legendre() {
        assert_eq!(vp_factorial(10, 2), 8);
        assert_eq!(vp_factorial(9, 3), 4);
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(12), None);
    }
}
