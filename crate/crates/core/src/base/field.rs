//! Small finite fields with table arithmetic, and dense linear algebra over them.

use super::arith::{first_irreducible, is_prime};

/// F_{p^deg} with elements encoded as base-p digit strings (lowest digit = constant term).
#[derive(Clone, Debug)]
pub struct SmallField {
    p: u32,
    deg: usize,
    size: u32,
    modulus: Vec<u64>,
    add: Vec<u32>,
    neg: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl PartialEq for SmallField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.modulus == other.modulus
    }
}

impl Eq for SmallField {}

pub const MAX_FIELD_SIZE: u32 = 1024;

impl SmallField {
    pub fn prime(p: u64) -> SmallField {
        SmallField::with_modulus(p, vec![0, 1])
    }

    pub fn new(p: u64, deg: usize) -> SmallField {
        SmallField::with_modulus(p, first_irreducible(p, deg))
    }

    /// The field F_p[x]/(modulus); the modulus must be monic irreducible.
    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> SmallField {
        assert!(is_prime(p));
        let deg = modulus.len() - 1;
        let size = (p as u32).pow(deg as u32);
        assert!(size <= MAX_FIELD_SIZE, "field too large for table arithmetic");
        let pu = p as u32;
        let digits = |mut a: u32| -> Vec<u32> {
            (0..deg)
                .map(|_| {
                    let d = a % pu;
                    a /= pu;
                    d
                })
                .collect()
        };
        let encode = |ds: &[u32]| -> u32 { ds.iter().rev().fold(0, |acc, &d| acc * pu + d) };
        let mut add = vec![0u32; (size * size) as usize];
        let mut neg = vec![0u32; size as usize];
        for a in 0..size {
            let da = digits(a);
            neg[a as usize] = encode(&da.iter().map(|&x| (pu - x) % pu).collect::<Vec<_>>());
            for b in 0..size {
                let db = digits(b);
                let s: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % pu).collect();
                add[(a * size + b) as usize] = encode(&s);
            }
        }
        // multiplication by x on digit vectors
        let times_x = |ds: &[u32]| -> Vec<u32> {
            let top = ds[deg - 1];
            let mut out = vec![0u32; deg];
            for i in (1..deg).rev() {
                out[i] = ds[i - 1];
            }
            for (i, o) in out.iter_mut().enumerate() {
                let sub = (top as u64 * modulus[i] % p) as u32;
                *o = (*o + pu - sub) % pu;
            }
            out
        };
        let mul_slow = |a: u32, b: u32| -> u32 {
            let da = digits(a);
            let mut acc = vec![0u32; deg];
            let mut cur = digits(b);
            for &c in &da {
                for (o, x) in acc.iter_mut().zip(&cur) {
                    *o = (*o + c * x) % pu;
                }
                cur = times_x(&cur);
            }
            encode(&acc)
        };
        // find a generator of the multiplicative group
        let order = size - 1;
        let mut exp = vec![0u32; order.max(1) as usize * 2];
        let mut log = vec![0u32; size as usize];
        'search: for g in 1..size {
            let mut x = 1u32;
            for k in 0..order {
                if x == 1 && k > 0 {
                    continue 'search;
                }
                exp[k as usize] = x;
                x = mul_slow(x, g);
            }
            break;
        }
        for k in 0..order {
            exp[(k + order) as usize] = exp[k as usize];
            log[exp[k as usize] as usize] = k;
        }
        SmallField { p: pu, deg, size, modulus, add, neg, exp, log }
    }

    pub fn p(&self) -> u64 {
        self.p as u64
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.add[(a * self.size + b) as usize]
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: u32) -> u32 {
        assert!(a != 0, "inverse of zero");
        let order = self.size - 1;
        self.exp[((order - self.log[a as usize]) % order) as usize]
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.size - 1) as u64;
        self.exp[((self.log[a as usize] as u64 * (e % order)) % order) as usize]
    }

    /// Coordinates of an element (base-p digits).
    pub fn digits(&self, mut a: u32) -> Vec<u64> {
        (0..self.deg)
            .map(|_| {
                let d = a % self.p;
                a /= self.p;
                d as u64
            })
            .collect()
    }

    pub fn from_digits(&self, ds: &[u64]) -> u32 {
        ds.iter().rev().fold(0u32, |acc, &d| acc * self.p + (d % self.p as u64) as u32)
    }

    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(self.p as i64) as u32
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.size
    }
}

/// A subspace of ℓ^dim stored as a reduced row echelon basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Echelon {
    dim: usize,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn zero(dim: usize) -> Echelon {
        Echelon { dim, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(dim: usize) -> Echelon {
        let rows = (0..dim)
            .map(|i| {
                let mut v = vec![0u32; dim];
                v[i] = 1;
                v
            })
            .collect();
        Echelon { dim, rows, pivots: (0..dim).collect() }
    }

    pub fn span(f: &SmallField, dim: usize, vectors: impl IntoIterator<Item = Vec<u32>>) -> Echelon {
        let mut e = Echelon::zero(dim);
        for v in vectors {
            e.insert(f, v);
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` against the basis; the remainder is zero exactly when v lies in the span.
    pub fn reduce(&self, f: &SmallField, v: &mut [u32]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = v[p];
            if c != 0 {
                let nc = f.neg(c);
                for (x, &r) in v.iter_mut().zip(row) {
                    if r != 0 {
                        *x = f.add(*x, f.mul(nc, r));
                    }
                }
            }
        }
    }

    pub fn contains(&self, f: &SmallField, v: &[u32]) -> bool {
        let mut w = v.to_vec();
        self.reduce(f, &mut w);
        w.iter().all(|&x| x == 0)
    }

    /// Adds a vector; returns true if the rank grew.
    pub fn insert(&mut self, f: &SmallField, mut v: Vec<u32>) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        self.reduce(f, &mut v);
        let Some(p) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = f.inv(v[p]);
        for x in v.iter_mut() {
            *x = f.mul(*x, inv);
        }
        // clear the new pivot column from existing rows
        for row in self.rows.iter_mut() {
            let c = row[p];
            if c != 0 {
                let nc = f.neg(c);
                for (x, &r) in row.iter_mut().zip(&v) {
                    if r != 0 {
                        *x = f.add(*x, f.mul(nc, r));
                    }
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, v);
        true
    }

    pub fn contains_space(&self, f: &SmallField, other: &Echelon) -> bool {
        other.rows.iter().all(|v| self.contains(f, v))
    }

    pub fn sum(&self, f: &SmallField, other: &Echelon) -> Echelon {
        let mut e = self.clone();
        for v in &other.rows {
            e.insert(f, v.clone());
        }
        e
    }

    pub fn intersect(&self, f: &SmallField, other: &Echelon) -> Echelon {
        // x = Σ c_i a_i lies in `other` iff Σ c_i red(a_i) = 0
        let reds: Vec<Vec<u32>> = self
            .rows
            .iter()
            .map(|a| {
                let mut w = a.clone();
                other.reduce(f, &mut w);
                w
            })
            .collect();
        let k = reds.len();
        let mat: Vec<Vec<u32>> = (0..self.dim).map(|j| (0..k).map(|i| reds[i][j]).collect()).collect();
        let ker = kernel(f, &mat, k);
        Echelon::span(f, self.dim, ker.into_iter().map(|c| combine(f, &self.rows, &c, self.dim)))
    }

    /// Image under a map given on vectors.
    pub fn map(&self, f: &SmallField, target_dim: usize, g: impl Fn(&[u32]) -> Vec<u32>) -> Echelon {
        Echelon::span(f, target_dim, self.rows.iter().map(|v| g(v)))
    }

    /// Canonical key for hashing and ordering.
    pub fn key(&self) -> Vec<u32> {
        let mut k = Vec::with_capacity(self.rows.len() * (self.dim + 1));
        for (r, p) in self.rows.iter().zip(&self.pivots) {
            k.push(*p as u32);
            k.extend_from_slice(r);
        }
        k
    }
}

/// Σ c_i v_i.
pub fn combine(f: &SmallField, vs: &[Vec<u32>], c: &[u32], dim: usize) -> Vec<u32> {
    let mut out = vec![0u32; dim];
    for (v, &ci) in vs.iter().zip(c) {
        if ci == 0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(v) {
            if x != 0 {
                *o = f.add(*o, f.mul(ci, x));
            }
        }
    }
    out
}

/// Basis of {x ∈ ℓ^cols : M x = 0} for M given by rows.
pub fn kernel(f: &SmallField, rows: &[Vec<u32>], cols: usize) -> Vec<Vec<u32>> {
    let mut m: Vec<Vec<u32>> = rows.iter().filter(|r| r.iter().any(|&x| x != 0)).cloned().collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, pr);
        let inv = f.inv(m[r][c]);
        for x in m[r].iter_mut() {
            *x = f.mul(*x, inv);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[c] != 0 {
                let nc = f.neg(row[c]);
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    if y != 0 {
                        *x = f.add(*x, f.mul(nc, y));
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let mut is_pivot = vec![false; cols];
    for &c in &pivot_cols {
        is_pivot[c] = true;
    }
    let mut out = Vec::new();
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![0u32; cols];
        v[free] = 1;
        for (row, &pc) in m.iter().zip(&pivot_cols) {
            v[pc] = f.neg(row[free]);
        }
        out.push(v);
    }
    out
}

/// Applies a matrix (given by rows) to a vector.
pub fn apply(f: &SmallField, rows: &[Vec<u32>], v: &[u32]) -> Vec<u32> {
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(0u32, |acc, (&a, &b)| if a == 0 || b == 0 { acc } else { f.add(acc, f.mul(a, b)) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f9_field_axioms() {
        let f = SmallField::new(3, 2);
        assert_eq!(f.size(), 9);
        for a in 1..9 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
            for b in 0..9 {
                assert_eq!(f.sub(f.add(a, b), b), a);
            }
        }
        // Frobenius is additive
        for a in 0..9 {
            for b in 0..9 {
                assert_eq!(f.pow(f.add(a, b), 3), f.add(f.pow(a, 3), f.pow(b, 3)));
            }
        }
    }

    #[test]
    fn kernel_and_intersection() {
        let f = SmallField::prime(2);
        let a = Echelon::span(&f, 3, vec![vec![1, 0, 0], vec![0, 1, 0]]);
        let b = Echelon::span(&f, 3, vec![vec![0, 1, 1], vec![1, 1, 0]]);
        let i = a.intersect(&f, &b);
        assert_eq!(i.rank(), 1);
        assert!(i.contains(&f, &[1, 1, 0]));
        let k = kernel(&f, &[vec![1, 1, 0]], 3);
        assert_eq!(k.len(), 2);
        for v in k {
            assert_eq!(apply(&f, &[vec![1, 1, 0]], &v), vec![0]);
        }
    }
}
