//! Finite coefficient rings of the shape (Z/p^m)[x_1,...,x_r]/(g_1(x_1),...,g_r(x_r)).
//!
//! One generator may carry the residue field k (with its Frobenius lift), the
//! others model the coefficient ring A: a finite field, dual numbers, a
//! bounded polynomial variable, or the equal-characteristic parameter.

use std::fmt;

use super::arith::{
    addmod, first_irreducible, invmod_prime, invmod_prime_power, mulmod, powmod, submod,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GenKind {
    /// Generator of the residue field k; σ acts through the Frobenius lift.
    Residue,
    /// Generator of a finite coefficient field; σ acts trivially.
    Field,
    /// Nilpotent generator (ε, a bounded polynomial variable, or π₀); σ acts trivially.
    Nilpotent,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub name: String,
    pub kind: GenKind,
    /// Monic relation, lowest degree first, reduced mod p^m.
    pub relation: Vec<u64>,
}

impl Generator {
    pub fn degree(&self) -> usize {
        self.relation.len() - 1
    }
}

/// The coefficient factor A of a base ring.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CoeffKind {
    /// F_{p^a}; `a = 1` is the prime field.
    Field(usize),
    /// F_{p^a}[ε]/(ε²).
    Dual(usize),
    /// F_{p^a}[T] represented with T^bound = 0; callers keep degrees below the bound.
    Poly(usize, usize),
}

impl CoeffKind {
    pub fn field_degree(&self) -> usize {
        match self {
            CoeffKind::Field(a) | CoeffKind::Dual(a) | CoeffKind::Poly(a, _) => *a,
        }
    }
}

impl fmt::Display for CoeffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffKind::Field(a) => write!(f, "field {a}"),
            CoeffKind::Dual(a) => write!(f, "dual {a}"),
            CoeffKind::Poly(a, b) => write!(f, "poly {a} {b}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoeffRing {
    p: u64,
    m: u32,
    modulus: u64,
    gens: Vec<Generator>,
    strides: Vec<usize>,
    dim: usize,
    /// Sparse products of basis monomials, indexed by `i * dim + j`.
    mul: Vec<Vec<(usize, u64)>>,
    /// σ on basis monomials, column `j` at `frob[j * dim..(j + 1) * dim]`.
    frob: Vec<u64>,
    frob_is_identity: bool,
}

impl PartialEq for CoeffRing {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
            && self.m == other.m
            && self.gens == other.gens
            && self.frob == other.frob
    }
}

impl Eq for CoeffRing {}

/// How σ acts on the residue generator.
#[derive(Clone, Copy, Debug)]
pub enum ResidueFrobenius {
    /// The unique lift of x ↦ x^p to the Galois ring, found by Hensel iteration.
    WittLift,
    /// x ↦ x^q for the given power q of p (exact in characteristic p).
    Power(u64),
}

impl CoeffRing {
    /// Builds `W_m(F_{p^residue_degree}) ⊗ extra`, where `extra` lists additional
    /// generators (relations over F_p, lifted as integers).
    pub fn build(
        p: u64,
        m: u32,
        residue_degree: usize,
        residue_frob: ResidueFrobenius,
        extra: Vec<Generator>,
    ) -> CoeffRing {
        let modulus = p.pow(m);
        let mut gens = Vec::new();
        if residue_degree > 1 {
            gens.push(Generator {
                name: "x".into(),
                kind: GenKind::Residue,
                relation: first_irreducible(p, residue_degree),
            });
        }
        gens.extend(extra);
        let mut ring = CoeffRing::from_generators(p, m, modulus, gens);
        if residue_degree > 1 {
            let x = ring.gen(0);
            let image = match residue_frob {
                ResidueFrobenius::Power(q) => ring.pow(&x, q),
                ResidueFrobenius::WittLift => ring.hensel_root(0, &ring.pow(&x, p)),
            };
            ring.set_generator_frobenius(0, &image);
        }
        ring
    }

    fn from_generators(p: u64, m: u32, modulus: u64, gens: Vec<Generator>) -> CoeffRing {
        let mut strides = Vec::with_capacity(gens.len());
        let mut dim = 1usize;
        for g in &gens {
            strides.push(dim);
            dim *= g.degree();
        }
        let mut ring = CoeffRing {
            p,
            m,
            modulus,
            gens,
            strides,
            dim,
            mul: Vec::new(),
            frob: Vec::new(),
            frob_is_identity: true,
        };
        ring.build_mul_table();
        let mut frob = vec![0u64; dim * dim];
        for j in 0..dim {
            frob[j * dim + j] = 1 % modulus;
        }
        ring.frob = frob;
        ring
    }

    /// The prime field Z/p^m with no generators.
    pub fn prime(p: u64, m: u32) -> CoeffRing {
        CoeffRing::from_generators(p, m, p.pow(m), Vec::new())
    }

    fn exponents(&self, idx: usize) -> Vec<usize> {
        self.gens
            .iter()
            .enumerate()
            .map(|(v, g)| (idx / self.strides[v]) % g.degree())
            .collect()
    }

    /// Powers x^a for a < 2·deg reduced by the relation, as coefficient rows.
    fn reduction_rows(&self, v: usize) -> Vec<Vec<u64>> {
        let g = &self.gens[v];
        let d = g.degree();
        let md = self.modulus;
        let mut rows = Vec::with_capacity(2 * d);
        let mut cur = vec![0u64; d];
        cur[0] = 1 % md;
        for _ in 0..(2 * d).max(1) {
            rows.push(cur.clone());
            // multiply by x
            let top = cur[d - 1];
            let mut next = vec![0u64; d];
            for i in (1..d).rev() {
                next[i] = cur[i - 1];
            }
            for (i, slot) in next.iter_mut().enumerate() {
                *slot = submod(*slot, mulmod(top, g.relation[i], md), md);
            }
            if d == 1 {
                next[0] = submod(0, mulmod(cur[0], g.relation[0], md), md);
            }
            cur = next;
        }
        rows
    }

    fn build_mul_table(&mut self) {
        let d = self.dim;
        let rows: Vec<Vec<Vec<u64>>> = (0..self.gens.len()).map(|v| self.reduction_rows(v)).collect();
        let mut table = Vec::with_capacity(d * d);
        for i in 0..d {
            let ei = self.exponents(i);
            for j in 0..d {
                let ej = self.exponents(j);
                // tensor product of per-generator reductions
                let mut acc: Vec<(usize, u64)> = vec![(0, 1 % self.modulus)];
                for v in 0..self.gens.len() {
                    let row = &rows[v][ei[v] + ej[v]];
                    let mut next = Vec::new();
                    for &(idx, c) in &acc {
                        for (k, rc) in row.iter().enumerate() {
                            if *rc != 0 {
                                next.push((idx + k * self.strides[v], mulmod(c, *rc, self.modulus)));
                            }
                        }
                    }
                    acc = next;
                }
                acc.retain(|&(_, c)| c != 0);
                table.push(acc);
            }
        }
        self.mul = table;
    }

    fn set_generator_frobenius(&mut self, v: usize, image: &[u64]) {
        let d = self.dim;
        let mut frob = vec![0u64; d * d];
        for j in 0..d {
            let e = self.exponents(j);
            let mut val = self.one();
            for (w, &ew) in e.iter().enumerate() {
                let g = if w == v { image.to_vec() } else { self.gen(w) };
                val = self.mul(&val, &self.pow(&g, ew as u64));
            }
            frob[j * d..(j + 1) * d].copy_from_slice(&val);
        }
        self.frob_is_identity = (0..d).all(|j| (0..d).all(|i| frob[j * d + i] == if i == j { 1 % self.modulus } else { 0 }));
        self.frob = frob;
    }

    /// Hensel-lifts a root of generator `v`'s relation starting from `start`.
    fn hensel_root(&self, v: usize, start: &[u64]) -> Vec<u64> {
        let rel = self.gens[v].relation.clone();
        let deriv: Vec<u64> = rel
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| mulmod(*c, i as u64 % self.modulus, self.modulus))
            .collect();
        let eval = |poly: &[u64], y: &[u64]| -> Vec<u64> {
            let mut acc = self.zero();
            for c in poly.iter().rev() {
                acc = self.mul(&acc, y);
                acc = self.add(&acc, &self.from_int(*c as i64));
            }
            acc
        };
        let mut y = start.to_vec();
        for _ in 0..=(self.m as usize).next_power_of_two().trailing_zeros() + 1 {
            let fy = eval(&rel, &y);
            if self.is_zero(&fy) {
                break;
            }
            let dy = eval(&deriv, &y);
            let inv = self.inverse(&dy).expect("separable relation has unit derivative at its roots");
            y = self.sub(&y, &self.mul(&fy, &inv));
        }
        debug_assert!(self.is_zero(&eval(&rel, &y)));
        y
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn torsion_exponent(&self) -> u32 {
        self.m
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator_index(&self, kind: GenKind) -> Option<usize> {
        self.gens.iter().position(|g| g.kind == kind)
    }

    pub fn generator_named(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn frobenius_is_identity(&self) -> bool {
        self.frob_is_identity
    }

    /// Exponent vector of basis monomial `idx`.
    pub fn monomial(&self, idx: usize) -> Vec<usize> {
        self.exponents(idx)
    }

    pub fn monomial_index(&self, exps: &[usize]) -> usize {
        exps.iter().zip(&self.strides).map(|(e, s)| e * s).sum()
    }

    pub fn stride(&self, v: usize) -> usize {
        self.strides[v]
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.dim]
    }

    pub fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.dim];
        v[0] = 1 % self.modulus;
        v
    }

    pub fn from_int(&self, n: i64) -> Vec<u64> {
        let mut v = vec![0; self.dim];
        v[0] = n.rem_euclid(self.modulus as i64) as u64;
        v
    }

    pub fn gen(&self, v: usize) -> Vec<u64> {
        let mut out = vec![0; self.dim];
        if self.gens[v].degree() == 1 {
            // x + c = 0
            out[0] = submod(0, self.gens[v].relation[0], self.modulus);
        } else {
            out[self.strides[v]] = 1 % self.modulus;
        }
        out
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| addmod(*x, *y, self.modulus)).collect()
    }

    pub fn sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| submod(*x, *y, self.modulus)).collect()
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|x| submod(0, *x, self.modulus)).collect()
    }

    pub fn add_assign(&self, a: &mut [u64], b: &[u64]) {
        for (x, y) in a.iter_mut().zip(b) {
            *x = addmod(*x, *y, self.modulus);
        }
    }

    pub fn sub_assign(&self, a: &mut [u64], b: &[u64]) {
        for (x, y) in a.iter_mut().zip(b) {
            *x = submod(*x, *y, self.modulus);
        }
    }

    /// `out += a * b`.
    #[inline]
    pub fn mul_acc(&self, out: &mut [u64], a: &[u64], b: &[u64]) {
        let md = self.modulus;
        if self.dim == 1 {
            out[0] = addmod(out[0], mulmod(a[0], b[0], md), md);
            return;
        }
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let c = mulmod(ai, bj, md);
                for &(k, t) in &self.mul[i * self.dim + j] {
                    out[k] = addmod(out[k], mulmod(c, t, md), md);
                }
            }
        }
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = self.zero();
        self.mul_acc(&mut out, a, b);
        out
    }

    pub fn scale(&self, a: &[u64], k: u64) -> Vec<u64> {
        a.iter().map(|x| mulmod(*x, k % self.modulus, self.modulus)).collect()
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut r = self.one();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    pub fn frobenius(&self, a: &[u64]) -> Vec<u64> {
        if self.frob_is_identity {
            return a.to_vec();
        }
        let d = self.dim;
        let mut out = self.zero();
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0 {
                continue;
            }
            for i in 0..d {
                let f = self.frob[j * d + i];
                if f != 0 {
                    out[i] = addmod(out[i], mulmod(aj, f, self.modulus), self.modulus);
                }
            }
        }
        out
    }

    /// Matrix of multiplication by `a` reduced mod p, rows indexed by output.
    fn mult_matrix_mod_p(&self, a: &[u64]) -> Vec<Vec<u64>> {
        let d = self.dim;
        let mut mat = vec![vec![0u64; d]; d];
        for j in 0..d {
            let mut basis = self.zero();
            basis[j] = 1;
            let prod = self.mul(a, &basis);
            for i in 0..d {
                mat[i][j] = prod[i] % self.p;
            }
        }
        mat
    }

    /// Solves `a * y = 1 (mod p)` by elimination over F_p.
    fn inverse_mod_p(&self, a: &[u64]) -> Option<Vec<u64>> {
        let p = self.p;
        let d = self.dim;
        let mut mat = self.mult_matrix_mod_p(a);
        let mut rhs = vec![0u64; d];
        rhs[0] = 1;
        let mut row = 0;
        let mut pivots = vec![usize::MAX; d];
        for col in 0..d {
            let Some(r) = (row..d).find(|&r| mat[r][col] != 0) else {
                return None;
            };
            mat.swap(row, r);
            rhs.swap(row, r);
            let inv = invmod_prime(mat[row][col], p);
            for c in 0..d {
                mat[row][c] = mulmod(mat[row][c], inv, p);
            }
            rhs[row] = mulmod(rhs[row], inv, p);
            for r2 in 0..d {
                if r2 != row && mat[r2][col] != 0 {
                    let f = mat[r2][col];
                    for c in 0..d {
                        mat[r2][c] = submod(mat[r2][c], mulmod(f, mat[row][c], p), p);
                    }
                    rhs[r2] = submod(rhs[r2], mulmod(f, rhs[row], p), p);
                }
            }
            pivots[col] = row;
            row += 1;
        }
        Some((0..d).map(|c| rhs[pivots[c]]).collect())
    }

    pub fn is_unit(&self, a: &[u64]) -> bool {
        if self.dim == 1 {
            return a[0] % self.p != 0;
        }
        self.inverse_mod_p(a).is_some()
    }

    pub fn inverse(&self, a: &[u64]) -> Option<Vec<u64>> {
        if self.dim == 1 {
            return invmod_prime_power(a[0], self.p, self.modulus).map(|x| vec![x]);
        }
        let mut y = self.inverse_mod_p(a)?;
        let two = self.from_int(2);
        let mut prec = 1u32;
        while prec < self.m {
            let ay = self.mul(a, &y);
            y = self.mul(&y, &self.sub(&two, &ay));
            prec *= 2;
        }
        debug_assert_eq!(self.mul(a, &y), self.one());
        Some(y)
    }

    pub fn is_nilpotent(&self, a: &[u64]) -> bool {
        let bound = (self.dim as u64) * self.m as u64;
        let mut e = 1u64;
        let mut x = a.to_vec();
        while e < bound {
            x = self.mul(&x, &x);
            e *= 2;
        }
        self.is_zero(&x)
    }

    /// The subring spanned by the non-nilpotent generators, with σ restricted to it.
    /// Requires those generators to precede the nilpotent ones.
    pub fn field_part(&self) -> CoeffRing {
        let k = self.gens.iter().take_while(|g| g.kind != GenKind::Nilpotent).count();
        assert!(self.gens[k..].iter().all(|g| g.kind == GenKind::Nilpotent), "nilpotent generators must come last");
        let gens = self.gens[..k].to_vec();
        let mut r = CoeffRing::from_generators(self.p, self.m, self.modulus, gens);
        let dl = r.dim;
        let mut frob = vec![0u64; dl * dl];
        for j in 0..dl {
            for i in 0..dl {
                frob[j * dl + i] = self.frob[j * self.dim + i];
            }
        }
        r.frob_is_identity = (0..dl).all(|j| (0..dl).all(|i| frob[j * dl + i] == u64::from(i == j)));
        r.frob = frob;
        r
    }

    /// Reduction modulo p as a ring with the same generators and m = 1.
    pub fn mod_p(&self) -> CoeffRing {
        if self.m == 1 {
            return self.clone();
        }
        let mut r = self.clone();
        r.m = 1;
        r.modulus = self.p;
        for g in &mut r.gens {
            for c in &mut g.relation {
                *c %= self.p;
            }
        }
        for row in &mut r.mul {
            for (_, c) in row.iter_mut() {
                *c %= self.p;
            }
            row.retain(|&(_, c)| c != 0);
        }
        for c in &mut r.frob {
            *c %= self.p;
        }
        r
    }

    pub fn reduce_mod_p(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|c| c % self.p).collect()
    }

    /// p-adic valuation of an element (minimum over coordinates); None for zero.
    pub fn p_valuation(&self, a: &[u64]) -> Option<u32> {
        a.iter()
            .filter(|&&c| c != 0)
            .map(|&c| super::arith::vp(c, self.p))
            .min()
    }

    /// Divides every coordinate by p^k; None if some coordinate is not divisible.
    pub fn div_p_power(&self, a: &[u64], k: u32) -> Option<Vec<u64>> {
        let pk = self.p.pow(k);
        if a.iter().any(|c| c % pk != 0) {
            return None;
        }
        Some(a.iter().map(|c| c / pk).collect())
    }

    /// Number of elements.
    pub fn cardinality(&self) -> u128 {
        (self.modulus as u128).pow(self.dim as u32)
    }

    /// All elements in index order; only sensible for tiny rings.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let total = self.cardinality() as usize;
        (0..total).map(|n| self.element_from_index(n as u128)).collect()
    }

    pub fn element_from_index(&self, mut n: u128) -> Vec<u64> {
        let mut v = vec![0u64; self.dim];
        for slot in v.iter_mut() {
            *slot = (n % self.modulus as u128) as u64;
            n /= self.modulus as u128;
        }
        v
    }

    pub fn element_index(&self, a: &[u64]) -> u128 {
        let mut n = 0u128;
        for c in a.iter().rev() {
            n = n * self.modulus as u128 + *c as u128;
        }
        n
    }

    pub fn format_elem(&self, a: &[u64]) -> String {
        if self.dim == 1 {
            return a[0].to_string();
        }
        let parts: Vec<String> = a.iter().map(|c| c.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

/// Evaluates a generator image polynomial; used by ring maps.
pub(crate) fn eval_monomial(ring: &CoeffRing, images: &[Vec<u64>], exps: &[usize]) -> Vec<u64> {
    let mut val = ring.one();
    for (img, &e) in images.iter().zip(exps) {
        val = ring.mul(&val, &ring.pow(img, e as u64));
    }
    val
}

/// Standard generators for the coefficient factor A over F_p.
pub fn coefficient_generators(p: u64, kind: &CoeffKind) -> Vec<Generator> {
    let mut out = Vec::new();
    let a = kind.field_degree();
    if a > 1 {
        out.push(Generator {
            name: "y".into(),
            kind: GenKind::Field,
            relation: first_irreducible(p, a),
        });
    }
    match kind {
        CoeffKind::Field(_) => {}
        CoeffKind::Dual(_) => out.push(Generator {
            name: "eps".into(),
            kind: GenKind::Nilpotent,
            relation: vec![0, 0, 1],
        }),
        CoeffKind::Poly(_, bound) => {
            let mut rel = vec![0u64; bound + 1];
            rel[*bound] = 1;
            out.push(Generator {
                name: "T".into(),
                kind: GenKind::Nilpotent,
                relation: rel,
            });
        }
    }
    out
}

/// Checks that `powmod` style Frobenius agrees with x ↦ x^p modulo p.
pub fn frobenius_reduces_to_power(ring: &CoeffRing, a: &[u64]) -> bool {
    let lhs = ring.reduce_mod_p(&ring.frobenius(a));
    let rhs = ring.reduce_mod_p(&ring.pow(a, ring.p));
    if ring.generator_index(GenKind::Residue).is_none() {
        return true;
    }
    let _ = powmod;
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f4() -> CoeffRing {
        CoeffRing::build(2, 1, 2, ResidueFrobenius::WittLift, Vec::new())
    }

    #[test]
    fn f4_arithmetic() {
        let r = f4();
        let x = r.gen(0);
        // x^2 = x + 1
        assert_eq!(r.mul(&x, &x), r.add(&x, &r.one()));
        assert_eq!(r.frobenius(&x), r.mul(&x, &x));
        let inv = r.inverse(&x).unwrap();
        assert_eq!(r.mul(&inv, &x), r.one());
        assert_eq!(r.cardinality(), 4);
    }

    #[test]
    fn witt_frobenius_is_root_of_modulus_and_lifts_power() {
        for (p, m, d) in [(2u64, 3u32, 2usize), (3, 2, 2), (2, 4, 3), (5, 2, 2)] {
            let r = CoeffRing::build(p, m, d, ResidueFrobenius::WittLift, Vec::new());
            let x = r.gen(0);
            let fx = r.frobenius(&x);
            // σ has order d on the Galois ring
            let mut y = x.clone();
            for _ in 0..d {
                y = r.frobenius(&y);
            }
            assert_eq!(y, x);
            assert!(frobenius_reduces_to_power(&r, &fx));
            // σ is multiplicative
            let a = r.add(&x, &r.from_int(3));
            let b = r.mul(&x, &x);
            assert_eq!(r.frobenius(&r.mul(&a, &b)), r.mul(&r.frobenius(&a), &r.frobenius(&b)));
        }
    }

    #[test]
    fn dual_numbers_units_and_nilpotents() {
        let gens = coefficient_generators(3, &CoeffKind::Dual(1));
        let r = CoeffRing::build(3, 1, 1, ResidueFrobenius::WittLift, gens);
        let eps = r.gen(0);
        assert!(r.is_nilpotent(&eps));
        assert!(!r.is_unit(&eps));
        let u = r.add(&r.one(), &eps);
        let inv = r.inverse(&u).unwrap();
        assert_eq!(inv, r.sub(&r.one(), &eps));
    }

    #[test]
    fn galois_ring_units() {
        let r = CoeffRing::build(2, 3, 2, ResidueFrobenius::WittLift, Vec::new());
        let a = r.add(&r.gen(0), &r.from_int(2));
        let inv = r.inverse(&a).unwrap();
        assert_eq!(r.mul(&a, &inv), r.one());
        assert!(r.inverse(&r.from_int(2)).is_none());
        assert!(r.is_nilpotent(&r.from_int(2)));
    }
}
