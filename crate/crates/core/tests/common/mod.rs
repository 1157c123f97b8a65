//! Instance generators shared by the integration suites.
#![allow(dead_code)]

use phimod_core::base::{make_base, BaseSpec, CoeffKind, FrobeniusBase, Mat, PolySpec, Series};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Which characteristic the base lives in. The equal-characteristic base uses u₀ = −u^e so that
/// P = π₀ + u^e reduces to u^e, matching the mixed base u^e + p modulo the uniformizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Mixed,
    Equichar,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Mixed => "mixed",
            Flavor::Equichar => "equichar",
        }
    }

    pub fn spec(self, p: u64, e: usize, torsion: u32, precision: i64) -> BaseSpec {
        match self {
            Flavor::Mixed => BaseSpec::standard_mixed(p, e, torsion, precision),
            Flavor::Equichar => BaseSpec::equichar(p, 1, torsion, precision, PolySpec::monomial(-1, e)),
        }
    }

    pub fn base(self, p: u64, e: usize, torsion: u32, precision: i64) -> FrobeniusBase {
        make_base(self.spec(p, e, torsion, precision)).expect("valid base")
    }

    pub fn base_with(self, p: u64, e: usize, torsion: u32, precision: i64, coeffs: CoeffKind) -> FrobeniusBase {
        make_base(self.spec(p, e, torsion, precision).with_coeffs(coeffs)).expect("valid base")
    }
}

pub fn random_poly(rng: &mut ChaCha8Rng, base: &FrobeniusBase, deg: usize) -> Series {
    let p = base.p() as i64;
    let ints: Vec<i64> = (0..=deg).map(|_| rng.gen_range(0..p)).collect();
    base.from_ints(&ints)
}

fn unit_poly(rng: &mut ChaCha8Rng, base: &FrobeniusBase) -> Series {
    let p = base.p() as i64;
    let mut ints = vec![rng.gen_range(1..p)];
    ints.extend((0..2).map(|_| rng.gen_range(0..p)));
    base.from_ints(&ints)
}

fn elementary(base: &FrobeniusBase, i: usize, j: usize, x: Series) -> Mat {
    let mut m = base.identity(2);
    m.set(i, j, x);
    m
}

/// U·diag(P^{a_i})·V with U, V products of elementary and unit-diagonal matrices over k[u]
/// and 0 ≤ a_i ≤ h. Has height ≤ h on the standard lattice by construction.
pub fn random_height_matrix(rng: &mut ChaCha8Rng, base: &FrobeniusBase, rank: usize, h: u32) -> Mat {
    match rank {
        1 => Mat::scalar(&unit_poly(rng, base).mul(&base.p_power(rng.gen_range(0..=h))), 1),
        2 => {
            let d = Mat::diagonal(&[base.p_power(rng.gen_range(0..=h)), base.p_power(rng.gen_range(0..=h))]);
            let s = Mat::diagonal(&[unit_poly(rng, base), unit_poly(rng, base)]);
            let u = elementary(base, 0, 1, random_poly(rng, base, 2)).mul(&elementary(base, 1, 0, random_poly(rng, base, 1)));
            let v = elementary(base, 1, 0, random_poly(rng, base, 2)).mul(&elementary(base, 0, 1, random_poly(rng, base, 1)));
            u.mul(&s).mul(&d).mul(&v)
        }
        _ => panic!("generator covers rank 1 and 2"),
    }
}

/// Random polynomial matrix u^{shift}·(entries of degree ≤ deg).
pub fn random_shifted(rng: &mut ChaCha8Rng, base: &FrobeniusBase, n: usize, shift: i64, deg: usize) -> Mat {
    Mat::from_fn(n, n, |_, _| random_poly(rng, base, deg).shift(shift))
}

pub fn ints(base: &FrobeniusBase, rows: &[Vec<Vec<i64>>]) -> Mat {
    base.mat_from_ints(rows)
}
