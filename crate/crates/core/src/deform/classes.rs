//! Classes of ε-directions β ∈ u^{-r}Mat_n / u^{c}Mat_n modulo α·σ(X) − X·α.
//!
//! σ is F-linear on coefficients, so everything is F_p-linear algebra on coefficient
//! vectors. The X-domain is pole order ≤ ⌊(r + he)/q⌋ and u-degree < c + he, cut down to
//! the X whose coboundary stays inside u^{-r}Mat_n.

use std::collections::HashSet;

use super::TangentProblem;
use crate::base::field::{combine, kernel};
use crate::base::{CoeffKind, Echelon, FrobeniusBase, Mat, Series, SmallField, EXACT};
use crate::error::{Error, Result};
use crate::phimod::{find_conjugator, IsoMode};

/// Representatives are listed only up to this many classes.
pub const REPRESENTATIVE_LIMIT: u128 = 4096;
/// Brute-force orbit counting refuses spaces or domains larger than this.
pub const BRUTE_FORCE_LIMIT: u128 = 1 << 16;

#[derive(Clone, Debug)]
pub struct TangentIndex {
    pub alpha: Mat,
    pub r: i64,
    pub c: i64,
    /// F_p-dimension of V = u^{-r}Mat_n / u^{c}Mat_n.
    pub space_dim: usize,
    /// F_p-dimension of the coboundary image in V.
    pub image_dim: usize,
    /// Dimension of V / image over F.
    pub dim: usize,
    pub count: u128,
    pub representatives: Vec<Mat>,
    /// u-precision of the coboundaries used.
    pub precision: i64,
}

#[derive(Clone, Debug)]
pub struct TangentClassSet {
    pub indices: Vec<TangentIndex>,
    /// Number of classes after identifying isomorphic ε-modules across indices, when computed.
    pub distinct: Option<usize>,
}

/// Coordinates of V and of the polar overflow below u^{-r}.
struct Layout {
    n: usize,
    d: usize,
    r: i64,
    c: i64,
    low: i64,
}

impl Layout {
    fn main_len(&self) -> usize {
        self.n * self.n * (self.c + self.r) as usize * self.d
    }

    fn excess_len(&self) -> usize {
        self.n * self.n * (-self.r - self.low).max(0) as usize * self.d
    }

    /// Splits a matrix into (excess, main) coordinate vectors; terms ≥ c are dropped.
    fn encode(&self, m: &Mat, p: u64) -> Result<(Vec<u32>, Vec<u32>)> {
        let mut main = vec![0u32; self.main_len()];
        let mut excess = vec![0u32; self.excess_len()];
        for i in 0..self.n {
            for j in 0..self.n {
                let s = m.get(i, j);
                if s.precision() < self.c {
                    return Err(Error::indeterminate("coboundary not known up to the cutoff", s.precision()));
                }
                for (deg, a) in s.terms() {
                    if deg >= self.c {
                        continue;
                    }
                    let (vec, off, width) = if deg >= -self.r {
                        (&mut main, (deg + self.r) as usize, (self.c + self.r) as usize)
                    } else if deg >= self.low {
                        (&mut excess, (deg - self.low) as usize, (-self.r - self.low) as usize)
                    } else {
                        return Err(Error::pre("coboundary pole exceeds the expected range"));
                    };
                    let base = ((i * self.n + j) * width + off) * self.d;
                    for (k, &x) in a.iter().enumerate() {
                        vec[base + k] = (x % p) as u32;
                    }
                }
            }
        }
        Ok((excess, main))
    }

    fn decode(&self, base: &FrobeniusBase, v: &[u32]) -> Mat {
        let ring = base.ring();
        let width = (self.c + self.r) as usize;
        Mat::from_fn(self.n, self.n, |i, j| {
            let coeffs: Vec<Vec<u64>> = (0..width)
                .map(|t| {
                    let b = ((i * self.n + j) * width + t) * self.d;
                    v[b..b + self.d].iter().map(|&x| x as u64).collect()
                })
                .collect();
            Series::from_coeffs(ring, base.precision(), -self.r, &coeffs, EXACT)
        })
    }
}

fn layout(tp: &TangentProblem) -> (Layout, i64, i64) {
    let q = tp.base.q() as i64;
    let he = tp.he();
    let s_max = (tp.r + he).div_euclid(q).max(0);
    let top = tp.c + he;
    let l = Layout { n: tp.rank(), d: tp.base.ring().dim(), r: tp.r, c: tp.c, low: -q * s_max };
    (l, s_max, top)
}

/// Domain monomials X = a·u^k·E_ij (a a basis monomial of the coefficient ring).
fn domain(tp: &TangentProblem, s_max: i64, top: i64) -> Vec<Mat> {
    let n = tp.rank();
    let ring = tp.base.ring();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in -s_max..top {
                for c in 0..ring.dim() {
                    let mut a = ring.zero();
                    a[c] = 1;
                    let mut x = tp.base.zero_mat(n, n);
                    x.set(i, j, tp.base.monomial(k, &a));
                    out.push(x);
                }
            }
        }
    }
    out
}

fn field_degree(base: &FrobeniusBase) -> usize {
    base.coeffs().field_degree()
}

pub fn tangent_index(tp: &TangentProblem) -> Result<TangentIndex> {
    let p = tp.base.p();
    let f = SmallField::prime(p);
    let (lay, s_max, top) = layout(tp);
    let xs = domain(tp, s_max, top);
    let mut excess_cols = Vec::with_capacity(xs.len());
    let mut main_cols = Vec::with_capacity(xs.len());
    let mut precision = i64::MAX;
    for x in &xs {
        let z = tp.coboundary(x);
        precision = precision.min(z.precision());
        let (e, m) = lay.encode(&z, p)?;
        excess_cols.push(e);
        main_cols.push(m);
    }
    let main_len = lay.main_len();
    let image = if lay.excess_len() == 0 {
        Echelon::span(&f, main_len, main_cols)
    } else {
        // X whose coboundary has no pole below u^{-r}
        let rows: Vec<Vec<u32>> = (0..lay.excess_len()).map(|i| excess_cols.iter().map(|c| c[i]).collect()).collect();
        let sols = kernel(&f, &rows, xs.len());
        Echelon::span(&f, main_len, sols.iter().map(|s| combine(&f, &main_cols, s, main_len)))
    };
    let quotient_dim = main_len - image.rank();
    let count = (p as u128).checked_pow(quotient_dim as u32).unwrap_or(u128::MAX);
    let mut representatives = Vec::new();
    if count <= REPRESENTATIVE_LIMIT {
        let mut is_pivot = vec![false; main_len];
        for &pv in image.pivots() {
            is_pivot[pv] = true;
        }
        let free: Vec<usize> = (0..main_len).filter(|&i| !is_pivot[i]).collect();
        for idx in 0..count {
            let mut v = vec![0u32; main_len];
            let mut t = idx;
            for &pos in &free {
                v[pos] = (t % p as u128) as u32;
                t /= p as u128;
            }
            representatives.push(lay.decode(&tp.base, &v));
        }
    }
    Ok(TangentIndex {
        alpha: tp.alpha.clone(),
        r: tp.r,
        c: tp.c,
        space_dim: main_len,
        image_dim: image.rank(),
        dim: quotient_dim / field_degree(&tp.base),
        count,
        representatives,
        precision,
    })
}

/// Class sets for every prolongation φ-matrix α_a. `bases[a]` (optional) is the lattice basis
/// of α_a in common ambient coordinates, used to identify isomorphic ε-modules across indices.
pub fn eps_classes(base: &FrobeniusBase, alphas: &[Mat], h: u32, ambient_bases: Option<&[Mat]>) -> Result<TangentClassSet> {
    let indices = alphas
        .iter()
        .map(|a| TangentProblem::new(base, a, h).and_then(|tp| tangent_index(&tp)))
        .collect::<Result<Vec<_>>>()?;
    let distinct = match (indices.len(), ambient_bases) {
        (1, _) => usize::try_from(indices[0].count).ok(),
        (_, Some(bases)) => dedup(base, &indices, bases)?,
        _ => None,
    };
    Ok(TangentClassSet { indices, distinct })
}

const DEDUP_LIMIT: usize = 64;

fn dedup(base: &FrobeniusBase, indices: &[TangentIndex], bases: &[Mat]) -> Result<Option<usize>> {
    let total: usize = indices.iter().map(|t| t.representatives.len()).sum();
    if total > DEDUP_LIMIT || indices.iter().any(|t| t.representatives.len() as u128 != t.count) {
        return Ok(None);
    }
    let a = field_degree(base);
    let eps_base = base.with_coeffs(CoeffKind::Dual(a))?;
    let ring = eps_base.ring();
    let eps = eps_base.eps().expect("dual numbers have ε");
    let dl = base.ring().dim();
    // embed F-coefficients into F[ε] (field part first) and multiply by ε where asked
    let embed = |s: &Series, times_eps: bool| {
        s.map_coeffs(ring, |c| {
            let mut out = ring.zero();
            out[..dl].copy_from_slice(c);
            if times_eps {
                out = ring.mul(&out, &eps);
            }
            out
        })
    };
    let mut modules: Vec<Mat> = Vec::new();
    let mut bound = 0;
    for (t, g) in indices.iter().zip(bases) {
        bound = bound.max(t.r + t.c);
        let g_inv = g.inverse_laurent().map_err(|e| Error::pre(e.to_string()))?;
        let sg_inv = base.sigma_mat(&g_inv);
        for beta in &t.representatives {
            // ambient matrix G·(α + εβ)·σ(G)^{-1}
            let amb_alpha = g.mul(&t.alpha).mul(&sg_inv);
            let amb_beta = g.mul(beta).mul(&sg_inv);
            modules.push(Mat::from_fn(t.alpha.rows(), t.alpha.rows(), |i, j| {
                embed(amb_alpha.get(i, j), false).add(&embed(amb_beta.get(i, j), true))
            }));
        }
    }
    let mut reps: Vec<Mat> = Vec::new();
    for m in modules {
        let mut new = true;
        for r in &reps {
            if find_conjugator(&eps_base, &m, r, bound, IsoMode::Laurent { pole: bound }, 0)?.found() {
                new = false;
                break;
            }
        }
        if new {
            reps.push(m);
        }
    }
    Ok(Some(reps.len()))
}

/// Orbit count of the coboundary group on V by explicit enumeration of the X-domain and of V.
pub fn brute_force_class_count(tp: &TangentProblem) -> Result<u128> {
    let p = tp.base.p();
    let (lay, s_max, top) = layout(tp);
    let xs = domain(tp, s_max, top);
    let dom_size = (p as u128).checked_pow(xs.len() as u32).unwrap_or(u128::MAX);
    let v_size = (p as u128).checked_pow(lay.main_len() as u32).unwrap_or(u128::MAX);
    if dom_size > BRUTE_FORCE_LIMIT || v_size > BRUTE_FORCE_LIMIT {
        return Err(Error::Resource(format!("brute force over {dom_size} perturbations and {v_size} classes is too large")));
    }
    let n = tp.rank();
    let mut group: HashSet<Vec<u32>> = HashSet::new();
    for idx in 0..dom_size {
        let mut x = tp.base.zero_mat(n, n);
        let mut t = idx;
        for m in &xs {
            let c = (t % p as u128) as i64;
            t /= p as u128;
            if c != 0 {
                x = x.add(&m.map(|s| s.scale_int(c)));
            }
        }
        let z = tp.coboundary(&x);
        let (excess, main) = lay.encode(&z, p)?;
        if excess.iter().all(|&e| e == 0) {
            group.insert(main);
        }
    }
    let group: Vec<Vec<u32>> = group.into_iter().collect();
    let mut seen = vec![false; v_size as usize];
    let index_of = |v: &[u32]| v.iter().rev().fold(0usize, |acc, &x| acc * p as usize + x as usize);
    let mut orbits = 0u128;
    for start in 0..v_size as usize {
        if seen[start] {
            continue;
        }
        orbits += 1;
        let mut v = vec![0u32; lay.main_len()];
        let mut t = start;
        for x in v.iter_mut() {
            *x = (t % p as usize) as u32;
            t /= p as usize;
        }
        for g in &group {
            let w: Vec<u32> = v.iter().zip(g).map(|(&a, &b)| ((a + b) as u64 % p) as u32).collect();
            seen[index_of(&w)] = true;
        }
    }
    Ok(orbits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec};

    #[test]
    fn rank_one_alpha_u_over_f2() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 1, 16)).unwrap();
        let tp = TangentProblem::new(&b, &Mat::scalar(&b.u_pow(1), 1), 1).unwrap();
        let brute = brute_force_class_count(&tp).unwrap();
        let t = tangent_index(&tp).unwrap();
        assert_eq!(t.count, brute);
        assert_eq!(t.space_dim, 4);
        assert_eq!((t.count, t.dim), (4, 2));
        assert_eq!(t.representatives.len(), 4);
    }

    #[test]
    fn etale_rank_one_matches_brute_force() {
        for p in [2u64, 3] {
            let b = make_base(BaseSpec::standard_mixed(p, 1, 1, 16)).unwrap();
            let tp = TangentProblem::new(&b, &b.identity(1), 0).unwrap();
            assert_eq!((tp.r, tp.c), (0, 1));
            assert_eq!(tangent_index(&tp).unwrap().count, brute_force_class_count(&tp).unwrap());
        }
    }

    #[test]
    fn count_is_stable_under_precision_and_cutoff() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 1, 16)).unwrap();
        let b2 = make_base(BaseSpec::standard_mixed(2, 1, 1, 32)).unwrap();
        let tp = TangentProblem::new(&b, &Mat::scalar(&b.u_pow(1), 1), 1).unwrap();
        let tp2 = TangentProblem::new(&b2, &Mat::scalar(&b2.u_pow(1), 1), 1).unwrap();
        let c1 = tangent_index(&tp).unwrap().count;
        assert_eq!(c1, tangent_index(&tp2).unwrap().count);
        assert_eq!(c1, tangent_index(&tp.clone().with_cutoff(4).unwrap()).unwrap().count);
    }
}
