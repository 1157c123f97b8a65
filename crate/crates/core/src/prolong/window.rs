//! Lattices between u^{hi}R and u^{lo}R as ℓ-subspaces of u^{lo}R / u^{hi}R.
//!
//! Coordinates are fixed by a reference lattice R with basis e_1..e_n; the window vector
//! of Σ c_{d,i} u^d e_i has c_{d,i} at position (d − lo)·n + i, so echelon pivots are
//! ordered by degree first.

use super::restrict::ScalarRestriction;
use crate::base::field::kernel;
use crate::base::{Echelon, Mat, Series, SmallField, EXACT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
    pub n: usize,
}

impl Window {
    pub fn len(&self) -> usize {
        (self.hi - self.lo).max(0) as usize * self.n
    }

    pub fn index(&self, deg: i64, i: usize) -> usize {
        (deg - self.lo) as usize * self.n + i
    }

    pub fn degree(&self, idx: usize) -> i64 {
        self.lo + (idx / self.n) as i64
    }

    pub fn component(&self, idx: usize) -> usize {
        idx % self.n
    }

    pub fn unit_vector(&self, deg: i64, i: usize) -> Vec<u32> {
        let mut v = vec![0u32; self.len()];
        if deg >= self.lo && deg < self.hi {
            v[self.index(deg, i)] = 1;
        }
        v
    }

    /// All of u^{deg}R (modulo u^{hi}R).
    pub fn standard(&self, f: &SmallField, deg: i64) -> Echelon {
        let from = deg.max(self.lo);
        let vs = (from..self.hi).flat_map(|d| (0..self.n).map(move |i| (d, i)));
        Echelon::span(f, self.len(), vs.map(|(d, i)| self.unit_vector(d, i)))
    }

    pub fn encode(&self, r: &ScalarRestriction, col: &[Series]) -> Result<Vec<u32>> {
        let mut v = vec![0u32; self.len()];
        for (i, s) in col.iter().enumerate() {
            if s.precision() < self.hi {
                return Err(Error::indeterminate("lattice generator not known up to the working window", s.precision()));
            }
            for (deg, a) in s.terms() {
                if deg >= self.hi {
                    continue;
                }
                if deg < self.lo {
                    return Err(Error::Resource(format!(
                        "vector with a pole of order {} leaves the working window (bottom u^{})",
                        -deg, self.lo
                    )));
                }
                v[self.index(deg, i)] = r.to_field(&a);
            }
        }
        Ok(v)
    }

    pub fn decode(&self, r: &ScalarRestriction, v: &[u32]) -> Vec<Series> {
        let ring = r.field_ring();
        (0..self.n)
            .map(|i| {
                let coeffs: Vec<Vec<u64>> =
                    (self.lo..self.hi).map(|d| r.from_field(v[self.index(d, i)])).collect();
                Series::from_coeffs(ring, r.cap(), self.lo, &coeffs, EXACT)
            })
            .collect()
    }

    pub fn times_u(&self, v: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; v.len()];
        if v.len() > self.n {
            out[self.n..].copy_from_slice(&v[..v.len() - self.n]);
        }
        out
    }

    /// Lowest degree with a nonzero coordinate among the basis of `l`.
    pub fn lowest_degree(&self, l: &Echelon) -> Option<i64> {
        l.pivots().iter().map(|&p| self.degree(p)).min()
    }
}

/// Images of window basis vectors under a map; `None` where undefined (too low a degree).
type Images = Vec<Option<Vec<u32>>>;

/// The φ-structure of a lattice-coordinates module on one window.
pub struct Engine<'a> {
    pub r: &'a ScalarRestriction,
    pub win: Window,
    phi: Images,
    p_power: Images,
    nil: Vec<Images>,
}

impl<'a> Engine<'a> {
    /// `phi`, `p_power`, `nil` are matrices in the reference coordinates (all integral);
    /// images are tabulated for basis vectors of degree ≥ `min_deg`.
    pub fn new(r: &'a ScalarRestriction, win: Window, min_deg: i64, phi: &Mat, p_power: &Mat, nil: &[Mat]) -> Result<Engine<'a>> {
        let q = r.q() as i64;
        let phi_img = tabulate(r, win, min_deg, phi, q)?;
        let p_img = tabulate(r, win, min_deg, p_power, 1)?;
        let nil_img = nil.iter().map(|e| tabulate(r, win, min_deg, e, 1)).collect::<Result<Vec<_>>>()?;
        Ok(Engine { r, win, phi: phi_img, p_power: p_img, nil: nil_img })
    }

    pub fn field(&self) -> &SmallField {
        self.r.field()
    }

    fn apply(&self, images: &Images, v: &[u32], semilinear: bool) -> Vec<u32> {
        let f = self.field();
        let mut out = vec![0u32; self.win.len()];
        for (k, &c) in v.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = if semilinear { self.r.sigma(c) } else { c };
            let img = images[k].as_ref().expect("map applied below its tabulated range");
            for (o, &x) in out.iter_mut().zip(img) {
                if x != 0 {
                    *o = f.add(*o, f.mul(c, x));
                }
            }
        }
        out
    }

    pub fn apply_phi(&self, v: &[u32]) -> Vec<u32> {
        self.apply(&self.phi, v, true)
    }

    pub fn apply_p_power(&self, v: &[u32]) -> Vec<u32> {
        self.apply(&self.p_power, v, false)
    }

    pub fn apply_nil(&self, k: usize, v: &[u32]) -> Vec<u32> {
        self.apply(&self.nil[k], v, false)
    }

    pub fn nil_count(&self) -> usize {
        self.nil.len()
    }

    /// The ℓ[[u]]-span of the given vectors.
    pub fn u_span(&self, vs: impl IntoIterator<Item = Vec<u32>>) -> Echelon {
        let f = self.field();
        let mut e = Echelon::zero(self.win.len());
        for mut v in vs {
            while v.iter().any(|&x| x != 0) {
                e.insert(f, v.clone());
                v = self.win.times_u(&v);
            }
        }
        e
    }

    /// φ(σ*L) for a u-stable L.
    pub fn phi_span(&self, l: &Echelon) -> Echelon {
        self.u_span(l.basis().iter().map(|b| self.apply_phi(b)))
    }

    /// {x ∈ L : map(x) ∈ K}.
    fn preimage(&self, images: &Images, semilinear: bool, l: &Echelon, k: &Echelon) -> Echelon {
        let f = self.field();
        let basis = l.basis();
        if basis.is_empty() {
            return l.clone();
        }
        // coefficient columns: the image of b_j modulo K
        let cols: Vec<Vec<u32>> = basis
            .iter()
            .map(|b| {
                let mut w = self.apply(images, b, semilinear);
                k.reduce(f, &mut w);
                w
            })
            .collect();
        let rows: Vec<Vec<u32>> = (0..self.win.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let sols = kernel(f, &rows, basis.len());
        let vs = sols.into_iter().map(|s| {
            let mut x = vec![0u32; self.win.len()];
            for (&sj, b) in s.iter().zip(basis) {
                if sj == 0 {
                    continue;
                }
                // φ(c·b) = σ(c)·φ(b), so the solution is in σ-twisted coordinates
                let c = if semilinear { self.r.sigma_inv(sj) } else { sj };
                for (o, &y) in x.iter_mut().zip(b) {
                    if y != 0 {
                        *o = f.add(*o, f.mul(c, y));
                    }
                }
            }
            x
        });
        Echelon::span(f, self.win.len(), vs)
    }

    pub fn phi_preimage(&self, l: &Echelon, k: &Echelon) -> Echelon {
        self.preimage(&self.phi, true, l, k)
    }

    pub fn p_power_preimage(&self, l: &Echelon, k: &Echelon) -> Echelon {
        self.preimage(&self.p_power, false, l, k)
    }

    pub fn is_phi_stable(&self, l: &Echelon) -> bool {
        let f = self.field();
        l.basis().iter().all(|b| l.contains(f, &self.apply_phi(b)))
    }

    pub fn is_nil_stable(&self, l: &Echelon) -> bool {
        let f = self.field();
        (0..self.nil.len()).all(|k| l.basis().iter().all(|b| l.contains(f, &self.apply_nil(k, b))))
    }

    /// P^h·L ⊆ φ(σ*L); exact when φ(σ*L) contains u^{hi}R.
    pub fn height_holds(&self, l: &Echelon) -> bool {
        let f = self.field();
        let img = self.phi_span(l);
        l.basis().iter().all(|b| img.contains(f, &self.apply_p_power(b)))
    }

    /// Smallest u-, φ- and nilpotent-stable subspace containing `start` and `v`.
    pub fn closure(&self, start: &Echelon, extra: &[Vec<u32>]) -> Echelon {
        let f = self.field();
        let mut cur = start.clone();
        let mut queue: Vec<Vec<u32>> = extra.to_vec();
        while let Some(v) = queue.pop() {
            let mut w = v;
            cur.reduce(f, &mut w);
            if w.iter().all(|&x| x == 0) {
                continue;
            }
            cur.insert(f, w.clone());
            queue.push(self.win.times_u(&w));
            queue.push(self.apply_phi(&w));
            for k in 0..self.nil.len() {
                queue.push(self.apply_nil(k, &w));
            }
        }
        cur
    }

    /// Generators of the lattice represented by `l`, as columns over ℓ((u)), including u^{hi}R.
    pub fn generators(&self, l: &Echelon) -> Vec<Vec<Series>> {
        let mut gens: Vec<Vec<Series>> = l.basis().iter().map(|b| self.win.decode(self.r, b)).collect();
        let ring = self.r.field_ring();
        for i in 0..self.win.n {
            gens.push(
                (0..self.win.n)
                    .map(|j| if i == j { Series::u_pow(ring, self.r.cap(), self.win.hi) } else { Series::zero(ring, self.r.cap()) })
                    .collect(),
            );
        }
        gens
    }
}

fn tabulate(r: &ScalarRestriction, win: Window, min_deg: i64, m: &Mat, scale: i64) -> Result<Images> {
    let mut out = vec![None; win.len()];
    for idx in 0..win.len() {
        let deg = win.degree(idx);
        if deg < min_deg {
            continue;
        }
        let i = win.component(idx);
        let col: Vec<Series> = m.column(i).iter().map(|s| s.shift(scale * deg)).collect();
        out[idx] = Some(win.encode(r, &col)?);
    }
    Ok(out)
}

/// Canonical basis of the ℓ[[u]]-lattice spanned by the given columns: lower triangular,
/// pivot u^{a_i} on the diagonal, entries below a pivot reduced to degrees under it.
pub fn hermite(n: usize, gens: &[Vec<Series>]) -> Result<Mat> {
    let mut cols: Vec<Vec<Series>> = gens.to_vec();
    let mut out: Vec<Vec<Series>> = Vec::with_capacity(n);
    let mut pivots = Vec::with_capacity(n);
    for r in 0..n {
        let best = cols
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c[r].valuation().map(|v| (v, k)))
            .min();
        let Some((v, k)) = best else {
            return Err(Error::pre("generators do not span a full-rank lattice at this precision"));
        };
        let mut piv = cols.remove(k);
        let unit = piv[r].shift(-v).invert().map_err(|e| Error::indeterminate(e.to_string(), piv[r].precision()))?;
        for s in piv.iter_mut() {
            *s = s.mul(&unit);
        }
        for c in cols.iter_mut() {
            if c[r].is_zero() {
                continue;
            }
            let fct = c[r].shift(-v);
            for (x, y) in c.iter_mut().zip(&piv) {
                *x = x.sub(&fct.mul(y));
            }
        }
        // the pivot entry is u^v up to precision; store it exactly
        piv[r] = Series::u_pow(piv[r].ring(), piv[r].cap(), v);
        out.push(piv);
        pivots.push(v);
    }
    for c in 0..n {
        for r in c + 1..n {
            let a = pivots[r];
            let fct = out[c][r].truncate_below(a).shift(-a);
            if fct.is_zero() {
                continue;
            }
            let pr = out[r].clone();
            for (x, y) in out[c].iter_mut().zip(&pr) {
                *x = x.sub(&fct.mul(y));
            }
            out[c][r] = out[c][r].part_below(a);
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| if i < j { Series::zero(out[j][i].ring(), out[j][i].cap()) } else { out[j][i].clone() }))
}
