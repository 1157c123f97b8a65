//! Rank-2 height-1 lattices over F′((u)): pointwise classification, fiber enumeration,
//! nilpotent moves and the graph they generate.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::base::{CoeffKind, FrobeniusBase, Mat, Series};
use crate::error::{Error, Result};
use crate::phimod::{dual_height, height_le, PhiModule, RingMap};
use crate::prolong::{EtaleTorsionModule, Lattice};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Flags {
    pub etale: bool,
    pub lt: bool,
    pub nilpotent: bool,
    pub unipotent: bool,
    pub lagrangian: bool,
    pub ordinary: bool,
    pub supersingular: bool,
}

impl Flags {
    pub fn names(&self) -> Vec<&'static str> {
        let all = [
            (self.etale, "etale"),
            (self.lt, "lt"),
            (self.nilpotent, "nilpotent"),
            (self.unipotent, "unipotent"),
            (self.lagrangian, "lagrangian"),
            (self.ordinary, "ordinary"),
            (self.supersingular, "supersingular"),
        ];
        all.iter().filter(|(b, _)| *b).map(|(_, n)| *n).collect()
    }
}

fn is_unit_series(s: &Series) -> bool {
    s.is_integral() && s.ring().is_unit(&s.coeff(0))
}

/// Whether B·σ(B)·…·σ^{n−1}(B) reduces to zero modulo the maximal ideal for some n ≤ rank·M·N.
pub fn is_phi_nilpotent(m: &PhiModule) -> bool {
    let base = m.base();
    let ring = base.ring();
    let n = m.rank();
    let b0: Vec<Vec<u64>> = m.matrix().entries().iter().map(|s| s.coeff(0)).collect();
    let steps = n as i64 * base.precision().max(1) * base.torsion_level() as i64;
    let mut prod = b0.clone();
    let mut sig = b0.clone();
    for _ in 0..steps {
        if prod.iter().all(|a| !ring.is_unit(a)) {
            return true;
        }
        sig = sig.iter().map(|a| ring.frobenius(a)).collect();
        let mut next = vec![ring.zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    ring.mul_acc(&mut next[i * n + j], &prod[i * n + k], &sig[k * n + j]);
                }
            }
        }
        prod = next;
    }
    prod.iter().all(|a| !ring.is_unit(a))
}

fn is_lagrangian(m: &PhiModule) -> Result<bool> {
    let d = m.matrix().det();
    let pinv = m.base().big_p().invert_laurent().map_err(|e| Error::indeterminate(e.to_string(), d.precision()))?;
    Ok(is_unit_series(&d.mul(&pinv)))
}

/// The φ-stable étale line of a rank-2 module over a field, lifted from a fixed point of
/// B(0)·σ on ℙ¹ of the residue field. Returns the line's generator.
pub fn etale_line(m: &PhiModule) -> Result<Option<Vec<Series>>> {
    let base = m.base();
    let ring = base.ring();
    if m.rank() != 2 {
        return Err(Error::pre("ordinary lines are searched in rank 2"));
    }
    if !matches!(base.coeffs(), CoeffKind::Field(_)) || ring.torsion_exponent() != 1 || ring.generator_named("t").is_some() {
        return Err(Error::pre("ordinary lines are searched over a finite field of coefficients"));
    }
    let b = m.matrix();
    let b0: Vec<Vec<u64>> = b.entries().iter().map(|s| s.coeff(0)).collect();
    let mut start = None;
    for v0 in projective_line(ring) {
        let sv: Vec<Vec<u64>> = v0.iter().map(|a| ring.frobenius(a)).collect();
        let w: Vec<Vec<u64>> = (0..2)
            .map(|i| ring.add(&ring.mul(&b0[2 * i], &sv[0]), &ring.mul(&b0[2 * i + 1], &sv[1])))
            .collect();
        // w = a·v0 with a ≠ 0
        let k = if ring.is_zero(&v0[0]) { 1 } else { 0 };
        if ring.is_zero(&w[k]) {
            continue;
        }
        let a = ring.mul(&w[k], &ring.inverse(&v0[k]).expect("field"));
        if (0..2).all(|i| ring.mul(&a, &v0[i]) == w[i]) {
            start = Some((v0, k));
            break;
        }
    }
    let Some((v0, k)) = start else {
        return Ok(None);
    };
    // v ← normalize(B·σ(v)) gains at least one u-degree per step
    let mut v: Vec<Series> = v0.iter().map(|a| base.constant(a)).collect();
    for _ in 0..=base.precision() {
        let sv: Vec<Series> = v.iter().map(|s| base.sigma(s)).collect();
        let w: Vec<Series> = (0..2).map(|i| b.get(i, 0).mul(&sv[0]).add(&b.get(i, 1).mul(&sv[1]))).collect();
        let scale = w[k].invert().map_err(|e| Error::indeterminate(e.to_string(), w[k].precision()))?;
        let next: Vec<Series> = w.iter().map(|s| s.mul(&scale)).collect();
        let done = next.iter().zip(&v).all(|(a, c)| a.eq_at_precision(c));
        v = next;
        if done {
            break;
        }
    }
    Ok(Some(v))
}

fn projective_line(ring: &crate::base::CoeffRing) -> Vec<[Vec<u64>; 2]> {
    let mut out = vec![[ring.zero(), ring.one()]];
    for a in ring.elements() {
        out.push([ring.one(), a]);
    }
    out
}

/// All flags of a rank-2 module of height ≤ 1.
pub fn classify(m: &PhiModule) -> Result<Flags> {
    if m.rank() != 2 {
        return Err(Error::pre("classification needs rank 2"));
    }
    let mut f = basic_flags(m)?;
    let ordinary = f.lagrangian && etale_line(m)?.is_some();
    f.ordinary = ordinary;
    f.supersingular = f.lagrangian && !ordinary;
    Ok(f)
}

/// The flags that make sense in any rank: étale, LT, nilpotent, unipotent, Lagrangian.
pub fn basic_flags(m: &PhiModule) -> Result<Flags> {
    if !height_le(m, 1)?.holds() {
        return Err(Error::pre("classification needs height ≤ 1"));
    }
    let dual = dual_height(m, 1)?;
    Ok(Flags {
        etale: is_unit_series(&m.matrix().det()),
        lt: is_unit_series(&dual.matrix().det()),
        nilpotent: is_phi_nilpotent(m),
        unipotent: is_phi_nilpotent(&dual),
        lagrangian: m.rank() == 2 && is_lagrangian(m)?,
        ..Flags::default()
    })
}

#[derive(Clone, Debug)]
pub struct ModuliPoint {
    pub lattice: Lattice,
    /// φ-matrix in the lattice's Hermite basis.
    pub matrix: Mat,
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberCondition {
    HeightOne,
    Lagrangian,
}

fn to_base(base: &FrobeniusBase, m: &Mat) -> Mat {
    m.map(|s| s.map_coeffs(base.ring(), |c| c.to_vec()))
}

fn check_fiber_module(m: &EtaleTorsionModule) -> Result<()> {
    if m.restriction().nil_dim() != 1 || !matches!(m.base().coeffs(), CoeffKind::Field(_)) {
        return Err(Error::pre("moduli fibers are computed over a coefficient field"));
    }
    if m.rank() != 2 || m.height() != 1 {
        return Err(Error::pre("moduli fibers are rank 2, height 1"));
    }
    Ok(())
}

/// All prolongations satisfying the condition, classified.
pub fn enumerate_fiber(m: &EtaleTorsionModule, condition: FiberCondition) -> Result<Vec<ModuliPoint>> {
    check_fiber_module(m)?;
    let set = m.enumerate_prolongations()?;
    let points = set
        .lattices
        .par_iter()
        .map(|l| {
            let matrix = to_base(m.base(), &m.lattice_phi(l)?);
            let flags = classify(&PhiModule::new(m.base(), matrix.clone())?)?;
            Ok(ModuliPoint { lattice: l.clone(), matrix, flags })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(points
        .into_iter()
        .filter(|p| condition == FiberCondition::HeightOne || p.flags.lagrangian)
        .collect())
}

#[derive(Clone, Debug)]
pub struct MoveOutcome {
    /// σ(1+N)·X·(1+N)^{-1} in the column convention, i.e. (1−N)·B·σ(1+N).
    pub matrix: Mat,
    /// Change of basis 1 + N.
    pub change: Mat,
}

/// Applies the move along the family T ↦ (1−TN)·B·σ(1+TN), accepted when every T-coefficient
/// (B·σ(N) − N·B and N·B·σ(N)) is integral.
pub fn nmove(base: &FrobeniusBase, b: &Mat, n: &Mat) -> Result<MoveOutcome> {
    if n.rows() != 2 || n.cols() != 2 || b.rows() != 2 {
        return Err(Error::pre("moves act on rank 2"));
    }
    if !n.mul(n).is_zero() {
        return Err(Error::pre("move matrix must square to zero"));
    }
    let sn = base.sigma_mat(n);
    let linear = b.mul(&sn).sub(&n.mul(b));
    let quadratic = n.mul(b).mul(&sn);
    for (name, c) in [("T", &linear), ("T^2", &quadratic)] {
        for i in 0..2 {
            for j in 0..2 {
                if let Some(v) = c.get(i, j).valuation() {
                    if v < 0 {
                        return Err(Error::pre(format!("family coefficient of {name} at ({i},{j}) has a term of u-degree {v}")));
                    }
                }
            }
        }
    }
    let matrix = b.add(&linear).sub(&quadratic);
    let one = Mat::identity(b.ring(), b.cap(), 2);
    Ok(MoveOutcome { matrix, change: one.add(n) })
}

#[derive(Clone, Copy, Debug)]
pub struct MoveBounds {
    /// Largest pole order of the move entry.
    pub pole: i64,
    /// Entries have u-degree below this.
    pub degree: i64,
}

#[derive(Clone, Debug)]
pub struct MoveEdge {
    pub from: usize,
    pub to: usize,
    pub n: Mat,
}

#[derive(Clone, Debug)]
pub struct FiberGraph {
    /// Field degree of the coefficients over F_p for the points and moves.
    pub field_degree: usize,
    pub points: Vec<ModuliPoint>,
    pub edges: Vec<MoveEdge>,
    /// Connected components (point indices, sorted).
    pub components: Vec<Vec<usize>>,
}

impl FiberGraph {
    pub fn supersingular_components(&self) -> Vec<&Vec<usize>> {
        self.components.iter().filter(|c| c.iter().any(|&i| self.points[i].flags.supersingular)).collect()
    }
}

/// Embeds the coefficients of `source` into the base with Field(a·k).
fn field_extension(source: &FrobeniusBase, k: usize) -> Result<(FrobeniusBase, RingMap)> {
    let a = source.coeffs().field_degree();
    if !matches!(source.coeffs(), CoeffKind::Field(_)) {
        return Err(Error::pre("extensions are taken of a coefficient field"));
    }
    let target = source.with_coeffs(CoeffKind::Field(a * k))?;
    if source.ring().generators().iter().all(|g| g.name != "y") {
        let images = source.ring().generators().iter().map(|g| target.generator(&g.name).expect("shared generator")).collect();
        return Ok((target.clone(), RingMap::new(source, &target, images)?));
    }
    for c in target.ring().elements() {
        let images: Vec<Vec<u64>> = source
            .ring()
            .generators()
            .iter()
            .map(|g| if g.name == "y" { c.clone() } else { target.generator(&g.name).expect("shared generator") })
            .collect();
        if let Ok(map) = RingMap::new(source, &target, images) {
            return Ok((target.clone(), map));
        }
    }
    Err(Error::pre("no embedding of the coefficient field found"))
}

/// Move matrices [[0,n],[0,0]] and [[0,0],[n,0]] with n = Σ c_k u^k, −pole ≤ k < degree.
fn move_matrices(base: &FrobeniusBase, ring: &std::sync::Arc<crate::base::CoeffRing>, bounds: MoveBounds) -> Result<Vec<Mat>> {
    let elems = ring.elements();
    let slots = (bounds.pole + bounds.degree).max(0) as u32;
    let total = (elems.len() as u128).checked_pow(slots).unwrap_or(u128::MAX);
    if total > 1 << 16 {
        return Err(Error::Resource(format!("{total} move entries exceed the search limit")));
    }
    let cap = base.precision();
    let mut out = Vec::new();
    for idx in 1..total {
        let mut t = idx;
        let mut s = Series::zero(ring, cap);
        for k in -bounds.pole..bounds.degree {
            let c = &elems[(t % elems.len() as u128) as usize];
            t /= elems.len() as u128;
            s = s.add(&Series::monomial(ring, cap, k, c));
        }
        let z = Series::zero(ring, cap);
        out.push(Mat::from_rows(vec![vec![z.clone(), s.clone()], vec![z.clone(), z.clone()]]));
        out.push(Mat::from_rows(vec![vec![z.clone(), z.clone()], vec![s, z]]));
    }
    Ok(out)
}

/// Points of the fiber over F′ extended by degree `extension`, with edges for every accepted
/// move between Lagrangian points of the same type.
pub fn fiber_graph(base: &FrobeniusBase, ambient: &Mat, extension: usize, bounds: MoveBounds) -> Result<FiberGraph> {
    let (ext, map) = field_extension(base, extension.max(1))?;
    let matrix = map.apply_mat(ambient);
    let m = EtaleTorsionModule::new(&ext, &matrix, 1).or_else(|_| EtaleTorsionModule::with_diagonal_seed(&ext, &matrix, 1, 4))?;
    let points = enumerate_fiber(&m, FiberCondition::HeightOne)?;
    let index: HashMap<Vec<i64>, usize> = points.iter().enumerate().map(|(i, p)| (p.lattice.key(), i)).collect();
    let ell = m.restriction().field_ring().clone();
    let moves = move_matrices(&ext, &ell, bounds)?;
    let phi = m.phi();
    let edges: Vec<Vec<MoveEdge>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut found = Vec::new();
            if !p.flags.lagrangian {
                return Ok(found);
            }
            let g = p.lattice.basis();
            let b = m.lattice_phi(&p.lattice)?;
            for n in &moves {
                let Ok(out) = nmove(&ext, &b, n) else { continue };
                let moved = Lattice::from_basis(&g.mul(&out.change))?;
                let Some(&j) = index.get(&moved.key()) else { continue };
                let q = &points[j];
                if j != i && q.flags.lagrangian && q.flags.supersingular == p.flags.supersingular {
                    found.push(MoveEdge { from: i, to: j, n: n.clone() });
                }
            }
            let _ = phi;
            Ok(found)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    let mut flat = Vec::new();
    for e in edges.into_iter().flatten() {
        if seen.insert((e.from.min(e.to), e.from.max(e.to))) {
            flat.push(e);
        }
    }
    let components = components(points.len(), &flat);
    Ok(FiberGraph { field_degree: ext.coeffs().field_degree(), points, edges: flat, components })
}

fn components(n: usize, edges: &[MoveEdge]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec};

    fn base(p: u64, a: usize) -> FrobeniusBase {
        make_base(BaseSpec::standard_mixed(p, 1, 1, 24).with_coeffs(CoeffKind::Field(a))).unwrap()
    }

    fn module(b: &FrobeniusBase, rows: &[Vec<Vec<i64>>]) -> PhiModule {
        PhiModule::new(b, b.mat_from_ints(rows)).unwrap()
    }

    #[test]
    fn standard_examples() {
        let b = base(3, 1);
        let ord = classify(&module(&b, &[vec![vec![1], vec![]], vec![vec![], vec![0, 2]]])).unwrap();
        assert!(ord.ordinary && ord.lagrangian && !ord.supersingular);
        let ss = classify(&module(&b, &[vec![vec![], vec![0, 1]], vec![vec![1], vec![]]])).unwrap();
        assert!(ss.lagrangian && ss.nilpotent && ss.unipotent && ss.supersingular && !ss.ordinary);
        let id = classify(&module(&b, &[vec![vec![1], vec![]], vec![vec![], vec![1]]])).unwrap();
        assert!(id.etale && !id.lagrangian && !id.lt);
    }

    #[test]
    fn zero_move_is_identity() {
        let b = base(2, 1);
        let x = b.mat_from_ints(&[vec![vec![], vec![0, 1]], vec![vec![1], vec![]]]);
        let out = nmove(&b, &x, &b.zero_mat(2, 2)).unwrap();
        assert!(out.matrix.eq_at_precision(&x));
    }

    #[test]
    fn move_preserves_determinant() {
        let b = base(2, 1);
        let x = b.mat_from_ints(&[vec![vec![], vec![0, 1]], vec![vec![1], vec![]]]);
        let z = b.zero();
        let n = Mat::from_rows(vec![vec![z.clone(), b.from_ints(&[0, 1, 1])], vec![z.clone(), z]]);
        let out = nmove(&b, &x, &n).unwrap();
        assert!(out.matrix.det().eq_at_precision(&x.det()));
    }
}
