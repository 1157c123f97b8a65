//! φ-modules given by their matrix in a basis: φ(σ*e_j) = Σ_i B_ij e_i.

mod iso;
mod torsion;

pub use iso::{find_conjugator, is_isomorphic, IsoMode, IsoResult};
pub use torsion::{image_closure, isogeny_cokernel, ImageClosure, TorsionPhiModule};

use std::sync::Arc;

use crate::base::{CoeffKind, CoeffRing, FrobeniusBase, GenKind, Mat, Series};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct PhiModule {
    base: FrobeniusBase,
    matrix: Mat,
    height: Option<u32>,
}

impl PartialEq for PhiModule {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.matrix == other.matrix && self.height == other.height
    }
}

impl PhiModule {
    /// A module with integral φ-matrix `matrix` and no height tag.
    pub fn new(base: &FrobeniusBase, matrix: Mat) -> Result<PhiModule> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::pre("φ-matrix must be square and nonempty"));
        }
        if !Arc::ptr_eq(matrix.ring(), base.ring()) && **matrix.ring() != **base.ring() {
            return Err(Error::pre("φ-matrix lives over a different coefficient ring"));
        }
        if !matrix.is_integral() {
            return Err(Error::pre("φ-matrix has polar terms; use an étale module instead"));
        }
        Ok(PhiModule { base: base.clone(), matrix, height: None })
    }

    /// Attaches a height tag after checking it.
    pub fn with_height(mut self, h: u32) -> Result<PhiModule> {
        match height_le(&self, h)? {
            Height::Within { .. } => {
                self.height = Some(h);
                Ok(self)
            }
            Height::Exceeds { obstruction } => Err(Error::pre(format!("height exceeds {h}: {obstruction}"))),
        }
    }

    pub(crate) fn tagged(base: &FrobeniusBase, matrix: Mat, height: Option<u32>) -> PhiModule {
        PhiModule { base: base.clone(), matrix, height }
    }

    pub fn base(&self) -> &FrobeniusBase {
        &self.base
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.rows()
    }

    pub fn height_tag(&self) -> Option<u32> {
        self.height
    }

    /// The module in the basis given by the columns of U: φ-matrix U^{-1}·B·σ(U).
    pub fn change_basis(&self, u: &Mat) -> Result<PhiModule> {
        let inv = u.inverse_laurent().map_err(|e| Error::pre(format!("change of basis not invertible: {e}")))?;
        let b = inv.mul(&self.matrix).mul(&self.base.sigma_mat(u));
        PhiModule::new(&self.base, b).map(|m| PhiModule { height: self.height, ..m })
    }
}

#[derive(Clone, Debug)]
pub enum Height {
    /// C with B·C = C·B = P^h·Id.
    Within { witness: Mat },
    Exceeds { obstruction: String },
}

impl Height {
    pub fn holds(&self) -> bool {
        matches!(self, Height::Within { .. })
    }
}

/// Decides whether coker(φ) is killed by P^h, by solving B·C = P^h·Id over Λ((u)).
pub fn height_le(m: &PhiModule, h: u32) -> Result<Height> {
    let base = &m.base;
    let n = m.rank();
    let b = &m.matrix;
    let inv = match b.inverse_laurent() {
        Ok(inv) => inv,
        Err(e) => {
            return Ok(Height::Exceeds { obstruction: format!("φ is not injective after inverting u ({e})") });
        }
    };
    let ph = base.p_power(h);
    let c = inv.scale(&ph);
    for i in 0..n {
        for j in 0..n {
            let x = c.get(i, j);
            if let Some(v) = x.valuation() {
                if v < 0 {
                    return Ok(Height::Exceeds {
                        obstruction: format!("P^{h}·B^-1 has a term of u-degree {v} at ({i},{j})"),
                    });
                }
            }
        }
    }
    let prec = c.precision();
    if prec <= 0 {
        return Err(Error::indeterminate(format!("P^{h}·B^-1 is not known in degree 0"), prec));
    }
    let target = Mat::scalar(&ph, n);
    if !b.mul(&c).eq_at_precision(&target) || !c.mul(b).eq_at_precision(&target) {
        return Err(Error::indeterminate("witness does not verify", prec));
    }
    Ok(Height::Within { witness: c })
}

/// φ is an isomorphism: det(B) has a unit constant term.
pub fn is_etale(m: &PhiModule) -> bool {
    let d = m.matrix.det();
    m.base.ring().is_unit(&d.coeff(0)) && d.is_integral()
}

/// The dual of height h: φ-matrix P^h·(B^{-1})^T.
pub fn dual_height(m: &PhiModule, h: u32) -> Result<PhiModule> {
    match height_le(m, h)? {
        Height::Within { witness } => Ok(PhiModule::tagged(&m.base, witness.transpose(), Some(h))),
        Height::Exceeds { obstruction } => Err(Error::pre(format!("height exceeds {h}: {obstruction}"))),
    }
}

/// Rank one with φ-matrix (P^r).
pub fn twist_module(r: u32, h: u32, base: &FrobeniusBase) -> Result<PhiModule> {
    if r > h {
        return Err(Error::pre(format!("twist exponent {r} outside [0,{h}]")));
    }
    Ok(PhiModule::tagged(base, Mat::scalar(&base.p_power(r), 1), Some(h)))
}

fn same_base(a: &PhiModule, b: &PhiModule) -> Result<()> {
    if a.base != b.base {
        return Err(Error::pre("modules live over different bases"));
    }
    Ok(())
}

pub fn direct_sum(a: &PhiModule, b: &PhiModule) -> Result<PhiModule> {
    same_base(a, b)?;
    let h = match (a.height, b.height) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    };
    Ok(PhiModule::tagged(&a.base, a.matrix.block_diag(&b.matrix), h))
}

pub fn tensor(a: &PhiModule, b: &PhiModule) -> Result<PhiModule> {
    same_base(a, b)?;
    let h = match (a.height, b.height) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    };
    Ok(PhiModule::tagged(&a.base, a.matrix.kron(&b.matrix), h))
}

/// A map of coefficient rings Λ → Λ′ given by generator images, extended along u ↦ u.
#[derive(Clone, Debug)]
pub struct RingMap {
    source: Arc<CoeffRing>,
    target: FrobeniusBase,
    /// Image of each basis monomial of the source ring.
    monomial_images: Vec<Vec<u64>>,
}

impl RingMap {
    /// `images[v]` is the image of source generator v. Relations and σ-compatibility are
    /// checked on generators; a bounded polynomial generator (kind `Poly`) may be sent to any
    /// value, which realizes evaluation of polynomials of degree below the bound.
    pub fn new(source: &FrobeniusBase, target: &FrobeniusBase, images: Vec<Vec<u64>>) -> Result<RingMap> {
        let src = source.ring();
        let tgt = target.ring();
        if src.p() != tgt.p() || source.mode() != target.mode() {
            return Err(Error::pre("ring map must keep the characteristic and mode"));
        }
        if images.len() != src.generators().len() {
            return Err(Error::pre("one image per source generator is required"));
        }
        let poly_var = matches!(source.coeffs(), CoeffKind::Poly(..));
        for (v, g) in src.generators().iter().enumerate() {
            let evaluation = poly_var && g.name == "T";
            if !evaluation {
                // relation g(image) = 0
                let mut acc = tgt.zero();
                for c in g.relation.iter().rev() {
                    acc = tgt.mul(&acc, &images[v]);
                    acc = tgt.add(&acc, &tgt.from_int(*c as i64));
                }
                if !tgt.is_zero(&acc) {
                    return Err(Error::pre(format!("image of generator {} violates its relation", g.name)));
                }
            }
        }
        let dim = src.dim();
        let monomial_images: Vec<Vec<u64>> =
            (0..dim).map(|i| crate::base::coeff::eval_monomial(tgt, &images, &src.monomial(i))).collect();
        let map = RingMap { source: src.clone(), target: target.clone(), monomial_images };
        // σ-compatibility on generators
        for v in 0..src.generators().len() {
            let g = src.gen(v);
            let lhs = map.apply_elem(&src.frobenius(&g));
            let rhs = tgt.frobenius(&map.apply_elem(&g));
            if lhs != rhs {
                return Err(Error::pre(format!("map does not commute with σ on generator {}", src.generators()[v].name)));
            }
        }
        // P must go to P
        let p_img = map.apply_series(source.big_p());
        if !p_img.eq_at_precision(target.big_p()) {
            return Err(Error::pre("map does not send P to P"));
        }
        Ok(map)
    }

    /// The reduction killing every nilpotent generator of A (e.g. F[ε] → F, T ↦ 0).
    pub fn reduction(source: &FrobeniusBase, target: &FrobeniusBase) -> Result<RingMap> {
        let src = source.ring();
        let tgt = target.ring();
        let images = src
            .generators()
            .iter()
            .map(|g| match g.kind {
                GenKind::Nilpotent if g.name != "t" => tgt.zero(),
                _ => tgt.generator_named(&g.name).map(|w| tgt.gen(w)).unwrap_or_else(|| tgt.zero()),
            })
            .collect();
        RingMap::new(source, target, images)
    }

    pub fn apply_elem(&self, a: &[u64]) -> Vec<u64> {
        let tgt = self.target.ring();
        let mut out = tgt.zero();
        for (i, &c) in a.iter().enumerate() {
            if c != 0 {
                out = tgt.add(&out, &tgt.scale(&self.monomial_images[i], c));
            }
        }
        out
    }

    pub fn apply_series(&self, s: &Series) -> Series {
        s.map_coeffs(self.target.ring(), |a| self.apply_elem(a)).with_cap(self.target.precision())
    }

    pub fn apply_mat(&self, m: &Mat) -> Mat {
        m.map(|s| self.apply_series(s))
    }

    pub fn target(&self) -> &FrobeniusBase {
        &self.target
    }

    pub fn source_ring(&self) -> &Arc<CoeffRing> {
        &self.source
    }
}

/// Entrywise image of the φ-matrix; the height tag is kept.
pub fn base_change(m: &PhiModule, map: &RingMap) -> Result<PhiModule> {
    if **m.base.ring() != **map.source_ring() {
        return Err(Error::pre("ring map source does not match the module's coefficients"));
    }
    Ok(PhiModule::tagged(map.target(), map.apply_mat(&m.matrix), m.height))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{make_base, BaseSpec};

    fn base(p: u64, e: usize) -> FrobeniusBase {
        make_base(BaseSpec::standard_mixed(p, e, 1, 32)).unwrap()
    }

    #[test]
    fn height_examples() {
        let b = base(3, 1);
        let id = PhiModule::new(&b, b.identity(2)).unwrap();
        match height_le(&id, 0).unwrap() {
            Height::Within { witness } => assert!(witness.eq_at_precision(&b.identity(2))),
            Height::Exceeds { .. } => panic!("identity has height 0"),
        }
        let diag = PhiModule::new(&b, Mat::diagonal(&[b.one(), b.big_p().clone()])).unwrap();
        assert!(height_le(&diag, 1).unwrap().holds());
        assert!(!height_le(&diag, 0).unwrap().holds());
        let ss = PhiModule::new(&b, Mat::from_rows(vec![vec![b.zero(), b.big_p().clone()], vec![b.one(), b.zero()]])).unwrap();
        match height_le(&ss, 1).unwrap() {
            Height::Within { witness } => assert!(witness.eq_at_precision(ss.matrix())),
            Height::Exceeds { .. } => panic!(),
        }
        let dual = dual_height(&ss, 1).unwrap();
        let expected = Mat::from_rows(vec![vec![b.zero(), b.one()], vec![b.big_p().clone(), b.zero()]]);
        assert!(dual.matrix().eq_at_precision(&expected));
    }

    #[test]
    fn etale_examples() {
        let b = base(2, 1);
        assert!(is_etale(&PhiModule::new(&b, b.identity(2)).unwrap()));
        assert!(!is_etale(&PhiModule::new(&b, Mat::diagonal(&[b.one(), b.big_p().clone()])).unwrap()));
        let uni = Mat::from_rows(vec![vec![b.one(), b.u_pow(1)], vec![b.zero(), b.one()]]);
        assert!(is_etale(&PhiModule::new(&b, uni).unwrap()));
    }

    #[test]
    fn twists_and_tensors() {
        let b = base(3, 2);
        for r in 0..=2 {
            let t = twist_module(r, 2, &b).unwrap();
            let d = dual_height(&t, 2).unwrap();
            assert!(d.matrix().eq_at_precision(twist_module(2 - r, 2, &b).unwrap().matrix()));
        }
        let t = tensor(&twist_module(1, 1, &b).unwrap(), &twist_module(2, 2, &b).unwrap()).unwrap();
        assert!(t.matrix().get(0, 0).eq_at_precision(&b.p_power(3)));
        assert_eq!(t.height_tag(), Some(3));
        assert!(twist_module(3, 2, &b).is_err());
    }

    #[test]
    fn reduction_kills_eps() {
        let b = make_base(BaseSpec::standard_mixed(2, 1, 1, 16).with_coeffs(CoeffKind::Dual(1))).unwrap();
        let f = make_base(BaseSpec::standard_mixed(2, 1, 1, 16)).unwrap();
        let eps = b.eps().unwrap();
        let m = PhiModule::new(&b, Mat::scalar(&b.one().add(&b.monomial(1, &eps)), 1)).unwrap();
        let red = base_change(&m, &RingMap::reduction(&b, &f).unwrap()).unwrap();
        assert!(red.matrix().eq_at_precision(&f.identity(1)));
    }
}
