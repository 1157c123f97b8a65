mod common;

use common::{random_height_matrix, random_shifted, Flavor};
use phimod_core::base::Mat;
use phimod_core::deform::{absorb, TangentProblem};
use phimod_core::moduli::{classify, nmove};
use phimod_core::phimod::{dual_height, height_le, PhiModule};
use phimod_core::prolong::EtaleTorsionModule;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn flavor(equichar: bool) -> Flavor {
    if equichar {
        Flavor::Equichar
    } else {
        Flavor::Mixed
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn double_dual_is_the_identity(seed: u64, p in prop::sample::select(vec![2u64, 3]), e in 1usize..=2, h in 0u32..=2, rank in 1usize..=2, eq: bool) {
        let base = flavor(eq).base(p, e, 1, 16);
        let m = PhiModule::new(&base, random_height_matrix(&mut ChaCha8Rng::seed_from_u64(seed), &base, rank, h)).unwrap();
        let dd = dual_height(&dual_height(&m, h).unwrap(), h).unwrap();
        prop_assert!(dd.matrix().eq_at_precision(m.matrix()));
    }

    #[test]
    fn generated_modules_have_their_height(seed: u64, p in prop::sample::select(vec![2u64, 3]), e in 1usize..=2, h in 0u32..=2, eq: bool) {
        let base = flavor(eq).base(p, e, 2, 64);
        let m = PhiModule::new(&base, random_height_matrix(&mut ChaCha8Rng::seed_from_u64(seed), &base, 2, h)).unwrap();
        prop_assert!(height_le(&m, h).unwrap().holds());
        prop_assert!(height_le(&dual_height(&m, h).unwrap(), h).unwrap().holds());
    }

    #[test]
    fn dual_swaps_flags(seed: u64, p in prop::sample::select(vec![2u64, 3]), e in 1usize..=2, eq: bool) {
        let base = flavor(eq).base(p, e, 1, 24);
        let m = PhiModule::new(&base, random_height_matrix(&mut ChaCha8Rng::seed_from_u64(seed), &base, 2, 1)).unwrap();
        let f = classify(&m).unwrap();
        let d = classify(&dual_height(&m, 1).unwrap()).unwrap();
        prop_assert_eq!((f.etale, f.lt, f.nilpotent, f.unipotent), (d.lt, d.etale, d.unipotent, d.nilpotent));
        prop_assert_eq!(f.lagrangian, d.lagrangian);
        if f.lagrangian {
            prop_assert!(f.ordinary != f.nilpotent);
        }
    }

    #[test]
    fn prolongations_lie_between_min_and_max(seed: u64, p in prop::sample::select(vec![2u64, 3]), e in 1usize..=2, rank in 1usize..=2) {
        let base = Flavor::Mixed.base(p, e, 1, 32);
        let m = EtaleTorsionModule::new(&base, &random_height_matrix(&mut ChaCha8Rng::seed_from_u64(seed), &base, rank, 1), 1).unwrap();
        let set = m.enumerate_prolongations().unwrap();
        prop_assert!(set.closed);
        for l in &set.lattices {
            prop_assert!(set.max.contains(l).unwrap());
            prop_assert!(l.contains(&set.min).unwrap());
            prop_assert!(m.is_prolongation(l).unwrap());
        }
        // duality is an inclusion-reversing bijection on prolongations
        let dual = m.dual().unwrap();
        let dset = dual.enumerate_prolongations().unwrap();
        prop_assert_eq!(dset.lattices.len(), set.lattices.len());
    }

    #[test]
    fn absorption_identity(seed: u64, p in prop::sample::select(vec![2u64, 3]), e in 1usize..=2, rank in 1usize..=2) {
        let base = Flavor::Mixed.base(p, e, 1, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = random_height_matrix(&mut rng, &base, rank, 1);
        let tp = TangentProblem::new(&base, &alpha, 1).unwrap();
        let x = random_shifted(&mut rng, &base, rank, tp.c, 2);
        let beta = base.zero_mat(rank, rank);
        let t = absorb(&tp, &beta, &x).unwrap();
        prop_assert!(x.add(&tp.coboundary(&t.y)).is_zero());
    }

    #[test]
    fn moves_preserve_determinant(n0 in 0i64..4, n1 in 0i64..4, n2 in 0i64..4, lower: bool) {
        let base = Flavor::Mixed.base(2, 1, 1, 24);
        let x = base.mat_from_ints(&[vec![vec![], vec![0, 1]], vec![vec![1], vec![]]]);
        let z = base.zero();
        let entry = base.from_ints(&[0, n0, n1, n2]);
        let n = if lower {
            Mat::from_rows(vec![vec![z.clone(), z.clone()], vec![entry, z]])
        } else {
            Mat::from_rows(vec![vec![z.clone(), entry], vec![z.clone(), z]])
        };
        if let Ok(out) = nmove(&base, &x, &n) {
            prop_assert!(out.matrix.det().eq_at_precision(&x.det()));
            prop_assert!(out.matrix.is_integral());
        }
    }
}
