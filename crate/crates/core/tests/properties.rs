//! Property-based invariants for the polygon calculus plus randomized
//! structural laws for crystals with a nontrivial twist.

use fcrystal_core::polygon::{dual_point, LatticePoint, Polygon, Rat};
use fcrystal_core::random::random_with_divisors;
use fcrystal_core::semilinear::{self, SigmaMatrix};
use fcrystal_core::witt::WittRing;
use fcrystal_core::ObCrystal;
use num::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rat_strategy() -> impl Strategy<Value = Rat> {
    (0i64..12, 1i64..6).prop_map(|(n, d)| Rat::new(BigInt::from(n), BigInt::from(d)))
}

fn polygon_strategy(len: usize) -> impl Strategy<Value = Polygon> {
    prop::collection::vec(rat_strategy(), len)
        .prop_map(|slopes| Polygon::from_slopes(&slopes).unwrap())
}

proptest! {
    #[test]
    fn preceq_is_a_partial_order(a in polygon_strategy(6), b in polygon_strategy(6)) {
        prop_assert!(a.preceq(&a).unwrap());
        // antisymmetry: mutual dominance forces equality
        if a.preceq(&b).unwrap() && b.preceq(&a).unwrap() {
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn preceq_transitive(a in polygon_strategy(5), b in polygon_strategy(5), c in polygon_strategy(5)) {
        if a.preceq(&b).unwrap() && b.preceq(&c).unwrap() {
            prop_assert!(a.preceq(&c).unwrap());
        }
    }

    #[test]
    fn value_at_endpoint_is_total(p in polygon_strategy(7)) {
        let h = Rat::from(BigInt::from(p.height()));
        prop_assert_eq!(p.value_at(&h).unwrap(), p.total());
        prop_assert!(p.value_at(&Rat::from(BigInt::from(0))).unwrap() == Rat::from(BigInt::from(0)));
    }

    #[test]
    fn reduce_inflate_roundtrip(p in polygon_strategy(4), r in 1u64..4) {
        let inflated = p.r_inflate(r).unwrap();
        prop_assert_eq!(inflated.r_reduce(r).unwrap(), p);
        // inflation multiplies every multiplicity by r
        prop_assert!(inflated.segments().iter().all(|(_, m)| m % r == 0));
    }

    #[test]
    fn pointwise_sum_total_additive(a in polygon_strategy(6), b in polygon_strategy(6)) {
        let s = a.pointwise_sum(&b).unwrap();
        prop_assert_eq!(s.total(), a.total() + b.total());
        prop_assert_eq!(s.height(), a.height());
    }

    #[test]
    fn split_concat_roundtrip(p in polygon_strategy(8), cut in 0u64..=8) {
        let (a, b) = p.split_at(cut).unwrap();
        prop_assert_eq!(a.height(), cut);
        prop_assert_eq!(a.concat(&b), p);
    }

    #[test]
    fn dual_point_involutive(x1 in 0u64..=12, num in 0i64..24, n in 6u64..=8) {
        // any point with abscissa within the height pairs involutively
        let x = LatticePoint::new(x1.min(2 * n), Rat::new(BigInt::from(num), BigInt::from(3)));
        prop_assert_eq!(dual_point(&dual_point(&x, n), n), x);
    }

    #[test]
    fn dual_polygon_involutive(raw in prop::collection::vec((0i64..=4, 4i64..=4), 1..6)) {
        let slopes: Vec<Rat> = raw.iter().map(|(n, d)| Rat::new(BigInt::from(*n), BigInt::from(*d))).collect();
        let p = Polygon::from_slopes(&slopes).unwrap();
        let d = p.dual().unwrap();
        prop_assert_eq!(d.dual().unwrap(), p.clone());
        prop_assert_eq!(d.height(), p.height());
    }
}

/// Breakpoints of self-dual polygons pair under the duality map; checked on
/// generated self-dual instances rather than proptest shrinkable ones since
/// self-duality is a thin condition.
#[test]
fn self_dual_breakpoint_pairing() {
    use fcrystal_core::random::random_self_dual_polygon;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let (nu, n) = random_self_dual_polygon(8, &mut rng);
        for bp in nu.breakpoints() {
            let paired = dual_point(&bp, n);
            assert!(nu.is_breakpoint(&paired).unwrap());
        }
    }
}

/// Structural laws keep holding with a nontrivial Frobenius twist.
#[test]
fn twisted_crystals_satisfy_mazur_and_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    for _ in 0..40 {
        let r = rng.gen_range(1..=2usize);
        let d = rng.gen_range(1..=3usize);
        let m = r * rng.gen_range(1..=2usize);
        let twist = rng.gen_range(1..=3u32);
        let ring = WittRing::with_default_poly(3, m, 64).unwrap();
        let blocks = (0..r)
            .map(|_| {
                let exps: Vec<u32> = (0..d).map(|_| rng.gen_range(0..=2)).collect();
                random_with_divisors(&ring, &exps, &mut rng)
            })
            .collect();
        let c = ObCrystal::new(ring, twist, blocks).unwrap();
        let nu = c.newton().unwrap();
        let mubar = c.sigma_hodge().unwrap();
        assert!(nu.preceq(&mubar).unwrap());
        let nu_red = c.newton_reduced().unwrap();
        let mu_red = c.sigma_hodge_reduced().unwrap();
        for mu_i in c.per_block_hodge_of_phi().unwrap() {
            assert!(nu_red.preceq(&mu_i).unwrap());
            assert!(mu_i.preceq(&mu_red).unwrap());
        }
        // the reduced Newton polygon is block-independent
        for poly in c.newton_reduced_all_blocks().unwrap() {
            assert_eq!(poly, nu_red);
        }
    }
}

/// Composition bound at mixed twists.
#[test]
fn composition_bound_with_mixed_twists() {
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let ring = WittRing::with_default_poly(2, 4, 40).unwrap();
    for _ in 0..60 {
        let n = rng.gen_range(1..=3usize);
        let exps_g: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
        let exps_h: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
        let g = SigmaMatrix::new(random_with_divisors(&ring, &exps_g, &mut rng), rng.gen_range(1..=3)).unwrap();
        let h = SigmaMatrix::new(random_with_divisors(&ring, &exps_h, &mut rng), rng.gen_range(1..=3)).unwrap();
        let gh = semilinear::compose(&g, &h).unwrap();
        assert_eq!(gh.twist, g.twist + h.twist);
        let bound = semilinear::hodge(&g)
            .unwrap()
            .pointwise_sum(&semilinear::hodge(&h).unwrap())
            .unwrap();
        assert!(semilinear::hodge(&gh).unwrap().preceq(&bound).unwrap());
    }
}
