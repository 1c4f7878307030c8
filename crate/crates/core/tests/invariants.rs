mod support;

use proptest::prelude::*;
use quiltfloer::curve::{Locator, Segment};
use quiltfloer::discs::SearchOptions;
use quiltfloer::floer::{build_cf, homology, BitMatrix};
use quiltfloer::geom::Pt;
use quiltfloer::geom::{fmt_q, Q};
use quiltfloer::intersect::fiber_product;
use quiltfloer::par::Strategy;
use quiltfloer::perturbation::{Move, PerturbationPlan, Zone};
use quiltfloer::scenario::{parse, parse_q, write_plan, Item, HEADER};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(seed: u64) -> support::WigglePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(p) = support::random_wiggled_pair(&mut rng, 12) {
            return p;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn differential_squares_to_zero(seed in any::<u64>()) {
        let f = pair(seed);
        let cf = build_cf(&f.surface, &f.a, &f.b, &SearchOptions::default(), Strategy::Sequential)
            .unwrap();
        prop_assert!(cf.differential.mul(&cf.differential).is_zero(), "{}", f.description);
        let r = homology(&cf).unwrap();
        prop_assert_eq!(r % 2, cf.rank() % 2);
    }

    #[test]
    fn strategies_agree(seed in any::<u64>()) {
        let f = pair(seed);
        let opts = SearchOptions::default();
        let a = build_cf(&f.surface, &f.a, &f.b, &opts, Strategy::Sequential).unwrap();
        let b = build_cf(&f.surface, &f.a, &f.b, &opts, Strategy::Parallel).unwrap();
        prop_assert_eq!(a.differential, b.differential);
        prop_assert_eq!(a.discs, b.discs);
    }

    #[test]
    fn fiber_product_is_symmetric(seed in any::<u64>()) {
        let f = pair(seed);
        let ab = fiber_product(&f.surface, &f.a, &f.b);
        let mut ba: Vec<_> = fiber_product(&f.surface, &f.b, &f.a)
            .into_iter()
            .map(|p| (p.b, p.a))
            .collect();
        let mut ab: Vec<_> = ab.into_iter().map(|p| (p.a, p.b)).collect();
        ab.sort();
        ba.sort();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn rationals_print_and_parse(n in -10_000i128..10_000, d in 1i128..500) {
        let v = Q::new(n, d);
        prop_assert_eq!(parse_q(&fmt_q(&v)), Some(v));
    }

    #[test]
    fn rank_is_bounded(bits in proptest::collection::vec(any::<bool>(), 1..64), cols in 1usize..8) {
        let rows = bits.len().div_ceil(cols);
        let mut m = BitMatrix::zeros(rows, cols);
        for (i, b) in bits.iter().enumerate() {
            m.set(i / cols, i % cols, *b);
        }
        prop_assert!(m.rank() <= rows.min(cols));
        prop_assert_eq!(m.mul(&BitMatrix::identity(cols)), m.clone());
    }

    #[test]
    fn plans_round_trip_through_text(
        moves in proptest::collection::vec(
            (0usize..3, 0usize..9, 0i128..8, 0usize..9, 0i128..8, -5i128..5, -5i128..5, 1i128..7),
            0..4,
        ),
        radius in 1i128..7,
    ) {
        let loc = |c, s, t| Locator { comp: c, seg: s, t: Q::new(t, 8) };
        let plan = PerturbationPlan {
            target: "K".into(),
            moves: moves
                .iter()
                .map(|&(c, s0, t0, s1, t1, dx, dy, r)| Move {
                    from: loc(c, s0, t0),
                    to: loc(c, s1, t1),
                    displacement: Pt::new(Q::new(dx, 64), Q::new(dy, 64)),
                    radius: Q::new(r, 16),
                })
                .collect(),
            fixed_zones: vec![Zone {
                label: "z".into(),
                pieces: vec![Segment {
                    square: 1,
                    from: Pt::new(Q::new(1, 3), Q::new(0, 1)),
                    to: Pt::new(Q::new(1, 3), Q::new(1, 1)),
                }],
                radius: Q::new(radius, 16),
            }],
        };
        let text = format!(
            "{HEADER}\nsurface T torus 1 1\ncurve K on T\n  path 0 0,1/2 1,1/2\nend\n{}",
            write_plan("P", &plan)
        );
        let sc = parse(&text).unwrap();
        prop_assert_eq!(
            sc.item("P"),
            Some(&Item::Perturb { name: "P".into(), plan })
        );
    }

    #[test]
    fn covering_counts_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(f) = support::random_covering_correspondence(&mut rng) else {
            return Ok(());
        };
        let Ok(t) = quiltfloer::quilt::identify_generators(&f.l1, &f.corr, &f.l2) else {
            return Ok(());
        };
        let (a, b, c) = t.counts();
        prop_assert!(a == b && b == c, "{}", f.description);
        prop_assert!(t.round_trips());
    }
}
