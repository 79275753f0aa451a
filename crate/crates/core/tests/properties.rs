mod common;

use proptest::prelude::*;

use rhombill::angle::parse_angle;
use rhombill::beams::{decompose_side, propagate, BandSide, Beam};
use rhombill::exact::{Direction, Real, ZeroTest, Q};
use rhombill::geometry::{make_triangle, trace_ray, StartPoint, StopRule, Terminal, TriangleConfig};

fn angle() -> impl Strategy<Value = String> {
    // inside (pi/6, pi/4), written with five decimals
    (52_400u32..78_500).prop_map(|k| format!("0.{k:05}"))
}

fn start() -> impl Strategy<Value = Q> {
    (-(1i128 << 30) + 1..(1i128 << 30)).prop_map(|n| Q::new(n, 1 << 30))
}

fn same(cfg: &TriangleConfig, a: &Real, b: &Real) -> bool {
    cfg.perpendicular().field().zero_test(&a.sub(b).poly) == ZeroTest::Zero
}

fn regular(t: &Terminal) -> bool {
    !matches!(t, Terminal::VertexSingular(_) | Terminal::Undecided { .. })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn codes_move_one_level_at_a_time(a in angle(), q in start()) {
        let cfg = make_triangle(&a, 128).unwrap();
        let t = trace_ray(&cfg, &StartPoint::CosMultiple(q), &Direction::Perpendicular, &StopRule::steps(30)).unwrap();
        for w in t.code.entries().windows(2) {
            prop_assert_eq!((w[1] - w[0]).abs(), 1);
        }
    }

    #[test]
    fn doubling_precision_keeps_code_and_terminal(a in angle(), q in start()) {
        let lo = make_triangle(&a, 128).unwrap();
        let hi = lo.with_precision(256).unwrap();
        let stop = StopRule::first_return().with_band(-12, 12);
        let s = StartPoint::CosMultiple(q);
        let t1 = trace_ray(&lo, &s, &Direction::Perpendicular, &stop).unwrap();
        prop_assume!(regular(&t1.terminal));
        let t2 = trace_ray(&hi, &s, &Direction::Perpendicular, &stop).unwrap();
        prop_assert_eq!(t1.code, t2.code);
        prop_assert_eq!(t1.terminal, t2.terminal);
    }

    #[test]
    fn reversed_orbit_has_reversed_code(a in angle(), q in start(), steps in 1usize..25) {
        let cfg = make_triangle(&a, 128).unwrap();
        let unf = cfg.perpendicular();
        let t = trace_ray(&cfg, &StartPoint::CosMultiple(q), &Direction::Perpendicular, &StopRule::steps(steps)).unwrap();
        prop_assume!(t.terminal == Terminal::StepBudgetExhausted);
        // turning the flow around is the point reflection through the copy centre
        let back = unf
            .trace_offset(&t.final_offset.neg(), t.code.last(), &StopRule::steps(steps), cfg.step_budget())
            .unwrap();
        prop_assert_eq!(back.code, t.code.reversed());
        prop_assert!(same(&cfg, &back.final_offset, &t.start.neg()));
    }

    #[test]
    fn naive_simulator_agrees(a in angle(), q in start()) {
        let cfg = make_triangle(&a, 128).unwrap();
        let x = *q.numer() as f64 / *q.denom() as f64 * cfg.alpha_f64().cos();
        let (naive, _) = common::folded_code(cfg.alpha_f64(), x, 15, 1e-6);
        let t = trace_ray(&cfg, &StartPoint::CosMultiple(q), &Direction::Perpendicular, &StopRule::steps(15)).unwrap();
        let ours = t.code.entries();
        prop_assert!(ours.len() >= naive.len());
        prop_assert_eq!(&ours[..naive.len()], &naive[..]);
    }

    #[test]
    fn level_zero_beams_tile_the_start_set(a in angle(), n in 1i64..8) {
        let cfg = make_triangle(&a, 128).unwrap();
        let half = cfg.half_length().unwrap();
        for side in [BandSide::Positive, BandSide::Negative] {
            let bs = decompose_side(&cfg, side, n).unwrap();
            let b: Vec<&Beam> = bs.from_level0().filter(|b| !b.flags.degenerate).collect();
            let (lo, hi) = match side {
                BandSide::Positive => (half.neg(), half.sub(&half)),
                BandSide::Negative => (half.sub(&half), half.clone()),
            };
            prop_assert!(same(&cfg, &b[0].lo, &lo));
            prop_assert!(same(&cfg, &b[b.len() - 1].hi, &hi));
            for w in b.windows(2) {
                prop_assert!(same(&cfg, &w[0].hi, &w[1].lo));
            }
        }
    }

    #[test]
    fn codes_determine_beams(a in angle(), n in 1i64..8, cut in 1i64..99) {
        let cfg = make_triangle(&a, 128).unwrap();
        let unf = cfg.perpendicular();
        let bs = decompose_side(&cfg, BandSide::Positive, n).unwrap();
        let full: Vec<&Beam> = bs.from_level0().filter(|b| !b.flags.degenerate).collect();
        let mut codes: Vec<_> = full.iter().map(|b| b.code.clone()).collect();
        codes.sort();
        codes.dedup();
        prop_assert_eq!(codes.len(), full.len());

        // recompute from two seed intervals and glue pieces that share a code
        let lo = full[0].lo.clone();
        let hi = full[full.len() - 1].hi.clone();
        let x = unf.start_offset(&StartPoint::CosMultiple(Q::new(-(cut as i128), 100))).unwrap();
        let stop = StopRule::band(0, n);
        let mut pieces = propagate(&unf, 0, lo, x.clone(), &stop, cfg.step_budget()).unwrap().0;
        pieces.extend(propagate(&unf, 0, x, hi, &stop, cfg.step_budget()).unwrap().0);
        let mut glued: Vec<Beam> = Vec::new();
        for p in pieces {
            match glued.last_mut() {
                Some(g) if g.code == p.code && same(&cfg, &g.hi, &p.lo) => g.hi = p.hi,
                _ => glued.push(p),
            }
        }
        prop_assert_eq!(glued.len(), full.len());
        for (g, f) in glued.iter().zip(&full) {
            prop_assert_eq!(&g.code, &f.code);
            prop_assert!(same(&cfg, &g.lo, &f.lo) && same(&cfg, &g.hi, &f.hi));
        }
    }

    #[test]
    fn beam_codes_come_in_reversed_pairs(a in angle(), n in 1i64..8) {
        let cfg = make_triangle(&a, 128).unwrap();
        let bs = decompose_side(&cfg, BandSide::Positive, n).unwrap();
        let codes: Vec<_> = bs.proper().map(|b| b.code.clone()).collect();
        for c in &codes {
            prop_assert!(codes.contains(&c.reversed()), "{} has no reversal", c);
        }
    }

    #[test]
    fn canonical_angle_round_trips(num in 1i64..30, den in 1i64..30, d in 0u32..99_999) {
        for text in [format!("{num}*pi/{den}"), format!("0.{d:05}"), format!("pi/{den} + {num}/{den}")] {
            let a = parse_angle(&text).unwrap();
            let b = parse_angle(&a.canonical()).unwrap();
            prop_assert_eq!(a.canonical(), b.canonical());
            prop_assert!(a.same_affine(&b));
        }
    }
}
