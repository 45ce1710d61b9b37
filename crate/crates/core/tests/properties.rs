use nilprog::hall::FreeNilpotentGroup;
use nilprog::intlin;
use nilprog::latgeo::{self, LatticeBasis, PolytopeNorm};
use nilprog::nilalg;
use nilprog::prog::{self, TargetGroup, Unitriangular};
use nilprog::rational::{int, rat, Rat, RatMatrix};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn elem(d: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-4i64..=4, d)
}

fn rat_vec(d: usize) -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec((-4i64..=4, 1i64..=3).prop_map(|(p, q)| rat(p, q)), d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_group_laws(a in elem(5), b in elem(5), c in elem(5)) {
        let g = FreeNilpotentGroup::from_rank_step(2, 3).unwrap();
        prop_assert_eq!(g.multiply(&g.multiply(&a, &b), &c), g.multiply(&a, &g.multiply(&b, &c)));
        prop_assert_eq!(g.multiply(&a, &g.invert(&a)), g.identity());
        prop_assert_eq!(g.multiply(&g.identity(), &b), b.clone());
        prop_assert_eq!(g.multiply(&a, &b), g.bch_multiply(&a, &b).unwrap());
    }

    #[test]
    fn rank_three_multiplication_matches_bch(a in elem(14), b in elem(14)) {
        let g = FreeNilpotentGroup::from_rank_step(3, 3).unwrap();
        prop_assert_eq!(g.multiply(&a, &b), g.bch_multiply(&a, &b).unwrap());
    }

    #[test]
    fn powers_and_commutators(a in elem(5), b in elem(5), n in -4i64..=4) {
        let g = FreeNilpotentGroup::from_rank_step(2, 3).unwrap();
        let mut acc = g.identity();
        let step = if n >= 0 { a.clone() } else { g.invert(&a) };
        for _ in 0..n.abs() {
            acc = g.multiply(&acc, &step);
        }
        prop_assert_eq!(g.pow(&a, n), acc);
        let expect = g.multiply(&g.multiply(&g.invert(&a), &g.invert(&b)), &g.multiply(&a, &b));
        prop_assert_eq!(g.commutator(&a, &b), expect);
    }

    #[test]
    fn bch_associative_and_inverse(x in rat_vec(5), y in rat_vec(5), z in rat_vec(5)) {
        let ctx = nilalg::free_nilpotent_lie(&nilprog::hall::HallBasis::build(2, 3).unwrap());
        prop_assert_eq!(ctx.bch(&ctx.bch(&x, &y), &z), ctx.bch(&x, &ctx.bch(&y, &z)));
        prop_assert!(nilalg::is_zero(&ctx.bch(&x, &nilalg::neg(&x))));
        prop_assert_eq!(ctx.bch(&x, &y), nilalg::dynkin_bch(&ctx, &x, &y));
    }

    #[test]
    fn coordinates_round_trip(x in rat_vec(5)) {
        let ctx = nilalg::free_nilpotent_lie(&nilprog::hall::HallBasis::build(2, 3).unwrap());
        let ell = ctx.second_kind_from_first(&x).unwrap();
        prop_assert_eq!(ctx.first_kind_from_second(&ell), x);
    }

    #[test]
    fn unitriangular_mod_laws(a in elem(6), b in elem(6), c in elem(6)) {
        let g = Unitriangular::new(4, Some(7)).unwrap();
        let (a, b, c) = (g.pow(&a, 1), g.pow(&b, 1), g.pow(&c, 1));
        prop_assert_eq!(g.multiply(&g.multiply(&a, &b), &c), g.multiply(&a, &g.multiply(&b, &c)));
        prop_assert_eq!(g.multiply(&g.invert(&a), &a), g.identity());
        prop_assert_eq!(g.pow(&a, 7), g.identity());
    }

    #[test]
    fn rank_encoding_round_trips(bounds in prop::collection::vec(0i64..=4, 1..4), seed in any::<u64>()) {
        let total = prog::grid_size(&bounds, u64::MAX).unwrap();
        let idx = seed % total;
        let ell = prog::decode_rank(idx, &bounds);
        prop_assert!(ell.iter().zip(&bounds).all(|(x, b)| x.abs() <= *b));
        prop_assert_eq!(prog::encode_rank(&ell, &bounds), idx);
    }

    #[test]
    fn sublattice_index_is_determinant(m in prop::collection::vec(-5i64..=5, 9), extra in elem(3)) {
        let rows: Vec<Vec<i64>> = m.chunks(3).map(|c| c.to_vec()).collect();
        let det = RatMatrix::from_int_columns(&rows).determinant();
        let gens: Vec<_> = rows.iter().map(|r| intlin::big(r)).collect();
        let idx = intlin::sublattice_index(&gens, 3);
        if det.is_zero() {
            prop_assert!(idx.is_none());
        } else {
            let idx = idx.unwrap();
            prop_assert_eq!(Rat::from_integer(idx.clone()), det.abs());
            // A combination of the generators changes nothing.
            let combo: Vec<i64> = (0..3).map(|c| rows.iter().zip(&extra).map(|(r, e)| r[c] * e).sum()).collect();
            let mut more = gens.clone();
            more.push(intlin::big(&combo));
            prop_assert_eq!(intlin::sublattice_index(&more, 3), Some(idx));
        }
    }

    #[test]
    fn minima_and_mahler(a in 1i64..=3, b in -2i64..=2, c in 1i64..=3, l1 in 1i64..=5, l2 in 1i64..=5) {
        let lat = LatticeBasis::new(vec![vec![int(a), int(0)], vec![rat(b, 2), int(c)]]).unwrap();
        let body = PolytopeNorm::int_box(&[l1, l2]).compile().unwrap();
        let rep = latgeo::successive_minima(&body, &lat, 1_000_000).unwrap();
        prop_assert!(rep.lambda[0] <= rep.lambda[1]);
        for (w, l) in rep.witnesses.iter().zip(&rep.lambda) {
            prop_assert_eq!(&body.norm(w), l);
        }
        let m = latgeo::mahler_basis(&rep, &lat).unwrap();
        let det = RatMatrix::from_int_columns(&m.coords).determinant();
        prop_assert_eq!(det.abs(), int(1));
        prop_assert!(body.norm(&m.vectors[1]) <= rep.lambda[1].clone());
        // Norms are homogeneous.
        let v2: Vec<Rat> = m.vectors[0].iter().map(|x| x * int(2)).collect();
        prop_assert_eq!(body.norm(&v2), body.norm(&m.vectors[0]) * int(2));
    }
}
