use std::path::PathBuf;

use nilprog::growth;
use nilprog::hall::{witt_dimension, FreeNilpotentGroup, HallBasis};
use nilprog::nilalg::{self, LieContext};
use nilprog::prog::{self, Elem, ElementSet, OrderedProgression, Target};
use nilprog::rational::{int, rat, Rat};
use num_traits::Signed;

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("NILPROG_BLESS").is_some() || !path.exists() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(expected, actual, "golden file {name} differs");
}

fn ints(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| int(x)).collect()
}

#[test]
fn witt_dimensions() {
    for (r, s, d) in [
        (2, 1, 2),
        (2, 2, 3),
        (2, 3, 5),
        (2, 4, 8),
        (2, 5, 14),
        (3, 2, 6),
        (3, 3, 14),
        (3, 4, 32),
    ] {
        assert_eq!(witt_dimension(r, s), d, "r={r} s={s}");
        assert_eq!(HallBasis::build(r, s).unwrap().d as u128, d);
    }
}

#[test]
fn hall_basis_golden() {
    let b = HallBasis::build(2, 3).unwrap();
    golden("hall_2_3.json", &serde_json::to_string_pretty(&b).unwrap());
    let b = HallBasis::build(3, 3).unwrap();
    golden("hall_3_3.json", &serde_json::to_string_pretty(&b).unwrap());
}

#[test]
fn structure_constants_golden() {
    let ctx = nilalg::free_nilpotent_lie(&HallBasis::build(2, 3).unwrap());
    golden(
        "lie_2_3.json",
        &serde_json::to_string_pretty(&ctx.structure_json()).unwrap(),
    );
}

fn heis_matrix(word: &[(usize, i64)]) -> [i64; 3] {
    let mut m = [0i64; 3];
    for &(i, e) in word {
        if i == 1 {
            m[0] += e;
        } else {
            m[2] += m[0] * e;
            m[1] += e;
        }
    }
    m
}

#[test]
fn heisenberg_words_up_to_length_eight() {
    let g = FreeNilpotentGroup::from_rank_step(2, 2).unwrap();
    let letters = [(1usize, 1i64), (1, -1), (2, 1), (2, -1)];
    let mut layer: Vec<Vec<(usize, i64)>> = vec![vec![]];
    let mut count = 0;
    for _ in 0..=8 {
        for w in &layer {
            let c = g.collect(w).unwrap();
            let m = heis_matrix(w);
            // x1^a x2^b [x2,x1]^e has matrix entry (1,3) equal to ab - e.
            assert_eq!(
                (c[0], c[1], c[0] * c[1] - c[2]),
                (m[0], m[1], m[2]),
                "{w:?}"
            );
            count += 1;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |&l| {
                    let mut w2 = w.clone();
                    w2.push(l);
                    w2
                })
            })
            .collect();
    }
    assert_eq!(count, 87381);
}

#[test]
fn collection_examples() {
    let g2 = FreeNilpotentGroup::from_rank_step(2, 2).unwrap();
    assert_eq!(g2.collect(&[(2, 1), (1, 1)]).unwrap(), vec![1, 1, 1]);
    assert_eq!(g2.collect(&[(1, 1), (1, -1)]).unwrap(), vec![0, 0, 0]);
    assert_eq!(g2.multiply(&[1, 0, 0], &[0, 1, 0]), vec![1, 1, 0]);
    assert_eq!(g2.multiply(&[0, 1, 0], &[1, 0, 0]), vec![1, 1, 1]);
    assert_eq!(g2.commutator_table().get(1, 2, 1, 1), &[0, 0, -1]);

    let w = [(2, 1), (1, 1), (2, 1), (1, 1)];
    let g3 = FreeNilpotentGroup::from_rank_step(2, 3).unwrap();
    let c3 = g3.collect(&w).unwrap();
    assert_eq!(&c3[..3], g2.collect(&w).unwrap().as_slice());
    let mut acc = g3.identity();
    for &(i, e) in &w {
        let mut x = g3.identity();
        x[i - 1] = e;
        acc = g3.bch_multiply(&acc, &x).unwrap();
    }
    assert_eq!(acc, c3);
}

#[test]
fn bch_examples() {
    let ctx = nilalg::free_nilpotent_lie(&HallBasis::build(2, 2).unwrap());
    let x = ints(&[3, -1, 2]);
    assert_eq!(ctx.bch(&x, &ints(&[0, 0, 0])), x);
    let y = vec![rat(1, 2), int(2), int(0)];
    let expect = nilalg::add(
        &nilalg::add(&x, &y),
        &nilalg::scale(&rat(1, 2), &ctx.bracket(&x, &y)),
    );
    assert_eq!(ctx.bch(&x, &y), expect);
    assert_eq!(
        ctx.second_kind_from_first(&ints(&[1, 1, 0])).unwrap(),
        vec![int(1), int(1), rat(1, 2)]
    );

    let ctx3 = nilalg::free_nilpotent_lie(&HallBasis::build(2, 3).unwrap());
    let z = ctx3.bch(&nilalg::unit_vec(5, 0), &nilalg::unit_vec(5, 1));
    assert!(z[3..].iter().all(|c| c.abs() == rat(1, 12)), "{z:?}");
    assert_eq!(
        z,
        nilalg::dynkin_bch(&ctx3, &nilalg::unit_vec(5, 0), &nilalg::unit_vec(5, 1))
    );
}

#[test]
fn integer_coordinates_after_rescaling() {
    let ctx = nilalg::free_nilpotent_lie(&HallBasis::build(2, 2).unwrap());
    let resc = nilalg::rescale_to_lattice(&ctx).unwrap();
    let c = &resc.ctx;
    for a in -2..=2 {
        for b in -2..=2 {
            for e in -2..=2 {
                let ell = c.second_kind_from_first(&ints(&[a, b, e])).unwrap();
                assert!(ell.iter().all(|x| x.is_integer()), "{a} {b} {e}: {ell:?}");
            }
        }
    }
}

#[test]
fn enumeration_and_properness() {
    let z = Target::integers();
    let p = OrderedProgression::new(vec![vec![1]], vec![2]).unwrap();
    assert_eq!(prog::enumerate(&z, &p, &int(1), 1000).unwrap().len(), 5);
    assert_eq!(prog::enumerate(&z, &p, &int(0), 1000).unwrap().len(), 1);

    let h = Target::heisenberg();
    let gens: Vec<Elem> = vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]];
    let p = OrderedProgression::new(gens.clone(), vec![1, 1, 1]).unwrap();
    assert_eq!(prog::enumerate(&h, &p, &int(1), 1000).unwrap().len(), 27);

    let p = OrderedProgression::new(vec![vec![1], vec![2]], vec![10, 10]).unwrap();
    let rep = prog::scan_proper(&z, &p.gens, &[], &p.lengths, 10_000).unwrap();
    assert!(!rep.proper);
    let (a, b) = rep.collision.unwrap();
    assert_eq!(a[0] + 2 * a[1], b[0] + 2 * b[1]);

    let c5 = Target::cyclic(5).unwrap();
    let p = OrderedProgression::new(vec![vec![1]], vec![5]).unwrap();
    assert!(
        !prog::scan_proper(&c5, &p.gens, &[], &p.lengths, 1000)
            .unwrap()
            .proper
    );
}

#[test]
fn upper_triangular_examples() {
    let h = Target::heisenberg();
    let gens: Vec<Elem> = vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]];
    for l in 1..=4 {
        let p = OrderedProgression::new(gens.clone(), vec![l, l, l * l]).unwrap();
        assert!(
            prog::is_upper_triangular(&h, &p, &int(1), 100_000)
                .unwrap()
                .holds
        );
    }
    let p = OrderedProgression::new(gens, vec![2, 2, 1]).unwrap();
    let rep = prog::is_upper_triangular(&h, &p, &int(1), 100_000).unwrap();
    assert!(!rep.holds);
    assert_eq!(&rep.witness.map(|w| (w.0, w.1)), &Some((1, 2)));

    let basis = HallBasis::build(2, 3).unwrap();
    let g = FreeNilpotentGroup::from_rank_step(2, 3).unwrap();
    let p = prog::nilpotent_progression(&basis, &[2, 3], &g, None).unwrap();
    // Weight three is ordered [u3,u2], [u3,u1].
    assert_eq!(p.lengths, vec![2, 3, 6, 18, 12]);
    let rep = prog::is_upper_triangular(&g, &p, &int(1), 1_000_000).unwrap();
    assert!(rep.holds);
    assert_eq!(
        prog::zeta_weights(5, &rep.expressions).unwrap(),
        vec![1, 1, 2, 3, 3]
    );
}

#[test]
fn coset_splits() {
    let g = FreeNilpotentGroup::from_rank_step(1, 1).unwrap();
    let split = prog::coset_reps_split(&g, &[5], &[2], 1000).unwrap();
    assert_eq!(split.reps, vec![vec![0], vec![1]]);
    assert_eq!(split.lengths, vec![3]);

    let g = FreeNilpotentGroup::from_rank_step(2, 2).unwrap();
    let split = prog::coset_reps_split(&g, &[3, 3, 9], &[2, 2, 2], 1_000_000).unwrap();
    assert!(split.reps.len() <= 8);
    for a in -3..=3 {
        for b in -3..=3 {
            let x = vec![a, b, 7];
            let (r, y) = prog::split_element(&g, &x, &[2, 2, 2]).unwrap();
            assert!(r.iter().all(|&v| (0..2).contains(&v)));
            assert_eq!(g.multiply(&r, &y), x);
        }
    }
}

fn interval(lo: i64, hi: i64) -> ElementSet {
    (lo..=hi).map(|x| vec![x]).collect()
}

#[test]
fn covering_examples() {
    let (z, s) = growth::integers_standard();
    let curve = growth::ball_growth(&z, &s, 10, 1_000_000).unwrap();
    for n in 1..=10 {
        assert_eq!(curve.size(n), Some(2 * n as u64 + 1));
    }

    let far =
        growth::cosets_far_apart(&z, &[vec![0], vec![3]], &interval(-5, 5), 1, 1_000_000).unwrap();
    assert_eq!(far.x, vec![vec![0]]);
    assert!(far.covered);
    let single = growth::cosets_far_apart(&z, &[vec![4]], &interval(-5, 5), 1, 1_000_000).unwrap();
    assert_eq!((single.x, single.power), (vec![vec![4]], 1));

    let s: ElementSet = interval(-1, 1);
    let local = growth::coset_reps_local(
        &z,
        &s,
        &[vec![0], vec![7]],
        &interval(-10, 10),
        5,
        1_000_000,
    )
    .unwrap();
    assert_eq!(local.x, vec![vec![0]]);
    assert!(local.covered);

    let c7 = growth::cyclic_group(7).unwrap();
    let all: Vec<Elem> = (0..7).map(|x| vec![x]).collect();
    assert_eq!(growth::finite_group_cover(&c7, &all, 10_000).unwrap().k, 1);
}

#[test]
fn sumset_examples() {
    let b: Vec<Vec<i64>> = (-3..=3)
        .flat_map(|x| (-2..=2).map(move |y| vec![x, y]))
        .collect();
    assert_eq!(
        growth::rom8_check(&b, &[3, 2], &rat(1, 4), 8, 1_000_000)
            .unwrap()
            .k,
        1
    );

    // {-2, 0, 2} never reaches odd residues in Z/n for even n, and needs
    // about n/4 summands for odd n.
    let ks: Vec<Option<u32>> = [11, 21, 41]
        .iter()
        .map(|&n| growth::cyclic_cover_power(n, &[-2, 0, 2], &[-2, -1, 0, 1, 2], 100))
        .collect();
    assert!(ks.windows(2).all(|w| w[0] < w[1]), "{ks:?}");
    assert_eq!(
        growth::cyclic_cover_power(20, &[-2, 0, 2], &[-2, -1, 0, 1, 2], 100),
        None
    );
}

#[test]
fn context_helpers() {
    let ab = LieContext::abelian(3);
    let resc = nilalg::rescale_to_lattice(&ab).unwrap();
    assert!(resc.factors().iter().all(|q| *q == 1.into()));
    assert!(nilalg::has_integer_constants(&ab));
}
