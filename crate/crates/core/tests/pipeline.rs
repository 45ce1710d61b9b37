use nilprog::bilu::{self, ProperizationResult, ProperizeConfig, ProperizeInput};
use nilprog::hall::HallBasis;
use nilprog::prog::{self, Elem, ElementSet, OrderedProgression, Target, TargetGroup};
use nilprog::rational::int;
use nilprog::verify;

const BUDGET: u64 = 10_000_000;

/// `π(P_0)` for the input progression.
fn input_image(input: &ProperizeInput, target: &Target) -> ElementSet {
    let basis = HallBasis::build(input.domain.r, input.domain.s).unwrap();
    let gens = prog::commutator_images(&basis, target, &input.images).unwrap();
    let lengths = if input.lengths.len() == basis.d {
        input.lengths.clone()
    } else {
        basis.nilpotent_lengths(&input.lengths).unwrap()
    };
    let p = OrderedProgression::new(gens, lengths).unwrap();
    prog::enumerate(target, &p, &input.m, BUDGET).unwrap()
}

fn power(g: &Target, a: &ElementSet, k: u32) -> ElementSet {
    prog::power_set(g, a, k, BUDGET).unwrap()
}

/// Both inclusions of the sandwich, recomputed by enumeration.
fn check_sandwich(input: &ProperizeInput, res: &ProperizationResult) {
    let target = Target::from_descriptor(&res.codomain).unwrap();
    let p0 = input_image(input, &target);
    let hset: ElementSet = res.h.iter().cloned().collect();
    let hp = prog::product_set(
        &target,
        &hset,
        &prog::enumerate(&target, &res.prog, &res.m, BUDGET).unwrap(),
    );
    let xs: ElementSet = res.x.iter().cloned().collect();
    let xhp = prog::product_set(&target, &xs, &hp);
    assert!(p0.is_subset(&xhp), "P_0 escapes XHP");
    let hp0 = prog::product_set(&target, &hset, &p0);
    assert!(xhp.is_subset(&power(&target, &hp0, res.sandwich.xp_power)));
    assert!(hp.is_subset(&power(&target, &hp0, res.sandwich.p_power)));
    let h_in: ElementSet = hset.iter().cloned().collect();
    assert!(h_in.is_subset(&power(&target, &p0, res.sandwich.h_power)));
    // H is a subgroup.
    for a in &res.h {
        for b in &res.h {
            assert!(hset.contains(&target.multiply(a, &target.invert(b))));
        }
    }
    let proper = prog::is_proper(&target, &res.coset_progression(), &res.m, BUDGET).unwrap();
    assert!(proper.proper);
}

#[test]
fn z2_to_z_end_to_end() {
    let input = verify::z2_to_z_input();
    let res = bilu::properize_input(&input, &ProperizeConfig::default()).unwrap();
    assert_eq!(res.prog.rank(), 1);
    assert_eq!(res.h.len(), 1);
    assert_eq!(res.iterations.len(), 1);
    check_sandwich(&input, &res);

    let text = serde_json::to_string(&res).unwrap();
    let back: ProperizationResult = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

#[test]
fn heisenberg_modular_targets() {
    for q in [3, 5, 7] {
        let input = verify::heisenberg_mod_input(q);
        let res = bilu::properize_input(&input, &ProperizeConfig::default()).unwrap();
        let mut n = res.h.len() as i64;
        while n % q == 0 {
            n /= q;
        }
        assert_eq!(n, 1, "|H| = {} for q = {q}", res.h.len());
        check_sandwich(&input, &res);
    }
}

#[test]
fn output_is_independent_of_probe_seed() {
    let input = verify::z2_to_z_input();
    let a = bilu::properize_input(&input, &ProperizeConfig::default()).unwrap();
    let cfg = ProperizeConfig {
        seed: 17,
        ..ProperizeConfig::default()
    };
    let b = bilu::properize_input(&input, &cfg).unwrap();
    assert_eq!(a.prog, b.prog);
    assert_eq!(a.h, b.h);
}

#[test]
fn abelian_route_matches() {
    let input = ProperizeInput {
        m: int(2),
        ..verify::z2_to_z_input()
    };
    let res = bilu::abelian_properize(&input, &ProperizeConfig::default()).unwrap();
    assert!(res.proper.proper);
    assert_eq!(res.x, vec![Elem::from([0])]);
    check_sandwich(&input, &res);
}

#[test]
fn malformed_inputs_are_rejected() {
    let mut input = verify::z2_to_z_input();
    input.images.pop();
    let err = bilu::properize_input(&input, &ProperizeConfig::default()).unwrap_err();
    assert!(!err.is_hypothesis_violation(), "{err}");
}
