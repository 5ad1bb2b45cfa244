use proptest::prelude::*;

use valex::instances::random_csp;
use valex::propagation::as_operators;
use valex::{
    closure, closure_bruteforce, local_operators, parse_model, print_model, retract, Csp, Environment, LabelDirective,
    Model, SolverState, Strategy as Labeling,
};

fn env_from_mask(csp: &Csp, mask: u64) -> Environment {
    let dom = csp.domain();
    let elems = (0..dom.len()).filter(|i| mask >> i & 1 == 1).map(|i| dom.element(i));
    Environment::from_elements(dom, elems).unwrap()
}

fn problem() -> impl Strategy<Value = (Csp, u64, u64)> {
    (0..2000u64, any::<u64>(), any::<u64>()).prop_map(|(seed, a, b)| (random_csp(seed), a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn set_laws((csp, a, b) in problem()) {
        let x = env_from_mask(&csp, a);
        let y = env_from_mask(&csp, b);
        let both = x.intersection(&y);
        prop_assert!(both.is_subset(&x) && both.is_subset(&y));
        prop_assert!(x.is_subset(&x.union(&y)));
        prop_assert_eq!(x.difference(&y).union(&both), x.clone());
        prop_assert_eq!(x.complement().complement(), x.clone());
        prop_assert!(x.difference(&y).intersection(&y).is_empty());
    }

    #[test]
    fn local_operators_are_monotonic_and_contracting((csp, a, b) in problem()) {
        let small = env_from_mask(&csp, a & b);
        let big = env_from_mask(&csp, b);
        for op in local_operators(&csp) {
            let r = op.reduce(&big);
            prop_assert!(r.is_subset(&big));
            prop_assert_eq!(op.reduce(&r), r.clone(), "{} not idempotent", op.id());
            prop_assert!(op.apply(&small).is_subset(&op.apply(&big)), "{} not monotonic", op.id());
        }
    }

    #[test]
    fn closure_is_the_greatest_common_fixpoint((csp, a, b) in problem()) {
        let ops = as_operators(&local_operators(&csp));
        let small = env_from_mask(&csp, a & b);
        let big = env_from_mask(&csp, b);
        let c = closure(&big, &ops);
        prop_assert_eq!(&c.env, &closure_bruteforce(&big, &ops));
        prop_assert!(c.env.is_subset(&big));
        prop_assert_eq!(&closure(&c.env, &ops).env, &c.env);
        for op in &ops {
            prop_assert_eq!(&op.reduce(&c.env), &c.env);
        }
        prop_assert!(closure(&small, &ops).env.is_subset(&c.env));
        prop_assert_eq!(c.log.len(), big.len() - c.env.len());
        prop_assert!(c.log.check_well_founded(&big).is_ok());
    }

    #[test]
    fn retraction_matches_fresh_closure(seed in 0..2000u64, pick in any::<usize>()) {
        let csp = random_csp(seed);
        let ids: Vec<String> = csp.constraints().iter().map(|c| c.id.clone()).collect();
        let c = &ids[pick % ids.len()];
        let state = SolverState::new(&csp);
        let after = retract(&state, c).unwrap();
        let fresh = SolverState::new(&csp.without(c).unwrap());
        prop_assert_eq!(after.env(), fresh.env());
        prop_assert!(retract(&after, c).is_err());
    }

    #[test]
    fn retractions_commute(seed in 0..2000u64, i in any::<usize>(), j in any::<usize>()) {
        let csp = random_csp(seed);
        let n = csp.constraints().len();
        prop_assume!(n >= 2);
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let a = csp.constraints()[i].id.clone();
        let b = csp.constraints()[j].id.clone();
        let state = SolverState::new(&csp);
        let ab = retract(&retract(&state, &a).unwrap(), &b).unwrap();
        let ba = retract(&retract(&state, &b).unwrap(), &a).unwrap();
        prop_assert_eq!(ab.env(), ba.env());
    }

    #[test]
    fn print_parse_round_trip(seed in 0..2000u64, split in any::<bool>(), take in 0..5usize) {
        let csp = random_csp(seed);
        let strategy = if split { Labeling::Split } else { Labeling::Enumerate };
        let labeling = csp.domain().vars().take(take).map(|v| LabelDirective::new(v, strategy)).collect();
        let m = Model { csp, labeling };
        let text = print_model(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(print_model(&back), text);
    }
}
