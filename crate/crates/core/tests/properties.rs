use proptest::prelude::*;
use rendezvous_core::dynamics::{
    cyclic_shift, from_rotated, to_rotated, AgentState, Dynamics, Lambda, ModelParams, Representation,
    SystemState,
};
use rendezvous_core::dynamics::FieldKind;
use rendezvous_core::simulate::{integrate, rendezvous_metric, Tolerances};

fn agent() -> impl Strategy<Value = AgentState> {
    (-3.0..3.0_f64, -3.0..3.0_f64, -0.99..0.99_f64, 0.01..3.0_f64, 0.01..3.0_f64)
        .prop_map(|(x, y, m, v1, v2)| AgentState::new(vec![x, y], m, [v1, v2]))
}

fn rotated_state(n: usize) -> impl Strategy<Value = SystemState> {
    proptest::collection::vec(agent(), n)
        .prop_map(|agents| SystemState::new(agents, Representation::Rotated).unwrap())
}

fn sized_state() -> impl Strategy<Value = SystemState> {
    prop_oneof![rotated_state(3), rotated_state(4), rotated_state(7)]
}

fn max_diff(a: &SystemState, b: &SystemState) -> f64 {
    a.to_row()
        .iter()
        .zip(b.to_row())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

proptest! {
    #[test]
    fn full_field_commutes_with_cyclic_shifts(z in sized_state(), sigma in 0.05..8.0_f64, lambda in 0.1..10.0_f64) {
        let n = z.n_agents();
        let dy = Dynamics::new(&ModelParams::symmetric(n, sigma, Lambda::Finite(lambda)).unwrap()).unwrap();
        let fz = dy.full(&z).unwrap();
        for g in 0..n as i64 {
            let lhs = dy.full(&cyclic_shift(&z, g)).unwrap();
            let rhs = cyclic_shift(&fz, g);
            prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn slow_field_commutes_with_cyclic_shifts(z in sized_state(), sigma in 0.05..8.0_f64) {
        let n = z.n_agents();
        let dy = Dynamics::new(&ModelParams::symmetric(n, sigma, Lambda::Infinite).unwrap()).unwrap();
        let fz = dy.slow(&z).unwrap();
        for g in 0..n as i64 {
            let shifted = dy.slow(&cyclic_shift(&z, g)).unwrap();
            let s = g.rem_euclid(n as i64) as usize;
            for k in 0..n {
                let src = (k + n - s) % n;
                prop_assert!((shifted.motivations[k] - fz.motivations[src]).abs() < 1e-12);
                for i in 0..2 {
                    prop_assert!((shifted.positions[k][i] - fz.positions[src][i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn frames_give_the_same_field_and_metric(z in sized_state(), sigma in 0.05..8.0_f64) {
        let n = z.n_agents();
        let dy = Dynamics::new(&ModelParams::symmetric(n, sigma, Lambda::Finite(1.0)).unwrap()).unwrap();
        let x = from_rotated(&z).unwrap();
        let via_original = to_rotated(&dy.full(&x).unwrap()).unwrap();
        prop_assert!(max_diff(&dy.full(&z).unwrap(), &via_original) < 1e-12);
        prop_assert!((rendezvous_metric(&z) - rendezvous_metric(&x)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn motivation_and_values_stay_admissible(z in rotated_state(3), sigma in 0.1..6.0_f64) {
        let p = ModelParams::symmetric(3, sigma, Lambda::Finite(1.0)).unwrap();
        let tr = integrate(FieldKind::Full, &p, &z, 20.0, Tolerances::default()).unwrap();
        for s in &tr.states {
            prop_assert!(s.validate().is_ok());
        }
    }

    #[test]
    fn symmetric_subspace_is_invariant(a in agent(), n in 3usize..6, sigma in 0.1..6.0_f64) {
        let p = ModelParams::symmetric(n, sigma, Lambda::Finite(1.0)).unwrap();
        let z = SystemState::new(vec![a; n], Representation::Rotated).unwrap();
        let tr = integrate(FieldKind::Full, &p, &z, 30.0, Tolerances::default()).unwrap();
        for s in &tr.states {
            prop_assert!(s.column_spread() < 1e-9);
        }
    }
}
