use appe::estimation::{correct_beta, perturbed_beta};
use appe::protocol::{run_appe, ProtocolConfig};
use appe::quantum::PureState;
use appe::rng::SeedTree;
use appe::subprotocols::{notification, parity_protocol, ParityOptions, RoleAssignment};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parity_is_xor_for_any_network(inputs in prop::collection::vec(0u8..2, 1..=64), seed in any::<u64>()) {
        let out = parity_protocol(&inputs, &SeedTree::new(seed), 0, ParityOptions::default()).unwrap();
        prop_assert_eq!(out.y, inputs.iter().fold(0, |a, b| a ^ b));
        prop_assert_eq!(out.announcements.iter().fold(0, |a, b| a ^ b), out.y);
    }

    #[test]
    fn notification_delivers_the_indicator(
        (n, alice, parts) in (1usize..=64).prop_flat_map(|n| (Just(n), 0..n, prop::collection::vec(any::<bool>(), n))),
        seed in any::<u64>(),
    ) {
        prop_assume!(parts.iter().any(|&p| p));
        let roles = RoleAssignment::new(n, alice, parts.clone()).unwrap();
        let t = notification(&roles, &SeedTree::new(seed), 1);
        let expected: Vec<u8> = parts.iter().map(|&p| u8::from(p)).collect();
        prop_assert_eq!(t.outputs, expected);
    }

    #[test]
    fn correction_inverts_flips(beta in 0.0f64..=1.0, alpha in 0.0f64..0.49) {
        let (back, clamped) = correct_beta(perturbed_beta(beta, alpha), alpha).unwrap();
        prop_assert!((back - beta).abs() <= 1e-12);
        prop_assert!(!clamped || (back - beta).abs() <= 1e-12);
    }

    #[test]
    fn encoded_phase_is_mean_over_participants(theta in prop::collection::vec(-3.0f64..3.0, 2..=6)) {
        let m = theta.len();
        let mut s = PureState::ghz(m).unwrap();
        for (a, &t) in theta.iter().enumerate() {
            s = s.apply_local_phase(a, t, m).unwrap();
        }
        let mean = theta.iter().sum::<f64>() / m as f64;
        let target = PureState::ghz_with_phase(m, mean).unwrap();
        prop_assert!((s.fidelity(&target).unwrap() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn runs_are_reproducible(seed in any::<u64>()) {
        let mut cfg = ProtocolConfig::new(4, 0, vec![0, 1, 3], vec![0.2, 0.4, 0.0, 0.6], 300, 100);
        cfg.seed = seed;
        let a = run_appe(&cfg).unwrap();
        let b = run_appe(&cfg).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
        prop_assert_eq!(a.transcript, b.transcript);
    }
}
