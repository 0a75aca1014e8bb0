//! Property tests for the library-level invariants.

use proptest::prelude::*;
use shadowlab_core::bounds::{bias_budget, classify, mitigation_map, Verdict};
use shadowlab_core::channel::PauliChannel;
use shadowlab_core::clifford::GateEnsemble;
use shadowlab_core::frame::{ideal_expectation, noisy_frame, StateData};
use shadowlab_core::noise::NoiseModel;
use shadowlab_core::pauli::{DensityState, PauliLabel, PauliObservable};
use shadowlab_core::rng::stream_rng;

fn observable(n: usize, coeffs: &[f64]) -> PauliObservable {
    PauliObservable::from_terms(n, PauliLabel::all(n).zip(coeffs.iter().copied())).unwrap()
}

fn distribution(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_is_associative(a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        let (a, b, c) = (PauliLabel::from_index(3, a), PauliLabel::from_index(3, b), PauliLabel::from_index(3, c));
        let (k1, ab) = a.mul_phase(&b);
        let (k2, ab_c) = ab.mul_phase(&c);
        let (k3, bc) = b.mul_phase(&c);
        let (k4, a_bc) = a.mul_phase(&bc);
        prop_assert_eq!(ab_c, a_bc);
        prop_assert_eq!((k1 + k2) % 4, (k3 + k4) % 4);
    }

    #[test]
    fn commutation_matches_phase(a in 0usize..256, b in 0usize..256) {
        let (a, b) = (PauliLabel::from_index(4, a), PauliLabel::from_index(4, b));
        let (k_ab, _) = a.mul_phase(&b);
        let (k_ba, _) = b.mul_phase(&a);
        prop_assert_eq!(a.commutes(&b).unwrap(), k_ab == k_ba);
    }

    #[test]
    fn stabilizer_norm_is_multiplicative(
        x in prop::collection::vec(-1.0f64..1.0, 4),
        y in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let (a, b) = (observable(1, &x), observable(2, &y));
        let ab = a.tensor(&b).unwrap();
        let want = a.stabilizer_norm() * b.stabilizer_norm();
        prop_assert!((ab.stabilizer_norm() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn pauli_eigenvalue_gap_below_diamond_distance(
        p in prop::collection::vec(0.001f64..1.0, 16),
        q in prop::collection::vec(0.001f64..1.0, 16),
    ) {
        let a = PauliChannel::from_probs(2, distribution(&p)).unwrap();
        let b = PauliChannel::from_probs(2, distribution(&q)).unwrap();
        let gap = a.eigenvalues().iter().zip(b.eigenvalues()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= a.diamond_distance(&b).unwrap() + 1e-12);
    }

    #[test]
    fn noiseless_shadows_are_unbiased(
        coeffs in prop::collection::vec(-1.0f64..1.0, 16),
        bloch in prop::collection::vec(-0.57f64..0.57, 6),
        which in 0usize..3,
    ) {
        let ens = match which {
            0 => GateEnsemble::uniform_global(2).unwrap(),
            1 => GateEnsemble::local_clifford(2).unwrap(),
            _ => GateEnsemble::pauli_basis(2).unwrap(),
        };
        let rho = DensityState::product(vec![
            DensityState::bloch([bloch[0], bloch[1], bloch[2]]).unwrap().dense().unwrap().clone(),
            DensityState::bloch([bloch[3], bloch[4], bloch[5]]).unwrap().dense().unwrap().clone(),
        ]).unwrap();
        let o = observable(2, &coeffs);
        let report = noisy_frame(&ens, &NoiseModel::noiseless(2)).unwrap();
        let st = StateData::new(&rho).unwrap();
        prop_assert!(report.exact_bias(&o, &st).unwrap().abs() < 1e-12);
        prop_assert!((report.expectation(&o, &st).unwrap() - ideal_expectation(&o, &st).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bias_bounds_dominate_exact_bias(seed in 0u64..10_000, coeffs in prop::collection::vec(-1.0f64..1.0, 4)) {
        let ens = GateEnsemble::uniform_global(1).unwrap();
        let mut rng = stream_rng(seed, 0);
        let noise = NoiseModel::random_table(&ens, 2, &mut rng).unwrap();
        let rho = DensityState::bloch([0.3, -0.5, 0.6]).unwrap();
        let b = bias_budget(&observable(1, &coeffs), Some(&rho), &ens, &noise).unwrap();
        prop_assert!(b.violations(1, 1e-9).is_empty());
    }

    #[test]
    fn threshold_rule_matches_direct_comparison(fe in -1.5f64..2.5, fm in 0.01f64..1.0, sign in prop::bool::ANY) {
        let fm = if sign { fm } else { -fm };
        let p = &mitigation_map(&[fe], &[fm]).unwrap()[0];
        prop_assert_eq!(p.verdict == Verdict::Hurts, p.direct == Verdict::Hurts);
        prop_assert_eq!(p.verdict, classify(fe, fm).unwrap());
        prop_assert!((p.realised_f_eff - fe).abs() < 1e-9);
    }
}
