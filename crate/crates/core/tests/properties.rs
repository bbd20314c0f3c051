use proptest::prelude::*;
use ristap_core::comm::{psk_detect, psk_point};
use ristap_core::linalg::{from_real, to_real, CVec, C64};
use ristap_core::waveform::{project_modulus, psi_update};

fn cvec(n: usize) -> impl Strategy<Value = CVec> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n)
        .prop_map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b))))
}

proptest! {
    #[test]
    fn psi_has_exact_modulus(x in cvec(6), l in cvec(6), rho in 0.01f64..100.0, b in 0.01f64..10.0) {
        let psi = psi_update(&x, &l, rho, b);
        for z in psi.iter() {
            prop_assert!((z.norm() - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn projection_is_idempotent(x in cvec(5), b in 0.1f64..5.0) {
        let p = project_modulus(&x, b);
        prop_assert!((&project_modulus(&p, b) - &p).norm() <= 1e-12 * p.norm());
    }

    #[test]
    fn real_embedding_round_trips(x in cvec(7)) {
        prop_assert_eq!(from_real(&to_real(&x)), x);
    }

    #[test]
    fn psk_detection_inverts_mapping(q in 0usize..16, e in prop::sample::select(vec![4usize, 8, 16]), r in 0.01f64..10.0) {
        let q = q % e;
        prop_assert_eq!(psk_detect(psk_point(q, e) * r, e), q);
    }
}
