mod common;

use proptest::prelude::*;

use common::{random_log_steps, scalar_table_system, ScalarOracle};
use powinst::verify::{
    npis_to_phi_tau, phi_tau_to_npis, refute_uniform, sum_to_certificate, verify_certificate,
    verify_phi_tau, verify_sum_criterion, verify_upis_phi,
};
use powinst::{
    make_example, Certificate, Error, ExampleId, SequenceSpec, SumBound, SumCriterion, System,
    Verdict, Witness,
};

fn example(id: ExampleId, horizon: usize) -> System {
    System::new(make_example(id, horizon).unwrap()).unwrap()
}

fn catalog(horizon: usize) -> Vec<System> {
    vec![
        example(ExampleId::Example25 { b: 2.0, c: 2.0 }, horizon),
        example(ExampleId::Example25 { b: 2.0, c: 1.0 }, horizon),
        example(ExampleId::Example25 { b: 3.0, c: 1.5 }, horizon),
        example(ExampleId::Example28, horizon),
        example(ExampleId::Example29, horizon),
        example(ExampleId::Constant { c: 2.0 }, horizon),
        example(ExampleId::Identity, horizon),
    ]
}

#[test]
fn example25_npis_passes_on_forty() {
    let s = example(ExampleId::Example25 { b: 2.0, c: 2.0 }, 40);
    let cert = Certificate::Npis {
        big_n: SequenceSpec::geometric(2.0),
        r: 0.25,
    };
    let rep = verify_certificate(&s, &cert, 40).unwrap();
    assert!(rep.passed());
    assert!(rep.worst_margin >= -1e-9);
    // 40 * 41 / 2 + 41 pairs after collapsing p
    assert_eq!(rep.triples_checked, 861);
}

#[test]
fn example28_refutation_first_witness() {
    // (n+2)/(m+2) <= 0.9^{m-n} first fails at m = 9, n = 7: 9/11 > 0.81
    let s = example(ExampleId::Example28, 40);
    let found = refute_uniform(&s, &[1.0], &[0.9], 40).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].witness.indices(), (9, 7, 0));
}

#[test]
fn example25_refutation_first_witness() {
    // at n = 0 and odd m the gain is 1, against 1e6 * 2^{-m}: first odd m with 2^m > 1e6
    let s = example(ExampleId::Example25 { b: 2.0, c: 1.0 }, 60);
    let found = refute_uniform(&s, &[1e6], &[0.5], 60).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].witness.indices(), (21, 0, 0));
}

#[test]
fn upis_phi_on_example28_passes() {
    let s = example(ExampleId::Example28, 40);
    let phi = SequenceSpec::table((0..=40).map(|m| (1.0 + m as f64 / 100.0).ln()).collect());
    let rep = verify_upis_phi(&s, &phi, 40).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
}

#[test]
fn sum_minimal_bound_is_at_least_one() {
    for s in catalog(20) {
        let crit = SumCriterion {
            p: 1.5,
            d: 1.7,
            bound: SumBound::Upis { big_d: 1.0 },
        };
        let rep = verify_sum_criterion(&s, &crit, 20).unwrap();
        for b in rep.min_bound {
            assert!(b.ln() >= -1e-12);
        }
    }
}

#[test]
fn invalid_parameters_are_rejected_before_sweeping() {
    let s = example(ExampleId::Identity, 10);
    for cert in [
        Certificate::Upis { big_n: 0.5, r: 0.5 },
        Certificate::Upis { big_n: 2.0, r: 1.0 },
        Certificate::Pis {
            big_n: 1.0,
            r: 0.5,
            s: 0.9,
        },
        Certificate::Spis {
            big_n: 1.0,
            r: 0.5,
            s: 2.0,
        },
    ] {
        assert!(matches!(
            verify_certificate(&s, &cert, 10),
            Err(Error::InvalidParameter { .. })
        ));
    }
}

#[test]
fn implication_lattice_on_catalog() {
    let window = 20;
    for s in catalog(window) {
        for &(big_n, r, sv) in &[(1.0, 0.5, 1.5), (10.0, 0.25, 2.0), (3.0, 0.9, 1.05)] {
            let upis = verify_certificate(&s, &Certificate::Upis { big_n, r }, window).unwrap();
            let npis = verify_certificate(
                &s,
                &Certificate::Npis {
                    big_n: SequenceSpec::constant(big_n),
                    r,
                },
                window,
            )
            .unwrap();
            if upis.passed() {
                assert!(npis.passed());
            }
            let spis_cert = Certificate::Spis { big_n, r, s: sv };
            let pis_cert = Certificate::Pis { big_n, r, s: sv };
            let pis = verify_certificate(&s, &pis_cert, window).unwrap();
            if sv * r < 1.0 && verify_certificate(&s, &spis_cert, window).unwrap().passed() {
                assert!(pis.passed());
            }
            if pis.passed() {
                let npis = Certificate::Npis {
                    big_n: SequenceSpec::geometric(sv).scaled(big_n),
                    r,
                };
                assert!(verify_certificate(&s, &npis, window).unwrap().passed());
            }
        }
    }
}

#[test]
fn converter_round_trips_on_catalog() {
    let window = 20;
    let certs = [
        Certificate::Npis {
            big_n: SequenceSpec::geometric(2.0),
            r: 0.25,
        },
        Certificate::Npis {
            big_n: SequenceSpec::exp_linear(3.0),
            r: (-2f64).exp(),
        },
        Certificate::Npis {
            big_n: SequenceSpec::constant(1.0),
            r: 0.5,
        },
        Certificate::Npis {
            big_n: SequenceSpec::geometric(2.0),
            r: 0.5,
        },
    ];
    let mut exercised = 0;
    for s in catalog(window) {
        for cert in &certs {
            if !verify_certificate(&s, cert, window).unwrap().passed() {
                continue;
            }
            let (phi, tau) = npis_to_phi_tau(cert).unwrap();
            assert!(verify_phi_tau(&s, &phi, &tau, window).unwrap().passed());
            let back = phi_tau_to_npis(&phi, &tau, window).unwrap();
            assert!(verify_certificate(&s, &back, window).unwrap().passed());
            exercised += 1;
        }
        let crit = SumCriterion {
            p: 1.0,
            d: 2.0,
            bound: SumBound::Npis {
                theta: SequenceSpec::geometric(2.0).scaled(2.0),
            },
        };
        if verify_sum_criterion(&s, &crit, window).unwrap().report.passed() {
            let cert = sum_to_certificate(&crit).unwrap();
            assert!(verify_certificate(&s, &cert, window).unwrap().passed());
        }
    }
    assert!(exercised >= 4);
}

fn first_witness(s: &System, cert: &Certificate, window: usize) -> Option<Witness> {
    verify_certificate(s, cert, window).unwrap().witness
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn failing_windows_keep_their_witness(
        seed in 0u64..1000,
        big_n in 1.0f64..10.0,
        r in 0.1f64..0.95,
        window in 4usize..14,
    ) {
        let s = scalar_table_system(&random_log_steps(seed, 20));
        let cert = Certificate::Upis { big_n, r };
        if let Some(w) = first_witness(&s, &cert, window) {
            for larger in window..=20 {
                prop_assert_eq!(first_witness(&s, &cert, larger), Some(w));
            }
        }
    }

    #[test]
    fn sweep_matches_brute_force(
        seed in 0u64..10_000,
        big_n in 1.0f64..30.0,
        r in 0.1f64..0.99,
        s_factor in 1.0f64..3.0,
    ) {
        let steps = random_log_steps(seed, 12);
        let s = scalar_table_system(&steps);
        let oracle = ScalarOracle::new(&steps);
        let cert = Certificate::Pis { big_n, r, s: s_factor };
        let want = oracle.triple_witness(12, |m, n| {
            big_n * r.powi((m - n) as i32) * s_factor.powi(n as i32)
        });
        prop_assert_eq!(first_witness(&s, &cert, 12).map(|w| w.indices()), want);
    }
}
