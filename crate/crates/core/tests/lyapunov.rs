mod common;

use proptest::prelude::*;

use common::{random_log_steps, scalar_table_system};
use powinst::lyapunov::{
    canonical_lyapunov, verify_lyapunov_definition, verify_telescoped_lower_bound,
};
use powinst::{make_example, ExampleId, LogMagnitude, LyapunovSequence, System};

fn catalog(horizon: usize) -> Vec<System> {
    [
        ExampleId::Example25 { b: 2.0, c: 2.0 },
        ExampleId::Example25 { b: 3.0, c: 0.5 },
        ExampleId::Example28,
        ExampleId::Example29,
        ExampleId::Constant { c: 2.0 },
        ExampleId::Identity,
    ]
    .into_iter()
    .map(|id| System::new(make_example(id, horizon).unwrap()).unwrap())
    .collect()
}

#[test]
fn canonical_sequence_satisfies_definition_for_any_smaller_rate() {
    for s in catalog(25) {
        for d in [1.3, 2.0, 4.0] {
            let l = LyapunovSequence::canonical(d).unwrap();
            for i in 1..=5 {
                let a = 1.0 + (d - 1.0) * i as f64 / 6.0;
                assert!(verify_lyapunov_definition(&s, &l, a, 25).unwrap().passed());
                assert!(verify_telescoped_lower_bound(&s, &l, a, 25).unwrap().passed());
            }
        }
    }
}

#[test]
fn recurrence_agrees_with_term_by_term_sum() {
    for s in catalog(25) {
        for d in [1.1, 2.5] {
            for n in 0..=25 {
                // L(m) = d L(m-1) + ‖𝒜(m,n)x‖
                let rate = LogMagnitude::from_value(d);
                let mut rec = LogMagnitude::ZERO;
                for m in n..=25 {
                    rec = (rate * rec).add(s.state_norm(m, n, 0).unwrap());
                    let direct = canonical_lyapunov(&s, d, m, n, 0).unwrap();
                    let diff = (direct.ln() - rec.ln()).abs();
                    assert!(diff <= 1e-12 * (1.0 + direct.ln().abs()), "{diff}");
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn lower_chain_dominates_pure_growth(
        seed in 0u64..10_000,
        a in 1.01f64..4.0,
        n in 0usize..10,
        len in 0usize..10,
    ) {
        // Σ_{j=n}^{m} a^{m-j} ‖𝒜(j,n)x‖ >= a^{m-n} ‖x‖
        let s = scalar_table_system(&random_log_steps(seed, 20));
        let m = n + len;
        let chain = canonical_lyapunov(&s, a, m, n, 0).unwrap();
        let pure = LogMagnitude::from_log(len as f64 * a.ln());
        prop_assert!(chain.ln() >= pure.ln() - 1e-12);
    }
}
