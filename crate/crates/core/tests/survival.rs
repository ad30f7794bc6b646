mod oracles;

use oracles::{km_oracle, type7};
use proptest::prelude::*;
use rdcensor_core::simulation::{generate, DgpConfig};
use rdcensor_core::survival::{km_censoring_survival, nelson_aalen_censoring};
use rdcensor_core::{rng, ObservedRecord, ObservedSample, StepFunction};

fn sample(recs: &[(f64, bool)]) -> ObservedSample {
    ObservedSample::new(
        recs.iter()
            .map(|&(t, d)| ObservedRecord::new(t, d, 0.0, false))
            .collect(),
    )
    .unwrap()
}

fn records_strategy() -> impl Strategy<Value = Vec<(f64, bool)>> {
    // Times on a coarse grid so ties between failures and censorings occur.
    prop::collection::vec(((1u32..40).prop_map(|k| k as f64 * 0.25), any::<bool>()), 1..60)
}

fn assert_survival_shape(g: &StepFunction) {
    assert_eq!(g.initial_value(), 1.0);
    let v = g.values();
    assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
    assert!(v.windows(2).all(|w| w[1] <= w[0]));
}

fn assert_hazard_shape(l: &StepFunction) {
    assert_eq!(l.initial_value(), 0.0);
    let v = l.values();
    assert!(v.iter().all(|&x| x >= 0.0));
    assert!(v.windows(2).all(|w| w[1] >= w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn km_and_na_invariants(recs in records_strategy(), q in prop_oneof![Just(1.0), Just(0.95), 0.5f64..1.0]) {
        let s = sample(&recs);
        let (g, l) = match (km_censoring_survival(&s, q), nelson_aalen_censoring(&s, q)) {
            (Ok(g), Ok(l)) => (g, l),
            (Err(a), Err(b)) => {
                prop_assert_eq!(a.kind(), "AllTruncated");
                prop_assert_eq!(b.kind(), "AllTruncated");
                return Ok(());
            }
            _ => panic!("the two fits disagree on success"),
        };
        assert_survival_shape(&g);
        assert_hazard_shape(&l);
        prop_assert_eq!(g.jump_times(), l.jump_times());

        let oracle = km_oracle(&recs, q);
        prop_assert_eq!(oracle.len(), g.jump_times().len());
        let mut prod = 1.0;
        for (k, &(s_k, g_k, dl_k)) in oracle.iter().enumerate() {
            prop_assert_eq!(g.jump_times()[k], s_k);
            prop_assert!((g.values()[k] - g_k).abs() < 1e-14);
            prop_assert!((l.jump_size(k) - dl_k).abs() < 1e-12);
            // Duality between the product-limit and cumulative-hazard fits.
            prod *= 1.0 - l.jump_size(k);
            prop_assert!((g.values()[k] - prod).abs() < 1e-12);
        }

        // Truncated records keep the curve positive through omega.
        let times: Vec<f64> = recs.iter().map(|r| r.0).collect();
        let omega = type7(&times, q);
        if times.iter().any(|&t| t > omega) {
            prop_assert!(g.eval(omega).unwrap() > 0.0);
        }
    }

    #[test]
    fn left_limits_match_off_jumps(recs in records_strategy(), t in 0.01f64..12.0) {
        let g = km_censoring_survival(&sample(&recs), 1.0).unwrap();
        if !g.jump_times().contains(&t) {
            prop_assert_eq!(g.eval(t).unwrap(), g.eval_left(t).unwrap());
        }
    }
}

#[test]
fn three_record_product_limit() {
    let s = sample(&[(1.0, true), (2.0, false), (3.0, true)]);
    let g = km_censoring_survival(&s, 1.0).unwrap();
    assert_eq!(g.eval(1.9).unwrap(), 1.0);
    assert_eq!(g.eval(2.0).unwrap(), 0.5);
    assert_eq!(g.eval_left(2.0).unwrap(), 1.0);
    assert_eq!(g.eval(10.0).unwrap(), 0.5);
    assert_eq!(g.eval(0.0).unwrap(), 1.0);
    let l = nelson_aalen_censoring(&s, 1.0).unwrap();
    assert_eq!(l.jump_times(), &[2.0]);
    assert_eq!(l.values(), &[0.5]);
}

#[test]
fn no_censoring_gives_flat_fits() {
    let s = sample(&[(1.0, true), (4.0, true), (2.5, true)]);
    let g = km_censoring_survival(&s, 1.0).unwrap();
    assert!(g.jump_times().is_empty());
    assert_eq!(g.eval(4.0).unwrap(), 1.0);
    assert_eq!(nelson_aalen_censoring(&s, 1.0).unwrap().eval(4.0).unwrap(), 0.0);
}

#[test]
fn single_censored_record() {
    let l = nelson_aalen_censoring(&sample(&[(5.0, false)]), 1.0).unwrap();
    assert_eq!(l.eval_left(5.0).unwrap(), 0.0);
    assert_eq!(l.eval(5.0).unwrap(), 1.0);
}

#[test]
fn negative_time_is_rejected() {
    let g = StepFunction::constant(1.0);
    assert_eq!(g.eval(-1.0).unwrap_err().kind(), "NegativeTime");
    assert_eq!(g.eval_left(-1.0).unwrap_err().kind(), "NegativeTime");
}

#[test]
fn uniform_censoring_is_recovered() {
    let cfg = DgpConfig::sharp(10_000, 3);
    let s = generate(&cfg, &mut rng::stream(3, 0)).unwrap();
    let g = km_censoring_survival(&s, 1.0).unwrap();
    let worst = (0..=80)
        .map(|k| k as f64 * 0.5)
        .map(|t| (g.eval(t).unwrap() - (1.0 - t / 50.0)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.03, "sup error {worst}");
}
