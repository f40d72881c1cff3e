use mist_core::channel::ChannelKind;
use mist_core::codes::CodeConfig;
use mist_core::eval::{decoder_by_name, evaluate, wilson_interval, EvalConfig, StopRule};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn uncoded_interval_covers_q1_for_most_seeds() {
    let q1 = 1.0 - Normal::standard().cdf(1.0);
    let code = CodeConfig::Uncoded { n: 100 }.build().unwrap();
    let decoder = decoder_by_name("uncoded", &code, None).unwrap();
    let covered = (0..100u64)
        .filter(|&seed| {
            let cfg = EvalConfig {
                channel: ChannelKind::Awgn,
                snr_grid: vec![0.0],
                stop: StopRule::fixed(200),
                seed,
                workers: 1,
                ..Default::default()
            };
            let r = evaluate(&[&*decoder], &code, &cfg).unwrap();
            let (lo, hi) = r.points[0].ber_interval();
            lo <= q1 && q1 <= hi
        })
        .count();
    assert!(covered >= 90, "Q(1) inside {covered} of 100 intervals");
}

proptest! {
    #[test]
    fn wilson_interval_is_ordered_and_contains_the_estimate(n in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as u64;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }
}
