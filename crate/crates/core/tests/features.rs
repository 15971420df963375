//! Feature construction from transaction logs: worked examples, level
//! isolation, leakage guards, and normalization.

use renewal_core::features::*;

fn tx(subject: &str, process: &str, t: u32, value: f64) -> Transaction {
    Transaction::new(subject.into(), process.into(), t, value, 1).unwrap()
}

fn chan(series: &FeatureSeries, t: u32, c: usize) -> f64 {
    series.row(t as usize - 1)[c]
}

// ---------------------------------------------------------------------------
// construction and log plumbing
// ---------------------------------------------------------------------------

#[test]
fn transaction_validation() {
    assert!(Transaction::new("".into(), "p".into(), 1, 1.0, 1).is_err());
    assert!(Transaction::new("s".into(), "".into(), 1, 1.0, 1).is_err());
    assert!(Transaction::new("s".into(), "p".into(), 0, 1.0, 1).is_err());
    assert!(Transaction::new("s".into(), "p".into(), 1, -1.0, 1).is_err());
    assert!(Transaction::new("s".into(), "p".into(), 1, f64::NAN, 1).is_err());
    assert!(Transaction::new("s".into(), "p".into(), 1, 0.0, 0).is_err());
    assert!(Transaction::new("s".into(), "p".into(), 1, 0.0, 3).is_ok());
}

#[test]
fn log_lists_sorted_unique_ids() {
    let log = TransactionLog::new(vec![
        tx("bob", "soda", 9, 1.0),
        tx("alice", "beer", 2, 1.0),
        tx("bob", "beer", 3, 1.0),
        tx("alice", "soda", 80, 1.0),
    ]);
    assert_eq!(log.subject_ids(), vec!["alice".to_string(), "bob".to_string()]);
    // Process ids only count records inside the window.
    assert_eq!(log.process_ids(10), vec!["beer".to_string(), "soda".to_string()]);
    assert_eq!(log.process_ids(2), vec!["beer".to_string()]);
}

#[test]
fn channel_layout() {
    assert_eq!(channel_count(1), 11);
    assert_eq!(channel_count(2), 16);
    assert_eq!(channel_count(4), 26);
    assert_eq!(SHARED_CHANNELS, 6);
    assert_eq!(PER_PROCESS_CHANNELS, 5);
}

// ---------------------------------------------------------------------------
// worked examples
// ---------------------------------------------------------------------------

#[test]
fn single_purchase_recency_frequency_monetary() {
    let log = TransactionLog::new(vec![tx("s", "p", 3, 10.0)]);
    let f = build_features(&log, "s", &["p".to_string()], 6).unwrap();
    assert_eq!(f.steps, 6);
    assert_eq!(f.channels, 11);

    // Overall level (channels 0..3).
    assert_eq!(chan(&f, 3, 0), 0.0); // recency at the purchase step
    assert_eq!(chan(&f, 5, 0), 2.0);
    assert_eq!(chan(&f, 2, 0), 2.0); // before any purchase: elapsed window
    assert_eq!(chan(&f, 5, 1), 0.0); // frequency counts repeats only
    assert_eq!(chan(&f, 2, 2), 0.0);
    assert_eq!(chan(&f, 3, 2), 10.0);
    assert_eq!(chan(&f, 6, 2), 10.0);

    // Per-process level (base 6): recency, frequency, monetary, pch,
    // log-recency.
    assert_eq!(chan(&f, 3, 6), 0.0);
    assert_eq!(chan(&f, 5, 6), 2.0);
    assert_eq!(chan(&f, 5, 7), 0.0);
    assert_eq!(chan(&f, 5, 8), 10.0);
    assert_eq!(chan(&f, 2, 9), 0.0);
    assert_eq!(chan(&f, 3, 9), 1.0);
    assert_eq!(chan(&f, 6, 9), 1.0);
    assert_eq!(chan(&f, 3, 10), 0.0);
    assert!((chan(&f, 5, 10) - 3.0f64.ln()).abs() < 1e-15);
}

#[test]
fn repeat_purchases_bump_frequency() {
    let log = TransactionLog::new(vec![
        tx("s", "p", 2, 4.0),
        tx("s", "p", 5, 6.0),
        tx("s", "p", 5, 1.0), // same step: one occasion
        tx("s", "p", 7, 2.0),
    ]);
    let f = build_features(&log, "s", &["p".to_string()], 8).unwrap();
    assert_eq!(chan(&f, 2, 1), 0.0);
    assert_eq!(chan(&f, 5, 1), 1.0); // distinct steps {2,5} minus one
    assert_eq!(chan(&f, 8, 1), 2.0);
    assert_eq!(chan(&f, 5, 2), 11.0); // cumulative spend folds both rows
    assert_eq!(chan(&f, 8, 2), 13.0);
    // Frequency and monetary never decrease.
    for c in [1usize, 2, 7, 8] {
        for t in 2..=8 {
            assert!(chan(&f, t, c) >= chan(&f, t - 1, c), "channel {c} dipped at {t}");
        }
    }
}

#[test]
fn no_purchases_in_window_leaves_indicators_cold() {
    // The subject exists but only transacts after the window closes.
    let log = TransactionLog::new(vec![tx("s", "p", 9, 5.0)]);
    let f = build_features(&log, "s", &["p".to_string()], 4).unwrap();
    for t in 1..=4 {
        assert_eq!(chan(&f, t, 9), 0.0); // pch stays false
        assert_eq!(chan(&f, t, 1), 0.0);
        assert_eq!(chan(&f, t, 2), 0.0);
        assert_eq!(chan(&f, t, 0), t as f64); // recency = elapsed window
    }
}

#[test]
fn unknown_subject_is_an_error() {
    let log = TransactionLog::new(vec![tx("s", "p", 1, 1.0)]);
    assert!(build_features(&log, "ghost", &["p".to_string()], 4).is_err());
}

#[test]
fn two_processes_stay_isolated() {
    let log = TransactionLog::new(vec![tx("s", "a", 2, 7.0)]);
    let procs = vec!["a".to_string(), "b".to_string()];
    let f = build_features(&log, "s", &procs, 4).unwrap();

    // Product a (base 6) saw the purchase.
    assert_eq!(chan(&f, 2, 6), 0.0);
    assert_eq!(chan(&f, 4, 8), 7.0);
    assert_eq!(chan(&f, 4, 9), 1.0);
    // Product b (base 11) never did.
    assert_eq!(chan(&f, 4, 11), 4.0); // recency = elapsed window
    assert_eq!(chan(&f, 4, 12), 0.0);
    assert_eq!(chan(&f, 4, 13), 0.0);
    assert_eq!(chan(&f, 4, 14), 0.0);
    // Shared basket level reflects a.
    assert_eq!(chan(&f, 2, 3), 0.0);
    assert_eq!(chan(&f, 4, 5), 7.0);
}

#[test]
fn off_basket_purchases_count_overall_but_not_basket() {
    let log = TransactionLog::new(vec![
        tx("s", "modeled", 2, 1.0),
        tx("s", "other", 4, 9.0),
    ]);
    let f = build_features(&log, "s", &["modeled".to_string()], 6).unwrap();
    // Overall monetary includes the off-basket spend.
    assert_eq!(chan(&f, 6, 2), 10.0);
    assert_eq!(chan(&f, 4, 0), 0.0);
    // Basket level ignores it.
    assert_eq!(chan(&f, 6, 5), 1.0);
    assert_eq!(chan(&f, 4, 3), 2.0);
    // Modeled process untouched by the other purchase.
    assert_eq!(chan(&f, 6, 8), 1.0);
}

#[test]
fn future_records_never_leak_into_the_window() {
    let base = vec![tx("s", "p", 2, 3.0), tx("s", "p", 6, 4.0)];
    let mut with_future = base.clone();
    with_future.push(tx("s", "p", 30, 100.0));
    with_future.push(tx("s", "q", 25, 50.0));

    let procs = vec!["p".to_string()];
    let a = build_features(&TransactionLog::new(base), "s", &procs, 8).unwrap();
    let b = build_features(&TransactionLog::new(with_future), "s", &procs, 8).unwrap();
    assert_eq!(a, b);
}

// ---------------------------------------------------------------------------
// basket score
// ---------------------------------------------------------------------------

#[test]
fn basket_score_examples() {
    let s = basket_score(4.78, 44000).unwrap();
    assert!((s - 51.1074966836639).abs() < 1e-12);
    assert_eq!(basket_score(3.0, 1).unwrap(), 0.0);
    assert_eq!(basket_score(0.0, 500).unwrap(), 0.0);
    assert!(basket_score(1.0, 0).is_err());
    assert!(basket_score(-0.5, 10).is_err());
    assert!(basket_score(f64::NAN, 10).is_err());
}

#[test]
fn basket_score_orders_by_both_factors() {
    assert!(basket_score(5.0, 100).unwrap() > basket_score(4.0, 100).unwrap());
    assert!(basket_score(5.0, 1000).unwrap() > basket_score(5.0, 100).unwrap());
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

#[test]
fn z_score_hand_computed() {
    let mut s = FeatureSeries { steps: 3, channels: 1, data: vec![1.0, 2.0, 3.0] };
    let stats = compute_stats(std::slice::from_ref(&s)).unwrap();
    assert_eq!(stats.mean, vec![2.0]);
    // Population standard deviation: sqrt(2/3).
    assert!((stats.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    normalize_features(&mut s, &stats).unwrap();
    assert!((s.data[0] + 1.224744871391589).abs() < 1e-12);
    assert!(s.data[1].abs() < 1e-15);
    assert!((s.data[2] - 1.224744871391589).abs() < 1e-12);
}

#[test]
fn zero_variance_channels_become_zero() {
    let mut s = FeatureSeries { steps: 2, channels: 2, data: vec![5.0, 1.0, 5.0, 3.0] };
    let stats = compute_stats(std::slice::from_ref(&s)).unwrap();
    assert_eq!(stats.std[0], 0.0);
    normalize_features(&mut s, &stats).unwrap();
    assert_eq!(s.data[0], 0.0);
    assert_eq!(s.data[2], 0.0);
    assert_ne!(s.data[1], s.data[3]);
}

#[test]
fn stats_pool_across_subjects_and_steps() {
    let a = FeatureSeries { steps: 2, channels: 1, data: vec![1.0, 3.0] };
    let b = FeatureSeries { steps: 2, channels: 1, data: vec![5.0, 7.0] };
    let stats = compute_stats(&[a, b]).unwrap();
    assert_eq!(stats.mean, vec![4.0]);
    // Population variance of {1,3,5,7} is 5.
    assert!((stats.std[0] - 5.0f64.sqrt()).abs() < 1e-15);
}

#[test]
fn normalized_features_have_zero_mean_unit_variance() {
    let log = TransactionLog::new(vec![
        tx("s1", "p", 2, 3.0),
        tx("s1", "p", 7, 1.0),
        tx("s2", "p", 4, 9.0),
    ]);
    let procs = vec!["p".to_string()];
    let mut series = vec![
        build_features(&log, "s1", &procs, 10).unwrap(),
        build_features(&log, "s2", &procs, 10).unwrap(),
    ];
    let stats = compute_stats(&series).unwrap();
    for s in &mut series {
        normalize_features(s, &stats).unwrap();
    }
    let channels = series[0].channels;
    for c in 0..channels {
        let vals: Vec<f64> = series
            .iter()
            .flat_map(|s| (0..s.steps).map(move |t| s.row(t)[c]))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-12, "channel {c} mean {mean}");
        assert!(var < 1e-12 || (var - 1.0).abs() < 1e-9, "channel {c} variance {var}");
    }
}

#[test]
fn stats_validation() {
    assert!(compute_stats(&[]).is_err());
    let a = FeatureSeries { steps: 1, channels: 1, data: vec![1.0] };
    let b = FeatureSeries { steps: 1, channels: 2, data: vec![1.0, 2.0] };
    assert!(compute_stats(&[a.clone(), b]).is_err());
    let mut c = FeatureSeries { steps: 1, channels: 2, data: vec![1.0, 2.0] };
    let stats = compute_stats(std::slice::from_ref(&a)).unwrap();
    assert!(normalize_features(&mut c, &stats).is_err());
}
