mod common;

use common::*;
use ctxreward::analytics::{
    correlation_matrix, run_ablation, standardize_epochs, t_two_sided_p, two_sample_t,
    AblationItem, AblationVariant, CorrelationMethod, NamedSeries, StoredReviews,
};
use ctxreward::reward::RewardConfig;

fn epoch_series() -> NamedSeries {
    let text = read_text(fixture("epochs.csv"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').skip(1).collect();
    let mut series: NamedSeries = header.iter().map(|h| (h.to_string(), Vec::new())).collect();
    for line in lines {
        for (i, cell) in line.split(',').skip(1).enumerate() {
            series[i].1.push(cell.parse().unwrap());
        }
    }
    series
}

fn golden_json() -> serde_json::Value {
    serde_json::from_str(&read_text(golden("epoch_analytics.json"))).unwrap()
}

#[test]
fn standardized_epochs_match_golden() {
    let golden = golden_json();
    let z = standardize_epochs(&epoch_series()).unwrap();
    for (i, (_, values)) in z.iter().enumerate() {
        for (t, v) in values.iter().enumerate() {
            let expected = golden["standardized"][i][t].as_f64().unwrap();
            assert!((v - expected).abs() < 1e-9);
        }
    }
}

#[test]
fn correlation_matrix_matches_golden() {
    let golden = golden_json();
    let z = standardize_epochs(&epoch_series()).unwrap();
    let m = correlation_matrix(&z, CorrelationMethod::Pearson).unwrap();
    assert_eq!(serde_json::to_value(&m.names).unwrap(), golden["names"]);
    for i in 0..m.names.len() {
        for j in 0..m.names.len() {
            let expected = golden["pearson"][i][j].as_f64().unwrap();
            assert!((m.values[i][j].unwrap() - expected).abs() < 1e-9, "({i},{j})");
        }
    }
}

#[test]
fn t_test_matches_reference_values() {
    // Reference values from scipy.stats.ttest_ind(equal_var=True) and t.sf.
    let r = two_sample_t(&[1.2, 2.4, 3.1, 4.8, 5.0], &[0.3, 1.1, 2.2, 1.9]).unwrap();
    assert_eq!(r.df, 7);
    assert!((r.t - 2.1399506357345675).abs() < 1e-9);
    assert!((r.p - 0.0696393875909797).abs() < 1e-6);

    let a: Vec<f64> = (0..130).map(|i| 3.0 + (i as f64).sin()).collect();
    let b: Vec<f64> = (0..80).map(|i| 2.8 + (1.7 * i as f64).cos()).collect();
    let r = two_sample_t(&a, &b).unwrap();
    assert_eq!(r.df, 208);
    assert!((r.t - 2.0577010540848995).abs() < 1e-9);
    assert!((r.p - 0.040865902623490186).abs() < 1e-6);

    for (t, df, p) in [
        (3.07, 208.0, 0.0024260299562521076),
        (2.0, 10.0, 0.07338803477074039),
        (1.0, 5.0, 0.36321746764912255),
        (0.5, 30.0, 0.6207230048851273),
        (4.0, 3.0, 0.028008456010146156),
    ] {
        assert!((t_two_sided_p(t, df) - p).abs() < 1e-6, "t={t} df={df}");
    }
}

#[test]
fn ablation_full_dominates_none_on_fixture() {
    let corpus: Vec<AblationItem> = records("ablation_corpus.jsonl");
    let rows = run_ablation(&AblationVariant::ALL, &corpus, &StoredReviews, &RewardConfig::default(), &rule_backends()).unwrap();
    let full = &rows[0];
    let none = &rows[3];
    assert_eq!(full.variant, AblationVariant::Full);
    assert!(full.mean_fig >= none.mean_fig && full.mean_nov >= none.mean_nov);
    assert!(full.mean_fig > 0.0 && full.mean_nov > 0.0);
    assert_eq!((none.mean_fig, none.mean_nov), (0.0, 0.0));
    assert_eq!(rows[1].mean_fig, full.mean_fig);
    assert_eq!(rows[1].mean_nov, 0.0);
    assert_eq!(rows[2].mean_nov, full.mean_nov);
    // Quality does not depend on contexts.
    assert!(rows.iter().all(|r| r.mean_quality == full.mean_quality));
    let again = run_ablation(&AblationVariant::ALL, &corpus, &StoredReviews, &RewardConfig::default(), &rule_backends()).unwrap();
    assert_eq!(again, rows);
}
