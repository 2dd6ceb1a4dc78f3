//! Experiment analytics: per-epoch standardization, cross-metric
//! correlation, pooled two-sample t-tests, domain summaries and the context
//! ablation harness.

mod ablation;

pub use ablation::{
    run_ablation, AblationItem, AblationRow, AblationVariant, ReviewSource, StoredReviews,
    REFERENCE_FIGURE_MEANS, REFERENCE_NOVELTY_MEANS,
};

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::model::Domain;
use crate::records::Record;
use crate::reward::RewardError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("series `{metric}` has {found} values, expected {expected}")]
    LengthMismatch {
        metric: String,
        expected: usize,
        found: usize,
    },
    #[error("need at least {needed} values, got {found}")]
    TooShort { needed: usize, found: usize },
    #[error("both groups are constant and equal")]
    DegenerateGroups,
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("ablation corpus is empty")]
    EmptyCorpus,
    #[error("ablation item `{0}` has no {1} context")]
    MissingContext(String, &'static str),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// Named metric series, in presentation order.
pub type NamedSeries = Vec<(String, Vec<f64>)>;

fn check_series(series: &[(String, Vec<f64>)], min_len: usize) -> Result<usize, AnalyticsError> {
    let Some((_, first)) = series.first() else {
        return Ok(0);
    };
    let expected = first.len();
    for (metric, values) in series {
        if values.len() != expected {
            return Err(AnalyticsError::LengthMismatch {
                metric: metric.clone(),
                expected,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AnalyticsError::NonFinite);
        }
    }
    if expected < min_len {
        return Err(AnalyticsError::TooShort {
            needed: min_len,
            found: expected,
        });
    }
    Ok(expected)
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Z-scores with the population standard deviation; a constant series maps
/// to zeros.
pub fn z_scores(values: &[f64]) -> Vec<f64> {
    if is_constant(values) {
        return vec![0.0; values.len()];
    }
    let m = mean(values);
    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
    let std = (centered.iter().map(|c| c * c).sum::<f64>() / values.len() as f64).sqrt();
    centered.into_iter().map(|c| c / std).collect()
}

/// Standardizes each metric's per-epoch means independently.
pub fn standardize_epochs(series: &[(String, Vec<f64>)]) -> Result<NamedSeries, AnalyticsError> {
    check_series(series, 2)?;
    Ok(series
        .iter()
        .map(|(name, values)| (name.clone(), z_scores(values)))
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    Spearman,
}

/// Symmetric correlation matrix; `None` marks pairs involving a constant
/// series, where the correlation is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub method: CorrelationMethod,
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Record for CorrelationMatrix {
    const SCHEMA: &'static str = "correlation_matrix/v1";
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Correlations between every pair of series, computed as the mean product
/// of z-scores (ranks first, for Spearman).
pub fn correlation_matrix(
    series: &[(String, Vec<f64>)],
    method: CorrelationMethod,
) -> Result<CorrelationMatrix, AnalyticsError> {
    let len = check_series(series, 3)?;
    let prepared: Vec<Option<Vec<f64>>> = series
        .iter()
        .map(|(_, values)| {
            let values = match method {
                CorrelationMethod::Pearson => values.clone(),
                CorrelationMethod::Spearman => average_ranks(values),
            };
            (!is_constant(&values)).then(|| z_scores(&values))
        })
        .collect();
    let k = series.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        let Some(zi) = &prepared[i] else { continue };
        values[i][i] = Some(1.0);
        for j in i + 1..k {
            let Some(zj) = &prepared[j] else { continue };
            let r = zi.iter().zip(zj).map(|(a, b)| a * b).sum::<f64>() / len as f64;
            let r = r.clamp(-1.0, 1.0);
            values[i][j] = Some(r);
            values[j][i] = Some(r);
        }
    }
    Ok(CorrelationMatrix {
        method,
        names: series.iter().map(|(name, _)| name.clone()).collect(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: u64,
    /// Two-sided.
    pub p: f64,
}

impl Record for TTest {
    const SCHEMA: &'static str = "t_test/v1";
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x.clamp(0.0, 1.0))
}

/// Student's two-sample t-test with pooled variance.
pub fn two_sample_t(a: &[f64], b: &[f64]) -> Result<TTest, AnalyticsError> {
    for group in [a, b] {
        if group.len() < 2 {
            return Err(AnalyticsError::TooShort {
                needed: 2,
                found: group.len(),
            });
        }
        if group.iter().any(|v| !v.is_finite()) {
            return Err(AnalyticsError::NonFinite);
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = (a.len() + b.len() - 2) as u64;
    let (ma, mb) = (mean(a), mean(b));
    let ss = |g: &[f64], m: f64| g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let pooled = (ss(a, ma) + ss(b, mb)) / df as f64;
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let diff = ma - mb;
    if se == 0.0 {
        if diff == 0.0 {
            return Err(AnalyticsError::DegenerateGroups);
        }
        return Ok(TTest {
            t: diff.signum() * f64::INFINITY,
            df,
            p: 0.0,
        });
    }
    let t = diff / se;
    Ok(TTest {
        t,
        df,
        p: t_two_sided_p(t, df as f64),
    })
}

/// Five-number summary plus mean, for box plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub domain: Domain,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl Record for BoxSummary {
    const SCHEMA: &'static str = "box_summary/v1";
}

/// Quantile with linear interpolation between closest ranks.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Per-domain box-plot data, in the order of [`Domain::ALL`]; domains with
/// no scores are omitted.
pub fn domain_box_data(scores: &[(Domain, f64)]) -> Vec<BoxSummary> {
    Domain::ALL
        .iter()
        .filter_map(|&domain| {
            let mut values: Vec<f64> = scores
                .iter()
                .filter(|(d, _)| *d == domain)
                .map(|(_, v)| *v)
                .collect();
            if values.is_empty() {
                return None;
            }
            values.sort_by(f64::total_cmp);
            Some(BoxSummary {
                domain,
                n: values.len(),
                min: values[0],
                q1: quantile(&values, 0.25),
                median: quantile(&values, 0.5),
                q3: quantile(&values, 0.75),
                max: values[values.len() - 1],
                mean: mean(&values),
            })
        })
        .collect()
}

/// Pooled t-test of the scores of domain `a` against domain `b`.
pub fn domain_t_test(
    scores: &[(Domain, f64)],
    a: Domain,
    b: Domain,
) -> Result<TTest, AnalyticsError> {
    let pick = |domain: Domain| -> Vec<f64> {
        scores
            .iter()
            .filter(|(d, _)| *d == domain)
            .map(|(_, v)| *v)
            .collect()
    };
    two_sample_t(&pick(a), &pick(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn named(pairs: &[(&str, &[f64])]) -> NamedSeries {
        pairs.iter().map(|(n, v)| (n.to_string(), v.to_vec())).collect()
    }

    #[test]
    fn standardization_examples() {
        let out = standardize_epochs(&named(&[("a", &[1.0, 2.0, 3.0]), ("b", &[5.0, 5.0, 5.0])])).unwrap();
        let expected = 1.5f64.sqrt();
        assert!((out[0].1[0] + expected).abs() < 1e-12);
        assert_eq!(out[0].1[1], 0.0);
        assert!((out[0].1[2] - expected).abs() < 1e-12);
        assert_eq!(out[1].1, [0.0; 3]);
        assert!(matches!(
            standardize_epochs(&named(&[("a", &[1.0, 2.0]), ("b", &[1.0])])),
            Err(AnalyticsError::LengthMismatch { .. })
        ));
        assert!(matches!(standardize_epochs(&named(&[("a", &[1.0])])), Err(AnalyticsError::TooShort { .. })));
        assert_eq!(z_scores(&[0.1, 0.1, 0.1]), [0.0; 3]);
    }

    #[test]
    fn correlation_examples() {
        let m = correlation_matrix(
            &named(&[("x", &[1.0, 3.0, 2.0, 5.0]), ("neg", &[-1.0, -3.0, -2.0, -5.0]), ("flat", &[2.0; 4])]),
            CorrelationMethod::Pearson,
        )
        .unwrap();
        assert_eq!(m.values[0][0], Some(1.0));
        assert!((m.values[0][1].unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(m.values[0][2], None);
        assert_eq!(m.values[2][2], None);
        assert!(matches!(
            correlation_matrix(&named(&[("x", &[1.0, 2.0])]), CorrelationMethod::Pearson),
            Err(AnalyticsError::TooShort { .. })
        ));
    }

    #[test]
    fn spearman_uses_average_ranks() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), [2.0, 3.5, 3.5, 1.0]);
        let m = correlation_matrix(
            &named(&[("x", &[1.0, 2.0, 3.0, 4.0]), ("y", &[1.0, 8.0, 27.0, 64.0])]),
            CorrelationMethod::Spearman,
        )
        .unwrap();
        assert!((m.values[0][1].unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t_test_closed_form_cdfs() {
        // df = 1: two-sided p = 1 - 2 atan(|t|) / pi; df = 2: 1 - |t| / sqrt(2 + t^2).
        for t in [0.1, 0.7, 1.0, 2.5, 10.0] {
            let p1 = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            let p2 = 1.0 - t / (2.0 + t * t).sqrt();
            assert!((t_two_sided_p(t, 1.0) - p1).abs() < 1e-12, "df1 t={t}");
            assert!((t_two_sided_p(t, 2.0) - p2).abs() < 1e-12, "df2 t={t}");
        }
        assert_eq!(t_two_sided_p(0.0, 7.0), 1.0);
    }

    #[test]
    fn t_test_examples() {
        let a = [1.0, 2.0, 4.0];
        let r = two_sample_t(&a, &a).unwrap();
        assert_eq!((r.t, r.df, r.p), (0.0, 4, 1.0));
        let r = two_sample_t(&vec![1.0; 130], &[vec![0.0; 79], vec![1.0]].concat()).unwrap();
        assert_eq!(r.df, 208);
        assert!(matches!(two_sample_t(&[2.0, 2.0], &[2.0, 2.0]), Err(AnalyticsError::DegenerateGroups)));
        let r = two_sample_t(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!((r.t, r.p), (f64::INFINITY, 0.0));
        assert!(matches!(two_sample_t(&[1.0], &[1.0, 2.0]), Err(AnalyticsError::TooShort { .. })));
    }

    #[test]
    fn box_summary_quantiles() {
        let scores: Vec<(Domain, f64)> = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&v| (Domain::BiologicalSciences, v))
            .chain([(Domain::ComputerScience, 7.0)])
            .collect();
        let boxes = domain_box_data(&scores);
        assert_eq!(boxes.len(), 2);
        assert_eq!(boxes[0].domain, Domain::ComputerScience);
        let bio = &boxes[1];
        assert_eq!((bio.min, bio.q1, bio.median, bio.q3, bio.max, bio.mean), (1.0, 2.0, 3.0, 4.0, 5.0, 3.0));
    }

    proptest! {
        #[test]
        fn negating_groups_flips_t(a in proptest::collection::vec(-100.0f64..100.0, 2..20),
                                   b in proptest::collection::vec(-100.0f64..100.0, 2..20)) {
            let r = two_sample_t(&a, &b).unwrap();
            let na: Vec<f64> = a.iter().map(|v| -v).collect();
            let nb: Vec<f64> = b.iter().map(|v| -v).collect();
            let s = two_sample_t(&na, &nb).unwrap();
            prop_assert!((r.t + s.t).abs() <= 1e-9 * (1.0 + r.t.abs()));
            prop_assert!((r.p - s.p).abs() <= 1e-12);
            prop_assert_eq!(r.df, (a.len() + b.len() - 2) as u64);
        }
    }
}
