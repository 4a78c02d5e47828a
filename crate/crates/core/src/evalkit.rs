//! NDCG evaluation of ranked runs: per-query and mean NDCG@k, gain curves
//! over a cutoff sweep, percent improvement against a baseline, and the
//! cross-benchmark report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diagnose::{compare_profiles, DiversityMetrics, ProfileDiff};
use crate::retrieve::RankedList;

/// Error from evaluation.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no gold context recorded for query '{0}'")]
    MissingGold(String),
    #[error("gold context '{gold}' for query '{qid}' is not in the ranking universe")]
    GoldNotRanked { qid: String, gold: String },
    #[error("duplicate query '{0}' in run")]
    DuplicateQuery(String),
    #[error("run has no queries")]
    NoQueries,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("cutoffs must be non-empty and strictly increasing")]
    InvalidCutoffs,
    #[error("baseline model '{baseline}' has no run on benchmark '{benchmark}'")]
    MissingBaseline { baseline: String, benchmark: String },
    #[error("runs on benchmark '{benchmark}' rank different universes ({a} vs {b})")]
    UniverseMismatch {
        benchmark: String,
        a: usize,
        b: usize,
    },
}

/// One model's full rankings on one benchmark, with the gold context per
/// query. Rankings are expected to cover the whole context universe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRun {
    pub model_name: String,
    pub benchmark_name: String,
    pub rankings: Vec<RankedList>,
    pub gold: BTreeMap<String, String>,
}

impl EvalRun {
    /// Validates that every query has a gold context and that each gold is
    /// inside its ranking universe.
    pub fn new(
        model_name: impl Into<String>,
        benchmark_name: impl Into<String>,
        rankings: Vec<RankedList>,
        gold: BTreeMap<String, String>,
    ) -> Result<Self, EvalError> {
        let mut seen = std::collections::HashSet::new();
        for ranking in &rankings {
            if !seen.insert(ranking.qid.clone()) {
                return Err(EvalError::DuplicateQuery(ranking.qid.clone()));
            }
            let gold_id = gold
                .get(&ranking.qid)
                .ok_or_else(|| EvalError::MissingGold(ranking.qid.clone()))?;
            if !ranking.ranked.iter().any(|e| &e.id == gold_id) {
                return Err(EvalError::GoldNotRanked {
                    qid: ranking.qid.clone(),
                    gold: gold_id.clone(),
                });
            }
        }
        Ok(Self {
            model_name: model_name.into(),
            benchmark_name: benchmark_name.into(),
            rankings,
            gold,
        })
    }

    /// Size of the ranked universe (largest ranking length).
    pub fn universe_size(&self) -> usize {
        self.rankings.iter().map(|r| r.ranked.len()).max().unwrap_or(0)
    }
}

/// NDCG@k with binary single-gold relevance: the ideal DCG is 1, so this is
/// 1/log2(r+1) when the gold's 1-based rank r is within k, else 0.
pub fn ndcg_at_k(ranked: &RankedList, gold_id: &str, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let position = ranked
        .ranked
        .iter()
        .position(|e| e.id == gold_id)
        .ok_or_else(|| EvalError::GoldNotRanked {
            qid: ranked.qid.clone(),
            gold: gold_id.to_string(),
        })?;
    let rank = position + 1;
    if rank <= k {
        Ok(1.0 / ((rank + 1) as f64).log2())
    } else {
        Ok(0.0)
    }
}

/// Arithmetic mean of per-query NDCG@k over a run.
pub fn mean_ndcg(run: &EvalRun, k: usize) -> Result<f64, EvalError> {
    if run.rankings.is_empty() {
        return Err(EvalError::NoQueries);
    }
    let mut total = 0.0;
    for ranking in &run.rankings {
        let gold_id = run
            .gold
            .get(&ranking.qid)
            .ok_or_else(|| EvalError::MissingGold(ranking.qid.clone()))?;
        total += ndcg_at_k(ranking, gold_id, k)?;
    }
    Ok(total / run.rankings.len() as f64)
}

/// Mean NDCG per cutoff in `ks` (strictly increasing). The curve is
/// non-decreasing in k.
pub fn gain_curve(run: &EvalRun, ks: &[usize]) -> Result<Vec<(usize, f64)>, EvalError> {
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidCutoffs);
    }
    ks.iter().map(|&k| Ok((k, mean_ndcg(run, k)?))).collect()
}

/// 100 * (model - baseline) / baseline; undefined when the baseline is 0.
pub fn percent_improvement(model_ndcg: f64, baseline_ndcg: f64) -> Option<f64> {
    if baseline_ndcg == 0.0 {
        None
    } else {
        Some(100.0 * (model_ndcg - baseline_ndcg) / baseline_ndcg)
    }
}

/// gain_a / gain_b; undefined when gain_b is 0.
pub fn improvement_ratio(gain_a: f64, gain_b: f64) -> Option<f64> {
    if gain_b == 0.0 {
        None
    } else {
        Some(gain_a / gain_b)
    }
}

/// One model's score on one benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub mean_ndcg: f64,
    /// Percent improvement over the baseline at the benchmark cutoff; None
    /// when the baseline mean is 0.
    pub improvement_pct: Option<f64>,
}

/// One model's gain curve on one benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCurve {
    pub model: String,
    pub points: Vec<(usize, f64)>,
}

/// All models' results on one benchmark at its cutoff.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub benchmark: String,
    pub cutoff: usize,
    pub n_queries: usize,
    pub rows: Vec<ModelScore>,
    pub curves: Vec<ModelCurve>,
}

/// The spread between the strongest and weakest benchmark's best adaptation
/// gain, computed from display-rounded (two-decimal) percent values so the
/// printed ratio matches the printed gains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImprovementRatio {
    pub high_benchmark: String,
    pub high_gain_pct: f64,
    pub low_benchmark: String,
    pub low_gain_pct: f64,
    pub ratio: f64,
}

/// Difference table between two named benchmark profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedProfileDiff {
    pub base: String,
    pub other: String,
    pub diff: ProfileDiff,
}

/// The composed evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub baseline: String,
    pub benchmarks: Vec<BenchmarkReport>,
    pub profile_diffs: Vec<NamedProfileDiff>,
    pub ratio: Option<ImprovementRatio>,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Builds the model x benchmark report: mean NDCG at each benchmark's
/// cutoff (the universe size), percent improvement over the named baseline,
/// gain curves over `ks`, the cross-benchmark improvement ratio, and profile
/// difference tables when profiles are supplied.
pub fn build_report(
    runs: &[EvalRun],
    baseline_name: &str,
    ks: &[usize],
    profiles: &[(String, DiversityMetrics)],
) -> Result<EvalReport, EvalError> {
    // Group runs per benchmark in first-seen order.
    let mut order: Vec<&str> = Vec::new();
    for run in runs {
        if !order.contains(&run.benchmark_name.as_str()) {
            order.push(&run.benchmark_name);
        }
    }

    let mut benchmarks = Vec::new();
    let mut best_gain_per_benchmark: Vec<(String, f64)> = Vec::new();
    for benchmark in order {
        let members: Vec<&EvalRun> = runs
            .iter()
            .filter(|r| r.benchmark_name == benchmark)
            .collect();
        let baseline_run = members
            .iter()
            .find(|r| r.model_name == baseline_name)
            .ok_or_else(|| EvalError::MissingBaseline {
                baseline: baseline_name.to_string(),
                benchmark: benchmark.to_string(),
            })?;
        let cutoff = baseline_run.universe_size();
        for run in &members {
            if run.universe_size() != cutoff {
                return Err(EvalError::UniverseMismatch {
                    benchmark: benchmark.to_string(),
                    a: cutoff,
                    b: run.universe_size(),
                });
            }
        }
        let baseline_mean = mean_ndcg(baseline_run, cutoff)?;

        let mut rows = Vec::new();
        let mut curves = Vec::new();
        let mut best_gain: Option<f64> = None;
        for run in &members {
            let mean = mean_ndcg(run, cutoff)?;
            let improvement_pct = percent_improvement(mean, baseline_mean);
            if run.model_name != baseline_name {
                if let Some(pct) = improvement_pct {
                    best_gain = Some(best_gain.map_or(pct, |b: f64| b.max(pct)));
                }
            }
            rows.push(ModelScore {
                model: run.model_name.clone(),
                mean_ndcg: mean,
                improvement_pct,
            });
            curves.push(ModelCurve {
                model: run.model_name.clone(),
                points: gain_curve(run, ks)?,
            });
        }
        if let Some(gain) = best_gain {
            best_gain_per_benchmark.push((benchmark.to_string(), gain));
        }
        benchmarks.push(BenchmarkReport {
            benchmark: benchmark.to_string(),
            cutoff,
            n_queries: baseline_run.rankings.len(),
            rows,
            curves,
        });
    }

    // Ratio of the strongest benchmark's best gain to the weakest's, from
    // display-rounded percents so the printed arithmetic is consistent.
    let ratio = if best_gain_per_benchmark.len() >= 2 {
        let high = best_gain_per_benchmark
            .iter()
            .cloned()
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite gains"))
            .expect("non-empty");
        let low = best_gain_per_benchmark
            .iter()
            .cloned()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite gains"))
            .expect("non-empty");
        improvement_ratio(round2(high.1), round2(low.1)).map(|r| ImprovementRatio {
            high_benchmark: high.0,
            high_gain_pct: round2(high.1),
            low_benchmark: low.0,
            low_gain_pct: round2(low.1),
            ratio: r,
        })
    } else {
        None
    };

    let profile_diffs = if profiles.len() >= 2 {
        profiles[1..]
            .iter()
            .map(|(name, metrics)| NamedProfileDiff {
                base: profiles[0].0.clone(),
                other: name.clone(),
                diff: compare_profiles(&profiles[0].1, metrics),
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(EvalReport {
        baseline: baseline_name.to_string(),
        benchmarks,
        profile_diffs,
        ratio,
    })
}

fn pct_cell(p: Option<f64>) -> String {
    match p {
        Some(p) => format!("{p:+.2}%"),
        None => "undefined".to_string(),
    }
}

impl EvalReport {
    /// Machine-readable CSV: `benchmark,model,cutoff,mean_ndcg,improvement_pct`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("benchmark,model,cutoff,mean_ndcg,improvement_pct\n");
        for bench in &self.benchmarks {
            for row in &bench.rows {
                let pct = match row.improvement_pct {
                    Some(p) => format!("{p:.2}"),
                    None => "undefined".to_string(),
                };
                out.push_str(&format!(
                    "{},{},{},{:.4},{}\n",
                    bench.benchmark, row.model, bench.cutoff, row.mean_ndcg, pct
                ));
            }
        }
        out
    }

    /// Gain curves as CSV: `model,benchmark,k,mean_ndcg`.
    pub fn gain_curves_csv(&self) -> String {
        let mut out = String::from("model,benchmark,k,mean_ndcg\n");
        for bench in &self.benchmarks {
            for curve in &bench.curves {
                for (k, v) in &curve.points {
                    out.push_str(&format!(
                        "{},{},{},{:.4}\n",
                        curve.model, bench.benchmark, k, v
                    ));
                }
            }
        }
        out
    }

    /// Human-readable table: NDCG to four decimals, percents to two, the
    /// improvement ratio to one.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for bench in &self.benchmarks {
            out.push_str(&format!(
                "Benchmark: {} (NDCG@{}, {} queries, baseline {})\n",
                bench.benchmark, bench.cutoff, bench.n_queries, self.baseline
            ));
            let width = bench
                .rows
                .iter()
                .map(|r| r.model.len())
                .max()
                .unwrap_or(5)
                .max(5);
            out.push_str(&format!(
                "  {:<width$}  {:>9}  {:>12}\n",
                "model", "mean NDCG", "improvement"
            ));
            for row in &bench.rows {
                out.push_str(&format!(
                    "  {:<width$}  {:>9.4}  {:>12}\n",
                    row.model,
                    row.mean_ndcg,
                    pct_cell(row.improvement_pct)
                ));
            }
            out.push('\n');
        }
        if let Some(ratio) = &self.ratio {
            out.push_str(&format!(
                "Best gain {:+.2}% on {} vs {:+.2}% on {}: {:.1}x spread\n\n",
                ratio.high_gain_pct,
                ratio.high_benchmark,
                ratio.low_gain_pct,
                ratio.low_benchmark,
                ratio.ratio
            ));
        }
        for named in &self.profile_diffs {
            out.push_str(&format!(
                "Profile difference: {} vs {}\n",
                named.other, named.base
            ));
            out.push_str(&format!(
                "  {:<20}  {:>10}  {:>10}  {:>10}\n",
                "metric", named.base, named.other, "diff"
            ));
            for row in &named.diff.rows {
                out.push_str(&format!(
                    "  {:<20}  {:>10.4}  {:>10.4}  {:>10}\n",
                    row.metric,
                    row.base,
                    row.other,
                    row.percent_display()
                ));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieve::ScoredContext;

    fn ranking(qid: &str, ids: &[&str]) -> RankedList {
        RankedList {
            qid: qid.to_string(),
            ranked: ids
                .iter()
                .enumerate()
                .map(|(i, id)| ScoredContext {
                    id: id.to_string(),
                    score: 1.0 - i as f64 * 0.01,
                })
                .collect(),
        }
    }

    fn run_with_gold_ranks(model: &str, benchmark: &str, ranks: &[usize], n: usize) -> EvalRun {
        // Build one query per requested gold rank over a universe of n ids.
        let ids: Vec<String> = (0..n).map(|i| format!("c{i:03}")).collect();
        let mut rankings = Vec::new();
        let mut gold = BTreeMap::new();
        for (q, &rank) in ranks.iter().enumerate() {
            let qid = format!("q{q}");
            let id_refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
            rankings.push(ranking(&qid, &id_refs));
            gold.insert(qid, format!("c{:03}", rank - 1));
        }
        EvalRun::new(model, benchmark, rankings, gold).unwrap()
    }

    #[test]
    fn ndcg_gold_at_rank_one() {
        let r = ranking("q", &["a", "b", "c"]);
        assert_eq!(ndcg_at_k(&r, "a", 3).unwrap(), 1.0);
    }

    #[test]
    fn ndcg_gold_at_rank_three() {
        let r = ranking("q", &["a", "b", "c", "d", "e"]);
        let got = ndcg_at_k(&r, "c", 5).unwrap();
        assert!((got - 0.5).abs() < 1e-12); // 1/log2(4)
    }

    #[test]
    fn ndcg_gold_outside_cutoff_is_zero() {
        let r = ranking("q", &["a", "b", "c", "d", "e", "f"]);
        assert_eq!(ndcg_at_k(&r, "f", 5).unwrap(), 0.0);
    }

    #[test]
    fn ndcg_gold_absent_is_error() {
        let r = ranking("q", &["a", "b"]);
        assert!(matches!(
            ndcg_at_k(&r, "zz", 2),
            Err(EvalError::GoldNotRanked { .. })
        ));
    }

    #[test]
    fn mean_ndcg_all_gold_first() {
        let run = run_with_gold_ranks("m", "b", &[1, 1, 1], 10);
        assert_eq!(mean_ndcg(&run, 10).unwrap(), 1.0);
    }

    #[test]
    fn mean_ndcg_mixed() {
        // Ranks 1 and 3 -> NDCG 1.0 and 0.5 -> mean 0.75.
        let run = run_with_gold_ranks("m", "b", &[1, 3], 10);
        assert!((mean_ndcg(&run, 10).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn mean_ndcg_at_universe_counts_every_gold() {
        let run = run_with_gold_ranks("m", "b", &[10, 7, 2], 10);
        let mean = mean_ndcg(&run, 10).unwrap();
        assert!(mean > 0.0);
        let per: f64 = [10usize, 7, 2]
            .iter()
            .map(|&r| 1.0 / ((r + 1) as f64).log2())
            .sum::<f64>()
            / 3.0;
        assert!((mean - per).abs() < 1e-12);
    }

    #[test]
    fn gain_curve_single_query_rank_seven() {
        let run = run_with_gold_ranks("m", "b", &[7], 20);
        let curve = gain_curve(&run, &[1, 5, 10, 20]).unwrap();
        assert_eq!(curve[0].1, 0.0);
        assert_eq!(curve[1].1, 0.0);
        let third = 1.0 / 8.0f64.log2(); // = 1/3
        assert!((curve[2].1 - third).abs() < 1e-12);
        assert!((curve[3].1 - third).abs() < 1e-12);
    }

    #[test]
    fn gain_curve_requires_increasing_ks() {
        let run = run_with_gold_ranks("m", "b", &[1], 5);
        assert!(gain_curve(&run, &[5, 1]).is_err());
        assert!(gain_curve(&run, &[]).is_err());
    }

    #[test]
    fn gain_curve_non_decreasing() {
        let run = run_with_gold_ranks("m", "b", &[3, 9, 14, 1, 6], 20);
        let curve = gain_curve(&run, &[1, 5, 10, 20]).unwrap();
        for pair in curve.windows(2) {
            assert!(pair[1].1 >= pair[0].1);
        }
    }

    #[test]
    fn percent_improvement_reference_values() {
        let p = percent_improvement(0.9100, 0.8902).unwrap();
        assert_eq!(format!("{p:.2}"), "2.22");
        let p = percent_improvement(0.9808, 0.9749).unwrap();
        assert_eq!(format!("{p:.2}"), "0.61");
        assert_eq!(percent_improvement(0.5, 0.5).unwrap(), 0.0);
        assert!(percent_improvement(0.5, 0.0).is_none());
    }

    #[test]
    fn improvement_ratio_examples() {
        let r = improvement_ratio(2.22, 0.61).unwrap();
        assert_eq!(format!("{r:.1}"), "3.6");
        assert_eq!(improvement_ratio(1.5, 1.5).unwrap(), 1.0);
        assert_eq!(improvement_ratio(4.44, 1.11).unwrap(), 4.0);
        assert!(improvement_ratio(1.0, 0.0).is_none());
    }

    #[test]
    fn report_single_baseline_run_zero_improvements() {
        let run = run_with_gold_ranks("base", "b", &[1, 2], 5);
        let report = build_report(&[run], "base", &[1, 5], &[]).unwrap();
        assert_eq!(report.benchmarks.len(), 1);
        assert_eq!(report.benchmarks[0].rows[0].improvement_pct, Some(0.0));
        assert!(report.ratio.is_none());
    }

    #[test]
    fn report_missing_baseline_is_error() {
        let run = run_with_gold_ranks("m", "b", &[1], 5);
        assert!(matches!(
            build_report(&[run], "base", &[1], &[]),
            Err(EvalError::MissingBaseline { .. })
        ));
    }

    #[test]
    fn report_includes_profile_diffs() {
        let run_a = run_with_gold_ranks("base", "b1", &[1, 2], 5);
        let run_b = run_with_gold_ranks("base", "b2", &[2, 1], 5);
        let metrics = |d: f64| DiversityMetrics {
            n_contexts: 5,
            avg_cosine_distance: d,
            optimal_k: 2,
            silhouette: 0.5,
            topic_entropy: 0.9,
        };
        let profiles = vec![
            ("b1".to_string(), metrics(0.2)),
            ("b2".to_string(), metrics(0.3)),
        ];
        let report = build_report(&[run_a, run_b], "base", &[1], &profiles).unwrap();
        assert_eq!(report.profile_diffs.len(), 1);
        assert_eq!(report.profile_diffs[0].other, "b2");
        let table = report.to_table();
        assert!(table.contains("Profile difference"));
    }

    #[test]
    fn csv_headers_are_stable() {
        let run = run_with_gold_ranks("base", "b", &[1], 5);
        let report = build_report(&[run], "base", &[1, 5], &[]).unwrap();
        assert!(report.to_csv().starts_with("benchmark,model,cutoff,mean_ndcg,improvement_pct\n"));
        assert!(report
            .gain_curves_csv()
            .starts_with("model,benchmark,k,mean_ndcg\n"));
    }
}
