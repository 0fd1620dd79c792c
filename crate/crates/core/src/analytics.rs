//! Overlap, judgment-load and CDF measurements, the analytic churn model,
//! and the brute-force inclusion-probability oracle used for validity
//! checks.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::exec;
use crate::sampler::{PopulationSnapshot, Sample, SamplerState, SamplingPolicy};

/// Overlap fractions between pairs of sample periods.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub pairs: Vec<OverlapPair>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapPair {
    pub period_a: u64,
    pub period_b: u64,
    pub overlap: f64,
}

/// Per-period count of sampled queries never seen in any earlier sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub per_period: Vec<LoadEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadEntry {
    pub period_index: u64,
    pub new_judgments: usize,
}

/// One row of the analytic churn model: retention decays geometrically,
/// refresh accumulates linearly, and every refreshed survivor counts as
/// churned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChurnModelRow {
    pub month_delta: u32,
    pub natural_retention: f64,
    pub natural_churn: f64,
    pub refresh: f64,
    pub refresh_churn: f64,
    pub combined_churn: f64,
    pub final_overlap: f64,
}

/// Population volume-CDF against sample count-CDF over the distinct
/// population weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfReport {
    pub thresholds: Vec<u64>,
    pub population_volume_cdf: Vec<f64>,
    pub sample_count_cdf: Vec<f64>,
    pub max_deviation: f64,
}

/// Fraction of shared queries between two same-sized samples.
pub fn overlap(a: &Sample, b: &Sample) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::SampleSizeMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(overlap_query_sets(&a.query_set(), &b.query_set(), a.len()))
}

/// Overlap by query identity with an explicit nominal denominator. Used
/// directly when samples come from files or may run short of the nominal
/// size (the replace-random-subset baseline does).
pub fn overlap_query_sets(a: &BTreeSet<&str>, b: &BTreeSet<&str>, nominal_size: usize) -> f64 {
    assert!(nominal_size > 0, "nominal sample size must be positive");
    a.intersection(b).count() as f64 / nominal_size as f64
}

/// Judgment load across an ordered run of samples, reusing judgments from
/// the whole history: a query churning out and back in is not recounted.
pub fn judgment_load(run: &[Sample]) -> LoadReport {
    judgment_load_sets(run.iter().map(|s| (s.period_index(), s.query_set())))
}

/// [`judgment_load`] over bare query sets.
pub fn judgment_load_sets<'a>(
    periods: impl IntoIterator<Item = (u64, BTreeSet<&'a str>)>,
) -> LoadReport {
    let mut seen: BTreeSet<&'a str> = BTreeSet::new();
    let mut per_period = Vec::new();
    for (period_index, queries) in periods {
        let new_judgments = queries.iter().filter(|q| !seen.contains(*q)).count();
        seen.extend(queries);
        per_period.push(LoadEntry {
            period_index,
            new_judgments,
        });
    }
    LoadReport { per_period }
}

/// Steady-state fraction of the sample needing fresh judgments each period:
/// `churn + refresh - churn * refresh`.
pub fn steady_state_load(natural_churn: f64, refresh: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&natural_churn));
    debug_assert!((0.0..=1.0).contains(&refresh));
    natural_churn + refresh - natural_churn * refresh
}

/// The analytic churn/overlap model, one row per month delta `d` in
/// `0..=horizon`: retention `base^d`, cumulative refresh `min(d/horizon, 1)`,
/// and the derived churn columns.
pub fn churn_model_table(nat_ret_base: f64, horizon: u32) -> Vec<ChurnModelRow> {
    assert!(
        nat_ret_base > 0.0 && nat_ret_base <= 1.0,
        "retention base must be in (0, 1]"
    );
    assert!(horizon >= 1);
    (0..=horizon)
        .map(|d| {
            let natural_retention = nat_ret_base.powi(d as i32);
            let refresh = (d as f64 / horizon as f64).min(1.0);
            let natural_churn = 1.0 - natural_retention;
            let refresh_churn = refresh * natural_retention;
            let combined_churn = (natural_churn + refresh_churn).clamp(0.0, 1.0);
            ChurnModelRow {
                month_delta: d,
                natural_retention,
                natural_churn,
                refresh,
                refresh_churn,
                combined_churn,
                final_overlap: (1.0 - combined_churn).clamp(0.0, 1.0),
            }
        })
        .collect()
}

/// Compares the population's impression-volume CDF with the sample's
/// query-count CDF over the distinct population weights. Sampled queries
/// are looked up in the population; a query the population does not contain
/// is an error.
pub fn cdf_validity(population: &PopulationSnapshot, sample: &Sample) -> Result<CdfReport, Error> {
    cdf_validity_parts(population, sample.queries(), sample.len())
}

/// [`cdf_validity`] over a bare query list (e.g. read back from a file).
pub fn cdf_validity_parts<'a>(
    population: &PopulationSnapshot,
    sampled: impl IntoIterator<Item = &'a str>,
    sample_size: usize,
) -> Result<CdfReport, Error> {
    if sample_size == 0 {
        return Err(Error::EmptySample);
    }

    let mut volume_by_weight: BTreeMap<u64, u128> = BTreeMap::new();
    for (_, w) in population.iter() {
        *volume_by_weight.entry(w.value()).or_insert(0) += w.value() as u128;
    }
    let thresholds: Vec<u64> = volume_by_weight.keys().copied().collect();
    let total_volume = population.total_weight() as f64;

    let mut sample_counts = vec![0usize; thresholds.len()];
    for query in sampled {
        let w = population
            .weight_of(query)
            .ok_or_else(|| Error::QueryNotInPopulation(query.to_string()))?;
        let idx = thresholds
            .binary_search(&w.value())
            .expect("sampled weight is a population weight");
        sample_counts[idx] += 1;
    }

    let mut population_volume_cdf = Vec::with_capacity(thresholds.len());
    let mut sample_count_cdf = Vec::with_capacity(thresholds.len());
    let mut volume_acc = 0u128;
    let mut count_acc = 0usize;
    let mut max_deviation = 0.0f64;
    for (i, t) in thresholds.iter().enumerate() {
        volume_acc += volume_by_weight[t];
        count_acc += sample_counts[i];
        let pv = volume_acc as f64 / total_volume;
        let sc = count_acc as f64 / sample_size as f64;
        max_deviation = max_deviation.max((pv - sc).abs());
        population_volume_cdf.push(pv);
        sample_count_cdf.push(sc);
    }

    debug_assert!(population_volume_cdf.windows(2).all(|p| p[0] <= p[1]));
    debug_assert!(sample_count_cdf.windows(2).all(|p| p[0] <= p[1]));
    debug_assert_eq!(population_volume_cdf.last(), Some(&1.0));
    debug_assert_eq!(sample_count_cdf.last(), Some(&1.0));

    Ok(CdfReport {
        thresholds,
        population_volume_cdf,
        sample_count_cdf,
        max_deviation,
    })
}

/// Enumeration limit for the exact oracle; above this the factorial walk
/// is pointless.
pub const ORACLE_POPULATION_LIMIT: usize = 10;

/// Exact inclusion probabilities of a size-`m` successive sample: each next
/// pick is taken with probability proportional to the remaining weights.
/// Enumerates every length-`m` prefix, so populations are capped at
/// [`ORACLE_POPULATION_LIMIT`].
pub fn inclusion_oracle(
    population: &PopulationSnapshot,
    m: usize,
) -> Result<BTreeMap<String, f64>, Error> {
    let n = population.len();
    if n > ORACLE_POPULATION_LIMIT {
        return Err(Error::PopulationTooLarge {
            size: n,
            limit: ORACLE_POPULATION_LIMIT,
        });
    }
    if m == 0 || m > n {
        return Err(Error::InvalidOracleSize { m, size: n });
    }

    let weights: Vec<f64> = population.iter().map(|(_, w)| w.value() as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut probs = vec![0.0f64; n];

    fn walk(
        weights: &[f64],
        taken: u16,
        remaining_total: f64,
        picks_left: usize,
        path_p: f64,
        probs: &mut [f64],
    ) {
        if picks_left == 0 {
            return;
        }
        for (i, &w) in weights.iter().enumerate() {
            if taken & (1 << i) != 0 {
                continue;
            }
            let p = path_p * w / remaining_total;
            probs[i] += p;
            walk(
                weights,
                taken | (1 << i),
                remaining_total - w,
                picks_left - 1,
                p,
                probs,
            );
        }
    }

    walk(&weights, 0, total, m, 1.0, &mut probs);

    Ok(population
        .iter()
        .zip(probs)
        .map(|((q, _), p)| (q.to_string(), p))
        .collect())
}

const MIN_TRIALS: usize = 1000;

/// Monte Carlo inclusion frequencies at `target_period`, over `trials`
/// independently seeded sampler lifecycles (namespace `prefix` + trial
/// index). Only the target period's draw is materialized: state evolution
/// does not depend on the populations, and draws are pure.
pub fn empirical_inclusion(
    policy: &SamplingPolicy,
    populations: &[PopulationSnapshot],
    target_period: usize,
    trials: usize,
    trial_namespace_prefix: &str,
) -> Result<BTreeMap<String, f64>, Error> {
    let (target, width) = empirical_setup(populations, target_period, trials)?;
    let counts = exec::sum_counts(trials, width, |t, acc| {
        empirical_trial(policy, target, target_period, trial_namespace_prefix, t, acc);
    });
    Ok(empirical_frequencies(target, counts, trials))
}

/// Single-threaded [`empirical_inclusion`]; identical output.
pub fn empirical_inclusion_seq(
    policy: &SamplingPolicy,
    populations: &[PopulationSnapshot],
    target_period: usize,
    trials: usize,
    trial_namespace_prefix: &str,
) -> Result<BTreeMap<String, f64>, Error> {
    let (target, width) = empirical_setup(populations, target_period, trials)?;
    let counts = exec::sum_counts_seq(trials, width, |t, acc| {
        empirical_trial(policy, target, target_period, trial_namespace_prefix, t, acc);
    });
    Ok(empirical_frequencies(target, counts, trials))
}

fn empirical_setup(
    populations: &[PopulationSnapshot],
    target_period: usize,
    trials: usize,
) -> Result<(&PopulationSnapshot, usize), Error> {
    if trials < MIN_TRIALS {
        return Err(Error::TooFewTrials {
            got: trials,
            min: MIN_TRIALS,
        });
    }
    if target_period >= populations.len() {
        return Err(Error::TargetPeriodOutOfRange {
            target: target_period,
            len: populations.len(),
        });
    }
    let target = &populations[target_period];
    Ok((target, target.len()))
}

fn empirical_trial(
    policy: &SamplingPolicy,
    target: &PopulationSnapshot,
    target_period: usize,
    prefix: &str,
    trial: usize,
    counts: &mut [u64],
) {
    let namespace = format!("{prefix}{trial}");
    let mut state = SamplerState::init(policy.clone(), &namespace);
    for _ in 0..target_period {
        state = state.advance_period();
    }
    let sample = state.draw_sample_seq(target);
    for item in sample.items() {
        let idx = target
            .entries()
            .binary_search_by(|(q, _)| q.as_str().cmp(&item.query))
            .expect("sampled query comes from the population");
        counts[idx] += 1;
    }
}

fn empirical_frequencies(
    target: &PopulationSnapshot,
    counts: Vec<u64>,
    trials: usize,
) -> BTreeMap<String, f64> {
    target
        .iter()
        .zip(counts)
        .map(|((q, _), c)| (q.to_string(), c as f64 / trials as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{Mode, SamplingPolicy};

    fn pop(entries: &[(&str, u64)]) -> PopulationSnapshot {
        PopulationSnapshot::new(0, entries.iter().map(|(q, w)| (q.to_string(), *w))).unwrap()
    }

    fn sample_of(queries: &[&str]) -> Sample {
        // equal-weight SRS over exactly these queries selects all of them
        let population = PopulationSnapshot::new(
            0,
            queries.iter().map(|q| (q.to_string(), 1)),
        )
        .unwrap();
        let state = SamplerState::init(
            SamplingPolicy::stable(Mode::Srs, queries.len()).unwrap(),
            "fixture",
        );
        state.draw_sample(&population)
    }

    #[test]
    fn overlap_of_identical_and_disjoint_samples() {
        let a = sample_of(&["a", "b", "c", "d"]);
        let b = sample_of(&["c", "d", "e", "f"]);
        let disjoint = sample_of(&["w", "x", "y", "z"]);
        assert_eq!(overlap(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap(&a, &disjoint).unwrap(), 0.0);
        assert_eq!(overlap(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn overlap_rejects_size_mismatch() {
        let a = sample_of(&["a", "b", "c"]);
        let b = sample_of(&["a", "b"]);
        assert!(matches!(
            overlap(&a, &b),
            Err(Error::SampleSizeMismatch(3, 2))
        ));
    }

    #[test]
    fn judgment_load_reuses_full_history() {
        let run = vec![
            sample_of(&["a", "b"]),
            sample_of(&["b", "c"]),
            sample_of(&["a", "c"]),
        ];
        let report = judgment_load(&run);
        let loads: Vec<usize> = report.per_period.iter().map(|e| e.new_judgments).collect();
        assert_eq!(loads, vec![2, 1, 0]);
    }

    #[test]
    fn judgment_load_single_and_repeated() {
        let s = sample_of(&["a", "b", "c"]);
        assert_eq!(judgment_load(std::slice::from_ref(&s)).per_period[0].new_judgments, 3);
        let report = judgment_load(&[s.clone(), s]);
        let loads: Vec<usize> = report.per_period.iter().map(|e| e.new_judgments).collect();
        assert_eq!(loads, vec![3, 0]);
    }

    #[test]
    fn steady_state_load_examples() {
        let v = steady_state_load(0.07, 1.0 / 12.0);
        assert!((v - 0.1475).abs() < 1e-10);
        assert_eq!(steady_state_load(0.3, 0.0), 0.3);
        assert_eq!(steady_state_load(0.0, 0.0), 0.0);
    }

    #[test]
    fn churn_model_columns_satisfy_their_identities() {
        for row in churn_model_table(0.93, 12) {
            assert_eq!(row.natural_churn, 1.0 - row.natural_retention);
            assert_eq!(row.refresh_churn, row.refresh * row.natural_retention);
            assert_eq!(
                row.combined_churn,
                (row.natural_churn + row.refresh_churn).clamp(0.0, 1.0)
            );
            assert_eq!(row.final_overlap, (1.0 - row.combined_churn).clamp(0.0, 1.0));
        }
    }

    #[test]
    fn churn_model_first_row_is_exact() {
        let rows = churn_model_table(0.93, 12);
        assert_eq!(rows[0].natural_retention, 1.0);
        assert_eq!(rows[0].natural_churn, 0.0);
        assert_eq!(rows[0].refresh, 0.0);
        assert_eq!(rows[0].refresh_churn, 0.0);
        assert_eq!(rows[0].final_overlap, 1.0);
        assert_eq!(rows.len(), 13);
    }

    #[test]
    fn cdf_equal_weights_full_sample_has_zero_deviation() {
        let population = pop(&[("a", 5), ("b", 5), ("c", 5)]);
        let state = SamplerState::init(SamplingPolicy::stable(Mode::Wrs, 3).unwrap(), "cdf");
        let sample = state.draw_sample(&population);
        let report = cdf_validity(&population, &sample).unwrap();
        assert_eq!(report.max_deviation, 0.0);
        assert_eq!(report.thresholds, vec![5]);
        assert_eq!(report.population_volume_cdf, vec![1.0]);
        assert_eq!(report.sample_count_cdf, vec![1.0]);
    }

    #[test]
    fn cdf_single_heavy_sample_deviates_by_light_volume_share() {
        // population: heavy 9, light 1 -> light volume share 0.1
        let population = pop(&[("heavy", 9), ("light", 1)]);
        let report = cdf_validity_parts(&population, ["heavy"], 1).unwrap();
        assert!((report.max_deviation - 0.1).abs() < 1e-12);
        // CDFs are monotone and end at 1
        assert_eq!(*report.population_volume_cdf.last().unwrap(), 1.0);
        assert_eq!(*report.sample_count_cdf.last().unwrap(), 1.0);
    }

    #[test]
    fn cdf_rejects_foreign_queries_and_empty_samples() {
        let population = pop(&[("a", 1)]);
        assert!(matches!(
            cdf_validity_parts(&population, ["zz"], 1),
            Err(Error::QueryNotInPopulation(_))
        ));
        assert!(matches!(
            cdf_validity_parts(&population, [], 0),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn oracle_matches_hand_enumeration() {
        let probs = inclusion_oracle(&pop(&[("A", 2), ("B", 1), ("C", 1)]), 2).unwrap();
        assert!((probs["A"] - 5.0 / 6.0).abs() < 1e-12);
        assert!((probs["B"] - 7.0 / 12.0).abs() < 1e-12);
        assert!((probs["C"] - 7.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_full_sample_and_symmetric_cases() {
        let probs = inclusion_oracle(&pop(&[("A", 3), ("B", 1), ("C", 7)]), 3).unwrap();
        for p in probs.values() {
            assert!((p - 1.0).abs() < 1e-12);
        }
        let probs = inclusion_oracle(&pop(&[("A", 1), ("B", 1)]), 1).unwrap();
        assert_eq!(probs["A"], 0.5);
        assert_eq!(probs["B"], 0.5);
    }

    #[test]
    fn oracle_top_one_is_weight_share() {
        let population = pop(&[("A", 5), ("B", 3), ("C", 2), ("D", 10)]);
        let probs = inclusion_oracle(&population, 1).unwrap();
        let total = 20.0;
        for (q, w) in population.iter() {
            assert!((probs[q] - w.value() as f64 / total).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_probabilities_sum_to_m() {
        let population = pop(&[("A", 9), ("B", 4), ("C", 2), ("D", 1), ("E", 7), ("F", 3), ("G", 5)]);
        for m in 1..=7 {
            let probs = inclusion_oracle(&population, m).unwrap();
            let sum: f64 = probs.values().sum();
            assert!((sum - m as f64).abs() < 1e-12, "m={m} sum={sum}");
        }
    }

    #[test]
    fn oracle_rejects_oversized_populations_and_bad_m() {
        let entries: Vec<(String, u64)> = (0..11).map(|i| (format!("q{i}"), 1)).collect();
        let population = PopulationSnapshot::new(0, entries).unwrap();
        assert!(matches!(
            inclusion_oracle(&population, 2),
            Err(Error::PopulationTooLarge { .. })
        ));
        let small = pop(&[("a", 1)]);
        assert!(matches!(
            inclusion_oracle(&small, 0),
            Err(Error::InvalidOracleSize { .. })
        ));
        assert!(matches!(
            inclusion_oracle(&small, 2),
            Err(Error::InvalidOracleSize { .. })
        ));
    }

    #[test]
    fn empirical_inclusion_requires_enough_trials() {
        let policy = SamplingPolicy::plain(Mode::Wrs, 1).unwrap();
        let populations = vec![pop(&[("a", 1), ("b", 1)])];
        assert!(matches!(
            empirical_inclusion(&policy, &populations, 0, 10, "x"),
            Err(Error::TooFewTrials { .. })
        ));
        assert!(matches!(
            empirical_inclusion(&policy, &populations, 1, 1000, "x"),
            Err(Error::TargetPeriodOutOfRange { .. })
        ));
    }

    #[test]
    fn stable_empirical_frequencies_are_identical_across_periods() {
        let policy = SamplingPolicy::stable(Mode::Wrs, 2).unwrap();
        let populations = vec![
            pop(&[("A", 2), ("B", 1), ("C", 1)]),
            pop(&[("A", 2), ("B", 1), ("C", 1)]),
        ];
        let at0 = empirical_inclusion(&policy, &populations, 0, 2000, "stable-eq").unwrap();
        let at1 = empirical_inclusion(&policy, &populations, 1, 2000, "stable-eq").unwrap();
        assert_eq!(at0, at1);
    }

    #[test]
    fn parallel_and_sequential_empirical_runs_agree() {
        let policy = SamplingPolicy::plain(Mode::Wrs, 2).unwrap();
        let populations = vec![pop(&[("A", 2), ("B", 1), ("C", 1)])];
        let par = empirical_inclusion(&policy, &populations, 0, 3000, "agree").unwrap();
        let seq = empirical_inclusion_seq(&policy, &populations, 0, 3000, "agree").unwrap();
        assert_eq!(par, seq);
    }
}
