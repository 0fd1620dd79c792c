//! Synthetic populations with controllable churn and weight shape, plus the
//! timeline runner and the side-by-side comparison of refresh strategies.
//!
//! Population generation is a pure function of (spec, period): each of the
//! `universe_size` slots hosts a succession of occupants, a slot replaces
//! its occupant with probability `monthly_churn` per period (decided by
//! hashing), and occupant weights come from the configured distribution,
//! optionally jittered per period. No RNG state anywhere, so any period can
//! be regenerated independently.

use num_rational::Ratio;

use crate::analytics::{
    judgment_load, judgment_load_sets, overlap_query_sets, CdfReport, LoadReport, OverlapPair,
    OverlapReport,
};
use crate::error::Error;
use crate::exec;
use crate::keys::{new_seed, sample_hash, Seed};
use crate::sampler::{
    replace_random_subset_baseline, Mode, PopulationSnapshot, Rational, Sample, SamplerState,
    SamplingPolicy,
};

#[derive(Debug, Clone, PartialEq)]
pub enum WeightDistribution {
    /// Discrete power law: `P(W >= k) = k^-(alpha-1)`, alpha > 1. Smaller
    /// alpha means a heavier tail.
    PowerLaw { alpha: f64 },
    /// Uniform integer weights in `1..=max_weight`.
    Uniform { max_weight: u64 },
}

impl WeightDistribution {
    fn sample(&self, u: f64) -> u64 {
        match *self {
            WeightDistribution::PowerLaw { alpha } => {
                let w = u.powf(-1.0 / (alpha - 1.0)).floor();
                (w as u64).max(1)
            }
            WeightDistribution::Uniform { max_weight } => {
                 1 + (u * max_weight as f64).floor() as u64
            }
        }
    }
}

/// Deterministic generator spec: same spec + period always reproduces the
/// identical snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub universe_size: usize,
    pub weight_distribution: WeightDistribution,
    /// Share of queries replaced by fresh ones each period, in [0, 1].
    pub monthly_churn: f64,
    /// Bound on multiplicative per-period weight noise, >= 0.
    pub weight_jitter: f64,
    pub generator_seed: Seed,
}

impl PopulationSpec {
    pub fn new(
        universe_size: usize,
        weight_distribution: WeightDistribution,
        monthly_churn: f64,
        weight_jitter: f64,
        generator_seed: Seed,
    ) -> Result<Self, Error> {
        let spec = PopulationSpec {
            universe_size,
            weight_distribution,
            monthly_churn,
            weight_jitter,
            generator_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.universe_size == 0 {
            return Err(Error::InvalidSpec("universe size must be positive".into()));
        }
        match self.weight_distribution {
            WeightDistribution::PowerLaw { alpha } => {
                if !alpha.is_finite() || alpha <= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "power-law alpha must be finite and > 1, got {alpha}"
                    )));
                }
            }
            WeightDistribution::Uniform { max_weight } => {
                if max_weight == 0 {
                    return Err(Error::InvalidSpec("max weight must be at least 1".into()));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.monthly_churn) {
            return Err(Error::InvalidSpec(format!(
                "monthly churn {} outside [0, 1]",
                self.monthly_churn
            )));
        }
        if !self.weight_jitter.is_finite() || self.weight_jitter < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "weight jitter {} must be a non-negative number",
                self.weight_jitter
            )));
        }
        Ok(())
    }

    fn churn_seed(&self) -> Seed {
        derived_seed(&self.generator_seed, "churn")
    }

    fn weight_seed(&self) -> Seed {
        derived_seed(&self.generator_seed, "weight")
    }

    fn jitter_seed(&self) -> Seed {
        derived_seed(&self.generator_seed, "jitter")
    }
}

fn derived_seed(base: &Seed, purpose: &str) -> Seed {
    Seed::new(format!("{}/{purpose}", base.as_str())).expect("derived seed is non-empty")
}

/// The snapshot of one period. Names are synthetic (`q<slot>g<generation>`);
/// an occupant keeps its name, and therefore its hashed uniforms, for as
/// long as it survives.
pub fn generate_population(spec: &PopulationSpec, period_index: u64) -> PopulationSnapshot {
    let churn_seed = spec.churn_seed();
    let weight_seed = spec.weight_seed();
    let jitter_seed = spec.jitter_seed();

    let entries = exec::map_range(spec.universe_size, |slot| {
        let generation = occupant_generation(spec, &churn_seed, slot, period_index);
        let name = format!("q{slot}g{generation}");
        let base = spec
            .weight_distribution
            .sample(sample_hash(&weight_seed, &name).value());
        let weight = if spec.weight_jitter > 0.0 {
            let u = sample_hash(&jitter_seed, &format!("{name}/{period_index}")).value();
            let factor = 1.0 + (2.0 * u - 1.0) * spec.weight_jitter;
            ((base as f64 * factor).round() as u64).max(1)
        } else {
            base
        };
        (name, weight)
    });

    PopulationSnapshot::new(period_index, entries).expect("generated snapshot is valid")
}

fn occupant_generation(spec: &PopulationSpec, churn_seed: &Seed, slot: usize, period: u64) -> u64 {
    if spec.monthly_churn == 0.0 {
        return 0;
    }
    if spec.monthly_churn == 1.0 {
        return period;
    }
    (1..=period)
        .filter(|p| sample_hash(churn_seed, &format!("{slot}/{p}")).value() < spec.monthly_churn)
        .count() as u64
}

/// A full multi-period sampling run with its analytics.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineRun {
    pub policy: SamplingPolicy,
    pub spec: PopulationSpec,
    pub namespace: String,
    pub samples: Vec<Sample>,
    /// Overlap of the first sample with each later one (the figures'
    /// convention).
    pub first_vs_each: OverlapReport,
    /// Overlap of each consecutive pair (the averages-table convention).
    pub consecutive: OverlapReport,
    pub load: LoadReport,
    pub cdfs: Vec<CdfReport>,
}

/// Replays `periods` periods: generate the snapshot, draw the sample,
/// advance the state; then computes both overlap conventions, the judgment
/// load, and a per-period CDF report.
pub fn run_timeline(
    policy: &SamplingPolicy,
    spec: &PopulationSpec,
    periods: usize,
    namespace: &str,
) -> Result<TimelineRun, Error> {
    if periods < 1 {
        return Err(Error::TooFewPeriods {
            got: periods,
            min: 1,
        });
    }
    spec.validate()?;

    let mut state = SamplerState::init(policy.clone(), namespace);
    let mut samples = Vec::with_capacity(periods);
    let mut cdfs = Vec::with_capacity(periods);
    for period in 0..periods as u64 {
        let population = generate_population(spec, period);
        let sample = state.draw_sample(&population);
        cdfs.push(crate::analytics::cdf_validity(&population, &sample)?);
        samples.push(sample);
        state = state.advance_period();
    }

    let sets: Vec<_> = samples.iter().map(|s| s.query_set()).collect();
    let nominal = samples[0].len();
    let first_vs_each = OverlapReport {
        pairs: (1..samples.len())
            .map(|d| OverlapPair {
                period_a: 0,
                period_b: d as u64,
                overlap: overlap_query_sets(&sets[0], &sets[d], nominal),
            })
            .collect(),
    };
    let consecutive = OverlapReport {
        pairs: (1..samples.len())
            .map(|t| OverlapPair {
                period_a: (t - 1) as u64,
                period_b: t as u64,
                overlap: overlap_query_sets(&sets[t - 1], &sets[t], nominal),
            })
            .collect(),
    };
    let load = judgment_load(&samples);

    Ok(TimelineRun {
        policy: policy.clone(),
        spec: spec.clone(),
        namespace: namespace.to_string(),
        samples,
        first_vs_each,
        consecutive,
        load,
        cdfs,
    })
}

/// Knobs for [`compare_approaches`].
#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub sample_size: usize,
    /// Per-period refresh for the semi-stable approach and replacement
    /// fraction for the random-subset baseline.
    pub refresh: Rational,
    /// Resample cadence of the "keep for k periods, then change" approach.
    pub resample_cadence: usize,
    pub namespace: String,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            sample_size: 1000,
            refresh: Ratio::new(1, 10),
            resample_cadence: 12,
            namespace: "compare".into(),
        }
    }
}

/// Measured outcome of one sampling approach over a shared population
/// sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproachOutcome {
    pub id: u8,
    pub name: &'static str,
    pub consecutive_overlaps: Vec<f64>,
    pub per_period_loads: Vec<usize>,
    /// Mean of the consecutive overlaps.
    pub mean_consecutive_overlap: f64,
    /// Mean judgment load over periods >= 1 (period 0 always costs a full
    /// sample).
    pub mean_judgment_load: f64,
}

/// Runs the six comparison approaches on one shared population sequence:
/// 1 keep the first sample forever, 2 resample every period, 3 resample
/// every k periods, 4 stable, 5 semi-stable, 6 replace a random subset.
/// All run WRS mode.
pub fn compare_approaches(
    spec: &PopulationSpec,
    periods: usize,
    config: &CompareConfig,
) -> Result<Vec<ApproachOutcome>, Error> {
    if periods < 2 {
        return Err(Error::TooFewPeriods {
            got: periods,
            min: 2,
        });
    }
    spec.validate()?;

    let populations: Vec<PopulationSnapshot> = (0..periods as u64)
        .map(|p| generate_population(spec, p))
        .collect();
    let n = config.sample_size;
    let ns = &config.namespace;

    let keep_forever = {
        // a stable sampler over the frozen first population never moves
        let mut state = SamplerState::init(SamplingPolicy::stable(Mode::Wrs, n)?, &format!("{ns}/a1"));
        run_against(&mut state, |_| &populations[0], periods)
    };
    let plain = {
        let mut state = SamplerState::init(SamplingPolicy::plain(Mode::Wrs, n)?, &format!("{ns}/a2"));
        run_against(&mut state, |t| &populations[t], periods)
    };
    let cadence = {
        let mut state = SamplerState::init(SamplingPolicy::plain(Mode::Wrs, n)?, &format!("{ns}/a3"));
        let mut samples: Vec<Sample> = Vec::with_capacity(periods);
        for t in 0..periods {
            if t % config.resample_cadence == 0 {
                samples.push(state.draw_sample(&populations[t]));
            } else {
                let frozen = samples[t - 1].clone();
                samples.push(frozen);
            }
            state = state.advance_period();
        }
        samples
    };
    let stable = {
        let mut state = SamplerState::init(SamplingPolicy::stable(Mode::Wrs, n)?, &format!("{ns}/a4"));
        run_against(&mut state, |t| &populations[t], periods)
    };
    let semi_stable = {
        let policy = SamplingPolicy::semi_stable(Mode::Wrs, config.refresh, n)?;
        let mut state = SamplerState::init(policy, &format!("{ns}/a5"));
        run_against(&mut state, |t| &populations[t], periods)
    };
    let baseline = {
        let state = SamplerState::init(SamplingPolicy::plain(Mode::Wrs, n)?, &format!("{ns}/a6"));
        let mut samples = vec![state.draw_sample(&populations[0])];
        for t in 1..periods {
            let seed = new_seed(t as u64, &format!("{ns}/a6/seed"));
            let next = replace_random_subset_baseline(
                &samples[t - 1],
                &populations[t],
                config.refresh,
                &seed,
            )?;
            samples.push(next);
        }
        samples
    };

    let runs: [(u8, &'static str, Vec<Sample>); 6] = [
        (1, "keep-forever", keep_forever),
        (2, "plain-every-period", plain),
        (3, "resample-every-k", cadence),
        (4, "stable", stable),
        (5, "semistable", semi_stable),
        (6, "replace-random-subset", baseline),
    ];

    Ok(runs
        .into_iter()
        .map(|(id, name, samples)| summarize(id, name, &samples, n))
        .collect())
}

fn run_against<'a>(
    state: &mut SamplerState,
    population_at: impl Fn(usize) -> &'a PopulationSnapshot,
    periods: usize,
) -> Vec<Sample> {
    let mut samples = Vec::with_capacity(periods);
    for t in 0..periods {
        samples.push(state.draw_sample(population_at(t)));
        *state = state.advance_period();
    }
    samples
}

fn summarize(id: u8, name: &'static str, samples: &[Sample], nominal: usize) -> ApproachOutcome {
    let sets: Vec<_> = samples.iter().map(|s| s.query_set()).collect();
    let consecutive_overlaps: Vec<f64> = (1..samples.len())
        .map(|t| overlap_query_sets(&sets[t - 1], &sets[t], nominal))
        .collect();
    let load =
        judgment_load_sets(sets.iter().enumerate().map(|(t, s)| (t as u64, s.clone())));
    let per_period_loads: Vec<usize> = load.per_period.iter().map(|e| e.new_judgments).collect();
    let mean_consecutive_overlap = crate::stats::mean(&consecutive_overlaps);
    let tail: Vec<f64> = per_period_loads[1..].iter().map(|&l| l as f64).collect();
    ApproachOutcome {
        id,
        name,
        mean_consecutive_overlap,
        mean_judgment_load: crate::stats::mean(&tail),
        consecutive_overlaps,
        per_period_loads,
    }
}
