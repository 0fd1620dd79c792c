//! The Stable/Semi-stable sampling state machine.
//!
//! A [`SamplerState`] holds a rolling seed pair `(s1, s2)` and an exact
//! rational refresh accumulator. Each period the accumulator grows by the
//! policy's desired refresh; once it reaches 1 the seeds roll
//! (`s1 <- s2, s2 <- fresh`) and the accumulator wraps. A query's effective
//! uniform is `sample_hash(s1, q)` while `refresh_hash(s1, q)` exceeds the
//! accumulator, and `sample_hash(s2, q)` once the accumulator has passed it —
//! so exactly the accumulated fraction of queries has moved to the next seed
//! generation, without storing anything per query.
//!
//! Plain sampling is the same machine with desired refresh 1 (full refresh
//! every period) and Stable is desired refresh 0 (seeds never move).

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

use crate::error::Error;
use crate::exec;
use crate::keys::{es_order_key, new_seed, refresh_hash, sample_hash};
use crate::keys::{OrderKey, Seed, UnitUniform, Weight};

/// Exact rational used for refresh fractions and the accumulator.
pub type Rational = Ratio<u64>;

/// Parses `"p/q"` (or a bare integer) into an exact rational.
pub fn parse_ratio(text: &str) -> Result<Rational, Error> {
    let bad = || Error::InvalidRatio(text.to_string());
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let numer: u64 = numer.trim().parse().map_err(|_| bad())?;
    let denom: u64 = denom.trim().parse().map_err(|_| bad())?;
    if denom == 0 {
        return Err(bad());
    }
    Ok(Rational::new(numer, denom))
}

/// Formats a rational as `"p/q"`, always with an explicit denominator.
pub fn format_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Srs,
    Wrs,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Srs => "srs",
            Mode::Wrs => "wrs",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "srs" => Ok(Mode::Srs),
            "wrs" => Ok(Mode::Wrs),
            other => Err(Error::InvalidPolicy(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Stable,
    SemiStable,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plain => "plain",
            Variant::Stable => "stable",
            Variant::SemiStable => "semistable",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "plain" => Ok(Variant::Plain),
            "stable" => Ok(Variant::Stable),
            "semistable" => Ok(Variant::SemiStable),
            other => Err(Error::InvalidPolicy(format!("unknown variant {other:?}"))),
        }
    }
}

/// What to sample (SRS or WRS), how stable to keep it, and how big.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPolicy {
    mode: Mode,
    variant: Variant,
    desired_refresh: Rational,
    sample_size: usize,
}

impl SamplingPolicy {
    pub fn new(
        mode: Mode,
        variant: Variant,
        desired_refresh: Rational,
        sample_size: usize,
    ) -> Result<Self, Error> {
        if desired_refresh > Rational::new(1, 1) {
            return Err(Error::InvalidPolicy(format!(
                "desired refresh {} exceeds 1",
                format_ratio(&desired_refresh)
            )));
        }
        match variant {
            Variant::Stable if desired_refresh != Rational::new(0, 1) => {
                return Err(Error::InvalidPolicy(
                    "stable variant requires desired refresh 0".into(),
                ));
            }
            Variant::Plain if desired_refresh != Rational::new(1, 1) => {
                return Err(Error::InvalidPolicy(
                    "plain variant requires desired refresh 1".into(),
                ));
            }
            _ => {}
        }
        if sample_size == 0 {
            return Err(Error::InvalidPolicy("sample size must be at least 1".into()));
        }
        Ok(SamplingPolicy {
            mode,
            variant,
            desired_refresh,
            sample_size,
        })
    }

    /// Stable policy (desired refresh 0).
    pub fn stable(mode: Mode, sample_size: usize) -> Result<Self, Error> {
        Self::new(mode, Variant::Stable, Rational::new(0, 1), sample_size)
    }

    /// Plain policy (desired refresh 1, a full resample every period).
    pub fn plain(mode: Mode, sample_size: usize) -> Result<Self, Error> {
        Self::new(mode, Variant::Plain, Rational::new(1, 1), sample_size)
    }

    /// Semi-stable policy with the given per-period refresh fraction.
    pub fn semi_stable(mode: Mode, refresh: Rational, sample_size: usize) -> Result<Self, Error> {
        Self::new(mode, Variant::SemiStable, refresh, sample_size)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn desired_refresh(&self) -> Rational {
        self.desired_refresh
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// Compact identifying string written into sample-file headers.
    pub fn digest(&self) -> String {
        format!(
            "{}/{}/refresh={}/n={}",
            self.mode,
            self.variant,
            format_ratio(&self.desired_refresh),
            self.sample_size
        )
    }
}

/// One period's population: queries with their impression weights.
/// Entries are held sorted by query byte order; duplicates, empty queries
/// and zero weights are rejected at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationSnapshot {
    period_index: u64,
    entries: Vec<(String, Weight)>,
}

impl PopulationSnapshot {
    pub fn new(
        period_index: u64,
        entries: impl IntoIterator<Item = (String, u64)>,
    ) -> Result<Self, Error> {
        let mut entries: Vec<(String, Weight)> = entries
            .into_iter()
            .map(|(query, weight)| (query, Weight::new(weight)))
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        for (query, weight) in &entries {
            if query.is_empty() || query.contains('\t') || query.contains('\n') {
                return Err(Error::InvalidQueryText(query.clone()));
            }
            if weight.is_zero() {
                return Err(Error::ZeroWeightQuery(query.clone()));
            }
        }
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateQuery(pair[0].0.clone()));
            }
        }
        Ok(PopulationSnapshot {
            period_index,
            entries,
        })
    }

    pub fn period_index(&self) -> u64 {
        self.period_index
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Weight)> {
        self.entries.iter().map(|(q, w)| (q.as_str(), *w))
    }

    pub fn weight_of(&self, query: &str) -> Option<Weight> {
        self.entries
            .binary_search_by(|(q, _)| q.as_str().cmp(query))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn total_weight(&self) -> u128 {
        self.entries.iter().map(|(_, w)| w.value() as u128).sum()
    }

    pub(crate) fn entries(&self) -> &[(String, Weight)] {
        &self.entries
    }
}

/// A query with its effective uniform and order key.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyedItem {
    pub query: String,
    pub weight: Weight,
    pub effective_uniform: UnitUniform,
    pub key: OrderKey,
}

/// Top-N selection of keyed items, strictly ordered by descending key with
/// ties broken by ascending query byte order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    period_index: u64,
    items: Vec<KeyedItem>,
}

impl Sample {
    pub(crate) fn from_sorted_items(period_index: u64, items: Vec<KeyedItem>) -> Self {
        debug_assert!(items
            .windows(2)
            .all(|p| item_order(&p[0], &p[1]) == std::cmp::Ordering::Less));
        Sample {
            period_index,
            items,
        }
    }

    pub fn period_index(&self) -> u64 {
        self.period_index
    }

    pub fn items(&self) -> &[KeyedItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|it| it.query.as_str())
    }

    pub fn query_set(&self) -> std::collections::BTreeSet<&str> {
        self.queries().collect()
    }

    pub fn contains_query(&self, query: &str) -> bool {
        self.items.iter().any(|it| it.query == query)
    }
}

/// Sample order: descending key, then ascending query bytes.
fn item_order(a: &KeyedItem, b: &KeyedItem) -> std::cmp::Ordering {
    b.key.cmp(&a.key).then_with(|| a.query.cmp(&b.query))
}

/// The persisted heart of Stable/Semi-stable behavior: the seed pair, the
/// exact refresh accumulator and the period counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerState {
    s1: Seed,
    s2: Seed,
    refresh_accumulator: Rational,
    period_index: u64,
    policy: SamplingPolicy,
    namespace: String,
}

impl SamplerState {
    /// Fresh state at period 0: `s1 = namespace:0`, `s2 = namespace:1`,
    /// accumulator 0.
    pub fn init(policy: SamplingPolicy, namespace: &str) -> SamplerState {
        SamplerState {
            s1: new_seed(0, namespace),
            s2: new_seed(1, namespace),
            refresh_accumulator: Rational::new(0, 1),
            period_index: 0,
            policy,
            namespace: namespace.to_string(),
        }
    }

    /// Rebuilds a state from persisted parts, enforcing the invariants.
    pub fn from_parts(
        s1: Seed,
        s2: Seed,
        refresh_accumulator: Rational,
        period_index: u64,
        policy: SamplingPolicy,
        namespace: String,
    ) -> Result<SamplerState, Error> {
        if s1 == s2 {
            return Err(Error::InvalidPolicy(format!(
                "seed pair must be distinct, got {s1} twice"
            )));
        }
        if refresh_accumulator >= Rational::new(1, 1) {
            return Err(Error::InvalidPolicy(format!(
                "refresh accumulator {} must be below 1",
                format_ratio(&refresh_accumulator)
            )));
        }
        Ok(SamplerState {
            s1,
            s2,
            refresh_accumulator,
            period_index,
            policy,
            namespace,
        })
    }

    pub fn s1(&self) -> &Seed {
        &self.s1
    }

    pub fn s2(&self) -> &Seed {
        &self.s2
    }

    pub fn refresh_accumulator(&self) -> Rational {
        self.refresh_accumulator
    }

    pub fn period_index(&self) -> u64 {
        self.period_index
    }

    pub fn policy(&self) -> &SamplingPolicy {
        &self.policy
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    /// The next period's state: accumulator grows by the desired refresh;
    /// at >= 1 the seeds roll and the accumulator wraps. The rolled-in seed
    /// index is `period_index + 1`, which can collide with neither of the
    /// two initial seeds nor any earlier roll.
    pub fn advance_period(&self) -> SamplerState {
        let mut next = self.clone();
        next.period_index += 1;
        next.refresh_accumulator += next.policy.desired_refresh;
        if next.refresh_accumulator >= Rational::new(1, 1) {
            next.s1 = next.s2.clone();
            next.s2 = new_seed(next.period_index + 1, &next.namespace);
            next.refresh_accumulator -= Rational::new(1, 1);
        }
        next
    }

    /// The uniform assigned to `query` this period: from `s1` while the
    /// query's refresh hash exceeds the accumulator, otherwise from `s2`.
    pub fn effective_uniform(&self, query: &str) -> UnitUniform {
        let threshold =
            *self.refresh_accumulator.numer() as f64 / *self.refresh_accumulator.denom() as f64;
        if refresh_hash(&self.s1, query).value() > threshold {
            sample_hash(&self.s1, query)
        } else {
            sample_hash(&self.s2, query)
        }
    }

    /// Draws the top-N sample for the current period. Queries absent from
    /// the population are absent from the sample; persisting queries keep
    /// their uniforms; new queries hash to fresh ones.
    pub fn draw_sample(&self, population: &PopulationSnapshot) -> Sample {
        let items = exec::map_collect(population.entries(), |(query, weight)| {
            self.keyed_item(query, *weight, None)
                .expect("hashed uniforms are total")
        });
        self.finish_sample(items)
    }

    /// Single-threaded [`Self::draw_sample`]; the two produce identical
    /// samples.
    pub fn draw_sample_seq(&self, population: &PopulationSnapshot) -> Sample {
        let mut items = exec::map_collect_seq(population.entries(), |(query, weight)| {
            self.keyed_item(query, *weight, None)
                .expect("hashed uniforms are total")
        });
        items.sort_unstable_by(item_order);
        items.truncate(self.policy.sample_size);
        Sample::from_sorted_items(self.period_index, items)
    }

    /// Test-only injection point: draws with uniforms supplied per query
    /// instead of hashed ones. Errors if any query lacks a uniform.
    pub fn draw_sample_with_uniforms(
        &self,
        population: &PopulationSnapshot,
        uniforms: &BTreeMap<String, UnitUniform>,
    ) -> Result<Sample, Error> {
        let items = population
            .entries()
            .iter()
            .map(|(query, weight)| {
                let u = uniforms
                    .get(query)
                    .copied()
                    .ok_or_else(|| Error::MissingUniform(query.clone()))?;
                self.keyed_item(query, *weight, Some(u))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(self.finish_sample(items))
    }

    fn keyed_item(
        &self,
        query: &str,
        weight: Weight,
        injected: Option<UnitUniform>,
    ) -> Result<KeyedItem, Error> {
        let u = injected.unwrap_or_else(|| self.effective_uniform(query));
        let key_weight = match self.policy.mode {
            Mode::Srs => Weight::new(1),
            Mode::Wrs => weight,
        };
        Ok(KeyedItem {
            query: query.to_string(),
            weight,
            effective_uniform: u,
            key: es_order_key(u, key_weight)?,
        })
    }

    fn finish_sample(&self, mut items: Vec<KeyedItem>) -> Sample {
        exec::sort_keyed(&mut items, item_order);
        items.truncate(self.policy.sample_size);
        Sample::from_sorted_items(self.period_index, items)
    }
}

/// The naive "replace a random subset" strategy the comparison section
/// measures against: uniformly drop `ceil(fraction * len)` items, refill
/// with an independent WRS draw of the same count, and silently drop any
/// freshly drawn query that is already present. Deterministic in
/// `trial_seed` (removal ranks by `refresh_hash`, the refill draw keys by
/// `sample_hash`).
pub fn replace_random_subset_baseline(
    previous: &Sample,
    population: &PopulationSnapshot,
    fraction: Rational,
    trial_seed: &Seed,
) -> Result<Sample, Error> {
    if previous.is_empty() {
        return Err(Error::EmptySample);
    }
    if fraction == Rational::new(0, 1) || fraction > Rational::new(1, 1) {
        return Err(Error::InvalidFraction(format_ratio(&fraction)));
    }
    if population.len() < previous.len() {
        return Err(Error::PopulationSmallerThanSample {
            population: population.len(),
            sample: previous.len(),
        });
    }

    let replace_count = (fraction * Rational::from_integer(previous.len() as u64))
        .ceil()
        .to_integer() as usize;

    let mut ranked: Vec<&KeyedItem> = previous.items().iter().collect();
    ranked.sort_unstable_by(|a, b| {
        refresh_hash(trial_seed, &a.query)
            .value()
            .total_cmp(&refresh_hash(trial_seed, &b.query).value())
            .then_with(|| a.query.cmp(&b.query))
    });
    let kept: Vec<KeyedItem> = ranked[replace_count..].iter().map(|it| (*it).clone()).collect();
    let kept_queries: std::collections::BTreeSet<String> =
        kept.iter().map(|it| it.query.clone()).collect();

    let mut fresh = exec::map_collect(population.entries(), |(query, weight)| {
        let u = sample_hash(trial_seed, query);
        KeyedItem {
            query: query.clone(),
            weight: *weight,
            effective_uniform: u,
            key: es_order_key(u, *weight).expect("population weights are positive"),
        }
    });
    exec::sort_keyed(&mut fresh, item_order);
    fresh.truncate(replace_count);

    let mut merged = kept;
    merged.extend(
        fresh
            .into_iter()
            .filter(|it| !kept_queries.contains(&it.query)),
    );
    merged.sort_unstable_by(item_order);
    Ok(Sample::from_sorted_items(previous.period_index() + 1, merged))
}
