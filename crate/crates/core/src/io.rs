//! File formats: TSV populations, TSV sample files, the TOML sampler-state
//! file, and CSV report serialization. All text is UTF-8 with LF line
//! endings; writes are whole-file atomic (write to a temp file in the same
//! directory, then rename).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::{CdfReport, ChurnModelRow, LoadReport, OverlapReport};
use crate::error::Error;
use crate::keys::Seed;
use crate::sampler::{
    format_ratio, parse_ratio, PopulationSnapshot, Sample, SamplerState, SamplingPolicy,
};
use crate::simulate::{ApproachOutcome, PopulationSpec, WeightDistribution};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record (expected \"query<TAB>weight\")")]
    Malformed { line: usize },
    #[error("line {line}: duplicate query {query:?}")]
    DuplicateQuery { line: usize, query: String },
    #[error("line {line}: weight must be a positive integer (zero impressions means absent)")]
    NonPositiveWeight { line: usize },
    #[error("line {line}: empty query")]
    EmptyQuery { line: usize },
    #[error("invalid file content: {0}")]
    Invalid(String),
    #[error(transparent)]
    Domain(#[from] Error),
}

/// Atomically replaces `path` with `contents`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), std::io::Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, contents.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads a population file: one `query TAB weight` record per line.
/// The returned snapshot is stamped with period 0; callers tracking real
/// periods re-stamp via [`PopulationSnapshot::new`].
pub fn read_population(path: &Path) -> Result<PopulationSnapshot, FileError> {
    let text = fs::read_to_string(path)?;
    let mut entries: Vec<(String, u64)> = Vec::new();
    let mut seen: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut fields = line.split('\t');
        let (query, weight) = match (fields.next(), fields.next(), fields.next()) {
            (Some(q), Some(w), None) => (q, w),
            _ => return Err(FileError::Malformed { line: line_no }),
        };
        if query.is_empty() {
            return Err(FileError::EmptyQuery { line: line_no });
        }
        let weight = match weight.parse::<i128>() {
            Ok(w) if w <= 0 => return Err(FileError::NonPositiveWeight { line: line_no }),
            Ok(w) if w <= u64::MAX as i128 => w as u64,
            _ => return Err(FileError::Malformed { line: line_no }),
        };
        if seen.insert(query, line_no).is_some() {
            return Err(FileError::DuplicateQuery {
                line: line_no,
                query: query.to_string(),
            });
        }
        entries.push((query.to_string(), weight));
    }
    Ok(PopulationSnapshot::new(0, entries)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct StateDoc {
    namespace: String,
    s1: String,
    s2: String,
    refresh_accumulator: String,
    period_index: u64,
    policy: PolicyDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct PolicyDoc {
    mode: String,
    variant: String,
    desired_refresh: String,
    sample_size: usize,
}

impl PolicyDoc {
    fn of(policy: &SamplingPolicy) -> PolicyDoc {
        PolicyDoc {
            mode: policy.mode().to_string(),
            variant: policy.variant().to_string(),
            desired_refresh: format_ratio(&policy.desired_refresh()),
            sample_size: policy.sample_size(),
        }
    }

    fn parse(&self) -> Result<SamplingPolicy, Error> {
        SamplingPolicy::new(
            self.mode.parse()?,
            self.variant.parse()?,
            parse_ratio(&self.desired_refresh)?,
            self.sample_size,
        )
    }
}

/// Serializes a sampler state to its TOML document.
pub fn state_to_string(state: &SamplerState) -> String {
    let doc = StateDoc {
        namespace: state.namespace().to_string(),
        s1: state.s1().as_str().to_string(),
        s2: state.s2().as_str().to_string(),
        refresh_accumulator: format_ratio(&state.refresh_accumulator()),
        period_index: state.period_index(),
        policy: PolicyDoc::of(state.policy()),
    };
    toml::to_string(&doc).expect("state serializes to TOML")
}

pub fn write_state(path: &Path, state: &SamplerState) -> Result<(), FileError> {
    write_atomic(path, &state_to_string(state))?;
    Ok(())
}

/// Loads a sampler state, re-validating every invariant (accumulator below
/// 1, distinct seeds, policy consistency).
pub fn read_state(path: &Path) -> Result<SamplerState, FileError> {
    let text = fs::read_to_string(path)?;
    state_from_str(&text)
}

pub fn state_from_str(text: &str) -> Result<SamplerState, FileError> {
    let doc: StateDoc =
        toml::from_str(text).map_err(|e| FileError::Invalid(e.to_string()))?;
    let policy = doc.policy.parse()?;
    let state = SamplerState::from_parts(
        Seed::new(doc.s1)?,
        Seed::new(doc.s2)?,
        parse_ratio(&doc.refresh_accumulator)?,
        doc.period_index,
        policy,
        doc.namespace,
    )?;
    Ok(state)
}

/// One row of a persisted sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFileRecord {
    pub rank: usize,
    pub query: String,
    pub weight: u64,
    /// The order key as its `ln(u)/w` value.
    pub key: f64,
}

/// A sample as persisted: period, policy digest, ranked rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub period_index: u64,
    pub policy_digest: String,
    pub records: Vec<SampleFileRecord>,
}

impl SampleFile {
    pub fn from_sample(sample: &Sample, policy: &SamplingPolicy) -> SampleFile {
        SampleFile {
            period_index: sample.period_index(),
            policy_digest: policy.digest(),
            records: sample
                .items()
                .iter()
                .enumerate()
                .map(|(i, item)| SampleFileRecord {
                    rank: i + 1,
                    query: item.query.clone(),
                    weight: item.weight.value(),
                    key: item.key.value(),
                })
                .collect(),
        }
    }

    pub fn query_set(&self) -> std::collections::BTreeSet<&str> {
        self.records.iter().map(|r| r.query.as_str()).collect()
    }

    pub fn parse(text: &str) -> Result<SampleFile, FileError> {
        let mut lines = text.lines().enumerate();
        let period_index = parse_header(&mut lines, "# period")?
            .parse::<u64>()
            .map_err(|_| FileError::Invalid("period header is not an integer".into()))?;
        let policy_digest = parse_header(&mut lines, "# policy")?;
        match lines.next() {
            Some((_, "rank\tquery\tweight\tkey")) => {}
            _ => return Err(FileError::Invalid("missing column header".into())),
        }

        let mut records = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            let &[rank, query, weight, key] = fields.as_slice() else {
                return Err(FileError::Malformed { line: line_no });
            };
            let record = SampleFileRecord {
                rank: rank.parse().map_err(|_| FileError::Malformed { line: line_no })?,
                query: query.to_string(),
                weight: weight.parse().map_err(|_| FileError::Malformed { line: line_no })?,
                key: key.parse().map_err(|_| FileError::Malformed { line: line_no })?,
            };
            if record.rank != records.len() + 1 {
                return Err(FileError::Invalid(format!(
                    "line {line_no}: rank {} out of order",
                    record.rank
                )));
            }
            if let Some(prev) = records.last() {
                let prev: &SampleFileRecord = prev;
                if record.key > prev.key {
                    return Err(FileError::Invalid(format!(
                        "line {line_no}: keys must be non-increasing"
                    )));
                }
            }
            records.push(record);
        }
        Ok(SampleFile {
            period_index,
            policy_digest,
            records,
        })
    }
}

impl std::fmt::Display for SampleFile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "# period\t{}", self.period_index)?;
        writeln!(f, "# policy\t{}", self.policy_digest)?;
        writeln!(f, "rank\tquery\tweight\tkey")?;
        for r in &self.records {
            writeln!(f, "{}\t{}\t{}\t{}", r.rank, r.query, r.weight, r.key)?;
        }
        Ok(())
    }
}

fn parse_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    name: &str,
) -> Result<String, FileError> {
    match lines.next() {
        Some((_, line)) => match line.strip_prefix(name).and_then(|r| r.strip_prefix('\t')) {
            Some(value) => Ok(value.to_string()),
            None => Err(FileError::Invalid(format!("expected {name:?} header"))),
        },
        None => Err(FileError::Invalid(format!("missing {name:?} header"))),
    }
}

pub fn write_sample(path: &Path, file: &SampleFile) -> Result<(), FileError> {
    write_atomic(path, &file.to_string())?;
    Ok(())
}

pub fn read_sample(path: &Path) -> Result<SampleFile, FileError> {
    let text = fs::read_to_string(path)?;
    SampleFile::parse(&text)
}

pub fn overlap_csv(report: &OverlapReport) -> String {
    let mut out = String::from("period_a,period_b,overlap\n");
    for p in &report.pairs {
        let _ = writeln!(out, "{},{},{}", p.period_a, p.period_b, p.overlap);
    }
    out
}

pub fn load_csv(report: &LoadReport) -> String {
    let mut out = String::from("period,new_judgments\n");
    for e in &report.per_period {
        let _ = writeln!(out, "{},{}", e.period_index, e.new_judgments);
    }
    out
}

/// Seven columns per row, matching the analytic churn model.
pub fn churn_model_csv(rows: &[ChurnModelRow]) -> String {
    let mut out = String::from(
        "month_delta,natural_retention,natural_churn,refresh,refresh_churn,combined_churn,final_overlap\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.month_delta,
            r.natural_retention,
            r.natural_churn,
            r.refresh,
            r.refresh_churn,
            r.combined_churn,
            r.final_overlap
        );
    }
    out
}

pub fn cdf_csv(report: &CdfReport) -> String {
    let mut out = String::from("threshold,population_volume_cdf,sample_count_cdf\n");
    for i in 0..report.thresholds.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            report.thresholds[i], report.population_volume_cdf[i], report.sample_count_cdf[i]
        );
    }
    out
}

pub fn approaches_csv(outcomes: &[ApproachOutcome]) -> String {
    let mut out = String::from("approach,name,mean_consecutive_overlap,mean_judgment_load\n");
    for o in outcomes {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            o.id, o.name, o.mean_consecutive_overlap, o.mean_judgment_load
        );
    }
    out
}

pub fn inclusion_csv(frequencies: &std::collections::BTreeMap<String, f64>) -> String {
    let mut out = String::from("query,probability\n");
    for (q, p) in frequencies {
        let _ = writeln!(out, "{q},{p:.6}");
    }
    out
}

#[derive(Debug, Serialize)]
struct ManifestDoc {
    namespace: String,
    periods: usize,
    policy: PolicyDoc,
    spec: SpecDoc,
}

#[derive(Debug, Serialize)]
struct SpecDoc {
    universe_size: usize,
    distribution: String,
    monthly_churn: f64,
    weight_jitter: f64,
    generator_seed: String,
}

/// TOML manifest describing a simulation run, for reproducibility.
pub fn manifest_toml(
    policy: &SamplingPolicy,
    spec: &PopulationSpec,
    periods: usize,
    namespace: &str,
) -> String {
    let distribution = match spec.weight_distribution {
        WeightDistribution::PowerLaw { alpha } => format!("power-law(alpha={alpha})"),
        WeightDistribution::Uniform { max_weight } => format!("uniform(max={max_weight})"),
    };
    let doc = ManifestDoc {
        namespace: namespace.to_string(),
        periods,
        policy: PolicyDoc::of(policy),
        spec: SpecDoc {
            universe_size: spec.universe_size,
            distribution,
            monthly_churn: spec.monthly_churn,
            weight_jitter: spec.weight_jitter,
            generator_seed: spec.generator_seed.as_str().to_string(),
        },
    };
    toml::to_string(&doc).expect("manifest serializes to TOML")
}
