//! Command-line front end: initialize sampler state, draw period samples,
//! roll periods, compute reports, and run simulations. `sample` is
//! read-only; `roll` is the only command that mutates a state file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stable_sampling::analytics::{
    cdf_validity_parts, churn_model_table, inclusion_oracle, judgment_load_sets,
    overlap_query_sets,
};
use stable_sampling::io::{
    approaches_csv, cdf_csv, churn_model_csv, inclusion_csv, load_csv, manifest_toml,
    overlap_csv, read_population, read_sample, read_state, write_atomic, write_sample,
    write_state, SampleFile,
};
use stable_sampling::sampler::{format_ratio, parse_ratio, Rational};
use stable_sampling::simulate::{
    compare_approaches, run_timeline, CompareConfig, PopulationSpec, WeightDistribution,
};
use stable_sampling::{Mode, SamplerState, SamplingPolicy, Seed, Variant};

#[derive(Parser)]
#[command(
    name = "stable-sampling",
    version,
    about = "Stable and semi-stable SRS/WRS sampling over continuously refreshed query logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Srs,
    Wrs,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Srs => Mode::Srs,
            ModeArg::Wrs => Mode::Wrs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Plain,
    Stable,
    Semistable,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Plain => Variant::Plain,
            VariantArg::Stable => Variant::Stable,
            VariantArg::Semistable => Variant::SemiStable,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistributionArg {
    PowerLaw,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fresh sampler state file
    Init {
        #[arg(long)]
        namespace: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Wrs)]
        mode: ModeArg,
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Desired per-period refresh as a rational "p/q" (defaults to 0/1
        /// for stable and 1/1 for plain; required for semistable)
        #[arg(long)]
        refresh: Option<String>,
        #[arg(long, default_value_t = 1000)]
        size: usize,
        #[arg(long)]
        state: PathBuf,
    },
    /// Draw the current period's top-N sample (does not mutate the state)
    Sample {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        population: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Advance the state by exactly one period, in place
    Roll {
        #[arg(long)]
        state: PathBuf,
    },
    /// Overlap between two sample files of the same size
    Overlap {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Judgment load across sample files, in period order
    Load {
        /// Sample files ordered by period
        #[arg(required = true)]
        samples: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The analytic churn/overlap model table
    ChurnModel {
        /// One-period natural retention
        #[arg(long, default_value_t = 0.93)]
        base: f64,
        #[arg(long, default_value_t = 12)]
        horizon: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Population volume-CDF against sample count-CDF
    ValidateCdf {
        #[arg(long)]
        population: PathBuf,
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a multi-period sampling timeline on a synthetic population
    Simulate(SimulateArgs),
    /// Measure the six sampling approaches on one synthetic sequence
    Compare(CompareArgs),
    /// Exact inclusion probabilities by successive-sampling enumeration
    Oracle {
        #[arg(long)]
        population: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PopulationSpecArgs {
    #[arg(long, default_value_t = 100_000)]
    universe: usize,
    #[arg(long, value_enum, default_value_t = DistributionArg::PowerLaw)]
    distribution: DistributionArg,
    /// Power-law exponent (heavier tail for smaller values)
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Upper weight bound for the uniform distribution
    #[arg(long, default_value_t = 1000)]
    max_weight: u64,
    /// Share of queries replaced by fresh ones each period
    #[arg(long, default_value_t = 0.07)]
    churn: f64,
    /// Multiplicative per-period weight noise bound
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value = "synthetic")]
    generator_seed: String,
}

impl PopulationSpecArgs {
    fn build(&self) -> Result<PopulationSpec> {
        let distribution = match self.distribution {
            DistributionArg::PowerLaw => WeightDistribution::PowerLaw { alpha: self.alpha },
            DistributionArg::Uniform => WeightDistribution::Uniform {
                max_weight: self.max_weight,
            },
        };
        Ok(PopulationSpec::new(
            self.universe,
            distribution,
            self.churn,
            self.jitter,
            Seed::new(self.generator_seed.clone())?,
        )?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Wrs)]
    mode: ModeArg,
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long)]
    refresh: Option<String>,
    #[arg(long, default_value_t = 1000)]
    size: usize,
    #[arg(long, default_value_t = 12)]
    periods: usize,
    #[arg(long)]
    namespace: String,
    #[command(flatten)]
    population: PopulationSpecArgs,
    /// Directory for the report CSVs and the manifest
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 1000)]
    size: usize,
    #[arg(long, default_value_t = 12)]
    periods: usize,
    /// Refresh for the semi-stable approach and replacement fraction for
    /// the random-subset baseline
    #[arg(long, default_value = "1/10")]
    refresh: String,
    /// Resample cadence of the keep-then-change approach
    #[arg(long, default_value_t = 12)]
    cadence: usize,
    #[arg(long, default_value = "compare")]
    namespace: String,
    #[command(flatten)]
    population: PopulationSpecArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Init {
            namespace,
            mode,
            variant,
            refresh,
            size,
            state,
        } => init(&namespace, mode, variant, refresh.as_deref(), size, &state),
        Command::Sample {
            state,
            population,
            out,
        } => sample(&state, &population, &out),
        Command::Roll { state } => roll(&state),
        Command::Overlap { a, b, out } => overlap(&a, &b, out.as_deref()),
        Command::Load { samples, out } => load(&samples, out.as_deref()),
        Command::ChurnModel { base, horizon, out } => churn_model(base, horizon, out.as_deref()),
        Command::ValidateCdf {
            population,
            sample,
            out,
        } => validate_cdf(&population, &sample, out.as_deref()),
        Command::Simulate(args) => simulate(&args),
        Command::Compare(args) => compare(&args),
        Command::Oracle { population, m, out } => oracle(&population, m, out.as_deref()),
    }
}

fn build_policy(
    mode: ModeArg,
    variant: VariantArg,
    refresh: Option<&str>,
    size: usize,
) -> Result<SamplingPolicy> {
    let variant: Variant = variant.into();
    let refresh = match refresh {
        Some(text) => parse_ratio(text)?,
        None => match variant {
            Variant::Plain => Rational::new(1, 1),
            Variant::Stable => Rational::new(0, 1),
            Variant::SemiStable => bail!("--refresh p/q is required for --variant semistable"),
        },
    };
    Ok(SamplingPolicy::new(mode.into(), variant, refresh, size)?)
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => {
            write_atomic(path, contents)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn init(
    namespace: &str,
    mode: ModeArg,
    variant: VariantArg,
    refresh: Option<&str>,
    size: usize,
    state_path: &Path,
) -> Result<()> {
    let policy = build_policy(mode, variant, refresh, size)?;
    let state = SamplerState::init(policy, namespace);
    write_state(state_path, &state)
        .with_context(|| format!("writing state to {}", state_path.display()))?;
    Ok(())
}

fn sample(state_path: &Path, population_path: &Path, out: &Path) -> Result<()> {
    let state = read_state(state_path)
        .with_context(|| format!("loading state from {}", state_path.display()))?;
    let population = read_population(population_path)
        .with_context(|| format!("loading population from {}", population_path.display()))?;
    let n = state.policy().sample_size();
    if population.len() < n {
        eprintln!(
            "warning: population has {} queries, fewer than the sample size {n}; \
             the sample will be the whole population",
            population.len()
        );
    }
    let drawn = state.draw_sample(&population);
    let file = SampleFile::from_sample(&drawn, state.policy());
    write_sample(out, &file).with_context(|| format!("writing sample to {}", out.display()))?;
    Ok(())
}

fn roll(state_path: &Path) -> Result<()> {
    let state = read_state(state_path)
        .with_context(|| format!("loading state from {}", state_path.display()))?;
    let next = state.advance_period();
    write_state(state_path, &next)
        .with_context(|| format!("rewriting state at {}", state_path.display()))?;
    eprintln!(
        "advanced to period {} (accumulator {})",
        next.period_index(),
        format_ratio(&next.refresh_accumulator())
    );
    Ok(())
}

fn overlap(a_path: &Path, b_path: &Path, out: Option<&Path>) -> Result<()> {
    let a = read_sample(a_path).with_context(|| format!("reading {}", a_path.display()))?;
    let b = read_sample(b_path).with_context(|| format!("reading {}", b_path.display()))?;
    if a.records.len() != b.records.len() {
        bail!(
            "samples have different sizes: {} vs {}",
            a.records.len(),
            b.records.len()
        );
    }
    if a.records.is_empty() {
        bail!("samples are empty");
    }
    let value = overlap_query_sets(&a.query_set(), &b.query_set(), a.records.len());
    let csv = format!(
        "period_a,period_b,overlap\n{},{},{}\n",
        a.period_index, b.period_index, value
    );
    emit(out, &csv)
}

fn load(sample_paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let files: Vec<SampleFile> = sample_paths
        .iter()
        .map(|p| read_sample(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<_>>()?;
    let report = judgment_load_sets(
        files
            .iter()
            .map(|f| (f.period_index, f.query_set())),
    );
    emit(out, &load_csv(&report))
}

fn churn_model(base: f64, horizon: u32, out: Option<&Path>) -> Result<()> {
    if !(base > 0.0 && base <= 1.0) {
        bail!("--base must be in (0, 1], got {base}");
    }
    if horizon == 0 {
        bail!("--horizon must be at least 1");
    }
    let rows = churn_model_table(base, horizon);
    emit(out, &churn_model_csv(&rows))
}

fn validate_cdf(population_path: &Path, sample_path: &Path, out: Option<&Path>) -> Result<()> {
    let population = read_population(population_path)
        .with_context(|| format!("loading population from {}", population_path.display()))?;
    let sample = read_sample(sample_path)
        .with_context(|| format!("reading {}", sample_path.display()))?;
    let report = cdf_validity_parts(
        &population,
        sample.records.iter().map(|r| r.query.as_str()),
        sample.records.len(),
    )?;
    eprintln!("max deviation: {}", report.max_deviation);
    emit(out, &cdf_csv(&report))
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let policy = build_policy(args.mode, args.variant, args.refresh.as_deref(), args.size)?;
    let spec = args.population.build()?;
    let run = run_timeline(&policy, &spec, args.periods, &args.namespace)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let write = |name: &str, contents: &str| -> Result<()> {
        write_atomic(&args.out_dir.join(name), contents)
            .with_context(|| format!("writing {name}"))?;
        Ok(())
    };
    write("manifest.toml", &manifest_toml(&policy, &spec, args.periods, &args.namespace))?;
    write("overlap_first_vs_each.csv", &overlap_csv(&run.first_vs_each))?;
    write("overlap_consecutive.csv", &overlap_csv(&run.consecutive))?;
    write("judgment_load.csv", &load_csv(&run.load))?;
    for (period, cdf) in run.cdfs.iter().enumerate() {
        write(&format!("cdf_period_{period:02}.csv"), &cdf_csv(cdf))?;
    }
    eprintln!(
        "simulated {} periods into {}",
        args.periods,
        args.out_dir.display()
    );
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let spec = args.population.build()?;
    let config = CompareConfig {
        sample_size: args.size,
        refresh: parse_ratio(&args.refresh)?,
        resample_cadence: args.cadence,
        namespace: args.namespace.clone(),
    };
    let outcomes = compare_approaches(&spec, args.periods, &config)?;
    emit(args.out.as_deref(), &approaches_csv(&outcomes))
}

fn oracle(population_path: &Path, m: usize, out: Option<&Path>) -> Result<()> {
    let population = read_population(population_path)
        .with_context(|| format!("loading population from {}", population_path.display()))?;
    let probabilities = inclusion_oracle(&population, m)?;
    emit(out, &inclusion_csv(&probabilities))
}
