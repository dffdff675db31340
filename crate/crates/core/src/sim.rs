//! Experiment orchestration: construction sweeps and pool-failure runs.
//!
//! Pools are independent work units and run in parallel. Pool `i` of cell
//! `(n, delta)` draws everything from streams keyed by
//! `pool_seed(master_seed, n, delta, i)`, and results are collected in pool
//! order, so counts are identical for any worker count.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::channels::{ChannelKind, ChannelSpec};
use crate::error::{invalid, Result};
use crate::polar::{default_threshold, monte_carlo_construct, ConstructionEstimate, PolarCode};
use crate::rng;
use crate::scalar::{log2_exact, Scalar};
use crate::weave::{self, BitMatrix, Resync};
use crate::STRAND_LENGTH;

/// Deletion probabilities used for the pool-failure tables.
pub const TABLE_DELTAS: [f64; 7] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];

pub const DEFAULT_POOLS: usize = 1000;
pub const DEFAULT_SAMPLES: usize = 1000;
/// Total construction blocks of the high-accuracy profile.
pub const HIGH_ACCURACY_SAMPLES: usize = 256_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<T> {
    pub n: usize,
    pub delta_list: Vec<T>,
    pub error_kind: ChannelKind,
    pub pools: usize,
    pub construction_samples: usize,
    pub master_seed: u64,
    /// Info-set threshold; `None` means `1 / (256 n)`.
    pub threshold: Option<T>,
}

impl<T: Scalar> ExperimentConfig<T> {
    pub fn new(n: usize, delta_list: Vec<T>, error_kind: ChannelKind) -> Self {
        Self {
            n,
            delta_list,
            error_kind,
            pools: DEFAULT_POOLS,
            construction_samples: DEFAULT_SAMPLES,
            master_seed: 0,
            threshold: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if log2_exact(self.n).is_none() {
            return invalid(format!("n = {} is not a power of two", self.n));
        }
        if self.pools == 0 {
            return invalid("at least one pool is required");
        }
        if self.construction_samples == 0 {
            return invalid("at least one construction sample is required");
        }
        if let Some(bad) = self.delta_list.iter().find(|&&d| !(d >= T::zero() && d < T::lit(0.5))) {
            return invalid(format!("delta {bad} outside [0, 1/2)"));
        }
        if let Some(t) = self.threshold {
            if t.is_nan() || t <= T::zero() {
                return invalid(format!("threshold {t} must be positive"));
            }
        }
        Ok(())
    }

    pub fn threshold(&self) -> T {
        self.threshold.unwrap_or_else(|| default_threshold(self.n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult<T> {
    pub n: usize,
    pub delta: T,
    pub error_kind: ChannelKind,
    pub code_rate: T,
    pub failure_count: usize,
    pub pools_run: usize,
    pub seed: u64,
    pub wall_time: Duration,
    /// Indices of the pools that failed, ascending.
    pub failed_pools: Vec<usize>,
}

impl<T: Scalar> ExperimentResult<T> {
    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        (
            self.n,
            self.error_kind,
            self.failure_count,
            self.pools_run,
            self.seed,
            &self.failed_pools,
        ) == (
            other.n,
            other.error_kind,
            other.failure_count,
            other.pools_run,
            other.seed,
            &other.failed_pools,
        ) && self.delta == other.delta
            && self.code_rate == other.code_rate
    }
}

pub fn pool_seed(master_seed: u64, n: usize, delta: f64, pool_index: usize) -> u64 {
    rng::derive_seed(&[master_seed, n as u64, rng::delta_key(delta), pool_index as u64])
}

/// What happened to one simulated pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolOutcome {
    pub failed: bool,
    pub bit_errors: usize,
    pub final_offsets: Vec<usize>,
}

/// Random info, encode, per-strand channel, decode, compare.
pub fn simulate_pool<T: Scalar>(code: &PolarCode<T>, channel: &ChannelSpec<T>, seed: u64) -> Result<PoolOutcome> {
    let info = BitMatrix::random(STRAND_LENGTH, code.k(), &mut rng::stream(&[seed, 0]));
    let pool = weave::weave_encode(&info, code)?;
    let received = pool.transmit(channel, |s| rng::stream(&[seed, 1, s as u64]));
    let decoded = weave::weave_decode(&received, code, Resync::for_kind(channel.kind()))?;
    let bit_errors = decoded.info.hamming(&info)?;
    Ok(PoolOutcome {
        failed: weave::pool_failure_check(&decoded.info, &info)?,
        bit_errors,
        final_offsets: decoded.offsets.offsets,
    })
}

/// Quaternary variant: two independent info matrices sharing one strand set.
pub fn simulate_quaternary_pool<T: Scalar>(
    code: &PolarCode<T>,
    channel: &ChannelSpec<T>,
    seed: u64,
) -> Result<weave::QuaternaryOutcome> {
    let mut info_rng = rng::stream(&[seed, 0]);
    let real = BitMatrix::random(STRAND_LENGTH, code.k(), &mut info_rng);
    let imag = BitMatrix::random(STRAND_LENGTH, code.k(), &mut info_rng);
    weave::weave_quaternary(&real, &imag, code, channel, &mut rng::stream(&[seed, 1]))
}

fn run_pools<T: Scalar, F>(
    config: &ExperimentConfig<T>,
    code: &PolarCode<T>,
    delta: T,
    simulate: F,
) -> Result<ExperimentResult<T>>
where
    F: Fn(&PolarCode<T>, &ChannelSpec<T>, u64) -> Result<bool> + Sync,
{
    config.validate()?;
    if code.n() != config.n {
        return invalid(format!("code length {} does not match n = {}", code.n(), config.n));
    }
    let channel = ChannelSpec::new(config.error_kind, delta)?;
    let delta_f = delta.to_f64_lossy();
    let start = Instant::now();
    let outcomes: Vec<bool> = (0..config.pools)
        .into_par_iter()
        .map(|i| simulate(code, &channel, pool_seed(config.master_seed, config.n, delta_f, i)))
        .collect::<Result<_>>()?;
    let failed_pools: Vec<usize> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i)
        .collect();
    Ok(ExperimentResult {
        n: config.n,
        delta,
        error_kind: config.error_kind,
        code_rate: code.rate(),
        failure_count: failed_pools.len(),
        pools_run: config.pools,
        seed: config.master_seed,
        wall_time: start.elapsed(),
        failed_pools,
    })
}

/// Runs `config.pools` pools through a channel of probability `delta` with an
/// already constructed code.
pub fn run_pool_experiment<T: Scalar>(
    config: &ExperimentConfig<T>,
    code: &PolarCode<T>,
    delta: T,
) -> Result<ExperimentResult<T>> {
    run_pools(config, code, delta, |code, ch, seed| {
        Ok(simulate_pool(code, ch, seed)?.failed)
    })
}

/// Same protocol with quaternary strands split into two binary pools.
pub fn run_quaternary_experiment<T: Scalar>(
    config: &ExperimentConfig<T>,
    code: &PolarCode<T>,
    delta: T,
) -> Result<ExperimentResult<T>> {
    run_pools(config, code, delta, |code, ch, seed| {
        Ok(simulate_quaternary_pool(code, ch, seed)?.failed())
    })
}

/// Builds the code for design probability `delta` as configured.
pub fn construct_code<T: Scalar>(config: &ExperimentConfig<T>, delta: T) -> Result<PolarCode<T>> {
    config.validate()?;
    monte_carlo_construct(config.n, delta, config.construction_samples, config.master_seed)?
        .into_code(config.threshold())
}

/// Constructs a code per delta (design = channel probability) and runs the pools.
pub fn run_pool_grid<T: Scalar>(config: &ExperimentConfig<T>) -> Result<Vec<ExperimentResult<T>>> {
    config.validate()?;
    config
        .delta_list
        .iter()
        .map(|&delta| {
            let code = construct_code(config, delta)?;
            let result = run_pool_experiment(config, &code, delta)?;
            eprintln!(
                "n={} delta={} {}: {}/{} pools failed (rate {:.4}, {:.1?})",
                result.n,
                delta,
                result.error_kind,
                result.failure_count,
                result.pools_run,
                result.code_rate,
                result.wall_time
            );
            Ok(result)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<T> {
    pub ns: Vec<usize>,
    pub deltas: Vec<T>,
    pub samples: usize,
    pub seed: u64,
    /// Info-set threshold as a function of `n`; `None` means `1 / (256 n)`.
    pub threshold: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint<T> {
    pub n: usize,
    pub delta: T,
    pub k: usize,
    pub rate: T,
    pub mean_equivocation: T,
    pub mean_std_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub rates: Vec<RatePoint<T>>,
    pub estimates: Vec<ConstructionEstimate<T>>,
}

/// Constructs a code for every `(n, delta)` and records its rate.
pub fn run_construction_sweep<T: Scalar>(config: &SweepConfig<T>) -> Result<SweepResult<T>> {
    if config.samples == 0 {
        return invalid("at least one construction sample is required");
    }
    let mut rates = Vec::new();
    let mut estimates = Vec::new();
    for &n in &config.ns {
        for &delta in &config.deltas {
            let estimate = monte_carlo_construct(n, delta, config.samples, config.seed)?;
            let threshold = config.threshold.unwrap_or_else(|| default_threshold(n));
            let code = estimate.clone().into_code(threshold)?;
            rates.push(RatePoint {
                n,
                delta,
                k: code.k(),
                rate: code.rate(),
                mean_equivocation: estimate.mean_equivocation(),
                mean_std_error: estimate.mean_std_error(),
            });
            estimates.push(estimate);
        }
    }
    Ok(SweepResult { rates, estimates })
}

/// Lower display limit of the semi-log equivocation chart.
pub fn semilog_floor<T: Scalar>() -> T {
    T::lit(1e-300).max(T::min_positive_value())
}

/// Sorted equivocations as `(j / n, H)` pairs; with `floor`, values are clamped
/// from below for log-scale display.
pub fn equivocation_histogram<T: Scalar>(equivocations: &[T], floor: Option<T>) -> Vec<(T, T)> {
    let mut sorted = equivocations.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::from_count(sorted.len().max(1));
    sorted
        .into_iter()
        .enumerate()
        .map(|(j, h)| (T::from_count(j) / n, floor.map_or(h, |f| h.max(f))))
        .collect()
}

/// Fraction of bit channels with equivocation strictly inside `(lo, hi)`.
pub fn unpolarized_fraction<T: Scalar>(equivocations: &[T], lo: T, hi: T) -> T {
    let count = equivocations.iter().filter(|&&h| h > lo && h < hi).count();
    T::from_count(count) / T::from_count(equivocations.len().max(1))
}

pub const RESULT_HEADER: [&str; 7] = ["n", "delta", "error_kind", "pools", "failures", "code_rate", "seed"];

/// Writes result rows, preceded by `# ...` comment lines.
pub fn write_results_csv<T: Scalar, W: Write>(
    mut out: W,
    results: &[ExperimentResult<T>],
    comments: &[String],
) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in results {
        w.write_record([
            r.n.to_string(),
            r.delta.to_f64_lossy().to_string(),
            r.error_kind.to_string(),
            r.pools_run.to_string(),
            r.failure_count.to_string(),
            r.code_rate.to_f64_lossy().to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
