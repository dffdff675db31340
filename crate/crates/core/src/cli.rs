//! Command-line front end: `construct`, `rates`, `simulate` and `figures`.
//!
//! Every command writes CSV with a header row, preceded by a `# ...` line that
//! records the seed and parameters. Output goes to `--out` or standard output;
//! progress goes to standard error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::channels::ChannelKind;
use crate::error::{Error, Result};
use crate::polar::{self, default_threshold, PolarCode};
use crate::rates::{self, Alphabet, FamilyKind, RateFamily};
use crate::sim::{self, ExperimentConfig, SweepConfig};
use crate::STRAND_LENGTH;

pub const EXIT_OK: i32 = 0;
/// Reserved for decode-experiment anomalies.
pub const EXIT_ANOMALY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GENOWEAVE_THREADS";

/// Parses `0.01` or `1%` into a probability.
pub fn parse_delta(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let value = match s.strip_suffix('%') {
        Some(num) => {
            num.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad percentage `{s}`: {e}"))?;
            format!("{}e-2", num.trim()).parse::<f64>().map_err(|e| e.to_string())?
        }
        None => s.parse::<f64>().map_err(|e| format!("bad probability `{s}`: {e}"))?,
    };
    if !(0.0..1.0).contains(&value) {
        return Err(format!("probability `{s}` outside [0, 1)"));
    }
    Ok(value)
}

fn parse_power_of_two(s: &str) -> std::result::Result<usize, String> {
    let n: usize = s.trim().parse().map_err(|e| format!("bad block length `{s}`: {e}"))?;
    if !n.is_power_of_two() {
        return Err(format!("block length {n} is not a power of two"));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Explicit,
    Implicit,
    Putative,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Explicit => FamilyKind::Explicit,
            FamilyArg::Implicit => FamilyKind::Implicit,
            FamilyArg::Putative => FamilyKind::Putative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorsArg {
    Deletion,
    Insertion,
    Substitution,
}

impl From<ErrorsArg> for ChannelKind {
    fn from(e: ErrorsArg) -> Self {
        match e {
            ErrorsArg::Deletion => ChannelKind::Deletion,
            ErrorsArg::Insertion => ChannelKind::Insertion,
            ErrorsArg::Substitution => ChannelKind::Substitution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Normalized redundancy against d for every family.
    Scalar,
    /// Binary concatenation rate per d, three families.
    Concat2,
    /// Quaternary concatenation rate per d, three families.
    Concat4,
    /// Sorted bit-channel equivocations at 1%.
    Equiv,
    /// Binary envelopes, BSC capacity and constructed polar rates.
    All2,
    /// Quaternary envelopes, QSC and BSC capacity and constructed polar rates.
    All4,
}

#[derive(Debug, Parser)]
#[command(name = "genoweave", version, about = "Cross-strand polar coding for DNA pools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo polar construction; writes `index,equivocation`.
    Construct {
        #[arg(long, value_parser = parse_power_of_two)]
        n: usize,
        /// Design crossover probability, e.g. `0.01` or `1%`.
        #[arg(long, value_parser = parse_delta)]
        delta: f64,
        #[arg(long, default_value_t = sim::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concatenation rates: `delta,d,rate` grid with the envelope alongside.
    Rates {
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, value_enum, default_value_t = FamilyArg::Explicit)]
        family: FamilyArg,
        /// Largest d listed in the grid (the envelope always scans all d).
        #[arg(long, default_value_t = 32)]
        d_max: usize,
        #[arg(long, value_parser = parse_delta, default_value = "0.0001")]
        delta_min: f64,
        #[arg(long, value_parser = parse_delta, default_value = "0.2")]
        delta_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pool-failure experiment: `n,delta,error_kind,pools,failures,code_rate,seed`.
    Simulate {
        #[arg(long, value_parser = parse_power_of_two)]
        n: usize,
        /// Channel probability; repeat or comma-separate for several cells.
        #[arg(long, value_parser = parse_delta, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ErrorsArg::Deletion)]
        errors: ErrorsArg,
        #[arg(long, default_value_t = sim::DEFAULT_POOLS)]
        pools: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Equivocation CSV from `construct`; otherwise a code is built per delta.
        #[arg(long)]
        code: Option<PathBuf>,
        /// Design probability for `--code` files that do not record one.
        #[arg(long, value_parser = parse_delta)]
        design_delta: Option<f64>,
        /// Construction samples when no `--code` is given.
        #[arg(long, default_value_t = sim::DEFAULT_SAMPLES)]
        samples: usize,
        /// 4 runs quaternary strands as two binary parts.
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot data for the rate and equivocation charts.
    Figures {
        #[arg(long, value_enum)]
        which: Figure,
        /// Block lengths for constructed curves.
        #[arg(long, value_parser = parse_power_of_two, value_delimiter = ',', default_value = "256,4096")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = sim::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        d_max: usize,
        #[arg(long, value_parser = parse_delta, default_value = "0.001")]
        delta_min: f64,
        #[arg(long, value_parser = parse_delta, default_value = "0.2")]
        delta_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open_out<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn write_rows<W: Write + ?Sized>(out: &mut W, comment: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "# {comment}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    x.to_string()
}

fn family_rows(family: RateFamily, deltas: &[f64], d_max: usize) -> Result<Vec<Vec<String>>> {
    let d_max = d_max.min(STRAND_LENGTH);
    let grid = rates::concat_grid(family, deltas, 1..=d_max, STRAND_LENGTH)?;
    let envelope = rates::envelope_curve(family, deltas, STRAND_LENGTH)?;
    Ok(grid
        .iter()
        .map(|p| {
            let env = &envelope[deltas.iter().position(|&d| d == p.delta).expect("delta on grid")];
            vec![
                num(p.delta),
                p.d.to_string(),
                num(p.rate),
                num(env.rate),
                env.opt_d.to_string(),
            ]
        })
        .collect())
}

fn run_construct(n: usize, delta: f64, samples: usize, seed: u64, out: &mut dyn Write) -> Result<()> {
    if delta > 0.5 {
        return Err(Error::InvalidArgument(format!("design delta {delta} exceeds 1/2")));
    }
    let estimate = polar::monte_carlo_construct(n, delta, samples, seed)?;
    let threshold: f64 = default_threshold(n);
    let k = polar::select_info_set(&estimate.equivocations, threshold)?.len();
    let comment = format!(
        "seed={seed} n={n} delta={delta} samples={samples} threshold={threshold} k={k} rate={}",
        k as f64 / n as f64
    );
    polar::write_equivocations_csv(out, &estimate.equivocations, &[comment])
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    n: usize,
    deltas: &[f64],
    errors: ChannelKind,
    pools: usize,
    seed: u64,
    code_path: Option<&PathBuf>,
    design_delta: Option<f64>,
    samples: usize,
    q: u32,
    out: &mut dyn Write,
) -> Result<()> {
    let alphabet = Alphabet::from_size(q)?;
    let mut config = ExperimentConfig::new(n, deltas.to_vec(), errors);
    config.pools = pools;
    config.master_seed = seed;
    config.construction_samples = samples;
    config.validate()?;

    let fixed_code = match code_path {
        Some(path) => {
            let file = polar::read_equivocations_csv::<f64, _>(File::open(path)?)?;
            if file.equivocations.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "code file has {} channels but --n is {n}",
                    file.equivocations.len()
                )));
            }
            let design = match (design_delta, file.meta("delta")) {
                (Some(d), _) => d,
                (None, Some(d)) => parse_delta(d).map_err(Error::InvalidArgument)?,
                (None, None) => deltas[0],
            };
            Some(PolarCode::from_equivocations(
                design,
                file.equivocations,
                config.threshold(),
            )?)
        }
        None => None,
    };

    let mut results = Vec::new();
    for &delta in deltas {
        let code = match &fixed_code {
            Some(c) => c.clone(),
            None => sim::construct_code(&config, design_delta.unwrap_or(delta))?,
        };
        let result = match alphabet {
            Alphabet::Binary => sim::run_pool_experiment(&config, &code, delta)?,
            Alphabet::Quaternary => sim::run_quaternary_experiment(&config, &code, delta)?,
        };
        eprintln!(
            "n={n} delta={delta} {errors} q={q}: {}/{} pools failed (rate {:.4}, {:.1?})",
            result.failure_count, result.pools_run, result.code_rate, result.wall_time
        );
        results.push(result);
    }
    let comment = format!(
        "seed={seed} q={q} samples={} code={}",
        samples,
        code_path.map_or("constructed".to_string(), |p| p.display().to_string())
    );
    sim::write_results_csv(out, &results, &[comment])
}

#[allow(clippy::too_many_arguments)]
fn run_figures(
    which: Figure,
    ns: &[usize],
    samples: usize,
    seed: u64,
    d_max: usize,
    delta_min: f64,
    delta_max: f64,
    points: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let grid = || rates::log_grid(delta_min, delta_max, points);
    match which {
        Figure::Scalar => {
            let series = [
                ("lower_bound", RateFamily::binary(FamilyKind::Putative)),
                ("implicit", RateFamily::binary(FamilyKind::Implicit)),
                ("binary_explicit", RateFamily::binary(FamilyKind::Explicit)),
                ("quaternary_explicit", RateFamily::quaternary(FamilyKind::Explicit)),
            ];
            let mut rows = Vec::new();
            for (name, fam) in series {
                for d in 1..=6 {
                    rows.push(vec![
                        name.to_string(),
                        d.to_string(),
                        num(rates::normalized_redundancy(fam, d, STRAND_LENGTH)?),
                    ]);
                }
            }
            write_rows(
                out,
                &format!("seed={seed} ell={STRAND_LENGTH}"),
                &["series", "d", "normalized_redundancy"],
                &rows,
            )
        }
        Figure::Concat2 | Figure::Concat4 => {
            let alphabet = if which == Figure::Concat2 {
                Alphabet::Binary
            } else {
                Alphabet::Quaternary
            };
            let deltas = grid()?;
            let mut rows = Vec::new();
            for kind in FamilyKind::ALL {
                for r in family_rows(RateFamily::new(alphabet, kind), &deltas, d_max)? {
                    let mut row = vec![kind.name().to_string()];
                    row.extend(r);
                    rows.push(row);
                }
            }
            write_rows(
                out,
                &format!("seed={seed} q={} ell={STRAND_LENGTH}", alphabet.size()),
                &["family", "delta", "d", "rate", "envelope_rate", "opt_d"],
                &rows,
            )
        }
        Figure::Equiv => {
            let mut rows = Vec::new();
            let floor = sim::semilog_floor::<f64>();
            for &n in ns {
                let est = polar::monte_carlo_construct(n, 0.01f64, samples, seed)?;
                let linear = sim::equivocation_histogram(&est.equivocations, None);
                let semilog = sim::equivocation_histogram(&est.equivocations, Some(floor));
                for ((x, h), (_, hs)) in linear.into_iter().zip(semilog) {
                    rows.push(vec![n.to_string(), num(x), num(h), num(hs)]);
                }
            }
            write_rows(
                out,
                &format!("seed={seed} delta=0.01 samples={samples}"),
                &["n", "x", "equivocation", "equivocation_semilog"],
                &rows,
            )
        }
        Figure::All2 | Figure::All4 => {
            let deltas = grid()?;
            let alphabet = if which == Figure::All2 {
                Alphabet::Binary
            } else {
                Alphabet::Quaternary
            };
            let mut rows = Vec::new();
            let mut push = |series: String, delta: f64, rate: f64| rows.push(vec![series, num(delta), num(rate)]);
            for kind in FamilyKind::ALL {
                for p in rates::envelope_curve(RateFamily::new(alphabet, kind), &deltas, STRAND_LENGTH)? {
                    push(format!("envelope_{kind}"), p.delta, p.rate);
                }
            }
            if alphabet == Alphabet::Quaternary {
                for &d in &deltas {
                    push("capacity_qsc".into(), d, rates::capacity(Alphabet::Quaternary, d)?);
                }
            }
            for &d in &deltas {
                push("capacity_bsc".into(), d, rates::capacity(Alphabet::Binary, d)?);
            }
            let sweep_deltas: Vec<f64> = deltas.iter().copied().filter(|&d| d <= 0.5).collect();
            let sweep = sim::run_construction_sweep(&SweepConfig {
                ns: ns.to_vec(),
                deltas: sweep_deltas,
                samples,
                seed,
                threshold: None,
            })?;
            for p in sweep.rates {
                push(format!("polar_n{}", p.n), p.delta, p.rate);
            }
            write_rows(
                out,
                &format!("seed={seed} samples={samples} q={}", alphabet.size()),
                &["series", "delta", "rate"],
                &rows,
            )
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Construct {
            n,
            delta,
            samples,
            seed,
            out,
        } => {
            let mut w = open_out(&out, stdout)?;
            run_construct(n, delta, samples, seed, &mut w)?;
            w.flush()?;
        }
        Command::Rates {
            q,
            family,
            d_max,
            delta_min,
            delta_max,
            points,
            out,
        } => {
            let fam = RateFamily::new(Alphabet::from_size(q)?, family.into());
            let deltas = rates::log_grid(delta_min, delta_max, points)?;
            let rows = family_rows(fam, &deltas, d_max)?;
            let mut w = open_out(&out, stdout)?;
            write_rows(
                &mut w,
                &format!("seed=0 q={q} family={} ell={STRAND_LENGTH}", fam.kind),
                &["delta", "d", "rate", "envelope_rate", "opt_d"],
                &rows,
            )?;
            w.flush()?;
        }
        Command::Simulate {
            n,
            delta,
            errors,
            pools,
            seed,
            code,
            design_delta,
            samples,
            q,
            out,
        } => {
            let mut w = open_out(&out, stdout)?;
            run_simulate(
                n,
                &delta,
                errors.into(),
                pools,
                seed,
                code.as_ref(),
                design_delta,
                samples,
                q,
                &mut w,
            )?;
            w.flush()?;
        }
        Command::Figures {
            which,
            ns,
            samples,
            seed,
            d_max,
            delta_min,
            delta_max,
            points,
            out,
        } => {
            let mut w = open_out(&out, stdout)?;
            run_figures(which, &ns, samples, seed, d_max, delta_min, delta_max, points, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn configure_threads() {
    if let Some(cap) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails harmlessly if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cap.max(1)).build_global();
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    configure_threads();
    match execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    dispatch(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
