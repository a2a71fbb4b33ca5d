use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use distgap::canonical::{default_k_max, empty_canonical_survey, write_survey_csv, Eq7Auditor};
use distgap::construction::{assemble, read_points, write_points};
use distgap::harness::{parse_count, parse_grid, parse_region, run_scaling, write_records_csv, Config, RunRecordJson};
use distgap::nobonds::{check_nobonds, empirical_no_bond_prob, estimate_mu_nu, janson_survey, BondSpec};
use distgap::seed::Seed;
use distgap::spectrum::{read_dump, sorted_distances, write_dump, GapAccumulator};
use distgap::{Error, Result};

#[derive(Parser)]
#[command(
    name = "distgap",
    version,
    about = "Planar point sets with small squared distance gaps"
)]
struct Cli {
    /// TOML config; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Peak bytes for distance blocks before spilling to disk.
    #[arg(long, global = true)]
    memory_budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one construction and print its run record.
    Construct {
        #[arg(long, value_parser = count)]
        n: u64,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run record as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run record as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Point set export.
        #[arg(long)]
        points_out: Option<PathBuf>,
    },
    /// Sorted distance dump of a point file, plus gap statistics.
    Spectrum {
        #[arg(long)]
        points_file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep n and seeds, then fit the gap-sum exponent.
    Scaling {
        #[arg(long, value_parser = grid)]
        grid: Option<Vec<u64>>,
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run records as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fit and records as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Compare the empirical no-bond probability with its bracket.
    NobondsVerify {
        #[arg(long, default_value = "square")]
        region: String,
        #[arg(long)]
        density: f64,
        #[arg(long)]
        bond_lo: f64,
        #[arg(long)]
        bond_hi: f64,
        #[arg(long, default_value_t = 10_000, value_parser = count)]
        trials: u64,
        #[arg(long, default_value_t = 1_000_000, value_parser = count)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive Janson check on random small graphs.
    JansonVerify {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        max_ground_set: usize,
        #[arg(long, default_value_t = 0.3)]
        max_p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Empty-interval audit and canonical survey of a distance dump.
    CanonicalAudit {
        #[arg(long)]
        spectrum_file: PathBuf,
        #[arg(long, value_parser = count)]
        n: u64,
        #[arg(long)]
        k_max: Option<u32>,
        /// Survey table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn count(s: &str) -> std::result::Result<u64, String> {
    parse_count(s).map_err(|e| e.to_string())
}

fn grid(s: &str) -> std::result::Result<Vec<u64>, String> {
    parse_grid(s).map_err(|e| e.to_string())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::Config(_)
        | Error::GroundSetTooLarge(_)
        | Error::PairCapExceeded { .. }
        | Error::CrossesIntegerBoundary { .. }
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(b) = cli.memory_budget {
        config.memory.budget_bytes = b;
    }

    match cli.command {
        Command::Construct {
            n,
            epsilon,
            seed,
            out,
            json,
            points_out,
        } => {
            config.epsilon = epsilon.unwrap_or(config.epsilon);
            config.seed = seed.unwrap_or(config.seed);
            let c = assemble(n, config.epsilon, &Seed::new(config.seed))?;
            if let Some(p) = points_out {
                let mut w = BufWriter::new(File::create(p)?);
                write_points(&c, &mut w)?;
                w.flush()?;
            }
            let start = std::time::Instant::now();
            let mut record = distgap::harness::measure_construction(&c, &config.spectrum())?;
            record.elapsed_ms += start.elapsed().as_millis() as u64;
            let full = RunRecordJson::new(record.clone(), config.hash()?);
            if let Some(p) = out.or(config.output.csv.clone()) {
                write_records_csv(std::slice::from_ref(&record), File::create(p)?)?;
            }
            if let Some(p) = json.or(config.output.json.clone()) {
                write_json(&p, &full)?;
            }
            print_json(&full)?;
            record.check_invariants()?;
            Ok(true)
        }
        Command::Spectrum { points_file, out } => {
            let points: Vec<_> = read_points(BufReader::new(File::open(points_file)?))?
                .into_iter()
                .map(|p| p.point)
                .collect();
            let mut gaps = GapAccumulator::default();
            let stream = sorted_distances(&points, &config.spectrum())?;
            let total = stream.total();
            let observed = stream.inspect(|d| {
                if let Ok(d) = d {
                    gaps.push(*d);
                }
            });
            match out {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(p)?);
                    write_dump(&mut w, total, observed)?;
                    w.flush()?;
                }
                None => {
                    for d in observed {
                        d?;
                    }
                }
            }
            let stats = gaps.finish();
            print_json(&serde_json::json!({
                "points": points.len(),
                "distances": total,
                "d_min": gaps.first(),
                "d_max": gaps.last(),
                "gap_sum_sq": stats.gap_sum_sq,
                "max_gap": stats.max_gap,
            }))?;
            Ok(true)
        }
        Command::Scaling {
            grid,
            seeds,
            epsilon,
            seed,
            out,
            json,
        } => {
            if let Some(g) = grid {
                config.scaling.grid = g;
            }
            config.scaling.seeds_per_n = seeds.unwrap_or(config.scaling.seeds_per_n);
            config.epsilon = epsilon.unwrap_or(config.epsilon);
            config.seed = seed.unwrap_or(config.seed);
            config.validate()?;
            let (fit, records) = run_scaling(
                &config.scaling.grid,
                config.scaling.seeds_per_n,
                config.epsilon,
                config.seed,
                &config.spectrum(),
                |r| {
                    eprintln!(
                        "n={} seed={} N={} gap_sum_sq={:.6e} prefactor={:.4} ({} ms)",
                        r.n_param,
                        r.seed,
                        r.realized_points,
                        r.gap_sum_sq,
                        r.prefactor(),
                        r.elapsed_ms
                    )
                },
            )?;
            if let Some(p) = out.or(config.output.csv.clone()) {
                write_records_csv(&records, File::create(p)?)?;
            }
            let hash = config.hash()?;
            let report = serde_json::json!({
                "fit": fit,
                "records": records.iter().map(|r| RunRecordJson::new(r.clone(), hash.clone())).collect::<Vec<_>>(),
            });
            if let Some(p) = json.or(config.output.json.clone()) {
                write_json(&p, &report)?;
            }
            print_json(&fit)?;
            Ok(true)
        }
        Command::NobondsVerify {
            region,
            density,
            bond_lo,
            bond_hi,
            trials,
            samples,
            seed,
        } => {
            let region = parse_region(&region)?;
            let bond = BondSpec::new(bond_lo, bond_hi)?;
            let seed = Seed::new(seed);
            let est = estimate_mu_nu(&region, density, &bond, samples, &seed.derive("integrate"))?;
            let (p_hat, ci) = empirical_no_bond_prob(&region, density, &bond, trials, &seed.derive("trials"))?;
            let verdict = check_nobonds(&est, p_hat, ci);
            print_json(&serde_json::json!({
                "seed": seed.value,
                "trials": trials,
                "estimate": est,
                "verdict": verdict,
            }))?;
            Ok(verdict.pass)
        }
        Command::JansonVerify {
            instances,
            max_ground_set,
            max_p,
            seed,
        } => {
            let summary = janson_survey(instances, max_ground_set, max_p, &Seed::with_label(seed, "janson"))?;
            print_json(&summary)?;
            Ok(summary.violations == 0)
        }
        Command::CanonicalAudit {
            spectrum_file,
            n,
            k_max,
            out,
        } => {
            let spectrum = read_dump(&mut BufReader::new(File::open(spectrum_file)?))?;
            let mut auditor = Eq7Auditor::new();
            for &d in spectrum.distances() {
                auditor.push(d)?;
            }
            let audit = auditor.finish();
            let rows = empty_canonical_survey(&spectrum, n, k_max.unwrap_or_else(|| default_k_max(n)))?;
            match out {
                Some(p) => write_survey_csv(&rows, File::create(p)?)?,
                None => write_survey_csv(&rows, io::stdout().lock())?,
            }
            print_json(&audit)?;
            Ok(audit.holds)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
