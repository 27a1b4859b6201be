//! Experiment runner: generates test cases, runs failure-detection
//! campaigns, computes distribution metrics, and compares generators.
//!
//! Every command is a pure function of (config, seed); replays produce
//! byte-identical output, serial or parallel.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use artkit::domain::Generator;
use artkit::metrics;
use artkit::simlab::{
    self, a12_effect_size, campaign_f, improvement_percent, mann_whitney_u, place_regions,
    required_runs, CampaignStats, RunRecord, RUNS_CSV_HEADER,
};
use artkit::{ArtError, InputDomain, RngStream, TestCase};

use config::{ExperimentConfig, GeneratorSpec};

/// Sub-stream index reserved for failure-region placement so campaign
/// run indices never collide with it.
const PLACEMENT_STREAM: u64 = u64::MAX;
const PILOT_RUNS: u64 = 200;

#[derive(Parser)]
#[command(name = "artkit", version, about = "Adaptive random testing toolkit")]
struct Cli {
    /// Worker threads for parallel replications (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit test cases as CSV rows on standard output.
    Generate {
        /// One of: rt, fscs, rrt, mcmc, halton, sobol, van_der_corput,
        /// tpbs, pbs, fscs_forgetting, dnc.
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidate-set size (fscs only).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run failure-detection campaigns from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compute distribution metrics over a CSV point file.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated: discrepancy, dispersion, diversity,
        /// divergence, edge_center_ratio.
        #[arg(long)]
        metrics: String,
        /// Subdomain count for discrepancy.
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Paired campaigns comparing two or more generators.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum CliError {
    /// Bad config, flags, or input data: exit code 2.
    Config(String),
    /// A runtime budget was exhausted mid-experiment: exit code 3.
    Runtime(String),
}

impl From<ArtError> for CliError {
    fn from(e: ArtError) -> Self {
        match e {
            ArtError::BudgetExhausted { .. } | ArtError::PlacementInfeasible(_) => {
                CliError::Runtime(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore the error when a pool already exists; thread count only
        // affects scheduling, never results.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match cli.command {
        Command::Generate {
            strategy,
            d,
            n,
            seed,
            k,
        } => cmd_generate(&strategy, d, n, seed, k),
        Command::Simulate { config, out_dir } => cmd_campaign(&config, &out_dir, 1),
        Command::Metrics {
            input,
            metrics,
            m,
            seed,
        } => cmd_metrics(&input, &metrics, m, seed),
        Command::Compare { config, out_dir } => cmd_campaign(&config, &out_dir, 2),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// ARTKIT_SEED overrides whatever seed the config or flags supplied.
fn effective_seed(seed: u64) -> Result<u64, CliError> {
    match std::env::var("ARTKIT_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("ARTKIT_SEED is not a valid u64: {v:?}"))),
        Err(_) => Ok(seed),
    }
}

fn parse_strategy(strategy: &str, k: Option<usize>) -> Result<GeneratorSpec, CliError> {
    let spec = match strategy {
        "rt" => GeneratorSpec::Rt,
        "fscs" => GeneratorSpec::Fscs {
            k: k.unwrap_or(10),
        },
        "rrt" => GeneratorSpec::Rrt { target_ratio: 1.0 },
        "mcmc" => GeneratorSpec::Mcmc,
        "halton" => GeneratorSpec::Halton,
        "sobol" => GeneratorSpec::Sobol,
        "van_der_corput" | "vdc" => GeneratorSpec::VanDerCorput,
        "tpbs" => GeneratorSpec::Tpbs,
        "pbs" => GeneratorSpec::Pbs,
        "fscs_forgetting" => GeneratorSpec::FscsForgetting { lambda: 30 },
        "dnc" => GeneratorSpec::Dnc { quota: 50 },
        other => {
            return Err(CliError::Config(format!("unknown strategy {other:?}")));
        }
    };
    if k.is_some() && !matches!(spec, GeneratorSpec::Fscs { .. }) {
        return Err(CliError::Config("--k applies only to fscs".into()));
    }
    Ok(spec)
}

fn cmd_generate(
    strategy: &str,
    d: usize,
    n: u64,
    seed: u64,
    k: Option<usize>,
) -> Result<(), CliError> {
    if d == 0 {
        return Err(CliError::Config("d must be >= 1".into()));
    }
    let spec = parse_strategy(strategy, k)?;
    let domain = InputDomain::unit(d);
    let mut generator = spec.build(&domain)?;
    let mut rng = RngStream::new(effective_seed(seed)?);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for _ in 0..n {
        let tc = generator.next(&mut rng)?;
        let row: Vec<String> = tc.coords().iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn parse_points(path: &Path) -> Result<Vec<TestCase>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut points = Vec::new();
    let mut dims = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse()).collect();
        match fields {
            Ok(coords) => {
                if let Some(d) = dims {
                    if coords.len() != d {
                        return Err(CliError::Config(format!(
                            "line {}: expected {} columns, found {}",
                            lineno + 1,
                            d,
                            coords.len()
                        )));
                    }
                } else {
                    dims = Some(coords.len());
                }
                points.push(TestCase(coords));
            }
            Err(e) => {
                // A non-numeric first row is a header; anywhere else it
                // is a malformed row.
                if lineno == 0 && points.is_empty() {
                    continue;
                }
                return Err(CliError::Config(format!("line {}: {e}", lineno + 1)));
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Config("no data rows in input file".into()));
    }
    Ok(points)
}

fn cmd_metrics(input: &Path, metric_list: &str, m: usize, seed: u64) -> Result<(), CliError> {
    let points = parse_points(input)?;
    let domain = InputDomain::unit(points[0].dims());
    let seed = effective_seed(seed)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "metric,value")?;
    for name in metric_list.split(',').map(str::trim) {
        let value = match name {
            "discrepancy" => {
                let mut rng = RngStream::new(seed);
                metrics::discrepancy(&points, &domain, m, &mut rng)?
            }
            "dispersion" => metrics::dispersion(&points)?,
            "diversity" => metrics::diversity(&points)?,
            "divergence" => metrics::divergence(&points),
            "edge_center_ratio" => metrics::edge_center_ratio(&points, &domain),
            other => {
                return Err(CliError::Config(format!("unknown metric {other:?}")));
            }
        };
        writeln!(out, "{name},{value}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CampaignSummary {
    generator: &'static str,
    s: u64,
    censored: u64,
    mean_f: f64,
    std_dev: f64,
    ci_level: f64,
    ci_low: f64,
    ci_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

#[derive(Serialize)]
struct Comparison {
    baseline: &'static str,
    candidate: &'static str,
    u_statistic: f64,
    p_value: f64,
    a12: f64,
    improvement_percent: f64,
}

#[derive(Serialize)]
struct ExperimentReport {
    version: &'static str,
    master_seed: u64,
    runs: u64,
    config: ExperimentConfig,
    campaigns: Vec<CampaignSummary>,
    comparisons: Vec<Comparison>,
}

fn cmd_campaign(config_path: &Path, out_dir: &Path, min_generators: usize) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path)?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    if cfg.generators.len() < min_generators {
        return Err(CliError::Config(format!(
            "this command needs at least {min_generators} generators, config has {}",
            cfg.generators.len()
        )));
    }
    let seed = effective_seed(cfg.campaign.seed)?;
    let domain = cfg.domain.build()?;
    let mut placement_rng = RngStream::new(seed).substream(PLACEMENT_STREAM);
    let profile = place_regions(
        &domain,
        cfg.profile.theta,
        cfg.profile.pattern.build(),
        &mut placement_rng,
    )?;

    let run_one = |spec: &GeneratorSpec, s: u64| -> Result<Vec<RunRecord>, CliError> {
        Ok(campaign_f(
            || spec.build(&domain).expect("spec validated above"),
            &profile,
            s,
            cfg.campaign.cap,
            seed,
            cfg.measure_time,
        )?)
    };

    // Auto run-count: size each campaign from a pilot at the spec's
    // relative-accuracy rule, taking the worst generator's requirement.
    let runs = match cfg.campaign.runs {
        Some(r) => r,
        None => {
            let mut needed = PILOT_RUNS;
            for spec in &cfg.generators {
                let pilot = run_one(spec, PILOT_RUNS)?;
                let stats = CampaignStats::from_records(&pilot, cfg.campaign.ci_level)?;
                needed = needed.max(required_runs(1.96, stats.std_dev, stats.mean_f, 5.0)?);
            }
            needed
        }
    };

    fs::create_dir_all(out_dir)?;
    let mut csv = Vec::new();
    writeln!(csv, "{RUNS_CSV_HEADER}")?;
    let mut campaigns = Vec::new();
    let mut per_generator_counts: Vec<Vec<f64>> = Vec::new();
    for spec in &cfg.generators {
        let records = run_one(spec, runs)?;
        simlab::write_runs_csv(
            &mut csv,
            &records,
            spec.name(),
            &profile.pattern.label(),
            cfg.profile.theta,
            domain.dims(),
        )?;
        let stats = CampaignStats::from_records(&records, cfg.campaign.ci_level)?;
        let warning = (stats.censored * 2 > stats.s).then(|| {
            format!(
                "{} of {} runs were censored at cap {}; mean F-count is biased low",
                stats.censored, stats.s, cfg.campaign.cap
            )
        });
        campaigns.push(CampaignSummary {
            generator: spec.name(),
            s: stats.s,
            censored: stats.censored,
            mean_f: stats.mean_f,
            std_dev: stats.std_dev,
            ci_level: stats.ci_level,
            ci_low: stats.ci.0,
            ci_high: stats.ci.1,
            warning,
        });
        per_generator_counts.push(records.iter().map(|r| r.f_count as f64).collect());
    }

    let mut comparisons = Vec::new();
    for i in 0..cfg.generators.len() {
        for j in (i + 1)..cfg.generators.len() {
            let (u, p) = mann_whitney_u(&per_generator_counts[j], &per_generator_counts[i])?;
            comparisons.push(Comparison {
                baseline: cfg.generators[i].name(),
                candidate: cfg.generators[j].name(),
                u_statistic: u,
                p_value: p,
                a12: a12_effect_size(&per_generator_counts[j], &per_generator_counts[i])?,
                improvement_percent: improvement_percent(
                    campaigns[i].mean_f,
                    campaigns[j].mean_f,
                    true,
                ),
            });
        }
    }

    let report = ExperimentReport {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: seed,
        runs,
        config: cfg,
        campaigns,
        comparisons,
    };
    fs::write(out_dir.join("runs.csv"), csv)?;
    let mut json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    json.push('\n');
    fs::write(out_dir.join("report.json"), json)?;
    Ok(())
}
