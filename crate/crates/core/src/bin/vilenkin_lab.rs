//! `vilenkin-lab`: verification suites and experiments on bounded Vilenkin
//! groups.
//!
//! Subcommands: `suite` (named invariant batteries), `kernel` (Dirichlet
//! kernel-norm table), `counterexample` (the sharpness construction),
//! `maximal` (operator-norm probes of the restricted maximal operator),
//! and `growth` (the divergence experiment).  Output is deterministic for
//! a fixed config and seed: sorted JSON keys, floats at 12 significant
//! digits, fixed CSV column order.  Exit codes: 0 all checks pass, 1 check
//! failure or runtime error, 2 usage/config error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::Serialize;

use vilenkin_lab::error::{Error, Result};
use vilenkin_lab::group::{expand, Radix, RadixSequence};
use vilenkin_lab::harness::{
    growth_experiment, kernel_table_csv, run_suite, RegressionStore, SuiteConfig, SUITE_NAMES,
};
use vilenkin_lab::hardy::{build_counterexample, select_subsequence, validate_atom};
use vilenkin_lab::kernels::kernel_table;
use vilenkin_lab::maximal::{probe_operator_norm, ProbeConfig, ProbeOperator, SubsequenceFamily};
use vilenkin_lab::report::{csv_table, fmt_float, to_canonical_json, OutputFormat};

#[derive(Parser)]
#[command(name = "vilenkin-lab", version, about = "Fourier analysis on bounded Vilenkin groups")]
struct Cli {
    /// Flat key=value config file mirroring the flags; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated radix pattern, repeated up to the resolution (e.g. "2" or "2,3").
    #[arg(long, global = true)]
    radix: Option<String>,
    /// Number of coordinates N (the model has M_N cells).
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Subsequence family: Mn, Mn+1, Mn+Mprev, list:a,b,c, or offset:r.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Prefix length of the family / number of selected indices.
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Cell budget: M_N may not exceed this.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Re-run the command this many times and verify byte-identical output.
    #[arg(long, global = true)]
    repeat: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Run one named verification suite, or all of them.
    Suite {
        /// group, system, transform, kernels, lemma2, lemma3, theoremW, watari.
        name: Option<String>,
    },
    /// Dirichlet kernel-norm table for 1 <= n < M_N.
    Kernel,
    /// Build the sharpness counterexample and summarize it.
    Counterexample,
    /// Probe the operator norm of the restricted maximal operator on atoms.
    Maximal,
    /// Divergence growth experiment along the selected indices.
    Growth,
}

/// Flag values after merging CLI > config file > defaults.
struct Settings {
    radix: String,
    resolution: usize,
    p: f64,
    family: String,
    k: usize,
    trials: usize,
    seed: u64,
    out: Option<PathBuf>,
    format: OutputFormat,
    budget: u64,
    repeat: usize,
}

fn read_config(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Usage(format!(
                "config {}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn merge(cli: &Cli) -> Result<Settings> {
    let file = match &cli.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    let known = [
        "radix", "resolution", "p", "family", "K", "trials", "seed", "out", "format", "budget",
        "repeat",
    ];
    if let Some(bad) = file.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(Error::Usage(format!("config key {bad:?} does not mirror any flag")));
    }
    fn pick<T: Clone + FromStr>(
        flag: &Option<T>,
        file: &BTreeMap<String, String>,
        key: &str,
        default: T,
    ) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match file.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Usage(format!("config value {key}={raw:?} is malformed"))),
            None => Ok(default),
        }
    }
    let format_str = pick(&cli.format, &file, "format", "json".to_string())?;
    let out = match (&cli.out, file.get("out")) {
        (Some(path), _) => Some(path.clone()),
        (None, Some(path)) => Some(PathBuf::from(path)),
        (None, None) => None,
    };
    Ok(Settings {
        radix: pick(&cli.radix, &file, "radix", "2".to_string())?,
        resolution: pick(&cli.resolution, &file, "resolution", 8)?,
        p: pick(&cli.p, &file, "p", 0.5)?,
        family: pick(&cli.family, &file, "family", "Mn+1".to_string())?,
        k: pick(&cli.k, &file, "K", 3)?,
        trials: pick(&cli.trials, &file, "trials", 50)?,
        seed: pick(&cli.seed, &file, "seed", 2023)?,
        out,
        format: OutputFormat::from_str(&format_str)?,
        budget: pick(&cli.budget, &file, "budget", 65536)?,
        repeat: pick(&cli.repeat, &file, "repeat", 1)?,
    })
}

fn build_radix(settings: &Settings) -> Result<Radix> {
    let pattern: Vec<u32> = settings
        .radix
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| Error::Usage(format!("bad radix entry {v:?}")))
        })
        .collect::<Result<Vec<u32>>>()?;
    let radix: Radix =
        RadixSequence::from_pattern(&pattern, settings.resolution)?.into();
    let cells = radix.order(settings.resolution);
    if cells > settings.budget {
        return Err(Error::Capacity(format!(
            "M_N = {cells} exceeds the cell budget {}",
            settings.budget
        )));
    }
    Ok(radix)
}

#[derive(Serialize)]
struct CounterexampleSummary {
    p: f64,
    family: String,
    resolution: usize,
    radix: Vec<u32>,
    indices: Vec<u64>,
    lambdas: Vec<f64>,
    atoms_valid: bool,
    /// coefficient value on each spectral block [M_|nk|, M_{|nk|+1})
    block_values: Vec<f64>,
    /// max |coefficient| off the blocks (should be ~0)
    offblock_max: f64,
}

/// Run one subcommand to a deterministic output string plus an exit flag
/// (false = some check failed).
fn render(cli: &Cli, settings: &Settings) -> Result<(String, bool)> {
    match &cli.command {
        Command::Suite { name } => {
            let config = SuiteConfig { seed: settings.seed, budget: settings.budget };
            let mut store = RegressionStore::open_default()?;
            let names: Vec<String> = match name {
                Some(n) => vec![n.clone()],
                None => SUITE_NAMES.iter().map(|s| s.to_string()).collect(),
            };
            let mut reports = Vec::new();
            let mut all_pass = true;
            for n in &names {
                let report = run_suite(n, &config, &mut store)?;
                all_pass &= report.passed;
                reports.push(report);
            }
            store.save()?;
            let text = match settings.format {
                OutputFormat::Json => to_canonical_json(&reports)?,
                OutputFormat::Csv => {
                    let rows: Vec<Vec<String>> = reports
                        .iter()
                        .flat_map(|r| {
                            r.checks.iter().map(|c| {
                                vec![
                                    r.suite.clone(),
                                    c.name.clone(),
                                    if c.passed { "pass" } else { "fail" }.to_string(),
                                    c.detail.clone(),
                                ]
                            })
                        })
                        .collect();
                    csv_table(&["suite", "check", "status", "detail"], &rows)
                }
            };
            Ok((text, all_pass))
        }
        Command::Kernel => {
            let radix = build_radix(settings)?;
            let text = match settings.format {
                OutputFormat::Csv => kernel_table_csv(settings.resolution, &radix)?,
                OutputFormat::Json => to_canonical_json(&kernel_table(settings.resolution, &radix)?)?,
            };
            Ok((text, true))
        }
        Command::Counterexample => {
            let radix = build_radix(settings)?;
            let family = SubsequenceFamily::from_str(&settings.family)?;
            let spec =
                select_subsequence(&family, settings.p, settings.k, settings.resolution, &radix)?;
            let (_, spectrum, decomp) = build_counterexample(&spec, &radix)?;
            let atoms_valid = decomp
                .atoms
                .iter()
                .all(|a| validate_atom(a).map(|c| c.valid).unwrap_or(false));
            let mut block_values = Vec::new();
            let mut on_block = vec![false; radix.order(settings.resolution) as usize];
            for &nk in &spec.indices {
                let d = expand(nk, &radix)?;
                block_values.push(spectrum.coefficient(radix.order(d.high)).re);
                for j in radix.order(d.high)..radix.order(d.high + 1) {
                    on_block[j as usize] = true;
                }
            }
            let offblock_max = (0..radix.order(settings.resolution))
                .filter(|&j| !on_block[j as usize])
                .map(|j| spectrum.coefficient(j).norm())
                .fold(0.0, f64::max);
            let summary = CounterexampleSummary {
                p: settings.p,
                family: family.label(),
                resolution: settings.resolution,
                radix: radix.radices().to_vec(),
                indices: spec.indices.clone(),
                lambdas: decomp.coefficients.clone(),
                atoms_valid,
                block_values,
                offblock_max,
            };
            let text = match settings.format {
                OutputFormat::Json => to_canonical_json(&summary)?,
                OutputFormat::Csv => {
                    let rows: Vec<Vec<String>> = spec
                        .indices
                        .iter()
                        .zip(&summary.lambdas)
                        .zip(&summary.block_values)
                        .map(|((&nk, &lambda), &bv)| {
                            let d = expand(nk, &radix).unwrap();
                            vec![
                                nk.to_string(),
                                d.low.to_string(),
                                d.high.to_string(),
                                fmt_float(lambda),
                                fmt_float(bv),
                            ]
                        })
                        .collect();
                    csv_table(&["index", "low", "high", "lambda", "block_value"], &rows)
                }
            };
            Ok((text, atoms_valid))
        }
        Command::Maximal => {
            let radix = build_radix(settings)?;
            let family = SubsequenceFamily::from_str(&settings.family)?;
            let operator = ProbeOperator::Restricted { family, count: settings.k };
            let cfg = ProbeConfig {
                p: settings.p,
                trials: settings.trials,
                seed: settings.seed,
                resolution: settings.resolution,
            };
            let report = probe_operator_norm(&operator, &cfg, &radix)?;
            let text = match settings.format {
                OutputFormat::Json => to_canonical_json(&report)?,
                OutputFormat::Csv => {
                    let rows: Vec<Vec<String>> = report
                        .rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.trial.to_string(),
                                r.structured.to_string(),
                                r.depth.to_string(),
                                fmt_float(r.ratio),
                                fmt_float(r.tail_integral),
                            ]
                        })
                        .collect();
                    let mut out = csv_table(
                        &["trial", "structured", "depth", "ratio", "tail_integral"],
                        &rows,
                    );
                    out.push_str(&format!("max_ratio,,,,{}\n", fmt_float(report.max_ratio)));
                    out
                }
            };
            Ok((text, true))
        }
        Command::Growth => {
            let radix = build_radix(settings)?;
            let family = SubsequenceFamily::from_str(&settings.family)?;
            let report =
                growth_experiment(&family, settings.p, settings.k, settings.resolution, &radix)?;
            let ok = report.strictly_increasing && report.steps.iter().all(|s| s.ii_ok);
            let text = match settings.format {
                OutputFormat::Json => to_canonical_json(&report)?,
                OutputFormat::Csv => {
                    let rows: Vec<Vec<String>> = report
                        .steps
                        .iter()
                        .map(|s| {
                            vec![
                                s.index.to_string(),
                                s.low.to_string(),
                                s.high.to_string(),
                                fmt_float(s.weak_p),
                                fmt_float(s.bound),
                                fmt_float(s.ratio),
                                fmt_float(s.ii_min),
                                fmt_float(s.ii_bound),
                                s.ii_ok.to_string(),
                            ]
                        })
                        .collect();
                    csv_table(
                        &[
                            "index", "low", "high", "weak_p", "bound", "ratio", "ii_min",
                            "ii_bound", "ii_ok",
                        ],
                        &rows,
                    )
                }
            };
            Ok((text, ok))
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let settings = merge(cli)?;
    if settings.repeat == 0 {
        return Err(Error::Usage("--repeat must be >= 1".into()));
    }
    let (text, mut ok) = render(cli, &settings)?;
    for _ in 1..settings.repeat {
        let (again, _) = render(cli, &settings)?;
        if again != text {
            eprintln!("determinism failure: repeated run produced different bytes");
            ok = false;
            break;
        }
    }
    match &settings.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?,
        None => print!("{text}"),
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
