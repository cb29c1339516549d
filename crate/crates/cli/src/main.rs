//! Command-line front end: single device runs, sweeps, growth analysis of
//! sweep data, and the toy protocol trace.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for domain errors (the
//! owning module's message is printed verbatim on stderr).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fathom_core::factorizer::{
    self, read_sweep_csv, run_device, write_sweep_csv, FactorizationOutcome, SweepRow,
};
use fathom_core::ledger::{self, security_vector, Category};
use fathom_core::resource::{
    complexity_of, dominant_resources, overall_complexity, ComplexityFunction, ResourceFunction,
};
use fathom_core::{Draw, ErrorVector};

#[derive(Parser)]
#[command(name = "fathom", version, about = "Resource-complexity workbench")]
struct Cli {
    /// Seed for random error draws.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Print summaries as JSON objects instead of text lines.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DrawArg {
    /// No perturbation.
    Exact,
    /// Band endpoints.
    Worst,
    /// Seeded uniform draws.
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the device once and print the outcome as JSON.
    Factorize {
        /// Number to factorize (>= 2).
        #[arg(long)]
        n: u64,
        /// Additive wavelength error term.
        #[arg(long, default_value_t = 0.0)]
        epsilon_lambda: f64,
        /// Additive sensor-reading error term.
        #[arg(long, default_value_t = 0.0)]
        epsilon_c: f64,
        /// How perturbed values are drawn from their bands.
        #[arg(long, value_enum, default_value_t = DrawArg::Exact)]
        draw: DrawArg,
    },
    /// Run the device over a range of odd n, write per-run rows, and print
    /// the dominant resources.
    Sweep {
        /// First n (odd, >= 3).
        #[arg(long)]
        from: u64,
        /// Last n (inclusive).
        #[arg(long)]
        to: u64,
        /// Step; the default of 2 keeps n odd.
        #[arg(long, default_value_t = 2)]
        step: u64,
        /// Output path for the per-run rows.
        #[arg(long)]
        out: PathBuf,
        /// Row format.
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Read a sweep CSV and print growth classes, the dominant set, and the
    /// overall class.
    Analyze {
        /// Sweep CSV produced by `sweep --format csv`.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run the toy public-key trace, write the ledger JSON, and print the
    /// security vector.
    Protocol {
        /// Modulus size in bits (8..=64).
        #[arg(long)]
        modulus_bits: u32,
        /// Plaintext message (must be below the generated modulus).
        #[arg(long)]
        message: u64,
        /// Output path for the ledger JSON.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("{message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Factorize {
            n,
            epsilon_lambda,
            epsilon_c,
            draw,
        } => {
            let eps =
                ErrorVector::new(vec![epsilon_lambda, epsilon_c]).map_err(|e| e.to_string())?;
            let draw = match draw {
                DrawArg::Exact => Draw::Exact,
                DrawArg::Worst => Draw::WorstCase,
                DrawArg::Random => Draw::Random(cli.seed),
            };
            let outcome = run_device(n, &eps, draw).map_err(|e| e.to_string())?;
            println!("{}", outcome.to_json());
            Ok(())
        }
        Command::Sweep {
            from,
            to,
            step,
            out,
            format,
        } => {
            if step == 0 {
                return Err("step must be positive".into());
            }
            let ns: Vec<u64> = (from..=to).step_by(step as usize).collect();
            let mut outcomes: Vec<FactorizationOutcome> = Vec::with_capacity(ns.len());
            let mut tallies = BTreeMap::new();
            for &n in &ns {
                if n % 2 == 0 || n < 3 {
                    return Err(format!(
                        "sweep covers odd n >= 3 only; adjust --from/--step (got {n})"
                    ));
                }
                let outcome =
                    run_device(n, &ErrorVector::zero(2), Draw::Exact).map_err(|e| e.to_string())?;
                tallies.insert(n, outcome.resources);
                outcomes.push(outcome);
            }
            let rows: Vec<SweepRow> = outcomes.iter().map(SweepRow::from_outcome).collect();
            let bytes = match format {
                FormatArg::Csv => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
                    buf
                }
                FormatArg::Json => {
                    let mut buf =
                        serde_json::to_vec_pretty(&outcomes).map_err(|e| e.to_string())?;
                    buf.push(b'\n');
                    buf
                }
            };
            write_atomically(&out, &bytes)?;

            let profile = factorizer::profile_from_tallies(&tallies).map_err(|e| e.to_string())?;
            let dominant = dominant_resources(&profile).map_err(|e| e.to_string())?;
            let names: Vec<String> = dominant.into_iter().collect();
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({ "rows": rows.len(), "dominant": names })
                );
            } else {
                println!("wrote {} rows to {}", rows.len(), out.display());
                println!("dominant: {}", names.join(", "));
            }
            Ok(())
        }
        Command::Analyze { input } => {
            let file = fs::File::open(&input)
                .map_err(|e| format!("cannot open {}: {e}", input.display()))?;
            let rows = read_sweep_csv(file).map_err(|e| e.to_string())?;
            if rows.is_empty() {
                return Err("no inputs".into());
            }
            let profile = profile_from_rows(&rows)?;
            let dominant = dominant_resources(&profile).map_err(|e| e.to_string())?;
            let overall = overall_complexity(&profile).map_err(|e| e.to_string())?;
            let overall_tag = overall
                .growth()
                .map(|g| g.to_string())
                .unwrap_or_else(|| "unclassified".into());
            let names: Vec<String> = dominant.into_iter().collect();
            if cli.json {
                let growths: BTreeMap<&str, String> = profile
                    .iter()
                    .map(|(name, cf)| {
                        (
                            name.as_str(),
                            cf.growth()
                                .map(|g| g.to_string())
                                .unwrap_or_else(|| "unclassified".into()),
                        )
                    })
                    .collect();
                println!(
                    "{}",
                    serde_json::json!({
                        "growth": growths,
                        "dominant": names,
                        "overall": overall_tag,
                    })
                );
            } else {
                for (name, cf) in &profile {
                    let tag = cf
                        .growth()
                        .map(|g| g.to_string())
                        .unwrap_or_else(|| "unclassified".into());
                    println!("{name}: {tag}");
                }
                println!("dominant: {}; overall: {overall_tag}", names.join(", "));
            }
            Ok(())
        }
        Command::Protocol {
            modulus_bits,
            message,
            out,
        } => {
            let (trace, transcript) =
                ledger::run_toy_rsa(modulus_bits, message, cli.seed).map_err(|e| e.to_string())?;
            let mut bytes = trace.to_json().into_bytes();
            bytes.push(b'\n');
            write_atomically(&out, &bytes)?;

            // the eavesdropper's surface: transmissions plus timing leaks
            let vector = security_vector(&trace, |e| {
                e.costs.get(&Category::Communication).copied().unwrap_or(0) > 0
                    || e.costs.get(&Category::Information).copied().unwrap_or(0) > 0
            });
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "modulus": transcript.modulus,
                        "decrypted": transcript.decrypted,
                        "security_vector": vector,
                    })
                );
            } else {
                println!(
                    "protocol ok: decrypt(encrypt({message})) = {} mod {}",
                    transcript.decrypted, transcript.modulus
                );
                let totals: Vec<String> = vector
                    .totals
                    .iter()
                    .map(|(category, amount)| format!("{}={amount}", category.key()))
                    .collect();
                println!(
                    "security vector: {}; flag={}",
                    totals.join(" "),
                    match vector.flag {
                        ledger::InteractionFlag::Decomposable => "decomposable",
                        ledger::InteractionFlag::Interacting => "interacting",
                    }
                );
            }
            Ok(())
        }
    }
}

/// Rebuild the three complexity functions from sweep rows via the per-size
/// maxima construction, keyed by the rows' bit sizes.
fn profile_from_rows(rows: &[SweepRow]) -> Result<BTreeMap<String, ComplexityFunction>, String> {
    let rows: Vec<SweepRow> = rows.to_vec();
    let precision = |r: &SweepRow| {
        r.precision
            .finite()
            .ok_or_else(|| "infinite precision entry in sweep".to_string())
    };
    for row in &rows {
        precision(row)?;
    }
    let mut profile = BTreeMap::new();
    type Column = fn(&SweepRow) -> u64;
    let columns: [(&str, Column); 3] = [
        ("time", |r| r.time),
        ("space", |r| r.space),
        ("precision", |r| r.precision.finite().expect("checked")),
    ];
    for (name, column) in columns {
        let resource = ResourceFunction::new(name, column);
        let cf =
            complexity_of(&resource, |r: &SweepRow| r.bits, &rows).map_err(|e| e.to_string())?;
        profile.insert(name.to_string(), cf);
    }
    Ok(profile)
}

/// Write via a sibling temp file and rename, so readers never observe a
/// partial file.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let file_name = path
        .file_name()
        .ok_or_else(|| format!("not a file path: {}", path.display()))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    let mut file =
        fs::File::create(&tmp).map_err(|e| format!("cannot create {}: {e}", tmp.display()))?;
    file.write_all(bytes)
        .and_then(|()| file.sync_all())
        .map_err(|e| format!("cannot write {}: {e}", tmp.display()))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| format!("cannot rename into {}: {e}", path.display()))
}
