use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use votexfer::analytic::{extreme_case_curves, share_grid};
use votexfer::apportionment::{
    allocate_discrete, allocate_tier, supermajority_boundary, sweep_list_seats, ApportionmentConfig, ListTier,
    PoolTable, SeatFraction, Threshold,
};
use votexfer::dataio::{self, fmt_sig};
use votexfer::manipulation::{evaluate, Strategy};
use votexfer::simulation::{run_simulation, sweep_k, SimulationConfig};
use votexfer::{continuous_allocation, ElectionInput, Error, MixRatio, TransferFormula};

/// Seat allocation in mixed-member systems with vote transfer.
#[derive(Parser)]
#[command(name = "votexfer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-district worked example under the three transfer formulas.
    Example1 {
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Seat-vote curves of the extreme districting maps, as CSV.
    Curves {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo simulation of two-party elections (JSON config).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo simulation over a range of expected vote shares, as CSV.
    SimulateSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k_min: f64,
        #[arg(long)]
        k_max: f64,
        #[arg(long, default_value_t = 0.01)]
        k_step: f64,
        #[command(flatten)]
        out: Output,
    },
    /// d'Hondt allocation of list seats on top of district seats.
    Allocate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        formula: TransferFormula,
        #[arg(long)]
        list_seats: u32,
        /// Entry threshold as a fraction of all list votes.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Allocations over a range of list-seat counts against a reference.
    Sweep {
        /// Pool fixture name.
        #[arg(long, default_value = "hungary2014")]
        fixture: String,
        #[arg(long)]
        formula: TransferFormula,
        #[arg(long, default_value_t = 50)]
        min: u32,
        #[arg(long, default_value_t = 150)]
        max: u32,
        /// Reference allocation as FORMULA:LIST_SEATS.
        #[arg(long, default_value = "nvt:93")]
        reference: String,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// Supermajority fraction for the boundary search.
        #[arg(long, default_value = "2/3")]
        supermajority: SeatFraction,
        /// Also write one CSV row per list-seat count and party here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Counterfactual seat share under a manipulation plan (JSON).
    Manipulate {
        #[arg(long)]
        election: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Formula to evaluate; all three when omitted.
        #[arg(long)]
        formula: Option<TransferFormula>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Gap between list votes and candidate votes per party.
    Votesplit {
        /// CSV with columns party,list_votes,candidate_votes; the shipped
        /// 2014 figures when omitted.
        #[arg(long)]
        rows: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Pool fixture name.
    #[arg(long)]
    fixture: Option<String>,
    /// Per-district election CSV.
    #[arg(long)]
    election: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Example1 { alpha, json } => example1(alpha, json),
        Command::Curves { alpha, grid_step, out } => {
            let samples = extreme_case_curves(MixRatio::new(alpha)?, &share_grid(grid_step)?)?;
            with_output(&out, |w| dataio::write_curves_csv(&samples, w))
        }
        Command::Simulate { config, out } => {
            let config: SimulationConfig = dataio::load_json(&config)?;
            let summary = run_simulation(&config)?;
            with_output(&out, |w| print_json(w, &serde_json::to_value(summary)?))
        }
        Command::SimulateSweep {
            config,
            k_min,
            k_max,
            k_step,
            out,
        } => {
            let config: SimulationConfig = dataio::load_json(&config)?;
            let ks = k_values(k_min, k_max, k_step)?;
            let rows = sweep_k(&config, &ks)?;
            with_output(&out, |w| dataio::write_k_sweep_csv(&rows, w))
        }
        Command::Allocate {
            source,
            formula,
            list_seats,
            threshold,
        } => {
            let threshold = Threshold::new(threshold)?;
            let allocation = match (source.fixture, source.election) {
                (Some(name), _) => allocate_tier(&load_fixture_pools(&name)?.tier(formula), list_seats, threshold)?,
                (None, Some(path)) => {
                    let e = dataio::load_election_csv(path)?;
                    let cfg = ApportionmentConfig {
                        threshold,
                        ..ApportionmentConfig::new(list_seats)
                    };
                    allocate_discrete(&e, formula, &cfg)?
                }
                (None, None) => unreachable!("clap requires a source"),
            };
            print_json(io::stdout().lock(), &serde_json::to_value(allocation)?)
        }
        Command::Sweep {
            fixture,
            formula,
            min,
            max,
            reference,
            threshold,
            supermajority,
            csv,
        } => {
            let threshold = Threshold::new(threshold)?;
            let table = load_fixture_pools(&fixture)?;
            let (ref_formula, ref_seats) = parse_reference(&reference)?;
            let reference = allocate_tier(&table.tier(ref_formula), ref_seats, threshold)?;
            let tier: ListTier = table.tier(formula);
            let sweep = sweep_list_seats(&tier, min..=max, &reference, threshold)?;
            let boundary = supermajority_boundary(&tier, supermajority, min..=max, threshold)?;
            if let Some(path) = csv {
                write_file(&path, |w| dataio::write_sweep_csv(&sweep, w))?;
            }
            let body = json!({
                "formula": formula,
                "reference": { "formula": ref_formula, "list_seats": ref_seats },
                "min_diff_at": sweep.min_diff_at,
                "min_diff": sweep.min_diff,
                "best": sweep.best().allocation,
                "supermajority": supermajority.to_string(),
                "supermajority_boundary": boundary,
            });
            print_json(io::stdout().lock(), &body)
        }
        Command::Manipulate {
            election,
            plan,
            formula,
            alpha,
        } => {
            let e: ElectionInput = dataio::load_election_csv(election)?;
            let strategy: Strategy = dataio::load_json(&plan)?;
            let m = MixRatio::new(alpha)?;
            let formulas = formula.map_or(TransferFormula::ALL.to_vec(), |f| vec![f]);
            let reports = formulas
                .into_iter()
                .map(|f| evaluate(&e, &strategy, f, m))
                .collect::<Result<Vec<_>, _>>()?;
            print_json(io::stdout().lock(), &serde_json::to_value(reports)?)
        }
        Command::Votesplit { rows } => {
            let rows = match rows {
                Some(path) => dataio::load_vote_split_csv(path)?,
                None => dataio::parse_vote_split_csv(&dataio::fixture_text("hungary2014_votesplit")?)?,
            };
            let stats = dataio::vote_split_stats(&rows)?;
            let body: Vec<Value> = stats
                .iter()
                .map(|s| {
                    let mut v = serde_json::to_value(s).expect("plain struct");
                    v["split_percent"] = json!(format!("{:.2}", s.split * 100.0));
                    v
                })
                .collect();
            print_json(io::stdout().lock(), &Value::Array(body))
        }
    }
}

fn example1(alpha: f64, as_json: bool) -> Result<(), Error> {
    let e = dataio::parse_election_csv(&dataio::fixture_text("example1")?)?;
    let m = MixRatio::new(alpha)?;
    let allocations = TransferFormula::ALL
        .into_iter()
        .map(|f| continuous_allocation(&e, f, m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = io::stdout().lock();
    if as_json {
        return print_json(out, &serde_json::to_value(&allocations)?);
    }
    let lines = std::iter::once(format!(
        "{:<8}{:<7}{:<16}{:<16}{:<16}{:>12}",
        "formula", "party", "constituency", "list", "seat_share", "percent"
    ))
    .chain(allocations.iter().flat_map(|a| {
        (0..a.parties.len()).map(move |i| {
            format!(
                "{:<8}{:<7}{:<16}{:<16}{:<16}{:>12.6}",
                a.formula.name(),
                a.parties[i].as_str(),
                fmt_sig(a.constituency_share[i]),
                fmt_sig(a.list_share[i]),
                fmt_sig(a.seat_share[i]),
                a.seat_share[i] * 100.0
            )
        })
    }));
    for line in lines {
        writeln!(out, "{line}").map_err(stdout_error)?;
    }
    Ok(())
}

fn k_values(min: f64, max: f64, step: f64) -> Result<Vec<f64>, Error> {
    if step.is_nan() || step <= 0.0 || min.is_nan() || max.is_nan() || min > max {
        return Err(Error::InvalidConfig(format!(
            "k range {min}..{max} step {step} is empty"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn parse_reference(s: &str) -> Result<(TransferFormula, u32), Error> {
    let bad = || Error::InvalidConfig(format!("reference {s:?} must look like nvt:93"));
    let (f, l) = s.split_once(':').ok_or_else(bad)?;
    Ok((f.parse().map_err(|_| bad())?, l.trim().parse().map_err(|_| bad())?))
}

fn load_fixture_pools(name: &str) -> Result<PoolTable, Error> {
    dataio::parse_pools_csv(&dataio::fixture_text(name)?)
}

/// Rounds every float to 12 significant digits before printing.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = fmt_sig(x).parse().expect("fmt_sig output parses");
            *v = json!(rounded);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn print_json(mut w: impl Write, v: &Value) -> Result<(), Error> {
    let mut v = v.clone();
    round_floats(&mut v);
    serde_json::to_writer_pretty(&mut w, &v)?;
    writeln!(w).map_err(stdout_error)
}

fn stdout_error(source: io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn with_output(out: &Output, body: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    match &out.out {
        Some(path) => write_file(path, body),
        None => {
            let mut stdout = io::stdout().lock();
            body(&mut stdout)?;
            stdout.flush().map_err(stdout_error)
        }
    }
}
