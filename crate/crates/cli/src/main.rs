use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyplyap::experiments::{self, ResultRow};
use hyplyap::geodesic::digit_stream;
use hyplyap::hodge::{analyze, parabolic_degrees};
use hyplyap::lyapunov::{self, Normalization};
use hyplyap::monodromy;
use hyplyap::params::HGParams;
use hyplyap::winding::winding_events;

mod config;

#[derive(Parser, Debug)]
#[command(name = "hyplyap", version, about = "Lyapunov exponents and Hodge data of hypergeometric local systems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Global {
    /// Continued-fraction digits per run.
    #[arg(long, global = true)]
    pub digits: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Independent streams per run.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Batches used for error bars.
    #[arg(long, global = true)]
    pub windows: Option<usize>,
    /// Digits between QR renormalizations.
    #[arg(long, global = true)]
    pub qr_period: Option<u32>,
    /// Digits before a geodesic is resampled.
    #[arg(long, global = true)]
    pub refresh: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub normalization: Option<NormArg>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// `key = value` file with defaults for the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormArg {
    Flow,
    Length,
    Digit,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Flow => Normalization::FlowTime,
            NormArg::Length => Normalization::HyperbolicLength,
            NormArg::Digit => Normalization::PerDigit,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// All fourteen Calabi-Yau families.
    CyTable,
    /// Angles of (TS)^-1 for one Calabi-Yau family.
    CyMu {
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
    },
    /// Calabi-Yau families over a grid of (mu1, mu2).
    ScanMu {
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
    /// Rank-two family alpha = (r, 2r), beta = (0, x).
    N2 {
        /// A value or `start:end:count`.
        #[arg(long)]
        r: String,
        #[arg(long)]
        x: String,
    },
    /// Weight-two slice theta = (x, x, 1/2, y, y).
    Weight2 {
        #[arg(long, default_value_t = 0.01)]
        xmin: f64,
        #[arg(long, default_value_t = 0.1)]
        xmax: f64,
        #[arg(long, default_value_t = 0.01)]
        ymin: f64,
        #[arg(long, default_value_t = 0.1)]
        ymax: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 5)]
        steps: usize,
    },
    /// Exponents for one parameter set.
    Lyap {
        /// Comma separated, decimals or `p/q`.
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
    },
    /// Hodge numbers and parabolic degrees for one parameter set.
    Hodge {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
    },
    /// Dump the digit stream.
    Digits {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Dump the cusp winding of each run.
    Winding {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

/// `v` or `start:end:count`, inclusive of both ends.
fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![v.trim().parse().with_context(|| format!("bad value {v:?}"))?]),
        [a, b, k] => {
            let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
            let k: usize = k.trim().parse()?;
            Ok(linspace(a, b, k))
        }
        _ => bail!("expected a value or start:end:count, got {s:?}"),
    }
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
    }
}

fn sink(global: &Global) -> Result<Box<dyn Write>> {
    Ok(match &global.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_rows(rows: &[ResultRow], global: &Global) -> Result<()> {
    let mut out = sink(global)?;
    if global.json {
        serde_json::to_writer_pretty(&mut out, &experiments::to_json(rows))?;
        writeln!(out)?;
    } else {
        experiments::write_csv(rows, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn emit_json(value: &serde_json::Value, global: &Global) -> Result<()> {
    let mut out = sink(global)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let global = config::merge(cli.global)?;
    let cfg = config::run_config(&global);
    cfg.validate()?;
    match cli.command {
        Command::CyTable => emit_rows(&experiments::cy_table(&cfg)?, &global),
        Command::CyMu { c, d } => {
            let (mu1, mu2) = experiments::cy_mu(c, d)?;
            emit_json(&serde_json::json!({ "c": c, "d": d, "mu1": mu1, "mu2": mu2 }), &global)
        }
        Command::ScanMu { grid } => {
            if grid == 0 {
                bail!("--grid must be positive");
            }
            emit_rows(&experiments::scan_mu_plane(&experiments::mu_grid(grid), &cfg)?, &global)
        }
        Command::N2 { r, x } => {
            let (rs, xs) = (parse_range(&r)?, parse_range(&x)?);
            let points: Vec<(f64, f64)> = rs.iter().flat_map(|&r| xs.iter().map(move |&x| (r, x))).collect();
            emit_rows(&experiments::n2_scan(&points, &cfg)?, &global)
        }
        Command::Weight2 { xmin, xmax, ymin, ymax, steps } => {
            let xs = linspace(xmin, xmax, steps);
            let ys = linspace(ymin, ymax, steps);
            let points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
            emit_rows(&experiments::weight2_scan(&points, &cfg)?, &global)
        }
        Command::Lyap { alpha, beta } => {
            let params = HGParams::parse(&alpha, &beta)?;
            if global.out.is_some() && !global.json {
                return emit_rows(&[experiments::lyap_row(&params, &cfg)?], &global);
            }
            let est = lyapunov::estimate(&monodromy::build(&params)?, &cfg)?;
            emit_json(
                &serde_json::json!({
                    "exponents": est.exponents,
                    "stderr": est.stderr,
                    "sum_positive": est.sum_positive,
                    "time": est.elapsed_time,
                    "digits": est.digits,
                }),
                &global,
            )
        }
        Command::Hodge { alpha, beta } => {
            let params = HGParams::parse(&alpha, &beta)?;
            let d = analyze(&params)?;
            let deg = parabolic_degrees(&d);
            emit_json(
                &serde_json::json!({
                    "f_alpha": d.f_alpha,
                    "f_beta": d.f_beta,
                    "h": d.h,
                    "gamma": d.gamma,
                    "gamma_floor": d.gamma_floor,
                    "signature": [d.signature.0, d.signature.1],
                    "delta": deg.delta,
                    "deg_par": deg.deg_par,
                }),
                &global,
            )
        }
        Command::Digits { count } => {
            let mut out = sink(&global)?;
            writeln!(out, "index,digit,letter,roofTime,refreshed")?;
            for (i, e) in digit_stream(cfg.seed, count, cfg.refresh_period).iter().enumerate() {
                writeln!(out, "{i},{},{},{},{}", e.digit, e.letter, e.roof_time, e.refreshed)?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Winding { count } => {
            let mut out = sink(&global)?;
            writeln!(out, "runIndex,letter,runLength,cusp,turns")?;
            for r in winding_events(&digit_stream(cfg.seed, count, cfg.refresh_period)) {
                writeln!(out, "{},{},{},{},{}", r.run_index, r.letter, r.run_length, r.cusp, r.turns)?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.25").unwrap(), vec![0.25]);
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_range("0:1").is_err());
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from(["hyplyap", "--digits", "500", "n2", "--r", "0.1", "--x", "0.55"]).unwrap();
        assert_eq!(cli.global.digits, Some(500));
        assert!(matches!(cli.command, Command::N2 { .. }));
        let cli = Cli::try_parse_from(["hyplyap", "cy-mu", "--c", "46", "--d", "1", "--json"]).unwrap();
        assert!(cli.global.json);
    }
}
