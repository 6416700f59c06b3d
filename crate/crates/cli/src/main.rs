use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kg_core::critical::SearchOptions;
use kg_core::gallery::Params;
use kg_core::geodesic::{TOL_GEO, TOL_PERIOD};
use kg_core::report;
use kg_core::GeoError;

#[derive(Parser)]
#[command(name = "kg", version, about = "Periodic geodesics from Killing fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the gallery entries.
    List,
    /// Critical orbits of g(K,K), with period and geodesic certificates.
    Analyze {
        entry: String,
        #[command(flatten)]
        common: Common,
    },
    /// Closed approximants of the entry's Killing field.
    Approximate {
        entry: String,
        /// Number of convergents.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Integral curve (or geodesic) from a start point, as CSV.
    Trace {
        entry: String,
        /// Comma-separated ambient coordinates.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        /// Integration time.
        #[arg(long = "T", allow_hyphen_values = true, value_parser = parse_real)]
        t: f64,
        /// Integrate the geodesic with initial velocity K instead of the flow of K.
        #[arg(long)]
        geodesic: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Two comma-separated components a,b.
    #[arg(long, allow_hyphen_values = true)]
    slope: Option<String>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Number of commuting timelike fields (commuting-t4).
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    budget: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_parser = parse_real, default_value = "50")]
    horizon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "tol-geo", value_parser = parse_real, default_value_t = TOL_GEO)]
    tol_geo: f64,
    #[arg(long = "tol-period", value_parser = parse_real, default_value_t = TOL_PERIOD)]
    tol_period: f64,
}

/// A decimal number or one of `sqrt2`, `golden`, `pi`, optionally negated.
fn parse_real(s: &str) -> Result<f64, String> {
    let (sign, body) = match s.trim().strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.trim()),
    };
    let v = match body {
        "sqrt2" => std::f64::consts::SQRT_2,
        "golden" => (1.0 + 5f64.sqrt()) / 2.0,
        "pi" => std::f64::consts::PI,
        other => other
            .parse::<f64>()
            .map_err(|_| format!("not a number or named constant: {s:?}"))?,
    };
    if !v.is_finite() {
        return Err(format!("not finite: {s:?}"));
    }
    Ok(sign * v)
}

fn parse_list(s: &str) -> Result<Vec<f64>, GeoError> {
    s.split(',')
        .map(|part| parse_real(part).map_err(GeoError::Argument))
        .collect()
}

impl Common {
    fn params(&self) -> Result<Params, GeoError> {
        let mut p = Params {
            m: self.m,
            ..Params::default()
        };
        if let Some(a) = self.alpha {
            p.alpha = a;
        }
        if let Some(t) = self.theta {
            p.theta = t;
        }
        if let Some(s) = &self.slope {
            let v = parse_list(s)?;
            if v.len() != 2 {
                return Err(GeoError::Argument(format!("slope needs two components, got {s:?}")));
            }
            p.slope = (v[0], v[1]);
        }
        Ok(p)
    }

    fn search(&self) -> SearchOptions {
        SearchOptions {
            budget: self.budget,
            seed: self.seed,
            horizon: self.horizon,
            tol_geo: self.tol_geo,
            tol_period: self.tol_period,
            ..SearchOptions::default()
        }
    }

    fn emit(&self, text: &str) -> Result<(), GeoError> {
        match &self.out {
            Some(path) => fs::write(path, text)
                .map_err(|e| GeoError::Argument(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("KG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        // only fails if a pool was already built, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<(), GeoError> {
    match cli.command {
        Command::List => {
            for (name, about) in report::list_entries() {
                println!("{name:<15} {about}");
            }
            Ok(())
        }
        Command::Analyze { entry, common } => {
            let r = report::analyze(&entry, &common.params()?, &common.search())?;
            common.emit(&(r.to_json() + "\n"))
        }
        Command::Approximate { entry, n, common } => {
            let r = report::approximate(&entry, &common.params()?, n, &common.search())?;
            common.emit(&(r.to_json() + "\n"))
        }
        Command::Trace {
            entry,
            start,
            t,
            geodesic,
            common,
        } => {
            let start = parse_list(&start)?;
            let csv = report::trace(&entry, &common.params()?, &start, t, geodesic, &common.search())?;
            common.emit(&csv)
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
