use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use icecast_core::grid::PointId;
use icecast_core::kalman::{TrendKind, DEFAULT_SEASONAL_PERIOD};
use icecast_core::risk::DEFAULT_THRESHOLD;

mod commands;
mod plot;

use commands::{Failure, FitArgs, Outcome, SynthArgs, EXIT_OK, EXIT_USAGE};

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  usage error (bad flag, bad date, invalid parameter)
  2  data error (parse, range, conflict, corruption, fetch, routing)
  3  model error (insufficient data, degenerate model, missing model)";

/// Sea-ice concentration store, state-space forecasts and hazard routing.
#[derive(Parser)]
#[command(name = "icecast", version, after_help = EXIT_CODES)]
struct Cli {
    /// Store root directory.
    #[arg(long, global = true, default_value = "icestore")]
    store: PathBuf,

    /// Grid file (`#grid v1`). Defaults to the built-in four-point grid.
    #[arg(long, global = true)]
    grid: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Window {
    #[arg(long)]
    point: PointId,
    /// First day, YYYY-MM-DD. Open if omitted.
    #[arg(long)]
    from: Option<NaiveDate>,
    /// Last day, YYYY-MM-DD. Open if omitted.
    #[arg(long)]
    to: Option<NaiveDate>,
}

#[derive(Subcommand)]
enum Command {
    /// Append an `#obs v1` file to the store (all or nothing).
    Ingest {
        file: PathBuf,
        /// Truncate timestamps to midnight UTC instead of rejecting them.
        #[arg(long)]
        coerce_midnight: bool,
    },
    /// Download a point's records over HTTP and append them.
    Fetch {
        #[arg(long)]
        point: PointId,
        #[arg(long)]
        from: NaiveDate,
        #[arg(long)]
        to: NaiveDate,
        #[arg(long, env = "ICECAST_ENDPOINT")]
        endpoint: String,
    },
    /// Print stored records for one point.
    Query {
        #[command(flatten)]
        window: Window,
        #[arg(long, value_parser = ["obs", "json"], default_value = "obs")]
        format: String,
    },
    /// Chart a point's series as SVG or in the terminal.
    Plot {
        #[command(flatten)]
        window: Window,
        #[arg(long, conflicts_with = "out")]
        ascii: bool,
        #[arg(long, required_unless_present = "ascii")]
        out: Option<PathBuf>,
    },
    /// Fit a state-space model to one point and write an `#icemodel v1` file.
    Fit {
        #[command(flatten)]
        window: Window,
        #[arg(long, default_value = "level")]
        kind: TrendKind,
        /// Number of seasonal harmonics.
        #[arg(long, default_value_t = 0)]
        seasonal: usize,
        /// Seasonal period in days.
        #[arg(long, default_value_t = DEFAULT_SEASONAL_PERIOD)]
        period: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forecast from a fitted model, one CSV line per day ahead.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        horizon: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a `#riskfield v1` from one model per grid point.
    Risk {
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        horizon: u32,
        /// Concentration threshold that counts as hazardous.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum-risk route between two cells of a risk field.
    Route {
        #[arg(long)]
        risk: PathBuf,
        #[arg(long)]
        from_cell: PointId,
        #[arg(long)]
        to_cell: PointId,
    },
    /// Write a simulated `#obs v1` series.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        days: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        point: PointId,
        #[arg(long, default_value = "2012-01-01")]
        start: NaiveDate,
        #[arg(long, default_value_t = 0.5)]
        level: f64,
        /// Amplitude of an annual-style cosine; 0 disables it.
        #[arg(long, default_value_t = 0.0)]
        amplitude: f64,
        #[arg(long, default_value_t = DEFAULT_SEASONAL_PERIOD)]
        period: f64,
        /// Daily level variance.
        #[arg(long, default_value_t = 0.0)]
        process: f64,
        /// Observation noise variance.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Recompute every checksum in the store.
    Verify,
    /// Print a grid file: the built-in grid or a WxH mesh.
    Grid {
        #[arg(long, value_parser = parse_mesh)]
        mesh: Option<(u32, u32)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mesh(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    Ok((
        w.parse().map_err(|_| format!("bad width {w:?}"))?,
        h.parse().map_err(|_| format!("bad height {h:?}"))?,
    ))
}

fn run(cli: Cli) -> Outcome {
    let store = cli.store.as_path();
    match cli.command {
        Command::Ingest { file, coerce_midnight } => commands::ingest(store, &file, coerce_midnight),
        Command::Fetch {
            point,
            from,
            to,
            endpoint,
        } => {
            let q = commands::window(point, Some(from), Some(to))?;
            commands::fetch(store, &endpoint, &q)
        }
        Command::Query { window, format } => {
            let q = commands::window(window.point, window.from, window.to)?;
            commands::query(store, &q, format == "json")
        }
        Command::Plot { window, ascii, out } => {
            let q = commands::window(window.point, window.from, window.to)?;
            commands::plot(store, &q, ascii, out.as_deref())
        }
        Command::Fit {
            window,
            kind,
            seasonal,
            period,
            out,
        } => {
            let q = commands::window(window.point, window.from, window.to)?;
            if !(period > 0.0 && period.is_finite()) {
                return Err(Failure::usage("--period must be positive"));
            }
            let args = FitArgs {
                kind,
                harmonics: seasonal,
                period,
            };
            commands::fit(store, &q, &args, &out)
        }
        Command::Forecast { model, horizon, out } => {
            if horizon == 0 {
                return Err(Failure::usage("--horizon must be at least 1"));
            }
            commands::forecast_cmd(&model, horizon, out.as_deref())
        }
        Command::Risk {
            model,
            horizon,
            threshold,
            out,
        } => {
            if horizon == 0 {
                return Err(Failure::usage("--horizon must be at least 1"));
            }
            if !(threshold > 0.0 && threshold < 1.0) {
                return Err(Failure::usage("--threshold must lie strictly between 0 and 1"));
            }
            let grid = commands::load_grid(cli.grid.as_deref())?;
            commands::risk(&grid, &model, horizon, threshold, out.as_deref())
        }
        Command::Route {
            risk,
            from_cell,
            to_cell,
        } => {
            let grid = commands::load_grid(cli.grid.as_deref())?;
            commands::route(&grid, &risk, from_cell, to_cell)
        }
        Command::Synth {
            seed,
            days,
            out,
            point,
            start,
            level,
            amplitude,
            period,
            process,
            noise,
        } => {
            let args = SynthArgs {
                seed,
                days,
                point,
                start,
                level,
                amplitude,
                period,
                process,
                noise,
            };
            commands::synth(&args, &out)
        }
        Command::Verify => commands::verify(store),
        Command::Grid { mesh, out } => commands::grid(mesh, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version go to stdout and are not failures.
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::from(EXIT_OK)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
