//! `dgint`: command-line driver for the integration library.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dgint::config::{RunConfig, Tolerances, DEFAULT_CAP};
use dgint::report::error_block;

#[derive(Parser, Debug)]
#[command(
    name = "dgint",
    version,
    about = "Integrate local dg manifolds to local Lie groupoids"
)]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    #[arg(long, global = true, default_value_t = 1e-10)]
    picard_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    newton_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    mc_tol: f64,
    /// Polynomial degree cap D.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long, global = true, default_value_t = 64)]
    rk4_steps: usize,
    /// Also write the report to this file.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify Q^2 = 0 symbolically.
    CheckQ2 { chart: String },
    /// Solve the MC equation on a simplex from closed data.
    McSolve {
        chart: String,
        /// Closed degree-0 form as a table; random small data if omitted.
        #[arg(long)]
        closed: Option<PathBuf>,
        /// Simplex dimension for random data.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        amp: f64,
        #[arg(long)]
        vertex: Option<usize>,
        /// Write the solution table here.
        #[arg(long)]
        form_out: Option<PathBuf>,
    },
    /// Fill a horn of MC forms.
    HornFill {
        chart: String,
        #[arg(long)]
        k: usize,
        /// Face tables in order, skipping face k.
        #[arg(long = "face", num_args = 1..)]
        faces: Vec<PathBuf>,
        #[arg(long)]
        form_out: Option<PathBuf>,
    },
    /// Product of two arrows of the gauge-fixed groupoid.
    Multiply {
        chart: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Vec<f64>,
        /// Base point in W^0 (empty for Lie algebras).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
    },
    /// Table of products over a grid, with the BCH oracle for Lie charts.
    GroupoidTable {
        chart: String,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
    },
    /// Gauge-flow retraction of a perturbed MC form.
    Retract {
        chart: String,
        /// MC form as a table; a random solution if omitted.
        #[arg(long)]
        form: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        amp: f64,
        #[arg(long, default_value_t = 20.0)]
        tau: f64,
        #[arg(long)]
        form_out: Option<PathBuf>,
    },
    /// Ranks and defects of the simplicial symplectic form.
    SymplecticReport {
        chart: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
    },
    /// Run the full invariant suite.
    Selftest,
}

impl GlobalOpts {
    fn config(&self, command: &str, chart: Option<&str>) -> RunConfig {
        RunConfig {
            chart_path: chart.map(str::to_string),
            command: command.to_string(),
            tol: Tolerances {
                picard_tol: self.picard_tol,
                newton_tol: self.newton_tol,
                mc_tol: self.mc_tol,
                ..Tolerances::default()
            },
            cap: self.cap,
            rk4_steps: self.rk4_steps,
            output: self.output.as_ref().map(|p| p.display().to_string()),
            seed: self.seed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = commands::name(&cli.command);
    let cfg = cli.opts.config(name, commands::chart(&cli.command));
    let (text, code) = match cfg
        .validate()
        .and_then(|_| commands::run(&cli.command, &cfg))
    {
        Ok(report) => {
            let code = if report.all_pass() { 0 } else { 1 };
            (report.render(), code)
        }
        Err(e) => (error_block(name, &e), 2),
    };
    print!("{text}");
    if let Some(path) = &cli.opts.output {
        if let Err(e) = std::fs::write(path, &text) {
            eprint!("{}", error_block(name, &e.into()));
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
