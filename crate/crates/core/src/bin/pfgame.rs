use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pfgame::oracle::{run_oracle_checks, GridSpec};
use pfgame::sweep::{run_single, run_sweep, ConfigError, ConfigSource, Table};

const EXIT_CONFIG: u8 = 1;
const EXIT_CONTRACT: u8 = 2;

#[derive(Parser)]
#[command(name = "pfgame", version, about = "Advisor-customer opinion game analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a single parameter set.
    Analyze(Common),
    /// Sweep one parameter over a range.
    Sweep(Common),
    /// Compare analytic results against the brute-force oracles.
    OracleCheck(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<String>,
    /// Parameter to sweep.
    #[arg(long)]
    param: Option<String>,
    /// Sweep range as `lo:hi:steps`.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<String>,
    /// RNG seed for the deviation checks (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Grid step for the welfare oracle, in [1e-4, 1e-1] (default 1e-3).
    #[arg(long)]
    grid_resolution: Option<f64>,
    /// Comma-separated subset of equilibria, admissibility, welfare, pos.
    #[arg(long)]
    outputs: Option<String>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Customer opinion without advisor interaction.
    #[arg(long, allow_hyphen_values = true)]
    d: Option<f64>,
    /// Advisor's private opinion.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Bank's target opinion for customers.
    #[arg(long, allow_hyphen_values = true)]
    w: Option<f64>,
    /// Number of customers.
    #[arg(long, allow_hyphen_values = true)]
    n: Option<f64>,
    /// Advisor weight on staying close to the private opinion.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Remuneration coefficient paid by the bank.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Advisor weight on agreement with customers.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Customer dissonance sensitivity.
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<f64>,
    /// Return the customer expects on their own.
    #[arg(long = "r-d", alias = "r_d", allow_hyphen_values = true)]
    r_d: Option<f64>,
    /// Return proposed by the advisor.
    #[arg(long = "r-s", alias = "r_s", allow_hyphen_values = true)]
    r_s: Option<f64>,
}

impl Common {
    fn source(&self) -> Result<ConfigSource, ConfigError> {
        let mut src = match &self.config {
            Some(path) => ConfigSource::read(path)?,
            None => ConfigSource::default(),
        };
        let numeric = [
            ("d", self.d),
            ("x", self.x),
            ("w", self.w),
            ("n", self.n),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("r_d", self.r_d),
            ("r_s", self.r_s),
            ("grid_resolution", self.grid_resolution),
        ];
        for (key, value) in numeric {
            if let Some(v) = value {
                src.set(key, v.to_string())?;
            }
        }
        let text = [
            ("param", self.param.clone()),
            ("range", self.range.clone()),
            ("outputs", self.outputs.clone()),
            ("seed", self.seed.map(|s| s.to_string())),
        ];
        for (key, value) in text {
            if let Some(v) = value {
                src.set(key, v)?;
            }
        }
        Ok(src)
    }

    fn emit(&self, body: &str) -> Result<(), String> {
        match &self.out {
            Some(path) => fs::write(path, body).map_err(|e| format!("cannot write {path}: {e}")),
            None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| e.to_string()),
        }
    }

    fn render(&self, table: &Table) -> String {
        match self.format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json_lines(),
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn run_table(args: &Common, sweep: bool) -> ExitCode {
    let config = match args.source().and_then(|s| s.resolve()) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let table = if sweep {
        run_sweep(&config)
    } else {
        run_single(&config).map(|r| Table { rows: vec![r] })
    };
    let table = match table {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    if let Err(e) = args.emit(&args.render(&table)) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let violations = table.contract_violations();
    if violations > 0 {
        eprintln!("{violations} row(s) violated a numerical contract");
        return ExitCode::from(EXIT_CONTRACT);
    }
    ExitCode::SUCCESS
}

fn run_oracle(args: &Common) -> ExitCode {
    let config = match args.source().and_then(|s| s.resolve()) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let params = match config.params() {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let spec = match GridSpec::new(config.grid_resolution) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let checks = match run_oracle_checks(&params, spec, config.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("oracle check failed: {e}");
            return ExitCode::from(EXIT_CONTRACT);
        }
    };
    let mut body = String::new();
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        body.push_str(&format!("{verdict} {}: {}\n", c.name, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    body.push_str(&format!("{} passed, {failed} failed\n", checks.len() - failed));
    if let Err(e) = args.emit(&body) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if failed > 0 {
        ExitCode::from(EXIT_CONTRACT)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match &cli.command {
        Command::Analyze(args) => run_table(args, false),
        Command::Sweep(args) => run_table(args, true),
        Command::OracleCheck(args) => run_oracle(args),
    }
}
