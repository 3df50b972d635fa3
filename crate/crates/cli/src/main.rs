use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ispca_cli::commands::{cmd_eval, cmd_fit, cmd_plot, cmd_transform, FitParams};
use ispca_cli::io::{LoadOptions, TargetOverride};
use ispca_cli::CliError;
use ispca_core::Method;

/// Supervised dimension reduction: fit PCA/SPCA/PSPCA or iterative
/// supervised principal components on labeled CSV data, apply saved models,
/// compare methods under repeated splits, and plot latent features.
#[derive(Parser)]
#[command(name = "ispca", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Auto,
    Regression,
    Binary,
    Multiclass,
}

impl From<TargetArg> for TargetOverride {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Auto => TargetOverride::Auto,
            TargetArg::Regression => TargetOverride::Regression,
            TargetArg::Binary => TargetOverride::Binary,
            TargetArg::Multiclass => TargetOverride::Multiclass,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV file (rectangular, numeric except the label column)
    #[arg(long)]
    data: PathBuf,
    /// Label column: header name or 0-based index
    #[arg(long)]
    label_col: Option<String>,
    /// The file has no header row
    #[arg(long)]
    no_header: bool,
    /// Override target-type inference
    #[arg(long, value_enum, default_value_t = TargetArg::Auto)]
    target: TargetArg,
}

impl DataArgs {
    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            label_col: self.label_col.clone(),
            has_header: !self.no_header,
            target: self.target.into(),
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| {
        format!(
            "unknown method '{s}' (expected one of {})",
            Method::ALL.map(|m| m.as_str()).join(", ")
        )
    })
}

#[derive(Args)]
struct FitFlags {
    /// Dimension-reduction method
    #[arg(long, default_value = "ispca", value_parser = parse_method)]
    method: Method,
    /// Total number of latent features (default: 50, or 20 for multiclass)
    #[arg(long)]
    k_total: Option<usize>,
    /// Permutation-test level for the supervised stopping rule
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Permutations per test
    #[arg(long, default_value_t = 1000)]
    n_perms: usize,
    /// Screening-threshold grid size
    #[arg(long, default_value_t = 10)]
    grid_size: usize,
    /// Feature window limit for the threshold grid
    #[arg(long, default_value_t = 500)]
    window: usize,
    /// Per-feature p-value level for SPCA screening
    #[arg(long, default_value_t = 0.001)]
    screening_p: f64,
    /// Master seed; all randomness derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reserved for library-internal parallelism; execution is currently
    /// single-threaded and output bytes never depend on this value
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl FitFlags {
    fn params(&self) -> FitParams {
        FitParams {
            method: self.method,
            k_total: self.k_total,
            alpha: self.alpha,
            n_perms: self.n_perms,
            grid_size: self.grid_size,
            window: self.window,
            screening_p: self.screening_p,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write model.json, model_w.csv, Z.csv and summary.txt
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        flags: FitFlags,
        /// Output directory
        #[arg(long, default_value = "ispca-out")]
        out_dir: PathBuf,
    },
    /// Apply a saved model to new data and write the latent features
    Transform {
        /// Path to a model.json written by `fit`
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Output CSV path
        #[arg(long, default_value = "Z.csv")]
        out: PathBuf,
    },
    /// Compare methods with repeated stratified splits and a downstream
    /// classifier; writes report.csv and report.json
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        flags: FitFlags,
        /// Comma-separated method list
        #[arg(long, default_value = "pca,spca,pspca,ispca-naive,ispca-small,ispca")]
        methods: String,
        /// Number of random splits
        #[arg(long, default_value_t = 50)]
        repeats: usize,
        /// Fraction of rows held out per split
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        /// Output directory
        #[arg(long, default_value = "ispca-out")]
        out_dir: PathBuf,
    },
    /// Project data through a saved model and write a two-component scatter
    /// as CSV and SVG
    Plot {
        /// Path to a model.json written by `fit`
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Latent features to plot, 1-based, as `i,j`
        #[arg(long, default_value = "1,2")]
        components: String,
        /// Output directory
        #[arg(long, default_value = "ispca-out")]
        out_dir: PathBuf,
    },
}

fn parse_components(s: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("--components expects 'i,j', got '{s}'")));
    }
    let i = parts[0].trim().parse::<usize>();
    let j = parts[1].trim().parse::<usize>();
    match (i, j) {
        (Ok(i), Ok(j)) => Ok((i, j)),
        _ => Err(CliError::Usage(format!("--components expects two integers, got '{s}'"))),
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let name = part.trim();
        if name.is_empty() {
            continue;
        }
        let m = parse_method(name).map_err(CliError::Usage)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { data, flags, out_dir } => {
            cmd_fit(&data.data, &data.load_options(), &flags.params(), &out_dir)
        }
        Command::Transform { model, data, out } => {
            cmd_transform(&model, &data.data, &data.load_options(), &out)
        }
        Command::Eval { data, flags, methods, repeats, test_fraction, out_dir } => {
            let methods = parse_methods(&methods)?;
            cmd_eval(
                &data.data,
                &data.load_options(),
                &flags.params(),
                &methods,
                repeats,
                test_fraction,
                &out_dir,
            )
        }
        Command::Plot { model, data, components, out_dir } => {
            let comps = parse_components(&components)?;
            cmd_plot(&model, &data.data, &data.load_options(), comps, &out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
