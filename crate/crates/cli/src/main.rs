mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cgmy_eds::calibration::{
    calibrate, parse_quotes_csv, CalibrationConfig, CalibrationReport, Market,
};
use cgmy_eds::eds::{eds_rate, CouponFrequency, DiscountCurve, EdsContract};
use cgmy_eds::hyperexp::{
    fit_exponential_mixture, parse_node_list, Abscissa, CgmyParams, FitConfig, FitGrid,
    PRESET_STARTS,
};
use cgmy_eds::inversion::{passage_curve, DayCount, EulerInversionParams, FirstPassageCurve};
use cgmy_eds::levymodel::{HyperExpLevyModel, ModelDocument};
use cgmy_eds::pipeline::{run_pipeline, RunConfig};
use cgmy_eds::validate::run_checks;
use cgmy_eds::wienerhopf::RootSolver;
use cgmy_eds::{Complex64, Error, Result};

use output::{fmt_f64, to_csv, to_json};

/// Environment variable overriding the worker thread count.
const THREADS_VAR: &str = "CGMY_EDS_THREADS";

#[derive(Parser)]
#[command(
    name = "cgmy-eds",
    version,
    about = "Equity default swap pricing under a hyperexponential CGMY approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit exponential-mixture nodes to the power kernel x^-(1+Y).
    Fit(FitArgs),
    /// Roots, partial-fraction coefficients and atom of the upward factor.
    WhFactor(WhArgs),
    /// Daily survival and passage density for a down barrier (CSV).
    FirstPassage(PassageArgs),
    /// Par rate of an equity default swap.
    PriceEds(PriceArgs),
    /// Fit C, G, M to European option quotes with Y fixed.
    Calibrate(CalibrateArgs),
    /// Cross-check the pipeline against closed forms and Monte Carlo.
    Validate(ValidateArgs),
    /// Run fit, model assembly, passage curve and pricing from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value_t = 0.5)]
    y: f64,
    /// Comma-separated starting nodes.
    #[arg(long)]
    starts: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    grid_min: f64,
    #[arg(long, default_value_t = 5.0)]
    grid_max: f64,
    #[arg(long, default_value_t = 0.025)]
    grid_step: f64,
    #[arg(long, value_enum, default_value_t = AbscissaArg::PointIndex)]
    abscissa: AbscissaArg,
    /// Give the last node a weight using this spacing.
    #[arg(long)]
    terminal_spacing: Option<f64>,
    /// Write `index,node,weight` CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AbscissaArg {
    PointIndex,
    GridValue,
}

/// Where the model comes from: a model JSON file, or a run config.
#[derive(Args)]
struct ModelSource {
    /// Model JSON file (as written by `pipeline --out-dir`).
    #[arg(long, conflicts_with = "config")]
    model: Option<PathBuf>,
    /// Run config TOML; the model is assembled from it. Defaults apply when
    /// neither option is given.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct WhArgs {
    #[command(flatten)]
    source: ModelSource,
    /// Real transform argument a > 0.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Factor the reflected model (the downward factor).
    #[arg(long)]
    down: bool,
}

#[derive(Args)]
struct InversionArgs {
    #[arg(long = "euler-a")]
    euler_a: Option<f64>,
    #[arg(long)]
    n_terms: Option<usize>,
    #[arg(long)]
    m_euler: Option<usize>,
    /// Daily probability from the density: `mixed` divides by 365,
    /// `consistent` by 360 (default: config value).
    #[arg(long, value_enum)]
    day_count: Option<DayCountArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DayCountArg {
    Mixed,
    Consistent,
}

impl InversionArgs {
    fn params(&self, base: EulerInversionParams) -> EulerInversionParams {
        EulerInversionParams {
            a: self.euler_a.unwrap_or(base.a),
            n_terms: self.n_terms.unwrap_or(base.n_terms),
            m_euler: self.m_euler.unwrap_or(base.m_euler),
        }
    }

    fn day_count(&self, config: &RunConfig) -> DayCount {
        match self.day_count {
            Some(DayCountArg::Mixed) => DayCount::Mixed,
            Some(DayCountArg::Consistent) => DayCount::Consistent,
            None => config.day_count(),
        }
    }
}

#[derive(Args)]
struct PassageArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long)]
    barrier: f64,
    #[arg(long)]
    years: f64,
    #[command(flatten)]
    inversion: InversionArgs,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long)]
    barrier: f64,
    #[arg(long, default_value_t = 0.5)]
    recovery: f64,
    #[arg(long)]
    maturity_years: f64,
    #[arg(long, default_value = "quarterly")]
    coupon_freq: String,
    /// Flat continuously compounded discount rate (default: config rate).
    #[arg(long, conflicts_with = "curve_csv")]
    rate: Option<f64>,
    /// Discount curve CSV with header `day,discount`.
    #[arg(long)]
    curve_csv: Option<PathBuf>,
    /// Write the passage curve CSV here.
    #[arg(long)]
    passage_csv: Option<PathBuf>,
    #[command(flatten)]
    inversion: InversionArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    quotes_csv: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    y: f64,
    #[arg(long)]
    spot: f64,
    #[arg(long, default_value_t = 0.05)]
    rate: f64,
    #[arg(long, default_value_t = 0.0)]
    div_yield: f64,
    /// Starting point `C,G,M`.
    #[arg(long, default_value = "0.5,2,10")]
    init: String,
    /// Accepted maturity band `lo,hi` in years.
    #[arg(long, default_value = "1,2")]
    maturity_band: String,
    /// Calibrate without the small-jump diffusion.
    #[arg(long)]
    no_diffusion: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo time step in years.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    no_bridge: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write result.json, model.json, passage.csv and resolved.toml here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_toml_str(&read(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_model(source: &ModelSource) -> Result<(RunConfig, HyperExpLevyModel)> {
    let config = load_config(source.config.as_deref())?;
    let model = match &source.model {
        Some(p) => ModelDocument::from_json(&read(p)?)?.model()?,
        None => config.build_model()?.1,
    };
    Ok((config, model))
}

fn parse_list(text: &str, what: &str, len: usize) -> Result<Vec<f64>> {
    let v = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| Error::InvalidInput(format!("{what}: {e}")))?;
    if v.len() != len {
        return Err(Error::InvalidInput(format!(
            "{what} needs {len} comma-separated values"
        )));
    }
    Ok(v)
}

fn passage_csv(curve: &FirstPassageCurve) -> String {
    to_csv(
        &["day", "t_years", "survival", "density"],
        (1..=curve.days()).map(|n| {
            vec![
                n.to_string(),
                fmt_f64(FirstPassageCurve::t_years(n)),
                fmt_f64(curve.survival_at(n)),
                fmt_f64(curve.density[n - 1]),
            ]
        }),
    )
}

fn cmd_fit(args: &FitArgs) -> Result<String> {
    let starts = match &args.starts {
        Some(s) => parse_node_list(s)?,
        None => PRESET_STARTS.to_vec(),
    };
    let cfg = FitConfig {
        grid: FitGrid {
            min: args.grid_min,
            max: args.grid_max,
            step: args.grid_step,
        },
        abscissa: match args.abscissa {
            AbscissaArg::PointIndex => Abscissa::PointIndex,
            AbscissaArg::GridValue => Abscissa::GridValue,
        },
        terminal_spacing: args.terminal_spacing,
        ..FitConfig::default()
    };
    let fit = fit_exponential_mixture(args.y, &starts, &cfg)?;
    if let Some(path) = &args.csv {
        let rows = fit.nodes.iter().enumerate().map(|(i, u)| {
            let w = fit.weights.get(i).map_or(String::new(), |w| fmt_f64(*w));
            vec![(i + 1).to_string(), fmt_f64(*u), w]
        });
        write(path, &to_csv(&["index", "node", "weight"], rows))?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        y: f64,
        nodes: &'a [f64],
        weights: &'a [f64],
        residual_norm: f64,
        iterations: usize,
        evaluations: usize,
        max_relative_error: f64,
    }
    Ok(to_json(&Summary {
        y: fit.y,
        nodes: &fit.nodes,
        weights: &fit.weights,
        residual_norm: fit.residual_norm,
        iterations: fit.iterations,
        evaluations: fit.evaluations,
        max_relative_error: fit.max_relative_error(),
    }))
}

fn cmd_wh(args: &WhArgs) -> Result<String> {
    let (_, model) = load_model(&args.source)?;
    let model = if args.down { model.reflect() } else { model };
    let factor = RootSolver::new(&model)?.factor(Complex64::new(args.a, 0.0))?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, (r, c)) in factor.rho.iter().zip(&factor.coeffs).enumerate() {
        rows.push(vec![
            "root".into(),
            (i + 1).to_string(),
            fmt_f64(r.re),
            fmt_f64(r.im),
        ]);
        rows.push(vec![
            "coeff".into(),
            (i + 1).to_string(),
            fmt_f64(c.re),
            fmt_f64(c.im),
        ]);
    }
    rows.push(vec![
        "atom".into(),
        "0".into(),
        fmt_f64(factor.atom.re),
        fmt_f64(factor.atom.im),
    ]);
    Ok(to_csv(&["kind", "index", "re", "im"], rows))
}

fn cmd_passage(args: &PassageArgs) -> Result<String> {
    let (config, model) = load_model(&args.source)?;
    let days = cgmy_eds::eds::maturity_days(args.years)?;
    let curve = passage_curve(
        &model,
        args.barrier,
        days,
        &args.inversion.params(config.inversion),
        args.inversion.day_count(&config),
    )?;
    Ok(passage_csv(&curve))
}

fn cmd_price(args: &PriceArgs) -> Result<String> {
    let (config, model) = load_model(&args.source)?;
    let freq: CouponFrequency = args.coupon_freq.parse()?;
    let contract =
        EdsContract::with_frequency(args.recovery, args.barrier, args.maturity_years, freq)?;
    let curve = match (&args.curve_csv, args.rate) {
        (Some(p), _) => DiscountCurve::from_csv(&read(p)?, config.discount.allow_increasing)?,
        (None, Some(r)) => DiscountCurve::flat(r)?,
        (None, None) => config.discount_curve()?,
    };
    let passage = passage_curve(
        &model,
        args.barrier,
        contract.maturity_days,
        &args.inversion.params(config.inversion),
        args.inversion.day_count(&config),
    )?;
    if let Some(path) = &args.passage_csv {
        write(path, &passage_csv(&passage))?;
    }
    let quote = eds_rate(&contract, &curve, &passage)?;
    #[derive(Serialize)]
    struct Diagnostics {
        protection_leg: f64,
        premium_annuity: f64,
        monotonicity_repairs: usize,
        maturity_days: usize,
        coupon_days: Vec<usize>,
    }
    #[derive(Serialize)]
    struct Report {
        rate_bp: f64,
        rate: f64,
        survival_at_maturity: f64,
        diagnostics: Diagnostics,
    }
    Ok(to_json(&Report {
        rate_bp: quote.rate_bp,
        rate: quote.rate,
        survival_at_maturity: quote.survival_at_maturity,
        diagnostics: Diagnostics {
            protection_leg: quote.protection_leg,
            premium_annuity: quote.premium_annuity,
            monotonicity_repairs: passage.repairs,
            maturity_days: contract.maturity_days,
            coupon_days: contract.coupon_days,
        },
    }))
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<String> {
    let quotes = parse_quotes_csv(&read(&args.quotes_csv)?)?;
    let init = parse_list(&args.init, "--init", 3)?;
    let band = parse_list(&args.maturity_band, "--maturity-band", 2)?;
    let initial = CgmyParams::new(init[0], init[1], init[2], args.y)?;
    let market = Market {
        spot: args.spot,
        rate: args.rate,
        dividend: args.div_yield,
    };
    let mut cfg = CalibrationConfig {
        maturity_band: [band[0], band[1]],
        ..CalibrationConfig::default()
    };
    cfg.diffusion.enabled = !args.no_diffusion;
    let fit = cgmy_eds::hyperexp::ExpMixtureFit::from_nodes(
        args.y,
        cgmy_eds::hyperexp::PRESET_NODES.to_vec(),
        None,
        &FitGrid::default(),
        Abscissa::default(),
    )?;
    let report: CalibrationReport = calibrate(&quotes, &market, &initial, &fit, &cfg)?;
    Ok(to_json(&report))
}

fn cmd_validate(args: &ValidateArgs) -> Result<(String, bool)> {
    let config = load_config(args.config.as_deref())?;
    let mut sim = config.simulation;
    if let Some(p) = args.paths {
        sim.paths = p;
    }
    if let Some(s) = args.seed {
        sim.seed = s;
    }
    if let Some(dt) = args.dt {
        sim.dt = dt;
    }
    if args.no_bridge {
        sim.bridge = false;
    }
    let checks = run_checks(&config, &sim)?;
    let width = checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = format!(
        "{:<width$}  {:>24}  {:>24}  {:>24}  result\n",
        "check", "value", "reference", "tolerance"
    );
    for c in &checks {
        out.push_str(&format!(
            "{:<width$}  {:>24}  {:>24}  {:>24}  {}\n",
            c.name,
            fmt_f64(c.value),
            fmt_f64(c.reference),
            fmt_f64(c.tolerance),
            if c.passed { "PASS" } else { "FAIL" }
        ));
    }
    Ok((out, checks.iter().all(|c| c.passed)))
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<String> {
    let config = load_config(args.config.as_deref())?;
    let result = run_pipeline(&config)?;
    let report = to_json(&result);
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        write(&dir.join("result.json"), &report)?;
        write(&dir.join("model.json"), &result.model.to_json())?;
        write(&dir.join("resolved.toml"), &result.config.to_toml_string())?;
        if let Some(curve) = &result.curve {
            write(&dir.join("passage.csv"), &passage_csv(curve))?;
        }
    }
    Ok(report)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "{THREADS_VAR} must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_config_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::WhFactor(a) => cmd_wh(a),
        Command::FirstPassage(a) => cmd_passage(a),
        Command::PriceEds(a) => cmd_price(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Validate(a) => match cmd_validate(a) {
            Ok((table, passed)) => {
                print!("{table}");
                return if passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                };
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
