//! `coregion` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 invalid model or
//! parameters (including usage errors), 3 numerical failure.

mod data;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use coregion::cokrige::{cokrige, cross_validate, CvConfig, Target};
use coregion::crosscov::{validate_model, Family, ValidityReport, CONSTRUCTION_CHECK, TOLERANCE};
use coregion::empirical::{
    cross_variogram, empirical_cross_cov, kernel_cross_cov_matrix, pseudo_cross_variogram, Centering, LagBinning,
};
use coregion::estimate::{fit_staged, two_stage_plan, FitSpec, Mask, NelderMeadOptions};
use coregion::gaussian::simulate;
use coregion::{CrossCovModel, SpatialDesign};

use data::{read_dataset_file, read_sites_file, write_atomic, write_dataset, Dataset};

#[derive(Parser, Debug)]
#[command(name = "coregion", version, about = "Multivariate spatial covariance models: simulate, fit, predict, validate")]
struct Cli {
    /// Worker threads for multi-start fits and matrix assembly. Results do
    /// not depend on this setting.
    #[arg(long, global = true, env = "COREGION_THREADS", default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate replications of a model on a grid or a site list.
    Simulate(SimulateArgs),
    /// Maximum-likelihood fit, optionally in stages.
    Fit(FitArgs),
    /// Co-krige every variable at target sites.
    Predict(PredictArgs),
    /// Run the randomized nonnegative-definiteness check on a model config.
    Validate(ValidateArgs),
    /// Binned or kernel-smoothed empirical cross-covariances.
    Empirical(EmpiricalArgs),
    /// Hold-out cross-validation scores (RMSE, CRPS) of a fitted model.
    Cv(CvArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Model config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Regular 2-d grid `NX,NY,SPACING`.
    #[arg(long, conflicts_with = "sites", required_unless_present = "sites")]
    grid: Option<String>,
    /// Site list with header `site,x1,..,xd`.
    #[arg(long)]
    sites: Option<PathBuf>,
    /// Number of independent replications.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated variable names (default `v1,..,vp`).
    #[arg(long)]
    variables: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Initial model config (TOML); its structure fixes the family.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// One stage per flag: `all`, `none`, `only:PAT,..` or `except:PAT,..`,
    /// where patterns match parameter names or prefixes.
    #[arg(long = "stage", conflicts_with = "two_stage")]
    stages: Vec<String>,
    /// Marginal parameters first with zero cross-correlation, then the
    /// cross parameters (multivariate Matérn only).
    #[arg(long)]
    two_stage: bool,
    #[arg(long, default_value_t = 5)]
    starts: usize,
    /// Standard deviation of start perturbations in unconstrained space.
    #[arg(long, default_value_t = 0.5)]
    spread: f64,
    /// Likelihood evaluations per start.
    #[arg(long, default_value_t = 2000)]
    max_evals: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fitted config, with the fit report as leading comments.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Target site list with header `site,x1,..,xd`.
    #[arg(long)]
    targets: PathBuf,
    /// Predict the smooth process instead of the noisy observable.
    #[arg(long)]
    latent: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated design sizes.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Estimator {
    /// Binned cross-covariance.
    Cov,
    /// Covariance-based cross-variogram (no 1/2 factor).
    Variogram,
    /// Pseudo cross-variogram.
    Pseudo,
}

#[derive(Args, Debug)]
struct EmpiricalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Estimator::Cov)]
    estimator: Estimator,
    /// Regular distance classes of this width centred on multiples of it.
    #[arg(long, requires = "max_lag", conflicts_with_all = ["edges", "kernel"])]
    bin_width: Option<f64>,
    #[arg(long)]
    max_lag: Option<f64>,
    /// Explicit comma-separated distance class edges.
    #[arg(long, conflicts_with = "kernel")]
    edges: Option<String>,
    /// Split distance classes into this many angular sectors.
    #[arg(long)]
    sectors: Option<usize>,
    /// Treat the data as known zero-mean instead of removing sample means.
    #[arg(long)]
    pre_centered: bool,
    /// Kernel-smoothed estimator with this bandwidth, evaluated at `--targets`.
    #[arg(long, requires = "targets")]
    kernel: Option<f64>,
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CvArgs {
    /// Fitted model config; parameters are not re-estimated per split.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Fraction of sites held out in each repeat.
    #[arg(long, default_value_t = 0.25)]
    fraction: f64,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model label in the score table (default: config file stem).
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    latent: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Invalid command-line arguments detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<coregion::Error>() {
            return if e.is_numerical() { 3 } else { 2 };
        }
    }
    1
}

fn read_model(path: &Path) -> Result<CrossCovModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    CrossCovModel::from_toml(&text).with_context(|| format!("in model config {}", path.display()))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| usage(format!("{what}: cannot parse `{s}`"))))
        .collect()
}

fn parse_mask(text: &str) -> Result<Mask> {
    fn names(rest: &str) -> Vec<&str> {
        rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
    }
    match text.split_once(':') {
        None if text == "all" => Ok(Mask::All),
        None if text == "none" => Ok(Mask::None),
        Some(("only", rest)) => Ok(Mask::only(&names(rest))),
        Some(("except", rest)) => Ok(Mask::all_except(&names(rest))),
        _ => Err(usage(format!("stage `{text}`: expected all, none, only:PAT,.. or except:PAT,.."))),
    }
}

fn print_validity(report: &ValidityReport) {
    println!(
        "validity: {} ({} trials, threshold -{:e} * trace / (n p))",
        if report.passed() { "passed" } else { "FAILED" },
        report.trials.len(),
        TOLERANCE
    );
    for t in &report.trials {
        println!(
            "  trial {} n={} min_eigenvalue={:.6e} threshold={:.6e} {}",
            t.trial,
            t.n,
            t.min_eigenvalue,
            t.threshold,
            if t.passed() { "ok" } else { "FAIL" }
        );
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let model = read_model(&a.config)?;
    let (ids, design) = match (&a.grid, &a.sites) {
        (Some(g), _) => {
            let v: Vec<f64> = parse_list(g, "--grid")?;
            if v.len() != 3 || v[0] < 1.0 || v[1] < 1.0 || v[0].fract() != 0.0 || v[1].fract() != 0.0 || !(v[2] > 0.0) {
                return Err(usage("--grid expects NX,NY,SPACING with positive integers NX, NY and SPACING > 0"));
            }
            let d = SpatialDesign::grid(v[0] as usize, v[1] as usize, v[2]);
            ((1..=d.len()).map(|k| k.to_string()).collect(), d)
        }
        (None, Some(path)) => {
            let s = read_sites_file(path)?;
            (s.ids, s.design)
        }
        (None, None) => return Err(usage("one of --grid or --sites is required")),
    };
    if design.dim() != model.dim() {
        return Err(usage(format!(
            "design has {} coordinates but the model is defined on R^{}",
            design.dim(),
            model.dim()
        )));
    }
    let p = model.p();
    let variables: Vec<String> = match &a.variables {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        None => (1..=p).map(|i| format!("v{i}")).collect(),
    };
    if variables.len() != p {
        return Err(usage(format!("--variables names {} variables but the model has {p}", variables.len())));
    }
    let (sizes, trials, seed) = CONSTRUCTION_CHECK;
    print_validity(&validate_model(&model, sizes, trials, seed));
    let sample = simulate(&model, &design, a.reps as usize, a.seed)?;
    let data = Dataset {
        sample,
        site_ids: ids,
        rep_ids: (1..=a.reps).map(|t| t.to_string()).collect(),
        variables,
    };
    write_atomic(&a.out, |w| write_dataset(w, &data))?;
    log::info!("wrote {} rows to {}", data.sample.n() * data.sample.replications(), a.out.display());
    Ok(())
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let mut init = read_model(&a.config)?;
    let data = read_dataset_file(&a.data)?;
    check_compatible(&init, &data)?;
    let base = FitSpec {
        mask: Mask::All,
        starts: a.starts.max(1),
        spread: a.spread,
        optimizer: NelderMeadOptions {
            max_evals: a.max_evals,
            ..NelderMeadOptions::default()
        },
    };
    let plan = if a.two_stage {
        let Family::MultiMatern(m) = init.family() else {
            return Err(usage("--two-stage requires a multi_matern model"));
        };
        let plan = two_stage_plan(m.variant, &base);
        // the marginal stage assumes independent variables
        let values: Vec<f64> = init
            .params()
            .iter()
            .map(|p| if p.name.starts_with("beta[") { 0.0 } else { p.value })
            .collect();
        init = init.with_values(&values)?;
        plan
    } else if a.stages.is_empty() {
        vec![base]
    } else {
        a.stages
            .iter()
            .map(|s| {
                Ok(FitSpec {
                    mask: parse_mask(s)?,
                    ..base.clone()
                })
            })
            .collect::<Result<_>>()?
    };
    let fit = fit_staged(&plan, &data.sample, &init, a.seed)?;
    let mut header = String::new();
    for (s, r) in fit.stages.iter().enumerate() {
        header.push_str(&format!("[stage {s}]\n{}", r.report()));
        println!("stage {s}: loglik = {:.16e} (free: {})", r.loglik, r.free.join(", "));
    }
    println!("loglik = {:.16e}", fit.loglik);
    let toml = fit.model.to_toml()?;
    print!("{toml}");
    write_atomic(&a.out, |w| {
        for line in header.lines() {
            if line.starts_with('#') {
                writeln!(w, "#{line}")?;
            } else {
                writeln!(w, "# {line}")?;
            }
        }
        w.write_all(toml.as_bytes())?;
        Ok(())
    })
}

fn check_compatible(model: &CrossCovModel, data: &Dataset) -> Result<()> {
    if data.sample.p() != model.p() {
        return Err(usage(format!(
            "data has {} variables but the model has {}",
            data.sample.p(),
            model.p()
        )));
    }
    if data.sample.design().dim() != model.dim() {
        return Err(usage(format!(
            "data has {} coordinates but the model is defined on R^{}",
            data.sample.design().dim(),
            model.dim()
        )));
    }
    Ok(())
}

fn target_of(latent: bool) -> Target {
    if latent {
        Target::Latent
    } else {
        Target::Observable
    }
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let data = read_dataset_file(&a.data)?;
    check_compatible(&model, &data)?;
    let targets = read_sites_file(&a.targets)?;
    if targets.design.dim() != model.dim() {
        return Err(usage("target sites and model have different dimensions"));
    }
    let pred = cokrige(&model, &data.sample, &targets.design, target_of(a.latent))?;
    if pred.jitter > 0.0 {
        log::warn!("observation covariance needed diagonal jitter {:e}", pred.jitter);
    }
    let d = model.dim();
    write_atomic(&a.out, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["site".to_string()];
        header.extend((1..=d).map(|c| format!("x{c}")));
        header.extend(["rep", "variable", "mean", "variance"].map(String::from));
        out.write_record(&header)?;
        for (t, rep) in data.rep_ids.iter().enumerate() {
            for (k, id) in targets.ids.iter().enumerate() {
                for (i, var) in data.variables.iter().enumerate() {
                    let q = k * model.p() + i;
                    let mut row = vec![id.clone()];
                    row.extend(targets.design.site(k).iter().map(|v| v.to_string()));
                    row.extend([rep.clone(), var.clone(), pred.mean[t][q].to_string(), pred.variance[t][q].to_string()]);
                    out.write_record(&row)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    })
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("cannot read {}", a.config.display()))?;
    let model = CrossCovModel::from_toml_structural(&text).with_context(|| format!("in model config {}", a.config.display()))?;
    let (sizes, trials, seed) = CONSTRUCTION_CHECK;
    let sizes = match &a.sizes {
        Some(s) => parse_list(s, "--sizes")?,
        None => sizes.to_vec(),
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(usage("--sizes must list positive design sizes"));
    }
    let report = validate_model(&model, &sizes, a.trials.unwrap_or(trials), a.seed.unwrap_or(seed));
    println!("model: p = {}, dim = {}, parameters = {}", model.p(), model.dim(), model.params().len());
    print_validity(&report);
    report.into_result()?;
    Ok(())
}

fn cmd_empirical(a: &EmpiricalArgs) -> Result<()> {
    let data = read_dataset_file(&a.data)?;
    let centering = if a.pre_centered {
        Centering::PreCentered
    } else {
        Centering::SampleMean
    };
    if let Some(lambda) = a.kernel {
        let targets = read_sites_file(a.targets.as_ref().expect("clap enforces --targets"))?;
        if a.estimator != Estimator::Cov {
            return Err(usage("--kernel only supports the cov estimator"));
        }
        let sample = match centering {
            Centering::SampleMean => coregion::empirical::center(&data.sample),
            Centering::PreCentered => data.sample.clone(),
        };
        let k = kernel_cross_cov_matrix(&sample, lambda, &targets.design)?;
        let p = sample.p();
        return write_atomic(&a.out, |w| {
            writeln!(w, "site1,site2,i,j,estimate")?;
            for r in 0..k.nrows() {
                for c in 0..k.ncols() {
                    writeln!(w, "{},{},{},{},{}", targets.ids[r / p], targets.ids[c / p], r % p, c % p, k[(r, c)])?;
                }
            }
            Ok(())
        });
    }
    let edges: Vec<f64> = match (&a.edges, a.bin_width, a.max_lag) {
        (Some(e), _, _) => parse_list(e, "--edges")?,
        (None, Some(w), Some(m)) => {
            if !(w > 0.0 && m >= 0.0) {
                return Err(usage("--bin-width must be positive and --max-lag nonnegative"));
            }
            match LagBinning::regular(w, m) {
                LagBinning::Distance { edges } => edges,
                _ => unreachable!("regular binning is distance-based"),
            }
        }
        _ => return Err(usage("give --bin-width with --max-lag, --edges, or --kernel with --targets")),
    };
    let binning = match a.sectors {
        Some(sectors) => LagBinning::Sector { edges, sectors },
        None => LagBinning::Distance { edges },
    };
    let est = match a.estimator {
        Estimator::Cov => empirical_cross_cov(&data.sample, &binning, centering)?,
        Estimator::Variogram => cross_variogram(&data.sample, &binning)?,
        Estimator::Pseudo => pseudo_cross_variogram(&data.sample, &binning, centering)?,
    };
    write_atomic(&a.out, |w| Ok(est.write_tidy(w)?))
}

fn cmd_cv(a: &CvArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let data = read_dataset_file(&a.data)?;
    check_compatible(&model, &data)?;
    let config = CvConfig {
        holdout_fraction: a.fraction,
        repeats: a.repeats,
        seed: a.seed,
        target: target_of(a.latent),
    };
    let scores = cross_validate(&model, &data.sample, &config)?;
    let name = match &a.name {
        Some(n) => n.clone(),
        None => a.model.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned()),
    };
    let mut table = Vec::new();
    scores.write_tidy(&name, &mut table, true)?;
    print!("{}", String::from_utf8_lossy(&table));
    write_atomic(&a.out, |w| Ok(w.write_all(&table)?))
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("cannot start the worker pool")?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Empirical(a) => cmd_empirical(a),
        Command::Cv(a) => cmd_cv(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
