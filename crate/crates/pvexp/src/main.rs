use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pvexp::compare::{compare, density_table};
use pvexp::config::{thread_count, ExperimentConfig};
use pvexp::formats::{provenance, read_density_csv, read_z_csv, write_density_csv, write_json, write_z_csv, Meta};
use pvexp::montecarlo::{constant_tol, expansion_ensemble, simulate_z};
use pvexp::order::verify_order;
use pvexp::wickcheck::{run_suite, Perturbation};
use pvexp::Error;
use pvexp_core::combinatorics::{c_g_infinity, c_tau_terms, mu, rho_power_sum};
use pvexp_core::expansion::{cdf_decreasing_intervals, normalization_error, z_grid};
use pvexp_core::exponent::{catalog, FunctionalId};
use pvexp_core::kernel::c0;
use serde_json::json;

#[derive(Parser)]
#[command(name = "pvexp", version, about = "Asymptotic expansion of weighted second-order power variations under fBm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print mu, rho_hat power sums, C_G and C_tau as JSON.
    Constants(Common),
    /// Simulate Z_n samples to CSV.
    Simulate(Common),
    /// Tabulate baseline and corrected density and CDF to CSV.
    Expand(Common),
    /// KS comparison of Z_n samples with a density table.
    Compare(CompareArgs),
    /// Fit the n-exponent of catalog functionals.
    VerifyOrder(OrderArgs),
    /// Run the Wick oracle validation suite.
    WickCheck(WickArgs),
}

/// Experiment settings; flags override the config file.
#[derive(Args, Clone, Default)]
struct Common {
    /// Plain `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// one | inverse-quadratic
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long = "H")]
    hurst: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    #[arg(long)]
    expansion_paths: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    /// cholesky | circulant
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    z_width: Option<String>,
    #[arg(long)]
    z_points: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    bootstrap: Option<String>,
    /// Worker threads; defaults to $PVEXP_THREADS, then all cores.
    #[arg(long)]
    threads: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("model", &self.model),
            ("sigma", &self.sigma),
            ("weight", &self.weight),
            ("k", &self.k),
            ("H", &self.hurst),
            ("n", &self.n),
            ("kappa", &self.kappa),
            ("paths", &self.paths),
            ("expansion_paths", &self.expansion_paths),
            ("seed", &self.seed),
            ("x0", &self.x0),
            ("method", &self.method),
            ("z_width", &self.z_width),
            ("z_points", &self.z_points),
            ("tol", &self.tol),
            ("bootstrap", &self.bootstrap),
            ("threads", &self.threads),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.threads = thread_count(cfg.threads)?;
        cfg.validate()?;
        if let Some(t) = cfg.threads {
            // fails only if a pool already exists, which is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Z_n samples from `simulate`.
    #[arg(long)]
    z: PathBuf,
    /// Density table from `expand`; regenerated from the settings when absent.
    #[arg(long)]
    density: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OrderArgs {
    /// Catalog functional such as `G(1,1;0)`, or `all`.
    #[arg(long, default_value = "all")]
    functional: String,
    /// Comma-separated grid sizes.
    #[arg(long, default_value = "64,128,256,512,1024,2048,4096")]
    n_grid: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct WickArgs {
    /// Add one to product_formula_coeff(P,Q,R); the suite must then fail.
    #[arg(long, value_name = "P,Q,R")]
    perturb_coeff: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn meta_of(cfg: &ExperimentConfig) -> Meta {
    Meta { model: cfg.model.clone(), n: cfg.n, k: cfg.k, hurst: cfg.hurst, seed: cfg.seed }
}

fn cmd_constants(args: &Common) -> Result<bool, Error> {
    let cfg = args.resolve()?;
    let h = cfg.hurst_param()?;
    let k = cfg.k;
    let mu_table = (0..=k).map(|l| Ok(json!({ "l": l, "value": mu(k, l, h)? }))).collect::<Result<Vec<_>, Error>>()?;
    let mut rho_sums = serde_json::Map::new();
    let mut rho_tails = serde_json::Map::new();
    for m in 1..=2 * k {
        let s = rho_power_sum(m, h, cfg.tol)?;
        rho_sums.insert(m.to_string(), json!(s.value));
        rho_tails.insert(m.to_string(), json!(s.tail));
    }
    let cg = c_g_infinity(k, h, cfg.tol)?;
    let (ct, terms) = c_tau_terms(k, h, cfg.tol.max(constant_tol(k)))?;
    let terms: Vec<_> = terms
        .iter()
        .map(|t| {
            json!({
                "l1": t.index.lambda.l1, "l2": t.index.lambda.l2, "m": t.index.lambda.m, "l3": t.index.l3,
                "class": t.index.class.label(),
                "integer": t.coefficient.integer.to_string(), "c0_power": t.coefficient.c0_power,
                "double_sum": t.double_sum.value, "tail": t.double_sum.tail,
            })
        })
        .collect();
    let report = json!({
        "H": cfg.hurst,
        "k": k,
        "c0": c0(h),
        "mu_table": mu_table,
        "rho_sums": rho_sums,
        "C_G_infinity": cg.value,
        "C_tau": ct.value,
        "C_tau_terms": terms,
        "tail_certificates": { "rho_sums": rho_tails, "C_G_infinity": cg.tail, "C_tau": ct.tail },
        "version": pvexp::formats::version(),
    });
    write_json(output(args.out.as_deref())?, &report)?;
    Ok(true)
}

fn cmd_simulate(args: &Common) -> Result<bool, Error> {
    let cfg = args.resolve()?;
    let z = simulate_z(&cfg.path_spec()?, cfg.paths, cfg.seed)?;
    write_z_csv(output(args.out.as_deref())?, &meta_of(&cfg), &provenance("simulate", &cfg.echo()), &z)?;
    Ok(true)
}

fn cmd_expand(args: &Common) -> Result<bool, Error> {
    let cfg = args.resolve()?;
    let ens = expansion_ensemble(&cfg.path_spec()?, cfg.expansion_paths, cfg.seed)?;
    let rows = density_table(&ens, cfg.n, cfg.z_width, cfg.z_points)?;
    let grid = z_grid(&ens, cfg.z_width, cfg.z_points);
    let mut prov = provenance("expand", &cfg.echo());
    prov.push(format!("C_tau={}", ens.c_tau));
    prov.push(format!("normalization_error={:e}", normalization_error(&ens, cfg.n, cfg.z_width, 10_001)?));
    prov.push(format!("cdf_decreasing_intervals={}", cdf_decreasing_intervals(&ens, cfg.n, &grid)?));
    write_density_csv(output(args.out.as_deref())?, &meta_of(&cfg), &prov, &rows)?;
    Ok(true)
}

fn cmd_compare(args: &CompareArgs) -> Result<bool, Error> {
    let cfg = args.common.resolve()?;
    let (z_meta, z) = read_z_csv(&args.z)?;
    let (table_meta, rows) = match &args.density {
        Some(path) => read_density_csv(path)?,
        None => {
            let ens = expansion_ensemble(&cfg.path_spec()?, cfg.expansion_paths, cfg.seed)?;
            (meta_of(&cfg), density_table(&ens, cfg.n, cfg.z_width, cfg.z_points)?)
        }
    };
    let report = compare(&z_meta, &z, &table_meta, &rows, cfg.bootstrap, cfg.seed)?;
    write_json(output(args.common.out.as_deref())?, &report)?;
    Ok(report.pass)
}

fn cmd_verify_order(args: &OrderArgs) -> Result<bool, Error> {
    let cfg = args.common.resolve()?;
    let h = cfg.hurst_param()?;
    let ids: Vec<FunctionalId> = if args.functional == "all" { catalog(cfg.k)? } else { vec![args.functional.parse()?] };
    let n_grid: Vec<usize> = args
        .n_grid
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("bad n-grid entry '{s}'"))))
        .collect::<Result<_, _>>()?;
    let reports =
        ids.into_iter().map(|id| verify_order(id, cfg.k, h, &n_grid, cfg.paths, cfg.seed, cfg.bootstrap)).collect::<Result<Vec<_>, _>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let mut out = output(args.common.out.as_deref())?;
    if reports.len() == 1 {
        write_json(&mut out, &reports[0])?;
    } else {
        write_json(&mut out, &json!({ "reports": reports, "pass": pass }))?;
    }
    Ok(pass)
}

fn cmd_wick_check(args: &WickArgs) -> Result<bool, Error> {
    let perturb = args.perturb_coeff.as_deref().map(str::parse::<Perturbation>).transpose()?;
    let report = run_suite(perturb, args.seed)?;
    write_json(output(args.out.as_deref())?, &report)?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Constants(a) => cmd_constants(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Expand(a) => cmd_expand(a),
        Command::Compare(a) => cmd_compare(a),
        Command::VerifyOrder(a) => cmd_verify_order(a),
        Command::WickCheck(a) => cmd_wick_check(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
