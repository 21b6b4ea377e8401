//! Command-line interface and command implementations.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use penrose_core::analysis::{decay_certificate_window, energy_inequality_check, sup_series, weighted_norm_report, SliceOptions};
use penrose_core::checks::{self, CheckReport, BUILTIN_CHECKS};
use penrose_core::compat::{check_compatibility, compute_jet};
use penrose_core::geometry::{to_einstein, to_minkowski, EinsteinEvent, MinkowskiEvent};
use penrose_core::solver::{run, Trajectory};
use penrose_core::Error as CoreError;

use crate::config::Config;
use crate::error::{exit, CliError, Result};
use crate::forms::{builtin_forms, check_forms, parse_forms, BUILTIN_FORMS};
use crate::output::{digest, verdict, write_jet, write_trajectory, OutputDir, ReportDoc};

#[derive(Debug, Parser)]
#[command(name = "penrose", version, about = "Conformal compactification tools for exterior wave problems")]
pub struct Cli {
    /// Seed for every randomized check; overrides `[verify] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// `(t, r)` rows to `(T, R, Omega)`.
    Forward,
    /// `(T, R)` rows to `(t, r)`.
    Backward,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map a CSV of events between Minkowski and cylinder coordinates.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "forward")]
        direction: Direction,
        /// Output directory; the table goes to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a quadratic or cubic form against the null condition.
    CheckNull {
        /// Form file in the tuple format.
        form: Option<PathBuf>,
        /// Built-in fixture instead of a file.
        #[arg(long, conflicts_with = "form")]
        builtin: Option<String>,
        /// Exit with a verdict failure unless every slice is null.
        #[arg(long)]
        require_null: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compatibility jet of the configured data at the boundary.
    Compat {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the radial solver and write frames, monitors and a manifest.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one named check, or the built-in battery when no name is given.
    Verify {
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Decay exponent parameter; overrides `[verify] sigma`.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate several configurations concurrently, one subdirectory each.
    Sweep {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Checks that need a solver run.
pub const TRAJECTORY_CHECKS: [&str; 6] =
    ["energy-conservation", "energy-inequality", "morawetz", "decay", "weighted-norm", "compat"];

fn load(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn out_dir(flag: Option<PathBuf>, cfg: &Config, fallback: &str) -> PathBuf {
    flag.or_else(|| cfg.output.dir.as_ref().map(|d| cfg.base.join(d))).unwrap_or_else(|| PathBuf::from(fallback))
}

fn config_json(cfg: &Config) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg.resolved()?).expect("configuration is serializable"))
}

/// Run a parsed command line and return the process exit code.
pub fn run_cli(cli: Cli) -> u8 {
    match dispatch(cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Transform { input, direction, out } => transform(&input, direction, out.as_deref()),
        Command::CheckNull { form, builtin, require_null, out } => check_null(form.as_deref(), builtin.as_deref(), require_null, out),
        Command::Compat { config, out } => {
            let cfg = load(config.as_deref())?;
            let dir = out_dir(out, &cfg, "out");
            compat(&cfg, &dir)
        }
        Command::Simulate { config, out } => {
            let cfg = load(config.as_deref())?;
            let dir = out_dir(out, &cfg, "out");
            simulate(&cfg, &dir, seed)
        }
        Command::Verify { check, config, sigma, out } => {
            let mut cfg = load(config.as_deref())?;
            if let Some(s) = seed {
                cfg.verify.seed = s;
            }
            if let Some(s) = sigma {
                cfg.verify.sigma = s;
            }
            let dir = out_dir(out, &cfg, "out");
            verify(&cfg, check.as_deref(), &dir)
        }
        Command::Sweep { configs, out } => sweep(&configs, &out, seed),
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Transform table. A first row that does not parse as numbers is a header.
pub fn transform(input: &Path, direction: Direction, out: Option<&Path>) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(input).map_err(|e| CliError::csv(input, e))?;
    let header: &[&str] = match direction {
        Direction::Forward => &["t", "r", "T", "R", "Omega", "error"],
        Direction::Backward => &["T", "R", "t", "r", "error"],
    };
    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(header).map_err(|e| CliError::csv(input, e))?;
    let (mut total, mut failed, mut domain) = (0usize, 0usize, false);
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(input, e))?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        let nums: Vec<Option<f64>> = rec.iter().map(parse_number).collect();
        if idx == 0 && nums.iter().all(Option::is_none) {
            continue;
        }
        total += 1;
        let raw: Vec<String> = rec.iter().map(|s| s.trim().to_string()).collect();
        let pad = |mut v: Vec<String>, width: usize| {
            v.resize(width, String::new());
            v
        };
        let (a, b) = match nums[..] {
            [Some(a), Some(b)] => (a, b),
            _ => {
                failed += 1;
                let msg = format!("parse: expected two numbers, got {:?}", raw);
                eprintln!("{}:{line}: {msg}", input.display());
                let mut row = pad(raw, header.len() - 1);
                row.push(msg);
                table.write_record(&row).map_err(|e| CliError::csv(input, e))?;
                continue;
            }
        };
        let result: std::result::Result<Vec<f64>, CoreError> = match direction {
            Direction::Forward => MinkowskiEvent::new(a, b).map(|ev| {
                let res = to_einstein(&ev);
                vec![res.einstein.time, res.einstein.polar, res.omega_factor]
            }),
            Direction::Backward => EinsteinEvent::new(a, b).and_then(|ev| to_minkowski(&ev)).map(|m| vec![m.t, m.r]),
        };
        let mut row = vec![a.to_string(), b.to_string()];
        match result {
            Ok(vals) => {
                row.extend(vals.iter().map(f64::to_string));
                row.push(String::new());
            }
            Err(e) => {
                failed += 1;
                domain = true;
                eprintln!("{}:{line}: {e}", input.display());
                row = pad(row, header.len() - 1);
                row.push(e.to_string());
            }
        }
        table.write_record(&row).map_err(|e| CliError::csv(input, e))?;
    }
    let bytes = table.into_inner().map_err(|e| CliError::io(input, e.into_error()))?;
    match out {
        Some(dir) => {
            let mut od = OutputDir::create(dir)?;
            od.write_text("transform.csv", &String::from_utf8(bytes).expect("csv output is UTF-8"))?;
            od.record("transform", failed == 0);
            od.finish("transform", None, 0)?;
        }
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::io("<stdout>", e))?,
    }
    if failed > 0 {
        return Err(CliError::Rows { failed, total, domain });
    }
    Ok(())
}

pub fn check_null(form: Option<&Path>, builtin: Option<&str>, require_null: bool, out: Option<PathBuf>) -> Result<()> {
    let (forms, source) = match (form, builtin) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let forms = parse_forms(&text).map_err(|e| CliError::parse(path, e.line, e.message))?;
            (forms, text)
        }
        (None, Some(name)) => {
            let forms = builtin_forms(name)
                .ok_or_else(|| CliError::Config(format!("unknown built-in form {name:?}; expected one of {BUILTIN_FORMS:?}")))?;
            (forms, format!("builtin:{name}"))
        }
        (None, None) => q0_default(),
    };
    let rep = check_forms(&forms);
    print!("{}", rep.text);
    println!("verdict: {}", if rep.null { "null" } else { "non-null" });
    if let Some(dir) = out {
        let mut od = OutputDir::create(&dir)?;
        let doc = serde_json::json!({
            "name": "check-null",
            "anchor": "null condition",
            "inputs_digest": digest(&[source.as_bytes()]),
            "value": rep.residual,
            "threshold": if rep.exact { 0.0 } else { penrose_core::nullform::FLOAT_TOL },
            "bound": "<=",
            "verdict": verdict(rep.null),
            "exact": rep.exact,
            "slices": rep.text.lines().collect::<Vec<_>>(),
        });
        od.write_json("check-null.json", &doc)?;
        od.record("check-null", rep.null);
        od.finish("check-null", None, 0)?;
    }
    if require_null && !rep.null {
        return Err(CliError::Verdict("form violates the null condition".into()));
    }
    Ok(())
}

fn q0_default() -> (crate::forms::Forms, String) {
    (builtin_forms("q0").expect("q0 is built in"), "builtin:q0".into())
}

pub fn compat(cfg: &Config, dir: &Path) -> Result<()> {
    let (f, g) = cfg.data_profiles()?;
    let nl = cfg.nonlinearity()?;
    let v = &cfg.verify;
    let jet = compute_jet(&f, &g, &nl, v.jet_order)?;
    let rep = check_compatibility(&jet, &cfg.obstacle()?, v.compat_order, v.compat_tol)?;
    let mut od = OutputDir::create(dir)?;
    write_jet(&mut od, "jets.csv", &jet)?;
    let cfg_toml = cfg.resolved()?.to_toml();
    let worst = rep.orders.iter().fold(0.0f64, |m, o| m.max(o.boundary_value.abs()));
    let orders: Vec<serde_json::Value> = rep
        .orders
        .iter()
        .map(|o| serde_json::json!({ "order": o.order, "boundary_value": o.boundary_value, "pass": o.pass }))
        .collect();
    let doc = serde_json::json!({
        "name": "compat",
        "anchor": "compatibility of order s",
        "inputs_digest": digest(&[b"compat", cfg_toml.as_bytes()]),
        "value": worst,
        "threshold": rep.tol,
        "bound": "<=",
        "verdict": verdict(rep.pass),
        "order": v.compat_order,
        "first_failure": rep.first_failure,
        "orders": orders,
    });
    od.write_json("compat.json", &doc)?;
    for o in &rep.orders {
        println!("psi_{}(r_b) = {:.6e} {}", o.order, o.boundary_value, verdict(o.pass));
    }
    match rep.first_failure {
        None => println!("compatible to order {} (tol {:.3e})", v.compat_order, rep.tol),
        Some(k) => println!("not compatible: fails at order {k} (tol {:.3e})", rep.tol),
    }
    od.record("compat", rep.pass);
    od.finish("compat", Some(config_json(cfg)?), cfg.verify.seed)?;
    if !rep.pass {
        return Err(CliError::Verdict(format!("data not compatible to order {}", v.compat_order)));
    }
    Ok(())
}

pub fn simulate(cfg: &Config, dir: &Path, seed: Option<u64>) -> Result<()> {
    let solver = cfg.solver_config()?;
    let mut od = OutputDir::create(dir)?;
    let (traj, failure) = match run(&solver) {
        Ok(t) => (t, None),
        // keep the frames up to the blow-up and report it after writing them
        Err(CoreError::NonFinite { time, partial }) => (*partial, Some(CliError::NonFinite(time))),
        Err(e) => return Err(e.into()),
    };
    write_trajectory(&mut od, &traj, cfg.output.frames)?;
    od.write_text("config.toml", &cfg.resolved()?.to_toml())?;
    let m = &traj.monitors;
    let e0 = m.e_total.first().copied().unwrap_or(0.0);
    let drift = m.e_total.iter().fold(0.0f64, |a, e| if e0 > 0.0 { a.max(((e - e0) / e0).abs()) } else { a });
    let sup = m.sup_u.iter().fold(0.0f64, |a, b| a.max(*b));
    println!("t_last = {}, frames = {}, max sup|u| = {sup:.6e}, max relative energy change = {drift:.3e}", traj.t_last(), traj.frames.len());
    od.record("completed", failure.is_none());
    od.finish("simulate", Some(config_json(cfg)?), seed.unwrap_or(cfg.verify.seed))?;
    failure.map_or(Ok(()), Err)
}

fn slice_options(cfg: &Config) -> SliceOptions {
    SliceOptions { rows: cfg.verify.slice_rows, dt: cfg.verify.slice_dt, ..SliceOptions::default() }
}

fn pair(w: [f64; 2]) -> (f64, f64) {
    (w[0], w[1])
}

/// Run one check, writing its report and series into `od`.
fn run_check(cfg: &Config, name: &str, od: &mut OutputDir, traj: &mut Option<Trajectory>) -> Result<CheckReport> {
    let v = &cfg.verify;
    if BUILTIN_CHECKS.contains(&name) {
        return Ok(checks::run_builtin(name, v.seed)?);
    }
    if name == "compat" {
        return Ok(checks::compatibility()?);
    }
    if !TRAJECTORY_CHECKS.contains(&name) {
        return Err(CliError::Config(format!(
            "unknown check {name:?}; expected one of {:?} or {:?}",
            BUILTIN_CHECKS, TRAJECTORY_CHECKS
        )));
    }
    if traj.is_none() {
        *traj = Some(run(&cfg.solver_config()?)?);
    }
    let traj = traj.as_ref().expect("trajectory computed above");
    let obs = cfg.obstacle()?;
    Ok(match name {
        "energy-conservation" => checks::energy_conservation(traj, v.conservation_until),
        "energy-inequality" => {
            let forcing = cfg.forcing();
            let source = forcing.map(|f| move |t: f64, r: f64| f.eval(t, r));
            let src: Option<&dyn Fn(f64, f64) -> f64> = source.as_ref().map(|s| s as &dyn Fn(f64, f64) -> f64);
            let rep = energy_inequality_check(traj, &obs, src, &slice_options(cfg))?;
            let rows = rep.rows.iter().map(|r| [r.time, r.lhs, r.rhs, r.source]);
            od.write_csv("energy-inequality.csv", &["T", "lhs", "rhs", "source"], rows)?;
            checks::energy_inequality_verdict(&rep, forcing.is_none())
        }
        "morawetz" => checks::morawetz(traj, pair(v.morawetz_window)),
        "decay" => {
            let cert = decay_certificate_window(traj, v.sigma, pair(v.plateau_window))?;
            od.write_csv("certificate.csv", &["t", "c"], cert.frame_t.iter().zip(&cert.frame_c).map(|(t, c)| [*t, *c]))?;
            od.write_csv("sup.csv", &["t", "sup_u"], sup_series(traj).into_iter().map(|(t, s)| [t, s]))?;
            checks::decay(traj, v.sigma, pair(v.power_window), pair(v.plateau_window))?
        }
        "weighted-norm" => {
            let rep = weighted_norm_report(traj, &obs, v.weighted_order, v.sigma, (0.1, v.weighted_t_end), &slice_options(cfg))?;
            let rows = rep.rows.iter().map(|r| [r.time, r.energy_part, r.sup_part, r.m]);
            od.write_csv("weighted-norm.csv", &["T", "energy_part", "sup_part", "m"], rows)?;
            checks::weighted_norm_verdict_report(&rep, v.weighted_t_end)
        }
        _ => unreachable!("filtered above"),
    })
}

pub fn verify(cfg: &Config, check: Option<&str>, dir: &Path) -> Result<()> {
    let names: Vec<&str> = match check {
        Some(n) => vec![n],
        None => BUILTIN_CHECKS.to_vec(),
    };
    let mut od = OutputDir::create(dir)?;
    let cfg_toml = cfg.resolved()?.to_toml();
    let mut traj = None;
    let mut failed = Vec::new();
    for name in names {
        let rep = run_check(cfg, name, &mut od, &mut traj)?;
        let dig = digest(&[name.as_bytes(), cfg_toml.as_bytes(), &cfg.verify.seed.to_le_bytes()]);
        od.write_json(&format!("{name}.json"), &ReportDoc::from_check(&rep, &dig))?;
        println!("{}", checks::summary(&rep));
        od.record(name, rep.pass);
        if !rep.pass {
            failed.push(name.to_string());
        }
    }
    od.finish("verify", Some(config_json(cfg)?), cfg.verify.seed)?;
    if !failed.is_empty() {
        return Err(CliError::Verdict(format!("failed: {}", failed.join(", "))));
    }
    Ok(())
}

/// Each configuration runs on its own thread into `out/<file stem>`; the exit
/// code is that of the first failing configuration in argument order.
pub fn sweep(configs: &[PathBuf], out: &Path, seed: Option<u64>) -> Result<()> {
    let mut dirs = Vec::with_capacity(configs.len());
    for (k, p) in configs.iter().enumerate() {
        let stem = p.file_stem().map_or_else(|| format!("run{k}"), |s| s.to_string_lossy().into_owned());
        let dir = out.join(&stem);
        if dirs.contains(&dir) {
            return Err(CliError::Config(format!("two sweep configurations share the name {stem:?}")));
        }
        dirs.push(dir);
    }
    let results: Vec<Result<()>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .zip(&dirs)
            .map(|(p, d)| s.spawn(move || Config::load(p).and_then(|cfg| simulate(&cfg, d, seed))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut od = OutputDir::create(out)?;
    let summary: Vec<serde_json::Value> = configs
        .iter()
        .zip(&dirs)
        .zip(&results)
        .map(|((p, d), r)| {
            serde_json::json!({
                "config": p,
                "dir": d,
                "exit_code": r.as_ref().map_or_else(CliError::exit_code, |_| exit::OK),
                "error": r.as_ref().err().map(ToString::to_string),
            })
        })
        .collect();
    od.write_json("sweep.json", &summary)?;
    for ((p, r), d) in configs.iter().zip(&results).zip(&dirs) {
        od.record(&d.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned()), r.is_ok());
        if let Err(e) = r {
            eprintln!("{}: {e}", p.display());
        }
    }
    od.finish("sweep", None, seed.unwrap_or(crate::config::DEFAULT_SEED))?;
    results.into_iter().find(Result::is_err).unwrap_or(Ok(()))
}
