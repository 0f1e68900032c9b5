#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use spectral_shape::cheeger::{cheeger_extended, DEFAULT_TOL};
use spectral_shape::eigensolver::{eigen, SolverConfig};
use spectral_shape::experiments::{
    ball_dimension_sweep, cylinder_sweep, perforation_sweep, sweep_svg, write_sweep_csv, SweepRecord,
};
use spectral_shape::functional::{format_number, inequality_suite_pairs, ratio, write_reports_csv};
use spectral_shape::geometry::{format_polygon, parse_domain_spec, Domain};
use spectral_shape::plot::polygon_svg;
use spectral_shape::shapeopt::{diameter_escape_monitor, optimize, write_history_csv, Direction, OptimizeConfig};
use spectral_shape::spectral_exact::{BoundStatus, Exponent};
use spectral_shape::{Error, Result};

#[derive(Parser)]
#[command(
    name = "spectral-shape",
    version,
    about = "p-Laplacian eigenvalues, Cheeger constants and F_{p,q} ratios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print the result envelope as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Directory for config.json, result.json and any CSV or SVG output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Clone, Debug, Default)]
struct SolverArgs {
    /// JSON file with a full solver configuration; the flags below override it.
    #[arg(long)]
    solver_config: Option<PathBuf>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    coarse_cells: Option<usize>,
    #[arg(long)]
    radial_points: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn resolve(&self, base: SolverConfig) -> Result<SolverConfig> {
        let mut cfg = match &self.solver_config {
            Some(path) => read_json(path)?,
            None => base,
        };
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.coarse_cells {
            cfg.coarse_cells = v;
        }
        if let Some(v) = self.radial_points {
            cfg.radial_points = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    /// r = eps^3
    Super,
    /// r = eps^5
    Sub,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenvalue lambda_p.
    Eigen {
        /// Inline spec (square, disc, regular:N, rectangle:W:H, ball:D[:R],
        /// annulus:D:r:R, perforated:EPS:R) or a polygon/JSON file.
        #[arg(long)]
        domain: String,
        #[arg(long, value_parser = exponent)]
        p: Exponent,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Cheeger constant.
    Cheeger {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// The ratio F_{p,q} = Lambda_p / Lambda_q.
    Ratio {
        #[arg(long)]
        domain: String,
        #[arg(long, value_parser = exponent)]
        p: Exponent,
        #[arg(long, value_parser = exponent)]
        q: Exponent,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Inequality reports; exits 1 when any report fails.
    Check {
        #[arg(long)]
        domain: String,
        /// Comma-separated p:q pairs.
        #[arg(long, value_parser = pair, value_delimiter = ',', default_value = "2:1,3:1.5,inf:2")]
        pairs: Vec<(Exponent, Exponent)>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Local search for extremal F_{p,q} over convex polygons.
    Optimize {
        /// JSON run configuration; the flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = exponent)]
        p: Option<Exponent>,
        #[arg(long, value_parser = exponent)]
        q: Option<Exponent>,
        #[arg(long)]
        n_vertices: Option<usize>,
        #[arg(long, value_enum)]
        direction: Option<DirectionArg>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        aspect_cap: Option<f64>,
        #[arg(long)]
        random_restarts: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// F_{p,q} of unit balls across dimensions.
    SweepBalls {
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = exponent, default_value = "1")]
        q: Exponent,
        #[arg(long, value_delimiter = ',', default_value = "2,8,32,128,1024")]
        dims: Vec<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Perforated unit squares.
    SweepPerforation {
        #[arg(long, default_value_t = 1.5)]
        p: f64,
        /// Comma-separated eps:r pairs.
        #[arg(long, value_parser = scaling, value_delimiter = ',', conflicts_with = "family")]
        scalings: Vec<(f64, f64)>,
        /// Hole radius as a power of eps, used with --eps.
        #[arg(long, value_enum)]
        family: Option<Family>,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        eps: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Rectangles (0,1) x (0,L).
    SweepCylinder {
        #[arg(long)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        lengths: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    Min,
    Max,
}

fn exponent(s: &str) -> std::result::Result<Exponent, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn pair(s: &str) -> std::result::Result<(Exponent, Exponent), String> {
    let (p, q) = s.split_once(':').ok_or_else(|| format!("expected p:q, got {s:?}"))?;
    let (p, q) = (exponent(p)?, exponent(q)?);
    if !(q < p) {
        return Err(format!("pair {s:?} needs q < p"));
    }
    Ok((p, q))
}

fn scaling(s: &str) -> std::result::Result<(f64, f64), String> {
    let (e, r) = s.split_once(':').ok_or_else(|| format!("expected eps:r, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    Ok((num(e)?, num(r)?))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

/// Effective configuration of a run, echoed into the output directory.
#[derive(Serialize, Default)]
struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<Exponent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<Exponent>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pairs: Vec<(Exponent, Exponent)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<SolverConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimize: Option<OptimizeConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    dims: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    scalings: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    lengths: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

/// What a command produced.
struct Outcome {
    result: Value,
    text: String,
    files: Vec<(&'static str, String)>,
    failed_checks: bool,
}

impl Outcome {
    fn new(result: Value, text: String) -> Self {
        Self {
            result,
            text,
            files: Vec::new(),
            failed_checks: false,
        }
    }
}

fn domain(spec: &str) -> Result<Domain> {
    parse_domain_spec(spec).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{spec}: {message}"),
        },
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{spec}: {io}"))),
        other => other,
    })
}

fn run(command: Command, config: &mut RunConfig) -> Result<Outcome> {
    match command {
        Command::Eigen {
            domain: spec,
            p,
            solver,
        } => {
            config.command = "eigen";
            let d = domain(&spec)?;
            let cfg = solver.resolve(SolverConfig::default())?;
            (config.domain, config.p, config.solver) = (Some(spec), Some(p), Some(cfg.clone()));
            let pv = p
                .as_finite()
                .ok_or_else(|| Error::InvalidParameter(format!("eigen needs 1 < p < inf, got {p}")))?;
            let e = eigen(&d, pv, &cfg)?;
            let mut text = format!(
                "lambda_{p} = {} +- {}\n",
                format_number(e.extrapolated),
                format_number(e.error_indicator)
            );
            for l in &e.level_values {
                let _ = writeln!(
                    text,
                    "  h = {}  dofs = {}  value = {}",
                    format_number(l.h),
                    l.dofs,
                    format_number(l.value)
                );
            }
            Ok(Outcome::new(serde_json::to_value(&e)?, text))
        }
        Command::Cheeger {
            domain: spec,
            tol,
            solver,
        } => {
            config.command = "cheeger";
            let d = domain(&spec)?;
            let cfg = solver.resolve(SolverConfig::default())?;
            (config.domain, config.tol, config.solver) = (Some(spec), Some(tol), Some(cfg.clone()));
            let c = cheeger_extended(&d, tol, &cfg)?;
            let text = format!(
                "h = {} +- {}\ncheeger radius = {}\n",
                format_number(c.h),
                format_number(c.h_error),
                format_number(c.cheeger_radius)
            );
            Ok(Outcome::new(serde_json::to_value(c)?, text))
        }
        Command::Ratio {
            domain: spec,
            p,
            q,
            solver,
        } => {
            config.command = "ratio";
            let d = domain(&spec)?;
            let cfg = solver.resolve(SolverConfig::default())?;
            (config.domain, config.p, config.q, config.solver) = (Some(spec), Some(p), Some(q), Some(cfg.clone()));
            let r = ratio(&d, p, q, &cfg)?;
            let text = format!(
                "F_{{{p},{q}}} = {} +- {}\nLambda_{p} = {}\nLambda_{q} = {}\n",
                format_number(r.ratio),
                format_number(r.error_indicator),
                format_number(r.lambda_p_scale),
                format_number(r.lambda_q_scale)
            );
            Ok(Outcome::new(serde_json::to_value(r)?, text))
        }
        Command::Check {
            domain: spec,
            pairs,
            solver,
        } => {
            config.command = "check";
            let d = domain(&spec)?;
            let cfg = solver.resolve(SolverConfig::default())?;
            (config.domain, config.pairs, config.solver) = (Some(spec), pairs.clone(), Some(cfg.clone()));
            let reports = inequality_suite_pairs(&d, &pairs, &cfg);
            let mut text = String::new();
            for r in &reports {
                let _ = write!(
                    text,
                    "{:<13} {} = {}",
                    format!("{:?}", r.status).to_lowercase(),
                    r.name,
                    format_number(r.value)
                );
                if let Some(n) = &r.note {
                    let _ = write!(text, "  ({n})");
                }
                text.push('\n');
            }
            let mut csv = Vec::new();
            write_reports_csv(&reports, &mut csv)?;
            let mut out = Outcome::new(serde_json::to_value(&reports)?, text);
            out.failed_checks = reports.iter().any(|r| r.status == BoundStatus::Failed);
            out.files
                .push(("reports.csv", String::from_utf8(csv).expect("utf-8 csv")));
            Ok(out)
        }
        Command::Optimize {
            config: path,
            p,
            q,
            n_vertices,
            direction,
            budget,
            seed,
            aspect_cap,
            random_restarts,
            solver,
        } => {
            config.command = "optimize";
            let mut cfg: OptimizeConfig = match &path {
                Some(path) => read_json(path)?,
                None => OptimizeConfig::default(),
            };
            cfg.p = p.unwrap_or(cfg.p);
            cfg.q = q.unwrap_or(cfg.q);
            cfg.n_vertices = n_vertices.unwrap_or(cfg.n_vertices);
            cfg.budget = budget.unwrap_or(cfg.budget);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.aspect_cap = aspect_cap.unwrap_or(cfg.aspect_cap);
            cfg.random_restarts = random_restarts.unwrap_or(cfg.random_restarts);
            if let Some(d) = direction {
                cfg.direction = match d {
                    DirectionArg::Min => Direction::Min,
                    DirectionArg::Max => Direction::Max,
                };
            }
            cfg.solver = solver.resolve(cfg.solver.clone())?;
            cfg.validate()?;
            config.optimize = Some(cfg.clone());
            let state = optimize(&cfg)?;
            let escape = diameter_escape_monitor(&state.history);
            let poly = format_polygon(&state.polygon);
            let text = format!(
                "F_{{{},{}}} = {} +- {}{}\nsquare local minimum: {}\n{poly}",
                cfg.p,
                cfg.q,
                format_number(state.value.ratio),
                format_number(state.value.error_indicator),
                if state.exploratory { " (exploratory)" } else { "" },
                state.square_local_minimum.map_or("n/a".into(), |b| b.to_string()),
            );
            let result = json!({
                "value": state.value,
                "polygon": poly,
                "step_scale": state.step_scale,
                "restarts": state.restarts,
                "best_restart": state.best_restart,
                "square_local_minimum": state.square_local_minimum,
                "exploratory": state.exploratory,
                "escape": escape,
            });
            let mut history = Vec::new();
            write_history_csv(&state.history, &mut history)?;
            let mut out = Outcome::new(result, text);
            let caption = format!("F = {}", format_number(state.value.ratio));
            out.files.push(("best.poly", poly));
            out.files
                .push(("history.csv", String::from_utf8(history).expect("utf-8 csv")));
            out.files.push(("best.svg", polygon_svg(&state.polygon, &caption)));
            Ok(out)
        }
        Command::SweepBalls { p, q, dims, solver } => {
            config.command = "sweep-balls";
            let cfg = solver.resolve(SolverConfig::default())?;
            config.p = Some(Exponent::from_value(p)?);
            (config.q, config.dims, config.solver) = (Some(q), dims.clone(), Some(cfg.clone()));
            sweep_outcome(ball_dimension_sweep(p, q, &dims, &cfg)?)
        }
        Command::SweepPerforation {
            p,
            scalings,
            family,
            eps,
            solver,
        } => {
            config.command = "sweep-perforation";
            let cfg = solver.resolve(SolverConfig::default())?;
            let scalings = match family {
                Some(f) => {
                    let k = match f {
                        Family::Super => 3,
                        Family::Sub => 5,
                    };
                    eps.iter().map(|&e| (e, e.powi(k))).collect()
                }
                None if scalings.is_empty() => {
                    return Err(Error::InvalidParameter("give --scalings or --family".into()));
                }
                None => scalings,
            };
            config.p = Some(Exponent::from_value(p)?);
            (config.scalings, config.solver) = (scalings.clone(), Some(cfg.clone()));
            sweep_outcome(perforation_sweep(p, &scalings, &cfg)?)
        }
        Command::SweepCylinder { p, lengths, solver } => {
            config.command = "sweep-cylinder";
            let cfg = solver.resolve(SolverConfig::default())?;
            config.p = Some(Exponent::from_value(p)?);
            (config.lengths, config.solver) = (lengths.clone(), Some(cfg.clone()));
            sweep_outcome(cylinder_sweep(p, &lengths, &cfg)?)
        }
    }
}

fn sweep_outcome(records: Vec<SweepRecord>) -> Result<Outcome> {
    let mut csv = Vec::new();
    write_sweep_csv(&records, &mut csv)?;
    let csv = String::from_utf8(csv).expect("utf-8 csv");
    let mut out = Outcome::new(serde_json::to_value(&records)?, csv.clone());
    out.failed_checks = records.iter().any(|r| r.flag == BoundStatus::Failed);
    out.files.push(("sweep.csv", csv));
    out.files.push(("sweep.svg", sweep_svg(&records)));
    Ok(out)
}

/// Rounds every float to 12 significant digits.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                let r: f64 = format_number(x).parse().expect("formatted float");
                if let Some(m) = serde_json::Number::from_f64(r) {
                    *n = m;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn write_outputs(dir: &Path, config: &Value, envelope: &Value, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(config)? + "\n")?;
    std::fs::write(dir.join("result.json"), serde_json::to_string_pretty(envelope)? + "\n")?;
    for (name, contents) in files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_failure() || matches!(e, Error::Overflow(_)) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut config = RunConfig {
        threads: cli.threads,
        ..Default::default()
    };
    let outcome = match run(cli.command, &mut config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let config = serde_json::to_value(&config).expect("config serializes");
    let mut envelope = json!({
        "command": config["command"],
        "config": config,
        "result": outcome.result,
    });
    round_numbers(&mut envelope);
    if let Some(dir) = &cli.out {
        if let Err(e) = write_outputs(dir, &envelope["config"], &envelope, &outcome.files) {
            eprintln!("error: writing {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    let shown = if cli.json {
        serde_json::to_string_pretty(&envelope).expect("json") + "\n"
    } else {
        outcome.text
    };
    // a closed pipe (`| head`) is not an error worth a panic
    let _ = std::io::stdout().lock().write_all(shown.as_bytes());
    if outcome.failed_checks {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
