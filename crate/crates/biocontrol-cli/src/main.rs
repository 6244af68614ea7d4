//! Command-line frontend for the host-parasitoid bifurcation toolkit.
//!
//! Every subcommand emits deterministic CSV (ten-significant-digit
//! scientific notation) with `#`-prefixed context lines; `sigma` can also
//! write an SVG of the admissible wedge and the traced variety.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure.

mod config;
mod output;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use config::RunConfig;
use output::{g10, g10c, sigma_svg};
use std::path::PathBuf;
use std::process::ExitCode;

use biocontrol::continuation::{find_tangency, trace_sigma};
use biocontrol::dynamics::{find_periodic_orbit, integrate, OrbitVerdict};
use biocontrol::hopf::lyapunov_l1;
use biocontrol::linalg::CVec4;
use biocontrol::model::EquilibriumId;
use biocontrol::stability::classify;
use biocontrol::{Error, ModelParams, State, ToleranceSettings};
use biocontrol::linalg::Complex64;

#[derive(Parser)]
#[command(
    name = "biocontrol",
    about = "Equilibria, stability, Hopf analysis and periodic orbits of a \
             four-compartment host-parasitoid model",
    version
)]
struct Cli {
    /// Parameter file with one `key = value` per line (`#` comments).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one parameter, e.g. --set mu1=0.5 (repeatable; wins over
    /// the file).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Write the CSV to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the four equilibria plus R1, R2 and k1_max.
    Equilibria {
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
    },
    /// Stability classification and eigenvalues of every equilibrium.
    Classify {
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
    },
    /// First Lyapunov coefficient and eigenstructure at a Hopf point.
    Hopf {
        #[arg(long)]
        k1: f64,
        #[arg(long)]
        k2: f64,
        /// File with four `re im` lines overriding the eigenvector scaling.
        #[arg(long, value_name = "FILE")]
        q_from_file: Option<PathBuf>,
        /// Widen the on-variety acceptance band (relative).
        #[arg(long)]
        sigma_tol: Option<f64>,
    },
    /// Trace the Hopf variety in the (k1, k2) plane.
    Sigma {
        /// Number of slices across the carrying interval.
        #[arg(long)]
        n: Option<usize>,
        /// Parasitoid carrying capacity for this trace.
        #[arg(long)]
        c2: Option<f64>,
        /// Also write an SVG plot here.
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
    /// Locate the tangency of the variety family with the diagonal k1 = k2.
    Tangency,
    /// Integrate the model from a given state.
    Simulate {
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        /// Initial state as P,M,L,G.
        #[arg(long, value_name = "P,M,L,G")]
        x0: String,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Locate the periodic orbit near the Hopf variety and report its
    /// Floquet multipliers.
    Orbit {
        #[arg(long)]
        k1: f64,
        #[arg(long)]
        k2: f64,
        #[arg(long)]
        hint_radius: Option<f64>,
    },
}

fn error_category(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid-input",
        Error::Domain(_) => "domain",
        Error::IterationFailure(_) => "iteration",
        Error::Degeneracy(_) => "degeneracy",
        Error::SingularShift { .. } => "singular-shift",
        Error::NotOnSigma { .. } => "not-on-sigma",
        Error::IntegrationFailure { .. } => "integration",
        Error::Bracketing(_) => "bracketing",
        Error::OrbitNotFound { .. } => "orbit-not-found",
        Error::Inconsistency(_) => "inconsistency",
    }
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: usage: {message}");
    ExitCode::from(1)
}

fn numerical_error(e: &Error) -> ExitCode {
    eprintln!("error: {}: {e}", error_category(e));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error: usage: {e}");
            return ExitCode::from(1);
        }
    };

    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage_error(format!("cannot read {}: {e}", path.display())),
        };
        if let Err(e) = cfg.parse(&text) {
            eprintln!("error: config: {e}");
            return ExitCode::from(1);
        }
    }
    for assignment in &cli.set {
        let Some((key, value)) = assignment.split_once('=') else {
            return usage_error(format!("--set expects KEY=VALUE, got `{assignment}`"));
        };
        if let Err(e) = cfg.assign(key.trim(), value.trim(), None) {
            eprintln!("error: config: {e}");
            return ExitCode::from(1);
        }
    }

    let body = match run(&cli.command, &cfg) {
        Ok(body) => body,
        Err(RunError::Usage(msg)) => return usage_error(msg),
        Err(RunError::Numerical(e)) => return numerical_error(&e),
    };

    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                return usage_error(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => print!("{body}"),
    }
    ExitCode::SUCCESS
}

enum RunError {
    Usage(String),
    Numerical(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

fn resolved_pair(
    cfg: &RunConfig,
    k1: Option<f64>,
    k2: Option<f64>,
) -> Result<ModelParams, RunError> {
    let k1 = k1.or(cfg.k1);
    let k2 = k2.or(cfg.k2);
    match (k1, k2) {
        (Some(k1), Some(k2)) => {
            let p = cfg.params_with(k1, k2);
            p.validate().map_err(RunError::Numerical)?;
            Ok(p)
        }
        _ => Err(RunError::Usage(
            "k1 and k2 must be set (flags --k1/--k2, --set, or config file)".into(),
        )),
    }
}

fn warn_nonnegative(label: &str, s: &State) {
    if !s.is_nonnegative() {
        eprintln!(
            "warning: {label} has a negative component ({}, {}, {}, {}); \
             outside the biologically meaningful region",
            s.p, s.m, s.l, s.g
        );
    }
}

fn run(cmd: &Command, cfg: &RunConfig) -> Result<String, RunError> {
    let mut out = String::new();
    match cmd {
        Command::Equilibria { k1, k2 } => {
            let p = resolved_pair(cfg, *k1, *k2)?;
            let r = p.reproduction_numbers();
            let k1_max = p.k1_max()?;
            let set = p.equilibria()?;
            out.push_str(&format!("# R1 = {}\n", g10(r.r1)));
            out.push_str(&format!("# R2 = {}\n", g10(r.r2)));
            out.push_str(&format!("# k1_max = {}\n", g10(k1_max)));
            out.push_str("name,P,M,L,G\n");
            for id in EquilibriumId::ALL {
                let s = set.get(id);
                warn_nonnegative(id.label(), &s);
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    id.label(),
                    g10(s.p),
                    g10(s.m),
                    g10(s.l),
                    g10(s.g)
                ));
            }
        }
        Command::Classify { k1, k2 } => {
            let p = resolved_pair(cfg, *k1, *k2)?;
            let tol = ToleranceSettings::default();
            out.push_str("name,kind,re1,im1,re2,im2,re3,im3,re4,im4\n");
            for id in EquilibriumId::ALL {
                let c = classify(&p, id, &tol)?;
                let mut row = format!("{},{}", id.label(), c.kind.label());
                for z in c.spectrum.eigenvalues {
                    row.push_str(&format!(",{},{}", g10(z.re), g10(z.im)));
                }
                out.push_str(&row);
                out.push('\n');
            }
        }
        Command::Hopf {
            k1,
            k2,
            q_from_file,
            sigma_tol,
        } => {
            let p = resolved_pair(cfg, Some(*k1), Some(*k2))?;
            let mut tol = ToleranceSettings::default();
            if let Some(band) = sigma_tol.or(cfg.sigma_tol) {
                tol.on_sigma_rel = band;
            }
            let q_override = match q_from_file {
                Some(path) => Some(read_q_file(path)?),
                None => None,
            };
            let report = lyapunov_l1(&p, q_override.as_ref(), &tol)?;
            out.push_str(&format!("# omega0 = {}\n", g10(report.omega0)));
            for (name, v) in [
                ("q", &report.q),
                ("p", &report.p),
                ("h11", &report.h11),
                ("h20", &report.h20),
            ] {
                let parts: Vec<String> = v.iter().map(|z| g10c(*z)).collect();
                out.push_str(&format!("# {name} = [{}]\n", parts.join(", ")));
            }
            out.push_str(&format!("# G21 = {}\n", g10c(report.g21)));
            out.push_str(&format!("# l1 = {}\n", g10(report.l1)));
            out.push_str(&format!(
                "# normalization = {}\n",
                match report.normalization {
                    biocontrol::hopf::NormalizationTag::DefaultUnit => "default-unit",
                    biocontrol::hopf::NormalizationTag::CallerSupplied => "caller-supplied",
                }
            ));
            out.push_str("k1,k2,omega0,re_g21,im_g21,l1,transversality\n");
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                g10(p.k1),
                g10(p.k2),
                g10(report.omega0),
                g10(report.g21.re),
                g10(report.g21.im),
                g10(report.l1),
                g10(report.transversality)
            ));
        }
        Command::Sigma { n, c2, svg } => {
            let base = cfg.params_any();
            let c2 = c2.unwrap_or(cfg.c2);
            let n = n.unwrap_or(cfg.n);
            let points = trace_sigma(&base, c2, n).map_err(RunError::Numerical)?;
            out.push_str(&format!("# c2 = {}\n", g10(c2)));
            out.push_str(&format!("# points = {}\n", points.len()));
            out.push_str("k1,k2,omega0,l1_sign,delta_residual\n");
            for pt in &points {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    g10(pt.k1),
                    g10(pt.k2),
                    g10(pt.omega0),
                    pt.l1_sign,
                    g10(pt.delta_residual)
                ));
            }
            if let Some(path) = svg {
                let k1_max = base.with_c2(c2).k1_max().map_err(RunError::Numerical)?;
                let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.k1, p.k2)).collect();
                let svg_body = sigma_svg(&xy, k1_max, c2);
                std::fs::write(path, svg_body)
                    .map_err(|e| RunError::Usage(format!("cannot write SVG: {e}")))?;
            }
        }
        Command::Tangency => {
            let base = cfg.params_any();
            let t = find_tangency(&base).map_err(RunError::Numerical)?;
            let k1_max_star = base
                .with_c2(t.c2_star)
                .k1_max()
                .map_err(RunError::Numerical)?;
            out.push_str(&format!(
                "# scanned_k1 = [{}, {}]\n",
                g10(t.scanned_k1.0),
                g10(t.scanned_k1.1)
            ));
            out.push_str(&format!(
                "# diagonal_second_derivative = {}\n",
                g10(t.diagonal_second_derivative)
            ));
            out.push_str(&format!("# k1_max_at_c2_star = {}\n", g10(k1_max_star)));
            out.push_str("c2_star,k1,k2,grad_k1,grad_k2\n");
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                g10(t.c2_star),
                g10(t.k1),
                g10(t.k2),
                g10(t.gradient[0]),
                g10(t.gradient[1])
            ));
        }
        Command::Simulate {
            k1,
            k2,
            x0,
            t_end,
            tol,
        } => {
            let p = resolved_pair(cfg, *k1, *k2)?;
            let parts: Vec<&str> = x0.split(',').collect();
            if parts.len() != 4 {
                return Err(RunError::Usage(format!(
                    "--x0 expects four comma-separated numbers, got `{x0}`"
                )));
            }
            let mut vals = [0.0f64; 4];
            for (slot, raw) in vals.iter_mut().zip(&parts) {
                *slot = raw
                    .trim()
                    .parse()
                    .map_err(|_| RunError::Usage(format!("bad state component `{raw}`")))?;
            }
            let x0 = State::from_array(&vals);
            let traj = integrate(&p, &x0, t_end.unwrap_or(cfg.t_end), tol.unwrap_or(cfg.tol))?;
            if let Some((t, s)) = traj.samples.iter().find(|(_, s)| !s.is_nonnegative()) {
                eprintln!(
                    "warning: trajectory leaves the non-negative region at t = {t} \
                     (state {}, {}, {}, {})",
                    s.p, s.m, s.l, s.g
                );
            }
            out.push_str(&format!("# steps = {}\n", traj.stats.steps));
            out.push_str(&format!("# rejected = {}\n", traj.stats.rejected));
            out.push_str("t,P,M,L,G\n");
            for (t, s) in &traj.samples {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    g10(*t),
                    g10(s.p),
                    g10(s.m),
                    g10(s.l),
                    g10(s.g)
                ));
            }
        }
        Command::Orbit {
            k1,
            k2,
            hint_radius,
        } => {
            let p = resolved_pair(cfg, Some(*k1), Some(*k2))?;
            let tol = ToleranceSettings::default();
            let orbit = find_periodic_orbit(&p, hint_radius.or(cfg.hint_radius), &tol)?;
            out.push_str(&format!("# period = {}\n", g10(orbit.period)));
            out.push_str(&format!(
                "# verdict = {}\n",
                match orbit.verdict {
                    OrbitVerdict::UnstableSaddleCycle => "unstable-saddle-cycle",
                    OrbitVerdict::Stable => "stable",
                    OrbitVerdict::Indeterminate => "indeterminate",
                }
            ));
            for (i, m) in orbit.multipliers.iter().enumerate() {
                out.push_str(&format!("# multiplier_{} = {}\n", i + 1, g10c(*m)));
            }
            out.push_str(&format!(
                "# anchor = {},{},{},{}\n",
                g10(orbit.anchor.p),
                g10(orbit.anchor.m),
                g10(orbit.anchor.l),
                g10(orbit.anchor.g)
            ));
            let traj = integrate(&p, &orbit.anchor, orbit.period, 1e-11)?;
            out.push_str("t,P,M,L,G\n");
            for (t, s) in &traj.samples {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    g10(*t),
                    g10(s.p),
                    g10(s.m),
                    g10(s.l),
                    g10(s.g)
                ));
            }
        }
    }
    Ok(out)
}

/// Four `re im` lines (comments with `#` allowed) defining a complex
/// 4-vector for the eigenvector override.
fn read_q_file(path: &PathBuf) -> Result<CVec4, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                RunError::Usage(format!(
                    "{} line {}: expected `re im`, got `{line}`",
                    path.display(),
                    idx + 1
                ))
            })?;
        if nums.len() != 2 {
            return Err(RunError::Usage(format!(
                "{} line {}: expected exactly two numbers",
                path.display(),
                idx + 1
            )));
        }
        rows.push(Complex64::new(nums[0], nums[1]));
    }
    if rows.len() != 4 {
        return Err(RunError::Usage(format!(
            "{}: expected four component lines, found {}",
            path.display(),
            rows.len()
        )));
    }
    Ok([rows[0], rows[1], rows[2], rows[3]])
}
