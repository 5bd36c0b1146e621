//! Command-line front end.
//!
//! Exit codes: 0 for a well-posed certificate or a finished simulation, 2
//! when a certificate could not be issued, 1 for invalid input.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::certificate::{certify, CertifyConfig, Verdict};
use crate::error::{Error, Result};
use crate::heat::reconstruct_temperature;
use crate::laxphillips::{
    load_extended_state, save_extended_state, state_trajectory, step_extended_state, ExtendedState,
};
use crate::signals::{fmt_f64, Signal, GRID_TOLERANCE};
use crate::spectral::SpectralVector;
use crate::system::{build_system, SystemSpec};

#[derive(Debug, Parser)]
#[command(name = "wellposed", version, about = "Well-posedness certificates and simulations for spectral boundary control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every check and write a certificate.
    Certify(CertifyArgs),
    /// Evolve an extended state and write trajectories as CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// JSON system description.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub system: Option<PathBuf>,
    /// Built-in system; only `heat` is available.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Number of modes for a built-in system.
    #[arg(long, default_value_t = 64)]
    pub modes: usize,
    /// Overrides the shift of the description.
    #[arg(long)]
    pub shift: Option<f64>,
}

impl SystemArgs {
    pub fn spec(&self) -> Result<SystemSpec> {
        let mut spec = match (&self.system, &self.builtin) {
            (Some(path), _) => SystemSpec::from_json_str(&std::fs::read_to_string(path)?)?,
            (None, Some(name)) => SystemSpec { builtin: Some(name.clone()), modes: Some(self.modes), shift: Some(1.0), ..SystemSpec::default() },
            (None, None) => return Err(Error::Schema("pass --system or --builtin".into())),
        };
        if let Some(shift) = self.shift {
            spec.shift = Some(shift);
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Allows p != 2; the run reports numbers without a verdict.
    #[arg(long)]
    pub exploratory: bool,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 100.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 4001)]
    pub gamma_steps: usize,
    /// Comma-separated complex numbers such as `1,2,1+1i`.
    #[arg(long, default_value = "1,2,1+1i")]
    pub lambda_probes: String,
    /// Step of the resolvent checks.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Horizon of the resolvent checks.
    #[arg(long, default_value_t = 40.0)]
    pub t: f64,
    /// Directory for `certificate.json`; the certificate goes to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Length of the simulation.
    #[arg(long)]
    pub t: f64,
    /// Length of the past-output window; defaults to `--t`.
    #[arg(long)]
    pub window: Option<f64>,
    /// Input CSV starting at time 0.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Initial extended state as a JSON envelope.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Parses `a`, `a+bi`, `a-bi` or `bi`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Schema(format!("cannot parse complex number '{text}'"));
    let num = |t: &str| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(num(&s)?, 0.0));
    };
    // Split at the last sign that is not part of an exponent.
    let split = body
        .char_indices()
        .filter(|&(i, c)| (c == '+' || c == '-') && i > 0 && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i)
        .last();
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(t),
    };
    match split {
        Some(i) => Ok(Complex64::new(num(&body[..i])?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("WELLPOSED_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("WELLPOSED_THREADS must be a non-negative integer, got '{value}'")))?;
    if n > 0 {
        // A pool may already exist when the library is embedded; keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Certify(args) => run_certify(&args),
        Command::Simulate(args) => run_simulate(&args),
    }
}

pub fn run_certify(args: &CertifyArgs) -> Result<i32> {
    let spec = args.system.spec()?;
    let probes = args.lambda_probes.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
    let cfg = CertifyConfig {
        p: args.p,
        exploratory: args.exploratory,
        t0: args.t0,
        gamma_max: args.gamma_max,
        steps: args.gamma_steps,
        probes,
        dt: args.dt,
        horizon: args.t,
        ..CertifyConfig::default()
    };
    let cert = certify(&spec, &cfg)?;
    let json = cert.to_json();
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("certificate.json");
            std::fs::write(&path, json + "\n")?;
            println!("{:?} {}", cert.verdict, path.display());
        }
        None => println!("{json}"),
    }
    for reason in &cert.failing {
        eprintln!("not certified: {reason}");
    }
    Ok(match cert.verdict {
        Verdict::WellPosed => 0,
        Verdict::NotCertified => 2,
    })
}

fn write_temperature(x: &SpectralVector, path: &Path) -> Result<()> {
    let grid: Vec<f64> = (0..=100).map(|i| std::f64::consts::PI * i as f64 / 100.0).collect();
    let mut out = String::from("s,temperature\n");
    for (s, v) in grid.iter().zip(reconstruct_temperature(x, &grid)) {
        out.push_str(&format!("{},{}\n", fmt_f64(*s), fmt_f64(v)));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn run_simulate(args: &SimulateArgs) -> Result<i32> {
    let spec = args.system.spec()?;
    let sys = build_system(&spec)?;
    let input = args.input.as_deref().map(Signal::read_csv).transpose()?;
    let initial = args.initial.as_deref().map(load_extended_state).transpose()?;

    let dt = match (&initial, &input) {
        (Some(xs), _) => xs.dt(),
        (None, Some(u)) => u.dt(),
        (None, None) => args.dt.unwrap_or(1e-3),
    };
    if let Some(given) = args.dt {
        if (given - dt).abs() > GRID_TOLERANCE * dt {
            return Err(Error::Grid(format!("--dt {given} disagrees with the step {dt} of the supplied data")));
        }
    }
    let mut xs = match initial {
        Some(xs) => xs,
        None => ExtendedState::zero(&sys, args.window.unwrap_or(args.t), args.t, dt)?,
    };
    if let Some(window) = args.window {
        if (window - xs.window()).abs() > 1e-6 * dt {
            return Err(Error::Grid(format!(
                "--window {window} disagrees with the initial past-output window {}",
                xs.window()
            )));
        }
    }
    if let Some(u) = input {
        xs = ExtendedState::new(xs.past_output().clone(), xs.state().clone(), u)?;
    }

    let trajectory = state_trajectory(&sys, args.t, &xs)?;
    let last = step_extended_state(&sys, args.t, &xs)?;
    std::fs::create_dir_all(&args.out)?;
    trajectory.write_csv(&args.out.join("state.csv"))?;
    save_extended_state(&last, &args.out, "final")?;
    if spec.builtin.as_deref() == Some("heat") {
        write_temperature(last.state(), &args.out.join("temperature.csv"))?;
    }
    Ok(0)
}
