use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::json;
use wavetrain_core::fitter::{fit_closed_form, fit_least_squares, LeastSquaresOptions};
use wavetrain_core::stepper::{closed_form_on_grid, propagate};
use wavetrain_core::StepperConfig;
use wavetrain_shell::config::load_settings;
use wavetrain_shell::scenario::{fit_constraints, reports, run_scenario, Scenario};
use wavetrain_shell::units::LITHIUM_7_AMU;
use wavetrain_shell::{convert_units, Settings};

#[derive(Parser)]
#[command(
    name = "wavetrain",
    version,
    about = "Exact wave-packet trains in a harmonic trap"
)]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample density and wavefunction grids for arbitrary parameters.
    Eval {
        #[command(flatten)]
        keys: KeyArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Render a figure preset (fig1..fig5).
    Scenario {
        name: String,
        #[command(flatten)]
        keys: KeyArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the consistency checks and print the report.
    Verify {
        #[command(flatten)]
        keys: KeyArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate closed-form initial data numerically and track the deviation.
    Propagate {
        #[command(flatten)]
        keys: KeyArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Infer oscillator constants from measured amplitude and widths.
    Fit {
        #[command(flatten)]
        keys: KeyArgs,
        /// Use the iterative fit instead of the closed-form inversion.
        #[arg(long)]
        least_squares: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Oscillator length and period for a trap frequency and atomic mass.
    Units {
        #[command(flatten)]
        keys: KeyArgs,
    },
}

/// One flag per configuration key; values accept the same syntax as the
/// config file (`-pi/2`, comma lists).
#[derive(Args, Default)]
struct KeyArgs {
    /// Config or metadata file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "A", allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long = "B", allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b0: Option<String>,
    #[arg(long = "omega_r", allow_hyphen_values = true)]
    omega_r: Option<String>,
    #[arg(long = "omega_x_si", allow_hyphen_values = true)]
    omega_x_si: Option<String>,
    #[arg(long = "mass_amu", allow_hyphen_values = true)]
    mass_amu: Option<String>,
    #[arg(long = "grid.x_min", allow_hyphen_values = true)]
    x_min: Option<String>,
    #[arg(long = "grid.x_max", allow_hyphen_values = true)]
    x_max: Option<String>,
    #[arg(long = "grid.points")]
    points: Option<String>,
    #[arg(long = "grid.y_max", allow_hyphen_values = true)]
    y_max: Option<String>,
    #[arg(long = "grid.y_points")]
    y_points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    times: Option<String>,
    #[arg(long)]
    outputs: Option<String>,
    #[arg(long = "transition.t", allow_hyphen_values = true)]
    transition_t: Option<String>,
    #[arg(long = "transition.n")]
    transition_n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g1d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long = "t_end", allow_hyphen_values = true)]
    t_end: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "fit.amplitude", allow_hyphen_values = true)]
    fit_amplitude: Option<String>,
    #[arg(long = "fit.width_min")]
    fit_width_min: Option<String>,
    #[arg(long = "fit.width_max")]
    fit_width_max: Option<String>,
    #[arg(long = "fit.unit")]
    fit_unit: Option<String>,
}

impl KeyArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 27] {
        [
            ("scenario", &self.scenario),
            ("n", &self.n),
            ("A", &self.a),
            ("B", &self.b),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("b0", &self.b0),
            ("omega_r", &self.omega_r),
            ("omega_x_si", &self.omega_x_si),
            ("mass_amu", &self.mass_amu),
            ("grid.x_min", &self.x_min),
            ("grid.x_max", &self.x_max),
            ("grid.points", &self.points),
            ("grid.y_max", &self.y_max),
            ("grid.y_points", &self.y_points),
            ("times", &self.times),
            ("outputs", &self.outputs),
            ("transition.t", &self.transition_t),
            ("transition.n", &self.transition_n),
            ("g1d", &self.g1d),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("seed", &self.seed),
            ("fit.amplitude", &self.fit_amplitude),
            ("fit.width_min", &self.fit_width_min),
            ("fit.width_max", &self.fit_width_max),
            ("fit.unit", &self.fit_unit),
        ]
    }

    /// Config file first, then flags on top.
    fn settings(&self) -> Result<Settings> {
        let base = match &self.config {
            Some(path) => {
                load_settings(path).with_context(|| format!("reading config {}", path.display()))?
            }
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        for (key, value) in self.flags() {
            if let Some(value) = value {
                flags
                    .set(key, value, 0)
                    .with_context(|| format!("flag --{key}"))?;
            }
        }
        Ok(base.merge(flags))
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Eval { keys, out } => {
            let scenario = Scenario::from_settings(keys.settings()?)?;
            emit(&scenario, &out)
        }
        Command::Scenario { name, keys, out } => {
            let mut settings = keys.settings()?;
            settings.scenario = Some(name);
            let scenario = Scenario::from_settings(settings)?;
            emit(&scenario, &out)
        }
        Command::Verify { keys, out } => {
            let scenario = Scenario::from_settings(keys.settings()?)?;
            let reports = reports(&scenario)?;
            for (label, r) in &reports {
                info!("{label}: worst error {:.3e}", r.worst_error());
            }
            let doc = json!({ "scenario": scenario.name, "reports": reports });
            write_or_print(
                out.as_deref(),
                &(serde_json::to_string_pretty(&doc)? + "\n"),
            )
        }
        Command::Propagate { keys, out } => run_propagation(&keys.settings()?, &out),
        Command::Fit {
            keys,
            least_squares,
            out,
        } => {
            let constraints = fit_constraints(&keys.settings()?)?;
            let result = if least_squares {
                fit_least_squares(&constraints, &[], &LeastSquaresOptions::default())?
            } else {
                fit_closed_form(&constraints)?
            };
            if !result.converged {
                warn!(
                    "fit did not reach tolerance {:e}: max residual {:e}",
                    result.tolerance,
                    result.max_residual()
                );
            }
            for note in &result.notes {
                info!("{note}");
            }
            write_or_print(
                out.as_deref(),
                &(serde_json::to_string_pretty(&result)? + "\n"),
            )
        }
        Command::Units { keys } => {
            let s = keys.settings()?;
            let units = convert_units(
                s.omega_x_si.unwrap_or(20.0),
                s.mass_amu.unwrap_or(LITHIUM_7_AMU),
            )?;
            print_out(&(serde_json::to_string_pretty(&units)? + "\n"))
        }
    }
}

fn emit(scenario: &Scenario, out: &Path) -> Result<()> {
    let manifest = run_scenario(scenario, out)?;
    let listing: String = manifest
        .files
        .iter()
        .map(|f| format!("{}\n", f.display()))
        .collect();
    print_out(&listing)
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn print_out(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => print_out(text),
    }
}

/// Split-step run from the closed form at `t = 0`, written as a deviation
/// curve plus a JSON summary.
fn run_propagation(settings: &Settings, out: &Path) -> Result<()> {
    let scenario = Scenario::from_settings(settings.clone())?;
    if scenario.transition.is_some() {
        bail!("propagate follows a single train; remove transition.* keys");
    }
    let dt = settings.dt.unwrap_or(1e-4);
    let t_end = settings.t_end.unwrap_or(PI);
    if dt.is_nan() || t_end.is_nan() || dt <= 0.0 || t_end <= 0.0 {
        bail!("dt and t_end must be positive");
    }
    // The run ends on the step nearest t_end; the closed form is compared at
    // that exact time.
    let steps = ((t_end / dt).round() as usize).max(1);
    let (x_min, x_max) = scenario.grid.x_range.unwrap_or((-20.0, 20.0));
    let mut cfg = StepperConfig::new(x_min, x_max, settings.points.unwrap_or(4096), dt, steps);
    cfg.g1d = settings.g1d.unwrap_or(0.0);
    cfg.omega_r = scenario.train.omega_r();
    cfg.omega_x = scenario.params.omega_x();
    cfg.record_every = (steps / 100).max(1);
    cfg.check_resolution(&scenario.params)?;

    let (p, ts) = (&scenario.params, &scenario.train);
    let initial = closed_form_on_grid(p, ts, &cfg, cfg.t0)?;
    let run = propagate(&initial, &cfg)?;

    let mut csv = String::from("t,l2_distance\n");
    let mut last = 0.0;
    for (t, state) in &run.snapshots {
        last = state.l2_distance(&closed_form_on_grid(p, ts, &cfg, *t)?)?;
        writeln!(csv, "{t:.16e},{last:.16e}")?;
    }
    if !cfg.steps.is_multiple_of(cfg.record_every) {
        let t = cfg.end_time();
        last = run
            .final_state
            .l2_distance(&closed_form_on_grid(p, ts, &cfg, t)?)?;
        writeln!(csv, "{t:.16e},{last:.16e}")?;
    }
    if cfg.g1d != 0.0 {
        info!(
            "g1d = {}: the closed form is only a reference here",
            cfg.g1d
        );
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let curve_path = out.join(format!("{}_deviation.csv", scenario.name));
    fs::write(&curve_path, csv).with_context(|| format!("writing {}", curve_path.display()))?;
    let summary = json!({
        "scenario": scenario.name,
        "config": cfg,
        "t_end": cfg.end_time(),
        "l2_distance": last,
        "norm_drift": run.norm_drift,
        "warnings": run.warnings,
    });
    let summary_path = out.join(format!("{}_propagation.json", scenario.name));
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )
    .with_context(|| format!("writing {}", summary_path.display()))?;
    print_out(&format!(
        "{}\n{}\n",
        curve_path.display(),
        summary_path.display()
    ))
}
