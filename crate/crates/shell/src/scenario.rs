//! Figure presets and the CSV/JSON pipeline that renders them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use serde_json::{json, Value};
use wavetrain_core::checker::{full_report, ReportConfig};
use wavetrain_core::field::local_maxima;
use wavetrain_core::packet::{energy_level, transverse_factor, transverse_length};
use wavetrain_core::{
    Axis, ConservedSet, FitConstraints, FitUnit, Frame, OscillatorParams, TrainSpec,
    VerificationReport,
};

use crate::config::{load_settings, parse_config, OutputKind, Settings};
use crate::error::{Result, ShellError};
use crate::units::{convert_units, PhysicalUnits, LITHIUM_7_AMU};

pub const PRESETS: &[&str] = &["fig1", "fig2", "fig3", "fig4", "fig5"];

/// Samples per axis when `grid.points` is not given.
pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_Y_POINTS: usize = 41;
/// Relative density below which a local maximum is not counted as a packet.
pub const PEAK_FLOOR: f64 = 1e-3;
/// Threshold, relative to the peak, defining the total extent of the train.
pub const EXTENT_THRESHOLD: f64 = 1e-4;
const ANALYSIS_POINTS: usize = 16384;

/// Preset definitions in the config format itself, so a preset and a
/// hand-written file go through the same parser.
fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => {
            "n=10\nA=1\nB=1\nalpha=0\nbeta=-pi/2\nb0=-5\nomega_r=40\n\
             times=0,pi/2,pi\noutputs=density_xy,density_profile\n"
        }
        "fig2" => {
            "n=10\nA=0.01\nB=1\nalpha=0\nbeta=-pi/2\nb0=0\nomega_r=40\n\
             times=0,pi/4,pi/2\noutputs=density_profile\n"
        }
        "fig3" => {
            "n=10\nA=0.4624\nB=1\nalpha=0\nbeta=-pi/2\nb0=-17.437\nomega_r=40\n\
             omega_x_si=20\nmass_amu=7.016003437\n\
             times=0,pi/2,pi\noutputs=density_xy,density_profile\n"
        }
        "fig4" => {
            "n=10\nA=0.4624\nB=1\nalpha=0\nbeta=-pi/2\nb0=-17.437\nomega_r=40\n\
             omega_x_si=20\nmass_amu=7.016003437\n\
             times=0,pi/2,pi\noutputs=vertical_view\n"
        }
        "fig5" => {
            "n=10\nA=0.4624\nB=1\nalpha=0\nbeta=-pi/2\nb0=-17.437\nomega_r=40\n\
             omega_x_si=20\nmass_amu=7.016003437\n\
             transition.t=2*pi\ntransition.n=6\n\
             times=2*pi,2.5*pi,3*pi\noutputs=density_xy,density_profile\n"
        }
        _ => return None,
    })
}

/// Settings of a named preset, with `scenario` set.
pub fn preset(name: &str) -> Result<Settings> {
    let text = preset_text(name).ok_or_else(|| ShellError::UnknownScenario(name.to_string()))?;
    let mut s = parse_config(text).expect("preset text is valid");
    s.scenario = Some(name.to_string());
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub t: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Fixed x range; `None` follows the train at each time.
    pub x_range: Option<(f64, f64)>,
    pub points: usize,
    /// Half-extent of the transverse axis; `None` uses four transverse lengths.
    pub y_max: Option<f64>,
    pub y_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Preset name or `custom`.
    pub name: String,
    pub params: OscillatorParams,
    pub train: TrainSpec,
    pub times: Vec<f64>,
    pub grid: GridSpec,
    pub outputs: Vec<OutputKind>,
    pub transition: Option<Transition>,
    pub omega_x_si: Option<f64>,
    pub mass_amu: Option<f64>,
    pub seed: u64,
    /// The merged settings the scenario was built from.
    pub settings: Settings,
}

/// What a config file describes.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Scenario(Box<Scenario>),
    Fit(FitConstraints),
}

/// Reads a config or metadata file. Files with `fit.*` keys describe fit
/// constraints, everything else a scenario.
pub fn load_config(path: &Path) -> Result<Loaded> {
    let settings = load_settings(path)?;
    if settings.has_fit_keys() {
        Ok(Loaded::Fit(fit_constraints(&settings)?))
    } else {
        Ok(Loaded::Scenario(Box::new(Scenario::from_settings(
            settings,
        )?)))
    }
}

pub fn fit_constraints(s: &Settings) -> Result<FitConstraints> {
    let c = FitConstraints {
        amplitude: s
            .fit_amplitude
            .ok_or(ShellError::MissingKey("fit.amplitude"))?,
        width_min: s
            .fit_width_min
            .ok_or(ShellError::MissingKey("fit.width_min"))?,
        width_max: s
            .fit_width_max
            .ok_or(ShellError::MissingKey("fit.width_max"))?,
        omega_x: s.omega_x_si,
        omega_r_ratio: s.omega_r.unwrap_or(40.0),
        unit: s.fit_unit.unwrap_or(FitUnit::Natural),
    };
    c.validate()?;
    Ok(c)
}

fn require<T: Copy>(value: Option<T>, key: &'static str) -> Result<T> {
    value.ok_or(ShellError::MissingKey(key))
}

impl Scenario {
    /// Binds a scenario: a named preset supplies defaults that explicit
    /// settings override.
    pub fn from_settings(settings: Settings) -> Result<Self> {
        let name = settings.scenario.clone().unwrap_or_else(|| "custom".into());
        let settings = if name == "custom" {
            settings
        } else {
            preset(&name)?.merge(settings)
        };
        let s = &settings;
        let params = OscillatorParams::new(
            require(s.a, "A")?,
            require(s.b, "B")?,
            require(s.alpha, "alpha")?,
            require(s.beta, "beta")?,
        )?;
        let train = TrainSpec::new(
            require(s.n, "n")?,
            require(s.b0, "b0")?,
            require(s.omega_r, "omega_r")?,
        )?;
        let transition = match (s.transition_t, s.transition_n) {
            (Some(t), Some(n)) => {
                train.with_n(n)?;
                Some(Transition { t, n })
            }
            (None, None) => None,
            (Some(_), None) => return Err(ShellError::MissingKey("transition.n")),
            (None, Some(_)) => return Err(ShellError::MissingKey("transition.t")),
        };
        let times = s.times.clone().unwrap_or_else(|| vec![0.0]);
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("times", "need at least one finite time"));
        }
        let x_range = match (s.x_min, s.x_max) {
            (Some(lo), Some(hi)) if lo < hi => Some((lo, hi)),
            (Some(_), Some(_)) => return Err(invalid("grid.x_max", "must exceed grid.x_min")),
            (None, None) => None,
            (Some(_), None) => return Err(ShellError::MissingKey("grid.x_max")),
            (None, Some(_)) => return Err(ShellError::MissingKey("grid.x_min")),
        };
        let grid = GridSpec {
            x_range,
            points: s.points.unwrap_or(DEFAULT_POINTS),
            y_max: s.y_max,
            y_points: s.y_points.unwrap_or(DEFAULT_Y_POINTS),
        };
        if grid.points < 2 || grid.y_points < 2 {
            return Err(invalid("grid.points", "need at least two points per axis"));
        }
        if let Some(y) = grid.y_max {
            if !(y > 0.0) {
                return Err(invalid("grid.y_max", "must be positive"));
            }
        }
        Ok(Self {
            name,
            params,
            train,
            times,
            grid,
            outputs: s
                .outputs
                .clone()
                .unwrap_or_else(|| vec![OutputKind::DensityProfile]),
            transition,
            omega_x_si: s.omega_x_si,
            mass_amu: s.mass_amu,
            seed: s.seed.unwrap_or(0),
            settings,
        })
    }

    /// Train in effect at `t`.
    pub fn train_at(&self, t: f64) -> TrainSpec {
        match self.transition {
            Some(tr) if t >= tr.t => self.train.with_n(tr.n).expect("validated on construction"),
            _ => self.train,
        }
    }

    pub fn frame(&self, t: f64) -> Frame {
        Frame::new(&self.params, &self.train_at(t), t)
    }

    /// Axial sampling axis at `t`.
    pub fn x_axis(&self, t: f64) -> Result<Axis> {
        let (lo, hi) = match self.grid.x_range {
            Some(range) => range,
            None => auto_window(&self.frame(t), 4.0),
        };
        Ok(Axis::linspace("x", lo, hi, self.grid.points)?)
    }

    /// Transverse length in units of `l_x`.
    pub fn transverse_length(&self) -> Result<f64> {
        let ratio = (self.train.omega_r() / self.params.omega_x()).sqrt();
        Ok(transverse_length(&self.params, &self.train, ratio)?)
    }

    pub fn y_axis(&self) -> Result<Axis> {
        let y_max = match self.grid.y_max {
            Some(y) => y,
            None => 4.0 * self.transverse_length()?,
        };
        Ok(Axis::linspace("y", -y_max, y_max, self.grid.y_points)?)
    }

    pub fn units(&self) -> Result<PhysicalUnits> {
        convert_units(
            self.omega_x_si.unwrap_or(20.0),
            self.mass_amu.unwrap_or(LITHIUM_7_AMU),
        )
    }
}

fn invalid(key: &str, reason: &str) -> ShellError {
    ShellError::InvalidValue {
        key: key.into(),
        value: String::new(),
        reason: reason.into(),
    }
}

/// `center +- (sqrt(2n + 1) + margin) * width`: the classical extent of the
/// train plus `margin` Gaussian tails.
fn auto_window(frame: &Frame, margin: f64) -> (f64, f64) {
    let half = (((2 * frame.n() + 1) as f64).sqrt() + margin) * frame.width();
    (frame.center() - half, frame.center() + half)
}

/// Shape measurements of the axial density at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeAnalysis {
    pub t: f64,
    pub n: usize,
    pub peak_count: usize,
    pub peak_positions: Vec<f64>,
    pub peak_density: f64,
    /// `<x>` from the sampled density.
    pub mean_position: f64,
    /// Closed-form center.
    pub center: f64,
    /// `rho / sqrt(c0)`.
    pub width: f64,
    /// Extent of the region above `EXTENT_THRESHOLD` of the peak.
    pub total_width: f64,
}

pub fn analyze(frame: &Frame) -> Result<TimeAnalysis> {
    let (lo, hi) = auto_window(frame, 6.0);
    let axis = Axis::linspace("x", lo, hi, ANALYSIS_POINTS)?;
    let xs: Vec<f64> = axis.coords().collect();
    let density: Vec<f64> = xs.iter().map(|&x| frame.density(x)).collect();

    let peaks: Vec<f64> = local_maxima(&density, PEAK_FLOOR)
        .into_iter()
        .map(|i| golden_max(|x| frame.density(x), xs[i - 1], xs[i + 1]))
        .collect();
    let peak_density = peaks.iter().map(|&x| frame.density(x)).fold(0.0, f64::max);

    let mass: f64 = density.iter().sum();
    let mean_position = xs.iter().zip(&density).map(|(x, d)| x * d).sum::<f64>() / mass;

    let threshold = EXTENT_THRESHOLD * peak_density;
    let first = density.iter().position(|&d| d > threshold);
    let last = density.iter().rposition(|&d| d > threshold);
    let total_width = match (first, last) {
        (Some(i), Some(j)) if i > 0 && j + 1 < xs.len() => {
            let left = crossing(xs[i - 1], density[i - 1], xs[i], density[i], threshold);
            let right = crossing(xs[j], density[j], xs[j + 1], density[j + 1], threshold);
            right - left
        }
        _ => hi - lo,
    };

    Ok(TimeAnalysis {
        t: frame.t(),
        n: frame.n(),
        peak_count: peaks.len(),
        peak_positions: peaks,
        peak_density,
        mean_position,
        center: frame.center(),
        width: frame.width(),
        total_width,
    })
}

fn crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Files produced by one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub files: Vec<PathBuf>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(ShellError::io(path))
}

fn csv_density_xy(s: &Scenario) -> Result<String> {
    let y_axis = s.y_axis()?;
    let l_r = s.transverse_length()?;
    let transverse: Vec<f64> = y_axis
        .coords()
        .map(|y| transverse_factor(y, 0.0, l_r).powi(2))
        .collect();
    let mut out = String::from("t,x,y,density\n");
    for &t in &s.times {
        let frame = s.frame(t);
        for x in s.x_axis(t)?.coords() {
            let axial = frame.density(x);
            for (y, w) in y_axis.coords().zip(&transverse) {
                writeln!(out, "{},{},{},{}", num(t), num(x), num(y), num(axial * w)).unwrap();
            }
        }
    }
    Ok(out)
}

fn csv_profile(s: &Scenario, scale: f64) -> Result<String> {
    let mut out = String::from("t,x,density\n");
    for &t in &s.times {
        let frame = s.frame(t);
        for x in s.x_axis(t)?.coords() {
            writeln!(
                out,
                "{},{},{}",
                num(t),
                num(x),
                num(frame.density(x) * scale)
            )
            .unwrap();
        }
    }
    Ok(out)
}

fn csv_wavefunction(s: &Scenario) -> Result<String> {
    let mut out = String::from("t,x,re,im\n");
    for &t in &s.times {
        let frame = s.frame(t);
        for x in s.x_axis(t)?.coords() {
            let psi = frame.psi(x);
            writeln!(out, "{},{},{},{}", num(t), num(x), num(psi.re), num(psi.im)).unwrap();
        }
    }
    Ok(out)
}

/// Verification reports keyed by quantum number, one per train segment.
pub fn reports(s: &Scenario) -> Result<BTreeMap<String, VerificationReport>> {
    let mut segments: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &t in &s.times {
        segments.entry(s.train_at(t).n()).or_default().push(t);
    }
    let mut out = BTreeMap::new();
    for (n, times) in segments {
        let config = ReportConfig {
            times,
            seed: s.seed,
            ..ReportConfig::default()
        };
        let train = s.train.with_n(n)?;
        out.insert(format!("n={n}"), full_report(&s.params, &train, &config)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    scenario: &'a str,
    config: BTreeMap<&'static str, String>,
    params: &'a OscillatorParams,
    train: &'a TrainSpec,
    transition: Option<Transition>,
    conserved: ConservedSet,
    /// `E_n` for every quantum number in play.
    energy: BTreeMap<String, f64>,
    units: PhysicalUnits,
    transverse_length: f64,
    analysis: Vec<TimeAnalysis>,
    files: Vec<String>,
}

pub fn metadata(s: &Scenario, files: &[String]) -> Result<Value> {
    let mut energy = BTreeMap::new();
    let mut analysis = Vec::with_capacity(s.times.len());
    for &t in &s.times {
        let train = s.train_at(t);
        energy.insert(format!("n={}", train.n()), energy_level(&s.params, &train));
        analysis.push(analyze(&s.frame(t))?);
    }
    for a in &analysis {
        info!(
            "t = {:.6}: {} peaks, total width {:.4} l_x, width {:.6} l_x",
            a.t, a.peak_count, a.total_width, a.width
        );
    }
    let doc = Metadata {
        scenario: &s.name,
        config: s.settings.entries().into_iter().collect(),
        params: &s.params,
        train: &s.train,
        transition: s.transition,
        conserved: s.params.conserved(),
        energy,
        units: s.units()?,
        transverse_length: s.transverse_length()?,
        analysis,
        files: files.to_vec(),
    };
    Ok(serde_json::to_value(doc)?)
}

/// Writes every requested output plus `{name}_metadata.json` into `out_dir`.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(ShellError::io(out_dir))?;
    let mut names = Vec::new();
    for &kind in &s.outputs {
        let (file, contents) = match kind {
            OutputKind::DensityXy => ("density_xy.csv", csv_density_xy(s)?),
            OutputKind::DensityProfile => ("density_profile.csv", csv_profile(s, 1.0)?),
            OutputKind::VerticalView => {
                // |Psi(x, 0, 0)|^2: the axial density times the peak of the
                // transverse Gaussian.
                let l_r = s.transverse_length()?;
                let peak = transverse_factor(0.0, 0.0, l_r).powi(2);
                ("vertical_view.csv", csv_profile(s, peak)?)
            }
            OutputKind::Wavefunction => ("wavefunction.csv", csv_wavefunction(s)?),
            OutputKind::Report => {
                let text = serde_json::to_string_pretty(&json!({
                    "scenario": s.name,
                    "reports": reports(s)?,
                }))? + "\n";
                ("report.json", text)
            }
        };
        let file = format!("{}_{}", s.name, file);
        write_file(&out_dir.join(&file), &contents)?;
        names.push(file);
    }
    let meta_name = format!("{}_metadata.json", s.name);
    let meta = serde_json::to_string_pretty(&metadata(s, &names)?)? + "\n";
    write_file(&out_dir.join(&meta_name), &meta)?;
    names.push(meta_name);
    info!(
        "scenario {}: wrote {} files to {}",
        s.name,
        names.len(),
        out_dir.display()
    );
    Ok(Manifest {
        scenario: s.name.clone(),
        files: names.into_iter().map(|f| out_dir.join(f)).collect(),
    })
}

/// Convenience for `fig1`..`fig5`.
pub fn preset_scenario(name: &str) -> Result<Scenario> {
    Scenario::from_settings(preset(name)?)
}
