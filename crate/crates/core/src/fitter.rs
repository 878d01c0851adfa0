//! Inverts observed train properties (centre amplitude, minimum and maximum
//! width) into oscillator constants.
//!
//! Every fit works in the gauge `alpha = 0`, `beta = -pi/2`, `B = 1` unless
//! told otherwise. In that gauge `rho` swings between `A` and `1`, the widths
//! `rho/sqrt(c0)` between `sqrt(A)` and `1/sqrt(A)`, and their product is
//! exactly 1 — which is what makes the width pair a feasibility test.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oscillator::OscillatorParams;

/// Allowed relative deviation of `width_min * width_max` from 1 (natural
/// units) in the closed-form inversion.
pub const WIDTH_PRODUCT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitUnit {
    /// Lengths already in units of `l_x`.
    Natural,
    /// Lengths in micrometres; `l_x` is inferred from the widths.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConstraints {
    /// Largest `|x_c|` over the orbit.
    pub amplitude: f64,
    pub width_min: f64,
    pub width_max: f64,
    /// Axial frequency in rad/s, carried into reports only.
    pub omega_x: Option<f64>,
    pub omega_r_ratio: f64,
    pub unit: FitUnit,
}

impl FitConstraints {
    pub fn natural(amplitude: f64, width_min: f64, width_max: f64) -> Self {
        Self {
            amplitude,
            width_min,
            width_max,
            omega_x: None,
            omega_r_ratio: 40.0,
            unit: FitUnit::Natural,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.amplitude,
            self.width_min,
            self.width_max,
            self.omega_r_ratio,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::FitInfeasible("constraints must be finite".into()));
        }
        if !(self.width_min > 0.0) || self.width_min > self.width_max {
            return Err(Error::FitInfeasible(format!(
                "need 0 < width_min <= width_max, got {} and {}",
                self.width_min, self.width_max
            )));
        }
        if self.amplitude < 0.0 {
            return Err(Error::FitInfeasible("amplitude must be >= 0".into()));
        }
        if !(self.omega_r_ratio > 0.0) {
            return Err(Error::FitInfeasible(
                "omega_r_ratio must be positive".into(),
            ));
        }
        if let Some(w) = self.omega_x {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::FitInfeasible("omega_x must be positive".into()));
            }
        }
        Ok(())
    }

    /// `(amplitude, width_min, width_max)` in units of `l_x`, plus `l_x` in
    /// micrometres for physical input.
    fn normalized(&self) -> (f64, f64, f64, Option<f64>) {
        match self.unit {
            FitUnit::Natural => (self.amplitude, self.width_min, self.width_max, None),
            FitUnit::Physical => {
                let lx = (self.width_min * self.width_max).sqrt();
                (
                    self.amplitude / lx,
                    self.width_min / lx,
                    self.width_max / lx,
                    Some(lx),
                )
            }
        }
    }
}

/// A single observation at time `t`, in the constraint's length unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Observation {
    /// Train centre `x_c(t)`.
    Center { t: f64, value: f64 },
    /// Average width `rho(t) / sqrt(c0)`.
    Width { t: f64, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: OscillatorParams,
    pub b0: f64,
    pub lx_microns: Option<f64>,
    /// Absolute misfit per constraint, in units of `l_x`.
    pub residuals: BTreeMap<String, f64>,
    pub converged: bool,
    /// Bound on the largest residual that `converged` certifies.
    pub tolerance: f64,
    pub iterations: usize,
    pub notes: Vec<String>,
}

impl FitResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }
}

fn model_amplitude(p: &OscillatorParams, b0: f64) -> f64 {
    (b0 / p.c0() * p.a()).abs()
}

fn model_widths(p: &OscillatorParams) -> (f64, f64) {
    let (lo, hi) = p.rho_range();
    let s = p.c0().sqrt();
    (lo / s, hi / s)
}

fn constraint_residuals(
    p: &OscillatorParams,
    b0: f64,
    amplitude: f64,
    width_min: f64,
    width_max: f64,
) -> BTreeMap<String, f64> {
    let (w_lo, w_hi) = model_widths(p);
    BTreeMap::from([
        (
            "amplitude".to_string(),
            (model_amplitude(p, b0) - amplitude).abs(),
        ),
        ("width_max".to_string(), (w_hi - width_max).abs()),
        ("width_min".to_string(), (w_lo - width_min).abs()),
    ])
}

fn physical_notes(c: &FitConstraints, lx: Option<f64>) -> Vec<String> {
    let mut notes = Vec::new();
    if let Some(lx) = lx {
        notes.push(format!(
            "l_x = sqrt(width_min * width_max) = {lx:.4} um, from the width-product identity"
        ));
        notes.push(
            "the soliton-train data are quoted both as widths of 6.8 l_x and 14.71 l_x and \
             as 0.68 l_x and 1.471 l_x; only the latter satisfy the width-product identity with A = c0 = 0.4624, and measured widths near 140 um and \
             310 um then imply l_x near 210 um rather than the quoted 21.22 um"
                .into(),
        );
    }
    if let Some(w) = c.omega_x {
        notes.push(format!(
            "omega_x = {w} rad/s (period {:.2} ms)",
            std::f64::consts::TAU / w * 1e3
        ));
    }
    notes
}

/// Direct inversion in the fixed gauge: `A = width_min^2`, `c0 = A`,
/// `b0 = -amplitude` (the train starts on the negative side).
pub fn fit_closed_form(c: &FitConstraints) -> Result<FitResult> {
    c.validate()?;
    let (amplitude, width_min, width_max, lx) = c.normalized();
    let product = width_min * width_max;
    if (product - 1.0).abs() > WIDTH_PRODUCT_TOLERANCE {
        return Err(Error::FitInfeasible(format!(
            "width_min * width_max = {product:.6} l_x^2, but every solution has exactly 1; \
             the widths are inconsistent (or not in units of l_x)"
        )));
    }
    let a = width_min * width_min;
    let params = OscillatorParams::new(a, 1.0, 0.0, -FRAC_PI_2)?;
    let b0 = if amplitude == 0.0 { 0.0 } else { -amplitude };
    let residuals = constraint_residuals(&params, b0, amplitude, width_min, width_max);
    let mut notes = physical_notes(c, lx);
    notes.push(format!("width product {product:.8}"));
    Ok(FitResult {
        params,
        b0,
        lx_microns: lx,
        residuals,
        converged: true,
        tolerance: WIDTH_PRODUCT_TOLERANCE * width_max.max(1.0),
        iterations: 0,
        notes,
    })
}

/// Which of `(A, B, alpha, beta, b0)` the simplex may move; the rest stay at
/// their gauge values `B = 1, alpha = 0, beta = -pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FreeParameters(pub [bool; 5]);

impl Default for FreeParameters {
    fn default() -> Self {
        FreeParameters([true, false, false, false, true])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeastSquaresOptions {
    pub free: FreeParameters,
    pub max_iterations: usize,
    /// A fit counts as converged only if every residual is below this.
    pub residual_tol: f64,
}

impl Default for LeastSquaresOptions {
    fn default() -> Self {
        Self {
            free: FreeParameters::default(),
            max_iterations: 20_000,
            residual_tol: 1e-6,
        }
    }
}

/// Derivative-free least squares over the free parameters, matching the
/// amplitude and width extremes plus any extra observations.
pub fn fit_least_squares(
    c: &FitConstraints,
    extra: &[Observation],
    options: &LeastSquaresOptions,
) -> Result<FitResult> {
    c.validate()?;
    let (amplitude, width_min, width_max, lx) = c.normalized();
    let scale = lx.unwrap_or(1.0);
    let free: Vec<usize> = (0..5).filter(|&i| options.free.0[i]).collect();
    let observations = extra.len() + 3;
    if free.is_empty() || free.len() > observations {
        return Err(Error::FitInfeasible(format!(
            "{} free parameters for {observations} observations",
            free.len()
        )));
    }

    // Start from the gauge values with the closed-form guesses for A and b0.
    let mut full = [
        (width_min * width_min).clamp(1e-3, 1e3),
        1.0,
        0.0,
        -FRAC_PI_2,
        -amplitude,
    ];
    let build = |v: &[f64]| -> [f64; 5] {
        let mut out = full;
        for (slot, &i) in free.iter().enumerate() {
            out[i] = v[slot];
        }
        out
    };
    let residual_vector = |x: &[f64; 5]| -> Option<Vec<f64>> {
        let p = OscillatorParams::new(x[0], x[1], x[2], x[3]).ok()?;
        let b0 = x[4];
        let (w_lo, w_hi) = model_widths(&p);
        let mut r = vec![
            model_amplitude(&p, b0) - amplitude,
            w_lo - width_min,
            w_hi - width_max,
        ];
        for obs in extra {
            r.push(match *obs {
                Observation::Center { t, value } => p.center_orbit(t, b0) - value / scale,
                Observation::Width { t, value } => p.rho(t) / p.c0().sqrt() - value / scale,
            });
        }
        Some(r)
    };
    let objective = |v: &[f64]| -> f64 {
        residual_vector(&build(v))
            .map(|r| r.iter().map(|x| x * x).sum())
            .unwrap_or(f64::INFINITY)
    };

    let start: Vec<f64> = free.iter().map(|&i| full[i]).collect();
    let steps: Vec<f64> = free
        .iter()
        .map(|&i| match i {
            2 | 3 => 0.1,
            _ => 0.1 * full[i].abs().max(0.1),
        })
        .collect();
    let outcome = nelder_mead(&objective, &start, &steps, options.max_iterations);
    full = build(&outcome.best);

    let params = OscillatorParams::new(full[0], full[1], full[2], full[3])?;
    let b0 = full[4];
    let mut residuals = constraint_residuals(&params, b0, amplitude, width_min, width_max);
    if let Some(r) = residual_vector(&full) {
        for (k, v) in r.iter().skip(3).enumerate() {
            residuals.insert(format!("observation_{k}"), v.abs());
        }
    }
    let max_residual = residuals.values().cloned().fold(0.0, f64::max);
    let converged = outcome.converged && max_residual < options.residual_tol;
    let mut notes = physical_notes(c, lx);
    if !outcome.converged {
        notes.push(format!(
            "simplex stopped after {} iterations without meeting its tolerance",
            outcome.iterations
        ));
    }
    if outcome.converged && !converged {
        notes.push(format!(
            "best misfit {max_residual:e} exceeds residual_tol {:e}",
            options.residual_tol
        ));
    }
    Ok(FitResult {
        params,
        b0,
        lx_microns: lx,
        residuals,
        converged,
        tolerance: options.residual_tol,
        iterations: outcome.iterations,
        notes,
    })
}

struct SimplexOutcome {
    best: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2) from an axis-aligned initial simplex.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    steps: &[f64],
    max_iterations: usize,
) -> SimplexOutcome {
    let dim = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        // Objective values carry rounding noise near an exact fit, so
        // convergence is judged on the simplex size alone.
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let x_scale = simplex[0].iter().map(|v| v.abs()).fold(1.0, f64::max);
        if size <= 1e-12 * x_scale {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let reflected = combine(&centroid, &simplex[dim], -1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = combine(&centroid, &simplex[dim], -2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        // Outside contraction toward the reflected point, or inside toward
        // the worst vertex.
        let (contracted, target) = if fr < values[dim] {
            (combine(&centroid, &reflected, 0.5), fr)
        } else {
            (combine(&centroid, &simplex[dim], 0.5), values[dim])
        };
        let fc = f(&contracted);
        if fc < target {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            simplex[i] = combine(&simplex[0], &simplex[i], 0.5);
            values[i] = f(&simplex[i]);
        }
    }
    let best = (0..=dim)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap_or(0);
    SimplexOutcome {
        best: simplex[best].clone(),
        iterations,
        converged,
    }
}
