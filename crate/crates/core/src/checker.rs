//! Independent numerical checks of the closed-form solution: residual of the
//! Schrödinger equation, orthonormality, ladder matrix elements and the
//! energy expectation value.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Axis;
use crate::oscillator::OscillatorParams;
use crate::packet::{energy_level, Frame, TrainSpec};
use crate::special_fn::gauss_hermite;

/// Largest quantum number in a Gram matrix.
pub const MAX_GRAM_ORDER: usize = 16;
/// Gauss–Hermite order used for inner products; exact for `n, m <= 16`.
const GRAM_QUADRATURE_ORDER: usize = 64;
/// `|psi|` must fall below this at both grid ends.
pub const BOUNDARY_LIMIT: f64 = 1e-12;

const EPS: f64 = f64::EPSILON;

/// Where to sample `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SampleGrid {
    /// `points` samples over `center(t) ± sigmas * sigma(t)` with
    /// `sigma = rho/sqrt(c0) * sqrt(2n + 1)`, re-centred at every time.
    Window { points: usize, sigmas: f64 },
    /// One fixed interval for all times.
    Fixed {
        x_min: f64,
        x_max: f64,
        points: usize,
    },
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid::Window {
            points: 4096,
            sigmas: 12.0,
        }
    }
}

impl SampleGrid {
    pub fn axis_at(&self, frame: &Frame) -> Result<Axis> {
        match *self {
            SampleGrid::Window { points, sigmas } => {
                let (lo, hi) = frame.support(sigmas);
                Axis::linspace("x", lo, hi, points)
            }
            SampleGrid::Fixed {
                x_min,
                x_max,
                points,
            } => Axis::linspace("x", x_min, x_max, points),
        }
    }
}

/// Finite-difference steps for the derivatives in the residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FdSteps {
    /// Steps that balance the truncation error of the fourth-order stencils
    /// against rounding in the phase, estimated from the local wavenumber
    /// and frequency; `scale` multiplies both (1 is optimal, larger values
    /// expose the truncation error for convergence studies).
    Balanced {
        scale: f64,
    },
    Fixed {
        dx: f64,
        dt: f64,
    },
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps::Balanced { scale: 1.0 }
    }
}

/// Size estimates for `psi` near time `t` that drive the step choice.
struct LocalScales {
    /// Largest local wavenumber.
    k: f64,
    /// Largest local frequency.
    omega: f64,
    /// Magnitude of the phase, which sets the rounding level.
    phase: f64,
}

fn local_scales(p: &OscillatorParams, ts: &TrainSpec, frame: &Frame) -> LocalScales {
    let n = ts.n() as f64;
    let sigma = frame.width();
    let rho = frame.rho();
    let rho_dot = p.rho_dot(frame.t());
    let c0 = p.c0();
    let b0 = ts.b0().abs();
    let reach = frame.center().abs() + sigma * ((2.0 * n + 1.0).sqrt() + 6.0);
    let k = (2.0 * n + 1.0).sqrt() / sigma + b0 / rho + (rho_dot / rho).abs() * reach;
    let w = p.omega_x();
    let omega = 0.5 * k * k + 0.5 * w * w * reach * reach + ts.omega_r().abs();
    let phase = rho_dot.abs() * reach * reach / (2.0 * rho)
        + b0 * reach / rho
        + b0 * b0 / (4.0 * c0)
        + (n + 0.5) * frame.theta().abs()
        + (ts.omega_r() * frame.t()).abs()
        + 1.0;
    LocalScales { k, omega, phase }
}

impl LocalScales {
    /// Second-derivative stencil: rounding `64 eps Phi / (12 h^2)` against
    /// truncation `h^4 k^6 / 90`.
    fn dx2(&self) -> f64 {
        (EPS * self.phase * (64.0 / 12.0) / (2.0 * self.k.powi(6) / 90.0)).powf(1.0 / 6.0)
    }

    /// First-derivative stencil in `x`: rounding `1.5 eps Phi / h` against
    /// truncation `h^4 k^5 / 30`.
    fn dx1(&self) -> f64 {
        (EPS * self.phase * 1.5 / (4.0 * self.k.powi(5) / 30.0)).powf(0.2)
    }

    /// First-derivative stencil in `t`, as [`Self::dx1`] with the frequency.
    fn dt1(&self) -> f64 {
        (EPS * self.phase * 1.5 / (4.0 * self.omega.powi(5) / 30.0)).powf(0.2)
    }
}

fn d1(f: impl Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

fn check_boundary(frame: &Frame, axis: &Axis, psi: &dyn Fn(f64) -> Complex64) -> Result<()> {
    let measured = psi(axis.start).norm().max(psi(axis.last()).norm());
    if measured >= BOUNDARY_LIMIT {
        return Err(Error::BoundaryDecay {
            t: frame.t(),
            measured,
            limit: BOUNDARY_LIMIT,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeResidual {
    pub t: f64,
    pub l2: f64,
    pub max: f64,
    pub dx: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `||r|| / ||psi||`, worst over the sampled times.
    pub residual_l2: f64,
    /// `max |r| / max |psi|`, worst over the sampled times.
    pub residual_max: f64,
    pub per_time: Vec<TimeResidual>,
}

/// Residual of `i psi_t + psi_xx / 2 - (omega_x^2 x^2 / 2 + omega_r) psi` for
/// the closed-form solution, by fourth-order central differences.
pub fn pde_residual(
    p: &OscillatorParams,
    ts: &TrainSpec,
    grid: SampleGrid,
    times: &[f64],
    steps: FdSteps,
) -> Result<ResidualReport> {
    pde_residual_with(
        |x, t| Frame::new(p, ts, t).psi(x),
        p,
        ts,
        grid,
        times,
        steps,
    )
}

/// Same as [`pde_residual`] for an arbitrary candidate `psi(x, t)`; `p` and
/// `ts` only choose the grid window and the difference steps.
pub fn pde_residual_with<F>(
    psi: F,
    p: &OscillatorParams,
    ts: &TrainSpec,
    grid: SampleGrid,
    times: &[f64],
    steps: FdSteps,
) -> Result<ResidualReport>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    if times.is_empty() {
        return Err(Error::InvalidGrid("no sample times".into()));
    }
    let w2 = p.omega_x() * p.omega_x();
    let mut per_time = Vec::with_capacity(times.len());
    for &t in times {
        let frame = Frame::new(p, ts, t);
        let axis = grid.axis_at(&frame)?;
        check_boundary(&frame, &axis, &|x| psi(x, t))?;
        let (dx, dt) = match steps {
            FdSteps::Balanced { scale } => {
                let s = local_scales(p, ts, &frame);
                (scale * s.dx2(), scale * s.dt1())
            }
            FdSteps::Fixed { dx, dt } => (dx, dt),
        };
        let (r2, r_max, psi2, psi_max) = (0..axis.count)
            .into_par_iter()
            .map(|i| {
                let x = axis.coord(i);
                let value = psi(x, t);
                let psi_t = d1(|s| psi(x, s), t, dt);
                let psi_xx = d2(|y| psi(y, t), x, dx);
                let r = Complex64::i() * psi_t + 0.5 * psi_xx
                    - (0.5 * w2 * x * x + ts.omega_r()) * value;
                (r.norm_sqr(), r.norm(), value.norm_sqr(), value.norm())
            })
            .reduce(
                || (0.0, 0.0, 0.0, 0.0),
                |a, b| (a.0 + b.0, a.1.max(b.1), a.2 + b.2, a.3.max(b.3)),
            );
        per_time.push(TimeResidual {
            t,
            l2: (r2 / psi2).sqrt(),
            max: r_max / psi_max,
            dx,
            dt,
        });
    }
    Ok(ResidualReport {
        residual_l2: per_time.iter().map(|r| r.l2).fold(0.0, f64::max),
        residual_max: per_time.iter().map(|r| r.max).fold(0.0, f64::max),
        per_time,
    })
}

/// Residuals at difference steps `scale` and `scale / 2`. For a fourth-order
/// scheme in the truncation-dominated regime `ratio` approaches 16.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
}

pub fn residual_convergence(
    p: &OscillatorParams,
    ts: &TrainSpec,
    grid: SampleGrid,
    times: &[f64],
    scale: f64,
) -> Result<ConvergenceStudy> {
    let coarse = pde_residual(p, ts, grid, times, FdSteps::Balanced { scale })?.residual_l2;
    let fine =
        pde_residual(p, ts, grid, times, FdSteps::Balanced { scale: scale / 2.0 })?.residual_l2;
    Ok(ConvergenceStudy {
        coarse,
        fine,
        ratio: coarse / fine,
    })
}

/// Gauss–Hermite nodes mapped to `x`, with weights that absorb the
/// `exp(-xi^2)` factor and the Jacobian `rho / sqrt(c0)`.
fn x_quadrature(frame: &Frame) -> Result<Vec<(f64, f64)>> {
    let rule = gauss_hermite(GRAM_QUADRATURE_ORDER)?;
    let width = frame.width();
    let shift = frame.center();
    Ok(rule
        .iter()
        .map(|(xi, w)| (width * xi + shift, (w.ln() + xi * xi).exp() * width))
        .collect())
}

/// `G[n][m] = <psi_n | psi_m>` for `n, m <= n_max` at time `t`.
///
/// The overlap does not depend on `omega_r`, so only `b0` is needed.
pub fn gram_matrix(
    p: &OscillatorParams,
    b0: f64,
    n_max: usize,
    t: f64,
) -> Result<Vec<Vec<Complex64>>> {
    if n_max > MAX_GRAM_ORDER {
        return Err(Error::OrderOutOfRange {
            n: n_max,
            max: MAX_GRAM_ORDER,
        });
    }
    let ts = TrainSpec::new(0, b0, 1.0)?;
    let base = Frame::new(p, &ts, t);
    let nodes = x_quadrature(&base)?;
    let values: Vec<Vec<Complex64>> = (0..=n_max)
        .map(|n| {
            let frame = Frame::with_order(p, &ts, n, t);
            nodes.iter().map(|&(x, _)| frame.psi(x)).collect()
        })
        .collect();
    Ok((0..=n_max)
        .map(|n| {
            (0..=n_max)
                .map(|m| {
                    nodes
                        .iter()
                        .enumerate()
                        .map(|(i, &(_, w))| w * values[n][i].conj() * values[m][i])
                        .sum()
                })
                .collect()
        })
        .collect())
}

/// `max |G - I|` split into diagonal and off-diagonal parts.
pub fn gram_errors(g: &[Vec<Complex64>]) -> (f64, f64) {
    let mut diag: f64 = 0.0;
    let mut off: f64 = 0.0;
    for (n, row) in g.iter().enumerate() {
        for (m, v) in row.iter().enumerate() {
            if n == m {
                diag = diag.max((v - 1.0).norm());
            } else {
                off = off.max(v.norm());
            }
        }
    }
    (diag, off)
}

/// `<psi_{n-1}| xi |psi_n>` (absent for `n = 0`) and `<psi_{n+1}| xi |psi_n>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderIntegrals {
    pub lower: Option<Complex64>,
    pub raise: Complex64,
}

pub fn ladder_integrals(p: &OscillatorParams, ts: &TrainSpec, t: f64) -> Result<LadderIntegrals> {
    let n = ts.n();
    let frame = Frame::new(p, ts, t);
    let nodes = x_quadrature(&frame)?;
    let overlap = |k: usize| -> Complex64 {
        let other = Frame::with_order(p, ts, k, t);
        nodes
            .iter()
            .map(|&(x, w)| w * frame.xi(x) * other.psi(x).conj() * frame.psi(x))
            .sum()
    };
    Ok(LadderIntegrals {
        lower: (n > 0).then(|| overlap(n - 1)),
        raise: overlap(n + 1),
    })
}

/// `<psi| H |psi> / <psi|psi>` with `H = -d^2/dx^2 / 2 + omega_x^2 x^2 / 2 +
/// omega_r`, the kinetic term written as `|psi_x|^2 / 2` and `psi_x` taken by
/// fourth-order differences.
pub fn energy_expectation(
    p: &OscillatorParams,
    ts: &TrainSpec,
    t: f64,
    grid: SampleGrid,
) -> Result<f64> {
    let frame = Frame::new(p, ts, t);
    let axis = grid.axis_at(&frame)?;
    check_boundary(&frame, &axis, &|x| frame.psi(x))?;
    let h = local_scales(p, ts, &frame).dx1();
    let w2 = p.omega_x() * p.omega_x();
    let (energy, norm) = (0..axis.count)
        .into_par_iter()
        .map(|i| {
            let x = axis.coord(i);
            let density = frame.density(x);
            let gradient = d1(|y| frame.psi(y), x, h);
            (
                0.5 * gradient.norm_sqr() + (0.5 * w2 * x * x + ts.omega_r()) * density,
                density,
            )
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(energy / norm)
}

/// `Re <psi| i d/dt |psi>` by central differences with `dt = 1e-5`; for an
/// exact solution this equals [`energy_expectation`].
pub fn energy_from_time_derivative(
    p: &OscillatorParams,
    ts: &TrainSpec,
    t: f64,
    grid: SampleGrid,
) -> Result<f64> {
    const DT: f64 = 1e-5;
    let frame = Frame::new(p, ts, t);
    let before = Frame::new(p, ts, t - DT);
    let after = Frame::new(p, ts, t + DT);
    let axis = grid.axis_at(&frame)?;
    check_boundary(&frame, &axis, &|x| frame.psi(x))?;
    let (energy, norm) = (0..axis.count)
        .into_par_iter()
        .map(|i| {
            let x = axis.coord(i);
            let value = frame.psi(x);
            let psi_t = (after.psi(x) - before.psi(x)) / (2.0 * DT);
            ((value.conj() * Complex64::i() * psi_t).re, value.norm_sqr())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(energy / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    /// Times always included.
    pub times: Vec<f64>,
    /// Extra times drawn uniformly from one period.
    pub random_times: usize,
    pub seed: u64,
    pub grid: SampleGrid,
    pub steps: FdSteps,
    pub gram_n_max: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            times: vec![0.0],
            random_times: 3,
            seed: 0,
            grid: SampleGrid::default(),
            steps: FdSteps::default(),
            gram_n_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub residual_l2: f64,
    pub residual_max: f64,
    pub gram_max_offdiag: f64,
    pub gram_max_diag_err: f64,
    pub energy_numeric: f64,
    pub energy_closed_form: f64,
    /// `max_t |E(t) - E(t_0)| / |E_closed|` over the sampled times.
    pub energy_drift: f64,
    pub times: Vec<f64>,
    pub details: BTreeMap<String, f64>,
}

impl VerificationReport {
    /// Largest of the error-magnitude fields.
    pub fn worst_error(&self) -> f64 {
        let energy_err =
            (self.energy_numeric - self.energy_closed_form).abs() / self.energy_closed_form.abs();
        [
            self.residual_l2,
            self.residual_max,
            self.gram_max_offdiag,
            self.gram_max_diag_err,
            self.energy_drift,
            energy_err,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Runs every check at the configured times plus `random_times` seeded ones.
pub fn full_report(
    p: &OscillatorParams,
    ts: &TrainSpec,
    config: &ReportConfig,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let period = TAU / p.omega_x();
    let mut times = config.times.clone();
    times.extend((0..config.random_times).map(|_| rng.gen_range(0.0..period)));
    if times.is_empty() {
        return Err(Error::InvalidGrid("report needs at least one time".into()));
    }
    let mut details = BTreeMap::new();

    let residual = pde_residual(p, ts, config.grid, &times, config.steps)
        .map_err(Error::in_check("pde_residual"))?;

    let mut gram_diag: f64 = 0.0;
    let mut gram_off: f64 = 0.0;
    let mut gram_hermitian: f64 = 0.0;
    for &t in &times {
        let g = gram_matrix(p, ts.b0(), config.gram_n_max, t)
            .map_err(Error::in_check("gram_matrix"))?;
        let (diag, off) = gram_errors(&g);
        gram_diag = gram_diag.max(diag);
        gram_off = gram_off.max(off);
        for (n, row) in g.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                gram_hermitian = gram_hermitian.max((v - g[m][n].conj()).norm());
            }
        }
    }
    details.insert("gram_hermitian_err".into(), gram_hermitian);

    let energy_closed_form = energy_level(p, ts);
    let energies = times
        .iter()
        .map(|&t| energy_expectation(p, ts, t, config.grid))
        .collect::<Result<Vec<_>>>()
        .map_err(Error::in_check("energy_expectation"))?;
    let energy_numeric = energies[0];
    let energy_drift = energies
        .iter()
        .map(|e| (e - energy_numeric).abs())
        .fold(0.0, f64::max)
        / energy_closed_form.abs();
    details.insert(
        "energy_rel_err".into(),
        (energy_numeric - energy_closed_form).abs() / energy_closed_form.abs(),
    );
    let time_derivative = energy_from_time_derivative(p, ts, times[0], config.grid)
        .map_err(Error::in_check("energy_from_time_derivative"))?;
    details.insert("energy_time_derivative".into(), time_derivative);

    let t0 = times[0];
    let ladder = ladder_integrals(p, ts, t0).map_err(Error::in_check("ladder_integrals"))?;
    let n = ts.n() as f64;
    let theta = p.theta(t0);
    if let Some(lower) = ladder.lower {
        details.insert(
            "ladder_lower_modulus_err".into(),
            (lower.norm() - (n / 2.0).sqrt()).abs(),
        );
        // Recorded only: the expected factor is exp(-i theta).
        details.insert(
            "ladder_lower_phase_offset".into(),
            (lower * Complex64::cis(theta)).arg(),
        );
    }
    details.insert(
        "ladder_raise_modulus_err".into(),
        (ladder.raise.norm() - ((n + 1.0) / 2.0).sqrt()).abs(),
    );
    details.insert(
        "ladder_raise_phase_offset".into(),
        (ladder.raise * Complex64::cis(-theta)).arg(),
    );

    let c = p.conserved();
    let mut c0_err: f64 = 0.0;
    let mut c1_err: f64 = 0.0;
    let mut c2_err: f64 = 0.0;
    for &t in &times {
        let rho = p.rho(t);
        c0_err = c0_err.max((rho * rho * p.theta_dot(t) - c.c0).abs());
        c1_err = c1_err.max((p.c1_at(t) - c.c1).abs());
        c2_err = c2_err.max((p.c2_at(t) - c.c2).abs());
    }
    details.insert("c0_drift".into(), c0_err);
    details.insert("c1_drift".into(), c1_err);
    details.insert("c2_closed_form_err".into(), c2_err);

    Ok(VerificationReport {
        residual_l2: residual.residual_l2,
        residual_max: residual.residual_max,
        gram_max_offdiag: gram_off,
        gram_max_diag_err: gram_diag,
        energy_numeric,
        energy_closed_form,
        energy_drift,
        times,
        details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const HALF_PI: f64 = PI / 2.0;

    fn fig1() -> (OscillatorParams, TrainSpec) {
        (
            OscillatorParams::new(1.0, 1.0, 0.0, -HALF_PI).unwrap(),
            TrainSpec::new(10, -5.0, 40.0).unwrap(),
        )
    }
    fn fig2() -> (OscillatorParams, TrainSpec) {
        (
            OscillatorParams::new(0.01, 1.0, 0.0, -HALF_PI).unwrap(),
            TrainSpec::new(10, 0.0, 40.0).unwrap(),
        )
    }
    fn fig3() -> (OscillatorParams, TrainSpec) {
        (
            OscillatorParams::new(0.4624, 1.0, 0.0, -HALF_PI).unwrap(),
            TrainSpec::new(10, -17.437, 40.0).unwrap(),
        )
    }
    fn coherent() -> (OscillatorParams, TrainSpec) {
        (
            OscillatorParams::new(1.0, 1.0, 0.0, -HALF_PI).unwrap(),
            TrainSpec::new(0, -5.0, 40.0).unwrap(),
        )
    }

    fn random_cases(seed: u64, count: usize) -> Vec<(OscillatorParams, TrainSpec)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let alpha = rng.gen_range(-PI..PI);
                let p = OscillatorParams::new(
                    rng.gen_range(0.3..1.5),
                    rng.gen_range(0.3..1.5),
                    alpha,
                    alpha - rng.gen_range(0.4..(PI - 0.4)),
                )
                .unwrap();
                let ts =
                    TrainSpec::new(rng.gen_range(0..=10), rng.gen_range(-4.0..4.0), 40.0).unwrap();
                (p, ts)
            })
            .collect()
    }

    #[test]
    fn residual_small_for_figure_one_on_fixed_grid() {
        let (p, ts) = fig1();
        let grid = SampleGrid::Fixed {
            x_min: -15.0,
            x_max: 15.0,
            points: 4096,
        };
        let r = pde_residual(&p, &ts, grid, &[0.0, 0.7, HALF_PI], FdSteps::default()).unwrap();
        assert!(r.residual_l2 < 1e-6, "{r:?}");
    }

    #[test]
    fn residual_tiny_for_coherent_state() {
        let (p, ts) = coherent();
        let r = pde_residual(
            &p,
            &ts,
            SampleGrid::default(),
            &[0.0, 1.0, 2.5],
            FdSteps::default(),
        )
        .unwrap();
        assert!(r.residual_l2 < 1e-8, "{r:?}");
    }

    #[test]
    fn corrupted_phase_is_caught() {
        let (p, ts) = fig1();
        let corrupted = |x: f64, t: f64| {
            let frame = Frame::new(&p, &ts, t);
            let exact = frame.psi(x);
            Complex64::from_polar(exact.norm(), 1.01 * frame.phase(x))
        };
        let r = pde_residual_with(
            corrupted,
            &p,
            &ts,
            SampleGrid::default(),
            &[0.0, 0.7],
            FdSteps::default(),
        )
        .unwrap();
        assert!(r.residual_l2 > 1e-2, "{r:?}");
    }

    #[test]
    fn residual_converges_at_fourth_order() {
        for (p, ts) in [fig1(), fig2(), fig3()] {
            let study =
                residual_convergence(&p, &ts, SampleGrid::default(), &[0.0, 0.7], 8.0).unwrap();
            assert!(study.ratio > 8.0, "{study:?}");
            assert!(study.ratio < 24.0, "{study:?}");
        }
    }

    #[test]
    fn boundary_precondition() {
        let (p, ts) = fig3();
        let grid = SampleGrid::Fixed {
            x_min: -18.0,
            x_max: -10.0,
            points: 512,
        };
        let err = pde_residual(&p, &ts, grid, &[0.0], FdSteps::default()).unwrap_err();
        match err {
            Error::BoundaryDecay { measured, .. } => assert!(measured > BOUNDARY_LIMIT),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gram_identity_and_time_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (p, ts) in random_cases(5, 3).into_iter().chain([fig2(), fig3()]) {
            let t1 = rng.gen_range(-5.0..5.0);
            let t2 = rng.gen_range(-5.0..5.0);
            let g1 = gram_matrix(&p, ts.b0(), 16, t1).unwrap();
            let g2 = gram_matrix(&p, ts.b0(), 16, t2).unwrap();
            let (diag, off) = gram_errors(&g1);
            assert!(diag < 1e-9 && off < 1e-9, "{diag} {off}");
            assert!(g1[3][5].norm() < 1e-9);
            for n in 0..=16 {
                for m in 0..=16 {
                    assert!((g1[n][m] - g2[n][m]).norm() < 1e-9);
                    assert!((g1[n][m] - g1[m][n].conj()).norm() < 1e-12);
                }
            }
        }
        assert!(gram_matrix(&fig1().0, 0.0, 17, 0.0).is_err());
    }

    #[test]
    fn ladder_moduli() {
        let (p, _) = fig1();
        let ts = TrainSpec::new(1, -5.0, 40.0).unwrap();
        let l = ladder_integrals(&p, &ts, 0.4).unwrap();
        assert!((l.lower.unwrap().norm() - 0.5f64.sqrt()).abs() < 1e-12);
        let (p, ts) = fig3();
        let l = ladder_integrals(&p, &ts, 1.3).unwrap();
        assert!((l.raise.norm() - 5.5f64.sqrt()).abs() < 1e-9);
        assert!((l.lower.unwrap().norm() - 5f64.sqrt()).abs() < 1e-9);
        let ground = ladder_integrals(&p, &ts.with_n(0).unwrap(), 1.3).unwrap();
        assert!(ground.lower.is_none());
    }

    #[test]
    fn ladder_phases_follow_theta() {
        let (p, ts) = fig3();
        let t = 1.3;
        let theta = p.theta(t);
        let l = ladder_integrals(&p, &ts, t).unwrap();
        assert!((l.lower.unwrap() - 5f64.sqrt() * Complex64::cis(-theta)).norm() < 1e-9);
        assert!((l.raise - 5.5f64.sqrt() * Complex64::cis(theta)).norm() < 1e-9);
    }

    #[test]
    fn energy_examples() {
        let (p, ts) = fig1();
        for t in [0.0, 1.0, 2.3] {
            let e = energy_expectation(&p, &ts, t, SampleGrid::default()).unwrap();
            assert!((e - 63.0).abs() / 63.0 < 1e-6, "t={t}: {e}");
        }
        let p = OscillatorParams::new(1.0, 1.0, 0.0, -HALF_PI).unwrap();
        let ts = TrainSpec::new(0, 0.0, 40.0).unwrap();
        let e = energy_expectation(&p, &ts, 0.3, SampleGrid::default()).unwrap();
        assert!((e - 40.5).abs() < 1e-9, "{e}");

        let (p, ts) = fig2();
        let values: Vec<f64> = [0.0, PI / 4.0, HALF_PI]
            .iter()
            .map(|&t| energy_expectation(&p, &ts, t, SampleGrid::default()).unwrap())
            .collect();
        for v in &values {
            assert!((v - values[0]).abs() / values[0] < 1e-8, "{values:?}");
            assert!((v - 565.0525).abs() / 565.0525 < 1e-6, "{values:?}");
        }
    }

    #[test]
    fn energy_matches_closed_form_for_random_cases() {
        for (p, ts) in random_cases(21, 5) {
            let closed = energy_level(&p, &ts);
            for t in [0.0, 1.7] {
                let e = energy_expectation(&p, &ts, t, SampleGrid::default()).unwrap();
                assert!(
                    (e - closed).abs() / closed < 1e-8,
                    "{p:?} {ts:?}: {e} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn time_derivative_cross_check() {
        let (p, ts) = fig3();
        let e = energy_from_time_derivative(&p, &ts, 0.9, SampleGrid::default()).unwrap();
        let closed = energy_level(&p, &ts);
        assert!((e - closed).abs() / closed < 1e-6, "{e} vs {closed}");
    }

    #[test]
    fn full_reports_for_presets() {
        for (p, ts) in [fig1(), fig3()] {
            let report = full_report(&p, &ts, &ReportConfig::default()).unwrap();
            assert!(report.worst_error() < 1e-6, "{report:?}");
            assert_eq!(report.times.len(), 4);
            for key in [
                "c0_drift",
                "c1_drift",
                "c2_closed_form_err",
                "ladder_raise_modulus_err",
            ] {
                assert!(report.details[key] < 1e-9, "{key}: {}", report.details[key]);
            }
        }
    }

    #[test]
    fn report_is_deterministic_and_names_failures() {
        let (p, ts) = fig1();
        let config = ReportConfig {
            random_times: 1,
            ..ReportConfig::default()
        };
        let a = full_report(&p, &ts, &config).unwrap();
        let b = full_report(&p, &ts, &config).unwrap();
        assert_eq!(a, b);

        let narrow = ReportConfig {
            grid: SampleGrid::Fixed {
                x_min: -6.0,
                x_max: -4.0,
                points: 128,
            },
            ..config
        };
        match full_report(&p, &ts, &narrow).unwrap_err() {
            Error::Check { check, .. } => assert_eq!(check, "pde_residual"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            OscillatorParams::new(1.0, 1.0, 0.0, HALF_PI),
            Err(Error::InvalidParameters(_))
        ));
    }
}
