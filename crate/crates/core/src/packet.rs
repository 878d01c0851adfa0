//! The exact wave-packet-train solutions of the harmonic oscillator.
//!
//! In natural units (`m = hbar = 1`, lengths in `l_x`) the axial solution is
//!
//! ```text
//! psi_n(x, t) = (sqrt(c0)/rho)^(1/2) h_n(xi) exp(i Theta_n)
//! xi          = sqrt(c0) x / rho - (b0 / sqrt(c0)) cos(theta)
//! Theta_n     = rho' x^2 / (2 rho) - (b0 x / rho) sin(theta)
//!               + (b0^2 / (4 c0)) sin(2 theta) - (n + 1/2) theta - omega_r t
//! ```
//!
//! with `h_n` the normalized Hermite function, so the `2^n n!` normalization
//! never appears explicitly. The full 3D state multiplies this by the
//! transverse ground state of the radial trap.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Axis, ComplexField, LengthUnit};
use crate::oscillator::OscillatorParams;
use crate::special_fn::normalized_hermite;

/// Largest quantum number accepted by [`TrainSpec`].
pub const MAX_TRAIN_ORDER: usize = 64;

/// Selects one exact solution: quantum number, drift constant and transverse
/// frequency (in units of `omega_x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainSpec {
    n: usize,
    b0: f64,
    omega_r: f64,
}

impl TrainSpec {
    pub fn new(n: usize, b0: f64, omega_r: f64) -> Result<Self> {
        if n > MAX_TRAIN_ORDER {
            return Err(Error::InvalidTrain(format!(
                "quantum number {n} exceeds {MAX_TRAIN_ORDER}"
            )));
        }
        if !b0.is_finite() {
            return Err(Error::InvalidTrain("b0 must be finite".into()));
        }
        if !(omega_r > 0.0) || !omega_r.is_finite() {
            return Err(Error::InvalidTrain(format!(
                "omega_r must be positive, got {omega_r}"
            )));
        }
        Ok(Self { n, b0, omega_r })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn b0(&self) -> f64 {
        self.b0
    }
    pub fn omega_r(&self) -> f64 {
        self.omega_r
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.b0, self.omega_r)
    }

    pub fn with_b0(&self, b0: f64) -> Result<Self> {
        Self::new(self.n, b0, self.omega_r)
    }
}

/// Coefficients of the Gaussian-Hermite ansatz
/// `psi = a_n H_n(xi) exp(b x - c x^2 - f^2/2)`, `xi = e x - f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientState {
    pub b: Complex64,
    pub c: Complex64,
    pub e: f64,
    pub f: f64,
    pub a_n: Complex64,
}

/// Everything about `psi_n` that depends on time only, evaluated once so that
/// sampling many positions at the same instant stays cheap.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    t: f64,
    n: usize,
    b0: f64,
    omega_r: f64,
    c0: f64,
    sqrt_c0: f64,
    rho: f64,
    rho_dot: f64,
    theta: f64,
    amplitude: f64,
}

impl Frame {
    pub fn new(p: &OscillatorParams, ts: &TrainSpec, t: f64) -> Self {
        Self::with_order(p, ts, ts.n, t)
    }

    /// Same train constants with another quantum number; used for ladder and
    /// Gram computations that step one past the validated range.
    pub(crate) fn with_order(p: &OscillatorParams, ts: &TrainSpec, n: usize, t: f64) -> Self {
        let c0 = p.c0();
        let sqrt_c0 = c0.sqrt();
        let rho = p.rho(t);
        Self {
            t,
            n,
            b0: ts.b0,
            omega_r: ts.omega_r,
            c0,
            sqrt_c0,
            rho,
            rho_dot: p.rho_dot(t),
            theta: p.theta(t),
            amplitude: (sqrt_c0 / rho).sqrt(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Average packet width `rho / sqrt(c0)` in units of `l_x`.
    pub fn width(&self) -> f64 {
        self.rho / self.sqrt_c0
    }

    /// Position where `xi = 0`.
    pub fn center(&self) -> f64 {
        self.b0 / self.c0 * self.rho * self.theta.cos()
    }

    /// Half-width of the region holding the train: `k` times
    /// `sigma = width * sqrt(2n + 1)` on each side of the center.
    pub fn support(&self, k: f64) -> (f64, f64) {
        let sigma = self.width() * ((2 * self.n + 1) as f64).sqrt();
        (self.center() - k * sigma, self.center() + k * sigma)
    }

    pub fn xi(&self, x: f64) -> f64 {
        self.sqrt_c0 * x / self.rho - self.b0 / self.sqrt_c0 * self.theta.cos()
    }

    /// `Theta_n(x, t)`.
    pub fn phase(&self, x: f64) -> f64 {
        let (s, c) = self.theta.sin_cos();
        self.rho_dot * x * x / (2.0 * self.rho) - self.b0 * x / self.rho * s
            + self.b0 * self.b0 / (4.0 * self.c0) * (2.0 * s * c)
            - (0.5 + self.n as f64) * self.theta
            - self.omega_r * self.t
    }

    pub fn psi(&self, x: f64) -> Complex64 {
        let magnitude = self.amplitude * normalized_hermite(self.n, self.xi(x));
        Complex64::from_polar(magnitude, self.phase(x))
    }

    pub fn density(&self, x: f64) -> f64 {
        self.psi(x).norm_sqr()
    }

    pub fn coefficients(&self) -> CoefficientState {
        let theta_dot = self.c0 / (self.rho * self.rho);
        let b = self.b0 / self.rho * Complex64::from_polar(1.0, -self.theta);
        let c = Complex64::new(0.5 * theta_dot, -self.rho_dot / (2.0 * self.rho));
        let e = self.sqrt_c0 / self.rho;
        let f = self.b0 / self.sqrt_c0 * self.theta.cos();
        let a_n = Complex64::from_polar(
            normalization_constant(self.n, self.c0) / self.rho.sqrt(),
            -((0.5 + self.n as f64) * self.theta + self.omega_r * self.t
                - self.b0 * self.b0 / (4.0 * self.c0) * (2.0 * self.theta).sin()),
        );
        CoefficientState { b, c, e, f, a_n }
    }
}

/// `A0 = [sqrt(c0) / (sqrt(pi) 2^n n!)]^(1/2)`, assembled in log space.
fn normalization_constant(n: usize, c0: f64) -> f64 {
    let ln_factorial: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    (0.5 * (0.5 * c0.ln() - 0.5 * PI.ln() - n as f64 * 2f64.ln() - ln_factorial)).exp()
}

/// Moving and breathing coordinate `xi(x, t)`.
pub fn xi(x: f64, t: f64, p: &OscillatorParams, ts: &TrainSpec) -> f64 {
    Frame::new(p, ts, t).xi(x)
}

pub fn coefficients(t: f64, p: &OscillatorParams, ts: &TrainSpec) -> CoefficientState {
    Frame::new(p, ts, t).coefficients()
}

/// Axial wavefunction `psi_n(x, t)`, `x` in units of `l_x`.
pub fn psi_axial(x: f64, t: f64, p: &OscillatorParams, ts: &TrainSpec) -> Complex64 {
    Frame::new(p, ts, t).psi(x)
}

/// Full 3D state. `lr_ratio = l_x / l_r` must satisfy
/// `lr_ratio^2 = omega_r / omega_x`.
pub fn psi_full(
    x: f64,
    y: f64,
    z: f64,
    t: f64,
    p: &OscillatorParams,
    ts: &TrainSpec,
    lr_ratio: f64,
) -> Result<Complex64> {
    let l_r = transverse_length(p, ts, lr_ratio)?;
    Ok(psi_axial(x, t, p, ts) * transverse_factor(y, z, l_r))
}

/// Checks `lr_ratio` against the frequencies and returns `l_r` in the units
/// of `x`.
pub fn transverse_length(p: &OscillatorParams, ts: &TrainSpec, lr_ratio: f64) -> Result<f64> {
    let expected = ts.omega_r / p.omega_x();
    let actual = lr_ratio * lr_ratio;
    if !(lr_ratio > 0.0) || (actual - expected).abs() > 1e-9 * expected.max(1.0) {
        return Err(Error::InconsistentTransverse {
            lr_ratio,
            expected,
            actual,
        });
    }
    let l_x = 1.0 / p.omega_x().sqrt();
    Ok(l_x / lr_ratio)
}

/// Transverse ground state `(sqrt(pi) l_r)^-1 exp(-(y^2 + z^2) / (2 l_r^2))`.
pub fn transverse_factor(y: f64, z: f64, l_r: f64) -> f64 {
    (-(y * y + z * z) / (2.0 * l_r * l_r)).exp() / (PI.sqrt() * l_r)
}

/// Average energy `E_n = (n + 1/2) c1/c0 + omega_r + (b0^2/c0) c2` in units
/// of `hbar omega_x`.
pub fn energy_level(p: &OscillatorParams, ts: &TrainSpec) -> f64 {
    let c = p.conserved();
    (0.5 + ts.n as f64) * c.c1 / c.c0 + ts.omega_r + ts.b0 * ts.b0 / c.c0 * c.c2
}

/// Samples `psi_n` on `axis` at time `t`.
pub fn sample_axial(p: &OscillatorParams, ts: &TrainSpec, axis: &Axis, t: f64) -> ComplexField {
    let frame = Frame::new(p, ts, t);
    let samples: Vec<Complex64> = (0..axis.count)
        .into_par_iter()
        .map(|i| frame.psi(axis.coord(i)))
        .collect();
    ComplexField::new(vec![axis.clone()], samples, LengthUnit::Natural)
        .expect("sample count matches the axis")
}
