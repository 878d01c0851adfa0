//! The classical complex oscillator `phi = A cos(wt + alpha) + i B cos(wt + beta)
//! = rho exp(i theta)` that drives the breathing and drift of every packet train.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// The four classical constants plus the axial frequency.
///
/// Construction rejects `c0 = A B w sin(alpha - beta) <= 0`, so `rho(t) > 0`
/// and the phase `theta` is strictly increasing for every valid value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorParams {
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    omega_x: f64,
}

/// First integrals of the oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedSet {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl OscillatorParams {
    /// Parameters in natural units (`omega_x = 1`).
    pub fn new(a: f64, b: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::with_frequency(a, b, alpha, beta, 1.0)
    }

    pub fn with_frequency(a: f64, b: f64, alpha: f64, beta: f64, omega_x: f64) -> Result<Self> {
        if ![a, b, alpha, beta, omega_x].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameters(
                "all constants must be finite".into(),
            ));
        }
        if omega_x <= 0.0 {
            return Err(Error::InvalidParameters(format!(
                "omega_x must be positive, got {omega_x}"
            )));
        }
        let p = Self {
            a,
            b,
            alpha,
            beta,
            omega_x,
        };
        let c0 = p.c0();
        if c0 <= 0.0 || !c0.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "c0 = A B omega_x sin(alpha - beta) = {c0} must be positive"
            )));
        }
        Ok(p)
    }

    /// The gauge used by all figure presets: `B = 1, alpha = 0, beta = -pi/2`.
    pub fn gauge_fixed(a: f64) -> Result<Self> {
        Self::new(a, 1.0, 0.0, -PI / 2.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn omega_x(&self) -> f64 {
        self.omega_x
    }

    /// `(sA, sB, alpha, beta)`; leaves every observable unchanged when `b0`
    /// is scaled along.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::with_frequency(s * self.a, s * self.b, self.alpha, self.beta, self.omega_x)
    }

    pub fn c0(&self) -> f64 {
        self.a * self.b * self.omega_x * (self.alpha - self.beta).sin()
    }

    /// `phi(t)`, the complex classical trajectory.
    pub fn phi(&self, t: f64) -> Complex64 {
        Complex64::new(
            self.a * (self.omega_x * t + self.alpha).cos(),
            self.b * (self.omega_x * t + self.beta).cos(),
        )
    }

    pub fn rho(&self, t: f64) -> f64 {
        let u = self.a * (self.omega_x * t + self.alpha).cos();
        let v = self.b * (self.omega_x * t + self.beta).cos();
        u.hypot(v)
    }

    pub fn rho_dot(&self, t: f64) -> f64 {
        let pa = self.omega_x * t + self.alpha;
        let pb = self.omega_x * t + self.beta;
        -self.omega_x
            * (self.a * self.a * pa.cos() * pa.sin() + self.b * self.b * pb.cos() * pb.sin())
            / self.rho(t)
    }

    /// Continuous phase of `phi`.
    ///
    /// Writing `phi = P e^{iwt} + Q e^{-iwt}` gives
    /// `theta = wt + arg P + arg(1 + (Q/P) e^{-2iwt})`, and `c0 > 0` is
    /// equivalent to `|Q| < |P|`, so the last argument never leaves
    /// `(-pi/2, pi/2)` and needs no unwrapping. The additive `2 pi k` is fixed
    /// so that `theta(0) = atan2(B cos beta, A cos alpha)`, which keeps
    /// `rho cos(theta) = Re phi` exactly.
    pub fn theta(&self, t: f64) -> f64 {
        let (p, q) = self.rotating_components();
        let ratio = q / p;
        let base = |t: f64| {
            let wobble = Complex64::new(1.0, 0.0)
                + ratio * Complex64::from_polar(1.0, -2.0 * self.omega_x * t);
            self.omega_x * t + p.arg() + wobble.arg()
        };
        let start = (self.b * self.beta.cos()).atan2(self.a * self.alpha.cos());
        let winding = ((start - base(0.0)) / TAU).round();
        base(t) + TAU * winding
    }

    /// `c0 / rho^2`, always positive.
    pub fn theta_dot(&self, t: f64) -> f64 {
        let r = self.rho(t);
        self.c0() / (r * r)
    }

    fn rotating_components(&self) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let p = (self.a * Complex64::from_polar(1.0, self.alpha)
            + i * self.b * Complex64::from_polar(1.0, self.beta))
            / 2.0;
        let q = (self.a * Complex64::from_polar(1.0, -self.alpha)
            + i * self.b * Complex64::from_polar(1.0, -self.beta))
            / 2.0;
        (p, q)
    }

    pub fn conserved(&self) -> ConservedSet {
        let c0 = self.c0();
        let r = self.rho(0.0);
        let rd = self.rho_dot(0.0);
        let w = self.omega_x;
        let c1 = 0.5 * (rd * rd + c0 * c0 / (r * r) + r * r * w * w);
        let c2 = self.a * self.a * c1 / ((self.a * self.a + self.b * self.b) * c0);
        ConservedSet { c0, c1, c2 }
    }

    /// `c1` evaluated from the instantaneous amplitude and phase at `t`.
    pub fn c1_at(&self, t: f64) -> f64 {
        let r = self.rho(t);
        let rd = self.rho_dot(t);
        let c0 = self.c0();
        0.5 * (rd * rd + c0 * c0 / (r * r) + r * r * self.omega_x * self.omega_x)
    }

    /// The time-dependent form
    /// `c2 = theta'/2 + (c1/c0 - theta') cos^2 theta - (rho'/rho) cos theta sin theta`,
    /// which must equal the closed form in [`ConservedSet::c2`] at every time.
    pub fn c2_at(&self, t: f64) -> f64 {
        let c0 = self.c0();
        let c1 = self.c1_at(t);
        let th = self.theta(t);
        let thd = self.theta_dot(t);
        let (s, c) = th.sin_cos();
        0.5 * thd + (c1 / c0 - thd) * c * c - self.rho_dot(t) / self.rho(t) * c * s
    }

    /// Orbit of the train center, `x_c = (b0/c0) A cos(wt + alpha)`.
    pub fn center_orbit(&self, t: f64, b0: f64) -> f64 {
        b0 / self.c0() * self.a * (self.omega_x * t + self.alpha).cos()
    }

    /// Extremes of `rho` over one period, `(rho_min, rho_max)`.
    ///
    /// `rho^2 = (A^2+B^2)/2 + Re[(A^2 e^{2i alpha} + B^2 e^{2i beta}) e^{2iwt}]/2`,
    /// and `rho_min rho_max = c0 / omega_x` for every parameter set.
    pub fn rho_range(&self) -> (f64, f64) {
        let mean = 0.5 * (self.a * self.a + self.b * self.b);
        let swing = 0.5
            * (self.a * self.a * Complex64::from_polar(1.0, 2.0 * self.alpha)
                + self.b * self.b * Complex64::from_polar(1.0, 2.0 * self.beta))
            .norm();
        ((mean - swing).max(0.0).sqrt(), (mean + swing).sqrt())
    }

    /// Breathing period of `rho`.
    pub fn breathing_period(&self) -> f64 {
        PI / self.omega_x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const HALF_PI: f64 = PI / 2.0;

    fn fig1() -> OscillatorParams {
        OscillatorParams::new(1.0, 1.0, 0.0, -HALF_PI).unwrap()
    }
    fn fig2() -> OscillatorParams {
        OscillatorParams::new(0.01, 1.0, 0.0, -HALF_PI).unwrap()
    }
    fn fig3() -> OscillatorParams {
        OscillatorParams::new(0.4624, 1.0, 0.0, -HALF_PI).unwrap()
    }

    /// Adaptive Simpson integration, used as an independent route to theta.
    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
        }
        #[allow(clippy::too_many_arguments)]
        fn recurse<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            m: f64,
            fm: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let (lm, flm, left) = simpson(f, a, fa, m, fm);
            let (rm, frm, right) = simpson(f, m, fm, b, fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
        }
        let (fa, fb) = (f(a), f(b));
        let (m, fm, whole) = simpson(f, a, fa, b, fb);
        recurse(f, a, fa, b, fb, m, fm, whole, tol, 60)
    }

    fn random_params(rng: &mut ChaCha8Rng) -> OscillatorParams {
        let a = rng.gen_range(0.05..3.0);
        let b = rng.gen_range(0.05..3.0);
        let alpha = rng.gen_range(-PI..PI);
        let beta = alpha - rng.gen_range(0.2..(PI - 0.2));
        OscillatorParams::new(a, b, alpha, beta).unwrap()
    }

    #[test]
    fn rho_examples() {
        assert_relative_eq!(fig1().rho(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(fig2().rho(0.0), 0.01, epsilon = 1e-15);
        assert_relative_eq!(fig2().rho(PI / 4.0), 0.50005f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn theta_examples() {
        let p = fig1();
        for t in [0.0, 0.3, 1.7, 4.0, 11.5] {
            assert_relative_eq!(p.theta(t), t, epsilon = 1e-12);
        }
        let p = OscillatorParams::new(2.0, 1.0, 0.0, -HALF_PI).unwrap();
        assert!(p.theta(0.0).abs() < 1e-15);

        let p = fig2();
        let thd = |t: f64| p.theta_dot(t);
        let integral = adaptive_simpson(&thd, 0.0, PI, 1e-13);
        // Half a breathing cycle advances the phase by exactly pi.
        assert!((integral - PI).abs() < 1e-10, "quadrature {integral}");
        assert!((p.theta(PI) - p.theta(0.0) - PI).abs() < 1e-10);
    }

    #[test]
    fn theta_matches_integrated_phase_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let p = random_params(&mut rng);
            let t = rng.gen_range(-7.0..7.0);
            let thd = |s: f64| p.theta_dot(s);
            let integral = adaptive_simpson(&thd, 0.0, t, 1e-13);
            assert!(
                (p.theta(t) - p.theta(0.0) - integral).abs() < 1e-9,
                "{p:?} t={t}"
            );
        }
    }

    #[test]
    fn theta_starts_on_principal_branch() {
        let p = OscillatorParams::new(0.7, 1.2, 0.3, -0.9).unwrap();
        let th0 = p.theta(0.0);
        assert!(th0 > -HALF_PI && th0 <= HALF_PI);
        // A cos(alpha) < 0: the branch follows Re phi, not the principal arctan.
        let p = OscillatorParams::new(0.7, 1.2, 2.5, 0.9).unwrap();
        let th0 = p.theta(0.0);
        assert_relative_eq!(
            p.rho(0.0) * th0.cos(),
            p.a() * p.alpha().cos(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn rho_dot_examples() {
        assert!(fig3().rho_dot(0.0).abs() < 1e-15);
        for t in [0.0, 0.4, 2.2] {
            assert!(fig1().rho_dot(t).abs() < 1e-15);
        }
        let p = fig2();
        let h = 1e-5;
        let t = 0.3;
        let fd = (p.rho(t + h) - p.rho(t - h)) / (2.0 * h);
        assert!((p.rho_dot(t) - fd).abs() < 1e-8);
    }

    #[test]
    fn conserved_examples() {
        let c = fig1().conserved();
        assert_relative_eq!(c.c0, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.c1, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.c2, 0.5, epsilon = 1e-15);

        let p = fig3();
        let c = p.conserved();
        assert_relative_eq!(c.c0, 0.4624, epsilon = 1e-15);
        // c1 = (A^2 + B^2) / 2 in this gauge.
        assert_relative_eq!(c.c1, 0.606_906_88, epsilon = 1e-12);
        assert_relative_eq!(c.c2, 0.2312, epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = rng.gen_range(-20.0..20.0);
            assert!((p.c1_at(t) - c.c1).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_nonpositive_c0() {
        assert!(OscillatorParams::new(1.0, 1.0, 0.3, 0.3).is_err());
        assert!(OscillatorParams::new(1.0, 1.0, 0.0, HALF_PI).is_err());
        assert!(OscillatorParams::new(-1.0, 1.0, 0.0, -HALF_PI).is_err());
        assert!(OscillatorParams::with_frequency(1.0, 1.0, 0.0, -HALF_PI, 0.0).is_err());
        assert!(OscillatorParams::new(f64::NAN, 1.0, 0.0, -HALF_PI).is_err());
    }

    #[test]
    fn center_orbit_examples() {
        let p = fig1();
        assert_relative_eq!(p.center_orbit(0.0, -5.0), -5.0, epsilon = 1e-14);
        assert!(p.center_orbit(HALF_PI, -5.0).abs() < 1e-14);
        assert_relative_eq!(p.center_orbit(PI, -5.0), 5.0, epsilon = 1e-14);
        for t in [0.0, 1.0, 2.5] {
            assert_eq!(p.center_orbit(t, 0.0), 0.0);
        }
        assert_relative_eq!(fig3().center_orbit(0.0, -17.437), -17.437, epsilon = 1e-12);
    }

    #[test]
    fn invariants_at_random_times() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..6 {
            let p = random_params(&mut rng);
            let c = p.conserved();
            let b0 = rng.gen_range(-5.0..5.0);
            for _ in 0..100 {
                let t = rng.gen_range(-30.0..30.0);
                let h = 1e-4;
                let fd = (-p.theta(t + 2.0 * h) + 8.0 * p.theta(t + h) - 8.0 * p.theta(t - h)
                    + p.theta(t - 2.0 * h))
                    / (12.0 * h);
                let r = p.rho(t);
                assert!(
                    (r * r * fd - c.c0).abs() < 1e-9 * c.c0.max(1.0),
                    "rho^2 theta'"
                );
                assert!((p.c1_at(t) - c.c1).abs() < 1e-9 * c.c1.max(1.0), "c1");
                assert!((p.rho(t + PI) - r).abs() < 1e-12 * r.max(1.0), "period");
                let re_phi = r * p.theta(t).cos();
                assert!((re_phi - p.phi(t).re).abs() < 1e-10, "Re phi");
                let xc = b0 / c.c0 * re_phi;
                assert!((xc - p.center_orbit(t, b0)).abs() < 1e-10 * (1.0 + xc.abs()));
            }
        }
    }

    #[test]
    fn c2_time_dependent_form_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..5 {
            let p = random_params(&mut rng);
            let c2 = p.conserved().c2;
            for _ in 0..20 {
                let t = rng.gen_range(-10.0..10.0);
                assert!((p.c2_at(t) - c2).abs() < 1e-9 * c2.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rho_range_and_width_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let (lo, hi) = p.rho_range();
            let sampled = (0..4000).map(|k| p.rho(k as f64 * PI / 4000.0));
            let (smin, smax) = sampled.fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
            assert!(smin >= lo - 1e-12 && smax <= hi + 1e-12);
            assert!((smin - lo).abs() < 1e-5 && (smax - hi).abs() < 1e-5);
            let c0 = p.c0();
            assert_relative_eq!(lo / c0.sqrt() * hi / c0.sqrt(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_gauge() {
        let p = fig3();
        let b0 = -17.437;
        for s in [0.5, 2.0, 10.0] {
            let q = p.scaled(s).unwrap();
            let (cp, cq) = (p.conserved(), q.conserved());
            assert_relative_eq!(cp.c1 / cp.c0, cq.c1 / cq.c0, max_relative = 1e-12);
            assert_relative_eq!(
                cp.c2 / cp.c0 * b0 * b0,
                cq.c2 / cq.c0 * (s * b0) * (s * b0),
                max_relative = 1e-12
            );
            for t in [0.0, 0.9, 2.0, 5.5] {
                assert!((p.center_orbit(t, b0) - q.center_orbit(t, s * b0)).abs() < 1e-12 * 20.0);
                assert!((p.theta(t) - q.theta(t)).abs() < 1e-12);
                assert!((p.rho(t) / cp.c0.sqrt() - q.rho(t) / cq.c0.sqrt()).abs() < 1e-12);
            }
        }
    }
}
