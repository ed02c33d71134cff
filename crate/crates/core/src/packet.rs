//! Free Gaussian beam emitted by a single slit.
//!
//! Each slit carries an analytic free-particle Gaussian packet
//! `psi_j = R_j exp(i S_j / hbar)`. The position spread of `|psi_j|^2` starts
//! at `sigma0` and grows as `sigma(t) = sigma0 sqrt(1 + (D t / sigma0^2)^2)`
//! with `D = hbar / (2 m)`.
//!
//! [`eval_packet`] returns the real Madelung quantities (amplitude, phase
//! carrier, convective and diffusive velocity) in closed form. [`psi`] returns
//! the complex wavefunction through an independent complex-arithmetic route;
//! the two are cross-checked in tests.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Physical constants. The diffusion constant is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    hbar: f64,
    mass: f64,
}

impl PhysParams {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::validation("hbar > 0"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::validation("mass > 0"));
        }
        Ok(Self { hbar, mass })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `D = hbar / (2 m)`.
    pub fn diffusion(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }

    /// `hbar / m`, the factor relating phase and log-amplitude gradients to velocities.
    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.mass
    }
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

/// One slit: a Gaussian beam centred at `center` with initial spread `sigma0`
/// (standard deviation of `|psi|^2`), transverse group velocity `drift`,
/// amplitude scale `weight` and constant phase offset `phase0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitSpec {
    pub center: f64,
    pub sigma0: f64,
    pub drift: f64,
    pub weight: f64,
    pub phase0: f64,
}

impl SlitSpec {
    pub fn new(center: f64, sigma0: f64) -> Self {
        Self {
            center,
            sigma0,
            drift: 0.0,
            weight: 1.0,
            phase0: 0.0,
        }
    }

    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_phase0(mut self, phase0: f64) -> Self {
        self.phase0 = phase0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::validation("sigma0 > 0"));
        }
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(Error::validation("weight >= 0"));
        }
        if !(self.center.is_finite() && self.drift.is_finite() && self.phase0.is_finite()) {
            return Err(Error::validation("center, drift and phase0 must be finite"));
        }
        Ok(())
    }

    /// Position of the packet centre at time `t`.
    pub fn mean_position(&self, t: f64) -> f64 {
        self.center + self.drift * t
    }
}

/// Pointwise evaluation of one packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketEval {
    pub x: f64,
    pub t: f64,
    /// `R_j`, including the slit weight.
    pub amplitude: f64,
    /// `(cos(S_j/hbar), sin(S_j/hbar))`.
    pub phase_carrier: [f64; 2],
    /// `v_j = dS_j/dx / m`.
    pub conv_velocity: f64,
    /// `u_j = -(hbar/m) dR_j/dx / R_j`.
    pub diff_velocity: f64,
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// Dimensionless spreading parameter `D t / sigma0^2`.
fn spread(params: &PhysParams, slit: &SlitSpec, t: f64) -> f64 {
    params.diffusion() * t / (slit.sigma0 * slit.sigma0)
}

/// `sigma(t) = sigma0 sqrt(1 + (D t / sigma0^2)^2)`.
pub fn sigma_t(params: &PhysParams, slit: &SlitSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    let alpha = spread(params, slit, t);
    Ok(slit.sigma0 * alpha.hypot(1.0))
}

/// Time-dependent diffusivity `D_t = D^2 t / sigma0^2`.
pub fn ballistic_diffusivity(params: &PhysParams, slit: &SlitSpec, t: f64) -> f64 {
    let d = params.diffusion();
    d * d * t / (slit.sigma0 * slit.sigma0)
}

/// One packet frozen at a fixed time: everything in [`eval_packet`] that does
/// not depend on `x`, so repeated evaluations along a time slice only pay for
/// one `exp` and one `sin_cos`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSlice {
    t: f64,
    center: f64,
    mean: f64,
    drift: f64,
    norm: f64,
    inv_four_var: f64,
    phase_offset: f64,
    wavenumber: f64,
    curvature: f64,
    conv_gain: f64,
    diff_gain: f64,
}

impl PacketSlice {
    pub fn new(params: &PhysParams, slit: &SlitSpec, t: f64) -> Result<Self> {
        let sigma = sigma_t(params, slit, t)?;
        let var = sigma * sigma;
        let s0sq = slit.sigma0 * slit.sigma0;
        let k = params.mass() * slit.drift / params.hbar();
        Ok(Self {
            t,
            center: slit.center,
            mean: slit.mean_position(t),
            drift: slit.drift,
            norm: slit.weight * (2.0 * PI * var).powf(-0.25),
            inv_four_var: 1.0 / (4.0 * var),
            phase_offset: -0.5 * k * slit.drift * t + slit.phase0
                - 0.5 * spread(params, slit, t).atan(),
            wavenumber: k,
            curvature: params.diffusion() * t / (4.0 * s0sq * var),
            conv_gain: ballistic_diffusivity(params, slit, t) / var,
            diff_gain: params.hbar_over_mass() / (2.0 * var),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn eval(&self, x: f64) -> PacketEval {
        let xi = x - self.mean;
        let xi2 = xi * xi;
        let theta = self.wavenumber * (x - self.center) + self.phase_offset + xi2 * self.curvature;
        let (sin, cos) = theta.sin_cos();
        PacketEval {
            x,
            t: self.t,
            amplitude: self.norm * (-xi2 * self.inv_four_var).exp(),
            phase_carrier: [cos, sin],
            conv_velocity: self.drift + xi * self.conv_gain,
            diff_velocity: xi * self.diff_gain,
        }
    }
}

/// Real Madelung decomposition of the packet at `(x, t)`:
/// `R = a (2 pi sigma^2)^{-1/4} exp(-xi^2 / (4 sigma^2))`,
/// `v = v_d + xi D_t / sigma^2`, `u = (hbar/m) xi / (2 sigma^2)` with
/// `xi = x - x_c - v_d t`.
pub fn eval_packet(params: &PhysParams, slit: &SlitSpec, x: f64, t: f64) -> Result<PacketEval> {
    Ok(PacketSlice::new(params, slit, t)?.eval(x))
}

/// Complex wavefunction `psi_j(x, t)` and its spatial derivative.
pub fn psi_and_gradient(
    params: &PhysParams,
    slit: &SlitSpec,
    x: f64,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    check_time(t)?;
    let s0sq = slit.sigma0 * slit.sigma0;
    let width = Complex64::new(1.0, spread(params, slit, t));
    let xi = x - slit.mean_position(t);
    let k = params.mass() * slit.drift / params.hbar();

    let exponent = Complex64::new(0.0, k * (x - slit.center) - 0.5 * k * slit.drift * t + slit.phase0)
        - xi * xi / (4.0 * s0sq * width);
    let norm = slit.weight * (2.0 * PI * s0sq).powf(-0.25);
    let value = norm * exponent.exp() / width.sqrt();
    let log_gradient = -xi / (2.0 * s0sq * width) + Complex64::new(0.0, k);
    Ok((value, value * log_gradient))
}

/// Complex wavefunction `psi_j(x, t)`.
pub fn psi(params: &PhysParams, slit: &SlitSpec, x: f64, t: f64) -> Result<Complex64> {
    psi_and_gradient(params, slit, x, t).map(|(v, _)| v)
}

/// Single-packet ballistic-diffusion velocity
/// `v_d + (x - x_c - v_d t) D_t / sigma(t)^2`.
pub fn ballistic_velocity(params: &PhysParams, slit: &SlitSpec, x: f64, t: f64) -> Result<f64> {
    let sigma = sigma_t(params, slit, t)?;
    let rel = x - slit.mean_position(t);
    Ok(slit.drift + rel * ballistic_diffusivity(params, slit, t) / (sigma * sigma))
}

/// Closed-form streamline of [`ballistic_velocity`] started at `x0` at `t = 0`.
pub fn ballistic_position(params: &PhysParams, slit: &SlitSpec, x0: f64, t: f64) -> Result<f64> {
    let sigma = sigma_t(params, slit, t)?;
    Ok(slit.mean_position(t) + (x0 - slit.center) * sigma / slit.sigma0)
}
