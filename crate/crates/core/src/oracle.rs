//! Standard quantum-mechanics reference built directly from complex amplitudes.
//!
//! Nothing here goes through the channel or pairwise machinery: the total
//! amplitude is `Psi = sum_j psi_j`, the density is `|Psi|^2` and the current is
//! `(hbar/m) Im(Psi* dPsi/dx)` with analytic per-packet derivatives. A
//! Crank-Nicolson propagator validates the analytic packets themselves.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::NodalThreshold;
use crate::error::{Error, Result};
use crate::field::{field_grid, GridSpec, SlitMask};
use crate::packet::{psi_and_gradient, PhysParams, SlitSpec};

/// Component amplitudes at one point and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition {
    pub psis: Vec<Complex64>,
    pub gradients: Vec<Complex64>,
    pub total: Complex64,
    pub total_gradient: Complex64,
}

pub fn superpose(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    x: f64,
    t: f64,
) -> Result<Superposition> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let open = mask.select(slits)?;
    let mut psis = Vec::with_capacity(open.len());
    let mut gradients = Vec::with_capacity(open.len());
    for s in open {
        let (v, g) = psi_and_gradient(params, s, x, t)?;
        psis.push(v);
        gradients.push(g);
    }
    Ok(Superposition {
        total: psis.iter().sum(),
        total_gradient: gradients.iter().sum(),
        psis,
        gradients,
    })
}

/// `(|Psi|^2, (hbar/m) Im(Psi* dPsi/dx))`.
pub fn qm_current(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    x: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let sup = superpose(params, slits, mask, x, t)?;
    let density = sup.total.norm_sqr();
    let current = params.hbar_over_mass() * (sup.total.conj() * sup.total_gradient).im;
    Ok((density, current))
}

/// de Broglie-Bohm velocity `J / P`.
pub fn bohm_velocity(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    x: f64,
    t: f64,
    threshold: &NodalThreshold,
) -> Result<f64> {
    let (p, j) = qm_current(params, slits, mask, x, t)?;
    if threshold.is_nodal(p) {
        return Err(Error::NodalPoint { x, t });
    }
    Ok(j / p)
}

/// Edge-to-peak density ratio above which [`fd_propagate`] reports a leak.
pub const LEAK_THRESHOLD: f64 = 1e-10;

/// Crank-Nicolson stepper for the free Schrodinger equation on a uniform grid
/// with `psi = 0` outside the grid.
///
/// The Laplacian is the compact fourth-order (Numerov) form
/// `(1 + delta^2/12)^{-1} delta^2 / dx^2`, which keeps both sides tridiagonal.
/// Both tridiagonal operators are polynomials in the same symmetric matrix, so
/// one step is exactly unitary.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    n: usize,
    rhs_diag: Complex64,
    rhs_off: Complex64,
    lhs_off: Complex64,
    // Thomas factorization of the constant left-hand operator.
    inv_pivot: Vec<Complex64>,
    upper: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(params: &PhysParams, dx: f64, n: usize, dt: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::validation("grid needs at least 3 points"));
        }
        if !(dx > 0.0 && dt > 0.0) {
            return Err(Error::validation("dx > 0 and dt > 0"));
        }
        let beta = Complex64::new(0.0, params.diffusion() * dt / (2.0 * dx * dx));
        let mass_diag = Complex64::new(10.0 / 12.0, 0.0);
        let mass_off = Complex64::new(1.0 / 12.0, 0.0);
        let lhs_diag = mass_diag + 2.0 * beta;
        let lhs_off = mass_off - beta;

        let mut inv_pivot = vec![Complex64::default(); n];
        let mut upper = vec![Complex64::default(); n];
        let mut pivot = lhs_diag;
        inv_pivot[0] = pivot.inv();
        upper[0] = lhs_off * inv_pivot[0];
        for i in 1..n {
            pivot = lhs_diag - lhs_off * upper[i - 1];
            inv_pivot[i] = pivot.inv();
            upper[i] = lhs_off * inv_pivot[i];
        }
        Ok(Self {
            n,
            rhs_diag: mass_diag - 2.0 * beta,
            rhs_off: mass_off + beta,
            lhs_off,
            inv_pivot,
            upper,
        })
    }

    /// Advances `psi` by one time step in place; `scratch` must have the grid length.
    pub fn step(&self, psi: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(psi.len(), n);
        // right-hand side, fused with forward elimination
        let rhs = |i: usize, psi: &[Complex64]| {
            let left = if i > 0 { psi[i - 1] } else { Complex64::default() };
            let right = if i + 1 < n { psi[i + 1] } else { Complex64::default() };
            self.rhs_diag * psi[i] + self.rhs_off * (left + right)
        };
        scratch[0] = rhs(0, psi) * self.inv_pivot[0];
        for i in 1..n {
            scratch[i] = (rhs(i, psi) - self.lhs_off * scratch[i - 1]) * self.inv_pivot[i];
        }
        psi[n - 1] = scratch[n - 1];
        for i in (0..n - 1).rev() {
            psi[i] = scratch[i] - self.upper[i] * psi[i + 1];
        }
    }
}

/// Propagates `initial` (sampled with spacing `dx`) to `t_end` in `n_steps`
/// Crank-Nicolson steps. Requires `dt <= dx^2 m / hbar`; fails with
/// [`Error::BoundaryLeak`] if the edge density ever exceeds
/// [`LEAK_THRESHOLD`] times the current peak density.
pub fn fd_propagate(
    params: &PhysParams,
    initial: &[Complex64],
    dx: f64,
    t_end: f64,
    n_steps: usize,
) -> Result<Vec<Complex64>> {
    if n_steps == 0 {
        return Err(Error::validation("n_steps >= 1"));
    }
    if t_end < 0.0 {
        return Err(Error::NegativeTime(t_end));
    }
    let dt = t_end / n_steps as f64;
    if dt > dx * dx * params.mass() / params.hbar() {
        return Err(Error::validation("dt <= dx^2 m / hbar"));
    }
    let mut psi = initial.to_vec();
    if t_end == 0.0 {
        return Ok(psi);
    }
    let cn = CrankNicolson::new(params, dx, psi.len(), dt)?;
    let mut scratch = vec![Complex64::default(); psi.len()];
    check_leak(&psi, 0)?;
    for step in 1..=n_steps {
        cn.step(&mut psi, &mut scratch);
        check_leak(&psi, step)?;
    }
    Ok(psi)
}

fn check_leak(psi: &[Complex64], step: usize) -> Result<()> {
    let peak = psi.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let edge = psi[0].norm_sqr().max(psi[psi.len() - 1].norm_sqr());
    if edge > LEAK_THRESHOLD * peak {
        Err(Error::BoundaryLeak {
            step,
            ratio: edge / peak,
        })
    } else {
        Ok(())
    }
}

/// Grid-wide agreement between the pairwise field and the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub max_abs_dev_p: f64,
    pub max_abs_dev_j: f64,
    /// Pointwise `|v_field - v_bohm| / max(|v_field|, |v_bohm|)` over non-nodal points.
    pub max_rel_dev_v: f64,
    pub peak_p: f64,
    pub peak_j: f64,
    pub n_nodal: usize,
    pub grid: GridSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub t: f64,
}

impl From<GridSpec> for GridSummary {
    fn from(g: GridSpec) -> Self {
        Self {
            x_min: g.x_min,
            x_max: g.x_max,
            n_points: g.n_points,
            t: g.t,
        }
    }
}

impl EquivalenceReport {
    /// `P` and `J` within `tol` of their slice peaks and `v` within `tol` relative.
    pub fn within(&self, tol: f64) -> bool {
        self.max_abs_dev_p <= tol * self.peak_p
            && self.max_abs_dev_j <= tol * self.peak_j
            && self.max_rel_dev_v <= tol
    }
}

pub(crate) fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares [`field_grid`] against [`qm_current`] and [`bohm_velocity`] on a grid.
pub fn equivalence_report(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    grid: &GridSpec,
    node_floor: f64,
) -> Result<EquivalenceReport> {
    let rows = field_grid(params, slits, mask, grid, node_floor)?;
    let oracle: Vec<(f64, f64)> = rows
        .par_iter()
        .map(|r| qm_current(params, slits, mask, r.x, grid.t))
        .collect::<Result<_>>()?;

    let peak_p = oracle.iter().map(|o| o.0).fold(0.0, f64::max);
    let peak_j = oracle.iter().map(|o| o.1.abs()).fold(0.0, f64::max);
    let threshold = NodalThreshold::new(node_floor, peak_p);
    let mut report = EquivalenceReport {
        max_abs_dev_p: 0.0,
        max_abs_dev_j: 0.0,
        max_rel_dev_v: 0.0,
        peak_p,
        peak_j,
        n_nodal: 0,
        grid: (*grid).into(),
    };
    for (row, &(p, j)) in rows.iter().zip(&oracle) {
        report.max_abs_dev_p = report.max_abs_dev_p.max((row.sample.p_tot - p).abs());
        report.max_abs_dev_j = report.max_abs_dev_j.max((row.sample.j_tot - j).abs());
        match row.sample.v_tot {
            Some(v) if !threshold.is_nodal(p) => {
                report.max_rel_dev_v = report.max_rel_dev_v.max(relative_deviation(v, j / p));
            }
            _ => report.n_nodal += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{eval_open, pairwise_field};
    use crate::packet::{eval_packet, psi};
    use approx::assert_relative_eq;

    fn two_slit() -> Vec<SlitSpec> {
        vec![SlitSpec::new(-3.0, 1.0), SlitSpec::new(3.0, 1.0)]
    }

    #[test]
    fn real_gaussian_carries_no_current() {
        let p = PhysParams::default();
        let s = [SlitSpec::new(0.5, 0.8)];
        for i in 0..20 {
            let (_, j) = qm_current(&p, &s, &SlitMask::all(1), -3.0 + 0.3 * i as f64, 0.0).unwrap();
            assert_eq!(j, 0.0);
        }
    }

    #[test]
    fn drifting_packet_centre_moves_at_drift() {
        let p = PhysParams::default();
        let s = [SlitSpec::new(0.5, 0.8).with_drift(1.3)];
        let t = 0.9;
        let (dens, j) = qm_current(&p, &s, &SlitMask::all(1), s[0].mean_position(t), t).unwrap();
        assert_relative_eq!(j / dens, 1.3, max_relative = 1e-14);
    }

    #[test]
    fn single_slit_bohm_velocity_is_convective() {
        let p = PhysParams::new(0.8, 1.4).unwrap();
        let s = [SlitSpec::new(0.2, 0.6).with_drift(-0.4)];
        let thr = NodalThreshold::new(1e-12, 1.0);
        for i in 0..15 {
            let (x, t) = (-2.0 + 0.3 * i as f64, 0.1 + 0.2 * i as f64);
            let v = bohm_velocity(&p, &s, &SlitMask::all(1), x, t, &thr).unwrap();
            let e = eval_packet(&p, &s[0], x, t).unwrap();
            assert_relative_eq!(v, e.conv_velocity, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn symmetric_two_slit_centre_velocity_vanishes() {
        let p = PhysParams::default();
        let thr = NodalThreshold::new(1e-12, 1.0);
        let v = bohm_velocity(&p, &two_slit(), &SlitMask::all(2), 0.0, 2.0, &thr).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn nodal_point_is_error() {
        let p = PhysParams::default();
        let s = [
            SlitSpec::new(-1.0, 1.0),
            SlitSpec::new(1.0, 1.0).with_phase0(std::f64::consts::PI),
        ];
        let thr = NodalThreshold::new(1e-12, 1.0);
        assert!(matches!(
            bohm_velocity(&p, &s, &SlitMask::all(2), 0.0, 0.0, &thr),
            Err(Error::NodalPoint { .. })
        ));
    }

    #[test]
    fn random_points_match_field_velocity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = PhysParams::default();
        let slits = vec![
            SlitSpec::new(-2.1, 0.9).with_drift(0.3).with_weight(1.2),
            SlitSpec::new(2.4, 1.1).with_drift(-0.2).with_phase0(0.4),
        ];
        let mask = SlitMask::all(2);
        let thr = NodalThreshold::new(1e-12, 1.0);
        for _ in 0..100 {
            let x = rng.gen_range(-6.0..6.0);
            let t = rng.gen_range(0.0..3.0);
            let evals = eval_open(&p, &slits, &mask, x, t).unwrap();
            let f = pairwise_field(&evals, &thr).unwrap();
            let v = bohm_velocity(&p, &slits, &mask, x, t, &thr).unwrap();
            assert!(relative_deviation(f.v_tot.unwrap(), v) <= 1e-10, "x={x} t={t}");
        }
    }

    #[test]
    fn continuity_equation_holds() {
        let p = PhysParams::default();
        let slits = vec![SlitSpec::new(-1.5, 0.8).with_drift(0.2), SlitSpec::new(1.5, 0.8)];
        let mask = SlitMask::all(2);
        let h = 1e-3;
        for i in 0..40 {
            let (x, t) = (-4.0 + 0.2 * i as f64, 1.2);
            let pt = (qm_current(&p, &slits, &mask, x, t + h).unwrap().0
                - qm_current(&p, &slits, &mask, x, t - h).unwrap().0)
                / (2.0 * h);
            let jx = (qm_current(&p, &slits, &mask, x + h, t).unwrap().1
                - qm_current(&p, &slits, &mask, x - h, t).unwrap().1)
                / (2.0 * h);
            assert!((pt + jx).abs() < 1e-4, "x={x}: {}", pt + jx);
        }
    }

    #[test]
    fn zero_profile_stays_zero() {
        let p = PhysParams::default();
        let out = fd_propagate(&p, &vec![Complex64::default(); 64], 0.1, 0.1, 20).unwrap();
        assert!(out.iter().all(|z| *z == Complex64::default()));
    }

    #[test]
    fn step_size_precondition() {
        let p = PhysParams::default();
        assert!(fd_propagate(&p, &vec![Complex64::default(); 64], 0.1, 1.0, 10).is_err());
    }

    #[test]
    fn leak_detected() {
        let p = PhysParams::default();
        let n = 201;
        let dx = 0.05;
        let s = SlitSpec::new(0.0, 0.5);
        let init: Vec<_> = (0..n)
            .map(|i| psi(&p, &s, -5.0 + i as f64 * dx, 0.0).unwrap())
            .collect();
        let res = fd_propagate(&p, &init, dx, 6.0, 3000);
        assert!(matches!(res, Err(Error::BoundaryLeak { .. })), "{res:?}");
    }

    #[test]
    fn short_propagation_is_unitary_and_accurate() {
        let p = PhysParams::default();
        let s = SlitSpec::new(0.0, 1.0).with_drift(0.5);
        let n = 1024;
        let dx = 24.0 / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -12.0 + i as f64 * dx).collect();
        let init: Vec<_> = xs.iter().map(|&x| psi(&p, &s, x, 0.0).unwrap()).collect();
        let out = fd_propagate(&p, &init, dx, 0.5, 1000).unwrap();
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert_relative_eq!(norm(&out), norm(&init), max_relative = 1e-12);
        let err = xs
            .iter()
            .zip(&out)
            .map(|(&x, z)| (z - psi(&p, &s, x, 0.5).unwrap()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }
}
