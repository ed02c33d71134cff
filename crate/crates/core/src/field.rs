//! Closed-form pairwise assembly of the n-slit field.
//!
//! ```text
//! P_tot = sum_i R_i^2 + sum_{i<j} 2 R_i R_j cos(phi_ij)
//! J_tot = sum_i R_i^2 v_i
//!       + sum_{i<j} R_i R_j [ (v_i + v_j) cos(phi_ij) + (u_i - u_j) sin(phi_ij) ]
//! ```
//!
//! with `phi_ij = (S_j - S_i) / hbar`, taken from products of phase carriers so
//! no absolute phase is ever unwrapped. This is the production path; the
//! channel machinery in [`crate::channels`] is its verification twin.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::channels::{FieldSample, NodalThreshold};
use crate::error::{Error, Result};
use crate::packet::{eval_packet, PacketEval, PacketSlice, PhysParams, SlitSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub t: f64,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, t: f64) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            n_points,
            t,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::validation("x_min < x_max"));
        }
        if self.n_points < 2 {
            return Err(Error::validation("n_points >= 2"));
        }
        if !(self.t >= 0.0) {
            return Err(Error::validation("t >= 0"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }
}

/// Set of open slits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlitMask {
    open: BTreeSet<usize>,
}

impl SlitMask {
    pub fn all(n_slits: usize) -> Self {
        Self {
            open: (0..n_slits).collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Self {
            open: indices.into_iter().collect(),
        }
    }

    /// Bit `i` set means slit `i` is open.
    pub fn from_bits(bits: u64) -> Self {
        Self::from_indices((0..64).filter(|i| bits >> i & 1 == 1))
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.open.contains(&index)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.open.iter().copied()
    }

    pub fn validate(&self, n_slits: usize) -> Result<()> {
        match self.open.iter().find(|&&i| i >= n_slits) {
            Some(&index) => Err(Error::SlitIndex { index, n_slits }),
            None => Ok(()),
        }
    }

    /// The open slits, in index order.
    pub fn select<'a>(&self, slits: &'a [SlitSpec]) -> Result<Vec<&'a SlitSpec>> {
        self.validate(slits.len())?;
        Ok(self.indices().map(|i| &slits[i]).collect())
    }
}

/// Evaluates every open packet at `(x, t)`.
pub fn eval_open(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    x: f64,
    t: f64,
) -> Result<Vec<PacketEval>> {
    mask.select(slits)?
        .into_iter()
        .map(|s| eval_packet(params, s, x, t))
        .collect()
}

fn check_common_point(evals: &[PacketEval]) -> Result<()> {
    match evals.first() {
        Some(first) if evals.iter().any(|e| e.x != first.x || e.t != first.t) => {
            Err(Error::MismatchedPoint)
        }
        _ => Ok(()),
    }
}

/// `(cos phi_ij, sin phi_ij)` with `phi_ij = (S_j - S_i) / hbar`.
#[inline]
fn relative_phase(a: &PacketEval, b: &PacketEval) -> (f64, f64) {
    let [ca, sa] = a.phase_carrier;
    let [cb, sb] = b.phase_carrier;
    (ca * cb + sa * sb, ca * sb - sa * cb)
}

/// n-slit intensity `sum_i R_i^2 + sum_{i<j} 2 R_i R_j cos(phi_ij)`.
pub fn intensity(evals: &[PacketEval]) -> Result<f64> {
    check_common_point(evals)?;
    Ok(totals(evals).0)
}

pub(crate) fn totals(evals: &[PacketEval]) -> (f64, f64) {
    let (mut p, mut j) = (0.0, 0.0);
    for (i, a) in evals.iter().enumerate() {
        let ra2 = a.amplitude * a.amplitude;
        p += ra2;
        j += ra2 * a.conv_velocity;
        for b in &evals[i + 1..] {
            let (cos, sin) = relative_phase(a, b);
            let rr = a.amplitude * b.amplitude;
            p += 2.0 * rr * cos;
            j += rr
                * ((a.conv_velocity + b.conv_velocity) * cos
                    + (a.diff_velocity - b.diff_velocity) * sin);
        }
    }
    (p, j)
}

/// Total intensity, current and velocity from the pairwise closed form.
pub fn pairwise_field(evals: &[PacketEval], threshold: &NodalThreshold) -> Result<FieldSample> {
    check_common_point(evals)?;
    let (p, j) = totals(evals);
    Ok(FieldSample::from_totals(p, j, threshold))
}

/// Pairwise intensity and current only; no nodal classification.
pub fn field_totals(evals: &[PacketEval]) -> Result<(f64, f64)> {
    check_common_point(evals)?;
    Ok(totals(evals))
}

/// Upper bound `(sum_j a_j (2 pi sigma_j(t)^2)^{-1/4})^2` on `P_tot(., t)`.
///
/// Used as the reference peak for nodal flagging where a whole-slice scan is
/// not available (single-point evaluations along trajectories).
pub fn envelope_peak(params: &PhysParams, slits: &[&SlitSpec], t: f64) -> Result<f64> {
    let mut sum = 0.0;
    for s in slits {
        let sigma = crate::packet::sigma_t(params, s, t)?;
        sum += s.weight * (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25);
    }
    Ok(sum * sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRow {
    pub x: f64,
    pub sample: FieldSample,
    /// `R_j` per configured slit; zero for closed slits.
    pub amplitudes: Vec<f64>,
}

/// Evaluates the field on a uniform grid. Nodal flags are relative to the
/// grid's maximum `P_tot`. An empty mask yields all-zero nodal rows.
pub fn field_grid(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    grid: &GridSpec,
    node_floor: f64,
) -> Result<Vec<FieldRow>> {
    grid.validate()?;
    mask.validate(slits.len())?;
    let open: Vec<usize> = mask.indices().collect();
    let slices = open
        .iter()
        .map(|&k| PacketSlice::new(params, &slits[k], grid.t))
        .collect::<Result<Vec<_>>>()?;

    let raw: Vec<(f64, f64, f64, Vec<f64>)> = (0..grid.n_points)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let evals: Vec<PacketEval> = slices.iter().map(|s| s.eval(x)).collect();
            let (p, j) = totals(&evals);
            let mut amplitudes = vec![0.0; slits.len()];
            for (&k, e) in open.iter().zip(&evals) {
                amplitudes[k] = e.amplitude;
            }
            (x, p, j, amplitudes)
        })
        .collect();

    let peak = raw.iter().map(|r| r.1).fold(0.0, f64::max);
    let threshold = NodalThreshold::new(node_floor, peak);
    Ok(raw
        .into_iter()
        .map(|(x, p, j, amplitudes)| FieldRow {
            x,
            sample: FieldSample::from_totals(p, j, &threshold),
            amplitudes,
        })
        .collect())
}

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dx * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}
