//! Generalized velocity channels and the amplitude-weighted projection rule.
//!
//! Every open slit `j` contributes three channels: its convective velocity
//! `v_j` and a right/left pair of diffusive velocities whose difference is
//! `u_j`. Each channel carries a planar unit orientation and the slit
//! amplitude `R_j`. The weight of channel `i` is its projection onto the
//! total amplitude vector,
//!
//! ```text
//! P(w_i) = R_i w_i_hat . sum_j w_j_hat R_j,      J(w_i) = w_i P(w_i)
//! ```
//!
//! and the totals are `P_tot = sum P(w_i)`, `J_tot = sum J(w_i)`,
//! `v_tot = J_tot / P_tot`.
//!
//! The convective orientation is the phase carrier `(cos S_j/hbar, sin S_j/hbar)`.
//! The right diffusive orientation is that vector rotated by `+pi/2`, the left
//! one by `-pi/2`. With `u = -(hbar/m) grad R / R` this is the orientation for
//! which the assembled current equals `(hbar/m) Im(Psi* dPsi/dx)`.

use crate::error::{Error, Result};
use crate::packet::PacketEval;

/// Relative nodal threshold used when nothing else is configured.
pub const DEFAULT_NODE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Convective,
    DiffusiveRight,
    DiffusiveLeft,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub kind: ChannelKind,
    pub slit_index: usize,
    pub orientation: [f64; 2],
    pub physical_velocity: f64,
    pub amplitude: f64,
}

/// The `3n` channels at one evaluation point, ordered
/// `(v_1, u_1R, u_1L, v_2, u_2R, u_2L, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    channels: Vec<Channel>,
    x: f64,
    t: f64,
}

/// Nodal-point threshold: a sample is nodal when `P_tot <= node_floor * reference_peak`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalThreshold {
    pub node_floor: f64,
    pub reference_peak: f64,
}

impl NodalThreshold {
    pub fn new(node_floor: f64, reference_peak: f64) -> Self {
        Self {
            node_floor,
            reference_peak,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.node_floor * self.reference_peak
    }

    pub fn is_nodal(&self, p_tot: f64) -> bool {
        !(p_tot > self.cutoff())
    }
}

/// Total intensity, current and emergent velocity at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub p_tot: f64,
    pub j_tot: f64,
    /// `None` at nodal points.
    pub v_tot: Option<f64>,
    pub nodal: bool,
}

impl FieldSample {
    pub(crate) fn from_totals(p_tot: f64, j_tot: f64, threshold: &NodalThreshold) -> Self {
        let nodal = threshold.is_nodal(p_tot);
        Self {
            p_tot,
            j_tot,
            v_tot: if nodal { None } else { Some(j_tot / p_tot) },
            nodal,
        }
    }

    pub fn zero() -> Self {
        Self {
            p_tot: 0.0,
            j_tot: 0.0,
            v_tot: None,
            nodal: true,
        }
    }
}

fn rotate_quarter(v: [f64; 2], positive: bool) -> [f64; 2] {
    if positive {
        [-v[1], v[0]]
    } else {
        [v[1], -v[0]]
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn check_point(evals: &[PacketEval], x: f64, t: f64) -> Result<()> {
    if evals.iter().all(|e| e.x == x && e.t == t) {
        Ok(())
    } else {
        Err(Error::MismatchedPoint)
    }
}

/// Emits the convective and right/left diffusive channels for every packet.
///
/// Exactly one of `u_jR`, `u_jL` is nonzero (both vanish when `u_j = 0`) and
/// `u_jR - u_jL = u_j`.
pub fn build_channels(evals: &[PacketEval], x: f64, t: f64) -> Result<ChannelSet> {
    check_point(evals, x, t)?;
    let mut channels = Vec::with_capacity(3 * evals.len());
    for (slit_index, e) in evals.iter().enumerate() {
        let conv = e.phase_carrier;
        channels.push(Channel {
            kind: ChannelKind::Convective,
            slit_index,
            orientation: conv,
            physical_velocity: e.conv_velocity,
            amplitude: e.amplitude,
        });
        channels.push(Channel {
            kind: ChannelKind::DiffusiveRight,
            slit_index,
            orientation: rotate_quarter(conv, true),
            physical_velocity: e.diff_velocity.max(0.0),
            amplitude: e.amplitude,
        });
        channels.push(Channel {
            kind: ChannelKind::DiffusiveLeft,
            slit_index,
            orientation: rotate_quarter(conv, false),
            physical_velocity: (-e.diff_velocity).max(0.0),
            amplitude: e.amplitude,
        });
    }
    Ok(ChannelSet { channels, x, t })
}

impl ChannelSet {
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn point(&self) -> (f64, f64) {
        (self.x, self.t)
    }

    pub fn n_slits(&self) -> usize {
        self.channels.len() / 3
    }

    /// Replaces the diffusive split of one slit by an arbitrary `(right, left)` pair.
    /// Only the difference `right - left` enters the assembled field.
    pub fn set_diffusive_split(&mut self, slit: usize, right: f64, left: f64) -> Result<()> {
        let n_slits = self.n_slits();
        if slit >= n_slits {
            return Err(Error::SlitIndex {
                index: slit,
                n_slits,
            });
        }
        self.channels[3 * slit + 1].physical_velocity = right;
        self.channels[3 * slit + 2].physical_velocity = left;
        Ok(())
    }

    /// `sum_j w_j_hat R(w_j)` in fixed channel order.
    pub fn amplitude_vector(&self) -> [f64; 2] {
        self.channels.iter().fold([0.0, 0.0], |acc, c| {
            [
                acc[0] + c.orientation[0] * c.amplitude,
                acc[1] + c.orientation[1] * c.amplitude,
            ]
        })
    }

    fn check_index(&self, i: usize) -> Result<&Channel> {
        self.channels.get(i).ok_or(Error::ChannelIndex {
            index: i,
            len: self.channels.len(),
        })
    }
}

/// Signed conditional weight `P(w_i)`. May be negative.
pub fn project(set: &ChannelSet, i: usize) -> Result<f64> {
    let c = set.check_index(i)?;
    Ok(c.amplitude * dot(c.orientation, set.amplitude_vector()))
}

/// Partial current `J(w_i) = w_i P(w_i)`.
pub fn channel_current(set: &ChannelSet, i: usize) -> Result<f64> {
    let c = set.check_index(i)?;
    Ok(c.physical_velocity * project(set, i)?)
}

/// Sums all channel weights and currents into the total field.
pub fn assemble(set: &ChannelSet, threshold: &NodalThreshold) -> FieldSample {
    let total = set.amplitude_vector();
    let (mut p_tot, mut j_tot) = (0.0, 0.0);
    for c in &set.channels {
        let weight = c.amplitude * dot(c.orientation, total);
        p_tot += weight;
        j_tot += c.physical_velocity * weight;
    }
    FieldSample::from_totals(p_tot, j_tot, threshold)
}
