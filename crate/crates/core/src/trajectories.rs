//! Streamlines of the emergent velocity field and Born-rule ensembles.
//!
//! Starting points are drawn from `P_tot(., t0)` by inverse-CDF sampling and
//! transported along `dx/dt = v_tot(x, t)` with fixed-step RK4. Equivariance
//! means the endpoint histogram reproduces `P_tot(., t1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::NodalThreshold;
use crate::error::{Error, Result};
use crate::field::{envelope_peak, totals, SlitMask};
use crate::packet::{sigma_t, PacketEval, PacketSlice, PhysParams, SlitSpec};

/// Points in the tabulated density used for inverse-CDF sampling.
pub const SAMPLING_GRID_POINTS: usize = 8192;
/// Half-width of the sampling window, in units of the widest `sigma(t)`.
pub const WINDOW_SIGMAS: f64 = 10.0;
/// Ordering violations larger than this count as trajectory crossings.
pub const CROSSING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Completed,
    NodalAbort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, x)` with strictly increasing `t`.
    pub samples: Vec<(f64, f64)>,
    pub terminated: Termination,
}

impl Trajectory {
    pub fn endpoint(&self) -> Option<f64> {
        match self.terminated {
            Termination::Completed => self.samples.last().map(|s| s.1),
            Termination::NodalAbort => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_trajectories: usize,
    pub n_aborted: usize,
    pub seed: u64,
    /// Adjacent-pair ordering violations summed over all steps.
    pub crossing_violations: usize,
    /// Endpoint per trajectory index; `None` for aborted ones.
    #[serde(skip)]
    pub endpoints: Vec<Option<f64>>,
}

impl EnsembleResult {
    /// Histogram normalized to unit total mass.
    pub fn probabilities(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        self.counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.probabilities()
            .iter()
            .zip(self.edges.windows(2))
            .map(|(p, e)| p / (e[1] - e[0]))
            .collect()
    }
}

/// The emergent velocity field of a fixed set of open slits.
#[derive(Debug, Clone)]
pub struct VelocityField {
    params: PhysParams,
    open: Vec<SlitSpec>,
    node_floor: f64,
}

/// [`VelocityField`] frozen at one time.
#[derive(Debug, Clone)]
pub struct VelocitySlice {
    slices: Vec<PacketSlice>,
    threshold: NodalThreshold,
}

impl VelocitySlice {
    /// `v_tot(x)`, or `None` at a nodal point.
    pub fn velocity(&self, x: f64) -> Option<f64> {
        let mut buf = [PacketEval {
            x,
            t: 0.0,
            amplitude: 0.0,
            phase_carrier: [1.0, 0.0],
            conv_velocity: 0.0,
            diff_velocity: 0.0,
        }; 8];
        let (p, j) = if self.slices.len() <= buf.len() {
            for (b, s) in buf.iter_mut().zip(&self.slices) {
                *b = s.eval(x);
            }
            totals(&buf[..self.slices.len()])
        } else {
            let evals: Vec<_> = self.slices.iter().map(|s| s.eval(x)).collect();
            totals(&evals)
        };
        if self.threshold.is_nodal(p) {
            None
        } else {
            Some(j / p)
        }
    }

    pub fn intensity(&self, x: f64) -> f64 {
        let evals: Vec<_> = self.slices.iter().map(|s| s.eval(x)).collect();
        totals(&evals).0
    }
}

impl VelocityField {
    pub fn new(
        params: &PhysParams,
        slits: &[SlitSpec],
        mask: &SlitMask,
        node_floor: f64,
    ) -> Result<Self> {
        let open = mask.select(slits)?.into_iter().copied().collect();
        Ok(Self {
            params: *params,
            open,
            node_floor,
        })
    }

    /// Freezes the field at `t`. Nodal points are judged against the
    /// envelope bound of `P_tot(., t)` from [`envelope_peak`].
    pub fn at(&self, t: f64) -> Result<VelocitySlice> {
        let slices = self
            .open
            .iter()
            .map(|s| PacketSlice::new(&self.params, s, t))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&SlitSpec> = self.open.iter().collect();
        let peak = envelope_peak(&self.params, &refs, t)?;
        Ok(VelocitySlice {
            slices,
            threshold: NodalThreshold::new(self.node_floor, peak),
        })
    }

    /// Window `[min(mean - 10 sigma), max(mean + 10 sigma)]` over the open packets.
    pub fn window(&self, t: f64) -> Result<(f64, f64)> {
        if self.open.is_empty() {
            return Err(Error::DegenerateDensity(0.0));
        }
        let sigma_max = self
            .open
            .iter()
            .map(|s| sigma_t(&self.params, s, t))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let means = self.open.iter().map(|s| s.mean_position(t));
        let lo = means.clone().fold(f64::INFINITY, f64::min);
        let hi = means.fold(f64::NEG_INFINITY, f64::max);
        Ok((lo - WINDOW_SIGMAS * sigma_max, hi + WINDOW_SIGMAS * sigma_max))
    }
}

struct StepSlices {
    start: VelocitySlice,
    mid: VelocitySlice,
    end: VelocitySlice,
}

impl StepSlices {
    fn new(field: &VelocityField, t: f64, h: f64) -> Result<Self> {
        Ok(Self {
            start: field.at(t)?,
            mid: field.at(t + 0.5 * h)?,
            end: field.at(t + h)?,
        })
    }

    /// One classic RK4 step; `None` if any stage hits a nodal point.
    #[inline]
    fn rk4(&self, x: f64, h: f64) -> Option<f64> {
        let k1 = self.start.velocity(x)?;
        let k2 = self.mid.velocity(x + 0.5 * h * k1)?;
        let k3 = self.mid.velocity(x + 0.5 * h * k2)?;
        let k4 = self.end.velocity(x + h * k3)?;
        Some(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }
}

fn step_count(t0: f64, t1: f64, dt: f64) -> Result<usize> {
    if t0 < 0.0 {
        return Err(Error::NegativeTime(t0));
    }
    if !(t1 > t0) {
        return Err(Error::validation("t1 > t0"));
    }
    if !(dt > 0.0) {
        return Err(Error::validation("dt > 0"));
    }
    Ok(((t1 - t0) / dt).round().max(1.0) as usize)
}

fn step_time(t0: f64, t1: f64, n_steps: usize, k: usize) -> f64 {
    if k == n_steps {
        t1
    } else {
        t0 + (t1 - t0) * k as f64 / n_steps as f64
    }
}

/// Default step: `(t1 - t0) / 2000`.
pub fn default_dt(t0: f64, t1: f64) -> f64 {
    (t1 - t0) / 2000.0
}

/// Tabulated `P_tot(., t0)` and its cumulative trapezoid integral.
struct Cdf {
    x0: f64,
    dx: f64,
    cumulative: Vec<f64>,
}

impl Cdf {
    fn new(field: &VelocityField, t: f64) -> Result<Self> {
        let (lo, hi) = field.window(t)?;
        let slice = field.at(t)?;
        let n = SAMPLING_GRID_POINTS;
        let dx = (hi - lo) / (n - 1) as f64;
        let density: Vec<f64> = (0..n)
            .map(|i| slice.intensity(lo + i as f64 * dx).max(0.0))
            .collect();
        let mut cumulative = Vec::with_capacity(n);
        cumulative.push(0.0);
        for i in 1..n {
            cumulative.push(cumulative[i - 1] + 0.5 * dx * (density[i - 1] + density[i]));
        }
        let total = cumulative[n - 1];
        if !(total >= 1e-300) {
            return Err(Error::DegenerateDensity(total));
        }
        Ok(Self { x0: lo, dx, cumulative })
    }

    fn invert(&self, u: f64) -> f64 {
        let target = u * self.cumulative[self.cumulative.len() - 1];
        let k = self
            .cumulative
            .partition_point(|&c| c <= target)
            .clamp(1, self.cumulative.len() - 1);
        let (c0, c1) = (self.cumulative[k - 1], self.cumulative[k]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        self.x0 + (k - 1) as f64 * self.dx + frac * self.dx
    }
}

/// Uniform deviate for trajectory `index`, from its own ChaCha stream.
fn substream_uniform(seed: u64, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.gen::<f64>()
}

/// Draws `n` starting positions from `P_tot(., t0)`.
pub fn sample_initial(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    t0: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::validation("n >= 1"));
    }
    let field = VelocityField::new(params, slits, mask, 0.0)?;
    let cdf = Cdf::new(&field, t0)?;
    Ok((0..n)
        .map(|i| cdf.invert(substream_uniform(seed, i)))
        .collect())
}

/// Integrates one streamline from `(x0, t0)` to `t1`.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    x0: f64,
    t0: f64,
    t1: f64,
    dt: f64,
    node_floor: f64,
) -> Result<Trajectory> {
    let n_steps = step_count(t0, t1, dt)?;
    let field = VelocityField::new(params, slits, mask, node_floor)?;
    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push((t0, x0));
    let mut x = x0;
    for k in 0..n_steps {
        let (ta, tb) = (step_time(t0, t1, n_steps, k), step_time(t0, t1, n_steps, k + 1));
        let h = tb - ta;
        match StepSlices::new(&field, ta, h)?.rk4(x, h) {
            Some(next) => x = next,
            None => {
                return Ok(Trajectory {
                    samples,
                    terminated: Termination::NodalAbort,
                })
            }
        }
        samples.push((tb, x));
    }
    Ok(Trajectory {
        samples,
        terminated: Termination::Completed,
    })
}

/// Options for [`ensemble_with_paths`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
    pub dt: f64,
    pub bins: usize,
    pub seed: u64,
    pub node_floor: f64,
}

/// Transports `n` sampled trajectories and histograms their endpoints.
#[allow(clippy::too_many_arguments)]
pub fn ensemble(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    t0: f64,
    t1: f64,
    n: usize,
    dt: f64,
    bins: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    let spec = EnsembleSpec {
        t0,
        t1,
        n,
        dt,
        bins,
        seed,
        node_floor: crate::channels::DEFAULT_NODE_FLOOR,
    };
    ensemble_with_paths(params, slits, mask, &spec, None).map(|(r, _)| r)
}

/// As [`ensemble`], optionally recording every `stride`-th step (plus the
/// final one) of every trajectory.
///
/// All trajectories advance in lockstep so the per-time packet constants are
/// shared; each trajectory's arithmetic is independent of the others, so the
/// result does not depend on the worker count.
pub fn ensemble_with_paths(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    spec: &EnsembleSpec,
    stride: Option<usize>,
) -> Result<(EnsembleResult, Vec<Trajectory>)> {
    if spec.bins == 0 {
        return Err(Error::validation("bins >= 1"));
    }
    let n_steps = step_count(spec.t0, spec.t1, spec.dt)?;
    let starts = sample_initial(params, slits, mask, spec.t0, spec.n, spec.seed)?;
    let field = VelocityField::new(params, slits, mask, spec.node_floor)?;

    // trajectory indices sorted by starting position, for the crossing check
    let mut order: Vec<usize> = (0..spec.n).collect();
    order.sort_by(|&a, &b| starts[a].total_cmp(&starts[b]));

    let mut state: Vec<Option<f64>> = starts.iter().map(|&x| Some(x)).collect();
    let mut paths: Vec<Trajectory> = match stride {
        Some(_) => starts
            .iter()
            .map(|&x| Trajectory {
                samples: vec![(spec.t0, x)],
                terminated: Termination::Completed,
            })
            .collect(),
        None => Vec::new(),
    };
    let mut crossing_violations = 0;

    for k in 0..n_steps {
        let ta = step_time(spec.t0, spec.t1, n_steps, k);
        let tb = step_time(spec.t0, spec.t1, n_steps, k + 1);
        let h = tb - ta;
        let slices = StepSlices::new(&field, ta, h)?;
        state
            .par_iter_mut()
            .for_each(|s| *s = s.and_then(|x| slices.rk4(x, h)));

        crossing_violations += count_crossings(&state, &order);

        if let Some(stride) = stride {
            if (k + 1) % stride.max(1) == 0 || k + 1 == n_steps {
                for (path, s) in paths.iter_mut().zip(&state) {
                    match s {
                        Some(x) if path.terminated == Termination::Completed => {
                            path.samples.push((tb, *x))
                        }
                        _ => path.terminated = Termination::NodalAbort,
                    }
                }
            }
        }
    }

    let (lo, hi) = field.window(spec.t1)?;
    let edges: Vec<f64> = (0..=spec.bins)
        .map(|i| lo + (hi - lo) * i as f64 / spec.bins as f64)
        .collect();
    let mut counts = vec![0u64; spec.bins];
    let width = (hi - lo) / spec.bins as f64;
    for x in state.iter().flatten() {
        let b = ((x - lo) / width).floor().clamp(0.0, (spec.bins - 1) as f64) as usize;
        counts[b] += 1;
    }
    let n_aborted = state.iter().filter(|s| s.is_none()).count();
    Ok((
        EnsembleResult {
            edges,
            counts,
            n_trajectories: spec.n,
            n_aborted,
            seed: spec.seed,
            crossing_violations,
            endpoints: state,
        },
        paths,
    ))
}

fn count_crossings(state: &[Option<f64>], order: &[usize]) -> usize {
    let mut violations = 0;
    let mut prev: Option<f64> = None;
    for &i in order {
        if let Some(x) = state[i] {
            if let Some(p) = prev {
                if p - x > CROSSING_TOLERANCE {
                    violations += 1;
                }
            }
            prev = Some(x);
        }
    }
    violations
}

/// Probability mass of normalized `P_tot(., t)` in each bin, by composite
/// Simpson quadrature with `sub` panels per bin.
pub fn binned_probabilities(
    params: &PhysParams,
    slits: &[SlitSpec],
    mask: &SlitMask,
    t: f64,
    edges: &[f64],
    sub: usize,
) -> Result<Vec<f64>> {
    let slice = VelocityField::new(params, slits, mask, 0.0)?.at(t)?;
    let sub = sub.max(1) * 2;
    let mass: Vec<f64> = edges
        .windows(2)
        .map(|e| {
            let h = (e[1] - e[0]) / sub as f64;
            let mut acc = slice.intensity(e[0]) + slice.intensity(e[1]);
            for i in 1..sub {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * slice.intensity(e[0] + i as f64 * h);
            }
            acc * h / 3.0
        })
        .collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateDensity(total));
    }
    Ok(mass.into_iter().map(|m| m / total).collect())
}

/// `0.5 * sum |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::ballistic_position;
    use approx::assert_relative_eq;

    fn single() -> (PhysParams, Vec<SlitSpec>, SlitMask) {
        (PhysParams::default(), vec![SlitSpec::new(0.0, 1.0)], SlitMask::all(1))
    }

    #[test]
    fn single_slit_ballistic_endpoint() {
        let (p, s, m) = single();
        let tr = integrate(&p, &s, &m, 1.0, 0.0, 2.0, 1e-3, 1e-12).unwrap();
        assert_eq!(tr.terminated, Termination::Completed);
        assert_relative_eq!(tr.endpoint().unwrap(), 2f64.sqrt(), epsilon = 1e-6);
        assert!(tr.samples.windows(2).all(|w| w[1].0 > w[0].0));
        assert_eq!(tr.samples.last().unwrap().0, 2.0);
    }

    #[test]
    fn centre_streamline_follows_drift() {
        let p = PhysParams::default();
        let s = vec![SlitSpec::new(0.5, 0.8).with_drift(0.3)];
        let tr = integrate(&p, &s, &SlitMask::all(1), 0.5, 0.0, 3.0, 1e-2, 1e-12).unwrap();
        for &(t, x) in &tr.samples {
            assert!((x - (0.5 + 0.3 * t)).abs() < 1e-9);
        }
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let p = PhysParams::default();
        let s = vec![SlitSpec::new(0.0, 0.5).with_drift(0.2)];
        let m = SlitMask::all(1);
        let exact = ballistic_position(&p, &s[0], 0.7, 2.0).unwrap();
        let err = |dt: f64| {
            (integrate(&p, &s, &m, 0.7, 0.0, 2.0, dt, 1e-12).unwrap().endpoint().unwrap() - exact)
                .abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn nodal_abort_reported() {
        // antisymmetric pair: exact node at x = 0 for all t
        let p = PhysParams::default();
        let s = vec![
            SlitSpec::new(-1.0, 1.0),
            SlitSpec::new(1.0, 1.0).with_phase0(std::f64::consts::PI),
        ];
        let tr = integrate(&p, &s, &SlitMask::all(2), 0.0, 0.1, 0.5, 0.01, 1e-12).unwrap();
        assert_eq!(tr.terminated, Termination::NodalAbort);
        assert_eq!(tr.endpoint(), None);
    }

    #[test]
    fn invalid_intervals() {
        let (p, s, m) = single();
        assert!(integrate(&p, &s, &m, 0.0, 1.0, 1.0, 0.1, 1e-12).is_err());
        assert!(integrate(&p, &s, &m, 0.0, 0.0, 1.0, 0.0, 1e-12).is_err());
        assert!(matches!(
            integrate(&p, &s, &m, 0.0, -1.0, 1.0, 0.1, 1e-12),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_centred() {
        let p = PhysParams::default();
        let s = vec![SlitSpec::new(1.5, 0.7)];
        let m = SlitMask::all(1);
        let a = sample_initial(&p, &s, &m, 0.0, 20_000, 11).unwrap();
        let b = sample_initial(&p, &s, &m, 0.0, 20_000, 11).unwrap();
        assert_eq!(a, b);
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((mean - 1.5).abs() < 3.0 * 0.7 / (a.len() as f64).sqrt());
    }

    #[test]
    fn symmetric_two_slit_samples_have_no_skew() {
        let p = PhysParams::default();
        let s = vec![SlitSpec::new(-2.0, 1.0), SlitSpec::new(2.0, 1.0)];
        let xs = sample_initial(&p, &s, &SlitMask::all(2), 0.5, 50_000, 3).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let skew = m3 / m2.powf(1.5);
        assert!(skew.abs() < 3.0 * (6.0 / n).sqrt(), "skew {skew}");
    }

    #[test]
    fn degenerate_density() {
        let p = PhysParams::default();
        let s = vec![SlitSpec::new(0.0, 1.0).with_weight(0.0)];
        assert!(matches!(
            sample_initial(&p, &s, &SlitMask::all(1), 0.0, 10, 0),
            Err(Error::DegenerateDensity(_))
        ));
        assert!(matches!(
            sample_initial(&p, &s, &SlitMask::empty(), 0.0, 10, 0),
            Err(Error::DegenerateDensity(_))
        ));
        assert!(sample_initial(&p, &s, &SlitMask::all(1), 0.0, 0, 0).is_err());
    }

    #[test]
    fn single_slit_endpoint_variance() {
        let (p, s, m) = single();
        let r = ensemble(&p, &s, &m, 0.0, 2.0, 1000, 0.01, 50, 5).unwrap();
        let xs: Vec<f64> = r.endpoints.iter().flatten().copied().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((var / 2.0 - 1.0).abs() < 0.15, "var {var}");
        assert_eq!(r.counts.iter().sum::<u64>() as usize, r.n_trajectories - r.n_aborted);
        assert_eq!(r.crossing_violations, 0);
    }

    #[test]
    fn ensemble_is_worker_count_independent() {
        let p = PhysParams::default();
        let s = vec![SlitSpec::new(-2.0, 1.0), SlitSpec::new(2.0, 1.0)];
        let m = SlitMask::all(2);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble(&p, &s, &m, 1e-3, 1.0, 500, 0.01, 40, 9).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn total_variation_basics() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }
}
