//! Strict JSON run configuration.
//!
//! ```json
//! {
//!   "hbar": 1.0, "mass": 1.0,
//!   "slits": [{"center": -3.0, "sigma0": 1.0, "drift": 0.0, "weight": 1.0, "phase0": 0.0}],
//!   "mask": [0],
//!   "grid": {"xmin": -15.0, "xmax": 15.0, "n": 2001, "t": 2.0},
//!   "trajectories": {"t0": 0.001, "t1": 2.0, "dt": 0.0009995, "n": 1000, "bins": 100, "seed": 0},
//!   "node_floor": 1e-12
//! }
//! ```
//!
//! Every key is optional except `center` inside a slit; unknown keys are
//! rejected. [`RunConfig::echo`] writes the fully resolved configuration.

use serde::{Deserialize, Serialize};

use crate::channels::DEFAULT_NODE_FLOOR;
use crate::error::{Error, Result};
use crate::field::{GridSpec, SlitMask};
use crate::packet::{PhysParams, SlitSpec};
use crate::trajectories::default_dt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub n: usize,
    pub bins: usize,
    pub seed: u64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        let (t0, t1) = (1e-3, 2.0);
        Self {
            t0,
            t1,
            dt: default_dt(t0, t1),
            n: 1000,
            bins: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysParams,
    pub slits: Vec<SlitSpec>,
    pub mask: SlitMask,
    pub grid: GridSpec,
    pub trajectories: TrajectoryOptions,
    pub node_floor: f64,
}

impl Default for RunConfig {
    /// Symmetric two-slit setup: `hbar = m = 1`, `sigma0 = 1`, centres at +-3,
    /// grid `[-15, 15]` with 2001 points at `t = 2`.
    fn default() -> Self {
        Self {
            params: PhysParams::default(),
            slits: vec![SlitSpec::new(-3.0, 1.0), SlitSpec::new(3.0, 1.0)],
            mask: SlitMask::all(2),
            grid: GridSpec {
                x_min: -15.0,
                x_max: 15.0,
                n_points: 2001,
                t: 2.0,
            },
            trajectories: TrajectoryOptions::default(),
            node_floor: DEFAULT_NODE_FLOOR,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlit {
    center: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase0: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    xmin: Option<f64>,
    xmax: Option<f64>,
    n: Option<usize>,
    t: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectories {
    t0: Option<f64>,
    t1: Option<f64>,
    dt: Option<f64>,
    n: Option<usize>,
    bins: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    hbar: Option<f64>,
    mass: Option<f64>,
    slits: Option<Vec<RawSlit>>,
    mask: Option<Vec<usize>>,
    grid: Option<RawGrid>,
    trajectories: Option<RawTrajectories>,
    node_floor: Option<f64>,
}

/// Parses and validates a JSON configuration, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let defaults = RunConfig::default();
    let params = PhysParams::new(
        raw.hbar.unwrap_or(defaults.params.hbar()),
        raw.mass.unwrap_or(defaults.params.mass()),
    )?;

    let slits = match raw.slits {
        None => defaults.slits.clone(),
        Some(list) => list
            .into_iter()
            .map(|s| SlitSpec {
                center: s.center,
                sigma0: s.sigma0.unwrap_or(1.0),
                drift: s.drift.unwrap_or(0.0),
                weight: s.weight.unwrap_or(1.0),
                phase0: s.phase0.unwrap_or(0.0),
            })
            .collect(),
    };
    for (i, s) in slits.iter().enumerate() {
        s.validate()
            .map_err(|e| Error::validation(format!("slits[{i}]: {}", strip(e))))?;
    }

    let mask = match raw.mask {
        None => SlitMask::all(slits.len()),
        Some(ix) => SlitMask::from_indices(ix),
    };
    mask.validate(slits.len())
        .map_err(|e| Error::validation(format!("mask: {e}")))?;

    let g = raw.grid.unwrap_or_default();
    let grid = GridSpec {
        x_min: g.xmin.unwrap_or(defaults.grid.x_min),
        x_max: g.xmax.unwrap_or(defaults.grid.x_max),
        n_points: g.n.unwrap_or(defaults.grid.n_points),
        t: g.t.unwrap_or(defaults.grid.t),
    };
    grid.validate()
        .map_err(|e| Error::validation(format!("grid: {}", strip(e))))?;

    let tr = raw.trajectories.unwrap_or_default();
    let td = defaults.trajectories;
    let t0 = tr.t0.unwrap_or(td.t0);
    let t1 = tr.t1.unwrap_or(td.t1);
    let trajectories = TrajectoryOptions {
        t0,
        t1,
        dt: tr.dt.unwrap_or_else(|| default_dt(t0, t1)),
        n: tr.n.unwrap_or(td.n),
        bins: tr.bins.unwrap_or(td.bins),
        seed: tr.seed.unwrap_or(td.seed),
    };
    validate_trajectories(&trajectories)?;

    let node_floor = raw.node_floor.unwrap_or(defaults.node_floor);
    if !(node_floor > 0.0 && node_floor.is_finite()) {
        return Err(Error::validation("node_floor > 0"));
    }

    Ok(RunConfig {
        params,
        slits,
        mask,
        grid,
        trajectories,
        node_floor,
    })
}

fn strip(e: Error) -> String {
    match e {
        Error::Validation(m) => m,
        other => other.to_string(),
    }
}

fn validate_trajectories(t: &TrajectoryOptions) -> Result<()> {
    let fail = |m: &str| Err(Error::validation(format!("trajectories: {m}")));
    if !(t.t0 >= 0.0) {
        return fail("t0 >= 0");
    }
    if !(t.t1 > t.t0) {
        return fail("t1 > t0");
    }
    if !(t.dt > 0.0 && t.dt.is_finite()) {
        return fail("dt > 0");
    }
    if t.n == 0 {
        return fail("n >= 1");
    }
    if t.bins == 0 {
        return fail("bins >= 1");
    }
    Ok(())
}

impl RunConfig {
    /// Fully explicit JSON form of the configuration; `parse_config(echo)` returns `self`.
    pub fn echo(&self) -> String {
        let raw = RawConfig {
            hbar: Some(self.params.hbar()),
            mass: Some(self.params.mass()),
            slits: Some(
                self.slits
                    .iter()
                    .map(|s| RawSlit {
                        center: s.center,
                        sigma0: Some(s.sigma0),
                        drift: Some(s.drift),
                        weight: Some(s.weight),
                        phase0: Some(s.phase0),
                    })
                    .collect(),
            ),
            mask: Some(self.mask.indices().collect()),
            grid: Some(RawGrid {
                xmin: Some(self.grid.x_min),
                xmax: Some(self.grid.x_max),
                n: Some(self.grid.n_points),
                t: Some(self.grid.t),
            }),
            trajectories: Some(RawTrajectories {
                t0: Some(self.trajectories.t0),
                t1: Some(self.trajectories.t1),
                dt: Some(self.trajectories.dt),
                n: Some(self.trajectories.n),
                bins: Some(self.trajectories.bins),
                seed: Some(self.trajectories.seed),
            }),
            node_floor: Some(self.node_floor),
        };
        serde_json::to_string_pretty(&raw).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_two_slit_defaults() {
        let c = parse_config(r#"{"slits": [{"center": -3}, {"center": 3}]}"#).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(parse_config("{}").unwrap(), RunConfig::default());
        assert_eq!(c.params.hbar(), 1.0);
        assert_eq!(c.grid.n_points, 2001);
        assert_eq!((c.grid.x_min, c.grid.x_max, c.grid.t), (-15.0, 15.0, 2.0));
    }

    #[test]
    fn negative_sigma_rejected() {
        let e = parse_config(r#"{"slits": [{"center": 0, "sigma0": -1}]}"#).unwrap_err();
        match e {
            Error::Validation(m) => assert!(m.contains("sigma0 > 0"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config("{\n  \"hbar_bar\": 1\n}").unwrap_err();
        match e {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("hbar_bar"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config(r#"{"grid": {"points": 3}}"#),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn other_validation_failures() {
        for bad in [
            r#"{"mass": 0}"#,
            r#"{"mask": [2]}"#,
            r#"{"grid": {"xmin": 1, "xmax": 0}}"#,
            r#"{"trajectories": {"t0": 2, "t1": 1}}"#,
            r#"{"node_floor": 0}"#,
        ] {
            assert!(matches!(parse_config(bad), Err(Error::Validation(_))), "{bad}");
        }
    }

    #[test]
    fn empty_mask_allowed() {
        let c = parse_config(r#"{"mask": []}"#).unwrap();
        assert!(c.mask.is_empty());
    }

    proptest! {
        #[test]
        fn echo_round_trips(
            hbar in 0.1f64..10.0,
            centers in proptest::collection::vec(-10.0f64..10.0, 1..5),
            sigma0 in 0.1f64..3.0,
            drift in -2.0f64..2.0,
            phase0 in -3.0f64..3.0,
            t in 0.0f64..5.0,
            seed in any::<u64>(),
        ) {
            let mut c = RunConfig::default();
            c.params = PhysParams::new(hbar, 1.3).unwrap();
            c.slits = centers.iter().map(|&x| SlitSpec::new(x, sigma0).with_drift(drift).with_phase0(phase0)).collect();
            c.mask = SlitMask::all(c.slits.len());
            c.grid.t = t;
            c.trajectories.seed = seed;
            prop_assert_eq!(parse_config(&c.echo()).unwrap(), c);
        }
    }
}
