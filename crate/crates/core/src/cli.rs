//! Subcommand runner behind the `path-excitation` binary.
//!
//! Outputs are written into an output directory: CSV with a header row and
//! floats in 17 significant digits, or pretty JSON. Every run also writes the
//! resolved configuration to `config.echo.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{field_grid, trapezoid};
use crate::oracle::equivalence_report;
use crate::packet::{ballistic_position, eval_packet, sigma_t};
use crate::sorkin::{sumrule_report, HIGHER_ORDER_TOLERANCE};
use crate::trajectories::{ensemble_with_paths, EnsembleSpec};

/// Tolerance used by `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-10;
/// Time samples in the `packet` dispersion table.
pub const PACKET_TIME_SAMPLES: usize = 101;
/// Upper bound on stored samples per streamline in `trajectories.csv`.
pub const STREAMLINE_SAMPLES: usize = 100;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Field,
    Trajectories,
    Sorkin,
    Verify,
    Packet,
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "field" => Subcommand::Field,
            "trajectories" => Subcommand::Trajectories,
            "sorkin" => Subcommand::Sorkin,
            "verify" => Subcommand::Verify,
            "packet" => Subcommand::Packet,
            other => return Err(Error::validation(format!("unknown subcommand {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

/// Exit code for a failed run.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Validation(_) | Error::SlitIndex { .. } => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

/// Machine-readable error document.
pub fn error_json(err: &Error) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        error: &'a str,
        message: String,
        exit_code: i32,
    }
    serde_json::to_string(&Doc {
        error: err.kind(),
        message: err.to_string(),
        exit_code: exit_code_for(err),
    })
    .expect("error serializes")
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

fn write_file(out_dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out_dir.join(name);
    fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Runs one subcommand and writes its outputs into `out_dir`.
pub fn run_subcommand(cmd: Subcommand, config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    write_file(out_dir, "config.echo.json", &(config.echo() + "\n"), &mut files)?;
    let exit_code = match cmd {
        Subcommand::Field => {
            write_file(out_dir, "field.csv", &field_csv(config)?, &mut files)?;
            EXIT_OK
        }
        Subcommand::Trajectories => {
            let (streams, hist) = trajectories_csv(config)?;
            write_file(out_dir, "trajectories.csv", &streams, &mut files)?;
            write_file(out_dir, "histogram.csv", &hist, &mut files)?;
            EXIT_OK
        }
        Subcommand::Sorkin => {
            let analysis = sumrule_report(
                &config.params,
                &config.slits,
                &config.grid,
                config.slits.len(),
            )?;
            write_file(out_dir, "sorkin.json", &to_json(&analysis), &mut files)?;
            if analysis.higher_orders_vanish(HIGHER_ORDER_TOLERANCE) {
                EXIT_OK
            } else {
                EXIT_TOLERANCE
            }
        }
        Subcommand::Verify => {
            let report = equivalence_report(
                &config.params,
                &config.slits,
                &config.mask,
                &config.grid,
                config.node_floor,
            )?;
            write_file(out_dir, "equivalence.json", &to_json(&report), &mut files)?;
            if report.within(VERIFY_TOLERANCE) {
                EXIT_OK
            } else {
                EXIT_TOLERANCE
            }
        }
        Subcommand::Packet => {
            write_file(out_dir, "packet.csv", &packet_csv(config)?, &mut files)?;
            EXIT_OK
        }
    };
    Ok(RunOutcome { exit_code, files })
}

/// `x, P_tot, J_tot, v_tot, nodal, R_1..R_n`.
pub fn field_csv(config: &RunConfig) -> Result<String> {
    let rows = field_grid(
        &config.params,
        &config.slits,
        &config.mask,
        &config.grid,
        config.node_floor,
    )?;
    let mut out = String::from("x,P_tot,J_tot,v_tot,nodal");
    for i in 1..=config.slits.len() {
        write!(out, ",R_{i}").unwrap();
    }
    out.push('\n');
    for r in rows {
        write!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.x),
            fmt_f64(r.sample.p_tot),
            fmt_f64(r.sample.j_tot),
            fmt_f64(r.sample.v_tot.unwrap_or(f64::NAN)),
            u8::from(r.sample.nodal)
        )
        .unwrap();
        for a in r.amplitudes {
            write!(out, ",{}", fmt_f64(a)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Streamlines `traj_id, t, x` and histogram `bin_left, bin_right, count, density`.
pub fn trajectories_csv(config: &RunConfig) -> Result<(String, String)> {
    let opts = &config.trajectories;
    let spec = EnsembleSpec {
        t0: opts.t0,
        t1: opts.t1,
        n: opts.n,
        dt: opts.dt,
        bins: opts.bins,
        seed: opts.seed,
        node_floor: config.node_floor,
    };
    let n_steps = ((opts.t1 - opts.t0) / opts.dt).round().max(1.0) as usize;
    let stride = n_steps.div_ceil(STREAMLINE_SAMPLES).max(1);
    let (result, paths) =
        ensemble_with_paths(&config.params, &config.slits, &config.mask, &spec, Some(stride))?;

    let mut streams = String::from("traj_id,t,x\n");
    for (id, path) in paths.iter().enumerate() {
        for &(t, x) in &path.samples {
            writeln!(streams, "{id},{},{}", fmt_f64(t), fmt_f64(x)).unwrap();
        }
    }

    let mut hist = String::from("bin_left,bin_right,count,density\n");
    for ((e, &c), d) in result
        .edges
        .windows(2)
        .zip(&result.counts)
        .zip(result.densities())
    {
        writeln!(hist, "{},{},{c},{}", fmt_f64(e[0]), fmt_f64(e[1]), fmt_f64(d)).unwrap();
    }
    Ok((streams, hist))
}

/// Single-packet dispersion: `t, sigma, variance, ballistic_x` for the first
/// open slit, where `variance` is the quadrature variance of `R^2` and
/// `ballistic_x` the streamline started one `sigma0` right of the centre.
pub fn packet_csv(config: &RunConfig) -> Result<String> {
    let index = config
        .mask
        .indices()
        .next()
        .ok_or_else(|| Error::validation("packet needs at least one open slit"))?;
    let slit = &config.slits[index];
    let params = &config.params;
    let mut out = String::from("t,sigma,variance,ballistic_x\n");
    let n_t = if config.grid.t > 0.0 { PACKET_TIME_SAMPLES } else { 1 };
    for k in 0..n_t {
        let t = if n_t == 1 {
            0.0
        } else {
            config.grid.t * k as f64 / (n_t - 1) as f64
        };
        let sigma = sigma_t(params, slit, t)?;
        let variance = quadrature_variance(params, slit, t)?;
        let x = ballistic_position(params, slit, slit.center + slit.sigma0, t)?;
        writeln!(out, "{},{},{},{}", fmt_f64(t), fmt_f64(sigma), fmt_f64(variance), fmt_f64(x))
            .unwrap();
    }
    Ok(out)
}

/// Variance of the normalized single-slit density by trapezoid quadrature over +-12 sigma(t).
pub fn quadrature_variance(
    params: &crate::packet::PhysParams,
    slit: &crate::packet::SlitSpec,
    t: f64,
) -> Result<f64> {
    let sigma = sigma_t(params, slit, t)?;
    let centre = slit.mean_position(t);
    let n = 4001;
    let dx = 24.0 * sigma / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| centre - 12.0 * sigma + i as f64 * dx).collect();
    let dens = xs
        .iter()
        .map(|&x| eval_packet(params, slit, x, t).map(|e| e.amplitude * e.amplitude))
        .collect::<Result<Vec<_>>>()?;
    let norm = trapezoid(&dens, dx);
    if !(norm > 0.0) {
        return Err(Error::DegenerateDensity(norm));
    }
    let mean_w: Vec<f64> = xs.iter().zip(&dens).map(|(x, d)| x * d).collect();
    let mean = trapezoid(&mean_w, dx) / norm;
    let var_w: Vec<f64> = xs.iter().zip(&dens).map(|(x, d)| (x - mean).powi(2) * d).collect();
    Ok(trapezoid(&var_w, dx) / norm)
}

/// Applies `--seed` and other overrides, returning the effective configuration.
pub fn apply_overrides(mut config: RunConfig, seed: Option<u64>) -> RunConfig {
    if let Some(seed) = seed {
        config.trajectories.seed = seed;
    }
    config
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_names() {
        for name in ["field", "trajectories", "sorkin", "verify", "packet"] {
            assert!(name.parse::<Subcommand>().is_ok());
        }
        assert!("plot".parse::<Subcommand>().is_err());
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&Error::validation("x")), EXIT_VALIDATION);
        assert_eq!(exit_code_for(&Error::DegenerateDensity(0.0)), EXIT_RUNTIME);
        let doc: serde_json::Value =
            serde_json::from_str(&error_json(&Error::validation("sigma0 > 0"))).unwrap();
        assert_eq!(doc["error"], "ValidationError");
        assert_eq!(doc["exit_code"], 2);
    }

    #[test]
    fn field_csv_header() {
        let mut c = RunConfig::default();
        c.grid.n_points = 5;
        let csv = field_csv(&c).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x,P_tot,J_tot,v_tot,nodal,R_1,R_2");
        assert_eq!(lines.count(), 5);
    }

    #[test]
    fn quadrature_variance_matches_sigma() {
        let c = RunConfig::default();
        let v = quadrature_variance(&c.params, &c.slits[0], 2.0).unwrap();
        assert!((v / 2.0 - 1.0).abs() < 1e-6);
    }
}
