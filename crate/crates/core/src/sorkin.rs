//! Sorkin interference hierarchy over slit subsets.
//!
//! `I_S = sum_{T subset of S} (-1)^{|S|-|T|} P_T`, where `P_T` is the intensity
//! with only the slits in `T` open and no renormalization of the others.
//! Order two gives the familiar `2 R_i R_j cos(phi_ij)`; every higher order
//! cancels because the intensity only contains pairwise terms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{intensity, GridSpec, SlitMask};
use crate::packet::{eval_packet, PacketEval, PhysParams, SlitSpec};

/// Tolerance on normalized higher-order terms.
pub const HIGHER_ORDER_TOLERANCE: f64 = 1e-12;
/// A first-order term above this fraction of the scale counts as a violation.
pub const FIRST_ORDER_THRESHOLD: f64 = 1e-6;

/// Intensity with only the slits in `subset` open.
pub fn subset_intensity(
    params: &PhysParams,
    slits: &[SlitSpec],
    subset: &SlitMask,
    x: f64,
    t: f64,
) -> Result<f64> {
    let evals = subset
        .select(slits)?
        .into_iter()
        .map(|s| eval_packet(params, s, x, t))
        .collect::<Result<Vec<_>>>()?;
    intensity(&evals)
}

/// Inclusion-exclusion over already evaluated packets; `members` indexes `evals`.
fn inclusion_exclusion(evals: &[PacketEval], members: &[usize]) -> f64 {
    let k = members.len();
    let mut acc = 0.0;
    let mut buf = Vec::with_capacity(k);
    for bits in 0u64..(1 << k) {
        buf.clear();
        buf.extend((0..k).filter(|b| bits >> b & 1 == 1).map(|b| evals[members[b]]));
        let p = intensity(&buf).expect("packets share one evaluation point");
        if (k - buf.len()).is_multiple_of(2) {
            acc += p;
        } else {
            acc -= p;
        }
    }
    acc
}

/// Signed interference term `I_S` for a nonempty subset.
pub fn interference_term(
    params: &PhysParams,
    slits: &[SlitSpec],
    subset: &SlitMask,
    x: f64,
    t: f64,
) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::validation("subset must be nonempty"));
    }
    if subset.len() > 30 {
        return Err(Error::validation("subset too large for inclusion-exclusion"));
    }
    let evals = subset
        .select(slits)?
        .into_iter()
        .map(|s| eval_packet(params, s, x, t))
        .collect::<Result<Vec<_>>>()?;
    let members: Vec<usize> = (0..evals.len()).collect();
    Ok(inclusion_exclusion(&evals, &members))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetTerm {
    pub subset: Vec<usize>,
    pub values: Vec<f64>,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumRuleReport {
    pub order: usize,
    pub terms: Vec<SubsetTerm>,
    pub max_abs: f64,
    pub scale: f64,
    pub normalized_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumRuleAnalysis {
    /// Peak intensity over every nonempty subset run on the grid.
    pub scale: f64,
    pub reports: Vec<SumRuleReport>,
    /// Largest `|I_S|` over 2-subsets, normalized by `scale`.
    pub first_order_normalized_max: f64,
    /// Some 2-subset term exceeds [`FIRST_ORDER_THRESHOLD`] of the scale.
    pub first_order_violated: bool,
}

impl SumRuleAnalysis {
    /// Every reported order >= 3 stays within `tol` of the scale.
    pub fn higher_orders_vanish(&self, tol: f64) -> bool {
        self.reports
            .iter()
            .filter(|r| r.order >= 3)
            .all(|r| r.normalized_max <= tol)
    }
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u64..(1 << n))
        .filter(|b| b.count_ones() as usize == k)
        .map(|b| (0..n).filter(|i| b >> i & 1 == 1).collect())
        .collect()
}

/// Sorkin terms of orders `2..=max_order` on a grid, with all slits available.
pub fn sumrule_report(
    params: &PhysParams,
    slits: &[SlitSpec],
    grid: &GridSpec,
    max_order: usize,
) -> Result<SumRuleAnalysis> {
    grid.validate()?;
    let n = slits.len();
    if max_order > n {
        return Err(Error::validation("max_order <= number of slits"));
    }
    if n > 16 {
        return Err(Error::validation("at most 16 slits for a subset sweep"));
    }
    let xs = grid.points();
    let evals: Vec<Vec<PacketEval>> = xs
        .iter()
        .map(|&x| {
            slits
                .iter()
                .map(|s| eval_packet(params, s, x, grid.t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut scale: f64 = 0.0;
    for e in &evals {
        for bits in 1u64..(1 << n) {
            let sub: Vec<PacketEval> = (0..n).filter(|i| bits >> i & 1 == 1).map(|i| e[i]).collect();
            scale = scale.max(intensity(&sub)?);
        }
    }

    let order_terms = |k: usize| -> Vec<SubsetTerm> {
        k_subsets(n, k)
            .into_iter()
            .map(|subset| {
                let values: Vec<f64> = evals.iter().map(|e| inclusion_exclusion(e, &subset)).collect();
                let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                SubsetTerm {
                    subset,
                    values,
                    max_abs,
                }
            })
            .collect()
    };

    let normalize = |v: f64| if scale > 0.0 { v / scale } else { 0.0 };
    let reports: Vec<SumRuleReport> = (2..=max_order)
        .map(|k| {
            let terms = order_terms(k);
            let max_abs = terms.iter().fold(0.0f64, |m, t| m.max(t.max_abs));
            SumRuleReport {
                order: k,
                terms,
                max_abs,
                scale,
                normalized_max: normalize(max_abs),
            }
        })
        .collect();

    let first = if n >= 2 {
        normalize(order_terms(2).iter().fold(0.0f64, |m, t| m.max(t.max_abs)))
    } else {
        0.0
    };
    Ok(SumRuleAnalysis {
        scale,
        reports,
        first_order_normalized_max: first,
        first_order_violated: first > FIRST_ORDER_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn three() -> Vec<SlitSpec> {
        vec![
            SlitSpec::new(-3.0, 1.0),
            SlitSpec::new(0.0, 0.8).with_weight(1.3),
            SlitSpec::new(3.5, 1.1).with_drift(0.2).with_phase0(0.7),
        ]
    }

    #[test]
    fn subset_intensities() {
        let p = PhysParams::default();
        let s = three();
        let (x, t) = (0.4, 1.5);
        let e: Vec<_> = s.iter().map(|s| eval_packet(&p, s, x, t).unwrap()).collect();
        let a = subset_intensity(&p, &s, &SlitMask::from_indices([0]), x, t).unwrap();
        assert_relative_eq!(a, e[0].amplitude.powi(2), max_relative = 1e-15);
        assert_eq!(subset_intensity(&p, &s, &SlitMask::empty(), x, t).unwrap(), 0.0);
        let cos = e[0].phase_carrier[0] * e[1].phase_carrier[0]
            + e[0].phase_carrier[1] * e[1].phase_carrier[1];
        let ab = subset_intensity(&p, &s, &SlitMask::from_indices([0, 1]), x, t).unwrap();
        let expected = e[0].amplitude.powi(2)
            + e[1].amplitude.powi(2)
            + 2.0 * e[0].amplitude * e[1].amplitude * cos;
        assert_relative_eq!(ab, expected, max_relative = 1e-14);
    }

    #[test]
    fn pair_term_constructive() {
        let p = PhysParams::default();
        // equal packets in phase at the midpoint
        let s = vec![SlitSpec::new(-1.0, 1.0), SlitSpec::new(1.0, 1.0)];
        let r = eval_packet(&p, &s[0], 0.0, 0.0).unwrap().amplitude;
        let i = interference_term(&p, &s, &SlitMask::all(2), 0.0, 0.0).unwrap();
        assert_relative_eq!(i, 2.0 * r * r, max_relative = 1e-14);
    }

    #[test]
    fn triple_term_vanishes() {
        let p = PhysParams::default();
        let s = three();
        for i in 0..30 {
            let x = -6.0 + 0.4 * i as f64;
            let v = interference_term(&p, &s, &SlitMask::all(3), x, 1.2).unwrap();
            let scale = subset_intensity(&p, &s, &SlitMask::all(3), x, 1.2).unwrap().max(1e-300);
            assert!(v.abs() <= 1e-12 * scale.max(1.0), "{v}");
        }
        assert!(interference_term(&p, &s, &SlitMask::empty(), 0.0, 1.0).is_err());
    }

    #[test]
    fn report_shape() {
        let p = PhysParams::default();
        let g = GridSpec::new(-8.0, 8.0, 101, 1.0).unwrap();
        let a = sumrule_report(&p, &three(), &g, 3).unwrap();
        assert_eq!(a.reports.len(), 2);
        assert_eq!(a.reports[0].terms.len(), 3);
        assert_eq!(a.reports[1].terms.len(), 1);
        assert!(a.first_order_violated);
        assert!(a.higher_orders_vanish(HIGHER_ORDER_TOLERANCE));
        assert!(sumrule_report(&p, &three(), &g, 4).is_err());
    }
}
