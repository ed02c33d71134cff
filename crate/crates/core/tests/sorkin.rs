use path_excitation::field::eval_open;
use path_excitation::sorkin::{interference_term, subset_intensity, sumrule_report};
use path_excitation::{GridSpec, PhysParams, SlitMask, SlitSpec};

fn three() -> Vec<SlitSpec> {
    vec![
        SlitSpec::new(-3.0, 1.0),
        SlitSpec::new(0.0, 0.8).with_drift(0.2),
        SlitSpec::new(3.0, 1.1).with_phase0(1.1),
    ]
}

fn four() -> Vec<SlitSpec> {
    vec![
        SlitSpec::new(-4.0, 0.9),
        SlitSpec::new(-1.0, 1.0).with_weight(0.6),
        SlitSpec::new(1.5, 1.2).with_drift(-0.4),
        SlitSpec::new(4.0, 0.7).with_phase0(-2.0),
    ]
}

#[test]
fn three_slit_higher_order_vanishes() {
    let grid = GridSpec::new(-15.0, 15.0, 1501, 2.0).unwrap();
    let a = sumrule_report(&PhysParams::default(), &three(), &grid, 3).unwrap();
    assert_eq!(a.reports.len(), 2);
    let r3 = a.reports.iter().find(|r| r.order == 3).unwrap();
    assert_eq!(r3.terms.len(), 1);
    assert!(r3.normalized_max <= 1e-12, "{}", r3.normalized_max);
    assert!(a.first_order_violated);
    assert!(a.higher_orders_vanish(1e-12));
}

#[test]
fn four_slit_orders_three_and_four_vanish() {
    let grid = GridSpec::new(-15.0, 15.0, 1501, 1.3).unwrap();
    let a = sumrule_report(&PhysParams::new(0.8, 1.2).unwrap(), &four(), &grid, 4).unwrap();
    for r in &a.reports {
        let expected_terms = match r.order {
            2 => 6,
            3 => 4,
            4 => 1,
            k => panic!("unexpected order {k}"),
        };
        assert_eq!(r.terms.len(), expected_terms);
        if r.order >= 3 {
            assert!(r.normalized_max <= 1e-12, "order {}: {}", r.order, r.normalized_max);
        }
    }
    assert!(a.first_order_normalized_max > 0.1);
}

#[test]
fn default_two_slit_first_order_is_large() {
    let grid = GridSpec::new(-15.0, 15.0, 2001, 2.0).unwrap();
    let slits = [SlitSpec::new(-3.0, 1.0), SlitSpec::new(3.0, 1.0)];
    let a = sumrule_report(&PhysParams::default(), &slits, &grid, 2).unwrap();
    assert!(a.reports[0].normalized_max > 0.1, "{}", a.reports[0].normalized_max);
}

#[test]
fn pair_term_matches_closed_form() {
    let p = PhysParams::default();
    let slits = three();
    for i in 0..60 {
        let x = -6.0 + 0.2 * i as f64;
        let e = eval_open(&p, &slits, &SlitMask::all(3), x, 1.5).unwrap();
        let (a, b) = (&e[0], &e[2]);
        let cos = a.phase_carrier[0] * b.phase_carrier[0] + a.phase_carrier[1] * b.phase_carrier[1];
        let closed = 2.0 * a.amplitude * b.amplitude * cos;
        let term = interference_term(&p, &slits, &SlitMask::from_indices([0, 2]), x, 1.5).unwrap();
        let scale = (a.amplitude + b.amplitude).powi(2);
        assert!((term - closed).abs() <= 1e-12 * scale);
    }
}

#[test]
fn context_inequality() {
    // P_AB differs from P_A + P_B across contexts while the same-context
    // decomposition is exact
    let p = PhysParams::default();
    let slits = [SlitSpec::new(-3.0, 1.0), SlitSpec::new(3.0, 1.0)];
    let grid = GridSpec::new(-15.0, 15.0, 2001, 2.0).unwrap();
    let both = SlitMask::all(2);
    let mut peak = 0.0f64;
    let mut gap = 0.0f64;
    for x in grid.points() {
        let pab = subset_intensity(&p, &slits, &both, x, 2.0).unwrap();
        let pa = subset_intensity(&p, &slits, &SlitMask::from_indices([0]), x, 2.0).unwrap();
        let pb = subset_intensity(&p, &slits, &SlitMask::from_indices([1]), x, 2.0).unwrap();
        peak = peak.max(pab).max(pa).max(pb);
        gap = gap.max((pab - pa - pb).abs());
    }
    assert!(gap > 0.1 * peak);
    assert_eq!(
        subset_intensity(&p, &slits, &SlitMask::empty(), 0.0, 2.0).unwrap(),
        0.0
    );
}

#[test]
fn empty_subset_is_rejected() {
    assert!(interference_term(&PhysParams::default(), &three(), &SlitMask::empty(), 0.0, 1.0).is_err());
}
