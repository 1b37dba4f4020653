use proptest::prelude::*;

use aqualoc::environment::{AcousticProfile, LayerAcoustics};
use aqualoc::geodesy::EnuCoord;
use aqualoc::propagation::{trace, trace_refracted, transmission_loss, PathModel, PropagationError};

fn profile_strategy(layers: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = AcousticProfile> {
    prop::collection::vec((5.0..80.0f64, 1450.0..1550.0f64, 0.0..3.0f64), layers).prop_map(|spec| {
        let thicknesses: Vec<f64> = spec.iter().map(|s| s.0).collect();
        let acoustics =
            spec.iter().map(|&(_, sound_speed, absorption)| LayerAcoustics { sound_speed, absorption }).collect();
        AcousticProfile::from_parts(&thicknesses, acoustics).unwrap()
    })
}

/// Profile plus two depths inside it and a horizontal range.
fn geometry() -> impl Strategy<Value = (AcousticProfile, f64, f64, f64)> {
    profile_strategy(1..=10).prop_flat_map(|p| {
        let d = p.total_depth();
        (Just(p), 0.0..=d, 0.0..=d, 0.0..600.0f64)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn snell_invariant_and_range_closure((profile, zs, zr, range) in geometry()) {
        let path = trace_refracted(&profile, zs, zr, range).unwrap();
        for s in &path.segments {
            let c = profile.layers()[s.layer].sound_speed;
            prop_assert!((s.grazing_angle.cos() / c - path.ray_parameter).abs() < 1e-12);
        }
        prop_assert!((path.horizontal_range() - range).abs() < 1e-6);
        let vertical: f64 = path.segments.iter().map(|s| s.length * s.grazing_angle.sin()).sum();
        prop_assert!((vertical - (zs - zr).abs()).abs() < 1e-6);
    }

    #[test]
    fn reciprocity((profile, zs, zr, range) in geometry()) {
        let there = trace_refracted(&profile, zs, zr, range).unwrap();
        let back = trace_refracted(&profile, zr, zs, range).unwrap();
        let tol = 1e-9 * there.tof.max(f64::MIN_POSITIVE);
        prop_assert!((there.tof - back.tof).abs() <= tol);
        prop_assert!((there.total_length - back.total_length).abs() <= 1e-9 * there.total_length.max(1.0));
    }

    #[test]
    fn fermat_refracted_never_slower((profile, zs, zr, range) in geometry()) {
        let a = EnuCoord::new(0.0, 0.0, -zs);
        let b = EnuCoord::new(range, 0.0, -zr);
        let refracted = trace(&profile, PathModel::Refracted, a, b).unwrap().tof;
        let straight = trace(&profile, PathModel::Straight, a, b).unwrap().tof;
        prop_assert!(refracted <= straight * (1.0 + 1e-12), "{} > {}", refracted, straight);
    }

    #[test]
    fn homogeneous_models_agree(
        depth in 10.0..1000.0f64,
        c in 1400.0..1600.0f64,
        fa in 0.0..1.0f64,
        fb in 0.0..1.0f64,
        e in -500.0..500.0f64,
        n in -500.0..500.0f64,
    ) {
        let profile = AcousticProfile::uniform(depth, c, 0.5).unwrap();
        let a = EnuCoord::new(0.0, 0.0, -fa * depth);
        let b = EnuCoord::new(e, n, -fb * depth);
        let expected = a.distance(b) / c;
        for model in [PathModel::Refracted, PathModel::Straight] {
            let tof = trace(&profile, model, a, b).unwrap().tof;
            prop_assert!((tof - expected).abs() <= 1e-9 * expected.max(f64::MIN_POSITIVE), "{model}");
        }
    }

    #[test]
    fn tof_increases_with_range((profile, zs, zr, _) in geometry()) {
        let mut last = -1.0;
        for k in 0..60 {
            let tof = trace_refracted(&profile, zs, zr, k as f64 * 10.0).unwrap().tof;
            prop_assert!(tof > last || (k == 0 && tof == 0.0));
            last = tof;
        }
    }

    #[test]
    fn transmission_loss_grows_with_length(profile in profile_strategy(1..=6), z in 0.0..1.0f64) {
        let depth = z * profile.total_depth();
        let mut last = f64::NEG_INFINITY;
        for k in 1..50 {
            let path = trace_refracted(&profile, depth, depth, k as f64 * 20.0).unwrap();
            let tl = transmission_loss(&path, &profile).unwrap();
            prop_assert!(tl > last);
            last = tl;
        }
    }
}

#[test]
fn depth_outside_column_is_an_error() {
    let profile = AcousticProfile::uniform(100.0, 1500.0, 0.0).unwrap();
    assert!(matches!(trace_refracted(&profile, 101.0, 0.0, 10.0), Err(PropagationError::Range(_))));
    assert!(matches!(trace_refracted(&profile, -1.0, 0.0, 10.0), Err(PropagationError::Range(_))));
    assert!(matches!(trace_refracted(&profile, 10.0, 0.0, f64::NAN), Err(PropagationError::BadRange(_))));
}

#[test]
fn straight_ray_parameter_matches_refracted_in_one_layer() {
    let profile = AcousticProfile::uniform(200.0, 1500.0, 0.0).unwrap();
    let a = EnuCoord::new(0.0, 0.0, -150.0);
    let b = EnuCoord::new(120.0, -40.0, -10.0);
    let r = trace(&profile, PathModel::Refracted, a, b).unwrap();
    let s = trace(&profile, PathModel::Straight, a, b).unwrap();
    assert!((r.ray_parameter - s.ray_parameter).abs() < 1e-15);
}

#[test]
fn nearly_level_long_ray_exists() {
    let profile = AcousticProfile::uniform(10.0, 1400.0, 0.0).unwrap();
    let a = EnuCoord::new(0.0, 0.0, -6.023_674_348_140_321);
    let b = EnuCoord::new(0.0, -373.498_366_034_146_2, -6.024_623_402_288_883);
    let tof = trace(&profile, PathModel::Refracted, a, b).unwrap().tof;
    assert!((tof - a.distance(b) / 1400.0).abs() < 1e-12);
}
