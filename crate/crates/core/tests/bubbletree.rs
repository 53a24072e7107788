use std::f64::consts::PI;

use bubblelab::bubbletree::{build_tree, lambda_n, BubbleConfig};
use bubblelab::geometry::{ChartPoint, DomainSurface, KahlerTarget};
use bubblelab::maps::{LambdaSchedule, MapFamily};
use bubblelab::quadrature::DiskRule;
use bubblelab::C64;
use proptest::prelude::*;

const ROUND: DomainSurface = DomainSurface::Round;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn renormalisation_scale_of_shrinking_identity(exp in 2.0..6.0f64) {
        let lam = 10f64.powf(-exp);
        let fam = MapFamily::shrinking_identity(C64::new(0.0, 0.0), LambdaSchedule { scale: lam, power: 0.0 }, vec![1, 2]).unwrap();
        let m = fam.member(1).unwrap();
        let eps = 0.5;
        let c_r = PI / 2.0;
        let got = lambda_n(m.as_ref(), &ChartPoint::north(C64::new(0.0, 0.0)), eps, c_r, &ROUND, &KahlerTarget::round_sphere(), &DiskRule::default()).unwrap();
        // ∫_{D(0,R)} e(z/λ) = 4πR²/(λ²+R²)
        let outer = eps * eps / (lam * lam + eps * eps);
        let t = outer - c_r / (4.0 * PI);
        let expected = lam * (t / (1.0 - t)).sqrt();
        prop_assert!((got / expected - 1.0).abs() < 1e-6, "got {got}, expected {expected}");
    }
}

#[test]
fn constant_family_has_no_bubbles() {
    let fam = MapFamily::constant(C64::new(0.2, -0.1), vec![4, 8, 16]).unwrap();
    let tree = build_tree(&fam, &BubbleConfig::default(), &ROUND, &KahlerTarget::round_sphere()).unwrap();
    assert_eq!(tree.leaves, 0);
    assert!(tree.nodes.is_empty());
    assert!(tree.limit_energy.abs() < 1e-12);
}

#[test]
fn off_centre_shrinking_identity_yields_one_bubble() {
    let a = C64::new(0.3, -0.2);
    let fam = MapFamily::shrinking_identity(a, LambdaSchedule::default(), vec![4, 8, 16]).unwrap();
    let tree = build_tree(&fam, &BubbleConfig::default(), &ROUND, &KahlerTarget::round_sphere()).unwrap();
    assert_eq!(tree.leaves, 1, "{:?}", tree.flags);
    let node = &tree.nodes[0];
    assert!((node.location.coord - a).norm() < 1e-3, "location {:?}", node.location);
    assert!((node.m / (4.0 * PI) - 1.0).abs() < 0.02);
    assert!(node.children.is_empty());
    let csv = tree.partition_csv();
    assert_eq!(csv.lines().count(), 1 + 3);
}

#[test]
fn config_validation_rejects_bad_constants() {
    let bad_cr = BubbleConfig { c_r: 4.0, ..BubbleConfig::default() };
    assert!(bad_cr.validate().is_err());
    let bad_schedule = BubbleConfig { schedule: Some(vec![8, 4]), ..BubbleConfig::default() };
    assert!(bad_schedule.validate().is_err());
    let bad_rho = BubbleConfig { rho: 0.0, ..BubbleConfig::default() };
    assert!(bad_rho.validate().is_err());
    assert!(BubbleConfig::default().validate().is_ok());
}
