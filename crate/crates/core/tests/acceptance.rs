//! Acceptance suite: nine criteria, one PASS/FAIL line each. Runs as a
//! plain binary so the lines are always printed; exits non-zero on failure.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;
use std::time::Instant;

use bubblelab::bubbletree::{build_tree, regularity_diagnostic, BubbleConfig};
use bubblelab::densities::{bochner_convergence, density_field, sample_grid};
use bubblelab::geometry::{ChartPoint, CurveMetric, DomainSurface, KahlerTarget};
use bubblelab::integration::{
    conformal_invariance_check, energy_bounds_from, share, theorem1_check, totals, totals_with_bumps, Disk,
};
use bubblelab::maps::{
    veronese, AmbientLinearMap, Conjugate, LambdaSchedule, LineEmbedding, MapFamily, MapRef,
    PolynomialMap, ProjectiveCurve, DEFAULT_SCHEDULE,
};
use bubblelab::poly::Poly;
use bubblelab::potential::{key_lemma_check, p1_check, p2_check, DiskGrid, DiskMeasure};
use bubblelab::quadrature::{DiskRule, QuadratureSpec, Rule};
use bubblelab::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

const ROUND: DomainSurface = DomainSurface::Round;

fn sphere() -> KahlerTarget {
    KahlerTarget::round_sphere()
}

fn spec(n: usize) -> QuadratureSpec {
    QuadratureSpec::new(n, Rule::Simpson).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rational_example() -> ProjectiveCurve {
    // (z² − 1/2)/(2z + 1)
    ProjectiveCurve::rational(Poly::new(vec![c(-0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]), Poly::new(vec![c(1.0, 0.0), c(2.0, 0.0)]))
        .unwrap()
}

fn line_composite() -> MapRef {
    let f0 = vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
    let f1 = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
    share(LineEmbedding::new(share(ProjectiveCurve::monomial(2)), f0, f1).unwrap())
}

fn fs2() -> KahlerTarget {
    KahlerTarget::FubiniStudy { dim: 2, c: 1.0 }
}

/// Every map the shipped scenarios evaluate, with its target and its
/// concentration points (family members only).
fn shipped_maps() -> Vec<(&'static str, MapRef, KahlerTarget, Vec<ChartPoint>)> {
    let flat = KahlerTarget::Curve(CurveMetric::Flat);
    let singles: Vec<(&'static str, MapRef, KahlerTarget)> = vec![
        ("identity", share(ProjectiveCurve::identity()), sphere()),
        ("z^2", share(ProjectiveCurve::monomial(2)), sphere()),
        ("z^3", share(ProjectiveCurve::monomial(3)), sphere()),
        ("conj z^2", share(Conjugate(Arc::new(ProjectiveCurve::monomial(2)))), sphere()),
        ("rational", share(rational_example()), sphere()),
        (
            "ambient-linear",
            share(AmbientLinearMap {
                offset: c(0.5, 0.0),
                coeffs: [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)],
            }),
            flat.clone(),
        ),
        (
            "polynomial",
            share(PolynomialMap {
                terms: vec![(c(1.0, 0.0), 2, 1)],
            }),
            flat,
        ),
        ("veronese(2)", share(veronese(2).unwrap()), fs2()),
        ("line composite", line_composite(), fs2()),
    ];
    let mut out: Vec<_> = singles.into_iter().map(|(n, m, t)| (n, m, t, Vec::new())).collect();
    let lam = LambdaSchedule::default();
    for &n in &DEFAULT_SCHEDULE {
        let one = MapFamily::shrinking_identity(c(0.0, 0.0), lam, vec![n]).unwrap();
        let two = MapFamily::two_bubble(c(0.0, 0.0), c(1.0, 0.0), lam, vec![n]).unwrap();
        out.push(("single-bubble member", one.member(n).unwrap(), sphere(), one.declared_centers.clone()));
        out.push(("two-bubble member", two.member(n).unwrap(), sphere(), two.declared_centers.clone()));
    }
    out
}

fn energy_quantization() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for d in 1..=3 {
        let start = Instant::now();
        let e = totals(&ProjectiveCurve::monomial(d), &ROUND, &sphere(), &spec(512)).unwrap().energy;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        worst = worst.max(rel(e, 4.0 * PI * d as f64));
    }
    (
        worst <= 1e-6 && slowest <= 10.0,
        format!("max relative error {worst:.2e} at N = 512, slowest map {slowest:.2} s"),
    )
}

fn ramification_equality() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for d in 1..=3 {
        let r = theorem1_check(&ProjectiveCurve::monomial(d), &ROUND, &sphere(), &spec(512), false, 1e-5).unwrap();
        ok &= r.total_multiplicity == 2 * d - 2 && r.pass;
        worst = worst.max(r.slack.abs() / r.q_plus);
    }
    ok &= worst <= 1e-5;
    // the 2π floor on every non-constant holomorphic test sphere
    let spheres: Vec<(&str, MapRef, KahlerTarget)> = vec![
        ("identity", share(ProjectiveCurve::identity()), sphere()),
        ("z^2", share(ProjectiveCurve::monomial(2)), sphere()),
        ("z^3", share(ProjectiveCurve::monomial(3)), sphere()),
        ("rational", share(rational_example()), sphere()),
        ("veronese(2)", share(veronese(2).unwrap()), fs2()),
        ("line composite", line_composite(), fs2()),
    ];
    let mut floor = f64::INFINITY;
    for (_, m, t) in &spheres {
        floor = floor.min(totals(m.as_ref(), &ROUND, t, &spec(256)).unwrap().q_plus_holo);
    }
    ok &= floor >= 2.0 * PI * (1.0 - 1e-6);
    (ok, format!("max |slack|/Q′₊ {worst:.2e} for d = 1..3; min Q′₊ over {} spheres {:.6} (2π = {:.6})", spheres.len(), floor, 2.0 * PI))
}

fn bochner_rates() -> Outcome {
    let steps = [0.04, 0.02, 0.01, 0.005];
    let z2 = bochner_convergence(&ProjectiveCurve::monomial(2), &ROUND, &sphere(), &steps).unwrap();
    let rates_ok = z2.ratios.len() == 3 && z2.ratios.iter().all(|r| (3.0..=5.0).contains(r));
    let id = bochner_convergence(&ProjectiveCurve::identity(), &ROUND, &sphere(), &steps).unwrap();
    let tol = 1e-10;
    let geodesic = id.sup_beta_holo_sq <= tol && id.sup_residual_holo.iter().all(|r| *r <= 1e-8);
    let ratios: Vec<String> = z2.ratios.iter().map(|r| format!("{r:.3}")).collect();
    (
        rates_ok && geodesic,
        format!(
            "z² ratios [{}]; identity sup|β′|² {:.1e}, sup residual {:.1e}",
            ratios.join(", "),
            id.sup_beta_holo_sq,
            id.sup_residual_holo.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn single_bubble() -> Outcome {
    let fam = MapFamily::shrinking_identity(c(0.0, 0.0), LambdaSchedule::default(), DEFAULT_SCHEDULE.to_vec()).unwrap();
    let tree = build_tree(&fam, &BubbleConfig::default(), &ROUND, &sphere()).unwrap();
    if tree.leaves != 1 || tree.nodes.len() != 1 {
        return (false, format!("{} leaves", tree.leaves));
    }
    let node = &tree.nodes[0];
    let diam: Vec<f64> = node.partitions.iter().map(|p| p.neck_diameter).collect();
    let last = node.partitions.last().unwrap();
    let decreasing = diam.windows(2).all(|w| w[1] < w[0]);
    let ok = rel(node.m, 4.0 * PI) <= 0.02
        && rel(node.q, 2.0 * PI) <= 0.02
        && last.e_neck <= 0.01 * node.m
        && last.q_neck <= 0.01 * node.q
        && decreasing
        && *diam.last().unwrap() <= 0.05;
    (
        ok,
        format!(
            "1 leaf, m/4π {:.6}, q/2π {:.6}, ν/m {:.1e}, η/q {:.1e}, neck diameter {:.4} → {:.4}",
            node.m / (4.0 * PI),
            node.q / (2.0 * PI),
            last.e_neck / node.m,
            last.q_neck / node.q,
            diam[0],
            diam.last().unwrap()
        ),
    )
}

fn two_bubbles() -> Outcome {
    let (a, b) = (c(0.0, 0.0), c(1.0, 0.0));
    let fam = MapFamily::two_bubble(a, b, LambdaSchedule::default(), DEFAULT_SCHEDULE.to_vec()).unwrap();
    let tree = build_tree(&fam, &BubbleConfig::default(), &ROUND, &sphere()).unwrap();
    let mut ok = tree.leaves == 2 && tree.nodes.len() == 2;
    for want in [a, b] {
        let hit = tree.nodes.iter().find(|n| n.location.sphere_distance(&ChartPoint::north(want)) < 1e-3);
        ok &= hit.is_some_and(|n| rel(n.m, 4.0 * PI) <= 0.02 && rel(n.q, 2.0 * PI) <= 0.02);
    }
    let worst = tree.identities.iter().map(|r| rel(r.energy, 8.0 * PI)).fold(0.0, f64::max);
    ok &= tree.identities.len() == DEFAULT_SCHEDULE.len() && worst <= 1e-4;
    let masses: Vec<String> = tree.nodes.iter().map(|n| format!("({:.5}, {:.5})", n.m / (4.0 * PI), n.q / (2.0 * PI))).collect();
    (
        ok,
        format!("{} leaves, (m/4π, q/2π) {}, max |E(u_n)/8π − 1| {worst:.1e}", tree.leaves, masses.join(" ")),
    )
}

fn random_measure(rng: &mut ChaCha8Rng) -> (DiskMeasure, f64) {
    let p = rng.gen_range(1.0..3.0);
    let total = rng.gen_range(0.02..0.95) * 4.0 * PI / p;
    let k = rng.gen_range(1..=3usize);
    let with_density = rng.gen_bool(0.2);
    let parts = k + usize::from(with_density);
    let mut w: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x *= total / s);
    let atoms: Vec<(C64, f64)> = (0..k)
        .map(|i| (C64::from_polar(rng.gen_range(0.0..0.8), rng.gen_range(0.0..2.0 * PI)), w[i]))
        .collect();
    let density = with_density.then(|| {
        let grid = DiskGrid { nr: 6, nt: 12 };
        let shift = C64::from_polar(rng.gen_range(0.0..0.5), rng.gen_range(0.0..2.0 * PI));
        let raw = grid.sample(|z| (-4.0 * (z - shift).norm_sqr()).exp());
        let m = grid.integrate(&raw);
        let v = raw.iter().map(|x| x * w[k] / m).collect();
        (grid, v)
    });
    (DiskMeasure::new(atoms, density).unwrap(), p)
}

fn potential_toolkit() -> Outcome {
    let mu = DiskMeasure::new(vec![(c(0.0, 0.0), PI)], None).unwrap();
    let r = p1_check(&mu, 1.0).unwrap();
    let ineq = &r.inequalities[0];
    let mut ok = r.pass && rel(ineq.lhs, 4.0 * PI / 3.0) <= 1e-4 && rel(ineq.rhs, 11.847) <= 1e-4;
    let grid = DiskGrid::default();
    let constant = p2_check(&|_| 0.7, &grid, c(0.0, 0.0)).unwrap();
    let mv = &constant.inequalities[0];
    ok &= rel(mv.lhs, mv.rhs) <= 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut violations = 0;
    for _ in 0..500 {
        let (m, p) = random_measure(&mut rng);
        if !p1_check(&m, p).unwrap().pass {
            violations += 1;
        }
    }
    ok &= violations == 0;
    let harmonic = key_lemma_check(&|z: C64| (c(0.3, -0.2) * z).re + 0.1, &grid, 2.0).unwrap();
    let (lam, rad) = (0.1, 0.05);
    let bubble_log = |z: C64| {
        let s = 1.0 + rad * rad * z.norm_sqr() / (lam * lam);
        (4.0 * rad * rad / (lam * lam * s * s)).ln()
    };
    let near = key_lemma_check(&bubble_log, &grid, 2.0).unwrap();
    ok &= harmonic.pass && near.pass;
    (
        ok,
        format!(
            "atom π: lhs {:.6} rhs {:.4}; constant mean value defect {:.1e}; {violations}/500 random violations; key lemma harmonic {} (κ {:.1e}), near-bubbling {} (κ {:.4})",
            ineq.lhs,
            ineq.rhs,
            rel(mv.lhs, mv.rhs),
            harmonic.pass,
            harmonic.kappa,
            near.pass,
            near.kappa
        ),
    )
}

fn invariance() -> Outcome {
    let rescaled = DomainSurface::Rescaled {
        amplitude: 0.3,
        axis: [0.36, 0.48, 0.8],
    };
    let mut drift: f64 = 0.0;
    let maps: Vec<(MapRef, KahlerTarget)> = vec![
        (share(ProjectiveCurve::identity()), sphere()),
        (share(ProjectiveCurve::monomial(2)), sphere()),
        (share(rational_example()), sphere()),
        (share(veronese(2).unwrap()), fs2()),
    ];
    for (m, t) in &maps {
        let r = conformal_invariance_check(m.as_ref(), &ROUND, &rescaled, t, &spec(256)).unwrap();
        drift = drift.max(r.drift_energy).max(r.drift_q_plus);
    }
    let fam = MapFamily::shrinking_identity(c(0.0, 0.0), LambdaSchedule::default(), DEFAULT_SCHEDULE.to_vec()).unwrap();
    let tree = build_tree(&fam, &BubbleConfig::default(), &ROUND, &sphere()).unwrap();
    let cons = tree
        .nodes
        .iter()
        .flat_map(|n| n.renormalizations.iter())
        .map(|r| r.e_conservation.max(r.q_conservation))
        .fold(0.0, f64::max);
    let present = tree.nodes.iter().all(|n| !n.renormalizations.is_empty());
    (
        drift <= 1e-4 && cons <= 1e-6 && present,
        format!("max conformal drift {drift:.1e}; max renormalisation defect {cons:.1e}"),
    )
}

fn bound_suite() -> Outcome {
    let mut violations = 0usize;
    let mut sigma_bad = 0usize;
    let mut points = 0usize;
    for (_, m, t, _) in shipped_maps() {
        let pts = sample_grid(64);
        let reps = density_field(m.as_ref(), &ROUND, &t, &pts).unwrap();
        points += reps.len();
        for r in &reps {
            let scale = 1.0 + SQRT_2 * r.omega_norm * r.e;
            if r.cs_margin.0.min(r.cs_margin.1) < -1e-9 * scale {
                violations += 1;
            }
            if let Some(s) = r.sigma {
                if !(-1e-9..=0.5 + 1e-9).contains(&s) {
                    sigma_bad += 1;
                }
            }
        }
    }
    // E ≥ 4π/H with equality for the round identity, E ≥ √2π/max|Ω|
    let mut failures: Vec<&str> = Vec::new();
    let mut identity_gap = f64::NAN;
    for (name, m, t, centers) in shipped_maps() {
        if m.is_constant() || matches!(t, KahlerTarget::Curve(CurveMetric::Flat)) {
            continue;
        }
        // concentrated members need the singular rule at their centres
        let bumps: Vec<Disk> = centers.iter().map(|p| Disk::new(*p, 0.2)).collect();
        let energy = totals_with_bumps(m.as_ref(), &ROUND, &t, &spec(256), &bumps, &DiskRule::default()).unwrap().energy;
        let r = energy_bounds_from(energy, m.kind(), &t, 1e-6).unwrap();
        let mut ok = r.pass && r.energy >= r.curvature_bound * (1.0 - 1e-6);
        if let Some(h) = r.holomorphic_bound {
            ok &= r.energy >= h * (1.0 - 1e-6);
            if name == "identity" {
                identity_gap = rel(r.energy, h);
            }
        }
        if !ok && !failures.contains(&name) {
            failures.push(name);
        }
    }
    let mut bounds_ok = failures.is_empty();
    bounds_ok &= identity_gap <= 1e-6;
    // maps into a line have σ ≡ 0
    let mut line_sigma: f64 = 0.0;
    let lines: Vec<(MapRef, KahlerTarget)> = vec![
        (share(veronese(1).unwrap()), KahlerTarget::FubiniStudy { dim: 1, c: 1.0 }),
        (line_composite(), fs2()),
    ];
    for (m, t) in &lines {
        for r in density_field(m.as_ref(), &ROUND, t, &sample_grid(64)).unwrap() {
            line_sigma = line_sigma.max(r.sigma.unwrap_or(f64::INFINITY).abs());
        }
    }
    let ok = violations == 0 && sigma_bad == 0 && bounds_ok && line_sigma <= 1e-8;
    (
        ok,
        format!(
            "{violations} Cauchy–Schwarz violations and {sigma_bad} σ out of range over {points} points; energy bounds {}; identity |E/(4π/H) − 1| {identity_gap:.1e}; max σ into a line {line_sigma:.1e}",
            if failures.is_empty() { "hold".to_string() } else { format!("fail for {}", failures.join(", ")) }
        ),
    )
}

fn regularity_dichotomy() -> Outcome {
    let fam = MapFamily::shrinking_identity(c(0.0, 0.0), LambdaSchedule::default(), DEFAULT_SCHEDULE.to_vec()).unwrap();
    let grid = DiskGrid { nr: 48, nt: 96 };
    let good = regularity_diagnostic(&fam, &ROUND, &sphere(), ChartPoint::north(c(0.5, 0.0)), 0.2, 2.0, &grid).unwrap();
    let bad = regularity_diagnostic(&fam, &ROUND, &sphere(), ChartPoint::north(c(0.0, 0.0)), 0.2, 2.0, &grid).unwrap();
    let good_lp: Vec<f64> = good.rows.iter().map(|r| r.lp_half).collect();
    let bounded = good_lp.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let max_kappa = good.rows.iter().map(|r| r.kappa_bound).fold(0.0, f64::max);
    let bad_last = bad.rows.last().unwrap();
    let blowup = bad_last.lp_half / bad.rows[0].lp_half;
    let ok = good.hypothesis_everywhere && good.lemma_everywhere && bounded && bad.rows.iter().all(|r| !r.hypothesis) && blowup > 10.0;
    (
        ok,
        format!(
            "good disk: hypothesis and key lemma hold at every n, max 4(∫q₊ + ½∫|K|) {max_kappa:.4} < 2π, half-disk L² norm {:.2e} → {:.2e}; bubbling disk: ∫q₊ + ½∫|K| = {:.4} ≥ π/2 at the last n, L² norm grows ×{blowup:.1e}",
            good_lp[0],
            good_lp.last().unwrap(),
            bad_last.q_plus + bad_last.half_domain_curvature
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("energy quantization", energy_quantization),
        ("ramification equality and 2π floor", ramification_equality),
        ("Bochner residual rates", bochner_rates),
        ("single bubble", single_bubble),
        ("two bubbles", two_bubbles),
        ("potential toolkit", potential_toolkit),
        ("invariance", invariance),
        ("bound suite", bound_suite),
        ("small-curvature regularity dichotomy", regularity_dichotomy),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {:<38} {} ({:.1} s): {detail}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
