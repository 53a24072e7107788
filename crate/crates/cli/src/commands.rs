//! The four subcommands. Each returns its JSON document, the files to
//! write next to it and whether every check passed.

use std::f64::consts::PI;

use bubblelab::bubbletree::build_tree;
use bubblelab::densities::{
    bochner_convergence, density_csv, density_field, harmonic_residual, is_harmonic,
    pullback_form_check, sample_grid,
};
use bubblelab::geometry::{ChartPoint, DomainSurface, KahlerTarget};
use bubblelab::integration::{conformal_invariance_check, energy_bounds_check, theorem1_check};
use bubblelab::potential::{key_lemma_check, p1_check, p2_check, DiskGrid, DiskMeasure};
use bubblelab::C64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::scenario::{BuiltMap, Check, Overrides, RieszSpec, Scenario, ALL_CHECKS};
use crate::CliError;

pub const DENSITY_SCHEMA: &str = "bubblelab.density/1";
pub const VERIFY_SCHEMA: &str = "bubblelab.verify/1";
pub const BUBBLE_SCHEMA: &str = "bubblelab.bubble/1";
pub const RIESZ_SCHEMA: &str = "bubblelab.riesz/1";

/// Sampling resolution of the density command.
pub const DEFAULT_DENSITY_GRID: usize = 64;
/// Quadrature resolution of the verify command.
pub const DEFAULT_VERIFY_GRID: usize = 512;
/// Radial cells of the potential commands (twice as many angles).
pub const DEFAULT_RIESZ_GRID: usize = 64;

pub struct Outcome {
    pub stem: &'static str,
    pub json: Value,
    pub files: Vec<(String, String)>,
    pub pass: bool,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialise")
}

fn setup(s: &Scenario) -> Result<(DomainSurface, KahlerTarget, BuiltMap), CliError> {
    let domain = s.domain.build();
    let target = s.target.build()?;
    let m = s.require_map()?;
    if m.map.target_dim() != target.dim() {
        return Err(CliError::invalid(format!(
            "map has target dimension {} but the target has dimension {}",
            m.map.target_dim(),
            target.dim()
        )));
    }
    Ok((domain, target, m))
}

fn stats(v: impl Iterator<Item = f64>) -> Value {
    let (mut n, mut sum, mut lo, mut hi) = (0usize, 0.0, f64::INFINITY, f64::NEG_INFINITY);
    for x in v {
        n += 1;
        sum += x;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if n == 0 {
        return Value::Null;
    }
    json!({ "mean": sum / n as f64, "min": lo, "max": hi })
}

pub fn density(s: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let (domain, target, m) = setup(s)?;
    let n = ov.grid.or(s.analysis.grid).unwrap_or(DEFAULT_DENSITY_GRID);
    if n < 2 {
        return Err(CliError::invalid("density grid must be at least 2"));
    }
    let points = sample_grid(n);
    let reports = density_field(m.map.as_ref(), &domain, &target, &points)?;
    // the equator |z| = 1 is shared by both charts
    let seam: Vec<ChartPoint> = (0..64)
        .map(|k| ChartPoint::north(C64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0)))
        .collect();
    let seam_reports = density_field(m.map.as_ref(), &domain, &target, &seam)?;
    let json = json!({
        "schema": DENSITY_SCHEMA,
        "scenario": s.name,
        "map": m.map.describe(),
        "grid": n,
        "points": points.len(),
        "e": stats(reports.iter().map(|r| r.e)),
        "e_holo": stats(reports.iter().map(|r| r.e_holo)),
        "e_anti": stats(reports.iter().map(|r| r.e_anti)),
        "q_holo": stats(reports.iter().map(|r| r.q_holo)),
        "q_anti": stats(reports.iter().map(|r| r.q_anti)),
        "q_plus": stats(reports.iter().map(|r| r.q_plus)),
        "sigma": stats(reports.iter().filter_map(|r| r.sigma)),
        "cs_margin_min": reports.iter().map(|r| r.cs_margin.0.min(r.cs_margin.1)).fold(f64::INFINITY, f64::min),
        "seam": {
            "points": seam.len(),
            "e_holo": stats(seam_reports.iter().map(|r| r.e_holo)),
            "e_anti": stats(seam_reports.iter().map(|r| r.e_anti)),
        },
    });
    Ok(Outcome {
        stem: "density",
        json,
        files: vec![("density.csv".into(), density_csv(&points, &reports))],
        pass: true,
    })
}

struct CheckRow {
    name: &'static str,
    /// `None` for skipped or informational rows.
    pass: Option<bool>,
    slack: Option<f64>,
    details: Value,
}

impl CheckRow {
    fn skipped(name: &'static str, why: &str) -> Self {
        CheckRow {
            name,
            pass: None,
            slack: None,
            details: json!({ "skipped": why }),
        }
    }

    fn to_json(&self) -> Value {
        let status = match self.pass {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "skipped",
        };
        json!({ "name": self.name, "status": status, "slack": self.slack, "details": self.details })
    }
}

const POINTWISE_TOL: f64 = 1e-9;

fn run_check(
    c: Check,
    m: &BuiltMap,
    domain: &DomainSurface,
    target: &KahlerTarget,
    s: &Scenario,
    ov: &Overrides,
) -> Result<CheckRow, CliError> {
    let map = m.map.as_ref();
    let tol = s.analysis.tolerance.map(|t| t.0).unwrap_or(1e-5);
    let points = sample_grid(32);
    Ok(match c {
        Check::Erels => {
            let defects: Vec<(f64, f64)> = points
                .par_iter()
                .map(|p| pullback_form_check(&map.jet(p)?, domain, target, p))
                .collect::<bubblelab::Result<_>>()?;
            let worst = defects.iter().map(|d| d.0.max(d.1)).fold(0.0, f64::max);
            CheckRow {
                name: "erels",
                pass: Some(worst <= POINTWISE_TOL),
                slack: Some(POINTWISE_TOL - worst),
                details: json!({ "points": points.len(), "max_relative_defect": worst }),
            }
        }
        Check::Cs => {
            let reps = density_field(map, domain, target, &points)?;
            let mut violations = 0usize;
            let mut worst = f64::INFINITY;
            for r in &reps {
                let scale = 1.0 + std::f64::consts::SQRT_2 * r.omega_norm * r.e;
                let margin = r.cs_margin.0.min(r.cs_margin.1) / scale;
                worst = worst.min(margin);
                if margin < -POINTWISE_TOL {
                    violations += 1;
                }
            }
            let sig = reps.iter().filter_map(|r| r.sigma);
            let bad_sigma = sig.clone().filter(|x| !(-POINTWISE_TOL..=0.5 + POINTWISE_TOL).contains(x)).count();
            CheckRow {
                name: "cs",
                pass: Some(violations == 0 && bad_sigma == 0),
                slack: Some(worst),
                details: json!({
                    "points": reps.len(),
                    "violations": violations,
                    "sigma": stats(sig),
                    "sigma_out_of_range": bad_sigma,
                }),
            }
        }
        Check::Bochner => {
            let steps: Vec<f64> = s
                .analysis
                .bochner_steps
                .as_ref()
                .map(|v| v.iter().map(|x| x.0).collect())
                .unwrap_or_else(|| vec![0.04, 0.02, 0.01, 0.005]);
            let b = bochner_convergence(map, domain, target, &steps)?;
            let finest = b.sup_residual_holo.last().copied().unwrap_or(0.0);
            CheckRow {
                name: "bochner",
                pass: Some(b.warning.is_none()),
                slack: Some(finest),
                details: to_value(&b),
            }
        }
        Check::Conformal => {
            let amplitude = s.analysis.conformal_amplitude.map(|a| a.0).unwrap_or(0.3);
            let rescaled = DomainSurface::Rescaled {
                amplitude,
                axis: [0.36, 0.48, 0.8],
            };
            if *domain != DomainSurface::Round {
                return Ok(CheckRow::skipped("conformal", "the domain is already rescaled"));
            }
            let spec = s.quadrature(ov, DEFAULT_VERIFY_GRID)?;
            let r = conformal_invariance_check(map, domain, &rescaled, target, &spec)?;
            let worst = r.drift_energy.max(r.drift_q_plus);
            CheckRow {
                name: "conformal",
                pass: Some(worst <= 1e-4),
                slack: Some(1e-4 - worst),
                details: to_value(&r),
            }
        }
        Check::Theorem1 => match (&m.curve, target) {
            (None, _) => CheckRow::skipped("theorem1", "not a rational curve"),
            (Some(_), KahlerTarget::Curve(bubblelab::geometry::CurveMetric::Flat)) => {
                CheckRow::skipped("theorem1", "flat target")
            }
            (Some(curve), _) if curve.target_dim() != 1 => {
                CheckRow::skipped("theorem1", "ramification is computed for maps into CP^1")
            }
            (Some(curve), _) => {
                if map.is_constant() {
                    return Ok(CheckRow::skipped("theorem1", "constant map"));
                }
                let spec = s.quadrature(ov, DEFAULT_VERIFY_GRID)?;
                let r = theorem1_check(curve, domain, target, &spec, m.antiholomorphic, tol)?;
                CheckRow {
                    name: "theorem1",
                    pass: Some(r.pass),
                    slack: Some(r.slack),
                    details: to_value(&r),
                }
            }
        },
        Check::EnergyBounds => {
            if map.is_constant() {
                return Ok(CheckRow::skipped("energy-bounds", "constant map"));
            }
            let spec = s.quadrature(ov, DEFAULT_VERIFY_GRID)?;
            let r = energy_bounds_check(map, domain, target, &spec, tol)?;
            let slack = [Some(r.curvature_bound), r.holomorphic_bound, r.fubini_study_bound]
                .into_iter()
                .flatten()
                .filter(|b| b.is_finite())
                .map(|b| r.energy - b)
                .fold(f64::INFINITY, f64::min);
            CheckRow {
                name: "energy-bounds",
                pass: Some(r.pass),
                slack: slack.is_finite().then_some(slack),
                details: to_value(&r),
            }
        }
    })
}

pub fn verify(s: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let (domain, target, m) = setup(s)?;
    let probe = sample_grid(16);
    let residuals: Vec<(f64, bool)> = probe
        .par_iter()
        .map(|p| {
            let j = m.map.jet(p)?;
            Ok((harmonic_residual(&j, &target)?, is_harmonic(&j, &target)?))
        })
        .collect::<bubblelab::Result<_>>()?;
    let harmonic = residuals.iter().all(|r| r.1);
    let max_res = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
    let checks: Vec<Check> = s.analysis.checks.clone().unwrap_or_else(|| ALL_CHECKS.to_vec());
    let rows = if harmonic {
        checks
            .iter()
            .map(|&c| run_check(c, &m, &domain, &target, s, ov))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let pass = rows.iter().all(|r| r.pass != Some(false));
    let json = json!({
        "schema": VERIFY_SCHEMA,
        "scenario": s.name,
        "map": m.map.describe(),
        "harmonic_residual": {
            "status": if harmonic { "harmonic" } else { "not harmonic" },
            "informational": true,
            "max": max_res,
            "points": probe.len(),
        },
        "checks": rows.iter().map(CheckRow::to_json).collect::<Vec<_>>(),
        "pass": pass,
    });
    Ok(Outcome {
        stem: "verify",
        json,
        files: Vec::new(),
        pass,
    })
}

pub fn bubble(s: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let fam = s
        .family
        .as_ref()
        .ok_or_else(|| CliError::invalid("scenario: the bubble command needs a [family] table"))?;
    let family = fam.build(s.schedule(ov))?;
    let domain = s.domain.build();
    let target = s.target.build()?;
    if target.dim() != 1 {
        return Err(CliError::invalid("built-in families map into a curve target"));
    }
    let mut config = s.bubble_config()?;
    if let Some(n) = ov.grid {
        config.quadrature.n = n;
        config.quadrature.validate()?;
    }
    let tree = build_tree(&family, &config, &domain, &target)?;
    let json = json!({
        "schema": BUBBLE_SCHEMA,
        "scenario": s.name,
        "config": to_value(&config),
        "tree": to_value(&tree),
    });
    Ok(Outcome {
        stem: "bubble",
        json,
        files: vec![("partition.csv".into(), tree.partition_csv())],
        pass: tree.pass,
    })
}

pub fn riesz(s: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let spec = s
        .riesz
        .as_ref()
        .ok_or_else(|| CliError::invalid("scenario: the riesz command needs a [riesz] table"))?;
    let nr = ov.grid.or(s.analysis.grid).unwrap_or(DEFAULT_RIESZ_GRID);
    if nr < 4 {
        return Err(CliError::invalid("riesz grid must be at least 4"));
    }
    let grid = DiskGrid { nr, nt: 2 * nr };
    let (mode, report) = match spec {
        RieszSpec::P1 { atoms, p } => {
            let atoms = atoms.iter().map(|a| (a.at.value(), a.mass.0)).collect();
            let mu = DiskMeasure::new(atoms, None)?;
            ("p1", p1_check(&mu, p.0)?)
        }
        RieszSpec::P2 { w, z } => {
            let f = w.build();
            ("p2", p2_check(&*f, &grid, z.value())?)
        }
        RieszSpec::KeyLemma { phi, p } => {
            let f = phi.build();
            ("key-lemma", key_lemma_check(&*f, &grid, p.0)?)
        }
    };
    let grid_json = if mode == "p1" { Value::Null } else { json!({ "nr": grid.nr, "nt": grid.nt }) };
    let json = json!({
        "schema": RIESZ_SCHEMA,
        "scenario": s.name,
        "mode": mode,
        "grid": grid_json,
        "report": to_value(&report),
    });
    Ok(Outcome {
        stem: "riesz",
        json,
        files: Vec::new(),
        pass: report.pass,
    })
}
