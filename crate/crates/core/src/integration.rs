//! Integrals over the sphere and over small disks, global totals and the
//! global checks built on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::densities::{density_at, positive_parts, DensityReport};
use crate::geometry::{ChartPoint, DomainSurface, KahlerTarget};
use crate::maps::{ramification, Conjugate, MapKind, MapRef, ProjectiveCurve, SmoothMap};
use crate::quadrature::{chart_distance, chart_rings, cutoff, sum_rings, DiskRule, QuadratureSpec};
use crate::{Error, Result};

use std::f64::consts::PI;

/// `∫ f dVol` with the chart rule.
pub fn integrate<F>(f: F, domain: &DomainSurface, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&ChartPoint) -> Result<f64> + Sync,
{
    spec.validate()?;
    let rings = chart_rings(spec);
    let [v] = sum_rings(&rings, |p| Ok([f(p)? * domain.conformal_factor(p)]))?;
    Ok(v)
}

/// Disk or annulus `r_in ≤ |z − c| ≤ r_out`, measured in the chart of `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: ChartPoint,
    pub r_in: f64,
    pub r_out: f64,
}

impl Disk {
    pub fn new(center: ChartPoint, radius: f64) -> Self {
        Disk {
            center,
            r_in: 0.0,
            r_out: radius,
        }
    }

    pub fn annulus(center: ChartPoint, r_in: f64, r_out: f64) -> Self {
        Disk { center, r_in, r_out }
    }

    pub fn contains(&self, p: &ChartPoint) -> bool {
        let d = chart_distance(p, &self.center);
        d >= self.r_in && d <= self.r_out
    }
}

/// Vector-valued density integral over a disk or annulus with the singular
/// polar rule.
pub fn integrate_disk_n<const K: usize, F>(f: F, domain: &DomainSurface, disk: &Disk, rule: &DiskRule) -> Result<[f64; K]>
where
    F: Fn(&ChartPoint) -> Result<[f64; K]> + Sync,
{
    let rings = rule.rings(&disk.center, disk.r_in, disk.r_out);
    sum_rings(&rings, |p| {
        let g = domain.conformal_factor(p);
        Ok(f(p)?.map(|v| v * g))
    })
}

/// Whole-sphere integral with concentration handled by a partition of
/// unity: the chart rule sees `f·(1 − Σχ_i)` and each `f·χ_i` is integrated
/// by the singular polar rule on its disk. `χ_i` equals one on
/// `D(c_i, ρ_i/2)` and vanishes outside `D(c_i, ρ_i)`; disks must be disjoint.
pub fn integrate_sphere_n<const K: usize, F>(
    f: F,
    domain: &DomainSurface,
    spec: &QuadratureSpec,
    bumps: &[Disk],
    rule: &DiskRule,
) -> Result<[f64; K]>
where
    F: Fn(&ChartPoint) -> Result<[f64; K]> + Sync,
{
    spec.validate()?;
    for (i, a) in bumps.iter().enumerate() {
        for b in &bumps[i + 1..] {
            let d = chart_distance(&b.center, &a.center);
            if d < a.r_out + b.r_out && a.center.chart == b.center.chart {
                return Err(Error::InvalidInput("partition disks overlap".into()));
            }
        }
    }
    let weight = |p: &ChartPoint| -> f64 {
        let s: f64 = bumps.iter().map(|d| cutoff(chart_distance(p, &d.center), d.r_out)).sum();
        1.0 - s
    };
    let rings = chart_rings(spec);
    let mut total = sum_rings(&rings, |p| {
        let w = weight(p);
        if w == 0.0 {
            return Ok([0.0; K]);
        }
        let g = domain.conformal_factor(p);
        Ok(f(p)?.map(|v| v * g * w))
    })?;
    for d in bumps {
        let part = integrate_disk_n(
            |p| {
                let chi = cutoff(chart_distance(p, &d.center), d.r_out);
                if chi == 0.0 {
                    return Ok([0.0; K]);
                }
                Ok(f(p)?.map(|v| v * chi))
            },
            domain,
            &Disk::new(d.center, d.r_out),
            rule,
        )?;
        for k in 0..K {
            total[k] += part[k];
        }
    }
    Ok(total)
}

/// Energy and curvature totals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "Q_plus_holo")]
    pub q_plus_holo: f64,
    #[serde(rename = "Q_plus_anti")]
    pub q_plus_anti: f64,
    #[serde(rename = "Q_plus")]
    pub q_plus: f64,
}

impl Totals {
    fn from_array(v: [f64; 3]) -> Self {
        Totals {
            energy: v[0],
            q_plus_holo: v[1],
            q_plus_anti: v[2],
            q_plus: v[1] + v[2],
        }
    }
}

fn total_integrand(r: &DensityReport) -> [f64; 3] {
    let (a, b, _) = positive_parts(r.q_holo, r.q_anti);
    [r.e, a, b]
}

pub fn totals(m: &dyn SmoothMap, domain: &DomainSurface, target: &KahlerTarget, spec: &QuadratureSpec) -> Result<Totals> {
    totals_with_bumps(m, domain, target, spec, &[], &DiskRule::default())
}

/// Totals with the partition-of-unity treatment of concentration points.
pub fn totals_with_bumps(
    m: &dyn SmoothMap,
    domain: &DomainSurface,
    target: &KahlerTarget,
    spec: &QuadratureSpec,
    bumps: &[Disk],
    rule: &DiskRule,
) -> Result<Totals> {
    if m.is_constant() {
        return Ok(Totals::from_array([0.0; 3]));
    }
    let v = integrate_sphere_n(
        |p| Ok(total_integrand(&density_at(m, domain, target, p)?)),
        domain,
        spec,
        bumps,
        rule,
    )?;
    Ok(Totals::from_array(v))
}

/// `(E, Q′₊, Q″₊)` restricted to a disk or annulus.
pub fn disk_totals(m: &dyn SmoothMap, domain: &DomainSurface, target: &KahlerTarget, disk: &Disk, rule: &DiskRule) -> Result<Totals> {
    if m.is_constant() {
        return Ok(Totals::from_array([0.0; 3]));
    }
    let v = integrate_disk_n(
        |p| Ok(total_integrand(&density_at(m, domain, target, p)?)),
        domain,
        disk,
        rule,
    )?;
    Ok(Totals::from_array(v))
}

/// Summary serialised by the command line front end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationReport {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "Q_plus_holo")]
    pub q_plus_holo: f64,
    #[serde(rename = "Q_plus_anti")]
    pub q_plus_anti: f64,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub grid: QuadratureSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime: Option<f64>,
}

/// Ramification bound for a ±holomorphic rational sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    /// `Q′₊` (or `Q″₊` for the antiholomorphic mirror).
    pub q_plus: f64,
    pub bound: f64,
    pub slack: f64,
    pub relative_slack: f64,
    pub multiplicities: Vec<(ChartPoint, usize)>,
    pub total_multiplicity: usize,
    pub genus: u32,
    /// `Q ≥ 2π` for spheres.
    pub floor_holds: bool,
    pub pass: bool,
}

/// Check `Q′₊ ≥ π(Σr′_i + 2 − 2ϱ)` for a rational map, or the mirrored
/// statement with `Q″₊` for its conjugate when `antiholomorphic` is set.
pub fn theorem1_check(
    m: &ProjectiveCurve,
    domain: &DomainSurface,
    target: &KahlerTarget,
    spec: &QuadratureSpec,
    antiholomorphic: bool,
    tolerance: f64,
) -> Result<Theorem1Report> {
    let ram = ramification(m)?;
    let total_multiplicity: usize = ram.iter().map(|r| r.1).sum();
    let genus = domain.genus();
    let bound = PI * (total_multiplicity as f64 + 2.0 - 2.0 * genus as f64);
    let (q, multiplicities) = if antiholomorphic {
        let conj = Conjugate(Arc::new(m.clone()));
        let t = totals(&conj, domain, target, spec)?;
        let mirrored = ram
            .into_iter()
            .map(|(p, k)| (ChartPoint::new(p.chart, p.coord.conj()), k))
            .collect();
        (t.q_plus_anti, mirrored)
    } else {
        (totals(m, domain, target, spec)?.q_plus_holo, ram)
    };
    let slack = q - bound;
    let floor_holds = genus != 0 || q >= 2.0 * PI * (1.0 - tolerance);
    Ok(Theorem1Report {
        q_plus: q,
        bound,
        slack,
        relative_slack: slack / q,
        multiplicities,
        total_multiplicity,
        genus,
        floor_holds,
        pass: slack >= -tolerance * q && floor_holds,
    })
}

/// Energy lower bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBoundsReport {
    pub energy: f64,
    pub max_omega: f64,
    /// `√2π/max|Ω|`.
    pub curvature_bound: f64,
    /// `4π/H` for ±holomorphic maps.
    pub holomorphic_bound: Option<f64>,
    /// `4π/c` for Fubini–Study targets.
    pub fubini_study_bound: Option<f64>,
    pub pass: bool,
}

pub fn energy_bounds_check(
    m: &dyn SmoothMap,
    domain: &DomainSurface,
    target: &KahlerTarget,
    spec: &QuadratureSpec,
    tolerance: f64,
) -> Result<EnergyBoundsReport> {
    if m.is_constant() {
        return Err(Error::Precondition("energy bounds need a non-constant map".into()));
    }
    let energy = totals(m, domain, target, spec)?.energy;
    energy_bounds_from(energy, m.kind(), target, tolerance)
}

pub fn energy_bounds_from(energy: f64, kind: MapKind, target: &KahlerTarget, tolerance: f64) -> Result<EnergyBoundsReport> {
    let max_omega = target.max_curvature_norm();
    let curvature_bound = if max_omega > 0.0 {
        std::f64::consts::SQRT_2 * PI / max_omega
    } else {
        f64::INFINITY
    };
    let holo = kind != MapKind::General;
    let h = target.holomorphic_curvature_bound();
    let holomorphic_bound = (holo && h > 0.0).then(|| 4.0 * PI / h);
    let fubini_study_bound = match target {
        KahlerTarget::FubiniStudy { c, .. } => Some(4.0 * PI / c),
        _ => None,
    };
    let ok = |b: f64| energy >= b * (1.0 - tolerance);
    // on flat targets there is no curvature bound; non-constant maps still pass
    let pass = (max_omega == 0.0 || ok(curvature_bound))
        && holomorphic_bound.is_none_or(ok)
        && fubini_study_bound.is_none_or(ok);
    Ok(EnergyBoundsReport {
        energy,
        max_omega,
        curvature_bound,
        holomorphic_bound,
        fubini_study_bound,
        pass,
    })
}

/// Drift of `E` and `Q₊` under `g ↦ e^{2φ} g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport {
    pub base: Totals,
    pub rescaled: Totals,
    pub drift_energy: f64,
    pub drift_q_plus: f64,
}

pub fn conformal_invariance_check(
    m: &dyn SmoothMap,
    domain: &DomainSurface,
    rescaled: &DomainSurface,
    target: &KahlerTarget,
    spec: &QuadratureSpec,
) -> Result<ConformalReport> {
    let base = totals(m, domain, target, spec)?;
    let other = totals(m, rescaled, target, spec)?;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    Ok(ConformalReport {
        drift_energy: rel(base.energy, other.energy),
        drift_q_plus: rel(base.q_plus, other.q_plus),
        base,
        rescaled: other,
    })
}

/// Stabilisation verdict of a sequence of disk masses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomStatus {
    Stabilized,
    Vanishing,
    NotStabilizing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomFit {
    pub mass: Option<f64>,
    pub status: AtomStatus,
    pub last: f64,
    /// Relative change between the last two entries.
    pub last_change: f64,
}

/// Extract an atom mass from `(n, radius, mass)` samples.
///
/// Stabilised sequences report their last value; masses decaying like the
/// disk area report 0; anything else is flagged without a number.
pub fn atom_fit(samples: &[(usize, f64, f64)], tolerance: f64) -> Result<AtomFit> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("atom fit needs at least two samples".into()));
    }
    let masses: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let last = *masses.last().unwrap();
    let prev = masses[masses.len() - 2];
    let scale = masses.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let last_change = if last == prev { 0.0 } else { (last - prev).abs() / last.abs().max(prev.abs()) };
    if scale == 0.0 {
        return Ok(AtomFit {
            mass: Some(0.0),
            status: AtomStatus::Vanishing,
            last,
            last_change: 0.0,
        });
    }
    let area_ratio: Vec<f64> = samples.iter().map(|s| s.2 / (s.1 * s.1)).collect();
    let k = area_ratio.len();
    let ratio_change = (area_ratio[k - 1] - area_ratio[k - 2]).abs() / area_ratio[k - 1].abs().max(area_ratio[k - 2].abs()).max(f64::MIN_POSITIVE);
    let shrinking = samples[k - 1].1 < samples[k - 2].1;
    if shrinking && last.abs() <= 0.1 * scale && ratio_change <= 0.5 {
        return Ok(AtomFit {
            mass: Some(0.0),
            status: AtomStatus::Vanishing,
            last,
            last_change,
        });
    }
    if last_change <= tolerance && last.abs() > 0.01 * scale {
        return Ok(AtomFit {
            mass: Some(last),
            status: AtomStatus::Stabilized,
            last,
            last_change,
        });
    }
    Ok(AtomFit {
        mass: None,
        status: AtomStatus::NotStabilizing,
        last,
        last_change,
    })
}

pub fn atom_csv(samples: &[(usize, f64, f64)]) -> String {
    let mut s = String::from("n,radius,mass\n");
    for (n, r, m) in samples {
        s.push_str(&format!("{n},{r},{m}\n"));
    }
    s
}

/// Shared handle conversion for APIs taking owned maps.
pub fn share<M: SmoothMap + 'static>(m: M) -> MapRef {
    Arc::new(m)
}
