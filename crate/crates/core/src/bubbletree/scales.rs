//! Concentration scales around one bubble point: `ε_n`, the centre of
//! mass `c_n`, the bubble scale `λ_n`, renormalisation and the partition
//! into base, neck and bubble regions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cone::{cone_extension, TargetPoint};
use crate::densities::energy_parts;
use crate::geometry::{Chart, ChartPoint, DomainSurface, KahlerTarget, Mobius};
use crate::integration::{disk_totals, integrate_disk_n, Disk, Totals};
use crate::maps::{MapRef, Pullback, SmoothMap};
use crate::quadrature::DiskRule;
use crate::{Error, Result, C64};

/// Energy density `e = e′ + e″` at `p`.
pub fn energy_density(m: &dyn SmoothMap, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<f64> {
    let j = m.jet(p)?;
    let (a, b) = energy_parts(&j, domain, target, p)?;
    let e = a + b;
    if !e.is_finite() {
        return Err(Error::NonFinite {
            chart: p.chart,
            re: p.coord.re,
            im: p.coord.im,
        });
    }
    Ok(e)
}

fn disk_energy(m: &dyn SmoothMap, domain: &DomainSurface, target: &KahlerTarget, disk: &Disk, rule: &DiskRule) -> Result<f64> {
    if m.is_constant() {
        return Ok(0.0);
    }
    let [e] = integrate_disk_n(|p| Ok([energy_density(m, domain, target, p)?]), domain, disk, rule)?;
    Ok(e)
}

/// Cheaper rule for the smooth limit map.
fn smooth_rule(rule: &DiskRule) -> DiskRule {
    DiskRule {
        angles: rule.angles.min(64),
        inner_fraction: 1e-8,
        ..*rule
    }
}

/// Largest `ε ≤ cap` with `∫_{D(x, 2ε)} e(u) ≤ m/(16n²)`, by bisection.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_n(
    limit: &dyn SmoothMap,
    x: &ChartPoint,
    n: usize,
    mass: f64,
    cap: f64,
    domain: &DomainSurface,
    target: &KahlerTarget,
    rule: &DiskRule,
) -> Result<f64> {
    let cap = cap.min(1.0 / n as f64);
    let threshold = mass / (16.0 * (n * n) as f64);
    let rule = smooth_rule(rule);
    let f = |eps: f64| disk_energy(limit, domain, target, &Disk::new(*x, 2.0 * eps), &rule);
    if f(cap)? <= threshold {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? <= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(lo)
}

/// Energy-weighted centre of `disk`, in the chart of its centre.
pub fn center_of_mass(
    m: &dyn SmoothMap,
    disk: &Disk,
    domain: &DomainSurface,
    target: &KahlerTarget,
    rule: &DiskRule,
) -> Result<ChartPoint> {
    let c = disk.center.coord;
    let [e, x, y] = integrate_disk_n(
        |p| {
            let e = energy_density(m, domain, target, p)?;
            let d = p.coord - c;
            Ok([e, e * d.re, e * d.im])
        },
        domain,
        disk,
        rule,
    )?;
    if !(e > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    Ok(ChartPoint::new(disk.center.chart, c + C64::new(x, y) / e))
}

/// Largest `λ < ε` with `∫_{D(c,ε)∖D(c,λ)} e(u) ≥ C_R`.
///
/// The annulus mass decreases in `λ`, so the threshold is attained at a
/// single root, bracketed on the geometric panels of `rule` and refined by
/// bisection in `log λ`.
pub fn lambda_n(
    m: &dyn SmoothMap,
    c: &ChartPoint,
    eps: f64,
    c_r: f64,
    domain: &DomainSurface,
    target: &KahlerTarget,
    rule: &DiskRule,
) -> Result<f64> {
    let lo = eps * rule.inner_fraction;
    let panels = (((eps / lo).log10() * rule.panels_per_decade as f64).ceil() as usize).max(1);
    let ratio = (eps / lo).powf(1.0 / panels as f64);
    let mut bounds: Vec<f64> = (0..panels).map(|k| lo * ratio.powi(k as i32)).collect();
    bounds.push(eps);
    let one_panel = DiskRule {
        panels_per_decade: 1,
        inner_fraction: 0.0,
        ..*rule
    };
    // subintervals of one panel span less than a decade: a single GL panel
    let piece = |a: f64, b: f64| disk_energy(m, domain, target, &Disk::annulus(*c, a, b), &one_panel);
    let masses: Vec<f64> = (0..panels).map(|k| piece(bounds[k], bounds[k + 1])).collect::<Result<_>>()?;
    let total: f64 = masses.iter().sum();
    if total < c_r {
        return Err(Error::NoConcentration {
            available: total,
            required: c_r,
        });
    }
    // suffix[k] = mass of [bounds[k], ε]
    let mut suffix = vec![0.0; panels + 1];
    for k in (0..panels).rev() {
        suffix[k] = suffix[k + 1] + masses[k];
    }
    let k = (0..panels).rev().find(|&k| suffix[k] >= c_r).unwrap();
    let (mut a, mut b) = (bounds[k], bounds[k + 1]);
    let top = bounds[k + 1];
    for _ in 0..80 {
        let mid = (a * b).sqrt();
        let mass = piece(mid, top)? + suffix[k + 1];
        if mass >= c_r {
            a = mid;
        } else {
            b = mid;
        }
        if b / a - 1.0 < 1e-13 {
            break;
        }
    }
    Ok(a)
}

/// `w ↦ u(λw + c)` with `c` given in either chart.
pub fn renormalize(m: MapRef, lambda: f64, c: &ChartPoint) -> Result<MapRef> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput("renormalisation scale must be positive".into()));
    }
    let affine = Mobius::affine(C64::new(lambda, 0.0), c.coord);
    let mobius = match c.chart {
        Chart::North => affine,
        Chart::South => Mobius::inversion().compose(&affine),
    };
    Ok(Arc::new(Pullback { inner: m, mobius }))
}

/// Diagnostics of one renormalisation `ũ_n = u_n(λ_n · + c_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormalizationReport {
    pub n: usize,
    /// Radius `ε_n/λ_n` of the renormalised disk `S_n`.
    pub s_radius: f64,
    pub e_renormalized: f64,
    pub q_renormalized: f64,
    /// Relative change-of-variables defects for `e` and `q₊`.
    pub e_conservation: f64,
    pub q_conservation: f64,
    /// Energy of `ũ_n` on `S_n ∖ D(0,1)`; equals `C_R` by construction.
    pub mass_outside_unit: f64,
    /// Modulus of the energy centre of `ũ_n` on `S_n`.
    pub center_offset: f64,
}

/// One index of the base/neck/bubble decomposition around a bubble point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub n: usize,
    pub eps_n: f64,
    pub c_n: ChartPoint,
    pub lambda_n: f64,
    pub e_total: f64,
    pub e_base: f64,
    pub e_bubble: f64,
    pub e_neck: f64,
    pub q_total: f64,
    pub q_base: f64,
    pub q_bubble: f64,
    pub q_neck: f64,
    pub neck_diameter: f64,
    pub cone_energy: f64,
    pub cone_q_plus: f64,
    /// Largest distance from the limit value to the outer neck boundary.
    pub cone_ball_radius: f64,
    /// Relative defect of `E_base + E_bubble + E_neck = E_total`.
    pub sum_defect: f64,
    /// `λ_n ≤ ε_n/n²`.
    pub lambda_rate_ok: bool,
    /// `|c_n − x| ≤ ε_n/(2n²)`.
    pub center_rate_ok: bool,
    /// `Q_neck ≤ 2√2·max|Ω|·E_neck`.
    pub neck_bound_ok: bool,
}

pub const PARTITION_CSV_HEADER: &str = "node,n,eps_n,c_chart,c_re,c_im,lambda_n,E_total,E_base,E_bubble,E_neck,Q_total,Q_base,Q_bubble,Q_neck,neck_diameter,cone_energy,cone_q_plus,sum_defect";

impl PartitionReport {
    pub fn csv_row(&self, node: &str) -> String {
        format!(
            "{node},{},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.n,
            self.eps_n,
            self.c_n.chart.tag(),
            self.c_n.coord.re,
            self.c_n.coord.im,
            self.lambda_n,
            self.e_total,
            self.e_base,
            self.e_bubble,
            self.e_neck,
            self.q_total,
            self.q_base,
            self.q_bubble,
            self.q_neck,
            self.neck_diameter,
            self.cone_energy,
            self.cone_q_plus,
            self.sum_defect
        )
    }
}

/// Everything a partition needs beyond the map itself.
pub struct PartitionInput<'a> {
    pub n: usize,
    pub location: ChartPoint,
    pub eps: f64,
    pub center: ChartPoint,
    pub lambda: f64,
    /// Value of the limit map at the bubble point.
    pub limit_value: TargetPoint,
    /// Region total and the contribution of everything outside this
    /// point's partition disk (other bumps and the outer chart rule).
    pub region_total: Totals,
    pub outside_bump: Totals,
    /// Radius of this point's partition-of-unity bump (`χ ≡ 1` on half of it).
    pub bump_radius: f64,
    pub domain: &'a DomainSurface,
    pub target: &'a KahlerTarget,
    pub rule: &'a DiskRule,
    pub max_omega: f64,
    pub cone_samples: usize,
}

/// Base/neck/bubble decomposition and its diagnostics.
pub fn partition(m: &dyn SmoothMap, inp: &PartitionInput) -> Result<PartitionReport> {
    let n = inp.n;
    let (eps, lambda) = (inp.eps, inp.lambda);
    let r_bubble = n as f64 * lambda;
    if r_bubble >= eps {
        return Err(Error::ScalesNotSeparated {
            bubble_radius: r_bubble,
            neck_radius: eps,
        });
    }
    let c = inp.center;
    let bubble = disk_totals(m, inp.domain, inp.target, &Disk::new(c, r_bubble), inp.rule)?;
    let neck = disk_totals(m, inp.domain, inp.target, &Disk::annulus(c, r_bubble, eps), inp.rule)?;
    let rho = inp.bump_radius;
    let ring = integrate_disk_n(
        |p| {
            let chi = crate::quadrature::cutoff(crate::quadrature::chart_distance(p, &c), rho);
            if chi == 0.0 {
                return Ok([0.0; 2]);
            }
            let r = crate::densities::density_at(m, inp.domain, inp.target, p)?;
            Ok([r.e * chi, r.q_plus * chi])
        },
        inp.domain,
        &Disk::annulus(c, eps, rho),
        inp.rule,
    )?;
    let e_base = inp.outside_bump.energy + ring[0];
    let q_base = inp.outside_bump.q_plus + ring[1];
    let e_total = inp.region_total.energy;
    let sum_defect = (e_base + bubble.energy + neck.energy - e_total).abs() / e_total.abs().max(f64::MIN_POSITIVE);

    let neck_diameter = neck_diameter(m, inp.target, &c, r_bubble, eps)?;

    // cone over the outer neck boundary towards the limit value
    let k = inp.cone_samples;
    let samples: Vec<TargetPoint> = (0..k)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let p = ChartPoint::new(c.chart, c.coord + C64::from_polar(eps, t));
            Ok(TargetPoint::from_jet(&m.jet(&p)?))
        })
        .collect::<Result<_>>()?;
    let center_value = chart_near(inp.target, &inp.limit_value, &samples[0])?;
    let patch = cone_extension(inp.target, &samples, &center_value, eps)?;
    let (cone_energy, cone_q_plus) = patch.energy_and_curvature(inp.target, &c)?;

    let offset = crate::quadrature::chart_distance(&c, &inp.location);
    let nn = (n * n) as f64;
    Ok(PartitionReport {
        n,
        eps_n: eps,
        c_n: c,
        lambda_n: lambda,
        e_total,
        e_base,
        e_bubble: bubble.energy,
        e_neck: neck.energy,
        q_total: inp.region_total.q_plus,
        q_base,
        q_bubble: bubble.q_plus,
        q_neck: neck.q_plus,
        neck_diameter,
        cone_energy,
        cone_q_plus,
        cone_ball_radius: patch.ball_radius,
        sum_defect,
        lambda_rate_ok: lambda <= eps / nn,
        center_rate_ok: offset <= eps / (2.0 * nn),
        neck_bound_ok: neck.q_plus <= 2.0 * 2f64.sqrt() * inp.max_omega * neck.energy * (1.0 + 1e-9) + 1e-300,
    })
}

/// Express `p` in the target chart where `near` has its coordinates, so
/// the cone's geodesic chart covers the whole loop.
fn chart_near(target: &KahlerTarget, p: &TargetPoint, near: &TargetPoint) -> Result<TargetPoint> {
    Ok(TargetPoint {
        chart: near.chart,
        coords: p.in_chart(target, near.chart)?,
    })
}

/// Diameter of the image of the annulus `r_in ≤ |z − c| ≤ r_out`, sampled
/// on geometric radii.
fn neck_diameter(m: &dyn SmoothMap, target: &KahlerTarget, c: &ChartPoint, r_in: f64, r_out: f64) -> Result<f64> {
    use rayon::prelude::*;
    let (nr, nt) = (16, 32);
    let mut pts = Vec::with_capacity(nr * nt);
    for i in 0..nr {
        let r = r_in * (r_out / r_in).powf(i as f64 / (nr - 1) as f64);
        for k in 0..nt {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5 * (i % 2) as f64) / nt as f64;
            pts.push(ChartPoint::new(c.chart, c.coord + C64::from_polar(r, t)));
        }
    }
    let vals: Vec<TargetPoint> = pts
        .iter()
        .map(|p| Ok(TargetPoint::from_jet(&m.jet(p)?)))
        .collect::<Result<_>>()?;
    let rows: Vec<f64> = (0..vals.len())
        .into_par_iter()
        .map(|i| {
            vals[i + 1..]
                .iter()
                .map(|q| vals[i].distance(target, q))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(rows.into_iter().fold(0.0, f64::max))
}
