//! Bubble-tree extraction for a family of maps: detection of concentration
//! points, renormalisation, the base/neck/bubble partition, recursion into
//! secondary bubbles and the energy and curvature identities.

pub mod cone;
pub mod detect;
pub mod regularity;
pub mod scales;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cone::{cone_extension, ConePatch, TargetPoint};
pub use detect::{detect_in, detect_points, refine_peak, BubblePoint, Region};
pub use regularity::{regularity_diagnostic, RegularityReport, RegularityRow};
pub use scales::{
    center_of_mass, energy_density, epsilon_n, lambda_n, partition, renormalize, PartitionInput, PartitionReport,
    RenormalizationReport, PARTITION_CSV_HEADER,
};

use crate::densities::density_at;
use crate::geometry::{ChartPoint, DomainSurface, KahlerTarget};
use crate::integration::{disk_totals, integrate_disk_n, integrate_sphere_n, totals, Disk, Totals};
use crate::maps::{MapFamily, MapRef, SmoothMap};
use crate::quadrature::{chart_distance, cutoff, DiskRule, QuadratureSpec, Rule};
use crate::{Error, Result, C64};

/// Tunable constants of the extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BubbleConfig {
    /// Renormalisation constant `C_R`.
    pub c_r: f64,
    /// Energy quantum threshold `ε*`.
    pub eps_star: f64,
    /// Overrides the family schedule when set.
    pub schedule: Option<Vec<usize>>,
    /// Coarse detection grid per chart axis.
    pub detection_grid: usize,
    /// Radius of the isolating disk around each candidate.
    pub rho: f64,
    pub mass_tolerance: f64,
    pub neck_tolerance: f64,
    /// Required growth of the peak density from first to last index.
    pub growth_ratio: f64,
    /// Allowed distance between the limit value and the outer neck boundary.
    pub meeting_tolerance: f64,
    pub quadrature: QuadratureSpec,
    pub disk_rule: DiskRule,
    pub max_depth: usize,
    pub cone_samples: usize,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        BubbleConfig {
            c_r: PI / 2.0,
            eps_star: 2.0 * PI,
            schedule: None,
            detection_grid: 48,
            rho: 0.5,
            mass_tolerance: 0.02,
            neck_tolerance: 0.01,
            growth_ratio: 4.0,
            meeting_tolerance: 0.05,
            quadrature: QuadratureSpec {
                n: 128,
                rule: Rule::Simpson,
            },
            disk_rule: DiskRule {
                angles: 64,
                ..DiskRule::default()
            },
            max_depth: 3,
            cone_samples: 32,
        }
    }
}

impl BubbleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_r > 0.0 && self.c_r < self.eps_star / 2.0) {
            return Err(Error::InvalidInput(format!(
                "need 0 < C_R < eps_star/2, got C_R = {} and eps_star = {}",
                self.c_r, self.eps_star
            )));
        }
        if let Some(s) = &self.schedule {
            if s.len() < 2 || s.windows(2).any(|w| w[0] >= w[1]) || s[0] == 0 {
                return Err(Error::InvalidInput("schedule must hold at least two strictly increasing positive indices".into()));
            }
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidInput(format!("rho = {} must lie in (0, 1]", self.rho)));
        }
        if self.detection_grid < 8 {
            return Err(Error::InvalidInput("detection grid below 8".into()));
        }
        if self.cone_samples < 4 || self.cone_samples % 2 == 1 {
            return Err(Error::InvalidInput("cone samples must be even and at least 4".into()));
        }
        self.quadrature.validate()
    }
}

/// Pass/fail verdicts of one bubble node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeChecks {
    /// `m ≥ ε*`.
    pub mass_quantum: bool,
    /// `q ≥ 2π` up to the mass tolerance.
    pub curvature_quantum: bool,
    /// `q ≥ π/2`: the detection-level curvature threshold.
    pub curvature_detection: bool,
    /// Neck masses at the final index within the neck tolerance.
    pub neck_energy_small: bool,
    pub neck_curvature_small: bool,
    /// `η ≤ 2√2·max|Ω|·ν` at every index.
    pub neck_curvature_bound: bool,
    /// `λ_n ≤ ε_n/n²` and `|c_n − x| ≤ ε_n/(2n²)` at every index.
    pub scale_rates: bool,
    /// Region sums reproduce totals (1e-6 relative) at every index.
    pub partition_sums: bool,
    /// Renormalisation conserves `e` and `q₊` (1e-6 relative).
    pub mass_conservation: bool,
    pub neck_diameter_decreasing: bool,
    /// Limit value and outer neck boundary meet.
    pub bubbles_meet: bool,
    /// Every secondary mass is at least `ε*`.
    pub secondary_masses: bool,
}

impl NodeChecks {
    pub fn all(&self) -> bool {
        self.mass_quantum
            && self.curvature_quantum
            && self.curvature_detection
            && self.neck_energy_small
            && self.neck_curvature_small
            && self.neck_curvature_bound
            && self.scale_rates
            && self.partition_sums
            && self.mass_conservation
            && self.neck_diameter_decreasing
            && self.bubbles_meet
            && self.secondary_masses
    }
}

/// One bubble with its neck data and secondary bubbles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleNode {
    pub location: ChartPoint,
    pub depth: usize,
    pub m: f64,
    pub q: f64,
    pub nu: f64,
    pub eta: f64,
    pub children: Vec<BubbleNode>,
    /// Description of the renormalised map at the final index.
    pub bubble: String,
    pub bubble_energy: f64,
    pub bubble_q_plus: f64,
    pub meeting_distance: f64,
    pub detection: BubblePoint,
    pub partitions: Vec<PartitionReport>,
    pub renormalizations: Vec<RenormalizationReport>,
    pub checks: NodeChecks,
    pub flags: Vec<String>,
}

impl BubbleNode {
    pub fn leaves(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(|c| c.leaves()).sum()
        }
    }

    fn all_checks(&self) -> bool {
        self.checks.all() && self.children.iter().all(|c| c.all_checks())
    }

    fn collect_flags(&self, path: &str, out: &mut Vec<String>) {
        for f in &self.flags {
            out.push(format!("{path}: {f}"));
        }
        for (j, c) in self.children.iter().enumerate() {
            c.collect_flags(&format!("{path}.{j}"), out);
        }
    }

    fn csv_rows(&self, path: &str, out: &mut String) {
        for p in &self.partitions {
            out.push_str(&p.csv_row(path));
            out.push('\n');
        }
        for (j, c) in self.children.iter().enumerate() {
            c.csv_rows(&format!("{path}.{j}"), out);
        }
    }
}

/// Energy and curvature identity at one index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub n: usize,
    pub energy: f64,
    pub q_plus: f64,
    /// `Σ_i (E_bubble + E_neck)` over top-level bubbles.
    pub bubble_energy: f64,
    pub bubble_q_plus: f64,
    /// `E(u_n) − E(u) − Σ_i(ν_i + E(bubble_i))`.
    pub energy_residual: f64,
    pub q_residual: f64,
}

/// The extracted tree and its identity reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleTree {
    pub family: String,
    pub limit: String,
    pub schedule: Vec<usize>,
    pub limit_energy: f64,
    pub limit_q_plus: f64,
    pub nodes: Vec<BubbleNode>,
    pub identities: Vec<IdentityRow>,
    pub leaves: usize,
    /// `max_n E(u_n)/ε*`.
    pub bubble_count_bound: f64,
    pub energy_identity: bool,
    pub curvature_identity: bool,
    pub flags: Vec<String>,
    pub pass: bool,
}

impl BubbleTree {
    /// Per-index partition reports of every node, one row each.
    pub fn partition_csv(&self) -> String {
        let mut out = String::from(PARTITION_CSV_HEADER);
        out.push('\n');
        for (i, n) in self.nodes.iter().enumerate() {
            n.csv_rows(&i.to_string(), &mut out);
        }
        out
    }
}

/// Integration region of one tree level.
#[derive(Clone, Debug)]
enum LevelRegion {
    Sphere,
    /// `D(0, R_n)` of the north chart, per index.
    Disk(BTreeMap<usize, f64>),
}

struct Ctx<'a> {
    config: &'a BubbleConfig,
    domain: &'a DomainSurface,
    target: &'a KahlerTarget,
    max_omega: f64,
}

/// Totals over the level region and the bump contributions.
fn region_totals(m: &dyn SmoothMap, ctx: &Ctx, region: &LevelRegion, n: usize, bumps: &[Disk]) -> Result<(Totals, Vec<Totals>)> {
    let pair = |p: &ChartPoint| -> Result<[f64; 2]> {
        let r = density_at(m, ctx.domain, ctx.target, p)?;
        Ok([r.e, r.q_plus])
    };
    let rule = &ctx.config.disk_rule;
    let parts: Vec<[f64; 2]> = bumps
        .iter()
        .map(|d| {
            integrate_disk_n(
                |p| {
                    let chi = cutoff(chart_distance(p, &d.center), d.r_out);
                    if chi == 0.0 {
                        return Ok([0.0; 2]);
                    }
                    Ok(pair(p)?.map(|v| v * chi))
                },
                ctx.domain,
                &Disk::new(d.center, d.r_out),
                rule,
            )
        })
        .collect::<Result<_>>()?;
    let total: [f64; 2] = match region {
        LevelRegion::Sphere => integrate_sphere_n(pair, ctx.domain, &ctx.config.quadrature, bumps, rule)?,
        LevelRegion::Disk(radii) => {
            let r = radii[&n];
            let mut outer = integrate_disk_n(
                |p| {
                    let s: f64 = bumps.iter().map(|d| cutoff(chart_distance(p, &d.center), d.r_out)).sum();
                    if s >= 1.0 {
                        return Ok([0.0; 2]);
                    }
                    Ok(pair(p)?.map(|v| v * (1.0 - s)))
                },
                ctx.domain,
                &Disk::new(ChartPoint::north(C64::new(0.0, 0.0)), r),
                rule,
            )?;
            for p in &parts {
                outer[0] += p[0];
                outer[1] += p[1];
            }
            outer
        }
    };
    let t = |v: [f64; 2]| Totals {
        energy: v[0],
        q_plus_holo: f64::NAN,
        q_plus_anti: f64::NAN,
        q_plus: v[1],
    };
    Ok((t(total), parts.into_iter().map(t).collect()))
}

struct Scales {
    eps: f64,
    center: ChartPoint,
    lambda: f64,
}

struct IndexResult {
    n: usize,
    total: Totals,
    per_point: Vec<Result<(PartitionReport, RenormalizationReport, Scales)>>,
}

fn scales_for(u: &dyn SmoothMap, limit: &dyn SmoothMap, pt: &BubblePoint, n: usize, idx: usize, ctx: &Ctx) -> Result<Scales> {
    let cfg = ctx.config;
    let eps = epsilon_n(limit, &pt.location, n, pt.m, pt.rho, ctx.domain, ctx.target, &cfg.disk_rule)?;
    let peak = pt.track[idx].1;
    // express the peak in the chart of the bubble point
    let peak = if peak.chart == pt.location.chart { peak } else { peak.transition()? };
    let center = center_of_mass(u, &Disk::new(peak, eps), ctx.domain, ctx.target, &cfg.disk_rule)?;
    let lambda = lambda_n(u, &center, eps, cfg.c_r, ctx.domain, ctx.target, &cfg.disk_rule)?;
    Ok(Scales { eps, center, lambda })
}

fn renormalization_report(
    u: &MapRef,
    s: &Scales,
    part: &PartitionReport,
    n: usize,
    ctx: &Ctx,
) -> Result<RenormalizationReport> {
    let rule = &ctx.config.disk_rule;
    let tilde = renormalize(u.clone(), s.lambda, &s.center)?;
    let r = s.eps / s.lambda;
    let origin = ChartPoint::north(C64::new(0.0, 0.0));
    let whole = disk_totals(tilde.as_ref(), ctx.domain, ctx.target, &Disk::new(origin, r), rule)?;
    let outside = disk_totals(tilde.as_ref(), ctx.domain, ctx.target, &Disk::annulus(origin, 1.0, r), rule)?;
    let com = center_of_mass(tilde.as_ref(), &Disk::new(origin, r), ctx.domain, ctx.target, rule)?;
    let (e0, q0) = (part.e_bubble + part.e_neck, part.q_bubble + part.q_neck);
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    Ok(RenormalizationReport {
        n,
        s_radius: r,
        e_renormalized: whole.energy,
        q_renormalized: whole.q_plus,
        e_conservation: rel(whole.energy, e0),
        q_conservation: rel(whole.q_plus, q0),
        mass_outside_unit: outside.energy,
        center_offset: com.coord.norm(),
    })
}

fn analyze_index(
    family: &MapFamily,
    limit: &MapRef,
    points: &[BubblePoint],
    limit_values: &[TargetPoint],
    n: usize,
    idx: usize,
    region: &LevelRegion,
    ctx: &Ctx,
) -> Result<IndexResult> {
    let u = family.member(n)?;
    let scales: Vec<Result<Scales>> = points
        .iter()
        .map(|pt| scales_for(u.as_ref(), limit.as_ref(), pt, n, idx, ctx))
        .collect();
    let bumps: Vec<Disk> = points
        .iter()
        .zip(&scales)
        .map(|(pt, s)| {
            let c = s.as_ref().map(|s| s.center).unwrap_or(pt.location);
            Disk::new(c, 2.0 * pt.rho)
        })
        .collect();
    let (total, parts) = region_totals(u.as_ref(), ctx, region, n, &bumps)?;
    let mut per_point = Vec::with_capacity(points.len());
    for (i, s) in scales.into_iter().enumerate() {
        per_point.push(s.and_then(|s| {
            let outside = Totals {
                energy: total.energy - parts[i].energy,
                q_plus: total.q_plus - parts[i].q_plus,
                ..total
            };
            let inp = PartitionInput {
                n,
                location: points[i].location,
                eps: s.eps,
                center: s.center,
                lambda: s.lambda,
                limit_value: limit_values[i].clone(),
                region_total: total,
                outside_bump: outside,
                bump_radius: 2.0 * points[i].rho,
                domain: ctx.domain,
                target: ctx.target,
                rule: &ctx.config.disk_rule,
                max_omega: ctx.max_omega,
                cone_samples: ctx.config.cone_samples,
            };
            let part = partition(u.as_ref(), &inp)?;
            let ren = renormalization_report(&u, &s, &part, n, ctx)?;
            Ok((part, ren, s))
        }));
    }
    Ok(IndexResult { n, total, per_point })
}

struct Level {
    nodes: Vec<BubbleNode>,
    results: Vec<IndexResult>,
}

fn analyze_level(family: &MapFamily, limit: &MapRef, region: LevelRegion, depth: usize, ctx: &Ctx) -> Result<Level> {
    let det_region = match region {
        LevelRegion::Sphere => Region::Sphere,
        LevelRegion::Disk(_) => Region::NorthDisk(1.0),
    };
    let points = detect_in(family, ctx.config, ctx.domain, ctx.target, det_region)?;
    let limit_values: Vec<TargetPoint> = points
        .iter()
        .map(|p| Ok(TargetPoint::from_jet(&limit.jet(&p.location)?)))
        .collect::<Result<_>>()?;
    let schedule = family.schedule.clone();
    let results: Vec<IndexResult> = schedule
        .par_iter()
        .enumerate()
        .map(|(idx, &n)| analyze_index(family, limit, &points, &limit_values, n, idx, &region, ctx))
        .collect::<Result<_>>()?;
    let cfg = ctx.config;
    let mut nodes = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        let mut flags = Vec::new();
        let mut partitions = Vec::new();
        let mut renorms = Vec::new();
        let mut scales = Vec::new();
        for r in &results {
            match &r.per_point[i] {
                Ok((p, q, s)) => {
                    partitions.push(p.clone());
                    renorms.push(q.clone());
                    scales.push((r.n, s.lambda, s.center, s.eps));
                }
                Err(e) => flags.push(format!("n = {}: {e}", r.n)),
            }
        }
        if pt.m_fit.mass.is_none() {
            flags.push(format!("energy mass not stabilising (last change {:.3e})", pt.m_fit.last_change));
        }
        if pt.q_fit.mass.is_none() {
            flags.push(format!("curvature mass not stabilising (last change {:.3e})", pt.q_fit.last_change));
        }
        let mut children = Vec::new();
        let mut bubble = String::from("unresolved");
        let (mut bubble_energy, mut bubble_q, mut meeting) = (f64::NAN, f64::NAN, f64::NAN);
        if partitions.len() >= 2 {
            let sched: Vec<usize> = scales.iter().map(|s| s.0).collect();
            let table: BTreeMap<usize, (f64, ChartPoint)> = scales.iter().map(|s| (s.0, (s.1, s.2))).collect();
            let radii: BTreeMap<usize, f64> = scales.iter().map(|s| (s.0, s.3 / s.1)).collect();
            let fam = family.clone();
            let member = move |n: usize| -> Result<MapRef> {
                let (l, c) = table
                    .get(&n)
                    .ok_or_else(|| Error::InvalidInput(format!("index {n} outside the renormalised schedule")))?;
                renormalize(fam.member(n)?, *l, c)
            };
            let last_map = member(*sched.last().unwrap())?;
            bubble = format!("{} renormalised at n = {}", family.member(*sched.last().unwrap())?.describe(), sched.last().unwrap());
            let renorm_family = MapFamily::new(
                format!("{}/bubble{i}", family.name),
                bubble.clone(),
                sched,
                last_map.clone(),
                member,
            )?;
            if depth < cfg.max_depth {
                let child = analyze_level(&renorm_family, &last_map, LevelRegion::Disk(radii), depth + 1, ctx)?;
                children = child.nodes;
            } else {
                let deeper = detect_in(&renorm_family, cfg, ctx.domain, ctx.target, Region::NorthDisk(1.0))?;
                if !deeper.is_empty() {
                    flags.push(format!("depth cap {} reached with {} unresolved secondary points", cfg.max_depth, deeper.len()));
                }
            }
            let last = partitions.last().unwrap();
            bubble_energy = last.e_bubble;
            bubble_q = last.q_bubble;
            meeting = last.cone_ball_radius;
        }
        let (nu, eta) = partitions.last().map(|p| (p.e_neck, p.q_neck)).unwrap_or((f64::NAN, f64::NAN));
        if bubble_energy < cfg.eps_star * (1.0 - cfg.mass_tolerance) && children.len() >= 2 {
            flags.push("untested branch: constant bubble with two or more secondary points".into());
        }
        if (nu - cfg.c_r).abs() <= cfg.mass_tolerance * cfg.c_r {
            flags.push("untested branch: neck energy equals C_R".into());
        }
        let all_parts = |f: &dyn Fn(&PartitionReport) -> bool| !partitions.is_empty() && partitions.iter().all(f);
        let checks = NodeChecks {
            mass_quantum: pt.m >= cfg.eps_star,
            curvature_quantum: pt.q >= 2.0 * PI * (1.0 - cfg.mass_tolerance),
            curvature_detection: pt.q >= 0.5 * PI * (1.0 - cfg.mass_tolerance),
            neck_energy_small: nu <= cfg.neck_tolerance * pt.m && nu >= -1e-9 * pt.m,
            neck_curvature_small: eta <= cfg.neck_tolerance * pt.q && eta >= -1e-9 * pt.q,
            neck_curvature_bound: all_parts(&|p| p.neck_bound_ok),
            scale_rates: all_parts(&|p| p.lambda_rate_ok && p.center_rate_ok),
            partition_sums: all_parts(&|p| p.sum_defect <= 1e-6),
            mass_conservation: !renorms.is_empty()
                && renorms.iter().all(|r| r.e_conservation <= 1e-6 && r.q_conservation <= 1e-6),
            neck_diameter_decreasing: partitions.windows(2).all(|w| w[1].neck_diameter < w[0].neck_diameter),
            bubbles_meet: meeting <= cfg.meeting_tolerance,
            secondary_masses: children.iter().all(|c: &BubbleNode| c.m >= cfg.eps_star),
        };
        nodes.push(BubbleNode {
            location: pt.location,
            depth,
            m: pt.m,
            q: pt.q,
            nu,
            eta,
            children,
            bubble,
            bubble_energy,
            bubble_q_plus: bubble_q,
            meeting_distance: meeting,
            detection: pt.clone(),
            partitions,
            renormalizations: renorms,
            checks,
            flags,
        });
    }
    Ok(Level { nodes, results })
}

/// Full extraction along the family schedule (or the configured override).
pub fn build_tree(family: &MapFamily, config: &BubbleConfig, domain: &DomainSurface, target: &KahlerTarget) -> Result<BubbleTree> {
    config.validate()?;
    let family = match &config.schedule {
        Some(s) => family.clone().with_schedule(s.clone())?,
        None => family.clone(),
    };
    if family.schedule.len() < 2 {
        return Err(Error::InvalidInput("the schedule needs at least two indices".into()));
    }
    let ctx = Ctx {
        config,
        domain,
        target,
        max_omega: target.max_curvature_norm(),
    };
    let limit: MapRef = family.limit.clone();
    let lt = totals(limit.as_ref(), domain, target, &config.quadrature)?;
    let level = analyze_level(&family, &limit, LevelRegion::Sphere, 1, &ctx)?;
    let mut identities = Vec::new();
    for r in &level.results {
        let (mut be, mut bq) = (0.0, 0.0);
        for p in r.per_point.iter().flatten() {
            be += p.0.e_bubble + p.0.e_neck;
            bq += p.0.q_bubble + p.0.q_neck;
        }
        identities.push(IdentityRow {
            n: r.n,
            energy: r.total.energy,
            q_plus: r.total.q_plus,
            bubble_energy: be,
            bubble_q_plus: bq,
            energy_residual: r.total.energy - lt.energy - be,
            q_residual: r.total.q_plus - lt.q_plus - bq,
        });
    }
    let last = identities.last().unwrap();
    let scale_e = last.energy.abs().max(config.eps_star);
    let scale_q = last.q_plus.abs().max(config.eps_star / 2.0);
    let energy_identity = last.energy_residual.abs() <= config.neck_tolerance * scale_e;
    let curvature_identity = last.q_residual.abs() <= config.neck_tolerance * scale_q;
    let leaves: usize = level.nodes.iter().map(|n| n.leaves()).sum();
    let e_max = identities.iter().map(|r| r.energy).fold(0.0, f64::max);
    let bubble_count_bound = e_max / config.eps_star;
    let mut flags = Vec::new();
    for (i, n) in level.nodes.iter().enumerate() {
        n.collect_flags(&format!("bubble {i}"), &mut flags);
    }
    let blocking = flags.iter().any(|f| !f.contains("untested branch"));
    let pass = energy_identity
        && curvature_identity
        && (leaves as f64) <= bubble_count_bound + 1e-9
        && level.nodes.iter().all(|n| n.all_checks())
        && !blocking;
    Ok(BubbleTree {
        family: family.name.clone(),
        limit: limit.describe(),
        schedule: family.schedule.clone(),
        limit_energy: lt.energy,
        limit_q_plus: lt.q_plus,
        nodes: level.nodes,
        identities,
        leaves,
        bubble_count_bound,
        energy_identity,
        curvature_identity,
        flags,
        pass,
    })
}
