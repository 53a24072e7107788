//! Bubble-point candidates: coarse local maxima of the energy density,
//! zoom refinement and tracking across the schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scales::energy_density;
use super::BubbleConfig;
use crate::geometry::{Chart, ChartPoint, DomainSurface, KahlerTarget};
use crate::integration::{atom_fit, disk_totals, AtomFit, Disk};
use crate::maps::{MapFamily, SmoothMap};
use crate::quadrature::chart_distance;
use crate::{Result, C64};

/// Where candidates are accepted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Sphere,
    /// `|w| ≤ r` in the north chart (the closed northern hemisphere for `r = 1`).
    NorthDisk(f64),
}

impl Region {
    fn contains(&self, p: &ChartPoint) -> bool {
        match self {
            Region::Sphere => true,
            Region::NorthDisk(r) => match p.plane_coord() {
                Some(z) => z.norm() <= r * (1.0 + 1e-9),
                None => false,
            },
        }
    }
}

/// A detected concentration point with its atom masses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubblePoint {
    pub location: ChartPoint,
    pub m: f64,
    pub q: f64,
    pub m_fit: AtomFit,
    pub q_fit: AtomFit,
    /// Radius of the isolating disk used for this point.
    pub rho: f64,
    /// `(n, peak location, peak chart density)` along the schedule.
    pub track: Vec<(usize, ChartPoint, f64)>,
    /// `(n, radius, energy mass, q₊ mass)` samples behind the fits.
    pub samples: Vec<(usize, f64, f64, f64)>,
}

/// Energy density against the chart's Euclidean area.
fn chart_density(m: &dyn SmoothMap, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> f64 {
    match energy_density(m, domain, target, p) {
        Ok(e) => e * domain.conformal_factor(p),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Hill-climb to the local maximum of the chart density near `start`.
pub fn refine_peak(
    m: &dyn SmoothMap,
    domain: &DomainSurface,
    target: &KahlerTarget,
    start: &ChartPoint,
    width: f64,
) -> (ChartPoint, f64) {
    let mut c = *start;
    let mut w = width;
    let mut fc = chart_density(m, domain, target, &c);
    for _ in 0..2000 {
        let mut best = (c, fc);
        for i in -2i32..=2 {
            for k in -2i32..=2 {
                if i == 0 && k == 0 {
                    continue;
                }
                let p = ChartPoint::new(c.chart, c.coord + C64::new(i as f64, k as f64) * (0.5 * w));
                let f = chart_density(m, domain, target, &p);
                if f > best.1 {
                    best = (p, f);
                }
            }
        }
        if best.0 == c {
            w *= 0.5;
        } else {
            c = best.0;
            fc = best.1;
        }
        if c.coord.norm() > 1.5 {
            if let Ok(q) = c.transition() {
                w /= c.coord.norm_sqr();
                c = q;
                fc = chart_density(m, domain, target, &c);
            }
        }
        let scale = if fc > 0.0 { 1.0 / fc.sqrt() } else { 1.0 };
        if w < 1e-3 * scale || w < 1e-15 * (1.0 + c.coord.norm()) {
            break;
        }
    }
    (c.canonical(), fc)
}

/// Local maxima of the chart density on a square grid of both charts.
fn coarse_peaks(m: &dyn SmoothMap, domain: &DomainSurface, target: &KahlerTarget, grid: usize) -> (Vec<ChartPoint>, f64) {
    let half = 1.2;
    let h = 2.0 * half / grid as f64;
    let mut out = Vec::new();
    for chart in [Chart::North, Chart::South] {
        let node = |i: usize, k: usize| C64::new(-half + i as f64 * h, -half + k as f64 * h);
        let vals: Vec<f64> = (0..=grid)
            .into_par_iter()
            .flat_map_iter(|i| {
                (0..=grid).map(move |k| (i, k))
            })
            .map(|(i, k)| {
                let z = node(i, k);
                if z.norm() <= half {
                    chart_density(m, domain, target, &ChartPoint::new(chart, z))
                } else {
                    f64::NAN
                }
            })
            .collect();
        let at = |i: usize, k: usize| vals[i * (grid + 1) + k];
        for i in 1..grid {
            for k in 1..grid {
                let v = at(i, k);
                if !(v > 0.0) {
                    continue;
                }
                let mut is_max = true;
                let mut strict = false;
                'nb: for di in -1i32..=1 {
                    for dk in -1i32..=1 {
                        if di == 0 && dk == 0 {
                            continue;
                        }
                        let u = at((i as i32 + di) as usize, (k as i32 + dk) as usize);
                        if u.is_nan() || u > v {
                            is_max = false;
                            break 'nb;
                        }
                        if u < v {
                            strict = true;
                        }
                    }
                }
                if is_max && strict {
                    out.push(ChartPoint::new(chart, node(i, k)));
                }
            }
        }
    }
    (out, h)
}

/// Candidates along `family` inside `region`.
pub fn detect_in(
    family: &MapFamily,
    config: &BubbleConfig,
    domain: &DomainSurface,
    target: &KahlerTarget,
    region: Region,
) -> Result<Vec<BubblePoint>> {
    let schedule = &family.schedule;
    let last = *schedule.last().unwrap();
    let u_last = family.member(last)?;
    if u_last.is_constant() {
        return Ok(Vec::new());
    }
    let (coarse, h) = coarse_peaks(u_last.as_ref(), domain, target, config.detection_grid);
    let mut peaks: Vec<(ChartPoint, f64)> = coarse
        .par_iter()
        .map(|p| refine_peak(u_last.as_ref(), domain, target, p, h))
        .collect();
    peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut unique: Vec<ChartPoint> = Vec::new();
    for (p, _) in peaks {
        if region.contains(&p) && unique.iter().all(|q| q.sphere_distance(&p) > 1e-4) {
            unique.push(p);
        }
    }
    // growth of the peak density along the schedule
    let members: Vec<_> = schedule.iter().map(|&n| family.member(n)).collect::<Result<_>>()?;
    let mut growing = Vec::new();
    for p in unique {
        let track: Vec<(usize, ChartPoint, f64)> = schedule
            .par_iter()
            .zip(&members)
            .map(|(&n, u)| {
                let (q, f) = refine_peak(u.as_ref(), domain, target, &p, h);
                (n, q, f)
            })
            .collect();
        let f: Vec<f64> = track.iter().map(|t| t.2).collect();
        let monotone = f.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
        if f[f.len() - 1] >= config.growth_ratio * f[0] && monotone {
            growing.push((p, track));
        }
    }
    let locations: Vec<ChartPoint> = growing.iter().map(|g| g.0).collect();
    let mut out = Vec::new();
    for (i, (p, track)) in growing.into_iter().enumerate() {
        let rho = isolating_radius(&locations, i, config.rho);
        let samples: Vec<(usize, f64, f64, f64)> = schedule
            .par_iter()
            .zip(&members)
            .zip(&track)
            .map(|((&n, u), t)| {
                let r = rho.min(1.0 / n as f64);
                let tot = disk_totals(u.as_ref(), domain, target, &Disk::new(t.1, r), &config.disk_rule)?;
                Ok((n, r, tot.energy, tot.q_plus))
            })
            .collect::<Result<_>>()?;
        let last_disk = disk_totals(u_last.as_ref(), domain, target, &Disk::new(p, rho), &config.disk_rule)?;
        if last_disk.energy < config.eps_star * (1.0 - config.mass_tolerance) {
            continue;
        }
        let em: Vec<(usize, f64, f64)> = samples.iter().map(|s| (s.0, s.1, s.2)).collect();
        let qm: Vec<(usize, f64, f64)> = samples.iter().map(|s| (s.0, s.1, s.3)).collect();
        let m_fit = atom_fit(&em, config.mass_tolerance)?;
        let q_fit = atom_fit(&qm, config.mass_tolerance)?;
        out.push(BubblePoint {
            location: p,
            m: m_fit.mass.unwrap_or(m_fit.last),
            q: q_fit.mass.unwrap_or(q_fit.last),
            m_fit,
            q_fit,
            rho,
            track,
            samples,
        });
    }
    Ok(out)
}

/// `min(ρ, dist/4.2)` to the nearest other candidate, so the doubled
/// partition disks stay disjoint.
fn isolating_radius(points: &[ChartPoint], i: usize, rho: f64) -> f64 {
    let mut r = rho;
    for (k, q) in points.iter().enumerate() {
        if k != i {
            let d = chart_distance(q, &points[i]).min(chart_distance(&points[i], q));
            r = r.min(d / 4.2);
        }
    }
    r
}

/// Bubble-point candidates over the whole sphere.
pub fn detect_points(
    family: &MapFamily,
    config: &BubbleConfig,
    domain: &DomainSurface,
    target: &KahlerTarget,
) -> Result<Vec<BubblePoint>> {
    detect_in(family, config, domain, target, Region::Sphere)
}
