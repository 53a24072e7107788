//! Quadrature rules on the two chart disks and on small disks.
//!
//! All rules return nodes with weights for the Euclidean area element of the
//! node's chart; callers multiply by `g` to integrate against the domain
//! volume form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Chart, ChartPoint};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Midpoint,
    Simpson,
}

/// Per-chart resolution: `n` radial nodes on `[0, 1]` and `2n` angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n: usize,
    pub rule: Rule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n: 512,
            rule: Rule::Simpson,
        }
    }
}

impl QuadratureSpec {
    pub fn new(n: usize, rule: Rule) -> Result<Self> {
        let s = QuadratureSpec { n, rule };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::InvalidInput(format!("grid resolution {} below 16", self.n)));
        }
        if self.rule == Rule::Simpson && self.n % 2 == 1 {
            return Err(Error::InvalidInput("Simpson rule needs an even resolution".into()));
        }
        Ok(())
    }

    /// Radial nodes and weights on `[0, 1]`, including the Jacobian `r`.
    fn radial(&self) -> Vec<(f64, f64)> {
        let n = self.n;
        let h = 1.0 / n as f64;
        match self.rule {
            Rule::Midpoint => (0..n)
                .map(|i| {
                    let r = (i as f64 + 0.5) * h;
                    (r, r * h)
                })
                .collect(),
            Rule::Simpson => (1..=n)
                .map(|i| {
                    let r = i as f64 * h;
                    let c = if i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    (r, r * c * h / 3.0)
                })
                .collect(),
        }
    }

    fn angles(&self) -> usize {
        2 * self.n
    }
}

/// One row of nodes (fixed radius) of a polar rule.
#[derive(Clone, Debug)]
pub struct Ring {
    pub center: ChartPoint,
    pub radius: f64,
    /// Weight of each node on the ring (area element already included).
    pub weight: f64,
    pub angles: Vec<f64>,
}

impl Ring {
    pub fn points(&self) -> impl Iterator<Item = ChartPoint> + '_ {
        self.angles
            .iter()
            .map(move |&t| ChartPoint::new(self.center.chart, self.center.coord + C64::from_polar(self.radius, t)))
    }
}

fn uniform_angles(m: usize, phase: f64) -> Vec<f64> {
    (0..m)
        .map(|k| 2.0 * std::f64::consts::PI * (k as f64 + phase) / m as f64)
        .collect()
}

/// Polar rule on the unit disk of each chart.
pub fn chart_rings(spec: &QuadratureSpec) -> Vec<Ring> {
    let m = spec.angles();
    let dtheta = 2.0 * std::f64::consts::PI / m as f64;
    let mut rings = Vec::new();
    for chart in [Chart::North, Chart::South] {
        for (r, w) in spec.radial() {
            rings.push(Ring {
                center: ChartPoint::new(chart, C64::new(0.0, 0.0)),
                radius: r,
                weight: w * dtheta,
                angles: uniform_angles(m, 0.5),
            });
        }
    }
    rings
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Polar rule around a centre for small disks and annuli, resolving
/// concentration at any scale down to `r_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskRule {
    pub panels_per_decade: usize,
    pub gl_order: usize,
    pub angles: usize,
    /// Innermost radius as a fraction of the outer radius (for full disks).
    pub inner_fraction: f64,
}

impl Default for DiskRule {
    fn default() -> Self {
        DiskRule {
            panels_per_decade: 2,
            gl_order: 16,
            angles: 128,
            inner_fraction: 1e-16,
        }
    }
}

impl DiskRule {
    /// Radial nodes and weights (with the Jacobian `r`) on `[r_in, r_out]`.
    /// A full disk (`r_in = 0`) starts at `inner_fraction · r_out`.
    pub fn radial(&self, r_in: f64, r_out: f64) -> Vec<(f64, f64)> {
        if r_out <= r_in {
            return Vec::new();
        }
        let lo = if r_in > 0.0 { r_in } else { r_out * self.inner_fraction };
        let decades = (r_out / lo).log10();
        let panels = ((decades * self.panels_per_decade as f64).ceil() as usize).max(1);
        let ratio = (r_out / lo).powf(1.0 / panels as f64);
        let gl = gauss_legendre(self.gl_order);
        let mut out = Vec::with_capacity(panels * gl.len());
        let mut a = lo;
        for k in 0..panels {
            let b = if k + 1 == panels { r_out } else { a * ratio };
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for &(x, w) in &gl {
                let r = mid + half * x;
                out.push((r, r * w * half));
            }
            a = b;
        }
        out
    }

    /// Rings covering the annulus `r_in ≤ |z − c| ≤ r_out` of `center`'s chart.
    pub fn rings(&self, center: &ChartPoint, r_in: f64, r_out: f64) -> Vec<Ring> {
        let dtheta = 2.0 * std::f64::consts::PI / self.angles as f64;
        let angles = uniform_angles(self.angles, 0.5);
        self.radial(r_in, r_out)
            .into_iter()
            .map(|(r, w)| Ring {
                center: *center,
                radius: r,
                weight: w * dtheta,
                angles: angles.clone(),
            })
            .collect()
    }
}

/// Sum `Σ w·f` over rings with parallel per-ring evaluation and a fixed
/// sequential reduction order.
pub fn sum_rings<const K: usize, F>(rings: &[Ring], f: F) -> Result<[f64; K]>
where
    F: Fn(&ChartPoint) -> Result<[f64; K]> + Sync,
{
    let partial: Vec<[f64; K]> = rings
        .par_iter()
        .map(|ring| {
            let mut acc = [0.0; K];
            for p in ring.points() {
                let v = f(&p)?;
                for k in 0..K {
                    if !v[k].is_finite() {
                        return Err(Error::NonFinite {
                            chart: p.chart,
                            re: p.coord.re,
                            im: p.coord.im,
                        });
                    }
                    acc[k] += v[k];
                }
            }
            Ok(acc.map(|a| a * ring.weight))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = [0.0; K];
    for p in partial {
        for k in 0..K {
            total[k] += p[k];
        }
    }
    Ok(total)
}

/// C³ cutoff: 1 on `[0, ρ/2]`, 0 beyond `ρ`.
pub fn cutoff(r: f64, rho: f64) -> f64 {
    if r <= 0.5 * rho {
        1.0
    } else if r >= rho {
        0.0
    } else {
        let s = (rho - r) / (0.5 * rho);
        s * s * s * s * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s * s * s)
    }
}

/// Distance from `p` to `center` measured in `center`'s chart coordinate
/// (`∞` at that chart's point at infinity).
pub fn chart_distance(p: &ChartPoint, center: &ChartPoint) -> f64 {
    let q = if p.chart == center.chart {
        *p
    } else {
        match p.transition() {
            Ok(q) => q,
            Err(_) => return f64::INFINITY,
        }
    };
    (q.coord - center.coord).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = gauss_legendre(16);
        let s: f64 = gl.iter().map(|(_, w)| w).sum();
        assert!((s - 2.0).abs() < 1e-14);
        let x30: f64 = gl.iter().map(|(x, w)| w * x.powi(30)).sum();
        assert!((x30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn disk_rule_area() {
        let rule = DiskRule::default();
        let area: f64 = rule.radial(0.0, 0.3).iter().map(|(_, w)| w).sum::<f64>() * 2.0 * std::f64::consts::PI;
        assert!((area - std::f64::consts::PI * 0.09).abs() < 1e-14);
        let ann: f64 = rule.radial(0.1, 0.3).iter().map(|(_, w)| w).sum::<f64>();
        assert!((ann - 0.5 * (0.09 - 0.01)).abs() < 1e-15);
    }

    #[test]
    fn chart_rule_area() {
        for rule in [Rule::Midpoint, Rule::Simpson] {
            let spec = QuadratureSpec::new(64, rule).unwrap();
            let rings = chart_rings(&spec);
            let [a] = sum_rings(&rings, |_| Ok([1.0])).unwrap();
            let tol = if rule == Rule::Simpson { 1e-14 } else { 1e-4 };
            assert!((a - 2.0 * std::f64::consts::PI).abs() < tol, "{rule:?} {a}");
        }
        assert!(QuadratureSpec::new(8, Rule::Simpson).is_err());
        assert!(QuadratureSpec::new(33, Rule::Simpson).is_err());
    }

    #[test]
    fn cutoff_is_a_partition_profile() {
        assert_eq!(cutoff(0.0, 1.0), 1.0);
        assert_eq!(cutoff(0.5, 1.0), 1.0);
        assert_eq!(cutoff(1.0, 1.0), 0.0);
        let a = cutoff(0.75, 1.0);
        assert!((a - 0.5).abs() < 1e-12);
    }
}
