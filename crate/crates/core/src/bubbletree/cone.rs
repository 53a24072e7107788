//! Radial cone extension of a boundary loop in geodesic coordinates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::densities::density_report;
use crate::geometry::{ChartPoint, DomainSurface, KahlerTarget};
use crate::maps::{Jet, MapKind, ScalarJet};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result, C64};

/// A point of the target in one of its affine charts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetPoint {
    pub chart: usize,
    pub coords: Vec<C64>,
}

impl TargetPoint {
    pub fn from_jet(j: &Jet) -> Self {
        TargetPoint {
            chart: j.chart,
            coords: j.u(),
        }
    }

    /// Coordinates of the same point in chart `k`.
    pub fn in_chart(&self, target: &KahlerTarget, k: usize) -> Result<Vec<C64>> {
        if k == self.chart {
            return Ok(self.coords.clone());
        }
        let h = target
            .homogeneous(self.chart, &self.coords)
            .ok_or_else(|| Error::InvalidInput("flat target has a single chart".into()))?;
        let d = h[k];
        if d.norm() < 1e-300 {
            return Err(Error::ChartInfinity);
        }
        Ok(h.iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, x)| x / d)
            .collect())
    }

    pub fn distance(&self, target: &KahlerTarget, other: &TargetPoint) -> f64 {
        target.distance(self.chart, &self.coords, other.chart, &other.coords)
    }
}

/// The map `(s, θ) ↦ exp_p(s·v(θ))` on the unit disk, `v` being the
/// trigonometric interpolant of the logarithms of the loop samples.
#[derive(Clone, Debug)]
pub struct ConePatch {
    pub center_value: TargetPoint,
    /// Domain radius the patch fills (`s = r/radius`).
    pub radius: f64,
    /// Largest geodesic distance from the centre value to the loop.
    pub ball_radius: f64,
    modes: Vec<(i64, Vec<C64>)>,
}

/// Cone off the loop `samples` (taken at angles `2πk/K`) to `center_value`.
pub fn cone_extension(
    target: &KahlerTarget,
    samples: &[TargetPoint],
    center_value: &TargetPoint,
    radius: f64,
) -> Result<ConePatch> {
    let k = samples.len();
    if k < 4 || k % 2 == 1 {
        return Err(Error::InvalidInput("cone needs an even number (≥ 4) of loop samples".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("cone radius must be positive".into()));
    }
    let allowed = 0.25 * target.injectivity_radius();
    let ball_radius = samples
        .iter()
        .map(|q| center_value.distance(target, q))
        .fold(0.0, f64::max);
    if ball_radius > allowed {
        return Err(Error::BallTooLarge {
            radius: ball_radius,
            allowed,
        });
    }
    let chart = center_value.chart;
    let p = &center_value.coords;
    let logs: Vec<Vec<C64>> = samples
        .iter()
        .map(|q| target.log(chart, p, &q.in_chart(target, chart)?))
        .collect::<Result<_>>()?;
    let dim = p.len();
    let half = (k / 2) as i64;
    let mut modes = Vec::new();
    for m in -half..=half {
        let mut a = vec![C64::new(0.0, 0.0); dim];
        for (j, v) in logs.iter().enumerate() {
            let ph = C64::from_polar(1.0, -(m as f64) * 2.0 * PI * j as f64 / k as f64);
            for c in 0..dim {
                a[c] += v[c] * ph;
            }
        }
        // the Nyquist mode is shared between ±K/2
        let w = if m.abs() == half { 0.5 } else { 1.0 } / k as f64;
        modes.push((m, a.into_iter().map(|x| x * w).collect()));
    }
    Ok(ConePatch {
        center_value: center_value.clone(),
        radius,
        ball_radius,
        modes,
    })
}

impl ConePatch {
    /// Interpolated tangent vector `v(θ)`.
    pub fn direction(&self, theta: f64) -> Vec<C64> {
        let dim = self.center_value.coords.len();
        let mut v = vec![C64::new(0.0, 0.0); dim];
        for (m, a) in &self.modes {
            let ph = C64::from_polar(1.0, *m as f64 * theta);
            for c in 0..dim {
                v[c] += a[c] * ph;
            }
        }
        v
    }

    pub fn value(&self, target: &KahlerTarget, s: f64, theta: f64) -> Vec<C64> {
        let v: Vec<C64> = self.direction(theta).into_iter().map(|x| x * s).collect();
        target.exp(self.center_value.chart, &self.center_value.coords, &v)
    }

    /// Energy and `Q₊` of the patch placed on `D(center, radius)` of the
    /// round domain.
    pub fn energy_and_curvature(&self, target: &KahlerTarget, center: &ChartPoint) -> Result<(f64, f64)> {
        if self.ball_radius == 0.0 {
            return Ok((0.0, 0.0));
        }
        let domain = DomainSurface::Round;
        let gl = gauss_legendre(16);
        let nt = 2 * (self.modes.len() - 1).max(16);
        let dt = 2.0 * PI / nt as f64;
        let h = 1e-4;
        let eps = self.radius;
        let (mut e_tot, mut q_tot) = (0.0, 0.0);
        for &(x, w) in &gl {
            let s = 0.5 * (1.0 + x);
            let ws = 0.5 * w;
            let r = eps * s;
            for k in 0..nt {
                let t = (k as f64 + 0.5) * dt;
                let u = self.value(target, s, t);
                let us = diff(&self.value(target, s + h, t), &self.value(target, s - h, t), 2.0 * h);
                let ut = diff(&self.value(target, s, t + h), &self.value(target, s, t - h), 2.0 * h);
                let (c, sn) = (t.cos(), t.sin());
                let comps = (0..u.len())
                    .map(|i| {
                        let ur = us[i] / eps;
                        let ux = ur * c - ut[i] * sn / r;
                        let uy = ur * sn + ut[i] * c / r;
                        ScalarJet {
                            v: u[i],
                            z: 0.5 * (ux - C64::new(0.0, 1.0) * uy),
                            zb: 0.5 * (ux + C64::new(0.0, 1.0) * uy),
                            ..Default::default()
                        }
                    })
                    .collect();
                let jet = Jet {
                    chart: self.center_value.chart,
                    comps,
                    kind: MapKind::General,
                };
                let p = ChartPoint::new(center.chart, center.coord + C64::from_polar(r, t));
                let rep = density_report(&jet, &domain, target, &p)?;
                let weight = ws * eps * r * dt * domain.conformal_factor(&p);
                e_tot += rep.e * weight;
                q_tot += rep.q_plus * weight;
            }
        }
        Ok((e_tot, q_tot))
    }
}

fn diff(a: &[C64], b: &[C64], h: f64) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| (x - y) / h).collect()
}
