//! Small-curvature regularity along a family: on a disk where
//! `∫q₊ + ½∫|K_Σ|` stays below `π/2` the half-disk `L^p` norms of the
//! energy density stay bounded; at a bubble point the hypothesis fails.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::scales::energy_density;
use crate::geometry::{ChartPoint, DomainSurface, KahlerTarget};
use crate::integration::{disk_totals, integrate_disk_n, Disk};
use crate::maps::MapFamily;
use crate::potential::{key_lemma_check, DiskGrid, PotentialReport};
use crate::quadrature::DiskRule;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityRow {
    pub n: usize,
    pub energy: f64,
    pub q_plus: f64,
    /// `½∫|K_Σ|` over the disk.
    pub half_domain_curvature: f64,
    /// `4(∫q₊ + ½∫|K_Σ|)`: the largest `κ` the hypothesis allows.
    pub kappa_bound: f64,
    /// Whether `∫q₊ + ½∫|K_Σ| < π/2`.
    pub hypothesis: bool,
    /// `‖e‖_{L^p}` on the concentric half-disk, for the density rescaled to the unit disk.
    pub lp_half: f64,
    /// Key-lemma chain for `φ = log e`, when admissible.
    pub lemma: Option<PotentialReport>,
    pub lemma_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub center: ChartPoint,
    pub radius: f64,
    pub p: f64,
    pub rows: Vec<RegularityRow>,
    /// The hypothesis holds at every index.
    pub hypothesis_everywhere: bool,
    /// Every key-lemma chain ran and passed.
    pub lemma_everywhere: bool,
    /// Largest over smallest half-disk norm across the schedule.
    pub lp_growth: f64,
}

/// Run the regularity diagnostic for `D(center, radius)` (chart coordinates).
pub fn regularity_diagnostic(
    family: &MapFamily,
    domain: &DomainSurface,
    target: &KahlerTarget,
    center: ChartPoint,
    radius: f64,
    p: f64,
    grid: &DiskGrid,
) -> Result<RegularityReport> {
    if !(radius > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidInput("need a positive radius and p ≥ 1".into()));
    }
    let rule = DiskRule::default();
    let lp_rule = DiskRule {
        panels_per_decade: 4,
        ..rule
    };
    let disk = Disk::new(center, radius);
    let [abs_k] = integrate_disk_n(|q| Ok([domain.gauss_curvature(q).abs()]), domain, &disk, &rule)?;
    let mut rows = Vec::new();
    for &n in &family.schedule {
        let u = family.member(n)?;
        let tot = disk_totals(u.as_ref(), domain, target, &disk, &rule)?;
        let half_k = 0.5 * abs_k;
        let phi = |zeta: C64| -> f64 {
            let q = ChartPoint::new(center.chart, center.coord + radius * zeta);
            match energy_density(u.as_ref(), domain, target, &q) {
                Ok(e) => (e * domain.conformal_factor(&q) * radius * radius).ln(),
                Err(_) => f64::NAN,
            }
        };
        // ∫_{|ζ|<1/2} e_ζ^p dζ with e_ζ = e·g·r², resolved by the polar rule
        let [lp] = integrate_disk_n(
            |q| {
                let g = domain.conformal_factor(q);
                let e = energy_density(u.as_ref(), domain, target, q)?;
                Ok([(e * g * radius * radius).powf(p) / (radius * radius * g)])
            },
            domain,
            &Disk::new(center, 0.5 * radius),
            &lp_rule,
        )?;
        let (lemma, lemma_error) = match key_lemma_check(&phi, grid, p) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        rows.push(RegularityRow {
            n,
            energy: tot.energy,
            q_plus: tot.q_plus,
            half_domain_curvature: half_k,
            kappa_bound: 4.0 * (tot.q_plus + half_k),
            hypothesis: tot.q_plus + half_k < 0.5 * PI,
            lp_half: lp.powf(1.0 / p),
            lemma,
            lemma_error,
        });
    }
    let lps: Vec<f64> = rows.iter().map(|r| r.lp_half).collect();
    let lo = lps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lps.iter().cloned().fold(0.0, f64::max);
    Ok(RegularityReport {
        center,
        radius,
        p,
        hypothesis_everywhere: rows.iter().all(|r| r.hypothesis),
        lemma_everywhere: rows.iter().all(|r| r.lemma.as_ref().is_some_and(|l| l.pass)),
        lp_growth: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::LambdaSchedule;

    #[test]
    fn good_and_bubbling_disks() {
        let fam = MapFamily::shrinking_identity(C64::new(0.0, 0.0), LambdaSchedule { scale: 1.0, power: 2.0 }, vec![4, 8, 16]).unwrap();
        let (d, t) = (DomainSurface::Round, KahlerTarget::round_sphere());
        let grid = DiskGrid { nr: 24, nt: 48 };
        let good = regularity_diagnostic(&fam, &d, &t, ChartPoint::north(C64::new(0.5, 0.0)), 0.2, 2.0, &grid).unwrap();
        assert!(good.hypothesis_everywhere && good.lemma_everywhere);
        assert!(good.rows.windows(2).all(|w| w[1].lp_half <= w[0].lp_half));
        let bad = regularity_diagnostic(&fam, &d, &t, ChartPoint::north(C64::new(0.0, 0.0)), 0.2, 2.0, &grid).unwrap();
        assert!(!bad.rows.last().unwrap().hypothesis);
        assert!(bad.rows.windows(2).all(|w| w[1].lp_half > w[0].lp_half));
    }
}
