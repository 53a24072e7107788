//! Logarithmic potentials on the unit disk and the exponential
//! integrability estimates built on them.
//!
//! The unit disk carries the flat metric, so the nonnegative Laplacian is
//! `Δ = −(∂_x² + ∂_y²)` and `(Δφ)⁺ = max(−Δ_E φ, 0)`.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::ChartPoint;
use crate::quadrature::{cutoff, gauss_legendre, DiskRule};
use crate::{Error, Result, C64};

/// Polar sampling grid on the unit disk: `nr` midpoint rings and `nt`
/// uniform angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskGrid {
    pub nr: usize,
    pub nt: usize,
}

impl Default for DiskGrid {
    fn default() -> Self {
        DiskGrid { nr: 64, nt: 128 }
    }
}

impl DiskGrid {
    pub fn len(&self) -> usize {
        self.nr * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dr(&self) -> f64 {
        1.0 / self.nr as f64
    }

    fn dt(&self) -> f64 {
        2.0 * PI / self.nt as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    pub fn node(&self, idx: usize) -> C64 {
        let (i, k) = (idx / self.nt, idx % self.nt);
        C64::from_polar(self.radius(i), (k as f64 + 0.5) * self.dt())
    }

    /// Exact area of the polar cell around node `idx`.
    pub fn cell_area(&self, idx: usize) -> f64 {
        self.radius(idx / self.nt) * self.dr() * self.dt()
    }

    /// Half side lengths `(radial, angular)` of the cell.
    fn half_sides(&self, idx: usize) -> (f64, f64) {
        (0.5 * self.dr(), 0.5 * self.radius(idx / self.nt) * self.dt())
    }

    pub fn sample(&self, f: impl Fn(C64) -> f64 + Sync) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| f(self.node(i))).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(i, v)| v * self.cell_area(i)).sum()
    }
}

/// Finite measure on the closed unit disk: atoms plus an optional density
/// sampled on a polar grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiskMeasure {
    pub atoms: Vec<(C64, f64)>,
    pub density: Option<(DiskGrid, Vec<f64>)>,
}

impl DiskMeasure {
    pub fn new(atoms: Vec<(C64, f64)>, density: Option<(DiskGrid, Vec<f64>)>) -> Result<Self> {
        for (a, m) in &atoms {
            if !(*m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidInput(format!("atom mass {m} must be finite and nonnegative")));
            }
            if a.norm() > 1.0 {
                return Err(Error::InvalidInput(format!("atom {a} outside the unit disk")));
            }
        }
        if let Some((grid, v)) = &density {
            if v.len() != grid.len() {
                return Err(Error::InvalidInput("density length does not match its grid".into()));
            }
            if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidInput("density samples must be finite and nonnegative".into()));
            }
        }
        Ok(DiskMeasure { atoms, density })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mass(&self) -> f64 {
        self.atom_mass() + self.density.as_ref().map(|(g, v)| g.integrate(v)).unwrap_or(0.0)
    }

    /// Sum of two measures (densities must share a grid).
    pub fn add(&self, other: &DiskMeasure) -> Result<DiskMeasure> {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().copied());
        let density = match (&self.density, &other.density) {
            (None, None) => None,
            (Some(d), None) | (None, Some(d)) => Some(d.clone()),
            (Some((g1, a)), Some((g2, b))) => {
                if g1 != g2 {
                    return Err(Error::InvalidInput("densities on different grids".into()));
                }
                Some((*g1, a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
        };
        Ok(DiskMeasure { atoms, density })
    }

    pub fn scaled(&self, s: f64) -> DiskMeasure {
        DiskMeasure {
            atoms: self.atoms.iter().map(|(a, m)| (*a, m * s)).collect(),
            density: self
                .density
                .as_ref()
                .map(|(g, v)| (*g, v.iter().map(|x| x * s).collect())),
        }
    }
}

/// `∫_{[−a,a]×[−b,b]} log|ζ| dA`.
fn rectangle_log_integral(a: f64, b: f64) -> f64 {
    2.0 * (a * b * (a * a + b * b).ln() - 3.0 * a * b + a * a * (b / a).atan() + b * b * (a / b).atan())
}

/// Logarithmic potential `v(z) = −(1/2π)∫ log|z − ζ| dμ(ζ)`.
pub fn log_potential(mu: &DiskMeasure, z: C64) -> Result<f64> {
    let mut acc = 0.0;
    for (a, m) in &mu.atoms {
        if *m == 0.0 {
            continue;
        }
        let d = (z - a).norm();
        if d == 0.0 {
            return Err(Error::AtAtom);
        }
        acc += m * d.ln();
    }
    if let Some((grid, v)) = &mu.density {
        for (i, rho) in v.iter().enumerate() {
            if *rho == 0.0 {
                continue;
            }
            let d = (z - grid.node(i)).norm();
            let (hr, ht) = grid.half_sides(i);
            if d < 1e-12 * (hr + ht) {
                acc += rho * rectangle_log_integral(hr, ht);
            } else {
                acc += rho * grid.cell_area(i) * d.ln();
            }
        }
    }
    Ok(-acc / (2.0 * PI))
}

/// One inequality of a check, with both sides reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn new(name: &str, lhs: f64, rhs: f64, rel_slack: f64) -> Self {
        Inequality {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs + rel_slack * rhs.abs(),
        }
    }
}

/// Report of the potential-theory checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub kappa: f64,
    pub p: f64,
    pub delta: Option<f64>,
    pub constant: Option<f64>,
    pub inequalities: Vec<Inequality>,
    /// `(min, max)` of `v` on the sample grid.
    pub v_range: Option<(f64, f64)>,
    /// `(min, max)` of `w = φ − v` on the sample grid.
    pub w_range: Option<(f64, f64)>,
    pub pass: bool,
}

impl PotentialReport {
    fn finish(mut self) -> Self {
        self.pass = self.inequalities.iter().all(|q| q.holds);
        self
    }
}

/// `((2π/(δ+2))·2^{δ+2})^{1/p}` with `δ = −p·mass/2π`.
pub fn exponential_bound(mass: f64, p: f64) -> (f64, f64) {
    let delta = -p * mass / (2.0 * PI);
    let c = (2.0 * PI / (delta + 2.0) * 2f64.powf(delta + 2.0)).powf(1.0 / p);
    (delta, c)
}

/// Admissible radius of the singular disk around atom `j`.
fn atom_radius(atoms: &[(C64, f64)], j: usize) -> f64 {
    let a = atoms[j].0;
    let mut r = (0.5 * (1.0 - a.norm())).min(0.5);
    for (k, (b, m)) in atoms.iter().enumerate() {
        if k != j && *m > 0.0 {
            r = r.min(0.45 * (a - b).norm());
        }
    }
    r
}

/// `∫_D e^{p v}` with polar singular rules around the atoms.
fn integrate_exp_potential(mu: &DiskMeasure, p: f64) -> Result<f64> {
    let atoms: Vec<(C64, f64)> = mu.atoms.iter().copied().filter(|a| a.1 > 0.0).collect();
    let radii: Vec<f64> = (0..atoms.len()).map(|j| atom_radius(&atoms, j)).collect();
    if radii.iter().any(|r| *r <= 0.0) {
        return Err(Error::Numerical("atom on the boundary or coincident atoms".into()));
    }
    let f = |z: C64| -> Result<f64> { Ok((p * log_potential(mu, z)?).exp()) };
    let chi_sum = |z: C64| -> f64 {
        atoms
            .iter()
            .zip(&radii)
            .map(|((a, _), r)| cutoff((z - a).norm(), *r))
            .sum()
    };
    // remainder on the whole disk: Gauss–Legendre panels in r, uniform θ
    let gl = gauss_legendre(8);
    let panels = 32;
    let nt = 256;
    let mut radial = Vec::new();
    for k in 0..panels {
        let (lo, hi) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
        for &(x, w) in &gl {
            let r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
            radial.push((r, r * w * 0.5 * (hi - lo)));
        }
    }
    let dt = 2.0 * PI / nt as f64;
    let rows: Vec<f64> = radial
        .par_iter()
        .map(|&(r, w)| -> Result<f64> {
            let mut s = 0.0;
            for k in 0..nt {
                let z = C64::from_polar(r, (k as f64 + 0.5) * dt);
                let weight = 1.0 - chi_sum(z);
                if weight > 0.0 {
                    s += weight * f(z)?;
                }
            }
            Ok(s * w * dt)
        })
        .collect::<Result<_>>()?;
    let mut total: f64 = rows.iter().sum();
    // off-centre atoms lose resolution below ~1e-12 in absolute coordinates
    let rule = DiskRule {
        inner_fraction: 1e-10,
        ..DiskRule::default()
    };
    for (j, (a, m)) in atoms.iter().enumerate() {
        let rho = radii[j];
        let delta = -p * m / (2.0 * PI);
        let rings = rule.rings(&ChartPoint::north(*a), 0.0, rho);
        let parts: Vec<(f64, f64)> = rings
            .par_iter()
            .map(|ring| -> Result<(f64, f64)> {
                let mut s = 0.0;
                for z in ring.points() {
                    s += cutoff((z.coord - a).norm(), rho) * f(z.coord)?;
                }
                Ok((s * ring.weight, s / ring.angles.len() as f64))
            })
            .collect::<Result<_>>()?;
        total += parts.iter().map(|x| x.0).sum::<f64>();
        // analytic tail below the innermost ring: ∫_0^{r0} F r^δ 2π r dr
        let r0 = rings[0].radius;
        let mean0 = parts[0].1;
        let lo = rule.inner_fraction * rho;
        let f0 = mean0 * r0.powf(-delta);
        total += 2.0 * PI * f0 * lo.powf(delta + 2.0) / (delta + 2.0);
    }
    Ok(total)
}

/// Exponential integrability of the potential: `‖e^v‖_{L^p(D)} ≤ C₂(p, μ(D))`.
pub fn p1_check(mu: &DiskMeasure, p: f64) -> Result<PotentialReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::MassOutOfRange(format!("exponent p = {p} must be at least 1")));
    }
    let mass = mu.mass();
    if mass < 0.0 || mass >= 4.0 * PI / p {
        return Err(Error::MassOutOfRange(format!(
            "mass {mass} not in [0, 4π/p) = [0, {})",
            4.0 * PI / p
        )));
    }
    let (delta, rhs) = exponential_bound(mass, p);
    let lhs = integrate_exp_potential(mu, p)?.powf(1.0 / p);
    Ok(PotentialReport {
        kappa: mass,
        p,
        delta: Some(delta),
        constant: Some(rhs),
        inequalities: vec![Inequality::new("exp_potential_lp", lhs, rhs, 1e-3)],
        v_range: None,
        w_range: None,
        pass: false,
    }
    .finish())
}

/// Euclidean 5-point Laplacian of a closure.
fn euclidean_laplacian(f: &(impl Fn(C64) -> f64 + ?Sized), z: C64, h: f64) -> f64 {
    (f(z + h) + f(z - h) + f(z + C64::new(0.0, h)) + f(z - C64::new(0.0, h)) - 4.0 * f(z)) / (h * h)
}

const FD_STEP: f64 = 1e-3;

/// Mean-value bound for a subharmonic `w`:
/// `e^{w(z)} ≤ (1/(π(1−|z|²)²)) ∫_D e^w`.
pub fn p2_check(w: &(dyn Fn(C64) -> f64 + Sync), grid: &DiskGrid, z: C64) -> Result<PotentialReport> {
    if z.norm() >= 1.0 {
        return Err(Error::Precondition("evaluation point must lie in the open unit disk".into()));
    }
    let values = grid.sample(w);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    // stencil truncation plus roundoff at step 1e-3
    let tol = 1e-5 * scale;
    let laps = grid.sample(|x| euclidean_laplacian(w, x, FD_STEP));
    if let Some((idx, worst)) = laps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .filter(|(_, l)| **l < -tol)
    {
        return Err(Error::Precondition(format!(
            "not subharmonic: Euclidean Laplacian {worst:e} at {}",
            grid.node(idx)
        )));
    }
    let exp_vals: Vec<f64> = values.iter().map(|v| v.exp()).collect();
    let integral = grid.integrate(&exp_vals);
    let rhs = integral / (PI * (1.0 - z.norm_sqr()).powi(2));
    let lhs = w(z).exp();
    Ok(PotentialReport {
        kappa: 0.0,
        p: 1.0,
        delta: None,
        constant: None,
        inequalities: vec![Inequality::new("mean_value", lhs, rhs, 1e-3)],
        v_range: None,
        w_range: None,
        pass: false,
    }
    .finish())
}

/// `16/(9π)`: the mean-value factor at the worst half-disk point.
pub const HALF_DISK_FACTOR: f64 = 16.0 / (9.0 * PI);

/// `C(p, κ) = 2^{κ/2π}·(16/(9π))·C₂(p, κ)`.
pub fn key_lemma_constant(p: f64, kappa: f64) -> f64 {
    2f64.powf(kappa / (2.0 * PI)) * HALF_DISK_FACTOR * exponential_bound(kappa, p).1
}

/// The composite estimate `‖e^φ‖_{L^p(D_{1/2})} ≤ C(p, κ)‖e^φ‖_{L^1(D)}`,
/// together with each intermediate inequality of its derivation.
pub fn key_lemma_check(phi: &(dyn Fn(C64) -> f64 + Sync), grid: &DiskGrid, p: f64) -> Result<PotentialReport> {
    let laps = grid.sample(|x| euclidean_laplacian(phi, x, FD_STEP));
    let density: Vec<f64> = laps.iter().map(|l| (-l).max(0.0)).collect();
    let kappa = grid.integrate(&density);
    if kappa >= 4.0 * PI {
        return Err(Error::Precondition(format!("κ = {kappa} is not below 4π")));
    }
    if !(p >= 1.0) || p * kappa >= 4.0 * PI {
        return Err(Error::Precondition(format!("p = {p} outside [1, 4π/κ) with κ = {kappa}")));
    }
    let mu = if kappa > 0.0 {
        DiskMeasure::new(Vec::new(), Some((*grid, density)))?
    } else {
        DiskMeasure::empty()
    };
    let nodes: Vec<C64> = (0..grid.len()).map(|i| grid.node(i)).collect();
    let v: Vec<f64> = nodes
        .par_iter()
        .map(|z| log_potential(&mu, *z))
        .collect::<Result<_>>()?;
    let phis: Vec<f64> = nodes.par_iter().map(|z| phi(*z)).collect();
    let w: Vec<f64> = phis.iter().zip(&v).map(|(a, b)| a - b).collect();
    let range = |x: &[f64]| x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let (vmin, vmax) = range(&v);
    let mut steps = Vec::new();
    let jensen = -kappa / (2.0 * PI) * LN_2;
    // v ≥ −(κ/2π) log 2
    steps.push(Inequality::new("potential_lower_bound", -vmin, -jensen, 1e-9));
    let int_w: f64 = grid.integrate(&w.iter().map(|x| x.exp()).collect::<Vec<_>>());
    let int_phi: f64 = grid.integrate(&phis.iter().map(|x| x.exp()).collect::<Vec<_>>());
    steps.push(Inequality::new("exp_w_integral", int_w, 2f64.powf(kappa / (2.0 * PI)) * int_phi, 1e-9));
    let half: Vec<usize> = (0..grid.len()).filter(|&i| nodes[i].norm() <= 0.5).collect();
    let sup_w_half = half.iter().map(|&i| w[i]).fold(f64::NEG_INFINITY, f64::max);
    steps.push(Inequality::new("mean_value_half_disk", sup_w_half.exp(), HALF_DISK_FACTOR * int_w, 1e-3));
    let (delta, c2) = exponential_bound(kappa, p);
    let lp_v = grid
        .integrate(&v.iter().map(|x| (p * x).exp()).collect::<Vec<_>>())
        .powf(1.0 / p);
    steps.push(Inequality::new("exp_potential_lp", lp_v, c2, 1e-3));
    let c = key_lemma_constant(p, kappa);
    let mut lp_half = 0.0;
    for &i in &half {
        lp_half += (p * phis[i]).exp() * grid.cell_area(i);
    }
    let lp_half = lp_half.powf(1.0 / p);
    steps.push(Inequality::new("composite", lp_half, c * int_phi, 1e-3));
    Ok(PotentialReport {
        kappa,
        p,
        delta: Some(delta),
        constant: Some(c),
        inequalities: steps,
        v_range: Some((vmin, vmax)),
        w_range: Some(range(&w)),
        pass: false,
    }
    .finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rectangle_self_cell() {
        // unit square: ∫ log|ζ| = −1.0612…
        let v = rectangle_log_integral(0.5, 0.5);
        let expected = 0.5 * ((0.5f64).ln() - 3.0 + PI / 2.0);
        assert!((v - expected).abs() < 1e-14);
        // brute-force midpoint check on a 2×1 rectangle
        let (a, b) = (1.0, 0.5);
        let n = 2000;
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                let x = -a + (i as f64 + 0.5) * 2.0 * a / n as f64;
                let y = -b + (k as f64 + 0.5) * 2.0 * b / n as f64;
                s += (x * x + y * y).sqrt().ln();
            }
        }
        s *= 4.0 * a * b / (n * n) as f64;
        assert!((s - rectangle_log_integral(a, b)).abs() < 1e-5);
    }

    #[test]
    fn potential_examples() {
        assert_eq!(log_potential(&DiskMeasure::empty(), c(0.3, 0.0)).unwrap(), 0.0);
        let mu = DiskMeasure::new(vec![(c(0.0, 0.0), PI)], None).unwrap();
        let z = c(0.3, 0.4);
        assert!((log_potential(&mu, z).unwrap() + 0.5 * z.norm().ln()).abs() < 1e-15);
        assert_eq!(log_potential(&mu, c(0.0, 0.0)), Err(Error::AtAtom));
    }

    #[test]
    fn uniform_disk_potential_outside() {
        let grid = DiskGrid { nr: 48, nt: 96 };
        let (r, m) = (0.5, 2.0);
        let dens = grid.sample(|z| if z.norm() <= r { m / (PI * r * r) } else { 0.0 });
        let mu = DiskMeasure::new(vec![], Some((grid, dens))).unwrap();
        let z = c(0.9, 0.0);
        let expected = -(mu.mass() / (2.0 * PI)) * z.norm().ln();
        assert!((log_potential(&mu, z).unwrap() - expected).abs() < 1e-3 * expected.abs());
    }

    #[test]
    fn p1_atom_example() {
        let mu = DiskMeasure::new(vec![(c(0.0, 0.0), PI)], None).unwrap();
        let r = p1_check(&mu, 1.0).unwrap();
        let q = &r.inequalities[0];
        assert!((q.lhs - 4.0 * PI / 3.0).abs() < 1e-4 * q.lhs, "{}", q.lhs);
        assert!((q.rhs - 11.847).abs() < 1e-3);
        assert!(r.pass);
        let empty = p1_check(&DiskMeasure::empty(), 1.0).unwrap();
        assert!((empty.inequalities[0].lhs - PI).abs() < 1e-10);
        assert!((empty.inequalities[0].rhs - 4.0 * PI).abs() < 1e-12);
        let heavy = DiskMeasure::new(vec![(c(0.0, 0.0), 4.0 * PI)], None).unwrap();
        assert!(matches!(p1_check(&heavy, 1.0), Err(Error::MassOutOfRange(_))));
    }

    #[test]
    fn p1_off_centre_atoms() {
        let mu = DiskMeasure::new(vec![(c(0.5, 0.2), 1.0), (c(-0.3, -0.6), 0.7)], None).unwrap();
        let r = p1_check(&mu, 2.0).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn p2_examples() {
        let grid = DiskGrid { nr: 128, nt: 128 };
        let r = p2_check(&|_| 0.0, &grid, c(0.0, 0.0)).unwrap();
        let q = &r.inequalities[0];
        assert!((q.lhs - 1.0).abs() < 1e-12 && (q.rhs - 1.0).abs() < 1e-6);
        let r = p2_check(&|z: C64| z.norm_sqr(), &grid, c(0.0, 0.0)).unwrap();
        assert!((r.inequalities[0].rhs - (std::f64::consts::E - 1.0)).abs() < 1e-4);
        assert!(r.pass);
        assert!(p2_check(&|z: C64| z.re, &grid, c(0.5, 0.0)).unwrap().pass);
        assert!(p2_check(&|z: C64| -z.norm_sqr(), &grid, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn key_lemma_harmonic_and_quadratic() {
        let grid = DiskGrid { nr: 48, nt: 96 };
        let r = key_lemma_check(&|z: C64| z.re, &grid, 3.0).unwrap();
        assert!(r.pass && r.kappa.abs() < 1e-8);
        let r = key_lemma_check(&|z: C64| -0.5 * z.norm_sqr(), &grid, 1.0).unwrap();
        assert!((r.kappa - 2.0 * PI).abs() < 1e-3);
        assert!(r.pass, "{:?}", r.inequalities);
        assert!(key_lemma_check(&|z: C64| -1.2 * z.norm_sqr(), &grid, 1.0).is_err());
    }
}
