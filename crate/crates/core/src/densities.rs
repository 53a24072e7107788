//! Pointwise energy and curvature densities, σ, and the Bochner residuals.
//!
//! Conventions: the domain metric is `g |dz|^2`, `e′ = h(u_z, u_z)/g`,
//! `e″ = h(u_z̄, u_z̄)/g`, and `Δ = −(1/g)(∂_x² + ∂_y²)` is the nonnegative
//! Laplacian. With `A = u_z ⊗ ū_z` and `B = u_z̄ ⊗ ū_z̄` the curvature
//! densities are
//!
//! `q′ = −K(A − B, A)/(g·tr_h A)`, `q″ = K(A − B, B)/(g·tr_h B)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{hermitian, ChartPoint, CurveMetric, DomainSurface, KahlerTarget, Tensor4};
use crate::maps::{Jet, MapKind, SmoothMap};
use crate::{Error, Result, C64};

/// Relative floor below which `e′` (or `e″`) counts as zero.
pub const REL_FLOOR: f64 = 1e-12;
/// Absolute floor on `e` below which both densities vanish.
pub const ABS_FLOOR: f64 = 1e-24;

/// Express the jet in a chart that the target supports.
pub fn prepare_jet(j: &Jet, target: &KahlerTarget) -> Result<Jet> {
    if j.dim() != target.dim() {
        return Err(Error::InvalidInput(format!(
            "map has target dimension {} but the target has dimension {}",
            j.dim(),
            target.dim()
        )));
    }
    if target.is_compact() || j.chart == 0 {
        Ok(j.clone())
    } else {
        j.in_target_chart(0)
            .map_err(|_| Error::InvalidInput("map reaches infinity in a flat target".into()))
    }
}

fn outer(x: &[C64], y: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut m = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            m.push(x[a] * y[b].conj());
        }
    }
    m
}

/// `(e′, e″)` at `p`.
pub fn energy_parts(j: &Jet, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<(f64, f64)> {
    let j = prepare_jet(j, target)?;
    let g = domain.conformal_factor(p);
    let h = target.metric(j.chart, &j.u());
    let (a, b) = (j.u_z(), j.u_zb());
    Ok((hermitian(&h, &a, &a).re / g, hermitian(&h, &b, &b).re / g))
}

/// Target-metric norm of the tension `u_zz̄ + Γ(u_z, u_z̄)`.
pub fn harmonic_residual(j: &Jet, target: &KahlerTarget) -> Result<f64> {
    let j = prepare_jet(j, target)?;
    let n = j.dim();
    let u = j.u();
    let gam = target.christoffel(j.chart, &u);
    let (a, b, ab) = (j.u_z(), j.u_zb(), j.u_zzb());
    let tau: Vec<C64> = (0..n)
        .map(|be| {
            let mut t = ab[be];
            for al in 0..n {
                for ga in 0..n {
                    t += gam[(be * n + al) * n + ga] * a[al] * b[ga];
                }
            }
            t
        })
        .collect();
    let h = target.metric(j.chart, &u);
    Ok(hermitian(&h, &tau, &tau).re.max(0.0).sqrt())
}

/// Harmonicity test relative to the size of the jet.
pub fn is_harmonic(j: &Jet, target: &KahlerTarget) -> Result<bool> {
    let r = harmonic_residual(j, target)?;
    let jj = prepare_jet(j, target)?;
    let h = target.metric(jj.chart, &jj.u());
    let scale: f64 = [jj.u_z(), jj.u_zb(), jj.u_zzb()]
        .iter()
        .map(|v| hermitian(&h, v, v).re.sqrt())
        .sum();
    Ok(r <= 1e-9 * (1.0 + scale))
}

struct Local {
    g: f64,
    h: Vec<C64>,
    k: Tensor4,
    a: Vec<C64>,
    b: Vec<C64>,
    e1: f64,
    e2: f64,
    kind: MapKind,
    dir_a: Vec<C64>,
    dir_b: Vec<C64>,
}

fn local(j: &Jet, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<Local> {
    let j = prepare_jet(j, target)?;
    let u = j.u();
    let g = domain.conformal_factor(p);
    let h = target.metric(j.chart, &u);
    let k = target.curvature_tensor(j.chart, &u);
    let (a, b) = (j.u_z(), j.u_zb());
    let e1 = hermitian(&h, &a, &a).re / g;
    let e2 = hermitian(&h, &b, &b).re / g;
    let direction = |v: Vec<C64>| {
        if hermitian(&h, &v, &v).re > 0.0 {
            v
        } else {
            let mut e = vec![C64::new(0.0, 0.0); v.len()];
            e[0] = C64::new(1.0, 0.0);
            e
        }
    };
    let dir_a = direction(j.u_zz());
    let dir_b = direction(j.u_zbzb());
    Ok(Local {
        g,
        h,
        k,
        a,
        b,
        e1,
        e2,
        kind: j.kind,
        dir_a,
        dir_b,
    })
}

fn below_floor(x: f64, e: f64) -> bool {
    x <= REL_FLOOR * e
}

/// `(q′, q″)` at `p`, with the removable values on the zero sets.
///
/// Where `u_z` (resp. `u_z̄`) falls below the floor, the degree-zero part of
/// the quotient is evaluated along the limiting direction of `u_z`
/// (taken from `u_zz`, resp. `u_z̄z̄`), which is the limit of the
/// generic formula.
pub fn curvature_density(j: &Jet, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<(f64, f64)> {
    let l = local(j, domain, target, p)?;
    Ok(curvature_from_local(&l))
}

fn curvature_from_local(l: &Local) -> (f64, f64) {
    let e = l.e1 + l.e2;
    if e <= ABS_FLOOR {
        return (0.0, 0.0);
    }
    let amat = outer(&l.a, &l.a);
    let bmat = outer(&l.b, &l.b);
    let diff: Vec<C64> = amat.iter().zip(&bmat).map(|(x, y)| x - y).collect();
    let q1 = match l.kind {
        MapKind::Antiholomorphic => 0.0,
        _ if below_floor(l.e1, e) => {
            let d = &l.dir_a;
            let dmat = outer(d, d);
            let tr = hermitian(&l.h, d, d).re;
            l.k.contract(&bmat, &dmat).re / (l.g * tr)
        }
        _ => -l.k.contract(&diff, &amat).re / (l.g * l.g * l.e1),
    };
    let q2 = match l.kind {
        MapKind::Holomorphic => 0.0,
        _ if below_floor(l.e2, e) => {
            let d = &l.dir_b;
            let dmat = outer(d, d);
            let tr = hermitian(&l.h, d, d).re;
            l.k.contract(&amat, &dmat).re / (l.g * tr)
        }
        _ => l.k.contract(&diff, &bmat).re / (l.g * l.g * l.e2),
    };
    (q1, q2)
}

/// Specialised evaluation modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialMode {
    Holomorphic,
    Curve,
    ConstantC,
}

/// Result of a specialised evaluation, cross-checked against the generic path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialDensity {
    pub q_holo: f64,
    pub q_anti: f64,
    pub sigma: Option<f64>,
    pub generic_mismatch: f64,
}

/// Constant holomorphic sectional curvature of the target, if any.
pub fn constant_curvature(target: &KahlerTarget) -> Option<f64> {
    match target {
        KahlerTarget::Curve(CurveMetric::Sphere { curvature }) => Some(*curvature),
        KahlerTarget::FubiniStudy { c, .. } => Some(*c),
        _ => None,
    }
}

/// `σ = ½(1 − |h(a,b)|²/(h(a,a) h(b,b)))`.
fn sigma_closed_form(l: &Local) -> Option<f64> {
    let e = l.e1 + l.e2;
    if e <= ABS_FLOOR {
        return None;
    }
    let lo1 = below_floor(l.e1, e);
    let lo2 = below_floor(l.e2, e);
    if lo1 || lo2 {
        return Some(0.0);
    }
    let ab = hermitian(&l.h, &l.a, &l.b).norm_sqr();
    let aa = hermitian(&l.h, &l.a, &l.a).re;
    let bb = hermitian(&l.h, &l.b, &l.b).re;
    Some((0.5 * (1.0 - ab / (aa * bb))).clamp(0.0, 0.5))
}

/// σ recovered from `(q′, q″)` through the constant-c forms
/// `q′ = (c/2)((e′−e″) + σe″)` and `q″ = −(c/2)((e′−e″) − σe′)`
/// by least squares. Rank-one differentials give 0; `None` when both
/// energy parts vanish.
pub fn sigma_from_densities(q1: f64, q2: f64, e1: f64, e2: f64, c: f64) -> Option<f64> {
    let e = e1 + e2;
    if e <= ABS_FLOOR {
        return None;
    }
    if below_floor(e1, e) || below_floor(e2, e) {
        return Some(0.0);
    }
    let r1 = 2.0 * q1 / c - (e1 - e2);
    let r2 = 2.0 * q2 / c + (e1 - e2);
    Some((e2 * r1 + e1 * r2) / (e2 * e2 + e1 * e1))
}

pub fn curvature_density_special(
    j: &Jet,
    domain: &DomainSurface,
    target: &KahlerTarget,
    p: &ChartPoint,
    mode: SpecialMode,
) -> Result<SpecialDensity> {
    let l = local(j, domain, target, p)?;
    let (g1, g2) = curvature_from_local(&l);
    let (q1, q2, sigma) = match mode {
        SpecialMode::Holomorphic => {
            if l.b.iter().any(|x| x.norm() != 0.0) {
                return Err(Error::Precondition("holomorphic mode on a jet with u_z̄ ≠ 0".into()));
            }
            let e = l.e1;
            if e <= ABS_FLOOR {
                (0.0, 0.0, None)
            } else {
                // q′ = ½ H(u_z) e′, with H the holomorphic sectional curvature
                let amat = outer(&l.a, &l.a);
                let tr = hermitian(&l.h, &l.a, &l.a).re;
                let hsc = -2.0 * l.k.contract(&amat, &amat).re / (tr * tr);
                (0.5 * hsc * e, 0.0, None)
            }
        }
        SpecialMode::Curve => {
            let KahlerTarget::Curve(_) = target else {
                return Err(Error::Precondition("curve mode on a higher-dimensional target".into()));
            };
            let jj = prepare_jet(j, target)?;
            let km = target.curve_gauss_curvature(jj.chart, jj.u()[0]).unwrap();
            let d = l.e1 - l.e2;
            let q1 = if l.kind == MapKind::Antiholomorphic { 0.0 } else { 0.5 * km * d };
            let q2 = if l.kind == MapKind::Holomorphic { 0.0 } else { -0.5 * km * d };
            (q1, q2, None)
        }
        SpecialMode::ConstantC => {
            let c = constant_curvature(target)
                .filter(|c| *c > 0.0)
                .ok_or_else(|| Error::Precondition("constant-c mode needs a round sphere or Fubini–Study target".into()))?;
            let s = sigma_closed_form(&l).unwrap_or(0.0);
            let d = l.e1 - l.e2;
            let q1 = if l.kind == MapKind::Antiholomorphic { 0.0 } else { 0.5 * c * (d + s * l.e2) };
            let q2 = if l.kind == MapKind::Holomorphic { 0.0 } else { -0.5 * c * (d - s * l.e1) };
            (q1, q2, sigma_from_densities(g1, g2, l.e1, l.e2, c))
        }
    };
    let scale = 1.0 + g1.abs() + g2.abs();
    let mismatch = ((q1 - g1).abs() + (q2 - g2).abs()) / scale;
    Ok(SpecialDensity {
        q_holo: q1,
        q_anti: q2,
        sigma,
        generic_mismatch: mismatch,
    })
}

/// `(q′₊, q″₊, q₊)`.
pub fn positive_parts(q1: f64, q2: f64) -> (f64, f64, f64) {
    let (a, b) = (q1.max(0.0), q2.max(0.0));
    (a, b, a + b)
}

/// All pointwise densities at one domain point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub e: f64,
    pub e_holo: f64,
    pub e_anti: f64,
    pub q_holo: f64,
    pub q_anti: f64,
    pub q_plus: f64,
    pub sigma: Option<f64>,
    pub omega_norm: f64,
    /// `√2|Ω|e − |q′|` and `√2|Ω|e − |q″|`.
    pub cs_margin: (f64, f64),
}

pub fn density_report(j: &Jet, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<DensityReport> {
    let l = local(j, domain, target, p)?;
    let (q1, q2) = curvature_from_local(&l);
    let jj = prepare_jet(j, target)?;
    let omega = target.curvature_operator_norm(jj.chart, &jj.u());
    let e = l.e1 + l.e2;
    let sigma = constant_curvature(target)
        .filter(|c| *c > 0.0)
        .and_then(|c| sigma_from_densities(q1, q2, l.e1, l.e2, c));
    let bound = std::f64::consts::SQRT_2 * omega * e;
    Ok(DensityReport {
        e,
        e_holo: l.e1,
        e_anti: l.e2,
        q_holo: q1,
        q_anti: q2,
        q_plus: positive_parts(q1, q2).2,
        sigma,
        omega_norm: omega,
        cs_margin: (bound - q1.abs(), bound - q2.abs()),
    })
}

/// Evaluate `m` at `p` and report. Non-finite values are an error naming `p`.
pub fn density_at(m: &dyn SmoothMap, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<DensityReport> {
    let j = m.jet(p)?;
    let r = density_report(&j, domain, target, p)?;
    if !(r.e.is_finite() && r.q_holo.is_finite() && r.q_anti.is_finite()) {
        return Err(Error::NonFinite {
            chart: p.chart,
            re: p.coord.re,
            im: p.coord.im,
        });
    }
    Ok(r)
}

/// Check of `e = e′ + e″` against `(|u_x|² + |u_y|²)/(2g)` and of
/// `g(e′ − e″) = −Im h(u_x, u_y)` (pullback of the Kähler form).
/// Returns the two relative defects.
pub fn pullback_form_check(j: &Jet, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<(f64, f64)> {
    let jj = prepare_jet(j, target)?;
    let g = domain.conformal_factor(p);
    let h = target.metric(jj.chart, &jj.u());
    let (a, b) = (jj.u_z(), jj.u_zb());
    let x: Vec<C64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
    let y: Vec<C64> = a.iter().zip(&b).map(|(p, q)| C64::new(0.0, 1.0) * (p - q)).collect();
    let (e1, e2) = energy_parts(j, domain, target, p)?;
    let e_real = (hermitian(&h, &x, &x).re + hermitian(&h, &y, &y).re) / (2.0 * g);
    let omega = -hermitian(&h, &x, &y).im;
    let scale = (e1 + e2).max(f64::MIN_POSITIVE);
    Ok((
        (e_real - (e1 + e2)).abs() / scale,
        (omega - g * (e1 - e2)).abs() / (g * scale),
    ))
}

/// Points of a uniform grid with spacing `2/n` on `[−1,1]²`, restricted to
/// the closed unit disk, in both charts. The grid is offset by half a step
/// so that no node lies on the seam.
pub fn sample_grid(n: usize) -> Vec<ChartPoint> {
    let h = 2.0 / n as f64;
    let mut out = Vec::new();
    for chart in [crate::geometry::Chart::North, crate::geometry::Chart::South] {
        for i in 0..n {
            for k in 0..n {
                let z = C64::new(-1.0 + (i as f64 + 0.5) * h, -1.0 + (k as f64 + 0.5) * h);
                if z.norm() <= 1.0 {
                    out.push(ChartPoint::new(chart, z));
                }
            }
        }
    }
    out
}

/// Density reports over a list of points, evaluated in parallel and
/// returned in input order.
pub fn density_field(
    m: &dyn SmoothMap,
    domain: &DomainSurface,
    target: &KahlerTarget,
    points: &[ChartPoint],
) -> Result<Vec<DensityReport>> {
    points
        .par_iter()
        .map(|p| density_at(m, domain, target, p))
        .collect()
}

pub const DENSITY_CSV_HEADER: &str = "chart,re,im,e_holo,e_anti,q_holo,q_anti,q_plus,sigma";

pub fn density_csv(points: &[ChartPoint], reports: &[DensityReport]) -> String {
    let mut out = String::from(DENSITY_CSV_HEADER);
    out.push('\n');
    for (p, r) in points.iter().zip(reports) {
        let sigma = r.sigma.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            p.chart.tag(),
            p.coord.re,
            p.coord.im,
            r.e_holo,
            r.e_anti,
            r.q_holo,
            r.q_anti,
            r.q_plus,
            sigma
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Bochner identities

/// Covariant second derivatives, Bochner residuals and the Chern–Lu
/// quantities at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerFields {
    pub point: ChartPoint,
    pub beta_holo_sq: f64,
    pub beta_anti_sq: f64,
    pub alpha_holo: Option<f64>,
    pub alpha_anti: Option<f64>,
    pub residual_e_holo: f64,
    pub residual_e_anti: f64,
}

/// `(|β′|², |β″|²)` from the jet, where
/// `β′ = u_zz + Γ(u_z, u_z) − (∂_z log g) u_z` and `|β′|² = h(β′, β′)/g²`.
pub fn beta_squares(j: &Jet, domain: &DomainSurface, target: &KahlerTarget, p: &ChartPoint) -> Result<(f64, f64)> {
    let j = prepare_jet(j, target)?;
    let n = j.dim();
    let u = j.u();
    let gam = target.christoffel(j.chart, &u);
    let h = target.metric(j.chart, &u);
    let g = domain.conformal_factor(p);
    let dlg = domain.log_factor_dz(p);
    let (a, b, aa, bb) = (j.u_z(), j.u_zb(), j.u_zz(), j.u_zbzb());
    let covariant = |first: &[C64], second: &[C64], dl: C64| -> Vec<C64> {
        (0..n)
            .map(|be| {
                let mut t = second[be] - dl * first[be];
                for al in 0..n {
                    for ga in 0..n {
                        t += gam[(be * n + al) * n + ga] * first[al] * first[ga];
                    }
                }
                t
            })
            .collect()
    };
    let b1 = covariant(&a, &aa, dlg);
    let b2 = covariant(&b, &bb, dlg.conj());
    Ok((
        hermitian(&h, &b1, &b1).re / (g * g),
        hermitian(&h, &b2, &b2).re / (g * g),
    ))
}

/// Bochner quantities at `p` with 5-point finite differences of step `step`
/// in `p`'s chart.
pub fn bochner_at(
    m: &dyn SmoothMap,
    domain: &DomainSurface,
    target: &KahlerTarget,
    p: &ChartPoint,
    step: f64,
) -> Result<BochnerFields> {
    let p = p.canonical();
    let offsets = [
        C64::new(step, 0.0),
        C64::new(-step, 0.0),
        C64::new(0.0, step),
        C64::new(0.0, -step),
    ];
    let centre = m.jet(&p)?;
    let (e1, e2) = energy_parts(&centre, domain, target, &p)?;
    let mut s1 = -4.0 * e1;
    let mut s2 = -4.0 * e2;
    let mut l1 = -4.0 * e1.ln();
    let mut l2 = -4.0 * e2.ln();
    for o in offsets {
        let q = ChartPoint::new(p.chart, p.coord + o);
        let (f1, f2) = energy_parts(&m.jet(&q)?, domain, target, &q)?;
        s1 += f1;
        s2 += f2;
        l1 += f1.ln();
        l2 += f2.ln();
    }
    let g = domain.conformal_factor(&p);
    let lap = |s: f64| -s / (step * step * g);
    let (q1, q2) = curvature_density(&centre, domain, target, &p)?;
    let (b1, b2) = beta_squares(&centre, domain, target, &p)?;
    let ks = domain.gauss_curvature(&p);
    let e = e1 + e2;
    let floor = 1e-8 * e.max(1e-300);
    let alpha = |l: f64, ei: f64, q: f64| if ei > floor && l.is_finite() { Some(-0.25 * lap(l) + q - 0.5 * ks) } else { None };
    Ok(BochnerFields {
        point: p,
        beta_holo_sq: b1,
        beta_anti_sq: b2,
        alpha_holo: alpha(l1, e1, q1),
        alpha_anti: alpha(l2, e2, q2),
        residual_e_holo: 0.25 * lap(s1) + b1 - q1 * e1 + 0.5 * ks * e1,
        residual_e_anti: 0.25 * lap(s2) + b2 - q2 * e2 + 0.5 * ks * e2,
    })
}

/// Bochner fields over a point set, parallel, in input order.
pub fn bochner_residual(
    m: &dyn SmoothMap,
    points: &[ChartPoint],
    step: f64,
    domain: &DomainSurface,
    target: &KahlerTarget,
) -> Result<Vec<BochnerFields>> {
    points
        .par_iter()
        .map(|p| bochner_at(m, domain, target, p, step))
        .collect()
}

/// Refinement study of the Bochner residuals at fixed sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerConvergence {
    pub steps: Vec<f64>,
    pub sup_residual_holo: Vec<f64>,
    pub sup_residual_anti: Vec<f64>,
    pub sup_beta_holo_sq: f64,
    pub min_alpha_holo: Option<f64>,
    pub min_alpha_anti: Option<f64>,
    /// Successive ratios of the holomorphic sup residuals.
    pub ratios: Vec<f64>,
    pub warning: Option<String>,
}

/// Sample points with spacing 1/8 in both charts used for refinement studies.
pub fn coarse_points() -> Vec<ChartPoint> {
    let mut out = Vec::new();
    for chart in [crate::geometry::Chart::North, crate::geometry::Chart::South] {
        for i in -8i32..=8 {
            for k in -8i32..=8 {
                let z = C64::new(i as f64 / 8.0, k as f64 / 8.0);
                if z.norm() <= 1.0 {
                    out.push(ChartPoint::new(chart, z));
                }
            }
        }
    }
    out
}

pub fn bochner_convergence(
    m: &dyn SmoothMap,
    domain: &DomainSurface,
    target: &KahlerTarget,
    steps: &[f64],
) -> Result<BochnerConvergence> {
    let points = coarse_points();
    let mut sup1 = Vec::new();
    let mut sup2 = Vec::new();
    let mut beta: f64 = 0.0;
    let mut amin1: Option<f64> = None;
    let mut amin2: Option<f64> = None;
    for &h in steps {
        let fields = bochner_residual(m, &points, h, domain, target)?;
        sup1.push(fields.iter().map(|f| f.residual_e_holo.abs()).fold(0.0, f64::max));
        sup2.push(fields.iter().map(|f| f.residual_e_anti.abs()).fold(0.0, f64::max));
        beta = beta.max(fields.iter().map(|f| f.beta_holo_sq).fold(0.0, f64::max));
        let fold = |acc: Option<f64>, v: Option<f64>| match (acc, v) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        // the finest step gives the most accurate α
        amin1 = fields.iter().map(|f| f.alpha_holo).fold(None, fold);
        amin2 = fields.iter().map(|f| f.alpha_anti).fold(None, fold);
    }
    let ratios: Vec<f64> = sup1.windows(2).map(|w| w[0] / w[1]).collect();
    let scale = 1.0 + sup1.first().copied().unwrap_or(0.0);
    let resolved = sup1.last().copied().unwrap_or(0.0) <= 1e-10 * scale;
    let warning = if !resolved && ratios.iter().any(|r| !(3.0..=5.0).contains(r)) {
        Some("grid too coarse to certify second-order convergence".to_string())
    } else {
        None
    };
    Ok(BochnerConvergence {
        steps: steps.to_vec(),
        sup_residual_holo: sup1,
        sup_residual_anti: sup2,
        sup_beta_holo_sq: beta,
        min_alpha_holo: amin1,
        min_alpha_anti: amin2,
        ratios,
        warning,
    })
}
