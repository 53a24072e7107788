//! Explicit maps from the sphere with exact second-order jets.
//!
//! Every map reports its value in an affine chart of the target. Jets are
//! computed by polynomial calculus on [`ScalarJet`]s, whose arithmetic
//! carries the six quantities `f, f_z, f_z̄, f_zz, f_zz̄, f_z̄z̄` through
//! sums, products and quotients.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{Chart, ChartPoint, Mobius};
use crate::poly::{cluster_roots, Poly};
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Map kind tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Holomorphic,
    Antiholomorphic,
    General,
}

impl MapKind {
    pub fn conjugate(self) -> MapKind {
        match self {
            MapKind::Holomorphic => MapKind::Antiholomorphic,
            MapKind::Antiholomorphic => MapKind::Holomorphic,
            MapKind::General => MapKind::General,
        }
    }
}

/// Second-order jet of a complex-valued function of one complex variable.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ScalarJet {
    pub v: C64,
    pub z: C64,
    pub zb: C64,
    pub zz: C64,
    pub zzb: C64,
    pub zbzb: C64,
}

impl ScalarJet {
    pub fn constant(v: C64) -> Self {
        ScalarJet {
            v,
            ..Default::default()
        }
    }

    /// Holomorphic jet from value, first and second derivative.
    pub fn holomorphic(d: [C64; 3]) -> Self {
        ScalarJet {
            v: d[0],
            z: d[1],
            zz: d[2],
            ..Default::default()
        }
    }

    /// The coordinate function `z` itself.
    pub fn variable(z: C64) -> Self {
        Self::holomorphic([z, ONE, ZERO])
    }

    /// Complex conjugate of the function (a new jet in the same variable).
    pub fn conj(&self) -> Self {
        ScalarJet {
            v: self.v.conj(),
            z: self.zb.conj(),
            zb: self.z.conj(),
            zz: self.zbzb.conj(),
            zzb: self.zzb.conj(),
            zbzb: self.zz.conj(),
        }
    }

    /// Jet of `f(z̄)` given the jet of `f` at the conjugate point.
    pub fn swap(&self) -> Self {
        ScalarJet {
            v: self.v,
            z: self.zb,
            zb: self.z,
            zz: self.zbzb,
            zzb: self.zzb,
            zbzb: self.zz,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        ScalarJet {
            v: self.v + o.v,
            z: self.z + o.z,
            zb: self.zb + o.zb,
            zz: self.zz + o.zz,
            zzb: self.zzb + o.zzb,
            zbzb: self.zbzb + o.zbzb,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        ScalarJet {
            v: self.v * s,
            z: self.z * s,
            zb: self.zb * s,
            zz: self.zz * s,
            zzb: self.zzb * s,
            zbzb: self.zbzb * s,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        ScalarJet {
            v: self.v * o.v,
            z: self.z * o.v + self.v * o.z,
            zb: self.zb * o.v + self.v * o.zb,
            zz: self.zz * o.v + 2.0 * self.z * o.z + self.v * o.zz,
            zzb: self.zzb * o.v + self.z * o.zb + self.zb * o.z + self.v * o.zzb,
            zbzb: self.zbzb * o.v + 2.0 * self.zb * o.zb + self.v * o.zbzb,
        }
    }

    /// `self / o`; fails when the denominator vanishes.
    pub fn div(&self, o: &Self) -> Result<Self> {
        if o.v == ZERO {
            return Err(Error::ChartInfinity);
        }
        let b = o;
        let q = self.v / b.v;
        let qz = (self.z - q * b.z) / b.v;
        let qzb = (self.zb - q * b.zb) / b.v;
        Ok(ScalarJet {
            v: q,
            z: qz,
            zb: qzb,
            zz: (self.zz - 2.0 * qz * b.z - q * b.zz) / b.v,
            zzb: (self.zzb - qz * b.zb - qzb * b.z - q * b.zzb) / b.v,
            zbzb: (self.zbzb - 2.0 * qzb * b.zb - q * b.zbzb) / b.v,
        })
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut out = ScalarJet::constant(ONE);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Jet of `f∘φ` for a holomorphic change of variable with
    /// `[φ, φ′, φ″]` given and `self` the jet of `f` at `φ`.
    pub fn reparametrize(&self, phi: [C64; 3]) -> Self {
        let (d1, d2) = (phi[1], phi[2]);
        ScalarJet {
            v: self.v,
            z: self.z * d1,
            zb: self.zb * d1.conj(),
            zz: self.zz * d1 * d1 + self.z * d2,
            zzb: self.zzb * d1.norm_sqr(),
            zbzb: self.zbzb * (d1 * d1).conj() + self.zb * d2.conj(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.v, self.z, self.zb, self.zz, self.zzb, self.zbzb]
            .iter()
            .all(|c| c.is_finite())
    }
}

/// Jet of a map at a domain point: affine target chart index and one
/// scalar jet per target coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub chart: usize,
    pub comps: Vec<ScalarJet>,
    pub kind: MapKind,
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn u(&self) -> Vec<C64> {
        self.comps.iter().map(|c| c.v).collect()
    }
    pub fn u_z(&self) -> Vec<C64> {
        self.comps.iter().map(|c| c.z).collect()
    }
    pub fn u_zb(&self) -> Vec<C64> {
        self.comps.iter().map(|c| c.zb).collect()
    }
    pub fn u_zz(&self) -> Vec<C64> {
        self.comps.iter().map(|c| c.zz).collect()
    }
    pub fn u_zzb(&self) -> Vec<C64> {
        self.comps.iter().map(|c| c.zzb).collect()
    }
    pub fn u_zbzb(&self) -> Vec<C64> {
        self.comps.iter().map(|c| c.zbzb).collect()
    }

    /// Same jet expressed in the affine chart `k` of the target.
    pub fn in_target_chart(&self, k: usize) -> Result<Jet> {
        if k == self.chart {
            return Ok(self.clone());
        }
        let homog = self.homogeneous();
        let den = homog[k];
        let comps = homog
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, c)| c.div(&den))
            .collect::<Result<Vec<_>>>()?;
        Ok(Jet {
            chart: k,
            comps,
            kind: self.kind,
        })
    }

    fn homogeneous(&self) -> Vec<ScalarJet> {
        let mut out = Vec::with_capacity(self.dim() + 1);
        let mut it = self.comps.iter();
        for i in 0..=self.dim() {
            if i == self.chart {
                out.push(ScalarJet::constant(ONE));
            } else {
                out.push(*it.next().unwrap());
            }
        }
        out
    }

    /// Re-chart so that every affine coordinate has modulus at most one.
    pub fn normalized(self) -> Jet {
        let homog = self.homogeneous();
        let best = dominant_index(&homog);
        if best == self.chart {
            self
        } else {
            self.in_target_chart(best).unwrap_or(self)
        }
    }

    pub fn reparametrize(&self, phi: [C64; 3]) -> Jet {
        Jet {
            chart: self.chart,
            comps: self.comps.iter().map(|c| c.reparametrize(phi)).collect(),
            kind: self.kind,
        }
    }

    pub fn swap(&self) -> Jet {
        Jet {
            chart: self.chart,
            comps: self.comps.iter().map(|c| c.swap()).collect(),
            kind: self.kind.conjugate(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }
}

/// Index of the largest-modulus component; ties go to the lowest index.
fn dominant_index(homog: &[ScalarJet]) -> usize {
    let mut best = 0;
    for (i, c) in homog.iter().enumerate() {
        if c.v.norm() > homog[best].v.norm() {
            best = i;
        }
    }
    best
}

/// A smooth map from the domain sphere with an exact jet contract.
pub trait SmoothMap: Send + Sync + fmt::Debug {
    fn target_dim(&self) -> usize;
    fn kind(&self) -> MapKind;
    /// Second-order jet at `p`. The target chart is chosen so that the
    /// affine coordinates are bounded by one.
    fn jet(&self, p: &ChartPoint) -> Result<Jet>;
    fn describe(&self) -> String;
    /// The underlying curve when the map is a rational curve into CP^1.
    fn as_rational(&self) -> Option<&ProjectiveCurve> {
        None
    }
    fn is_constant(&self) -> bool {
        false
    }
}

pub type MapRef = Arc<dyn SmoothMap>;

/// North-chart coordinate as a function of `p`'s own chart coordinate.
fn coordinate_jet(p: &ChartPoint) -> Result<ScalarJet> {
    let v = ScalarJet::variable(p.coord);
    match p.chart {
        Chart::North => Ok(v),
        Chart::South => ScalarJet::constant(ONE).div(&v),
    }
}

/// Holomorphic curve `z ↦ [P_0(z) : … : P_n(z)]` into CP^n.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveCurve {
    components: Vec<Poly>,
    degree: usize,
}

impl ProjectiveCurve {
    pub fn new(components: Vec<Poly>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidInput("a projective curve needs at least two components".into()));
        }
        if components.iter().all(|p| p.is_zero()) {
            return Err(Error::InvalidInput("all components vanish".into()));
        }
        let degree = components.iter().map(|p| if p.is_zero() { 0 } else { p.degree() }).max().unwrap();
        let curve = ProjectiveCurve { components, degree };
        curve.check_no_common_zero()?;
        Ok(curve)
    }

    /// Constant curve at the homogeneous point `value`.
    pub fn constant(value: &[C64]) -> Result<Self> {
        Self::new(value.iter().map(|&c| Poly::constant(c)).collect())
    }

    fn check_no_common_zero(&self) -> Result<()> {
        if self.degree == 0 {
            return Ok(());
        }
        // candidates: roots of the first nonzero component of positive degree
        let scale = self.components.iter().map(|p| p.scale()).fold(0.0, f64::max);
        for comp in &self.components {
            if comp.is_zero() || comp.degree() == 0 {
                continue;
            }
            for r in comp.roots()? {
                let m = self
                    .components
                    .iter()
                    .map(|p| p.eval(r).norm())
                    .fold(0.0, f64::max);
                if m <= 1e-9 * scale * (1.0 + r.norm()).powi(self.degree as i32) {
                    return Err(Error::InvalidInput(format!(
                        "components share a zero near {r}"
                    )));
                }
            }
            break;
        }
        Ok(())
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn target_dim(&self) -> usize {
        self.components.len() - 1
    }

    /// Homogeneous components as holomorphic jets in `p`'s chart.
    fn homogeneous_jets(&self, p: &ChartPoint) -> Vec<ScalarJet> {
        self.components
            .iter()
            .map(|poly| match p.chart {
                Chart::North => ScalarJet::holomorphic(poly.eval2(p.coord)),
                Chart::South => ScalarJet::holomorphic(poly.reversed(self.degree).eval2(p.coord)),
            })
            .collect()
    }

    /// Wronskian `P_1′P_0 − P_1P_0′` in the chart `chart` (CP^1 only).
    fn wronskian(&self, chart: Chart) -> Poly {
        let (q, p) = match chart {
            Chart::North => (self.components[0].clone(), self.components[1].clone()),
            Chart::South => (
                self.components[0].reversed(self.degree),
                self.components[1].reversed(self.degree),
            ),
        };
        p.derivative().mul(&q).sub(&p.mul(&q.derivative()))
    }
}

impl SmoothMap for ProjectiveCurve {
    fn target_dim(&self) -> usize {
        self.components.len() - 1
    }

    fn kind(&self) -> MapKind {
        MapKind::Holomorphic
    }

    fn jet(&self, p: &ChartPoint) -> Result<Jet> {
        let homog = self.homogeneous_jets(p);
        let j = dominant_index(&homog);
        let den = homog[j];
        let comps = homog
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, c)| c.div(&den))
            .collect::<Result<Vec<_>>>()?;
        let jet = Jet {
            chart: j,
            comps,
            kind: MapKind::Holomorphic,
        };
        if !jet.is_finite() {
            return Err(Error::NonFinite {
                chart: p.chart,
                re: p.coord.re,
                im: p.coord.im,
            });
        }
        Ok(jet)
    }

    fn describe(&self) -> String {
        format!("projective curve of degree {} into CP^{}", self.degree, self.target_dim())
    }

    fn as_rational(&self) -> Option<&ProjectiveCurve> {
        (self.components.len() == 2).then_some(self)
    }

    fn is_constant(&self) -> bool {
        self.degree == 0
    }
}

/// Rational map `p/q` into CP^1, stored as the curve `[q : p]`.
pub type RationalMap = ProjectiveCurve;

impl ProjectiveCurve {
    pub fn rational(numerator: Poly, denominator: Poly) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Self::new(vec![denominator, numerator])
    }

    pub fn identity() -> Self {
        Self::monomial(1)
    }

    pub fn monomial(d: usize) -> Self {
        Self::rational(Poly::monomial(ONE, d), Poly::constant(ONE)).unwrap()
    }
}

/// Rational normal curve `z ↦ [1 : √C(n,1) z : … : z^n]` in CP^n.
pub fn veronese(n: usize) -> Result<ProjectiveCurve> {
    if n == 0 {
        return Err(Error::InvalidInput("veronese degree must be at least 1".into()));
    }
    let mut binom = 1.0f64;
    let mut comps = Vec::with_capacity(n + 1);
    for k in 0..=n {
        comps.push(Poly::monomial(C64::new(binom.sqrt(), 0.0), k));
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    ProjectiveCurve::new(comps)
}

/// Ramification points of a rational map with their multiplicities.
///
/// Roots of the Wronskian are located in the north chart on `|z| ≤ 1` and
/// in the south chart on `|w| < 1`, clustered at radius 1e-7, and the total
/// is checked against `2d − 2`.
pub fn ramification(m: &ProjectiveCurve) -> Result<Vec<(ChartPoint, usize)>> {
    if m.components.len() != 2 {
        return Err(Error::InvalidInput("ramification requires a map into CP^1".into()));
    }
    if m.degree == 0 {
        return Err(Error::Precondition("ramification of a constant map".into()));
    }
    let mut out = Vec::new();
    for chart in [Chart::North, Chart::South] {
        let w = m.wronskian(chart);
        if w.is_zero() {
            return Err(Error::Numerical("vanishing Wronskian".into()));
        }
        let roots = w.roots()?;
        for (r, mult) in cluster_roots(&roots, 1e-7) {
            let inside = match chart {
                Chart::North => r.norm() <= 1.0,
                Chart::South => r.norm() < 1.0,
            };
            if inside {
                out.push((ChartPoint::new(chart, r), mult));
            }
        }
    }
    let total: usize = out.iter().map(|(_, k)| k).sum();
    if total != 2 * m.degree - 2 {
        return Err(Error::Numerical(format!(
            "ramification total {total} differs from 2d-2 = {}",
            2 * m.degree - 2
        )));
    }
    Ok(out)
}

/// Precomposition `m ∘ M` with a Möbius transformation of the domain.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub inner: MapRef,
    pub mobius: Mobius,
}

impl SmoothMap for Pullback {
    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }
    fn kind(&self) -> MapKind {
        self.inner.kind()
    }
    fn jet(&self, p: &ChartPoint) -> Result<Jet> {
        let (q, local) = self.mobius.map_point(p);
        let j = self.inner.jet(&q)?;
        Ok(j.reparametrize(local.eval2(p.coord)))
    }
    fn describe(&self) -> String {
        format!("{} precomposed with a Möbius map", self.inner.describe())
    }
    fn is_constant(&self) -> bool {
        self.inner.is_constant()
    }
}

/// `w ↦ m(λ w + c)`.
pub fn mobius_pullback(m: MapRef, lambda: f64, c: C64) -> Result<MapRef> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput("renormalisation scale must be positive".into()));
    }
    Ok(Arc::new(Pullback {
        inner: m,
        mobius: Mobius::affine(C64::new(lambda, 0.0), c),
    }))
}

/// `z ↦ m(z̄)`, flipping holomorphic and antiholomorphic.
#[derive(Clone, Debug)]
pub struct Conjugate(pub MapRef);

impl SmoothMap for Conjugate {
    fn target_dim(&self) -> usize {
        self.0.target_dim()
    }
    fn kind(&self) -> MapKind {
        self.0.kind().conjugate()
    }
    fn jet(&self, p: &ChartPoint) -> Result<Jet> {
        let q = ChartPoint::new(p.chart, p.coord.conj());
        Ok(self.0.jet(&q)?.swap())
    }
    fn describe(&self) -> String {
        format!("conjugate of {}", self.0.describe())
    }
    fn is_constant(&self) -> bool {
        self.0.is_constant()
    }
}

/// Polynomial `Σ c_{jk} z^j z̄^k` in the north coordinate, valued in a
/// curve target. Not defined at the south pole.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMap {
    pub terms: Vec<(C64, u32, u32)>,
}

impl SmoothMap for PolynomialMap {
    fn target_dim(&self) -> usize {
        1
    }
    fn kind(&self) -> MapKind {
        let holo = self.terms.iter().all(|t| t.2 == 0 || t.0 == ZERO);
        let anti = self.terms.iter().all(|t| t.1 == 0 || t.0 == ZERO);
        match (holo, anti) {
            (true, _) => MapKind::Holomorphic,
            (false, true) => MapKind::Antiholomorphic,
            _ => MapKind::General,
        }
    }
    fn jet(&self, p: &ChartPoint) -> Result<Jet> {
        let z = coordinate_jet(p)?;
        let zb = z.conj();
        let mut acc = ScalarJet::default();
        for &(c, j, k) in &self.terms {
            acc = acc.add(&z.powi(j).mul(&zb.powi(k)).scale(c));
        }
        curve_jet(acc, self.kind(), p)
    }
    fn describe(&self) -> String {
        format!("polynomial map with {} terms", self.terms.len())
    }
    fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| (t.1 == 0 && t.2 == 0) || t.0 == ZERO)
    }
}

/// `c_0 + Σ c_k X_k` for the embedding `X` of the unit sphere in R^3. A smooth
/// map defined on the whole sphere with bounded image; suited to the
/// flat target.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientLinearMap {
    pub offset: C64,
    pub coeffs: [C64; 3],
}

impl SmoothMap for AmbientLinearMap {
    fn target_dim(&self) -> usize {
        1
    }
    fn kind(&self) -> MapKind {
        MapKind::General
    }
    fn jet(&self, p: &ChartPoint) -> Result<Jet> {
        let z = ScalarJet::variable(p.coord);
        let zb = z.conj();
        let r2 = z.mul(&zb);
        let one = ScalarJet::constant(ONE);
        let s = one.add(&r2);
        // X1 + i X2 = 2z/s, X1 - i X2 = 2z̄/s, X3 = (1-|z|^2)/s in the north chart
        let plus = z.scale(C64::new(2.0, 0.0)).div(&s)?;
        let minus = zb.scale(C64::new(2.0, 0.0)).div(&s)?;
        let x3 = one.add(&r2.scale(C64::new(-1.0, 0.0))).div(&s)?;
        let half = C64::new(0.5, 0.0);
        let x1 = plus.add(&minus).scale(half);
        let x2 = plus.add(&minus.scale(C64::new(-1.0, 0.0))).scale(C64::new(0.0, -0.5));
        let (x2, x3) = match p.chart {
            Chart::North => (x2, x3),
            Chart::South => (x2.scale(C64::new(-1.0, 0.0)), x3.scale(C64::new(-1.0, 0.0))),
        };
        let value = ScalarJet::constant(self.offset)
            .add(&x1.scale(self.coeffs[0]))
            .add(&x2.scale(self.coeffs[1]))
            .add(&x3.scale(self.coeffs[2]));
        curve_jet(value, MapKind::General, p)
    }
    fn describe(&self) -> String {
        "linear function of the ambient coordinates".into()
    }
    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }
}

/// A map into CP^1 followed by the linear embedding
/// `[U_0 : U_1] ↦ [U_0 f_0 + U_1 f_1]` of CP^1 as a line in CP^n.
#[derive(Clone, Debug)]
pub struct LineEmbedding {
    pub inner: MapRef,
    pub frame: [Vec<C64>; 2],
}

impl LineEmbedding {
    pub fn new(inner: MapRef, f0: Vec<C64>, f1: Vec<C64>) -> Result<Self> {
        if inner.target_dim() != 1 || f0.len() != f1.len() || f0.len() < 2 {
            return Err(Error::InvalidInput("line embedding needs a CP^1 map and two equal-length vectors".into()));
        }
        let mut wedge = 0.0;
        for i in 0..f0.len() {
            for j in (i + 1)..f0.len() {
                wedge += (f0[i] * f1[j] - f0[j] * f1[i]).norm();
            }
        }
        if wedge < 1e-12 {
            return Err(Error::InvalidInput("frame vectors are linearly dependent".into()));
        }
        Ok(LineEmbedding {
            inner,
            frame: [f0, f1],
        })
    }
}

impl SmoothMap for LineEmbedding {
    fn target_dim(&self) -> usize {
        self.frame[0].len() - 1
    }
    fn kind(&self) -> MapKind {
        self.inner.kind()
    }
    fn jet(&self, p: &ChartPoint) -> Result<Jet> {
        let inner = self.inner.jet(p)?;
        let h = inner.homogeneous();
        let homog: Vec<ScalarJet> = (0..self.frame[0].len())
            .map(|k| h[0].scale(self.frame[0][k]).add(&h[1].scale(self.frame[1][k])))
            .collect();
        let j = dominant_index(&homog);
        let comps = homog
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, c)| c.div(&homog[j]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Jet {
            chart: j,
            comps,
            kind: inner.kind,
        })
    }
    fn describe(&self) -> String {
        format!("{} embedded as a line in CP^{}", self.inner.describe(), self.target_dim())
    }
    fn is_constant(&self) -> bool {
        self.inner.is_constant()
    }
}

/// Wrap a scalar value jet as a curve-target jet, switching to the chart
/// at infinity when `|u| > 1`.
fn curve_jet(value: ScalarJet, kind: MapKind, p: &ChartPoint) -> Result<Jet> {
    let jet = Jet {
        chart: 0,
        comps: vec![value],
        kind,
    }
    .normalized();
    if !jet.is_finite() {
        return Err(Error::NonFinite {
            chart: p.chart,
            re: p.coord.re,
            im: p.coord.im,
        });
    }
    Ok(jet)
}

/// Schedule of bubble scales `λ_n = scale · n^{-power}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub scale: f64,
    pub power: f64,
}

impl LambdaSchedule {
    pub fn at(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(-self.power)
    }
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule {
            scale: 1.0,
            power: 4.0,
        }
    }
}

pub const DEFAULT_SCHEDULE: [usize; 5] = [4, 8, 16, 32, 64];

type MemberFn = dyn Fn(usize) -> Result<MapRef> + Send + Sync;

/// Indexed family of maps with a declared limit.
#[derive(Clone)]
pub struct MapFamily {
    pub name: String,
    pub description: String,
    pub schedule: Vec<usize>,
    pub lambda: Option<LambdaSchedule>,
    /// Declared concentration points (informational, used by tests).
    pub declared_centers: Vec<ChartPoint>,
    pub limit: MapRef,
    member: Arc<MemberFn>,
}

impl fmt::Debug for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapFamily")
            .field("name", &self.name)
            .field("schedule", &self.schedule)
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl MapFamily {
    pub fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        schedule: Vec<usize>,
        limit: MapRef,
        member: impl Fn(usize) -> Result<MapRef> + Send + Sync + 'static,
    ) -> Result<Self> {
        if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("schedule must be nonempty and strictly increasing".into()));
        }
        Ok(MapFamily {
            name: name.into(),
            description: description.into(),
            schedule,
            lambda: None,
            declared_centers: Vec::new(),
            limit,
            member: Arc::new(member),
        })
    }

    pub fn member(&self, n: usize) -> Result<MapRef> {
        (self.member)(n)
    }

    pub fn with_schedule(mut self, schedule: Vec<usize>) -> Result<Self> {
        if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("schedule must be nonempty and strictly increasing".into()));
        }
        self.schedule = schedule;
        Ok(self)
    }

    /// Every member equal to `m`.
    pub fn constant_sequence(m: MapRef, schedule: Vec<usize>) -> Result<Self> {
        let limit = m.clone();
        Self::new("constant-sequence", m.describe(), schedule, limit, move |_| Ok(m.clone()))
    }

    /// Constant maps at the north-chart point `value`.
    pub fn constant(value: C64, schedule: Vec<usize>) -> Result<Self> {
        let m: MapRef = Arc::new(ProjectiveCurve::constant(&[ONE, value])?);
        let mut fam = Self::constant_sequence(m, schedule)?;
        fam.name = "constant".into();
        Ok(fam)
    }

    /// `u_n(z) = (z − c)/λ_n`, concentrating at `c` with constant limit ∞.
    pub fn shrinking_identity(center: C64, lambda: LambdaSchedule, schedule: Vec<usize>) -> Result<Self> {
        let limit: MapRef = Arc::new(ProjectiveCurve::constant(&[ZERO, ONE])?);
        let mut fam = Self::new(
            "shrinking-identity",
            format!("u_n(z) = (z - {center})/lambda_n"),
            schedule,
            limit,
            move |n| {
                let l = lambda.at(n);
                let m = ProjectiveCurve::rational(
                    Poly::new(vec![-center, ONE]),
                    Poly::constant(C64::new(l, 0.0)),
                )?;
                Ok(Arc::new(m) as MapRef)
            },
        )?;
        fam.lambda = Some(lambda);
        fam.declared_centers = vec![ChartPoint::north(center)];
        Ok(fam)
    }

    /// `u_n(z) = λ_n/(z − a) + λ_n/(z − b)`, degree two, concentrating at
    /// `a` and `b` with constant limit 0.
    pub fn two_bubble(a: C64, b: C64, lambda: LambdaSchedule, schedule: Vec<usize>) -> Result<Self> {
        if (a - b).norm() == 0.0 {
            return Err(Error::InvalidInput("bubble centres must differ".into()));
        }
        let limit: MapRef = Arc::new(ProjectiveCurve::constant(&[ONE, ZERO])?);
        let mut fam = Self::new(
            "two-bubble",
            format!("u_n(z) = lambda_n/(z - {a}) + lambda_n/(z - {b})"),
            schedule,
            limit,
            move |n| {
                let l = C64::new(lambda.at(n), 0.0);
                let num = Poly::new(vec![-(a + b) * l, 2.0 * l]);
                let den = Poly::new(vec![-a, ONE]).mul(&Poly::new(vec![-b, ONE]));
                Ok(Arc::new(ProjectiveCurve::rational(num, den)?) as MapRef)
            },
        )?;
        fam.lambda = Some(lambda);
        fam.declared_centers = vec![ChartPoint::north(a), ChartPoint::north(b)];
        Ok(fam)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn identity_jet() {
        let j = ProjectiveCurve::identity().jet(&ChartPoint::north(c(1.0, 0.0))).unwrap();
        assert_eq!(j.u(), vec![c(1.0, 0.0)]);
        assert_eq!(j.u_z(), vec![c(1.0, 0.0)]);
        assert_eq!(j.u_zb(), vec![c(0.0, 0.0)]);
    }

    #[test]
    fn square_jet() {
        let j = ProjectiveCurve::monomial(2).jet(&ChartPoint::north(c(1.0, 0.0))).unwrap();
        assert!(close(j.u_z()[0], c(2.0, 0.0), 1e-15));
        assert!(close(j.u_zz()[0], c(2.0, 0.0), 1e-15));
    }

    #[test]
    fn conjugate_jet() {
        let m = Conjugate(Arc::new(ProjectiveCurve::identity()));
        let j = m.jet(&ChartPoint::north(c(0.0, 1.0))).unwrap();
        assert_eq!(j.u_z()[0], c(0.0, 0.0));
        assert_eq!(j.u_zb()[0], c(1.0, 0.0));
        assert_eq!(j.u()[0], c(0.0, -1.0));
        assert_eq!(j.kind, MapKind::Antiholomorphic);
    }

    #[test]
    fn pole_switches_target_chart() {
        let m = ProjectiveCurve::rational(Poly::constant(ONE), Poly::monomial(ONE, 1)).unwrap();
        let j = m.jet(&ChartPoint::north(c(0.0, 0.0))).unwrap();
        assert_eq!(j.chart, 1);
        assert_eq!(j.u()[0], c(0.0, 0.0));
        assert!(close(j.u_z()[0], c(1.0, 0.0), 1e-15));
    }

    fn check_overlap(m: &dyn SmoothMap, z: C64) {
        let p = ChartPoint::north(z);
        let q = p.transition().unwrap();
        let jn = m.jet(&p).unwrap();
        let js = m.jet(&q).unwrap().in_target_chart(jn.chart).unwrap();
        // z = 1/w: φ′ = -1/w², φ″ = 2/w³
        let w = q.coord;
        let back = jn.clone();
        let js_from_n = back.reparametrize([1.0 / w, -1.0 / (w * w), 2.0 / (w * w * w)]);
        for (a, b) in js.comps.iter().zip(&js_from_n.comps) {
            for (x, y) in [(a.v, b.v), (a.z, b.z), (a.zb, b.zb), (a.zz, b.zz), (a.zzb, b.zzb), (a.zbzb, b.zbzb)] {
                assert!(close(x, y, 1e-10), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn chart_coherence_on_overlap() {
        let gen = ProjectiveCurve::rational(
            Poly::new(vec![c(0.3, 0.1), c(1.0, -0.5), c(0.2, 0.0)]),
            Poly::new(vec![c(1.0, 0.0), c(0.0, 0.4)]),
        )
        .unwrap();
        for z in [c(0.5, 0.3), c(-1.2, 0.8), c(2.5, -1.0)] {
            check_overlap(&gen, z);
            check_overlap(&veronese(3).unwrap(), z);
            check_overlap(&Conjugate(Arc::new(gen.clone())), z);
            check_overlap(
                &AmbientLinearMap {
                    offset: c(0.1, 0.0),
                    coeffs: [c(1.0, 0.0), c(0.0, 1.0), c(0.3, 0.2)],
                },
                z,
            );
            check_overlap(
                &PolynomialMap {
                    terms: vec![(c(1.0, 0.0), 1, 0), (c(0.1, 0.0), 0, 1), (c(0.05, 0.02), 1, 1)],
                },
                z,
            );
        }
    }

    #[test]
    fn ramification_examples() {
        assert!(ramification(&ProjectiveCurve::identity()).unwrap().is_empty());
        let r2 = ramification(&ProjectiveCurve::monomial(2)).unwrap();
        assert_eq!(r2.len(), 2);
        assert!(r2.contains(&(ChartPoint::north(c(0.0, 0.0)), 1)));
        assert!(r2.contains(&(ChartPoint::south(c(0.0, 0.0)), 1)));
        let r3 = ramification(&ProjectiveCurve::monomial(3)).unwrap();
        assert!(r3.contains(&(ChartPoint::north(c(0.0, 0.0)), 2)));
        assert!(r3.contains(&(ChartPoint::south(c(0.0, 0.0)), 2)));
        let constant = ProjectiveCurve::constant(&[ONE, ONE]).unwrap();
        assert!(matches!(ramification(&constant), Err(Error::Precondition(_))));
    }

    #[test]
    fn common_factor_rejected() {
        let z1 = Poly::new(vec![c(-1.0, 0.0), ONE]);
        let bad = ProjectiveCurve::rational(z1.mul(&z1), z1.clone());
        assert!(bad.is_err());
    }

    #[test]
    fn veronese_components() {
        let v = veronese(2).unwrap();
        assert!(close(v.components()[1].coeffs()[1], c(2f64.sqrt(), 0.0), 1e-15));
        assert_eq!(veronese(1).unwrap(), ProjectiveCurve::identity());
        assert!(veronese(0).is_err());
    }

    #[test]
    fn mobius_pullback_examples() {
        let id: MapRef = Arc::new(ProjectiveCurve::identity());
        let half = mobius_pullback(id.clone(), 0.5, ZERO).unwrap();
        let p = ChartPoint::north(c(0.3, 0.2));
        assert!(close(half.jet(&p).unwrap().u_z()[0], c(0.5, 0.0), 1e-15));
        let same = mobius_pullback(id.clone(), 1.0, ZERO).unwrap();
        assert_eq!(same.jet(&p).unwrap(), id.jet(&p).unwrap());
        let lam = 1e-3;
        let shrink: MapRef = Arc::new(
            ProjectiveCurve::rational(Poly::monomial(ONE, 1), Poly::constant(c(lam, 0.0))).unwrap(),
        );
        let back = mobius_pullback(shrink, lam, ZERO).unwrap();
        for z in [p, ChartPoint::south(c(0.4, -0.1)), ChartPoint::north(c(0.9, 0.1))] {
            let a = back.jet(&z).unwrap();
            let b = id.jet(&z).unwrap().in_target_chart(a.chart).unwrap();
            for (x, y) in a.comps.iter().zip(&b.comps) {
                assert!(close(x.v, y.v, 1e-12) && close(x.z, y.z, 1e-12) && close(x.zz, y.zz, 1e-12));
            }
        }
    }

    #[test]
    fn pullback_round_trip() {
        let m: MapRef = Arc::new(
            ProjectiveCurve::rational(Poly::new(vec![c(0.2, 0.0), c(1.0, 1.0), ONE]), Poly::new(vec![ONE, c(0.5, 0.0)]))
                .unwrap(),
        );
        let (lam, shift) = (0.37, c(0.1, -0.2));
        let there = mobius_pullback(m.clone(), lam, shift).unwrap();
        let back = mobius_pullback(there, 1.0 / lam, -shift / lam).unwrap();
        for p in [ChartPoint::north(c(0.3, 0.4)), ChartPoint::south(c(-0.2, 0.5))] {
            let a = back.jet(&p).unwrap();
            let b = m.jet(&p).unwrap().in_target_chart(a.chart).unwrap();
            for (x, y) in a.comps.iter().zip(&b.comps) {
                for (s, t) in [(x.v, y.v), (x.z, y.z), (x.zz, y.zz), (x.zb, y.zb)] {
                    assert!(close(s, t, 1e-12), "{s} vs {t}");
                }
            }
        }
    }

    #[test]
    fn scalar_jet_quotient_matches_product_rule() {
        let z = ScalarJet::variable(c(0.3, 0.4));
        let zb = z.conj();
        let f = z.mul(&zb).add(&z.powi(3));
        let g = ScalarJet::constant(c(1.0, 0.0)).add(&zb.scale(c(0.2, 0.1)));
        let q = f.div(&g).unwrap();
        let back = q.mul(&g);
        for (x, y) in [(back.v, f.v), (back.z, f.z), (back.zb, f.zb), (back.zz, f.zz), (back.zzb, f.zzb), (back.zbzb, f.zbzb)] {
            assert!(close(x, y, 1e-14));
        }
    }

    #[test]
    fn family_members() {
        let fam = MapFamily::shrinking_identity(ZERO, LambdaSchedule { scale: 1.0, power: 1.0 }, DEFAULT_SCHEDULE.to_vec()).unwrap();
        let m = fam.member(4).unwrap();
        let j = m.jet(&ChartPoint::north(c(0.1, 0.0))).unwrap();
        assert!(close(j.u_z()[0], c(4.0, 0.0), 1e-14));
        let two = MapFamily::two_bubble(ZERO, ONE, LambdaSchedule::default(), vec![4, 8]).unwrap();
        let m = two.member(8).unwrap();
        assert_eq!(m.as_rational().unwrap().degree(), 2);
        assert!(MapFamily::constant(ZERO, vec![4, 4]).is_err());
    }
}
