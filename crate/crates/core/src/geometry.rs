//! Two-chart model of the domain sphere and the Kähler targets.
//!
//! The domain sphere is covered by the stereographic charts `North`
//! (coordinate `z`, the north pole at `z = 0`) and `South` (coordinate
//! `w = 1/z`). Each chart owns its closed unit disk. Metrics are written
//! as `g |dz|^2` on the domain and `h_{αβ̄} du^α dū^β` on the target, so a
//! real tangent vector with complex components `X` has squared length
//! `h_{αβ̄} X^α X̄^β`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    North,
    South,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::North => Chart::South,
            Chart::South => Chart::North,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Chart::North => "N",
            Chart::South => "S",
        }
    }
}

/// A point of the domain sphere in one of the two stereographic charts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub coord: C64,
}

impl ChartPoint {
    pub fn new(chart: Chart, coord: C64) -> Self {
        ChartPoint { chart, coord }
    }

    pub fn north(z: C64) -> Self {
        Self::new(Chart::North, z)
    }

    pub fn south(w: C64) -> Self {
        Self::new(Chart::South, w)
    }

    pub fn north_pole() -> Self {
        Self::north(ZERO)
    }

    pub fn south_pole() -> Self {
        Self::south(ZERO)
    }

    /// The same point in the other chart, `w = 1/z`.
    pub fn transition(&self) -> Result<ChartPoint> {
        if self.coord == ZERO {
            return Err(Error::ChartInfinity);
        }
        Ok(ChartPoint::new(self.chart.other(), 1.0 / self.coord))
    }

    /// Representation in the chart whose closed unit disk contains the point.
    pub fn canonical(&self) -> ChartPoint {
        if self.coord.norm() > 1.0 {
            self.transition().expect("nonzero coordinate")
        } else {
            *self
        }
    }

    /// Coordinate in the north chart, `None` at the south pole.
    pub fn plane_coord(&self) -> Option<C64> {
        match self.chart {
            Chart::North => Some(self.coord),
            Chart::South => self.transition().ok().map(|p| p.coord),
        }
    }

    /// Point of the unit sphere in R^3. The north pole is `(0, 0, 1)`.
    pub fn ambient(&self) -> [f64; 3] {
        let n = sphere_embedding(self.coord);
        match self.chart {
            Chart::North => n,
            Chart::South => [n[0], -n[1], -n[2]],
        }
    }

    /// `∂/∂coord` of [`ChartPoint::ambient`].
    pub fn ambient_dz(&self) -> [C64; 3] {
        let d = sphere_embedding_dz(self.coord);
        match self.chart {
            Chart::North => d,
            Chart::South => [d[0], -d[1], -d[2]],
        }
    }

    /// Chordal-free geodesic distance on the unit sphere.
    pub fn sphere_distance(&self, other: &ChartPoint) -> f64 {
        let a = self.ambient();
        let b = other.ambient();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let cn = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
        cn.atan2(dot)
    }
}

/// Inverse stereographic projection of the north chart.
fn sphere_embedding(z: C64) -> [f64; 3] {
    let r2 = z.norm_sqr();
    let s = 1.0 + r2;
    [2.0 * z.re / s, 2.0 * z.im / s, (1.0 - r2) / s]
}

fn sphere_embedding_dz(z: C64) -> [C64; 3] {
    let s = 1.0 + z.norm_sqr();
    let s2 = s * s;
    let zb = z.conj();
    [
        (ONE - zb * zb) / s2,
        C64::new(0.0, -1.0) * (ONE + zb * zb) / s2,
        -2.0 * zb / s2,
    ]
}

/// Möbius transformation `z ↦ (a z + b)/(c z + d)` of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mobius {
    pub fn identity() -> Self {
        Mobius {
            a: ONE,
            b: ZERO,
            c: ZERO,
            d: ONE,
        }
    }

    /// `z ↦ scale·z + shift`.
    pub fn affine(scale: C64, shift: C64) -> Self {
        Mobius {
            a: scale,
            b: shift,
            c: ZERO,
            d: ONE,
        }
    }

    /// `z ↦ 1/z`, the chart transition.
    pub fn inversion() -> Self {
        Mobius {
            a: ZERO,
            b: ONE,
            c: ONE,
            d: ZERO,
        }
    }

    fn chart(chart: Chart) -> Self {
        match chart {
            Chart::North => Self::identity(),
            Chart::South => Self::inversion(),
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Mobius) -> Mobius {
        Mobius {
            a: self.a * inner.a + self.b * inner.c,
            b: self.a * inner.b + self.b * inner.d,
            c: self.c * inner.a + self.d * inner.c,
            d: self.c * inner.b + self.d * inner.d,
        }
    }

    pub fn determinant(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Value and first two derivatives at a finite point off the pole.
    pub fn eval2(&self, z: C64) -> [C64; 3] {
        let den = self.c * z + self.d;
        let det = self.determinant();
        [
            (self.a * z + self.b) / den,
            det / (den * den),
            -2.0 * self.c * det / (den * den * den),
        ]
    }

    /// Image of `p`, returned in the chart whose unit disk contains it,
    /// together with the Möbius map from `p`'s local coordinate to that
    /// chart's coordinate.
    pub fn map_point(&self, p: &ChartPoint) -> (ChartPoint, Mobius) {
        let local = self.compose(&Mobius::chart(p.chart));
        let num = local.a * p.coord + local.b;
        let den = local.c * p.coord + local.d;
        if num.norm() <= den.norm() {
            (ChartPoint::north(num / den), local)
        } else {
            (
                ChartPoint::south(den / num),
                Mobius::inversion().compose(&local),
            )
        }
    }
}

/// Conformal structure on the domain sphere.
///
/// `Round` is the unit sphere, `g = 4/(1+|z|^2)^2` in both charts.
/// `Rescaled` multiplies the round metric by `exp(2φ)` with
/// `φ = amplitude·⟨axis, X⟩`, `X` the embedding in R^3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DomainSurface {
    Round,
    Rescaled { amplitude: f64, axis: [f64; 3] },
}

impl DomainSurface {
    pub fn genus(&self) -> u32 {
        0
    }

    fn weight(&self, p: &ChartPoint) -> f64 {
        match self {
            DomainSurface::Round => 0.0,
            DomainSurface::Rescaled { amplitude, axis } => {
                let x = p.ambient();
                amplitude * (axis[0] * x[0] + axis[1] * x[1] + axis[2] * x[2])
            }
        }
    }

    pub fn conformal_factor(&self, p: &ChartPoint) -> f64 {
        let s = 1.0 + p.coord.norm_sqr();
        4.0 / (s * s) * (2.0 * self.weight(p)).exp()
    }

    /// `∂_z log g` in the chart of `p`.
    pub fn log_factor_dz(&self, p: &ChartPoint) -> C64 {
        let round = -2.0 * p.coord.conj() / (1.0 + p.coord.norm_sqr());
        match self {
            DomainSurface::Round => round,
            DomainSurface::Rescaled { amplitude, axis } => {
                let d = p.ambient_dz();
                let dphi = (d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]) * *amplitude;
                round + 2.0 * dphi
            }
        }
    }

    pub fn gauss_curvature(&self, p: &ChartPoint) -> f64 {
        match self {
            DomainSurface::Round => 1.0,
            // first spherical harmonics have eigenvalue 2 on the unit sphere
            DomainSurface::Rescaled { .. } => {
                let phi = self.weight(p);
                (-2.0 * phi).exp() * (1.0 + 2.0 * phi)
            }
        }
    }
}

/// Metric on a complex curve target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurveMetric {
    /// The complex plane, `h ≡ 1`.
    Flat,
    /// Round sphere of Gauss curvature `curvature > 0`.
    Sphere { curvature: f64 },
    /// Round sphere rescaled by `exp(2ψ)`, `ψ = amplitude·⟨axis, X⟩`.
    PerturbedSphere {
        curvature: f64,
        amplitude: f64,
        axis: [f64; 3],
    },
}

/// Kähler target: a complex curve or a Fubini–Study projective space of
/// constant holomorphic sectional curvature `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum KahlerTarget {
    Curve(CurveMetric),
    FubiniStudy { dim: usize, c: f64 },
}

/// Covariant 4-tensor `K_{αβ̄γδ̄}`, row-major in `(α, β, γ, δ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 {
            dim,
            data: vec![ZERO; dim.pow(4)],
        }
    }

    #[inline]
    pub fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> C64 {
        self.data[self.idx(a, b, c, d)]
    }

    /// `Σ K_{αβ̄γδ̄} M_{γδ} N_{αβ}`.
    pub fn contract(&self, m: &[C64], nmat: &[C64]) -> C64 {
        let n = self.dim;
        let mut acc = ZERO;
        for a in 0..n {
            for b in 0..n {
                let nab = nmat[a * n + b];
                if nab == ZERO {
                    continue;
                }
                for g in 0..n {
                    for d in 0..n {
                        acc += self.get(a, b, g, d) * m[g * n + d] * nab;
                    }
                }
            }
        }
        acc
    }
}

/// Hermitian pairing `h(x, y) = h_{αβ̄} x^α ȳ^β`.
pub fn hermitian(h: &[C64], x: &[C64], y: &[C64]) -> C64 {
    let n = x.len();
    let mut acc = ZERO;
    for a in 0..n {
        for b in 0..n {
            acc += h[a * n + b] * x[a] * y[b].conj();
        }
    }
    acc
}

impl KahlerTarget {
    pub fn round_sphere() -> Self {
        KahlerTarget::Curve(CurveMetric::Sphere { curvature: 1.0 })
    }

    pub fn dim(&self) -> usize {
        match self {
            KahlerTarget::Curve(_) => 1,
            KahlerTarget::FubiniStudy { dim, .. } => *dim,
        }
    }

    pub fn num_charts(&self) -> usize {
        match self {
            KahlerTarget::Curve(CurveMetric::Flat) => 1,
            _ => self.dim() + 1,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, KahlerTarget::Curve(CurveMetric::Flat))
    }

    fn perturbation(&self, chart: usize, u: C64) -> Option<(f64, C64, f64)> {
        if let KahlerTarget::Curve(CurveMetric::PerturbedSphere {
            amplitude, axis, ..
        }) = self
        {
            let ax = if chart == 0 {
                *axis
            } else {
                [axis[0], -axis[1], -axis[2]]
            };
            let x = sphere_embedding(u);
            let dx = sphere_embedding_dz(u);
            let psi = amplitude * (ax[0] * x[0] + ax[1] * x[1] + ax[2] * x[2]);
            let dpsi = (dx[0] * ax[0] + dx[1] * ax[1] + dx[2] * ax[2]) * *amplitude;
            Some((psi, dpsi, *amplitude))
        } else {
            None
        }
    }

    /// Conformal factor of a curve target.
    pub fn curve_factor(&self, chart: usize, u: C64) -> f64 {
        match self {
            KahlerTarget::Curve(CurveMetric::Flat) => 1.0,
            KahlerTarget::Curve(CurveMetric::Sphere { curvature }) => {
                let s = 1.0 + u.norm_sqr();
                4.0 / (curvature * s * s)
            }
            KahlerTarget::Curve(CurveMetric::PerturbedSphere { curvature, .. }) => {
                let s = 1.0 + u.norm_sqr();
                let (psi, _, _) = self.perturbation(chart, u).unwrap();
                4.0 / (curvature * s * s) * (2.0 * psi).exp()
            }
            KahlerTarget::FubiniStudy { dim: 1, c } => {
                let s = 1.0 + u.norm_sqr();
                4.0 / (c * s * s)
            }
            KahlerTarget::FubiniStudy { .. } => panic!("curve_factor on a higher-dimensional target"),
        }
    }

    /// Gauss curvature of a curve target (or of CP^1).
    pub fn curve_gauss_curvature(&self, chart: usize, u: C64) -> Option<f64> {
        match self {
            KahlerTarget::Curve(CurveMetric::Flat) => Some(0.0),
            KahlerTarget::Curve(CurveMetric::Sphere { curvature }) => Some(*curvature),
            KahlerTarget::Curve(CurveMetric::PerturbedSphere { curvature, .. }) => {
                let (psi, _, _) = self.perturbation(chart, u).unwrap();
                Some(curvature * (-2.0 * psi).exp() * (1.0 + 2.0 * psi))
            }
            KahlerTarget::FubiniStudy { dim: 1, c } => Some(*c),
            KahlerTarget::FubiniStudy { .. } => None,
        }
    }

    /// Hermitian metric matrix `h_{αβ̄}` (row α, column β).
    pub fn metric(&self, chart: usize, u: &[C64]) -> Vec<C64> {
        match self {
            KahlerTarget::Curve(_) => vec![C64::new(self.curve_factor(chart, u[0]), 0.0)],
            KahlerTarget::FubiniStudy { dim, c } => {
                let n = *dim;
                let s = 1.0 + u.iter().map(|x| x.norm_sqr()).sum::<f64>();
                let mut h = vec![ZERO; n * n];
                for a in 0..n {
                    for b in 0..n {
                        let delta = if a == b { 1.0 / s } else { 0.0 };
                        h[a * n + b] = (C64::new(delta, 0.0) - u[a].conj() * u[b] / (s * s)) * (4.0 / c);
                    }
                }
                h
            }
        }
    }

    /// Christoffel symbols of the Chern connection, indexed `[β][α][γ]`:
    /// `∇_{∂_γ} ∂_α = Γ^β_{αγ} ∂_β`.
    pub fn christoffel(&self, chart: usize, u: &[C64]) -> Vec<C64> {
        match self {
            KahlerTarget::Curve(CurveMetric::Flat) => vec![ZERO],
            KahlerTarget::Curve(CurveMetric::Sphere { .. }) => {
                vec![-2.0 * u[0].conj() / (1.0 + u[0].norm_sqr())]
            }
            KahlerTarget::Curve(CurveMetric::PerturbedSphere { .. }) => {
                let (_, dpsi, _) = self.perturbation(chart, u[0]).unwrap();
                vec![-2.0 * u[0].conj() / (1.0 + u[0].norm_sqr()) + 2.0 * dpsi]
            }
            KahlerTarget::FubiniStudy { dim, .. } => {
                let n = *dim;
                let s = 1.0 + u.iter().map(|x| x.norm_sqr()).sum::<f64>();
                let mut g = vec![ZERO; n * n * n];
                for b in 0..n {
                    for a in 0..n {
                        for c in 0..n {
                            let mut v = ZERO;
                            if a == b {
                                v += u[c].conj();
                            }
                            if c == b {
                                v += u[a].conj();
                            }
                            g[(b * n + a) * n + c] = -v / s;
                        }
                    }
                }
                g
            }
        }
    }

    /// Curvature tensor `K_{αβ̄γδ̄}`.
    ///
    /// Curve targets carry the single component `-(1/2) K_M h^2`; the
    /// Fubini–Study tensor is `-(c/4)(h_{αβ̄}h_{γδ̄} + h_{αδ̄}h_{γβ̄})`.
    pub fn curvature_tensor(&self, chart: usize, u: &[C64]) -> Tensor4 {
        match self {
            KahlerTarget::Curve(_) => {
                let h = self.curve_factor(chart, u[0]);
                let k = self.curve_gauss_curvature(chart, u[0]).unwrap();
                Tensor4 {
                    dim: 1,
                    data: vec![C64::new(-0.5 * k * h * h, 0.0)],
                }
            }
            KahlerTarget::FubiniStudy { dim, c } => {
                let n = *dim;
                let h = self.metric(chart, u);
                let mut t = Tensor4::zeros(n);
                for a in 0..n {
                    for b in 0..n {
                        for g in 0..n {
                            for d in 0..n {
                                let i = t.idx(a, b, g, d);
                                t.data[i] =
                                    -(c / 4.0) * (h[a * n + b] * h[g * n + d] + h[a * n + d] * h[g * n + b]);
                            }
                        }
                    }
                }
                t
            }
        }
    }

    /// Norm of the curvature operator on (1,1)-forms: largest singular value
    /// of `K(e_a, ē_b, e_c, ē_d)` as an `n^2 × n^2` matrix in an
    /// h-orthonormal frame.
    pub fn curvature_operator_norm(&self, chart: usize, u: &[C64]) -> f64 {
        let n = self.dim();
        let h = self.metric(chart, u);
        let k = self.curvature_tensor(chart, u);
        let frame = orthonormal_frame(&h, n);
        let m = n * n;
        let mut op = vec![ZERO; m * m];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut acc = ZERO;
                        for al in 0..n {
                            for be in 0..n {
                                for ga in 0..n {
                                    for de in 0..n {
                                        acc += k.get(al, be, ga, de)
                                            * frame[a][al]
                                            * frame[b][be].conj()
                                            * frame[c][ga]
                                            * frame[d][de].conj();
                                    }
                                }
                            }
                        }
                        op[(a * n + b) * m + (c * n + d)] = acc;
                    }
                }
            }
        }
        largest_singular_value(&op, m)
    }

    /// `max |Ω|` over the target.
    pub fn max_curvature_norm(&self) -> f64 {
        match self {
            KahlerTarget::Curve(CurveMetric::PerturbedSphere { .. }) => {
                self.sample_max(|t, chart, u| t.curvature_operator_norm(chart, &[u]))
            }
            // homogeneous targets: any point will do
            _ => self.curvature_operator_norm(0, &vec![ZERO; self.dim()]),
        }
    }

    /// Upper bound `H` for the holomorphic sectional curvature
    /// (`max K_M^+` on curve targets).
    pub fn holomorphic_curvature_bound(&self) -> f64 {
        match self {
            KahlerTarget::Curve(CurveMetric::Flat) => 0.0,
            KahlerTarget::Curve(CurveMetric::Sphere { curvature }) => curvature.max(0.0),
            KahlerTarget::Curve(CurveMetric::PerturbedSphere { .. }) => self
                .sample_max(|t, chart, u| t.curve_gauss_curvature(chart, u).unwrap().max(0.0)),
            KahlerTarget::FubiniStudy { c, .. } => *c,
        }
    }

    fn sample_max(&self, f: impl Fn(&Self, usize, C64) -> f64) -> f64 {
        let n = 96;
        let mut best: f64 = 0.0;
        for chart in 0..2 {
            for i in 0..=n {
                for j in 0..=n {
                    let u = C64::new(-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64);
                    if u.norm() <= 1.0 {
                        best = best.max(f(self, chart, u));
                    }
                }
            }
        }
        best
    }

    /// Homogeneous coordinates of a chart point (`None` for the flat target).
    pub fn homogeneous(&self, chart: usize, u: &[C64]) -> Option<Vec<C64>> {
        if !self.is_compact() {
            return None;
        }
        let mut out = Vec::with_capacity(u.len() + 1);
        let mut it = u.iter();
        for k in 0..=u.len() {
            if k == chart {
                out.push(ONE);
            } else {
                out.push(*it.next().unwrap());
            }
        }
        Some(out)
    }

    /// Geodesic distance between two target points. On perturbed spheres the
    /// distance of the underlying round metric is used.
    pub fn distance(&self, chart1: usize, u1: &[C64], chart2: usize, u2: &[C64]) -> f64 {
        let curvature = match self {
            KahlerTarget::Curve(CurveMetric::Flat) => {
                return (u1[0] - u2[0]).norm();
            }
            KahlerTarget::Curve(CurveMetric::Sphere { curvature })
            | KahlerTarget::Curve(CurveMetric::PerturbedSphere { curvature, .. }) => *curvature,
            KahlerTarget::FubiniStudy { c, .. } => *c,
        };
        let a = self.homogeneous(chart1, u1).unwrap();
        let b = self.homogeneous(chart2, u2).unwrap();
        let inner: C64 = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum();
        let mut wedge = 0.0;
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                wedge += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
            }
        }
        2.0 / curvature.sqrt() * wedge.sqrt().atan2(inner.norm())
    }

    /// Exponential map at `u` in the chart `chart`, by fixed-step RK4
    /// integration of the geodesic equation.
    pub fn exp(&self, chart: usize, u: &[C64], v: &[C64]) -> Vec<C64> {
        let n = u.len();
        let steps = 64;
        let dt = 1.0 / steps as f64;
        let accel = |x: &[C64], xd: &[C64]| -> Vec<C64> {
            let g = self.christoffel(chart, x);
            (0..n)
                .map(|b| {
                    let mut acc = ZERO;
                    for a in 0..n {
                        for c in 0..n {
                            acc += g[(b * n + a) * n + c] * xd[a] * xd[c];
                        }
                    }
                    -acc
                })
                .collect()
        };
        let mut x = u.to_vec();
        let mut xd = v.to_vec();
        let axpy = |base: &[C64], dir: &[C64], s: f64| -> Vec<C64> {
            base.iter().zip(dir).map(|(b, d)| b + d * s).collect()
        };
        for _ in 0..steps {
            let k1x = xd.clone();
            let k1v = accel(&x, &xd);
            let x2 = axpy(&x, &k1x, 0.5 * dt);
            let v2 = axpy(&xd, &k1v, 0.5 * dt);
            let k2v = accel(&x2, &v2);
            let x3 = axpy(&x, &v2, 0.5 * dt);
            let v3 = axpy(&xd, &k2v, 0.5 * dt);
            let k3v = accel(&x3, &v3);
            let x4 = axpy(&x, &v3, dt);
            let v4 = axpy(&xd, &k3v, dt);
            let k4v = accel(&x4, &v4);
            for i in 0..n {
                x[i] += (k1x[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]) * (dt / 6.0);
                xd[i] += (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]) * (dt / 6.0);
            }
        }
        x
    }

    /// Inverse of [`KahlerTarget::exp`] for points `q` in a small ball
    /// around `u` (both in the same chart).
    pub fn log(&self, chart: usize, u: &[C64], q: &[C64]) -> Result<Vec<C64>> {
        let mut v: Vec<C64> = q.iter().zip(u).map(|(a, b)| a - b).collect();
        for _ in 0..200 {
            let e = self.exp(chart, u, &v);
            let mut err = 0.0f64;
            for i in 0..v.len() {
                let r = q[i] - e[i];
                v[i] += r;
                err = err.max(r.norm());
            }
            if err < 1e-14 * (1.0 + v.iter().map(|x| x.norm()).fold(0.0, f64::max)) {
                return Ok(v);
            }
        }
        Err(Error::Numerical("logarithm map did not converge".into()))
    }

    /// Injectivity radius of the model metric (infinite for the plane).
    pub fn injectivity_radius(&self) -> f64 {
        match self {
            KahlerTarget::Curve(CurveMetric::Flat) => f64::INFINITY,
            KahlerTarget::Curve(CurveMetric::Sphere { curvature })
            | KahlerTarget::Curve(CurveMetric::PerturbedSphere { curvature, .. }) => {
                std::f64::consts::PI / curvature.sqrt()
            }
            KahlerTarget::FubiniStudy { c, .. } => std::f64::consts::PI / c.sqrt(),
        }
    }
}

/// h-orthonormal frame by Gram–Schmidt on the coordinate basis.
pub fn orthonormal_frame(h: &[C64], n: usize) -> Vec<Vec<C64>> {
    let mut frame: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = vec![ZERO; n];
        v[k] = ONE;
        for e in &frame {
            let proj = hermitian(h, &v, e);
            for i in 0..n {
                v[i] -= proj * e[i];
            }
        }
        let norm = hermitian(h, &v, &v).re.sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
        frame.push(v);
    }
    frame
}

/// Largest singular value of a dense `m × m` complex matrix by power
/// iteration on `A^H A`.
fn largest_singular_value(a: &[C64], m: usize) -> f64 {
    if m == 1 {
        return a[0].norm();
    }
    let mut x: Vec<C64> = (0..m).map(|i| C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64)).collect();
    let mut sigma = 0.0;
    for _ in 0..500 {
        let y: Vec<C64> = (0..m)
            .map(|i| (0..m).map(|j| a[i * m + j] * x[j]).sum())
            .collect();
        let z: Vec<C64> = (0..m)
            .map(|j| (0..m).map(|i| a[i * m + j].conj() * y[i]).sum())
            .collect();
        let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        x = z.iter().map(|v| v / norm).collect();
        if (next - sigma).abs() <= 1e-15 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn transition_examples() {
        let p = ChartPoint::north(c(1.0, 0.0)).transition().unwrap();
        assert_eq!(p, ChartPoint::south(c(1.0, 0.0)));
        let p = ChartPoint::north(c(2.0, 0.0)).transition().unwrap();
        assert_eq!(p.chart, Chart::South);
        assert!((p.coord - c(0.5, 0.0)).norm() < 1e-15);
        let p = ChartPoint::north(c(0.3, 0.4));
        let back = p.transition().unwrap().transition().unwrap();
        assert!((back.coord - p.coord).norm() <= 1e-12 * p.coord.norm());
        assert_eq!(back.chart, Chart::North);
        assert_eq!(ChartPoint::north(c(0.0, 0.0)).transition(), Err(Error::ChartInfinity));
    }

    #[test]
    fn ambient_agrees_across_charts() {
        let p = ChartPoint::north(c(0.7, -1.3));
        let q = p.transition().unwrap();
        let (a, b) = (p.ambient(), q.ambient());
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
        assert_eq!(ChartPoint::north_pole().ambient(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn round_domain_curvature_by_finite_differences() {
        let dom = DomainSurface::Round;
        let z0 = c(0.3, -0.2);
        let lg = |z: C64| dom.conformal_factor(&ChartPoint::north(z)).ln();
        let mut prev = None;
        for &h in &[0.04, 0.02, 0.01] {
            let lap = (lg(z0 + h) + lg(z0 - h) + lg(z0 + c(0.0, h)) + lg(z0 - c(0.0, h)) - 4.0 * lg(z0)) / (h * h);
            let k = -lap / (2.0 * dom.conformal_factor(&ChartPoint::north(z0)));
            let err = (k - 1.0).abs();
            if let Some(p) = prev {
                let ratio: f64 = p / err;
                assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
            }
            prev = Some(err);
        }
        assert!(prev.unwrap() < 1e-3);
    }

    #[test]
    fn rescaled_domain_curvature_matches_closed_form() {
        let dom = DomainSurface::Rescaled {
            amplitude: 0.3,
            axis: [1.0, 0.5, -0.2],
        };
        for (chart, z0) in [(Chart::North, c(0.3, -0.2)), (Chart::South, c(-0.5, 0.4))] {
            let lg = |z: C64| dom.conformal_factor(&ChartPoint::new(chart, z)).ln();
            let h = 1e-3;
            let lap = (lg(z0 + h) + lg(z0 - h) + lg(z0 + c(0.0, h)) + lg(z0 - c(0.0, h)) - 4.0 * lg(z0)) / (h * h);
            let p = ChartPoint::new(chart, z0);
            let k = -lap / (2.0 * dom.conformal_factor(&p));
            assert!((k - dom.gauss_curvature(&p)).abs() < 1e-5);
            // ∂_z log g by central differences
            let dx = (lg(z0 + h) - lg(z0 - h)) / (2.0 * h);
            let dy = (lg(z0 + c(0.0, h)) - lg(z0 - c(0.0, h))) / (2.0 * h);
            let dz = c(dx, -dy) * 0.5;
            assert!((dz - dom.log_factor_dz(&p)).norm() < 1e-6);
        }
    }

    #[test]
    fn conformal_factor_consistent_across_charts() {
        let dom = DomainSurface::Rescaled {
            amplitude: 0.2,
            axis: [0.0, 1.0, 1.0],
        };
        let p = ChartPoint::north(c(0.6, 0.9));
        let q = p.transition().unwrap();
        // g_N |dz|^2 = g_S |dw|^2 with dw = -dz/z^2
        let lhs = dom.conformal_factor(&p);
        let rhs = dom.conformal_factor(&q) / p.coord.norm_sqr().powi(2);
        assert!((lhs - rhs).abs() < 1e-13 * lhs);
    }

    #[test]
    fn curve_target_tensor_reduction() {
        let t = KahlerTarget::round_sphere();
        let k = t.curvature_tensor(0, &[c(0.0, 0.0)]);
        assert!((k.data[0] - c(-8.0, 0.0)).norm() < 1e-14);
        let flat = KahlerTarget::Curve(CurveMetric::Flat);
        assert_eq!(flat.curvature_tensor(0, &[c(0.3, 0.1)]).data[0], c(0.0, 0.0));
        assert_eq!(flat.curvature_operator_norm(0, &[c(0.3, 0.1)]), 0.0);
    }

    #[test]
    fn fubini_study_n1_reduces_to_round_sphere() {
        let fs = KahlerTarget::FubiniStudy { dim: 1, c: 2.5 };
        let u = [c(0.4, -0.3)];
        let h = fs.metric(0, &u)[0].re;
        let k = fs.curvature_tensor(0, &u).data[0];
        assert!((k - c(-0.5 * 2.5 * h * h, 0.0)).norm() < 1e-13);
        let curve = KahlerTarget::Curve(CurveMetric::Sphere { curvature: 2.5 });
        assert!((curve.curve_factor(0, u[0]) - h).abs() < 1e-14);
    }

    #[test]
    fn operator_norm_values() {
        let t = KahlerTarget::round_sphere();
        let a = t.curvature_operator_norm(0, &[c(0.0, 0.0)]);
        let b = t.curvature_operator_norm(1, &[c(0.7, 0.2)]);
        assert!((a - 0.5).abs() < 1e-14 && (b - 0.5).abs() < 1e-14);
        for n in 1..=3 {
            let one = KahlerTarget::FubiniStudy { dim: n, c: 1.0 };
            let two = KahlerTarget::FubiniStudy { dim: n, c: 2.0 };
            let u: Vec<C64> = (0..n).map(|k| c(0.2 * k as f64, -0.1)).collect();
            let n1 = one.curvature_operator_norm(0, &u);
            let n2 = two.curvature_operator_norm(0, &u);
            assert!((n2 - 2.0 * n1).abs() < 1e-10);
            assert!((n1 - (n as f64 + 1.0) / 4.0).abs() < 1e-10, "n={n}: {n1}");
        }
    }

    #[test]
    fn fubini_study_symmetries_and_constant_form() {
        let fs = KahlerTarget::FubiniStudy { dim: 2, c: 4.0 };
        let u = [c(0.3, 0.2), c(-0.5, 0.1)];
        let k = fs.curvature_tensor(0, &u);
        let h = fs.metric(0, &u);
        for a in 0..2 {
            for b in 0..2 {
                assert!((h[a * 2 + b] - h[b * 2 + a].conj()).norm() < 1e-15);
                for g in 0..2 {
                    for d in 0..2 {
                        let v = k.get(a, b, g, d);
                        assert!((v - k.get(g, b, a, d)).norm() < 1e-12);
                        assert!((v.conj() - k.get(b, a, d, g)).norm() < 1e-12);
                    }
                }
            }
        }
        // positive definite
        let frame = orthonormal_frame(&h, 2);
        assert_eq!(frame.len(), 2);
    }

    #[test]
    fn fubini_study_christoffel_from_metric_derivative() {
        // Γ^β_{αγ} = h^{βδ̄} ∂_γ h_{αδ̄}; check h_{βδ̄}Γ^β_{αγ} = ∂_γ h_{αδ̄}
        let fs = KahlerTarget::FubiniStudy { dim: 2, c: 3.0 };
        let u = vec![c(0.3, 0.2), c(-0.4, 0.6)];
        let n = 2;
        let g = fs.christoffel(0, &u);
        let h = fs.metric(0, &u);
        let eps = 1e-6;
        for gam in 0..n {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[gam] += eps;
            dn[gam] -= eps;
            let hx: Vec<C64> = fs.metric(0, &up).iter().zip(fs.metric(0, &dn)).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            let mut up = u.clone();
            let mut dn = u.clone();
            up[gam] += c(0.0, eps);
            dn[gam] -= c(0.0, eps);
            let hy: Vec<C64> = fs.metric(0, &up).iter().zip(fs.metric(0, &dn)).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            for a in 0..n {
                for d in 0..n {
                    let dz = (hx[a * n + d] - C64::new(0.0, 1.0) * hy[a * n + d]) * 0.5;
                    let lhs: C64 = (0..n).map(|b| h[b * n + d] * g[(b * n + a) * n + gam]).sum();
                    assert!((lhs - dz).norm() < 1e-8, "{lhs} vs {dz}");
                }
            }
        }
    }

    #[test]
    fn perturbed_sphere_curvature_matches_metric() {
        let t = KahlerTarget::Curve(CurveMetric::PerturbedSphere {
            curvature: 1.0,
            amplitude: 0.25,
            axis: [0.3, -0.4, 0.8],
        });
        for chart in 0..2 {
            let u0 = c(0.35, -0.45);
            let lh = |u: C64| t.curve_factor(chart, u).ln();
            let e = 1e-3;
            let lap = (lh(u0 + e) + lh(u0 - e) + lh(u0 + c(0.0, e)) + lh(u0 - c(0.0, e)) - 4.0 * lh(u0)) / (e * e);
            let k = -lap / (2.0 * t.curve_factor(chart, u0));
            assert!((k - t.curve_gauss_curvature(chart, u0).unwrap()).abs() < 1e-5);
            let dx = (lh(u0 + e) - lh(u0 - e)) / (2.0 * e);
            let dy = (lh(u0 + c(0.0, e)) - lh(u0 - c(0.0, e))) / (2.0 * e);
            assert!((c(dx, -dy) * 0.5 - t.christoffel(chart, &[u0])[0]).norm() < 1e-6);
        }
        // chart consistency: h_0 |du|^2 = h_1 |dv|^2, v = 1/u
        let u = c(0.8, 0.9);
        let lhs = t.curve_factor(0, u);
        let rhs = t.curve_factor(1, 1.0 / u) / u.norm_sqr().powi(2);
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }

    #[test]
    fn exp_and_log_are_inverse() {
        let fs = KahlerTarget::FubiniStudy { dim: 2, c: 4.0 };
        let u = [c(0.1, 0.2), c(-0.2, 0.05)];
        let v = [c(0.01, -0.02), c(0.015, 0.0)];
        let q = fs.exp(0, &u, &v);
        let back = fs.log(0, &u, &q).unwrap();
        for i in 0..2 {
            assert!((back[i] - v[i]).norm() < 1e-12);
        }
        // geodesic length equals distance
        let h = fs.metric(0, &u);
        let len = hermitian(&h, &v, &v).re.sqrt();
        let d = fs.distance(0, &u, 0, &q);
        assert!((len - d).abs() < 1e-10, "{len} {d}");
    }

    #[test]
    fn mobius_map_point_switches_chart() {
        let m = Mobius::affine(c(1e-3, 0.0), c(0.0, 0.0));
        let (img, local) = m.map_point(&ChartPoint::south(c(1e-4, 0.0)));
        // z = 1e4 -> 10 -> south chart 0.1
        assert_eq!(img.chart, Chart::South);
        assert!((img.coord - c(0.1, 0.0)).norm() < 1e-12);
        let [v, _, _] = local.eval2(c(1e-4, 0.0));
        assert!((v - img.coord).norm() < 1e-12);
        let inv = m.inverse().compose(&m);
        let [v, d, _] = inv.eval2(c(0.3, 0.2));
        assert!((v - c(0.3, 0.2)).norm() < 1e-12 && (d - c(1.0, 0.0)).norm() < 1e-12);
    }
}
