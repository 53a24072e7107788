//! Dense complex polynomials and a simultaneous root finder.

use crate::{Error, Result, C64};

/// Polynomial with coefficients stored in ascending order of degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(c: C64, degree: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = c;
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == C64::new(0.0, 0.0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(C64::new(0.0, 0.0));
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Degree of the polynomial; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value together with the first and second derivatives.
    pub fn eval2(&self, z: C64) -> [C64; 3] {
        let zero = C64::new(0.0, 0.0);
        let (mut p, mut d1, mut d2) = (zero, zero, zero);
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * z + d1 * 2.0;
            d1 = d1 * z + p;
            p = p * z + c;
        }
        [p, d1, d2]
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(C64::new(0.0, 0.0));
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// `w^d p(1/w)`: the same polynomial written in the chart at infinity.
    pub fn reversed(&self, d: usize) -> Poly {
        let mut coeffs = vec![C64::new(0.0, 0.0); d + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if self.coeffs.len() == 1 && c == C64::new(0.0, 0.0) {
                break;
            }
            coeffs[d - k] = c;
        }
        Poly::new(coeffs)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        - other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    /// Number of exact zero roots at the origin (leading zero coefficients).
    pub fn origin_multiplicity(&self) -> usize {
        if self.is_zero() {
            return 0;
        }
        self.coeffs.iter().take_while(|c| c.norm() == 0.0).count()
    }

    /// All complex roots counted with multiplicity (Aberth–Ehrlich iteration).
    ///
    /// Exact roots at the origin are split off first so that the common
    /// monomial case is returned exactly.
    pub fn roots(&self) -> Result<Vec<C64>> {
        if self.is_zero() {
            return Err(Error::InvalidInput("roots of the zero polynomial".into()));
        }
        let k0 = self.origin_multiplicity();
        let mut roots = vec![C64::new(0.0, 0.0); k0];
        let reduced = Poly::new(self.coeffs[k0..].to_vec());
        let n = reduced.degree();
        if n == 0 {
            return Ok(roots);
        }
        let lead = reduced.coeffs[n];
        let monic: Vec<C64> = reduced.coeffs.iter().map(|c| c / lead).collect();
        let monic = Poly { coeffs: monic };
        if n == 1 {
            roots.push(-monic.coeffs[0]);
            return Ok(roots);
        }
        // Cauchy bound for the initial circle.
        let radius = 1.0
            + monic.coeffs[..n]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        let r0 = radius.min(1e3).max(1e-3) * 0.5;
        let mut z: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(r0, 2.0 * std::f64::consts::PI * (k as f64 + 0.4) / n as f64))
            .collect();
        let dmonic = monic.derivative();
        let max_iter = 1000;
        let scale = monic.scale();
        for _iter in 0..max_iter {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let p = monic.eval(z[i]);
                if p.norm() == 0.0 {
                    continue;
                }
                let dp = dmonic.eval(z[i]);
                let ratio = p / dp;
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let diff = z[i] - z[j];
                        if diff.norm() > 0.0 {
                            s += 1.0 / diff;
                        }
                    }
                }
                let denom = 1.0 - ratio * s;
                let step = if denom.norm() > 0.0 { ratio / denom } else { ratio };
                if step.is_finite() {
                    z[i] -= step;
                    max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
                }
            }
            if max_step < 1e-15 {
                break;
            }
        }
        let residual = z
            .iter()
            .map(|&r| monic.eval(r).norm() / (scale * (1.0 + r.norm()).powi(n as i32)))
            .fold(0.0, f64::max);
        if !residual.is_finite() || residual > 1e-9 {
            return Err(Error::RootFinding {
                residual,
                iterations: max_iter,
            });
        }
        roots.extend(z);
        Ok(roots)
    }
}

/// Groups numerically coincident roots and sums their multiplicities.
///
/// Roots within `radius` of a cluster representative join that cluster; the
/// representative is the running centroid.
pub fn cluster_roots(roots: &[C64], radius: f64) -> Vec<(C64, usize)> {
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for &r in roots {
        if let Some(c) = clusters.iter_mut().find(|(c, _)| (c - r).norm() <= radius) {
            let m = c.1 as f64;
            c.0 = (c.0 * m + r) / (m + 1.0);
            c.1 += 1;
        } else {
            clusters.push((r, 1));
        }
    }
    clusters
}
