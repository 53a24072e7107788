//! Scenario files: TOML with one table per concern. Unknown keys are errors.

use std::path::Path;
use std::sync::Arc;

use bubblelab::bubbletree::BubbleConfig;
use bubblelab::geometry::{CurveMetric, DomainSurface, KahlerTarget};
use bubblelab::integration::share;
use bubblelab::maps::{
    veronese, AmbientLinearMap, Conjugate, LambdaSchedule, LineEmbedding, MapFamily, MapRef, PolynomialMap,
    ProjectiveCurve, DEFAULT_SCHEDULE,
};
use bubblelab::poly::Poly;
use bubblelab::quadrature::{QuadratureSpec, Rule};
use bubblelab::C64;
use serde::Deserialize;

use crate::number::{resolve_numbers, Cplx, Num};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub target: TargetSpec,
    pub map: Option<MapSpec>,
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    /// Overrides of the bubble-tree configuration.
    pub bubble: Option<toml::Value>,
    pub riesz: Option<RieszSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    #[default]
    Round,
    Rescaled { amplitude: Num, axis: [Num; 3] },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    RoundSphere {
        #[serde(default = "one")]
        curvature: Num,
    },
    Flat,
    PerturbedSphere {
        #[serde(default = "one")]
        curvature: Num,
        amplitude: Num,
        axis: [Num; 3],
    },
    FubiniStudy {
        dim: usize,
        #[serde(default = "one")]
        c: Num,
    },
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::RoundSphere { curvature: one() }
    }
}

fn one() -> Num {
    Num(1.0)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    /// `numerator/denominator`, coefficients in ascending degree.
    Rational {
        numerator: Vec<Cplx>,
        denominator: Vec<Cplx>,
        #[serde(default)]
        conjugate: bool,
    },
    Monomial {
        degree: usize,
        #[serde(default)]
        conjugate: bool,
    },
    Identity {
        #[serde(default)]
        conjugate: bool,
    },
    Veronese {
        n: usize,
        #[serde(default)]
        conjugate: bool,
    },
    /// `[p_0 : … : p_n]` with ascending coefficient lists.
    Curve {
        components: Vec<Vec<Cplx>>,
        #[serde(default)]
        conjugate: bool,
    },
    /// A CP¹ map composed with the line `[U_0 f0 + U_1 f1]`.
    Line {
        inner: Box<MapSpec>,
        f0: Vec<Cplx>,
        f1: Vec<Cplx>,
    },
    /// `Σ c z^j z̄^k` into a curve target.
    Polynomial { terms: Vec<Term> },
    AmbientLinear {
        #[serde(default = "czero")]
        offset: Cplx,
        coeffs: [Cplx; 3],
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub c: Cplx,
    pub j: u32,
    pub k: u32,
}

fn czero() -> Cplx {
    Cplx(Num(0.0), Num(0.0))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    pub scale: Num,
    pub power: Num,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    ShrinkingIdentity {
        #[serde(default = "czero")]
        center: Cplx,
        lambda: Option<LambdaSpec>,
    },
    TwoBubble {
        a: Cplx,
        b: Cplx,
        lambda: Option<LambdaSpec>,
    },
    Constant {
        #[serde(default = "czero")]
        value: Cplx,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Erels,
    Cs,
    Bochner,
    Conformal,
    Theorem1,
    EnergyBounds,
}

pub const ALL_CHECKS: [Check; 6] = [
    Check::Erels,
    Check::Cs,
    Check::Bochner,
    Check::Conformal,
    Check::Theorem1,
    Check::EnergyBounds,
];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    pub grid: Option<usize>,
    pub rule: Option<Rule>,
    pub schedule: Option<Vec<usize>>,
    pub checks: Option<Vec<Check>>,
    /// Relative tolerance of the integral checks.
    pub tolerance: Option<Num>,
    /// Finite-difference steps of the Bochner refinement study.
    pub bochner_steps: Option<Vec<Num>>,
    /// Amplitude of the conformal rescaling in the invariance check.
    pub conformal_amplitude: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub at: Cplx,
    pub mass: Num,
}

/// Functions on the unit disk used by the potential checks.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant { value: Num },
    /// `a|z|²`.
    Quadratic { a: Num },
    /// `Re(c z) + b`.
    Harmonic {
        #[serde(default = "czero")]
        c: Cplx,
        #[serde(default = "zero")]
        b: Num,
    },
    /// Log energy density of `z ↦ z/λ` on `D(0, r)` rescaled to the unit disk.
    BubbleLog { lambda: Num, r: Num },
}

fn zero() -> Num {
    Num(0.0)
}

impl FunctionSpec {
    pub fn build(&self) -> Arc<dyn Fn(C64) -> f64 + Send + Sync> {
        match *self {
            FunctionSpec::Constant { value } => Arc::new(move |_| value.0),
            FunctionSpec::Quadratic { a } => Arc::new(move |z: C64| a.0 * z.norm_sqr()),
            FunctionSpec::Harmonic { c, b } => {
                let c = c.value();
                Arc::new(move |z: C64| (c * z).re + b.0)
            }
            FunctionSpec::BubbleLog { lambda, r } => {
                let (l, r) = (lambda.0, r.0);
                Arc::new(move |z: C64| {
                    let s = 1.0 + r * r * z.norm_sqr() / (l * l);
                    (4.0 * r * r / (l * l * s * s)).ln()
                })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RieszSpec {
    /// Exponential integrability of the potential of atoms.
    P1 { atoms: Vec<Atom>, p: Num },
    /// Mean value inequality for a subharmonic `w` at `z`.
    P2 {
        w: FunctionSpec,
        #[serde(default = "czero")]
        z: Cplx,
    },
    /// Full L^p chain for `e^φ`.
    KeyLemma { phi: FunctionSpec, p: Num },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

/// A map together with what the checks need to know about it.
pub struct BuiltMap {
    pub map: MapRef,
    /// The underlying projective curve for ramification checks.
    pub curve: Option<ProjectiveCurve>,
    pub antiholomorphic: bool,
}

fn poly(c: &[Cplx]) -> Poly {
    Poly::new(c.iter().map(Cplx::value).collect())
}

fn curve_map(curve: ProjectiveCurve, conjugate: bool) -> BuiltMap {
    let map: MapRef = if conjugate {
        share(Conjugate(Arc::new(curve.clone())))
    } else {
        share(curve.clone())
    };
    BuiltMap {
        map,
        curve: Some(curve),
        antiholomorphic: conjugate,
    }
}

impl MapSpec {
    pub fn build(&self) -> Result<BuiltMap, CliError> {
        let invalid = |e: bubblelab::Error| CliError::from(e);
        Ok(match self {
            MapSpec::Rational {
                numerator,
                denominator,
                conjugate,
            } => curve_map(ProjectiveCurve::rational(poly(numerator), poly(denominator)).map_err(invalid)?, *conjugate),
            MapSpec::Monomial { degree, conjugate } => {
                if *degree == 0 {
                    return Err(CliError::invalid("map.degree must be at least 1"));
                }
                curve_map(ProjectiveCurve::monomial(*degree), *conjugate)
            }
            MapSpec::Identity { conjugate } => curve_map(ProjectiveCurve::identity(), *conjugate),
            MapSpec::Veronese { n, conjugate } => curve_map(veronese(*n).map_err(invalid)?, *conjugate),
            MapSpec::Curve { components, conjugate } => {
                let comps = components.iter().map(|c| poly(c)).collect();
                curve_map(ProjectiveCurve::new(comps).map_err(invalid)?, *conjugate)
            }
            MapSpec::Line { inner, f0, f1 } => {
                let inner = inner.build()?;
                let f0 = f0.iter().map(Cplx::value).collect();
                let f1 = f1.iter().map(Cplx::value).collect();
                BuiltMap {
                    map: share(LineEmbedding::new(inner.map, f0, f1).map_err(invalid)?),
                    curve: None,
                    antiholomorphic: inner.antiholomorphic,
                }
            }
            MapSpec::Polynomial { terms } => BuiltMap {
                map: share(PolynomialMap {
                    terms: terms.iter().map(|t| (t.c.value(), t.j, t.k)).collect(),
                }),
                curve: None,
                antiholomorphic: false,
            },
            MapSpec::AmbientLinear { offset, coeffs } => BuiltMap {
                map: share(AmbientLinearMap {
                    offset: offset.value(),
                    coeffs: [coeffs[0].value(), coeffs[1].value(), coeffs[2].value()],
                }),
                curve: None,
                antiholomorphic: false,
            },
        })
    }
}

impl DomainSpec {
    pub fn build(&self) -> DomainSurface {
        match self {
            DomainSpec::Round => DomainSurface::Round,
            DomainSpec::Rescaled { amplitude, axis } => DomainSurface::Rescaled {
                amplitude: amplitude.0,
                axis: [axis[0].0, axis[1].0, axis[2].0],
            },
        }
    }
}

impl TargetSpec {
    pub fn build(&self) -> Result<KahlerTarget, CliError> {
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(CliError::invalid(format!("target.{what} must be positive")))
            }
        };
        Ok(match self {
            TargetSpec::RoundSphere { curvature } => KahlerTarget::Curve(CurveMetric::Sphere {
                curvature: positive(curvature.0, "curvature")?,
            }),
            TargetSpec::Flat => KahlerTarget::Curve(CurveMetric::Flat),
            TargetSpec::PerturbedSphere {
                curvature,
                amplitude,
                axis,
            } => KahlerTarget::Curve(CurveMetric::PerturbedSphere {
                curvature: positive(curvature.0, "curvature")?,
                amplitude: amplitude.0,
                axis: [axis[0].0, axis[1].0, axis[2].0],
            }),
            TargetSpec::FubiniStudy { dim, c } => {
                if *dim == 0 {
                    return Err(CliError::invalid("target.dim must be at least 1"));
                }
                KahlerTarget::FubiniStudy {
                    dim: *dim,
                    c: positive(c.0, "c")?,
                }
            }
        })
    }
}

impl FamilySpec {
    pub fn build(&self, schedule: Vec<usize>) -> Result<MapFamily, CliError> {
        let lam = |l: &Option<LambdaSpec>| {
            l.as_ref()
                .map(|l| LambdaSchedule {
                    scale: l.scale.0,
                    power: l.power.0,
                })
                .unwrap_or_default()
        };
        match self {
            FamilySpec::ShrinkingIdentity { center, lambda } => {
                MapFamily::shrinking_identity(center.value(), lam(lambda), schedule)
            }
            FamilySpec::TwoBubble { a, b, lambda } => MapFamily::two_bubble(a.value(), b.value(), lam(lambda), schedule),
            FamilySpec::Constant { value } => MapFamily::constant(value.value(), schedule),
        }
        .map_err(CliError::from)
    }
}

/// Command-line overrides shared by every command.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub schedule: Option<Vec<usize>>,
    pub out: Option<String>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::invalid(format!("scenario: {e}")))?;
        if s.map.is_some() && s.family.is_some() {
            return Err(CliError::invalid("scenario: give either [map] or [family], not both"));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError {
            code: e.code,
            message: format!("{}: {}", path.display(), e.message),
        })
    }

    pub fn quadrature(&self, ov: &Overrides, default_n: usize) -> Result<QuadratureSpec, CliError> {
        let n = ov.grid.or(self.analysis.grid).unwrap_or(default_n);
        let rule = self.analysis.rule.unwrap_or(Rule::Simpson);
        QuadratureSpec::new(n, rule).map_err(CliError::from)
    }

    pub fn schedule(&self, ov: &Overrides) -> Vec<usize> {
        ov.schedule
            .clone()
            .or_else(|| self.analysis.schedule.clone())
            .unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec())
    }

    pub fn bubble_config(&self) -> Result<BubbleConfig, CliError> {
        match &self.bubble {
            None => Ok(BubbleConfig::default()),
            Some(v) => {
                let mut v = v.clone();
                resolve_numbers(&mut v);
                v.try_into().map_err(|e| CliError::invalid(format!("scenario: [bubble]: {e}")))
            }
        }
    }

    pub fn out_dir(&self, ov: &Overrides) -> String {
        ov.out
            .clone()
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| "out".to_string())
    }

    pub fn require_map(&self) -> Result<BuiltMap, CliError> {
        self.map
            .as_ref()
            .ok_or_else(|| CliError::invalid("scenario: this command needs a [map] table"))?
            .build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_defaults() {
        let s = Scenario::parse("[map]\nkind = \"identity\"\n").unwrap();
        assert!(matches!(s.domain, DomainSpec::Round));
        assert!(matches!(s.target, TargetSpec::RoundSphere { .. }));
        assert!(s.require_map().unwrap().curve.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "[map]\nkind = \"identity\"\nconjugat = true\n",
            "[mapp]\nkind = \"identity\"\n",
            "[analysis]\ngird = 64\n",
            "[map]\nkind = \"idnetity\"\n",
        ] {
            let e = Scenario::parse(text).unwrap_err();
            assert_eq!(e.code, 2, "{text}");
        }
    }

    #[test]
    fn diagnostics_name_the_line() {
        let e = Scenario::parse("name = \"x\"\n[analysis]\ngrid = \"many\"\n").unwrap_err();
        assert!(e.message.contains("line 3"), "{}", e.message);
    }

    #[test]
    fn bubble_overrides_accept_exact_numbers() {
        let s = Scenario::parse("[family]\nkind = \"constant\"\n[bubble]\nc_r = \"pi/4\"\nrho = 0.25\n").unwrap();
        let c = s.bubble_config().unwrap();
        assert_eq!(c.c_r, std::f64::consts::PI / 4.0);
        assert_eq!(c.rho, 0.25);
        let s = Scenario::parse("[family]\nkind = \"constant\"\n[bubble]\nc_rr = 1\n").unwrap();
        assert!(s.bubble_config().is_err());
    }

    #[test]
    fn map_and_family_are_exclusive() {
        assert!(Scenario::parse("[map]\nkind = \"identity\"\n[family]\nkind = \"constant\"\n").is_err());
    }
}
