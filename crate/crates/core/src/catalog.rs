//! Built-in metrics, conformal factors, and named scenarios.
//!
//! A scenario pairs one metric with one factor and carries a sampler for
//! admissible support elements. The catalog covers the interesting
//! behaviours of the transform: a factor that collapses the Klein metric
//! to a degenerate one, a factor the Funk-type spray carries unchanged, a
//! factor turning the Klein metric into the projectively and dually flat
//! Funk metric, and the structured factor families (position-only,
//! direction-only, constant).

use crate::conformal::{ConformalAnalysis, FactorKind};
use crate::error::GeometryError;
use crate::jet::{Jet, JetVars};
use crate::SupportElement;
use rand::Rng;

/// Field definition: a jet-valued function of the seeded variables.
pub type FieldFn = fn(&JetVars) -> Result<Jet, GeometryError>;

/// Pointwise admissibility predicate.
pub type DomainFn = fn(&SupportElement) -> bool;

/// A named metric with its conic domain.
#[derive(Clone, Copy)]
pub struct MetricSpec {
    pub name: &'static str,
    pub field: FieldFn,
    pub domain: DomainFn,
}

/// A named conformal factor with its declared structure and domain.
#[derive(Clone, Copy)]
pub struct FactorSpec {
    pub name: &'static str,
    pub field: FieldFn,
    pub kind: FactorKind,
    pub domain: DomainFn,
}

/// A metric-factor pairing with a sampler for admissible points. The
/// sampler enforces margins strictly inside the hard domains so sampled
/// points stay well-conditioned.
#[derive(Clone, Copy)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub metric: MetricSpec,
    pub factor: FactorSpec,
    /// Radial bounds for the position sample.
    pub x_ring: (f64, f64),
    pub admissible: DomainFn,
}

const A1: f64 = 0.3;
const A2: f64 = 0.4;

// Quadratic form values used by domain predicates.

fn forms(u: &SupportElement) -> (f64, f64, f64) {
    let xx = u.x[0] * u.x[0] + u.x[1] * u.x[1];
    let yy = u.y[0] * u.y[0] + u.y[1] * u.y[1];
    let xy = u.x[0] * u.y[0] + u.x[1] * u.y[1];
    (xx, yy, xy)
}

fn klein_root(u: &SupportElement) -> f64 {
    let (xx, yy, xy) = forms(u);
    (yy * (1.0 - xx) + xy * xy).sqrt()
}

// Jet-level building blocks shared by the definitions below.

fn form_jets(v: &JetVars) -> (Jet, Jet, Jet) {
    let xx = &v.x[0] * &v.x[0] + &v.x[1] * &v.x[1];
    let yy = &v.y[0] * &v.y[0] + &v.y[1] * &v.y[1];
    let xy = &v.x[0] * &v.y[0] + &v.x[1] * &v.y[1];
    (xx, yy, xy)
}

/// sqrt(|y|^2 (1 - |x|^2) + <x,y>^2), the square root in the Klein metric.
fn klein_root_jet(v: &JetVars) -> Result<Jet, GeometryError> {
    let (xx, yy, xy) = form_jets(v);
    Ok((&yy * (1.0 - &xx) + &xy * &xy).sqrt()?)
}

/// The anchor covector contractions and the ray part of the Funk-type
/// metric: (a.x, a.y, |z|) with z_i = ((1 + a.x) y_i - (a.y) x_i) / (a.y).
fn funk_parts(v: &JetVars) -> Result<(Jet, Jet, Jet), GeometryError> {
    let ax = A1 * &v.x[0] + A2 * &v.x[1];
    let ay = A1 * &v.y[0] + A2 * &v.y[1];
    let z0 = ((1.0 + &ax) * &v.y[0] - &ay * &v.x[0]) / &ay;
    let z1 = ((1.0 + &ax) * &v.y[1] - &ay * &v.x[1]) / &ay;
    let norm = (&z0 * &z0 + &z1 * &z1).sqrt()?;
    Ok((ax, ay, norm))
}

// Metrics.

fn klein_metric(v: &JetVars) -> Result<Jet, GeometryError> {
    let (xx, _, _) = form_jets(v);
    Ok(klein_root_jet(v)? / (1.0 - xx))
}

fn funk_type_metric(v: &JetVars) -> Result<Jet, GeometryError> {
    let (ax, ay, norm) = funk_parts(v)?;
    let opax = 1.0 + &ax;
    Ok(&ay * &norm / (&opax * &opax))
}

fn quartic_metric(v: &JetVars) -> Result<Jet, GeometryError> {
    let y14 = &v.y[0] * &v.y[0] * &v.y[0] * &v.y[0];
    let y24 = &v.y[1] * &v.y[1] * &v.y[1] * &v.y[1];
    Ok((y14 + y24).powf(0.25)?)
}

fn randers_metric(v: &JetVars) -> Result<Jet, GeometryError> {
    let (_, yy, _) = form_jets(v);
    Ok(yy.sqrt()? + 0.2 * &v.y[0] + 0.1 * &v.y[1])
}

fn euclidean_metric(v: &JetVars) -> Result<Jet, GeometryError> {
    let (_, yy, _) = form_jets(v);
    Ok(yy.sqrt()?)
}

// Factors.

fn log_ratio_factor(v: &JetVars) -> Result<Jet, GeometryError> {
    let (_, _, xy) = form_jets(v);
    Ok((xy / klein_root_jet(v)?).ln()?)
}

fn log_shift_factor(v: &JetVars) -> Result<Jet, GeometryError> {
    let (_, _, xy) = form_jets(v);
    Ok((1.0 + xy / klein_root_jet(v)?).ln()?)
}

fn funk_gauge_factor(v: &JetVars) -> Result<Jet, GeometryError> {
    let (_, _, norm) = funk_parts(v)?;
    Ok(norm)
}

fn linear_x_factor(v: &JetVars) -> Result<Jet, GeometryError> {
    Ok(0.3 * &v.x[0] - 0.2 * &v.x[1])
}

fn angular_factor(v: &JetVars) -> Result<Jet, GeometryError> {
    let (_, yy, _) = form_jets(v);
    Ok(&v.y[0] * &v.y[1] / yy)
}

fn constant_factor(v: &JetVars) -> Result<Jet, GeometryError> {
    Ok(Jet::constant(0.3, v.x[0].order())?)
}

fn flattening_factor(v: &JetVars) -> Result<Jet, GeometryError> {
    let (_, yy, _) = form_jets(v);
    Ok((yy.sqrt()? / klein_metric(v)?).ln()?)
}

// Hard domains.

fn dom_true(_: &SupportElement) -> bool {
    true
}

fn dom_ray(u: &SupportElement) -> bool {
    let (_, yy, _) = forms(u);
    yy > 0.0
}

fn dom_klein(u: &SupportElement) -> bool {
    let (xx, yy, _) = forms(u);
    xx < 1.0 && yy > 0.0
}

fn dom_funk(u: &SupportElement) -> bool {
    let ax = A1 * u.x[0] + A2 * u.x[1];
    let ay = A1 * u.y[0] + A2 * u.y[1];
    dom_ray(u) && ay > 0.0 && 1.0 + ax > 0.0
}

fn dom_quartic(u: &SupportElement) -> bool {
    let (_, yy, _) = forms(u);
    yy > 0.0 && u.y[0].abs().min(u.y[1].abs()) >= 0.1 * yy.sqrt()
}

fn dom_log_ratio(u: &SupportElement) -> bool {
    let (_, _, xy) = forms(u);
    dom_klein(u) && xy > 0.0
}

fn dom_log_shift(u: &SupportElement) -> bool {
    let (_, _, xy) = forms(u);
    dom_klein(u) && klein_root(u) + xy > 0.0
}

// Sampling margins per scenario.

fn adm_log_ratio(u: &SupportElement) -> bool {
    let (xx, yy, xy) = forms(u);
    xy >= 0.1 * (xx * yy).sqrt()
}

fn adm_funk(u: &SupportElement) -> bool {
    let ay = A1 * u.y[0] + A2 * u.y[1];
    let (_, yy, _) = forms(u);
    if ay < 0.05 * yy.sqrt() {
        return false;
    }
    // The gauge enters the transform as e^{2 phi}; cap it so a direct
    // evaluation of the transformed geometry keeps enough significand to
    // cross-check the closed forms.
    let ax = A1 * u.x[0] + A2 * u.x[1];
    let z = [
        ((1.0 + ax) * u.y[0] - ay * u.x[0]) / ay,
        ((1.0 + ax) * u.y[1] - ay * u.x[1]) / ay,
    ];
    z[0].hypot(z[1]) <= 12.0
}

fn adm_log_shift(u: &SupportElement) -> bool {
    let (_, _, xy) = forms(u);
    xy >= -0.9 * klein_root(u)
}

fn adm_quartic_log_shift(u: &SupportElement) -> bool {
    let (_, yy, _) = forms(u);
    u.y[0].abs().min(u.y[1].abs()) >= 0.15 * yy.sqrt() && adm_log_shift(u)
}

fn adm_true(_: &SupportElement) -> bool {
    true
}

const KLEIN: MetricSpec = MetricSpec {
    name: "klein",
    field: klein_metric,
    domain: dom_klein,
};
const FUNK: MetricSpec = MetricSpec {
    name: "funk",
    field: funk_type_metric,
    domain: dom_funk,
};
const QUARTIC: MetricSpec = MetricSpec {
    name: "quartic",
    field: quartic_metric,
    domain: dom_quartic,
};
const RANDERS: MetricSpec = MetricSpec {
    name: "randers",
    field: randers_metric,
    domain: dom_ray,
};
const EUCLIDEAN: MetricSpec = MetricSpec {
    name: "euclidean",
    field: euclidean_metric,
    domain: dom_ray,
};

const LOG_RATIO: FactorSpec = FactorSpec {
    name: "log_ratio",
    field: log_ratio_factor,
    kind: FactorKind::General,
    domain: dom_log_ratio,
};
const LOG_SHIFT: FactorSpec = FactorSpec {
    name: "log_shift",
    field: log_shift_factor,
    kind: FactorKind::General,
    domain: dom_log_shift,
};
const FUNK_GAUGE: FactorSpec = FactorSpec {
    name: "funk_gauge",
    field: funk_gauge_factor,
    kind: FactorKind::General,
    domain: dom_funk,
};
const LINEAR_X: FactorSpec = FactorSpec {
    name: "linear_x",
    field: linear_x_factor,
    kind: FactorKind::XOnly,
    domain: dom_true,
};
const ANGULAR: FactorSpec = FactorSpec {
    name: "angular",
    field: angular_factor,
    kind: FactorKind::YOnly,
    domain: dom_ray,
};
const CONSTANT: FactorSpec = FactorSpec {
    name: "constant",
    field: constant_factor,
    kind: FactorKind::Homothety,
    domain: dom_true,
};
const FLATTENING: FactorSpec = FactorSpec {
    name: "flattening",
    field: flattening_factor,
    kind: FactorKind::General,
    domain: dom_klein,
};

const METRICS: [MetricSpec; 5] = [KLEIN, FUNK, QUARTIC, RANDERS, EUCLIDEAN];
const FACTORS: [FactorSpec; 7] = [
    LOG_RATIO, LOG_SHIFT, FUNK_GAUGE, LINEAR_X, ANGULAR, CONSTANT, FLATTENING,
];

const SCENARIOS: [Scenario; 10] = [
    Scenario {
        name: "klein_log_ratio",
        description: "collapses the Klein metric to a metric linear in y; the transform \
                      is degenerate at every admissible point",
        metric: KLEIN,
        factor: LOG_RATIO,
        x_ring: (0.2, 0.8),
        admissible: adm_log_ratio,
    },
    Scenario {
        name: "funk_gauge",
        description: "a factor that is horizontally constant for the Funk-type metric, \
                      so the spray is carried over unchanged",
        metric: FUNK,
        factor: FUNK_GAUGE,
        x_ring: (0.0, 0.8),
        admissible: adm_funk,
    },
    Scenario {
        name: "klein_log_shift",
        description: "sends the Klein metric to the Funk metric of the unit disk, which \
                      is projectively and dually flat",
        metric: KLEIN,
        factor: LOG_SHIFT,
        x_ring: (0.0, 0.8),
        admissible: adm_log_shift,
    },
    Scenario {
        name: "klein_constant",
        description: "a homothety of the Klein metric; the whole connection tower is \
                      invariant",
        metric: KLEIN,
        factor: CONSTANT,
        x_ring: (0.0, 0.8),
        admissible: adm_true,
    },
    Scenario {
        name: "klein_linear_x",
        description: "a position-only factor on the Klein metric; exercises the \
                      rescaling reductions",
        metric: KLEIN,
        factor: LINEAR_X,
        x_ring: (0.0, 0.8),
        admissible: adm_true,
    },
    Scenario {
        name: "euclidean_angular",
        description: "a direction-only factor on the Euclidean metric; the transform \
                      flips the metric signature",
        metric: EUCLIDEAN,
        factor: ANGULAR,
        x_ring: (0.0, 0.8),
        admissible: adm_true,
    },
    Scenario {
        name: "klein_angular",
        description: "a direction-only factor on the Klein metric; the transformed \
                      metric has curved geodesics",
        metric: KLEIN,
        factor: ANGULAR,
        x_ring: (0.0, 0.8),
        admissible: adm_true,
    },
    Scenario {
        name: "klein_flattening",
        description: "the factor that straightens the Klein metric back to the \
                      Euclidean norm",
        metric: KLEIN,
        factor: FLATTENING,
        x_ring: (0.0, 0.8),
        admissible: adm_true,
    },
    Scenario {
        name: "quartic_log_shift",
        description: "a non-quadratic direction geometry under a generic factor; keeps \
                      directions away from the degenerate axes",
        metric: QUARTIC,
        factor: LOG_SHIFT,
        x_ring: (0.0, 0.8),
        admissible: adm_quartic_log_shift,
    },
    Scenario {
        name: "randers_log_shift",
        description: "a Randers norm under a generic factor",
        metric: RANDERS,
        factor: LOG_SHIFT,
        x_ring: (0.0, 0.8),
        admissible: adm_log_shift,
    },
];

/// All built-in metrics.
pub fn metrics() -> &'static [MetricSpec] {
    &METRICS
}

/// All built-in factors.
pub fn factors() -> &'static [FactorSpec] {
    &FACTORS
}

/// All built-in scenarios.
pub fn scenarios() -> &'static [Scenario] {
    &SCENARIOS
}

/// Look up a metric by name.
pub fn metric(name: &str) -> Option<&'static MetricSpec> {
    METRICS.iter().find(|m| m.name == name)
}

/// Look up a factor by name.
pub fn factor(name: &str) -> Option<&'static FactorSpec> {
    FACTORS.iter().find(|f| f.name == name)
}

/// Look up a scenario by name.
pub fn scenario(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

/// Build an ad-hoc scenario from a metric and factor name. The sampler
/// falls back to the hard domains with no extra margin.
pub fn custom_scenario(metric_name: &str, factor_name: &str) -> Option<Scenario> {
    let metric = *metric(metric_name)?;
    let factor = *factor(factor_name)?;
    Some(Scenario {
        name: "custom",
        description: "ad-hoc metric and factor pairing",
        metric,
        factor,
        x_ring: (0.0, 0.8),
        admissible: adm_true,
    })
}

/// Draw an admissible support element: position in the radial ring,
/// direction in the annulus 0.5 <= |y| <= 1.5, both rejected against the
/// predicate. Panics if the acceptance region is essentially empty, which
/// signals a misconfigured scenario rather than bad luck.
pub fn sample_support<R: Rng>(
    rng: &mut R,
    x_ring: (f64, f64),
    accept: impl Fn(&SupportElement) -> bool,
) -> SupportElement {
    let span = x_ring.1.max(1e-6);
    for _ in 0..100_000 {
        let x = [rng.random_range(-span..span), rng.random_range(-span..span)];
        let rx = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if rx < x_ring.0 || rx > x_ring.1 {
            continue;
        }
        let y: [f64; 2] = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        let ry = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if !(0.5..=1.5).contains(&ry) {
            continue;
        }
        let u = SupportElement::new(x, y);
        if accept(&u) {
            return u;
        }
    }
    panic!("support-element sampler found no admissible point in 100000 draws");
}

impl Scenario {
    /// Draw one admissible support element for this scenario.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> SupportElement {
        let metric_domain = self.metric.domain;
        let factor_domain = self.factor.domain;
        let margin = self.admissible;
        sample_support(rng, self.x_ring, |u| {
            metric_domain(u) && factor_domain(u) && margin(u)
        })
    }

    /// Evaluate the conformal transform of this scenario at one point.
    pub fn analyze(
        &self,
        u: &SupportElement,
        order: usize,
    ) -> Result<ConformalAnalysis, GeometryError> {
        ConformalAnalysis::new(
            &self.metric.field,
            &self.factor.field,
            self.factor.kind,
            u,
            order,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samplers_respect_domains() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for scn in scenarios() {
            for _ in 0..20 {
                let u = scn.sample(&mut rng);
                assert!((scn.metric.domain)(&u), "{}: metric domain", scn.name);
                assert!((scn.factor.domain)(&u), "{}: factor domain", scn.name);
            }
        }
    }

    #[test]
    fn catalog_lookup_is_by_name() {
        assert!(metric("klein").is_some());
        assert!(factor("angular").is_some());
        assert!(scenario("klein_log_shift").is_some());
        assert!(scenario("nonexistent").is_none());
        let custom = custom_scenario("quartic", "constant").unwrap();
        assert_eq!(custom.metric.name, "quartic");
        assert_eq!(custom.factor.kind, FactorKind::Homothety);
    }
}
