//! Algebraic soundness of the jet arithmetic: inverse-operation round
//! trips on randomized jets, hand-checked derivatives, and the
//! homogeneity the catalog metrics promise.

use berwald::jet::{seed, Jet, MultiIndex, VAR_X2, VAR_Y1};
use berwald::{catalog, SupportElement};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORDER: usize = 4;

/// All multi-indices of total degree at most `ORDER`.
fn indices() -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for a in 0..=ORDER as u8 {
        for b in 0..=ORDER as u8 - a {
            for c in 0..=ORDER as u8 - a - b {
                for d in 0..=ORDER as u8 - a - b - c {
                    out.push(MultiIndex([a, b, c, d]));
                }
            }
        }
    }
    out
}

fn max_partial_dev(a: &Jet, b: &Jet) -> f64 {
    indices()
        .iter()
        .map(|&idx| (a.partial(idx).unwrap() - b.partial(idx).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// Largest partial magnitude, floored at one, for scale-aware tolerances.
fn partial_scale(j: &Jet) -> f64 {
    indices()
        .iter()
        .map(|&idx| j.partial(idx).unwrap().abs())
        .fold(1.0, f64::max)
}

/// A generic dense-ish jet: constant plus contributions from every
/// variable, with a quadratic cross term. The value at the expansion point
/// is pinned to `c0` so callers control where singular operations sit.
fn build_jet(c0: f64, lin: [f64; 4], quad: f64, u: &SupportElement) -> Jet {
    let v = seed(u, ORDER).unwrap();
    let raw = lin[0] * &v.x[0]
        + lin[1] * &v.x[1]
        + lin[2] * &v.y[0]
        + lin[3] * &v.y[1]
        + quad * &v.x[0] * &v.y[1];
    let drift = raw.value();
    raw + (c0 - drift)
}

fn arb_lin() -> impl Strategy<Value = [f64; 4]> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn division_multiplication_round_trip(
        c0 in 0.5f64..3.0,
        lin in arb_lin(),
        quad in -1.0f64..1.0,
        flip: bool,
    ) {
        let u = SupportElement::new([0.3, -0.2], [0.9, 0.4]);
        let sign = if flip { -1.0 } else { 1.0 };
        let b = build_jet(sign * c0, lin, quad, &u);
        let a = build_jet(0.7, [0.3, -0.4, 0.9, 0.1], -0.6, &u);
        let back = &(&a / &b) * &b;
        let tol = 1e-9 * partial_scale(&a).max(partial_scale(&b));
        prop_assert!(max_partial_dev(&back, &a) < tol);
    }

    #[test]
    fn ln_exp_round_trip(c0 in 0.5f64..3.0, lin in arb_lin(), quad in -0.5f64..0.5) {
        let u = SupportElement::new([-0.1, 0.4], [1.1, -0.6]);
        let a = build_jet(c0, lin, quad, &u);
        let back = a.ln().unwrap().exp().unwrap();
        let tol = 1e-9 * partial_scale(&a);
        prop_assert!(max_partial_dev(&back, &a) < tol);
    }

    #[test]
    fn sqrt_square_round_trip(c0 in 0.5f64..4.0, lin in arb_lin(), quad in -0.5f64..0.5) {
        let u = SupportElement::new([0.2, 0.1], [0.8, 1.2]);
        let a = build_jet(c0, lin, quad, &u);
        let r = a.sqrt().unwrap();
        let back = &r * &r;
        let tol = 1e-9 * partial_scale(&a);
        prop_assert!(max_partial_dev(&back, &a) < tol);
    }

    #[test]
    fn sin_cos_circle(c0 in -2.0f64..2.0, lin in arb_lin(), quad in -0.5f64..0.5) {
        let u = SupportElement::new([0.2, 0.1], [0.8, 1.2]);
        let a = build_jet(c0, lin, quad, &u);
        let s = a.sin().unwrap();
        let c = a.cos().unwrap();
        let one = &s * &s + &c * &c;
        let unit = Jet::constant(1.0, ORDER).unwrap();
        prop_assert!(max_partial_dev(&one, &unit) < 1e-10);
    }
}

#[test]
fn mixed_partials_match_hand_computation() {
    // f = x1^2 y2 + sin(x2) y1 at a generic point.
    let u = SupportElement::new([0.7, 0.3], [1.2, -0.5]);
    let v = seed(&u, ORDER).unwrap();
    let f = &v.x[0] * &v.x[0] * &v.y[1] + v.x[1].sin().unwrap() * &v.y[0];

    let val = 0.7 * 0.7 * -0.5 + 0.3f64.sin() * 1.2;
    assert!((f.value() - val).abs() < 1e-14);
    // d^2 f / dx1 dy2 = 2 x1.
    let d = f.partial(MultiIndex([1, 0, 0, 1])).unwrap();
    assert!((d - 1.4).abs() < 1e-14, "{d}");
    // d^2 f / dx2 dy1 = cos(x2).
    let d = f.partial(MultiIndex([0, 1, 1, 0])).unwrap();
    assert!((d - 0.3f64.cos()).abs() < 1e-14, "{d}");
    // d^3 f / dx2^3 = -cos(x2) y1.
    let d = f.partial(MultiIndex([0, 3, 0, 0])).unwrap();
    assert!((d + 0.3f64.cos() * 1.2).abs() < 1e-13, "{d}");
}

#[test]
fn atan_derivatives_match_closed_form() {
    // g = atan(y2 / y1): dg/dy1 = -y2 / |y|^2, dg/dy2 = y1 / |y|^2.
    let u = SupportElement::new([0.0, 0.0], [1.3, 0.7]);
    let v = seed(&u, ORDER).unwrap();
    let g = (&v.y[1] / &v.y[0]).atan().unwrap();
    let yy = 1.3 * 1.3 + 0.7 * 0.7;
    let d1 = g.partial(MultiIndex([0, 0, 1, 0])).unwrap();
    assert!((d1 + 0.7 / yy).abs() < 1e-14, "{d1}");
    let d2 = g.partial(MultiIndex([0, 0, 0, 1])).unwrap();
    assert!((d2 - 1.3 / yy).abs() < 1e-14, "{d2}");
}

#[test]
fn differentiation_reduces_order_and_bottoms_out() {
    let u = SupportElement::new([0.1, 0.2], [1.0, 0.5]);
    let v = seed(&u, 3).unwrap();
    let f = &v.y[0] * &v.y[1];
    let d = f.diff(VAR_Y1);
    assert_eq!(d.order(), 2);
    assert!((d.value() - 0.5).abs() < 1e-15);
    let dd = d.diff(VAR_X2);
    assert_eq!(dd.order(), 1);
    assert_eq!(dd.value(), 0.0);
}

#[test]
fn catalog_metrics_are_positively_homogeneous() {
    // Euler's identity for degree one: sum_i y_i dF/dy_i = F.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairings = [
        ("klein", "klein_constant"),
        ("funk", "funk_gauge"),
        ("quartic", "quartic_log_shift"),
        ("randers", "randers_log_shift"),
        ("euclidean", "euclidean_angular"),
    ];
    for (metric_name, scenario_name) in pairings {
        let metric = catalog::metric(metric_name).unwrap();
        let scn = catalog::scenario(scenario_name).unwrap();
        for _ in 0..10 {
            let u = scn.sample(&mut rng);
            let v = seed(&u, 2).unwrap();
            let f = (metric.field)(&v).unwrap();
            let radial = u.y[0] * f.partial(MultiIndex([0, 0, 1, 0])).unwrap()
                + u.y[1] * f.partial(MultiIndex([0, 0, 0, 1])).unwrap();
            let dev = (radial - f.value()).abs() / f.value().abs();
            assert!(dev < 1e-12, "{metric_name} at {u:?}: defect {dev:.3e}");
        }
    }
}
