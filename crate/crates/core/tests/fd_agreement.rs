//! Jet derivatives against the finite-difference oracle.
//!
//! The oracle never touches jet coefficients, so agreement here means the
//! propagation rules themselves are right, not merely self-consistent.
//! Third derivatives divide by h^3 and inherit roundoff near 1e-6; the
//! 1e-5 gate reflects that, not the jets.

use berwald::fd::{fd_partial, FdConfig};
use berwald::jet::{seed, MultiIndex};
use berwald::{catalog, field_value, SupportElement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Multi-indices with total degree 1 through 3.
fn indices() -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for a in 0..=3u8 {
        for b in 0..=3 - a {
            for c in 0..=3 - a - b {
                for d in 0..=3 - a - b - c {
                    if a + b + c + d > 0 {
                        out.push(MultiIndex([a, b, c, d]));
                    }
                }
            }
        }
    }
    out
}

fn check_field(
    name: &str,
    field: berwald::catalog::FieldFn,
    square: bool,
    scenario: &str,
    samples: usize,
    rng: &mut ChaCha8Rng,
) {
    let scn = catalog::scenario(scenario).unwrap();
    // Third derivatives divide by h^3: small steps drown in roundoff while
    // large steps truncate badly near tight domain margins. Sweep a few
    // base steps and score the best-converged estimate.
    let bases = [1e-3, 2e-3, 4e-3];
    let idxs = indices();
    for _ in 0..samples {
        let u = scn.sample(rng);
        let vars = seed(&u, 3).unwrap();
        let mut jet = field(&vars).unwrap();
        if square {
            jet = &jet * &jet;
        }
        let numeric =
            |p: &SupportElement| field_value(&field, p).map(|v| if square { v * v } else { v });
        for &idx in &idxs {
            let from_jet = jet.partial(idx).unwrap();
            let mut dev = f64::INFINITY;
            for &base_step in &bases {
                let cfg = FdConfig {
                    base_step,
                    richardson_levels: 2,
                };
                if let Ok(from_fd) = fd_partial(numeric, &u, idx, &cfg) {
                    let d = (from_jet - from_fd).abs() / from_jet.abs().max(1.0);
                    dev = dev.min(d);
                }
            }
            assert!(
                dev < 1e-5,
                "{name} {idx:?} at {u:?}: jet {from_jet:.12e}, best fd dev {dev:.3e}"
            );
        }
    }
}

#[test]
fn metric_squares_agree_with_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairings = [
        ("klein", "klein_constant"),
        ("funk", "funk_gauge"),
        ("quartic", "quartic_log_shift"),
        ("randers", "randers_log_shift"),
        ("euclidean", "euclidean_angular"),
    ];
    for (metric_name, scenario_name) in pairings {
        let metric = catalog::metric(metric_name).unwrap();
        check_field(metric_name, metric.field, true, scenario_name, 6, &mut rng);
    }
}

#[test]
fn factors_agree_with_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pairings = [
        ("log_ratio", "klein_log_ratio"),
        ("log_shift", "klein_log_shift"),
        ("funk_gauge", "funk_gauge"),
        ("linear_x", "klein_constant"),
        ("angular", "euclidean_angular"),
        ("constant", "klein_constant"),
        ("flattening", "klein_flattening"),
    ];
    for (factor_name, scenario_name) in pairings {
        let factor = catalog::factor(factor_name).unwrap();
        check_field(factor_name, factor.field, false, scenario_name, 6, &mut rng);
    }
}
