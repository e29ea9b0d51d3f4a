//! Geodesic traces by fourth-order Runge-Kutta integration of the spray
//! equations: x' = y, y' = -2 G(x, y).
//!
//! The spray is evaluated from scratch at every stage with shallow jets
//! (order 2 carries exactly the derivatives the spray needs), so tracing
//! does not pay for the full geometry tower. Two scalar summaries make the
//! qualitative behaviour checkable: the maximal deviation from the straight
//! line through the initial condition, and the relative drift of F along
//! the trace, which the geodesic flow conserves.

use crate::error::GeometryError;
use crate::geometry::{XV, YV};
use crate::jet::seed;
use crate::{Field, SupportElement};
use serde::Serialize;

/// One sampled state of a trace.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub f: f64,
}

/// A completed trace with its qualitative summaries.
#[derive(Clone, Debug, Serialize)]
pub struct TraceResult {
    pub rows: Vec<TracePoint>,
    /// True when the trace left the metric's domain (or hit a degenerate
    /// point) before completing all steps.
    pub exited: bool,
    /// Maximal distance of the position curve from the straight line
    /// through the starting point along the starting direction.
    pub chord_deviation: f64,
    /// Maximal relative change of F along the trace.
    pub f_drift: f64,
}

/// Integration parameters.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicConfig {
    pub dt: f64,
    pub steps: usize,
}

/// Spray values with the cheapest jets that can carry them.
pub fn spray_values<M: Field + ?Sized>(
    metric: &M,
    u: &SupportElement,
) -> Result<([f64; 2], f64), GeometryError> {
    let vars = seed(u, 2)?;
    let f = metric.eval(&vars)?;
    let fv = f.value();
    if !fv.is_finite() || fv <= 0.0 {
        return Err(GeometryError::Domain {
            reason: format!("metric value {fv} is not positive"),
        });
    }
    let f2 = &f * &f;
    let mut g = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = 0.5 * f2.diff(YV[i]).diff(YV[j]).value();
        }
    }
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let scale = g
        .iter()
        .flatten()
        .map(|v| v * v)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    if !det.is_finite() || det.abs() <= 1e-12 * scale {
        return Err(GeometryError::DegenerateMetric { det });
    }
    let g_inv = [
        [g[1][1] / det, -g[0][1] / det],
        [-g[1][0] / det, g[0][0] / det],
    ];
    let mut rhs = [0.0f64; 2];
    for (j, slot) in rhs.iter_mut().enumerate() {
        let mut s = -f2.diff(XV[j]).value();
        for (yk, xv) in u.y.iter().zip(XV) {
            s += yk * f2.diff(YV[j]).diff(xv).value();
        }
        *slot = s;
    }
    let spray = [
        0.25 * (g_inv[0][0] * rhs[0] + g_inv[0][1] * rhs[1]),
        0.25 * (g_inv[1][0] * rhs[0] + g_inv[1][1] * rhs[1]),
    ];
    Ok((spray, fv))
}

/// Trace the geodesic through `start`. `outside` is consulted after every
/// accepted step; returning true (or any evaluation failure mid-step) ends
/// the trace early with `exited` set. Fails only if the starting point
/// itself is not evaluable.
pub fn trace<M: Field + ?Sized>(
    metric: &M,
    start: &SupportElement,
    cfg: &GeodesicConfig,
    outside: impl Fn(&SupportElement) -> bool,
) -> Result<TraceResult, GeometryError> {
    let derivative = |state: &[f64; 4]| -> Result<[f64; 4], GeometryError> {
        let u = SupportElement::new([state[0], state[1]], [state[2], state[3]]);
        let (g, _) = spray_values(metric, &u)?;
        Ok([state[2], state[3], -2.0 * g[0], -2.0 * g[1]])
    };

    let (_, f0) = spray_values(metric, start)?;
    let mut state = [start.x[0], start.x[1], start.y[0], start.y[1]];
    let mut rows = vec![TracePoint {
        t: 0.0,
        x: start.x,
        y: start.y,
        f: f0,
    }];
    let mut exited = false;

    'steps: for step in 0..cfg.steps {
        let half = 0.5 * cfg.dt;
        let mut stages = [[0.0f64; 4]; 4];
        let shifts = [0.0, half, half, cfg.dt];
        for (s, shift) in shifts.iter().enumerate() {
            let mut probe = state;
            if s > 0 {
                for i in 0..4 {
                    probe[i] += shift * stages[s - 1][i];
                }
            }
            match derivative(&probe) {
                Ok(k) => stages[s] = k,
                Err(_) => {
                    exited = true;
                    break 'steps;
                }
            }
        }
        for i in 0..4 {
            state[i] += cfg.dt / 6.0
                * (stages[0][i] + 2.0 * stages[1][i] + 2.0 * stages[2][i] + stages[3][i]);
        }
        let u = SupportElement::new([state[0], state[1]], [state[2], state[3]]);
        if outside(&u) {
            exited = true;
            break;
        }
        match spray_values(metric, &u) {
            Ok((_, fv)) => rows.push(TracePoint {
                t: (step + 1) as f64 * cfg.dt,
                x: u.x,
                y: u.y,
                f: fv,
            }),
            Err(_) => {
                exited = true;
                break;
            }
        }
    }

    let dir_norm = (start.y[0] * start.y[0] + start.y[1] * start.y[1]).sqrt();
    let dir = [start.y[0] / dir_norm, start.y[1] / dir_norm];
    let mut chord_deviation = 0.0f64;
    let mut f_drift = 0.0f64;
    for row in &rows {
        let dx = [row.x[0] - start.x[0], row.x[1] - start.x[1]];
        let along = dx[0] * dir[0] + dx[1] * dir[1];
        let off = [dx[0] - along * dir[0], dx[1] - along * dir[1]];
        chord_deviation = chord_deviation.max((off[0] * off[0] + off[1] * off[1]).sqrt());
        f_drift = f_drift.max((row.f - f0).abs() / f0.abs());
    }

    Ok(TraceResult {
        rows,
        exited,
        chord_deviation,
        f_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn euclidean_geodesics_are_exactly_straight() {
        let metric = catalog::metric("euclidean").unwrap();
        let start = SupportElement::new([0.1, -0.2], [0.6, 0.8]);
        let cfg = GeodesicConfig {
            dt: 1e-2,
            steps: 100,
        };
        let trace = trace(&metric.field, &start, &cfg, |_| false).unwrap();
        assert!(!trace.exited);
        assert_eq!(trace.rows.len(), 101);
        assert!(trace.chord_deviation < 1e-12, "{}", trace.chord_deviation);
        assert!(trace.f_drift < 1e-12, "{}", trace.f_drift);
    }

    #[test]
    fn trace_stops_at_the_domain_boundary() {
        let metric = catalog::metric("klein").unwrap();
        let start = SupportElement::new([0.0, 0.0], [1.0, 0.0]);
        let cfg = GeodesicConfig {
            dt: 1e-2,
            steps: 5000,
        };
        let outside = |u: &SupportElement| u.x[0] * u.x[0] + u.x[1] * u.x[1] >= 0.96;
        let trace = trace(&metric.field, &start, &cfg, outside).unwrap();
        assert!(trace.exited);
        assert!(!trace.rows.is_empty());
        let last = trace.rows.last().unwrap();
        assert!(last.x[0] > 0.0 && last.x[0] < 1.0);
    }
}
