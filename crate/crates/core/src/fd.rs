//! Central finite differences with Richardson extrapolation.
//!
//! This module is the crate's independent derivative oracle. It never sees
//! jet coefficients: it numerically differentiates a plain value function
//! `SupportElement -> Option<f64>`, so agreement with jet output is evidence
//! that the jet propagation itself is sound, not just self-consistent.
//!
//! Mixed partials are tensor products of one-dimensional central stencils,
//! all of second-order accuracy, refined by a small Richardson table with
//! step ratio 2. Total degree is capped at 3; beyond that, cancellation in
//! double precision erodes the estimate faster than extrapolation repairs
//! it, and nothing in the crate needs deeper cross-checks.

use crate::error::FdError;
use crate::jet::{MultiIndex, NVARS};
use crate::SupportElement;

/// Highest total derivative degree the oracle will estimate.
pub const MAX_FD_DEGREE: usize = 3;

/// Tuning knobs for the finite-difference oracle.
#[derive(Clone, Copy, Debug)]
pub struct FdConfig {
    /// Base step, scaled per variable by `max(1, |coordinate|)`.
    pub base_step: f64,
    /// Number of step sizes in the Richardson table (1 disables
    /// extrapolation).
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> FdConfig {
        FdConfig {
            base_step: 1e-3,
            richardson_levels: 2,
        }
    }
}

/// One-dimensional central stencil for the k-th derivative: grid offsets
/// and weights, to be divided by h^k.
fn stencil(k: u8) -> &'static [(i32, f64)] {
    match k {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => unreachable!("stencil degree checked by caller"),
    }
}

/// Estimate a mixed partial derivative of `f` at `u` by finite differences.
///
/// `f` returns `None` where it is undefined; a stencil point landing
/// outside the domain is reported as [`FdError::StencilDomain`] with the
/// offending coordinate offset.
pub fn fd_partial<F>(
    f: F,
    u: &SupportElement,
    idx: MultiIndex,
    cfg: &FdConfig,
) -> Result<f64, FdError>
where
    F: Fn(&SupportElement) -> Option<f64>,
{
    let degree = idx.degree();
    if degree > MAX_FD_DEGREE {
        return Err(FdError::OrderTooHigh { degree });
    }
    if !(cfg.base_step.is_finite() && cfg.base_step > 0.0) {
        return Err(FdError::BadConfig {
            reason: "base step must be positive and finite",
        });
    }
    if cfg.richardson_levels == 0 || cfg.richardson_levels > 6 {
        return Err(FdError::BadConfig {
            reason: "richardson levels must be between 1 and 6",
        });
    }

    let coords = [u.x[0], u.x[1], u.y[0], u.y[1]];
    let mut steps = [0.0f64; NVARS];
    for v in 0..NVARS {
        steps[v] = cfg.base_step * coords[v].abs().max(1.0);
    }

    // Neville table over step halvings; central stencils have even error
    // expansions, so each column cancels another factor of h^2.
    let levels = cfg.richardson_levels;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for i in 0..levels {
        let shrink = 0.5f64.powi(i as i32);
        let raw = raw_estimate(&f, &coords, idx, &steps, shrink)?;
        let mut row = vec![raw];
        for j in 1..=i {
            let p = 4f64.powi(j as i32);
            let v = (p * row[j - 1] - table[i - 1][j - 1]) / (p - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    Ok(table[levels - 1][levels - 1])
}

fn raw_estimate<F>(
    f: &F,
    coords: &[f64; NVARS],
    idx: MultiIndex,
    steps: &[f64; NVARS],
    shrink: f64,
) -> Result<f64, FdError>
where
    F: Fn(&SupportElement) -> Option<f64>,
{
    let stencils: [&[(i32, f64)]; NVARS] = [
        stencil(idx.0[0]),
        stencil(idx.0[1]),
        stencil(idx.0[2]),
        stencil(idx.0[3]),
    ];
    let mut scale = 1.0;
    for (step, exponent) in steps.iter().zip(idx.0) {
        scale *= (step * shrink).powi(i32::from(exponent));
    }

    let mut acc = 0.0;
    let mut cursor = [0usize; NVARS];
    loop {
        let mut weight = 1.0;
        let mut offset = [0.0f64; NVARS];
        for v in 0..NVARS {
            let (grid, w) = stencils[v][cursor[v]];
            weight *= w;
            offset[v] = f64::from(grid) * steps[v] * shrink;
        }
        let probe = SupportElement {
            x: [coords[0] + offset[0], coords[1] + offset[1]],
            y: [coords[2] + offset[2], coords[3] + offset[3]],
        };
        match f(&probe) {
            Some(val) => acc += weight * val,
            None => return Err(FdError::StencilDomain { offset }),
        }

        // Advance the mixed-radix cursor over the stencil product.
        let mut v = 0;
        loop {
            cursor[v] += 1;
            if cursor[v] < stencils[v].len() {
                break;
            }
            cursor[v] = 0;
            v += 1;
            if v == NVARS {
                return Ok(acc / scale);
            }
        }
    }
}
