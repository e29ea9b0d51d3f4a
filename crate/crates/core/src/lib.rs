//! Computational two-dimensional conic pseudo-Finsler geometry.
//!
//! The crate evaluates the full geometric apparatus of a Finsler metric F
//! on a surface (metric tensor, Berwald frame, Cartan scalar, geodesic
//! spray, Barthel and Berwald connections) together with its anisotropic
//! conformal transform `F' = exp(phi) F`, where the factor `phi` may depend
//! on both position and direction. Every closed-form transformation rule
//! for these objects is implemented twice: once through the explicit
//! formula in frame components, once by direct evaluation of the
//! transformed metric through automatic differentiation. The comparison
//! machinery in [`conformal`] and [`report`] turns each rule, and each
//! flatness theorem built on it, into an executable point-wise check.
//!
//! Everything is evaluated at a single [`SupportElement`] at a time.
//! Derivatives come from truncated Taylor jets ([`jet`]), cross-checked
//! against finite differences ([`fd`]); there is no symbolic algebra and
//! no global discretization anywhere.
//!
//! The usual entry points are the named metrics and factors in
//! [`catalog`], [`geometry::SurfaceJets`] for one metric in isolation, and
//! [`conformal::ConformalAnalysis`] for a metric paired with a factor.

pub mod catalog;
pub mod conformal;
pub mod error;
pub mod fd;
pub mod geodesic;
pub mod geometry;
pub mod jet;
pub mod report;

use serde::{Deserialize, Serialize};

pub use error::{FdError, GeometryError, JetError};
pub use jet::{Jet, JetVars, MultiIndex};

/// A point of the slit tangent bundle: a base point `x` with a nonzero
/// direction `y` attached. All tensors in the crate are evaluated at one
/// of these.
///
/// The direction is a genuine vector, not a ray: objects that are
/// 0-homogeneous in `y` will not change along the ray, but nothing here
/// normalizes `y` for you.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportElement {
    /// Base coordinates (x1, x2).
    pub x: [f64; 2],
    /// Fiber coordinates (y1, y2); must be nonzero and inside the conic
    /// domain of whatever metric is being evaluated.
    pub y: [f64; 2],
}

impl SupportElement {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> SupportElement {
        SupportElement { x, y }
    }
}

/// A scalar function on the slit tangent bundle, evaluated through jets.
///
/// Implementors receive the four seeded coordinate jets and build their
/// value with jet arithmetic; the caller then reads off whichever mixed
/// partials it needs. Any closure of the right shape is a `Field`, which
/// is how the metric catalog defines its entries.
pub trait Field {
    fn eval(&self, vars: &JetVars) -> Result<Jet, GeometryError>;
}

impl<F> Field for F
where
    F: Fn(&JetVars) -> Result<Jet, GeometryError>,
{
    fn eval(&self, vars: &JetVars) -> Result<Jet, GeometryError> {
        self(vars)
    }
}

/// Plain value of a field at a support element, or `None` where the field
/// is undefined or non-finite there. The shape matches what the
/// finite-difference oracle in [`fd`] expects to sample.
pub fn field_value<F: Field + ?Sized>(f: &F, u: &SupportElement) -> Option<f64> {
    let vars = jet::seed(u, 1).ok()?;
    let j = f.eval(&vars).ok()?;
    let v = j.value();
    v.is_finite().then_some(v)
}
