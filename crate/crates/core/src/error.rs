//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by truncated-Taylor jet construction and arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    /// A jet was requested with a truncation order outside the supported range.
    #[error("jet order {got} is invalid: supported range is {min}..={max}")]
    InvalidOrder { got: usize, min: usize, max: usize },

    /// A binary operation was given jets of different truncation orders.
    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    /// A derivative of total degree beyond the truncation order was requested.
    #[error("partial of total degree {degree} exceeds truncation order {order}")]
    TruncationExceeded { degree: usize, order: usize },

    /// An operation hit a point where it is not defined (division by a jet
    /// with zero constant term, `ln`/`sqrt` of a non-positive constant term).
    #[error("singular evaluation: {op} at constant term {value}")]
    SingularEvaluation { op: &'static str, value: f64 },
}

/// Errors raised while evaluating geometric objects of a metric or a
/// conformal transformation.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Jet(#[from] JetError),

    /// The support element is outside the conic domain of the metric, or the
    /// metric value is not a positive finite number there.
    #[error("support element outside the conic domain: {reason}")]
    Domain { reason: String },

    /// det g vanishes at the support element, so the metric tensor cannot be
    /// inverted and no frame exists.
    #[error("metric tensor degenerate at the support element: det g = {det:e}")]
    DegenerateMetric { det: f64 },

    /// The transformed metric fails the non-degeneracy condition
    /// `sigma + eps - phi_2^2 != 0`, so rho and everything downstream of it
    /// is undefined.
    #[error("degenerate conformal transform: sigma + eps - phi_2^2 = {value:e}")]
    DegenerateTransform { value: f64 },

    /// `eps * rho <= 0`: the transformed metric has the opposite signature,
    /// and the square roots in the transformed-frame formulas are undefined.
    #[error("signature flip under the conformal transform: eps * rho = {value:e}")]
    SignatureFlip { value: f64 },

    /// The conformal factor is not homogeneous of degree zero in y.
    #[error("conformal factor is not h(0): y^i d_i phi = {defect:e}")]
    NotHomogeneous { defect: f64 },

    /// A factor declared x-only or y-only failed its independence check.
    #[error("factor fails its declared {declared} independence check: defect {defect:e}")]
    DeclarationMismatch { declared: &'static str, defect: f64 },
}

/// Errors raised by the finite-difference oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    /// Central stencils above total derivative order 3 amplify noise beyond
    /// usefulness and are rejected.
    #[error("finite differences support total derivative order <= 3, got {degree}")]
    OrderTooHigh { degree: usize },

    /// The function was not evaluable at a shifted stencil point.
    #[error("stencil point left the function domain at offset {offset:?}")]
    StencilDomain { offset: [f64; 4] },

    /// The config is unusable (non-positive step or zero levels).
    #[error("invalid finite-difference config: {reason}")]
    BadConfig { reason: &'static str },
}
