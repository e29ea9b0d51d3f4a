//! Truncated multivariate Taylor jets in the four phase-space coordinates
//! (x1, x2, y1, y2).
//!
//! A [`Jet`] stores the Taylor coefficients (derivative divided by the
//! factorial of the multi-index) of a scalar function around an expansion
//! point, complete up to a total degree `order`. Evaluating a function on
//! seeded jets therefore produces every mixed partial derivative up to that
//! degree in one pass, exactly (to roundoff), with no step-size tuning.
//!
//! Coefficients are kept Taylor-normalized so that multiplication is a plain
//! truncated convolution; factorials are applied only on extraction by
//! [`Jet::partial`]. Storage is a dense vector over all multi-indices of
//! total degree `<= order`, laid out degree-by-degree (graded
//! lexicographic), so the layout for a lower order is a prefix of the layout
//! for any higher order.
//!
//! Arithmetic comes in two flavors:
//!
//! * the operator impls (`+`, `-`, `*`, `/`, unary `-`) follow IEEE
//!   semantics and never fail; dividing by a jet whose constant term is zero
//!   yields non-finite coefficients exactly as `1.0 / 0.0` would,
//! * [`arith`] and [`transcend`] are the checked entry points that validate
//!   orders and domains and return typed errors.

use crate::error::JetError;
use crate::SupportElement;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Number of independent coordinates (x1, x2, y1, y2).
pub const NVARS: usize = 4;

/// Hard cap on the truncation order. Orders this deep are far beyond what
/// any formula in the crate needs; the cap keeps the coefficient tables
/// small and addressable.
pub const MAX_ORDER: usize = 12;

/// Jet variable index of x1 (first base coordinate).
pub const VAR_X1: usize = 0;
/// Jet variable index of x2 (second base coordinate).
pub const VAR_X2: usize = 1;
/// Jet variable index of y1 (first fiber coordinate).
pub const VAR_Y1: usize = 2;
/// Jet variable index of y2 (second fiber coordinate).
pub const VAR_Y2: usize = 3;

/// Exponents of one monomial in (x1, x2, y1, y2).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct MultiIndex(pub [u8; NVARS]);

impl MultiIndex {
    /// Total degree (sum of the exponents).
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of coefficients of a jet of the given order:
/// all multi-indices in 4 variables with total degree <= order.
pub fn coeff_count(order: usize) -> usize {
    binom(order + NVARS, NVARS)
}

/// Position of a multi-index in the graded layout.
///
/// Indices are sorted by total degree, then lexicographically by
/// (e1, e2, e3); e4 is implied by the degree. The formula counts all
/// indices strictly before `e` in that ordering.
fn pos(e: [u8; NVARS]) -> usize {
    let d = (e[0] + e[1] + e[2] + e[3]) as usize;
    let (e1, e2, e3) = (e[0] as usize, e[1] as usize, e[2] as usize);
    // Indices of total degree < d.
    let mut p = binom(d + 3, 4);
    // Within degree d, whole blocks with a smaller first exponent.
    for a in 0..e1 {
        p += binom(d - a + 2, 2);
    }
    // Within the e1 block, rows with a smaller second exponent.
    let rem = d - e1;
    for b in 0..e2 {
        p += rem - b + 1;
    }
    p + e3
}

struct Layout {
    /// All multi-indices of degree <= MAX_ORDER in layout order.
    indices: Vec<[u8; NVARS]>,
    /// Start of each degree block; entry `MAX_ORDER + 1` is the total count.
    degree_start: [usize; MAX_ORDER + 2],
}

fn layout() -> &'static Layout {
    static LAYOUT: OnceLock<Layout> = OnceLock::new();
    LAYOUT.get_or_init(|| {
        let mut indices = Vec::with_capacity(coeff_count(MAX_ORDER));
        let mut degree_start = [0usize; MAX_ORDER + 2];
        #[allow(clippy::needless_range_loop)]
        for d in 0..=MAX_ORDER {
            degree_start[d] = indices.len();
            for e1 in 0..=d {
                for e2 in 0..=(d - e1) {
                    for e3 in 0..=(d - e1 - e2) {
                        let e4 = d - e1 - e2 - e3;
                        indices.push([e1 as u8, e2 as u8, e3 as u8, e4 as u8]);
                    }
                }
            }
        }
        degree_start[MAX_ORDER + 1] = indices.len();
        Layout {
            indices,
            degree_start,
        }
    })
}

/// Truncated Taylor expansion of a scalar function of (x1, x2, y1, y2).
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    /// Taylor coefficients in graded layout, length `coeff_count(order)`.
    c: Vec<f64>,
}

impl Jet {
    fn zero(order: usize) -> Jet {
        Jet {
            order,
            c: vec![0.0; coeff_count(order)],
        }
    }

    /// Constant jet: value with no derivative content.
    pub fn constant(value: f64, order: usize) -> Result<Jet, JetError> {
        if order > MAX_ORDER {
            return Err(JetError::InvalidOrder {
                got: order,
                min: 0,
                max: MAX_ORDER,
            });
        }
        let mut j = Jet::zero(order);
        j.c[0] = value;
        Ok(j)
    }

    /// Coordinate jet: value plus a unit linear term in variable `var`.
    pub fn variable(var: usize, value: f64, order: usize) -> Result<Jet, JetError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(JetError::InvalidOrder {
                got: order,
                min: 1,
                max: MAX_ORDER,
            });
        }
        assert!(var < NVARS, "variable index out of range");
        let mut j = Jet::zero(order);
        j.c[0] = value;
        let mut e = [0u8; NVARS];
        e[var] = 1;
        j.c[pos(e)] = 1.0;
        Ok(j)
    }

    /// Truncation order of the jet.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Value of the underlying function at the expansion point.
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Mixed partial derivative for the given multi-index: the stored
    /// Taylor coefficient rescaled by the factorials of the exponents.
    pub fn partial(&self, idx: MultiIndex) -> Result<f64, JetError> {
        let degree = idx.degree();
        if degree > self.order {
            return Err(JetError::TruncationExceeded {
                degree,
                order: self.order,
            });
        }
        let mut scale = 1.0;
        for &e in idx.0.iter() {
            for k in 2..=(e as usize) {
                scale *= k as f64;
            }
        }
        Ok(self.c[pos(idx.0)] * scale)
    }

    /// Derivative with respect to one coordinate, as a jet of order one
    /// less. Panics if the jet is already order 0: the evaluation order was
    /// chosen too low for the derivative chain, which is a caller bug; the
    /// public entry points validate their order requirements up front.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(
            self.order > 0,
            "cannot differentiate an order-0 jet (evaluation order too low)"
        );
        assert!(var < NVARS, "variable index out of range");
        let order = self.order - 1;
        let lay = layout();
        let n = coeff_count(order);
        let mut c = vec![0.0; n];
        for (i, slot) in c.iter_mut().enumerate() {
            let mut e = lay.indices[i];
            let k = f64::from(e[var]) + 1.0;
            e[var] += 1;
            *slot = self.c[pos(e)] * k;
        }
        Jet { order, c }
    }

    /// The jet with its constant term replaced, other coefficients kept.
    fn with_value(&self, value: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] = value;
        j
    }

    /// Horner evaluation of a univariate series in (self - value(self)).
    ///
    /// `coeffs[k]` is the k-th Taylor coefficient of the outer function at
    /// the constant term; the composition is exact to the truncation order.
    fn compose_univariate(&self, coeffs: &[f64]) -> Jet {
        debug_assert_eq!(coeffs.len(), self.order + 1);
        let t = self.with_value(0.0);
        let mut acc = Jet::zero(self.order);
        acc.c[0] = coeffs[self.order];
        for k in (0..self.order).rev() {
            acc = &acc * &t;
            acc.c[0] += coeffs[k];
        }
        acc
    }

    /// IEEE reciprocal: series of 1/u around the constant term. A zero
    /// constant term produces non-finite coefficients rather than an error.
    fn recip_ieee(&self) -> Jet {
        let b0 = self.value();
        let mut coeffs = vec![0.0; self.order + 1];
        let mut term = 1.0 / b0;
        for slot in coeffs.iter_mut() {
            *slot = term;
            term = -term / b0;
        }
        self.compose_univariate(&coeffs)
    }

    /// Exponential of the jet.
    pub fn exp(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if !a0.is_finite() {
            return Err(JetError::SingularEvaluation {
                op: "exp",
                value: a0,
            });
        }
        let e = a0.exp();
        let mut coeffs = vec![0.0; self.order + 1];
        let mut fact = 1.0;
        for (k, slot) in coeffs.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *slot = e / fact;
        }
        Ok(self.compose_univariate(&coeffs))
    }

    /// Natural logarithm; requires a positive constant term.
    pub fn ln(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(JetError::SingularEvaluation {
                op: "ln",
                value: a0,
            });
        }
        let mut coeffs = vec![0.0; self.order + 1];
        coeffs[0] = a0.ln();
        let mut p = 1.0;
        #[allow(clippy::needless_range_loop)]
        for k in 1..=self.order {
            p *= a0;
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            coeffs[k] = sign / (k as f64 * p);
        }
        Ok(self.compose_univariate(&coeffs))
    }

    /// Square root; requires a positive constant term.
    pub fn sqrt(&self) -> Result<Jet, JetError> {
        self.pow_checked(0.5, "sqrt")
    }

    /// Real power with arbitrary exponent; requires a positive constant
    /// term (integer exponents are not special-cased).
    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        self.pow_checked(r, "powf")
    }

    fn pow_checked(&self, r: f64, op: &'static str) -> Result<Jet, JetError> {
        let a0 = self.value();
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(JetError::SingularEvaluation { op, value: a0 });
        }
        // coeffs[k] = binom(r, k) * a0^(r - k)
        let mut coeffs = vec![0.0; self.order + 1];
        let mut c = a0.powf(r);
        for (k, slot) in coeffs.iter_mut().enumerate() {
            if k > 0 {
                c *= (r - (k as f64 - 1.0)) / (k as f64) / a0;
            }
            *slot = c;
        }
        Ok(self.compose_univariate(&coeffs))
    }

    /// Sine of the jet.
    pub fn sin(&self) -> Result<Jet, JetError> {
        self.circular(true)
    }

    /// Cosine of the jet.
    pub fn cos(&self) -> Result<Jet, JetError> {
        self.circular(false)
    }

    fn circular(&self, sine: bool) -> Result<Jet, JetError> {
        let a0 = self.value();
        if !a0.is_finite() {
            return Err(JetError::SingularEvaluation {
                op: if sine { "sin" } else { "cos" },
                value: a0,
            });
        }
        let (s, c) = a0.sin_cos();
        let cycle = if sine { [s, c, -s, -c] } else { [c, -s, -c, s] };
        let mut coeffs = vec![0.0; self.order + 1];
        let mut fact = 1.0;
        for (k, slot) in coeffs.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *slot = cycle[k % 4] / fact;
        }
        Ok(self.compose_univariate(&coeffs))
    }

    /// Arctangent of the jet.
    pub fn atan(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if !a0.is_finite() {
            return Err(JetError::SingularEvaluation {
                op: "atan",
                value: a0,
            });
        }
        // Taylor coefficients satisfy the recurrence obtained by
        // differentiating (1 + u^2) f'(u) = 1 around u = a0.
        let w = 1.0 + a0 * a0;
        let mut coeffs = vec![0.0; self.order + 1];
        coeffs[0] = a0.atan();
        if self.order >= 1 {
            coeffs[1] = 1.0 / w;
        }
        for m in 1..self.order {
            let fm = coeffs[m];
            let fm1 = coeffs[m - 1];
            coeffs[m + 1] =
                -(2.0 * a0 * m as f64 * fm + (m as f64 - 1.0) * fm1) / (w * (m as f64 + 1.0));
        }
        Ok(self.compose_univariate(&coeffs))
    }
}

/// The four coordinate jets seeded at a support element.
#[derive(Clone, Debug)]
pub struct JetVars {
    /// Jets of the base coordinates x1, x2.
    pub x: [Jet; 2],
    /// Jets of the fiber coordinates y1, y2.
    pub y: [Jet; 2],
}

/// Seed the four coordinate jets at a support element.
///
/// Jet `k` has the k-th coordinate as its constant term, a unit linear
/// coefficient in its own variable, and zeros elsewhere.
pub fn seed(u: &SupportElement, order: usize) -> Result<JetVars, JetError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(JetError::InvalidOrder {
            got: order,
            min: 1,
            max: MAX_ORDER,
        });
    }
    Ok(JetVars {
        x: [
            Jet::variable(VAR_X1, u.x[0], order)?,
            Jet::variable(VAR_X2, u.x[1], order)?,
        ],
        y: [
            Jet::variable(VAR_Y1, u.y[0], order)?,
            Jet::variable(VAR_Y2, u.y[1], order)?,
        ],
    })
}

/// Binary operations available through the checked [`arith`] entry point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked jet arithmetic: validates that both operands share one
/// truncation order and that division is regular.
pub fn arith(a: &Jet, b: &Jet, op: ArithOp) -> Result<Jet, JetError> {
    if a.order != b.order {
        return Err(JetError::OrderMismatch {
            left: a.order,
            right: b.order,
        });
    }
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::Mul => Ok(a * b),
        ArithOp::Div => {
            let b0 = b.value();
            if b0 == 0.0 || !b0.is_finite() {
                return Err(JetError::SingularEvaluation {
                    op: "div",
                    value: b0,
                });
            }
            Ok(a / b)
        }
    }
}

/// Unary functions available through the checked [`transcend`] entry point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryFn {
    Exp,
    Ln,
    Sqrt,
    Pow(f64),
    Sin,
    Cos,
    Atan,
}

/// Checked transcendental composition via the univariate Taylor series of
/// the outer function around the jet's constant term.
pub fn transcend(a: &Jet, f: UnaryFn) -> Result<Jet, JetError> {
    match f {
        UnaryFn::Exp => a.exp(),
        UnaryFn::Ln => a.ln(),
        UnaryFn::Sqrt => a.sqrt(),
        UnaryFn::Pow(r) => a.powf(r),
        UnaryFn::Sin => a.sin(),
        UnaryFn::Cos => a.cos(),
        UnaryFn::Atan => a.atan(),
    }
}

fn add_impl(a: &Jet, b: &Jet) -> Jet {
    let order = a.order.min(b.order);
    let n = coeff_count(order);
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        c.push(a.c[i] + b.c[i]);
    }
    Jet { order, c }
}

fn sub_impl(a: &Jet, b: &Jet) -> Jet {
    let order = a.order.min(b.order);
    let n = coeff_count(order);
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        c.push(a.c[i] - b.c[i]);
    }
    Jet { order, c }
}

fn mul_impl(a: &Jet, b: &Jet) -> Jet {
    let order = a.order.min(b.order);
    let lay = layout();
    let mut out = Jet::zero(order);
    for da in 0..=order {
        for ia in lay.degree_start[da]..lay.degree_start[da + 1] {
            let ca = a.c[ia];
            if ca == 0.0 {
                continue;
            }
            let ea = lay.indices[ia];
            for db in 0..=(order - da) {
                for ib in lay.degree_start[db]..lay.degree_start[db + 1] {
                    let cb = b.c[ib];
                    if cb == 0.0 {
                        continue;
                    }
                    let eb = lay.indices[ib];
                    let es = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                    out.c[pos(es)] += ca * cb;
                }
            }
        }
    }
    out
}

fn div_impl(a: &Jet, b: &Jet) -> Jet {
    let order = a.order.min(b.order);
    let mut bt = b.clone();
    bt.order = order;
    bt.c.truncate(coeff_count(order));
    mul_impl(a, &bt.recip_ieee())
}

macro_rules! impl_jet_binop {
    ($trait:ident, $method:ident, $func:ident) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $func(self, rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $func(self, &rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $func(&self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $func(&self, &rhs)
            }
        }
    };
}

impl_jet_binop!(Add, add, add_impl);
impl_jet_binop!(Sub, sub, sub_impl);
impl_jet_binop!(Mul, mul, mul_impl);
impl_jet_binop!(Div, div, div_impl);

macro_rules! impl_jet_scalar {
    ($trait:ident, $method:ident, |$a:ident, $s:ident| $body:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let ($a, $s) = (self, rhs);
                $body
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let ($a, $s) = (&self, rhs);
                $body
            }
        }
    };
}

impl_jet_scalar!(Add, add, |a, s| {
    let mut j = a.clone();
    j.c[0] += s;
    j
});
impl_jet_scalar!(Sub, sub, |a, s| {
    let mut j = a.clone();
    j.c[0] -= s;
    j
});
impl_jet_scalar!(Mul, mul, |a, s| {
    let mut j = a.clone();
    for v in j.c.iter_mut() {
        *v *= s;
    }
    j
});
impl_jet_scalar!(Div, div, |a, s| {
    let mut j = a.clone();
    for v in j.c.iter_mut() {
        *v /= s;
    }
    j
});

macro_rules! impl_scalar_jet {
    ($trait:ident, $method:ident, |$s:ident, $a:ident| $body:expr) => {
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            // Delegating implementations: scalar over jet multiplies by the
            // reciprocal jet on purpose.
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn $method(self, rhs: &Jet) -> Jet {
                let ($s, $a) = (self, rhs);
                $body
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn $method(self, rhs: Jet) -> Jet {
                let ($s, $a) = (self, &rhs);
                $body
            }
        }
    };
}

impl_scalar_jet!(Add, add, |s, a| a + s);
impl_scalar_jet!(Sub, sub, |s, a| -a + s);
impl_scalar_jet!(Mul, mul, |s, a| a * s);
impl_scalar_jet!(Div, div, |s, a| a.recip_ieee() * s);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut j = self.clone();
        for v in j.c.iter_mut() {
            *v = -*v;
        }
        j
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}
