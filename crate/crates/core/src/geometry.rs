//! Pointwise geometry of a single conic pseudo-Finsler metric on a surface.
//!
//! [`SurfaceJets`] evaluates everything the rest of the crate needs at one
//! support element: the fundamental tensor and its inverse, the modified
//! Berwald frame, the Cartan main scalar, the geodesic spray with its first
//! and second fiber derivatives, and the two flatness defects. All
//! quantities are kept as jets so that calling code can keep
//! differentiating them (the conformal layer leans on this heavily); plain
//! numbers are available through the snapshot structs.
//!
//! Conventions. Tensor indices run over {0, 1} for the two surface
//! coordinates. The frame covector m_i is fixed by the orientation
//! convention (m_0, m_1) = (-h l^1, h l^0) where l^i is the normalized
//! support direction and h is the metric area density; the frame vector m^i
//! is obtained by raising with the inverse fundamental tensor. Raising with
//! g, rather than with any closed-form shortcut, is what keeps the frame
//! identities (duality, completeness, the vertical derivative rules) valid
//! for both metric signatures.

use crate::error::{GeometryError, JetError};
use crate::jet::{seed, Jet, MAX_ORDER, VAR_X1, VAR_X2, VAR_Y1, VAR_Y2};
use crate::report::{rel_dev, CheckReport};
use crate::{Field, JetVars, SupportElement};
use serde::Serialize;

/// Jet variable indices of the base coordinates, by tensor index.
pub(crate) const XV: [usize; 2] = [VAR_X1, VAR_X2];
/// Jet variable indices of the fiber coordinates, by tensor index.
pub(crate) const YV: [usize; 2] = [VAR_Y1, VAR_Y2];

/// Lowest jet order that lets every stored quantity be evaluated
/// (the second fiber derivative of the spray costs four orders on top of
/// the metric itself).
pub const MIN_GEOMETRY_ORDER: usize = 4;

/// Relative floor under which the fundamental tensor counts as degenerate.
const DEGENERACY_FLOOR: f64 = 1e-12;

/// Relative homogeneity defect above which a warning is recorded.
const EULER_WARN: f64 = 1e-8;

/// Metric data at a support element, as plain numbers.
#[derive(Clone, Debug, Serialize)]
pub struct MetricAtPoint {
    /// Metric value F.
    pub f: f64,
    /// Fundamental tensor g_ij.
    pub g: [[f64; 2]; 2],
    /// Determinant of g_ij.
    pub det_g: f64,
    /// Inverse fundamental tensor g^ij.
    pub g_inv: [[f64; 2]; 2],
    /// Diagnostics that did not prevent evaluation (currently only a
    /// positive-homogeneity defect of the supplied metric function).
    pub warnings: Vec<String>,
}

/// The modified Berwald frame at a support element.
///
/// (l_i, m_i) is an orthonormal coframe for the fundamental tensor, with
/// (l^i, m^i) its dual; eps is the signature of g and h the area density.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BerwaldFrame {
    /// l_i, the fiber gradient of F.
    pub ell_lo: [f64; 2],
    /// l^i = y^i / F.
    pub ell_hi: [f64; 2],
    /// m_i, the covector completing the coframe.
    pub m_lo: [f64; 2],
    /// m^i = g^ij m_j.
    pub m_hi: [f64; 2],
    /// Signature of the fundamental tensor: +1 or -1.
    pub eps: f64,
    /// Area density h = sqrt(eps det g).
    pub h: f64,
}

/// Spray and connection data at a support element, as plain numbers.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SprayAtPoint {
    /// Geodesic spray coefficients G^i.
    pub spray: [f64; 2],
    /// Nonlinear (Barthel) connection coefficients G^i_j.
    pub barthel: [[f64; 2]; 2],
    /// Berwald connection coefficients G^i_jk.
    pub berwald: [[[f64; 2]; 2]; 2],
    /// Hamel flatness defect of the metric.
    pub hamel: f64,
}

/// Frame components of the derivatives of a scalar: vertical (fiber)
/// components alongside horizontal ones taken through the Barthel
/// connection.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalarDecomposition {
    pub vert_1: f64,
    pub vert_2: f64,
    pub horiz_1: f64,
    pub horiz_2: f64,
}

/// Every geometric object of one metric at one support element, held as
/// jets of the orders noted on each field (relative to the seed order n).
#[derive(Debug)]
pub struct SurfaceJets {
    /// The evaluation site.
    pub point: SupportElement,
    /// Seed order n of the coordinate jets.
    pub order: usize,
    /// The seeded coordinate jets.
    pub vars: JetVars,
    /// F (order n).
    pub f: Jet,
    /// F squared (order n).
    pub f2: Jet,
    /// Fundamental tensor g_ij (order n-2).
    pub g: [[Jet; 2]; 2],
    /// det g (order n-2).
    pub det_g: Jet,
    /// Signature of g: +1 or -1.
    pub eps: f64,
    /// Area density h = sqrt(eps det g) (order n-2).
    pub h: Jet,
    /// Inverse fundamental tensor (order n-2).
    pub g_inv: [[Jet; 2]; 2],
    /// l_i (order n-1).
    pub ell_lo: [Jet; 2],
    /// l^i (order n).
    pub ell_hi: [Jet; 2],
    /// m_i (order n-2).
    pub m_lo: [Jet; 2],
    /// m^i (order n-2).
    pub m_hi: [Jet; 2],
    /// Cartan tensor C_ijk (order n-3).
    pub cartan: [[[Jet; 2]; 2]; 2],
    /// Cartan main scalar (order n-3).
    pub main_scalar: Jet,
    /// Geodesic spray G^i (order n-2).
    pub spray: [Jet; 2],
    /// Barthel connection G^i_j (order n-3).
    pub barthel: [[Jet; 2]; 2],
    /// Berwald connection G^i_jk (order n-4).
    pub berwald: [[[Jet; 2]; 2]; 2],
    /// Hamel defect (order n-2); zero exactly when geodesics are straight.
    pub hamel: Jet,
    /// Dual-flatness defect vector (order n-2).
    pub dual: [Jet; 2],
    /// Non-fatal diagnostics collected during construction.
    pub warnings: Vec<String>,
}

impl SurfaceJets {
    /// Evaluate the full geometry of `metric` at `u` with seed order
    /// `order` (at least [`MIN_GEOMETRY_ORDER`]).
    pub fn new<M: Field + ?Sized>(
        metric: &M,
        u: &SupportElement,
        order: usize,
    ) -> Result<SurfaceJets, GeometryError> {
        if !(MIN_GEOMETRY_ORDER..=MAX_ORDER).contains(&order) {
            return Err(GeometryError::Jet(JetError::InvalidOrder {
                got: order,
                min: MIN_GEOMETRY_ORDER,
                max: MAX_ORDER,
            }));
        }
        let vars = seed(u, order)?;
        let f = metric.eval(&vars)?;
        let fv = f.value();
        if !fv.is_finite() || fv <= 0.0 {
            return Err(GeometryError::Domain {
                reason: format!(
                    "metric value {fv:e} at x=({}, {}), y=({}, {}) is not a positive finite number",
                    u.x[0], u.x[1], u.y[0], u.y[1]
                ),
            });
        }

        let mut warnings = Vec::new();
        let euler = &vars.y[0] * f.diff(YV[0]) + &vars.y[1] * f.diff(YV[1]) - &f;
        let euler_defect = euler.value().abs() / fv;
        if euler_defect > EULER_WARN {
            warnings.push(format!(
                "metric is not positively homogeneous in y (relative defect {euler_defect:.3e})"
            ));
        }

        let f2 = &f * &f;

        let dy = [f2.diff(YV[0]), f2.diff(YV[1])];
        let g = [
            [dy[0].diff(YV[0]) * 0.5, dy[0].diff(YV[1]) * 0.5],
            [dy[1].diff(YV[0]) * 0.5, dy[1].diff(YV[1]) * 0.5],
        ];

        let det_g = &g[0][0] * &g[1][1] - &g[0][1] * &g[1][0];
        let det_v = det_g.value();
        let g_scale: f64 = g
            .iter()
            .flatten()
            .map(|e| e.value() * e.value())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        if !det_v.is_finite() || det_v.abs() <= DEGENERACY_FLOOR * g_scale {
            return Err(GeometryError::DegenerateMetric { det: det_v });
        }
        let eps = if det_v > 0.0 { 1.0 } else { -1.0 };
        let h = (eps * &det_g).sqrt()?;

        let g_inv = [
            [&g[1][1] / &det_g, -&g[0][1] / &det_g],
            [-&g[1][0] / &det_g, &g[0][0] / &det_g],
        ];

        let ell_lo = [f.diff(YV[0]), f.diff(YV[1])];
        let ell_hi = [&vars.y[0] / &f, &vars.y[1] / &f];
        let m_lo = [-(&h * &ell_hi[1]), &h * &ell_hi[0]];
        let m_hi = [
            &g_inv[0][0] * &m_lo[0] + &g_inv[0][1] * &m_lo[1],
            &g_inv[1][0] * &m_lo[0] + &g_inv[1][1] * &m_lo[1],
        ];

        let cartan: [[[Jet; 2]; 2]; 2] = std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| g[i][j].diff(YV[k]) * 0.5))
        });
        let mut contraction = Jet::constant(0.0, order - 3)?;
        for (i, plane) in cartan.iter().enumerate() {
            for (j, row) in plane.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    contraction = contraction + c * &m_hi[i] * &m_hi[j] * &m_hi[k];
                }
            }
        }
        let main_scalar = eps * &f * contraction;

        let dx = [f2.diff(XV[0]), f2.diff(XV[1])];
        let mut spray_rhs: [Jet; 2] = [-dx[0].clone(), -dx[1].clone()];
        for (j, rhs) in spray_rhs.iter_mut().enumerate() {
            for (yk, dxk) in vars.y.iter().zip(&dx) {
                *rhs = &*rhs + yk * dxk.diff(YV[j]);
            }
        }
        let spray = [
            (&g_inv[0][0] * &spray_rhs[0] + &g_inv[0][1] * &spray_rhs[1]) * 0.25,
            (&g_inv[1][0] * &spray_rhs[0] + &g_inv[1][1] * &spray_rhs[1]) * 0.25,
        ];

        let barthel = [
            [spray[0].diff(YV[0]), spray[0].diff(YV[1])],
            [spray[1].diff(YV[0]), spray[1].diff(YV[1])],
        ];
        let berwald: [[[Jet; 2]; 2]; 2] = std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| barthel[i][j].diff(YV[k])))
        });

        let hamel = f.diff(XV[0]).diff(YV[1]) - f.diff(XV[1]).diff(YV[0]);

        let dual = [
            &vars.y[0] * dx[0].diff(YV[0]) + &vars.y[1] * dx[1].diff(YV[0]) - 2.0 * &dx[0],
            &vars.y[0] * dx[0].diff(YV[1]) + &vars.y[1] * dx[1].diff(YV[1]) - 2.0 * &dx[1],
        ];

        Ok(SurfaceJets {
            point: *u,
            order,
            vars,
            f,
            f2,
            g,
            det_g,
            eps,
            h,
            g_inv,
            ell_lo,
            ell_hi,
            m_lo,
            m_hi,
            cartan,
            main_scalar,
            spray,
            barthel,
            berwald,
            hamel,
            dual,
            warnings,
        })
    }

    /// Metric snapshot at the evaluation point.
    pub fn metric_at(&self) -> MetricAtPoint {
        MetricAtPoint {
            f: self.f.value(),
            g: value2(&self.g),
            det_g: self.det_g.value(),
            g_inv: value2(&self.g_inv),
            warnings: self.warnings.clone(),
        }
    }

    /// Frame snapshot at the evaluation point.
    pub fn frame_at(&self) -> BerwaldFrame {
        BerwaldFrame {
            ell_lo: value1(&self.ell_lo),
            ell_hi: value1(&self.ell_hi),
            m_lo: value1(&self.m_lo),
            m_hi: value1(&self.m_hi),
            eps: self.eps,
            h: self.h.value(),
        }
    }

    /// Spray and connection snapshot at the evaluation point.
    pub fn spray_at(&self) -> SprayAtPoint {
        SprayAtPoint {
            spray: value1(&self.spray),
            barthel: value2(&self.barthel),
            berwald: std::array::from_fn(|i| value2(&self.berwald[i])),
            hamel: self.hamel.value(),
        }
    }

    /// First vertical frame component of a scalar: F times the fiber
    /// gradient contracted with l^i. For an r-homogeneous scalar this
    /// equals r times the scalar.
    pub fn vert1(&self, s: &Jet) -> Jet {
        &self.f * (s.diff(YV[0]) * &self.ell_hi[0] + s.diff(YV[1]) * &self.ell_hi[1])
    }

    /// Second vertical frame component of a scalar: eps F times the fiber
    /// gradient contracted with m^i.
    pub fn vert2(&self, s: &Jet) -> Jet {
        self.eps * &self.f * (s.diff(YV[0]) * &self.m_hi[0] + s.diff(YV[1]) * &self.m_hi[1])
    }

    /// Horizontal derivative of a scalar through the Barthel connection:
    /// the base derivative corrected by the connection pullback.
    pub fn delta(&self, s: &Jet) -> [Jet; 2] {
        std::array::from_fn(|i| {
            s.diff(XV[i])
                - &self.barthel[0][i] * s.diff(YV[0])
                - &self.barthel[1][i] * s.diff(YV[1])
        })
    }

    /// First horizontal frame component: delta contracted with l^i.
    pub fn horiz1(&self, s: &Jet) -> Jet {
        let d = self.delta(s);
        &d[0] * &self.ell_hi[0] + &d[1] * &self.ell_hi[1]
    }

    /// Second horizontal frame component: eps times delta contracted
    /// with m^i.
    pub fn horiz2(&self, s: &Jet) -> Jet {
        let d = self.delta(s);
        self.eps * (&d[0] * &self.m_hi[0] + &d[1] * &self.m_hi[1])
    }

    /// All four frame components of the derivatives of a scalar, as plain
    /// numbers.
    pub fn decompose(&self, s: &Jet) -> ScalarDecomposition {
        ScalarDecomposition {
            vert_1: self.vert1(s).value(),
            vert_2: self.vert2(s).value(),
            horiz_1: self.horiz1(s).value(),
            horiz_2: self.horiz2(s).value(),
        }
    }

    /// Projective flatness of the metric at this point, via three
    /// residuals: the Hamel defect, the frame-normal spray component, and
    /// the deviation of the spray from its projectively flat closed form.
    pub fn projective_flatness_report(&self, tol: f64) -> CheckReport {
        let mut rep = CheckReport::new("projective_flatness", self.point);
        let fv = self.f.value();
        let f2v = fv * fv;
        rep.residual("hamel", self.hamel.value().abs(), tol);
        let g_m: f64 = (0..2)
            .map(|i| self.spray[i].value() * self.m_lo[i].value())
            .sum();
        rep.residual("spray_m", g_m.abs() / f2v, tol);
        let radial: f64 = (0..2)
            .map(|r| self.point.y[r] * self.f.diff(XV[r]).value())
            .sum::<f64>()
            / (2.0 * fv);
        let recon = (0..2)
            .map(|i| (self.spray[i].value() - radial * self.point.y[i]).abs())
            .fold(0.0f64, f64::max);
        rep.residual("reconstruction", recon / f2v, tol);
        rep.finalize()
    }

    /// Dual flatness of the metric at this point: the defect of the
    /// first-order PDE characterizing dually flat metrics, relative to the
    /// squared metric scale.
    pub fn dual_flatness_report(&self, tol: f64) -> CheckReport {
        let mut rep = CheckReport::new("dual_flatness", self.point);
        let scale = (self.f.value() * self.f.value()).max(1.0);
        let defect = self
            .dual
            .iter()
            .map(|d| d.value().abs())
            .fold(0.0f64, f64::max);
        rep.residual("dual_defect", defect / scale, tol);
        rep.finalize()
    }
}

fn value1(a: &[Jet; 2]) -> [f64; 2] {
    [a[0].value(), a[1].value()]
}

fn value2(a: &[[Jet; 2]; 2]) -> [[f64; 2]; 2] {
    [value1(&a[0]), value1(&a[1])]
}

/// Push the frame-calculus identities of one geometry into an existing
/// report, prefixing residual names so base and transformed geometries can
/// share a report: duality and normalization of the frame, completeness,
/// the frame decomposition of the fundamental tensor, the vertical
/// derivatives of all four frame fields, the radial split of F, and the
/// horizontal constancy of F.
pub fn push_frame_identities(geo: &SurfaceJets, rep: &mut CheckReport, prefix: &str, tol: f64) {
    let e = geo.eps;
    let fv = geo.f.value();
    let i_v = geo.main_scalar.value();
    let ell_lo = value1(&geo.ell_lo);
    let ell_hi = value1(&geo.ell_hi);
    let m_lo = value1(&geo.m_lo);
    let m_hi = value1(&geo.m_hi);

    let dot = |a: &[f64; 2], b: &[f64; 2]| a[0] * b[0] + a[1] * b[1];
    rep.residual(
        &format!("{prefix}frame_orthogonality"),
        dot(&ell_hi, &m_lo).abs().max(dot(&ell_lo, &m_hi).abs()),
        tol,
    );
    rep.residual(
        &format!("{prefix}frame_normalization"),
        (dot(&m_lo, &m_hi) - e)
            .abs()
            .max((dot(&ell_lo, &ell_hi) - 1.0).abs()),
        tol,
    );

    // Tensor identities are judged relative to the entries themselves
    // (floored at one): frame covectors scale like the metric, so absolute
    // residuals would punish large conformal scales for honest roundoff.
    let mut completeness = 0.0f64;
    let mut decomposition = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            completeness =
                completeness.max((ell_lo[i] * ell_hi[j] + e * m_lo[i] * m_hi[j] - delta).abs());
            decomposition = decomposition.max(rel_dev(
                geo.g[i][j].value(),
                ell_lo[i] * ell_lo[j] + e * m_lo[i] * m_lo[j],
                1.0,
            ));
        }
    }
    rep.residual(&format!("{prefix}frame_completeness"), completeness, tol);
    rep.residual(
        &format!("{prefix}metric_frame_decomposition"),
        decomposition,
        tol,
    );

    let mut d_ell_lo = 0.0f64;
    let mut d_ell_hi = 0.0f64;
    let mut d_m_lo = 0.0f64;
    let mut d_m_hi = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            d_ell_lo = d_ell_lo.max(rel_dev(
                fv * geo.ell_lo[i].diff(YV[j]).value(),
                e * m_lo[i] * m_lo[j],
                1.0,
            ));
            d_ell_hi = d_ell_hi.max(rel_dev(
                fv * geo.ell_hi[i].diff(YV[j]).value(),
                e * m_hi[i] * m_lo[j],
                1.0,
            ));
            d_m_lo = d_m_lo.max(rel_dev(
                fv * geo.m_lo[i].diff(YV[j]).value(),
                -(ell_lo[i] - e * i_v * m_lo[i]) * m_lo[j],
                1.0,
            ));
            d_m_hi = d_m_hi.max(rel_dev(
                fv * geo.m_hi[i].diff(YV[j]).value(),
                -(ell_hi[i] + e * i_v * m_hi[i]) * m_lo[j],
                1.0,
            ));
        }
    }
    rep.residual(&format!("{prefix}vertical_ell_lo"), d_ell_lo, tol);
    rep.residual(&format!("{prefix}vertical_ell_hi"), d_ell_hi, tol);
    rep.residual(&format!("{prefix}vertical_m_lo"), d_m_lo, tol);
    rep.residual(&format!("{prefix}vertical_m_hi"), d_m_hi, tol);

    rep.residual(
        &format!("{prefix}radial_component"),
        (geo.vert1(&geo.f).value() - fv).abs() / fv.abs().max(1.0),
        tol,
    );
    let delta_f = geo.delta(&geo.f);
    rep.residual(
        &format!("{prefix}horizontal_metric_constancy"),
        delta_f[0].value().abs().max(delta_f[1].value().abs()) / fv.abs().max(1.0),
        tol,
    );
}

/// Standalone frame-calculus check for one geometry.
pub fn frame_identities_report(geo: &SurfaceJets, tol: f64) -> CheckReport {
    let mut rep = CheckReport::new("frame_identities", geo.point);
    push_frame_identities(geo, &mut rep, "", tol);
    rep.finalize()
}
