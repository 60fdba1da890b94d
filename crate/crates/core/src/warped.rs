//! Doubly warped products `g = f^2 g_B + b^2 g_F` with `b` on `B` and `f` on `F`.
//!
//! The product chart lists the coordinates of `B` first, then those of `F`.
//! Closed-form connection and curvature expressions are evaluated from jets of
//! `b^2` and `f^2` and compared against Christoffel data of the assembled metric.
//!
//! Gradients inside the closed forms can be read in two ways, selected by
//! [`GradientReading`]: with respect to the factor metrics (`grad b^2` computed in
//! `g_B`) or with respect to the warped metric `g`, which turns `grad b^2` into
//! `(f^-2 grad_B b^2, 0)` and `grad f^2` into `(0, b^-2 grad_F f^2)`. Only the
//! second reading agrees with the Levi-Civita connection of `g` once both warping
//! functions vary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarFieldExpr;
use crate::geometry::{LocalGeometry, MetricPatch};
use crate::jet::Jet;

/// How a warping function is supplied.
#[derive(Debug, Clone)]
pub enum Warping {
    /// The function itself, e.g. `b`.
    Value(ScalarFieldExpr),
    /// Its square, e.g. `b^2`.
    Squared(ScalarFieldExpr),
}

impl Warping {
    fn square(&self) -> ScalarFieldExpr {
        match self {
            Warping::Value(e) => e.squared(),
            Warping::Squared(e) => e.clone(),
        }
    }

    fn expr(&self) -> &ScalarFieldExpr {
        match self {
            Warping::Value(e) | Warping::Squared(e) => e,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DwpSpace {
    base: MetricPatch,
    fiber: MetricPatch,
    b: Warping,
    f: Warping,
    b2: ScalarFieldExpr,
    f2: ScalarFieldExpr,
    product: MetricPatch,
    unwarped: MetricPatch,
}

impl DwpSpace {
    pub fn new(base: MetricPatch, fiber: MetricPatch, b: Warping, f: Warping) -> Result<DwpSpace> {
        if b.expr().vars() != base.vars() {
            return Err(Error::config("b", "must be an expression over the base coordinates"));
        }
        if f.expr().vars() != fiber.vars() {
            return Err(Error::config("f", "must be an expression over the fiber coordinates"));
        }
        if let Some(v) = base.vars().iter().find(|v| fiber.vars().contains(v)) {
            return Err(Error::config("F", format!("coordinate `{v}` is already used by B")));
        }
        let vars: Vec<String> = base.vars().iter().chain(fiber.vars()).cloned().collect();
        let chart: Vec<(f64, f64)> = base.chart().iter().chain(fiber.chart()).copied().collect();
        let (m, n) = (base.dim(), fiber.dim());
        let b2 = b.square();
        let f2 = f.square();
        let b2_full = b2.embed(&vars, 0);
        let f2_full = f2.embed(&vars, m);
        let zero = ScalarFieldExpr::constant(0.0, &vars);
        let block = |scale: Option<(&ScalarFieldExpr, &ScalarFieldExpr)>| {
            let mut g = vec![vec![zero.clone(); m + n]; m + n];
            for i in 0..m {
                for j in 0..m {
                    let e = base.component(i, j).embed(&vars, 0);
                    g[i][j] = match scale {
                        Some((fw, _)) => fw.mul(&e),
                        None => e,
                    };
                }
            }
            for r in 0..n {
                for s in 0..n {
                    let e = fiber.component(r, s).embed(&vars, m);
                    g[m + r][m + s] = match scale {
                        Some((_, bw)) => bw.mul(&e),
                        None => e,
                    };
                }
            }
            g
        };
        let product = MetricPatch::new(
            format!("{} x {} (doubly warped)", base.name(), fiber.name()),
            vars.clone(),
            chart.clone(),
            block(Some((&f2_full, &b2_full))),
        )?;
        let plain = block(None);
        let unwarped = MetricPatch::new(format!("{} x {}", base.name(), fiber.name()), vars, chart, plain)?;
        Ok(DwpSpace {
            base,
            fiber,
            b,
            f,
            b2,
            f2,
            product,
            unwarped,
        })
    }

    pub fn base(&self) -> &MetricPatch {
        &self.base
    }

    pub fn fiber(&self) -> &MetricPatch {
        &self.fiber
    }

    pub fn m(&self) -> usize {
        self.base.dim()
    }

    pub fn n(&self) -> usize {
        self.fiber.dim()
    }

    pub fn b_warping(&self) -> &Warping {
        &self.b
    }

    pub fn f_warping(&self) -> &Warping {
        &self.f
    }

    /// `b^2` over the base coordinates.
    pub fn b2(&self) -> &ScalarFieldExpr {
        &self.b2
    }

    /// `f^2` over the fiber coordinates.
    pub fn f2(&self) -> &ScalarFieldExpr {
        &self.f2
    }

    /// `ln b = 1/2 ln b^2` over the base coordinates.
    pub fn ln_b(&self) -> ScalarFieldExpr {
        self.b2.ln().scaled(0.5)
    }

    /// `ln f = 1/2 ln f^2` over the fiber coordinates.
    pub fn ln_f(&self) -> ScalarFieldExpr {
        self.f2.ln().scaled(0.5)
    }

    /// The warped metric on the product chart.
    pub fn product(&self) -> &MetricPatch {
        &self.product
    }

    /// The plain product metric `g_B + g_F`.
    pub fn unwarped(&self) -> &MetricPatch {
        &self.unwarped
    }

    /// The same space with the roles of `(B, b)` and `(F, f)` exchanged.
    pub fn swapped(&self) -> Result<DwpSpace> {
        DwpSpace::new(self.fiber.clone(), self.base.clone(), self.f.clone(), self.b.clone())
    }

    /// The same space with `f` replaced.
    pub fn with_f(&self, f: Warping) -> Result<DwpSpace> {
        DwpSpace::new(self.base.clone(), self.fiber.clone(), self.b.clone(), f)
    }

    pub fn split<'a>(&self, p: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        let (m, n) = (self.m(), self.n());
        if p.len() != m + n {
            return Err(Error::DimensionMismatch {
                expected: m + n,
                found: p.len(),
            });
        }
        Ok(p.split_at(m))
    }

    /// Checks the chart and the sign of both warping functions at `p`.
    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        self.product.check_point(p)?;
        let (x, y) = self.split(p)?;
        for (name, w, at) in [("b", &self.b, x), ("f", &self.f, y)] {
            let value = w.expr().eval(at)?;
            if !(value > 0.0) {
                return Err(Error::NonPositiveWarping {
                    name,
                    value,
                    point: p.to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Jets of `b^2` and `f^2` over the product chart at `p`.
    fn warping_jets(&self, p: &[f64], order: usize) -> Result<(Jet, Jet)> {
        let vars = self.product.vars();
        let b2 = self.b2.embed(vars, 0).eval_jet(p, order)?;
        let f2 = self.f2.embed(vars, self.m()).eval_jet(p, order)?;
        Ok((b2, f2))
    }
}

/// A tangent vector of the product split into its `B` and `F` parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitVector {
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
}

impl SplitVector {
    pub fn new(horizontal: Vec<f64>, vertical: Vec<f64>) -> SplitVector {
        SplitVector { horizontal, vertical }
    }

    pub fn from_product(v: &[f64], m: usize) -> SplitVector {
        SplitVector {
            horizontal: v[..m].to_vec(),
            vertical: v[m..].to_vec(),
        }
    }

    pub fn to_product(&self) -> Vec<f64> {
        self.horizontal.iter().chain(&self.vertical).copied().collect()
    }
}

/// `block diag(f^2 g_B, b^2 g_F)` at `p`, row-major.
pub fn assemble_metric(space: &DwpSpace, p: &[f64]) -> Result<Vec<f64>> {
    space.check_point(p)?;
    space.product.metric_at(p)
}

/// `(X wedge_g Y) Z = g(Y, Z) X - g(X, Z) Y`.
pub fn wedge(x: &[f64], y: &[f64], z: &[f64], g: &[f64]) -> Vec<f64> {
    let n = x.len();
    let inner = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i * n + j] * u[i] * v[j];
            }
        }
        s
    };
    let (gyz, gxz) = (inner(y, z), inner(x, z));
    x.iter().zip(y).map(|(xi, yi)| gyz * xi - gxz * yi).collect()
}

/// Which metric the gradients and norms inside the closed forms refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientReading {
    /// `grad b^2` in `g_B`, `grad f^2` in `g_F`.
    Component,
    /// Gradients and norms in the warped metric `g`.
    Lifted,
}

/// Variants of the closed-form connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionForm {
    /// Final line `-1/2 g_B(X1,Y1)(grad f^2, 0) - 1/2 g_F(X2,Y2)(0, grad b^2)`.
    Printed,
    /// Final line `-1/2 g_B(X1,Y1)(0, grad f^2) - 1/2 g_F(X2,Y2)(grad b^2, 0)`.
    Swapped(GradientReading),
}

impl ConnectionForm {
    pub const IMPLEMENTED: ConnectionForm = ConnectionForm::Swapped(GradientReading::Lifted);

    pub fn describe(self) -> &'static str {
        match self {
            ConnectionForm::Printed => "-1/2 g_B(X1,Y1)(grad f^2, 0) - 1/2 g_F(X2,Y2)(0, grad b^2)",
            ConnectionForm::Swapped(GradientReading::Component) => {
                "-1/2 g_B(X1,Y1)(0, grad_F f^2) - 1/2 g_F(X2,Y2)(grad_B b^2, 0)"
            }
            ConnectionForm::Swapped(GradientReading::Lifted) => {
                "-1/(2b^2) g_B(X1,Y1)(0, grad_F f^2) - 1/(2f^2) g_F(X2,Y2)(grad_B b^2, 0)"
            }
        }
    }
}

/// Pointwise data shared by the closed forms: values and derivatives of `b^2`, `f^2`.
struct WarpData {
    m: usize,
    n: usize,
    b2: f64,
    f2: f64,
    /// `d b^2` over the product chart (zero in fiber slots)
    db2: Vec<f64>,
    df2: Vec<f64>,
    /// factor-metric gradients embedded in the product, `(grad_B b^2, 0)` and `(0, grad_F f^2)`
    grad_b2: Vec<f64>,
    grad_f2: Vec<f64>,
    /// `nabla_{e_i} grad_B b^2` for each product coordinate direction, as product vectors
    hess_b2: Vec<Vec<f64>>,
    hess_f2: Vec<Vec<f64>>,
    /// product metric `g_B + g_F` and warped metric at `p`
    g0: Vec<f64>,
    g: Vec<f64>,
}

impl WarpData {
    fn new(space: &DwpSpace, p: &[f64], order: usize) -> Result<(WarpData, LocalGeometry)> {
        space.check_point(p)?;
        let (m, n) = (space.m(), space.n());
        let dim = m + n;
        let geo0 = space.unwarped.local(p, order.max(2))?;
        let (b2, f2) = space.warping_jets(p, order.max(2))?;
        let gb = geo0.grad(&b2);
        let gf = geo0.grad(&f2);
        let hess = |grad: &[Jet]| -> Vec<Vec<f64>> {
            let cov = geo0.covariant(grad);
            (0..dim)
                .map(|i| (0..dim).map(|k| cov[i][k].value()).collect())
                .collect()
        };
        let data = WarpData {
            m,
            n,
            b2: b2.value(),
            f2: f2.value(),
            db2: (0..dim).map(|i| b2.d(i)).collect(),
            df2: (0..dim).map(|i| f2.d(i)).collect(),
            grad_b2: gb.iter().map(Jet::value).collect(),
            grad_f2: gf.iter().map(Jet::value).collect(),
            hess_b2: hess(&gb),
            hess_f2: hess(&gf),
            g0: geo0.metric_values(),
            g: space.product.metric_at(p)?,
        };
        Ok((data, geo0))
    }

    fn dim(&self) -> usize {
        self.m + self.n
    }

    fn horizontal(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| if i < self.m { v[i] } else { 0.0 }).collect()
    }

    fn vertical(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| if i < self.m { 0.0 } else { v[i] }).collect()
    }

    fn g0(&self, u: &[f64], v: &[f64]) -> f64 {
        bilinear(&self.g0, u, v)
    }

    fn g(&self, u: &[f64], v: &[f64]) -> f64 {
        bilinear(&self.g, u, v)
    }

    /// Scale turning a factor gradient into the chosen reading.
    fn scales(&self, reading: GradientReading) -> (f64, f64) {
        match reading {
            GradientReading::Component => (1.0, 1.0),
            GradientReading::Lifted => (1.0 / self.f2, 1.0 / self.b2),
        }
    }
}

fn bilinear(g: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i * n + j] * u[i] * v[j];
        }
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(acc: &mut [f64], s: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

/// Closed-form covariant derivative `nabla-bar_X Y` at `p`.
///
/// `x` and `y` are vector fields on the product chart given as jets of order at
/// least 1.
pub fn dwp_connection_closed(
    space: &DwpSpace,
    form: ConnectionForm,
    x: &[Jet],
    y: &[Jet],
    p: &[f64],
) -> Result<SplitVector> {
    let dim = space.m() + space.n();
    check_field(x, dim)?;
    check_field(y, dim)?;
    if form == ConnectionForm::Printed && space.m() != space.n() {
        return Err(Error::IllTyped {
            form: form.describe().into(),
            reason: format!(
                "grad f^2 is {}-dimensional but fills the {}-dimensional B slot",
                space.n(),
                space.m()
            ),
        });
    }
    let (w, geo0) = WarpData::new(space, p, 2)?;
    let mut out: Vec<f64> = geo0.directional(x, y).iter().map(Jet::value).collect();
    let xv: Vec<f64> = x.iter().map(Jet::value).collect();
    let yv: Vec<f64> = y.iter().map(Jet::value).collect();
    let (x1, x2, y1, y2) = (w.horizontal(&xv), w.vertical(&xv), w.horizontal(&yv), w.vertical(&yv));
    let (b2, f2) = (w.b2, w.f2);
    axpy(&mut out, dot(&x1, &w.db2) / (2.0 * b2), &y2);
    axpy(&mut out, dot(&y1, &w.db2) / (2.0 * b2), &x2);
    axpy(&mut out, dot(&x2, &w.df2) / (2.0 * f2), &y1);
    axpy(&mut out, dot(&y2, &w.df2) / (2.0 * f2), &x1);
    let gb = w.g0(&x1, &y1);
    let gf = w.g0(&x2, &y2);
    match form {
        ConnectionForm::Printed => {
            // m == n: the fiber gradient is written into base slots and vice versa
            let m = space.m();
            for i in 0..m {
                out[i] -= 0.5 * gb * w.grad_f2[m + i];
                out[m + i] -= 0.5 * gf * w.grad_b2[i];
            }
        }
        ConnectionForm::Swapped(reading) => {
            let (sb, sf) = w.scales(reading);
            // lifted: grad f^2 = (0, b^-2 grad_F f^2), grad b^2 = (f^-2 grad_B b^2, 0);
            // the factor metrics g_B, g_F stay as printed
            axpy(&mut out, -0.5 * gb * sf, &w.grad_f2);
            axpy(&mut out, -0.5 * gf * sb, &w.grad_b2);
        }
    }
    Ok(SplitVector::from_product(&out, space.m()))
}

/// `nabla-bar_X Y` at `p` from the Christoffel symbols of the assembled metric.
pub fn connection_oracle(space: &DwpSpace, x: &[Jet], y: &[Jet], p: &[f64]) -> Result<SplitVector> {
    let dim = space.m() + space.n();
    check_field(x, dim)?;
    check_field(y, dim)?;
    space.check_point(p)?;
    let geo = space.product.local(p, 2)?;
    let v: Vec<f64> = geo.directional(x, y).iter().map(Jet::value).collect();
    Ok(SplitVector::from_product(&v, space.m()))
}

fn check_field(v: &[Jet], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    let have = v.iter().map(Jet::order).min().unwrap_or(0);
    if have < 1 {
        return Err(Error::InsufficientOrder { needed: 1, have });
    }
    Ok(())
}

/// Square matrix of a linear map on product vectors, `matrix[l * dim + k]` is
/// component `l` of the image of the `k`-th coordinate vector.
pub type LinearMap = Vec<f64>;

/// Variants of the closed-form curvature relation.
///
/// The printed relation is `1/(2b^2){[A(Y1) ^ (0,X2) - A(X1) ^ (0,Y2)] + 1/(2b^2)|grad b^2|^2 (0,X2) ^ (0,Y2)}`
/// plus its mirror under `(B, b) <-> (F, f)`, where `^` is `wedge_g`. Two
/// changes are needed to reproduce the curvature of `g` in every dimension:
///
/// * the `|grad b^2|^2` and `|grad f^2|^2` terms enter with a minus sign;
/// * pairs of two horizontal (or two vertical) vectors pick up
///   `1/(4b^2f^2)[X1(b^2) grad f^2 ^ (Y1,0) - Y1(b^2) grad f^2 ^ (X1,0)]` and its mirror.
///
/// Both changes are invisible when `dim B = dim F = 1` and the vectors are
/// generic, since then the affected terms only see parallel arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvatureForm {
    pub gradients: GradientReading,
    pub flip_norm_terms: bool,
    pub same_factor_terms: bool,
}

impl CurvatureForm {
    pub const PRINTED: CurvatureForm = CurvatureForm {
        gradients: GradientReading::Component,
        flip_norm_terms: false,
        same_factor_terms: false,
    };
    pub const IMPLEMENTED: CurvatureForm = CurvatureForm {
        gradients: GradientReading::Lifted,
        flip_norm_terms: true,
        same_factor_terms: true,
    };

    pub fn describe(self) -> String {
        let grads = match self.gradients {
            GradientReading::Component => "gradients in g_B, g_F",
            GradientReading::Lifted => "gradients in g",
        };
        let norms = if self.flip_norm_terms {
            "-1/(4b^4)|grad b^2|^2 (0,X2)^(0,Y2), -1/(4f^4)|grad f^2|^2 (X1,0)^(Y1,0)"
        } else {
            "+1/(4b^4)|grad b^2|^2 (0,X2)^(0,Y2), +1/(4f^4)|grad f^2|^2 (X1,0)^(Y1,0)"
        };
        let extra = if self.same_factor_terms {
            "; + 1/(4b^2f^2)[X1(b^2) grad f^2 ^ (Y1,0) - Y1(b^2) grad f^2 ^ (X1,0) + X2(f^2) grad b^2 ^ (0,Y2) - Y2(f^2) grad b^2 ^ (0,X2)]"
        } else {
            ""
        };
        format!("{grads}; {norms}{extra}")
    }
}

/// Right-hand side of the curvature relation as a linear map in `Z`.
///
/// The bracketed expressions are read as `(A - B) wedge_g C`; closing the
/// parenthesis after the wedge operand would subtract a linear map from a vector.
pub fn dwp_curvature_relation(
    space: &DwpSpace,
    form: CurvatureForm,
    x: &[f64],
    y: &[f64],
    p: &[f64],
) -> Result<LinearMap> {
    let reading = form.gradients;
    let dim = space.m() + space.n();
    for v in [x, y] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let (w, _) = WarpData::new(space, p, 2)?;
    let (b2, f2) = (w.b2, w.f2);
    let (sb, sf) = w.scales(reading);
    let grad_b2: Vec<f64> = w.grad_b2.iter().map(|v| v * sb).collect();
    let grad_f2: Vec<f64> = w.grad_f2.iter().map(|v| v * sf).collect();
    // |grad b^2|^2 in the metric matching the reading
    let norm_b = match reading {
        GradientReading::Component => w.g0(&w.grad_b2, &w.grad_b2),
        GradientReading::Lifted => w.g(&grad_b2, &grad_b2),
    };
    let norm_f = match reading {
        GradientReading::Component => w.g0(&w.grad_f2, &w.grad_f2),
        GradientReading::Lifted => w.g(&grad_f2, &grad_f2),
    };
    let (x1, x2, y1, y2) = (w.horizontal(x), w.vertical(x), w.horizontal(y), w.vertical(y));

    // A(V1) = (nabla_V1 grad b^2 - 1/(2b^2) V1(b^2) grad b^2, 0) - 1/(2f^2)(0, V1(b^2) grad f^2)
    let a_term = |v1: &[f64]| -> Vec<f64> {
        let vb = dot(v1, &w.db2);
        let mut out = vec![0.0; dim];
        for (i, vi) in v1.iter().enumerate() {
            axpy(&mut out, vi * sb, &w.hess_b2[i]);
        }
        axpy(&mut out, -vb / (2.0 * b2), &grad_b2);
        axpy(&mut out, -vb / (2.0 * f2), &grad_f2);
        out
    };
    // C(V2) = (0, nabla_V2 grad f^2 - 1/(2f^2) V2(f^2) grad f^2) - 1/(2b^2)(V2(f^2) grad b^2, 0)
    let c_term = |v2: &[f64]| -> Vec<f64> {
        let vf = dot(v2, &w.df2);
        let mut out = vec![0.0; dim];
        for (i, vi) in v2.iter().enumerate() {
            axpy(&mut out, vi * sf, &w.hess_f2[i]);
        }
        axpy(&mut out, -vf / (2.0 * f2), &grad_f2);
        axpy(&mut out, -vf / (2.0 * b2), &grad_b2);
        out
    };
    let (ay, ax) = (a_term(&y1), a_term(&x1));
    let sign = if form.flip_norm_terms { -1.0 } else { 1.0 };
    let (cy, cx) = (c_term(&y2), c_term(&x2));

    let mut out = vec![0.0; dim * dim];
    let mut e = vec![0.0; dim];
    for k in 0..dim {
        e.iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = if i == k { 1.0 } else { 0.0 });
        let mut img = vec![0.0; dim];
        let s = 1.0 / (2.0 * b2);
        axpy(&mut img, s, &wedge(&ay, &x2, &e, &w.g));
        axpy(&mut img, -s, &wedge(&ax, &y2, &e, &w.g));
        axpy(&mut img, sign * s * norm_b / (2.0 * b2), &wedge(&x2, &y2, &e, &w.g));
        let t = 1.0 / (2.0 * f2);
        axpy(&mut img, t, &wedge(&cy, &x1, &e, &w.g));
        axpy(&mut img, -t, &wedge(&cx, &y1, &e, &w.g));
        axpy(&mut img, sign * t * norm_f / (2.0 * f2), &wedge(&x1, &y1, &e, &w.g));
        if form.same_factor_terms {
            let c = 1.0 / (4.0 * b2 * f2);
            axpy(&mut img, c * dot(&x1, &w.db2), &wedge(&grad_f2, &y1, &e, &w.g));
            axpy(&mut img, -c * dot(&y1, &w.db2), &wedge(&grad_f2, &x1, &e, &w.g));
            axpy(&mut img, c * dot(&x2, &w.df2), &wedge(&grad_b2, &y2, &e, &w.g));
            axpy(&mut img, -c * dot(&y2, &w.df2), &wedge(&grad_b2, &x2, &e, &w.g));
        }
        for l in 0..dim {
            out[l * dim + k] = img[l];
        }
    }
    Ok(out)
}

/// `R-bar(X, Y) - R(X, Y)` from the Christoffel symbols of the warped and plain product metrics.
pub fn curvature_difference_oracle(space: &DwpSpace, x: &[f64], y: &[f64], p: &[f64]) -> Result<LinearMap> {
    space.check_point(p)?;
    let dim = space.m() + space.n();
    let warped = space.product.local(p, 2)?;
    let plain = space.unwarped.local(p, 2)?;
    let mut out = vec![0.0; dim * dim];
    for l in 0..dim {
        for k in 0..dim {
            let mut s = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let w = x[i] * y[j];
                    if w != 0.0 {
                        s += w * (warped.riemann(l, k, i, j)?.value() - plain.riemann(l, k, i, j)?.value());
                    }
                }
            }
            out[l * dim + k] = s;
        }
    }
    Ok(out)
}
