//! Intrinsic geometry of a single coordinate chart.
//!
//! # Index conventions
//!
//! Every module reads curvature through the accessors defined here.
//!
//! | quantity   | storage                 | meaning                                             |
//! |------------|-------------------------|-----------------------------------------------------|
//! | metric     | `g[i][j]`               | `g(d_i, d_j)`                                       |
//! | Christoffel| `gamma[k][i][j]`        | `nabla_{d_i} d_j = Gamma^k_ij d_k`                  |
//! | Riemann    | `riemann[l][k][i][j]`   | `R(d_i, d_j) d_k = R^l_kij d_l`                     |
//! | Ricci      | `ricci[i][j]`           | `R_ij = R^k_ikj = Ric(d_i, d_j)`                    |
//!
//! with `R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`, so
//! `R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik`.
//! The Riemann array is antisymmetric in its last two slots. The unit sphere has
//! `Ric = g`.
//!
//! Two Laplacians appear in this crate and are named apart: the scalar
//! [`laplace_beltrami`] is `+trace Hess` (so `-2cos(theta)` for `cos(theta)` on the
//! sphere), while the rough Laplacian on sections along a map carries the
//! opposite sign (see `maps::rough_laplacian`).

use crate::error::{Error, Result};
use crate::expr::{parse, ScalarFieldExpr};
use crate::jet::{self, Jet};

/// A coordinate chart with a Riemannian metric given by expressions.
#[derive(Debug, Clone)]
pub struct MetricPatch {
    name: String,
    vars: Vec<String>,
    chart: Vec<(f64, f64)>,
    g: Vec<Vec<ScalarFieldExpr>>,
}

impl MetricPatch {
    pub fn new(
        name: impl Into<String>,
        vars: Vec<String>,
        chart: Vec<(f64, f64)>,
        g: Vec<Vec<ScalarFieldExpr>>,
    ) -> Result<MetricPatch> {
        let name = name.into();
        let dim = vars.len();
        let invalid = |what: String| Error::InvalidMetric {
            patch: name.clone(),
            what,
        };
        if dim == 0 {
            return Err(invalid("at least one-dimensional".into()));
        }
        if chart.len() != dim {
            return Err(invalid(format!("given a chart box with {} sides", chart.len())));
        }
        if chart.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(invalid("given a non-empty chart box".into()));
        }
        if g.len() != dim || g.iter().any(|row| row.len() != dim) {
            return Err(invalid(format!("a {dim}x{dim} matrix")));
        }
        for (i, row) in g.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.vars() != vars.as_slice() {
                    return Err(invalid(format!("expressed over its own coordinates at [{i}][{j}]")));
                }
                if j > i && e.ast() != g[j][i].ast() {
                    return Err(invalid(format!("symmetric at [{i}][{j}]")));
                }
            }
        }
        Ok(MetricPatch { name, vars, chart, g })
    }

    /// Parses a metric from component strings.
    pub fn from_strings<S: AsRef<str>>(
        name: impl Into<String>,
        vars: &[S],
        chart: Vec<(f64, f64)>,
        components: &[Vec<S>],
    ) -> Result<MetricPatch> {
        let vars: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        let g = components
            .iter()
            .map(|row| row.iter().map(|s| parse(s.as_ref(), &vars)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        MetricPatch::new(name, vars, chart, g)
    }

    pub fn euclidean(name: impl Into<String>, vars: Vec<String>, chart: Vec<(f64, f64)>) -> Result<MetricPatch> {
        let dim = vars.len();
        let g = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| ScalarFieldExpr::constant(if i == j { 1.0 } else { 0.0 }, &vars))
                    .collect()
            })
            .collect();
        MetricPatch::new(name, vars, chart, g)
    }

    /// Round unit sphere `dtheta^2 + sin(theta)^2 dphi^2`.
    pub fn sphere(name: impl Into<String>, vars: [&str; 2], chart: Vec<(f64, f64)>) -> Result<MetricPatch> {
        let sin2 = format!("sin({})^2", vars[0]);
        MetricPatch::from_strings(name, &vars, chart, &[vec!["1", "0"], vec!["0", sin2.as_str()]])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn chart(&self) -> &[(f64, f64)] {
        &self.chart
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarFieldExpr {
        &self.g[i][j]
    }

    pub fn components(&self) -> &[Vec<ScalarFieldExpr>] {
        &self.g
    }

    pub fn with_name(mut self, name: impl Into<String>) -> MetricPatch {
        self.name = name.into();
        self
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.chart).all(|(x, (lo, hi))| lo < x && x < hi)
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(Error::OutOfChart {
                patch: self.name.clone(),
                point: p.to_vec(),
            });
        }
        Ok(())
    }

    /// Metric matrix at `p`, row-major.
    pub fn metric_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.g.iter().flat_map(|row| row.iter().map(|e| e.eval(p))).collect()
    }

    pub fn metric_jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        let n = self.dim();
        let mut out: Vec<Option<Jet>> = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                let jet = self.g[i][j].eval_jet(p, order)?;
                out[j * n + i] = Some(jet.clone());
                out[i * n + j] = Some(jet);
            }
        }
        Ok(out.into_iter().map(|j| j.expect("filled")).collect())
    }

    pub fn local(&self, p: &[f64], order: usize) -> Result<LocalGeometry> {
        self.check_point(p)?;
        LocalGeometry::from_metric(self.metric_jets(p, order)?).map_err(|e| self.located(e, p))
    }

    fn located(&self, e: Error, p: &[f64]) -> Error {
        match e {
            Error::SingularMetric { .. } => Error::SingularMetric {
                patch: self.name.clone(),
                point: p.to_vec(),
            },
            other => other,
        }
    }

    /// Leading principal minors at `p` are all positive.
    pub fn is_positive_definite_at(&self, p: &[f64]) -> Result<bool> {
        Ok(cholesky(&self.metric_at(p)?, self.dim()).is_some())
    }
}

/// Row-major lower Cholesky factor, `None` unless positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Inverts a square matrix of jets by Gauss-Jordan elimination.
pub fn invert_jets(n: usize, m: &[Jet]) -> Result<Vec<Jet>> {
    let dim = m[0].dim();
    let order = m.iter().map(Jet::order).min().unwrap_or(0);
    let scale = m.iter().map(|j| j.value().abs()).fold(0.0, f64::max).max(1e-300);
    let mut a: Vec<Jet> = m.iter().map(|j| j.truncate(order)).collect();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(dim, order, if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    let singular = || Error::SingularMetric {
        patch: String::new(),
        point: Vec::new(),
    };
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r * n + col].value().abs().total_cmp(&a[s * n + col].value().abs()))
            .expect("non-empty");
        if a[pivot * n + col].value().abs() <= 1e-13 * scale {
            return Err(singular());
        }
        if pivot != col {
            for c in 0..n {
                a.swap(pivot * n + c, col * n + c);
                inv.swap(pivot * n + c, col * n + c);
            }
        }
        let r = a[col * n + col].recip()?;
        for c in 0..n {
            a[col * n + c] = &a[col * n + c] * &r;
            inv[col * n + c] = &inv[col * n + c] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            for c in 0..n {
                a[row * n + c] = &a[row * n + c] - &(&factor * &a[col * n + c]);
                inv[row * n + c] = &inv[row * n + c] - &(&factor * &inv[col * n + c]);
            }
        }
    }
    Ok(inv)
}

/// Jets of the metric, its inverse, Christoffel symbols and curvature at a point.
///
/// Built from order-`K` metric jets; Christoffel symbols carry order `K-1` and
/// the Riemann tensor order `K-2` (absent when `K < 2`).
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    dim: usize,
    g: Vec<Jet>,
    ginv: Vec<Jet>,
    gamma: Vec<Jet>,
    riemann: Option<Vec<Jet>>,
}

impl LocalGeometry {
    pub fn from_metric(g: Vec<Jet>) -> Result<LocalGeometry> {
        let n = (g.len() as f64).sqrt().round() as usize;
        assert_eq!(n * n, g.len(), "metric jets must form a square matrix");
        let order = g.iter().map(Jet::order).min().unwrap_or(0);
        if order < 1 {
            return Err(Error::InsufficientOrder { needed: 1, have: order });
        }
        let ginv = invert_jets(n, &g)?;
        let dg: Vec<Vec<Jet>> = (0..n).map(|v| g.iter().map(|j| j.derivative(v)).collect()).collect();
        // first kind: [ij, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        let mut first = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let s = &(&dg[i][j * n + l] + &dg[j][i * n + l]) - &dg[l][i * n + j];
                    first.push(s.scale(0.5));
                }
            }
        }
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let terms: Vec<Jet> = (0..n).map(|l| &ginv[k * n + l] * &first[(i * n + j) * n + l]).collect();
                    gamma.push(jet::sum(&terms).expect("n >= 1"));
                }
            }
        }
        let riemann = if order >= 2 {
            Some(riemann_from_gamma(n, &gamma))
        } else {
            None
        };
        Ok(LocalGeometry {
            dim: n,
            g,
            ginv,
            gamma,
            riemann,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.g[0].order()
    }

    pub fn g(&self, i: usize, j: usize) -> &Jet {
        &self.g[i * self.dim + j]
    }

    pub fn ginv(&self, i: usize, j: usize) -> &Jet {
        &self.ginv[i * self.dim + j]
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.dim + i) * self.dim + j]
    }

    pub fn riemann(&self, l: usize, k: usize, i: usize, j: usize) -> Result<&Jet> {
        let n = self.dim;
        self.riemann
            .as_ref()
            .map(|r| &r[((l * n + k) * n + i) * n + j])
            .ok_or(Error::InsufficientOrder {
                needed: 2,
                have: self.order(),
            })
    }

    pub fn ricci(&self, i: usize, j: usize) -> Result<Jet> {
        let terms = (0..self.dim)
            .map(|k| self.riemann(k, i, k, j).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(jet::sum(&terms).expect("dim >= 1"))
    }

    pub fn metric_values(&self) -> Vec<f64> {
        self.g.iter().map(Jet::value).collect()
    }

    pub fn inverse_values(&self) -> Vec<f64> {
        self.ginv.iter().map(Jet::value).collect()
    }

    /// `g^{ij} d_j h`.
    pub fn grad(&self, h: &Jet) -> Vec<Jet> {
        let n = self.dim;
        let dh: Vec<Jet> = (0..n).map(|v| h.derivative(v)).collect();
        (0..n)
            .map(|i| jet::sum(&(0..n).map(|j| self.ginv(i, j) * &dh[j]).collect::<Vec<_>>()).unwrap())
            .collect()
    }

    /// `g(U, V)` for vector jets.
    pub fn inner(&self, u: &[Jet], v: &[Jet]) -> Jet {
        let n = self.dim;
        let mut terms = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                terms.push(&(self.g(i, j) * &u[i]) * &v[j]);
            }
        }
        jet::sum(&terms).unwrap()
    }

    /// `nabla_i V^k`, indexed `[i][k]`.
    pub fn covariant(&self, v: &[Jet]) -> Vec<Vec<Jet>> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| {
                        let mut acc = v[k].derivative(i);
                        for l in 0..n {
                            acc = &acc + &(self.gamma(k, i, l) * &v[l]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// `nabla_U V`.
    pub fn directional(&self, u: &[Jet], v: &[Jet]) -> Vec<Jet> {
        let cov = self.covariant(v);
        (0..self.dim)
            .map(|k| jet::sum(&(0..self.dim).map(|i| &u[i] * &cov[i][k]).collect::<Vec<_>>()).unwrap())
            .collect()
    }

    /// Covariant Hessian `d_i d_j h - Gamma^k_ij d_k h`.
    pub fn hessian(&self, h: &Jet) -> Vec<Jet> {
        let n = self.dim;
        let dh: Vec<Jet> = (0..n).map(|v| h.derivative(v)).collect();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = dh[j].derivative(i);
                for k in 0..n {
                    acc = &acc - &(self.gamma(k, i, j) * &dh[k]);
                }
                out.push(acc);
            }
        }
        out
    }

    /// `g^{ij} T_ij` for a covariant 2-tensor stored row-major.
    pub fn contract(&self, t: &[Jet]) -> Jet {
        let terms: Vec<Jet> = (0..self.dim * self.dim).map(|k| &self.ginv[k] * &t[k]).collect();
        jet::sum(&terms).unwrap()
    }

    /// Analyst-sign Laplace-Beltrami `trace Hess h`.
    pub fn laplacian(&self, h: &Jet) -> Jet {
        self.contract(&self.hessian(h))
    }

    /// `trace nabla^2 V = g^{ij}(nabla_i nabla_j V - Gamma^k_ij nabla_k V)` for a vector field.
    pub fn trace_second_covariant(&self, v: &[Jet]) -> Vec<Jet> {
        let n = self.dim;
        let first = self.covariant(v);
        // second[i][j][k] = nabla_i (nabla_j V)^k, treating j as a covector slot
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut terms = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let mut t = first[j][k].derivative(i);
                    for l in 0..n {
                        t = &t + &(self.gamma(k, i, l) * &first[j][l]);
                        t = &t - &(self.gamma(l, i, j) * &first[l][k]);
                    }
                    terms.push(self.ginv(i, j) * &t);
                }
            }
            out.push(jet::sum(&terms).unwrap());
        }
        out
    }

    /// `Ric(V)^k = g^{kj} R_ji V^i`.
    pub fn ricci_apply(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        let n = self.dim;
        let ric = (0..n * n)
            .map(|k| self.ricci(k / n, k % n))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..n)
            .map(|k| {
                let mut terms = Vec::new();
                for j in 0..n {
                    for i in 0..n {
                        terms.push(&(self.ginv(k, j) * &ric[j * n + i]) * &v[i]);
                    }
                }
                jet::sum(&terms).unwrap()
            })
            .collect())
    }

    /// Frame field obtained by Gram-Schmidt on the coordinate frame, `frame[a][i]`.
    pub fn orthonormal_frame(&self) -> Result<Vec<Vec<Jet>>> {
        let n = self.dim;
        let order = self.order();
        let d = self.g[0].dim();
        let mut frame: Vec<Vec<Jet>> = Vec::with_capacity(n);
        for a in 0..n {
            let mut v: Vec<Jet> = (0..n)
                .map(|i| Jet::constant(d, order, if i == a { 1.0 } else { 0.0 }))
                .collect();
            for e in &frame {
                let proj = self.inner(&v, e);
                v = v.iter().zip(e).map(|(vi, ei)| vi - &(&proj * ei)).collect();
            }
            let norm = self.inner(&v, &v).sqrt()?;
            let inv = norm.recip()?;
            frame.push(v.iter().map(|vi| vi * &inv).collect());
        }
        Ok(frame)
    }
}

fn riemann_from_gamma(n: usize, gamma: &[Jet]) -> Vec<Jet> {
    let gam = |k: usize, i: usize, j: usize| &gamma[(k * n + i) * n + j];
    let mut out = Vec::with_capacity(n * n * n * n);
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = &gam(l, j, k).derivative(i) - &gam(l, i, k).derivative(j);
                    for m in 0..n {
                        r = &r + &(gam(l, i, m) * gam(m, j, k));
                        r = &r - &(gam(l, j, m) * gam(m, i, k));
                    }
                    out.push(r);
                }
            }
        }
    }
    out
}

/// Christoffel symbols of the second kind at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelAt {
    pub point: Vec<f64>,
    pub dim: usize,
    symbols: Vec<f64>,
}

impl ChristoffelAt {
    /// `Gamma^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.symbols[(k * self.dim + i) * self.dim + j]
    }
}

/// Riemann and Ricci tensors at a point (see the module table for index order).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureAt {
    pub point: Vec<f64>,
    pub dim: usize,
    riemann: Vec<f64>,
    ricci: Vec<f64>,
}

impl CurvatureAt {
    /// `R^l_kij`, the `d_l` component of `R(d_i, d_j) d_k`.
    pub fn riemann(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.riemann[((l * n + k) * n + i) * n + j]
    }

    pub fn ricci(&self, i: usize, j: usize) -> f64 {
        self.ricci[i * self.dim + j]
    }

    /// `R(X, Y) Z`.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|l| {
                let mut s = 0.0;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            s += self.riemann(l, k, i, j) * x[i] * y[j] * z[k];
                        }
                    }
                }
                s
            })
            .collect()
    }
}

pub fn christoffel(m: &MetricPatch, p: &[f64]) -> Result<ChristoffelAt> {
    let local = m.local(p, 1)?;
    Ok(ChristoffelAt {
        point: p.to_vec(),
        dim: m.dim(),
        symbols: local.gamma.iter().map(Jet::value).collect(),
    })
}

pub fn curvature(m: &MetricPatch, p: &[f64]) -> Result<CurvatureAt> {
    let local = m.local(p, 2)?;
    let n = m.dim();
    let riemann = local
        .riemann
        .as_ref()
        .expect("order 2")
        .iter()
        .map(Jet::value)
        .collect();
    let ricci = (0..n * n)
        .map(|k| local.ricci(k / n, k % n).map(|j| j.value()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurvatureAt {
        point: p.to_vec(),
        dim: n,
        riemann,
        ricci,
    })
}

fn check_field(m: &MetricPatch, h: &ScalarFieldExpr) -> Result<()> {
    if h.arity() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: h.arity(),
        });
    }
    Ok(())
}

/// Gradient of `h` with respect to the patch metric.
pub fn grad(m: &MetricPatch, h: &ScalarFieldExpr, p: &[f64]) -> Result<Vec<f64>> {
    check_field(m, h)?;
    let local = m.local(p, 1)?;
    let hj = h.eval_jet(p, 1)?;
    Ok(local.grad(&hj).iter().map(Jet::value).collect())
}

/// Analyst-sign Laplace-Beltrami operator, `trace Hess h`.
pub fn laplace_beltrami(m: &MetricPatch, h: &ScalarFieldExpr, p: &[f64]) -> Result<f64> {
    check_field(m, h)?;
    let local = m.local(p, 1)?;
    let hj = h.eval_jet(p, 2)?;
    Ok(local.laplacian(&hj).value())
}

/// `g^{ij} B(d_i, d_j)` for a bilinear sampler.
pub fn trace_g(m: &MetricPatch, sampler: impl Fn(&[f64], &[f64]) -> f64, p: &[f64]) -> Result<f64> {
    m.check_point(p)?;
    let g = m.metric_at(p)?;
    let n = m.dim();
    let ginv = invert_values(&g, n).ok_or_else(|| Error::SingularMetric {
        patch: m.name().to_string(),
        point: p.to_vec(),
    })?;
    let basis = |i: usize| -> Vec<f64> { (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect() };
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += ginv[i * n + j] * sampler(&basis(i), &basis(j));
        }
    }
    Ok(s)
}

/// `sum_a B(e_a, e_a)` over the Gram-Schmidt orthonormalization of the coordinate frame.
pub fn trace_g_frame(m: &MetricPatch, sampler: impl Fn(&[f64], &[f64]) -> f64, p: &[f64]) -> Result<f64> {
    m.check_point(p)?;
    let g = m.metric_at(p)?;
    let frame = gram_schmidt(&g, m.dim()).ok_or_else(|| Error::SingularMetric {
        patch: m.name().to_string(),
        point: p.to_vec(),
    })?;
    Ok(frame.iter().map(|e| sampler(e, e)).sum())
}

/// Orthonormal frame (rows) for the metric `g` by Gram-Schmidt on the coordinate basis.
pub fn gram_schmidt(g: &[f64], n: usize) -> Option<Vec<Vec<f64>>> {
    let inner = |u: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i * n + j] * u[i] * v[j];
            }
        }
        s
    };
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect();
        for e in &frame {
            let c = inner(&v, e);
            for i in 0..n {
                v[i] -= c * e[i];
            }
        }
        let norm2 = inner(&v, &v);
        if !(norm2 > 0.0) {
            return None;
        }
        let norm = norm2.sqrt();
        frame.push(v.iter().map(|x| x / norm).collect());
    }
    Some(frame)
}

/// Inverse of a small dense matrix, `None` when singular.
pub fn invert_values(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let jets: Vec<Jet> = a.iter().map(|&v| Jet::constant(1, 0, v)).collect();
    invert_jets_order0(n, &jets)
}

fn invert_jets_order0(n: usize, a: &[Jet]) -> Option<Vec<f64>> {
    invert_jets(n, a).ok().map(|inv| inv.iter().map(Jet::value).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn sphere() -> MetricPatch {
        MetricPatch::sphere("S2", ["th", "ph"], vec![(0.1, 3.0), (-3.0, 3.0)]).unwrap()
    }

    #[test]
    fn euclidean_is_flat() {
        let m = MetricPatch::euclidean("E2", vars(&["x", "y"]), vec![(-1.0, 1.0); 2]).unwrap();
        let c = christoffel(&m, &[0.2, 0.3]).unwrap();
        let r = curvature(&m, &[0.2, 0.3]).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(c.get(k, i, j), 0.0);
                    for l in 0..2 {
                        assert_eq!(r.riemann(l, k, i, j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_symbols_and_curvature() {
        let m = sphere();
        let q = std::f64::consts::FRAC_PI_4;
        let c = christoffel(&m, &[q, 0.0]).unwrap();
        assert!((c.get(0, 1, 1) + 0.5).abs() < 1e-14);
        let t = std::f64::consts::FRAC_PI_3;
        let r = curvature(&m, &[t, 0.3]).unwrap();
        assert!((r.riemann(0, 1, 0, 1) - 0.75).abs() < 1e-13);
        assert!((r.riemann(0, 1, 1, 0) + 0.75).abs() < 1e-13);
        assert!((r.ricci(0, 0) - 1.0).abs() < 1e-13);
        assert!((r.ricci(1, 1) - 0.75).abs() < 1e-13);
    }

    #[test]
    fn grad_examples() {
        let e1 = MetricPatch::euclidean("E1", vars(&["x"]), vec![(-5.0, 5.0)]).unwrap();
        let h = parse("x^2", &["x"]).unwrap();
        assert_eq!(grad(&e1, &h, &[3.0]).unwrap(), vec![6.0]);
        let m = MetricPatch::from_strings("4dx2", &["x"], vec![(-1.0, 1.0)], &[vec!["4"]]).unwrap();
        let h = parse("x", &["x"]).unwrap();
        assert_eq!(grad(&m, &h, &[0.5]).unwrap(), vec![0.25]);
        let s = sphere();
        let h = parse("cos(th)", &["th", "ph"]).unwrap();
        let v = grad(&s, &h, &[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && v[1] == 0.0);
    }

    #[test]
    fn laplacian_examples() {
        let e1 = MetricPatch::euclidean("E1", vars(&["x"]), vec![(-5.0, 5.0)]).unwrap();
        let h = parse("x^2", &["x"]).unwrap();
        assert_eq!(laplace_beltrami(&e1, &h, &[1.3]).unwrap(), 2.0);
        let lnb = parse("log(exp(x))", &["x"]).unwrap();
        assert!(laplace_beltrami(&e1, &lnb, &[0.7]).unwrap().abs() < 1e-14);
        let s = sphere();
        let h = parse("cos(th)", &["th", "ph"]).unwrap();
        for th in [0.4, 1.0, 2.2] {
            let l = laplace_beltrami(&s, &h, &[th, 0.5]).unwrap();
            assert!((l + 2.0 * th.cos()).abs() < 1e-13);
        }
        let one = parse("3", &["th", "ph"]).unwrap();
        assert_eq!(laplace_beltrami(&s, &one, &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(grad(&s, &one, &[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn trace_examples() {
        let s = sphere();
        let p = [1.1, 0.2];
        let g = s.metric_at(&p).unwrap();
        let sampler = |u: &[f64], v: &[f64]| {
            (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| g[i * 2 + j] * u[i] * v[j])
                .sum()
        };
        assert!((trace_g(&s, sampler, &p).unwrap() - 2.0).abs() < 1e-14);
        assert!((trace_g_frame(&s, sampler, &p).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_and_bad_metrics_rejected() {
        let r = MetricPatch::from_strings(
            "bad",
            &["x", "y"],
            vec![(0.0, 1.0); 2],
            &[vec!["1", "x"], vec!["y", "1"]],
        );
        assert!(matches!(r, Err(Error::InvalidMetric { .. })));
        let r = MetricPatch::from_strings("bad", &["x"], vec![(1.0, 0.0)], &[vec!["1"]]);
        assert!(r.is_err());
        let sing = MetricPatch::from_strings(
            "sing",
            &["x", "y"],
            vec![(-1.0, 1.0); 2],
            &[vec!["1", "1"], vec!["1", "1"]],
        )
        .unwrap();
        assert!(matches!(
            christoffel(&sing, &[0.0, 0.0]),
            Err(Error::SingularMetric { .. })
        ));
        assert!(!sing.is_positive_definite_at(&[0.0, 0.0]).unwrap());
        let e1 = MetricPatch::euclidean("E1", vars(&["x"]), vec![(-1.0, 1.0)]).unwrap();
        assert!(matches!(christoffel(&e1, &[2.0]), Err(Error::OutOfChart { .. })));
    }
}
