//! Maps between metric patches and the calculus of sections along them.
//!
//! All quantities are computed at a single source point `p` from jets. The
//! target geometry is expanded about `q = phi(p)` in target coordinates and then
//! composed with the jets of `phi`, which turns target Christoffel symbols and
//! curvature into jets over the source chart. With jets of order `K` this gives
//!
//! | quantity                      | order   |
//! |-------------------------------|---------|
//! | `phi`, source metric          | `K`     |
//! | `d phi`, Christoffels         | `K - 1` |
//! | target curvature, `tau(phi)`  | `K - 2` |
//! | bitension                     | `K - 4` |
//!
//! so the bitension needs `K = 4`.
//!
//! Sign conventions: [`Pullback::rough_laplacian`] is `-trace (nabla^phi)^2`, the
//! Jacobi operator is `J(V) = Delta V + trace R(d phi, V) d phi` and the
//! bitension is `tau_2 = -J(tau)`.

use crate::error::{Error, Result};
use crate::expr::{parse, ScalarFieldExpr};
use crate::geometry::{LocalGeometry, MetricPatch};
use crate::jet::{self, Jet, MAX_ORDER};

/// Jet order required by the bitension field.
pub const BITENSION_ORDER: usize = 4;

/// A smooth map given by target-coordinate expressions over source coordinates.
#[derive(Debug, Clone)]
pub struct SmoothMap {
    source: MetricPatch,
    target: MetricPatch,
    components: Vec<ScalarFieldExpr>,
}

impl SmoothMap {
    pub fn new(source: MetricPatch, target: MetricPatch, components: Vec<ScalarFieldExpr>) -> Result<SmoothMap> {
        if components.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: components.len(),
            });
        }
        for (a, c) in components.iter().enumerate() {
            if c.vars() != source.vars() {
                return Err(Error::config(
                    format!("components[{a}]"),
                    format!("expression must range over the source coordinates {:?}", source.vars()),
                ));
            }
        }
        Ok(SmoothMap {
            source,
            target,
            components,
        })
    }

    pub fn from_strings<S: AsRef<str>>(
        source: MetricPatch,
        target: MetricPatch,
        components: &[S],
    ) -> Result<SmoothMap> {
        let exprs = components
            .iter()
            .map(|c| parse(c.as_ref(), source.vars()))
            .collect::<Result<Vec<_>>>()?;
        SmoothMap::new(source, target, exprs)
    }

    pub fn identity(patch: &MetricPatch) -> SmoothMap {
        let components = patch
            .vars()
            .iter()
            .map(|v| parse(v, patch.vars()).expect("coordinate names parse"))
            .collect();
        SmoothMap {
            source: patch.clone(),
            target: patch.clone(),
            components,
        }
    }

    pub fn source(&self) -> &MetricPatch {
        &self.source
    }

    pub fn target(&self) -> &MetricPatch {
        &self.target
    }

    pub fn components(&self) -> &[ScalarFieldExpr] {
        &self.components
    }

    /// `phi(p)`, checked against the target chart.
    pub fn image(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.source.check_point(p)?;
        let q = self.components.iter().map(|c| c.eval(p)).collect::<Result<Vec<_>>>()?;
        self.target.check_point(&q)?;
        Ok(q)
    }

    /// All pullback data at `p` from jets of the given order.
    pub fn pullback(&self, p: &[f64], order: usize) -> Result<Pullback> {
        Pullback::new(self, p, order)
    }
}

/// A vector field along a map, with target-frame components over source coordinates.
#[derive(Debug, Clone)]
pub struct SectionAlongMap {
    components: Vec<ScalarFieldExpr>,
}

impl SectionAlongMap {
    pub fn new(map: &SmoothMap, components: Vec<ScalarFieldExpr>) -> Result<SectionAlongMap> {
        if components.len() != map.target.dim() {
            return Err(Error::DimensionMismatch {
                expected: map.target.dim(),
                found: components.len(),
            });
        }
        if let Some(a) = components.iter().position(|c| c.vars() != map.source.vars()) {
            return Err(Error::config(
                format!("components[{a}]"),
                "section components must range over the source coordinates",
            ));
        }
        Ok(SectionAlongMap { components })
    }

    pub fn from_strings<S: AsRef<str>>(map: &SmoothMap, components: &[S]) -> Result<SectionAlongMap> {
        let exprs = components
            .iter()
            .map(|c| parse(c.as_ref(), map.source.vars()))
            .collect::<Result<Vec<_>>>()?;
        SectionAlongMap::new(map, exprs)
    }

    pub fn components(&self) -> &[ScalarFieldExpr] {
        &self.components
    }

    pub fn jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.components.iter().map(|c| c.eval_jet(p, order)).collect()
    }
}

/// Source geometry, map jets and target geometry pulled back to the source chart at one point.
#[derive(Debug, Clone)]
pub struct Pullback {
    m: usize,
    n: usize,
    order: usize,
    src: LocalGeometry,
    phi: Vec<Jet>,
    /// `dphi[i][a] = d_i phi^a`
    dphi: Vec<Vec<Jet>>,
    /// target metric `h_ab` composed with `phi`
    h: Vec<Jet>,
    /// target `Gamma^a_bc` composed with `phi`
    gamma: Vec<Jet>,
    /// target `R^l_kab` composed with `phi`
    riemann: Vec<Jet>,
}

impl Pullback {
    fn new(map: &SmoothMap, p: &[f64], order: usize) -> Result<Pullback> {
        if order > MAX_ORDER {
            return Err(Error::OrderOutOfRange { order, max: MAX_ORDER });
        }
        if order < 2 {
            return Err(Error::InsufficientOrder { needed: 2, have: order });
        }
        let q = map.image(p)?;
        let src = map.source.local(p, order)?;
        let tgt = map.target.local(&q, order)?;
        let phi = map
            .components
            .iter()
            .map(|c| c.eval_jet(p, order))
            .collect::<Result<Vec<_>>>()?;
        let m = map.source.dim();
        let n = map.target.dim();
        let dphi = (0..m).map(|i| phi.iter().map(|f| f.derivative(i)).collect()).collect();
        let compose = |j: &Jet| j.compose(&phi);
        let h = (0..n * n).map(|k| compose(tgt.g(k / n, k % n))).collect();
        let mut gamma = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gamma.push(compose(tgt.gamma(a, b, c)));
                }
            }
        }
        let mut riemann = Vec::with_capacity(n.pow(4));
        for l in 0..n {
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        riemann.push(compose(tgt.riemann(l, k, a, b)?));
                    }
                }
            }
        }
        Ok(Pullback {
            m,
            n,
            order,
            src,
            phi,
            dphi,
            h,
            gamma,
            riemann,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.m
    }

    pub fn target_dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn source_geometry(&self) -> &LocalGeometry {
        &self.src
    }

    pub fn map_jets(&self) -> &[Jet] {
        &self.phi
    }

    /// `d_i phi^a`.
    pub fn dphi(&self, i: usize, a: usize) -> &Jet {
        &self.dphi[i][a]
    }

    /// Target metric along the map.
    pub fn h(&self, a: usize, b: usize) -> &Jet {
        &self.h[a * self.n + b]
    }

    /// Target Christoffel symbol `Gamma^a_bc` along the map.
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.gamma[(a * self.n + b) * self.n + c]
    }

    /// Target curvature `R^l_kab` along the map.
    pub fn riemann(&self, l: usize, k: usize, a: usize, b: usize) -> &Jet {
        let n = self.n;
        &self.riemann[((l * n + k) * n + a) * n + b]
    }

    fn constant(&self, v: f64) -> Jet {
        Jet::constant(self.m, self.order, v)
    }

    fn zero_vector(&self) -> Vec<Jet> {
        vec![self.constant(0.0); self.n]
    }

    /// `d phi(X)` for a source vector field `X`.
    pub fn push_forward(&self, x: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|a| jet::sum(&(0..self.m).map(|i| &self.dphi[i][a] * &x[i]).collect::<Vec<_>>()).unwrap())
            .collect()
    }

    /// Target inner product of two sections.
    pub fn inner(&self, u: &[Jet], v: &[Jet]) -> Jet {
        let mut terms = Vec::with_capacity(self.n * self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                terms.push(&(self.h(a, b) * &u[a]) * &v[b]);
            }
        }
        jet::sum(&terms).unwrap()
    }

    /// Second fundamental form `(nabla d phi)(d_i, d_j)^a`, stored `[i * m + j][a]`.
    pub fn second_fundamental_form(&self) -> Vec<Vec<Jet>> {
        let (m, n) = (self.m, self.n);
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let row = (0..n)
                    .map(|a| {
                        let mut acc = self.dphi[j][a].derivative(i);
                        for k in 0..m {
                            acc = &acc - &(self.src.gamma(k, i, j) * &self.dphi[k][a]);
                        }
                        for b in 0..n {
                            for c in 0..n {
                                acc = &acc + &(&(self.gamma(a, b, c) * &self.dphi[i][b]) * &self.dphi[j][c]);
                            }
                        }
                        acc
                    })
                    .collect();
                out.push(row);
            }
        }
        out
    }

    /// Tension field `trace nabla d phi` as jets of order `K - 2`.
    pub fn tension(&self) -> Vec<Jet> {
        let sff = self.second_fundamental_form();
        (0..self.n)
            .map(|a| {
                let t: Vec<Jet> = sff.iter().map(|row| row[a].clone()).collect();
                self.src.contract(&t)
            })
            .collect()
    }

    /// Pullback covariant derivative `(nabla^phi_i V)^a`, indexed `[i][a]`.
    pub fn covariant(&self, v: &[Jet]) -> Vec<Vec<Jet>> {
        (0..self.m).map(|i| self.covariant_along(i, v)).collect()
    }

    fn covariant_along(&self, i: usize, v: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|a| {
                let mut acc = v[a].derivative(i);
                for b in 0..self.n {
                    for c in 0..self.n {
                        acc = &acc + &(&(self.gamma(a, b, c) * &self.dphi[i][b]) * &v[c]);
                    }
                }
                acc
            })
            .collect()
    }

    /// `nabla^phi_X V` for a source vector field `X`.
    pub fn directional(&self, x: &[Jet], v: &[Jet]) -> Vec<Jet> {
        let cov = self.covariant(v);
        (0..self.n)
            .map(|a| jet::sum(&(0..self.m).map(|i| &x[i] * &cov[i][a]).collect::<Vec<_>>()).unwrap())
            .collect()
    }

    /// `g^{ij}(nabla_i nabla_j V - Gamma^k_ij nabla_k V)`.
    pub fn trace_second_covariant(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        self.require(v, 2)?;
        let m = self.m;
        let first = self.covariant(v);
        let mut t = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let mut w = self.covariant_along(i, &first[j]);
                for k in 0..m {
                    let gk = self.src.gamma(k, i, j);
                    w = w.iter().zip(&first[k]).map(|(wa, fa)| wa - &(gk * fa)).collect();
                }
                t.push(w);
            }
        }
        Ok((0..self.n)
            .map(|a| {
                let comps: Vec<Jet> = t.iter().map(|w| w[a].clone()).collect();
                self.src.contract(&comps)
            })
            .collect())
    }

    /// Rough Laplacian `-trace (nabla^phi)^2 V`.
    pub fn rough_laplacian(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        Ok(self.trace_second_covariant(v)?.into_iter().map(|j| -j).collect())
    }

    /// `R(X, Y) Z` of the target along the map.
    pub fn curvature_apply(&self, x: &[Jet], y: &[Jet], z: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        for l in 0..n {
            let mut terms = Vec::new();
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        terms.push(&(&(self.riemann(l, k, a, b) * &x[a]) * &y[b]) * &z[k]);
                    }
                }
            }
            out.push(jet::sum(&terms).unwrap());
        }
        out
    }

    /// `trace R(d phi, V) d phi = g^{ij} R(d phi(d_i), V) d phi(d_j)`.
    pub fn curvature_trace(&self, v: &[Jet]) -> Vec<Jet> {
        let m = self.m;
        let mut acc = self.zero_vector();
        for i in 0..m {
            for j in 0..m {
                let r = self.curvature_apply(&self.dphi[i], v, &self.dphi[j]);
                let w = self.src.ginv(i, j);
                acc = acc.iter().zip(&r).map(|(s, t)| s + &(w * t)).collect();
            }
        }
        acc
    }

    /// Jacobi operator `Delta V + trace R(d phi, V) d phi`.
    pub fn jacobi(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        let lap = self.rough_laplacian(v)?;
        let curv = self.curvature_trace(v);
        Ok(lap.iter().zip(&curv).map(|(a, b)| a + b).collect())
    }

    /// Bitension `-Delta tau - trace R(d phi, tau) d phi`.
    pub fn bitension(&self) -> Result<Vec<Jet>> {
        let tau = self.tension();
        let lap = self.rough_laplacian(&tau)?;
        let curv = self.curvature_trace(&tau);
        Ok(lap.iter().zip(&curv).map(|(a, b)| -(a + b)).collect())
    }

    /// Bitension computed through a Gram-Schmidt orthonormal frame of the source
    /// instead of metric contractions.
    pub fn bitension_frame(&self) -> Result<Vec<Jet>> {
        let tau = self.tension();
        self.require(&tau, 2)?;
        let frame = self.src.orthonormal_frame()?;
        let mut acc = self.zero_vector();
        for e in &frame {
            // nabla_e nabla_e tau - nabla_{nabla_e e} tau + R(d phi e, tau) d phi e
            let first = self.directional(e, &tau);
            let second = self.directional(e, &first);
            let ee = self.src.directional(e, e);
            let corr = self.directional(&ee, &tau);
            let de = self.push_forward(e);
            let r = self.curvature_apply(&de, &tau, &de);
            acc = (0..self.n)
                .map(|a| &(&(&acc[a] + &second[a]) - &corr[a]) - &r[a])
                .collect();
        }
        Ok(acc)
    }

    /// Energy density `1/2 g^{ij} h_ab d_i phi^a d_j phi^b`.
    pub fn energy_density(&self) -> Jet {
        let m = self.m;
        let mut t = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                t.push(self.inner(&self.dphi[i], &self.dphi[j]));
            }
        }
        self.src.contract(&t).scale(0.5)
    }

    fn require(&self, v: &[Jet], needed: usize) -> Result<()> {
        let have = v.iter().map(Jet::order).min().unwrap_or(0);
        if have < needed {
            return Err(Error::InsufficientOrder { needed, have });
        }
        Ok(())
    }
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// `d phi_p(X)`.
pub fn differential(map: &SmoothMap, p: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != map.source.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.source.dim(),
            found: x.len(),
        });
    }
    map.source.check_point(p)?;
    map.components
        .iter()
        .map(|c| {
            let j = c.eval_jet(p, 1)?;
            Ok((0..x.len()).map(|i| j.d(i) * x[i]).sum())
        })
        .collect()
}

/// Tension field at `p`.
pub fn tension(map: &SmoothMap, p: &[f64]) -> Result<Vec<f64>> {
    Ok(values(&map.pullback(p, 2)?.tension()))
}

/// Rough Laplacian of a section at `p`.
pub fn rough_laplacian(map: &SmoothMap, v: &SectionAlongMap, p: &[f64]) -> Result<Vec<f64>> {
    let pb = map.pullback(p, 2)?;
    Ok(values(&pb.rough_laplacian(&v.jets(p, 2)?)?))
}

/// Jacobi operator applied to a section at `p`.
pub fn jacobi(map: &SmoothMap, v: &SectionAlongMap, p: &[f64]) -> Result<Vec<f64>> {
    let pb = map.pullback(p, 2)?;
    Ok(values(&pb.jacobi(&v.jets(p, 2)?)?))
}

/// Bitension field at `p` from first principles.
pub fn bitension_oracle(map: &SmoothMap, p: &[f64]) -> Result<Vec<f64>> {
    Ok(values(&map.pullback(p, BITENSION_ORDER)?.bitension()?))
}

/// Energy density at `p`.
pub fn energy_density(map: &SmoothMap, p: &[f64]) -> Result<f64> {
    // order 2 is the smallest the pullback accepts; only first derivatives are used
    Ok(map.pullback(p, 2)?.energy_density().value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(name: &str, var: &str) -> MetricPatch {
        MetricPatch::euclidean(name, vec![var.into()], vec![(-10.0, 10.0)]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn warped_plane() -> MetricPatch {
        MetricPatch::from_strings(
            "R x_f R",
            &["x", "y"],
            vec![(-10.0, 10.0), (-10.0, 10.0)],
            &[vec!["2+sin(y)", "0"], vec!["0", "1"]],
        )
        .unwrap()
    }

    #[test]
    fn differential_examples() {
        let r = line("R", "y");
        let id = SmoothMap::identity(&r);
        assert_eq!(differential(&id, &[0.3], &[1.5]).unwrap(), vec![1.5]);
        let twice = SmoothMap::from_strings(r.clone(), r.clone(), &["2*y"]).unwrap();
        assert_eq!(differential(&twice, &[0.3], &[1.0]).unwrap(), vec![2.0]);
        let incl = SmoothMap::from_strings(line("B", "s"), warped_plane(), &["s", "0"]).unwrap();
        assert_eq!(differential(&incl, &[0.1], &[1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn identity_is_harmonic() {
        let s2 = MetricPatch::sphere("S2", ["th", "ph"], vec![(0.3, 2.8), (-3.0, 3.0)]).unwrap();
        let id = SmoothMap::identity(&s2);
        let p = [1.1, 0.4];
        assert!(close(&tension(&id, &p).unwrap(), &[0.0, 0.0], 1e-12));
        assert!(close(&bitension_oracle(&id, &p).unwrap(), &[0.0, 0.0], 1e-10));
    }

    #[test]
    fn inclusion_into_warped_plane() {
        let incl = SmoothMap::from_strings(line("B", "s"), warped_plane(), &["s", "0"]).unwrap();
        let p = [0.7];
        assert!(close(&tension(&incl, &p).unwrap(), &[0.0, -0.5], 1e-12));
        let t2 = bitension_oracle(&incl, &p).unwrap();
        assert!(close(&t2, &[0.0, 0.0], 1e-10), "{t2:?}");
        let pb = incl.pullback(&p, 4).unwrap();
        let frame = values(&pb.bitension_frame().unwrap());
        assert!(close(&frame, &t2, 1e-10));
    }

    #[test]
    fn rough_laplacian_sign() {
        let r = line("R", "x");
        let id = SmoothMap::identity(&r);
        let v = SectionAlongMap::from_strings(&id, &["x^2"]).unwrap();
        assert!(close(&rough_laplacian(&id, &v, &[0.4]).unwrap(), &[-2.0], 1e-12));
        assert!(close(&jacobi(&id, &v, &[0.4]).unwrap(), &[-2.0], 1e-12));
        let c = SectionAlongMap::from_strings(&id, &["3"]).unwrap();
        assert!(close(&rough_laplacian(&id, &c, &[0.4]).unwrap(), &[0.0], 1e-15));
        let zero = SectionAlongMap::from_strings(&id, &["0"]).unwrap();
        assert!(close(&jacobi(&id, &zero, &[0.4]).unwrap(), &[0.0], 1e-15));
    }

    #[test]
    fn energy_density_examples() {
        let r = line("R", "y");
        let plane = MetricPatch::euclidean("R2", vec!["u".into(), "v".into()], vec![(-1.0, 1.0); 2]).unwrap();
        let id2 = SmoothMap::identity(&plane);
        assert!((energy_density(&id2, &[0.1, 0.2]).unwrap() - 1.0).abs() < 1e-15);
        let twice = SmoothMap::from_strings(r.clone(), r.clone(), &["2*y"]).unwrap();
        assert!((energy_density(&twice, &[0.3]).unwrap() - 2.0).abs() < 1e-15);
        let constant = SmoothMap::from_strings(r.clone(), r, &["1"]).unwrap();
        assert_eq!(energy_density(&constant, &[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn jacobi_is_linear_and_matches_bitension() {
        let s2 = MetricPatch::sphere("S2", ["th", "ph"], vec![(0.3, 2.8), (-3.0, 3.0)]).unwrap();
        let plane = MetricPatch::euclidean("R2", vec!["u".into(), "v".into()], vec![(-2.0, 2.0); 2]).unwrap();
        let map = SmoothMap::from_strings(plane, s2, &["1.2+0.3*u*v", "u-v^2"]).unwrap();
        let p = [0.3, -0.4];
        let pb = map.pullback(&p, 4).unwrap();
        let v = SectionAlongMap::from_strings(&map, &["u^2+v", "sin(u)"])
            .unwrap()
            .jets(&p, 4)
            .unwrap();
        let w = SectionAlongMap::from_strings(&map, &["exp(v)", "u*v"])
            .unwrap()
            .jets(&p, 4)
            .unwrap();
        let a = 1.7;
        let comb: Vec<Jet> = v.iter().zip(&w).map(|(x, y)| &x.scale(a) + y).collect();
        let lhs = values(&pb.jacobi(&comb).unwrap());
        let jv = values(&pb.jacobi(&v).unwrap());
        let jw = values(&pb.jacobi(&w).unwrap());
        let rhs: Vec<f64> = jv.iter().zip(&jw).map(|(x, y)| a * x + y).collect();
        assert!(close(&lhs, &rhs, 1e-9));

        let tau = pb.tension();
        let j_tau = values(&pb.jacobi(&tau).unwrap());
        let t2 = values(&pb.bitension().unwrap());
        assert!(close(&t2, &j_tau.iter().map(|x| -x).collect::<Vec<_>>(), 1e-12));
        let frame = values(&pb.bitension_frame().unwrap());
        assert!(close(&frame, &t2, 1e-9), "{frame:?} vs {t2:?}");
    }

    #[test]
    fn low_order_is_rejected() {
        let r = line("R", "x");
        let id = SmoothMap::identity(&r);
        assert!(matches!(
            id.pullback(&[0.0], 3).unwrap().bitension(),
            Err(Error::InsufficientOrder { .. })
        ));
        assert!(matches!(id.pullback(&[0.0], 5), Err(Error::OrderOutOfRange { .. })));
    }
}
