//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] of order `k` in `d` variables stores every Taylor coefficient of
//! total degree `<= k` of a scalar function about a fixed point. Coefficients
//! are normalized: the entry for multi-index `a` is `(1/a!) * d^a f`.
//! [`Jet::partial`] multiplies the factorial back.
//!
//! Monomials are ordered by total degree first, so the coefficients of an
//! order-`k` jet are a prefix of those of any higher-order jet in the same
//! number of variables. Mixed-order arithmetic truncates to the lower order.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 4;

/// Monomial bookkeeping shared by every jet with the same variable count.
pub struct Layout {
    dim: usize,
    /// Flattened multi-indices, `dim` entries per monomial.
    exps: Vec<u8>,
    degree: Vec<u8>,
    /// `len_upto[k]` = number of monomials of degree `<= k`.
    len_upto: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    /// `(i, j, i+j)` products, sorted by total degree of the result.
    products: Vec<(u32, u32, u32)>,
    products_upto: Vec<usize>,
    /// Per variable: `(src, dst, exponent)` with `dst = src - e_v`, sorted by source degree.
    derivs: Vec<Vec<(u32, u32, f64)>>,
    derivs_upto: Vec<Vec<usize>>,
    factorial: Vec<f64>,
}

impl Layout {
    fn build(dim: usize) -> Layout {
        let mut monos: Vec<Vec<u8>> = Vec::new();
        let mut len_upto = Vec::with_capacity(MAX_ORDER + 1);
        for deg in 0..=MAX_ORDER {
            let mut level = Vec::new();
            compositions(dim, deg, &mut vec![0; dim], 0, &mut level);
            // lexicographic, highest power of the first variable first
            level.sort_by(|a, b| b.cmp(a));
            monos.extend(level);
            len_upto.push(monos.len());
        }
        let index: HashMap<Vec<u8>, usize> = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let degree: Vec<u8> = monos.iter().map(|m| m.iter().sum()).collect();
        let factorial = monos
            .iter()
            .map(|m| m.iter().map(|&e| fact(e as usize)).product())
            .collect();

        let mut products = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                if degree[i] + degree[j] > MAX_ORDER as u8 {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        products.sort_by_key(|&(i, j, _)| degree[i as usize] + degree[j as usize]);
        let products_upto = (0..=MAX_ORDER)
            .map(|k| {
                products
                    .iter()
                    .take_while(|&&(i, j, _)| (degree[i as usize] + degree[j as usize]) as usize <= k)
                    .count()
            })
            .collect();

        let mut derivs = Vec::with_capacity(dim);
        let mut derivs_upto = Vec::with_capacity(dim);
        for v in 0..dim {
            let mut table = Vec::new();
            for (i, m) in monos.iter().enumerate() {
                if m[v] == 0 {
                    continue;
                }
                let mut lower = m.clone();
                lower[v] -= 1;
                table.push((i as u32, index[&lower] as u32, m[v] as f64));
            }
            // monos are degree-sorted, so the table is too
            let upto = (0..=MAX_ORDER)
                .map(|k| {
                    table
                        .iter()
                        .take_while(|&&(s, _, _)| degree[s as usize] as usize <= k)
                        .count()
                })
                .collect();
            derivs.push(table);
            derivs_upto.push(upto);
        }

        Layout {
            dim,
            exps: monos.concat(),
            degree,
            len_upto,
            index,
            products,
            products_upto,
            derivs,
            derivs_upto,
            factorial,
        }
    }

    /// Shared layout for `dim` variables.
    pub fn for_dim(dim: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry(dim).or_insert_with(|| Arc::new(Layout::build(dim))).clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coefficients of an order-`order` jet.
    pub fn len(&self, order: usize) -> usize {
        self.len_upto[order]
    }

    pub fn multi_index(&self, idx: usize) -> &[u8] {
        &self.exps[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }
}

fn compositions(dim: usize, left: usize, cur: &mut Vec<u8>, pos: usize, out: &mut Vec<Vec<u8>>) {
    if dim == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == dim - 1 {
        cur[pos] = left as u8;
        out.push(cur.clone());
        return;
    }
    for e in 0..=left {
        cur[pos] = e as u8;
        compositions(dim, left - e, cur, pos + 1, out);
    }
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Truncated Taylor expansion of a scalar function about a point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.layout.dim == other.layout.dim && self.order == other.order && self.coeffs == other.coeffs
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange { order, max: MAX_ORDER });
    }
    Ok(())
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let layout = Layout::for_dim(dim);
        let mut coeffs = vec![0.0; layout.len(order)];
        coeffs[0] = value;
        Jet { layout, order, coeffs }
    }

    /// The coordinate function `x_var`, expanded about `value`.
    pub fn variable(dim: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < dim, "variable {var} out of range for dim {dim}");
        let mut jet = Jet::constant(dim, order, value);
        if order >= 1 {
            let mut alpha = vec![0u8; dim];
            alpha[var] = 1;
            let pos = jet.layout.position(&alpha).expect("degree-one monomial");
            jet.coeffs[pos] = 1.0;
        }
        jet
    }

    /// Coordinate jets for every variable at `point`.
    pub fn coordinates(point: &[f64], order: usize) -> Result<Vec<Jet>> {
        check_order(order)?;
        Ok((0..point.len())
            .map(|v| Jet::variable(point.len(), order, v, point[v]))
            .collect())
    }

    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        check_order(order)?;
        let layout = Layout::for_dim(dim);
        if coeffs.len() != layout.len(order) {
            return Err(Error::DimensionMismatch {
                expected: layout.len(order),
                found: coeffs.len(),
            });
        }
        Ok(Jet { layout, order, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Normalized Taylor coefficient for `alpha`, zero above the truncation order.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        match self.layout.position(alpha) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i],
            _ => 0.0,
        }
    }

    /// Partial derivative `d^alpha f` at the expansion point.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        match self.layout.position(alpha) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i] * self.layout.factorial[i],
            _ => 0.0,
        }
    }

    /// First partial along variable `var`.
    pub fn d(&self, var: usize) -> f64 {
        let mut alpha = vec![0u8; self.dim()];
        alpha[var] = 1;
        self.partial(&alpha)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    /// Jet of `d f / d x_var`, one order lower.
    ///
    /// Panics on an order-0 jet: its derivative carries no information.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "derivative of an order-0 jet");
        let order = self.order - 1;
        let mut coeffs = vec![0.0; self.layout.len(order)];
        let upto = self.layout.derivs_upto[var][self.order];
        for &(src, dst, e) in &self.layout.derivs[var][..upto] {
            coeffs[dst as usize] += e * self.coeffs[src as usize];
        }
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| op(*a, *b))
            .collect();
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; self.layout.len(order)];
        let upto = self.layout.products_upto[order];
        for &(i, j, k) in &self.layout.products[..upto] {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    /// `sum_k series[k] * (self - self.value())^k`; `series[k]` is the
    /// normalized k-th Taylor coefficient of a univariate function at `self.value()`.
    fn compose_series(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let top = self.order.min(series.len() - 1);
        let mut acc = Jet::constant(self.dim(), self.order, series[top]);
        for k in (0..top).rev() {
            acc = acc.product(&h).add_scalar(series[k]);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(Error::Domain {
                op: "division",
                value: a,
            });
        }
        let series: Vec<f64> = (0..=self.order)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a.powi(k as i32 + 1))
            .collect();
        Ok(self.compose_series(&series))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let series: Vec<f64> = (0..=self.order).map(|k| e / fact(k)).collect();
        self.compose_series(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::Domain { op: "log", value: a });
        }
        let series: Vec<f64> = (0..=self.order)
            .map(|k| match k {
                0 => a.ln(),
                _ => {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        Ok(self.compose_series(&series))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let series: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / fact(k)).collect();
        self.compose_series(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let series: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / fact(k)).collect();
        self.compose_series(&series)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if self.value() <= 0.0 {
            return Err(Error::Domain {
                op: "sqrt",
                value: self.value(),
            });
        }
        self.powf(0.5)
    }

    /// Real power of a jet with a positive constant term.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::Domain {
                op: "real power",
                value: a,
            });
        }
        let mut binom = 1.0;
        let series: Vec<f64> = (0..=self.order)
            .map(|k| {
                if k > 0 {
                    binom *= (r - (k as f64 - 1.0)) / k as f64;
                }
                binom * a.powf(r - k as f64)
            })
            .collect();
        Ok(self.compose_series(&series))
    }

    /// Integer power by repeated squaring; negative powers need a nonzero value.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = Jet::constant(self.dim(), self.order, 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        Ok(result)
    }

    /// Substitutes `inner[c]` for the c-th variable of `self`.
    ///
    /// `self` is expanded about a point `q`; `inner[c]` must be jets (in some
    /// other set of variables) of functions whose value is `q[c]`. The result is
    /// the jet of the composite, truncated at the smaller of the two orders.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        assert_eq!(inner.len(), self.dim(), "compose: one inner jet per variable");
        let src_dim = inner.first().map(Jet::dim).unwrap_or(0);
        let inner_order = inner.iter().map(Jet::order).min().unwrap_or(MAX_ORDER);
        let order = self.order.min(inner_order);
        let shifts: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut h = j.truncate(order);
                h.coeffs[0] = 0.0;
                h
            })
            .collect();
        // powers[c][p] = shifts[c]^p
        let powers: Vec<Vec<Jet>> = shifts
            .iter()
            .map(|h| {
                let mut v = vec![Jet::constant(src_dim, order, 1.0)];
                for p in 1..=order {
                    let next = v[p - 1].product(h);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = Jet::constant(src_dim, order, 0.0);
        for idx in 0..self.layout.len(order) {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            let alpha = self.layout.multi_index(idx);
            let mut term = Jet::constant(src_dim, order, c);
            for (var, &e) in alpha.iter().enumerate() {
                if e > 0 {
                    term = term.product(&powers[var][e as usize]);
                }
            }
            acc = &acc + &term;
        }
        acc
    }

    /// Total degree of coefficient `idx` in this jet's layout.
    pub fn degree_of(&self, idx: usize) -> usize {
        self.layout.degree[idx] as usize
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Div for &Jet {
    type Output = Result<Jet>;
    fn div(self, rhs: &Jet) -> Result<Jet> {
        Ok(self.product(&rhs.recip()?))
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(jets: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut it = jets.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| &acc + j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_counts() {
        let l = Layout::for_dim(3);
        // C(3 + k, k)
        assert_eq!(l.len(0), 1);
        assert_eq!(l.len(1), 4);
        assert_eq!(l.len(2), 10);
        assert_eq!(l.len(4), 35);
        assert_eq!(Layout::for_dim(4).len(4), 70);
    }

    #[test]
    fn square_at_three() {
        let x = Jet::variable(1, 2, 0, 3.0);
        let sq = &x * &x;
        assert_eq!(sq.value(), 9.0);
        assert_eq!(sq.partial(&[1]), 6.0);
        assert_eq!(sq.partial(&[2]), 2.0);
    }

    #[test]
    fn exp_series_is_inverse_factorial() {
        let x = Jet::variable(1, 3, 0, 0.0);
        let e = x.exp();
        for k in 0..=3u8 {
            assert!((e.coeff(&[k]) - 1.0 / fact(k as usize)).abs() < 1e-15);
        }
    }

    #[test]
    fn bilinear_mixed_partial() {
        let v = Jet::coordinates(&[5.0, 7.0], 2).unwrap();
        let p = &v[0] * &v[1];
        assert_eq!(p.partial(&[1, 1]), 1.0);
        assert_eq!(p.partial(&[2, 0]), 0.0);
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Jet::variable(1, 4, 0, 2.0);
        let cube = x.powi(3).unwrap();
        let d = cube.derivative(0);
        assert_eq!(d.order(), 3);
        assert!((d.value() - 12.0).abs() < 1e-12);
        assert!((d.partial(&[1]) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        // outer(u, v) = u^2 v + sin(v), expanded about (1, 2)
        let q = Jet::coordinates(&[1.0, 2.0], 4).unwrap();
        let outer = &(&q[0] * &q[0]) * &q[1] + q[1].sin();
        // inner(x) = (1 + x^2, 2 + x), x at 0
        let x = Jet::variable(1, 4, 0, 0.0);
        let u = (&x * &x).add_scalar(1.0);
        let v = x.add_scalar(2.0);
        let composed = outer.compose(&[u.clone(), v.clone()]);
        let direct = &(&u * &u) * &v + v.sin();
        for (a, b) in composed.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn domain_errors() {
        let x = Jet::variable(1, 2, 0, -1.0);
        assert!(matches!(x.ln(), Err(Error::Domain { op: "log", .. })));
        assert!(x.sqrt().is_err());
        assert!(Jet::constant(1, 1, 0.0).recip().is_err());
    }

    #[test]
    fn mixed_order_truncates() {
        let a = Jet::variable(2, 4, 0, 1.0);
        let b = Jet::variable(2, 2, 1, 1.0);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a + &b).order(), 2);
    }
}
