//! Closed-form tension and bitension fields of inclusions, projections and
//! product maps of a doubly warped product, together with the maps they
//! describe so that every closed form can be checked against the oracle.
//!
//! Each field is a [`ClosedFormField`]: an ordered list of candidate formulas.
//! The first candidate is the formula as printed, later candidates are single
//! term sign flips, alternative readings of ambiguous notation, and finally the
//! form derived from first principles, which is the one evaluated by default.
//!
//! Formulas for the two factors are mirror images, so they are written once in
//! terms of the factor a map lives on ("own", dimension `k`, warping square
//! `own2`) and the opposite factor ("other", dimension `c`, warping square
//! `other2`). Laplacians of functions are `+trace Hess`; gradients and norms
//! are taken in the factor metrics unless a candidate says otherwise.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, ScalarFieldExpr};
use crate::geometry::MetricPatch;
use crate::jet::Jet;
use crate::maps::{SmoothMap, BITENSION_ORDER};
use crate::sampling::sample_box;
use crate::warped::DwpSpace;

/// Default tolerance for [`classify_inclusion`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-7;
/// Maximum `|tau(phi)|` accepted for a harmonic map argument.
pub const HARMONIC_TOL: f64 = 1e-9;
/// Number of samples used to check harmonicity of a map argument.
pub const HARMONIC_SAMPLES: usize = 50;
const HARMONIC_SEED: u64 = 0x5eed;
/// Draws per required sample when looking for points whose image stays in the chart.
const HARMONIC_DRAWS: usize = 20;

/// Which factor a construction lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    B,
    F,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::B => Side::F,
            Side::F => Side::B,
        }
    }

    fn warping_name(self) -> &'static str {
        match self {
            Side::B => "b",
            Side::F => "f",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::B => "B",
            Side::F => "F",
        })
    }
}

fn factor(space: &DwpSpace, side: Side) -> (&MetricPatch, &ScalarFieldExpr) {
    match side {
        Side::B => (space.base(), space.b2()),
        Side::F => (space.fiber(), space.f2()),
    }
}

/// Splits a product point into (own, other) parts.
fn split_sides(space: &DwpSpace, side: Side, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, y) = space.split(p)?;
    Ok(match side {
        Side::B => (x.to_vec(), y.to_vec()),
        Side::F => (y.to_vec(), x.to_vec()),
    })
}

/// Joins (own, other) slot vectors into a product vector with `B` first.
fn place(side: Side, own: Vec<f64>, other: Vec<f64>) -> Vec<f64> {
    match side {
        Side::B => own.into_iter().chain(other).collect(),
        Side::F => other.into_iter().chain(own).collect(),
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

fn zeros(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// Quantities of one factor and the square `h` of its warping function at a point.
#[derive(Debug, Clone)]
pub struct FactorData {
    pub dim: usize,
    pub h: f64,
    /// `grad h`
    pub grad: Vec<f64>,
    /// `|grad h|^2`
    pub norm2: f64,
    /// `grad |grad h|^2`
    pub grad_norm2: Vec<f64>,
    /// `Delta h`
    pub lap_h: f64,
    /// `Delta ln sqrt(h)`
    pub lap_ln_root: f64,
    /// `Delta (1/h)`
    pub lap_inv: f64,
    /// `W = grad ln sqrt(h)`
    pub w: Vec<f64>,
    /// `trace nabla^2 W`
    pub trace_w: Vec<f64>,
    /// `Ric(W)`
    pub ric_w: Vec<f64>,
    /// `grad |W|^2`
    pub grad_w_norm2: Vec<f64>,
    /// `trace nabla^2 grad h`
    pub trace_grad: Vec<f64>,
    /// `Ric(grad h)`
    pub ric_grad: Vec<f64>,
    pub metric: Vec<f64>,
}

impl FactorData {
    pub fn new(patch: &MetricPatch, h2: &ScalarFieldExpr, p: &[f64]) -> Result<FactorData> {
        let geo = patch.local(p, BITENSION_ORDER)?;
        let h = h2.eval_jet(p, BITENSION_ORDER)?;
        if !(h.value() > 0.0) {
            return Err(Error::Domain {
                op: "warping square",
                value: h.value(),
            });
        }
        let grad = geo.grad(&h);
        let norm2 = geo.inner(&grad, &grad);
        let ln_root = h.ln()?.scale(0.5);
        let w = geo.grad(&ln_root);
        let wn = geo.inner(&w, &w);
        Ok(FactorData {
            dim: patch.dim(),
            h: h.value(),
            grad: values(&grad),
            norm2: norm2.value(),
            grad_norm2: values(&geo.grad(&norm2)),
            lap_h: geo.laplacian(&h).value(),
            lap_ln_root: geo.laplacian(&ln_root).value(),
            lap_inv: geo.laplacian(&h.recip()?).value(),
            trace_w: values(&geo.trace_second_covariant(&w)),
            ric_w: values(&geo.ricci_apply(&w)?),
            grad_w_norm2: values(&geo.grad(&wn)),
            trace_grad: values(&geo.trace_second_covariant(&grad)),
            ric_grad: values(&geo.ricci_apply(&grad)?),
            w: values(&w),
            metric: geo.metric_values(),
        })
    }
}

type Eval = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// Where a candidate formula comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateKind {
    Printed,
    Flip,
    Reading,
    Derived,
}

/// One formula for a field, evaluable at sample points.
#[derive(Clone)]
pub struct Candidate {
    pub name: String,
    pub formula: String,
    pub kind: CandidateKind,
    eval: Eval,
}

impl Candidate {
    pub fn new(
        name: impl Into<String>,
        formula: impl Into<String>,
        kind: CandidateKind,
        eval: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Candidate {
        Candidate {
            name: name.into(),
            formula: formula.into(),
            kind,
            eval: Arc::new(eval),
        }
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>> {
        (self.eval)(p)
    }
}

impl fmt::Debug for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Candidate")
            .field("name", &self.name)
            .field("formula", &self.formula)
            .field("kind", &self.kind)
            .finish()
    }
}

/// A field given by competing closed formulas, one of which is evaluated by default.
#[derive(Debug, Clone)]
pub struct ClosedFormField {
    pub label: String,
    pub candidates: Vec<Candidate>,
    pub implemented: usize,
    pub correction_notes: Vec<String>,
}

impl ClosedFormField {
    /// The formula as printed, if the field has one.
    pub fn printed(&self) -> Option<&Candidate> {
        self.candidates.first().filter(|c| c.kind == CandidateKind::Printed)
    }

    pub fn implemented(&self) -> &Candidate {
        &self.candidates[self.implemented]
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.implemented().evaluate(p)
    }

    pub fn candidate(&self, name: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.name == name)
    }
}

type TermFn<C> = Arc<dyn Fn(&C) -> Vec<f64> + Send + Sync>;

struct Term<C> {
    label: String,
    coef: f64,
    f: TermFn<C>,
}

impl<C> Clone for Term<C> {
    fn clone(&self) -> Self {
        Term {
            label: self.label.clone(),
            coef: self.coef,
            f: self.f.clone(),
        }
    }
}

fn term<C>(coef: f64, label: impl Into<String>, f: impl Fn(&C) -> Vec<f64> + Send + Sync + 'static) -> Term<C> {
    Term {
        label: label.into(),
        coef,
        f: Arc::new(f),
    }
}

fn fmt_coef(c: f64) -> String {
    let s = format!("{c}");
    if c >= 0.0 {
        format!("+{s}")
    } else {
        s
    }
}

fn formula_of<C>(terms: &[Term<C>]) -> String {
    terms
        .iter()
        .map(|t| format!("{} {}", fmt_coef(t.coef), t.label))
        .collect::<Vec<_>>()
        .join(" ")
}

type Ctx<C> = Arc<dyn Fn(&[f64]) -> Result<C> + Send + Sync>;

fn from_terms<C: 'static>(name: &str, kind: CandidateKind, ctx: &Ctx<C>, terms: Vec<Term<C>>) -> Candidate {
    let formula = formula_of(&terms);
    let ctx = ctx.clone();
    Candidate::new(name, formula, kind, move |p| {
        let c = ctx(p)?;
        let mut acc: Option<Vec<f64>> = None;
        for t in &terms {
            let v = scaled(&(t.f)(&c), t.coef);
            acc = Some(match acc {
                None => v,
                Some(a) => add(&a, &v),
            });
        }
        Ok(acc.unwrap_or_default())
    })
}

/// `base` followed by one candidate per single-term sign flip.
fn with_flips<C: 'static>(name: &str, kind: CandidateKind, ctx: &Ctx<C>, terms: Vec<Term<C>>) -> Vec<Candidate> {
    let mut out = vec![from_terms(name, kind, ctx, terms.clone())];
    for i in 0..terms.len() {
        let mut flipped = terms.clone();
        flipped[i].coef = -flipped[i].coef;
        out.push(from_terms(
            &format!("{name}/flip-{}", i + 1),
            CandidateKind::Flip,
            ctx,
            flipped,
        ));
    }
    out
}

fn field(label: String, candidates: Vec<Candidate>, notes: Vec<String>) -> ClosedFormField {
    let implemented = candidates
        .iter()
        .rposition(|c| c.kind == CandidateKind::Derived)
        .unwrap_or(0);
    ClosedFormField {
        label,
        candidates,
        implemented,
        correction_notes: notes,
    }
}

// ---------------------------------------------------------------- inclusions

struct InclusionCtx {
    own: FactorData,
    other: FactorData,
}

/// The inclusion of the `side` factor at `basepoint` of the opposite factor.
pub fn inclusion_map(space: &DwpSpace, side: Side, basepoint: &[f64]) -> Result<SmoothMap> {
    let (own, _) = factor(space, side);
    let (other, _) = factor(space, side.other());
    other.check_point(basepoint)?;
    let mut comps: Vec<String> = own.vars().to_vec();
    let fixed: Vec<String> = basepoint.iter().map(|v| format!("({v:e})")).collect();
    comps = match side {
        Side::B => comps.into_iter().chain(fixed).collect(),
        Side::F => fixed.into_iter().chain(comps).collect(),
    };
    SmoothMap::from_strings(own.clone(), space.product().clone(), &comps)
}

fn inclusion_ctx(space: &DwpSpace, side: Side, basepoint: &[f64]) -> Result<Ctx<InclusionCtx>> {
    let (other_patch, other_h) = factor(space, side.other());
    other_patch.check_point(basepoint)?;
    let other = FactorData::new(other_patch, other_h, basepoint)?;
    let (own_patch, own_h) = factor(space, side);
    let (own_patch, own_h) = (own_patch.clone(), own_h.clone());
    Ok(Arc::new(move |p: &[f64]| {
        own_patch.check_point(p)?;
        Ok(InclusionCtx {
            own: FactorData::new(&own_patch, &own_h, p)?,
            other: other.clone(),
        })
    }))
}

/// Closed forms for the tension and bitension of the inclusion of the `side`
/// factor at `basepoint`, as fields over the `side` factor.
pub fn inclusion_fields(space: &DwpSpace, side: Side, basepoint: &[f64]) -> Result<(ClosedFormField, ClosedFormField)> {
    let ctx = inclusion_ctx(space, side, basepoint)?;
    let k = factor(space, side).0.dim() as f64;
    let (o, t) = (side.warping_name(), side.other().warping_name());
    let slot_own = move |c: &InclusionCtx, v: Vec<f64>| place(side, v, zeros(c.other.dim));
    let slot_other = move |c: &InclusionCtx, v: Vec<f64>| place(side, zeros(c.own.dim), v);
    let tag = match side {
        Side::B => "inclusion-b",
        Side::F => "inclusion-f",
    };

    let mut tension = with_flips(
        "printed",
        CandidateKind::Printed,
        &ctx,
        vec![term(
            -k / 2.0,
            format!("(grad {t}^2 in the {} slot)", side.other()),
            move |c: &InclusionCtx| slot_other(c, c.other.grad.clone()),
        )],
    );
    tension.push(from_terms(
        "lifted",
        CandidateKind::Derived,
        &ctx,
        vec![term(
            -k / 2.0,
            format!("{o}^-2 (grad {t}^2 in the {} slot)", side.other()),
            move |c: &InclusionCtx| slot_other(c, scaled(&c.other.grad, 1.0 / c.own.h)),
        )],
    ));

    let printed_terms = |lap_of_own: bool| -> Vec<Term<InclusionCtx>> {
        let lap_name = if lap_of_own { o } else { "b" };
        vec![
            term(
                -k * k / 8.0,
                format!("{o}^-2 |grad {t}^2|^2 (grad {o}^2)"),
                move |c: &InclusionCtx| slot_own(c, scaled(&c.own.grad, c.other.norm2 / c.own.h)),
            ),
            term(
                k / 2.0,
                format!("Delta(ln {lap_name}) (grad {t}^2)"),
                move |c: &InclusionCtx| {
                    let lap = if lap_of_own || side == Side::B {
                        c.own.lap_ln_root
                    } else {
                        c.other.lap_ln_root
                    };
                    slot_other(c, scaled(&c.other.grad, lap))
                },
            ),
            term(
                k * k / 8.0,
                format!("(grad |grad {t}^2|^2)"),
                move |c: &InclusionCtx| slot_other(c, c.other.grad_norm2.clone()),
            ),
        ]
    };
    let mut notes = vec![];
    let mut bitension = match side {
        Side::B => with_flips("printed", CandidateKind::Printed, &ctx, printed_terms(true)),
        Side::F => {
            // the printed form keeps Delta(ln b) even for the F inclusion
            notes.push("printed form uses Delta(ln b); the own-warping reading uses Delta(ln f)".to_string());
            let mut v = with_flips("printed", CandidateKind::Printed, &ctx, printed_terms(false));
            v.extend(with_flips(
                "own-warping",
                CandidateKind::Reading,
                &ctx,
                printed_terms(true),
            ));
            v
        }
    };
    let lifted_terms = vec![
        term(
            -k * k / 8.0,
            format!("{o}^-2 |grad {t}^2|_g^2 (grad_g {o}^2)"),
            move |c: &InclusionCtx| slot_own(c, scaled(&c.own.grad, c.other.norm2 / (c.own.h * c.own.h * c.other.h))),
        ),
        term(
            k / 2.0,
            format!("Delta(ln {o}) (grad_g {t}^2)"),
            move |c: &InclusionCtx| slot_other(c, scaled(&c.other.grad, c.own.lap_ln_root / c.own.h)),
        ),
        term(
            k * k / 8.0,
            format!("grad_g |grad_g {t}^2|_g^2"),
            move |c: &InclusionCtx| {
                // grad_g (own^-2 |grad other^2|^2): own slot other^-2 |.|^2 grad own^-2
                let own_part = scaled(&c.own.grad, -c.other.norm2 / (c.own.h * c.own.h * c.other.h));
                let other_part = scaled(&c.other.grad_norm2, 1.0 / (c.own.h * c.own.h));
                place(side, own_part, other_part)
            },
        ),
    ];
    bitension.extend(with_flips("lifted", CandidateKind::Reading, &ctx, lifted_terms));
    bitension.push(from_terms(
        "derived",
        CandidateKind::Derived,
        &ctx,
        vec![
            term(
                k * (4.0 - k) / 8.0,
                format!("{o}^-4 {t}^-2 |grad {t}^2|^2 (grad {o}^2)"),
                move |c: &InclusionCtx| {
                    slot_own(c, scaled(&c.own.grad, c.other.norm2 / (c.own.h * c.own.h * c.other.h)))
                },
            ),
            term(
                k,
                format!("{o}^-2 Delta(ln {o}) (grad {t}^2)"),
                move |c: &InclusionCtx| slot_other(c, scaled(&c.other.grad, c.own.lap_ln_root / c.own.h)),
            ),
            term(
                k * k / 8.0,
                format!("{o}^-4 (grad |grad {t}^2|^2)"),
                move |c: &InclusionCtx| slot_other(c, scaled(&c.other.grad_norm2, 1.0 / (c.own.h * c.own.h))),
            ),
        ],
    ));
    notes.push("derived form replaces every printed coefficient; no single flip reproduces the oracle".to_string());
    Ok((
        field(
            format!("{tag}.tension"),
            tension,
            vec!["gradient taken in the warped metric".to_string()],
        ),
        field(format!("{tag}.bitension"), bitension, notes),
    ))
}

// --------------------------------------------------------------- projections

struct ProjectionCtx {
    own: FactorData,
    other: FactorData,
}

/// Projection of the doubly warped product onto the `side` factor.
pub fn projection_map(space: &DwpSpace, side: Side) -> Result<SmoothMap> {
    let (own, _) = factor(space, side);
    SmoothMap::from_strings(space.product().clone(), own.clone(), own.vars())
}

fn projection_ctx(space: &DwpSpace, side: Side) -> Ctx<ProjectionCtx> {
    let space = space.clone();
    Arc::new(move |p: &[f64]| {
        space.check_point(p)?;
        let (a, b) = split_sides(&space, side, p)?;
        let (own_patch, own_h) = factor(&space, side);
        let (other_patch, other_h) = factor(&space, side.other());
        Ok(ProjectionCtx {
            own: FactorData::new(own_patch, own_h, &a)?,
            other: FactorData::new(other_patch, other_h, &b)?,
        })
    })
}

fn projection_bitension_terms(k: f64, c: f64, side: Side) -> (Vec<Term<ProjectionCtx>>, Vec<Term<ProjectionCtx>>) {
    let (o, t) = (side.warping_name(), side.other().warping_name());
    let printed = vec![
        term(c, format!("{t}^-2 trace nabla^2 grad ln {o}"), |x: &ProjectionCtx| {
            scaled(&x.own.trace_w, 1.0 / x.other.h)
        }),
        term(c, format!("{t}^-2 Ric(grad ln {o})"), |x: &ProjectionCtx| {
            scaled(&x.own.ric_w, 1.0 / x.other.h)
        }),
        term(c * c / 2.0, format!("grad |grad ln {o}|^2"), |x: &ProjectionCtx| {
            x.own.grad_w_norm2.clone()
        }),
    ];
    let derived = vec![
        term(c, format!("{t}^-4 trace nabla^2 grad ln {o}"), |x: &ProjectionCtx| {
            scaled(&x.own.trace_w, 1.0 / (x.other.h * x.other.h))
        }),
        term(c, format!("{t}^-4 Ric(grad ln {o})"), |x: &ProjectionCtx| {
            scaled(&x.own.ric_w, 1.0 / (x.other.h * x.other.h))
        }),
        term(
            c * c / 2.0,
            format!("{t}^-4 grad |grad ln {o}|^2"),
            |x: &ProjectionCtx| scaled(&x.own.grad_w_norm2, 1.0 / (x.other.h * x.other.h)),
        ),
        term(
            c,
            format!("{o}^-2 {t}^-4 [(4-{k})|grad {t}^2|^2 / (2{t}^2) - Delta {t}^2] grad ln {o}"),
            move |x: &ProjectionCtx| {
                let s = (4.0 - k) * x.other.norm2 / (2.0 * x.other.h) - x.other.lap_h;
                scaled(&x.own.w, s / (x.own.h * x.other.h * x.other.h))
            },
        ),
    ];
    (printed, derived)
}

/// Closed forms for the tension and bitension of the projection onto `side`,
/// as fields over the product chart with values on the `side` factor.
pub fn projection_fields(space: &DwpSpace, side: Side) -> (ClosedFormField, ClosedFormField) {
    let ctx = projection_ctx(space, side);
    let k = factor(space, side).0.dim() as f64;
    let c = factor(space, side.other()).0.dim() as f64;
    let (o, t) = (side.warping_name(), side.other().warping_name());
    let tag = match side {
        Side::B => "proj-first",
        Side::F => "proj-second",
    };
    let mut tension = with_flips(
        "printed",
        CandidateKind::Printed,
        &ctx,
        vec![term(c, format!("grad ln {o}"), |x: &ProjectionCtx| x.own.w.clone())],
    );
    tension.push(from_terms(
        "derived",
        CandidateKind::Derived,
        &ctx,
        vec![term(c, format!("{t}^-2 grad ln {o}"), |x: &ProjectionCtx| {
            scaled(&x.own.w, 1.0 / x.other.h)
        })],
    ));
    let (printed, derived) = projection_bitension_terms(k, c, side);
    let mut bitension = with_flips("printed", CandidateKind::Printed, &ctx, printed);
    bitension.push(from_terms("derived", CandidateKind::Derived, &ctx, derived));
    (
        field(
            format!("{tag}.tension"),
            tension,
            vec![format!("factor {t}^-2 from the trace over the warped metric")],
        ),
        field(
            format!("{tag}.bitension"),
            bitension,
            vec![format!("overall {t}^-4 and an omitted term in the derivatives of {t}")],
        ),
    )
}

// -------------------------------------------------------------- product maps

/// A self-map of one factor that is checked to be harmonic.
#[derive(Debug, Clone)]
pub struct HarmonicFactorMap {
    side: Side,
    map: SmoothMap,
    max_tension: f64,
}

impl HarmonicFactorMap {
    /// Checks `|tau(phi)| <= HARMONIC_TOL` at [`HARMONIC_SAMPLES`] seeded points
    /// whose image lies in the chart.
    pub fn new<S: AsRef<str>>(space: &DwpSpace, side: Side, components: &[S]) -> Result<HarmonicFactorMap> {
        let (patch, _) = factor(space, side);
        let map = SmoothMap::from_strings(patch.clone(), patch.clone(), components)?;
        let mut max_tension: f64 = 0.0;
        let inside: Vec<Vec<f64>> = sample_box(patch.chart(), HARMONIC_SAMPLES * HARMONIC_DRAWS, HARMONIC_SEED)?
            .into_iter()
            .filter(|p| map.image(p).is_ok())
            .take(HARMONIC_SAMPLES)
            .collect();
        if inside.len() < HARMONIC_SAMPLES {
            return Err(Error::config(
                "phi",
                format!(
                    "only {} of {} draws map into the chart",
                    inside.len(),
                    HARMONIC_SAMPLES * HARMONIC_DRAWS
                ),
            ));
        }
        for p in inside {
            let pb = map.pullback(&p, 2)?;
            let tau = values(&pb.tension());
            let g = patch.metric_at(&map.image(&p)?)?;
            let n = tau.len();
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += g[a * n + b] * tau[a] * tau[b];
                }
            }
            max_tension = max_tension.max(s.sqrt());
        }
        if !(max_tension <= HARMONIC_TOL) {
            return Err(Error::NotHarmonic {
                max_tension,
                tol: HARMONIC_TOL,
            });
        }
        Ok(HarmonicFactorMap { side, map, max_tension })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn max_tension(&self) -> f64 {
        self.max_tension
    }

    fn components_on_product(&self, space: &DwpSpace) -> Vec<ScalarFieldExpr> {
        let vars = space.product().vars();
        let offset = match self.side {
            Side::B => 0,
            Side::F => space.m(),
        };
        self.map.components().iter().map(|c| c.embed(vars, offset)).collect()
    }
}

fn product_components(space: &DwpSpace, phi: &HarmonicFactorMap) -> Vec<ScalarFieldExpr> {
    let vars = space.product().vars();
    let mapped = phi.components_on_product(space);
    let ident = |range: std::ops::Range<usize>| -> Vec<ScalarFieldExpr> {
        range.map(|i| parse(&vars[i], vars).expect("coordinate")).collect()
    };
    match phi.side {
        Side::F => ident(0..space.m()).into_iter().chain(mapped).collect(),
        Side::B => mapped
            .into_iter()
            .chain(ident(space.m()..space.m() + space.n()))
            .collect(),
    }
}

/// `I x phi` (or `phi x I`) from the doubly warped product to the plain product.
pub fn product_map_domain(space: &DwpSpace, phi: &HarmonicFactorMap) -> Result<SmoothMap> {
    SmoothMap::new(
        space.product().clone(),
        space.unwarped().clone(),
        product_components(space, phi),
    )
}

/// `I x phi` from the plain product to the doubly warped product.
pub fn product_map_codomain(space: &DwpSpace, phi: &HarmonicFactorMap) -> Result<SmoothMap> {
    SmoothMap::new(
        space.unwarped().clone(),
        space.product().clone(),
        product_components(space, phi),
    )
}

/// Data of the mapped factor `P` (where `phi` acts) and the identity factor `Q`.
struct ProductCtx {
    proj: ProjectionCtx,
    /// `U = d phi(grad ln P)` at `phi(y)`
    u: Vec<f64>,
    /// `J_phi(U)`
    jacobi_u: Vec<f64>,
    /// `nabla^phi_{grad ln P} U`
    dir_u: Vec<f64>,
    /// `grad |U|^2` in the source metric
    grad_u_norm2: Vec<f64>,
    /// warping square of `P` at the source point
    p_h: f64,
}

fn product_ctx(space: &DwpSpace, phi: &HarmonicFactorMap) -> Ctx<ProductCtx> {
    let side = phi.side;
    let q_side = side.other();
    let proj = projection_ctx(space, q_side);
    let space = space.clone();
    let map = phi.map.clone();
    Arc::new(move |p: &[f64]| {
        let pr = proj(p)?;
        let (y, _) = split_sides(&space, side, p)?;
        let pb = map.pullback(&y, BITENSION_ORDER)?;
        let (_, h2) = factor(&space, side);
        let h = h2.eval_jet(&y, BITENSION_ORDER)?;
        let grad_ln = pb.source_geometry().grad(&h.ln()?.scale(0.5));
        let u = pb.push_forward(&grad_ln);
        let un = pb.inner(&u, &u);
        Ok(ProductCtx {
            jacobi_u: values(&pb.jacobi(&u)?),
            dir_u: values(&pb.directional(&grad_ln, &u)),
            grad_u_norm2: values(&pb.source_geometry().grad(&un)),
            u: values(&u),
            p_h: h.value(),
            proj: pr,
        })
    })
}

/// Closed forms for the bitension of `I x phi` (or `phi x I`) on the doubly
/// warped product: the identity factor carries the projection bitension, the
/// mapped factor carries the term built from `U = d phi(grad ln P)`.
pub fn product_domain_fields(space: &DwpSpace, phi: &HarmonicFactorMap) -> (ClosedFormField, ClosedFormField) {
    let side = phi.side;
    let q_side = side.other();
    let ctx = product_ctx(space, phi);
    let q = factor(space, q_side).0.dim() as f64;
    let pdim = factor(space, side).0.dim() as f64;
    let (pn, qn) = (side.warping_name(), q_side.warping_name());
    let tag = match side {
        Side::F => "product-dom",
        Side::B => "product-dom-mirror",
    };
    let put = move |q_part: Vec<f64>, p_part: Vec<f64>| place(q_side, q_part, p_part);
    let p_zero = factor(space, side).0.dim();
    let q_zero = factor(space, q_side).0.dim();

    let mut tension = with_flips(
        "printed",
        CandidateKind::Printed,
        &ctx,
        vec![
            term(
                pdim,
                format!("(grad ln {qn} in the {q_side} slot)"),
                move |c: &ProductCtx| put(c.proj.own.w.clone(), zeros(p_zero)),
            ),
            term(
                q,
                format!("(d phi(grad ln {pn}) in the {side} slot)"),
                move |c: &ProductCtx| put(zeros(q_zero), c.u.clone()),
            ),
        ],
    );
    tension.push(from_terms(
        "derived",
        CandidateKind::Derived,
        &ctx,
        vec![
            term(pdim, format!("{pn}^-2 (grad ln {qn})"), move |c: &ProductCtx| {
                put(scaled(&c.proj.own.w, 1.0 / c.proj.other.h), zeros(p_zero))
            }),
            term(q, format!("{qn}^-2 (d phi(grad ln {pn}))"), move |c: &ProductCtx| {
                put(zeros(q_zero), scaled(&c.u, 1.0 / c.proj.own.h))
            }),
        ],
    ));

    let (proj_printed, proj_derived) = projection_bitension_terms(q, pdim, q_side);
    let lift = |t: Term<ProjectionCtx>| -> Term<ProductCtx> {
        let f = t.f.clone();
        term(
            t.coef,
            format!("({} in the {q_side} slot)", t.label),
            move |c: &ProductCtx| put(f(&c.proj), zeros(p_zero)),
        )
    };
    let mut printed: Vec<Term<ProductCtx>> = proj_printed.into_iter().map(lift).collect();
    printed.push(term(-q, format!("{qn}^-2 J_phi(U)"), move |c: &ProductCtx| {
        put(zeros(q_zero), scaled(&c.jacobi_u, 1.0 / c.proj.own.h))
    }));
    printed.push(term(q * q / 2.0, "grad |U|^2", move |c: &ProductCtx| {
        put(zeros(q_zero), c.grad_u_norm2.clone())
    }));
    let mut derived: Vec<Term<ProductCtx>> = proj_derived.into_iter().map(lift).collect();
    derived.push(term(-q, format!("{qn}^-4 J_phi(U)"), move |c: &ProductCtx| {
        put(zeros(q_zero), scaled(&c.jacobi_u, 1.0 / (c.proj.own.h * c.proj.own.h)))
    }));
    derived.push(term(
        q * q,
        format!("{qn}^-4 nabla^phi_(grad ln {pn}) U"),
        move |c: &ProductCtx| put(zeros(q_zero), scaled(&c.dir_u, 1.0 / (c.proj.own.h * c.proj.own.h))),
    ));
    derived.push(term(
        q,
        format!("{pn}^-2 [Delta({qn}^-2) - {pdim}|grad {qn}^2|^2 / (2{qn}^6)] U"),
        move |c: &ProductCtx| {
            let own = &c.proj.own;
            let s = own.lap_inv - pdim * own.norm2 / (2.0 * own.h.powi(3));
            put(zeros(q_zero), scaled(&c.u, s / c.p_h))
        },
    ));
    let mut bitension = with_flips("printed", CandidateKind::Printed, &ctx, printed);
    bitension.push(from_terms("derived", CandidateKind::Derived, &ctx, derived));
    (
        field(format!("{tag}.tension"), tension, vec!["warping factors from the trace over the warped metric".into()]),
        field(
            format!("{tag}.bitension"),
            bitension,
            vec!["projection slot as corrected; mapped slot needs qn^-4 scaling, a directional derivative and a zeroth-order term".replace("qn", qn)],
        ),
    )
}

// ------------------------------------------------- warped codomain conditions

/// Readings of the ill-typed expressions in the warped-codomain conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodomainReading {
    /// `d phi(Delta h)` as `(Delta h)(phi(y))`; `d phi(grad e)` as `d phi_y(grad e)`.
    A,
    /// `d phi(Delta h)` as `Delta(h o phi)(y)`; `d phi(grad e)` as `grad e` at `y`.
    B,
}

struct CodomainCtx {
    m: f64,
    base: FactorData,
    /// fiber data at `phi(y)`
    fib: FactorData,
    e: f64,
    lap_f2_comp: f64,
    lap_lnf_comp: f64,
    jacobi_grad_f2: Vec<f64>,
    dphi_grad_e: Vec<f64>,
    grad_e: Vec<f64>,
}

fn codomain_ctx(space: &DwpSpace, phi: &HarmonicFactorMap) -> Result<Ctx<CodomainCtx>> {
    if phi.side != Side::F {
        return Err(Error::config("phi.side", "the warped-codomain product map acts on F"));
    }
    let space = space.clone();
    let map = phi.map.clone();
    Ok(Arc::new(move |p: &[f64]| {
        space.unwarped().check_point(p)?;
        let (x, y) = space.split(p)?;
        let q = map.image(y)?;
        let pb = map.pullback(y, BITENSION_ORDER)?;
        let fiber = space.fiber();
        let tgt = fiber.local(&q, BITENSION_ORDER)?;
        let f2_q = space.f2().eval_jet(&q, BITENSION_ORDER)?;
        let grad_f2 = tgt.grad(&f2_q);
        let along: Vec<Jet> = grad_f2.iter().map(|g| g.compose(pb.map_jets())).collect();
        let f2_comp = space.f2().eval_with(pb.map_jets())?;
        let src = pb.source_geometry();
        let e = pb.energy_density();
        let grad_e = src.grad(&e);
        Ok(CodomainCtx {
            m: space.m() as f64,
            base: FactorData::new(space.base(), space.b2(), x)?,
            fib: FactorData::new(fiber, space.f2(), &q)?,
            e: e.value(),
            lap_f2_comp: src.laplacian(&f2_comp).value(),
            lap_lnf_comp: src.laplacian(&f2_comp.ln()?.scale(0.5)).value(),
            jacobi_grad_f2: values(&pb.jacobi(&along)?),
            dphi_grad_e: values(&pb.push_forward(&grad_e)),
            grad_e: values(&grad_e),
        })
    }))
}

/// Left-hand sides of the two warped-codomain conditions, concatenated as a
/// `B` vector followed by an `F` vector, under the given reading.
pub fn codomain_condition_field(space: &DwpSpace, phi: &HarmonicFactorMap) -> Result<ClosedFormField> {
    let ctx = codomain_ctx(space, phi)?;
    let n = space.n();
    let m = space.m();
    let make = |reading: CodomainReading| -> Candidate {
        let ctx = ctx.clone();
        let formula = match reading {
            CodomainReading::A => "d phi(Delta h) := (Delta h)(phi(y)); d phi(grad e) := d phi_y(grad e)",
            CodomainReading::B => "d phi(Delta h) := Delta(h o phi)(y); d phi(grad e) := grad e(y)",
        };
        let name = match reading {
            CodomainReading::A => "reading-a",
            CodomainReading::B => "reading-b",
        };
        Candidate::new(name, formula, CandidateKind::Reading, move |p| {
            let c = ctx(p)?;
            Ok(codomain_conditions(&c, reading, m, n))
        })
    };
    Ok(ClosedFormField {
        label: "product-cod.conditions".into(),
        candidates: vec![make(CodomainReading::A), make(CodomainReading::B)],
        implemented: 0,
        correction_notes: vec!["d phi applied to a scalar is ill-typed; both readings are diagnostics".into()],
    })
}

fn codomain_conditions(c: &CodomainCtx, reading: CodomainReading, m: usize, n: usize) -> Vec<f64> {
    let (e, md) = (c.e, c.m);
    let (b2, f2) = (c.base.h, c.fib.h);
    let (lap_f2, lap_lnf, dgrad_e) = match reading {
        CodomainReading::A => (c.fib.lap_h, c.fib.lap_ln_root, c.dphi_grad_e.clone()),
        CodomainReading::B => (c.lap_f2_comp, c.lap_lnf_comp, c.grad_e.clone()),
    };
    let gb = &c.base.grad;
    let mut first = vec![0.0; m];
    for i in 0..m {
        first[i] = e * (-c.base.trace_grad[i] - c.base.ric_grad[i] + e / 2.0 * c.base.grad_norm2[i])
            + md / 4.0 * (e / f2 - md / (2.0 * b2)) * c.fib.norm2 * gb[i]
            + md / (4.0 * b2) * lap_f2 * gb[i]
            + e / 2.0 * lap_lnf * gb[i];
    }
    let gf = &c.fib.grad;
    let mut second = vec![0.0; n];
    for r in 0..n {
        second[r] = md / 2.0 * (-c.jacobi_grad_f2[r] + md / 4.0 * c.fib.grad_norm2[r])
            - e / 2.0 * (e / f2 - md / (2.0 * b2)) * c.base.norm2 * gf[r]
            - c.base.norm2 / (2.0 * b2) * dgrad_e[r]
            + e / (2.0 * f2) * c.base.lap_h * gf[r]
            + md / 4.0 * c.base.lap_ln_root * gf[r];
    }
    first.into_iter().chain(second).collect()
}

/// Tension of the warped-codomain product map, derived from first principles.
pub fn codomain_tension_field(space: &DwpSpace, phi: &HarmonicFactorMap) -> Result<ClosedFormField> {
    let ctx = codomain_ctx(space, phi)?;
    let m = space.m();
    let n = space.n();
    let cand = Candidate::new(
        "derived",
        "-e(phi) f^-2 (grad b^2, 0) - m/(2b^2) (0, grad f^2)",
        CandidateKind::Derived,
        move |p| {
            let c = ctx(p)?;
            let first = scaled(&c.base.grad, -c.e / c.fib.h);
            let second = scaled(&c.fib.grad, -(m as f64) / (2.0 * c.base.h));
            debug_assert_eq!(second.len(), n);
            Ok(first.into_iter().chain(second).collect())
        },
    );
    Ok(ClosedFormField {
        label: "product-cod.tension".into(),
        candidates: vec![cand],
        implemented: 0,
        correction_notes: vec![],
    })
}

// ------------------------------------------------------------ classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Harmonic,
    ProperBiharmonic,
    NotBiharmonic,
    Indeterminate,
}

/// Outcome of classifying a map from oracle fields at sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiharmonicClass {
    pub verdict: Verdict,
    /// max over samples of `|tau|` in the target metric
    pub tension_norm: f64,
    /// max over samples of `|tau_2|` in the target metric
    pub bitension_norm: f64,
    pub tol: f64,
    /// whether the analytic conditions predict a proper biharmonic map, when decidable
    pub predicted_proper: Option<bool>,
    /// whether verdict and prediction agree, when both are decided
    pub agrees: Option<bool>,
}

fn in_band(v: f64, tol: f64) -> bool {
    v > tol && v <= 10.0 * tol
}

/// Classifies from maximal norms of `tau` and `tau_2`; values in `(tol, 10 tol]` are indeterminate.
pub fn classify_norms(tension: f64, bitension: f64, tol: f64) -> Verdict {
    if tension <= tol {
        Verdict::Harmonic
    } else if in_band(tension, tol) {
        Verdict::Indeterminate
    } else if bitension <= tol {
        Verdict::ProperBiharmonic
    } else if in_band(bitension, tol) {
        Verdict::Indeterminate
    } else {
        Verdict::NotBiharmonic
    }
}

fn metric_norm(g: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i * n + j] * v[i] * v[j];
        }
    }
    s.max(0.0).sqrt()
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Classifies the inclusion of the `side` factor at `basepoint` by evaluating
/// the oracle at `samples` (points of the `side` factor), and checks the
/// analytic criterion: proper biharmonic exactly when the own warping function
/// is constant, the basepoint is not critical for the opposite warping square
/// but is critical for the squared norm of its gradient.
pub fn classify_inclusion(
    space: &DwpSpace,
    side: Side,
    basepoint: &[f64],
    tol: f64,
    samples: &[Vec<f64>],
) -> Result<BiharmonicClass> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    let map = inclusion_map(space, side, basepoint)?;
    let (mut t_max, mut t2_max): (f64, f64) = (0.0, 0.0);
    let (own_patch, own_h) = factor(space, side);
    let mut own_grad_max: f64 = 0.0;
    for p in samples {
        let pb = map.pullback(p, BITENSION_ORDER)?;
        let g = space.product().metric_at(&map.image(p)?)?;
        t_max = t_max.max(metric_norm(&g, &values(&pb.tension())));
        t2_max = t2_max.max(metric_norm(&g, &values(&pb.bitension()?)));
        let d = FactorData::new(own_patch, own_h, p)?;
        own_grad_max = own_grad_max.max(euclid(&d.grad));
    }
    let (other_patch, other_h) = factor(space, side.other());
    let other = FactorData::new(other_patch, other_h, basepoint)?;
    let crit = euclid(&other.grad);
    let crit_norm = euclid(&other.grad_norm2);
    let decided = |v: f64| !in_band(v, tol);
    let predicted_proper = if decided(own_grad_max) && decided(crit) && decided(crit_norm) {
        Some(own_grad_max <= tol && crit > tol && crit_norm <= tol)
    } else {
        None
    };
    let verdict = classify_norms(t_max, t2_max, tol);
    let agrees = match (verdict, predicted_proper) {
        (Verdict::Indeterminate, _) | (_, None) => None,
        (v, Some(pred)) => Some((v == Verdict::ProperBiharmonic) == pred),
    };
    Ok(BiharmonicClass {
        verdict,
        tension_norm: t_max,
        bitension_norm: t2_max,
        tol,
        predicted_proper,
        agrees,
    })
}
