//! The sampling verifier: runs every selected case of a configuration against
//! the first-principles oracle and assembles a report with a discrepancy ledger.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CaseId, PhiSpec, Setup, Tolerances};
use crate::error::{Error, Result};
use crate::expr::{parse, ScalarFieldExpr};
use crate::forms::{
    self, classify_inclusion, codomain_condition_field, codomain_tension_field, inclusion_fields, inclusion_map,
    product_domain_fields, product_map_codomain, product_map_domain, projection_fields, projection_map,
    BiharmonicClass, CandidateKind, ClosedFormField, HarmonicFactorMap, Side,
};
use crate::jet::Jet;
use crate::maps::{SmoothMap, BITENSION_ORDER};
use crate::sampling::sample_box;
use crate::warped::{
    connection_oracle, curvature_difference_oracle, dwp_connection_closed, dwp_curvature_relation, ConnectionForm,
    CurvatureForm, DwpSpace, GradientReading, Warping,
};

/// Maximum relative gap tolerated between the contraction and frame bitension paths.
pub const FRAME_GAP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Match,
    CorrectedMatch,
    Mismatch,
}

/// How a closed value is compared with the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ErrorMetric {
    /// `|c - o| / max(|o|, floor) <= tol` componentwise.
    Relative { tol: f64, floor: f64 },
    /// `|c - o| <= tol` componentwise.
    Absolute { tol: f64 },
}

impl ErrorMetric {
    fn tol(self) -> f64 {
        match self {
            ErrorMetric::Relative { tol, .. } | ErrorMetric::Absolute { tol } => tol,
        }
    }

    fn floor(self) -> f64 {
        match self {
            ErrorMetric::Relative { floor, .. } => floor,
            ErrorMetric::Absolute { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub point: Vec<f64>,
    pub closed: Option<Vec<f64>>,
    pub oracle: Option<Vec<f64>>,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    pub worst_component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A printed formula that disagrees with the oracle and the form that restores agreement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub equation: String,
    pub printed: String,
    pub corrected: String,
    /// `None` when the printed form cannot be evaluated.
    pub err_before: Option<f64>,
    pub err_after: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub field: String,
    pub candidate: String,
    pub formula: String,
    pub verdict: Verdict,
    pub metric: ErrorMetric,
    pub max_abs_err: Option<f64>,
    pub max_rel_err: Option<f64>,
    /// Component attaining the largest error, when the verdict is not a match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_component: Option<usize>,
    /// Largest relative gap between the two independent bitension paths of the oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_frame_gap: Option<f64>,
    pub ledger: Vec<LedgerEntry>,
    pub points: Vec<PointRecord>,
}

/// Per-point agreement of a vanishing condition with a vanishing oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalencePoint {
    pub index: usize,
    pub point: Vec<f64>,
    pub oracle_norm: Option<f64>,
    pub reading_norms: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingSummary {
    pub name: String,
    pub formula: String,
    pub agree: usize,
    pub disagree: usize,
    pub indeterminate: usize,
}

/// Whether `conditions = 0` holds exactly where `tau_2 = 0`, per reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub field: String,
    pub zero_tol: f64,
    pub oracle_zero_points: usize,
    pub readings: Vec<ReadingSummary>,
    pub points: Vec<EquivalencePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub side: Side,
    pub basepoint: Vec<f64>,
    #[serde(flatten)]
    pub class: Option<BiharmonicClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub verdict: Verdict,
    pub max_abs_err: Option<f64>,
    pub max_rel_err: Option<f64>,
    pub ledger: Vec<LedgerEntry>,
    pub fields: Vec<FieldReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classification: Vec<ClassRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tool: String,
    pub version: String,
    pub config: String,
    pub seed: u64,
    pub samples: usize,
    pub jet_order: usize,
    pub printed_forms: bool,
    pub tolerances: Tolerances,
    /// Seconds since the Unix epoch; the only field that varies between identical runs.
    pub timestamp: u64,
    pub cases: Vec<CaseReport>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub samples: usize,
    pub seed: u64,
    pub jet_order: usize,
    pub printed_forms: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            samples: 100,
            seed: 42,
            jet_order: BITENSION_ORDER,
            printed_forms: false,
        }
    }
}

/// Output format of a rendered report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

// ------------------------------------------------------------------ field jobs

type CandidateEval = Arc<dyn Fn(usize, &[f64]) -> Result<Vec<f64>> + Send + Sync>;
type OracleEval = Arc<dyn Fn(&[f64]) -> Result<OracleValue> + Send + Sync>;

/// Oracle value at a point, with the frame-path gap when one was computed.
#[derive(Debug, Clone)]
pub struct OracleValue {
    pub value: Vec<f64>,
    pub frame_gap: Option<f64>,
}

impl From<Vec<f64>> for OracleValue {
    fn from(value: Vec<f64>) -> Self {
        OracleValue { value, frame_gap: None }
    }
}

#[derive(Debug, Clone)]
struct CandidateInfo {
    name: String,
    formula: String,
    kind: CandidateKind,
}

/// A closed-form field paired with its oracle.
#[derive(Clone)]
pub struct FieldJob {
    label: String,
    candidates: Vec<CandidateInfo>,
    implemented: usize,
    notes: Vec<String>,
    eval: CandidateEval,
    oracle: OracleEval,
    metric: ErrorMetric,
}

impl FieldJob {
    pub fn new(
        field: ClosedFormField,
        metric: ErrorMetric,
        oracle: impl Fn(&[f64]) -> Result<OracleValue> + Send + Sync + 'static,
    ) -> FieldJob {
        let f = field.clone();
        FieldJob::with_eval(field, metric, move |i, p| f.candidates[i].evaluate(p), oracle)
    }

    /// A field whose closed forms are rebuilt at every point, as for inclusions
    /// whose basepoint is part of the sampled point.
    pub fn per_point(
        template: ClosedFormField,
        metric: ErrorMetric,
        build: impl Fn(&[f64]) -> Result<(ClosedFormField, Vec<f64>)> + Send + Sync + 'static,
        oracle: impl Fn(&[f64]) -> Result<OracleValue> + Send + Sync + 'static,
    ) -> FieldJob {
        FieldJob::with_eval(
            template,
            metric,
            move |i, p| {
                let (field, at) = build(p)?;
                field.candidates[i].evaluate(&at)
            },
            oracle,
        )
    }

    fn with_eval(
        field: ClosedFormField,
        metric: ErrorMetric,
        eval: impl Fn(usize, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
        oracle: impl Fn(&[f64]) -> Result<OracleValue> + Send + Sync + 'static,
    ) -> FieldJob {
        FieldJob {
            label: field.label.clone(),
            candidates: field
                .candidates
                .iter()
                .map(|c| CandidateInfo {
                    name: c.name.clone(),
                    formula: c.formula.clone(),
                    kind: c.kind,
                })
                .collect(),
            implemented: field.implemented,
            notes: field.correction_notes.clone(),
            eval: Arc::new(eval),
            oracle: Arc::new(oracle),
            metric,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

struct CandidateRun {
    records: Vec<PointRecord>,
    /// largest per-point score; infinite when a point failed
    score: f64,
    max_abs: Option<f64>,
    max_rel: Option<f64>,
    worst: Option<usize>,
}

fn errors(c: &[f64], o: &[f64], floor: f64) -> Option<(f64, f64, usize, usize)> {
    if c.len() != o.len() {
        return None;
    }
    let (mut abs, mut rel, mut wa, mut wr) = (0.0_f64, 0.0_f64, 0, 0);
    for (i, (x, y)) in c.iter().zip(o).enumerate() {
        let d = (x - y).abs();
        let r = d / y.abs().max(floor);
        if !d.is_finite() {
            return None;
        }
        if d > abs {
            abs = d;
            wa = i;
        }
        if r > rel {
            rel = r;
            wr = i;
        }
    }
    Some((abs, rel, wa, wr))
}

fn run_candidate(job: &FieldJob, idx: usize, points: &[Vec<f64>], oracles: &[Result<OracleValue>]) -> CandidateRun {
    let metric = job.metric;
    let records: Vec<PointRecord> = points
        .par_iter()
        .zip(oracles.par_iter())
        .enumerate()
        .map(|(index, (p, o))| {
            let mut rec = PointRecord {
                index,
                point: p.clone(),
                closed: None,
                oracle: o.as_ref().ok().map(|v| v.value.clone()),
                abs_err: None,
                rel_err: None,
                worst_component: None,
                error: None,
            };
            let closed = (job.eval)(idx, p);
            match (&closed, o) {
                (Ok(c), Ok(o)) => match errors(c, &o.value, metric.floor()) {
                    Some((a, r, wa, wr)) => {
                        rec.abs_err = Some(a);
                        rec.rel_err = Some(r);
                        rec.worst_component = Some(match metric {
                            ErrorMetric::Relative { .. } => wr,
                            ErrorMetric::Absolute { .. } => wa,
                        });
                    }
                    None => {
                        rec.error = Some(format!(
                            "closed value has {} components, oracle {}",
                            c.len(),
                            o.value.len()
                        ))
                    }
                },
                (Err(e), _) => rec.error = Some(format!("closed form: {e}")),
                (_, Err(e)) => rec.error = Some(format!("oracle: {e}")),
            }
            rec.closed = closed.ok();
            rec
        })
        .collect();
    let mut score: f64 = 0.0;
    let (mut max_abs, mut max_rel): (Option<f64>, Option<f64>) = (None, None);
    let mut worst = None;
    for r in &records {
        let s = match (r.error.as_ref(), metric) {
            (Some(_), _) => f64::INFINITY,
            (None, ErrorMetric::Relative { .. }) => r.rel_err.unwrap_or(f64::INFINITY),
            (None, ErrorMetric::Absolute { .. }) => r.abs_err.unwrap_or(f64::INFINITY),
        };
        if s > score || (worst.is_none() && s > 0.0) {
            worst = r.worst_component;
        }
        score = score.max(s);
        if let Some(a) = r.abs_err {
            max_abs = Some(max_abs.map_or(a, |m: f64| m.max(a)));
        }
        if let Some(v) = r.rel_err {
            max_rel = Some(max_rel.map_or(v, |m: f64| m.max(v)));
        }
    }
    if records.is_empty() {
        score = f64::INFINITY;
    }
    CandidateRun {
        records,
        score,
        max_abs,
        max_rel,
        worst,
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Evaluates the field at `points`, walks the correction catalog when needed and builds the report.
///
/// With `printed_forms` the walk starts at the printed formula; otherwise the
/// implemented candidate is evaluated first and the printed one is measured for the ledger.
pub fn verify_field(job: &FieldJob, points: &[Vec<f64>], printed_forms: bool) -> FieldReport {
    let oracles: Vec<Result<OracleValue>> = points.par_iter().map(|p| (job.oracle)(p)).collect();
    let frame_gap = oracles
        .iter()
        .filter_map(|o| o.as_ref().ok().and_then(|v| v.frame_gap))
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))));
    let tol = job.metric.tol();
    let has_printed = job
        .candidates
        .first()
        .map(|c| c.kind == CandidateKind::Printed)
        .unwrap_or(false);
    let mut runs: Vec<Option<CandidateRun>> = (0..job.candidates.len()).map(|_| None).collect();
    let score_of = |i: usize, runs: &mut Vec<Option<CandidateRun>>| -> f64 {
        if runs[i].is_none() {
            runs[i] = Some(run_candidate(job, i, points, &oracles));
        }
        runs[i].as_ref().map(|r| r.score).unwrap()
    };

    let start = if printed_forms && has_printed {
        0
    } else {
        job.implemented
    };
    let mut chosen = None;
    if score_of(start, &mut runs) <= tol {
        chosen = Some(start);
    } else {
        for i in 0..job.candidates.len() {
            if i != start && score_of(i, &mut runs) <= tol {
                chosen = Some(i);
                break;
            }
        }
    }
    let printed_score = if has_printed {
        Some(score_of(0, &mut runs))
    } else {
        None
    };
    let reported = chosen.unwrap_or_else(|| {
        // the candidate closest to the oracle, for diagnosis
        (0..job.candidates.len())
            .filter(|i| runs[*i].is_some())
            .min_by(|a, b| {
                let (sa, sb) = (runs[*a].as_ref().unwrap().score, runs[*b].as_ref().unwrap().score);
                sa.total_cmp(&sb)
            })
            .unwrap_or(start)
    });
    let verdict = match (chosen, printed_score) {
        (None, _) => Verdict::Mismatch,
        (Some(_), Some(s)) if s <= tol => Verdict::Match,
        (Some(_), None) => Verdict::Match,
        (Some(_), Some(_)) => Verdict::CorrectedMatch,
    };
    let run = runs[reported].take().expect("reported candidate was evaluated");
    let mut ledger = vec![];
    if verdict != Verdict::Match && has_printed {
        let printed = &job.candidates[0];
        let cand = &job.candidates[reported];
        let mut notes = job.notes.clone();
        if printed_score.is_none_or(|s| !s.is_finite()) {
            if let Some(msg) = first_error(job, points) {
                notes.push(format!("printed form not evaluable: {msg}"));
            }
        }
        if verdict == Verdict::Mismatch {
            notes.push(format!("no catalog entry within {tol:e}; closest shown"));
        }
        ledger.push(LedgerEntry {
            equation: job.label.clone(),
            printed: printed.formula.clone(),
            corrected: format!("[{}] {}", cand.name, cand.formula),
            err_before: printed_score.and_then(finite),
            err_after: finite(run.score),
            notes,
        });
    }
    let cand = &job.candidates[reported];
    FieldReport {
        field: job.label.clone(),
        candidate: cand.name.clone(),
        formula: cand.formula.clone(),
        verdict,
        metric: job.metric,
        max_abs_err: run.max_abs,
        max_rel_err: run.max_rel,
        worst_component: if verdict == Verdict::Mismatch { run.worst } else { None },
        oracle_frame_gap: frame_gap,
        ledger,
        points: run.records,
    }
}

fn first_error(job: &FieldJob, points: &[Vec<f64>]) -> Option<String> {
    points
        .first()
        .and_then(|p| (job.eval)(0, p).err())
        .map(|e| e.to_string())
}

/// Compares a single closed evaluator with an oracle, without a catalog.
pub fn compare_fields(
    label: &str,
    closed: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    oracle: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    points: &[Vec<f64>],
    metric: ErrorMetric,
) -> FieldReport {
    let field = ClosedFormField {
        label: label.into(),
        candidates: vec![forms::Candidate::new("closed", "", CandidateKind::Derived, closed)],
        implemented: 0,
        correction_notes: vec![],
    };
    let job = FieldJob::new(field, metric, move |p| oracle(p).map(OracleValue::from));
    verify_field(&job, points, false)
}

// ---------------------------------------------------------------- oracles

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

fn tension_oracle(map: &SmoothMap, p: &[f64]) -> Result<OracleValue> {
    Ok(values(&map.pullback(p, 2)?.tension()).into())
}

fn bitension_oracle(map: &SmoothMap, p: &[f64], order: usize) -> Result<OracleValue> {
    let pb = map.pullback(p, order)?;
    let value = values(&pb.bitension()?);
    let frame = values(&pb.bitension_frame()?);
    let scale = value.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let gap = value.iter().zip(&frame).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    Ok(OracleValue {
        value,
        frame_gap: Some(gap),
    })
}

// ------------------------------------------------------------------- cases

struct Ctx<'a> {
    space: &'a DwpSpace,
    tol: Tolerances,
    opts: RunOptions,
    phi: Option<&'a PhiSpec>,
}

impl Ctx<'_> {
    fn rel(&self) -> ErrorMetric {
        ErrorMetric::Relative {
            tol: self.tol.rel,
            floor: self.tol.floor,
        }
    }
}

fn vector_fields(space: &DwpSpace, p: &[f64]) -> Result<Vec<(Vec<Jet>, Vec<Jet>)>> {
    let dim = space.m() + space.n();
    let vars = space.product().vars();
    let basis = |i: usize| -> Vec<Jet> {
        (0..dim)
            .map(|k| Jet::constant(dim, 2, if k == i { 1.0 } else { 0.0 }))
            .collect()
    };
    let mut pairs = vec![];
    for i in 0..dim {
        for j in 0..dim {
            pairs.push((basis(i), basis(j)));
        }
    }
    let field = |f: &dyn Fn(usize) -> String| -> Result<Vec<Jet>> {
        (0..dim).map(|k| parse(&f(k), vars)?.eval_jet(p, 2)).collect()
    };
    let x = field(&|k| format!("0.5+0.3*{}+0.2*{}^2", vars[k], vars[(k + 1) % dim]))?;
    let y = field(&|k| format!("1-0.4*{}+0.1*{}*{}", vars[(k + 2) % dim], vars[k], vars[(k + 1) % dim]))?;
    pairs.push((x.clone(), y.clone()));
    pairs.push((y, x));
    Ok(pairs)
}

fn connection_job(space: &DwpSpace, tol: f64) -> FieldJob {
    let forms = [
        ("printed", CandidateKind::Printed, ConnectionForm::Printed),
        (
            "swapped",
            CandidateKind::Flip,
            ConnectionForm::Swapped(GradientReading::Component),
        ),
        (
            "swapped-lifted",
            CandidateKind::Derived,
            ConnectionForm::Swapped(GradientReading::Lifted),
        ),
    ];
    let candidates = forms
        .iter()
        .map(|(name, kind, form)| {
            let s = space.clone();
            let form = *form;
            forms::Candidate::new(*name, form.describe(), *kind, move |p| {
                let mut out = vec![];
                for (x, y) in vector_fields(&s, p)? {
                    out.extend(dwp_connection_closed(&s, form, &x, &y, p)?.to_product());
                }
                Ok(out)
            })
        })
        .collect();
    let field = ClosedFormField {
        label: "connection".into(),
        candidates,
        implemented: 2,
        correction_notes: vec![
            "final-line components exchanged between the B and F slots".into(),
            "gradients of the warping squares taken in the warped metric".into(),
        ],
    };
    let s = space.clone();
    FieldJob::new(field, ErrorMetric::Absolute { tol }, move |p| {
        let mut out = vec![];
        for (x, y) in vector_fields(&s, p)? {
            out.extend(connection_oracle(&s, &x, &y, p)?.to_product());
        }
        Ok(out.into())
    })
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    (0..dim).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

const CURVATURE_CATALOG: [(&str, CandidateKind, CurvatureForm); 6] = [
    ("printed", CandidateKind::Printed, CurvatureForm::PRINTED),
    (
        "lifted",
        CandidateKind::Reading,
        CurvatureForm {
            gradients: GradientReading::Lifted,
            flip_norm_terms: false,
            same_factor_terms: false,
        },
    ),
    (
        "flip-norm-terms",
        CandidateKind::Flip,
        CurvatureForm {
            gradients: GradientReading::Component,
            flip_norm_terms: true,
            same_factor_terms: false,
        },
    ),
    (
        "lifted/flip-norm-terms",
        CandidateKind::Flip,
        CurvatureForm {
            gradients: GradientReading::Lifted,
            flip_norm_terms: true,
            same_factor_terms: false,
        },
    ),
    (
        "lifted/same-factor-terms",
        CandidateKind::Reading,
        CurvatureForm {
            gradients: GradientReading::Lifted,
            flip_norm_terms: false,
            same_factor_terms: true,
        },
    ),
    ("derived", CandidateKind::Derived, CurvatureForm::IMPLEMENTED),
];

fn curvature_job(space: &DwpSpace, label: &str, tol: f64) -> FieldJob {
    let dim = space.m() + space.n();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
        .flat_map(|i| ((i + 1)..dim).map(move |j| (unit(dim, i), unit(dim, j))))
        .collect();
    let pairs = Arc::new(pairs);
    let candidates = CURVATURE_CATALOG
        .iter()
        .map(|(name, kind, form)| {
            let (s, pairs, form) = (space.clone(), pairs.clone(), *form);
            forms::Candidate::new(*name, form.describe(), *kind, move |p| {
                let mut out = vec![];
                for (x, y) in pairs.iter() {
                    out.extend(dwp_curvature_relation(&s, form, x, y, p)?);
                }
                Ok(out)
            })
        })
        .collect();
    let field = ClosedFormField {
        label: label.into(),
        candidates,
        implemented: CURVATURE_CATALOG.len() - 1,
        correction_notes: vec![
            "bracket read as (A - B) wedge C, the only well-typed grouping".into(),
            "norm terms of the warping gradients change sign".into(),
            "pairs within one factor gain the terms X1(b^2) grad f^2 wedge (Y1,0) and mirrors".into(),
        ],
    };
    let s = space.clone();
    FieldJob::new(field, ErrorMetric::Absolute { tol }, move |p| {
        let mut out = vec![];
        for (x, y) in pairs.iter() {
            out.extend(curvature_difference_oracle(&s, x, y, p)?);
        }
        Ok(out.into())
    })
}

fn inclusion_jobs(ctx: &Ctx, side: Side) -> Result<Vec<FieldJob>> {
    let space = ctx.space;
    let (m, order) = (space.m(), ctx.opts.jet_order);
    // the sampled product point carries (own point, basepoint)
    let split = move |p: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let (x, y) = (p[..m].to_vec(), p[m..].to_vec());
        match side {
            Side::B => (x, y),
            Side::F => (y, x),
        }
    };
    let center: Vec<f64> = space.product().chart().iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let (_, base0) = split(&center);
    let (t_template, t2_template) = inclusion_fields(space, side, &base0)?;
    let mut jobs = vec![];
    for (template, second) in [(t_template, false), (t2_template, true)] {
        let s = space.clone();
        let s2 = space.clone();
        let build = move |p: &[f64]| -> Result<(ClosedFormField, Vec<f64>)> {
            let (own, base) = split(p);
            let (t, t2) = inclusion_fields(&s, side, &base)?;
            Ok((if second { t2 } else { t }, own))
        };
        let oracle = move |p: &[f64]| -> Result<OracleValue> {
            let (own, base) = split(p);
            let map = inclusion_map(&s2, side, &base)?;
            if second {
                bitension_oracle(&map, &own, order)
            } else {
                tension_oracle(&map, &own)
            }
        };
        jobs.push(FieldJob::per_point(template, ctx.rel(), build, oracle));
    }
    Ok(jobs)
}

fn projection_jobs(ctx: &Ctx, side: Side) -> Result<Vec<FieldJob>> {
    let map = Arc::new(projection_map(ctx.space, side)?);
    let (t, t2) = projection_fields(ctx.space, side);
    let order = ctx.opts.jet_order;
    let m1 = map.clone();
    Ok(vec![
        FieldJob::new(t, ctx.rel(), move |p| tension_oracle(&m1, p)),
        FieldJob::new(t2, ctx.rel(), move |p| bitension_oracle(&map, p, order)),
    ])
}

fn harmonic_phi(ctx: &Ctx, side: Side) -> Result<HarmonicFactorMap> {
    match ctx.phi.filter(|p| p.side == side) {
        Some(spec) => HarmonicFactorMap::new(ctx.space, side, &spec.components),
        None => {
            let patch = match side {
                Side::B => ctx.space.base(),
                Side::F => ctx.space.fiber(),
            };
            HarmonicFactorMap::new(ctx.space, side, patch.vars())
        }
    }
}

fn product_domain_jobs(ctx: &Ctx, side: Side) -> Result<Vec<FieldJob>> {
    let phi = harmonic_phi(ctx, side)?;
    let map = Arc::new(product_map_domain(ctx.space, &phi)?);
    let (t, t2) = product_domain_fields(ctx.space, &phi);
    let order = ctx.opts.jet_order;
    let m1 = map.clone();
    Ok(vec![
        FieldJob::new(t, ctx.rel(), move |p| tension_oracle(&m1, p)),
        FieldJob::new(t2, ctx.rel(), move |p| bitension_oracle(&map, p, order)),
    ])
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Zero-set comparison of the warped-codomain conditions with the oracle, using
/// the largest absolute component of each vector and the band `(tol, 10 tol]` as indeterminate.
fn codomain_equivalence(ctx: &Ctx, phi: &HarmonicFactorMap, points: &[Vec<f64>]) -> Result<EquivalenceReport> {
    let field = codomain_condition_field(ctx.space, phi)?;
    let map = product_map_codomain(ctx.space, phi)?;
    let order = ctx.opts.jet_order;
    let tol = ctx.tol.zero;
    let rows: Vec<EquivalencePoint> = points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let oracle = map
                .pullback(p, order)
                .and_then(|pb| pb.bitension())
                .map(|v| max_abs(&values(&v)));
            let mut error = oracle.as_ref().err().map(|e| format!("oracle: {e}"));
            let reading_norms = field
                .candidates
                .iter()
                .map(|c| match c.evaluate(p) {
                    Ok(v) => Some(max_abs(&v)),
                    Err(e) => {
                        error.get_or_insert_with(|| format!("{}: {e}", c.name));
                        None
                    }
                })
                .collect();
            EquivalencePoint {
                index,
                point: p.clone(),
                oracle_norm: oracle.ok(),
                reading_norms,
                error,
            }
        })
        .collect();
    let band = |v: f64| v > tol && v <= 10.0 * tol;
    let readings = field
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut s = ReadingSummary {
                name: c.name.clone(),
                formula: c.formula.clone(),
                agree: 0,
                disagree: 0,
                indeterminate: 0,
            };
            for r in &rows {
                match (r.oracle_norm, r.reading_norms[i]) {
                    (Some(o), Some(c)) if !band(o) && !band(c) => {
                        if (o <= tol) == (c <= tol) {
                            s.agree += 1
                        } else {
                            s.disagree += 1
                        }
                    }
                    (Some(_), Some(_)) => s.indeterminate += 1,
                    _ => s.disagree += 1,
                }
            }
            s
        })
        .collect();
    Ok(EquivalenceReport {
        field: field.label.clone(),
        zero_tol: tol,
        oracle_zero_points: rows.iter().filter(|r| r.oracle_norm.is_some_and(|o| o <= tol)).count(),
        readings,
        points: rows,
    })
}

fn corollary_records(ctx: &Ctx) -> Vec<ClassRecord> {
    let mut out = vec![];
    for (k, side) in [Side::B, Side::F].into_iter().enumerate() {
        let (own, other) = match side {
            Side::B => (ctx.space.base(), ctx.space.fiber()),
            Side::F => (ctx.space.fiber(), ctx.space.base()),
        };
        let count = ctx.opts.samples.clamp(1, 20);
        let bases = sample_box(other.chart(), count, ctx.opts.seed.wrapping_add(2 * k as u64 + 1));
        let own_pts = sample_box(own.chart(), 5, ctx.opts.seed.wrapping_add(2 * k as u64 + 2));
        let (bases, own_pts) = match (bases, own_pts) {
            (Ok(b), Ok(o)) => (b, o),
            (Err(e), _) | (_, Err(e)) => {
                out.push(ClassRecord {
                    side,
                    basepoint: vec![],
                    class: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        let recs: Vec<ClassRecord> = bases
            .par_iter()
            .map(|b| {
                let r = classify_inclusion(ctx.space, side, b, ctx.tol.classify, &own_pts);
                ClassRecord {
                    side,
                    basepoint: b.clone(),
                    error: r.as_ref().err().map(|e| e.to_string()),
                    class: r.ok(),
                }
            })
            .collect();
        out.extend(recs);
    }
    out
}

fn case_from_fields(id: CaseId, fields: Vec<FieldReport>) -> CaseReport {
    let verdict = fields
        .iter()
        .map(|f| f.verdict)
        .fold(Verdict::Match, |acc, v| match (acc, v) {
            (Verdict::Mismatch, _) | (_, Verdict::Mismatch) => Verdict::Mismatch,
            (Verdict::CorrectedMatch, _) | (_, Verdict::CorrectedMatch) => Verdict::CorrectedMatch,
            _ => Verdict::Match,
        });
    let fold = |get: fn(&FieldReport) -> Option<f64>| {
        fields
            .iter()
            .filter_map(get)
            .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))))
    };
    CaseReport {
        case: id.as_str().into(),
        verdict,
        max_abs_err: fold(|f| f.max_abs_err),
        max_rel_err: fold(|f| f.max_rel_err),
        ledger: fields.iter().flat_map(|f| f.ledger.clone()).collect(),
        fields,
        equivalence: None,
        classification: vec![],
        error: None,
    }
}

fn failed_case(id: CaseId, e: Error) -> CaseReport {
    let mut c = case_from_fields(id, vec![]);
    c.verdict = Verdict::Mismatch;
    c.error = Some(e.to_string());
    c
}

fn run_jobs(id: CaseId, jobs: Result<Vec<FieldJob>>, points: &[Vec<f64>], printed_forms: bool) -> CaseReport {
    match jobs {
        Ok(jobs) => case_from_fields(
            id,
            jobs.iter().map(|j| verify_field(j, points, printed_forms)).collect(),
        ),
        Err(e) => failed_case(id, e),
    }
}

fn unit_f(space: &DwpSpace) -> Result<DwpSpace> {
    space.with_f(Warping::Value(ScalarFieldExpr::constant(1.0, space.fiber().vars())))
}

/// Runs one case on the sampled `points`.
pub fn run_case(setup: &Setup, id: CaseId, points: &[Vec<f64>], opts: RunOptions) -> CaseReport {
    let ctx = Ctx {
        space: &setup.space,
        tol: setup.tolerances,
        opts,
        phi: setup.phi.as_ref(),
    };
    let pf = opts.printed_forms;
    match id {
        CaseId::Connection => run_jobs(id, Ok(vec![connection_job(ctx.space, ctx.tol.connection)]), points, pf),
        CaseId::Curvature => {
            let jobs = unit_f(ctx.space).map(|one| {
                vec![
                    curvature_job(ctx.space, "curvature-relation", ctx.tol.curvature),
                    curvature_job(&one, "curvature-relation.f-one", ctx.tol.curvature),
                ]
            });
            run_jobs(id, jobs, points, pf)
        }
        CaseId::InclusionB => run_jobs(id, inclusion_jobs(&ctx, Side::B), points, pf),
        CaseId::InclusionF => run_jobs(id, inclusion_jobs(&ctx, Side::F), points, pf),
        CaseId::ProjFirst => run_jobs(id, projection_jobs(&ctx, Side::B), points, pf),
        CaseId::ProjSecond => run_jobs(id, projection_jobs(&ctx, Side::F), points, pf),
        CaseId::ProductDom => run_jobs(id, product_domain_jobs(&ctx, Side::F), points, pf),
        CaseId::ProductDomMirror => run_jobs(id, product_domain_jobs(&ctx, Side::B), points, pf),
        CaseId::ProductCod => {
            let phi = match harmonic_phi(&ctx, Side::F) {
                Ok(phi) => phi,
                Err(e) => return failed_case(id, e),
            };
            let tension = codomain_tension_field(ctx.space, &phi).and_then(|t| {
                let map = Arc::new(product_map_codomain(ctx.space, &phi)?);
                Ok(vec![FieldJob::new(t, ctx.rel(), move |p| tension_oracle(&map, p))])
            });
            let mut case = run_jobs(id, tension, points, pf);
            match codomain_equivalence(&ctx, &phi, points) {
                Ok(eq) => {
                    let matching: Vec<&ReadingSummary> = eq.readings.iter().filter(|r| r.disagree == 0).collect();
                    if matching.is_empty() {
                        case.verdict = Verdict::Mismatch;
                    }
                    for r in eq.readings.iter().filter(|r| r.disagree > 0) {
                        case.ledger.push(LedgerEntry {
                            equation: eq.field.clone(),
                            printed: r.formula.clone(),
                            corrected: "none: zero sets differ".into(),
                            err_before: Some(r.disagree as f64 / points.len().max(1) as f64),
                            err_after: None,
                            notes: vec![format!(
                                "reading `{}` disagrees with the oracle zero set at {} of {} points (fraction in err_before)",
                                r.name,
                                r.disagree,
                                points.len()
                            )],
                        });
                    }
                    case.equivalence = Some(eq);
                }
                Err(e) => {
                    case.verdict = Verdict::Mismatch;
                    case.error = Some(e.to_string());
                }
            }
            case
        }
        CaseId::Corollaries => {
            let recs = corollary_records(&ctx);
            let mut case = case_from_fields(id, vec![]);
            if recs
                .iter()
                .any(|r| r.error.is_some() || r.class.as_ref().and_then(|c| c.agrees) == Some(false))
            {
                case.verdict = Verdict::Mismatch;
            }
            case.classification = recs;
            case
        }
    }
}

/// Samples points and runs every case of `setup` in order.
pub fn run_suite(setup: &Setup, opts: RunOptions) -> Result<SuiteReport> {
    if opts.samples == 0 {
        return Err(Error::config("samples", "must be at least 1"));
    }
    if !(2..=crate::jet::MAX_ORDER).contains(&opts.jet_order) {
        return Err(Error::OrderOutOfRange {
            order: opts.jet_order,
            max: crate::jet::MAX_ORDER,
        });
    }
    let points = sample_box(setup.space.product().chart(), opts.samples, opts.seed)?;
    let cases: Vec<CaseReport> = setup
        .cases
        .iter()
        .map(|id| run_case(setup, *id, &points, opts))
        .collect();
    let exit_code = if cases.iter().any(|c| c.verdict == Verdict::Mismatch) {
        1
    } else {
        0
    };
    Ok(SuiteReport {
        tool: "warpcheck".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: setup.name.clone(),
        seed: opts.seed,
        samples: opts.samples,
        jet_order: opts.jet_order,
        printed_forms: opts.printed_forms,
        tolerances: setup.tolerances,
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        cases,
        exit_code,
    })
}

// --------------------------------------------------------------- rendering

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn opt_text(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_else(|| "-".into())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render(report: &SuiteReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Csv => render_csv(report),
        Format::Text => render_text(report),
    }
}

fn render_csv(report: &SuiteReport) -> String {
    let mut s = format!(
        "# warpcheck {} config={} seed={} timestamp={}\n",
        report.version, report.config, report.seed, report.timestamp
    );
    s.push_str("case,field,candidate,verdict,index,point,abs_err,rel_err,closed,oracle,error\n");
    for c in &report.cases {
        for f in &c.fields {
            for p in &f.points {
                let verdict = serde_json::to_value(f.verdict)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    c.case,
                    f.field,
                    csv_field(&f.candidate),
                    verdict,
                    p.index,
                    join(&p.point),
                    opt(p.abs_err),
                    opt(p.rel_err),
                    p.closed.as_deref().map(join).unwrap_or_default(),
                    p.oracle.as_deref().map(join).unwrap_or_default(),
                    csv_field(p.error.as_deref().unwrap_or("")),
                );
            }
        }
    }
    s
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Match => "match",
        Verdict::CorrectedMatch => "corrected-match",
        Verdict::Mismatch => "MISMATCH",
    }
}

fn render_text(report: &SuiteReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "warpcheck {}  config {}  seed {}  samples {}  timestamp {}",
        report.version, report.config, report.seed, report.samples, report.timestamp
    );
    for c in &report.cases {
        let _ = writeln!(
            s,
            "{:<20} {:<16} max_rel {}",
            c.case,
            verdict_str(c.verdict),
            opt_text(c.max_rel_err)
        );
        if let Some(e) = &c.error {
            let _ = writeln!(s, "    error: {e}");
        }
        for f in &c.fields {
            let _ = writeln!(
                s,
                "    {:<30} {:<16} [{}] max_abs {} max_rel {}",
                f.field,
                verdict_str(f.verdict),
                f.candidate,
                opt_text(f.max_abs_err),
                opt_text(f.max_rel_err)
            );
        }
        if let Some(eq) = &c.equivalence {
            for r in &eq.readings {
                let _ = writeln!(
                    s,
                    "    {:<30} agree {} disagree {} indeterminate {} (oracle zero at {})",
                    r.name, r.agree, r.disagree, r.indeterminate, eq.oracle_zero_points
                );
            }
        }
        if !c.classification.is_empty() {
            let disagree = c
                .classification
                .iter()
                .filter(|r| r.class.as_ref().and_then(|k| k.agrees) == Some(false))
                .count();
            let _ = writeln!(
                s,
                "    {} basepoints classified, {} disagree with the criterion",
                c.classification.len(),
                disagree
            );
        }
        for l in &c.ledger {
            let _ = writeln!(
                s,
                "    ledger {}: {} -> {} (err {} -> {})",
                l.equation,
                l.printed,
                l.corrected,
                opt(l.err_before),
                opt(l.err_after)
            );
        }
    }
    let _ = writeln!(s, "exit code {}", report.exit_code);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin;

    fn pts(n: usize) -> Vec<Vec<f64>> {
        sample_box(&[(-1.0, 1.0), (-1.0, 1.0)], n, 9).unwrap()
    }

    #[test]
    fn identical_fields_match() {
        let f = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![p[0].sin(), p[1] * p[0]]) };
        let r = compare_fields("same", f, f, &pts(20), ErrorMetric::Relative { tol: 1e-6, floor: 1e-3 });
        assert_eq!(r.verdict, Verdict::Match);
        assert!(r.max_abs_err.unwrap() <= 1e-15);
    }

    #[test]
    fn injected_fault_names_component() {
        let o = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![p[0], 2.0 + p[1], 0.5]) };
        let c = move |p: &[f64]| -> Result<Vec<f64>> {
            let mut v = o(p)?;
            v[1] += 1e-3;
            Ok(v)
        };
        let r = compare_fields(
            "fault",
            c,
            o,
            &pts(10),
            ErrorMetric::Relative { tol: 1e-6, floor: 1e-3 },
        );
        assert_eq!(r.verdict, Verdict::Mismatch);
        assert_eq!(r.worst_component, Some(1));
    }

    #[test]
    fn failures_are_reported_per_point() {
        let c = |p: &[f64]| -> Result<Vec<f64>> {
            if p[0] > 0.0 {
                Err(Error::Domain { op: "log", value: -1.0 })
            } else {
                Ok(vec![1.0])
            }
        };
        let r = compare_fields(
            "partial",
            c,
            |_| Ok(vec![1.0]),
            &pts(30),
            ErrorMetric::Absolute { tol: 1e-9 },
        );
        assert_eq!(r.verdict, Verdict::Mismatch);
        assert_eq!(r.points.len(), 30);
        assert!(r.points.iter().any(|p| p.error.is_some()));
        assert!(r.points.iter().any(|p| p.error.is_none()));
    }

    fn quick(name: &str, case: CaseId, printed: bool) -> CaseReport {
        let setup = builtin(name).unwrap().build().unwrap();
        let opts = RunOptions {
            samples: 8,
            printed_forms: printed,
            ..RunOptions::default()
        };
        let points = sample_box(setup.space.product().chart(), opts.samples, opts.seed).unwrap();
        run_case(&setup, case, &points, opts)
    }

    #[test]
    fn constant_warpings_pass_everything() {
        let mut cfg = builtin("CFG-A").unwrap();
        cfg.b = crate::config::WarpingSpec::Value("1.5".into());
        cfg.f = crate::config::WarpingSpec::Value("0.5".into());
        let setup = cfg.build().unwrap();
        let r = run_suite(
            &setup,
            RunOptions {
                samples: 6,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!(r.exit_code, 0, "{}", render(&r, Format::Text));
        let incl = r.cases.iter().find(|c| c.case == "inclusion-b").unwrap();
        for p in &incl.fields[0].points {
            assert!(max_abs(p.oracle.as_ref().unwrap()) < 1e-12);
        }
    }

    #[test]
    fn inclusion_on_cfg_a_is_corrected() {
        let c = quick("CFG-A", CaseId::InclusionB, false);
        assert_ne!(c.verdict, Verdict::Mismatch);
        let t2 = &c.fields[1];
        assert!(t2.points.iter().any(|p| max_abs(p.oracle.as_ref().unwrap()) > 1e-3));
        assert!(t2.oracle_frame_gap.unwrap() < FRAME_GAP_TOL);
        assert!(!c.ledger.is_empty());
    }

    #[test]
    fn printed_connection_walks_the_catalog() {
        let c = quick("CFG-A", CaseId::Connection, true);
        assert_eq!(c.verdict, Verdict::CorrectedMatch);
        let entry = &c.ledger[0];
        assert_eq!(entry.equation, "connection");
        assert!(entry.corrected.contains("swapped"));
        assert!(entry.err_before.unwrap() > 1e-3 && entry.err_after.unwrap() <= 1e-9);

        let c = quick("CFG-C", CaseId::Connection, true);
        assert_eq!(c.verdict, Verdict::CorrectedMatch);
        assert!(c.ledger[0].err_before.is_none());
        assert!(c.ledger[0].notes.iter().any(|n| n.contains("not evaluable")));
    }

    #[test]
    fn renderings_agree_on_content() {
        let setup = builtin("CFG-B").unwrap().build().unwrap();
        let mut setup = setup;
        setup.cases = vec![CaseId::ProjSecond, CaseId::Corollaries];
        let r = run_suite(
            &setup,
            RunOptions {
                samples: 4,
                ..RunOptions::default()
            },
        )
        .unwrap();
        let back: SuiteReport = serde_json::from_str(&render(&r, Format::Json)).unwrap();
        assert_eq!(back, r);
        let csv = render(&r, Format::Csv);
        assert_eq!(csv.lines().filter(|l| l.starts_with("proj-second,")).count(), 8);
        assert!(render(&r, Format::Text).contains("proj-second"));
    }
}
