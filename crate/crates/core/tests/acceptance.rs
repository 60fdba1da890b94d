//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use warpcheck::config::{builtin, CaseId, Setup};
use warpcheck::forms::{
    classify_inclusion, codomain_condition_field, inclusion_map, product_domain_fields, product_map_codomain,
    product_map_domain, projection_fields, HarmonicFactorMap, Side, Verdict as ClassVerdict,
};
use warpcheck::geometry::MetricPatch;
use warpcheck::maps::{bitension_oracle, tension, SmoothMap};
use warpcheck::sampling::sample_box;
use warpcheck::verify::{render, run_case, run_suite, CaseReport, Format, RunOptions, Verdict};
use warpcheck::warped::{DwpSpace, Warping};
use warpcheck::{parse, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn setup(name: &str) -> Setup {
    builtin(name).unwrap().build().unwrap()
}

fn points(s: &Setup, n: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_box(s.space.product().chart(), n, seed).unwrap()
}

fn case(s: &Setup, id: CaseId, n: usize) -> CaseReport {
    let opts = RunOptions {
        samples: n,
        ..RunOptions::default()
    };
    run_case(s, id, &points(s, n, opts.seed), opts)
}

fn field_max_abs(c: &CaseReport, label: &str) -> f64 {
    c.fields
        .iter()
        .find(|f| f.field == label)
        .and_then(|f| f.max_abs_err)
        .unwrap_or(f64::INFINITY)
}

fn line(a: f64) -> MetricPatch {
    MetricPatch::euclidean("I", vec!["x1".into()], vec![(-a, a)]).unwrap()
}

fn interval(var: &str, lo: f64, hi: f64) -> MetricPatch {
    MetricPatch::euclidean(var, vec![var.into()], vec![(lo, hi)]).unwrap()
}

fn warp_value(src: &str, var: &str) -> Warping {
    Warping::Value(parse(src, &[var]).unwrap())
}

fn warp_square(src: &str, var: &str) -> Warping {
    Warping::Squared(parse(src, &[var]).unwrap())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn g_norm(patch: &MetricPatch, at: &[f64], v: &[f64]) -> f64 {
    let g = patch.metric_at(at).unwrap();
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i * n + j] * v[i] * v[j];
        }
    }
    s.sqrt()
}

// 1. Connection: corrected closed form vs Christoffel oracle, 1e-9 absolute.
fn connection() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for name in ["CFG-A", "CFG-C", "CFG-POLY"] {
        let c = case(&setup(name), CaseId::Connection, 100);
        let e = field_max_abs(&c, "connection");
        ok &= e <= 1e-9 && c.fields[0].candidate == "swapped-lifted";
        worst = worst.max(e);
    }
    outcome(ok, format!("max abs error {worst:.2e} over CFG-A, CFG-C, CFG-POLY"))
}

// 2. Curvature relation vs R-bar - R, plus the f = 1 reduction, 1e-8 absolute.
fn curvature() -> Outcome {
    let (mut full, mut reduced): (f64, f64) = (0.0, 0.0);
    let mut ledgered = true;
    for name in ["CFG-A", "CFG-C", "CFG-POLY"] {
        let c = case(&setup(name), CaseId::Curvature, 100);
        full = full.max(field_max_abs(&c, "curvature-relation"));
        reduced = reduced.max(field_max_abs(&c, "curvature-relation.f-one"));
        ledgered &= c.ledger.iter().any(|l| l.equation == "curvature-relation");
    }
    outcome(
        full <= 1e-8 && reduced <= 1e-8 && ledgered,
        format!("implemented reading {full:.2e}, f=1 reduction {reduced:.2e}, printed-form ledger entries present: {ledgered}"),
    )
}

// 3. Inclusion closed forms vs oracle, 1e-6 relative, Delta(ln f) correction recorded.
fn inclusions() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut ln_f_note = false;
    for name in ["CFG-A", "CFG-B", "CFG-SWAP"] {
        let s = setup(name);
        for id in [CaseId::InclusionB, CaseId::InclusionF] {
            let c = case(&s, id, 100);
            ok &= c.verdict != Verdict::Mismatch;
            for f in &c.fields {
                worst = worst.max(f.max_rel_err.unwrap_or(f64::INFINITY));
            }
            ln_f_note |= c
                .ledger
                .iter()
                .any(|l| l.equation == "inclusion-f.bitension" && l.notes.iter().any(|n| n.contains("Delta(ln f)")));
        }
    }
    outcome(
        ok && worst <= 1e-6 && ln_f_note,
        format!("max rel error {worst:.2e}; Delta(ln f) ledger entry present: {ln_f_note}"),
    )
}

fn witness_space() -> DwpSpace {
    DwpSpace::new(
        line(1.0),
        interval("y1", -1.0, 1.0),
        warp_value("1", "x1"),
        warp_square("2+sin(y1)", "y1"),
    )
    .unwrap()
}

// 4. Proper biharmonic inclusion at y0 = 0, not biharmonic at y0 = 0.5.
fn witness() -> Outcome {
    let s = witness_space();
    let xs = sample_box(&[(-1.0, 1.0)], 20, 4).unwrap();
    let measure = |y0: f64| -> (f64, f64, f64) {
        let map = inclusion_map(&s, Side::B, &[y0]).unwrap();
        let (mut t_min, mut t2_min, mut t2_max) = (f64::INFINITY, f64::INFINITY, 0.0_f64);
        for x in &xs {
            let q = map.image(x).unwrap();
            let t = g_norm(s.product(), &q, &tension(&map, x).unwrap());
            let t2 = g_norm(s.product(), &q, &bitension_oracle(&map, x).unwrap());
            t_min = t_min.min(t);
            t2_min = t2_min.min(t2);
            t2_max = t2_max.max(t2);
        }
        (t_min, t2_min, t2_max)
    };
    let (t0, _, t2_0) = measure(0.0);
    let (_, t2_half, _) = measure(0.5);
    outcome(
        t0 >= 0.4 && t2_0 <= 1e-8 && t2_half >= 1e-3,
        format!("y0=0: |tau| >= {t0:.3}, |tau2| <= {t2_0:.2e}; y0=0.5: |tau2| >= {t2_half:.3e}"),
    )
}

// 5. b = 1, f^2 = y on (1,3): every basepoint is proper biharmonic.
fn constant_norm_family() -> Outcome {
    let s = DwpSpace::new(
        line(1.0),
        interval("y1", 1.0, 3.0),
        warp_value("1", "x1"),
        warp_square("y1", "y1"),
    )
    .unwrap();
    let own = sample_box(&[(-1.0, 1.0)], 5, 11).unwrap();
    let bases = sample_box(&[(1.0, 3.0)], 50, 12).unwrap();
    let proper = bases
        .iter()
        .filter(|y| {
            let c = classify_inclusion(&s, Side::B, y, 1e-7, &own).unwrap();
            c.verdict == ClassVerdict::ProperBiharmonic && c.agrees == Some(true)
        })
        .count();
    outcome(proper == 50, format!("{proper}/50 basepoints proper biharmonic"))
}

fn corpus(kind: usize, a: f64, var: &str) -> String {
    match kind {
        0 => format!("exp({a}*{var})"),
        1 => format!("2+sin({a}*{var})"),
        2 => format!("1+{var}^2"),
        _ => format!("2+{var}"),
    }
}

// 6. Non-existence: no proper biharmonic inclusion when b and f both vary.
fn non_existence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let own = sample_box(&[(-1.0, 1.0)], 5, 13).unwrap();
    let mut proper = 0;
    let mut checked = 0;
    let mut disagreements = 0;
    for pair in 0..20 {
        let a: f64 = (rng.gen_range(0.3..2.0_f64) * 100.0).round() / 100.0;
        let c: f64 = (rng.gen_range(0.3..2.0_f64) * 100.0).round() / 100.0;
        let b = corpus(rng.gen_range(0..4), a, "x1");
        let f = corpus(rng.gen_range(0..4), c, "y1");
        let s = DwpSpace::new(
            line(1.0),
            interval("y1", -1.0, 1.0),
            warp_value(&b, "x1"),
            warp_value(&f, "y1"),
        )
        .unwrap();
        for side in [Side::B, Side::F] {
            for base in sample_box(&[(-1.0, 1.0)], 10, 100 + pair).unwrap() {
                let cl = classify_inclusion(&s, side, &base, 1e-7, &own).unwrap();
                checked += 1;
                proper += usize::from(cl.verdict == ClassVerdict::ProperBiharmonic);
                disagreements += usize::from(cl.agrees == Some(false));
            }
        }
    }
    outcome(
        proper == 0 && disagreements == 0,
        format!("{proper} proper biharmonic among {checked} classified inclusions (20 pairs), {disagreements} criterion disagreements"),
    )
}

fn in_image(map: &SmoothMap, chart: &[(f64, f64)], n: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_box(chart, 20 * n, seed)
        .unwrap()
        .into_iter()
        .filter(|p| map.image(p).is_ok())
        .take(n)
        .collect()
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-3))
        .fold(0.0, f64::max)
}

// 7. Projections and product maps.
fn projections_and_products() -> Outcome {
    let mut proj_err: f64 = 0.0;
    let mut split_err: f64 = 0.0;
    for name in ["CFG-A", "CFG-C"] {
        let s = setup(name).space;
        let (m, n) = (s.m(), s.n());
        let pts = sample_box(s.product().chart(), 100, 21).unwrap();
        let id_f = HarmonicFactorMap::new(&s, Side::F, s.fiber().vars()).unwrap();
        let id_b = HarmonicFactorMap::new(&s, Side::B, s.base().vars()).unwrap();
        let psi_bar = product_map_domain(&s, &id_f).unwrap();
        let psi_tilde = product_map_domain(&s, &id_b).unwrap();
        let (_, first) = projection_fields(&s, Side::B);
        let (_, second) = projection_fields(&s, Side::F);
        for p in &pts {
            let bar = bitension_oracle(&psi_bar, p).unwrap();
            let tilde = bitension_oracle(&psi_tilde, p).unwrap();
            let c1 = first.evaluate(p).unwrap();
            let c2 = second.evaluate(p).unwrap();
            proj_err = proj_err
                .max(rel_gap(&c1, &bar[..m]))
                .max(rel_gap(&c2, &tilde[m..m + n]));
            let joined: Vec<f64> = c1.iter().chain(&c2).copied().collect();
            let scale = max_abs(&tilde).max(1.0);
            split_err =
                split_err.max(max_abs(&joined.iter().zip(&tilde).map(|(a, b)| a - b).collect::<Vec<_>>()) / scale);
        }
    }
    // phi(y) = 2y on a wide fiber chart, sampled where the image stays inside
    let s = DwpSpace::new(
        line(1.0),
        interval("y1", -4.0, 4.0),
        warp_value("exp(x1)", "x1"),
        warp_value("2+sin(y1)", "y1"),
    )
    .unwrap();
    let phi = HarmonicFactorMap::new(&s, Side::F, &["2*y1"]).unwrap();
    let psi = product_map_domain(&s, &phi).unwrap();
    let (_, full) = product_domain_fields(&s, &phi);
    let mut dom_err: f64 = 0.0;
    let pts = in_image(&psi, s.product().chart(), 100, 22);
    for p in &pts {
        dom_err = dom_err.max(rel_gap(&full.evaluate(p).unwrap(), &bitension_oracle(&psi, p).unwrap()));
    }
    outcome(
        proj_err <= 1e-6 && dom_err <= 1e-6 && split_err <= 1e-9 && pts.len() == 100,
        format!(
            "projections {proj_err:.2e} rel; phi=2y decomposition {dom_err:.2e} rel; identity split {split_err:.2e} (scaled abs)"
        ),
    )
}

fn codomain_zero_config(s: &DwpSpace, phi: &HarmonicFactorMap, pts: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let map = product_map_codomain(s, phi)?;
    let field = codomain_condition_field(s, phi)?;
    let mut oracle: f64 = 0.0;
    let mut readings = vec![0.0_f64; field.candidates.len()];
    for p in pts {
        oracle = oracle.max(max_abs(&bitension_oracle(&map, p)?));
        for (r, c) in readings.iter_mut().zip(&field.candidates) {
            *r = r.max(max_abs(&c.evaluate(p)?));
        }
    }
    Ok((oracle, readings))
}

// 8. Warped codomain: conditions vanish where the oracle bitension vanishes.
fn codomain_equivalence() -> Outcome {
    let tol = 1e-8;
    let mut lines = vec![];
    let mut ok = true;

    let mut configs: Vec<(String, DwpSpace, Vec<String>)> = vec![(
        "b,f constant".into(),
        DwpSpace::new(
            line(1.0),
            interval("y1", -1.0, 1.0),
            warp_value("1.5", "x1"),
            warp_value("0.7", "y1"),
        )
        .unwrap(),
        vec!["0.5*y1+0.1".into()],
    )];
    // sweep b = exp(a x) with f^2 = y on (1,3) and phi = identity
    let mut found = None;
    for step in 0..=8 {
        let a = 0.25 * step as f64;
        let s = DwpSpace::new(
            line(1.0),
            interval("y1", 1.0, 3.0),
            warp_value(&format!("exp({a}*x1)"), "x1"),
            warp_square("y1", "y1"),
        )
        .unwrap();
        let phi = HarmonicFactorMap::new(&s, Side::F, &["y1"]).unwrap();
        let pts = sample_box(s.unwarped().chart(), 30, 31).unwrap();
        let (oracle, _) = codomain_zero_config(&s, &phi, &pts).unwrap();
        if oracle <= tol && found.is_none() {
            found = Some((a, s));
        }
    }
    match found {
        Some((a, s)) => configs.push((format!("sweep a={a}, f^2=y, phi=id"), s, vec!["y1".into()])),
        None => {
            ok = false;
            lines.push("sweep found no zero configuration".to_string());
        }
    }
    configs.push((
        "f=1, b=exp(x), phi constant".into(),
        DwpSpace::new(
            line(1.0),
            interval("y1", -1.0, 1.0),
            warp_value("exp(x1)", "x1"),
            warp_value("1", "y1"),
        )
        .unwrap(),
        vec!["0.3".into()],
    ));
    for (label, s, comps) in &configs {
        let phi = HarmonicFactorMap::new(s, Side::F, comps).unwrap();
        let map = product_map_codomain(s, &phi).unwrap();
        let pts = in_image(&map, s.unwarped().chart(), 100, 32);
        let (oracle, readings) = codomain_zero_config(s, &phi, &pts).unwrap();
        let passing = readings.iter().filter(|r| **r <= tol).count();
        ok &= oracle <= tol && passing >= 1;
        lines.push(format!(
            "{label}: oracle {oracle:.1e}, readings a {:.1e} b {:.1e}",
            readings[0], readings[1]
        ));
    }
    outcome(ok, lines.join("; "))
}

// 9. Harmonic maps are biharmonic.
fn harmonic_maps() -> Outcome {
    let r2 = MetricPatch::euclidean("R2", vec!["u".into(), "v".into()], vec![(-1.0, 1.0); 2]).unwrap();
    let r2_wide = MetricPatch::euclidean("R2w", vec!["u".into(), "v".into()], vec![(-4.0, 4.0); 2]).unwrap();
    let r3 = MetricPatch::euclidean("R3", vec!["p".into(), "q".into(), "r".into()], vec![(-4.0, 4.0); 3]).unwrap();
    let r1 = MetricPatch::euclidean("R1", vec!["t".into()], vec![(-1.0, 1.0)]).unwrap();
    let r1_wide = MetricPatch::euclidean("R1w", vec!["t".into()], vec![(-5.0, 5.0)]).unwrap();
    let pi = std::f64::consts::PI;
    let s2 = MetricPatch::sphere("S2", ["th", "ph"], vec![(0.3, pi - 0.3), (-3.0, 3.0)]).unwrap();
    let poly = setup("CFG-POLY").space;
    let cfg_c = setup("CFG-C").space;
    let maps: Vec<(&str, SmoothMap)> = vec![
        ("identity R2", SmoothMap::identity(&r2)),
        ("identity S2", SmoothMap::identity(&s2)),
        ("identity curved base", SmoothMap::identity(poly.base())),
        ("identity warped product", SmoothMap::identity(cfg_c.product())),
        (
            "linear R1 -> R1",
            SmoothMap::from_strings(r1.clone(), r1_wide, &["3*t+1"]).unwrap(),
        ),
        (
            "linear R2 -> R3",
            SmoothMap::from_strings(r2.clone(), r3, &["u+v", "2*u-v", "0.5*v"]).unwrap(),
        ),
        (
            "rotation R2",
            SmoothMap::from_strings(r2.clone(), r2_wide, &["0.6*u-0.8*v", "0.8*u+0.6*v"]).unwrap(),
        ),
        (
            "S2 rotation about the axis",
            SmoothMap::from_strings(s2.clone(), s2.clone(), &["th", "ph+0.5"]).unwrap(),
        ),
        (
            "S2 reflection in the equator",
            SmoothMap::from_strings(s2.clone(), s2.clone(), &["pi-th", "ph"]).unwrap(),
        ),
        (
            "S2 reflection in a meridian",
            SmoothMap::from_strings(s2.clone(), s2, &["th", "-ph"]).unwrap(),
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut short = vec![];
    for (i, (name, map)) in maps.iter().enumerate() {
        let pts = in_image(map, map.source().chart(), 100, 40 + i as u64);
        if pts.len() < 100 {
            short.push(*name);
        }
        for p in &pts {
            worst = worst.max(norm(&bitension_oracle(map, p).unwrap()));
        }
    }
    outcome(
        worst <= 1e-9 && short.is_empty(),
        format!("max |tau2| {worst:.2e} over {} maps x 100 points", maps.len()),
    )
}

// 10. Byte-identical reports modulo timestamp.
fn determinism() -> Outcome {
    let s = setup("CFG-A");
    let opts = RunOptions::default();
    let strip = |mut r: warpcheck::verify::SuiteReport| {
        r.timestamp = 0;
        (render(&r, Format::Json), render(&r, Format::Csv))
    };
    let a = strip(run_suite(&s, opts).unwrap());
    let b = strip(run_suite(&s, opts).unwrap());
    outcome(
        a == b,
        format!(
            "json {} bytes, csv {} bytes, identical: {}",
            a.0.len(),
            a.1.len(),
            a == b
        ),
    )
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("connection closed form", Some(Duration::from_secs(10)), connection),
        ("curvature relation", Some(Duration::from_secs(30)), curvature),
        ("inclusion closed forms", Some(Duration::from_secs(60)), inclusions),
        ("proper biharmonic witness", None, witness),
        ("constant-norm family", None, constant_norm_family),
        ("non-existence", None, non_existence),
        ("projections and product maps", None, projections_and_products),
        ("warped codomain equivalence", None, codomain_equivalence),
        ("harmonic implies biharmonic", None, harmonic_maps),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    let mut err = std::io::stderr();
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        let budget = limit.map(|l| format!(" (limit {}s)", l.as_secs())).unwrap_or_default();
        let _ = writeln!(
            err,
            "criterion {:>2} {:<30} {}  {}  [{:.2}s{}]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget
        );
    }
    let _ = writeln!(err, "acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
