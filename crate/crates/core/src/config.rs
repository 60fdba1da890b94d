//! Verification configurations: the JSON schema, validation and the built-in set.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::parse;
use crate::forms::Side;
use crate::geometry::MetricPatch;
use crate::warped::{DwpSpace, Warping};

/// Metric of one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    /// `"euclidean"`, or `"sphere"` for the round metric `dθ² + sin²θ dφ²` on a 2-dim chart.
    Named(String),
    Components {
        components: Vec<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub dim: usize,
    pub chart: Vec<[f64; 2]>,
    pub metric: MetricSpec,
    /// Coordinate names; `x1..xm` on B and `y1..yn` on F when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<String>>,
}

/// A warping function given by its value or, as `{"b2": ...}` / `{"f2": ...}`, by its square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WarpingSpec {
    Value(String),
    Squared {
        #[serde(alias = "b2", alias = "f2")]
        square: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    pub side: Side,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Componentwise relative tolerance for map fields.
    pub rel: f64,
    /// Denominator floor of the relative error; below it the check is absolute at `rel * floor`.
    pub floor: f64,
    /// Absolute tolerance for the connection.
    pub connection: f64,
    /// Absolute tolerance for the curvature relation.
    pub curvature: f64,
    /// Norm tolerance for biharmonic classification.
    pub classify: f64,
    /// Norm below which the codomain conditions and the oracle count as zero.
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: 1e-6,
            floor: 1e-3,
            connection: 1e-9,
            curvature: 1e-8,
            classify: 1e-7,
            zero: 1e-8,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let entries = [
            ("rel", self.rel),
            ("floor", self.floor),
            ("connection", self.connection),
            ("curvature", self.curvature),
            ("classify", self.classify),
            ("zero", self.zero),
        ];
        for (name, v) in entries {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(
                    format!("tolerances.{name}"),
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Selectable verification cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseId {
    Connection,
    Curvature,
    InclusionB,
    InclusionF,
    ProjFirst,
    ProjSecond,
    ProductDom,
    ProductDomMirror,
    ProductCod,
    Corollaries,
}

impl CaseId {
    pub const ALL: [CaseId; 10] = [
        CaseId::Connection,
        CaseId::Curvature,
        CaseId::InclusionB,
        CaseId::InclusionF,
        CaseId::ProjFirst,
        CaseId::ProjSecond,
        CaseId::ProductDom,
        CaseId::ProductDomMirror,
        CaseId::ProductCod,
        CaseId::Corollaries,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Connection => "connection",
            CaseId::Curvature => "curvature",
            CaseId::InclusionB => "inclusion-b",
            CaseId::InclusionF => "inclusion-f",
            CaseId::ProjFirst => "proj-first",
            CaseId::ProjSecond => "proj-second",
            CaseId::ProductDom => "product-dom",
            CaseId::ProductDomMirror => "product-dom-mirror",
            CaseId::ProductCod => "product-cod",
            CaseId::Corollaries => "corollaries",
        }
    }

    /// Parses a comma-separated list of case ids; `all` expands to every case.
    pub fn parse_list(s: &str) -> Result<Vec<CaseId>> {
        if s == "all" {
            return Ok(CaseId::ALL.to_vec());
        }
        s.split(',')
            .map(str::trim)
            .map(|name| {
                CaseId::ALL
                    .iter()
                    .copied()
                    .find(|c| c.as_str() == name)
                    .ok_or_else(|| Error::config("case", format!("unknown case `{name}`")))
            })
            .collect()
    }
}

/// A verification configuration as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "B")]
    pub base: FactorSpec,
    #[serde(rename = "F")]
    pub fiber: FactorSpec,
    pub b: WarpingSpec,
    pub f: WarpingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
    /// Case ids or `"all"`; empty means all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub name: String,
    pub space: DwpSpace,
    pub phi: Option<PhiSpec>,
    pub cases: Vec<CaseId>,
    pub tolerances: Tolerances,
}

fn build_factor(spec: &FactorSpec, path: &str, prefix: &str) -> Result<MetricPatch> {
    if spec.dim == 0 {
        return Err(Error::config(format!("{path}.dim"), "must be at least 1"));
    }
    if spec.chart.len() != spec.dim {
        return Err(Error::config(
            format!("{path}.chart"),
            format!("expected {} intervals, found {}", spec.dim, spec.chart.len()),
        ));
    }
    for (i, [lo, hi]) in spec.chart.iter().enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(
                format!("{path}.chart[{i}]"),
                format!("empty or unbounded interval [{lo}, {hi}]"),
            ));
        }
    }
    let vars = match &spec.vars {
        Some(v) if v.len() != spec.dim => {
            return Err(Error::config(
                format!("{path}.vars"),
                format!("expected {} names, found {}", spec.dim, v.len()),
            ))
        }
        Some(v) => v.clone(),
        None => (1..=spec.dim).map(|i| format!("{prefix}{i}")).collect(),
    };
    let chart: Vec<(f64, f64)> = spec.chart.iter().map(|[a, b]| (*a, *b)).collect();
    let at = |e: Error| Error::config(format!("{path}.metric"), e.to_string());
    match &spec.metric {
        MetricSpec::Named(n) if n == "euclidean" => MetricPatch::euclidean(path, vars, chart).map_err(at),
        MetricSpec::Named(n) if n == "sphere" => {
            if spec.dim != 2 {
                return Err(Error::config(format!("{path}.metric"), "sphere needs dim 2"));
            }
            MetricPatch::sphere(path, [vars[0].as_str(), vars[1].as_str()], chart).map_err(at)
        }
        MetricSpec::Named(n) => Err(Error::config(format!("{path}.metric"), format!("unknown metric `{n}`"))),
        MetricSpec::Components { components } => {
            if components.len() != spec.dim || components.iter().any(|r| r.len() != spec.dim) {
                return Err(Error::config(
                    format!("{path}.metric.components"),
                    format!("expected a {0}x{0} matrix", spec.dim),
                ));
            }
            for (i, row) in components.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    parse(e, &vars)
                        .map_err(|err| Error::config(format!("{path}.metric.components[{i}][{j}]"), err.to_string()))?;
                }
            }
            MetricPatch::from_strings(path, &vars, chart, components).map_err(at)
        }
    }
}

fn build_warping(spec: &WarpingSpec, path: &str, vars: &[String]) -> Result<Warping> {
    let at = |e: Error| Error::config(path, e.to_string());
    Ok(match spec {
        WarpingSpec::Value(s) => Warping::Value(parse(s, vars).map_err(at)?),
        WarpingSpec::Squared { square } => Warping::Squared(parse(square, vars).map_err(at)?),
    })
}

impl VerifyConfig {
    pub fn from_json(text: &str, path: &str) -> Result<VerifyConfig> {
        serde_json::from_str(text).map_err(|e| Error::config(path, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<VerifyConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        VerifyConfig::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every field and builds the doubly warped product.
    pub fn build(&self) -> Result<Setup> {
        let base = build_factor(&self.base, "B", "x")?;
        let fiber = build_factor(&self.fiber, "F", "y")?;
        let b = build_warping(&self.b, "b", base.vars())?;
        let f = build_warping(&self.f, "f", fiber.vars())?;
        let space = DwpSpace::new(base, fiber, b, f).map_err(|e| Error::config("B.vars/F.vars", e.to_string()))?;
        if let Some(phi) = &self.phi {
            let patch = match phi.side {
                Side::B => space.base(),
                Side::F => space.fiber(),
            };
            if phi.components.len() != patch.dim() {
                return Err(Error::config(
                    "phi.components",
                    format!("expected {} components, found {}", patch.dim(), phi.components.len()),
                ));
            }
            for (i, c) in phi.components.iter().enumerate() {
                parse(c, patch.vars()).map_err(|e| Error::config(format!("phi.components[{i}]"), e.to_string()))?;
            }
        }
        self.tolerances.validate()?;
        let mut cases = vec![];
        if self.cases.is_empty() {
            cases = CaseId::ALL.to_vec();
        }
        for (i, c) in self.cases.iter().enumerate() {
            let parsed = CaseId::parse_list(c)
                .map_err(|_| Error::config(format!("cases[{i}]"), format!("unknown case `{c}`")))?;
            cases.extend(parsed);
        }
        cases.sort();
        cases.dedup();
        Ok(Setup {
            name: self.name.clone().unwrap_or_else(|| "custom".into()),
            space,
            phi: self.phi.clone(),
            cases,
            tolerances: self.tolerances,
        })
    }
}

fn interval(lo: f64, hi: f64) -> FactorSpec {
    FactorSpec {
        dim: 1,
        chart: vec![[lo, hi]],
        metric: MetricSpec::Named("euclidean".into()),
        vars: None,
    }
}

fn value(s: &str) -> WarpingSpec {
    WarpingSpec::Value(s.into())
}

fn named(name: &str, base: FactorSpec, fiber: FactorSpec, b: WarpingSpec, f: WarpingSpec) -> VerifyConfig {
    VerifyConfig {
        name: Some(name.into()),
        base,
        fiber,
        b,
        f,
        phi: None,
        cases: vec![],
        tolerances: Tolerances::default(),
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 6] = ["CFG-A", "CFG-B", "CFG-C", "CFG-SWAP", "CFG-C-SWAP", "CFG-POLY"];

/// Seed fixing the coefficients of `CFG-POLY`.
pub const POLY_SEED: u64 = 7;

fn swap(cfg: VerifyConfig, name: &str) -> VerifyConfig {
    // B and F exchange places; coordinate names follow their factor
    let rename = |spec: &FactorSpec, from: &str, to: &str| -> (FactorSpec, Vec<(String, String)>) {
        let olds: Vec<String> = spec
            .vars
            .clone()
            .unwrap_or_else(|| (1..=spec.dim).map(|i| format!("{from}{i}")).collect());
        let news: Vec<String> = (1..=spec.dim).map(|i| format!("{to}{i}")).collect();
        let map: Vec<(String, String)> = olds.into_iter().zip(news).collect();
        let mut out = spec.clone();
        out.vars = None;
        if let MetricSpec::Components { components } = &mut out.metric {
            for e in components.iter_mut().flatten() {
                *e = rename_vars(e, &map);
            }
        }
        (out, map)
    };
    let (new_base, fmap) = rename(&cfg.fiber, "y", "x");
    let (new_fiber, bmap) = rename(&cfg.base, "x", "y");
    let retarget = |w: &WarpingSpec, map: &[(String, String)]| match w {
        WarpingSpec::Value(s) => WarpingSpec::Value(rename_vars(s, map)),
        WarpingSpec::Squared { square } => WarpingSpec::Squared {
            square: rename_vars(square, map),
        },
    };
    VerifyConfig {
        name: Some(name.into()),
        base: new_base,
        fiber: new_fiber,
        b: retarget(&cfg.f, &fmap),
        f: retarget(&cfg.b, &bmap),
        phi: None,
        cases: vec![],
        tolerances: cfg.tolerances,
    }
}

/// Replaces whole identifiers.
fn rename_vars(src: &str, map: &[(String, String)]) -> String {
    let mut out = String::new();
    let mut ident = String::new();
    let flush = |ident: &mut String, out: &mut String| {
        if !ident.is_empty() {
            let r = map
                .iter()
                .find(|(a, _)| a == ident)
                .map(|(_, b)| b.as_str())
                .unwrap_or(ident);
            out.push_str(r);
            ident.clear();
        }
    };
    for ch in src.chars() {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            if ident.is_empty() && ch.is_ascii_digit() {
                out.push(ch);
            } else {
                ident.push(ch);
            }
        } else {
            flush(&mut ident, &mut out);
            out.push(ch);
        }
    }
    flush(&mut ident, &mut out);
    out
}

fn poly_config() -> VerifyConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(POLY_SEED);
    let mut c = || -> f64 { (rng.gen_range(-0.3..0.3_f64) * 1000.0).round() / 1000.0 };
    let mut metric = |u: &str, v: &str| -> Vec<Vec<String>> {
        let off = format!("{}*{u}*{v}", c() / 3.0);
        vec![
            vec![format!("1.2+{}*{u}^2+{}*{v}", c().abs(), c()), off.clone()],
            vec![off, format!("1.1+{}*{v}^2+{}*{u}", c().abs(), c())],
        ]
    };
    let gb = metric("x1", "x2");
    let gf = metric("y1", "y2");
    let mut warp = |u: &str, v: &str| format!("1.5+{}*{u}+{}*{v}^2+{}*{u}*{v}", c(), c(), c());
    let b = warp("x1", "x2");
    let f2 = warp("y1", "y2");
    let factor = |g| FactorSpec {
        dim: 2,
        chart: vec![[-1.0, 1.0]; 2],
        metric: MetricSpec::Components { components: g },
        vars: None,
    };
    let mut out = named(
        "CFG-POLY",
        factor(gb),
        factor(gf),
        value(&b),
        WarpingSpec::Squared { square: f2 },
    );
    // fold `+-` so the stored expressions read naturally
    for e in out
        .base
        .metric_components_mut()
        .chain(out.fiber.metric_components_mut())
    {
        *e = e.replace("+-", "-");
    }
    for w in [&mut out.b, &mut out.f] {
        match w {
            WarpingSpec::Value(s) | WarpingSpec::Squared { square: s } => *s = s.replace("+-", "-"),
        }
    }
    out
}

impl FactorSpec {
    fn metric_components_mut(&mut self) -> impl Iterator<Item = &mut String> {
        let v: Vec<&mut String> = match &mut self.metric {
            MetricSpec::Components { components } => components.iter_mut().flatten().collect(),
            MetricSpec::Named(_) => vec![],
        };
        v.into_iter()
    }
}

/// A built-in configuration by name.
pub fn builtin(name: &str) -> Result<VerifyConfig> {
    let cfg_a = || {
        named(
            "CFG-A",
            interval(-1.0, 1.0),
            interval(-1.0, 1.0),
            value("exp(x1)"),
            value("exp(y1)"),
        )
    };
    let cfg_c = || {
        named(
            "CFG-C",
            FactorSpec {
                dim: 2,
                chart: vec![[0.3, 2.8], [-3.0, 3.0]],
                metric: MetricSpec::Named("sphere".into()),
                vars: None,
            },
            interval(-1.0, 1.0),
            value("2+cos(x1)"),
            value("1+y1^2"),
        )
    };
    Ok(match name {
        "CFG-A" => cfg_a(),
        "CFG-B" => named(
            "CFG-B",
            interval(-1.0, 1.0),
            interval(-1.0, 1.0),
            value("1"),
            WarpingSpec::Squared {
                square: "2+sin(y1)".into(),
            },
        ),
        "CFG-C" => cfg_c(),
        "CFG-SWAP" => swap(cfg_a(), "CFG-SWAP"),
        "CFG-C-SWAP" => swap(cfg_c(), "CFG-C-SWAP"),
        "CFG-POLY" => poly_config(),
        other => {
            let mut known = String::new();
            for n in BUILTIN_NAMES {
                let _ = write!(known, " {n}");
            }
            return Err(Error::config(
                "config",
                format!("unknown built-in `{other}`; known:{known}"),
            ));
        }
    })
}
