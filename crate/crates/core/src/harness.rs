//! Inequality battery over body families, one CSV row per
//! (family, dim, seed, check).

use crate::body::ConvexBody;
use crate::constants::{LEMMA1_RATIO_MAX, MC_BAND, THEOREM3_C};
use crate::constructions::{lemma4_shift, theorem3_ratio_scan, CertKind};
use crate::error::{Error, Result};
use crate::families::{CounterexamplePair, Family};
use crate::linalg::{self, Vector};
use crate::measure;
use crate::positions;
use crate::sampling::{draw, estimate_many, pool, Distribution, SamplerConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const COUNTEREXAMPLE: &str = "cylinder-counterexample";

/// Registered checks, in the order rows are emitted.
pub const CHECKS: [&str; 13] = [
    "estimator_ball",
    "lemma1_ratio",
    "rogers_shephard",
    "santalo_product",
    "sandwich",
    "urysohn",
    "dk_bound",
    "john_sandwich",
    "contraction",
    "lemma4",
    "theorem3_ratio",
    "counterexample",
    "gluskin_inradius",
];

fn default_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub families: Vec<String>,
    pub dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub checks: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl SuiteSpec {
    pub fn from_str(s: &str) -> Result<Self> {
        let spec: SuiteSpec = serde_json::from_str(s).map_err(|e| Error::Parse(format!("suite: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for f in &self.families {
            if f != COUNTEREXAMPLE {
                Family::parse(f)?;
            }
        }
        for c in &self.checks {
            if !CHECKS.contains(&c.as_str()) {
                return Err(Error::Parse(format!("unknown check `{c}`")));
            }
        }
        if self.dims.iter().any(|&d| d < 1) {
            return Err(Error::Parse("dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Structural,
    Statistical,
    Regression,
    /// The check does not apply to this body (reported, never a failure).
    Skipped,
    /// The check raised an error; counts as a structural failure.
    Error,
}

impl From<CertKind> for RowKind {
    fn from(k: CertKind) -> Self {
        match k {
            CertKind::Structural => RowKind::Structural,
            CertKind::Statistical => RowKind::Statistical,
            CertKind::Regression => RowKind::Regression,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub family: String,
    pub dim: usize,
    pub seed: u64,
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub kind: RowKind,
    pub passed: bool,
    pub note: String,
}

impl Row {
    /// Counts against the exit status (regression rows only under `strict`).
    pub fn is_failure(&self, strict: bool) -> bool {
        match self.kind {
            RowKind::Structural | RowKind::Statistical | RowKind::Error => !self.passed,
            RowKind::Regression => strict && !self.passed,
            RowKind::Skipped => false,
        }
    }
}

pub const CSV_HEADER: &str = "family,dim,seed,check,value,bound,kind,passed,note";

pub fn to_csv(rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let kind = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{:.12e},{:.12e},{},{},{}\n",
            r.family,
            r.dim,
            r.seed,
            r.check,
            r.value,
            r.bound,
            kind,
            r.passed,
            r.note.replace([',', '\n'], ";")
        ));
    }
    s
}

/// One measured inequality `value <= bound`.
struct Item {
    label: &'static str,
    value: f64,
    bound: f64,
    kind: CertKind,
    note: Option<String>,
}

fn item(label: &'static str, value: f64, bound: f64, kind: CertKind) -> Item {
    Item { label, value, bound, kind, note: None }
}

/// Halfspace count of `K ∩ -K` above which its exact volume is replaced by
/// a radial estimate (vertex enumeration blows up for random polytopes).
const EXACT_INTERSECTION_ROWS: usize = 200;

struct Ctx<'a> {
    body: &'a ConvexBody,
    n: usize,
    seed: u64,
    cfg: SamplerConfig,
}

fn random_subspace(n: usize, m: usize, cfg: &SamplerConfig) -> crate::body::Subspace {
    let g: Vec<Vector> = draw(n, Distribution::Gaussian, &cfg.with_samples(m)).into_iter().map(Vector::from_vec).collect();
    crate::body::Subspace::span(n, &g)
}

fn centered(k: &ConvexBody) -> Result<ConvexBody> {
    k.shifted(&positions::centering_point(k)?)
}

fn unsupported(what: &str) -> Error {
    Error::Unsupported(what.into())
}

fn run_check(check: &str, c: &Ctx) -> Result<Vec<Item>> {
    let n = c.n;
    let nf = n as f64;
    let k = c.body;
    match check {
        "estimator_ball" => {
            if k.as_ellipsoid().is_none() {
                return Err(unsupported("ball-only check"));
            }
            let b = ConvexBody::ball(n);
            let m = measure::estimate_m(&b, &c.cfg)?;
            let l = measure::estimate_ell(&b, &c.cfg)?;
            let chi = linalg::expected_chi(n);
            Ok(vec![
                item("M_ball_minus_1", (m.mean - 1.0).abs(), 1e-12, CertKind::Structural),
                item("ell_ball_vs_chi", (l.mean - chi).abs(), MC_BAND * l.stderr, CertKind::Statistical),
            ])
        }
        "lemma1_ratio" => {
            if k.as_polytope().is_none() || n > 8 {
                return Err(unsupported("exact volumes of polytopes up to dimension 8"));
            }
            let k0 = k.shifted(&positions::santalo_point(k)?)?;
            let hull = k0.conv_union_reflection()?;
            let facets = k0.as_polytope().map_or(0, |p| p.n_facets());
            if k0.is_symmetric() || 2 * facets <= EXACT_INTERSECTION_ROWS {
                let cap = k0.central_intersection()?.volume()?;
                return Ok(vec![item("ratio", (hull.volume()? / cap).powf(1.0 / nf), LEMMA1_RATIO_MAX, CertKind::Regression)]);
            }
            // vol(L) = vol(B)·E‖θ‖_L^{-n}; both volumes on the same directions
            let e = estimate_many(n, Distribution::Sphere, &c.cfg, 2, |x, o| {
                let mx: Vec<f64> = x.iter().map(|v| -v).collect();
                o[0] = hull.gauge(x).powi(-(n as i32));
                o[1] = k0.gauge(x).max(k0.gauge(&mx)).powi(-(n as i32));
            });
            let ratio = e[0].mean / e[1].mean;
            let rel = e[0].stderr / e[0].mean + e[1].stderr / e[1].mean;
            let mut it = item("ratio", ratio.powf(1.0 / nf), LEMMA1_RATIO_MAX, CertKind::Regression);
            it.note = Some(format!("radial estimate, relative stderr of ratio^(1/n) {:.1e}", rel / nf));
            Ok(vec![it])
        }
        "rogers_shephard" => {
            if k.as_polytope().is_none() || n > 8 {
                return Err(unsupported("exact volumes of polytopes up to dimension 8"));
            }
            let ratio = k.difference_body()?.volume()? / k.volume()?;
            Ok(vec![item("ratio", ratio, linalg::binomial(2 * n as u64, n as u64), CertKind::Structural)])
        }
        "santalo_product" => {
            if n > 8 {
                return Err(unsupported("exact polar volumes up to dimension 8"));
            }
            let k0 = centered(k)?;
            let vb = linalg::unit_ball_volume(n);
            let prod = k0.volume()? * k0.polar()?.volume()? / (vb * vb);
            Ok(vec![
                item("product", prod, 1.0, CertKind::Structural),
                item("inverse_product_root", -prod.powf(1.0 / nf), -0.5, CertKind::Regression),
            ])
        }
        "sandwich" => {
            let k0 = centered(k)?;
            k0.require_interior()?;
            // h_{K-K}(u) = h_K(u) + h_K(-u) and the gauge of K ∩ -K is
            // max(‖x‖_K, ‖-x‖_K), so neither body needs a hull
            let est = estimate_many(n, Distribution::Sphere, &c.cfg, 4, |x, o| {
                let mx: Vec<f64> = x.iter().map(|v| -v).collect();
                let (g, gm) = (k0.gauge(x), k0.gauge(&mx));
                let h = k0.support(x);
                o[0] = g;
                o[1] = h;
                o[2] = h + k0.support(&mx);
                o[3] = g.max(gm);
            });
            let (mk, msk, msb, md) = (est[0], est[1], est[2], est[3]);
            let bs = |a: f64, b: f64| MC_BAND * (a * a + b * b).sqrt();
            Ok(vec![
                item("half_mstar_B_le_mstar_K", 0.5 * msb.mean, msk.mean + bs(0.5 * msb.stderr, msk.stderr), CertKind::Statistical),
                item("mstar_K_le_mstar_B", msk.mean, msb.mean + bs(msb.stderr, msk.stderr), CertKind::Statistical),
                item("half_M_D_le_M_K", 0.5 * md.mean, mk.mean + bs(0.5 * md.stderr, mk.stderr), CertKind::Statistical),
                item("M_K_le_M_D", mk.mean, md.mean + bs(md.stderr, mk.stderr), CertKind::Statistical),
            ])
        }
        "urysohn" => {
            let vr = (k.volume()? / linalg::unit_ball_volume(n)).powf(1.0 / nf);
            let k0 = centered(k)?;
            let ms = measure::estimate_mstar(&k0, &c.cfg)?;
            Ok(vec![item("volume_radius_le_mstar", vr, ms.upper(MC_BAND), CertKind::Statistical)])
        }
        "dk_bound" => Ok(vec![item("dk", positions::dk_estimate(k)?, nf + 1e-6, CertKind::Structural)]),
        "john_sandwich" => {
            let e = positions::john_ellipsoid(k)?;
            let kc = k.shifted(e.center())?;
            let l = e.factor();
            // boundary points of the John ellipsoid must lie in K
            let worst = draw(n, Distribution::Sphere, &SamplerConfig::new(c.seed, 1000))
                .iter()
                .map(|p| kc.gauge((l * Vector::from_column_slice(p)).as_slice()))
                .fold(0.0, f64::max);
            Ok(vec![item("john_in_K", worst, 1.0 + 1e-8, CertKind::Structural)])
        }
        "contraction" => {
            let k0 = centered(k)?;
            let norm = measure::operator_norm_to_body(&k0)?;
            let l = measure::estimate_ell(&k0, &c.cfg)?;
            Ok(vec![item("norm_le_ell", norm, l.upper(MC_BAND), CertKind::Regression)])
        }
        "lemma4" => {
            if k.as_polytope().is_none() || n < 2 {
                return Err(unsupported("polytopes of dimension >= 2"));
            }
            let k0 = centered(k)?;
            let f = random_subspace(n, n.div_ceil(2), &c.cfg.derive(41));
            let r = lemma4_shift(&k0, &f, &c.cfg)?;
            let cert = r.ledger.certified.iter().find(|x| x.name == "lemma4.sharp").expect("registered");
            Ok(vec![item("sharp", cert.value, cert.bound, CertKind::Statistical)])
        }
        "theorem3_ratio" => {
            if k.as_polytope().is_none() || n < 2 || n > 8 {
                return Err(unsupported("polytopes of dimension 2..8"));
            }
            let m = (n / 2).max(1);
            let f = random_subspace(n, m, &c.cfg.derive(42));
            let (ratio, _) = theorem3_ratio_scan(k, &f, 60, &c.cfg)?;
            let mf = m as f64;
            let phi = (nf / mf).min(mf.sqrt());
            Ok(vec![item("ratio_root", ratio, THEOREM3_C * phi, CertKind::Regression)])
        }
        "gluskin_inradius" => Err(unsupported("batch check, see gluskin_inradius_rate")),
        "counterexample" => Err(unsupported("counterexample family only")),
        _ => Err(Error::Parse(format!("unknown check `{check}`"))),
    }
}

/// Rows of the cylinder table for ball dimension `n` (bodies in `R^{n+1}`).
pub fn counterexample_items(n: usize, cfg: &SamplerConfig) -> Result<Vec<(&'static str, f64, f64, CertKind)>> {
    let p = CounterexamplePair::new(n)?;
    let nf = n as f64;
    let ratio = (p.b.volume()? / p.d.volume()?).powf(1.0 / (nf + 1.0));
    let target = 2f64.powf(nf / (nf + 1.0));
    let mb = measure::estimate_m(&p.b, cfg)?;
    let md = measure::estimate_m(&p.d, cfg)?;
    let lower = (2.0 / std::f64::consts::PI).sqrt() * 2f64.powi(n as i32) / nf.sqrt();
    Ok(vec![
        ("volume_ratio_exact", (ratio - target).abs(), 1e-9, CertKind::Structural),
        ("M_B_le_1", mb.mean, 1.0 + MC_BAND * mb.stderr, CertKind::Statistical),
        ("M_D_lower", -md.mean, -(lower - MC_BAND * md.stderr), CertKind::Statistical),
    ])
}

/// Fraction of `trials` Gluskin samples (`m = 4n` points) containing `(c/√n) B`.
pub fn gluskin_inradius_rate(n: usize, c: f64, trials: usize, seed: u64) -> Result<f64> {
    let hits: Vec<Result<bool>> = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let k = crate::distances::gluskin_sample(n, 4 * n, false, seed.wrapping_mul(1000).wrapping_add(t as u64))?;
                Ok(crate::distances::inradius(&k)? >= c / (n as f64).sqrt())
            })
            .collect()
    });
    let mut count = 0;
    for h in hits {
        if h? {
            count += 1;
        }
    }
    Ok(count as f64 / trials as f64)
}

fn rows_for(family: &str, n: usize, seed: u64, check: &str, samples: usize) -> Vec<Row> {
    let tag = CHECKS.iter().position(|c| *c == check).unwrap_or(0) as u64;
    let cfg = SamplerConfig::new(seed, samples).derive((n as u64) << 8 | tag);
    let row = |label: &str, value: f64, bound: f64, kind: RowKind, passed: bool, note: String| Row {
        family: family.to_string(),
        dim: n,
        seed,
        check: if label.is_empty() { check.to_string() } else { format!("{check}.{label}") },
        value,
        bound,
        kind,
        passed,
        note,
    };
    let skipped = |why: String| vec![row("", f64::NAN, f64::NAN, RowKind::Skipped, true, why)];
    let failed = |e: Error| vec![row("", f64::NAN, f64::NAN, RowKind::Error, false, e.to_string())];

    if family == COUNTEREXAMPLE {
        if check != "counterexample" {
            return skipped("not applicable to the cylinder pair".into());
        }
        return match counterexample_items(n, &cfg) {
            Ok(items) => items
                .into_iter()
                .map(|(l, v, b, k)| {
                    let c = crate::constructions::Certificate::new(l, v, b, k);
                    row(l, v, b, k.into(), c.passed, String::new())
                })
                .collect(),
            Err(e) => failed(e),
        };
    }
    if check == "counterexample" {
        return skipped("cylinder pair only".into());
    }
    if check == "gluskin_inradius" {
        if family != "gluskin" {
            return skipped("gluskin family only".into());
        }
        let rate = gluskin_inradius_rate(n, crate::constants::GLUSKIN_C, 100, seed);
        return match rate {
            Ok(r) => vec![row("pass_rate", -r, -crate::constants::GLUSKIN_PASS_RATE, RowKind::Regression, r >= crate::constants::GLUSKIN_PASS_RATE, String::new())],
            Err(e) => failed(e),
        };
    }
    let fam = match Family::parse(family) {
        Ok(f) => f,
        Err(e) => return failed(e),
    };
    let body = match fam.build(n, seed) {
        Ok(b) => b,
        Err(Error::Unsupported(why)) => return skipped(why),
        Err(e) => return failed(e),
    };
    let ctx = Ctx { body: &body, n, seed, cfg };
    match run_check(check, &ctx) {
        Ok(items) => items
            .into_iter()
            .map(|it| {
                let c = crate::constructions::Certificate::new(it.label, it.value, it.bound, it.kind);
                row(it.label, it.value, it.bound, it.kind.into(), c.passed, it.note.unwrap_or_default())
            })
            .collect(),
        Err(Error::Unsupported(why)) => skipped(why),
        Err(e) => failed(e),
    }
}

/// Runs the suite; rows are computed in parallel and returned in
/// (family, dim, seed, check) order.
pub fn verify(spec: &SuiteSpec) -> Result<Vec<Row>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for f in &spec.families {
        for &n in &spec.dims {
            for &s in &spec.seeds {
                for c in &spec.checks {
                    jobs.push((f.clone(), n, s, c.clone()));
                }
            }
        }
    }
    let out: Vec<Vec<Row>> =
        pool().install(|| jobs.par_iter().map(|(f, n, s, c)| rows_for(f, *n, *s, c, spec.samples)).collect());
    Ok(out.into_iter().flatten().collect())
}

pub fn any_failure(rows: &[Row], strict: bool) -> bool {
    rows.iter().any(|r| r.is_failure(strict))
}
