//! Seeded Monte Carlo experiments.
//!
//! Replicate `r` at order `n` draws from its own stream
//! `derive_seed(seed, [n, r])`, and results are reduced in replicate order,
//! so a report depends only on (family, grid, replicates, seed).

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rayon::prelude::*;
use serde::Serialize;

use crate::degseq::DegreeSequence;
use crate::error::{Error, Result};
use crate::exact;
use crate::multigraph::{expected_loops, expected_pairs, HalfEdgeLayout, Multigraph, Pattern};
use crate::rng::{derive_seed, seeded, GraphRng};
use crate::samplers::{sample_configuration_in, sample_uniform_simple, DEFAULT_MAX_ATTEMPTS};
use crate::switching::{run_to_simple, BadEdgeRule, SwitchTrace, SwitchVariant};

/// Largest `n` at which the path experiment evaluates zeta counts.
pub const ZETA_MAX_N: usize = 2000;

/// Half-edge cap for the exact part of the TV experiment.
pub const TV_EXACT_MAX_HALF_EDGES: u64 = 12;

const PERMUTATIONS: usize = 20;
const BOOTSTRAPS: usize = 50;

/// Stream tags for draws that are not tied to a replicate.
const SEQUENCE_STREAM: u64 = u64::MAX;
const RESAMPLE_STREAM: u64 = u64::MAX - 1;
const UNIFORM_STREAM: u64 = u64::MAX - 2;

/// Named generator of one degree sequence per order `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum SequenceFamily {
    /// Every vertex has degree `r`.
    Regular(u32),
    /// Perfect matchings.
    Ones,
    /// `round(p n)` vertices of degree `a`, the rest of degree `b`.
    Mix {
        p: f64,
        a: u32,
        b: u32,
    },
    /// `(m, m, 1, ..., 1)` with `m = floor(sqrt(a n))`.
    Eo {
        a: f64,
    },
    /// I.i.d. degrees with `P(k) ~ k^-gamma` on `1..=floor(sqrt n)`.
    PowerLaw {
        gamma: f64,
    },
    /// One vertex of degree `floor(n^exp)`, the rest of degree `base`.
    Hub {
        exp: f64,
        base: u32,
    },
    Fixed(DegreeSequence),
}

fn params(body: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for part in body.split(',').filter(|s| !s.is_empty()) {
        let (k, v) =
            part.split_once('=').ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got '{part}'")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take<T: FromStr>(map: &mut HashMap<String, String>, key: &str, default: Option<T>) -> Result<T> {
    match map.remove(key) {
        Some(v) => v.parse().map_err(|_| Error::InvalidParameter(format!("bad value for {key}: '{v}'"))),
        None => default.ok_or_else(|| Error::InvalidParameter(format!("missing parameter {key}"))),
    }
}

fn no_extra(map: HashMap<String, String>) -> Result<()> {
    match map.keys().next() {
        Some(k) => Err(Error::InvalidParameter(format!("unknown parameter {k}"))),
        None => Ok(()),
    }
}

impl FromStr for SequenceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s.split_once(':').unwrap_or((s, ""));
        let fam = match head {
            "regular" => {
                let r = body.strip_prefix("r=").unwrap_or(body);
                SequenceFamily::Regular(r.parse().map_err(|_| Error::InvalidParameter(format!("bad degree '{r}'")))?)
            }
            "ones" => SequenceFamily::Ones,
            "mix" => {
                let mut m = params(body)?;
                let fam = SequenceFamily::Mix {
                    p: take(&mut m, "p", None)?,
                    a: take(&mut m, "a", None)?,
                    b: take(&mut m, "b", None)?,
                };
                no_extra(m)?;
                fam
            }
            "eo" => {
                let mut m = params(body)?;
                let fam = SequenceFamily::Eo { a: take(&mut m, "a", Some(1.0))? };
                no_extra(m)?;
                fam
            }
            "powerlaw" => {
                let mut m = params(body)?;
                let fam = SequenceFamily::PowerLaw { gamma: take(&mut m, "gamma", Some(2.5))? };
                no_extra(m)?;
                fam
            }
            "hub" => {
                let mut m = params(body)?;
                let fam =
                    SequenceFamily::Hub { exp: take(&mut m, "exp", Some(0.6))?, base: take(&mut m, "base", Some(3))? };
                no_extra(m)?;
                fam
            }
            "fixed" => SequenceFamily::Fixed(body.parse()?),
            _ => return Err(Error::UnknownFamily(s.to_string())),
        };
        match fam {
            SequenceFamily::Mix { p, .. } if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")))
            }
            SequenceFamily::Eo { a } if a <= 0.0 => Err(Error::InvalidParameter("a must be positive".into())),
            SequenceFamily::PowerLaw { gamma } if gamma <= 0.0 => {
                Err(Error::InvalidParameter("gamma must be positive".into()))
            }
            SequenceFamily::Hub { exp, .. } if !(0.0..1.0).contains(&exp) => {
                Err(Error::InvalidParameter("exp must lie in [0, 1)".into()))
            }
            fam => Ok(fam),
        }
    }
}

impl fmt::Display for SequenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceFamily::Regular(r) => write!(f, "regular:{r}"),
            SequenceFamily::Ones => write!(f, "ones"),
            SequenceFamily::Mix { p, a, b } => write!(f, "mix:p={p},a={a},b={b}"),
            SequenceFamily::Eo { a } => write!(f, "eo:a={a}"),
            SequenceFamily::PowerLaw { gamma } => write!(f, "powerlaw:gamma={gamma}"),
            SequenceFamily::Hub { exp, base } => write!(f, "hub:exp={exp},base={base}"),
            SequenceFamily::Fixed(seq) => write!(f, "fixed:{seq}"),
        }
    }
}

/// Bumps one vertex so the degree sum is even.
fn fix_parity(d: &mut [u32], cap: u32) {
    let sum: u64 = d.iter().map(|&x| x as u64).sum();
    if sum % 2 == 1 {
        if let Some(last) = d.last_mut() {
            if *last < cap {
                *last += 1;
            } else {
                *last -= 1;
            }
        }
    }
}

impl SequenceFamily {
    /// Whether [`SequenceFamily::sequence`] ignores its seed.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, SequenceFamily::PowerLaw { .. })
    }

    /// Natural grid when the user gives none.
    pub fn default_grid(&self) -> Vec<usize> {
        match self {
            SequenceFamily::Fixed(seq) => vec![seq.n()],
            _ => vec![100, 1000, 10000],
        }
    }

    pub fn sequence(&self, n: usize, seed: u64) -> Result<DegreeSequence> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let degrees = match self {
            SequenceFamily::Regular(r) => {
                if (*r as u64 * n as u64) % 2 == 1 {
                    return Err(Error::InvalidParameter(format!("regular:{r} needs even n, got {n}")));
                }
                vec![*r; n]
            }
            SequenceFamily::Ones => {
                if n % 2 == 1 {
                    return Err(Error::InvalidParameter(format!("ones needs even n, got {n}")));
                }
                vec![1; n]
            }
            SequenceFamily::Mix { p, a, b } => {
                let k = (p * n as f64).round() as usize;
                let mut d: Vec<u32> = (0..n).map(|i| if i < k { *a } else { *b }).collect();
                fix_parity(&mut d, u32::MAX);
                d
            }
            SequenceFamily::Eo { a } => {
                let m = (a * n as f64).sqrt().floor() as u32;
                if n % 2 == 1 || m < 2 || m as usize >= n {
                    return Err(Error::InvalidParameter(format!("eo needs even n and 2 <= m < n, got n={n}, m={m}")));
                }
                let mut d = vec![1; n];
                d[0] = m;
                d[1] = m;
                d
            }
            SequenceFamily::PowerLaw { gamma } => {
                let cap = ((n as f64).sqrt().floor() as u32).max(1);
                let weights: Vec<f64> = (1..=cap).map(|k| (k as f64).powf(-gamma)).collect();
                let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mut rng = seeded(derive_seed(seed, &[n as u64, SEQUENCE_STREAM]));
                let mut d: Vec<u32> = (0..n).map(|_| dist.sample(&mut rng) as u32 + 1).collect();
                fix_parity(&mut d, cap);
                d
            }
            SequenceFamily::Hub { exp, base } => {
                let mut d = vec![*base; n];
                d[0] = ((n as f64).powf(*exp).floor() as u32).max(*base);
                fix_parity(&mut d, u32::MAX);
                d
            }
            SequenceFamily::Fixed(seq) => {
                if seq.n() != n {
                    return Err(Error::InvalidParameter(format!("fixed sequence has n={}, grid asks {n}", seq.n())));
                }
                return Ok(seq.clone());
            }
        };
        Ok(DegreeSequence::new(degrees))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: SequenceFamily,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub rule: BadEdgeRule,
    pub variant: SwitchVariant,
    /// Keep one row per replicate and statistic.
    pub keep_raw: bool,
}

impl ExperimentConfig {
    pub fn new(family: SequenceFamily, n_grid: Vec<usize>, replicates: usize, seed: u64) -> Self {
        ExperimentConfig {
            family,
            n_grid,
            replicates,
            seed,
            rule: BadEdgeRule::Lex,
            variant: SwitchVariant::AnyEdge,
            keep_raw: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentEcho {
    pub n: usize,
    pub half_edges: u64,
    pub max_degree: u32,
    pub mu_hat: f64,
    pub mu2_hat: f64,
    pub nu_hat: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stat {
    pub n: usize,
    pub statistic: String,
    pub mean: f64,
    pub se: f64,
    /// 0 for exactly computed values.
    pub replicates: usize,
    pub target: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub n: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RawRow {
    pub n: usize,
    pub replicate: usize,
    pub statistic: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub family: String,
    pub n_grid: Vec<usize>,
    pub seed: u64,
    pub replicates: usize,
    pub rule: BadEdgeRule,
    pub variant: SwitchVariant,
    pub moments: Vec<MomentEcho>,
    pub stats: Vec<Stat>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub raw: Vec<RawRow>,
    #[serde(skip)]
    keep_raw: bool,
}

impl ExperimentReport {
    fn new(name: &str, cfg: &ExperimentConfig) -> Self {
        ExperimentReport {
            name: name.to_string(),
            family: cfg.family.to_string(),
            n_grid: cfg.n_grid.clone(),
            seed: cfg.seed,
            replicates: cfg.replicates,
            rule: cfg.rule,
            variant: cfg.variant,
            moments: Vec::new(),
            stats: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            raw: Vec::new(),
            keep_raw: cfg.keep_raw,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn stat(&self, n: usize, statistic: &str) -> Option<&Stat> {
        self.stats.iter().find(|s| s.n == n && s.statistic == statistic)
    }

    pub fn check(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.name == name)
    }

    fn echo(&mut self, seq: &DegreeSequence) -> Result<()> {
        let m = seq.moments()?;
        self.moments.push(MomentEcho {
            n: m.n,
            half_edges: m.half_edges,
            max_degree: m.max_degree,
            mu_hat: m.mu_hat,
            mu2_hat: m.mu2_hat,
            nu_hat: m.nu_hat,
        });
        Ok(())
    }

    fn push_exact(&mut self, n: usize, statistic: &str, value: f64, target: Option<f64>) {
        self.stats.push(Stat { n, statistic: statistic.into(), mean: value, se: 0.0, replicates: 0, target });
    }

    fn push_check(&mut self, name: &str, n: Option<usize>, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), n, passed, detail });
    }

    /// Summarizes per-replicate rows column by column.
    fn push_rows(&mut self, n: usize, rows: &[Row], targets: &[(&str, f64)]) {
        let Some(first) = rows.first() else { return };
        for (col, (name, _)) in first.iter().enumerate() {
            let values: Vec<f64> = rows.iter().map(|r| r[col].1).collect();
            let (mean, se) = mean_se(&values);
            let target = targets.iter().find(|(t, _)| t == name).map(|&(_, v)| v);
            self.stats.push(Stat { n, statistic: name.to_string(), mean, se, replicates: values.len(), target });
        }
        if self.keep_raw {
            for (replicate, row) in rows.iter().enumerate() {
                for &(name, value) in row {
                    self.raw.push(RawRow { n, replicate, statistic: name.into(), value });
                }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Statistics table, one row per (n, statistic).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.stats {
            w.serialize(s).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_raw_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.raw {
            w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<prefix>.json`, `<prefix>.csv` and, with raw rows,
    /// `<prefix>.raw.csv`.
    pub fn write_files(&self, prefix: &Path) -> Result<()> {
        let with = |ext: &str| {
            let mut name = prefix.as_os_str().to_owned();
            name.push(ext);
            std::path::PathBuf::from(name)
        };
        std::fs::write(with(".json"), self.to_json() + "\n")?;
        self.write_csv(std::fs::File::create(with(".csv"))?)?;
        if !self.raw.is_empty() {
            self.write_raw_csv(std::fs::File::create(with(".raw.csv"))?)?;
        }
        Ok(())
    }
}

type Row = Vec<(&'static str, f64)>;

fn shared_layout(seq: &DegreeSequence) -> Result<Arc<HalfEdgeLayout>> {
    seq.require_even()?;
    Ok(Arc::new(HalfEdgeLayout::new(seq)))
}

fn column_sum(rows: &[Row], name: &str) -> f64 {
    rows.iter().flat_map(|r| r.iter().filter(|(k, _)| *k == name).map(|&(_, v)| v)).sum()
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / r as f64;
    if r == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    (mean, (var / r as f64).sqrt())
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Runs `f` once per replicate on its own stream; output is in replicate order.
fn replicates<T: Send>(
    cfg: &ExperimentConfig,
    n: usize,
    f: impl Fn(&mut GraphRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..cfg.replicates).into_par_iter().map(|r| f(&mut seeded(derive_seed(cfg.seed, &[n as u64, r as u64])))).collect()
}

/// Number of violated switch-count identities on a trace: silver runs use
/// `L + sum (m-1) M_m` switchings and at most `L + M`; golden runs exactly `L + M`.
pub fn trace_violations(trace: &SwitchTrace) -> u32 {
    let s = trace.switches;
    let b = &trace.initial;
    let lm = b.loops + b.parallel_pairs;
    let mut bad = 0;
    if trace.silver && s != b.silver_switches() {
        bad += 1;
    }
    if trace.silver && s > lm {
        bad += 1;
    }
    if trace.golden && s != lm {
        bad += 1;
    }
    bad
}

fn largest_two(g: &Multigraph) -> (usize, usize) {
    let sizes = g.component_sizes();
    (sizes.first().copied().unwrap_or(0), sizes.get(1).copied().unwrap_or(0))
}

fn tree(edges: &[(u32, u32)]) -> Multigraph {
    let n = edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(1);
    Multigraph::from_edges(n, edges.iter().copied()).expect("valid tree")
}

/// Number of switchings against `E(L + M)`, plus silver and golden rates.
pub fn exp_switch_count(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("switch-count", cfg);
    let mut silver_by_n = Vec::new();
    let mut all_trivial = true;
    for &n in &cfg.n_grid {
        let seq = cfg.family.sequence(n, cfg.seed)?;
        report.echo(&seq)?;
        seq.require_graphical()?;
        all_trivial &= seq.max_degree() <= 1;
        let expected = (expected_loops(&seq)? + expected_pairs(&seq)?).to_f64().unwrap_or(f64::NAN);
        let layout = shared_layout(&seq)?;
        let rows = replicates(cfg, n, |rng| {
            let config = sample_configuration_in(layout.clone(), rng);
            let out = run_to_simple(config, cfg.rule, cfg.variant, rng, None)?;
            let t = &out.trace;
            let ok = out.graph.is_simple() && out.graph.degrees() == seq.degrees();
            let row: Row = vec![
                ("S", t.switches as f64),
                ("silver", flag(t.silver)),
                ("golden", flag(t.golden)),
                ("new_bad_created", flag(t.new_bad_created)),
                ("restarted", flag(t.restarted > 0)),
                ("L", t.initial.loops as f64),
                ("M", t.initial.parallel_pairs as f64),
                ("S_if_silver", if t.silver { t.switches as f64 } else { f64::NAN }),
                ("output_violations", flag(!ok)),
                ("identity_violations", trace_violations(t) as f64),
            ];
            Ok(row)
        })?;
        let silver_s: Vec<f64> = rows.iter().map(|r| r[7].1).filter(|v| !v.is_nan()).collect();
        let rows: Vec<Row> = rows
            .into_iter()
            .map(|mut r| {
                r.remove(7);
                r
            })
            .collect();
        report.push_rows(n, &rows, &[("S", expected)]);
        let (sm, sse) = mean_se(&silver_s);
        report.stats.push(Stat {
            n,
            statistic: "S_among_silver".into(),
            mean: sm,
            se: sse,
            replicates: silver_s.len(),
            target: Some(expected),
        });
        report.push_exact(n, "expected_L_plus_M", expected, None);

        let s = report.stat(n, "S").cloned().expect("S row");
        let tol = 3.0 * s.se;
        report.push_check(
            "mean_S_within_3se_of_expected",
            Some(n),
            (s.mean - expected).abs() <= tol,
            format!("mean S {:.4} (se {:.4}) vs E(L+M) {:.4}", s.mean, s.se, expected),
        );
        let out_bad = column_sum(&rows, "output_violations");
        let id_bad = column_sum(&rows, "identity_violations");
        report.push_check(
            "simple_output_with_degrees",
            Some(n),
            out_bad == 0.0,
            format!("{out_bad} of {} runs violate", rows.len()),
        );
        report.push_check(
            "switch_count_identities",
            Some(n),
            id_bad == 0.0,
            format!("{id_bad} violated identities over {} traces", rows.len()),
        );
        if seq.max_degree() <= 1 {
            report.push_check("no_switching_needed", Some(n), s.mean == 0.0, format!("mean S {}", s.mean));
        }
        let silver = report.stat(n, "silver").cloned().expect("silver row");
        silver_by_n.push((n, silver.mean, silver.se));
    }
    if let Some(&(n, frac, _)) = silver_by_n.last() {
        if !all_trivial {
            report.push_check(
                "silver_fraction_at_largest_n",
                Some(n),
                frac >= 0.95,
                format!("silver fraction {frac:.4}, need >= 0.95"),
            );
        }
    }
    for w in silver_by_n.windows(2) {
        let ((n0, f0, s0), (n1, f1, s1)) = (w[0], w[1]);
        let slack = 3.0 * (s0 * s0 + s1 * s1).sqrt();
        report.push_check(
            "silver_fraction_increasing",
            Some(n1),
            f1 >= f0 - slack,
            format!("n={n0}: {f0:.4}, n={n1}: {f1:.4}, noise allowance {slack:.4}"),
        );
    }
    Ok(report)
}

/// P2 and P3 densities on configuration multigraphs, and zeta densities on
/// switched graphs, against their limits.
pub fn exp_path_limits(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("path-limits", cfg);
    let mut last = None;
    for &n in &cfg.n_grid {
        let seq = cfg.family.sequence(n, cfg.seed)?;
        report.echo(&seq)?;
        let m = seq.moments()?;
        let (mu, nu) = (m.mu_hat, m.nu_hat);
        let a10 = nu / 2.0;
        let a01 = if mu > 0.0 { nu * nu / (2.0 * mu) } else { 0.0 };
        let with_zeta = n <= ZETA_MAX_N && seq.validate().graphical;
        let nf = n as f64;
        let layout = shared_layout(&seq)?;
        let rows = replicates(cfg, n, |rng| {
            let config = sample_configuration_in(layout.clone(), rng);
            let g = config.project();
            let mut row: Row = vec![
                ("X_P2_over_n", g.count_subgraphs(Pattern::P2) as f64 / nf),
                ("X_P3_over_n", g.count_subgraphs(Pattern::P3) as f64 / nf),
            ];
            if with_zeta {
                let s = run_to_simple(config, cfg.rule, cfg.variant, rng, None)?.graph;
                row.push(("zeta_10_over_n", exact::zeta_lm(&s, 1, 0) as f64 / nf));
                row.push(("zeta_01_over_n", exact::zeta_lm(&s, 0, 1) as f64 / nf));
                row.push(("zeta_11_over_n2", exact::zeta_lm(&s, 1, 1) as f64 / (nf * nf)));
            }
            Ok(row)
        })?;
        report.push_rows(
            n,
            &rows,
            &[
                ("X_P2_over_n", a10),
                ("X_P3_over_n", a01),
                ("zeta_10_over_n", a10),
                ("zeta_01_over_n", a01),
                ("zeta_11_over_n2", a10 * a01),
            ],
        );
        last = Some(n);
    }
    if let Some(n) = last {
        for name in ["X_P2_over_n", "X_P3_over_n"] {
            let s = report.stat(n, name).cloned().expect("row present");
            let t = s.target.unwrap_or(f64::NAN);
            let passed = if t == 0.0 { s.mean == 0.0 } else { ((s.mean - t) / t).abs() <= 0.05 };
            report.push_check(
                &format!("{name}_within_5pct"),
                Some(n),
                passed,
                format!("mean {:.4} (se {:.4}) vs limit {t:.4}", s.mean, s.se),
            );
        }
    }
    Ok(report)
}

/// Exact uniform probability that the two hubs of the EO sequence are
/// adjacent: `r / (1 + r)` with `r = m^2 / (n - 2m)`.
pub fn eo_uniform_edge_probability(n: usize, m: u32) -> f64 {
    let r = (m as f64).powi(2) / (n as f64 - 2.0 * m as f64);
    r / (1.0 + r)
}

/// Probability that vertices 1 and 2 are adjacent in the switched and the
/// uniform model for `d = (m, m, 1, ..., 1)`.
pub fn exp_example_eo(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let SequenceFamily::Eo { a } = cfg.family else {
        return Err(Error::InvalidParameter("example-eo needs an eo:a=<a> family".into()));
    };
    let mut report = ExperimentReport::new("example-eo", cfg);
    let switched_limit = 1.0 - (-a).exp();
    let uniform_limit = a / (1.0 + a);
    let mut last = None;
    for &n in &cfg.n_grid {
        let seq = cfg.family.sequence(n, cfg.seed)?;
        report.echo(&seq)?;
        let m = seq.degree(0);
        let layout = shared_layout(&seq)?;
        let rows = replicates(cfg, n, |rng| {
            let config = sample_configuration_in(layout.clone(), rng);
            let out = run_to_simple(config, cfg.rule, cfg.variant, rng, None)?;
            Ok(vec![("p_switched_edge_12", flag(out.graph.has_edge(0, 1)))])
        })?;
        report.push_rows(n, &rows, &[("p_switched_edge_12", switched_limit)]);
        report.push_exact(n, "p_uniform_edge_12", eo_uniform_edge_probability(n, m), Some(uniform_limit));
        report.push_exact(n, "m", m as f64, None);
        last = Some(n);
    }
    if let Some(n) = last {
        let sw = report.stat(n, "p_switched_edge_12").cloned().expect("row");
        let un = report.stat(n, "p_uniform_edge_12").cloned().expect("row");
        report.push_check(
            "switched_near_1_minus_exp_neg_a",
            Some(n),
            (sw.mean - switched_limit).abs() <= 0.02,
            format!("{:.4} (se {:.4}) vs {switched_limit:.4}", sw.mean, sw.se),
        );
        report.push_check(
            "uniform_near_a_over_1_plus_a",
            Some(n),
            (un.mean - uniform_limit).abs() <= 0.02,
            format!("{:.4} vs {uniform_limit:.4}", un.mean),
        );
        report.push_check(
            "limits_differ",
            Some(n),
            (sw.mean - un.mean).abs() > 0.05,
            format!("|{:.4} - {:.4}| must exceed 0.05", sw.mean, un.mean),
        );
    }
    Ok(report)
}

/// Component statistics before and after switching, with the per-sample
/// bounds on the largest component and on tree-component counts.
pub fn exp_components(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("components", cfg);
    let p1 = tree(&[(0, 1)]);
    let p2 = tree(&[(0, 1), (1, 2)]);
    for &n in &cfg.n_grid {
        let seq = cfg.family.sequence(n, cfg.seed)?;
        report.echo(&seq)?;
        seq.require_graphical()?;
        let m = seq.moments()?;
        if m.nu_hat <= m.mu_hat {
            report.notes.push(format!("n={n}: family is not supercritical (nu {:.3} <= mu {:.3})", m.nu_hat, m.mu_hat));
        }
        let nf = n as f64;
        let layout = shared_layout(&seq)?;
        let rows = replicates(cfg, n, |rng| {
            let config = sample_configuration_in(layout.clone(), rng);
            let out = run_to_simple(config, cfg.rule, cfg.variant, rng, None)?;
            let before = out.initial.project();
            let after = &out.graph;
            let s = out.trace.switches as i64;
            let (c1b, c2b) = largest_two(&before);
            let (c1a, _) = largest_two(after);
            let giant_ok = (c1a as i64 - c1b as i64).abs() <= s * c2b as i64;
            let monotone_ok = c1a >= c1b;
            let nt = |g: &Multigraph, t: &Multigraph| g.count_tree_components(t) as i64;
            let (p1b, p1a) = (nt(&before, &p1), nt(after, &p1));
            let (p2b, p2a) = (nt(&before, &p2), nt(after, &p2));
            let trees_ok = (p1a - p1b).abs() <= 2 * s && (p2a - p2b).abs() <= 2 * s;
            let degrees_ok = after.is_simple() && after.degrees() == seq.degrees();
            Ok(vec![
                ("S", s as f64),
                ("C1_before_over_n", c1b as f64 / nf),
                ("C1_after_over_n", c1a as f64 / nf),
                ("n_P1_after_over_n", p1a as f64 / nf),
                ("n_P2_after_over_n", p2a as f64 / nf),
                ("giant_bound_violation", flag(!giant_ok)),
                ("giant_decrease", flag(!monotone_ok)),
                ("tree_bound_violation", flag(!trees_ok)),
                ("degree_violation", flag(!degrees_ok)),
                ("identity_violations", trace_violations(&out.trace) as f64),
            ])
        })?;
        report.push_rows(n, &rows, &[]);
        let r = rows.len();
        for (col, name) in [
            ("giant_bound_violation", "giant_bound"),
            ("giant_decrease", "giant_never_shrinks"),
            ("tree_bound_violation", "tree_count_bound"),
            ("degree_violation", "degree_preservation"),
            ("identity_violations", "switch_count_identities"),
        ] {
            let bad = column_sum(&rows, col);
            report.push_check(name, Some(n), bad == 0.0, format!("{bad} violations in {r} paired samples"));
        }
        if seq.max_degree() == 1 && seq.degrees().iter().all(|&d| d == 1) {
            let mean = report.stat(n, "n_P1_after_over_n").map(|s| s.mean).unwrap_or(f64::NAN);
            report.push_check("matching_has_n_over_2_edges", Some(n), mean == 0.5, format!("n_P1/n = {mean}"));
        }
    }
    Ok(report)
}

/// Summary statistic used for the TV lower bound: P2, P3, C3, C4 counts and
/// the component-size profile.
pub fn statistic_key(g: &Multigraph) -> String {
    let sizes = g.component_sizes();
    let mut profile = String::new();
    for s in sizes {
        profile.push_str(&s.to_string());
        profile.push(' ');
    }
    format!(
        "{} {} {} {} | {}",
        g.count_subgraphs(Pattern::P2),
        g.count_subgraphs(Pattern::P3),
        g.count_subgraphs(Pattern::C3),
        g.count_subgraphs(Pattern::C4),
        profile.trim_end()
    )
}

/// Total variation distance between two empirical laws.
pub fn empirical_tv<T: std::hash::Hash + Eq>(a: &[T], b: &[T]) -> f64 {
    let mut diff: HashMap<&T, f64> = HashMap::new();
    let (wa, wb) = (1.0 / a.len() as f64, 1.0 / b.len() as f64);
    for x in a {
        *diff.entry(x).or_default() += wa;
    }
    for x in b {
        *diff.entry(x).or_default() -= wb;
    }
    diff.values().map(|d| d.abs()).sum::<f64>() / 2.0
}

/// Empirical TV with its permutation noise floor and bootstrap standard
/// error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TvEstimate {
    pub tv: f64,
    pub noise_floor: f64,
    pub bootstrap_se: f64,
}

impl TvEstimate {
    /// Part of the estimate not explained by sampling noise.
    pub fn excess(&self) -> f64 {
        (self.tv - self.noise_floor).max(0.0)
    }
}

pub fn estimate_tv<T: std::hash::Hash + Eq + Clone>(a: &[T], b: &[T], rng: &mut GraphRng) -> TvEstimate {
    let tv = empirical_tv(a, b);
    let mut pool: Vec<T> = a.iter().chain(b).cloned().collect();
    let mut floor = 0.0;
    for _ in 0..PERMUTATIONS {
        pool.shuffle(rng);
        floor += empirical_tv(&pool[..a.len()], &pool[a.len()..]);
    }
    let boots: Vec<f64> = (0..BOOTSTRAPS)
        .map(|_| {
            let ra: Vec<T> = (0..a.len()).map(|_| a[rng.gen_range(0..a.len())].clone()).collect();
            let rb: Vec<T> = (0..b.len()).map(|_| b[rng.gen_range(0..b.len())].clone()).collect();
            empirical_tv(&ra, &rb)
        })
        .collect();
    let (mean, _) = mean_se(&boots);
    let sd = (boots.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (BOOTSTRAPS - 1) as f64).sqrt();
    TvEstimate { tv, noise_floor: floor / PERMUTATIONS as f64, bootstrap_se: sd }
}

/// Distance between the switched and the uniform law: exact where the
/// sequence is small enough to enumerate, otherwise a lower bound through
/// the law of [`statistic_key`].
pub fn exp_tv_decay(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("tv-decay", cfg);
    if cfg.family.is_deterministic() {
        let sizes: Vec<usize> = match &cfg.family {
            SequenceFamily::Fixed(seq) => vec![seq.n()],
            _ => (1..=TV_EXACT_MAX_HALF_EDGES as usize).collect(),
        };
        for n in sizes {
            let Ok(seq) = cfg.family.sequence(n, cfg.seed) else { continue };
            if seq.half_edges() > TV_EXACT_MAX_HALF_EDGES || !seq.validate().graphical {
                continue;
            }
            let uniform = exact::uniform_simple_distribution(&seq)?;
            let switched = exact::switched_distribution_exact(&seq, cfg.rule, cfg.variant)?;
            let labeled = exact::tv_distance(&switched, &uniform)?;
            let types = exact::type_tv_distance(&switched, &uniform);
            report.push_exact(n, "exact_tv_labeled", labeled.to_f64().unwrap_or(f64::NAN), None);
            report.push_exact(n, "exact_tv_type", types.to_f64().unwrap_or(f64::NAN), None);
            report.notes.push(format!("n={n} ({seq}): exact dTV labeled {labeled}, type marginal {types}"));
        }
    }
    let mut trend: Vec<(usize, f64, f64)> = Vec::new();
    for &n in &cfg.n_grid {
        let seq = cfg.family.sequence(n, cfg.seed)?;
        report.echo(&seq)?;
        seq.require_graphical()?;
        let layout = shared_layout(&seq)?;
        let switched = replicates(cfg, n, |rng| {
            let config = sample_configuration_in(layout.clone(), rng);
            Ok(statistic_key(&run_to_simple(config, cfg.rule, cfg.variant, rng, None)?.graph))
        })?;
        let uniform: Result<Vec<String>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = seeded(derive_seed(cfg.seed, &[n as u64, UNIFORM_STREAM, r as u64]));
                Ok(statistic_key(&sample_uniform_simple(&seq, &mut rng, DEFAULT_MAX_ATTEMPTS)?.graph))
            })
            .collect();
        let uniform = match uniform {
            Ok(u) => u,
            Err(e @ Error::RejectionExhausted { .. }) => {
                report.notes.push(format!("n={n}: uniform reference unavailable ({e})"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut rng = seeded(derive_seed(cfg.seed, &[n as u64, RESAMPLE_STREAM]));
        let est = estimate_tv(&switched, &uniform, &mut rng);
        let r = cfg.replicates;
        let row =
            |name: &str, mean: f64, se: f64| Stat { n, statistic: name.into(), mean, se, replicates: r, target: None };
        report.stats.push(row("tv_lower_bound", est.tv, est.bootstrap_se));
        report.stats.push(row("tv_noise_floor", est.noise_floor, 0.0));
        report.stats.push(row("tv_excess", est.excess(), est.bootstrap_se));
        trend.push((n, est.excess(), est.bootstrap_se));
    }
    for w in trend.windows(2) {
        let ((n0, e0, s0), (n1, e1, s1)) = (w[0], w[1]);
        let slack = 3.0 * (s0 * s0 + s1 * s1).sqrt();
        report.push_check(
            "tv_bound_non_increasing",
            Some(n1),
            e1 <= e0 + slack,
            format!("excess n={n0}: {e0:.4}, n={n1}: {e1:.4}, noise allowance {slack:.4}"),
        );
    }
    Ok(report)
}

pub const EXPERIMENTS: [&str; 5] = ["switch-count", "path-limits", "example-eo", "components", "tv-decay"];

pub fn run_named(name: &str, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match name {
        "switch-count" => exp_switch_count(cfg),
        "path-limits" => exp_path_limits(cfg),
        "example-eo" => exp_example_eo(cfg),
        "components" => exp_components(cfg),
        "tv-decay" => exp_tv_decay(cfg),
        _ => Err(Error::UnknownExperiment(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(family: &str, grid: &[usize], reps: usize) -> ExperimentConfig {
        ExperimentConfig::new(family.parse().unwrap(), grid.to_vec(), reps, 11)
    }

    #[test]
    fn family_parsing() {
        assert_eq!("regular:3".parse::<SequenceFamily>().unwrap(), SequenceFamily::Regular(3));
        assert_eq!("mix:p=0.5,a=1,b=4".parse::<SequenceFamily>().unwrap(), SequenceFamily::Mix { p: 0.5, a: 1, b: 4 });
        assert_eq!("eo:a=1".parse::<SequenceFamily>().unwrap(), SequenceFamily::Eo { a: 1.0 });
        assert_eq!("hub:exp=0.6".parse::<SequenceFamily>().unwrap(), SequenceFamily::Hub { exp: 0.6, base: 3 });
        assert!(matches!("star".parse::<SequenceFamily>(), Err(Error::UnknownFamily(_))));
        assert!(matches!("mix:p=2,a=1,b=2".parse::<SequenceFamily>(), Err(Error::InvalidParameter(_))));
        assert!(matches!("eo:a=1,z=2".parse::<SequenceFamily>(), Err(Error::InvalidParameter(_))));
        for s in ["regular:3", "ones", "mix:p=0.25,a=1,b=4", "eo:a=1", "powerlaw:gamma=2.5", "fixed:2,2,1,1,1,1"] {
            let f: SequenceFamily = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<SequenceFamily>().unwrap(), f);
        }
    }

    #[test]
    fn family_sequences() {
        let eo: SequenceFamily = "eo:a=1".parse().unwrap();
        let d = eo.sequence(100, 0).unwrap();
        assert_eq!(&d.degrees()[..3], &[10, 10, 1]);
        assert!(eo.sequence(101, 0).is_err());
        let mix: SequenceFamily = "mix:p=0.5,a=1,b=4".parse().unwrap();
        assert_eq!(mix.sequence(7, 0).unwrap().half_edges() % 2, 0);
        let pl: SequenceFamily = "powerlaw".parse().unwrap();
        let a = pl.sequence(500, 3).unwrap();
        assert_eq!(a, pl.sequence(500, 3).unwrap());
        assert_eq!(a.half_edges() % 2, 0);
        assert!(a.max_degree() <= 22);
        let hub: SequenceFamily = "hub:exp=0.6".parse().unwrap();
        assert_eq!(hub.sequence(1000, 0).unwrap().degree(0), 63);
    }

    #[test]
    fn ones_family_never_switches() {
        let report = exp_switch_count(&cfg("ones", &[10, 40], 50)).unwrap();
        assert!(report.passed(), "{:#?}", report.checks);
        assert_eq!(report.stat(40, "S").unwrap().mean, 0.0);
    }

    #[test]
    fn ones_family_has_zero_path_limits() {
        let report = exp_path_limits(&cfg("ones", &[20], 20)).unwrap();
        assert!(report.passed());
        assert_eq!(report.stat(20, "X_P2_over_n").unwrap().mean, 0.0);
    }

    #[test]
    fn matching_components() {
        let report = exp_components(&cfg("ones", &[30], 20)).unwrap();
        assert!(report.passed(), "{:#?}", report.checks);
    }

    #[test]
    fn reports_are_reproducible() {
        let c = cfg("regular:3", &[50], 40);
        let a = exp_switch_count(&c).unwrap();
        let b = exp_switch_count(&c).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let mut c2 = c.clone();
        c2.seed += 1;
        assert_ne!(exp_switch_count(&c2).unwrap().to_json(), a.to_json());
    }

    #[test]
    fn raw_rows_and_csv() {
        let mut c = cfg("regular:3", &[20], 5);
        c.keep_raw = true;
        let report = exp_switch_count(&c).unwrap();
        assert_eq!(report.raw.iter().filter(|r| r.statistic == "S").count(), 5);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,statistic,mean,se,replicates,target"));
    }

    #[test]
    fn self_distance_is_noise() {
        let mut rng = seeded(5);
        let s = DegreeSequence::new(vec![3; 30]);
        let draw = |rng: &mut GraphRng| -> Vec<String> {
            (0..300)
                .map(|_| statistic_key(&sample_uniform_simple(&s, rng, DEFAULT_MAX_ATTEMPTS).unwrap().graph))
                .collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let est = estimate_tv(&a, &b, &mut rng);
        assert!(est.excess() <= 3.0 * est.bootstrap_se, "{est:?}");
    }

    #[test]
    fn tv_decay_exact_part() {
        let report = exp_tv_decay(&cfg("fixed:2,2,1,1,1,1", &[], 0)).unwrap();
        let t = report.stat(6, "exact_tv_type").unwrap();
        assert!((t.mean - 2.0 / 105.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_experiment() {
        assert_eq!(run_named("nope", &cfg("ones", &[2], 1)).unwrap_err(), Error::UnknownExperiment("nope".into()));
    }
}
