//! Timing protocol, complexity fits over op counts, and report rendering.
//!
//! Each configuration gets one seeded input bundle. Every method is run
//! `warmup` times untimed, then `repeats` times timed; with `drop_extremes` one
//! maximum and one minimum observation are discarded before the mean and the
//! sample standard deviation are taken. A method that hits the memory cap is
//! recorded as `OOM` and the run moves on.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::inputs::{config_seed, random_inputs, ProblemShape, GENERATOR};
use crate::mask::{check_gamma, MaskKind};
use crate::methods::{count_ops, run_method, BlockParams, MethodId};
use crate::tensor::DType;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub methods: Vec<MethodId>,
    pub shapes: Vec<ProblemShape>,
    pub mask: MaskKind,
    pub gamma: f64,
    pub dtype: DType,
    pub repeats: usize,
    pub warmup: usize,
    pub drop_extremes: bool,
    pub seed: u64,
    pub params: BlockParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            methods: MethodId::KERNELS.to_vec(),
            shapes: Vec::new(),
            mask: MaskKind::BinaryCausal,
            gamma: 1.0,
            dtype: DType::F32,
            repeats: 15,
            warmup: 2,
            drop_extremes: false,
            seed: 0,
            params: BlockParams::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shapes.is_empty() {
            return Err(Error::Usage("benchmark grid is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Usage("no methods to benchmark".into()));
        }
        if self.methods.contains(&MethodId::Auto) {
            return Err(Error::Usage(
                "`auto` cannot be benchmarked; name concrete methods".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::Usage("repeats must be at least 1".into()));
        }
        if self.drop_extremes && self.repeats < 3 {
            return Err(Error::Usage(
                "dropping extremes needs at least 3 repeats".into(),
            ));
        }
        check_gamma(self.gamma)?;
        self.params.validate()
    }
}

/// Mean and sample standard deviation of the kept observations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub kept: usize,
}

/// Applies the drop-extremes rule (when asked) and summarizes.
pub fn summarize(times: &[f64], drop_extremes: bool) -> Result<Stats> {
    let mut kept = times.to_vec();
    if drop_extremes {
        if kept.len() < 3 {
            return Err(Error::Usage(
                "dropping extremes needs at least 3 observations".into(),
            ));
        }
        let (imax, _) = kept
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
                if x > best.1 {
                    (i, x)
                } else {
                    best
                }
            });
        kept.remove(imax);
        let (imin, _) = kept
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, &x)| if x < best.1 { (i, x) } else { best },
            );
        kept.remove(imin);
    }
    if kept.is_empty() {
        return Err(Error::Usage("no observations".into()));
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let std = if kept.len() > 1 {
        (kept.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(Stats {
        mean,
        std,
        kept: kept.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RowStatus {
    Timed(Stats),
    Oom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub method: MethodId,
    pub shape: ProblemShape,
    pub mask: MaskKind,
    pub gamma: f64,
    pub dtype: DType,
    /// Absent for OOM rows.
    pub opcount: Option<u64>,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub seed: u64,
    pub dtype: DType,
    pub generator: String,
    pub host: String,
}

impl BenchReport {
    pub fn empty(seed: u64, dtype: DType) -> Self {
        BenchReport {
            rows: Vec::new(),
            seed,
            dtype,
            generator: GENERATOR.to_string(),
            host: host_note(),
        }
    }
}

fn host_note() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {} logical cpus",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cpus
    )
}

/// Source of per-run durations. The wall clock is the real one; tests inject
/// scripted times to check the protocol arithmetic.
pub trait Stopwatch {
    /// Runs `work` once and returns its duration in seconds.
    fn time(&mut self, work: &mut dyn FnMut() -> Result<()>) -> Result<f64>;
}

/// Monotonic high-resolution host clock.
pub struct WallClock;

impl Stopwatch for WallClock {
    fn time(&mut self, work: &mut dyn FnMut() -> Result<()>) -> Result<f64> {
        let start = Instant::now();
        work()?;
        Ok(start.elapsed().as_secs_f64())
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    run_bench_with(cfg, &mut WallClock)
}

pub fn run_bench_with(cfg: &BenchConfig, clock: &mut dyn Stopwatch) -> Result<BenchReport> {
    cfg.validate()?;
    let mut report = BenchReport::empty(cfg.seed, cfg.dtype);
    for shape in &cfg.shapes {
        let inputs = random_inputs(
            *shape,
            cfg.dtype,
            cfg.mask,
            cfg.gamma,
            config_seed(cfg.seed, shape, 0),
        )?;
        for &method in &cfg.methods {
            let mut opcount = None;
            let mut oom = false;
            for _ in 0..cfg.warmup {
                match run_method(method, &inputs, &cfg.params) {
                    Ok(out) => opcount = Some(out.opcount),
                    Err(e) if e.is_resource() => {
                        oom = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            let mut times = Vec::with_capacity(cfg.repeats);
            if !oom {
                for _ in 0..cfg.repeats {
                    let mut work = || -> Result<()> {
                        let out = run_method(method, &inputs, &cfg.params)?;
                        opcount = Some(out.opcount);
                        Ok(())
                    };
                    match clock.time(&mut work) {
                        Ok(t) => times.push(t),
                        Err(e) if e.is_resource() => {
                            oom = true;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            let status = if oom {
                opcount = None;
                RowStatus::Oom
            } else {
                RowStatus::Timed(summarize(&times, cfg.drop_extremes)?)
            };
            report.rows.push(BenchRow {
                method,
                shape: *shape,
                mask: cfg.mask,
                gamma: cfg.gamma,
                dtype: cfg.dtype,
                opcount,
                status,
            });
        }
    }
    Ok(report)
}

/// Candidate growth models for op counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    /// `c·N`
    Linear,
    /// `a·N·log₂N + b·N`
    NLogN,
    /// `q·N²`
    Quadratic,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Linear => "N",
            Model::NLogN => "N log N",
            Model::Quadratic => "N²",
        }
    }

    /// Complexity class each kernel is expected to show.
    pub fn expected_for(method: MethodId) -> Option<Model> {
        match method {
            MethodId::Vanilla => Some(Model::Quadratic),
            MethodId::Recursion => Some(Model::NLogN),
            MethodId::Auto => None,
            _ => Some(Model::Linear),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFit {
    pub model: Model,
    pub coeffs: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    pub r_squared: f64,
    /// `sqrt(ssr / Σy²)`
    pub rel_rms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub method: MethodId,
    /// `(N, opcount)` in ascending `N`.
    pub points: Vec<(usize, u64)>,
    pub fits: Vec<ModelFit>,
    pub best: Model,
}

impl FitReport {
    pub fn fit(&self, model: Model) -> &ModelFit {
        self.fits
            .iter()
            .find(|f| f.model == model)
            .expect("every model is fitted")
    }

    /// `opcount(2N) / opcount(N)` for consecutive grid points that double.
    pub fn doubling_ratios(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .filter(|w| w[1].0 == 2 * w[0].0)
            .map(|w| w[1].1 as f64 / w[0].1 as f64)
            .collect()
    }
}

/// A model counts as explaining the data when its relative RMS residual is below this.
pub const FIT_TOLERANCE: f64 = 1e-2;

fn finish(
    model: Model,
    coeffs: Vec<f64>,
    xs: &[f64],
    ys: &[f64],
    predict: impl Fn(&[f64], f64) -> f64,
) -> ModelFit {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - predict(&coeffs, x)).powi(2))
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let norm: f64 = ys.iter().map(|y| y * y).sum();
    ModelFit {
        model,
        coeffs,
        ssr,
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 },
        rel_rms: if norm > 0.0 { (ssr / norm).sqrt() } else { 0.0 },
    }
}

/// One-parameter least squares through the origin: `y ≈ k·f(x)`.
fn fit_scaled(model: Model, xs: &[f64], ys: &[f64], f: fn(f64) -> f64) -> ModelFit {
    let num: f64 = xs.iter().zip(ys).map(|(&x, &y)| f(x) * y).sum();
    let den: f64 = xs.iter().map(|&x| f(x) * f(x)).sum();
    finish(model, vec![num / den], xs, ys, move |c, x| c[0] * f(x))
}

fn fit_nlogn(xs: &[f64], ys: &[f64]) -> ModelFit {
    // normal equations for y ≈ a·(x log₂x) + b·x, columns scaled to unit max
    let u: Vec<f64> = xs.iter().map(|&x| x * x.log2()).collect();
    let su = u
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let sv = xs
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&ui, &xi), &yi) in u.iter().zip(xs).zip(ys) {
        let (p, q) = (ui / su, xi / sv);
        a11 += p * p;
        a12 += p * q;
        a22 += q * q;
        r1 += p * yi;
        r2 += q * yi;
    }
    let det = a11 * a22 - a12 * a12;
    let (a, b) = if det.abs() > 1e-12 * a11 * a22 {
        (
            (r1 * a22 - r2 * a12) / det / su,
            (a11 * r2 - a12 * r1) / det / sv,
        )
    } else {
        (0.0, r2 / a22 / sv)
    };
    finish(Model::NLogN, vec![a, b], xs, ys, |c, x| {
        c[0] * x * x.log2() + c[1] * x
    })
}

/// Fits `points` against all three models and names the best one.
///
/// The simpler one-parameter models are preferred whenever they explain the
/// data to [`FIT_TOLERANCE`]; the two-parameter `N log N` model nests `c·N` and
/// would otherwise always tie or win on linear data.
pub fn fit_models(method: MethodId, mut points: Vec<(usize, u64)>) -> Result<FitReport> {
    points.sort_unstable();
    points.dedup_by_key(|p| p.0);
    if points.len() < 4 {
        return Err(Error::Usage(format!(
            "complexity fit needs at least 4 distinct sequence lengths, got {}",
            points.len()
        )));
    }
    let (lo, hi) = (points[0].0, points[points.len() - 1].0);
    if hi < 8 * lo {
        return Err(Error::Usage(format!(
            "complexity fit needs the grid to span at least 8x, got {lo}..{hi}"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1 as f64).collect();
    let linear = fit_scaled(Model::Linear, &xs, &ys, |x| x);
    let quad = fit_scaled(Model::Quadratic, &xs, &ys, |x| x * x);
    let nlogn = fit_nlogn(&xs, &ys);

    let simple = if linear.ssr <= quad.ssr {
        &linear
    } else {
        &quad
    };
    let best = if simple.rel_rms <= FIT_TOLERANCE {
        simple.model
    } else if nlogn.rel_rms <= FIT_TOLERANCE && nlogn.coeffs[0] > 0.0 {
        Model::NLogN
    } else {
        [&linear, &nlogn, &quad]
            .into_iter()
            .min_by(|a, b| a.ssr.total_cmp(&b.ssr))
            .expect("three fits")
            .model
    };
    Ok(FitReport {
        method,
        points,
        fits: vec![linear, nlogn, quad],
        best,
    })
}

/// Op counts of `method` over `seqlens` (batch = heads = 1) and their model fit.
pub fn complexity_fit(
    method: MethodId,
    seqlens: &[usize],
    rank: usize,
    dim: usize,
    mask: MaskKind,
    params: &BlockParams,
) -> Result<FitReport> {
    if method == MethodId::Auto {
        return Err(Error::Usage(
            "name a concrete method for a complexity fit".into(),
        ));
    }
    let mut points = Vec::with_capacity(seqlens.len());
    for &n in seqlens {
        let shape = ProblemShape::new(1, 1, n, rank, dim)?;
        points.push((n, count_ops(method, shape, mask, 0.9, params)?));
    }
    fit_models(method, points)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Usage(format!("unknown report format `{other}`"))),
        }
    }
}

pub const CSV_HEADER: &str =
    "method,batch,heads,seqlen,rank,dim,mask,gamma,dtype,mean_s,std_s,opcount,status";

/// `x` in scientific notation with `digits` significant digits, trailing zeros
/// of the mantissa trimmed: `2.83e-3`, `1e-4`.
fn sci(x: f64, digits: usize) -> String {
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    match s.split_once('e') {
        Some((mant, exp)) if mant.contains('.') => {
            let mant = mant.trim_end_matches('0').trim_end_matches('.');
            format!("{mant}e{exp}")
        }
        _ => s,
    }
}

/// Table cell: `mean ± std`, or `OOM`.
pub fn format_cell(status: &RowStatus) -> String {
    match status {
        RowStatus::Oom => "OOM".to_string(),
        RowStatus::Timed(s) => format!("{} ± {}", sci(s.mean, 3), sci(s.std, 2)),
    }
}

pub fn render_report(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
    }
}

fn render_csv(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        let s = &row.shape;
        let (mean, std, status) = match row.status {
            RowStatus::Timed(st) => (st.mean.to_string(), st.std.to_string(), "ok"),
            RowStatus::Oom => (String::new(), String::new(), "OOM"),
        };
        let ops = row.opcount.map(|o| o.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.method,
            s.batch,
            s.heads,
            s.seqlen,
            s.rank,
            s.dim,
            row.mask,
            row.gamma,
            row.dtype,
            mean,
            std,
            ops,
            status
        );
    }
    out
}

fn render_markdown(report: &BenchReport) -> String {
    type GroupKey = (
        usize,
        usize,
        usize,
        usize,
        &'static str,
        String,
        &'static str,
    );
    let mut groups: BTreeMap<GroupKey, Vec<&BenchRow>> = BTreeMap::new();
    for row in &report.rows {
        let s = &row.shape;
        let key = (
            s.batch,
            s.heads,
            s.rank,
            s.dim,
            row.mask.name(),
            row.gamma.to_string(),
            row.dtype.name(),
        );
        groups.entry(key).or_default().push(row);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<!-- seed {} | dtype {} | inputs {} | host {} -->",
        report.seed, report.dtype, report.generator, report.host
    );
    for ((batch, heads, rank, dim, mask, gamma, dtype), rows) in groups {
        let mut seqlens: Vec<usize> = rows.iter().map(|r| r.shape.seqlen).collect();
        seqlens.sort_unstable();
        seqlens.dedup();
        let mut methods: Vec<MethodId> = Vec::new();
        for r in &rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        let _ = writeln!(out);
        let gamma_note = if mask == MaskKind::ExpDecay.name() {
            format!(" gamma={gamma}")
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "### batch={batch} heads={heads} rank={rank} dim={dim} mask={mask}{gamma_note} dtype={dtype}"
        );
        let _ = writeln!(out);
        let _ = write!(out, "| Method \\ Seqlen |");
        for n in &seqlens {
            let _ = write!(out, " {n} |");
        }
        let _ = writeln!(out);
        let _ = write!(out, "|---|");
        for _ in &seqlens {
            let _ = write!(out, "---|");
        }
        let _ = writeln!(out);
        for m in methods {
            let _ = write!(out, "| {m} |");
            for n in &seqlens {
                let cell = rows
                    .iter()
                    .find(|r| r.method == m && r.shape.seqlen == *n)
                    .map(|r| format_cell(&r.status))
                    .unwrap_or_else(|| "-".to_string());
                let _ = write!(out, " {cell} |");
            }
            let _ = writeln!(out);
        }
    }
    out
}
