//! The `linattn` command line.
//!
//! Exit status: 0 success, 1 failed verification or complexity mismatch,
//! 2 bad usage or input, 3 resource limit.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{complexity_fit, render_report, run_bench, BenchConfig, Model, ReportFormat};
use crate::dispatch::{decode, DispatchPolicy};
use crate::error::{Error, Result};
use crate::inputs::{random_inputs, AttnInputs, ProblemShape};
use crate::io::{read_tensor, write_tensor};
use crate::mask::MaskKind;
use crate::methods::{BlockParams, MethodId};
use crate::oracle::DEFAULT_MEM_CAP;
use crate::tensor::{DType, Tensor};
use crate::verify::{run_verify, VerifyConfig};

#[derive(Debug, Parser)]
#[command(
    name = "linattn",
    version,
    about = "Causal linear attention kernels, checks and benchmarks"
)]
struct Cli {
    /// Byte cap on N×N buffers (vanilla kernel and reference).
    #[arg(long, global = true, env = "LINATTN_MEM_CAP", default_value_t = DEFAULT_MEM_CAP)]
    mem_cap_bytes: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check kernels against the brute-force reference over a grid.
    Verify(VerifyArgs),
    /// Time kernels over a grid.
    Bench(BenchArgs),
    /// Write seeded standard-normal B, C, V tensor files.
    Gen(GenArgs),
    /// Run one kernel on tensor files.
    Decode(DecodeArgs),
    /// Show which kernel `auto` picks for a shape.
    Explain(ExplainArgs),
    /// Fit op counts against N, N log N and N².
    Complexity(ComplexityArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    methods: String,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,2,3,5,16,31,32,33,64,257"
    )]
    seqlen: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,8,32")]
    rank: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,8,32")]
    dim: Vec<usize>,
    /// Decay factors to try; the binary mask is always tried.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,0.9,1")]
    gamma: Vec<f64>,
    /// batch×heads pairs such as `1x1,2x3`.
    #[arg(long, value_delimiter = ',', default_value = "1x1,2x3")]
    bh: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "64,7")]
    block_size: Vec<usize>,
    #[arg(long, default_value = "f64")]
    dtype: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Relative tolerance; defaults to 1e-10 for f64 and 1e-3 for f32.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value = "all")]
    methods: String,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    batch: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    heads: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "128,512,2048")]
    seqlen: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "16")]
    rank: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "16")]
    dim: Vec<usize>,
    /// Use the exponentially decaying mask.
    #[arg(long)]
    decay: bool,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value = "f32")]
    dtype: String,
    #[arg(long, default_value_t = 15)]
    repeats: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// Discard one maximum and one minimum timing before averaging.
    #[arg(long)]
    drop_extremes: bool,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `markdown` or `csv`.
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 1)]
    heads: usize,
    #[arg(long)]
    seqlen: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value = "f64")]
    dtype: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving `B.ldt`, `C.ldt` and `V.ldt`.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    c: PathBuf,
    #[arg(long)]
    v: PathBuf,
    /// Use the exponentially decaying mask.
    #[arg(long)]
    decay: bool,
    /// One decay factor, or one per head.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    #[arg(long, default_value = "auto")]
    method: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "LINATTN_POLICY")]
    policy: Option<PathBuf>,
    #[arg(long)]
    block_size: Option<usize>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 1)]
    heads: usize,
    #[arg(long)]
    seqlen: usize,
    #[arg(long)]
    decay: bool,
    #[arg(long, env = "LINATTN_POLICY")]
    policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    #[arg(long, default_value = "all")]
    method: String,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1024,2048,4096,8192,16384,32768"
    )]
    seqlen: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    rank: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long)]
    decay: bool,
}

/// Parses `args` (program name first), runs the subcommand, and returns the
/// exit status. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch_command(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch_command(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cap = cli.mem_cap_bytes;
    match cli.command {
        Command::Verify(a) => cmd_verify(a, cap, out),
        Command::Bench(a) => cmd_bench(a, cap, out, err),
        Command::Gen(a) => cmd_gen(a, out),
        Command::Decode(a) => cmd_decode(a, cap, out, err),
        Command::Explain(a) => cmd_explain(a, out),
        Command::Complexity(a) => cmd_complexity(a, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn mask_kind(decay: bool) -> MaskKind {
    if decay {
        MaskKind::ExpDecay
    } else {
        MaskKind::BinaryCausal
    }
}

fn params_with(cap: u64, block_size: Option<usize>) -> BlockParams {
    let mut p = block_size.map_or_else(BlockParams::default, BlockParams::with_blocks);
    p.mem_cap_bytes = cap;
    p
}

fn parse_bh(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Usage(format!("`{s}` is not a batch×heads pair like `2x3`"));
    let (b, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        b.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    ))
}

fn cmd_verify(a: VerifyArgs, cap: u64, out: &mut dyn Write) -> Result<i32> {
    let cfg = VerifyConfig {
        methods: MethodId::parse_list(&a.methods)?,
        seqlens: a.seqlen,
        ranks: a.rank,
        dims: a.dim,
        gammas: a.gamma,
        batch_heads: a.bh.iter().map(|s| parse_bh(s)).collect::<Result<_>>()?,
        dtype: a.dtype.parse()?,
        seed: a.seed,
        tol: a.tol,
        params: a
            .block_size
            .iter()
            .map(|&b| params_with(cap, Some(b)))
            .collect(),
        mem_cap: cap,
    };
    let report = run_verify(&cfg)?;
    write_out(out, &report.render())?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_bench(a: BenchArgs, cap: u64, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let format: ReportFormat = a.format.parse()?;
    let mut shapes = Vec::new();
    for &batch in &a.batch {
        for &heads in &a.heads {
            for &rank in &a.rank {
                for &dim in &a.dim {
                    for &n in &a.seqlen {
                        shapes.push(ProblemShape::new(batch, heads, n, rank, dim)?);
                    }
                }
            }
        }
    }
    let cfg = BenchConfig {
        methods: MethodId::parse_list(&a.methods)?,
        shapes,
        mask: mask_kind(a.decay),
        gamma: if a.decay { a.gamma } else { 1.0 },
        dtype: a.dtype.parse()?,
        repeats: a.repeats,
        warmup: a.warmup,
        drop_extremes: a.drop_extremes,
        seed: a.seed,
        params: params_with(cap, a.block_size),
    };
    let report = run_bench(&cfg)?;
    let text = render_report(&report, format);
    match a.out {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            let _ = writeln!(err, "wrote {}", path.display());
        }
        None => write_out(out, &text)?,
    }
    Ok(0)
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write) -> Result<i32> {
    let shape = ProblemShape::new(a.batch, a.heads, a.seqlen, a.rank, a.dim)?;
    let dtype: DType = a.dtype.parse()?;
    let inputs = random_inputs(shape, dtype, MaskKind::BinaryCausal, 1.0, a.seed)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    for (name, t) in [
        ("B.ldt", &inputs.b),
        ("C.ldt", &inputs.c),
        ("V.ldt", &inputs.v),
    ] {
        let path = a.out_dir.join(name);
        write_tensor(t, &path)?;
        write_out(
            out,
            &format!("{} {:?} {}\n", path.display(), t.dims(), t.dtype()),
        )?;
    }
    Ok(0)
}

/// Lifts a 2-D `(N, ·)` or 3-D `(heads, N, ·)` tensor to 4-D.
fn lift(t: Tensor, path: &Path) -> Result<Tensor> {
    let dims = t.dims().to_vec();
    match dims.len() {
        2 => t.reshape(&[1, 1, dims[0], dims[1]]),
        3 => t.reshape(&[1, dims[0], dims[1], dims[2]]),
        4 => Ok(t),
        n => Err(Error::InvalidShape(format!(
            "{} has {n} dimensions; expected 2, 3 or 4",
            path.display()
        ))),
    }
}

fn load_policy(path: Option<&Path>) -> Result<DispatchPolicy> {
    match path {
        Some(p) => DispatchPolicy::load(p),
        None => Ok(DispatchPolicy::default()),
    }
}

fn cmd_decode(a: DecodeArgs, cap: u64, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let method: MethodId = a.method.parse()?;
    let policy = load_policy(a.policy.as_deref())?;
    let v_raw = read_tensor(&a.v)?;
    let out_dims = v_raw.dims().to_vec();
    let b = lift(read_tensor(&a.b)?, &a.b)?;
    let c = lift(read_tensor(&a.c)?, &a.c)?;
    let v = lift(v_raw, &a.v)?;
    let heads = b.dims()[1];
    let gamma = match (a.decay, a.gamma.len()) {
        (false, 0) => vec![1.0; heads],
        (false, _) => return Err(Error::Usage("--gamma needs --decay".into())),
        (true, 0) => return Err(Error::Usage("--decay needs --gamma".into())),
        (true, 1) => vec![a.gamma[0]; heads],
        (true, _) => a.gamma,
    };
    let inputs = AttnInputs::new(b, c, v, gamma, mask_kind(a.decay))?;
    let decoded = decode(&inputs, method, &policy, &params_with(cap, a.block_size))?;
    if method == MethodId::Auto {
        let _ = writeln!(err, "resolved: {}", decoded.method);
    }
    let result = decoded.output.output.reshape(&out_dims)?;
    write_tensor(&result, &a.out)?;
    write_out(
        out,
        &format!(
            "{} {:?} {}\n",
            a.out.display(),
            result.dims(),
            result.dtype()
        ),
    )?;
    Ok(0)
}

fn cmd_explain(a: ExplainArgs, out: &mut dyn Write) -> Result<i32> {
    let policy = load_policy(a.policy.as_deref())?;
    let shape = ProblemShape::new(a.batch, a.heads, a.seqlen, 1, 1)?;
    let res = policy.resolve(&shape, mask_kind(a.decay));
    write_out(out, &format!("{} ({})\n", res.method, res.rule))?;
    Ok(0)
}

fn cmd_complexity(a: ComplexityArgs, out: &mut dyn Write) -> Result<i32> {
    let methods = MethodId::parse_list(&a.method)?;
    let params = BlockParams::default();
    let mut code = 0;
    for method in methods {
        let Some(expected) = Model::expected_for(method) else {
            return Err(Error::Usage("`auto` has no complexity class".into()));
        };
        let fit = complexity_fit(
            method,
            &a.seqlen,
            a.rank,
            a.dim,
            mask_kind(a.decay),
            &params,
        )?;
        let best = fit.fit(fit.best);
        let ok = fit.best == expected;
        if !ok {
            code = 1;
        }
        let ratios: Vec<String> = fit
            .doubling_ratios()
            .iter()
            .map(|r| format!("{r:.3}"))
            .collect();
        write_out(
            out,
            &format!(
                "{:<16} best {:<8} expected {:<8} R² {:.6}  doubling ratios [{}]  {}\n",
                method.name(),
                fit.best.name(),
                expected.name(),
                best.r_squared,
                ratios.join(", "),
                if ok { "ok" } else { "MISMATCH" }
            ),
        )?;
    }
    Ok(code)
}
