//! Grid check of every kernel against the brute-force reference.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::inputs::{config_seed, random_inputs, ProblemShape};
use crate::mask::{check_gamma, MaskKind};
use crate::methods::{run_method, BlockParams, MethodId};
use crate::oracle::{oracle_attn_f64, DEFAULT_MEM_CAP};
use crate::tensor::DType;

/// Default relative tolerance for `dtype`.
pub fn default_tolerance(dtype: DType) -> f64 {
    match dtype {
        DType::F64 => 1e-10,
        DType::F32 => 1e-3,
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub methods: Vec<MethodId>,
    pub seqlens: Vec<usize>,
    pub ranks: Vec<usize>,
    pub dims: Vec<usize>,
    /// `γ` values tried with the decay mask. The binary mask is always tried.
    pub gammas: Vec<f64>,
    /// `(batch, heads)` pairs.
    pub batch_heads: Vec<(usize, usize)>,
    pub dtype: DType,
    pub seed: u64,
    /// Overrides [`default_tolerance`].
    pub tol: Option<f64>,
    /// Every grid point is run once per entry.
    pub params: Vec<BlockParams>,
    /// Byte cap for the reference's `N×N` buffers.
    pub mem_cap: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            methods: MethodId::KERNELS.to_vec(),
            seqlens: vec![1, 2, 3, 5, 16, 31, 32, 33, 64, 257],
            ranks: vec![1, 3, 8, 32],
            dims: vec![1, 3, 8, 32],
            gammas: vec![0.0, 0.5, 0.9, 1.0],
            batch_heads: vec![(1, 1), (2, 3)],
            dtype: DType::F64,
            seed: 7,
            tol: None,
            params: vec![BlockParams::default(), BlockParams::with_blocks(7)],
            mem_cap: DEFAULT_MEM_CAP,
        }
    }
}

impl VerifyConfig {
    pub fn tolerance(&self) -> f64 {
        self.tol.unwrap_or_else(|| default_tolerance(self.dtype))
    }

    fn masks(&self) -> Vec<(MaskKind, f64)> {
        let mut masks = vec![(MaskKind::BinaryCausal, 1.0)];
        masks.extend(self.gammas.iter().map(|&g| (MaskKind::ExpDecay, g)));
        masks
    }
}

/// Worst error one method reached over the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: MethodId,
    pub max_rel_error: f64,
    pub cases: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub method: MethodId,
    pub shape: ProblemShape,
    pub mask: MaskKind,
    pub gamma: f64,
    pub block_size: usize,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub tol: f64,
    pub dtype: DType,
    pub summaries: Vec<MethodSummary>,
    /// First case, in grid order, that exceeded the tolerance.
    pub first_violation: Option<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dtype {} tolerance {:e}", self.dtype, self.tol);
        for s in &self.summaries {
            let mark = if s.max_rel_error <= self.tol {
                "ok"
            } else {
                "FAIL"
            };
            let _ = writeln!(
                out,
                "{:<16} max rel err {:.3e} over {} cases  {mark}",
                s.method.name(),
                s.max_rel_error,
                s.cases
            );
        }
        if let Some(v) = &self.first_violation {
            let s = &v.shape;
            let _ = writeln!(
                out,
                "first violation: {} batch={} heads={} seqlen={} rank={} dim={} mask={} gamma={} block={} rel err {:.3e}",
                v.method, s.batch, s.heads, s.seqlen, s.rank, s.dim, v.mask, v.gamma, v.block_size, v.rel_error
            );
        }
        out
    }
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.methods.contains(&MethodId::Auto) {
        return Err(Error::Usage(
            "`auto` is not a kernel; verify concrete methods".into(),
        ));
    }
    if cfg.methods.is_empty() || cfg.params.is_empty() {
        return Err(Error::Usage("nothing to verify".into()));
    }
    for &g in &cfg.gammas {
        check_gamma(g)?;
    }
    for p in &cfg.params {
        p.validate()?;
    }
    let tol = cfg.tolerance();
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Usage(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut summaries: Vec<MethodSummary> = cfg
        .methods
        .iter()
        .map(|&method| MethodSummary {
            method,
            max_rel_error: 0.0,
            cases: 0,
        })
        .collect();
    let mut first_violation = None;

    for &(batch, heads) in &cfg.batch_heads {
        for &n in &cfg.seqlens {
            for &r in &cfg.ranks {
                for &d in &cfg.dims {
                    let shape = ProblemShape::new(batch, heads, n, r, d)?;
                    for (salt, &(mask, gamma)) in cfg.masks().iter().enumerate() {
                        let inputs = random_inputs(
                            shape,
                            cfg.dtype,
                            mask,
                            gamma,
                            config_seed(cfg.seed, &shape, salt as u64),
                        )?;
                        let reference = oracle_attn_f64(&inputs, cfg.mem_cap)?;
                        for params in &cfg.params {
                            for summary in summaries.iter_mut() {
                                let out = run_method(summary.method, &inputs, params)?;
                                let err = out.output.max_rel_error(&reference)?;
                                summary.max_rel_error = summary.max_rel_error.max(err);
                                summary.cases += 1;
                                if err > tol && first_violation.is_none() {
                                    first_violation = Some(Violation {
                                        method: summary.method,
                                        shape,
                                        mask,
                                        gamma,
                                        block_size: params.block_size,
                                        rel_error: err,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(VerifyReport {
        tol,
        dtype: cfg.dtype,
        summaries,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            seqlens: vec![1, 9, 33],
            ranks: vec![2],
            dims: vec![3],
            gammas: vec![0.5],
            batch_heads: vec![(1, 2)],
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn small_grid_passes() {
        let report = run_verify(&small()).unwrap();
        assert!(report.passed(), "{}", report.render());
        assert_eq!(report.summaries.len(), 7);
        // 3 lengths, 2 masks, 2 block settings
        assert!(report.summaries.iter().all(|s| s.cases == 12));
    }

    #[test]
    fn impossible_tolerance_reports_first_violation() {
        let cfg = VerifyConfig {
            dtype: DType::F32,
            tol: Some(1e-12),
            ..small()
        };
        let report = run_verify(&cfg).unwrap();
        assert!(!report.passed());
        assert!(report.render().contains("first violation"));
        let bad = VerifyConfig {
            tol: Some(-1.0),
            ..small()
        };
        assert!(matches!(run_verify(&bad), Err(Error::Usage(_))));
    }

    #[test]
    fn auto_rejected() {
        let cfg = VerifyConfig {
            methods: vec![MethodId::Auto],
            ..small()
        };
        assert!(matches!(run_verify(&cfg), Err(Error::Usage(_))));
    }
}
