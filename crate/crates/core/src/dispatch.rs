//! Front door: validate, resolve `auto` to a concrete kernel from a shape-based
//! rule table, run it.
//!
//! Policy files hold one rule per line, `batch_min,batch_max,seq_min,seq_max,mask,method`,
//! with `*` as a wildcard for any field but the method. Blank lines and `#`
//! comments are skipped. The first matching rule wins; if none matches the
//! policy's default applies.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inputs::{validate_inputs, AttnInputs, ProblemShape};
use crate::mask::MaskKind;
use crate::methods::{run_method, BlockParams, KernelOutput, MethodId};

/// Environment variable naming a policy file.
pub const POLICY_ENV: &str = "LINATTN_POLICY";

/// The default rule table. The winners follow published GPU latency tables and
/// are a heuristic on any other hardware.
pub const DEFAULT_POLICY: &str = "\
# batch_min,batch_max,seq_min,seq_max,mask,method
1,1,*,128,binary,vanilla
1,1,129,*,*,two-level-block
16,*,*,*,*,row-based
";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Bound {
    min: Option<usize>,
    max: Option<usize>,
}

impl Bound {
    fn contains(&self, x: usize) -> bool {
        self.min.is_none_or(|m| x >= m) && self.max.is_none_or(|m| x <= m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    batch: Bound,
    seqlen: Bound,
    mask: Option<MaskKind>,
    method: MethodId,
    text: String,
}

impl Rule {
    fn matches(&self, shape: &ProblemShape, mask: MaskKind) -> bool {
        self.batch.contains(shape.batch)
            && self.seqlen.contains(shape.seqlen)
            && self.mask.is_none_or(|m| m == mask)
    }

    pub fn method(&self) -> MethodId {
        self.method
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DispatchPolicy {
    rules: Vec<Rule>,
    default: MethodId,
}

impl Default for DispatchPolicy {
    fn default() -> Self {
        DispatchPolicy::parse(DEFAULT_POLICY).expect("built-in policy parses")
    }
}

fn parse_field(field: &str, line: usize) -> Result<Option<usize>> {
    if field == "*" {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| {
        Error::Usage(format!(
            "policy line {line}: `{field}` is not a count or `*`"
        ))
    })
}

impl DispatchPolicy {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split(',').map(str::trim).collect();
            let [bmin, bmax, smin, smax, mask, method] = fields[..] else {
                return Err(Error::Usage(format!(
                    "policy line {line}: expected 6 comma-separated fields, got {}",
                    fields.len()
                )));
            };
            let mask = match mask {
                "*" => None,
                m => Some(m.parse::<MaskKind>().map_err(|_| {
                    Error::Usage(format!("policy line {line}: unknown mask `{m}`"))
                })?),
            };
            let method: MethodId = method.parse().map_err(|_| {
                Error::Usage(format!("policy line {line}: unknown method `{method}`"))
            })?;
            if method == MethodId::Auto {
                return Err(Error::Usage(format!(
                    "policy line {line}: a rule cannot resolve to `auto`"
                )));
            }
            rules.push(Rule {
                batch: Bound {
                    min: parse_field(bmin, line)?,
                    max: parse_field(bmax, line)?,
                },
                seqlen: Bound {
                    min: parse_field(smin, line)?,
                    max: parse_field(smax, line)?,
                },
                mask,
                method,
                text: body.to_string(),
            });
        }
        Ok(DispatchPolicy {
            rules,
            default: MethodId::TwoLevelBlock,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DispatchPolicy::parse(&text)
    }

    /// The policy named by `LINATTN_POLICY`, or the built-in one.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(POLICY_ENV) {
            Some(p) if !p.is_empty() => DispatchPolicy::load(Path::new(&p)),
            _ => Ok(DispatchPolicy::default()),
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn default_method(&self) -> MethodId {
        self.default
    }

    /// First matching rule, else the default. Depends only on shape and mask kind.
    pub fn resolve(&self, shape: &ProblemShape, mask: MaskKind) -> Resolution {
        match self.rules.iter().find(|r| r.matches(shape, mask)) {
            Some(rule) => Resolution {
                method: rule.method,
                rule: format!("rule `{rule}`"),
            },
            None => Resolution {
                method: self.default,
                rule: "default".to_string(),
            },
        }
    }
}

/// Outcome of resolving `auto`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub method: MethodId,
    /// Which rule matched, for humans.
    pub rule: String,
}

/// Resolves a bundle against `policy` without running anything.
pub fn explain(inputs: &AttnInputs, policy: &DispatchPolicy) -> Resolution {
    policy.resolve(&inputs.shape(), inputs.mask)
}

/// Result of [`decode`]: the output plus which kernel produced it.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub method: MethodId,
    pub output: KernelOutput,
}

/// Runs `method` on `inputs`, resolving `auto` through `policy` first.
pub fn decode(
    inputs: &AttnInputs,
    method: MethodId,
    policy: &DispatchPolicy,
    params: &BlockParams,
) -> Result<Decoded> {
    validate_inputs(inputs)?;
    let method = match method {
        MethodId::Auto => explain(inputs, policy).method,
        m => m,
    };
    let output = run_method(method, inputs, params).map_err(|e| match e {
        Error::Resource {
            what, needed, cap, ..
        } if method == MethodId::Vanilla => Error::Resource {
            what,
            needed,
            cap,
            hint: "; try a linear method such as `two-level-block` or `row-based`".to_string(),
        },
        e => e,
    })?;
    Ok(Decoded { method, output })
}
