use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::kernels::KernelFamily;

/// Logarithm used in the BIC penalty term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    /// Reproduces tables computed with log₁₀ n.
    Base10,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base10 => x.log10(),
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "e" | "ln" | "natural" => Ok(LogBase::Natural),
            "10" | "base10" => Ok(LogBase::Base10),
            other => Err(Error::Config(format!(
                "unknown BIC log base '{other}' (use e or 10)"
            ))),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::Natural => "e",
            LogBase::Base10 => "10",
        })
    }
}

/// `BIC = −2L + m·log n`.
pub fn bic(log_marginal: f64, m: usize, n: usize, base: LogBase) -> f64 {
    let penalty = if m == 0 {
        0.0
    } else {
        m as f64 * base.log(n as f64)
    };
    -2.0 * log_marginal + penalty
}

/// One row of a kernel comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct BicRow {
    pub family: KernelFamily,
    pub log_marginal: f64,
    pub m: usize,
    pub n: usize,
    pub base: LogBase,
    pub bic: f64,
}

impl BicRow {
    pub fn new(family: KernelFamily, log_marginal: f64, n: usize, base: LogBase) -> Self {
        let m = family.num_params();
        BicRow {
            family,
            log_marginal,
            m,
            n,
            base,
            bic: bic(log_marginal, m, n, base),
        }
    }
}
