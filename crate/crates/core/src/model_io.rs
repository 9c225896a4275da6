//! Plain-text persistence for [`TrainedModel`].
//!
//! ```text
//! gpcal-model v1
//! kernel rq
//! log_params <p1> <p2> [<p3>]
//! noise_std <v>
//! jitter <v>
//! target_offset <v>
//! log_marginal <v>
//! transform none | transform <min_v> <min_t> <max_v> <max_t>
//! train <n> <dim>
//! <n rows: dim inputs followed by alpha_i>
//! end
//! ```
//!
//! Every float is written with 17 significant digits, so a load reproduces
//! the stored values bit for bit. The Cholesky factor is not stored; it is
//! recomputed on load using the recorded jitter.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::NormalizationTransform;
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::gp::TrainedModel;
use crate::kernels::{KernelFamily, KernelSpec};

pub const FORMAT_HEADER: &str = "gpcal-model v1";

pub fn write_model(model: &TrainedModel, out: &mut impl Write) -> std::io::Result<()> {
    let kernel = model.kernel();
    let join = |vals: &[f64]| {
        vals.iter()
            .map(|v| fmt_f64(*v))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "{FORMAT_HEADER}")?;
    writeln!(out, "kernel {}", kernel.family().token())?;
    writeln!(out, "log_params {}", join(kernel.log_params()))?;
    writeln!(out, "noise_std {}", fmt_f64(model.noise_std()))?;
    writeln!(out, "jitter {}", fmt_f64(model.jitter()))?;
    writeln!(out, "target_offset {}", fmt_f64(model.target_offset()))?;
    writeln!(out, "log_marginal {}", fmt_f64(model.log_marginal()))?;
    match model.input_transform() {
        None => writeln!(out, "transform none")?,
        Some(t) => writeln!(
            out,
            "transform {}",
            join(&[t.min[0], t.min[1], t.max[0], t.max[1]])
        )?,
    }
    let x = model.train_inputs();
    writeln!(out, "train {} {}", x.nrows(), x.ncols())?;
    for (i, a) in model.alpha().iter().enumerate() {
        let mut row: Vec<f64> = x.row(i).iter().copied().collect();
        row.push(*a);
        writeln!(out, "{}", join(&row))?;
    }
    writeln!(out, "end")
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_model(model, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(file)
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    line: usize,
}

impl<R: Read> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(s)) => Ok(s),
            Some(Err(e)) => Err(Error::Format(format!("line {}: {e}", self.line))),
            None => Err(Error::Format(format!(
                "line {}: unexpected end of file",
                self.line
            ))),
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Format(format!("line {}: {msg}", self.line))
    }

    /// Reads `key v1 v2 ...` and returns the value tokens.
    fn field(&mut self, key: &str) -> Result<Vec<String>> {
        let s = self.next()?;
        let mut parts = s.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected '{key}'")));
        }
        Ok(parts.map(str::to_owned).collect())
    }

    fn floats(&self, tokens: &[String]) -> Result<Vec<f64>> {
        tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(format!("invalid number '{t}'")))
            })
            .collect()
    }

    fn scalar(&mut self, key: &str) -> Result<f64> {
        let t = self.field(key)?;
        let v = self.floats(&t)?;
        if v.len() != 1 {
            return Err(self.err(format!("'{key}' takes one value")));
        }
        Ok(v[0])
    }
}

pub fn read_model(reader: impl Read) -> Result<TrainedModel> {
    let mut lines = Lines {
        inner: BufReader::new(reader).lines(),
        line: 0,
    };
    let header = lines.next()?;
    if header.trim_end() != FORMAT_HEADER {
        return Err(lines.err(format!(
            "unsupported model format '{}' (expected '{FORMAT_HEADER}')",
            header.trim_end()
        )));
    }
    let fam_tok = lines.field("kernel")?;
    let family: KernelFamily = fam_tok
        .first()
        .ok_or_else(|| lines.err("missing kernel name"))?
        .parse()
        .map_err(|e| lines.err(e))?;
    let lp = lines.field("log_params")?;
    let log_params = lines.floats(&lp)?;
    if log_params.len() != family.num_params() {
        return Err(lines.err(format!(
            "{} expects {} parameters",
            family.token(),
            family.num_params()
        )));
    }
    let kernel = KernelSpec::from_log_params(family, &log_params).map_err(|e| lines.err(e))?;
    let noise_std = lines.scalar("noise_std")?;
    let jitter = lines.scalar("jitter")?;
    let target_offset = lines.scalar("target_offset")?;
    let log_marginal = lines.scalar("log_marginal")?;
    let tr = lines.field("transform")?;
    let transform = match tr.as_slice() {
        [none] if none == "none" => None,
        _ => {
            let v = lines.floats(&tr)?;
            if v.len() != 4 {
                return Err(lines.err("transform takes 'none' or four values"));
            }
            Some(
                NormalizationTransform::new([v[0], v[1]], [v[2], v[3]])
                    .map_err(|e| lines.err(e))?,
            )
        }
    };
    let dims = lines.field("train")?;
    let parse_usize = |t: Option<&String>| t.and_then(|s| s.parse::<usize>().ok());
    let (Some(n), Some(dim)) = (parse_usize(dims.first()), parse_usize(dims.get(1))) else {
        return Err(lines.err("'train' needs row and column counts"));
    };
    if n == 0 || dim == 0 || dims.len() != 2 {
        return Err(lines.err("'train' needs positive row and column counts"));
    }
    let mut inputs = Vec::with_capacity(n * dim);
    let mut alpha = Vec::with_capacity(n);
    for _ in 0..n {
        let s = lines.next()?;
        let toks: Vec<String> = s.split_whitespace().map(str::to_owned).collect();
        let v = lines.floats(&toks)?;
        if v.len() != dim + 1 {
            return Err(lines.err(format!("expected {} values", dim + 1)));
        }
        inputs.extend_from_slice(&v[..dim]);
        alpha.push(v[dim]);
    }
    if lines.next()?.trim() != "end" {
        return Err(lines.err("expected 'end'"));
    }
    if !(noise_std > 0.0) || jitter < 0.0 {
        return Err(Error::Format(
            "noise_std must be > 0 and jitter >= 0".into(),
        ));
    }
    let x = DMatrix::from_row_slice(n, dim, &inputs);
    TrainedModel::from_parts(
        x,
        kernel,
        noise_std,
        jitter,
        alpha,
        target_offset,
        transform,
        log_marginal,
    )
}
