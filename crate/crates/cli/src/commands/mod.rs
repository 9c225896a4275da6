//! One module per subcommand, plus tables they share.

pub mod compare;
pub mod crossval;
pub mod evaluate;
pub mod sensitivity;
pub mod synth;
pub mod train;

use gpcal_core::optimize::OptimizeResult;
use gpcal_core::{KernelFamily, TrainedModel};
use statrs::statistics::{Data, Distribution, Max, Min, OrderStatistics};

use crate::report::{num, Table};

/// `name,value` rows describing a fitted model.
pub fn hyperparameter_table(model: &TrainedModel) -> Table {
    let kernel = model.kernel();
    let mut t = Table::new(["name", "value"]);
    t.push(vec!["kernel".into(), kernel.family().token().into()]);
    for (name, lp) in kernel
        .family()
        .param_names()
        .iter()
        .zip(kernel.log_params())
    {
        t.push(vec![(*name).into(), num(lp.exp())]);
    }
    t.push(vec!["noise_std".into(), num(model.noise_std())]);
    t.push(vec!["log_marginal".into(), num(model.log_marginal())]);
    t.push(vec!["jitter".into(), num(model.jitter())]);
    t.push(vec!["n_train".into(), model.n_train().to_string()]);
    t
}

pub const OPTIMIZATION_COLUMNS: [&str; 11] = [
    "kernel",
    "restart",
    "status",
    "initial_nlml",
    "nlml",
    "iterations",
    "evaluations",
    "converged",
    "grad_norm",
    "selected",
    "log_params",
];

/// Appends one row per restart; `log_params` holds the final
/// log-hyperparameters (kernel then noise) separated by spaces.
pub fn push_optimization_rows(t: &mut Table, family: KernelFamily, opt: &OptimizeResult) {
    for (i, r) in opt.restarts.iter().enumerate() {
        let selected = (i == opt.best_restart).to_string();
        let row = match r {
            Some(o) => vec![
                family.token().into(),
                i.to_string(),
                "ok".into(),
                num(o.initial_nlml),
                num(o.nlml),
                o.iterations.to_string(),
                o.evaluations.to_string(),
                o.converged.to_string(),
                num(o.grad_norm),
                selected,
                o.params
                    .iter()
                    .map(|p| num(*p))
                    .collect::<Vec<_>>()
                    .join(" "),
            ],
            None => {
                let mut v = vec![family.token().into(), i.to_string(), "failed".into()];
                v.extend(std::iter::repeat_n(String::new(), 6));
                v.push(selected);
                v.push(String::new());
                v
            }
        };
        t.push(row);
    }
}

pub fn optimization_table(family: KernelFamily, opt: &OptimizeResult) -> Table {
    let mut t = Table::new(OPTIMIZATION_COLUMNS);
    push_optimization_rows(&mut t, family, opt);
    t
}

/// Boxplot statistics of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut d = Data::new(values.to_vec());
    Summary {
        min: d.min(),
        q1: d.lower_quartile(),
        median: d.median(),
        q3: d.upper_quartile(),
        max: d.max(),
        mean: d.mean().unwrap_or(f64::NAN),
    }
}

pub const SUMMARY_COLUMNS: [&str; 8] =
    ["set", "metric", "min", "q1", "median", "q3", "max", "mean"];

pub fn summary_cells(set: &str, metric: &str, s: &Summary) -> Vec<String> {
    vec![
        set.into(),
        metric.into(),
        num(s.min),
        num(s.q1),
        num(s.median),
        num(s.q3),
        num(s.max),
        num(s.mean),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_odd_sample() {
        let s = summarize(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!((s.min, s.median, s.max, s.mean), (1.0, 3.0, 5.0, 3.0));
        assert!(s.q1 <= s.median && s.median <= s.q3);
        assert!(s.q1 >= 1.0 && s.q3 <= 5.0);
    }
}
