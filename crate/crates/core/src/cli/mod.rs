//! Sweeps over s grids, CSV output and the reference experiments behind
//! the `hamming-wells` binary.

mod batch;
mod grover;
mod ising;
mod kv;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{brute_force_spectrum, exact_low_levels, ExactError, BRUTE_FORCE_MAX_QUBITS};
use crate::model::{parse_config, Method, ModelError, RunConfig};
use crate::scalar::Real;
use crate::tb::{tb_solve, TbError};

pub use batch::{cmd_random_batch, run_random_batch, write_batch, BatchRow, BatchSummary, RandomBatch, BATCH_HEADER};
pub use grover::{
    cmd_grover_prior, grover_instance, marked_only_instance, minimize_gap, run_grover_prior, GroverPrior,
    GroverReport, GroverRow, MinGap, RowKind,
};
pub use ising::{cmd_ising_map, run_ising_map, IsingMap, IsingReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Incompatible(String),
    #[error("invalid parameter: {0}")]
    Params(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Tb(#[from] TbError),
}

/// Parameter records of the experiment subcommands.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentParams {
    GroverPrior(GroverPrior),
    IsingMap(IsingMap),
    RandomBatch(RandomBatch),
}

/// One CSV row of a sweep; fields a method does not produce are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub s: T,
    pub method: Method,
    pub e0: T,
    pub e1: Option<T>,
    pub gap: Option<T>,
    pub error_estimate: Option<T>,
    pub gamma_tilde: Option<T>,
    pub stable_dim: Option<usize>,
    pub resolved: Option<bool>,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "s",
    "method",
    "E0",
    "E1",
    "gap",
    "error_estimate",
    "gamma_tilde",
    "stable_dim",
    "resolved",
];

/// Full-precision rendering (17 significant digits).
pub(crate) fn num<T: Real>(x: T) -> String {
    format!("{x:.16e}")
}

pub(crate) fn opt<T: Real>(x: Option<T>) -> String {
    x.map(num).unwrap_or_default()
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

impl<T: Real> SweepRow<T> {
    fn record(&self) -> Vec<String> {
        vec![
            num(self.s),
            self.method.to_string(),
            num(self.e0),
            opt(self.e1),
            opt(self.gap),
            opt(self.error_estimate),
            opt(self.gamma_tilde),
            self.stable_dim.map(|d| d.to_string()).unwrap_or_default(),
            self.resolved.map(|r| r.to_string()).unwrap_or_default(),
        ]
    }
}

pub fn write_sweep<T: Real, W: Write>(rows: &[SweepRow<T>], out: W) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Rejects method/instance combinations no solver handles.
pub fn check_method<T: Real>(config: &RunConfig<T>) -> Result<(), CliError> {
    let k = config.instance.well_count();
    let n = config.instance.n();
    match config.method {
        Method::Exact if k > 3 => Err(CliError::Incompatible(format!(
            "method exact supports at most 3 wells, instance has {k}"
        ))),
        Method::Brute if n > BRUTE_FORCE_MAX_QUBITS => Err(CliError::Incompatible(format!(
            "method brute supports at most {BRUTE_FORCE_MAX_QUBITS} qubits, instance has {n}"
        ))),
        Method::Tb0 | Method::Tb1 if k == 0 => Err(CliError::Incompatible(
            "tight binding needs at least one well".into(),
        )),
        _ => Ok(()),
    }
}

/// Solves one grid point with the configured method.
pub fn solve_point<T: Real>(config: &RunConfig<T>, s: T) -> Result<SweepRow<T>, CliError> {
    let inst = &config.instance;
    let method = config.method;
    let plain = |e0: T, e1: T| SweepRow {
        s,
        method,
        e0,
        e1: Some(e1),
        gap: Some(e1 - e0),
        error_estimate: None,
        gamma_tilde: None,
        stable_dim: None,
        resolved: None,
    };
    Ok(match method {
        Method::Brute => {
            let e = brute_force_spectrum(inst, s, 2)?;
            plain(e.values[0], e.values[1])
        }
        Method::Exact => {
            let e = exact_low_levels(inst, s)?;
            plain(e.e0, e.e1)
        }
        Method::Tb0 | Method::Tb1 => {
            let order = u8::from(method == Method::Tb1);
            let d = tb_solve(inst, s, order, config.epsilon)?;
            SweepRow {
                s,
                method,
                e0: d.e0,
                e1: d.e1,
                gap: d.gap(),
                error_estimate: Some(d.error_estimate),
                gamma_tilde: d.gamma_tilde,
                stable_dim: Some(d.stable_dim),
                resolved: Some(d.resolved),
            }
        }
    })
}

/// One row per grid point, in grid order.
pub fn sweep<T: Real>(config: &RunConfig<T>) -> Result<Vec<SweepRow<T>>, CliError> {
    check_method(config)?;
    config
        .s_grid
        .points()
        .into_par_iter()
        .map(|s| solve_point(config, s))
        .collect()
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a configuration, sweeps it and writes the CSV to `out`.
/// `epsilon` overrides the configured Fix–Heiberger tolerance.
pub fn cmd_solve(config_path: &Path, out: &Path, epsilon: Option<f64>) -> Result<Vec<SweepRow<f64>>, CliError> {
    let mut config: RunConfig<f64> = parse_config(&read_text(config_path)?)?;
    if let Some(eps) = epsilon {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::Params(format!("epsilon {eps} outside (0, 1)")));
        }
        config.epsilon = eps;
    }
    let rows = sweep(&config)?;
    write_sweep(&rows, std::fs::File::create(out)?)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemInstance;

    #[test]
    fn free_driver_row() {
        let mut config = RunConfig::new(ProblemInstance::<f64>::with_wells(10, vec![]).unwrap(), Method::Brute);
        config.s_grid = crate::model::SGrid::new(0.0, 0.0, 1);
        let rows = sweep(&config).unwrap();
        assert!((rows[0].e0 + 1.0).abs() < 1e-10);
        assert!((rows[0].gap.unwrap() - 0.2).abs() < 1e-10);
        let mut buf = Vec::new();
        write_sweep(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[1], "brute");
        assert!(fields[5].is_empty() && fields[8].is_empty());
        assert!(!text.contains('\r'));
    }

    #[test]
    fn incompatible_methods() {
        let doc = "n = 4\nmethod = exact\nwell center=0000 depth=-1 radius=0\nwell center=0001 depth=-1 radius=0\nwell center=0011 depth=-1 radius=0\nwell center=0111 depth=-1 radius=0";
        let config: RunConfig<f64> = parse_config(doc).unwrap();
        assert!(matches!(check_method(&config), Err(CliError::Incompatible(_))));
    }

    #[test]
    fn number_format_round_trips() {
        let x = 0.1f64 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }
}
