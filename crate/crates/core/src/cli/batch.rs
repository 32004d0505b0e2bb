//! Seeded batches of random point-well instances comparing the order-0
//! tight-binding gap with an exact or brute-force oracle.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{csv_writer, kv, num, opt, CliError};
use crate::exact::{brute_force_spectrum, exact_low_levels};
use crate::model::{PotentialProfile, ProblemInstance, SGrid, ScheduleTag, WellSpec};
use crate::tb::tb_solve;
use crate::BitString;

/// Depths are drawn on a grid of this spacing.
const DEPTH_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomBatch {
    pub runs: usize,
    /// Inclusive qubit range.
    pub n_range: (usize, usize),
    /// Inclusive well-count range.
    pub k_range: (usize, usize),
    /// Inclusive depth range `(deepest, shallowest)`.
    pub depth_range: (f64, f64),
    pub s_grid: SGrid<f64>,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for RandomBatch {
    fn default() -> Self {
        Self {
            runs: 200,
            n_range: (4, 10),
            k_range: (2, 10),
            depth_range: (-5.99, -1.0),
            s_grid: SGrid::new(0.15, 0.95, 17),
            seed: 2450,
            epsilon: 0.1,
        }
    }
}

impl RandomBatch {
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, v) in kv::pairs(text)? {
            match k.as_str() {
                "runs" => self.runs = kv::value(&k, &v)?,
                "n" => self.n_range = kv::range(&k, &v)?,
                "K" | "wells" => self.k_range = kv::range(&k, &v)?,
                "depth" => self.depth_range = kv::range(&k, &v)?,
                "s" => {
                    let (a, b) = kv::range(&k, &v)?;
                    self.s_grid = SGrid::new(a, b, self.s_grid.count);
                }
                "s_count" => self.s_grid = SGrid::new(self.s_grid.start, self.s_grid.end, kv::value(&k, &v)?),
                "seed" => self.seed = kv::value(&k, &v)?,
                "epsilon" => self.epsilon = kv::value(&k, &v)?,
                _ => return Err(kv::unknown(&k)),
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let (n0, n1) = self.n_range;
        let (k0, k1) = self.k_range;
        let (d0, d1) = self.depth_range;
        if n0 < 1 || n0 > n1 || n1 > 12 {
            return Err(CliError::Params("n range must lie within 1..=12".into()));
        }
        if k0 < 1 || k0 > k1 || (1usize << n0) < k1 {
            return Err(CliError::Params(format!(
                "well counts {k0}..={k1} do not fit on {n0} qubits"
            )));
        }
        if !(d0 <= d1 && d1 <= 0.0) {
            return Err(CliError::Params("depth range must satisfy deepest <= shallowest <= 0".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Params(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }

    /// The instance of run `run`, reproducible from `(seed, run)` alone.
    pub fn instance(&self, run: usize) -> Result<ProblemInstance<f64>, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(run as u64);
        let n = rng.random_range(self.n_range.0..=self.n_range.1);
        let k = rng.random_range(self.k_range.0..=self.k_range.1.min(1 << n));
        let (deep, shallow) = self.depth_range;
        let steps = ((shallow - deep) / DEPTH_STEP).round() as u64;
        let mut centers = BTreeSet::new();
        let mut wells = Vec::with_capacity(k);
        while wells.len() < k {
            let mask = rng.random_range(0..1u64 << n);
            if !centers.insert(mask) {
                continue;
            }
            let depth = shallow - DEPTH_STEP * rng.random_range(0..=steps) as f64;
            // A zero-depth well is a flat profile, not a step.
            let profile = if depth < 0.0 {
                PotentialProfile::StepWell { depth, radius: 0 }
            } else {
                PotentialProfile::Tabulated { values: vec![0.0; n + 1] }
            };
            wells.push(WellSpec::new(BitString::from_mask(mask, n), profile, ScheduleTag::RampUp));
        }
        Ok(ProblemInstance::with_wells(n, wells)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub run: usize,
    pub n: usize,
    pub k: usize,
    pub s: f64,
    pub gap_tb0: Option<f64>,
    pub gap_oracle: f64,
    pub relative_error: Option<f64>,
    pub error_estimate: f64,
    pub gamma_tilde: Option<f64>,
    /// `error_estimate / gamma_tilde` on resolved points.
    pub bound: Option<f64>,
    pub resolved: bool,
}

impl BatchRow {
    /// Resolved and the relative error sits at or below the bound.
    pub fn within(&self) -> Option<bool> {
        match (self.resolved, self.relative_error, self.bound) {
            (true, Some(e), Some(b)) => Some(e <= b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSummary {
    pub points: usize,
    pub resolved: usize,
    pub within: usize,
}

impl BatchSummary {
    pub fn from_rows(rows: &[BatchRow]) -> Self {
        Self {
            points: rows.len(),
            resolved: rows.iter().filter(|r| r.resolved).count(),
            within: rows.iter().filter(|r| r.within() == Some(true)).count(),
        }
    }

    /// Fraction of resolved points within the bound; 1 when none resolved.
    pub fn fraction(&self) -> f64 {
        if self.resolved == 0 {
            1.0
        } else {
            self.within as f64 / self.resolved as f64
        }
    }

    /// Empirical CDF of `relative_error / bound` over resolved points at
    /// the given thresholds.
    pub fn cdf(rows: &[BatchRow], thresholds: &[f64]) -> Vec<f64> {
        let ratios: Vec<f64> = rows
            .iter()
            .filter_map(|r| match (r.resolved, r.relative_error, r.bound) {
                (true, Some(e), Some(b)) => Some(e / b),
                _ => None,
            })
            .collect();
        thresholds
            .iter()
            .map(|&t| {
                if ratios.is_empty() {
                    1.0
                } else {
                    ratios.iter().filter(|&&x| x <= t).count() as f64 / ratios.len() as f64
                }
            })
            .collect()
    }
}

fn oracle_gap(inst: &ProblemInstance<f64>, s: f64) -> Result<f64, CliError> {
    if inst.well_count() <= 3 {
        Ok(exact_low_levels(inst, s)?.gap())
    } else {
        let e = brute_force_spectrum(inst, s, 2)?;
        Ok(e.values[1] - e.values[0])
    }
}

fn run_one(params: &RandomBatch, run: usize) -> Result<Vec<BatchRow>, CliError> {
    let inst = params.instance(run)?;
    params
        .s_grid
        .points()
        .into_iter()
        .map(|s| {
            let d = tb_solve(&inst, s, 0, params.epsilon)?;
            let gap_oracle = oracle_gap(&inst, s)?;
            let gap_tb0 = d.gap();
            let relative_error = gap_tb0.map(|g| (g - gap_oracle).abs() / gap_oracle);
            let bound = match d.gamma_tilde {
                Some(g) if d.resolved => Some(d.error_estimate / g),
                _ => None,
            };
            Ok(BatchRow {
                run,
                n: inst.n(),
                k: inst.well_count(),
                s,
                gap_tb0,
                gap_oracle,
                relative_error,
                error_estimate: d.error_estimate,
                gamma_tilde: d.gamma_tilde,
                bound,
                resolved: d.resolved,
            })
        })
        .collect()
}

/// Rows ordered by run, then by `s`.
pub fn run_random_batch(params: &RandomBatch) -> Result<Vec<BatchRow>, CliError> {
    params.validate()?;
    let per_run: Vec<Vec<BatchRow>> = (0..params.runs)
        .into_par_iter()
        .map(|run| run_one(params, run))
        .collect::<Result<_, _>>()?;
    Ok(per_run.into_iter().flatten().collect())
}

pub const BATCH_HEADER: [&str; 12] = [
    "run",
    "n",
    "K",
    "s",
    "gap_tb0",
    "gap_oracle",
    "relative_error",
    "error_estimate",
    "gamma_tilde",
    "bound",
    "resolved",
    "within",
];

pub fn write_batch<W: Write>(rows: &[BatchRow], out: W) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record(BATCH_HEADER)?;
    for r in rows {
        w.write_record([
            r.run.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            num(r.s),
            opt(r.gap_tb0),
            num(r.gap_oracle),
            opt(r.relative_error),
            num(r.error_estimate),
            opt(r.gamma_tilde),
            opt(r.bound),
            r.resolved.to_string(),
            r.within().map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_random_batch(params: &RandomBatch, out: &Path) -> Result<BatchSummary, CliError> {
    let rows = run_random_batch(params)?;
    write_batch(&rows, std::fs::File::create(out)?)?;
    Ok(BatchSummary::from_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RandomBatch {
        RandomBatch {
            runs: 6,
            n_range: (4, 6),
            k_range: (2, 5),
            s_grid: SGrid::new(0.2, 0.9, 4),
            ..RandomBatch::default()
        }
    }

    #[test]
    fn instances_follow_ranges() {
        let p = RandomBatch::default();
        for run in 0..50 {
            let inst = p.instance(run).unwrap();
            assert!((4..=10).contains(&inst.n()));
            assert!((2..=10).contains(&inst.well_count()));
            let centers: BTreeSet<_> = inst.wells().iter().map(|w| w.center.to_mask()).collect();
            assert_eq!(centers.len(), inst.well_count());
            for w in inst.wells() {
                let PotentialProfile::StepWell { depth, radius } = w.profile else {
                    panic!("step wells only")
                };
                assert_eq!(radius, 0);
                assert!((-5.99 - 1e-12..=-1.0 + 1e-12).contains(&depth));
            }
        }
        assert_eq!(p.instance(7).unwrap(), p.instance(7).unwrap());
    }

    #[test]
    fn zero_depth_reduces_to_driver() {
        let p = RandomBatch {
            depth_range: (0.0, 0.0),
            ..small()
        };
        for r in run_random_batch(&p).unwrap() {
            let a = 1.0 - r.s;
            assert!((r.gap_oracle - 2.0 * a / r.n as f64).abs() < 1e-10);
            if let Some(g) = r.gap_tb0 {
                assert!(g.abs() < 1e-10 || (g - r.gap_oracle).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deterministic_output() {
        let p = small();
        let render = || {
            let mut buf = Vec::new();
            write_batch(&run_random_batch(&p).unwrap(), &mut buf).unwrap();
            buf
        };
        let a = render();
        assert_eq!(a, render());
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 * 4);
    }
}
