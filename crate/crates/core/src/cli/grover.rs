//! Unstructured search with a prior guess: a point well at the marked item
//! (switched on with `s`) plus a Hamming-ball prior at distance `R`
//! (switched off with `s`).

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{csv_writer, kv, num, opt, CliError};
use crate::exact::exact_low_levels;
use crate::model::{PotentialProfile, ProblemInstance, ScheduleTag, WellSpec};
use crate::symmetry::LogBinomial;
use crate::tb::tb_solve;
use crate::BitString;

#[derive(Debug, Clone, PartialEq)]
pub struct GroverPrior {
    /// Qubit counts to sweep.
    pub n_values: Vec<usize>,
    /// Prior distances; `None` means every `R` in `1..=n`.
    pub distances: Option<Vec<usize>>,
    pub prior_depth: f64,
    pub prior_radius: usize,
    /// Grid points before local refinement of each minimum.
    pub s_points: usize,
    pub epsilon: f64,
    /// Also minimize the order-0 tight-binding gap.
    pub with_tb: bool,
}

impl Default for GroverPrior {
    fn default() -> Self {
        Self {
            n_values: vec![20],
            distances: None,
            prior_depth: -0.8,
            prior_radius: 0,
            s_points: 33,
            epsilon: 0.1,
            with_tb: true,
        }
    }
}

impl GroverPrior {
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, v) in kv::pairs(text)? {
            match k.as_str() {
                "n" => {
                    let (a, b) = kv::range::<usize>(&k, &v)?;
                    self.n_values = (a..=b).collect();
                }
                "distances" => self.distances = Some(kv::list(&k, &v)?),
                "prior_depth" => self.prior_depth = kv::value(&k, &v)?,
                "prior_radius" => self.prior_radius = kv::value(&k, &v)?,
                "s_points" => self.s_points = kv::value(&k, &v)?,
                "epsilon" => self.epsilon = kv::value(&k, &v)?,
                "tb" => self.with_tb = kv::value(&k, &v)?,
                _ => return Err(kv::unknown(&k)),
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| !(4..=64).contains(&n)) {
            return Err(CliError::Params("qubit counts must lie in 4..=64".into()));
        }
        if let Some(d) = &self.distances {
            let n_min = *self.n_values.iter().min().expect("non-empty");
            if let Some(&r) = d.iter().find(|&&r| r == 0 || r > n_min) {
                return Err(CliError::Params(format!(
                    "prior distance {r} outside 1..={n_min}"
                )));
            }
        }
        if self.s_points < 3 {
            return Err(CliError::Params("s_points must be at least 3".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Params(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }

    fn distances_for(&self, n: usize) -> Vec<usize> {
        self.distances.clone().unwrap_or_else(|| (1..=n).collect())
    }
}

fn marked_well(n: usize) -> WellSpec<f64> {
    WellSpec::new(
        BitString::zeros(n),
        PotentialProfile::StepWell {
            depth: -1.0,
            radius: 0,
        },
        ScheduleTag::RampUp,
    )
}

/// Marked item at `0^n`, prior centred on `1^R 0^(n-R)`.
pub fn grover_instance(
    n: usize,
    distance: usize,
    prior_depth: f64,
    prior_radius: usize,
) -> Result<ProblemInstance<f64>, CliError> {
    if distance == 0 || distance > n {
        return Err(CliError::Params(format!("prior distance {distance} outside 1..={n}")));
    }
    let center = BitString::new((0..n).map(|q| q < distance).collect());
    let prior = WellSpec::new(
        center,
        PotentialProfile::step(prior_depth, prior_radius)?,
        ScheduleTag::RampDown,
    );
    Ok(ProblemInstance::with_wells(n, vec![marked_well(n), prior])?)
}

/// The search problem without a prior.
pub fn marked_only_instance(n: usize) -> Result<ProblemInstance<f64>, CliError> {
    Ok(ProblemInstance::with_wells(n, vec![marked_well(n)])?)
}

/// Location and value of a minimum gap, with the tight-binding error
/// estimate at that point when available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinGap {
    pub s: f64,
    pub gap: f64,
    pub error_estimate: Option<f64>,
}

/// Minimizes `f` over `[0, 1]`: an evenly spaced grid of `points` values,
/// then golden-section search on the two cells around the best point.
/// `f` returns `None` where the gap is undefined.
pub fn minimize_gap<F>(f: F, points: usize) -> Result<Option<MinGap>, CliError>
where
    F: Fn(f64) -> Result<Option<MinGap>, CliError>,
{
    let grid: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let mut best: Option<(usize, MinGap)> = None;
    for (k, &s) in grid.iter().enumerate() {
        if let Some(m) = f(s)? {
            if best.is_none_or(|(_, b)| m.gap < b.gap) {
                best = Some((k, m));
            }
        }
    }
    let Some((k, mut found)) = best else {
        return Ok(None);
    };
    let mut lo = grid[k.saturating_sub(1)];
    let mut hi = grid[(k + 1).min(points - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let value = |m: &Option<MinGap>| m.map_or(f64::INFINITY, |m| m.gap);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > 1e-12 {
        if value(&f1) <= value(&f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        }
    }
    for m in [f1, f2].into_iter().flatten() {
        if m.gap < found.gap {
            found = m;
        }
    }
    Ok(Some(found))
}

fn exact_min(inst: &ProblemInstance<f64>, points: usize) -> Result<MinGap, CliError> {
    minimize_gap(
        |s| {
            let l = exact_low_levels(inst, s)?;
            Ok(Some(MinGap {
                s,
                gap: l.gap(),
                error_estimate: None,
            }))
        },
        points,
    )?
    .ok_or_else(|| CliError::Params("no gap found".into()))
}

fn tb_min(inst: &ProblemInstance<f64>, points: usize, epsilon: f64) -> Result<Option<MinGap>, CliError> {
    minimize_gap(
        |s| {
            Ok(tb_solve(inst, s, 0, epsilon).ok().and_then(|d| {
                d.gap().map(|gap| MinGap {
                    s,
                    gap,
                    error_estimate: Some(d.error_estimate),
                })
            }))
        },
        points,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Baseline,
    Prior,
    Aggregate,
}

impl RowKind {
    fn keyword(self) -> &'static str {
        match self {
            RowKind::Baseline => "baseline",
            RowKind::Prior => "prior",
            RowKind::Aggregate => "aggregate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroverRow {
    pub kind: RowKind,
    pub n: usize,
    pub distance: Option<usize>,
    /// `C(n, R) / 2^n` for prior rows.
    pub weight: Option<f64>,
    pub exact: MinGap,
    pub tb0: Option<MinGap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroverReport {
    pub rows: Vec<GroverRow>,
}

impl GroverReport {
    fn find(&self, kind: RowKind, n: usize, r: Option<usize>) -> Option<&GroverRow> {
        self.rows
            .iter()
            .find(|row| row.kind == kind && row.n == n && row.distance == r)
    }

    pub fn baseline(&self, n: usize) -> Option<&GroverRow> {
        self.find(RowKind::Baseline, n, None)
    }

    pub fn prior(&self, n: usize, r: usize) -> Option<&GroverRow> {
        self.find(RowKind::Prior, n, Some(r))
    }

    /// Probability-weighted gap `Σ_R P(R) gap(R)`.
    pub fn aggregate(&self, n: usize) -> Option<&GroverRow> {
        self.find(RowKind::Aggregate, n, None)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv_writer(out);
        w.write_record([
            "kind",
            "n",
            "R",
            "weight",
            "s_exact",
            "gap_exact",
            "s_tb0",
            "gap_tb0",
            "error_estimate_tb0",
        ])?;
        for row in &self.rows {
            w.write_record([
                row.kind.keyword().to_string(),
                row.n.to_string(),
                row.distance.map(|r| r.to_string()).unwrap_or_default(),
                opt(row.weight),
                num(row.exact.s),
                num(row.exact.gap),
                opt(row.tb0.map(|m| m.s)),
                opt(row.tb0.map(|m| m.gap)),
                opt(row.tb0.and_then(|m| m.error_estimate)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_grover_prior(params: &GroverPrior) -> Result<GroverReport, CliError> {
    params.validate()?;
    let mut jobs: Vec<(usize, Option<usize>)> = Vec::new();
    for &n in &params.n_values {
        jobs.push((n, None));
        jobs.extend(params.distances_for(n).into_iter().map(|r| (n, Some(r))));
    }
    let solved = jobs
        .par_iter()
        .map(|&(n, r)| {
            let inst = match r {
                None => marked_only_instance(n)?,
                Some(r) => grover_instance(n, r, params.prior_depth, params.prior_radius)?,
            };
            let exact = exact_min(&inst, params.s_points)?;
            let tb0 = if params.with_tb {
                tb_min(&inst, params.s_points, params.epsilon)?
            } else {
                None
            };
            let lb = LogBinomial::<f64>::new(n);
            Ok(GroverRow {
                kind: if r.is_some() { RowKind::Prior } else { RowKind::Baseline },
                n,
                distance: r,
                weight: r.map(|r| lb.choose(n, r) / 2f64.powi(n as i32)),
                exact,
                tb0,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut rows = Vec::with_capacity(solved.len() + params.n_values.len());
    for &n in &params.n_values {
        let group: Vec<&GroverRow> = solved.iter().filter(|row| row.n == n).collect();
        rows.extend(group.iter().map(|&row| row.clone()));
        let priors = group.iter().filter(|row| row.kind == RowKind::Prior);
        let exact_sum: f64 = priors.clone().map(|row| row.weight.unwrap_or(0.0) * row.exact.gap).sum();
        let tb_sum: Option<f64> = priors
            .map(|row| row.tb0.map(|m| row.weight.unwrap_or(0.0) * m.gap))
            .sum();
        rows.push(GroverRow {
            kind: RowKind::Aggregate,
            n,
            distance: None,
            weight: None,
            exact: MinGap {
                s: f64::NAN,
                gap: exact_sum,
                error_estimate: None,
            },
            tb0: tb_sum.map(|gap| MinGap {
                s: f64::NAN,
                gap,
                error_estimate: None,
            }),
        });
    }
    Ok(GroverReport { rows })
}

pub fn cmd_grover_prior(params: &GroverPrior, out: &Path) -> Result<GroverReport, CliError> {
    let report = run_grover_prior(params)?;
    report.write_csv(std::fs::File::create(out)?)?;
    Ok(report)
}
