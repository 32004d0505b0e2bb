//! Mapping a small transverse-field Ising model onto point wells.
//!
//! Spin configuration `z` becomes the well centred on the string that
//! repeats each spin bit `m` times (spare qubits stay 0). Well depths are
//! calibrated so the diagonal of `S⁻¹ H_TB` at `s*` equals the classical
//! Ising energies `-Σ J_ij z_i z_j - α`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{csv_writer, kv, num, opt, CliError};
use crate::exact::brute_force_ground_distribution;
use crate::geigen::sym_eig;
use crate::model::{PotentialProfile, ProblemInstance, ScheduleTag, WellSpec};
use crate::tb::assemble_tb;
use crate::BitString;

#[derive(Debug, Clone, PartialEq)]
pub struct IsingMap {
    /// Spin count `L`.
    pub spins: usize,
    /// Couplings `J_ij`, symmetric, zero diagonal.
    pub couplings: Vec<Vec<f64>>,
    /// Transverse fields `B_i`.
    pub fields: Vec<f64>,
    pub alpha: f64,
    pub s_star: f64,
    pub n: usize,
    /// Qubits per spin.
    pub block: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl IsingMap {
    pub fn uniform(spins: usize, j: f64, b: f64) -> Self {
        Self {
            spins,
            couplings: (0..spins)
                .map(|a| (0..spins).map(|c| if a == c { 0.0 } else { j }).collect())
                .collect(),
            fields: vec![b; spins],
            alpha: 30.0,
            s_star: 0.95,
            n: 10,
            block: 3,
            max_iterations: 200,
            tolerance: 1e-10,
        }
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut j_values: Option<Vec<f64>> = None;
        let mut b_values: Option<Vec<f64>> = None;
        for (k, v) in kv::pairs(text)? {
            match k.as_str() {
                "L" | "spins" => self.spins = kv::value(&k, &v)?,
                "J" => j_values = Some(kv::list(&k, &v)?),
                "B" => b_values = Some(kv::list(&k, &v)?),
                "alpha" => self.alpha = kv::value(&k, &v)?,
                "s_star" => self.s_star = kv::value(&k, &v)?,
                "n" => self.n = kv::value(&k, &v)?,
                "m" | "block" => self.block = kv::value(&k, &v)?,
                "max_iterations" => self.max_iterations = kv::value(&k, &v)?,
                "tolerance" => self.tolerance = kv::value(&k, &v)?,
                _ => return Err(kv::unknown(&k)),
            }
        }
        let spins = self.spins;
        let j = j_values.unwrap_or_else(|| vec![self.couplings.first().and_then(|r| r.get(1)).copied().unwrap_or(1.0)]);
        let b = b_values.unwrap_or_else(|| vec![self.fields.first().copied().unwrap_or(0.0)]);
        self.set_couplings(&j)?;
        self.fields = match b.len() {
            1 => vec![b[0]; spins],
            len if len == spins => b,
            len => return Err(CliError::Params(format!("B needs 1 or {spins} values, got {len}"))),
        };
        Ok(())
    }

    /// One value for every pair, or the strict upper triangle row by row.
    #[allow(clippy::needless_range_loop)]
    fn set_couplings(&mut self, j: &[f64]) -> Result<(), CliError> {
        let l = self.spins;
        let pairs = l * l.saturating_sub(1) / 2;
        let mut m = vec![vec![0.0; l]; l];
        if j.len() != 1 && j.len() != pairs {
            return Err(CliError::Params(format!("J needs 1 or {pairs} values, got {}", j.len())));
        }
        let mut it = 0;
        for a in 0..l {
            for c in a + 1..l {
                let v = if j.len() == 1 { j[0] } else { j[it] };
                it += 1;
                m[a][c] = v;
                m[c][a] = v;
            }
        }
        self.couplings = m;
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(1..=4).contains(&self.spins) {
            return Err(CliError::Params("spin count must lie in 1..=4".into()));
        }
        if self.block == 0 || self.block * self.spins > self.n {
            return Err(CliError::Params(format!(
                "{} spins of {} qubits do not fit in {} qubits",
                self.spins, self.block, self.n
            )));
        }
        if !(self.s_star > 0.0 && self.s_star < 1.0) {
            return Err(CliError::Params("s_star must lie in (0, 1)".into()));
        }
        if self.couplings.len() != self.spins || self.fields.len() != self.spins {
            return Err(CliError::Params("coupling and field sizes must match the spin count".into()));
        }
        Ok(())
    }

    fn spin(z: usize, i: usize) -> f64 {
        if z >> i & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Classical energy `-Σ_{i<j} J_ij z_i z_j - α` of configuration `z`.
    pub fn classical_energy(&self, z: usize) -> f64 {
        let mut e = -self.alpha;
        for a in 0..self.spins {
            for c in a + 1..self.spins {
                e -= self.couplings[a][c] * Self::spin(z, a) * Self::spin(z, c);
            }
        }
        e
    }

    /// `H_I` in the configuration basis.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let dim = 1 << self.spins;
        DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                self.classical_energy(r)
            } else {
                let flip = r ^ c;
                if flip.is_power_of_two() {
                    -self.fields[flip.trailing_zeros() as usize]
                } else {
                    0.0
                }
            }
        })
    }

    pub fn center(&self, z: usize) -> BitString {
        BitString::new(
            (0..self.n)
                .map(|q| q < self.spins * self.block && z >> (q / self.block) & 1 == 1)
                .collect(),
        )
    }

    pub fn instance(&self, depths: &[f64]) -> Result<ProblemInstance<f64>, CliError> {
        let wells = depths
            .iter()
            .enumerate()
            .map(|(z, &d)| {
                Ok(WellSpec::new(
                    self.center(z),
                    PotentialProfile::step(d, 0)?,
                    ScheduleTag::RampUp,
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(ProblemInstance::with_wells(self.n, wells)?)
    }
}

impl Default for IsingMap {
    fn default() -> Self {
        Self::uniform(3, 1.0, 0.015)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingReport {
    /// Calibrated depths `V_z` (the well potential is `s* V_z` at `s*`).
    pub depths: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest diagonal mismatch after calibration.
    pub calibration_residual: f64,
    /// `max |S⁻¹ H_TB - H_I|`.
    pub residual: f64,
    pub effective_diagonal: Vec<f64>,
    pub ising_probabilities: Vec<f64>,
    pub effective_probabilities: Vec<f64>,
    /// Ground-state weight on each well centre at `s*`, renormalized;
    /// present when the full space is small enough.
    pub adiabatic_probabilities: Option<Vec<f64>>,
}

impl IsingReport {
    pub fn max_effective_vs_ising(&self) -> f64 {
        max_diff(&self.effective_probabilities, &self.ising_probabilities)
    }

    pub fn max_adiabatic_vs_effective(&self) -> Option<f64> {
        self.adiabatic_probabilities
            .as_ref()
            .map(|p| max_diff(p, &self.effective_probabilities))
    }

    pub fn write_csv<W: Write>(&self, params: &IsingMap, out: W) -> Result<(), CliError> {
        let mut w = csv_writer(out);
        w.write_record([
            "state",
            "depth",
            "scaled_depth",
            "target_diagonal",
            "effective_diagonal",
            "ising_probability",
            "effective_probability",
            "adiabatic_probability",
        ])?;
        for z in 0..self.depths.len() {
            let label: String = (0..params.spins)
                .map(|i| if z >> i & 1 == 1 { '1' } else { '0' })
                .collect();
            w.write_record([
                label,
                num(self.depths[z]),
                num(self.depths[z] * params.s_star),
                num(params.classical_energy(z)),
                num(self.effective_diagonal[z]),
                num(self.ising_probabilities[z]),
                num(self.effective_probabilities[z]),
                opt(self.adiabatic_probabilities.as_ref().map(|p| p[z])),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `key=value` summary lines.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "iterations={}\nconverged={}\ncalibration_residual={:e}\nresidual_max={:e}\nmax_prob_diff_effective_vs_ising={:e}\n",
            self.iterations,
            self.converged,
            self.calibration_residual,
            self.residual,
            self.max_effective_vs_ising()
        );
        if let Some(d) = self.max_adiabatic_vs_effective() {
            s.push_str(&format!("max_prob_diff_adiabatic_vs_effective={d:e}\n"));
        }
        s
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Ground-state probabilities of a symmetric matrix, averaged over every
/// level within `tol` of the lowest.
pub(crate) fn ground_distribution(h: &DMatrix<f64>, tol: f64) -> Vec<f64> {
    let e = sym_eig(h).expect("symmetric input");
    let ground: Vec<usize> = (0..e.values.len())
        .filter(|&k| e.values[k] - e.values[0] <= tol)
        .collect();
    (0..h.nrows())
        .map(|r| ground.iter().map(|&k| e.vectors[(r, k)].powi(2)).sum::<f64>() / ground.len() as f64)
        .collect()
}

/// `S⁻¹ H` and its Löwdin-symmetric form `S^{-1/2} H S^{-1/2}`.
fn effective(h: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), CliError> {
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| CliError::Params("overlap matrix is not positive definite".into()))?;
    let general = chol.solve(h);
    let es = sym_eig(s).expect("overlap is symmetric");
    let inv_sqrt = &es.vectors
        * DMatrix::from_diagonal(&DVector::from_iterator(es.values.len(), es.values.iter().map(|v| 1.0 / v.sqrt())))
        * es.vectors.transpose();
    let sym = &inv_sqrt * h * &inv_sqrt;
    let sym = (&sym + sym.transpose()) * 0.5;
    Ok((general, sym))
}

const DEGENERACY_TOL: f64 = 1e-9;
const ADIABATIC_MAX_QUBITS: usize = 14;

pub fn run_ising_map(params: &IsingMap) -> Result<IsingReport, CliError> {
    params.validate()?;
    let dim = 1 << params.spins;
    let targets: Vec<f64> = (0..dim).map(|z| params.classical_energy(z)).collect();
    let b = params.s_star;
    let mut depths: Vec<f64> = targets.iter().map(|t| t / b).collect();
    let mut iterations = 0;
    let mut converged = false;
    let mut mismatch = f64::INFINITY;
    let mut last = None;
    while iterations < params.max_iterations {
        iterations += 1;
        let inst = params.instance(&depths)?;
        let sys = assemble_tb(&inst, params.s_star, 0)?;
        let (general, sym) = effective(&sys.hamiltonian, &sys.overlap)?;
        let diff: Vec<f64> = (0..dim).map(|z| targets[z] - general[(z, z)]).collect();
        mismatch = diff.iter().fold(0.0, |m, d: &f64| m.max(d.abs()));
        last = Some((inst, general, sym));
        if mismatch < params.tolerance {
            converged = true;
            break;
        }
        for (d, delta) in depths.iter_mut().zip(&diff) {
            *d += delta / b;
        }
    }
    let (inst, general, sym) = last.expect("at least one iteration");
    let h_ising = params.hamiltonian();
    let residual = (&general - &h_ising).abs().max();
    let adiabatic = if params.n <= ADIABATIC_MAX_QUBITS {
        let p = brute_force_ground_distribution(&inst, params.s_star, DEGENERACY_TOL)?;
        let weights: Vec<f64> = (0..dim)
            .map(|z| p[params.center(z).to_mask().expect("n <= 14") as usize])
            .collect();
        let total: f64 = weights.iter().sum();
        Some(weights.into_iter().map(|w| w / total).collect())
    } else {
        None
    };
    Ok(IsingReport {
        depths,
        iterations,
        converged,
        calibration_residual: mismatch,
        residual,
        effective_diagonal: (0..dim).map(|z| general[(z, z)]).collect(),
        ising_probabilities: ground_distribution(&h_ising, DEGENERACY_TOL),
        effective_probabilities: ground_distribution(&sym, DEGENERACY_TOL),
        adiabatic_probabilities: adiabatic,
    })
}

/// Runs the mapping and writes the per-configuration CSV. A calibration
/// that fails to converge is still written and reported through
/// [`IsingReport::converged`].
pub fn cmd_ising_map(params: &IsingMap, out: &Path) -> Result<IsingReport, CliError> {
    let report = run_ising_map(params)?;
    report.write_csv(params, std::fs::File::create(out)?)?;
    Ok(report)
}
