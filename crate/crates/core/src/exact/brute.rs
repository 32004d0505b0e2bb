use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenResult, ExactError};
use crate::geigen::eig_sorted;
use crate::model::ProblemInstance;
use crate::scalar::{count, lit, to_f64, Real};

/// Largest qubit count the oracle accepts.
pub const BRUTE_FORCE_MAX_QUBITS: usize = 16;

/// Full matrices are diagonalized densely up to this size.
const DENSE_MAX_QUBITS: usize = 8;

/// The full `2^n` Hamiltonian, stored as its diagonal; the driver is
/// applied through hypercube adjacency.
#[derive(Debug, Clone)]
pub struct FullOperator<T> {
    n: usize,
    hop: T,
    diag: Vec<T>,
}

impl<T: Real> FullOperator<T> {
    pub fn new(instance: &ProblemInstance<T>, s: T) -> Result<Self, ExactError> {
        let n = instance.n();
        if n > BRUTE_FORCE_MAX_QUBITS {
            return Err(ExactError::TooManyQubits {
                n,
                cap: BRUTE_FORCE_MAX_QUBITS,
            });
        }
        let a = instance.driver_strength(s)?;
        let wells = instance
            .wells()
            .iter()
            .map(|w| {
                w.schedule.eval(s)?;
                Ok((
                    w.center.to_mask().expect("n <= 16 fits a mask"),
                    w.scheduled_profile(n, s),
                ))
            })
            .collect::<Result<Vec<_>, crate::model::ModelError>>()?;
        let diag = (0..1u64 << n)
            .map(|x| {
                wells.iter().fold(T::zero(), |acc, (c, p)| {
                    acc + p[(x ^ c).count_ones() as usize]
                })
            })
            .collect();
        Ok(Self {
            n,
            hop: a / count(n),
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    pub fn apply(&self, v: &[T], out: &mut [T]) {
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for j in 0..self.n {
                acc += v[x ^ (1 << j)];
            }
            *o = self.diag[x] * v[x] - self.hop * acc;
        }
    }

    pub fn dense(&self) -> DMatrix<T> {
        let d = self.dim();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for x in 0..d {
            for j in 0..self.n {
                m[(x, x ^ (1 << j))] = -self.hop;
            }
        }
        m
    }

    /// Bound on the spectral radius.
    fn scale(&self) -> T {
        self.diag.iter().fold(T::zero(), |m, v| m.max(v.abs())) + self.hop * count(self.n)
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two passes of classical Gram–Schmidt against every set ("twice is
/// enough" for full precision orthogonality).
fn orthogonalize<T: Real>(w: &mut [T], against: &[&[Vec<T>]]) {
    for _ in 0..2 {
        for q in against.iter().flat_map(|set| set.iter()) {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

fn normalize<T: Real>(w: &mut [T]) -> T {
    let norm = dot(w, w).sqrt();
    w.iter_mut().for_each(|v| *v /= norm);
    norm
}

fn random_unit<T: Real>(rng: &mut ChaCha8Rng, dim: usize, against: &[&[Vec<T>]]) -> Option<Vec<T>> {
    for _ in 0..4 {
        let mut q: Vec<T> = (0..dim).map(|_| lit(rng.random_range(-0.5..0.5))).collect();
        orthogonalize(&mut q, against);
        if normalize(&mut q) > lit(1e-8) {
            orthogonalize(&mut q, against);
            normalize(&mut q);
            return Some(q);
        }
    }
    None
}

/// Lowest `m` eigenpairs by a Krylov (Lanczos) expansion with full
/// reorthogonalization and explicit Rayleigh–Ritz: the projected matrix
/// `Qᵀ H Q` is accumulated exactly, so every Ritz value is a Rayleigh
/// quotient and residuals are measured, not estimated. Converged pairs are
/// locked and later runs stay in their orthogonal complement, which finds
/// repeated eigenvalues with their multiplicity. A breakdown (invariant
/// Krylov space) continues from a fresh random direction.
fn lanczos_lowest<T: Real>(op: &FullOperator<T>, m: usize) -> Result<(Vec<T>, Vec<Vec<T>>), ExactError> {
    let dim = op.dim();
    let tol = op.scale() * lit(1e-12);
    let mut values = Vec::with_capacity(m);
    let mut locked: Vec<Vec<T>> = Vec::with_capacity(m);
    for target in 0..m.min(dim) {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_0000 + target as u64);
        let avail = dim - locked.len();
        let Some(q0) = random_unit(&mut rng, dim, &[&locked]) else {
            return Err(ExactError::NoConvergence(f64::NAN));
        };
        let mut basis = vec![q0];
        let mut images: Vec<Vec<T>> = Vec::new();
        // Row-major upper triangle of Qᵀ H Q, grown one column per step.
        let mut proj: Vec<Vec<T>> = Vec::new();
        let mut last_residual = f64::INFINITY;
        loop {
            let k = basis.len() - 1;
            let mut hq = vec![T::zero(); dim];
            op.apply(&basis[k], &mut hq);
            proj.push((0..=k).map(|i| dot(&basis[i], &hq)).collect());
            let mut w = hq.clone();
            images.push(hq);
            let size = basis.len();
            let exhausted = size == avail;
            if exhausted || size % 8 == 0 {
                let g = DMatrix::from_fn(size, size, |i, j| proj[i.max(j)][i.min(j)]);
                let e = eig_sorted(g);
                let theta = e.values[0];
                let y = e.vectors.column(0);
                let mut x = vec![T::zero(); dim];
                let mut r = vec![T::zero(); dim];
                for i in 0..size {
                    axpy(y[i], &basis[i], &mut x);
                    axpy(y[i], &images[i], &mut r);
                }
                axpy(-theta, &x, &mut r);
                let residual = dot(&r, &r).sqrt();
                last_residual = to_f64(residual);
                if exhausted || residual <= tol {
                    orthogonalize(&mut x, &[&locked]);
                    normalize(&mut x);
                    values.push(theta);
                    locked.push(x);
                    break;
                }
            }
            orthogonalize(&mut w, &[&locked, &basis]);
            let b = normalize(&mut w);
            let next = if b > tol {
                orthogonalize(&mut w, &[&locked, &basis]);
                normalize(&mut w);
                Some(w)
            } else {
                random_unit(&mut rng, dim, &[&locked, &basis])
            };
            match next {
                Some(q) => basis.push(q),
                None => return Err(ExactError::NoConvergence(last_residual)),
            }
        }
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
    Ok((
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| locked[i].clone()).collect(),
    ))
}

fn solve<T: Real>(op: &FullOperator<T>, m: usize, vectors: bool) -> Result<EigenResult<T>, ExactError> {
    let m = m.min(op.dim());
    if op.n <= DENSE_MAX_QUBITS {
        let e = eig_sorted(op.dense());
        let values = e.values[..m].to_vec();
        let vectors = vectors.then(|| e.vectors.columns(0, m).into_owned());
        return Ok(EigenResult { values, vectors });
    }
    let (values, vecs) = lanczos_lowest(op, m)?;
    let vectors = vectors.then(|| DMatrix::from_fn(op.dim(), m, |r, c| vecs[c][r]));
    Ok(EigenResult { values, vectors })
}

/// Lowest `m` eigenvalues of the full Hamiltonian at `s`.
pub fn brute_force_spectrum<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    m: usize,
) -> Result<EigenResult<T>, ExactError> {
    solve(&FullOperator::new(instance, s)?, m, false)
}

/// Lowest `m` eigenpairs; vectors are indexed by the bit mask of the basis
/// string (see [`crate::BitString::to_mask`]).
pub fn brute_force_eigenpairs<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    m: usize,
) -> Result<EigenResult<T>, ExactError> {
    solve(&FullOperator::new(instance, s)?, m, true)
}

/// Probability of each basis string in the ground state, averaged over all
/// levels within `tol` of the ground energy.
pub fn brute_force_ground_distribution<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    tol: T,
) -> Result<Vec<T>, ExactError> {
    let e = brute_force_eigenpairs(instance, s, 4)?;
    let v = e.vectors.as_ref().expect("vectors requested");
    let ground: Vec<usize> = (0..e.values.len())
        .filter(|&k| e.values[k] - e.values[0] <= tol)
        .collect();
    let weight = T::one() / count(ground.len());
    Ok((0..v.nrows())
        .map(|x| {
            ground
                .iter()
                .fold(T::zero(), |acc, &k| acc + v[(x, k)] * v[(x, k)])
                * weight
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PotentialProfile, ScheduleTag, WellSpec};
    use crate::BitString;

    fn point(center: &str, depth: f64) -> WellSpec<f64> {
        WellSpec::new(
            center.parse().unwrap(),
            PotentialProfile::step(depth, 0).unwrap(),
            ScheduleTag::RampUp,
        )
    }

    #[test]
    fn free_driver_levels() {
        let inst = ProblemInstance::<f64>::with_wells(10, vec![]).unwrap();
        let e = brute_force_spectrum(&inst, 0.0, 12).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-10);
        // The second level is ten-fold degenerate.
        for k in 1..=10 {
            assert!((e.values[k] + 0.8).abs() < 1e-10, "level {k}: {}", e.values[k]);
        }
        assert!((e.values[11] + 0.6).abs() < 1e-10);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let inst = ProblemInstance::with_wells(
            8,
            vec![point("00000000", -2.0), point("11100000", -1.5), point("00011110", -3.0)],
        )
        .unwrap();
        let op = FullOperator::new(&inst, 0.45).unwrap();
        let dense = solve(&op, 3, false).unwrap().values;
        let (lanczos, vecs) = lanczos_lowest(&op, 3).unwrap();
        for k in 0..3 {
            assert!((dense[k] - lanczos[k]).abs() < 1e-10);
            let mut out = vec![0.0; op.dim()];
            op.apply(&vecs[k], &mut out);
            let r: f64 = out
                .iter()
                .zip(&vecs[k])
                .map(|(a, b)| (a - lanczos[k] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-9);
        }
    }

    #[test]
    fn xor_shift_invariance() {
        let inst = ProblemInstance::with_wells(
            10,
            vec![point("0000000000", -2.0), point("1111000000", -1.7)],
        )
        .unwrap();
        let mask: BitString = "1011001110".parse().unwrap();
        let a = brute_force_spectrum(&inst, 0.6, 3).unwrap().values;
        let b = brute_force_spectrum(&inst.shifted(&mask), 0.6, 3).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_sums_to_one() {
        let inst = ProblemInstance::with_wells(4, vec![point("0000", -1.0), point("1111", -1.0)]).unwrap();
        let p = brute_force_ground_distribution(&inst, 0.9, 1e-9).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - p[15]).abs() < 1e-10);
    }

    #[test]
    fn qubit_cap() {
        let inst = ProblemInstance::<f64>::with_wells(17, vec![]).unwrap();
        assert!(matches!(
            brute_force_spectrum(&inst, 0.5, 2),
            Err(ExactError::TooManyQubits { .. })
        ));
    }
}
