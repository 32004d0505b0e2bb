//! Exact spectra: symmetry-reduced sector blocks for up to three wells and
//! a brute-force `2^n` oracle.
//!
//! Every reduced block is a product of spin ladders, one per block of
//! qubits that all wells treat alike. A sector fixes the ladder label
//! `sigma_l` of every block; within it the driver hops `h_l -> h_l ± 1`
//! with amplitude `-a(s)/n · C±` and the potential is diagonal.

mod brute;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geigen::eig_sorted;
use crate::model::{ModelError, ProblemInstance, ScheduleTag, WellSpec};
use crate::scalar::{count, Real};
use crate::symmetry::{
    pair_frame, raise, triple_frame_from_centers, PairFrame, SectorIndex, SectorLattice,
    SymmetryError, TripleFrame,
};

pub use brute::{
    brute_force_eigenpairs, brute_force_ground_distribution, brute_force_spectrum, FullOperator,
    BRUTE_FORCE_MAX_QUBITS,
};

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("sector {sigmas:?} is empty for block sizes {blocks:?}")]
    EmptySector { sigmas: Vec<usize>, blocks: Vec<usize> },
    #[error("solver needs {expected} wells, instance has {found}")]
    WellCount { expected: String, found: usize },
    #[error("brute force is limited to {cap} qubits, instance has {n}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("iterative eigensolver did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// The Hamiltonian restricted to one symmetry sector.
#[derive(Debug, Clone)]
pub struct SectorBlock<T: Real> {
    /// One label per qubit block.
    pub sigmas: Vec<usize>,
    pub lattice: SectorLattice,
    pub matrix: DMatrix<T>,
}

impl<T: Real> SectorBlock<T> {
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Block weights `(h_1, ..)` of matrix row `row`.
    pub fn coords(&self, row: usize) -> Vec<usize> {
        self.lattice.coords(row)
    }

    pub fn solve(&self, with_vectors: bool) -> EigenResult<T> {
        let e = eig_sorted(self.matrix.clone());
        let vectors = with_vectors.then(|| {
            let mut v = e.vectors;
            for mut col in v.column_iter_mut() {
                if col.sum() < T::zero() {
                    col.neg_mut();
                }
            }
            v
        });
        EigenResult {
            values: e.values,
            vectors,
        }
    }
}

/// Ascending eigenvalues with optional eigenvectors (one per column).
#[derive(Debug, Clone)]
pub struct EigenResult<T: Real> {
    pub values: Vec<T>,
    pub vectors: Option<DMatrix<T>>,
}

impl<T: Real> EigenResult<T> {
    pub fn ground(&self) -> T {
        self.values[0]
    }

    pub fn vector(&self, k: usize) -> Option<Vec<T>> {
        self.vectors
            .as_ref()
            .map(|v| v.column(k).iter().copied().collect())
    }
}

/// Lowest two levels of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowLevels<T> {
    pub e0: T,
    pub e1: T,
}

impl<T: Real> LowLevels<T> {
    pub fn gap(&self) -> T {
        self.e1 - self.e0
    }
}

/// Coordinates in which every well potential depends only on block
/// weights.
#[derive(Debug, Clone)]
pub(crate) enum Geometry {
    Single { n: usize },
    Pair(PairFrame),
    Triple(TripleFrame),
}

impl Geometry {
    pub(crate) fn block_sizes(&self) -> Vec<usize> {
        match self {
            Geometry::Single { n } => vec![*n],
            Geometry::Pair(f) => vec![f.n1, f.n2],
            Geometry::Triple(f) => f.blocks.to_vec(),
        }
    }

    /// Distance of the lattice point `h` from each well, in well order.
    #[inline]
    pub(crate) fn distances(&self, h: &[usize], out: &mut [usize]) {
        match self {
            Geometry::Single { .. } => out[0] = h[0],
            Geometry::Pair(f) => {
                out[0] = f.dist_i(h[0], h[1]);
                out[1] = f.dist_j(h[0], h[1]);
            }
            Geometry::Triple(f) => {
                let d = f.distances([h[0], h[1], h[2], h[3]]);
                out[..3].copy_from_slice(&d);
            }
        }
    }
}

/// Dense block of `-hop · Σ_l ladder_l + diag(h)` on `lattice`.
pub(crate) fn build_block<T: Real>(
    lattice: &SectorLattice,
    hop: T,
    mut diag: impl FnMut(&[usize]) -> T,
) -> DMatrix<T> {
    let dim = lattice.dim();
    let mut m = DMatrix::zeros(dim, dim);
    let mut h = vec![0; lattice.blocks().len()];
    for idx in 0..dim {
        lattice.coords_into(idx, &mut h);
        m[(idx, idx)] = diag(&h);
        for (l, &(nl, sigma)) in lattice.blocks().iter().enumerate() {
            if h[l] + sigma < nl {
                let up = idx + lattice.stride(l);
                let c = -hop * raise::<T>(h[l], sigma, nl);
                m[(idx, up)] = c;
                m[(up, idx)] = c;
            }
        }
    }
    m
}

/// Matrix-free product with the same operator as [`build_block`], given
/// the diagonal.
pub(crate) fn apply_block<T: Real>(lattice: &SectorLattice, hop: T, diag: &[T], v: &[T]) -> Vec<T> {
    let dim = lattice.dim();
    let mut out: Vec<T> = diag.iter().zip(v).map(|(&d, &x)| d * x).collect();
    let mut h = vec![0; lattice.blocks().len()];
    for idx in 0..dim {
        lattice.coords_into(idx, &mut h);
        for (l, &(nl, sigma)) in lattice.blocks().iter().enumerate() {
            if h[l] + sigma < nl {
                let up = idx + lattice.stride(l);
                let c = -hop * raise::<T>(h[l], sigma, nl);
                out[idx] += c * v[up];
                out[up] += c * v[idx];
            }
        }
    }
    out
}

/// An instance with `K ≤ 3` in reduced coordinates at fixed `s`.
#[derive(Debug, Clone)]
pub(crate) struct Reduced<T> {
    pub geometry: Geometry,
    /// `b_k(s) V_k(r)` for `r = 0..=n`, in geometry well order.
    pub profiles: Vec<Vec<T>>,
    /// `a(s) / n`.
    pub hop: T,
}

impl<T: Real> Reduced<T> {
    pub(crate) fn new(instance: &ProblemInstance<T>, s: T) -> Result<Self, ExactError> {
        let n = instance.n();
        let wells = instance.wells();
        let geometry = match wells.len() {
            0 | 1 => Geometry::Single { n },
            2 => Geometry::Pair(pair_frame(&wells[0].center, &wells[1].center)?),
            3 => Geometry::Triple(triple_frame_from_centers(
                &wells[0].center,
                &wells[1].center,
                &wells[2].center,
            )?),
            k => {
                return Err(ExactError::WellCount {
                    expected: "at most 3".into(),
                    found: k,
                })
            }
        };
        let a = instance.driver_strength(s)?;
        let profiles = wells
            .iter()
            .map(|w| {
                w.schedule.eval(s)?;
                Ok(w.scheduled_profile(n, s))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(Self {
            geometry,
            profiles,
            hop: a / count(n),
        })
    }

    pub(crate) fn lattice(&self, sigmas: &[usize]) -> Result<SectorLattice, ExactError> {
        let sizes = self.geometry.block_sizes();
        if sigmas.len() != sizes.len() || sigmas.iter().zip(&sizes).any(|(&s, &n)| 2 * s > n) {
            return Err(ExactError::EmptySector {
                sigmas: sigmas.to_vec(),
                blocks: sizes,
            });
        }
        Ok(SectorLattice::new(sizes.into_iter().zip(sigmas.iter().copied()).collect()))
    }

    pub(crate) fn block(&self, sigmas: &[usize]) -> Result<SectorBlock<T>, ExactError> {
        let lattice = self.lattice(sigmas)?;
        let mut dist = [0usize; 3];
        let matrix = build_block(&lattice, self.hop, |h| {
            self.geometry.distances(h, &mut dist);
            self.profiles
                .iter()
                .zip(&dist)
                .fold(T::zero(), |acc, (p, &r)| acc + p[r])
        });
        Ok(SectorBlock {
            sigmas: sigmas.to_vec(),
            lattice,
            matrix,
        })
    }

    /// Non-empty sectors with exactly one unit of ladder label.
    pub(crate) fn first_sectors(&self) -> Vec<Vec<usize>> {
        let sizes = self.geometry.block_sizes();
        (0..sizes.len())
            .filter(|&l| sizes[l] >= 2)
            .map(|l| {
                let mut s = vec![0; sizes.len()];
                s[l] = 1;
                s
            })
            .collect()
    }

    pub(crate) fn low_levels(&self) -> Result<LowLevels<T>, ExactError> {
        let zero = vec![0; self.geometry.block_sizes().len()];
        let base = self.block(&zero)?.solve(false).values;
        let mut e1 = base.get(1).copied();
        for sigmas in self.first_sectors() {
            let g = self.block(&sigmas)?.solve(false).values[0];
            e1 = Some(match e1 {
                Some(e) => e.min(g),
                None => g,
            });
        }
        Ok(LowLevels {
            e0: base[0],
            // A one-qubit free ladder still has two levels.
            e1: e1.expect("n >= 1 gives at least two levels"),
        })
    }
}

/// Sector block of an isolated well centred anywhere, with driver
/// strength `a(s) = 1 - s`.
pub fn single_well_block<T: Real>(
    n: usize,
    well: &WellSpec<T>,
    s: T,
    sigma: usize,
) -> Result<SectorBlock<T>, ExactError> {
    isolated_block(n, well, ScheduleTag::RampDown.eval(s)?, s, sigma)
}

/// Sector block of an isolated well with explicit driver strength `a`.
pub(crate) fn isolated_block<T: Real>(
    n: usize,
    well: &WellSpec<T>,
    a: T,
    s: T,
    sigma: usize,
) -> Result<SectorBlock<T>, ExactError> {
    well.schedule.eval(s)?;
    let reduced = Reduced {
        geometry: Geometry::Single { n },
        profiles: vec![well.scheduled_profile(n, s)],
        hop: a / count(n),
    };
    reduced.block(&[sigma])
}

/// Full spectrum and radial vectors of an isolated well in ladder sector
/// `sigma`; vectors are indexed by `w - sigma`.
pub fn solve_single_well<T: Real>(
    n: usize,
    well: &WellSpec<T>,
    s: T,
    sigma: usize,
) -> Result<EigenResult<T>, ExactError> {
    Ok(single_well_block(n, well, s, sigma)?.solve(true))
}

/// Spectrum of a two-well instance in pair sector `sector`; vectors are
/// indexed `h1`-major.
pub fn solve_two_well<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    sector: SectorIndex,
) -> Result<EigenResult<T>, ExactError> {
    if instance.well_count() != 2 {
        return Err(ExactError::WellCount {
            expected: "2".into(),
            found: instance.well_count(),
        });
    }
    let reduced = Reduced::new(instance, s)?;
    Ok(reduced.block(&[sector.sigma1, sector.sigma2])?.solve(true))
}

/// Spectrum of a three-well instance in the sector with one ladder label
/// per block of the majority frame.
pub fn solve_three_well<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    sigmas: [usize; 4],
) -> Result<EigenResult<T>, ExactError> {
    if instance.well_count() != 3 {
        return Err(ExactError::WellCount {
            expected: "3".into(),
            found: instance.well_count(),
        });
    }
    let reduced = Reduced::new(instance, s)?;
    Ok(reduced.block(&sigmas)?.solve(true))
}

/// Ground energy and first excited energy of an instance with `K ≤ 3`.
///
/// `E1` is the lower of the second level of the fully symmetric sector and
/// the ground levels of every sector carrying a single ladder unit.
pub fn exact_low_levels<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
) -> Result<LowLevels<T>, ExactError> {
    Reduced::new(instance, s)?.low_levels()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialProfile;
    use crate::BitString;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(center: &str, depth: f64) -> WellSpec<f64> {
        WellSpec::new(
            center.parse().unwrap(),
            PotentialProfile::step(depth, 0).unwrap(),
            ScheduleTag::RampUp,
        )
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ProblemInstance<f64> {
        let mut centers = std::collections::HashSet::new();
        while centers.len() < k {
            centers.insert(rng.random_range(0..(1u64 << n)));
        }
        let mut centers: Vec<u64> = centers.into_iter().collect();
        centers.sort_unstable();
        let wells = centers
            .into_iter()
            .map(|c| {
                WellSpec::new(
                    BitString::from_mask(c, n),
                    PotentialProfile::step(rng.random_range(-6.0..-1.0), rng.random_range(0..=2.min(n)))
                        .unwrap(),
                    ScheduleTag::RampUp,
                )
            })
            .collect();
        ProblemInstance::with_wells(n, wells).unwrap()
    }

    #[test]
    fn free_driver_ladder() {
        let well = WellSpec::new(
            BitString::zeros(7),
            PotentialProfile::Tabulated { values: vec![0.0; 8] },
            ScheduleTag::RampUp,
        );
        let e = solve_single_well(7, &well, 0.0, 0).unwrap();
        for (k, v) in e.values.iter().enumerate() {
            assert!((v - (-1.0 + 2.0 * k as f64 / 7.0)).abs() < 1e-12);
        }
        let e1 = solve_single_well(7, &well, 0.0, 1).unwrap();
        assert!((e1.values[0] - (-1.0 + 2.0 / 7.0)).abs() < 1e-12);
        assert!(solve_single_well(7, &well, 0.0, 4).is_err());
    }

    #[test]
    fn single_block_is_tridiagonal_and_stoquastic() {
        let well = WellSpec::new(
            BitString::zeros(9),
            PotentialProfile::step(-2.0, 2).unwrap(),
            ScheduleTag::RampUp,
        );
        for sigma in 0..=4 {
            let b = single_well_block(9, &well, 0.3, sigma).unwrap();
            let m = &b.matrix;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if i.abs_diff(j) > 1 {
                        assert_eq!(m[(i, j)], 0.0);
                    }
                    if i != j {
                        assert!(m[(i, j)] <= 0.0);
                        assert_eq!(m[(i, j)], m[(j, i)]);
                    }
                }
            }
        }
    }

    #[test]
    fn marked_item_matches_brute_force() {
        let well = point("0000000000", -1.0);
        let e = solve_single_well(10, &well, 0.5, 0).unwrap();
        let inst = ProblemInstance::with_wells(10, vec![well]).unwrap();
        let b = brute_force_spectrum(&inst, 0.5, 2).unwrap();
        assert!((e.values[0] - b.values[0]).abs() < 1e-10);
        assert!((e.values[1] - b.values[1]).abs() < 1e-10);
    }

    #[test]
    fn free_two_well_degenerates_to_driver() {
        let wells = vec![
            WellSpec::new(
                "000000".parse().unwrap(),
                PotentialProfile::Tabulated { values: vec![0.0; 7] },
                ScheduleTag::RampUp,
            ),
            WellSpec::new(
                "110000".parse().unwrap(),
                PotentialProfile::Tabulated { values: vec![0.0; 7] },
                ScheduleTag::RampUp,
            ),
        ];
        let inst = ProblemInstance::<f64>::with_wells(6, wells).unwrap();
        let levels = exact_low_levels(&inst, 0.4).unwrap();
        assert!((levels.e0 + 0.6).abs() < 1e-12);
        assert!((levels.gap() - 2.0 * 0.6 / 6.0).abs() < 1e-12);
        let e = solve_two_well(&inst, 0.4, SectorIndex::SYMMETRIC).unwrap();
        assert_eq!(e.values.len(), 3 * 5);
    }

    #[test]
    fn free_three_wells() {
        let wells = ["000000", "110000", "011100"]
            .iter()
            .map(|c| {
                WellSpec::new(
                    c.parse().unwrap(),
                    PotentialProfile::Tabulated { values: vec![0.0; 7] },
                    ScheduleTag::RampUp,
                )
            })
            .collect();
        let inst = ProblemInstance::<f64>::with_wells(6, wells).unwrap();
        let e = solve_three_well(&inst, 0.25, [0; 4]).unwrap();
        assert!((e.values[0] + 0.75).abs() < 1e-12);
    }

    #[test]
    fn shallow_third_well_reduces_to_two() {
        let mut w = vec![point("0000000000", -3.0), point("1111100000", -2.5)];
        let two = ProblemInstance::with_wells(10, w.clone()).unwrap();
        w.push(WellSpec::new(
            "0011111100".parse().unwrap(),
            PotentialProfile::Tabulated { values: vec![0.0; 11] },
            ScheduleTag::RampUp,
        ));
        let three = ProblemInstance::with_wells(10, w).unwrap();
        for s in [0.2, 0.5, 0.8] {
            let a = exact_low_levels(&two, s).unwrap();
            let b = exact_low_levels(&three, s).unwrap();
            assert!((a.e0 - b.e0).abs() < 1e-10);
            assert!((a.e1 - b.e1).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_vectors_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let k = rng.random_range(1..=3);
            let n = rng.random_range(4..=8);
            let inst = random_instance(&mut rng, n, k);
            let s = rng.random_range(0.05..0.4);
            let reduced = Reduced::new(&inst, s).unwrap();
            let zero = vec![0; reduced.geometry.block_sizes().len()];
            let mut sectors = reduced.first_sectors();
            sectors.push(zero);
            for sigmas in sectors {
                let block = reduced.block(&sigmas).unwrap();
                let v = block.solve(true).vector(0).unwrap();
                let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(v.iter().all(|&x| x > 1e-13 * max), "sector {sigmas:?}");
                let m = &block.matrix;
                for i in 0..m.nrows() {
                    for j in 0..i {
                        assert!(m[(i, j)] <= 0.0 && (m[(i, j)] - m[(j, i)]).abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn random_instances_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..12 {
            let k = rng.random_range(1..=3);
            let n = rng.random_range(4..=9);
            let inst = random_instance(&mut rng, n, k);
            let s = rng.random_range(0.0..1.0);
            let e = exact_low_levels(&inst, s).unwrap();
            let b = brute_force_spectrum(&inst, s, 2).unwrap();
            assert!((e.e0 - b.values[0]).abs() < 1e-9);
            assert!((e.e1 - b.values[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_well_count() {
        let inst = ProblemInstance::with_wells(4, vec![point("0000", -1.0)]).unwrap();
        assert!(solve_two_well(&inst, 0.5, SectorIndex::SYMMETRIC).is_err());
        assert!(solve_three_well(&inst, 0.5, [0; 4]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        /// No ladder sector beyond the first two ever holds a lower first
        /// excited level of a single well.
        #[test]
        fn higher_sectors_never_win(
            n in 4usize..=12,
            raw in proptest::collection::vec(-5.0f64..0.0, 13),
            s in 0.0f64..1.0,
        ) {
            let well = WellSpec::new(
                BitString::zeros(n),
                PotentialProfile::Tabulated { values: raw[..=n].to_vec() },
                ScheduleTag::RampUp,
            );
            let e0 = solve_single_well(n, &well, s, 0).unwrap().values;
            let e1 = solve_single_well(n, &well, s, 1).unwrap().values[0];
            let best = e0[1].min(e1);
            for sigma in 2..=n / 2 {
                let g = solve_single_well(n, &well, s, sigma).unwrap().values[0];
                prop_assert!(g >= best - 1e-10);
            }
        }
    }
}
