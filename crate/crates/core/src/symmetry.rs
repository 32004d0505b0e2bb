//! Hypercube combinatorics: ladder coefficients, relabeled pair and triple
//! frames, the triple-sphere intersection count and the expansion of radial
//! states into pair coordinates.

use thiserror::Error;

use crate::model::BitString;
use crate::scalar::{count, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("bit strings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("pair frame needs two distinct centers")]
    IdenticalCenters,
    #[error("weight {w} outside [{sigma}, n - sigma] for n = {n}")]
    LadderRange { w: usize, sigma: usize, n: usize },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("radial state has squared norm {0}, expected 1")]
    Unnormalized(f64),
}

pub fn hamming_distance(x: &BitString, y: &BitString) -> Result<usize, SymmetryError> {
    if x.len() != y.len() {
        return Err(SymmetryError::LengthMismatch(x.len(), y.len()));
    }
    Ok(x.bits().iter().zip(y.bits()).filter(|(a, b)| a != b).count())
}

/// `C+ = sqrt((w - sigma + 1)(n - sigma - w))` without range checks; zero
/// at the top of the ladder.
#[inline]
pub(crate) fn raise<T: Real>(w: usize, sigma: usize, n: usize) -> T {
    if w + sigma >= n {
        return T::zero();
    }
    count::<T>((w - sigma + 1) * (n - sigma - w)).sqrt()
}

/// Raising and lowering coefficients `(C+, C-)` of the spin ladder for a
/// block of `n` qubits in total-spin sector `sigma` at weight `w`.
pub fn ladder_coeffs<T: Real>(w: usize, sigma: usize, n: usize) -> Result<(T, T), SymmetryError> {
    if w < sigma || w + sigma > n {
        return Err(SymmetryError::LadderRange { w, sigma, n });
    }
    let lower = count::<T>((w - sigma) * (n - sigma - w + 1)).sqrt();
    Ok((raise(w, sigma, n), lower))
}

/// Memoized `ln k!` table for binomials in log domain.
#[derive(Debug, Clone)]
pub struct LogBinomial<T> {
    ln_fact: Vec<T>,
}

impl<T: Real> LogBinomial<T> {
    pub fn new(max_n: usize) -> Self {
        let mut ln_fact = Vec::with_capacity(max_n + 1);
        let mut acc = 0.0f64;
        ln_fact.push(T::zero());
        for k in 1..=max_n {
            acc += (k as f64).ln();
            ln_fact.push(crate::scalar::lit(acc));
        }
        Self { ln_fact }
    }

    pub fn max_n(&self) -> usize {
        self.ln_fact.len() - 1
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    #[inline]
    pub fn ln_choose(&self, n: usize, k: usize) -> T {
        if k > n {
            return T::zero() - T::one() / T::zero();
        }
        self.ln_fact[n] - self.ln_fact[k] - self.ln_fact[n - k]
    }

    #[inline]
    pub fn choose(&self, n: usize, k: usize) -> T {
        if k > n {
            return T::zero();
        }
        self.ln_choose(n, k).exp()
    }
}

/// Exact binomial coefficient; panics on overflow of `u128`.
pub fn binomial_exact(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Relabeled coordinates for a pair of wells.
///
/// `S1` holds the `n1` positions where the centres differ. In this frame
/// well `i` sits at the all-zeros string and well `j` at `1^n1 0^n2`, so a
/// string with `h1` ones in `S1` and `h2` in `S2` is at distance `h1 + h2`
/// from `i` and `(n1 - h1) + h2` from `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFrame {
    pub n1: usize,
    pub n2: usize,
    pub mask: BitString,
}

impl PairFrame {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    #[inline]
    pub fn dist_i(&self, h1: usize, h2: usize) -> usize {
        h1 + h2
    }

    #[inline]
    pub fn dist_j(&self, h1: usize, h2: usize) -> usize {
        self.n1 - h1 + h2
    }

    #[inline]
    pub fn dist(&self, side: WellSide, h1: usize, h2: usize) -> usize {
        match side {
            WellSide::I => self.dist_i(h1, h2),
            WellSide::J => self.dist_j(h1, h2),
        }
    }
}

/// Which of the two wells of a [`PairFrame`] a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WellSide {
    I,
    J,
}

impl WellSide {
    pub fn other(self) -> WellSide {
        match self {
            WellSide::I => WellSide::J,
            WellSide::J => WellSide::I,
        }
    }
}

pub fn pair_frame(ci: &BitString, cj: &BitString) -> Result<PairFrame, SymmetryError> {
    let n1 = hamming_distance(ci, cj)?;
    if n1 == 0 {
        return Err(SymmetryError::IdenticalCenters);
    }
    Ok(PairFrame {
        n1,
        n2: ci.len() - n1,
        mask: ci.xor(cj),
    })
}

/// Block sizes of three wells relabeled around their bitwise majority
/// string: block `l` (for `l < 3`) holds the positions where only well `l`
/// disagrees with the majority, block 3 the positions where all agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TripleFrame {
    pub blocks: [usize; 4],
}

impl TripleFrame {
    pub fn n(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Distance between wells `i` and `j`.
    pub fn n1(&self) -> usize {
        self.blocks[0] + self.blocks[1]
    }

    pub fn r_ik(&self) -> usize {
        self.blocks[0] + self.blocks[2]
    }

    pub fn r_jk(&self) -> usize {
        self.blocks[1] + self.blocks[2]
    }

    /// Distances from wells `(i, j, k)` of a string with `h[l]` ones
    /// (relative to the majority string) in block `l`.
    #[inline]
    pub fn distances(&self, h: [usize; 4]) -> [usize; 3] {
        let b = &self.blocks;
        let rest = h[3];
        [
            (b[0] - h[0]) + h[1] + h[2] + rest,
            h[0] + (b[1] - h[1]) + h[2] + rest,
            h[0] + h[1] + (b[2] - h[2]) + rest,
        ]
    }
}

/// Solves the block sizes from the three pairwise distances; `None` when no
/// three strings realize them (parity or triangle violation).
pub fn triple_frame(n1: usize, r_ik: usize, r_jk: usize, n: usize) -> Option<TripleFrame> {
    if n1 > n || r_ik > n || r_jk > n {
        return None;
    }
    let (a, b, c) = (n1 as i64, r_ik as i64, r_jk as i64);
    let twice_first = a + b - c;
    let twice_third = b + c - a;
    if twice_first < 0 || twice_third < 0 || twice_first % 2 != 0 || twice_third % 2 != 0 {
        return None;
    }
    let first = twice_first / 2;
    let second = a - first;
    let third = twice_third / 2;
    let rest = n as i64 - first - second - third;
    if second < 0 || rest < 0 {
        return None;
    }
    Some(TripleFrame {
        blocks: [first as usize, second as usize, third as usize, rest as usize],
    })
}

/// Frame of three explicit centres `(i, j, k)`.
pub fn triple_frame_from_centers(
    ci: &BitString,
    cj: &BitString,
    ck: &BitString,
) -> Result<TripleFrame, SymmetryError> {
    let n = ci.len();
    let dij = hamming_distance(ci, cj)?;
    let dik = hamming_distance(ci, ck)?;
    let djk = hamming_distance(cj, ck)?;
    // Three real strings always realize their distances.
    Ok(triple_frame(dij, dik, djk, n).expect("distances of real strings are consistent"))
}

fn check_cell(h1: usize, h2: usize, frame: &TripleFrame, rk: usize) -> Result<(), SymmetryError> {
    let n1 = frame.n1();
    let n = frame.n();
    if h1 > n1 || h2 > n - n1 || rk > n {
        return Err(SymmetryError::OutOfRange(format!(
            "(h1, h2, rk) = ({h1}, {h2}, {rk}) with n1 = {n1}, n = {n}"
        )));
    }
    Ok(())
}

/// Block occupations `[h1', h2', h3', h4']` of every string in pair shell
/// `(h1, h2)` (frame of wells `i`, `j`) at distance `rk` from well `k`.
fn triple_solutions(
    h1: usize,
    h2: usize,
    frame: &TripleFrame,
    rk: usize,
) -> impl Iterator<Item = [usize; 4]> {
    let b = frame.blocks.map(|x| x as i64);
    let n1 = b[0] + b[1];
    let ri = (h1 + h2) as i64;
    let rj = n1 - h1 as i64 + h2 as i64;
    let rk = rk as i64;
    let c2 = ri - rj - b[0] + b[1];
    let c3 = ri - rk - b[0] + b[2];
    let c4 = rj + rk - b[1] - b[2];
    let feasible = c2 % 2 == 0 && c3 % 2 == 0 && c4 % 2 == 0;
    let upper = if feasible { b[0] } else { -1 };
    (0..=upper).filter_map(move |x1| {
        let x2 = x1 + c2 / 2;
        let x3 = x1 + c3 / 2;
        let x4 = c4 / 2 - x1;
        let ok = |x: i64, l: usize| x >= 0 && x <= b[l];
        if ok(x2, 1) && ok(x3, 2) && ok(x4, 3) {
            Some([x1 as usize, x2 as usize, x3 as usize, x4 as usize])
        } else {
            None
        }
    })
}

/// Number of strings in pair shell `(h1, h2)` at distance `rk` from the
/// third well, in floating point via log-domain binomials.
pub fn count_triple_intersections<T: Real>(
    h1: usize,
    h2: usize,
    frame: &TripleFrame,
    rk: usize,
    lb: &LogBinomial<T>,
) -> Result<T, SymmetryError> {
    check_cell(h1, h2, frame, rk)?;
    let b = frame.blocks;
    Ok(triple_solutions(h1, h2, frame, rk)
        .map(|x| {
            (lb.ln_choose(b[0], x[0])
                + lb.ln_choose(b[1], x[1])
                + lb.ln_choose(b[2], x[2])
                + lb.ln_choose(b[3], x[3]))
            .exp()
        })
        .fold(T::zero(), |a, v| a + v))
}

/// Integer version of [`count_triple_intersections`].
pub fn count_triple_intersections_exact(
    h1: usize,
    h2: usize,
    frame: &TripleFrame,
    rk: usize,
) -> Result<u128, SymmetryError> {
    check_cell(h1, h2, frame, rk)?;
    let b = frame.blocks;
    Ok(triple_solutions(h1, h2, frame, rk)
        .map(|x| (0..4).map(|l| binomial_exact(b[l], x[l])).product::<u128>())
        .sum())
}

/// Fraction of pair shell `(h1, h2)` lying at distance `rk` from the third
/// well: `N / (C(n1, h1) C(n - n1, h2))`. This is the diagonal of the
/// third well's potential projected onto the symmetric pair sector.
pub fn shell_fraction<T: Real>(
    h1: usize,
    h2: usize,
    frame: &TripleFrame,
    rk: usize,
    lb: &LogBinomial<T>,
) -> T {
    let b = frame.blocks;
    let n1 = frame.n1();
    let norm = lb.ln_choose(n1, h1) + lb.ln_choose(frame.n() - n1, h2);
    triple_solutions(h1, h2, frame, rk)
        .map(|x| {
            (lb.ln_choose(b[0], x[0])
                + lb.ln_choose(b[1], x[1])
                + lb.ln_choose(b[2], x[2])
                + lb.ln_choose(b[3], x[3])
                - norm)
                .exp()
        })
        .fold(T::zero(), |a, v| a + v)
}

/// Symmetry labels of one pair sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorIndex {
    pub sigma1: usize,
    pub sigma2: usize,
}

impl SectorIndex {
    pub const SYMMETRIC: SectorIndex = SectorIndex { sigma1: 0, sigma2: 0 };

    pub fn new(sigma1: usize, sigma2: usize) -> Self {
        Self { sigma1, sigma2 }
    }

    pub fn is_empty(&self, n1: usize, n2: usize) -> bool {
        2 * self.sigma1 > n1 || 2 * self.sigma2 > n2
    }

    pub fn dim(&self, n1: usize, n2: usize) -> usize {
        if self.is_empty(n1, n2) {
            0
        } else {
            (n1 - 2 * self.sigma1 + 1) * (n2 - 2 * self.sigma2 + 1)
        }
    }

    pub fn lattice(&self, frame: &PairFrame) -> SectorLattice {
        SectorLattice::new(vec![(frame.n1, self.sigma1), (frame.n2, self.sigma2)])
    }
}

/// Product lattice of spin ladders: block `l` of size `n_l` in sector
/// `sigma_l` contributes a weight `h_l` in `[sigma_l, n_l - sigma_l]`.
/// Points are stored row-major with the last block fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorLattice {
    blocks: Vec<(usize, usize)>,
    strides: Vec<usize>,
    dim: usize,
}

impl SectorLattice {
    pub fn new(blocks: Vec<(usize, usize)>) -> Self {
        let mut strides = vec![0; blocks.len()];
        let mut dim = 1usize;
        for (l, &(n, sigma)) in blocks.iter().enumerate().rev() {
            strides[l] = dim;
            dim *= if 2 * sigma > n { 0 } else { n - 2 * sigma + 1 };
        }
        Self {
            blocks,
            strides,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// Weights of point `idx`, written into `out`.
    pub fn coords_into(&self, idx: usize, out: &mut [usize]) {
        let mut rem = idx;
        for (l, &(_, sigma)) in self.blocks.iter().enumerate() {
            out[l] = rem / self.strides[l] + sigma;
            rem %= self.strides[l];
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.blocks.len()];
        self.coords_into(idx, &mut out);
        out
    }

    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        let mut idx = 0;
        for (l, &(n, sigma)) in self.blocks.iter().enumerate() {
            let h = coords[l];
            if h < sigma || h + sigma > n {
                return None;
            }
            idx += (h - sigma) * self.strides[l];
        }
        Some(idx)
    }

    /// Index offset of raising block `l` by one.
    pub fn stride(&self, l: usize) -> usize {
        self.strides[l]
    }
}

/// Expands a radial state `phi(r)` of the well on `side` into the
/// symmetric `(0, 0)` sector of `frame`.
///
/// The result is indexed by [`SectorIndex::SYMMETRIC`]'s lattice (`h1`
/// major, `h2` minor).
pub fn radial_to_pair<T: Real>(
    phi: &[T],
    frame: &PairFrame,
    side: WellSide,
    lb: &LogBinomial<T>,
) -> Result<Vec<T>, SymmetryError> {
    let n = frame.n();
    if phi.len() != n + 1 {
        return Err(SymmetryError::OutOfRange(format!(
            "radial state has {} entries, expected {}",
            phi.len(),
            n + 1
        )));
    }
    let norm2 = phi.iter().fold(T::zero(), |a, &v| a + v * v);
    let tol = T::default_epsilon().sqrt() * crate::scalar::lit(8.0);
    if (norm2 - T::one()).abs() > tol {
        return Err(SymmetryError::Unnormalized(to_f64(norm2)));
    }
    let half = crate::scalar::lit::<T>(0.5);
    let mut out = Vec::with_capacity((frame.n1 + 1) * (frame.n2 + 1));
    for h1 in 0..=frame.n1 {
        for h2 in 0..=frame.n2 {
            let r = frame.dist(side, h1, h2);
            let w = (lb.ln_choose(frame.n1, h1) + lb.ln_choose(frame.n2, h2) - lb.ln_choose(n, r)) * half;
            out.push(phi[r] * w.exp());
        }
    }
    Ok(out)
}
