//! Tight-binding approximation: the Hamiltonian restricted to the span of
//! isolated-well bound states, solved as a generalized eigenproblem.
//!
//! Matrix elements are exact within the span. Two radial states of wells
//! `i` and `j` both lie in the symmetric sector of the `(i, j)` pair
//! frame, where every other well `k` acts through its shell average
//! (the `V_c` correction).

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{apply_block, build_block, ExactError, SectorBlock};
use crate::geigen::{eig_sorted, fix_heiberger, GeigenError};
use crate::model::{ModelError, ProblemInstance};
use crate::scalar::{count, lit, Real};
use crate::symmetry::{
    pair_frame, radial_to_pair, shell_fraction, triple_frame_from_centers, LogBinomial, PairFrame,
    SectorIndex, SectorLattice, SymmetryError, WellSide,
};

#[derive(Debug, Error)]
pub enum TbError {
    #[error("well index {index} out of range for {count} wells")]
    WellIndex { index: usize, count: usize },
    #[error("tight-binding order must be 0 or 1, got {0}")]
    Order(u8),
    #[error("states live in different pair frames")]
    FrameMismatch,
    #[error("degenerate overlap: no stable direction survives deflation")]
    DegenerateOverlap,
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Geigen(GeigenError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<GeigenError> for TbError {
    fn from(e: GeigenError) -> Self {
        match e {
            GeigenError::DegenerateOverlap => TbError::DegenerateOverlap,
            other => TbError::Geigen(other),
        }
    }
}

/// How a bound state is stored.
#[derive(Debug, Clone, PartialEq)]
pub enum StateShape<T> {
    /// Radial amplitudes `φ(r)`, `r = 0..=n`, about the owner's centre;
    /// symmetric under every permutation fixing that centre.
    Radial(Vec<T>),
    /// Vector in sector `sector` of the frame of wells `frame` (first well
    /// at the origin), indexed `h1`-major. `copy` distinguishes the
    /// degenerate copies of the sector.
    Pair {
        frame: (usize, usize),
        sector: SectorIndex,
        copy: usize,
        amplitudes: Vec<T>,
    },
    /// Lowest state of ladder sector `sigma` of a lone well.
    Lone { sigma: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState<T> {
    pub well: usize,
    /// 0 for the ground state, 1 for the first excited state.
    pub order: u8,
    /// Energy of the isolated-well problem.
    pub energy: T,
    pub shape: StateShape<T>,
}

impl<T: Real> BoundState<T> {
    /// Pair-sector label, `(0, 0)` for radial states.
    pub fn sector(&self) -> SectorIndex {
        match &self.shape {
            StateShape::Radial(_) => SectorIndex::SYMMETRIC,
            StateShape::Pair { sector, .. } => *sector,
            StateShape::Lone { sigma } => SectorIndex::new(*sigma, 0),
        }
    }

    pub fn radial(&self) -> Option<&[T]> {
        match &self.shape {
            StateShape::Radial(phi) => Some(phi),
            _ => None,
        }
    }
}

/// Row label of a [`TbSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLabel {
    pub well: usize,
    pub order: u8,
    pub sector: SectorIndex,
    pub copy: usize,
}

/// Tight-binding Hamiltonian and overlap matrices.
#[derive(Debug, Clone)]
pub struct TbSystem<T: Real> {
    pub s: T,
    pub hamiltonian: DMatrix<T>,
    pub overlap: DMatrix<T>,
    pub basis: Vec<BasisLabel>,
    /// Ground states, one per well, in well order.
    pub ground_states: Vec<BoundState<T>>,
    /// Set when excited states outside the symmetric sector had to be left
    /// out (more than two wells).
    pub omitted_excited: bool,
}

impl<T: Real> TbSystem<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbDiagnostics<T> {
    pub e0: T,
    pub e1: Option<T>,
    pub error_estimate: T,
    pub gamma_tilde: Option<T>,
    pub stable_dim: usize,
    /// `gamma_tilde > 0`.
    pub resolved: bool,
    pub omitted_excited: bool,
}

impl<T: Real> TbDiagnostics<T> {
    pub fn gap(&self) -> Option<T> {
        self.e1.map(|e1| e1 - self.e0)
    }
}

/// Per-`s` data shared by every matrix element.
struct Context<'a, T: Real> {
    instance: &'a ProblemInstance<T>,
    n: usize,
    hop: T,
    a: T,
    /// `b_k(s) V_k(r)`.
    profiles: Vec<Vec<T>>,
    /// Distances where each profile is non-zero.
    supports: Vec<Vec<usize>>,
    lb: LogBinomial<T>,
}

impl<'a, T: Real> Context<'a, T> {
    fn new(instance: &'a ProblemInstance<T>, s: T) -> Result<Self, TbError> {
        let n = instance.n();
        let a = instance.driver_strength(s)?;
        let mut profiles = Vec::with_capacity(instance.well_count());
        for w in instance.wells() {
            w.schedule.eval(s)?;
            profiles.push(w.scheduled_profile(n, s));
        }
        let supports = profiles
            .iter()
            .map(|p| (0..=n).filter(|&r| p[r] != T::zero()).collect())
            .collect();
        Ok(Self {
            instance,
            n,
            hop: a / count(n),
            a,
            profiles,
            supports,
            lb: LogBinomial::new(n),
        })
    }

    fn check_well(&self, i: usize) -> Result<(), TbError> {
        let k = self.instance.well_count();
        if i >= k {
            return Err(TbError::WellIndex { index: i, count: k });
        }
        Ok(())
    }

    fn frame(&self, i: usize, j: usize) -> Result<PairFrame, TbError> {
        let w = self.instance.wells();
        Ok(pair_frame(&w[i].center, &w[j].center)?)
    }

    /// Mean of `b_k V_k` over the shell at distance `r` from well `i`.
    fn shell_mean(&self, i: usize, k: usize) -> Result<Vec<T>, TbError> {
        let f = self.frame(i, k)?;
        let p = &self.profiles[k];
        let lb = &self.lb;
        Ok((0..=self.n)
            .map(|r| {
                let lo = r.saturating_sub(f.n2);
                let hi = r.min(f.n1);
                let ln_norm = lb.ln_choose(self.n, r);
                (lo..=hi).fold(T::zero(), |acc, h1| {
                    let h2 = r - h1;
                    let d = f.dist_j(h1, h2);
                    if p[d] == T::zero() {
                        return acc;
                    }
                    let w = (lb.ln_choose(f.n1, h1) + lb.ln_choose(f.n2, h2) - ln_norm).exp();
                    acc + w * p[d]
                })
            })
            .collect())
    }

    /// `Σ_{k≠i} ⟨φa| b_k V_k |φb⟩` for two radial states of well `i`.
    fn cross_potential(&self, i: usize, phi_a: &[T], phi_b: &[T]) -> Result<T, TbError> {
        let mut acc = T::zero();
        for k in 0..self.instance.well_count() {
            if k == i || self.supports[k].is_empty() {
                continue;
            }
            let mean = self.shell_mean(i, k)?;
            for r in 0..=self.n {
                acc += phi_a[r] * phi_b[r] * mean[r];
            }
        }
        Ok(acc)
    }

    /// Diagonal of `H` restricted to the symmetric sector of frame
    /// `(i, j)`, including the shell averages of every other well.
    fn pair_diagonal(&self, i: usize, j: usize, frame: &PairFrame) -> Result<Vec<T>, TbError> {
        let (n1, n2) = (frame.n1, frame.n2);
        let pi = &self.profiles[i];
        let pj = &self.profiles[j];
        let mut diag = Vec::with_capacity((n1 + 1) * (n2 + 1));
        for h1 in 0..=n1 {
            for h2 in 0..=n2 {
                diag.push(pi[frame.dist_i(h1, h2)] + pj[frame.dist_j(h1, h2)]);
            }
        }
        let w = self.instance.wells();
        for k in 0..self.instance.well_count() {
            if k == i || k == j || self.supports[k].is_empty() {
                continue;
            }
            let tf = triple_frame_from_centers(&w[i].center, &w[j].center, &w[k].center)?;
            let pk = &self.profiles[k];
            for h1 in 0..=n1 {
                for h2 in 0..=n2 {
                    let vc = self.supports[k].iter().fold(T::zero(), |acc, &r| {
                        acc + shell_fraction(h1, h2, &tf, r, &self.lb) * pk[r]
                    });
                    diag[h1 * (n2 + 1) + h2] += vc;
                }
            }
        }
        Ok(diag)
    }

    /// Isolated ground and (optionally) first excited states of well `i`;
    /// the flag reports an excited state that had to be left out.
    fn isolated_states(&self, i: usize, order: u8) -> Result<(Vec<BoundState<T>>, bool), TbError> {
        self.check_well(i)?;
        if order > 1 {
            return Err(TbError::Order(order));
        }
        let n = self.n;
        let s0 = self.sector_solve_radial(i, 0);
        let ground = BoundState {
            well: i,
            order: 0,
            energy: s0.values[0],
            shape: StateShape::Radial(s0.vector(0)),
        };
        let mut states = vec![ground];
        if order == 0 {
            return Ok((states, false));
        }
        let second = s0.values.get(1).copied();
        let sigma1 = if n >= 2 {
            Some(self.sector_solve_radial(i, 1).values[0])
        } else {
            None
        };
        let floor = -self.a + self.profiles[i][n];
        let take_sigma1 = match (second, sigma1) {
            (Some(e0), Some(e1)) => e1 < e0,
            (None, Some(_)) => true,
            _ => false,
        };
        if !take_sigma1 {
            if let Some(e) = second {
                if e < floor {
                    states.push(BoundState {
                        well: i,
                        order: 1,
                        energy: e,
                        shape: StateShape::Radial(s0.vector(1)),
                    });
                }
            }
            return Ok((states, false));
        }
        let e = sigma1.expect("checked above");
        if !(e < floor) {
            return Ok((states, false));
        }
        match self.instance.well_count() {
            1 => {
                states.push(BoundState {
                    well: i,
                    order: 1,
                    energy: e,
                    shape: StateShape::Lone { sigma: 1 },
                });
                Ok((states, false))
            }
            2 => {
                let frame = self.frame(0, 1)?;
                let side = if i == 0 { WellSide::I } else { WellSide::J };
                for (sector, block) in [
                    (SectorIndex::new(1, 0), frame.n1),
                    (SectorIndex::new(0, 1), frame.n2),
                ] {
                    if block < 2 {
                        continue;
                    }
                    let lattice = sector.lattice(&frame);
                    let p = &self.profiles[i];
                    let m = build_block(&lattice, self.hop, |h| p[frame.dist(side, h[0], h[1])]);
                    let eig = eig_sorted(m);
                    let mut v: Vec<T> = eig.vectors.column(0).iter().copied().collect();
                    if v.iter().fold(T::zero(), |a, &x| a + x) < T::zero() {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                    for copy in 0..block - 1 {
                        states.push(BoundState {
                            well: i,
                            order: 1,
                            energy: eig.values[0],
                            shape: StateShape::Pair {
                                frame: (0, 1),
                                sector,
                                copy,
                                amplitudes: v.clone(),
                            },
                        });
                    }
                }
                Ok((states, false))
            }
            _ => Ok((states, true)),
        }
    }

    fn sector_solve_radial(&self, i: usize, sigma: usize) -> RadialSpectrum<T> {
        let lattice = SectorLattice::new(vec![(self.n, sigma)]);
        let p = &self.profiles[i];
        let e = SectorBlock {
            sigmas: vec![sigma],
            matrix: build_block(&lattice, self.hop, |h| p[h[0]]),
            lattice,
        }
        .solve(true);
        RadialSpectrum {
            values: e.values,
            vectors: e.vectors.expect("vectors requested"),
        }
    }

    /// `(⟨a|H|b⟩, ⟨a|b⟩)`.
    fn element(&self, a: &BoundState<T>, b: &BoundState<T>) -> Result<(T, T), TbError> {
        match (&a.shape, &b.shape) {
            (StateShape::Radial(_), StateShape::Radial(_)) if a.well > b.well => {
                let (h, s) = self.element(b, a)?;
                Ok((h, s))
            }
            (StateShape::Radial(pa), StateShape::Radial(pb)) => {
                if a.well == b.well {
                    let s = dot(pa, pb);
                    let h = b.energy * s + self.cross_potential(a.well, pa, pb)?;
                    Ok((h, s))
                } else {
                    let (i, j) = (a.well, b.well);
                    let frame = self.frame(i, j)?;
                    let diag = self.pair_diagonal(i, j, &frame)?;
                    let va = radial_to_pair(pa, &frame, WellSide::I, &self.lb)?;
                    let vb = radial_to_pair(pb, &frame, WellSide::J, &self.lb)?;
                    Ok(self.pair_pieces(&SectorIndex::SYMMETRIC.lattice(&frame), &diag, &va, &vb))
                }
            }
            (
                StateShape::Pair {
                    frame: fa,
                    sector: sa,
                    copy: ca,
                    amplitudes: va,
                },
                StateShape::Pair {
                    frame: fb,
                    sector: sb,
                    copy: cb,
                    amplitudes: vb,
                },
            ) => {
                if fa != fb {
                    return Err(TbError::FrameMismatch);
                }
                if sa != sb || ca != cb {
                    return Ok((T::zero(), T::zero()));
                }
                let (i, j) = *fa;
                let frame = self.frame(i, j)?;
                let lattice = sa.lattice(&frame);
                let (pi, pj) = (&self.profiles[i], &self.profiles[j]);
                let mut diag = Vec::with_capacity(lattice.dim());
                let mut h = [0usize; 2];
                for idx in 0..lattice.dim() {
                    lattice.coords_into(idx, &mut h);
                    diag.push(pi[frame.dist_i(h[0], h[1])] + pj[frame.dist_j(h[0], h[1])]);
                }
                Ok(self.pair_pieces(&lattice, &diag, va, vb))
            }
            (StateShape::Lone { sigma: x }, StateShape::Lone { sigma: y }) if x == y && a.well == b.well => {
                Ok((a.energy, T::one()))
            }
            _ => Ok((T::zero(), T::zero())),
        }
    }

    /// Symmetrized `vaᵀ H vb` and `va · vb` on one sector.
    fn pair_pieces(&self, lattice: &SectorLattice, diag: &[T], va: &[T], vb: &[T]) -> (T, T) {
        let hb = apply_block(lattice, self.hop, diag, vb);
        let ha = apply_block(lattice, self.hop, diag, va);
        let half: T = lit(0.5);
        ((dot(va, &hb) + dot(vb, &ha)) * half, dot(va, vb))
    }

    fn error_estimate(&self, ground: &[BoundState<T>]) -> Result<T, TbError> {
        let mut total = T::zero();
        for st in ground {
            let phi = st.radial().expect("ground states are radial");
            let i = st.well;
            let own = phi
                .iter()
                .zip(&self.profiles[i])
                .fold(T::zero(), |acc, (&f, &p)| acc + f * f * p);
            let term = st.energy - own + self.cross_potential(i, phi, phi)?;
            total += term * term;
        }
        Ok(total.sqrt())
    }

    fn assemble(&self, order: u8) -> Result<TbSystem<T>, TbError> {
        let k = self.instance.well_count();
        let per_well = (0..k)
            .into_par_iter()
            .map(|i| self.isolated_states(i, order))
            .collect::<Result<Vec<_>, _>>()?;
        let omitted_excited = per_well.iter().any(|(_, f)| *f);
        let ground_states: Vec<BoundState<T>> = per_well.iter().map(|(v, _)| v[0].clone()).collect();
        let states: Vec<BoundState<T>> = per_well.into_iter().flat_map(|(v, _)| v).collect();
        let dim = states.len();

        // Index ranges of each well's states.
        let mut ranges = vec![(0usize, 0usize); k];
        for (idx, st) in states.iter().enumerate() {
            let r = &mut ranges[st.well];
            if r.1 == 0 {
                r.0 = idx;
            }
            r.1 = idx + 1;
        }
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
        let blocks = pairs
            .par_iter()
            .map(|&(i, j)| self.well_pair_block(&states, ranges[i], ranges[j], i, j))
            .collect::<Result<Vec<_>, _>>()?;

        let mut hm = DMatrix::zeros(dim, dim);
        let mut sm = DMatrix::zeros(dim, dim);
        for entries in blocks {
            for (r, c, h, s) in entries {
                hm[(r, c)] = h;
                hm[(c, r)] = h;
                sm[(r, c)] = s;
                sm[(c, r)] = s;
            }
        }
        let basis = states
            .iter()
            .map(|st| BasisLabel {
                well: st.well,
                order: st.order,
                sector: st.sector(),
                copy: match &st.shape {
                    StateShape::Pair { copy, .. } => *copy,
                    _ => 0,
                },
            })
            .collect();
        Ok(TbSystem {
            s: T::zero(),
            hamiltonian: hm,
            overlap: sm,
            basis,
            ground_states,
            omitted_excited,
        })
    }

    /// Elements between the states of wells `i ≤ j`, sharing the pair
    /// diagonal across every radial combination.
    #[allow(clippy::type_complexity)]
    fn well_pair_block(
        &self,
        states: &[BoundState<T>],
        ri: (usize, usize),
        rj: (usize, usize),
        i: usize,
        j: usize,
    ) -> Result<Vec<(usize, usize, T, T)>, TbError> {
        let mut out = Vec::new();
        let radial_pair = if i != j {
            let frame = self.frame(i, j)?;
            let diag = self.pair_diagonal(i, j, &frame)?;
            Some((frame, diag))
        } else {
            None
        };
        for a in ri.0..ri.1 {
            let start = if i == j { a } else { rj.0 };
            for b in start..rj.1 {
                let (sa, sb) = (&states[a], &states[b]);
                let value = match (&sa.shape, &sb.shape, &radial_pair) {
                    (StateShape::Radial(pa), StateShape::Radial(pb), Some((frame, diag))) => {
                        let va = radial_to_pair(pa, frame, WellSide::I, &self.lb)?;
                        let vb = radial_to_pair(pb, frame, WellSide::J, &self.lb)?;
                        self.pair_pieces(&SectorIndex::SYMMETRIC.lattice(frame), diag, &va, &vb)
                    }
                    _ => self.element(sa, sb)?,
                };
                out.push((a, b, value.0, value.1));
            }
        }
        Ok(out)
    }
}

struct RadialSpectrum<T: Real> {
    values: Vec<T>,
    vectors: DMatrix<T>,
}

impl<T: Real> RadialSpectrum<T> {
    fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k).iter().copied().collect()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Isolated-well bound states of well `i` at `s`. Order 1 adds the lower
/// of the second symmetric level and the lowest one-unit ladder level when
/// it is bound below `-a(s) + b_i(s) V_i(n)`.
pub fn isolated_well_states<T: Real>(
    instance: &ProblemInstance<T>,
    i: usize,
    s: T,
    order: u8,
) -> Result<Vec<BoundState<T>>, TbError> {
    Ok(Context::new(instance, s)?.isolated_states(i, order)?.0)
}

/// Overlap `⟨a|b⟩`; zero across symmetry sectors.
pub fn tb_overlap<T: Real>(
    a: &BoundState<T>,
    b: &BoundState<T>,
    instance: &ProblemInstance<T>,
    s: T,
) -> Result<T, TbError> {
    Ok(Context::new(instance, s)?.element(a, b)?.1)
}

/// Exact matrix element `⟨a|H(s)|b⟩`.
pub fn tb_h_element<T: Real>(
    a: &BoundState<T>,
    b: &BoundState<T>,
    instance: &ProblemInstance<T>,
    s: T,
) -> Result<T, TbError> {
    let ctx = Context::new(instance, s)?;
    ctx.check_well(a.well)?;
    ctx.check_well(b.well)?;
    Ok(ctx.element(a, b)?.0)
}

/// Tight-binding matrices over the order-0 (ground) or order-1 (ground plus
/// first excited) isolated states of every well.
pub fn assemble_tb<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    order: u8,
) -> Result<TbSystem<T>, TbError> {
    if order > 1 {
        return Err(TbError::Order(order));
    }
    let mut sys = Context::new(instance, s)?.assemble(order)?;
    sys.s = s;
    Ok(sys)
}

/// `sqrt(Σ_i ⟨ψ_i| H - b_i V_i |ψ_i⟩²)` over the ground states.
pub fn tb_error_estimate<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    states: &[BoundState<T>],
) -> Result<T, TbError> {
    Context::new(instance, s)?.error_estimate(states)
}

/// Lowest two tight-binding levels with error diagnostics.
pub fn tb_solve<T: Real>(
    instance: &ProblemInstance<T>,
    s: T,
    order: u8,
    epsilon: T,
) -> Result<TbDiagnostics<T>, TbError> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(GeigenError::EpsilonOutOfRange(crate::scalar::to_f64(epsilon)).into());
    }
    if order > 1 {
        return Err(TbError::Order(order));
    }
    let ctx = Context::new(instance, s)?;
    let sys = ctx.assemble(order)?;
    if sys.dim() == 0 {
        return Err(TbError::DegenerateOverlap);
    }
    let pencil = fix_heiberger(&sys.hamiltonian, &sys.overlap, epsilon)?;
    if pencil.stable_dim == 0 {
        return Err(TbError::DegenerateOverlap);
    }
    let e0 = pencil.eigenvalues[0];
    let e1 = pencil.eigenvalues.get(1).copied();
    let error_estimate = ctx.error_estimate(&sys.ground_states)?;
    let gamma_tilde = e1.map(|e1| e1 - e0 - lit::<T>(2.0).sqrt() * error_estimate);
    Ok(TbDiagnostics {
        e0,
        e1,
        error_estimate,
        gamma_tilde,
        stable_dim: pencil.stable_dim,
        resolved: gamma_tilde.is_some_and(|g| g > T::zero()),
        omitted_excited: sys.omitted_excited,
    })
}
