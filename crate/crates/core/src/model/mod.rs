//! Problem data model: bit strings, schedules, well potentials and the
//! validated problem instance.

mod config;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Real;

pub use config::{parse_config, parse_problem, Method, RunConfig, SGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing required key `n`")]
    MissingQubitCount,
    #[error("qubit count must be at least 1")]
    NoQubits,
    #[error("duplicate well centers")]
    DuplicateCenters,
    #[error("well center has length {found}, expected n = {expected}")]
    CenterLength { expected: usize, found: usize },
    #[error("tabulated profile has {found} values, expected n + 1 = {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("well radius {radius} exceeds n = {n}")]
    RadiusTooLarge { radius: usize, n: usize },
    #[error("step well depth must be negative")]
    NonNegativeDepth,
    #[error("schedule parameter s = {0} outside [0, 1]")]
    ScheduleOutOfRange(f64),
    #[error("distance {r} outside [0, {n}]")]
    DistanceOutOfRange { r: usize, n: usize },
    #[error("invalid bit string `{0}`")]
    InvalidBits(String),
}

/// A computational-basis label on `n` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Bit `i` is taken from bit `i` of `mask` (least significant first).
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self {
            bits: (0..n).map(|i| i < 64 && (mask >> i) & 1 == 1).collect(),
        }
    }

    /// Packs the string into an integer; `None` when longer than 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i)),
        )
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        BitString {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a ^ b)
                .collect(),
        }
    }
}

impl FromStr for BitString {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(ModelError::InvalidBits(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if bits.is_empty() {
            return Err(ModelError::InvalidBits(s.to_string()));
        }
        Ok(Self { bits })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Linear interpolation coefficient multiplying a driver or well term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleTag {
    /// `s`
    RampUp,
    /// `1 - s`
    RampDown,
    /// `1`
    Constant,
}

impl ScheduleTag {
    pub fn eval<T: Real>(self, s: T) -> Result<T, ModelError> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(ModelError::ScheduleOutOfRange(crate::scalar::to_f64(s)));
        }
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked<T: Real>(self, s: T) -> T {
        match self {
            ScheduleTag::RampUp => s,
            ScheduleTag::RampDown => T::one() - s,
            ScheduleTag::Constant => T::one(),
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ScheduleTag::RampUp => "up",
            ScheduleTag::RampDown => "down",
            ScheduleTag::Constant => "const",
        }
    }
}

impl FromStr for ScheduleTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(ScheduleTag::RampUp),
            "down" => Ok(ScheduleTag::RampDown),
            "const" => Ok(ScheduleTag::Constant),
            other => Err(format!("unknown schedule `{other}` (expected up|down|const)")),
        }
    }
}

/// Convenience wrapper for [`ScheduleTag::eval`].
pub fn schedule_eval<T: Real>(tag: ScheduleTag, s: T) -> Result<T, ModelError> {
    tag.eval(s)
}

/// Radial potential of one well as a function of Hamming distance.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialProfile<T> {
    /// `depth` for `r <= radius`, zero beyond.
    StepWell { depth: T, radius: usize },
    /// `values[r]` for `r = 0..=n`.
    Tabulated { values: Vec<T> },
}

impl<T: Real> PotentialProfile<T> {
    pub fn step(depth: T, radius: usize) -> Result<Self, ModelError> {
        if !(depth < T::zero()) {
            return Err(ModelError::NonNegativeDepth);
        }
        Ok(PotentialProfile::StepWell { depth, radius })
    }

    /// Value at distance `r`. Tabulated profiles must have been validated
    /// against `n` beforehand.
    pub fn value(&self, r: usize) -> T {
        match self {
            PotentialProfile::StepWell { depth, radius } => {
                if r <= *radius {
                    *depth
                } else {
                    T::zero()
                }
            }
            PotentialProfile::Tabulated { values } => values.get(r).copied().unwrap_or(T::zero()),
        }
    }

    /// Distances `r in 0..=n` where the profile is non-zero.
    pub fn support(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..=n).filter(move |&r| self.value(r) != T::zero())
    }

    fn validate(&self, n: usize) -> Result<(), ModelError> {
        match self {
            PotentialProfile::StepWell { depth, radius } => {
                if !(*depth < T::zero()) {
                    return Err(ModelError::NonNegativeDepth);
                }
                if *radius > n {
                    return Err(ModelError::RadiusTooLarge { radius: *radius, n });
                }
            }
            PotentialProfile::Tabulated { values } => {
                if values.len() != n + 1 {
                    return Err(ModelError::TableLength {
                        expected: n + 1,
                        found: values.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One Hamming-symmetric well.
#[derive(Debug, Clone, PartialEq)]
pub struct WellSpec<T> {
    pub center: BitString,
    pub profile: PotentialProfile<T>,
    pub schedule: ScheduleTag,
}

impl<T: Real> WellSpec<T> {
    pub fn new(center: BitString, profile: PotentialProfile<T>, schedule: ScheduleTag) -> Self {
        Self {
            center,
            profile,
            schedule,
        }
    }

    /// `b(s) * V(r)`.
    pub fn potential_at(&self, r: usize, s: T) -> Result<T, ModelError> {
        let n = self.center.len();
        if r > n {
            return Err(ModelError::DistanceOutOfRange { r, n });
        }
        Ok(self.schedule.eval(s)? * self.profile.value(r))
    }

    /// Scheduled potential for every distance `0..=n`.
    pub(crate) fn scheduled_profile(&self, n: usize, s: T) -> Vec<T> {
        let b = self.schedule.eval_unchecked(s);
        (0..=n).map(|r| b * self.profile.value(r)).collect()
    }
}

/// A validated instance: qubit count, wells and driver schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T> {
    n: usize,
    wells: Vec<WellSpec<T>>,
    driver: ScheduleTag,
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(n: usize, wells: Vec<WellSpec<T>>, driver: ScheduleTag) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::NoQubits);
        }
        let mut seen = HashSet::new();
        for w in &wells {
            if w.center.len() != n {
                return Err(ModelError::CenterLength {
                    expected: n,
                    found: w.center.len(),
                });
            }
            w.profile.validate(n)?;
            if !seen.insert(w.center.clone()) {
                return Err(ModelError::DuplicateCenters);
            }
        }
        Ok(Self { n, wells, driver })
    }

    /// Instance with default driver schedule (`1 - s`).
    pub fn with_wells(n: usize, wells: Vec<WellSpec<T>>) -> Result<Self, ModelError> {
        Self::new(n, wells, ScheduleTag::RampDown)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn wells(&self) -> &[WellSpec<T>] {
        &self.wells
    }

    pub fn well_count(&self) -> usize {
        self.wells.len()
    }

    pub fn driver(&self) -> ScheduleTag {
        self.driver
    }

    /// Driver coefficient `a(s)`.
    pub fn driver_strength(&self, s: T) -> Result<T, ModelError> {
        self.driver.eval(s)
    }

    /// The same instance with a single well removed.
    pub fn without_well(&self, k: usize) -> Self {
        let mut wells = self.wells.clone();
        wells.remove(k);
        Self {
            n: self.n,
            wells,
            driver: self.driver,
        }
    }

    /// The instance restricted to one well.
    pub fn isolated(&self, k: usize) -> Self {
        Self {
            n: self.n,
            wells: vec![self.wells[k].clone()],
            driver: self.driver,
        }
    }

    /// Every centre XOR-ed with `mask`; the spectrum is invariant.
    pub fn shifted(&self, mask: &BitString) -> Self {
        let wells = self
            .wells
            .iter()
            .map(|w| WellSpec {
                center: w.center.xor(mask),
                ..w.clone()
            })
            .collect();
        Self {
            n: self.n,
            wells,
            driver: self.driver,
        }
    }

    /// Wells reordered by `perm` (new index `i` holds old well `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            n: self.n,
            wells: perm.iter().map(|&p| self.wells[p].clone()).collect(),
            driver: self.driver,
        }
    }
}

/// `b_k(s) V_k(r)` for well `well`.
pub fn potential_at<T: Real>(well: &WellSpec<T>, r: usize, s: T) -> Result<T, ModelError> {
    well.potential_at(r, s)
}
