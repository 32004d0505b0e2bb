//! Line-oriented configuration format.
//!
//! ```text
//! # comment
//! n = 10
//! s_grid = 0.2:0.9:8
//! method = tb1
//! epsilon = 0.1
//! driver = down
//! well center=0000000000 depth=-5 radius=1
//! well center=1111110000 table=-4.9,0,0,0,0,0,0,0,0,0,0 schedule=up
//! ```
//!
//! Statements are separated by newlines or `;`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::{BitString, ModelError, PotentialProfile, ProblemInstance, ScheduleTag, WellSpec};
use crate::scalar::{count, lit, Real};

/// Solver selected for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Brute,
    Exact,
    Tb0,
    Tb1,
}

impl Method {
    pub fn keyword(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Exact => "exact",
            Method::Tb0 => "tb0",
            Method::Tb1 => "tb1",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" => Ok(Method::Brute),
            "exact" => Ok(Method::Exact),
            "tb0" => Ok(Method::Tb0),
            "tb1" => Ok(Method::Tb1),
            other => Err(format!("unknown method `{other}` (expected brute|exact|tb0|tb1)")),
        }
    }
}

/// Evenly spaced s values with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SGrid<T> {
    pub start: T,
    pub end: T,
    pub count: usize,
}

impl<T: Real> SGrid<T> {
    pub fn new(start: T, end: T, count: usize) -> Self {
        Self { start, end, count }
    }

    pub fn points(&self) -> Vec<T> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            c => {
                let step = (self.end - self.start) / count::<T>(c - 1);
                (0..c)
                    .map(|i| {
                        if i == c - 1 {
                            self.end
                        } else {
                            self.start + step * count::<T>(i)
                        }
                    })
                    .collect()
            }
        }
    }
}

/// A parsed configuration document: the instance plus sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub instance: ProblemInstance<T>,
    pub s_grid: SGrid<T>,
    pub method: Method,
    pub epsilon: T,
}

impl<T: Real> RunConfig<T> {
    pub fn default_s_grid() -> SGrid<T> {
        SGrid::new(T::zero(), T::one(), 17)
    }

    pub fn default_epsilon() -> T {
        lit(0.1)
    }

    pub fn new(instance: ProblemInstance<T>, method: Method) -> Self {
        Self {
            instance,
            s_grid: Self::default_s_grid(),
            method,
            epsilon: Self::default_epsilon(),
        }
    }

    /// Renders the document; [`parse_config`] inverts it.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let g = &self.s_grid;
        writeln!(out, "n = {}", self.instance.n()).unwrap();
        writeln!(out, "s_grid = {}:{}:{}", g.start, g.end, g.count).unwrap();
        writeln!(out, "method = {}", self.method).unwrap();
        writeln!(out, "epsilon = {}", self.epsilon).unwrap();
        out.push_str(&wells_block(&self.instance));
        out
    }
}

impl<T: Real> ProblemInstance<T> {
    /// Renders just the instance statements (`n`, `driver`, wells).
    pub fn to_config_string(&self) -> String {
        let mut out = format!("n = {}\n", self.n());
        out.push_str(&wells_block(self));
        out
    }
}

fn wells_block<T: Real>(inst: &ProblemInstance<T>) -> String {
    let mut out = String::new();
    if inst.driver() != ScheduleTag::RampDown {
        writeln!(out, "driver = {}", inst.driver().keyword()).unwrap();
    }
    for w in inst.wells() {
        write!(out, "well center={}", w.center).unwrap();
        match &w.profile {
            PotentialProfile::StepWell { depth, radius } => {
                write!(out, " depth={depth} radius={radius}").unwrap();
            }
            PotentialProfile::Tabulated { values } => {
                let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(out, " table={}", joined.join(",")).unwrap();
            }
        }
        if w.schedule != ScheduleTag::RampUp {
            write!(out, " schedule={}", w.schedule.keyword()).unwrap();
        }
        out.push('\n');
    }
    out
}

fn syntax(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_num<V: FromStr>(line: usize, key: &str, raw: &str) -> Result<V, ModelError> {
    raw.trim()
        .parse::<V>()
        .map_err(|_| syntax(line, format!("cannot parse `{raw}` for `{key}`")))
}

struct RawWell<T> {
    line: usize,
    center: BitString,
    profile: PotentialProfile<T>,
    schedule: ScheduleTag,
}

fn parse_well<T: Real>(line: usize, attrs: &str) -> Result<RawWell<T>, ModelError> {
    let mut center = None;
    let mut depth: Option<T> = None;
    let mut radius: Option<usize> = None;
    let mut table: Option<Vec<T>> = None;
    let mut schedule = ScheduleTag::RampUp;
    for attr in attrs.split_whitespace() {
        let (k, v) = attr
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected key=value, found `{attr}`")))?;
        match k {
            "center" => center = Some(v.parse::<BitString>()?),
            "depth" => depth = Some(parse_num(line, k, v)?),
            "radius" => radius = Some(parse_num(line, k, v)?),
            "table" => {
                table = Some(
                    v.split(',')
                        .map(|x| parse_num(line, k, x))
                        .collect::<Result<Vec<T>, _>>()?,
                )
            }
            "schedule" => schedule = v.parse().map_err(|e: String| syntax(line, e))?,
            other => return Err(syntax(line, format!("unknown well attribute `{other}`"))),
        }
    }
    let center = center.ok_or_else(|| syntax(line, "well is missing `center`"))?;
    let profile = match (depth, radius, table) {
        (Some(depth), Some(radius), None) => PotentialProfile::StepWell { depth, radius },
        (None, None, Some(values)) => PotentialProfile::Tabulated { values },
        _ => {
            return Err(syntax(
                line,
                "well needs either `depth` and `radius`, or `table`",
            ))
        }
    };
    Ok(RawWell {
        line,
        center,
        profile,
        schedule,
    })
}

/// Parses a full configuration document.
pub fn parse_config<T: Real>(text: &str) -> Result<RunConfig<T>, ModelError> {
    let mut n: Option<usize> = None;
    let mut s_grid = RunConfig::<T>::default_s_grid();
    let mut method = Method::Exact;
    let mut epsilon = RunConfig::<T>::default_epsilon();
    let mut driver = ScheduleTag::RampDown;
    let mut wells = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        for stmt in content.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            if let Some(rest) = stmt.strip_prefix("well") {
                if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                    wells.push(parse_well::<T>(line, rest)?);
                    continue;
                }
            }
            let (key, value) = stmt
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("expected `key = value`, found `{stmt}`")))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "n" => n = Some(parse_num(line, key, value)?),
                "s_grid" => {
                    let parts: Vec<&str> = value.split(':').collect();
                    if parts.len() != 3 {
                        return Err(syntax(line, "s_grid must be <start>:<end>:<count>"));
                    }
                    let start: T = parse_num(line, key, parts[0])?;
                    let end: T = parse_num(line, key, parts[1])?;
                    let cnt: usize = parse_num(line, key, parts[2])?;
                    let unit = |x: T| x >= T::zero() && x <= T::one();
                    if !unit(start) || !unit(end) || cnt == 0 {
                        return Err(syntax(line, "s_grid endpoints must lie in [0, 1] with count >= 1"));
                    }
                    s_grid = SGrid::new(start, end, cnt);
                }
                "method" => method = value.parse().map_err(|e: String| syntax(line, e))?,
                "epsilon" => {
                    epsilon = parse_num(line, key, value)?;
                    if !(epsilon > T::zero() && epsilon < T::one()) {
                        return Err(syntax(line, "epsilon must lie in (0, 1)"));
                    }
                }
                "driver" => driver = value.parse().map_err(|e: String| syntax(line, e))?,
                other => return Err(syntax(line, format!("unknown key `{other}`"))),
            }
        }
    }

    let n = n.ok_or(ModelError::MissingQubitCount)?;
    let specs = wells
        .into_iter()
        .map(|w| {
            // Surface per-well length errors with their line number.
            if w.center.len() != n {
                return Err(syntax(
                    w.line,
                    ModelError::CenterLength {
                        expected: n,
                        found: w.center.len(),
                    }
                    .to_string(),
                ));
            }
            Ok(WellSpec::new(w.center, w.profile, w.schedule))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let instance = ProblemInstance::new(n, specs, driver)?;
    Ok(RunConfig {
        instance,
        s_grid,
        method,
        epsilon,
    })
}

/// Parses a document and keeps only the instance.
pub fn parse_problem<T: Real>(text: &str) -> Result<ProblemInstance<T>, ModelError> {
    parse_config(text).map(|c| c.instance)
}
