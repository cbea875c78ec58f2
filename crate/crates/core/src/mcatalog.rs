//! Nonlocal coefficients `M`, detection of increasing pairs and grid-based
//! classification against the monotonicity conditions for the comparison
//! principle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differences at or below this absolute value count as ties.
pub const STRICTNESS_TOL: f64 = 1e-12;
pub const DEFAULT_GRID_POINTS: usize = 512;
/// Lower end of the geometric scan grid relative to `t_max`.
pub const GRID_SPAN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MFunctionSpec {
    /// `a + b t`
    Affine { a: f64, b: f64 },
    /// `a + b t^p`
    Power { a: f64, b: f64, p: f64 },
    /// `a / (1 + t)`
    RationalDecay { a: f64 },
    /// Piecewise-linear interpolation of `(t, values)`.
    Tabulated { t: Vec<f64>, values: Vec<f64> },
}

impl MFunctionSpec {
    /// Reads a two-column `t, M(t)` CSV file. A non-numeric first row is
    /// treated as a header.
    pub fn from_csv(path: &Path) -> Result<MFunctionSpec> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let (mut t, mut values) = (Vec::new(), Vec::new());
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if record.len() != 2 {
                return Err(Error::Config(format!("{} line {}: expected two columns", path.display(), line + 1)));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    t.push(a);
                    values.push(b);
                }
                _ if line == 0 => continue,
                _ => return Err(Error::Config(format!("{} line {}: non-numeric entry", path.display(), line + 1))),
            }
        }
        let spec = MFunctionSpec::Tabulated { t, values };
        spec.validate_shape()?;
        Ok(spec)
    }

    /// Structural checks independent of any scan range.
    pub fn validate_shape(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCoefficient(msg));
        match self {
            MFunctionSpec::Affine { a, b } => {
                if !(a.is_finite() && b.is_finite()) || *a <= 0.0 || *b < 0.0 {
                    return bad(format!("affine requires a > 0 and b >= 0, got a = {a}, b = {b}"));
                }
            }
            MFunctionSpec::Power { a, b, p } => {
                if !(a.is_finite() && b.is_finite() && p.is_finite()) || *p <= 0.0 {
                    return bad(format!("power requires finite a, b and p > 0, got ({a}, {b}, {p})"));
                }
            }
            MFunctionSpec::RationalDecay { a } => {
                if !a.is_finite() || *a <= 0.0 {
                    return bad(format!("rational decay requires a > 0, got {a}"));
                }
            }
            MFunctionSpec::Tabulated { t, values } => {
                if t.len() < 2 || t.len() != values.len() {
                    return bad(format!("table needs at least two (t, M) rows, got {} and {}", t.len(), values.len()));
                }
                if t[0] < 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table grid must be nonnegative and strictly increasing".into());
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("tabulated values must be finite and nonnegative".into());
                }
            }
        }
        Ok(())
    }

    /// Full validation including `M ≥ 0` on the scan range `[0, t_max]`.
    pub fn validate(&self, t_max: f64) -> Result<()> {
        self.validate_shape()?;
        let grid = ScanGrid::for_spec(self, t_max, DEFAULT_GRID_POINTS)?;
        for t in grid.points() {
            if eval_m(self, t)? < 0.0 {
                return Err(Error::InvalidCoefficient(format!("M({t}) < 0 inside the scan range")));
            }
        }
        Ok(())
    }

    /// `c · M` for `c > 0`.
    pub fn scaled(&self, c: f64) -> MFunctionSpec {
        match self {
            MFunctionSpec::Affine { a, b } => MFunctionSpec::Affine { a: c * a, b: c * b },
            MFunctionSpec::Power { a, b, p } => MFunctionSpec::Power { a: c * a, b: c * b, p: *p },
            MFunctionSpec::RationalDecay { a } => MFunctionSpec::RationalDecay { a: c * a },
            MFunctionSpec::Tabulated { t, values } => MFunctionSpec::Tabulated {
                t: t.clone(),
                values: values.iter().map(|v| c * v).collect(),
            },
        }
    }

    /// Largest `t` at which `M` can be evaluated.
    pub fn upper_limit(&self) -> f64 {
        match self {
            MFunctionSpec::Tabulated { t, .. } => *t.last().unwrap_or(&0.0),
            _ => f64::INFINITY,
        }
    }
}

pub fn eval_m(spec: &MFunctionSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::OutOfRange { t });
    }
    Ok(match spec {
        MFunctionSpec::Affine { a, b } => a + b * t,
        MFunctionSpec::Power { a, b, p } => a + b * t.powf(*p),
        MFunctionSpec::RationalDecay { a } => a / (1.0 + t),
        MFunctionSpec::Tabulated { t: grid, values } => {
            let (first, last) = (grid[0], grid[grid.len() - 1]);
            if t < first || t > last {
                return Err(Error::OutOfRange { t });
            }
            let k = grid.partition_point(|&g| g <= t).clamp(1, grid.len() - 1);
            let (t0, t1) = (grid[k - 1], grid[k]);
            let w = (t - t0) / (t1 - t0);
            values[k - 1] + w * (values[k] - values[k - 1])
        }
    })
}

/// Geometric grid `t_min = t_0 < … < t_{n−1} = t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
}

impl ScanGrid {
    /// Grid on `(0, t_max]`, clipped to a tabulated coefficient's range.
    pub fn for_spec(spec: &MFunctionSpec, t_max: f64, n: usize) -> Result<ScanGrid> {
        if !(t_max > 0.0) || !t_max.is_finite() || n < 3 {
            return Err(Error::PreconditionViolated(format!("scan needs t_max > 0 and n >= 3, got {t_max}, {n}")));
        }
        let t_max = t_max.min(spec.upper_limit());
        let mut t_min = t_max * GRID_SPAN;
        if let MFunctionSpec::Tabulated { t, .. } = spec {
            t_min = t_min.max(t[0]);
        }
        if !(t_min < t_max) {
            return Err(Error::PreconditionViolated("empty scan range for the tabulated coefficient".into()));
        }
        Ok(ScanGrid { t_min, t_max, n })
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let ratio = (self.t_max / self.t_min).ln();
        (0..self.n).map(move |k| {
            if k + 1 == self.n {
                self.t_max
            } else {
                self.t_min * (ratio * k as f64 / (self.n - 1) as f64).exp()
            }
        })
    }
}

/// Positive `t1 < t2` with `M(t1) < M(t2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncreasingPair {
    pub t1: f64,
    pub t2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl IncreasingPair {
    pub fn new(spec: &MFunctionSpec, t1: f64, t2: f64) -> Result<IncreasingPair> {
        if !(t1 > 0.0 && t2 > t1) {
            return Err(Error::PreconditionViolated(format!("need 0 < t1 < t2, got t1 = {t1}, t2 = {t2}")));
        }
        let (m1, m2) = (eval_m(spec, t1)?, eval_m(spec, t2)?);
        if !(m1 < m2) {
            return Err(Error::NotIncreasing { t1, t2, m1, m2 });
        }
        Ok(IncreasingPair { t1, t2, m1, m2 })
    }

    pub fn ratio(&self) -> f64 {
        self.m2 / self.m1
    }
}

fn sample(spec: &MFunctionSpec, grid: &ScanGrid) -> Result<Vec<(f64, f64)>> {
    grid.points().map(|t| Ok((t, eval_m(spec, t)?))).collect()
}

/// Best increasing pair on the scan grid: the one maximizing `M(t2)/M(t1)`.
fn best_pair(samples: &[(f64, f64)]) -> Option<IncreasingPair> {
    let mut best: Option<(f64, IncreasingPair)> = None;
    let mut low = samples[0];
    for &(t, m) in &samples[1..] {
        if m - low.1 > STRICTNESS_TOL {
            let ratio = if low.1 > 0.0 { m / low.1 } else { f64::INFINITY };
            if best.as_ref().is_none_or(|b| ratio > b.0) {
                best = Some((ratio, IncreasingPair { t1: low.0, t2: t, m1: low.1, m2: m }));
            }
        }
        if m < low.1 {
            low = (t, m);
        }
    }
    best.map(|b| b.1)
}

pub fn find_increasing_pair(spec: &MFunctionSpec, t_max: f64, n_grid: usize) -> Result<Option<IncreasingPair>> {
    let grid = ScanGrid::for_spec(spec, t_max, n_grid)?;
    Ok(best_pair(&sample(spec, &grid)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    CpHolds,
    CpFailsByIncrease,
    CpFailsByProduct,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MClassification {
    pub nonincreasing: bool,
    /// `s ↦ M(s²)s` strictly increasing on the grid `s = √t`.
    pub product_increasing: bool,
    pub verdict: Verdict,
    pub grid: ScanGrid,
    pub increasing_pair: Option<IncreasingPair>,
}

pub fn classify(spec: &MFunctionSpec, t_max: f64, n_grid: usize) -> Result<MClassification> {
    let grid = ScanGrid::for_spec(spec, t_max, n_grid)?;
    let samples = sample(spec, &grid)?;
    let increasing_pair = best_pair(&samples);
    let nonincreasing = increasing_pair.is_none();

    let product: Vec<f64> = samples.iter().map(|&(t, m)| m * t.sqrt()).collect();
    let steps: Vec<f64> = product.windows(2).map(|w| w[1] - w[0]).collect();
    let product_increasing = steps.iter().all(|&d| d > STRICTNESS_TOL);
    let all_ties = steps.iter().all(|d| d.abs() <= STRICTNESS_TOL);

    let verdict = match (nonincreasing, product_increasing) {
        (false, _) => Verdict::CpFailsByIncrease,
        (true, true) => Verdict::CpHolds,
        (true, false) if all_ties => Verdict::Unknown,
        (true, false) => Verdict::CpFailsByProduct,
    };
    Ok(MClassification { nonincreasing, product_increasing, verdict, grid, increasing_pair })
}
