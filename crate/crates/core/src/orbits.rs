//! Omega-limit classification, coordinate projections, and the parameter
//! sweep engine behind the Feigenbaum diagrams.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dikin::{step_in_place, StateVector, Theta};
use crate::error::{Error, Result};
use crate::tol;

/// Burn-in is doubled up to this many steps while a classification stays
/// unresolved.
pub const MAX_BURN_IN: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitConfig {
    pub burn_in: usize,
    pub keep: usize,
    pub period_max: usize,
    pub match_tol: f64,
    pub seed: u64,
    /// Cap for the automatic burn-in doubling.
    pub max_burn_in: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            burn_in: 100_000,
            keep: 512,
            period_max: 64,
            match_tol: tol::ORBIT_MATCH,
            seed: 0,
            max_burn_in: MAX_BURN_IN,
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.period_max == 0 {
            return Err(Error::PreconditionViolated("period_max must be positive".into()));
        }
        if self.keep < 2 * self.period_max {
            return Err(Error::PreconditionViolated(format!(
                "keep = {} < 2 * period_max = {}",
                self.keep,
                2 * self.period_max
            )));
        }
        if !(self.match_tol > 0.0 && self.match_tol.is_finite()) {
            return Err(Error::PreconditionViolated(format!(
                "match_tol = {}",
                self.match_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    ConvergedPoint,
    Periodic(usize),
    Aperiodic,
}

impl Classification {
    /// Period, with a converged point counted as period 1 and aperiodic as 0.
    pub fn period(self) -> usize {
        match self {
            Classification::ConvergedPoint => 1,
            Classification::Periodic(p) => p,
            Classification::Aperiodic => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::ConvergedPoint => "converged",
            Classification::Periodic(_) => "periodic",
            Classification::Aperiodic => "aperiodic",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Periodic(p) => write!(f, "periodic({p})"),
            c => f.write_str(c.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSummary {
    pub classification: Classification,
    /// False when the cyclic match only held at ten times `match_tol`.
    pub resolved: bool,
    pub burn_in: usize,
    /// One point per cluster for a periodic orbit, the whole kept tail
    /// otherwise.
    pub points: Vec<Vec<f64>>,
}

impl OrbitSummary {
    pub fn project(&self, projection: Projection) -> Result<Vec<f64>> {
        self.points.iter().map(|p| projection.apply(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    FixedIndex(usize),
    SortedMiddle,
    SortedIndex(usize),
}

impl Projection {
    pub fn check_dim(self, n: usize) -> Result<()> {
        match self {
            Projection::FixedIndex(i) | Projection::SortedIndex(i) if i >= n => Err(
                Error::PreconditionViolated(format!("projection index {i} >= dimension {n}")),
            ),
            _ if n == 0 => Err(Error::PreconditionViolated("empty state".into())),
            _ => Ok(()),
        }
    }

    pub fn apply(self, w: &[f64]) -> Result<f64> {
        self.check_dim(w.len())?;
        Ok(match self {
            Projection::FixedIndex(i) => w[i],
            Projection::SortedMiddle => select(w, (w.len() - 1) / 2),
            Projection::SortedIndex(i) => select(w, i),
        })
    }
}

fn select(w: &[f64], k: usize) -> f64 {
    let mut v = w.to_vec();
    v.sort_by(f64::total_cmp);
    v[k]
}

/// Projection as given on the command line. `Random` becomes a fixed index
/// drawn once per sweep from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionSpec {
    Fixed(Projection),
    Random,
}

impl ProjectionSpec {
    pub fn resolve(self, n: usize, seed: u64) -> Result<Projection> {
        let p = match self {
            ProjectionSpec::Fixed(p) => p,
            ProjectionSpec::Random => {
                if n == 0 {
                    return Err(Error::PreconditionViolated("empty state".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, u64::MAX, u64::MAX));
                Projection::FixedIndex(rng.gen_range(0..n))
            }
        };
        p.check_dim(n)?;
        Ok(p)
    }
}

impl FromStr for ProjectionSpec {
    type Err = Error;

    /// `fixed:I`, `sorted:I`, `sorted-middle` or `random`; indices are 0-based.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let index = |rest: &str| {
            rest.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad projection index {rest:?}")))
        };
        match s {
            "sorted-middle" => Ok(ProjectionSpec::Fixed(Projection::SortedMiddle)),
            "random" => Ok(ProjectionSpec::Random),
            _ => {
                if let Some(rest) = s.strip_prefix("fixed:") {
                    Ok(ProjectionSpec::Fixed(Projection::FixedIndex(index(rest)?)))
                } else if let Some(rest) = s.strip_prefix("sorted:") {
                    Ok(ProjectionSpec::Fixed(Projection::SortedIndex(index(rest)?)))
                } else {
                    Err(Error::Parse(format!("unknown projection {s:?}")))
                }
            }
        }
    }
}

/// Smallest `p` such that `tail[k]` and `tail[k + p]` agree within `tol`
/// for every `k`.
fn cyclic_period(tail: &[Vec<f64>], period_max: usize, tol: f64) -> Option<usize> {
    let cap = period_max.min(tail.len() / 2);
    (1..=cap).find(|&p| {
        (0..tail.len() - p).all(|k| {
            tail[k]
                .iter()
                .zip(&tail[k + p])
                .all(|(a, b)| (a - b).abs() <= tol)
        })
    })
}

/// Classifies a finite tail of states by cyclic cluster matching.
///
/// Works on any sequence of equal-length vectors, so the scaled `w` trace of
/// the solver can be passed in directly.
pub fn classify_tail(tail: &[Vec<f64>], period_max: usize, match_tol: f64) -> Result<OrbitSummary> {
    if tail.len() < 2 {
        return Err(Error::PreconditionViolated(format!(
            "tail of length {} is too short to classify",
            tail.len()
        )));
    }
    let n = tail[0].len();
    if tail.iter().any(|t| t.len() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: tail.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n),
        });
    }
    let (period, resolved) = match cyclic_period(tail, period_max, match_tol) {
        Some(p) => (Some(p), true),
        None => (cyclic_period(tail, period_max, 10.0 * match_tol), false),
    };
    let (classification, points) = match period {
        Some(1) => (Classification::ConvergedPoint, vec![tail[tail.len() - 1].clone()]),
        Some(p) => (Classification::Periodic(p), tail[tail.len() - p..].to_vec()),
        None => (Classification::Aperiodic, tail.to_vec()),
    };
    Ok(OrbitSummary {
        classification,
        resolved: resolved || period.is_none(),
        burn_in: 0,
        points,
    })
}

/// Runs the Dikin process from `w0`, discards `cfg.burn_in` steps and
/// classifies the next `cfg.keep` states. Burn-in doubles while the result
/// is unresolved, up to `cfg.max_burn_in`.
pub fn classify_orbit(theta: Theta, w0: &StateVector, cfg: &OrbitConfig) -> Result<OrbitSummary> {
    cfg.validate()?;
    let mut w = w0.as_slice().to_vec();
    let mut done = 0usize;
    let mut target = cfg.burn_in;
    loop {
        for _ in done..target {
            step_in_place(theta, &mut w)?;
        }
        let mut tail = Vec::with_capacity(cfg.keep);
        for _ in 0..cfg.keep {
            step_in_place(theta, &mut w)?;
            tail.push(w.clone());
        }
        done = target + cfg.keep;
        let mut summary = classify_tail(&tail, cfg.period_max, cfg.match_tol)?;
        summary.burn_in = target;
        if summary.resolved || done >= cfg.max_burn_in {
            return Ok(summary);
        }
        target = (2 * target.max(1)).max(done).min(cfg.max_burn_in);
    }
}

/// Stream key for one sweep point.
fn mix(seed: u64, theta_index: u64, seed_index: u64) -> u64 {
    let mut z = seed
        ^ theta_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ seed_index.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Initial state for sweep point (`theta_index`, `seed_index`).
pub fn sweep_start(n: usize, seed: u64, theta_index: usize, seed_index: usize) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, theta_index as u64, seed_index as u64));
    StateVector::random(n, &mut rng)
}

/// `steps` equally spaced values on `[min, max)`.
pub fn theta_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min < max && steps > 0) {
        return Err(Error::PreconditionViolated(format!(
            "bad grid [{min}, {max}) with {steps} steps"
        )));
    }
    let h = (max - min) / steps as f64;
    Ok((0..steps).map(|k| min + h * k as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    pub seed_index: usize,
    pub outcome: std::result::Result<SweepValues, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepValues {
    pub classification: Classification,
    pub resolved: bool,
    pub values: Vec<f64>,
}

/// Classifies `seeds_per_theta` random orbits at each grid value and emits
/// the projected omega-limit values. Failures are kept per point.
pub fn feigenbaum_sweep(
    dimension: usize,
    theta_grid: &[f64],
    projection: Projection,
    cfg: &OrbitConfig,
    seeds_per_theta: usize,
) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    projection.check_dim(dimension)?;
    if dimension < 2 || seeds_per_theta == 0 {
        return Err(Error::PreconditionViolated(format!(
            "dimension {dimension}, seeds per theta {seeds_per_theta}"
        )));
    }
    if let Some(&t) = theta_grid.iter().find(|t| !(**t >= 0.0 && **t < 1.0)) {
        return Err(Error::InvalidTheta(t));
    }
    let jobs: Vec<(usize, usize)> = (0..theta_grid.len())
        .flat_map(|i| (0..seeds_per_theta).map(move |k| (i, k)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(i, k)| {
            let theta = theta_grid[i];
            let outcome = (|| {
                let w0 = sweep_start(dimension, cfg.seed, i, k)?;
                let summary = classify_orbit(Theta::new(theta)?, &w0, cfg)?;
                Ok(SweepValues {
                    classification: summary.classification,
                    resolved: summary.resolved,
                    values: summary.project(projection)?,
                })
            })();
            SweepPoint {
                theta,
                seed_index: k,
                outcome,
            }
        })
        .collect())
}

/// First grid value in `[lo, hi)` at which `predicate` holds for some seed.
pub fn onset_scan<P>(
    dimension: usize,
    predicate: P,
    bracket: (f64, f64),
    step: f64,
    cfg: &OrbitConfig,
    seeds_per_theta: usize,
) -> Result<Theta>
where
    P: Fn(&OrbitSummary) -> bool + Sync,
{
    let (lo, hi) = bracket;
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::PreconditionViolated(format!(
            "grid step {step} must lie in (0, 1e-3]"
        )));
    }
    if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
        return Err(Error::BracketError { lo, hi });
    }
    cfg.validate()?;
    let steps = ((hi - lo) / step).ceil() as usize;
    let grid: Vec<f64> = (0..steps)
        .map(|k| lo + step * k as f64)
        .filter(|&t| t < hi)
        .collect();
    let hits: Vec<bool> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let theta = match Theta::new(t) {
                Ok(t) => t,
                Err(_) => return false,
            };
            (0..seeds_per_theta).any(|k| {
                sweep_start(dimension, cfg.seed, i, k)
                    .and_then(|w0| classify_orbit(theta, &w0, cfg))
                    .map(|s| predicate(&s))
                    .unwrap_or(false)
            })
        })
        .collect();
    match hits.iter().position(|&h| h) {
        Some(i) => Theta::new(grid[i]),
        None => Err(Error::NotFound { lo, hi }),
    }
}
