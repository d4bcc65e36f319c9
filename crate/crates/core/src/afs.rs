//! Primal-dual affine scaling with the step size tied to `alpha_max`.
//!
//! Directions come from projecting `p_v = -v^3 / |v^2|` (with `v = sqrt(xs)`)
//! onto the null space and row space of `A diag(d)`, `d = sqrt(x/s)`. The step
//! is `alpha = theta * |xs| / max(xs)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dikin::Theta;
use crate::error::{Error, Result};
use crate::linalg::{self, cholesky, dot, norm2, solve_spd, sub, Mat};
use crate::tol;

/// Standard-form problem `min c^T x : A x = b, x >= 0` and its dual
/// `max b^T y : A^T y + s = c, s >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    name: String,
    a: Mat,
    b: Vec<f64>,
    c: Vec<f64>,
    x0: Option<Vec<f64>>,
    y0: Option<Vec<f64>>,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>, a: Mat, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m >= n {
            return Err(Error::InvalidProgram(format!(
                "need fewer constraints than variables, got {m}x{n}"
            )));
        }
        if b.len() != m || c.len() != n {
            return Err(Error::InvalidProgram(format!(
                "b has length {}, c has length {}; expected {m} and {n}",
                b.len(),
                c.len()
            )));
        }
        if b.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProgram("non-finite entry in b or c".into()));
        }
        let ones = vec![1.0; n];
        cholesky(&a.weighted_gram(&ones))
            .map_err(|_| Error::InvalidProgram("A does not have full row rank".into()))?;
        Ok(LinearProgram {
            name: name.into(),
            a,
            b,
            c,
            x0: None,
            y0: None,
        })
    }

    /// Attaches an explicit starting point used by `default_start`.
    pub fn with_start(mut self, x0: Option<Vec<f64>>, y0: Option<Vec<f64>>) -> Result<Self> {
        if x0.as_ref().is_some_and(|x| x.len() != self.n())
            || y0.as_ref().is_some_and(|y| y.len() != self.m())
        {
            return Err(Error::InvalidProgram("starting point has wrong length".into()));
        }
        self.x0 = x0;
        self.y0 = y0;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn x0(&self) -> Option<&[f64]> {
        self.x0.as_deref()
    }

    pub fn y0(&self) -> Option<&[f64]> {
        self.y0.as_deref()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        norm2(&sub(&self.a.mul_vec(x), &self.b))
    }

    pub fn dual_residual(&self, y: &[f64], s: &[f64]) -> f64 {
        let aty = self.a.tr_mul_vec(y);
        let r: Vec<f64> = aty.iter().zip(s).zip(&self.c).map(|((a, s), c)| a + s - c).collect();
        norm2(&r)
    }

    /// Least-squares projection of `x` onto `{A x = b}`.
    fn project_affine(&self, x: &[f64]) -> Result<Vec<f64>> {
        let gram = self.a.weighted_gram(&vec![1.0; self.n()]);
        let r = sub(&self.a.mul_vec(x), &self.b);
        let z = solve_spd(&gram, &r)?;
        Ok(sub(x, &self.a.tr_mul_vec(&z)))
    }
}

/// The 2x5 instance used by Castillo and Barnes: its dual is degenerate, with
/// every feasible point optimal.
pub fn castillo_barnes() -> LinearProgram {
    let a = Mat::from_rows(&[
        vec![1.0, 2.0, -3.0, -2.0, -1.0],
        vec![-1.0, 2.0, -1.0, -1.0, -1.0],
    ])
    .expect("static matrix");
    LinearProgram::new(
        "castillo-barnes",
        a,
        vec![0.0, 0.0],
        vec![10.0, 10.0, 5.0, 1.0, -1.0],
    )
    .expect("static instance is valid")
}

/// Primal-dual triple with `x > 0`, `s > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdIterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

impl PdIterate {
    pub fn gap(&self) -> f64 {
        dot(&self.x, &self.s)
    }

    /// `w = xs`
    pub fn w(&self) -> Vec<f64> {
        self.x.iter().zip(&self.s).map(|(a, b)| a * b).collect()
    }

    /// Checks interiority and feasibility against `lp`.
    pub fn check(&self, lp: &LinearProgram, feas_tol: f64) -> Result<()> {
        if self.x.len() != lp.n() || self.s.len() != lp.n() || self.y.len() != lp.m() {
            return Err(Error::PreconditionViolated("iterate has wrong dimensions".into()));
        }
        if self.x.iter().chain(&self.s).any(|&v| !(v > 0.0)) {
            return Err(Error::PreconditionViolated("iterate is not interior".into()));
        }
        let pr = lp.primal_residual(&self.x);
        if pr > feas_tol * (1.0 + norm2(lp.b())) {
            return Err(Error::PreconditionViolated(format!(
                "primal residual {pr:e}"
            )));
        }
        let dr = lp.dual_residual(&self.y, &self.s);
        if dr > feas_tol * (1.0 + norm2(lp.c())) {
            return Err(Error::PreconditionViolated(format!("dual residual {dr:e}")));
        }
        if !(self.gap() > 0.0) {
            return Err(Error::PreconditionViolated("duality gap is not positive".into()));
        }
        Ok(())
    }
}

/// Search directions for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Directions {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub ds: Vec<f64>,
}

pub fn directions(lp: &LinearProgram, it: &PdIterate) -> Result<Directions> {
    let w = it.w();
    let nw = norm2(&w);
    if !(nw > 0.0) || it.x.iter().chain(&it.s).any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateInput("iterate is not interior".into()));
    }
    // With d = sqrt(x/s) and p_v = -v (w/|w|): d p_v = -x w/|w| and d^2 = x/s,
    // so no square root is needed. The normal equations are homogeneous in
    // x; both sides are divided by max(x) max(d^2) to stay in range.
    let u: Vec<f64> = w.iter().map(|wi| wi / nw).collect();
    let xmax = linalg::max(&it.x);
    let smin = linalg::min(&it.s);
    let q: Vec<f64> = it
        .x
        .iter()
        .zip(&it.s)
        .map(|(x, s)| (x / xmax) * (smin / s))
        .collect();
    let sigma = linalg::max(&q);
    let weights: Vec<f64> = q.iter().map(|v| v / sigma).collect();
    let normal = lp.a.weighted_gram(&weights);
    let xu: Vec<f64> = it
        .x
        .iter()
        .zip(&u)
        .map(|(x, ui)| (x / xmax) * (smin * ui) / sigma)
        .collect();
    let rhs = lp.a.mul_vec(&xu);
    let dy = solve_spd(&normal, &rhs)?;
    let aty = lp.a.tr_mul_vec(&dy);
    let ds: Vec<f64> = aty.iter().map(|v| -v).collect();
    let dx = (0..lp.n())
        .map(|i| it.x[i] * (aty[i] / it.s[i] - u[i]))
        .collect();
    Ok(Directions { dx, dy, ds })
}

/// Residuals of the structural identities satisfied by exact directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionResiduals {
    /// `|A dx|`, relative to `|A| |dx|`
    pub null_space: f64,
    /// `|dx^T ds| / (|dx| |ds|)`
    pub orthogonality: f64,
    /// `|X^-1 dx + S^-1 ds + v^2 / |v^2||`
    pub recombination: f64,
}

pub fn direction_residuals(lp: &LinearProgram, it: &PdIterate, dir: &Directions) -> DirectionResiduals {
    let ndx = norm2(&dir.dx);
    let nds = norm2(&dir.ds);
    let null_space = norm2(&lp.a.mul_vec(&dir.dx)) / (lp.a.max_abs() * ndx).max(f64::MIN_POSITIVE);
    let orthogonality = dot(&dir.dx, &dir.ds).abs() / (ndx * nds).max(f64::MIN_POSITIVE);
    let w = it.w();
    let nw = norm2(&w);
    let rec: Vec<f64> = (0..lp.n())
        .map(|i| dir.dx[i] / it.x[i] + dir.ds[i] / it.s[i] + w[i] / nw)
        .collect();
    DirectionResiduals {
        null_space,
        orthogonality,
        recombination: norm2(&rec),
    }
}

/// How the step length is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `alpha = theta * alpha_max`
    Scaled,
    /// Fixed absolute `alpha`, the unmodified method.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub theta: Theta,
    pub alpha_max: f64,
    pub alpha: f64,
}

impl StepControl {
    pub fn new(theta: Theta, it: &PdIterate, rule: StepRule) -> Self {
        let w = it.w();
        let alpha_max = norm2(&w) / linalg::max(&w);
        let alpha = match rule {
            StepRule::Scaled => theta.value() * alpha_max,
            StepRule::Constant(a) => a,
        };
        StepControl {
            theta,
            alpha_max,
            alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub record_gap_threshold: f64,
    pub max_iters: usize,
    pub feas_tol: f64,
    pub step_rule: StepRule,
    /// Stop once this many iterates have been recorded.
    pub max_recorded: Option<usize>,
    /// When false, reaching `epsilon` does not end the run.
    pub stop_on_gap: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: tol::GAP_EPSILON,
            record_gap_threshold: tol::RECORD_GAP,
            max_iters: 10_000,
            feas_tol: tol::FEASIBILITY,
            step_rule: StepRule::Scaled,
            max_recorded: None,
            stop_on_gap: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.record_gap_threshold >= self.epsilon) {
            return Err(Error::PreconditionViolated(format!(
                "need 0 < epsilon <= record threshold, got {} and {}",
                self.epsilon, self.record_gap_threshold
            )));
        }
        Ok(())
    }
}

/// Takes one step; returns the new iterate and the step data used.
pub fn afs_step_with(
    lp: &LinearProgram,
    it: &PdIterate,
    theta: Theta,
    rule: StepRule,
) -> Result<(PdIterate, StepControl, Directions)> {
    if let StepRule::Scaled = rule {
        let t = theta.value();
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::PreconditionViolated(format!(
                "theta = {t} outside (0, 1)"
            )));
        }
    }
    let ctl = StepControl::new(theta, it, rule);
    let dir = directions(lp, it)?;
    let a = ctl.alpha;
    let x = linalg::axpy(a, &dir.dx, &it.x);
    let next = PdIterate {
        x: restore_primal(lp, x)?,
        y: linalg::axpy(a, &dir.dy, &it.y),
        s: linalg::axpy(a, &dir.ds, &it.s),
    };
    if next.x.iter().chain(&next.s).any(|&v| !(v > 0.0)) {
        return Err(Error::NonInterior { iter: 0 });
    }
    if next.x.iter().chain(&next.s).any(|&v| !v.is_normal()) {
        return Err(Error::Underflow { iter: 0 });
    }
    Ok((next, ctl, dir))
}

/// Removes the rounding residual of `A x = b` with the correction that is
/// smallest relative to each coordinate, `X^2 A^T (A X^2 A^T)^-1 (A x - b)`.
///
/// As `x` shrinks geometrically the absolute rounding error of each step does
/// not, so without this the relative residual grows by the contraction
/// factor every iteration.
fn restore_primal(lp: &LinearProgram, mut x: Vec<f64>) -> Result<Vec<f64>> {
    let r = sub(&lp.a.mul_vec(&x), lp.b());
    let xmax = linalg::max(&x);
    if !(xmax > 0.0) || r.iter().all(|&v| v == 0.0) {
        return Ok(x);
    }
    let xs: Vec<f64> = x.iter().map(|v| v / xmax).collect();
    let x2: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let rs: Vec<f64> = r.iter().map(|v| v / xmax).collect();
    let z = solve_spd(&lp.a.weighted_gram(&x2), &rs)?;
    let atz = lp.a.tr_mul_vec(&z);
    for i in 0..x.len() {
        x[i] -= xmax * (x2[i] * atz[i]);
    }
    Ok(x)
}

pub fn afs_step(lp: &LinearProgram, it: &PdIterate, theta: Theta) -> Result<PdIterate> {
    afs_step_with(lp, it, theta, StepRule::Scaled).map(|(next, _, _)| next)
}

/// One row of a solve trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// True duality gap. Flushes to zero only far below `f64::MIN_POSITIVE`;
    /// `log10_gap` is always exact to rounding.
    pub gap: f64,
    pub log10_gap: f64,
    /// `x` and `w` below are stored multiplied by `2^scale_log2`.
    pub scale_log2: i32,
    pub alpha_max: f64,
    pub alpha: f64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub w_scaled: Vec<f64>,
    pub y: Vec<f64>,
    /// Gap at or below the record threshold.
    pub recorded: bool,
}

impl TraceRecord {
    pub fn iterate(&self) -> PdIterate {
        PdIterate {
            x: self.x.clone(),
            y: self.y.clone(),
            s: self.s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged,
    RecordLimit,
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub theta: Theta,
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
}

impl SolveTrace {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    pub fn recorded(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.recorded)
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace holds at least the start")
    }

    pub fn error(&self) -> Option<&Error> {
        match &self.stop {
            StopReason::Failed(e) => Some(e),
            StopReason::Converged | StopReason::RecordLimit => None,
        }
    }
}

/// Gap below which the primal iterate of a homogeneous problem is rescaled.
const RESCALE_BELOW: f64 = 1.0 / (1u64 << 63) as f64 / (1u64 << 63) as f64;

/// Runs the modified method from `start` until the gap drops to `epsilon`.
///
/// Failures (iteration cap, leaving the interior, a singular normal matrix)
/// end the run but keep every iterate reached so far.
///
/// When `b = 0` every iterate may be replaced by `(2^k x, y, s)` without
/// changing the directions in `y` and `s` or the scaled `w`, so `x` is
/// periodically multiplied by an even power of two. This lets long runs
/// go below the smallest representable gap.
pub fn solve(lp: &LinearProgram, start: &PdIterate, theta: Theta, cfg: &SolverConfig) -> Result<SolveTrace> {
    cfg.validate()?;
    start.check(lp, cfg.feas_tol)?;
    let homogeneous = lp.b().iter().all(|&v| v == 0.0);
    let log10_eps = cfg.epsilon.log10();
    let log10_record = cfg.record_gap_threshold.log10();
    let mut it = start.clone();
    let mut scale_log2 = 0i32;
    let mut records = Vec::new();
    let mut recorded = 0usize;
    let mut iter = 0;
    let stop = loop {
        if homogeneous && it.gap() < RESCALE_BELOW {
            let k = 2 * ((-it.gap().log2() / 2.0).round() as i32);
            let factor = 2f64.powi(k);
            for x in it.x.iter_mut() {
                *x *= factor;
            }
            scale_log2 += k;
        }
        let stored_gap = it.gap();
        let log10_gap = stored_gap.log10() - scale_log2 as f64 * std::f64::consts::LOG10_2;
        let gap = if scale_log2 == 0 {
            stored_gap
        } else {
            10f64.powf(log10_gap)
        };
        let ctl = StepControl::new(theta, &it, cfg.step_rule);
        let w = it.w();
        let wmax = linalg::max(&w);
        let is_recorded = log10_gap <= log10_record;
        recorded += is_recorded as usize;
        records.push(TraceRecord {
            iter,
            gap,
            log10_gap,
            scale_log2,
            alpha_max: ctl.alpha_max,
            alpha: ctl.alpha,
            w_scaled: w.iter().map(|v| v / wmax).collect(),
            w,
            x: it.x.clone(),
            s: it.s.clone(),
            y: it.y.clone(),
            recorded: is_recorded,
        });
        if cfg.stop_on_gap && log10_gap <= log10_eps {
            break StopReason::Converged;
        }
        if cfg.max_recorded.is_some_and(|cap| recorded >= cap) {
            break StopReason::RecordLimit;
        }
        if iter >= cfg.max_iters {
            break StopReason::Failed(Error::MaxIters(cfg.max_iters));
        }
        match afs_step_with(lp, &it, theta, cfg.step_rule) {
            Ok((next, _, _)) => it = next,
            Err(Error::NonInterior { .. }) => {
                break StopReason::Failed(Error::NonInterior { iter: iter + 1 })
            }
            Err(Error::Underflow { .. }) => {
                break StopReason::Failed(Error::Underflow { iter: iter + 1 })
            }
            Err(e) => break StopReason::Failed(e),
        }
        iter += 1;
    };
    Ok(SolveTrace {
        theta,
        records,
        stop,
    })
}

/// Seeded search for an interior start whose run at `theta` records
/// `target` iterates without leaving the interior.
///
/// The first candidate is `default_start`; later ones perturb it with a
/// stream drawn from `seed`. Returns the start and its trace.
pub fn capture_attractor(
    lp: &LinearProgram,
    theta: Theta,
    cfg: &SolverConfig,
    target: usize,
    seed: u64,
    max_starts: usize,
) -> Result<(PdIterate, SolveTrace)> {
    let cfg = SolverConfig {
        max_recorded: Some(target),
        stop_on_gap: false,
        ..*cfg
    };
    let base = default_start(lp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(PdIterate, SolveTrace)> = None;
    for k in 0..max_starts {
        let start = if k == 0 {
            base.clone()
        } else {
            match perturb_start(lp, &base, &mut rng, cfg.feas_tol) {
                Some(s) => s,
                None => continue,
            }
        };
        let trace = solve(lp, &start, theta, &cfg)?;
        let count = trace.recorded().count();
        if count >= target {
            return Ok((start, trace));
        }
        if best.as_ref().is_none_or(|(_, t)| t.recorded().count() < count) {
            best = Some((start, trace));
        }
    }
    let got = best.map_or(0, |(_, t)| t.recorded().count());
    Err(Error::CaptureFailed { target, best: got })
}

fn perturb_start(lp: &LinearProgram, base: &PdIterate, rng: &mut ChaCha8Rng, feas_tol: f64) -> Option<PdIterate> {
    let x: Vec<f64> = base
        .x
        .iter()
        .map(|v| v * (1.0 + 0.3 * (rng.gen::<f64>() - 0.5)))
        .collect();
    let y: Vec<f64> = base
        .y
        .iter()
        .map(|v| v + 0.5 * (rng.gen::<f64>() - 0.5))
        .collect();
    let x = lp.project_affine(&x).ok()?;
    let s = sub(lp.c(), &lp.a.tr_mul_vec(&y));
    let it = PdIterate { x, y, s };
    it.check(lp, feas_tol).ok().map(|_| it)
}

/// `A^T y <= c` up to `feas_tol (1 + |c_i|)` per row.
pub fn dual_feasibility_check(lp: &LinearProgram, y: &[f64], feas_tol: f64) -> bool {
    if y.len() != lp.m() {
        return false;
    }
    lp.a
        .tr_mul_vec(y)
        .iter()
        .zip(lp.c())
        .all(|(a, c)| *a <= c + feas_tol * (1.0 + c.abs()))
}

const PHASE_ONE_ITERS: usize = 500;
const PHASE_ONE_STEP: f64 = 0.5;

/// Strictly positive `x` with `A x = b`: primal affine scaling on
/// `min tau : A x + (b - A e) tau = b` started from `(e, 1)`.
fn primal_interior(lp: &LinearProgram) -> Result<Vec<f64>> {
    let n = lp.n();
    let e = vec![1.0; n];
    let r = sub(lp.b(), &lp.a.mul_vec(&e));
    let mut rows = lp.a.to_rows();
    for (row, ri) in rows.iter_mut().zip(&r) {
        row.push(*ri);
    }
    let big = Mat::from_rows(&rows)?;
    let mut z: Vec<f64> = e.iter().copied().chain([1.0]).collect();
    if norm2(&r) <= 1e-14 * (1.0 + norm2(lp.b())) {
        return Ok(e);
    }
    for _ in 0..PHASE_ONE_ITERS {
        // projected gradient of tau in the scaled space
        let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
        let gram = big.weighted_gram(&z2);
        let mut zc = vec![0.0; n + 1];
        zc[n] = z[n];
        let zzc: Vec<f64> = zc.iter().zip(&z).map(|(a, b)| a * b).collect();
        let u = solve_spd(&gram, &big.mul_vec(&zzc))?;
        let btu = big.tr_mul_vec(&u);
        let p: Vec<f64> = (0..=n).map(|i| -(zc[i] - z[i] * btu[i])).collect();
        let dz: Vec<f64> = p.iter().zip(&z).map(|(a, b)| a * b).collect();
        if !(dz[n] < 0.0) {
            break;
        }
        let to_zero = -z[n] / dz[n];
        let trial: Vec<f64> = (0..n).map(|i| z[i] + to_zero * dz[i]).collect();
        let scale = linalg::max(&trial);
        if trial.iter().all(|&v| v > 1e-9 * scale) {
            return Ok(trial);
        }
        let ratio = (0..=n)
            .filter(|&i| dz[i] < 0.0)
            .map(|i| -z[i] / dz[i])
            .fold(f64::INFINITY, f64::min);
        let step = PHASE_ONE_STEP * ratio;
        for (zi, di) in z.iter_mut().zip(&dz) {
            *zi += step * di;
        }
        if z[n] < 1e-14 {
            break;
        }
    }
    Err(Error::NoInteriorFound(
        "the primal feasible set has empty interior".into(),
    ))
}

/// Strictly feasible `y` with `A^T y < c`: dual affine scaling on
/// `max t : A^T y + t e <= c` started from `y0`.
fn dual_interior(lp: &LinearProgram, y0: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (lp.m(), lp.n());
    let mut rows = lp.a.to_rows();
    rows.push(vec![1.0; n]);
    let g = Mat::from_rows(&rows)?;
    let slack0 = sub(lp.c(), &lp.a.tr_mul_vec(y0));
    let mut z: Vec<f64> = y0.iter().copied().chain([linalg::min(&slack0) - 1.0]).collect();
    let mut bvec = vec![0.0; m + 1];
    bvec[m] = 1.0;
    for _ in 0..PHASE_ONE_ITERS {
        if z[m] > 0.0 {
            return Ok(z[..m].to_vec());
        }
        let u = sub(lp.c(), &g.tr_mul_vec(&z));
        let inv_u2: Vec<f64> = u.iter().map(|v| 1.0 / (v * v)).collect();
        let h = g.weighted_gram(&inv_u2);
        let dz = solve_spd(&h, &bvec).map_err(|_| {
            Error::NoInteriorFound("phase-one normal matrix is singular".into())
        })?;
        let du: Vec<f64> = g.tr_mul_vec(&dz).into_iter().map(|v| -v).collect();
        let ratio = (0..n)
            .filter(|&i| du[i] < 0.0)
            .map(|i| -u[i] / du[i])
            .fold(f64::INFINITY, f64::min);
        let step = if ratio.is_finite() {
            PHASE_ONE_STEP * ratio
        } else {
            (1.0 - z[m]) / dz[m]
        };
        for (zi, di) in z.iter_mut().zip(&dz) {
            *zi += step * di;
        }
    }
    Err(Error::NoInteriorFound(
        "the dual feasible set has empty interior".into(),
    ))
}

/// Moves `from` toward the strictly positive `to` along `from + t (to - from)`,
/// stopping halfway between the first positive `t` and `to`.
fn shift_to_positive<F>(from: &[f64], to: &[f64], value: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let vf = value(from);
    let vt = value(to);
    let t_min = vf
        .iter()
        .zip(&vt)
        .filter(|(a, _)| **a <= 0.0)
        .map(|(a, b)| -a / (b - a))
        .fold(0.0_f64, f64::max);
    let t = 0.5 * (t_min + 1.0);
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Deterministic interior starting point.
///
/// Uses the problem's own `x0`/`y0` when present; otherwise the projection of
/// `e` onto `{A x = b}` and the least-squares `y` for `A^T y + e = c`, each
/// pushed into the interior if needed.
pub fn default_start(lp: &LinearProgram) -> Result<PdIterate> {
    let n = lp.n();
    let x = match lp.x0() {
        Some(x0) => x0.to_vec(),
        None => {
            let xp = lp.project_affine(&vec![1.0; n])?;
            if xp.iter().all(|&v| v > 0.0) {
                xp
            } else {
                let interior = primal_interior(lp)?;
                let x = shift_to_positive(&xp, &interior, |v| v.to_vec());
                lp.project_affine(&x)?
            }
        }
    };
    let y = match lp.y0() {
        Some(y0) => y0.to_vec(),
        None => {
            let gram = lp.a.weighted_gram(&vec![1.0; n]);
            let target: Vec<f64> = lp.c().iter().map(|c| c - 1.0).collect();
            let y_ls = solve_spd(&gram, &lp.a.mul_vec(&target))?;
            let slack = |y: &[f64]| sub(lp.c(), &lp.a.tr_mul_vec(y));
            if slack(&y_ls).iter().all(|&v| v > 0.0) {
                y_ls
            } else {
                let interior = dual_interior(lp, &y_ls)?;
                shift_to_positive(&y_ls, &interior, slack)
            }
        }
    };
    let s = sub(lp.c(), &lp.a.tr_mul_vec(&y));
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NoInteriorFound("x is not strictly positive".into()));
    }
    if s.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NoInteriorFound("s is not strictly positive".into()));
    }
    let it = PdIterate { x, y, s };
    it.check(lp, tol::FEASIBILITY)?;
    Ok(it)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn th(v: f64) -> Theta {
        Theta::new(v).unwrap()
    }

    #[test]
    fn castillo_barnes_shape() {
        let lp = castillo_barnes();
        assert_eq!((lp.m(), lp.n()), (2, 5));
        assert_eq!(lp.c(), &[10.0, 10.0, 5.0, 1.0, -1.0]);
        assert_eq!(lp.b(), &[0.0, 0.0]);
    }

    #[test]
    fn rejects_rank_deficient() {
        let a = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert!(LinearProgram::new("bad", a, vec![0.0, 0.0], vec![1.0; 3]).is_err());
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(LinearProgram::new("square", a, vec![0.0, 0.0], vec![1.0; 2]).is_err());
    }

    #[test]
    fn default_start_is_interior() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        assert!(it.x.iter().all(|&v| v > 0.0));
        assert!(norm2(&lp.a().mul_vec(&it.x)) <= 1e-10);
        let s = sub(lp.c(), &lp.a().tr_mul_vec(&it.y));
        assert!(s.iter().all(|&v| v > 0.0));
        assert!(dual_feasibility_check(&lp, &it.y, 1e-8));
    }

    #[test]
    fn default_start_detects_empty_interior() {
        let a = Mat::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let lp = LinearProgram::new("empty", a, vec![0.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(default_start(&lp), Err(Error::NoInteriorFound(_))));
    }

    #[test]
    fn explicit_start_is_used() {
        let lp = castillo_barnes()
            .with_start(Some(vec![1.0, 1.0, 1.0, 0.25, 0.25]), None)
            .unwrap();
        // 1 + 2 - 3 - 0.5 - 0.25 != 0, so the check must fail
        assert!(default_start(&lp).is_err());
    }

    #[test]
    fn dual_feasibility_examples() {
        let lp = castillo_barnes();
        assert!(dual_feasibility_check(&lp, &[3.0513, 0.5522], 1e-8));
        assert!(!dual_feasibility_check(&lp, &[100.0, 100.0], 1e-8));
        assert!(!dual_feasibility_check(&lp, &[0.0, 0.0], 1e-8));
        assert!(!dual_feasibility_check(&lp, &[0.0], 1e-8));
    }

    /// Random LP with a known interior point: `b = A x*`, `c = A^T y* + s*`.
    fn random_instance(rng: &mut ChaCha8Rng) -> (LinearProgram, PdIterate) {
        let m = rng.gen_range(1..4);
        let n = rng.gen_range(m + 1..7);
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let a = Mat::from_rows(&rows).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let b = a.mul_vec(&x);
        let c = linalg::axpy(1.0, &a.tr_mul_vec(&y), &s);
        let lp = LinearProgram::new("random", a, b, c).unwrap();
        (lp, PdIterate { x, y, s })
    }

    #[test]
    fn directions_satisfy_identities_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (lp, it) = random_instance(&mut rng);
            let dir = directions(&lp, &it).unwrap();
            let res = direction_residuals(&lp, &it, &dir);
            assert!(res.null_space <= 1e-10, "{res:?}");
            assert!(res.orthogonality <= 1e-10, "{res:?}");
            assert!(res.recombination <= 1e-8, "{res:?}");
        }
    }

    #[test]
    fn one_step_reduces_gap() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        let next = afs_step(&lp, &it, th(0.5)).unwrap();
        assert!(next.gap() < it.gap());
        next.check(&lp, 1e-8).unwrap();
    }

    #[test]
    fn small_theta_barely_moves() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        let dir = directions(&lp, &it).unwrap();
        let ctl = StepControl::new(th(1e-6), &it, StepRule::Scaled);
        let next = afs_step(&lp, &it, th(1e-6)).unwrap();
        let moved = norm2(&sub(&next.x, &it.x)) + norm2(&sub(&next.y, &it.y)) + norm2(&sub(&next.s, &it.s));
        let bound = ctl.alpha * (norm2(&dir.dx) + norm2(&dir.dy) + norm2(&dir.ds));
        assert!(moved <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn alpha_max_on_central_line() {
        let it = PdIterate {
            x: vec![1.0; 5],
            y: vec![0.0; 2],
            s: vec![1.0; 5],
        };
        let ctl = StepControl::new(th(0.5), &it, StepRule::Scaled);
        assert!((ctl.alpha_max - 5f64.sqrt()).abs() < 1e-15);
        assert!((ctl.alpha - 0.5 * 5f64.sqrt()).abs() < 1e-15);
        let ctl = StepControl::new(th(0.5), &it, StepRule::Constant(0.1));
        assert_eq!(ctl.alpha, 0.1);
    }

    #[test]
    fn alpha_max_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (_, it) = random_instance(&mut rng);
            let ctl = StepControl::new(th(0.5), &it, StepRule::Scaled);
            let n = it.x.len() as f64;
            assert!(ctl.alpha_max >= 1.0 - 1e-15 && ctl.alpha_max <= n.sqrt() + 1e-12);
        }
    }

    #[test]
    fn solve_converges_for_half() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        let trace = solve(&lp, &it, th(0.5), &SolverConfig::default()).unwrap();
        assert!(trace.converged(), "{:?}", trace.stop);
        assert!(trace.last().gap <= 1e-10);
        assert!(trace.records.iter().all(|r| r.gap > 0.0));
        assert!(trace.recorded().count() > 0);
    }

    #[test]
    fn solve_reports_max_iters_with_partial_trace() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        let cfg = SolverConfig {
            max_iters: 3,
            ..SolverConfig::default()
        };
        let trace = solve(&lp, &it, th(0.5), &cfg).unwrap();
        assert_eq!(trace.error(), Some(&Error::MaxIters(3)));
        assert_eq!(trace.records.len(), 4);
    }

    #[test]
    fn homogeneous_rescale_is_exact() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        let scaled = PdIterate {
            x: it.x.iter().map(|v| v * 2f64.powi(-100)).collect(),
            ..it.clone()
        };
        let cfg = SolverConfig {
            max_iters: 60,
            stop_on_gap: false,
            ..SolverConfig::default()
        };
        let a = solve(&lp, &it, th(0.7), &cfg).unwrap();
        let b = solve(&lp, &scaled, th(0.7), &cfg).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.y, rb.y);
            assert_eq!(ra.w_scaled, rb.w_scaled);
            assert!((ra.log10_gap - rb.log10_gap - 100.0 * std::f64::consts::LOG10_2).abs() < 1e-9);
        }
    }

    #[test]
    fn long_runs_pass_below_the_double_range() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        let cfg = SolverConfig {
            max_iters: 3000,
            stop_on_gap: false,
            ..SolverConfig::default()
        };
        let trace = solve(&lp, &it, th(0.7), &cfg).unwrap();
        assert_eq!(trace.error(), Some(&Error::MaxIters(3000)));
        let last = trace.last();
        assert!(last.scale_log2 > 0);
        assert!(last.log10_gap < -400.0);
        assert!(dual_feasibility_check(&lp, &last.y, 1e-8));
    }

    #[test]
    fn dual_limit_for_default_start() {
        let lp = castillo_barnes();
        let it = default_start(&lp).unwrap();
        for t in [0.3, 0.5, 0.66] {
            let trace = solve(&lp, &it, th(t), &SolverConfig::default()).unwrap();
            assert!(trace.converged());
            let y = &trace.last().y;
            assert!((y[0] - 3.0512998362).abs() < 1e-6, "{t}: {y:?}");
            assert!((y[1] - 0.5521654920).abs() < 1e-6, "{t}: {y:?}");
            assert!(dual_feasibility_check(&lp, y, 1e-8));
        }
    }

    #[test]
    fn capture_attractor_finds_long_feasible_trace() {
        let lp = castillo_barnes();
        let cfg = SolverConfig::default();
        let (start, trace) = capture_attractor(&lp, th(0.94), &cfg, 300, 0, 200).unwrap();
        assert!(start.check(&lp, 1e-8).is_ok());
        assert_eq!(trace.stop, StopReason::RecordLimit);
        assert_eq!(trace.recorded().count(), 300);
        assert!(trace.recorded().all(|r| dual_feasibility_check(&lp, &r.y, 1e-8)));
        let again = capture_attractor(&lp, th(0.94), &cfg, 300, 0, 200).unwrap();
        assert_eq!(again.1, trace);
        assert!(matches!(
            capture_attractor(&lp, th(0.94), &cfg, 1_000_000, 0, 2),
            Err(Error::CaptureFailed { target: 1_000_000, .. })
        ));
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig {
            epsilon: 1.0,
            record_gap_threshold: 0.1,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
