//! Closed-form fixed points, stability thresholds, the logistic embedding and
//! the near-`theta = 1` periodic orbit with its eigenvalue certificate.

use crate::dikin::{
    dikin_step, f_map, f_prime, g_iterate, g_map, h_map, StateVector, Theta,
};
use crate::error::{Error, Result};
use crate::linalg::{enestrom_kakeya_bounds, Mat, Poly};
use crate::tol;

/// Positive root `r` of `theta r^2 + (theta - 1) r + (theta - 1) = 0`, the
/// fixed point of `h` below 1 (for `theta > 2/3`).
pub fn fixed_point_r(theta: Theta) -> Result<f64> {
    let t = theta.value();
    if t <= 0.0 {
        return Err(Error::NotApplicable("theta must be positive".into()));
    }
    let u = 1.0 - t;
    Ok((u + (u * u + 4.0 * t * u).sqrt()) / (2.0 * t))
}

/// The two-coordinate picture for `2/3 < theta < 1`: the attracting period-2
/// value `r`, the repelling interior fixed point `s` of `g`, and `g'(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodTwoData {
    pub theta: Theta,
    pub r: f64,
    pub s: f64,
    pub g_prime_at_s: f64,
}

impl PeriodTwoData {
    /// `g(x) = f(x) / f(r)`.
    pub fn g(&self, x: f64) -> f64 {
        f_map(self.theta, x) / f_map(self.theta, self.r)
    }

    /// `g'(x) = r (1 - 2 theta x) / (1 - theta)`.
    pub fn g_prime(&self, x: f64) -> f64 {
        let t = self.theta.value();
        self.r * (1.0 - 2.0 * t * x) / (1.0 - t)
    }
}

pub fn period_two_data(theta: Theta) -> Result<PeriodTwoData> {
    let t = theta.value();
    if !(t > 2.0 / 3.0 && t < 1.0) {
        return Err(Error::NotApplicable(format!(
            "theta = {t} outside (2/3, 1)"
        )));
    }
    let r = fixed_point_r(theta)?;
    let s = (r + t - 1.0) / (r * t);
    let g_prime_at_s = (2.0 - r - 2.0 * t) / (1.0 - t);
    Ok(PeriodTwoData {
        theta,
        r,
        s,
        g_prime_at_s,
    })
}

fn second_iterate_parts(theta: Theta, x: f64) -> Result<(f64, f64)> {
    let t = theta.value();
    let fx = f_map(theta, x);
    if fx == 0.0 || t == 1.0 {
        return Err(Error::DegenerateInput(format!(
            "f({x}) = {fx} at theta = {t}"
        )));
    }
    let denom = 1.0 - t * (1.0 - t) / fx;
    if denom == 0.0 {
        return Err(Error::DegenerateInput(format!(
            "second-iterate denominator vanishes at x = {x}"
        )));
    }
    Ok((fx, denom))
}

/// Second iterate of the three-coordinate process `(x, y, 1) -> (F1, F2, 1)`.
pub fn second_iterate(theta: Theta, x: f64, y: f64) -> Result<(f64, f64)> {
    let t = theta.value();
    let (fx, denom) = second_iterate_parts(theta, x)?;
    let fy = f_map(theta, y);
    let f1 = fx / denom;
    let f2 = fy / (1.0 - t) * (1.0 - t * fy / fx) / denom;
    Ok((f1, f2))
}

/// `[[dF1/dx, dF1/dy], [dF2/dx, dF2/dy]]` of `second_iterate`.
pub fn second_iterate_jacobian(theta: Theta, x: f64, y: f64) -> Result<Mat> {
    let t = theta.value();
    let (fx, _) = second_iterate_parts(theta, x)?;
    let fy = f_map(theta, y);
    let k = t * (1.0 - t);
    let gap = fx - k;
    let mut j = Mat::zeros(2, 2);
    j[(0, 0)] = f_prime(theta, x) * fx * (fx - 2.0 * k) / (gap * gap);
    j[(1, 0)] = fy * f_prime(theta, x) * (t * fy - k) / ((1.0 - t) * gap * gap);
    j[(1, 1)] = f_prime(theta, y) * (fx - 2.0 * t * fy) / ((1.0 - t) * gap);
    Ok(j)
}

/// Expanded rational form of `dF1/dx`.
pub fn d_f1_dx_expanded(theta: Theta, x: f64) -> f64 {
    let t = theta.value();
    let num = (x - 3.0 * t * x * x - 2.0 * t + 2.0 * t * t + 2.0 * t * t * x.powi(3)
        + 4.0 * t * t * x
        - 4.0 * t.powi(3) * x)
        * x
        * (1.0 - t * x);
    let den = -x + t * x * x + t - t * t;
    num / (den * den)
}

/// Expanded rational form of `dF2/dy` as it is usually quoted, with a
/// `-2 x^2 theta` term where the exact derivative has `-2 x y theta`. The
/// two agree on the diagonal `x = y`, the only place it is evaluated; off
/// the diagonal use `second_iterate_jacobian`.
pub fn d_f2_dy_expanded(theta: Theta, x: f64, y: f64) -> f64 {
    let t = theta.value();
    let num = x - t * x * x - 2.0 * y * t + 6.0 * y * y * t * t - 2.0 * x * x * t
        + 2.0 * y * t * t * x * x
        - 4.0 * y.powi(3) * t.powi(3);
    let den = (-x + t * x * x + t - t * t) * (-1.0 + t);
    num / den
}

/// Transversal eigenvalue `dF2/dy (r, r)` of the diagonal period-2 point.
pub fn transversal_eigenvalue(theta: Theta) -> Result<f64> {
    let t = theta.value();
    if !(t > 2.0 / 3.0 && t < 1.0) {
        return Err(Error::NotApplicable(format!(
            "theta = {t} outside (2/3, 1)"
        )));
    }
    let r = fixed_point_r(theta)?;
    Ok(d_f2_dy_expanded(theta, r, r))
}

/// Generic bisection for a sign change of `phi` on `[lo, hi]`.
pub(crate) fn bisect<F>(mut phi: F, lo: f64, hi: f64, width: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = phi(a)?;
    let fb = phi(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketError { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= width || mid == a || mid == b {
            break;
        }
        let fm = phi(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Parameter where the transversal eigenvalue crosses -1 and the diagonal
/// period-2 point gives way to a period-4 orbit.
pub fn find_period4_threshold() -> Result<Theta> {
    let t = bisect(
        |t| Ok(transversal_eigenvalue(Theta::new(t)?)? + 1.0),
        0.80,
        0.88,
        tol::BISECTION,
    )?;
    Theta::new(t)
}

/// Logistic map `Q(x) = 4 theta x (1 - x)`.
pub fn logistic(theta: Theta, x: f64) -> f64 {
    4.0 * theta.value() * x * (1.0 - x)
}

fn logistic_critical_orbit(theta: Theta, k: usize) -> f64 {
    (0..k).fold(0.5, |x, _| logistic(theta, x))
}

const SUPERSTABLE_SCAN: usize = 10_000;

/// Smallest `theta` in (3/4, 1) whose critical point `1/2` has exact period
/// `m` under the logistic map.
pub fn logistic_superstable_theta(m: usize) -> Result<Theta> {
    if m == 1 {
        return Theta::new(0.5);
    }
    if !(2..=12).contains(&m) {
        return Err(Error::PreconditionViolated(format!(
            "period {m} outside 2..=12"
        )));
    }
    let phi = |t: f64| logistic_critical_orbit(Theta(t), m) - 0.5;
    let lo = 0.75;
    let step = 0.25 / SUPERSTABLE_SCAN as f64;
    let mut prev = phi(lo);
    for k in 1..=SUPERSTABLE_SCAN {
        let b = lo + step * k as f64;
        let a = b - step;
        let cur = phi(b);
        if prev.signum() != cur.signum() {
            let root = bisect(|t| Ok(phi(t)), a, b, 1e-15)?;
            let theta = Theta(root);
            let minimal = (1..m)
                .filter(|d| m.is_multiple_of(*d))
                .all(|d| (logistic_critical_orbit(theta, d) - 0.5).abs() > 1e-6);
            if minimal {
                return Ok(theta);
            }
        }
        prev = cur;
    }
    Err(Error::NotFound { lo, hi: 1.0 })
}

/// A periodic orbit of the Dikin process in which every coordinate runs
/// through the same cycle of values `cycle[0] -> cycle[1] -> ... -> cycle[m-1]
/// = 1 -> cycle[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedOrbit {
    pub theta: Theta,
    /// `y_1, ..., y_{m-1}, 1`
    pub cycle: Vec<f64>,
    pub points: Vec<StateVector>,
}

impl EmbeddedOrbit {
    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Builds the `m` points of the cycle in dimension `n`: coordinate `j` of
    /// point `k` is `cycle[(j + k) mod m]`.
    fn from_cycle(theta: Theta, cycle: Vec<f64>, n: usize) -> Result<Self> {
        let m = cycle.len();
        let points = (0..m)
            .map(|k| StateVector::new((0..n).map(|j| cycle[(j + k) % m]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(EmbeddedOrbit {
            theta,
            cycle,
            points,
        })
    }

    /// Largest max-norm defect of `dikin_step(points[i])` against
    /// `points[i + 1]`.
    pub fn cycle_defect(&self) -> Result<f64> {
        let m = self.points.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            let next = dikin_step(self.theta, &self.points[i])?;
            worst = worst.max(next.distance(&self.points[(i + 1) % m]));
        }
        Ok(worst)
    }

    fn verify(&self, tol: f64) -> Result<()> {
        let defect = self.cycle_defect()?;
        if defect > tol {
            return Err(Error::ClaimViolated(format!(
                "orbit does not cycle: defect {defect:e}"
            )));
        }
        let m = self.period();
        for d in (1..m).filter(|d| m.is_multiple_of(*d)) {
            if self.points[0].distance(&self.points[d]) <= tol {
                return Err(Error::ClaimViolated(format!(
                    "orbit has smaller period {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Orbit of period `m` in dimension `n` at the superstable logistic
/// parameter: the first `m` coordinates are `Q^i(1/2) / theta`.
pub fn embed_logistic_orbit(m: usize, n: usize) -> Result<EmbeddedOrbit> {
    if n < m || n < 2 {
        return Err(Error::PreconditionViolated(format!(
            "dimension {n} smaller than period {m}"
        )));
    }
    if m < 2 {
        return Err(Error::PreconditionViolated(
            "period must be at least 2".into(),
        ));
    }
    let theta = logistic_superstable_theta(m)?;
    let crit = theta.critical_point();
    // y_1 = f(1)/f(crit), y_{i+1} = f(y_i)/f(crit), closing with y_{m-1} = crit
    let mut cycle = Vec::with_capacity(m);
    let mut y = g_map(theta, crit, 1.0)?;
    for _ in 1..m - 1 {
        cycle.push(y);
        y = g_map(theta, crit, y)?;
    }
    if (y - crit).abs() > 1e-9 {
        return Err(Error::ClaimViolated(format!(
            "critical point not {m}-periodic: {y} vs {crit}"
        )));
    }
    cycle.push(crit);
    cycle.push(1.0);
    let orbit = EmbeddedOrbit::from_cycle(theta, cycle, n)?;
    orbit.verify(1e-10)?;
    Ok(orbit)
}

/// Coordinate map `(y_1, ..., y_{m-1}) -> (f(1), f(y_1), ..., f(y_{m-2})) /
/// f(y_{m-1})` of the cyclic orbit.
pub fn cyclic_map(theta: Theta, y: &[f64]) -> Vec<f64> {
    let k = y.len();
    let fp = f_map(theta, y[k - 1]);
    std::iter::once(1.0)
        .chain(y[..k - 1].iter().copied())
        .map(|v| f_map(theta, v) / fp)
        .collect()
}

/// Jacobian of `cyclic_map` at `y = (y_1, ..., y_{m-1})`.
pub fn cyclic_map_jacobian(theta: Theta, y: &[f64]) -> Mat {
    let k = y.len();
    let p = y[k - 1];
    let fp = f_map(theta, p);
    let fpp = f_prime(theta, p);
    let mut df = Mat::zeros(k, k);
    for i in 0..k {
        let prev = if i == 0 { 1.0 } else { y[i - 1] };
        if i > 0 {
            df[(i, i - 1)] += f_prime(theta, prev) / fp;
        }
        df[(i, k - 1)] -= fpp * f_map(theta, prev) / (fp * fp);
    }
    df
}

/// Jacobian of the cyclic coordinate map at an embedded orbit.
pub fn embedded_orbit_jacobian(theta: Theta, orbit: &EmbeddedOrbit) -> Mat {
    let m = orbit.period();
    cyclic_map_jacobian(theta, &orbit.cycle[..m - 1])
}

/// Structured Jacobian with sub-diagonal `d_1 .. d_{k-1}` and last column
/// `-c_1 .. -c_k` (the `c_i` are stored positive).
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionJacobian {
    sub_diagonal: Vec<f64>,
    last_column: Vec<f64>,
}

impl CompanionJacobian {
    pub fn new(sub_diagonal: Vec<f64>, last_column: Vec<f64>) -> Result<Self> {
        let k = last_column.len();
        if k == 0 || sub_diagonal.len() + 1 != k {
            return Err(Error::PreconditionViolated(format!(
                "need k last-column and k-1 sub-diagonal entries, got {} and {}",
                k,
                sub_diagonal.len()
            )));
        }
        if sub_diagonal.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::PreconditionViolated(
                "sub-diagonal must be positive".into(),
            ));
        }
        if sub_diagonal.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::PreconditionViolated(
                "sub-diagonal must be strictly decreasing".into(),
            ));
        }
        if !(last_column[0] > 0.0 && last_column[k - 1] < 1.0)
            || last_column.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::PreconditionViolated(
                "last column must increase strictly inside (0, 1)".into(),
            ));
        }
        Ok(CompanionJacobian {
            sub_diagonal,
            last_column,
        })
    }

    /// Matrix size.
    pub fn size(&self) -> usize {
        self.last_column.len()
    }

    pub fn sub_diagonal(&self) -> &[f64] {
        &self.sub_diagonal
    }

    pub fn last_column(&self) -> &[f64] {
        &self.last_column
    }

    pub fn to_matrix(&self) -> Mat {
        let k = self.size();
        let mut a = Mat::zeros(k, k);
        for (i, &d) in self.sub_diagonal.iter().enumerate() {
            a[(i + 1, i)] = d;
        }
        for (i, &c) in self.last_column.iter().enumerate() {
            a[(i, k - 1)] = -c;
        }
        a
    }

    /// Ratios `c_i d_i / c_{i+1}`; all below 1 is the contraction condition.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.sub_diagonal
            .iter()
            .enumerate()
            .map(|(i, d)| self.last_column[i] * d / self.last_column[i + 1])
            .collect()
    }

    /// `det(lambda I - A)` by expansion along the first row:
    /// `p_k = lambda p_{k-1} + c_1 d_1 ... d_{k-1}`, where `p_{k-1}` belongs
    /// to the trailing minor.
    pub fn characteristic_polynomial(&self) -> Poly {
        let k = self.size();
        let c = &self.last_column;
        let d = &self.sub_diagonal;
        let mut coeffs = vec![c[k - 1], 1.0];
        let mut prod = 1.0;
        for j in (0..k - 1).rev() {
            prod *= d[j];
            coeffs.insert(0, c[j] * prod);
        }
        Poly::new(coeffs).expect("leading coefficient is 1")
    }
}

/// Characteristic polynomial of `cj` and its Enestrom-Kakeya outer radius,
/// after checking the coefficients decrease strictly from `a_k = 1`.
pub fn certify_contraction(cj: &CompanionJacobian) -> Result<(Poly, f64)> {
    if let Some((i, r)) = cj
        .contraction_ratios()
        .into_iter()
        .enumerate()
        .find(|(_, r)| !(*r < 1.0))
    {
        return Err(Error::PreconditionViolated(format!(
            "c_{0} d_{0} / c_{1} = {r} is not below 1",
            i + 1,
            i + 2
        )));
    }
    let poly = cj.characteristic_polynomial();
    let a = poly.coeffs();
    if a[0] <= 0.0 || a.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::ClaimViolated(format!(
            "coefficients not strictly decreasing: {a:?}"
        )));
    }
    let (_, beta) = enestrom_kakeya_bounds(&poly)?;
    if beta >= 1.0 {
        return Err(Error::ClaimViolated(format!("beta = {beta} >= 1")));
    }
    Ok((poly, beta))
}

/// `g^{n-1}(1/theta - 1)` with the pivot at the critical point; the cyclic
/// period-`n` orbit is guaranteed once this is at most `1/(2 theta)`.
pub fn near_one_condition(theta: Theta, n: usize) -> Result<(f64, f64)> {
    let crit = theta.critical_point();
    let v = g_iterate(theta, crit, 1.0 / theta.value() - 1.0, n - 1)?;
    Ok((v, crit))
}

/// Period-`n` orbit `y_1 < ... < y_{n-1} <= 1/(2 theta)`, `y_n = 1` in
/// dimension `n` for `theta` near 1, with its structured Jacobian.
pub fn near_one_periodic_orbit(
    theta: Theta,
    n: usize,
) -> Result<(EmbeddedOrbit, CompanionJacobian)> {
    let t = theta.value();
    if n < 2 {
        return Err(Error::PreconditionViolated("dimension must be >= 2".into()));
    }
    if !(t > 0.5 && t < 1.0) {
        return Err(Error::NotApplicable(format!("theta = {t} outside (1/2, 1)")));
    }
    let (value, crit) = near_one_condition(theta, n)?;
    if value > crit {
        return Err(Error::NotApplicable(format!(
            "g^{}(1/theta - 1) = {value} exceeds 1/(2 theta) = {crit}",
            n - 1
        )));
    }
    let x0 = 1.0 / t - 1.0;
    let phi = |p: f64| Ok(g_iterate(theta, p, x0, n - 1)? - p);

    let mut lo = 0.5 * crit;
    while phi(lo)? <= 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::NotApplicable("no pivot bracket found".into()));
        }
    }
    let pivot = if value == crit {
        crit
    } else {
        bisect(phi, lo, crit, 0.0)?
    };

    let mut cycle = Vec::with_capacity(n);
    let mut y = g_map(theta, pivot, 1.0)?;
    for _ in 1..n - 1 {
        cycle.push(y);
        y = g_map(theta, pivot, y)?;
    }
    cycle.push(pivot);
    let ys = cycle.clone();
    cycle.push(1.0);

    if ys[0] < x0 - 1e-12 || ys.windows(2).any(|w| !(w[0] < w[1])) || pivot > crit {
        return Err(Error::NotApplicable(format!(
            "orbit values {ys:?} are not increasing inside [1/theta - 1, 1/(2 theta)]"
        )));
    }

    let orbit = EmbeddedOrbit::from_cycle(theta, cycle, n)?;
    orbit.verify(1e-10)?;

    let fp = f_map(theta, pivot);
    let sub_diagonal = ys[..n - 2].iter().map(|&v| f_prime(theta, v) / fp).collect();
    let last_column = std::iter::once(1.0)
        .chain(ys[..n - 2].iter().copied())
        .map(|v| f_prime(theta, pivot) * f_map(theta, v) / (fp * fp))
        .collect();
    let cj = CompanionJacobian::new(sub_diagonal, last_column)?;
    Ok((orbit, cj))
}

/// `h` restricted to `[1/theta - 1, 1)`: used by tests and reports to show
/// `r` is its fixed point.
pub fn h_residual_at_r(theta: Theta) -> Result<f64> {
    let r = fixed_point_r(theta)?;
    Ok(h_map(theta, r)? - r)
}
