//! Small dense linear algebra and polynomial utilities.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; the coordinatewise
//! operations (`xs`, `x/s`, `v^k`, `sqrt(x)`) are exposed as free functions.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Binary coordinatewise operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Product,
    Quotient,
}

/// Coordinatewise product or quotient of two vectors of equal length.
pub fn elementwise(op: BinaryOp, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_len(u, v)?;
    u.iter()
        .zip(v)
        .enumerate()
        .map(|(i, (&a, &b))| match op {
            BinaryOp::Product => Ok(a * b),
            BinaryOp::Quotient if b == 0.0 => Err(Error::ZeroDivisor(i)),
            BinaryOp::Quotient => Ok(a / b),
        })
        .collect()
}

pub fn sqrt(u: &[f64]) -> Result<Vec<f64>> {
    u.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value < 0.0 {
                Err(Error::NegativeSqrt { index, value })
            } else {
                Ok(value.sqrt())
            }
        })
        .collect()
}

pub fn powi(u: &[f64], k: i32) -> Vec<f64> {
    u.iter().map(|x| x.powi(k)).collect()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Euclidean norm, scaled by the largest magnitude so tiny entries do not
/// underflow when squared.
pub fn norm2(u: &[f64]) -> f64 {
    let scale = norm_inf(u);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * u.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn norm_inf(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}

pub fn sub(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

fn check_len(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::PreconditionViolated("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::LengthMismatch {
                    left: c,
                    right: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::PreconditionViolated(format!(
                    "non-finite matrix entry {bad}"
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self * v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self^T * v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Mat {
        assert_eq!(self.rows, self.cols, "pow of non-square matrix");
        (0..k).fold(Mat::identity(self.rows), |acc, _| acc.matmul(self))
    }

    /// `A * diag(w) * A^T` for an m x n matrix `A`.
    pub fn weighted_gram(&self, weights: &[f64]) -> Mat {
        debug_assert_eq!(weights.len(), self.cols);
        let m = self.rows;
        let mut out = Mat::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v: f64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .zip(weights)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Fails with `IllConditioned` when a pivot drops below `SPD_PIVOT` times the
/// largest diagonal entry.
pub fn cholesky(m: &Mat) -> Result<Mat> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::PreconditionViolated("matrix not square".into()));
    }
    let scale = (0..n).fold(0.0_f64, |s, i| s.max(m[(i, i)].abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::IllConditioned { row: 0, pivot: 0.0 });
    }
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol::SPD_PIVOT * scale) {
            return Err(Error::IllConditioned { row: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &Mat, rhs: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut z = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[(i, k)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[(k, i)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    z
}

/// Solves `M z = rhs` for symmetric positive definite `M` via Cholesky,
/// followed by one pass of residual correction.
pub fn solve_spd(m: &Mat, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.rows() {
        return Err(Error::LengthMismatch {
            left: m.rows(),
            right: rhs.len(),
        });
    }
    let l = cholesky(m)?;
    let mut z = cholesky_solve(&l, rhs);
    let resid = sub(rhs, &m.mul_vec(&z));
    let corr = cholesky_solve(&l, &resid);
    for (zi, ci) in z.iter_mut().zip(&corr) {
        *zi += ci;
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::IllConditioned {
            row: 0,
            pivot: f64::NAN,
        });
    }
    Ok(z)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &Mat) -> f64 {
    assert_eq!(m.rows(), m.cols(), "determinant of non-square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut det = 1.0;
    for j in 0..n {
        let p = (j..n)
            .max_by(|&x, &y| a[(x, j)].abs().total_cmp(&a[(y, j)].abs()))
            .unwrap();
        if a[(p, j)] == 0.0 {
            return 0.0;
        }
        if p != j {
            for k in 0..n {
                let t = a[(j, k)];
                a[(j, k)] = a[(p, k)];
                a[(p, k)] = t;
            }
            det = -det;
        }
        let piv = a[(j, j)];
        det *= piv;
        for i in j + 1..n {
            let factor = a[(i, j)] / piv;
            for k in j..n {
                let v = a[(j, k)];
                a[(i, k)] -= factor * v;
            }
        }
    }
    det
}

/// Real polynomial `a_0 + a_1 x + ... + a_m x^m` with `a_m != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Coefficients in ascending order of degree.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.last() {
            None => Err(Error::PreconditionViolated("empty polynomial".into())),
            Some(&0.0) => Err(Error::PreconditionViolated(
                "leading coefficient is zero".into(),
            )),
            Some(_) if coeffs.iter().any(|a| !a.is_finite()) => Err(
                Error::PreconditionViolated("non-finite coefficient".into()),
            ),
            Some(_) => Ok(Poly { coeffs }),
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    }
}

/// Angular offset of the initial guesses, in radians.
const ROOT_ANGLE_OFFSET: f64 = 0.4;

/// All complex roots by Durand-Kerner (Weierstrass) simultaneous iteration.
///
/// Seeds lie on a circle: at radius `(alpha + beta) / 2` from the
/// Enestrom-Kakeya annulus when every coefficient is positive, otherwise at
/// the Fujiwara-style bound `max |a_k / a_m|^(1 / (m - k))`.
pub fn poly_roots(p: &Poly) -> Result<Vec<Complex64>> {
    let m = p.degree();
    if m == 0 {
        return Err(Error::PreconditionViolated("degree must be >= 1".into()));
    }
    let a = p.coeffs();
    let lead = a[m];
    let monic: Vec<f64> = a.iter().map(|c| c / lead).collect();
    let eval_monic = |z: Complex64| {
        monic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };

    let radius = match enestrom_kakeya_bounds(p) {
        Ok((lo, hi)) => 0.5 * (lo + hi),
        Err(_) => {
            let bound = (0..m)
                .map(|k| monic[k].abs().powf(1.0 / (m - k) as f64))
                .fold(0.0, f64::max);
            if bound > 0.0 {
                bound
            } else {
                1.0
            }
        }
    };
    let mut z: Vec<Complex64> = (0..m)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / m as f64 + ROOT_ANGLE_OFFSET;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..tol::ROOT_MAX_ITERS {
        let mut max_step: f64 = 0.0;
        for k in 0..m {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..m {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(f64::EPSILON, f64::EPSILON);
            }
            let step = eval_monic(z[k]) / denom;
            z[k] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
        }
        if max_step <= 4.0 * f64::EPSILON {
            break;
        }
    }

    // residual against the size of the terms summed, floored at the
    // coefficient scale so that roots at zero are judged absolutely
    let scale = norm_inf(a);
    let magnitude = |r: Complex64| {
        let m = r.norm();
        a.iter().rev().fold(0.0, |acc, c| acc * m + c.abs()).max(scale)
    };
    if z
        .iter()
        .all(|&r| r.is_finite() && p.eval_complex(r).norm() <= tol::ROOT_RESIDUAL * magnitude(r))
    {
        Ok(z)
    } else {
        Err(Error::NoConvergence(tol::ROOT_MAX_ITERS))
    }
}

/// Enestrom-Kakeya annulus `(alpha, beta)` for a polynomial with strictly
/// positive coefficients.
pub fn enestrom_kakeya_bounds(p: &Poly) -> Result<(f64, f64)> {
    let a = p.coeffs();
    if a.len() < 2 {
        return Err(Error::PreconditionViolated("degree must be >= 1".into()));
    }
    if let Some(k) = a.iter().position(|&c| c <= 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "coefficient a_{k} = {} is not positive",
            a[k]
        )));
    }
    let ratios = a.windows(2).map(|w| w[0] / w[1]);
    Ok(ratios.fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| {
        (lo.min(r), hi.max(r))
    }))
}
