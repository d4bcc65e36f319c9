//! The Dikin process `w -> f(w) / max f(w)` with `f(x) = x (1 - theta x)`,
//! and the scalar maps derived from it.

use rand::Rng;

use crate::error::{Error, Result};

/// Scaled step size, the fraction of the maximal step `alpha_max`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Theta(pub(crate) f64);

impl Theta {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Theta(value))
        } else {
            Err(Error::InvalidTheta(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Critical point `1 / (2 theta)` of `f`.
    ///
    /// Always computed as `0.5 / theta`; `f_prime` uses the same expression
    /// so it vanishes exactly here.
    pub fn critical_point(self) -> f64 {
        0.5 / self.0
    }
}

impl TryFrom<f64> for Theta {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Theta::new(v)
    }
}

/// Point of the projective simplex: positive coordinates, maximum exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub(crate) Vec<f64>);

impl StateVector {
    /// Accepts a vector that already satisfies the invariants.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::InvalidState(format!(
                "dimension {} < 2",
                w.len()
            )));
        }
        if let Some(i) = w.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidState(format!(
                "coordinate {i} = {} is not positive",
                w[i]
            )));
        }
        if crate::linalg::max(&w) != 1.0 {
            return Err(Error::InvalidState("maximum coordinate is not 1".into()));
        }
        Ok(StateVector(w))
    }

    /// Rescales a positive vector so its largest coordinate is exactly 1.
    pub fn normalized(mut raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::InvalidState(format!(
                "dimension {} < 2",
                raw.len()
            )));
        }
        if let Some(i) = raw.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidState(format!(
                "coordinate {i} = {} is not positive",
                raw[i]
            )));
        }
        let m = crate::linalg::max(&raw);
        for x in raw.iter_mut() {
            *x = if *x == m { 1.0 } else { (*x / m).min(1.0) };
        }
        Ok(StateVector(raw))
    }

    /// All-ones vector `e`.
    pub fn ones(n: usize) -> Result<Self> {
        StateVector::new(vec![1.0; n])
    }

    /// Coordinates uniform on (0, 1), then normalized.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let raw = (0..n)
            .map(|_| loop {
                let u: f64 = rng.gen();
                if u > 0.0 {
                    break u;
                }
            })
            .collect();
        StateVector::normalized(raw)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        crate::linalg::min(&self.0)
    }

    /// Coordinates in ascending order.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Max-norm distance to another state of the same dimension.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `f(x) = x (1 - theta x)`.
pub fn f_map(theta: Theta, x: f64) -> f64 {
    x * (1.0 - theta.0 * x)
}

/// `f'(x) = 1 - 2 theta x`, written as `2 theta (1/(2 theta) - x)` so that it
/// is exactly zero at `theta.critical_point()`.
pub fn f_prime(theta: Theta, x: f64) -> f64 {
    2.0 * theta.0 * (theta.critical_point() - x)
}

/// One step of the Dikin process.
pub fn dikin_step(theta: Theta, w: &StateVector) -> Result<StateVector> {
    apply_and_normalize(theta, &w.0)
}

/// `f(u) / max f(u)` for any coordinate vector `u`, normalized or not.
pub fn apply_and_normalize(theta: Theta, u: &[f64]) -> Result<StateVector> {
    if u.len() < 2 {
        return Err(Error::InvalidState(format!("dimension {} < 2", u.len())));
    }
    let mut next = u.to_vec();
    step_in_place(theta, &mut next)?;
    Ok(StateVector(next))
}

/// Allocation-free Dikin step on raw coordinates.
pub(crate) fn step_in_place(theta: Theta, w: &mut [f64]) -> Result<()> {
    let mut m = f64::NEG_INFINITY;
    for (i, x) in w.iter_mut().enumerate() {
        *x = f_map(theta, *x);
        if *x <= 0.0 || x.is_nan() {
            return Err(Error::DegenerateStep(i));
        }
        m = m.max(*x);
    }
    for v in w.iter_mut() {
        *v = if *v == m { 1.0 } else { *v / m };
    }
    Ok(())
}

/// Iterates `dikin_step` `k` times.
pub fn dikin_iterate(theta: Theta, w: &StateVector, k: usize) -> Result<StateVector> {
    let mut cur = w.0.clone();
    for _ in 0..k {
        step_in_place(theta, &mut cur)?;
    }
    Ok(StateVector(cur))
}

/// Minimum coordinate after one step when every coordinate lies at or above
/// the critical point: `h(x) = (1 - theta) / (x (1 - theta x))`.
pub fn h_map(theta: Theta, x: f64) -> Result<f64> {
    let fx = f_map(theta, x);
    if fx == 0.0 {
        return Err(Error::DegenerateInput(format!("f({x}) = 0")));
    }
    Ok((1.0 - theta.0) / fx)
}

/// `g(x) = f(x) / f(pivot)`, one coordinate of the process once the
/// normalizing coordinate is pinned at `pivot`.
pub fn g_map(theta: Theta, pivot: f64, x: f64) -> Result<f64> {
    let fp = f_map(theta, pivot);
    if !(fp > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "f(pivot) = {fp} is not positive"
        )));
    }
    Ok(f_map(theta, x) / fp)
}

/// Iterates `g` with a fixed pivot `k` times.
pub fn g_iterate(theta: Theta, pivot: f64, x: f64, k: usize) -> Result<f64> {
    (0..k).try_fold(x, |acc, _| g_map(theta, pivot, acc))
}

/// Reflection `x -> 1/theta - x` about the critical point; `f` is invariant.
pub fn reflect(theta: Theta, x: f64) -> f64 {
    1.0 / theta.0 - x
}

/// Absorbing coordinate interval `[1/theta - 1, 1]` for `theta > 1/2`.
pub fn trap_interval(theta: Theta) -> Result<(f64, f64)> {
    if theta.0 <= 0.5 {
        return Err(Error::NotApplicable(format!(
            "theta = {} <= 1/2: the orbit increases monotonically to e",
            theta.0
        )));
    }
    Ok((1.0 / theta.0 - 1.0, 1.0))
}

/// The cubic `theta x^3 - x^2 + 1 - theta`, nonnegative on [0, 1] exactly
/// when `h(x) >= x` there.
pub fn convergence_cubic(theta: Theta, x: f64) -> f64 {
    let t = theta.0;
    t * x * x * x - x * x + 1.0 - t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn th(v: f64) -> Theta {
        Theta::new(v).unwrap()
    }

    #[test]
    fn theta_range() {
        assert!(Theta::new(-0.1).is_err());
        assert!(Theta::new(1.1).is_err());
        assert!(Theta::new(f64::NAN).is_err());
        assert!(Theta::new(1.0).is_ok());
    }

    #[test]
    fn f_examples() {
        let t = th(0.95);
        assert!((f_map(t, 1.0 / 0.95 - 1.0) - 0.05).abs() < 1e-15);
        assert_eq!(f_map(t, 0.0), 0.0);
        let t = th(0.8);
        assert!((f_map(t, t.critical_point()) - 0.3125).abs() < 1e-15);
        assert_eq!(f_prime(t, t.critical_point()), 0.0);
    }

    #[test]
    fn step_examples() {
        let e = StateVector::ones(4).unwrap();
        assert_eq!(dikin_step(th(0.9), &e).unwrap(), e);

        let w = StateVector::new(vec![0.9, 1.0]).unwrap();
        let out = dikin_step(th(0.7), &w).unwrap();
        assert_eq!(out.as_slice()[0], 1.0);
        assert!((out.as_slice()[1] - 0.3 / 0.333).abs() < 1e-14);

        let t = th(0.95);
        let out = apply_and_normalize(t, &[1.0 / 0.95 - 1.0, t.critical_point()]).unwrap();
        assert!((out.as_slice()[0] - 0.19).abs() < 1e-12);
        assert_eq!(out.as_slice()[1], 1.0);
    }

    #[test]
    fn theta_one_annihilates_maximum() {
        let w = StateVector::new(vec![0.5, 1.0]).unwrap();
        assert_eq!(dikin_step(th(1.0), &w), Err(Error::DegenerateStep(1)));
    }

    #[test]
    fn state_vector_invariants() {
        assert!(StateVector::new(vec![1.0]).is_err());
        assert!(StateVector::new(vec![0.0, 1.0]).is_err());
        assert!(StateVector::new(vec![0.5, 0.9]).is_err());
        let w = StateVector::normalized(vec![3.0, 1.5, 0.75]).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.5, 0.25]);
    }

    #[test]
    fn h_examples() {
        assert!((h_map(th(0.3), 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((h_map(th(0.5), 0.8).unwrap() - 0.5 / (0.8 * 0.6)).abs() < 1e-15);
        assert!(h_map(th(0.5), 0.0).is_err());
    }

    #[test]
    fn g_examples() {
        let t = th(0.95);
        let p = t.critical_point();
        let g2 = g_iterate(t, p, 1.0 / 0.95 - 1.0, 2).unwrap();
        assert!((g2 - 0.5917).abs() < 5e-4);
        assert_eq!(g_map(t, 0.3, 0.3).unwrap(), 1.0);
        assert!(g_map(t, 0.0, 0.3).is_err());
    }

    #[test]
    fn reflect_and_trap() {
        let t = th(0.8);
        assert!((reflect(t, 0.25) - 1.0).abs() < 1e-15);
        assert!((reflect(t, t.critical_point()) - t.critical_point()).abs() < 1e-15);
        let (lo, hi) = trap_interval(th(2.0 / 3.0)).unwrap();
        assert!((lo - 0.5).abs() < 1e-15 && hi == 1.0);
        assert_eq!(trap_interval(th(1.0)).unwrap(), (0.0, 1.0));
        let (lo, _) = trap_interval(th(0.95)).unwrap();
        assert!((lo - 0.0526316).abs() < 1e-7);
        assert!(trap_interval(th(0.5)).is_err());
    }

    #[test]
    fn monotone_convergence_below_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &t in &[0.1, 0.3, 0.5] {
            let t = th(t);
            let mut w = StateVector::random(4, &mut rng).unwrap();
            let mut converged = false;
            for _ in 0..100_000 {
                let next = dikin_step(t, &w).unwrap();
                for (a, b) in w.as_slice().iter().zip(next.as_slice()) {
                    assert!(b >= a, "coordinate decreased at theta {t:?}");
                }
                w = next;
                if w.min() >= 1.0 - 1e-9 {
                    converged = true;
                    break;
                }
            }
            assert!(converged);
        }
    }

    #[test]
    fn absorption_into_trap_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &t in &[0.55, 0.7, 0.85, 0.95, 0.99] {
            let t = th(t);
            let (lo, _) = trap_interval(t).unwrap();
            for _ in 0..20 {
                let mut w = StateVector::random(5, &mut rng).unwrap();
                let mut entered = None;
                for k in 0..10_000 {
                    if w.min() >= lo - 1e-9 {
                        entered.get_or_insert(k);
                    } else {
                        assert!(entered.is_none(), "left the trap interval");
                    }
                    w = dikin_step(t, &w).unwrap();
                }
                assert!(entered.is_some());
            }
        }
    }

    #[test]
    fn cubic_nonnegative_up_to_two_thirds() {
        for k in 0..=40 {
            let t = th(0.5 + (2.0 / 3.0 - 0.5) * k as f64 / 40.0);
            for i in 0..=10_000 {
                let x = i as f64 / 10_000.0;
                assert!(convergence_cubic(t, x) >= -1e-15, "theta {t:?} x {x}");
                let lhs = h_map(t, x.max(1e-12));
                if let Ok(h) = lhs {
                    if x > 0.0 {
                        assert!(h >= x - 1e-12);
                    }
                }
            }
        }
        // fails just above 2/3
        assert!(convergence_cubic(th(0.7), 0.95) < 0.0);
    }

    proptest! {
        #[test]
        fn projective_invariance(
            w in prop::collection::vec(0.01f64..1.0, 2..8),
            lambda in 0.01f64..100.0,
            t in 0.0f64..0.999,
        ) {
            let raw_update = |u: &[f64]| -> Vec<f64> {
                let m = crate::linalg::max(u);
                u.iter().map(|&x| x * (1.0 - t * x / m)).collect()
            };
            let scaled: Vec<f64> = w.iter().map(|x| x * lambda).collect();
            let a = StateVector::normalized(raw_update(&w)).unwrap();
            let b = StateVector::normalized(raw_update(&scaled)).unwrap();
            prop_assert!(a.distance(&b) <= 1e-12);
        }

        #[test]
        fn point_symmetry(t in 0.5f64..1.0, z in -1.0f64..1.0) {
            let t = th(t);
            let c = t.critical_point();
            prop_assert!((f_map(t, c + z) - f_map(t, c - z)).abs() <= 1e-14);
            prop_assert!((f_map(t, reflect(t, z)) - f_map(t, z)).abs() <= 1e-14);
        }

        #[test]
        fn e_is_fixed(n in 2usize..10, t in 0.0f64..0.999) {
            let e = StateVector::ones(n).unwrap();
            prop_assert_eq!(dikin_step(th(t), &e).unwrap(), e);
        }

        #[test]
        fn step_preserves_invariants(
            w in prop::collection::vec(0.001f64..1.0, 2..8),
            t in 0.0f64..0.999,
        ) {
            let w = StateVector::normalized(w).unwrap();
            let next = dikin_step(th(t), &w).unwrap();
            prop_assert!(StateVector::new(next.into_inner()).is_ok());
        }
    }
}
