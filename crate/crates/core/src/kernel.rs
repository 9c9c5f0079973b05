//! The spread-out step distribution `D(x) = 1{0 < |x|_inf <= L} / Omega`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Arguments closer to zero than this use the analytic limit of the Dirichlet ratio.
const DIRICHLET_EPS: f64 = 1e-12;

/// Uniform distribution on the nonzero points of the cube `[-L, L]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepKernel {
    d: usize,
    range: u32,
    omega: u64,
    sigma2: f64,
}

impl StepKernel {
    pub fn new(d: usize, range: u32) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if range == 0 {
            return invalid("spread-out range L must be at least 1");
        }
        let side = 2 * range as u64 + 1;
        let omega = side
            .checked_pow(d as u32)
            .map(|v| v - 1)
            .ok_or_else(|| crate::Error::Overflow(format!("(2L+1)^d for d={d}, L={range}")))?;
        // Sum of |x|^2 over the cube splits per coordinate: d * (2L+1)^(d-1) * sum_j j^2.
        let l = range as f64;
        let per_axis = l * (l + 1.0) * (2.0 * l + 1.0) / 3.0;
        let sigma2 = d as f64 * (side as f64).powi(d as i32 - 1) * per_axis / omega as f64;
        Ok(Self { d, range, omega, sigma2 })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Spread-out range `L`.
    pub fn range(&self) -> u32 {
        self.range
    }

    /// Degree `Omega = (2L+1)^d - 1`.
    pub fn omega(&self) -> u64 {
        self.omega
    }

    /// Variance `sum_x |x|^2 D(x)`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `D(x)`.
    pub fn weight(&self, x: &[i64]) -> f64 {
        if self.in_support(x) {
            1.0 / self.omega as f64
        } else {
            0.0
        }
    }

    pub fn in_support(&self, x: &[i64]) -> bool {
        let l = self.range as i64;
        let mut nonzero = false;
        for &c in x {
            if c.abs() > l {
                return false;
            }
            nonzero |= c != 0;
        }
        nonzero
    }

    /// Support points in lexicographic order.
    pub fn support(&self) -> Vec<Vec<i64>> {
        let l = self.range as i64;
        cube_points(self.d, l)
            .into_iter()
            .filter(|x| x.iter().any(|&c| c != 0))
            .collect()
    }

    /// One coordinate factor of the Fourier transform, `sum_{|j| <= L} e^{ijk}`.
    pub fn dirichlet(&self, k: f64) -> f64 {
        dirichlet(self.range, k)
    }

    /// `D^(k) = sum_x D(x) e^{ik.x}` by the product formula.
    pub fn d_hat(&self, k: &[f64]) -> f64 {
        debug_assert_eq!(k.len(), self.d);
        let prod: f64 = k.iter().map(|&kj| self.dirichlet(kj)).product();
        (prod - 1.0) / self.omega as f64
    }

    /// `sum_x D(x) e^{m x_1}`, the tilted mass of `D`.
    pub fn tilted_mass_sum(&self, m: f64) -> f64 {
        let side = (2 * self.range + 1) as f64;
        let axis = sinh_ratio(self.range, m);
        (side.powi(self.d as i32 - 1) * axis - 1.0) / self.omega as f64
    }

    /// Minimum over a uniform `grid_size^d` grid of `(-pi, pi]^d` minus the origin of
    /// `(1 - D^(k)) / min(L^2 |k|^2, 1)`.
    pub fn infrared_margin(&self, grid_size: usize) -> Result<f64> {
        if grid_size < 4 {
            return invalid("infrared grid must have at least 4 points per axis");
        }
        let axis: Vec<f64> = (0..grid_size)
            .map(|j| {
                let k = 2.0 * std::f64::consts::PI * j as f64 / grid_size as f64;
                if k > std::f64::consts::PI {
                    k - 2.0 * std::f64::consts::PI
                } else {
                    k
                }
            })
            .collect();
        let dir: Vec<f64> = axis.iter().map(|&k| self.dirichlet(k)).collect();
        let l2 = (self.range as f64).powi(2);
        let total = grid_size.pow(self.d as u32);
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; self.d];
        for flat in 0..total {
            if flat > 0 {
                let mut k2 = 0.0;
                let mut prod = 1.0;
                for &i in &idx {
                    k2 += axis[i] * axis[i];
                    prod *= dir[i];
                }
                let gap = 1.0 - (prod - 1.0) / self.omega as f64;
                best = best.min(gap / (l2 * k2).min(1.0));
            }
            increment(&mut idx, grid_size);
        }
        Ok(best)
    }
}

/// `sum_{|j| <= L} e^{ijk} = sin((2L+1)k/2) / sin(k/2)`.
pub(crate) fn dirichlet(range: u32, k: f64) -> f64 {
    let side = (2 * range + 1) as f64;
    let half = 0.5 * k;
    if half.abs() < DIRICHLET_EPS {
        return side;
    }
    (side * half).sin() / half.sin()
}

/// `sum_{|j| <= L} e^{mj} = sinh((L+1/2) m) / sinh(m/2)`.
pub(crate) fn sinh_ratio(range: u32, m: f64) -> f64 {
    let side = (2 * range + 1) as f64;
    if m.abs() < DIRICHLET_EPS {
        return side;
    }
    if m.abs() < 1.0 {
        // Direct summation avoids cancellation in the ratio for small tilts.
        let l = range as i32;
        return (-l..=l).map(|j| (m * j as f64).exp()).sum();
    }
    (0.5 * side * m).sinh() / (0.5 * m).sinh()
}

/// All points of `[-l, l]^d` in lexicographic order.
pub(crate) fn cube_points(d: usize, l: i64) -> Vec<Vec<i64>> {
    let side = (2 * l + 1) as usize;
    let mut idx = vec![0usize; d];
    let mut out = Vec::with_capacity(side.pow(d as u32));
    for _ in 0..side.pow(d as u32) {
        out.push(idx.iter().map(|&i| i as i64 - l).collect());
        increment(&mut idx, side);
    }
    out
}

/// Odometer increment of a row-major multi-index (last coordinate fastest).
pub(crate) fn increment(idx: &mut [usize], side: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < side {
            return;
        }
        *slot = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_d_hat(kernel: &StepKernel, k: &[f64]) -> f64 {
        kernel
            .support()
            .iter()
            .map(|x| {
                let phase: f64 = x.iter().zip(k).map(|(&a, &b)| a as f64 * b).sum();
                phase.cos() / kernel.omega() as f64
            })
            .sum()
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(StepKernel::new(0, 1).is_err());
        assert!(StepKernel::new(2, 0).is_err());
    }

    #[test]
    fn degree_and_variance() {
        assert_eq!(StepKernel::new(2, 1).unwrap().omega(), 8);
        assert_eq!(StepKernel::new(1, 1).unwrap().sigma2(), 1.0);
        assert_relative_eq!(StepKernel::new(1, 2).unwrap().sigma2(), 2.5, epsilon = 1e-15);
        for (d, l) in [(1, 3), (2, 2), (3, 1), (3, 3), (4, 2)] {
            let k = StepKernel::new(d, l).unwrap();
            let direct: f64 = k
                .support()
                .iter()
                .map(|x| x.iter().map(|&c| (c * c) as f64).sum::<f64>() * k.weight(x))
                .sum();
            assert_relative_eq!(k.sigma2(), direct, max_relative = 1e-14);
            let total: f64 = k.support().iter().map(|x| k.weight(x)).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-14);
            assert_eq!(k.support().len() as u64, k.omega());
        }
    }

    #[test]
    fn fourier_transform_values() {
        let k1 = StepKernel::new(1, 1).unwrap();
        assert_eq!(k1.d_hat(&[0.0]), 1.0);
        assert_relative_eq!(k1.d_hat(&[std::f64::consts::PI]), -1.0, epsilon = 1e-15);
        let k2 = StepKernel::new(2, 1).unwrap();
        for k in [[0.3, -1.1], [2.9, 0.01], [1e-13, 0.7], [-3.0, 3.1]] {
            assert_relative_eq!(k2.d_hat(&k), brute_d_hat(&k2, &k), epsilon = 1e-12);
        }
    }

    #[test]
    fn tilted_mass_matches_direct_sum() {
        let k1 = StepKernel::new(1, 1).unwrap();
        assert_eq!(k1.tilted_mass_sum(0.0), 1.0);
        for m in [0.1, 0.7, 2.5] {
            assert_relative_eq!(k1.tilted_mass_sum(m), m.cosh(), max_relative = 1e-14);
        }
        for (d, l) in [(2, 1), (3, 2)] {
            let k = StepKernel::new(d, l).unwrap();
            for m in [0.3, 1.7] {
                let direct: f64 = k.support().iter().map(|x| k.weight(x) * (m * x[0] as f64).exp()).sum();
                assert_relative_eq!(k.tilted_mass_sum(m), direct, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn infrared_margin_is_positive() {
        let k1 = StepKernel::new(1, 1).unwrap();
        let margin = k1.infrared_margin(64).unwrap();
        let brute = (1..64)
            .map(|j| {
                let mut k = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
                if k > std::f64::consts::PI {
                    k -= 2.0 * std::f64::consts::PI;
                }
                (1.0 - k.cos()) / (k * k).min(1.0)
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(margin, brute, max_relative = 1e-12);
        assert!(margin > 0.4 && margin < 0.5);
        assert!(StepKernel::new(2, 1).unwrap().infrared_margin(32).unwrap() > 0.0);
        assert!(StepKernel::new(3, 3).unwrap().infrared_margin(16).unwrap() > 0.0);
        assert!(k1.infrared_margin(3).is_err());
    }

    #[test]
    fn small_k_ratio_near_one_half() {
        let k1 = StepKernel::new(1, 1).unwrap();
        let k = 1e-3;
        assert_relative_eq!((1.0 - k1.d_hat(&[k])) / (k * k), 0.5, max_relative = 1e-6);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn d_hat_bounded_and_even(d in 1usize..4, l in 1u32..4, k in prop::collection::vec(-std::f64::consts::PI..std::f64::consts::PI, 3)) {
                let kernel = StepKernel::new(d, l).unwrap();
                let k = &k[..d];
                let neg: Vec<f64> = k.iter().map(|v| -v).collect();
                let v = kernel.d_hat(k);
                prop_assert!(v.abs() <= 1.0 + 1e-12);
                prop_assert!((v - kernel.d_hat(&neg)).abs() < 1e-12);
            }

            #[test]
            fn tilted_mass_convex_increasing(d in 1usize..4, l in 1u32..4, m in 0.0f64..3.0, h in 0.01f64..0.5) {
                let kernel = StepKernel::new(d, l).unwrap();
                let a = kernel.tilted_mass_sum(m);
                let b = kernel.tilted_mass_sum(m + h);
                let c = kernel.tilted_mass_sum(m + 2.0 * h);
                prop_assert!(a >= 1.0 - 1e-15);
                prop_assert!(b > a);
                prop_assert!(a + c - 2.0 * b >= -1e-12 * c);
            }
        }
    }
}
