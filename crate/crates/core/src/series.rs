//! Truncated power series in the normalised activity `p / Omega`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, pow};

/// Pointwise weight applied before summing over lattice points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    None,
    /// `|x|^a` with the Euclidean norm.
    Power { a: u32 },
    /// `e^{m x_1}`.
    Tilt { m: f64 },
}

/// `sum_n c_n (p / Omega)^n` with exact integer coefficients, `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolymerSeries {
    pub omega: u64,
    pub weight: WeightSpec,
    #[serde(with = "rational::vec_as_string")]
    pub coeffs: Vec<BigInt>,
}

impl PolymerSeries {
    pub fn new(omega: u64, coeffs: Vec<BigInt>) -> Self {
        Self { omega, weight: WeightSpec::None, coeffs }
    }

    pub fn zero(omega: u64, n_max: usize) -> Self {
        Self::new(omega, vec![BigInt::zero(); n_max + 1])
    }

    pub fn from_u64(omega: u64, coeffs: &[u64]) -> Self {
        Self::new(omega, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn with_weight(mut self, weight: WeightSpec) -> Self {
        self.weight = weight;
        self
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }

    /// Exact value at rational `p`.
    pub fn eval_rational(&self, p: &BigRational) -> BigRational {
        let step = p / BigRational::from_integer(self.omega.into());
        let mut acc = BigRational::zero();
        let mut power = BigRational::from_integer(1.into());
        for c in &self.coeffs {
            acc += &power * BigRational::from_integer(c.clone());
            power *= &step;
        }
        acc
    }

    pub fn eval_f64(&self, p: f64) -> f64 {
        let step = p / self.omega as f64;
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * step + c.to_f64().unwrap_or(f64::INFINITY))
    }

    /// Coefficientwise `self - other`; the two must share `Omega` and length.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self::new(self.omega, coeffs))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self::new(self.omega, coeffs))
    }

    /// Indices where `self_n > other_n`.
    pub fn exceedances(&self, other: &Self) -> Result<Vec<usize>> {
        self.check_compatible(other)?;
        Ok((0..self.coeffs.len()).filter(|&n| self.coeffs[n] > other.coeffs[n]).collect())
    }

    /// Largest `n` with `c_n != 0`, if any.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.omega != other.omega || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::GeometryMismatch(format!(
                "series (Omega={}, n_max={}) vs (Omega={}, n_max={})",
                self.omega,
                self.n_max(),
                other.omega,
                other.n_max()
            )));
        }
        Ok(())
    }
}

/// Floating-point counterpart of [`PolymerSeries`] for tilted sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealSeries {
    pub omega: u64,
    pub weight: WeightSpec,
    pub coeffs: Vec<f64>,
}

impl RealSeries {
    pub fn n_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval_f64(&self, p: f64) -> f64 {
        let step = p / self.omega as f64;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * step + c)
    }
}

/// `(p / Omega)^n` as an exact rational.
pub fn activity_power(p: &BigRational, omega: u64, n: usize) -> BigRational {
    pow(&(p / BigRational::from_integer(omega.into())), n)
}
