//! Random-walk two-point functions and masses.
//!
//! `S_z` solves `(delta - z D) * S_z = delta` for the spread-out kernel and `C_mu`
//! solves the same equation for the nearest-neighbour kernel
//! `P = 1{|x| = 1} / 2d`. Both are evaluated by Fourier inversion on a period-`N`
//! grid, which yields the periodised function `sum_u S_z(x + N u)`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::fft_nd;
use crate::fields::{Geometry, LatticeField};
use crate::kernel::{increment, StepKernel};

const BISECTION_STEPS: usize = 80;
const ROOT_LOWER: f64 = 1e-12;

/// Which random walk a Green function belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Walk {
    SpreadOut(StepKernel),
    NearestNeighbour { dim: usize },
}

impl Walk {
    pub fn dim(&self) -> usize {
        match self {
            Walk::SpreadOut(k) => k.dim(),
            Walk::NearestNeighbour { dim } => *dim,
        }
    }

    /// Fourier transform of the step distribution.
    pub fn step_hat(&self, k: &[f64]) -> f64 {
        match self {
            Walk::SpreadOut(kernel) => kernel.d_hat(k),
            Walk::NearestNeighbour { dim } => k.iter().map(|v| v.cos()).sum::<f64>() / *dim as f64,
        }
    }

    /// Per-axis factors on the grid `2 pi j / n`, combined by [`Walk::combine`].
    fn axis_factors(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let k = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                match self {
                    Walk::SpreadOut(kernel) => kernel.dirichlet(k),
                    Walk::NearestNeighbour { .. } => k.cos(),
                }
            })
            .collect()
    }

    /// Neutral element for [`Walk::combine`] over the perpendicular axes.
    fn perp_identity(&self) -> f64 {
        match self {
            Walk::SpreadOut(_) => 1.0,
            Walk::NearestNeighbour { .. } => 0.0,
        }
    }

    fn fold(&self, acc: f64, factor: f64) -> f64 {
        match self {
            Walk::SpreadOut(_) => acc * factor,
            Walk::NearestNeighbour { .. } => acc + factor,
        }
    }

    /// Step transform from the folded axis factors.
    fn combine(&self, folded: f64) -> f64 {
        match self {
            Walk::SpreadOut(kernel) => (folded - 1.0) / kernel.omega() as f64,
            Walk::NearestNeighbour { dim } => folded / *dim as f64,
        }
    }

    /// Tilted step transform `sum_x D(x) e^{m x_1} e^{ik.x}`, given the folded
    /// perpendicular factor.
    fn tilted_hat(&self, k1: f64, m: f64, perp: f64) -> Complex64 {
        match self {
            Walk::SpreadOut(kernel) => {
                let l = kernel.range() as i64;
                let axis: Complex64 = (-l..=l)
                    .map(|j| Complex64::from_polar((m * j as f64).exp(), k1 * j as f64))
                    .sum();
                (axis * perp - 1.0) / kernel.omega() as f64
            }
            Walk::NearestNeighbour { dim } => {
                let axis = 0.5 * (Complex64::from_polar(m.exp(), k1) + Complex64::from_polar((-m).exp(), -k1));
                (axis + perp) / *dim as f64
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMethod {
    ClosedForm,
    RootFind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassResult {
    pub m: f64,
    /// Correlation length `1/m`; infinite at `m = 0`.
    pub xi: f64,
    pub method: MassMethod,
    /// Absolute value of the defining equation at the returned mass.
    pub residual: f64,
}

impl MassResult {
    fn new(m: f64, method: MassMethod, residual: f64) -> Self {
        Self { m, xi: if m == 0.0 { f64::INFINITY } else { 1.0 / m }, method, residual }
    }
}

/// Mass of the nearest-neighbour walk: `cosh m = 1 + d (1 - mu) / mu`.
pub fn nn_mass(mu: f64, d: usize) -> Result<MassResult> {
    if !(mu > 0.0 && mu <= 1.0) {
        return invalid(format!("nearest-neighbour activity must lie in (0, 1], got {mu}"));
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    let m = (1.0 + d as f64 * (1.0 - mu) / mu).acosh();
    Ok(MassResult::new(m, MassMethod::ClosedForm, 0.0))
}

/// Mass of the spread-out walk: the root of `z sum_x D(x) e^{m x_1} = 1`.
pub fn so_mass(kernel: &StepKernel, z: f64) -> Result<MassResult> {
    if !(z > 0.0 && z < 1.0) {
        return invalid(format!("spread-out activity must lie in (0, 1), got {z}"));
    }
    let f = |m: f64| z * kernel.tilted_mass_sum(m) - 1.0;
    let mut lo = ROOT_LOWER;
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e6 {
            return Err(Error::Overflow(format!("no mass bracket found for z = {z}")));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (m, r) = if f(lo).abs() <= f(hi).abs() { (lo, f(lo).abs()) } else { (hi, f(hi).abs()) };
    Ok(MassResult::new(m, MassMethod::RootFind, r))
}

/// Smallest power of two at least `max(64, 40 / m_S(z))`.
pub fn default_grid(kernel: &StepKernel, z: f64) -> Result<usize> {
    let m = so_mass(kernel, z)?.m;
    let want = (40.0 / m).ceil().max(64.0);
    if want > (1u64 << 40) as f64 {
        return Err(Error::Overflow(format!("grid for z = {z} is too large")));
    }
    Ok((want as usize).next_power_of_two())
}

/// Periodised two-point function on the torus of period `n`:
/// `N^{-d} sum_k e^{-ik.x} / (1 - z D^(k))`.
///
/// This equals `sum_u S_z(x + n u)`, which approximates `S_z` on the fundamental
/// domain with relative error of order `exp(-m n / 2)`.
pub fn green_field(walk: &Walk, z: f64, n: usize) -> Result<LatticeField> {
    if n < 8 || !n.is_multiple_of(2) {
        return invalid(format!("grid size must be even and at least 8, got {n}"));
    }
    let d = walk.dim();
    let total = n
        .checked_pow(d as u32)
        .filter(|t| *t <= 1 << 28)
        .ok_or_else(|| Error::Overflow(format!("grid {n}^{d} is too large")))?;
    let axis = walk.axis_factors(n);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); total];
    let mut idx = vec![0usize; d];
    for (flat, slot) in spectrum.iter_mut().enumerate() {
        let folded = idx.iter().fold(walk.perp_identity(), |acc, &i| walk.fold(acc, axis[i]));
        let denom = 1.0 - z * walk.combine(folded);
        if !(denom > 0.0) {
            return Err(Error::NotSubcritical { index: flat, value: denom });
        }
        *slot = Complex64::new(1.0 / denom, 0.0);
        increment(&mut idx, n);
    }
    fft_nd(&mut spectrum, &vec![n; d], FftDirection::Forward);
    let norm = total as f64;
    let values = spectrum.iter().map(|c| c.re / norm).collect();
    LatticeField::new(Geometry::Torus { dim: d, period: n }, values)
}

/// Axis values `S(n e_1)` for `n = 0..n_axis`, from a partial transform tilted by
/// `tilt` along `e_1`.
///
/// The perpendicular directions are sampled on an `n_perp` grid. With
/// `0 <= tilt < m` the tilted function `S(x) e^{tilt x_1}` decays at rate
/// `m - tilt`, so the far axis stays resolvable in floating point. Entries with
/// `n > n_axis / 2` are images of negative `n` and carry larger wrap error.
pub fn axis_profile(walk: &Walk, z: f64, n_axis: usize, n_perp: usize, tilt: f64) -> Result<Vec<f64>> {
    if n_axis < 8 || n_perp < 1 || tilt < 0.0 {
        return invalid("axis profile needs n_axis >= 8, n_perp >= 1, tilt >= 0");
    }
    let d = walk.dim();
    let perp_axis = walk.axis_factors(n_perp);
    let perp_count = n_perp.pow(d as u32 - 1);
    let mut perp_values = Vec::with_capacity(perp_count);
    let mut idx = vec![0usize; d - 1];
    for _ in 0..perp_count {
        perp_values.push(idx.iter().fold(walk.perp_identity(), |acc, &i| walk.fold(acc, perp_axis[i])));
        increment(&mut idx, n_perp);
    }
    let mut spectrum: Vec<Complex64> = (0..n_axis)
        .into_par_iter()
        .map(|j| {
            let k1 = 2.0 * std::f64::consts::PI * j as f64 / n_axis as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for &perp in &perp_values {
                acc += 1.0 / (1.0 - z * walk.tilted_hat(k1, tilt, perp));
            }
            acc / perp_count as f64
        })
        .collect();
    if let Some(bad) = spectrum.iter().position(|c| !c.re.is_finite() || c.re <= 0.0) {
        return Err(Error::NotSubcritical { index: bad, value: spectrum[bad].re });
    }
    fft_nd(&mut spectrum, &[n_axis], FftDirection::Forward);
    Ok(spectrum
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let signed = if 2 * n > n_axis { n as f64 - n_axis as f64 } else { n as f64 };
            c.re / n_axis as f64 * (-tilt * signed).exp()
        })
        .collect())
}

/// `1 / (1 - z D^(m)(k))` on the full `n^d` Fourier grid, where `D^(m)` carries the
/// tilt `e^{m x_1}`. Row-major in `k`.
pub(crate) fn tilted_spectrum(walk: &Walk, z: f64, n: usize, tilt: f64) -> Result<Vec<Complex64>> {
    let d = walk.dim();
    let total = n
        .checked_pow(d as u32)
        .filter(|t| *t <= 1 << 27)
        .ok_or_else(|| Error::Overflow(format!("grid {n}^{d} is too large")))?;
    let axis = walk.axis_factors(n);
    let first: Vec<f64> = (0..n).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect();
    let perp_total = total / n;
    let mut perp = Vec::with_capacity(perp_total);
    let mut idx = vec![0usize; d - 1];
    for _ in 0..perp_total {
        perp.push(idx.iter().fold(walk.perp_identity(), |acc, &i| walk.fold(acc, axis[i])));
        increment(&mut idx, n);
    }
    let mut out = Vec::with_capacity(total);
    for (i, k1) in first.iter().enumerate() {
        for (j, &q) in perp.iter().enumerate() {
            let denom = 1.0 - z * walk.tilted_hat(*k1, tilt, q);
            if !(denom.re > 0.0) {
                return Err(Error::NotSubcritical { index: i * perp_total + j, value: denom.re });
            }
            out.push(1.0 / denom);
        }
    }
    Ok(out)
}

/// Parameters isolating the nearest-neighbour walk inside the spread-out walk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionParams {
    pub lambda: f64,
    pub mu: f64,
    /// `E_z = (delta - mu P) - lambda (delta - z D)` on the box of radius `L`.
    pub e_field: LatticeField,
    /// `sum_x E_z(x)`.
    pub moment0: f64,
    /// `sum_x |x|^2 E_z(x)`.
    pub moment2: f64,
}

pub fn decomposition_params(kernel: &StepKernel, z: f64) -> Result<DecompositionParams> {
    if !(z > 0.0 && z <= 1.0) {
        return invalid(format!("activity must lie in (0, 1], got {z}"));
    }
    let denom = (1.0 - z) + z * kernel.sigma2();
    let lambda = 1.0 / denom;
    let mu = z * kernel.sigma2() / denom;
    let d = kernel.dim();
    let geometry = Geometry::Box { dim: d, radius: kernel.range() as usize };
    let e_field = LatticeField::from_fn(geometry, |x| {
        let origin = x.iter().all(|&c| c == 0);
        let nn = x.iter().map(|c| c.abs()).sum::<i64>() == 1;
        let p = if nn { 1.0 / (2 * d) as f64 } else { 0.0 };
        let delta = if origin { 1.0 } else { 0.0 };
        (delta - mu * p) - lambda * (delta - z * kernel.weight(x))
    });
    let moment0 = e_field.weighted_sum(0.0, 0.0);
    let moment2 = e_field.weighted_sum(2.0, 0.0);
    Ok(DecompositionParams { lambda, mu, e_field, moment0, moment2 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiRemainder {
    /// `phi_z = S_z - delta - z lambda_z C_{mu_z}` on the period-`n` torus.
    pub field: LatticeField,
    /// `sup |x|^{d-2} |phi_z(x)|` over `|x| <= n/4`, with `|x|` floored at 1.
    pub sup_stat: f64,
}

pub fn phi_remainder(kernel: &StepKernel, z: f64, n: usize) -> Result<PhiRemainder> {
    if !(0.0..1.0).contains(&z) {
        return invalid(format!("activity must lie in [0, 1), got {z}"));
    }
    let d = kernel.dim();
    let spread = green_field(&Walk::SpreadOut(kernel.clone()), z, n)?;
    let delta = LatticeField::delta(spread.geometry());
    let (lambda, nn) = if z == 0.0 {
        (0.0, LatticeField::zeros(spread.geometry()))
    } else {
        let params = decomposition_params(kernel, z)?;
        (params.lambda, green_field(&Walk::NearestNeighbour { dim: d }, params.mu, n)?)
    };
    let field = spread.combine(1.0, &delta, -1.0)?.combine(1.0, &nn, -z * lambda)?;
    let limit = n as f64 / 4.0;
    let sup_stat = field
        .iter()
        .filter_map(|(x, v)| {
            let r = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            (r <= limit).then(|| r.max(1.0).powi(d as i32 - 2) * v.abs())
        })
        .fold(0.0, f64::max);
    Ok(PhiRemainder { field, sup_stat })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassChiRow {
    pub z: f64,
    pub mass: f64,
    pub chi: f64,
    /// `m_S(z)^2 chi_S(z) sigma^2 / (2d)`.
    pub ratio: f64,
}

pub fn verify_mass_chi_product(kernel: &StepKernel, zs: &[f64]) -> Result<Vec<MassChiRow>> {
    zs.iter()
        .map(|&z| {
            let mass = so_mass(kernel, z)?.m;
            let chi = 1.0 / (1.0 - z);
            let ratio = mass * mass * chi * kernel.sigma2() / (2.0 * kernel.dim() as f64);
            Ok(MassChiRow { z, mass, chi, ratio })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub z: f64,
    pub mass: f64,
    /// Least-squares decay rate of `S_z(n e_1)` over the window.
    pub slope: f64,
    /// `slope / mass`.
    pub ratio: f64,
    pub window: (usize, usize),
    pub grid: usize,
    pub perp_grid: usize,
    pub tilt: f64,
}

/// Fits the on-axis decay rate of `S_z` over `[n/4, n/2]` and compares it with
/// `m_S(z)`.
///
/// Requires `n m_S(z) >= 40`. The profile is computed with tilt
/// `m_S - 30/n`, and the perpendicular grid is sized so that transverse images
/// are suppressed by at least `e^{-20}` across the window.
pub fn verify_decay_bound(kernel: &StepKernel, z: f64, n: usize) -> Result<DecayReport> {
    let mass = so_mass(kernel, z)?.m;
    if (n as f64) * mass < 40.0 {
        return invalid(format!("grid {n} too small: need n * m_S >= 40 (m_S = {mass})"));
    }
    let tilt = mass - 30.0 / n as f64;
    let (lo, hi) = (n / 4, n / 2);
    let reach = hi as f64 + 20.0 / mass;
    let perp_grid = if kernel.dim() == 1 {
        1
    } else {
        let want = (reach * reach - (hi * hi) as f64).sqrt().ceil() as usize;
        want.max(16).min(n)
    };
    let walk = Walk::SpreadOut(kernel.clone());
    let profile = axis_profile(&walk, z, n, perp_grid, tilt)?;
    // Fit the tilted values and add the tilt back to stay clear of underflow.
    let ns: Vec<f64> = (lo..=hi).map(|v| v as f64).collect();
    let tilted: Vec<f64> = (lo..=hi).map(|v| profile[v] * (tilt * v as f64).exp()).collect();
    let slope = crate::fields::log_slope_fit(&ns, &tilted)? + tilt;
    Ok(DecayReport { z, mass, slope, ratio: slope / mass, window: (lo, hi), grid: n, perp_grid, tilt })
}
