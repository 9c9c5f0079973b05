//! Real-valued lattice fields on centred boxes of `Z^d` and on discrete tori.
//!
//! Box fields index `[-R, R]^d` and are treated as zero outside the box. Torus
//! fields index `(Z/RZ)^d`; points are reported by their representative in
//! `[-R/2, R/2)^d`. Values are stored row-major with the first coordinate slowest.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::fft_nd;
use crate::kernel::increment;

/// Torus convolutions switch to the transform path above this many sites.
const TORUS_DIRECT_MAX_SITES: usize = 4096;
/// Box convolutions switch to the transform path above this many multiply-adds.
const BOX_DIRECT_MAX_WORK: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Box { dim: usize, radius: usize },
    Torus { dim: usize, period: usize },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match *self {
            Geometry::Box { dim, .. } | Geometry::Torus { dim, .. } => dim,
        }
    }

    /// Number of sites along one axis.
    pub fn side(&self) -> usize {
        match *self {
            Geometry::Box { radius, .. } => 2 * radius + 1,
            Geometry::Torus { period, .. } => period,
        }
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of axis digit `j`.
    fn coord(&self, j: usize) -> i64 {
        match *self {
            Geometry::Box { radius, .. } => j as i64 - radius as i64,
            Geometry::Torus { period, .. } => torus_rep(j as i64, period),
        }
    }

    /// Axis digit of coordinate `c`, or `None` outside a box.
    fn digit(&self, c: i64) -> Option<usize> {
        match *self {
            Geometry::Box { radius, .. } => {
                let j = c + radius as i64;
                (0..=2 * radius as i64).contains(&j).then_some(j as usize)
            }
            Geometry::Torus { period, .. } => Some(c.rem_euclid(period as i64) as usize),
        }
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        debug_assert_eq!(x.len(), self.dim());
        let side = self.side();
        let mut idx = 0usize;
        for &c in x {
            idx = idx * side + self.digit(c)?;
        }
        Some(idx)
    }

    pub fn point_of(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let mut x = vec![0i64; self.dim()];
        for slot in x.iter_mut().rev() {
            *slot = self.coord(idx % side);
            idx /= side;
        }
        x
    }

    /// All points in storage order.
    pub fn points(&self) -> Vec<Vec<i64>> {
        let side = self.side();
        let mut digits = vec![0usize; self.dim()];
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            out.push(digits.iter().map(|&j| self.coord(j)).collect());
            increment(&mut digits, side);
        }
        out
    }
}

/// Representative of `c mod r` in `[-r/2, r/2)`.
pub fn torus_rep(c: i64, r: usize) -> i64 {
    let r = r as i64;
    let j = c.rem_euclid(r);
    if 2 * j >= r {
        j - r
    } else {
        j
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    geometry: Geometry,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        if geometry.dim() == 0 {
            return invalid("field dimension must be at least 1");
        }
        if let Geometry::Torus { period: 0, .. } = geometry {
            return invalid("torus period must be positive");
        }
        if values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for a geometry with {} sites",
                values.len(),
                geometry.len()
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: Geometry) -> Self {
        Self { values: vec![0.0; geometry.len()], geometry }
    }

    pub fn from_fn(geometry: Geometry, f: impl Fn(&[i64]) -> f64) -> Self {
        let values = geometry.points().iter().map(|x| f(x)).collect();
        Self { geometry, values }
    }

    /// Kronecker delta at the origin.
    pub fn delta(geometry: Geometry) -> Self {
        let mut field = Self::zeros(geometry);
        let origin = vec![0i64; geometry.dim()];
        let idx = geometry.index_of(&origin).expect("origin lies in every geometry");
        field.values[idx] = 1.0;
        field
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value at `x`; zero outside a box, periodic on a torus.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.geometry.index_of(x).map_or(0.0, |i| self.values[i])
    }

    pub fn set(&mut self, x: &[i64], value: f64) -> Result<()> {
        let idx = self
            .geometry
            .index_of(x)
            .ok_or_else(|| Error::GeometryMismatch(format!("point {x:?} outside the box")))?;
        self.values[idx] = value;
        Ok(())
    }

    /// `(point, value)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.geometry.points().into_iter().zip(self.values.iter().copied())
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(&[i64], f64) -> f64) -> Self {
        let values = self.iter().map(|(x, v)| f(&x, v)).collect();
        Self { geometry: self.geometry, values }
    }

    /// Pointwise linear combination `a*self + b*other` on a common geometry.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch(format!("{:?} vs {:?}", self.geometry, other.geometry)));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { geometry: self.geometry, values })
    }

    /// Largest deviation from `f(x) = f(-x)`.
    pub fn symmetry_defect(&self) -> f64 {
        self.iter()
            .map(|(x, v)| {
                let neg: Vec<i64> = x.iter().map(|c| -c).collect();
                (v - self.get(&neg)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Restrict a torus field to the box of radius `radius` around the origin.
    pub fn to_box(&self, radius: usize) -> Result<Self> {
        let Geometry::Torus { dim, period } = self.geometry else {
            return invalid("to_box expects a torus field");
        };
        if 2 * radius + 1 > period {
            return invalid(format!("box radius {radius} does not fit in period {period}"));
        }
        let geometry = Geometry::Box { dim, radius };
        Ok(Self::from_fn(geometry, |x| self.get(x)))
    }

    /// Restrict or zero-extend a box field to a new radius.
    pub fn resize_box(&self, radius: usize) -> Result<Self> {
        let Geometry::Box { dim, .. } = self.geometry else {
            return invalid("resize_box expects a box field");
        };
        Ok(Self::from_fn(Geometry::Box { dim, radius }, |x| self.get(x)))
    }

    /// `Z^d` convolution `(f*g)(x) = sum_y f(y) g(x-y)` of two box fields.
    ///
    /// The result lives on the box of radius `radius`, or on the larger of the two
    /// input boxes when `None`. Values outside the stored boxes count as zero.
    pub fn zd_convolve(&self, other: &Self, radius: Option<usize>) -> Result<Self> {
        let (Geometry::Box { dim: df, radius: rf }, Geometry::Box { dim: dg, radius: rg }) =
            (self.geometry, other.geometry)
        else {
            return invalid("zd_convolve expects two box fields");
        };
        if df != dg {
            return Err(Error::GeometryMismatch(format!("dimensions {df} and {dg}")));
        }
        let out_radius = radius.unwrap_or(rf.max(rg));
        let out = Geometry::Box { dim: df, radius: out_radius };
        let work = out.len().saturating_mul(self.geometry.len().min(other.geometry.len()));
        let values = if work <= BOX_DIRECT_MAX_WORK {
            direct_box_convolution(self, other, out)
        } else {
            fft_box_convolution(self, other, out)
        };
        Ok(Self { geometry: out, values })
    }

    /// Torus convolution `(f * g)(x) = sum_{y in T} f(y) g(x-y)`.
    pub fn torus_convolve(&self, other: &Self) -> Result<Self> {
        let Geometry::Torus { .. } = self.geometry else {
            return invalid("torus_convolve expects torus fields");
        };
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch(format!("{:?} vs {:?}", self.geometry, other.geometry)));
        }
        let values = if self.geometry.len() <= TORUS_DIRECT_MAX_SITES {
            self.torus_convolve_direct(other)
        } else {
            self.torus_convolve_fft(other)
        };
        Ok(Self { geometry: self.geometry, values })
    }

    pub(crate) fn torus_convolve_direct(&self, other: &Self) -> Vec<f64> {
        let geometry = self.geometry;
        let points = geometry.points();
        (0..geometry.len())
            .into_par_iter()
            .map(|ix| {
                let x = &points[ix];
                let mut acc = 0.0;
                let mut diff = vec![0i64; x.len()];
                for (iy, y) in points.iter().enumerate() {
                    for ((slot, a), b) in diff.iter_mut().zip(x).zip(y) {
                        *slot = a - b;
                    }
                    acc += self.values[iy] * other.get(&diff);
                }
                acc
            })
            .collect()
    }

    pub(crate) fn torus_convolve_fft(&self, other: &Self) -> Vec<f64> {
        let shape = vec![self.geometry.side(); self.dim()];
        let mut a: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut b: Vec<Complex64> = other.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut a, &shape, FftDirection::Forward);
        fft_nd(&mut b, &shape, FftDirection::Forward);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        fft_nd(&mut a, &shape, FftDirection::Inverse);
        let norm = a.len() as f64;
        a.iter().map(|c| c.re / norm).collect()
    }

    /// Periodise a box field: `x -> sum_u f(x + R u)` over all stored images.
    pub fn wrap_sum(&self, period: usize) -> Result<Self> {
        let Geometry::Box { dim, radius } = self.geometry else {
            return invalid("wrap_sum expects a box field");
        };
        if period == 0 || 2 * radius + 1 < period {
            return invalid(format!("box of radius {radius} is smaller than one period {period}"));
        }
        let torus = Geometry::Torus { dim, period };
        let mut out = Self::zeros(torus);
        for (x, v) in self.iter() {
            let idx = torus.index_of(&x).expect("torus index always exists");
            out.values[idx] += v;
        }
        Ok(out)
    }

    /// `sum_x |x|^a e^{m x_1} f(x)` over the stored sites, with `|0|^0 = 1`.
    pub fn weighted_sum(&self, a: f64, m: f64) -> f64 {
        self.iter()
            .map(|(x, v)| {
                let norm2: f64 = x.iter().map(|&c| (c * c) as f64).sum();
                let moment = if a == 0.0 { 1.0 } else { norm2.powf(0.5 * a) };
                let tilt = if m == 0.0 { 1.0 } else { (m * x[0] as f64).exp() };
                moment * tilt * v
            })
            .sum()
    }

    /// Values `f(n e_1)` for `n` in `lo..=hi`.
    pub fn axis_slice(&self, lo: i64, hi: i64) -> Vec<(i64, f64)> {
        let mut x = vec![0i64; self.dim()];
        (lo..=hi)
            .map(|n| {
                x[0] = n;
                (n, self.get(&x))
            })
            .collect()
    }

    /// Least-squares slope of `-log f(n e_1)` against `n` for `n` in `[lo, hi]`.
    pub fn axis_decay_fit(&self, lo: i64, hi: i64) -> Result<f64> {
        let slice = self.axis_slice(lo, hi);
        let ns: Vec<f64> = slice.iter().map(|&(n, _)| n as f64).collect();
        let vs: Vec<f64> = slice.iter().map(|&(_, v)| v).collect();
        log_slope_fit(&ns, &vs)
    }
}

/// Least-squares slope of `-log v` against `n`.
pub fn log_slope_fit(ns: &[f64], values: &[f64]) -> Result<f64> {
    if ns.len() != values.len() || ns.len() < 2 {
        return invalid("decay fit needs at least two points");
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return invalid(format!("decay fit window contains a nonpositive value {v}"));
    }
    let k = ns.len() as f64;
    let ys: Vec<f64> = values.iter().map(|v| -v.ln()).collect();
    let mean_n = ns.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (n, y) in ns.iter().zip(&ys) {
        sxy += (n - mean_n) * (y - mean_y);
        sxx += (n - mean_n) * (n - mean_n);
    }
    Ok(sxy / sxx)
}

fn direct_box_convolution(f: &LatticeField, g: &LatticeField, out: Geometry) -> Vec<f64> {
    let out_points = out.points();
    let f_support: Vec<(Vec<i64>, f64)> = f.iter().filter(|(_, v)| *v != 0.0).collect();
    out_points
        .par_iter()
        .map(|x| {
            let mut diff = vec![0i64; x.len()];
            let mut acc = 0.0;
            for (y, fy) in &f_support {
                for ((slot, a), b) in diff.iter_mut().zip(x).zip(y) {
                    *slot = a - b;
                }
                acc += fy * g.get(&diff);
            }
            acc
        })
        .collect()
}

fn fft_box_convolution(f: &LatticeField, g: &LatticeField, out: Geometry) -> Vec<f64> {
    let (Geometry::Box { dim, radius: rf }, Geometry::Box { radius: rg, .. }) = (f.geometry, g.geometry) else {
        unreachable!("checked by caller")
    };
    // Circular convolution on a period exceeding the full linear support is exact.
    let period = (2 * (rf + rg) + 1).next_power_of_two().max(2);
    let torus = Geometry::Torus { dim, period };
    let embed = |field: &LatticeField| {
        let mut data = vec![Complex64::new(0.0, 0.0); torus.len()];
        for (x, v) in field.iter() {
            data[torus.index_of(&x).expect("torus index")] += Complex64::new(v, 0.0);
        }
        data
    };
    let shape = vec![period; dim];
    let mut a = embed(f);
    let mut b = embed(g);
    fft_nd(&mut a, &shape, FftDirection::Forward);
    fft_nd(&mut b, &shape, FftDirection::Forward);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_nd(&mut a, &shape, FftDirection::Inverse);
    let norm = a.len() as f64;
    out.points()
        .iter()
        .map(|x| {
            let far = x.iter().any(|c| c.unsigned_abs() as usize > rf + rg);
            if far {
                0.0
            } else {
                a[torus.index_of(x).expect("torus index")].re / norm
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn boxed(dim: usize, radius: usize) -> Geometry {
        Geometry::Box { dim, radius }
    }

    fn random_field(geometry: Geometry, seed: u64, density: f64) -> LatticeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..geometry.len())
            .map(|_| if rng.gen::<f64>() < density { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        LatticeField::new(geometry, values).unwrap()
    }

    /// Brute-force double sum over all pairs of stored sites.
    fn double_loop(f: &LatticeField, g: &LatticeField, out: Geometry) -> LatticeField {
        let mut result = LatticeField::zeros(out);
        for (y, fy) in f.iter() {
            for (w, gw) in g.iter() {
                let x: Vec<i64> = y.iter().zip(&w).map(|(a, b)| a + b).collect();
                if let Some(i) = out.index_of(&x) {
                    result.values[i] += fy * gw;
                }
            }
        }
        result
    }

    fn max_diff(a: &LatticeField, b: &LatticeField) -> f64 {
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rep_and_indexing() {
        assert_eq!(torus_rep(2, 4), -2);
        assert_eq!(torus_rep(2, 3), -1);
        assert_eq!(torus_rep(-1, 5), -1);
        assert_eq!(torus_rep(7, 5), 2);
        let g = Geometry::Torus { dim: 2, period: 5 };
        for i in 0..g.len() {
            assert_eq!(g.index_of(&g.point_of(i)), Some(i));
        }
        let b = boxed(3, 2);
        assert_eq!(b.index_of(&[3, 0, 0]), None);
        assert_eq!(b.point_of(0), vec![-2, -2, -2]);
    }

    #[test]
    fn delta_is_convolution_identity() {
        let g = random_field(boxed(2, 3), 1, 0.7);
        let delta = LatticeField::delta(boxed(2, 1));
        assert!(max_diff(&delta.zd_convolve(&g, Some(3)).unwrap(), &g) < 1e-15);
        let t = random_field(Geometry::Torus { dim: 2, period: 4 }, 2, 1.0);
        let dt = LatticeField::delta(t.geometry());
        assert!(max_diff(&dt.torus_convolve(&t).unwrap(), &t) < 1e-15);
    }

    #[test]
    fn hand_convolution_in_one_dimension() {
        let f = LatticeField::from_fn(boxed(1, 1), |x| if x[0] != 0 { 0.5 } else { 0.0 });
        let ff = f.zd_convolve(&f, Some(2)).unwrap();
        assert_eq!(ff.get(&[0]), 0.5);
        assert_eq!(ff.get(&[2]), 0.25);
        assert_eq!(ff.get(&[-2]), 0.25);
        assert_eq!(ff.get(&[1]), 0.0);
    }

    #[test]
    fn direct_and_transform_paths_match_brute_force() {
        let f = random_field(boxed(2, 4), 3, 0.3);
        let g = random_field(boxed(2, 3), 4, 0.3);
        let out = boxed(2, 7);
        let oracle = double_loop(&f, &g, out);
        let direct = LatticeField { geometry: out, values: direct_box_convolution(&f, &g, out) };
        let spectral = LatticeField { geometry: out, values: fft_box_convolution(&f, &g, out) };
        assert!(max_diff(&direct, &oracle) < 1e-12);
        assert!(max_diff(&spectral, &oracle) < 1e-12);
    }

    #[test]
    fn torus_paths_agree() {
        let t = Geometry::Torus { dim: 2, period: 5 };
        let f = random_field(t, 5, 1.0);
        let g = random_field(t, 6, 1.0);
        let a = f.torus_convolve_direct(&g);
        let b = f.torus_convolve_fft(&g);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        let big = Geometry::Torus { dim: 3, period: 17 };
        assert!(big.len() > TORUS_DIRECT_MAX_SITES);
        let ones = LatticeField::from_fn(t, |_| 2.0);
        let threes = LatticeField::from_fn(t, |_| 3.0);
        let prod = ones.torus_convolve(&threes).unwrap();
        assert!(prod.values().iter().all(|v| (v - 6.0 * 25.0).abs() < 1e-10));
    }

    #[test]
    fn mismatched_geometries_are_rejected() {
        let a = LatticeField::zeros(boxed(1, 2));
        let b = LatticeField::zeros(boxed(2, 2));
        assert!(a.zd_convolve(&b, None).is_err());
        let t4 = LatticeField::zeros(Geometry::Torus { dim: 1, period: 4 });
        let t5 = LatticeField::zeros(Geometry::Torus { dim: 1, period: 5 });
        assert!(t4.torus_convolve(&t5).is_err());
        assert!(a.wrap_sum(6).is_err());
    }

    #[test]
    fn wrap_sum_of_geometric_decay() {
        let f = LatticeField::from_fn(boxed(1, 12), |x| 2f64.powi(-(x[0].abs() as i32)));
        let w = f.wrap_sum(4).unwrap();
        let expected = 1.0 + 2.0 * (2f64.powi(-4) + 2f64.powi(-8) + 2f64.powi(-12));
        assert_relative_eq!(w.get(&[0]), expected, epsilon = 1e-15);
        let inside = LatticeField::from_fn(boxed(2, 3), |x| if x.iter().all(|c| (-2..2).contains(c)) { (x[0] + 3 * x[1]) as f64 } else { 0.0 });
        let wi = inside.wrap_sum(4).unwrap();
        for (x, v) in wi.iter() {
            assert_eq!(v, (x[0] + 3 * x[1]) as f64);
        }
    }

    #[test]
    fn wrap_commutes_with_convolution() {
        let f = random_field(boxed(2, 3), 7, 0.8);
        let g = random_field(boxed(2, 2), 8, 0.8);
        let r = 4;
        let lhs = f.resize_box(6).unwrap().wrap_sum(r).unwrap().torus_convolve(&g.resize_box(6).unwrap().wrap_sum(r).unwrap()).unwrap();
        let rhs = f.zd_convolve(&g, Some(5)).unwrap().wrap_sum(r).unwrap();
        assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn weighted_sums() {
        let delta = LatticeField::delta(boxed(2, 2));
        assert_eq!(delta.weighted_sum(2.0, 0.3), 0.0);
        assert_eq!(delta.weighted_sum(0.0, 0.3), 1.0);
        let ind = LatticeField::from_fn(boxed(1, 1), |x| if x[0] != 0 { 1.0 } else { 0.0 });
        assert_eq!(ind.weighted_sum(2.0, 0.0), 2.0);
        assert_relative_eq!(ind.weighted_sum(0.0, 2f64.ln()), 2.5, epsilon = 1e-15);
        let f = random_field(boxed(3, 2), 9, 1.0);
        assert_relative_eq!(f.weighted_sum(0.0, 0.0), f.sum(), epsilon = 1e-12);
    }

    #[test]
    fn decay_fits() {
        let exp = LatticeField::from_fn(boxed(1, 50), |x| (-0.7 * x[0] as f64).exp());
        assert_relative_eq!(exp.axis_decay_fit(5, 30).unwrap(), 0.7, epsilon = 1e-10);
        let flat = LatticeField::from_fn(boxed(2, 10), |_| 3.0);
        assert!(flat.axis_decay_fit(0, 10).unwrap().abs() < 1e-14);
        // -log f = 0.3 n + log n; least-squares slope over n = 20..=40 computed offline.
        let power = LatticeField::from_fn(boxed(1, 45), |x| {
            let n = x[0].abs().max(1) as f64;
            (-0.3 * n).exp() / n
        });
        assert_relative_eq!(power.axis_decay_fit(20, 40).unwrap(), 0.334_191_057_446, epsilon = 1e-9);
        let signed = LatticeField::from_fn(boxed(1, 5), |x| x[0] as f64);
        assert!(signed.axis_decay_fit(-2, 2).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = random_field(Geometry::Torus { dim: 2, period: 3 }, 10, 1.0);
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"kind\":\"torus\""));
        let back: LatticeField = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn convolution_commutes_and_associates(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000) {
                let f = random_field(boxed(2, 2), s1, 0.6);
                let g = random_field(boxed(2, 2), s2, 0.6);
                let h = random_field(boxed(2, 1), s3, 0.6);
                let fg = f.zd_convolve(&g, Some(4)).unwrap();
                let gf = g.zd_convolve(&f, Some(4)).unwrap();
                prop_assert!(max_diff(&fg, &gf) < 1e-10);
                let left = fg.zd_convolve(&h, Some(5)).unwrap();
                let right = f.zd_convolve(&g.zd_convolve(&h, Some(3)).unwrap(), Some(5)).unwrap();
                prop_assert!(max_diff(&left, &right) < 1e-10);
            }
        }
    }
}
