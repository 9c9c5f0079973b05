//! Convolution diagrams built from two-point fields: tilted and weighted bubbles,
//! triangles and squares.
//!
//! A diagram is an ordered list of factors. Each factor is either `p D` for a
//! step kernel or a named field, optionally multiplied pointwise by a tilt and by
//! `|x|^a` before the factors are convolved on `Z^d`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{log_slope_fit, Geometry, LatticeField};
use crate::greens::{so_mass, tilted_spectrum, Walk};
use crate::kernel::StepKernel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// `p D` for the step kernel of the given range, in the dimension of the fields.
    Kernel { range: u32 },
    Field { name: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    #[serde(flatten)]
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<f64>,
    /// Exponent `a` of the weight `|x|^a` (Euclidean norm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl Factor {
    pub fn kernel(range: u32) -> Self {
        Self { source: Source::Kernel { range }, tilt: None, weight: None }
    }

    pub fn field(name: &str) -> Self {
        Self { source: Source::Field { name: name.to_string() }, tilt: None, weight: None }
    }

    pub fn tilted(mut self, m: f64) -> Self {
        self.tilt = Some(m);
        self
    }

    pub fn weighted(mut self, a: f64) -> Self {
        self.weight = Some(a);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltMode {
    /// `cosh(m x_1)`.
    #[default]
    Symmetrized,
    /// `e^{m x_1}`.
    Exponential,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Supremum of `|value|` over the box of the input fields.
    #[default]
    Sup,
    AtOrigin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramSpec {
    pub factors: Vec<Factor>,
    #[serde(default)]
    pub tilt_mode: TiltMode,
    #[serde(default)]
    pub reduction: Reduction,
    /// Subtract the product of the factors' values at the origin.
    #[serde(default)]
    pub minus_one_point: bool,
}

impl DiagramSpec {
    pub fn new(factors: Vec<Factor>) -> Self {
        Self { factors, tilt_mode: TiltMode::default(), reduction: Reduction::default(), minus_one_point: false }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn with_tilt_mode(mut self, mode: TiltMode) -> Self {
        self.tilt_mode = mode;
        self
    }

    pub fn minus_one_point(mut self) -> Self {
        self.minus_one_point = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return invalid("a diagram needs at least one factor");
        }
        let weighted = self.factors.iter().filter(|f| f.weight.is_some()).count();
        if weighted > 1 {
            return invalid(format!("{weighted} weighted factors; at most one is allowed"));
        }
        for f in &self.factors {
            if let Some(m) = f.tilt {
                if !m.is_finite() {
                    return invalid(format!("tilt {m} is not finite"));
                }
            }
            if let Some(a) = f.weight {
                if !(a.is_finite() && a >= 0.0) {
                    return invalid(format!("weight exponent {a} must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramValue {
    pub value: f64,
    /// Radius of the box the input fields are stored on; the reduction sees only this box.
    pub box_radius: usize,
    pub reduction: Reduction,
    /// Product of the factors at the origin, when it was subtracted.
    pub one_point: Option<f64>,
}

fn common_box(spec: &DiagramSpec, fields: &BTreeMap<String, LatticeField>) -> Result<(usize, usize)> {
    let mut geometry: Option<Geometry> = None;
    for f in &spec.factors {
        if let Source::Field { name } = &f.source {
            let field = fields
                .get(name)
                .ok_or_else(|| Error::InvalidParameter(format!("no field bound to '{name}'")))?;
            let g = field.geometry();
            if !matches!(g, Geometry::Box { .. }) {
                return Err(Error::GeometryMismatch(format!("field '{name}' is not a box field")));
            }
            match geometry {
                None => geometry = Some(g),
                Some(prev) if prev != g => {
                    return Err(Error::GeometryMismatch(format!("field '{name}' on {g:?}, expected {prev:?}")))
                }
                _ => {}
            }
        }
    }
    match geometry {
        Some(Geometry::Box { dim, radius }) => Ok((dim, radius)),
        _ => invalid("a diagram needs at least one field factor"),
    }
}

fn factor_field(
    factor: &Factor,
    fields: &BTreeMap<String, LatticeField>,
    dim: usize,
    p: f64,
    mode: TiltMode,
) -> Result<LatticeField> {
    let base = match &factor.source {
        Source::Field { name } => fields[name].clone(),
        Source::Kernel { range } => {
            let kernel = StepKernel::new(dim, *range)?;
            let geometry = Geometry::Box { dim, radius: *range as usize };
            LatticeField::from_fn(geometry, |x| p * kernel.weight(x))
        }
    };
    let m = factor.tilt.unwrap_or(0.0);
    let a = factor.weight;
    if m == 0.0 && a.is_none() {
        return Ok(base);
    }
    Ok(base.map(|x, v| {
        let t = match mode {
            TiltMode::Symmetrized => (m * x[0] as f64).cosh(),
            TiltMode::Exponential => (m * x[0] as f64).exp(),
        };
        let w = match a {
            Some(a) => x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt().powf(a),
            None => 1.0,
        };
        v * t * w
    }))
}

fn radius_of(field: &LatticeField) -> usize {
    match field.geometry() {
        Geometry::Box { radius, .. } => radius,
        Geometry::Torus { .. } => unreachable!("diagram factors are box fields"),
    }
}

/// Evaluate a diagram on box fields at activity `p`.
///
/// The factors are convolved in order on their full `Z^d` support, then reduced
/// over the box the fields are stored on.
pub fn eval_diagram(spec: &DiagramSpec, fields: &BTreeMap<String, LatticeField>, p: f64) -> Result<DiagramValue> {
    spec.validate()?;
    if !p.is_finite() {
        return invalid(format!("activity {p} is not finite"));
    }
    let (dim, radius) = common_box(spec, fields)?;
    let factors = spec
        .factors
        .iter()
        .map(|f| factor_field(f, fields, dim, p, spec.tilt_mode))
        .collect::<Result<Vec<_>>>()?;
    let origin = vec![0i64; dim];
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        let out = radius_of(&acc) + radius_of(f);
        acc = acc.zd_convolve(f, Some(out))?;
    }
    let mut value = match spec.reduction {
        Reduction::Sup => acc.resize_box(radius)?.sup_norm(),
        Reduction::AtOrigin => acc.get(&origin),
    };
    let one_point = if spec.minus_one_point {
        let prod: f64 = factors.iter().map(|f| f.get(&origin)).product();
        value -= prod;
        Some(prod)
    } else {
        None
    };
    Ok(DiagramValue { value, box_radius: radius, reduction: spec.reduction, one_point })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareValue {
    pub value: f64,
    /// `(G~ * G~ * G * G)(0) - g^4`.
    pub doubly_tilted: f64,
    /// `(G~ * G * G * G)(0) - g^4`.
    pub singly_tilted: f64,
    pub box_radius: usize,
}

/// Larger of the two four-fold convolutions at the origin, less `g^4`.
///
/// `tilted` is the tilted counterpart of `g_field`, supplied by the caller.
pub fn square_max(g_field: &LatticeField, tilted: &LatticeField, g: f64) -> Result<SquareValue> {
    if g_field.geometry() != tilted.geometry() {
        return Err(Error::GeometryMismatch(format!("{:?} vs {:?}", g_field.geometry(), tilted.geometry())));
    }
    let Geometry::Box { radius, .. } = g_field.geometry() else {
        return invalid("square_max expects box fields");
    };
    let gg = g_field.zd_convolve(g_field, Some(2 * radius))?;
    let tt = tilted.zd_convolve(tilted, Some(2 * radius))?;
    let tg = tilted.zd_convolve(g_field, Some(2 * radius))?;
    let at_origin = |a: &LatticeField, b: &LatticeField| -> f64 {
        a.iter().map(|(x, v)| v * b.get(&x.iter().map(|c| -c).collect::<Vec<_>>())).sum()
    };
    let g4 = g.powi(4);
    let doubly_tilted = at_origin(&tt, &gg) - g4;
    let singly_tilted = at_origin(&tg, &gg) - g4;
    Ok(SquareValue { value: doubly_tilted.max(singly_tilted), doubly_tilted, singly_tilted, box_radius: radius })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub range: u32,
    pub mass: f64,
    pub grid: usize,
    /// `(S*S*S*S)(0) - S(0)^4`.
    pub value: f64,
    pub tilt: f64,
    /// The square with `G~(x) = S(x) e^{m x_1}` at `m = tilt`.
    pub tilted_value: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub d: usize,
    pub z: f64,
    pub rows: Vec<ProbeRow>,
    /// Least-squares slope of `ln value` against `ln L`; `None` with fewer than two ranges.
    pub exponent: Option<f64>,
}

const PROBE_GRID_MAX: usize = 256;

fn probe_grid(d: usize, mass: f64) -> usize {
    let want = (120.0 / mass).ceil().max(32.0) as usize;
    let cap = match d {
        1 => 1 << 16,
        2 => 2048,
        3 => PROBE_GRID_MAX,
        _ => 32,
    };
    want.next_power_of_two().min(cap)
}

/// Square diagram of the walk Green function `S_z` for each range in `ranges`,
/// with and without the tilt `m_S/2`.
///
/// The four-fold convolutions at the origin are evaluated as Fourier sums on a
/// torus large enough for the periodisation error to be negligible.
pub fn l_scaling_probe(d: usize, z: f64, ranges: &[u32]) -> Result<ProbeReport> {
    if !(z > 0.0 && z < 1.0) {
        return invalid(format!("z = {z} must lie in (0, 1)"));
    }
    let mut rows = Vec::with_capacity(ranges.len());
    for &range in ranges {
        let kernel = StepKernel::new(d, range)?;
        let mass = so_mass(&kernel, z)?.m;
        let n = probe_grid(d, mass).max(2 * (2 * range as usize + 1));
        let walk = Walk::SpreadOut(kernel);
        let plain = tilted_spectrum(&walk, z, n, 0.0)?;
        let tilt = mass / 2.0;
        let tilted = tilted_spectrum(&walk, z, n, tilt)?;
        let volume = (n as f64).powi(d as i32);
        let s0 = plain.iter().map(|c| c.re).sum::<f64>() / volume;
        let s4 = s0.powi(4);
        let value = plain.iter().map(|c| c.powi(4).re).sum::<f64>() / volume - s4;
        let tt = plain.iter().zip(&tilted).map(|(s, t)| (s * s * t * t).re).sum::<f64>() / volume - s4;
        let tg = plain.iter().zip(&tilted).map(|(s, t)| (s * s * s * t).re).sum::<f64>() / volume - s4;
        let tilted_value = tt.max(tg);
        rows.push(ProbeRow { range, mass, grid: n, value, tilt, tilted_value, ratio: tilted_value / value });
    }
    let exponent = if rows.len() >= 2 && rows.iter().all(|r| r.value > 0.0) {
        let ls: Vec<f64> = rows.iter().map(|r| (r.range as f64).ln()).collect();
        let vs: Vec<f64> = rows.iter().map(|r| r.value).collect();
        Some(-log_slope_fit(&ls, &vs)?)
    } else {
        None
    };
    Ok(ProbeReport { d, z, rows, exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::green_field;

    fn walk_box(d: usize, l: u32, z: f64, n: usize, radius: usize) -> LatticeField {
        let kernel = StepKernel::new(d, l).unwrap();
        green_field(&Walk::SpreadOut(kernel), z, n).unwrap().to_box(radius).unwrap()
    }

    fn bind(pairs: &[(&str, LatticeField)]) -> BTreeMap<String, LatticeField> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn delta_factors() {
        let delta = LatticeField::delta(Geometry::Box { dim: 2, radius: 3 });
        let fields = bind(&[("G", delta)]);
        let spec = DiagramSpec::new(vec![Factor::field("G"); 4]);
        assert_eq!(eval_diagram(&spec, &fields, 1.0).unwrap().value, 1.0);

        let p = 0.7;
        let spec = DiagramSpec::new(vec![
            Factor::kernel(2).tilted(0.3),
            Factor::field("G").tilted(0.3),
            Factor::field("G"),
            Factor::field("G"),
            Factor::field("G"),
        ]);
        let v = eval_diagram(&spec, &fields, p).unwrap();
        // the tilt only inflates the kernel off the axis x_1 = 0, and p D^(m) peaks at x_1 = 2
        let omega = 24.0;
        assert!((v.value - p * (0.6f64).cosh() / omega).abs() < 1e-14);
        let untilted = DiagramSpec::new(vec![Factor::kernel(2), Factor::field("G")]);
        assert!((eval_diagram(&untilted, &fields, p).unwrap().value - p / omega).abs() < 1e-15);
    }

    #[test]
    fn bubble_matches_direct_sum() {
        let s = walk_box(3, 2, 0.8, 64, 14);
        let direct: f64 = s.values().iter().map(|v| v * v).sum();
        let spec = DiagramSpec::new(vec![Factor::field("S"), Factor::field("S")]).with_reduction(Reduction::AtOrigin);
        let v = eval_diagram(&spec, &bind(&[("S", s)]), 1.0).unwrap();
        assert!((v.value - direct).abs() < 1e-10 * direct, "{} vs {direct}", v.value);
    }

    #[test]
    fn rejects_bad_specs() {
        let a = LatticeField::delta(Geometry::Box { dim: 2, radius: 2 });
        let b = LatticeField::delta(Geometry::Box { dim: 2, radius: 3 });
        let fields = bind(&[("A", a), ("B", b)]);
        let spec = DiagramSpec::new(vec![Factor::field("A"), Factor::field("B")]);
        assert!(matches!(eval_diagram(&spec, &fields, 1.0), Err(Error::GeometryMismatch(_))));
        let spec = DiagramSpec::new(vec![Factor::field("A").weighted(1.0), Factor::field("A").weighted(2.0)]);
        assert!(eval_diagram(&spec, &fields, 1.0).is_err());
        let spec = DiagramSpec::new(vec![Factor::field("A").tilted(f64::NAN)]);
        assert!(eval_diagram(&spec, &fields, 1.0).is_err());
        let spec = DiagramSpec::new(vec![Factor::field("C")]);
        assert!(eval_diagram(&spec, &fields, 1.0).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = DiagramSpec::new(vec![Factor::kernel(1).tilted(0.2), Factor::field("G").weighted(2.0)])
            .with_tilt_mode(TiltMode::Exponential)
            .minus_one_point();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<DiagramSpec>(&text).unwrap(), spec);
        let parsed: DiagramSpec =
            serde_json::from_str(r#"{"factors":[{"kind":"field","name":"G"},{"kind":"kernel","range":2,"tilt":0.5}]}"#)
                .unwrap();
        assert_eq!(parsed.reduction, Reduction::Sup);
        assert_eq!(parsed.tilt_mode, TiltMode::Symmetrized);
        assert_eq!(parsed.factors[1].tilt, Some(0.5));
    }

    #[test]
    fn weighted_triangle_reduces_sensibly() {
        let s = walk_box(2, 1, 0.6, 64, 10);
        let fields = bind(&[("G", s)]);
        let spec = DiagramSpec::new(vec![
            Factor::kernel(1).weighted(2.0),
            Factor::field("G"),
            Factor::field("G").tilted(0.2),
            Factor::field("G").tilted(0.2),
        ]);
        let sup = eval_diagram(&spec, &fields, 0.5).unwrap();
        let at0 = eval_diagram(&spec.clone().with_reduction(Reduction::AtOrigin), &fields, 0.5).unwrap();
        assert!(sup.value >= at0.value && at0.value > 0.0);
    }

    #[test]
    fn square_of_a_delta_vanishes() {
        let g = 1.3;
        let geometry = Geometry::Box { dim: 2, radius: 2 };
        let field = LatticeField::delta(geometry).map(|_, v| g * v);
        let sq = square_max(&field, &field, g).unwrap();
        assert!(sq.value.abs() < 1e-12 && sq.doubly_tilted.abs() < 1e-12);
    }

    #[test]
    fn square_untilted_candidates_coincide_and_grow_with_z() {
        let mut last = 0.0;
        for z in [0.5, 0.7, 0.9] {
            let s = walk_box(2, 1, z, 128, 30);
            let g = s.get(&[0, 0]);
            let sq = square_max(&s, &s, g).unwrap();
            assert!((sq.doubly_tilted - sq.singly_tilted).abs() < 1e-12 * sq.value.abs().max(1.0));
            assert!(sq.value > last, "z = {z}: {} after {last}", sq.value);
            last = sq.value;
        }
    }

    #[test]
    fn probe_matches_box_evaluation() {
        let report = l_scaling_probe(2, 0.6, &[1]).unwrap();
        let s = walk_box(2, 1, 0.6, 128, 40);
        let g = s.get(&[0, 0]);
        let sq = square_max(&s, &s, g).unwrap();
        assert!((report.rows[0].value - sq.value).abs() < 1e-10, "{} vs {}", report.rows[0].value, sq.value);
    }

    #[test]
    fn probe_decreases_with_range() {
        let report = l_scaling_probe(3, 0.7, &[1, 2, 3, 4]).unwrap();
        for w in report.rows.windows(2) {
            assert!(w[1].value < w[0].value, "{:?}", report.rows);
        }
        assert!(report.exponent.unwrap() < 0.0);
        for row in &report.rows {
            assert!(row.ratio >= 1.0 && row.ratio.is_finite());
        }
    }

    #[test]
    fn probe_vanishes_as_z_shrinks() {
        let small = l_scaling_probe(1, 1e-3, &[2]).unwrap().rows[0].value;
        let larger = l_scaling_probe(1, 1e-1, &[2]).unwrap().rows[0].value;
        assert!(small < 1e-5 && small < larger);
    }
}
