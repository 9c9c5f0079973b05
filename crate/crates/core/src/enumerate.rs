//! Exact enumeration of spread-out lattice trees and lattice animals on `Z^d`.
//!
//! Polymers are counted modulo translation: each class is represented by the
//! translate whose lexicographically smallest vertex is the origin. Every
//! observable below is a sum over classes of a function of the vertex set.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::StepKernel;
use crate::rational::as_string;
use crate::search::{self, SearchGraph, SearchParams, Tally, View};
use crate::series::{PolymerSeries, RealSeries, WeightSpec};

/// Default cap on the number of visited edge sets.
pub const DEFAULT_BUDGET: u64 = 100_000_000;
/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "POLYLAB_BUDGET";

pub type Point = Vec<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Tree,
    Animal,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Tree => "tree",
            Model::Animal => "animal",
        })
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" | "trees" => Ok(Model::Tree),
            "animal" | "animals" => Ok(Model::Animal),
            other => invalid(format!("unknown model {other:?}; expected tree or animal")),
        }
    }
}

/// Budget from `POLYLAB_BUDGET`, falling back to [`DEFAULT_BUDGET`].
pub fn default_budget() -> u64 {
    std::env::var(BUDGET_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_BUDGET)
}

/// A finite connected subgraph of the spread-out lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Polymer {
    model: Model,
    vertices: Vec<Point>,
    /// Each edge as `(a, b)` with `a < b` lexicographically; sorted.
    edges: Vec<(Point, Point)>,
}

impl Polymer {
    /// The 0-bond polymer at `x`.
    pub fn single(model: Model, x: Point) -> Self {
        Self { model, vertices: vec![x], edges: Vec::new() }
    }

    /// Validates range, connectivity and (for trees) acyclicity.
    pub fn new(model: Model, range: u32, edges: Vec<(Point, Point)>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidPolymer("use Polymer::single for the 0-bond polymer".into()));
        }
        let dim = edges[0].0.len();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a.len() != dim || b.len() != dim {
                return Err(Error::InvalidPolymer("mixed dimensions".into()));
            }
            let span = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).max().unwrap_or(0);
            if span == 0 || span > range as i64 {
                return Err(Error::InvalidPolymer(format!("edge {a:?}-{b:?} outside range {range}")));
            }
            set.insert(if a < b { (a, b) } else { (b, a) });
        }
        let edges: Vec<(Point, Point)> = set.into_iter().collect();
        let vertices: Vec<Point> =
            edges.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect::<BTreeSet<_>>().into_iter().collect();
        if !connected(&vertices, &edges) {
            return Err(Error::InvalidPolymer("edge set is not connected".into()));
        }
        if model == Model::Tree && edges.len() + 1 != vertices.len() {
            return Err(Error::InvalidPolymer("tree contains a cycle".into()));
        }
        Ok(Self { model, vertices, edges })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(Point, Point)] {
        &self.edges
    }

    pub fn bonds(&self) -> usize {
        self.edges.len()
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.vertices.binary_search_by(|v| v.as_slice().cmp(x)).is_ok()
    }

    pub fn is_acyclic(&self) -> bool {
        self.edges.len() + 1 == self.vertices.len()
    }

    pub fn translate(&self, shift: &[i64]) -> Self {
        let mv = |p: &Point| -> Point { p.iter().zip(shift).map(|(a, b)| a + b).collect() };
        Self {
            model: self.model,
            vertices: self.vertices.iter().map(mv).collect(),
            edges: self.edges.iter().map(|(a, b)| (mv(a), mv(b))).collect(),
        }
    }

    /// Translate whose lexicographically smallest vertex is the origin.
    pub fn canonical(&self) -> Self {
        let shift: Point = self.vertices[0].iter().map(|c| -c).collect();
        self.translate(&shift)
    }

    pub(crate) fn from_search(model: Model, graph: &SearchGraph, view: &View) -> Self {
        let pt = |v: u32| graph.point(v).to_vec();
        if view.edges.is_empty() {
            return Self::single(model, pt(view.verts[0]));
        }
        let mut edges: Vec<(Point, Point)> = view
            .edges
            .iter()
            .map(|&e| {
                let [a, b] = graph.endpoints[e as usize];
                let (a, b) = (pt(a), pt(b));
                if a < b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        edges.sort();
        let mut vertices: Vec<Point> = view.verts.iter().map(|&v| pt(v)).collect();
        vertices.sort();
        Self { model, vertices, edges }
    }
}

fn connected(vertices: &[Point], edges: &[(Point, Point)]) -> bool {
    let index: HashMap<&Point, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); vertices.len()];
    for (a, b) in edges {
        adj[index[a]].push(index[b]);
        adj[index[b]].push(index[a]);
    }
    let mut seen = vec![false; vertices.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Configured enumeration of one model at fixed `(d, L, n_max)`.
#[derive(Clone, Debug)]
pub struct Enumerator {
    kernel: StepKernel,
    model: Model,
    n_max: usize,
    budget: u64,
    split: Option<usize>,
}

impl Enumerator {
    pub fn new(kernel: &StepKernel, model: Model, n_max: usize) -> Self {
        Self { kernel: kernel.clone(), model, n_max, budget: default_budget(), split: None }
    }

    pub fn budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Depth at which the search fans out into parallel tasks; 0 disables it.
    pub fn split_depth(mut self, depth: usize) -> Self {
        self.split = Some(depth);
        self
    }

    pub fn kernel(&self) -> &StepKernel {
        &self.kernel
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub(crate) fn params(&self) -> SearchParams {
        SearchParams {
            n_max: self.n_max,
            tree: self.model == Model::Tree,
            budget: self.budget,
            split: self.split.unwrap_or_else(|| search::default_split(self.n_max)),
        }
    }

    fn reach(&self) -> i64 {
        self.n_max as i64 * self.kernel.range() as i64
    }

    fn class_graph(&self) -> SearchGraph {
        SearchGraph::lattice_box(self.kernel.dim(), self.kernel.range() as i64, self.reach(), true)
    }

    pub(crate) fn run<T: Tally>(&self, graph: &SearchGraph, seed: T) -> Result<(T, u64)> {
        search::run(graph, self.params(), seed)
    }

    /// Class counts `t_n` and rooted counts.
    pub fn counts(&self) -> Result<Counts> {
        let seed = CountTally { t: vec![0; self.n_max + 1], rooted: vec![0; self.n_max + 1] };
        let (tally, nodes) = self.run(&self.class_graph(), seed)?;
        Ok(Counts {
            d: self.kernel.dim(),
            range: self.kernel.range(),
            omega: self.kernel.omega(),
            model: self.model,
            n_max: self.n_max,
            t_n: tally.t,
            rooted_n: tally.rooted,
            nodes,
        })
    }

    /// Two-point coefficients `c_n(x)` for every `x` within reach.
    pub fn two_point_table(&self) -> Result<TwoPointTable> {
        let graph = self.class_graph();
        let radius = self.reach();
        let side = 2 * radius + 1;
        let d = self.kernel.dim();
        let packed: Vec<i64> = (0..graph.n_vertices() as u32)
            .map(|v| graph.point(v).iter().fold(0i64, |acc, &c| acc * side + c))
            .collect();
        let offset = (0..d).fold(0i64, |acc, _| acc * side + radius);
        let cells = (side as usize).pow(d as u32);
        let seed = PairTally {
            packed: Arc::new(packed),
            offset,
            cells,
            t: vec![0; self.n_max + 1],
            table: vec![0; cells * (self.n_max + 1)],
        };
        let (tally, nodes) = self.run(&graph, seed)?;
        let mut coeffs = vec![0u64; cells * (self.n_max + 1)];
        for n in 0..=self.n_max {
            for cell in 0..cells {
                coeffs[cell * (self.n_max + 1) + n] = tally.table[n * cells + cell];
            }
        }
        let rooted_n = (0..=self.n_max).map(|n| tally.table[n * cells + offset as usize]).collect();
        Ok(TwoPointTable {
            d,
            range: self.kernel.range(),
            omega: self.kernel.omega(),
            model: self.model,
            n_max: self.n_max,
            radius,
            t_n: tally.t,
            rooted_n,
            coeffs,
            nodes,
        })
    }

    /// All polymers with at most `n_max` bonds containing the origin.
    pub fn rooted_polymers(&self) -> Result<Vec<Polymer>> {
        let graph = SearchGraph::lattice_box(self.kernel.dim(), self.kernel.range() as i64, self.reach(), false);
        self.collect(&graph)
    }

    /// One representative per translation class, lexicographic minimum at the origin.
    pub fn classes(&self) -> Result<Vec<Polymer>> {
        self.collect(&self.class_graph())
    }

    fn collect(&self, graph: &SearchGraph) -> Result<Vec<Polymer>> {
        let seed = Collect { model: self.model, found: Vec::new() };
        let (tally, _) = search::run(graph, SearchParams { split: 0, ..self.params() }, seed)?;
        let mut out: Vec<Polymer> = tally.found.into_iter().map(|(_, p)| p).collect();
        out.sort();
        Ok(out)
    }
}

struct CountTally {
    t: Vec<u64>,
    rooted: Vec<u64>,
}

impl Tally for CountTally {
    fn fresh(&self) -> Self {
        Self { t: vec![0; self.t.len()], rooted: vec![0; self.rooted.len()] }
    }
    fn visit(&mut self, n: usize, view: &View) {
        self.t[n] += 1;
        self.rooted[n] += view.verts.len() as u64;
    }
    fn merge(&mut self, other: Self) {
        add_into(&mut self.t, &other.t);
        add_into(&mut self.rooted, &other.rooted);
    }
}

struct PairTally {
    packed: Arc<Vec<i64>>,
    offset: i64,
    cells: usize,
    t: Vec<u64>,
    table: Vec<u64>,
}

impl Tally for PairTally {
    fn fresh(&self) -> Self {
        Self {
            packed: Arc::clone(&self.packed),
            offset: self.offset,
            cells: self.cells,
            t: vec![0; self.t.len()],
            table: vec![0; self.table.len()],
        }
    }
    fn visit(&mut self, n: usize, view: &View) {
        self.t[n] += 1;
        let row = &mut self.table[n * self.cells..(n + 1) * self.cells];
        for &u in view.verts {
            let base = self.offset - self.packed[u as usize];
            for &v in view.verts {
                row[(base + self.packed[v as usize]) as usize] += 1;
            }
        }
    }
    fn merge(&mut self, other: Self) {
        add_into(&mut self.t, &other.t);
        add_into(&mut self.table, &other.table);
    }
}

struct Collect {
    model: Model,
    found: Vec<(usize, Polymer)>,
}

impl Tally for Collect {
    fn fresh(&self) -> Self {
        Self { model: self.model, found: Vec::new() }
    }
    fn visit(&mut self, n: usize, view: &View) {
        self.found.push((n, Polymer::from_search(self.model, view.graph, view)));
    }
    fn merge(&mut self, other: Self) {
        self.found.extend(other.found);
    }
}

pub(crate) fn add_into(acc: &mut [u64], other: &[u64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub d: usize,
    pub range: u32,
    pub omega: u64,
    pub model: Model,
    pub n_max: usize,
    /// Number of `n`-bond polymers modulo translation.
    pub t_n: Vec<u64>,
    /// Number of `n`-bond polymers containing the origin.
    pub rooted_n: Vec<u64>,
    /// Edge sets visited by the search.
    pub nodes: u64,
}

/// `c_n(x)` for all `x` with `|x|_inf <= n_max L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointTable {
    pub d: usize,
    pub range: u32,
    pub omega: u64,
    pub model: Model,
    pub n_max: usize,
    pub radius: i64,
    pub t_n: Vec<u64>,
    pub rooted_n: Vec<u64>,
    /// Row-major over the box, `n_max + 1` coefficients per point.
    coeffs: Vec<u64>,
    pub nodes: u64,
}

impl TwoPointTable {
    fn cell(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.d || x.iter().any(|c| c.abs() > self.radius) {
            return None;
        }
        let side = 2 * self.radius + 1;
        Some(x.iter().fold(0i64, |acc, &c| acc * side + c + self.radius) as usize)
    }

    /// `c_n(x)` for `n = 0..=n_max`; zero outside the reach.
    pub fn coeffs(&self, x: &[i64]) -> Vec<u64> {
        let width = self.n_max + 1;
        match self.cell(x) {
            Some(c) => self.coeffs[c * width..(c + 1) * width].to_vec(),
            None => vec![0; width],
        }
    }

    pub fn series(&self, x: &[i64]) -> PolymerSeries {
        PolymerSeries::from_u64(self.omega, &self.coeffs(x))
    }

    /// Points with at least one nonzero coefficient, with their coefficients.
    pub fn support(&self) -> Vec<(Point, Vec<u64>)> {
        let width = self.n_max + 1;
        let side = (2 * self.radius + 1) as usize;
        let mut out = Vec::new();
        for (cell, chunk) in self.coeffs.chunks(width).enumerate() {
            if chunk.iter().any(|&c| c != 0) {
                let mut rest = cell;
                let mut x = vec![0i64; self.d];
                for slot in x.iter_mut().rev() {
                    *slot = (rest % side) as i64 - self.radius;
                    rest /= side;
                }
                out.push((x, chunk.to_vec()));
            }
        }
        out
    }

    /// `sum_x c_n(x)`.
    pub fn susceptibility(&self) -> PolymerSeries {
        let mut acc = vec![0u64; self.n_max + 1];
        for chunk in self.coeffs.chunks(self.n_max + 1) {
            add_into(&mut acc, chunk);
        }
        PolymerSeries::from_u64(self.omega, &acc)
    }

    /// `sum_x |x|^a c_n(x)` with the Euclidean norm.
    pub fn moment(&self, a: u32) -> PolymerSeries {
        let mut acc = vec![BigInt::from(0); self.n_max + 1];
        for (x, c) in self.support() {
            let r2: i64 = x.iter().map(|v| v * v).sum();
            let w = if a.is_multiple_of(2) {
                BigInt::from(r2).pow(a / 2)
            } else {
                // Odd powers of |x| are irrational in general; callers use even a.
                BigInt::from((r2 as f64).powf(a as f64 / 2.0).round() as i64)
            };
            for (slot, &cn) in acc.iter_mut().zip(&c) {
                *slot += &w * cn;
            }
        }
        PolymerSeries::new(self.omega, acc).with_weight(WeightSpec::Power { a })
    }

    /// `sum_x e^{m x_1} c_n(x)`.
    pub fn tilted(&self, m: f64) -> RealSeries {
        let mut acc = vec![0.0; self.n_max + 1];
        for (x, c) in self.support() {
            let w = (m * x[0] as f64).exp();
            for (slot, &cn) in acc.iter_mut().zip(&c) {
                *slot += w * cn as f64;
            }
        }
        RealSeries { omega: self.omega, weight: WeightSpec::Tilt { m }, coeffs: acc }
    }
}

pub fn enumerate_counts(kernel: &StepKernel, n_max: usize, model: Model) -> Result<Counts> {
    Enumerator::new(kernel, model, n_max).counts()
}

pub fn two_point_series(kernel: &StepKernel, n_max: usize, model: Model, x: &[i64]) -> Result<PolymerSeries> {
    if x.len() != kernel.dim() {
        return invalid(format!("point {x:?} does not have dimension {}", kernel.dim()));
    }
    Ok(Enumerator::new(kernel, model, n_max).two_point_table()?.series(x))
}

/// `G_p(0)`.
pub fn one_point_series(kernel: &StepKernel, n_max: usize, model: Model) -> Result<PolymerSeries> {
    two_point_series(kernel, n_max, model, &vec![0; kernel.dim()])
}

pub fn susceptibility_series(kernel: &StepKernel, n_max: usize, model: Model) -> Result<PolymerSeries> {
    Ok(Enumerator::new(kernel, model, n_max).two_point_table()?.susceptibility())
}

pub fn tilted_susceptibility_series(kernel: &StepKernel, n_max: usize, model: Model, m: f64) -> Result<RealSeries> {
    if !(m >= 0.0 && m.is_finite()) {
        return invalid(format!("tilt must be finite and nonnegative, got {m}"));
    }
    Ok(Enumerator::new(kernel, model, n_max).two_point_table()?.tilted(m))
}

/// Passes when the last coefficient ratio of each series, scaled by `p / Omega`,
/// is below one.
fn ratio_test(series: &[&PolymerSeries], p: f64) -> Result<()> {
    use num_traits::ToPrimitive;
    for s in series {
        let n = s.n_max();
        if n < 2 {
            return Err(Error::Truncation("ratio test needs at least three coefficients".into()));
        }
        let last = s.coeff(n).to_f64().unwrap_or(f64::INFINITY);
        let prev = s.coeff(n - 1).to_f64().unwrap_or(f64::INFINITY);
        if prev > 0.0 && last / prev * p / s.omega as f64 >= 1.0 {
            return Err(Error::Truncation(format!(
                "ratio test fails at p = {p}: c_{n}/c_{} * p/Omega = {}",
                n - 1,
                last / prev * p / s.omega as f64
            )));
        }
    }
    Ok(())
}

/// `xi_2(p) = sqrt(sum_x |x|^2 G_p(x) / chi(p))` from truncated series.
pub fn xi2_series_eval(kernel: &StepKernel, n_max: usize, model: Model, p: f64) -> Result<f64> {
    xi2_from_table(&Enumerator::new(kernel, model, n_max).two_point_table()?, p)
}

pub fn xi2_from_table(table: &TwoPointTable, p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return invalid(format!("activity must be nonnegative, got {p}"));
    }
    let chi = table.susceptibility();
    let second = table.moment(2);
    ratio_test(&[&chi, &second], p)?;
    Ok((second.eval_f64(p) / chi.eval_f64(p)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    /// `Omega / (t_N / t_{N-1})`; advisory, not a bound.
    pub estimate: f64,
    /// The last three ratios `t_n / t_{n-1}`.
    pub ratios: Vec<f64>,
}

pub fn pc_estimate(t_n: &[u64], omega: u64) -> Result<PcEstimate> {
    if t_n.len() < 5 {
        return invalid("p_c estimate needs n_max >= 4");
    }
    if t_n.contains(&0) {
        return invalid("p_c estimate needs nonzero counts");
    }
    let n = t_n.len() - 1;
    let ratios: Vec<f64> = (n - 2..=n).map(|k| t_n[k] as f64 / t_n[k - 1] as f64).collect();
    Ok(PcEstimate { estimate: omega as f64 / ratios[2], ratios })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    /// Pairs `(n, m)` with `n <= m` and `n + m + 1 <= n_max` that were checked.
    pub checked: usize,
    pub violations: Vec<(usize, usize)>,
    pub holds: bool,
}

/// Checks `t_n t_m <= t_{n+m+1}` wherever the right side is available.
pub fn check_subadditivity(t_n: &[u64]) -> SubadditivityReport {
    let mut checked = 0;
    let mut violations = Vec::new();
    for n in 0..t_n.len() {
        for m in n..t_n.len() {
            let k = n + m + 1;
            if k >= t_n.len() {
                break;
            }
            checked += 1;
            if t_n[n] as u128 * t_n[m] as u128 > t_n[k] as u128 {
                violations.push((n, m));
            }
        }
    }
    let holds = violations.is_empty();
    SubadditivityReport { checked, violations, holds }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimonLiebReport {
    pub n_max: usize,
    #[serde(with = "as_string")]
    pub p: BigRational,
    #[serde(with = "as_string")]
    pub lhs: BigRational,
    #[serde(with = "as_string")]
    pub rhs: BigRational,
    pub lhs_f64: f64,
    pub rhs_f64: f64,
    pub holds: bool,
    /// Number of `(y, z)` boundary pairs in the sum.
    pub boundary_pairs: usize,
}

/// Exact check of `G_p(x) <= sum_{y in Lambda, z not in Lambda} G_p(y) p D(z - y) G_p(x - z)`
/// with every factor truncated at `n_max`.
pub fn simon_lieb_check(
    kernel: &StepKernel,
    n_max: usize,
    model: Model,
    p: &BigRational,
    lambda: &[Point],
    x: &[i64],
) -> Result<SimonLiebReport> {
    let d = kernel.dim();
    if x.len() != d || lambda.iter().any(|y| y.len() != d) {
        return invalid("all points must have the kernel's dimension");
    }
    let set: BTreeSet<&Point> = lambda.iter().collect();
    if set.len() != lambda.len() {
        return invalid("Lambda contains duplicate points");
    }
    if !set.contains(&vec![0; d]) {
        return invalid("Lambda must contain the origin");
    }
    if set.contains(&x.to_vec()) {
        return invalid("x must lie outside Lambda");
    }
    let table = Enumerator::new(kernel, model, n_max).two_point_table()?;
    let lhs = table.series(x).eval_rational(p);
    let step = p / BigRational::from_integer(kernel.omega().into());
    let mut cache: HashMap<Point, BigRational> = HashMap::new();
    let mut eval = |pt: Point| -> BigRational {
        cache.entry(pt.clone()).or_insert_with(|| table.series(&pt).eval_rational(p)).clone()
    };
    let mut rhs = BigRational::from_integer(0.into());
    let mut boundary_pairs = 0;
    for y in lambda {
        let gy = eval(y.clone());
        for s in kernel.support() {
            let z: Point = y.iter().zip(&s).map(|(a, b)| a + b).collect();
            if set.contains(&z) {
                continue;
            }
            boundary_pairs += 1;
            let xz: Point = x.iter().zip(&z).map(|(a, b)| a - b).collect();
            rhs += &gy * &step * eval(xz);
        }
    }
    let holds = lhs <= rhs;
    Ok(SimonLiebReport {
        n_max,
        p: p.clone(),
        lhs_f64: crate::rational::to_f64(&lhs),
        rhs_f64: crate::rational::to_f64(&rhs),
        lhs,
        rhs,
        holds,
        boundary_pairs,
    })
}
