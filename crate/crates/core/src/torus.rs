//! Polymers on the discrete torus `T_r^d`, their canonical lift to `Z^d`, and
//! exact comparisons between torus and `Z^d` two-point functions.
//!
//! Torus points are stored as representatives in `[-r/2, r/2)^d`; "torus order"
//! is the lexicographic order of these representatives, and steps in
//! `[-L, L]^d \ {0}` are ordered lexicographically as well.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::enumerate::{add_into, Enumerator, Model, Point, Polymer};
use crate::error::{invalid, Error, Result};
use crate::fields::{torus_rep, Geometry};
use crate::greens::{so_mass, green_field, Walk};
use crate::kernel::StepKernel;
use crate::rational::as_string;
use crate::search::{SearchGraph, Tally, View};
use crate::series::PolymerSeries;

/// Representative of `x` in `[-r/2, r/2)^d`.
pub fn reduce(x: &[i64], r: usize) -> Point {
    x.iter().map(|&c| torus_rep(c, r)).collect()
}

/// Row-major index of `x mod r` over `0..r` per coordinate.
pub fn torus_index(x: &[i64], r: usize) -> usize {
    x.iter().fold(0usize, |acc, &c| acc * r + c.rem_euclid(r as i64) as usize)
}

fn step_between(u: &[i64], v: &[i64], r: usize) -> Point {
    u.iter().zip(v).map(|(a, b)| torus_rep(b - a, r)).collect()
}

fn add(u: &[i64], s: &[i64]) -> Point {
    u.iter().zip(s).map(|(a, b)| a + b).collect()
}

fn check_period(range: u32, r: usize) -> Result<()> {
    if r < 2 * range as usize + 1 {
        return invalid(format!("torus period {r} is below 2L+1 = {}", 2 * range + 1));
    }
    Ok(())
}

/// A connected subgraph of the spread-out torus graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorusPolymer {
    model: Model,
    range: u32,
    period: usize,
    vertices: Vec<Point>,
    /// `(u, v)` with `u < v` in torus order; sorted.
    edges: Vec<(Point, Point)>,
}

impl TorusPolymer {
    /// The 0-bond polymer at `x`.
    pub fn single(model: Model, range: u32, period: usize, x: &[i64]) -> Result<Self> {
        check_period(range, period)?;
        Ok(Self { model, range, period, vertices: vec![reduce(x, period)], edges: Vec::new() })
    }

    /// Validates steps, connectivity and (for trees) acyclicity. Coordinates may be
    /// given in any residue; they are reduced to representatives.
    pub fn new(model: Model, range: u32, period: usize, edges: Vec<(Point, Point)>) -> Result<Self> {
        check_period(range, period)?;
        if edges.is_empty() {
            return Err(Error::InvalidPolymer("use TorusPolymer::single for the 0-bond polymer".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let (a, b) = (reduce(&a, period), reduce(&b, period));
            let s = step_between(&a, &b, period);
            let span = s.iter().map(|c| c.abs()).max().unwrap_or(0);
            if span == 0 || span > range as i64 {
                return Err(Error::InvalidPolymer(format!("torus edge {a:?}-{b:?} is not a spread-out bond")));
            }
            set.insert(if a < b { (a, b) } else { (b, a) });
        }
        let poly = Self::from_parts(model, range, period, set.into_iter().collect());
        if !poly.is_connected() {
            return Err(Error::InvalidPolymer("torus edge set is not connected".into()));
        }
        if model == Model::Tree && !poly.is_acyclic() {
            return Err(Error::InvalidPolymer("torus tree contains a cycle".into()));
        }
        Ok(poly)
    }

    fn from_parts(model: Model, range: u32, period: usize, edges: Vec<(Point, Point)>) -> Self {
        let vertices: Vec<Point> =
            edges.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect::<BTreeSet<_>>().into_iter().collect();
        Self { model, range, period, vertices, edges }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn range(&self) -> u32 {
        self.range
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

    pub fn contains(&self, x: &[i64]) -> bool {
        self.vertices.binary_search(&reduce(x, self.period)).is_ok()
    }

    pub fn is_acyclic(&self) -> bool {
        self.edges.len() + 1 == self.vertices.len()
    }

    fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = BTreeSet::from([self.vertices[0].clone()]);
        let mut stack = vec![self.vertices[0].clone()];
        while let Some(u) = stack.pop() {
            for (_, w) in &adj[&u] {
                if seen.insert(w.clone()) {
                    stack.push(w.clone());
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Neighbours of each vertex as `(step, neighbour)`, sorted by step.
    fn adjacency(&self) -> BTreeMap<Point, Vec<(Point, Point)>> {
        let mut adj: BTreeMap<Point, Vec<(Point, Point)>> =
            self.vertices.iter().map(|v| (v.clone(), Vec::new())).collect();
        for (a, b) in &self.edges {
            adj.get_mut(a).unwrap().push((step_between(a, b, self.period), b.clone()));
            adj.get_mut(b).unwrap().push((step_between(b, a, self.period), a.clone()));
        }
        for list in adj.values_mut() {
            list.sort();
        }
        adj
    }

    fn root(&self) -> Point {
        vec![0; self.vertices[0].len()]
    }
}

/// Reduces a `Z^d` polymer modulo `r`; parallel edges collapse. A tree whose
/// projection closes a cycle is returned with the animal model.
pub fn project(polymer: &Polymer, range: u32, r: usize) -> Result<TorusPolymer> {
    check_period(range, r)?;
    if polymer.bonds() == 0 {
        return TorusPolymer::single(polymer.model(), range, r, &polymer.vertices()[0]);
    }
    let edges: BTreeSet<(Point, Point)> = polymer
        .edges()
        .iter()
        .map(|(a, b)| {
            let (a, b) = (reduce(a, r), reduce(b, r));
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    let mut out = TorusPolymer::from_parts(polymer.model(), range, r, edges.into_iter().collect());
    if out.model == Model::Tree && !out.is_acyclic() {
        out.model = Model::Animal;
    }
    Ok(out)
}

/// Lifts a torus walk `omega(0) = 0, omega(1), ...` by copying each increment's
/// representative in `[-L, L]^d`.
pub fn lift_walk(walk: &[Point], range: u32, r: usize) -> Result<Vec<Point>> {
    check_period(range, r)?;
    let Some(first) = walk.first() else {
        return invalid("walk must contain at least its starting point");
    };
    if reduce(first, r).iter().any(|&c| c != 0) {
        return invalid("walk must start at the origin");
    }
    let mut out = vec![vec![0; first.len()]];
    for pair in walk.windows(2) {
        let s = step_between(&pair[0], &pair[1], r);
        let span = s.iter().map(|c| c.abs()).max().unwrap_or(0);
        if span == 0 || span > range as i64 {
            return invalid(format!("{:?} -> {:?} is not a spread-out step", pair[0], pair[1]));
        }
        let next = add(out.last().unwrap(), &s);
        out.push(next);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftResult {
    pub zd_polymer: Polymer,
    pub base: TorusPolymer,
    /// No two vertices of the lift are torus-equivalent.
    pub faithful: bool,
}

fn finish_lift(base: &TorusPolymer, edges: Vec<(Point, Point)>, model: Model) -> Result<LiftResult> {
    let zd_polymer = if edges.is_empty() {
        Polymer::single(model, base.root())
    } else {
        Polymer::new(model, base.range, edges)?
    };
    let mut classes = HashSet::new();
    let faithful = zd_polymer.vertices().iter().all(|v| classes.insert(reduce(v, base.period)));
    Ok(LiftResult { zd_polymer, base: base.clone(), faithful })
}

/// Lifts every vertex along its unique tree path from the origin.
pub fn lift_tree(tree: &TorusPolymer) -> Result<LiftResult> {
    let root = tree.root();
    if !tree.contains(&root) {
        return Err(Error::InvalidPolymer("tree must contain the origin".into()));
    }
    if !tree.is_acyclic() {
        return Err(Error::InvalidPolymer("input is not a tree".into()));
    }
    let adj = tree.adjacency();
    let mut lifted: BTreeMap<Point, Point> = BTreeMap::from([(root.clone(), root.clone())]);
    let mut queue = std::collections::VecDeque::from([root]);
    let mut edges = Vec::new();
    while let Some(u) = queue.pop_front() {
        let lu = lifted[&u].clone();
        for (s, w) in &adj[&u] {
            if !lifted.contains_key(w) {
                let lw = add(&lu, s);
                edges.push((lu.clone(), lw.clone()));
                lifted.insert(w.clone(), lw);
                queue.push_back(w.clone());
            }
        }
    }
    finish_lift(tree, edges, tree.model)
}

/// Lifts an animal through its canonical spanning tree: repeatedly take the first
/// tree vertex (torus order) with an edge leaving the tree, and the first such
/// edge (step order). Excess edges `{u, v}`, `u < v`, lift to `{u^, u^ + (v - u)}`.
pub fn lift_animal(animal: &TorusPolymer) -> Result<LiftResult> {
    let root = animal.root();
    if !animal.contains(&root) {
        return Err(Error::InvalidPolymer("animal must contain the origin".into()));
    }
    let adj = animal.adjacency();
    let mut lifted: BTreeMap<Point, Point> = BTreeMap::from([(root.clone(), root)]);
    let mut tree_edges: BTreeSet<(Point, Point)> = BTreeSet::new();
    while lifted.len() < animal.vertices.len() {
        let next = lifted
            .keys()
            .find_map(|u| adj[u].iter().find(|(_, w)| !lifted.contains_key(w)).map(|(s, w)| (u.clone(), s.clone(), w.clone())));
        let Some((u, s, w)) = next else {
            return Err(Error::InvalidPolymer("animal is not connected".into()));
        };
        let lw = add(&lifted[&u], &s);
        lifted.insert(w.clone(), lw);
        tree_edges.insert(if u < w { (u, w) } else { (w, u) });
    }
    let mut edges = Vec::new();
    for (u, v) in &animal.edges {
        let lu = lifted[u].clone();
        if tree_edges.contains(&(u.clone(), v.clone())) {
            edges.push((lu, lifted[v].clone()));
        } else {
            let s = step_between(u, v, animal.period);
            let end = add(&lu, &s);
            edges.push((lu, end));
        }
    }
    finish_lift(animal, edges, Model::Animal)
}

/// Lift matching the polymer's model.
pub fn lift(polymer: &TorusPolymer) -> Result<LiftResult> {
    match polymer.model {
        Model::Tree => lift_tree(polymer),
        Model::Animal => lift_animal(polymer),
    }
}

struct TorusHits {
    r: usize,
    cells: usize,
    table: Vec<u64>,
}

impl Tally for TorusHits {
    fn fresh(&self) -> Self {
        Self { r: self.r, cells: self.cells, table: vec![0; self.table.len()] }
    }
    fn visit(&mut self, n: usize, view: &View) {
        for &v in view.verts {
            self.table[n * self.cells + v as usize] += 1;
        }
    }
    fn merge(&mut self, other: Self) {
        add_into(&mut self.table, &other.table);
    }
}

struct TorusCollect {
    model: Model,
    range: u32,
    r: usize,
    found: Vec<TorusPolymer>,
}

impl Tally for TorusCollect {
    fn fresh(&self) -> Self {
        Self { model: self.model, range: self.range, r: self.r, found: Vec::new() }
    }
    fn visit(&mut self, _: usize, view: &View) {
        let g = view.graph;
        let poly = if view.edges.is_empty() {
            TorusPolymer { model: self.model, range: self.range, period: self.r, vertices: vec![g.point(g.root).to_vec()], edges: vec![] }
        } else {
            let edges = view
                .edges
                .iter()
                .map(|&e| {
                    let [a, b] = g.endpoints[e as usize];
                    let (a, b) = (g.point(a).to_vec(), g.point(b).to_vec());
                    if a < b {
                        (a, b)
                    } else {
                        (b, a)
                    }
                })
                .collect::<BTreeSet<_>>();
            TorusPolymer::from_parts(self.model, self.range, self.r, edges.into_iter().collect())
        };
        self.found.push(poly);
    }
    fn merge(&mut self, other: Self) {
        self.found.extend(other.found);
    }
}

/// Counts `c^T_n(x)` of torus polymers containing `0` and `x`, for all `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusTable {
    pub d: usize,
    pub period: usize,
    pub omega: u64,
    pub n_max: usize,
    pub model: Model,
    /// `table[n * r^d + torus_index(x)]`.
    table: Vec<u64>,
    pub nodes: u64,
}

impl TorusTable {
    pub fn coeffs(&self, x: &[i64]) -> Vec<u64> {
        let cells = self.period.pow(self.d as u32);
        let i = torus_index(x, self.period);
        (0..=self.n_max).map(|n| self.table[n * cells + i]).collect()
    }

    pub fn series(&self, x: &[i64]) -> PolymerSeries {
        PolymerSeries::from_u64(self.omega, &self.coeffs(x))
    }

    pub fn susceptibility(&self) -> PolymerSeries {
        let cells = self.period.pow(self.d as u32);
        let acc: Vec<u64> = (0..=self.n_max).map(|n| self.table[n * cells..(n + 1) * cells].iter().sum()).collect();
        PolymerSeries::from_u64(self.omega, &acc)
    }
}

fn torus_search(kernel: &StepKernel, r: usize, n_max: usize, model: Model) -> Result<(Enumerator, SearchGraph)> {
    check_period(kernel.range(), r)?;
    let e = Enumerator::new(kernel, model, n_max);
    let g = SearchGraph::torus(kernel.dim(), kernel.range() as i64, r);
    Ok((e, g))
}

pub fn torus_table(kernel: &StepKernel, r: usize, n_max: usize, model: Model) -> Result<TorusTable> {
    let (e, g) = torus_search(kernel, r, n_max, model)?;
    let cells = r.pow(kernel.dim() as u32);
    let seed = TorusHits { r, cells, table: vec![0; cells * (n_max + 1)] };
    let (tally, nodes) = e.run(&g, seed)?;
    Ok(TorusTable { d: kernel.dim(), period: r, omega: kernel.omega(), n_max, model, table: tally.table, nodes })
}

pub fn torus_two_point_series(kernel: &StepKernel, r: usize, n_max: usize, model: Model, x: &[i64]) -> Result<PolymerSeries> {
    if x.len() != kernel.dim() {
        return invalid("point dimension does not match the kernel");
    }
    Ok(torus_table(kernel, r, n_max, model)?.series(x))
}

/// All torus polymers with at most `n_max` bonds containing the origin.
pub fn torus_polymers(kernel: &StepKernel, r: usize, n_max: usize, model: Model) -> Result<Vec<TorusPolymer>> {
    let (e, g) = torus_search(kernel, r, n_max, model)?;
    let seed = TorusCollect { model, range: kernel.range(), r, found: Vec::new() };
    let (tally, _) = crate::search::run(&g, crate::search::SearchParams { split: 0, ..e.params() }, seed)?;
    let mut out = tally.found;
    out.sort();
    Ok(out)
}

/// Weighted residue-pair tally behind the exclusion series `E`.
struct ExcessTally {
    r: usize,
    residues: Arc<Vec<usize>>,
    digits: Arc<Vec<i64>>,
    dim: usize,
    cells: usize,
    table: Vec<u64>,
}

impl Tally for ExcessTally {
    fn fresh(&self) -> Self {
        Self {
            r: self.r,
            residues: Arc::clone(&self.residues),
            digits: Arc::clone(&self.digits),
            dim: self.dim,
            cells: self.cells,
            table: vec![0; self.table.len()],
        }
    }
    fn visit(&mut self, n: usize, view: &View) {
        let mut res: Vec<usize> = view.verts.iter().map(|&v| self.residues[v as usize]).collect();
        res.sort_unstable();
        let mut pairs = 0u64;
        let mut i = 0;
        while i < res.len() {
            let j = res[i..].iter().position(|&c| c != res[i]).map_or(res.len(), |k| i + k);
            let k = (j - i) as u64;
            pairs += k * (k - 1);
            i = j;
        }
        if pairs == 0 {
            return;
        }
        let r = self.r as i64;
        for &w in view.verts {
            let dw = &self.digits[w as usize * self.dim..(w as usize + 1) * self.dim];
            for &x in view.verts {
                let dx = &self.digits[x as usize * self.dim..(x as usize + 1) * self.dim];
                let cell = dw.iter().zip(dx).fold(0usize, |acc, (a, b)| acc * self.r + (b - a).rem_euclid(r) as usize);
                self.table[n * self.cells + cell] += pairs;
            }
        }
    }
    fn merge(&mut self, other: Self) {
        add_into(&mut self.table, &other.table);
    }
}

/// `psi` and `E` coefficients at `x` together with the `Z^d` two-point table used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessSeries {
    pub psi: PolymerSeries,
    pub big_e: PolymerSeries,
    /// `n_max < r - L`: no polymer is wide enough to wrap.
    pub trivial: bool,
}

fn excess_from(
    kernel: &StepKernel,
    r: usize,
    n_max: usize,
    model: Model,
    x: &[i64],
    table: &crate::enumerate::TwoPointTable,
) -> Result<ExcessSeries> {
    let d = kernel.dim();
    let x = reduce(x, r);
    let mut psi = vec![0u64; n_max + 1];
    for (y, c) in table.support() {
        if reduce(&y, r) == x && y != x {
            add_into(&mut psi, &c);
        }
    }
    let reach = n_max as i64 * kernel.range() as i64;
    let graph = SearchGraph::lattice_box(d, kernel.range() as i64, reach, true);
    let residues: Vec<usize> = (0..graph.n_vertices() as u32).map(|v| torus_index(graph.point(v), r)).collect();
    let digits: Vec<i64> = graph.coords.clone();
    let cells = r.pow(d as u32);
    let seed = ExcessTally {
        r,
        residues: Arc::new(residues),
        digits: Arc::new(digits),
        dim: d,
        cells,
        table: vec![0; cells * (n_max + 1)],
    };
    let (tally, _) = Enumerator::new(kernel, model, n_max).run(&graph, seed)?;
    let xi = torus_index(&x, r);
    let big_e: Vec<u64> = (0..=n_max).map(|n| tally.table[n * cells + xi]).collect();
    Ok(ExcessSeries {
        psi: PolymerSeries::from_u64(kernel.omega(), &psi),
        big_e: PolymerSeries::from_u64(kernel.omega(), &big_e),
        trivial: (n_max as i64) < r as i64 - kernel.range() as i64,
    })
}

pub fn excess_series(kernel: &StepKernel, r: usize, n_max: usize, model: Model, x: &[i64]) -> Result<ExcessSeries> {
    check_period(kernel.range(), r)?;
    if x.len() != kernel.dim() {
        return invalid("point dimension does not match the kernel");
    }
    let table = Enumerator::new(kernel, model, n_max).two_point_table()?;
    excess_from(kernel, r, n_max, model, x, &table)
}

/// `psi_n(x)`: polymers containing `0` and some `x' = x mod r` with `x' != x`.
pub fn psi_series(kernel: &StepKernel, r: usize, n_max: usize, model: Model, x: &[i64]) -> Result<PolymerSeries> {
    Ok(excess_series(kernel, r, n_max, model, x)?.psi)
}

/// `E_n(x)`: tuples `(polymer, x', y, y')` with `0, x', y, y'` in the polymer,
/// `x' = x` and `y' = y != y'` modulo `r`.
pub fn big_e_series(kernel: &StepKernel, r: usize, n_max: usize, model: Model, x: &[i64]) -> Result<PolymerSeries> {
    Ok(excess_series(kernel, r, n_max, model, x)?.big_e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub x: Point,
    pub n_max: usize,
    #[serde(with = "as_string")]
    pub p: BigRational,
    pub torus: PolymerSeries,
    pub zd: PolymerSeries,
    pub psi: PolymerSeries,
    pub big_e: PolymerSeries,
    /// `psi_n - E_n <= c^T_n - c_n` for every `n`.
    pub lower_coefficientwise: bool,
    /// `c^T_n - c_n <= psi_n` for every `n`.
    pub upper_coefficientwise: bool,
    #[serde(with = "as_string")]
    pub lower_value: BigRational,
    #[serde(with = "as_string")]
    pub difference_value: BigRational,
    #[serde(with = "as_string")]
    pub upper_value: BigRational,
    pub lower_at_p: bool,
    pub upper_at_p: bool,
    pub trivial: bool,
    pub holds: bool,
}

/// Exact check of `psi - E <= G^T - G <= psi` at `x`, all series truncated at `n_max`.
pub fn sandwich_check(
    kernel: &StepKernel,
    r: usize,
    n_max: usize,
    model: Model,
    x: &[i64],
    p: &BigRational,
) -> Result<SandwichReport> {
    check_period(kernel.range(), r)?;
    if x.len() != kernel.dim() {
        return invalid("point dimension does not match the kernel");
    }
    let x = reduce(x, r);
    let zd_table = Enumerator::new(kernel, model, n_max).two_point_table()?;
    let excess = excess_from(kernel, r, n_max, model, &x, &zd_table)?;
    sandwich_from(&torus_table(kernel, r, n_max, model)?, &zd_table.series(&x), excess, x, p)
}

fn sandwich_from(
    torus: &TorusTable,
    zd: &PolymerSeries,
    excess: ExcessSeries,
    x: Point,
    p: &BigRational,
) -> Result<SandwichReport> {
    let torus_s = torus.series(&x);
    let diff = torus_s.sub(zd)?;
    let lower = excess.psi.sub(&excess.big_e)?;
    let lower_coefficientwise = lower.exceedances(&diff)?.is_empty();
    let upper_coefficientwise = diff.exceedances(&excess.psi)?.is_empty();
    let lower_value = lower.eval_rational(p);
    let difference_value = diff.eval_rational(p);
    let upper_value = excess.psi.eval_rational(p);
    let lower_at_p = lower_value <= difference_value;
    let upper_at_p = difference_value <= upper_value;
    Ok(SandwichReport {
        x,
        n_max: torus.n_max,
        p: p.clone(),
        torus: torus_s,
        zd: zd.clone(),
        psi: excess.psi,
        big_e: excess.big_e,
        lower_coefficientwise,
        upper_coefficientwise,
        lower_value,
        difference_value,
        upper_value,
        lower_at_p,
        upper_at_p,
        trivial: excess.trivial,
        holds: lower_coefficientwise && upper_coefficientwise && lower_at_p && upper_at_p,
    })
}

/// Runs [`sandwich_check`] at every `x` in `Lambda_r`, sharing the enumerations.
pub fn sandwich_all(kernel: &StepKernel, r: usize, n_max: usize, model: Model, p: &BigRational) -> Result<Vec<SandwichReport>> {
    check_period(kernel.range(), r)?;
    let zd_table = Enumerator::new(kernel, model, n_max).two_point_table()?;
    let torus = torus_table(kernel, r, n_max, model)?;
    Geometry::Torus { dim: kernel.dim(), period: r }
        .points()
        .into_iter()
        .map(|x| {
            let excess = excess_from(kernel, r, n_max, model, &x, &zd_table)?;
            sandwich_from(&torus, &zd_table.series(&x), excess, x, p)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WrapReport {
    pub k: usize,
    pub period: usize,
    pub box_radius: usize,
    /// `1/(1-z) - sum_x S_z(x)` over the stored box.
    pub truncated_mass: f64,
    /// `max_x |Gamma^{*k}(x) - sum_u S^{*k}(x + r u)|`.
    pub discrepancy: f64,
}

/// Compares `Gamma^{*k}` (torus convolution of the wrapped walk function) with the
/// wrap of the `k`-fold `Z^d` convolution.
pub fn wrap_identity_check(kernel: &StepKernel, z: f64, r: usize, k: usize) -> Result<WrapReport> {
    if !(1..=4).contains(&k) {
        return invalid(format!("fold k must be in 1..=4, got {k}"));
    }
    let m = so_mass(kernel, z)?.m;
    let radius = ((30.0 / m).ceil() as usize).max(2 * kernel.range() as usize).max(r / 2 + 1);
    let grid = (4 * radius + 8).next_power_of_two();
    let s = green_field(&Walk::SpreadOut(kernel.clone()), z, grid)?.to_box(radius)?;
    if 2 * radius + 1 < r {
        return invalid(format!("box radius {radius} is too small for period {r}"));
    }
    let gamma = s.wrap_sum(r)?;
    let mut torus_path = gamma.clone();
    let mut zd_path = s.clone();
    for _ in 1..k {
        torus_path = torus_path.torus_convolve(&gamma)?;
        zd_path = zd_path.zd_convolve(&s, None)?;
    }
    let wrapped = zd_path.wrap_sum(r)?;
    let discrepancy = torus_path.combine(1.0, &wrapped, -1.0)?.sup_norm();
    Ok(WrapReport { k, period: r, box_radius: radius, truncated_mass: 1.0 / (1.0 - z) - s.sum(), discrepancy })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftAudit {
    pub d: usize,
    pub range: u32,
    pub period: usize,
    pub n_max: usize,
    pub model: Model,
    pub torus_polymers: usize,
    /// `project(lift(A)) = A` for every enumerated torus polymer.
    pub round_trip: bool,
    pub injective: bool,
    pub faithful_lifts: usize,
    /// `Z^d` polymers containing the origin without torus-equivalent vertices.
    pub lemma_pool: usize,
    /// Each pool member equals the lift of its projection.
    pub lemma_holds: bool,
    pub failures: Vec<String>,
}

impl LiftAudit {
    pub fn passed(&self) -> bool {
        self.round_trip && self.injective && self.lemma_holds
    }
}

pub fn lift_audit(kernel: &StepKernel, r: usize, n_max: usize, model: Model) -> Result<LiftAudit> {
    const MAX_REPORTED: usize = 5;
    let inputs = torus_polymers(kernel, r, n_max, model)?;
    let mut failures = Vec::new();
    let mut seen = HashSet::new();
    let (mut round_trip, mut injective, mut faithful_lifts) = (true, true, 0);
    for a in &inputs {
        let l = lift(a)?;
        faithful_lifts += l.faithful as usize;
        if &project(&l.zd_polymer, kernel.range(), r)? != a {
            round_trip = false;
            if failures.len() < MAX_REPORTED {
                failures.push(format!("round trip failed for {a:?}"));
            }
        }
        if !seen.insert(l.zd_polymer) {
            injective = false;
            if failures.len() < MAX_REPORTED {
                failures.push(format!("lift collision at {a:?}"));
            }
        }
    }
    let pool: Vec<Polymer> = Enumerator::new(kernel, model, n_max)
        .rooted_polymers()?
        .into_iter()
        .filter(|p| {
            let mut classes = HashSet::new();
            p.vertices().iter().all(|v| classes.insert(reduce(v, r)))
        })
        .collect();
    let mut lemma_holds = true;
    for a in &pool {
        let back = lift(&project(a, kernel.range(), r)?)?.zd_polymer;
        if &back != a {
            lemma_holds = false;
            if failures.len() < MAX_REPORTED {
                failures.push(format!("lift of projection differs for {a:?}"));
            }
        }
    }
    Ok(LiftAudit {
        d: kernel.dim(),
        range: kernel.range(),
        period: r,
        n_max,
        model,
        torus_polymers: inputs.len(),
        round_trip,
        injective,
        faithful_lifts,
        lemma_pool: pool.len(),
        lemma_holds,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn kernel(d: usize, l: u32) -> StepKernel {
        StepKernel::new(d, l).unwrap()
    }

    fn e1(a: i64, b: i64) -> (Point, Point) {
        (vec![a], vec![b])
    }

    #[test]
    fn indices_and_reduction() {
        assert_eq!(reduce(&[4, -3], 5), vec![-1, 2]);
        assert_eq!(reduce(&[2, 3], 4), vec![-2, -1]);
        assert_eq!(torus_index(&[-1, 2], 3), 2 * 3 + 2);
    }

    #[test]
    fn walk_lift_examples() {
        let walk = vec![vec![0], vec![4], vec![3]];
        assert_eq!(lift_walk(&walk, 1, 5).unwrap(), vec![vec![0], vec![-1], vec![-2]]);
        assert_eq!(lift_walk(&[vec![0]], 1, 5).unwrap(), vec![vec![0]]);
        assert!(lift_walk(&[vec![0], vec![2]], 1, 5).is_err());
        assert!(lift_walk(&[vec![1]], 1, 5).is_err());
        let walk = vec![vec![0, 0], vec![1, 2], vec![2, 1], vec![0, 0]];
        let lifted = lift_walk(&walk, 1, 3).unwrap();
        let back: Vec<Point> = lifted.iter().map(|p| reduce(p, 3)).collect();
        assert_eq!(back, walk.iter().map(|p| reduce(p, 3)).collect::<Vec<_>>());
    }

    #[test]
    fn projection_and_tree_lift() {
        let path = Polymer::new(Model::Tree, 1, vec![e1(0, 1), e1(1, 2)]).unwrap();
        let t = project(&path, 1, 3).unwrap();
        assert_eq!(t.vertices(), &[vec![-1], vec![0], vec![1]]);
        assert_eq!(lift_tree(&t).unwrap().zd_polymer, path);
        let wrap = Polymer::new(Model::Tree, 1, vec![e1(0, 1), e1(1, 2), e1(2, 3)]).unwrap();
        assert_eq!(project(&wrap, 1, 3).unwrap().model(), Model::Animal);
        let single = TorusPolymer::single(Model::Tree, 1, 3, &[0]).unwrap();
        assert_eq!(lift_tree(&single).unwrap().zd_polymer, Polymer::single(Model::Tree, vec![0]));
        assert!(project(&path, 1, 2).is_err());
    }

    #[test]
    fn animal_lift_breaks_wrapping_cycle() {
        let cycle = TorusPolymer::new(Model::Animal, 1, 3, vec![e1(0, 1), e1(1, 2), e1(2, 0)]).unwrap();
        let l = lift_animal(&cycle).unwrap();
        assert!(l.zd_polymer.is_acyclic());
        assert!(!l.faithful);
        assert_eq!(project(&l.zd_polymer, 1, 3).unwrap(), cycle);
        let square = TorusPolymer::new(
            Model::Animal,
            1,
            5,
            vec![(vec![0, 0], vec![1, 0]), (vec![1, 0], vec![1, 1]), (vec![1, 1], vec![0, 1]), (vec![0, 1], vec![0, 0])],
        )
        .unwrap();
        let l = lift_animal(&square).unwrap();
        assert!(l.faithful && !l.zd_polymer.is_acyclic());
        let tree = TorusPolymer::new(Model::Animal, 1, 5, vec![e1(0, 1), e1(0, -1)]).unwrap();
        assert_eq!(lift_animal(&tree).unwrap().zd_polymer, lift_tree(&tree).unwrap().zd_polymer);
    }

    #[test]
    fn wrapping_cycle_on_two_dimensional_torus() {
        // Straight cycle around the first axis of T_5^2 plus a bond off the cycle.
        let mut edges: Vec<(Point, Point)> = (0..5).map(|i| (vec![i, 0], vec![i + 1, 0])).collect();
        edges.push((vec![0, 0], vec![0, 1]));
        let a = TorusPolymer::new(Model::Animal, 1, 5, edges).unwrap();
        let l = lift_animal(&a).unwrap();
        assert_eq!(project(&l.zd_polymer, 1, 5).unwrap(), a);
        assert_eq!(l.zd_polymer.bonds(), 6);
        assert!(l.zd_polymer.is_acyclic());
    }

    #[test]
    fn torus_tables() {
        let k = kernel(1, 1);
        let t = torus_table(&k, 3, 5, Model::Tree).unwrap();
        for x in [0, 1, 2] {
            let c = t.coeffs(&[x]);
            assert!(c[3..].iter().all(|&v| v == 0));
        }
        let total: Vec<u64> = [0i64, 1, 2].iter().fold(vec![0; 6], |mut acc, &x| {
            add_into(&mut acc, &t.coeffs(&[x]));
            acc
        });
        assert_eq!(PolymerSeries::from_u64(2, &total), t.susceptibility());
        let big = torus_two_point_series(&k, 13, 5, Model::Tree, &[2]).unwrap();
        let zd = crate::enumerate::two_point_series(&k, 5, Model::Tree, &[2]).unwrap();
        assert_eq!(big, zd);
        assert!(torus_table(&k, 2, 3, Model::Tree).is_err());
    }

    #[test]
    fn wrapping_can_remove_polymers() {
        // Three-bond paths through 0 and 1 close the 3-cycle, so no torus tree exists.
        let k = kernel(1, 1);
        let torus = torus_two_point_series(&k, 3, 3, Model::Tree, &[1]).unwrap();
        let zd = crate::enumerate::two_point_series(&k, 3, Model::Tree, &[1]).unwrap();
        assert_eq!(torus.coeff(3), &0.into());
        assert_eq!(zd.coeff(3), &3.into());
    }

    #[test]
    fn psi_on_the_line() {
        let k = kernel(1, 1);
        let ex = excess_series(&k, 3, 4, Model::Tree, &[0]).unwrap();
        // Paths with n bonds containing 0 and 3j, j != 0: 2 (n + 1 - 3) placements for n >= 3.
        let want: Vec<u64> = (0..=4u64).map(|n| if n >= 3 { 2 * (n - 2) } else { 0 }).collect();
        assert_eq!(ex.psi, PolymerSeries::from_u64(2, &want));
        let trivial = excess_series(&k, 5, 3, Model::Tree, &[1]).unwrap();
        assert!(trivial.trivial && trivial.psi.degree().is_none() && trivial.big_e.degree().is_none());
    }

    #[test]
    fn sandwich_small() {
        let k = kernel(1, 1);
        let p = parse_rational("1/8").unwrap();
        let rep = sandwich_check(&k, 3, 5, Model::Tree, &[1], &p).unwrap();
        assert!(rep.holds, "{rep:?}");
        let far = sandwich_check(&k, 13, 5, Model::Tree, &[1], &p).unwrap();
        assert!(far.trivial && far.holds && far.difference_value == BigRational::from_integer(0.into()));
    }

    #[test]
    fn wrap_identity_small() {
        let r = wrap_identity_check(&kernel(1, 1), 0.5, 6, 2).unwrap();
        assert!(r.discrepancy <= 1e-8, "{r:?}");
        let r1 = wrap_identity_check(&kernel(1, 1), 0.5, 6, 1).unwrap();
        assert_eq!(r1.discrepancy, 0.0);
        assert!(wrap_identity_check(&kernel(1, 1), 0.5, 6, 5).is_err());
    }

    #[test]
    fn lift_audit_small() {
        for model in [Model::Tree, Model::Animal] {
            let audit = lift_audit(&kernel(1, 1), 3, 4, model).unwrap();
            assert!(audit.passed(), "{audit:?}");
            assert!(audit.lemma_pool > 0);
        }
    }
}
