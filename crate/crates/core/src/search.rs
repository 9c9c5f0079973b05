//! Redelmeier-style search over connected edge sets containing a root vertex.
//!
//! Edge sets are grown on the line graph extended by a virtual root adjacent to
//! every edge at the root vertex, so each connected edge set touching the root is
//! produced exactly once. Restricting the allowed edges to a half-space yields one
//! representative per translation class.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{cube_points, increment};

/// Vertices of a finite graph with integer coordinates and an explicit edge list.
pub(crate) struct SearchGraph {
    pub dim: usize,
    pub coords: Vec<i64>,
    pub endpoints: Vec<[u32; 2]>,
    pub incident: Vec<Vec<u32>>,
    pub root: u32,
}

impl SearchGraph {
    pub fn n_vertices(&self) -> usize {
        self.incident.len()
    }

    pub fn point(&self, v: u32) -> &[i64] {
        let start = v as usize * self.dim;
        &self.coords[start..start + self.dim]
    }

    fn build(dim: usize, points: Vec<Vec<i64>>, root: u32, edges: Vec<[u32; 2]>) -> Self {
        let mut incident = vec![Vec::new(); points.len()];
        for (id, &[a, b]) in edges.iter().enumerate() {
            incident[a as usize].push(id as u32);
            incident[b as usize].push(id as u32);
        }
        let coords = points.into_iter().flatten().collect();
        Self { dim, coords, endpoints: edges, incident, root }
    }

    /// Spread-out graph on the box `[-radius, radius]^d`. With `half_space` only
    /// edges whose endpoints are both lexicographically `>= 0` are kept.
    pub fn lattice_box(dim: usize, range: i64, radius: i64, half_space: bool) -> Self {
        let side = (2 * radius + 1) as usize;
        let points = cube_points(dim, radius);
        let index = |x: &[i64]| -> Option<u32> {
            let mut id = 0usize;
            for &c in x {
                if c.abs() > radius {
                    return None;
                }
                id = id * side + (c + radius) as usize;
            }
            Some(id as u32)
        };
        let steps: Vec<Vec<i64>> = cube_points(dim, range).into_iter().filter(|s| s > &vec![0; dim]).collect();
        let zero = vec![0i64; dim];
        let mut edges = Vec::new();
        for (a, x) in points.iter().enumerate() {
            if half_space && x < &zero {
                continue;
            }
            for s in &steps {
                let y: Vec<i64> = x.iter().zip(s).map(|(p, q)| p + q).collect();
                if let Some(b) = index(&y) {
                    edges.push([a as u32, b]);
                }
            }
        }
        let root = index(&zero).unwrap();
        Self::build(dim, points, root, edges)
    }

    /// Spread-out graph on the torus of period `r`, vertices labelled by their
    /// representatives in `[-r/2, r/2)^d` in row-major order of `0..r`.
    pub fn torus(dim: usize, range: i64, r: usize) -> Self {
        let total = r.pow(dim as u32);
        let mut idx = vec![0usize; dim];
        let mut points = Vec::with_capacity(total);
        for _ in 0..total {
            points.push(idx.iter().map(|&c| crate::fields::torus_rep(c as i64, r)).collect::<Vec<i64>>());
            increment(&mut idx, r);
        }
        let steps: Vec<Vec<i64>> = cube_points(dim, range).into_iter().filter(|s| s > &vec![0; dim]).collect();
        let mut edges = Vec::new();
        for a in 0..total {
            let digits = digits_of(a, r, dim);
            for s in &steps {
                let b = digits
                    .iter()
                    .zip(s)
                    .fold(0usize, |acc, (&c, &q)| acc * r + (c as i64 + q).rem_euclid(r as i64) as usize);
                edges.push([a as u32, b as u32]);
            }
        }
        Self::build(dim, points, 0, edges)
    }
}

fn digits_of(mut id: usize, r: usize, dim: usize) -> Vec<usize> {
    let mut out = vec![0; dim];
    for slot in out.iter_mut().rev() {
        *slot = id % r;
        id /= r;
    }
    out
}

/// Read-only view of the current edge set during the search.
pub(crate) struct View<'a> {
    pub graph: &'a SearchGraph,
    pub verts: &'a [u32],
    pub edges: &'a [u32],
}

/// Accumulates observables over visited edge sets.
pub(crate) trait Tally: Send + Sync + Sized {
    fn fresh(&self) -> Self;
    fn visit(&mut self, n: usize, view: &View);
    fn merge(&mut self, other: Self);
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SearchParams {
    pub n_max: usize,
    pub tree: bool,
    pub budget: u64,
    /// Depth at which the search is split into parallel tasks.
    pub split: usize,
}

struct Task {
    edges: Vec<u32>,
    untried: Vec<u32>,
    seen: Vec<u32>,
}

struct Budget<'a> {
    counter: &'a AtomicU64,
    limit: u64,
    local: u64,
}

impl Budget<'_> {
    const FLUSH: u64 = 1 << 12;

    fn tick(&mut self) -> Result<()> {
        self.local += 1;
        if self.local == Self::FLUSH {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let total = self.counter.fetch_add(self.local, Ordering::Relaxed) + self.local;
        self.local = 0;
        if total > self.limit {
            return Err(Error::BudgetExceeded { limit: self.limit });
        }
        Ok(())
    }
}

struct State<'a> {
    graph: &'a SearchGraph,
    params: SearchParams,
    seen: Vec<bool>,
    deg: Vec<u32>,
    verts: Vec<u32>,
    edges: Vec<u32>,
    buffers: Vec<Vec<u32>>,
    budget: Budget<'a>,
}

impl<'a> State<'a> {
    fn new(graph: &'a SearchGraph, params: SearchParams, counter: &'a AtomicU64) -> Self {
        let mut deg = vec![0; graph.n_vertices()];
        deg[graph.root as usize] = 1;
        Self {
            graph,
            params,
            seen: vec![false; graph.endpoints.len()],
            deg,
            verts: vec![graph.root],
            edges: Vec::with_capacity(params.n_max),
            buffers: vec![Vec::new(); params.n_max + 1],
            budget: Budget { counter, limit: params.budget, local: 0 },
        }
    }

    fn push_edge(&mut self, e: u32) {
        self.edges.push(e);
        for v in self.graph.endpoints[e as usize] {
            if self.deg[v as usize] == 0 {
                self.verts.push(v);
            }
            self.deg[v as usize] += 1;
        }
    }

    fn pop_edge(&mut self) {
        let e = self.edges.pop().expect("edge stack underflow");
        for v in self.graph.endpoints[e as usize].into_iter().rev() {
            self.deg[v as usize] -= 1;
            if self.deg[v as usize] == 0 {
                let top = self.verts.pop();
                debug_assert_eq!(top, Some(v));
            }
        }
    }

    fn view(&self) -> View<'_> {
        View { graph: self.graph, verts: &self.verts, edges: &self.edges }
    }

    /// Appends unseen neighbours of the edges' endpoints to `buffers[slot]`, marking them.
    fn extend_untried(&mut self, e: u32, slot: usize) {
        let mut child = std::mem::take(&mut self.buffers[slot]);
        for v in self.graph.endpoints[e as usize] {
            for &f in &self.graph.incident[v as usize] {
                if self.seen[f as usize] {
                    continue;
                }
                if self.params.tree {
                    let [a, b] = self.graph.endpoints[f as usize];
                    if self.deg[a as usize] > 0 && self.deg[b as usize] > 0 {
                        continue;
                    }
                }
                self.seen[f as usize] = true;
                child.push(f);
            }
        }
        self.buffers[slot] = child;
    }

    /// Visits all extensions of the current set by edges drawn from `buffers[depth]`.
    fn grow<T: Tally>(&mut self, depth: usize, tally: &mut T, tasks: &mut Option<Vec<Task>>) -> Result<()> {
        let untried = std::mem::take(&mut self.buffers[depth]);
        for i in 0..untried.len() {
            let e = untried[i];
            let [a, b] = self.graph.endpoints[e as usize];
            if self.params.tree && self.deg[a as usize] > 0 && self.deg[b as usize] > 0 {
                continue;
            }
            self.push_edge(e);
            self.budget.tick()?;
            tally.visit(depth + 1, &self.view());
            if depth + 1 < self.params.n_max {
                let slot = depth + 1;
                self.buffers[slot].clear();
                self.buffers[slot].extend_from_slice(&untried[i + 1..]);
                let start = self.buffers[slot].len();
                self.extend_untried(e, slot);
                match tasks {
                    Some(list) if slot == self.params.split => {
                        let seen = (0..self.seen.len() as u32).filter(|&f| self.seen[f as usize]).collect();
                        list.push(Task { edges: self.edges.clone(), untried: self.buffers[slot].clone(), seen });
                    }
                    _ => self.grow(slot, tally, tasks)?,
                }
                for &f in &self.buffers[slot][start..] {
                    self.seen[f as usize] = false;
                }
            }
            self.pop_edge();
        }
        self.buffers[depth] = untried;
        Ok(())
    }
}

/// Runs the search and returns the merged tally and the number of visited sets.
pub(crate) fn run<T: Tally>(graph: &SearchGraph, params: SearchParams, seed: T) -> Result<(T, u64)> {
    let counter = AtomicU64::new(0);
    let mut tally = seed.fresh();
    let mut state = State::new(graph, params, &counter);
    state.budget.tick()?;
    tally.visit(0, &state.view());
    if params.n_max == 0 {
        state.budget.flush()?;
        return Ok((tally, counter.load(Ordering::Relaxed)));
    }
    let root_edges: Vec<u32> = graph.incident[graph.root as usize].clone();
    for &e in &root_edges {
        state.seen[e as usize] = true;
    }
    state.buffers[0] = root_edges;
    let parallel = params.split >= 1 && params.split < params.n_max;
    let mut tasks = parallel.then(Vec::new);
    state.grow(0, &mut tally, &mut tasks)?;
    state.budget.flush()?;
    if let Some(tasks) = tasks {
        let merged = tasks
            .into_par_iter()
            .try_fold(
                || (State::new(graph, params, &counter), seed.fresh()),
                |(mut st, mut local), task| -> Result<_> {
                    for &f in &task.seen {
                        st.seen[f as usize] = true;
                    }
                    for &e in &task.edges {
                        st.push_edge(e);
                    }
                    st.buffers[params.split] = task.untried;
                    st.grow(params.split, &mut local, &mut None)?;
                    st.budget.flush()?;
                    for _ in &task.edges {
                        st.pop_edge();
                    }
                    for &f in &task.seen {
                        st.seen[f as usize] = false;
                    }
                    Ok((st, local))
                },
            )
            .map(|acc| acc.map(|(_, local)| local))
            .try_reduce(
                || seed.fresh(),
                |mut a, b| {
                    a.merge(b);
                    Ok(a)
                },
            )?;
        tally.merge(merged);
    }
    Ok((tally, counter.load(Ordering::Relaxed)))
}

/// Split depth used by default: shallow enough that the prefix is cheap.
pub(crate) fn default_split(n_max: usize) -> usize {
    match n_max {
        0..=3 => 0,
        4..=6 => 2,
        _ => 3,
    }
}
