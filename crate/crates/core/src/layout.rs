//! Placement of interaction graphs on the tweezer grid by simulated
//! annealing, shuttle timing, and grouping of moves into symmetric layers.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::resources::CostModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Data,
    Check,
    Lpu,
    Adapter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    /// Instruction that needs this pair to interact.
    #[serde(default)]
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionGraph {
    pub roles: Vec<Role>,
    pub edges: Vec<Edge>,
}

impl InteractionGraph {
    pub fn new(roles: Vec<Role>, edges: Vec<Edge>) -> Result<Self> {
        let g = InteractionGraph { roles, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.roles.len() as u32;
        for (i, e) in self.edges.iter().enumerate() {
            if e.a == e.b {
                return Err(Error::Validation(format!("edge {i} is a self-loop on vertex {}", e.a)));
            }
            if e.a >= n || e.b >= n {
                return Err(Error::Validation(format!(
                    "edge {i} references a vertex outside 0..{n}"
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let g: InteractionGraph = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        g.validate()?;
        Ok(g)
    }

    pub fn path(n: usize) -> Self {
        InteractionGraph {
            roles: vec![Role::Data; n],
            edges: (1..n as u32)
                .map(|i| Edge {
                    a: i - 1,
                    b: i,
                    tag: "chain".into(),
                })
                .collect(),
        }
    }

    /// Nearest-neighbour torus on `rows × cols` sites.
    pub fn torus(rows: usize, cols: usize) -> Self {
        let id = |r: usize, c: usize| (r % rows * cols + c % cols) as u32;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                edges.push(Edge {
                    a: id(r, c),
                    b: id(r, c + 1),
                    tag: "h".into(),
                });
                edges.push(Edge {
                    a: id(r, c),
                    b: id(r + 1, c),
                    tag: "v".into(),
                });
            }
        }
        edges.retain(|e| e.a != e.b);
        InteractionGraph {
            roles: vec![Role::Data; rows * cols],
            edges,
        }
    }

    /// Tanner graph of a bivariate-bicycle code on `Z_l × Z_m` with
    /// `A = Σ a_i`, `B = Σ b_i`, each monomial given as an `(x, y)` power.
    /// Vertices are ordered L data, R data, X checks, Z checks.
    pub fn bivariate_bicycle(l: usize, m: usize, a: &[(usize, usize)], b: &[(usize, usize)]) -> Self {
        let cells = l * m;
        let cell = |i: usize, j: usize| (i % l) * m + j % m;
        let (l_off, r_off, x_off, z_off) = (0, cells, 2 * cells, 3 * cells);
        let mut roles = vec![Role::Data; 2 * cells];
        roles.extend(vec![Role::Check; 2 * cells]);
        let mut edges = Vec::new();
        for i in 0..l {
            for j in 0..m {
                let c = cell(i, j);
                // X check: H_X = [A | B].
                for &(p, q) in a {
                    edges.push(Edge {
                        a: (x_off + c) as u32,
                        b: (l_off + cell(i + p, j + q)) as u32,
                        tag: "x".into(),
                    });
                }
                for &(p, q) in b {
                    edges.push(Edge {
                        a: (x_off + c) as u32,
                        b: (r_off + cell(i + p, j + q)) as u32,
                        tag: "x".into(),
                    });
                }
                // Z check: H_Z = [Bᵀ | Aᵀ].
                for &(p, q) in b {
                    edges.push(Edge {
                        a: (z_off + c) as u32,
                        b: (l_off + cell(i + l - p, j + m - q)) as u32,
                        tag: "z".into(),
                    });
                }
                for &(p, q) in a {
                    edges.push(Edge {
                        a: (z_off + c) as u32,
                        b: (r_off + cell(i + l - p, j + m - q)) as u32,
                        tag: "z".into(),
                    });
                }
            }
        }
        InteractionGraph { roles, edges }
    }

    /// The shipped fixture: the [[288, 12, 18]] bivariate-bicycle Tanner graph
    /// (l = m = 12, A = x³ + y² + y⁷, B = y³ + x + x²).
    pub fn two_gross_fixture() -> Self {
        Self::bivariate_bicycle(12, 12, &[(3, 0), (0, 2), (0, 7)], &[(0, 3), (1, 0), (2, 0)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub rows: u32,
    pub cols: u32,
    /// (row, col) per vertex.
    pub positions: Vec<(u32, u32)>,
}

impl Placement {
    pub fn validate(&self, g: &InteractionGraph) -> Result<()> {
        if self.positions.len() != g.len() {
            return Err(Error::Validation("placement does not cover every vertex".into()));
        }
        let mut seen = vec![false; (self.rows * self.cols) as usize];
        for &(r, c) in &self.positions {
            if r >= self.rows || c >= self.cols {
                return Err(Error::Validation(format!("({r}, {c}) lies outside the grid")));
            }
            let s = &mut seen[(r * self.cols + c) as usize];
            if *s {
                return Err(Error::Validation(format!("two vertices share cell ({r}, {c})")));
            }
            *s = true;
        }
        Ok(())
    }

    pub fn edge_length(&self, e: &Edge) -> f64 {
        (sq_len(self.positions[e.a as usize], self.positions[e.b as usize]) as f64).sqrt()
    }

    /// Largest edge length in atom spacings.
    pub fn max_distance(&self, g: &InteractionGraph) -> f64 {
        g.edges.iter().map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn total_distance(&self, g: &InteractionGraph) -> f64 {
        g.edges.iter().map(|e| self.edge_length(e)).sum()
    }

    /// Copies of this placement for `modules` modules side by side, each
    /// shifted by `pitch` columns.
    pub fn replicate(&self, modules: u32, pitch: u32) -> Result<Placement> {
        if pitch < self.cols {
            return input("replication pitch must be at least the module width");
        }
        let mut positions = Vec::with_capacity(self.positions.len() * modules as usize);
        for m in 0..modules {
            positions.extend(self.positions.iter().map(|&(r, c)| (r, c + m * pitch)));
        }
        Ok(Placement {
            rows: self.rows,
            cols: pitch * (modules.max(1) - 1) + self.cols,
            positions,
        })
    }
}

fn sq_len(p: (u32, u32), q: (u32, u32)) -> u32 {
    let dr = p.0.abs_diff(q.0);
    let dc = p.1.abs_diff(q.1);
    dr * dr + dc * dc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealSchedule {
    pub sweeps: u32,
    /// Temperature multiplier applied after each sweep.
    pub cooling: f64,
    /// Initial temperature as a multiple of the mean uphill move cost; 0
    /// picks the default.
    pub initial_temperature: f64,
    /// Half-width of the move window in cells; 0 spans the whole grid.
    pub window: u32,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            sweeps: 10_000,
            cooling: 0.995,
            initial_temperature: 1.0,
            window: 4,
        }
    }
}

/// Tracks edge squared lengths in a histogram so the maximum is cheap to
/// maintain under local moves.
struct Energy {
    hist: Vec<u32>,
    max_sq: usize,
    sum_sq: u64,
}

impl Energy {
    fn add(&mut self, s: u32) {
        let s = s as usize;
        self.hist[s] += 1;
        self.sum_sq += s as u64;
        self.max_sq = self.max_sq.max(s);
    }

    fn remove(&mut self, s: u32) {
        let s = s as usize;
        self.hist[s] -= 1;
        self.sum_sq -= s as u64;
        while self.max_sq > 0 && self.hist[self.max_sq] == 0 {
            self.max_sq -= 1;
        }
    }

    /// Scalarized (max, sum) objective: the max term dominates any change in
    /// the sum a single move can make.
    fn value(&self, weight: f64) -> f64 {
        weight * self.max_sq as f64 + self.sum_sq as f64
    }

    fn key(&self) -> (usize, u64) {
        (self.max_sq, self.sum_sq)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealResult {
    pub placement: Placement,
    pub max_distance: f64,
    pub total_distance: f64,
    pub accepted: u64,
    pub proposed: u64,
}

/// Anneals `g` onto a `rows × cols` grid, minimizing the longest edge and
/// then the sum of squared edge lengths. Moves relocate a vertex to a nearby
/// cell, swapping with its occupant if any. The best placement seen is
/// returned, so the result never regresses from the annealing trajectory.
pub fn anneal_placement(
    g: &InteractionGraph,
    rows: u32,
    cols: u32,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<AnnealResult> {
    g.validate()?;
    let n = g.len();
    let cells = (rows * cols) as usize;
    if n > cells {
        return Err(Error::Config(format!(
            "{n} vertices do not fit on a {rows}×{cols} grid"
        )));
    }
    if !(schedule.cooling > 0.0 && schedule.cooling < 1.0) {
        return Err(Error::Config("anneal cooling must lie in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for e in &g.edges {
        adj[e.a as usize].push(e.b);
        adj[e.b as usize].push(e.a);
    }
    // Row-major start; the walk is randomized by the moves themselves.
    let mut pos: Vec<(u32, u32)> = (0..n as u32).map(|i| (i / cols, i % cols)).collect();
    let mut at: Vec<Option<u32>> = vec![None; cells];
    for (v, &(r, c)) in pos.iter().enumerate() {
        at[(r * cols + c) as usize] = Some(v as u32);
    }
    let max_sq = ((rows - 1) * (rows - 1) + (cols - 1) * (cols - 1)) as usize;
    let mut en = Energy {
        hist: vec![0; max_sq + 1],
        max_sq: 0,
        sum_sq: 0,
    };
    for e in &g.edges {
        en.add(sq_len(pos[e.a as usize], pos[e.b as usize]));
    }
    let weight = g.edges.len().max(1) as f64 * 4.0;
    let window = if schedule.window == 0 {
        rows.max(cols)
    } else {
        schedule.window
    };

    let mut best = pos.clone();
    let mut best_key = en.key();
    if n < 2 || g.edges.is_empty() {
        return finish(g, rows, cols, best, 0, 0);
    }

    let mut touched: Vec<(u32, u32, u32)> = Vec::new();
    let apply = |pos: &mut Vec<(u32, u32)>,
                 en: &mut Energy,
                 v: u32,
                 to: (u32, u32),
                 w: Option<u32>,
                 touched: &mut Vec<(u32, u32, u32)>| {
        // Remove edges at v and w, move, re-add; `touched` records the
        // removed lengths in case the move is undone.
        touched.clear();
        for &x in [Some(v), w].iter().flatten() {
            for &y in &adj[x as usize] {
                if Some(y) == w && x == v {
                    continue;
                }
                let s = sq_len(pos[x as usize], pos[y as usize]);
                en.remove(s);
                touched.push((x, y, s));
            }
        }
        let from = pos[v as usize];
        pos[v as usize] = to;
        if let Some(w) = w {
            pos[w as usize] = from;
        }
        for &(x, y, _) in touched.iter() {
            en.add(sq_len(pos[x as usize], pos[y as usize]));
        }
    };

    // Calibrate the temperature from the average uphill step at the start.
    let mut uphill = 0.0;
    let mut ups = 0u32;
    for _ in 0..200 {
        let v = rng.gen_range(0..n as u32);
        let to = random_cell(&mut rng, pos[v as usize], window, rows, cols);
        let w = at[(to.0 * cols + to.1) as usize];
        if w == Some(v) {
            continue;
        }
        let before = en.value(weight);
        let from = pos[v as usize];
        apply(&mut pos, &mut en, v, to, w, &mut touched);
        let d = en.value(weight) - before;
        if d > 0.0 {
            uphill += d;
            ups += 1;
        }
        apply(&mut pos, &mut en, v, from, w, &mut touched);
    }
    let mut temp = if ups == 0 { 1.0 } else { uphill / ups as f64 } * schedule.initial_temperature.max(1e-9);

    let (mut accepted, mut proposed) = (0u64, 0u64);
    for _ in 0..schedule.sweeps {
        for _ in 0..n {
            let v = rng.gen_range(0..n as u32);
            let from = pos[v as usize];
            let to = random_cell(&mut rng, from, window, rows, cols);
            let w = at[(to.0 * cols + to.1) as usize];
            if w == Some(v) {
                continue;
            }
            proposed += 1;
            let before = en.value(weight);
            apply(&mut pos, &mut en, v, to, w, &mut touched);
            let d = en.value(weight) - before;
            if d <= 0.0 || rng.gen::<f64>() < (-d / temp).exp() {
                accepted += 1;
                at[(to.0 * cols + to.1) as usize] = Some(v);
                at[(from.0 * cols + from.1) as usize] = w;
                if en.key() < best_key {
                    best_key = en.key();
                    best.copy_from_slice(&pos);
                }
            } else {
                apply(&mut pos, &mut en, v, from, w, &mut touched);
            }
        }
        temp *= schedule.cooling;
    }
    finish(g, rows, cols, best, accepted, proposed)
}

fn random_cell(rng: &mut ChaCha8Rng, from: (u32, u32), window: u32, rows: u32, cols: u32) -> (u32, u32) {
    let lo_r = from.0.saturating_sub(window);
    let hi_r = (from.0 + window).min(rows - 1);
    let lo_c = from.1.saturating_sub(window);
    let hi_c = (from.1 + window).min(cols - 1);
    (rng.gen_range(lo_r..=hi_r), rng.gen_range(lo_c..=hi_c))
}

fn finish(
    g: &InteractionGraph,
    rows: u32,
    cols: u32,
    positions: Vec<(u32, u32)>,
    accepted: u64,
    proposed: u64,
) -> Result<AnnealResult> {
    let placement = Placement { rows, cols, positions };
    placement.validate(g)?;
    Ok(AnnealResult {
        max_distance: placement.max_distance(g),
        total_distance: placement.total_distance(g),
        placement,
        accepted,
        proposed,
    })
}

/// Adapter shuttle time for a move of `modules` module widths, in ms.
pub fn shuttle_time(modules: i64, cost: &CostModel) -> Result<f64> {
    if modules < 0 {
        return input(format!("negative module distance {modules}"));
    }
    Ok(cost.shuttle_us(modules as u32) as f64 / 1000.0)
}

/// Grid cell as (row, column).
pub type Site = (i32, i32);

pub type Move = (Site, Site);

/// Splits moves into layers sharing one displacement vector, most frequent
/// displacement first. Moves of one class that target the same cell go to
/// separate layers.
pub fn group_translationally_symmetric(moves: &[Move]) -> Vec<Vec<usize>> {
    let mut classes: BTreeMap<(i32, i32), Vec<usize>> = BTreeMap::new();
    for (i, &(from, to)) in moves.iter().enumerate() {
        classes.entry((to.0 - from.0, to.1 - from.1)).or_default().push(i);
    }
    let mut ordered: Vec<((i32, i32), Vec<usize>)> = classes.into_iter().collect();
    ordered.sort_by_key(|(d, v)| (std::cmp::Reverse(v.len()), *d));
    let mut layers = Vec::new();
    for (_, members) in ordered {
        // Each layer keeps its members and the destinations they claim.
        let mut class_layers: Vec<(Vec<usize>, BTreeSet<Site>)> = Vec::new();
        for i in members {
            let dest = moves[i].1;
            match class_layers.iter_mut().find(|(_, d)| !d.contains(&dest)) {
                Some((l, d)) => {
                    l.push(i);
                    d.insert(dest);
                }
                None => class_layers.push((vec![i], [dest].into_iter().collect())),
            }
        }
        layers.extend(class_layers.into_iter().map(|(l, _)| l));
    }
    layers
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shape() {
        let g = InteractionGraph::two_gross_fixture();
        assert_eq!(g.len(), 576);
        assert_eq!(g.edges.len(), 1728);
        let mut deg = vec![0; g.len()];
        for e in &g.edges {
            deg[e.a as usize] += 1;
            deg[e.b as usize] += 1;
        }
        assert!(deg.iter().all(|&d| d == 6));
    }

    #[test]
    fn shuttle_linear() {
        let c = CostModel::default();
        assert_eq!(shuttle_time(0, &c).unwrap(), 0.0);
        assert_eq!(shuttle_time(10, &c).unwrap(), 1.4);
        assert!(shuttle_time(-1, &c).is_err());
    }

    #[test]
    fn grouping() {
        let moves: Vec<Move> = (0..5).map(|i| ((i, 0), (i, 24))).collect();
        assert_eq!(group_translationally_symmetric(&moves).len(), 1);
        let mut two = moves.clone();
        two.push(((0, 1), (1, 1)));
        assert_eq!(group_translationally_symmetric(&two).len(), 2);
        let clash = vec![((0, 0), (0, 1)), ((0, 0), (0, 1))];
        assert_eq!(group_translationally_symmetric(&clash).len(), 2);
    }

    #[test]
    fn oversized_graph_rejected() {
        let g = InteractionGraph::path(10);
        let r = anneal_placement(&g, 3, 3, &AnnealSchedule::default(), 1);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
