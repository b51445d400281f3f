//! Seeded GPA network growth.
//!
//! Vertices are grouped by in-degree: every vertex of degree k carries the
//! same weight b(k), so target sampling picks a degree class with probability
//! count(k)·b(k)/W through a Fenwick tree over degrees, then a uniform member
//! of the class. Degree-class updates are O(log D) where D is the current
//! maximum degree, which stays far below the vertex count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::DegreeCounts;
use crate::error::{Error, Result};
use crate::pref::PrefParams;

/// Fenwick tree over degree classes holding count(k)·b(k).
struct ClassWeights {
    tree: Vec<f64>, // 1-indexed; tree[0] unused
}

impl ClassWeights {
    fn new(capacity: usize) -> Self {
        Self { tree: vec![0.0; capacity + 1] }
    }

    fn capacity(&self) -> usize {
        self.tree.len() - 1
    }

    fn add(&mut self, class: usize, delta: f64) {
        let mut i = class + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        self.prefix_sum(self.capacity() - 1)
    }

    /// Sum of classes 0..=class.
    fn prefix_sum(&self, class: usize) -> f64 {
        let mut i = class + 1;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest class index whose cumulative weight exceeds `target`.
    fn rank(&self, mut target: f64) -> usize {
        let n = self.capacity();
        let mut pos = 0usize;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Mutable simulator state: per-degree vertex buckets plus the weighted index.
pub struct GrowthState {
    params: PrefParams,
    m: u32,
    /// degree → vertex ids at that degree.
    buckets: Vec<Vec<u32>>,
    /// vertex id → current in-degree.
    vertex_degree: Vec<u32>,
    /// vertex id → position inside its bucket, for O(1) removal.
    vertex_pos: Vec<u32>,
    weights: ClassWeights,
    t: u64,
}

impl GrowthState {
    /// Initial network: m isolated vertices of in-degree 0 at t = 0.
    pub fn new(params: PrefParams, m: u32) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParams(format!("m must be at least 1, got {m}")));
        }
        let mut state = Self {
            params,
            m,
            buckets: vec![Vec::new()],
            vertex_degree: Vec::new(),
            vertex_pos: Vec::new(),
            weights: ClassWeights::new(1024),
            t: 0,
        };
        for _ in 0..m {
            state.push_new_vertex();
        }
        Ok(state)
    }

    pub fn vertex_count(&self) -> u64 {
        self.vertex_degree.len() as u64
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.total()
    }

    fn push_new_vertex(&mut self) {
        let id = self.vertex_degree.len() as u32;
        self.vertex_degree.push(0);
        self.vertex_pos.push(self.buckets[0].len() as u32);
        self.buckets[0].push(id);
        self.weights.add(0, self.params.eval(0));
    }

    fn increment_degree(&mut self, vertex: u32) {
        let k = self.vertex_degree[vertex as usize] as usize;
        // Remove from bucket k via swap-remove, fixing the moved vertex's slot.
        let pos = self.vertex_pos[vertex as usize] as usize;
        let bucket = &mut self.buckets[k];
        let last = *bucket.last().expect("bucket holds the vertex being moved");
        bucket.swap_remove(pos);
        if last != vertex {
            self.vertex_pos[last as usize] = pos as u32;
        }
        self.weights.add(k, -self.params.eval(k as u64));
        if k + 1 >= self.buckets.len() {
            self.buckets.push(Vec::new());
        }
        self.vertex_degree[vertex as usize] = (k + 1) as u32;
        self.vertex_pos[vertex as usize] = self.buckets[k + 1].len() as u32;
        self.buckets[k + 1].push(vertex);
        if k + 1 >= self.weights.capacity() {
            // The rebuild recounts every bucket, including the vertex at its
            // new degree; no incremental update must follow it.
            self.grow_weight_capacity();
        } else {
            self.weights.add(k + 1, self.params.eval(k as u64 + 1));
        }
    }

    fn grow_weight_capacity(&mut self) {
        let mut rebuilt = ClassWeights::new(self.weights.capacity() * 2);
        for (k, bucket) in self.buckets.iter().enumerate() {
            if !bucket.is_empty() {
                rebuilt.add(k, bucket.len() as f64 * self.params.eval(k as u64));
            }
        }
        self.weights = rebuilt;
    }

    /// Draw one attachment target from the current state.
    fn sample_target<R: Rng>(&self, rng: &mut R) -> u32 {
        let total = self.weights.total();
        debug_assert!(total > 0.0);
        let mut class = self.weights.rank(rng.random::<f64>() * total);
        // Guard against landing on a class emptied by rounding at the edges.
        while self.buckets[class].is_empty() {
            class = class.checked_sub(1).expect("some class is nonempty");
        }
        let members = &self.buckets[class];
        members[rng.random_range(0..members.len())]
    }

    /// Advance one step: sample m targets i.i.d. from the current state, then
    /// add the new vertex and apply the in-degree increments.
    pub fn step<R: Rng>(&mut self, rng: &mut R) {
        let targets: Vec<u32> = (0..self.m).map(|_| self.sample_target(rng)).collect();
        self.push_new_vertex();
        for v in targets {
            self.increment_degree(v);
        }
        self.t += 1;
    }

    /// Final in-degree counts.
    pub fn degree_counts(&self) -> DegreeCounts {
        let pairs = self
            .buckets
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_empty())
            .map(|(k, b)| (k as u64, b.len() as u64));
        DegreeCounts::from_pairs(pairs).expect("a growth state always holds vertices")
    }

    #[cfg(test)]
    fn recomputed_total_weight(&self) -> f64 {
        self.buckets
            .iter()
            .enumerate()
            .map(|(k, b)| b.len() as f64 * self.params.eval(k as u64))
            .sum()
    }
}

/// Grow a network to `n_vertices` vertices and return its in-degree counts.
/// Deterministic for a fixed seed.
pub fn simulate(params: &PrefParams, n_vertices: u64, m: u32, seed: u64) -> Result<DegreeCounts> {
    if n_vertices < 2 || n_vertices <= u64::from(m) {
        return Err(Error::InvalidParams(format!(
            "need n_vertices >= 2 and n_vertices > m, got n={n_vertices}, m={m}"
        )));
    }
    if n_vertices > u64::from(u32::MAX) {
        return Err(Error::InvalidParams(format!("n_vertices {n_vertices} exceeds the supported range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GrowthState::new(*params, m)?;
    while state.vertex_count() < n_vertices {
        state.step(&mut rng);
    }
    Ok(state.degree_counts())
}
