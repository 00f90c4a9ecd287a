//! Simple undirected graphs on `[n]`, permutations, and planted instances.
//!
//! Adjacency is a bit-packed upper-triangular table indexed by the canonical
//! pair order: pairs `(u, v)` with `u < v`, sorted row-major. All generators
//! draw one decision per pair in that order, so outputs are a pure function
//! of the stream state.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Undirected graph, no self-loops, vertices `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    bits: Vec<u64>,
}

impl Graph {
    /// Edgeless graph. `n` must be positive.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let words = (n * (n - 1) / 2).div_ceil(64).max(1);
        Ok(Graph { n, bits: vec![0; words] })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for u in 0..n {
            for v in u + 1..n {
                g.set_edge(u, v, true)?;
            }
        }
        Ok(g)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for &(u, v) in edges {
            g.set_edge(u, v, true)?;
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of unordered vertex pairs, `C(n, 2)`.
    #[inline]
    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Canonical index of the pair `{u, v}`: row-major over `u < v`.
    #[inline]
    pub fn pair_index(&self, u: usize, v: usize) -> Result<usize> {
        let (u, v) = normalize_pair(u, v, self.n)?;
        Ok(pair_index_unchecked(self.n, u, v))
    }

    /// Inverse of [`pair_index`](Self::pair_index).
    pub fn pair_from_index(&self, idx: usize) -> (usize, usize) {
        debug_assert!(idx < self.pair_count());
        let n = self.n;
        let mut u = 0usize;
        let mut base = 0usize;
        // Row u holds n-1-u pairs.
        while base + (n - 1 - u) <= idx {
            base += n - 1 - u;
            u += 1;
        }
        (u, u + 1 + (idx - base))
    }

    #[inline]
    pub fn adjacency(&self, u: usize, v: usize) -> Result<bool> {
        let (u, v) = normalize_pair(u, v, self.n)?;
        let idx = pair_index_unchecked(self.n, u, v);
        Ok(self.bits[idx / 64] >> (idx % 64) & 1 == 1)
    }

    /// Adjacency without validation; `u != v`, both in range.
    #[inline]
    pub fn adj(&self, u: usize, v: usize) -> bool {
        debug_assert!(u != v && u < self.n && v < self.n);
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        let idx = pair_index_unchecked(self.n, u, v);
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) -> Result<()> {
        let (u, v) = normalize_pair(u, v, self.n)?;
        let idx = pair_index_unchecked(self.n, u, v);
        if present {
            self.bits[idx / 64] |= 1 << (idx % 64);
        } else {
            self.bits[idx / 64] &= !(1 << (idx % 64));
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| u != v && self.adj(u, v)).count()
    }

    /// All `C(n,2)` unordered pairs in canonical order, edge or not.
    pub fn all_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.pair_count()).map(|i| self.pair_from_index(i)).collect()
    }

    /// Edges in canonical pair order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.adj(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Text form: first line `n`, then one `u v` line per edge, `u < v`,
    /// canonical order, newline-terminated.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing vertex-count line".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("invalid vertex count {first:?}"),
        })?;
        let mut g = Graph::empty(n).map_err(|_| Error::Parse {
            line: 1,
            msg: "vertex count must be positive".into(),
        })?;
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: "expected `u v`".into(),
                })?
                .parse()
                .map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid vertex in {line:?}"),
                })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "trailing tokens after `u v`".into(),
                });
            }
            if u >= v {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("edge must satisfy u < v, got {u} {v}"),
                });
            }
            g.set_edge(u, v, true).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        Ok(g)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.edge_count())
    }
}

#[inline]
fn pair_index_unchecked(n: usize, u: usize, v: usize) -> usize {
    // Pairs with first coordinate < u: u*(2n - u - 1)/2.
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

fn normalize_pair(u: usize, v: usize, n: usize) -> Result<(usize, usize)> {
    if u >= n {
        return Err(Error::VertexOutOfRange { vertex: u, n });
    }
    if v >= n {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    if u == v {
        return Err(Error::SelfPair(u));
    }
    Ok(if u < v { (u, v) } else { (v, u) })
}

/// G(n, p): one Bernoulli draw per pair in canonical order.
pub fn gen_gnp(n: usize, p: f64, rng: &mut Stream) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability(p));
    }
    let mut g = Graph::empty(n)?;
    for u in 0..n {
        for v in u + 1..n {
            let present = rng.gen::<f64>() < p;
            if present {
                g.set_edge(u, v, true)?;
            }
        }
    }
    Ok(g)
}

/// Bijection on `[n]` stored as its image vector.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &w in &images {
            if w >= n {
                return Err(Error::VertexOutOfRange { vertex: w, n });
            }
            if seen[w] {
                return Err(Error::BadConfig(format!("duplicate image {w} in permutation")));
            }
            seen[w] = true;
        }
        Ok(Permutation { images })
    }

    pub fn uniform(n: usize, rng: &mut Stream) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.shuffle(rng);
        Permutation { images }
    }

    #[inline]
    pub fn apply(&self, v: usize) -> usize {
        self.images[v]
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (v, &w) in self.images.iter().enumerate() {
            inv[w] = v;
        }
        Permutation { images: inv }
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }
}

/// Uniform unordered vertex pair, returned as (low, high).
pub fn random_pair(n: usize, rng: &mut Stream) -> (usize, usize) {
    debug_assert!(n >= 2);
    let u = rng.gen_range(0..n);
    let mut v = rng.gen_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    (u.min(v), u.max(v))
}

/// H with `H[pi(u)][pi(v)] = G[u][v]`.
pub fn apply_permutation(g: &Graph, pi: &Permutation) -> Result<Graph> {
    if pi.n() != g.n() {
        return Err(Error::SizeMismatch(g.n(), pi.n()));
    }
    let mut h = Graph::empty(g.n())?;
    for u in 0..g.n() {
        for v in u + 1..g.n() {
            if g.adj(u, v) {
                h.set_edge(pi.apply(u), pi.apply(v), true)?;
            }
        }
    }
    Ok(h)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Yes,
    No,
}

/// A labeled instance of the decision problem, with generation metadata.
#[derive(Clone, Debug)]
pub struct Instance {
    pub g: Graph,
    pub h: Graph,
    pub planted: Option<Permutation>,
    pub label: Label,
    pub epsilon: f64,
    pub planted_edits: Option<usize>,
    pub seed: u64,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.g.n()
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    epsilon: f64,
    label: Label,
    seed: u64,
    planted: Option<Vec<usize>>,
    g_edges: Vec<(usize, usize)>,
    h_edges: Vec<(usize, usize)>,
    planted_edits: Option<usize>,
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InstanceJson {
            n: self.n(),
            epsilon: self.epsilon,
            label: self.label,
            seed: self.seed,
            planted: self.planted.as_ref().map(|p| p.images().to_vec()),
            g_edges: self.g.edges(),
            h_edges: self.h.edges(),
            planted_edits: self.planted_edits,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let j = InstanceJson::deserialize(d)?;
        let g = Graph::from_edges(j.n, &j.g_edges).map_err(DeError::custom)?;
        let h = Graph::from_edges(j.n, &j.h_edges).map_err(DeError::custom)?;
        let planted = j
            .planted
            .map(Permutation::from_images)
            .transpose()
            .map_err(DeError::custom)?;
        Ok(Instance {
            g,
            h,
            planted,
            label: j.label,
            epsilon: j.epsilon,
            planted_edits: j.planted_edits,
            seed: j.seed,
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::BadEpsilon(epsilon));
    }
    Ok(())
}

/// Correlated instance: `H = pi(G)` with each pair flipped independently
/// with probability `epsilon/2`. `planted_edits` counts the flips, which
/// equals the edit distance under `pi`.
pub fn gen_yes_instance(n: usize, epsilon: f64, seed: u64) -> Result<Instance> {
    check_epsilon(epsilon)?;
    let mut rng = crate::rng::stream(seed, 1);
    let g = gen_gnp(n, 0.5, &mut rng)?;
    let pi = Permutation::uniform(n, &mut rng);
    let mut h = apply_permutation(&g, &pi)?;
    let mut edits = 0usize;
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < epsilon / 2.0 {
                let cur = h.adj(u, v);
                h.set_edge(u, v, !cur)?;
                edits += 1;
            }
        }
    }
    Ok(Instance {
        g,
        h,
        planted: Some(pi),
        label: Label::Yes,
        epsilon,
        planted_edits: Some(edits),
        seed,
    })
}

/// Independent pair of G(n, 1/2) draws. `epsilon` is carried as the
/// decision parameter the instance will be tested under; it plays no role
/// in generation.
pub fn gen_no_instance(n: usize, epsilon: f64, seed: u64) -> Result<Instance> {
    check_epsilon(epsilon)?;
    let mut rng = crate::rng::stream(seed, 2);
    let g = gen_gnp(n, 0.5, &mut rng)?;
    let h = gen_gnp(n, 0.5, &mut rng)?;
    Ok(Instance {
        g,
        h,
        planted: None,
        label: Label::No,
        epsilon,
        planted_edits: None,
        seed,
    })
}

/// Number of pairs on which `g` and `pi(·)`-relabeled `h` disagree.
pub fn edit_distance_under(g: &Graph, h: &Graph, pi: &Permutation) -> Result<usize> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    if pi.n() != g.n() {
        return Err(Error::SizeMismatch(g.n(), pi.n()));
    }
    let mut d = 0;
    for u in 0..g.n() {
        for v in u + 1..g.n() {
            if g.adj(u, v) != h.adj(pi.apply(u), pi.apply(v)) {
                d += 1;
            }
        }
    }
    Ok(d)
}

/// Exact minimum edit distance over all permutations, with the
/// lexicographically smallest minimizer. Branch-and-bound over image
/// prefixes in lexicographic order; only strict improvements replace the
/// incumbent, so the first minimizer found is the lexicographic one.
pub fn min_edit_distance_bruteforce(g: &Graph, h: &Graph) -> Result<(usize, Permutation)> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    let n = g.n();
    if n > 10 {
        return Err(Error::SizeLimit { what: "brute-force edit distance", max: 10, n });
    }
    let mut best = usize::MAX;
    let mut best_perm: Vec<usize> = Vec::new();
    let mut images = vec![0usize; n];
    let mut used = vec![false; n];
    fn recurse(
        g: &Graph,
        h: &Graph,
        level: usize,
        partial: usize,
        images: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut usize,
        best_perm: &mut Vec<usize>,
    ) {
        let n = g.n();
        if partial >= *best {
            return;
        }
        if level == n {
            *best = partial;
            *best_perm = images.clone();
            return;
        }
        for w in 0..n {
            if used[w] {
                continue;
            }
            let mut added = 0;
            for u in 0..level {
                if g.adj(u, level) != h.adj(images[u], w) {
                    added += 1;
                }
            }
            if partial + added >= *best {
                continue;
            }
            images[level] = w;
            used[w] = true;
            recurse(g, h, level + 1, partial + added, images, used, best, best_perm);
            used[w] = false;
        }
    }
    recurse(g, h, 0, 0, &mut images, &mut used, &mut best, &mut best_perm);
    Ok((best, Permutation { images: best_perm }))
}

/// Per-vertex defect under `pi`: the number of other vertices whose pair
/// with `v` disagrees. Sums to twice the edit distance.
pub fn defect_profile(g: &Graph, h: &Graph, pi: &Permutation) -> Result<Vec<usize>> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    if pi.n() != g.n() {
        return Err(Error::SizeMismatch(g.n(), pi.n()));
    }
    let n = g.n();
    let mut d = vec![0usize; n];
    for u in 0..n {
        for v in u + 1..n {
            if g.adj(u, v) != h.adj(pi.apply(u), pi.apply(v)) {
                d[u] += 1;
                d[v] += 1;
            }
        }
    }
    Ok(d)
}

/// Eigenvalues of the combinatorial Laplacian `D - A`, ascending.
pub fn laplacian_spectrum(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u != v && g.adj(u, v) {
                m[(u, v)] = -1.0;
                m[(u, u)] += 1.0;
            }
        }
    }
    let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}
