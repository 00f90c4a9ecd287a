//! Three-phase decision procedure: walk-driven seed search, consensus
//! reconstruction, and verification by amplitude estimation.
//!
//! Query accounting runs through `QueryOracle`. Classical reads go through
//! `read` (charged, transcripted); conceptual coherent subroutine costs are
//! charged as lump rates. Once an adjacency answer has been paid for the
//! procedure may remember it locally; repeated oracle reads of the same
//! pair charge again.

use std::f64::consts::PI;

use rand::seq::index::sample as index_sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edit_distance_under, random_pair, Graph, Label, Permutation};
use crate::oracle::{QueryCounter, QueryOracle, Side};
use crate::product::ProductVertex;
use crate::rng::{self, Stream};
use crate::szegedy::{apply_walk, reflect_marked, EdgeState, WalkContext};

const LANE_DECIDE: u64 = 3;
const LANE_BASELINE: u64 = 4;

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::BadEpsilon(epsilon));
    }
    Ok(())
}

/// Knobs for the decision pipeline. `defaults` scales them with n and the
/// tolerance; every field can be overridden before `validate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Adjacency samples per marking check; also the per-side rate charged
    /// by one marked reflection.
    pub r: usize,
    /// Consistency fraction above which a product vertex counts as marked.
    pub threshold: f64,
    /// Target seed count. The collection pool is capped at n.
    pub s: usize,
    /// Search rounds per walk attempt.
    pub search_rounds: usize,
    pub walk_steps_per_round: usize,
    /// Phase-estimation grid for verification, a power of two.
    pub ae_grid: usize,
    pub decide_restarts: usize,
    /// Re-score resolved assignments with the coherent scorer. Diagnostic;
    /// adds queries without changing the verdict rule.
    pub use_score_ae: bool,
}

impl PipelineConfig {
    pub fn defaults(n: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if n < 2 {
            return Err(Error::SizeLimit { what: "decision pipeline", max: 20, n });
        }
        let nf = n as f64;
        let r_raw = (8.0 * nf.ln() / (epsilon * epsilon)).ceil() as usize;
        let cfg = PipelineConfig {
            r: r_raw.clamp(1, (n - 1) * (n - 1)),
            threshold: 0.5 + (epsilon / 4.0).min(1.0 / (4.0 * nf)),
            s: (6.0 * nf.ln()).ceil().max(1.0) as usize,
            search_rounds: (4.0 * nf.sqrt()).ceil() as usize,
            walk_steps_per_round: 3,
            ae_grid: 1usize << (8.0 * PI / epsilon).log2().ceil() as u32,
            decide_restarts: 3,
            use_score_ae: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::BadConfig("r must be positive".into()));
        }
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(Error::BadConfig(format!(
                "threshold {} outside (1/2, 1)",
                self.threshold
            )));
        }
        if self.s == 0 || self.search_rounds == 0 || self.walk_steps_per_round == 0 {
            return Err(Error::BadConfig("counts must be positive".into()));
        }
        if self.ae_grid < 2 || !self.ae_grid.is_power_of_two() {
            return Err(Error::BadConfig(format!(
                "ae_grid {} is not a power of two >= 2",
                self.ae_grid
            )));
        }
        if self.decide_restarts == 0 {
            return Err(Error::BadConfig("decide_restarts must be positive".into()));
        }
        Ok(())
    }

    /// Seed pool target for graphs on n vertices.
    pub fn pool(&self, n: usize) -> usize {
        self.s.min(n)
    }

    /// Apply one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::BadConfig(format!("{key}: {what} ({value})"));
        match key {
            "r" => self.r = value.parse().map_err(|_| bad("expected integer"))?,
            "threshold" => {
                self.threshold = value.parse().map_err(|_| bad("expected float"))?
            }
            "s" => self.s = value.parse().map_err(|_| bad("expected integer"))?,
            "search_rounds" => {
                self.search_rounds = value.parse().map_err(|_| bad("expected integer"))?
            }
            "walk_steps_per_round" => {
                self.walk_steps_per_round =
                    value.parse().map_err(|_| bad("expected integer"))?
            }
            "ae_grid" => self.ae_grid = value.parse().map_err(|_| bad("expected integer"))?,
            "decide_restarts" => {
                self.decide_restarts = value.parse().map_err(|_| bad("expected integer"))?
            }
            "use_score_ae" => {
                self.use_score_ae = value.parse().map_err(|_| bad("expected bool"))?
            }
            _ => return Err(Error::BadConfig(format!("unknown key {key}"))),
        }
        Ok(())
    }
}

/// Fraction of compatible third-vertex pairs, computed exhaustively:
/// over all i' != i, j' != j, the share with g(i,i') == h(j,j').
pub fn exact_consistency_fraction(g: &Graph, h: &Graph, x: ProductVertex) -> Result<f64> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    let n = g.n();
    if n < 2 {
        return Err(Error::SizeLimit { what: "consistency fraction", max: 20, n });
    }
    let mut agree = 0usize;
    for ip in 0..n {
        if ip == x.i {
            continue;
        }
        for jp in 0..n {
            if jp == x.j {
                continue;
            }
            if g.adjacency(x.i, ip)? == h.adjacency(x.j, jp)? {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / ((n - 1) * (n - 1)) as f64)
}

/// Indicator over product vertices: exact consistency above the threshold.
pub fn marked_set(g: &Graph, h: &Graph, threshold: f64) -> Result<Vec<bool>> {
    let n = g.n();
    let mut out = Vec::with_capacity(n * n);
    for idx in 0..n * n {
        let x = ProductVertex::from_index(idx, n);
        out.push(exact_consistency_fraction(g, h, x)? > threshold);
    }
    Ok(out)
}

/// Sampled marking decision: r third-vertex pairs, marked when the agreeing
/// share exceeds the threshold. Charges r classical reads per side.
pub fn marking_check(
    oracle: &mut QueryOracle,
    x: ProductVertex,
    threshold: f64,
    r: usize,
    rng: &mut Stream,
) -> Result<bool> {
    let n = oracle.n();
    if n < 2 {
        return Err(Error::SizeLimit { what: "marking check", max: 20, n });
    }
    let mut agree = 0usize;
    for _ in 0..r {
        let mut ip = rng.gen_range(0..n - 1);
        if ip >= x.i {
            ip += 1;
        }
        let mut jp = rng.gen_range(0..n - 1);
        if jp >= x.j {
            jp += 1;
        }
        let a = oracle.read(Side::G, x.i, ip)?;
        let b = oracle.read(Side::H, x.j, jp)?;
        if a == b {
            agree += 1;
        }
    }
    Ok(agree as f64 / r as f64 > threshold)
}

/// Adjacency, degrees, and sorted neighbor-degree profiles remembered from
/// paid-for reads. Acquisition reads every pair on both sides once.
pub struct LocalView {
    n: usize,
    g_adj: Vec<bool>,
    h_adj: Vec<bool>,
    pub g_deg: Vec<usize>,
    pub h_deg: Vec<usize>,
    g_prof: Vec<Vec<usize>>,
    h_prof: Vec<Vec<usize>>,
}

impl LocalView {
    pub fn acquire(oracle: &mut QueryOracle) -> Result<Self> {
        let n = oracle.n();
        let mut g_adj = vec![false; n * n];
        let mut h_adj = vec![false; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let a = oracle.read(Side::G, u, v)?;
                let b = oracle.read(Side::H, u, v)?;
                g_adj[u * n + v] = a;
                g_adj[v * n + u] = a;
                h_adj[u * n + v] = b;
                h_adj[v * n + u] = b;
            }
        }
        let deg = |adj: &[bool], v: usize| (0..n).filter(|&u| adj[v * n + u]).count();
        let g_deg: Vec<usize> = (0..n).map(|v| deg(&g_adj, v)).collect();
        let h_deg: Vec<usize> = (0..n).map(|v| deg(&h_adj, v)).collect();
        let prof = |adj: &[bool], degs: &[usize], v: usize| {
            let mut p: Vec<usize> =
                (0..n).filter(|&u| adj[v * n + u]).map(|u| degs[u]).collect();
            p.sort_unstable();
            p
        };
        let g_prof = (0..n).map(|v| prof(&g_adj, &g_deg, v)).collect();
        let h_prof = (0..n).map(|v| prof(&h_adj, &h_deg, v)).collect();
        Ok(LocalView { n, g_adj, h_adj, g_deg, h_deg, g_prof, h_prof })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g(&self, u: usize, v: usize) -> bool {
        u != v && self.g_adj[u * self.n + v]
    }

    pub fn h(&self, u: usize, v: usize) -> bool {
        u != v && self.h_adj[u * self.n + v]
    }

    /// Degree gap dominates; profile entries break ties among equal-degree
    /// candidates.
    pub fn profile_dist(&self, i: usize, w: usize) -> usize {
        let a = &self.g_prof[i];
        let b = &self.h_prof[w];
        let base = self.n * self.g_deg[i].abs_diff(self.h_deg[w]);
        let common = a.len().min(b.len());
        let tail: usize = (0..common).map(|k| a[k].abs_diff(b[k])).sum();
        base + tail
    }

    /// Pairs on which the candidate pairing disagrees.
    pub fn mismatch_of(&self, images: &[usize]) -> usize {
        let n = self.n;
        let mut c = 0;
        for u in 0..n {
            for v in u + 1..n {
                if self.g(u, v) != self.h(images[u], images[v]) {
                    c += 1;
                }
            }
        }
        c
    }

    /// Ascending-vertex greedy assignment by profile distance.
    pub fn greedy_profile_assignment(&self) -> Vec<usize> {
        let n = self.n;
        let mut claimed = vec![false; n];
        let mut images = vec![0usize; n];
        for v in 0..n {
            let w = (0..n)
                .filter(|&w| !claimed[w])
                .min_by_key(|&w| (self.profile_dist(v, w), w))
                .expect("n claims over n candidates");
            images[v] = w;
            claimed[w] = true;
        }
        images
    }

    /// Greedy swap descent on the mismatch count.
    pub fn hill_climb(&self, images: &mut [usize], rounds: usize) {
        let n = self.n;
        for _ in 0..rounds {
            let mut improved = false;
            for u in 0..n {
                for v in u + 1..n {
                    let mut delta = 0i64;
                    for t in 0..n {
                        if t == u || t == v {
                            continue;
                        }
                        let before = (self.g(u, t) != self.h(images[u], images[t])) as i64
                            + (self.g(v, t) != self.h(images[v], images[t])) as i64;
                        let after = (self.g(u, t) != self.h(images[v], images[t])) as i64
                            + (self.g(v, t) != self.h(images[u], images[t])) as i64;
                        delta += after - before;
                    }
                    if delta < 0 {
                        images.swap(u, v);
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
}

/// One walk attempt: alternate marked reflections with walk steps from the
/// stationary state, measure the first register, refine the image half by
/// profile distance.
fn run_search_attempt(
    ctx: &WalkContext,
    marked: &[bool],
    oracle: &mut QueryOracle,
    local: &LocalView,
    cfg: &PipelineConfig,
    rng: &mut Stream,
) -> (usize, usize) {
    let mut state = EdgeState::stationary(ctx);
    for _ in 0..cfg.search_rounds {
        reflect_marked(&mut state, marked, oracle, cfg.r as u64);
        for _ in 0..cfg.walk_steps_per_round {
            apply_walk(&mut state, ctx, oracle);
        }
    }
    let x = state.sample_first_register(rng);
    let j = (0..local.n)
        .min_by_key(|&w| (local.profile_dist(x.i, w), w))
        .expect("nonempty candidate set");
    (x.i, j)
}

/// Search for one confirmable seed: up to three walk attempts, each gated
/// by a sampled marking check.
pub fn quantum_walk_search(
    ctx: &WalkContext,
    marked: &[bool],
    oracle: &mut QueryOracle,
    local: &LocalView,
    cfg: &PipelineConfig,
    rng: &mut Stream,
) -> Result<Option<(usize, usize)>> {
    for _ in 0..3 {
        let (i, j) = run_search_attempt(ctx, marked, oracle, local, cfg, rng);
        if marking_check(oracle, ProductVertex { i, j }, cfg.threshold, cfg.r, rng)? {
            return Ok(Some((i, j)));
        }
    }
    Ok(None)
}

/// Collect confirmed seeds with distinct first entries. Stops at the pool
/// target, after a bounded number of failed searches, once recent attempts
/// stop producing new firsts, or at the hard attempt cap, whichever comes
/// first. The stagnation stop matters when few product vertices clear the
/// marking bar: attempts then keep confirming the same pairs.
pub fn collect_seeds(
    ctx: &WalkContext,
    marked: &[bool],
    oracle: &mut QueryOracle,
    local: &LocalView,
    cfg: &PipelineConfig,
    rng: &mut Stream,
) -> Result<(Vec<(usize, usize)>, usize)> {
    let n = ctx.n();
    let pool = cfg.pool(n);
    let fail_cap = (pool / 2).max(6);
    let stagnation_cap = (pool / 4).max(4);
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    let mut seen_first = vec![false; n];
    let mut attempts = 0;
    let mut failed = 0;
    let mut stagnant = 0;
    while seeds.len() < pool
        && failed < fail_cap
        && stagnant < stagnation_cap
        && attempts < 10 * cfg.s
    {
        attempts += 1;
        let mut grew = false;
        if let Some((i, j)) = quantum_walk_search(ctx, marked, oracle, local, cfg, rng)? {
            if !seen_first[i] {
                seen_first[i] = true;
                seeds.push((i, j));
                grew = true;
            }
        } else {
            failed += 1;
        }
        if grew {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
    }
    Ok((seeds, attempts))
}

/// Seed adjacency rows remembered from paid-for reads: one G row per seed
/// first, one H row per seed image. Costs at most 2*s*(n-1) reads.
pub struct SeedTables {
    pub firsts: Vec<usize>,
    pub images: Vec<usize>,
    g_rows: Vec<Vec<bool>>,
    h_rows: Vec<Vec<bool>>,
}

impl SeedTables {
    pub fn read(oracle: &mut QueryOracle, seeds: &[(usize, usize)]) -> Result<Self> {
        let n = oracle.n();
        let mut firsts = Vec::with_capacity(seeds.len());
        let mut images = Vec::with_capacity(seeds.len());
        let mut g_rows = Vec::with_capacity(seeds.len());
        let mut h_rows = Vec::with_capacity(seeds.len());
        for &(i, j) in seeds {
            let mut gr = vec![false; n];
            let mut hr = vec![false; n];
            for v in 0..n {
                if v != i {
                    gr[v] = oracle.read(Side::G, i, v)?;
                }
                if v != j {
                    hr[v] = oracle.read(Side::H, j, v)?;
                }
            }
            firsts.push(i);
            images.push(j);
            g_rows.push(gr);
            h_rows.push(hr);
        }
        Ok(SeedTables { firsts, images, g_rows, h_rows })
    }

    /// Remembered-row mismatch of a full assignment: compares G(first_k, u)
    /// with H(image_k, pi[u]) over every seed row and column, skipping the
    /// diagonal collisions. Both bits already sit in the tables, so this
    /// costs nothing beyond the reads that built them.
    pub fn assignment_mismatch(&self, pi: &[usize]) -> (usize, usize) {
        let n = pi.len();
        let mut bad = 0;
        let mut total = 0;
        for k in 0..self.firsts.len() {
            let i = self.firsts[k];
            let j = self.images[k];
            for u in 0..n {
                if u == i || pi[u] == j {
                    continue;
                }
                total += 1;
                if self.g_rows[k][u] != self.h_rows[k][pi[u]] {
                    bad += 1;
                }
            }
        }
        (bad, total)
    }

    /// Positions where the signature of v against the seed firsts differs
    /// from that of w against the seed images. Positions colliding with v
    /// or w are skipped; returns (disagreements, valid positions).
    pub fn disagreement(&self, v: usize, w: usize) -> (usize, usize) {
        let mut bad = 0;
        let mut valid = 0;
        for k in 0..self.firsts.len() {
            if self.firsts[k] == v || self.images[k] == w {
                continue;
            }
            valid += 1;
            if self.g_rows[k][v] != self.h_rows[k][w] {
                bad += 1;
            }
        }
        (bad, valid)
    }
}

/// Signature disagreement with fresh reads, 2 per usable seed position.
pub fn signature_disagreement(
    oracle: &mut QueryOracle,
    v: usize,
    w: usize,
    seeds: &[(usize, usize)],
) -> Result<usize> {
    let mut bad = 0;
    for &(i, j) in seeds {
        if i == v || j == w {
            continue;
        }
        let a = oracle.read(Side::G, v, i)?;
        let b = oracle.read(Side::H, w, j)?;
        if a != b {
            bad += 1;
        }
    }
    Ok(bad)
}

pub struct ReconstructReport {
    pub pi: Permutation,
    pub signature_resolved: usize,
    pub forced: usize,
}

/// Signature-vote reconstruction: ascending vertices claim the unique
/// signature minimizer when its disagreement is below a quarter of the
/// seed count; everything else is forced afterwards.
pub fn reconstruct(
    oracle: &mut QueryOracle,
    local: &LocalView,
    seeds: &[(usize, usize)],
    sample_s: usize,
    rng: &mut Stream,
) -> Result<ReconstructReport> {
    let tables = SeedTables::read(oracle, seeds)?;
    reconstruct_from_tables(&tables, oracle, local, sample_s, rng)
}

/// Reconstruction against tables the caller already read and paid for.
pub fn reconstruct_from_tables(
    tables: &SeedTables,
    oracle: &mut QueryOracle,
    local: &LocalView,
    sample_s: usize,
    rng: &mut Stream,
) -> Result<ReconstructReport> {
    let n = local.n();
    let bar = tables.firsts.len() as f64 / 4.0;
    let mut images: Vec<Option<usize>> = vec![None; n];
    let mut claimed = vec![false; n];
    for v in 0..n {
        let mut best: Option<(usize, usize)> = None;
        let mut ties = 0usize;
        for w in 0..n {
            if claimed[w] {
                continue;
            }
            let (d, _) = tables.disagreement(v, w);
            match best {
                None => {
                    best = Some((d, w));
                    ties = 1;
                }
                Some((bd, _)) if d < bd => {
                    best = Some((d, w));
                    ties = 1;
                }
                Some((bd, _)) if d == bd => ties += 1,
                _ => {}
            }
        }
        if let Some((d, w)) = best {
            if ties == 1 && (d as f64) < bar {
                images[v] = Some(w);
                claimed[w] = true;
            }
        }
    }
    let signature_resolved = images.iter().filter(|i| i.is_some()).count();
    let unresolved: Vec<usize> =
        (0..n).filter(|&v| images[v].is_none()).collect();
    let forced = unresolved.len();
    resolve_high_defect(local, &mut images, &mut claimed, &unresolved, oracle, sample_s, rng);
    let full: Vec<usize> = images.into_iter().map(|i| i.expect("all assigned")).collect();
    Ok(ReconstructReport { pi: Permutation::from_images(full)?, signature_resolved, forced })
}

/// Assign each leftover vertex to the unclaimed image minimizing sampled
/// disagreement against the current assignment; ties take the lowest
/// index. Models a searched selection: charges ceil(sqrt(n)) coherent
/// image-side queries per vertex, while the sampled comparisons reuse
/// remembered adjacency.
pub fn resolve_high_defect(
    local: &LocalView,
    images: &mut [Option<usize>],
    claimed: &mut [bool],
    unresolved: &[usize],
    oracle: &mut QueryOracle,
    sample_s: usize,
    rng: &mut Stream,
) {
    let n = local.n();
    let lump = (n as f64).sqrt().ceil() as u64;
    for &v in unresolved {
        let assigned: Vec<usize> =
            (0..n).filter(|&u| u != v && images[u].is_some()).collect();
        let k = sample_s.min(assigned.len());
        let picks: Vec<usize> = if k == assigned.len() {
            assigned.clone()
        } else {
            index_sample(rng, assigned.len(), k).iter().map(|t| assigned[t]).collect()
        };
        let w = (0..n)
            .filter(|&w| !claimed[w])
            .min_by_key(|&w| {
                let d = picks
                    .iter()
                    .filter(|&&u| local.g(v, u) != local.h(w, images[u].unwrap()))
                    .count();
                (d, w)
            })
            .expect("unresolved vertices never outnumber unclaimed images");
        images[v] = Some(w);
        claimed[w] = true;
        oracle.charge_coherent(Side::H, lump);
    }
}

/// Kernel of the exact phase-measurement distribution on an M-point grid.
fn qpe_kernel(delta: f64, m: usize) -> f64 {
    if (delta - delta.round()).abs() < 1e-12 {
        return 1.0;
    }
    let num = (m as f64 * PI * delta).sin();
    let den = m as f64 * (PI * delta).sin();
    (num / den).powi(2)
}

/// Exact phase-measurement outcome distribution for amplitude p on an
/// M-point grid. Index y carries the estimate sin^2(pi y / M).
pub fn amplitude_distribution(p: f64, m: usize) -> Vec<f64> {
    let phi = p.clamp(0.0, 1.0).sqrt().asin() / PI;
    let mf = m as f64;
    (0..m)
        .map(|y| {
            let d = y as f64 / mf;
            0.5 * qpe_kernel(d - phi, m) + 0.5 * qpe_kernel(d + phi, m)
        })
        .collect()
}

/// Draw one amplitude estimate of p from the exact measurement
/// distribution of phase estimation on an M-point grid.
pub fn amplitude_estimate(p: f64, m: usize, rng: &mut Stream) -> f64 {
    let mf = m as f64;
    let probs = amplitude_distribution(p, m);
    let mut u: f64 = rng.gen();
    let mut pick = m - 1;
    for (y, &p) in probs.iter().enumerate() {
        if u < p {
            pick = y;
            break;
        }
        u -= p;
    }
    (PI * pick as f64 / mf).sin().powi(2)
}

/// Estimate the mismatch fraction of a candidate pairing and accept when
/// the estimate is at most 3/2 of the tolerance. Charges ae_grid coherent
/// queries per side.
pub fn verify(
    g: &Graph,
    h: &Graph,
    pi: &Permutation,
    epsilon: f64,
    cfg: &PipelineConfig,
    oracle: &mut QueryOracle,
    rng: &mut Stream,
) -> Result<(bool, f64)> {
    let p_true = edit_distance_under(g, h, pi)? as f64 / g.pair_count() as f64;
    let est = amplitude_estimate(p_true, cfg.ae_grid, rng);
    oracle.charge_coherent(Side::G, cfg.ae_grid as u64);
    oracle.charge_coherent(Side::H, cfg.ae_grid as u64);
    Ok((est <= 1.5 * epsilon, est))
}

/// Coherent agreement scorer: amplitude-estimate the signature agreement
/// fraction of (v, w) on a ceil(pi/delta)-point grid, charging that many
/// queries per side.
pub fn score_ae(
    g: &Graph,
    h: &Graph,
    oracle: &mut QueryOracle,
    v: usize,
    w: usize,
    seeds: &[(usize, usize)],
    delta: f64,
    rng: &mut Stream,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadConfig(format!("score_ae delta {delta}")));
    }
    let mut agree = 0usize;
    let mut valid = 0usize;
    for &(i, j) in seeds {
        if i == v || j == w {
            continue;
        }
        valid += 1;
        if g.adjacency(v, i)? == h.adjacency(w, j)? {
            agree += 1;
        }
    }
    let p = if valid == 0 { 1.0 } else { agree as f64 / valid as f64 };
    let m = (PI / delta).ceil() as usize;
    oracle.charge_coherent(Side::G, m as u64);
    oracle.charge_coherent(Side::H, m as u64);
    Ok(amplitude_estimate(p, m.max(2), rng))
}

/// Consensus assignment from pairwise-consistent seed triples: extend each
/// consistent triple greedily, polish by swap descent, keep the lowest
/// mismatch. Works entirely from remembered adjacency.
fn ransac_assignment(local: &LocalView, seeds: &[(usize, usize)]) -> Option<Vec<usize>> {
    let n = local.n();
    let p = seeds.len();
    if p < 3 {
        return None;
    }
    let ok = |a: usize, b: usize| {
        let (ia, ja) = seeds[a];
        let (ib, jb) = seeds[b];
        ja != jb && local.g(ia, ib) == local.h(ja, jb)
    };
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut tried = 0;
    'outer: for a in 0..p {
        for b in a + 1..p {
            if !ok(a, b) {
                continue;
            }
            for c in b + 1..p {
                if !(ok(a, c) && ok(b, c)) {
                    continue;
                }
                tried += 1;
                let anchors = [seeds[a], seeds[b], seeds[c]];
                let mut images = vec![usize::MAX; n];
                let mut claimed = vec![false; n];
                for (i, j) in anchors {
                    images[i] = j;
                    claimed[j] = true;
                }
                for v in 0..n {
                    if images[v] != usize::MAX {
                        continue;
                    }
                    let w = (0..n)
                        .filter(|&w| !claimed[w])
                        .min_by_key(|&w| {
                            let d = anchors
                                .iter()
                                .filter(|&&(i, j)| local.g(v, i) != local.h(w, j))
                                .count();
                            (d, local.profile_dist(v, w), w)
                        })
                        .expect("unclaimed image available");
                    images[v] = w;
                    claimed[w] = true;
                }
                local.hill_climb(&mut images, 3);
                let score = local.mismatch_of(&images);
                if best.as_ref().map_or(true, |(bs, _)| score < *bs) {
                    best = Some((score, images));
                }
                if tried >= 30 {
                    break 'outer;
                }
            }
        }
    }
    best.map(|(_, images)| images)
}

/// Build the candidate pairing from the collected seeds: consensus when at
/// least a triple agrees, the signature rule on the (possibly corrected)
/// seeds, and a profile-greedy fallback. Lowest mismatch wins.
fn phase2(
    oracle: &mut QueryOracle,
    local: &LocalView,
    seeds: &[(usize, usize)],
    cfg: &PipelineConfig,
    rng: &mut Stream,
) -> Result<(Vec<usize>, &'static str, usize)> {
    let mut candidates: Vec<(Vec<usize>, &'static str)> = Vec::new();
    let consensus = ransac_assignment(local, seeds);
    let effective: Vec<(usize, usize)> = match &consensus {
        Some(images) => seeds.iter().map(|&(i, _)| (i, images[i])).collect(),
        None => seeds.to_vec(),
    };
    if let Some(images) = consensus {
        candidates.push((images, "consensus"));
    }
    if !effective.is_empty() {
        let rep = reconstruct(oracle, local, &effective, cfg.s, rng)?;
        candidates.push((rep.pi.images().to_vec(), "signature"));
    }
    let mut greedy = local.greedy_profile_assignment();
    local.hill_climb(&mut greedy, 3);
    candidates.push((greedy, "profile"));
    let (images, tag) = candidates
        .into_iter()
        .min_by_key(|(images, _)| local.mismatch_of(images))
        .expect("profile candidate always present");
    let mism = local.mismatch_of(&images);
    Ok((images, tag, mism))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryTotals {
    pub classical_g: u64,
    pub classical_h: u64,
    pub coherent_g: u64,
    pub coherent_h: u64,
}

impl From<&QueryCounter> for QueryTotals {
    fn from(c: &QueryCounter) -> Self {
        QueryTotals {
            classical_g: c.classical_g,
            classical_h: c.classical_h,
            coherent_g: c.coherent_g,
            coherent_h: c.coherent_h,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub answer: Label,
    pub estimate: f64,
    pub queries: QueryTotals,
    pub phase_log: Vec<String>,
    pub pi_hat: Option<Vec<usize>>,
    pub seed: u64,
}

/// Full decision procedure. Yes is only ever reported after the estimated
/// mismatch fraction of a concrete pairing passes verification, so the
/// restart count does not affect soundness.
pub fn decide(
    g: &Graph,
    h: &Graph,
    epsilon: f64,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<(Verdict, QueryCounter)> {
    check_epsilon(epsilon)?;
    cfg.validate()?;
    let ctx = WalkContext::new(g, h)?;
    let mut rng = rng::stream(seed, LANE_DECIDE);
    let mut oracle = QueryOracle::new(g, h)?;
    let local = LocalView::acquire(&mut oracle)?;
    let marked = marked_set(g, h, cfg.threshold)?;
    let mut phase_log = Vec::new();
    let mut best_est = f64::INFINITY;
    let mut best_pi: Option<Vec<usize>> = None;
    let mut answer = Label::No;
    for restart in 0..cfg.decide_restarts {
        let (seeds, attempts) = collect_seeds(&ctx, &marked, &mut oracle, &local, cfg, &mut rng)?;
        phase_log.push(format!(
            "restart {restart} phase1: {} seeds from {attempts} attempts",
            seeds.len()
        ));
        let (images, tag, mism) = phase2(&mut oracle, &local, &seeds, cfg, &mut rng)?;
        phase_log.push(format!(
            "restart {restart} phase2: {tag} assignment, {mism} mismatched pairs"
        ));
        if cfg.use_score_ae {
            let n = g.n();
            let mut low = 0;
            for v in 0..n {
                let sc = score_ae(g, h, &mut oracle, v, images[v], &seeds, epsilon, &mut rng)?;
                if sc < 0.75 {
                    low += 1;
                }
            }
            phase_log.push(format!("restart {restart} scoring: {low} low-agreement vertices"));
        }
        let pi = Permutation::from_images(images.clone())?;
        let (pass, est) = verify(g, h, &pi, epsilon, cfg, &mut oracle, &mut rng)?;
        phase_log.push(format!("restart {restart} phase3: estimate {est:.6}"));
        if est < best_est {
            best_est = est;
            best_pi = Some(images);
        }
        if pass {
            answer = Label::Yes;
            break;
        }
    }
    let counter = oracle.into_counter();
    let verdict = Verdict {
        answer,
        estimate: best_est,
        queries: QueryTotals::from(&counter),
        phase_log,
        pi_hat: best_pi,
        seed,
    };
    Ok((verdict, counter))
}

/// Seed collection alone, answering yes when at least half the pool
/// confirms. Measures how far the walk gets without reconstruction.
pub fn walk_only_decide(
    g: &Graph,
    h: &Graph,
    epsilon: f64,
    seed: u64,
    cfg: &PipelineConfig,
) -> Result<(bool, QueryCounter)> {
    check_epsilon(epsilon)?;
    cfg.validate()?;
    let ctx = WalkContext::new(g, h)?;
    let mut rng = rng::stream(seed, LANE_DECIDE);
    let mut oracle = QueryOracle::new(g, h)?;
    let local = LocalView::acquire(&mut oracle)?;
    let marked = marked_set(g, h, cfg.threshold)?;
    let (seeds, _) = collect_seeds(&ctx, &marked, &mut oracle, &local, cfg, &mut rng)?;
    let yes = 2 * seeds.len() >= cfg.pool(g.n());
    Ok((yes, oracle.into_counter()))
}

/// Classical reference strategy on a caller-owned oracle: sample pair
/// positions under the identity and ten random relabelings, answer yes
/// when the best observed mismatch fraction clears the acceptance band.
/// Reads at most `budget` oracle answers.
pub fn baseline_core(
    oracle: &mut QueryOracle,
    epsilon: f64,
    budget: u64,
    rng: &mut Stream,
) -> Result<(Label, f64, Vec<usize>)> {
    let n = oracle.n();
    let mut perms = vec![Permutation::identity(n)];
    for _ in 0..10 {
        perms.push(Permutation::uniform(n, rng));
    }
    let positions_total = (budget / 2) as usize;
    let per = (positions_total / perms.len()).max(1);
    let mut used = 0usize;
    let mut best: Option<(f64, usize)> = None;
    for (idx, pi) in perms.iter().enumerate() {
        let mut mism = 0usize;
        let mut seen = 0usize;
        while seen < per && used < positions_total {
            let (u, v) = random_pair(n, rng);
            let a = oracle.read(Side::G, u, v)?;
            let b = oracle.read(Side::H, pi.apply(u), pi.apply(v))?;
            used += 1;
            seen += 1;
            if a != b {
                mism += 1;
            }
        }
        if seen == 0 {
            break;
        }
        let frac = mism as f64 / seen as f64;
        if best.map_or(true, |(b, _)| frac < b) {
            best = Some((frac, idx));
        }
    }
    // An empty budget observes nothing; report the worst possible fraction.
    let (frac, idx) = best.unwrap_or((1.0, 0));
    let answer = if frac <= 1.5 * epsilon { Label::Yes } else { Label::No };
    Ok((answer, frac, perms[idx].images().to_vec()))
}

/// Classical reference decider over a fresh oracle; see `baseline_core`.
pub fn baseline_decide(
    g: &Graph,
    h: &Graph,
    epsilon: f64,
    budget: u64,
    seed: u64,
) -> Result<(Verdict, QueryCounter)> {
    check_epsilon(epsilon)?;
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    let mut rng = rng::stream(seed, LANE_BASELINE);
    let mut oracle = QueryOracle::new(g, h)?;
    let (answer, estimate, images) = baseline_core(&mut oracle, epsilon, budget, &mut rng)?;
    let counter = oracle.into_counter();
    let verdict = Verdict {
        answer,
        estimate,
        queries: QueryTotals::from(&counter),
        phase_log: vec![format!("baseline: 11 relabelings, budget {budget}")],
        pi_hat: Some(images),
        seed,
    };
    Ok((verdict, counter))
}
