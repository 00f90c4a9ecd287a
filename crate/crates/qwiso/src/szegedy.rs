//! Exact statevector simulation of the quantized product-chain walk.
//!
//! The walk lives on the edge space: n^4 amplitudes indexed by ordered
//! pairs (x, y) of product vertices, laid out as n^2 contiguous blocks of
//! n^2 by first register. One step applies ref(A) then ref(B), where A is
//! spanned by the |x>|psi_x> blocks and B by their register-swapped
//! mirrors (the chain is symmetric, so the mirror blocks are exact).
//!
//! Simulation reads the graphs directly; conceptual oracle use is charged
//! through the counter per subroutine.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};
use crate::oracle::{QueryOracle, Side};
use crate::product::{component_count, transition_prob, ProductVertex};
use crate::rng::Stream;
use rand::Rng;

type C64 = Complex<f64>;

pub const WALK_SIZE_LIMIT: usize = 20;
pub const EIGENPHASE_SIZE_LIMIT: usize = 6;

/// Precomputed square roots of the chain's transition matrix, row-major
/// over n^2 x n^2. Row x is the psi_x block over the second register.
pub struct WalkContext {
    n: usize,
    sqrt_p: Vec<f64>,
}

impl WalkContext {
    pub fn new(g: &Graph, h: &Graph) -> Result<Self> {
        if g.n() != h.n() {
            return Err(Error::SizeMismatch(g.n(), h.n()));
        }
        let n = g.n();
        if n > WALK_SIZE_LIMIT {
            return Err(Error::SizeLimit { what: "edge-space walk", max: WALK_SIZE_LIMIT, n });
        }
        if n < 2 {
            return Err(Error::SizeLimit { what: "edge-space walk", max: WALK_SIZE_LIMIT, n });
        }
        let nn = n * n;
        let mut sqrt_p = vec![0.0; nn * nn];
        for xi in 0..nn {
            let x = ProductVertex::from_index(xi, n);
            for yi in 0..nn {
                let y = ProductVertex::from_index(yi, n);
                sqrt_p[xi * nn + yi] = transition_prob(x, y, g, h).sqrt();
            }
        }
        Ok(WalkContext { n, sqrt_p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The unit vector over the second register attached to first-register x.
    pub fn psi_block(&self, x: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.sqrt_p[x * nn..(x + 1) * nn]
    }
}

/// Normalized state on the edge space.
#[derive(Clone)]
pub struct EdgeState {
    n: usize,
    amp: Vec<C64>,
}

impl EdgeState {
    /// The exact eigenvalue-1 state: sum_x sqrt(mu(x)) |x>|psi_x>.
    pub fn stationary(ctx: &WalkContext) -> Self {
        let nn = ctx.n * ctx.n;
        let w = 1.0 / ctx.n as f64; // sqrt(1/n^2)
        let mut amp = vec![C64::new(0.0, 0.0); nn * nn];
        for x in 0..nn {
            let block = ctx.psi_block(x);
            for y in 0..nn {
                amp[x * nn + y] = C64::new(w * block[y], 0.0);
            }
        }
        EdgeState { n: ctx.n, amp }
    }

    /// Point mass |x0>|psi_x0>.
    pub fn vertex_start(ctx: &WalkContext, x0: usize) -> Self {
        let nn = ctx.n * ctx.n;
        let mut amp = vec![C64::new(0.0, 0.0); nn * nn];
        let block = ctx.psi_block(x0);
        for y in 0..nn {
            amp[x0 * nn + y] = C64::new(block[y], 0.0);
        }
        EdgeState { n: ctx.n, amp }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// l2 distance to another state on the same product space.
    pub fn distance_to(&self, other: &EdgeState) -> f64 {
        assert_eq!(self.n, other.n, "states live on different product spaces");
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Marginal distribution of the first register.
    pub fn measure_first_register(&self) -> Vec<f64> {
        let nn = self.n * self.n;
        let mut probs = vec![0.0; nn];
        for x in 0..nn {
            probs[x] = self.amp[x * nn..(x + 1) * nn]
                .iter()
                .map(|a| a.norm_sqr())
                .sum();
        }
        probs
    }

    /// Draw one first-register outcome.
    pub fn sample_first_register(&self, rng: &mut Stream) -> ProductVertex {
        let probs = self.measure_first_register();
        let mut u: f64 = rng.gen();
        let mut last = 0;
        for (x, &p) in probs.iter().enumerate() {
            last = x;
            if u < p {
                return ProductVertex::from_index(x, self.n);
            }
            u -= p;
        }
        ProductVertex::from_index(last, self.n)
    }
}

fn reflect_a_in_place(amp: &mut [C64], ctx: &WalkContext) {
    let nn = ctx.n * ctx.n;
    for x in 0..nn {
        let block = ctx.psi_block(x);
        let slice = &mut amp[x * nn..(x + 1) * nn];
        let mut c = C64::new(0.0, 0.0);
        for (a, &p) in slice.iter().zip(block) {
            c += a * p;
        }
        let c2 = c * 2.0;
        for (a, &p) in slice.iter_mut().zip(block) {
            *a = c2 * p - *a;
        }
    }
}

fn swap_registers(amp: &mut [C64], nn: usize) {
    for x in 0..nn {
        for y in x + 1..nn {
            amp.swap(x * nn + y, y * nn + x);
        }
    }
}

/// One walk step: ref(A), then ref(B) as swap-conjugated ref(A). Charges
/// one coherent query per oracle side.
pub fn apply_walk(state: &mut EdgeState, ctx: &WalkContext, oracle: &mut QueryOracle) {
    let nn = ctx.n * ctx.n;
    reflect_a_in_place(&mut state.amp, ctx);
    swap_registers(&mut state.amp, nn);
    reflect_a_in_place(&mut state.amp, ctx);
    swap_registers(&mut state.amp, nn);
    oracle.charge_coherent(Side::G, 1);
    oracle.charge_coherent(Side::H, 1);
}

/// Sign flip on amplitudes whose first register is marked. The checking
/// cost is the sampled-oracle rate: r queries to each side.
pub fn reflect_marked(
    state: &mut EdgeState,
    marked: &[bool],
    oracle: &mut QueryOracle,
    r: u64,
) {
    let nn = state.n * state.n;
    debug_assert_eq!(marked.len(), nn);
    for (x, &m) in marked.iter().enumerate() {
        if m {
            for a in &mut state.amp[x * nn..(x + 1) * nn] {
                *a = -*a;
            }
        }
    }
    oracle.charge_coherent(Side::G, r);
    oracle.charge_coherent(Side::H, r);
}

/// Eigenphases of the swap-reflect factor restricted to its invariant
/// subspace, sorted ascending. The square of this operator is one walk
/// step, so phases here are half the two-reflection phases; in this
/// convention a chain eigenvalue lambda maps to the pair +-arccos(lambda),
/// with each connected component contributing a single 0.
///
/// The restricted operator is real orthogonal, so its non-real
/// eigenvalues come in conjugate pairs and the whole phase multiset is
/// recoverable from the symmetric part (Vr + Vr^T)/2, whose eigenvalues
/// are the phase cosines. Everything runs through symmetric eigensolves;
/// the general Schur iteration is avoided because it fails to converge on
/// orthogonal matrices with eigenvalues at exactly +-i, which a chain
/// eigenvalue of 0 produces.
pub fn walk_eigenphases(g: &Graph, h: &Graph) -> Result<Vec<f64>> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    let n = g.n();
    if n > EIGENPHASE_SIZE_LIMIT {
        return Err(Error::SizeLimit {
            what: "edge-space eigensolve",
            max: EIGENPHASE_SIZE_LIMIT,
            n,
        });
    }
    let ctx = WalkContext::new(g, h)?;
    let nn = n * n;
    let dim = nn * nn;

    // Columns: psi_x for each x, then their register swaps.
    let mut m = DMatrix::<f64>::zeros(dim, 2 * nn);
    for x in 0..nn {
        let block = ctx.psi_block(x);
        for y in 0..nn {
            m[(x * nn + y, x)] = block[y];
            m[(y * nn + x, nn + x)] = block[y];
        }
    }
    let c = component_count(g, h)?;
    let rank = 2 * nn - c;

    // Orthonormalize by modified Gram-Schmidt with a second projection
    // pass. The psi columns are mutually orthogonal (disjoint first
    // registers), likewise the swapped copies; each connected component
    // contributes exactly one dependency between the two families, so the
    // drop count must equal the component count. A Gram-matrix
    // eigendecomposition finds the same span in exact arithmetic, but its
    // eigenvectors lose mutual orthogonality on the heavily degenerate
    // spectra these chains produce, which poisons the restriction below.
    let mut q = DMatrix::<f64>::zeros(dim, rank);
    let mut kept = 0usize;
    let mut dropped = 0usize;
    for ci in 0..2 * nn {
        let mut v: Vec<f64> = (0..dim).map(|i| m[(i, ci)]).collect();
        for _ in 0..2 {
            for k in 0..kept {
                let mut proj = 0.0;
                for i in 0..dim {
                    proj += q[(i, k)] * v[i];
                }
                for i in 0..dim {
                    v[i] -= proj * q[(i, k)];
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-6 {
            dropped += 1;
            continue;
        }
        assert!(norm > 1e-3, "dependency not cleanly separated");
        assert!(kept < rank, "rank above span size");
        for i in 0..dim {
            q[(i, kept)] = v[i] / norm;
        }
        kept += 1;
    }
    assert_eq!(dropped, c, "dependency count differs from component count");
    assert_eq!(kept, rank);

    // Apply V = S * ref(A) to each basis column, then restrict.
    let mut vq = DMatrix::<f64>::zeros(dim, rank);
    let mut col = vec![C64::new(0.0, 0.0); dim];
    for k in 0..rank {
        for (i, cv) in col.iter_mut().enumerate() {
            *cv = C64::new(q[(i, k)], 0.0);
        }
        reflect_a_in_place(&mut col, &ctx);
        swap_registers(&mut col, nn);
        for i in 0..dim {
            vq[(i, k)] = col[i].re;
        }
    }
    let vr = q.transpose() * vq;

    // Phase cosines from the symmetric part. The top c must sit at 1 (the
    // per-component stationary states); the rest pair up as +-theta.
    let sym = (&vr + vr.transpose()) * 0.5;
    let seig = sym.symmetric_eigen();
    let mut cosines: Vec<f64> = seig.eigenvalues.iter().copied().collect();
    cosines.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &mu in &cosines {
        assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&mu), "not orthogonal");
    }
    let paired = &cosines[..rank - c];
    for mu in &cosines[rank - c..] {
        assert!((mu - 1.0).abs() < 1e-9, "fixed-point count mismatch");
    }
    let mut phases = Vec::with_capacity(rank);
    phases.resize(c, 0.0);
    let mut k = 0;
    while k < paired.len() {
        assert!(
            k + 1 < paired.len() && (paired[k + 1] - paired[k]).abs() < 1e-7,
            "conjugate pairing broken"
        );
        let theta = (0.5 * (paired[k] + paired[k + 1])).clamp(-1.0, 1.0).acos();
        phases.push(theta);
        phases.push(-theta);
        k += 2;
    }
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(phases)
}

/// The multiset walk_eigenphases must reproduce, built from the chain
/// spectrum: one 0 per connected component, +-arccos(lambda) for every
/// eigenvalue below 1. Sorted ascending.
pub fn chain_reference_phases(g: &Graph, h: &Graph) -> Result<Vec<f64>> {
    let spectrum = crate::product::chain_spectrum(g, h)?;
    let c = component_count(g, h)?;
    let below = spectrum.len() - c;
    let mut phases = Vec::with_capacity(2 * below + c);
    phases.resize(c, 0.0);
    for &l in &spectrum[..below] {
        let t = l.clamp(-1.0, 1.0).acos();
        phases.push(t);
        phases.push(-t);
    }
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(phases)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ProbeConvention {
    /// Start in the stationary state: the trajectory is constant 1/n.
    Stationary,
    /// Start at |x0>|psi_x0> for uniform x0; report the running time
    /// average of Pr[matching set], averaged over sampled starts.
    VertexStartCesaro,
}

/// Pr[first register lands in M_pi] after t steps, for t = 0..=t_max.
pub fn walk_probe(
    g: &Graph,
    h: &Graph,
    pi: &Permutation,
    t_max: usize,
    convention: ProbeConvention,
    trials: usize,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    let ctx = WalkContext::new(g, h)?;
    let n = ctx.n;
    let nn = n * n;
    if pi.n() != n {
        return Err(Error::SizeMismatch(n, pi.n()));
    }
    let mut matching = vec![false; nn];
    for i in 0..n {
        matching[ProductVertex { i, j: pi.apply(i) }.index(n)] = true;
    }
    let prob_matching = |state: &EdgeState| -> f64 {
        state
            .measure_first_register()
            .iter()
            .zip(&matching)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p)
            .sum()
    };
    match convention {
        ProbeConvention::Stationary => {
            let mut state = EdgeState::stationary(&ctx);
            let mut o = QueryOracle::new(g, h)?;
            let mut out = Vec::with_capacity(t_max + 1);
            out.push(prob_matching(&state));
            for _ in 0..t_max {
                apply_walk(&mut state, &ctx, &mut o);
                out.push(prob_matching(&state));
            }
            Ok(out)
        }
        ProbeConvention::VertexStartCesaro => {
            let trials = trials.max(1);
            let mut acc = vec![0.0; t_max + 1];
            for _ in 0..trials {
                let x0 = rng.gen_range(0..nn);
                let mut state = EdgeState::vertex_start(&ctx, x0);
                let mut o = QueryOracle::new(g, h)?;
                let mut running = 0.0;
                for t in 0..=t_max {
                    if t > 0 {
                        apply_walk(&mut state, &ctx, &mut o);
                    }
                    running += prob_matching(&state);
                    acc[t] += running / (t + 1) as f64;
                }
            }
            for v in &mut acc {
                *v /= trials as f64;
            }
            Ok(acc)
        }
    }
}

/// Depolarizing mixture: survival gamma = (1-p_err)^gates_per_step decays
/// the ideal signal toward the fully mixed hit rate.
pub fn depolarized_prob(
    p_ideal: f64,
    t_steps: u32,
    p_err: f64,
    gates_per_step: u32,
    target_fraction: f64,
) -> f64 {
    let gamma = (1.0 - p_err).powi(gates_per_step as i32);
    let survive = gamma.powi(t_steps as i32);
    survive * p_ideal + (1.0 - survive) * target_fraction
}

pub fn trajectory_csv(ideal: &[f64], noisy: &[f64]) -> String {
    let mut out = String::from("t,prob_matching,prob_matching_noisy\n");
    for (t, (a, b)) in ideal.iter().zip(noisy).enumerate() {
        out.push_str(&format!("{t},{a},{b}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_gnp, Graph};
    use crate::rng;

    fn random_pair(n: usize, seed: u64) -> (Graph, Graph) {
        let mut rng = rng::stream(seed, 7);
        (gen_gnp(n, 0.5, &mut rng).unwrap(), gen_gnp(n, 0.5, &mut rng).unwrap())
    }

    fn random_state(ctx: &WalkContext, rng: &mut Stream) -> EdgeState {
        let nn = ctx.n() * ctx.n();
        let mut amp: Vec<C64> = (0..nn * nn)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amp {
            *a /= norm;
        }
        EdgeState { n: ctx.n(), amp }
    }

    #[test]
    fn psi_blocks_are_unit_with_heavy_self_loop() {
        let (g, h) = random_pair(5, 1);
        let ctx = WalkContext::new(&g, &h).unwrap();
        for x in 0..25 {
            let block = ctx.psi_block(x);
            let norm: f64 = block.iter().map(|p| p * p).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(block[x] >= (0.5f64).sqrt() - 1e-12, "self-loop amplitude");
        }
    }

    #[test]
    fn k3_psi_block_values() {
        let k3 = Graph::complete(3).unwrap();
        let ctx = WalkContext::new(&k3, &k3).unwrap();
        let block = ctx.psi_block(0); // x = (0,0)
        assert!((block[0] - 0.5f64.sqrt()).abs() < 1e-12);
        // Compatible targets (1,1),(1,2),(2,1),(2,2) each carry P = 1/8.
        let expect = (1.0f64 / 8.0).sqrt();
        let mut nonzero = 0;
        for (y, &v) in block.iter().enumerate() {
            if y == 0 {
                continue;
            }
            if v > 0.0 {
                nonzero += 1;
                assert!((v - expect).abs() < 1e-12);
            }
        }
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn stationary_state_is_fixed_point() {
        for n in [4, 6] {
            let (g, h) = random_pair(n, 2);
            let ctx = WalkContext::new(&g, &h).unwrap();
            let mut o = QueryOracle::new(&g, &h).unwrap();
            let reference = EdgeState::stationary(&ctx);
            let mut state = reference.clone();
            apply_walk(&mut state, &ctx, &mut o);
            let drift: f64 = state
                .amp
                .iter()
                .zip(&reference.amp)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(drift <= 1e-10, "n={n}: drift {drift}");
            assert_eq!(o.counter.coherent_total(), 2, "one query per side per step");
        }
    }

    #[test]
    fn reflection_is_involution_and_walk_is_unitary() {
        let (g, h) = random_pair(4, 3);
        let ctx = WalkContext::new(&g, &h).unwrap();
        let mut rng = rng::stream(4, 8);
        for _ in 0..20 {
            let state = random_state(&ctx, &mut rng);
            let mut twice = state.clone();
            reflect_a_in_place(&mut twice.amp, &ctx);
            reflect_a_in_place(&mut twice.amp, &ctx);
            let dev: f64 = twice
                .amp
                .iter()
                .zip(&state.amp)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(dev < 1e-12, "ref(A) must be an involution");

            let mut walked = state.clone();
            let mut o = QueryOracle::new(&g, &h).unwrap();
            apply_walk(&mut walked, &ctx, &mut o);
            assert!((walked.norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn marked_reflection_behaviour() {
        let (g, h) = random_pair(4, 5);
        let ctx = WalkContext::new(&g, &h).unwrap();
        let mut rng = rng::stream(6, 9);
        let state = random_state(&ctx, &mut rng);
        let mut o = QueryOracle::new(&g, &h).unwrap();

        let empty = vec![false; 16];
        let mut s1 = state.clone();
        reflect_marked(&mut s1, &empty, &mut o, 10);
        assert!(s1.amp.iter().zip(&state.amp).all(|(a, b)| a == b));
        assert_eq!(o.counter.coherent_total(), 20);

        let mut marked = vec![false; 16];
        marked[3] = true;
        marked[9] = true;
        let mut s2 = state.clone();
        reflect_marked(&mut s2, &marked, &mut o, 10);
        assert!((s2.norm_sq() - 1.0).abs() < 1e-12);
        reflect_marked(&mut s2, &marked, &mut o, 10);
        assert!(s2.amp.iter().zip(&state.amp).all(|(a, b)| a == b));
    }

    #[test]
    fn stationary_measurement_is_uniform() {
        let (g, h) = random_pair(6, 6);
        let ctx = WalkContext::new(&g, &h).unwrap();
        let state = EdgeState::stationary(&ctx);
        let probs = state.measure_first_register();
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        for &p in &probs {
            assert!((p - 1.0 / 36.0).abs() < 1e-10);
        }
    }

    #[test]
    fn point_state_measures_to_point() {
        let (g, h) = random_pair(4, 7);
        let ctx = WalkContext::new(&g, &h).unwrap();
        let state = EdgeState::vertex_start(&ctx, 11);
        let probs = state.measure_first_register();
        assert!((probs[11] - 1.0).abs() < 1e-12);
        let mut rng = rng::stream(8, 10);
        assert_eq!(state.sample_first_register(&mut rng).index(4), 11);
    }

    #[test]
    fn eigenphases_match_chain_reference() {
        for seed in 0..6 {
            let (g, h) = random_pair(3, 100 + seed);
            let walk = walk_eigenphases(&g, &h).unwrap();
            let chain = chain_reference_phases(&g, &h).unwrap();
            assert_eq!(walk.len(), chain.len(), "seed {seed}");
            for (a, b) in walk.iter().zip(&chain) {
                assert!((a - b).abs() < 1e-8, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn eigenphases_survive_degenerate_chain_spectra() {
        // Star-plus-leaf against a triangle with an isolated vertex: the
        // product chain's spectrum carries eigenvalues of multiplicity
        // four, and the Gram matrix of the span basis is degenerate
        // enough that eigendecomposition-based orthonormalization used to
        // return a skewed basis and two stray cosines here.
        let mut g = Graph::empty(4).unwrap();
        for (u, v) in [(0, 1), (1, 2), (1, 3)] {
            g.set_edge(u, v, true).unwrap();
        }
        let mut h = Graph::empty(4).unwrap();
        for (u, v) in [(1, 2), (1, 3), (2, 3)] {
            h.set_edge(u, v, true).unwrap();
        }
        let walk = walk_eigenphases(&g, &h).unwrap();
        let chain = chain_reference_phases(&g, &h).unwrap();
        assert_eq!(walk.len(), chain.len());
        for (a, b) in walk.iter().zip(&chain) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn eigenphases_of_disconnected_product() {
        // K4 against empty4: the product graph is edgeless, the chain is
        // the identity, and every phase is 0.
        let k4 = Graph::complete(4).unwrap();
        let e4 = Graph::empty(4).unwrap();
        let walk = walk_eigenphases(&k4, &e4).unwrap();
        assert_eq!(walk.len(), 16, "2*16 - 16 components");
        for p in walk {
            assert!(p.abs() < 1e-10);
        }
    }

    #[test]
    fn phase_gap_tracks_chain_gap() {
        // Min nonzero phase is arccos(lambda_2) >= sqrt(2*delta) > 0.9*sqrt(delta).
        for seed in 0..8 {
            let (g, h) = random_pair(4, 300 + seed);
            let spectrum = crate::product::chain_spectrum(&g, &h).unwrap();
            let delta = crate::product::spectral_gap(&spectrum);
            if delta < 1e-9 {
                continue; // disconnected: no nonzero-phase floor to check
            }
            let phases = walk_eigenphases(&g, &h).unwrap();
            let min_nonzero = phases
                .iter()
                .map(|p| p.abs())
                .filter(|p| *p > 1e-7)
                .fold(f64::INFINITY, f64::min);
            assert!(
                min_nonzero >= 0.9 * delta.sqrt(),
                "seed {seed}: gap {min_nonzero} vs delta {delta}"
            );
        }
    }

    #[test]
    fn probe_conventions() {
        let (g, h) = random_pair(6, 9);
        let mut rng = rng::stream(10, 11);
        let pi = Permutation::uniform(6, &mut rng);
        let stat = walk_probe(&g, &h, &pi, 5, ProbeConvention::Stationary, 1, &mut rng).unwrap();
        for p in &stat {
            assert!((p - 1.0 / 6.0).abs() < 1e-10, "stationary trajectory constant");
        }
        let ces =
            walk_probe(&g, &h, &pi, 4, ProbeConvention::VertexStartCesaro, 200, &mut rng).unwrap();
        // t=0 average over uniform starts concentrates near |M|/n^2 = 1/n.
        let sigma = ((1.0f64 / 6.0) * (5.0 / 6.0) / 200.0).sqrt();
        assert!((ces[0] - 1.0 / 6.0).abs() <= 4.0 * sigma, "{}", ces[0]);
    }

    #[test]
    fn depolarized_examples() {
        assert_eq!(depolarized_prob(0.8, 10, 0.0, 15, 0.1), 0.8);
        let nearly_dead = depolarized_prob(0.8, 100_000, 0.01, 15, 0.1);
        assert!((nearly_dead - 0.1).abs() < 1e-9);
        for t in 0..50 {
            let p = depolarized_prob(0.8, t, 0.003, 15, 0.1);
            assert!((0.1..=0.8).contains(&p), "convex combination");
        }
    }

    #[test]
    fn trajectory_csv_schema() {
        let csv = trajectory_csv(&[0.5, 0.25], &[0.5, 0.2]);
        assert_eq!(csv, "t,prob_matching,prob_matching_noisy\n0,0.5,0.5\n1,0.25,0.2\n");
    }

    #[test]
    fn size_guards() {
        let g = Graph::empty(21).unwrap();
        assert!(matches!(WalkContext::new(&g, &g), Err(Error::SizeLimit { .. })));
        let g7 = Graph::empty(7).unwrap();
        assert!(matches!(walk_eigenphases(&g7, &g7), Err(Error::SizeLimit { .. })));
    }
}
