//! Limits of bounded-query classical distinguishers, measured and bounded.
//!
//! The information obstacle: a classical player who reads q_G pairs of one
//! graph and q_H of the other only learns anything label-dependent from
//! collisions, pairs probed on both sides at matching positions under the
//! hidden relabeling. The total-variation bound here caps the achievable
//! distinguishing advantage by the expected collision mass; the experiment
//! measures actual strategies against it.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    apply_permutation, gen_no_instance, gen_yes_instance, random_pair, Graph, Label,
    Permutation,
};
use crate::oracle::{QueryCounter, QueryOracle, Side};
use crate::pipeline::{baseline_core, check_epsilon};
use crate::rng;

const LANE_ADVANTAGE: u64 = 6;
const LANE_HARD: u64 = 8;

/// Advantage cap for a player reading q_g one-side and q_h other-side
/// pairs: epsilon * q_g * q_h / (C(n,2) - q_g - q_h). Outside the budget
/// precondition q_g + q_h <= C(n,2)/2 the bound degrades; pass
/// `diagnostics` to compute it anyway.
pub fn tv_bound(
    n: usize,
    epsilon: f64,
    q_g: u64,
    q_h: u64,
    diagnostics: bool,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(Error::SizeLimit { what: "tv bound", max: 20, n });
    }
    let pairs = (n * (n - 1) / 2) as u64;
    let q = q_g + q_h;
    if q >= pairs {
        return Err(Error::BudgetPrecondition(format!(
            "query budget {q} consumes all {pairs} pairs"
        )));
    }
    if !diagnostics && 2 * q > pairs {
        return Err(Error::BudgetPrecondition(format!(
            "query budget {q} exceeds half of {pairs} pairs; \
             rerun in diagnostics mode to compute the degraded bound"
        )));
    }
    Ok(epsilon * (q_g * q_h) as f64 / (pairs - q) as f64)
}

/// Looser closed form 4*epsilon*q^2/n^2, kept for comparisons.
pub fn tv_bound_loose(n: usize, epsilon: f64, q: u64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(Error::SizeLimit { what: "tv bound", max: 20, n });
    }
    Ok(4.0 * epsilon * (q * q) as f64 / (n * n) as f64)
}

/// A deterministic bounded-query player: given an oracle, a tolerance and
/// a seed, read at most `budget` answers and guess the label. Replaying
/// with the same seed against an oracle returning the same answers must
/// reproduce the same reads in the same order.
pub trait Strategy {
    fn name(&self) -> &'static str;
    fn run(
        &self,
        oracle: &mut QueryOracle,
        epsilon: f64,
        budget: u64,
        seed: u64,
    ) -> Result<Label>;
}

/// Probes matched positions under a random relabeling guess and accepts on
/// a low mismatch fraction. Splits the budget evenly across sides.
pub struct CollisionMismatch;

impl Strategy for CollisionMismatch {
    fn name(&self) -> &'static str {
        "collision"
    }

    fn run(
        &self,
        oracle: &mut QueryOracle,
        epsilon: f64,
        budget: u64,
        seed: u64,
    ) -> Result<Label> {
        let n = oracle.n();
        let mut rng = rng::stream(seed, LANE_ADVANTAGE);
        let pi = Permutation::uniform(n, &mut rng);
        let positions = budget / 2;
        let mut mism = 0u64;
        for _ in 0..positions {
            let (u, v) = random_pair(n, &mut rng);
            let a = oracle.read(Side::G, u, v)?;
            let b = oracle.read(Side::H, pi.apply(u), pi.apply(v))?;
            if a != b {
                mism += 1;
            }
        }
        if positions == 0 {
            return Ok(Label::No);
        }
        Ok(if mism as f64 / positions as f64 <= 1.5 * epsilon {
            Label::Yes
        } else {
            Label::No
        })
    }
}

/// The multi-relabeling sampling decider run inside a fixed read budget.
pub struct BaselineAdapter;

impl Strategy for BaselineAdapter {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn run(
        &self,
        oracle: &mut QueryOracle,
        epsilon: f64,
        budget: u64,
        seed: u64,
    ) -> Result<Label> {
        let mut rng = rng::stream(seed, LANE_ADVANTAGE);
        let (answer, _, _) = baseline_core(oracle, epsilon, budget, &mut rng)?;
        Ok(answer)
    }
}

/// Reads one-side pair samples only and accepts when the observed edge
/// density looks unstructured. Never touches the other side, which makes
/// it the canonical subject for the hard-instance construction.
pub struct GSideProbe;

impl Strategy for GSideProbe {
    fn name(&self) -> &'static str {
        "gside"
    }

    fn run(
        &self,
        oracle: &mut QueryOracle,
        _epsilon: f64,
        budget: u64,
        seed: u64,
    ) -> Result<Label> {
        let n = oracle.n();
        let mut rng = rng::stream(seed, LANE_ADVANTAGE);
        let mut edges = 0u64;
        for _ in 0..budget {
            let (u, v) = random_pair(n, &mut rng);
            if oracle.read(Side::G, u, v)? {
                edges += 1;
            }
        }
        if budget == 0 {
            return Ok(Label::No);
        }
        let density = edges as f64 / budget as f64;
        Ok(if (0.25..=0.75).contains(&density) { Label::Yes } else { Label::No })
    }
}

fn wilson_half_width(successes: u64, trials: u64) -> f64 {
    // z = 1: one-standard-error scale, so callers multiply by the sigma
    // count they need.
    if trials == 0 {
        return 0.0;
    }
    let m = trials as f64;
    let p = successes as f64 / m;
    (p * (1.0 - p) / m + 1.0 / (4.0 * m * m)).sqrt() / (1.0 + 1.0 / m)
}

#[derive(Debug, Clone, Serialize)]
pub struct AdvantageReport {
    pub n: usize,
    pub epsilon: f64,
    pub q: u64,
    pub strategy: String,
    pub yes_accept: f64,
    pub no_accept: f64,
    pub advantage: f64,
    pub ci_half: f64,
    pub tv_bound: f64,
    pub trials: u64,
}

pub fn advantage_csv_header() -> &'static str {
    "n,epsilon,q,strategy,advantage,ci_half,tv_bound,trials\n"
}

impl AdvantageReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}\n",
            self.n,
            self.epsilon,
            self.q,
            self.strategy,
            self.advantage,
            self.ci_half,
            self.tv_bound,
            self.trials
        )
    }
}

/// Measure a strategy's distinguishing advantage over fresh planted
/// instances: |P(accept | close pair) - P(accept | independent pair)|,
/// with a one-sigma Wilson half-width summed over both arms.
pub fn transcript_advantage(
    n: usize,
    epsilon: f64,
    q: u64,
    strategy: &dyn Strategy,
    trials: u64,
    seed: u64,
    diagnostics: bool,
) -> Result<AdvantageReport> {
    check_epsilon(epsilon)?;
    let bound = tv_bound(n, epsilon, q / 2, q - q / 2, diagnostics)?;
    let mut yes_hits = 0u64;
    let mut no_hits = 0u64;
    let mut cell = rng::cell(seed, &[n as u64, q, (epsilon * 1e9) as u64]);
    for _ in 0..trials {
        let yes_seed: u64 = cell.gen();
        let no_seed: u64 = cell.gen();
        let run_seed: u64 = cell.gen();
        let yes = gen_yes_instance(n, epsilon, yes_seed)?;
        let mut o = QueryOracle::new(&yes.g, &yes.h)?;
        if strategy.run(&mut o, epsilon, q, run_seed)? == Label::Yes {
            yes_hits += 1;
        }
        debug_assert!(o.counter.total() <= q);
        let no = gen_no_instance(n, epsilon, no_seed)?;
        let mut o = QueryOracle::new(&no.g, &no.h)?;
        if strategy.run(&mut o, epsilon, q, run_seed)? == Label::Yes {
            no_hits += 1;
        }
    }
    let yes_accept = yes_hits as f64 / trials as f64;
    let no_accept = no_hits as f64 / trials as f64;
    Ok(AdvantageReport {
        n,
        epsilon,
        q,
        strategy: strategy.name().to_string(),
        yes_accept,
        no_accept,
        advantage: (yes_accept - no_accept).abs(),
        ci_half: wilson_half_width(yes_hits, trials) + wilson_half_width(no_hits, trials),
        tv_bound: bound,
        trials,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    /// Frequency of answer 1 on an uncollided other-side probe.
    pub marginal_one: f64,
    pub marginal_sigma: f64,
    /// Frequency of answer 1 at the collided position given the first-side
    /// answer was 0.
    pub flip_given_zero: f64,
    pub flip_sigma: f64,
    pub flip_trials: u64,
    pub trials: u64,
}

/// Close pairs leak nothing through uncollided probes: the answer marginal
/// stays 1/2, and the collided position flips at the planted rate
/// epsilon/2. Both frequencies are measured over fresh instances.
pub fn no_collision_uniformity(
    n: usize,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<UniformityReport> {
    check_epsilon(epsilon)?;
    if n < 3 {
        return Err(Error::SizeLimit { what: "uniformity probe", max: 20, n });
    }
    let mut cell = rng::cell(seed, &[n as u64, (epsilon * 1e9) as u64, 1]);
    let mut marginal_ones = 0u64;
    let mut zero_trials = 0u64;
    let mut flips = 0u64;
    for _ in 0..trials {
        let inst_seed: u64 = cell.gen();
        let inst = gen_yes_instance(n, epsilon, inst_seed)?;
        let pi = inst.planted.as_ref().expect("close pairs carry the relabeling");
        let (u, v) = random_pair(n, &mut cell);
        let g_ans = inst.g.adjacency(u, v)?;
        // Uncollided probe: resample until the position differs from the
        // image of (u, v).
        let (pu, pv) = {
            let a = pi.apply(u);
            let b = pi.apply(v);
            (a.min(b), a.max(b))
        };
        let (mut x, mut y) = random_pair(n, &mut cell);
        while (x, y) == (pu, pv) {
            let next = random_pair(n, &mut cell);
            x = next.0;
            y = next.1;
        }
        if inst.h.adjacency(x, y)? {
            marginal_ones += 1;
        }
        if !g_ans {
            zero_trials += 1;
            if inst.h.adjacency(pu, pv)? {
                flips += 1;
            }
        }
    }
    let marginal_one = marginal_ones as f64 / trials as f64;
    let flip_given_zero = if zero_trials == 0 {
        0.0
    } else {
        flips as f64 / zero_trials as f64
    };
    Ok(UniformityReport {
        marginal_one,
        marginal_sigma: (0.25 / trials as f64).sqrt(),
        flip_given_zero,
        flip_sigma: if zero_trials == 0 {
            0.0
        } else {
            (epsilon / 2.0 * (1.0 - epsilon / 2.0) / zero_trials as f64).sqrt()
        },
        flip_trials: zero_trials,
        trials,
    })
}

#[derive(Debug)]
pub struct HardNoInstance {
    pub g_star: Graph,
    pub h_yes: Graph,
    pub h_no: Graph,
    pub pi: Permutation,
    pub counter_yes: QueryCounter,
    pub counter_no: QueryCounter,
    pub answer_yes: Label,
    pub answer_no: Label,
}

impl HardNoInstance {
    pub fn transcripts_identical(&self) -> bool {
        self.counter_yes.transcript_csv() == self.counter_no.transcript_csv()
    }
}

/// Adversarial far pair that a given player cannot tell from a close pair.
/// Runs the strategy against (g*, relabeled g*), then rebuilds the other
/// side as the empty graph patched to agree with every answered probe, and
/// replays. Preconditions: g* must carry at least C(n,2)/4 edges and the
/// strategy's other-side read count must stay below epsilon*C(n,2)/2;
/// then the replayed pair is at edit distance >= (1/4 - epsilon/2)*C(n,2)
/// while both transcripts agree bit for bit.
pub fn build_hard_no(
    n: usize,
    epsilon: f64,
    strategy: &dyn Strategy,
    budget: u64,
    seed: u64,
) -> Result<HardNoInstance> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(Error::SizeLimit { what: "hard instance", max: 20, n });
    }
    let pairs = n * (n - 1) / 2;
    let mut rng = rng::stream(seed, LANE_HARD);
    let g_star = loop {
        let g = crate::graph::gen_gnp(n, 0.5, &mut rng)?;
        if 4 * g.edge_count() >= pairs {
            break g;
        }
    };
    let pi = Permutation::uniform(n, &mut rng);
    let h_yes = apply_permutation(&g_star, &pi)?;
    let run_seed: u64 = rng.gen();

    let mut oracle = QueryOracle::new(&g_star, &h_yes)?;
    let answer_yes = strategy.run(&mut oracle, epsilon, budget, run_seed)?;
    let counter_yes = oracle.into_counter();

    let q_h = counter_yes.classical_h;
    let cap = epsilon * pairs as f64 / 2.0;
    if q_h as f64 >= cap {
        return Err(Error::HardInstancePrecondition(format!(
            "strategy read {q_h} other-side pairs; the construction needs \
             fewer than {cap} (= epsilon*C(n,2)/2) to keep the replayed \
             pair far from every relabeling"
        )));
    }

    let mut h_no = Graph::empty(n)?;
    for e in counter_yes.transcript() {
        if e.side == Side::H && e.answer {
            h_no.set_edge(e.u, e.v, true)?;
        }
    }

    let mut oracle = QueryOracle::new(&g_star, &h_no)?;
    let answer_no = strategy.run(&mut oracle, epsilon, budget, run_seed)?;
    let counter_no = oracle.into_counter();

    Ok(HardNoInstance {
        g_star,
        h_yes,
        h_no,
        pi,
        counter_yes,
        counter_no,
        answer_yes,
        answer_no,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::min_edit_distance_bruteforce;

    #[test]
    fn tv_bound_values_and_preconditions() {
        // n=16, q=20+20: 0.05 * 400 / (120 - 40) = 0.25.
        let b = tv_bound(16, 0.05, 20, 20, false).unwrap();
        assert!((b - 0.25).abs() < 1e-12);
        // Over half the pairs: rejected unless diagnosing.
        assert!(matches!(
            tv_bound(12, 0.05, 20, 20, false),
            Err(Error::BudgetPrecondition(_))
        ));
        let diag = tv_bound(12, 0.05, 20, 20, true).unwrap();
        assert!((diag - 0.05 * 400.0 / 26.0).abs() < 1e-12);
        assert!(tv_bound(12, 0.05, 40, 40, true).is_err(), "budget above all pairs");
        // The loose form dominates inside the valid regime.
        for q in [4u64, 10, 20] {
            let tight = tv_bound(16, 0.05, q / 2, q / 2, false).unwrap();
            let loose = tv_bound_loose(16, 0.05, q).unwrap();
            assert!(loose > tight, "q={q}: {loose} vs {tight}");
        }
    }

    #[test]
    fn uniformity_matches_planted_rates() {
        let rep = no_collision_uniformity(10, 0.1, 20000, 5).unwrap();
        assert!(
            (rep.marginal_one - 0.5).abs() <= 3.0 * rep.marginal_sigma,
            "marginal {} vs 1/2",
            rep.marginal_one
        );
        assert!(
            (rep.flip_given_zero - 0.05).abs() <= 3.0 * rep.flip_sigma,
            "flip {} vs eps/2",
            rep.flip_given_zero
        );
        assert!(rep.flip_trials > 8000, "about half the probes see a non-edge");
    }

    #[test]
    fn advantage_stays_under_the_bound() {
        for strategy in [&CollisionMismatch as &dyn Strategy, &BaselineAdapter] {
            let rep =
                transcript_advantage(12, 0.05, 20, strategy, 2000, 7, false).unwrap();
            assert!(
                rep.advantage <= rep.tv_bound + 3.0 * rep.ci_half,
                "{}: adv {} bound {} ci {}",
                rep.strategy,
                rep.advantage,
                rep.tv_bound,
                rep.ci_half
            );
            assert_eq!(rep.trials, 2000);
        }
    }

    #[test]
    fn advantage_report_is_deterministic_and_shaped() {
        let a = transcript_advantage(12, 0.1, 10, &CollisionMismatch, 200, 3, false).unwrap();
        let b = transcript_advantage(12, 0.1, 10, &CollisionMismatch, 200, 3, false).unwrap();
        assert_eq!(a.csv_row(), b.csv_row());
        assert_eq!(advantage_csv_header().trim_end().split(',').count(), 8);
        assert_eq!(a.csv_row().trim_end().split(',').count(), 8);
        assert!(a.csv_row().starts_with("12,0.1,10,collision,"));
    }

    #[test]
    fn hard_instance_construction() {
        for seed in 0..10 {
            let hard = build_hard_no(7, 0.05, &GSideProbe, 10, seed).unwrap();
            assert!(hard.transcripts_identical(), "seed {seed}");
            assert_eq!(hard.answer_yes, hard.answer_no, "same transcript, same guess");
            assert_eq!(hard.counter_yes.classical_h, 0, "one-sided player");
            let (ed, _) = min_edit_distance_bruteforce(&hard.g_star, &hard.h_no).unwrap();
            let floor = (0.25 - 0.05 / 2.0) * 21.0;
            assert!(
                ed as f64 >= floor,
                "seed {seed}: distance {ed} below {floor}"
            );
        }
    }

    #[test]
    fn hard_instance_rejects_two_sided_players() {
        // 12 other-side reads at n=7 exceed epsilon*C(n,2)/2 = 0.525.
        let err = build_hard_no(7, 0.05, &CollisionMismatch, 24, 1).unwrap_err();
        assert!(matches!(err, Error::HardInstancePrecondition(_)));
    }

    #[test]
    fn strategies_respect_budget() {
        let yes = gen_yes_instance(10, 0.1, 3).unwrap();
        for (strategy, budget) in [
            (&CollisionMismatch as &dyn Strategy, 15u64),
            (&BaselineAdapter, 9),
            (&GSideProbe, 7),
        ] {
            let mut o = QueryOracle::new(&yes.g, &yes.h).unwrap();
            strategy.run(&mut o, 0.1, budget, 11).unwrap();
            assert!(
                o.counter.total() <= budget,
                "{} overran: {} > {budget}",
                strategy.name(),
                o.counter.total()
            );
        }
    }
}
