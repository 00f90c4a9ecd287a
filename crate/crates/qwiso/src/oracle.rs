//! Query-counted adjacency access with transcripts.
//!
//! Everything the pipeline charges flows through here. Classical reads
//! return real bits and append transcript entries; coherent use is charged
//! in bulk per subroutine (the simulator works with full knowledge of the
//! graphs, so coherent queries are accounting only, with no transcript).

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Side {
    G,
    H,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::G => "G",
            Side::H => "H",
        })
    }
}

/// One classical read: which oracle, the unordered pair (stored `u < v`),
/// the answer bit, and a strictly increasing step ordinal.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TranscriptEntry {
    pub step: u64,
    pub side: Side,
    pub u: usize,
    pub v: usize,
    pub answer: bool,
}

/// Per-category query totals plus the ordered classical transcript.
/// Transcript length always equals `classical_g + classical_h`.
#[derive(Clone, Default, Debug)]
pub struct QueryCounter {
    pub classical_g: u64,
    pub classical_h: u64,
    pub coherent_g: u64,
    pub coherent_h: u64,
    transcript: Vec<TranscriptEntry>,
}

impl QueryCounter {
    pub fn classical_total(&self) -> u64 {
        self.classical_g + self.classical_h
    }

    pub fn coherent_total(&self) -> u64 {
        self.coherent_g + self.coherent_h
    }

    pub fn total(&self) -> u64 {
        self.classical_total() + self.coherent_total()
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    pub fn transcript_csv(&self) -> String {
        let mut out = String::from("step,oracle,u,v,answer\n");
        for e in &self.transcript {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.step,
                e.side,
                e.u,
                e.v,
                e.answer as u8
            ));
        }
        out
    }
}

/// Charged access to a fixed `(G, H)` pair. One oracle per instance run.
pub struct QueryOracle<'a> {
    g: &'a Graph,
    h: &'a Graph,
    pub counter: QueryCounter,
    cache: Option<HashMap<(Side, usize, usize), bool>>,
}

impl<'a> QueryOracle<'a> {
    pub fn new(g: &'a Graph, h: &'a Graph) -> Result<Self> {
        if g.n() != h.n() {
            return Err(Error::SizeMismatch(g.n(), h.n()));
        }
        Ok(QueryOracle { g, h, counter: QueryCounter::default(), cache: None })
    }

    /// Repeat reads of a pair become free. Off for all acceptance runs;
    /// the query model counts repeats.
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(HashMap::new());
        self
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    /// One classical query: the true adjacency bit, charged and logged.
    pub fn read(&mut self, side: Side, u: usize, v: usize) -> Result<bool> {
        let graph = match side {
            Side::G => self.g,
            Side::H => self.h,
        };
        let answer = graph.adjacency(u, v)?;
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        if let Some(cache) = &mut self.cache {
            if cache.contains_key(&(side, u, v)) {
                return Ok(answer);
            }
            cache.insert((side, u, v), answer);
        }
        let step = self.counter.transcript.len() as u64;
        match side {
            Side::G => self.counter.classical_g += 1,
            Side::H => self.counter.classical_h += 1,
        }
        self.counter.transcript.push(TranscriptEntry { step, side, u, v, answer });
        Ok(answer)
    }

    /// Bulk accounting for simulated coherent oracle use. No transcript.
    pub fn charge_coherent(&mut self, side: Side, amount: u64) {
        match side {
            Side::G => self.counter.coherent_g += amount,
            Side::H => self.counter.coherent_h += amount,
        }
    }

    pub fn into_counter(self) -> QueryCounter {
        self.counter
    }
}

/// H-entries whose pair, pulled back through `pi`, was already read on the
/// G side at an earlier step. The only transcript events correlating the
/// two oracles on planted instances.
pub fn collision_count(transcript: &[TranscriptEntry], pi: &Permutation) -> usize {
    let inv = pi.inverse();
    let mut g_seen: HashSet<(usize, usize)> = HashSet::new();
    let mut collisions = 0;
    for e in transcript {
        match e.side {
            Side::G => {
                g_seen.insert((e.u, e.v));
            }
            Side::H => {
                let (a, b) = (inv.apply(e.u), inv.apply(e.v));
                let key = if a < b { (a, b) } else { (b, a) };
                if g_seen.contains(&key) {
                    collisions += 1;
                }
            }
        }
    }
    collisions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_gnp, Graph};
    use crate::rng;
    use rand::seq::index::sample;
    use rand::Rng;

    fn k3_pair() -> (Graph, Graph) {
        (Graph::complete(3).unwrap(), Graph::empty(3).unwrap())
    }

    #[test]
    fn read_charges_and_logs() {
        let (g, h) = k3_pair();
        let mut o = QueryOracle::new(&g, &h).unwrap();
        assert!(o.read(Side::G, 0, 1).unwrap());
        assert!(!o.read(Side::H, 0, 1).unwrap());
        assert!(o.read(Side::G, 2, 1).unwrap()); // order normalized to (1,2)
        assert_eq!(o.counter.classical_g, 2);
        assert_eq!(o.counter.classical_h, 1);
        assert_eq!(o.counter.transcript().len(), 3);
        assert_eq!(o.counter.transcript()[2].u, 1);
        assert_eq!(o.counter.transcript()[2].v, 2);
        let steps: Vec<u64> = o.counter.transcript().iter().map(|e| e.step).collect();
        assert_eq!(steps, vec![0, 1, 2]);
    }

    #[test]
    fn repeats_charge_by_default() {
        let (g, h) = k3_pair();
        let mut o = QueryOracle::new(&g, &h).unwrap();
        for _ in 0..5 {
            assert!(o.read(Side::G, 0, 1).unwrap());
        }
        assert_eq!(o.counter.classical_g, 5);
        assert_eq!(o.counter.transcript().len(), 5);
    }

    #[test]
    fn cache_mode_makes_repeats_free() {
        let (g, h) = k3_pair();
        let mut o = QueryOracle::new(&g, &h).unwrap().with_cache();
        for _ in 0..5 {
            assert!(o.read(Side::G, 0, 1).unwrap());
        }
        o.read(Side::H, 0, 2).unwrap();
        o.read(Side::H, 0, 2).unwrap();
        assert_eq!(o.counter.classical_g, 1);
        assert_eq!(o.counter.classical_h, 1);
        assert_eq!(o.counter.transcript().len(), 2);
    }

    #[test]
    fn self_pair_and_range_rejected() {
        let (g, h) = k3_pair();
        let mut o = QueryOracle::new(&g, &h).unwrap();
        assert!(o.read(Side::G, 1, 1).is_err());
        assert!(o.read(Side::H, 0, 3).is_err());
        assert_eq!(o.counter.total(), 0, "failed reads charge nothing");
    }

    #[test]
    fn size_mismatch_rejected() {
        let g = Graph::empty(3).unwrap();
        let h = Graph::empty(4).unwrap();
        assert!(QueryOracle::new(&g, &h).is_err());
    }

    #[test]
    fn coherent_charging_accumulates() {
        let (g, h) = k3_pair();
        let mut o = QueryOracle::new(&g, &h).unwrap();
        for _ in 0..7 {
            o.charge_coherent(Side::G, 1);
            o.charge_coherent(Side::H, 1);
        }
        o.charge_coherent(Side::G, 0);
        assert_eq!(o.counter.coherent_g + o.counter.coherent_h, 14);
        assert!(o.counter.transcript().is_empty());
    }

    #[test]
    fn transcript_csv_format() {
        let (g, h) = k3_pair();
        let mut o = QueryOracle::new(&g, &h).unwrap();
        o.read(Side::G, 0, 1).unwrap();
        o.read(Side::H, 2, 0).unwrap();
        assert_eq!(
            o.counter.transcript_csv(),
            "step,oracle,u,v,answer\n0,G,0,1,1\n1,H,0,2,0\n"
        );
    }

    #[test]
    fn collision_count_examples() {
        let (g, h) = k3_pair();
        let pi = Permutation::from_images(vec![1, 2, 0]).unwrap();
        let mut o = QueryOracle::new(&g, &h).unwrap();
        o.read(Side::G, 0, 1).unwrap();
        o.read(Side::G, 0, 2).unwrap();
        assert_eq!(collision_count(o.counter.transcript(), &pi), 0);
        // H-query at {pi(0), pi(1)} = {1, 2} pulls back to {0, 1}: collision.
        o.read(Side::H, 1, 2).unwrap();
        assert_eq!(collision_count(o.counter.transcript(), &pi), 1);
        // H-query pulling back to an unqueried G pair: no new collision.
        o.read(Side::H, 0, 1).unwrap(); // preimage {2, 0} queried? yes {0,2} was
        assert_eq!(collision_count(o.counter.transcript(), &pi), 2);
    }

    #[test]
    fn h_before_g_is_not_a_collision() {
        let (g, h) = k3_pair();
        let pi = Permutation::identity(3);
        let mut o = QueryOracle::new(&g, &h).unwrap();
        o.read(Side::H, 0, 1).unwrap();
        o.read(Side::G, 0, 1).unwrap();
        assert_eq!(collision_count(o.counter.transcript(), &pi), 0);
    }

    #[test]
    fn single_h_query_collision_frequency() {
        // With q_g uniform distinct G-pairs and a uniform permutation, one
        // uniform H-query collides with probability q_g / C(n,2).
        let n = 12;
        let pairs = n * (n - 1) / 2;
        let q_g = 14usize;
        let trials = 100_000;
        let mut rng = rng::stream(99, 4);
        let g = gen_gnp(n, 0.5, &mut rng).unwrap();
        let h = gen_gnp(n, 0.5, &mut rng).unwrap();
        let all_pairs = g.all_pairs();
        let mut hits = 0usize;
        for _ in 0..trials {
            let pi = Permutation::uniform(n, &mut rng);
            let mut o = QueryOracle::new(&g, &h).unwrap();
            for idx in sample(&mut rng, pairs, q_g) {
                let (u, v) = all_pairs[idx];
                o.read(Side::G, u, v).unwrap();
            }
            let (u, v) = all_pairs[rng.gen_range(0..pairs)];
            o.read(Side::H, u, v).unwrap();
            if collision_count(o.counter.transcript(), &pi) > 0 {
                hits += 1;
            }
        }
        let p = q_g as f64 / pairs as f64;
        let freq = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * sigma,
            "freq {freq} expected {p} sigma {sigma}"
        );
    }
}
