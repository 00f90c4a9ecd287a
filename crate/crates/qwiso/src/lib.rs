// Index loops over two or three parallel arrays read better than chained
// enumerate/zip here; the indices are meaningful (vertices, steps).
#![allow(clippy::needless_range_loop)]

//! Simulator and experiment lab for a quantum-walk approach to approximate
//! graph isomorphism on Erdős–Rényi instances.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`] — bit-packed graphs, permutations, planted instances, edit
//!   distance, Laplacian spectra.
//! * [`oracle`] — adjacency-oracle access with classical/coherent query
//!   accounting and a replayable transcript.
//! * [`product`] — the compatibility product graph and its lazy reversible
//!   chain (transition rule, spectrum, matching sets).
//! * [`szegedy`] — the quantized walk on the edge space: reflections,
//!   eigenphases, probe trajectories, a depolarizing noise model.
//! * [`pipeline`] — the three-phase decision pipeline (seed search,
//!   reconstruction, verification) and the sampling baseline.
//! * [`lower_bound`] — total-variation bounds, transcript distinguishers,
//!   and the adversarial hard-instance construction.
//! * [`spectral`] — Laplacian spectral distance and the phase-estimation
//!   sampling model for it.
//! * [`experiments`] — batch experiments (accuracy, scaling, noise, eps
//!   sweeps) and formula-level resource estimates, with CSV emission.
//!
//! Everything stochastic takes an explicit seeded stream from [`rng`] so
//! that batches are reproducible bit-for-bit.

pub mod error;
pub mod experiments;
pub mod graph;
pub mod lower_bound;
pub mod oracle;
pub mod pipeline;
pub mod product;
pub mod rng;
pub mod spectral;
pub mod szegedy;

pub use error::Error;
