//! The compatibility product of two graphs and its lazy reversible chain.
//!
//! Product vertices are candidate pairings (i, j). Two pairings are
//! adjacent when they are injective in both coordinates and the two graphs
//! agree on the corresponding edge bit. The chain stays put with
//! probability 1/2 and otherwise moves uniformly over the (n-1)^2 eligible
//! targets that are compatible; incompatible mass folds into the self-loop.
//!
//! The chain is never materialized on the hot path. Dense forms exist for
//! diagnostics only, guarded at n <= 20.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{edit_distance_under, Graph, Permutation};

pub const DIAG_SIZE_LIMIT: usize = 20;

/// Candidate pairing: vertex `i` of G mapped to vertex `j` of H.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ProductVertex {
    pub i: usize,
    pub j: usize,
}

impl ProductVertex {
    #[inline]
    pub fn index(&self, n: usize) -> usize {
        self.i * n + self.j
    }

    #[inline]
    pub fn from_index(idx: usize, n: usize) -> Self {
        ProductVertex { i: idx / n, j: idx % n }
    }
}

#[inline]
pub fn product_adjacent(x: ProductVertex, y: ProductVertex, g: &Graph, h: &Graph) -> bool {
    x.i != y.i && x.j != y.j && g.adj(x.i, y.i) == h.adj(x.j, y.j)
}

/// Degree of (i, j) in the product graph. Factorizes through the two
/// endpoint degrees: with a = deg_G(i), b = deg_H(j),
/// deg = a*b + (n-1-a)*(n-1-b).
pub fn product_degree(g: &Graph, h: &Graph, x: ProductVertex) -> usize {
    let n = g.n();
    let a = g.degree(x.i);
    let b = h.degree(x.j);
    a * b + (n - 1 - a) * (n - 1 - b)
}

/// One transition probability of the lazy chain.
pub fn transition_prob(x: ProductVertex, y: ProductVertex, g: &Graph, h: &Graph) -> f64 {
    let n = g.n();
    let denom = 2.0 * ((n - 1) * (n - 1)) as f64;
    if x == y {
        1.0 - product_degree(g, h, x) as f64 / denom
    } else if product_adjacent(x, y, g, h) {
        1.0 / denom
    } else {
        0.0
    }
}

fn check_diag_size(g: &Graph, h: &Graph) -> Result<usize> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    let n = g.n();
    if n > DIAG_SIZE_LIMIT {
        return Err(Error::SizeLimit { what: "dense product chain", max: DIAG_SIZE_LIMIT, n });
    }
    if n < 2 {
        return Err(Error::SizeLimit { what: "product chain", max: usize::MAX, n });
    }
    Ok(n)
}

/// Dense n^2 x n^2 transition matrix. Diagnostics only.
pub fn chain_matrix(g: &Graph, h: &Graph) -> Result<DMatrix<f64>> {
    let n = check_diag_size(g, h)?;
    let nn = n * n;
    let mut p = DMatrix::<f64>::zeros(nn, nn);
    for xi in 0..nn {
        let x = ProductVertex::from_index(xi, n);
        for yi in 0..nn {
            let y = ProductVertex::from_index(yi, n);
            p[(xi, yi)] = transition_prob(x, y, g, h);
        }
    }
    Ok(p)
}

/// Max over ordered pairs of |mu(x)P(x,y) - mu(y)P(y,x)| with mu uniform.
/// Zero exactly: both sides evaluate the same float expression.
pub fn verify_detailed_balance(g: &Graph, h: &Graph) -> Result<f64> {
    let n = check_diag_size(g, h)?;
    let nn = n * n;
    let mu = 1.0 / nn as f64;
    let mut worst: f64 = 0.0;
    for xi in 0..nn {
        let x = ProductVertex::from_index(xi, n);
        for yi in 0..nn {
            let y = ProductVertex::from_index(yi, n);
            let fwd = mu * transition_prob(x, y, g, h);
            let bwd = mu * transition_prob(y, x, g, h);
            worst = worst.max((fwd - bwd).abs());
        }
    }
    Ok(worst)
}

/// Chain eigenvalues, ascending. Lazy chain: all within [0, 1].
pub fn chain_spectrum(g: &Graph, h: &Graph) -> Result<Vec<f64>> {
    let p = chain_matrix(g, h)?;
    let mut eig: Vec<f64> = p.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eig)
}

/// 1 - second largest eigenvalue.
pub fn spectral_gap(spectrum: &[f64]) -> f64 {
    assert!(spectrum.len() >= 2);
    1.0 - spectrum[spectrum.len() - 2]
}

/// Connected components of the product graph (self-loops ignored). The
/// exact multiplicity of chain eigenvalue 1, used to size the walk's
/// invariant subspace without numerical rank guesses.
pub fn component_count(g: &Graph, h: &Graph) -> Result<usize> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    let n = g.n();
    let nn = n * n;
    let mut parent: Vec<usize> = (0..nn).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for xi in 0..nn {
        let x = ProductVertex::from_index(xi, n);
        for yi in xi + 1..nn {
            let y = ProductVertex::from_index(yi, n);
            if product_adjacent(x, y, g, h) {
                let (ra, rb) = (find(&mut parent, xi), find(&mut parent, yi));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut roots = 0;
    for v in 0..nn {
        if find(&mut parent, v) == v {
            roots += 1;
        }
    }
    Ok(roots)
}

/// The n product vertices selected by a pairing.
pub fn matching_set(pi: &Permutation) -> Vec<ProductVertex> {
    (0..pi.n()).map(|i| ProductVertex { i, j: pi.apply(i) }).collect()
}

/// 1 - ed_pi / C(n,2): fraction of pairs on which the pairing agrees.
pub fn matching_density(g: &Graph, h: &Graph, pi: &Permutation) -> Result<f64> {
    let ed = edit_distance_under(g, h, pi)?;
    Ok(1.0 - ed as f64 / g.pair_count() as f64)
}

/// For each dense-enough permutation, how much it overlaps the optimum.
#[derive(Clone, Debug)]
pub struct OverlapReport {
    /// Edit distance of the brute-force optimum.
    pub k_opt: usize,
    /// Permutations whose matching density clears 1 - 2*eps.
    pub qualifying: usize,
    /// (images, overlap, required bound) measured against the single
    /// lexicographically smallest optimizer. Graphs with nontrivial
    /// automorphisms produce entries here even at k_opt = 0: a second
    /// exact isomorphism qualifies but shares few fixed points with the
    /// chosen one.
    pub violations: Vec<(Vec<usize>, usize, usize)>,
    /// Same check with overlap taken against the best-agreeing optimizer,
    /// which quotients out the automorphism ambiguity.
    pub violations_nearest: Vec<(Vec<usize>, usize, usize)>,
}

/// Enumerates all of S_n (n <= 7): every permutation with matching
/// density >= 1 - 2*eps should agree with an optimal permutation on at
/// least n - 4*ceil(sqrt(k)) vertices. Reported, not asserted; see the
/// two violation lists for the two readings of "the" optimum.
pub fn overlap_property_check(g: &Graph, h: &Graph, eps: f64) -> Result<OverlapReport> {
    if g.n() != h.n() {
        return Err(Error::SizeMismatch(g.n(), h.n()));
    }
    let n = g.n();
    if n > 7 {
        return Err(Error::SizeLimit { what: "permutation enumeration", max: 7, n });
    }
    let mut all: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut images: Vec<usize> = (0..n).collect();
    loop {
        let sigma = Permutation::from_images(images.clone()).unwrap();
        let ed = edit_distance_under(g, h, &sigma)?;
        all.push((images.clone(), ed));
        if !next_permutation(&mut images) {
            break;
        }
    }
    let k_opt = all.iter().map(|(_, ed)| *ed).min().unwrap();
    // First optimizer in lexicographic order, matching the brute-force tie rule.
    let pi_star = all.iter().find(|(_, ed)| *ed == k_opt).unwrap().0.clone();
    let optimizers: Vec<&Vec<usize>> =
        all.iter().filter(|(_, ed)| *ed == k_opt).map(|(im, _)| im).collect();
    let bound = n.saturating_sub((4.0 * (k_opt as f64).sqrt()).ceil() as usize);
    let pairs = g.pair_count() as f64;
    let bar = 1.0 - 2.0 * eps;
    let mut qualifying = 0;
    let mut violations = Vec::new();
    let mut violations_nearest = Vec::new();
    for (im, ed) in &all {
        let density = 1.0 - *ed as f64 / pairs;
        if density < bar {
            continue;
        }
        qualifying += 1;
        let agree = |a: &[usize], b: &[usize]| a.iter().zip(b).filter(|(x, y)| x == y).count();
        let lex_overlap = agree(im, &pi_star);
        if lex_overlap < bound {
            violations.push((im.clone(), lex_overlap, bound));
        }
        let best_overlap = optimizers.iter().map(|o| agree(im, o)).max().unwrap();
        if best_overlap < bound {
            violations_nearest.push((im.clone(), best_overlap, bound));
        }
    }
    Ok(OverlapReport { k_opt, qualifying, violations, violations_nearest })
}

/// Lexicographic successor in place; false once wrapped.
fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

pub fn spectrum_csv(spectrum: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, v) in spectrum.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{defect_profile, gen_gnp, gen_yes_instance};
    use crate::rng;

    #[test]
    fn adjacency_examples() {
        let k3 = Graph::complete(3).unwrap();
        let e3 = Graph::empty(3).unwrap();
        let x = ProductVertex { i: 0, j: 0 };
        let y = ProductVertex { i: 1, j: 1 };
        assert!(product_adjacent(x, y, &k3, &k3));
        assert!(!product_adjacent(x, y, &k3, &e3));
        let same_i = ProductVertex { i: 0, j: 1 };
        assert!(!product_adjacent(x, same_i, &k3, &k3));
    }

    #[test]
    fn degree_factorization_matches_enumeration() {
        let mut rng = rng::root(21);
        for _ in 0..10 {
            let g = gen_gnp(7, 0.5, &mut rng).unwrap();
            let h = gen_gnp(7, 0.5, &mut rng).unwrap();
            for xi in 0..49 {
                let x = ProductVertex::from_index(xi, 7);
                let by_enum = (0..49)
                    .map(|yi| ProductVertex::from_index(yi, 7))
                    .filter(|&y| product_adjacent(x, y, &g, &h))
                    .count();
                assert_eq!(by_enum, product_degree(&g, &h, x));
            }
        }
    }

    #[test]
    fn row_sums_exact_as_integers() {
        // Row sum = (2(n-1)^2 - deg) + deg over the common denominator.
        let mut rng = rng::root(22);
        let n = 6;
        let g = gen_gnp(n, 0.5, &mut rng).unwrap();
        let h = gen_gnp(n, 0.5, &mut rng).unwrap();
        let denom = 2 * (n - 1) * (n - 1);
        for xi in 0..n * n {
            let x = ProductVertex::from_index(xi, n);
            let deg = product_degree(&g, &h, x);
            // Numerators: self-loop carries denom - deg, each neighbor 1.
            assert!(deg <= denom);
            let total_numerator = (denom - deg) + deg;
            assert_eq!(total_numerator, denom);
        }
    }

    #[test]
    fn float_row_and_column_sums_are_tight() {
        let mut rng = rng::root(23);
        let g = gen_gnp(8, 0.5, &mut rng).unwrap();
        let h = gen_gnp(8, 0.5, &mut rng).unwrap();
        let p = chain_matrix(&g, &h).unwrap();
        for r in 0..p.nrows() {
            let row: f64 = p.row(r).iter().sum();
            let col: f64 = p.column(r).iter().sum();
            assert!((row - 1.0).abs() < 1e-12, "row {r}: {row}");
            assert!((col - 1.0).abs() < 1e-12, "col {r}: {col}");
        }
    }

    #[test]
    fn complete_pair_off_diagonals() {
        let k5 = Graph::complete(5).unwrap();
        let w = 1.0 / (2.0 * 16.0);
        for xi in 0..25 {
            let x = ProductVertex::from_index(xi, 5);
            for yi in 0..25 {
                let y = ProductVertex::from_index(yi, 5);
                if x.i != y.i && x.j != y.j {
                    assert_eq!(transition_prob(x, y, &k5, &k5), w);
                }
            }
        }
    }

    #[test]
    fn self_loop_at_least_half() {
        let mut rng = rng::root(24);
        for _ in 0..5 {
            let g = gen_gnp(6, 0.5, &mut rng).unwrap();
            let h = gen_gnp(6, 0.5, &mut rng).unwrap();
            for xi in 0..36 {
                let x = ProductVertex::from_index(xi, 6);
                assert!(transition_prob(x, x, &g, &h) >= 0.5);
            }
        }
    }

    #[test]
    fn detailed_balance_exact() {
        let mut rng = rng::root(25);
        for _ in 0..10 {
            let g = gen_gnp(6, 0.5, &mut rng).unwrap();
            let h = gen_gnp(6, 0.5, &mut rng).unwrap();
            assert_eq!(verify_detailed_balance(&g, &h).unwrap(), 0.0);
        }
        let k4 = Graph::complete(4).unwrap();
        assert_eq!(verify_detailed_balance(&k4, &k4).unwrap(), 0.0);
    }

    #[test]
    fn spectrum_in_unit_interval_with_top_one() {
        let mut rng = rng::root(26);
        let g = gen_gnp(6, 0.5, &mut rng).unwrap();
        let h = gen_gnp(6, 0.5, &mut rng).unwrap();
        let spec = chain_spectrum(&g, &h).unwrap();
        assert_eq!(spec.len(), 36);
        for &l in &spec {
            assert!((-1e-9..=1.0 + 1e-9).contains(&l), "eigenvalue {l}");
        }
        assert!((spec[35] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn size_guard_on_dense_paths() {
        let g = Graph::empty(21).unwrap();
        assert!(matches!(chain_matrix(&g, &g), Err(Error::SizeLimit { .. })));
        assert!(matches!(verify_detailed_balance(&g, &g), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn matching_density_examples() {
        let mut rng = rng::root(27);
        let g = gen_gnp(8, 0.5, &mut rng).unwrap();
        let pi = Permutation::uniform(8, &mut rng);
        let h = crate::graph::apply_permutation(&g, &pi).unwrap();
        assert_eq!(matching_density(&g, &h, &pi).unwrap(), 1.0);
        assert_eq!(matching_set(&pi).len(), 8);
    }

    #[test]
    fn matching_internal_degree_is_defect_complement() {
        let inst = gen_yes_instance(9, 0.3, 5).unwrap();
        let pi = inst.planted.as_ref().unwrap();
        let defects = defect_profile(&inst.g, &inst.h, pi).unwrap();
        let m = matching_set(pi);
        for (i, &x) in m.iter().enumerate() {
            let internal = m
                .iter()
                .filter(|&&y| y != x && product_adjacent(x, y, &inst.g, &inst.h))
                .count();
            assert_eq!(internal, 9 - 1 - defects[i]);
        }
    }

    #[test]
    fn component_count_matches_unit_eigenvalue_multiplicity() {
        let mut rng = rng::root(28);
        for _ in 0..8 {
            let g = gen_gnp(4, 0.5, &mut rng).unwrap();
            let h = gen_gnp(4, 0.5, &mut rng).unwrap();
            let c = component_count(&g, &h).unwrap();
            let spec = chain_spectrum(&g, &h).unwrap();
            let ones = spec.iter().filter(|&&l| l > 1.0 - 1e-9).count();
            assert_eq!(c, ones, "components vs unit eigenvalues");
        }
    }

    #[test]
    fn disconnected_product_detected() {
        // K_n against the empty graph leaves no compatible moves at all:
        // every transition needs g-bit = h-bit, but all g-bits are 1 and
        // all h-bits are 0. Each product vertex is isolated.
        let k4 = Graph::complete(4).unwrap();
        let e4 = Graph::empty(4).unwrap();
        assert_eq!(component_count(&k4, &e4).unwrap(), 16);
    }

    #[test]
    fn overlap_check_exact_isomorphic_rigid_pair() {
        // A path P4 has exactly one nontrivial automorphism (reversal), so
        // use an asymmetric graph instead: the 6-vertex graph below has a
        // trivial automorphism group.
        let g = Graph::from_edges(
            6,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 3), (1, 4)],
        )
        .unwrap();
        let mut rng = rng::root(29);
        let pi = Permutation::uniform(6, &mut rng);
        let h = crate::graph::apply_permutation(&g, &pi).unwrap();
        let report = overlap_property_check(&g, &h, 0.01).unwrap();
        assert_eq!(report.k_opt, 0);
        assert_eq!(report.qualifying, 1, "only the true pairing has density 1");
        assert!(report.violations.is_empty());
    }

    #[test]
    fn overlap_check_yes_instances() {
        // Random 6-vertex graphs usually carry automorphisms, so overlap
        // against a single chosen optimizer fails regularly; against the
        // best-agreeing optimizer it holds on every tested seed.
        let mut lex_violating_seeds = 0;
        for seed in 0..50 {
            let inst = gen_yes_instance(6, 0.05, seed).unwrap();
            let report = overlap_property_check(&inst.g, &inst.h, 0.05).unwrap();
            if inst.planted_edits.unwrap() <= 1 {
                // density 1 - ed/15 >= 0.9 guaranteed, so the check is not vacuous
                assert!(report.qualifying >= 1);
            }
            assert!(
                report.violations_nearest.is_empty(),
                "seed {seed}: {report:?}"
            );
            if !report.violations.is_empty() {
                lex_violating_seeds += 1;
                for (_, overlap, bound) in &report.violations {
                    assert!(overlap < bound, "reported violations must be genuine");
                }
            }
        }
        assert_eq!(lex_violating_seeds, 38, "frozen measurement over seeds 0..50");
    }

    #[test]
    fn spectrum_csv_schema() {
        let csv = spectrum_csv(&[0.0, 0.5, 1.0]);
        assert_eq!(csv, "index,eigenvalue\n0,0\n1,0.5\n2,1\n");
    }

    #[test]
    fn next_permutation_enumerates_all() {
        let mut a = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut a) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(a, vec![3, 2, 1, 0], "ends at the last permutation");
    }
}

