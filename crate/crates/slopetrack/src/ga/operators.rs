//! Selection, crossover, mutation, and the per-generation evolve step.
//!
//! Both populations share these operators; chromosomes are plain gene
//! arrays here, typed wrappers live in the parent module. All draws come
//! from a caller-owned RNG in a fixed order (per child: two selection
//! normals, one uniform per gene for crossover, one normal per gene for
//! mutation), so a seeded generator reproduces a generation exactly.

use rand::Rng;
use rand_distr::StandardNormal;

/// Half-normal rank selection: index = floor(|z| * size / 3) clamped to the
/// last member, with z standard normal. Rank 0 (the best) is the most
/// likely pick and probability decays monotonically with rank.
pub fn select_index<R: Rng + ?Sized>(pop_size: usize, rng: &mut R) -> usize {
    assert!(pop_size > 0);
    let z: f64 = rng.sample(StandardNormal);
    let idx = (z.abs() * pop_size as f64 / 3.0).floor() as usize;
    idx.min(pop_size - 1)
}

/// Two independent rank picks; parents may coincide.
pub fn select_parents<R: Rng + ?Sized>(pop_size: usize, rng: &mut R) -> (usize, usize) {
    let a = select_index(pop_size, rng);
    let b = select_index(pop_size, rng);
    (a, b)
}

/// Uniform per-gene crossover: each gene comes from `b` with probability
/// `rate`, otherwise from `a`. One uniform draw per gene regardless of rate.
pub fn crossover<const N: usize, R: Rng + ?Sized>(
    a: &[f64; N],
    b: &[f64; N],
    rate: f64,
    rng: &mut R,
) -> [f64; N] {
    let mut child = [0.0; N];
    for i in 0..N {
        let take_b = rng.random::<f64>() < rate;
        child[i] = if take_b { b[i] } else { a[i] };
    }
    child
}

/// Additive Gaussian mutation with per-gene sigma and clamping bounds.
pub fn mutate<const N: usize, R: Rng + ?Sized>(
    genes: &mut [f64; N],
    sigma: &[f64; N],
    bounds: &[(f64, f64); N],
    rng: &mut R,
) {
    for (i, gene) in genes.iter_mut().enumerate() {
        let z: f64 = rng.sample(StandardNormal);
        *gene = (*gene + sigma[i] * z).clamp(bounds[i].0, bounds[i].1);
    }
}

/// Knobs consumed by [`evolve_generation`].
#[derive(Debug, Clone, Copy)]
pub struct EvolveParams<const N: usize> {
    pub elite_count: usize,
    pub crossover_rate: f64,
    pub mutation_sigma: [f64; N],
    pub bounds: [(f64, f64); N],
}

/// Produce the next generation: the `elite_count` best members survive
/// unchanged (ties keep their original order), bred children fill the
/// middle, and `injected` members (clamped to bounds) take the tail.
///
/// Lower fitness is better. Selection indices address the rank ordering,
/// so rank 0 is the current best.
pub fn evolve_generation<const N: usize, R: Rng + ?Sized>(
    population: &[[f64; N]],
    fitness: &[f64],
    injected: &[[f64; N]],
    params: &EvolveParams<N>,
    rng: &mut R,
) -> Vec<[f64; N]> {
    let size = population.len();
    assert_eq!(size, fitness.len());
    assert!(
        params.elite_count + injected.len() <= size,
        "elites {} + injected {} exceed population {size}",
        params.elite_count,
        injected.len()
    );

    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&i, &j| fitness[i].total_cmp(&fitness[j]));
    let ranked: Vec<[f64; N]> = order.iter().map(|&i| population[i]).collect();

    let mut next = Vec::with_capacity(size);
    next.extend_from_slice(&ranked[..params.elite_count]);

    let child_count = size - params.elite_count - injected.len();
    for _ in 0..child_count {
        let (ia, ib) = select_parents(size, rng);
        let mut child = crossover(&ranked[ia], &ranked[ib], params.crossover_rate, rng);
        mutate(&mut child, &params.mutation_sigma, &params.bounds, rng);
        next.push(child);
    }

    for member in injected {
        let mut clamped = *member;
        for (gene, &(lo, hi)) in clamped.iter_mut().zip(&params.bounds) {
            *gene = gene.clamp(lo, hi);
        }
        next.push(clamped);
    }

    next
}
