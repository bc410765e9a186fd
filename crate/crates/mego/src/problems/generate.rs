//! Instance generators for the six problem classes.

use rand::seq::index::sample;
use rand::Rng;

use crate::bits::BitVector;
use crate::problems::{
    AsPayload, CaMock, CaMode, CaPayload, CimPayload, DirectedGraph, KpPayload, McPayload,
    OmPayload, Payload, ProblemInstance,
};

/// OM: uniform random reference vector.
pub fn gen_om(id: impl Into<String>, dim: usize, rng: &mut impl Rng) -> ProblemInstance {
    let reference = BitVector::random(dim, rng);
    ProblemInstance::new(id, dim, Payload::Om(OmPayload { reference }))
}

/// KP: values and weights uniform on [0, 1], co-sorted so that a more
/// valuable item is always heavier; capacity is a uniform fraction
/// lambda in [0.2, 0.8] of the total weight.
pub fn gen_kp(id: impl Into<String>, dim: usize, rng: &mut impl Rng) -> ProblemInstance {
    let mut values: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda = rng.gen_range(0.2..0.8);
    let capacity = lambda * weights.iter().sum::<f64>();
    ProblemInstance::new(
        id,
        dim,
        Payload::Kp(KpPayload {
            values,
            weights,
            capacity,
        }),
    )
}

/// MC: uniform connected graph with `floor(lambda d^2)` edges,
/// lambda in [0.2, 0.4]; regenerated until connected. Cut-side cap
/// `floor(lambda' d)` with an independent lambda' in [0.2, 0.4].
pub fn gen_mc(id: impl Into<String>, dim: usize, rng: &mut impl Rng) -> ProblemInstance {
    assert!(dim >= 2, "max cut needs at least 2 vertices");
    let max_edges = dim * (dim - 1) / 2;
    let rows = loop {
        let lambda = rng.gen_range(0.2..0.4);
        let edges = ((lambda * (dim * dim) as f64) as usize).clamp(dim - 1, max_edges);
        let mut rows = vec![BitVector::zeros(dim); dim];
        for pair_index in sample(rng, max_edges, edges) {
            let (i, j) = unrank_pair(pair_index, dim);
            rows[i].set(j, 1);
            rows[j].set(i, 1);
        }
        if connected(&rows) {
            break rows;
        }
    };
    let cap_lambda = rng.gen_range(0.2..0.4);
    let cap = (cap_lambda * dim as f64) as usize;
    ProblemInstance::new(id, dim, Payload::Mc(McPayload { rows, cap }))
}

/// Maps an index in `0..d(d-1)/2` to the pair `(i, j)`, `i < j`.
fn unrank_pair(index: usize, d: usize) -> (usize, usize) {
    let mut i = 0;
    let mut remaining = index;
    loop {
        let row_len = d - 1 - i;
        if remaining < row_len {
            return (i, i + 1 + remaining);
        }
        remaining -= row_len;
        i += 1;
    }
}

fn connected(rows: &[BitVector]) -> bool {
    let d = rows.len();
    let mut seen = vec![false; d];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for v in 0..d {
            if rows[u].get(v) == 1 && !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == d
}

/// Where the CIM social network comes from.
pub enum CimGraphSource {
    /// `nodes` vertices with `edges` distinct uniform random directed arcs;
    /// probabilities follow the weighted-cascade convention.
    Synthetic { nodes: usize, edges: usize },
    /// A pre-loaded graph, e.g. from [`crate::problems::load_edge_list`].
    Graph(DirectedGraph),
}

/// CIM: seed-set cap `floor(lambda d)` with lambda in [0.2, 0.4], random
/// complementary seed set of that size, random candidate set of size `d`,
/// interaction parameters fixed at (0.5, 0.7, 0.5, 0.7).
pub fn gen_cim(
    id: impl Into<String>,
    dim: usize,
    rng: &mut impl Rng,
    source: CimGraphSource,
) -> ProblemInstance {
    let graph = match source {
        CimGraphSource::Graph(g) => g,
        CimGraphSource::Synthetic { nodes, edges } => synthetic_digraph(nodes, edges, rng),
    };
    assert!(graph.nodes >= dim, "need at least dim nodes for the candidate set");
    let lambda = rng.gen_range(0.2..0.4);
    let cap = (lambda * dim as f64) as usize;
    let seed_a: Vec<usize> = sample(rng, graph.nodes, cap.min(graph.nodes)).into_iter().collect();
    let candidates: Vec<usize> = sample(rng, graph.nodes, dim).into_iter().collect();
    let sim_seed = rng.gen();
    ProblemInstance::new(
        id,
        dim,
        Payload::Cim(CimPayload {
            graph,
            seed_a,
            candidates,
            cap,
            q_a_none: 0.5,
            q_a_b: 0.7,
            q_b_none: 0.5,
            q_b_a: 0.7,
            simulations: 100,
            sim_seed,
        }),
    )
}

fn synthetic_digraph(nodes: usize, edges: usize, rng: &mut impl Rng) -> DirectedGraph {
    let max_arcs = nodes * (nodes - 1);
    let picked = sample(rng, max_arcs, edges.min(max_arcs));
    let arcs: Vec<(usize, usize, Option<f64>)> = picked
        .into_iter()
        .map(|index| {
            let u = index / (nodes - 1);
            let mut v = index % (nodes - 1);
            if v >= u {
                v += 1;
            }
            (u, v, None)
        })
        .collect();
    DirectedGraph::with_weighted_cascade(nodes, arcs)
}

/// AS: synthetic coverage sets over a universe — each element joins each
/// set independently with the given density; cap `floor(lambda d)` with
/// lambda in [0.1, 0.6].
pub fn gen_as(
    id: impl Into<String>,
    dim: usize,
    rng: &mut impl Rng,
    universe: usize,
    density: f64,
) -> ProblemInstance {
    let sets: Vec<Vec<u32>> = (0..dim)
        .map(|_| {
            (0..universe)
                .filter(|_| rng.gen::<f64>() < density)
                .map(|e| e as u32)
                .collect()
        })
        .collect();
    let lambda = rng.gen_range(0.1..0.6);
    let cap = (lambda * dim as f64) as usize;
    ProblemInstance::new(id, dim, Payload::As(AsPayload { universe, sets, cap }))
}

/// CA with the synthetic mock objective.
pub fn gen_ca_mock(id: impl Into<String>, dim: usize, rng: &mut impl Rng) -> ProblemInstance {
    let base = rng.gen_range(4000.0..60000.0);
    let linear: Vec<f64> = (0..dim).map(|_| rng.gen_range(-100.0..100.0)).collect();
    let n_pairs = (dim * dim) / 20;
    let pairs: Vec<(usize, usize, f64)> = (0..n_pairs)
        .map(|_| {
            let i = rng.gen_range(0..dim);
            let j = rng.gen_range(0..dim);
            (i.min(j), i.max(j), rng.gen_range(-50.0..50.0))
        })
        .filter(|&(i, j, _)| i != j)
        .collect();
    ProblemInstance::new(
        id,
        dim,
        Payload::Ca(CaPayload {
            mode: CaMode::Mock(CaMock { base, linear, pairs }),
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Payload;
    use crate::rng::rng_from_seed;

    #[test]
    fn kp_generator_invariants() {
        let mut rng = rng_from_seed(31);
        for trial in 0..50 {
            let d = 4 + trial % 12;
            let inst = gen_kp(format!("kp-{trial}"), d, &mut rng);
            let p = match inst.payload() {
                Payload::Kp(p) => p,
                _ => unreachable!(),
            };
            // co-sortedness
            for i in 0..d - 1 {
                assert!(p.values[i] <= p.values[i + 1]);
                assert!(p.weights[i] <= p.weights[i + 1]);
            }
            let total: f64 = p.weights.iter().sum();
            let ratio = p.capacity / total;
            assert!((0.2..=0.8).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn kp_equal_weights_capacity_admits_expected_count() {
        // with all weights equal, capacity lambda * sum admits floor(lambda d)
        let payload = KpPayload {
            values: vec![1.0; 10],
            weights: vec![1.0; 10],
            capacity: 0.8 * 10.0,
        };
        let mut admitted = 0;
        let mut weight = 0.0;
        while weight + 1.0 <= payload.capacity + 1e-12 {
            weight += 1.0;
            admitted += 1;
        }
        assert_eq!(admitted, 8);
    }

    #[test]
    fn mc_generator_is_connected_with_expected_edges() {
        let mut rng = rng_from_seed(5);
        for trial in 0..10 {
            let d = 6 + trial % 6;
            let inst = gen_mc(format!("mc-{trial}"), d, &mut rng);
            let p = match inst.payload() {
                Payload::Mc(p) => p,
                _ => unreachable!(),
            };
            assert!(connected(&p.rows));
            // symmetric with zero diagonal
            let mut edge_count = 0;
            for i in 0..d {
                assert_eq!(p.rows[i].get(i), 0);
                for j in 0..d {
                    assert_eq!(p.rows[i].get(j), p.rows[j].get(i));
                    if i < j && p.rows[i].get(j) == 1 {
                        edge_count += 1;
                    }
                }
            }
            let max_edges = d * (d - 1) / 2;
            assert!(edge_count >= d - 1 && edge_count <= max_edges);
            assert!(p.cap <= d / 2);
        }
    }

    #[test]
    fn unrank_pair_is_a_bijection() {
        let d = 7;
        let mut seen = std::collections::HashSet::new();
        for idx in 0..d * (d - 1) / 2 {
            let (i, j) = unrank_pair(idx, d);
            assert!(i < j && j < d);
            assert!(seen.insert((i, j)));
        }
    }

    #[test]
    fn cim_generator_respects_sizes() {
        let mut rng = rng_from_seed(12);
        let inst = gen_cim("cim-0", 10, &mut rng, CimGraphSource::Synthetic { nodes: 30, edges: 90 });
        let p = match inst.payload() {
            Payload::Cim(p) => p,
            _ => unreachable!(),
        };
        assert_eq!(p.candidates.len(), 10);
        assert_eq!(p.seed_a.len(), p.cap);
        assert!(p.cap <= 4);
        assert_eq!(p.graph.edges.len(), 90);
        assert_eq!((p.q_a_none, p.q_a_b, p.q_b_none, p.q_b_a), (0.5, 0.7, 0.5, 0.7));
    }

    #[test]
    fn as_generator_cap_bounds_and_monotone_coverage() {
        let mut rng = rng_from_seed(13);
        let mut inst = gen_as("as-0", 12, &mut rng, 300, 0.05, );
        let p = match inst.payload() {
            Payload::As(p) => (p.cap, p.universe),
            _ => unreachable!(),
        };
        assert!(p.0 <= (0.6 * 12.0) as usize);
        // coverage is monotone when adding a 1 to a feasible solution
        let mut x = BitVector::zeros(12);
        x.set(0, 1);
        let f1 = inst.evaluate(&x).unwrap();
        x.set(1, 1);
        let f2 = inst.evaluate(&x).unwrap();
        assert!(f2 >= f1);
        assert!(f2 <= p.1 as f64);
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = gen_kp("kp", 8, &mut rng_from_seed(77));
        let b = gen_kp("kp", 8, &mut rng_from_seed(77));
        match (a.payload(), b.payload()) {
            (Payload::Kp(x), Payload::Kp(y)) => {
                assert_eq!(x.values, y.values);
                assert_eq!(x.weights, y.weights);
                assert_eq!(x.capacity, y.capacity);
            }
            _ => unreachable!(),
        }
    }
}
