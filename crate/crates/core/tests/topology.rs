use esn_valley::linalg::CsrMatrix;
use esn_valley::topology::{assign_weights, generate_topology, scale_to_spectral_radius, TopologySpec};
use esn_valley::ReservoirNetwork;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Largest eigenvalue modulus from nalgebra's complex eigenvalues.
fn oracle_radius(m: &CsrMatrix<f64>) -> f64 {
    let n = m.rows();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for (i, j, v) in m.triplets() {
        d[(i, j)] = v;
    }
    d.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn scaled_directed_matrices_hit_target_radius() {
    for seed in 0..6u64 {
        let edges = generate_topology(&TopologySpec::directed(200, 3.0, seed)).unwrap();
        let raw = assign_weights::<f64>(&edges, seed + 1000);
        for &target in &[0.1, 0.7, 1.4, 2.0] {
            let net = scale_to_spectral_radius(&raw, target).unwrap();
            let r = oracle_radius(&net.weights);
            assert!((r - target).abs() <= 1e-6 * target, "seed {seed} target {target}: {r}");
            assert_eq!(net.spectral_radius, target);
        }
    }
}

#[test]
fn undirected_and_small_world_are_symmetric_after_scaling() {
    for spec in [TopologySpec::undirected(300, 3.0, 4), TopologySpec::small_world(300, 4, 0.3, 4)] {
        let net = ReservoirNetwork::<f64>::build(&spec, 9, 1.1).unwrap();
        assert!(net.weights.is_symmetric(), "{:?}", spec.kind);
        let r = oracle_radius(&net.weights);
        assert!((r - 1.1).abs() < 1.1e-6, "{:?}: {r}", spec.kind);
    }
}

#[test]
fn large_sparse_matrix_uses_iteration() {
    let net = ReservoirNetwork::<f64>::build(&TopologySpec::directed(2000, 3.0, 11), 12, 0.5).unwrap();
    assert_eq!(net.radius_method, esn_valley::linalg::RadiusMethod::SubspaceIteration);
    let nnz = net.weights.nnz() as f64;
    assert!((nnz / 2000.0 - 3.0).abs() < 0.3, "mean degree {}", nnz / 2000.0);
}

#[test]
fn build_is_deterministic_across_threads() {
    let spec = TopologySpec::directed(400, 3.0, 77);
    let a = ReservoirNetwork::<f64>::build(&spec, 78, 0.9).unwrap();
    let handles: Vec<_> = (0..3)
        .map(|_| {
            let s = spec.clone();
            std::thread::spawn(move || ReservoirNetwork::<f64>::build(&s, 78, 0.9).unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), a);
    }
}

#[test]
fn edge_list_export_round_trips() {
    let net = ReservoirNetwork::<f64>::build(&TopologySpec::undirected(60, 3.0, 5), 6, 0.8).unwrap();
    let mut buf = Vec::new();
    net.write_edge_list(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let mut head = text.lines();
    assert_eq!(head.next(), Some("# n=60"));
    let rho: f64 = head.next().unwrap().strip_prefix("# rho=").unwrap().parse().unwrap();
    assert_eq!(rho, 0.8);
    let back = ReservoirNetwork::<f64>::read_edge_list(&buf[..]).unwrap();
    assert_eq!(back.weights, net.weights);
    assert_eq!(back.spectral_radius, net.spectral_radius);
}

#[test]
fn f32_networks_scale_too() {
    let net = ReservoirNetwork::<f32>::build(&TopologySpec::directed(150, 3.0, 3), 4, 1.4f32).unwrap();
    let m64 = CsrMatrix::from_triplets(150, 150, net.weights.triplets().map(|(i, j, v)| (i, j, v as f64)).collect()).unwrap();
    assert!((oracle_radius(&m64) - 1.4).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_is_idempotent_and_linear(seed in 0u64..10_000, rho in 0.05f64..3.0) {
        let edges = generate_topology(&TopologySpec::directed(120, 3.0, seed)).unwrap();
        let raw = assign_weights::<f64>(&edges, seed ^ 0xabcdef);
        let once = scale_to_spectral_radius(&raw, rho).unwrap();
        let twice = scale_to_spectral_radius(&once.weights, rho).unwrap();
        let double = scale_to_spectral_radius(&raw, 2.0 * rho).unwrap();
        for ((a, b), c) in once.weights.values().iter().zip(twice.weights.values()).zip(double.weights.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((2.0 * a - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn undirected_scaling_preserves_exact_symmetry(seed in 0u64..10_000, rho in 0.0f64..2.5) {
        let net = ReservoirNetwork::<f64>::build(&TopologySpec::undirected(80, 3.0, seed), seed + 1, rho).unwrap();
        prop_assert!(net.weights.is_symmetric());
    }

    #[test]
    fn weights_lie_in_unit_interval(seed in any::<u64>()) {
        let edges = generate_topology(&TopologySpec::directed(50, 3.0, seed)).unwrap();
        let w = assign_weights::<f64>(&edges, seed);
        prop_assert_eq!(w.nnz(), edges.stored_entries());
        prop_assert!(w.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
