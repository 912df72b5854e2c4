use super::*;
use crate::rng::replication_rng;

fn det(c: f64) -> FitnessSpec {
    FitnessSpec::Deterministic { c }
}

#[test]
fn path_and_star_seeds() {
    let mut rng = replication_rng(1, 0);
    let g = init_graph(2, &SeedTopology::Path, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).unwrap();
    assert_eq!(g.indeg(), &[1, 0]);
    assert_eq!(g.m0(), 1);
    let g = init_graph(4, &SeedTopology::Star, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).unwrap();
    assert_eq!(g.indeg(), &[3, 0, 0, 0]);
    assert_eq!(g.m0(), 3);
}

#[test]
fn seed_validation() {
    let mut rng = replication_rng(1, 0);
    let dup = SeedTopology::EdgeList(vec![(2, 1), (2, 1)]);
    assert!(init_graph(2, &dup, ModelKind::PafroSingleEdge, det(1.0), &mut rng).is_err());
    assert!(init_graph(2, &dup, ModelKind::PafroBernoulli, det(1.0), &mut rng).is_err());
    let g = init_graph(2, &dup, ModelKind::Pafud { m: 2 }, det(1.0), &mut rng).unwrap();
    assert_eq!(g.indeg(), &[2, 0]);
    let backwards = SeedTopology::EdgeList(vec![(1, 2)]);
    assert!(init_graph(2, &backwards, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).is_err());
    let empty = SeedTopology::EdgeList(vec![]);
    assert!(init_graph(2, &empty, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).is_err());
    assert!(init_graph(1, &SeedTopology::Path, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).is_err());
    assert!(init_graph(2, &SeedTopology::Path, ModelKind::Paffd { m: 0 }, det(1.0), &mut rng).is_err());
}

#[test]
fn self_loop_seed_attaches_to_only_vertex() {
    let mut g = GraphState::from_degrees(ModelKind::Pafud { m: 1 }, 1, 1, vec![1.0], vec![1], None)
        .unwrap()
        .with_plan(det(1.0));
    let mut rng = replication_rng(3, 0);
    g.grow_step(&mut rng).unwrap();
    assert_eq!(g.indeg(), &[2, 0]);
}

#[test]
fn weighted_pick_single_vertex() {
    let g = GraphState::from_degrees(ModelKind::Pafud { m: 1 }, 1, 1, vec![1.0], vec![1], None).unwrap();
    let mut rng = replication_rng(3, 0);
    for _ in 0..100 {
        assert_eq!(g.weighted_pick(&mut rng), Vertex::new(1));
    }
}

#[test]
fn weighted_pick_two_to_one() {
    let g = GraphState::from_degrees(ModelKind::Paffd { m: 1 }, 2, 1, vec![1.0, 1.0], vec![1, 0], None).unwrap();
    let mut rng = replication_rng(5, 0);
    let trials = 1_000_000;
    let hits = (0..trials).filter(|_| g.weighted_pick(&mut rng).label() == 1).count();
    let freq = hits as f64 / trials as f64;
    assert!((freq - 2.0 / 3.0).abs() < 0.002, "{freq}");
}

#[test]
fn weighted_pick_uniform_chi_square() {
    let g = GraphState::from_degrees(ModelKind::Paffd { m: 1 }, 4, 3, vec![1.0, 2.0, 1.0, 1.0], vec![1, 0, 1, 1], None)
        .unwrap();
    let mut rng = replication_rng(6, 0);
    let trials = 1_000_000usize;
    let mut counts = [0usize; 4];
    for _ in 0..trials {
        counts[g.weighted_pick(&mut rng).index()] += 1;
    }
    let e = trials as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99.9% point of chi-square with 3 degrees of freedom.
    assert!(chi2 < 16.266, "{chi2}");
}

#[test]
fn edge_count_is_conserved() {
    let mut rng = replication_rng(9, 0);
    let mut g = init_graph(2, &SeedTopology::Path, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).unwrap();
    g.grow_to(100_000, &[], &mut [], None, &mut rng).unwrap();
    let total: u64 = g.indeg().iter().map(|&d| d as u64).sum();
    assert_eq!(total, 1 + (100_000 - 2));
    assert!(g.index_drift() < 1e-9);

    let mut g = init_graph(3, &SeedTopology::Star, ModelKind::Pafud { m: 3 }, det(0.5), &mut rng).unwrap();
    g.grow_to(5_000, &[], &mut [], None, &mut rng).unwrap();
    let total: u64 = g.indeg().iter().map(|&d| d as u64).sum();
    assert_eq!(total, 2 + 3 * (5_000 - 3));
}

#[test]
fn growth_is_deterministic() {
    let spec = FitnessSpec::ParetoTail { beta: 1.5, xmin: 1.0, c: 1.0 };
    let run = |model| {
        let mut rng = replication_rng(42, 7);
        let mut g = init_graph(2, &SeedTopology::Path, model, spec.clone(), &mut rng).unwrap();
        g.grow_to(20_000, &[], &mut [], None, &mut rng).unwrap();
        (g.indeg().to_vec(), g.fitness().to_vec())
    };
    for model in [ModelKind::Paffd { m: 2 }, ModelKind::PafroBernoulli] {
        assert_eq!(run(model), run(model));
    }
}

#[test]
fn grow_to_current_size_is_a_no_op() {
    let mut rng = replication_rng(1, 1);
    let mut g = init_graph(2, &SeedTopology::Path, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).unwrap();
    let before = g.indeg().to_vec();
    let mut calls = 0;
    let mut obs = |_: &GraphState| calls += 1;
    let report = g.grow_to(2, &[], &mut [&mut obs], None, &mut rng).unwrap();
    assert_eq!(g.indeg(), before.as_slice());
    assert_eq!(report.checkpoints_observed, 0);
    assert_eq!(calls, 0);
}

#[test]
fn observers_fire_at_checkpoints() {
    let mut rng = replication_rng(1, 2);
    let mut g = init_graph(2, &SeedTopology::Path, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).unwrap();
    let mut seen = Vec::new();
    let mut obs = |s: &GraphState| seen.push(s.n());
    g.grow_to(1000, &[10, 100, 1000], &mut [&mut obs], None, &mut rng).unwrap();
    assert_eq!(seen, vec![10, 100, 1000]);
    assert!(g.grow_to(2000, &[1000], &mut [], None, &mut rng).is_err());
    assert!(g.grow_to(2000, &[1500, 1400], &mut [], None, &mut rng).is_err());
}

#[test]
fn expired_deadline_truncates() {
    let mut rng = replication_rng(1, 3);
    let mut g = init_graph(2, &SeedTopology::Path, ModelKind::Paffd { m: 1 }, det(1.0), &mut rng).unwrap();
    g.grow_to(4096, &[], &mut [], None, &mut rng).unwrap();
    let report = g.grow_to(100_000, &[], &mut [], Some(Instant::now()), &mut rng).unwrap();
    assert!(report.truncated);
    assert!(report.reached < 100_000);
}

#[test]
fn degrees_are_monotone_with_bounded_increments() {
    let spec = FitnessSpec::Uniform { a: 0.0, b: 1.0 };
    for model in [
        ModelKind::Paffd { m: 3 },
        ModelKind::Pafud { m: 2 },
        ModelKind::PafroSingleEdge,
        ModelKind::PafroBernoulli,
    ] {
        let mut rng = replication_rng(11, 0);
        let mut g = init_graph(2, &SeedTopology::Path, model, spec.clone(), &mut rng).unwrap();
        let mut prev = g.indeg().to_vec();
        for _ in 0..2000 {
            g.grow_step(&mut rng).unwrap();
            for (i, &p) in prev.iter().enumerate() {
                let d = g.indeg()[i];
                assert!(d >= p);
                let cap = if model.is_pafro() { 1 } else { model.m() };
                assert!(d - p <= cap);
            }
            prev = g.indeg().to_vec();
        }
    }
}

#[test]
fn edge_log_is_ordered_and_matches_degrees() {
    let mut rng = replication_rng(2, 0);
    let mut g = init_graph(3, &SeedTopology::Star, ModelKind::Paffd { m: 2 }, det(1.0), &mut rng).unwrap();
    g.record_edges();
    g.grow_to(200, &[], &mut [], None, &mut rng).unwrap();
    let log = g.edge_log().unwrap();
    assert_eq!(log.len() as u64, g.edge_count());
    assert!(log.windows(2).all(|w| w[0].0 <= w[1].0));
    assert!(log.iter().all(|&(c, p)| c > p));
    let mut deg = vec![0u32; g.n()];
    for &(_, p) in log {
        deg[p as usize - 1] += 1;
    }
    assert_eq!(deg.as_slice(), g.indeg());
    let mut text = Vec::new();
    g.write_edge_log(&mut text).unwrap();
    assert!(String::from_utf8(text).unwrap().starts_with("2 1\n3 1\n"));
}

// The thinning sampler must hit each vertex with its own probability.
#[test]
fn bernoulli_thinning_marginals() {
    let n = 300;
    let fitness: Vec<f64> = (0..n).map(|i| if i % 7 == 0 { 20.0 } else { 0.5 + (i % 3) as f64 }).collect();
    let mut indeg = vec![0u32; n];
    indeg[0] = 40;
    indeg[5] = 10;
    let g = GraphState::from_degrees(ModelKind::PafroBernoulli, 2, 50, fitness.clone(), indeg.clone(), Some(vec![40, 0]))
        .unwrap();
    let denom = g.attachment_denominator();
    assert!(g.max_weight() / denom < 0.5);
    let trials = 100_000;
    let mut counts = vec![0u32; n];
    let mut rng = replication_rng(77, 0);
    let mut out = Vec::new();
    for _ in 0..trials {
        out.clear();
        g.bernoulli_targets(&mut rng, &mut out).unwrap();
        for &i in &out {
            counts[i] += 1;
        }
    }
    for i in 0..n {
        let p = (indeg[i] as f64 + fitness[i]) / denom;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = counts[i] as f64 / trials as f64;
        assert!((freq - p).abs() < 5.0 * se, "vertex {i}: {freq} vs {p}");
    }
}
