use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recode_core::{kernel_value, Branch, RecodeConfig, RecodeMemory, RemovalStrategy};

fn config_strategy() -> impl Strategy<Value = RecodeConfig> {
    (
        2usize..40,
        1usize..8,
        0.01f64..2.0,
        prop_oneof![Just(0.5), Just(0.9), Just(0.99)],
        prop_oneof![Just(0.99), Just(0.999), Just(1.0)],
        0.05f64..1.0,
        prop_oneof![
            Just(RemovalStrategy::InverseCountSquared),
            Just(RemovalStrategy::InverseCount),
            Just(RemovalStrategy::MinCount)
        ],
        any::<u64>(),
    )
        .prop_map(|(capacity, k, kappa, tau, gamma, eta, removal, seed)| RecodeConfig {
            capacity,
            k,
            kappa,
            tau,
            gamma,
            eta,
            removal,
            seed,
            ..RecodeConfig::default()
        })
}

fn stream(seed: u64, dim: usize, len: usize, spread: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| (0..dim).map(|_| spread * rng.random::<f64>()).collect())
        .collect()
}

fn brute_nearest(mem: &RecodeMemory, e: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, a) in mem.atoms().iter().enumerate() {
        let d: f64 = a.position.iter().zip(e).map(|(x, y)| (x - y).powi(2)).sum();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_bounded(
        m in prop::collection::vec(-5.0f64..5.0, 3),
        e in prop::collection::vec(-5.0f64..5.0, 3),
        d in 0.0f64..20.0,
        eps in 1e-4f64..1.0,
    ) {
        let k = kernel_value(&m, &e, d, eps).unwrap();
        prop_assert!((0.0..=1.0).contains(&k));
        let sq: f64 = m.iter().zip(&e).map(|(a, b)| (a - b).powi(2)).sum();
        if sq >= d {
            prop_assert_eq!(k, 0.0);
        }
        prop_assert_eq!(kernel_value(&m, &m, d, eps).unwrap(), if d > 0.0 { 1.0 } else { 0.0 });
    }

    #[test]
    fn total_count_follows_discount_recursion(cfg in config_strategy(), seed in any::<u64>(), dim in 1usize..4) {
        let gamma = cfg.gamma;
        let cap = cfg.capacity;
        let mut mem = RecodeMemory::new(cfg, dim).unwrap();
        let mut expected = 0.0;
        for e in stream(seed, dim, 300, 3.0) {
            mem.process(&e).unwrap();
            expected = gamma * expected + 1.0;
            prop_assert!(mem.len() <= cap);
            prop_assert!(mem.atoms().iter().all(|a| a.count >= 0.0 && a.count.is_finite()));
        }
        let total = mem.total_count();
        prop_assert!((total - expected).abs() <= 1e-9 * expected, "{} vs {}", total, expected);
    }

    #[test]
    fn assimilation_never_lowers_soft_count(cfg in config_strategy(), seed in any::<u64>()) {
        let mut mem = RecodeMemory::new(cfg, 2).unwrap();
        for e in stream(seed, 2, 200, 2.0) {
            let mut shadow = mem.clone();
            shadow.update_bandwidth(&e).unwrap();
            shadow.discount_counts();
            let before = shadow.soft_visitation_count(&e).unwrap();
            let trace = mem.process_traced(&e).unwrap();
            if let Branch::Assimilated { slot } = trace.branch {
                prop_assert_eq!(mem.d_ema_sq(), shadow.d_ema_sq());
                prop_assert!(mem.soft_visitation_count(&e).unwrap() >= before);
                shadow.assimilate(&e, slot).unwrap();
                prop_assert_eq!(shadow.atoms(), mem.atoms());
            }
        }
    }

    #[test]
    fn same_seed_same_state(cfg in config_strategy(), seed in any::<u64>()) {
        let xs = stream(seed, 2, 150, 4.0);
        let mut a = RecodeMemory::new(cfg.clone(), 2).unwrap();
        let mut b = RecodeMemory::new(cfg, 2).unwrap();
        for e in &xs {
            prop_assert_eq!(a.process(e).unwrap().to_bits(), b.process(e).unwrap().to_bits());
        }
        prop_assert_eq!(a.to_snapshot(), b.to_snapshot());
    }

    #[test]
    fn snapshot_round_trip_continues_identically(cfg in config_strategy(), seed in any::<u64>()) {
        let xs = stream(seed, 3, 120, 2.0);
        let mut a = RecodeMemory::new(cfg, 3).unwrap();
        for e in &xs[..60] {
            a.process(e).unwrap();
        }
        let mut b = RecodeMemory::from_snapshot(&a.to_snapshot()).unwrap();
        prop_assert_eq!(&a, &b);
        for e in &xs[60..] {
            prop_assert_eq!(a.process(e).unwrap().to_bits(), b.process(e).unwrap().to_bits());
        }
        prop_assert_eq!(a, b);
    }

    #[test]
    fn nearest_atom_matches_scan(cfg in config_strategy(), seed in any::<u64>(), dim in 1usize..5) {
        let mut mem = RecodeMemory::new(cfg, dim).unwrap();
        let xs = stream(seed, dim, 80, 1.0);
        for e in &xs[..40] {
            mem.process(e).unwrap();
        }
        for q in &xs[40..] {
            prop_assert_eq!(mem.nearest_atom(q).unwrap(), brute_nearest(&mem, q));
        }
    }

    #[test]
    fn redistribution_preserves_mass(cfg in config_strategy(), seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut mem = RecodeMemory::new(cfg, 2).unwrap();
        for e in stream(seed, 2, 100, 5.0) {
            mem.process(&e).unwrap();
        }
        prop_assume!(mem.len() >= 2);
        let j = pick.index(mem.len());
        let before: Vec<_> = mem.atoms().to_vec();
        let receiver = mem.redistribute_count(j).unwrap().unwrap();
        // oracle: nearest other atom by explicit scan, lowest index on ties
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (i, a) in before.iter().enumerate() {
            if i == j { continue; }
            let d: f64 = a.position.iter().zip(&before[j].position).map(|(x, y)| (x - y).powi(2)).sum();
            if d < best_d { best = Some(i); best_d = d; }
        }
        prop_assert_eq!(Some(receiver), best);
        let total_before: f64 = before.iter().map(|a| a.count).sum();
        prop_assert!((mem.total_count() - total_before).abs() <= 1e-12 * total_before.max(1.0));
        prop_assert_eq!(mem.len(), before.len() - 1);
        let shifted = if receiver > j { receiver - 1 } else { receiver };
        prop_assert_eq!(mem.atoms()[shifted].count, before[receiver].count + before[j].count);
    }

    #[test]
    fn running_mean_identity(xs in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 1..50)) {
        // an atom fed n points with unit increments holds their arithmetic mean
        let cfg = RecodeConfig { gamma: 1.0, ..RecodeConfig::default() };
        let mut mem = RecodeMemory::from_parts(
            cfg,
            2,
            vec![recode_core::Atom { position: xs[0].clone(), count: 1.0, born: 0 }],
            0.0,
            1,
        ).unwrap();
        for x in &xs[1..] {
            mem.assimilate(x, 0).unwrap();
        }
        let n = xs.len() as f64;
        for d in 0..2 {
            let mean = xs.iter().map(|x| x[d]).sum::<f64>() / n;
            prop_assert!((mem.atoms()[0].position[d] - mean).abs() < 1e-9);
        }
        prop_assert_eq!(mem.atoms()[0].count, n);
    }
}

#[test]
fn rejects_bad_embeddings_without_state_change() {
    let mut mem = RecodeMemory::new(RecodeConfig::default(), 2).unwrap();
    mem.process(&[0.0, 1.0]).unwrap();
    let snap = mem.to_snapshot();
    assert!(mem.process(&[f64::NAN, 0.0]).is_err());
    assert!(mem.process(&[1.0]).is_err());
    assert_eq!(mem.to_snapshot(), snap);
}
