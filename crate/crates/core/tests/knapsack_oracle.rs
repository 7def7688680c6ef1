use hyperselect::domains::knapsack::{
    generate_knapsack, Item, KnapsackClass, KnapsackDomain, KnapsackInstance, BEST_RATIO,
    DEFAULT_ORDER, MAX_PROFIT, MIN_WEIGHT,
};
use hyperselect::ga::{train, GaConfig};
use hyperselect::{run_heuristic, solve_instance, synthetic_oracle, Metric, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive optimum by walking all subsets in Gray-code order, flipping
/// one item per step.
fn gray_code_optimum(inst: &KnapsackInstance) -> u64 {
    let n = inst.items.len();
    assert!(n <= 20);
    let (mut w, mut p) = (0u64, 0u64);
    let mut inside = vec![false; n];
    let mut best = 0;
    for k in 1u32..(1 << n) {
        let bit = k.trailing_zeros() as usize;
        let it = inst.items[bit];
        if inside[bit] {
            w -= it.weight;
            p -= it.profit;
        } else {
            w += it.weight;
            p += it.profit;
        }
        inside[bit] = !inside[bit];
        if w <= inst.capacity && p > best {
            best = p;
        }
    }
    best
}

fn random_instance(rng: &mut ChaCha8Rng) -> KnapsackInstance {
    let n = rng.random_range(1..=20);
    let items: Vec<Item> = (0..n)
        .map(|_| Item {
            profit: rng.random_range(1..=60),
            weight: rng.random_range(1..=40),
        })
        .collect();
    let total: u64 = items.iter().map(|i| i.weight).sum();
    let capacity = rng.random_range(0..=total);
    KnapsackInstance::new(capacity, items).unwrap()
}

#[test]
fn gray_code_matches_direct_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let mut inst = random_instance(&mut rng);
        inst.items.truncate(10);
        let n = inst.items.len();
        let direct = (0u32..(1 << n))
            .filter_map(|mask| {
                let chosen = (0..n).filter(|i| mask >> i & 1 == 1);
                let (w, p) = chosen.fold((0, 0), |(w, p), i| {
                    (w + inst.items[i].weight, p + inst.items[i].profit)
                });
                (w <= inst.capacity).then_some(p)
            })
            .max()
            .unwrap();
        assert_eq!(gray_code_optimum(&inst), direct);
    }
}

#[test]
fn heuristics_and_oracle_never_beat_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut rows = Vec::new();
    let mut optima = Vec::new();
    for _ in 0..200 {
        let inst = random_instance(&mut rng);
        let opt = gray_code_optimum(&inst) as f64;
        let row: Vec<_> = [MAX_PROFIT, MIN_WEIGHT, BEST_RATIO, DEFAULT_ORDER]
            .iter()
            .map(|&h| run_heuristic(h, &inst, &KnapsackDomain, 1000).unwrap())
            .collect();
        for out in &row {
            assert!(out.solved);
            assert!(out.objective <= opt);
        }
        rows.push(row);
        optima.push(opt);
    }
    let oracle = synthetic_oracle(&rows, Sense::Maximize).unwrap();
    for (o, opt) in oracle.outcomes.iter().zip(&optima) {
        assert!(o.objective <= *opt);
    }
}

#[test]
fn trained_selector_respects_the_optimum() {
    let train_set = generate_knapsack(6, 16, KnapsackClass::WeaklyCorrelated, 100, 3);
    let config = GaConfig {
        cycles: 15,
        budget: 1000,
        seed: 8,
        ..GaConfig::default()
    };
    let trained = train(&config, &KnapsackDomain, &train_set, None, &Metric::Euclidean).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let inst = random_instance(&mut rng);
        let out = solve_instance(&trained.best, &inst, &KnapsackDomain, None, &Metric::Euclidean, 1000)
            .unwrap();
        assert!(out.objective <= gray_code_optimum(&inst) as f64);
    }
}

#[test]
fn item_order_does_not_matter_without_ties() {
    // distinct profits, weights and ratios
    let items = vec![
        Item { profit: 30, weight: 7 },
        Item { profit: 11, weight: 2 },
        Item { profit: 45, weight: 13 },
        Item { profit: 9, weight: 5 },
        Item { profit: 27, weight: 8 },
    ];
    let a = KnapsackInstance::new(17, items.clone()).unwrap();
    let mut rev = items;
    rev.reverse();
    let b = KnapsackInstance::new(17, rev).unwrap();
    for h in [MAX_PROFIT, MIN_WEIGHT, BEST_RATIO] {
        let pa = run_heuristic(h, &a, &KnapsackDomain, 100).unwrap().objective;
        let pb = run_heuristic(h, &b, &KnapsackDomain, 100).unwrap().objective;
        assert_eq!(pa, pb, "heuristic {h}");
    }
}
