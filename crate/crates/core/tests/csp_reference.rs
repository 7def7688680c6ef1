//! Backtracking search checked against an independently written recursive
//! solver that works directly on raw conflict lists.

mod support;

use hyperselect::domains::csp::{ConflictSpec, CspDomain, CspInstance, SearchStatus, Variable, DEG, DOM, KAPPA, WDEG};
use hyperselect::{run_heuristic, Domain};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::csp_ref::{random_raw, reference_run, run_engine, satisfiable, to_instance};

#[test]
fn consistency_checks_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut nontrivial = 0;
    for _ in 0..120 {
        let raw = random_raw(&mut rng);
        let inst = to_instance(&raw);
        for h in [DOM, DEG, KAPPA, WDEG] {
            let (solved, cc, weights) = reference_run(&raw, h);
            let s = run_engine(&inst, h);
            assert_eq!(s.cc(), cc, "heuristic {h}");
            assert_eq!(s.status() == SearchStatus::Solved, solved);
            assert_eq!(s.weights(), weights.as_slice());
            nontrivial += usize::from(cc > 0);
        }
    }
    assert!(nontrivial > 200);
}

#[test]
fn solver_is_complete_and_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..150 {
        let raw = random_raw(&mut rng);
        let inst = to_instance(&raw);
        let sat = satisfiable(&raw);
        for h in [DOM, DEG, KAPPA, WDEG] {
            let s = run_engine(&inst, h);
            assert_eq!(s.status() == SearchStatus::Solved, sat);
            if sat {
                let vals: Vec<usize> = s.assignment().iter().map(|a| a.unwrap()).collect();
                for c in inst.constraints() {
                    assert!(!c.conflicts(vals[c.scope.0], vals[c.scope.1]));
                }
            }
            // the domain wrapper reports the same count and never times out here
            let out = run_heuristic(h, &inst, &CspDomain, 1_000_000).unwrap();
            assert_eq!(out.cost, s.cc());
            assert!(out.solved && !out.timed_out);
        }
    }
}

#[test]
fn value_and_name_relabelling_leaves_search_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let raw = random_raw(&mut rng);
        let inst = to_instance(&raw);
        // order-preserving value map and new names
        let doc = inst.to_spec();
        let vars: Vec<Variable> = doc
            .variables
            .iter()
            .map(|v| Variable {
                name: format!("renamed_{}", v.name),
                domain: v.domain.iter().map(|x| 3 * x + 1000).collect(),
            })
            .collect();
        let specs: Vec<ConflictSpec> = doc
            .constraints
            .iter()
            .map(|c| ConflictSpec {
                scope: c.scope,
                conflicts: c.conflicts.iter().map(|[a, b]| [3 * a + 1000, 3 * b + 1000]).collect(),
            })
            .collect();
        let relabelled = CspInstance::new(vars, specs).unwrap();
        for h in [DOM, DEG, KAPPA, WDEG] {
            let a = run_engine(&inst, h);
            let b = run_engine(&relabelled, h);
            assert_eq!((a.cc(), a.status()), (b.cc(), b.status()));
        }
    }
}

#[test]
fn budget_exhaustion_times_out() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inst = hyperselect::domains::csp::generate_random_csp(12, 4, 0.6, 0.45, &mut rng);
    let full = run_heuristic(DOM, &inst, &CspDomain, u64::MAX).unwrap();
    assert!(full.cost > 10);
    let cut = run_heuristic(DOM, &inst, &CspDomain, full.cost / 2).unwrap();
    assert!(cut.timed_out && !cut.solved);
    assert!(cut.cost > full.cost / 2);
    let fitness = CspDomain.fitness_term(&cut, full.cost / 2);
    assert_eq!(fitness, (full.cost / 2) as f64);
}
