mod common;

use common::{batch_targets_match, fifo_eviction_holds, monitor_shift_trial, replay_chi_square, sample_transitions};
use proptest::prelude::*;
use qroute::agent::{epsilon_greedy, td_error_and_priority, EpsilonSchedule, ReplayBuffer, PRIORITY_BETA};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn full_exploration_is_uniform_within_three_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 100_000;
    for valid in 1..=3usize {
        let mut counts = vec![0usize; valid];
        for _ in 0..draws {
            counts[epsilon_greedy(valid, 1.0, &mut rng, || panic!("ε = 1 never exploits")).unwrap()] += 1;
        }
        let p = 1.0 / valid as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma + 1e-9, "valid {valid}: {c}");
        }
    }
}

#[test]
fn zero_exploration_is_always_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100_000 {
        assert_eq!(epsilon_greedy(3, 0.0, &mut rng, || vec![0.1, 0.7, 0.7]).unwrap(), 1);
    }
}

#[test]
fn equal_priorities_sample_uniformly() {
    let p = replay_chi_square(&[1.0; 50], 100_000, 4);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn unequal_priorities_sample_proportionally() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let priorities: Vec<f64> = (0..200).map(|_| PRIORITY_BETA + rng.gen_range(0.0..3.0)).collect();
    let p = replay_chi_square(&priorities, 100_000, 6);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn dominant_priority_dominates_draws() {
    let t = sample_transitions(1, 7).remove(0);
    let mut buf = ReplayBuffer::new(100);
    buf.push(t.clone(), 99.0);
    for _ in 0..99 {
        buf.push(t.clone(), 1.0 / 99.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let hits = (0..10_000).filter(|_| buf.sample_slot(&mut rng) == 0).count();
    assert!(hits >= 9_500, "{hits}");
}

#[test]
fn replay_evicts_oldest_first() {
    assert!(fifo_eviction_holds());
}

#[test]
fn monitor_resets_once_then_decays_again() {
    for seed in 0..3 {
        let (resets, err) = monitor_shift_trial(2.5, 1.5, seed);
        assert_eq!(resets, 1);
        assert!(err <= 1e-12, "{err}");
        let (resets, _) = monitor_shift_trial(2.5, -1.5, seed);
        assert_eq!(resets, 1);
    }
}

#[test]
fn small_drift_never_resets() {
    assert_eq!(monitor_shift_trial(2.5, 0.2, 9).0, 0);
}

#[test]
fn congested_targets_are_the_reward() {
    for seed in 0..4 {
        assert!(batch_targets_match(seed));
    }
}

proptest! {
    #[test]
    fn priority_sum_tracks_stored_priorities(
        capacity in 1usize..40,
        ops in proptest::collection::vec((any::<bool>(), 0.0f64..10.0, any::<u16>()), 1..200),
    ) {
        let t = sample_transitions(1, 1).remove(0);
        let mut buf = ReplayBuffer::new(capacity);
        for (push, err, slot) in ops {
            let (_, p) = td_error_and_priority(0.0, err, PRIORITY_BETA);
            if push || buf.is_empty() {
                buf.push(t.clone(), p);
            } else {
                buf.set_priority(slot as usize % buf.len(), p);
            }
            prop_assert!(buf.len() <= capacity);
            let direct: f64 = (0..buf.len()).map(|s| buf.priority(s)).sum();
            prop_assert!((buf.priority_sum() - direct).abs() <= 1e-9);
            prop_assert!((0..buf.len()).all(|s| buf.priority(s) >= PRIORITY_BETA));
        }
    }

    #[test]
    fn epsilon_follows_the_closed_form(steps in 0u64..200_000) {
        let mut eps = EpsilonSchedule::new(1.0, 0.99995, 0.01);
        for _ in 0..steps {
            eps.decay();
        }
        let expected = (0.99995f64.ln() * steps as f64).exp().max(0.01);
        prop_assert!((eps.value() - expected).abs() <= 1e-12);
    }
}
