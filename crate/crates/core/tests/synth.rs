use zsdiag_core::corpus::{split_per_student, DEFAULT_SPLIT};
use zsdiag_core::metrics::{doa, DoaOptions};
use zsdiag_core::synth::{generate, oracle_auc_bound, SynthConfig};

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        n_domains: 2,
        n_students: 400,
        n_exercises: 60,
        n_concepts: 6,
        responses_per_student: 25,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn responses_follow_their_true_probabilities() {
    let cfg = small(3);
    let (domains, gt) = generate(&cfg).unwrap();
    let (d, t) = (&domains[0], &gt.domains[0]);
    assert_eq!(d.records().len(), 10_000);
    // per probability band: observed successes within 3 sigma of the expected count
    let mut bands = [(0.0f64, 0.0f64, 0usize); 4];
    for r in d.records() {
        let s = t.students.iter().position(|x| x.id == r.student_id).unwrap();
        let e = t.exercises.iter().position(|x| x.id == r.exercise_id).unwrap();
        let p = gt.probability(t, s, e);
        let band = &mut bands[((p * 4.0) as usize).min(3)];
        band.0 += p;
        band.1 += p * (1.0 - p);
        band.2 += r.score as usize;
    }
    for (i, (expected, var, observed)) in bands.iter().enumerate() {
        if *var > 0.0 {
            let z = (*observed as f64 - expected) / var.sqrt();
            assert!(z.abs() < 3.0, "band {i}: z = {z}");
        }
    }
}

#[test]
fn pure_noise_bounds_auc_at_one_half() {
    let cfg = SynthConfig { guess: 0.5, slip: 0.5, ..small(4) };
    let (domains, gt) = generate(&cfg).unwrap();
    let bound = oracle_auc_bound(&gt, &gt.domains[0], domains[0].records()).unwrap();
    assert!((bound - 0.5).abs() < 0.03, "bound {bound}");
}

#[test]
fn near_deterministic_responses_bound_auc_near_one() {
    let cfg = SynthConfig {
        guess: 0.0,
        slip: 0.0,
        discrimination: (80.0, 100.0),
        ..small(5)
    };
    let (domains, gt) = generate(&cfg).unwrap();
    let bound = oracle_auc_bound(&gt, &gt.domains[0], domains[0].records()).unwrap();
    assert!(bound > 0.98, "bound {bound}");
}

#[test]
fn default_world_is_learnable() {
    let cfg = SynthConfig::default();
    let (domains, gt) = generate(&cfg).unwrap();
    for (d, t) in domains.iter().zip(&gt.domains) {
        let split = split_per_student(d, DEFAULT_SPLIT, 7).unwrap();
        let bound = oracle_auc_bound(&gt, t, &split.test).unwrap();
        assert!(bound > 0.75 && bound < 1.0, "{}: bound {bound}", d.name);
        let obs: Vec<_> = d.records().iter().map(|r| d.observe(r)).collect();
        let v = doa(&t.mastery(d), &obs, d.q_rows(), DoaOptions::default()).unwrap().doa;
        assert!(v > 0.7, "{}: true-mastery DOA {v}", d.name);
    }
}

#[test]
fn same_seed_same_world() {
    let (a, ga) = generate(&small(8)).unwrap();
    let (b, gb) = generate(&small(8)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ga, gb);
    let (c, _) = generate(&small(9)).unwrap();
    assert_ne!(a, c);
}
