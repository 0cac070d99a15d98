mod common;

use common::{
    all_paths, enumerated_best, enumerated_forward, joint_probability, random_model, random_observations, rng,
    state_index, synthetic_log,
};
use proptest::prelude::*;
use rand::Rng;
use sparql_session::corpus::{ingest, preprocess, CorpusConfig, Session};
use sparql_session::intent::{
    markov_matrix, rc_segments, train_hmm, training_sequences, HmmModel, ObservationSymbol, RcState, TrainingSequence,
};
use sparql_session::reformulation::corpus_events;

use ObservationSymbol::*;
use RcState::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn forward_equals_enumeration(seed in any::<u64>(), len in 1usize..=5) {
        let mut r = rng(seed);
        let m = random_model(&mut r);
        let os = random_observations(&mut r, len);
        let want = enumerated_forward(&m, &os);
        let got = m.forward(&os).unwrap();
        prop_assert!(rel_close(got, want, 1e-9), "{} vs {}", got, want);
    }

    #[test]
    fn viterbi_path_is_an_enumerated_maximum(seed in any::<u64>(), len in 1usize..=5) {
        let mut r = rng(seed);
        let m = random_model(&mut r);
        let os = random_observations(&mut r, len);
        let d = m.decode(&os).unwrap();
        let best = enumerated_best(&m, &os);
        prop_assert!((d.probability - best).abs() <= 1e-12);
        let path: Vec<usize> = d.path.iter().map(|s| state_index(*s)).collect();
        prop_assert!((joint_probability(&m, &path, &os) - best).abs() <= 1e-12);
        prop_assert!(d.probability <= m.forward(&os).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn extensions_partition_probability(seed in any::<u64>(), len in 1usize..=6) {
        let mut r = rng(seed);
        let m = random_model(&mut r);
        let os = random_observations(&mut r, len);
        let p = m.forward(&os).unwrap();
        let mut total = 0.0;
        for u in ObservationSymbol::ALL {
            let mut ext = os.clone();
            ext.push(u);
            let q = m.forward(&ext).unwrap();
            prop_assert!(q <= p * (1.0 + 1e-12));
            total += q;
        }
        prop_assert!(rel_close(total, p, 1e-9));
    }

    #[test]
    fn suggestion_is_enumerated_predictive(seed in any::<u64>(), len in 0usize..=3) {
        let mut r = rng(seed);
        let m = random_model(&mut r);
        let os = random_observations(&mut r, len);
        let base = if os.is_empty() { 1.0 } else { enumerated_forward(&m, &os) };
        if base == 0.0 {
            prop_assert!(m.suggest(&os).is_err());
            return Ok(());
        }
        let s = m.suggest(&os).unwrap();
        prop_assert!((s.iter().map(|x| x.score).sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(s.windows(2).all(|w| w[0].score >= w[1].score));
        for x in &s {
            let mut ext = os.clone();
            ext.push(x.symbol);
            prop_assert!((x.score - enumerated_forward(&m, &ext) / base).abs() < 1e-9);
        }
    }

    #[test]
    fn smoothed_training_is_stochastic(seed in any::<u64>(), alpha in 0.01f64..3.0) {
        let mut r = rng(seed);
        let seqs: Vec<TrainingSequence> = (0..r.gen_range(1..6))
            .map(|_| {
                let n = r.gen_range(1..6);
                TrainingSequence {
                    states: (0..n).map(|_| RcState::ALL[r.gen_range(0..3)]).collect(),
                    observations: random_observations(&mut r, n),
                }
            })
            .collect();
        let m = train_hmm(&seqs, alpha).unwrap();
        let rows = std::iter::once(&m.pi).chain(&m.a).chain(&m.b);
        for row in rows {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x > 0.0 && x <= 1.0));
        }
    }
}

#[test]
fn hand_counted_training_fixture() {
    // ten pairs in three runs
    let seqs = [
        TrainingSequence {
            states: vec![Increase, Increase, Decrease, Unchanged],
            observations: vec![Add, Add, Remove, NoTripleChange],
        },
        TrainingSequence {
            states: vec![Increase, Decrease, Decrease],
            observations: vec![SubObject, Remove, SubPredicate],
        },
        TrainingSequence {
            states: vec![Unchanged, Unchanged, Increase],
            observations: vec![NoTripleChange, SubPredicate, Add],
        },
    ];
    let m = train_hmm(&seqs, 1.0).unwrap();
    assert_eq!(m.training_pairs, 10);
    // first states: +1, +1, 0 -> counts [0, 1, 2] over (-1, 0, +1)
    assert_eq!(m.pi, vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
    // bigrams: +1+1, +1-1, -10, +1-1, -1-1, 00, 0+1
    assert_eq!(m.a_counts, vec![vec![1, 1, 0], vec![0, 1, 1], vec![2, 0, 1]]);
    assert_eq!(m.a[0], vec![2.0 / 5.0, 2.0 / 5.0, 1.0 / 5.0]);
    assert_eq!(m.a[2], vec![3.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0]);
    // state -1 emitted Remove twice and SubPredicate once
    assert_eq!(m.b_counts[0], vec![0, 2, 0, 1, 0, 0, 0]);
    assert_eq!(m.b[0][1], 3.0 / 10.0);
    assert_eq!(m.b[0][0], 1.0 / 10.0);
}

#[test]
fn unsmoothed_training_reproduces_degenerate_emission() {
    let seqs = [TrainingSequence {
        states: vec![Increase, Increase],
        observations: vec![Add, Add],
    }];
    let m = train_hmm(&seqs, 0.0).unwrap();
    assert_eq!(m.b[2][Add.index()], 1.0);
    assert_eq!(m.a[2][2], 1.0);
}

#[test]
fn uniform_model_factorizes() {
    let m = HmmModel::new(
        vec![Add, Remove],
        vec![1.0 / 3.0; 3],
        vec![vec![1.0 / 3.0; 3]; 3],
        vec![vec![0.5; 2]; 3],
    )
    .unwrap();
    assert!((m.forward(&[Add, Remove]).unwrap() - 0.25).abs() < 1e-15);
    for s in m.suggest(&[Add]).unwrap() {
        assert!((s.score - 0.5).abs() < 1e-12);
    }
}

#[test]
fn equal_paths_resolve_to_lower_state() {
    // states 0 and 2 are interchangeable; state 1 never emits Add
    let m = HmmModel::new(
        vec![Add, Remove],
        vec![0.5, 0.0, 0.5],
        vec![vec![0.5, 0.0, 0.5], vec![1.0 / 3.0; 3], vec![0.5, 0.0, 0.5]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
    )
    .unwrap();
    let os = [Add, Add, Add];
    let best = enumerated_best(&m, &os);
    let ties = all_paths(3)
        .into_iter()
        .filter(|p| joint_probability(&m, p, &os) == best)
        .count();
    assert_eq!(ties, 8);
    assert_eq!(m.decode(&os).unwrap().path, vec![Decrease; 3]);
}

#[test]
fn bijective_emissions_are_mirrored() {
    let m = HmmModel::new(
        vec![Add, Remove, SubObject],
        vec![0.2, 0.3, 0.5],
        vec![vec![0.3, 0.3, 0.4], vec![0.1, 0.6, 0.3], vec![0.5, 0.25, 0.25]],
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    )
    .unwrap();
    let d = m.decode(&[SubObject, Add, Remove, Remove]).unwrap();
    assert_eq!(d.path, vec![Increase, Decrease, Unchanged, Unchanged]);
}

#[test]
fn forced_successor_scores_one() {
    let m = HmmModel::new(
        vec![Add, Remove],
        vec![1.0, 0.0, 0.0],
        vec![vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
    )
    .unwrap();
    let s = m.suggest(&[Add]).unwrap();
    assert_eq!((s[0].symbol, s[0].score), (Remove, 1.0));
}

#[test]
fn markov_matrix_equals_unsmoothed_transitions() {
    let log = synthetic_log(5, 1200);
    let pre = preprocess(&ingest(log.as_bytes()).unwrap(), &CorpusConfig::default()).unwrap();
    let events = corpus_events(&pre.sessions);
    let sessions: Vec<Session> = pre.sessions.iter().map(|s| s.session.clone()).collect();
    let segments: Vec<Vec<RcState>> = sessions.iter().flat_map(|s| rc_segments(&s.result_sizes())).collect();
    let markov = markov_matrix(&segments).unwrap();
    let hmm = train_hmm(&training_sequences(&sessions, &events), 0.0).unwrap();
    for i in 0..3 {
        assert_eq!(hmm.a_counts[i], markov.counts[i].to_vec());
        for j in 0..3 {
            let (num, den) = markov.ratio(RcState::ALL[i], RcState::ALL[j]);
            if den > 0 {
                assert_eq!(hmm.a[i][j], num as f64 / den as f64);
                assert_eq!(Some(hmm.a[i][j]), markov.probabilities[i][j]);
            }
        }
    }
}
