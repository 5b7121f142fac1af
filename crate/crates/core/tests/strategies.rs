use sersynth::corpus::{generate_blob, make_folds, BlobConfig, Corpus, Domain, Utterance};
use sersynth::metrics::aggregate_folds;
use sersynth::model::{AdamW, AdamWConfig, DomainHead, ReprMode, SerModel};
use sersynth::seed;
use sersynth::strategies::{
    active_count, adversarial_batches, curriculum_chunks, domain_fuser_gradient, prepare_fold,
    run_experiment, step_domain, step_reversal, train_transfer, FoldData, Strategy, TrainPlan,
};

fn corpus(n_synthetic: usize, shift: f64) -> Corpus {
    Corpus::from_utterances(
        generate_blob(&BlobConfig {
            n_synthetic,
            domain_shift: shift,
            ..BlobConfig::default()
        })
        .unwrap(),
    )
    .unwrap()
}

fn plan(strategy: Strategy) -> TrainPlan {
    TrainPlan {
        strategy,
        epochs: 30,
        batch_size: 16,
        seed: 42,
        ..TrainPlan::default()
    }
}

fn first_fold<'a>(c: &'a Corpus, p: &TrainPlan) -> FoldData<'a> {
    let splits = make_folds(&c.real_records(), p.seed).unwrap();
    prepare_fold(c, &splits[0], p).unwrap()
}

fn mean_wa(c: &Corpus, p: &TrainPlan) -> f64 {
    let results: Vec<_> = run_experiment(c, p, 1)
        .unwrap()
        .into_iter()
        .map(|r| r.result)
        .collect();
    aggregate_folds(&results, 5).unwrap().mean_wa
}

#[test]
fn adversarial_steps_touch_disjoint_parameters() {
    let c = corpus(50, 3.0);
    let p = TrainPlan {
        repr_mode: ReprMode::WeightedLayers,
        ..plan(Strategy::Adversarial)
    };
    let fold = first_fold(&c, &p);
    let synth: Vec<&Utterance> = c.synthetic.iter().collect();
    let mut rng = seed::rng(5);
    let batch = adversarial_batches(&fold.train, &synth, 16, &mut rng).remove(0);
    assert!(batch.iter().any(|u| u.record.domain == Domain::Real));
    assert!(batch.iter().any(|u| u.record.domain == Domain::Synthetic));

    let (layers, dims) = c.feature_shape().unwrap();
    let dims = sersynth::model::ModelDims {
        layers,
        dims,
        hidden: 16,
        classes: 4,
    };
    let mut init = seed::rng(6);
    let mut model = SerModel::new(dims, p.repr_mode, &mut init);
    let mut head = DomainHead::new(16, &mut init);
    let mut opt_d = AdamW::new(AdamWConfig::default());
    let mut opt_r = AdamW::new(AdamWConfig::default());

    let model_before = model.clone();
    let head_before = head.snapshot();
    step_domain(&model, &mut head, &mut opt_d, &batch).unwrap();
    assert_eq!(model, model_before, "step 2 changed the SER model");
    assert_ne!(head.snapshot(), head_before);

    let head_mid = head.clone();
    let head_before = head.snapshot();
    let lambda = 0.37;
    let expected_unreversed = domain_fuser_gradient(&model, &head, &batch).unwrap();
    let head_only = model.head_snapshot();
    let g = step_reversal(&mut model, &head, &mut opt_r, &batch, lambda).unwrap();
    assert_eq!(
        head.snapshot(),
        head_before,
        "step 3 changed the domain head"
    );
    assert_eq!(head, head_mid);
    assert_eq!(
        model.head_snapshot(),
        head_only,
        "step 3 changed the SER head"
    );
    assert_ne!(model.fuser_snapshot(), model_before.fuser_snapshot());
    assert_eq!(g.unreversed, expected_unreversed);
    for (a, u) in g.applied.flatten().iter().zip(g.unreversed.flatten()) {
        assert_eq!(*a, -lambda * u);
    }
}

#[test]
fn adversarial_batches_mix_proportionally() {
    let c = corpus(50, 3.0);
    let real: Vec<&Utterance> = c.real.iter().take(64).collect();
    let synth: Vec<&Utterance> = c.synthetic.iter().take(32).collect();
    let batches = adversarial_batches(&real, &synth, 16, &mut seed::rng(1));
    assert_eq!(batches.len(), 6);
    for b in &batches {
        let n_real = b.iter().filter(|u| u.record.domain == Domain::Real).count();
        assert!((10..=11).contains(&n_real), "{n_real}");
        assert!((5..=6).contains(&(b.len() - n_real)));
    }
    assert_eq!(batches.iter().map(Vec::len).sum::<usize>(), 96);
}

#[test]
fn every_strategy_is_reproducible() {
    let c = corpus(50, 3.0);
    for s in Strategy::ALL {
        let p = TrainPlan {
            epochs: 8,
            curriculum_interval: 1,
            ..plan(s)
        };
        let a = run_experiment(&c, &p, 1).unwrap();
        let b = run_experiment(&c, &p, 3).unwrap();
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.outcome.model, y.outcome.model, "{s}");
            assert_eq!(x.outcome.logs, y.outcome.logs, "{s}");
            assert_eq!(x.synthetic_ids, y.synthetic_ids, "{s}");
        }
    }
}

#[test]
fn epoch_accounting() {
    let c = corpus(50, 3.0);
    let p = TrainPlan {
        epochs: 3,
        ..plan(Strategy::RandomMix)
    };
    for run in run_experiment(&c, &p, 1).unwrap() {
        let n_train = run.split.train_ids.len();
        assert_eq!(
            run.synthetic_ids.len(),
            (n_train as f64 * 0.5).round() as usize
        );
        assert!(run
            .outcome
            .logs
            .iter()
            .all(|l| l.active_synth == run.synthetic_ids.len()));
        assert_eq!(
            run.outcome.selected_epoch, 3,
            "random mix keeps the last epoch"
        );
    }
    let base = TrainPlan {
        epochs: 3,
        ..plan(Strategy::Baseline)
    };
    for run in run_experiment(&c, &base, 1).unwrap() {
        assert!(run.synthetic_ids.is_empty());
        assert!(run.outcome.logs.iter().all(|l| l.active_synth == 0));
    }
}

#[test]
fn curriculum_chunks_are_sorted_and_monotone() {
    let c = corpus(50, 3.0);
    let synth: Vec<&Utterance> = c.synthetic.iter().collect();
    let chunks = curriculum_chunks(&synth, 5);
    assert_eq!(chunks.iter().map(Vec::len).collect::<Vec<_>>(), vec![10; 5]);
    for w in chunks.windows(2) {
        let max_prev = w[0]
            .iter()
            .map(|u| u.record.duration_s)
            .fold(f64::MIN, f64::max);
        let min_next = w[1]
            .iter()
            .map(|u| u.record.duration_s)
            .fold(f64::MAX, f64::min);
        assert!(max_prev <= min_next);
    }
    let sizes: Vec<usize> = chunks.iter().map(Vec::len).collect();
    let counts: Vec<usize> = (0..50).map(|e| active_count(&sizes, 5, e)).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    assert!(counts[20..].iter().all(|&n| n == 50));

    let p = plan(Strategy::Curriculum);
    let runs = run_experiment(&c, &p, 1).unwrap();
    let logs = &runs[0].outcome.logs;
    let n = runs[0].synthetic_ids.len();
    assert_eq!(logs.last().unwrap().active_synth, n);
    assert!(logs
        .windows(2)
        .all(|w| w[0].active_synth <= w[1].active_synth));
}

#[test]
fn transfer_phase_two_starts_from_phase_one() {
    let c = corpus(50, 3.0);
    let p = TrainPlan {
        epochs: 4,
        transfer_phase1_epochs: Some(3),
        ..plan(Strategy::Transfer)
    };
    let fold = first_fold(&c, &p);
    let synth: Vec<&Utterance> = c.synthetic.iter().take(32).collect();
    let out = train_transfer(&fold, &synth, &p).unwrap();
    assert_eq!(out.logs.len(), 7);
    assert_eq!(out.selected_epoch, 7);
    assert!(out.logs[..3].iter().all(|l| l.active_synth == 32));
    assert!(out.logs[3..].iter().all(|l| l.active_synth == 0));
}

#[test]
fn baseline_fits_the_blob_corpus() {
    let c = corpus(50, 3.0);
    let p = TrainPlan {
        epochs: 50,
        ..plan(Strategy::Baseline)
    };
    for run in run_experiment(&c, &p, 1).unwrap() {
        let last = run.outcome.logs.last().unwrap();
        assert!(
            last.train_loss < 0.1,
            "fold {}: loss {}",
            run.result.fold,
            last.train_loss
        );
    }
}

#[test]
fn unshifted_synthetic_data_does_not_hurt() {
    let c = corpus(50, 0.0);
    let base = mean_wa(&c, &plan(Strategy::Baseline));
    let mixed = mean_wa(&c, &plan(Strategy::RandomMix));
    assert!(
        mixed >= base - 0.01,
        "random mix {mixed} vs baseline {base}"
    );
}

#[test]
fn transfer_matches_random_mix_under_moderate_shift() {
    let c = corpus(50, 3.0);
    let mixed = mean_wa(&c, &plan(Strategy::RandomMix));
    let transfer = mean_wa(&c, &plan(Strategy::Transfer));
    assert!(
        transfer >= mixed,
        "transfer {transfer} vs random mix {mixed}"
    );
}
