use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsh::classify::{ClassifierKind, FeatureMask, FeatureTable};
use rsh::cleanse::{zscore_apply, zscore_fit, NormalizationParams};
use rsh::ensemble::{local_boost, select_features, train_rsh, BoostConfig, RshModel};
use rsh::featsel::GaConfig;
use rsh::tabular::{Attribute, Cell, Dataset, Record, Schema};
use rsh::RshConfig;

/// Class decided by x0, three noise columns, a sprinkling of missing cells.
fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attrs: Vec<Attribute> = (0..4)
        .map(|c| Attribute::numeric(format!("x{c}")))
        .collect();
    attrs.push(Attribute::categorical("y"));
    let schema = Schema::new(attrs, 4, vec!["neg".into(), "pos".into()]).unwrap();
    let records = (0..n)
        .map(|i| {
            let pos = i % 2 == 1;
            let mut cells: Vec<Cell> = vec![Cell::Num(
                if pos { 6.0 } else { 2.0 } + rng.random_range(-1.5..1.5),
            )];
            for _ in 1..4 {
                cells.push(Cell::Num(rng.random_range(0.0..10.0)));
            }
            if i % 17 == 3 {
                cells[2] = Cell::Missing;
            }
            cells.push(Cell::text(if pos { "pos" } else { "neg" }));
            Record::new(cells)
        })
        .collect();
    Dataset::new(schema, records).unwrap()
}

fn light() -> RshConfig {
    RshConfig {
        ga: GaConfig {
            population_size: 12,
            generations: 4,
            ..GaConfig::default()
        },
        ..RshConfig::default()
    }
}

fn cleansed_records(model: &RshModel, raw: &Dataset) -> Vec<Record> {
    model
        .training_records
        .iter()
        .map(|&i| {
            rsh::cleanse::repair_record(
                &raw.records[i],
                raw,
                &model.rules,
                &model.config.correction,
            )
        })
        .collect()
}

#[test]
fn training_predictions_replay() {
    let raw = synthetic(90, 1);
    let model = train_rsh(&raw, &light(), 5).unwrap();
    assert!(model.training_records.len() >= 80);
    let records = cleansed_records(&model, &raw);
    let replayed: Vec<usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| model.predict_at(r, i).unwrap())
        .collect();
    assert_eq!(replayed, model.training_predictions);

    let back = RshModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
    let raw_path: Vec<usize> = model
        .training_records
        .iter()
        .map(|&i| back.predict_raw(&raw.records[i], i).unwrap())
        .collect();
    assert_eq!(raw_path, model.training_predictions);
}

#[test]
fn training_is_seed_deterministic_and_thread_invariant() {
    let raw = synthetic(70, 2);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| train_rsh(&raw, &light(), 11).unwrap().to_json().unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(4));
}

#[test]
fn selection_alone_matches_training() {
    let raw = synthetic(70, 3);
    let model = train_rsh(&raw, &light(), 9).unwrap();
    let alone = select_features(&raw, &light(), 9).unwrap();
    for ((kind, outcome), report) in alone.iter().zip(&model.selection) {
        assert_eq!(*kind, report.kind);
        assert_eq!(outcome, &report.selection);
    }
    // the signal column should win for most kinds
    let with_x0 = alone.iter().filter(|(_, o)| o.mask.get(0)).count();
    assert!(with_x0 >= 4, "{with_x0}");
}

#[test]
fn a_single_round_member_is_its_first_model() {
    let raw = synthetic(60, 4);
    let params = zscore_fit(
        &raw.with_records(
            raw.records
                .iter()
                .filter(|r| r.missing_count() == 0)
                .cloned()
                .collect(),
        ),
    )
    .unwrap();
    let complete = raw.with_records(
        raw.records
            .iter()
            .filter(|r| r.missing_count() == 0)
            .cloned()
            .collect(),
    );
    let table = FeatureTable::from_dataset(&zscore_apply(&complete, &params)).unwrap();
    let mask = FeatureMask::only(4, &[0, 3]).unwrap();
    for kind in ClassifierKind::ALL {
        let cfg = RshConfig::default().classifiers.config(kind);
        let identity = NormalizationParams::identity();
        let (member, trace) = local_boost(
            &cfg,
            &table,
            &mask,
            &identity,
            1,
            &BoostConfig::default(),
            3,
        )
        .unwrap();
        assert_eq!(member.rounds.len(), 1);
        assert_eq!(trace.weights.len(), 2);
        // uniform starting weights
        assert!(trace.weights[0]
            .iter()
            .all(|&w| w == 1.0 / table.len() as f64));
        let wrong = trace.misclassified[0].iter().filter(|&&w| w).count();
        assert_eq!(
            member.rounds[0].rank,
            (table.len() - wrong) as f64 / table.len() as f64
        );

        let normalized = zscore_apply(&complete, &params);
        for (i, r) in normalized.records.iter().enumerate() {
            let votes = member.round_votes(r, i).unwrap();
            assert_eq!(member.predict_at(r, i).unwrap(), votes[0]);
        }
    }
}
