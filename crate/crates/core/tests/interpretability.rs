use robin_core::data::{label_encode, synth_generate, GeneratorConfig, SynthOptions};
use robin_core::interpret::{attention_heatmap, export_representations, global_importance};
use robin_core::training::train;
use robin_core::{Dataset, Model, ModelConfig, Schema, TrainConfig, Variant};

fn normalized(seed: u64, n: usize) -> Dataset {
    let schema = Schema::clinical();
    let opts = SynthOptions::new(seed, n).with_missing_rate(0.1);
    label_encode(&synth_generate(&opts, &schema).unwrap(), &schema)
        .unwrap()
        .normalize()
        .unwrap()
}

fn fit(variant: Variant, ds: &Dataset, seed: u64, epochs: usize) -> Model {
    let cfg = ModelConfig::new(variant, ds.n_features())
        .with_widths(&[32, 16])
        .with_seed(seed);
    let t = TrainConfig {
        epochs,
        learning_rate: 1e-3,
        seed,
        ..TrainConfig::default()
    };
    train(Model::build(cfg).unwrap(), ds, &t).unwrap()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn planted_attributes_rank_above_the_rest() {
    let planted = GeneratorConfig::bundled()
        .planted_names()
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>();
    let mut planted_ranks = Vec::new();
    let mut other_ranks = Vec::new();
    for seed in 0..10 {
        let ds = normalized(seed, 151);
        let importance = global_importance(&fit(Variant::Robin, &ds, seed, 100)).unwrap();
        for name in &importance.attributes {
            let rank = importance.rank_of(name).unwrap() as f64;
            if planted.contains(name) {
                planted_ranks.push(rank);
            } else {
                other_ranks.push(rank);
            }
        }
    }
    // rank 0 is the most important attribute
    let (p, o) = (mean(&planted_ranks), mean(&other_ranks));
    assert!(p < o, "planted mean rank {p:.2} vs others {o:.2}");
}

#[test]
fn robin_loss_tail_is_steadier_than_sann() {
    let ds = normalized(3, 151);
    let variance = |v| {
        let log = fit(v, &ds, 3, 300).train_log;
        let tail = &log[log.len() - 100..];
        let m = mean(tail);
        tail.iter().map(|l| (l - m).powi(2)).sum::<f64>() / tail.len() as f64
    };
    let (robin, sann) = (variance(Variant::Robin), variance(Variant::Sann));
    assert!(robin < sann, "robin {robin:.3e} vs sann {sann:.3e}");
}

#[test]
fn representations_separate_the_classes() {
    let ds = normalized(5, 151);
    let model = fit(Variant::Robin, &ds, 5, 100);
    let reps = export_representations(&model, &ds.features).unwrap();
    assert_eq!(reps.rows(), ds.len());
    let centroid = |class: u8| {
        let rows: Vec<&[f64]> = reps
            .iter_rows()
            .zip(&ds.labels)
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r)
            .collect();
        let mut c = vec![0.0; reps.cols()];
        for r in &rows {
            for (ci, v) in c.iter_mut().zip(r.iter()) {
                *ci += v / rows.len() as f64;
            }
        }
        (c, rows)
    };
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let (c0, r0) = centroid(0);
    let (c1, r1) = centroid(1);
    let spread = |c: &[f64], rows: &[&[f64]]| mean(&rows.iter().map(|r| dist(r, c)).collect::<Vec<_>>());
    let between = dist(&c0, &c1);
    let within = (spread(&c0, &r0) + spread(&c1, &r1)) / 2.0;
    assert!(between > within, "between {between:.4} vs within {within:.4}");
}

#[test]
fn heatmaps_vary_while_importance_stays_fixed() {
    let ds = normalized(6, 60);
    let model = fit(Variant::Robin, &ds, 6, 30);
    let before = global_importance(&model).unwrap();
    let maps: Vec<_> = (0..ds.len())
        .map(|i| attention_heatmap(&model, ds.features.row(i), i).unwrap())
        .collect();
    let differing = maps.windows(2).any(|w| w[0].weights != w[1].weights);
    assert!(differing);
    assert_eq!(global_importance(&model).unwrap(), before);
}
