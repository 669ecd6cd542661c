use ndpnn_core::engine::gradcheck::{check_layer, random_case};
use ndpnn_core::engine::{
    softmax, train, Activation, Architecture, Dense, Layer, ModelSpec, PolyConvLayer, Sample,
    TrainConfig,
};
use ndpnn_core::{Error, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn layer_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rank in 1..=3 {
        for degree in 1..=7 {
            for act in [Activation::Relu, Activation::Identity] {
                for _ in 0..3 {
                    let (l, x, g) = random_case::<f32, _>(&mut rng, rank, degree, act).unwrap();
                    let e32 = check_layer(&l, &x, &g).unwrap().max_error();
                    assert!(e32 < 1e-4, "f32 rank {rank} degree {degree}: {e32}");
                    let e64 = check_layer(&l.cast::<f64>(), &x.cast(), &g.cast())
                        .unwrap()
                        .max_error();
                    assert!(e64 < 1e-6, "f64 rank {rank} degree {degree}: {e64}");
                }
            }
        }
    }
}

/// Direct nested-loop convolution layer over 3D-lifted f64 data, with its
/// hand-derived gradients. Returns (output, dW, db, dx) for upstream `g`.
fn reference_conv(
    x: &[f64],
    xs: [usize; 4],
    w: &[f64],
    ks: [usize; 5],
    b: &[f64],
    g: Option<&[f64]>,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let [ci, a, bb, c] = xs;
    let [co, _, ka, kb, kc] = ks;
    let (oa, ob, oc) = (a - ka + 1, bb - kb + 1, c - kc + 1);
    let xi = |ch: usize, i: usize, j: usize, k: usize| ((ch * a + i) * bb + j) * c + k;
    let wi = |o: usize, ch: usize, i: usize, j: usize, k: usize| {
        (((o * ci + ch) * ka + i) * kb + j) * kc + k
    };
    let yi = |o: usize, i: usize, j: usize, k: usize| ((o * oa + i) * ob + j) * oc + k;
    let mut y = vec![0.0; co * oa * ob * oc];
    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; co];
    let mut dx = vec![0.0; x.len()];
    for o in 0..co {
        for i in 0..oa {
            for j in 0..ob {
                for k in 0..oc {
                    let mut s = b[o];
                    let gv = g.map_or(0.0, |g| g[yi(o, i, j, k)]);
                    db[o] += gv;
                    for ch in 0..ci {
                        for p in 0..ka {
                            for q in 0..kb {
                                for r in 0..kc {
                                    let xv = x[xi(ch, i + p, j + q, k + r)];
                                    let wv = w[wi(o, ch, p, q, r)];
                                    s += wv * xv;
                                    dw[wi(o, ch, p, q, r)] += gv * xv;
                                    dx[xi(ch, i + p, j + q, k + r)] += gv * wv;
                                }
                            }
                        }
                    }
                    y[yi(o, i, j, k)] = s;
                }
            }
        }
    }
    (y, dw, db, dx)
}

fn lift<const N: usize>(s: &[usize], lead: usize) -> [usize; N] {
    let mut out = [1usize; N];
    out[..lead].copy_from_slice(&s[..lead]);
    let spatial = &s[lead..];
    out[N - spatial.len()..].copy_from_slice(spatial);
    out
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

#[test]
fn degree_one_matches_standard_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for rank in 1..=3 {
        for _ in 0..10 {
            let (l, x, g) = random_case::<f32, _>(&mut rng, rank, 1, Activation::Identity).unwrap();
            let xs = lift::<4>(x.shape(), 1);
            let ks = lift::<5>(l.weights[0].shape(), 2);
            let x64: Vec<f64> = x.data().iter().map(|&v| v as f64).collect();
            let w64: Vec<f64> = l.weights[0].data().iter().map(|&v| v as f64).collect();
            let b64: Vec<f64> = l.bias.iter().map(|&v| v as f64).collect();
            let g64: Vec<f64> = g.data().iter().map(|&v| v as f64).collect();
            let (y, dw, db, dx) = reference_conv(&x64, xs, &w64, ks, &b64, Some(&g64));
            let as64 = |t: &[f32]| t.iter().map(|&v| v as f64).collect::<Vec<_>>();
            let out = l.forward(&x).unwrap();
            assert!(max_rel(&as64(out.data()), &y) < 1e-6);
            let gr = l.backward(&x, &g).unwrap();
            assert!(max_rel(&as64(gr.weights[0].data()), &dw) < 1e-6);
            assert!(max_rel(&as64(&gr.bias), &db) < 1e-6);
            assert!(max_rel(&as64(gr.input.data()), &dx) < 1e-6);
        }
    }
}

fn model_loss(m: &ModelSpec<f64>, x: &Tensor<f64>, label: usize) -> f64 {
    -m.forward_sample(x).unwrap()[label].ln()
}

#[test]
fn model_gradients_match_finite_differences() {
    let arch = Architecture {
        rank: 2,
        conv_channels: vec![2, 3],
        degree: 3,
        kernel: 2,
        pool: vec![2, 1],
        dense_hidden: vec![4],
    };
    let mut m: ModelSpec<f64> = arch
        .build(&[1, 9, 6], 3, Some(&[0.2, 0.3, 0.5]), 9)
        .unwrap()
        .cast();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Tensor::new(
        vec![1, 9, 6],
        (0..54).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let (_, grads) = m.loss_and_grads(&x, 1).unwrap();
    let h = 1e-6;
    let blocks = m.params().len();
    for b in 0..blocks {
        let len = m.params()[b].len();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..len {
            let at = m.params()[b][i];
            m.params_mut()[b][i] = at + h;
            let up = model_loss(&m, &x, 1);
            m.params_mut()[b][i] = at - h;
            let down = model_loss(&m, &x, 1);
            m.params_mut()[b][i] = at;
            let n = (up - down) / (2.0 * h);
            worst = worst.max((grads[b][i] - n).abs());
            scale = scale.max(n.abs());
        }
        assert!(
            worst <= 1e-6 * scale.max(1e-3),
            "block {b}: {worst} vs {scale}"
        );
    }
}

#[test]
fn prior_bias_propagates_through_zero_weights() {
    let p = [0.1, 0.6, 0.3];
    let mut head = Dense::<f64>::zeros(4, 3, Activation::Softmax).unwrap();
    head.bias = ndpnn_core::engine::init_output_bias(&p).unwrap();
    let m = ModelSpec::new(vec![Layer::Flatten, Layer::Dense(head)], 3, vec![2, 2], 0).unwrap();
    let batch: Vec<Tensor<f64>> = (0..3)
        .map(|i| Tensor::full(&[2, 2], i as f64).unwrap())
        .collect();
    let probs = m.forward_network(&batch).unwrap();
    for row in probs.data().chunks(3) {
        for (a, b) in row.iter().zip(p) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn probability_rows_sum_to_one(seed in any::<u64>(), scale in 0.1f32..50.0) {
        let m = Architecture::desk(1).build(&[2, 16], 4, None, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch: Vec<Tensor<f32>> = (0..3)
            .map(|_| Tensor::new(vec![2, 16], (0..32).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap())
            .collect();
        let p = m.forward_network(&batch).unwrap();
        for row in p.data().chunks(4) {
            prop_assert!((row.iter().sum::<f32>() - 1.0).abs() <= 1e-6);
        }
    }
}

fn toy_set(n: usize, seed: u64) -> Vec<Sample<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let level = if label == 0 { -1.0 } else { 1.0 };
            let data = (0..8).map(|_| level + rng.gen_range(-0.1..0.1)).collect();
            Sample {
                input: Tensor::new(vec![1, 8], data).unwrap(),
                label,
            }
        })
        .collect()
}

fn toy_model() -> ModelSpec<f32> {
    let arch = Architecture {
        rank: 1,
        conv_channels: vec![2],
        degree: 2,
        kernel: 3,
        pool: Vec::new(),
        dense_hidden: Vec::new(),
    };
    arch.build(&[1, 8], 2, Some(&[0.5, 0.5]), 3).unwrap()
}

fn toy_config(lr: f64) -> TrainConfig {
    TrainConfig {
        learning_rate: lr,
        batch_size: 8,
        epochs: 20,
        seed: 4,
        ..TrainConfig::default()
    }
}

#[test]
fn toy_training_converges_monotonically() {
    let data = toy_set(64, 1);
    let (_, logs) = train(&toy_model(), &data, &[], &toy_config(1e-2), |_| {}).unwrap();
    assert_eq!(logs.len(), 20);
    assert!(logs.last().unwrap().train_acc >= 0.99);
    for w in logs.windows(2) {
        assert!(
            w[1].loss <= w[0].loss,
            "loss rose: {} -> {}",
            w[0].loss,
            w[1].loss
        );
    }
}

#[test]
fn zero_learning_rate_freezes_weights() {
    let data = toy_set(16, 2);
    let m = toy_model();
    let (trained, _) = train(
        &m,
        &data,
        &[],
        &TrainConfig {
            epochs: 3,
            ..toy_config(0.0)
        },
        |_| {},
    )
    .unwrap();
    let bits = |m: &ModelSpec<f32>| -> Vec<u32> {
        m.params().concat().iter().map(|v| v.to_bits()).collect()
    };
    assert_eq!(bits(&trained), bits(&m));
}

#[test]
fn training_is_deterministic() {
    let data = toy_set(32, 3);
    let cfg = TrainConfig {
        epochs: 4,
        ..toy_config(1e-2)
    };
    let a = train(&toy_model(), &data, &data[..8], &cfg, |_| {}).unwrap();
    let b = train(&toy_model(), &data, &data[..8], &cfg, |_| {}).unwrap();
    assert_eq!(a.1, b.1);
    assert_eq!(a.0, b.0);
    assert!(a.1[0].to_string().split(", ").count() == 4);
}

#[test]
fn divergence_and_bad_configs() {
    let data = toy_set(8, 4);
    let mut m = toy_model();
    if let Layer::PolyConv(l) = &mut m.layers[0] {
        l.weights[1].data_mut()[0] = f32::NAN;
    }
    assert!(matches!(
        train(&m, &data, &[], &toy_config(1e-2), |_| {}),
        Err(Error::TrainingDiverged { .. })
    ));
    let cfg = TrainConfig {
        batch_size: 9,
        ..toy_config(1e-2)
    };
    assert!(matches!(
        train(&toy_model(), &data, &[], &cfg, |_| {}),
        Err(Error::InvalidArgument(_))
    ));
    let bad = vec![Sample {
        input: Tensor::zeros(&[1, 8]).unwrap(),
        label: 2,
    }];
    let cfg = TrainConfig {
        batch_size: 1,
        ..toy_config(1e-2)
    };
    assert!(train(&toy_model(), &bad, &[], &cfg, |_| {}).is_err());
}

#[test]
fn softmax_is_shift_invariant() {
    let a = softmax(&[1.0f64, 2.0, 3.0]);
    let b = softmax(&[101.0f64, 102.0, 103.0]);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-15);
    }
    let _ = PolyConvLayer::<f32>::zeros(1, &[1], 1, 1, 1, Activation::Relu).unwrap();
}
