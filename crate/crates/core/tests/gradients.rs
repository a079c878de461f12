use camu::nn::{
    cross_entropy, kl_divergence, log_softmax, softmax, Activation, Architecture, Dense, Model, Sgd,
    Upstream,
};
use camu::Tensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng) -> Model {
    let input_dim = rng.random_range(2..6);
    let extractor = (0..rng.random_range(1..3)).map(|_| rng.random_range(2..6)).collect();
    let head = (0..rng.random_range(0..2)).map(|_| rng.random_range(2..6)).collect();
    let arch = Architecture {
        input_dim,
        extractor,
        head,
        num_classes: rng.random_range(2..5),
    };
    let mut model = Model::init(&arch, rng.random()).unwrap();
    // non-zero biases so every parameter is exercised
    let params: Vec<f64> = model
        .parameters()
        .iter()
        .map(|p| p + rng.random_range(-0.1..0.1))
        .collect();
    model.set_parameters(&params).unwrap();
    model
}

/// `‖a − n‖ / (‖a‖ + ‖n‖)`, zero when both vanish.
fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    let denom = norm(analytic) + norm(numeric);
    if denom < 1e-12 {
        0.0
    } else {
        norm(&diff) / denom
    }
}

fn numeric_gradient(model: &Model, loss: impl Fn(&Model) -> f64) -> Vec<f64> {
    let base = model.parameters();
    let mut probe = model.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + H;
            probe.set_parameters(&p).unwrap();
            let up = loss(&probe);
            p[i] = base[i] - H;
            probe.set_parameters(&p).unwrap();
            let down = loss(&probe);
            (up - down) / (2.0 * H)
        })
        .collect()
}

#[test]
fn cross_entropy_gradients_match_finite_differences() {
    for seed in 0..120 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng);
        let batch = rng.random_range(1..5);
        let x = random_tensor(&mut rng, batch, model.input_dim());
        let y: Vec<usize> = (0..batch).map(|_| rng.random_range(0..model.num_classes())).collect();

        let trace = model.forward(&x).unwrap();
        let ce = cross_entropy(&trace.logits, &y).unwrap();
        let analytic = model.backward(&trace, &Upstream::logits(ce.grad)).unwrap().flatten();
        let numeric = numeric_gradient(&model, |m| cross_entropy(&m.predict(&x).unwrap(), &y).unwrap().loss);
        let err = relative_error(&analytic, &numeric);
        assert!(err < TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn kl_gradients_through_both_arguments_match_finite_differences() {
    for seed in 0..120 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let model = random_model(&mut rng);
        let batch = rng.random_range(1..5);
        let a = random_tensor(&mut rng, batch, model.input_dim());
        let b = random_tensor(&mut rng, batch, model.input_dim());

        let ta = model.forward(&a).unwrap();
        let tb = model.forward(&b).unwrap();
        let kl = kl_divergence(&ta.representation, &tb.representation).unwrap();
        let mut analytic = model
            .backward(&ta, &Upstream::representation(kl.grad_p))
            .unwrap()
            .flatten();
        let from_q = model
            .backward(&tb, &Upstream::representation(kl.grad_q))
            .unwrap()
            .flatten();
        for (g, q) in analytic.iter_mut().zip(from_q) {
            *g += q;
        }
        let numeric = numeric_gradient(&model, |m| {
            kl_divergence(&m.representation(&a).unwrap(), &m.representation(&b).unwrap())
                .unwrap()
                .loss
        });
        let err = relative_error(&analytic, &numeric);
        assert!(err < TOL, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn kl_gradients_with_respect_to_logits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (rows, cols) = (rng.random_range(1..4), rng.random_range(2..6));
        let p = random_tensor(&mut rng, rows, cols).scale(3.0);
        let q = random_tensor(&mut rng, rows, cols).scale(3.0);
        let out = kl_divergence(&p, &q).unwrap();
        for (which, analytic) in [(0, &out.grad_p), (1, &out.grad_q)] {
            let numeric: Vec<f64> = (0..rows * cols)
                .map(|i| {
                    let shifted = |delta: f64| {
                        let (mut p2, mut q2) = (p.clone(), q.clone());
                        let t = if which == 0 { &mut p2 } else { &mut q2 };
                        t.as_mut_slice()[i] += delta;
                        kl_divergence(&p2, &q2).unwrap().loss
                    };
                    (shifted(H) - shifted(-H)) / (2.0 * H)
                })
                .collect();
            assert!(relative_error(analytic.as_slice(), &numeric) < TOL);
        }
    }
}

/// Forward pass written out with explicit loops.
fn naive_forward(model: &Model, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dense = |layer: &Dense, input: &[f64]| -> Vec<f64> {
        let (n_in, n_out) = layer.weight.shape();
        (0..n_out)
            .map(|j| {
                let mut z = layer.bias.get(0, j);
                for (i, xi) in input.iter().enumerate().take(n_in) {
                    z += xi * layer.weight.get(i, j);
                }
                match layer.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Identity => z,
                }
            })
            .collect()
    };
    let mut h = x.to_vec();
    for layer in model.extractor_layers() {
        h = dense(layer, &h);
    }
    let repr = h.clone();
    if !model.extractor_layers().is_empty() {
        h.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    for layer in model.head_layers() {
        h = dense(layer, &h);
    }
    (repr, h)
}

#[test]
fn forward_matches_naive_loops() {
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let model = random_model(&mut rng);
        let x = random_tensor(&mut rng, 3, model.input_dim());
        let trace = model.forward(&x).unwrap();
        for r in 0..3 {
            let (repr, logits) = naive_forward(&model, x.row(r));
            for (a, b) in trace.representation.row(r).iter().zip(&repr) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in trace.logits.row(r).iter().zip(&logits) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

fn scalar_model(w: f64, b: f64) -> Model {
    // one input, identity extractor of width 2 fixed at zero, head maps to 2 logits
    let extractor = vec![Dense::new(
        Tensor::from_rows(&[[w, 0.0]]).unwrap(),
        Tensor::row_vector(&[b, 0.0]),
        Activation::Identity,
    )
    .unwrap()];
    let head = vec![Dense::new(Tensor::identity(2), Tensor::zeros(1, 2), Activation::Identity).unwrap()];
    Model::from_layers(1, extractor, Activation::Identity, head, 2).unwrap()
}

#[test]
fn single_step_matches_closed_form() {
    let (w, b, x, lr) = (0.5, -0.2, 2.0, 0.1);
    let mut model = scalar_model(w, b);
    let input = Tensor::from_rows(&[[x]]).unwrap();
    let trace = model.forward(&input).unwrap();
    let ce = cross_entropy(&trace.logits, &[1]).unwrap();
    let mut sgd = Sgd::new(&model, lr).unwrap();
    sgd.backward_and_step(&mut model, &[(&trace, &Upstream::logits(ce.grad))]).unwrap();

    // logits [z, 0] with z = w x + b; d CE / dz = softmax(z, 0)[0] for label 1
    let z: f64 = w * x + b;
    let p0 = z.exp() / (z.exp() + 1.0);
    let first = &model.extractor_layers()[0];
    assert!((first.weight.get(0, 0) - (w - lr * p0 * x)).abs() < 1e-15);
    assert!((first.bias.get(0, 0) - (b - lr * p0)).abs() < 1e-15);
}

#[test]
fn zero_gradient_step_leaves_parameters_bitwise_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut model = random_model(&mut rng);
    let before = model.parameters();
    let x = random_tensor(&mut rng, 2, model.input_dim());
    let trace = model.forward(&x).unwrap();
    let zero = Tensor::zeros(2, model.num_classes());
    let mut sgd = Sgd::new(&model, 0.5).unwrap();
    sgd.backward_and_step(&mut model, &[(&trace, &Upstream::logits(zero))]).unwrap();
    let after = model.parameters();
    assert!(before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn stale_trace_is_rejected() {
    let mut model = scalar_model(1.0, 0.0);
    let x = Tensor::from_rows(&[[1.0]]).unwrap();
    let trace = model.forward(&x).unwrap();
    let up = Upstream::logits(Tensor::zeros(1, 2));
    let mut sgd = Sgd::new(&model, 0.1).unwrap();
    sgd.backward_and_step(&mut model, &[(&trace, &up)]).unwrap();
    assert!(sgd.backward_and_step(&mut model, &[(&trace, &up)]).is_err());
}

#[test]
fn initialization_is_deterministic_per_seed() {
    let arch = Architecture::mlp(6, &[5, 4], 3);
    assert_eq!(Model::init(&arch, 11).unwrap(), Model::init(&arch, 11).unwrap());
    assert_ne!(Model::init(&arch, 11).unwrap(), Model::init(&arch, 12).unwrap());
}

fn logits_row() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 2..12)
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(row in logits_row()) {
        let p = softmax(&row);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn softmax_is_shift_invariant(row in logits_row(), c in -100.0..100.0f64) {
        let shifted: Vec<f64> = row.iter().map(|v| v + c).collect();
        for (a, b) in softmax(&row).iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn log_softmax_agrees_with_softmax(row in prop::collection::vec(-10.0..10.0f64, 2..8)) {
        for (l, p) in log_softmax(&row).iter().zip(softmax(&row)) {
            prop_assert!((l.exp() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_is_non_negative(pair in (1usize..4, 2usize..8).prop_flat_map(|(r, c)| (
        prop::collection::vec(-20.0..20.0f64, r * c),
        prop::collection::vec(-20.0..20.0f64, r * c),
        Just((r, c)),
    ))) {
        let (p, q, (r, c)) = pair;
        let p = Tensor::from_vec(r, c, p).unwrap();
        let q = Tensor::from_vec(r, c, q).unwrap();
        prop_assert!(kl_divergence(&p, &q).unwrap().loss >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().loss.abs() <= 1e-12);
    }

    #[test]
    fn cross_entropy_gradient_rows_sum_to_zero(
        rows in prop::collection::vec(prop::collection::vec(-30.0..30.0f64, 5), 1..6),
        seed in any::<u64>(),
    ) {
        let logits = Tensor::from_rows(&rows).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..rows.len()).map(|_| rng.random_range(0..5)).collect();
        let out = cross_entropy(&logits, &labels).unwrap();
        for row in out.grad.iter_rows() {
            prop_assert!(row.iter().sum::<f64>().abs() < 1e-10);
        }
    }
}
