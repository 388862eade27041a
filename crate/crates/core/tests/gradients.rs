//! Analytic gradients against central finite differences.

mod common;

use common::*;
use ortho_transfer::loss::{loss, loss_cross_entropy, LossKind};
use ortho_transfer::train::{conversion_objective, regularization_grad, regularization_penalty};
use ortho_transfer::{
    Activation, DenseLayer, ExpressionDataset, FeedforwardNetwork, Labels, MaskedLinearLayer, Mode,
};
use rand::Rng;

fn random_net(r: &mut impl Rng, dims: &[usize], acts: &[Activation]) -> FeedforwardNetwork {
    let layers = dims
        .windows(2)
        .zip(acts)
        .map(|(d, &a)| {
            let w = (0..d[0] * d[1]).map(|_| r.gen_range(-1.0..1.0)).collect();
            let b = (0..d[1]).map(|_| r.gen_range(-0.5..0.5)).collect();
            DenseLayer::new(d[1], d[0], w, b, a).unwrap()
        })
        .collect();
    FeedforwardNetwork::new(layers).unwrap()
}

fn rebuild(
    net: &FeedforwardNetwork,
    layer: usize,
    weights: Option<&[f64]>,
    bias: Option<&[f64]>,
) -> FeedforwardNetwork {
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let w = if k == layer {
                weights.unwrap_or(l.weights())
            } else {
                l.weights()
            };
            let b = if k == layer {
                bias.unwrap_or(l.bias())
            } else {
                l.bias()
            };
            DenseLayer::new(l.rows(), l.cols(), w.to_vec(), b.to_vec(), l.activation()).unwrap()
        })
        .collect();
    FeedforwardNetwork::new(layers).unwrap()
}

#[test]
fn mlp_input_and_parameter_gradients() {
    let mut r = rng(17);
    for _ in 0..50 {
        let dims = [r.gen_range(1..6), r.gen_range(1..5), r.gen_range(1..4)];
        let net = random_net(&mut r, &dims, &[Activation::Sigmoid, Activation::Identity]);
        let x: Vec<f64> = (0..dims[0]).map(|_| r.gen_range(-2.0..2.0)).collect();
        let target: Vec<f64> = (0..dims[2]).map(|_| r.gen_range(-1.0..1.0)).collect();
        let objective = |n: &FeedforwardNetwork, x: &[f64]| {
            ortho_transfer::loss::loss_mse(&n.predict(x).unwrap(), &target)
                .unwrap()
                .0
        };
        let (y, cache) = net.forward(&x).unwrap();
        let (_, dl_dy) = ortho_transfer::loss::loss_mse(&y, &target).unwrap();
        let (grads, grad_x) = net.backward(&cache, &dl_dy).unwrap();

        let numeric = central_diff(&x, 1e-5, |x| objective(&net, x));
        for (a, n) in grad_x.iter().zip(&numeric) {
            assert!(rel_err(*a, *n) <= 1e-6, "input grad {a} vs {n}");
        }
        for (k, layer) in net.layers().iter().enumerate() {
            let nw = central_diff(layer.weights(), 1e-5, |w| {
                objective(&rebuild(&net, k, Some(w), None), &x)
            });
            let nb = central_diff(layer.bias(), 1e-5, |b| {
                objective(&rebuild(&net, k, None, Some(b)), &x)
            });
            for (a, n) in grads[k]
                .weights
                .iter()
                .zip(&nw)
                .chain(grads[k].bias.iter().zip(&nb))
            {
                assert!(rel_err(*a, *n) <= 1e-6, "layer {k}: {a} vs {n}");
            }
        }
    }
}

#[test]
fn conversion_backward_matches_finite_differences() {
    let g = ortho_transfer::BiadjacencyMatrix::new(ids("t", 1), ids("s", 2), vec![(0, 0)]).unwrap();
    let x = [4.0, 1.0];
    let hard = MaskedLinearLayer::hard(g.clone(), vec![0.3]).unwrap();
    let (gw, _) = hard.backward(&x, &[1.0]).unwrap();
    let numeric = central_diff(hard.weights(), 1e-5, |w| {
        MaskedLinearLayer::hard(g.clone(), w.to_vec())
            .unwrap()
            .forward(&x)
            .unwrap()[0]
    });
    assert_eq!(gw.len(), 1);
    assert!(rel_err(gw[0], numeric[0]) < 1e-9);
    assert!((gw[0] - 4.0).abs() < 1e-12);

    let soft = MaskedLinearLayer::soft(g.clone(), vec![0.1, -0.4]).unwrap();
    let (gw, _) = soft.backward(&[3.0, 5.0], &[2.0]).unwrap();
    let numeric = central_diff(soft.weights(), 1e-5, |w| {
        2.0 * MaskedLinearLayer::soft(g.clone(), w.to_vec())
            .unwrap()
            .forward(&[3.0, 5.0])
            .unwrap()[0]
    });
    assert_eq!(gw, vec![6.0, 10.0]);
    for (a, n) in gw.iter().zip(&numeric) {
        assert!(rel_err(*a, *n) < 1e-9);
    }
}

#[test]
fn cross_entropy_gradient() {
    let mut r = rng(8);
    for _ in 0..50 {
        let n = r.gen_range(2..6);
        let z: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let c = r.gen_range(0..n);
        let (_, g) = loss_cross_entropy(&z, c).unwrap();
        let numeric = central_diff(&z, 1e-5, |z| loss_cross_entropy(z, c).unwrap().0);
        for (a, n) in g.iter().zip(&numeric) {
            assert!(rel_err(*a, *n) <= 1e-6);
        }
    }
}

#[test]
fn regularizer_gradient_matches_penalty() {
    let mut r = rng(99);
    for _ in 0..100 {
        let (n_t, n_s) = (r.gen_range(1..7), r.gen_range(1..7));
        let mask = random_graph(&mut r, n_t, n_s, 0.4);
        let w: Vec<f64> = (0..n_t * n_s).map(|_| r.gen_range(-2.0..2.0)).collect();
        let (alpha, beta) = (r.gen_range(0.0..3.0), r.gen_range(0.0..3.0));
        let analytic = regularization_grad(&w, &mask, alpha, beta).unwrap();
        let numeric = central_diff(&w, 1e-5, |w| {
            regularization_penalty(w, &mask, alpha, beta).unwrap()
        });
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!(rel_err(*a, *n) <= 1e-6, "{a} vs {n}");
        }
    }
}

#[test]
fn end_to_end_conversion_gradient() {
    let mut r = rng(404);
    for trial in 0..120 {
        let (n_s, n_t, h) = (r.gen_range(1..=8), r.gen_range(1..=6), r.gen_range(1..=4));
        let mode = if trial % 2 == 0 {
            Mode::Hard
        } else {
            Mode::Soft
        };
        let kind = if trial % 4 < 2 {
            LossKind::Mse
        } else {
            LossKind::CrossEntropy
        };
        let out = if kind == LossKind::Mse {
            1
        } else {
            r.gen_range(2..4)
        };
        let mask = random_graph(&mut r, n_t, n_s, 0.5);
        let layer = match mode {
            Mode::Hard => MaskedLinearLayer::hard(
                mask.clone(),
                (0..mask.edge_count())
                    .map(|_| r.gen_range(-1.0..1.0))
                    .collect(),
            ),
            Mode::Soft => MaskedLinearLayer::soft(
                mask.clone(),
                (0..n_t * n_s).map(|_| r.gen_range(-1.0..1.0)).collect(),
            ),
        }
        .unwrap();
        let net = random_net(
            &mut r,
            &[n_t, h, out],
            &[Activation::Relu, Activation::Identity],
        )
        .frozen();
        let n = 3;
        let values: Vec<f64> = (0..n * n_s).map(|_| r.gen_range(-2.0..2.0)).collect();
        let labels = match kind {
            LossKind::Mse => Labels::Regression((0..n).map(|_| r.gen_range(-1.0..1.0)).collect()),
            LossKind::CrossEntropy => {
                Labels::Classes((0..n).map(|_| r.gen_range(0..out)).collect())
            }
        };
        let data = ExpressionDataset::new("q", ids("s", n_s), ids("x", n), values)
            .unwrap()
            .with_labels(labels)
            .unwrap();
        let (alpha, beta) = (r.gen_range(0.0..2.0), r.gen_range(0.0..2.0));
        let batch: Vec<usize> = (0..n).collect();

        let (_, analytic) = conversion_objective(&layer, &net, &data, &batch, alpha, beta).unwrap();
        let rebuild = |w: &[f64]| match mode {
            Mode::Hard => MaskedLinearLayer::hard(mask.clone(), w.to_vec()).unwrap(),
            Mode::Soft => MaskedLinearLayer::soft(mask.clone(), w.to_vec()).unwrap(),
        };
        // objective written out independently of conversion_objective
        let objective = |w: &[f64]| {
            let l = rebuild(w);
            let mut total = 0.0;
            for k in 0..n {
                let y = net.predict(&l.forward(data.row(k)).unwrap()).unwrap();
                let target = data.labels().unwrap().target(k);
                total += loss(kind, &y, target).unwrap().0;
            }
            let mut value = total / n as f64;
            if mode == Mode::Soft {
                let dense_mask = mask.to_dense();
                for (k, wk) in w.iter().enumerate() {
                    value += if dense_mask[k] == 1 { beta } else { alpha } * wk * wk;
                }
            }
            value
        };
        let numeric = central_diff(layer.weights(), 1e-5, objective);
        for (a, nd) in analytic.iter().zip(&numeric) {
            assert!(rel_err(*a, *nd) <= 1e-5, "trial {trial}: {a} vs {nd}");
        }
    }
}
