//! Analytic gradients of the full network against central differences in f64.

use coverest::nnet::{Mode, ModelConfig, Network, QuantileSpec, Tape, Tensor};
use coverest::qloss::batch_loss;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss(net: &Network<f64>, x: &Tensor<f64>, labels: &[f64], mode: Mode) -> f64 {
    let out = net.forward(x, mode).unwrap();
    batch_loss(labels, out.data(), &net.config().quantiles).unwrap().value
}

fn check(config: ModelConfig, mode: Mode) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let b = 2;
    let n = b * config.in_channels * 2500;
    let x = Tensor::new(
        vec![b, config.in_channels, 50, 50],
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
    )
    .unwrap();
    // Labels far from the initial outputs keep every node off its kink.
    let labels = [900.0, 1500.0];
    let mut net = Network::<f64>::init(config, 3).unwrap();

    let mut tape = Tape::new();
    let out = net.forward_recorded(&x, mode, &mut tape).unwrap();
    let bl = batch_loss(&labels, out.data(), &net.config().quantiles).unwrap();
    let dout = Tensor::new(out.shape().to_vec(), bl.gradient).unwrap();
    let analytic = net.backward(&tape, &dout).unwrap().flatten();

    let base = net.flat_params();
    let h = 1e-6;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    // Every parameter tensor gets a few probes.
    let mut offset = 0;
    let sizes: Vec<usize> = net.params().iter().map(|p| p.data.len()).collect();
    for size in sizes {
        for j in 0..size.min(4) {
            let i = offset + (j * 7919) % size;
            let mut p = base.clone();
            p[i] += h;
            net.set_flat_params(&p).unwrap();
            let up = loss(&net, &x, &labels, mode);
            p[i] -= 2.0 * h;
            net.set_flat_params(&p).unwrap();
            let dn = loss(&net, &x, &labels, mode);
            let fd = (up - dn) / (2.0 * h);
            let err = (fd - analytic[i]).abs() / (1e-6 + fd.abs().max(analytic[i].abs()));
            worst = worst.max(err);
            assert!(err < 1e-4, "param {i}: fd {fd} analytic {}", analytic[i]);
            checked += 1;
        }
        offset += size;
    }
    net.set_flat_params(&base).unwrap();
    assert!(checked > 40, "{checked}");
    eprintln!("checked {checked} parameters, worst relative error {worst:.2e}");
}

fn small() -> ModelConfig {
    ModelConfig {
        n_blocks: 2,
        base_width: 4,
        head_hidden: 5,
        ..ModelConfig::default()
    }
}

#[test]
fn eval_mode_gradients() {
    check(small(), Mode::Eval);
}

#[test]
fn train_mode_gradients_with_fixed_dropout() {
    check(small(), Mode::Train { dropout_seed: 99 });
}

#[test]
fn single_node_and_four_channel_variants() {
    check(
        ModelConfig {
            quantiles: QuantileSpec::median_only(),
            ..small()
        },
        Mode::Eval,
    );
    check(
        ModelConfig {
            in_channels: 4,
            ..small()
        },
        Mode::Eval,
    );
}
