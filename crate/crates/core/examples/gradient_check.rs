//! Finite-difference checks of each layer and of a whole down-sized DGCNN.
//!
//! cargo run --example gradient_check -- [seed]

use qroute::env::{random_states, NetworkContext, TrafficProfile};
use qroute::model::{check_model_gradients, gradcheck_model, Architecture, DgcnnConfig};
use qroute::nn::gradcheck::check_gradients;
use qroute::nn::{Activation, Conv1d, Dense, Tensor};
use qroute::topo::generate_random_topology;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-6;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn main() -> qroute::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |a| a.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let dense = Dense::new(6, 4, Activation::Relu, &mut rng);
    let x = random(&[3, 6], &mut rng);
    let up = random(&[3, 4], &mut rng);
    let (_, tape) = dense.forward(&x);
    let (gw, gb, gx) = dense.backward(&tape, &up);
    let mut params = vec![dense.weight.clone(), dense.bias.clone(), x.clone()];
    let report = check_gradients(
        |p| {
            let layer = Dense { weight: p[0].clone(), bias: p[1].clone(), ..dense.clone() };
            layer.forward(&p[2]).0.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
        },
        &mut params,
        &[gw, gb, gx],
        STEP,
    );
    println!("dense    {:>4} entries, max relative error {:.2e}", report.checked, report.max_rel_error);

    let conv = Conv1d::new(3, 2, 4, 1, Activation::Relu, &mut rng);
    let x = random(&[2, 7, 2], &mut rng);
    let up = random(&[2, 5, 4], &mut rng);
    let (_, tape) = conv.forward(&x);
    let (gw, gb, gx) = conv.backward(&tape, &up);
    let mut params = vec![conv.weight.clone(), conv.bias.clone(), x.clone()];
    let report = check_gradients(
        |p| {
            let layer = Conv1d { weight: p[0].clone(), bias: p[1].clone(), ..conv.clone() };
            layer.forward(&p[2]).0.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
        },
        &mut params,
        &[gw, gb, gx],
        STEP,
    );
    println!("conv1d   {:>4} entries, max relative error {:.2e}", report.checked, report.max_rel_error);

    let ctx = NetworkContext::new(generate_random_topology(5, 7, seed)?, 3);
    let states = random_states(&ctx, &TrafficProfile::default(), 2, 15, 3, seed)?;
    let refs: Vec<_> = states.iter().collect();
    let arch = Architecture::Dgcnn(DgcnnConfig { nodes: 5, gconv: vec![8, 8], conv: [4, 4], conv2_width: 5, pool_width: 2, dense: vec![8], k: 3 });
    let coeffs = random(&[2, 3], &mut rng);
    let report = check_model_gradients(&gradcheck_model(&arch, seed), &refs, &coeffs, STEP);
    println!("dgcnn    {:>4} entries, max relative error {:.2e}", report.checked, report.max_rel_error);
    Ok(())
}
