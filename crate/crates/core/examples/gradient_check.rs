//! Checks backpropagation against central differences, then fits a small
//! regression with Adam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfmec::neural::{gradient_check, Activation, AdamConfig, AdamState, Mlp, MlpSpec};

fn main() -> cfmec::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (inp, hidden, out, act) in [
        (3, vec![8, 8], 2, Activation::Sigmoid),
        (5, vec![16], 1, Activation::Identity),
        (2, vec![4, 4, 4], 3, Activation::Sigmoid),
    ] {
        let net = Mlp::new(MlpSpec::new(inp, hidden.clone(), out, act), 1.0, &mut rng)?;
        let r = gradient_check(&net, 4, 1e-6, &mut rng)?;
        println!(
            "{inp}->{hidden:?}->{out}: {} derivatives, max relative error {:.2e}",
            r.checked, r.max_rel_error
        );
    }

    // y = sin(3x) on [-1, 1]
    let n = 64;
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin()).collect();
    let mut net = Mlp::new(
        MlpSpec::new(1, vec![32, 32], 1, Activation::Identity),
        1.0,
        &mut rng,
    )?;
    let mut opt = AdamState::new(AdamConfig::with_lr(3e-3), net.params().len())?;
    let mut grads = vec![0.0; net.params().len()];
    for epoch in 0..=2000 {
        let cache = net.forward(&xs, n)?;
        let resid: Vec<f64> = cache.output().iter().zip(&ys).map(|(p, y)| p - y).collect();
        let d: Vec<f64> = resid.iter().map(|r| 2.0 * r / n as f64).collect();
        net.backward(&cache, &d, &mut grads, false)?;
        opt.step(net.params_mut(), &grads)?;
        if epoch % 500 == 0 {
            let mse = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;
            println!("epoch {epoch:>4}: mse {mse:.3e}");
        }
    }
    Ok(())
}
