use rand::Rng;

use super::mlp::Mlp;
use crate::error::Result;

/// Outcome of comparing backprop against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
}

/// Relative error with a floor on the denominator so parameters with
/// vanishing gradient do not divide by zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Checks every parameter gradient and every input gradient of the scalar
/// loss `sum_i c_i y_i` with random weights `c`, on a random batch.
pub fn gradient_check<R: Rng + ?Sized>(
    net: &Mlp,
    batch: usize,
    step: f64,
    rng: &mut R,
) -> Result<GradCheck> {
    let input: Vec<f64> = (0..batch * net.input_dim())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let weights: Vec<f64> = (0..batch * net.output_dim())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let loss = |n: &Mlp, x: &[f64]| -> Result<f64> {
        let out = n.forward(x, batch)?;
        Ok(out.output().iter().zip(&weights).map(|(y, c)| y * c).sum())
    };

    let cache = net.forward(&input, batch)?;
    let mut grads = vec![0.0; net.params().len()];
    let gin = net
        .backward(&cache, &weights, &mut grads, true)?
        .expect("requested");

    let mut report = GradCheck {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        checked: 0,
    };
    let mut note = |analytic: f64, numeric: f64| {
        report.max_rel_error = report.max_rel_error.max(relative_error(analytic, numeric));
        report.max_abs_error = report.max_abs_error.max((analytic - numeric).abs());
        report.checked += 1;
    };

    let mut probe = net.clone();
    for i in 0..grads.len() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + step;
        let up = loss(&probe, &input)?;
        probe.params_mut()[i] = orig - step;
        let down = loss(&probe, &input)?;
        probe.params_mut()[i] = orig;
        note(grads[i], (up - down) / (2.0 * step));
    }
    let mut x = input.clone();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + step;
        let up = loss(net, &x)?;
        x[i] = orig - step;
        let down = loss(net, &x)?;
        x[i] = orig;
        note(gin[i], (up - down) / (2.0 * step));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Activation, MlpSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backprop_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let dims: Vec<usize> = (0..4).map(|_| rng.random_range(1..=8)).collect();
            let out_act = if rng.random_bool(0.5) {
                Activation::Sigmoid
            } else {
                Activation::Identity
            };
            let spec = MlpSpec::new(dims[0], vec![dims[1], dims[2]], dims[3], out_act);
            let net = Mlp::new(spec, 1.0, &mut rng).unwrap();
            let batch = rng.random_range(1..=4);
            let r = gradient_check(&net, batch, 1e-6, &mut rng).unwrap();
            worst = worst.max(r.max_rel_error);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
