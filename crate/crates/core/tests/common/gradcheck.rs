//! Central finite-difference checks in f64. Each check returns the largest
//! elementwise relative error between the analytic and numeric gradients.

use mist_core::neural::{
    mse_loss, relu, relu_backward, BatchNorm, CnnConfig, CnnDecoder, Conv1d, DenseSigmoid, Tensor3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely.
const FLOOR: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_tensor(rng: &mut ChaCha8Rng, b: usize, n: usize, c: usize) -> Tensor3<f64> {
    Tensor3::new(b, n, c, random_vec(rng, b * n * c)).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compares `analytic` against central differences of `loss` over `values`.
fn check<F>(values: &mut Vec<f64>, analytic: &[f64], mut loss: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(values.len(), analytic.len());
    let mut worst = 0.0f64;
    for i in 0..values.len() {
        let keep = values[i];
        values[i] = keep + STEP;
        let up = loss(values);
        values[i] = keep - STEP;
        let down = loss(values);
        values[i] = keep;
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * STEP)));
    }
    worst
}

/// Convolution: input, weight and bias gradients for a random shape.
pub fn conv_layer(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, n) = (rng.random_range(1..4), rng.random_range(3..10));
    let (k, cin, cout) = (rng.random_range(1..6), rng.random_range(1..4), rng.random_range(1..4));
    let layer = Conv1d::<f64>::init(k, cin, cout, &mut rng).unwrap();
    let mut layer = layer;
    layer.bias = random_vec(&mut rng, cout);
    let x = random_tensor(&mut rng, b, n, cin);
    let r = random_vec(&mut rng, b * n * cout);
    let (_, cache) = layer.forward(&x).unwrap();
    let g = Tensor3::new(b, n, cout, r.clone()).unwrap();
    let (gx, grads) = layer.backward(&g, &cache, true).unwrap();

    let mut worst = 0.0f64;
    let mut xs = x.data().to_vec();
    worst = worst.max(check(&mut xs, gx.unwrap().data(), |v| {
        let t = Tensor3::new(b, n, cin, v.to_vec()).unwrap();
        dot(layer.forward(&t).unwrap().0.data(), &r)
    }));
    let mut w = layer.weight.clone();
    worst = worst.max(check(&mut w, &grads.weight, |v| {
        let mut l = layer.clone();
        l.weight = v.to_vec();
        dot(l.forward(&x).unwrap().0.data(), &r)
    }));
    let mut bias = layer.bias.clone();
    worst = worst.max(check(&mut bias, &grads.bias, |v| {
        let mut l = layer.clone();
        l.bias = v.to_vec();
        dot(l.forward(&x).unwrap().0.data(), &r)
    }));
    worst
}

/// Training-mode batch norm: input, scale and shift gradients.
pub fn batchnorm_layer(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, n, c) = (rng.random_range(2..4), rng.random_range(1..6), rng.random_range(1..4));
    let mut layer = BatchNorm::<f64>::new(c);
    layer.gamma = random_vec(&mut rng, c);
    layer.beta = random_vec(&mut rng, c);
    let x = random_tensor(&mut rng, b, n, c);
    let r = random_vec(&mut rng, b * n * c);
    let (_, cache) = layer.clone().forward_train(&x).unwrap();
    let g = Tensor3::new(b, n, c, r.clone()).unwrap();
    let (gx, grads) = layer.backward(&g, &cache).unwrap();
    let out = |l: &BatchNorm<f64>, t: &Tensor3<f64>| dot(l.clone().forward_train(t).unwrap().0.data(), &r);

    let mut worst = 0.0f64;
    let mut xs = x.data().to_vec();
    worst = worst.max(check(&mut xs, gx.data(), |v| out(&layer, &Tensor3::new(b, n, c, v.to_vec()).unwrap())));
    let mut gamma = layer.gamma.clone();
    worst = worst.max(check(&mut gamma, &grads.gamma, |v| {
        let mut l = layer.clone();
        l.gamma = v.to_vec();
        out(&l, &x)
    }));
    let mut beta = layer.beta.clone();
    worst = worst.max(check(&mut beta, &grads.beta, |v| {
        let mut l = layer.clone();
        l.beta = v.to_vec();
        out(&l, &x)
    }));
    worst
}

/// Dense sigmoid head fed through a ReLU.
pub fn dense_relu(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, n, c, l) = (
        rng.random_range(1..4),
        rng.random_range(1..5),
        rng.random_range(1..4),
        rng.random_range(1..5),
    );
    let mut layer = DenseSigmoid::<f64>::init(n * c, l, &mut rng).unwrap();
    layer.bias = random_vec(&mut rng, l);
    let z = random_tensor(&mut rng, b, n, c);
    let r = random_vec(&mut rng, b * l);
    let a = relu(&z);
    let post = layer.forward(&a).unwrap();
    let (ga, grads) = layer.backward(&a, &post, &r).unwrap();
    let gz = relu_backward(&ga, &a).unwrap();
    let out = |d: &DenseSigmoid<f64>, t: &Tensor3<f64>| dot(&d.forward(&relu(t)).unwrap(), &r);

    let mut worst = 0.0f64;
    let mut zs = z.data().to_vec();
    worst = worst.max(check(&mut zs, gz.data(), |v| out(&layer, &Tensor3::new(b, n, c, v.to_vec()).unwrap())));
    let mut w = layer.weight.clone();
    worst = worst.max(check(&mut w, &grads.weight, |v| {
        let mut d = layer.clone();
        d.weight = v.to_vec();
        out(&d, &z)
    }));
    let mut bias = layer.bias.clone();
    worst = worst.max(check(&mut bias, &grads.bias, |v| {
        let mut d = layer.clone();
        d.bias = v.to_vec();
        out(&d, &z)
    }));
    worst
}

/// Squared-error loss against fixed bits.
pub fn loss(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, l) = (rng.random_range(1..4), rng.random_range(1..6));
    let targets: Vec<u8> = (0..b * l).map(|_| rng.random_range(0..2)).collect();
    let mut p: Vec<f64> = (0..b * l).map(|_| rng.random_range(0.05..0.95)).collect();
    let (_, g) = mse_loss(&targets, &p, b, l).unwrap();
    check(&mut p, &g, |v| mse_loss(&targets, v, b, l).unwrap().0)
}

/// Whole decoder at n = 12, l = 4, kernel 3, widths 2/3/3, batch 2.
pub fn end_to_end(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, l, b) = (12, 4, 2);
    let mut model = CnnDecoder::<f64>::new(CnnConfig::new(n, l, 3, vec![2, 3, 3]), &mut rng).unwrap();
    for p in model.parameters_mut() {
        for v in p.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let y = random_tensor(&mut rng, b, n, 1);
    let targets: Vec<u8> = (0..b * l).map(|_| rng.random_range(0..2)).collect();
    let (post, cache) = model.clone().forward_train(&y).unwrap();
    let (_, g) = mse_loss(&targets, &post, b, l).unwrap();
    let grads = model.backward(&cache, &g).unwrap();

    let mut worst = 0.0f64;
    for (t, analytic) in grads.tensors.iter().enumerate() {
        let mut values = model.parameters()[t].to_vec();
        worst = worst.max(check(&mut values, analytic, |v| {
            let mut m = model.clone();
            m.parameters_mut()[t].copy_from_slice(v);
            let (p, _) = m.forward_train(&y).unwrap();
            mse_loss(&targets, &p, b, l).unwrap().0
        }));
    }
    worst
}
