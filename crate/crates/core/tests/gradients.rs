mod common;

use common::gradcheck;

const LAYER_TOL: f64 = 1e-5;

#[test]
fn convolution_backward() {
    for seed in 0..20 {
        let e = gradcheck::conv_layer(seed);
        assert!(e < LAYER_TOL, "seed {seed}: {e:e}");
    }
}

#[test]
fn batchnorm_backward() {
    for seed in 0..20 {
        let e = gradcheck::batchnorm_layer(seed);
        assert!(e < LAYER_TOL, "seed {seed}: {e:e}");
    }
}

#[test]
fn dense_through_relu_backward() {
    for seed in 0..20 {
        let e = gradcheck::dense_relu(seed);
        assert!(e < LAYER_TOL, "seed {seed}: {e:e}");
    }
}

#[test]
fn loss_gradient() {
    for seed in 0..20 {
        let e = gradcheck::loss(seed);
        assert!(e < 1e-7, "seed {seed}: {e:e}");
    }
}

#[test]
fn tiny_decoder_end_to_end() {
    for seed in 0..5 {
        let e = gradcheck::end_to_end(seed);
        assert!(e < 1e-4, "seed {seed}: {e:e}");
    }
}
