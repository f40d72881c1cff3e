use mist_core::channel::RandomStream;
use mist_core::codes::CodeConfig;
use mist_core::eval::{decoder_by_name, time_decoder};
use mist_core::mist::{train, TrainingConfig};
use mist_core::neural::{CnnDecoder, Tensor3};

fn briefly_trained() -> CnnDecoder<f32> {
    let cfg = TrainingConfig {
        code: CodeConfig::default().with_n(40),
        iterations: 5,
        batch_size: 16,
        kernel_size: 5,
        widths: vec![4, 6, 6],
        seed: 2,
        ..Default::default()
    };
    let code = cfg.code.build().unwrap();
    train(cfg.initial_model(&code).unwrap(), &cfg).unwrap().0
}

#[test]
fn inference_ignores_batch_composition() {
    let model = briefly_trained();
    let n = model.config().n;
    let l = model.config().l;
    let mut rng = RandomStream::new(8, 0);
    let rows: Vec<f64> = (0..7 * n).map(|_| 1.5 * rng.gaussian()).collect();
    let together = model.predict(&Tensor3::from_rows(&rows, n).unwrap()).unwrap();
    let bits = model.decode_rows(&rows).unwrap();
    for (i, row) in rows.chunks(n).enumerate() {
        let alone = model.predict(&Tensor3::from_rows(row, n).unwrap()).unwrap();
        assert_eq!(alone, together[i * l..(i + 1) * l], "row {i}");
        assert_eq!(model.decode(row).unwrap().0, bits[i * l..(i + 1) * l], "row {i}");
    }
    // same row placed among different neighbours
    let mut shuffled: Vec<f64> = rows[3 * n..].to_vec();
    shuffled.extend_from_slice(&rows[..3 * n]);
    let again = model.predict(&Tensor3::from_rows(&shuffled, n).unwrap()).unwrap();
    assert_eq!(again[..l], together[3 * l..4 * l]);
}

#[test]
fn batching_amortizes_per_word_time() {
    let code = CodeConfig::default().build().unwrap();
    let cfg = TrainingConfig::default();
    let mut model = cfg.initial_model(&code).unwrap();
    model.set_mode(mist_core::neural::Mode::Infer);
    let decoder = decoder_by_name("cnn", &code, Some(&model)).unwrap();
    // interleaved rounds of equal work; means, so preemption on a busy machine hits both sides
    let (mut single, mut batched) = (0.0, 0.0);
    for round in 0..4 {
        single += time_decoder(&*decoder, &code, 1, 2, 256, round).unwrap().mean_ms;
        batched += time_decoder(&*decoder, &code, 256, 1, 1, round).unwrap().mean_ms;
    }
    assert!(batched < single, "batch 256: {batched} ms/word, batch 1: {single} ms/word");
}
