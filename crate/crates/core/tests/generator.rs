use fastfit_core::dsp::{AudioBuffer, MelFilterbank, MelSpectrogram, StftParams};
use fastfit_core::model::{
    init_weights, param_count, sample_latent, tensor_specs, EncoderKind, Generator, ModelConfig, StftRepresentation,
    WeightStore,
};
use fastfit_core::nn::{
    adaln_modulated, conv1d, location_variable_conv, snake, transposed_conv1d, FeatureMap, Tensor,
};
use fastfit_core::rng::normal_vec;
use fastfit_core::Error;

fn random_mel(frames: usize, seed: u64) -> MelSpectrogram {
    let fb = MelFilterbank::default_24k();
    let mut c = MelSpectrogram::silent(frames, &fb, StftParams::default());
    for (v, r) in c.values.iter_mut().zip(normal_vec(seed, "test-mel", frames * 100)) {
        *v = (-4.0 + 2.0 * r) as f32;
    }
    c
}

fn random_audio(len: usize, seed: u64) -> AudioBuffer {
    AudioBuffer::from_samples(normal_vec(seed, "test-audio", len).into_iter().map(|v| 0.1 * v).collect())
}

fn replace(store: &WeightStore, config: &ModelConfig, edit: impl Fn(&str, &mut Tensor)) -> WeightStore {
    let seed = store.seed;
    let mut tensors = store.clone().into_tensors();
    for (name, t) in tensors.iter_mut() {
        edit(name, t);
    }
    WeightStore::from_tensors(config, seed, tensors).unwrap()
}

#[test]
fn stft_variant_is_much_smaller() {
    let bank = param_count(&ModelConfig::default());
    let neural = param_count(&ModelConfig::default().with_encoder(EncoderKind::Neural));
    let ratio = bank as f64 / neural as f64;
    assert!(ratio <= 0.60, "ratio {ratio}");
}

#[test]
fn neural_encoder_size_matches_decoder() {
    let config = ModelConfig::default().with_encoder(EncoderKind::Neural);
    let specs = tensor_specs(&config);
    let sum = |p: &str| -> usize { specs.iter().filter(|s| s.name.starts_with(p)).map(|s| s.numel()).sum() };
    let (enc, dec) = (sum("encoder."), sum("decoder."));
    let rel = (enc as f64 - dec as f64).abs() / dec as f64;
    assert!(rel <= 0.15, "encoder {enc} decoder {dec}");
}

#[test]
fn linear_param_count() {
    let specs = tensor_specs(&ModelConfig::default());
    let n: usize = specs.iter().filter(|s| s.name.starts_with("mapping.fc1")).map(|s| s.numel()).sum();
    assert_eq!(n, 25_856);
}

#[test]
fn bank_shapes_for_one_second() {
    let config = ModelConfig::default();
    let w = init_weights(&config, 0).unwrap();
    let g = Generator::new(&config, &w).unwrap();
    let frames = 93;
    let maps = g.encode_stft_bank(&random_audio(frames * 256, 1), frames).unwrap();
    let steps: Vec<_> = maps.iter().map(|m| m.steps).collect();
    assert_eq!(steps, vec![93, 93 * 8, 93 * 64]);
    assert!(maps.iter().all(|m| m.channels == 32));

    let zero = g.encode_stft_bank(&AudioBuffer::from_samples(vec![0.0; frames * 256]), frames).unwrap();
    assert!(zero.iter().all(|m| m.values.iter().all(|&v| v == 0.0)));

    assert!(matches!(
        g.encode_stft_bank(&random_audio(frames * 256 + 3, 1), frames),
        Err(Error::Shape(_))
    ));
}

#[test]
fn encoder_parity_and_zero_neural_encoder() {
    let frames = 6;
    let y = random_audio(frames * 256, 2);
    let c = random_mel(frames, 3);
    let bank_cfg = ModelConfig::default();
    let bw = init_weights(&bank_cfg, 0).unwrap();
    let bank = Generator::new(&bank_cfg, &bw).unwrap().encode_stft_bank(&y, frames).unwrap();

    let cfg = ModelConfig::default().with_encoder(EncoderKind::Neural);
    let nw = init_weights(&cfg, 0).unwrap();
    let g = Generator::new(&cfg, &nw).unwrap();
    let bundle = g.condition(&c, &sample_latent(0, 100)).unwrap();
    let t_emb = g.step_embedding(1).unwrap();
    let neural = g.encode_neural(&y, &bundle, &t_emb).unwrap();
    let shape = |v: &[FeatureMap]| v.iter().map(|m| (m.channels, m.steps)).collect::<Vec<_>>();
    assert_eq!(shape(&bank), shape(&neural));

    let zeroed = replace(&nw, &cfg, |name, t| {
        if name.starts_with("encoder.") && !name.ends_with("alpha") {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
    });
    let g = Generator::new(&cfg, &zeroed).unwrap();
    let bundle = g.condition(&c, &sample_latent(0, 100)).unwrap();
    let maps = g.encode_neural(&y, &bundle, &t_emb).unwrap();
    assert!(maps.iter().all(|m| m.values.iter().all(|&v| v == 0.0)));
}

#[test]
fn forward_shape_bounds_and_determinism() {
    for kind in [EncoderKind::StftBank, EncoderKind::Neural, EncoderKind::SingleStftNoSkip] {
        let config = ModelConfig::default().with_encoder(kind);
        let w = init_weights(&config, 5).unwrap();
        let g = Generator::new(&config, &w).unwrap();
        for frames in [24, 47] {
            let c = random_mel(frames, 4);
            let bundle = g.condition(&c, &sample_latent(9, 100)).unwrap();
            let y = random_audio(frames * 256, 6);
            let a = g.forward(&y, &bundle, 2).unwrap();
            let b = g.forward(&y, &bundle, 2).unwrap();
            assert_eq!(a.len(), y.len());
            assert!(a.samples.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
            assert_eq!(a, b);
        }
    }
}

#[test]
fn magnitude_representation_runs() {
    let mut config = ModelConfig::default();
    config.stft_representation = StftRepresentation::Magnitude;
    let w = init_weights(&config, 5).unwrap();
    let g = Generator::new(&config, &w).unwrap();
    let c = random_mel(8, 1);
    let bundle = g.condition(&c, &sample_latent(1, 100)).unwrap();
    let out = g.forward(&random_audio(8 * 256, 1), &bundle, 1).unwrap();
    assert_eq!(out.len(), 8 * 256);
}

#[test]
fn zero_head_gives_zero_output() {
    let config = ModelConfig::default();
    let w = init_weights(&config, 5).unwrap();
    let w = replace(&w, &config, |name, t| {
        if name == "head.weight" || name == "head.bias" {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
    });
    let g = Generator::new(&config, &w).unwrap();
    let c = random_mel(10, 1);
    let bundle = g.condition(&c, &sample_latent(1, 100)).unwrap();
    let out = g.forward(&random_audio(2560, 1), &bundle, 3).unwrap();
    assert!(out.samples.iter().all(|&v| v == 0.0));
}

#[test]
fn step_and_weight_checks() {
    let config = ModelConfig::default();
    let w = init_weights(&config, 5).unwrap();
    let g = Generator::new(&config, &w).unwrap();
    let c = random_mel(4, 1);
    let bundle = g.condition(&c, &sample_latent(1, 100)).unwrap();
    let y = random_audio(1024, 1);
    assert!(matches!(g.forward(&y, &bundle, 0), Err(Error::StepOutOfRange { .. })));
    assert!(matches!(g.forward(&y, &bundle, 4), Err(Error::StepOutOfRange { .. })));
    let other = ModelConfig::default().with_encoder(EncoderKind::Neural);
    assert!(matches!(Generator::new(&other, &w), Err(Error::Integrity(_))));
}

#[test]
fn decoder_block_matches_scripted_composition() {
    let config = ModelConfig::default();
    let w = init_weights(&config, 11).unwrap();
    // Zero the modulation and step projections so only the primitive chain remains.
    let w = replace(&w, &config, |name, t| {
        if name.contains(".gamma.") || name.contains(".beta.") || name.contains(".step.") {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
    });
    let g = Generator::new(&config, &w).unwrap();
    let frames = 5;
    let c = random_mel(frames, 2);
    let bundle = g.condition(&c, &sample_latent(3, 100)).unwrap();
    let t_emb = g.step_embedding(1).unwrap();
    let x = FeatureMap::new(32, frames * 8, normal_vec(1, "x", 32 * frames * 8).iter().map(|&v| v as f32).collect())
        .unwrap();
    let skip = FeatureMap::new(32, frames * 8, normal_vec(2, "s", 32 * frames * 8).iter().map(|&v| v as f32).collect())
        .unwrap();
    let got = g.decoder_block(1, &x, Some(&skip), &bundle, &t_emb).unwrap();
    assert_eq!(got.steps, frames * 64);

    let p = "decoder.blocks.1";
    let t = |n: &str| w.get(&format!("{p}.{n}")).unwrap();
    let mut h = conv1d(&x.concat(&skip).unwrap(), t("fuse.weight"), Some(t("fuse.bias")), 1, 1, 0).unwrap();
    h = transposed_conv1d(&h, t("up.weight"), Some(t("up.bias")), 8).unwrap();
    for (j, &d) in [1usize, 3, 9].iter().enumerate() {
        let a = snake(&h, &t(&format!("sub.{j}.alpha")).data).unwrap();
        let mut a = location_variable_conv(&a, &bundle.decoder[1].kernels[j], 64, d).unwrap();
        a.add_assign(&h).unwrap();
        h = adaln_modulated(&a, &bundle.decoder[1].modulations[j]).unwrap();
    }
    let err = got.values.iter().zip(&h.values).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert!(err <= 1e-6, "max error {err}");
}
