use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::geometry::{Point, ProjectionFactor};
use crate::pipeline::BuildingSample;

fn random_sample(rng: &mut ChaCha8Rng, chip_px: usize, i: usize) -> BuildingSample {
    let n = chip_px * chip_px;
    BuildingSample {
        building_id: format!("b{i:06}"),
        city_id: "test".into(),
        chip_px,
        chip_amp: (0..n).map(|_| rng.random_range(0.0..3.0)).collect(),
        chip_mask: (0..n).map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 }).collect(),
        fbb_extent_u_m: rng.random_range(8.0..30.0),
        fbb_extent_v_m: rng.random_range(8.0..30.0),
        cos_theta: rng.random_range(0.6..0.9),
        target_lbbb_m: rng.random_range(10.0..60.0),
        ref_height_m: 20.0,
        patch_origin_px: (0, 0),
        chip_origin_m: Point::new(0.0, 0.0),
        pixel_size_m: 1.0,
        fbb_center: Point::new(0.0, 0.0),
        range_azimuth_deg: 90.0,
        centroid: Point::new(0.0, 0.0),
        footprint_area_m2: 100.0,
        mask_pixels: 1,
        truncated: false,
    }
}

fn samples(seed: u64, chip_px: usize, n: usize) -> Vec<BuildingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_sample(&mut rng, chip_px, i)).collect()
}

fn refs(v: &[BuildingSample]) -> Vec<&BuildingSample> {
    v.iter().collect()
}

fn small_config(chip_px: usize, convs: Vec<ConvSpec>, fc: Vec<usize>, seed: u64) -> ModelConfig {
    ModelConfig {
        chip_px,
        conv_layers: convs,
        fc_widths: fc,
        seed,
        ..ModelConfig::default()
    }
}

#[test]
fn default_parameter_count() {
    let s = TrainState::new(ModelConfig::default()).unwrap();
    assert_eq!(s.param_count(), 408 + 1168 + 4640 + 2304 + 65);
}

#[test]
fn init_is_seeded() {
    let a = TrainState::new(ModelConfig::default()).unwrap();
    let b = TrainState::new(ModelConfig::default()).unwrap();
    assert_eq!(a, b);
    let c = TrainState::new(ModelConfig {
        seed: 1,
        ..ModelConfig::default()
    })
    .unwrap();
    assert_ne!(a.params, c.params);
    assert!(a.params[1].data().iter().all(|&v| v == 0.0));
}

#[test]
fn bad_final_width_is_a_config_error() {
    let c = small_config(8, vec![], vec![4, 3], 0);
    assert!(matches!(TrainState::new(c), Err(Error::Config(_))));
}

#[test]
fn zero_weights_give_zero() {
    let mut st = TrainState::new(small_config(8, vec![ConvSpec::new(2, 3, 2)], vec![4, 1], 0)).unwrap();
    for p in &mut st.params {
        p.data_mut().fill(0.0);
    }
    let s = samples(1, 8, 3);
    assert_eq!(forward(&st, &refs(&s)).unwrap(), vec![0.0; 3]);
    st.config.normalization = Some(Normalization {
        feature_mean: vec![0.0; 3],
        feature_std: vec![1.0; 3],
        target_mean: 17.5,
        target_std: 3.0,
    });
    assert_eq!(forward(&st, &refs(&s)).unwrap(), vec![17.5; 3]);
}

#[test]
fn duplicate_samples_predict_identically() {
    let st = TrainState::new(small_config(16, vec![ConvSpec::new(4, 3, 2)], vec![8, 1], 3)).unwrap();
    let s = samples(2, 16, 1);
    let out = forward(&st, &[&s[0], &s[0], &s[0]]).unwrap();
    assert_eq!(out[0], out[1]);
    assert_eq!(out[1], out[2]);
}

#[test]
fn wrong_chip_size_names_the_input_layer() {
    let st = TrainState::new(small_config(16, vec![], vec![1], 0)).unwrap();
    let s = samples(2, 8, 1);
    match forward(&st, &refs(&s)) {
        Err(Error::Shape { layer, .. }) => assert_eq!(layer, "input"),
        other => panic!("{other:?}"),
    }
}

/// Direct evaluation with explicit bounds checks instead of a padded buffer.
fn naive_forward(st: &TrainState, s: &BuildingSample) -> f64 {
    let cfg = &st.config;
    let n = cfg.chip_px;
    let mut chans: Vec<Vec<f64>> = vec![
        s.chip_amp.iter().map(|&v| v as f64).collect(),
        s.chip_mask.iter().map(|&v| v as f64).collect(),
    ];
    let mut hw = n;
    for (l, spec) in cfg.conv_layers.iter().enumerate() {
        let w = st.params[2 * l].data();
        let b = st.params[2 * l + 1].data();
        let (k, stride) = (spec.kernel as i64, spec.stride as i64);
        let pad = k / 2;
        let out_hw = ((hw as i64 + 2 * pad - k) / stride + 1) as usize;
        let in_c = chans.len();
        let mut next = vec![vec![0.0; out_hw * out_hw]; spec.out_channels];
        for (oc, plane) in next.iter_mut().enumerate() {
            for oy in 0..out_hw as i64 {
                for ox in 0..out_hw as i64 {
                    let mut acc = b[oc];
                    for (ic, ch) in chans.iter().enumerate() {
                        for ky in 0..k {
                            for kx in 0..k {
                                let y = oy * stride + ky - pad;
                                let x = ox * stride + kx - pad;
                                if y >= 0 && x >= 0 && (y as usize) < hw && (x as usize) < hw {
                                    let wi = ((oc * in_c + ic) * k as usize + ky as usize) * k as usize
                                        + kx as usize;
                                    acc += w[wi] * ch[y as usize * hw + x as usize];
                                }
                            }
                        }
                    }
                    plane[oy as usize * out_hw + ox as usize] = acc.max(0.0);
                }
            }
        }
        chans = next;
        hw = out_hw;
    }
    let mut h: Vec<f64> = chans.iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let f = s.features();
    match &cfg.normalization {
        Some(nz) => h.extend((0..3).map(|k| (f[k] - nz.feature_mean[k]) / nz.feature_std[k])),
        None => h.extend(f),
    }
    let off = 2 * cfg.conv_layers.len();
    for (l, &width) in cfg.fc_widths.iter().enumerate() {
        let w = st.params[off + 2 * l].data();
        let b = st.params[off + 2 * l + 1].data();
        let last = l + 1 == cfg.fc_widths.len();
        h = (0..width)
            .map(|o| {
                let z = b[o] + (0..h.len()).map(|i| w[o * h.len() + i] * h[i]).sum::<f64>();
                if last {
                    z
                } else {
                    z.max(0.0)
                }
            })
            .collect();
    }
    match &cfg.normalization {
        Some(nz) => h[0] * nz.target_std + nz.target_mean,
        None => h[0],
    }
}

fn randomize_biases(st: &mut TrainState, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, p) in st.params.iter_mut().enumerate() {
        if i % 2 == 1 {
            for v in p.data_mut() {
                *v = rng.random_range(-0.2..0.2);
            }
        }
    }
}

#[test]
fn tiny_network_matches_direct_evaluation() {
    let mut st = TrainState::new(small_config(3, vec![ConvSpec::new(1, 3, 1)], vec![1], 4)).unwrap();
    randomize_biases(&mut st, 5);
    let s = samples(6, 3, 2);
    let got = forward(&st, &refs(&s)).unwrap();
    for (g, smp) in got.iter().zip(&s) {
        assert!((g - naive_forward(&st, smp)).abs() < 1e-12);
    }
}

#[test]
fn larger_networks_match_direct_evaluation() {
    let configs = [
        small_config(12, vec![ConvSpec::new(3, 5, 2), ConvSpec::new(4, 3, 2)], vec![6, 1], 1),
        small_config(9, vec![ConvSpec::new(2, 4, 3)], vec![5, 3, 1], 2),
        small_config(7, vec![], vec![1], 3),
    ];
    for cfg in configs {
        let mut st = TrainState::new(cfg).unwrap();
        randomize_biases(&mut st, 8);
        let s = samples(9, st.config.chip_px, 4);
        st.config.normalization = Some(Normalization::fit(&refs(&s)).unwrap());
        let got = forward(&st, &refs(&s)).unwrap();
        for (g, smp) in got.iter().zip(&s) {
            let want = naive_forward(&st, smp);
            assert!((g - want).abs() <= 1e-10 * want.abs().max(1.0), "{g} vs {want}");
        }
    }
}

#[test]
fn mse_examples() {
    assert_eq!(mse_loss(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    assert_eq!(mse_loss(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 2.5);
    let c = 3.25;
    let t = [4.0, -1.0, 10.0, 0.5];
    let p: Vec<f64> = t.iter().map(|v| v + c).collect();
    assert!((mse_loss(&p, &t).unwrap() - c * c).abs() < 1e-12);
    assert!(mse_loss(&[], &[]).is_err());
    assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
}

fn batch_loss(st: &TrainState, s: &[&BuildingSample]) -> f64 {
    let pred = forward(st, s).unwrap();
    let t: Vec<f64> = s.iter().map(|x| x.target_lbbb_m).collect();
    mse_loss(&pred, &t).unwrap()
}

#[test]
fn gradients_match_finite_differences() {
    let configs = [
        small_config(8, vec![ConvSpec::new(3, 3, 1)], vec![4, 1], 11),
        small_config(10, vec![ConvSpec::new(2, 5, 2), ConvSpec::new(3, 3, 2)], vec![5, 1], 12),
        small_config(9, vec![ConvSpec::new(2, 3, 3)], vec![3, 3, 1], 13),
        small_config(6, vec![], vec![4, 1], 14),
        small_config(12, vec![ConvSpec::new(4, 4, 2)], vec![1], 15),
        small_config(7, vec![ConvSpec::new(2, 2, 1), ConvSpec::new(2, 3, 1)], vec![3, 1], 16),
    ];
    let eps = 1e-5;
    for (ci, cfg) in configs.into_iter().enumerate() {
        let mut st = TrainState::new(cfg).unwrap();
        randomize_biases(&mut st, 20 + ci as u64);
        let s = samples(30 + ci as u64, st.config.chip_px, 3);
        let r = refs(&s);
        st.config.normalization = Some(Normalization::fit(&r).unwrap());
        let g = backward(&st, &r).unwrap();
        assert!((g.loss - batch_loss(&st, &r)).abs() < 1e-9 * g.loss.max(1.0));
        let mut worst = 0.0f64;
        for t in 0..st.params.len() {
            for i in 0..st.params[t].len() {
                let orig = st.params[t].data()[i];
                st.params[t].data_mut()[i] = orig + eps;
                let up = batch_loss(&st, &r);
                st.params[t].data_mut()[i] = orig - eps;
                let down = batch_loss(&st, &r);
                st.params[t].data_mut()[i] = orig;
                let num = (up - down) / (2.0 * eps);
                let ana = g.tensors[t].data()[i];
                let rel = (ana - num).abs() / (ana.abs() + num.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "config {ci}: relative error {worst}");
    }
}

#[test]
fn linear_model_gradient_has_closed_form() {
    let st = {
        let mut st = TrainState::new(small_config(5, vec![], vec![1], 2)).unwrap();
        randomize_biases(&mut st, 3);
        st
    };
    let s = samples(4, 5, 6);
    let r = refs(&s);
    let g = backward(&st, &r).unwrap();
    let w = st.params[0].data();
    let b = st.params[1].data()[0];
    let n = s.len() as f64;
    let mut gw = [0.0; 5];
    let mut gb = 0.0;
    for smp in &s {
        let mean = |v: &[f32]| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64;
        let f = smp.features();
        let x = [mean(&smp.chip_amp), mean(&smp.chip_mask), f[0], f[1], f[2]];
        let pred = b + (0..5).map(|i| w[i] * x[i]).sum::<f64>();
        let e = pred - smp.target_lbbb_m;
        gb += 2.0 * e / n;
        for i in 0..5 {
            gw[i] += 2.0 * e * x[i] / n;
        }
    }
    assert!((g.tensors[1].data()[0] - gb).abs() < 1e-9 * gb.abs().max(1.0));
    for i in 0..5 {
        assert!((g.tensors[0].data()[i] - gw[i]).abs() < 1e-9 * gw[i].abs().max(1.0));
    }
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let mut st = TrainState::new(small_config(8, vec![ConvSpec::new(2, 3, 2)], vec![4, 1], 1)).unwrap();
    let before = st.params.clone();
    let s = samples(5, 8, 10);
    let hyper = TrainHyper {
        learning_rate: 0.0,
        batch_size: 4,
        epochs: 2,
        ..TrainHyper::default()
    };
    train(&mut st, &refs(&s), &hyper).unwrap();
    assert_eq!(st.params, before);
    assert_eq!(st.step, 6);
    assert_eq!(st.loss_history.len(), 6);
}

#[test]
fn training_is_reproducible_and_resumable() {
    let cfg = small_config(8, vec![ConvSpec::new(3, 3, 2)], vec![4, 1], 7);
    let s = samples(8, 8, 20);
    let r = refs(&s);
    let hyper = TrainHyper {
        batch_size: 6,
        epochs: 3,
        seed: 9,
        ..TrainHyper::default()
    };
    let mut a = TrainState::new(cfg.clone()).unwrap();
    train(&mut a, &r, &hyper).unwrap();
    let mut b = TrainState::new(cfg).unwrap();
    train(&mut b, &r, &hyper).unwrap();
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("ckpt");
    let mut c = TrainState::new(a.config.clone()).unwrap();
    train(
        &mut c,
        &r,
        &TrainHyper {
            max_steps: Some(5),
            ..hyper.clone()
        },
    )
    .unwrap();
    save_checkpoint(&stem, &c, Some("abc")).unwrap();
    let (mut d, header) = load_checkpoint(&stem).unwrap();
    assert_eq!(header.config_hash.as_deref(), Some("abc"));
    assert_eq!(d, c);
    train(&mut d, &r, &hyper).unwrap();
    assert_eq!(d, a);
}

#[test]
fn truncated_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("ckpt");
    let st = TrainState::new(small_config(8, vec![], vec![1], 0)).unwrap();
    save_checkpoint(&stem, &st, None).unwrap();
    let bin = dir.path().join("ckpt.bin");
    let bytes = std::fs::read(&bin).unwrap();
    std::fs::write(&bin, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(load_checkpoint(&stem), Err(Error::Format { .. })));
}

#[test]
fn loss_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("loss.csv");
    write_loss_csv(&p, &[3.5, 2.25, 1.0], Some("h")).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("# config_hash=h\nstep,loss\n1,3.5\n"));
    assert_eq!(read_loss_csv(&p).unwrap(), vec![3.5, 2.25, 1.0]);
}

#[test]
fn exploding_learning_rate_reports_divergence() {
    let mut st = TrainState::new(small_config(8, vec![ConvSpec::new(2, 3, 2)], vec![4, 1], 1)).unwrap();
    let s = samples(5, 8, 8);
    let hyper = TrainHyper {
        learning_rate: 1e300,
        batch_size: 4,
        epochs: 20,
        ..TrainHyper::default()
    };
    assert!(matches!(
        train(&mut st, &refs(&s), &hyper),
        Err(Error::Divergence { .. })
    ));
}

#[test]
fn single_precision_inference_is_close() {
    let st = TrainState::new(small_config(16, vec![ConvSpec::new(4, 3, 2)], vec![8, 1], 3)).unwrap();
    let s = samples(2, 16, 5);
    let a = forward_with_precision(&st, &refs(&s), Precision::F64).unwrap();
    let b = forward_with_precision(&st, &refs(&s), Precision::F32).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-4 * x.abs().max(1.0));
    }
}

#[test]
fn learns_an_affine_map_of_the_features() {
    let mut s = samples(40, 8, 64);
    for smp in &mut s {
        smp.target_lbbb_m = 1.5 * smp.fbb_extent_u_m - 0.4 * smp.fbb_extent_v_m + 30.0 * smp.cos_theta + 3.0;
    }
    let r = refs(&s);
    let mut cfg = small_config(8, vec![ConvSpec::new(4, 3, 2)], vec![16, 1], 5);
    cfg.normalization = Some(Normalization::fit(&r).unwrap());
    let mut st = TrainState::new(cfg).unwrap();
    let before = batch_loss(&st, &r);
    let hyper = TrainHyper {
        learning_rate: 1e-2,
        batch_size: 16,
        epochs: 150,
        ..TrainHyper::default()
    };
    train(&mut st, &r, &hyper).unwrap();
    let after = batch_loss(&st, &r);
    assert!(after * 100.0 < before, "{before} -> {after}");
}

#[test]
fn perfect_fit_has_zero_gradient() {
    let st = TrainState::new(small_config(8, vec![ConvSpec::new(2, 3, 2)], vec![4, 1], 2)).unwrap();
    let mut s = samples(3, 8, 5);
    let pred = forward(&st, &refs(&s)).unwrap();
    for (smp, p) in s.iter_mut().zip(pred) {
        smp.target_lbbb_m = p;
    }
    let g = backward(&st, &refs(&s)).unwrap();
    assert_eq!(g.loss, 0.0);
    assert!(g.tensors.iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
}

#[test]
fn batch_permutation_permutes_predictions() {
    let st = TrainState::new(small_config(8, vec![ConvSpec::new(3, 3, 2)], vec![4, 1], 6)).unwrap();
    let s = samples(7, 8, 6);
    let order = [3, 0, 5, 1, 4, 2];
    let a = forward(&st, &refs(&s)).unwrap();
    let shuffled: Vec<&BuildingSample> = order.iter().map(|&i| &s[i]).collect();
    let b = forward(&st, &shuffled).unwrap();
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(b[k], a[i]);
    }
}

#[test]
fn height_from_predicted_extent() {
    let mut st = TrainState::new(small_config(4, vec![], vec![1], 0)).unwrap();
    for p in &mut st.params {
        p.data_mut().fill(0.0);
    }
    st.params[1].data_mut()[0] = 30.0;
    let mut s = samples(1, 4, 1).remove(0);
    s.fbb_extent_u_m = 20.0;
    s.cos_theta = 0.5;
    let p = predict_height(&st, &s, ProjectionFactor::Cos).unwrap();
    assert!((p.height_m - 20.0).abs() < 1e-9 && !p.clamped);
    s.fbb_extent_u_m = 35.0;
    let p = predict_height(&st, &s, ProjectionFactor::Cos).unwrap();
    assert_eq!(p.height_m, 0.0);
    assert!(p.clamped);
}
