use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataio::FeatureSequence;
use crate::numkernel::{Graph, ParamSet, Tensor};

fn random_clip(frames: usize, dim: usize, seed: u64) -> FeatureSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureSequence::new(
        frames,
        dim,
        (0..frames * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn small(kind: ModelKind) -> ModelConfig {
    ModelConfig {
        hidden_channels: 6,
        lstm_hidden: 5,
        lstm_layers: 2,
        head_hidden: 7,
        kernel_size: 3,
        levels_per_block: 3,
        num_stages: if kind.is_multi_stage() { 3 } else { 1 },
        ..ModelConfig::new(kind, 4)
    }
}

/// Earliest input frame whose value reaches the last frame's representation,
/// read off the exact input gradient. Weights are strictly positive and
/// biases positive so no relu is ever inactive and nothing cancels.
fn impulse_support(cfg: &ModelConfig) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tensors = ParamSet::<f64>::new();
    for spec in param_schema(cfg) {
        let n: usize = spec.shape.iter().product();
        let data = if spec.shape.len() == 1 {
            vec![0.1; n]
        } else {
            let fan: usize = spec.shape[1..].iter().product();
            (0..n).map(|_| rng.gen_range(0.5..1.0) / fan as f64).collect()
        };
        tensors.insert(spec.name, Tensor::new(spec.shape, data).unwrap());
    }
    let params = ModelParams::from_tensors(cfg, tensors).unwrap();
    // Every layer dilates by less than 2^L, so this overshoots any support.
    let rf_bound = 1 + cfg.num_stages * cfg.levels_per_block * (cfg.kernel_size - 1) * (1usize << cfg.levels_per_block);
    let t = rf_bound + 8;
    let mut g = Graph::<f64>::new();
    let bound = BoundParams::bind(&mut g, &params);
    let x = g.param(Tensor::full(&[1, t, cfg.input_dim], 1.0));
    let out = build_frames(&mut g, cfg, &bound, x).unwrap();
    let last = g.last_time(out.frames).unwrap();
    let ones = g.input(Tensor::full(&[1, cfg.hidden_channels], 1.0));
    let zero = g.input(Tensor::zeros(&[1]));
    let total = g.dense(last, ones, zero).unwrap();
    let grads = g.backward(total).unwrap();
    let dx = grads.get(x).unwrap();
    let first = (0..t)
        .find(|&f| {
            dx.data()[f * cfg.input_dim..(f + 1) * cfg.input_dim]
                .iter()
                .any(|&v| v != 0.0)
        })
        .unwrap();
    t - first
}

#[test]
fn tcn_schema_names_match_documented_layout() {
    let cfg = ModelConfig::new(ModelKind::Tcn, 64);
    let params = build_model(&cfg, 0).unwrap();
    let mut want = vec!["tcn.input.weight".to_string(), "tcn.input.bias".to_string()];
    for l in 0..5 {
        for part in ["dilated", "pointwise"] {
            want.push(format!("tcn.layers.{l}.{part}.weight"));
            want.push(format!("tcn.layers.{l}.{part}.bias"));
        }
    }
    for p in ["head.hidden", "head.out"] {
        want.push(format!("{p}.weight"));
        want.push(format!("{p}.bias"));
    }
    assert_eq!(params.names().collect::<Vec<_>>(), want);
    assert_eq!(params.get("tcn.input.weight").unwrap().shape(), &[64, 64, 1]);
    assert_eq!(params.get("tcn.layers.3.dilated.weight").unwrap().shape(), &[64, 64, 5]);
    assert_eq!(params.get("head.hidden.weight").unwrap().shape(), &[256, 64]);
    assert_eq!(params.get("head.out.weight").unwrap().shape(), &[3, 256]);
}

#[test]
fn mstcn_default_has_five_stages_of_five_layers() {
    let params = build_model(&ModelConfig::new(ModelKind::Mstcn, 64), 0).unwrap();
    for s in 0..5 {
        for l in 0..5 {
            assert!(params.get(&format!("stages.{s}.layers.{l}.dilated.weight")).is_some());
        }
        assert!(params.get(&format!("stages.{s}.layers.5.dilated.weight")).is_none());
    }
    assert!(params.names().all(|n| !n.starts_with("stages.5.")));
    assert_eq!(params.get("stages.0.input.weight").unwrap().shape(), &[64, 64, 1]);
    assert_eq!(params.get("stages.1.input.weight").unwrap().shape(), &[64, 3, 1]);
}

#[test]
fn same_seed_gives_identical_parameters() {
    for kind in ModelKind::ALL {
        let cfg = small(kind);
        assert_eq!(build_model(&cfg, 9).unwrap(), build_model(&cfg, 9).unwrap());
        assert_ne!(build_model(&cfg, 9).unwrap(), build_model(&cfg, 10).unwrap());
    }
}

#[test]
fn from_tensors_checks_names_and_shapes() {
    let cfg = small(ModelKind::Tcn);
    let mut t = build_model(&cfg, 0).unwrap().into_tensors();
    let w = t.swap_remove("tcn.input.weight").unwrap();
    assert!(ModelParams::from_tensors(&cfg, t.clone()).is_err());
    t.insert("tcn.input.weight".into(), w.reshape(&[6, 1, 4]).unwrap());
    assert!(ModelParams::from_tensors(&cfg, t).is_err());
}

#[test]
fn parameter_counts_order_lstm_mstcn_tcn() {
    let count = |k| build_model(&ModelConfig::new(k, 64), 0).unwrap().num_scalars();
    let (lstm, mstcn, tcn) = (count(ModelKind::Lstm), count(ModelKind::Mstcn), count(ModelKind::Tcn));
    assert!(lstm > mstcn && mstcn > tcn, "{lstm} {mstcn} {tcn}");
}

#[test]
fn zeroed_head_gives_uniform_log_probs() {
    for kind in ModelKind::ALL {
        let cfg = small(kind);
        let mut params = build_model(&cfg, 1).unwrap();
        for name in ["head.out.weight", "head.out.bias"] {
            params.tensors_mut()[name].data_mut().fill(0.0);
        }
        let p = forward_clip(&cfg, &params, &random_clip(9, 4, 2)).unwrap();
        for lp in &p.log_probs {
            assert!((lp - (1.0f32 / 3.0).ln()).abs() < 1e-6);
        }
        assert_eq!(p.predicted_label, 0);
    }
}

#[test]
fn predictions_are_normalized_and_shape_invariant_in_t() {
    for kind in ModelKind::ALL {
        let cfg = small(kind);
        let params = build_model(&cfg, 3).unwrap();
        for frames in [1, 5, 20] {
            let p = forward_clip(&cfg, &params, &random_clip(frames, 4, frames as u64)).unwrap();
            assert_eq!(p.log_probs.len(), 3);
            let total: f32 = p.log_probs.iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() < 1e-5);
            assert_eq!(p.predicted_label, argmax(&p.log_probs));
            match &p.per_stage_log_probs {
                Some(stages) => {
                    assert!(kind.is_multi_stage());
                    assert_eq!(stages.len(), cfg.num_stages);
                    assert!(stages.iter().all(|s| s.len() == 3));
                }
                None => assert!(!kind.is_multi_stage()),
            }
        }
    }
}

#[test]
fn forward_clip_is_pure() {
    let cfg = small(ModelKind::MstcnPp);
    let params = build_model(&cfg, 4).unwrap();
    let before = params.clone();
    let clip = random_clip(11, 4, 5);
    let a = forward_clip(&cfg, &params, &clip).unwrap();
    let b = forward_clip(&cfg, &params, &clip).unwrap();
    assert_eq!(a, b);
    assert_eq!(params, before);
}

#[test]
fn dimension_mismatch_is_a_data_error() {
    let cfg = small(ModelKind::Tcn);
    let params = build_model(&cfg, 0).unwrap();
    assert!(matches!(
        forward_clip(&cfg, &params, &random_clip(5, 3, 0)),
        Err(Error::Data(_))
    ));
}

#[test]
fn argmax_breaks_ties_low() {
    assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
    assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
}

#[test]
fn receptive_field_closed_form() {
    assert_eq!(receptive_field(&ModelConfig::new(ModelKind::Tcn, 64)).unwrap(), 125);
    assert_eq!(receptive_field(&ModelConfig::new(ModelKind::Mstcn, 64)).unwrap(), 621);
    assert_eq!(
        receptive_field(&ModelConfig::new(ModelKind::MstcnPp, 64)).unwrap(),
        1041
    );
    for kind in [ModelKind::Tcn, ModelKind::Mstcn, ModelKind::MstcnPp] {
        let cfg = ModelConfig {
            kernel_size: 1,
            ..ModelConfig::new(kind, 8)
        };
        assert_eq!(receptive_field(&cfg).unwrap(), 1);
    }
    assert!(matches!(
        receptive_field(&ModelConfig::new(ModelKind::Lstm, 8)),
        Err(Error::Config(_))
    ));
}

#[test]
fn impulse_support_matches_receptive_field() {
    for kind in [ModelKind::Tcn, ModelKind::Mstcn, ModelKind::MstcnPp] {
        for (k, levels, stages) in [(5, 5, 5), (3, 4, 2), (2, 3, 3)] {
            let cfg = ModelConfig {
                hidden_channels: 3,
                head_hidden: 2,
                kernel_size: k,
                levels_per_block: levels,
                num_stages: if kind.is_multi_stage() { stages } else { 1 },
                ..ModelConfig::new(kind, 2)
            };
            assert_eq!(
                impulse_support(&cfg),
                receptive_field(&cfg).unwrap(),
                "{kind} k={k} L={levels}"
            );
        }
    }
}

#[test]
fn causal_models_ignore_appended_frames() {
    for kind in [ModelKind::Tcn, ModelKind::Mstcn, ModelKind::MstcnPp] {
        let cfg = small(kind);
        let params = build_model(&cfg, 6).unwrap();
        let long = random_clip(30, 4, 7);
        let frames = |seq: &FeatureSequence| -> Vec<Tensor<f32>> {
            let mut g = Graph::<f32>::new();
            let bound = BoundParams::bind(&mut g, &params);
            let x = g.input(seq.to_tensor());
            let out = build_frames(&mut g, &cfg, &bound, x).unwrap();
            std::iter::once(out.frames)
                .chain(out.stage_logits)
                .map(|v| g.value(v).clone())
                .collect()
        };
        let full = frames(&long);
        let prefix = frames(&long.window(0, 17).unwrap());
        for (a, b) in full.iter().zip(&prefix) {
            let width = a.last_dim();
            assert_eq!(&a.data()[..17 * width], b.data(), "{kind}");
        }
    }
}

#[test]
fn later_stages_depend_on_earlier_stage_outputs() {
    for kind in [ModelKind::Mstcn, ModelKind::MstcnPp] {
        let cfg = small(kind);
        let params = build_model(&cfg, 8).unwrap();
        let clip = random_clip(10, 4, 9);
        let base = forward_clip(&cfg, &params, &clip).unwrap();
        let mut bumped = params.clone();
        // A uniform shift would cancel in the softmax; use a class-dependent one.
        let h = cfg.hidden_channels;
        for (i, v) in bumped.tensors_mut()["stages.0.output.weight"]
            .data_mut()
            .iter_mut()
            .enumerate()
        {
            *v += 0.3 * (i / h) as f32;
        }
        let after = forward_clip(&cfg, &bumped, &clip).unwrap();
        assert_ne!(base.log_probs, after.log_probs);
        let stages_base = base.per_stage_log_probs.unwrap();
        let stages_after = after.per_stage_log_probs.unwrap();
        assert_ne!(stages_base.last(), stages_after.last());
    }
}

fn dual_weights(g: &mut Graph<f64>, h: usize, k: usize, seed: u64, share: bool) -> DualDilationWeights {
    dual_weights_in(g, h, k, seed, share, -0.5..0.5)
}

fn dual_weights_in(
    g: &mut Graph<f64>,
    h: usize,
    k: usize,
    seed: u64,
    share: bool,
    range: std::ops::Range<f64>,
) -> DualDilationWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand = |shape: &[usize]| -> Tensor<f64> {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(range.clone())).collect()).unwrap()
    };
    let up = (rand(&[h, h, k]), rand(&[h]));
    let down = if share {
        up.clone()
    } else {
        (rand(&[h, h, k]), rand(&[h]))
    };
    let fuse = (rand(&[h, 2 * h, 1]), rand(&[h]));
    let pw = (rand(&[h, h, 1]), rand(&[h]));
    let mut pair = |(w, b): (Tensor<f64>, Tensor<f64>)| (g.param(w), g.param(b));
    DualDilationWeights {
        branch_up: pair(up),
        branch_down: pair(down),
        fuse: pair(fuse),
        pointwise: pair(pw),
    }
}

#[test]
fn dual_layer_middle_index_equals_single_dilation_with_shared_weights() {
    // With L = 5, layer 2 has both dilations equal to 4; duplicated branch
    // weights then make the fuse conv see the same features twice.
    let (h, k, t) = (3, 3, 25);
    let mut g = Graph::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = g.input(Tensor::new(vec![t, h], (0..t * h).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap());
    let w = dual_weights(&mut g, h, k, 2, true);
    let y = dual_dilation_layer(&mut g, x, 2, 5, &w, true).unwrap();

    // Reference: one branch, the fuse weights summed over the duplicated
    // halves, everything else identical.
    let fw = g.value(w.fuse.0).clone();
    let mut folded = vec![0.0; h * h];
    for o in 0..h {
        for i in 0..h {
            folded[o * h + i] = fw.data()[o * 2 * h + i] + fw.data()[o * 2 * h + h + i];
        }
    }
    let folded = g.param(Tensor::new(vec![h, h, 1], folded).unwrap());
    let branch = g.conv1d_dilated(x, w.branch_up.0, w.branch_up.1, 4, true).unwrap();
    let fused = g.conv1d_dilated(branch, folded, w.fuse.1, 1, true).unwrap();
    let r = g.relu(fused).unwrap();
    let r = g.conv1d_dilated(r, w.pointwise.0, w.pointwise.1, 1, true).unwrap();
    let reference = g.add(x, r).unwrap();
    assert!(g.value(y).max_abs_diff(g.value(reference)) < 1e-12);
}

#[test]
fn dual_layer_with_zero_projections_is_identity() {
    let (h, k, t) = (4, 3, 16);
    let mut g = Graph::<f64>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xt = Tensor::new(vec![t, h], (0..t * h).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let x = g.input(xt.clone());
    let mut w = dual_weights(&mut g, h, k, 4, false);
    w.pointwise = (g.param(Tensor::zeros(&[h, h, 1])), g.param(Tensor::zeros(&[h])));
    for layer in 0..4 {
        let y = dual_dilation_layer(&mut g, x, layer, 4, &w, true).unwrap();
        assert_eq!(g.value(y), &xt);
    }
    assert!(dual_dilation_layer(&mut g, x, 4, 4, &w, true).is_err());
}

#[test]
fn dual_layer_impulse_width_follows_wider_branch() {
    let (h, k, levels, t) = (2, 3, 4, 40);
    for layer in 0..levels {
        let mut g = Graph::<f64>::new();
        let x = g.param(Tensor::full(&[t, h], 1.0));
        // Positive weights and biases keep the relu open everywhere.
        let w = dual_weights_in(&mut g, h, k, 5, false, 0.2..1.0);
        let y = dual_dilation_layer(&mut g, x, layer, levels, &w, true).unwrap();
        let last = g.last_time(y).unwrap();
        let ones = g.input(Tensor::full(&[1, h], 1.0));
        let zero = g.input(Tensor::zeros(&[1]));
        let s = g.dense(last, ones, zero).unwrap();
        let grads = g.backward(s).unwrap();
        let dx = grads.get(x).unwrap();
        let first = (0..t)
            .find(|&f| dx.data()[f * h..(f + 1) * h].iter().any(|&v| v != 0.0))
            .unwrap();
        let wider = (1usize << layer).max(1 << (levels - 1 - layer));
        assert_eq!(t - first, 1 + (k - 1) * wider, "layer {layer}");
    }
}
