//! Generators for the bundled workloads.
//!
//! CNNs are built from their published layer shapes with pooling and
//! residual additions fused into the producing convolution. Recurrent and
//! NAS-style networks are approximated from their published hyperparameters
//! (layer counts, hidden sizes, cell structure). All byte counts assume one
//! byte per element; activations and MACs scale with the batch, weights do
//! not.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::workload::{Layer, WorkloadGraph};

/// Batch of the bundled workloads. At this size activations rather than
/// weight fetches dominate the traffic of the convolutional networks.
pub const DEFAULT_BATCH: u64 = 2048;

/// Every bundled workload, in the order reports list them.
pub const BUNDLED: [&str; 16] = [
    "darknet19",
    "densenet",
    "zfnet",
    "gnmt",
    "vgg",
    "lstm",
    "resnet50",
    "resnet101",
    "resnet152",
    "resnext50",
    "pnasnet",
    "transformer",
    "transformer_cell",
    "ires",
    "googlenet",
    "stress_compute",
];

/// Workloads built layer by layer from published network definitions.
pub const DERIVED: [&str; 6] = ["resnet50", "resnet152", "googlenet", "zfnet", "vgg", "darknet19"];

/// Synthetic workload whose layers are all compute bound.
pub const COMPUTE_BOUND: &str = "stress_compute";

/// Workload whose traffic is dominated by multicasts.
pub const MULTICAST_HEAVY: &str = "zfnet";

/// Builds a bundled workload by name at the default batch.
pub fn build(name: &str) -> Option<WorkloadGraph> {
    build_batched(name, DEFAULT_BATCH)
}

/// Builds a bundled workload by name. The compute-bound workload ignores
/// `batch`.
pub fn build_batched(name: &str, batch: u64) -> Option<WorkloadGraph> {
    let layers = match name {
        "darknet19" => darknet19(batch),
        "densenet" => densenet121(batch),
        "zfnet" => zfnet(batch),
        "gnmt" => gnmt(batch),
        "vgg" => vgg16(batch),
        "lstm" => lstm(batch),
        "resnet50" => resnet(&[3, 4, 6, 3], batch),
        "resnet101" => resnet(&[3, 4, 23, 3], batch),
        "resnet152" => resnet(&[3, 8, 36, 3], batch),
        "resnext50" => resnext50(batch),
        "pnasnet" => pnasnet(batch),
        "transformer" => transformer(6, 6, 512, 2048, 128, 32_000, batch),
        "transformer_cell" => transformer(1, 0, 1024, 4096, 512, 0, batch),
        "ires" => inception_resnet(batch),
        "googlenet" => googlenet(batch),
        "stress_compute" => stress_compute(),
        _ => return None,
    };
    Some(WorkloadGraph::new(name, layers).expect("bundled workloads are well formed"))
}

#[derive(Debug, Clone, Copy)]
struct Shape {
    h: u64,
    w: u64,
    c: u64,
}

impl Shape {
    fn elems(self) -> u64 {
        self.h * self.w * self.c
    }
}

/// Incremental builder tracking the output shape of every layer.
struct Net {
    batch: u64,
    layers: Vec<Layer>,
    shapes: BTreeMap<String, Shape>,
}

#[derive(Clone, Copy)]
struct Conv {
    out_c: u64,
    k: u64,
    stride: u64,
    groups: u64,
}

const fn conv(out_c: u64, k: u64, stride: u64) -> Conv {
    Conv { out_c, k, stride, groups: 1 }
}

impl Net {
    fn new(batch: u64) -> Self {
        Self { batch, layers: Vec::new(), shapes: BTreeMap::new() }
    }

    fn shape(&self, id: &str) -> Shape {
        self.shapes[id]
    }

    fn push(&mut self, id: &str, preds: &[&str], macs: u64, ifmap: u64, weights: u64, out: Shape) {
        self.layers.push(Layer {
            id: id.to_string(),
            macs: macs * self.batch,
            ifmap_bytes: ifmap * self.batch,
            weight_bytes: weights,
            ofmap_bytes: out.elems() * self.batch,
            predecessors: preds.iter().map(|p| p.to_string()).collect(),
        });
        self.shapes.insert(id.to_string(), out);
    }

    /// Convolution over the channel concatenation of `inputs`; `residual`
    /// layers are added to the output and only contribute dependencies.
    fn conv(&mut self, id: &str, inputs: &[&str], residual: &[&str], c: Conv) -> Shape {
        let (h, w) = {
            let s = self.shape(inputs[0]);
            (s.h, s.w)
        };
        let in_c: u64 = inputs.iter().map(|i| self.shape(i).c).sum();
        self.conv_from(id, inputs, residual, Shape { h, w, c: in_c }, c)
    }

    fn conv_from(&mut self, id: &str, inputs: &[&str], residual: &[&str], input: Shape, c: Conv) -> Shape {
        let out = Shape { h: input.h.div_ceil(c.stride), w: input.w.div_ceil(c.stride), c: c.out_c };
        let per_out = (input.c / c.groups) * c.k * c.k;
        let preds: Vec<&str> = inputs.iter().chain(residual).copied().collect();
        self.push(id, &preds, out.elems() * per_out, input.elems(), per_out * c.out_c, out);
        out
    }

    /// Depthwise-separable convolution.
    fn sep(&mut self, id: &str, inputs: &[&str], residual: &[&str], out_c: u64, k: u64, stride: u64) -> Shape {
        let s = self.shape(inputs[0]);
        let in_c: u64 = inputs.iter().map(|i| self.shape(i).c).sum();
        let out = Shape { h: s.h.div_ceil(stride), w: s.w.div_ceil(stride), c: out_c };
        let macs = out.h * out.w * (in_c * k * k + in_c * out_c);
        let weights = in_c * k * k + in_c * out_c;
        let preds: Vec<&str> = inputs.iter().chain(residual).copied().collect();
        self.push(id, &preds, macs, s.h * s.w * in_c, weights, out);
        out
    }

    /// Folds a pooling stage into the output of `id`.
    fn pool(&mut self, id: &str, stride: u64) {
        let s = self.shapes.get_mut(id).expect("pooled layer exists");
        s.h = s.h.div_ceil(stride);
        s.w = s.w.div_ceil(stride);
        let elems = s.elems();
        let layer = self.layers.iter_mut().rev().find(|l| l.id == id).expect("pooled layer exists");
        layer.ofmap_bytes = elems * self.batch;
    }

    /// Fully connected layer over the flattened input (or its global average
    /// when `global_pool` is set).
    fn fc(&mut self, id: &str, input: &str, out: u64, global_pool: bool) {
        let s = self.shape(input);
        let in_features = if global_pool { s.c } else { s.elems() };
        self.push(id, &[input], in_features * out, s.elems(), in_features * out, Shape { h: 1, w: 1, c: out });
    }

    /// Token-wise linear layer on a `[seq, features]` activation.
    fn linear(&mut self, id: &str, inputs: &[&str], residual: &[&str], out: u64) -> Shape {
        let seq = self.shape(inputs[0]).h;
        let in_f: u64 = inputs.iter().map(|i| self.shape(i).c).sum();
        let preds: Vec<&str> = inputs.iter().chain(residual).copied().collect();
        let shape = Shape { h: seq, w: 1, c: out };
        self.push(id, &preds, seq * in_f * out, seq * in_f, in_f * out, shape);
        shape
    }

    /// Scaled dot-product attention with softmax, queries from `q`, keys and
    /// values from `kv` (two layers).
    fn attention(&mut self, id: &str, q: &str, k: &str, v: &str) -> Shape {
        let sq = self.shape(q);
        let sk = self.shape(k);
        let macs = 2 * sq.h * sk.h * sq.c;
        let out = Shape { h: sq.h, w: 1, c: sq.c };
        let preds: &[&str] = if k == v { &[q, k] } else { &[q, k, v] };
        self.push(id, preds, macs, sq.elems() + 2 * sk.elems(), 0, out);
        out
    }

    /// Recurrent layer unrolled over `seq` steps: 4 gates of `hidden` units.
    fn lstm(&mut self, id: &str, inputs: &[&str], residual: &[&str], hidden: u64) -> Shape {
        let seq = self.shape(inputs[0]).h;
        let in_f: u64 = inputs.iter().map(|i| self.shape(i).c).sum();
        let weights = 4 * hidden * (in_f + hidden);
        let preds: Vec<&str> = inputs.iter().chain(residual).copied().collect();
        let out = Shape { h: seq, w: 1, c: hidden };
        self.push(id, &preds, seq * weights, seq * in_f, weights, out);
        out
    }

    fn input(&mut self, id: &str, shape: Shape) {
        self.shapes.insert(id.to_string(), shape);
    }

    fn finish(self) -> Vec<Layer> {
        self.layers
    }
}

const IMAGE: Shape = Shape { h: 224, w: 224, c: 3 };

/// Removes the pseudo input layer from predecessor lists.
fn from_input(layers: Vec<Layer>) -> Vec<Layer> {
    layers
        .into_iter()
        .map(|mut l| {
            l.predecessors.retain(|p| p != "input");
            l
        })
        .collect()
}

fn resnet(blocks: &[usize; 4], batch: u64) -> Vec<Layer> {
    bottleneck_net(blocks, &[64, 128, 256, 512], 1, batch)
}

fn resnext50(batch: u64) -> Vec<Layer> {
    bottleneck_net(&[3, 4, 6, 3], &[128, 256, 512, 1024], 32, batch)
}

/// ResNet/ResNeXt body. The block output width is 256, 512, 1024, 2048; the
/// inner width per stage comes from `mids`.
fn bottleneck_net(blocks: &[usize; 4], mids: &[u64; 4], groups: u64, batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", IMAGE);
    net.conv("conv1", &["input"], &[], conv(64, 7, 2));
    net.pool("conv1", 2);
    let mut prev = String::from("conv1");
    for (stage, (&count, &mid)) in blocks.iter().zip(mids).enumerate() {
        let out = 256u64 << stage;
        for b in 0..count {
            let name = format!("res{}{}", stage + 2, block_suffix(b));
            let stride = if b == 0 && stage > 0 { 2 } else { 1 };
            let shortcut = if b == 0 {
                let id = format!("{name}_proj");
                net.conv(&id, &[&prev], &[], conv(out, 1, stride));
                id
            } else {
                prev.clone()
            };
            let a = format!("{name}_a");
            let bb = format!("{name}_b");
            let c = format!("{name}_c");
            net.conv(&a, &[&prev], &[], conv(mid, 1, 1));
            net.conv(&bb, &[&a], &[], Conv { groups, ..conv(mid, 3, stride) });
            net.conv(&c, &[&bb], &[&shortcut], conv(out, 1, 1));
            prev = c;
        }
    }
    net.fc("fc", &prev, 1000, true);
    from_input(net.finish())
}

fn block_suffix(b: usize) -> String {
    if b < 26 {
        char::from(b'a' + b as u8).to_string()
    } else {
        format!("z{b}")
    }
}

fn vgg16(batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", IMAGE);
    let mut prev = String::from("input");
    for (stage, (&convs, &ch)) in [2usize, 2, 3, 3, 3].iter().zip(&[64u64, 128, 256, 512, 512]).enumerate() {
        for i in 0..convs {
            let id = format!("conv{}_{}", stage + 1, i + 1);
            net.conv(&id, &[&prev], &[], conv(ch, 3, 1));
            prev = id;
        }
        net.pool(&prev, 2);
    }
    net.fc("fc6", &prev, 4096, false);
    net.fc("fc7", "fc6", 4096, false);
    net.fc("fc8", "fc7", 1000, false);
    from_input(net.finish())
}

fn zfnet(batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", IMAGE);
    // 224 -> 110 -> pool 55 -> 26 -> pool 13 -> ... -> pool 6
    net.conv_from("conv1", &["input"], &[], Shape { h: 220, w: 220, c: 3 }, conv(96, 7, 2));
    net.pool("conv1", 2);
    net.conv_from("conv2", &["conv1"], &[], Shape { h: 52, w: 52, c: 96 }, conv(256, 5, 2));
    net.pool("conv2", 2);
    net.conv("conv3", &["conv2"], &[], conv(384, 3, 1));
    net.conv("conv4", &["conv3"], &[], conv(384, 3, 1));
    net.conv("conv5", &["conv4"], &[], conv(256, 3, 1));
    net.pool("conv5", 2);
    let s = net.shape("conv5");
    net.shapes.insert("conv5".into(), Shape { h: 6, w: 6, ..s });
    net.fc("fc6", "conv5", 4096, false);
    net.fc("fc7", "fc6", 4096, false);
    net.fc("fc8", "fc7", 1000, false);
    let mut layers = from_input(net.finish());
    // keep the published 6x6x256 pool output
    layers[4].ofmap_bytes = 6 * 6 * 256 * batch;
    layers
}

fn darknet19(batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", IMAGE);
    let plan: &[(u64, u64, bool)] = &[
        (32, 3, true),
        (64, 3, true),
        (128, 3, false),
        (64, 1, false),
        (128, 3, true),
        (256, 3, false),
        (128, 1, false),
        (256, 3, true),
        (512, 3, false),
        (256, 1, false),
        (512, 3, false),
        (256, 1, false),
        (512, 3, true),
        (1024, 3, false),
        (512, 1, false),
        (1024, 3, false),
        (512, 1, false),
        (1024, 3, false),
        (1000, 1, false),
    ];
    let mut prev = String::from("input");
    for (i, &(ch, k, pool)) in plan.iter().enumerate() {
        let id = format!("conv{}", i + 1);
        net.conv(&id, &[&prev], &[], conv(ch, k, 1));
        if pool {
            net.pool(&id, 2);
        }
        prev = id;
    }
    from_input(net.finish())
}

fn googlenet(batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", IMAGE);
    net.conv("conv1", &["input"], &[], conv(64, 7, 2));
    net.pool("conv1", 2);
    net.conv("conv2", &["conv1"], &[], conv(64, 1, 1));
    net.conv("conv3", &["conv2"], &[], conv(192, 3, 1));
    net.pool("conv3", 2);
    // (name, 1x1, 3x3 reduce, 3x3, 5x5 reduce, 5x5, pool proj, pool after)
    let modules: &[(&str, [u64; 6], bool)] = &[
        ("3a", [64, 96, 128, 16, 32, 32], false),
        ("3b", [128, 128, 192, 32, 96, 64], true),
        ("4a", [192, 96, 208, 16, 48, 64], false),
        ("4b", [160, 112, 224, 24, 64, 64], false),
        ("4c", [128, 128, 256, 24, 64, 64], false),
        ("4d", [112, 144, 288, 32, 64, 64], false),
        ("4e", [256, 160, 320, 32, 128, 128], true),
        ("5a", [256, 160, 320, 32, 128, 128], false),
        ("5b", [384, 192, 384, 48, 128, 128], false),
    ];
    let mut inputs: Vec<String> = alloc::vec![String::from("conv3")];
    for &(name, [b1, r3, b3, r5, b5, pp], pool) in modules {
        let refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
        let ids = [
            format!("inc{name}_1x1"),
            format!("inc{name}_3x3r"),
            format!("inc{name}_3x3"),
            format!("inc{name}_5x5r"),
            format!("inc{name}_5x5"),
            format!("inc{name}_pool"),
        ];
        net.conv(&ids[0], &refs, &[], conv(b1, 1, 1));
        net.conv(&ids[1], &refs, &[], conv(r3, 1, 1));
        net.conv(&ids[2], &[&ids[1]], &[], conv(b3, 3, 1));
        net.conv(&ids[3], &refs, &[], conv(r5, 1, 1));
        net.conv(&ids[4], &[&ids[3]], &[], conv(b5, 5, 1));
        net.conv(&ids[5], &refs, &[], conv(pp, 1, 1));
        let outs = [ids[0].clone(), ids[2].clone(), ids[4].clone(), ids[5].clone()];
        if pool {
            for o in &outs {
                net.pool(o, 2);
            }
        }
        inputs = outs.to_vec();
    }
    // the classifier reads the pooled concatenation
    let c: u64 = inputs.iter().map(|i| net.shape(i).c).sum();
    let refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
    let s = net.shape(refs[0]);
    net.push("fc", &refs, c * 1000, s.h * s.w * c, c * 1000, Shape { h: 1, w: 1, c: 1000 });
    from_input(net.finish())
}

fn densenet121(batch: u64) -> Vec<Layer> {
    const GROWTH: u64 = 32;
    let mut net = Net::new(batch);
    net.input("input", IMAGE);
    net.conv("conv0", &["input"], &[], conv(64, 7, 2));
    net.pool("conv0", 2);
    let mut block_inputs: Vec<String> = alloc::vec![String::from("conv0")];
    for (b, &count) in [6usize, 12, 24, 16].iter().enumerate() {
        let mut features = block_inputs.clone();
        for i in 0..count {
            let refs: Vec<&str> = features.iter().map(String::as_str).collect();
            let bottleneck = format!("db{}_{}_1x1", b + 1, i + 1);
            let grow = format!("db{}_{}_3x3", b + 1, i + 1);
            net.conv(&bottleneck, &refs, &[], conv(4 * GROWTH, 1, 1));
            net.conv(&grow, &[&bottleneck], &[], conv(GROWTH, 3, 1));
            features.push(grow);
        }
        let refs: Vec<&str> = features.iter().map(String::as_str).collect();
        let c: u64 = refs.iter().map(|r| net.shape(r).c).sum();
        if b < 3 {
            let id = format!("trans{}", b + 1);
            net.conv(&id, &refs, &[], conv(c / 2, 1, 1));
            net.pool(&id, 2);
            block_inputs = alloc::vec![id];
        } else {
            let s = net.shape(refs[0]);
            net.push("fc", &refs, c * 1000, s.h * s.w * c, c * 1000, Shape { h: 1, w: 1, c: 1000 });
        }
    }
    from_input(net.finish())
}

/// Inception-ResNet style network: stem, 5 x block35, reduction,
/// 10 x block17, reduction, 5 x block8, classifier.
fn inception_resnet(batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", Shape { h: 299, w: 299, c: 3 });
    net.conv("stem1", &["input"], &[], conv(32, 3, 2));
    net.conv("stem2", &["stem1"], &[], conv(64, 3, 1));
    net.pool("stem2", 2);
    net.conv("stem3", &["stem2"], &[], conv(192, 3, 1));
    net.conv("stem4", &["stem3"], &[], conv(256, 3, 2));
    let mut prev = String::from("stem4");
    let stages: &[(&str, usize, u64, u64)] = &[("b35", 5, 32, 256), ("b17", 10, 128, 896), ("b8", 5, 192, 1792)];
    for (s, &(name, count, width, out)) in stages.iter().enumerate() {
        for i in 0..count {
            let p = format!("{name}_{}", i + 1);
            let br1 = format!("{p}_br1");
            let br2a = format!("{p}_br2a");
            let br2b = format!("{p}_br2b");
            let up = format!("{p}_up");
            net.conv(&br1, &[&prev], &[], conv(width, 1, 1));
            net.conv(&br2a, &[&prev], &[], conv(width, 1, 1));
            net.conv(&br2b, &[&br2a], &[], conv(width, 3, 1));
            let mut cat = alloc::vec![br1.clone(), br2b.clone()];
            if s == 0 {
                let br3a = format!("{p}_br3a");
                let br3b = format!("{p}_br3b");
                let br3c = format!("{p}_br3c");
                net.conv(&br3a, &[&prev], &[], conv(width, 1, 1));
                net.conv(&br3b, &[&br3a], &[], conv(width, 3, 1));
                net.conv(&br3c, &[&br3b], &[], conv(width, 3, 1));
                cat.push(br3c);
            }
            let refs: Vec<&str> = cat.iter().map(String::as_str).collect();
            net.conv(&up, &refs, &[&prev], conv(out, 1, 1));
            prev = up;
        }
        if s + 1 < stages.len() {
            let next = stages[s + 1].3;
            let red = format!("reduce{}", s + 1);
            let reda = format!("{red}_a");
            let redb = format!("{red}_b");
            net.conv(&reda, &[&prev], &[], conv(next / 2, 3, 2));
            net.conv(&redb, &[&prev], &[], conv(next - next / 2, 3, 2));
            net.conv(&red, &[&reda, &redb], &[], conv(next, 1, 1));
            prev = red;
        }
    }
    net.fc("fc", &prev, 1000, true);
    from_input(net.finish())
}

/// NAS-style cells: each cell holds five blocks of two separable
/// convolutions reading from the two previous cell outputs or earlier blocks.
fn pnasnet(batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", Shape { h: 331, w: 331, c: 3 });
    net.conv("stem", &["input"], &[], conv(96, 3, 2));
    net.conv("stem2", &["stem"], &[], conv(108, 3, 2));
    let mut prev_prev = alloc::vec![String::from("stem")];
    let mut prev = alloc::vec![String::from("stem2")];
    let mut width = 108;
    for cell in 0..12 {
        let reduce = cell == 4 || cell == 8;
        if reduce {
            width *= 2;
        }
        let stride = if reduce { 2 } else { 1 };
        let mut blocks: Vec<String> = Vec::new();
        // (kernel of left op, kernel of right op, right input: 0 = prev, 1 = prev_prev, 2 = last block)
        let plan: [(u64, u64, usize); 5] = [(5, 7, 1), (7, 3, 0), (5, 3, 0), (3, 3, 2), (3, 5, 1)];
        for (b, &(kl, kr, right_src)) in plan.iter().enumerate() {
            let left = format!("cell{cell}_b{b}_l");
            let right = format!("cell{cell}_b{b}_r");
            let p: Vec<&str> = prev.iter().map(String::as_str).collect();
            net.sep(&left, &p, &[], width / 5, kl, stride);
            let right_inputs: Vec<String> = match right_src {
                0 => prev.clone(),
                1 => prev_prev.clone(),
                _ => alloc::vec![blocks.last().cloned().unwrap_or_else(|| left.clone())],
            };
            let r: Vec<&str> = right_inputs.iter().map(String::as_str).collect();
            let r_stride = if right_src == 2 { 1 } else { stride };
            if right_src == 1 && net.shape(r[0]).h != net.shape(p[0]).h {
                // previous-previous output is one reduction behind
                net.sep(&right, &r, &[&left], width / 5, kr, 2 * r_stride);
            } else {
                net.sep(&right, &r, &[&left], width / 5, kr, r_stride);
            }
            blocks.push(right);
        }
        prev_prev = prev;
        prev = blocks;
    }
    let refs: Vec<&str> = prev.iter().map(String::as_str).collect();
    let c: u64 = refs.iter().map(|r| net.shape(r).c).sum();
    let s = net.shape(refs[0]);
    net.push("fc", &refs, c * 1000, s.h * s.w * c, c * 1000, Shape { h: 1, w: 1, c: 1000 });
    from_input(net.finish())
}

/// Encoder-decoder transformer. Sequences are stored as `[seq, 1, features]`.
fn transformer(encoders: usize, decoders: usize, d: u64, ff: u64, seq: u64, vocab: u64, batch: u64) -> Vec<Layer> {
    let mut net = Net::new(batch);
    net.input("input", Shape { h: seq, w: 1, c: d });
    let mut x = String::from("input");
    for e in 0..encoders {
        x = transformer_block(&mut net, &format!("enc{e}"), &x, None, d, ff);
    }
    let memory = x.clone();
    let mut y = if decoders > 0 {
        net.linear("dec_embed", &["input"], &[], d);
        String::from("dec_embed")
    } else {
        x
    };
    for dl in 0..decoders {
        y = transformer_block(&mut net, &format!("dec{dl}"), &y, Some(&memory), d, ff);
    }
    if vocab > 0 {
        net.linear("logits", &[&y], &[], vocab);
    }
    from_input(net.finish())
}

fn transformer_block(net: &mut Net, p: &str, x: &str, memory: Option<&str>, d: u64, ff: u64) -> String {
    let q = format!("{p}_q");
    let k = format!("{p}_k");
    let v = format!("{p}_v");
    let att = format!("{p}_attn");
    let proj = format!("{p}_proj");
    net.linear(&q, &[x], &[], d);
    net.linear(&k, &[x], &[], d);
    net.linear(&v, &[x], &[], d);
    net.attention(&att, &q, &k, &v);
    net.linear(&proj, &[&att], &[x], d);
    let mut h = proj;
    if let Some(mem) = memory {
        let cq = format!("{p}_xq");
        let ck = format!("{p}_xk");
        let cv = format!("{p}_xv");
        let catt = format!("{p}_xattn");
        let cproj = format!("{p}_xproj");
        net.linear(&cq, &[&h], &[], d);
        net.linear(&ck, &[mem], &[], d);
        net.linear(&cv, &[mem], &[], d);
        net.attention(&catt, &cq, &ck, &cv);
        net.linear(&cproj, &[&catt], &[&h], d);
        h = cproj;
    }
    let f1 = format!("{p}_ff1");
    let f2 = format!("{p}_ff2");
    net.linear(&f1, &[&h], &[], ff);
    net.linear(&f2, &[&f1], &[&h], d);
    f2
}

/// Eight-layer encoder and decoder LSTM stacks with attention over the
/// encoder output. Residual additions read the layer input and add no edges.
fn gnmt(batch: u64) -> Vec<Layer> {
    const HIDDEN: u64 = 1024;
    const SEQ: u64 = 50;
    let mut net = Net::new(batch);
    net.input("input", Shape { h: SEQ, w: 1, c: HIDDEN });
    net.lstm("enc1_fw", &["input"], &[], HIDDEN / 2);
    net.lstm("enc1_bw", &["input"], &[], HIDDEN / 2);
    net.lstm("enc2", &["enc1_fw", "enc1_bw"], &[], HIDDEN);
    let mut prev = String::from("enc2");
    for i in 3..=8 {
        let id = format!("enc{i}");
        net.lstm(&id, &[&prev], &[], HIDDEN);
        prev = id;
    }
    let memory = prev;
    net.lstm("dec1", &["input"], &[], HIDDEN);
    net.attention("attn", "dec1", &memory, &memory);
    let mut prev = String::from("dec1");
    for i in 2..=8 {
        let id = format!("dec{i}");
        net.lstm(&id, &[&prev, "attn"], &[], HIDDEN);
        prev = id;
    }
    net.linear("softmax", &[&prev], &[], 32_000);
    from_input(net.finish())
}

/// Four stacked LSTM layers with a classifier on the last step.
fn lstm(batch: u64) -> Vec<Layer> {
    const HIDDEN: u64 = 2048;
    const SEQ: u64 = 100;
    let mut net = Net::new(batch);
    net.input("input", Shape { h: SEQ, w: 1, c: 1024 });
    let mut prev = String::from("input");
    for i in 1..=4 {
        let id = format!("lstm{i}");
        net.lstm(&id, &[&prev], &[], HIDDEN);
        prev = id;
    }
    net.linear("fc", &[&prev], &[], 1000);
    from_input(net.finish())
}

/// Chain of wide 5x5 convolutions whose arithmetic intensity keeps every
/// layer compute bound on the default package.
fn stress_compute() -> Vec<Layer> {
    const BATCH: u64 = 16;
    let mut net = Net::new(BATCH);
    net.input("input", Shape { h: 112, w: 112, c: 8192 });
    let mut prev = String::from("input");
    for i in 1..=12 {
        let id = format!("conv{i}");
        net.conv(&id, &[&prev], &[], conv(8192, 5, 1));
        prev = id;
    }
    from_input(net.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_workload_builds() {
        for name in BUNDLED {
            let g = build(name).unwrap_or_else(|| panic!("{name} missing"));
            assert_eq!(g.name(), name);
            assert!(g.len() >= 4, "{name} too small");
            assert!(g.layers().iter().all(|l| l.macs > 0), "{name} has an empty layer");
        }
        assert!(build("alexnet").is_none());
    }

    #[test]
    fn resnet50_shape() {
        let g = build_batched("resnet50", 1).unwrap();
        // conv1 + 16 blocks of three + 4 projections + fc
        assert_eq!(g.len(), 54);
        let macs = g.total_macs() as f64;
        // published figure is about 4.1 GMACs
        assert!((3.8e9..4.4e9).contains(&macs), "{macs}");
        // the first block input feeds the first convolution and the projection
        let conv1 = g.position("conv1").unwrap();
        assert_eq!(g.successors(conv1).len(), 2);
        let c = g.position("res2b_c").unwrap();
        assert_eq!(g.predecessors(c).len(), 2);
    }

    #[test]
    fn published_parameter_counts() {
        let weights = |name: &str| build(name).unwrap().layers().iter().map(|l| l.weight_bytes).sum::<u64>() as f64;
        // ~25.5M, ~60M, ~138M, ~7M parameters
        assert!((23e6..27e6).contains(&weights("resnet50")));
        assert!((57e6..62e6).contains(&weights("resnet152")));
        assert!((135e6..140e6).contains(&weights("vgg")));
        assert!((5e6..8e6).contains(&weights("googlenet")));
    }

    #[test]
    fn batch_scales_activations_only() {
        let one = build_batched("googlenet", 1).unwrap();
        let many = build_batched("googlenet", 8).unwrap();
        for (a, b) in one.layers().iter().zip(many.layers()) {
            assert_eq!(b.macs, 8 * a.macs);
            assert_eq!(b.ifmap_bytes, 8 * a.ifmap_bytes);
            assert_eq!(b.ofmap_bytes, 8 * a.ofmap_bytes);
            assert_eq!(b.weight_bytes, a.weight_bytes);
        }
        assert_eq!(build("stress_compute"), build_batched("stress_compute", 1));
    }

    #[test]
    fn vgg16_macs() {
        let macs = build_batched("vgg", 1).unwrap().total_macs() as f64;
        assert!((15.0e9..15.8e9).contains(&macs), "{macs}");
    }
}
