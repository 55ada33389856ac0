use super::{AffineLayer, LayeredNet};
use crate::error::{Error, Result};
use crate::exactnum::Dyadic;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Prepend,
    Append,
}

/// Turns the final affine layer into a pass-through ReLU layer.
///
/// Valid only when the net's outputs are nonnegative on the inputs of interest;
/// [`LayeredNet::eval_checked`] flags any violation.
fn open_output(mut layer: AffineLayer) -> AffineLayer {
    layer.relu = true;
    layer.pass = (0..layer.out_dim()).collect();
    layer
}

/// `b ∘ a`, joining through a ReLU on `a`'s (nonnegative) outputs.
///
/// `depth = depth(a) + depth(b)`.
pub fn compose_serial(a: &LayeredNet, b: &LayeredNet) -> Result<LayeredNet> {
    if a.output_dim() != b.input_dim() {
        return Err(Error::Dimension {
            expected: b.input_dim(),
            got: a.output_dim(),
        });
    }
    let mut layers = a.layers.clone();
    let last = layers.pop().expect("nonempty");
    layers.push(open_output(last));
    layers.extend(b.layers.iter().cloned());
    LayeredNet::new(
        a.input_dim,
        layers,
        format!("{}>{}", a.provenance, b.provenance),
    )
}

/// `b ∘ a` with `a`'s final affine layer multiplied into `b`'s first layer.
///
/// Exact for any input; `depth = depth(a) + depth(b) - 1`.
pub fn compose_affine(a: &LayeredNet, b: &LayeredNet) -> Result<LayeredNet> {
    if a.output_dim() != b.input_dim() {
        return Err(Error::Dimension {
            expected: b.input_dim(),
            got: a.output_dim(),
        });
    }
    let mut layers = a.layers.clone();
    let inner = layers.pop().expect("nonempty");
    let outer = &b.layers[0];
    let mut rows = Vec::with_capacity(outer.out_dim());
    let mut bias = Vec::with_capacity(outer.out_dim());
    for (orow, ob) in outer.rows.iter().zip(&outer.bias) {
        let mut row = Vec::new();
        let mut acc_b = ob.clone();
        for (k, w) in orow {
            for (col, v) in &inner.rows[*k] {
                row.push((*col, w * v));
            }
            acc_b = &acc_b + &(w * &inner.bias[*k]);
        }
        rows.push(row);
        bias.push(acc_b);
    }
    let fused =
        AffineLayer::new(inner.in_dim, rows, bias, outer.relu)?.with_pass(outer.pass.clone());
    layers.push(fused);
    layers.extend(b.layers[1..].iter().cloned());
    LayeredNet::new(
        a.input_dim,
        layers,
        format!("{}>{}", a.provenance, b.provenance),
    )
}

fn identity_layer(dim: usize, relu: bool) -> AffineLayer {
    let rows = (0..dim).map(|i| vec![(i, Dyadic::one())]).collect();
    let layer = AffineLayer::new(dim, rows, vec![Dyadic::zero(); dim], relu)
        .expect("identity layer is well-formed");
    if relu {
        layer.with_pass((0..dim).collect())
    } else {
        layer
    }
}

/// Pads `net` with identity layers until it has `depth` layers.
fn pad_to_depth(net: &LayeredNet, depth: usize) -> Vec<AffineLayer> {
    let mut layers = net.layers.clone();
    if layers.len() >= depth {
        return layers;
    }
    let out = net.output_dim();
    let last = layers.pop().expect("nonempty");
    layers.push(open_output(last));
    while layers.len() < depth - 1 {
        layers.push(identity_layer(out, true));
    }
    layers.push(identity_layer(out, false));
    layers
}

/// Runs nets side by side on a shared input; output is the concatenation.
///
/// Shorter members are padded with pass-through identity layers, so their
/// outputs must be nonnegative. Cross-member weights are structurally absent.
pub fn stack_parallel(nets: &[LayeredNet]) -> Result<LayeredNet> {
    let first = nets
        .first()
        .ok_or_else(|| Error::Parameter("stack of zero nets".into()))?;
    let input_dim = first.input_dim;
    for n in nets {
        if n.input_dim != input_dim {
            return Err(Error::Dimension {
                expected: input_dim,
                got: n.input_dim,
            });
        }
    }
    if nets.len() == 1 {
        return Ok(first.clone());
    }
    let depth = nets.iter().map(LayeredNet::depth).max().unwrap_or(0);
    let padded: Vec<Vec<AffineLayer>> = nets.iter().map(|n| pad_to_depth(n, depth)).collect();
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        let mut pass = Vec::new();
        let mut in_off = 0;
        for member in &padded {
            let layer = &member[l];
            let shift = if l == 0 { 0 } else { in_off };
            let out_off = rows.len();
            pass.extend(layer.pass.iter().map(|u| u + out_off));
            rows.extend(
                layer
                    .rows
                    .iter()
                    .map(|r| r.iter().map(|(c, w)| (c + shift, w.clone())).collect()),
            );
            bias.extend(layer.bias.iter().cloned());
            in_off += layer.in_dim;
        }
        let in_dim = if l == 0 { input_dim } else { in_off };
        let relu = l + 1 != depth;
        layers.push(AffineLayer::new(in_dim, rows, bias, relu)?.with_pass(pass));
    }
    let prov = nets
        .iter()
        .map(|n| n.provenance.as_str())
        .collect::<Vec<_>>()
        .join("|");
    LayeredNet::new(input_dim, layers, format!("stack({prov})"))
}

/// Adds `extra` pass-through channels that carry nonnegative inputs to the output unchanged.
pub fn extend_identity(net: &LayeredNet, extra: usize, side: Side) -> LayeredNet {
    if extra == 0 {
        return net.clone();
    }
    let mut layers = Vec::with_capacity(net.depth());
    let mut in_dim = net.input_dim + extra;
    for layer in &net.layers {
        let out = layer.out_dim();
        let (src_off, dst_off, chan_off_in, chan_off_out) = match side {
            // original columns shift right; channels sit in front
            Side::Prepend => (extra, extra, 0, 0),
            Side::Append => (0, 0, in_dim - extra, out),
        };
        let mut rows: Vec<Vec<(usize, Dyadic)>> = Vec::with_capacity(out + extra);
        let mut bias = Vec::with_capacity(out + extra);
        let chan_rows: Vec<Vec<(usize, Dyadic)>> = (0..extra)
            .map(|c| vec![(chan_off_in + c, Dyadic::one())])
            .collect();
        let orig_rows: Vec<Vec<(usize, Dyadic)>> = layer
            .rows
            .iter()
            .map(|r| r.iter().map(|(col, w)| (col + src_off, w.clone())).collect())
            .collect();
        let mut pass: Vec<usize>;
        match side {
            Side::Prepend => {
                rows.extend(chan_rows);
                bias.extend(std::iter::repeat_with(Dyadic::zero).take(extra));
                rows.extend(orig_rows);
                bias.extend(layer.bias.iter().cloned());
                pass = (0..extra).collect();
                pass.extend(layer.pass.iter().map(|u| u + dst_off));
            }
            Side::Append => {
                rows.extend(orig_rows);
                bias.extend(layer.bias.iter().cloned());
                rows.extend(chan_rows);
                bias.extend(std::iter::repeat_with(Dyadic::zero).take(extra));
                pass = layer.pass.clone();
                pass.extend((0..extra).map(|c| chan_off_out + c));
            }
        }
        if !layer.relu {
            pass.clear();
        }
        let new_layer = AffineLayer::new(in_dim, rows, bias, layer.relu)
            .expect("extended layer is well-formed")
            .with_pass(pass);
        in_dim = new_layer.out_dim();
        layers.push(new_layer);
    }
    let mut out = LayeredNet::new(net.input_dim + extra, layers, net.provenance.clone())
        .expect("extended net is well-formed");
    out.annotations = net.annotations.clone();
    out
}
