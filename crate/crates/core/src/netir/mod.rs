//! Layered ReLU networks with exact dyadic weights.
//!
//! A [`LayeredNet`] is a stack of [`AffineLayer`]s; every layer but the last
//! applies `σ(z) = max(0, z)`. Weights are stored as sparse rows so that the
//! parameter count (nonzero weights plus nonzero biases) is exact and the
//! block-diagonal structure produced by [`stack_parallel`] costs nothing.
//!
//! Some units carry a *pass-through* contract: their pre-activation is
//! asserted nonnegative so the ReLU acts as identity. [`LayeredNet::eval_checked`]
//! verifies that contract on a concrete input.

mod builder;
mod combine;
mod eval;
mod io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::Dyadic;

pub use builder::{Lin, NetBuilder, Plan};
pub use combine::{compose_affine, compose_serial, extend_identity, stack_parallel, Side};
pub use eval::Scalar;

/// One affine map, optionally followed by ReLU.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineLayer {
    in_dim: usize,
    rows: Vec<Vec<(usize, Dyadic)>>,
    bias: Vec<Dyadic>,
    relu: bool,
    pass: Vec<usize>,
}

impl AffineLayer {
    /// Builds a layer from sparse rows; zero entries are dropped and duplicates summed.
    pub fn new(
        in_dim: usize,
        rows: Vec<Vec<(usize, Dyadic)>>,
        bias: Vec<Dyadic>,
        relu: bool,
    ) -> Result<Self> {
        if rows.len() != bias.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                got: bias.len(),
            });
        }
        let mut clean = Vec::with_capacity(rows.len());
        for row in rows {
            let mut merged: BTreeMap<usize, Dyadic> = BTreeMap::new();
            for (col, w) in row {
                if col >= in_dim {
                    return Err(Error::Dimension {
                        expected: in_dim,
                        got: col + 1,
                    });
                }
                let e = merged.entry(col).or_insert_with(Dyadic::zero);
                *e = &*e + &w;
            }
            clean.push(merged.into_iter().filter(|(_, w)| !w.is_zero()).collect());
        }
        Ok(AffineLayer {
            in_dim,
            rows: clean,
            bias,
            relu,
            pass: Vec::new(),
        })
    }

    pub fn from_dense(weights: Vec<Vec<Dyadic>>, bias: Vec<Dyadic>, relu: bool) -> Result<Self> {
        let in_dim = weights.first().map_or(0, Vec::len);
        if weights.iter().any(|r| r.len() != in_dim) {
            return Err(Error::Schema("ragged weight matrix".into()));
        }
        let rows = weights
            .into_iter()
            .map(|r| r.into_iter().enumerate().collect())
            .collect();
        Self::new(in_dim, rows, bias, relu)
    }

    /// Marks units whose ReLU must act as identity.
    pub fn with_pass(mut self, mut units: Vec<usize>) -> Self {
        units.retain(|&u| u < self.rows.len());
        units.sort_unstable();
        units.dedup();
        self.pass = units;
        self
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, Dyadic)>] {
        &self.rows
    }

    pub fn bias(&self) -> &[Dyadic] {
        &self.bias
    }

    pub fn relu(&self) -> bool {
        self.relu
    }

    pub fn pass_units(&self) -> &[usize] {
        &self.pass
    }

    pub fn params(&self) -> usize {
        self.rows.iter().map(Vec::len).sum::<usize>()
            + self.bias.iter().filter(|b| !b.is_zero()).count()
    }

    fn values(&self) -> impl Iterator<Item = &Dyadic> {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|(_, w)| w))
            .chain(self.bias.iter())
    }

    /// Mutable access to one weight, for fault-injection tests.
    pub fn weight_mut(&mut self, row: usize, k: usize) -> Option<&mut Dyadic> {
        self.rows.get_mut(row)?.get_mut(k).map(|(_, w)| w)
    }

    pub fn bias_mut(&mut self, row: usize) -> Option<&mut Dyadic> {
        self.bias.get_mut(row)
    }
}

/// Structural metrics: width, depth, nonzero parameters, max mantissa bits,
/// and the largest `|exponent|` among nonzero weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetMetrics {
    pub width: usize,
    pub depth: usize,
    pub params: usize,
    pub bits: u64,
    pub exponent_range: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredNet {
    input_dim: usize,
    layers: Vec<AffineLayer>,
    provenance: String,
    annotations: BTreeMap<String, String>,
}

impl LayeredNet {
    pub fn new(input_dim: usize, layers: Vec<AffineLayer>, provenance: impl Into<String>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Parameter("input_dim must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::Parameter("network needs at least one layer".into()));
        }
        let mut prev = input_dim;
        let last = layers.len() - 1;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim != prev {
                return Err(Error::Dimension {
                    expected: prev,
                    got: layer.in_dim,
                });
            }
            if layer.relu != (i != last) {
                return Err(Error::Schema(format!(
                    "layer {i}: relu must be {} ",
                    i != last
                )));
            }
            prev = layer.out_dim();
        }
        Ok(LayeredNet {
            input_dim,
            layers,
            provenance: provenance.into(),
            annotations: BTreeMap::new(),
        })
    }

    /// Single affine layer `W = I, b = 0`.
    pub fn identity(dim: usize) -> Self {
        let rows = (0..dim).map(|i| vec![(i, Dyadic::one())]).collect();
        let layer = AffineLayer::new(dim, rows, vec![Dyadic::zero(); dim], false)
            .expect("identity layer is well-formed");
        LayeredNet::new(dim, vec![layer], "identity").expect("identity net is well-formed")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, AffineLayer::out_dim)
    }

    pub fn layers(&self) -> &[AffineLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [AffineLayer] {
        &mut self.layers
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, p: impl Into<String>) {
        self.provenance = p.into();
    }

    pub fn annotations(&self) -> &BTreeMap<String, String> {
        &self.annotations
    }

    pub fn annotate(&mut self, key: impl Into<String>, value: impl ToString) {
        self.annotations.insert(key.into(), value.to_string());
    }

    /// Number of layers, the final affine layer included.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Largest hidden-layer size (0 for a single affine layer).
    pub fn width(&self) -> usize {
        let hidden = self.layers.len().saturating_sub(1);
        self.layers[..hidden]
            .iter()
            .map(AffineLayer::out_dim)
            .max()
            .unwrap_or(0)
    }

    pub fn params(&self) -> usize {
        self.layers.iter().map(AffineLayer::params).sum()
    }

    pub fn bits(&self) -> u64 {
        self.layers
            .iter()
            .flat_map(AffineLayer::values)
            .map(Dyadic::bit_complexity)
            .max()
            .unwrap_or(0)
    }

    pub fn exponent_range(&self) -> u64 {
        self.layers
            .iter()
            .flat_map(AffineLayer::values)
            .filter(|w| !w.is_zero())
            .map(|w| w.exponent().unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn metrics(&self) -> NetMetrics {
        NetMetrics {
            width: self.width(),
            depth: self.depth(),
            params: self.params(),
            bits: self.bits(),
            exponent_range: self.exponent_range(),
        }
    }
}

#[cfg(test)]
mod tests;
