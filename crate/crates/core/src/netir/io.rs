use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AffineLayer, LayeredNet, NetMetrics};
use crate::error::{Error, Result};
use crate::exactnum::Dyadic;

pub const NET_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerFile {
    #[serde(rename = "in")]
    in_dim: usize,
    /// Sparse rows: `[[col, dyadic], ...]` per output unit.
    w: Vec<Vec<(usize, Dyadic)>>,
    b: Vec<Dyadic>,
    relu: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pass: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    schema_version: u32,
    input_dim: usize,
    provenance: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    annotations: BTreeMap<String, String>,
    layers: Vec<LayerFile>,
    metrics: NetMetrics,
}

impl LayeredNet {
    pub fn to_json(&self) -> String {
        let file = NetFile {
            schema_version: NET_SCHEMA_VERSION,
            input_dim: self.input_dim,
            provenance: self.provenance.clone(),
            annotations: self.annotations.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    in_dim: l.in_dim,
                    w: l.rows.clone(),
                    b: l.bias.clone(),
                    relu: l.relu,
                    pass: l.pass.clone(),
                })
                .collect(),
            metrics: self.metrics(),
        };
        serde_json::to_string(&file).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: NetFile = serde_json::from_str(s)?;
        if file.schema_version != NET_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported network schema version {}",
                file.schema_version
            )));
        }
        let layers = file
            .layers
            .into_iter()
            .map(|l| AffineLayer::new(l.in_dim, l.w, l.b, l.relu).map(|a| a.with_pass(l.pass)))
            .collect::<Result<Vec<_>>>()?;
        let mut net = LayeredNet::new(file.input_dim, layers, file.provenance)?;
        net.annotations = file.annotations;
        if net.metrics() != file.metrics {
            return Err(Error::Schema(
                "stored metrics disagree with the layers".into(),
            ));
        }
        Ok(net)
    }
}
