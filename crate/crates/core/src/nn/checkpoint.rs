//! Parameter files: a `key=value` header describing the layer chain and a
//! little-endian `f64` payload holding, per layer, the weights then the biases.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::KeyValues;

use super::conv::ConvLayer;
use super::network::NetworkParams;

const RESERVED: [&str; 6] = ["format", "layers", "input_skip", "seed", "iteration", "payload"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub iteration: usize,
    /// Caller-defined entries (e.g. the architecture kind).
    pub extra: KeyValues,
}

pub fn encode_checkpoint(params: &NetworkParams, meta: &CheckpointMeta) -> (String, Vec<u8>) {
    let mut kv = KeyValues::new();
    kv.push("format", "dipan-checkpoint");
    kv.push("layers", params.depth());
    for (l, layer) in params.layers().iter().enumerate() {
        kv.push(format!("layer{l}"), format!("{},{},{}", layer.in_channels(), layer.out_channels(), layer.kernel()));
    }
    kv.push("input_skip", params.input_skip().map_or("none".to_string(), |s| s.to_string()));
    kv.push("seed", meta.seed);
    kv.push("iteration", meta.iteration);
    kv.push("payload", "f64le");
    for (k, v) in meta.extra.entries() {
        kv.push(k.clone(), v);
    }
    let mut payload = Vec::with_capacity(params.param_count() * 8);
    for layer in params.layers() {
        for v in layer.weights().iter().chain(layer.bias()) {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    (kv.to_text(), payload)
}

pub fn decode_checkpoint(header: &str, payload: &[u8]) -> Result<(NetworkParams, CheckpointMeta)> {
    let kv = KeyValues::parse(header)?;
    if kv.require("format")? != "dipan-checkpoint" || kv.require("payload")? != "f64le" {
        return Err(Error::Format("not a dipan checkpoint".into()));
    }
    let depth: usize = kv.require_value("layers")?;
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    if payload.len() % 8 != 0 {
        return Err(Error::Format("payload length is not a multiple of 8".into()));
    }
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let spec = kv.require(&format!("layer{l}"))?;
        let dims: Vec<usize> = spec
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::Format(format!("bad layer spec {spec:?}"))))
            .collect::<Result<_>>()?;
        let [ci, co, k] = dims[..] else {
            return Err(Error::Format(format!("layer{l} needs c_in,c_out,k")));
        };
        let w: Vec<f64> = values.by_ref().take(co * ci * k * k).collect();
        let b: Vec<f64> = values.by_ref().take(co).collect();
        if w.len() != co * ci * k * k || b.len() != co {
            return Err(Error::Format("checkpoint payload is truncated".into()));
        }
        layers.push(ConvLayer::new(ci, co, k, w, b)?);
    }
    if values.next().is_some() {
        return Err(Error::Format("checkpoint payload has trailing data".into()));
    }
    let input_skip = match kv.require("input_skip")? {
        "none" => None,
        s => Some(s.parse().map_err(|_| Error::Format(format!("bad input_skip {s:?}")))?),
    };
    let mut extra = KeyValues::new();
    for (k, v) in kv.entries() {
        if !RESERVED.contains(&k.as_str()) && !k.starts_with("layer") {
            extra.push(k.clone(), v);
        }
    }
    let meta = CheckpointMeta { seed: kv.require_value("seed")?, iteration: kv.require_value("iteration")?, extra };
    Ok((NetworkParams::new(layers, input_skip)?, meta))
}

pub fn save_checkpoint(params: &NetworkParams, meta: &CheckpointMeta, header_path: &Path, payload_path: &Path) -> Result<()> {
    let (h, p) = encode_checkpoint(params, meta);
    fs::write(header_path, h)?;
    fs::write(payload_path, p)?;
    Ok(())
}

pub fn load_checkpoint(header_path: &Path, payload_path: &Path) -> Result<(NetworkParams, CheckpointMeta)> {
    decode_checkpoint(&fs::read_to_string(header_path)?, &fs::read(payload_path)?)
}
