//! Network checkpoints: one line of JSON header, then the flattened
//! parameters as little-endian `f64`, in `[w0, b0, w1, b1, ..]` order with
//! weights row-major `[fan_in, fan_out]`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nets::{Activation, Mlp, NetsError};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
    pub num_params: usize,
    /// Caller-defined payload (policy sigma, run config, normalizer state, ..).
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn write_mlp<S: Scalar, W: Write>(
    mut out: W,
    net: &Mlp<S>,
    meta: serde_json::Value,
) -> Result<(), NetsError> {
    let header = CheckpointHeader {
        format_version: FORMAT_VERSION,
        layer_sizes: net.layer_sizes().to_vec(),
        activation: net.hidden_activation(),
        seed: net.seed(),
        num_params: net.num_parameters(),
        meta,
    };
    let line = serde_json::to_string(&header).map_err(|e| NetsError::Checkpoint(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(8 * header.num_params);
    for v in net.flatten() {
        bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_mlp<S: Scalar, R: Read>(input: R) -> Result<(Mlp<S>, CheckpointHeader), NetsError> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: CheckpointHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| NetsError::Checkpoint(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(NetsError::Checkpoint(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * header.num_params {
        return Err(NetsError::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            8 * header.num_params,
            bytes.len()
        )));
    }
    let flat: Vec<S> = bytes
        .chunks_exact(8)
        .map(|c| S::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect();
    let net = Mlp::from_parts(&header.layer_sizes, header.activation, header.seed, &flat)?;
    Ok((net, header))
}

pub fn save_mlp<S: Scalar>(
    path: impl AsRef<Path>,
    net: &Mlp<S>,
    meta: serde_json::Value,
) -> Result<(), NetsError> {
    let mut buf = Vec::new();
    write_mlp(&mut buf, net, meta)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_mlp<S: Scalar>(path: impl AsRef<Path>) -> Result<(Mlp<S>, CheckpointHeader), NetsError> {
    read_mlp(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let net = Mlp::<f64>::new(&[3, 7, 2], Activation::Tanh, 11).unwrap();
        let meta = serde_json::json!({"sigma": [0.1, 0.2]});
        let mut buf = Vec::new();
        write_mlp(&mut buf, &net, meta.clone()).unwrap();
        let (back, header) = read_mlp::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        assert_eq!(header.meta, meta);
        assert_eq!(header.layer_sizes, vec![3, 7, 2]);
    }

    #[test]
    fn header_is_json_and_payload_little_endian() {
        let net = Mlp::<f64>::new(&[1, 1], Activation::Relu, 0).unwrap();
        let mut buf = Vec::new();
        write_mlp(&mut buf, &net, serde_json::Value::Null).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..nl]).unwrap();
        assert_eq!(header["format_version"], 1);
        assert_eq!(header["activation"], "relu");
        let w = f64::from_le_bytes(buf[nl + 1..nl + 9].try_into().unwrap());
        assert_eq!(w, net.flatten()[0]);
        assert_eq!(buf.len(), nl + 1 + 16);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let net = Mlp::<f64>::new(&[2, 2], Activation::Relu, 0).unwrap();
        let mut buf = Vec::new();
        write_mlp(&mut buf, &net, serde_json::Value::Null).unwrap();
        buf.pop();
        assert!(matches!(
            read_mlp::<f64, _>(buf.as_slice()),
            Err(NetsError::Checkpoint(_))
        ));
    }
}
