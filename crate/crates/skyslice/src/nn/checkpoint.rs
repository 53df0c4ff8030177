//! Flat binary network checkpoints: shapes plus row-major `f64` values.
//! Round-trips are bit-exact.

use std::io::{Read, Write};

use super::network::{Activation, Layer, Network};
use crate::error::SimError;

const MAGIC: &[u8; 4] = b"SSNN";
const VERSION: u32 = 1;

pub fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_u128(w: &mut impl Write, v: u128) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_u128(r: &mut impl Read) -> std::io::Result<u128> {
    let mut buf = [0u8; 16];
    r.read_exact(&mut buf)?;
    Ok(u128::from_le_bytes(buf))
}

pub fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Serialize a network (no file header; used inside larger checkpoints).
pub fn write_network(w: &mut impl Write, net: &Network) -> Result<(), SimError> {
    write_u32(w, net.layers.len() as u32)?;
    for layer in &net.layers {
        write_u32(w, layer.input as u32)?;
        write_u32(w, layer.output as u32)?;
        w.write_all(&[layer.activation.tag()])?;
        for v in &layer.weights {
            write_f64(w, *v)?;
        }
        for v in &layer.biases {
            write_f64(w, *v)?;
        }
    }
    Ok(())
}

pub fn read_network(r: &mut impl Read) -> Result<Network, SimError> {
    let n_layers = read_u32(r)? as usize;
    if n_layers > 1024 {
        return Err(SimError::Checkpoint(format!(
            "implausible layer count {n_layers}"
        )));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let input = read_u32(r)? as usize;
        let output = read_u32(r)? as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let activation = Activation::from_tag(tag[0])?;
        let mut weights = vec![0.0; input * output];
        for v in weights.iter_mut() {
            *v = read_f64(r)?;
        }
        let mut biases = vec![0.0; output];
        for v in biases.iter_mut() {
            *v = read_f64(r)?;
        }
        layers.push(Layer {
            input,
            output,
            weights,
            biases,
            activation,
        });
    }
    Ok(Network { layers })
}

/// Standalone network file with magic and version.
pub fn save_network(path: &std::path::Path, net: &Network) -> Result<(), SimError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    write_u32(&mut buf, VERSION)?;
    write_network(&mut buf, net)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_network(path: &std::path::Path) -> Result<Network, SimError> {
    let data = std::fs::read(path)?;
    let mut r = data.as_slice();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SimError::Checkpoint("not a network checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SimError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    read_network(&mut r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::Activation;
    use crate::rng::Stream;

    #[test]
    fn file_round_trip_is_exact() {
        let mut rng = Stream::from_seed(42);
        let net = Network::mlp(&[7, 32, 32, 4], Activation::Relu, Activation::Tanh, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.bin");
        save_network(&path, &net).unwrap();
        let loaded = load_network(&path).unwrap();
        assert_eq!(net, loaded);
        for i in 0..net.param_count() {
            assert_eq!(net.param(i).to_bits(), loaded.param(i).to_bits());
        }
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"definitely not a checkpoint").unwrap();
        assert!(load_network(&path).is_err());
    }
}
