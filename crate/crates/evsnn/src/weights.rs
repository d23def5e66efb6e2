//! Trained-weight serialization (`.snnw`).
//!
//! Little-endian binary: `magic "SNNW" | version u16 | layer_count u32`,
//! then `layer_count` dimension pairs `{ n_out u32 | n_in u32 }`, then the
//! matrices' row-major f64 data back to back in the same order. Layers are
//! enumerated in the network's canonical order: each branch in declaration
//! order (inner layer first), then the head. Pooling layers carry no
//! weights and do not appear.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use evsnn_core::Network;

use crate::error::{AppError, Result};

pub const SNNW_MAGIC: [u8; 4] = *b"SNNW";
pub const SNNW_VERSION: u16 = 1;

/// Writes every trainable matrix of `net` to `path`.
pub fn save_weights(path: &Path, net: &Network) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| AppError::io(path, e);

    let mut dims: Vec<(u32, u32)> = Vec::new();
    net.visit_weights(|m| dims.push((m.rows() as u32, m.cols() as u32)));

    w.write_all(&SNNW_MAGIC).map_err(io_err)?;
    w.write_all(&SNNW_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(dims.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (n_out, n_in) in &dims {
        w.write_all(&n_out.to_le_bytes()).map_err(io_err)?;
        w.write_all(&n_in.to_le_bytes()).map_err(io_err)?;
    }
    let mut status = Ok(());
    net.visit_weights(|m| {
        if status.is_ok() {
            for &v in m.data() {
                if let Err(e) = w.write_all(&v.to_le_bytes()) {
                    status = Err(AppError::io(path, e));
                    break;
                }
            }
        }
    });
    status?;
    w.flush().map_err(io_err)
}

/// Loads weights from `path` into `net`. The file's layer count and every
/// dimension pair must match the network exactly.
pub fn load_weights_into(path: &Path, net: &mut Network) -> Result<()> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| AppError::io(path, e))?;

    if bytes.len() < 10 {
        return Err(AppError::parse_at_byte(path, bytes.len() as u64, "truncated header"));
    }
    if bytes[0..4] != SNNW_MAGIC {
        return Err(AppError::parse_at_byte(path, 0, "bad magic, expected \"SNNW\""));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != SNNW_VERSION {
        return Err(AppError::parse_at_byte(
            path,
            4,
            format!("unsupported version {version}, expected {SNNW_VERSION}"),
        ));
    }
    let layer_count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;

    let mut expected: Vec<(usize, usize)> = Vec::new();
    net.visit_weights(|m| expected.push((m.rows(), m.cols())));
    if layer_count != expected.len() {
        return Err(AppError::Validation(format!(
            "{}: file holds {layer_count} weight layers, network has {}",
            path.display(),
            expected.len()
        )));
    }

    let dims_end = 10 + layer_count * 8;
    if bytes.len() < dims_end {
        return Err(AppError::parse_at_byte(path, bytes.len() as u64, "truncated dimension table"));
    }
    let mut total_values = 0usize;
    for (i, &(rows, cols)) in expected.iter().enumerate() {
        let at = 10 + i * 8;
        let n_out = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let n_in = u32::from_le_bytes(bytes[at + 4..at + 8].try_into().unwrap()) as usize;
        if (n_out, n_in) != (rows, cols) {
            return Err(AppError::Validation(format!(
                "{}: layer {i} is {n_out}x{n_in} in the file but {rows}x{cols} in the network",
                path.display()
            )));
        }
        total_values += rows * cols;
    }
    let expected_len = dims_end + total_values * 8;
    if bytes.len() != expected_len {
        return Err(AppError::parse_at_byte(
            path,
            bytes.len().min(expected_len) as u64,
            format!("expected {expected_len} bytes, found {}", bytes.len()),
        ));
    }

    let mut offset = dims_end;
    let mut status = Ok(());
    net.visit_weights_mut(|m| {
        if status.is_err() {
            return;
        }
        for v in m.data_mut() {
            *v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
            offset += 8;
        }
        if m.data().iter().any(|v| !v.is_finite()) {
            status = Err(AppError::Validation(format!(
                "{}: non-finite weight value",
                path.display()
            )));
        }
    });
    status
}

#[cfg(test)]
mod tests {
    use super::*;
    use evsnn_core::{tactile_network, SrmConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seeded_net(inputs: usize, classes: usize, seed: u64) -> Network {
        let mut net = tactile_network(inputs, classes, SrmConfig::default_for_step()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        evsnn_core::train::initialize_weights(&mut net, &mut rng);
        net
    }

    #[test]
    fn round_trip_restores_every_weight() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.snnw");
        let net = seeded_net(12, 3, 7);
        save_weights(&path, &net).unwrap();

        let mut other = seeded_net(12, 3, 8);
        load_weights_into(&path, &mut other).unwrap();
        assert_eq!(other, net);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.snnw");
        save_weights(&path, &seeded_net(12, 3, 7)).unwrap();
        let mut wrong = seeded_net(13, 3, 7);
        let err = load_weights_into(&path, &mut wrong).unwrap_err();
        assert_eq!(err.exit_code(), 5);
        assert!(err.to_string().contains("12"), "{err}");
    }

    #[test]
    fn truncated_data_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.snnw");
        save_weights(&path, &seeded_net(12, 3, 7)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 1);
        std::fs::write(&path, &bytes).unwrap();
        let mut net = seeded_net(12, 3, 7);
        let err = load_weights_into(&path, &mut net).unwrap_err();
        assert_eq!(err.exit_code(), 4, "{err}");
    }
}
