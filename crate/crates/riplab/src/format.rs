//! Binary ensemble files.
//!
//! Layout: the 8-byte magic `RIPLAB01`, one kind byte (0 unit-modulus, 1 Gaussian),
//! then `M`, `N`, `K` as little-endian `u64`, then the payload as little-endian `f64`.
//! Unit-modulus payloads hold `theta` by measurement then row, followed by `phi` by
//! measurement then column. Gaussian payloads hold each matrix in turn, row-major, with
//! real and imaginary parts interleaved.

use std::fs;
use std::path::Path;

use riplab_core::measurements::{EnsembleKind, GaussianEnsemble, UnitModulusEnsemble, SCALAR_BYTES};
use riplab_core::{Complex64, MeasurementEnsemble};

use crate::error::{HarnessError, Result};

pub const MAGIC: &[u8; 8] = b"RIPLAB01";
pub const HEADER_BYTES: usize = 8 + 1 + 3 * 8;

pub fn encode_ensemble(ensemble: &MeasurementEnsemble) -> Vec<u8> {
    let (m, n, k) = ensemble.dims();
    let mut out = Vec::with_capacity(HEADER_BYTES + ensemble.storage_bytes());
    out.extend_from_slice(MAGIC);
    out.push(ensemble.kind().tag());
    for d in [m, n, k] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    let mut put = |x: f64| out.extend_from_slice(&x.to_le_bytes());
    match ensemble {
        MeasurementEnsemble::UnitModulus(e) => e.theta().iter().chain(e.phi()).for_each(|&p| put(p)),
        MeasurementEnsemble::Gaussian(e) => e.entries().iter().for_each(|z| {
            put(z.re);
            put(z.im);
        }),
    }
    out
}

pub fn decode_ensemble(bytes: &[u8]) -> Result<MeasurementEnsemble> {
    let bad = |msg: &str| HarnessError::Format(msg.to_string());
    if bytes.len() < HEADER_BYTES || &bytes[..8] != MAGIC {
        return Err(bad("missing RIPLAB01 header"));
    }
    let kind = EnsembleKind::from_tag(bytes[8]).ok_or_else(|| bad("unknown ensemble kind"))?;
    let dim = |i: usize| -> Result<usize> {
        let start = 9 + 8 * i;
        let raw = u64::from_le_bytes(bytes[start..start + 8].try_into().expect("8 bytes"));
        usize::try_from(raw).map_err(|_| bad("dimension does not fit in memory"))
    };
    let (m, n, k) = (dim(0)?, dim(1)?, dim(2)?);
    let scalars = match kind {
        EnsembleKind::UnitModulus => k.checked_mul(m.checked_add(n).ok_or_else(|| bad("dimension overflow"))?),
        EnsembleKind::Gaussian => k.checked_mul(m).and_then(|v| v.checked_mul(n)).and_then(|v| v.checked_mul(2)),
    }
    .ok_or_else(|| bad("dimension overflow"))?;
    let payload = &bytes[HEADER_BYTES..];
    if scalars.checked_mul(SCALAR_BYTES) != Some(payload.len()) {
        return Err(bad("payload length does not match the header"));
    }
    let values: Vec<f64> =
        payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let ensemble = match kind {
        EnsembleKind::UnitModulus => {
            let (theta, phi) = values.split_at(k * m);
            MeasurementEnsemble::UnitModulus(UnitModulusEnsemble::from_phases(m, n, k, theta.to_vec(), phi.to_vec()).map_err(|e| bad(&e.to_string()))?)
        }
        EnsembleKind::Gaussian => {
            let data = values.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
            MeasurementEnsemble::Gaussian(GaussianEnsemble::from_matrices(m, n, k, data).map_err(|e| bad(&e.to_string()))?)
        }
    };
    Ok(ensemble)
}

pub fn write_ensemble(path: impl AsRef<Path>, ensemble: &MeasurementEnsemble) -> Result<()> {
    fs::write(path.as_ref(), encode_ensemble(ensemble)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_ensemble(path: impl AsRef<Path>) -> Result<MeasurementEnsemble> {
    let bytes = fs::read(path.as_ref()).map_err(|e| HarnessError::io(path.as_ref(), e))?;
    decode_ensemble(&bytes)
}
