use riplab::format::{decode_ensemble, encode_ensemble, read_ensemble, write_ensemble, HEADER_BYTES, MAGIC};
use riplab::HarnessError;
use riplab_core::measurements::{sample_ensemble, EnsembleKind};
use riplab_core::RngStream;

#[test]
fn round_trips_both_kinds() {
    for kind in [EnsembleKind::UnitModulus, EnsembleKind::Gaussian] {
        let ens = sample_ensemble(kind, 3, 5, 7, &RngStream::new(1, 2)).unwrap();
        let bytes = encode_ensemble(&ens);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes[8], kind.tag());
        assert_eq!(u64::from_le_bytes(bytes[9..17].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[17..25].try_into().unwrap()), 5);
        assert_eq!(u64::from_le_bytes(bytes[25..33].try_into().unwrap()), 7);
        assert_eq!(bytes.len(), HEADER_BYTES + ens.storage_bytes());
        assert_eq!(decode_ensemble(&bytes).unwrap(), ens);
    }
}

#[test]
fn payload_order() {
    let ens = sample_ensemble(EnsembleKind::UnitModulus, 2, 3, 2, &RngStream::new(4, 0)).unwrap();
    let bytes = encode_ensemble(&ens);
    let at = |i: usize| f64::from_le_bytes(bytes[HEADER_BYTES + 8 * i..HEADER_BYTES + 8 * i + 8].try_into().unwrap());
    let riplab_core::MeasurementEnsemble::UnitModulus(e) = &ens else { unreachable!() };
    // theta for k = 1, m = 0 sits after the two phases of k = 0
    assert_eq!(at(2), e.theta()[2]);
    // phi starts after all K * M thetas
    assert_eq!(at(4), e.phi()[0]);
    assert_eq!(at(4 + 3 + 2), e.phi()[5]);

    let g = sample_ensemble(EnsembleKind::Gaussian, 2, 2, 2, &RngStream::new(4, 1)).unwrap();
    let bytes = encode_ensemble(&g);
    let at = |i: usize| f64::from_le_bytes(bytes[HEADER_BYTES + 8 * i..HEADER_BYTES + 8 * i + 8].try_into().unwrap());
    let riplab_core::MeasurementEnsemble::Gaussian(e) = &g else { unreachable!() };
    assert_eq!((at(0), at(1)), (e.entries()[0].re, e.entries()[0].im));
    assert_eq!((at(10), at(11)), (e.entries()[5].re, e.entries()[5].im));
}

#[test]
fn rejects_malformed_input() {
    let ens = sample_ensemble(EnsembleKind::UnitModulus, 2, 2, 2, &RngStream::new(0, 0)).unwrap();
    let good = encode_ensemble(&ens);
    let is_format = |r: Result<_, HarnessError>| matches!(r, Err(HarnessError::Format(_)));
    assert!(is_format(decode_ensemble(&good[..10])));
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(is_format(decode_ensemble(&bad)));
    let mut bad = good.clone();
    bad[8] = 9;
    assert!(is_format(decode_ensemble(&bad)));
    assert!(is_format(decode_ensemble(&good[..good.len() - 8])));
    let mut bad = good.clone();
    let last = bad.len() - 8;
    bad[last..].copy_from_slice(&7.0f64.to_le_bytes());
    assert!(is_format(decode_ensemble(&bad)));
}

#[test]
fn file_round_trip() {
    let ens = sample_ensemble(EnsembleKind::Gaussian, 2, 3, 4, &RngStream::new(3, 3)).unwrap();
    let path = std::env::temp_dir().join(format!("riplab-format-{}.bin", std::process::id()));
    write_ensemble(&path, &ens).unwrap();
    assert_eq!(read_ensemble(&path).unwrap(), ens);
    std::fs::remove_file(&path).unwrap();
}
