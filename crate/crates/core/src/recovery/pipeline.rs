//! Encrypt, recover on ciphertext, decrypt locally.

use super::{cs_complete, maa_complete_k, SolveReport, SolverConfig};
use crate::kvp::{decrypt, encrypt, EncryptedMatrix, PrivateKey, PublicVectorSet};
use crate::matrix::{
    check_same_shape, denormalize, normalize, retain_observed, RecoveredMatrix, SensedMatrix,
};
use crate::{Error, Result};

/// Perturbation adds up to K to the rank of the data, so completion of an
/// encrypted matrix runs with rank budget r + K (capped at min(n, t)).
fn encrypted_rank(cfg: &SolverConfig, k: usize, shape: (usize, usize)) -> usize {
    (cfg.rank + k).min(shape.0.min(shape.1))
}

/// Single-attribute privacy-preserving recovery. Observed entries are returned
/// as sensed; only missing entries come from the decrypted estimate.
pub fn ppcs_recover(
    s: &SensedMatrix,
    d: &PublicVectorSet,
    psi: &PrivateKey,
    cfg: &SolverConfig,
) -> Result<(RecoveredMatrix, SolveReport)> {
    cfg.validate()?;
    let enc = encrypt(s, d, psi)?;
    let mut inner = cfg.clone();
    inner.rank = encrypted_rank(cfg, d.k(), s.shape());
    let (rec, report) = cs_complete(enc.data(), enc.mask(), &inner)?;
    let rec = EncryptedMatrix::from_recovered(rec, enc.mask().clone())?;
    Ok((retain_observed(s, &decrypt(&rec, d, psi)?)?, report))
}

/// Two-attribute privacy-preserving joint recovery. Both attributes are
/// normalized, encrypted under the same key ring, completed jointly, decrypted
/// and rescaled. Observed entries are kept as sensed.
pub fn ppcs_maa_recover(
    s1: &SensedMatrix,
    s2: &SensedMatrix,
    d: &PublicVectorSet,
    psi: &PrivateKey,
    cfg: &SolverConfig,
) -> Result<([RecoveredMatrix; 2], SolveReport)> {
    let (mut out, report) = ppcs_maa_recover_k(&[s1, s2], d, psi, cfg)?;
    let second = out.pop().expect("two estimates");
    let first = out.pop().expect("two estimates");
    Ok(([first, second], report))
}

/// k-attribute form of [`ppcs_maa_recover`]. The shared component gets the
/// r + K budget; private components keep `cfg.private_rank()`.
pub fn ppcs_maa_recover_k(
    sensed: &[&SensedMatrix],
    d: &PublicVectorSet,
    psi: &PrivateKey,
    cfg: &SolverConfig,
) -> Result<(Vec<RecoveredMatrix>, SolveReport)> {
    cfg.validate()?;
    if sensed.len() < 2 {
        return Err(Error::TooFewAttributes(sensed.len()));
    }
    let shape = sensed[0].shape();
    for s in sensed {
        check_same_shape("joint recovery input", s.shape(), shape)?;
    }

    let mut records = Vec::with_capacity(sensed.len());
    let mut encrypted = Vec::with_capacity(sensed.len());
    for s in sensed {
        let (scaled, rec) = normalize(s)?;
        records.push(rec);
        encrypted.push(encrypt(&scaled, d, psi)?);
    }

    let mut inner = cfg.clone();
    inner.rank = encrypted_rank(cfg, d.k(), shape);
    inner.private_rank = Some(cfg.private_rank());
    let data: Vec<_> = encrypted.iter().map(EncryptedMatrix::data).collect();
    let masks: Vec<_> = encrypted.iter().map(EncryptedMatrix::mask).collect();
    let (joint, report) = maa_complete_k(&data, &masks, &inner)?;

    let estimates = joint.estimates()?;
    let out = estimates
        .into_iter()
        .zip(&encrypted)
        .zip(records)
        .zip(sensed)
        .map(|(((est, enc), rec), s)| {
            let wrapped = EncryptedMatrix::from_recovered(est, enc.mask().clone())?;
            retain_observed(s, &denormalize(&decrypt(&wrapped, d, psi)?, rec)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, report))
}
