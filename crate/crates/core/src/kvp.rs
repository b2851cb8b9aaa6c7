//! K-vector perturbation.
//!
//! Each row i of a sensed matrix is mixed with K public vectors under a private
//! weight vector psi_i = (psi_i0, ..., psi_iK):
//!
//! ```text
//! enc_i = (psi_i0 * S_i + sum_k psi_ik * D_k) .* B_i
//! dec_i = (rec_i - sum_k psi_ik * D_k) / psi_i0
//! ```
//!
//! Every attribute of a dataset is encrypted with the same key ring.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::{BinaryIndexMatrix, RecoveredMatrix, SensedMatrix};
use crate::{seed, Error, Result};

/// Bounds for the data weight psi_i0.
pub const DATA_WEIGHT_RANGE: (f64, f64) = (0.2, 0.8);
/// Bounds for the perturbation weights psi_ij, j >= 1.
pub const PERTURB_WEIGHT_RANGE: (f64, f64) = (0.01, 0.99);
/// Default number of public vectors.
pub const DEFAULT_K: usize = 4;

const SINUSOIDS_PER_VECTOR: usize = 3;
const MIN_DATA_WEIGHT: f64 = 1e-12;

/// The K public perturbation vectors, each of length t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicVectorSet {
    t: usize,
    seed: u64,
    vectors: Vec<Vec<f64>>,
}

impl PublicVectorSet {
    pub fn from_vectors(t: usize, seed: u64, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = vectors.iter().position(|v| v.len() != t) {
            return Err(Error::KeyMismatch(format!(
                "public vector {bad} has length {}, expected {t}",
                vectors[bad].len()
            )));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("public vectors"));
        }
        Ok(Self { t, seed, vectors })
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// Per-row weights psi_i of length K+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateKey {
    rows: Vec<Vec<f64>>,
}

impl PrivateKey {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidKey("key must have at least one row".into()))?;
        if width == 0 {
            return Err(Error::InvalidKey("key rows must hold psi_0".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidKey(format!(
                    "row {i} has length {}, expected {width}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|&w| !(w > 0.0 && w < 1.0)) {
                return Err(Error::InvalidKey(format!(
                    "psi[{i}][{j}] = {} not in (0,1)",
                    row[j]
                )));
            }
            let (lo, hi) = DATA_WEIGHT_RANGE;
            if !(lo..=hi).contains(&row[0]) {
                return Err(Error::InvalidKey(format!(
                    "psi[{i}][0] = {} not in [{lo}, {hi}]",
                    row[0]
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len() - 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Public vectors and private key generated together for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KvpKeyRing {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub seed: u64,
    pub public: PublicVectorSet,
    pub key: PrivateKey,
}

impl KvpKeyRing {
    pub fn generate(n: usize, t: usize, k: usize, seed: u64) -> Self {
        let public = gen_public_vectors(t, k, seed::derive(seed, &[0x5055_424c]));
        let key = gen_private_key(n, k, seed::derive(seed, &[0x004b_4559]));
        Self {
            n,
            t,
            k,
            seed,
            public,
            key,
        }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ring: Self = serde_json::from_str(&text)?;
        // Re-validate through the checked constructors.
        PublicVectorSet::from_vectors(
            ring.public.t,
            ring.public.seed,
            ring.public.vectors.clone(),
        )?;
        PrivateKey::from_rows(ring.key.rows.clone())?;
        check_key(ring.n, ring.t, &ring.public, &ring.key)?;
        Ok(ring)
    }
}

/// Encrypted sensed matrix (or encrypted recovery) together with its mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EncryptedMatrix {
    data: DMatrix<f64>,
    mask: BinaryIndexMatrix,
}

impl EncryptedMatrix {
    /// Wrap a completed recovery of an encrypted matrix for decryption.
    pub fn from_recovered(rec: RecoveredMatrix, mask: BinaryIndexMatrix) -> Result<Self> {
        crate::matrix::check_same_shape("encrypted recovery", rec.shape(), mask.shape())?;
        Ok(Self {
            data: rec.into_inner(),
            mask,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn mask(&self) -> &BinaryIndexMatrix {
        &self.mask
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, BinaryIndexMatrix) {
        (self.data, self.mask)
    }
}

/// Smooth public vectors: each is a sum of three sinusoids with 1 to 5 periods
/// over the window, a random phase and an amplitude in [0.2, 1.0].
pub fn gen_public_vectors(t: usize, k: usize, seed: u64) -> PublicVectorSet {
    let mut rng = seed::rng(seed);
    let vectors = (0..k)
        .map(|_| {
            let waves: Vec<(f64, f64, f64)> = (0..SINUSOIDS_PER_VECTOR)
                .map(|_| {
                    let freq = rng.random_range(1.0..=5.0);
                    let phase = rng.random_range(0.0..TAU);
                    let amp = rng.random_range(0.2..=1.0);
                    (freq, phase, amp)
                })
                .collect();
            (0..t)
                .map(|j| {
                    let x = j as f64 / t as f64;
                    waves
                        .iter()
                        .map(|&(f, p, a)| a * (TAU * f * x + p).sin())
                        .sum()
                })
                .collect()
        })
        .collect();
    PublicVectorSet { t, seed, vectors }
}

pub fn gen_private_key(n: usize, k: usize, seed: u64) -> PrivateKey {
    let mut rng = seed::rng(seed);
    let (d_lo, d_hi) = DATA_WEIGHT_RANGE;
    let (p_lo, p_hi) = PERTURB_WEIGHT_RANGE;
    let rows = (0..n)
        .map(|_| {
            let mut row = Vec::with_capacity(k + 1);
            row.push(rng.random_range(d_lo..=d_hi));
            row.extend((0..k).map(|_| rng.random_range(p_lo..p_hi)));
            row
        })
        .collect();
    PrivateKey { rows }
}

fn check_key(n: usize, t: usize, d: &PublicVectorSet, psi: &PrivateKey) -> Result<()> {
    if d.len() != t {
        return Err(Error::KeyMismatch(format!(
            "public vectors have length {}, matrix has {t} columns",
            d.len()
        )));
    }
    if psi.n() != n {
        return Err(Error::KeyMismatch(format!(
            "key has {} rows, matrix has {n}",
            psi.n()
        )));
    }
    if psi.k() != d.k() {
        return Err(Error::KeyMismatch(format!(
            "key carries K = {}, public set has K = {}",
            psi.k(),
            d.k()
        )));
    }
    Ok(())
}

/// Row i of the perturbation matrix: sum_k psi_ik * D_k.
fn perturbation_row(d: &PublicVectorSet, weights: &[f64]) -> DVector<f64> {
    let mut acc = DVector::zeros(d.len());
    for (w, v) in weights[1..].iter().zip(&d.vectors) {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    acc
}

/// The n x t matrix whose rows are the per-row perturbations.
pub fn perturbation_matrix(d: &PublicVectorSet, psi: &PrivateKey) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(psi.n(), d.len());
    for i in 0..psi.n() {
        p.set_row(i, &perturbation_row(d, psi.row(i)).transpose());
    }
    p
}

pub fn encrypt(s: &SensedMatrix, d: &PublicVectorSet, psi: &PrivateKey) -> Result<EncryptedMatrix> {
    let (n, t) = s.shape();
    check_key(n, t, d, psi)?;
    let mut out = DMatrix::zeros(n, t);
    for i in 0..n {
        let w = psi.row(i);
        let pert = perturbation_row(d, w);
        for j in 0..t {
            if s.mask().get(i, j) {
                out[(i, j)] = w[0] * s.data()[(i, j)] + pert[j];
            }
        }
    }
    Ok(EncryptedMatrix {
        data: out,
        mask: s.mask().clone(),
    })
}

/// Exact inverse of [`encrypt`] on a completed matrix: subtract the full
/// perturbation, then divide by psi_i0.
pub fn decrypt(
    a_enc: &EncryptedMatrix,
    d: &PublicVectorSet,
    psi: &PrivateKey,
) -> Result<RecoveredMatrix> {
    let (n, t) = a_enc.shape();
    check_key(n, t, d, psi)?;
    let mut out = DMatrix::zeros(n, t);
    for i in 0..n {
        let w = psi.row(i);
        if w[0] < MIN_DATA_WEIGHT {
            return Err(Error::InvalidKey(format!(
                "psi[{i}][0] = {} too small",
                w[0]
            )));
        }
        let pert = perturbation_row(d, w);
        for j in 0..t {
            out[(i, j)] = (a_enc.data()[(i, j)] - pert[j]) / w[0];
        }
    }
    RecoveredMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::svd_spectrum;

    fn full(n: usize, t: usize, v: &[f64]) -> SensedMatrix {
        SensedMatrix::new(
            DMatrix::from_row_slice(n, t, v),
            BinaryIndexMatrix::ones(n, t),
        )
        .unwrap()
    }

    #[test]
    fn empty_public_set() {
        let d = gen_public_vectors(10, 0, 1);
        assert_eq!(d.k(), 0);
        assert!(d.is_empty());
    }

    #[test]
    fn public_vectors_deterministic_and_bounded() {
        let a = gen_public_vectors(120, 4, 9);
        assert_eq!(a, gen_public_vectors(120, 4, 9));
        assert_ne!(a, gen_public_vectors(120, 4, 10));
        assert!(a.vectors().iter().flatten().all(|v| v.abs() <= 3.0));
    }

    #[test]
    fn stacked_perturbations_have_rank_at_most_k() {
        let d = gen_public_vectors(120, 4, 3);
        let psi = gen_private_key(50, 4, 4);
        let p = perturbation_matrix(&d, &psi);
        assert!(svd_spectrum(&p).unwrap().numerical_rank <= 4);
    }

    #[test]
    fn key_ranges() {
        let psi = gen_private_key(500, 6, 11);
        for row in psi.rows() {
            assert!((0.2..=0.8).contains(&row[0]));
            assert!(row.iter().all(|&w| w > 0.0 && w < 1.0));
            assert!(row[1..].iter().all(|&w| w >= 0.01));
        }
        assert_eq!(psi, gen_private_key(500, 6, 11));
        assert_ne!(psi, gen_private_key(500, 6, 12));
    }

    #[test]
    fn key_validation() {
        assert!(PrivateKey::from_rows(vec![vec![0.5, 1.0]]).is_err());
        assert!(PrivateKey::from_rows(vec![vec![0.1, 0.5]]).is_err());
        assert!(PrivateKey::from_rows(vec![vec![0.5, 0.5], vec![0.5]]).is_err());
        assert!(PrivateKey::from_rows(vec![]).is_err());
        assert!(PrivateKey::from_rows(vec![vec![0.5, 0.3]]).is_ok());
    }

    #[test]
    fn encrypt_pure_scaling() {
        let d = gen_public_vectors(2, 0, 0);
        let psi = PrivateKey::from_rows(vec![vec![0.5]]).unwrap();
        let e = encrypt(&full(1, 2, &[2.0, 4.0]), &d, &psi).unwrap();
        assert_eq!(e.data(), &DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
    }

    #[test]
    fn encrypt_and_decrypt_by_hand() {
        let d = PublicVectorSet::from_vectors(2, 0, vec![vec![1.0, 1.0]]).unwrap();
        let psi = PrivateKey::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        let e = encrypt(&full(1, 2, &[2.0, 4.0]), &d, &psi).unwrap();
        assert_eq!(e.data(), &DMatrix::from_row_slice(1, 2, &[1.5, 2.5]));

        let mask = BinaryIndexMatrix::from_fn(1, 2, |_, j| j == 0);
        let s =
            SensedMatrix::new(DMatrix::from_row_slice(1, 2, &[2.0, 4.0]), mask.clone()).unwrap();
        let e = encrypt(&s, &d, &psi).unwrap();
        assert_eq!(e.data(), &DMatrix::from_row_slice(1, 2, &[1.5, 0.0]));
        assert_eq!(e.mask(), &mask);

        let rec = RecoveredMatrix::new(DMatrix::from_row_slice(1, 2, &[1.5, 2.5])).unwrap();
        let wrapped = EncryptedMatrix::from_recovered(rec, BinaryIndexMatrix::ones(1, 2)).unwrap();
        let a = decrypt(&wrapped, &d, &psi).unwrap();
        assert_eq!(a.data(), &DMatrix::from_row_slice(1, 2, &[2.0, 4.0]));
    }

    #[test]
    fn decrypt_without_vectors_divides() {
        let d = gen_public_vectors(3, 0, 0);
        let psi = PrivateKey::from_rows(vec![vec![0.25]]).unwrap();
        let rec = RecoveredMatrix::new(DMatrix::from_row_slice(1, 3, &[1.0, 2.0, -1.0])).unwrap();
        let e = EncryptedMatrix::from_recovered(rec, BinaryIndexMatrix::ones(1, 3)).unwrap();
        assert_eq!(
            decrypt(&e, &d, &psi).unwrap().data(),
            &DMatrix::from_row_slice(1, 3, &[4.0, 8.0, -4.0])
        );
    }

    #[test]
    fn mismatches_rejected() {
        let s = full(2, 3, &[1.0; 6]);
        let d = gen_public_vectors(3, 2, 0);
        assert!(encrypt(&s, &d, &gen_private_key(3, 2, 0)).is_err());
        assert!(encrypt(&s, &d, &gen_private_key(2, 1, 0)).is_err());
        assert!(encrypt(&s, &gen_public_vectors(4, 2, 0), &gen_private_key(2, 2, 0)).is_err());
    }

    #[test]
    fn encryption_is_row_local() {
        let d = gen_public_vectors(5, 3, 1);
        let psi = gen_private_key(4, 3, 2);
        let base: Vec<f64> = (0..20).map(|v| v as f64).collect();
        let mut changed = base.clone();
        changed[7] += 10.0; // row 1
        let e0 = encrypt(&full(4, 5, &base), &d, &psi).unwrap();
        let e1 = encrypt(&full(4, 5, &changed), &d, &psi).unwrap();
        for i in 0..4 {
            let same = e0.data().row(i) == e1.data().row(i);
            assert_eq!(same, i != 1);
        }
    }

    #[test]
    fn key_ring_json_round_trip() {
        let ring = KvpKeyRing::generate(6, 10, 3, 42);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ring.json");
        ring.save_json(&p).unwrap();
        let back = KvpKeyRing::load_json(&p).unwrap();
        assert_eq!(back, ring);
        assert_eq!(back.public.vectors(), ring.public.vectors());
    }
}
