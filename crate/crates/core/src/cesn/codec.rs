//! Versioned little-endian binary model format.
//!
//! ```text
//! magic "SKYESN\0\0" | version u32
//! n, input_dim, output_dim, washout, conceptor_count, has_readout: u32
//! aperture, ridge: f64
//! W_in (n × input_dim, row-major f64)
//! W as nnz: u32 then nnz × (row-major index u32, value f64)
//! bias (n f64) | D (n × n f64) | W_out (output_dim × n f64, if present)
//! per conceptor: rank u32, rank eigenvalues, rank eigenvectors of n f64
//! ```
//!
//! Conceptors are stored as their eigenpairs above [`EIGEN_KEEP`]; the
//! source correlations are recovered from M on load.

use crate::numerics::{sym_eig, Mat};

use super::conceptor::Conceptor;
use super::{CesnError, EsnModel};

pub const MODEL_MAGIC: &[u8; 8] = b"SKYESN\0\0";
pub const MODEL_VERSION: u32 = 1;
/// Conceptor eigenvalues at or below this are not written.
pub const EIGEN_KEEP: f64 = 1e-10;
/// Stored conceptor eigenvectors must be orthonormal to this accuracy.
const ORTHONORMAL_TOL: f64 = 1e-6;
/// Upper bound on any stored dimension, so corrupt headers cannot request
/// huge allocations before the length check.
const MAX_DIM: usize = 1 << 16;

pub fn encode_model(m: &EsnModel) -> Vec<u8> {
    let n = m.size();
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, MODEL_VERSION);
    for v in [n, m.input_dim(), m.output_dim, m.washout, m.conceptors.len(), m.w_out.is_some() as usize] {
        put_u32(&mut out, v as u32);
    }
    put_f64(&mut out, m.aperture);
    put_f64(&mut out, m.ridge);
    put_mat(&mut out, &m.w_in);
    let w = m.w.to_row_major();
    let nz: Vec<(usize, f64)> = w.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
    put_u32(&mut out, nz.len() as u32);
    for (i, v) in nz {
        put_u32(&mut out, i as u32);
        put_f64(&mut out, v);
    }
    for b in &m.bias {
        put_f64(&mut out, *b);
    }
    put_mat(&mut out, &m.d);
    if let Some(w_out) = &m.w_out {
        put_mat(&mut out, w_out);
    }
    for c in &m.conceptors {
        let (vals, vecs) = sym_eig(&c.m.symmetrized()).expect("conceptor is symmetric");
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > EIGEN_KEEP).collect();
        put_u32(&mut out, keep.len() as u32);
        for &k in &keep {
            put_f64(&mut out, vals[k]);
        }
        for &k in &keep {
            for i in 0..n {
                put_f64(&mut out, vecs[(i, k)]);
            }
        }
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<EsnModel, CesnError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(CesnError::Codec("bad magic".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(CesnError::Codec(format!("unsupported version {version}")));
    }
    let n = r.dim()?;
    let input_dim = r.dim()?;
    let output_dim = r.dim()?;
    let washout = r.u32()? as usize;
    let count = r.dim()?;
    let has_readout = match r.u32()? {
        0 => false,
        1 => true,
        v => return Err(CesnError::Codec(format!("readout flag {v}"))),
    };
    if n == 0 || input_dim == 0 || output_dim == 0 {
        return Err(CesnError::Codec("zero dimension".into()));
    }
    let aperture = r.f64()?;
    let ridge = r.f64()?;
    let w_in = r.mat(n, input_dim)?;
    let nnz = r.u32()? as usize;
    if nnz > n * n {
        return Err(CesnError::Codec(format!("{nnz} nonzeros in a {n}x{n} reservoir")));
    }
    r.need(nnz, 12)?;
    let mut w = Mat::zeros(n, n);
    for _ in 0..nnz {
        let i = r.u32()? as usize;
        let v = r.finite()?;
        if i >= n * n {
            return Err(CesnError::Codec(format!("reservoir index {i} out of range")));
        }
        w[(i / n, i % n)] = v;
    }
    let bias = (0..n).map(|_| r.finite()).collect::<Result<Vec<_>, _>>()?;
    let d = r.mat(n, n)?;
    let w_out = if has_readout { Some(r.mat(output_dim, n)?) } else { None };
    let mut conceptors = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let rank = r.dim()?;
        if rank > n {
            return Err(CesnError::Codec(format!("conceptor rank {rank} exceeds {n}")));
        }
        let vals = (0..rank).map(|_| r.finite()).collect::<Result<Vec<_>, _>>()?;
        if vals.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(CesnError::Codec("conceptor eigenvalue outside [0,1)".into()));
        }
        let vecs = r.mat(rank, n)?;
        let gram = &vecs * &vecs.transpose();
        if (&gram - &Mat::identity(rank)).max_abs() > ORTHONORMAL_TOL {
            return Err(CesnError::Codec("conceptor eigenvectors not orthonormal".into()));
        }
        let mut m = Mat::zeros(n, n);
        for (k, lam) in vals.iter().enumerate() {
            for i in 0..n {
                let a = lam * vecs[(k, i)];
                for j in 0..n {
                    m[(i, j)] += a * vecs[(k, j)];
                }
            }
        }
        conceptors.push(Conceptor { m: m.symmetrized(), r: None, aperture });
    }
    if r.at != bytes.len() {
        return Err(CesnError::Codec(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let mut model = EsnModel::from_parts(w_in, w, bias, output_dim, aperture, ridge, washout)?;
    model.restore(d, conceptors, w_out)?;
    Ok(model)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_mat(out: &mut Vec<u8>, m: &Mat) {
    for v in m.to_row_major() {
        put_f64(out, v);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], CesnError> {
        let end = self.at.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CesnError::Codec(format!("truncated at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn need(&self, count: usize, width: usize) -> Result<(), CesnError> {
        match count.checked_mul(width) {
            Some(b) if b <= self.bytes.len() - self.at => Ok(()),
            _ => Err(CesnError::Codec(format!("truncated at byte {}", self.at))),
        }
    }

    fn u32(&mut self) -> Result<u32, CesnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn dim(&mut self) -> Result<usize, CesnError> {
        let v = self.u32()? as usize;
        if v > MAX_DIM {
            return Err(CesnError::Codec(format!("dimension {v} too large")));
        }
        Ok(v)
    }

    fn f64(&mut self) -> Result<f64, CesnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn finite(&mut self) -> Result<f64, CesnError> {
        let v = self.f64()?;
        if !v.is_finite() {
            return Err(CesnError::Codec(format!("non-finite value before byte {}", self.at)));
        }
        Ok(v)
    }

    fn mat(&mut self, rows: usize, cols: usize) -> Result<Mat, CesnError> {
        let count = rows.checked_mul(cols).ok_or_else(|| CesnError::Codec("matrix too large".into()))?;
        self.need(count, 8)?;
        let data = (0..count).map(|_| self.finite()).collect::<Result<Vec<_>, _>>()?;
        Ok(Mat::from_rows(rows, cols, &data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{EsnConfig, RandomSource};

    fn trained() -> EsnModel {
        let cfg = EsnConfig { reservoir_size: 40, aperture: 50.0, washout: 20, ..EsnConfig::default() };
        let mut m = EsnModel::new(1, 1, &cfg, &RandomSource::new(3)).unwrap();
        for p in [7.0, 11.0] {
            let u: Vec<Vec<f64>> = (0..200).map(|n| vec![(n as f64 / p * std::f64::consts::TAU).sin()]).collect();
            m.load_pattern(&u, &u).unwrap();
        }
        m.train_readout().unwrap();
        m
    }

    #[test]
    fn round_trip_preserves_behaviour() {
        let m = trained();
        let bytes = encode_model(&m);
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back.w, m.w);
        assert_eq!(back.d, m.d);
        assert_eq!(back.w_out, m.w_out);
        for k in 0..2 {
            assert!((&back.conceptors[k].m - &m.conceptors[k].m).max_abs() < 1e-9);
            let a = m.recall(k, 30).unwrap();
            let b = back.recall(k, 30).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x[0] - y[0]).abs() < 1e-6);
            }
        }
        assert!((back.quota() - m.quota()).abs() < 1e-6);
        assert_eq!(encode_model(&back).len(), bytes.len());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_model(&trained());
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_model(&bad).is_err());
        let mut ver = bytes.clone();
        ver[8] = 9;
        assert!(decode_model(&ver).is_err());
        let mut huge = bytes.clone();
        huge[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_model(&huge).is_err());
        assert!(decode_model(&[]).is_err());

        // Scaling the last eigenvector of the last conceptor breaks
        // orthonormality.
        let mut skew = bytes;
        let at = skew.len() - 8;
        let v = f64::from_le_bytes(skew[at..].try_into().unwrap());
        skew[at..].copy_from_slice(&(3.0 * v + 0.5).to_le_bytes());
        assert!(matches!(decode_model(&skew), Err(CesnError::Codec(m)) if m.contains("orthonormal")));
    }
}
