//! CPTN binary tensor files.
//!
//! Layout (all little-endian): `b"CPTN"`, `u32` version, `u8` scalar kind
//! (0 real, 1 complex interleaved), `u8` order, zero padding to offset 16,
//! `order x u64` dims, then the scalars in column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::error::CpError;
use crate::scalar::{Scalar, ScalarKind};
use crate::tensor::DenseTensor;

pub const MAGIC: [u8; 4] = *b"CPTN";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown scalar kind code {0}")]
    UnknownKind(u8),
    #[error("expected {expected:?} tensor, file holds {found:?}")]
    KindMismatch { expected: ScalarKind, found: ScalarKind },
    #[error("invalid tensor: {0}")]
    Tensor(#[from] CpError),
}

/// A tensor read from disk whose scalar kind is only known at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Real(DenseTensor<f64>),
    Complex(DenseTensor<Complex64>),
}

impl AnyTensor {
    pub fn kind(&self) -> ScalarKind {
        match self {
            AnyTensor::Real(_) => ScalarKind::Real,
            AnyTensor::Complex(_) => ScalarKind::Complex,
        }
    }

    pub fn dims(&self) -> &[usize] {
        match self {
            AnyTensor::Real(t) => t.dims(),
            AnyTensor::Complex(t) => t.dims(),
        }
    }

    pub fn into_real(self) -> Result<DenseTensor<f64>, FormatError> {
        match self {
            AnyTensor::Real(t) => Ok(t),
            AnyTensor::Complex(_) => Err(FormatError::KindMismatch {
                expected: ScalarKind::Real,
                found: ScalarKind::Complex,
            }),
        }
    }

    pub fn into_complex(self) -> Result<DenseTensor<Complex64>, FormatError> {
        match self {
            AnyTensor::Complex(t) => Ok(t),
            AnyTensor::Real(_) => Err(FormatError::KindMismatch {
                expected: ScalarKind::Complex,
                found: ScalarKind::Real,
            }),
        }
    }
}

pub fn write_tensor<T: Scalar, W: Write>(mut w: W, t: &DenseTensor<T>) -> Result<(), FormatError> {
    let order = u8::try_from(t.order())
        .map_err(|_| CpError::InvalidDims("order above 255 cannot be stored".into()))?;
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8] = T::KIND.code();
    header[9] = order;
    w.write_all(&header)?;
    for &d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &x in t.data() {
        w.write_all(&x.re().to_le_bytes())?;
        if T::WORDS == 2 {
            w.write_all(&x.im().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<AnyTensor, FormatError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    let magic: [u8; 4] = header[..4].try_into().expect("slice of length 4");
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("slice of length 4"));
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let kind = ScalarKind::from_code(header[8]).ok_or(FormatError::UnknownKind(header[8]))?;
    let order = header[9] as usize;
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        let d = usize::try_from(u64::from_le_bytes(b))
            .map_err(|_| CpError::InvalidDims("dimension exceeds usize".into()))?;
        dims.push(d);
    }
    Ok(match kind {
        ScalarKind::Real => AnyTensor::Real(read_body(&mut r, dims)?),
        ScalarKind::Complex => AnyTensor::Complex(read_body(&mut r, dims)?),
    })
}

fn read_body<T: Scalar, R: Read>(r: &mut R, dims: Vec<usize>) -> Result<DenseTensor<T>, FormatError> {
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| CpError::InvalidDims("element count overflows usize".into()))?;
    let mut data = Vec::with_capacity(len);
    let mut b = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut b)?;
        let re = f64::from_le_bytes(b);
        let im = if T::WORDS == 2 {
            r.read_exact(&mut b)?;
            f64::from_le_bytes(b)
        } else {
            0.0
        };
        data.push(T::from_parts(re, im));
    }
    Ok(DenseTensor::new(dims, data)?)
}

pub fn save<T: Scalar>(path: impl AsRef<Path>, t: &DenseTensor<T>) -> Result<(), FormatError> {
    write_tensor(BufWriter::new(File::create(path)?), t)
}

pub fn load(path: impl AsRef<Path>) -> Result<AnyTensor, FormatError> {
    read_tensor(BufReader::new(File::open(path)?))
}
