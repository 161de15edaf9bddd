//! JSON wire formats: matrices as `{ "dim": d, "re": [[..]], "im": [[..]] }`,
//! complex scalars as `[re, im]` (plain numbers are accepted as real).

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let d = m.nrows();
        let re = (0..d).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
        let im = (0..d).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect();
        MatrixJson { dim: d, re, im }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMat> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidInput("matrix dim must be positive".into()));
        }
        if self.re.len() != d || self.re.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!("`re` must be {d}x{d}")));
        }
        let has_im = !self.im.is_empty();
        if has_im && (self.im.len() != d || self.im.iter().any(|r| r.len() != d)) {
            return Err(Error::DimensionMismatch(format!("`im` must be {d}x{d}")));
        }
        let m = CMat::from_fn(d, d, |i, j| {
            c(self.re[i][j], if has_im { self.im[i][j] } else { 0.0 })
        });
        if !crate::linalg::is_finite(&m) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(m)
    }
}

/// Complex scalar with `[re, im]` / number wire format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cplx(pub C64);

impl Serialize for Cplx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cplx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Real(x) => Cplx(c(x, 0.0)),
            Raw::Pair([re, im]) => Cplx(c(re, im)),
        })
    }
}

impl From<C64> for Cplx {
    fn from(z: C64) -> Self {
        Cplx(z)
    }
}

pub fn vector_json(v: &[C64]) -> Vec<Cplx> {
    v.iter().copied().map(Cplx).collect()
}

pub fn vector_from_json(v: &[Cplx]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|z| z.0))
}

/// serde adapter for `C64` fields.
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        Cplx(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        Ok(Cplx::deserialize(d)?.0)
    }
}

/// serde adapter for `CMat` fields.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        MatrixJson::deserialize(d)?.to_matrix().map_err(serde::de::Error::custom)
    }
}
