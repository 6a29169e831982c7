//! Dense user representations and their binary file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes   "UMATRIX1"
//! provenance   u32       0 = tfidf_fused_pca, 1 = embedding (cwu), 2 = embedding (wuc)
//! reserved     u32       0
//! n_users      u64
//! d            u64
//! values       n_users * d f32, row-major
//! user ids     n_users × (u32 byte length, UTF-8 bytes)
//! ```

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::embed::Setup;
use crate::linalg::Matrix;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"UMATRIX1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TfidfFusedPca,
    Embedding(Setup),
}

impl Provenance {
    fn tag(self) -> u32 {
        match self {
            Provenance::TfidfFusedPca => 0,
            Provenance::Embedding(Setup::CwU) => 1,
            Provenance::Embedding(Setup::WuC) => 2,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        Ok(match tag {
            0 => Provenance::TfidfFusedPca,
            1 => Provenance::Embedding(Setup::CwU),
            2 => Provenance::Embedding(Setup::WuC),
            t => return Err(Error::Format(format!("unknown provenance tag {t}"))),
        })
    }

    /// Short name used in reports and on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            Provenance::TfidfFusedPca => "tfidf",
            Provenance::Embedding(Setup::CwU) => "cwu",
            Provenance::Embedding(Setup::WuC) => "wuc",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// One dense vector per user, rows in the corpus user order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserMatrix {
    user_ids: Vec<String>,
    vectors: Matrix,
    provenance: Provenance,
}

impl UserMatrix {
    pub fn new(user_ids: Vec<String>, vectors: Matrix, provenance: Provenance) -> Result<Self> {
        if user_ids.len() != vectors.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "{} user ids for {} rows",
                user_ids.len(),
                vectors.n_rows()
            )));
        }
        if vectors.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite entry in user matrix".into(),
            ));
        }
        Ok(Self {
            user_ids,
            vectors,
            provenance,
        })
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.n_cols()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn row_of(&self, user_id: &str) -> Option<usize> {
        self.user_ids
            .binary_search_by(|u| u.as_str().cmp(user_id))
            .ok()
            .or_else(|| {
                // ids are sorted when built from a corpus; fall back for hand-made matrices
                self.user_ids.iter().position(|u| u == user_id)
            })
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&self.provenance.tag().to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&(self.n_users() as u64).to_le_bytes())?;
        out.write_all(&(self.dim() as u64).to_le_bytes())?;
        for x in self.vectors.as_slice() {
            out.write_all(&(*x as f32).to_le_bytes())?;
        }
        for id in &self.user_ids {
            out.write_all(&(id.len() as u32).to_le_bytes())?;
            out.write_all(id.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a user matrix file".into()));
        }
        let provenance = Provenance::from_tag(read_u32(&mut input)?)?;
        read_u32(&mut input)?;
        let n = read_u64(&mut input)? as usize;
        let d = read_u64(&mut input)? as usize;
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            let mut b = [0u8; 4];
            input.read_exact(&mut b)?;
            data.push(f32::from_le_bytes(b) as f64);
        }
        let user_ids = (0..n)
            .map(|_| read_string(&mut input))
            .collect::<Result<Vec<_>>>()?;
        Self::new(user_ids, Matrix::from_vec(n, d, data), provenance)
    }
}

pub(crate) fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_string(input: &mut impl Read) -> Result<String> {
    let len = read_u32(input)? as usize;
    let mut buf = vec![0u8; len];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}
