//! Binary space file.
//!
//! ```text
//! magic        8 bytes   "USPACE01"
//! setup        u32       1 = cwu, 2 = wuc
//! reserved     u32       0
//! d            u64
//! n_features   u64
//! n_labels     u64
//! registry     (n_features + n_labels) keys, features first, each:
//!                u8 kind (0 word, 1 concept, 2 user)
//!                [concept only] u32 length + UTF-8 channel
//!                u32 length + UTF-8 token or user id
//! features     n_features * d f32, row-major
//! labels       n_labels * d f32, row-major
//! ```
//!
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use super::{EmbeddingSpace, ItemKey, Registry, Setup};
use crate::linalg::Matrix;
use crate::vectorize::user_matrix::{read_string, read_u32, read_u64};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"USPACE01";

fn write_string(out: &mut impl Write, s: &str) -> Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn write_key(out: &mut impl Write, key: &ItemKey) -> Result<()> {
    match key {
        ItemKey::Word { token } => {
            out.write_all(&[0])?;
            write_string(out, token)
        }
        ItemKey::Concept { channel, token } => {
            out.write_all(&[1])?;
            write_string(out, channel)?;
            write_string(out, token)
        }
        ItemKey::User { id } => {
            out.write_all(&[2])?;
            write_string(out, id)
        }
    }
}

fn read_key(input: &mut impl Read) -> Result<ItemKey> {
    let mut kind = [0u8; 1];
    input.read_exact(&mut kind)?;
    Ok(match kind[0] {
        0 => ItemKey::word(read_string(input)?),
        1 => {
            let channel = read_string(input)?;
            ItemKey::concept(channel, read_string(input)?)
        }
        2 => ItemKey::user(read_string(input)?),
        k => return Err(Error::Format(format!("unknown key kind {k}"))),
    })
}

fn read_table(input: &mut impl Read, rows: usize, dim: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * dim);
    let mut b = [0u8; 4];
    for _ in 0..rows * dim {
        input.read_exact(&mut b)?;
        data.push(f32::from_le_bytes(b) as f64);
    }
    Ok(Matrix::from_vec(rows, dim, data))
}

impl EmbeddingSpace {
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        let tag: u32 = match self.setup {
            Setup::CwU => 1,
            Setup::WuC => 2,
        };
        out.write_all(&tag.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        for n in [self.dim(), self.features.len(), self.labels.len()] {
            out.write_all(&(n as u64).to_le_bytes())?;
        }
        for key in self.features.keys().iter().chain(self.labels.keys()) {
            write_key(&mut out, key)?;
        }
        for x in self
            .feature_vectors
            .as_slice()
            .iter()
            .chain(self.label_vectors.as_slice())
        {
            out.write_all(&(*x as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an embedding space file".into()));
        }
        let setup = match read_u32(&mut input)? {
            1 => Setup::CwU,
            2 => Setup::WuC,
            t => return Err(Error::Format(format!("unknown setup tag {t}"))),
        };
        read_u32(&mut input)?;
        let dim = read_u64(&mut input)? as usize;
        let n_features = read_u64(&mut input)? as usize;
        let n_labels = read_u64(&mut input)? as usize;
        let features = (0..n_features)
            .map(|_| read_key(&mut input))
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..n_labels)
            .map(|_| read_key(&mut input))
            .collect::<Result<Vec<_>>>()?;
        let (features, labels) = (Registry::new(features), Registry::new(labels));
        if features.len() != n_features || labels.len() != n_labels {
            return Err(Error::Format(
                "registry keys are not sorted and unique".into(),
            ));
        }
        let fv = read_table(&mut input, n_features, dim)?;
        let lv = read_table(&mut input, n_labels, dim)?;
        Ok(Self::from_parts(setup, features, labels, fv, lv))
    }
}
