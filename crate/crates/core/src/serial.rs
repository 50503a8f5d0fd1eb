//! Serde adapters for complex data as nested `[re, im]` arrays, row-major.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMatrix, CVector, C64};

type Pair = [f64; 2];

fn to_pair(z: &C64) -> Pair {
    [z.re, z.im]
}

fn from_pair(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn to_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| to_pair(&m[(i, j)])).collect()).collect()
}

fn from_rows(rows: &[Vec<Pair>]) -> Result<CMatrix, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMatrix::from_fn(r, c, |i, j| from_pair(&rows[i][j])))
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<Pair>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

pub mod option_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMatrix>, D::Error> {
        let rows = Option::<Vec<Vec<Pair>>>::deserialize(d)?;
        rows.map(|r| from_rows(&r)).transpose().map_err(D::Error::custom)
    }
}

pub mod matrices {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let all = Vec::<Vec<Vec<Pair>>>::deserialize(d)?;
        all.iter().map(|r| from_rows(r)).collect::<Result<_, _>>().map_err(D::Error::custom)
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(to_pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let v = Vec::<Pair>::deserialize(d)?;
        Ok(CVector::from_iterator(v.len(), v.iter().map(from_pair)))
    }
}

pub mod vectors {
    use super::*;

    pub fn serialize<S: Serializer>(vs: &[CVector], s: S) -> Result<S::Ok, S::Error> {
        vs.iter().map(|v| v.iter().map(to_pair).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVector>, D::Error> {
        let all = Vec::<Vec<Pair>>::deserialize(d)?;
        Ok(all.iter().map(|v| CVector::from_iterator(v.len(), v.iter().map(from_pair))).collect())
    }
}

pub mod scalars {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(to_pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<Pair>::deserialize(d)?.iter().map(from_pair).collect())
    }
}
