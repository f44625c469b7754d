//! Serde adapters for the repo-wide number format.
//!
//! A complex number is a two-element array `[re, im]`; a matrix is a row-major
//! nested array of those. Use with `#[serde(with = "crate::serial::matrix")]`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{c, CMatrix, Vector};

pub type Rows = Vec<Vec<[f64; 2]>>;

pub fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_rows(rows: &Rows) -> Result<CMatrix> {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(k) = rows.iter().position(|row| row.len() != cols) {
        return Err(Error::Parse(format!("matrix row {k} has {} entries, expected {cols}", rows[k].len())));
    }
    Ok(CMatrix::from_fn(r, cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn to_entries(v: &Vector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_entries(e: &[[f64; 2]]) -> Vector {
    Vector::from_iterator(e.len(), e.iter().map(|p| c(p[0], p[1])))
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = Rows::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod matrix_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let all = Vec::<Rows>::deserialize(d)?;
        all.iter().map(|r| from_rows(r).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod matrix_grid {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[Vec<CMatrix>], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(|row| row.iter().map(to_rows).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<CMatrix>>, D::Error> {
        let all = Vec::<Vec<Rows>>::deserialize(d)?;
        all.iter()
            .map(|row| row.iter().map(|r| from_rows(r).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

pub mod option_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMatrix>, D::Error> {
        match Option::<Rows>::deserialize(d)? {
            Some(rows) => from_rows(&rows).map(Some).map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_entries(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vector, D::Error> {
        let e = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(from_entries(&e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gaussian_matrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Serialize, Deserialize)]
    struct Wrapper {
        #[serde(with = "super::matrix")]
        m: CMatrix,
    }

    #[test]
    fn layout_is_row_major_pairs() {
        let m = CMatrix::from_row_slice(1, 2, &[c(1.0, 2.0), c(3.0, -4.0)]);
        let s = serde_json::to_string(&Wrapper { m }).unwrap();
        assert_eq!(s, r#"{"m":[[[1.0,2.0],[3.0,-4.0]]]}"#);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let r: std::result::Result<Wrapper, _> = serde_json::from_str(r#"{"m":[[[1,0]],[[1,0],[2,0]]]}"#);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(seed in 0u64..1000, rows in 1usize..5, cols in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = gaussian_matrix(&mut rng, rows, cols);
            let s = serde_json::to_string(&Wrapper { m: m.clone() }).unwrap();
            let back: Wrapper = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back.m, m);
        }
    }
}
