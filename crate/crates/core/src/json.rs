//! JSON encodings shared by the serializable types.
//!
//! Complex matrices are row-major arrays of `[re, im]` pairs; complex
//! vectors are arrays of `[re, im]` pairs.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{CMat, CVec, C64};

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn matrix_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| {
        let [re, im] = rows[i][j];
        C64::new(re, im)
    }))
}

pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        matrix_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        matrix_from_rows(&rows).map_err(D::Error::custom)
    }
}

pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let entries = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVec::from_iterator(
            entries.len(),
            entries.iter().map(|&[re, im]| C64::new(re, im)),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_rows_are_row_major_pairs() {
        let m = CMat::from_row_slice(1, 2, &[C64::new(1.0, 2.0), C64::new(3.0, -4.0)]);
        let v = serde_json::to_value(matrix_rows(&m)).unwrap();
        assert_eq!(v, serde_json::json!([[[1.0, 2.0], [3.0, -4.0]]]));
        assert_eq!(matrix_from_rows(&matrix_rows(&m)).unwrap(), m);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows = vec![vec![[0.0, 0.0]], vec![]];
        assert!(matrix_from_rows(&rows).is_err());
    }
}
