//! JSON interchange for matrices and channels.
//!
//! The wire format is pinned to 64-bit floats:
//!
//! ```text
//! matrix:  {"rows": r, "cols": c, "data": [[re, im], ...]}   (row-major)
//! channel: {"dim_in": n, "dim_out": d, "kraus": [matrix, ...]}
//! ```

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::CMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        MatrixJson {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;
    fn try_from(j: &MatrixJson) -> Result<CMatrix> {
        let entries: Vec<Complex<f64>> =
            j.data.iter().map(|&[re, im]| Complex::new(re, im)).collect();
        let m = ComplexMatrix::from_vec(j.rows, j.cols, entries)?;
        m.all_finite()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixJson>,
}

impl From<&KrausChannel<f64>> for ChannelJson {
    fn from(e: &KrausChannel<f64>) -> Self {
        ChannelJson {
            dim_in: e.dim_in(),
            dim_out: e.dim_out(),
            kraus: e.kraus().iter().map(MatrixJson::from).collect(),
        }
    }
}

impl TryFrom<&ChannelJson> for KrausChannel<f64> {
    type Error = Error;
    fn try_from(j: &ChannelJson) -> Result<KrausChannel<f64>> {
        let kraus: Result<Vec<CMatrix>> = j.kraus.iter().map(CMatrix::try_from).collect();
        KrausChannel::new(j.dim_in, j.dim_out, kraus?)
    }
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    let j: MatrixJson =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("matrix JSON: {e}")))?;
    CMatrix::try_from(&j)
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    crate::report::to_json_string(&MatrixJson::from(m))
}

pub fn channel_from_json(text: &str) -> Result<KrausChannel<f64>> {
    let j: ChannelJson =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("channel JSON: {e}")))?;
    KrausChannel::try_from(&j)
}

pub fn channel_to_json(e: &KrausChannel<f64>) -> String {
    crate::report::to_json_string(&ChannelJson::from(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::gen_depolarizing;

    #[test]
    fn matrix_round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| Complex::new(i as f64 + 0.5, j as f64 - 1.25));
        let text = matrix_to_json(&m);
        let back = matrix_from_json(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn channel_round_trip() {
        let e = gen_depolarizing::<f64>(2, 3).unwrap();
        let text = channel_to_json(&e);
        let back = channel_from_json(&text).unwrap();
        assert_eq!(back.dim_in(), 2);
        assert_eq!(back.dim_out(), 3);
        assert_eq!(back.kraus_count(), e.kraus_count());
        for (a, b) in e.kraus().iter().zip(back.kraus()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(matrix_from_json("{\"rows\":2,\"cols\":2,\"data\":[[1,0]]}").is_err());
        assert!(matrix_from_json("not json").is_err());
        // Non-finite entries rejected.
        let bad = "{\"rows\":1,\"cols\":1,\"data\":[[1e999,0]]}";
        assert!(matrix_from_json(bad).is_err());
        // Kraus shape disagreement rejected.
        let bad_channel = r#"{"dim_in":2,"dim_out":2,"kraus":[{"rows":1,"cols":2,"data":[[1,0],[0,0]]}]}"#;
        assert!(channel_from_json(bad_channel).is_err());
    }
}
