//! JSON wire formats: complex matrices, pure states and unitary-family files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{ProbRule, RspProtocol};
use crate::qmath::{ComplexMatrix, DensityOperator, PureState, UnitaryOperator, C64};

/// `{"rows": r, "cols": c, "re": [...], "im": [...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows, cols, re, im }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        self.to_matrix_named("matrix")
    }

    fn to_matrix_named(&self, field: &str) -> Result<ComplexMatrix> {
        let len = self.rows * self.cols;
        if self.rows == 0 || self.cols == 0 {
            return Err(malformed(field, "rows and cols must be positive"));
        }
        if self.re.len() != len || self.im.len() != len {
            return Err(malformed(
                field,
                format!(
                    "expected {len} entries, got re={} im={}",
                    self.re.len(),
                    self.im.len()
                ),
            ));
        }
        let entries: Vec<C64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        Ok(ComplexMatrix::from_row_slice(self.rows, self.cols, &entries))
    }
}

/// Amplitudes of a pure state as `{"re": [...], "im": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&PureState> for StateJson {
    fn from(s: &PureState) -> Self {
        Self {
            re: s.amplitudes().iter().map(|c| c.re).collect(),
            im: s.amplitudes().iter().map(|c| c.im).collect(),
        }
    }
}

impl StateJson {
    pub fn to_state(&self) -> Result<PureState> {
        if self.re.len() != self.im.len() {
            return Err(malformed("state", "re and im lengths differ"));
        }
        PureState::new(
            self.re
                .iter()
                .zip(&self.im)
                .map(|(&r, &i)| C64::new(r, i))
                .collect(),
        )
    }
}

impl From<PureState> for StateJson {
    fn from(s: PureState) -> Self {
        (&s).into()
    }
}

impl TryFrom<StateJson> for PureState {
    type Error = Error;
    fn try_from(j: StateJson) -> Result<Self> {
        j.to_state()
    }
}

impl From<DensityOperator> for MatrixJson {
    fn from(rho: DensityOperator) -> Self {
        rho.matrix().into()
    }
}

impl TryFrom<MatrixJson> for DensityOperator {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        DensityOperator::new(j.to_matrix()?)
    }
}

impl From<UnitaryOperator> for MatrixJson {
    fn from(u: UnitaryOperator) -> Self {
        u.matrix().into()
    }
}

impl TryFrom<MatrixJson> for UnitaryOperator {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        UnitaryOperator::new(j.to_matrix()?)
    }
}

/// `{"d": int, "n": int, "unitaries": [matrix...], "probabilities": null | [float...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub d: usize,
    pub n: usize,
    pub unitaries: Vec<MatrixJson>,
    pub probabilities: Option<Vec<f64>>,
}

fn malformed(field: &str, reason: impl Into<String>) -> Error {
    Error::Malformed {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl FamilyFile {
    pub fn from_protocol(proto: &RspProtocol) -> Self {
        let probabilities = match proto.prob_rule() {
            ProbRule::Uniform => Some(vec![1.0 / proto.n() as f64; proto.n()]),
            ProbRule::Fixed(p) => Some(p.clone()),
            ProbRule::StateDependent { .. } => None,
        };
        Self {
            d: proto.d(),
            n: proto.n(),
            unitaries: proto.unitaries().iter().map(|u| u.matrix().into()).collect(),
            probabilities,
        }
    }

    /// Validates every field; errors name the offending one. A missing
    /// probability vector yields a solver-backed state-dependent rule.
    pub fn into_protocol(self) -> Result<RspProtocol> {
        if self.d < 1 {
            return Err(malformed("d", "must be positive"));
        }
        if self.n != self.unitaries.len() {
            return Err(malformed(
                "n",
                format!("n = {} but {} unitaries given", self.n, self.unitaries.len()),
            ));
        }
        if self.n == 0 {
            return Err(malformed("unitaries", "family is empty"));
        }
        let mut unitaries = Vec::with_capacity(self.n);
        for (i, mj) in self.unitaries.iter().enumerate() {
            let field = format!("unitaries[{i}]");
            let m = mj.to_matrix_named(&field)?;
            if m.nrows() != self.d || m.ncols() != self.d {
                return Err(malformed(
                    &field,
                    format!("expected {0}x{0}, got {1}x{2}", self.d, m.nrows(), m.ncols()),
                ));
            }
            let u = UnitaryOperator::new(m).map_err(|e| malformed(&field, e.to_string()))?;
            unitaries.push(u);
        }
        let rule = match self.probabilities {
            None => ProbRule::solver(),
            Some(p) => {
                crate::rsp_eq::validate_probabilities(&p, self.n)
                    .map_err(|e| malformed("probabilities", e.to_string()))?;
                ProbRule::Fixed(p)
            }
        };
        RspProtocol::new(unitaries, rule)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::shift_family;

    #[test]
    fn matrix_json_layout_is_row_major() {
        let m = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(2.0, 0.5),
                C64::new(3.0, 0.0),
                C64::new(4.0, -1.0),
            ],
        );
        let j = MatrixJson::from(&m);
        assert_eq!(j.re, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(j.im, vec![0.0, 0.5, 0.0, -1.0]);
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(
            text,
            r#"{"rows":2,"cols":2,"re":[1.0,2.0,3.0,4.0],"im":[0.0,0.5,0.0,-1.0]}"#
        );
        assert_eq!(j.to_matrix().unwrap(), m);
    }

    #[test]
    fn family_file_round_trip() {
        let proto = shift_family(3).unwrap();
        let file = FamilyFile::from_protocol(&proto);
        let text = serde_json::to_string(&file).unwrap();
        let back: FamilyFile = serde_json::from_str(&text).unwrap();
        let proto2 = back.into_protocol().unwrap();
        assert_eq!(proto2.unitaries(), proto.unitaries());
    }

    #[test]
    fn family_file_errors_name_the_field() {
        let mut file = FamilyFile::from_protocol(&shift_family(2).unwrap());
        file.n = 3;
        let err = file.clone().into_protocol().unwrap_err().to_string();
        assert!(err.contains("n"), "{err}");

        let mut bad = FamilyFile::from_protocol(&shift_family(2).unwrap());
        bad.unitaries[2].re[0] = 5.0;
        let err = bad.into_protocol().unwrap_err().to_string();
        assert!(err.contains("unitaries[2]"), "{err}");

        let mut bad = FamilyFile::from_protocol(&shift_family(2).unwrap());
        bad.probabilities = Some(vec![0.5, 0.5, 0.5, 0.5]);
        let err = bad.into_protocol().unwrap_err().to_string();
        assert!(err.contains("probabilities"), "{err}");
    }
}
