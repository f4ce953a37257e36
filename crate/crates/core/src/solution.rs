use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;

/// 1-indexed segment number mapped to the path indices it holds.
pub type GroupAssignment = BTreeMap<usize, Vec<usize>>;

/// Extra output of the pseudo-inverse designs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignDiagnostics {
    /// Relative residual `||A^H x - b|| / ||b||` of the unnormalized transmit solve.
    pub residual_t: f64,
    pub residual_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_groups: Option<GroupAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_groups: Option<GroupAssignment>,
    /// Paths kept by a random subset selection, per end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_selection: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_selection: Option<Vec<usize>>,
}

/// Unit-norm transmit/receive AWV pair and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    pub scheme: &'static str,
    pub w_t: Vec<Complex64>,
    pub w_r: Vec<Complex64>,
    pub iterations_used: usize,
    /// Array gain after each iteration; entry 0 is the initial pair. Empty for
    /// one-shot designs.
    pub gamma_trace: Vec<f64>,
    /// Over-the-air training slots spent (0 for full-CSI schemes).
    pub slots_consumed: usize,
    /// Power-method steps that fell back to the first basis vector.
    pub degenerate_steps: usize,
    pub design: Option<DesignDiagnostics>,
}

impl BeamformingSolution {
    pub fn one_shot(scheme: &'static str, w_t: Vec<Complex64>, w_r: Vec<Complex64>) -> Self {
        Self {
            scheme,
            w_t,
            w_r,
            iterations_used: 0,
            gamma_trace: Vec::new(),
            slots_consumed: 0,
            degenerate_steps: 0,
            design: None,
        }
    }

    pub fn final_gain(&self) -> Option<f64> {
        self.gamma_trace.last().copied()
    }

    pub fn check_unit_norm(&self, tol: f64) -> Result<()> {
        for (name, v) in [("w_t", &self.w_t), ("w_r", &self.w_r)] {
            let n = norm(v);
            if (n - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("{name} has norm {n}")));
            }
        }
        Ok(())
    }

    pub fn to_record(&self) -> SolutionRecord {
        SolutionRecord {
            scheme: self.scheme.to_string(),
            w_t: ComplexArray::from(&self.w_t[..]),
            w_r: ComplexArray::from(&self.w_r[..]),
            iterations_used: self.iterations_used,
            gamma_trace: self.gamma_trace.clone(),
            slots_consumed: self.slots_consumed,
            degenerate_steps: self.degenerate_steps,
            design: self.design.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("solution serializes")
    }
}

/// Complex vector as parallel real/imaginary arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexArray {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&[Complex64]> for ComplexArray {
    fn from(v: &[Complex64]) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl ComplexArray {
    pub fn to_vec(&self) -> Result<Vec<Complex64>> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch {
                context: "complex array",
                expected: self.re.len(),
                actual: self.im.len(),
            });
        }
        Ok(self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect())
    }
}

/// Serialized form of [`BeamformingSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub scheme: String,
    pub w_t: ComplexArray,
    pub w_r: ComplexArray,
    pub iterations_used: usize,
    pub gamma_trace: Vec<f64>,
    pub slots_consumed: usize,
    #[serde(default)]
    pub degenerate_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignDiagnostics>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trips_through_json() {
        let mut groups = GroupAssignment::new();
        groups.insert(1, vec![0, 2]);
        groups.insert(3, vec![1]);
        let sol = BeamformingSolution {
            design: Some(DesignDiagnostics {
                tx_groups: Some(groups),
                ..Default::default()
            }),
            ..BeamformingSolution::one_shot(
                "mpg",
                vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
                vec![Complex64::new(1.0, 0.0)],
            )
        };
        let text = sol.to_json();
        let back: SolutionRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sol.to_record());
        assert_eq!(back.w_t.to_vec().unwrap(), sol.w_t);
        assert!(text.contains("\"1\""));
    }
}
