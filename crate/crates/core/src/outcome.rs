//! What a solver hands back: the measurement plus everything known about it.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{success_probability, MeasurementClassTag, UsdMeasurement, WeightedDensityPair};
use crate::optimality::{build_certificate, check_optimality, classify, CertificateZ, OptimalityReport};

/// Which construction produced a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Nothing left after the reductions; the answer is the lifted trivial measurement.
    ZeroPair,
    SingleDetectGamma1,
    SingleDetectGamma2,
    FidelityForm,
    /// Rank-one `E1`, rank-two `E2` on a four-dimensional support.
    Class12,
    Class21,
    /// Rank-one `E1` and `E2` on a four-dimensional support.
    Class11,
    /// No construction could be certified; the best available measurement.
    BestKnown,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::ZeroPair => "zero_pair",
            Branch::SingleDetectGamma1 => "single_detect_gamma1",
            Branch::SingleDetectGamma2 => "single_detect_gamma2",
            Branch::FidelityForm => "fidelity_form",
            Branch::Class12 => "class_12",
            Branch::Class21 => "class_21",
            Branch::Class11 => "class_11",
            Branch::BestKnown => "best_known",
        }
    }

    pub fn is_single_detection(&self) -> bool {
        matches!(self, Branch::SingleDetectGamma1 | Branch::SingleDetectGamma2)
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub measurement: UsdMeasurement,
    pub success: f64,
    pub class_tag: MeasurementClassTag,
    pub branch: Branch,
    pub report: OptimalityReport,
    pub certificate: Option<CertificateZ>,
    /// The instance sits on (or numerically next to) a class transition.
    pub boundary: bool,
    pub warnings: Vec<String>,
}

impl SolverOutcome {
    /// Evaluates success, class and optimality of `measurement` for `s`.
    pub fn evaluate(measurement: UsdMeasurement, s: &WeightedDensityPair, branch: Branch) -> Result<Self> {
        let report = check_optimality(&measurement, s)?;
        let class_tag = classify(&measurement, s)?;
        let success = success_probability(&measurement, s);
        Ok(Self {
            measurement,
            success,
            class_tag,
            branch,
            report,
            certificate: None,
            boundary: false,
            warnings: Vec::new(),
        })
    }

    /// Certified optimal by the operational conditions.
    pub fn is_optimal(&self) -> bool {
        self.report.is_optimal && self.branch != Branch::BestKnown
    }

    /// Tries to attach the dual certificate; failures become warnings.
    pub fn with_certificate(mut self, s: &WeightedDensityPair) -> Self {
        match build_certificate(&self.measurement, s) {
            Ok(z) => self.certificate = Some(z),
            Err(e) => self.warnings.push(format!("certificate unavailable: {e}")),
        }
        self
    }
}
