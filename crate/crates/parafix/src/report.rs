//! Serialization formats and the run manifest.

use serde::{Deserialize, Serialize};

use crate::series::{LogGerm, TaylorGerm, C};
use crate::Error;

/// Germ serialization: coefficients `c_1..c_n` (or `l_1..l_n`) as
/// `[re, im]` pairs plus a form tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GermFile {
    pub form: GermForm,
    pub coeffs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GermForm {
    Taylor,
    Log,
}

impl GermFile {
    pub fn from_taylor(f: &TaylorGerm) -> Self {
        GermFile {
            form: GermForm::Taylor,
            coeffs: f.coeffs().iter().map(|c| (c.re, c.im)).collect(),
        }
    }

    pub fn from_log(l: &LogGerm) -> Self {
        GermFile {
            form: GermForm::Log,
            coeffs: l.coeffs().iter().map(|c| (c.re, c.im)).collect(),
        }
    }

    pub fn to_taylor(&self) -> Result<TaylorGerm, Error> {
        match self.form {
            GermForm::Taylor => Ok(TaylorGerm::new(
                self.coeffs.iter().map(|&(re, im)| C::new(re, im)).collect(),
            )),
            GermForm::Log => Ok(crate::series::from_log(&LogGerm::new(
                self.coeffs.iter().map(|&(re, im)| C::new(re, im)).collect(),
            ))),
        }
    }
}

/// Metadata written after all artifacts of a command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: serde_json::Value,
    pub artifact_paths: Vec<String>,
    pub wall_time_s: f64,
    pub toolkit_version: String,
}

/// 17-significant-digit float formatting (round-trip exact for doubles).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// CSV writer for a point cloud: `re,im,label` with a header.
pub fn cloud_csv(points: &[(f64, f64)], label: &str) -> String {
    let mut out = String::from("re,im,label\n");
    for &(re, im) in points {
        out.push_str(&format!("{},{},{}\n", fmt_f64(re), fmt_f64(im), label));
    }
    out
}
