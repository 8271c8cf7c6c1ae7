//! Report-document plumbing: digests, deterministic number formatting and
//! the common JSON envelope shared by all subcommands.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_NAME: &str = "nonloc";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round to 12 significant digits; all emitted numbers pass through this so
/// reports and CSVs are byte-stable across platforms.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exponent = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(11 - exponent);
    (x * factor).round() / factor
}

/// Deterministic decimal rendering of a rounded value.
pub fn fmt12(x: f64) -> String {
    format!("{}", round_sig(x))
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub results: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ReportDocument {
    pub fn new(seed: Option<u64>, inputs: Vec<InputDigest>, results: serde_json::Value) -> Self {
        Self {
            tool: ToolInfo {
                name: TOOL_NAME,
                version: TOOL_VERSION,
            },
            command: std::env::args().skip(1).collect(),
            seed,
            inputs,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(fmt12(0.2), "0.2");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(-1.0 / 32.0), "-0.03125");
        assert_eq!(fmt12(0.0), "0");
    }
}
