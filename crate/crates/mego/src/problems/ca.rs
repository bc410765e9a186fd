//! Compiler-arguments evaluators: a deterministic synthetic mock and the
//! real external-command path.

use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// How a CA instance measures "compiled size".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum CaMode {
    /// Seeded pseudo-Boolean surrogate; the default, used wherever a real
    /// compiler would be too heavy.
    #[serde(rename = "mock")]
    Mock(CaMock),
    /// Runs a command template and measures the output file.
    ///
    /// The template gets `{flags}` replaced by the space-joined names of the
    /// enabled flags and `{out}` by a temporary output path whose byte size
    /// becomes the objective.
    #[serde(rename = "external")]
    External { template: String, flags: Vec<String> },
}

/// A sparse random polynomial over flag bits: base size, per-flag linear
/// terms, and pairwise interactions, clamped to stay positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaMock {
    pub base: f64,
    pub linear: Vec<f64>,
    pub pairs: Vec<(usize, usize, f64)>,
}

impl CaMock {
    pub fn eval(&self, x: &BitVector) -> f64 {
        let mut size = self.base;
        for (i, &c) in self.linear.iter().enumerate() {
            if x.get(i) == 1 {
                size += c;
            }
        }
        for &(i, j, c) in &self.pairs {
            if x.get(i) == 1 && x.get(j) == 1 {
                size += c;
            }
        }
        size.max(1.0)
    }
}

/// Substitutes the enabled flags into the command template, runs it through
/// `sh`, and returns the byte size of the `{out}` file.
pub fn eval_ca_external(template: &str, flags: &[String], x: &BitVector) -> Result<f64> {
    let enabled: Vec<&str> = (0..x.len())
        .filter(|&i| x.get(i) == 1)
        .map(|i| flags[i].as_str())
        .collect();
    let out_path = std::env::temp_dir().join(format!(
        "mego-ca-{}-{:x}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    let command_line = template
        .replace("{flags}", &enabled.join(" "))
        .replace("{out}", &out_path.display().to_string());

    let output = Command::new("sh")
        .arg("-c")
        .arg(&command_line)
        .output()
        .map_err(|e| Error::Evaluator(format!("failed to spawn {command_line:?}: {e}")))?;
    if !output.status.success() {
        let _ = std::fs::remove_file(&out_path);
        return Err(Error::Evaluator(format!(
            "command {:?} exited with {}: {}",
            command_line,
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let size = std::fs::metadata(&out_path)
        .map_err(|e| Error::Evaluator(format!("command produced no output file {}: {e}", out_path.display())))?
        .len();
    let _ = std::fs::remove_file(&out_path);
    Ok(size as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_ca_mock, Payload};
    use crate::rng::rng_from_seed;

    #[test]
    fn mock_base_size_for_all_zero_flags() {
        let mut rng = rng_from_seed(4);
        let mut inst = gen_ca_mock("ca-0", 10, &mut rng);
        let base = match inst.payload() {
            Payload::Ca(p) => match &p.mode {
                CaMode::Mock(m) => m.base,
                _ => unreachable!(),
            },
            _ => unreachable!(),
        };
        let x = BitVector::zeros(10);
        assert_eq!(inst.evaluate(&x).unwrap(), base.max(1.0));
    }

    #[test]
    fn mock_is_deterministic() {
        let mut rng = rng_from_seed(4);
        let mut inst = gen_ca_mock("ca-0", 12, &mut rng);
        let x = BitVector::random(12, &mut rng);
        let a = inst.evaluate(&x).unwrap();
        let b = inst.evaluate(&x).unwrap();
        assert_eq!(a, b);
        assert!(a >= 1.0);
    }

    #[test]
    fn external_command_measures_output_size() {
        let flags = vec!["alpha".to_string(), "beta".to_string()];
        let x = BitVector::parse("11").unwrap();
        // writes the flag string into the output file
        let size = eval_ca_external("printf '%s' '{flags}' > {out}", &flags, &x).unwrap();
        assert_eq!(size, "alpha beta".len() as f64);
    }

    #[test]
    fn nonexistent_command_is_an_evaluator_error_without_fe() {
        let mut rng = rng_from_seed(9);
        let mut inst = crate::problems::ProblemInstance::new(
            "ca-ext",
            2,
            Payload::Ca(crate::problems::CaPayload {
                mode: CaMode::External {
                    template: "definitely-not-a-real-binary-12345 {flags} {out}".into(),
                    flags: vec!["a".into(), "b".into()],
                },
            }),
        );
        let x = BitVector::random(2, &mut rng);
        let err = inst.evaluate(&x).unwrap_err();
        assert!(matches!(err, Error::Evaluator(_)), "{err}");
        assert_eq!(inst.fe_count(), 0);
    }
}
