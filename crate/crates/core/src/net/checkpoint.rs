//! Line-oriented text checkpoints.
//!
//! Format:
//!   layers: n0 n1 ... nk
//!   then, per layer, one weight row per line followed by the bias row,
//!   values space-separated with 17 significant digits.
//!
//! 17 digits round-trip every f64 exactly, so save -> load -> save is
//! byte-identical.

use super::NetworkParams;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

fn fmt_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        // {:.16e} prints one leading digit plus 16 fractional digits.
        write!(out, "{:.16e}", v).unwrap();
    }
    out.push('\n');
}

impl NetworkParams {
    /// Serialize to the checkpoint text format.
    pub fn to_checkpoint_string(&self) -> String {
        let mut s = String::new();
        s.push_str("layers:");
        for n in self.layer_sizes() {
            write!(s, " {}", n).unwrap();
        }
        s.push('\n');
        for l in 0..self.weights().len() {
            let n_in = self.layer_sizes()[l];
            let n_out = self.layer_sizes()[l + 1];
            for r in 0..n_out {
                fmt_row(&mut s, &self.weights()[l][r * n_in..(r + 1) * n_in]);
            }
            fmt_row(&mut s, &self.biases()[l]);
        }
        s
    }

    /// Parse the checkpoint text format. Errors carry 1-based line numbers.
    pub fn from_checkpoint_string(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::CheckpointParse {
            line: 1,
            message: "empty checkpoint".into(),
        })?;
        let rest = header
            .strip_prefix("layers:")
            .ok_or(Error::CheckpointParse {
                line: 1,
                message: "expected 'layers:' header".into(),
            })?;
        let sizes: Vec<usize> = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| Error::CheckpointParse {
                    line: 1,
                    message: format!("bad layer size '{}'", tok),
                })
            })
            .collect::<Result<_>>()?;
        if sizes.len() < 2 {
            return Err(Error::CheckpointParse {
                line: 1,
                message: "need at least two layer sizes".into(),
            });
        }

        let mut parse_row = |expected: usize| -> Result<Vec<f64>> {
            let (idx, line) = lines.next().ok_or(Error::CheckpointParse {
                line: 0,
                message: "unexpected end of checkpoint".into(),
            })?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::CheckpointParse {
                        line: idx + 1,
                        message: format!("bad value '{}'", tok),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != expected {
                return Err(Error::CheckpointParse {
                    line: idx + 1,
                    message: format!("expected {} values, got {}", expected, row.len()),
                });
            }
            Ok(row)
        };

        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let mut w = Vec::with_capacity(sizes[l] * sizes[l + 1]);
            for _ in 0..sizes[l + 1] {
                w.extend(parse_row(sizes[l])?);
            }
            weights.push(w);
            biases.push(parse_row(sizes[l + 1])?);
        }
        if let Some((idx, line)) = lines.next() {
            if !line.trim().is_empty() {
                return Err(Error::CheckpointParse {
                    line: idx + 1,
                    message: "trailing content after parameters".into(),
                });
            }
        }
        NetworkParams::from_parts(sizes, weights, biases)
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_string())?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_checkpoint_string(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = NetworkParams::init(&[3, 13, 7, 5], 1234).unwrap();
        let text = net.to_checkpoint_string();
        let loaded = NetworkParams::from_checkpoint_string(&text).unwrap();
        assert_eq!(net, loaded);
        assert_eq!(text, loaded.to_checkpoint_string());
    }

    #[test]
    fn round_trip_handles_extreme_values() {
        let mut net = NetworkParams::zeros(&[1, 2, 1]).unwrap();
        let mut flat = net.to_flat();
        flat[0] = 1.0 / 3.0;
        flat[1] = -f64::MIN_POSITIVE;
        flat[2] = 1e300;
        flat[3] = -0.0;
        flat[4] = std::f64::consts::PI;
        net.read_flat(&flat);
        let text = net.to_checkpoint_string();
        let loaded = NetworkParams::from_checkpoint_string(&text).unwrap();
        let back = loaded.to_flat();
        for (a, b) in flat.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = NetworkParams::from_checkpoint_string("layers: 1 1\nnot-a-number\n0.0\n")
            .unwrap_err();
        match err {
            Error::CheckpointParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {:?}", other),
        }
        let err = NetworkParams::from_checkpoint_string("bogus\n").unwrap_err();
        match err {
            Error::CheckpointParse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn row_count_mismatch_is_detected() {
        let net = NetworkParams::zeros(&[2, 2]).unwrap();
        let mut text = net.to_checkpoint_string();
        text.push_str("1.0 2.0\n");
        assert!(NetworkParams::from_checkpoint_string(&text).is_err());
    }
}
