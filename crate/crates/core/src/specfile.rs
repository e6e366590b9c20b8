//! JSON channel description files.
//!
//! ```json
//! {
//!   "name": "bsc",
//!   "x_size": 2, "s_size": 2, "y_size": 2,
//!   "w": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]],
//!   "g": [0, 1], "ell": [0, 1],
//!   "gamma": 0.4, "lambda": 0.1
//! }
//! ```
//!
//! `w[x][s][y]` is `W(y|x,s)`. [`ChannelSpec::to_canonical`] writes a fixed
//! layout with 17 significant digits, so writing a parsed canonical file
//! reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::channel::{Avc, AvcParts};
use crate::error::{AvcError, Result};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub name: String,
    pub x_size: usize,
    pub s_size: usize,
    pub y_size: usize,
    pub w: Vec<Vec<Vec<f64>>>,
    pub g: Vec<f64>,
    pub ell: Vec<f64>,
    pub gamma: f64,
    pub lambda: f64,
}

impl ChannelSpec {
    /// Parses and validates; errors carry the line and column or the
    /// offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| {
            AvcError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        spec.to_avc()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| AvcError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            AvcError::Config(m) => AvcError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_avc(name: impl Into<String>, avc: &Avc) -> Self {
        let (nx, ns, ny) = (avc.input_size(), avc.state_size(), avc.output_size());
        Self {
            name: name.into(),
            x_size: nx,
            s_size: ns,
            y_size: ny,
            w: (0..nx)
                .map(|x| (0..ns).map(|s| avc.row(x, s).to_vec()).collect())
                .collect(),
            g: avc.g().to_vec(),
            ell: avc.ell().to_vec(),
            gamma: avc.gamma(),
            lambda: avc.lambda(),
        }
    }

    pub fn to_avc(&self) -> Result<Avc> {
        let mut problems = Vec::new();
        if self.w.len() != self.x_size {
            problems.push(format!("w: {} input rows, x_size is {}", self.w.len(), self.x_size));
        }
        for (x, by_s) in self.w.iter().enumerate() {
            if by_s.len() != self.s_size {
                problems.push(format!("w[{x}]: {} state rows, s_size is {}", by_s.len(), self.s_size));
            }
            for (s, row) in by_s.iter().enumerate() {
                if row.len() != self.y_size {
                    problems.push(format!("w[{x}][{s}]: {} outputs, y_size is {}", row.len(), self.y_size));
                }
            }
        }
        if !problems.is_empty() {
            return Err(AvcError::InvalidChannel(problems));
        }
        let mut flat = Vec::with_capacity(self.x_size * self.s_size * self.y_size);
        for by_s in &self.w {
            for row in by_s {
                flat.extend_from_slice(row);
            }
        }
        Avc::from_parts(AvcParts {
            input_size: self.x_size,
            state_size: self.s_size,
            output_size: self.y_size,
            w: flat,
            g: self.g.clone(),
            ell: self.ell.clone(),
            gamma: self.gamma,
            lambda: self.lambda,
        })
    }

    pub fn to_canonical(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|&a| num(a)).collect::<Vec<_>>().join(", ");
        let mut out = String::from("{\n");
        let name = serde_json::to_string(&self.name).expect("strings serialize");
        let _ = writeln!(out, "  \"name\": {name},");
        let _ = writeln!(out, "  \"x_size\": {},", self.x_size);
        let _ = writeln!(out, "  \"s_size\": {},", self.s_size);
        let _ = writeln!(out, "  \"y_size\": {},", self.y_size);
        out.push_str("  \"w\": [\n");
        for (x, by_s) in self.w.iter().enumerate() {
            let rows: Vec<String> = by_s.iter().map(|r| format!("[{}]", list(r))).collect();
            let sep = if x + 1 < self.w.len() { "," } else { "" };
            let _ = writeln!(out, "    [{}]{sep}", rows.join(", "));
        }
        out.push_str("  ],\n");
        let _ = writeln!(out, "  \"g\": [{}],", list(&self.g));
        let _ = writeln!(out, "  \"ell\": [{}],", list(&self.ell));
        let _ = writeln!(out, "  \"gamma\": {},", num(self.gamma));
        let _ = writeln!(out, "  \"lambda\": {}", num(self.lambda));
        out.push_str("}\n");
        out
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{adding_avc, bsc_avc};

    #[test]
    fn canonical_round_trip() {
        for (name, avc) in [
            ("bsc", bsc_avc(0.4, 0.1).unwrap()),
            ("adding \"quoted\"", adding_avc(0.9, 0.6).unwrap()),
        ] {
            let spec = ChannelSpec::from_avc(name, &avc);
            let text = spec.to_canonical();
            let back = ChannelSpec::from_json(&text).unwrap();
            assert_eq!(back, spec);
            assert_eq!(back.to_canonical(), text);
            assert_eq!(back.to_avc().unwrap().lambda(), avc.lambda());
        }
    }

    #[test]
    fn loose_formatting_parses() {
        let text = r#"{"name":"b","x_size":2,"s_size":2,"y_size":2,
            "w":[[[1,0],[0,1]],[[0,1],[1,0]]],"g":[0,1],"ell":[0,1],"gamma":0.4,"lambda":0.1}"#;
        let spec = ChannelSpec::from_json(text).unwrap();
        assert_eq!(spec.to_avc().unwrap().w(1, 0, 1), 1.0);
    }

    #[test]
    fn diagnostics() {
        let err = ChannelSpec::from_json("{\n  \"name\": \"x\",\n  \"bogus\": 1\n}").unwrap_err();
        assert!(matches!(&err, AvcError::Config(m) if m.contains("line 3") && m.contains("bogus")));
        let text = r#"{"name":"b","x_size":2,"s_size":2,"y_size":2,
            "w":[[[1,0],[0,1]],[[0,1]]],"g":[0,1],"ell":[0,1],"gamma":0.4,"lambda":0.1}"#;
        assert!(matches!(ChannelSpec::from_json(text), Err(AvcError::InvalidChannel(p)) if p[0].contains("w[1]")));
        let text = r#"{"name":"b","x_size":2,"s_size":1,"y_size":2,
            "w":[[[0.5,0.6]],[[0,1]]],"g":[0,1],"ell":[0],"gamma":0.4,"lambda":0.1}"#;
        assert!(matches!(ChannelSpec::from_json(text), Err(AvcError::InvalidChannel(_))));
    }
}
