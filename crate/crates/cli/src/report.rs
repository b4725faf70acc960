use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// One run's output. `result` is the command-specific body; everything but
/// `timings_ms` is a function of the command line and the seed.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub exit_code: u8,
    pub result: Value,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        render(&self.result, 0, &mut out);
        for (k, v) in &self.timings_ms {
            let _ = writeln!(out, "time {k}: {v:.1} ms");
        }
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(if *b { "yes" } else { "no" }.into()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let label = k.replace('_', " ");
                match scalar(v) {
                    Some(s) if s.contains('\n') => {
                        let _ = writeln!(out, "{pad}{label}:");
                        for line in s.lines() {
                            let _ = writeln!(out, "{pad}  {line}");
                        }
                    }
                    Some(s) => {
                        let _ = writeln!(out, "{pad}{label}: {s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}{label}:");
                        render(v, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match scalar(item) {
                    Some(s) => {
                        let _ = writeln!(out, "{pad}- {s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}[{}]", i + 1);
                        render(item, indent + 1, out);
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", scalar(other).unwrap_or_default());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_rendering() {
        let r = Report {
            command: vec!["check".into()],
            seed: 1,
            trials: 2,
            tol: 1e-9,
            exit_code: 0,
            result: json!({"hamiltonian": true, "jacobi": {"verdict": "Zero"}, "trace": ["a", "b"]}),
            timings_ms: BTreeMap::new(),
        };
        assert_eq!(r.to_text(), "hamiltonian: yes\njacobi:\n  verdict: Zero\ntrace:\n  - a\n  - b\n");
    }
}
