use std::io::Write;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::CliError;

/// A CSV table plus `# key: value` header lines.
pub struct Report {
    pub meta: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: String) -> Self {
        Report {
            meta: vec![
                ("hocn".into(), env!("CARGO_PKG_VERSION").into()),
                ("command".into(), command.into()),
                ("seed".into(), seed.to_string()),
                ("config".into(), config),
            ],
            body: Vec::new(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    fn csv(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.extend_from_slice(&self.body);
        out
    }

    /// Rows of the first table as JSON objects; comment lines are dropped.
    fn json(&self) -> Vec<u8> {
        let text = String::from_utf8_lossy(&self.body);
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<&str> = lines.next().map(|h| h.split(',').collect()).unwrap_or_default();
        let rows: Vec<Value> = lines
            .map(|l| {
                let mut obj = Map::new();
                for (k, v) in header.iter().zip(l.split(',')) {
                    obj.insert(k.to_string(), scalar(v));
                }
                Value::Object(obj)
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&Value::Array(rows)).unwrap_or_default();
        out.push(b'\n');
        out
    }

    pub fn emit(&self, json: bool, path: Option<&Path>) -> Result<(), CliError> {
        let bytes = if json { self.json() } else { self.csv() };
        match path {
            Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Runtime(e.into())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&bytes).map_err(|e| CliError::Runtime(e.into()))
            }
        }
    }
}

fn scalar(v: &str) -> Value {
    if let Ok(i) = v.parse::<i64>() {
        return Value::Number(i.into());
    }
    if let Ok(f) = v.parse::<f64>() {
        if let Some(n) = Number::from_f64(f) {
            return Value::Number(n);
        }
    }
    match v {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "" => Value::Null,
        s => Value::String(s.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_mirrors_rows() {
        let mut r = Report::new("x", 1, String::new());
        r.body = b"a,b\n1,0.5\n# skip\nx,\n".to_vec();
        let v: Value = serde_json::from_slice(&r.json()).unwrap();
        assert_eq!(v[0]["a"], 1);
        assert_eq!(v[0]["b"], 0.5);
        assert_eq!(v[1]["a"], "x");
        assert!(v[1]["b"].is_null());
    }
}
