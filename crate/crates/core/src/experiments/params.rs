//! Typed access to an experiment's parameter map.

use std::sync::Mutex;
use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use crate::error::{Error, Result};

/// Parameter map with defaults. Every lookup is recorded so that misspelled
/// names can be reported once the runner has finished.
#[derive(Debug)]
pub struct Params {
    values: BTreeMap<String, Value>,
    used: Mutex<BTreeSet<String>>,
}

impl Params {
    pub fn new(values: BTreeMap<String, Value>) -> Self {
        Self {
            values,
            used: Mutex::new(BTreeSet::new()),
        }
    }

    fn get(&self, name: &str) -> Option<&Value> {
        self.used.lock().expect("unpoisoned").insert(name.to_string());
        self.values.get(name)
    }

    fn bad(name: &str, what: &str, v: &Value) -> Error {
        Error::Parameter(format!("parameter '{name}' must be {what}, got {v}"))
    }

    pub fn f64(&self, name: &str, default: f64) -> Result<f64> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| Self::bad(name, "a number", v)),
        }
    }

    pub fn usize(&self, name: &str, default: usize) -> Result<usize> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => {
                if let Some(u) = v.as_u64() {
                    return Ok(u as usize);
                }
                // allow 1e4-style numbers that are whole
                match v.as_f64() {
                    Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 9.0e15 => Ok(x as usize),
                    _ => Err(Self::bad(name, "a nonnegative integer", v)),
                }
            }
        }
    }

    pub fn bool(&self, name: &str, default: bool) -> Result<bool> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| Self::bad(name, "true or false", v)),
        }
    }

    pub fn string(&self, name: &str, default: &str) -> Result<String> {
        match self.get(name) {
            None => Ok(default.to_string()),
            Some(v) => v.as_str().map(str::to_string).ok_or_else(|| Self::bad(name, "a string", v)),
        }
    }

    /// A vector of numbers; a bare number is read as a one-element vector.
    pub fn vec_f64(&self, name: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(name) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Self::bad(name, "a list of numbers", x)))
                .collect(),
            Some(v) => v.as_f64().map(|x| vec![x]).ok_or_else(|| Self::bad(name, "a list of numbers", v)),
        }
    }

    pub fn vec_usize(&self, name: &str, default: &[usize]) -> Result<Vec<usize>> {
        let xs = self.vec_f64(name, &default.iter().map(|v| *v as f64).collect::<Vec<_>>())?;
        xs.iter()
            .map(|x| {
                if *x >= 0.0 && x.fract() == 0.0 {
                    Ok(*x as usize)
                } else {
                    Err(Error::Parameter(format!("parameter '{name}' must hold nonnegative integers")))
                }
            })
            .collect()
    }

    /// Fails if the map holds a name that no lookup asked for.
    pub fn check_all_used(&self) -> Result<()> {
        let used = self.used.lock().expect("unpoisoned");
        let unknown: Vec<&str> = self.values.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Parameter(format!("unknown parameters: {}", unknown.join(", "))))
        }
    }
}
