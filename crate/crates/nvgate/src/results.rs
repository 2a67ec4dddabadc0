//! Rectangular scan results and their CSV / JSON forms.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            values,
        }
    }

    pub fn linspace(name: &str, unit: &str, min: f64, max: f64, points: usize) -> Self {
        let values = if points <= 1 {
            vec![min]
        } else {
            (0..points)
                .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
                .collect()
        };
        Self::new(name, unit, values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axes: Vec<Axis>,
    /// Name of the scalar field, e.g. "infidelity".
    pub field: String,
    /// Row-major over the axes.
    pub values: Vec<f64>,
    pub metadata: Map<String, Value>,
}

impl ScanResult {
    pub fn new(axes: Vec<Axis>, field: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return invalid("a scan has one or two axes");
        }
        let n: usize = axes.iter().map(|a| a.values.len()).product();
        if n != values.len() {
            return invalid(format!("expected {n} values, got {}", values.len()));
        }
        Ok(Self {
            axes,
            field: field.into(),
            values,
            metadata: Map::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = self.axes.get(1).map_or(1, |a| a.values.len());
        self.values[i * cols + j]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis1,axis2,value\n");
        let a = &self.axes[0].values;
        match self.axes.get(1) {
            Some(b) => {
                for (i, x) in a.iter().enumerate() {
                    for (j, y) in b.values.iter().enumerate() {
                        out.push_str(&format!(
                            "{},{},{}\n",
                            sig9(*x),
                            sig9(*y),
                            sig9(self.values[i * b.values.len() + j])
                        ));
                    }
                }
            }
            None => {
                for (i, x) in a.iter().enumerate() {
                    out.push_str(&format!("{},,{}\n", sig9(*x), sig9(self.values[i])));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan results serialize")
    }
}

/// Nine significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.8e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_row_major() {
        let r = ScanResult::new(
            vec![
                Axis::new("a", "", vec![1.0, 2.0]),
                Axis::new("b", "", vec![3.0, 4.0, 5.0]),
            ],
            "v",
            (0..6).map(|i| i as f64).collect(),
        )
        .unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "axis1,axis2,value");
        assert_eq!(lines[2], "1.00000000e0,4.00000000e0,1.00000000e0");
        assert_eq!(r.get(1, 2), 5.0);
    }

    #[test]
    fn json_round_trip() {
        let r = ScanResult::new(
            vec![Axis::linspace("x", "us", 0.0, 1.0, 3)],
            "v",
            vec![0.1, 0.2, 0.3],
        )
        .unwrap()
        .with_meta("tau", 0.5);
        let back: ScanResult = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn shape_checked() {
        assert!(ScanResult::new(vec![Axis::linspace("x", "", 0., 1., 3)], "v", vec![0.0]).is_err());
    }
}
