//! Result serialization: canonical JSON and CSV tables.
//!
//! Canonical JSON sorts object keys and prints every non-integer number with
//! 17 significant digits (`{:.16e}`), so parsing and re-serializing an output
//! reproduces it byte for byte.

use serde_json::{Map, Value};

use crate::material::Mat6;
use crate::plate::{AbdMatrix, PlateResult};
use crate::thermal::ConductionResult;
use crate::volume::{ReducedStiffness3, VolumeResult};

fn format_number(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        return i.to_string();
    }
    if let Some(u) = n.as_u64() {
        return u.to_string();
    }
    let f = n.as_f64().unwrap_or(f64::NAN);
    format_float(f)
}

pub fn format_float(f: f64) -> String {
    if f.is_finite() {
        format!("{f:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&format_number(n)),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, item) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&m[k], out);
            }
            out.push('}');
        }
    }
}

pub fn canonical_json(v: &Value) -> String {
    let mut s = String::new();
    write_canonical(v, &mut s);
    s
}

/// Float as a JSON number; values that are integral still carry an exponent
/// so they print as floats.
fn num(f: f64) -> Value {
    serde_json::Number::from_f64(f).map(Value::Number).unwrap_or(Value::Null)
}

pub fn matrix_value<const R: usize, const C: usize>(m: &[[f64; C]; R]) -> Value {
    Value::Array(m.iter().map(|row| Value::Array(row.iter().map(|&v| num(v)).collect())).collect())
}

pub fn vector_value(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

/// Extra run metadata carried into plate results.
#[derive(Debug, Clone, Default)]
pub struct RunMeta {
    pub resolution: Option<usize>,
    pub density_achieved: Option<f64>,
}

fn meta_object(meta: &RunMeta, residuals: &[f64], wall_time_s: f64) -> Value {
    let mut m = Map::new();
    m.insert(
        "resolution".into(),
        meta.resolution.map(|r| Value::from(r as u64)).unwrap_or(Value::Null),
    );
    m.insert(
        "density_achieved".into(),
        meta.density_achieved.map(num).unwrap_or(Value::Null),
    );
    m.insert("solver_residuals".into(), vector_value(residuals));
    m.insert("wall_time_s".into(), num(wall_time_s));
    Value::Object(m)
}

pub fn abd_value(abd: &AbdMatrix) -> Value {
    let mut blocks = Map::new();
    blocks.insert("A".into(), matrix_value(&abd.a()));
    blocks.insert("B".into(), matrix_value(&abd.b()));
    blocks.insert("D".into(), matrix_value(&abd.d()));
    let mut m = Map::new();
    m.insert("abd".into(), matrix_value(&abd.m));
    m.insert("blocks".into(), Value::Object(blocks));
    Value::Object(m)
}

pub fn plate_json(r: &PlateResult, meta: &RunMeta) -> Value {
    let mut v = abd_value(&r.abd);
    let obj = v.as_object_mut().unwrap();
    let mut meta_v = meta_object(meta, &r.report.residuals, r.wall_time_s);
    meta_v
        .as_object_mut()
        .unwrap()
        .insert("pre_symmetry_asymmetry".into(), num(r.asymmetry()));
    obj.insert("meta".into(), meta_v);
    v
}

pub fn volume_json(r: &VolumeResult, q: &ReducedStiffness3, abd: &AbdMatrix) -> Value {
    let mut m = Map::new();
    m.insert("C_H".into(), matrix_value(&r.c_h.c));
    m.insert("Q_H".into(), matrix_value(&q.q));
    m.insert("ABD_analytic".into(), matrix_value(&abd.m));
    Value::Object(m)
}

pub fn thermal_json(r: &ConductionResult) -> Value {
    let mut m = Map::new();
    m.insert("k_hom".into(), matrix_value(&r.k_hom));
    m.insert("k_hom_per_thickness".into(), matrix_value(&r.k_hom_per_thickness));
    Value::Object(m)
}

/// Rows of comma-separated values, 17 significant digits.
pub fn matrix_csv<const R: usize, const C: usize>(m: &[[f64; C]; R]) -> String {
    let mut s = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Fixed-width table for terminals.
pub fn pretty_matrix<const R: usize, const C: usize>(m: &[[f64; C]; R]) -> String {
    let mut s = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.2}")).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s
}

/// Entrywise `(other - reference) / reference` where `|reference|` exceeds
/// `1e-6 * max|reference|`; masked entries are `None`.
pub fn relative_error(reference: &Mat6, other: &Mat6) -> [[Option<f64>; 6]; 6] {
    let scale = reference.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = 1e-6 * scale;
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let r = reference[i][j];
            (r.abs() > floor).then(|| (other[i][j] - r) / r)
        })
    })
}
