//! JSON-lines progress on standard error.

use std::io::Write;

use serde_json::{Map, Value};

/// Writes `{"event": <event>, ...fields}` as one line.
pub fn emit(event: &str, fields: Value) {
    let mut obj = Map::new();
    obj.insert("event".to_owned(), Value::from(event));
    if let Value::Object(f) = fields {
        obj.extend(f);
    }
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{}", Value::Object(obj));
}
