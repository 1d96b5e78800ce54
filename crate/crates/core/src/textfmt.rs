//! Shared helpers for the line-oriented file formats.

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn fmt_distance(d: Option<u32>) -> String {
    match d {
        Some(k) => k.to_string(),
        None => "sentence".to_string(),
    }
}

pub(crate) fn parse_distance(s: &str) -> Option<Option<u32>> {
    match s {
        "sentence" => Some(None),
        k => k.parse().ok().map(Some),
    }
}

/// Splits `key=value` header fields.
pub(crate) fn header_fields<'a>(fields: impl Iterator<Item = &'a str>) -> Vec<(&'a str, &'a str)> {
    fields.filter_map(|f| f.split_once('=')).collect()
}

pub(crate) fn header_get<'a>(fields: &[(&'a str, &'a str)], key: &str) -> Option<&'a str> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}
