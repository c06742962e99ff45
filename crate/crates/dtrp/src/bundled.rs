//! Domains shipped with the crate, addressable by name on the command line.

/// Name and JSON text of every bundled domain.
pub const BUNDLED: &[(&str, &str)] = &[
    ("tomato", include_str!("../domains/tomato.json")),
    ("test-pair", include_str!("../domains/test-pair.json")),
    ("dvt-like", include_str!("../domains/dvt-like.json")),
    ("dvt-small", include_str!("../domains/dvt-small.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
