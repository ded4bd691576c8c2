//! Hand-authored exemplar programs shipped with the library.

use crate::program::{parse_program, StructureProgram};

pub const CATEGORIES: [&str; 3] = ["usb", "globe", "washing_machine"];

pub fn exemplar_text(category: &str) -> Option<&'static str> {
    match category {
        "usb" => Some(include_str!("../programs/usb.json")),
        "globe" => Some(include_str!("../programs/globe.json")),
        "washing_machine" => Some(include_str!("../programs/washing_machine.json")),
        _ => None,
    }
}

/// Parsed exemplar; the shipped documents are known to be valid.
pub fn exemplar(category: &str) -> Option<StructureProgram> {
    exemplar_text(category).map(|t| parse_program(t).expect("shipped exemplar parses"))
}
