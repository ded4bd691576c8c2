//! Procedural generation of annotated articulated objects.
//!
//! An object is described by a structure program (posed analytic primitives
//! tied together by connectivity constraints and joints) plus a field of
//! per-point geometric details. Randomized rules rewrite the program, the
//! details are migrated to the new structure through surface bindings, and
//! labels defined as functions of primitive parameters are carried along to
//! every output point.

pub mod annotate;
pub mod canonical;
pub mod dataset;
pub mod detail;
pub mod exemplars;
pub mod export;
pub mod expr;
pub mod math;
pub mod primitive;
pub mod program;
pub mod recovery;
pub mod rules;
