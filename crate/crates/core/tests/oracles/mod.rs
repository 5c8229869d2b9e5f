//! Reference implementations used to cross-check the real ones.
#![allow(dead_code)]

pub mod interp;
pub mod matcher;
pub mod scripts;
pub mod streams;
pub mod documents;
