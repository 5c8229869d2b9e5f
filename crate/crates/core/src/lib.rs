//! Unified HTTP/WAP content toolkit.
//!
//! One wHTML source holds both HTML (`h`-prefixed) and WML (`w`-prefixed)
//! elements plus unprefixed shared ones. This crate checks and parses such
//! sources, projects them to plain HTML or a WML deck, compiles a WMLScript
//! subset to reusable bytecode files, transcodes WBMP and BMP images, and
//! runs a gateway that filters plain traffic while relaying secure
//! envelopes untouched.

pub mod bench;
pub mod digest;
pub mod envelope;
pub mod gateway;
pub mod markup;
pub mod media;
pub mod projector;
pub mod wmls;
