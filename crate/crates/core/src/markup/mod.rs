//! wHTML markup core: tag registry, tokenizer, well-formedness check and
//! the classified element tree.

pub mod check;
pub mod registry;
pub mod token;
pub mod tree;
pub mod write;

pub use check::{check_well_formed, OpenTag, WellFormednessError};
pub use registry::{classify_tag, ClassifyError, Profile, RegistryError, TagClass, TagRegistry};
pub use token::{tokenize, Attributes, Position, SyntaxError, Token, TokenKind};
pub use tree::{parse, Element, ElementName, Node, ParseError, WhtmlDocument, ROOT_NAME};
