use thiserror::Error;

use super::check::{check_well_formed, WellFormednessError};
use super::registry::{ClassifyError, TagClass, TagRegistry};
use super::token::{tokenize, Attributes, Position, SyntaxError, Token, TokenKind};
use super::write::MarkupWriter;
use crate::digest::fnv1a64;

/// Local name of the wHTML document element.
pub const ROOT_NAME: &str = "whtml";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementName {
    Root,
    Tag(TagClass),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: ElementName,
    pub attributes: Attributes,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

/// A parsed, well-formed and fully classified wHTML document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhtmlDocument {
    root: Element,
    source_digest: u64,
}

impl WhtmlDocument {
    pub fn root(&self) -> &Element {
        &self.root
    }

    pub fn source_digest(&self) -> u64 {
        self.source_digest
    }

    /// Writes the document back as wHTML, prefixes included.
    pub fn to_whtml(&self) -> Vec<u8> {
        let mut w = MarkupWriter::default();
        write_element(&mut w, &self.root);
        w.finish()
    }
}

fn write_element(w: &mut MarkupWriter, el: &Element) {
    let name = match &el.name {
        ElementName::Root => ROOT_NAME.to_string(),
        ElementName::Tag(class) => class.source_name(),
    };
    w.element(&name, &el.attributes, !el.children.is_empty(), |w| {
        for child in &el.children {
            match child {
                Node::Element(e) => write_element(w, e),
                Node::Text(t) => w.text(t),
            }
        }
    });
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    WellFormedness(#[from] WellFormednessError),
    #[error("{error}")]
    Classify {
        error: ClassifyError,
        position: Position,
    },
    #[error("{message}")]
    BadRoot { message: String, position: Position },
}

impl ParseError {
    pub fn position(&self) -> Position {
        match self {
            Self::Syntax(e) => e.position,
            Self::WellFormedness(e) => e.position(),
            Self::Classify { position, .. } | Self::BadRoot { position, .. } => *position,
        }
    }
}

pub fn parse(input: &[u8], registry: &TagRegistry) -> Result<WhtmlDocument, ParseError> {
    let tokens = tokenize(input)?;
    check_well_formed(&tokens)?;
    let root = build_tree(&tokens, registry)?;
    Ok(WhtmlDocument {
        root,
        source_digest: fnv1a64(input),
    })
}

struct Frame {
    element: Element,
    position: Position,
}

fn build_tree(tokens: &[Token], registry: &TagRegistry) -> Result<Element, ParseError> {
    let mut stack: Vec<Frame> = Vec::new();
    let mut top: Vec<(Element, Position)> = Vec::new();

    let open = |name: &str, attributes: &Attributes, at: Position, depth: usize| {
        let name = if depth == 0 && name.eq_ignore_ascii_case(ROOT_NAME) {
            ElementName::Root
        } else {
            let class = registry
                .classify(name)
                .map_err(|error| ParseError::Classify { error, position: at })?;
            ElementName::Tag(class)
        };
        Ok::<_, ParseError>(Element {
            name,
            attributes: attributes.clone(),
            children: Vec::new(),
        })
    };

    fn attach(stack: &mut [Frame], top: &mut Vec<(Element, Position)>, el: Element, at: Position) {
        match stack.last_mut() {
            Some(parent) => parent.element.children.push(Node::Element(el)),
            None => top.push((el, at)),
        }
    }

    for token in tokens {
        match &token.kind {
            TokenKind::StartTag { name, attributes } => {
                let element = open(name, attributes, token.position, stack.len())?;
                stack.push(Frame {
                    element,
                    position: token.position,
                });
            }
            TokenKind::EmptyTag { name, attributes } => {
                let element = open(name, attributes, token.position, stack.len())?;
                attach(&mut stack, &mut top, element, token.position);
            }
            TokenKind::EndTag { .. } => {
                // The stack check already paired every end tag.
                let frame = stack.pop().expect("checked stream");
                attach(&mut stack, &mut top, frame.element, frame.position);
            }
            TokenKind::Text(text) => match stack.last_mut() {
                Some(parent) => parent.element.children.push(Node::Text(text.clone())),
                None if text.trim().is_empty() => {}
                None => {
                    return Err(ParseError::BadRoot {
                        message: "text outside the <whtml> element".into(),
                        position: token.position,
                    })
                }
            },
        }
    }

    let mut top = top.into_iter();
    match (top.next(), top.next()) {
        (None, _) => Err(ParseError::BadRoot {
            message: "document has no <whtml> element".into(),
            position: Position {
                byte_offset: 0,
                line: 1,
                column: 1,
            },
        }),
        (Some((root, at)), rest) => {
            if let Some((_, extra)) = rest {
                return Err(ParseError::BadRoot {
                    message: "more than one top-level element".into(),
                    position: extra,
                });
            }
            if root.name != ElementName::Root {
                return Err(ParseError::BadRoot {
                    message: "top-level element must be <whtml>".into(),
                    position: at,
                });
            }
            Ok(root)
        }
    }
}
