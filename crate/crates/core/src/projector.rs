//! Projection of a wHTML document onto the HTML or WML profile.
//!
//! Elements of the target profile lose their prefix, shared elements are
//! copied unchanged, and elements of the opposite profile are dropped along
//! with their whole subtree. The `whtml` root becomes `html` or `wml`.

use std::fmt;

use thiserror::Error;

use crate::markup::{Attributes, Element, ElementName, Node, Profile, WhtmlDocument};
use crate::markup::write::MarkupWriter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Html,
    Wml,
}

impl Target {
    pub fn root_name(self) -> &'static str {
        match self {
            Target::Html => "html",
            Target::Wml => "wml",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            Target::Html => "text/html",
            Target::Wml => "text/vnd.wap.wml",
        }
    }

    /// Profile whose elements this target drops.
    fn excluded(self) -> Profile {
        match self {
            Target::Html => Profile::WmlOnly,
            Target::Wml => Profile::HtmlOnly,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.root_name())
    }
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "html" => Ok(Target::Html),
            "wml" => Ok(Target::Wml),
            other => Err(format!("unknown profile `{other}` (expected html or wml)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedElement {
    pub name: String,
    /// Profile of the source element; `None` for the document root.
    pub origin: Option<Profile>,
    pub attributes: Attributes,
    pub children: Vec<ProjectedNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjectedNode {
    Element(ProjectedElement),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedDocument {
    target: Target,
    root: ProjectedElement,
}

impl ProjectedDocument {
    pub fn target(&self) -> Target {
        self.target
    }

    pub fn root(&self) -> &ProjectedElement {
        &self.root
    }

    pub fn content_type(&self) -> &'static str {
        self.target.content_type()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectError {
    #[error("empty deck: the WML projection contains no <card>")]
    EmptyDeck,
}

pub fn project(doc: &WhtmlDocument, target: Target) -> Result<ProjectedDocument, ProjectError> {
    let root = ProjectedElement {
        name: target.root_name().to_string(),
        origin: None,
        attributes: doc.root().attributes.clone(),
        children: project_children(doc.root(), target),
    };
    if target == Target::Wml
        && !root
            .children
            .iter()
            .any(|c| matches!(c, ProjectedNode::Element(e) if e.name == "card"))
    {
        return Err(ProjectError::EmptyDeck);
    }
    Ok(ProjectedDocument { target, root })
}

fn project_children(el: &Element, target: Target) -> Vec<ProjectedNode> {
    el.children
        .iter()
        .filter_map(|child| match child {
            Node::Text(t) => Some(ProjectedNode::Text(t.clone())),
            Node::Element(e) => project_element(e, target).map(ProjectedNode::Element),
        })
        .collect()
}

fn project_element(el: &Element, target: Target) -> Option<ProjectedElement> {
    let class = match &el.name {
        ElementName::Tag(class) => class,
        // Parsing only admits the root at the top level.
        ElementName::Root => return None,
    };
    if class.profile == target.excluded() {
        return None;
    }
    Some(ProjectedElement {
        name: class.local_name.clone(),
        origin: Some(class.profile),
        attributes: el.attributes.clone(),
        children: project_children(el, target),
    })
}

pub fn serialize(proj: &ProjectedDocument) -> Vec<u8> {
    let mut w = MarkupWriter::default();
    write_element(&mut w, &proj.root);
    w.finish()
}

fn write_element(w: &mut MarkupWriter, el: &ProjectedElement) {
    w.element(&el.name, &el.attributes, !el.children.is_empty(), |w| {
        for child in &el.children {
            match child {
                ProjectedNode::Element(e) => write_element(w, e),
                ProjectedNode::Text(t) => w.text(t),
            }
        }
    });
}
