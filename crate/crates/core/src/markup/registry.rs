//! Tag registry and the `h`/`w` prefix classifier.
//!
//! A wHTML tag set is the union of an HTML vocabulary and a WML vocabulary.
//! HTML-only tags are written with an `h` prefix, WML-only tags with a `w`
//! prefix, and tags common to both may appear bare. A prefixed spelling of a
//! shared tag (`hp`, `wp`) pins it to one profile.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Number of names on the WML side (`wml_only ∪ shared`) of every registry.
pub const WML_VOCABULARY_SIZE: usize = 35;

const DEFAULT_REGISTRY: &str = include_str!("../../data/default.registry");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Profile {
    HtmlOnly,
    WmlOnly,
    Shared,
}

impl Profile {
    /// Prefix used when writing a tag of this profile in wHTML source.
    pub fn prefix(self) -> &'static str {
        match self {
            Profile::HtmlOnly => "h",
            Profile::WmlOnly => "w",
            Profile::Shared => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TagClass {
    pub profile: Profile,
    pub local_name: String,
}

impl TagClass {
    /// The spelling that classifies back to this class.
    pub fn source_name(&self) -> String {
        format!("{}{}", self.profile.prefix(), self.local_name)
    }
}

impl fmt::Display for TagClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("unknown tag <{0}>")]
    UnknownTag(String),
    #[error("WML tag <{0}> must be written in lowercase")]
    CaseViolation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("tag `{name}` is listed in both {first} and {second}")]
    Overlap {
        name: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("WML vocabulary has {found} tags, expected {WML_VOCABULARY_SIZE}")]
    WmlVocabularySize { found: usize },
    #[error("shared tag `{name}` is ambiguous with prefixed tag `{remainder}`")]
    PrefixCollision { name: String, remainder: String },
    #[error("cannot read registry {path}: {message}")]
    Io { path: String, message: String },
}

/// The three disjoint tag sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagRegistry {
    html_only: BTreeSet<String>,
    wml_only: BTreeSet<String>,
    shared: BTreeSet<String>,
}

impl Default for TagRegistry {
    fn default() -> Self {
        Self::parse(DEFAULT_REGISTRY).expect("bundled registry is valid")
    }
}

impl TagRegistry {
    /// Builds a registry from explicit sets and runs the load-time self-check.
    pub fn new<I, S>(html_only: I, wml_only: I, shared: I) -> Result<Self, RegistryError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let collect = |it: I| it.into_iter().map(Into::into).collect::<BTreeSet<String>>();
        let reg = Self {
            html_only: collect(html_only),
            wml_only: collect(wml_only),
            shared: collect(shared),
        };
        reg.self_check()?;
        Ok(reg)
    }

    /// Parses the line-oriented `<set>\t<name>` format.
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let mut html = Vec::new();
        let mut wml = Vec::new();
        let mut shared = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let (set, name) = trimmed.split_once('\t').ok_or_else(|| RegistryError::Syntax {
                line,
                message: "expected `<set>\\t<name>`".into(),
            })?;
            let name = name.trim();
            if name.is_empty()
                || !name
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
                || !name.as_bytes()[0].is_ascii_lowercase()
            {
                return Err(RegistryError::Syntax {
                    line,
                    message: format!("tag name `{name}` must be lowercase ASCII"),
                });
            }
            match set.trim() {
                "html" => html.push(name.to_string()),
                "wml" => wml.push(name.to_string()),
                "shared" => shared.push(name.to_string()),
                other => {
                    return Err(RegistryError::Syntax {
                        line,
                        message: format!("unknown set `{other}`"),
                    })
                }
            }
        }
        Self::new(html, wml, shared)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    fn self_check(&self) -> Result<(), RegistryError> {
        let sets: [(&'static str, &BTreeSet<String>); 3] = [
            ("html", &self.html_only),
            ("wml", &self.wml_only),
            ("shared", &self.shared),
        ];
        for (i, (first, a)) in sets.iter().enumerate() {
            for (second, b) in &sets[i + 1..] {
                if let Some(name) = a.intersection(b).next() {
                    return Err(RegistryError::Overlap {
                        name: name.clone(),
                        first,
                        second,
                    });
                }
            }
        }
        let wml_side = self.wml_only.len() + self.shared.len();
        if wml_side != WML_VOCABULARY_SIZE {
            return Err(RegistryError::WmlVocabularySize { found: wml_side });
        }
        // A bare shared tag must not also read as a prefixed tag.
        for name in &self.shared {
            if let Some(rest) = name.strip_prefix('h') {
                if self.is_html_side(rest) {
                    return Err(RegistryError::PrefixCollision {
                        name: name.clone(),
                        remainder: rest.to_string(),
                    });
                }
            }
            if let Some(rest) = name.strip_prefix('w') {
                if self.is_wml_side(rest) {
                    return Err(RegistryError::PrefixCollision {
                        name: name.clone(),
                        remainder: rest.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn html_only(&self) -> &BTreeSet<String> {
        &self.html_only
    }

    pub fn wml_only(&self) -> &BTreeSet<String> {
        &self.wml_only
    }

    pub fn shared(&self) -> &BTreeSet<String> {
        &self.shared
    }

    fn is_html_side(&self, name: &str) -> bool {
        self.html_only.contains(name) || self.shared.contains(name)
    }

    fn is_wml_side(&self, name: &str) -> bool {
        self.wml_only.contains(name) || self.shared.contains(name)
    }

    /// Resolves an as-written tag name. Prefix readings are tried before the
    /// shared lookup.
    pub fn classify(&self, raw_name: &str) -> Result<TagClass, ClassifyError> {
        let lower = raw_name.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix('h') {
            if self.is_html_side(rest) {
                return Ok(TagClass {
                    profile: Profile::HtmlOnly,
                    local_name: rest.to_string(),
                });
            }
        }
        if let Some(rest) = lower.strip_prefix('w') {
            if self.is_wml_side(rest) {
                if raw_name.bytes().any(|b| b.is_ascii_uppercase()) {
                    return Err(ClassifyError::CaseViolation(raw_name.to_string()));
                }
                return Ok(TagClass {
                    profile: Profile::WmlOnly,
                    local_name: rest.to_string(),
                });
            }
        }
        if self.shared.contains(&lower) {
            return Ok(TagClass {
                profile: Profile::Shared,
                local_name: lower,
            });
        }
        Err(ClassifyError::UnknownTag(raw_name.to_string()))
    }
}

/// Free-function form of [`TagRegistry::classify`].
pub fn classify_tag(raw_name: &str, registry: &TagRegistry) -> Result<TagClass, ClassifyError> {
    registry.classify(raw_name)
}
