//! Random token streams: mostly balanced, often corrupted afterwards.

use rand::Rng;
use whtmlgate_core::markup::{Position, Token, TokenKind};

const NAMES: &[&str] = &["p", "P", "b", "card", "wcard", "hdiv", "td", "Td", "whtml"];

fn start(name: &str) -> TokenKind {
    TokenKind::StartTag {
        name: name.to_string(),
        attributes: vec![],
    }
}

fn end(name: &str) -> TokenKind {
    TokenKind::EndTag { name: name.to_string() }
}

fn leaf(rng: &mut impl Rng) -> TokenKind {
    if rng.gen_bool(0.5) {
        TokenKind::Text("t".into())
    } else {
        TokenKind::EmptyTag {
            name: NAMES[rng.gen_range(0..NAMES.len())].to_string(),
            attributes: vec![],
        }
    }
}

/// Deepest nesting reached while reading the stream left to right.
pub fn nesting_depth(tokens: &[Token]) -> usize {
    let (mut depth, mut max) = (0usize, 0usize);
    for t in tokens {
        match t.kind {
            TokenKind::StartTag { .. } => {
                depth += 1;
                max = max.max(depth);
            }
            TokenKind::EndTag { .. } => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    max
}

/// A stream of at most `max_len` tokens nesting at most `max_depth` deep.
pub fn random_stream(rng: &mut impl Rng, max_depth: usize, max_len: usize) -> Vec<Token> {
    loop {
        let s = candidate(rng, max_depth, max_len);
        if s.len() <= max_len && nesting_depth(&s) <= max_depth {
            return s;
        }
    }
}

fn candidate(rng: &mut impl Rng, max_depth: usize, max_len: usize) -> Vec<Token> {
    let target = if rng.gen_bool(0.05) {
        rng.gen_range(0..=max_len)
    } else {
        rng.gen_range(0..=max_len.min(300))
    };
    let mut kinds = Vec::with_capacity(target);
    let mut stack: Vec<&str> = Vec::new();
    while kinds.len() + stack.len() < target {
        let roll = rng.gen_range(0..10);
        if roll < 4 && stack.len() < max_depth && kinds.len() + stack.len() + 2 <= target {
            let name = NAMES[rng.gen_range(0..NAMES.len())];
            kinds.push(start(name));
            stack.push(name);
        } else if roll < 7 && !stack.is_empty() {
            let name = stack.pop().expect("non-empty");
            // Case differences alone do not make a mismatch.
            kinds.push(end(&if rng.gen_bool(0.2) { name.to_ascii_uppercase() } else { name.to_string() }));
        } else {
            kinds.push(leaf(rng));
        }
    }
    while let Some(name) = stack.pop() {
        kinds.push(end(name));
    }

    if !kinds.is_empty() && rng.gen_bool(0.6) {
        for _ in 0..rng.gen_range(1..=3) {
            corrupt(rng, &mut kinds);
        }
    }
    kinds.truncate(max_len);
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| Token {
            kind,
            position: Position {
                byte_offset: i * 4,
                line: 1,
                column: (i * 4 + 1) as u32,
            },
        })
        .collect()
}

fn corrupt(rng: &mut impl Rng, kinds: &mut Vec<TokenKind>) {
    if kinds.is_empty() {
        kinds.push(end("p"));
        return;
    }
    let i = rng.gen_range(0..kinds.len());
    match rng.gen_range(0..5) {
        0 => {
            kinds.remove(i);
        }
        1 => kinds.insert(i, end(NAMES[rng.gen_range(0..NAMES.len())])),
        2 => kinds.insert(i, start(NAMES[rng.gen_range(0..NAMES.len())])),
        3 => {
            let j = rng.gen_range(0..kinds.len());
            kinds.swap(i, j);
        }
        _ => {
            if let TokenKind::EndTag { name } = &mut kinds[i] {
                *name = NAMES[rng.gen_range(0..NAMES.len())].to_string();
            } else {
                kinds.truncate(i);
            }
        }
    }
}
