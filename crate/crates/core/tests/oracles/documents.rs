//! Random well-formed wHTML documents drawn from a registry.

use rand::Rng;
use whtmlgate_core::markup::TagRegistry;

pub struct DocGen<'r> {
    html: Vec<&'r str>,
    wml: Vec<&'r str>,
    shared: Vec<&'r str>,
}

impl<'r> DocGen<'r> {
    pub fn new(reg: &'r TagRegistry) -> Self {
        Self {
            html: reg.html_only().iter().map(String::as_str).collect(),
            wml: reg.wml_only().iter().map(String::as_str).collect(),
            shared: reg.shared().iter().map(String::as_str).collect(),
        }
    }

    fn name(&self, rng: &mut impl Rng) -> String {
        match rng.gen_range(0..3) {
            0 => format!("h{}", self.html[rng.gen_range(0..self.html.len())]),
            1 => format!("w{}", self.wml[rng.gen_range(0..self.wml.len())]),
            _ => self.shared[rng.gen_range(0..self.shared.len())].to_string(),
        }
    }

    fn text(rng: &mut impl Rng) -> &'static str {
        ["hi", " x &amp; y ", "&lt;b&gt;", "\n  ", "caf\u{e9}", "&#65;"][rng.gen_range(0..6)]
    }

    fn element(&self, rng: &mut impl Rng, name: &str, depth: u32, out: &mut String) {
        out.push('<');
        out.push_str(name);
        if rng.gen_bool(0.3) {
            out.push_str(&format!(" id=\"n{}\"", rng.gen_range(0..100)));
        }
        if depth == 0 || rng.gen_bool(0.25) {
            out.push_str("/>");
            return;
        }
        out.push('>');
        for _ in 0..rng.gen_range(0..4) {
            if rng.gen_bool(0.3) {
                out.push_str(Self::text(rng));
            } else {
                let child = self.name(rng);
                self.element(rng, &child, depth - 1, out);
            }
        }
        out.push_str("</");
        out.push_str(name);
        out.push('>');
    }

    /// A document whose root holds at least one `wcard`, so both
    /// projections succeed.
    pub fn document(&self, rng: &mut impl Rng) -> String {
        let mut out = String::from("<whtml>");
        let card_at = rng.gen_range(0..4);
        for i in 0..4 {
            if i == card_at {
                self.element(rng, "wcard", 4, &mut out);
            } else {
                let n = self.name(rng);
                self.element(rng, &n, 4, &mut out);
            }
        }
        out.push_str("</whtml>");
        out
    }
}
