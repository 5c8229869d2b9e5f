//! Script corpus: hand-written programs plus seeded random ones.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use whtmlgate_core::wmls::Value;

pub struct Case {
    pub source: String,
    pub entry: &'static str,
    pub args: Vec<Value>,
}

fn case(source: &str, entry: &'static str, args: Vec<Value>) -> Case {
    Case {
        source: source.to_string(),
        entry,
        args,
    }
}

fn int(v: i64) -> Value {
    Value::Integer(v)
}

fn handwritten() -> Vec<Case> {
    let s = |x: &str| Value::String(x.to_string());
    vec![
        case("function main() { return 1+2; }", "main", vec![]),
        case("function f(n) { if (n <= 1) return 1; return n * f(n-1); }", "f", vec![int(5)]),
        case("function f(n) { if (n <= 1) return 1; return n * f(n-1); }", "f", vec![int(25)]),
        case("function fib(n) { if (n < 2) return n; return fib(n-1) + fib(n-2); }", "fib", vec![int(15)]),
        case(
            "function gcd(a, b) { while (b != 0) { var t = b; b = a % b; a = t; } return a; }",
            "gcd",
            vec![int(1071), int(462)],
        ),
        case("function f(n) { return n * f(n-1); }", "f", vec![int(3)]),
        case("function d(a) { return a / 0; }", "d", vec![int(9)]),
        case("function m(a, b) { return a % b; }", "m", vec![int(-7), int(2)]),
        case("function m(a, b) { return a / b; }", "m", vec![int(i64::MIN), int(-1)]),
        case("function m(a, b) { return a % b; }", "m", vec![int(i64::MIN), int(-1)]),
        case("function m(a) { return a * a * a; }", "m", vec![int(i64::MAX)]),
        case("function c(a, b) { return a + \" \" + b; }", "c", vec![s("hello"), s("world")]),
        case("function c(a, b) { return a + b; }", "c", vec![s("x"), int(1)]),
        case("function c(a, b) { return a < b; }", "c", vec![s("abc"), s("abd")]),
        case("function c(a, b) { return a >= b; }", "c", vec![s(""), s("")]),
        case("function e() { return 1 == \"1\"; }", "e", vec![]),
        case("function e() { return true == !0; }", "e", vec![]),
        case("function e(x) { return !x; }", "e", vec![s("")]),
        case("function e(x) { return -x; }", "e", vec![Value::Boolean(true)]),
        case(
            "function boom() { return 1/0; } function a(x) { return x && boom(); } function main() { return a(0) || a(\"\"); }",
            "main",
            vec![],
        ),
        case(
            "function sum(n) { var s = 0; var i = 1; while (i <= n) { s = s + i; i = i + 1; } return s; }",
            "sum",
            vec![int(1000)],
        ),
        case(
            "function down(n) { if (n == 0) return 0; return down(n - 1); }",
            "down",
            vec![int(255)],
        ),
        case(
            "function down(n) { if (n == 0) return 0; return down(n - 1); }",
            "down",
            vec![int(256)],
        ),
        case("function nothing() { var x; }", "nothing", vec![]),
        case(
            "function p(x) { if (x) { var y = 2; } return y; }",
            "p",
            vec![int(0)],
        ),
    ]
}

#[derive(Clone, Copy)]
enum Ty {
    Int,
    Str,
    Bool,
}

struct Gen {
    rng: StdRng,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.rng.gen_range(0..xs.len())]
    }

    fn any_ty(&mut self) -> Ty {
        [Ty::Int, Ty::Int, Ty::Str, Ty::Bool][self.rng.gen_range(0..4)]
    }

    /// An expression of type `ty`, except that a few nodes deliberately
    /// take an operand of another type.
    fn expr(&mut self, ty: Ty, depth: u32, vars: &[&str], calls: bool) -> String {
        let ty = if self.rng.gen_bool(0.01) { self.any_ty() } else { ty };
        if depth == 0 || self.rng.gen_bool(0.25) {
            return match ty {
                Ty::Int if !vars.is_empty() && self.rng.gen_bool(0.5) => self.pick(vars).to_string(),
                Ty::Int if self.rng.gen_bool(0.1) => self.pick(&["9223372036854775807", "4611686018427387904"]).to_string(),
                Ty::Int => self.rng.gen_range(-20i64..20).to_string(),
                Ty::Str => self.pick(&["\"a\"", "\"\"", "\"xy\"", "'b'"]).to_string(),
                Ty::Bool => self.pick(&["true", "false"]).to_string(),
            };
        }
        let d = depth - 1;
        match ty {
            Ty::Int => match self.rng.gen_range(0..8) {
                0 => format!("(-{})", self.expr(Ty::Int, d, vars, calls)),
                1 if calls => format!("h({}, {})", self.expr(Ty::Int, d, vars, calls), self.expr(Ty::Int, d, vars, calls)),
                _ => {
                    let op = self.pick(&["+", "-", "*", "/", "%", "+", "*"]);
                    let l = self.expr(Ty::Int, d, vars, calls);
                    let r = if matches!(op, "/" | "%") && self.rng.gen_bool(0.85) {
                        self.pick(&["3", "7", "-2", "5"]).to_string()
                    } else {
                        self.expr(Ty::Int, d, vars, calls)
                    };
                    format!("({l} {op} {r})")
                }
            },
            Ty::Str => format!("({} + {})", self.expr(Ty::Str, d, vars, calls), self.expr(Ty::Str, d, vars, calls)),
            Ty::Bool => match self.rng.gen_range(0..6) {
                0 => format!("(!{})", { let t = self.any_ty(); self.expr(t, d, vars, calls) }),
                1 => {
                    let (l, r) = (self.any_ty(), self.any_ty());
                    format!("({} && {})", self.expr(l, d, vars, calls), self.expr(r, d, vars, calls))
                }
                2 => {
                    let (l, r) = (self.any_ty(), self.any_ty());
                    format!("({} || {})", self.expr(l, d, vars, calls), self.expr(r, d, vars, calls))
                }
                3 => {
                    let op = self.pick(&["==", "!="]);
                    let (l, r) = (self.any_ty(), self.any_ty());
                    format!("({} {op} {})", self.expr(l, d, vars, calls), self.expr(r, d, vars, calls))
                }
                _ => {
                    let op = self.pick(&["<", "<=", ">", ">="]);
                    let t = if self.rng.gen_bool(0.3) { Ty::Str } else { Ty::Int };
                    format!("({} {op} {})", self.expr(t, d, vars, calls), self.expr(t, d, vars, calls))
                }
            },
        }
    }

    fn program(&mut self) -> String {
        let helper = self.expr(Ty::Int, 3, &["x", "y"], false);
        let v = ["a", "b"];
        let ea = self.expr(Ty::Int, 3, &[], true);
        let eb = self.expr(Ty::Int, 3, &["a"], true);
        let cond = self.expr(Ty::Bool, 2, &v, true);
        let then = self.expr(Ty::Int, 3, &v, true);
        let other = self.expr(Ty::Int, 3, &v, true);
        let body = self.expr(Ty::Int, 3, &v, true);
        let rt = self.any_ty();
        let ret = self.expr(rt, 4, &v, true);
        format!(
            "function h(x, y) {{ return {helper}; }}\n\
             function main() {{\n  var a = {ea};\n  var b = {eb};\n  if ({cond}) {{ a = {then}; }} else {{ b = {other}; }}\n  \
             var i = 0;\n  while (i < 3) {{ a = {body}; i = i + 1; }}\n  return {ret};\n}}\n"
        )
    }
}

/// Exactly `n` cases: the hand-written ones first, then random programs.
pub fn corpus(n: usize, seed: u64) -> Vec<Case> {
    let mut cases = handwritten();
    cases.truncate(n);
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
    };
    while cases.len() < n {
        cases.push(Case {
            source: g.program(),
            entry: "main",
            args: vec![],
        });
    }
    cases
}
