//! Text syntax for formulas.
//!
//! ```text
//! until   := or ("U" interval? until)?
//! or      := and ("or" and)*
//! and     := reachx ("and" reachx)*
//! reachx  := unary ("reach" "[" fn "]" dinterval unary)*
//! unary   := ("not" | "X" | "F" interval? | "G" interval?) unary
//!          | ("somewhere" | "everywhere" | "escape") "[" fn "]" dinterval unary
//!          | primary
//! primary := "(" until ")" | "true" | "false"
//!          | ident ((">=" | ">" | "<=" | "<") number)?
//! ```
//!
//! Time intervals are `[lo,hi]` with nonnegative integer bounds, `hi`
//! optionally `inf`. Distance interval bounds follow the domain of the
//! named distance function: integers for counting, reals for weights.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::algebra::{
    DistInterval, DistValue, DistanceDomain, DistanceRegistry, ExtNat,
};
use crate::logic::{CmpOp, Formula, TimeInterval};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

/// Parses a formula against the built-in distance functions (`hops`,
/// `weight`).
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    parse_with(text, &DistanceRegistry::builtin())
}

/// Parses a formula, resolving distance function names and bound domains
/// through `registry`.
pub fn parse_with(text: &str, registry: &DistanceRegistry) -> Result<Formula, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, registry };
    let f = p.until()?;
    if let Some(t) = p.peek() {
        return Err(p.err_at(t.line, t.col, format!("unexpected `{}`", t.kind)));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kw {
    True,
    False,
    Not,
    And,
    Or,
    Next,
    Until,
    Finally,
    Globally,
    Reach,
    Escape,
    Somewhere,
    Everywhere,
    Surround,
    Inf,
}

impl Kw {
    fn of(ident: &str) -> Option<Kw> {
        Some(match ident {
            "true" => Kw::True,
            "false" => Kw::False,
            "not" => Kw::Not,
            "and" => Kw::And,
            "or" => Kw::Or,
            "X" => Kw::Next,
            "U" => Kw::Until,
            "F" => Kw::Finally,
            "G" => Kw::Globally,
            "reach" => Kw::Reach,
            "escape" => Kw::Escape,
            "somewhere" => Kw::Somewhere,
            "everywhere" => Kw::Everywhere,
            "surround" => Kw::Surround,
            "inf" => Kw::Inf,
            _ => return None,
        })
    }

    fn text(&self) -> &'static str {
        match self {
            Kw::True => "true",
            Kw::False => "false",
            Kw::Not => "not",
            Kw::And => "and",
            Kw::Or => "or",
            Kw::Next => "X",
            Kw::Until => "U",
            Kw::Finally => "F",
            Kw::Globally => "G",
            Kw::Reach => "reach",
            Kw::Escape => "escape",
            Kw::Somewhere => "somewhere",
            Kw::Everywhere => "everywhere",
            Kw::Surround => "surround",
            Kw::Inf => "inf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokKind {
    Ident(String),
    Keyword(Kw),
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Minus,
    Ge,
    Gt,
    Le,
    Lt,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Ident(s) => write!(f, "{s}"),
            TokKind::Keyword(k) => write!(f, "{}", k.text()),
            TokKind::Number(s) => write!(f, "{s}"),
            TokKind::LParen => write!(f, "("),
            TokKind::RParen => write!(f, ")"),
            TokKind::LBracket => write!(f, "["),
            TokKind::RBracket => write!(f, "]"),
            TokKind::Comma => write!(f, ","),
            TokKind::Minus => write!(f, "-"),
            TokKind::Ge => write!(f, ">="),
            TokKind::Gt => write!(f, ">"),
            TokKind::Le => write!(f, "<="),
            TokKind::Lt => write!(f, "<"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    kind: TokKind,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    ident.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            let kind = match Kw::of(&ident) {
                Some(kw) => TokKind::Keyword(kw),
                None => TokKind::Ident(ident),
            };
            tokens.push(Token { kind, line: tl, col: tc });
            continue;
        }
        if c.is_ascii_digit() {
            let mut num = String::new();
            let mut seen_dot = false;
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() || (c == '.' && !seen_dot) {
                    seen_dot |= c == '.';
                    num.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            tokens.push(Token { kind: TokKind::Number(num), line: tl, col: tc });
            continue;
        }
        let kind = match c {
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            '[' => TokKind::LBracket,
            ']' => TokKind::RBracket,
            ',' => TokKind::Comma,
            '-' => TokKind::Minus,
            '>' | '<' => {
                bump(&mut chars);
                let eq = chars.peek() == Some(&'=');
                if eq {
                    bump(&mut chars);
                }
                let kind = match (c, eq) {
                    ('>', true) => TokKind::Ge,
                    ('>', false) => TokKind::Gt,
                    ('<', true) => TokKind::Le,
                    _ => TokKind::Lt,
                };
                tokens.push(Token { kind, line: tl, col: tc });
                continue;
            }
            _ => {
                return Err(ParseError {
                    line: tl,
                    col: tc,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        bump(&mut chars);
        tokens.push(Token { kind, line: tl, col: tc });
    }
    Ok(tokens)
}

const SURROUND_MSG: &str = "the surround operator is not supported; it is reserved syntax";

struct Parser<'r> {
    tokens: Vec<Token>,
    pos: usize,
    registry: &'r DistanceRegistry,
}

impl<'r> Parser<'r> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, line: u32, col: u32, message: String) -> ParseError {
        ParseError { line, col, message }
    }

    fn err_here(&self, message: String) -> ParseError {
        match self.peek() {
            Some(t) => self.err_at(t.line, t.col, message),
            None => {
                let (line, col) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.col))
                    .unwrap_or((1, 1));
                self.err_at(line, col, format!("{message} (at end of input)"))
            }
        }
    }

    fn eat(&mut self, kind: &TokKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokKind) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.next().unwrap()),
            _ => Err(self.err_here(format!("expected `{kind}`"))),
        }
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.eat(&TokKind::Keyword(Kw::Until)) {
            let interval = self.opt_time_interval()?;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, interval, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.eat(&TokKind::Keyword(Kw::Or)) {
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.reachx()?;
        while self.eat(&TokKind::Keyword(Kw::And)) {
            let rhs = self.reachx()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn reachx(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if let Some(Token { kind: TokKind::Keyword(Kw::Surround), line, col }) =
                self.peek().cloned()
            {
                return Err(self.err_at(line, col, SURROUND_MSG.to_string()));
            }
            if !self.eat(&TokKind::Keyword(Kw::Reach)) {
                return Ok(lhs);
            }
            let (func, interval) = self.spatial_bounds()?;
            let rhs = self.unary()?;
            lhs = Formula::reach(lhs, &func, interval, rhs);
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if let Some(Token { kind: TokKind::Keyword(kw), line, col }) = self.peek().cloned() {
            match kw {
                Kw::Not => {
                    self.pos += 1;
                    return Ok(Formula::not(self.unary()?));
                }
                Kw::Next => {
                    self.pos += 1;
                    return Ok(Formula::next(self.unary()?));
                }
                Kw::Finally => {
                    self.pos += 1;
                    let interval = self.opt_time_interval()?;
                    return Ok(Formula::eventually(interval, self.unary()?));
                }
                Kw::Globally => {
                    self.pos += 1;
                    let interval = self.opt_time_interval()?;
                    return Ok(Formula::globally(interval, self.unary()?));
                }
                Kw::Somewhere => {
                    self.pos += 1;
                    let (func, interval) = self.spatial_bounds()?;
                    return Ok(Formula::somewhere(&func, interval, self.unary()?));
                }
                Kw::Everywhere => {
                    self.pos += 1;
                    let (func, interval) = self.spatial_bounds()?;
                    return Ok(Formula::everywhere(&func, interval, self.unary()?));
                }
                Kw::Escape => {
                    self.pos += 1;
                    let (func, interval) = self.spatial_bounds()?;
                    return Ok(Formula::escape(&func, interval, self.unary()?));
                }
                Kw::Surround => {
                    return Err(self.err_at(line, col, SURROUND_MSG.to_string()));
                }
                _ => {}
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let t = match self.next() {
            Some(t) => t,
            None => return Err(self.err_here("expected a formula".to_string())),
        };
        match t.kind {
            TokKind::LParen => {
                let f = self.until()?;
                self.expect(TokKind::RParen)?;
                Ok(f)
            }
            TokKind::Keyword(Kw::True) => Ok(Formula::tt()),
            TokKind::Keyword(Kw::False) => Ok(Formula::ff()),
            TokKind::Ident(name) => {
                let op = match self.peek().map(|t| &t.kind) {
                    Some(TokKind::Ge) => Some(CmpOp::Ge),
                    Some(TokKind::Gt) => Some(CmpOp::Gt),
                    Some(TokKind::Le) => Some(CmpOp::Le),
                    Some(TokKind::Lt) => Some(CmpOp::Lt),
                    _ => None,
                };
                match op {
                    None => Ok(Formula::kind(&name)),
                    Some(op) => {
                        self.pos += 1;
                        let threshold = self.signed_number()?;
                        Ok(Formula::cmp(&name, op, threshold))
                    }
                }
            }
            kind => Err(self.err_at(t.line, t.col, format!("unexpected `{kind}`"))),
        }
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let negative = self.eat(&TokKind::Minus);
        let t = self.expect_number("a number")?;
        let v = f64::from_str(&t.0).map_err(|_| {
            self.err_at(t.1, t.2, format!("malformed number `{}`", t.0))
        })?;
        Ok(if negative { -v } else { v })
    }

    fn expect_number(&mut self, what: &str) -> Result<(String, u32, u32), ParseError> {
        match self.peek().cloned() {
            Some(Token { kind: TokKind::Number(s), line, col }) => {
                self.pos += 1;
                Ok((s, line, col))
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn opt_time_interval(&mut self) -> Result<Option<TimeInterval>, ParseError> {
        if self.peek().map(|t| &t.kind) != Some(&TokKind::LBracket) {
            return Ok(None);
        }
        let open = self.next().unwrap();
        let lo = self.time_bound()?;
        self.expect(TokKind::Comma)?;
        let hi = if self.eat(&TokKind::Keyword(Kw::Inf)) {
            None
        } else {
            Some(self.time_bound()?)
        };
        self.expect(TokKind::RBracket)?;
        let interval = match hi {
            None => TimeInterval::unbounded(lo),
            Some(hi) => TimeInterval::bounded(lo, hi).map_err(|e| {
                self.err_at(open.line, open.col, e.to_string())
            })?,
        };
        Ok(Some(interval))
    }

    fn time_bound(&mut self) -> Result<u64, ParseError> {
        let (text, line, col) = self.expect_number("a time bound")?;
        text.parse::<u64>().map_err(|_| {
            self.err_at(line, col, "time bounds are nonnegative integers".to_string())
        })
    }

    /// `[fn][lo,hi]` after a spatial keyword.
    fn spatial_bounds(&mut self) -> Result<(String, DistInterval), ParseError> {
        self.expect(TokKind::LBracket)?;
        let (name, line, col) = match self.next() {
            Some(Token { kind: TokKind::Ident(s), line, col }) => (s, line, col),
            Some(t) => {
                return Err(self.err_at(
                    t.line,
                    t.col,
                    format!("expected a distance function name, found `{}`", t.kind),
                ))
            }
            None => return Err(self.err_here("expected a distance function name".to_string())),
        };
        self.expect(TokKind::RBracket)?;
        let func = self.registry.get(&name).ok_or_else(|| {
            self.err_at(line, col, format!("unknown distance function `{name}`"))
        })?;
        let domain = func.domain();
        let open = self.expect(TokKind::LBracket)?;
        let lo = self.dist_bound(domain)?;
        self.expect(TokKind::Comma)?;
        let hi = self.dist_bound(domain)?;
        self.expect(TokKind::RBracket)?;
        let interval = DistInterval::new(lo, hi).map_err(|e| {
            self.err_at(open.line, open.col, format!("malformed distance interval: {e}"))
        })?;
        Ok((name, interval))
    }

    fn dist_bound(&mut self, domain: DistanceDomain) -> Result<DistValue, ParseError> {
        if self.eat(&TokKind::Keyword(Kw::Inf)) {
            return Ok(domain.inf());
        }
        let (text, line, col) = self.expect_number("a distance bound")?;
        match domain {
            DistanceDomain::Counting => {
                let n = text.parse::<u64>().map_err(|_| {
                    self.err_at(
                        line,
                        col,
                        "hop-count bounds are nonnegative integers".to_string(),
                    )
                })?;
                Ok(DistValue::Count(ExtNat::Fin(n)))
            }
            DistanceDomain::Tropical => {
                let v = f64::from_str(&text).map_err(|_| {
                    self.err_at(line, col, format!("malformed number `{text}`"))
                })?;
                Ok(DistValue::Trop(v))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{DistanceFunction, DistanceRegistry};
    use crate::logic::Node;

    fn doubled(w: f64) -> DistValue {
        DistValue::Trop(w * 2.0)
    }

    #[test]
    fn atoms_and_comparisons() {
        assert_eq!(parse("drone").unwrap(), Formula::kind("drone"));
        assert_eq!(
            parse("battery >= 4").unwrap(),
            Formula::cmp("battery", CmpOp::Ge, 4.0),
        );
        assert_eq!(
            parse("temp < -1.5").unwrap(),
            Formula::cmp("temp", CmpOp::Lt, -1.5),
        );
        assert_eq!(
            parse("load <= 0.25").unwrap(),
            Formula::cmp("load", CmpOp::Le, 0.25),
        );
    }

    #[test]
    fn precedence_layers() {
        // U is loosest, then or, then and, then reach, then unary.
        let f = parse("a and b or c U d").unwrap();
        let expect = Formula::until(
            Formula::or(Formula::and(Formula::kind("a"), Formula::kind("b")), Formula::kind("c")),
            None,
            Formula::kind("d"),
        );
        assert_eq!(f, expect);

        let g = parse("not a and b").unwrap();
        assert_eq!(
            g,
            Formula::and(Formula::not(Formula::kind("a")), Formula::kind("b")),
        );

        let r = parse("a reach[hops][0,2] b and c").unwrap();
        match r.node() {
            Node::And(lhs, _) => assert!(matches!(lhs.node(), Node::Reach { .. })),
            other => panic!("expected and at the root, got {other:?}"),
        }
    }

    #[test]
    fn until_is_right_associative() {
        let f = parse("a U b U c").unwrap();
        let expect = Formula::until(
            Formula::kind("a"),
            None,
            Formula::until(Formula::kind("b"), None, Formula::kind("c")),
        );
        assert_eq!(f, expect);
    }

    #[test]
    fn timed_operators() {
        let f = parse("F[0,3] p").unwrap();
        assert_eq!(
            f,
            Formula::eventually(Some(TimeInterval::bounded(0, 3).unwrap()), Formula::kind("p")),
        );
        let g = parse("p U[2,inf] q").unwrap();
        assert_eq!(
            g,
            Formula::until(
                Formula::kind("p"),
                Some(TimeInterval::unbounded(2)),
                Formula::kind("q"),
            ),
        );
        let h = parse("G[0,100] battery >= 4").unwrap();
        assert_eq!(
            h,
            Formula::globally(
                Some(TimeInterval::bounded(0, 100).unwrap()),
                Formula::cmp("battery", CmpOp::Ge, 4.0),
            ),
        );
    }

    #[test]
    fn spatial_operators() {
        let f = parse("somewhere[hops][1,2] drone").unwrap();
        assert!(matches!(f.node(), Node::Somewhere { func, .. } if func == "hops"));

        let g = parse("escape[weight][4.5,inf] p").unwrap();
        match g.node() {
            Node::Escape { func, interval, .. } => {
                assert_eq!(func, "weight");
                assert_eq!(interval.to_string(), "[4.5,inf]");
            }
            other => panic!("unexpected {other:?}"),
        }

        let fleet = parse(
            "(G not obstacle) and ((drone reach[hops][0,2] groundstation) U goal)",
        )
        .unwrap();
        match fleet.node() {
            Node::And(lhs, rhs) => {
                assert!(matches!(lhs.node(), Node::Globally { .. }));
                assert!(matches!(rhs.node(), Node::Until { interval: None, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn custom_registry_functions() {
        let mut reg = DistanceRegistry::builtin();
        reg.register(DistanceFunction::custom(
            "latency",
            DistanceDomain::Tropical,
            doubled,
            true,
        ));
        let f = parse_with("somewhere[latency][0,9.5] p", &reg).unwrap();
        assert!(matches!(f.node(), Node::Somewhere { func, .. } if func == "latency"));
        let err = parse("somewhere[latency][0,9.5] p").unwrap_err();
        assert!(err.message.contains("unknown distance function"), "{err}");
    }

    #[test]
    fn surround_is_rejected() {
        let err = parse("p surround[hops][0,2] q").unwrap_err();
        assert!(err.message.contains("surround"), "{err}");
        assert!(err.message.contains("not supported"), "{err}");
    }

    #[test]
    fn keywords_are_not_atoms() {
        assert!(parse("reach").is_err());
        assert!(parse("inf").is_err());
        // Longer identifiers that merely start with a keyword are fine.
        assert_eq!(parse("reachable").unwrap(), Formula::kind("reachable"));
        assert_eq!(parse("Xray").unwrap(), Formula::kind("Xray"));
    }

    #[test]
    fn error_positions() {
        let err = parse("p and\n  or q").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));

        let err = parse("F[3,1] p").unwrap_err();
        assert_eq!((err.line, err.col), (1, 2));
        assert!(err.message.contains("lower bound exceeds upper bound"), "{err}");

        let err = parse("somewhere[hops][1.5,2] p").unwrap_err();
        assert!(err.message.contains("nonnegative integers"), "{err}");

        let err = parse("p U[0.5,2] q").unwrap_err();
        assert!(err.message.contains("nonnegative integers"), "{err}");

        let err = parse("(p and q").unwrap_err();
        assert!(err.message.contains("expected `)`"), "{err}");

        let err = parse("p @ q").unwrap_err();
        assert!(err.message.contains("unexpected character"), "{err}");
    }
}
