//! Extraction of a single action literal from free-form agent text.
//!
//! Two surface forms are recognised anywhere in the text:
//!
//! ```text
//! tuple form:  ('name', payload)   ('name',)   ('name')
//! call form:   name(arg, ...)      name()
//! ```
//!
//! A tuple-form payload is a scalar, a parenthesised argument tuple, or a
//! bracketed list (which becomes one list argument). Arguments are scalars or
//! one-level lists of scalars written with `(...)` or `[...]`. The last
//! well-formed literal in the text wins. See `docs/action_grammar.md` for the
//! EBNF.

use std::ops::Range;

use thiserror::Error;

use super::call::{ActionCall, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    NoMatch,
    MalformedPayload,
}

/// Why no action could be extracted. `span` is a character range and is only
/// present for malformed literals.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", match .kind { ParseErrorKind::NoMatch => "no action literal found", ParseErrorKind::MalformedPayload => "malformed action payload" })]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Option<Range<usize>>,
}

/// Returns the last complete action literal in `raw`.
pub fn extract_action(raw: &str) -> Result<ActionCall, ParseError> {
    let bytes = raw.as_bytes();
    let mut best: Option<ActionCall> = None;
    let mut malformed: Option<Range<usize>> = None;

    for start in 0..bytes.len() {
        let attempt = match bytes[start] {
            b'(' => try_tuple(bytes, start),
            b if is_ident_start(b) && (start == 0 || !is_ident_byte(bytes[start - 1])) => try_call(bytes, start),
            _ => Attempt::NotHere,
        };
        match attempt {
            Attempt::NotHere => {}
            Attempt::Found(call) => best = Some(call),
            Attempt::Malformed(end) => malformed = Some(start..end),
        }
    }

    if let Some(call) = best {
        return Ok(call);
    }
    match malformed {
        Some(span) => Err(ParseError { kind: ParseErrorKind::MalformedPayload, span: Some(char_range(raw, span)) }),
        None => Err(ParseError { kind: ParseErrorKind::NoMatch, span: None }),
    }
}

enum Attempt {
    NotHere,
    Found(ActionCall),
    /// A literal header was recognised but its interior failed; carries the
    /// byte offset where scanning stopped.
    Malformed(usize),
}

fn char_range(raw: &str, bytes: Range<usize>) -> Range<usize> {
    let to_char = |b: usize| {
        let mut b = b.min(raw.len());
        while !raw.is_char_boundary(b) {
            b -= 1;
        }
        raw[..b].chars().count()
    };
    to_char(bytes.start)..to_char(bytes.end)
}

fn is_ident_start(b: u8) -> bool {
    b == b'_' || b.is_ascii_lowercase()
}

fn is_ident_byte(b: u8) -> bool {
    b == b'_' || b.is_ascii_alphanumeric()
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Lowercase identifier matching `[a-z_][a-z0-9_]*`.
    fn ident(&mut self) -> Option<&'a str> {
        let start = self.pos;
        if !matches!(self.peek(), Some(b) if is_ident_start(b)) {
            return None;
        }
        self.pos += 1;
        while matches!(self.peek(), Some(b) if b == b'_' || b.is_ascii_lowercase() || b.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).ok()
    }

    fn number(&mut self) -> Option<Value> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'+') | Some(b'-')) {
            self.pos += 1;
        }
        let int_start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        let int_digits = self.pos - int_start;
        let mut is_real = false;
        let mut frac_digits = 0;
        if self.peek() == Some(b'.') {
            is_real = true;
            self.pos += 1;
            let frac_start = self.pos;
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
            frac_digits = self.pos - frac_start;
        }
        if int_digits == 0 && frac_digits == 0 {
            self.pos = start;
            return None;
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = save;
            } else {
                is_real = true;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).ok()?;
        let text = text.strip_prefix('+').unwrap_or(text);
        if is_real {
            let v: f64 = text.parse().ok()?;
            v.is_finite().then_some(Value::Real(v))
        } else {
            text.parse::<i64>().ok().map(Value::Int)
        }
    }

    /// Comma-separated items up to `close`, trailing comma allowed. The
    /// opening delimiter has already been consumed.
    fn items(&mut self, close: u8, allow_lists: bool) -> Option<Vec<Value>> {
        let mut out = Vec::new();
        self.skip_ws();
        if self.eat(close) {
            return Some(out);
        }
        loop {
            self.skip_ws();
            let item = match self.peek()? {
                b'(' | b'[' if allow_lists => {
                    let inner_close = if self.peek() == Some(b'(') { b')' } else { b']' };
                    self.pos += 1;
                    Value::List(self.items(inner_close, false)?)
                }
                _ => self.number()?,
            };
            out.push(item);
            self.skip_ws();
            if self.eat(close) {
                return Some(out);
            }
            if !self.eat(b',') {
                return None;
            }
            self.skip_ws();
            if self.eat(close) {
                return Some(out);
            }
        }
    }
}

fn try_tuple(s: &[u8], start: usize) -> Attempt {
    let mut c = Cursor { s, pos: start + 1 };
    c.skip_ws();
    let quote = match c.peek() {
        Some(q @ (b'\'' | b'"')) => q,
        _ => return Attempt::NotHere,
    };
    c.pos += 1;
    let Some(name) = c.ident() else {
        return Attempt::NotHere;
    };
    if !c.eat(quote) {
        return Attempt::NotHere;
    }
    let name = name.to_string();
    c.skip_ws();
    if c.eat(b')') {
        return Attempt::Found(ActionCall { name, payload: Vec::new() });
    }
    if !c.eat(b',') {
        return Attempt::Malformed(c.pos);
    }
    c.skip_ws();
    if c.eat(b')') {
        return Attempt::Found(ActionCall { name, payload: Vec::new() });
    }
    let payload = match c.peek() {
        Some(b'(') => {
            c.pos += 1;
            c.items(b')', true)
        }
        Some(b'[') => {
            c.pos += 1;
            c.items(b']', false).map(|items| vec![Value::List(items)])
        }
        _ => c.number().map(|v| vec![v]),
    };
    let Some(payload) = payload else {
        return Attempt::Malformed(c.pos);
    };
    c.skip_ws();
    c.eat(b',');
    c.skip_ws();
    if !c.eat(b')') {
        return Attempt::Malformed(c.pos);
    }
    Attempt::Found(ActionCall { name, payload })
}

fn try_call(s: &[u8], start: usize) -> Attempt {
    let mut c = Cursor { s, pos: start };
    let Some(name) = c.ident() else {
        return Attempt::NotHere;
    };
    // Identifiers running into uppercase letters or other word bytes are not
    // names (e.g. `moveX(`).
    if matches!(c.peek(), Some(b) if is_ident_byte(b)) {
        return Attempt::NotHere;
    }
    let name = name.to_string();
    if !c.eat(b'(') {
        return Attempt::NotHere;
    }
    match c.items(b')', true) {
        Some(payload) => Attempt::Found(ActionCall { name, payload }),
        None => Attempt::Malformed(c.pos.min(s.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::call::canonical_repr;

    fn parse(s: &str) -> ActionCall {
        extract_action(s).unwrap_or_else(|e| panic!("{s:?}: {e:?}"))
    }

    #[test]
    fn tuple_forms() {
        let c = parse("('swap', (1, 2))");
        assert_eq!(c.name, "swap");
        assert_eq!(c.payload, vec![Value::Int(1), Value::Int(2)]);

        let c = parse("('rotate', (30.5, 20.4, 15.1))");
        assert_eq!(c.payload, vec![Value::Real(30.5), Value::Real(20.4), Value::Real(15.1)]);

        assert_eq!(parse("('stop',)").payload, vec![]);
        assert_eq!(parse("(\"stop\")").payload, vec![]);
        assert_eq!(parse("('move', 2)").payload, vec![Value::Int(2)]);
        assert_eq!(parse("('move', [1, 2, 3, 4])").payload, vec![Value::ints(&[1, 2, 3, 4])]);
        assert_eq!(parse("('swap', ((0,0), (0,1)))").payload, vec![Value::ints(&[0, 0]), Value::ints(&[0, 1])]);
        assert_eq!(parse("( 'move' , ( 3 , ) )").payload, vec![Value::Int(3)]);
    }

    #[test]
    fn call_forms() {
        assert_eq!(parse("I think... stop()"), ActionCall::stop());
        assert_eq!(parse("move(1) then move(2)").payload, vec![Value::Int(2)]);
        assert_eq!(parse("swap((0,0),(0,1))").payload, vec![Value::ints(&[0, 0]), Value::ints(&[0, 1])]);
        assert_eq!(parse("move([1,2,3,4])").payload, vec![Value::ints(&[1, 2, 3, 4])]);
        assert_eq!(parse("rotate(-.5)").payload, vec![Value::Real(-0.5)]);
        assert_eq!(parse("rotate(+2.)").payload, vec![Value::Real(2.0)]);
        assert_eq!(parse("rotate(1e3)").payload, vec![Value::Real(1000.0)]);
    }

    #[test]
    fn last_match_wins_across_forms() {
        assert_eq!(parse("('move', 1) ... move(3)").payload, vec![Value::Int(3)]);
        assert_eq!(parse("move(3) or maybe ('move', 1)").payload, vec![Value::Int(1)]);
    }

    #[test]
    fn failures() {
        let e = extract_action("hello world").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NoMatch);
        assert!(e.span.is_none());

        let e = extract_action("go move(left)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MalformedPayload);
        assert_eq!(e.span.as_ref().unwrap().start, 3);

        // Three levels of nesting are rejected.
        assert!(extract_action("f(((1)))").is_err());
        // Uppercase names are not identifiers.
        assert_eq!(extract_action("Stop()").unwrap_err().kind, ParseErrorKind::NoMatch);
        assert!(extract_action("move(1").is_err());
        assert!(extract_action("move(99999999999999999999)").is_err());
    }

    #[test]
    fn spans_count_characters() {
        let e = extract_action("é move(x)").unwrap_err();
        assert_eq!(e.span.unwrap().start, 2);
    }

    #[test]
    fn canonical_round_trip_examples() {
        for s in ["('swap', (1, 2))", "('stop',)", "('rotate', (-30.0,))"] {
            assert_eq!(canonical_repr(&parse(s)), s);
        }
    }
}
