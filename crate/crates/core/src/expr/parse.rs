//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-'? power
//! power  := atom ('^' integer)*        (right-associative)
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```

use super::{Func, Node};
use crate::error::{Error, Result};

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_')
}

pub(crate) fn parse(text: &str, vars: &[String], params: &[(&str, f64)]) -> Result<Node> {
    let mut p = Parser {
        src: text,
        pos: 0,
        vars,
        params,
    };
    p.skip_ws();
    if p.pos == text.len() {
        return Err(Error::EmptyInput);
    }
    let node = p.expr()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(node)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    vars: &'a [String],
    params: &'a [(&'a str, f64)],
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(want) {
            self.pos += want.len_utf8();
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.power()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        let mut exponents = Vec::new();
        while self.eat('^') {
            exponents.push(self.integer()?);
        }
        let Some(mut exp) = exponents.pop() else {
            return Ok(base);
        };
        while let Some(e) = exponents.pop() {
            exp = e
                .checked_pow(exp)
                .ok_or_else(|| self.syntax("exponent overflow"))?;
        }
        Ok(Node::Pow(Box::new(base), exp))
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        let (text, end) = self.number_span();
        if text.is_empty() {
            return Err(self.syntax("expected a non-negative integer exponent"));
        }
        if !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Syntax {
                offset: start,
                message: format!("exponent `{text}` is not an integer"),
            });
        }
        let value = text.parse::<u32>().map_err(|_| Error::Syntax {
            offset: start,
            message: "exponent overflow".into(),
        })?;
        self.pos = end;
        Ok(value)
    }

    /// Scans a decimal literal with optional fraction and exponent.
    fn number_span(&self) -> (&str, usize) {
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        let digits = |mut i: usize| {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        let int_end = digits(i);
        let mut seen_digit = int_end > i;
        i = int_end;
        if i < bytes.len() && bytes[i] == b'.' {
            let frac_end = digits(i + 1);
            seen_digit |= frac_end > i + 1;
            i = frac_end;
        }
        if !seen_digit {
            return ("", self.pos);
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            let exp_end = digits(j);
            if exp_end > j {
                i = exp_end;
            }
        }
        (&self.src[self.pos..i], i)
    }

    fn atom(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Err(self.syntax("unexpected end of input"));
        };
        if c == '(' {
            self.pos += 1;
            let inner = self.expr()?;
            if !self.eat(')') {
                return Err(self.syntax("expected `)`"));
            }
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == '.' {
            let (text, end) = self.number_span();
            if text.is_empty() {
                return Err(self.syntax("malformed number"));
            }
            let value: f64 = text.parse().map_err(|_| self.syntax("malformed number"))?;
            self.pos = end;
            return Ok(Node::Const(value));
        }
        if c.is_alphabetic() || c == '_' {
            let rest = &self.src[start..];
            let len = rest
                .char_indices()
                .find(|&(_, ch)| !(ch.is_alphanumeric() || ch == '_'))
                .map_or(rest.len(), |(i, _)| i);
            let name = &rest[..len];
            self.pos = start + len;
            let save = self.pos;
            if self.eat('(') {
                let Some(func) = Func::from_name(name) else {
                    return Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    });
                };
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.syntax("expected `)`"));
                }
                return Ok(Node::Call(func, Box::new(arg)));
            }
            self.pos = save;
            if let Some(i) = self.vars.iter().position(|v| v == name) {
                return Ok(Node::Var(i));
            }
            if let Some(&(_, value)) = self.params.iter().find(|(p, _)| *p == name) {
                return Ok(Node::Const(value));
            }
            return Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            });
        }
        Err(self.syntax(&format!("unexpected character `{c}`")))
    }
}

#[cfg(test)]
mod tests {
    use crate::error::Error;
    use crate::expr::Expression;

    fn eval(text: &str, x: f64) -> f64 {
        Expression::parse(text, &["x"]).unwrap().eval(&[x])
    }

    #[test]
    fn trailing_operator_reports_offset() {
        match Expression::parse("x +", &["x"]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_blank_input() {
        assert_eq!(Expression::parse("", &["x"]), Err(Error::EmptyInput));
        assert_eq!(Expression::parse("   ", &["x"]), Err(Error::EmptyInput));
    }

    #[test]
    fn unknown_identifiers() {
        assert!(matches!(
            Expression::parse("x + z", &["x"]),
            Err(Error::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            Expression::parse("tan(x)", &["x"]),
            Err(Error::UnknownIdentifier { offset: 0, .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("-x^2", 3.0), -9.0);
        assert_eq!(eval("2*-x", 3.0), -6.0);
        assert_eq!(eval("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(eval("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(eval("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval("x^2^3", 2.0), 256.0);
        assert_eq!(eval("(1 + x)^2", 1.0), 4.0);
        assert_eq!(eval("x^0", 5.0), 1.0);
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(eval("1.5e2", 0.0), 150.0);
        assert_eq!(eval(".5 + 2.", 0.0), 2.5);
        assert_eq!(eval("1E-2", 0.0), 0.01);
    }

    #[test]
    fn non_integer_powers_are_rejected() {
        assert!(matches!(
            Expression::parse("x^1.5", &["x"]),
            Err(Error::Syntax { offset: 2, .. })
        ));
        assert!(Expression::parse("x^-1", &["x"]).is_err());
        assert!(Expression::parse("x^y", &["x", "y"]).is_err());
    }

    #[test]
    fn unbalanced_parentheses() {
        assert!(Expression::parse("(x + 1", &["x"]).is_err());
        assert!(Expression::parse("x + 1)", &["x"]).is_err());
        assert!(Expression::parse("exp(x", &["x"]).is_err());
    }

    #[test]
    fn parameters_substitute_constants() {
        let e =
            Expression::parse_with_params("λ1*x + a1*x^2", &["x"], &[("λ1", 0.5), ("a1", 1.0)])
                .unwrap();
        assert_eq!(e.eval(&[2.0]), 5.0);
    }

    #[test]
    fn variables_shadow_parameters() {
        let e = Expression::parse_with_params("x", &["x"], &[("x", 9.0)]).unwrap();
        assert_eq!(e.eval(&[1.0]), 1.0);
    }
}
