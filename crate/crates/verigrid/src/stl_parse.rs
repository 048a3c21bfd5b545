//! Textual formula syntax.
//!
//! ```text
//! formula   := conjunct ( "or" conjunct )*
//! conjunct  := unary ( "and" unary )*
//! unary     := "not" unary
//!            | ("G" | "F") "[" number "," number "]" "(" formula ")"
//!            | "(" formula ")"
//!            | predicate
//! predicate := affine ">=" number
//! affine    := [ "-" ] term ( ("+" | "-") term )*
//! term      := number | channel | "abs" "(" channel [ "-" number ] ")"
//! ```
//!
//! A predicate must reference exactly one channel with coefficient +1 or -1.
//! An `abs` term is sugar that only appears subtracted, `c - abs(s - b)`,
//! and expands at parse time into the conjunction of the two affine margins
//! `(c + b) - s` and `s + (c - b)`. The pretty-printer emits the expanded
//! form; printing and reparsing is a fixed point.

use crate::error::{Error, Result};
use crate::stl::{Predicate, StlFormula};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Ge,
}

struct Lexer {
    toks: Vec<(usize, Tok)>,
    end: usize,
}

fn lex(text: &str) -> Result<Lexer> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '[' => {
                toks.push((i, Tok::LBracket));
                i += 1;
            }
            ']' => {
                toks.push((i, Tok::RBracket));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            ',' => {
                toks.push((i, Tok::Comma));
                i += 1;
            }
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Ge));
                    i += 2;
                } else {
                    return Err(Error::Parse {
                        pos: i,
                        message: "expected \">=\"".into(),
                    });
                }
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let n: f64 = text[start..i].parse().map_err(|_| Error::Parse {
                    pos: start,
                    message: format!("bad number {:?}", &text[start..i]),
                })?;
                toks.push((start, Tok::Number(n)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(Error::Parse {
                    pos: i,
                    message: format!("unexpected character {c:?}"),
                })
            }
        }
    }
    Ok(Lexer {
        toks,
        end: bytes.len(),
    })
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.here(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<StlFormula> {
        let mut acc = self.conjunct()?;
        while matches!(self.peek(), Some(Tok::Ident(s)) if s == "or") {
            self.pos += 1;
            let rhs = self.conjunct()?;
            acc = StlFormula::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn conjunct(&mut self) -> Result<StlFormula> {
        let mut acc = self.unary()?;
        while matches!(self.peek(), Some(Tok::Ident(s)) if s == "and") {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = StlFormula::And(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<StlFormula> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "not" => {
                self.pos += 1;
                Ok(StlFormula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Ident(s))
                if (s == "G" || s == "F") && self.peek2() == Some(&Tok::LBracket) =>
            {
                let always = s == "G";
                self.pos += 1;
                self.temporal(always)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                self.expect(Tok::RParen, "\")\"")?;
                Ok(inner)
            }
            _ => self.predicate(),
        }
    }

    fn temporal(&mut self, always: bool) -> Result<StlFormula> {
        self.expect(Tok::LBracket, "\"[\"")?;
        let t1_pos = self.here();
        let t1 = self.signed_number()?;
        self.expect(Tok::Comma, "\",\"")?;
        let t2_pos = self.here();
        let t2 = self.signed_number()?;
        self.expect(Tok::RBracket, "\"]\"")?;
        if t1 < 0.0 {
            return Err(Error::Parse {
                pos: t1_pos,
                message: "interval bound must be non-negative".into(),
            });
        }
        if t2 < t1 {
            return Err(Error::Parse {
                pos: t2_pos,
                message: format!("interval upper bound {t2} below lower bound {t1}"),
            });
        }
        self.expect(Tok::LParen, "\"(\"")?;
        let sub = Box::new(self.formula()?);
        self.expect(Tok::RParen, "\")\"")?;
        Ok(if always {
            StlFormula::Always { t1, t2, sub }
        } else {
            StlFormula::Eventually { t1, t2, sub }
        })
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.bump() {
            Some(Tok::Number(n)) => Ok(if neg { -n } else { n }),
            _ => {
                self.pos -= 1;
                self.err("expected a number")
            }
        }
    }

    fn predicate(&mut self) -> Result<StlFormula> {
        let start = self.here();
        let mut constant = 0.0;
        let mut channel: Option<(String, f64)> = None; // name, summed coefficient
        let mut abs_term: Option<(String, f64, f64)> = None; // name, inner offset, sign
        let mut sign = 1.0;
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            sign = -1.0;
        }
        loop {
            let term_pos = self.here();
            match self.bump() {
                Some(Tok::Number(n)) => constant += sign * n,
                Some(Tok::Ident(name)) if name == "abs" => {
                    self.expect(Tok::LParen, "\"(\" after abs")?;
                    let ch = match self.bump() {
                        Some(Tok::Ident(ch)) => ch,
                        _ => {
                            self.pos -= 1;
                            return self.err("expected a channel name inside abs");
                        }
                    };
                    let b = if self.peek() == Some(&Tok::Minus) {
                        self.pos += 1;
                        match self.bump() {
                            Some(Tok::Number(n)) => n,
                            _ => {
                                self.pos -= 1;
                                return self.err("expected a number after \"-\" inside abs");
                            }
                        }
                    } else {
                        0.0
                    };
                    self.expect(Tok::RParen, "\")\" to close abs")?;
                    if abs_term.is_some() {
                        return Err(Error::Parse {
                            pos: term_pos,
                            message: "at most one abs term per predicate".into(),
                        });
                    }
                    abs_term = Some((ch, b, sign));
                }
                Some(Tok::Ident(name)) => match &mut channel {
                    Some((n, coeff)) if *n == name => *coeff += sign,
                    Some(_) => {
                        return Err(Error::Parse {
                            pos: term_pos,
                            message: "predicate must reference exactly one channel".into(),
                        })
                    }
                    None => channel = Some((name, sign)),
                },
                _ => {
                    self.pos -= 1;
                    return self.err("expected a number, channel, or abs term");
                }
            }
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    sign = 1.0;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    sign = -1.0;
                }
                _ => break,
            }
        }
        self.expect(Tok::Ge, "\">=\"")?;
        let rhs = self.signed_number()?;
        constant -= rhs;

        if let Some((ch, b, abs_sign)) = abs_term {
            if abs_sign > 0.0 {
                return Err(Error::Parse {
                    pos: start,
                    message: "abs term must be subtracted: use the form c - abs(s - b)".into(),
                });
            }
            if channel.is_some() {
                return Err(Error::Parse {
                    pos: start,
                    message: "abs predicate cannot mix in bare channel terms".into(),
                });
            }
            // c - |s - b| >= 0  <=>  ((c + b) - s >= 0) and (s + (c - b) >= 0)
            let left = StlFormula::Pred(Predicate {
                channel: ch.clone(),
                coeff: -1.0,
                offset: constant + b,
            });
            let right = StlFormula::Pred(Predicate {
                channel: ch,
                coeff: 1.0,
                offset: constant - b,
            });
            return Ok(StlFormula::And(Box::new(left), Box::new(right)));
        }

        match channel {
            Some((ch, coeff)) if coeff == 1.0 || coeff == -1.0 => {
                Ok(StlFormula::Pred(Predicate {
                    channel: ch,
                    coeff,
                    offset: constant,
                }))
            }
            Some((ch, coeff)) => Err(Error::Parse {
                pos: start,
                message: format!("channel {ch:?} must have coefficient +1 or -1, got {coeff}"),
            }),
            None => Err(Error::Parse {
                pos: start,
                message: "predicate references no channel".into(),
            }),
        }
    }
}

/// Parses a formula, consuming the whole string.
pub fn parse(text: &str) -> Result<StlFormula> {
    let lexer = lex(text)?;
    let mut p = Parser {
        toks: lexer.toks,
        pos: 0,
        end: lexer.end,
    };
    if p.peek().is_none() {
        return p.err("empty formula");
    }
    let f = p.formula()?;
    if p.peek().is_some() {
        return p.err("trailing input after formula");
    }
    Ok(f)
}

/// Canonical text form. `parse(to_text(f)) == f` for any formula produced
/// by [`parse`].
pub fn to_text(formula: &StlFormula) -> String {
    match formula {
        StlFormula::Pred(p) => {
            if p.coeff > 0.0 {
                if p.offset == 0.0 {
                    format!("{} >= 0", p.channel)
                } else if p.offset < 0.0 {
                    format!("{} - {} >= 0", p.channel, fmt_num(-p.offset))
                } else {
                    format!("{} + {} >= 0", p.channel, fmt_num(p.offset))
                }
            } else {
                format!("{} - {} >= 0", fmt_num(p.offset), p.channel)
            }
        }
        StlFormula::Not(sub) => format!("not ({})", to_text(sub)),
        StlFormula::And(a, b) => format!("({}) and ({})", to_text(a), to_text(b)),
        StlFormula::Or(a, b) => format!("({}) or ({})", to_text(a), to_text(b)),
        StlFormula::Always { t1, t2, sub } => {
            format!("G[{},{}]({})", fmt_num(*t1), fmt_num(*t2), to_text(sub))
        }
        StlFormula::Eventually { t1, t2, sub } => {
            format!("F[{},{}]({})", fmt_num(*t1), fmt_num(*t2), to_text(sub))
        }
    }
}

fn fmt_num(x: f64) -> String {
    // negative numbers print with an explicit leading minus, which the
    // lexer reads back as Minus + Number
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bound_formula() {
        let f = parse("G[0,40](1 - abs(e1 - 0) >= 0)").unwrap();
        match &f {
            StlFormula::Always { t1, t2, sub } => {
                assert_eq!((*t1, *t2), (0.0, 40.0));
                match sub.as_ref() {
                    StlFormula::And(a, b) => {
                        assert_eq!(
                            a.as_ref(),
                            &StlFormula::Pred(Predicate {
                                channel: "e1".into(),
                                coeff: -1.0,
                                offset: 1.0
                            })
                        );
                        assert_eq!(
                            b.as_ref(),
                            &StlFormula::Pred(Predicate {
                                channel: "e1".into(),
                                coeff: 1.0,
                                offset: 1.0
                            })
                        );
                    }
                    other => panic!("abs did not expand: {other:?}"),
                }
            }
            other => panic!("unexpected parse {other:?}"),
        }
    }

    #[test]
    fn parses_reach_formula_pair() {
        let f = parse("(F[2,3](x1 - 0.7 >= 0)) and (F[2,3](1.3 - x1 >= 0))").unwrap();
        match f {
            StlFormula::And(a, b) => {
                assert!(matches!(*a, StlFormula::Eventually { t1, t2, .. } if t1 == 2.0 && t2 == 3.0));
                match *b {
                    StlFormula::Eventually { sub, .. } => assert_eq!(
                        *sub,
                        StlFormula::Pred(Predicate {
                            channel: "x1".into(),
                            coeff: -1.0,
                            offset: 1.3
                        })
                    ),
                    other => panic!("{other:?}"),
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parses_negative_offsets() {
        let f = parse("G[22.4,22.6](-1.2 - x1 >= 0)").unwrap();
        match f {
            StlFormula::Always { sub, .. } => assert_eq!(
                *sub,
                StlFormula::Pred(Predicate {
                    channel: "x1".into(),
                    coeff: -1.0,
                    offset: -1.2
                })
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn folds_nonzero_comparison_bound() {
        assert_eq!(parse("x1 >= 0.5").unwrap(), parse("x1 - 0.5 >= 0").unwrap());
        assert_eq!(parse("x1 >= -2").unwrap(), parse("x1 + 2 >= 0").unwrap());
    }

    #[test]
    fn not_or_and_precedence() {
        // or binds loosest, and tighter, not tightest
        let f = parse("not x >= 0 and y >= 0 or z >= 0").unwrap();
        match f {
            StlFormula::Or(lhs, _) => match *lhs {
                StlFormula::And(l, _) => assert!(matches!(*l, StlFormula::Not(_))),
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn channel_named_like_operator_keywords() {
        // G without a bracket is an ordinary channel name
        let f = parse("G >= 0").unwrap();
        assert!(matches!(f, StlFormula::Pred(p) if p.channel == "G"));
    }

    #[test]
    fn error_positions_point_at_the_problem() {
        match parse("G[3,1](x >= 0)") {
            Err(Error::Parse { pos, message }) => {
                assert_eq!(pos, 4);
                assert!(message.contains("upper bound"));
            }
            other => panic!("{other:?}"),
        }
        match parse("x >= 0 garbage") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        match parse("x + y >= 0") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("one channel")),
            other => panic!("{other:?}"),
        }
        match parse("x + x >= 0") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("+1 or -1")),
            other => panic!("{other:?}"),
        }
        match parse("abs(x) - 1 >= 0") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("subtracted")),
            other => panic!("{other:?}"),
        }
        match parse("1 - 2 >= 0") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("no channel")),
            other => panic!("{other:?}"),
        }
        assert!(parse("").is_err());
        assert!(parse("G[0,5](x >= 0").is_err());
    }

    #[test]
    fn print_parse_round_trip() {
        let texts = [
            "G[0,40](1 - abs(e1 - 0) >= 0)",
            "(F[2,3](x1 - 0.7 >= 0)) and (F[2,3](1.3 - x1 >= 0))",
            "G[22.4,22.6](-1.2 - x1 >= 0)",
            "not ((x >= 0) or (G[1,2](y - 3 >= 0)))",
            "F[0,50](G[0.5,1.5](35 - abs(x - 0) >= 0))",
            "((a >= 0) and (b >= 0)) and (c >= 0)",
        ];
        for text in texts {
            let f = parse(text).unwrap();
            let printed = to_text(&f);
            let reparsed = parse(&printed)
                .unwrap_or_else(|e| panic!("reparse of {printed:?} failed: {e}"));
            assert_eq!(f, reparsed, "round trip changed {text:?} -> {printed:?}");
            assert_eq!(printed, to_text(&reparsed));
        }
    }
}
