//! Reader for the lexicon text format:
//!
//! ```text
//! % comment to end of line
//! a the: D+;
//! cat snake: D- & (S+ or O-);
//! ```
//!
//! `or` binds looser than `&`. A statement without a colon is accepted when
//! its leading words cannot be mistaken for the expression (`chased S- & O+;`).

use super::{validate_label, validate_word, Connector, DisjunctExpr, Lexicon, LexiconEntry};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Colon,
    Semi,
    LParen,
    RParen,
    Amp,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Vec<Spanned> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("");
        let chars: Vec<(usize, char)> = line.chars().enumerate().collect();
        let mut i = 0;
        while i < chars.len() {
            let (col, c) = chars[i];
            let at = |tok| Spanned {
                tok,
                line: lineno + 1,
                column: col + 1,
            };
            match c {
                c if c.is_whitespace() => i += 1,
                ':' => {
                    out.push(at(Tok::Colon));
                    i += 1;
                }
                ';' => {
                    out.push(at(Tok::Semi));
                    i += 1;
                }
                '(' => {
                    out.push(at(Tok::LParen));
                    i += 1;
                }
                ')' => {
                    out.push(at(Tok::RParen));
                    i += 1;
                }
                '&' => {
                    out.push(at(Tok::Amp));
                    i += 1;
                }
                _ => {
                    let start = i;
                    while i < chars.len() && !is_break(chars[i].1) {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().map(|(_, c)| c).collect();
                    out.push(at(Tok::Word(word)));
                }
            }
        }
    }
    out
}

fn is_break(c: char) -> bool {
    c.is_whitespace() || matches!(c, ':' | ';' | '(' | ')' | '&')
}

fn looks_like_connector(w: &str) -> bool {
    w.len() > 1 && (w.ends_with('+') || w.ends_with('-'))
}

/// Parses lexicon source text into a [`Lexicon`], one entry per statement.
pub fn parse_lexicon(text: &str) -> Result<Lexicon> {
    let toks = tokenize(text);
    let mut entries = Vec::new();
    let mut start = 0;
    while start < toks.len() {
        let end = match toks[start..].iter().position(|t| t.tok == Tok::Semi) {
            Some(off) => start + off,
            None => {
                let last = toks.last().unwrap();
                return Err(syntax(last.line, last.column, "statement is missing `;`"));
            }
        };
        entries.push(parse_statement(&toks[start..end], &toks[end])?);
        start = end + 1;
    }
    Ok(Lexicon::new(entries))
}

fn parse_statement(toks: &[Spanned], semi: &Spanned) -> Result<LexiconEntry> {
    if toks.is_empty() {
        return Err(syntax(semi.line, semi.column, "empty statement"));
    }
    let split = match toks.iter().position(|t| t.tok == Tok::Colon) {
        Some(colon) => {
            if let Some(extra) = toks[colon + 1..].iter().find(|t| t.tok == Tok::Colon) {
                return Err(syntax(extra.line, extra.column, "unexpected `:`"));
            }
            (colon, colon + 1)
        }
        None => {
            let n = toks
                .iter()
                .take_while(
                    |t| matches!(&t.tok, Tok::Word(w) if !looks_like_connector(w) && w != "or"),
                )
                .count();
            (n, n)
        }
    };
    let (head, body) = (&toks[..split.0], &toks[split.1..]);
    if head.is_empty() {
        return Err(syntax(
            toks[0].line,
            toks[0].column,
            "statement has no words",
        ));
    }
    let mut terms: Vec<String> = Vec::new();
    for t in head {
        match &t.tok {
            Tok::Word(w) => {
                validate_word(w).map_err(|m| syntax(t.line, t.column, m))?;
                if terms.contains(w) {
                    return Err(syntax(
                        t.line,
                        t.column,
                        format!("duplicate word `{w}` in one entry"),
                    ));
                }
                terms.push(w.clone());
            }
            other => {
                return Err(syntax(
                    t.line,
                    t.column,
                    format!("unexpected {other:?} before `:`"),
                ))
            }
        }
    }
    let mut p = ExprParser {
        toks: body,
        pos: 0,
        end: semi,
    };
    let expr = p.or_expr()?;
    if let Some(t) = p.peek() {
        return Err(syntax(
            t.line,
            t.column,
            "unexpected token after expression",
        ));
    }
    LexiconEntry::new(terms, expr).map_err(|e| syntax(toks[0].line, toks[0].column, e.to_string()))
}

/// Parses a bare expression such as `D- & (S+ or O-)`.
pub(crate) fn parse_expr(text: &str) -> Result<DisjunctExpr> {
    let toks = tokenize(text);
    let end = Spanned {
        tok: Tok::Semi,
        line: 1,
        column: text.chars().count() + 1,
    };
    let mut p = ExprParser {
        toks: &toks,
        pos: 0,
        end: &end,
    };
    let expr = p.or_expr()?;
    if let Some(t) = p.peek() {
        return Err(syntax(
            t.line,
            t.column,
            "unexpected token after expression",
        ));
    }
    Ok(expr)
}

struct ExprParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    end: &'a Spanned,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> &Spanned {
        self.peek().unwrap_or(self.end)
    }

    fn or_expr(&mut self) -> Result<DisjunctExpr> {
        let mut children = vec![self.and_expr()?];
        while matches!(self.peek(), Some(Spanned { tok: Tok::Word(w), .. }) if w == "or") {
            self.pos += 1;
            children.push(self.and_expr()?);
        }
        Ok(DisjunctExpr::or(children))
    }

    fn and_expr(&mut self) -> Result<DisjunctExpr> {
        let mut children = vec![self.atom()?];
        while matches!(self.peek(), Some(Spanned { tok: Tok::Amp, .. })) {
            self.pos += 1;
            children.push(self.atom()?);
        }
        Ok(DisjunctExpr::and(children))
    }

    fn atom(&mut self) -> Result<DisjunctExpr> {
        let t = self.here().clone();
        match &t.tok {
            Tok::LParen => {
                self.pos += 1;
                let inner = self.or_expr()?;
                match self.peek() {
                    Some(Spanned {
                        tok: Tok::RParen, ..
                    }) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => {
                        let h = self.here();
                        Err(syntax(h.line, h.column, "expected `)`"))
                    }
                }
            }
            Tok::Word(w) if w != "or" => {
                self.pos += 1;
                let direction = match w.chars().last() {
                    Some('+') => super::Direction::Right,
                    Some('-') => super::Direction::Left,
                    _ => {
                        return Err(syntax(
                            t.line,
                            t.column,
                            format!("connector `{w}` must end in `+` or `-`"),
                        ))
                    }
                };
                let label = &w[..w.len() - 1];
                validate_label(label).map_err(|m| syntax(t.line, t.column, m))?;
                Ok(DisjunctExpr::leaf(Connector {
                    label: label.to_string(),
                    direction,
                }))
            }
            _ => Err(syntax(t.line, t.column, "expected connector or `(`")),
        }
    }
}
