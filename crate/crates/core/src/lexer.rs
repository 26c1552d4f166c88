//! Tokenizer shared by the polynomial and formula parsers.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

const SYMBOLS: [&str; 22] = [
    "<=", ">=", "==", "!=", "+=", "-=", "&&", "||", "<", ">", "=", "(", ")", "[", "]", ",", "+",
    "-", "*", "/", "^", "!",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, Error> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.')
            {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit())
        {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token {
                tok: Tok::Num(src[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        let rest = &src[i..];
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                let sym = match *s {
                    "&&" => "&",
                    "||" => "|",
                    "==" => "=",
                    other => other,
                };
                out.push(Token {
                    tok: Tok::Sym(sym),
                    pos: i,
                });
                i += s.len();
            }
            None if c == b'&' || c == b'|' => {
                out.push(Token {
                    tok: Tok::Sym(if c == b'&' { "&" } else { "|" }),
                    pos: i,
                });
                i += 1;
            }
            None => {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{}`", rest.chars().next().unwrap()),
                })
            }
        }
    }
    Ok(out)
}

/// Cursor over a token stream with backtracking.
pub(crate) struct Cursor {
    toks: Vec<Token>,
    pub pos: usize,
    end: usize,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Self, Error> {
        let toks = tokenize(src)?;
        Ok(Cursor {
            toks,
            pos: 0,
            end: src.len(),
        })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    pub fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.pos)
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), Error> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    pub fn error(&self, msg: String) -> Error {
        let found = match self.peek() {
            Some(Tok::Ident(s)) | Some(Tok::Num(s)) => format!(", found `{s}`"),
            Some(Tok::Sym(s)) => format!(", found `{s}`"),
            None => ", found end of input".to_string(),
        };
        Error::Syntax {
            pos: self.offset(),
            msg: format!("{msg}{found}"),
        }
    }
}
