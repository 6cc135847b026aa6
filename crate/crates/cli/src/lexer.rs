//! Tokenizer for the surface language.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    TypeLit(u32),
    Nat(u64),
    Dec(u64, u32),
    Unknown(Option<u32>),
    Lambda,
    Dot,
    Colon,
    DoubleColon,
    Arrow,
    FatArrow,
    EqIn,     // ~=[  (or ≅[)
    LParen,
    RParen,
    LBrace,
    RBrace,
    RBracket,
    Pipe,
    KwData,
    KwWhere,
    KwIf,
    KwThen,
    KwElse,
    KwInd,
    KwRefl,
    KwSubst,
    KwBool,
    KwTrue,
    KwFalse,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) => write!(f, "{s}"),
            Tok::TypeLit(l) => write!(f, "Type{l}"),
            Tok::Nat(n) => write!(f, "{n}"),
            Tok::Dec(m, s) => write!(f, "{m}e-{s}"),
            Tok::Unknown(None) => write!(f, "?"),
            Tok::Unknown(Some(l)) => write!(f, "?{l}"),
            Tok::Lambda => write!(f, "\\"),
            Tok::Dot => write!(f, "."),
            Tok::Colon => write!(f, ":"),
            Tok::DoubleColon => write!(f, "::"),
            Tok::Arrow => write!(f, "->"),
            Tok::FatArrow => write!(f, "=>"),
            Tok::EqIn => write!(f, "~=["),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::RBracket => write!(f, "]"),
            Tok::Pipe => write!(f, "|"),
            Tok::KwData => write!(f, "data"),
            Tok::KwWhere => write!(f, "where"),
            Tok::KwIf => write!(f, "if"),
            Tok::KwThen => write!(f, "then"),
            Tok::KwElse => write!(f, "else"),
            Tok::KwInd => write!(f, "ind"),
            Tok::KwRefl => write!(f, "refl"),
            Tok::KwSubst => write!(f, "subst"),
            Tok::KwBool => write!(f, "Bool"),
            Tok::KwTrue => write!(f, "true"),
            Tok::KwFalse => write!(f, "false"),
            Tok::Eof => write!(f, "<eof>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexError {
    pub msg: String,
    pub at: usize,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    let n = bytes.len();
    while i < n {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '-' if src[i..].starts_with("--") => {
                while i < n && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '-' if src[i..].starts_with("->") => {
                i += 2;
                out.push(Token {
                    tok: Tok::Arrow,
                    start,
                    end: i,
                });
            }
            '\\' => {
                i += 1;
                out.push(Token {
                    tok: Tok::Lambda,
                    start,
                    end: i,
                });
            }
            'λ' => {
                i += c.len_utf8();
                out.push(Token {
                    tok: Tok::Lambda,
                    start,
                    end: i,
                });
            }
            '→' => {
                i += c.len_utf8();
                out.push(Token {
                    tok: Tok::Arrow,
                    start,
                    end: i,
                });
            }
            '.' => {
                i += 1;
                out.push(Token {
                    tok: Tok::Dot,
                    start,
                    end: i,
                });
            }
            ':' if src[i..].starts_with("::") => {
                i += 2;
                out.push(Token {
                    tok: Tok::DoubleColon,
                    start,
                    end: i,
                });
            }
            ':' => {
                i += 1;
                out.push(Token {
                    tok: Tok::Colon,
                    start,
                    end: i,
                });
            }
            '=' if src[i..].starts_with("=>") => {
                i += 2;
                out.push(Token {
                    tok: Tok::FatArrow,
                    start,
                    end: i,
                });
            }
            '~' if src[i..].starts_with("~=[") => {
                i += 3;
                out.push(Token {
                    tok: Tok::EqIn,
                    start,
                    end: i,
                });
            }
            '≅' => {
                let rest = &src[i + c.len_utf8()..];
                if rest.starts_with('[') {
                    i += c.len_utf8() + 1;
                    out.push(Token {
                        tok: Tok::EqIn,
                        start,
                        end: i,
                    });
                } else {
                    return Err(LexError {
                        msg: "expected `[` after ≅".into(),
                        at: i,
                    });
                }
            }
            ']' => {
                i += 1;
                out.push(Token {
                    tok: Tok::RBracket,
                    start,
                    end: i,
                });
            }
            '(' => {
                i += 1;
                out.push(Token {
                    tok: Tok::LParen,
                    start,
                    end: i,
                });
            }
            ')' => {
                i += 1;
                out.push(Token {
                    tok: Tok::RParen,
                    start,
                    end: i,
                });
            }
            '{' => {
                i += 1;
                out.push(Token {
                    tok: Tok::LBrace,
                    start,
                    end: i,
                });
            }
            '}' => {
                i += 1;
                out.push(Token {
                    tok: Tok::RBrace,
                    start,
                    end: i,
                });
            }
            '|' => {
                i += 1;
                out.push(Token {
                    tok: Tok::Pipe,
                    start,
                    end: i,
                });
            }
            '=' => {
                i += 1;
                out.push(Token {
                    tok: Tok::Name("=".into()),
                    start,
                    end: i,
                });
            }
            '?' => {
                i += 1;
                let mut digits = String::new();
                while i < n && bytes[i].is_ascii_digit() {
                    digits.push(bytes[i] as char);
                    i += 1;
                }
                let lvl = if digits.is_empty() {
                    None
                } else {
                    Some(digits.parse().map_err(|_| LexError {
                        msg: "level out of range".into(),
                        at: start,
                    })?)
                };
                out.push(Token {
                    tok: Tok::Unknown(lvl),
                    start,
                    end: i,
                });
            }
            '0'..='9' => {
                let mut digits = String::new();
                while i < n && bytes[i].is_ascii_digit() {
                    digits.push(bytes[i] as char);
                    i += 1;
                }
                if i < n && bytes[i] == b'.' && i + 1 < n && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    let mut frac = String::new();
                    while i < n && bytes[i].is_ascii_digit() {
                        frac.push(bytes[i] as char);
                        i += 1;
                    }
                    let mantissa: u64 =
                        format!("{digits}{frac}").parse().map_err(|_| LexError {
                            msg: "decimal literal out of range".into(),
                            at: start,
                        })?;
                    out.push(Token {
                        tok: Tok::Dec(mantissa, frac.len() as u32),
                        start,
                        end: i,
                    });
                } else {
                    out.push(Token {
                        tok: Tok::Nat(digits.parse().map_err(|_| LexError {
                            msg: "numeral out of range".into(),
                            at: start,
                        })?),
                        start,
                        end: i,
                    });
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < n {
                    let ch = src[j..].chars().next().unwrap();
                    if ch.is_alphanumeric() || ch == '_' || ch == '\'' {
                        j += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                let word = &src[i..j];
                i = j;
                let tok = match word {
                    "data" => Tok::KwData,
                    "where" => Tok::KwWhere,
                    "if" => Tok::KwIf,
                    "then" => Tok::KwThen,
                    "else" => Tok::KwElse,
                    "ind" => Tok::KwInd,
                    "refl" => Tok::KwRefl,
                    "subst" => Tok::KwSubst,
                    "Bool" => Tok::KwBool,
                    "true" => Tok::KwTrue,
                    "false" => Tok::KwFalse,
                    w if w.starts_with("Type")
                        && (w.len() == 4 || w[4..].chars().all(|c| c.is_ascii_digit())) =>
                    {
                        if w.len() == 4 {
                            Tok::TypeLit(0)
                        } else {
                            Tok::TypeLit(w[4..].parse().map_err(|_| LexError {
                                msg: "universe level out of range".into(),
                                at: start,
                            })?)
                        }
                    }
                    w => Tok::Name(w.to_string()),
                };
                out.push(Token {
                    tok,
                    start,
                    end: i,
                });
            }
            other => {
                return Err(LexError {
                    msg: format!("unexpected character {other:?}"),
                    at: i,
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        start: n,
        end: n,
    });
    Ok(out)
}
