use std::fmt;

use super::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keyword {
    If,
    Then,
    Else,
    While,
    Do,
    Either,
    Or,
    Observe,
    ObserveJ,
    ObserveL,
    Skip,
    Rank,
    Inf,
    AnyOf,
    Xor,
    Band,
    Bor,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        Some(match word {
            "if" => Keyword::If,
            "then" => Keyword::Then,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "do" => Keyword::Do,
            "either" => Keyword::Either,
            "or" => Keyword::Or,
            "observe" => Keyword::Observe,
            "observeJ" => Keyword::ObserveJ,
            "observeL" => Keyword::ObserveL,
            "skip" => Keyword::Skip,
            "rank" => Keyword::Rank,
            "inf" => Keyword::Inf,
            "any_of" => Keyword::AnyOf,
            "xor" => Keyword::Xor,
            "band" => Keyword::Band,
            "bor" => Keyword::Bor,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    Symbol(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword {k:?}"),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Int(n) => write!(f, "integer {n}"),
            TokenKind::Symbol(s) => write!(f, "`{s}`"),
        }
    }
}

// Longest first, so `:=` wins over `:` and `<=` over `<`.
const SYMBOLS: &[&str] = &[
    ":=", "==", "!=", "<=", ">=", "||", "&&", "..", "<", ">", "!", "+", "-", "*", "/", "%", "(",
    ")", "{", "}", "[", "]", ";", ",",
];

/// Splits source text into tokens, dropping whitespace and `//` comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<i64>().map_err(|_| {
                ParseError::new(
                    format!("integer literal `{text}` out of range"),
                    start_line,
                    start_col,
                )
            })?;
            col += (i - start) as u32;
            tokens.push(Token {
                kind: TokenKind::Int(value),
                text,
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let kind = match Keyword::lookup(&text) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(text.clone()),
            };
            tokens.push(Token {
                kind,
                text,
                line: start_line,
                column: start_col,
            });
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            s.chars()
                .enumerate()
                .all(|(k, sc)| chars.get(i + k) == Some(&sc))
        });
        match sym {
            Some(s) => {
                let n = s.chars().count();
                i += n;
                col += n as u32;
                tokens.push(Token {
                    kind: TokenKind::Symbol(s),
                    text: s.to_string(),
                    line: start_line,
                    column: start_col,
                });
            }
            None => {
                return Err(ParseError::new(
                    format!("unexpected character `{c}`"),
                    start_line,
                    start_col,
                ))
            }
        }
    }
    Ok(tokens)
}
