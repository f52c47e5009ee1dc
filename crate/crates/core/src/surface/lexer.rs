use super::{Span, SurfaceError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Prime,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    And,
    Or,
    Not,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Colon,
    Comma,
    DotDot,
    Semi,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Prime => "'",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Not => "!",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::DotDot => "..",
            Tok::Semi => ";",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits source text into tokens. Accepts both the mathematical symbols
/// (`∧ ∨ ¬ ≠ ≤ ≥ −`) and their ASCII spellings; `//` starts a comment.
pub fn tokenize(text: &str) -> Result<Vec<Token>, SurfaceError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        let next = chars.get(i + 1).copied();
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '/' && next == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                span,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let digits: String = chars[start..i].iter().collect();
            let value = digits.parse().map_err(|_| SurfaceError::Syntax {
                span,
                message: format!("integer literal {digits} is too large"),
            })?;
            out.push(Token { tok: Tok::Int(value), span });
            continue;
        }
        let (tok, width) = match (c, next) {
            ('!', Some('=')) => (Tok::Ne, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('.', Some('.')) => (Tok::DotDot, 2),
            ('&', Some('&')) => (Tok::And, 2),
            ('|', Some('|')) => (Tok::Or, 2),
            ('\'', _) => (Tok::Prime, 1),
            ('=', _) => (Tok::Eq, 1),
            ('≠', _) => (Tok::Ne, 1),
            ('<', _) => (Tok::Lt, 1),
            ('≤', _) => (Tok::Le, 1),
            ('>', _) => (Tok::Gt, 1),
            ('≥', _) => (Tok::Ge, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-' | '−', _) => (Tok::Minus, 1),
            ('&' | '∧', _) => (Tok::And, 1),
            ('|' | '∨', _) => (Tok::Or, 1),
            ('!' | '¬', _) => (Tok::Not, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (':', _) => (Tok::Colon, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            _ => {
                return Err(SurfaceError::Syntax {
                    span,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        advance(width, &mut i, &mut col);
        out.push(Token { tok, span });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, column: col },
    });
    Ok(out)
}
