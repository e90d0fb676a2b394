//! Tokenizer for scenario programs.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    New,
    At,
    On,
    Lane,
    Offset,
    By,
    Ahead,
    Of,
    Behind,
    Left,
    Right,
    Facing,
    Toward,
    With,
    Require,
    Param,
    Behavior,
    Take,
    Wait,
    Do,
    If,
    Else,
    While,
    Try,
    Interrupt,
    When,
    End,
    And,
    Or,
    Not,
    True,
    False,
    Action,
    World,
}

impl Keyword {
    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::New => "new",
            Keyword::At => "at",
            Keyword::On => "on",
            Keyword::Lane => "lane",
            Keyword::Offset => "offset",
            Keyword::By => "by",
            Keyword::Ahead => "ahead",
            Keyword::Of => "of",
            Keyword::Behind => "behind",
            Keyword::Left => "left",
            Keyword::Right => "right",
            Keyword::Facing => "facing",
            Keyword::Toward => "toward",
            Keyword::With => "with",
            Keyword::Require => "require",
            Keyword::Param => "param",
            Keyword::Behavior => "behavior",
            Keyword::Take => "take",
            Keyword::Wait => "wait",
            Keyword::Do => "do",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::Try => "try",
            Keyword::Interrupt => "interrupt",
            Keyword::When => "when",
            Keyword::End => "end",
            Keyword::And => "and",
            Keyword::Or => "or",
            Keyword::Not => "not",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::Action => "Action",
            Keyword::World => "world",
        }
    }

    fn lookup(word: &str) -> Option<Keyword> {
        const ALL: [Keyword; 33] = [
            Keyword::New,
            Keyword::At,
            Keyword::On,
            Keyword::Lane,
            Keyword::Offset,
            Keyword::By,
            Keyword::Ahead,
            Keyword::Of,
            Keyword::Behind,
            Keyword::Left,
            Keyword::Right,
            Keyword::Facing,
            Keyword::Toward,
            Keyword::With,
            Keyword::Require,
            Keyword::Param,
            Keyword::Behavior,
            Keyword::Take,
            Keyword::Wait,
            Keyword::Do,
            Keyword::If,
            Keyword::Else,
            Keyword::While,
            Keyword::Try,
            Keyword::Interrupt,
            Keyword::When,
            Keyword::End,
            Keyword::And,
            Keyword::Or,
            Keyword::Not,
            Keyword::True,
            Keyword::False,
            Keyword::Action,
        ];
        ALL.into_iter().find(|k| k.as_str() == word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Punct {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Assign,
    Colon,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Plus,
    Minus,
    Star,
    Slash,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        match self {
            Punct::LParen => "(",
            Punct::RParen => ")",
            Punct::LBracket => "[",
            Punct::RBracket => "]",
            Punct::Comma => ",",
            Punct::Assign => "=",
            Punct::Colon => ":",
            Punct::Lt => "<",
            Punct::Le => "<=",
            Punct::Gt => ">",
            Punct::Ge => ">=",
            Punct::EqEq => "==",
            Punct::Ne => "!=",
            Punct::Plus => "+",
            Punct::Minus => "-",
            Punct::Star => "*",
            Punct::Slash => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Number(f64),
    Str(String),
    Punct(Punct),
    Eof,
}

/// One lexeme with its 1-based source position.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{line}:{col}: {message}")]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: u32, col: u32, message: impl Into<String>) -> LexError {
        LexError {
            line,
            col,
            message: message.into(),
        }
    }
}

/// `world` is recognized as a keyword only in statement position; the parser
/// handles that, so the lexer treats it as a keyword outright. Comments run
/// from `#` to end of line.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        src: source.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();

    loop {
        // Skip whitespace and comments.
        loop {
            match lx.peek() {
                Some(b' ') | Some(b'\t') | Some(b'\r') | Some(b'\n') => {
                    lx.bump();
                }
                Some(b'#') => {
                    while let Some(c) = lx.peek() {
                        if c == b'\n' {
                            break;
                        }
                        lx.bump();
                    }
                }
                _ => break,
            }
        }

        let (line, col) = (lx.line, lx.col);
        let Some(c) = lx.peek() else {
            out.push(Token {
                kind: TokenKind::Eof,
                lexeme: String::new(),
                line,
                col,
            });
            return Ok(out);
        };

        match c {
            b'0'..=b'9' => {
                let start = lx.pos;
                while matches!(lx.peek(), Some(b'0'..=b'9')) {
                    lx.bump();
                }
                if lx.peek() == Some(b'.') && matches!(lx.peek2(), Some(b'0'..=b'9')) {
                    lx.bump();
                    while matches!(lx.peek(), Some(b'0'..=b'9')) {
                        lx.bump();
                    }
                }
                if matches!(lx.peek(), Some(b'e') | Some(b'E')) {
                    let mut ahead = lx.pos + 1;
                    if matches!(lx.src.get(ahead), Some(b'+') | Some(b'-')) {
                        ahead += 1;
                    }
                    if matches!(lx.src.get(ahead), Some(b'0'..=b'9')) {
                        lx.bump();
                        if matches!(lx.peek(), Some(b'+') | Some(b'-')) {
                            lx.bump();
                        }
                        while matches!(lx.peek(), Some(b'0'..=b'9')) {
                            lx.bump();
                        }
                    }
                }
                // A trailing '.', letter, or digit run means the literal is
                // malformed; report it at the token start.
                if matches!(lx.peek(), Some(b'.') | Some(b'a'..=b'z') | Some(b'A'..=b'Z') | Some(b'_'))
                {
                    return Err(lx.error(line, col, "malformed number literal"));
                }
                let text = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                let value: f64 = text
                    .parse()
                    .map_err(|_| lx.error(line, col, "malformed number literal"))?;
                if !value.is_finite() {
                    return Err(lx.error(line, col, "number literal out of range"));
                }
                out.push(Token {
                    kind: TokenKind::Number(value),
                    lexeme: text.to_string(),
                    line,
                    col,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = lx.pos;
                while matches!(lx.peek(), Some(b'a'..=b'z') | Some(b'A'..=b'Z') | Some(b'0'..=b'9') | Some(b'_'))
                {
                    lx.bump();
                }
                let word = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap().to_string();
                let kind = match Keyword::lookup(&word) {
                    Some(k) => TokenKind::Keyword(k),
                    None if word == "world" => TokenKind::Keyword(Keyword::World),
                    None => TokenKind::Ident,
                };
                out.push(Token {
                    kind,
                    lexeme: word,
                    line,
                    col,
                });
            }
            b'"' => {
                lx.bump();
                let start = lx.pos;
                loop {
                    match lx.peek() {
                        Some(b'"') => break,
                        Some(b'\n') | None => {
                            return Err(lx.error(line, col, "unterminated string literal"))
                        }
                        _ => {
                            lx.bump();
                        }
                    }
                }
                let text = std::str::from_utf8(&lx.src[start..lx.pos])
                    .map_err(|_| lx.error(line, col, "invalid UTF-8 in string literal"))?
                    .to_string();
                lx.bump(); // closing quote
                out.push(Token {
                    kind: TokenKind::Str(text.clone()),
                    lexeme: format!("\"{text}\""),
                    line,
                    col,
                });
            }
            _ => {
                let two = |p: Punct, lx: &mut Lexer| {
                    lx.bump();
                    lx.bump();
                    p
                };
                let one = |p: Punct, lx: &mut Lexer| {
                    lx.bump();
                    p
                };
                let punct = match (c, lx.peek2()) {
                    (b'<', Some(b'=')) => two(Punct::Le, &mut lx),
                    (b'>', Some(b'=')) => two(Punct::Ge, &mut lx),
                    (b'=', Some(b'=')) => two(Punct::EqEq, &mut lx),
                    (b'!', Some(b'=')) => two(Punct::Ne, &mut lx),
                    (b'(', _) => one(Punct::LParen, &mut lx),
                    (b')', _) => one(Punct::RParen, &mut lx),
                    (b'[', _) => one(Punct::LBracket, &mut lx),
                    (b']', _) => one(Punct::RBracket, &mut lx),
                    (b',', _) => one(Punct::Comma, &mut lx),
                    (b'=', _) => one(Punct::Assign, &mut lx),
                    (b':', _) => one(Punct::Colon, &mut lx),
                    (b'<', _) => one(Punct::Lt, &mut lx),
                    (b'>', _) => one(Punct::Gt, &mut lx),
                    (b'+', _) => one(Punct::Plus, &mut lx),
                    (b'-', _) => one(Punct::Minus, &mut lx),
                    (b'*', _) => one(Punct::Star, &mut lx),
                    (b'/', _) => one(Punct::Slash, &mut lx),
                    _ => {
                        return Err(lx.error(
                            line,
                            col,
                            format!("illegal character '{}'", c as char),
                        ))
                    }
                };
                out.push(Token {
                    kind: TokenKind::Punct(punct),
                    lexeme: punct.as_str().to_string(),
                    line,
                    col,
                });
            }
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "'{}'", k.as_str()),
            TokenKind::Ident => write!(f, "identifier"),
            TokenKind::Number(_) => write!(f, "number"),
            TokenKind::Str(_) => write!(f, "string"),
            TokenKind::Punct(p) => write!(f, "'{}'", p.as_str()),
            TokenKind::Eof => write!(f, "end of input"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn tokenizes_object_declaration() {
        let got = kinds("new Car at (1, 2)");
        assert_eq!(
            got,
            vec![
                TokenKind::Keyword(Keyword::New),
                TokenKind::Ident,
                TokenKind::Keyword(Keyword::At),
                TokenKind::Punct(Punct::LParen),
                TokenKind::Number(1.0),
                TokenKind::Punct(Punct::Comma),
                TokenKind::Number(2.0),
                TokenKind::Punct(Punct::RParen),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn empty_input_is_just_eof() {
        assert_eq!(kinds(""), vec![TokenKind::Eof]);
    }

    #[test]
    fn malformed_number_reports_token_start() {
        let err = tokenize("1.2.3").unwrap_err();
        assert_eq!((err.line, err.col), (1, 1));
    }

    #[test]
    fn comments_are_discarded() {
        let got = kinds("wait # trailing words ( ) 1.2.3\nwait");
        assert_eq!(
            got,
            vec![
                TokenKind::Keyword(Keyword::Wait),
                TokenKind::Keyword(Keyword::Wait),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("new\n  Car").unwrap();
        assert_eq!((toks[0].line, toks[0].col), (1, 1));
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }

    #[test]
    fn illegal_character_is_an_error() {
        let err = tokenize("new ^").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));
    }

    #[test]
    fn scientific_notation_and_decimals() {
        assert_eq!(kinds("1.5e3")[0], TokenKind::Number(1500.0));
        assert_eq!(kinds("2E-2")[0], TokenKind::Number(0.02));
        assert_eq!(kinds("0.25")[0], TokenKind::Number(0.25));
    }

    #[test]
    fn strings_capture_content() {
        let toks = tokenize("lane(\"main\")").unwrap();
        assert_eq!(toks[2].kind, TokenKind::Str("main".to_string()));
        assert!(tokenize("\"unterminated").is_err());
    }
}
