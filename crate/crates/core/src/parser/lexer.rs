use std::fmt;

use crate::ast::Span;
use crate::diagnostics::{codes, Diagnostic};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keyword {
    Class,
    Usage,
    Where,
    Lin,
    Un,
    End,
    Sync,
    Spawn,
    New,
    If,
    Else,
    While,
    True,
    False,
    Unit,
    Print,
    This,
    Boolean,
    Int,
    String,
    Mu,
}

impl Keyword {
    fn from_str(s: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match s {
            "class" => Class,
            "usage" => Usage,
            "where" => Where,
            "lin" => Lin,
            "un" => Un,
            "end" => End,
            "sync" => Sync,
            "spawn" => Spawn,
            "new" => New,
            "if" => If,
            "else" => Else,
            "while" => While,
            "true" => True,
            "false" => False,
            "unit" => Unit,
            "print" => Print,
            "this" => This,
            "boolean" => Boolean,
            "int" => Int,
            "string" => String,
            "mu" => Mu,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Class => "class",
            Usage => "usage",
            Where => "where",
            Lin => "lin",
            Un => "un",
            End => "end",
            Sync => "sync",
            Spawn => "spawn",
            New => "new",
            If => "if",
            Else => "else",
            While => "while",
            True => "true",
            False => "false",
            Unit => "unit",
            Print => "print",
            This => "this",
            Boolean => "boolean",
            Int => "int",
            String => "string",
            Mu => "mu",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Kw(Keyword),
    Semi,
    Plus,
    Minus,
    Star,
    /// `«`, or `<` as its ASCII spelling.
    VariantOpen,
    /// `»`, or `>` as its ASCII spelling.
    VariantClose,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Dot,
    Assign,
    EqEq,
    Le,
    Ge,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Kw(k) => write!(f, "`{}`", k.as_str()),
            Tok::Eof => f.write_str("end of input"),
            other => {
                let s = match other {
                    Tok::Semi => ";",
                    Tok::Plus => "+",
                    Tok::Minus => "-",
                    Tok::Star => "*",
                    Tok::VariantOpen => "«",
                    Tok::VariantClose => "»",
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::LBracket => "[",
                    Tok::RBracket => "]",
                    Tok::Dot => ".",
                    Tok::Assign => "=",
                    Tok::EqEq => "==",
                    Tok::Le => "<=",
                    Tok::Ge => ">=",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::Comma => ",",
                    _ => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    errors: Vec<Diagnostic>,
}

impl Lexer<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn push(&mut self, tok: Tok, start: (u32, u32)) {
        // end column is inclusive of the last character
        let span = Span::new(
            start.0,
            start.1,
            self.line,
            self.col.saturating_sub(1).max(1),
        );
        self.tokens.push(Token { tok, span });
    }

    fn error(&mut self, start: (u32, u32), msg: String) {
        let span = Span::new(start.0, start.1, self.line, self.col);
        self.errors.push(Diagnostic::error(codes::LEX, span, msg));
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let start = self.here();
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' => {
                    self.bump();
                    match self.peek() {
                        Some('/') => {
                            while let Some(c) = self.peek() {
                                if c == '\n' {
                                    break;
                                }
                                self.bump();
                            }
                        }
                        Some('*') => {
                            self.bump();
                            let mut closed = false;
                            while let Some(c) = self.bump() {
                                if c == '*' && self.peek() == Some('/') {
                                    self.bump();
                                    closed = true;
                                    break;
                                }
                            }
                            if !closed {
                                self.error(start, "unterminated block comment".into());
                            }
                        }
                        _ => self.error(start, "unexpected character `/`".into()),
                    }
                }
                '"' => self.string(start),
                c if c.is_ascii_digit() => {
                    let mut text = String::new();
                    while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                        text.push(d);
                        self.bump();
                    }
                    match text.parse::<i64>() {
                        Ok(n) => self.push(Tok::Int(n), start),
                        Err(_) => {
                            self.error(start, format!("integer literal `{text}` is too large"))
                        }
                    }
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut text = String::new();
                    while let Some(d) = self.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                        text.push(d);
                        self.bump();
                    }
                    let tok = match Keyword::from_str(&text) {
                        Some(k) => Tok::Kw(k),
                        None => Tok::Ident(text),
                    };
                    self.push(tok, start);
                }
                _ => {
                    self.bump();
                    let tok = match c {
                        ';' => Tok::Semi,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '«' => Tok::VariantOpen,
                        '»' => Tok::VariantClose,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        '.' => Tok::Dot,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '=' if self.peek() == Some('=') => {
                            self.bump();
                            Tok::EqEq
                        }
                        '=' => Tok::Assign,
                        '<' if self.peek() == Some('=') => {
                            self.bump();
                            Tok::Le
                        }
                        '<' => Tok::VariantOpen,
                        '>' if self.peek() == Some('=') => {
                            self.bump();
                            Tok::Ge
                        }
                        '>' => Tok::VariantClose,
                        other => {
                            self.error(start, format!("unexpected character `{other}`"));
                            continue;
                        }
                    };
                    self.push(tok, start);
                }
            }
        }
        let end = self.here();
        self.tokens.push(Token {
            tok: Tok::Eof,
            span: Span::new(end.0, end.1, end.0, end.1),
        });
    }

    fn string(&mut self, start: (u32, u32)) {
        self.bump();
        let mut text = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    self.error(start, "unterminated string literal".into());
                    return;
                }
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('n') => text.push('\n'),
                    Some('t') => text.push('\t'),
                    Some('"') => text.push('"'),
                    Some('\\') => text.push('\\'),
                    Some(other) => {
                        self.error(start, format!("unknown escape `\\{other}`"));
                    }
                    None => {
                        self.error(start, "unterminated string literal".into());
                        return;
                    }
                },
                Some(c) => text.push(c),
            }
        }
        self.push(Tok::Str(text), start);
    }
}

/// Splits source text into tokens. The stream always ends with `Eof`;
/// lexical errors are reported alongside whatever could be tokenized.
pub fn tokenize(source: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut lx = Lexer {
        chars: source.chars().peekable(),
        line: 1,
        col: 1,
        tokens: Vec::new(),
        errors: Vec::new(),
    };
    lx.run();
    (lx.tokens, lx.errors)
}
