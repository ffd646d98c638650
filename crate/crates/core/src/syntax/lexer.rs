//! Go-style tokenizer with automatic semicolon insertion.

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Keyword(&'static str),
    Int(String),
    /// Float, imaginary, string and rune literals, kept verbatim.
    Lit(String),
    Punct(&'static str),
    /// An explicit `;` or one inserted at a line break.
    Semi,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

const KEYWORDS: &[&str] = &[
    "break", "case", "chan", "const", "continue", "default", "defer", "else", "fallthrough",
    "for", "func", "go", "goto", "if", "import", "interface", "map", "package", "range",
    "return", "select", "struct", "switch", "type", "var",
];

// Longest match first.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "&^=", "...", "&&", "||", "<-", "++", "--", "==", "!=", "<=", ">=", ":=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "&^", "+", "-", "*", "/", "%",
    "&", "|", "^", "<", ">", "=", "!", "(", ")", "[", "]", "{", "}", ",", ";", ".", ":", "~",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer { chars: src.chars().collect(), pos: 0, line: 1, column: 1, out: Vec::new() }.run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
    out: Vec<Token>,
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn needs_semi(&self) -> bool {
        match self.out.last().map(|t| &t.tok) {
            Some(Tok::Ident(_)) | Some(Tok::Int(_)) | Some(Tok::Lit(_)) => true,
            Some(Tok::Keyword(k)) => matches!(*k, "break" | "continue" | "fallthrough" | "return"),
            Some(Tok::Punct(p)) => matches!(*p, "++" | "--" | ")" | "]" | "}"),
            _ => false,
        }
    }

    fn push(&mut self, tok: Tok, line: u32, column: u32) {
        self.out.push(Token { tok, line, column });
    }

    fn err(&self, line: u32, column: u32, msg: impl Into<String>) -> ParseError {
        ParseError { line, column, message: msg.into() }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        while let Some(c) = self.peek(0) {
            let (line, column) = (self.line, self.column);
            if c == '\n' {
                if self.needs_semi() {
                    self.push(Tok::Semi, line, column);
                }
                self.bump();
            } else if c.is_whitespace() {
                self.bump();
            } else if c == '/' && self.peek(1) == Some('/') {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c == '/' && self.peek(1) == Some('*') {
                self.bump();
                self.bump();
                let mut saw_newline = false;
                loop {
                    match self.peek(0) {
                        None => return Err(self.err(line, column, "unterminated block comment")),
                        Some('*') if self.peek(1) == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        Some(ch) => {
                            saw_newline |= ch == '\n';
                            self.bump();
                        }
                    }
                }
                if saw_newline && self.needs_semi() {
                    self.push(Tok::Semi, line, column);
                }
            } else if c.is_alphabetic() || c == '_' {
                let mut word = String::new();
                while let Some(ch) = self.peek(0) {
                    if ch.is_alphanumeric() || ch == '_' {
                        word.push(ch);
                        self.bump();
                    } else {
                        break;
                    }
                }
                let tok = match KEYWORDS.iter().find(|k| **k == word) {
                    Some(k) => Tok::Keyword(k),
                    None => Tok::Ident(word),
                };
                self.push(tok, line, column);
            } else if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                let tok = self.number();
                self.push(tok, line, column);
            } else if c == '"' || c == '\'' || c == '`' {
                let tok = self.quoted(c, line, column)?;
                self.push(tok, line, column);
            } else {
                let rest: String = self.chars[self.pos..(self.pos + 3).min(self.chars.len())].iter().collect();
                let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
                    return Err(self.err(line, column, format!("unexpected character '{c}'")));
                };
                for _ in 0..p.chars().count() {
                    self.bump();
                }
                let tok = if *p == ";" { Tok::Semi } else { Tok::Punct(p) };
                self.push(tok, line, column);
            }
        }
        if self.needs_semi() {
            let (line, column) = (self.line, self.column);
            self.push(Tok::Semi, line, column);
        }
        let (line, column) = (self.line, self.column);
        self.push(Tok::Eof, line, column);
        Ok(self.out)
    }

    fn number(&mut self) -> Tok {
        let mut text = String::new();
        let mut is_int = true;
        let hex = self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X'));
        while let Some(ch) = self.peek(0) {
            let exp_sign = !hex
                && matches!(ch, '+' | '-')
                && matches!(text.chars().last(), Some('e' | 'E'));
            if ch.is_ascii_alphanumeric() || ch == '_' || ch == '.' || exp_sign {
                if ch == '.' || ch == 'i' || (!hex && matches!(ch, 'e' | 'E')) {
                    is_int = false;
                }
                text.push(ch);
                self.bump();
            } else {
                break;
            }
        }
        if is_int {
            Tok::Int(text)
        } else {
            Tok::Lit(text)
        }
    }

    fn quoted(&mut self, quote: char, line: u32, column: u32) -> Result<Tok, ParseError> {
        let mut text = String::new();
        text.push(quote);
        self.bump();
        loop {
            match self.peek(0) {
                None => return Err(self.err(line, column, "unterminated literal")),
                Some('\n') if quote != '`' => return Err(self.err(line, column, "unterminated literal")),
                Some('\\') if quote != '`' => {
                    text.push('\\');
                    self.bump();
                    if let Some(esc) = self.bump() {
                        text.push(esc);
                    }
                }
                Some(ch) => {
                    text.push(ch);
                    self.bump();
                    if ch == quote {
                        return Ok(Tok::Lit(text));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn inserts_semicolons_at_line_ends() {
        let t = toks("x := 1\ny++\n}");
        assert_eq!(
            t,
            vec![
                Tok::Ident("x".into()),
                Tok::Punct(":="),
                Tok::Int("1".into()),
                Tok::Semi,
                Tok::Ident("y".into()),
                Tok::Punct("++"),
                Tok::Semi,
                Tok::Punct("}"),
                Tok::Semi,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn arrow_and_comments() {
        let t = toks("ch <- 1 // send\n/* c */ v := <-ch");
        assert!(t.contains(&Tok::Punct("<-")));
        assert_eq!(t.iter().filter(|t| **t == Tok::Punct("<-")).count(), 2);
    }

    #[test]
    fn literals() {
        assert_eq!(toks("1.5")[0], Tok::Lit("1.5".into()));
        assert_eq!(toks("0x1F")[0], Tok::Int("0x1F".into()));
        assert_eq!(toks("\"a\\\"b\"")[0], Tok::Lit("\"a\\\"b\"".into()));
        assert!(tokenize("\"open").is_err());
        assert!(tokenize("x $ y").is_err());
    }
}
