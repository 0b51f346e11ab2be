use super::diagnostic::{Code, Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Number(f64),
    LBrace,
    RBrace,
    Comma,
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::Number(n) => format!("number {n}"),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Arrow => "`->`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenize the whole source. Lexical errors are reported and skipped, so the
/// returned stream always ends in `Eof`.
pub fn tokenize(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let tok = match c {
            '{' => {
                cur.bump();
                Tok::LBrace
            }
            '}' => {
                cur.bump();
                Tok::RBrace
            }
            ',' => {
                cur.bump();
                Tok::Comma
            }
            '-' => {
                cur.bump();
                if cur.peek() == Some('>') {
                    cur.bump();
                    Tok::Arrow
                } else {
                    diags.push(
                        Diagnostic::new(Code::Syntax, "expected `->`, found a lone `-`").at(Some(pos)),
                    );
                    continue;
                }
            }
            '"' => {
                cur.bump();
                match lex_string(&mut cur) {
                    Ok(s) => Tok::Str(s),
                    Err(d) => {
                        diags.push(d.at(Some(pos)));
                        continue;
                    }
                }
            }
            c if c.is_ascii_digit() => {
                let mut raw = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        raw.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                match raw.parse::<f64>() {
                    Ok(n) if n.is_finite() => Tok::Number(n),
                    _ => {
                        diags.push(
                            Diagnostic::new(Code::Syntax, format!("malformed number `{raw}`"))
                                .at(Some(pos)),
                        );
                        continue;
                    }
                }
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while let Some(c) = cur.peek() {
                    if is_ident_continue(c) {
                        s.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => {
                cur.bump();
                diags.push(
                    Diagnostic::new(Code::Syntax, format!("unexpected character {other:?}"))
                        .at(Some(pos)),
                );
                continue;
            }
        };
        tokens.push(Token { tok, pos });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        pos: cur.pos(),
    });
    (tokens, diags)
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<String, Diagnostic> {
    let mut out = String::new();
    loop {
        match cur.bump() {
            None => return Err(Diagnostic::new(Code::Syntax, "unterminated string")),
            Some('"') => return Ok(out),
            Some('\\') => match cur.bump() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some(other) => {
                    // keep scanning so one bad escape does not swallow the file
                    let d = Diagnostic::new(
                        Code::Syntax,
                        format!("unknown escape `\\{other}` (only `\\\"` and `\\\\` are allowed)"),
                    );
                    skip_to_quote(cur);
                    return Err(d);
                }
                None => return Err(Diagnostic::new(Code::Syntax, "unterminated string")),
            },
            Some(c) => out.push(c),
        }
    }
}

fn skip_to_quote(cur: &mut Cursor<'_>) {
    while let Some(c) = cur.bump() {
        match c {
            '"' => return,
            '\\' => {
                cur.bump();
            }
            _ => {}
        }
    }
}
