//! Tokeniser for the knowledge base and narrative formats. `#` starts a
//! comment; statements end at a newline unless the line breaks after an
//! operator or the next line starts with one.

use super::KbError;

#[derive(Clone, PartialEq, Debug)]
pub enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Eq,
    DotDot,
    Plus,
    Minus,
    Bang,
    Caret,
    Pipe,
    Arrow,
    IffOp,
    ColonDash,
    Newline,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "`{s}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::DotDot => write!(f, "`..`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Arrow => write!(f, "`=>`"),
            Tok::IffOp => write!(f, "`<=>`"),
            Tok::ColonDash => write!(f, "`:-`"),
            Tok::Newline => write!(f, "end of line"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
}

pub fn lex(text: &str) -> Result<Vec<Spanned>, KbError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let code = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut chars = code.char_indices().peekable();
        let mut emitted = false;
        while let Some((_, c)) = chars.peek().copied() {
            match c {
                ' ' | '\t' | '\r' => {
                    chars.next();
                }
                '(' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::LParen, line });
                    emitted = true;
                }
                ')' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::RParen, line });
                    emitted = true;
                }
                ',' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::Comma, line });
                    emitted = true;
                }
                '+' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::Plus, line });
                    emitted = true;
                }
                '-' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::Minus, line });
                    emitted = true;
                }
                '!' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::Bang, line });
                    emitted = true;
                }
                '^' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::Caret, line });
                    emitted = true;
                }
                '|' => {
                    chars.next();
                    out.push(Spanned { tok: Tok::Pipe, line });
                    emitted = true;
                }
                '=' => {
                    chars.next();
                    if matches!(chars.peek(), Some((_, '>'))) {
                        chars.next();
                        out.push(Spanned { tok: Tok::Arrow, line });
                    } else {
                        out.push(Spanned { tok: Tok::Eq, line });
                    }
                    emitted = true;
                }
                '<' => {
                    chars.next();
                    let ok = matches!(chars.peek(), Some((_, '=')));
                    if ok {
                        chars.next();
                    }
                    if ok && matches!(chars.peek(), Some((_, '>'))) {
                        chars.next();
                        out.push(Spanned { tok: Tok::IffOp, line });
                        emitted = true;
                    } else {
                        return Err(KbError::parse(line, "expected `<=>`"));
                    }
                }
                ':' => {
                    chars.next();
                    if matches!(chars.peek(), Some((_, '-'))) {
                        chars.next();
                        out.push(Spanned { tok: Tok::ColonDash, line });
                        emitted = true;
                    } else {
                        return Err(KbError::parse(line, "expected `:-`"));
                    }
                }
                '.' => {
                    chars.next();
                    if matches!(chars.peek(), Some((_, '.'))) {
                        chars.next();
                        out.push(Spanned { tok: Tok::DotDot, line });
                        emitted = true;
                    } else {
                        return Err(KbError::parse(line, "expected `..`"));
                    }
                }
                c if c.is_ascii_digit() => {
                    let mut s = String::new();
                    while let Some((_, c)) = chars.peek().copied() {
                        if c.is_ascii_digit() {
                            s.push(c);
                            chars.next();
                        } else if c == '.' {
                            // lookahead: `..` is a range, a single dot
                            // continues the number
                            let mut ahead = chars.clone();
                            ahead.next();
                            if matches!(ahead.peek(), Some((_, '.'))) {
                                break;
                            }
                            s.push(c);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    out.push(Spanned { tok: Tok::Number(s), line });
                    emitted = true;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while let Some((_, c)) = chars.peek().copied() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            s.push(c);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    out.push(Spanned { tok: Tok::Ident(s), line });
                    emitted = true;
                }
                other => {
                    return Err(KbError::parse(line, format!("unexpected character `{other}`")));
                }
            }
        }
        if emitted {
            out.push(Spanned { tok: Tok::Newline, line });
        }
    }
    Ok(out)
}

/// True for tokens that signal the statement continues on the next line.
pub fn continues_after(tok: &Tok) -> bool {
    matches!(
        tok,
        Tok::ColonDash
            | Tok::Caret
            | Tok::Pipe
            | Tok::Arrow
            | Tok::IffOp
            | Tok::Comma
            | Tok::LParen
            | Tok::Eq
            | Tok::Bang
            | Tok::Minus
    )
}

/// True for tokens that, at the start of a line, attach it to the previous
/// statement.
pub fn continues_before(tok: &Tok) -> bool {
    matches!(tok, Tok::ColonDash | Tok::Caret | Tok::Pipe | Tok::Arrow | Tok::IffOp)
}
