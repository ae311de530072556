use super::ast::{Diagnostic, DiagnosticKind, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Identifiers may contain inner hyphens (`graph-of`) and end in a
    /// version suffix (`C1@v2`).
    Ident(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: &[&str] = &["->", "==", "!=", "{", "}", "(", ")", "[", "]", ",", ";", ":", "=", "."];

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |pos: Pos, msg: String| Diagnostic::new(pos, DiagnosticKind::SyntaxError, msg);

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if is_ident_start(c) {
            i += 1;
            while i < chars.len() {
                if is_ident_char(chars[i]) {
                    i += 1;
                } else if chars[i] == '-' && chars.get(i + 1).is_some_and(|&n| is_ident_char(n)) {
                    i += 2;
                } else {
                    break;
                }
            }
            // Version suffix.
            if chars.get(i) == Some(&'@') && chars.get(i + 1) == Some(&'v') {
                let digits = chars[i + 2..].iter().take_while(|d| d.is_ascii_digit()).count();
                if digits == 0 {
                    return Err(err(Pos { line, col: col + i - start }, "expected version number after `@v`".into()));
                }
                i += 2 + digits;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(text), pos });
            continue;
        }
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| err(pos, format!("integer `{text}` out of range")))?;
            col += i - start;
            out.push(Token { tok: Tok::Int(n), pos });
            continue;
        }
        if c == '"' {
            i += 1;
            col += 1;
            let mut s = String::new();
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(err(pos, "unterminated string".into()));
                };
                i += 1;
                col += 1;
                match ch {
                    '"' => break,
                    '\n' => return Err(err(pos, "unterminated string".into())),
                    '\\' => {
                        let esc = chars.get(i).copied();
                        i += 1;
                        col += 1;
                        s.push(match esc {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => return Err(err(Pos { line, col: col - 2 }, "invalid escape in string".into())),
                        });
                    }
                    other => s.push(other),
                }
            }
            out.push(Token { tok: Tok::Str(s), pos });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push(Token { tok: Tok::Sym(sym), pos });
            }
            None => return Err(err(pos, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn hyphenated_and_versioned_identifiers() {
        assert_eq!(
            toks("graph-of(C1@v2) -> x"),
            vec![
                Tok::Ident("graph-of".into()),
                Tok::Sym("("),
                Tok::Ident("C1@v2".into()),
                Tok::Sym(")"),
                Tok::Sym("->"),
                Tok::Ident("x".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_and_comments() {
        let t = tokenize("# c\n  node  C1;").unwrap();
        assert_eq!(t[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(t[1].pos, Pos { line: 2, col: 9 });
    }

    #[test]
    fn strings_and_errors() {
        assert_eq!(toks(r#""a\"b""#), vec![Tok::Str("a\"b".into()), Tok::Eof]);
        assert!(tokenize("\"open").is_err());
        let e = tokenize("x $").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
    }
}
