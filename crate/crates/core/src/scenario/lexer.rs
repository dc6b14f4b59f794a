use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(u64),
    Sym(&'static str),
    Newline,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    /// Length in characters (0 for newline/EOF).
    pub len: usize,
}

const SYMBOLS: [&str; 16] = ["=>", "==", "!=", "<=", ">=", "=", "<", ">", "{", "}", "[", "]", ";", ":", ",", "/"];

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '-'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut last_line = 1;
    let mut last_len = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let chars: Vec<char> = line.chars().collect();
        last_line = lineno;
        last_len = chars.len();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let lexeme: String = chars[start..i].iter().filter(|c| **c != '_').collect();
                let parsed = match lexeme.strip_prefix("0x").or_else(|| lexeme.strip_prefix("0X")) {
                    Some(hex) if !hex.is_empty() => u64::from_str_radix(hex, 16),
                    Some(_) => "".parse::<u64>(),
                    None => lexeme.parse::<u64>(),
                };
                let value = parsed.map_err(|_| ParseError {
                    line: lineno,
                    column: col,
                    message: format!("invalid number `{}`", chars[start..i].iter().collect::<String>()),
                })?;
                out.push(Token { tok: Tok::Number(value), line: lineno, column: col, len: i - start });
                continue;
            }
            if ident_start(c) {
                let start = i;
                while i < chars.len() && ident_continue(chars[i]) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Ident(s), line: lineno, column: col, len: i - start });
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(sym) => {
                    out.push(Token { tok: Tok::Sym(sym), line: lineno, column: col, len: sym.len() });
                    i += sym.len();
                }
                None => {
                    return Err(ParseError {
                        line: lineno,
                        column: col,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
        out.push(Token { tok: Tok::Newline, line: lineno, column: chars.len() + 1, len: 0 });
    }
    out.push(Token { tok: Tok::Eof, line: last_line, column: last_len + 1, len: 0 });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_symbols() {
        assert_eq!(
            toks("x=0x8000_0000; y=1_000 => deny:hspmp"),
            vec![
                Tok::Ident("x".into()),
                Tok::Sym("="),
                Tok::Number(0x8000_0000),
                Tok::Sym(";"),
                Tok::Ident("y".into()),
                Tok::Sym("="),
                Tok::Number(1000),
                Tok::Sym("=>"),
                Tok::Ident("deny".into()),
                Tok::Sym(":"),
                Tok::Ident("hspmp".into()),
                Tok::Newline,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_flags() {
        assert_eq!(toks("r-x # rwx"), vec![Tok::Ident("r-x".into()), Tok::Newline, Tok::Eof]);
    }

    #[test]
    fn bad_number_position() {
        let e = tokenize("a\n  0xZZ").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        let e = tokenize("  99999999999999999999999").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }
}
