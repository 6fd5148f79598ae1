use super::ast::Span;
use super::ExprDiagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Int(i64),
    Num(f64),
    Str(String),
    Ident(String),
    Let,
    In,
    If,
    Then,
    Else,
    True,
    False,
    Msg,
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
            kw => format!("keyword `{}`", format!("{kw:?}").to_lowercase()),
        }
    }
}

const SYMBOLS: [&str; 23] = [
    "==", "!=", "<=", ">=", "&&", "||", "+", "-", "*", "/", "%", "<", ">", "!", "(", ")", "{",
    "}", "[", "]", ",", ":", "=",
];

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ExprDiagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |span: Span, msg: String| ExprDiagnostic::new(span, "syntax-error", msg);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
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
        let start = i;
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut float = false;
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if matches!(chars.get(i), Some('e' | 'E')) {
                let mut j = i + 1;
                if matches!(chars.get(j), Some('+' | '-')) {
                    j += 1;
                }
                if chars.get(j).is_some_and(char::is_ascii_digit) {
                    float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if float {
                let n: f64 = text.parse().map_err(|_| err(span, format!("bad number `{text}`")))?;
                if !n.is_finite() {
                    return Err(err(span, format!("number `{text}` is out of range")));
                }
                Tok::Num(n)
            } else {
                Tok::Int(
                    text.parse()
                        .map_err(|_| err(span, format!("integer `{text}` is out of range")))?,
                )
            };
            col += i - start;
            out.push((tok, span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.as_str() {
                "let" => Tok::Let,
                "in" => Tok::In,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                "true" => Tok::True,
                "false" => Tok::False,
                "msg" => Tok::Msg,
                _ => Tok::Ident(word),
            };
            out.push((tok, span));
            continue;
        }
        if c == '"' {
            i += 1;
            col += 1;
            let mut s = String::new();
            loop {
                let Some(&ch) = chars.get(i) else {
                    return Err(err(span, "unterminated string literal".into()));
                };
                i += 1;
                col += 1;
                match ch {
                    '"' => break,
                    '\n' => return Err(err(span, "newline in string literal".into())),
                    '\\' => {
                        let esc = chars.get(i).copied();
                        i += 1;
                        col += 1;
                        match esc {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('r') => s.push('\r'),
                            Some('u') if chars.get(i) == Some(&'{') => {
                                let close = chars[i..]
                                    .iter()
                                    .position(|&c| c == '}')
                                    .ok_or_else(|| err(span, "unterminated \\u{..} escape".into()))?;
                                let hex: String = chars[i + 1..i + close].iter().collect();
                                let ch = u32::from_str_radix(&hex, 16)
                                    .ok()
                                    .and_then(char::from_u32)
                                    .ok_or_else(|| err(span, format!("bad escape \\u{{{hex}}}")))?;
                                s.push(ch);
                                col += close + 1;
                                i += close + 1;
                            }
                            _ => {
                                return Err(err(
                                    Span { line, col: col - 2 },
                                    "unknown escape sequence".into(),
                                ))
                            }
                        }
                    }
                    other => s.push(other),
                }
            }
            out.push((Tok::Str(s), span));
            continue;
        }
        if c == '.' {
            i += 1;
            col += 1;
            out.push((Tok::Sym("."), span));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push((Tok::Sym(sym), span));
            }
            None => return Err(err(span, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}
