use super::{ParseError, SourceSpan};

pub(super) const KEYWORDS: &[&str] = &[
    "class", "extends", "abstract", "var", "method", "ctor", "body", "call", "uses", "defs",
    "self", "super",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    Colon,
    Dot,
    Question,
    Eof,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => format!("keyword `{s}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Question => "`?`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let span = SourceSpan::at(line, col);
        let tok = match c {
            '{' => {
                bump!();
                Tok::LBrace
            }
            '}' => {
                bump!();
                Tok::RBrace
            }
            ':' => {
                bump!();
                Tok::Colon
            }
            '.' => {
                bump!();
                Tok::Dot
            }
            '?' => {
                bump!();
                Tok::Question
            }
            '"' => {
                bump!();
                let mut value = String::new();
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return Err(ParseError {
                            span,
                            expected: vec!["closing `\"`".into()],
                            found: "unterminated string".into(),
                        });
                    }
                    match chars[i] {
                        '"' => {
                            bump!();
                            break;
                        }
                        '\\' => {
                            let esc_span = SourceSpan::at(line, col);
                            bump!();
                            let escaped = match chars.get(i) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                other => {
                                    return Err(ParseError {
                                        span: esc_span,
                                        expected: vec!["escape sequence".into()],
                                        found: other
                                            .map(|c| format!("`\\{c}`"))
                                            .unwrap_or_else(|| "end of input".into()),
                                    })
                                }
                            };
                            value.push(escaped);
                            bump!();
                        }
                        other => {
                            value.push(other);
                            bump!();
                        }
                    }
                }
                Tok::Str(value)
            }
            '<' => {
                let rest: String = chars[i..chars.len().min(i + 6)].iter().collect();
                if rest == "<init>" {
                    for _ in 0..6 {
                        bump!();
                    }
                    Tok::Ident(rest)
                } else {
                    return Err(ParseError {
                        span,
                        expected: vec!["`<init>`".into()],
                        found: "`<`".into(),
                    });
                }
            }
            c if is_ident_start(c) => {
                let mut ident = String::new();
                while i < chars.len() && is_ident_char(chars[i]) {
                    ident.push(chars[i]);
                    bump!();
                }
                Tok::Ident(ident)
            }
            other => {
                return Err(ParseError {
                    span,
                    expected: vec!["token".into()],
                    found: format!("character `{other}`"),
                })
            }
        };
        tokens.push(Token { tok, span });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::at(line, col),
    });
    Ok(tokens)
}
