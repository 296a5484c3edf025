use crate::ast::Position;
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    At,
    Spread,
    Name(String),
    Str(String),
    Int(i64),
    Eof,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Colon => "`:`".into(),
            Token::At => "`@`".into(),
            Token::Spread => "`...`".into(),
            Token::Name(n) => format!("name `{n}`"),
            Token::Str(s) => format!("string {s:?}"),
            Token::Int(i) => format!("integer {i}"),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub token: Token,
    pub position: Position,
}

/// Splits query text into tokens. Commas are insignificant and `#` starts a
/// comment running to the end of the line.
pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut column = 1;

    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let position = Position { line, column };
        match c {
            ' ' | '\t' | '\r' | '\n' | ',' => advance!(),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance!();
                }
            }
            '{' | '}' | '(' | ')' | '[' | ']' | ':' | '@' => {
                let token = match c {
                    '{' => Token::LBrace,
                    '}' => Token::RBrace,
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    '[' => Token::LBracket,
                    ']' => Token::RBracket,
                    ':' => Token::Colon,
                    _ => Token::At,
                };
                tokens.push(Spanned { token, position });
                advance!();
            }
            '.' => {
                if chars.get(i + 1) == Some(&'.') && chars.get(i + 2) == Some(&'.') {
                    advance!();
                    advance!();
                    advance!();
                    tokens.push(Spanned {
                        token: Token::Spread,
                        position,
                    });
                } else {
                    return Err(ParseError::syntax(position, "`...`", "`.`"));
                }
            }
            '"' => {
                advance!();
                let mut value = String::new();
                loop {
                    let Some(&ch) = chars.get(i) else {
                        return Err(ParseError::syntax(
                            Position { line, column },
                            "closing `\"`",
                            "end of input",
                        ));
                    };
                    match ch {
                        '"' => {
                            advance!();
                            break;
                        }
                        '\n' => {
                            return Err(ParseError::syntax(
                                Position { line, column },
                                "closing `\"`",
                                "end of line",
                            ));
                        }
                        '\\' => {
                            let escape_pos = Position { line, column };
                            advance!();
                            let escaped = match chars.get(i) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('/') => '/',
                                other => {
                                    return Err(ParseError::syntax(escape_pos, "escape sequence", format!("{other:?}")))
                                }
                            };
                            value.push(escaped);
                            advance!();
                        }
                        _ => {
                            value.push(ch);
                            advance!();
                        }
                    }
                }
                tokens.push(Spanned {
                    token: Token::Str(value),
                    position,
                });
            }
            c if c == '-' || c.is_ascii_digit() => {
                let mut digits = String::new();
                if c == '-' {
                    digits.push(c);
                    advance!();
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    digits.push(chars[i]);
                    advance!();
                }
                let value = digits
                    .parse::<i64>()
                    .map_err(|_| ParseError::syntax(position, "integer", format!("`{digits}`")))?;
                tokens.push(Spanned {
                    token: Token::Int(value),
                    position,
                });
            }
            c if c == '_' || c.is_ascii_alphabetic() => {
                let mut name = String::new();
                while i < chars.len() && (chars[i] == '_' || chars[i].is_ascii_alphanumeric()) {
                    name.push(chars[i]);
                    advance!();
                }
                tokens.push(Spanned {
                    token: Token::Name(name),
                    position,
                });
            }
            other => {
                return Err(ParseError::syntax(position, "token", format!("`{other}`")));
            }
        }
    }
    tokens.push(Spanned {
        token: Token::Eof,
        position: Position { line, column },
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_positions_and_skips_comments() {
        let toks = tokenize("{ # hi\n  Crate @x(a: \"b\\\"c\", n: -3) ... }").unwrap();
        assert_eq!(toks[0].token, Token::LBrace);
        assert_eq!(toks[1].token, Token::Name("Crate".into()));
        assert_eq!(toks[1].position, Position { line: 2, column: 3 });
        assert!(toks.iter().any(|t| t.token == Token::Str("b\"c".into())));
        assert!(toks.iter().any(|t| t.token == Token::Int(-3)));
        assert!(toks.iter().any(|t| t.token == Token::Spread));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(matches!(tokenize("\"abc"), Err(ParseError::Syntax { .. })));
    }
}
