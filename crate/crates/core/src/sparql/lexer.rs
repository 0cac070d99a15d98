use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    IriRef(String),
    PName { prefix: String, local: String },
    Var(String),
    BNode(String),
    Str(String),
    LangTag(String),
    Integer(String),
    Decimal(String),
    Double(String),
    Ident(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
}

const PUNCT2: [&str; 6] = ["^^", "&&", "||", "!=", "<=", ">="];
const PUNCT1: [&str; 19] = [
    "{", "}", "(", ")", "[", "]", ".", ",", ";", "*", "/", "|", "^", "+", "-", "!", "=", "<", ">",
];

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || (!c.is_ascii() && c.is_alphabetic())
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_ascii_digit()
}

fn is_pn_char(c: char) -> bool {
    is_name_char(c) || c == '-' || c == '.'
}

fn is_iri_char(c: char) -> bool {
    !(c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer { src, pos: 0 }.run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn err(&self, at: usize, msg: impl Into<String>) -> ParseError {
        ParseError::new(at, msg)
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = self.pos;
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, start });
                return Ok(out);
            };
            let tok = self.next_tok(c)?;
            out.push(Token { tok, start });
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if c == '#' {
                match self.rest().find('\n') {
                    Some(i) => self.pos += i + 1,
                    None => self.pos = self.src.len(),
                }
            } else {
                break;
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn next_tok(&mut self, c: char) -> Result<Tok, ParseError> {
        let start = self.pos;
        match c {
            '<' => {
                if let Some(iri) = self.try_iri_ref() {
                    return Ok(Tok::IriRef(iri));
                }
            }
            '?' | '$' => {
                if self.peek_at(1).is_some_and(is_name_char) {
                    self.pos += 1;
                    let name = self.take_while(is_name_char);
                    return Ok(Tok::Var(name.to_string()));
                }
                if c == '$' {
                    return Err(self.err(start, "expected variable name after '$'"));
                }
            }
            '"' | '\'' => return self.string(c),
            '@' => {
                self.pos += 1;
                let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if tag.is_empty() {
                    return Err(self.err(start, "empty language tag"));
                }
                return Ok(Tok::LangTag(tag.to_string()));
            }
            '_' if self.peek_at(1) == Some(':') => {
                self.pos += 2;
                let label = self.pn_local();
                if label.is_empty() {
                    return Err(self.err(start, "empty blank node label"));
                }
                return Ok(Tok::BNode(label));
            }
            c if c.is_ascii_digit() => return Ok(self.number()),
            '.' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => return Ok(self.number()),
            ':' => {
                self.pos += 1;
                let local = self.pn_local();
                return Ok(Tok::PName {
                    prefix: String::new(),
                    local,
                });
            }
            c if is_name_start(c) => return Ok(self.word()),
            _ => {}
        }
        for p in PUNCT2 {
            if self.rest().starts_with(p) {
                self.pos += 2;
                return Ok(Tok::Punct(p));
            }
        }
        if c == '?' {
            self.pos += 1;
            return Ok(Tok::Punct("?"));
        }
        for p in PUNCT1 {
            if self.rest().starts_with(p) {
                self.pos += 1;
                return Ok(Tok::Punct(p));
            }
        }
        Err(self.err(start, format!("unexpected character {c:?}")))
    }

    fn try_iri_ref(&mut self) -> Option<String> {
        let body = &self.rest()[1..];
        let mut len = 0;
        for c in body.chars() {
            if c == '>' {
                let iri = body[..len].to_string();
                self.pos += len + 2;
                return Some(iri);
            }
            if !is_iri_char(c) {
                return None;
            }
            len += c.len_utf8();
        }
        None
    }

    fn pn_local(&mut self) -> String {
        let start = self.pos;
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if is_pn_char(c) || c == ':' || c == '%' {
                out.push(c);
                self.pos += c.len_utf8();
            } else if c == '\\' && self.peek_at(1).is_some_and(|n| !n.is_whitespace()) {
                let n = self.peek_at(1).unwrap();
                out.push(n);
                self.pos += 1 + n.len_utf8();
            } else {
                break;
            }
        }
        // a trailing '.' terminates the triple, it is not part of the name
        while out.ends_with('.') && self.pos > start {
            out.pop();
            self.pos -= 1;
        }
        out
    }

    fn word(&mut self) -> Tok {
        let start = self.pos;
        let word = self.take_while(is_pn_char);
        if self.peek() == Some(':') {
            let prefix = word.trim_end_matches('.');
            if prefix.len() == word.len() {
                self.pos += 1;
                let local = self.pn_local();
                return Tok::PName {
                    prefix: prefix.to_string(),
                    local,
                };
            }
        }
        self.pos = start;
        let ident = self.take_while(is_name_char);
        Tok::Ident(ident.to_string())
    }

    fn number(&mut self) -> Tok {
        let start = self.pos;
        self.take_while(|c| c.is_ascii_digit());
        let mut decimal = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
            self.pos += 1;
            self.take_while(|c| c.is_ascii_digit());
            decimal = true;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.take_while(|c| c.is_ascii_digit()).is_empty() {
                self.pos = save;
            } else {
                return Tok::Double(self.src[start..self.pos].to_string());
            }
        }
        let text = self.src[start..self.pos].to_string();
        if decimal {
            Tok::Decimal(text)
        } else {
            Tok::Integer(text)
        }
    }

    fn string(&mut self, quote: char) -> Result<Tok, ParseError> {
        let start = self.pos;
        let long: String = std::iter::repeat_n(quote, 3).collect();
        let is_long = self.rest().starts_with(&long);
        self.pos += if is_long { 3 } else { 1 };
        let mut out = String::new();
        loop {
            if is_long && self.rest().starts_with(&long) {
                self.pos += 3;
                return Ok(Tok::Str(out));
            }
            let Some(c) = self.peek() else {
                return Err(self.err(start, "unterminated string literal"));
            };
            if c == quote && !is_long {
                self.pos += 1;
                return Ok(Tok::Str(out));
            }
            if !is_long && (c == '\n' || c == '\r') {
                return Err(self.err(start, "newline in short string literal"));
            }
            self.pos += c.len_utf8();
            if c != '\\' {
                out.push(c);
                continue;
            }
            let esc_at = self.pos - 1;
            let Some(e) = self.peek() else {
                return Err(self.err(esc_at, "dangling escape"));
            };
            self.pos += e.len_utf8();
            match e {
                't' => out.push('\t'),
                'n' => out.push('\n'),
                'r' => out.push('\r'),
                'b' => out.push('\u{8}'),
                'f' => out.push('\u{c}'),
                '"' | '\'' | '\\' => out.push(e),
                'u' | 'U' => {
                    let n = if e == 'u' { 4 } else { 8 };
                    let hex = self.rest().get(..n).unwrap_or("");
                    let cp = u32::from_str_radix(hex, 16)
                        .ok()
                        .filter(|_| hex.len() == n)
                        .and_then(char::from_u32)
                        .ok_or_else(|| self.err(esc_at, "invalid unicode escape"))?;
                    self.pos += n;
                    out.push(cp);
                }
                _ => return Err(self.err(esc_at, format!("invalid escape \\{e}"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn iri_vs_less_than() {
        assert_eq!(
            toks("?x < 3"),
            vec![
                Tok::Var("x".into()),
                Tok::Punct("<"),
                Tok::Integer("3".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("<http://a/b#c>")[0], Tok::IriRef("http://a/b#c".into()));
        assert_eq!(toks("?a <= ?b")[1], Tok::Punct("<="));
    }

    #[test]
    fn prefixed_names_drop_trailing_dot() {
        assert_eq!(
            toks("foaf:name."),
            vec![
                Tok::PName {
                    prefix: "foaf".into(),
                    local: "name".into()
                },
                Tok::Punct("."),
                Tok::Eof
            ]
        );
        assert_eq!(
            toks(":x")[0],
            Tok::PName {
                prefix: String::new(),
                local: "x".into()
            }
        );
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(toks("3.")[0], Tok::Integer("3".into()));
        assert_eq!(toks("3.25")[0], Tok::Decimal("3.25".into()));
        assert_eq!(toks("1e5")[0], Tok::Double("1e5".into()));
        assert_eq!(toks(r#""a\"b""#)[0], Tok::Str("a\"b".into()));
        assert_eq!(toks("'''x\ny'''")[0], Tok::Str("x\ny".into()));
        assert_eq!(toks("\"x\"@en-GB")[1], Tok::LangTag("en-GB".into()));
    }

    #[test]
    fn comments_and_path_quantifier() {
        assert_eq!(
            toks("<p>? # note\n ?o"),
            vec![Tok::IriRef("p".into()), Tok::Punct("?"), Tok::Var("o".into()), Tok::Eof]
        );
    }

    #[test]
    fn reports_offsets() {
        let e = tokenize("SELECT ~").unwrap_err();
        assert_eq!(e.offset, 7);
        let e = tokenize("ASK { \"abc ").unwrap_err();
        assert_eq!(e.offset, 6);
    }
}
