//! Minimal s-expression reader with 1-based line:column tracking.

use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Keyword at the head of a list form, lowercased.
    pub fn head(&self) -> Option<String> {
        self.as_list()
            .and_then(|items| items.first())
            .and_then(Sexpr::as_atom)
            .map(str::to_ascii_lowercase)
    }
}

pub fn expect_atom<'a>(expr: &'a Sexpr, what: &str) -> Result<&'a str, ParseError> {
    expr.as_atom().ok_or_else(|| ParseError::syntax(expr.pos(), what, "list"))
}

pub fn expect_list<'a>(expr: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], ParseError> {
    match expr {
        Sexpr::List(items, _) => Ok(items),
        Sexpr::Atom(a, p) => Err(ParseError::syntax(*p, what, a)),
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
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

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<Sexpr>, ParseError> {
        self.skip_trivia();
        let start = self.pos();
        match self.chars.peek().copied() {
            None => Ok(None),
            Some(')') => Err(ParseError::syntax(start, "expression", ")")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(ParseError::syntax(self.pos(), ")", "end of input")),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexpr::List(items, start)));
                        }
                        Some(_) => {
                            // cannot be None: a non-')' char was peeked
                            if let Some(e) = self.read()? {
                                items.push(e);
                            }
                        }
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexpr::Atom(s, start)))
            }
        }
    }
}

/// Reads exactly one top-level form.
pub fn parse_one(text: &str) -> Result<Sexpr, ParseError> {
    let mut r = Reader { chars: text.chars().peekable(), line: 1, col: 1 };
    let first = r
        .read()?
        .ok_or_else(|| ParseError::syntax(r.pos(), "(define ...)", "end of input"))?;
    r.skip_trivia();
    if r.chars.peek().is_some() {
        let p = r.pos();
        return Err(ParseError::syntax(p, "end of input", "trailing content"));
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based() {
        let e = parse_one("; c\n  (a (b c))").unwrap();
        assert_eq!(e.pos(), Pos { line: 2, col: 3 });
        let items = e.as_list().unwrap();
        assert_eq!(items[1].pos(), Pos { line: 2, col: 6 });
    }

    #[test]
    fn unbalanced_reports_position() {
        let err = parse_one("(a (b c)").unwrap_err();
        assert!(err.to_string().contains("1:9"), "{err}");
        let err = parse_one("(a))").unwrap_err();
        assert!(err.to_string().contains("1:4"), "{err}");
    }
}
