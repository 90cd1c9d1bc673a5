//! Minimal s-expression reader for PDDL text. Symbols are lowercased on read
//! since PDDL identifiers are case-insensitive.

use std::fmt;

use super::PddlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Atom(String, Loc),
    List(Vec<SExpr>, Loc),
}

impl SExpr {
    pub fn loc(&self) -> Loc {
        match self {
            SExpr::Atom(_, l) | SExpr::List(_, l) => *l,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// Head symbol of a non-empty list, if it is an atom.
    pub fn head(&self) -> Option<&str> {
        self.as_list()
            .and_then(|l| l.first())
            .and_then(SExpr::as_atom)
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn loc(&self) -> Loc {
        Loc {
            line: self.line,
            col: self.col,
        }
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
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<SExpr>, PddlError> {
        self.skip_trivia();
        let loc = self.loc();
        match self.chars.peek().copied() {
            None => Ok(None),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(PddlError::Syntax {
                                loc,
                                msg: "unclosed parenthesis".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Some(SExpr::List(items, loc)));
                        }
                        Some(_) => {
                            // read() only returns None at end of input, handled above
                            if let Some(e) = self.read()? {
                                items.push(e);
                            }
                        }
                    }
                }
            }
            Some(')') => Err(PddlError::Syntax {
                loc,
                msg: "unexpected ')'".into(),
            }),
            Some(_) => {
                let mut sym = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    sym.extend(c.to_lowercase());
                    self.bump();
                }
                Ok(Some(SExpr::Atom(sym, loc)))
            }
        }
    }
}

/// Reads exactly one top-level expression; trailing non-comment text is an error.
pub fn parse_one(text: &str) -> Result<SExpr, PddlError> {
    let mut reader = Reader::new(text);
    let expr = reader.read()?.ok_or(PddlError::Syntax {
        loc: reader.loc(),
        msg: "empty input".into(),
    })?;
    reader.skip_trivia();
    if reader.chars.peek().is_some() {
        return Err(PddlError::Syntax {
            loc: reader.loc(),
            msg: "trailing input after top-level form".into(),
        });
    }
    Ok(expr)
}
