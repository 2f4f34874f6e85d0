//! Signed-generator words, free reduction and the presentation text format.
//!
//! A presentation file is line oriented:
//!
//! ```text
//! # comment
//! gens: a, b
//! rel: [a,b]
//! rel name: (a*b^-1)^3
//! subset: name
//! ```
//!
//! `rel` lines may carry an optional label before the colon; unlabeled
//! relators are named `R1`, `R2`, ... by position. An optional `subset:`
//! line designates a relator subset by name.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneratorSymbol {
    pub index: usize,
    pub sign: Sign,
}

impl GeneratorSymbol {
    pub fn pos(index: usize) -> Self {
        GeneratorSymbol { index, sign: Sign::Pos }
    }

    pub fn neg(index: usize) -> Self {
        GeneratorSymbol { index, sign: Sign::Neg }
    }

    pub fn inverse(self) -> Self {
        GeneratorSymbol { index: self.index, sign: self.sign.flip() }
    }

    /// `+(index + 1)` or `-(index + 1)`.
    pub fn to_signed(self) -> i64 {
        let v = self.index as i64 + 1;
        match self.sign {
            Sign::Pos => v,
            Sign::Neg => -v,
        }
    }

    pub fn from_signed(v: i64) -> Option<Self> {
        if v == 0 {
            return None;
        }
        let index = (v.unsigned_abs() - 1) as usize;
        Some(if v > 0 { Self::pos(index) } else { Self::neg(index) })
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<GeneratorSymbol>,
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn generator(index: usize) -> Self {
        Word { letters: vec![GeneratorSymbol::pos(index)] }
    }

    /// Freely reduces an arbitrary symbol sequence.
    pub fn free_reduce<I: IntoIterator<Item = GeneratorSymbol>>(letters: I) -> Self {
        let mut out: Vec<GeneratorSymbol> = Vec::new();
        for s in letters {
            match out.last() {
                Some(&last) if last == s.inverse() => {
                    out.pop();
                }
                _ => out.push(s),
            }
        }
        Word { letters: out }
    }

    pub fn letters(&self) -> &[GeneratorSymbol] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn invert(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|s| s.inverse()).collect() }
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::free_reduce(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn pow(&self, exp: i64) -> Word {
        let base = if exp < 0 { self.invert() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..exp.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// `u v u⁻¹ v⁻¹`
    pub fn commutator(u: &Word, v: &Word) -> Word {
        u.concat(v).concat(&u.invert()).concat(&v.invert())
    }

    pub fn max_index(&self) -> Option<usize> {
        self.letters.iter().map(|s| s.index).max()
    }

    /// Renders the word with generator names, e.g. `a*b^-1*a`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> WordDisplay<'a> {
        WordDisplay { word: self, names }
    }
}

pub struct WordDisplay<'a> {
    word: &'a Word,
    names: &'a [String],
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_identity() {
            return write!(f, "1");
        }
        // Collapse runs of the same symbol into powers.
        let letters = self.word.letters();
        let mut first = true;
        let mut i = 0;
        while i < letters.len() {
            let s = letters[i];
            let mut run = 1;
            while i + run < letters.len() && letters[i + run] == s {
                run += 1;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            let name = &self.names[s.index];
            let exp = match s.sign {
                Sign::Pos => run as i64,
                Sign::Neg => -(run as i64),
            };
            if exp == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{exp}")?;
            }
            i += run;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PresentationError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unknown generator `{name}`")]
    UnknownGenerator { line: usize, name: String },
    #[error("presentation has no generators")]
    NoGenerators,
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("duplicate relator name `{0}`")]
    DuplicateRelator(String),
    #[error("unknown relator `{0}`")]
    UnknownRelator(String),
    #[error("relator `{name}` uses generator index {index} but only {count} generators exist")]
    InvalidIndex { name: String, index: usize, count: usize },
}

/// `⟨S | R⟩` with named generators and relators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    generators: Vec<String>,
    relators: Vec<Word>,
    relator_names: Vec<String>,
    designated: Option<Vec<usize>>,
}

impl Presentation {
    pub fn new(
        generators: Vec<String>,
        relators: Vec<(String, Word)>,
    ) -> Result<Self, PresentationError> {
        if generators.is_empty() {
            return Err(PresentationError::NoGenerators);
        }
        for (i, g) in generators.iter().enumerate() {
            if g.is_empty() || !is_identifier(g) {
                return Err(PresentationError::Syntax {
                    line: 0,
                    column: 0,
                    message: format!("invalid generator name `{g}`"),
                });
            }
            if generators[..i].contains(g) {
                return Err(PresentationError::DuplicateGenerator(g.clone()));
            }
        }
        let mut names = Vec::with_capacity(relators.len());
        let mut words = Vec::with_capacity(relators.len());
        for (name, w) in relators {
            if names.contains(&name) {
                return Err(PresentationError::DuplicateRelator(name));
            }
            if let Some(idx) = w.max_index() {
                if idx >= generators.len() {
                    return Err(PresentationError::InvalidIndex {
                        name,
                        index: idx,
                        count: generators.len(),
                    });
                }
            }
            names.push(name);
            words.push(w);
        }
        Ok(Presentation { generators, relators: words, relator_names: names, designated: None })
    }

    pub fn with_designated(mut self, names: &[&str]) -> Result<Self, PresentationError> {
        let idx = names
            .iter()
            .map(|n| self.relator_index(n).ok_or_else(|| PresentationError::UnknownRelator(n.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        self.designated = Some(idx);
        Ok(self)
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn relator_names(&self) -> &[String] {
        &self.relator_names
    }

    pub fn designated(&self) -> Option<&[usize]> {
        self.designated.as_deref()
    }

    pub fn relator_index(&self, name: &str) -> Option<usize> {
        self.relator_names.iter().position(|n| n == name)
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|n| n == name)
    }

    /// Canonical text form; `parse_presentation` reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = format!("gens: {}\n", self.generators.join(", "));
        for (name, w) in self.relator_names.iter().zip(&self.relators) {
            out.push_str(&format!("rel {}: {}\n", name, w.display(&self.generators)));
        }
        if let Some(d) = &self.designated {
            let names: Vec<&str> = d.iter().map(|&i| self.relator_names[i].as_str()).collect();
            out.push_str(&format!("subset: {}\n", names.join(", ")));
        }
        out
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_presentation(text: &str) -> Result<Presentation, PresentationError> {
    let mut generators: Option<Vec<String>> = None;
    let mut relators: Vec<(String, Word)> = Vec::new();
    let mut subset: Option<(usize, Vec<String>)> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let colon = line.find(':').ok_or_else(|| PresentationError::Syntax {
            line: line_no,
            column: 1,
            message: "expected `gens:`, `rel:` or `subset:`".into(),
        })?;
        let head = line[..colon].trim();
        let body = &line[colon + 1..];
        let body_col = colon + 2;
        let mut head_parts = head.split_whitespace();
        let keyword = head_parts.next().unwrap_or("");
        let label = head_parts.next();
        if head_parts.next().is_some() {
            return Err(PresentationError::Syntax {
                line: line_no,
                column: 1,
                message: format!("malformed line header `{head}`"),
            });
        }
        match (keyword, label) {
            ("gens", None) => {
                if generators.is_some() {
                    return Err(PresentationError::Syntax {
                        line: line_no,
                        column: 1,
                        message: "generators declared twice".into(),
                    });
                }
                let names: Vec<String> = body
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                for n in &names {
                    if !is_identifier(n) {
                        return Err(PresentationError::Syntax {
                            line: line_no,
                            column: body_col,
                            message: format!("invalid generator name `{n}`"),
                        });
                    }
                }
                if names.is_empty() {
                    return Err(PresentationError::NoGenerators);
                }
                generators = Some(names);
            }
            ("rel", label) => {
                let gens = generators.as_ref().ok_or_else(|| PresentationError::Syntax {
                    line: line_no,
                    column: 1,
                    message: "`rel:` before `gens:`".into(),
                })?;
                let mut p = ExprParser { src: body.as_bytes(), pos: 0, line: line_no, col0: body_col, gens };
                let w = p.parse_full()?;
                let name = match label {
                    Some(l) => {
                        if !is_identifier(l) {
                            return Err(PresentationError::Syntax {
                                line: line_no,
                                column: 1,
                                message: format!("invalid relator name `{l}`"),
                            });
                        }
                        l.to_string()
                    }
                    None => format!("R{}", relators.len() + 1),
                };
                relators.push((name, w));
            }
            ("subset", None) => {
                let names = body
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                subset = Some((line_no, names));
            }
            _ => {
                return Err(PresentationError::Syntax {
                    line: line_no,
                    column: 1,
                    message: format!("unknown directive `{head}`"),
                })
            }
        }
    }
    let generators = generators.ok_or(PresentationError::NoGenerators)?;
    let p = Presentation::new(generators, relators)?;
    match subset {
        Some((_, names)) => {
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            p.with_designated(&refs)
        }
        None => Ok(p),
    }
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col0: usize,
    gens: &'a [String],
}

impl ExprParser<'_> {
    fn err(&self, message: impl Into<String>) -> PresentationError {
        PresentationError::Syntax { line: self.line, column: self.col0 + self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), PresentationError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    fn parse_full(&mut self) -> Result<Word, PresentationError> {
        let w = self.expr()?;
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(w)
    }

    fn expr(&mut self) -> Result<Word, PresentationError> {
        let mut w = self.term()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            w = w.concat(&self.term()?);
        }
        Ok(w)
    }

    fn term(&mut self) -> Result<Word, PresentationError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.integer()?;
            Ok(base.pow(exp))
        } else {
            Ok(base)
        }
    }

    fn integer(&mut self) -> Result<i64, PresentationError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'-') | Some(b'+')) {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        s.parse::<i64>().map_err(|_| {
            self.pos = start;
            self.err("expected integer exponent")
        })
    }

    fn atom(&mut self) -> Result<Word, PresentationError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let w = self.expr()?;
                self.expect(b')')?;
                Ok(w)
            }
            Some(b'[') => {
                self.pos += 1;
                let u = self.expr()?;
                self.expect(b',')?;
                let v = self.expr()?;
                self.expect(b']')?;
                Ok(Word::commutator(&u, &v))
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Word::identity())
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match self.gens.iter().position(|g| g == name) {
                    Some(i) => Ok(Word::generator(i)),
                    None => Err(PresentationError::UnknownGenerator { line: self.line, name: name.to_string() }),
                }
            }
            Some(_) => Err(self.err("expected generator, `(` or `[`")),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}
