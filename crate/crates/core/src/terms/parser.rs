use num::BigInt;

use super::signature::{Assoc, Signature, PREFIX_PREC};
use super::term::{Link, Span, Term};
use super::TermError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigInt),
    Sym(String),
    Deriv(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: usize,
    end: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<Token>, TermError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map(|c| c.0).unwrap_or(text.len());
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // `d/dx` is one token when written without spaces
        if c == 'd'
            && chars.get(i + 1).map(|c| c.1) == Some('/')
            && chars.get(i + 2).map(|c| c.1) == Some('d')
            && chars.get(i + 3).map(|c| is_ident_start(c.1)).unwrap_or(false)
            && (i == 0 || !is_ident_char(chars[i - 1].1))
        {
            let mut j = i + 3;
            while j < chars.len() && is_ident_char(chars[j].1) {
                j += 1;
            }
            let var: String = chars[i + 3..j].iter().map(|c| c.1).collect();
            out.push(Token { tok: Tok::Deriv(var), start, end: byte_at(j) });
            i = j;
            continue;
        }
        if is_ident_start(c) {
            let mut j = i + 1;
            while j < chars.len() && is_ident_char(chars[j].1) {
                j += 1;
            }
            let name: String = chars[i..j].iter().map(|c| c.1).collect();
            out.push(Token { tok: Tok::Ident(name), start, end: byte_at(j) });
            i = j;
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let digits: String = chars[i..j].iter().map(|c| c.1).collect();
            if j < chars.len() && (chars[j].1 == '.' || is_ident_start(chars[j].1)) {
                return Err(TermError::Syntax { pos: byte_at(j), expected: "digit or operator".into() });
            }
            out.push(Token { tok: Tok::Num(digits.parse().unwrap()), start, end: byte_at(j) });
            i = j;
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, start, end: byte_at(i + 1) });
            i += 1;
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().map(|c| c.1).collect();
        if ["<=", ">=", "~="].contains(&two.as_str()) {
            out.push(Token { tok: Tok::Sym(two), start, end: byte_at(i + 2) });
            i += 2;
            continue;
        }
        out.push(Token { tok: Tok::Sym(c.to_string()), start, end: byte_at(i + 1) });
        i += 1;
    }
    out.push(Token { tok: Tok::End, start: text.len(), end: text.len() });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    sig: &'a Signature,
}

enum Atom {
    Single(Term),
    Tuple(Vec<Term>, Span),
}

/// Parses surface syntax into an untyped term; `terms::parse` adds types.
pub(crate) fn parse_untyped(text: &str, sig: &Signature) -> Result<Term, TermError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, sig };
    let t = p.expr(0)?;
    if p.peek() != &Tok::End {
        let tok = p.cur();
        if let Tok::Sym(s) = &tok.tok {
            if sig.fixity(s).is_none() {
                return Err(TermError::UnknownSymbol { name: s.clone(), pos: tok.start });
            }
        }
        return Err(TermError::Syntax { pos: p.cur().start, expected: "operator or end of input".into() });
    }
    Ok(t)
}

fn with_span(mut t: Term, start: usize, end: usize) -> Term {
    t.meta_mut().span = Some(Span { start, end });
    t
}

impl<'a> Parser<'a> {
    fn cur(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].end
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TermError> {
        if self.peek() == &tok {
            self.bump();
            Ok(())
        } else {
            Err(TermError::Syntax { pos: self.cur().start, expected: what.into() })
        }
    }

    /// The infix operator at the cursor, with its canonical name.
    fn infix_here(&self) -> Option<(String, super::signature::Fixity)> {
        let name = match self.peek() {
            Tok::Sym(s) => s.as_str(),
            Tok::Ident(s) => s.as_str(),
            _ => return None,
        };
        self.sig.fixity(name).map(|f| (self.sig.canonical(name).to_string(), f))
    }

    fn expr(&mut self, min_prec: u8) -> Result<Term, TermError> {
        let start = self.cur().start;
        let mut lhs = self.prefix()?;
        let mut last_nonassoc: Option<u8> = None;
        while let Some((op, fix)) = self.infix_here() {
            if fix.prec < min_prec {
                break;
            }
            if last_nonassoc == Some(fix.prec) {
                return Err(TermError::Syntax {
                    pos: self.cur().start,
                    expected: "parentheses around non-associative operator".into(),
                });
            }
            let op_tok = self.bump();
            let next_min = match fix.assoc {
                Assoc::Right => fix.prec,
                Assoc::Left | Assoc::None => fix.prec + 1,
            };
            let rhs = self.expr(next_min)?;
            let head = self.constant(&op, op_tok.start, op_tok.end);
            lhs = with_span(Term::app(head, vec![lhs, rhs]), start, self.prev_end());
            last_nonassoc = (fix.assoc == Assoc::None).then_some(fix.prec);
        }
        Ok(lhs)
    }

    fn constant(&self, name: &str, start: usize, end: usize) -> Term {
        let mut c = with_span(Term::constant(name), start, end);
        if let Some(d) = self.sig.lookup(name) {
            if let Some(origin) = &d.origin {
                c.meta_mut().link = Some(Link { theory: origin.clone(), name: name.to_string() });
            }
        }
        c
    }

    fn prefix(&mut self) -> Result<Term, TermError> {
        let tok = self.cur().clone();
        match &tok.tok {
            Tok::Sym(s) if s == "-" => {
                self.bump();
                if let Tok::Num(n) = self.peek().clone() {
                    if self.cur().start == tok.end {
                        let num_tok = self.bump();
                        return Ok(with_span(Term::int(-n), tok.start, num_tok.end));
                    }
                }
                let operand = self.expr(PREFIX_PREC)?;
                let head = self.constant(super::signature::NEG, tok.start, tok.end);
                Ok(with_span(Term::app(head, vec![operand]), tok.start, self.prev_end()))
            }
            Tok::Deriv(v) => {
                self.bump();
                let var_end = tok.end;
                let operand = self.expr(PREFIX_PREC)?;
                let head = self.constant(super::signature::DERIV, tok.start, var_end);
                let mut var = with_span(Term::var(v), tok.start + 3, var_end);
                var.meta_mut().bound = true;
                Ok(with_span(Term::app(head, vec![var, operand]), tok.start, self.prev_end()))
            }
            _ => self.application(),
        }
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Num(_) | Tok::LParen | Tok::LBrack => true,
            Tok::Ident(s) => self.sig.fixity(s).is_none(),
            _ => false,
        }
    }

    fn application(&mut self) -> Result<Term, TermError> {
        let start = self.cur().start;
        let head = match self.atom()? {
            Atom::Single(t) => t,
            Atom::Tuple(_, span) => {
                return Err(TermError::Syntax { pos: span.start, expected: "a single expression".into() })
            }
        };
        let applicable = matches!(head, Term::Var { .. } | Term::Const { .. });
        if !applicable || !self.starts_atom() {
            return Ok(head);
        }
        let mut args = Vec::new();
        while self.starts_atom() {
            match self.atom()? {
                Atom::Single(t) => args.push(t),
                Atom::Tuple(ts, _) => args.extend(ts),
            }
        }
        Ok(with_span(Term::app(head, args), start, self.prev_end()))
    }

    fn atom(&mut self) -> Result<Atom, TermError> {
        let tok = self.cur().clone();
        match &tok.tok {
            Tok::Num(n) => {
                self.bump();
                Ok(Atom::Single(with_span(Term::int(n.clone()), tok.start, tok.end)))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.sig.is_const(name) {
                    let canon = self.sig.canonical(name).to_string();
                    Ok(Atom::Single(self.constant(&canon, tok.start, tok.end)))
                } else {
                    Ok(Atom::Single(with_span(Term::var(name), tok.start, tok.end)))
                }
            }
            Tok::LParen => {
                self.bump();
                let first = self.expr(0)?;
                if self.peek() == &Tok::Comma {
                    let mut items = vec![first];
                    while self.peek() == &Tok::Comma {
                        self.bump();
                        items.push(self.expr(0)?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Atom::Tuple(items, Span { start: tok.start, end: self.prev_end() }));
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(Atom::Single(first))
            }
            Tok::LBrack => {
                self.bump();
                let mut items = Vec::new();
                if self.peek() != &Tok::RBrack {
                    items.push(self.expr(0)?);
                    while self.peek() == &Tok::Comma {
                        self.bump();
                        items.push(self.expr(0)?);
                    }
                }
                self.expect(Tok::RBrack, "`,` or `]`")?;
                let head = self.constant(super::signature::LIST, tok.start, tok.start + 1);
                Ok(Atom::Single(with_span(Term::app(head, items), tok.start, self.prev_end())))
            }
            Tok::Sym(s) if self.sig.fixity(s).is_none() && s != "-" => {
                Err(TermError::UnknownSymbol { name: s.clone(), pos: tok.start })
            }
            Tok::End => Err(TermError::Syntax { pos: tok.start, expected: "expression".into() }),
            _ => Err(TermError::Syntax { pos: tok.start, expected: "expression".into() }),
        }
    }
}
