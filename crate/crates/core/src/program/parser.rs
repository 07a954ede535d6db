use std::collections::BTreeSet;

use crate::terms::{parse_with, Signature, Term, Type, VarTypes};

use super::{Key, ProgExpr, ProgramError, Tactic, TacticProgram, RESERVED};

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
    sig: &'a Signature,
    seeds: VarTypes,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

impl<'a> Scanner<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ProgramError> {
        Err(ProgramError::Syntax { pos: self.pos, message: message.into() })
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.ws();
        self.pos == self.src.len()
    }

    fn peek_str(&mut self, s: &str) -> bool {
        self.ws();
        self.rest().starts_with(s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek_str(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ProgramError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn peek_word(&mut self) -> Option<&'a str> {
        self.ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !is_ident_char(c)).unwrap_or(rest.len());
        (end > 0).then(|| &rest[..end])
    }

    fn word(&mut self) -> Result<&'a str, ProgramError> {
        match self.peek_word() {
            Some(w) => {
                self.pos += w.len();
                Ok(w)
            }
            None => self.err("expected identifier"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ProgramError> {
        if self.peek_word() == Some(kw) {
            self.pos += kw.len();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    /// Source extent of a term: up to a top-level `@@`, `in`, closing
    /// bracket, or (when `comma` is set) comma.
    fn term_extent(&mut self, comma: bool) -> (usize, usize) {
        self.ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut depth = 0usize;
        let mut i = start;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' | b'}' => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                b',' if depth == 0 && comma => break,
                b'@' if depth == 0 && bytes.get(i + 1) == Some(&b'@') => break,
                b'i' if depth == 0 && self.src[i..].starts_with("in") => {
                    let before = self.src[..i].chars().next_back().map(is_ident_char).unwrap_or(false);
                    let after = self.src[i + 2..].chars().next().map(is_ident_char).unwrap_or(false);
                    if !before && !after {
                        break;
                    }
                }
                _ => {}
            }
            i += 1;
        }
        let mut end = i;
        while end > start && self.src.as_bytes()[end - 1].is_ascii_whitespace() {
            end -= 1;
        }
        self.pos = i;
        (start, end)
    }

    fn term(&mut self, comma: bool) -> Result<Term, ProgramError> {
        let (start, end) = self.term_extent(comma);
        if start == end {
            return Err(ProgramError::Syntax { pos: start, message: "expected term".into() });
        }
        parse_with(&self.src[start..end], self.sig, &self.seeds)
            .map(|t| t.stripped())
            .map_err(|e| ProgramError::Term { pos: start + e.offset().unwrap_or(0), source: e })
    }

    fn key(&mut self) -> Result<Key, ProgramError> {
        self.expect("[")?;
        let mut out = Vec::new();
        if self.eat("]") {
            return Ok(out);
        }
        loop {
            if self.peek_str("\"") {
                self.pos += 1;
                let rest = self.rest();
                let Some(end) = rest.find('"') else { return self.err("unterminated string") };
                out.push(rest[..end].to_string());
                self.pos += end + 1;
            } else {
                out.push(self.word()?.to_string());
            }
            if self.eat("]") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn inst_pair(&mut self) -> Result<(String, Term), ProgramError> {
        self.expect("(")?;
        let name = self.word()?.to_string();
        self.expect(",")?;
        let value = self.term(true)?;
        self.expect(")")?;
        Ok((name, value))
    }

    fn tactic(&mut self, head: &str) -> Result<Option<Tactic>, ProgramError> {
        let t = match head {
            "Take" => Tactic::Take(self.term(false)?),
            "Substitute" => Tactic::Substitute(self.term(false)?),
            "Rewrite" => {
                let rule = self.word()?.to_string();
                let mut inst = Vec::new();
                if self.peek_word() == Some("with") {
                    self.pos += 4;
                    inst.push(self.inst_pair()?);
                    while self.peek_str(",") {
                        self.pos += 1;
                        inst.push(self.inst_pair()?);
                    }
                }
                Tactic::Rewrite { rule, inst }
            }
            "Rewrite_Set" => Tactic::RewriteSet { set: self.word()?.to_string(), inst: Vec::new() },
            "Rewrite_Set_Inst" => {
                self.expect("(")?;
                self.expect("[")?;
                let mut inst = vec![self.inst_pair()?];
                while self.eat(",") {
                    inst.push(self.inst_pair()?);
                }
                self.expect("]")?;
                self.expect(",")?;
                let set = self.word()?.to_string();
                self.expect(")")?;
                Tactic::RewriteSet { set, inst }
            }
            "solveSystem" => {
                self.expect("(")?;
                let equations = self.term(true)?;
                self.expect(",")?;
                let unknowns = self.term(true)?;
                self.expect(")")?;
                Tactic::SolveSystem { equations, unknowns }
            }
            "SubProblem" => {
                self.expect("(")?;
                let theory = self.word()?.to_string();
                self.expect(",")?;
                let problem = self.key()?;
                self.expect(",")?;
                let method = self.key()?;
                self.expect(",")?;
                self.expect("[")?;
                let mut args = Vec::new();
                if !self.eat("]") {
                    loop {
                        args.push(self.term(true)?);
                        if self.eat("]") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                self.expect(")")?;
                Tactic::SubProblem { theory, problem, method, args }
            }
            _ => return Ok(None),
        };
        Ok(Some(t))
    }

    fn expr(&mut self) -> Result<ProgExpr, ProgramError> {
        if self.peek_word() == Some("let") {
            self.pos += 3;
            let name = self.word()?.to_string();
            self.expect("=")?;
            let value = self.expr()?;
            self.keyword("in")?;
            let body = self.expr()?;
            return Ok(ProgExpr::Let { name, value: Box::new(value), body: Box::new(body) });
        }
        let mut e = self.atom()?;
        while self.eat("@@") {
            let next = self.atom()?;
            e = ProgExpr::Seq(Box::new(e), Box::new(next));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<ProgExpr, ProgramError> {
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        if self.peek_word() == Some("let") {
            return self.expr();
        }
        let start = self.pos;
        let head = self.word()?;
        if RESERVED.contains(&head) {
            return Err(ProgramError::Reserved(head.to_string()));
        }
        match self.tactic(head)? {
            Some(t) => Ok(ProgExpr::Tactic(t)),
            None if head.starts_with(|c: char| c.is_lowercase()) => Ok(ProgExpr::Ref(head.to_string())),
            None => Err(ProgramError::Syntax { pos: start, message: format!("unknown tactic `{head}`") }),
        }
    }
}

fn check_bound(e: &ProgExpr, scope: &mut Vec<String>) -> Result<(), ProgramError> {
    match e {
        ProgExpr::Seq(a, b) => {
            check_bound(a, scope)?;
            check_bound(b, scope)
        }
        ProgExpr::Let { name, value, body } => {
            check_bound(value, scope)?;
            scope.push(name.clone());
            let r = check_bound(body, scope);
            scope.pop();
            r
        }
        ProgExpr::Ref(n) if !scope.contains(n) => Err(ProgramError::Unbound(n.clone())),
        _ => Ok(()),
    }
}

pub fn parse_program(text: &str, sig: &Signature) -> Result<TacticProgram, ProgramError> {
    let mut s = Scanner { src: text, pos: 0, sig, seeds: VarTypes::new() };
    s.keyword("program")?;
    let name = s.word()?.to_string();
    s.expect("(")?;
    let mut params = Vec::new();
    let mut seen = BTreeSet::new();
    if !s.eat(")") {
        loop {
            let p = s.word()?.to_string();
            s.expect(":")?;
            let (start, end) = s.term_extent(true);
            let ty = Type::parse(&text[start..end])
                .map_err(|m| ProgramError::Syntax { pos: start, message: m })?;
            if !seen.insert(p.clone()) {
                return Err(ProgramError::Syntax { pos: start, message: format!("duplicate parameter `{p}`") });
            }
            params.push((p, ty));
            if s.eat(")") {
                break;
            }
            s.expect(",")?;
        }
    }
    s.seeds = params.iter().cloned().collect();
    s.keyword("where")?;
    let guard = s.key()?;
    s.expect("=")?;
    let body = s.expr()?;
    if !s.at_end() {
        return s.err("unexpected trailing input");
    }
    let mut scope: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
    check_bound(&body, &mut scope)?;
    Ok(TacticProgram { name, params, guard, body })
}

/// Parses a single tactic as typed by a user.
pub fn parse_tactic(text: &str, sig: &Signature) -> Result<Tactic, ProgramError> {
    let mut s = Scanner { src: text, pos: 0, sig, seeds: VarTypes::new() };
    let start = s.pos;
    let head = s.word()?;
    let t = match s.tactic(head)? {
        Some(t) => t,
        None => return Err(ProgramError::Syntax { pos: start, message: format!("unknown tactic `{head}`") }),
    };
    if !s.at_end() {
        return s.err("unexpected trailing input");
    }
    Ok(t)
}
