use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Role, PROB_TOLERANCE};
use crate::idiom::IdiomId;

use super::codes::*;
use super::{
    format_number, CptDecl, CptRow, Decl, Declaration, Diagnostic, EdgeDecl, IdiomDecl, ModelDocument, Pos,
    SlotBinding, VariableDecl,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Semi,
    Comma,
    Arrow,
    FatArrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {}", format_number(*n)),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

#[derive(Debug, Clone)]
struct Comment {
    pos: Pos,
    text: String,
    own_line: bool,
}

struct Lexed {
    tokens: Vec<Token>,
    comments: Vec<Comment>,
    diagnostics: Vec<Diagnostic>,
}

fn lex(src: &str) -> Lexed {
    let mut tokens = Vec::new();
    let mut comments = Vec::new();
    let mut diagnostics = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut line_has_token = false;

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos::new(line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                line_has_token = false;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '#' => {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && chars[end] != '\n' {
                    end += 1;
                }
                let text: String = chars[start..end].iter().collect();
                comments.push(Comment {
                    pos,
                    text: text.trim_end().to_string(),
                    own_line: !line_has_token,
                });
                advance(end - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = i;
                while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '_') {
                    end += 1;
                }
                tokens.push(Token {
                    tok: Tok::Ident(chars[i..end].iter().collect()),
                    pos,
                });
                line_has_token = true;
                advance(end - i, &mut i, &mut col);
            }
            c if c.is_ascii_digit()
                || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
                || (c == '-'
                    && chars
                        .get(i + 1)
                        .is_some_and(|n| n.is_ascii_digit() || *n == '.')) =>
            {
                let mut end = i + 1;
                let mut seen_dot = c == '.';
                while end < chars.len() {
                    let d = chars[end];
                    if d.is_ascii_digit() {
                        end += 1;
                    } else if d == '.' && !seen_dot && chars.get(end + 1).is_some_and(char::is_ascii_digit) {
                        seen_dot = true;
                        end += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[i..end].iter().collect();
                match text.parse::<f64>() {
                    Ok(v) => tokens.push(Token {
                        tok: Tok::Number(v),
                        pos,
                    }),
                    Err(_) => diagnostics.push(Diagnostic::error(pos, LEXICAL, format!("malformed number `{text}`"))),
                }
                line_has_token = true;
                advance(end - i, &mut i, &mut col);
            }
            _ => {
                let two = (c, chars.get(i + 1).copied());
                let (tok, width) = match two {
                    ('-', Some('>')) => (Some(Tok::Arrow), 2),
                    ('=', Some('>')) => (Some(Tok::FatArrow), 2),
                    ('{', _) => (Some(Tok::LBrace), 1),
                    ('}', _) => (Some(Tok::RBrace), 1),
                    ('(', _) => (Some(Tok::LParen), 1),
                    (')', _) => (Some(Tok::RParen), 1),
                    ('[', _) => (Some(Tok::LBracket), 1),
                    (']', _) => (Some(Tok::RBracket), 1),
                    (':', _) => (Some(Tok::Colon), 1),
                    (';', _) => (Some(Tok::Semi), 1),
                    (',', _) => (Some(Tok::Comma), 1),
                    _ => (None, 1),
                };
                match tok {
                    Some(tok) => {
                        tokens.push(Token { tok, pos });
                        line_has_token = true;
                    }
                    None => diagnostics.push(Diagnostic::error(pos, LEXICAL, format!("unexpected character {c:?}"))),
                }
                advance(width, &mut i, &mut col);
            }
        }
    }
    let eof = tokens.last().map_or(Pos::new(1, 1), |t| t.pos);
    tokens.push(Token { tok: Tok::Eof, pos: eof });
    Lexed {
        tokens,
        comments,
        diagnostics,
    }
}

const KEYWORDS: [&str; 4] = ["variable", "idiom", "edge", "cpt"];

/// Error already recorded as a diagnostic.
struct Failed;

type PResult<T> = Result<T, Failed>;

struct Parser {
    tokens: Vec<Token>,
    i: usize,
    depth: usize,
    diagnostics: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.i]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.i].clone();
        match t.tok {
            Tok::LBrace => self.depth += 1,
            Tok::RBrace => self.depth = self.depth.saturating_sub(1),
            Tok::Eof => return t,
            _ => {}
        }
        self.i += 1;
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek().tok == *tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn fail<T>(&mut self, what: &str) -> PResult<T> {
        let t = self.peek().clone();
        self.diagnostics.push(Diagnostic::error(
            t.pos,
            SYNTAX,
            format!("expected {what}, found {}", t.tok.describe()),
        ));
        Err(Failed)
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if self.at(&tok) {
            Ok(self.bump().pos)
        } else {
            self.fail(&tok.describe())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().pos))
            }
            _ => self.fail(what),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek().tok {
            Tok::Number(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.fail("a probability"),
        }
    }

    fn at_keyword(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if KEYWORDS.contains(&s.as_str()))
    }

    /// Skips to the start of the next declaration.
    fn recover(&mut self, start_depth: usize) {
        let start = self.i;
        loop {
            if self.at(&Tok::Eof) {
                return;
            }
            if self.depth == start_depth && self.at_keyword() && self.i > start {
                return;
            }
            let t = self.bump();
            if t.tok == Tok::RBrace && self.depth == start_depth {
                self.eat(&Tok::Semi);
                return;
            }
        }
    }

    fn comma_list<T>(&mut self, item: impl Fn(&mut Self) -> PResult<T>, close: &Tok) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        if self.at(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    /// `a, b, c` terminated by `;` or `}` (not consumed).
    fn open_list<T>(&mut self, item: impl Fn(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = vec![item(self)?];
        while self.eat(&Tok::Comma) {
            out.push(item(self)?);
        }
        Ok(out)
    }

    /// `;` between fields, optional before `}`.
    fn field_end(&mut self) -> PResult<bool> {
        if self.eat(&Tok::Semi) {
            return Ok(self.eat(&Tok::RBrace));
        }
        if self.eat(&Tok::RBrace) {
            return Ok(true);
        }
        self.fail("`;` or `}`")
    }

    fn variable(&mut self) -> PResult<Decl> {
        let (name, _) = self.ident("a variable name")?;
        let open = self.expect(Tok::LBrace)?;
        let mut states: Option<Vec<String>> = None;
        let mut role: Option<Role> = None;
        if !self.eat(&Tok::RBrace) {
            loop {
                let (field, pos) = self.ident("`states` or `role`")?;
                self.expect(Tok::Colon)?;
                match field.as_str() {
                    "states" => {
                        let list = self.open_list(|p| p.ident("a state name").map(|s| s.0))?;
                        if states.replace(list).is_some() {
                            self.diagnostics
                                .push(Diagnostic::error(pos, DUPLICATE, format!("`{name}` declares states twice")));
                        }
                    }
                    "role" => {
                        let (word, rpos) = self.ident("a role")?;
                        let parsed = Role::from_keyword(&word);
                        if parsed.is_none() {
                            self.diagnostics
                                .push(Diagnostic::error(rpos, UNKNOWN_ROLE, format!("unknown role `{word}`")));
                        }
                        if role.replace(parsed.unwrap_or(Role::Unclassified)).is_some() {
                            self.diagnostics
                                .push(Diagnostic::error(pos, DUPLICATE, format!("`{name}` declares a role twice")));
                        }
                    }
                    other => {
                        self.diagnostics.push(Diagnostic::error(
                            pos,
                            SYNTAX,
                            format!("unknown variable field `{other}`"),
                        ));
                        return Err(Failed);
                    }
                }
                if self.field_end()? {
                    break;
                }
            }
        }
        self.eat(&Tok::Semi);
        let (Some(states), Some(role)) = (states, role) else {
            self.diagnostics.push(Diagnostic::error(
                open,
                SYNTAX,
                format!("variable `{name}` needs both `states` and `role`"),
            ));
            return Err(Failed);
        };
        Ok(Decl::Variable(VariableDecl { name, states, role }))
    }

    fn idiom(&mut self) -> PResult<Option<Decl>> {
        let (keyword, tpos) = self.ident("an idiom template")?;
        let template = IdiomId::from_keyword(&keyword);
        if template.is_none() {
            self.diagnostics.push(Diagnostic::error(
                tpos,
                UNKNOWN_TEMPLATE,
                format!("unknown idiom template `{keyword}`"),
            ));
        }
        let (name, _) = self.ident("an idiom instance name")?;
        self.expect(Tok::LBrace)?;
        let mut bindings: Vec<SlotBinding> = Vec::new();
        if !self.eat(&Tok::RBrace) {
            loop {
                let (slot, pos) = self.ident("a slot name")?;
                self.expect(Tok::Colon)?;
                let variables = if self.eat(&Tok::LBracket) {
                    let list = self.comma_list(|p| p.ident("a variable name").map(|s| s.0), &Tok::RBracket)?;
                    self.expect(Tok::RBracket)?;
                    list
                } else {
                    vec![self.ident("a variable name or `[`")?.0]
                };
                if let Some(t) = template {
                    if t.template().slot(&slot).is_none() {
                        self.diagnostics.push(Diagnostic::error(
                            pos,
                            UNKNOWN_SLOT,
                            format!("idiom template `{}` has no slot `{slot}`", t.keyword()),
                        ));
                    }
                }
                if bindings.iter().any(|b| b.slot == slot) {
                    self.diagnostics.push(Diagnostic::error(
                        pos,
                        DUPLICATE,
                        format!("slot `{slot}` bound twice in idiom `{name}`"),
                    ));
                }
                bindings.push(SlotBinding { slot, variables, pos });
                if self.field_end()? {
                    break;
                }
            }
        }
        self.eat(&Tok::Semi);
        Ok(template.map(|template| {
            Decl::Idiom(IdiomDecl {
                template,
                name,
                bindings,
            })
        }))
    }

    fn edge(&mut self) -> PResult<Decl> {
        let (from, _) = self.ident("a variable name")?;
        let decision = match self.peek().tok {
            Tok::Arrow => false,
            Tok::FatArrow => true,
            _ => return self.fail("`->` or `=>`"),
        };
        self.bump();
        let (to, _) = self.ident("a variable name")?;
        self.eat(&Tok::Semi);
        Ok(Decl::Edge(EdgeDecl { from, to, decision }))
    }

    fn cpt(&mut self) -> PResult<Decl> {
        let (child, _) = self.ident("a variable name")?;
        let mut parents = Vec::new();
        let given = matches!(&self.peek().tok, Tok::Ident(s) if s == "given");
        if given {
            self.bump();
            self.expect(Tok::LParen)?;
            parents = self.comma_list(|p| p.ident("a parent name").map(|s| s.0), &Tok::RParen)?;
            self.expect(Tok::RParen)?;
            if parents.is_empty() {
                return self.fail("at least one parent");
            }
        }
        self.expect(Tok::LBrace)?;
        let mut rows = Vec::new();
        if !self.eat(&Tok::RBrace) {
            loop {
                let (word, pos) = self.ident("`row` or `prior`")?;
                let key = match (word.as_str(), given) {
                    ("row", true) => {
                        self.expect(Tok::LParen)?;
                        let key = self.comma_list(|p| p.ident("a state name").map(|s| s.0), &Tok::RParen)?;
                        self.expect(Tok::RParen)?;
                        key
                    }
                    ("prior", false) => Vec::new(),
                    ("row", false) => {
                        self.diagnostics.push(Diagnostic::error(
                            pos,
                            SYNTAX,
                            format!("`{child}` has no parents; use `prior:`"),
                        ));
                        return Err(Failed);
                    }
                    ("prior", true) => {
                        self.diagnostics.push(Diagnostic::error(
                            pos,
                            SYNTAX,
                            format!("`{child}` has parents; use `row(...)`"),
                        ));
                        return Err(Failed);
                    }
                    _ => {
                        self.diagnostics.push(Diagnostic::error(
                            pos,
                            SYNTAX,
                            format!("expected `row` or `prior`, found `{word}`"),
                        ));
                        return Err(Failed);
                    }
                };
                self.expect(Tok::Colon)?;
                let probabilities = self.open_list(Parser::number)?;
                rows.push(CptRow {
                    given: key,
                    probabilities,
                    pos,
                });
                if self.field_end()? {
                    break;
                }
            }
        }
        self.eat(&Tok::Semi);
        Ok(Decl::Cpt(CptDecl { child, parents, rows }))
    }
}

/// Parses a model, collecting every diagnostic instead of stopping at the
/// first one. Names are resolved after the whole file is read, so
/// declarations may appear in any order.
pub fn parse(src: &str) -> Result<ModelDocument, Vec<Diagnostic>> {
    let Lexed {
        tokens,
        comments,
        diagnostics,
    } = lex(src);
    let mut p = Parser {
        tokens,
        i: 0,
        depth: 0,
        diagnostics,
    };
    // (declaration, end position)
    let mut decls: Vec<(Declaration, Pos)> = Vec::new();
    while !p.at(&Tok::Eof) {
        let start = p.peek().clone();
        let depth = p.depth;
        let keyword = match &start.tok {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => {
                let _ = p.fail::<()>("`variable`, `idiom`, `edge` or `cpt`");
                p.recover(depth);
                continue;
            }
        };
        p.bump();
        let result = match keyword.as_str() {
            "variable" => p.variable().map(Some),
            "idiom" => p.idiom(),
            "edge" => p.edge().map(Some),
            _ => p.cpt().map(Some),
        };
        match result {
            Ok(Some(body)) => {
                let end = p.tokens[p.i.saturating_sub(1)].pos;
                decls.push((
                    Declaration {
                        pos: start.pos,
                        comments: Vec::new(),
                        body,
                    },
                    end,
                ));
            }
            Ok(None) => {}
            Err(Failed) => p.recover(depth),
        }
    }

    let mut doc = ModelDocument::default();
    attach_comments(src, comments, &mut decls, &mut doc);
    doc.declarations = decls.into_iter().map(|(d, _)| d).collect();

    let mut diagnostics = p.diagnostics;
    diagnostics.extend(resolve(&doc));
    if diagnostics.iter().any(Diagnostic::is_error) {
        diagnostics.sort_by_key(|d| (d.line, d.column));
        Err(diagnostics)
    } else {
        Ok(doc)
    }
}

fn attach_comments(src: &str, comments: Vec<Comment>, decls: &mut [(Declaration, Pos)], doc: &mut ModelDocument) {
    let lines: Vec<&str> = src.lines().collect();
    let blank = |line: usize| lines.get(line - 1).is_none_or(|l| l.trim().is_empty());
    let first_decl = decls.first().map(|(d, _)| d.pos.line).unwrap_or(usize::MAX);

    // Leading comments up to the last blank line before the first declaration.
    let leading: Vec<&Comment> = comments.iter().take_while(|c| c.pos.line < first_decl).collect();
    let header_len = leading
        .iter()
        .enumerate()
        .filter(|(_, c)| blank(c.pos.line + 1) || decls.is_empty())
        .map(|(i, _)| i + 1)
        .next_back()
        .unwrap_or(0);
    doc.header = leading[..header_len].iter().map(|c| c.text.clone()).collect();

    for c in comments.into_iter().skip(header_len) {
        // A trailing comment on the line where a declaration ends belongs to it.
        let same_line = decls
            .iter()
            .position(|(_, end)| !c.own_line && end.line == c.pos.line && *end < c.pos);
        let target = same_line.or_else(|| decls.iter().position(|(_, end)| *end >= c.pos));
        match target {
            Some(i) => decls[i].0.comments.push(c.text),
            None => doc.trailer.push(c.text),
        }
    }
}

/// Second pass: name resolution and CPT shape checks.
fn resolve(doc: &ModelDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut vars: BTreeMap<&str, &VariableDecl> = BTreeMap::new();
    for d in &doc.declarations {
        if let Decl::Variable(v) = &d.body {
            if vars.insert(&v.name, v).is_some() {
                out.push(Diagnostic::error(d.pos, DUPLICATE, format!("duplicate variable `{}`", v.name)));
            }
            if v.states.len() < 2 {
                out.push(Diagnostic::error(
                    d.pos,
                    INVALID_STATES,
                    format!("variable `{}` needs at least two states", v.name),
                ));
            }
            let mut seen = BTreeSet::new();
            for s in &v.states {
                if !seen.insert(s) {
                    out.push(Diagnostic::error(
                        d.pos,
                        INVALID_STATES,
                        format!("variable `{}` repeats state `{s}`", v.name),
                    ));
                }
            }
        }
    }
    let unknown = |pos: Pos, name: &str, context: &str| {
        Diagnostic::error(pos, UNKNOWN_VARIABLE, format!("unknown variable `{name}` in {context}"))
    };

    let mut idiom_names = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut cpts = BTreeSet::new();
    for d in &doc.declarations {
        match &d.body {
            Decl::Variable(_) => {}
            Decl::Idiom(i) => {
                if !idiom_names.insert(&i.name) {
                    out.push(Diagnostic::error(d.pos, DUPLICATE, format!("duplicate idiom `{}`", i.name)));
                }
                for b in &i.bindings {
                    for v in &b.variables {
                        if !vars.contains_key(v.as_str()) {
                            out.push(unknown(b.pos, v, &format!("idiom `{}`", i.name)));
                        }
                    }
                }
            }
            Decl::Edge(e) => {
                for v in [&e.from, &e.to] {
                    if !vars.contains_key(v.as_str()) {
                        out.push(unknown(d.pos, v, "edge"));
                    }
                }
                if !edges.insert((&e.from, &e.to)) {
                    out.push(Diagnostic::error(
                        d.pos,
                        DUPLICATE,
                        format!("duplicate edge {} -> {}", e.from, e.to),
                    ));
                }
            }
            Decl::Cpt(c) => {
                if !cpts.insert(&c.child) {
                    out.push(Diagnostic::error(d.pos, DUPLICATE, format!("duplicate CPT for `{}`", c.child)));
                }
                out.extend(check_cpt(d.pos, c, &vars));
            }
        }
    }
    out
}

fn check_cpt(pos: Pos, c: &CptDecl, vars: &BTreeMap<&str, &VariableDecl>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let child = vars.get(c.child.as_str());
    if child.is_none() {
        out.push(Diagnostic::error(
            pos,
            UNKNOWN_VARIABLE,
            format!("CPT for unknown variable `{}`", c.child),
        ));
    }
    let mut parents = Vec::new();
    let mut parents_ok = true;
    for (k, p) in c.parents.iter().enumerate() {
        if c.parents[..k].contains(p) {
            out.push(Diagnostic::error(
                pos,
                DUPLICATE,
                format!("CPT for `{}` lists parent `{p}` twice", c.child),
            ));
            parents_ok = false;
        }
        match vars.get(p.as_str()) {
            Some(v) => parents.push(*v),
            None => {
                out.push(Diagnostic::error(
                    pos,
                    UNKNOWN_VARIABLE,
                    format!("unknown variable `{p}` in CPT for `{}`", c.child),
                ));
                parents_ok = false;
            }
        }
    }

    let label = |row: &CptRow| {
        if c.parents.is_empty() {
            "prior".to_string()
        } else {
            format!("row({})", row.given.join(", "))
        }
    };
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for row in &c.rows {
        if let Some(child) = child {
            if row.probabilities.len() != child.states.len() {
                out.push(Diagnostic::error(
                    row.pos,
                    ROW_SHAPE,
                    format!(
                        "{} of `{}` has {} entries, expected {}",
                        label(row),
                        c.child,
                        row.probabilities.len(),
                        child.states.len()
                    ),
                ));
            }
        }
        let mut in_range = true;
        for &q in &row.probabilities {
            if !(0.0..=1.0).contains(&q) {
                in_range = false;
                out.push(Diagnostic::error(
                    row.pos,
                    ROW_SHAPE,
                    format!("{} of `{}` has entry {} outside [0, 1]", label(row), c.child, format_number(q)),
                ));
            }
        }
        let sum: f64 = row.probabilities.iter().sum();
        if in_range && (sum - 1.0).abs() > PROB_TOLERANCE {
            out.push(Diagnostic::error(
                row.pos,
                ROW_SUM,
                format!("row sum {} at {} of `{}`", format_number(sum), label(row), c.child),
            ));
        }
        if !parents_ok {
            continue;
        }
        if row.given.len() != parents.len() {
            out.push(Diagnostic::error(
                row.pos,
                ROW_SHAPE,
                format!(
                    "{} of `{}` names {} parent state(s), expected {}",
                    label(row),
                    c.child,
                    row.given.len(),
                    parents.len()
                ),
            ));
            continue;
        }
        let mut key = Vec::with_capacity(parents.len());
        for (state, parent) in row.given.iter().zip(&parents) {
            match parent.states.iter().position(|s| s == state) {
                Some(i) => key.push(i),
                None => out.push(Diagnostic::error(
                    row.pos,
                    UNKNOWN_STATE,
                    format!("`{}` has no state `{state}`", parent.name),
                )),
            }
        }
        if key.len() == parents.len() && !seen.insert(key) {
            out.push(Diagnostic::error(
                row.pos,
                DUPLICATE_ROW,
                format!("{} of `{}` appears twice", label(row), c.child),
            ));
        }
    }

    if parents_ok {
        let mut missing = Vec::new();
        let cards: Vec<usize> = parents.iter().map(|p| p.states.len()).collect();
        let total: usize = cards.iter().product();
        if seen.len() < total {
            let mut digits = vec![0usize; cards.len()];
            for _ in 0..total {
                if !seen.contains(&digits) {
                    let names: Vec<&str> = digits
                        .iter()
                        .zip(&parents)
                        .map(|(d, p)| p.states[*d].as_str())
                        .collect();
                    missing.push(if names.is_empty() {
                        "prior".to_string()
                    } else {
                        format!("row({})", names.join(", "))
                    });
                }
                for k in (0..digits.len()).rev() {
                    digits[k] += 1;
                    if digits[k] < cards[k] {
                        break;
                    }
                    digits[k] = 0;
                }
            }
        }
        if !missing.is_empty() {
            out.push(Diagnostic::error(
                pos,
                MISSING_ROW,
                format!("CPT for `{}` is missing {}", c.child, missing.join(", ")),
            ));
        }
    }
    out
}
