//! Builtin C/C++ symbol extraction: a small lexer plus a file-scope
//! declaration scanner with brace matching. Used when no tags stream is
//! supplied.

use super::{CodeSymbol, SymbolKind};
use crate::text::one_line;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Ident,
    Punct,
    Str,
    Num,
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    text: String,
    line: usize,
}

impl Tok {
    fn is(&self, p: &str) -> bool {
        self.text == p && self.kind != TokKind::Str
    }
    fn ident(&self) -> bool {
        self.kind == TokKind::Ident
    }
}

struct Directive {
    line_start: usize,
    line_end: usize,
    text: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub symbols: Vec<CodeSymbol>,
    pub warnings: Vec<String>,
}

const NOT_A_FUNCTION: &[&str] = &[
    "if",
    "while",
    "for",
    "switch",
    "return",
    "sizeof",
    "defined",
    "__attribute__",
    "alignof",
    "_Alignof",
    "decltype",
    "static_assert",
    "_Static_assert",
];

fn lex(src: &str) -> (Vec<Tok>, Vec<Directive>) {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut dirs = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut at_line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            at_line_start = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                if chars[i] == '\n' {
                    line += 1;
                }
                i += 1;
            }
            i = (i + 2).min(chars.len());
            continue;
        }
        if c == '#' && at_line_start {
            let start_line = line;
            let mut text = String::new();
            while i < chars.len() {
                if chars[i] == '\\' && chars.get(i + 1) == Some(&'\n') {
                    text.push(' ');
                    line += 1;
                    i += 2;
                    continue;
                }
                if chars[i] == '\n' {
                    break;
                }
                if chars[i] == '/' && chars.get(i + 1) == Some(&'*') {
                    i += 2;
                    while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                        if chars[i] == '\n' {
                            line += 1;
                        }
                        i += 1;
                    }
                    i = (i + 2).min(chars.len());
                    text.push(' ');
                    continue;
                }
                if chars[i] == '/' && chars.get(i + 1) == Some(&'/') {
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                    break;
                }
                text.push(chars[i]);
                i += 1;
            }
            dirs.push(Directive {
                line_start: start_line,
                line_end: line,
                text,
            });
            continue;
        }
        at_line_start = false;
        if c == '"' || c == '\'' {
            let start_line = line;
            i += 1;
            while i < chars.len() && chars[i] != c {
                if chars[i] == '\\' {
                    i += 1;
                }
                if chars.get(i) == Some(&'\n') {
                    line += 1;
                }
                i += 1;
            }
            i += 1;
            toks.push(Tok {
                kind: TokKind::Str,
                text: String::new(),
                line: start_line,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push(Tok {
                kind: TokKind::Ident,
                text: chars[s..i].iter().collect(),
                line,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '.' || chars[i] == '\'')
            {
                i += 1;
            }
            toks.push(Tok {
                kind: TokKind::Num,
                text: chars[s..i].iter().collect(),
                line,
            });
            continue;
        }
        toks.push(Tok {
            kind: TokKind::Punct,
            text: c.to_string(),
            line,
        });
        i += 1;
    }
    (toks, dirs)
}

/// Index of the matching `}` for the `{` at `open`, or None at EOF.
fn match_brace(toks: &[Tok], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (j, t) in toks.iter().enumerate().skip(open) {
        if t.is("{") {
            depth += 1;
        } else if t.is("}") {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

/// Removes `__attribute__((...))` groups.
fn strip_attributes(stmt: &[Tok]) -> Vec<Tok> {
    let mut out = Vec::with_capacity(stmt.len());
    let mut i = 0;
    while i < stmt.len() {
        if stmt[i].is("__attribute__") && stmt.get(i + 1).is_some_and(|t| t.is("(")) {
            let mut depth = 0;
            i += 1;
            while i < stmt.len() {
                if stmt[i].is("(") {
                    depth += 1;
                } else if stmt[i].is(")") {
                    depth -= 1;
                    if depth == 0 {
                        i += 1;
                        break;
                    }
                }
                i += 1;
            }
            continue;
        }
        out.push(stmt[i].clone());
        i += 1;
    }
    out
}

/// Index of `=` at paren/bracket depth 0.
fn top_level_assign(stmt: &[Tok]) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in stmt.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" if t.kind == TokKind::Punct => depth += 1,
            ")" | "]" if t.kind == TokKind::Punct => depth -= 1,
            "=" if t.kind == TokKind::Punct && depth == 0 => {
                let next_eq = stmt.get(i + 1).is_some_and(|n| n.is("="));
                let prev_op = i > 0
                    && stmt[i - 1].kind == TokKind::Punct
                    && matches!(stmt[i - 1].text.as_str(), "=" | "!" | "<" | ">");
                if !next_eq && !prev_op {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Position of the first top-level `(` preceded by a plausible function name.
fn call_paren(stmt: &[Tok]) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in stmt.iter().enumerate() {
        if t.is("(") {
            if depth == 0 {
                let named = i >= 2
                    && stmt[i - 1].ident()
                    && !NOT_A_FUNCTION.contains(&stmt[i - 1].text.as_str());
                return named.then_some(i);
            }
            depth += 1;
        } else if t.is(")") {
            depth -= 1;
        } else if t.is("[") {
            depth += 1;
        } else if t.is("]") {
            depth -= 1;
        }
    }
    None
}

fn aggregate_keyword(stmt: &[Tok]) -> Option<usize> {
    // a keyword inside a parameter list only names a type
    if stmt.iter().any(|t| t.is("(")) {
        return None;
    }
    stmt.iter()
        .position(|t| t.is("struct") || t.is("union") || t.is("enum") || t.is("class"))
}

/// First identifier of each comma-separated declarator.
fn declarator_names(toks: &[Tok]) -> Vec<&Tok> {
    let mut names = Vec::new();
    let mut depth = 0i32;
    let mut taken = false;
    for t in toks {
        match t.text.as_str() {
            "(" | "[" if t.kind == TokKind::Punct => depth += 1,
            ")" | "]" if t.kind == TokKind::Punct => depth -= 1,
            "," if t.kind == TokKind::Punct && depth <= 0 => taken = false,
            _ => {
                if t.ident() && !taken && !matches!(t.text.as_str(), "const" | "volatile") {
                    names.push(t);
                    taken = true;
                }
            }
        }
    }
    names
}

/// Name introduced by a plain `typedef ... ;` statement.
fn typedef_name(stmt: &[Tok]) -> Option<&Tok> {
    // function pointer: typedef R (*name)(args);
    for w in stmt.windows(3) {
        if w[0].is("(") && w[1].is("*") && w[2].ident() {
            return Some(&w[2]);
        }
    }
    let mut depth = 0i32;
    let mut last = None;
    for t in stmt {
        if t.is("[") || t.is("(") {
            depth += 1;
        } else if t.is("]") || t.is(")") {
            depth -= 1;
        } else if depth == 0 && t.ident() {
            last = Some(t);
        }
    }
    last
}

struct Scanner<'a> {
    file: &'a str,
    lines: Vec<&'a str>,
    out: Extraction,
}

impl Scanner<'_> {
    fn signature(&self, from: usize, to: usize) -> String {
        let from = from.clamp(1, self.lines.len().max(1));
        let to = to.clamp(from, self.lines.len().max(1));
        let text = self
            .lines
            .get(from - 1..to)
            .map(|l| l.join(" "))
            .unwrap_or_default();
        let text = one_line(&text);
        let cut = text.find('{').unwrap_or(text.len());
        text[..cut].trim().trim_end_matches(';').trim().to_string()
    }

    fn push(&mut self, name: &str, kind: SymbolKind, start: usize, end: usize, sig_from: usize) {
        let signature = self.signature(sig_from, start.max(sig_from));
        self.out.symbols.push(CodeSymbol {
            name: name.to_string(),
            kind,
            file: self.file.to_string(),
            line_start: start,
            line_end: end.max(start),
            signature,
            declaration: false,
        });
    }

    fn aggregate(&mut self, stmt: &[Tok], k: usize, body_open: usize, toks: &[Tok]) -> usize {
        let close = match_brace(toks, body_open);
        let last_line = toks.last().map_or(1, |t| t.line);
        let close_line = close.map_or(last_line, |c| toks[c].line);
        if close.is_none() {
            self.out.warnings.push(format!(
                "unbalanced braces: aggregate at line {} closed at EOF",
                stmt[k].line
            ));
        }
        let keyword = stmt[k].text.as_str();
        let mut tag_idx = k + 1;
        if keyword == "enum"
            && stmt
                .get(tag_idx)
                .is_some_and(|t| t.is("class") || t.is("struct"))
        {
            tag_idx += 1;
        }
        let tag = stmt.get(tag_idx).filter(|t| t.ident()).cloned();

        // trailing declarators up to ';'
        let mut j = close.map_or(toks.len(), |c| c + 1);
        let decl_start = j;
        while j < toks.len() && !toks[j].is(";") {
            j += 1;
        }
        let end_line = toks.get(j).map_or(close_line, |t| t.line);
        let declarators = declarator_names(&toks[decl_start.min(toks.len())..j.min(toks.len())]);
        let is_typedef = stmt.iter().any(|t| t.is("typedef"));
        let stmt_line = stmt[0].line;

        let kind = match keyword {
            "struct" | "class" => Some(SymbolKind::Struct),
            "enum" => Some(SymbolKind::Enum),
            _ => None,
        };
        if let Some(kind) = kind {
            let named = match (&tag, is_typedef) {
                (Some(t), _) => Some((t.text.clone(), t.line)),
                (None, true) => declarators.first().map(|d| (d.text.clone(), stmt[k].line)),
                (None, false) => None,
            };
            if let Some((name, line)) = named {
                self.push(&name, kind, line, close_line, stmt_line);
            }
        }
        if keyword == "enum" {
            if let Some(c) = close {
                self.enumerators(&toks[body_open + 1..c]);
            }
        }
        if is_typedef {
            for d in &declarators {
                self.push(&d.text, SymbolKind::Typedef, d.line, end_line, d.line);
            }
        }
        j + 1
    }

    fn enumerators(&mut self, body: &[Tok]) {
        let mut expect_name = true;
        let mut depth = 0i32;
        for t in body {
            if t.is("(") || t.is("{") || t.is("[") {
                depth += 1;
            } else if t.is(")") || t.is("}") || t.is("]") {
                depth -= 1;
            } else if t.is(",") && depth == 0 {
                expect_name = true;
            } else if expect_name && t.ident() {
                self.push(&t.text, SymbolKind::Constant, t.line, t.line, t.line);
                expect_name = false;
            }
        }
    }

    fn declaration(&mut self, stmt: &[Tok], semi_line: usize) {
        if stmt.is_empty() {
            return;
        }
        let is_typedef = stmt[0].is("typedef") || stmt.iter().any(|t| t.is("typedef"));
        if is_typedef {
            if let Some(name) = typedef_name(stmt) {
                self.push(
                    &name.text,
                    SymbolKind::Typedef,
                    name.line,
                    semi_line,
                    stmt[0].line,
                );
            }
            return;
        }
        let assign = top_level_assign(stmt);
        if let Some(eq) = assign {
            // `const char *p` is a mutable pointer; only a const after the
            // last `*` qualifies the object itself
            let decl = &stmt[..eq];
            let after_ptr = decl.iter().rposition(|t| t.is("*")).map_or(0, |i| i + 1);
            let is_const = decl[after_ptr..]
                .iter()
                .any(|t| t.is("const") || t.is("constexpr"));
            if is_const {
                let mut depth = 0i32;
                let mut name = None;
                for t in &stmt[..eq] {
                    if t.is("[") || t.is("(") {
                        depth += 1;
                    } else if t.is("]") || t.is(")") {
                        depth -= 1;
                    } else if depth == 0 && t.ident() && !t.is("const") {
                        name = Some(t);
                    }
                }
                if let Some(n) = name {
                    self.push(
                        &n.text,
                        SymbolKind::Constant,
                        n.line,
                        semi_line,
                        stmt[0].line,
                    );
                }
            }
            return;
        }
        if let Some(p) = call_paren(stmt) {
            if stmt.last().is_some_and(|t| t.is(")"))
                || stmt.iter().rev().take(3).any(|t| t.is(")"))
            {
                let name = &stmt[p - 1];
                self.push(
                    &name.text,
                    SymbolKind::Function,
                    name.line,
                    semi_line,
                    stmt[0].line,
                );
                if let Some(s) = self.out.symbols.last_mut() {
                    s.declaration = true;
                }
            }
        }
    }

    fn directive(&mut self, d: &Directive) {
        let body = d.text.trim_start_matches('#').trim_start();
        let Some(rest) = body.strip_prefix("define") else {
            return;
        };
        if !rest.starts_with(char::is_whitespace) {
            return;
        }
        let name: String = rest
            .trim_start()
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '_')
            .collect();
        if name.is_empty() {
            return;
        }
        let signature = one_line(self.lines.get(d.line_start - 1).copied().unwrap_or(""))
            .trim_end_matches('\\')
            .trim()
            .to_string();
        self.out.symbols.push(CodeSymbol {
            name,
            kind: SymbolKind::Macro,
            file: self.file.to_string(),
            line_start: d.line_start,
            line_end: d.line_end,
            signature,
            declaration: false,
        });
    }
}

/// Extracts file-scope symbols from C or C++ source text.
pub fn extract_symbols_builtin(file_path: &str, text: &str) -> Extraction {
    let (toks, dirs) = lex(text);
    let mut sc = Scanner {
        file: file_path,
        lines: text.lines().collect(),
        out: Extraction::default(),
    };
    for d in &dirs {
        sc.directive(d);
    }

    let mut transparent = 0usize;
    let mut i = 0;
    let mut stmt_start = 0;
    while i < toks.len() {
        let t = &toks[i];
        if t.is(";") {
            let stmt = strip_attributes(&toks[stmt_start..i]);
            sc.declaration(&stmt, t.line);
            i += 1;
            stmt_start = i;
            continue;
        }
        if t.is("}") {
            if transparent > 0 {
                transparent -= 1;
            } else {
                sc.out
                    .warnings
                    .push(format!("unmatched closing brace at line {}", t.line));
            }
            i += 1;
            stmt_start = i;
            continue;
        }
        if !t.is("{") {
            i += 1;
            continue;
        }
        let raw = &toks[stmt_start..i];
        let stmt = strip_attributes(raw);
        let is_linkage = stmt.len() == 2 && stmt[0].is("extern") && stmt[1].kind == TokKind::Str;
        let is_namespace = stmt.first().is_some_and(|s| s.is("namespace"));
        if is_linkage || is_namespace {
            transparent += 1;
            i += 1;
            stmt_start = i;
            continue;
        }
        if top_level_assign(&stmt).is_some() {
            // brace initializer: skip it, the statement ends at ';'
            i = match_brace(&toks, i).map_or(toks.len(), |c| c + 1);
            continue;
        }
        if let Some(k) = aggregate_keyword(&stmt) {
            let next = sc.aggregate(&stmt, k, i, &toks);
            i = next;
            stmt_start = i;
            continue;
        }
        let close = match_brace(&toks, i);
        let end_line = close.map_or_else(|| toks.last().map_or(1, |t| t.line), |c| toks[c].line);
        if let Some(p) = call_paren(&stmt) {
            let name = &stmt[p - 1];
            if close.is_none() {
                sc.out.warnings.push(format!(
                    "unbalanced braces: function {} closed at EOF",
                    name.text
                ));
            }
            let (n, l, first) = (name.text.clone(), name.line, stmt[0].line);
            sc.push(&n, SymbolKind::Function, l, end_line, first);
        }
        i = close.map_or(toks.len(), |c| c + 1);
        stmt_start = i;
    }
    sc.out
        .symbols
        .sort_by(|a, b| (a.line_start, a.kind, &a.name).cmp(&(b.line_start, b.kind, &b.name)));
    sc.out
}

/// Comment block that ends on the line directly above `line` (1-based),
/// with comment markers removed.
pub fn leading_comment(text: &str, line: usize) -> Option<String> {
    let lines: Vec<&str> = text.lines().collect();
    if line < 2 || line - 2 >= lines.len() {
        return None;
    }
    let mut idx = line - 2;
    let last = lines[idx].trim();
    let mut block = Vec::new();
    if last.starts_with("//") {
        loop {
            let l = lines[idx].trim();
            if !l.starts_with("//") {
                break;
            }
            block.push(l.trim_start_matches('/').trim().to_string());
            if idx == 0 {
                break;
            }
            idx -= 1;
        }
        block.reverse();
    } else if last.ends_with("*/") {
        loop {
            let l = lines[idx].trim();
            block.push(l.to_string());
            if l.starts_with("/*") || idx == 0 {
                break;
            }
            idx -= 1;
        }
        block.reverse();
        block = block.iter().map(|l| strip_block_markers(l)).collect();
    } else {
        return None;
    }
    let joined = one_line(&block.join(" "));
    (!joined.is_empty()).then_some(joined)
}

fn strip_block_markers(line: &str) -> String {
    let l = line.trim();
    let l = l
        .strip_prefix("/**")
        .or_else(|| l.strip_prefix("/*"))
        .unwrap_or(l);
    let l = l.strip_suffix("*/").unwrap_or(l);
    l.trim().trim_start_matches('*').trim().to_string()
}

/// First paragraph of the file's opening comment block.
pub fn header_comment(text: &str) -> Option<String> {
    let t = text.trim_start();
    let body: Vec<String> = if let Some(rest) = t.strip_prefix("/*") {
        let end = rest.find("*/")?;
        rest[..end].lines().map(strip_block_markers).collect()
    } else if t.starts_with("//") {
        t.lines()
            .take_while(|l| l.trim_start().starts_with("//"))
            .map(|l| l.trim().trim_start_matches('/').trim().to_string())
            .collect()
    } else {
        return None;
    };
    let para: Vec<&str> = body
        .iter()
        .map(String::as_str)
        .skip_while(|l| l.is_empty())
        .take_while(|l| !l.is_empty())
        .collect();
    let joined = one_line(&para.join(" "));
    (!joined.is_empty()).then_some(joined)
}
