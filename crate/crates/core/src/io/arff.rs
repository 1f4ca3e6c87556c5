//! Dense ARFF with numeric and nominal attributes.
//!
//! Supported: `%` comment lines, case-insensitive `@relation`, `@attribute`
//! and `@data`, single- or double-quoted names and values with backslash
//! escapes, `numeric`/`real`/`integer` and `{v1,v2,...}` types. Sparse rows,
//! `string`/`date`/`relational` attributes and the missing-value token `?`
//! are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{Column, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeType {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeType,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Nominal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArffDocument {
    pub relation: String,
    pub attributes: Vec<Attribute>,
    pub rows: Vec<Vec<Value>>,
}

struct Scanner<'a> {
    rest: &'a str,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str) -> Self {
        Self { rest: s }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest.is_empty()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if let Some(r) = self.rest.strip_prefix(c) {
            self.rest = r;
            true
        } else {
            false
        }
    }

    /// A quoted string, or a bare run of characters up to whitespace or one of `stops`.
    /// Returns the text and whether it was quoted.
    fn token(&mut self, stops: &[char]) -> std::result::Result<(String, bool), String> {
        self.skip_ws();
        let mut chars = self.rest.char_indices();
        match chars.next() {
            None => Err("unexpected end of line".into()),
            Some((_, q)) if q == '\'' || q == '"' => {
                let mut out = String::new();
                let mut escaped = false;
                for (i, c) in chars {
                    if escaped {
                        out.push(c);
                        escaped = false;
                    } else if c == '\\' {
                        escaped = true;
                    } else if c == q {
                        self.rest = &self.rest[i + c.len_utf8()..];
                        return Ok((out, true));
                    } else {
                        out.push(c);
                    }
                }
                Err("unterminated quoted string".into())
            }
            Some(_) => {
                let end = self
                    .rest
                    .find(|c: char| c.is_whitespace() || stops.contains(&c))
                    .unwrap_or(self.rest.len());
                if end == 0 {
                    return Err(format!("unexpected `{}`", &self.rest[..1]));
                }
                let tok = self.rest[..end].to_string();
                self.rest = &self.rest[end..];
                Ok((tok, false))
            }
        }
    }

    /// Comma-separated list of tokens up to `close` (or end of input when `None`).
    fn list(&mut self, close: Option<char>) -> std::result::Result<Vec<(String, bool)>, String> {
        let mut items = Vec::new();
        let stops: &[char] = match close {
            Some(c) => &[',', c][..],
            None => &[','][..],
        };
        loop {
            if let Some(c) = close {
                if items.is_empty() && self.eat(c) {
                    return Ok(items);
                }
            }
            let (mut tok, quoted) = self.token(stops)?;
            if !quoted {
                // bare values may contain inner spaces, e.g. `a b` in data rows
                self.skip_ws_inside(&mut tok, stops);
            }
            items.push((tok, quoted));
            if self.eat(',') {
                continue;
            }
            match close {
                Some(c) if self.eat(c) => return Ok(items),
                Some(c) => return Err(format!("expected `,` or `{c}`")),
                None if self.at_end() => return Ok(items),
                None => return Err("expected `,`".into()),
            }
        }
    }

    fn skip_ws_inside(&mut self, tok: &mut String, stops: &[char]) {
        loop {
            let trimmed = self.rest.trim_start();
            match trimmed.chars().next() {
                Some(c) if !stops.contains(&c) && trimmed.len() < self.rest.len() => {
                    let end = trimmed
                        .find(|c: char| c.is_whitespace() || stops.contains(&c))
                        .unwrap_or(trimmed.len());
                    tok.push_str(&self.rest[..self.rest.len() - trimmed.len()]);
                    tok.push_str(&trimmed[..end]);
                    self.rest = &trimmed[end..];
                }
                _ => return,
            }
        }
    }
}

fn keyword(line: &str) -> Option<(String, &str)> {
    let rest = line.strip_prefix('@')?;
    let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
    Some((rest[..end].to_ascii_lowercase(), &rest[end..]))
}

impl ArffDocument {
    /// Parses ARFF text; `source_name` appears in error messages.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(source_name, line, msg);
        let mut relation: Option<String> = None;
        let mut attributes: Vec<Attribute> = Vec::new();
        let mut rows = Vec::new();
        let mut in_data = false;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            if in_data {
                rows.push(parse_row(line, &attributes).map_err(|m| err(lineno, m))?);
                continue;
            }
            let Some((kw, rest)) = keyword(line) else {
                return Err(err(lineno, format!("expected a header declaration, found `{line}`")));
            };
            match kw.as_str() {
                "relation" => {
                    if relation.is_some() {
                        return Err(err(lineno, "duplicate @relation".into()));
                    }
                    let mut s = Scanner::new(rest);
                    let (name, quoted) = s.token(&[]).map_err(|m| err(lineno, m))?;
                    let mut name = name;
                    if !quoted {
                        s.skip_ws_inside(&mut name, &[]);
                    }
                    if !s.at_end() {
                        return Err(err(lineno, "trailing text after relation name".into()));
                    }
                    relation = Some(name);
                }
                "attribute" => {
                    if relation.is_none() {
                        return Err(err(lineno, "@attribute before @relation".into()));
                    }
                    let attr = parse_attribute(rest).map_err(|m| err(lineno, m))?;
                    if attributes.iter().any(|a| a.name == attr.name) {
                        return Err(err(lineno, format!("duplicate attribute `{}`", attr.name)));
                    }
                    attributes.push(attr);
                }
                "data" => {
                    if attributes.is_empty() {
                        return Err(err(lineno, "@data before any @attribute".into()));
                    }
                    if !rest.trim().is_empty() {
                        return Err(err(lineno, "trailing text after @data".into()));
                    }
                    in_data = true;
                }
                other => return Err(err(lineno, format!("unknown declaration `@{other}`"))),
            }
        }
        if !in_data {
            return Err(err(text.lines().count().max(1), "missing @data section".into()));
        }
        Ok(Self {
            relation: relation.unwrap_or_default(),
            attributes,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = super::read_file(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Canonical text: lower-case keywords, quoting only where needed, shortest
    /// round-trip decimals.
    pub fn to_arff_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "@relation {}", quote(&self.relation));
        out.push('\n');
        for a in &self.attributes {
            match &a.kind {
                AttributeType::Numeric => {
                    let _ = writeln!(out, "@attribute {} numeric", quote(&a.name));
                }
                AttributeType::Nominal(levels) => {
                    let levels: Vec<String> = levels.iter().map(|l| quote(l)).collect();
                    let _ = writeln!(out, "@attribute {} {{{}}}", quote(&a.name), levels.join(","));
                }
            }
        }
        out.push_str("\n@data\n");
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::Number(x) => x.to_string(),
                    Value::Nominal(s) => quote(s),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_file(path, &self.to_arff_string())?;
        Ok(())
    }

    /// Column view: numeric attributes become numeric columns, nominal ones
    /// keep their declared level order.
    pub fn to_table(&self) -> Result<Table> {
        let mut table = Table::new();
        for (j, a) in self.attributes.iter().enumerate() {
            let column = match &a.kind {
                AttributeType::Numeric => Column::Numeric(
                    self.rows
                        .iter()
                        .map(|r| match &r[j] {
                            Value::Number(x) => *x,
                            Value::Nominal(_) => unreachable!("rows are validated on parse"),
                        })
                        .collect(),
                ),
                AttributeType::Nominal(levels) => Column::Nominal {
                    values: self
                        .rows
                        .iter()
                        .map(|r| match &r[j] {
                            Value::Nominal(s) => s.clone(),
                            Value::Number(_) => unreachable!("rows are validated on parse"),
                        })
                        .collect(),
                    levels: levels.clone(),
                },
            };
            table.push(a.name.clone(), column)?;
        }
        Ok(table)
    }
}

fn parse_attribute(rest: &str) -> std::result::Result<Attribute, String> {
    let mut s = Scanner::new(rest);
    let (name, _) = s.token(&['{'])?;
    s.skip_ws();
    let kind = if s.eat('{') {
        let levels = s.list(Some('}'))?;
        if !s.at_end() {
            return Err("trailing text after nominal declaration".into());
        }
        let levels: Vec<String> = levels.into_iter().map(|(l, _)| l).collect();
        for (i, l) in levels.iter().enumerate() {
            if levels[..i].contains(l) {
                return Err(format!("attribute `{name}` repeats nominal value `{l}`"));
            }
        }
        AttributeType::Nominal(levels)
    } else {
        let (ty, _) = s.token(&[])?;
        match ty.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => {}
            "string" | "date" | "relational" => return Err(format!("unsupported attribute type `{ty}` for `{name}`")),
            _ => return Err(format!("unknown attribute type `{ty}` for `{name}`")),
        }
        if !s.at_end() {
            return Err(format!("trailing text after type of `{name}`"));
        }
        AttributeType::Numeric
    };
    Ok(Attribute { name, kind })
}

fn parse_row(line: &str, attributes: &[Attribute]) -> std::result::Result<Vec<Value>, String> {
    if line.starts_with('{') {
        return Err("sparse ARFF rows are not supported".into());
    }
    let fields = Scanner::new(line).list(None)?;
    if fields.len() != attributes.len() {
        return Err(format!(
            "row has {} values, expected {}",
            fields.len(),
            attributes.len()
        ));
    }
    fields
        .into_iter()
        .zip(attributes)
        .map(|((tok, quoted), attr)| {
            if tok == "?" && !quoted {
                return Err(format!("missing value `?` in `{}`", attr.name));
            }
            match &attr.kind {
                AttributeType::Numeric => match tok.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Value::Number(x)),
                    _ => Err(format!("`{tok}` is not a number (attribute `{}`)", attr.name)),
                },
                AttributeType::Nominal(levels) => {
                    if levels.contains(&tok) {
                        Ok(Value::Nominal(tok))
                    } else {
                        Err(format!("`{tok}` is not a declared value of `{}`", attr.name))
                    }
                }
            }
        })
        .collect()
}

fn quote(s: &str) -> String {
    let plain = !s.is_empty()
        && !s.starts_with(['@', '%'])
        && s != "?"
        && !s.contains(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '\'' | '"' | '\\' | '%'));
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}
