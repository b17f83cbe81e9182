//! Streaming reader for MediaWiki `page` and `categorylinks` SQL dumps.
//!
//! The reader walks the byte stream once and materializes one tuple at a
//! time, so memory stays proportional to the widest row rather than to the
//! (often multi-megabyte) `INSERT` statement or the file. Malformed tuples
//! are reported with their byte offset and skipped; parsing resumes at the
//! next tuple.

use std::collections::HashMap;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{normalize_title, NodeKind};

pub const NS_ARTICLE: i64 = 0;
pub const NS_CATEGORY: i64 = 14;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("malformed tuple at byte {offset}: {reason}")]
    MalformedTuple { offset: u64, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SqlValue {
    Null,
    Int(i64),
    Float(f64),
    Str(Vec<u8>),
}

impl SqlValue {
    fn as_int(&self) -> Option<i64> {
        match self {
            SqlValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    fn as_str(&self) -> Option<&[u8]> {
        match self {
            SqlValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// One parenthesized row of an `INSERT INTO ... VALUES` statement.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTuple {
    pub offset: u64,
    pub values: Vec<SqlValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    /// At the start of a line, outside any statement.
    LineStart,
    /// Inside `VALUES`, expecting `(` of the next tuple.
    TupleStart,
    Done,
}

/// Iterator over the tuples of every `INSERT INTO `table` VALUES` statement
/// for one table. Statements for other tables are skipped.
pub struct TupleReader<R> {
    input: R,
    table: Vec<u8>,
    offset: u64,
    state: State,
    malformed: u64,
}

const INSERT_PREFIX: &[u8] = b"INSERT INTO `";

impl<R: BufRead> TupleReader<R> {
    pub fn new(input: R, table: &str) -> Self {
        TupleReader {
            input,
            table: table.as_bytes().to_vec(),
            offset: 0,
            state: State::LineStart,
            malformed: 0,
        }
    }

    pub fn malformed_count(&self) -> u64 {
        self.malformed
    }

    fn peek(&mut self) -> io::Result<Option<u8>> {
        Ok(self.input.fill_buf()?.first().copied())
    }

    fn bump(&mut self) -> io::Result<Option<u8>> {
        let b = self.peek()?;
        if b.is_some() {
            self.input.consume(1);
            self.offset += 1;
        }
        Ok(b)
    }

    fn skip_line(&mut self) -> io::Result<()> {
        loop {
            let (done, used) = {
                let buf = self.input.fill_buf()?;
                if buf.is_empty() {
                    return Ok(());
                }
                match buf.iter().position(|&b| b == b'\n') {
                    Some(i) => (true, i + 1),
                    None => (false, buf.len()),
                }
            };
            self.input.consume(used);
            self.offset += used as u64;
            if done {
                return Ok(());
            }
        }
    }

    fn skip_ws(&mut self) -> io::Result<()> {
        while let Some(b) = self.peek()? {
            if b.is_ascii_whitespace() {
                self.bump()?;
            } else {
                break;
            }
        }
        Ok(())
    }

    /// Consume bytes while they match `expected`; returns whether all matched.
    fn eat(&mut self, expected: &[u8]) -> io::Result<bool> {
        for &e in expected {
            if self.peek()? != Some(e) {
                return Ok(false);
            }
            self.bump()?;
        }
        Ok(true)
    }

    /// At a line start: returns true once positioned right after `VALUES`
    /// of an insert into our table.
    fn seek_statement(&mut self) -> io::Result<bool> {
        if !self.eat(INSERT_PREFIX)? {
            self.skip_line()?;
            return Ok(false);
        }
        let mut name = Vec::new();
        loop {
            match self.bump()? {
                Some(b'`') => break,
                Some(b'\n') | None => return Ok(false),
                Some(b) => name.push(b),
            }
        }
        if name != self.table {
            self.skip_line()?;
            return Ok(false);
        }
        self.skip_ws()?;
        if !self.eat(b"VALUES")? {
            self.skip_line()?;
            return Ok(false);
        }
        Ok(true)
    }

    fn malformed(&mut self, offset: u64, reason: impl Into<String>) -> DumpError {
        self.malformed += 1;
        DumpError::MalformedTuple {
            offset,
            reason: reason.into(),
        }
    }

    /// After a parse failure inside a tuple: skip to the next `(`-start or
    /// statement end, honoring quoted strings.
    fn recover(&mut self) -> io::Result<()> {
        let mut in_str = false;
        let mut prev_close = false;
        while let Some(b) = self.bump()? {
            if in_str {
                match b {
                    b'\\' => {
                        self.bump()?;
                    }
                    b'\'' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'\'' => {
                    in_str = true;
                    prev_close = false;
                }
                b')' => prev_close = true,
                b',' if prev_close => {
                    self.state = State::TupleStart;
                    return Ok(());
                }
                b';' if prev_close => {
                    self.state = State::LineStart;
                    return Ok(());
                }
                b'\n' => {
                    self.state = State::LineStart;
                    return Ok(());
                }
                b if b.is_ascii_whitespace() => {}
                _ => prev_close = false,
            }
        }
        self.state = State::Done;
        Ok(())
    }

    fn parse_string(&mut self, start: u64) -> Result<Vec<u8>, DumpError> {
        let mut out = Vec::new();
        let mut saw_nul = false;
        loop {
            match self.bump()? {
                None => return Err(self.malformed(start, "unterminated string at end of input")),
                Some(b'\'') if saw_nul => return Err(self.malformed(start, "unescaped NUL in string")),
                Some(b'\'') => return Ok(out),
                Some(0) => saw_nul = true,
                Some(b'\\') => {
                    let decoded = match self.bump()? {
                        None => return Err(self.malformed(start, "dangling escape at end of input")),
                        Some(b'0') => 0,
                        Some(b'n') => b'\n',
                        Some(b'r') => b'\r',
                        Some(b't') => b'\t',
                        Some(b'b') => 8,
                        Some(b'Z') => 26,
                        Some(other) => other,
                    };
                    out.push(decoded);
                }
                Some(b) => out.push(b),
            }
        }
    }

    fn parse_bare(&mut self, start: u64) -> Result<SqlValue, DumpError> {
        let mut token = Vec::new();
        while let Some(b) = self.peek()? {
            if b == b',' || b == b')' || b.is_ascii_whitespace() {
                break;
            }
            token.push(b);
            self.bump()?;
        }
        if token.eq_ignore_ascii_case(b"NULL") {
            return Ok(SqlValue::Null);
        }
        let text = std::str::from_utf8(&token).unwrap_or("");
        if let Ok(i) = text.parse::<i64>() {
            return Ok(SqlValue::Int(i));
        }
        if let Ok(f) = text.parse::<f64>() {
            return Ok(SqlValue::Float(f));
        }
        if self.peek()?.is_none() {
            return Err(self.malformed(start, "truncated tuple at end of input"));
        }
        Err(self.malformed(start, format!("bad value {:?}", String::from_utf8_lossy(&token))))
    }

    fn parse_tuple(&mut self, start: u64) -> Result<Vec<SqlValue>, DumpError> {
        let mut values = Vec::new();
        loop {
            self.skip_ws()?;
            let value = match self.peek()? {
                None => return Err(self.malformed(start, "truncated tuple at end of input")),
                Some(b'\'') => {
                    self.bump()?;
                    SqlValue::Str(self.parse_string(start)?)
                }
                Some(_) => self.parse_bare(start)?,
            };
            values.push(value);
            self.skip_ws()?;
            match self.bump()? {
                Some(b',') => continue,
                Some(b')') => return Ok(values),
                None => return Err(self.malformed(start, "truncated tuple at end of input")),
                Some(b) => {
                    return Err(self.malformed(start, format!("unexpected byte {:?}", b as char)))
                }
            }
        }
    }

    /// After a complete tuple: `,` continues the statement, `;` ends it.
    fn after_tuple(&mut self) -> io::Result<()> {
        self.skip_ws()?;
        match self.peek()? {
            Some(b',') => {
                self.bump()?;
                self.state = State::TupleStart;
            }
            Some(b';') => {
                self.bump()?;
                self.state = State::LineStart;
            }
            None => self.state = State::Done,
            Some(_) => self.state = State::LineStart,
        }
        Ok(())
    }

    fn next_tuple(&mut self) -> Result<Option<RawTuple>, DumpError> {
        loop {
            match self.state {
                State::Done => return Ok(None),
                State::LineStart => {
                    self.skip_ws()?;
                    if self.peek()?.is_none() {
                        self.state = State::Done;
                    } else if self.seek_statement()? {
                        self.state = State::TupleStart;
                    }
                }
                State::TupleStart => {
                    self.skip_ws()?;
                    let start = self.offset;
                    match self.bump()? {
                        Some(b'(') => {}
                        None => {
                            self.state = State::Done;
                            return Err(self.malformed(start, "statement ends without tuples"));
                        }
                        Some(_) => {
                            let err = self.malformed(start, "expected '(' at tuple start");
                            self.recover()?;
                            return Err(err);
                        }
                    }
                    match self.parse_tuple(start) {
                        Ok(values) => {
                            self.after_tuple()?;
                            return Ok(Some(RawTuple {
                                offset: start,
                                values,
                            }));
                        }
                        Err(e @ DumpError::MalformedTuple { .. }) => {
                            self.recover()?;
                            return Err(e);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for TupleReader<R> {
    type Item = Result<RawTuple, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_tuple() {
            Ok(Some(t)) => Some(Ok(t)),
            Ok(None) => None,
            Err(e @ DumpError::Io(_)) => {
                self.state = State::Done;
                Some(Err(e))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

// ---------------------------------------------------------------------------
// Schema descriptor
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageColumns {
    pub id: usize,
    pub namespace: usize,
    pub title: usize,
    /// Exact tuple width, when known.
    #[serde(default)]
    pub arity: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryLinkColumns {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "type")]
    pub link_type: usize,
    #[serde(default)]
    pub arity: Option<usize>,
}

/// Column positions for the two tables. Defaults follow the 2018-era
/// layout (`page_id, page_namespace, page_title, ...` and
/// `cl_from, cl_to, cl_sortkey, cl_timestamp, cl_sortkey_prefix,
/// cl_collation, cl_type`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpSchema {
    pub page: PageColumns,
    pub categorylinks: CategoryLinkColumns,
}

impl Default for DumpSchema {
    fn default() -> Self {
        DumpSchema {
            page: PageColumns {
                id: 0,
                namespace: 1,
                title: 2,
                arity: None,
            },
            categorylinks: CategoryLinkColumns {
                from: 0,
                to: 1,
                link_type: 6,
                arity: None,
            },
        }
    }
}

fn check_arity(tuple: &RawTuple, needed: usize, exact: Option<usize>) -> Result<(), DumpError> {
    let n = tuple.values.len();
    let ok = match exact {
        Some(a) => n == a,
        None => n >= needed,
    };
    if ok {
        Ok(())
    } else {
        Err(DumpError::MalformedTuple {
            offset: tuple.offset,
            reason: format!("arity {n} does not match schema"),
        })
    }
}

fn type_error(tuple: &RawTuple, column: &str) -> DumpError {
    DumpError::MalformedTuple {
        offset: tuple.offset,
        reason: format!("column {column} has the wrong type"),
    }
}

fn utf8(tuple: &RawTuple, bytes: &[u8], column: &str) -> Result<String, DumpError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| DumpError::MalformedTuple {
        offset: tuple.offset,
        reason: format!("column {column} is not UTF-8"),
    })
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRecord {
    pub page_id: i64,
    pub namespace: i64,
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkType {
    Page,
    Subcat,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryLinkRecord {
    pub cl_from: i64,
    pub cl_to: String,
    pub cl_type: LinkType,
}

fn page_from_tuple(t: &RawTuple, cols: &PageColumns) -> Result<PageRecord, DumpError> {
    let needed = cols.id.max(cols.namespace).max(cols.title) + 1;
    check_arity(t, needed, cols.arity)?;
    let page_id = t.values[cols.id].as_int().ok_or_else(|| type_error(t, "page_id"))?;
    let namespace = t.values[cols.namespace]
        .as_int()
        .ok_or_else(|| type_error(t, "page_namespace"))?;
    let title = t.values[cols.title]
        .as_str()
        .ok_or_else(|| type_error(t, "page_title"))?;
    Ok(PageRecord {
        page_id,
        namespace,
        title: utf8(t, title, "page_title")?,
    })
}

fn link_from_tuple(t: &RawTuple, cols: &CategoryLinkColumns) -> Result<CategoryLinkRecord, DumpError> {
    let needed = cols.from.max(cols.to).max(cols.link_type) + 1;
    check_arity(t, needed, cols.arity)?;
    let cl_from = t.values[cols.from].as_int().ok_or_else(|| type_error(t, "cl_from"))?;
    let cl_to = t.values[cols.to].as_str().ok_or_else(|| type_error(t, "cl_to"))?;
    let cl_type = match t.values[cols.link_type].as_str() {
        Some(b"page") => LinkType::Page,
        Some(b"subcat") => LinkType::Subcat,
        Some(b"file") => LinkType::File,
        _ => return Err(type_error(t, "cl_type")),
    };
    Ok(CategoryLinkRecord {
        cl_from,
        cl_to: utf8(t, cl_to, "cl_to")?,
        cl_type,
    })
}

/// Streams article and category rows out of a `page` table dump.
pub struct PageReader<R> {
    tuples: TupleReader<R>,
    columns: PageColumns,
    read: u64,
    malformed: u64,
}

impl<R: BufRead> PageReader<R> {
    /// Total tuples seen, including filtered and malformed ones.
    pub fn tuples_read(&self) -> u64 {
        self.read
    }

    pub fn malformed_count(&self) -> u64 {
        self.malformed
    }
}

impl<R: BufRead> Iterator for PageReader<R> {
    type Item = Result<PageRecord, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let tuple = match self.tuples.next()? {
                Ok(t) => t,
                Err(e) => {
                    if matches!(e, DumpError::MalformedTuple { .. }) {
                        self.read += 1;
                        self.malformed += 1;
                    }
                    return Some(Err(e));
                }
            };
            self.read += 1;
            match page_from_tuple(&tuple, &self.columns) {
                Ok(p) if p.namespace == NS_ARTICLE || p.namespace == NS_CATEGORY => return Some(Ok(p)),
                Ok(_) => continue,
                Err(e) => {
                    self.malformed += 1;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Streams membership links out of a `categorylinks` table dump, dropping
/// `file` links.
pub struct CategoryLinkReader<R> {
    tuples: TupleReader<R>,
    columns: CategoryLinkColumns,
    read: u64,
    malformed: u64,
}

impl<R: BufRead> CategoryLinkReader<R> {
    pub fn tuples_read(&self) -> u64 {
        self.read
    }

    pub fn malformed_count(&self) -> u64 {
        self.malformed
    }
}

impl<R: BufRead> Iterator for CategoryLinkReader<R> {
    type Item = Result<CategoryLinkRecord, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let tuple = match self.tuples.next()? {
                Ok(t) => t,
                Err(e) => {
                    if matches!(e, DumpError::MalformedTuple { .. }) {
                        self.read += 1;
                        self.malformed += 1;
                    }
                    return Some(Err(e));
                }
            };
            self.read += 1;
            match link_from_tuple(&tuple, &self.columns) {
                Ok(l) if l.cl_type == LinkType::File => continue,
                Ok(l) => return Some(Ok(l)),
                Err(e) => {
                    self.malformed += 1;
                    return Some(Err(e));
                }
            }
        }
    }
}

pub fn parse_page_dump<R: BufRead>(input: R, schema: &DumpSchema) -> PageReader<R> {
    PageReader {
        tuples: TupleReader::new(input, "page"),
        columns: schema.page,
        read: 0,
        malformed: 0,
    }
}

pub fn parse_categorylinks_dump<R: BufRead>(input: R, schema: &DumpSchema) -> CategoryLinkReader<R> {
    CategoryLinkReader {
        tuples: TupleReader::new(input, "categorylinks"),
        columns: schema.categorylinks,
        read: 0,
        malformed: 0,
    }
}

// ---------------------------------------------------------------------------
// Join
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub pages_read: u64,
    pub links_read: u64,
    pub dangling_links: u64,
    pub malformed_tuples: u64,
    pub self_loops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSpec {
    pub child: String,
    pub child_kind: NodeKind,
    pub parent: String,
}

#[derive(Debug, Clone, Default)]
pub struct Assembled {
    pub nodes: Vec<(String, NodeKind)>,
    pub edges: Vec<EdgeSpec>,
    pub report: IngestReport,
}

impl Assembled {
    pub fn into_builder(self) -> crate::graph::GraphBuilder {
        let mut b = crate::graph::GraphBuilder::new();
        for (t, k) in &self.nodes {
            b.add_node(t, *k);
        }
        for e in &self.edges {
            b.add_edge(&e.child, Some(e.child_kind), &e.parent);
        }
        b
    }
}

/// Join page rows with membership links. Errors in either stream are
/// counted as malformed tuples (I/O errors included) and never abort.
pub fn assemble_edges<P, L>(pages: P, links: L) -> Assembled
where
    P: IntoIterator<Item = Result<PageRecord, DumpError>>,
    L: IntoIterator<Item = Result<CategoryLinkRecord, DumpError>>,
{
    let mut report = IngestReport::default();
    let mut by_id: HashMap<i64, usize> = HashMap::new();
    let mut categories: HashMap<String, ()> = HashMap::new();
    let mut nodes = Vec::new();

    for page in pages {
        let page = match page {
            Ok(p) => p,
            Err(_) => {
                report.malformed_tuples += 1;
                continue;
            }
        };
        report.pages_read += 1;
        let kind = if page.namespace == NS_CATEGORY {
            NodeKind::Category
        } else {
            NodeKind::Article
        };
        let title = normalize_title(&page.title);
        if kind == NodeKind::Category {
            categories.insert(title.clone(), ());
        }
        by_id.insert(page.page_id, nodes.len());
        nodes.push((title, kind));
    }

    let mut edges = Vec::new();
    for link in links {
        let link = match link {
            Ok(l) => l,
            Err(_) => {
                report.malformed_tuples += 1;
                continue;
            }
        };
        report.links_read += 1;
        let parent = normalize_title(&link.cl_to);
        let child = by_id.get(&link.cl_from).map(|&i| &nodes[i]);
        match child {
            Some((title, kind)) if categories.contains_key(&parent) => {
                if *kind == NodeKind::Category && *title == parent {
                    report.self_loops += 1;
                    continue;
                }
                edges.push(EdgeSpec {
                    child: title.clone(),
                    child_kind: *kind,
                    parent,
                });
            }
            _ => report.dangling_links += 1,
        }
    }

    Assembled {
        nodes,
        edges,
        report,
    }
}
