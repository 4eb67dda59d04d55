//! CoNLL-U ingestion into an immutable dependency-graph model.
//!
//! Multiword-token ranges (`3-4`) and empty nodes (`3.1`) are skipped. A
//! sentence with a malformed token line or a dangling head reference is
//! rejected as a whole and reported through [`Diagnostic`]s; only I/O and
//! encoding failures abort parsing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: u32,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: Option<String>,
    /// FEATS column. Multi-valued features such as `Gender=Fem,Masc` are kept
    /// as a single verbatim value.
    pub feats: BTreeMap<String, String>,
    /// 0 for the root.
    pub head: u32,
    pub deprel: String,
    pub deps: Option<String>,
    pub misc: Option<String>,
}

impl Token {
    pub fn feat(&self, key: &str) -> Option<&str> {
        self.feats.get(key).map(String::as_str)
    }

    /// The 10-column line for this token, FEATS sorted by key.
    pub fn to_conllu_line(&self) -> String {
        let feats = if self.feats.is_empty() {
            "_".to_string()
        } else {
            self.feats
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join("|")
        };
        let opt = |o: &Option<String>| o.clone().unwrap_or_else(|| "_".to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.form,
            self.lemma,
            self.upos,
            opt(&self.xpos),
            feats,
            self.head,
            self.deprel,
            opt(&self.deps),
            opt(&self.misc)
        )
    }
}

/// Where a sentence came from: file (or stream label) and 1-based line span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub first_line: usize,
    pub last_line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub sent_id: String,
    tokens: Vec<Token>,
    children: Vec<Vec<u32>>,
    pub source: SourceSpan,
}

impl Sentence {
    /// Builds a sentence, checking that ids are `1..=n` in order and that
    /// every head is 0 or an existing id different from the token's own.
    pub fn new(sent_id: String, tokens: Vec<Token>, source: SourceSpan) -> Result<Self, String> {
        if tokens.is_empty() {
            return Err("sentence has no tokens".into());
        }
        let n = tokens.len() as u32;
        let mut children = vec![Vec::new(); tokens.len() + 1];
        let mut roots = 0;
        for (i, tok) in tokens.iter().enumerate() {
            let expected = i as u32 + 1;
            if tok.id != expected {
                return Err(format!("token ids are not sequential: expected {expected}, found {}", tok.id));
            }
            if tok.head == tok.id {
                return Err(format!("token {} is its own head", tok.id));
            }
            if tok.head > n {
                return Err(format!("token {} has dangling head {}", tok.id, tok.head));
            }
            if tok.head == 0 {
                roots += 1;
            }
            children[tok.head as usize].push(tok.id);
        }
        if roots == 0 {
            return Err("sentence has no root token".into());
        }
        Ok(Self {
            sent_id,
            tokens,
            children,
            source,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> Option<&Token> {
        if id == 0 {
            return None;
        }
        self.tokens.get(id as usize - 1)
    }

    /// The governor of `id`, or `None` for a root or an invalid id.
    pub fn governor(&self, id: u32) -> Option<&Token> {
        self.token(id).and_then(|t| self.token(t.head))
    }

    /// Ids of the dependents of `id` in surface order. Id 0 yields the roots.
    pub fn child_ids(&self, id: u32) -> &[u32] {
        self.children.get(id as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn dependents_of(&self, id: u32) -> Result<Vec<&Token>> {
        if self.token(id).is_none() {
            return Err(Error::InvalidTokenId {
                sent_id: self.sent_id.clone(),
                id,
            });
        }
        Ok(self.children[id as usize]
            .iter()
            .map(|&c| &self.tokens[c as usize - 1])
            .collect())
    }

    pub fn is_multi_root(&self) -> bool {
        self.children[0].len() > 1
    }

    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&t.to_conllu_line());
            out.push('\n');
        }
        out
    }
}

/// A rejected sentence or line, with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: String,
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Treebank {
    sentences: Vec<Sentence>,
    token_count: usize,
    rejected: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl Treebank {
    pub fn from_sentences(sentences: Vec<Sentence>) -> Self {
        let token_count = sentences.iter().map(Sentence::len).sum();
        Self {
            sentences,
            token_count,
            rejected: 0,
            diagnostics: Vec::new(),
        }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn rejected_count(&self) -> usize {
        self.rejected
    }

    pub fn multi_root_count(&self) -> usize {
        self.sentences.iter().filter(|s| s.is_multi_root()).count()
    }

    /// Concatenates treebanks in order, e.g. train/dev/test splits.
    pub fn concat(parts: impl IntoIterator<Item = Treebank>) -> Treebank {
        let mut out = Treebank::default();
        for part in parts {
            out.token_count += part.token_count;
            out.rejected += part.rejected;
            out.sentences.extend(part.sentences);
            out.diagnostics.extend(part.diagnostics);
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Label used in diagnostics and source spans; defaults to `<input>`.
    pub source: Option<String>,
}

pub fn parse_file(path: &Path, options: &ParseOptions) -> Result<Treebank> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let options = ParseOptions {
        source: Some(
            options
                .source
                .clone()
                .unwrap_or_else(|| path.display().to_string()),
        ),
    };
    parse_conllu(file, &options).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn parse_conllu<R: Read>(mut input: R, options: &ParseOptions) -> Result<Treebank> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|source| Error::Io {
        path: options.source.clone().unwrap_or_default().into(),
        source,
    })?;
    let text = match String::from_utf8(bytes) {
        Ok(t) => t,
        Err(e) => {
            let valid = e.utf8_error().valid_up_to();
            let line = e.as_bytes()[..valid].iter().filter(|&&b| b == b'\n').count() + 1;
            return Err(Error::Utf8 { line });
        }
    };
    let file = options.source.clone().unwrap_or_else(|| "<input>".into());
    Ok(parse_text(&text, &file))
}

struct Block {
    first_line: usize,
    sent_id: Option<String>,
    tokens: Vec<Token>,
    error: Option<(usize, String)>,
}

impl Block {
    fn new(first_line: usize) -> Self {
        Self {
            first_line,
            sent_id: None,
            tokens: Vec::new(),
            error: None,
        }
    }
}

fn parse_text(text: &str, file: &str) -> Treebank {
    let mut tb = Treebank::default();
    let mut block: Option<Block> = None;
    let mut ordinal = 0usize;

    let mut finish = |block: Block, last_line: usize, tb: &mut Treebank| {
        if block.tokens.is_empty() && block.error.is_none() {
            return;
        }
        ordinal += 1;
        let sent_id = block
            .sent_id
            .unwrap_or_else(|| format!("{file}#{ordinal}"));
        if let Some((line, message)) = block.error {
            tb.rejected += 1;
            tb.diagnostics.push(Diagnostic {
                file: file.to_string(),
                line,
                message: format!("sentence {sent_id} rejected: {message}"),
            });
            return;
        }
        let source = SourceSpan {
            file: file.to_string(),
            first_line: block.first_line,
            last_line,
        };
        match Sentence::new(sent_id.clone(), block.tokens, source) {
            Ok(s) => {
                tb.token_count += s.len();
                tb.sentences.push(s);
            }
            Err(message) => {
                tb.rejected += 1;
                tb.diagnostics.push(Diagnostic {
                    file: file.to_string(),
                    line: block.first_line,
                    message: format!("sentence {sent_id} rejected: {message}"),
                });
            }
        }
    };

    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if let Some(b) = block.take() {
                finish(b, last_line, &mut tb);
            }
            continue;
        }
        last_line = lineno;
        let b = block.get_or_insert_with(|| Block::new(lineno));
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = parse_sent_id(comment) {
                b.sent_id = Some(id);
            }
            continue;
        }
        if b.error.is_some() {
            continue;
        }
        match parse_token_line(line) {
            Ok(Some(tok)) => b.tokens.push(tok),
            Ok(None) => {}
            Err(msg) => b.error = Some((lineno, msg)),
        }
    }
    if let Some(b) = block.take() {
        finish(b, last_line, &mut tb);
    }
    tb
}

fn parse_sent_id(comment: &str) -> Option<String> {
    let rest = comment.trim_start().strip_prefix("sent_id")?;
    let rest = rest.trim_start();
    let rest = rest.strip_prefix('=').unwrap_or(rest);
    let id = rest.trim();
    (!id.is_empty()).then(|| id.to_string())
}

/// `Ok(None)` for range and empty-node lines, which are skipped.
fn parse_token_line(line: &str) -> Result<Option<Token>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(format!("expected 10 tab-separated columns, found {}", cols.len()));
    }
    let id_col = cols[0];
    if id_col.contains('-') || id_col.contains('.') {
        return Ok(None);
    }
    let id: u32 = id_col
        .parse()
        .map_err(|_| format!("unparseable token id {id_col:?}"))?;
    if id == 0 {
        return Err("token id must be at least 1".into());
    }
    let head: u32 = cols[6]
        .parse()
        .map_err(|_| format!("unparseable head {:?} for token {id}", cols[6]))?;
    let feats = parse_feats(cols[5]).map_err(|m| format!("token {id}: {m}"))?;
    let opt = |s: &str| (s != "_").then(|| s.to_string());
    Ok(Some(Token {
        id,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        xpos: opt(cols[4]),
        feats,
        head,
        deprel: cols[7].to_string(),
        deps: opt(cols[8]),
        misc: opt(cols[9]),
    }))
}

fn parse_feats(col: &str) -> Result<BTreeMap<String, String>, String> {
    let mut feats = BTreeMap::new();
    if col == "_" {
        return Ok(feats);
    }
    for item in col.split('|') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("malformed feature {item:?}"))?;
        if k.is_empty() || v.is_empty() {
            return Err(format!("malformed feature {item:?}"));
        }
        if feats.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("duplicate feature {k:?}"));
        }
    }
    Ok(feats)
}

/// Serializes sentences back to CoNLL-U, one block per sentence.
pub fn write_conllu(treebank: &Treebank) -> String {
    let mut out = String::new();
    for s in treebank.sentences() {
        let _ = writeln!(out, "# sent_id = {}", s.sent_id);
        out.push_str(&s.to_conllu());
        out.push('\n');
    }
    out
}
