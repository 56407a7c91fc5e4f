//! OEIS b-files: parsing, an opt-in cached fetch, and checks of the known
//! correspondences between this family and OEIS entries.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{a_closed, h_closed, FamilyParams};
use crate::verify::{CheckReport, Counterexample};

#[derive(Debug, Error)]
pub enum OeisError {
    #[error("invalid OEIS id {0:?} (expected 'A' followed by six digits)")]
    InvalidId(String),
    #[error("b-file is not valid UTF-8")]
    InvalidUtf8,
    #[error("line {line}: malformed b-file line {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: expected index {expected}, found {found}")]
    NonContiguousIndex { line: usize, expected: BigInt, found: BigInt },
    #[error("b-file is for {found}, correspondence expects {expected}")]
    IdMismatch { expected: String, found: String },
    #[error("no index of {id} lines up with n in 1..={n_max}")]
    EmptyOverlap { id: String, n_max: u64 },
    #[error("{0} is not cached and network access is disabled")]
    NetworkDisabled(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("HTTP status {0}")]
    HttpStatus(u16),
    #[error(transparent)]
    Family(#[from] crate::arith::ArithError),
    #[error("could not write cache entry {path}: {source}")]
    CacheWrite { path: PathBuf, source: std::io::Error },
}

/// Checks the `A` + six digits shape of an OEIS id.
pub fn validate_id(id: &str) -> Result<(), OeisError> {
    let ok = id.len() == 7
        && id.starts_with('A')
        && id[1..].bytes().all(|b| b.is_ascii_digit());
    if ok {
        Ok(())
    } else {
        Err(OeisError::InvalidId(id.to_string()))
    }
}

/// A parsed b-file with strictly consecutive indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BFile {
    id: String,
    entries: Vec<(BigInt, BigInt)>,
}

impl BFile {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn entries(&self) -> &[(BigInt, BigInt)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First index in the file (the sequence's offset as the file declares it).
    pub fn offset(&self) -> Option<&BigInt> {
        self.entries.first().map(|(i, _)| i)
    }

    /// Value at `index`, if the file covers it.
    pub fn value_at(&self, index: i64) -> Option<&BigInt> {
        let first = self.offset()?.to_i64()?;
        let pos = index.checked_sub(first)?;
        if pos < 0 {
            return None;
        }
        self.entries.get(pos as usize).map(|(_, v)| v)
    }

    /// Canonical `index value` text, one pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in &self.entries {
            writeln!(out, "{i} {v}").unwrap();
        }
        out
    }
}

/// Parses b-file text: blank lines and `#` comments are skipped, every other
/// line is `index value` separated by whitespace.
pub fn parse_bfile(id: &str, text: &[u8]) -> Result<BFile, OeisError> {
    validate_id(id)?;
    let text = std::str::from_utf8(text).map_err(|_| OeisError::InvalidUtf8)?;
    let mut entries: Vec<(BigInt, BigInt)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = || OeisError::MalformedLine { line: lineno + 1, content: raw.to_string() };
        let mut fields = line.split_whitespace();
        let (Some(i), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed());
        };
        let index: BigInt = i.parse().map_err(|_| malformed())?;
        let value: BigInt = v.parse().map_err(|_| malformed())?;
        if let Some((prev, _)) = entries.last() {
            let expected = prev + 1;
            if index != expected {
                return Err(OeisError::NonContiguousIndex { line: lineno + 1, expected, found: index });
            }
        }
        entries.push((index, value));
    }
    Ok(BFile { id: id.to_string(), entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `a(n)`.
    A,
    /// `h(n) = n − a(n)`.
    H,
    /// `A_m(n) = a(1) + … + a(n)`.
    PartialSum,
}

impl Quantity {
    pub fn parse(s: &str) -> Option<Quantity> {
        match s {
            "a" => Some(Quantity::A),
            "h" => Some(Quantity::H),
            "sums" | "partial_sum" => Some(Quantity::PartialSum),
            _ => None,
        }
    }
}

/// `OEIS(n + index_shift) = quantity(n) + value_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transform {
    pub index_shift: i64,
    pub value_shift: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correspondence {
    pub oeis_id: String,
    pub m: u32,
    pub quantity: Quantity,
    pub transform: Transform,
}

impl Correspondence {
    fn row(id: &str, m: u32, quantity: Quantity, index_shift: i64, value_shift: i64) -> Self {
        Self {
            oeis_id: id.to_string(),
            m,
            quantity,
            transform: Transform { index_shift, value_shift },
        }
    }
}

/// The registered rows. Each `(n − 1)` in a row's description becomes
/// `index_shift = −1`; "`a(n) − 1` is …" becomes `value_shift = −1`.
pub fn registry() -> Vec<Correspondence> {
    use Quantity::*;
    vec![
        Correspondence::row("A122797", 1, A, 0, 0),
        Correspondence::row("A003056", 1, H, -1, 0),
        Correspondence::row("A028391", 2, A, -1, -1),
        Correspondence::row("A000196", 2, H, -1, 0),
        Correspondence::row("A180446", 3, A, -1, -1),
        Correspondence::row("A180447", 3, H, -1, 0),
        Correspondence::row("A351846", 4, H, -1, 0),
        Correspondence::row("A196126", 2, PartialSum, 0, 0),
    ]
}

pub fn lookup(id: &str) -> Option<Correspondence> {
    registry().into_iter().find(|c| c.oeis_id == id)
}

/// Compares a b-file against `corr` at every `n ≤ n_max` whose shifted index
/// the file covers. The report's `checked` count is the overlap size.
pub fn check_correspondence(
    corr: &Correspondence,
    bfile: &BFile,
    n_max: u64,
) -> Result<CheckReport, OeisError> {
    if bfile.id() != corr.oeis_id {
        return Err(OeisError::IdMismatch {
            expected: corr.oeis_id.clone(),
            found: bfile.id().to_string(),
        });
    }
    let params = FamilyParams::new(corr.m)?;
    let t = corr.transform;
    let mut checked = 0u64;
    let mut first = None;
    let mut running = 0i128;
    let (mut lo, mut hi) = (0i64, 0i64);
    for n in 1..=n_max {
        let a = a_closed(params, n).expect("n >= 1") as i128;
        running += a;
        let q = match corr.quantity {
            Quantity::A => a,
            Quantity::H => h_closed(params, n).expect("n >= 1") as i128,
            Quantity::PartialSum => running,
        };
        let Some(idx) = (n as i64).checked_add(t.index_shift) else { continue };
        let Some(oeis) = bfile.value_at(idx) else { continue };
        if checked == 0 {
            lo = n as i64;
        }
        hi = n as i64;
        checked += 1;
        let want = q + t.value_shift as i128;
        if *oeis != BigInt::from(want) {
            first = Some(Counterexample {
                n: n as i64,
                expected: oeis.to_i128().unwrap_or(i128::MAX),
                actual: want,
                context: format!("{}({idx}) = {oeis}", corr.oeis_id),
            });
            break;
        }
    }
    if checked == 0 {
        return Err(OeisError::EmptyOverlap { id: corr.oeis_id.clone(), n_max });
    }
    let mut counts = std::collections::BTreeMap::new();
    counts.insert("checked".to_string(), checked);
    Ok(CheckReport::new(format!("oeis[{}]", corr.oeis_id), corr.m, (lo, hi), first).with_counts(counts))
}

pub const DEFAULT_BASE_URL: &str = "https://oeis.org";
/// Overrides [`DEFAULT_BASE_URL`].
pub const BASE_URL_ENV: &str = "NESTREC_OEIS_BASE_URL";

/// Where b-files come from and where they are cached.
#[derive(Debug, Clone)]
pub struct FetchConfig {
    /// URL template with `{id}` (e.g. `A028391`) and `{digits}` (`028391`).
    pub template: String,
    pub cache_dir: PathBuf,
    pub allow_network: bool,
}

impl FetchConfig {
    pub fn new(base_url: &str, cache_dir: impl Into<PathBuf>, allow_network: bool) -> Self {
        Self {
            template: format!("{}/{{id}}/b{{digits}}.txt", base_url.trim_end_matches('/')),
            cache_dir: cache_dir.into(),
            allow_network,
        }
    }

    /// Base URL from [`BASE_URL_ENV`] when set.
    pub fn from_env(cache_dir: impl Into<PathBuf>, allow_network: bool) -> Self {
        let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Self::new(&base, cache_dir, allow_network)
    }

    pub fn url_for(&self, id: &str) -> String {
        self.template.replace("{id}", id).replace("{digits}", &id[1..])
    }

    pub fn cache_path(&self, id: &str) -> PathBuf {
        self.cache_dir.join(format!("b{}.txt", &id[1..]))
    }
}

/// `$XDG_CACHE_HOME/nestrec/oeis`, else `$HOME/.cache/nestrec/oeis`.
pub fn default_cache_dir() -> PathBuf {
    let base = std::env::var_os("XDG_CACHE_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| Path::new(&h).join(".cache")))
        .unwrap_or_else(|| PathBuf::from(".cache"));
    base.join("nestrec").join("oeis")
}

/// Raw b-file bytes for `id`, from the cache when present, otherwise over
/// HTTP (if allowed) and then cached.
pub fn fetch_bfile(id: &str, cfg: &FetchConfig) -> Result<Vec<u8>, OeisError> {
    validate_id(id)?;
    let path = cfg.cache_path(id);
    if let Ok(bytes) = std::fs::read(&path) {
        return Ok(bytes);
    }
    if !cfg.allow_network {
        return Err(OeisError::NetworkDisabled(id.to_string()));
    }
    let bytes = http_get(&cfg.url_for(id))?;
    write_cache(&path, &bytes)?;
    Ok(bytes)
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so concurrent fetchers of one id never observe a partial file.
fn write_cache(path: &Path, bytes: &[u8]) -> Result<(), OeisError> {
    let wrap = |source| OeisError::CacheWrite { path: path.to_path_buf(), source };
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(wrap)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

#[cfg(feature = "fetch")]
fn http_get(url: &str) -> Result<Vec<u8>, OeisError> {
    let resp = reqwest::blocking::get(url).map_err(|e| OeisError::Network(e.to_string()))?;
    let status = resp.status();
    if !status.is_success() {
        return Err(OeisError::HttpStatus(status.as_u16()));
    }
    resp.bytes().map(|b| b.to_vec()).map_err(|e| OeisError::Network(e.to_string()))
}

#[cfg(not(feature = "fetch"))]
fn http_get(_url: &str) -> Result<Vec<u8>, OeisError> {
    Err(OeisError::Network("built without the `fetch` feature".into()))
}
