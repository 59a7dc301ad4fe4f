//! FCIDUMP integral files, CSV tables and the fixed float formatting that
//! keeps every written report byte-reproducible.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::secondq::{permutations, IntegralSet};

/// Significant digits of every float written to a report.
pub const SIGNIFICANT_DIGITS: usize = 12;
/// Duplicate FCIDUMP entries may differ by at most this much.
pub const DUPLICATE_TOL: f64 = 1e-10;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits, with −0 folded
/// into +0.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Locale-independent text for a float: shortest representation of the
/// value rounded to 12 significant digits, in exponent form outside
/// `[1e-4, 1e15)`.
pub fn fmt_float(x: f64) -> String {
    let r = round_sig(x);
    if r.is_nan() {
        "nan".into()
    } else if r.is_infinite() {
        if r > 0.0 { "inf" } else { "-inf" }.into()
    } else if r == 0.0 || (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Rounds every number in a JSON tree to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(m) = serde_json::Number::from_f64(round_sig(f)) {
                        *n = m;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Io(format!("cannot serialize report: {e}")))?;
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// A header row plus string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Dimension { expected: self.header.len(), found: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    /// RFC 4180 text (CRLF line ends, quoting only where needed).
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Header fields of an FCIDUMP file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FcidumpHeader {
    pub norb: usize,
    pub nelec: usize,
    pub ms2: i32,
    pub orbsym: Option<Vec<u32>>,
    pub isym: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fcidump {
    pub header: FcidumpHeader,
    pub integrals: IntegralSet,
}

pub fn parse_fcidump(path: &Path) -> Result<Fcidump> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_fcidump_str(&text)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses FCIDUMP text: a `&FCI … &END` (or `/`) namelist header followed by
/// `value i j k l` lines with 1-based indices in chemists' order.
///
/// `0 0 0 0` is the core energy, `i j 0 0` a one-body element, and
/// `i 0 0 0` (orbital energies, as some writers emit) is skipped.
pub fn parse_fcidump_str(text: &str) -> Result<Fcidump> {
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| !l.trim().is_empty()).ok_or_else(|| parse_err(1, "empty file"))?;
    if !lines[first].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(parse_err(first + 1, "header must start with &FCI"));
    }
    // header tokens up to the terminator
    let mut fields: Vec<(String, Vec<String>, usize)> = Vec::new();
    let mut body_start = None;
    'header: for (idx, raw) in lines.iter().enumerate().skip(first) {
        let mut line = raw.trim().to_string();
        if idx == first {
            line = line[4..].to_string();
        }
        let mut done = false;
        for term in ["&END", "/"] {
            if let Some(pos) = line.to_ascii_uppercase().find(term) {
                line.truncate(pos);
                done = true;
            }
        }
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            if let Some((k, v)) = tok.split_once('=') {
                if k.is_empty() {
                    return Err(parse_err(idx + 1, format!("malformed header token '{tok}'")));
                }
                fields.push((k.to_ascii_uppercase(), Vec::new(), idx + 1));
                if !v.is_empty() {
                    fields.last_mut().unwrap().1.push(v.to_string());
                }
            } else {
                match fields.last_mut() {
                    Some(f) => f.1.push(tok.to_string()),
                    None => return Err(parse_err(idx + 1, format!("value '{tok}' before any key"))),
                }
            }
        }
        if done {
            body_start = Some(idx + 1);
            break 'header;
        }
    }
    let body_start = body_start.ok_or_else(|| parse_err(lines.len(), "header is not terminated by &END or /"))?;

    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = 0i32;
    let mut orbsym = None;
    let mut isym = None;
    for (key, vals, line) in &fields {
        let one = |what: &str| -> Result<&String> {
            match vals.as_slice() {
                [v] => Ok(v),
                _ => Err(parse_err(*line, format!("{what} takes exactly one value"))),
            }
        };
        let int = |s: &String| s.parse::<i64>().map_err(|_| parse_err(*line, format!("{key}: '{s}' is not an integer")));
        match key.as_str() {
            "NORB" => norb = Some(int(one("NORB")?)?),
            "NELEC" => nelec = Some(int(one("NELEC")?)?),
            "MS2" => ms2 = int(one("MS2")?)? as i32,
            "ISYM" => isym = Some(int(one("ISYM")?)?),
            "ORBSYM" => orbsym = Some((vals.iter().map(int).collect::<Result<Vec<_>>>()?, *line)),
            "IUHF" | "UHF" => {
                if int(one(key)?)? != 0 {
                    return Err(parse_err(*line, "unrestricted integrals are not supported"));
                }
            }
            _ => return Err(parse_err(*line, format!("unknown header key '{key}'"))),
        }
    }
    let norb = norb.ok_or_else(|| parse_err(first + 1, "header lacks NORB"))?;
    if !(1..=crate::fockspace::MAX_ORBITALS as i64).contains(&norb) {
        return Err(parse_err(first + 1, format!("NORB = {norb} is outside 1..=32")));
    }
    let norb = norb as usize;
    let nelec = nelec.ok_or_else(|| parse_err(first + 1, "header lacks NELEC"))?;
    if nelec < 0 || nelec as usize > 2 * norb {
        return Err(parse_err(first + 1, format!("NELEC = {nelec} does not fit {norb} orbitals")));
    }
    if (nelec - ms2 as i64).rem_euclid(2) != 0 || (ms2 as i64).abs() > nelec {
        return Err(parse_err(first + 1, format!("MS2 = {ms2} is inconsistent with NELEC = {nelec}")));
    }
    let orbsym = match orbsym {
        Some((v, line)) => {
            if v.len() != norb {
                return Err(parse_err(line, format!("ORBSYM lists {} entries for NORB = {norb}", v.len())));
            }
            if v.iter().any(|&s| !(1..=8).contains(&s)) {
                return Err(parse_err(line, "ORBSYM entries must be irrep labels 1..8"));
            }
            Some(v.into_iter().map(|s| s as u32).collect())
        }
        None => None,
    };
    if let Some(s) = isym {
        if !(1..=8).contains(&s) {
            return Err(parse_err(first + 1, format!("ISYM = {s} is not an irrep label 1..8")));
        }
    }

    let mut ints = IntegralSet::zeros(norb);
    // canonical key → (value, line)
    let mut seen: HashMap<(usize, usize, usize, usize), (f64, usize)> = HashMap::new();
    for (idx, raw) in lines.iter().enumerate().skip(body_start) {
        let lineno = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(parse_err(lineno, format!("expected 'value i j k l', found {} fields", toks.len())));
        }
        let value: f64 = toks[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| parse_err(lineno, format!("'{}' is not a number", toks[0])))?;
        if !value.is_finite() {
            return Err(parse_err(lineno, "integral value is not finite"));
        }
        let mut idxs = [0usize; 4];
        for (slot, t) in idxs.iter_mut().zip(&toks[1..]) {
            let v: usize = t.parse().map_err(|_| parse_err(lineno, format!("'{t}' is not an orbital index")))?;
            if v > norb {
                return Err(parse_err(lineno, format!("index {v} exceeds NORB = {norb}")));
            }
            *slot = v;
        }
        let [i, j, k, l] = idxs;
        let key = match (i, j, k, l) {
            (0, 0, 0, 0) => (0, 0, 0, 0),
            (_, 0, 0, 0) => continue,
            (i, j, 0, 0) if i > 0 && j > 0 => (i.max(j), i.min(j), 0, 0),
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                *permutations(i, j, k, l).iter().next().expect("non-empty")
            }
            _ => return Err(parse_err(lineno, format!("index pattern {i} {j} {k} {l} is not valid"))),
        };
        if let Some(&(prev, prev_line)) = seen.get(&key) {
            if (prev - value).abs() > DUPLICATE_TOL {
                return Err(Error::Integrity {
                    line: lineno,
                    message: format!("value {value} conflicts with {prev} given on line {prev_line}"),
                });
            }
            continue;
        }
        seen.insert(key, (value, lineno));
        match key {
            (0, 0, 0, 0) => ints.core_energy = value,
            (i, j, 0, 0) => ints.set_h(i - 1, j - 1, value),
            (i, j, k, l) => ints.set_g(i - 1, j - 1, k - 1, l - 1, value),
        }
    }
    let header = FcidumpHeader {
        norb,
        nelec: nelec as usize,
        ms2,
        orbsym,
        isym: isym.map(|s| s as u32),
    };
    Ok(Fcidump { header, integrals: ints })
}

/// FCIDUMP text listing each symmetry-distinct non-zero integral once, values
/// written with full round-trip precision.
pub fn write_fcidump(ints: &IntegralSet, nelec: usize, ms2: i32) -> String {
    let n = ints.norb();
    let mut out = String::new();
    let _ = writeln!(out, " &FCI NORB={n},NELEC={nelec},MS2={ms2},");
    let _ = writeln!(out, "  ORBSYM={}", vec!["1"; n].join(","));
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if (p * (p + 1) / 2 + q) < (r * (r + 1) / 2 + s) {
                        continue;
                    }
                    let v = ints.g(p, q, r, s);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:e} {} {} {} {}", p + 1, q + 1, r + 1, s + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = ints.h(p, q);
            if v != 0.0 {
                let _ = writeln!(out, "{v:e} {} {} 0 0", p + 1, q + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", ints.core_energy);
    out
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, contents).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::Io(format!("{}: {e}", path.display()))
    })
}
