//! Plain-text formats: `key value` header lines, then whitespace-separated
//! numeric rows. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use jmatrix::forward::{potential_matrix, Basis, BoundState, JacobiHamiltonian, SpectralData};
use jmatrix::inverse::ScatteringInput;
use jmatrix::laguerre::{CombinedBasis, LagParams};
use jmatrix::oscillator::OscParams;

use crate::error::CliError;

/// Twelve significant digits in scientific notation; bitwise stable.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

pub fn csv(columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisKind {
    Osc,
    Lag,
}

impl BasisKind {
    fn name(self) -> &'static str {
        match self {
            BasisKind::Osc => "osc",
            BasisKind::Lag => "lag",
        }
    }

    fn scale_key(self) -> &'static str {
        match self {
            BasisKind::Osc => "rho",
            BasisKind::Lag => "bscale",
        }
    }
}

/// Basis identification shared by Hamiltonian and spectral files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisHeader {
    pub kind: BasisKind,
    pub ell: u32,
    pub scale: f64,
    pub n: usize,
}

impl BasisHeader {
    pub fn of(basis: &Basis, n: usize) -> Self {
        let kind = match basis {
            Basis::Oscillator(_) => BasisKind::Osc,
            Basis::Laguerre(_) => BasisKind::Lag,
        };
        BasisHeader { kind, ell: basis.ell(), scale: basis.scale(), n }
    }

    pub fn build(&self) -> Result<Basis, CliError> {
        match self.kind {
            BasisKind::Osc => Ok(Basis::Oscillator(OscParams::new(self.ell, self.scale).map_err(CliError::basis)?)),
            BasisKind::Lag => {
                let p = LagParams::new(self.ell, self.scale).map_err(CliError::basis)?;
                Ok(Basis::Laguerre(CombinedBasis::new(p, self.n).map_err(CliError::basis)?))
            }
        }
    }

    fn write(&self, out: &mut String) {
        let _ = writeln!(out, "basis {}", self.kind.name());
        let _ = writeln!(out, "ell {}", self.ell);
        let _ = writeln!(out, "{} {}", self.kind.scale_key(), num(self.scale));
        let _ = writeln!(out, "N {}", self.n);
    }
}

struct Row {
    line: usize,
    values: Vec<f64>,
}

struct Document {
    path: PathBuf,
    header: Vec<(usize, String, Vec<String>)>,
    rows: Vec<Row>,
}

impl Document {
    fn parse(path: &Path, text: &str) -> Result<Self, CliError> {
        let mut doc = Document { path: path.to_path_buf(), header: Vec::new(), rows: Vec::new() };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut tokens = t.split_whitespace();
            let first = tokens.next().unwrap_or_default();
            if first.parse::<f64>().is_ok() {
                let values = t
                    .split_whitespace()
                    .map(|s| s.parse::<f64>().map_err(|_| doc.error(line, format!("'{s}' is not a number"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(doc.error(line, "non-finite value".into()));
                }
                doc.rows.push(Row { line, values });
            } else {
                if !doc.rows.is_empty() {
                    return Err(doc.error(line, format!("header key '{first}' after the data rows")));
                }
                doc.header.push((line, first.to_string(), tokens.map(str::to_string).collect()));
            }
        }
        Ok(doc)
    }

    fn error(&self, line: usize, message: String) -> CliError {
        CliError::Parse { path: self.path.clone(), line, message }
    }

    fn end_error(&self, message: String) -> CliError {
        let line = self.rows.last().map(|r| r.line).or(self.header.last().map(|h| h.0)).unwrap_or(0);
        self.error(line, message)
    }

    fn entries<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a (usize, String, Vec<String>)> + 'a {
        self.header.iter().filter(move |h| h.1 == key)
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        let mut found = self.entries(key);
        let Some((line, _, args)) = found.next() else {
            return Ok(None);
        };
        if let Some((dup, ..)) = found.next() {
            return Err(self.error(*dup, format!("duplicate header key '{key}'")));
        }
        match args.as_slice() {
            [v] => v.parse().map(Some).map_err(|_| self.error(*line, format!("invalid value '{v}' for '{key}'"))),
            _ => Err(self.error(*line, format!("'{key}' takes exactly one value"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.value(key)?.ok_or_else(|| self.end_error(format!("missing header key '{key}'")))
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<(), CliError> {
        match self.header.iter().find(|h| !known.contains(&h.1.as_str())) {
            Some((line, key, _)) => Err(self.error(*line, format!("unknown header key '{key}'"))),
            None => Ok(()),
        }
    }

    fn basis_header(&self) -> Result<BasisHeader, CliError> {
        let kind: String = self.required("basis")?;
        let kind = BasisKind::from_str(&kind, false).map_err(|_| {
            let line = self.entries("basis").next().map(|h| h.0).unwrap_or(0);
            self.error(line, format!("unknown basis '{kind}' (expected osc or lag)"))
        })?;
        let other = match kind {
            BasisKind::Osc => BasisKind::Lag,
            BasisKind::Lag => BasisKind::Osc,
        };
        if let Some((line, ..)) = self.entries(other.scale_key()).next() {
            return Err(self.error(*line, format!("'{}' does not apply to basis {}", other.scale_key(), kind.name())));
        }
        let header = BasisHeader {
            kind,
            ell: self.required("ell")?,
            scale: self.required(kind.scale_key())?,
            n: self.required("N")?,
        };
        if header.n == 0 {
            return Err(self.end_error("N must be at least 1".into()));
        }
        if self.rows.len() != header.n {
            return Err(self.end_error(format!("expected {} data rows, found {}", header.n, self.rows.len())));
        }
        Ok(header)
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::create_dir_all(dir)
        .and_then(|()| std::fs::write(&path, text))
        .map_err(|source| CliError::Write { path: path.clone(), source })?;
    Ok(path)
}

// Hamiltonian file: basis header, then N rows `a_i b_i` (b_{N−1} = 0).

pub fn format_hamiltonian(h: &JacobiHamiltonian) -> String {
    let mut out = String::from("# Jacobi Hamiltonian: diagonal a, off-diagonal b to the next row\n");
    BasisHeader::of(&h.basis, h.order()).write(&mut out);
    out.push_str("# a b\n");
    for i in 0..h.order() {
        let b = h.b.get(i).copied().unwrap_or(0.0);
        let _ = writeln!(out, "{} {}", num(h.a[i]), num(b));
    }
    out
}

pub fn parse_hamiltonian(path: &Path, text: &str) -> Result<JacobiHamiltonian, CliError> {
    let doc = Document::parse(path, text)?;
    doc.reject_unknown(&["basis", "ell", "rho", "bscale", "N"])?;
    let header = doc.basis_header()?;
    let mut a = Vec::with_capacity(header.n);
    let mut b = Vec::with_capacity(header.n);
    for (i, row) in doc.rows.iter().enumerate() {
        let last = i + 1 == header.n;
        match (row.values.as_slice(), last) {
            ([ai, bi], false) => {
                a.push(*ai);
                b.push(*bi);
            }
            ([ai], true) | ([ai, 0.0], true) => a.push(*ai),
            ([_, _], true) => return Err(doc.error(row.line, "last row must have b = 0".into())),
            _ => return Err(doc.error(row.line, format!("expected 2 columns, found {}", row.values.len()))),
        }
    }
    if let Some(i) = b.iter().position(|&x| x == 0.0) {
        return Err(doc.error(doc.rows[i].line, "off-diagonal entry b must be nonzero".into()));
    }
    let basis = header.build()?;
    JacobiHamiltonian::new(a, b, basis).map_err(|e| doc.end_error(e.to_string()))
}

pub fn read_hamiltonian(path: &Path) -> Result<JacobiHamiltonian, CliError> {
    parse_hamiltonian(path, &read_text(path)?)
}

// Potential file: V = H − T as N rows of N entries.

pub fn format_potential(h: &JacobiHamiltonian) -> String {
    let v = potential_matrix(h);
    let mut out = String::new();
    match &h.basis {
        Basis::Oscillator(_) => out.push_str("# potential matrix V = H - T in units of hbar*omega\n"),
        Basis::Laguerre(_) => {
            out.push_str("# potential matrix V = H - T in units of hbar^2/(2 mu), rotated orthonormal basis\n")
        }
    }
    BasisHeader::of(&h.basis, h.order()).write(&mut out);
    for i in 0..v.nrows() {
        let cells: Vec<String> = (0..v.ncols()).map(|j| num(v[(i, j)])).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

// Spectral file: basis header, then N rows `λ_j Z_{N−1,j}`.

pub fn format_spectral(s: &SpectralData, header: &BasisHeader) -> String {
    let mut out = String::from("# spectral data: eigenvalue lambda, last eigenvector component Z\n");
    header.write(&mut out);
    out.push_str("# lambda Z\n");
    for (l, z) in s.lambda.iter().zip(&s.zlast) {
        let _ = writeln!(out, "{} {}", num(*l), num(*z));
    }
    out
}

pub fn parse_spectral(path: &Path, text: &str) -> Result<(SpectralData, BasisHeader), CliError> {
    let doc = Document::parse(path, text)?;
    doc.reject_unknown(&["basis", "ell", "rho", "bscale", "N"])?;
    let header = doc.basis_header()?;
    let mut s = SpectralData { lambda: Vec::new(), zlast: Vec::new() };
    for row in &doc.rows {
        let [l, z] = row.values.as_slice() else {
            return Err(doc.error(row.line, format!("expected 2 columns, found {}", row.values.len())));
        };
        if let Some(&prev) = s.lambda.last() {
            if !(*l > prev) {
                return Err(doc.error(row.line, "eigenvalues must be strictly ascending".into()));
            }
        }
        s.lambda.push(*l);
        s.zlast.push(*z);
    }
    Ok((s, header))
}

pub fn read_spectral(path: &Path) -> Result<(SpectralData, BasisHeader), CliError> {
    parse_spectral(path, &read_text(path)?)
}

// Dataset file: `ell`, `k0`, `bound_states n`, n lines `bound κ 𝓜`, then rows `k δ`.

pub fn format_dataset(input: &ScatteringInput) -> String {
    let mut out = String::from("# scattering data: phase shift delta(k) and bound states (kappa, M)\n");
    let _ = writeln!(out, "ell {}", input.ell);
    let _ = writeln!(out, "k0 {}", num(input.k0));
    let _ = writeln!(out, "bound_states {}", input.bound_states.len());
    for b in &input.bound_states {
        let _ = writeln!(out, "bound {} {}", num(b.kappa), num(b.norm_const));
    }
    out.push_str("# k delta\n");
    for (k, d) in &input.samples {
        let _ = writeln!(out, "{} {}", num(*k), num(*d));
    }
    out
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<ScatteringInput, CliError> {
    let doc = Document::parse(path, text)?;
    doc.reject_unknown(&["ell", "k0", "bound_states", "bound"])?;
    let ell: u32 = doc.required("ell")?;
    let k0: f64 = doc.required("k0")?;
    let count: usize = doc.required("bound_states")?;
    let mut bound = Vec::new();
    for (line, _, args) in doc.entries("bound") {
        let values: Vec<f64> = args.iter().filter_map(|s| s.parse().ok()).collect();
        let [kappa, norm_const] = values.as_slice() else {
            return Err(doc.error(*line, "'bound' takes two numbers: kappa and M".into()));
        };
        if args.len() != 2 {
            return Err(doc.error(*line, "'bound' takes two numbers: kappa and M".into()));
        }
        bound.push(BoundState { kappa: *kappa, norm_const: *norm_const });
    }
    if bound.len() != count {
        return Err(doc.end_error(format!("bound_states says {count} but {} 'bound' lines follow", bound.len())));
    }
    let mut samples = Vec::with_capacity(doc.rows.len());
    for row in &doc.rows {
        let [k, d] = row.values.as_slice() else {
            return Err(doc.error(row.line, format!("expected 2 columns, found {}", row.values.len())));
        };
        samples.push((*k, *d));
    }
    let input = ScatteringInput::new(ell, samples, bound).map_err(|e| doc.end_error(e.to_string()))?;
    if (input.k0 - k0).abs() > 1e-9 * k0.abs().max(1.0) {
        return Err(doc.end_error(format!("k0 = {k0} but the last sample is at k = {}", input.k0)));
    }
    Ok(input)
}

pub fn read_dataset(path: &Path) -> Result<ScatteringInput, CliError> {
    parse_dataset(path, &read_text(path)?)
}
