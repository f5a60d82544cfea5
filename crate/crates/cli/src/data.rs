//! Tabular dataset and site-list I/O.
//!
//! Datasets have one row per (site, replication) with header
//! `site,x1,..,xd,rep,<variables>`; empty, `NA` or `nan` cells are missing.
//! Site lists have header `site,x1,..,xd`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use coregion::{FieldSample, SpatialDesign};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sample: FieldSample,
    pub site_ids: Vec<String>,
    pub rep_ids: Vec<String>,
    pub variables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteList {
    pub ids: Vec<String>,
    pub design: SpatialDesign,
}

fn coordinate_columns(header: &csv::StringRecord) -> usize {
    header
        .iter()
        .skip(1)
        .enumerate()
        .take_while(|(c, name)| *name == format!("x{}", c + 1))
        .count()
}

fn parse_coord(cell: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .with_context(|| format!("line {line}: column `{column}`: cannot parse `{cell}` as a number"))?;
    if !v.is_finite() {
        bail!("line {line}: column `{column}`: coordinate must be finite");
    }
    Ok(v)
}

fn parse_value(cell: &str, line: u64, column: &str) -> Result<f64> {
    let t = cell.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    let v: f64 = t
        .parse()
        .with_context(|| format!("line {line}: column `{column}`: cannot parse `{cell}` as a number"))?;
    if !v.is_finite() {
        bail!("line {line}: column `{column}`: value must be finite or missing");
    }
    Ok(v)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().context("line 1: cannot read header")?.clone();
    if header.get(0) != Some("site") {
        bail!("line 1: first column must be `site`");
    }
    let d = coordinate_columns(&header);
    if d == 0 {
        bail!("line 1: expected coordinate columns `x1`, `x2`, ... after `site`");
    }
    if header.get(d + 1) != Some("rep") {
        bail!("line 1: expected column `rep` after the {d} coordinate columns");
    }
    let variables: Vec<String> = header.iter().skip(d + 2).map(str::to_string).collect();
    if variables.is_empty() {
        bail!("line 1: no variable columns");
    }
    let p = variables.len();

    let mut site_ids: Vec<String> = Vec::new();
    let mut site_index: HashMap<String, usize> = HashMap::new();
    let mut coords: Vec<Vec<f64>> = Vec::new();
    let mut rep_ids: Vec<String> = Vec::new();
    let mut rep_index: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<(usize, usize, Vec<f64>, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record.context("malformed row")?;
        let line = line_of(&record);
        if record.len() != header.len() {
            bail!("line {line}: expected {} columns, found {}", header.len(), record.len());
        }
        let id = record[0].to_string();
        let x: Vec<f64> = (0..d)
            .map(|c| parse_coord(&record[c + 1], line, &header[c + 1]))
            .collect::<Result<_>>()?;
        let k = match site_index.get(&id) {
            Some(&k) => {
                if coords[k] != x {
                    bail!("line {line}: site `{id}` has coordinates inconsistent with an earlier row");
                }
                k
            }
            None => {
                site_index.insert(id.clone(), site_ids.len());
                site_ids.push(id);
                coords.push(x);
                site_ids.len() - 1
            }
        };
        let rep = record[d + 1].to_string();
        let t = *rep_index.entry(rep.clone()).or_insert_with(|| {
            rep_ids.push(rep);
            rep_ids.len() - 1
        });
        let values: Vec<f64> = (0..p)
            .map(|i| parse_value(&record[d + 2 + i], line, &variables[i]))
            .collect::<Result<_>>()?;
        if values.iter().all(|v| v.is_nan()) {
            bail!("line {line}: every variable is missing");
        }
        cells.push((k, t, values, line));
    }
    if site_ids.is_empty() {
        bail!("dataset has no rows");
    }
    let n = site_ids.len();
    let mut reps = vec![vec![f64::NAN; n * p]; rep_ids.len()];
    let mut seen = vec![vec![false; n]; rep_ids.len()];
    for (k, t, values, line) in cells {
        if seen[t][k] {
            bail!("line {line}: duplicate row for site `{}` and rep `{}`", site_ids[k], rep_ids[t]);
        }
        seen[t][k] = true;
        reps[t][k * p..(k + 1) * p].copy_from_slice(&values);
    }
    let design = SpatialDesign::new(d, &coords)?;
    let sample = FieldSample::new(design, p, reps)?;
    Ok(Dataset {
        sample,
        site_ids,
        rep_ids,
        variables,
    })
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    let f = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_dataset(f).with_context(|| format!("in {}", path.display()))
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let s = &data.sample;
    let d = s.design().dim();
    let mut header = vec!["site".to_string()];
    header.extend((1..=d).map(|c| format!("x{c}")));
    header.push("rep".into());
    header.extend(data.variables.iter().cloned());
    w.write_record(&header)?;
    for t in 0..s.replications() {
        for k in 0..s.n() {
            let mut row = vec![data.site_ids[k].clone()];
            row.extend(s.design().site(k).iter().map(|v| fmt(*v)));
            row.push(data.rep_ids[t].clone());
            row.extend((0..s.p()).map(|i| fmt(s.value(t, k, i))));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_sites_file(path: &Path) -> Result<SiteList> {
    let f = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_sites(f).with_context(|| format!("in {}", path.display()))
}

pub fn read_sites<R: Read>(input: R) -> Result<SiteList> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().context("line 1: cannot read header")?.clone();
    if header.get(0) != Some("site") {
        bail!("line 1: first column must be `site`");
    }
    let d = coordinate_columns(&header);
    if d == 0 || d + 1 != header.len() {
        bail!("line 1: expected header `site,x1,..,xd`");
    }
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    for record in rdr.records() {
        let record = record.context("malformed row")?;
        let line = line_of(&record);
        if record.len() != header.len() {
            bail!("line {line}: expected {} columns, found {}", header.len(), record.len());
        }
        ids.push(record[0].to_string());
        coords.push(
            (0..d)
                .map(|c| parse_coord(&record[c + 1], line, &header[c + 1]))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    if ids.is_empty() {
        bail!("site list has no rows");
    }
    Ok(SiteList {
        ids,
        design: SpatialDesign::new(d, &coords)?,
    })
}

/// Writes through a temporary file in the same directory and
/// renames it into place, so failures never leave partial output.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot create a file in {}", dir.display()))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
