//! Text serialization of banded forms and Beltrami fields.
//!
//! One coefficient per line:
//!
//! ```text
//! # form d=<d> band=<K> p=<p> q=<q>
//! k_1 … k_{2d} | I | J | re im
//! ```
//!
//! `I` and `J` are 1-based increasing index lists (empty for degree zero);
//! for Beltrami fields the header reads `# beltrami …` and `I`/`J` are the
//! single vector and covector indices. Floats carry 17 significant digits.

use std::sync::Arc;

use super::beltrami::BeltramiDifferential;
use super::form::FourierForm;
use super::geometry::TorusGeometry;
use super::multi_index::format_mask;
use crate::error::{Error, Result};
use crate::C64;

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_form(f: &FourierForm) -> String {
    let geometry = f.geometry();
    let d = geometry.dim();
    let (p, q) = f.bidegree();
    let mut out = format!("# form d={} band={} p={} q={}\n", d, f.band(), p, q);
    let tab_p = geometry.mask_table(p);
    let tab_q = geometry.mask_table(q);
    let mut k = vec![0i64; 2 * d];
    for mode in 0..geometry.mode_count(f.band()) {
        geometry.mode_at(f.band(), mode, &mut k);
        for (ip, &mi) in tab_p.masks.iter().enumerate() {
            for (jp, &mj) in tab_q.masks.iter().enumerate() {
                let c = f.coeff(mode, ip, jp);
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let ks: Vec<String> = k.iter().map(|x| x.to_string()).collect();
                out.push_str(&format!(
                    "{} | {} | {} | {} {}\n",
                    ks.join(" "),
                    format_mask(mi),
                    format_mask(mj),
                    fmt_float(c.re),
                    fmt_float(c.im)
                ));
            }
        }
    }
    out
}

pub fn write_beltrami(phi: &BeltramiDifferential) -> String {
    let geometry = phi.geometry();
    let d = geometry.dim();
    let mut out = format!("# beltrami d={} band={}\n", d, phi.band());
    for (k, i, j, c) in phi.nonzero() {
        let ks: Vec<String> = k.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!(
            "{} | {} | {} | {} {}\n",
            ks.join(" "),
            i + 1,
            j + 1,
            fmt_float(c.re),
            fmt_float(c.im)
        ));
    }
    out
}

struct Header {
    kind: String,
    d: usize,
    band: u32,
    p: usize,
    q: usize,
}

fn parse_header(line: &str) -> Result<Header> {
    let body = line.trim_start_matches('#').trim();
    let mut parts = body.split_whitespace();
    let kind = parts.next().unwrap_or_default().to_string();
    let mut d = None;
    let mut band = None;
    let mut p = 0usize;
    let mut q = 0usize;
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field `{part}`")))?;
        let n: i64 = value.parse().map_err(|_| Error::Parse(format!("bad number `{value}`")))?;
        match key {
            "d" => d = Some(n as usize),
            "band" => band = Some(n as u32),
            "p" => p = n as usize,
            "q" => q = n as usize,
            _ => return Err(Error::Parse(format!("unknown header field `{key}`"))),
        }
    }
    Ok(Header {
        kind,
        d: d.ok_or_else(|| Error::Parse("header lacks d".into()))?,
        band: band.ok_or_else(|| Error::Parse("header lacks band".into()))?,
        p,
        q,
    })
}

fn parse_indices(field: &str) -> Result<u32> {
    let mut mask = 0u32;
    for token in field.split_whitespace() {
        let i: usize = token.parse().map_err(|_| Error::Parse(format!("bad index `{token}`")))?;
        if i == 0 || i > 32 {
            return Err(Error::Parse(format!("index {i} out of range")));
        }
        mask |= 1 << (i - 1);
    }
    Ok(mask)
}

struct Line {
    k: Vec<i64>,
    mask_i: u32,
    mask_j: u32,
    value: C64,
}

fn parse_line(line: &str, d: usize) -> Result<Line> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 4 {
        return Err(Error::Parse(format!("expected 4 fields, got {}: `{line}`", fields.len())));
    }
    let k: Vec<i64> = fields[0]
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad mode `{t}`"))))
        .collect::<Result<_>>()?;
    if k.len() != 2 * d {
        return Err(Error::Parse(format!("mode has {} components, expected {}", k.len(), 2 * d)));
    }
    let mask_i = parse_indices(fields[1])?;
    let mask_j = parse_indices(fields[2])?;
    let values: Vec<f64> = fields[3]
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad float `{t}`"))))
        .collect::<Result<_>>()?;
    if values.len() != 2 {
        return Err(Error::Parse("coefficient needs `re im`".into()));
    }
    Ok(Line { k, mask_i, mask_j, value: C64::new(values[0], values[1]) })
}

pub fn read_form(text: &str, geometry: &Arc<TorusGeometry>) -> Result<FourierForm> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    if !header_line.trim_start().starts_with('#') {
        return Err(Error::Parse("missing header line".into()));
    }
    let header = parse_header(header_line)?;
    if header.kind != "form" {
        return Err(Error::Parse(format!("expected form, found `{}`", header.kind)));
    }
    if header.d != geometry.dim() {
        return Err(Error::Parse(format!("dimension {} vs geometry {}", header.d, geometry.dim())));
    }
    let mut f = FourierForm::zero(Arc::clone(geometry), header.band, header.p, header.q)?;
    for raw in lines {
        let line = parse_line(raw, header.d)?;
        if line.mask_i.count_ones() as usize != header.p || line.mask_j.count_ones() as usize != header.q
        {
            return Err(Error::Parse(format!("index degree mismatch in `{raw}`")));
        }
        f.set_coeff_at(&line.k, line.mask_i, line.mask_j, line.value)?;
    }
    Ok(f)
}

pub fn read_beltrami(text: &str, geometry: &Arc<TorusGeometry>) -> Result<BeltramiDifferential> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    if !header_line.trim_start().starts_with('#') {
        return Err(Error::Parse("missing header line".into()));
    }
    let header = parse_header(header_line)?;
    if header.kind != "beltrami" {
        return Err(Error::Parse(format!("expected beltrami, found `{}`", header.kind)));
    }
    if header.d != geometry.dim() {
        return Err(Error::Parse(format!("dimension {} vs geometry {}", header.d, geometry.dim())));
    }
    let mut phi = BeltramiDifferential::zero(Arc::clone(geometry), header.band);
    for raw in lines {
        let line = parse_line(raw, header.d)?;
        if line.mask_i.count_ones() != 1 || line.mask_j.count_ones() != 1 {
            return Err(Error::Parse(format!("Beltrami line needs single indices: `{raw}`")));
        }
        let i = line.mask_i.trailing_zeros() as usize;
        let j = line.mask_j.trailing_zeros() as usize;
        phi.set_coeff_at(&line.k, i, j, line.value)?;
    }
    Ok(phi)
}
