//! Text inputs: match files, intrinsics and ground-truth poses.
//!
//! A match file starts with a header line and holds one correspondence per
//! line; blank lines and lines starting with `#` are ignored:
//!
//! ```text
//! twoview-matches 1 pixel
//! # x y x' y'
//! 412.5 300.25 398.0 310.75
//! ```

use std::fmt::Write as _;
use std::path::Path;

use twoview_core::geometry::{Mat3, Vec3};
use twoview_core::{BearingPair, RelativePose};

use crate::error::{read_file, CliError, CliResult};

pub const MATCHES_MAGIC: &str = "twoview-matches";
pub const MATCHES_VERSION: u32 = 1;
/// Absolute minimum number of matches any estimator accepts.
pub const MIN_MATCHES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Pixel,
    Normalized,
}

impl Convention {
    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Pixel => "pixel",
            Convention::Normalized => "normalized",
        }
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(path: &Path, line: usize, token: &str) -> CliResult<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(parse_error(path, line, format!("non-finite value `{token}`"))),
        Err(_) => Err(parse_error(path, line, format!("invalid number `{token}`"))),
    }
}

/// Parses the text of a match file.
pub fn parse_matches(path: &Path, text: &str, intrinsics: Option<&Mat3>) -> CliResult<Vec<BearingPair>> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| parse_error(path, 1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let convention = match fields.as_slice() {
        [magic, version, conv] if *magic == MATCHES_MAGIC => {
            if version.parse::<u32>().ok() != Some(MATCHES_VERSION) {
                return Err(parse_error(
                    path,
                    header_line,
                    format!("unsupported version `{version}`"),
                ));
            }
            match conv.to_ascii_lowercase().as_str() {
                "pixel" => Convention::Pixel,
                "normalized" => Convention::Normalized,
                other => return Err(parse_error(path, header_line, format!("unknown convention `{other}`"))),
            }
        }
        _ => {
            return Err(parse_error(
                path,
                header_line,
                format!("expected `{MATCHES_MAGIC} {MATCHES_VERSION} pixel|normalized`"),
            ))
        }
    };
    let k_inv = match convention {
        Convention::Normalized => Mat3::identity(),
        Convention::Pixel => {
            let k = intrinsics.ok_or(CliError::MissingIntrinsics)?;
            k.try_inverse()
                .ok_or_else(|| CliError::config("intrinsics", "matrix is singular"))?
        }
    };

    let mut pairs = Vec::new();
    for (line, record) in lines {
        let tokens: Vec<&str> = record.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(parse_error(
                path,
                line,
                format!("expected 4 values, found {}", tokens.len()),
            ));
        }
        let mut v = [0.0; 4];
        for (slot, token) in v.iter_mut().zip(&tokens) {
            *slot = parse_number(path, line, token)?;
        }
        let left = k_inv * Vec3::new(v[0], v[1], 1.0);
        let right = k_inv * Vec3::new(v[2], v[3], 1.0);
        if !(left.z > 0.0 && right.z > 0.0) {
            return Err(parse_error(path, line, "point maps behind the image plane"));
        }
        pairs.push(BearingPair::new(left, right, pairs.len()));
    }
    if pairs.len() < MIN_MATCHES {
        return Err(CliError::TooFewMatches {
            found: pairs.len(),
            required: MIN_MATCHES,
        });
    }
    Ok(pairs)
}

pub fn load_matches(path: &Path, intrinsics: Option<&Mat3>) -> CliResult<Vec<BearingPair>> {
    parse_matches(path, &read_file(path)?, intrinsics)
}

/// Serializes pairs as a match file. With `intrinsics`, coordinates are
/// written in pixels, otherwise as normalized image coordinates.
pub fn format_matches(pairs: &[BearingPair], intrinsics: Option<&Mat3>) -> String {
    let convention = if intrinsics.is_some() {
        Convention::Pixel
    } else {
        Convention::Normalized
    };
    let k = intrinsics.copied().unwrap_or_else(Mat3::identity);
    let mut out = format!("{MATCHES_MAGIC} {MATCHES_VERSION} {}\n", convention.as_str());
    for p in pairs {
        let l = k * (p.x / p.x.z);
        let r = k * (p.x_prime / p.x_prime.z);
        let _ = writeln!(out, "{} {} {} {}", l.x / l.z, l.y / l.z, r.x / r.z, r.y / r.z);
    }
    out
}

fn numbers(path: &Path, text: &str, expected: usize) -> CliResult<Vec<f64>> {
    let mut values = Vec::with_capacity(expected);
    let mut last_line = 1;
    for (line, content) in content_lines(text) {
        last_line = line;
        for token in content.split_whitespace() {
            if values.len() == expected {
                return Err(parse_error(path, line, format!("more than {expected} values")));
            }
            values.push(parse_number(path, line, token)?);
        }
    }
    if values.len() != expected {
        return Err(parse_error(
            path,
            last_line,
            format!("expected {expected} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

/// Nine row-major values of the calibration matrix.
pub fn parse_intrinsics(path: &Path, text: &str) -> CliResult<Mat3> {
    let v = numbers(path, text, 9)?;
    let k = Mat3::from_row_slice(&v);
    if k.try_inverse().is_none() {
        return Err(parse_error(path, 1, "intrinsics matrix is singular"));
    }
    Ok(k)
}

pub fn load_intrinsics(path: &Path) -> CliResult<Mat3> {
    parse_intrinsics(path, &read_file(path)?)
}

/// Nine row-major rotation values followed by three translation values.
pub fn parse_pose(path: &Path, text: &str) -> CliResult<RelativePose> {
    let v = numbers(path, text, 12)?;
    let r = Mat3::from_row_slice(&v[..9]);
    let t = Vec3::new(v[9], v[10], v[11]);
    if (r.transpose() * r - Mat3::identity()).norm() > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
        return Err(parse_error(path, 1, "rotation block is not a rotation matrix"));
    }
    if t.norm() == 0.0 {
        return Err(parse_error(path, 1, "translation is zero"));
    }
    Ok(RelativePose::from_matrix(&r, t))
}

pub fn load_pose(path: &Path) -> CliResult<RelativePose> {
    parse_pose(path, &read_file(path)?)
}

pub fn format_pose(pose: &RelativePose) -> String {
    let r = pose.r();
    let t = pose.t();
    let mut out = String::new();
    for i in 0..3 {
        let _ = writeln!(out, "{} {} {}", r[(i, 0)], r[(i, 1)], r[(i, 2)]);
    }
    let _ = writeln!(out, "{} {} {}", t.x, t.y, t.z);
    out
}
