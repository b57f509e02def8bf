//! File formats: section JSON, reports, and full-precision float output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::cross_section::CrossSection;
use crate::error::Result;
use crate::sphere::field::coeffs_from_triples;

/// Scientific notation with 17 significant digits; `NaN`/`inf` spelled out.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Compact JSON with every float printed by [`format_f64`].
#[derive(Clone, Copy, Debug, Default)]
pub struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// On-disk form of a [`CrossSection`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionFile {
    pub bandlimit: usize,
    pub omega_coeffs: Vec<(usize, i64, f64)>,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

impl SectionFile {
    pub fn new(section: &CrossSection, meta: serde_json::Map<String, serde_json::Value>) -> Self {
        Self {
            bandlimit: section.bandlimit(),
            omega_coeffs: section.omega().iter().collect(),
            meta,
        }
    }

    pub fn section(&self) -> Result<CrossSection> {
        CrossSection::new(coeffs_from_triples(self.bandlimit, &self.omega_coeffs)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = to_json(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn read_section(path: &Path) -> Result<(CrossSection, SectionFile)> {
    let text = std::fs::read_to_string(path)?;
    let file = SectionFile::parse(&text)?;
    Ok((file.section()?, file))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
        assert_eq!(format_f64(-0.1), "-1.0000000000000001e-1");
        let x: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(x, 0.1);
        assert_eq!(to_json(&[0.5, 2.0]).unwrap(), "[5.0000000000000000e-1,2.0000000000000000e0]");
    }

    #[test]
    fn section_file_roundtrip_is_byte_identical() {
        let s = CrossSection::from_fn(6, |t, p| 1.0 + 0.1 * t.cos() * p.sin()).unwrap();
        let mut meta = serde_json::Map::new();
        meta.insert("kind".into(), "test".into());
        let text = SectionFile::new(&s, meta).to_json().unwrap();
        let again = SectionFile::parse(&text).unwrap();
        assert_eq!(again.to_json().unwrap(), text);
        assert_eq!(again.section().unwrap().omega(), s.omega());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = SectionFile::parse("{\"bandlimit\": 4,\n \"omega_coeffs\": [oops]}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_coefficients() {
        let f = SectionFile::parse(r#"{"bandlimit": 4, "omega_coeffs": [[5, 0, 1.0]]}"#).unwrap();
        assert!(f.section().is_err());
    }
}
