//! Factor of safety report and its JSON serialization.
//!
//! Floats are written with 17 significant digits so that a report parses
//! back to exactly the same values.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::RunConfig;

/// Sentinel used when the factor did not settle: the value reported in
/// `lower_bound` is then only a lower bound.
pub const UNBOUNDED: &str = "+inf-lower-bound";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fos {
    Value(f64),
    Sentinel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FosBracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FosReport {
    pub method: String,
    pub model: String,
    pub fos: Option<Fos>,
    pub lower_bound: Option<f64>,
    pub bracket: Option<FosBracket>,
    pub converged: bool,
    pub steps: usize,
    pub stop_reason: String,
    pub verdict: Option<String>,
    pub omega0: Option<f64>,
    pub warnings: Vec<String>,
    pub wall_time_s: Option<f64>,
    pub config_echo: RunConfig,
}

impl FosReport {
    /// Sets `fos`, switching to the sentinel when `converged` is false.
    pub fn set_fos(&mut self, value: f64, converged: bool) {
        self.converged = converged;
        if converged {
            self.fos = Some(Fos::Value(value));
            self.lower_bound = None;
        } else {
            self.fos = Some(Fos::Sentinel(UNBOUNDED.into()));
            self.lower_bound = value.is_finite().then_some(value);
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
        self.serialize(&mut ser).expect("report serializes");
        out.push(b'\n');
        String::from_utf8(out).expect("utf8 json")
    }
}

/// Pretty printer writing floats as `d.dddddddddddddddde±x`.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}
