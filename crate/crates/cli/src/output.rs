//! Output with every float written to 17 significant digits.

use serde::Serialize;
use std::io::{self, Write};

/// Shortest form that still carries 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A radius that may be infinite; JSON has no infinity, so it is written as `"inf"`.
pub struct Radius(pub f64);

impl Serialize for Radius {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Writes `value` as one line of JSON.
pub fn json<T: Serialize>(w: &mut impl Write, value: &T) -> anyhow::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *w, Sig17);
    value.serialize(&mut ser)?;
    writeln!(w)?;
    Ok(())
}
