use std::fmt::Display;

use mws_core::Extended;

/// 17 significant digits; infinities as `+inf`/`-inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

pub fn ext(x: Extended<f64>) -> String {
    match x {
        Extended::Finite(v) => num(v),
        other => other.to_string(),
    }
}

/// CSV body with `# key=value` metadata lines on top.
pub struct Table {
    meta: Vec<String>,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { meta: Vec::new(), writer }
    }

    pub fn meta(&mut self, key: &str, value: impl Display) {
        self.meta.push(format!("# {key}={value}"));
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let body = String::from_utf8(self.writer.into_inner().expect("in-memory flush")).expect("utf-8 fields");
        let mut out = String::new();
        for m in &self.meta {
            out.push_str(m);
            out.push('\n');
        }
        out.push_str(&body);
        out
    }
}
