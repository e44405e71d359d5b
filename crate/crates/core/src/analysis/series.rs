use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Named scalar channels sampled on shared timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    names: Vec<String>,
    time: Vec<f64>,
    data: Vec<Vec<f64>>,
}

/// One trapezoid increment; shared by in-run accumulators and
/// [`cumulative_trapezoid`] so both produce identical bits.
#[inline]
pub fn trapezoid_step(t0: f64, t1: f64, y0: f64, y1: f64) -> f64 {
    0.5 * (t1 - t0) * (y0 + y1)
}

/// Running trapezoid integral of `y` over `t`, starting at 0.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for i in 0..y.len() {
        if i > 0 {
            acc += trapezoid_step(t[i - 1], t[i], y[i - 1], y[i]);
        }
        out.push(acc);
    }
    out
}

/// Trapezoid integral of `y` over the whole of `t`.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    cumulative_trapezoid(t, y).last().copied().unwrap_or(0.0)
}

/// Trapezoid integrals of `y` over `[t_i, t_i + width]` for every sample
/// time `t_i`, interpolating linearly at a window end that falls between
/// samples. With `clip`, windows running past the last sample are truncated
/// there; otherwise only windows that fit are returned.
pub fn window_integrals(t: &[f64], y: &[f64], width: f64, clip: bool) -> Vec<(f64, f64)> {
    let n = t.len().min(y.len());
    if n == 0 {
        return Vec::new();
    }
    let last = t[n - 1];
    let tol = 1e-9 * width.abs().max(f64::MIN_POSITIVE) + 1e-12 * last.abs();
    let mut out = Vec::new();
    for i in 0..n {
        let mut end = t[i] + width;
        if end > last + tol {
            if !clip {
                break;
            }
            end = last;
        }
        let mut acc = 0.0;
        let mut j = i;
        while j + 1 < n && t[j + 1] <= end + tol {
            acc += trapezoid_step(t[j], t[j + 1], y[j], y[j + 1]);
            j += 1;
        }
        if j + 1 < n && end > t[j] + tol {
            let f = (end - t[j]) / (t[j + 1] - t[j]);
            let y_end = y[j] + f * (y[j + 1] - y[j]);
            acc += trapezoid_step(t[j], end, y[j], y_end);
        }
        out.push((t[i], acc));
    }
    out
}

impl ErrorSeries {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            time: Vec::new(),
            data: vec![Vec::new(); names.len()],
        }
    }

    /// Appends one row. Timestamps must increase strictly.
    pub fn push(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.names.len() {
            return Err(Error::Shape(format!(
                "{} values for {} channels",
                values.len(),
                self.names.len()
            )));
        }
        if let Some(&last) = self.time.last() {
            if !(t > last) {
                return Err(Error::Precondition(format!(
                    "timestamp {t} does not follow {last}"
                )));
            }
        }
        self.time.push(t);
        for (col, &v) in self.data.iter_mut().zip(values) {
            col.push(v);
        }
        Ok(())
    }

    /// Adds a whole column of the same length as the timestamps.
    pub fn add_channel(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.time.len() {
            return Err(Error::Shape(format!(
                "channel {name} has {} samples, series has {}",
                values.len(),
                self.time.len()
            )));
        }
        if self.has_channel(name) {
            return Err(Error::Precondition(format!("duplicate channel {name}")));
        }
        self.names.push(name.to_string());
        self.data.push(values);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    /// Rows with `t >= t0`.
    pub fn since(&self, t0: f64) -> Self {
        let start = self.time.partition_point(|&t| t < t0);
        Self {
            names: self.names.clone(),
            time: self.time[start..].to_vec(),
            data: self.data.iter().map(|c| c[start..].to_vec()).collect(),
        }
    }

    /// Writes a header row `t,<names>` and one row per timestamp with 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for i in 0..self.time.len() {
            write!(w, "{:.16e}", self.time[i])?;
            for col in &self.data {
                write!(w, ",{:.16e}", col[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    /// Parses the format written by [`ErrorSeries::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::Csv(e.to_string()))?,
            None => return Err(Error::Csv("empty file".into())),
        };
        let mut cols = header.trim_end_matches('\r').split(',');
        if cols.next() != Some("t") {
            return Err(Error::Csv("first column must be t".into()));
        }
        let names: Vec<&str> = cols.collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || names[..i].contains(n) {
                return Err(Error::Csv(format!("bad or duplicate channel name {n:?}")));
            }
        }
        let mut series = Self::new(&names);
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Csv(e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::Csv(format!("row {}: bad number {v:?}", row + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != names.len() + 1 {
                return Err(Error::Csv(format!(
                    "row {} has {} fields, header has {}",
                    row + 2,
                    values.len(),
                    names.len() + 1
                )));
            }
            series
                .push(values[0], &values[1..])
                .map_err(|e| Error::Csv(format!("row {}: {e}", row + 2)))?;
        }
        if series.is_empty() {
            return Err(Error::Csv("no data rows".into()));
        }
        Ok(series)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = ErrorSeries::new(&["a", "b"]);
        s.push(0.0, &[1.0 / 3.0, -2e-300]).unwrap();
        s.push(0.1, &[std::f64::consts::PI, 7.0]).unwrap();
        let text = s.to_csv_string();
        assert!(text.starts_with("t,a,b\n"));
        let back = ErrorSeries::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        for bad in [
            "",
            "x,a\n0,1\n",
            "t,a\n0,1,2\n",
            "t,a\n0,zz\n",
            "t,a\n",
            "t,a\n1,0\n0,0\n",
            "t,a\n0,NaN\n",
            "t,a\n0,1e400\n",
        ] {
            assert!(
                matches!(ErrorSeries::read_csv(bad.as_bytes()), Err(Error::Csv(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn trapezoid_of_linear_function_is_exact() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((trapezoid(&t, &y) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn windows_of_constant_integrand() {
        let t: Vec<f64> = (0..41).map(|i| i as f64 * 0.1).collect();
        let y = vec![3.0; t.len()];
        let w = window_integrals(&t, &y, 1.0, false);
        assert_eq!(w.len(), 31);
        assert!(w.iter().all(|&(_, v)| (v - 3.0).abs() < 1e-12));
        let half = window_integrals(&t, &y, 0.25, false);
        assert!(half.iter().all(|&(_, v)| (v - 0.75).abs() < 1e-12));
        let clipped = window_integrals(&t, &y, 1.0, true);
        assert_eq!(clipped.len(), 41);
        assert!(clipped.last().unwrap().1.abs() < 1e-12);
    }

    #[test]
    fn timestamps_must_increase() {
        let mut s = ErrorSeries::new(&["a"]);
        s.push(1.0, &[0.0]).unwrap();
        assert!(s.push(1.0, &[0.0]).is_err());
        assert!(s.push(2.0, &[0.0, 1.0]).is_err());
        assert!(matches!(s.channel("b"), Err(Error::MissingChannel(_))));
    }
}
