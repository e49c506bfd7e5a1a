//! Piecewise-linear data read from CSV: a header, then rows `s,v1,..,vk`
//! with `s` nondecreasing. A repeated `s` encodes a jump; the later row is
//! the value from the right.

use hypctl::sim::{Field, Signal};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    abscissa: Vec<f64>,
    /// `columns[j][r]`.
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str, expected_columns: usize, what: &str) -> Result<Self, String> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| format!("{what}: empty file"))?;
        let width = header.split(',').count();
        if width != expected_columns + 1 {
            return Err(format!(
                "{what}: header has {} value columns, expected {expected_columns}",
                width - 1
            ));
        }
        let mut abscissa = Vec::new();
        let mut columns = vec![Vec::new(); expected_columns];
        for (k, line) in lines {
            let cells: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let cells = cells.map_err(|e| format!("{what} line {}: {e}", k + 1))?;
            if cells.len() != width {
                return Err(format!("{what} line {}: {} fields, expected {width}", k + 1, cells.len()));
            }
            if cells.iter().any(|v| !v.is_finite()) {
                return Err(format!("{what} line {}: non-finite value", k + 1));
            }
            if abscissa.last().is_some_and(|&prev| cells[0] < prev) {
                return Err(format!("{what} line {}: first column must be nondecreasing", k + 1));
            }
            abscissa.push(cells[0]);
            for (j, v) in cells[1..].iter().enumerate() {
                columns[j].push(*v);
            }
        }
        if abscissa.is_empty() {
            return Err(format!("{what}: no data rows"));
        }
        Ok(Self { abscissa, columns })
    }

    /// Linear interpolation, constant outside the sampled range.
    pub fn value(&self, j: usize, s: f64) -> f64 {
        let a = &self.abscissa;
        let col = &self.columns[j];
        let r = a.partition_point(|&v| v <= s);
        if r == 0 {
            return col[0];
        }
        if r == a.len() {
            return col[r - 1];
        }
        let (s0, s1) = (a[r - 1], a[r]);
        let w = (s - s0) / (s1 - s0);
        col[r - 1] * (1.0 - w) + col[r] * w
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }
}

impl Field for Table {
    fn n(&self) -> usize {
        self.width()
    }

    fn eval(&self, i: usize, x: f64) -> f64 {
        self.value(i, x)
    }
}

impl Signal for Table {
    fn m(&self) -> usize {
        self.width()
    }

    fn eval(&self, j: usize, t: f64) -> f64 {
        self.value(j, t)
    }
}
