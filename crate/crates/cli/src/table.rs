//! Named numeric columns written as CSV, JSON lines or an aligned text table.

use std::io::Write;

use fluorospec::Result;

pub struct Table {
    columns: Vec<(&'static str, Vec<f64>)>,
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        "null".to_string()
    }
}

impl Table {
    pub fn new(columns: Vec<(&'static str, Vec<f64>)>) -> Self {
        let rows = columns.first().map_or(0, |c| c.1.len());
        assert!(columns.iter().all(|c| c.1.len() == rows), "ragged table");
        Table { columns }
    }

    fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.1.len())
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> Result<()> {
        let names: Vec<&str> = self.columns.iter().map(|c| c.0).collect();
        writeln!(w, "{}", names.join(","))?;
        for r in 0..self.rows() {
            let cells: Vec<String> = self.columns.iter().map(|c| c.1[r].to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_json_lines(&self, w: &mut dyn Write) -> Result<()> {
        for r in 0..self.rows() {
            let fields: Vec<String> = self
                .columns
                .iter()
                .map(|c| format!("\"{}\":{}", c.0, json_number(c.1[r])))
                .collect();
            writeln!(w, "{{{}}}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn render_aligned(&self, out: &mut String) {
        for c in &self.columns {
            out.push_str(&format!("{:>12}", c.0));
        }
        out.push('\n');
        for r in 0..self.rows() {
            for c in &self.columns {
                out.push_str(&format!("{:>12.5}", c.1[r]));
            }
            out.push('\n');
        }
    }
}
